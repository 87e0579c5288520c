use std::io::Write;

use phasespace::algebra::{d_omega_pow, gmb, parse, AlgebraError, BracketSpec, PhaseExpr};
use phasespace::dynamics::{
    ehrenfest_residual, evolve as run_evolution, DynamicsError, EvolutionSpec, PhaseGrid, Schedule,
    StepRule,
};
use phasespace::field::{excitation_curves, DriveSpec, FieldError};
use phasespace::quad::QuadError;
use phasespace::scattering::{
    cross_section, Interaction, ScatterConfig, ScatterError, TrajectoryOptions,
};
use phasespace::spectral::{energy, g_h, t_h_or_zero, t_l, zeeman_support, SpectralError};
use phasespace::states::{
    expect, find_sigma_gnd, most_probable_radius, positivity_scan, CellSign, Energy, GaussianState,
    StatesError,
};
use phasespace::verify;
use serde_json::json;

use crate::emit::{Cell, RunContext};
use crate::params::*;
use crate::Failure;

impl From<QuadError> for Failure {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::NonConvergence { .. } => Failure::numeric(e),
            QuadError::InvalidInterval(..) => Failure::domain(e),
        }
    }
}

impl From<StatesError> for Failure {
    fn from(e: StatesError) -> Self {
        match e {
            StatesError::InvalidState(_) => Failure::domain(e),
            StatesError::Quadrature(q) => q.into(),
            StatesError::NoSignChange { .. } => Failure::numeric(e),
        }
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Unstable { .. } | DynamicsError::BoundaryLeak { .. } => {
                Failure::numeric(e)
            }
            _ => Failure::domain(e),
        }
    }
}

impl From<FieldError> for Failure {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::Quadrature(q) => q.into(),
            FieldError::SymbolicMismatch(_) => Failure::numeric(e),
            _ => Failure::domain(e),
        }
    }
}

impl From<ScatterError> for Failure {
    fn from(e: ScatterError) -> Self {
        match e {
            ScatterError::StepCollapse { .. } | ScatterError::Recursion { .. } => {
                Failure::numeric(e)
            }
            _ => Failure::domain(e),
        }
    }
}

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        Failure::domain(e)
    }
}

impl From<AlgebraError> for Failure {
    fn from(e: AlgebraError) -> Self {
        Failure::domain(e)
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print(v: &serde_json::Value) {
    say(&serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn operand(src: &str, flag: &str) -> Result<PhaseExpr, Failure> {
    if src.trim().is_empty() {
        return Err(Failure::domain(format!(
            "missing operand: pass --{flag} or set `{flag}` in the [bracket] table"
        )));
    }
    parse(src).map_err(|e| Failure::domain(format!("cannot parse --{flag} \"{src}\": {e}")))
}

pub fn bracket(p: BracketParams, ctx: &mut RunContext) -> Result<(), Failure> {
    let f = operand(&p.f, "f")?;
    let g = operand(&p.g, "g")?;
    let (value, complete) = if p.order > 0 {
        (d_omega_pow(&f, &g, p.order), true)
    } else {
        let spec = match p.spec.as_str() {
            "poisson" => BracketSpec::poisson(),
            "moyal" => BracketSpec::moyal(p.terms as usize, operand(&p.hbar, "hbar")?),
            "symbolic" => BracketSpec::symbolic(p.terms as usize),
            other => {
                return Err(Failure::domain(format!(
                    "unknown bracket spec `{other}` (poisson, moyal, symbolic)"
                )))
            }
        };
        let v = gmb(&f, &g, &spec);
        (v.value, v.complete)
    };
    say(&value.to_string());
    ctx.json(
        "bracket.json",
        &json!({"f": f.to_string(), "g": g.to_string(), "order": p.order, "text": value.to_string(),
                "complete": complete, "result": value.to_json()}),
    )?;
    ctx.manifest(&p, None)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn spectra(p: SpectraParams, ctx: &mut RunContext) -> Result<(), Failure> {
    if p.samples == 0 {
        return Err(Failure::domain("samples must be positive"));
    }
    let scale = match p.units.as_str() {
        "natural" => 1.0,
        "scaled" => 2.0,
        other => {
            return Err(Failure::domain(format!(
                "unknown units `{other}` (natural, scaled)"
            )))
        }
    };
    match p.family.as_str() {
        "energy" => {
            let n = if p.n == 0 { 8 } else { p.n as u64 };
            let lo = p.x_min.unwrap_or(-0.75 * scale);
            let hi = p.x_max.unwrap_or(0.0);
            let mut header = vec!["x".to_string()];
            header.extend((1..=n).map(|k| format!("T{k}")));
            let rows = linspace(lo, hi, p.samples).into_iter().map(|x| {
                let mut r: Vec<Cell> = vec![x.into()];
                r.extend((1..=n).map(|k| Cell::Num(t_h_or_zero(k, x / scale))));
                r
            });
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            ctx.csv("spectra_energy.csv", &h, rows)?;
        }
        "angular" => {
            let n = if p.n == 0 { 3 } else { p.n as i64 };
            let lo = p.x_min.unwrap_or(-(n as f64) - 1.0);
            let hi = p.x_max.unwrap_or(n as f64 + 1.0);
            let mut header = vec!["x".to_string()];
            header.extend((-n..=n).map(|m| format!("T{m}")));
            let rows = linspace(lo, hi, p.samples).into_iter().map(|x| {
                let mut r: Vec<Cell> = vec![x.into()];
                r.extend((-n..=n).map(|m| Cell::Num(t_l(m, x))));
                r
            });
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            ctx.csv("spectra_angular.csv", &h, rows)?;
        }
        "gh" => {
            let n = if p.n == 0 { 2 } else { p.n as u64 };
            let q_max = p.q_max.unwrap_or(6.0);
            let p_max = p.p_max.unwrap_or(3.0);
            let qs = linspace(q_max / p.samples as f64, q_max, p.samples);
            let ps = linspace(0.0, p_max, p.samples);
            let mut header = vec!["abs_q".to_string(), "abs_p".to_string()];
            header.extend((1..=n).map(|k| format!("g_E{k}")));
            let mut rows = Vec::with_capacity(qs.len() * ps.len());
            for &q in &qs {
                for &pm in &ps {
                    let point = [q, 0.0, 0.0, pm, 0.0, 0.0];
                    let mut r: Vec<Cell> = vec![q.into(), pm.into()];
                    for k in 1..=n {
                        r.push(g_h(k, &point)?.into());
                    }
                    rows.push(r);
                }
            }
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            ctx.csv("spectra_gh.csv", &h, rows)?;
        }
        other => {
            return Err(Failure::domain(format!(
                "unknown family `{other}` (energy, angular, gh)"
            )))
        }
    }
    if p.family == "energy" {
        let levels: Vec<f64> = (1..=8).map(|k| scale * energy(k)).collect();
        print(&json!({"family": p.family, "samples": p.samples, "levels": levels}));
    } else {
        print(&json!({"family": p.family, "samples": p.samples}));
    }
    ctx.manifest(&p, None)
}

pub fn scan(p: ScanParams, ctx: &mut RunContext) -> Result<(), Failure> {
    if p.sigma_q.is_empty() || p.sigma_p.is_empty() {
        return Err(Failure::domain(
            "sigma_q and sigma_p need at least one value each",
        ));
    }
    let cells = positivity_scan(&p.sigma_q, &p.sigma_p, p.tol);
    if let Some(bad) = cells.iter().find(|c| c.sign == CellSign::Failed) {
        let msg = bad.failure.clone().unwrap_or_default();
        if msg.starts_with("invalid state") {
            return Err(Failure::domain(msg));
        }
        return Err(Failure::numeric(format!(
            "cell ({}, {}): {msg}",
            bad.sigma_q, bad.sigma_p
        )));
    }
    let sign = |s: CellSign| match s {
        CellSign::Negative => "negative",
        CellSign::Nonnegative => "nonnegative",
        CellSign::Boundary => "boundary",
        CellSign::Failed => "failed",
    };
    let rows = cells.iter().map(|c| {
        vec![
            c.sigma_q.into(),
            c.sigma_p.into(),
            c.value.into(),
            c.error.into(),
            sign(c.sign).into(),
        ]
    });
    ctx.csv(
        "scan.csv",
        &["sigma_q", "sigma_p", "value", "error", "sign"],
        rows,
    )?;
    let negative = cells
        .iter()
        .filter(|c| c.sign == CellSign::Negative)
        .count();
    let boundary = cells
        .iter()
        .filter(|c| c.sign == CellSign::Boundary)
        .count();
    print(&json!({"cells": cells.len(), "negative": negative, "boundary": boundary}));
    ctx.manifest(&p, None)
}

pub fn ground(p: GroundParams, ctx: &mut RunContext) -> Result<(), Failure> {
    let g = find_sigma_gnd(p.tol)?;
    let st = GaussianState::ground(g.sigma)?;
    let e = expect(&Energy, &st, 1e-13)?;
    let mode = most_probable_radius(&st)?;
    let out = json!({
        "sigma_gnd": g.sigma,
        "residual": g.residual,
        "iterations": g.iterations,
        "mean_energy": e.value,
        "mean_energy_ratio": e.value / energy(1),
        "most_probable_radius": mode.numeric,
        "most_probable_radius_analytic": mode.analytic,
    });
    print(&out);
    ctx.json("ground.json", &out)?;
    ctx.manifest(&p, None)
}

pub fn zeeman(p: ZeemanParams, ctx: &mut RunContext) -> Result<(), Failure> {
    if p.n_max == 0 {
        return Err(Failure::domain("n_max must be at least 1"));
    }
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for n in 1..=p.n_max {
        let s = zeeman_support(n, p.samples, p.seed + n)?;
        rows.push(vec![
            n.into(),
            s.stated_bound.into(),
            s.observed_max.into(),
            s.random_max.into(),
            s.witness_value.into(),
        ]);
        levels.push(json!({"n": n, "bound": s.stated_bound, "max_m": s.observed_max, "random_max_m": s.random_max,
                           "witness": s.witness, "witness_value": s.witness_value}));
    }
    ctx.csv(
        "zeeman.csv",
        &["n", "bound", "max_m", "random_max_m", "witness_value"],
        rows,
    )?;
    let out = json!({"levels": levels});
    print(&out);
    ctx.json("zeeman.json", &out)?;
    ctx.manifest(&p, Some(p.seed))
}

pub fn evolve(p: EvolveParams, ctx: &mut RunContext) -> Result<(), Failure> {
    let bounds: [f64; 4] = p.bounds.as_slice().try_into().map_err(|_| {
        Failure::domain(format!(
            "bounds needs 4 values (q_min,q_max,p_min,p_max), got {}",
            p.bounds.len()
        ))
    })?;
    if !(bounds[0] < bounds[1] && bounds[2] < bounds[3]) {
        return Err(Failure::domain(format!(
            "bounds must be increasing pairs, got {bounds:?}"
        )));
    }
    let schedule = match p.schedule.as_str() {
        "wedge" => Schedule::Wedge { peak: p.peak },
        "constant" => Schedule::Constant { lambda: p.lambda },
        other => {
            return Err(Failure::domain(format!(
                "unknown schedule `{other}` (wedge, constant)"
            )))
        }
    };
    let step = match p.dt {
        Some(dt) => StepRule::Fixed { dt },
        None => StepRule::Cfl { factor: p.cfl },
    };
    let spec = EvolutionSpec {
        a1: p.a1,
        hbar: p.hbar,
        schedule,
        t_end: p.t_end,
        step,
        boundary_tol: p.boundary_tol,
    };
    let grid = PhaseGrid::ground_state(bounds, p.n_q, p.n_p)?;
    let run = run_evolution(&grid, &spec)?;
    let rows = run.moments.iter().map(|m| {
        vec![
            m.t.into(),
            m.mean_q.into(),
            m.mean_p.into(),
            m.mean_p2.into(),
            m.mass.into(),
        ]
    });
    ctx.csv(
        "evolve_moments.csv",
        &["t", "mean_q", "mean_p", "mean_p2", "mass"],
        rows,
    )?;
    ctx.binary("evolve_state.bin", |w| {
        run.grid.write_dump(w).map_err(|e| e.to_string())
    })?;
    let (rq, rp) = ehrenfest_residual(&run.moments);
    let fin = run.final_moments();
    let out = json!({
        "t": fin.t,
        "mean_p2": fin.mean_p2,
        "mean_q": fin.mean_q,
        "mean_p": fin.mean_p,
        "mass": fin.mass,
        "mass_drift": run.mass_drift(),
        "ehrenfest_q": rq,
        "ehrenfest_p": rp,
        "steps": run.steps,
        "dt": run.dt,
        "boundary_ratio": run.boundary_ratio,
    });
    print(&out);
    ctx.json("evolve.json", &out)?;
    ctx.manifest(&p, None)
}

pub fn excite(p: ExciteParams, ctx: &mut RunContext) -> Result<(), Failure> {
    if p.samples == 0 || !(p.t_max >= 0.0) {
        return Err(Failure::domain(
            "samples must be positive and t_max nonnegative",
        ));
    }
    let drive = DriveSpec {
        omega: p.omega,
        amplitude: p.amplitude.unwrap_or(p.omega * p.omega),
    };
    let sigma = find_sigma_gnd(1e-12)?.sigma;
    let curves = excitation_curves(&drive, sigma, p.t_max, p.samples, p.tol)?;
    let rows = curves.iter().map(|c| {
        vec![
            c.t.into(),
            c.pr_e1.into(),
            c.pr_e2.into(),
            c.pr_qt_e1.into(),
            c.pr_qt_e2.into(),
        ]
    });
    ctx.csv(
        "excite.csv",
        &["t", "pr_E1", "pr_E2", "pr_qt_E1", "pr_qt_E2"],
        rows,
    )?;
    let worst = curves
        .iter()
        .map(|c| ((c.pr_e1 - c.pr_qt_e1).abs(), c.t))
        .fold((0.0f64, 0.0f64), |a, b| if b.0 > a.0 { b } else { a });
    let out = json!({
        "sigma_gnd": sigma,
        "omega": drive.omega,
        "amplitude": drive.amplitude,
        "samples": curves.len(),
        "pr_E2_at_0": curves.first().map(|c| c.pr_e2),
        "max_gap_E1": worst.0,
        "t_of_max_gap": worst.1,
    });
    print(&out);
    ctx.json("excite.json", &out)?;
    ctx.manifest(&p, None)
}

pub fn scatter(p: ScatterParams, ctx: &mut RunContext) -> Result<(), Failure> {
    let interaction = match p.interaction.as_str() {
        "attractive" => Interaction::Attractive,
        "repulsive" => Interaction::Repulsive,
        other => {
            return Err(Failure::domain(format!(
                "unknown interaction `{other}` (attractive, repulsive)"
            )))
        }
    };
    let cfg = ScatterConfig {
        p0: p.p0,
        b_max: p.b_max,
        n_particles: p.n_particles,
        edges: p.edges_deg.iter().map(|d| d.to_radians()).collect(),
        seed: p.seed,
        trajectory: TrajectoryOptions {
            radius: p.radius,
            rtol: p.rtol,
            atol: p.atol,
            interaction,
        },
    };
    let cs = cross_section(&cfg)?;
    for &i in &cs.empty_bins {
        let b = &cs.bins[i];
        eprintln!(
            "warning: bin [{:.1}°, {:.1}°] received no particles; excluded from chi2",
            b.theta_lo.to_degrees(),
            b.theta_hi.to_degrees()
        );
    }
    let rows = cs.bins.iter().map(|b| {
        vec![
            b.theta_mid.to_degrees().into(),
            b.estimate.into(),
            b.stderr.into(),
            b.formula_mid.into(),
            (b.estimate / b.formula_bin).into(),
        ]
    });
    ctx.csv(
        "scatter.csv",
        &[
            "theta_mid",
            "estimate",
            "stderr",
            "rutherford_formula",
            "ratio",
        ],
        rows,
    )?;
    let out = json!({
        "chi2": cs.chi2,
        "dof": cs.dof,
        "seed": cs.seed,
        "reduced_chi2": cs.reduced_chi2(),
        "max_relative_deviation": cs.max_relative_deviation(),
        "max_energy_error": cs.max_energy_error,
        "empty_bins": cs.empty_bins,
        "bin_average_formula": cs.bins.iter().map(|b| b.formula_bin).collect::<Vec<_>>(),
    });
    print(&out);
    ctx.json("scatter.json", &out)?;
    ctx.manifest(&p, Some(p.seed))
}

pub fn verify(p: VerifyParams, ctx: &mut RunContext) -> Result<(), Failure> {
    let ids: Vec<u32> = if p.only.is_empty() {
        (1..=verify::CRITERIA).collect()
    } else {
        p.only.clone()
    };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > verify::CRITERIA) {
        return Err(Failure::domain(format!(
            "no criterion {bad}; valid ids are 1..={}",
            verify::CRITERIA
        )));
    }
    let vctx = verify::Context::new();
    let mut checks = Vec::new();
    for id in ids {
        let c = verify::run(id, &vctx);
        let tag = if c.passed { "PASS" } else { "FAIL" };
        say(&format!(
            "{tag} [{:>2}] {}: {} ({:.1} s)",
            c.id, c.name, c.detail, c.seconds
        ));
        checks.push(c);
    }
    let failed: Vec<u32> = checks.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    say(&format!(
        "{} of {} passed",
        checks.len() - failed.len(),
        checks.len()
    ));
    ctx.json("verify.json", &json!({"checks": checks, "failed": failed}))?;
    ctx.manifest(&p, None)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::numeric(format!("criteria {failed:?} failed")))
    }
}
