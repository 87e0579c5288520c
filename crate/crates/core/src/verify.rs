//! Acceptance checks, one per numbered criterion.
//!
//! Each check is self-contained and reports a one-line detail string. The
//! two PDE criteria share their (expensive) runs through [`Context`].

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use once_cell::sync::OnceCell;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::models::{
    angular_momentum, anharmonic, hydrogen, jacobi_witness, leibniz_witness, runge_lenz,
};
use crate::algebra::{
    adjointness_check, check_zero_orderwise, d_omega_pow, gmb, liouvillian_product, poisson,
    BracketSpec, PhaseExpr, TestFn, Var,
};
use crate::dynamics::{ehrenfest_residual, evolve, EvolutionSpec, PhaseGrid, Run, WEDGE_BOUNDS};
use crate::field::{default_window, excitation_curves, DriveSpec};
use crate::scattering::{
    cross_section, exponent_table, impact_for_angle, kernel_homogeneity_check, trajectory_angle,
    ScatterConfig, TrajectoryOptions,
};
use crate::spectral::{active_levels, energy, t_l, zeeman_support};
use crate::states::{
    expect, expect_mc, find_sigma_gnd, most_probable_radius, positivity_scan, CellSign, Energy,
    GaussianState, LevelMeasure,
};

pub const CRITERIA: u32 = 14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Shared state between checks.
#[derive(Default)]
pub struct Context {
    pde: OnceCell<Result<PdeRuns, String>>,
}

struct PdeRuns {
    /// `(a1, run, seconds)` at 512².
    fine: Vec<(f64, Run, f64)>,
    /// `a1 = −1/24` at 256².
    half: Run,
}

const PDE_A1: [f64; 3] = [0.0, -1.0 / 48.0, -1.0 / 24.0];

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    fn pde(&self) -> Result<&PdeRuns, String> {
        self.pde
            .get_or_init(|| {
                let run = |n: usize, a1: f64| -> Result<(Run, f64), String> {
                    let start = Instant::now();
                    let g =
                        PhaseGrid::ground_state(WEDGE_BOUNDS, n, n).map_err(|e| e.to_string())?;
                    let r = evolve(&g, &EvolutionSpec::wedge(a1))
                        .map_err(|e| format!("{n}² a1={a1}: {e}"))?;
                    Ok((r, start.elapsed().as_secs_f64()))
                };
                let mut fine = Vec::new();
                for a1 in PDE_A1 {
                    let (r, s) = run(512, a1)?;
                    fine.push((a1, r, s));
                }
                let (half, _) = run(256, PDE_A1[2])?;
                Ok(PdeRuns { fine, half })
            })
            .as_ref()
            .map_err(Clone::clone)
    }
}

pub fn name(id: u32) -> &'static str {
    match id {
        1 => "ground-state width",
        2 => "ground-state energy and mode radius",
        3 => "sawtooth identities",
        4 => "symbolic conservation",
        5 => "exact derivative identities",
        6 => "five-step product coefficient",
        7 => "anharmonic PDE response",
        8 => "PDE conservation and convergence",
        9 => "positivity scan",
        10 => "Zeeman support",
        11 => "excitation curves",
        12 => "Rutherford cross-section",
        13 => "exponent ledger",
        14 => "bracket property suites",
        _ => "unknown",
    }
}

/// Runs one criterion.
pub fn run(id: u32, ctx: &Context) -> Check {
    let start = Instant::now();
    let out = match id {
        1 => c1(),
        2 => c2(),
        3 => c3(),
        4 => c4(),
        5 => c5(),
        6 => c6(),
        7 => c7(ctx),
        8 => c8(ctx),
        9 => c9(),
        10 => c10(),
        11 => c11(),
        12 => c12(),
        13 => c13(),
        14 => c14(),
        _ => Err(format!("no criterion {id}")),
    };
    let (passed, detail) = match out {
        Ok((ok, d)) => (ok, d),
        Err(e) => (false, format!("error: {e}")),
    };
    Check {
        id,
        name: name(id),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs all criteria in order, reporting each as it finishes.
pub fn run_all(mut report: impl FnMut(&Check)) -> Vec<Check> {
    let ctx = Context::new();
    (1..=CRITERIA)
        .map(|id| {
            let c = run(id, &ctx);
            report(&c);
            c
        })
        .collect()
}

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn c1() -> Outcome {
    let start = Instant::now();
    let g = find_sigma_gnd(1e-12).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let ok = (g.sigma - 1.59577048804).abs() <= 1e-6 && secs < 10.0;
    Ok((
        ok,
        format!(
            "sigma = {:.12} after {} iterations in {secs:.2} s",
            g.sigma, g.iterations
        ),
    ))
}

fn c2() -> Outcome {
    let g = find_sigma_gnd(1e-12).map_err(err)?;
    let st = GaussianState::ground(g.sigma).map_err(err)?;
    let e = expect(&Energy, &st, 1e-13).map_err(err)?;
    let ratio = 1.0 - e.value / energy(1);
    let m = most_probable_radius(&st).map_err(err)?;
    let ok = ratio > 0.0 && ratio <= 1e-5 && (m.numeric - 2.257).abs() <= 1e-3;
    Ok((
        ok,
        format!("1 - <H>/E1 = {ratio:.3e}, mode radius = {:.6}", m.numeric),
    ))
}

fn c3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut hs, mut hm, mut ls, mut lm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1_000_000 {
        let x = rng.gen_range(2.0 * energy(1)..-1e-6);
        let active = active_levels(x).map_err(err)?;
        let s: f64 = active.iter().map(|(_, t)| t).sum();
        let m: f64 = active.iter().map(|(n, t)| energy(*n) * t).sum();
        hs = hs.max((s - 1.0).abs());
        hm = hm.max((m - x).abs());

        let y: f64 = rng.gen_range(-10.0..10.0);
        let lo = y.floor() as i64;
        let (mut s, mut m) = (0.0, 0.0);
        for k in lo - 2..=lo + 2 {
            let t = t_l(k, y);
            s += t;
            m += k as f64 * t;
        }
        ls = ls.max((s - 1.0).abs());
        lm = lm.max((m - y).abs());
    }
    let ok = hs.max(hm).max(ls).max(lm) <= 1e-12;
    Ok((
        ok,
        format!("energy: {hs:.1e}/{hm:.1e}, angular: {ls:.1e}/{lm:.1e}"),
    ))
}

fn c4() -> Outcome {
    let start = Instant::now();
    let h = hydrogen();
    let mut obs = vec![("H".to_string(), h.clone())];
    for i in 0..3 {
        obs.push((format!("L{}", i + 1), angular_momentum(i)));
        obs.push((format!("A{}", i + 1), runge_lenz(i)));
    }
    let mut failures = Vec::new();
    for (label, g) in &obs {
        let checks = check_zero_orderwise(&h, g, 3);
        let orders: Vec<u32> = checks.iter().map(|c| c.0).collect();
        if orders != [1, 3, 5, 7] || !checks.iter().all(|c| c.1) {
            failures.push(label.clone());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs < 60.0;
    Ok((
        ok,
        format!(
            "{} observables, orders 1..7, failures {failures:?}, {secs:.1} s",
            obs.len()
        ),
    ))
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::from(1), |a, b| a * BigInt::from(b))
}

fn c5() -> Outcome {
    let (q, p) = (PhaseExpr::q(0), PhaseExpr::p(0));
    let mut bad = Vec::new();
    for n in 1..=4u32 {
        let f = (&q * &p).pow(n);
        let sign = if n % 2 == 0 { 1 } else { -1 };
        let nf = factorial(n as u64);
        let rhs = BigInt::from(sign) * factorial(2 * n as u64) * &nf * &nf;
        if d_omega_pow(&f, &f, 2 * n) != PhaseExpr::rational(BigRational::from_integer(rhs)) {
            bad.push(format!("(qp)^{n}"));
        }
    }
    for n in 1..=3u32 {
        let f = &q.pow(n) * &p.pow(n + 1);
        let g = &q.pow(2 * n) * &p.pow(2 * n + 2);
        let n64 = n as u64;
        let num = factorial(2 * n64) * factorial(2 * n64 + 1) * factorial(2 * n64 + 2);
        let den = factorial(n64 - 1) * factorial(n64 + 2);
        let sign = if (n + 1) % 2 == 0 { 1 } else { -1 };
        let c = BigRational::new(BigInt::from(sign) * num, den);
        let rhs = &PhaseExpr::rational(c) * &(&q.pow(n - 1) * &p.pow(n + 2));
        if d_omega_pow(&f, &g, 2 * n + 1) != rhs {
            bad.push(format!("q^{n}p^{}", n + 1));
        }
    }
    Ok((
        bad.is_empty(),
        format!("7 exact identities, mismatches {bad:?}"),
    ))
}

fn c6() -> Outcome {
    let w = &PhaseExpr::param("t") * &PhaseExpr::param_pow("n", -1);
    let steps: Vec<(PhaseExpr, PhaseExpr)> = (0..5)
        .rev()
        .map(|k| {
            let lambda = if k == 0 {
                PhaseExpr::zero()
            } else {
                PhaseExpr::param(&format!("lambda{k}"))
            };
            (anharmonic(&lambda), w.clone())
        })
        .collect();
    let out = liouvillian_product(&steps, &PhaseExpr::p(0).pow(2), &BracketSpec::symbolic(1));
    let part = out.coefficient_of(&[
        ("a1", 1),
        ("lambda1", 1),
        ("lambda4", 1),
        ("t", 4),
        ("n", -4),
    ]);
    let mut coeff = PhaseExpr::zero();
    for t in part.term_list() {
        if t.q == [2, 0, 0] && t.p == [0, 0, 0] && t.rpow == 0 {
            let mut single = PhaseExpr::rational(t.coeff.parse().map_err(err)?);
            for (name, e) in &t.params {
                single = &single * &PhaseExpr::param_pow(name, *e);
            }
            coeff += &single;
        }
    }
    let expect = &PhaseExpr::int(1728)
        * &(&PhaseExpr::param("m").pow(2) * &PhaseExpr::param("omega").pow(6));
    Ok((
        coeff == expect,
        format!("coefficient of a1 lambda1 lambda4 q^2 t^4/n^4 = {coeff}"),
    ))
}

/// Least-squares slope and intercept.
fn affine_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn c7(ctx: &Context) -> Outcome {
    let runs = ctx.pde()?;
    let v: Vec<f64> = runs
        .fine
        .iter()
        .map(|(_, r, _)| r.final_moments().mean_p2)
        .collect();
    let (slope, icept) = affine_fit(&PDE_A1, &v);
    let slowest = runs.fine.iter().map(|r| r.2).fold(0.0, f64::max);
    let ok = (v[0] - 0.6795).abs() <= 0.005
        && (v[2] - (0.6795 + 0.0823 * PDE_A1[2])).abs() <= 0.005
        && (slope - 0.0823).abs() <= 0.1 * 0.0823
        && slowest <= 600.0;
    Ok((
        ok,
        format!(
            "<p^2> = {:.6}, {:.6}, {:.6}; fit {icept:.6} + {slope:.5} a1; slowest run {slowest:.0} s",
            v[0], v[1], v[2]
        ),
    ))
}

fn c8(ctx: &Context) -> Outcome {
    let runs = ctx.pde()?;
    let all = runs
        .fine
        .iter()
        .map(|(_, r, _)| r)
        .chain(std::iter::once(&runs.half));
    let (mut drift, mut ehr) = (0.0f64, 0.0f64);
    for r in all {
        drift = drift.max(r.mass_drift());
        let (rq, rp) = ehrenfest_residual(&r.moments);
        ehr = ehr.max(rq).max(rp);
    }
    let halving =
        (runs.fine[2].1.final_moments().mean_p2 - runs.half.final_moments().mean_p2).abs();
    let ok = drift <= 1e-6 && ehr <= 1e-3 && halving <= 2e-3;
    Ok((
        ok,
        format!("mass drift {drift:.1e}, Ehrenfest {ehr:.1e}, 256 vs 512 {halving:.1e}"),
    ))
}

fn c9() -> Outcome {
    let sq = [0.5, 0.75, 1.0, 1.25, 1.6, 2.0, 2.5, 3.0, 4.0];
    let sp = [0.05, 0.25, 0.5, 1.0];
    let cells = positivity_scan(&sq, &sp, 1e-10);
    let mut monotone = true;
    for slice in cells.chunks(sq.len()) {
        let neg: Vec<bool> = slice.iter().map(|c| c.sign == CellSign::Negative).collect();
        let first = neg.iter().position(|s| !s).unwrap_or(neg.len());
        monotone &= neg[first..].iter().all(|s| !s);
        monotone &= slice.iter().all(|c| c.sign != CellSign::Failed);
    }
    let mut parts = Vec::new();
    let mut ok = monotone;
    for (i, &(q, p, want_negative)) in [(0.5, 0.5, true), (2.0, 0.5, false)].iter().enumerate() {
        let st = GaussianState::new(q, p).map_err(err)?;
        let quad = expect(&LevelMeasure(2), &st, 1e-10).map_err(err)?;
        let mc = expect_mc(&LevelMeasure(2), &st, 10_000_000, 90 + i as u64);
        ok &= if want_negative {
            quad.value < 0.0
        } else {
            quad.value >= 0.0
        };
        ok &= (quad.value - mc.value).abs() <= 3.0 * mc.stderr + quad.error;
        parts.push(format!(
            "({q}, {p}): {:.4e} vs MC {:.4e} ± {:.1e}",
            quad.value, mc.value, mc.stderr
        ));
    }
    Ok((
        ok,
        format!("{}; boundary monotone: {monotone}", parts.join(", ")),
    ))
}

fn c10() -> Outcome {
    let mut ok = true;
    let mut seen = Vec::new();
    for n in 1..=4u64 {
        let s = zeeman_support(n, 200_000, 40 + n).map_err(err)?;
        ok &= s.observed_max == n as i64 + 1
            && s.observed_max <= s.stated_bound
            && s.random_max <= s.observed_max;
        ok &= s.witness_value > 0.0;
        seen.push(s.observed_max);
    }
    Ok((ok, format!("max |m| for n = 1..4: {seen:?}")))
}

fn c11() -> Outcome {
    let sigma = find_sigma_gnd(1e-12).map_err(err)?.sigma;
    let curves = excitation_curves(&DriveSpec::resonant(), sigma, default_window(), 200, 1e-13)
        .map_err(err)?;
    let first = curves.first().ok_or("empty curve")?;
    let start_ok = first.t == 0.0 && first.pr_e2.abs() <= 1e-8;
    let positive = curves.iter().filter(|c| c.t > 0.0).all(|c| c.pr_e2 > 0.0);
    let bounded = curves.iter().all(|c| c.pr_e1 + c.pr_e2 <= 1.0 + 1e-8);
    let worst = curves.iter().max_by(|a, b| {
        (a.pr_e1 - a.pr_qt_e1)
            .abs()
            .partial_cmp(&(b.pr_e1 - b.pr_qt_e1).abs())
            .unwrap()
    });
    let worst = worst.ok_or("empty curve")?;
    let gap = (worst.pr_e1 - worst.pr_qt_e1).abs();
    let ok = start_ok && positive && bounded && gap <= 1e-2;
    Ok((
        ok,
        format!(
            "Pr2(0) = {:.1e}, Pr2 > 0: {positive}, Pr1+Pr2 <= 1: {bounded}, max |Pr1 - PrQT1| = {gap:.4} at t = {:.3}",
            first.pr_e2, worst.t
        ),
    ))
}

fn c12() -> Outcome {
    let start = Instant::now();
    let opts = TrajectoryOptions::default();
    let mut oracle = 0.0f64;
    for deg in [30.0f64, 60.0, 90.0, 120.0, 150.0] {
        let th = deg.to_radians();
        let tr = trajectory_angle(impact_for_angle(th, 1.0), 1.0, &opts).map_err(err)?;
        oracle = oracle.max((tr.theta - th).abs());
    }
    let cs = cross_section(&ScatterConfig::standard(1_000_000, 12)).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let dev = cs.max_relative_deviation();
    let ok = oracle <= 1e-6
        && cs.reduced_chi2() <= 2.0
        && dev <= 0.05
        && cs.empty_bins.is_empty()
        && secs <= 300.0;
    Ok((
        ok,
        format!(
            "angle oracle {oracle:.1e}, chi2/dof = {:.3}, max bin deviation {:.2}%, {secs:.0} s",
            cs.reduced_chi2(),
            100.0 * dev
        ),
    ))
}

fn c13() -> Outcome {
    let l = exponent_table(20).map_err(err)?;
    let mut ok = true;
    for n in 0..=20 {
        for k in 0..=20 {
            let expect = if k == 0 && n > 0 {
                None
            } else {
                Some((2 * n + k) as u32)
            };
            ok &= l.get(n, k) == expect;
        }
    }
    ok &= l.survivors == [(0, 0), (0, 1), (0, 2)] && l.far_field_is_classical();
    let kernels = [1u32, 3, 5]
        .iter()
        .all(|&o| kernel_homogeneity_check(o).passed);
    Ok((
        ok && kernels,
        format!(
            "alpha = 2n+k on 21x21, survivors {:?}, kernel check {kernels}",
            l.survivors
        ),
    ))
}

fn random_poly(rng: &mut ChaCha8Rng) -> PhaseExpr {
    let mut out = PhaseExpr::zero();
    for _ in 0..rng.gen_range(1..4) {
        let mut m = PhaseExpr::frac(rng.gen_range(-5..=5), rng.gen_range(1..=4));
        for v in Var::ALL {
            m = &m * &PhaseExpr::var(v).pow(rng.gen_range(0..=3));
        }
        out += &m;
    }
    out
}

fn random_radial(rng: &mut ChaCha8Rng) -> PhaseExpr {
    let p = random_poly(rng);
    &p * &PhaseExpr::r_pow(rng.gen_range(-3..=3))
}

fn random_quadratic(rng: &mut ChaCha8Rng) -> PhaseExpr {
    let mut out = PhaseExpr::int(rng.gen_range(-3..=3));
    for _ in 0..rng.gen_range(1..5) {
        let a = PhaseExpr::var(Var::ALL[rng.gen_range(0..6)]);
        let b = PhaseExpr::var(Var::ALL[rng.gen_range(0..6)]);
        out += &(&PhaseExpr::int(rng.gen_range(-3..=3)) * &(&a * &b));
        out += &(&PhaseExpr::int(rng.gen_range(-3..=3)) * &a);
    }
    out
}

fn c14() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let spec = BracketSpec::symbolic(2);
    let (mut bilinear, mut parity, mut third, mut selfb) = (true, true, true, true);
    for _ in 0..24 {
        let (f1, f2, g) = (
            random_poly(&mut rng),
            random_radial(&mut rng),
            random_poly(&mut rng),
        );
        let (a, b) = (
            PhaseExpr::int(rng.gen_range(-4..4)),
            PhaseExpr::int(rng.gen_range(-4..4)),
        );
        let lhs = gmb(&(&(&a * &f1) + &(&b * &f2)), &g, &spec).value;
        let rhs = &(&a * &gmb(&f1, &g, &spec).value) + &(&b * &gmb(&f2, &g, &spec).value);
        bilinear &= lhs == rhs;

        let k = rng.gen_range(0..5u32);
        let (fg, gf) = (d_omega_pow(&f2, &g, k), d_omega_pow(&g, &f2, k));
        parity &= if k % 2 == 0 { fg == gf } else { fg == -gf };

        selfb &= gmb(&f2, &f2, &spec).value.is_zero();

        let p2 = random_quadratic(&mut rng);
        let v = gmb(&f2, &p2, &BracketSpec::symbolic(3));
        third &= v.value == poisson(&f2, &p2) && v.complete;
    }

    let a1 = BracketSpec::custom(
        vec![BigRational::new((-1).into(), 24.into())],
        PhaseExpr::one(),
    );
    let f = TestFn::new(&PhaseExpr::q(0) * &PhaseExpr::p(0), 0.7, 0.4, 0.2, 0.1);
    let g = TestFn::new(PhaseExpr::p(0).pow(2), 0.5, 0.9, -0.3, 0.4);
    let adj =
        adjointness_check(&PhaseExpr::q(0).pow(4), &f, &g, &a1, &HashMap::new()).map_err(err)?;

    let (jf, jg, jh) = jacobi_witness();
    let b = |x: &PhaseExpr, y: &PhaseExpr| gmb(x, y, &a1).value;
    let jacobi = &(&b(&jf, &b(&jg, &jh)) + &b(&jg, &b(&jh, &jf))) + &b(&jh, &b(&jf, &jg));

    let moyal = BracketSpec::moyal(3, PhaseExpr::param("hbar"));
    let (lf, lg, lh) = leibniz_witness();
    let m = |x: &PhaseExpr, y: &PhaseExpr| gmb(x, y, &moyal).value;
    let leibniz = &m(&lf, &(&lg * &lh)) - &(&(&lh * &m(&lf, &lg)) + &(&lg * &m(&lf, &lh)));

    let ok = bilinear
        && parity
        && third
        && selfb
        && adj.residual <= 1e-6
        && !jacobi.is_zero()
        && !leibniz.is_zero();
    Ok((
        ok,
        format!(
            "bilinear {bilinear}, parity {parity}, quadratic reduces to Poisson {third}, self-bracket {selfb}, \
             adjointness {:.1e}, Jacobi defect {jacobi}, Leibniz defect {leibniz}",
            adj.residual
        ),
    ))
}
