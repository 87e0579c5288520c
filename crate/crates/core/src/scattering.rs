//! Coulomb scattering: classical trajectory Monte Carlo for the differential
//! cross section, and the far-field exponent ledger for the perturbative
//! solution of the generalized-bracket scattering problem.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::PhaseExpr;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScatterError {
    #[error("impact parameter and momentum must be positive (b = {b}, p0 = {p0})")]
    BadInput { b: f64, p0: f64 },
    #[error("step size collapsed at r = {r:.3e}")]
    StepCollapse { r: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("exponent recursion disagrees at (n, k) = ({n}, {k})")]
    Recursion { n: usize, k: usize },
}

/// Sign of the Coulomb interaction `V = ∓κ/r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    Attractive,
    Repulsive,
}

impl Interaction {
    fn sign(self) -> f64 {
        match self {
            Interaction::Attractive => 1.0,
            Interaction::Repulsive => -1.0,
        }
    }
}

/// Integration settings for one trajectory (μ = κ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryOptions {
    /// Start and stop radius in units of `κμ/p₀²`.
    pub radius: f64,
    pub rtol: f64,
    pub atol: f64,
    pub interaction: Interaction,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            radius: 1e8,
            rtol: 1e-11,
            atol: 1e-12,
            interaction: Interaction::Attractive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trajectory {
    /// Deflection angle in `[0, π]`.
    pub theta: f64,
    /// `|H(end) − H(start)| / |H(start)|`.
    pub energy_error: f64,
    pub steps: usize,
}

type State = [f64; 4];

fn accel(y: &State, sign: f64) -> State {
    let r2 = y[0] * y[0] + y[1] * y[1];
    let inv_r3 = 1.0 / (r2 * r2.sqrt());
    [y[2], y[3], -sign * y[0] * inv_r3, -sign * y[1] * inv_r3]
}

fn energy_of(y: &State, sign: f64) -> f64 {
    0.5 * (y[2] * y[2] + y[3] * y[3]) - sign / (y[0] * y[0] + y[1] * y[1]).sqrt()
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the nodes are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Deflection of a particle with impact parameter `b` and incoming momentum `p0`.
///
/// Starts at `x = −R` with the speed fixed by `E = p₀²/2`, integrates with an
/// adaptive Dormand–Prince 5(4) step, and reads the angle off the velocity once
/// the particle is back out at radius `R` and receding.
pub fn trajectory_angle(
    b: f64,
    p0: f64,
    opts: &TrajectoryOptions,
) -> Result<Trajectory, ScatterError> {
    if !(b > 0.0 && p0 > 0.0 && b.is_finite() && p0.is_finite()) {
        return Err(ScatterError::BadInput { b, p0 });
    }
    let sign = opts.interaction.sign();
    let big_r = opts.radius / (p0 * p0);
    let x0 = -(big_r * big_r - b * b).max(0.0).sqrt();
    let speed2 = p0 * p0 + 2.0 * sign / big_r;
    if speed2 <= 0.0 {
        return Err(ScatterError::Config(format!(
            "radius {big_r} inside the turning point"
        )));
    }
    let mut y: State = [x0, b, speed2.sqrt(), 0.0];
    let e0 = energy_of(&y, sign);
    let mut h = 0.01 * b.min(1.0 / (p0 * p0)) / p0;
    let mut k = [[0.0; 4]; 7];
    k[0] = accel(&y, sign);
    let mut steps = 0usize;
    let mut passed_in = false;
    loop {
        let mut stage = y;
        for s in 1..7 {
            for i in 0..4 {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                stage[i] = y[i] + h * acc;
            }
            k[s] = accel(&stage, sign);
        }
        let mut err = 0.0f64;
        for i in 0..4 {
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            let scale = opts.atol + opts.rtol * y[i].abs().max(stage[i].abs());
            err = err.max((h * e).abs() / scale);
        }
        if err <= 1.0 {
            y = stage;
            k[0] = k[6];
            steps += 1;
            let r2 = y[0] * y[0] + y[1] * y[1];
            let radial = y[0] * y[2] + y[1] * y[3];
            if radial < 0.0 || r2 < big_r * big_r * 0.25 {
                passed_in = true;
            }
            if passed_in && radial > 0.0 && r2 >= big_r * big_r {
                break;
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= if err <= 1.0 { factor } else { factor.min(1.0) };
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if h < 1e-14 * r.max(1e-300) {
            return Err(ScatterError::StepCollapse { r });
        }
    }
    let theta = y[3].atan2(y[2]).abs();
    let e1 = energy_of(&y, sign);
    Ok(Trajectory {
        theta,
        energy_error: ((e1 - e0) / e0).abs(),
        steps,
    })
}

/// Closed-form Kepler scattering: `b(θ) = (κμ/p₀²) cot(θ/2)`.
pub fn impact_for_angle(theta: f64, p0: f64) -> f64 {
    1.0 / ((0.5 * theta).tan() * p0 * p0)
}

/// `κ²μ² / (4 p₀⁴ sin⁴(θ/2))`.
pub fn rutherford(theta: f64, p0: f64) -> f64 {
    let s = (0.5 * theta).sin();
    1.0 / (4.0 * p0.powi(4) * s.powi(4))
}

/// Mean of the Rutherford formula over the solid angle of `[lo, hi]`:
/// `π (b(lo)² − b(hi)²) / ΔΩ`.
pub fn rutherford_bin_average(lo: f64, hi: f64, p0: f64) -> f64 {
    let area = PI * (impact_for_angle(lo, p0).powi(2) - impact_for_angle(hi, p0).powi(2));
    area / solid_angle(lo, hi)
}

/// `2π (cos lo − cos hi)`.
pub fn solid_angle(lo: f64, hi: f64) -> f64 {
    2.0 * PI * (lo.cos() - hi.cos())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterConfig {
    pub p0: f64,
    pub b_max: f64,
    pub n_particles: usize,
    /// Bin edges in radians, strictly increasing inside `(0, π)`.
    pub edges: Vec<f64>,
    pub seed: u64,
    pub trajectory: TrajectoryOptions,
}

impl ScatterConfig {
    /// Twelve 10° bins over `[30°, 150°]`, `b_max = 4`, `p₀ = 1`.
    pub fn standard(n_particles: usize, seed: u64) -> Self {
        ScatterConfig {
            p0: 1.0,
            b_max: 4.0,
            n_particles,
            edges: (3..=15).map(|d| (10.0 * d as f64).to_radians()).collect(),
            seed,
            trajectory: TrajectoryOptions {
                radius: 1e5,
                rtol: 1e-11,
                ..TrajectoryOptions::default()
            },
        }
    }

    /// Incident areal density `ν = N / (π b_max²)`.
    pub fn density(&self) -> f64 {
        self.n_particles as f64 / (PI * self.b_max * self.b_max)
    }

    fn validate(&self) -> Result<(), ScatterError> {
        let ok_edges = self.edges.len() >= 2
            && self.edges.windows(2).all(|w| w[0] < w[1])
            && self.edges[0] > 0.0
            && *self.edges.last().unwrap() < PI;
        if !ok_edges {
            return Err(ScatterError::Config(
                "bin edges must increase inside (0, π)".into(),
            ));
        }
        if !(self.p0 > 0.0 && self.b_max > 0.0 && self.n_particles > 0) {
            return Err(ScatterError::Config(format!(
                "p0 = {}, b_max = {}, n = {}",
                self.p0, self.b_max, self.n_particles
            )));
        }
        // the smallest bin must be fully covered by the sampled disk
        let theta_edge = 2.0 * (1.0 / (self.b_max * self.p0 * self.p0)).atan();
        if theta_edge > self.edges[0] {
            return Err(ScatterError::Config(format!(
                "b_max = {} only reaches down to θ = {:.2}°",
                self.b_max,
                theta_edge.to_degrees()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub theta_mid: f64,
    pub count: u64,
    pub estimate: f64,
    pub stderr: f64,
    /// Formula at the bin centre.
    pub formula_mid: f64,
    /// Formula averaged over the bin's solid angle.
    pub formula_bin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossSection {
    pub bins: Vec<Bin>,
    /// `Σ ((estimate − formula_bin)/stderr)²`.
    pub chi2: f64,
    pub dof: usize,
    pub seed: u64,
    pub max_energy_error: f64,
    /// Bins that received no particles.
    pub empty_bins: Vec<usize>,
}

impl CrossSection {
    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof as f64
    }

    pub fn max_relative_deviation(&self) -> f64 {
        self.bins
            .iter()
            .map(|b| (b.estimate / b.formula_bin - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

const CHUNK: usize = 8192;

/// Monte Carlo estimate of `dσ/dΩ` per bin: counts over `ν ΔΩ`, with `b`
/// sampled area-uniformly on the disk of radius `b_max`.
pub fn cross_section(config: &ScatterConfig) -> Result<CrossSection, ScatterError> {
    config.validate()?;
    let nb = config.edges.len() - 1;
    let chunks = config.n_particles.div_ceil(CHUNK);
    let tallies: Vec<Result<(Vec<u64>, f64), ScatterError>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(config.n_particles - c * CHUNK);
            let mut counts = vec![0u64; nb];
            let mut worst = 0.0f64;
            for _ in 0..n {
                let u: f64 = rng.gen();
                let b = config.b_max * u.sqrt();
                if b == 0.0 {
                    continue;
                }
                let tr = trajectory_angle(b, config.p0, &config.trajectory)?;
                worst = worst.max(tr.energy_error);
                let k = config.edges.partition_point(|&e| e <= tr.theta);
                if k >= 1 && k <= nb {
                    counts[k - 1] += 1;
                }
            }
            Ok((counts, worst))
        })
        .collect();
    let mut counts = vec![0u64; nb];
    let mut max_energy_error = 0.0f64;
    for t in tallies {
        let (c, w) = t?;
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
        max_energy_error = max_energy_error.max(w);
    }

    let nu = config.density();
    let total = config.n_particles as f64;
    let mut bins = Vec::with_capacity(nb);
    let mut chi2 = 0.0;
    let mut empty_bins = Vec::new();
    for (i, &count) in counts.iter().enumerate() {
        let (lo, hi) = (config.edges[i], config.edges[i + 1]);
        let omega = solid_angle(lo, hi);
        let estimate = count as f64 / (nu * omega);
        // binomial spread of the count
        let frac = count as f64 / total;
        let stderr = (total * frac * (1.0 - frac)).sqrt() / (nu * omega);
        let formula_bin = rutherford_bin_average(lo, hi, config.p0);
        let mid = 0.5 * (lo + hi);
        if count == 0 {
            empty_bins.push(i);
        } else {
            chi2 += ((estimate - formula_bin) / stderr).powi(2);
        }
        bins.push(Bin {
            theta_lo: lo,
            theta_hi: hi,
            theta_mid: mid,
            count,
            estimate,
            stderr,
            formula_mid: rutherford(mid, config.p0),
            formula_bin,
        });
    }
    let dof = nb - empty_bins.len();
    Ok(CrossSection {
        bins,
        chi2,
        dof,
        seed: config.seed,
        max_energy_error,
        empty_bins,
    })
}

/// Radial order `α(n, k)` of `ρ_{n,k} ~ |q|^{−α}`; `None` marks a term that vanishes identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentLedger {
    pub size: usize,
    pub alpha: Vec<Vec<Option<u32>>>,
    /// `(n, k)` with `2n + k − 2 ≤ 0` and a nonvanishing term.
    pub survivors: Vec<(usize, usize)>,
}

impl ExponentLedger {
    pub fn get(&self, n: usize, k: usize) -> Option<u32> {
        self.alpha[n][k]
    }

    /// Whether only `n = 0` (classical) orders survive the far-field limit.
    pub fn far_field_is_classical(&self) -> bool {
        self.survivors.iter().all(|&(n, _)| n == 0)
    }
}

/// Builds `α` from `ρ_{0,0} ~ |q|⁰`, `ρ_{n,0} ≡ 0` (n ≥ 1) via
/// `α(n, k) = 2(n − ñ) + 1 + α(ñ, k − 1)`, checking every branch `ñ` agrees.
pub fn exponent_table(size: usize) -> Result<ExponentLedger, ScatterError> {
    if size < 2 {
        return Err(ScatterError::Config(format!("ledger size {size} < 2")));
    }
    let mut alpha = vec![vec![None; size + 1]; size + 1];
    alpha[0][0] = Some(0u32);
    for k in 1..=size {
        for n in 0..=size {
            let mut value = None;
            for nt in 0..=n {
                let Some(prev) = alpha[nt][k - 1] else {
                    continue;
                };
                let candidate = 2 * (n - nt) as u32 + 1 + prev;
                match value {
                    None => value = Some(candidate),
                    Some(v) if v != candidate => return Err(ScatterError::Recursion { n, k }),
                    _ => {}
                }
            }
            alpha[n][k] = value;
        }
    }
    let mut survivors = Vec::new();
    for (n, row) in alpha.iter().enumerate() {
        for (k, a) in row.iter().enumerate() {
            if a.is_some() && 2 * n + k <= 2 {
                survivors.push((n, k));
            }
        }
    }
    Ok(ExponentLedger {
        size,
        alpha,
        survivors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelCheck {
    pub order: u32,
    pub expected_degree: i32,
    /// Distinct multi-indices checked.
    pub derivatives: usize,
    pub passed: bool,
}

/// Applies every `∂_{q_{i₁}}⋯∂_{q_{i_order}}` to `r⁻¹` and checks each term has
/// radial degree `−1 − order`.
pub fn kernel_homogeneity_check(order: u32) -> KernelCheck {
    let expected = -1 - order as i32;
    let base = PhaseExpr::r_pow(-1);
    let mut passed = true;
    let mut derivatives = 0;
    for a in 0..=order {
        for b in 0..=order - a {
            let c = order - a - b;
            let d = base.partial_multi([a, b, c, 0, 0, 0]);
            derivatives += 1;
            let degrees = d.homogeneity_degrees();
            if degrees.is_empty() || degrees.iter().any(|&g| g != expected) {
                passed = false;
            }
        }
    }
    KernelCheck {
        order,
        expected_degree: expected,
        derivatives,
        passed,
    }
}
