//! Isotropic Gaussian states, radial expectation values, the positivity scan
//! and the ground-state width.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quad::{integrate, QuadError, QuadOptions};
use crate::spectral::{energy, t_h_or_zero};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatesError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("no sign change on [{lo}, {hi}]: f = {f_lo:.3e}, {f_hi:.3e}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
}

/// `ρ_G(σ_q, σ_p)`; `sigma_p = 0` is the momentum-delta limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianState {
    pub sigma_q: f64,
    pub sigma_p: f64,
}

impl GaussianState {
    pub fn new(sigma_q: f64, sigma_p: f64) -> Result<Self, StatesError> {
        if !(sigma_q > 0.0 && sigma_q.is_finite()) || !(sigma_p >= 0.0 && sigma_p.is_finite()) {
            return Err(StatesError::InvalidState(format!(
                "sigma_q = {sigma_q}, sigma_p = {sigma_p}"
            )));
        }
        Ok(GaussianState { sigma_q, sigma_p })
    }

    /// `ρ_gnd(σ)`: Gaussian in position, sharp at `p = 0`.
    pub fn ground(sigma: f64) -> Result<Self, StatesError> {
        GaussianState::new(sigma, 0.0)
    }

    pub fn is_delta(&self) -> bool {
        self.sigma_p == 0.0
    }

    /// Radial position density `4π q² · N(0, σ_q² I)`, normalized on `q > 0`.
    pub fn radial_q(&self, q: f64) -> f64 {
        maxwell(q, self.sigma_q)
    }

    /// Radial momentum density; only defined for `sigma_p > 0`.
    pub fn radial_p(&self, p: f64) -> f64 {
        maxwell(p, self.sigma_p)
    }

    /// Full phase-space density at `[q1,q2,q3,p1,p2,p3]` (`sigma_p > 0`).
    pub fn density(&self, x: &[f64; 6]) -> f64 {
        let q2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let p2 = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
        let (sq, sp) = (self.sigma_q, self.sigma_p);
        (-(q2 / (2.0 * sq * sq)) - p2 / (2.0 * sp * sp)).exp()
            / ((2.0 * PI).powi(3) * (sq * sp).powi(3))
    }
}

fn maxwell(x: f64, s: f64) -> f64 {
    (2.0 / PI).sqrt() * x * x / (s * s * s) * (-(x * x) / (2.0 * s * s)).exp()
}

/// A function of `(|q|, |p|)` with its known kink locations.
pub trait RadialObservable: Sync {
    fn value(&self, q: f64, p: f64) -> f64;
    /// Radii where the observable (or its `p`-integral) has kinks.
    fn q_breaks(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Momenta where the observable has kinks, at fixed `q`.
    fn p_breaks(&self, _q: f64) -> Vec<f64> {
        Vec::new()
    }
}

/// The constant observable 1.
pub struct Unit;

impl RadialObservable for Unit {
    fn value(&self, _q: f64, _p: f64) -> f64 {
        1.0
    }
}

/// Hydrogen energy `p²/2 − 1/q`.
pub struct Energy;

impl RadialObservable for Energy {
    fn value(&self, q: f64, p: f64) -> f64 {
        0.5 * p * p - 1.0 / q
    }
}

/// Energy spectral density `g_H(E_n) = T_n^H(H)`.
#[derive(Clone, Copy, Debug)]
pub struct LevelMeasure(pub u64);

impl LevelMeasure {
    fn nodes(&self) -> Vec<f64> {
        let n = self.0;
        let ks: Vec<u64> = if n <= 2 {
            vec![1, 2, 3]
        } else {
            vec![n - 1, n, n + 1]
        };
        ks.into_iter().map(energy).collect()
    }
}

impl RadialObservable for LevelMeasure {
    fn value(&self, q: f64, p: f64) -> f64 {
        t_h_or_zero(self.0, 0.5 * p * p - 1.0 / q)
    }
    fn q_breaks(&self) -> Vec<f64> {
        self.nodes().into_iter().map(|e| -1.0 / e).collect()
    }
    fn p_breaks(&self, q: f64) -> Vec<f64> {
        self.nodes()
            .into_iter()
            .filter_map(|e| {
                let k = e + 1.0 / q;
                (k > 0.0).then(|| (2.0 * k).sqrt())
            })
            .collect()
    }
}

/// Wraps a closure as an observable without kink information.
pub struct FnObservable<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> RadialObservable for FnObservable<F> {
    fn value(&self, q: f64, p: f64) -> f64 {
        (self.0)(q, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expectation {
    pub value: f64,
    pub error: f64,
}

/// Truncation radius in units of σ.
const SPAN: f64 = 12.0;

/// `⟨A, ρ⟩` by kink-aware adaptive quadrature in `(|q|, |p|)`.
pub fn expect<O: RadialObservable + ?Sized>(
    obs: &O,
    state: &GaussianState,
    tol: f64,
) -> Result<Expectation, StatesError> {
    let q_hi = SPAN * state.sigma_q;
    let q_breaks = obs.q_breaks();
    if state.is_delta() {
        let est = integrate(
            |q| state.radial_q(q) * obs.value(q, 0.0),
            0.0,
            q_hi,
            &q_breaks,
            QuadOptions {
                abs_tol: tol,
                rel_tol: 1e-14,
                max_panels: 4000,
            },
        )?;
        return Ok(Expectation {
            value: est.value,
            error: est.error,
        });
    }
    let p_hi = SPAN * state.sigma_p;
    let inner_opts = QuadOptions {
        abs_tol: 0.1 * tol,
        rel_tol: 1e-13,
        max_panels: 4000,
    };
    let mut inner_err: f64 = 0.0;
    let mut inner_fail: Option<QuadError> = None;
    let est = integrate(
        |q| {
            let w = state.radial_q(q);
            if w == 0.0 {
                return 0.0;
            }
            let r = integrate(
                |p| state.radial_p(p) * obs.value(q, p),
                0.0,
                p_hi,
                &obs.p_breaks(q),
                inner_opts,
            );
            match r {
                Ok(e) => {
                    inner_err = inner_err.max(e.error * w);
                    w * e.value
                }
                Err(e) => {
                    let partial = e.partial();
                    inner_fail.get_or_insert(e);
                    w * partial
                }
            }
        },
        0.0,
        q_hi,
        &q_breaks,
        QuadOptions {
            abs_tol: tol,
            rel_tol: 1e-14,
            max_panels: 4000,
        },
    )?;
    if let Some(e) = inner_fail {
        return Err(e.into());
    }
    Ok(Expectation {
        value: est.value,
        error: est.error + inner_err * q_hi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

const CHUNK: usize = 1 << 16;

/// Monte Carlo `⟨A, ρ⟩` sampling the Gaussian itself in 6D.
///
/// Samples are drawn in fixed-size chunks, chunk `i` from ChaCha stream `i`
/// of `seed`, and combined in chunk order, so the result does not depend on
/// the thread count.
pub fn expect_mc<O: RadialObservable + ?Sized>(
    obs: &O,
    state: &GaussianState,
    n_samples: usize,
    seed: u64,
) -> McEstimate {
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<(usize, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(n_samples - c * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for i in 0..count {
                let mut q2 = 0.0;
                let mut p2 = 0.0;
                for _ in 0..3 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    q2 += z * z;
                }
                for _ in 0..3 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    p2 += z * z;
                }
                let v = obs.value(state.sigma_q * q2.sqrt(), state.sigma_p * p2.sqrt());
                let d = v - mean;
                mean += d / (i + 1) as f64;
                m2 += d * (v - mean);
            }
            (count, mean, m2)
        })
        .collect();
    let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    for (nb, mb, m2b) in parts {
        let tot = n + nb;
        let d = mb - mean;
        mean += d * nb as f64 / tot as f64;
        m2 += m2b + d * d * (n as f64) * (nb as f64) / tot as f64;
        n = tot;
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    McEstimate {
        value: mean,
        stderr: (var / n as f64).sqrt(),
        samples: n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellSign {
    Negative,
    Nonnegative,
    /// `|value| ≤ error`: the sign is not resolved.
    Boundary,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCell {
    pub sigma_q: f64,
    pub sigma_p: f64,
    pub value: f64,
    pub error: f64,
    pub sign: CellSign,
    pub failure: Option<String>,
}

/// `⟨g_H(E_2), ρ_G(σ_q, σ_p)⟩` on a grid, `sigma_p`-major, `sigma_q` fastest.
pub fn positivity_scan(sigma_q: &[f64], sigma_p: &[f64], tol: f64) -> Vec<ScanCell> {
    let cells: Vec<(f64, f64)> = sigma_p
        .iter()
        .flat_map(|&sp| sigma_q.iter().map(move |&sq| (sq, sp)))
        .collect();
    cells
        .par_iter()
        .map(|&(sq, sp)| {
            let state = match GaussianState::new(sq, sp) {
                Ok(s) => s,
                Err(e) => return failed(sq, sp, e.to_string()),
            };
            match expect(&LevelMeasure(2), &state, tol) {
                Ok(e) => {
                    let sign = if e.value.abs() <= e.error {
                        CellSign::Boundary
                    } else if e.value < 0.0 {
                        CellSign::Negative
                    } else {
                        CellSign::Nonnegative
                    };
                    ScanCell {
                        sigma_q: sq,
                        sigma_p: sp,
                        value: e.value,
                        error: e.error,
                        sign,
                        failure: None,
                    }
                }
                Err(e) => failed(sq, sp, e.to_string()),
            }
        })
        .collect()
}

fn failed(sq: f64, sp: f64, msg: String) -> ScanCell {
    ScanCell {
        sigma_q: sq,
        sigma_p: sp,
        value: f64::NAN,
        error: f64::NAN,
        sign: CellSign::Failed,
        failure: Some(msg),
    }
}

/// `⟨g_H(E_2), ρ_gnd(σ)⟩`.
pub fn ground_excitation(sigma: f64) -> Result<f64, StatesError> {
    Ok(expect(&LevelMeasure(2), &GaussianState::ground(sigma)?, 1e-14)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundWidth {
    pub sigma: f64,
    pub residual: f64,
    pub iterations: u32,
}

/// Width `σ_gnd` at which `ρ_gnd` has no weight on `E_2`, by bisection on `[1, 2.5]`.
pub fn find_sigma_gnd(tol: f64) -> Result<GroundWidth, StatesError> {
    find_sigma_gnd_in(1.0, 2.5, tol)
}

pub fn find_sigma_gnd_in(lo: f64, hi: f64, tol: f64) -> Result<GroundWidth, StatesError> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (ground_excitation(a)?, ground_excitation(b)?);
    if fa.signum() == fb.signum() {
        return Err(StatesError::NoSignChange {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let mut iterations = 0;
    while b - a > tol && iterations < 200 {
        let m = 0.5 * (a + b);
        let fm = ground_excitation(m)?;
        iterations += 1;
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let sigma = 0.5 * (a + b);
    Ok(GroundWidth {
        sigma,
        residual: ground_excitation(sigma)?,
        iterations,
    })
}

/// Most probable distance `√2 σ` of `ρ_gnd`, returned with a numeric cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeRadius {
    pub analytic: f64,
    pub numeric: f64,
}

pub fn most_probable_radius(state: &GaussianState) -> Result<ModeRadius, StatesError> {
    if !state.is_delta() {
        return Err(StatesError::InvalidState(
            "most probable radius is defined for sigma_p = 0".into(),
        ));
    }
    let s = state.sigma_q;
    let f = |q: f64| q * q * (-(q * q) / (2.0 * s * s)).exp();
    let n = 4000;
    let h = 6.0 * s / n as f64;
    let best = (1..n)
        .max_by(|&i, &j| f(i as f64 * h).total_cmp(&f(j as f64 * h)))
        .expect("nonempty");
    // golden-section refinement inside the bracketing cells
    let (mut a, mut b) = ((best - 1) as f64 * h, (best + 1) as f64 * h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-12 * s {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(ModeRadius {
        analytic: 2f64.sqrt() * s,
        numeric: 0.5 * (a + b),
    })
}

/// `⟨g_H(E_n), ρ⟩` for `n = 1..=n_max`.
pub fn level_probabilities(
    state: &GaussianState,
    n_max: u64,
    tol: f64,
) -> Result<Vec<f64>, StatesError> {
    (1..=n_max)
        .map(|n| Ok(expect(&LevelMeasure(n), state, tol)?.value))
        .collect()
}
