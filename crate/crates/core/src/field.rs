//! Hydrogen driven by an oscillating electric field along `ê₃`: the
//! interaction-picture shift, level probabilities along the shifted ground
//! state, and the Schrödinger comparison for `ψ₁₀₀`.
//!
//! The effective generator is `L_{H_e + tG}` (first order in `t L_H`); the
//! time dependence of the interaction-picture measure is dropped.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::models::hydrogen_symbolic;
use crate::algebra::{liouvillian, poisson, BracketSpec, PhaseExpr};
use crate::quad::{integrate, QuadError, QuadOptions};
use crate::spectral::{energy, t_h_or_zero};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FieldError {
    #[error("commutator check failed on {0}")]
    SymbolicMismatch(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("level {0} is not available here")]
    InvalidLevel(u64),
    #[error("time must be finite and nonnegative, got {0}")]
    InvalidTime(f64),
}

/// Drive `H_e = −2 eE sin(ωt) q₃` in internal units (μ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveSpec {
    pub omega: f64,
    /// `eE`.
    pub amplitude: f64,
}

impl DriveSpec {
    /// `ω = E₂ − E₁` and `eE = μ a₀ ω²`.
    pub fn resonant() -> Self {
        let omega = energy(2) - energy(1);
        DriveSpec {
            omega,
            amplitude: omega * omega,
        }
    }

    /// `(s, u)` along `ê₃`:
    /// `s = (2eE/ω²)(sin ωt − ωt cos ωt)`, `u = (2eE/ω)(cos ωt − 1)`.
    pub fn shift(&self, t: f64) -> (f64, f64) {
        let w = self.omega;
        let x = w * t;
        let s = if x.abs() < 1e-3 {
            // series avoids cancellation: x³/3 − x⁵/30 + x⁷/840
            let x2 = x * x;
            x * x2 * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0)
        } else {
            x.sin() - x * x.cos()
        };
        (
            2.0 * self.amplitude / (w * w) * s,
            2.0 * self.amplitude / w * (x.cos() - 1.0),
        )
    }
}

/// `G` with `L_{H_e} L_H − L_H L_{H_e} = L_G`, in the symbols `eE`, `sinwt`, `mu`, `kappa`.
///
/// The candidate `{H_e, H}` is checked against the commutator on a set of
/// test monomials under `spec`.
pub fn commutator_g(spec: &BracketSpec) -> Result<PhaseExpr, FieldError> {
    let h = hydrogen_symbolic();
    let he = &(&PhaseExpr::int(-2) * &(&PhaseExpr::param("eE") * &PhaseExpr::param("sinwt")))
        * &PhaseExpr::q(2);
    let g = poisson(&he, &h);
    let (q, p) = (PhaseExpr::q, PhaseExpr::p);
    let tests = [
        q(2),
        p(2),
        &q(0) * &q(2),
        &q(2).pow(2) * &p(2),
        &p(0) * &p(2).pow(2),
        q(2).pow(3),
        &(&q(0) * &p(0)) * &p(2),
        &q(1).pow(2) * &p(2).pow(3),
    ];
    for f in &tests {
        let lhs = &liouvillian(&he, &liouvillian(&h, f, spec), spec)
            - &liouvillian(&h, &liouvillian(&he, f, spec), spec);
        let rhs = liouvillian(&g, f, spec);
        if lhs != rhs {
            return Err(FieldError::SymbolicMismatch(f.to_string()));
        }
    }
    Ok(g)
}

/// Numerical value of `G` for a drive at time `t`: `−2eE sin(ωt) p₃` (μ = 1).
pub fn g_value(drive: &DriveSpec, t: f64, p3: f64) -> f64 {
    let g = commutator_g(&BracketSpec::poisson()).expect("first-order commutator");
    let params = HashMap::from([
        ("eE".to_string(), drive.amplitude),
        ("sinwt".to_string(), (drive.omega * t).sin()),
        ("mu".to_string(), 1.0),
        ("kappa".to_string(), 1.0),
    ]);
    g.evaluate(&[0.0, 0.0, 0.0, 0.0, 0.0, p3], &params)
        .expect("all symbols bound")
}

/// `(1 − e^{−2a})/a`, continuous at `a = 0`.
fn sinh_ratio(a: f64) -> f64 {
    if a < 1e-12 {
        2.0 - 2.0 * a
    } else {
        -(-2.0 * a).exp_m1() / a
    }
}

/// Radial density of `N(−s ê₃, σ² I)` at `r`, integrated over directions.
fn shifted_radial_density(r: f64, s: f64, sigma: f64) -> f64 {
    let s = s.abs();
    let v = sigma * sigma;
    let norm = (2.0 * PI * v).powf(-1.5) * 2.0 * PI;
    norm * r * r * (-(r - s).powi(2) / (2.0 * v)).exp() * sinh_ratio(r * s / v)
}

fn prob_opts(tol: f64) -> QuadOptions {
    QuadOptions {
        abs_tol: tol,
        rel_tol: 1e-12,
        max_panels: 4000,
    }
}

/// `Pr[E_n]` for the state `ρ_gnd(σ)` translated by `(s ê₃, u ê₃)`.
///
/// The momentum is sharp at `−u`, so the energy is `u²/2 − 1/|q|` and depends
/// only on `r`; the angular integral of the shifted Gaussian is closed-form.
pub fn prob_level_shifted(sigma: f64, s: f64, u: f64, n: u64, tol: f64) -> Result<f64, FieldError> {
    if n == 0 {
        return Err(FieldError::InvalidLevel(n));
    }
    let kinetic = 0.5 * u * u;
    let r_of = |e: f64| 1.0 / (kinetic - e);
    // support of T_n is H < E_{n+1}, and H > E_{n−1} for n ≥ 3
    let hi = r_of(energy(n + 1)).min(s.abs() + 14.0 * sigma);
    let lo = if n >= 3 { r_of(energy(n - 1)) } else { 0.0 };
    if lo >= hi {
        return Ok(0.0);
    }
    let lo_k = n.saturating_sub(1).max(1);
    let breaks: Vec<f64> = (lo_k..=n + 1)
        .map(|k| r_of(energy(k)))
        .chain([s.abs()])
        .collect();
    let est = integrate(
        |r| {
            if r == 0.0 {
                return 0.0;
            }
            shifted_radial_density(r, s, sigma) * t_h_or_zero(n, kinetic - 1.0 / r)
        },
        lo,
        hi,
        &breaks,
        prob_opts(tol),
    )?;
    Ok(est.value)
}

/// `Pr[H̃(t) = E_n]` for the initial state `ρ_gnd(σ)`.
pub fn prob_level(
    drive: &DriveSpec,
    sigma: f64,
    t: f64,
    n: u64,
    tol: f64,
) -> Result<f64, FieldError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(FieldError::InvalidTime(t));
    }
    let (s, u) = drive.shift(t);
    prob_level_shifted(sigma, s, u, n, tol)
}

/// `ψ₁₀₀ = e^{−r}/√π`.
pub fn psi_100(r: f64) -> f64 {
    (-r).exp() / PI.sqrt()
}

/// `ψ₂₀₀ = (2 − r) e^{−r/2} / (4√(2π))`.
pub fn psi_200(r: f64) -> f64 {
    (2.0 - r) * (-0.5 * r).exp() / (4.0 * (2.0 * PI).sqrt())
}

/// `ψ₂₁₀ = r e^{−r/2} cos θ / (4√(2π))`.
pub fn psi_210(r: f64, cos_theta: f64) -> f64 {
    r * (-0.5 * r).exp() * cos_theta / (4.0 * (2.0 * PI).sqrt())
}

/// `∫ φ(x) e^{−i u x₃} ψ₁₀₀(x + s ê₃) d³x` for an axially symmetric real `φ(r, cos θ)`.
fn overlap(
    phi: impl Fn(f64, f64) -> f64 + Copy,
    s: f64,
    u: f64,
    tol: f64,
) -> Result<(f64, f64), FieldError> {
    let r_hi = s.abs() + 40.0;
    let inner_opts = QuadOptions {
        abs_tol: 0.01 * tol,
        rel_tol: 1e-12,
        max_panels: 4000,
    };
    let part = |imag: bool| -> Result<f64, FieldError> {
        let mut failure = None;
        let est = integrate(
            |r| {
                let inner = integrate(
                    |c| {
                        let d = (r * r + s * s + 2.0 * r * s * c).max(0.0).sqrt();
                        let phase = u * r * c;
                        let w = if imag { -phase.sin() } else { phase.cos() };
                        phi(r, c) * psi_100(d) * w
                    },
                    -1.0,
                    1.0,
                    &[],
                    inner_opts,
                );
                match inner {
                    Ok(e) => 2.0 * PI * r * r * e.value,
                    Err(e) => {
                        failure.get_or_insert(e.clone());
                        2.0 * PI * r * r * e.partial()
                    }
                }
            },
            0.0,
            r_hi,
            &[s.abs()],
            QuadOptions {
                abs_tol: tol,
                rel_tol: 1e-12,
                max_panels: 4000,
            },
        )?;
        match failure {
            Some(e) => Err(e.into()),
            None => Ok(est.value),
        }
    };
    Ok((part(false)?, part(true)?))
}

/// `Pr_QT[E_n]` for `ψ₁₀₀` translated by `s ê₃` with momentum kick `−u ê₃` (`n ∈ {1, 2}`).
pub fn prob_level_qt_shifted(s: f64, u: f64, n: u64, tol: f64) -> Result<f64, FieldError> {
    let abs2 = |(re, im): (f64, f64)| re * re + im * im;
    match n {
        1 => Ok(abs2(overlap(|r, _| psi_100(r), s, u, tol)?)),
        2 => {
            let a = abs2(overlap(|r, _| psi_200(r), s, u, tol)?);
            let b = abs2(overlap(psi_210, s, u, tol)?);
            Ok(a + b)
        }
        _ => Err(FieldError::InvalidLevel(n)),
    }
}

/// `Pr_QT[H̃(t) = E_n]` for the initial state `ψ₁₀₀`.
pub fn prob_level_qt(drive: &DriveSpec, t: f64, n: u64, tol: f64) -> Result<f64, FieldError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(FieldError::InvalidTime(t));
    }
    let (s, u) = drive.shift(t);
    prob_level_qt_shifted(s, u, n, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub pr_e1: f64,
    pub pr_e2: f64,
    pub pr_qt_e1: f64,
    pub pr_qt_e2: f64,
}

/// Default window `[0, 3ħ/|E₁|]`.
pub fn default_window() -> f64 {
    3.0 / energy(1).abs()
}

/// `samples` uniform times over `[0, t_max]`, evaluated in parallel, in order.
pub fn excitation_curves(
    drive: &DriveSpec,
    sigma: f64,
    t_max: f64,
    samples: usize,
    tol: f64,
) -> Result<Vec<CurvePoint>, FieldError> {
    let times: Vec<f64> = (0..samples)
        .map(|k| {
            if samples == 1 {
                0.0
            } else {
                t_max * k as f64 / (samples - 1) as f64
            }
        })
        .collect();
    times
        .par_iter()
        .map(|&t| {
            Ok(CurvePoint {
                t,
                pr_e1: prob_level(drive, sigma, t, 1, tol)?,
                pr_e2: prob_level(drive, sigma, t, 2, tol)?,
                pr_qt_e1: prob_level_qt(drive, t, 1, tol)?,
                pr_qt_e2: prob_level_qt(drive, t, 2, tol)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_examples() {
        let d = DriveSpec::resonant();
        assert_eq!(d.shift(0.0), (0.0, 0.0));
        let (_, u) = d.shift(PI / d.omega);
        assert!((u + 4.0 * d.amplitude / d.omega).abs() < 1e-14);
        let t = 1e-2;
        let (s, _) = d.shift(t);
        let lead = 2.0 * d.amplitude / d.omega.powi(2) * (d.omega * t).powi(3) / 3.0;
        assert!((s - lead).abs() < 1e-5 * lead);
        // the series branch joins the closed form
        let x = 1e-3 / d.omega;
        let (a, _) = d.shift(x * 0.999_999);
        let (b, _) = d.shift(x * 1.000_001);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn sinh_ratio_is_smooth() {
        assert_eq!(sinh_ratio(0.0), 2.0);
        assert!((sinh_ratio(1e-6) - (1.0 - (-2e-6f64).exp()) / 1e-6).abs() < 1e-9);
    }

    #[test]
    fn unshifted_qt_is_orthonormal() {
        assert!((prob_level_qt_shifted(0.0, 0.0, 1, 1e-13).unwrap() - 1.0).abs() < 1e-10);
        assert!(prob_level_qt_shifted(0.0, 0.0, 2, 1e-13).unwrap() < 1e-20);
        assert!(prob_level_qt_shifted(0.0, 0.0, 3, 1e-13).is_err());
    }

    #[test]
    fn g_is_linear_in_momentum() {
        let d = DriveSpec::resonant();
        let t = 1.3;
        let expect = -2.0 * d.amplitude * (d.omega * t).sin() * 0.7;
        assert!((g_value(&d, t, 0.7) - expect).abs() < 1e-15);
    }
}
