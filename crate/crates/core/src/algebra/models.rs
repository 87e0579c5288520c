//! Stock Hamiltonians and observables, plus stored counterexamples.

use super::expr::PhaseExpr;

fn q(i: usize) -> PhaseExpr {
    PhaseExpr::q(i)
}

fn p(i: usize) -> PhaseExpr {
    PhaseExpr::p(i)
}

/// `|p|²/2 − 1/r` in units with ħ = μ = κ = 1.
pub fn hydrogen() -> PhaseExpr {
    let kinetic = &(&(&p(0).pow(2) + &p(1).pow(2)) + &p(2).pow(2)) * &PhaseExpr::frac(1, 2);
    &kinetic - &PhaseExpr::r_pow(-1)
}

/// `|p|²/(2 mu) − kappa/r` with formal `mu`, `kappa`.
pub fn hydrogen_symbolic() -> PhaseExpr {
    let mu_inv = PhaseExpr::param_pow("mu", -1);
    let kinetic =
        &(&(&p(0).pow(2) + &p(1).pow(2)) + &p(2).pow(2)) * &(&PhaseExpr::frac(1, 2) * &mu_inv);
    &kinetic - &(&PhaseExpr::param("kappa") * &PhaseExpr::r_pow(-1))
}

/// Component `i` (0-based) of `L = q × p`.
pub fn angular_momentum(i: usize) -> PhaseExpr {
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    &(&q(j) * &p(k)) - &(&q(k) * &p(j))
}

/// Component `i` of the Runge–Lenz vector `p × L − q/r` (μκ = 1).
pub fn runge_lenz(i: usize) -> PhaseExpr {
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    let cross = &(&p(j) * &angular_momentum(k)) - &(&p(k) * &angular_momentum(j));
    &cross - &(&q(i) * &PhaseExpr::r_pow(-1))
}

/// One-dimensional anharmonic oscillator
/// `p²/(2m) + m ω² q²/2 + λ m² ω³ q⁴ / (2ħ)` with formal `m`, `omega`, `hbar`.
pub fn anharmonic(lambda: &PhaseExpr) -> PhaseExpr {
    let m = PhaseExpr::param("m");
    let w = PhaseExpr::param("omega");
    let half = PhaseExpr::frac(1, 2);
    let kinetic = &(&p(0).pow(2) * &half) * &m.inverse().expect("monomial");
    let harmonic = &(&(&m * &w.pow(2)) * &half) * &q(0).pow(2);
    let quartic_scale = &(&(&m.pow(2) * &w.pow(3)) * &half) * &PhaseExpr::param_pow("hbar", -1);
    let quartic = &(lambda * &quartic_scale) * &q(0).pow(4);
    &(&kinetic + &harmonic) + &quartic
}

/// A triple for which the truncated-Moyal bracket violates the Jacobi identity.
pub fn jacobi_witness() -> (PhaseExpr, PhaseExpr, PhaseExpr) {
    (p(0).pow(3), &q(0) * &p(0).pow(3), q(0).pow(5))
}

/// A triple `(f, g, h)` with `L_f(gh) ≠ h L_f g + g L_f h` under the Moyal bracket.
pub fn leibniz_witness() -> (PhaseExpr, PhaseExpr, PhaseExpr) {
    (q(0).pow(3), p(0).pow(2), p(0))
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    #[test]
    fn pointwise_values() {
        let none = HashMap::new();
        let h = hydrogen()
            .evaluate(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &none)
            .unwrap();
        assert_eq!(h, -1.0);
        let l3 = angular_momentum(2)
            .evaluate(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], &none)
            .unwrap();
        assert_eq!(l3, 1.0);
        // circular orbit at r = 1: A = 0
        for i in 0..3 {
            let a = runge_lenz(i)
                .evaluate(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], &none)
                .unwrap();
            assert!(a.abs() < 1e-15);
        }
    }
}
