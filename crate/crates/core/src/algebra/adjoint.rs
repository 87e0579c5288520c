//! Numeric skew-adjointness of `L_h` on Gaussian-enveloped test functions.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::bracket::{liouvillian, BracketSpec, Operand};
use super::expr::{PhaseExpr, Var};
use super::AlgebraError;
use crate::quad::{integrate, QuadOptions};

/// `poly(q, p) · exp(−α (q − q0)² − β (p − p0)²)` on a single degree of freedom.
///
/// The class is closed under differentiation, so `L_h` of a test function is
/// again a test function with the same envelope and is computed exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFn {
    pub poly: PhaseExpr,
    pub alpha: BigRational,
    pub beta: BigRational,
    pub q0: BigRational,
    pub p0: BigRational,
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

impl TestFn {
    pub fn new(poly: PhaseExpr, alpha: f64, beta: f64, q0: f64, p0: f64) -> Self {
        TestFn {
            poly,
            alpha: exact(alpha),
            beta: exact(beta),
            q0: exact(q0),
            p0: exact(p0),
        }
    }

    /// `exp(−(q² + p²)/2)`.
    pub fn unit_gaussian() -> Self {
        TestFn::new(PhaseExpr::one(), 0.5, 0.5, 0.0, 0.0)
    }

    fn same_envelope(&self, other: &TestFn) -> bool {
        self.alpha == other.alpha
            && self.beta == other.beta
            && self.q0 == other.q0
            && self.p0 == other.p0
    }

    fn envelope_f64(&self) -> [f64; 4] {
        [
            self.alpha.to_f64().unwrap_or(f64::NAN),
            self.beta.to_f64().unwrap_or(f64::NAN),
            self.q0.to_f64().unwrap_or(f64::NAN),
            self.p0.to_f64().unwrap_or(f64::NAN),
        ]
    }
}

impl Operand for TestFn {
    fn partial(&self, v: Var) -> Self {
        let poly = match v {
            Var::Q(0) => {
                let shift = &PhaseExpr::q(0) - &PhaseExpr::rational(self.q0.clone());
                let w = &PhaseExpr::rational(-(&self.alpha * BigRational::from_integer(2.into())))
                    * &shift;
                &self.poly.partial(v) + &(&w * &self.poly)
            }
            Var::P(0) => {
                let shift = &PhaseExpr::p(0) - &PhaseExpr::rational(self.p0.clone());
                let w = &PhaseExpr::rational(-(&self.beta * BigRational::from_integer(2.into())))
                    * &shift;
                &self.poly.partial(v) + &(&w * &self.poly)
            }
            _ => self.poly.partial(v),
        };
        TestFn {
            poly,
            ..self.clone()
        }
    }

    fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    fn zero() -> Self {
        TestFn::new(PhaseExpr::zero(), 0.0, 0.0, 0.0, 0.0)
    }

    fn times(&self, left: &PhaseExpr, c: &PhaseExpr) -> Self {
        TestFn {
            poly: &(left * &self.poly) * c,
            ..self.clone()
        }
    }

    fn accumulate(&mut self, other: &Self) {
        if other.is_zero() {
            return;
        }
        if self.is_zero() {
            *self = other.clone();
            return;
        }
        assert!(self.same_envelope(other), "test-function envelopes differ");
        self.poly += &other.poly;
    }

    fn total_degree(&self) -> Option<u32> {
        None
    }
    fn p_total_degree(&self) -> Option<u32> {
        None
    }
    fn q_degrees(&self) -> Option<[u32; 3]> {
        None
    }
    fn p_degrees(&self) -> Option<[u32; 3]> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdjointReport {
    /// `|∫ f L_h g + ∫ (L_h f) g|`.
    pub residual: f64,
    /// `∫ f L_h g`, for scale.
    pub forward: f64,
    /// Combined quadrature error estimate.
    pub error: f64,
}

/// Checks `∫ f (L_h g) = −∫ (L_h f) g` by 2D quadrature.
///
/// `h` may only involve `q1`, `p1` and parameters; parameters are bound by
/// `params`.
pub fn adjointness_check(
    h: &PhaseExpr,
    f: &TestFn,
    g: &TestFn,
    spec: &BracketSpec,
    params: &HashMap<String, f64>,
) -> Result<AdjointReport, AlgebraError> {
    for t in [f, g] {
        if !t.alpha.is_positive() || !t.beta.is_positive() {
            return Err(AlgebraError::NonDecaying(format!(
                "envelope widths must be positive (alpha = {}, beta = {})",
                t.alpha, t.beta
            )));
        }
    }
    let lg = liouvillian(h, g, spec);
    let lf = liouvillian(h, f, spec);
    if lg.is_zero() && lf.is_zero() {
        return Ok(AdjointReport {
            residual: 0.0,
            forward: 0.0,
            error: 0.0,
        });
    }

    let fp = f.poly.compile(params)?;
    let gp = g.poly.compile(params)?;
    let lfp = lf.poly.compile(params)?;
    let lgp = lg.poly.compile(params)?;
    let ef = f.envelope_f64();
    let eg = g.envelope_f64();
    let env = |e: &[f64; 4], q: f64, p: f64| {
        (-e[0] * (q - e[2]).powi(2) - e[1] * (p - e[3]).powi(2)).exp()
    };

    // combined envelope exp(−A (q − qc)² − B (p − pc)² + const)
    let a = ef[0] + eg[0];
    let b = ef[1] + eg[1];
    let qc = (ef[0] * ef[2] + eg[0] * eg[2]) / a;
    let pc = (ef[1] * ef[3] + eg[1] * eg[3]) / b;
    let (wq, wp) = (12.0 / a.sqrt(), 12.0 / b.sqrt());
    let (q_lo, q_hi, p_lo, p_hi) = (qc - wq, qc + wq, pc - wp, pc + wp);

    let pair = |q: f64, p: f64| {
        let x = [q, 0.0, 0.0, p, 0.0, 0.0];
        let e = env(&ef, q, p) * env(&eg, q, p);
        let fwd = fp.eval(&x) * lgp.eval(&x) * e;
        let bwd = lfp.eval(&x) * gp.eval(&x) * e;
        (fwd, bwd)
    };

    // the polynomial factors must not overwhelm the envelope at the box edge
    let mut edge = 0.0f64;
    let mut bulk = 0.0f64;
    for i in 0..=64 {
        let s = i as f64 / 64.0;
        let qs = q_lo + s * (q_hi - q_lo);
        let ps = p_lo + s * (p_hi - p_lo);
        for (q, p) in [(qs, p_lo), (qs, p_hi), (q_lo, ps), (q_hi, ps)] {
            let (u, v) = pair(q, p);
            edge = edge.max(u.abs() + v.abs());
        }
        for j in 0..=8 {
            let (u, v) = pair(qc + (s - 0.5) * wq, pc + (j as f64 / 8.0 - 0.5) * wp);
            bulk = bulk.max(u.abs() + v.abs());
        }
    }
    if !(edge <= 1e-14 * bulk.max(f64::MIN_POSITIVE)) {
        return Err(AlgebraError::NonDecaying(format!(
            "integrand at the truncation boundary is {edge:.3e} against bulk {bulk:.3e}"
        )));
    }

    let opts = QuadOptions::new(1e-13, 1e-12);
    let mut err_total = 0.0;
    let outer = |which: usize, err_total: &mut f64| -> Result<f64, AlgebraError> {
        let mut inner_err = 0.0;
        let est = integrate(
            |q| {
                let r = integrate(
                    |p| {
                        let (u, v) = pair(q, p);
                        match which {
                            0 => u,
                            1 => v,
                            _ => u + v,
                        }
                    },
                    p_lo,
                    p_hi,
                    &[pc],
                    opts,
                );
                match r {
                    Ok(e) => {
                        inner_err += e.error;
                        e.value
                    }
                    Err(_) => f64::NAN,
                }
            },
            q_lo,
            q_hi,
            &[qc],
            opts,
        )
        .map_err(|e| AlgebraError::Quadrature(e.to_string()))?;
        if !est.value.is_finite() {
            return Err(AlgebraError::Quadrature(
                "inner integral did not converge".into(),
            ));
        }
        *err_total += est.error + inner_err / est.evaluations.max(1) as f64;
        Ok(est.value)
    };
    let forward = outer(0, &mut err_total)?;
    let sum = outer(2, &mut err_total)?;
    Ok(AdjointReport {
        residual: sum.abs(),
        forward,
        error: err_total,
    })
}
