//! Sawtooth spectral families for the hydrogen energy ladder and the
//! angular-momentum ladder, and Zeeman support analysis.
//!
//! Units: ħ = μ = κ = 1, so `E_n = −1/(2n²)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Bohr magneton `eħ/2μ` in internal units.
pub const BOHR_MAGNETON: f64 = 0.5;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectralError {
    #[error("energy {0} is in the continuum (x >= 0); only bound states are supported")]
    Continuum(f64),
    #[error("level index must be at least 1")]
    BadLevel,
    #[error("point is at the nucleus (|q| = 0)")]
    Singular,
}

/// Bound-state energy `E_n = −1/(2n²)`.
pub fn energy(n: u64) -> f64 {
    let n = n as f64;
    -0.5 / (n * n)
}

/// Where a negative energy sits on the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interval {
    /// `x < E_1`.
    Tail,
    /// `x ∈ [E_n, E_{n+1})`.
    Between(u64, u64),
}

/// Locates `x` on the ladder using half-open intervals `[E_n, E_{n+1})`.
pub fn locate_interval(x: f64) -> Result<Interval, SpectralError> {
    if !(x < 0.0) {
        return Err(SpectralError::Continuum(x));
    }
    if x < energy(1) {
        return Ok(Interval::Tail);
    }
    let mut n = (1.0 / (-2.0 * x).sqrt()).floor().max(1.0) as u64;
    // correct rounding in the closed form
    while n > 1 && energy(n) > x {
        n -= 1;
    }
    while energy(n + 1) <= x {
        n += 1;
    }
    Ok(Interval::Between(n, n + 1))
}

fn rise(x: f64, lo: f64, hi: f64) -> f64 {
    (x - lo) / (hi - lo)
}

fn fall(x: f64, lo: f64, hi: f64) -> f64 {
    (hi - x) / (hi - lo)
}

/// Energy sawtooth `T_n^H(x)`; `T_1` continues flat-linearly to −∞ and
/// `T_2` goes negative below `E_1`.
pub fn t_h(n: u64, x: f64) -> Result<f64, SpectralError> {
    if n == 0 {
        return Err(SpectralError::BadLevel);
    }
    if !(x < 0.0) {
        return Err(SpectralError::Continuum(x));
    }
    Ok(t_h_unchecked(n, x))
}

/// `t_h` extended by zero to `x ≥ 0`, for integrands that cross into the continuum.
pub fn t_h_or_zero(n: u64, x: f64) -> f64 {
    if x >= 0.0 || n == 0 {
        0.0
    } else {
        t_h_unchecked(n, x)
    }
}

fn t_h_unchecked(n: u64, x: f64) -> f64 {
    let (e1, e2) = (energy(1), energy(2));
    match n {
        1 => {
            if x <= e2 {
                fall(x, e1, e2)
            } else {
                0.0
            }
        }
        2 => {
            let e3 = energy(3);
            if x <= e2 {
                rise(x, e1, e2)
            } else if x <= e3 {
                fall(x, e2, e3)
            } else {
                0.0
            }
        }
        _ => {
            let (lo, mid, hi) = (energy(n - 1), energy(n), energy(n + 1));
            if x <= lo || x >= hi {
                0.0
            } else if x <= mid {
                rise(x, lo, mid)
            } else {
                fall(x, mid, hi)
            }
        }
    }
}

/// The (at most two) members nonzero at `x`, as `(n, T_n(x))`.
pub fn active_levels(x: f64) -> Result<Vec<(u64, f64)>, SpectralError> {
    Ok(match locate_interval(x)? {
        Interval::Tail => vec![(1, t_h_unchecked(1, x)), (2, t_h_unchecked(2, x))],
        Interval::Between(n, m) => vec![(n, t_h_unchecked(n, x)), (m, t_h_unchecked(m, x))],
    })
}

/// Angular-momentum sawtooth: unit triangle of half-width ħ = 1 centred at `m`.
pub fn t_l(m: i64, x: f64) -> f64 {
    (1.0 - (x - m as f64).abs()).max(0.0)
}

/// `|p|²/2 − 1/|q|`.
pub fn hydrogen_energy(point: &[f64; 6]) -> Result<f64, SpectralError> {
    let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
    if r == 0.0 {
        return Err(SpectralError::Singular);
    }
    let p2 = point[3] * point[3] + point[4] * point[4] + point[5] * point[5];
    Ok(0.5 * p2 - 1.0 / r)
}

/// `L_3 = q_1 p_2 − q_2 p_1`.
pub fn l3(point: &[f64; 6]) -> f64 {
    point[0] * point[4] - point[1] * point[3]
}

/// Energy spectral measure density `g_H(E_n; q, p) = T_n^H(H(q, p))`.
pub fn g_h(n: u64, point: &[f64; 6]) -> Result<f64, SpectralError> {
    let h = hydrogen_energy(point)?;
    if n == 0 {
        return Err(SpectralError::BadLevel);
    }
    Ok(t_h_or_zero(n, h))
}

/// Zeeman product measure value and the shifted level `E_n + μ_B B m`.
pub fn g_hb(n: u64, m: i64, point: &[f64; 6], b: f64) -> Result<(f64, f64), SpectralError> {
    let v = g_h(n, point)? * t_l(m, l3(point));
    Ok((v, energy(n) + BOHR_MAGNETON * b * m as f64))
}

/// Outcome of the Zeeman support analysis for one level.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeemanSupport {
    pub n: u64,
    /// `2(n+1)`.
    pub stated_bound: i64,
    /// Largest `|m|` with a phase-space point where both factors are nonzero.
    pub observed_max: i64,
    /// A witness point for `observed_max`.
    pub witness: [f64; 6],
    /// `g_H(E_n) · T_m^L` at the witness; positive.
    pub witness_value: f64,
    /// Largest `|m|` hit by the randomized cross-check.
    pub random_max: i64,
}

/// Supremum of `|L_3|` over the support of `T_n^H`, which is `n + 1`
/// (the support is `H < E_{n+1}`, where `|q||p| < √(−1/(2H))`).
pub fn l3_supremum(n: u64) -> f64 {
    (-0.5 / energy(n + 1)).sqrt()
}

/// Analytic support bound with a constructive witness and a random search cross-check.
pub fn zeeman_support(
    n: u64,
    random_samples: usize,
    seed: u64,
) -> Result<ZeemanSupport, SpectralError> {
    if n == 0 {
        return Err(SpectralError::BadLevel);
    }
    // T_l(m, L3) > 0 needs |L3| > |m| − 1, and |L3| < n + 1 on the support
    let observed_max = n as i64 + 1;
    // witness: circular orbit just below E_{n+1}, r = −1/(2E), |p| = 1/√r
    let e = energy(n + 1) - 1e-9 * (energy(n + 1) - energy(n));
    let r = -1.0 / (2.0 * e);
    let witness = [r, 0.0, 0.0, 0.0, 1.0 / r.sqrt(), 0.0];
    let (witness_value, _) = g_hb(n, observed_max, &witness, 0.0)?;

    // random search over points in the support
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_max = 0i64;
    let e_hi = energy(n + 1);
    let e_lo = if n <= 2 {
        2.0 * energy(1)
    } else {
        energy(n - 1)
    };
    for _ in 0..random_samples {
        let target = rng.gen_range(e_lo..e_hi);
        let r = rng.gen_range(1e-3..(-1.0 / target).max(1e-3));
        let kinetic = target + 1.0 / r;
        if kinetic <= 0.0 {
            continue;
        }
        let pm = (2.0 * kinetic).sqrt();
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let tilt: f64 = rng.gen_range(-1.0f64..1.0);
        let s = (1.0 - tilt * tilt).sqrt();
        let pt = [pm * phi.cos() * s, pm * phi.sin() * s, pm * tilt];
        let point = [r, 0.0, 0.0, pt[0], pt[1], pt[2]];
        let Ok(h) = hydrogen_energy(&point) else {
            continue;
        };
        if t_h_or_zero(n, h) == 0.0 {
            continue;
        }
        let l = l3(&point);
        let m = l.abs().floor() as i64 + 1;
        if t_l(m, l.abs()) > 0.0 {
            random_max = random_max.max(m);
        } else if t_l(m - 1, l.abs()) > 0.0 {
            random_max = random_max.max(m - 1);
        }
    }
    Ok(ZeemanSupport {
        n,
        stated_bound: 2 * (n as i64 + 1),
        observed_max,
        witness,
        witness_value,
        random_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_examples() {
        assert_eq!(locate_interval(-0.2).unwrap(), Interval::Between(1, 2));
        assert_eq!(locate_interval(-0.75).unwrap(), Interval::Tail);
        assert_eq!(
            locate_interval(-1.0 / 32.0).unwrap(),
            Interval::Between(4, 5)
        );
        assert_eq!(locate_interval(-0.5).unwrap(), Interval::Between(1, 2));
        assert!(locate_interval(0.0).is_err());
        for n in 1..2000u64 {
            assert_eq!(
                locate_interval(energy(n)).unwrap(),
                Interval::Between(n, n + 1)
            );
        }
    }

    #[test]
    fn sawtooth_examples() {
        assert_eq!(t_h(1, energy(1)).unwrap(), 1.0);
        assert!((t_h(1, -0.3125).unwrap() - 0.5).abs() < 1e-15);
        assert!((t_h(2, -0.75).unwrap() + 2.0 / 3.0).abs() < 1e-15);
        assert!(t_h(1, 0.0).is_err());
        assert_eq!(t_l(0, 0.0), 1.0);
        assert_eq!(t_l(0, 0.5), 0.5);
        assert_eq!(t_l(2, 3.5), 0.0);
    }

    #[test]
    fn measure_examples() {
        assert_eq!(g_h(1, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!((g_h(2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap() + 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(g_h(3, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(g_h(1, &[0.0; 6]), Err(SpectralError::Singular));
        let (v, e) = g_hb(1, 0, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!((v, e), (1.0, energy(1)));
        let (v, _) = g_hb(1, 7, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn zeeman_examples() {
        let s1 = zeeman_support(1, 20_000, 1).unwrap();
        assert_eq!((s1.stated_bound, s1.observed_max), (4, 2));
        let s3 = zeeman_support(3, 20_000, 1).unwrap();
        assert_eq!(s3.observed_max, 4);
        assert!(s3.random_max <= s3.observed_max);
        assert!(s3.witness_value > 0.0);
        assert!((l3_supremum(3) - 4.0).abs() < 1e-12);
    }
}
