//! Finite-difference evolution of a one-dimensional quasi-density under the
//! generalized bracket truncated at the first correction.
//!
//! Oscillator units `m = ω = ħ = 1`. The Hamiltonian is
//! `p²/2 + q²/2 + λ(t) q⁴/2`, so the generator reads
//! `∂ρ/∂t = −p ∂_q ρ + V′(q) ∂_p ρ + a₁ ħ² V‴(q) ∂³_p ρ`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("grid needs at least 7 points per axis, got {n_q} x {n_p}")]
    GridTooSmall { n_q: usize, n_p: usize },
    #[error("invalid evolution parameters: {0}")]
    InvalidSpec(String),
    #[error("unstable at step {step} (t = {time:.6}): max|rho| = {max_abs:.3e}, initially {initial_max:.3e}")]
    Unstable {
        step: usize,
        time: f64,
        max_abs: f64,
        initial_max: f64,
    },
    #[error("density reached the boundary at t = {time:.6}: ring/max = {ratio:.3e}")]
    BoundaryLeak { time: f64, ratio: f64 },
    #[error("bad field dump: {0}")]
    BadDump(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Default box for the wedge run: wide enough in `p` that the pumped tail
/// stays below 1e−10 of the peak on the boundary.
pub const WEDGE_BOUNDS: [f64; 4] = [-8.0, 8.0, -14.0, 14.0];

/// Uniform node-centred grid on `[q_min, q_max] × [p_min, p_max]`,
/// stored q-major with `p` contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
    pub values: Vec<f64>,
    pub time: f64,
}

const DUMP_MAGIC: &[u8; 8] = b"PSGRID01";

impl PhaseGrid {
    pub fn zeros(bounds: [f64; 4], n_q: usize, n_p: usize) -> Result<Self, DynamicsError> {
        if n_q < 7 || n_p < 7 {
            return Err(DynamicsError::GridTooSmall { n_q, n_p });
        }
        let [q_min, q_max, p_min, p_max] = bounds;
        if !(q_min < q_max && p_min < p_max) || bounds.iter().any(|b| !b.is_finite()) {
            return Err(DynamicsError::InvalidSpec(format!("bounds {bounds:?}")));
        }
        Ok(PhaseGrid {
            q_min,
            q_max,
            p_min,
            p_max,
            n_q,
            n_p,
            values: vec![0.0; n_q * n_p],
            time: 0.0,
        })
    }

    pub fn from_fn(
        bounds: [f64; 4],
        n_q: usize,
        n_p: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, DynamicsError> {
        let mut g = Self::zeros(bounds, n_q, n_p)?;
        for i in 0..n_q {
            let q = g.q(i);
            for j in 0..n_p {
                g.values[i * n_p + j] = f(q, g.p(j));
            }
        }
        Ok(g)
    }

    /// Harmonic-oscillator ground state `exp(−(q² + p²))/π`.
    pub fn ground_state(bounds: [f64; 4], n_q: usize, n_p: usize) -> Result<Self, DynamicsError> {
        Self::from_fn(bounds, n_q, n_p, |q, p| (-(q * q + p * p)).exp() / PI)
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_q - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_p + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|ρ|` on the outermost ring of nodes.
    pub fn boundary_max(&self) -> f64 {
        let (nq, np) = (self.n_q, self.n_p);
        let mut m = 0.0f64;
        for j in 0..np {
            m = m.max(self.at(0, j).abs()).max(self.at(nq - 1, j).abs());
        }
        for i in 0..nq {
            m = m.max(self.at(i, 0).abs()).max(self.at(i, np - 1).abs());
        }
        m
    }

    /// `Σ f(q, p) ρ Δq Δp`, summed row by row in a fixed order.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
        let cell = self.dq() * self.dp();
        let rows: Vec<f64> = (0..self.n_q)
            .into_par_iter()
            .map(|i| {
                let q = self.q(i);
                let row = &self.values[i * self.n_p..(i + 1) * self.n_p];
                row.iter()
                    .enumerate()
                    .map(|(j, v)| f(q, self.p(j)) * v)
                    .sum::<f64>()
            })
            .collect();
        rows.iter().sum::<f64>() * cell
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_, _| 1.0)
    }

    /// Little-endian dump: 8-byte magic `PSGRID01`, `n_q` and `n_p` as u64,
    /// then `q_min, q_max, p_min, p_max, time` and the values (q-major, p fastest) as f64.
    pub fn write_dump(&self, mut w: impl Write) -> Result<(), DynamicsError> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.n_q as u64).to_le_bytes())?;
        w.write_all(&(self.n_p as u64).to_le_bytes())?;
        for v in [self.q_min, self.q_max, self.p_min, self.p_max, self.time] {
            w.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_dump(mut r: impl Read) -> Result<Self, DynamicsError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(DynamicsError::BadDump("wrong magic".into()));
        }
        let mut word = [0u8; 8];
        let mut u64_next = |r: &mut dyn Read| -> Result<u64, DynamicsError> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let n_q = u64_next(&mut r)? as usize;
        let n_p = u64_next(&mut r)? as usize;
        let mut f = [0.0; 5];
        for v in f.iter_mut() {
            *v = f64::from_bits(u64_next(&mut r)?);
        }
        let mut g = Self::zeros([f[0], f[1], f[2], f[3]], n_q, n_p)?;
        g.time = f[4];
        let mut buf = vec![0u8; n_q * n_p * 8];
        r.read_exact(&mut buf)?;
        for (v, chunk) in g.values.iter_mut().zip(buf.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
        Ok(g)
    }
}

/// Time dependence of the quartic coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `λ(t) = peak · Λ(4t/π)` with `Λ(τ) = max(0, 1 − |1 − 2τ|)`.
    Wedge {
        peak: f64,
    },
    Constant {
        lambda: f64,
    },
}

impl Schedule {
    pub fn lambda(&self, t: f64) -> f64 {
        match *self {
            Schedule::Wedge { peak } => {
                let tau = 4.0 * t / PI;
                peak * (1.0 - (1.0 - 2.0 * tau).abs()).max(0.0)
            }
            Schedule::Constant { lambda } => lambda,
        }
    }

    /// Upper bound of `|λ|` over all times.
    pub fn max_abs(&self) -> f64 {
        match *self {
            Schedule::Wedge { peak } => peak.abs(),
            Schedule::Constant { lambda } => lambda.abs(),
        }
    }
}

/// `V′(q) = q + 2λq³`.
pub fn force_gradient(q: f64, lambda: f64) -> f64 {
    q + 2.0 * lambda * q * q * q
}

/// `V‴(q) = 12λq`.
pub fn third_derivative(q: f64, lambda: f64) -> f64 {
    12.0 * lambda * q
}

/// `V(q) = q²/2 + λq⁴/2`.
pub fn potential(q: f64, lambda: f64) -> f64 {
    let q2 = q * q;
    0.5 * q2 + 0.5 * lambda * q2 * q2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepRule {
    /// Fraction of the stable step estimate.
    Cfl {
        factor: f64,
    },
    Fixed {
        dt: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub a1: f64,
    pub hbar: f64,
    pub schedule: Schedule,
    pub t_end: f64,
    pub step: StepRule,
    /// Largest accepted ring/max ratio of `|ρ|` before the run is rejected.
    pub boundary_tol: f64,
}

impl EvolutionSpec {
    /// The quartic wedge run closing at `t = π/4`.
    pub fn wedge(a1: f64) -> Self {
        EvolutionSpec {
            a1,
            hbar: 1.0,
            schedule: Schedule::Wedge { peak: 1.0 / 3.0 },
            t_end: PI / 4.0,
            step: StepRule::Cfl { factor: 0.9 },
            boundary_tol: 1e-10,
        }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        let ok = self.a1.is_finite()
            && self.hbar.is_finite()
            && self.t_end.is_finite()
            && self.t_end >= 0.0;
        let step_ok = match self.step {
            StepRule::Cfl { factor } => factor > 0.0 && factor <= 1.0,
            StepRule::Fixed { dt } => dt > 0.0 && dt.is_finite(),
        };
        if !ok || !step_ok {
            return Err(DynamicsError::InvalidSpec(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Stable RK4 step for the discrete operator: the RK4 imaginary-axis limit
/// (taken as 2.8) over the sum of the symbol maxima of each stencil term.
pub fn stable_dt(grid: &PhaseGrid, spec: &EvolutionSpec) -> f64 {
    let (dq, dp) = (grid.dq(), grid.dp());
    let p_max = grid.p_min.abs().max(grid.p_max.abs());
    let q_max = grid.q_min.abs().max(grid.q_max.abs());
    let lam = spec.schedule.max_abs();
    let vp = q_max + 2.0 * lam * q_max.powi(3);
    let v3 = 12.0 * lam * q_max;
    let c3 = spec.a1.abs() * spec.hbar * spec.hbar;
    let rate = 1.372 * p_max / dq + 1.372 * vp / dp + 2.598 * c3 * v3 / dp.powi(3);
    2.8 / rate
}

/// Zero-padded working layout: two ghost nodes on every side.
struct Padded {
    n_q: usize,
    n_p: usize,
    stride: usize,
    q: Vec<f64>,
    p: Vec<f64>,
    inv12dq: f64,
    inv12dp: f64,
    inv2dp3: f64,
}

impl Padded {
    fn new(g: &PhaseGrid) -> Self {
        let (dq, dp) = (g.dq(), g.dp());
        Padded {
            n_q: g.n_q,
            n_p: g.n_p,
            stride: g.n_p + 4,
            q: (0..g.n_q).map(|i| g.q(i)).collect(),
            p: (0..g.n_p + 4)
                .map(|j| g.p_min + (j as f64 - 2.0) * dp)
                .collect(),
            inv12dq: 1.0 / (12.0 * dq),
            inv12dp: 1.0 / (12.0 * dp),
            inv2dp3: 1.0 / (2.0 * dp * dp * dp),
        }
    }

    fn len(&self) -> usize {
        (self.n_q + 4) * self.stride
    }

    fn pack(&self, g: &PhaseGrid) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for i in 0..self.n_q {
            let dst = (i + 2) * self.stride + 2;
            out[dst..dst + self.n_p].copy_from_slice(&g.values[i * self.n_p..(i + 1) * self.n_p]);
        }
        out
    }

    fn unpack(&self, y: &[f64], g: &mut PhaseGrid) {
        for i in 0..self.n_q {
            let src = (i + 2) * self.stride + 2;
            g.values[i * self.n_p..(i + 1) * self.n_p].copy_from_slice(&y[src..src + self.n_p]);
        }
    }

    /// Writes the generator applied to `y` into the interior of `out`; ghosts stay zero.
    fn apply(&self, y: &[f64], out: &mut [f64], lambda: f64, c3: f64) {
        let s = self.stride;
        let np = self.n_p;
        out[2 * s..(self.n_q + 2) * s]
            .par_chunks_mut(s)
            .enumerate()
            .for_each(|(i, o)| {
                let r = (i + 2) * s;
                let row = |k: usize| &y[k..k + s];
                let (m2, m1, c, p1, p2) = (
                    row(r - 2 * s),
                    row(r - s),
                    row(r),
                    row(r + s),
                    row(r + 2 * s),
                );
                let q = self.q[i];
                let vp = force_gradient(q, lambda);
                let v3 = c3 * third_derivative(q, lambda);
                let pv = &self.p[..];
                for j in 2..np + 2 {
                    let dq = (8.0 * (p1[j] - m1[j]) - (p2[j] - m2[j])) * self.inv12dq;
                    let dp = (8.0 * (c[j + 1] - c[j - 1]) - (c[j + 2] - c[j - 2])) * self.inv12dp;
                    let d3 = (c[j + 2] - 2.0 * c[j + 1] + 2.0 * c[j - 1] - c[j - 2]) * self.inv2dp3;
                    o[j] = -pv[j] * dq + vp * dp + v3 * d3;
                }
            });
    }
}

/// `∂ρ/∂t` at time `t` on the grid nodes (zero outside the domain).
pub fn rhs(grid: &PhaseGrid, spec: &EvolutionSpec, t: f64) -> Vec<f64> {
    let pad = Padded::new(grid);
    let y = pad.pack(grid);
    let mut out = vec![0.0; pad.len()];
    pad.apply(
        &y,
        &mut out,
        spec.schedule.lambda(t),
        spec.a1 * spec.hbar * spec.hbar,
    );
    let mut g = grid.clone();
    pad.unpack(&out, &mut g);
    g.values
}

/// Moments recorded after every step (and at `t = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub t: f64,
    pub mass: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub mean_p2: f64,
    /// `⟨−V′(q, t)⟩`.
    pub mean_force: f64,
    /// `⟨H(t)⟩` with the coupling at the same instant.
    pub energy: f64,
}

fn moments(pad: &Padded, y: &[f64], t: f64, lambda: f64, cell: f64) -> Moments {
    let s = pad.stride;
    let rows: Vec<[f64; 6]> = (0..pad.n_q)
        .into_par_iter()
        .map(|i| {
            let row = &y[(i + 2) * s + 2..(i + 2) * s + 2 + pad.n_p];
            let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for (v, p) in row.iter().zip(&pad.p[2..]) {
                m0 += v;
                m1 += v * p;
                m2 += v * p * p;
            }
            let q = pad.q[i];
            [
                m0,
                q * m0,
                m1,
                m2,
                -force_gradient(q, lambda) * m0,
                potential(q, lambda) * m0,
            ]
        })
        .collect();
    let mut acc = [0.0; 6];
    for r in &rows {
        for k in 0..6 {
            acc[k] += r[k];
        }
    }
    let [m, q, p, p2, f, v] = acc.map(|a| a * cell);
    Moments {
        t,
        mass: m,
        mean_q: q,
        mean_p: p,
        mean_p2: p2,
        mean_force: f,
        energy: 0.5 * p2 + v,
    }
}

#[derive(Debug, Clone)]
pub struct Run {
    pub grid: PhaseGrid,
    pub moments: Vec<Moments>,
    pub dt: f64,
    pub steps: usize,
    /// Largest ring/max ratio of `|ρ|` seen during the run.
    pub boundary_ratio: f64,
}

impl Run {
    pub fn final_moments(&self) -> Moments {
        *self.moments.last().expect("at least the initial moments")
    }

    pub fn mass_drift(&self) -> f64 {
        let m0 = self.moments[0].mass;
        self.moments
            .iter()
            .fold(0.0f64, |d, m| d.max((m.mass - m0).abs()))
    }
}

/// Classic four-stage Runge–Kutta from `grid.time` to `spec.t_end` with a uniform step.
pub fn evolve(grid: &PhaseGrid, spec: &EvolutionSpec) -> Result<Run, DynamicsError> {
    spec.validate()?;
    let span = spec.t_end - grid.time;
    if span < 0.0 {
        return Err(DynamicsError::InvalidSpec(format!(
            "t_end {} before start {}",
            spec.t_end, grid.time
        )));
    }
    let dt_max = match spec.step {
        StepRule::Cfl { factor } => factor * stable_dt(grid, spec),
        StepRule::Fixed { dt } => dt,
    };
    let steps = if span == 0.0 {
        0
    } else {
        (span / dt_max).ceil() as usize
    };
    let dt = if steps == 0 { 0.0 } else { span / steps as f64 };

    let pad = Padded::new(grid);
    let c3 = spec.a1 * spec.hbar * spec.hbar;
    let cell = grid.dq() * grid.dp();
    let initial_max = grid.max_abs();
    let mut y = pad.pack(grid);
    let mut acc = vec![0.0; y.len()];
    let mut tmp = vec![0.0; y.len()];
    let mut k = vec![0.0; y.len()];
    let t0 = grid.time;
    let mut series = Vec::with_capacity(steps + 1);
    series.push(moments(&pad, &y, t0, spec.schedule.lambda(t0), cell));

    let axpy = |dst: &mut [f64], base: &[f64], a: f64, x: &[f64]| {
        dst.par_chunks_mut(4096)
            .zip(base.par_chunks(4096))
            .zip(x.par_chunks(4096))
            .for_each(|((d, b), x)| {
                for ((d, b), x) in d.iter_mut().zip(b).zip(x) {
                    *d = b + a * x;
                }
            });
    };
    let add = |dst: &mut [f64], a: f64, x: &[f64]| {
        dst.par_chunks_mut(4096)
            .zip(x.par_chunks(4096))
            .for_each(|(d, x)| {
                for (d, x) in d.iter_mut().zip(x) {
                    *d += a * x;
                }
            });
    };

    let mut boundary_ratio = 0.0f64;
    for step in 0..steps {
        let t = t0 + step as f64 * dt;
        let (l0, lh, l1) = (
            spec.schedule.lambda(t),
            spec.schedule.lambda(t + 0.5 * dt),
            spec.schedule.lambda(t + dt),
        );
        pad.apply(&y, &mut k, l0, c3);
        axpy(&mut acc, &y, dt / 6.0, &k);
        axpy(&mut tmp, &y, 0.5 * dt, &k);
        pad.apply(&tmp, &mut k, lh, c3);
        add(&mut acc, dt / 3.0, &k);
        axpy(&mut tmp, &y, 0.5 * dt, &k);
        pad.apply(&tmp, &mut k, lh, c3);
        add(&mut acc, dt / 3.0, &k);
        axpy(&mut tmp, &y, dt, &k);
        pad.apply(&tmp, &mut k, l1, c3);
        add(&mut acc, dt / 6.0, &k);
        std::mem::swap(&mut y, &mut acc);

        let now = t0 + (step + 1) as f64 * dt;
        series.push(moments(&pad, &y, now, l1, cell));
        let max_abs = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(max_abs <= 10.0 * initial_max) {
            return Err(DynamicsError::Unstable {
                step: step + 1,
                time: now,
                max_abs,
                initial_max,
            });
        }
        if max_abs > 0.0 {
            let ratio = ring_max(&pad, &y) / max_abs;
            boundary_ratio = boundary_ratio.max(ratio);
            if ratio > spec.boundary_tol {
                return Err(DynamicsError::BoundaryLeak { time: now, ratio });
            }
        }
    }

    let mut out = grid.clone();
    pad.unpack(&y, &mut out);
    out.time = spec.t_end;
    Ok(Run {
        grid: out,
        moments: series,
        dt,
        steps,
        boundary_ratio,
    })
}

fn ring_max(pad: &Padded, y: &[f64]) -> f64 {
    let s = pad.stride;
    let at = |i: usize, j: usize| y[(i + 2) * s + j + 2].abs();
    let mut m = 0.0f64;
    for j in 0..pad.n_p {
        m = m.max(at(0, j)).max(at(pad.n_q - 1, j));
    }
    for i in 0..pad.n_q {
        m = m.max(at(i, 0)).max(at(i, pad.n_p - 1));
    }
    m
}

/// `(max |d⟨q⟩/dt − ⟨p⟩|, max |d⟨p⟩/dt − ⟨F⟩|)` from centred differences of the series.
pub fn ehrenfest_residual(series: &[Moments]) -> (f64, f64) {
    let mut rq = 0.0f64;
    let mut rp = 0.0f64;
    for w in series.windows(3) {
        let dt = w[2].t - w[0].t;
        if dt <= 0.0 {
            continue;
        }
        let dq = (w[2].mean_q - w[0].mean_q) / dt;
        let dp = (w[2].mean_p - w[0].mean_p) / dt;
        rq = rq.max((dq - w[1].mean_p).abs());
        rp = rp.max((dp - w[1].mean_force).abs());
    }
    (rq, rp)
}
