use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use phasespace::dynamics::{
    ehrenfest_residual, evolve, rhs, DynamicsError, EvolutionSpec, PhaseGrid, Schedule, StepRule,
    WEDGE_BOUNDS,
};

/// Gauss–Hermite nodes and weights for the weight `exp(−x²)` by Newton iteration.
fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    let mut z = 0.0f64;
    let nf = n as f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.into_iter().zip(w).collect()
}

fn wedge_lambda(t: f64) -> f64 {
    Schedule::Wedge { peak: 1.0 / 3.0 }.lambda(t)
}

/// Classical ⟨p²⟩(π/4) by transporting Gauss–Hermite nodes along Hamilton's equations.
fn classical_oracle() -> f64 {
    let rule = gauss_hermite(80);
    let steps = 8000;
    let h = PI / 4.0 / steps as f64;
    let acc = |q: f64, t: f64| -(q + 2.0 * wedge_lambda(t) * q * q * q);
    let mut total = 0.0;
    for &(q0, wq) in &rule {
        for &(p0, wp) in &rule {
            let (mut q, mut p) = (q0, p0);
            for s in 0..steps {
                let t = s as f64 * h;
                let (k1q, k1p) = (p, acc(q, t));
                let (k2q, k2p) = (p + 0.5 * h * k1p, acc(q + 0.5 * h * k1q, t + 0.5 * h));
                let (k3q, k3p) = (p + 0.5 * h * k2p, acc(q + 0.5 * h * k2q, t + 0.5 * h));
                let (k4q, k4p) = (p + h * k3p, acc(q + h * k3q, t + h));
                q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
                p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            }
            total += wq * wp * p * p;
        }
    }
    total / PI
}

/// Quantum ⟨p²⟩(π/4) from a split-step Fourier solution of the Schrödinger equation.
/// For a quartic potential the Wigner flow is exactly the a₁ = −1/24 truncation.
fn schrodinger_oracle() -> f64 {
    let n = 2048;
    let l = 14.0;
    let dx = 2.0 * l / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| -l + i as f64 * dx).collect();
    let ks: Vec<f64> = (0..n)
        .map(|i| {
            let m = if i < n / 2 {
                i as f64
            } else {
                i as f64 - n as f64
            };
            2.0 * PI * m / (2.0 * l)
        })
        .collect();
    let mut psi: Vec<Complex64> = xs
        .iter()
        .map(|x| Complex64::new(PI.powf(-0.25) * (-x * x / 2.0).exp(), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let steps = 20000;
    let dt = PI / 4.0 / steps as f64;
    let half_kin: Vec<Complex64> = ks
        .iter()
        .map(|k| Complex64::from_polar(1.0, -0.25 * k * k * dt))
        .collect();
    let scale = 1.0 / n as f64;
    for s in 0..steps {
        fwd.process(&mut psi);
        for (v, k) in psi.iter_mut().zip(&half_kin) {
            *v *= k;
        }
        inv.process(&mut psi);
        let lam = wedge_lambda((s as f64 + 0.5) * dt);
        for (v, x) in psi.iter_mut().zip(&xs) {
            let pot = 0.5 * x * x + 0.5 * lam * x.powi(4);
            *v *= Complex64::from_polar(scale, -pot * dt);
        }
        fwd.process(&mut psi);
        for (v, k) in psi.iter_mut().zip(&half_kin) {
            *v *= k;
        }
        inv.process(&mut psi);
        for v in psi.iter_mut() {
            *v *= scale;
        }
    }
    fwd.process(&mut psi);
    let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
    psi.iter()
        .zip(&ks)
        .map(|(v, k)| v.norm_sqr() * k * k)
        .sum::<f64>()
        / norm
}

fn wedge_run(n: usize, a1: f64) -> phasespace::dynamics::Run {
    let g = PhaseGrid::ground_state(WEDGE_BOUNDS, n, n).unwrap();
    // coarse grids shed dispersive ripples above the 1e-10 ring bound
    let boundary_tol = if n >= 256 { 1e-10 } else { 1e-6 };
    evolve(
        &g,
        &EvolutionSpec {
            boundary_tol,
            ..EvolutionSpec::wedge(a1)
        },
    )
    .unwrap()
}

#[test]
fn gauss_hermite_rule_is_exact_on_moments() {
    let rule = gauss_hermite(80);
    let m0: f64 = rule.iter().map(|(_, w)| w).sum();
    let m4: f64 = rule.iter().map(|(x, w)| w * x.powi(4)).sum();
    assert!((m0 - PI.sqrt()).abs() < 1e-13);
    assert!((m4 - 0.75 * PI.sqrt()).abs() < 1e-12);
}

#[test]
fn classical_variance_matches_characteristics() {
    let run = wedge_run(256, 0.0);
    let oracle = classical_oracle();
    let got = run.final_moments().mean_p2;
    assert!((got - oracle).abs() < 1e-4, "{got} vs {oracle}");
    assert!((got - 0.6795).abs() < 0.005);
    assert!(run.mass_drift() <= 1e-6);
    assert!(run.boundary_ratio <= 1e-10);
}

#[test]
fn quantum_variance_matches_schrodinger() {
    let run = wedge_run(256, -1.0 / 24.0);
    let oracle = schrodinger_oracle();
    let got = run.final_moments().mean_p2;
    assert!((got - oracle).abs() < 1e-4, "{got} vs {oracle}");
    let (rq, rp) = ehrenfest_residual(&run.moments);
    assert!(rq <= 1e-3 && rp <= 1e-3, "{rq} {rp}");
}

#[test]
fn response_is_affine_in_a1() {
    let a = [0.0, -1.0 / 48.0, -1.0 / 24.0, -1.0 / 12.0];
    let v: Vec<f64> = a
        .iter()
        .map(|&a1| wedge_run(192, a1).final_moments().mean_p2)
        .collect();
    let slope = (v[3] - v[0]) / (a[3] - a[0]);
    for k in 1..3 {
        let line = v[0] + slope * a[k];
        assert!((v[k] - line).abs() <= 1e-3, "{v:?}");
    }
    assert!((slope - 0.0823).abs() <= 0.1 * 0.0823, "{slope}");
}

#[test]
fn grid_refinement_is_converged() {
    let coarse = wedge_run(128, -1.0 / 24.0).final_moments().mean_p2;
    let fine = wedge_run(256, -1.0 / 24.0).final_moments().mean_p2;
    assert!((coarse - fine).abs() <= 2e-3, "{coarse} {fine}");
}

#[test]
fn energy_conserved_for_constant_coupling() {
    let g = PhaseGrid::from_fn(WEDGE_BOUNDS, 128, 160, |q, p| {
        (-(q - 0.7).powi(2) - (p + 0.2).powi(2)).exp() / PI
    })
    .unwrap();
    let spec = EvolutionSpec {
        schedule: Schedule::Constant { lambda: 0.15 },
        t_end: 0.6,
        boundary_tol: 1e-6,
        ..EvolutionSpec::wedge(-1.0 / 24.0)
    };
    let run = evolve(&g, &spec).unwrap();
    let e0 = run.moments[0].energy;
    let drift = run
        .moments
        .iter()
        .fold(0.0f64, |d, m| d.max((m.energy - e0).abs()));
    assert!(drift <= 1e-8 * e0.abs(), "{drift}");
}

#[test]
fn evolution_is_linear() {
    let f1 = |q: f64, p: f64| (-(q - 0.5).powi(2) - p * p).exp();
    let f2 = |q: f64, p: f64| (-(q + 0.3).powi(2) - 2.0 * (p - 0.4).powi(2)).exp() * (1.0 - q);
    let (n_q, n_p) = (64, 96);
    let spec = EvolutionSpec {
        t_end: 0.3,
        ..EvolutionSpec::wedge(-1.0 / 24.0)
    };
    let g1 = PhaseGrid::from_fn(WEDGE_BOUNDS, n_q, n_p, f1).unwrap();
    let g2 = PhaseGrid::from_fn(WEDGE_BOUNDS, n_q, n_p, f2).unwrap();
    let mix = PhaseGrid::from_fn(WEDGE_BOUNDS, n_q, n_p, |q, p| {
        2.0 * f1(q, p) - 0.5 * f2(q, p)
    })
    .unwrap();
    let (r1, r2, rm) = (
        evolve(&g1, &spec).unwrap(),
        evolve(&g2, &spec).unwrap(),
        evolve(&mix, &spec).unwrap(),
    );
    let worst = rm
        .grid
        .values
        .iter()
        .zip(r1.grid.values.iter().zip(&r2.grid.values))
        .fold(0.0f64, |m, (v, (a, b))| {
            m.max((v - (2.0 * a - 0.5 * b)).abs())
        });
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn harmonic_ground_state_has_vanishing_residuals() {
    let g = PhaseGrid::ground_state(WEDGE_BOUNDS, 96, 128).unwrap();
    let spec = EvolutionSpec {
        schedule: Schedule::Constant { lambda: 0.0 },
        t_end: 0.5,
        ..EvolutionSpec::wedge(0.0)
    };
    let run = evolve(&g, &spec).unwrap();
    let (rq, rp) = ehrenfest_residual(&run.moments);
    assert!(rq <= 1e-4 && rp <= 1e-4);
    let m = run.final_moments();
    assert!(m.mean_q.abs() < 1e-12 && m.mean_p.abs() < 1e-12);
    assert!((m.mean_p2 - 0.5).abs() < 1e-6);
}

#[test]
fn pure_advection_when_a1_vanishes() {
    let g = PhaseGrid::from_fn(WEDGE_BOUNDS, 64, 64, |q, p| {
        (-(q * q) - 2.0 * (p - 0.5).powi(2)).exp()
    })
    .unwrap();
    let spec = EvolutionSpec {
        schedule: Schedule::Constant { lambda: 0.3 },
        ..EvolutionSpec::wedge(0.0)
    };
    let r = rhs(&g, &spec, 0.0);
    let (dq, dp) = (g.dq(), g.dp());
    for i in 3..61 {
        for j in 3..61 {
            let d1q = (8.0 * (g.at(i + 1, j) - g.at(i - 1, j)) - (g.at(i + 2, j) - g.at(i - 2, j)))
                / (12.0 * dq);
            let d1p = (8.0 * (g.at(i, j + 1) - g.at(i, j - 1)) - (g.at(i, j + 2) - g.at(i, j - 2)))
                / (12.0 * dp);
            let q = g.q(i);
            let expect = -g.p(j) * d1q + (q + 0.6 * q.powi(3)) * d1p;
            assert!((r[i * 64 + j] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }
}

#[test]
fn oversized_step_is_reported_unstable() {
    let g = PhaseGrid::ground_state(WEDGE_BOUNDS, 64, 64).unwrap();
    let spec = EvolutionSpec {
        step: StepRule::Fixed { dt: 0.02 },
        boundary_tol: 1.0,
        ..EvolutionSpec::wedge(-1.0 / 24.0)
    };
    assert!(matches!(
        evolve(&g, &spec),
        Err(DynamicsError::Unstable { .. })
    ));
}

#[test]
fn narrow_box_is_rejected_for_boundary_leak() {
    let g = PhaseGrid::ground_state([-8.0, 8.0, -8.0, 8.0], 128, 128).unwrap();
    assert!(matches!(
        evolve(&g, &EvolutionSpec::wedge(0.0)),
        Err(DynamicsError::BoundaryLeak { .. })
    ));
}
