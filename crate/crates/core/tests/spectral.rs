use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phasespace::spectral::{
    active_levels, energy, g_h, hydrogen_energy, l3, l3_supremum, locate_interval, t_h, t_l,
    zeeman_support, Interval,
};

#[test]
fn energy_partition_and_first_moment() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_sum, mut worst_moment) = (0.0f64, 0.0f64);
    for _ in 0..1_000_000 {
        let x = rng.gen_range(2.0 * energy(1)..-1e-6);
        let active = active_levels(x).unwrap();
        let s: f64 = active.iter().map(|(_, t)| t).sum();
        let m: f64 = active.iter().map(|(n, t)| energy(*n) * t).sum();
        worst_sum = worst_sum.max((s - 1.0).abs());
        worst_moment = worst_moment.max((m - x).abs());
    }
    assert!(worst_sum <= 1e-12, "{worst_sum}");
    assert!(worst_moment <= 1e-12, "{worst_moment}");
}

#[test]
fn active_levels_are_the_only_nonzero_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..2000 {
        let x = -rng.gen_range(1e-4f64..1.0).powi(2);
        let active = active_levels(x).unwrap();
        for n in 1..300u64 {
            let v = t_h(n, x).unwrap();
            match active.iter().find(|(k, _)| *k == n) {
                Some((_, t)) => assert_eq!(*t, v),
                None => assert_eq!(v, 0.0, "n={n} x={x}"),
            }
        }
    }
}

#[test]
fn angular_partition_and_first_moment() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1_000_000 {
        let x: f64 = rng.gen_range(-10.0..10.0);
        let lo = x.floor() as i64;
        let (mut s, mut m) = (0.0, 0.0);
        for k in lo - 2..=lo + 2 {
            let t = t_l(k, x);
            assert!(t >= 0.0);
            s += t;
            m += k as f64 * t;
        }
        assert!((s - 1.0).abs() <= 1e-14, "{x}");
        assert!((m - x).abs() <= 1e-14, "{x}");
    }
}

#[test]
fn second_energy_member_negative_exactly_below_ground() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100_000 {
        let x = rng.gen_range(-3.0..-1e-6);
        assert_eq!(t_h(2, x).unwrap() < 0.0, x < energy(1), "{x}");
        for n in [1u64, 3, 4, 7, 40] {
            assert!(t_h(n, x).unwrap() >= 0.0);
        }
    }
    assert_eq!(t_h(2, energy(1)).unwrap(), 0.0);
}

#[test]
fn interval_brackets_the_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100_000 {
        let x = -rng.gen_range(1e-7f64..1.0);
        match locate_interval(x).unwrap() {
            Interval::Tail => assert!(x < energy(1)),
            Interval::Between(n, m) => {
                assert_eq!(m, n + 1);
                assert!(energy(n) <= x && x < energy(m), "{x} -> {n}");
            }
        }
    }
}

fn poisson_numeric(f: impl Fn(&[f64; 6]) -> f64, x: &[f64; 6], h: f64) -> f64 {
    let d = |i: usize, g: &dyn Fn(&[f64; 6]) -> f64| {
        let (mut a, mut b) = (*x, *x);
        a[i] += h;
        b[i] -= h;
        (g(&a) - g(&b)) / (2.0 * h)
    };
    let ham = |y: &[f64; 6]| hydrogen_energy(y).unwrap();
    (0..3)
        .map(|i| d(i, &ham) * d(i + 3, &f) - d(i + 3, &ham) * d(i, &f))
        .sum()
}

#[test]
fn energy_measure_is_poisson_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    while checked < 2000 {
        let x: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let h = hydrogen_energy(&x).unwrap();
        let Ok(active) = active_levels(h) else {
            continue;
        };
        // keep away from the kinks
        let near_node = (1..200u64).any(|n| (h - energy(n)).abs() < 1e-3);
        if near_node {
            continue;
        }
        for (n, _) in active {
            let pb = poisson_numeric(|y| g_h(n, y).unwrap(), &x, 1e-5);
            let scale = poisson_numeric(|y| hydrogen_energy(y).unwrap().powi(2), &x, 1e-5)
                .abs()
                .max(1.0);
            assert!(pb.abs() <= 1e-6 * scale, "n={n} {x:?}: {pb}");
        }
        checked += 1;
    }
}

#[test]
fn zeeman_support_for_low_levels() {
    for n in 1..=4u64 {
        let s = zeeman_support(n, 200_000, 40 + n).unwrap();
        assert_eq!(s.stated_bound, 2 * (n as i64 + 1));
        assert_eq!(s.observed_max, n as i64 + 1);
        assert!(s.observed_max <= s.stated_bound);
        assert!(s.witness_value > 0.0);
        assert!(s.random_max <= s.observed_max);
        assert!(s.random_max >= n as i64, "n={n}: {}", s.random_max);
        let witness_l = l3(&s.witness);
        assert!(witness_l < l3_supremum(n) && witness_l > n as f64);
    }
}

#[test]
fn zeeman_grid_finds_nothing_beyond_the_oracle() {
    // planar grid: for fixed |q| and energy, |L3| is largest with p orthogonal to q in the 1-2 plane
    for n in 1..=4u64 {
        let sup = l3_supremum(n);
        let mut largest = 0.0f64;
        let lo = if n <= 2 {
            2.0 * energy(1)
        } else {
            energy(n - 1)
        };
        let hi = energy(n + 1);
        for i in 0..400 {
            let e = lo + (hi - lo) * (i as f64 + 0.5) / 400.0;
            for j in 1..400 {
                let r = (-1.0 / e) * j as f64 / 400.0;
                let kinetic = e + 1.0 / r;
                if kinetic <= 0.0 {
                    continue;
                }
                let pt = (2.0 * kinetic).sqrt();
                let point = [r, 0.0, 0.0, 0.0, pt, 0.0];
                if g_h(n, &point).unwrap() != 0.0 {
                    largest = largest.max(l3(&point).abs());
                }
            }
        }
        assert!(
            largest < sup && largest > sup - 0.05,
            "n={n}: {largest} vs {sup}"
        );
        let m_max = (largest.floor() as i64) + 1;
        assert_eq!(m_max, n as i64 + 1);
        for m in m_max + 1..=2 * (n as i64 + 1) + 2 {
            assert_eq!(t_l(m, largest), 0.0);
        }
    }
}
