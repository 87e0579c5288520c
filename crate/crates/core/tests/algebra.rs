use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use phasespace::algebra::models::{
    angular_momentum, anharmonic, hydrogen, jacobi_witness, leibniz_witness, runge_lenz,
};
use phasespace::algebra::{
    check_zero_orderwise, d_omega_pow, gmb, liouvillian_product, parse, poisson, BracketSpec,
    PhaseExpr,
};
use proptest::prelude::*;

fn q() -> PhaseExpr {
    PhaseExpr::q(0)
}
fn p() -> PhaseExpr {
    PhaseExpr::p(0)
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::from(1), |a, b| a * BigInt::from(b))
}

#[test]
fn hydrogen_invariants_conserved_orderwise() {
    let start = Instant::now();
    let h = hydrogen();
    let mut observables = vec![h.clone()];
    for i in 0..3 {
        observables.push(angular_momentum(i));
        observables.push(runge_lenz(i));
    }
    for g in &observables {
        let checks = check_zero_orderwise(&h, g, 3);
        assert_eq!(
            checks.iter().map(|c| c.0).collect::<Vec<_>>(),
            vec![1, 3, 5, 7]
        );
        assert!(checks.iter().all(|c| c.1), "{g}: {checks:?}");
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn runge_lenz_conservation_is_a_cancellation() {
    let a = runge_lenz(0);
    let kinetic = parse("(p1^2 + p2^2 + p3^2)/2").unwrap();
    let coulomb = -PhaseExpr::r_pow(-1);
    let k = poisson(&kinetic, &a);
    assert!(!k.is_zero());
    assert_eq!(poisson(&coulomb, &a), -k);
    assert!(check_zero_orderwise(&hydrogen(), &(&q() * &q()), 1)
        .iter()
        .any(|c| !c.1));
}

#[test]
fn qp_power_identity() {
    for n in 1..=4u32 {
        let f = (&q() * &p()).pow(n);
        let lhs = d_omega_pow(&f, &f, 2 * n);
        let sign = if n % 2 == 0 { 1 } else { -1 };
        let nf = factorial(n as u64);
        let rhs = BigInt::from(sign) * factorial(2 * n as u64) * &nf * &nf;
        assert_eq!(
            lhs,
            PhaseExpr::rational(BigRational::from_integer(rhs)),
            "n = {n}"
        );
    }
}

#[test]
fn qn_pn1_closed_form() {
    for n in 1..=3u32 {
        let f = &q().pow(n) * &p().pow(n + 1);
        let g = &q().pow(2 * n) * &p().pow(2 * n + 2);
        let lhs = d_omega_pow(&f, &g, 2 * n + 1);
        let n64 = n as u64;
        let num = factorial(2 * n64) * factorial(2 * n64 + 1) * factorial(2 * n64 + 2);
        let den = factorial(n64 - 1) * factorial(n64 + 2);
        let sign = if (n + 1) % 2 == 0 { 1 } else { -1 };
        let c = BigRational::new(BigInt::from(sign) * num, den);
        let rhs = &PhaseExpr::rational(c) * &(&q().pow(n - 1) * &p().pow(n + 2));
        assert_eq!(lhs, rhs, "n = {n}");
    }
}

#[test]
fn cubic_order_example() {
    let f = parse("q1*p1^2").unwrap();
    let g = parse("q1^2*p1^4").unwrap();
    let checks = check_zero_orderwise(&f, &g, 1);
    assert_eq!(checks, vec![(1, true), (3, false)]);
    assert_eq!(d_omega_pow(&f, &g, 3), &PhaseExpr::int(48) * &p().pow(3));
}

#[test]
fn five_step_product_coefficient() {
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
    let spec = BracketSpec::symbolic(1);
    let out = liouvillian_product(&steps, &p().pow(2), &spec);
    let a1_part = out.coefficient_of(&[
        ("a1", 1),
        ("lambda1", 1),
        ("lambda4", 1),
        ("t", 4),
        ("n", -4),
    ]);
    let expect = &PhaseExpr::int(1728)
        * &(&PhaseExpr::param("m").pow(2) * &PhaseExpr::param("omega").pow(6));
    let term = extract_q_power(&a1_part, 2);
    assert_eq!(term, expect, "full a1 λ1 λ4 part: {a1_part}");
    // a1 does not enter before the fifth step
    let four = liouvillian_product(&steps[1..], &p().pow(2), &spec);
    assert!(four.coefficient_of(&[("a1", 1)]).is_zero());
}

/// Coefficient of `q1^k` (no `p`) in a polynomial expression.
fn extract_q_power(e: &PhaseExpr, k: u32) -> PhaseExpr {
    let mut out = PhaseExpr::zero();
    for t in e.term_list() {
        if t.q == [k, 0, 0] && t.p == [0, 0, 0] && t.rpow == 0 {
            let mut single = PhaseExpr::rational(t.coeff.parse().unwrap());
            for (name, e) in &t.params {
                single = &single * &PhaseExpr::param_pow(name, *e);
            }
            out += &single;
        }
    }
    out
}

#[test]
fn jacobi_fails_for_truncated_moyal() {
    let spec = BracketSpec::custom(
        vec![BigRational::new((-1).into(), 24.into())],
        PhaseExpr::one(),
    );
    let (f, g, h) = jacobi_witness();
    let b = |x: &PhaseExpr, y: &PhaseExpr| gmb(x, y, &spec).value;
    let jac = &(&b(&f, &b(&g, &h)) + &b(&g, &b(&h, &f))) + &b(&h, &b(&f, &g));
    assert_eq!(jac, PhaseExpr::frac(45, 2));
    // the full Moyal bracket satisfies it on the same triple
    let moyal = BracketSpec::moyal(4, PhaseExpr::one());
    let m = |x: &PhaseExpr, y: &PhaseExpr| gmb(x, y, &moyal).value;
    let jac_m = &(&m(&f, &m(&g, &h)) + &m(&g, &m(&h, &f))) + &m(&h, &m(&f, &g));
    assert!(jac_m.is_zero());
}

#[test]
fn leibniz_fails_for_moyal() {
    let spec = BracketSpec::moyal(3, PhaseExpr::param("hbar"));
    let (f, g, h) = leibniz_witness();
    let lhs = gmb(&f, &(&g * &h), &spec).value;
    let rhs = &(&h * &gmb(&f, &g, &spec).value) + &(&g * &gmb(&f, &h, &spec).value);
    let diff = &lhs - &rhs;
    assert_eq!(
        diff,
        &PhaseExpr::frac(-3, 2) * &PhaseExpr::param("hbar").pow(2)
    );
}

#[test]
fn hydrogen_evaluations() {
    let none = HashMap::new();
    assert_eq!(
        hydrogen()
            .evaluate(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &none)
            .unwrap(),
        -1.0
    );
    assert!(
        (PhaseExpr::r_pow(-1)
            .evaluate(&[3.0, 4.0, 0.0, 0.0, 0.0, 0.0], &none)
            .unwrap()
            - 0.2)
            .abs()
            < 1e-16
    );
}

#[test]
fn golden_json() {
    let e = parse("q1^2*p3 - 2/3*r^-1").unwrap();
    let j = e.to_json();
    let expect = serde_json::json!({"terms": [
        {"coeff": "1", "params": {}, "q": [2, 0, 0], "p": [0, 0, 1], "rpow": 0},
        {"coeff": "-2/3", "params": {}, "q": [0, 0, 0], "p": [0, 0, 0], "rpow": -1}
    ]});
    assert_eq!(j, expect);
    assert_eq!(PhaseExpr::from_json(&j).unwrap(), e);
}

fn monomial_strategy() -> impl Strategy<Value = PhaseExpr> {
    (-5i64..=5, 1i64..=4, prop::array::uniform6(0u32..=3)).prop_map(|(n, d, e)| {
        let mut m = PhaseExpr::frac(n, d);
        for (i, &k) in e.iter().enumerate() {
            let v = if i < 3 {
                PhaseExpr::q(i)
            } else {
                PhaseExpr::p(i - 3)
            };
            m = &m * &v.pow(k);
        }
        m
    })
}

fn poly_strategy() -> impl Strategy<Value = PhaseExpr> {
    prop::collection::vec(monomial_strategy(), 1..4)
        .prop_map(|v| v.iter().fold(PhaseExpr::zero(), |a, b| &a + b))
}

/// Random rational expression in r with a polynomial cofactor.
fn radial_strategy() -> impl Strategy<Value = PhaseExpr> {
    (poly_strategy(), -3i32..=3).prop_map(|(p, e)| &p * &PhaseExpr::r_pow(e))
}

fn second_order_strategy() -> impl Strategy<Value = PhaseExpr> {
    prop::collection::vec((-3i64..=3, 0usize..6, 0usize..7), 1..5).prop_map(|v| {
        let vars = |i: usize| {
            if i < 3 {
                PhaseExpr::q(i)
            } else {
                PhaseExpr::p(i - 3)
            }
        };
        v.into_iter().fold(PhaseExpr::zero(), |acc, (c, i, j)| {
            let mut t = &PhaseExpr::int(c) * &vars(i);
            if j < 6 {
                t = &t * &vars(j);
            }
            &acc + &t
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bilinearity(f1 in poly_strategy(), f2 in radial_strategy(), g in poly_strategy(), a in -4i64..4, b in -4i64..4) {
        let spec = BracketSpec::symbolic(2);
        let lhs = gmb(&(&(&PhaseExpr::int(a) * &f1) + &(&PhaseExpr::int(b) * &f2)), &g, &spec).value;
        let rhs = &(&PhaseExpr::int(a) * &gmb(&f1, &g, &spec).value) + &(&PhaseExpr::int(b) * &gmb(&f2, &g, &spec).value);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn parity(f in radial_strategy(), g in poly_strategy(), k in 0u32..5) {
        let fg = d_omega_pow(&f, &g, k);
        let gf = d_omega_pow(&g, &f, k);
        if k % 2 == 0 {
            prop_assert_eq!(fg, gf);
        } else {
            prop_assert_eq!(fg, -gf);
        }
    }

    #[test]
    fn self_bracket_vanishes(f in radial_strategy()) {
        prop_assert!(gmb(&f, &f, &BracketSpec::symbolic(2)).value.is_zero());
    }

    #[test]
    fn second_order_reduces_to_poisson(f in radial_strategy(), p2 in second_order_strategy()) {
        let spec = BracketSpec::symbolic(3);
        let v = gmb(&f, &p2, &spec);
        prop_assert_eq!(&v.value, &poisson(&f, &p2));
        prop_assert!(v.complete);
    }

    #[test]
    fn derivative_matches_finite_difference(f in radial_strategy(), x in prop::array::uniform6(0.3f64..2.0)) {
        let none = HashMap::new();
        for v in phasespace::algebra::Var::ALL {
            let d = f.partial(v).evaluate(&x, &none).unwrap();
            let slot = phasespace::algebra::Var::ALL.iter().position(|w| *w == v).unwrap();
            let h = 1e-5;
            let mut xp = x; xp[slot] += h;
            let mut xm = x; xm[slot] -= h;
            let fd = (f.evaluate(&xp, &none).unwrap() - f.evaluate(&xm, &none).unwrap()) / (2.0 * h);
            let scale = 1.0 + d.abs() + f.evaluate(&x, &none).unwrap().abs();
            prop_assert!((d - fd).abs() <= 1e-5 * scale, "{} vs {}", d, fd);
        }
    }

    #[test]
    fn display_roundtrips_through_parser(f in radial_strategy()) {
        let text = f.to_string();
        prop_assert_eq!(parse(&text).unwrap(), f);
    }
}
