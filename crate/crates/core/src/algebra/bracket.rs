use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::expr::{PhaseExpr, Var};

/// Anything the bidirectional derivative can act on.
///
/// Right operands only need to be closed under partial derivatives and under
/// multiplication by a ring element; the degree queries feed the vanishing
/// bounds and may return `None` when no bound is known.
pub trait Operand: Clone {
    fn partial(&self, v: Var) -> Self;
    fn is_zero(&self) -> bool;
    fn zero() -> Self;
    /// `c · left · self`.
    fn times(&self, left: &PhaseExpr, c: &PhaseExpr) -> Self;
    fn accumulate(&mut self, other: &Self);
    fn total_degree(&self) -> Option<u32>;
    fn p_total_degree(&self) -> Option<u32>;
    fn q_degrees(&self) -> Option<[u32; 3]>;
    fn p_degrees(&self) -> Option<[u32; 3]>;
}

impl Operand for PhaseExpr {
    fn partial(&self, v: Var) -> Self {
        PhaseExpr::partial(self, v)
    }
    fn is_zero(&self) -> bool {
        PhaseExpr::is_zero(self)
    }
    fn zero() -> Self {
        PhaseExpr::zero()
    }
    fn times(&self, left: &PhaseExpr, c: &PhaseExpr) -> Self {
        &(left * self) * c
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
    fn total_degree(&self) -> Option<u32> {
        PhaseExpr::total_degree(self)
    }
    fn p_total_degree(&self) -> Option<u32> {
        Some(
            self.terms
                .keys()
                .map(|m| m.p.iter().sum::<u32>())
                .max()
                .unwrap_or(0),
        )
    }
    fn q_degrees(&self) -> Option<[u32; 3]> {
        PhaseExpr::q_degrees(self)
    }
    fn p_degrees(&self) -> Option<[u32; 3]> {
        Some(PhaseExpr::p_degrees(self))
    }
}

/// Memoized mixed partial derivatives of one operand.
struct DerivCache<T: Operand> {
    map: HashMap<[u32; 6], T>,
}

impl<T: Operand> DerivCache<T> {
    fn new(base: &T) -> Self {
        let mut map = HashMap::new();
        map.insert([0; 6], base.clone());
        DerivCache { map }
    }

    fn get(&mut self, orders: [u32; 6]) -> &T {
        if !self.map.contains_key(&orders) {
            let slot = (0..6)
                .rev()
                .find(|&s| orders[s] > 0)
                .expect("zero orders are cached");
            let mut parent = orders;
            parent[slot] -= 1;
            let d = {
                let p = self.get(parent);
                if p.is_zero() {
                    p.clone()
                } else {
                    p.partial(Var::ALL[slot])
                }
            };
            self.map.insert(orders, d);
        }
        &self.map[&orders]
    }
}

/// Largest k for which `f D_ω^k g` can be nonzero, when one is provable.
fn vanishing_bound<R: Operand>(f: &PhaseExpr, g: &R) -> Option<u32> {
    let mut bounds = Vec::new();
    if let (Some(a), Some(b)) = (Operand::p_total_degree(f), g.p_total_degree()) {
        bounds.push(a + b);
    }
    bounds.extend(Operand::total_degree(f));
    bounds.extend(g.total_degree());
    if let (Some(qf), Some(pf), Some(qg), Some(pg)) = (
        Operand::q_degrees(f),
        Operand::p_degrees(f),
        g.q_degrees(),
        g.p_degrees(),
    ) {
        bounds.push((0..3).map(|i| qf[i].min(pg[i]) + pf[i].min(qg[i])).sum());
    }
    bounds.into_iter().min()
}

/// Per-slot upper bounds on the multi-index γ of the expansion.
fn slot_caps<R: Operand>(f: &PhaseExpr, g: &R, k: u32) -> [u32; 6] {
    let mut caps = [k; 6];
    let pf = PhaseExpr::p_degrees(f);
    let qf = PhaseExpr::q_degrees(f);
    let pg = g.p_degrees();
    let qg = g.q_degrees();
    for i in 0..3 {
        // slot i: f gets ∂q_i, g gets ∂p_i; slot 3+i: f gets ∂p_i, g gets ∂q_i
        if let Some(pg) = pg {
            caps[i] = caps[i].min(pg[i]);
        }
        if let Some(qf) = qf {
            caps[i] = caps[i].min(qf[i]);
        }
        caps[3 + i] = caps[3 + i].min(pf[i]);
        if let Some(qg) = qg {
            caps[3 + i] = caps[3 + i].min(qg[i]);
        }
    }
    caps
}

fn for_each_index(caps: &[u32; 6], k: u32, visit: &mut impl FnMut([u32; 6])) {
    fn rec(
        slot: usize,
        left: u32,
        caps: &[u32; 6],
        cur: &mut [u32; 6],
        visit: &mut impl FnMut([u32; 6]),
    ) {
        if slot == 5 {
            if left <= caps[5] {
                cur[5] = left;
                visit(*cur);
            }
            return;
        }
        let remaining_cap: u32 = caps[slot + 1..].iter().sum();
        let lo = left.saturating_sub(remaining_cap);
        for v in lo..=left.min(caps[slot]) {
            cur[slot] = v;
            rec(slot + 1, left - v, caps, cur, visit);
        }
        cur[slot] = 0;
    }
    let mut cur = [0; 6];
    rec(0, k, caps, &mut cur, visit);
}

/// Multinomial weight with the sign carried by the p-slots.
fn expansion_weight(gamma: &[u32; 6], factorials: &[BigInt]) -> BigRational {
    let k: u32 = gamma.iter().sum();
    let mut denom = BigInt::one();
    for &g in gamma {
        denom *= &factorials[g as usize];
    }
    let mut w = BigRational::new(factorials[k as usize].clone(), denom);
    if (gamma[3] + gamma[4] + gamma[5]) % 2 == 1 {
        w = -w;
    }
    w
}

fn factorials(n: u32) -> Vec<BigInt> {
    let mut out = vec![BigInt::one()];
    for i in 1..=n {
        let next = &out[i as usize - 1] * BigInt::from(i);
        out.push(next);
    }
    out
}

/// `c · f D_ω^k g` added into `acc`, sharing derivative caches across calls.
fn d_omega_into<R: Operand>(
    fc: &mut DerivCache<PhaseExpr>,
    gc: &mut DerivCache<R>,
    f: &PhaseExpr,
    g: &R,
    k: u32,
    c: &PhaseExpr,
    acc: &mut R,
) {
    let facts = factorials(k);
    let caps = slot_caps(f, g, k);
    let mut gammas = Vec::new();
    for_each_index(&caps, k, &mut |gamma| gammas.push(gamma));
    for gamma in gammas {
        let f_orders = gamma;
        let g_orders = [gamma[3], gamma[4], gamma[5], gamma[0], gamma[1], gamma[2]];
        let fd = fc.get(f_orders);
        if fd.is_zero() {
            continue;
        }
        let fd = fd.clone();
        let gd = gc.get(g_orders);
        if gd.is_zero() {
            continue;
        }
        let w = &PhaseExpr::rational(expansion_weight(&gamma, &facts)) * c;
        acc.accumulate(&gd.times(&fd, &w));
    }
}

/// `f D_ω^k g`, expanded exactly. `k = 0` gives the product.
pub fn d_omega_pow(f: &PhaseExpr, g: &PhaseExpr, k: u32) -> PhaseExpr {
    let mut acc = PhaseExpr::zero();
    let mut fc = DerivCache::new(f);
    let mut gc = DerivCache::new(g);
    d_omega_into(&mut fc, &mut gc, f, g, k, &PhaseExpr::one(), &mut acc);
    acc
}

/// The Poisson bracket `{f, g} = f D_ω g`.
pub fn poisson(f: &PhaseExpr, g: &PhaseExpr) -> PhaseExpr {
    d_omega_pow(f, g, 1)
}

/// Coefficients, ħ and truncation order of a generalized bracket.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketSpec {
    /// `a_1 … a_N`; missing entries up to `max_order` count as zero.
    pub coeffs: Vec<PhaseExpr>,
    pub hbar: PhaseExpr,
    pub max_order: usize,
    /// Every `a_n` with `n > max_order` is known to be zero.
    pub tail_vanishes: bool,
}

impl BracketSpec {
    pub fn poisson() -> Self {
        BracketSpec {
            coeffs: Vec::new(),
            hbar: PhaseExpr::param("hbar"),
            max_order: 0,
            tail_vanishes: true,
        }
    }

    /// `a_n = (−1)^n / (2^(2n) (2n+1)!)` for `n ≤ max_order`.
    pub fn moyal(max_order: usize, hbar: PhaseExpr) -> Self {
        BracketSpec {
            coeffs: (1..=max_order)
                .map(|n| PhaseExpr::rational(moyal_coefficient(n)))
                .collect(),
            hbar,
            max_order,
            tail_vanishes: false,
        }
    }

    /// Formal `a_1 … a_N` and formal `hbar`.
    pub fn symbolic(max_order: usize) -> Self {
        BracketSpec {
            coeffs: (1..=max_order)
                .map(|n| PhaseExpr::param(&format!("a{n}")))
                .collect(),
            hbar: PhaseExpr::param("hbar"),
            max_order,
            tail_vanishes: false,
        }
    }

    /// Exact rational coefficients; the sequence is taken to end at `coeffs.len()`.
    pub fn custom(coeffs: Vec<BigRational>, hbar: PhaseExpr) -> Self {
        let max_order = coeffs.len();
        BracketSpec {
            coeffs: coeffs.into_iter().map(PhaseExpr::rational).collect(),
            hbar,
            max_order,
            tail_vanishes: false,
        }
    }

    pub fn coefficient(&self, n: usize) -> PhaseExpr {
        if n == 0 {
            return PhaseExpr::one();
        }
        if n > self.max_order {
            return PhaseExpr::zero();
        }
        self.coeffs
            .get(n - 1)
            .cloned()
            .unwrap_or_else(PhaseExpr::zero)
    }
}

/// The Moyal value of `a_n`.
pub fn moyal_coefficient(n: usize) -> BigRational {
    let mut fact = BigInt::one();
    for i in 1..=(2 * n + 1) {
        fact *= BigInt::from(i);
    }
    let denom = (BigInt::one() << (2 * n)) * fact;
    let num = if n % 2 == 0 {
        BigInt::one()
    } else {
        -BigInt::one()
    };
    BigRational::new(num, denom)
}

/// Result of a truncated bracket evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketValue<R> {
    pub value: R,
    /// Every order beyond `max_order` provably contributes zero.
    pub complete: bool,
}

/// `{{f, g}} = {f, g} + Σ_{n ≤ max_order} a_n ħ^(2n) f D_ω^(2n+1) g`.
pub fn gmb<R: Operand>(f: &PhaseExpr, g: &R, spec: &BracketSpec) -> BracketValue<R> {
    let bound = vanishing_bound(f, g);
    let mut acc = R::zero();
    let mut fc = DerivCache::new(f);
    let mut gc = DerivCache::new(g);
    let hbar2 = spec.hbar.pow(2);
    let mut hpow = PhaseExpr::one();
    for n in 0..=spec.max_order {
        let k = 2 * n as u32 + 1;
        if bound.is_some_and(|b| k > b) {
            break;
        }
        let a = spec.coefficient(n);
        if !a.is_zero() {
            let c = &a * &hpow;
            d_omega_into(&mut fc, &mut gc, f, g, k, &c, &mut acc);
        }
        hpow = &hpow * &hbar2;
    }
    let next_k = 2 * (spec.max_order as u32 + 1) + 1;
    let complete = spec.tail_vanishes || bound.is_some_and(|b| next_k > b);
    BracketValue {
        value: acc,
        complete,
    }
}

/// `L_h g = {{h, g}}`.
pub fn liouvillian<R: Operand>(h: &PhaseExpr, g: &R, spec: &BracketSpec) -> R {
    gmb(h, g, spec).value
}

/// Entry `(k, zero)` for every odd `k ≤ 2K+1`: whether `f D_ω^k g` vanishes exactly.
pub fn check_zero_orderwise(f: &PhaseExpr, g: &PhaseExpr, max_n: u32) -> Vec<(u32, bool)> {
    let mut fc = DerivCache::new(f);
    let mut gc = DerivCache::new(g);
    (0..=max_n)
        .map(|n| {
            let k = 2 * n + 1;
            let mut acc = PhaseExpr::zero();
            d_omega_into(&mut fc, &mut gc, f, g, k, &PhaseExpr::one(), &mut acc);
            (k, acc.is_zero())
        })
        .collect()
}

/// `Π_k (id − w_k L_{H_k}) target` with `steps[0]` leftmost, so the last step acts first.
pub fn liouvillian_product(
    steps: &[(PhaseExpr, PhaseExpr)],
    target: &PhaseExpr,
    spec: &BracketSpec,
) -> PhaseExpr {
    let mut cur = target.clone();
    for (h, w) in steps.iter().rev() {
        let l = liouvillian(h, &cur, spec);
        cur = &cur - &(w * &l);
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> PhaseExpr {
        PhaseExpr::q(0)
    }
    fn p() -> PhaseExpr {
        PhaseExpr::p(0)
    }

    #[test]
    fn canonical_pair() {
        assert_eq!(d_omega_pow(&q(), &p(), 1), PhaseExpr::one());
        assert_eq!(d_omega_pow(&p(), &q(), 1), PhaseExpr::int(-1));
        assert_eq!(d_omega_pow(&q(), &p(), 0), &q() * &p());
    }

    #[test]
    fn third_power_hand_expansion() {
        assert_eq!(
            d_omega_pow(&q().pow(4), &p().pow(3), 3),
            &PhaseExpr::int(144) * &q()
        );
        let qp = &q() * &p();
        assert_eq!(d_omega_pow(&qp, &qp, 2), PhaseExpr::int(-2));
    }

    #[test]
    fn mixed_dof_third_power() {
        // q1 q2 q3 D^3 p1 p2 p3: only γ = (1,1,1,0,0,0) survives, weight 3! = 6
        let f = &(&PhaseExpr::q(0) * &PhaseExpr::q(1)) * &PhaseExpr::q(2);
        let g = &(&PhaseExpr::p(0) * &PhaseExpr::p(1)) * &PhaseExpr::p(2);
        assert_eq!(d_omega_pow(&f, &g, 3), PhaseExpr::int(6));
    }

    #[test]
    fn moyal_coefficients() {
        assert_eq!(
            moyal_coefficient(1),
            BigRational::new((-1).into(), 24.into())
        );
        assert_eq!(
            moyal_coefficient(2),
            BigRational::new(1.into(), 1920.into())
        );
    }

    #[test]
    fn gmb_symbolic_a1() {
        let spec = BracketSpec::symbolic(3);
        let v = gmb(&q().pow(4), &p().pow(3), &spec);
        let expect = &(&PhaseExpr::int(12) * &(&q().pow(3) * &p().pow(2)))
            + &(&PhaseExpr::int(144)
                * &(&(&PhaseExpr::param("a1") * &PhaseExpr::param("hbar").pow(2)) * &q()));
        assert_eq!(v.value, expect);
        assert!(v.complete);
    }

    #[test]
    fn truncation_flag() {
        let f = q().pow(6);
        let g = p().pow(6);
        assert!(!gmb(&f, &g, &BracketSpec::symbolic(1)).complete);
        assert!(gmb(&f, &g, &BracketSpec::symbolic(2)).complete);
        assert!(gmb(&f, &g, &BracketSpec::poisson()).complete);
        // rational operand never claims completeness from a q-degree bound
        let coulomb = PhaseExpr::r_pow(-1);
        let v = gmb(&coulomb, &p().pow(9), &BracketSpec::symbolic(2));
        assert!(!v.complete);
    }

    #[test]
    fn single_free_streaming_step() {
        let m = PhaseExpr::param("m");
        let h = &p().pow(2) * &(&PhaseExpr::frac(1, 2) * &m.inverse().unwrap());
        let w = PhaseExpr::param("tau");
        let out = liouvillian_product(
            &[(h, w.clone())],
            &q(),
            &BracketSpec::moyal(2, PhaseExpr::param("hbar")),
        );
        // L_H q = {H, q} = −p/m
        let expect = &q() + &(&(&w * &p()) * &m.inverse().unwrap());
        assert_eq!(out, expect);
        assert_eq!(liouvillian_product(&[], &q(), &BracketSpec::poisson()), q());
    }
}
