//! Exact phase-space expressions over the radial atom `r = |q|`.
//!
//! Every expression is stored as `(A + B·r) / Q^k` with `Q = q1² + q2² + q3²`,
//! `A` and `B` polynomials in `q`, `p` and Laurent monomials of the formal
//! parameters. After every operation `k` is reduced until `Q` no longer
//! divides both `A` and `B`, which makes the representation unique: `r` is not
//! a rational function of `q`, so `A + B·r = 0` forces `A = B = 0`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::symbol::Symbol;
use super::AlgebraError;

/// A phase-space coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Q(usize),
    P(usize),
}

impl Var {
    pub const ALL: [Var; 6] = [
        Var::Q(0),
        Var::Q(1),
        Var::Q(2),
        Var::P(0),
        Var::P(1),
        Var::P(2),
    ];
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Q(i) => write!(f, "q{}", i + 1),
            Var::P(i) => write!(f, "p{}", i + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Monomial {
    pub(crate) q: [u32; 3],
    pub(crate) p: [u32; 3],
    /// Sorted by symbol, exponents never zero.
    pub(crate) params: Vec<(Symbol, i32)>,
    /// Numerator carries one factor of `r`.
    pub(crate) r: bool,
}

impl Monomial {
    pub(crate) fn one() -> Self {
        Monomial {
            q: [0; 3],
            p: [0; 3],
            params: Vec::new(),
            r: false,
        }
    }

    fn with_q(&self, i: usize, delta: i32) -> Self {
        let mut m = self.clone();
        m.q[i] = (m.q[i] as i32 + delta) as u32;
        m
    }

    fn qdeg(&self) -> u32 {
        self.q.iter().sum()
    }

    fn pdeg(&self) -> u32 {
        self.p.iter().sum()
    }

    fn merge_params(a: &[(Symbol, i32)], b: &[(Symbol, i32)]) -> Vec<(Symbol, i32)> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push(b[j]);
                j += 1;
            } else {
                let e = a[i].1 + b[j].1;
                if e != 0 {
                    out.push((a[i].0, e));
                }
                i += 1;
                j += 1;
            }
        }
        out
    }

    /// Product ignoring the `r·r = Q` fold; the caller handles `r`.
    fn mul_plain(&self, other: &Monomial) -> Monomial {
        let mut q = self.q;
        let mut p = self.p;
        for i in 0..3 {
            q[i] += other.q[i];
            p[i] += other.p[i];
        }
        Monomial {
            q,
            p,
            params: Self::merge_params(&self.params, &other.params),
            r: false,
        }
    }
}

type Terms = BTreeMap<Monomial, BigRational>;

fn add_term(terms: &mut Terms, m: Monomial, c: BigRational) {
    if c.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match terms.entry(m) {
        Entry::Vacant(v) => {
            v.insert(c);
        }
        Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

/// Adds `c·m·Q` to `terms`.
fn add_times_q(terms: &mut Terms, m: &Monomial, c: &BigRational) {
    for i in 0..3 {
        add_term(terms, m.with_q(i, 2), c.clone());
    }
}

fn times_q_pow(terms: &Terms, k: u32) -> Terms {
    let mut cur = terms.clone();
    for _ in 0..k {
        let mut next = Terms::new();
        for (m, c) in &cur {
            add_times_q(&mut next, m, c);
        }
        cur = next;
    }
    cur
}

/// Exact division by `Q`, if it divides the whole numerator.
fn div_by_q(terms: &Terms) -> Option<Terms> {
    let mut rem = terms.clone();
    let mut quot = Terms::new();
    loop {
        let lead = rem
            .iter()
            .filter(|(m, _)| m.q[0] >= 2)
            .max_by_key(|(m, _)| m.q[0])
            .map(|(m, c)| (m.clone(), c.clone()));
        let Some((m, c)) = lead else { break };
        let base = m.with_q(0, -2);
        add_term(&mut quot, base.clone(), c.clone());
        let neg = -c;
        add_times_q(&mut rem, &base, &neg);
    }
    rem.is_empty().then_some(quot)
}

/// Exact expression `(A + B·r)/Q^k`; see the module docs for the invariants.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PhaseExpr {
    pub(crate) denom: u32,
    pub(crate) terms: Terms,
}

impl Default for PhaseExpr {
    fn default() -> Self {
        PhaseExpr::zero()
    }
}

impl PhaseExpr {
    pub fn zero() -> Self {
        PhaseExpr {
            denom: 0,
            terms: Terms::new(),
        }
    }

    pub fn one() -> Self {
        PhaseExpr::rational(BigRational::one())
    }

    pub fn rational(c: BigRational) -> Self {
        let mut terms = Terms::new();
        add_term(&mut terms, Monomial::one(), c);
        PhaseExpr { denom: 0, terms }
    }

    pub fn int(n: i64) -> Self {
        PhaseExpr::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn frac(num: i64, den: i64) -> Self {
        PhaseExpr::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Exact binary value of a finite float.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(PhaseExpr::rational)
    }

    pub fn var(v: Var) -> Self {
        let mut m = Monomial::one();
        match v {
            Var::Q(i) => m.q[i] = 1,
            Var::P(i) => m.p[i] = 1,
        }
        let mut terms = Terms::new();
        terms.insert(m, BigRational::one());
        PhaseExpr { denom: 0, terms }
    }

    pub fn q(i: usize) -> Self {
        PhaseExpr::var(Var::Q(i))
    }

    pub fn p(i: usize) -> Self {
        PhaseExpr::var(Var::P(i))
    }

    pub fn param(name: &str) -> Self {
        PhaseExpr::param_pow(name, 1)
    }

    pub fn param_pow(name: &str, e: i32) -> Self {
        let mut m = Monomial::one();
        if e != 0 {
            m.params.push((Symbol::new(name), e));
        }
        let mut terms = Terms::new();
        terms.insert(m, BigRational::one());
        PhaseExpr { denom: 0, terms }
    }

    /// `r^e` for any integer `e`.
    pub fn r_pow(e: i32) -> Self {
        let odd = e.rem_euclid(2) == 1;
        let mut m = Monomial::one();
        m.r = odd;
        let mut base = Terms::new();
        base.insert(m, BigRational::one());
        // r^e = r^odd · Q^((e - odd)/2)
        let half = (e - odd as i32) / 2;
        if half >= 0 {
            PhaseExpr {
                denom: 0,
                terms: times_q_pow(&base, half as u32),
            }
        } else {
            PhaseExpr {
                denom: (-half) as u32,
                terms: base,
            }
        }
    }

    /// `Q = q1² + q2² + q3²`.
    pub fn q_norm2() -> Self {
        PhaseExpr::r_pow(2)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored numerator terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// No `r` and no `Q` denominator.
    pub fn is_polynomial(&self) -> bool {
        self.denom == 0 && self.terms.keys().all(|m| !m.r)
    }

    /// Free of phase-space variables (a coefficient in the parameter ring).
    pub fn is_constant(&self) -> bool {
        self.denom == 0
            && self
                .terms
                .keys()
                .all(|m| !m.r && m.qdeg() == 0 && m.pdeg() == 0)
    }

    /// Total degree in (q, p) when the expression is a polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.is_polynomial().then(|| {
            self.terms
                .keys()
                .map(|m| m.qdeg() + m.pdeg())
                .max()
                .unwrap_or(0)
        })
    }

    /// Largest exponent of each `p_i` (always finite: `r` only involves `q`).
    pub fn p_degrees(&self) -> [u32; 3] {
        let mut out = [0; 3];
        for m in self.terms.keys() {
            for i in 0..3 {
                out[i] = out[i].max(m.p[i]);
            }
        }
        out
    }

    /// Largest exponent of each `q_i`, if the expression is polynomial.
    pub fn q_degrees(&self) -> Option<[u32; 3]> {
        if !self.is_polynomial() {
            return None;
        }
        let mut out = [0; 3];
        for m in self.terms.keys() {
            for i in 0..3 {
                out[i] = out[i].max(m.q[i]);
            }
        }
        Some(out)
    }

    /// Radial homogeneity degree of every term: `deg_q + rpow` where the
    /// numerator `r` counts as +1 and `Q^-k` as `-2k`.
    pub fn homogeneity_degrees(&self) -> Vec<i32> {
        let mut v: Vec<i32> = self
            .terms
            .keys()
            .map(|m| m.qdeg() as i32 + m.r as i32 - 2 * self.denom as i32)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Reduces the `Q` power until no further cancellation is possible.
    fn normalized(mut self) -> Self {
        if self.terms.is_empty() {
            self.denom = 0;
            return self;
        }
        while self.denom > 0 {
            match div_by_q(&self.terms) {
                Some(t) => {
                    self.terms = t;
                    self.denom -= 1;
                }
                None => break,
            }
        }
        self
    }

    fn raised_terms(&self, denom: u32) -> Terms {
        debug_assert!(denom >= self.denom);
        times_q_pow(&self.terms, denom - self.denom)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return PhaseExpr::zero();
        }
        PhaseExpr {
            denom: self.denom,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = PhaseExpr::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Inverse of a single term free of `q` and `p` (a rational times a
    /// parameter monomial times a power of `r`).
    pub fn inverse(&self) -> Result<Self, AlgebraError> {
        if self.terms.len() != 1 {
            return Err(AlgebraError::NotInvertible(self.to_string()));
        }
        let (m, c) = self.terms.iter().next().expect("one term");
        if m.qdeg() != 0 || m.pdeg() != 0 {
            return Err(AlgebraError::NotInvertible(self.to_string()));
        }
        let rpow = m.r as i32 - 2 * self.denom as i32;
        let mut inv = PhaseExpr::rational(c.recip());
        for (s, e) in &m.params {
            inv = &inv * &PhaseExpr::param_pow(&s.name(), -e);
        }
        Ok(&inv * &PhaseExpr::r_pow(-rpow))
    }

    /// Exact partial derivative.
    pub fn partial(&self, v: Var) -> Self {
        match v {
            Var::P(i) => {
                let mut terms = Terms::new();
                for (m, c) in &self.terms {
                    if m.p[i] > 0 {
                        let mut dm = m.clone();
                        dm.p[i] -= 1;
                        add_term(&mut terms, dm, c * BigInt::from(m.p[i]));
                    }
                }
                PhaseExpr {
                    denom: self.denom,
                    terms,
                }
                .normalized()
            }
            Var::Q(i) => {
                if self.is_polynomial() {
                    let mut terms = Terms::new();
                    for (m, c) in &self.terms {
                        if m.q[i] > 0 {
                            add_term(&mut terms, m.with_q(i, -1), c * BigInt::from(m.q[i]));
                        }
                    }
                    return PhaseExpr { denom: 0, terms };
                }
                // d[(A + B r)/Q^k] = [Q dA + Q dB r + B q_i r - 2k q_i (A + B r)] / Q^(k+1)
                let k = self.denom;
                let mut terms = Terms::new();
                for (m, c) in &self.terms {
                    if m.q[i] > 0 {
                        let dm = m.with_q(i, -1);
                        add_times_q(&mut terms, &dm, &(c * BigInt::from(m.q[i])));
                    }
                    let shifted = m.with_q(i, 1);
                    let mut coeff = BigRational::zero();
                    if m.r {
                        coeff += c;
                    }
                    if k > 0 {
                        coeff -= c * BigInt::from(2 * k as i64);
                    }
                    add_term(&mut terms, shifted, coeff);
                }
                PhaseExpr {
                    denom: k + 1,
                    terms,
                }
                .normalized()
            }
        }
    }

    /// Repeated partial derivatives; `orders` indexed as [q1,q2,q3,p1,p2,p3].
    pub fn partial_multi(&self, orders: [u32; 6]) -> Self {
        let mut cur = self.clone();
        for (slot, &n) in orders.iter().enumerate() {
            for _ in 0..n {
                if cur.is_zero() {
                    return cur;
                }
                cur = cur.partial(Var::ALL[slot]);
            }
        }
        cur
    }

    /// Substitutes numeric values for a subset of parameters, keeping the rest formal.
    pub fn substitute(&self, name: &str, value: &PhaseExpr) -> Self {
        let sym = Symbol::new(name);
        let mut out = PhaseExpr::zero();
        for (m, c) in &self.terms {
            let mut rest = m.clone();
            let mut e = 0;
            rest.params.retain(|(s, x)| {
                if *s == sym {
                    e = *x;
                    false
                } else {
                    true
                }
            });
            let single = PhaseExpr {
                denom: self.denom,
                terms: std::iter::once((rest, c.clone())).collect(),
            };
            let factor = if e >= 0 {
                value.pow(e as u32)
            } else {
                match value.inverse() {
                    Ok(inv) => inv.pow((-e) as u32),
                    Err(_) => return self.clone(),
                }
            };
            out = &out + &(&single * &factor);
        }
        out
    }

    /// Coefficient of a parameter monomial, as an expression in the phase-space variables
    /// and remaining parameters. `params` lists exact exponents to match.
    pub fn coefficient_of(&self, params: &[(&str, i32)]) -> PhaseExpr {
        let mut want: Vec<(Symbol, i32)> =
            params.iter().map(|(n, e)| (Symbol::new(n), *e)).collect();
        want.sort();
        let mut terms = Terms::new();
        for (m, c) in &self.terms {
            let matches = want.iter().all(|(s, e)| {
                m.params
                    .iter()
                    .find(|(t, _)| t == s)
                    .map(|(_, x)| *x)
                    .unwrap_or(0)
                    == *e
            });
            if matches {
                let mut rest = m.clone();
                rest.params
                    .retain(|(s, _)| !want.iter().any(|(t, _)| t == s));
                add_term(&mut terms, rest, c.clone());
            }
        }
        PhaseExpr {
            denom: self.denom,
            terms,
        }
        .normalized()
    }

    /// Names of all formal parameters that occur, sorted.
    pub fn parameters(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .terms
            .keys()
            .flat_map(|m| m.params.iter().map(|(s, _)| s.name()))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Floating-point evaluation at `point = [q1,q2,q3,p1,p2,p3]`.
    pub fn evaluate(
        &self,
        point: &[f64; 6],
        params: &HashMap<String, f64>,
    ) -> Result<f64, AlgebraError> {
        let qn2 = point[0] * point[0] + point[1] * point[1] + point[2] * point[2];
        if self.denom > 0 && qn2 == 0.0 {
            return Err(AlgebraError::SingularPoint);
        }
        let r = qn2.sqrt();
        let mut cache: HashMap<Symbol, f64> = HashMap::new();
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut v = c.to_f64().unwrap_or(f64::NAN);
            for (s, e) in &m.params {
                let base = match cache.get(s) {
                    Some(x) => *x,
                    None => {
                        let name = s.name();
                        let x = *params.get(&name).ok_or(AlgebraError::UnboundSymbol(name))?;
                        cache.insert(*s, x);
                        x
                    }
                };
                v *= base.powi(*e);
            }
            for i in 0..3 {
                v *= point[i].powi(m.q[i] as i32) * point[3 + i].powi(m.p[i] as i32);
            }
            if m.r {
                v *= r;
            }
            acc += v;
        }
        Ok(acc / qn2.powi(self.denom as i32))
    }

    /// Binds parameters once and lowers the expression to floating point.
    pub fn compile(&self, params: &HashMap<String, f64>) -> Result<CompiledExpr, AlgebraError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut v = c.to_f64().unwrap_or(f64::NAN);
            for (s, e) in &m.params {
                let name = s.name();
                let x = *params.get(&name).ok_or(AlgebraError::UnboundSymbol(name))?;
                v *= x.powi(*e);
            }
            let mut exps = [0i32; 6];
            for i in 0..3 {
                exps[i] = m.q[i] as i32;
                exps[3 + i] = m.p[i] as i32;
            }
            terms.push(CompiledTerm {
                coeff: v,
                exps,
                r: m.r,
            });
        }
        Ok(CompiledExpr {
            denom: self.denom as i32,
            terms,
        })
    }

    /// Terms as (coefficient, params, q exponents, p exponents, r power), in display order.
    pub fn term_list(&self) -> Vec<TermJson> {
        // Reduce each block sharing (p, params, r, q-degree) against Q on its
        // own, so `hbar^2 - 2*q1*r^-3` is not printed over a common Q^2.
        let mut groups: BTreeMap<([u32; 3], Vec<(Symbol, i32)>, bool, u32), Terms> =
            BTreeMap::new();
        for (m, c) in &self.terms {
            groups
                .entry((m.p, m.params.clone(), m.r, m.qdeg()))
                .or_default()
                .insert(m.clone(), c.clone());
        }
        let mut out = Vec::with_capacity(self.terms.len());
        for (_, mut block) in groups {
            let mut k = self.denom;
            while k > 0 {
                match div_by_q(&block) {
                    Some(t) => {
                        block = t;
                        k -= 1;
                    }
                    None => break,
                }
            }
            for (m, c) in block {
                let mut params: Vec<(String, i32)> =
                    m.params.iter().map(|(s, e)| (s.name(), *e)).collect();
                params.sort();
                out.push(TermJson {
                    coeff: c.to_string(),
                    params: params.into_iter().collect(),
                    q: m.q,
                    p: m.p,
                    rpow: m.r as i32 - 2 * k as i32,
                });
            }
        }
        out.sort_by(|a, b| {
            let da = a.q.iter().sum::<u32>() as i32 + a.p.iter().sum::<u32>() as i32 + a.rpow;
            let db = b.q.iter().sum::<u32>() as i32 + b.p.iter().sum::<u32>() as i32 + b.rpow;
            db.cmp(&da)
                .then_with(|| b.q.cmp(&a.q))
                .then_with(|| b.p.cmp(&a.p))
                .then_with(|| b.rpow.cmp(&a.rpow))
                .then_with(|| a.params.cmp(&b.params))
        });
        out
    }

    /// Canonical JSON term list.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ExprJson {
            terms: self.term_list(),
        })
        .expect("serializable")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, AlgebraError> {
        let parsed: ExprJson =
            serde_json::from_value(value.clone()).map_err(|e| AlgebraError::Json(e.to_string()))?;
        let mut out = PhaseExpr::zero();
        for t in parsed.terms {
            let c: BigRational = t
                .coeff
                .parse()
                .map_err(|_| AlgebraError::Json(format!("bad coefficient {}", t.coeff)))?;
            let mut term = PhaseExpr::rational(c);
            for (name, e) in &t.params {
                term = &term * &PhaseExpr::param_pow(name, *e);
            }
            for i in 0..3 {
                term = &term * &PhaseExpr::q(i).pow(t.q[i]);
                term = &term * &PhaseExpr::p(i).pow(t.p[i]);
            }
            term = &term * &PhaseExpr::r_pow(t.rpow);
            out += &term;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    coeff: f64,
    exps: [i32; 6],
    r: bool,
}

/// Floating-point form of a [`PhaseExpr`] with all parameters bound.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    denom: i32,
    terms: Vec<CompiledTerm>,
}

impl CompiledExpr {
    /// Value at `[q1,q2,q3,p1,p2,p3]`; non-finite at the origin when singular there.
    pub fn eval(&self, x: &[f64; 6]) -> f64 {
        let qn2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let r = qn2.sqrt();
        let mut acc = 0.0;
        for t in &self.terms {
            let mut v = t.coeff;
            for (xi, &e) in x.iter().zip(&t.exps) {
                if e != 0 {
                    v *= xi.powi(e);
                }
            }
            if t.r {
                v *= r;
            }
            acc += v;
        }
        if self.denom == 0 {
            acc
        } else {
            acc / qn2.powi(self.denom)
        }
    }
}

/// One term of the canonical JSON form; `rpow` folds the common `Q^-k` into the term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: String,
    pub params: BTreeMap<String, i32>,
    pub q: [u32; 3],
    pub p: [u32; 3],
    pub rpow: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExprJson {
    terms: Vec<TermJson>,
}

impl<'a> Add<&'a PhaseExpr> for &'a PhaseExpr {
    type Output = PhaseExpr;
    fn add(self, rhs: &PhaseExpr) -> PhaseExpr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let denom = self.denom.max(rhs.denom);
        let mut terms = self.raised_terms(denom);
        for (m, c) in rhs.raised_terms(denom) {
            add_term(&mut terms, m, c);
        }
        PhaseExpr { denom, terms }.normalized()
    }
}

impl Add for PhaseExpr {
    type Output = PhaseExpr;
    fn add(self, rhs: PhaseExpr) -> PhaseExpr {
        &self + &rhs
    }
}

impl AddAssign<&PhaseExpr> for PhaseExpr {
    fn add_assign(&mut self, rhs: &PhaseExpr) {
        if rhs.is_zero() {
            return;
        }
        if self.denom == rhs.denom {
            for (m, c) in &rhs.terms {
                add_term(&mut self.terms, m.clone(), c.clone());
            }
            let taken = std::mem::take(self);
            *self = taken.normalized();
        } else {
            *self = &*self + rhs;
        }
    }
}

impl<'a> Sub<&'a PhaseExpr> for &'a PhaseExpr {
    type Output = PhaseExpr;
    fn sub(self, rhs: &PhaseExpr) -> PhaseExpr {
        self + &(-rhs)
    }
}

impl Sub for PhaseExpr {
    type Output = PhaseExpr;
    fn sub(self, rhs: PhaseExpr) -> PhaseExpr {
        &self - &rhs
    }
}

impl Neg for &PhaseExpr {
    type Output = PhaseExpr;
    fn neg(self) -> PhaseExpr {
        PhaseExpr {
            denom: self.denom,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for PhaseExpr {
    type Output = PhaseExpr;
    fn neg(self) -> PhaseExpr {
        -&self
    }
}

impl<'a> Mul<&'a PhaseExpr> for &'a PhaseExpr {
    type Output = PhaseExpr;
    fn mul(self, rhs: &PhaseExpr) -> PhaseExpr {
        if self.is_zero() || rhs.is_zero() {
            return PhaseExpr::zero();
        }
        let mut terms = Terms::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let mut m = ma.mul_plain(mb);
                let c = ca * cb;
                match (ma.r, mb.r) {
                    (true, true) => add_times_q(&mut terms, &m, &c),
                    (false, false) => add_term(&mut terms, m, c),
                    _ => {
                        m.r = true;
                        add_term(&mut terms, m, c);
                    }
                }
            }
        }
        PhaseExpr {
            denom: self.denom + rhs.denom,
            terms,
        }
        .normalized()
    }
}

impl Mul for PhaseExpr {
    type Output = PhaseExpr;
    fn mul(self, rhs: PhaseExpr) -> PhaseExpr {
        &self * &rhs
    }
}

impl fmt::Debug for PhaseExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhaseExpr({self})")
    }
}

fn fmt_factor(out: &mut Vec<String>, name: &str, e: i64) {
    match e {
        0 => {}
        1 => out.push(name.to_string()),
        _ => out.push(format!("{name}^{e}")),
    }
}

impl fmt::Display for PhaseExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (idx, t) in self.term_list().into_iter().enumerate() {
            let c: BigRational = t.coeff.parse().expect("own output");
            let neg = c.is_negative();
            let mag = c.abs();
            let mut factors = Vec::new();
            for (name, e) in &t.params {
                fmt_factor(&mut factors, name, *e as i64);
            }
            for i in 0..3 {
                fmt_factor(&mut factors, &format!("q{}", i + 1), t.q[i] as i64);
            }
            for i in 0..3 {
                fmt_factor(&mut factors, &format!("p{}", i + 1), t.p[i] as i64);
            }
            fmt_factor(&mut factors, "r", t.rpow as i64);
            let body = if factors.is_empty() {
                mag.to_string()
            } else if mag.is_one() {
                factors.join("*")
            } else {
                format!("{}*{}", mag, factors.join("*"))
            };
            match (idx, neg) {
                (0, false) => write!(f, "{body}")?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}
