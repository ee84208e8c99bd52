//! Exact sparse multivariate polynomials over `Z` and `Q`.
//!
//! Variables are numbered `x0, x1, ...`. A [`Poly`] stores a map from
//! [`Monomial`] to nonzero coefficient, so two polynomials are equal exactly
//! when their term maps are equal.

mod encode;
mod parse;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encode::{decode, encode, PolyCode};
pub use parse::parse_polynomial;

/// Exact rational number in lowest terms with positive denominator.
pub type Rational = BigRational;

/// Values for some of the variables, keyed by variable id.
pub type Assignment = BTreeMap<usize, Rational>;

/// Integer-coefficient polynomial, the objects of HTP.
pub type Polynomial = Poly<BigInt>;

/// Rational-coefficient polynomial, produced by substitution and consumed by
/// [`clear_denominators`].
pub type RatPolynomial = Poly<BigRational>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("operation is undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("no value assigned to occurring variable x{0}")]
    MissingAssignment(usize),
    #[error("variable x{0} already occurs in the polynomial")]
    VariableClash(usize),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("malformed structured polynomial: {0}")]
    Structured(String),
}

/// Height `max(|a|, b)` of a rational `a/b` in lowest terms.
pub fn height(q: &Rational) -> BigInt {
    let n = q.numer().abs();
    let d = q.denom().clone();
    if n > d {
        n
    } else {
        d
    }
}

/// Exponent vector with trailing zeros removed.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(mut exps: Vec<u32>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        Monomial(exps)
    }

    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(id: usize) -> Self {
        Self::var_pow(id, 1)
    }

    pub fn var_pow(id: usize, exp: u32) -> Self {
        let mut v = vec![0; id + 1];
        v[id] = exp;
        Monomial::new(v)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn exponent(&self, var: usize) -> u32 {
        self.0.get(var).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| e as u64).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// `(variable, exponent)` pairs with positive exponent.
    pub fn powers(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (i, e))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let len = self.0.len().max(other.0.len());
        let exps = (0..len)
            .map(|i| self.exponent(i) + other.exponent(i))
            .collect();
        Monomial(exps)
    }
}

/// Graded lexicographic order: total degree first, then the larger exponent
/// at the first differing variable wins.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let len = self.0.len().max(other.0.len());
            for i in 0..len {
                match self.exponent(i).cmp(&other.exponent(i)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (v, e) in self.powers() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{v}")?;
            } else {
                write!(f, "x{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Ring operations needed of a coefficient type.
pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
{
    fn to_rational(&self) -> Rational;
}

impl Coefficient for BigInt {
    fn to_rational(&self) -> Rational {
        Rational::from_integer(self.clone())
    }
}

impl Coefficient for BigRational {
    fn to_rational(&self) -> Rational {
        self.clone()
    }
}

/// Sparse polynomial in canonical form: no zero coefficients are stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly<C> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coefficient> Default for Poly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coefficient> Poly<C> {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: C) -> Self {
        Self::from_terms([(Monomial::one(), c)])
    }

    pub fn var(id: usize) -> Self {
        Self::from_terms([(Monomial::var(id), C::one())])
    }

    /// Builds a polynomial from terms in any order, merging repeated
    /// monomials and dropping zero coefficients.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, C)>>(terms: I) -> Self {
        let mut map: BTreeMap<Monomial, C> = BTreeMap::new();
        for (m, c) in terms {
            match map.remove(&m) {
                Some(prev) => {
                    let sum = prev + c;
                    if !sum.is_zero() {
                        map.insert(m, sum);
                    }
                }
                None => {
                    if !c.is_zero() {
                        map.insert(m, c);
                    }
                }
            }
        }
        Poly { terms: map }
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> + '_ {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Maximum total degree over terms; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u64> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Largest exponent of `var` in any term.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.exponent(var)).max().unwrap_or(0)
    }

    /// Ids of the variables that occur with positive exponent.
    pub fn variables(&self) -> BTreeSet<usize> {
        self.terms
            .keys()
            .flat_map(|m| m.powers().map(|(v, _)| v))
            .collect()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.keys().filter_map(|m| m.0.len().checked_sub(1)).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Monomial::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, k)| (m.clone(), k.clone() * c.clone())))
    }

    pub fn mul_monomial(&self, mono: &Monomial) -> Self {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.mul(mono), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, mut exp: u32) -> Self {
        let mut acc = Self::constant(C::one());
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Renames variables through `f`; monomials that collide are merged.
    pub fn rename_vars(&self, f: impl Fn(usize) -> usize) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| {
            let mut exps = Vec::new();
            for (v, e) in m.powers() {
                let t = f(v);
                if exps.len() <= t {
                    exps.resize(t + 1, 0);
                }
                exps[t] += e;
            }
            (Monomial::new(exps), c.clone())
        }))
    }

    /// Exact value at a rational point.
    pub fn eval(&self, point: &Assignment) -> Result<Rational, PolyError> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.to_rational();
            for (v, e) in m.powers() {
                let x = point.get(&v).ok_or(PolyError::MissingAssignment(v))?;
                t *= num_traits::pow(x.clone(), e as usize);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Substitutes the assigned variables and keeps the rest symbolic.
    pub fn substitute(&self, point: &Assignment) -> RatPolynomial {
        Poly::from_terms(self.terms.iter().map(|(m, c)| {
            let mut coeff = c.to_rational();
            let mut exps = m.0.clone();
            for (v, e) in m.powers() {
                if let Some(x) = point.get(&v) {
                    coeff *= num_traits::pow(x.clone(), e as usize);
                    exps[v] = 0;
                }
            }
            (Monomial::new(exps), coeff)
        }))
    }

    pub fn to_rational(&self) -> RatPolynomial {
        Poly::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), c.to_rational())))
    }

    /// Splits into coefficients of powers of `var`: `self = Σ_k out[k] · var^k`.
    pub fn coefficients_in(&self, var: usize) -> Vec<Self> {
        let deg = self.degree_in(var) as usize;
        let mut buckets: Vec<Vec<(Monomial, C)>> = vec![Vec::new(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.exponent(var) as usize;
            let mut exps = m.0.clone();
            if var < exps.len() {
                exps[var] = 0;
            }
            buckets[e].push((Monomial::new(exps), c.clone()));
        }
        buckets.into_iter().map(Self::from_terms).collect()
    }
}

impl Polynomial {
    /// `Y^(d-e)` padding of every term of degree `e`, with `d` the total
    /// degree: the map `f ↦ Y^d · f(X/Y)`.
    pub fn homogenize_core(&self, y: usize) -> Result<Polynomial, PolyError> {
        let d = self.total_degree().ok_or(PolyError::ZeroPolynomial)?;
        if self.variables().contains(&y) {
            return Err(PolyError::VariableClash(y));
        }
        Ok(Poly::from_terms(self.terms.iter().map(|(m, c)| {
            let pad = (d - m.degree()) as u32;
            (m.mul(&Monomial::var_pow(y, pad)), c.clone())
        })))
    }

    /// Greatest common divisor of the coefficients (nonnegative).
    pub fn content(&self) -> BigInt {
        self.terms
            .values()
            .fold(BigInt::zero(), |acc, c| acc.gcd(c))
    }

    /// Structured form: one record per term, ascending graded-lex.
    pub fn to_structured(&self) -> Vec<StructuredTerm> {
        self.terms
            .iter()
            .map(|(m, c)| StructuredTerm {
                exps: m.0.clone(),
                coef: c.to_string(),
            })
            .collect()
    }

    pub fn from_structured(terms: &[StructuredTerm]) -> Result<Polynomial, PolyError> {
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            let c: BigInt = t
                .coef
                .trim()
                .parse()
                .map_err(|_| PolyError::Structured(format!("bad coefficient {:?}", t.coef)))?;
            out.push((Monomial::new(t.exps.clone()), c));
        }
        Ok(Poly::from_terms(out))
    }
}

/// `c · g` with `c` the least common multiple of the coefficient
/// denominators. Content is left as is.
pub fn clear_denominators(g: &RatPolynomial) -> Result<Polynomial, PolyError> {
    if g.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let lcm = g
        .terms
        .values()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    Ok(Poly::from_terms(g.terms.iter().map(|(m, c)| {
        let scaled = c.numer() * (&lcm / c.denom());
        (m.clone(), scaled)
    })))
}

/// One term of the structured polynomial form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredTerm {
    pub exps: Vec<u32>,
    pub coef: String,
}

impl<'a, C: Coefficient> Add for &'a Poly<C> {
    type Output = Poly<C>;
    fn add(self, rhs: Self) -> Poly<C> {
        Poly::from_terms(
            self.terms
                .iter()
                .chain(rhs.terms.iter())
                .map(|(m, c)| (m.clone(), c.clone())),
        )
    }
}

impl<'a, C: Coefficient> Sub for &'a Poly<C> {
    type Output = Poly<C>;
    fn sub(self, rhs: Self) -> Poly<C> {
        Poly::from_terms(
            self.terms
                .iter()
                .map(|(m, c)| (m.clone(), c.clone()))
                .chain(rhs.terms.iter().map(|(m, c)| (m.clone(), -c.clone()))),
        )
    }
}

impl<'a, C: Coefficient> Mul for &'a Poly<C> {
    type Output = Poly<C>;
    fn mul(self, rhs: Self) -> Poly<C> {
        let mut out = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.push((m1.mul(m2), c1.clone() * c2.clone()));
            }
        }
        Poly::from_terms(out)
    }
}

impl<'a, C: Coefficient> Neg for &'a Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl<C: Coefficient> $tr for Poly<C> {
            type Output = Poly<C>;
            fn $method(self, rhs: Poly<C>) -> Poly<C> {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<C: Coefficient> Neg for Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        -&self
    }
}

trait CoefficientText {
    /// Signed text and whether the magnitude is exactly one.
    fn split_sign(&self) -> (bool, String, bool);
}

impl CoefficientText for BigInt {
    fn split_sign(&self) -> (bool, String, bool) {
        let mag = self.abs();
        (self.is_negative(), mag.to_string(), mag.is_one())
    }
}

impl CoefficientText for BigRational {
    fn split_sign(&self) -> (bool, String, bool) {
        let mag = self.abs();
        let text = if mag.is_integer() {
            mag.numer().to_string()
        } else {
            format!("({}/{})", mag.numer(), mag.denom())
        };
        (self.is_negative(), text, mag.is_one())
    }
}

fn write_poly<C: CoefficientText>(
    f: &mut fmt::Formatter<'_>,
    terms: &BTreeMap<Monomial, C>,
) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    for (i, (m, c)) in terms.iter().rev().enumerate() {
        let (neg, mag, unit) = c.split_sign();
        match (i, neg) {
            (0, true) => write!(f, "-")?,
            (0, false) => {}
            (_, true) => write!(f, " - ")?,
            (_, false) => write!(f, " + ")?,
        }
        if m.is_one() {
            write!(f, "{mag}")?;
        } else if unit {
            write!(f, "{m}")?;
        } else {
            write!(f, "{mag}*{m}")?;
        }
    }
    Ok(())
}

/// Canonical text, terms in descending graded-lex order, e.g.
/// `2*x0^2 + 2*x1^2 - 1`.
impl fmt::Display for Poly<BigInt> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(f, &self.terms)
    }
}

impl fmt::Display for Poly<BigRational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(f, &self.terms)
    }
}

impl<C: fmt::Debug> fmt::Debug for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

/// Shorthand for an integer rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for `n/d`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Polynomial {
        parse_polynomial(s).unwrap()
    }

    fn point(vals: &[(usize, Rational)]) -> Assignment {
        vals.iter().cloned().collect()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p("x0 - 3").eval(&point(&[(0, int(3))])).unwrap(), int(0));
        let f = p("2*x0^2 + 2*x1^2 - 1");
        let a = point(&[(0, ratio(1, 2)), (1, ratio(1, 2))]);
        assert_eq!(f.eval(&a).unwrap(), int(0));
        assert_eq!(
            p("x0^2 + 1").eval(&point(&[(0, ratio(2, 3))])).unwrap(),
            ratio(13, 9)
        );
    }

    #[test]
    fn eval_missing_variable() {
        let err = p("x0 + x2").eval(&point(&[(0, int(1))])).unwrap_err();
        assert_eq!(err, PolyError::MissingAssignment(2));
    }

    #[test]
    fn total_degree_examples() {
        assert_eq!(p("2*x0 - 1").total_degree(), Some(1));
        assert_eq!(p("x0^2*x1 + x1").total_degree(), Some(3));
        assert_eq!(p("5").total_degree(), Some(0));
        assert_eq!(Polynomial::zero().total_degree(), None);
    }

    #[test]
    fn clear_denominators_examples() {
        let g = RatPolynomial::from_terms([
            (Monomial::var(0), ratio(1, 2)),
            (Monomial::one(), ratio(-1, 3)),
        ]);
        assert_eq!(clear_denominators(&g).unwrap(), p("3*x0 - 2"));
        assert_eq!(clear_denominators(&p("x0 - 1").to_rational()).unwrap(), p("x0 - 1"));
        let h = RatPolynomial::from_terms([(Monomial::var(0), ratio(2, 4))]);
        assert_eq!(clear_denominators(&h).unwrap(), p("x0"));
        assert_eq!(
            clear_denominators(&RatPolynomial::zero()),
            Err(PolyError::ZeroPolynomial)
        );
    }

    #[test]
    fn clear_denominators_keeps_content() {
        let g = RatPolynomial::from_terms([
            (Monomial::var(0), ratio(2, 3)),
            (Monomial::one(), ratio(4, 3)),
        ]);
        assert_eq!(clear_denominators(&g).unwrap(), p("2*x0 + 4"));
    }

    #[test]
    fn homogenize_examples() {
        assert_eq!(p("2*x0 - 1").homogenize_core(5).unwrap(), p("2*x0 - x5"));
        assert_eq!(p("x0^2 + 1").homogenize_core(1).unwrap(), p("x0^2 + x1^2"));
        assert_eq!(p("x0").homogenize_core(1).unwrap(), p("x0"));
        assert_eq!(
            p("x0 + x1").homogenize_core(1),
            Err(PolyError::VariableClash(1))
        );
        assert_eq!(
            Polynomial::zero().homogenize_core(1),
            Err(PolyError::ZeroPolynomial)
        );
    }

    #[test]
    fn display_is_canonical() {
        let f = p("-1 + 2*x1^2 + 2*x0^2");
        assert_eq!(f.to_string(), "2*x0^2 + 2*x1^2 - 1");
        assert_eq!(p("-x0*x1 + x0").to_string(), "-x0*x1 + x0");
        assert_eq!(Polynomial::zero().to_string(), "0");
    }

    #[test]
    fn structured_form() {
        let f = p("3*x0^2*x2 - 7");
        let s = f.to_structured();
        assert_eq!(s[0], StructuredTerm { exps: vec![], coef: "-7".into() });
        assert_eq!(Polynomial::from_structured(&s).unwrap(), f);
        let bad = [StructuredTerm { exps: vec![1], coef: "x".into() }];
        assert!(Polynomial::from_structured(&bad).is_err());
    }

    #[test]
    fn coefficients_in_variable() {
        let f = p("x0^2*x1 + 3*x1 - x0 + 2");
        let parts = f.coefficients_in(1);
        assert_eq!(parts, vec![p("-x0 + 2"), p("x0^2 + 3")]);
    }

    pub(crate) fn arb_poly(vars: usize, max_deg: u32, terms: usize) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec(
            (prop::collection::vec(0..=max_deg, vars), -20i64..=20),
            0..=terms,
        )
        .prop_map(|ts| {
            Poly::from_terms(
                ts.into_iter()
                    .map(|(e, c)| (Monomial::new(e), BigInt::from(c))),
            )
        })
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-30i64..=30, 1i64..=30).prop_map(|(n, d)| ratio(n, d))
    }

    proptest! {
        #[test]
        fn canonical_regardless_of_insertion_order(
            ts in prop::collection::vec((prop::collection::vec(0u32..3, 0..4), -5i64..=5), 0..8),
            seed in any::<u64>(),
        ) {
            let forward = Polynomial::from_terms(ts.iter().map(|(e, c)| (Monomial::new(e.clone()), BigInt::from(*c))));
            let mut shuffled = ts.clone();
            let n = shuffled.len();
            if n > 1 {
                let mut s = seed;
                for i in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    shuffled.swap(i, (s >> 33) as usize % (i + 1));
                }
            }
            let back = Polynomial::from_terms(shuffled.iter().map(|(e, c)| (Monomial::new(e.clone()), BigInt::from(*c))));
            prop_assert_eq!(&forward, &back);
            prop_assert_eq!(forward.to_structured(), back.to_structured());
            prop_assert!(forward.terms().all(|(_, c)| !c.is_zero()));
            prop_assert!(forward.terms().all(|(m, _)| m.exponents().last() != Some(&0)));
        }

        #[test]
        fn text_round_trip(f in arb_poly(3, 3, 6)) {
            prop_assert_eq!(parse_polynomial(&f.to_string()).unwrap(), f);
        }

        #[test]
        fn homogenized_eval_scales(
            f in arb_poly(3, 3, 5),
            a in prop::collection::vec(arb_rational(), 3),
            y0 in arb_rational(),
        ) {
            prop_assume!(!f.is_zero() && !y0.is_zero());
            let d = f.total_degree().unwrap();
            let h = f.homogenize_core(7).unwrap();
            prop_assert!(h.is_homogeneous());
            let base: Assignment = a.iter().cloned().enumerate().collect();
            let mut scaled: Assignment = a.iter().map(|x| x * &y0).enumerate().collect();
            scaled.insert(7, y0.clone());
            let lhs = h.eval(&scaled).unwrap();
            let rhs = num_traits::pow(y0.clone(), d as usize) * f.eval(&base).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn clearing_preserves_zero_set(
            cs in prop::collection::vec(arb_rational(), 1..5),
            root in arb_rational(),
            probe in arb_rational(),
        ) {
            // g = (x0 - root) * (c0 + c1 x1 + ...), so the zero set is nonempty.
            let lin = RatPolynomial::from_terms(cs.iter().cloned().enumerate().map(|(i, c)| {
                if i == 0 { (Monomial::one(), c) } else { (Monomial::var(i), c) }
            }));
            let factor = RatPolynomial::from_terms([(Monomial::var(0), int(1)), (Monomial::one(), -root.clone())]);
            let g = &factor * &lin;
            prop_assume!(!g.is_zero());
            let cleared = clear_denominators(&g).unwrap();
            for x0 in [root.clone(), probe.clone()] {
                let pt: Assignment = (0..cs.len()).map(|i| (i, if i == 0 { x0.clone() } else { probe.clone() })).collect();
                prop_assert_eq!(g.eval(&pt).unwrap().is_zero(), cleared.eval(&pt).unwrap().is_zero());
            }
        }
    }
}
