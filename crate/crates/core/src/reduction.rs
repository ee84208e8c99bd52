//! Polynomial many-one reductions between solvability problems.
//!
//! * [`homogenize_with_positivity`]: `f` has a rational zero iff
//!   `(Y^d f(X/Y))^2 + (Y - 1 - A^2 - B^2 - C^2 - D^2)^2` has a zero in any
//!   `R_W`, with explicit witness maps in both directions.
//! * [`conjoin`]: a common zero of `g_1..g_k` is a zero of `Σ g_i^2`.
//! * [`semilocal_reduce`]: the combiner `g^2 + Σ_{p, j} f_p(Z_j, ..)^2` over a
//!   registry of per-prime gadget polynomials.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{parse_polynomial, Assignment, PolyError, Polynomial, Rational};
use crate::quad::padic_valuation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("reduction needs a nonzero polynomial")]
    ZeroPolynomial,
    #[error("conjunction of an empty list")]
    EmptyConjunction,
    #[error("four_squares needs a nonnegative integer, got {0}")]
    NegativeInput(BigInt),
    #[error("{0} is too large for the four-squares search")]
    TooLarge(BigInt),
    #[error("no gadget registered for prime {0}")]
    MissingGadget(u64),
    #[error("gadget for {prime} must mention exactly x0..x3, found {vars:?}")]
    GadgetShape { prime: u64, vars: Vec<usize> },
    #[error("gadget for {0} registered twice")]
    DuplicateGadget(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("assignment is not a zero of the polynomial")]
    NotAZero,
    #[error("bad witness: {0}")]
    BadWitness(String),
    #[error("gadget record line {line}: {msg}")]
    Record { line: usize, msg: String },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `a^2 + b^2 + c^2 + d^2 = n` with `a >= b >= c >= d >= 0`, taking the
/// largest possible `a`, then `b`, then `c`.
pub fn four_squares(n: &BigInt) -> Result<[BigInt; 4], ReductionError> {
    if n.is_negative() {
        return Err(ReductionError::NegativeInput(n.clone()));
    }
    let m = n.to_u64().filter(|&m| m <= 1 << 50).ok_or_else(|| ReductionError::TooLarge(n.clone()))?;
    let [a, b, c, d] = four_squares_u64(m);
    Ok([a.into(), b.into(), c.into(), d.into()])
}

fn is_sum_of_three_squares(m: u64) -> bool {
    // Legendre: m is not of the form 4^k (8l + 7).
    if m == 0 {
        return true;
    }
    let mut r = m;
    while r % 4 == 0 {
        r /= 4;
    }
    r % 8 != 7
}

fn two_squares_u64(m: u64) -> Option<(u64, u64)> {
    let mut b = m.sqrt();
    loop {
        let rest = m - b * b;
        let c = rest.sqrt();
        if c * c == rest {
            return Some((b, c));
        }
        if b == 0 || b * b < rest {
            return None;
        }
        b -= 1;
    }
}

fn four_squares_u64(n: u64) -> [u64; 4] {
    let mut a = n.sqrt();
    loop {
        let m = n - a * a;
        if is_sum_of_three_squares(m) {
            let mut b = m.sqrt();
            loop {
                let r = m - b * b;
                if let Some((c, d)) = two_squares_u64(r) {
                    if c <= b {
                        return [a, b, c, d];
                    }
                }
                if b == 0 {
                    break;
                }
                b -= 1;
            }
        }
        // Lagrange guarantees termination before a underflows.
        a -= 1;
    }
}

/// Output of [`homogenize_with_positivity`] with the variable ids it uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homogenized {
    pub poly: Polynomial,
    /// `Y^d · f(X/Y)`.
    pub core: Polynomial,
    pub degree: u64,
    /// Variables of the input polynomial.
    pub vars: Vec<usize>,
    pub y: usize,
    /// `A, B, C, D` of the positivity gadget.
    pub squares: [usize; 4],
}

pub fn homogenize_with_positivity(f: &Polynomial) -> Result<Homogenized, ReductionError> {
    if f.is_zero() {
        return Err(ReductionError::ZeroPolynomial);
    }
    let base = f.max_var().map_or(0, |v| v + 1);
    let y = base;
    let squares = [base + 1, base + 2, base + 3, base + 4];
    let core = f.homogenize_core(y)?;
    let one = Polynomial::constant(BigInt::one());
    let mut gadget = &Polynomial::var(y) - &one;
    for s in squares {
        gadget = &gadget - &Polynomial::var(s).square();
    }
    let poly = &core.square() + &gadget.square();
    Ok(Homogenized {
        poly,
        degree: f.total_degree().unwrap(),
        core,
        vars: f.variables().into_iter().collect(),
        y,
        squares,
    })
}

impl Homogenized {
    /// Integer zero of the reduced polynomial from a rational zero of `f`:
    /// `Y` is the least common denominator, `X_i = x_i Y`, and `Y - 1` is
    /// split into four squares.
    pub fn forward(&self, f: &Polynomial, zero: &Assignment) -> Result<Assignment, ReductionError> {
        if !f.eval(zero)?.is_zero() {
            return Err(ReductionError::NotAZero);
        }
        let y = self
            .vars
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(zero[v].denom()));
        let mut out = Assignment::new();
        for v in &self.vars {
            out.insert(*v, &zero[v] * Rational::from_integer(y.clone()));
        }
        let parts = four_squares(&(&y - 1))?;
        out.insert(self.y, Rational::from_integer(y));
        for (s, part) in self.squares.iter().zip(parts) {
            out.insert(*s, Rational::from_integer(part));
        }
        Ok(out)
    }

    /// Rational zero of `f` from any zero of the reduced polynomial:
    /// `x_i = X_i / Y`.
    pub fn backward(&self, solution: &Assignment) -> Result<Assignment, ReductionError> {
        let y = solution
            .get(&self.y)
            .ok_or_else(|| ReductionError::BadWitness(format!("no value for x{}", self.y)))?;
        if y.is_zero() {
            return Err(ReductionError::BadWitness("Y = 0".into()));
        }
        self.vars
            .iter()
            .map(|v| {
                let x = solution
                    .get(v)
                    .ok_or_else(|| ReductionError::BadWitness(format!("no value for x{v}")))?;
                Ok((*v, x / y))
            })
            .collect()
    }
}

/// `Σ g_i^2`.
pub fn conjoin(gs: &[Polynomial]) -> Result<Polynomial, ReductionError> {
    if gs.is_empty() {
        return Err(ReductionError::EmptyConjunction);
    }
    Ok(gs.iter().fold(Polynomial::zero(), |acc, g| &acc + &g.square()))
}

/// How far the declared meaning of a gadget can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GadgetSemantics {
    /// Supplied externally as a diophantine definition of `v_p(Z) >= 0`;
    /// not verified here.
    Declared,
    /// Placeholder polynomial whose meaning is the injected predicate
    /// `v_p(Z) >= 0`, usable only through [`SemilocalReduction::mock_holds`].
    Mock,
}

/// Gadget polynomial in `Z = x0, X1 = x1, X2 = x2, X3 = x3` for one prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetEntry {
    pub prime: u64,
    pub poly: Polynomial,
    pub semantics: GadgetSemantics,
}

impl GadgetEntry {
    pub fn new(prime: u64, poly: Polynomial, semantics: GadgetSemantics) -> Result<Self, ReductionError> {
        if !crate::arith::is_prime(prime) {
            return Err(ReductionError::NotPrime(prime));
        }
        let vars: Vec<usize> = poly.variables().into_iter().collect();
        if vars != [0, 1, 2, 3] {
            return Err(ReductionError::GadgetShape { prime, vars });
        }
        Ok(GadgetEntry { prime, poly, semantics })
    }

    /// Mock gadget for `p`: placeholder polynomial `x0 + x1 + x2 + x3`.
    pub fn mock(prime: u64) -> Result<Self, ReductionError> {
        let poly = parse_polynomial("x0 + x1 + x2 + x3")?;
        GadgetEntry::new(prime, poly, GadgetSemantics::Mock)
    }
}

/// One line of a gadget file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetRecord {
    pub prime: u64,
    pub poly: String,
    pub semantics: GadgetSemantics,
}

/// At most one gadget per prime. Ships empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GadgetRegistry {
    entries: BTreeMap<u64, GadgetEntry>,
}

impl GadgetRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: GadgetEntry) -> Result<(), ReductionError> {
        if self.entries.contains_key(&entry.prime) {
            return Err(ReductionError::DuplicateGadget(entry.prime));
        }
        self.entries.insert(entry.prime, entry);
        Ok(())
    }

    pub fn get(&self, p: u64) -> Option<&GadgetEntry> {
        self.entries.get(&p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses one JSON record per line; blank lines and `#` comments are
    /// skipped.
    pub fn from_records(text: &str) -> Result<Self, ReductionError> {
        let mut reg = GadgetRegistry::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rec_err = |msg: String| ReductionError::Record { line: i + 1, msg };
            let rec: GadgetRecord = serde_json::from_str(line).map_err(|e| rec_err(e.to_string()))?;
            let poly = parse_polynomial(&rec.poly).map_err(|e| rec_err(e.to_string()))?;
            reg.insert(GadgetEntry::new(rec.prime, poly, rec.semantics)?)?;
        }
        Ok(reg)
    }

    pub fn to_records(&self) -> Vec<GadgetRecord> {
        self.entries
            .values()
            .map(|e| GadgetRecord {
                prime: e.prime,
                poly: e.poly.to_string(),
                semantics: e.semantics,
            })
            .collect()
    }
}

/// One substituted copy `f_p(Z_j, X_{1j}, X_{2j}, X_{3j})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetInstance {
    pub prime: u64,
    pub z_var: usize,
    pub aux: [usize; 3],
    pub poly: Polynomial,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemilocalReduction {
    pub poly: Polynomial,
    pub base: Polynomial,
    pub instances: Vec<GadgetInstance>,
    pub semantics: GadgetSemantics,
}

/// `g^2 + Σ_{p ∈ A0, j <= n} f_p(Z_j, X_{1j}, X_{2j}, X_{3j})^2`, with
/// auxiliary variables allocated after the largest variable of `g` in
/// `(p, j, k)` order.
pub fn semilocal_reduce(
    g: &Polynomial,
    excluded: &BTreeSet<u64>,
    registry: &GadgetRegistry,
) -> Result<SemilocalReduction, ReductionError> {
    let width = g.max_var().map_or(0, |v| v + 1);
    let mut next = width;
    let mut instances = Vec::with_capacity(excluded.len() * width);
    let mut semantics = GadgetSemantics::Declared;
    let mut poly = g.square();
    for &p in excluded {
        let entry = registry.get(p).ok_or(ReductionError::MissingGadget(p))?;
        if entry.semantics == GadgetSemantics::Mock {
            semantics = GadgetSemantics::Mock;
        }
        for j in 0..width {
            let aux = [next, next + 1, next + 2];
            next += 3;
            let copy = entry.poly.rename_vars(|v| if v == 0 { j } else { aux[v - 1] });
            poly = &poly + &copy.square();
            instances.push(GadgetInstance {
                prime: p,
                z_var: j,
                aux,
                poly: copy,
            });
        }
    }
    Ok(SemilocalReduction {
        poly,
        base: g.clone(),
        instances,
        semantics,
    })
}

impl SemilocalReduction {
    /// Evaluates the reduction under the mock reading of every gadget: the
    /// point `z` extends to a rational zero iff `g(z) = 0` and
    /// `v_p(z_j) >= 0` for each gadget instance.
    pub fn mock_holds(&self, z: &Assignment) -> Result<bool, ReductionError> {
        if !self.base.eval(z)?.is_zero() {
            return Ok(false);
        }
        for inst in &self.instances {
            let value = z.get(&inst.z_var).cloned().unwrap_or_else(Rational::zero);
            let v = padic_valuation(&value, inst.prime).map_err(|e| ReductionError::BadWitness(e.to_string()))?;
            if v.is_some_and(|v| v < 0) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, ratio};
    use crate::solver::search;
    use crate::subring::SubringDescriptor;

    fn p(s: &str) -> Polynomial {
        parse_polynomial(s).unwrap()
    }

    #[test]
    fn four_squares_examples() {
        let fs = |n: i64| four_squares(&BigInt::from(n)).unwrap().map(|x| x.to_i64().unwrap());
        assert_eq!(fs(0), [0, 0, 0, 0]);
        assert_eq!(fs(1), [1, 0, 0, 0]);
        assert_eq!(fs(7), [2, 1, 1, 1]);
        assert!(matches!(four_squares(&BigInt::from(-1)), Err(ReductionError::NegativeInput(_))));
    }

    #[test]
    fn four_squares_identity_up_to_ten_thousand() {
        for n in 0..=10_000u64 {
            let [a, b, c, d] = four_squares_u64(n);
            assert_eq!(a * a + b * b + c * c + d * d, n);
        }
    }

    #[test]
    fn homogenize_linear_example() {
        let f = p("2*x0 - 1");
        let h = homogenize_with_positivity(&f).unwrap();
        let expected = p("(2*x0 - x1)^2 + (x1 - 1 - x2^2 - x3^2 - x4^2 - x5^2)^2");
        assert_eq!(h.poly, expected);
        let fwd = h.forward(&f, &[(0, ratio(1, 2))].into_iter().collect()).unwrap();
        let expect: Assignment = [(0, int(1)), (1, int(2)), (2, int(1)), (3, int(0)), (4, int(0)), (5, int(0))]
            .into_iter()
            .collect();
        assert_eq!(fwd, expect);
        assert!(h.poly.eval(&fwd).unwrap().is_zero());
        assert_eq!(h.backward(&fwd).unwrap()[&0], ratio(1, 2));
    }

    #[test]
    fn homogenize_trivial_and_unsolvable() {
        let f = p("x0");
        let h = homogenize_with_positivity(&f).unwrap();
        let fwd = h.forward(&f, &[(0, int(0))].into_iter().collect()).unwrap();
        assert_eq!(fwd[&h.y], int(1));
        assert!(h.squares.iter().all(|s| fwd[s].is_zero()));

        // (X^2 + Y^2)^2 + (...)^2 forces X = Y = 0, contradicting Y >= 1.
        let g = p("x0^2 + 1");
        let hg = homogenize_with_positivity(&g).unwrap();
        assert!(hg.forward(&g, &[(0, int(0))].into_iter().collect()).is_err());
        for ring in [SubringDescriptor::integers(), SubringDescriptor::include([2, 3])] {
            assert!(!search(&hg.poly, &ring, 3).unwrap().is_found());
        }
        assert_eq!(homogenize_with_positivity(&Polynomial::zero()), Err(ReductionError::ZeroPolynomial));
    }

    #[test]
    fn conjoin_examples() {
        let one = conjoin(&[p("x0 - 2")]).unwrap();
        assert_eq!(one, p("(x0 - 2)^2"));
        let both = conjoin(&[p("x0 - 2"), p("x1 - x0")]).unwrap();
        let out = search(&both, &SubringDescriptor::integers(), 3).unwrap();
        let w = out.witness().unwrap();
        assert_eq!((w.assignment[&0].clone(), w.assignment[&1].clone()), (int(2), int(2)));
        let never = conjoin(&[p("x0 - 1"), p("x0 + 1")]).unwrap();
        assert_eq!(never, p("2*x0^2 + 2"));
        assert!(!search(&never, &SubringDescriptor::rationals(), 10).unwrap().is_found());
        assert_eq!(conjoin(&[]), Err(ReductionError::EmptyConjunction));
    }

    fn mock_registry(primes: &[u64]) -> GadgetRegistry {
        let mut reg = GadgetRegistry::new();
        for &q in primes {
            reg.insert(GadgetEntry::mock(q).unwrap()).unwrap();
        }
        reg
    }

    #[test]
    fn semilocal_empty_exclusion_squares() {
        let g = p("x0^2 - 2*x1");
        let out = semilocal_reduce(&g, &BTreeSet::new(), &GadgetRegistry::new()).unwrap();
        assert_eq!(out.poly, g.square());
        assert!(out.instances.is_empty());
    }

    #[test]
    fn semilocal_structure() {
        let g = p("x0*x2 - x1 + 1");
        let excluded: BTreeSet<u64> = [5, 7].into_iter().collect();
        let out = semilocal_reduce(&g, &excluded, &mock_registry(&[5, 7])).unwrap();
        assert_eq!(out.instances.len(), 2 * 3);
        assert_eq!(out.semantics, GadgetSemantics::Mock);
        let mut seen = BTreeSet::new();
        for (i, inst) in out.instances.iter().enumerate() {
            let expected_prime = if i < 3 { 5 } else { 7 };
            assert_eq!(inst.prime, expected_prime);
            assert_eq!(inst.z_var, i % 3);
            assert_eq!(inst.aux, [3 + 3 * i, 4 + 3 * i, 5 + 3 * i]);
            for a in inst.aux {
                assert!(seen.insert(a), "aux variable reused");
                assert!(!g.variables().contains(&a));
            }
        }
        assert_eq!(out.poly.max_var(), Some(3 + 3 * 6 - 1));
    }

    #[test]
    fn semilocal_missing_gadget() {
        let excluded: BTreeSet<u64> = [5].into_iter().collect();
        assert_eq!(
            semilocal_reduce(&p("x0"), &excluded, &GadgetRegistry::new()),
            Err(ReductionError::MissingGadget(5))
        );
    }

    #[test]
    fn semilocal_mock_semantics() {
        let excluded: BTreeSet<u64> = [5].into_iter().collect();
        let reg = mock_registry(&[5]);
        let ok = semilocal_reduce(&p("x0 - 1"), &excluded, &reg).unwrap();
        assert!(ok.mock_holds(&[(0, int(1))].into_iter().collect()).unwrap());
        // 5 Z - 1 = 0 forces Z = 1/5 with v_5 = -1: no point survives.
        let bad = semilocal_reduce(&p("5*x0 - 1"), &excluded, &reg).unwrap();
        assert!(!bad.mock_holds(&[(0, ratio(1, 5))].into_iter().collect()).unwrap());
        assert!(!bad.mock_holds(&[(0, int(1))].into_iter().collect()).unwrap());
    }

    #[test]
    fn gadget_records() {
        let text = "# gadgets\n{\"prime\":5,\"poly\":\"x0 + x1 + x2 + x3\",\"semantics\":\"mock\"}\n\n";
        let reg = GadgetRegistry::from_records(text).unwrap();
        assert_eq!(reg.len(), 1);
        assert_eq!(reg.get(5).unwrap().semantics, GadgetSemantics::Mock);
        assert_eq!(GadgetRegistry::from_records(&serde_json::to_string(&reg.to_records()[0]).unwrap()).unwrap(), reg);
        let dup = format!("{0}\n{0}", serde_json::to_string(&reg.to_records()[0]).unwrap());
        assert_eq!(GadgetRegistry::from_records(&dup), Err(ReductionError::DuplicateGadget(5)));
        let shape = "{\"prime\":5,\"poly\":\"x0 + x4\",\"semantics\":\"declared\"}";
        assert!(matches!(GadgetRegistry::from_records(shape), Err(ReductionError::GadgetShape { .. })));
        assert!(matches!(
            GadgetRegistry::from_records("{\"prime\":5}"),
            Err(ReductionError::Record { line: 1, .. })
        ));
    }
}
