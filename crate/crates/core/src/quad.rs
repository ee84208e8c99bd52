//! Decidable solvability on a quadratic fragment: p-adic valuations, Hilbert
//! symbols, Hasse-Minkowski isotropy over `Q`, sums of two squares inside
//! `R_W`, and a family recogniser that answers exactly or says
//! [`FamilyDecision::NotInFamily`].

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, ArithError};
use crate::poly::{Assignment, Monomial, Polynomial, Rational};
use crate::subring::{SubringDescriptor, SubringError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("Hilbert symbol of a zero argument")]
    ZeroInput,
    #[error("quadratic forms of dimension {0} are not supported (1..=4)")]
    Dimension(usize),
    #[error("zero coefficient in a diagonal form")]
    ZeroCoefficient,
    #[error("polynomial is not a quadratic form: {0}")]
    NotQuadratic(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Subring(#[from] SubringError),
}

/// A place of `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Place {
    Prime(u64),
    Infinity,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Prime(p) => write!(f, "{p}"),
            Place::Infinity => write!(f, "inf"),
        }
    }
}

impl From<Place> for String {
    fn from(p: Place) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Place {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        if s == "inf" {
            return Ok(Place::Infinity);
        }
        s.parse().map(Place::Prime).map_err(|_| format!("bad place {s:?}"))
    }
}

/// `v_p(q)`, or `None` for `q = 0` (valuation `+∞`).
pub fn padic_valuation(q: &Rational, p: u64) -> Result<Option<i64>, OracleError> {
    if !arith::is_prime(p) {
        return Err(OracleError::NotPrime(p));
    }
    if q.is_zero() {
        return Ok(None);
    }
    let up = arith::valuation_int(q.numer(), p) as i64;
    let down = arith::valuation_int(q.denom(), p) as i64;
    Ok(Some(up - down))
}

/// Integer in the same square class as `q ≠ 0`.
fn square_class_integer(q: &Rational) -> BigInt {
    q.numer() * q.denom()
}

/// `(a, b)_v`: `1` iff `z^2 = a x^2 + b y^2` has a nontrivial solution in
/// the completion at `place`. Case analysis on valuations and units.
pub fn hilbert_symbol(a: &Rational, b: &Rational, place: Place) -> Result<i8, OracleError> {
    if a.is_zero() || b.is_zero() {
        return Err(OracleError::ZeroInput);
    }
    let p = match place {
        Place::Infinity => {
            return Ok(if a.is_negative() && b.is_negative() { -1 } else { 1 });
        }
        Place::Prime(p) => p,
    };
    if !arith::is_prime(p) {
        return Err(OracleError::NotPrime(p));
    }
    let (alpha, u) = arith::split_prime(&square_class_integer(a), p);
    let (beta, v) = arith::split_prime(&square_class_integer(b), p);
    let (alpha, beta) = (alpha as i64, beta as i64);
    if p == 2 {
        let eps = |x: &BigInt| -> i64 { (x.mod_floor(&BigInt::from(4)).to_i64().unwrap() - 1) / 2 % 2 };
        let omega = |x: &BigInt| -> i64 {
            let r = x.mod_floor(&BigInt::from(8)).to_i64().unwrap();
            (r * r - 1) / 8 % 2
        };
        let e = eps(&u) * eps(&v) + alpha * omega(&v) + beta * omega(&u);
        Ok(if e % 2 == 0 { 1 } else { -1 })
    } else {
        let half = ((p - 1) / 2) as i64;
        let mut s: i32 = if (alpha * beta * half) % 2 == 0 { 1 } else { -1 };
        if beta % 2 == 1 {
            s *= arith::legendre(&u, p);
        }
        if alpha % 2 == 1 {
            s *= arith::legendre(&v, p);
        }
        Ok(s as i8)
    }
}

/// Independent evaluator of `(a, b)_p`: searches for a primitive zero of
/// `z^2 - A x^2 - B y^2` modulo `p^3` (`2^6` at `p = 2`), where `A, B` are
/// representatives of the square classes of `a, b` with valuation 0 or 1.
pub fn hilbert_symbol_exhaustive(a: &Rational, b: &Rational, place: Place) -> Result<i8, OracleError> {
    if a.is_zero() || b.is_zero() {
        return Err(OracleError::ZeroInput);
    }
    let p = match place {
        Place::Infinity => {
            // z^2 = a x^2 + b y^2 over R: try the sign patterns directly.
            let pos = |q: &Rational| q.is_positive();
            return Ok(if pos(a) || pos(b) { 1 } else { -1 });
        }
        Place::Prime(p) => p,
    };
    if !arith::is_prime(p) {
        return Err(OracleError::NotPrime(p));
    }
    let k = if p == 2 { 6 } else { 3 };
    let modulus = p.pow(k);
    let reduce = |q: &Rational| -> u64 {
        let (e, unit) = arith::split_prime(&square_class_integer(q), p);
        let unit = unit.mod_floor(&BigInt::from(modulus)).to_u64().unwrap();
        if e % 2 == 1 {
            unit * p % modulus
        } else {
            unit
        }
    };
    let (aa, bb) = (reduce(a), reduce(b));
    let mut is_square = vec![false; modulus as usize];
    for z in 0..modulus {
        is_square[(z * z % modulus) as usize] = true;
    }
    let value = |x: u64, y: u64| -> usize { ((aa * (x * x % modulus) + bb * (y * y % modulus)) % modulus) as usize };
    // Primitive zeros have x or y a unit; scale that coordinate to 1.
    let found = (0..modulus).any(|y| is_square[value(1, y)])
        || (0..modulus / p).any(|t| is_square[value(t * p, 1)]);
    Ok(if found { 1 } else { -1 })
}

/// Places where `(a, b)_v` can be `-1`: infinity, 2, and primes dividing a
/// numerator or denominator.
pub fn relevant_places(values: &[&Rational]) -> Result<Vec<Place>, OracleError> {
    let mut primes: BTreeSet<u64> = [2].into_iter().collect();
    for q in values {
        for part in [q.numer(), q.denom()] {
            if part.is_zero() {
                continue;
            }
            for (p, _) in arith::factor(&arith::magnitude(part))? {
                primes.insert(p);
            }
        }
    }
    let mut out: Vec<Place> = primes.into_iter().map(Place::Prime).collect();
    out.push(Place::Infinity);
    Ok(out)
}

/// Nondegenerate diagonal form `⟨a_1, .., a_n⟩`, `1 <= n <= 4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticForm {
    diag: Vec<Rational>,
}

impl QuadraticForm {
    pub fn new(diag: Vec<Rational>) -> Result<Self, OracleError> {
        if diag.is_empty() || diag.len() > 4 {
            return Err(OracleError::Dimension(diag.len()));
        }
        if diag.iter().any(Zero::is_zero) {
            return Err(OracleError::ZeroCoefficient);
        }
        Ok(QuadraticForm { diag })
    }

    pub fn diagonal(&self) -> &[Rational] {
        &self.diag
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Diagonalises a homogeneous quadratic polynomial in at most four
    /// variables by symmetric elimination. Returns the nonzero diagonal and
    /// the number of zero entries (the rank defect).
    pub fn from_polynomial(f: &Polynomial) -> Result<(Vec<Rational>, usize), OracleError> {
        if f.is_zero() || !f.is_homogeneous() || f.total_degree() != Some(2) {
            return Err(OracleError::NotQuadratic(f.to_string()));
        }
        let vars: Vec<usize> = f.variables().into_iter().collect();
        let n = vars.len();
        if n > 4 {
            return Err(OracleError::Dimension(n));
        }
        let mut g = vec![vec![Rational::zero(); n]; n];
        for (m, c) in f.terms() {
            let idx: Vec<(usize, u32)> = m
                .powers()
                .map(|(v, e)| (vars.iter().position(|&w| w == v).unwrap(), e))
                .collect();
            let c = Rational::from_integer(c.clone());
            match idx.as_slice() {
                [(i, 2)] => g[*i][*i] = c,
                [(i, 1), (j, 1)] => {
                    let half = c / Rational::from_integer(BigInt::from(2));
                    g[*i][*j] = half.clone();
                    g[*j][*i] = half;
                }
                _ => unreachable!("homogeneous of degree two"),
            }
        }
        let mut diag = Vec::new();
        let mut defect = 0;
        for k in 0..n {
            if g[k][k].is_zero() {
                if let Some(j) = (k + 1..n).find(|&j| !g[j][j].is_zero()) {
                    g.swap(k, j);
                    for row in g.iter_mut() {
                        row.swap(k, j);
                    }
                } else if let Some(j) = (k + 1..n).find(|&j| !g[k][j].is_zero()) {
                    // x_k ↦ x_k + x_j makes the pivot 2 g_kj.
                    for i in 0..n {
                        let v = g[i][j].clone();
                        g[i][k] += v;
                    }
                    for i in 0..n {
                        let v = g[j][i].clone();
                        g[k][i] += v;
                    }
                }
            }
            let pivot = g[k][k].clone();
            if pivot.is_zero() {
                defect += 1;
                continue;
            }
            for i in k + 1..n {
                let factor = &g[i][k] / &pivot;
                if factor.is_zero() {
                    continue;
                }
                for j in k..n {
                    let v = &factor * &g[k][j];
                    g[i][j] -= v;
                }
                for j in k..n {
                    let v = &factor * &g[j][k];
                    g[j][i] -= v;
                }
            }
            diag.push(pivot);
        }
        Ok((diag, defect))
    }
}

/// Explanation attached to a verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reason {
    /// `X^2 + Y^2 = q` in `R_W`.
    TwoSquares {
        q: String,
        negative: bool,
        /// A prime `≡ 3 (mod 4)` with odd valuation.
        odd_valuation_prime: Option<u64>,
        /// A denominator prime outside `W`.
        missing_denominator_prime: Option<u64>,
    },
    /// Single root `r` of a linear polynomial.
    LinearRoot { root: String, blocking_prime: Option<u64> },
    /// Hasse-Minkowski on the diagonal form; `failing_places` lists every
    /// place where it is anisotropic (empty iff isotropic over `Q`).
    Isotropy { form: Vec<String>, failing_places: Vec<Place> },
    /// Homogeneous polynomial: the zero vector is a solution.
    TrivialZero { form_isotropic: bool },
    /// Nonzero constant polynomial.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub solvable: bool,
    pub reason: Reason,
    #[serde(with = "crate::serde_text::optional_assignment", default)]
    pub witness: Option<Assignment>,
}

fn is_local_square(d: &Rational, place: Place) -> bool {
    match place {
        Place::Infinity => d.is_positive(),
        Place::Prime(p) => {
            let (e, u) = arith::split_prime(&square_class_integer(d), p);
            if e % 2 == 1 {
                return false;
            }
            if p == 2 {
                u.mod_floor(&BigInt::from(8)) == BigInt::one()
            } else {
                arith::legendre(&u, p) == 1
            }
        }
    }
}

fn neg(q: &Rational) -> Rational {
    -q.clone()
}

/// Isotropy of `⟨a_1, .., a_n⟩` over the completion at `place`, `n >= 3`.
fn locally_isotropic(diag: &[Rational], place: Place) -> Result<bool, OracleError> {
    match diag.len() {
        3 => {
            let (a, b, c) = (&diag[0], &diag[1], &diag[2]);
            Ok(hilbert_symbol(&neg(&(a * c)), &neg(&(b * c)), place)? == 1)
        }
        4 => {
            let d: Rational = diag.iter().fold(Rational::one(), |acc, x| acc * x);
            if !is_local_square(&d, place) {
                return Ok(true);
            }
            let mut eps = 1i8;
            for i in 0..4 {
                for j in i + 1..4 {
                    eps *= hilbert_symbol(&diag[i], &diag[j], place)?;
                }
            }
            let minus_one = Rational::from_integer(BigInt::from(-1));
            Ok(eps == hilbert_symbol(&minus_one, &minus_one, place)?)
        }
        n => Err(OracleError::Dimension(n)),
    }
}

/// Hasse-Minkowski: `⟨a_i⟩` is isotropic over `Q` iff it is isotropic at
/// every place.
pub fn isotropic_over_q(form: &QuadraticForm) -> Result<OracleVerdict, OracleError> {
    let diag = form.diagonal();
    let failing = match diag.len() {
        1 => vec![Place::Infinity],
        2 => {
            // Binary forms: isotropic iff -a_1 a_2 is a square, checked at
            // each place where it can fail to be one.
            let d = neg(&(&diag[0] * &diag[1]));
            let mut out = Vec::new();
            for place in relevant_places(&[&d])? {
                if !is_local_square(&d, place) {
                    out.push(place);
                }
            }
            out
        }
        _ => {
            let refs: Vec<&Rational> = diag.iter().collect();
            let mut out = Vec::new();
            for place in relevant_places(&refs)? {
                if !locally_isotropic(diag, place)? {
                    out.push(place);
                }
            }
            out
        }
    };
    Ok(OracleVerdict {
        solvable: failing.is_empty(),
        reason: Reason::Isotropy {
            form: diag.iter().map(ToString::to_string).collect(),
            failing_places: failing,
        },
        witness: None,
    })
}

/// `n = u^2 + v^2` for a positive integer all of whose primes `≡ 3 (mod 4)`
/// occur to even powers; `u >= v >= 0`.
pub fn two_squares_decomposition(n: &BigInt) -> Result<Option<(BigInt, BigInt)>, OracleError> {
    if n.is_zero() {
        return Ok(Some((BigInt::zero(), BigInt::zero())));
    }
    if n.is_negative() {
        return Ok(None);
    }
    // Gaussian integer product.
    let (mut re, mut im) = (BigInt::one(), BigInt::zero());
    let mul = |re: &mut BigInt, im: &mut BigInt, a: &BigInt, b: &BigInt| {
        let r = &*re * a - &*im * b;
        let i = &*re * b + &*im * a;
        *re = r;
        *im = i;
    };
    for (p, e) in arith::factor(&arith::magnitude(n))? {
        if p % 4 == 3 {
            if e % 2 == 1 {
                return Ok(None);
            }
            let s = BigInt::from(p).pow(e / 2);
            re *= &s;
            im *= &s;
            continue;
        }
        let (a, b) = if p == 2 {
            (BigInt::one(), BigInt::one())
        } else {
            let (a, b) = prime_two_squares(p);
            (BigInt::from(a), BigInt::from(b))
        };
        for _ in 0..e {
            mul(&mut re, &mut im, &a, &b);
        }
    }
    let (u, v) = (re.abs(), im.abs());
    Ok(Some(if u >= v { (u, v) } else { (v, u) }))
}

/// `p = a^2 + b^2` for a prime `p ≡ 1 (mod 4)` (Hermite-Serret).
fn prime_two_squares(p: u64) -> (u64, u64) {
    let mut r0 = p as u128;
    let mut r1 = arith::sqrt_minus_one(p) as u128;
    if r1 > r0 / 2 {
        r1 = r0 - r1;
    }
    while r1 * r1 > p as u128 {
        let t = r0 % r1;
        r0 = r1;
        r1 = t;
    }
    let a = r1 as u64;
    let b = ((p - a * a) as f64).sqrt().round() as u64;
    debug_assert_eq!(a * a + b * b, p);
    (a.max(b), a.min(b))
}

/// Decides `∃ X, Y ∈ R_W: X^2 + Y^2 = q`.
///
/// True iff `q = 0`, or `q > 0`, every prime `≡ 3 (mod 4)` has even
/// valuation in `q`, and every prime with negative valuation lies in `W`.
/// The witness is `(u/s, v/s)` with `s` the denominator of `q` and
/// `u^2 + v^2 = q s^2`.
pub fn two_squares_in_subring(q: &Rational, w: &SubringDescriptor) -> Result<OracleVerdict, OracleError> {
    two_squares_verdict(q, w, 0, 1)
}

fn two_squares_verdict(q: &Rational, w: &SubringDescriptor, x: usize, y: usize) -> Result<OracleVerdict, OracleError> {
    let reason = |negative, odd, missing| Reason::TwoSquares {
        q: q.to_string(),
        negative,
        odd_valuation_prime: odd,
        missing_denominator_prime: missing,
    };
    if q.is_zero() {
        return Ok(OracleVerdict {
            solvable: true,
            reason: reason(false, None, None),
            witness: Some([(x, Rational::zero()), (y, Rational::zero())].into_iter().collect()),
        });
    }
    if q.is_negative() {
        return Ok(OracleVerdict {
            solvable: false,
            reason: reason(true, None, None),
            witness: None,
        });
    }
    let num_f = arith::factor(&arith::magnitude(q.numer()))?;
    let den_f = arith::factor(&arith::magnitude(q.denom()))?;
    let odd = num_f
        .iter()
        .chain(den_f.iter())
        .filter(|(p, e)| p % 4 == 3 && e % 2 == 1)
        .map(|(p, _)| *p)
        .min();
    if odd.is_some() {
        return Ok(OracleVerdict {
            solvable: false,
            reason: reason(false, odd, None),
            witness: None,
        });
    }
    for (p, _) in &den_f {
        if !w.contains_prime(*p)? {
            return Ok(OracleVerdict {
                solvable: false,
                reason: reason(false, None, Some(*p)),
                witness: None,
            });
        }
    }
    let s = q.denom().clone();
    let n = q.numer() * &s;
    let (u, v) = two_squares_decomposition(&n)?.expect("local conditions hold");
    let witness: Assignment = [(x, Rational::new(u, s.clone())), (y, Rational::new(v, s))]
        .into_iter()
        .collect();
    Ok(OracleVerdict {
        solvable: true,
        reason: reason(false, None, None),
        witness: Some(witness),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyDecision {
    Verdict(OracleVerdict),
    NotInFamily,
}

impl FamilyDecision {
    pub fn verdict(&self) -> Option<&OracleVerdict> {
        match self {
            FamilyDecision::Verdict(v) => Some(v),
            FamilyDecision::NotInFamily => None,
        }
    }

    pub fn solvable(&self) -> Option<bool> {
        self.verdict().map(|v| v.solvable)
    }
}

/// Square-only polynomial `Σ a_i x_i^2 + k`: the `(var, a_i)` list and `k`.
fn diagonal_shape(f: &Polynomial) -> Option<(Vec<(usize, BigInt)>, BigInt)> {
    let mut squares = Vec::new();
    let mut constant = BigInt::zero();
    for (m, c) in f.terms() {
        if m.is_one() {
            constant = c.clone();
            continue;
        }
        let powers: Vec<(usize, u32)> = m.powers().collect();
        match powers.as_slice() {
            [(v, 2)] => squares.push((*v, c.clone())),
            _ => return None,
        }
    }
    Some((squares, constant))
}

/// Exact solvability of `f` in `R_W` on the supported family, or
/// [`FamilyDecision::NotInFamily`]:
///
/// * nonzero constants (never solvable);
/// * `a x + b` in one variable (by its root);
/// * `c (x_i^2 + x_j^2) - e` (by [`two_squares_in_subring`]);
/// * homogeneous diagonal forms in at most four variables (trivial zero);
/// * `Σ a_i x_i^2 + k` in at most three variables, when `Q` has no
///   solution (then no subring has one), or when `R_W = Q`.
pub fn decide_family_member(f: &Polynomial, w: &SubringDescriptor) -> Result<FamilyDecision, OracleError> {
    if f.is_zero() {
        return Ok(FamilyDecision::NotInFamily);
    }
    let vars: Vec<usize> = f.variables().into_iter().collect();
    if vars.is_empty() {
        return Ok(FamilyDecision::Verdict(OracleVerdict {
            solvable: false,
            reason: Reason::Constant,
            witness: None,
        }));
    }
    if vars.len() == 1 && f.total_degree() == Some(1) {
        let v = vars[0];
        let a = f.coefficient(&Monomial::var(v));
        let b = f.coefficient(&Monomial::one());
        let root = Rational::new(-b, a);
        let mut blocking = None;
        for (p, _) in arith::factor(&arith::magnitude(root.denom()))? {
            if !w.contains_prime(p)? {
                blocking = Some(p);
                break;
            }
        }
        return Ok(FamilyDecision::Verdict(OracleVerdict {
            solvable: blocking.is_none(),
            reason: Reason::LinearRoot {
                root: root.to_string(),
                blocking_prime: blocking,
            },
            witness: blocking.is_none().then(|| [(v, root)].into_iter().collect()),
        }));
    }
    let Some((squares, constant)) = diagonal_shape(f) else {
        return Ok(FamilyDecision::NotInFamily);
    };
    if squares.len() == 2 && squares[0].1 == squares[1].1 {
        let c = &squares[0].1;
        let q = Rational::new(-constant, c.clone());
        return Ok(FamilyDecision::Verdict(two_squares_verdict(
            &q,
            w,
            squares[0].0,
            squares[1].0,
        )?));
    }
    let coeffs: Vec<Rational> = squares.iter().map(|(_, c)| Rational::from_integer(c.clone())).collect();
    if constant.is_zero() {
        if coeffs.len() > 4 {
            return Ok(FamilyDecision::NotInFamily);
        }
        let iso = isotropic_over_q(&QuadraticForm::new(coeffs)?)?;
        return Ok(FamilyDecision::Verdict(OracleVerdict {
            solvable: true,
            reason: Reason::TrivialZero {
                form_isotropic: iso.solvable,
            },
            witness: Some(vars.iter().map(|&v| (v, Rational::zero())).collect()),
        }));
    }
    if coeffs.len() > 3 {
        return Ok(FamilyDecision::NotInFamily);
    }
    // Σ a_i x_i^2 = -k has a rational solution iff ⟨a_1, .., a_n, k⟩ is
    // isotropic.
    let mut extended = coeffs;
    extended.push(Rational::from_integer(constant));
    let iso = isotropic_over_q(&QuadraticForm::new(extended)?)?;
    if !iso.solvable {
        return Ok(FamilyDecision::Verdict(iso));
    }
    if *w == SubringDescriptor::rationals() {
        return Ok(FamilyDecision::Verdict(iso));
    }
    Ok(FamilyDecision::NotInFamily)
}
