//! Computable bijection between the naturals and canonical integer
//! polynomials.
//!
//! * Monomials: the empty exponent vector is 0; a vector `(e_0, .., e_{L-1})`
//!   with `e_{L-1} >= 1` maps to `1 + <L-1, tuple(e_0, .., e_{L-1} - 1)>`.
//! * Coefficients: nonzero integers zig-zag onto the naturals
//!   (`1, -1, 2, -2, ..` ↦ `0, 1, 2, 3, ..`).
//! * Terms are sorted by monomial code; each becomes
//!   `<gap to previous monomial code, coefficient code>`.
//! * The term list is a finite sequence: empty ↦ 0 (the zero polynomial),
//!   otherwise `1 + <len-1, tuple(terms)>`.
//!
//! `<x, y>` is the Cantor pairing and `tuple` folds it right to left.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{Monomial, Polynomial};

/// Code number of a polynomial under the fixed bijection.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PolyCode(pub BigUint);

impl fmt::Display for PolyCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for PolyCode {
    type Err = num_bigint::ParseBigIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(PolyCode)
    }
}

impl From<PolyCode> for String {
    fn from(c: PolyCode) -> String {
        c.0.to_string()
    }
}

impl TryFrom<String> for PolyCode {
    type Error = num_bigint::ParseBigIntError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<u64> for PolyCode {
    fn from(n: u64) -> Self {
        PolyCode(BigUint::from(n))
    }
}

fn pair(x: &BigUint, y: &BigUint) -> BigUint {
    let s = x + y;
    (&s * (&s + 1u32)) / 2u32 + y
}

fn unpair(z: &BigUint) -> (BigUint, BigUint) {
    // w = floor((sqrt(8z + 1) - 1) / 2)
    let w = ((z * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&w * (&w + 1u32)) / 2u32;
    let y = z - t;
    let x = w - &y;
    (x, y)
}

fn tuple(xs: &[BigUint]) -> BigUint {
    let (last, init) = xs.split_last().expect("nonempty tuple");
    init.iter().rev().fold(last.clone(), |acc, x| pair(x, &acc))
}

fn untuple(mut z: BigUint, len: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(len);
    for _ in 1..len {
        let (x, rest) = unpair(&z);
        out.push(x);
        z = rest;
    }
    out.push(z);
    out
}

fn seq_code(xs: &[BigUint]) -> BigUint {
    if xs.is_empty() {
        return BigUint::zero();
    }
    pair(&BigUint::from(xs.len() - 1), &tuple(xs)) + 1u32
}

fn seq_decode(n: &BigUint) -> Vec<BigUint> {
    if n.is_zero() {
        return Vec::new();
    }
    let (len_minus_one, body) = unpair(&(n - 1u32));
    let len = len_minus_one
        .to_usize()
        .expect("sequence length fits in memory")
        + 1;
    untuple(body, len)
}

fn monomial_code(m: &Monomial) -> BigUint {
    let exps = m.exponents();
    if exps.is_empty() {
        return BigUint::zero();
    }
    let mut v: Vec<BigUint> = exps.iter().map(|&e| BigUint::from(e)).collect();
    let last = v.last_mut().unwrap();
    *last -= 1u32;
    pair(&BigUint::from(exps.len() - 1), &tuple(&v)) + 1u32
}

fn monomial_decode(n: &BigUint) -> Monomial {
    if n.is_zero() {
        return Monomial::one();
    }
    let (len_minus_one, body) = unpair(&(n - 1u32));
    let len = len_minus_one.to_usize().expect("exponent vector length") + 1;
    let mut exps: Vec<u32> = untuple(body, len)
        .into_iter()
        .map(|e| e.to_u32().expect("exponent fits in u32"))
        .collect();
    *exps.last_mut().unwrap() += 1;
    Monomial::new(exps)
}

fn coefficient_code(c: &BigInt) -> BigUint {
    let mag = c.magnitude();
    match c.sign() {
        Sign::Plus => (mag - 1u32) * 2u32,
        Sign::Minus => mag * 2u32 - 1u32,
        Sign::NoSign => panic!("zero coefficient in canonical polynomial"),
    }
}

fn coefficient_decode(n: &BigUint) -> BigInt {
    let half = n / 2u32;
    if (n % 2u32).is_zero() {
        BigInt::from(half + 1u32)
    } else {
        -BigInt::from(half + 1u32)
    }
}

pub fn encode(f: &Polynomial) -> PolyCode {
    let mut coded: Vec<(BigUint, BigUint)> = f
        .terms()
        .map(|(m, c)| (monomial_code(m), coefficient_code(c)))
        .collect();
    coded.sort();
    let mut prev: Option<BigUint> = None;
    let items: Vec<BigUint> = coded
        .into_iter()
        .map(|(m, c)| {
            let gap = match &prev {
                None => m.clone(),
                Some(p) => &m - p - 1u32,
            };
            prev = Some(m);
            pair(&gap, &c)
        })
        .collect();
    PolyCode(seq_code(&items))
}

pub fn decode(code: &PolyCode) -> Polynomial {
    let items = seq_decode(&code.0);
    let mut next = BigUint::zero();
    let mut terms = Vec::with_capacity(items.len());
    for item in items {
        let (gap, c) = unpair(&item);
        let m = &next + gap;
        next = &m + BigUint::one();
        terms.push((monomial_decode(&m), coefficient_decode(&c)));
    }
    Polynomial::from_terms(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use proptest::prelude::*;

    #[test]
    fn zero_is_code_zero() {
        assert_eq!(decode(&PolyCode::from(0)), Polynomial::zero());
        assert_eq!(encode(&Polynomial::zero()), PolyCode::from(0));
    }

    #[test]
    fn pairing_is_inverse() {
        for z in 0u32..2000 {
            let z = BigUint::from(z);
            let (x, y) = unpair(&z);
            assert_eq!(pair(&x, &y), z);
        }
    }

    #[test]
    fn encode_decode_on_initial_segment() {
        for n in 0u64..=10_000 {
            let code = PolyCode::from(n);
            let f = decode(&code);
            assert_eq!(encode(&f), code, "n = {n}, f = {f}");
        }
    }

    #[test]
    fn decode_encode_example() {
        let f = parse_polynomial("2*x0 - 1").unwrap();
        assert_eq!(decode(&encode(&f)), f);
    }

    #[test]
    fn code_text_round_trip() {
        let f = parse_polynomial("x3^2 - 7*x1").unwrap();
        let code = encode(&f);
        let text: String = code.clone().into();
        assert_eq!(text.parse::<PolyCode>().unwrap(), code);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn decode_inverts_encode(f in crate::poly::tests::arb_poly(3, 3, 5)) {
            prop_assert_eq!(decode(&encode(&f)), f);
        }
    }
}
