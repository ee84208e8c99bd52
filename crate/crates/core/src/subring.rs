//! Sets of primes `W` and the subrings `R_W = Z[1/p : p ∈ W]` they define.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, ArithError};
use crate::poly::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubringError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("bad descriptor {text:?}: {msg}")]
    Parse { text: String, msg: String },
    #[error("bad condition {0:?}: expected a string of 0s and 1s")]
    BadCondition(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Stream used for the bits of [`SubringDescriptor::Sampled`], kept apart
/// from the per-sample streams of the measure experiments.
const SAMPLED_STREAM: u64 = u64::MAX;

/// Fair coin indexed by `(seed, stream, index)`: a pure function of the
/// three values, stable across platforms.
pub fn fair_coin(seed: u64, stream: u64, index: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos((index / 32) as u128);
    (rng.next_u32() >> (index % 32)) & 1 == 1
}

/// The first `len` coins of `(seed, stream)`.
pub fn fair_coins(seed: u64, stream: u64, len: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let word = rng.next_u32();
        for b in 0..32 {
            if out.len() == len {
                break;
            }
            out.push((word >> b) & 1 == 1);
        }
    }
    out
}

/// Finite binary string; bit `i` refers to the prime `p_i`. Names the
/// cylinder of all `W` extending it.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Condition {
    bits: Vec<bool>,
}

impl Condition {
    pub fn new(bits: Vec<bool>) -> Self {
        Condition { bits }
    }

    pub fn empty() -> Self {
        Condition::default()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn child(&self, bit: bool) -> Condition {
        let mut bits = self.bits.clone();
        bits.push(bit);
        Condition { bits }
    }

    pub fn is_prefix_of(&self, other: &Condition) -> bool {
        other.bits.starts_with(&self.bits)
    }

    /// Primes whose bit is set.
    pub fn included_primes(&self) -> BTreeSet<u64> {
        self.primes_with(true)
    }

    /// Primes whose bit is clear.
    pub fn excluded_primes(&self) -> BTreeSet<u64> {
        self.primes_with(false)
    }

    fn primes_with(&self, value: bool) -> BTreeSet<u64> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == value)
            .map(|(i, _)| arith::nth_prime(i))
            .collect()
    }

    /// Smallest ring in the cylinder: exactly the set bits.
    pub fn smallest_ring(&self) -> SubringDescriptor {
        SubringDescriptor::FiniteInclude(self.included_primes())
    }

    /// Largest ring in the cylinder: everything but the clear bits.
    pub fn largest_ring(&self) -> SubringDescriptor {
        SubringDescriptor::CofiniteExclude(self.excluded_primes())
    }

    /// All strings of length `len` in lexicographic order (`0 < 1`).
    pub fn all_of_length(len: usize) -> impl Iterator<Item = Condition> {
        assert!(len < 64, "condition length {len} too large to enumerate");
        (0u64..(1u64 << len)).map(move |n| {
            Condition::new((0..len).map(|i| (n >> (len - 1 - i)) & 1 == 1).collect())
        })
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Condition({:?})", self.to_string())
    }
}

impl FromStr for Condition {
    type Err = SubringError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(SubringError::BadCondition(s.to_string())),
            })
            .collect::<Result<_, _>>()?;
        Ok(Condition { bits })
    }
}

impl From<Condition> for String {
    fn from(c: Condition) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Condition {
    type Error = SubringError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Decidable description of a set of primes `W`.
///
/// Text forms: `include:2,5`, `exclude:5`, `residue:3mod4;override:7=0`,
/// `cond:0101;default=1`, `random:seed=42`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SubringDescriptor {
    /// `W` is exactly this finite set.
    FiniteInclude(BTreeSet<u64>),
    /// `W` is every prime except this finite set.
    CofiniteExclude(BTreeSet<u64>),
    /// Primes in any of the residue classes `a mod m`, with per-prime
    /// overrides taking precedence.
    ResidueRule {
        classes: Vec<(u64, u64)>,
        overrides: BTreeMap<u64, bool>,
    },
    /// Bits of the condition, then `default` for every later prime.
    ConditionPlusDefault { condition: Condition, default: bool },
    /// Each prime `p_i` is in `W` by an independent fair coin of `(seed, i)`.
    Sampled { seed: u64 },
}

impl SubringDescriptor {
    /// `R_W = Z`.
    pub fn integers() -> Self {
        SubringDescriptor::FiniteInclude(BTreeSet::new())
    }

    /// `R_W = Q`.
    pub fn rationals() -> Self {
        SubringDescriptor::CofiniteExclude(BTreeSet::new())
    }

    pub fn include<I: IntoIterator<Item = u64>>(primes: I) -> Self {
        SubringDescriptor::FiniteInclude(primes.into_iter().collect())
    }

    pub fn exclude<I: IntoIterator<Item = u64>>(primes: I) -> Self {
        SubringDescriptor::CofiniteExclude(primes.into_iter().collect())
    }

    /// Primes `≡ a (mod m)`.
    pub fn residue(a: u64, m: u64) -> Self {
        SubringDescriptor::ResidueRule {
            classes: vec![(a, m)],
            overrides: BTreeMap::new(),
        }
    }

    pub fn contains_prime(&self, p: u64) -> Result<bool, SubringError> {
        if !arith::is_prime(p) {
            return Err(SubringError::NotPrime(p));
        }
        Ok(match self {
            SubringDescriptor::FiniteInclude(s) => s.contains(&p),
            SubringDescriptor::CofiniteExclude(s) => !s.contains(&p),
            SubringDescriptor::ResidueRule { classes, overrides } => match overrides.get(&p) {
                Some(&b) => b,
                None => classes.iter().any(|&(a, m)| m != 0 && p % m == a % m),
            },
            SubringDescriptor::ConditionPlusDefault { condition, default } => {
                let i = arith::prime_index(p)?;
                condition.bit(i).unwrap_or(*default)
            }
            SubringDescriptor::Sampled { seed } => {
                let i = arith::prime_index(p)?;
                fair_coin(*seed, SAMPLED_STREAM, i as u64)
            }
        })
    }

    /// Whether the positive integer `n` has all its prime factors in `W`.
    pub fn is_smooth(&self, n: &BigInt) -> Result<bool, SubringError> {
        debug_assert!(n.is_positive());
        match self {
            SubringDescriptor::FiniteInclude(s) => {
                let mut rest = n.clone();
                for &p in s {
                    let (_, r) = arith::split_prime(&rest, p);
                    rest = r;
                }
                Ok(rest.is_one())
            }
            SubringDescriptor::CofiniteExclude(s) => {
                Ok(s.iter().all(|&p| !n.is_multiple_of(&BigInt::from(p))))
            }
            _ => {
                for (p, _) in arith::factor(&arith::magnitude(n))? {
                    if !self.contains_prime(p)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// `q ∈ R_W`: every prime of the denominator lies in `W`.
    pub fn contains_rational(&self, q: &Rational) -> Result<bool, SubringError> {
        self.is_smooth(q.denom())
    }

    /// The first `len` bits of `W`.
    pub fn restrict(&self, len: usize) -> Condition {
        Condition::new(
            (0..len)
                .map(|i| {
                    self.contains_prime(arith::nth_prime(i))
                        .expect("nth_prime is prime")
                })
                .collect(),
        )
    }

    /// Membership bits for every prime `<= bound`, in index order.
    pub fn prime_bits_up_to(&self, bound: u64) -> Vec<bool> {
        self.restrict(arith::prime_pi(bound)).bits().to_vec()
    }
}

impl fmt::Display for SubringDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(s: &BTreeSet<u64>) -> String {
            s.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
        }
        match self {
            SubringDescriptor::FiniteInclude(s) => write!(f, "include:{}", list(s)),
            SubringDescriptor::CofiniteExclude(s) => write!(f, "exclude:{}", list(s)),
            SubringDescriptor::ResidueRule { classes, overrides } => {
                let cls: Vec<String> = classes.iter().map(|(a, m)| format!("{a}mod{m}")).collect();
                write!(f, "residue:{}", cls.join(","))?;
                if !overrides.is_empty() {
                    let ov: Vec<String> = overrides
                        .iter()
                        .map(|(p, b)| format!("{p}={}", u8::from(*b)))
                        .collect();
                    write!(f, ";override:{}", ov.join(","))?;
                }
                Ok(())
            }
            SubringDescriptor::ConditionPlusDefault { condition, default } => {
                write!(f, "cond:{condition};default={}", u8::from(*default))
            }
            SubringDescriptor::Sampled { seed } => write!(f, "random:seed={seed}"),
        }
    }
}

impl FromStr for SubringDescriptor {
    type Err = SubringError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |msg: &str| SubringError::Parse {
            text: text.to_string(),
            msg: msg.to_string(),
        };
        let num = |s: &str| -> Result<u64, SubringError> {
            s.trim().parse::<u64>().map_err(|_| err(&format!("bad number {s:?}")))
        };
        let prime = |s: &str| -> Result<u64, SubringError> {
            let p = num(s)?;
            if arith::is_prime(p) {
                Ok(p)
            } else {
                Err(SubringError::NotPrime(p))
            }
        };
        let prime_list = |s: &str| -> Result<BTreeSet<u64>, SubringError> {
            s.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(prime)
                .collect()
        };
        let bit = |s: &str| match s.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(err(&format!("expected 0 or 1, got {other:?}"))),
        };

        let trimmed = text.trim();
        let (kind, body) = trimmed
            .split_once(':')
            .ok_or_else(|| err("expected <kind>:<body>"))?;
        match kind.trim() {
            "include" => Ok(SubringDescriptor::FiniteInclude(prime_list(body)?)),
            "exclude" => Ok(SubringDescriptor::CofiniteExclude(prime_list(body)?)),
            "residue" => {
                let mut parts = body.split(';');
                let mut classes = Vec::new();
                for cls in parts.next().unwrap_or("").split(',').filter(|c| !c.trim().is_empty()) {
                    let (a, m) = cls
                        .split_once("mod")
                        .ok_or_else(|| err("expected <a>mod<m>"))?;
                    let m = num(m)?;
                    if m == 0 {
                        return Err(err("modulus must be positive"));
                    }
                    classes.push((num(a)?, m));
                }
                let mut overrides = BTreeMap::new();
                for extra in parts {
                    let list = extra
                        .trim()
                        .strip_prefix("override:")
                        .ok_or_else(|| err("expected override:<p>=<bit>,..."))?;
                    for item in list.split(',').filter(|i| !i.trim().is_empty()) {
                        let (p, b) = item.split_once('=').ok_or_else(|| err("expected <p>=<bit>"))?;
                        overrides.insert(prime(p)?, bit(b)?);
                    }
                }
                Ok(SubringDescriptor::ResidueRule { classes, overrides })
            }
            "cond" => {
                let (bits, rest) = match body.split_once(';') {
                    Some((b, r)) => (b, Some(r)),
                    None => (body, None),
                };
                let condition: Condition = bits.parse()?;
                let default = match rest {
                    None => false,
                    Some(r) => bit(
                        r.trim()
                            .strip_prefix("default=")
                            .ok_or_else(|| err("expected default=<bit>"))?,
                    )?,
                };
                Ok(SubringDescriptor::ConditionPlusDefault { condition, default })
            }
            "random" => {
                let seed = body
                    .trim()
                    .strip_prefix("seed=")
                    .ok_or_else(|| err("expected seed=<n>"))?;
                Ok(SubringDescriptor::Sampled { seed: num(seed)? })
            }
            other => Err(err(&format!("unknown descriptor kind {other:?}"))),
        }
    }
}

impl From<SubringDescriptor> for String {
    fn from(d: SubringDescriptor) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for SubringDescriptor {
    type Error = SubringError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Primes of the denominator of `q`, ascending.
pub fn denominator_primes(q: &Rational) -> Result<BTreeSet<u64>, SubringError> {
    Ok(arith::factor(&arith::magnitude(q.denom()))?
        .into_iter()
        .map(|(p, _)| p)
        .collect())
}

/// Same as [`denominator_primes`] for a machine denominator.
pub fn small_denominator_primes(d: u64) -> BTreeSet<u64> {
    arith::factor_u64(d)
        .expect("machine-size denominators factor within the sieve")
        .into_iter()
        .map(|(p, _)| p)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, ratio};
    use proptest::prelude::*;
    use num_traits::ToPrimitive;

    fn w3() -> SubringDescriptor {
        SubringDescriptor::residue(3, 4)
    }

    #[test]
    fn contains_prime_examples() {
        assert!(w3().contains_prime(7).unwrap());
        assert!(!w3().contains_prime(5).unwrap());
        let z = SubringDescriptor::integers();
        assert!(!z.contains_prime(2).unwrap());
        assert!(!z.contains_prime(101).unwrap());
        assert_eq!(z.contains_prime(9), Err(SubringError::NotPrime(9)));
    }

    #[test]
    fn contains_rational_examples() {
        let z = SubringDescriptor::integers();
        assert!(z.contains_rational(&int(-17)).unwrap());
        assert!(w3().contains_rational(&int(4)).unwrap());
        assert!(SubringDescriptor::include([2]).contains_rational(&ratio(1, 2)).unwrap());
        assert!(SubringDescriptor::include([2, 5]).contains_rational(&ratio(3, 10)).unwrap());
        assert!(!SubringDescriptor::include([2]).contains_rational(&ratio(3, 10)).unwrap());
        assert!(!SubringDescriptor::exclude([5]).contains_rational(&ratio(3, 10)).unwrap());
        assert!(w3().contains_rational(&ratio(1, 21)).unwrap());
        assert!(!w3().contains_rational(&ratio(1, 10)).unwrap());
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(w3().restrict(4).to_string(), "0101");
        assert_eq!(SubringDescriptor::rationals().restrict(0), Condition::empty());
        assert_eq!(SubringDescriptor::exclude([5]).restrict(3).to_string(), "110");
    }

    #[test]
    fn residue_overrides_and_conditions() {
        let d: SubringDescriptor = "residue:3mod4;override:7=0,5=1".parse().unwrap();
        assert!(!d.contains_prime(7).unwrap());
        assert!(d.contains_prime(5).unwrap());
        assert!(d.contains_prime(11).unwrap());
        let c: SubringDescriptor = "cond:0101;default=1".parse().unwrap();
        assert_eq!(c.restrict(6).to_string(), "010111");
    }

    #[test]
    fn text_syntax_round_trips() {
        for text in [
            "include:2,5",
            "include:",
            "exclude:5",
            "residue:3mod4;override:7=0",
            "residue:1mod4,3mod8",
            "cond:0101;default=1",
            "random:seed=42",
        ] {
            let d: SubringDescriptor = text.parse().unwrap();
            assert_eq!(d.to_string(), text);
        }
        for bad in ["include:4", "foo:1", "cond:012", "random:42", "residue:3mod0", "include"] {
            assert!(bad.parse::<SubringDescriptor>().is_err(), "{bad}");
        }
    }

    #[test]
    fn sampled_bits_are_pinned() {
        // Fixed across runs and platforms: ChaCha8 with seed 42.
        let d = SubringDescriptor::Sampled { seed: 42 };
        let first = d.restrict(16);
        assert_eq!(first, d.restrict(16));
        let again: Vec<bool> = (0..16).map(|i| fair_coin(42, SAMPLED_STREAM, i)).collect();
        assert_eq!(first.bits(), &again[..]);
        assert_eq!(fair_coins(42, SAMPLED_STREAM, 16), again);
        assert_eq!(first.to_string(), SAMPLED_42_FIRST_16);
    }

    const SAMPLED_42_FIRST_16: &str = "1000000011111001";

    #[test]
    fn condition_helpers() {
        let c: Condition = "101".parse().unwrap();
        assert_eq!(c.included_primes(), [2, 5].into_iter().collect());
        assert_eq!(c.excluded_primes(), [3].into_iter().collect());
        assert!(Condition::empty().is_prefix_of(&c));
        assert!("10".parse::<Condition>().unwrap().is_prefix_of(&c));
        let all: Vec<String> = Condition::all_of_length(2).map(|c| c.to_string()).collect();
        assert_eq!(all, ["00", "01", "10", "11"]);
    }

    fn descriptors() -> impl Strategy<Value = SubringDescriptor> {
        prop_oneof![
            prop::collection::btree_set(prop::sample::select(vec![2u64, 3, 5, 7, 11, 13]), 0..4)
                .prop_map(SubringDescriptor::FiniteInclude),
            prop::collection::btree_set(prop::sample::select(vec![2u64, 3, 5, 7, 11, 13]), 0..4)
                .prop_map(SubringDescriptor::CofiniteExclude),
            (0u64..4).prop_map(|a| SubringDescriptor::residue(a, 4)),
            any::<u64>().prop_map(|seed| SubringDescriptor::Sampled { seed }),
        ]
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-50i64..=50, 1i64..=60).prop_map(|(n, d)| ratio(n, d))
    }

    proptest! {
        #[test]
        fn restrict_is_prefix_monotone(d in descriptors(), a in 0usize..20, b in 0usize..20) {
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(d.restrict(lo).is_prefix_of(&d.restrict(hi)));
        }

        #[test]
        fn closed_under_ring_operations(d in descriptors(), x in small_rational(), y in small_rational()) {
            if d.contains_rational(&x).unwrap() && d.contains_rational(&y).unwrap() {
                prop_assert!(d.contains_rational(&(&x * &y)).unwrap());
                prop_assert!(d.contains_rational(&(&x + &y)).unwrap());
                prop_assert!(d.contains_rational(&(&x - &y)).unwrap());
            }
        }

        #[test]
        fn finite_include_is_smoothness(
            s in prop::collection::btree_set(prop::sample::select(vec![2u64, 3, 5, 7]), 0..4),
            q in small_rational(),
        ) {
            let d = SubringDescriptor::FiniteInclude(s.clone());
            let mut den = q.denom().to_u64().unwrap();
            for p in 2..=den {
                while den % p == 0 && s.contains(&p) {
                    den /= p;
                }
            }
            prop_assert_eq!(d.contains_rational(&q).unwrap(), den == 1);
        }
    }
}
