//! Small-integer number theory shared by the other modules: a cached prime
//! table, trial-division factorisation, Legendre symbols and integer square
//! roots.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Primes below this bound are held in the shared table.
pub const SIEVE_BOUND: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("cannot factor {0}: cofactor exceeds the trial-division bound {bound}", bound = SIEVE_BOUND)]
    FactorLimit(String),
    #[error("value {0} does not fit the supported machine range")]
    Overflow(String),
}

fn sieve(bound: u64) -> Vec<u64> {
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// All primes below [`SIEVE_BOUND`], ascending.
pub fn prime_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| sieve(SIEVE_BOUND))
}

/// The `n`-th prime, counting from `p_0 = 2`.
pub fn nth_prime(n: usize) -> u64 {
    let table = prime_table();
    if n < table.len() {
        return table[n];
    }
    // Rosser's bound p_n < n (ln n + ln ln n) for n >= 6, with n shifted by one
    // for the zero-based index.
    let m = (n + 1) as f64;
    let bound = (m * (m.ln() + m.ln().ln())).ceil() as u64 + 16;
    sieve(bound)[n]
}

/// Position of the prime `p` in the indexing `p_0 = 2, p_1 = 3, ...`.
pub fn prime_index(p: u64) -> Result<usize, ArithError> {
    let table = prime_table();
    if p < SIEVE_BOUND {
        return table.binary_search(&p).map_err(|_| ArithError::NotPrime(p));
    }
    if !is_prime(p) {
        return Err(ArithError::NotPrime(p));
    }
    let big = sieve(p);
    Ok(big.len() - 1)
}

/// Number of primes `<= x`.
pub fn prime_pi(x: u64) -> usize {
    if x < SIEVE_BOUND {
        prime_table().partition_point(|&p| p <= x)
    } else {
        sieve(x).len()
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factorisation of a positive integer by trial division against the
/// prime table. Returns `(prime, exponent)` pairs in ascending prime order.
pub fn factor(n: &BigUint) -> Result<Vec<(u64, u32)>, ArithError> {
    let mut out = Vec::new();
    if n.is_zero() {
        return Err(ArithError::FactorLimit("0".into()));
    }
    let mut rest = n.clone();
    if let Some(small) = rest.to_u64() {
        return factor_u64(small);
    }
    for &p in prime_table() {
        let pb = BigUint::from(p);
        if &pb * &pb > rest {
            break;
        }
        let mut e = 0u32;
        loop {
            let (q, r) = rest.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        if let Some(small) = rest.to_u64() {
            let mut tail = factor_u64(small)?;
            out.append(&mut tail);
            return Ok(out);
        }
    }
    if rest.is_one() {
        return Ok(out);
    }
    match rest.to_u64() {
        Some(p) => {
            out.push((p, 1));
            Ok(out)
        }
        None => Err(ArithError::FactorLimit(n.to_string())),
    }
}

/// Trial-division factorisation of a machine integer.
pub fn factor_u64(n: u64) -> Result<Vec<(u64, u32)>, ArithError> {
    if n == 0 {
        return Err(ArithError::FactorLimit("0".into()));
    }
    let mut out = Vec::new();
    let mut rest = n;
    for &p in prime_table() {
        if p.saturating_mul(p) > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if rest > 1 {
        let bound = SIEVE_BOUND;
        if rest >= bound.saturating_mul(bound) && !is_prime(rest) {
            return Err(ArithError::FactorLimit(n.to_string()));
        }
        out.push((rest, 1));
    }
    Ok(out)
}

/// Exponent of `p` in the nonzero integer `n`.
pub fn valuation_int(n: &BigInt, p: u64) -> u32 {
    debug_assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut rest = n.clone();
    let mut e = 0;
    loop {
        let (q, r) = rest.div_rem(&pb);
        if !r.is_zero() {
            return e;
        }
        rest = q;
        e += 1;
    }
}

/// Removes every factor of `p` from `n`, returning the exponent and the
/// cofactor.
pub fn split_prime(n: &BigInt, p: u64) -> (u32, BigInt) {
    let pb = BigInt::from(p);
    let mut rest = n.clone();
    let mut e = 0;
    loop {
        let (q, r) = rest.div_rem(&pb);
        if !r.is_zero() {
            return (e, rest);
        }
        rest = q;
        e += 1;
    }
}

/// Legendre symbol `(a / p)` for an odd prime `p`.
pub fn legendre(a: &BigInt, p: u64) -> i32 {
    let r = a.mod_floor(&BigInt::from(p)).to_u64().unwrap();
    if r == 0 {
        return 0;
    }
    if pow_mod(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Square root of `-1` modulo a prime `p ≡ 1 (mod 4)`.
pub fn sqrt_minus_one(p: u64) -> u64 {
    debug_assert!(p % 4 == 1);
    for c in 2..p {
        if pow_mod(c, (p - 1) / 2, p) == p - 1 {
            return pow_mod(c, (p - 1) / 4, p);
        }
    }
    unreachable!("p ≡ 1 mod 4 has a non-residue")
}

/// Returns `Some(r)` with `r * r == n` when `n` is a perfect square.
pub fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.sign() == Sign::Minus {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

/// Exact square root for machine integers.
pub fn exact_sqrt_i128(n: i128) -> Option<i128> {
    if n < 0 {
        return None;
    }
    let r = (n as u128).sqrt() as i128;
    (r * r == n).then_some(r)
}

pub fn gcd_i128(a: i128, b: i128) -> i128 {
    a.gcd(&b)
}

/// Absolute value as a `BigUint`.
pub fn magnitude(n: &BigInt) -> BigUint {
    n.abs().to_biguint().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_indexing_starts_at_two() {
        assert_eq!(nth_prime(0), 2);
        assert_eq!(nth_prime(1), 3);
        assert_eq!(nth_prime(5), 13);
        assert_eq!(prime_index(13).unwrap(), 5);
        assert!(prime_index(15).is_err());
        assert_eq!(prime_pi(10), 4);
        assert_eq!(prime_pi(1), 0);
    }

    #[test]
    fn nth_prime_beyond_the_table() {
        let n = prime_table().len();
        let p = nth_prime(n);
        assert!(p > *prime_table().last().unwrap());
        assert!(is_prime(p));
    }

    #[test]
    fn miller_rabin_matches_table() {
        let table = prime_table();
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n), table.binary_search(&n).is_ok(), "{n}");
        }
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(1_000_000_007 * 3));
    }

    #[test]
    fn factorisation() {
        assert_eq!(factor_u64(360).unwrap(), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factor_u64(1).unwrap(), vec![]);
        let big = BigUint::from(1_000_000_007u64) * BigUint::from(1_000_003u64) * 12u32;
        assert_eq!(
            factor(&big).unwrap(),
            vec![(2, 2), (3, 1), (1_000_003, 1), (1_000_000_007, 1)]
        );
        // Two prime factors above the sieve bound cannot be separated.
        let hard = BigUint::from(1_000_000_007u64) * BigUint::from(998_244_353u64);
        assert!(matches!(factor(&hard), Err(ArithError::FactorLimit(_))));
    }

    #[test]
    fn legendre_symbols() {
        assert_eq!(legendre(&BigInt::from(2), 7), 1);
        assert_eq!(legendre(&BigInt::from(3), 7), -1);
        assert_eq!(legendre(&BigInt::from(-1), 5), 1);
        assert_eq!(legendre(&BigInt::from(14), 7), 0);
        let i = sqrt_minus_one(13);
        assert_eq!(i * i % 13, 12);
    }
}
