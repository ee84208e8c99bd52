//! Fair-coin measure on subsets of the primes: sampled conditions, Monte
//! Carlo estimates of `μ(A(f))`, exact measures of cylinder unions, and
//! budgeted boundary-gap reports.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith;
use crate::category::{self, CategoryError, CylinderCertificate};
use crate::poly::{Polynomial, Rational};
use crate::quad::{self, FamilyDecision, OracleError};
use crate::solver::{self, SearchOutcome, SolverError};
use crate::subring::{fair_coins, Condition, SubringDescriptor};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("the zero polynomial lies in every HTP(R)")]
    ZeroPolynomial,
    #[error("at least one sample is required")]
    NoSamples,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Condition of length `len` for sample `index`: bit `i` is the coin
/// `(seed, index, i)`.
pub fn sample_condition(seed: u64, index: u64, len: usize) -> Condition {
    Condition::new(fair_coins(seed, index, len))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    #[serde(with = "crate::serde_text::rational")]
    pub value: Rational,
    pub successes: u64,
    pub samples: u64,
    pub height: u64,
    pub seed: u64,
    /// Normal-approximation 95% interval, rounded outward to `10^-6` and
    /// clamped to `[0, 1]`. Degenerate (zero width) when every or no sample
    /// succeeds.
    #[serde(with = "crate::serde_text::rational")]
    pub ci_low: Rational,
    #[serde(with = "crate::serde_text::rational")]
    pub ci_high: Rational,
}

const CI_SCALE: i64 = 1_000_000;

fn interval(successes: u64, n: u64) -> (Rational, Rational) {
    let p = successes as f64 / n as f64;
    let half = 1.96 * (p * (1.0 - p) / n as f64).sqrt();
    let scale = CI_SCALE as f64;
    let low = ((p - half).max(0.0) * scale).floor() as i64;
    let high = ((p + half).min(1.0) * scale).ceil() as i64;
    let value = Rational::new(BigInt::from(successes), BigInt::from(n));
    let low = Rational::new(BigInt::from(low), BigInt::from(CI_SCALE)).min(value.clone());
    let high = Rational::new(BigInt::from(high), BigInt::from(CI_SCALE)).max(value);
    (low, high)
}

/// Fraction of `samples` random conditions of length `π(height)` whose ring
/// `R_{σ⁻¹(1)}` has a solver witness at height `<= height`. Primes above
/// `height` cannot divide such a witness's denominators, so the truncation
/// loses nothing.
pub fn estimate_measure_a(f: &Polynomial, height: u64, samples: u64, seed: u64) -> Result<MeasureEstimate, MeasureError> {
    if f.is_zero() {
        return Err(MeasureError::ZeroPolynomial);
    }
    if samples == 0 {
        return Err(MeasureError::NoSamples);
    }
    let len = arith::prime_pi(height);
    let mut counts: BTreeMap<Condition, u64> = BTreeMap::new();
    let conditions: Vec<Condition> = (0..samples)
        .into_par_iter()
        .map(|i| sample_condition(seed, i, len))
        .collect();
    for c in conditions {
        *counts.entry(c).or_default() += 1;
    }
    let keys: Vec<&Condition> = counts.keys().collect();
    let solvable: Vec<bool> = keys
        .par_iter()
        .map(|c| {
            let ring = c.smallest_ring();
            Ok(matches!(solver::search(f, &ring, height)?, SearchOutcome::Found(_)))
        })
        .collect::<Result<_, SolverError>>()?;
    let successes: u64 = keys
        .iter()
        .zip(&solvable)
        .filter(|(_, &ok)| ok)
        .map(|(c, _)| counts[*c])
        .sum();
    let (ci_low, ci_high) = interval(successes, samples);
    Ok(MeasureEstimate {
        value: Rational::new(BigInt::from(successes), BigInt::from(samples)),
        successes,
        samples,
        height,
        seed,
        ci_low,
        ci_high,
    })
}

#[derive(Default)]
struct Trie {
    terminal: bool,
    children: [Option<Box<Trie>>; 2],
}

impl Trie {
    fn insert(&mut self, bits: &[bool]) {
        if self.terminal {
            return;
        }
        match bits.split_first() {
            None => {
                self.terminal = true;
                self.children = [None, None];
            }
            Some((&b, rest)) => self.children[b as usize].get_or_insert_with(Default::default).insert(rest),
        }
    }

    fn measure(&self) -> Rational {
        if self.terminal {
            return Rational::one();
        }
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        self.children
            .iter()
            .flatten()
            .map(|c| c.measure() * &half)
            .fold(Rational::zero(), |a, b| a + b)
    }
}

/// Exact `μ(∪ U_σ)`, where `μ(U_σ) = 2^-|σ|`.
pub fn cylinder_union_measure(conditions: &[Condition]) -> Rational {
    let mut trie = Trie::default();
    for c in conditions {
        trie.insert(c.bits());
    }
    trie.measure()
}

/// Exact `μ(A(f))` when the oracle shows `A(f) = {W : S ⊆ W}` for a finite
/// set `S` of primes dividing the coefficients (measure `2^-|S|`), or that
/// `A(f)` is empty. `None` when the oracle family does not pin it down.
pub fn exact_family_measure(f: &Polynomial) -> Result<Option<Rational>, MeasureError> {
    if f.is_zero() {
        return Err(MeasureError::ZeroPolynomial);
    }
    match quad::decide_family_member(f, &SubringDescriptor::rationals())? {
        FamilyDecision::NotInFamily => return Ok(None),
        FamilyDecision::Verdict(v) if !v.solvable => return Ok(Some(Rational::zero())),
        FamilyDecision::Verdict(_) => {}
    }
    let mut pool = BTreeSet::new();
    for (_, c) in f.terms() {
        for (p, _) in arith::factor(&arith::magnitude(c)).map_err(OracleError::from)? {
            pool.insert(p);
        }
    }
    let mut needed = BTreeSet::new();
    for p in pool {
        match quad::decide_family_member(f, &SubringDescriptor::exclude([p]))? {
            FamilyDecision::Verdict(v) if !v.solvable => {
                needed.insert(p);
            }
            FamilyDecision::Verdict(_) => {}
            FamilyDecision::NotInFamily => return Ok(None),
        }
    }
    let smallest = SubringDescriptor::FiniteInclude(needed.clone());
    match quad::decide_family_member(f, &smallest)?.solvable() {
        Some(true) => Ok(Some(Rational::new(BigInt::one(), BigInt::one() << needed.len()))),
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    /// Measure of the union of positive certificates.
    #[serde(with = "crate::serde_text::rational")]
    pub lower_a: Rational,
    /// Measure of the union of negative certificates.
    #[serde(with = "crate::serde_text::rational")]
    pub lower_comp: Rational,
    /// `1 - lower_a - lower_comp`, an upper bound on `μ(B(f))` at this
    /// budget.
    #[serde(with = "crate::serde_text::rational")]
    pub gap: Rational,
    pub depth: usize,
    pub height: u64,
    /// Whether every oracle query during negative enumeration was answered.
    pub negative_complete: bool,
    pub positive_count: usize,
    pub negative_count: usize,
    pub estimate: MeasureEstimate,
}

pub fn boundary_gap(f: &Polynomial, height: u64, depth: usize, samples: u64, seed: u64) -> Result<GapReport, MeasureError> {
    let (report, _) = boundary_gap_with_certificates(f, height, depth, samples, seed)?;
    Ok(report)
}

/// [`boundary_gap`] together with the certificates it measured.
pub fn boundary_gap_with_certificates(
    f: &Polynomial,
    height: u64,
    depth: usize,
    samples: u64,
    seed: u64,
) -> Result<(GapReport, Vec<CylinderCertificate>), MeasureError> {
    if f.is_zero() {
        return Err(MeasureError::ZeroPolynomial);
    }
    let positive = category::positive_certificates(f, depth, height)?;
    let negative = category::negative_certificates(f, depth)?;
    let negative_complete = matches!(negative, category::NegativeOutcome::Certified { .. });
    let negs = negative.certificates().to_vec();
    let conds = |cs: &[CylinderCertificate]| cs.iter().map(|c| c.condition.clone()).collect::<Vec<_>>();
    let lower_a = cylinder_union_measure(&conds(&positive));
    let lower_comp = cylinder_union_measure(&conds(&negs));
    let gap = Rational::one() - &lower_a - &lower_comp;
    let estimate = estimate_measure_a(f, height, samples, seed)?;
    let report = GapReport {
        lower_a,
        lower_comp,
        gap,
        depth,
        height,
        negative_complete,
        positive_count: positive.len(),
        negative_count: negs.len(),
        estimate,
    };
    let mut all = positive;
    all.extend(negs);
    Ok((report, all))
}

/// Lossy `f64` view of a rational, for reporting.
pub fn as_f64(q: &Rational) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}
