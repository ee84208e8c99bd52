//! Cantor-space view of `W ↦ [f ∈ HTP(R_W)]`: cylinder certificates for the
//! open class `A(f)` and for the interior of its complement, boundary probes,
//! a dovetailed decision procedure relative to the quadratic oracle, and
//! finite-depth genericity checks.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith;
use crate::poly::Polynomial;
use crate::quad::{self, FamilyDecision, OracleError, OracleVerdict};
use crate::solver::{self, SearchConfig, SearchOutcome, SolutionWitness, SolverError};
use crate::subring::{Condition, SubringDescriptor, SubringError};

/// Longest condition the enumerators accept.
pub const MAX_CONDITION_LEN: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CategoryError {
    #[error("the zero polynomial lies in every HTP(R)")]
    ZeroPolynomial,
    #[error("condition length {0} exceeds {max}", max = MAX_CONDITION_LEN)]
    LengthLimit(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Subring(#[from] SubringError),
}

/// Evidence that a whole cylinder lies on one side of `A(f)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// A zero whose denominators use only primes set in the condition.
    Positive { witness: SolutionWitness },
    /// The oracle rules out solutions even after inverting every prime
    /// except `exclusions`, all of which are clear in the condition.
    Negative {
        exclusions: BTreeSet<u64>,
        verdict: OracleVerdict,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderCertificate {
    #[serde(with = "crate::serde_text::polynomial")]
    pub target: Polynomial,
    pub condition: Condition,
    pub evidence: Evidence,
}

impl CylinderCertificate {
    pub fn is_positive(&self) -> bool {
        matches!(self.evidence, Evidence::Positive { .. })
    }

    /// Re-checks the certificate from scratch: the witness by exact
    /// evaluation and support, the negative side by a fresh oracle call.
    pub fn revalidate(&self) -> Result<bool, CategoryError> {
        match &self.evidence {
            Evidence::Positive { witness } => {
                Ok(witness.verify(&self.target, &self.condition.smallest_ring())?)
            }
            Evidence::Negative { exclusions, .. } => {
                let excluded = self.condition.excluded_primes();
                if !exclusions.is_subset(&excluded) {
                    return Ok(false);
                }
                Ok(oracle_refutes(&self.target, exclusions)?.is_some())
            }
        }
    }
}

/// `Some(verdict)` iff the oracle certifies `f ∉ HTP(R_{P - exclusions})`.
fn oracle_refutes(f: &Polynomial, exclusions: &BTreeSet<u64>) -> Result<Option<OracleVerdict>, CategoryError> {
    let ring = SubringDescriptor::CofiniteExclude(exclusions.clone());
    Ok(match quad::decide_family_member(f, &ring)? {
        FamilyDecision::Verdict(v) if !v.solvable => Some(v),
        _ => None,
    })
}

/// Shrinks a refuting exclusion set to an inclusion-minimal one.
fn minimise_exclusions(f: &Polynomial, excluded: &BTreeSet<u64>) -> Result<BTreeSet<u64>, CategoryError> {
    let mut set = excluded.clone();
    for &p in excluded {
        let mut smaller = set.clone();
        smaller.remove(&p);
        if oracle_refutes(f, &smaller)?.is_some() {
            set = smaller;
        }
    }
    Ok(set)
}

/// Solver calls keyed by the included primes `<= H`; larger primes cannot
/// occur in a denominator of height at most `H`.
struct PositiveCache<'a> {
    f: &'a Polynomial,
    height: u64,
    config: &'a SearchConfig,
    memo: Mutex<HashMap<BTreeSet<u64>, Option<SolutionWitness>>>,
}

impl<'a> PositiveCache<'a> {
    fn new(f: &'a Polynomial, height: u64, config: &'a SearchConfig) -> Self {
        PositiveCache {
            f,
            height,
            config,
            memo: Mutex::new(HashMap::new()),
        }
    }

    fn solve(&self, included: &BTreeSet<u64>) -> Result<Option<SolutionWitness>, CategoryError> {
        let key: BTreeSet<u64> = included.iter().copied().filter(|&p| p <= self.height).collect();
        if let Some(hit) = self.memo.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let ring = SubringDescriptor::FiniteInclude(key.clone());
        let found = match solver::search_with(self.f, &ring, self.height, self.config)? {
            SearchOutcome::Found(w) => Some(w),
            SearchOutcome::ExhaustedUpTo(_) => None,
        };
        self.memo.lock().unwrap().insert(key, found.clone());
        Ok(found)
    }
}

fn check_len(len: usize) -> Result<(), CategoryError> {
    if len > MAX_CONDITION_LEN {
        Err(CategoryError::LengthLimit(len))
    } else {
        Ok(())
    }
}

/// Minimal conditions `σ` with `|σ| <= max_len` for which the solver finds,
/// at height `<= height`, a zero whose denominators use only `σ⁻¹(1)`.
/// No returned condition extends another. Sorted canonically.
pub fn positive_certificates(
    f: &Polynomial,
    max_len: usize,
    height: u64,
) -> Result<Vec<CylinderCertificate>, CategoryError> {
    positive_certificates_with(f, max_len, height, &SearchConfig::default())
}

pub fn positive_certificates_with(
    f: &Polynomial,
    max_len: usize,
    height: u64,
    config: &SearchConfig,
) -> Result<Vec<CylinderCertificate>, CategoryError> {
    if f.is_zero() {
        return Err(CategoryError::ZeroPolynomial);
    }
    check_len(max_len)?;
    let cache = PositiveCache::new(f, height, config);
    let tail: Vec<u64> = (0..max_len).map(arith::nth_prime).collect();
    let mut out = positive_walk(&cache, Condition::empty(), max_len, &tail)?;
    out.sort_by(|a, b| a.condition.cmp(&b.condition));
    Ok(out)
}

fn positive_walk(
    cache: &PositiveCache<'_>,
    sigma: Condition,
    max_len: usize,
    primes: &[u64],
) -> Result<Vec<CylinderCertificate>, CategoryError> {
    let included = sigma.included_primes();
    if let Some(witness) = cache.solve(&included)? {
        return Ok(vec![CylinderCertificate {
            target: cache.f.clone(),
            condition: sigma,
            evidence: Evidence::Positive { witness },
        }]);
    }
    if sigma.len() == max_len {
        return Ok(Vec::new());
    }
    // Largest set any extension of length <= max_len can include.
    let mut widest = included;
    widest.extend(primes[sigma.len()..].iter().copied());
    if cache.solve(&widest)?.is_none() {
        return Ok(Vec::new());
    }
    let (zero, one) = rayon::join(
        || positive_walk(cache, sigma.child(false), max_len, primes),
        || positive_walk(cache, sigma.child(true), max_len, primes),
    );
    let mut out = zero?;
    out.extend(one?);
    Ok(out)
}

/// Result of [`negative_certificates`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NegativeOutcome {
    /// Every oracle query was answered; the list is complete at this depth.
    Certified { certificates: Vec<CylinderCertificate> },
    /// Some query fell outside the oracle family; `partial` holds whatever
    /// was certified anyway.
    Inconclusive { partial: Vec<CylinderCertificate> },
}

impl NegativeOutcome {
    pub fn certificates(&self) -> &[CylinderCertificate] {
        match self {
            NegativeOutcome::Certified { certificates } => certificates,
            NegativeOutcome::Inconclusive { partial } => partial,
        }
    }
}

/// Minimal conditions `σ` with `|σ| <= max_len` such that the oracle
/// certifies `f ∉ HTP(R_{P - σ⁻¹(0)})`, hence `U_σ` misses `A(f)`.
pub fn negative_certificates(f: &Polynomial, max_len: usize) -> Result<NegativeOutcome, CategoryError> {
    if f.is_zero() {
        return Err(CategoryError::ZeroPolynomial);
    }
    check_len(max_len)?;
    let mut out = Vec::new();
    let mut complete = true;
    negative_walk(f, Condition::empty(), max_len, &mut out, &mut complete)?;
    out.sort_by(|a, b| a.condition.cmp(&b.condition));
    Ok(if complete {
        NegativeOutcome::Certified { certificates: out }
    } else {
        NegativeOutcome::Inconclusive { partial: out }
    })
}

fn negative_walk(
    f: &Polynomial,
    sigma: Condition,
    max_len: usize,
    out: &mut Vec<CylinderCertificate>,
    complete: &mut bool,
) -> Result<(), CategoryError> {
    let excluded = sigma.excluded_primes();
    let largest = SubringDescriptor::CofiniteExclude(excluded.clone());
    match quad::decide_family_member(f, &largest)? {
        FamilyDecision::Verdict(v) if !v.solvable => {
            let exclusions = minimise_exclusions(f, &excluded)?;
            out.push(CylinderCertificate {
                target: f.clone(),
                condition: sigma,
                evidence: Evidence::Negative { exclusions, verdict: v },
            });
            return Ok(());
        }
        FamilyDecision::Verdict(_) => {}
        FamilyDecision::NotInFamily => *complete = false,
    }
    // Solvable already in the smallest ring of the cylinder: nothing below
    // can be refuted.
    if let Some(true) = quad::decide_family_member(f, &sigma.smallest_ring())?.solvable() {
        return Ok(());
    }
    if sigma.len() < max_len {
        negative_walk(f, sigma.child(false), max_len, out, complete)?;
        negative_walk(f, sigma.child(true), max_len, out, complete)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProbeStatus {
    InA {
        witness: SolutionWitness,
    },
    InComplementInterior {
        exclusions: BTreeSet<u64>,
        verdict: OracleVerdict,
    },
    UndecidedUpTo {
        depth: usize,
        height: u64,
    },
}

impl ProbeStatus {
    pub fn is_decided(&self) -> bool {
        !matches!(self, ProbeStatus::UndecidedUpTo { .. })
    }
}

/// The first `count` primes outside `W`, ascending (fewer if `W` is
/// cofinite, or none turn up among the first `scan` primes).
pub fn complement_primes(w: &SubringDescriptor, count: usize, scan: usize) -> Result<Vec<u64>, CategoryError> {
    if let SubringDescriptor::CofiniteExclude(s) = w {
        return Ok(s.iter().copied().take(count).collect());
    }
    let mut out = Vec::new();
    for i in 0..scan {
        if out.len() == count {
            break;
        }
        let p = arith::nth_prime(i);
        if !w.contains_prime(p)? {
            out.push(p);
        }
    }
    Ok(out)
}

/// Subsets of `pool` that contain `pool[must]` (if given), by size and
/// then lexicographically by position.
fn subsets_by_size(pool: &[u64], must: Option<usize>) -> Vec<BTreeSet<u64>> {
    let n = pool.len();
    let mut masks: Vec<u64> = (0u64..(1u64 << n))
        .filter(|m| must.is_none_or(|i| m & (1 << i) != 0))
        .collect();
    masks.sort_by_key(|&m| {
        let positions: Vec<u32> = (0..n as u32).filter(|&i| m & (1 << i) != 0).collect();
        (m.count_ones(), positions)
    });
    masks
        .into_iter()
        .map(|m| (0..n).filter(|&i| m & (1 << i) != 0).map(|i| pool[i]).collect())
        .collect()
}

/// Three-way probe of `W` against `A(f)`: a solver witness in `R_W` at
/// height `<= height`, else the smallest `A₀` among the complement primes
/// within the first `depth` primes that the oracle refutes, else undecided.
pub fn boundary_probe(
    f: &Polynomial,
    w: &SubringDescriptor,
    depth: usize,
    height: u64,
) -> Result<ProbeStatus, CategoryError> {
    if f.is_zero() {
        return Err(CategoryError::ZeroPolynomial);
    }
    check_len(depth)?;
    if let SearchOutcome::Found(witness) = solver::search(f, w, height)? {
        return Ok(ProbeStatus::InA { witness });
    }
    let pool: Vec<u64> = (0..depth)
        .map(arith::nth_prime)
        .filter(|&p| !w.contains_prime(p).expect("prime"))
        .collect();
    for a0 in subsets_by_size(&pool, None) {
        if let Some(verdict) = oracle_refutes(f, &a0)? {
            return Ok(ProbeStatus::InComplementInterior { exclusions: a0, verdict });
        }
    }
    Ok(ProbeStatus::UndecidedUpTo { depth, height })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PhiOutcome {
    Member {
        witness: SolutionWitness,
        round: u32,
        height: u64,
    },
    NonMember {
        exclusions: BTreeSet<u64>,
        verdict: OracleVerdict,
        round: u32,
    },
    /// Budget exhausted; `note` records a resource limit if one was hit.
    Undecided { rounds: u32, note: Option<String> },
}

impl PhiOutcome {
    pub fn is_decided(&self) -> bool {
        !matches!(self, PhiOutcome::Undecided { .. })
    }

    /// `Some(true)` for members, `Some(false)` for refuted non-members.
    pub fn membership(&self) -> Option<bool> {
        match self {
            PhiOutcome::Member { .. } => Some(true),
            PhiOutcome::NonMember { .. } => Some(false),
            PhiOutcome::Undecided { .. } => None,
        }
    }
}

/// Number of primes scanned when listing the complement of `W`.
const COMPLEMENT_SCAN: usize = 100_000;

/// Decides `f ∈ HTP(R_W)` by dovetailing. Round `k` (from 1) runs the
/// solver at `H = 2^k`, then asks the oracle about every `A₀` drawn from
/// the first `k` primes outside `W` that was not asked before. The first
/// certificate wins; only running out of rounds (or into a solver resource
/// limit) yields [`PhiOutcome::Undecided`].
pub fn phi_decide(f: &Polynomial, w: &SubringDescriptor, rounds: u32) -> Result<PhiOutcome, CategoryError> {
    phi_decide_with(f, w, rounds, &SearchConfig::default())
}

pub fn phi_decide_with(
    f: &Polynomial,
    w: &SubringDescriptor,
    rounds: u32,
    config: &SearchConfig,
) -> Result<PhiOutcome, CategoryError> {
    if f.is_zero() {
        return Err(CategoryError::ZeroPolynomial);
    }
    let pool = complement_primes(w, rounds.min(MAX_CONDITION_LEN as u32) as usize, COMPLEMENT_SCAN)?;
    let mut asked_empty = false;
    for k in 1..=rounds {
        let height = 1u64.checked_shl(k).unwrap_or(u64::MAX);
        match solver::search_with(f, w, height, config) {
            Ok(SearchOutcome::Found(witness)) => {
                return Ok(PhiOutcome::Member { witness, round: k, height });
            }
            Ok(SearchOutcome::ExhaustedUpTo(_)) => {}
            Err(
                e @ (SolverError::HeightLimit { .. }
                | SolverError::GridLimit { .. }
                | SolverError::TimeBudget(_)),
            ) => {
                return Ok(PhiOutcome::Undecided {
                    rounds: k - 1,
                    note: Some(e.to_string()),
                })
            }
            Err(e) => return Err(e.into()),
        }
        let mut batch = Vec::new();
        if !asked_empty {
            batch.push(BTreeSet::new());
            asked_empty = true;
        }
        let idx = (k - 1) as usize;
        if idx < pool.len() {
            batch.extend(subsets_by_size(&pool[..=idx], Some(idx)));
        }
        for a0 in batch {
            if let Some(verdict) = oracle_refutes(f, &a0)? {
                return Ok(PhiOutcome::NonMember {
                    exclusions: a0,
                    verdict,
                    round: k,
                });
            }
        }
    }
    Ok(PhiOutcome::Undecided { rounds, note: None })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericEntry {
    #[serde(with = "crate::serde_text::polynomial")]
    pub poly: Polynomial,
    pub outcome: PhiOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericReport {
    pub ring: SubringDescriptor,
    pub rounds: u32,
    pub entries: Vec<GenericEntry>,
    /// No entry undecided. A necessary condition for genericity at this
    /// budget, not a proof of it.
    pub passes_at_budget: bool,
}

pub fn generic_check(w: &SubringDescriptor, fs: &[Polynomial], rounds: u32) -> Result<GenericReport, CategoryError> {
    let entries = fs
        .iter()
        .map(|f| {
            Ok(GenericEntry {
                poly: f.clone(),
                outcome: phi_decide(f, w, rounds)?,
            })
        })
        .collect::<Result<Vec<_>, CategoryError>>()?;
    let passes_at_budget = entries.iter().all(|e| e.outcome.is_decided());
    Ok(GenericReport {
        ring: w.clone(),
        rounds,
        entries,
        passes_at_budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseBudget {
    pub max_len: usize,
    pub height: u64,
}

impl Default for DenseBudget {
    fn default() -> Self {
        DenseBudget { max_len: 12, height: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DenseOutcome {
    Decided { certificate: CylinderCertificate, visited: usize },
    Exhausted { max_len: usize, height: u64, visited: usize },
}

impl DenseOutcome {
    pub fn certificate(&self) -> Option<&CylinderCertificate> {
        match self {
            DenseOutcome::Decided { certificate, .. } => Some(certificate),
            DenseOutcome::Exhausted { .. } => None,
        }
    }
}

/// Breadth-first search over extensions `τ ⊇ σ` (shorter first, then
/// lexicographic) for a cylinder inside `A(f)` or inside the interior of its
/// complement. At each `τ` the oracle is asked first, then the solver.
pub fn nowhere_dense_probe(f: &Polynomial, sigma: &Condition, budget: DenseBudget) -> Result<DenseOutcome, CategoryError> {
    if f.is_zero() {
        return Err(CategoryError::ZeroPolynomial);
    }
    check_len(budget.max_len)?;
    let config = SearchConfig::default();
    let cache = PositiveCache::new(f, budget.height, &config);
    let mut level = vec![sigma.clone()];
    let mut visited = 0;
    while !level.is_empty() {
        for tau in &level {
            visited += 1;
            let excluded = tau.excluded_primes();
            if let Some(verdict) = oracle_refutes(f, &excluded)? {
                return Ok(DenseOutcome::Decided {
                    certificate: CylinderCertificate {
                        target: f.clone(),
                        condition: tau.clone(),
                        evidence: Evidence::Negative {
                            exclusions: minimise_exclusions(f, &excluded)?,
                            verdict,
                        },
                    },
                    visited,
                });
            }
            if let Some(witness) = cache.solve(&tau.included_primes())? {
                return Ok(DenseOutcome::Decided {
                    certificate: CylinderCertificate {
                        target: f.clone(),
                        condition: tau.clone(),
                        evidence: Evidence::Positive { witness },
                    },
                    visited,
                });
            }
        }
        if level[0].len() >= budget.max_len {
            break;
        }
        level = level
            .iter()
            .flat_map(|t| [t.child(false), t.child(true)])
            .collect();
    }
    Ok(DenseOutcome::Exhausted {
        max_len: budget.max_len,
        height: budget.height,
        visited,
    })
}
