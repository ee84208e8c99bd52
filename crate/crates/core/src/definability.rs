//! Bounded, refutation-oriented checkers for diophantine models of `Z` and
//! existential definitions of `Z` inside a ring `R_W`.
//!
//! Both notions quantify over all of `R_W`, so nothing here certifies them.
//! Facts come out as verified, refuted or inconclusive; the strongest overall
//! outcome is "consistent at budget".

use std::collections::BTreeMap;

use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{clear_denominators, Assignment, Polynomial, Rational};
use crate::solver::{self, SearchOutcome, SolverError};
use crate::subring::{SubringDescriptor, SubringError};

/// Widest tuple accepted by [`check_model`].
pub const MAX_TUPLE_WIDTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DefinabilityError {
    #[error("malformed spec: {0}")]
    Spec(String),
    #[error("range must be at least 1")]
    EmptyRange,
    #[error("at least one probe is required")]
    NoProbes,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Subring(#[from] SubringError),
}

/// `h(X_0..X_{n-1}, Y)`, `h_+(X_0..X_{3n-1}, Y)`, `h_×(X_0..X_{3n-1}, Y)`;
/// variables past the `X` block are auxiliary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiophantineModelSpec {
    pub n: usize,
    #[serde(with = "crate::serde_text::polynomial")]
    pub h: Polynomial,
    #[serde(with = "crate::serde_text::polynomial")]
    pub h_plus: Polynomial,
    #[serde(with = "crate::serde_text::polynomial")]
    pub h_times: Polynomial,
}

impl DiophantineModelSpec {
    pub fn validate(&self) -> Result<(), DefinabilityError> {
        if self.n == 0 || self.n > MAX_TUPLE_WIDTH {
            return Err(DefinabilityError::Spec(format!(
                "tuple width {} outside 1..={MAX_TUPLE_WIDTH}",
                self.n
            )));
        }
        Ok(())
    }

    /// Identity model of `Z` in itself: `h = 0`, `X_0 + X_1 = X_2`,
    /// `X_0 X_1 = X_2`.
    pub fn identity() -> Self {
        let x = Polynomial::var;
        DiophantineModelSpec {
            n: 1,
            h: Polynomial::zero(),
            h_plus: &(&x(0) + &x(1)) - &x(2),
            h_times: &(&x(0) * &x(1)) - &x(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactStatus {
    Verified,
    Refuted,
    Inconclusive,
}

/// Outcome of `∃ Y: g(fixed, Y) = 0` at a height budget.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Truth {
    Holds(Assignment),
    /// No auxiliary variables remain and the value is nonzero.
    FailsExactly,
    FailsAtBudget,
}

fn holds(g: &Polynomial, fixed: &Assignment, w: &SubringDescriptor, height: u64) -> Result<Truth, SolverError> {
    let rest = g.substitute(fixed);
    if rest.is_zero() {
        return Ok(Truth::Holds(Assignment::new()));
    }
    let rest = clear_denominators(&rest)?;
    if rest.variables().is_empty() {
        return Ok(Truth::FailsExactly);
    }
    Ok(match solver::search(&rest, w, height)? {
        SearchOutcome::Found(wit) => Truth::Holds(wit.assignment),
        SearchOutcome::ExhaustedUpTo(_) => Truth::FailsAtBudget,
    })
}

fn status_of(t: &Truth, expected: bool) -> FactStatus {
    match (t, expected) {
        (Truth::Holds(_), true) | (Truth::FailsExactly, false) => FactStatus::Verified,
        (Truth::Holds(_), false) | (Truth::FailsExactly, true) => FactStatus::Refuted,
        (Truth::FailsAtBudget, _) => FactStatus::Inconclusive,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactKind {
    /// `h` holds at the representative of `a`.
    Domain,
    /// `h_+(x_a, x_b, x_c)` with `c = a + b`.
    Sum,
    /// `h_×(x_a, x_b, x_c)` with `c = a · b`.
    Product,
    /// `h_+(x_a, x_b, x_c)` must fail for `c ≠ a + b`.
    SumUnique,
    /// `h_×(x_a, x_b, x_c)` must fail for `c ≠ a · b`.
    ProductUnique,
    /// Distinct integers need distinct representatives.
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub kind: FactKind,
    pub args: Vec<i64>,
    pub status: FactStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Some checked fact is false.
    Refuted,
    /// Nothing refuted and nothing left open at this budget.
    ConsistentAtBudget,
    /// Nothing refuted, but representatives or facts were out of budget.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelReport {
    pub ring: SubringDescriptor,
    pub range: i64,
    pub height: u64,
    /// Representative tuple of each `k`, as text, or `None` when none was
    /// found within the budget.
    pub representatives: BTreeMap<i64, Option<Vec<String>>>,
    pub injected: Vec<i64>,
    pub facts: Vec<Fact>,
    pub verified: usize,
    pub refuted: usize,
    pub inconclusive: usize,
    pub verdict: Verdict,
    /// Representatives are the least-height solutions of their defining
    /// relations; another choice could change inconclusive outcomes.
    pub note: String,
}

type Tuple = Vec<Rational>;

fn place(tuples: &[&Tuple]) -> Assignment {
    let mut out = Assignment::new();
    for (i, t) in tuples.iter().enumerate() {
        for (j, q) in t.iter().enumerate() {
            out.insert(i * t.len() + j, q.clone());
        }
    }
    out
}

struct ModelCtx<'a> {
    spec: &'a DiophantineModelSpec,
    w: &'a SubringDescriptor,
    height: u64,
    grid: Vec<Tuple>,
}

impl ModelCtx<'_> {
    fn in_domain(&self, x: &Tuple) -> Result<Truth, SolverError> {
        holds(&self.spec.h, &place(&[x]), self.w, self.height)
    }

    fn plus(&self, a: &Tuple, b: &Tuple, c: &Tuple) -> Result<Truth, SolverError> {
        holds(&self.spec.h_plus, &place(&[a, b, c]), self.w, self.height)
    }

    fn times(&self, a: &Tuple, b: &Tuple, c: &Tuple) -> Result<Truth, SolverError> {
        holds(&self.spec.h_times, &place(&[a, b, c]), self.w, self.height)
    }

    /// Least grid tuple in the domain satisfying `pred`.
    fn least(&self, mut pred: impl FnMut(&Tuple) -> Result<bool, SolverError>) -> Result<Option<Tuple>, SolverError> {
        for x in &self.grid {
            if matches!(self.in_domain(x)?, Truth::Holds(_)) && pred(x)? {
                return Ok(Some(x.clone()));
            }
        }
        Ok(None)
    }
}

/// Bounded check of `(h, h_+, h_×)` as a diophantine model of `Z` in `R_W`.
///
/// Representatives: `x_0` is the least domain tuple with `h_+(z, z, z)`,
/// `x_1` the least other one with `h_×(u, u, u)`, and `x_{k±1}` the least
/// solutions of `h_+(x_k, x_1, v)` and `h_+(v, x_1, x_k)`. `inject` replaces
/// chosen representatives before the facts are checked. Every sum and
/// product fact within `[-m, m]` is checked, together with uniqueness of
/// the result among the found representatives.
pub fn check_model(
    spec: &DiophantineModelSpec,
    w: &SubringDescriptor,
    m: i64,
    height: u64,
    inject: &BTreeMap<i64, Vec<Rational>>,
) -> Result<ModelReport, DefinabilityError> {
    spec.validate()?;
    if m < 1 {
        return Err(DefinabilityError::EmptyRange);
    }
    for (k, t) in inject {
        if t.len() != spec.n {
            return Err(DefinabilityError::Spec(format!("injected tuple for {k} has width {}", t.len())));
        }
    }
    let grid: Vec<Tuple> = solver::enumerate_candidates(spec.n, w, height)?
        .map(|a| a.into_values().collect())
        .collect();
    let ctx = ModelCtx { spec, w, height, grid };

    let mut reps: BTreeMap<i64, Option<Tuple>> = BTreeMap::new();
    let zero = match inject.get(&0) {
        Some(t) => Some(t.clone()),
        None => ctx.least(|z| Ok(matches!(ctx.plus(z, z, z)?, Truth::Holds(_))))?,
    };
    let one = match inject.get(&1) {
        Some(t) => Some(t.clone()),
        None => ctx.least(|u| Ok(Some(u) != zero.as_ref() && matches!(ctx.times(u, u, u)?, Truth::Holds(_))))?,
    };
    reps.insert(0, zero);
    reps.insert(1, one.clone());
    for k in 1..m {
        let next = match (inject.get(&(k + 1)), &reps[&k], &one) {
            (Some(t), _, _) => Some(t.clone()),
            (None, Some(xk), Some(x1)) => ctx.least(|v| Ok(matches!(ctx.plus(xk, x1, v)?, Truth::Holds(_))))?,
            _ => None,
        };
        reps.insert(k + 1, next);
    }
    for k in (-m + 1..=0).rev() {
        let prev = match (inject.get(&(k - 1)), &reps[&k], &one) {
            (Some(t), _, _) => Some(t.clone()),
            (None, Some(xk), Some(x1)) => ctx.least(|v| Ok(matches!(ctx.plus(v, x1, xk)?, Truth::Holds(_))))?,
            _ => None,
        };
        reps.insert(k - 1, prev);
    }

    let mut facts = Vec::new();
    for (&k, x) in &reps {
        if let Some(x) = x {
            facts.push(Fact {
                kind: FactKind::Domain,
                args: vec![k],
                status: status_of(&ctx.in_domain(x)?, true),
            });
        }
    }
    let found: Vec<(i64, &Tuple)> = reps.iter().filter_map(|(&k, x)| x.as_ref().map(|x| (k, x))).collect();
    for (i, (a, xa)) in found.iter().enumerate() {
        for (b, xb) in &found[i + 1..] {
            if xa == xb {
                facts.push(Fact {
                    kind: FactKind::Distinct,
                    args: vec![*a, *b],
                    status: FactStatus::Refuted,
                });
            }
        }
    }
    for &(a, xa) in &found {
        for &(b, xb) in &found {
            for &(c, xc) in &found {
                if a + b == c {
                    facts.push(Fact {
                        kind: FactKind::Sum,
                        args: vec![a, b, c],
                        status: status_of(&ctx.plus(xa, xb, xc)?, true),
                    });
                } else if let Truth::Holds(_) = ctx.plus(xa, xb, xc)? {
                    facts.push(Fact {
                        kind: FactKind::SumUnique,
                        args: vec![a, b, c],
                        status: FactStatus::Refuted,
                    });
                }
                if a * b == c {
                    facts.push(Fact {
                        kind: FactKind::Product,
                        args: vec![a, b, c],
                        status: status_of(&ctx.times(xa, xb, xc)?, true),
                    });
                } else if let Truth::Holds(_) = ctx.times(xa, xb, xc)? {
                    facts.push(Fact {
                        kind: FactKind::ProductUnique,
                        args: vec![a, b, c],
                        status: FactStatus::Refuted,
                    });
                }
            }
        }
    }
    facts.sort_by(|x, y| (x.kind, &x.args).cmp(&(y.kind, &y.args)));
    let count = |s: FactStatus| facts.iter().filter(|f| f.status == s).count();
    let (verified, refuted, inconclusive) = (
        count(FactStatus::Verified),
        count(FactStatus::Refuted),
        count(FactStatus::Inconclusive),
    );
    let missing = reps.values().any(Option::is_none);
    let verdict = if refuted > 0 {
        Verdict::Refuted
    } else if inconclusive > 0 || missing {
        Verdict::Inconclusive
    } else {
        Verdict::ConsistentAtBudget
    };
    Ok(ModelReport {
        ring: w.clone(),
        range: m,
        height,
        representatives: reps
            .into_iter()
            .map(|(k, x)| (k, x.map(|t| t.iter().map(ToString::to_string).collect())))
            .collect(),
        injected: inject.keys().copied().collect(),
        facts,
        verified,
        refuted,
        inconclusive,
        verdict,
        note: "representatives chosen by least height; a different choice could change inconclusive outcomes".into(),
    })
}

/// `g(X, Y)` with `X = x0` and `Y` every other variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExistentialDefSpec {
    #[serde(with = "crate::serde_text::polynomial")]
    pub g: Polynomial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProbeOutcome {
    /// Integer probe with a witness.
    Satisfied {
        #[serde(with = "crate::serde_text::assignment")]
        witness: Assignment,
    },
    /// Integer probe that provably has no witness, or non-integer probe
    /// with one.
    Refuted {
        #[serde(with = "crate::serde_text::optional_assignment", default)]
        witness: Option<Assignment>,
    },
    /// Non-integer probe with provably no witness.
    Excluded,
    /// Non-integer probe without a witness at this height.
    ExcludedAtBudget,
    /// Integer probe without a witness at this height.
    Inconclusive,
    /// Probe outside `R_W`.
    Skipped { note: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRecord {
    #[serde(with = "crate::serde_text::rational")]
    pub probe: Rational,
    pub outcome: ProbeOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExDefReport {
    pub ring: SubringDescriptor,
    pub height: u64,
    pub probes: Vec<ProbeRecord>,
    pub verdict: Verdict,
}

/// Bounded check of `q ∈ Z ⟺ ∃ Y ∈ R_W: g(q, Y) = 0` on the given probes.
pub fn check_existential_def(
    spec: &ExistentialDefSpec,
    w: &SubringDescriptor,
    probes: &[Rational],
    height: u64,
) -> Result<ExDefReport, DefinabilityError> {
    if probes.is_empty() {
        return Err(DefinabilityError::NoProbes);
    }
    let mut records = Vec::with_capacity(probes.len());
    for q in probes {
        let outcome = if !w.contains_rational(q)? {
            ProbeOutcome::Skipped {
                note: format!("{q} is not in the ring"),
            }
        } else {
            let fixed: Assignment = [(0, q.clone())].into_iter().collect();
            let truth = holds(&spec.g, &fixed, w, height)?;
            let integer = q.denom().is_one();
            match (truth, integer) {
                (Truth::Holds(wit), true) => ProbeOutcome::Satisfied { witness: wit },
                (Truth::FailsExactly, true) => ProbeOutcome::Refuted { witness: None },
                (Truth::FailsAtBudget, true) => ProbeOutcome::Inconclusive,
                (Truth::Holds(wit), false) => ProbeOutcome::Refuted { witness: Some(wit) },
                (Truth::FailsExactly, false) => ProbeOutcome::Excluded,
                (Truth::FailsAtBudget, false) => ProbeOutcome::ExcludedAtBudget,
            }
        };
        records.push(ProbeRecord {
            probe: q.clone(),
            outcome,
        });
    }
    let verdict = if records.iter().any(|r| matches!(r.outcome, ProbeOutcome::Refuted { .. })) {
        Verdict::Refuted
    } else if records.iter().any(|r| matches!(r.outcome, ProbeOutcome::Inconclusive)) {
        Verdict::Inconclusive
    } else {
        Verdict::ConsistentAtBudget
    };
    Ok(ExDefReport {
        ring: w.clone(),
        height,
        probes: records,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, parse_polynomial, ratio};

    fn p(s: &str) -> Polynomial {
        parse_polynomial(s).unwrap()
    }

    #[test]
    fn identity_model_over_z() {
        let r = check_model(&DiophantineModelSpec::identity(), &SubringDescriptor::integers(), 5, 20, &BTreeMap::new()).unwrap();
        assert_eq!(r.verdict, Verdict::ConsistentAtBudget);
        assert_eq!(r.refuted, 0);
        assert_eq!(r.representatives[&-3], Some(vec!["-3".to_string()]));
        assert!(r.facts.iter().any(|f| f.kind == FactKind::Product && f.args == vec![2, -2, -4]));
    }

    #[test]
    fn perturbed_sum_is_refuted() {
        // x0 + x1 - x2 + P(x0) P(x1) with P vanishing on [-5, 5] except at
        // 2: within range only the fact 2 + 2 = 4 changes.
        let vanish = |v: usize| {
            (-5i64..=5)
                .filter(|&a| a != 2)
                .fold(Polynomial::constant(1.into()), |acc, a| &acc * &(&Polynomial::var(v) - &Polynomial::constant(a.into())))
        };
        let mut spec = DiophantineModelSpec::identity();
        spec.h_plus = &spec.h_plus + &(&vanish(0) * &vanish(1));
        let r = check_model(&spec, &SubringDescriptor::integers(), 5, 20, &BTreeMap::new()).unwrap();
        assert_eq!(r.verdict, Verdict::Refuted);
        assert!(r
            .facts
            .iter()
            .any(|f| f.kind == FactKind::Sum && f.args == vec![2, 2, 4] && f.status == FactStatus::Refuted));
    }

    #[test]
    fn injected_half_is_flagged() {
        let inject: BTreeMap<i64, Vec<Rational>> = [(1, vec![ratio(1, 2)])].into_iter().collect();
        let r = check_model(&DiophantineModelSpec::identity(), &SubringDescriptor::include([2]), 3, 12, &inject).unwrap();
        assert_eq!(r.verdict, Verdict::Refuted);
        assert!(r.facts.iter().any(|f| f.kind == FactKind::Product && f.args == vec![1, 1, 1] && f.status == FactStatus::Refuted));
    }

    #[test]
    fn empty_domain_reports_all_missing() {
        let mut spec = DiophantineModelSpec::identity();
        spec.h = p("x0^2 + 1");
        let r = check_model(&spec, &SubringDescriptor::integers(), 3, 10, &BTreeMap::new()).unwrap();
        assert!(r.representatives.values().all(Option::is_none));
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.facts.is_empty());
    }

    #[test]
    fn model_spec_errors() {
        let mut spec = DiophantineModelSpec::identity();
        spec.n = 0;
        assert!(matches!(
            check_model(&spec, &SubringDescriptor::integers(), 3, 5, &BTreeMap::new()),
            Err(DefinabilityError::Spec(_))
        ));
        assert_eq!(
            check_model(&DiophantineModelSpec::identity(), &SubringDescriptor::integers(), 0, 5, &BTreeMap::new()),
            Err(DefinabilityError::EmptyRange)
        );
    }

    #[test]
    fn existential_zero_polynomial() {
        let spec = ExistentialDefSpec { g: Polynomial::zero() };
        let probes: Vec<Rational> = (-2..=2).map(int).collect();
        let r = check_existential_def(&spec, &SubringDescriptor::integers(), &probes, 5).unwrap();
        assert_eq!(r.verdict, Verdict::ConsistentAtBudget);
        let mut probes = probes;
        probes.push(ratio(1, 2));
        let r = check_existential_def(&spec, &SubringDescriptor::include([2]), &probes, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Refuted);
        let r = check_existential_def(&spec, &SubringDescriptor::integers(), &probes, 5).unwrap();
        assert!(matches!(r.probes.last().unwrap().outcome, ProbeOutcome::Skipped { .. }));
    }

    #[test]
    fn existential_with_auxiliary() {
        let spec = ExistentialDefSpec {
            g: p("x1^2 + (x0^2 - x0)^2"),
        };
        let probes = vec![int(0), int(1), ratio(1, 2)];
        let r = check_existential_def(&spec, &SubringDescriptor::include([2]), &probes, 10).unwrap();
        assert_eq!(r.verdict, Verdict::ConsistentAtBudget);
        assert_eq!(r.probes[2].outcome, ProbeOutcome::ExcludedAtBudget);
        assert!(check_existential_def(&spec, &SubringDescriptor::integers(), &[], 10).is_err());
    }

    #[test]
    fn report_vocabulary_never_claims_validity() {
        let spec = ExistentialDefSpec { g: Polynomial::zero() };
        let r = check_existential_def(&spec, &SubringDescriptor::integers(), &[int(0), int(1)], 5).unwrap();
        let text = serde_json::to_string(&r).unwrap().to_lowercase();
        assert!(!text.contains("valid"), "{text}");
        let m = check_model(&DiophantineModelSpec::identity(), &SubringDescriptor::integers(), 2, 5, &BTreeMap::new()).unwrap();
        let text = serde_json::to_string(&m).unwrap().to_lowercase();
        assert!(!text.contains("valid"), "{text}");
    }
}
