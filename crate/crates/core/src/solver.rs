//! Height-bounded search for zeros of `f` with every coordinate in `R_W`.
//!
//! A candidate coordinate is `a/b` in lowest terms with `|a| <= H`,
//! `1 <= b <= H` and `b` W-smooth; its height is `max(|a|, b)`. Coordinates
//! are ordered by `(height, b, |a|, sign)` with nonnegative values first, and
//! assignments by their maximum coordinate height and then lexicographically
//! in variable order. The search returns the least zero in that order.
//!
//! All variables but one are enumerated; the remaining one is solved exactly
//! from the resulting univariate integer polynomial, so the search covers the
//! whole candidate grid without visiting every cell.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith;
use crate::poly::{Assignment, PolyError, Polynomial, Rational};
use crate::subring::{self, SubringDescriptor, SubringError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("search needs a nonzero polynomial")]
    ZeroPolynomial,
    #[error("height bound must be at least 1")]
    ZeroHeight,
    #[error("height {height} exceeds the configured limit {limit}")]
    HeightLimit { height: u64, limit: u64 },
    #[error("{vars} variables exceed the configured limit {limit}")]
    TooManyVariables { vars: usize, limit: usize },
    #[error("candidate grid of size {size} exceeds the configured limit {limit}")]
    GridLimit { size: u128, limit: u128 },
    #[error("time budget of {0:?} exhausted before the grid was covered")]
    TimeBudget(Duration),
    #[error("witness failed exact re-verification")]
    Unverified,
    #[error(transparent)]
    Subring(#[from] SubringError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Resource limits. Exceeding any of them is an error, never an
/// [`SearchOutcome::ExhaustedUpTo`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_height: u64,
    pub max_vars: usize,
    /// Bound on candidate values per coordinate, `(2H + 1) · #smooth(H)`.
    pub max_coordinate_candidates: u128,
    /// Bound on the number of enumerated points (all variables but one).
    pub max_grid: u128,
    pub time_budget: Option<Duration>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_height: 1_000_000,
            max_vars: 16,
            max_coordinate_candidates: 50_000_000,
            max_grid: 20_000_000_000,
            time_budget: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Enumerate all variables but one and solve for the last exactly.
    #[default]
    SolveLast,
    /// Visit every cell of the grid and evaluate.
    Enumerate,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchConfig {
    pub limits: SearchLimits,
    pub strategy: Strategy,
    /// Moduli used by [`Strategy::Enumerate`] to skip integer cells with
    /// `f(x) ≢ 0 (mod m)`. Cells with a denominator are never filtered.
    pub prune_moduli: Vec<u64>,
}

/// A verified zero together with the primes of its denominators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionWitness {
    #[serde(with = "crate::serde_text::assignment")]
    pub assignment: Assignment,
    pub support: BTreeSet<u64>,
}

impl SolutionWitness {
    /// Builds a witness after checking `f(assignment) = 0` exactly.
    pub fn checked(f: &Polynomial, assignment: Assignment) -> Result<Self, SolverError> {
        if !f.eval(&assignment)?.is_zero() {
            return Err(SolverError::Unverified);
        }
        let mut support = BTreeSet::new();
        for q in assignment.values() {
            support.extend(subring::denominator_primes(q)?);
        }
        Ok(SolutionWitness { assignment, support })
    }

    /// Re-checks the zero and that the support lies in `W`.
    pub fn verify(&self, f: &Polynomial, w: &SubringDescriptor) -> Result<bool, SolverError> {
        let vars_ok = f.variables().iter().all(|v| self.assignment.contains_key(v));
        if !vars_ok || !f.eval(&self.assignment)?.is_zero() {
            return Ok(false);
        }
        let mut support = BTreeSet::new();
        for q in self.assignment.values() {
            support.extend(subring::denominator_primes(q)?);
        }
        if support != self.support {
            return Ok(false);
        }
        for &p in &support {
            if !w.contains_prime(p)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn height(&self) -> BigInt {
        self.assignment
            .values()
            .map(crate::poly::height)
            .max()
            .unwrap_or_else(BigInt::one)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(SolutionWitness),
    /// No zero among the candidates of height at most `H`.
    ExhaustedUpTo(u64),
}

impl SearchOutcome {
    pub fn witness(&self) -> Option<&SolutionWitness> {
        match self {
            SearchOutcome::Found(w) => Some(w),
            SearchOutcome::ExhaustedUpTo(_) => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found(_))
    }
}

/// One candidate coordinate `num/den`, lowest terms, `den >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Cand {
    num: i64,
    den: i64,
}

type CandKey = (u64, u64, u64, bool);

impl Cand {
    const ZERO: Cand = Cand { num: 0, den: 1 };

    fn height(self) -> u64 {
        self.num.unsigned_abs().max(self.den as u64)
    }

    fn key(self) -> CandKey {
        (self.height(), self.den as u64, self.num.unsigned_abs(), self.num < 0)
    }

    fn to_rational(self) -> Rational {
        Rational::new(BigInt::from(self.num), BigInt::from(self.den))
    }
}

/// Candidate values of a single coordinate, sorted by key.
struct CoordGrid {
    height: u64,
    smooth: Vec<bool>,
    cands: Vec<Cand>,
    /// `cands[..shell_end[h]]` are the candidates of height `<= h`.
    shell_end: Vec<usize>,
}

impl CoordGrid {
    fn build(w: &SubringDescriptor, height: u64, limits: &SearchLimits) -> Result<Self, SolverError> {
        let hu = height as usize;
        let bits = w.prime_bits_up_to(height);
        let primes = &arith::prime_table()[..bits.len()];
        // smooth[b]: every prime factor of b lies in W.
        let mut smooth = vec![true; hu + 1];
        smooth[0] = false;
        for (&p, &inside) in primes.iter().zip(&bits) {
            if !inside {
                let mut m = p as usize;
                while m <= hu {
                    smooth[m] = false;
                    m += p as usize;
                }
            }
        }
        let smooth_count = smooth.iter().filter(|&&s| s).count() as u128;
        let bound = (2 * height as u128 + 1) * smooth_count;
        if bound > limits.max_coordinate_candidates {
            return Err(SolverError::GridLimit {
                size: bound,
                limit: limits.max_coordinate_candidates,
            });
        }
        let mut cands = Vec::new();
        let mut shell_end = vec![0usize; hu + 1];
        for h in 1..=height as i64 {
            // |num| = h with a smaller denominator.
            for d in 1..h {
                if smooth[d as usize] && h.gcd(&d) == 1 {
                    cands.push(Cand { num: h, den: d });
                    cands.push(Cand { num: -h, den: d });
                }
            }
            // den = h, |num| <= h.
            if smooth[h as usize] {
                for a in 0..=h {
                    if a.gcd(&h) == 1 {
                        cands.push(Cand { num: a, den: h });
                        if a != 0 {
                            cands.push(Cand { num: -a, den: h });
                        }
                    }
                }
            }
            shell_end[h as usize] = cands.len();
        }
        Ok(CoordGrid {
            height,
            smooth,
            cands,
            shell_end,
        })
    }

    fn up_to(&self, h: u64) -> &[Cand] {
        &self.cands[..self.shell_end[h as usize]]
    }

    fn shell(&self, h: u64) -> &[Cand] {
        &self.cands[self.shell_end[h as usize - 1]..self.shell_end[h as usize]]
    }

    fn admits(&self, num: &BigInt, den: &BigInt) -> Option<Cand> {
        let n = num.to_i64()?;
        let d = den.to_i64()?;
        self.admits_small(n as i128, d as i128)
    }

    fn admits_small(&self, num: i128, den: i128) -> Option<Cand> {
        let h = self.height as i128;
        if den < 1 || den > h || num.abs() > h || !self.smooth[den as usize] {
            return None;
        }
        Some(Cand {
            num: num as i64,
            den: den as i64,
        })
    }
}

/// Count of candidate coordinates of height `<= height` in `R_W`.
pub fn candidate_count(w: &SubringDescriptor, height: u64) -> Result<usize, SolverError> {
    Ok(CoordGrid::build(w, height, &SearchLimits::default())?.cands.len())
}

/// All assignments `x_0..x_{vars-1}` of height at most `H`, ordered by
/// height and then lexicographically.
pub fn enumerate_candidates(
    vars: usize,
    w: &SubringDescriptor,
    height: u64,
) -> Result<impl Iterator<Item = Assignment>, SolverError> {
    if height == 0 {
        return Err(SolverError::ZeroHeight);
    }
    let grid = CoordGrid::build(w, height, &SearchLimits::default())?;
    Ok(CandidateIter {
        grid,
        vars,
        shell: 1,
        digits: None,
        done: false,
    })
}

struct CandidateIter {
    grid: CoordGrid,
    vars: usize,
    shell: u64,
    digits: Option<Vec<usize>>,
    done: bool,
}

impl CandidateIter {
    fn advance(&mut self) -> Option<Vec<usize>> {
        while self.shell <= self.grid.height {
            let radix = self.grid.shell_end[self.shell as usize];
            let lower = self.grid.shell_end[self.shell as usize - 1];
            let next = match self.digits.take() {
                None => Some(vec![0; self.vars]),
                Some(mut d) => {
                    let mut carry = true;
                    for i in (0..self.vars).rev() {
                        d[i] += 1;
                        if d[i] < radix {
                            carry = false;
                            break;
                        }
                        d[i] = 0;
                    }
                    (!carry).then_some(d)
                }
            };
            match next {
                None => self.shell += 1,
                Some(d) => {
                    self.digits = Some(d.clone());
                    if d.iter().any(|&i| i >= lower) {
                        return Some(d);
                    }
                }
            }
        }
        None
    }
}

impl Iterator for CandidateIter {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        if self.vars == 0 {
            self.done = true;
            return Some(Assignment::new());
        }
        match self.advance() {
            Some(d) => Some(
                d.iter()
                    .enumerate()
                    .map(|(v, &i)| (v, self.grid.cands[i].to_rational()))
                    .collect(),
            ),
            None => {
                self.done = true;
                None
            }
        }
    }
}

/// `f` split along the solve variable, with integer terms over the outer
/// variables.
struct Compiled {
    vars: Vec<usize>,
    solve_pos: usize,
    outer_pos: Vec<usize>,
    outer_deg: Vec<u32>,
    /// coefficient of `t^k`: terms `(c, c as i128, exponent per outer var)`.
    coeffs: Vec<Vec<(BigInt, Option<i128>, Vec<u32>)>>,
}

impl Compiled {
    fn new(f: &Polynomial, vars: Vec<usize>, solve_var: usize) -> Self {
        let solve_pos = vars.iter().position(|&v| v == solve_var).unwrap();
        let outer_pos: Vec<usize> = (0..vars.len()).filter(|&i| i != solve_pos).collect();
        let outer_deg = outer_pos.iter().map(|&i| f.degree_in(vars[i])).collect();
        let coeffs = f
            .coefficients_in(solve_var)
            .into_iter()
            .map(|p| {
                p.terms()
                    .map(|(m, c)| {
                        let exps = outer_pos.iter().map(|&i| m.exponent(vars[i])).collect();
                        (c.clone(), c.to_i128(), exps)
                    })
                    .collect()
            })
            .collect();
        Compiled {
            vars,
            solve_pos,
            outer_pos,
            outer_deg,
            coeffs,
        }
    }

    /// `N_k = B · P_k(x)` with the common denominator
    /// `B = Π b_i^{D_i}`, in machine integers when nothing overflows.
    fn numerators_small(&self, pt: &[Cand], pa: &mut Vec<i128>, pb: &mut Vec<i128>) -> Option<Vec<i128>> {
        let stride = self.outer_deg.iter().copied().max().unwrap_or(0) as usize + 1;
        pa.clear();
        pb.clear();
        pa.resize(stride * pt.len(), 0);
        pb.resize(stride * pt.len(), 0);
        for (i, c) in pt.iter().enumerate() {
            pa[i * stride] = 1;
            pb[i * stride] = 1;
            for e in 1..=self.outer_deg[i] as usize {
                pa[i * stride + e] = pa[i * stride + e - 1].checked_mul(c.num as i128)?;
                pb[i * stride + e] = pb[i * stride + e - 1].checked_mul(c.den as i128)?;
            }
        }
        let mut out = Vec::with_capacity(self.coeffs.len());
        for terms in &self.coeffs {
            let mut sum: i128 = 0;
            for (_, small, exps) in terms {
                let mut t = (*small)?;
                for (i, &e) in exps.iter().enumerate() {
                    let d = self.outer_deg[i];
                    t = t
                        .checked_mul(pa[i * stride + e as usize])?
                        .checked_mul(pb[i * stride + (d - e) as usize])?;
                }
                sum = sum.checked_add(t)?;
            }
            out.push(sum);
        }
        Some(out)
    }

    fn numerators_big(&self, pt: &[Cand]) -> Vec<BigInt> {
        self.coeffs
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|(c, _, exps)| {
                        let mut t = c.clone();
                        for (i, &e) in exps.iter().enumerate() {
                            let d = self.outer_deg[i];
                            t *= num_traits::pow(BigInt::from(pt[i].num), e as usize);
                            t *= num_traits::pow(BigInt::from(pt[i].den), (d - e) as usize);
                        }
                        t
                    })
                    .fold(BigInt::zero(), |a, b| a + b)
            })
            .collect()
    }

    /// Least zero (in candidate order) with the outer coordinates fixed.
    fn best_at(&self, grid: &CoordGrid, pt: &[Cand], pa: &mut Vec<i128>, pb: &mut Vec<i128>) -> Option<Vec<Cand>> {
        let roots = match self.numerators_small(pt, pa, pb).and_then(|n| roots_small(&n, grid)) {
            Some(r) => r,
            None => roots_big(&self.numerators_big(pt), grid),
        };
        let best_root = roots.into_iter().min_by_key(|c| c.key())?;
        let mut full = vec![Cand::ZERO; self.vars.len()];
        for (i, &pos) in self.outer_pos.iter().enumerate() {
            full[pos] = pt[i];
        }
        full[self.solve_pos] = best_root;
        Some(full)
    }
}

fn cmp_assignment(a: &[Cand], b: &[Cand]) -> Ordering {
    let ha = a.iter().map(|c| c.height()).max().unwrap_or(1);
    let hb = b.iter().map(|c| c.height()).max().unwrap_or(1);
    ha.cmp(&hb).then_with(|| {
        a.iter()
            .map(|c| c.key())
            .cmp(b.iter().map(|c| c.key()))
    })
}

fn reduce_small(num: i128, den: i128) -> (i128, i128) {
    let g = num.gcd(&den);
    let (mut n, mut d) = (num / g, den / g);
    if d < 0 {
        n = -n;
        d = -d;
    }
    (n, d)
}

/// Grid roots of `Σ n_k t^k` for degree at most two after removing the
/// factor `t^z`; `None` asks for the arbitrary-precision path.
fn roots_small(n: &[i128], grid: &CoordGrid) -> Option<Vec<Cand>> {
    let Some(deg) = n.iter().rposition(|c| *c != 0) else {
        return Some(vec![Cand::ZERO]);
    };
    let z = n.iter().position(|c| *c != 0).unwrap();
    let mut out = Vec::with_capacity(3);
    if z > 0 {
        out.push(Cand::ZERO);
    }
    let r = &n[z..=deg];
    match r.len() {
        1 => {}
        2 => {
            let (p, q) = reduce_small(-r[0], r[1]);
            out.extend(grid.admits_small(p, q));
        }
        3 => {
            let (c, b, a) = (r[0], r[1], r[2]);
            let disc = b.checked_mul(b)?.checked_sub(a.checked_mul(c)?.checked_mul(4)?)?;
            if let Some(s) = arith::exact_sqrt_i128(disc) {
                let two_a = a.checked_mul(2)?;
                for num in [(-b).checked_add(s)?, (-b).checked_sub(s)?] {
                    let (p, q) = reduce_small(num, two_a);
                    out.extend(grid.admits_small(p, q));
                }
            }
        }
        _ => return None,
    }
    Some(out)
}

fn roots_big(n: &[BigInt], grid: &CoordGrid) -> Vec<Cand> {
    let Some(deg) = n.iter().rposition(|c| !c.is_zero()) else {
        return vec![Cand::ZERO];
    };
    let z = n.iter().position(|c| !c.is_zero()).unwrap();
    let mut out = Vec::new();
    if z > 0 {
        out.push(Cand::ZERO);
    }
    let r = &n[z..=deg];
    let push_ratio = |out: &mut Vec<Cand>, num: BigInt, den: BigInt| {
        let q = Rational::new(num, den);
        out.extend(grid.admits(q.numer(), q.denom()));
    };
    match r.len() {
        1 => {}
        2 => push_ratio(&mut out, -r[0].clone(), r[1].clone()),
        3 => {
            let (c, b, a) = (&r[0], &r[1], &r[2]);
            let disc = b * b - a * c * 4;
            if let Some(s) = arith::exact_sqrt(&disc) {
                push_ratio(&mut out, -b + &s, a * 2);
                push_ratio(&mut out, -b - &s, a * 2);
            }
        }
        _ => {
            // Rational roots a/b satisfy b | lead and a | trailing.
            let lead = r.last().unwrap();
            let trail = &r[0];
            let d = r.len() - 1;
            for den in 1..=grid.height as i64 {
                if !grid.smooth[den as usize] || !(lead % den).is_zero() {
                    continue;
                }
                for a in 1..=grid.height as i64 {
                    if a.gcd(&den) != 1 || !(trail % a).is_zero() {
                        continue;
                    }
                    for num in [a, -a] {
                        let nb = BigInt::from(num);
                        let db = BigInt::from(den);
                        let mut acc = BigInt::zero();
                        for (k, coef) in r.iter().enumerate() {
                            acc += coef * num_traits::pow(nb.clone(), k) * num_traits::pow(db.clone(), d - k);
                        }
                        if acc.is_zero() {
                            out.push(Cand { num, den });
                        }
                    }
                }
            }
        }
    }
    out
}

fn to_witness(f: &Polynomial, vars: &[usize], full: &[Cand]) -> Result<SolutionWitness, SolverError> {
    let assignment: Assignment = vars
        .iter()
        .zip(full)
        .map(|(&v, c)| (v, c.to_rational()))
        .collect();
    SolutionWitness::checked(f, assignment)
}

/// Mixed-radix walk over one block of a shell: coordinates before `pivot`
/// have height `< h`, the pivot has height exactly `h`, the rest `<= h`.
struct ShellBlock<'a> {
    ranges: Vec<&'a [Cand]>,
    size: u128,
}

impl<'a> ShellBlock<'a> {
    fn new(grid: &'a CoordGrid, dims: usize, h: u64, pivot: usize) -> Self {
        let ranges: Vec<&[Cand]> = (0..dims)
            .map(|j| match j.cmp(&pivot) {
                Ordering::Less => grid.up_to(h - 1),
                Ordering::Equal => grid.shell(h),
                Ordering::Greater => grid.up_to(h),
            })
            .collect();
        let size = ranges.iter().map(|r| r.len() as u128).product();
        ShellBlock { ranges, size }
    }

    fn point(&self, mut index: u128, out: &mut Vec<Cand>) {
        out.clear();
        out.resize(self.ranges.len(), Cand::ZERO);
        for j in (0..self.ranges.len()).rev() {
            let len = self.ranges[j].len() as u128;
            out[j] = self.ranges[j][(index % len) as usize];
            index /= len;
        }
    }
}

/// Search with default configuration.
pub fn search(f: &Polynomial, w: &SubringDescriptor, height: u64) -> Result<SearchOutcome, SolverError> {
    search_with(f, w, height, &SearchConfig::default())
}

pub fn search_with(
    f: &Polynomial,
    w: &SubringDescriptor,
    height: u64,
    config: &SearchConfig,
) -> Result<SearchOutcome, SolverError> {
    let limits = &config.limits;
    if f.is_zero() {
        return Err(SolverError::ZeroPolynomial);
    }
    if height == 0 {
        return Err(SolverError::ZeroHeight);
    }
    if height > limits.max_height {
        return Err(SolverError::HeightLimit {
            height,
            limit: limits.max_height,
        });
    }
    let vars: Vec<usize> = f.variables().into_iter().collect();
    if vars.len() > limits.max_vars {
        return Err(SolverError::TooManyVariables {
            vars: vars.len(),
            limit: limits.max_vars,
        });
    }
    if vars.is_empty() {
        // Nonzero constant.
        return Ok(SearchOutcome::ExhaustedUpTo(height));
    }
    let grid = CoordGrid::build(w, height, limits)?;
    match config.strategy {
        Strategy::SolveLast => solve_last(f, vars, &grid, limits),
        Strategy::Enumerate => enumerate_all(f, vars, &grid, limits, &config.prune_moduli),
    }
}

fn check_grid(per_coord: usize, dims: usize, limits: &SearchLimits) -> Result<(), SolverError> {
    let mut size: u128 = 1;
    for _ in 0..dims {
        size = size.saturating_mul(per_coord as u128);
    }
    if size > limits.max_grid {
        return Err(SolverError::GridLimit {
            size,
            limit: limits.max_grid,
        });
    }
    Ok(())
}

fn solve_last(
    f: &Polynomial,
    vars: Vec<usize>,
    grid: &CoordGrid,
    limits: &SearchLimits,
) -> Result<SearchOutcome, SolverError> {
    let start = Instant::now();
    // Solve for the variable of least positive degree; ties go to the
    // highest id.
    let solve_var = *vars
        .iter()
        .min_by_key(|&&v| (f.degree_in(v), std::cmp::Reverse(v)))
        .unwrap();
    let compiled = Compiled::new(f, vars.clone(), solve_var);
    let dims = compiled.outer_pos.len();
    check_grid(grid.cands.len(), dims, limits)?;

    if dims == 0 {
        let mut pa = Vec::new();
        let mut pb = Vec::new();
        return match compiled.best_at(grid, &[], &mut pa, &mut pb) {
            Some(full) => Ok(SearchOutcome::Found(to_witness(f, &vars, &full)?)),
            None => Ok(SearchOutcome::ExhaustedUpTo(grid.height)),
        };
    }

    let mut best: Option<Vec<Cand>> = None;
    for h in 1..=grid.height {
        if let Some(b) = &best {
            if b.iter().map(|c| c.height()).max().unwrap() < h {
                break;
            }
        }
        if let Some(budget) = limits.time_budget {
            if start.elapsed() > budget {
                return Err(SolverError::TimeBudget(budget));
            }
        }
        for pivot in 0..dims {
            let block = ShellBlock::new(grid, dims, h, pivot);
            if block.size == 0 {
                continue;
            }
            let found = (0..block.size as u64)
                .into_par_iter()
                .map_init(
                    || (Vec::new(), Vec::new(), Vec::new()),
                    |(pt, pa, pb), idx| {
                        block.point(idx as u128, pt);
                        compiled.best_at(grid, pt, pa, pb)
                    },
                )
                .flatten()
                .min_by(|a, b| cmp_assignment(a, b));
            if let Some(cand) = found {
                let better = match &best {
                    None => true,
                    Some(b) => cmp_assignment(&cand, b) == Ordering::Less,
                };
                if better {
                    best = Some(cand);
                }
            }
        }
    }
    match best {
        Some(full) => Ok(SearchOutcome::Found(to_witness(f, &vars, &full)?)),
        None => Ok(SearchOutcome::ExhaustedUpTo(grid.height)),
    }
}

fn residue_mod(c: &BigInt, m: u64) -> u64 {
    c.mod_floor(&BigInt::from(m)).to_u64().unwrap()
}

fn enumerate_all(
    f: &Polynomial,
    vars: Vec<usize>,
    grid: &CoordGrid,
    limits: &SearchLimits,
    moduli: &[u64],
) -> Result<SearchOutcome, SolverError> {
    let start = Instant::now();
    let dims = vars.len();
    check_grid(grid.cands.len(), dims, limits)?;
    let residues: Vec<(u64, Vec<(u64, Vec<u32>)>)> = moduli
        .iter()
        .filter(|&&m| m > 1)
        .map(|&m| {
            let terms = f
                .terms()
                .map(|(mono, c)| (residue_mod(c, m), vars.iter().map(|&v| mono.exponent(v)).collect()))
                .collect();
            (m, terms)
        })
        .collect();
    let passes_filters = |pt: &[Cand]| -> bool {
        if pt.iter().any(|c| c.den != 1) {
            return true;
        }
        residues.iter().all(|(m, terms)| {
            let m = *m as u128;
            let xs: Vec<u128> = pt.iter().map(|c| (c.num as i128).rem_euclid(m as i128) as u128).collect();
            let mut sum: u128 = 0;
            for (c, exps) in terms {
                let mut t = *c as u128;
                for (x, &e) in xs.iter().zip(exps) {
                    for _ in 0..e {
                        t = t * x % m;
                    }
                }
                sum = (sum + t) % m;
            }
            sum == 0
        })
    };
    for h in 1..=grid.height {
        if let Some(budget) = limits.time_budget {
            if start.elapsed() > budget {
                return Err(SolverError::TimeBudget(budget));
            }
        }
        let mut found: Option<Vec<Cand>> = None;
        for pivot in 0..dims {
            let block = ShellBlock::new(grid, dims, h, pivot);
            if block.size == 0 {
                continue;
            }
            let hit = (0..block.size as u64)
                .into_par_iter()
                .map_init(Vec::new, |pt, idx| {
                    block.point(idx as u128, pt);
                    if !passes_filters(pt) {
                        return None;
                    }
                    let assignment: Assignment = vars
                        .iter()
                        .zip(pt.iter())
                        .map(|(&v, c)| (v, c.to_rational()))
                        .collect();
                    f.eval(&assignment)
                        .ok()
                        .filter(|v| v.is_zero())
                        .map(|_| pt.clone())
                })
                .flatten()
                .min_by(|a, b| cmp_assignment(a, b));
            if let Some(c) = hit {
                if found.as_ref().map_or(true, |b| cmp_assignment(&c, b) == Ordering::Less) {
                    found = Some(c);
                }
            }
        }
        if let Some(full) = found {
            return Ok(SearchOutcome::Found(to_witness(f, &vars, &full)?));
        }
    }
    Ok(SearchOutcome::ExhaustedUpTo(grid.height))
}
