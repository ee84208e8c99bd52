use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use htp_core::arith::ArithError;
use htp_core::category::{self, CategoryError, NegativeOutcome, PhiOutcome, ProbeStatus};
use htp_core::definability::{self, DefinabilityError, DiophantineModelSpec, ExistentialDefSpec, Verdict};
use htp_core::measure::{self, MeasureError};
use htp_core::poly::{decode, encode, parse_polynomial, PolyCode, PolyError, Polynomial, Rational};
use htp_core::quad::{self, FamilyDecision, OracleError, QuadraticForm};
use htp_core::reduction::{self, GadgetRegistry, GadgetSemantics, ReductionError};
use htp_core::serde_text;
use htp_core::solver::{self, SearchConfig, SearchOutcome, SolverError, Strategy};
use htp_core::store::{self, StoreError, StoreRecord};
use htp_core::subring::{SubringDescriptor, SubringError};

use crate::config::Settings;
use crate::{CliError, Command, Status, StoreCmd};

const DEFAULT_HEIGHT: u64 = 20;
const DEFAULT_DEPTH: usize = 6;
const DEFAULT_SAMPLES: u64 = 1000;
const DEFAULT_ROUNDS: u32 = 10;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::HeightLimit { .. }
            | SolverError::GridLimit { .. }
            | SolverError::TimeBudget(_)
            | SolverError::TooManyVariables { .. } => CliError::Budget(e.to_string()),
            SolverError::Subring(s) => s.into(),
            other => usage(other),
        }
    }
}

impl From<ArithError> for CliError {
    fn from(e: ArithError) -> Self {
        match e {
            ArithError::FactorLimit(_) | ArithError::Overflow(_) => CliError::Budget(e.to_string()),
            other => usage(other),
        }
    }
}

impl From<SubringError> for CliError {
    fn from(e: SubringError) -> Self {
        match e {
            SubringError::Arith(a) => a.into(),
            other => usage(other),
        }
    }
}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        usage(e)
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Arith(a) => a.into(),
            OracleError::Subring(s) => s.into(),
            other => usage(other),
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(e: ReductionError) -> Self {
        usage(e)
    }
}

impl From<CategoryError> for CliError {
    fn from(e: CategoryError) -> Self {
        match e {
            CategoryError::Solver(s) => s.into(),
            CategoryError::Oracle(o) => o.into(),
            CategoryError::Subring(s) => s.into(),
            other => usage(other),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Solver(s) => s.into(),
            MeasureError::Category(c) => c.into(),
            MeasureError::Oracle(o) => o.into(),
            other => usage(other),
        }
    }
}

impl From<DefinabilityError> for CliError {
    fn from(e: DefinabilityError) -> Self {
        match e {
            DefinabilityError::Solver(s) => s.into(),
            DefinabilityError::Subring(s) => s.into(),
            other => usage(other),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io { .. } => CliError::Io(e.to_string()),
            StoreError::Encode(_) => usage(e),
        }
    }
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let line = serde_json::to_string(value).map_err(usage)?;
    writeln!(out, "{line}").map_err(|e| CliError::Io(e.to_string()))
}

fn poly(text: &str) -> Result<Polynomial, CliError> {
    Ok(parse_polynomial(text)?)
}

fn ring(text: &str) -> Result<SubringDescriptor, CliError> {
    Ok(text.parse()?)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Non-blank, non-comment lines.
fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn read_polys(path: &Path) -> Result<Vec<Polynomial>, CliError> {
    content_lines(&read_text(path)?).map(poly).collect()
}

fn read_rationals(path: &Path) -> Result<Vec<Rational>, CliError> {
    let text = read_text(path)?;
    content_lines(&text)
        .flat_map(|l| l.split([',', ' ', '\t']))
        .filter(|t| !t.is_empty())
        .map(|t| serde_text::rational::parse(t).map_err(CliError::Usage))
        .collect()
}

fn prime_list(text: &str) -> Result<BTreeSet<u64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|_| CliError::Usage(format!("bad prime {t:?}"))))
        .collect()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    SolveLast,
    Enumerate,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    poly: String,
    #[arg(long)]
    ring: String,
    #[arg(long)]
    height: Option<u64>,
    #[arg(long, value_enum, default_value = "solve-last")]
    strategy: StrategyArg,
}

#[derive(Debug, Subcommand)]
pub enum ReduceCmd {
    /// Single-polynomial reduction from Q to any R_W.
    Homogenize {
        #[arg(long)]
        poly: String,
    },
    /// Sum of squares of a list of polynomials (one per line).
    Conjoin {
        #[arg(long)]
        polys: PathBuf,
    },
    /// Combine with prime gadgets for the excluded primes.
    Semilocal {
        #[arg(long)]
        poly: String,
        /// Comma-separated primes.
        #[arg(long, default_value = "")]
        exclude: String,
        /// Gadget file: one JSON record {prime, poly, semantics} per line.
        #[arg(long)]
        gadgets: Option<PathBuf>,
        /// Register mock gadgets for every excluded prime lacking one.
        #[arg(long)]
        mock: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleCmd {
    /// Verdict on the quadratic family, plus Hasse-Minkowski for quadratic forms.
    Quad {
        #[arg(long)]
        poly: String,
        #[arg(long)]
        ring: String,
    },
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    poly: String,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    height: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Polynomial; defaults to every `boundary_polys` entry of the config.
    #[arg(long)]
    poly: Option<String>,
    #[arg(long)]
    ring: String,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    height: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PhiArgs {
    #[arg(long)]
    poly: String,
    #[arg(long)]
    ring: String,
    /// Round k searches at height 2^k.
    #[arg(long)]
    rounds: Option<u32>,
}

#[derive(Debug, Args)]
pub struct GenericArgs {
    #[arg(long)]
    ring: String,
    #[arg(long)]
    polys: PathBuf,
    #[arg(long)]
    rounds: Option<u32>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[arg(long)]
    poly: String,
    #[arg(long)]
    height: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Also report the exact measure when the oracle family determines it.
    #[arg(long)]
    exact_family: bool,
    /// Also report certificate-based bounds at this condition length.
    #[arg(long)]
    gap_depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelCheckArgs {
    /// TOML file with `n`, `h`, `h_plus`, `h_times`.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    ring: String,
    #[arg(long)]
    range: i64,
    #[arg(long)]
    height: Option<u64>,
    /// Replace a representative, `k=q1,..,qn`; repeatable.
    #[arg(long)]
    inject: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ExdefArgs {
    #[arg(long)]
    g: String,
    #[arg(long)]
    ring: String,
    /// Rationals separated by whitespace, commas or newlines.
    #[arg(long)]
    probes: PathBuf,
    #[arg(long)]
    height: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    poly: String,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    code: String,
}

pub fn dispatch(cmd: &Command, s: &Settings, out: &mut dyn Write) -> Result<Status, CliError> {
    match cmd {
        Command::Solve(a) => solve(a, s, out),
        Command::Reduce(r) => reduce(r, out),
        Command::Oracle(OracleCmd::Quad { poly: p, ring: r }) => oracle_quad(p, r, out),
        Command::Certify(a) => certify(a, s, out),
        Command::Probe(a) => probe(a, s, out),
        Command::Phi(a) => phi(a, s, out),
        Command::Generic(a) => generic(a, s, out),
        Command::Measure(a) => measure_cmd(a, s, out),
        Command::ModelCheck(a) => model_check(a, s, out),
        Command::ExdefCheck(a) => exdef_check(a, s, out),
        Command::Encode(a) => {
            let f = poly(&a.poly)?;
            emit(out, &json!({"command": "encode", "poly": f.to_string(), "code": encode(&f).to_string()}))?;
            Ok(Status::Ok)
        }
        Command::Decode(a) => {
            let code: PolyCode = a.code.parse().map_err(|_| CliError::Usage(format!("bad code {:?}", a.code)))?;
            emit(out, &json!({"command": "decode", "code": code.to_string(), "poly": decode(&code).to_string()}))?;
            Ok(Status::Ok)
        }
        Command::Store(StoreCmd::Verify(a)) => store_verify(a.path.as_ref().or(s.store.as_ref()), out),
    }
}

fn solve(a: &SolveArgs, s: &Settings, out: &mut dyn Write) -> Result<Status, CliError> {
    let f = poly(&a.poly)?;
    let w = ring(&a.ring)?;
    let height = s.height(a.height, DEFAULT_HEIGHT)?;
    let config = SearchConfig {
        strategy: match a.strategy {
            StrategyArg::SolveLast => Strategy::SolveLast,
            StrategyArg::Enumerate => Strategy::Enumerate,
        },
        ..SearchConfig::default()
    };
    let outcome = solver::search_with(&f, &w, height, &config)?;
    let mut record = json!({
        "command": "solve",
        "poly": f.to_string(),
        "ring": w.to_string(),
        "height": height,
    });
    let status = match &outcome {
        SearchOutcome::Found(wit) => {
            record["outcome"] = json!("found");
            record["witness"] = serde_json::to_value(wit).map_err(usage)?;
            Status::Ok
        }
        SearchOutcome::ExhaustedUpTo(h) => {
            record["outcome"] = json!("exhausted");
            record["exhausted_up_to"] = json!(h);
            Status::Undecided
        }
    };
    emit(out, &record)?;
    Ok(status)
}

fn reduce(r: &ReduceCmd, out: &mut dyn Write) -> Result<Status, CliError> {
    match r {
        ReduceCmd::Homogenize { poly: p } => {
            let f = poly(p)?;
            let h = reduction::homogenize_with_positivity(&f)?;
            emit(
                out,
                &json!({
                    "command": "reduce homogenize",
                    "input": f.to_string(),
                    "output": h.poly.to_string(),
                    "core": h.core.to_string(),
                    "degree": h.degree,
                    "y": format!("x{}", h.y),
                    "squares": h.squares.iter().map(|v| format!("x{v}")).collect::<Vec<_>>(),
                }),
            )?;
        }
        ReduceCmd::Conjoin { polys } => {
            let gs = read_polys(polys)?;
            let g = reduction::conjoin(&gs)?;
            emit(
                out,
                &json!({
                    "command": "reduce conjoin",
                    "inputs": gs.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "output": g.to_string(),
                }),
            )?;
        }
        ReduceCmd::Semilocal {
            poly: p,
            exclude,
            gadgets,
            mock,
        } => {
            let g = poly(p)?;
            let excluded = prime_list(exclude)?;
            let mut registry = match gadgets {
                Some(path) => GadgetRegistry::from_records(&read_text(path)?)?,
                None => GadgetRegistry::new(),
            };
            if *mock {
                for &q in &excluded {
                    if registry.get(q).is_none() {
                        registry.insert(reduction::GadgetEntry::mock(q)?)?;
                    }
                }
            }
            let red = reduction::semilocal_reduce(&g, &excluded, &registry)?;
            let semantics = match red.semantics {
                GadgetSemantics::Mock => "semantics:mock",
                GadgetSemantics::Declared => "semantics:declared",
            };
            emit(
                out,
                &json!({
                    "command": "reduce semilocal",
                    "input": g.to_string(),
                    "exclude": excluded,
                    "output": red.poly.to_string(),
                    "instances": red.instances.iter().map(|i| json!({
                        "prime": i.prime,
                        "z": format!("x{}", i.z_var),
                        "aux": i.aux.iter().map(|v| format!("x{v}")).collect::<Vec<_>>(),
                    })).collect::<Vec<_>>(),
                    "watermark": semantics,
                }),
            )?;
        }
    }
    Ok(Status::Ok)
}

fn oracle_quad(p: &str, r: &str, out: &mut dyn Write) -> Result<Status, CliError> {
    let f = poly(p)?;
    let w = ring(r)?;
    let decision = quad::decide_family_member(&f, &w)?;
    let mut record = json!({"command": "oracle quad", "poly": f.to_string(), "ring": w.to_string()});
    let status = match &decision {
        FamilyDecision::Verdict(v) => {
            record["verdict"] = serde_json::to_value(v).map_err(usage)?;
            if v.solvable {
                Status::Ok
            } else {
                Status::Negative
            }
        }
        FamilyDecision::NotInFamily => {
            record["verdict"] = json!("not_in_family");
            Status::Undecided
        }
    };
    if f.is_homogeneous() && f.total_degree() == Some(2) && f.variables().len() <= 4 {
        let (diag, defect) = QuadraticForm::from_polynomial(&f)?;
        let mut iso = json!({
            "diagonal": diag.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "rank_defect": defect,
        });
        if defect > 0 {
            iso["isotropic"] = json!(true);
        } else {
            let v = quad::isotropic_over_q(&QuadraticForm::new(diag)?)?;
            iso["isotropic"] = json!(v.solvable);
            iso["reason"] = serde_json::to_value(&v.reason).map_err(usage)?;
        }
        record["form"] = iso;
    }
    emit(out, &record)?;
    Ok(status)
}

fn append_store(s: &Settings, records: &[StoreRecord]) -> Result<(), CliError> {
    if let Some(path) = &s.store {
        store::store_append(path, records)?;
    }
    Ok(())
}

fn certify(a: &CertifyArgs, s: &Settings, out: &mut dyn Write) -> Result<Status, CliError> {
    let f = poly(&a.poly)?;
    let depth = s.depth(a.depth, DEFAULT_DEPTH);
    let height = s.height(a.height, DEFAULT_HEIGHT)?;
    let positive = category::positive_certificates(&f, depth, height)?;
    let negative = category::negative_certificates(&f, depth)?;
    let complete = matches!(negative, NegativeOutcome::Certified { .. });
    let mut records = Vec::new();
    for c in positive.iter().chain(negative.certificates()) {
        emit(out, &json!({"command": "certify", "certificate": c}))?;
        records.push(StoreRecord::new(c.clone(), s.seed));
    }
    let conds = |cs: &[category::CylinderCertificate]| cs.iter().map(|c| c.condition.clone()).collect::<Vec<_>>();
    emit(
        out,
        &json!({
            "command": "certify",
            "summary": {
                "poly": f.to_string(),
                "depth": depth,
                "height": height,
                "positive": positive.len(),
                "negative": negative.certificates().len(),
                "negative_complete": complete,
                "lower_a": measure::cylinder_union_measure(&conds(&positive)).to_string(),
                "lower_comp": measure::cylinder_union_measure(&conds(negative.certificates())).to_string(),
            }
        }),
    )?;
    append_store(s, &records)?;
    Ok(Status::Ok)
}

fn probe(a: &ProbeArgs, s: &Settings, out: &mut dyn Write) -> Result<Status, CliError> {
    let w = ring(&a.ring)?;
    let depth = s.depth(a.depth, DEFAULT_DEPTH);
    let height = s.height(a.height, DEFAULT_HEIGHT)?;
    let polys: Vec<Polynomial> = match &a.poly {
        Some(p) => vec![poly(p)?],
        None if !s.file.boundary_polys.is_empty() => {
            s.file.boundary_polys.iter().map(|p| poly(p)).collect::<Result<_, _>>()?
        }
        None => return Err(CliError::Usage("probe needs --poly or boundary_polys in the config".into())),
    };
    let mut worst = Status::Ok;
    for f in polys {
        let status = category::boundary_probe(&f, &w, depth, height)?;
        let code = match status {
            ProbeStatus::InA { .. } => Status::Ok,
            ProbeStatus::InComplementInterior { .. } => Status::Negative,
            ProbeStatus::UndecidedUpTo { .. } => Status::Undecided,
        };
        if code.code() > worst.code() {
            worst = code;
        }
        emit(
            out,
            &json!({"command": "probe", "poly": f.to_string(), "ring": w.to_string(), "result": status}),
        )?;
    }
    Ok(worst)
}

fn phi(a: &PhiArgs, s: &Settings, out: &mut dyn Write) -> Result<Status, CliError> {
    let f = poly(&a.poly)?;
    let w = ring(&a.ring)?;
    let rounds = s.rounds(a.rounds, DEFAULT_ROUNDS)?;
    let outcome = category::phi_decide(&f, &w, rounds)?;
    let status = match outcome {
        PhiOutcome::Member { .. } => Status::Ok,
        PhiOutcome::NonMember { .. } => Status::Negative,
        PhiOutcome::Undecided { .. } => Status::Undecided,
    };
    emit(
        out,
        &json!({"command": "phi", "poly": f.to_string(), "ring": w.to_string(), "rounds": rounds, "result": outcome}),
    )?;
    Ok(status)
}

fn generic(a: &GenericArgs, s: &Settings, out: &mut dyn Write) -> Result<Status, CliError> {
    let w = ring(&a.ring)?;
    let fs = read_polys(&a.polys)?;
    let rounds = s.rounds(a.rounds, DEFAULT_ROUNDS)?;
    let report = category::generic_check(&w, &fs, rounds)?;
    emit(out, &json!({"command": "generic", "report": report}))?;
    Ok(if report.passes_at_budget {
        Status::Ok
    } else {
        Status::Undecided
    })
}

fn measure_cmd(a: &MeasureArgs, s: &Settings, out: &mut dyn Write) -> Result<Status, CliError> {
    let f = poly(&a.poly)?;
    let height = s.height(a.height, DEFAULT_HEIGHT)?;
    let samples = s.samples(a.samples, DEFAULT_SAMPLES)?;
    let seed = s.require_seed(None)?;
    let estimate = measure::estimate_measure_a(&f, height, samples, seed)?;
    let mut record = json!({"command": "measure", "poly": f.to_string(), "estimate": estimate});
    if a.exact_family {
        record["exact"] = match measure::exact_family_measure(&f)? {
            Some(m) => json!(m.to_string()),
            None => json!("not_in_family"),
        };
    }
    if let Some(depth) = a.gap_depth {
        let (gap, certs) = measure::boundary_gap_with_certificates(&f, height, depth, samples, seed)?;
        record["gap"] = serde_json::to_value(&gap).map_err(usage)?;
        let records: Vec<StoreRecord> = certs.into_iter().map(|c| StoreRecord::new(c, Some(seed))).collect();
        append_store(s, &records)?;
    }
    emit(out, &record)?;
    Ok(Status::Ok)
}

fn verdict_status(v: Verdict) -> Status {
    match v {
        Verdict::ConsistentAtBudget => Status::Ok,
        Verdict::Refuted => Status::Negative,
        Verdict::Inconclusive => Status::Undecided,
    }
}

fn model_check(a: &ModelCheckArgs, s: &Settings, out: &mut dyn Write) -> Result<Status, CliError> {
    let spec: DiophantineModelSpec = toml::from_str(&read_text(&a.spec)?).map_err(usage)?;
    let w = ring(&a.ring)?;
    let height = s.height(a.height, DEFAULT_HEIGHT)?;
    let mut inject = BTreeMap::new();
    for item in &a.inject {
        let (k, tuple) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad --inject {item:?}: expected k=q1,..,qn")))?;
        let k: i64 = k.trim().parse().map_err(|_| CliError::Usage(format!("bad index in {item:?}")))?;
        let qs = tuple
            .split(',')
            .map(|t| serde_text::rational::parse(t).map_err(CliError::Usage))
            .collect::<Result<Vec<_>, _>>()?;
        inject.insert(k, qs);
    }
    let report = definability::check_model(&spec, &w, a.range, height, &inject)?;
    emit(out, &json!({"command": "model-check", "report": report}))?;
    Ok(verdict_status(report.verdict))
}

fn exdef_check(a: &ExdefArgs, s: &Settings, out: &mut dyn Write) -> Result<Status, CliError> {
    let spec = ExistentialDefSpec { g: poly(&a.g)? };
    let w = ring(&a.ring)?;
    let probes = read_rationals(&a.probes)?;
    let height = s.height(a.height, DEFAULT_HEIGHT)?;
    let report = definability::check_existential_def(&spec, &w, &probes, height)?;
    emit(out, &json!({"command": "exdef-check", "report": report}))?;
    Ok(verdict_status(report.verdict))
}

fn store_verify(path: Option<&PathBuf>, out: &mut dyn Write) -> Result<Status, CliError> {
    let path = path.ok_or_else(|| CliError::Usage("store verify needs a path or --store".into()))?;
    let loaded = store::store_load(path)?;
    emit(
        out,
        &json!({
            "command": "store verify",
            "path": path.display().to_string(),
            "records": loaded.records.len(),
            "issues": loaded.audit,
        }),
    )?;
    Ok(if loaded.is_clean() {
        Status::Ok
    } else {
        Status::Negative
    })
}
