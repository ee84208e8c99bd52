//! Append-only certificate log: one JSON object per line. Loading
//! re-validates every record and keeps going past bad lines, collecting an
//! audit report with line numbers.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::CylinderCertificate;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("cannot serialise record: {0}")]
    Encode(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreRecord {
    #[serde(flatten)]
    pub certificate: CylinderCertificate,
    /// Seconds since the Unix epoch at append time.
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl StoreRecord {
    pub fn new(certificate: CylinderCertificate, seed: Option<u64>) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        StoreRecord {
            certificate,
            timestamp,
            seed,
        }
    }

    pub fn kind(&self) -> &'static str {
        if self.certificate.is_positive() {
            "positive"
        } else {
            "negative"
        }
    }
}

/// Appends records, one line each, creating the file if needed.
pub fn store_append(path: &Path, records: &[StoreRecord]) -> Result<(), StoreError> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    file.write_all(text.as_bytes()).map_err(io_err(path))?;
    file.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditIssue {
    /// One-based line number.
    pub line: usize,
    pub problem: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CertificateStore {
    /// Valid records with their line numbers.
    pub records: Vec<(usize, StoreRecord)>,
    pub audit: Vec<AuditIssue>,
}

impl CertificateStore {
    pub fn is_clean(&self) -> bool {
        self.audit.is_empty()
    }

    /// Record positions grouped by (polynomial text, kind).
    pub fn index(&self) -> BTreeMap<(String, &'static str), Vec<usize>> {
        let mut out: BTreeMap<_, Vec<usize>> = BTreeMap::new();
        for (i, (_, r)) in self.records.iter().enumerate() {
            out.entry((r.certificate.target.to_string(), r.kind())).or_default().push(i);
        }
        out
    }

    /// Line pairs where one polynomial carries a positive and a negative
    /// certificate on overlapping cylinders.
    pub fn conflicts(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (la, a) in &self.records {
            if !a.certificate.is_positive() {
                continue;
            }
            for (lb, b) in &self.records {
                if b.certificate.is_positive() || a.certificate.target != b.certificate.target {
                    continue;
                }
                let (x, y) = (&a.certificate.condition, &b.certificate.condition);
                if x.is_prefix_of(y) || y.is_prefix_of(x) {
                    out.push((*la, *lb));
                }
            }
        }
        out
    }
}

/// Reads and re-validates a store. Unparsable or invalid lines go to the
/// audit list; a missing file is an error, an empty one an empty store.
pub fn store_load(path: &Path) -> Result<CertificateStore, StoreError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut store = CertificateStore::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: StoreRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                store.audit.push(AuditIssue {
                    line: n,
                    problem: format!("unreadable record: {e}"),
                });
                continue;
            }
        };
        match record.certificate.revalidate() {
            Ok(true) => store.records.push((n, record)),
            Ok(false) => store.audit.push(AuditIssue {
                line: n,
                problem: "certificate failed re-validation".into(),
            }),
            Err(e) => store.audit.push(AuditIssue {
                line: n,
                problem: format!("re-validation error: {e}"),
            }),
        }
    }
    for (a, b) in store.conflicts() {
        store.audit.push(AuditIssue {
            line: a.max(b),
            problem: format!("lines {a} and {b} certify overlapping cylinders both ways"),
        });
    }
    Ok(store)
}
