//! Seeded-bug corpus runner and ranking metrics.

mod manifest;
pub mod seed;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use manifest::{
    prepare, true_activation_cycle, Category, Manifest, ManifestEntry, PreparedBug,
};

use crate::empc::SweepMode;
use crate::localize::{localize, LocalizeOptions, Mode, Truncation};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("the corpus is empty")]
    EmptyCorpus,
    #[error("{path}: {message}")]
    Manifest { path: String, message: String },
    #[error("entry `{id}`: {message}")]
    InvalidEntry { id: String, message: String },
    #[error(transparent)]
    Core(#[from] crate::Error),
}

impl From<crate::sim::SimError> for BenchError {
    fn from(e: crate::sim::SimError) -> Self {
        BenchError::Core(e.into())
    }
}

impl From<crate::sim::StimulusError> for BenchError {
    fn from(e: crate::sim::StimulusError) -> Self {
        BenchError::Core(e.into())
    }
}

/// Number of ranks within the top `k`.
pub fn top_k(ranks: &[usize], k: usize) -> usize {
    ranks.iter().filter(|&&r| r <= k).count()
}

/// Mean rank.
pub fn mfr(ranks: &[usize]) -> Result<f64, BenchError> {
    if ranks.is_empty() {
        return Err(BenchError::EmptyCorpus);
    }
    Ok(ranks.iter().sum::<usize>() as f64 / ranks.len() as f64)
}

/// `count / total` as a percentage rounded half up; 0 for an empty total.
pub fn percent(count: usize, total: usize) -> u32 {
    if total == 0 {
        return 0;
    }
    ((200 * count + total) / (2 * total)) as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatchRatio {
    pub matched: usize,
    pub compared: usize,
    /// Entries without a known activation cycle.
    pub skipped: usize,
    pub ratio: f64,
}

/// Fraction of `(truth, estimate)` pairs that agree, skipping pairs with no
/// ground truth. An excluded estimate (`None`) counts as a mismatch.
pub fn empc_match_ratio(pairs: &[(Option<usize>, Option<usize>)]) -> MatchRatio {
    let compared: Vec<_> = pairs
        .iter()
        .filter_map(|(t, e)| t.map(|t| (t, *e)))
        .collect();
    let matched = compared.iter().filter(|(t, e)| Some(*t) == *e).count();
    MatchRatio {
        matched,
        compared: compared.len(),
        skipped: pairs.len() - compared.len(),
        ratio: if compared.is_empty() {
            0.0
        } else {
            matched as f64 / compared.len() as f64
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub bugs: usize,
    pub top1: usize,
    pub top3: usize,
    pub top5: usize,
    pub top1_pct: u32,
    pub top3_pct: u32,
    pub top5_pct: u32,
    pub mfr: Option<f64>,
}

impl Metrics {
    pub fn from_ranks(ranks: &[usize]) -> Self {
        let n = ranks.len();
        let (t1, t3, t5) = (top_k(ranks, 1), top_k(ranks, 3), top_k(ranks, 5));
        Metrics {
            bugs: n,
            top1: t1,
            top3: t3,
            top5: t5,
            top1_pct: percent(t1, n),
            top3_pct: percent(t3, n),
            top5_pct: percent(t5, n),
            mfr: mfr(ranks).ok(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Breakdown {
    pub overall: Metrics,
    pub easy: Metrics,
    pub medium: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: Mode,
    #[serde(flatten)]
    pub metrics: Breakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationSummary {
    pub truncation: Truncation,
    #[serde(flatten)]
    pub metrics: Breakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BugRow {
    pub id: String,
    pub category: Category,
    pub location: String,
    pub stmt_id: usize,
    pub first_fail: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_activation_cycle: Option<usize>,
    /// Estimated activation cycle of the faulty statement under `pecker`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_activation_cycle: Option<usize>,
    pub ranks: BTreeMap<Mode, usize>,
    pub truncation_ranks: BTreeMap<Truncation, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryFailure {
    pub id: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub modes: Vec<ModeSummary>,
    pub truncation: Vec<TruncationSummary>,
    pub empc_match: MatchRatio,
    pub bugs: Vec<BugRow>,
    pub failures: Vec<EntryFailure>,
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub modes: Vec<Mode>,
    pub sweep: SweepMode,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            modes: Mode::ALL.to_vec(),
            sweep: SweepMode::Single,
        }
    }
}

fn run_bug(bug: &PreparedBug, opts: &BenchOptions) -> Result<BugRow, crate::Error> {
    let mut ranks = BTreeMap::new();
    let mut first_fail = 0;
    let mut estimated = None;
    let rank = |list: &crate::localize::RankedList| {
        list.rank_of(bug.bug_stmt)
            .expect("every statement is ranked")
    };
    for &mode in &opts.modes {
        let lopts = LocalizeOptions {
            mode,
            truncation: Truncation::Full,
            sweep: opts.sweep,
        };
        let list = localize(&bug.buggy, &bug.stimulus, &lopts)?;
        first_fail = list.first_fail;
        if mode == Mode::Pecker {
            estimated = list.entry(bug.bug_stmt).and_then(|e| e.c_act);
        }
        ranks.insert(mode, rank(&list));
    }
    let mut truncation_ranks = BTreeMap::new();
    for t in Truncation::ALL {
        let lopts = LocalizeOptions {
            mode: Mode::Pecker,
            truncation: t,
            sweep: opts.sweep,
        };
        let list = localize(&bug.buggy, &bug.stimulus, &lopts)?;
        first_fail = list.first_fail;
        if t == Truncation::Full {
            estimated = list.entry(bug.bug_stmt).and_then(|e| e.c_act);
        }
        truncation_ranks.insert(t, rank(&list));
    }
    Ok(BugRow {
        id: bug.entry.id.clone(),
        category: bug.entry.category,
        location: format!("{}:{}", bug.buggy.file, bug.entry.line),
        stmt_id: bug.bug_stmt.0,
        first_fail,
        true_activation_cycle: bug.entry.true_activation_cycle,
        estimated_activation_cycle: estimated,
        ranks,
        truncation_ranks,
    })
}

fn breakdown<'a>(rows: &'a [BugRow], rank: impl Fn(&'a BugRow) -> usize) -> Breakdown {
    let ranks = |cat: Option<Category>| -> Vec<usize> {
        rows.iter()
            .filter(|r| cat.is_none_or(|c| r.category == c))
            .map(&rank)
            .collect()
    };
    Breakdown {
        overall: Metrics::from_ranks(&ranks(None)),
        easy: Metrics::from_ranks(&ranks(Some(Category::Easy))),
        medium: Metrics::from_ranks(&ranks(Some(Category::Medium))),
    }
}

/// Validates every entry, then localizes each bug under every mode. Entry
/// validation failures abort; localization failures are recorded.
pub fn run_corpus(manifest: &Manifest, opts: &BenchOptions) -> Result<BenchReport, BenchError> {
    if manifest.entries.is_empty() {
        return Err(BenchError::EmptyCorpus);
    }
    let prepared: Vec<PreparedBug> = manifest
        .entries
        .par_iter()
        .map(|e| prepare(manifest, e))
        .collect::<Result<_, _>>()?;
    let outcomes: Vec<Result<BugRow, crate::Error>> =
        prepared.par_iter().map(|b| run_bug(b, opts)).collect();

    let mut bugs = Vec::new();
    let mut failures = Vec::new();
    for (bug, outcome) in prepared.iter().zip(outcomes) {
        match outcome {
            Ok(row) => bugs.push(row),
            Err(e) => failures.push(EntryFailure {
                id: bug.entry.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    let modes = opts
        .modes
        .iter()
        .map(|&mode| ModeSummary {
            mode,
            metrics: breakdown(&bugs, |r| r.ranks[&mode]),
        })
        .collect();
    let truncation = Truncation::ALL
        .iter()
        .map(|&t| TruncationSummary {
            truncation: t,
            metrics: breakdown(&bugs, |r| r.truncation_ranks[&t]),
        })
        .collect();
    let pairs: Vec<_> = bugs
        .iter()
        .map(|r| (r.true_activation_cycle, r.estimated_activation_cycle))
        .collect();
    Ok(BenchReport {
        modes,
        truncation,
        empc_match: empc_match_ratio(&pairs),
        bugs,
        failures,
    })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary(&self, mode: Mode) -> Option<&Breakdown> {
        self.modes
            .iter()
            .find(|m| m.mode == mode)
            .map(|m| &m.metrics)
    }

    pub fn truncation_summary(&self, t: Truncation) -> Option<&Breakdown> {
        self.truncation
            .iter()
            .find(|s| s.truncation == t)
            .map(|s| &s.metrics)
    }

    /// Plain-text tables for the terminal.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let cell = |m: &Metrics| {
            let mfr = m.mfr.map_or("-".to_string(), |v| format!("{v:.2}"));
            format!(
                "{:>3} ({:>3}%) {:>3} ({:>3}%) {:>3} ({:>3}%) {:>6}",
                m.top1, m.top1_pct, m.top3, m.top3_pct, m.top5, m.top5_pct, mfr
            )
        };
        let header = format!(
            "{:<15} {:<8} {:>10} {:>10} {:>10} {:>6}",
            "", "subset", "top-1", "top-3", "top-5", "MFR"
        );
        let mut section = |title: &str, rows: Vec<(String, &Breakdown)>| {
            writeln!(out, "{title}").unwrap();
            writeln!(out, "{header}").unwrap();
            for (name, b) in rows {
                for (subset, m) in [
                    ("overall", &b.overall),
                    ("easy", &b.easy),
                    ("medium", &b.medium),
                ] {
                    writeln!(out, "{name:<15} {subset:<8} {}", cell(m)).unwrap();
                }
            }
            writeln!(out).unwrap();
        };
        section(
            "Localization by mode",
            self.modes
                .iter()
                .map(|m| (m.mode.to_string(), &m.metrics))
                .collect(),
        );
        section(
            "Trace truncation (pecker)",
            self.truncation
                .iter()
                .map(|t| (t.truncation.to_string(), &t.metrics))
                .collect(),
        );

        writeln!(out, "Per-bug ranks").unwrap();
        let names: Vec<String> = self.modes.iter().map(|m| m.mode.to_string()).collect();
        write!(
            out,
            "{:<20} {:<7} {:>4} {:>4} {:>4}",
            "bug", "subset", "fail", "act", "est"
        )
        .unwrap();
        for n in &names {
            write!(out, " {n:>13}").unwrap();
        }
        writeln!(out).unwrap();
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
        for row in &self.bugs {
            write!(
                out,
                "{:<20} {:<7} {:>4} {:>4} {:>4}",
                row.id,
                row.category.to_string(),
                row.first_fail,
                opt(row.true_activation_cycle),
                opt(row.estimated_activation_cycle)
            )
            .unwrap();
            for m in &self.modes {
                write!(out, " {:>13}", row.ranks[&m.mode]).unwrap();
            }
            writeln!(out).unwrap();
        }
        let em = &self.empc_match;
        writeln!(
            out,
            "\nActivation-cycle match: {}/{} ({:.1}%), {} without ground truth",
            em.matched,
            em.compared,
            em.ratio * 100.0,
            em.skipped
        )
        .unwrap();
        for f in &self.failures {
            writeln!(out, "failed: {}: {}", f.id, f.error).unwrap();
        }
        out
    }
}
