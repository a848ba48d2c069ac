//! Activation-cycle backtracking, trace pruning and suspiciousness ranking.

mod sbfl;

use std::cmp::Ordering;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Serialize, Serializer};

pub use sbfl::{baseline_score, spectrum_counts, Formula, SpectrumCounts};

use crate::empc::{compute_empc, Empc, EmpcMap, SweepMode};
use crate::frontend::{StmtId, StmtKindTag};
use crate::pdg::Pdg;
use crate::sim::{elaborate, Stimulus};
use crate::trace::{first_fail_cycle, CycleResults, ExecutionTrace};
use crate::{Analysis, Error, StmtSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Pecker,
    /// Activation cycle fixed to the observation cycle.
    PeckerNoAl,
    /// No pruning: every cycle except the activation cycle counts in `aep`.
    PeckerNoNtp,
    Tarantula,
    Ochiai,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Pecker,
        Mode::PeckerNoAl,
        Mode::PeckerNoNtp,
        Mode::Tarantula,
        Mode::Ochiai,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pecker => "pecker",
            Mode::PeckerNoAl => "pecker-no-al",
            Mode::PeckerNoNtp => "pecker-no-ntp",
            Mode::Tarantula => "tarantula",
            Mode::Ochiai => "ochiai",
        }
    }

    fn formula(self) -> Option<Formula> {
        match self {
            Mode::Tarantula => Some(Formula::Tarantula),
            Mode::Ochiai => Some(Formula::Ochiai),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Mode::ALL.iter().map(|m| m.as_str()).collect();
                format!("unknown mode `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// How much of a failing trace after the activation cycle is kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    /// Drop everything after the activation cycle.
    #[default]
    Full,
    /// Keep the first half (rounded up) of the suffix.
    Half,
    /// Keep the whole trace.
    None,
}

impl Truncation {
    pub const ALL: [Truncation; 3] = [Truncation::Full, Truncation::Half, Truncation::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Truncation::Full => "full",
            Truncation::Half => "half",
            Truncation::None => "none",
        }
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Truncation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Truncation::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown truncation `{s}` (expected full, half or none)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exclusion {
    EmpcInfinite,
    NegativeCycle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Cycle(usize),
    Excluded(Exclusion),
}

impl Activation {
    pub fn cycle(self) -> Option<usize> {
        match self {
            Activation::Cycle(c) => Some(c),
            Activation::Excluded(_) => None,
        }
    }
}

/// Activation cycle per statement id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivationMap {
    entries: Vec<Activation>,
}

impl ActivationMap {
    pub fn get(&self, id: StmtId) -> Activation {
        self.entries[id.0]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `C_act = C_obs - EMPC`, excluding infinite or negative results.
pub fn activation_cycle(pdg: &Pdg, empc: &EmpcMap, c_obs: usize) -> ActivationMap {
    let entries = (0..pdg.stmt_count())
        .map(|i| match empc.stmt(pdg, StmtId(i)) {
            Empc::Infinite => Activation::Excluded(Exclusion::EmpcInfinite),
            Empc::Finite(e) => match c_obs.checked_sub(e as usize) {
                Some(c) => Activation::Cycle(c),
                None => Activation::Excluded(Exclusion::NegativeCycle),
            },
        })
        .collect();
    ActivationMap { entries }
}

/// Cycles `[0, c_act]`. Panics if `c_act` is past the end of the trace.
pub fn prune_trace(trace: &ExecutionTrace, c_act: usize) -> &[StmtSet] {
    &trace.cycles()[..=c_act]
}

/// Cycle range of a failing trace of `len` cycles retained for a statement
/// activated at `c_act`.
pub fn retained_cycles(c_act: usize, len: usize, truncation: Truncation) -> Range<usize> {
    assert!(
        c_act < len,
        "activation cycle {c_act} outside a {len}-cycle trace"
    );
    let last = len - 1;
    match truncation {
        Truncation::Full => 0..c_act + 1,
        Truncation::Half => 0..c_act + (last - c_act).div_ceil(2) + 1,
        Truncation::None => 0..len,
    }
}

/// `(aef, 1/aep)`. Ordered so that greater means more suspicious.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SuspicionScore {
    pub aef: u32,
    pub aep: u32,
}

impl SuspicionScore {
    pub fn inv_aep(self) -> InvAep {
        match self.aep {
            0 => InvAep::Infinite,
            n => InvAep::Finite(1.0 / n as f64),
        }
    }
}

impl Ord for SuspicionScore {
    fn cmp(&self, other: &Self) -> Ordering {
        // 1/aep descends as aep ascends, with aep = 0 on top.
        let inv = |aep: u32| {
            if aep == 0 {
                u32::MAX as u64 + 1
            } else {
                u32::MAX as u64 - aep as u64
            }
        };
        self.aef
            .cmp(&other.aef)
            .then(inv(self.aep).cmp(&inv(other.aep)))
    }
}

impl PartialOrd for SuspicionScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InvAep {
    Finite(f64),
    Infinite,
}

impl fmt::Display for InvAep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvAep::Finite(v) => write!(f, "{v:.3}"),
            InvAep::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for InvAep {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            InvAep::Finite(v) => s.serialize_f64(*v),
            InvAep::Infinite => s.serialize_str("inf"),
        }
    }
}

/// One failing run and the activation cycles derived from it.
#[derive(Clone, Copy, Debug)]
pub struct FailingRun<'a> {
    pub trace: &'a ExecutionTrace,
    pub activation: &'a ActivationMap,
}

/// Scores `stmt` over failing runs (each cut at the statement's activation
/// cycle) and passing runs (counted whole). Runs in which the statement is
/// excluded contribute nothing.
pub fn dual_score(
    stmt: StmtId,
    failing: &[FailingRun<'_>],
    passing: &[&ExecutionTrace],
    truncation: Truncation,
) -> SuspicionScore {
    let mut score = SuspicionScore { aef: 0, aep: 0 };
    for run in failing {
        let Some(c_act) = run.activation.get(stmt).cycle() else {
            continue;
        };
        if run.trace.executed(c_act, stmt) {
            score.aef += 1;
        }
        let window = retained_cycles(c_act, run.trace.len(), truncation);
        score.aep += window
            .filter(|&c| c != c_act && run.trace.executed(c, stmt))
            .count() as u32;
    }
    for t in passing {
        score.aep += t.cycles().iter().filter(|c| c.contains(stmt)).count() as u32;
    }
    score
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub stmt: StmtId,
    pub score: SuspicionScore,
    pub empc: Empc,
}

/// Candidates with `aef > 0` by score, then lower EMPC, then id; every other
/// statement afterwards by `fallback[id]` descending, then id.
pub fn rank_statements(candidates: &[Candidate], fallback: &[f64]) -> Vec<StmtId> {
    let mut top: Vec<&Candidate> = candidates.iter().filter(|c| c.score.aef > 0).collect();
    top.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then(a.empc.cmp(&b.empc))
            .then(a.stmt.cmp(&b.stmt))
    });
    let mut order: Vec<StmtId> = top.iter().map(|c| c.stmt).collect();
    let mut rest: Vec<StmtId> = (0..fallback.len())
        .map(StmtId)
        .filter(|s| !order.contains(s))
        .collect();
    rest.sort_by(|a, b| fallback[b.0].total_cmp(&fallback[a.0]).then(a.cmp(b)));
    order.extend(rest);
    order
}

fn rank_by_formula(scores: &[f64]) -> Vec<StmtId> {
    let mut order: Vec<StmtId> = (0..scores.len()).map(StmtId).collect();
    order.sort_by(|a, b| scores[b.0].total_cmp(&scores[a.0]).then(a.cmp(b)));
    order
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LocalizeOptions {
    pub mode: Mode,
    pub truncation: Truncation,
    pub sweep: SweepMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub stmt_id: StmtId,
    pub location: String,
    pub kind: StmtKindTag,
    /// `false` when the statement was appended after the candidate set.
    pub candidate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aef: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aep: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inv_aep: Option<InvAep>,
    /// Formula score: the ranking key in formula modes, the fallback key for
    /// appended statements otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_act: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empc: Option<Empc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excluded: Option<Exclusion>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedList {
    pub mode: Mode,
    pub truncation: Truncation,
    pub first_fail: usize,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    /// 1-based rank of `stmt`.
    pub fn rank_of(&self, stmt: StmtId) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.stmt_id == stmt)
            .map(|e| e.rank)
    }

    pub fn entry(&self, stmt: StmtId) -> Option<&RankedEntry> {
        self.entries.iter().find(|e| e.stmt_id == stmt)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ranked list serializes");
        s.push('\n');
        s
    }
}

/// Simulates `stim` and localizes over the resulting trace.
pub fn localize(
    analysis: &Analysis,
    stim: &Stimulus,
    opts: &LocalizeOptions,
) -> Result<RankedList, Error> {
    let (trace, results) = elaborate(&analysis.design, &analysis.classes)?.run(stim)?;
    localize_trace(analysis, &trace, &results, opts)
}

pub fn localize_trace(
    analysis: &Analysis,
    trace: &ExecutionTrace,
    results: &CycleResults,
    opts: &LocalizeOptions,
) -> Result<RankedList, Error> {
    let n = analysis.stmts.len();
    if trace.stmt_count() != n {
        return Err(Error::TraceMismatch {
            trace: trace.stmt_count(),
            design: n,
        });
    }
    let c_obs = first_fail_cycle(results).ok_or(Error::NoFailure)?;
    let counts = spectrum_counts(trace, results);
    let entry = |stmt: StmtId| {
        let e = analysis
            .stmts
            .get(stmt)
            .expect("ids come from the statement table");
        (format!("{}:{}", analysis.file, e.line()), e.kind)
    };

    if let Some(formula) = opts.mode.formula() {
        let scores: Vec<f64> = counts.iter().map(|&c| baseline_score(c, formula)).collect();
        let entries = rank_by_formula(&scores)
            .into_iter()
            .enumerate()
            .map(|(i, stmt)| {
                let (location, kind) = entry(stmt);
                RankedEntry {
                    rank: i + 1,
                    stmt_id: stmt,
                    location,
                    kind,
                    candidate: true,
                    aef: None,
                    aep: None,
                    inv_aep: None,
                    score: Some(scores[stmt.0]),
                    c_act: None,
                    empc: None,
                    excluded: None,
                }
            })
            .collect();
        return Ok(RankedList {
            mode: opts.mode,
            truncation: opts.truncation,
            first_fail: c_obs,
            entries,
        });
    }

    let empc = compute_empc(&analysis.pdg, trace, results, opts.sweep)?;
    let mut activation = activation_cycle(&analysis.pdg, &empc, c_obs);
    if opts.mode == Mode::PeckerNoAl {
        for a in &mut activation.entries {
            if let Activation::Cycle(c) = a {
                *c = c_obs;
            }
        }
    }
    let truncation = if opts.mode == Mode::PeckerNoNtp {
        Truncation::None
    } else {
        opts.truncation
    };
    let run = FailingRun {
        trace,
        activation: &activation,
    };
    let candidates: Vec<Candidate> = (0..n)
        .map(StmtId)
        .filter(|&s| activation.get(s).cycle().is_some())
        .map(|s| Candidate {
            stmt: s,
            score: dual_score(s, &[run], &[], truncation),
            empc: empc.stmt(&analysis.pdg, s),
        })
        .collect();
    let fallback: Vec<f64> = counts
        .iter()
        .map(|&c| baseline_score(c, Formula::Ochiai))
        .collect();
    let entries = rank_statements(&candidates, &fallback)
        .into_iter()
        .enumerate()
        .map(|(i, stmt)| {
            let (location, kind) = entry(stmt);
            let cand = candidates.iter().find(|c| c.stmt == stmt);
            let ranked = cand.is_some_and(|c| c.score.aef > 0);
            let act = activation.get(stmt);
            RankedEntry {
                rank: i + 1,
                stmt_id: stmt,
                location,
                kind,
                candidate: ranked,
                aef: cand.map(|c| c.score.aef),
                aep: cand.map(|c| c.score.aep),
                inv_aep: cand.map(|c| c.score.inv_aep()),
                score: (!ranked).then_some(fallback[stmt.0]),
                c_act: act.cycle(),
                empc: Some(empc.stmt(&analysis.pdg, stmt)),
                excluded: match act {
                    Activation::Excluded(r) => Some(r),
                    Activation::Cycle(_) => None,
                },
            }
        })
        .collect();
    Ok(RankedList {
        mode: opts.mode,
        truncation,
        first_fail: c_obs,
        entries,
    })
}
