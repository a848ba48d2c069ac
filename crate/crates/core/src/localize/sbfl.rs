//! Classic spectrum formulas over per-cycle spectra (each cycle is a test).

use crate::trace::{CycleResults, ExecutionTrace, Verdict};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SpectrumCounts {
    pub ef: u32,
    pub ep: u32,
    pub nf: u32,
    pub np: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Tarantula,
    Ochiai,
}

/// Counts per statement id over every cycle of the trace.
pub fn spectrum_counts(trace: &ExecutionTrace, results: &CycleResults) -> Vec<SpectrumCounts> {
    let mut counts = vec![SpectrumCounts::default(); trace.stmt_count()];
    for (set, verdict) in trace.cycles().iter().zip(results.verdicts()) {
        for (i, c) in counts.iter_mut().enumerate() {
            let hit = set.contains(crate::frontend::StmtId(i));
            match (verdict, hit) {
                (Verdict::Fail, true) => c.ef += 1,
                (Verdict::Fail, false) => c.nf += 1,
                (Verdict::Pass, true) => c.ep += 1,
                (Verdict::Pass, false) => c.np += 1,
            }
        }
    }
    counts
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn baseline_score(c: SpectrumCounts, formula: Formula) -> f64 {
    let (ef, ep) = (c.ef as f64, c.ep as f64);
    let f = (c.ef + c.nf) as f64;
    match formula {
        Formula::Tarantula => {
            let fail_ratio = ratio(ef, f);
            let pass_ratio = ratio(ep, (c.ep + c.np) as f64);
            ratio(fail_ratio, fail_ratio + pass_ratio)
        }
        Formula::Ochiai => ratio(ef, (f * (ef + ep)).sqrt()),
    }
}
