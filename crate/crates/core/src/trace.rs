//! Per-cycle statement spectra and verdicts, plus their JSON-lines form.
//!
//! File layout: a mandatory header line `{"stmt_count":N}` followed by one
//! object per cycle, `{"cycle":i,"executed":[ids...],"pass":bool}`, with
//! cycles contiguous from 0.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::StmtId;
use crate::StmtSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionTrace {
    stmt_count: usize,
    cycles: Vec<StmtSet>,
}

impl ExecutionTrace {
    pub fn new(stmt_count: usize) -> Self {
        Self {
            stmt_count,
            cycles: Vec::new(),
        }
    }

    pub fn push(&mut self, executed: StmtSet) {
        assert_eq!(
            executed.universe(),
            self.stmt_count,
            "cycle set over a different statement table"
        );
        self.cycles.push(executed);
    }

    pub fn stmt_count(&self) -> usize {
        self.stmt_count
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn cycle(&self, idx: usize) -> &StmtSet {
        &self.cycles[idx]
    }

    pub fn cycles(&self) -> &[StmtSet] {
        &self.cycles
    }

    pub fn cycles_mut(&mut self) -> &mut [StmtSet] {
        &mut self.cycles
    }

    pub fn executed(&self, cycle: usize, stmt: StmtId) -> bool {
        self.cycles.get(cycle).is_some_and(|c| c.contains(stmt))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CycleResults {
    verdicts: Vec<Verdict>,
}

impl CycleResults {
    pub fn new(verdicts: Vec<Verdict>) -> Self {
        Self { verdicts }
    }

    pub fn push(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn len(&self) -> usize {
        self.verdicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn get(&self, cycle: usize) -> Option<Verdict> {
        self.verdicts.get(cycle).copied()
    }

    pub fn fail_count(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| **v == Verdict::Fail)
            .count()
    }
}

/// Smallest cycle index whose verdict is `Fail`.
pub fn first_fail_cycle(results: &CycleResults) -> Option<usize> {
    results.verdicts.iter().position(|v| *v == Verdict::Fail)
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: statement id {id} out of range for stmt_count {stmt_count}")]
    Bounds {
        line: usize,
        id: usize,
        stmt_count: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    stmt_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CycleLine {
    cycle: usize,
    executed: Vec<usize>,
    pass: bool,
}

pub fn write_trace(
    mut w: impl Write,
    trace: &ExecutionTrace,
    results: &CycleResults,
) -> Result<(), TraceError> {
    assert_eq!(
        trace.len(),
        results.len(),
        "trace and results lengths differ"
    );
    serde_json::to_writer(
        &mut w,
        &Header {
            stmt_count: trace.stmt_count,
        },
    )
    .map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    for (i, (set, verdict)) in trace.cycles.iter().zip(&results.verdicts).enumerate() {
        let line = CycleLine {
            cycle: i,
            executed: set.iter().map(|s| s.0).collect(),
            pass: *verdict == Verdict::Pass,
        };
        serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn trace_to_string(trace: &ExecutionTrace, results: &CycleResults) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace, results).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn read_trace(r: impl BufRead) -> Result<(ExecutionTrace, CycleResults), TraceError> {
    let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let (line_no, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => {
            return Err(TraceError::Format {
                line: 1,
                message: "missing header line".into(),
            })
        }
    };
    let header: Header = serde_json::from_str(&header).map_err(|e| TraceError::Format {
        line: line_no,
        message: format!("bad header: {e}"),
    })?;

    let mut trace = ExecutionTrace::new(header.stmt_count);
    let mut results = CycleResults::default();
    for (line_no, line) in lines {
        let line = line?;
        let rec: CycleLine = serde_json::from_str(&line).map_err(|e| TraceError::Format {
            line: line_no,
            message: e.to_string(),
        })?;
        if rec.cycle != trace.len() {
            return Err(TraceError::Format {
                line: line_no,
                message: format!("expected cycle {}, found {}", trace.len(), rec.cycle),
            });
        }
        let mut set = StmtSet::new(header.stmt_count);
        for id in rec.executed {
            if id >= header.stmt_count {
                return Err(TraceError::Bounds {
                    line: line_no,
                    id,
                    stmt_count: header.stmt_count,
                });
            }
            set.insert(StmtId(id));
        }
        trace.push(set);
        results.push(if rec.pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        });
    }
    Ok((trace, results))
}

pub fn trace_from_str(s: &str) -> Result<(ExecutionTrace, CycleResults), TraceError> {
    read_trace(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_fail() {
        use Verdict::*;
        assert_eq!(
            first_fail_cycle(&CycleResults::new(vec![Pass, Pass, Fail])),
            Some(2)
        );
        assert_eq!(
            first_fail_cycle(&CycleResults::new(vec![Fail, Pass])),
            Some(0)
        );
        assert_eq!(first_fail_cycle(&CycleResults::new(vec![Pass, Pass])), None);
        assert_eq!(first_fail_cycle(&CycleResults::default()), None);
    }

    #[test]
    fn empty_trace_is_header_only() {
        let s = trace_to_string(&ExecutionTrace::new(6), &CycleResults::default());
        assert_eq!(s, "{\"stmt_count\":6}\n");
        let (t, r) = trace_from_str(&s).unwrap();
        assert_eq!((t.len(), t.stmt_count(), r.len()), (0, 6, 0));
    }

    #[test]
    fn bounds_error() {
        let err =
            trace_from_str("{\"stmt_count\":6}\n{\"cycle\":0,\"executed\":[9],\"pass\":true}\n")
                .unwrap_err();
        assert!(matches!(
            err,
            TraceError::Bounds {
                line: 2,
                id: 9,
                stmt_count: 6
            }
        ));
    }

    #[test]
    fn format_errors_carry_line_numbers() {
        let missing = trace_from_str("").unwrap_err();
        assert!(matches!(missing, TraceError::Format { line: 1, .. }));
        let gap =
            trace_from_str("{\"stmt_count\":2}\n{\"cycle\":1,\"executed\":[],\"pass\":true}\n")
                .unwrap_err();
        assert!(matches!(gap, TraceError::Format { line: 2, .. }));
        let junk = trace_from_str(
            "{\"stmt_count\":2}\n{\"cycle\":0,\"executed\":[0],\"pass\":true}\nnope\n",
        )
        .unwrap_err();
        assert!(matches!(junk, TraceError::Format { line: 3, .. }));
    }

    fn arb_trace() -> impl Strategy<Value = (ExecutionTrace, CycleResults)> {
        (1usize..40).prop_flat_map(|n| {
            proptest::collection::vec(
                (proptest::collection::btree_set(0..n, 0..n), any::<bool>()),
                0..12,
            )
            .prop_map(move |cycles| {
                let mut t = ExecutionTrace::new(n);
                let mut r = CycleResults::default();
                for (set, pass) in cycles {
                    t.push(StmtSet::from_ids(n, set.into_iter().map(StmtId)));
                    r.push(if pass { Verdict::Pass } else { Verdict::Fail });
                }
                (t, r)
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip((trace, results) in arb_trace()) {
            let text = trace_to_string(&trace, &results);
            let (t2, r2) = trace_from_str(&text).unwrap();
            prop_assert_eq!(&t2, &trace);
            prop_assert_eq!(&r2, &results);
            prop_assert_eq!(trace_to_string(&t2, &r2), text);
        }
    }
}
