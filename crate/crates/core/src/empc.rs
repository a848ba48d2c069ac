//! Estimated minimal propagation cycles.
//!
//! Every output node starts at 0 and every other node at infinity. Sweeping
//! the trace backwards from the first failing cycle, each sweep relaxes
//! `pred -> head` data edges with `delay(head) + empc(head)`, where a
//! statement may only be relaxed in a cycle that executed it and signals are
//! always eligible.

use std::collections::VecDeque;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::frontend::StmtId;
use crate::pdg::{NodeId, NodeKind, Pdg};
use crate::trace::{first_fail_cycle, CycleResults, ExecutionTrace};
use crate::StmtSet;

/// A cycle count or infinity. `Finite(_) < Infinite`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Empc {
    Finite(u32),
    Infinite,
}

impl Empc {
    pub fn finite(self) -> Option<u32> {
        match self {
            Empc::Finite(v) => Some(v),
            Empc::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Empc::Finite(_))
    }
}

impl fmt::Display for Empc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Empc::Finite(v) => write!(f, "{v}"),
            Empc::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Empc {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Empc::Finite(v) => s.serialize_u32(*v),
            Empc::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpcMap {
    values: Vec<Empc>,
}

impl EmpcMap {
    /// Outputs at 0, everything else infinite.
    pub fn initial(pdg: &Pdg) -> Self {
        let mut values = vec![Empc::Infinite; pdg.nodes().len()];
        for &o in pdg.outputs() {
            values[o.0] = Empc::Finite(0);
        }
        Self { values }
    }

    /// Map with explicit per-node values, indexed by node id.
    pub fn from_values(values: Vec<Empc>) -> Self {
        Self { values }
    }

    pub fn get(&self, node: NodeId) -> Empc {
        self.values[node.0]
    }

    pub fn values(&self) -> &[Empc] {
        &self.values
    }

    /// Value for a statement; infinite if the statement has no node.
    pub fn stmt(&self, pdg: &Pdg, id: StmtId) -> Empc {
        pdg.stmt_node(id).map_or(Empc::Infinite, |n| self.get(n))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SweepMode {
    /// One backward pass over the failing prefix.
    #[default]
    Single,
    /// Repeat backward passes until nothing changes.
    Fixpoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmpcError {
    #[error("no failing cycle in the results")]
    NoFailure,
    #[error("trace covers {trace} statements but the graph has {graph}")]
    StmtCountMismatch { trace: usize, graph: usize },
    #[error("trace has {trace} cycles but results have {results}")]
    LengthMismatch { trace: usize, results: usize },
}

fn eligible(pdg: &Pdg, node: NodeId, activated: &StmtSet) -> bool {
    match pdg.node(node).kind {
        NodeKind::Statement(s) => activated.contains(s),
        NodeKind::Signal { .. } => true,
    }
}

/// Relaxes `map` to a local fixed point for one cycle's activation. Every
/// node that currently has a finite value seeds the worklist. Returns
/// whether any value changed.
pub fn dynamic_prop(pdg: &Pdg, activated: &StmtSet, map: &mut EmpcMap) -> bool {
    let n = pdg.nodes().len();
    let mut queued = vec![false; n];
    let mut work = VecDeque::new();
    for (i, v) in map.values.iter().enumerate() {
        if v.is_finite() {
            queued[i] = true;
            work.push_back(NodeId(i));
        }
    }
    let mut changed = false;
    while let Some(head) = work.pop_front() {
        queued[head.0] = false;
        let Empc::Finite(h) = map.values[head.0] else {
            continue;
        };
        let candidate = Empc::Finite(h + pdg.node(head).delay);
        for &pred in pdg.data_preds(head) {
            if eligible(pdg, pred, activated) && candidate < map.values[pred.0] {
                map.values[pred.0] = candidate;
                changed = true;
                if !queued[pred.0] {
                    queued[pred.0] = true;
                    work.push_back(pred);
                }
            }
        }
    }
    changed
}

pub fn compute_empc(
    pdg: &Pdg,
    trace: &ExecutionTrace,
    results: &CycleResults,
    mode: SweepMode,
) -> Result<EmpcMap, EmpcError> {
    if trace.stmt_count() != pdg.stmt_count() {
        return Err(EmpcError::StmtCountMismatch {
            trace: trace.stmt_count(),
            graph: pdg.stmt_count(),
        });
    }
    if trace.len() != results.len() {
        return Err(EmpcError::LengthMismatch {
            trace: trace.len(),
            results: results.len(),
        });
    }
    let fail = first_fail_cycle(results).ok_or(EmpcError::NoFailure)?;
    let mut map = EmpcMap::initial(pdg);
    loop {
        let mut changed = false;
        for cycle in (0..=fail).rev() {
            changed |= dynamic_prop(pdg, trace.cycle(cycle), &mut map);
        }
        if mode == SweepMode::Single || !changed {
            return Ok(map);
        }
    }
}
