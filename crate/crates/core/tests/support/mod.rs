//! Random dependency graphs and a path-enumerating EMPC oracle.
#![allow(dead_code)]

use pecker_core::empc::Empc;
use pecker_core::frontend::StmtId;
use pecker_core::pdg::{EdgeKind, NodeId, NodeKind, Pdg, SignalClass};
use pecker_core::trace::{CycleResults, ExecutionTrace, Verdict};
use pecker_core::StmtSet;
use rand::Rng;

pub struct Case {
    pub pdg: Pdg,
    pub trace: ExecutionTrace,
    pub results: CycleResults,
    pub fail: usize,
}

pub fn random_case(rng: &mut impl Rng, max_nodes: usize, max_cycles: usize) -> Case {
    let n = rng.gen_range(2..=max_nodes);
    let mut pdg = Pdg::default();
    let mut stmts = 0;
    for i in 0..n {
        let kind = if rng.gen_bool(0.5) {
            stmts += 1;
            NodeKind::Statement(StmtId(stmts - 1))
        } else {
            let class = match rng.gen_range(0..5) {
                0 => SignalClass::Input,
                1 => SignalClass::Combinational,
                2 => SignalClass::Register,
                3 => SignalClass::Output { registered: false },
                _ => SignalClass::Output { registered: true },
            };
            NodeKind::Signal {
                name: format!("n{i}"),
                class,
            }
        };
        pdg.add_node(kind);
    }
    for _ in 0..rng.gen_range(0..=2 * n) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let kind = if rng.gen_bool(0.85) {
            EdgeKind::Data
        } else {
            EdgeKind::Control
        };
        pdg.add_edge(NodeId(a), NodeId(b), kind);
    }

    let cycles = rng.gen_range(1..=max_cycles);
    let fail = rng.gen_range(0..cycles);
    let mut trace = ExecutionTrace::new(stmts);
    let mut verdicts = Vec::new();
    for c in 0..cycles {
        let p = rng.gen_range(0.0..1.0);
        trace.push(StmtSet::from_ids(
            stmts,
            (0..stmts).filter(|_| rng.gen_bool(p)).map(StmtId),
        ));
        verdicts.push(if c == fail || (c > fail && rng.gen_bool(0.5)) {
            Verdict::Fail
        } else {
            Verdict::Pass
        });
    }
    Case {
        pdg,
        trace,
        results: CycleResults::new(verdicts),
        fail,
    }
}

/// Minimum, over simple data-edge paths from each node to an output, of the
/// delays of every node after the first. Statement nodes on the path need an
/// executed cycle in `[0, fail]`; unless `fixpoint`, those cycles must also be
/// non-decreasing along the path.
pub fn oracle(pdg: &Pdg, trace: &ExecutionTrace, fail: usize, fixpoint: bool) -> Vec<Empc> {
    let n = pdg.nodes().len();
    let mut succ = vec![Vec::new(); n];
    for e in pdg.edges().filter(|e| e.kind == EdgeKind::Data) {
        succ[e.from.0].push(e.to.0);
    }
    let outputs: Vec<bool> = (0..n).map(|i| pdg.outputs().contains(&NodeId(i))).collect();
    let runs: Vec<Vec<usize>> = (0..n)
        .map(|i| match pdg.node(NodeId(i)).kind {
            NodeKind::Statement(s) => (0..=fail).filter(|&c| trace.cycle(c).contains(s)).collect(),
            NodeKind::Signal { .. } => Vec::new(),
        })
        .collect();

    struct Search<'a> {
        pdg: &'a Pdg,
        succ: &'a [Vec<usize>],
        outputs: &'a [bool],
        runs: &'a [Vec<usize>],
        fixpoint: bool,
        visited: Vec<bool>,
        best: Option<u32>,
    }

    impl Search<'_> {
        /// Label for entering `v` given the previous statement label, or
        /// `None` if `v` cannot be placed.
        fn place(&self, v: usize, prev: usize) -> Option<usize> {
            match self.pdg.node(NodeId(v)).kind {
                NodeKind::Signal { .. } => Some(prev),
                NodeKind::Statement(_) if self.fixpoint => {
                    (!self.runs[v].is_empty()).then_some(prev)
                }
                NodeKind::Statement(_) => self.runs[v].iter().copied().find(|&c| c >= prev),
            }
        }

        fn dfs(&mut self, v: usize, label: usize, cost: u32) {
            if self.best.is_some_and(|b| cost >= b) {
                return;
            }
            if self.outputs[v] {
                self.best = Some(cost);
                return;
            }
            for i in 0..self.succ[v].len() {
                let w = self.succ[v][i];
                if self.visited[w] {
                    continue;
                }
                let Some(l) = self.place(w, label) else {
                    continue;
                };
                self.visited[w] = true;
                self.dfs(w, l, cost + self.pdg.node(NodeId(w)).delay);
                self.visited[w] = false;
            }
        }
    }

    (0..n)
        .map(|start| {
            let mut s = Search {
                pdg,
                succ: &succ,
                outputs: &outputs,
                runs: &runs,
                fixpoint,
                visited: vec![false; n],
                best: None,
            };
            if let Some(l) = s.place(start, 0) {
                s.visited[start] = true;
                s.dfs(start, l, 0);
            }
            s.best.map_or(Empc::Infinite, Empc::Finite)
        })
        .collect()
}

/// One pruning-safety trial: score every statement, rewrite every cycle
/// after its activation cycle at random, and require an identical score.
/// Returns the number of statements checked.
pub fn pruning_trial(rng: &mut impl Rng) -> Result<usize, String> {
    use pecker_core::empc::{compute_empc, SweepMode};
    use pecker_core::localize::{activation_cycle, dual_score, FailingRun, Truncation};

    let case = random_case(rng, 30, 10);
    let empc = compute_empc(&case.pdg, &case.trace, &case.results, SweepMode::Single).unwrap();
    let act = activation_cycle(&case.pdg, &empc, case.fail);
    let n = case.trace.stmt_count();
    let mut checked = 0;
    for s in (0..n).map(StmtId) {
        let Some(c) = act.get(s).cycle() else {
            continue;
        };
        let run = FailingRun {
            trace: &case.trace,
            activation: &act,
        };
        let before = dual_score(s, &[run], &[], Truncation::Full);
        let mut mutated = case.trace.clone();
        for cycle in mutated.cycles_mut().iter_mut().skip(c + 1) {
            *cycle = StmtSet::from_ids(n, (0..n).filter(|_| rng.gen_bool(0.5)).map(StmtId));
        }
        let run = FailingRun {
            trace: &mutated,
            activation: &act,
        };
        let after = dual_score(s, &[run], &[], Truncation::Full);
        if before != after {
            return Err(format!(
                "{s}: {before:?} became {after:?} after rewriting cycles past {c}"
            ));
        }
        checked += 1;
    }
    Ok(checked)
}
