//! Hardware program dependency graph.
//!
//! Statements and signals are both nodes. Data edges run from each read
//! signal into a statement and from the statement to the signal it writes;
//! register signals carry a one-cycle delay so that path lengths through the
//! graph count clock boundaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::frontend::ast::{Design, Item, PortDir, Sensitivity, Stmt, StmtKind};
use crate::frontend::{StatementTable, StmtId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignalClass {
    Input,
    /// `registered` outputs are written from an edge-sensitive block.
    Output {
        registered: bool,
    },
    Register,
    Combinational,
}

impl SignalClass {
    /// Clock-boundary delay carried by a signal node of this class.
    pub fn delay(self) -> u32 {
        match self {
            SignalClass::Register | SignalClass::Output { registered: true } => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for SignalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalClass::Input => "input",
            SignalClass::Output { registered: false } => "output",
            SignalClass::Output { registered: true } => "output reg",
            SignalClass::Register => "register",
            SignalClass::Combinational => "comb",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdgError {
    #[error("{line}: `{signal}` is assigned in both clocked and combinational contexts")]
    MixedDriver { signal: String, line: u32 },
    #[error("{line}: `{signal}` has more than one driver")]
    MultiDriver { signal: String, line: u32 },
    #[error("{line}: input `{signal}` cannot be assigned")]
    AssignToInput { signal: String, line: u32 },
}

/// Signal classes in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignalClassMap {
    entries: Vec<(String, SignalClass)>,
}

impl SignalClassMap {
    pub fn get(&self, name: &str) -> Option<SignalClass> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| *c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, SignalClass)> {
        self.entries.iter().map(|(n, c)| (n.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn nested_writes(stmt: &Stmt, out: &mut Vec<(String, u32)>) {
    stmt.walk(&mut |s| {
        if let StmtKind::Assign { lhs, .. } = &s.kind {
            out.push((lhs.name.clone(), s.span.start.line));
        }
    });
}

/// Classifies every declared signal. Ports keep their direction; a non-port
/// is a register iff some edge-sensitive block assigns it.
pub fn classify_signals(design: &Design) -> Result<SignalClassMap, PdgError> {
    // signal -> (item index, clocked?, line)
    let mut drivers: BTreeMap<String, Vec<(usize, bool, u32)>> = BTreeMap::new();
    for (i, item) in design.items.iter().enumerate() {
        let (clocked, writes) = match item {
            Item::ContinuousAssign { lhs, span, .. } => {
                (false, vec![(lhs.name.clone(), span.start.line)])
            }
            Item::Always {
                sensitivity, body, ..
            } => {
                let mut w = Vec::new();
                nested_writes(body, &mut w);
                (matches!(sensitivity, Sensitivity::Edge { .. }), w)
            }
        };
        for (name, line) in writes {
            let d = drivers.entry(name).or_default();
            if !d.iter().any(|(j, _, _)| *j == i) {
                d.push((i, clocked, line));
            }
        }
    }

    let mut entries = Vec::with_capacity(design.signals.len());
    for sig in &design.signals {
        let ds = drivers.get(&sig.name).map(Vec::as_slice).unwrap_or(&[]);
        if let Some(&(_, _, line)) = ds.first() {
            if sig.port == Some(PortDir::Input) {
                return Err(PdgError::AssignToInput {
                    signal: sig.name.clone(),
                    line,
                });
            }
        }
        let clocked = ds.iter().any(|d| d.1);
        if clocked && ds.iter().any(|d| !d.1) {
            let line = ds.iter().map(|d| d.2).max().unwrap_or(0);
            return Err(PdgError::MixedDriver {
                signal: sig.name.clone(),
                line,
            });
        }
        if ds.len() > 1 {
            return Err(PdgError::MultiDriver {
                signal: sig.name.clone(),
                line: ds[1].2,
            });
        }
        let class = match sig.port {
            Some(PortDir::Input) => SignalClass::Input,
            Some(PortDir::Output) => SignalClass::Output {
                registered: clocked,
            },
            None if clocked => SignalClass::Register,
            None => SignalClass::Combinational,
        };
        entries.push((sig.name.clone(), class));
    }
    Ok(SignalClassMap { entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Statement(StmtId),
    Signal { name: String, class: SignalClass },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub delay: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Data,
    Control,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PdgEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pdg {
    nodes: Vec<Node>,
    edges: BTreeSet<PdgEdge>,
    data_preds: Vec<Vec<NodeId>>,
    stmt_nodes: BTreeMap<StmtId, NodeId>,
    signal_nodes: BTreeMap<String, NodeId>,
    outputs: Vec<NodeId>,
}

impl Pdg {
    /// Adds a node; statement delays are always 0 and signal delays follow
    /// their class.
    pub fn add_node(&mut self, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len());
        let delay = match &kind {
            NodeKind::Statement(s) => {
                self.stmt_nodes.insert(*s, id);
                0
            }
            NodeKind::Signal { name, class } => {
                self.signal_nodes.insert(name.clone(), id);
                if matches!(class, SignalClass::Output { .. }) {
                    self.outputs.push(id);
                }
                class.delay()
            }
        };
        self.nodes.push(Node { kind, delay });
        self.data_preds.push(Vec::new());
        id
    }

    pub fn add_edge(&mut self, from: NodeId, to: NodeId, kind: EdgeKind) {
        if self.edges.insert(PdgEdge { from, to, kind }) && kind == EdgeKind::Data {
            self.data_preds[to.0].push(from);
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn edges(&self) -> impl Iterator<Item = &PdgEdge> {
        self.edges.iter()
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId, kind: EdgeKind) -> bool {
        self.edges.contains(&PdgEdge { from, to, kind })
    }

    /// Sources of data edges into `id`, in insertion order.
    pub fn data_preds(&self, id: NodeId) -> &[NodeId] {
        &self.data_preds[id.0]
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn stmt_node(&self, id: StmtId) -> Option<NodeId> {
        self.stmt_nodes.get(&id).copied()
    }

    pub fn signal_node(&self, name: &str) -> Option<NodeId> {
        self.signal_nodes.get(name).copied()
    }

    pub fn stmt_count(&self) -> usize {
        self.stmt_nodes.len()
    }

    pub fn label(&self, id: NodeId) -> String {
        match &self.nodes[id.0].kind {
            NodeKind::Statement(s) => s.to_string(),
            NodeKind::Signal { name, .. } => name.clone(),
        }
    }
}

pub fn build_pdg(design: &Design, classes: &SignalClassMap, stmts: &StatementTable) -> Pdg {
    let mut pdg = Pdg::default();
    for entry in &stmts.entries {
        pdg.add_node(NodeKind::Statement(entry.id));
    }
    for sig in &design.signals {
        let class = classes
            .get(&sig.name)
            .expect("class map covers every declared signal");
        pdg.add_node(NodeKind::Signal {
            name: sig.name.clone(),
            class,
        });
    }
    let sig = |pdg: &Pdg, name: &str| {
        pdg.signal_node(name)
            .expect("identifiers are validated by the parser")
    };

    for entry in &stmts.entries {
        let node = pdg.stmt_node(entry.id).unwrap();
        if let Some(parent) = entry.parent {
            let p = pdg.stmt_node(parent).unwrap();
            pdg.add_edge(p, node, EdgeKind::Control);
        }
        for r in entry.reads.iter().chain(&entry.guards) {
            let from = sig(&pdg, r);
            pdg.add_edge(from, node, EdgeKind::Data);
        }
        if let Some(w) = &entry.written {
            let to = sig(&pdg, w);
            pdg.add_edge(node, to, EdgeKind::Data);
        }
        // A branch decides the value of everything assigned beneath it.
        for c in &entry.controls {
            let to = sig(&pdg, c);
            pdg.add_edge(node, to, EdgeKind::Data);
        }
    }
    pdg
}

/// Graphviz rendering. Data edges are solid, control edges dashed.
pub fn export_dot(pdg: &Pdg, stmts: Option<&StatementTable>) -> String {
    let mut out = String::from("digraph pdg {\n  rankdir=LR;\n");
    for (i, node) in pdg.nodes.iter().enumerate() {
        let id = node_dot_id(pdg, NodeId(i));
        match &node.kind {
            NodeKind::Statement(s) => {
                let line = stmts
                    .and_then(|t| t.get(*s))
                    .map(|e| format!("\\nline {}", e.line()))
                    .unwrap_or_default();
                writeln!(out, "  {id} [label=\"{s}{line}\", shape=box];").unwrap();
            }
            NodeKind::Signal { name, class } => {
                let delay = if node.delay > 0 {
                    format!(" [delay={}]", node.delay)
                } else {
                    String::new()
                };
                let shape = if matches!(class, SignalClass::Output { .. }) {
                    "doublecircle"
                } else {
                    "ellipse"
                };
                writeln!(
                    out,
                    "  {id} [label=\"{name}{delay}\\n{class}\", shape={shape}];"
                )
                .unwrap();
            }
        }
    }
    for e in &pdg.edges {
        let style = match e.kind {
            EdgeKind::Data => "solid",
            EdgeKind::Control => "dashed",
        };
        writeln!(
            out,
            "  {} -> {} [style={style}];",
            node_dot_id(pdg, e.from),
            node_dot_id(pdg, e.to)
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

fn node_dot_id(pdg: &Pdg, id: NodeId) -> String {
    match &pdg.nodes[id.0].kind {
        NodeKind::Statement(s) => format!("\"{s}\""),
        NodeKind::Signal { name, .. } => format!("\"sig:{name}\""),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{enumerate_statements, parse_source};

    const F1: &str = include_str!("../tests/fixtures/fsm_f1.v");

    fn build(src: &str) -> (Pdg, StatementTable) {
        let d = parse_source(src).unwrap();
        let c = classify_signals(&d).unwrap();
        let t = enumerate_statements(&d);
        (build_pdg(&d, &c, &t), t)
    }

    #[test]
    fn f1_classification() {
        let c = classify_signals(&parse_source(F1).unwrap()).unwrap();
        assert_eq!(c.get("state"), Some(SignalClass::Register));
        assert_eq!(c.get("next_state"), Some(SignalClass::Combinational));
        assert_eq!(c.get("in"), Some(SignalClass::Input));
        assert_eq!(c.get("rst"), Some(SignalClass::Input));
        assert_eq!(c.get("clk"), Some(SignalClass::Input));
        assert_eq!(
            c.get("out"),
            Some(SignalClass::Output { registered: false })
        );
    }

    #[test]
    fn minimal_classification_and_graph() {
        let src = "module m(input a, output y); assign y = a; endmodule";
        let c = classify_signals(&parse_source(src).unwrap()).unwrap();
        assert_eq!(c.get("a"), Some(SignalClass::Input));
        assert_eq!(c.get("y"), Some(SignalClass::Output { registered: false }));
        let (pdg, _) = build(src);
        let (a, s0, y) = (
            pdg.signal_node("a").unwrap(),
            pdg.stmt_node(StmtId(0)).unwrap(),
            pdg.signal_node("y").unwrap(),
        );
        assert!(pdg.has_edge(a, s0, EdgeKind::Data));
        assert!(pdg.has_edge(s0, y, EdgeKind::Data));
        assert!(pdg.edges().all(|e| e.kind == EdgeKind::Data));
        assert_eq!(pdg.edges().count(), 2);
        assert_eq!(pdg.outputs(), &[y]);
    }

    #[test]
    fn mixed_and_multi_drivers() {
        let mixed = "module m(input clk, input a, output y);\n reg r;\n always @(posedge clk) r <= a;\n always @(*) r = ~a;\n assign y = r;\nendmodule";
        assert!(matches!(
            classify_signals(&parse_source(mixed).unwrap()),
            Err(PdgError::MixedDriver { ref signal, .. }) if signal == "r"
        ));
        let multi =
            "module m(input a, input b, output y);\n assign y = a;\n assign y = b;\nendmodule";
        assert!(matches!(
            classify_signals(&parse_source(multi).unwrap()),
            Err(PdgError::MultiDriver { ref signal, line: 3 }) if signal == "y"
        ));
        let input = "module m(input a, output y);\n assign a = 1'b0;\n assign y = a;\nendmodule";
        assert!(matches!(
            classify_signals(&parse_source(input).unwrap()),
            Err(PdgError::AssignToInput { .. })
        ));
    }

    #[test]
    fn registered_output_carries_delay() {
        let src = "module c(input clk, output reg [3:0] q);\n always @(posedge clk) q <= q + 4'd1;\nendmodule";
        let (pdg, _) = build(src);
        let q = pdg.signal_node("q").unwrap();
        let s0 = pdg.stmt_node(StmtId(0)).unwrap();
        assert_eq!(pdg.node(q).delay, 1);
        assert!(pdg.has_edge(q, s0, EdgeKind::Data));
        assert!(pdg.has_edge(s0, q, EdgeKind::Data));
    }

    #[test]
    fn f1_edges() {
        let (pdg, t) = build(F1);
        assert_eq!(t.len(), 7);
        let s = |i| pdg.stmt_node(StmtId(i)).unwrap();
        let g = |n| pdg.signal_node(n).unwrap();
        let data = [
            (s(3), g("next_state")),
            (g("next_state"), s(0)),
            (s(0), g("state")),
            (g("state"), s(6)),
            (s(6), g("out")),
            (g("state"), s(1)),
            (g("in"), s(2)),
            (g("in"), s(3)),
            (g("state"), s(3)),
            (s(1), g("next_state")),
            (s(2), g("next_state")),
        ];
        for (a, b) in data {
            assert!(
                pdg.has_edge(a, b, EdgeKind::Data),
                "{} -> {}",
                pdg.label(a),
                pdg.label(b)
            );
        }
        for (a, b) in [(s(1), s(2)), (s(2), s(3)), (s(2), s(4)), (s(1), s(5))] {
            assert!(pdg.has_edge(a, b, EdgeKind::Control));
        }
        assert_eq!(
            pdg.edges().filter(|e| e.kind == EdgeKind::Control).count(),
            4
        );
        for n in pdg.nodes() {
            let expect = matches!(
                n.kind,
                NodeKind::Signal {
                    class: SignalClass::Register,
                    ..
                }
            ) as u32;
            assert_eq!(n.delay, expect);
        }
    }

    #[test]
    fn counter_self_loop() {
        let src = "module c(input clk, input rst, output [3:0] y);\n reg [3:0] q;\n always @(posedge clk)\n  if (rst) q <= 4'd0;\n  else q <= q + 4'd1;\n assign y = q;\nendmodule";
        let (pdg, _) = build(src);
        let q = pdg.signal_node("q").unwrap();
        let inc = pdg.stmt_node(StmtId(2)).unwrap();
        assert!(pdg.has_edge(q, inc, EdgeKind::Data));
        assert!(pdg.has_edge(inc, q, EdgeKind::Data));
        assert!(export_dot(&pdg, None).contains("\"sig:q\" -> \"s2\" [style=solid]"));
    }

    #[test]
    fn dot_output() {
        let (pdg, t) = build(F1);
        let dot = export_dot(&pdg, Some(&t));
        assert!(dot.contains("state [delay=1]"));
        assert!(dot.contains("[style=dashed]"));
        assert!(dot.contains("\"s3\" [label=\"s3\\nline 16\", shape=box];"));
        assert_eq!(dot, export_dot(&pdg, Some(&t)));
    }

    #[test]
    fn dot_for_statement_free_design() {
        let (pdg, _) = build("module m(input a, output y); endmodule");
        let dot = export_dot(&pdg, None);
        assert!(dot.contains("\"sig:a\""));
        assert!(dot.contains("\"sig:y\""));
        assert!(!dot.contains("->"));
    }

    #[test]
    fn every_output_feeding_writer_reaches_an_output() {
        let (pdg, t) = build(F1);
        // reverse reachability over data edges from outputs
        let mut seen = vec![false; pdg.nodes().len()];
        let mut stack: Vec<NodeId> = pdg.outputs().to_vec();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n.0], true) {
                continue;
            }
            stack.extend(pdg.data_preds(n));
        }
        for e in &t.entries {
            assert!(
                seen[pdg.stmt_node(e.id).unwrap().0],
                "{} cannot reach an output",
                e.id
            );
        }
        assert_eq!(pdg.stmt_count(), t.len());
    }
}
