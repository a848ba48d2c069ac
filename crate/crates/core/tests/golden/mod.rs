//! Simulator golden checks shared by the core tests and the acceptance run.

use std::collections::BTreeMap;

use pecker_core::frontend::ast::{AssignOp, Design, Item, Sensitivity, Stmt, StmtKind};
use pecker_core::frontend::parse_source;
use pecker_core::pdg::classify_signals;
use pecker_core::sim::{elaborate, CycleRecord, StimulusCycle};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DECODER: &str = include_str!("../../../../corpus/designs/decoder.v");
const ALU: &str = include_str!("../../../../corpus/designs/alu.v");
const COUNTER: &str = include_str!("../../../../corpus/designs/counter.v");
const LSHIFT: &str = include_str!("../../../../corpus/designs/lshift.v");
const LED: &str = include_str!("../../../../corpus/designs/led_controller.v");
const ARBITER: &str = include_str!("../../../../corpus/designs/arbiter.v");
const FSM_FULL: &str = include_str!("../../../../corpus/designs/fsm_full.v");
const FSM_TRAFFIC: &str = include_str!("../../../../corpus/designs/fsm_traffic.v");
const F1: &str = include_str!("../fixtures/fsm_f1.v");
const F1_BUG: &str = include_str!("../fixtures/fsm_f1_bug.v");

type Inputs5 = (u64, u64, u64, u64, u64);
type Pair = (u64, u64);

fn cycle(inputs: &[(&str, u64)]) -> StimulusCycle {
    StimulusCycle {
        inputs: inputs.iter().map(|&(n, v)| (n.to_string(), v)).collect(),
        expected_outputs: BTreeMap::new(),
    }
}

/// Steps `design` through `cycles` and returns every record.
fn run(design: &Design, cycles: &[StimulusCycle]) -> Vec<CycleRecord> {
    let classes = classify_signals(design).unwrap();
    let mut sim = elaborate(design, &classes).unwrap();
    cycles.iter().map(|c| sim.step_cycle(c).unwrap()).collect()
}

fn outputs(rec: &CycleRecord, names: &[&str]) -> Vec<u64> {
    names.iter().map(|n| rec.outputs[*n]).collect()
}

pub fn decoder_truth_table() {
    let d = parse_source(DECODER).unwrap();
    let mut rows = Vec::new();
    let mut want = Vec::new();
    for en in 0..2u64 {
        for sel in 0..8u64 {
            rows.push(cycle(&[("en", en), ("sel", sel)]));
            want.push(if en == 1 {
                vec![1 << sel, 1]
            } else {
                vec![0, 0]
            });
        }
    }
    let got: Vec<_> = run(&d, &rows)
        .iter()
        .map(|r| outputs(r, &["y", "valid"]))
        .collect();
    assert_eq!(got, want);
}

fn alu_oracle(op: u64, a: u64, b: u64) -> [u64; 3] {
    let wide = match op {
        0 => a + b,
        1 => a.wrapping_sub(b) & 0x1f,
        2 => a & b,
        3 => a | b,
        4 => a ^ b,
        5 => !a & 0xf,
        6 => (a << 1) & 0x1f,
        _ => a >> 1,
    };
    let y = wide & 0xf;
    [y, wide >> 4, (y == 0) as u64]
}

pub fn alu_truth_table() {
    let d = parse_source(ALU).unwrap();
    let mut rows = Vec::new();
    let mut want = Vec::new();
    for op in 0..8 {
        for a in 0..16 {
            for b in 0..16 {
                rows.push(cycle(&[("op", op), ("a", a), ("b", b)]));
                want.push(alu_oracle(op, a, b).to_vec());
            }
        }
    }
    let got: Vec<_> = run(&d, &rows)
        .iter()
        .map(|r| outputs(r, &["y", "carry", "zero"]))
        .collect();
    assert_eq!(got.len(), 2048);
    for (i, (g, w)) in got.iter().zip(&want).enumerate() {
        assert_eq!(g, w, "row {i}: {:?}", rows[i].inputs);
    }
}

fn value_after_edge(d: &Design, rec: &CycleRecord, name: &str) -> u64 {
    rec.signal_values[d.signal_index(name).unwrap()]
}

pub fn counter_ten_cycles() {
    let d = parse_source(COUNTER).unwrap();
    // (rst, en, up, load, din) -> (count, tc) sampled before the edge, value after it.
    let table: [(Inputs5, (u64, u64), u64); 10] = [
        ((1, 0, 1, 0, 0), (0, 0), 0),
        ((0, 1, 1, 0, 0), (0, 0), 1),
        ((0, 1, 1, 0, 0), (1, 0), 2),
        ((0, 1, 1, 1, 14), (2, 0), 14),
        ((0, 1, 1, 0, 0), (14, 0), 15),
        ((0, 0, 1, 0, 0), (15, 1), 15),
        ((0, 1, 1, 0, 0), (15, 1), 0),
        ((0, 1, 0, 0, 0), (0, 1), 15),
        ((0, 1, 0, 0, 0), (15, 0), 14),
        ((1, 1, 0, 0, 0), (14, 0), 0),
    ];
    let rows: Vec<_> = table
        .iter()
        .map(|&((rst, en, up, load, din), _, _)| {
            cycle(&[
                ("rst", rst),
                ("en", en),
                ("up", up),
                ("load", load),
                ("din", din),
            ])
        })
        .collect();
    for (i, (rec, (_, (count, tc), value))) in run(&d, &rows).iter().zip(&table).enumerate() {
        assert_eq!(outputs(rec, &["count", "tc"]), [*count, *tc], "cycle {i}");
        assert_eq!(value_after_edge(&d, rec, "value"), *value, "cycle {i}");
    }
}

pub fn sequence_detector_ten_cycles() {
    let d = parse_source(FSM_FULL).unwrap();
    // (rst, din) -> match before the edge, state after it.
    let table: [((u64, u64), u64, u64); 10] = [
        ((1, 0), 0, 0),
        ((0, 1), 0, 1),
        ((0, 0), 0, 2),
        ((0, 1), 0, 3),
        ((0, 1), 0, 4),
        ((0, 0), 1, 2),
        ((0, 1), 0, 3),
        ((0, 1), 0, 4),
        ((0, 1), 1, 1),
        ((0, 1), 0, 1),
    ];
    let rows: Vec<_> = table
        .iter()
        .map(|&((rst, din), _, _)| cycle(&[("rst", rst), ("din", din)]))
        .collect();
    for (i, (rec, (_, m, state))) in run(&d, &rows).iter().zip(&table).enumerate() {
        assert_eq!(rec.outputs["match"], *m, "cycle {i}");
        assert_eq!(value_after_edge(&d, rec, "state"), *state, "cycle {i}");
    }
}

pub fn traffic_light_ten_cycles() {
    let d = parse_source(FSM_TRAFFIC).unwrap();
    // (rst, car) -> (light, walk) before the edge, timer after it.
    let table: [((u64, u64), Pair, u64); 10] = [
        ((1, 0), (0, 0), 4),
        ((0, 1), (0, 0), 3),
        ((0, 1), (0, 0), 2),
        ((0, 0), (0, 0), 1),
        ((0, 0), (0, 0), 0),
        ((0, 0), (0, 0), 0),
        ((0, 1), (0, 0), 1),
        ((0, 0), (1, 0), 0),
        ((0, 0), (1, 0), 3),
        ((0, 0), (2, 1), 2),
    ];
    let rows: Vec<_> = table
        .iter()
        .map(|&((rst, car), _, _)| cycle(&[("rst", rst), ("car", car)]))
        .collect();
    for (i, (rec, (_, (light, walk), timer))) in run(&d, &rows).iter().zip(&table).enumerate() {
        assert_eq!(
            outputs(rec, &["light", "walk"]),
            [*light, *walk],
            "cycle {i}"
        );
        assert_eq!(value_after_edge(&d, rec, "timer"), *timer, "cycle {i}");
    }
}

fn nonblocking_only(s: &Stmt) -> bool {
    let mut ok = true;
    s.walk(&mut |n| {
        if let StmtKind::Assign {
            op: AssignOp::Blocking,
            ..
        } = n.kind
        {
            ok = false;
        }
    });
    ok
}

/// Shuffles sibling statements in nonblocking-only blocks. Statement ids
/// stay attached to their statements.
fn shuffle_stmt(s: &mut Stmt, rng: &mut ChaCha8Rng) {
    match &mut s.kind {
        StmtKind::Block(children) => {
            if children.iter().all(nonblocking_only) {
                children.shuffle(rng);
            }
            children.iter_mut().for_each(|c| shuffle_stmt(c, rng));
        }
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            shuffle_stmt(then_branch, rng);
            if let Some(e) = else_branch {
                shuffle_stmt(e, rng);
            }
        }
        StmtKind::Case { arms, .. } => arms.iter_mut().for_each(|a| shuffle_stmt(&mut a.body, rng)),
        StmtKind::Assign { .. } | StmtKind::Null => {}
    }
}

/// Shuffles clocked blocks among their own positions and the statements
/// inside them.
fn permute(d: &Design, rng: &mut ChaCha8Rng) -> Design {
    let mut out = d.clone();
    let clocked = |i: &Item| {
        matches!(
            i,
            Item::Always {
                sensitivity: Sensitivity::Edge { .. },
                ..
            }
        )
    };
    let slots: Vec<usize> = (0..out.items.len())
        .filter(|&i| clocked(&out.items[i]))
        .collect();
    let mut order = slots.clone();
    order.shuffle(rng);
    let originals = out.items.clone();
    for (&slot, &from) in slots.iter().zip(&order) {
        out.items[slot] = originals[from].clone();
    }
    for item in &mut out.items {
        if let Item::Always {
            sensitivity: Sensitivity::Edge { .. },
            body,
            ..
        } = item
        {
            shuffle_stmt(body, rng);
        }
    }
    out
}

fn random_cycles(d: &Design, rng: &mut ChaCha8Rng, n: usize) -> Vec<StimulusCycle> {
    let clocks = d.clocks();
    (0..n)
        .map(|c| StimulusCycle {
            inputs: d
                .inputs()
                .filter(|s| !clocks.contains(s.name.as_str()))
                .map(|s| {
                    let v = if s.name == "rst" {
                        (c == 0) as u64
                    } else {
                        rng.gen::<u64>() & ((1u64 << s.width()) - 1)
                    };
                    (s.name.clone(), v)
                })
                .collect(),
            expected_outputs: BTreeMap::new(),
        })
        .collect()
}

pub fn nonblocking_order_is_irrelevant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut permuted_any = 0;
    for src in [
        COUNTER,
        LSHIFT,
        LED,
        ARBITER,
        FSM_FULL,
        FSM_TRAFFIC,
        F1,
        F1_BUG,
    ] {
        let d = parse_source(src).unwrap();
        for _ in 0..20 {
            let p = permute(&d, &mut rng);
            permuted_any += (p != d) as usize;
            let stim = random_cycles(&d, &mut rng, 24);
            assert_eq!(run(&d, &stim), run(&p, &stim), "design {}", d.name);
        }
    }
    assert!(permuted_any > 0, "no permutation changed any design");
}

pub fn nonblocking_swap_fixture() {
    let src = "module m(input clk, input rst, output [3:0] x, output [3:0] y);\n\
               reg [3:0] a;\n reg [3:0] b;\n\
               always @(posedge clk) begin\n if (rst) begin a <= 4'd1; b <= 4'd2; end\n else begin a <= b; b <= a + 4'd1; end\n end\n\
               assign x = a;\n assign y = b;\nendmodule";
    let d = parse_source(src).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let stim: Vec<_> = (0..6).map(|c| cycle(&[("rst", (c == 0) as u64)])).collect();
    let base = run(&d, &stim);
    let xy: Vec<_> = base.iter().map(|r| outputs(r, &["x", "y"])).collect();
    assert_eq!(xy, [[0, 0], [1, 2], [2, 2], [2, 3], [3, 3], [3, 4]]);
    for _ in 0..10 {
        assert_eq!(run(&permute(&d, &mut rng), &stim), base);
    }
}
