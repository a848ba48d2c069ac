use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pecker_core::bench::seed::{generate, SeedOptions};
use pecker_core::bench::{run_corpus, BenchOptions, Manifest};
use pecker_core::empc::{compute_empc, SweepMode};
use pecker_core::frontend::StmtId;
use pecker_core::localize::{localize, LocalizeOptions, Mode, RankedEntry, Truncation};
use pecker_core::pdg::export_dot;
use pecker_core::sim::{elaborate, Stimulus};
use pecker_core::trace::{trace_from_str, trace_to_string};
use pecker_core::Analysis;

/// Statement-level bug localization for small Verilog designs.
#[derive(Parser)]
#[command(name = "pecker", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the program dependence graph.
    Pdg {
        design: PathBuf,
        /// Emit Graphviz DOT (the only format).
        #[arg(long)]
        dot: bool,
    },
    /// Simulate a stimulus and write the execution trace.
    Trace {
        design: PathBuf,
        #[arg(long)]
        stimulus: PathBuf,
        /// Trace file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump per-statement EMPC values as CSV.
    Empc {
        design: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Rank statements by suspiciousness.
    Localize(LocalizeArgs),
    /// Run every mode over a bug corpus.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated list of modes.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "pecker,tarantula,ochiai,pecker-no-al,pecker-no-ntp"
        )]
        modes: Vec<Mode>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Build a bug corpus from a mutation list.
    Seed {
        #[arg(long)]
        mutations: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Repeat backward EMPC sweeps until the values stop changing.
    #[arg(long)]
    empc_fixpoint: bool,
}

impl SweepArgs {
    fn mode(&self) -> SweepMode {
        if self.empc_fixpoint {
            SweepMode::Fixpoint
        } else {
            SweepMode::Single
        }
    }
}

#[derive(Args)]
struct LocalizeArgs {
    design: PathBuf,
    #[arg(long)]
    stimulus: PathBuf,
    #[arg(long, default_value = "pecker")]
    mode: Mode,
    /// Use the observation cycle as every statement's activation cycle.
    #[arg(long, conflicts_with = "no_pruning")]
    no_activation_localization: bool,
    /// Count every passing cycle, not only those before activation.
    #[arg(long)]
    no_pruning: bool,
    #[arg(long, default_value = "full")]
    truncation: Truncation,
    /// Number of entries to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Write the full ranking as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    sweep: SweepArgs,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_stimulus(path: &Path) -> Result<Stimulus> {
    Stimulus::from_json(&read(path)?)
        .with_context(|| format!("invalid stimulus {}", path.display()))
}

fn localize_mode(args: &LocalizeArgs) -> Result<Mode> {
    let ablation = match (args.no_activation_localization, args.no_pruning) {
        (true, _) => Some(Mode::PeckerNoAl),
        (_, true) => Some(Mode::PeckerNoNtp),
        _ => None,
    };
    match (ablation, args.mode) {
        (None, m) => Ok(m),
        (Some(a), Mode::Pecker) => Ok(a),
        (Some(a), m) if a == m => Ok(a),
        (Some(_), m) => bail!("ablation flags only apply to --mode pecker, not {m}"),
    }
}

fn row(e: &RankedEntry, loc_width: usize) -> String {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    format!(
        "{:>4}  s{:<4} {:<loc_width$} {:>4} {:>4} {:>7} {:>5} {:>5} {:>8}{}",
        e.rank,
        e.stmt_id.0,
        e.location,
        opt(e.aef.map(|v| v.to_string())),
        opt(e.aep.map(|v| v.to_string())),
        opt(e.inv_aep.map(|v| v.to_string())),
        opt(e.c_act.map(|v| v.to_string())),
        opt(e.empc.map(|v| v.to_string())),
        opt(e.score.map(|v| format!("{v:.4}"))),
        if e.candidate { "" } else { "  (filtered)" },
    )
}

fn run(cli: Cli) -> Result<()> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Pdg { design, dot: _ } => {
            let a = Analysis::from_file(&design)?;
            stdout.write_all(export_dot(&a.pdg, Some(&a.stmts)).as_bytes())?;
        }
        Command::Trace {
            design,
            stimulus,
            out,
        } => {
            let a = Analysis::from_file(&design)?;
            let stim = load_stimulus(&stimulus)?;
            let (trace, results) = elaborate(&a.design, &a.classes)?.run(&stim)?;
            let text = trace_to_string(&trace, &results);
            match out {
                Some(p) => write(&p, &text)?,
                None => stdout.write_all(text.as_bytes())?,
            }
        }
        Command::Empc {
            design,
            trace,
            sweep,
        } => {
            let a = Analysis::from_file(&design)?;
            let (trace, results) = trace_from_str(&read(&trace)?)
                .with_context(|| format!("invalid trace {}", trace.display()))?;
            let map = compute_empc(&a.pdg, &trace, &results, sweep.mode())?;
            writeln!(stdout, "stmt_id,empc")?;
            for i in 0..a.stmts.len() {
                writeln!(stdout, "{i},{}", map.stmt(&a.pdg, StmtId(i)))?;
            }
        }
        Command::Localize(args) => {
            let a = Analysis::from_file(&args.design)?;
            let stim = load_stimulus(&args.stimulus)?;
            let opts = LocalizeOptions {
                mode: localize_mode(&args)?,
                truncation: args.truncation,
                sweep: args.sweep.mode(),
            };
            let list = localize(&a, &stim, &opts)?;
            let shown = &list.entries[..args.top.min(list.entries.len())];
            let w = shown
                .iter()
                .map(|e| e.location.len())
                .max()
                .unwrap_or(0)
                .max(8);
            writeln!(
                stdout,
                "mode {}, first failing cycle {}",
                list.mode, list.first_fail
            )?;
            writeln!(
                stdout,
                "{:>4}  {:<5} {:<w$} {:>4} {:>4} {:>7} {:>5} {:>5} {:>8}",
                "rank", "stmt", "location", "aef", "aep", "1/aep", "c_act", "empc", "score"
            )?;
            for e in shown {
                writeln!(stdout, "{}", row(e, w))?;
            }
            if let Some(p) = args.report {
                write(&p, &list.to_json())?;
            }
        }
        Command::Bench {
            corpus,
            modes,
            out,
            sweep,
        } => {
            let manifest = Manifest::load(&corpus)?;
            let report = run_corpus(
                &manifest,
                &BenchOptions {
                    modes,
                    sweep: sweep.mode(),
                },
            )?;
            stdout.write_all(report.render_table().as_bytes())?;
            if let Some(p) = out {
                write(&p, &report.to_json())?;
            }
        }
        Command::Seed { mutations, out_dir } => {
            let manifest = generate(&mutations, &out_dir, &SeedOptions::default())?;
            writeln!(
                stdout,
                "wrote {} bugs to {}",
                manifest.entries.len(),
                out_dir.join("corpus.json").display()
            )?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    run(Cli::parse())
}
