//! Corpus generation: apply single-line mutations to reference designs and
//! search for a random stimulus that exposes each one.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::manifest::{true_activation_cycle, Category, Manifest, ManifestEntry};
use super::BenchError;
use crate::analysis::read_to_string;
use crate::frontend::ast::mask;
use crate::sim::{elaborate, Stimulus, StimulusCycle};
use crate::Analysis;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mutation {
    pub id: String,
    pub design: PathBuf,
    pub category: Category,
    pub kind: String,
    pub line: u32,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationList {
    pub mutations: Vec<Mutation>,
}

#[derive(Clone, Copy, Debug)]
pub struct SeedOptions {
    /// Longest stimulus tried per attempt.
    pub max_cycles: usize,
    pub attempts: u64,
    /// Cycles kept after the first failure.
    pub tail: usize,
}

impl Default for SeedOptions {
    fn default() -> Self {
        Self {
            max_cycles: 48,
            attempts: 64,
            tail: 4,
        }
    }
}

/// Replaces the single occurrence of `from` on `line` (1-based).
pub fn apply_mutation(source: &str, m: &Mutation) -> Result<String, BenchError> {
    let bad = |message: String| BenchError::InvalidEntry {
        id: m.id.clone(),
        message,
    };
    let mut lines: Vec<String> = source.lines().map(str::to_string).collect();
    let idx = (m.line as usize)
        .checked_sub(1)
        .filter(|&i| i < lines.len());
    let Some(idx) = idx else {
        return Err(bad(format!("line {} is out of range", m.line)));
    };
    let hits = lines[idx].matches(&m.from).count();
    if hits != 1 {
        return Err(bad(format!(
            "`{}` occurs {hits} times on line {}",
            m.from, m.line
        )));
    }
    lines[idx] = lines[idx].replacen(&m.from, &m.to, 1);
    let mut out = lines.join("\n");
    if source.ends_with('\n') {
        out.push('\n');
    }
    Ok(out)
}

fn seed_for(id: &str, attempt: u64) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    }) ^ attempt
}

fn is_reset(name: &str) -> bool {
    matches!(name, "rst" | "reset")
}

/// Random stimulus whose expected outputs come from the reference design,
/// cut `tail` cycles after the buggy design first disagrees. `None` if the
/// bug stays hidden for `max_cycles`.
pub fn expose(
    reference: &Analysis,
    buggy: &Analysis,
    rng: &mut impl Rng,
    opts: &SeedOptions,
) -> Result<Option<Stimulus>, BenchError> {
    let clocks = reference.design.clocks();
    let inputs: Vec<_> = reference
        .design
        .inputs()
        .filter(|s| !clocks.contains(s.name.as_str()))
        .collect();
    let mut good = elaborate(&reference.design, &reference.classes)?;
    let mut bad = elaborate(&buggy.design, &buggy.classes)?;
    let mut cycles = Vec::new();
    let mut failed_at = None;
    for c in 0..opts.max_cycles {
        let values: BTreeMap<String, u64> = inputs
            .iter()
            .map(|s| {
                let v = if is_reset(&s.name) {
                    (c == 0) as u64
                } else {
                    rng.gen::<u64>() & mask(s.width())
                };
                (s.name.clone(), v)
            })
            .collect();
        // Outputs are only known after the reference steps; step both with
        // a placeholder and fill the golden values afterwards.
        let mut cycle = StimulusCycle {
            inputs: values,
            expected_outputs: BTreeMap::new(),
        };
        let golden = good.step_cycle(&cycle)?;
        cycle.expected_outputs = golden.outputs.clone();
        let observed = bad.step_cycle(&cycle)?;
        cycles.push(cycle);
        if failed_at.is_none() && observed.outputs != golden.outputs {
            failed_at = Some(c);
        }
        if failed_at.is_some_and(|f| c >= f + opts.tail) {
            break;
        }
    }
    Ok(failed_at.map(|_| Stimulus { cycles }))
}

/// Generates buggy designs, stimuli and `corpus.json` under `out_dir`.
/// Mutation design paths are relative to the mutation file.
pub fn generate(
    mutations_path: &Path,
    out_dir: &Path,
    opts: &SeedOptions,
) -> Result<Manifest, BenchError> {
    let list: MutationList =
        serde_json::from_str(&read_to_string(mutations_path)?).map_err(|e| {
            BenchError::Manifest {
                path: mutations_path.display().to_string(),
                message: e.to_string(),
            }
        })?;
    let base = mutations_path.parent().unwrap_or(Path::new(""));
    let io = |path: &Path, e: std::io::Error| crate::Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    for dir in ["bugs", "stimuli"] {
        let d = out_dir.join(dir);
        std::fs::create_dir_all(&d).map_err(|e| io(&d, e))?;
    }

    let mut manifest = Manifest {
        entries: Vec::new(),
        base: out_dir.to_path_buf(),
    };
    for m in &list.mutations {
        let ref_abs = base.join(&m.design);
        let reference_src = read_to_string(&ref_abs)?;
        let buggy_src = apply_mutation(&reference_src, m)?;
        let buggy_rel = PathBuf::from("bugs").join(format!("{}.v", m.id));
        let stim_rel = PathBuf::from("stimuli").join(format!("{}.json", m.id));

        let reference = Analysis::from_source(&reference_src)?;
        let buggy = Analysis::from_source(&buggy_src)?;
        let stimulus = (0..opts.attempts)
            .map(|attempt| {
                expose(
                    &reference,
                    &buggy,
                    &mut ChaCha8Rng::seed_from_u64(seed_for(&m.id, attempt)),
                    opts,
                )
            })
            .find_map(|r| r.transpose())
            .transpose()?
            .ok_or_else(|| BenchError::InvalidEntry {
                id: m.id.clone(),
                message: format!("no failing stimulus found in {} attempts", opts.attempts),
            })?;

        let on_line = buggy.stmts.on_line(m.line);
        let [bug_stmt] = on_line[..] else {
            return Err(BenchError::InvalidEntry {
                id: m.id.clone(),
                message: format!("{} statements start on line {}", on_line.len(), m.line),
            });
        };
        let activation = true_activation_cycle(&reference, &buggy, bug_stmt, &stimulus)?;

        let write = |rel: &Path, text: &str| {
            let p = out_dir.join(rel);
            std::fs::write(&p, text).map_err(|e| io(&p, e))
        };
        write(&buggy_rel, &buggy_src)?;
        write(&stim_rel, &stimulus.to_json())?;
        let design_rel = relative_to(&ref_abs, out_dir);
        manifest.entries.push(ManifestEntry {
            id: m.id.clone(),
            category: m.category,
            design: design_rel,
            buggy: buggy_rel,
            stimulus: stim_rel,
            line: m.line,
            kind: Some(m.kind.clone()),
            true_activation_cycle: activation,
        });
    }
    let path = out_dir.join("corpus.json");
    std::fs::write(&path, manifest.to_json()).map_err(|e| io(&path, e))?;
    Ok(manifest)
}

/// `path` expressed relative to `dir` when it lies beneath it.
fn relative_to(path: &Path, dir: &Path) -> PathBuf {
    let canon = |p: &Path| p.canonicalize().unwrap_or_else(|_| p.to_path_buf());
    let (p, d) = (canon(path), canon(dir));
    p.strip_prefix(&d).map(Path::to_path_buf).unwrap_or(p)
}
