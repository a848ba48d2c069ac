use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::analysis::read_to_string;
use crate::frontend::StmtId;
use crate::sim::{elaborate, CycleRecord, Stimulus};
use crate::trace::Verdict;
use crate::Analysis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Easy,
    Medium,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::Easy, Category::Medium];
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Easy => "easy",
            Category::Medium => "medium",
        })
    }
}

/// One seeded bug. Paths are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub category: Category,
    pub design: PathBuf,
    pub buggy: PathBuf,
    pub stimulus: PathBuf,
    /// Line of the faulty statement in the buggy design.
    pub line: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_activation_cycle: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base: PathBuf,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = read_to_string(path)?;
        let mut m: Manifest = serde_json::from_str(&text).map_err(|e| BenchError::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        m.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }
}

/// A validated entry with everything needed to localize it.
#[derive(Debug)]
pub struct PreparedBug {
    pub entry: ManifestEntry,
    pub reference: Analysis,
    pub buggy: Analysis,
    pub stimulus: Stimulus,
    pub bug_stmt: StmtId,
}

fn invalid(entry: &ManifestEntry, message: impl Into<String>) -> BenchError {
    BenchError::InvalidEntry {
        id: entry.id.clone(),
        message: message.into(),
    }
}

/// Checks one entry: files load, the two designs differ exactly on the
/// ground-truth line, one statement starts there, the stimulus fails on the
/// buggy design and passes on the reference.
pub fn prepare(manifest: &Manifest, entry: &ManifestEntry) -> Result<PreparedBug, BenchError> {
    let ref_path = manifest.resolve(&entry.design);
    let bug_path = manifest.resolve(&entry.buggy);
    let ref_src = read_to_string(&ref_path)?;
    let bug_src = read_to_string(&bug_path)?;

    let ref_lines: Vec<&str> = ref_src.lines().collect();
    let bug_lines: Vec<&str> = bug_src.lines().collect();
    if ref_lines.len() != bug_lines.len() {
        return Err(invalid(
            entry,
            "reference and buggy designs have different line counts",
        ));
    }
    let differing: Vec<u32> = (0..ref_lines.len())
        .filter(|&i| ref_lines[i] != bug_lines[i])
        .map(|i| i as u32 + 1)
        .collect();
    if differing != [entry.line] {
        return Err(invalid(
            entry,
            format!(
                "designs differ on lines {differing:?}, expected only {}",
                entry.line
            ),
        ));
    }

    let mut reference = Analysis::from_file(&ref_path)?;
    let mut buggy = Analysis::from_file(&bug_path)?;
    reference.file = entry.design.display().to_string();
    buggy.file = entry.buggy.display().to_string();
    let on_line = buggy.stmts.on_line(entry.line);
    let [bug_stmt] = on_line[..] else {
        return Err(invalid(
            entry,
            format!("{} statements start on line {}", on_line.len(), entry.line),
        ));
    };

    let stim_path = manifest.resolve(&entry.stimulus);
    let stimulus = Stimulus::from_json(&read_to_string(&stim_path)?)?;
    let verdicts = |a: &Analysis| -> Result<Vec<Verdict>, BenchError> {
        Ok(elaborate(&a.design, &a.classes)?
            .run_records(&stimulus)?
            .into_iter()
            .map(|r| r.verdict)
            .collect())
    };
    if verdicts(&reference)?.contains(&Verdict::Fail) {
        return Err(invalid(entry, "stimulus fails on the reference design"));
    }
    if !verdicts(&buggy)?.contains(&Verdict::Fail) {
        return Err(invalid(entry, "stimulus never fails on the buggy design"));
    }
    Ok(PreparedBug {
        entry: entry.clone(),
        reference,
        buggy,
        stimulus,
        bug_stmt,
    })
}

/// First cycle where the buggy run differs from the reference run in any
/// signal the buggy statement assigns (for branches, any signal assigned
/// beneath them).
pub fn true_activation_cycle(
    reference: &Analysis,
    buggy: &Analysis,
    bug_stmt: StmtId,
    stimulus: &Stimulus,
) -> Result<Option<usize>, BenchError> {
    let entry = buggy
        .stmts
        .get(bug_stmt)
        .expect("bug statement comes from the buggy table");
    let names: Vec<&String> = entry.written.iter().chain(&entry.controls).collect();
    let run = |a: &Analysis| -> Result<Vec<CycleRecord>, BenchError> {
        Ok(elaborate(&a.design, &a.classes)?.run_records(stimulus)?)
    };
    let (r, b) = (run(reference)?, run(buggy)?);
    for (rc, bc) in r.iter().zip(&b) {
        for name in &names {
            let (Some(ri), Some(bi)) = (
                reference.design.signal_index(name),
                buggy.design.signal_index(name),
            ) else {
                continue;
            };
            if rc.signal_values[ri] != bc.signal_values[bi] {
                return Ok(Some(rc.cycle));
            }
        }
    }
    Ok(None)
}
