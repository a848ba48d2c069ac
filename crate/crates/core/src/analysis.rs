use std::path::Path;

use thiserror::Error;

use crate::empc::EmpcError;
use crate::frontend::{enumerate_statements, parse_source, Design, FrontendError, StatementTable};
use crate::pdg::{build_pdg, classify_signals, Pdg, PdgError, SignalClassMap};
use crate::sim::{SimError, StimulusError};
use crate::trace::TraceError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("{file}:{source}")]
    Source { file: String, source: FrontendError },
    #[error(transparent)]
    Pdg(#[from] PdgError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Empc(#[from] EmpcError),
    #[error("the stimulus never fails; nothing to localize")]
    NoFailure,
    #[error("trace covers {trace} statements but the design has {design}")]
    TraceMismatch { trace: usize, design: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Everything static about one design: AST, statement table, signal
/// classes and dependency graph.
#[derive(Clone, Debug)]
pub struct Analysis {
    /// Name used in reported locations.
    pub file: String,
    pub design: Design,
    pub stmts: StatementTable,
    pub classes: SignalClassMap,
    pub pdg: Pdg,
}

impl Analysis {
    pub fn from_source(src: &str) -> Result<Self, Error> {
        let design = parse_source(src)?;
        let stmts = enumerate_statements(&design);
        let classes = classify_signals(&design)?;
        let pdg = build_pdg(&design, &classes, &stmts);
        Ok(Self {
            file: "<source>".into(),
            design,
            stmts,
            classes,
            pdg,
        })
    }

    /// Like [`Analysis::from_source`], with frontend errors prefixed by the
    /// file name.
    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let src = read_to_string(path)?;
        let name = path.display().to_string();
        let mut a = Self::from_source(&src).map_err(|e| match e {
            Error::Frontend(source) => Error::Source {
                file: name.clone(),
                source,
            },
            other => other,
        })?;
        a.file = name;
        Ok(a)
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
