//! Model and log ingestion plus seeded noise injection.

pub mod csvlog;
pub mod noise;
pub mod pnml;
pub mod xes;

use std::fs::File;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::eventlog::EventLog;
use crate::petri::{NetError, PetriNet};

pub use noise::{inject_noise, perturb_trace, EditKind, NoiseSpec};
pub use pnml::{parse_pnml, write_pnml};
pub use xes::{parse_xes, write_xes};

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml { line: u32, column: u32, message: String },
    #[error("{0}")]
    Semantic(String),
    #[error("reference to unknown node {0:?}")]
    UnknownNode(String),
    #[error("invalid noise specification: {0}")]
    InvalidSpec(String),
    #[error("CSV log: {0}")]
    Csv(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<roxmltree::Error> for ModelIoError {
    fn from(e: roxmltree::Error) -> Self {
        let pos = e.pos();
        ModelIoError::Xml {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, ModelIoError> {
    let io_err = |source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut raw = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut raw)).map_err(io_err)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(io_err)?;
        return Ok(out);
    }
    Ok(raw)
}

pub fn read_model(path: &Path) -> Result<PetriNet, ModelIoError> {
    parse_pnml(&read_bytes(path)?)
}

/// Reads `.xes`, `.xes.gz` or `.csv` logs, chosen by file name.
pub fn read_log(path: &Path) -> Result<EventLog, ModelIoError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_default();
    let bytes = read_bytes(path)?;
    let lower = name.to_ascii_lowercase();
    if lower.ends_with(".csv") || lower.ends_with(".csv.gz") {
        csvlog::parse_csv_log(&bytes, &name)
    } else {
        let mut log = parse_xes(&bytes)?;
        log.source_name = name;
        Ok(log)
    }
}

pub(crate) fn decode_utf8(input: &[u8]) -> Result<&str, ModelIoError> {
    std::str::from_utf8(input).map_err(|e| ModelIoError::Xml {
        line: 1 + input[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() as u32,
        column: 1,
        message: format!("invalid UTF-8: {e}"),
    })
}

pub(crate) fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}
