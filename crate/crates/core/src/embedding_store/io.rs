use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::record::{Dataset, EmbeddingRecord};
use crate::error::{Error, Result};

/// Reads a JSON Lines embedding file. Blank lines are skipped.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match parse_dataset(BufReader::new(file)) {
        Err(Error::EmptyInput(_)) => Err(Error::EmptyFile(path.to_path_buf())),
        Err(Error::Io { source, .. }) => Err(Error::io(path, source)),
        other => other,
    }
}

/// Parses JSON Lines records from any reader.
pub fn parse_dataset(reader: impl BufRead) -> Result<Dataset> {
    let mut records = Vec::new();
    let mut dimension = None;
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EmbeddingRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let dim = match dimension {
            Some(d) => d,
            None => {
                let d = record.dimension().ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "record has neither \"pooled\" nor \"tokens\"".into(),
                })?;
                dimension = Some(d);
                d
            }
        };
        record.validate(dim).map_err(|e| match e {
            Error::DimensionMismatch {
                expected,
                found,
                context,
            } => Error::DimensionMismatch {
                expected,
                found,
                context: format!("line {line_no}, {context}"),
            },
            Error::InvalidRecord { .. } | Error::InvalidSpan { .. } | Error::NonFinite(_) => {
                Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                }
            }
            other => other,
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptyInput("dataset file"));
    }
    Dataset::new(records)
}

/// Writes `dataset` as JSON Lines, replacing `path` atomically.
pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = tmp_path(path);
    let result = (|| {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut out = BufWriter::new(file);
        write_dataset(dataset, &mut out)?;
        out.flush().map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

pub fn write_dataset(dataset: &Dataset, mut out: impl Write) -> Result<()> {
    for record in dataset.records() {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

pub(crate) fn tmp_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}
