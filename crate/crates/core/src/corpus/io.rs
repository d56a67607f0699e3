use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{Document, DocumentRecord};
use crate::error::{Error, Result};

/// Reads line-delimited JSON records, skipping blank lines.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{}:{}", path.display(), lineno + 1), e))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for record in records {
        let line =
            serde_json::to_string(record).map_err(|e| Error::json(path.display().to_string(), e))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    Ok(read_records::<DocumentRecord>(path)?
        .into_iter()
        .map(Document::from_record)
        .collect())
}

pub fn write_documents(path: &Path, docs: &[Document]) -> Result<()> {
    let records: Vec<DocumentRecord> = docs.iter().map(Document::to_record).collect();
    write_records(path, &records)
}
