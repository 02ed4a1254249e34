//! Schema-versioned CSV files.
//!
//! Every file starts with a comment line naming the schema and the build
//! that wrote it, e.g. `# schema=runs/1 build=0.1.0 config=…`,
//! followed by an ordinary CSV header row.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Package version, or `DEEPSP_BUILD_ID` when set at compile time (e.g. to a
/// commit hash by a release script).
pub const BUILD_ID: &str = match option_env!("DEEPSP_BUILD_ID") {
    Some(id) => id,
    None => env!("CARGO_PKG_VERSION"),
};

pub const RUNS_SCHEMA: &str = "runs/1";
pub const SWEEP_SCHEMA: &str = "sweep/1";
pub const CURVE_SCHEMA: &str = "curve/1";
pub const TRACE_SCHEMA: &str = "sp-trace/1";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: existing schema `{found}` does not match `{expected}`")]
    SchemaMismatch {
        path: String,
        found: String,
        expected: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Short stable digest of an effective configuration rendering.
pub fn config_hash(rendered: &str) -> String {
    let digest = Sha256::digest(rendered.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn preamble(schema: &str, config: &str) -> String {
    format!("# schema={schema} build={BUILD_ID} config={config}\n")
}

/// Schema named in the first line of an existing file, if any.
pub fn read_schema(path: &Path) -> Result<Option<String>, OutputError> {
    let file = File::open(path)?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first)?;
    Ok(first
        .trim()
        .strip_prefix("# ")
        .and_then(|rest| rest.split_whitespace().find_map(|kv| kv.strip_prefix("schema=")))
        .map(str::to_string))
}

/// Writes `rows` to `path`. With `append` set and a non-empty file already
/// present, rows are added without a new header after checking the schema.
pub fn write_rows<T: Serialize>(
    path: &Path,
    schema: &str,
    config: &str,
    rows: &[T],
    append: bool,
) -> Result<(), OutputError> {
    let existing = append && path.exists() && std::fs::metadata(path)?.len() > 0;
    if existing {
        let found = read_schema(path)?.unwrap_or_default();
        if found != schema {
            return Err(OutputError::SchemaMismatch {
                path: path.display().to_string(),
                found,
                expected: schema.to_string(),
            });
        }
        let file = OpenOptions::new().append(true).open(path)?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    } else {
        let mut file = File::create(path)?;
        file.write_all(preamble(schema, config).as_bytes())?;
        let mut w = csv::Writer::from_writer(file);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Reads rows back, skipping the comment preamble.
pub fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, OutputError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Row {
        a: u32,
        b: Option<f64>,
    }

    #[test]
    fn write_append_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_rows(&p, "t/1", "abc", &[Row { a: 1, b: Some(0.5) }], false).unwrap();
        write_rows(&p, "t/1", "abc", &[Row { a: 2, b: None }], true).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(&format!("# schema=t/1 build={BUILD_ID} config=abc\na,b\n")));
        assert_eq!(read_schema(&p).unwrap().as_deref(), Some("t/1"));
        let rows: Vec<Row> = read_rows(&p).unwrap();
        assert_eq!(rows, [Row { a: 1, b: Some(0.5) }, Row { a: 2, b: None }]);
    }

    #[test]
    fn refuses_foreign_schema() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_rows(&p, "t/1", "", &[Row { a: 1, b: None }], false).unwrap();
        let err = write_rows(&p, "t/2", "", &[Row { a: 1, b: None }], true).unwrap_err();
        assert!(matches!(err, OutputError::SchemaMismatch { .. }));
        // a fresh write replaces the file
        write_rows(&p, "t/2", "", &[Row { a: 3, b: None }], false).unwrap();
        assert_eq!(read_schema(&p).unwrap().as_deref(), Some("t/2"));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("n=5"), config_hash("n=5"));
        assert_ne!(config_hash("n=5"), config_hash("n=6"));
        assert_eq!(config_hash("").len(), 16);
    }
}
