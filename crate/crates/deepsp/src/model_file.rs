//! Versioned text format for trained networks.
//!
//! ```text
//! DEEPSP-MLP 1
//! 4 40 40 40 1
//! <one line per weight row of layer 1>
//! <bias line of layer 1>
//! ...
//! ```
//!
//! Values are written with 17 significant digits, enough to read back the
//! identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use deepsp_core::MlpModel;
use thiserror::Error;

pub const MAGIC: &str = "DEEPSP-MLP";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("not a model file (missing `{MAGIC}` header)")]
    NotAModel,
    #[error("model file version {found}, this reader understands {VERSION}")]
    Version { found: String },
    #[error("line {line}: {msg}")]
    Dimension { line: usize, msg: String },
    #[error("line {line}: `{token}` is not a number")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
    #[error("model has dims {found:?}, expected {expected:?}")]
    Shape { found: Vec<usize>, expected: Vec<usize> },
    #[error(transparent)]
    Model(#[from] deepsp_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn model_to_string(m: &MlpModel) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    let dims: Vec<String> = m.dims().iter().map(|d| d.to_string()).collect();
    writeln!(out, "{}", dims.join(" ")).unwrap();
    for l in 0..m.num_layers() {
        let n_in = m.dims()[l];
        let (w, b) = m.layer(l);
        for row in w.chunks(n_in) {
            push_row(&mut out, row);
        }
        push_row(&mut out, b);
    }
    out
}

fn push_row(out: &mut String, row: &[f64]) {
    for (k, x) in row.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        write!(out, "{x:.16e}").unwrap();
    }
    out.push('\n');
}

pub fn model_from_str(text: &str) -> Result<MlpModel, ModelFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (_, head) = lines.next().ok_or(ModelFileError::NotAModel)?;
    let mut head_parts = head.split_whitespace();
    if head_parts.next() != Some(MAGIC) {
        return Err(ModelFileError::NotAModel);
    }
    let version = head_parts.next().unwrap_or("");
    if version != VERSION.to_string() || head_parts.next().is_some() {
        return Err(ModelFileError::Version {
            found: version.to_string(),
        });
    }

    let (dl, dim_line) = lines.next().ok_or(ModelFileError::Dimension {
        line: 2,
        msg: "missing layer dimensions".into(),
    })?;
    let dims = dim_line
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| ModelFileError::BadNumber {
                line: dl,
                token: t.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(ModelFileError::Dimension {
            line: dl,
            msg: format!("invalid layer dimensions {dims:?}"),
        });
    }

    let mut params = Vec::new();
    for win in dims.windows(2) {
        let (n_in, n_out) = (win[0], win[1]);
        for _ in 0..n_out {
            read_row(&mut lines, n_in, &mut params)?;
        }
        read_row(&mut lines, n_out, &mut params)?;
    }
    if let Some((line, _)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(ModelFileError::Dimension {
            line,
            msg: "trailing data after the last layer".into(),
        });
    }
    Ok(MlpModel::from_parts(dims, params)?)
}

fn read_row<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    width: usize,
    params: &mut Vec<f64>,
) -> Result<(), ModelFileError> {
    let (line, text) = lines.next().ok_or(ModelFileError::Dimension {
        line: 0,
        msg: "file ends before the last layer".into(),
    })?;
    let before = params.len();
    for token in text.split_whitespace() {
        let x: f64 = token.parse().map_err(|_| ModelFileError::BadNumber {
            line,
            token: token.to_string(),
        })?;
        if !x.is_finite() {
            return Err(ModelFileError::NonFinite { line });
        }
        params.push(x);
    }
    let got = params.len() - before;
    if got != width {
        return Err(ModelFileError::Dimension {
            line,
            msg: format!("{got} values, expected {width}"),
        });
    }
    Ok(())
}

pub fn save_model(m: &MlpModel, path: impl AsRef<Path>) -> Result<(), ModelFileError> {
    fs::write(path, model_to_string(m))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel, ModelFileError> {
    model_from_str(&fs::read_to_string(path)?)
}

/// Loads a model and checks its layer sizes.
pub fn load_model_with_dims(path: impl AsRef<Path>, expected: &[usize]) -> Result<MlpModel, ModelFileError> {
    let m = load_model(path)?;
    if m.dims() != expected {
        return Err(ModelFileError::Shape {
            found: m.dims().to_vec(),
            expected: expected.to_vec(),
        });
    }
    Ok(m)
}
