//! Model JSON files and sample CSV.
//!
//! Model files look like
//! `{"n": 3, "triplets": [[0, 1, 0.5]], "h": [0, 0, 0], "gamma": 0, "magnetization": null}`,
//! optionally with `"diagonal"` and `"uniform_coupling"`.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{IsingModel, ModelError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub h: Vec<f64>,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub magnetization: Option<i64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub diagonal: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub uniform_coupling: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl From<&IsingModel> for ModelFile {
    fn from(m: &IsingModel) -> Self {
        Self {
            n: m.n(),
            triplets: m.triplets().to_vec(),
            h: m.h().to_vec(),
            gamma: m.gamma(),
            magnetization: m.magnetization(),
            diagonal: m.diagonal(),
            uniform_coupling: m.uniform_coupling(),
        }
    }
}

impl TryFrom<ModelFile> for IsingModel {
    type Error = ModelError;

    fn try_from(f: ModelFile) -> Result<Self, ModelError> {
        Ok(IsingModel::new(f.n, f.triplets, f.h, f.gamma, f.magnetization)?
            .with_diagonal(f.diagonal)
            .with_uniform_coupling(f.uniform_coupling))
    }
}

pub fn model_to_json(model: &IsingModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from(model)).expect("plain data")
}

pub fn model_from_json(text: &str) -> Result<IsingModel, IoError> {
    let f: ModelFile = serde_json::from_str(text)?;
    Ok(IsingModel::try_from(f)?)
}

pub fn load_model(path: &Path) -> Result<IsingModel, IoError> {
    model_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_model(model: &IsingModel, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, model_to_json(model) + "\n")?;
    Ok(())
}

/// One comma-separated row of ±1 per configuration.
pub fn write_spin_row<W: Write>(out: &mut W, x: &[i8]) -> std::io::Result<()> {
    let mut line = String::with_capacity(3 * x.len());
    for (i, &s) in x.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(if s > 0 { "1" } else { "-1" });
    }
    line.push('\n');
    out.write_all(line.as_bytes())
}

pub fn write_float_row<W: Write>(out: &mut W, x: &[f64]) -> std::io::Result<()> {
    let line: Vec<String> = x.iter().map(|v| v.to_string()).collect();
    writeln!(out, "{}", line.join(","))
}

/// Parses rows written by [`write_spin_row`]; blank lines and `#` comments
/// are skipped.
pub fn read_spin_rows<R: BufRead>(input: R) -> Result<Vec<Vec<i8>>, IoError> {
    let mut rows = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split(',')
            .map(|f| match f.trim() {
                "1" | "+1" => Ok(1),
                "-1" => Ok(-1),
                other => Err(IoError::Csv {
                    line: k + 1,
                    msg: format!("'{other}' is not a spin"),
                }),
            })
            .collect::<Result<Vec<i8>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}
