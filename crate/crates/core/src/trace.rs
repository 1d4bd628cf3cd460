//! Uniform sampled series: the common currency between synthesis and fitting.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Units carried by the trace axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Seconds,
    Hertz,
    Meters,
}

/// Provenance of a synthesized or loaded trace.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TraceMeta {
    /// Identifier of the generator that produced this trace.
    pub generator: String,
    /// RNG seed the generator was run with, if any.
    pub seed: Option<u64>,
    /// Generator parameters, name -> value.
    pub params: BTreeMap<String, f64>,
}

/// Sampled series with per-point uncertainties.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trace {
    pub axis_kind: AxisKind,
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    /// Per-point 1-sigma uncertainty; zero means "unknown".
    pub sigma: Vec<f64>,
    pub meta: TraceMeta,
}

impl Trace {
    pub fn new(
        axis_kind: AxisKind,
        axis: Vec<f64>,
        values: Vec<f64>,
        sigma: Vec<f64>,
        meta: TraceMeta,
    ) -> Result<Self> {
        if axis.len() != values.len() || axis.len() != sigma.len() {
            return Err(Error::Data(format!(
                "trace length mismatch: axis {}, values {}, sigma {}",
                axis.len(),
                values.len(),
                sigma.len()
            )));
        }
        if axis.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data("trace axis must be strictly increasing".into()));
        }
        if sigma.iter().any(|s| *s < 0.0 || !s.is_finite()) {
            return Err(Error::Data("trace sigma must be finite and >= 0".into()));
        }
        Ok(Trace {
            axis_kind,
            axis,
            values,
            sigma,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Write as CSV with header `axis,value,sigma`, `%.12e` numbers, LF endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"axis,value,sigma\n")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e}",
                self.axis[i], self.values[i], self.sigma[i]
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    /// Write the JSON metadata sidecar next to a CSV.
    pub fn save_meta(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            axis_kind: &'a AxisKind,
            points: usize,
            meta: &'a TraceMeta,
        }
        let side = Sidecar {
            axis_kind: &self.axis_kind,
            points: self.len(),
            meta: &self.meta,
        };
        let text = serde_json::to_string_pretty(&side)
            .map_err(|e| Error::Data(format!("sidecar serialization: {e}")))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    /// Parse a CSV written by [`Trace::write_csv`].
    pub fn load_csv(path: &Path, axis_kind: AxisKind) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut axis = Vec::new();
        let mut values = Vec::new();
        let mut sigma = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if ln == 0 {
                if line.trim() != "axis,value,sigma" {
                    return Err(Error::Schema {
                        path: path.display().to_string(),
                        message: format!("line 1: expected header `axis,value,sigma`, got `{line}`"),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Schema {
                    path: path.display().to_string(),
                    message: format!("line {}: expected 3 fields, got {}", ln + 1, fields.len()),
                });
            }
            let parse = |s: &str, col: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|e| Error::Schema {
                    path: path.display().to_string(),
                    message: format!("line {}: column {col}: {e}", ln + 1),
                })
            };
            axis.push(parse(fields[0], "axis")?);
            values.push(parse(fields[1], "value")?);
            sigma.push(parse(fields[2], "sigma")?);
        }
        Trace::new(axis_kind, axis, values, sigma, TraceMeta::default())
    }
}
