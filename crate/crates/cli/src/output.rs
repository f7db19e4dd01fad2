//! CSV and JSON writers. Numbers carry 12 significant digits; missing
//! values are empty CSV cells.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use wgscat_core::solver::GridSpec;
use wgscat_core::Complex64;

use crate::config::RunConfig;

/// `x` with 12 significant digits in scientific notation, e.g. `-2.57560000000e+00`.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.11e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// In-memory CSV table with a mandatory header.
pub struct Table {
    columns: Vec<String>,
    text: String,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        let columns: Vec<String> = columns.iter().map(|c| c.as_ref().to_string()).collect();
        let text = format!("{}\n", columns.join(","));
        Self { columns, text }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns.len(), "row width");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            if c.contains([',', '"', '\n']) {
                let _ = write!(self.text, "\"{}\"", c.replace('"', "\"\""));
            } else {
                self.text.push_str(c);
            }
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        fs::write(path, &self.text).with_context(|| format!("writing {}", path.display()))
    }
}

/// Complex value as two cells.
pub fn complex_cells(z: Option<Complex64>) -> [String; 2] {
    [opt(z.map(|z| z.re)), opt(z.map(|z| z.im))]
}

/// Field samples `x, y, re, im` at the grid points inside the domain.
pub fn field_table(grid: &GridSpec, values: &[Option<Complex64>]) -> Table {
    let mut t = Table::new(&["x", "y", "re", "im"]);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if let Some(v) = values[j * grid.nx + i] {
                let [x, y] = grid.point(i, j);
                t.row(&[num(x), num(y), num(v.re), num(v.im)]);
            }
        }
    }
    t
}

/// JSON report with the resolved configuration embedded.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_json<T: Serialize>(path: &Path, command: &str, config: &RunConfig, body: T) -> anyhow::Result<()> {
    let report = Report {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        body,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(2.5756), "2.57560000000e+00");
        assert_eq!(num(-1.0 / 3.0), "-3.33333333333e-01");
        assert_eq!(num(0.0), "0.00000000000e+00");
        assert_eq!(num(1.5e-120), "1.50000000000e-120");
        assert_eq!(opt(None), "");
        let back: f64 = num(std::f64::consts::PI).parse().unwrap();
        assert!((back - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn table_quotes_and_checks_width() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&["1".into(), "x, \"y\"".into()]);
        assert_eq!(t.text, "a,b\n1,\"x, \"\"y\"\"\"\n");
    }
}
