//! Run configuration: defaults, JSON config file, command-line overrides and
//! validation before any solve.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use wgscat_core::geometry::truncate;
use wgscat_core::modal::DEFAULT_DTN_TERMS;
use wgscat_core::scattering::{DEFAULT_CORNER_GRADING, DEFAULT_ELEMENTS_PER_ELL};
use wgscat_core::search::{DEFAULT_REFINE_TOL, DEFAULT_STEP};
use wgscat_core::{GeometryFamily, GuideProblem, Margins, SolveOptions};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "WGSCAT_OUT";
pub const DEFAULT_OUT: &str = "wgscat-out";
/// Tail of the staircase guide when no heights are given.
pub const DEFAULT_TAIL: [f64; 4] = [2.5, 2.0, 1.5, 1.0];
/// Grid samples per `ell` for field exports.
pub const SAMPLES_PER_ELL: f64 = 10.0;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ValidationError(pub String);

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Omega,
    Staircase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// Full-guide field with the piston mode incident from the left.
    Scattering,
    /// Packet-incident solution of the augmented half-guide problem.
    Trapped,
}

/// Every parameter of a run. Unset options are filled in by [`RunConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub k: f64,
    pub geometry: GeometryKind,
    /// Staircase tail heights, decreasing to 1.
    pub heights: Vec<f64>,
    #[serde(rename = "L")]
    pub branch_height: Option<f64>,
    pub h: Option<f64>,
    pub dtn_terms: usize,
    pub corner_grading: usize,
    /// Scale of the default truncation margins.
    pub margin_factor: f64,
    pub range: Option<[f64; 2]>,
    pub step: f64,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Re-locate each peak on the refined mesh before accepting it.
    pub quality_gate: bool,
    pub mode: FieldMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 0.8 * PI,
            geometry: GeometryKind::Omega,
            heights: Vec::new(),
            branch_height: None,
            h: None,
            dtn_terms: DEFAULT_DTN_TERMS,
            corner_grading: DEFAULT_CORNER_GRADING,
            margin_factor: 1.0,
            range: None,
            step: DEFAULT_STEP,
            tol: DEFAULT_REFINE_TOL,
            out: None,
            seed: 0,
            threads: None,
            quality_gate: true,
            mode: FieldMode::Scattering,
        }
    }
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON config file; flags take precedence over its entries.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Wavenumber, 0 < k < pi [default: 0.8 pi].
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryKind>,
    /// Branch height for single solves.
    #[arg(long = "L", value_name = "L")]
    pub branch_height: Option<f64>,
    /// Staircase tail heights [default: 2.5,2.0,1.5,1.0].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub heights: Option<Vec<f64>>,
    /// Element size [default: ell / 20].
    #[arg(long)]
    pub h: Option<f64>,
    /// Modal terms per port.
    #[arg(long)]
    pub dtn_terms: Option<usize>,
    /// Levels of mesh grading toward the steps.
    #[arg(long)]
    pub corner_grading: Option<usize>,
    /// Sweep range START,END of the branch height.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub range: Option<Vec<f64>>,
    /// Sweep step in L.
    #[arg(long)]
    pub step: Option<f64>,
    /// Refinement tolerance in L.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Scale of the default truncation margins.
    #[arg(long)]
    pub margin_factor: Option<f64>,
    /// Output directory [default: $WGSCAT_OUT, else wgscat-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub threads: Option<usize>,
    /// Recorded for provenance; every computation is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accept refined peaks without re-locating them on the refined mesh.
    #[arg(long)]
    pub no_quality_gate: bool,
}

impl ConfigArgs {
    /// Defaults, then the config file, then the flags.
    pub fn load(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => read_config(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$target = v; })*
            };
        }
        set!(k => k, geometry => geometry, heights => heights, dtn_terms => dtn_terms,
             corner_grading => corner_grading, step => step, tol => tol,
             margin_factor => margin_factor, seed => seed);
        if self.branch_height.is_some() {
            cfg.branch_height = self.branch_height;
        }
        if self.h.is_some() {
            cfg.h = self.h;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if let Some(r) = &self.range {
            let [a, b] = r[..] else {
                return Err(invalid(format!("--range needs START,END, got {} values", r.len())));
            };
            cfg.range = Some([a, b]);
        }
        if self.no_quality_gate {
            cfg.quality_gate = false;
        }
        Ok(cfg)
    }
}

fn read_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))
}

/// What a command needs from the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Needs {
    /// Default sweep range, `None` when the command does not sweep.
    pub sweep: Option<[f64; 2]>,
    /// Minimum number of sweep points.
    pub min_points: usize,
    pub single_height: bool,
}

impl RunConfig {
    pub fn ell(&self) -> f64 {
        PI / self.k
    }

    pub fn family(&self) -> GeometryFamily {
        match self.geometry {
            GeometryKind::Omega => GeometryFamily::Omega { k: self.k },
            GeometryKind::Staircase => GeometryFamily::Staircase {
                k: self.k,
                tail_heights: self.heights.clone(),
            },
        }
    }

    pub fn margins(&self) -> Margins {
        Margins::for_ell(self.ell()).scaled(self.margin_factor)
    }

    /// Solver options; call after [`RunConfig::resolve`].
    pub fn solve_options(&self) -> SolveOptions {
        let base = SolveOptions::new(self.k)
            .with_dtn_terms(self.dtn_terms)
            .with_margins(self.margins())
            .with_corner_grading(self.corner_grading);
        match self.h {
            Some(h) => base.with_h(h),
            None => base,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn range(&self) -> [f64; 2] {
        self.range.unwrap_or([0.0, 0.0])
    }

    /// Fills every default and checks every field against the solver
    /// preconditions, including a trial truncation of the geometry.
    pub fn resolve(mut self, needs: Needs) -> anyhow::Result<Self> {
        if !(self.k.is_finite() && self.k > 0.0 && self.k < PI) {
            return Err(invalid(format!(
                "k = {} is outside (0, pi): the strip must carry exactly one propagating mode",
                self.k
            )));
        }
        let ell = self.ell();
        match self.geometry {
            GeometryKind::Omega if !self.heights.is_empty() => {
                return Err(invalid("--heights only applies to --geometry staircase"));
            }
            GeometryKind::Staircase if self.heights.is_empty() => self.heights = DEFAULT_TAIL.to_vec(),
            _ => {}
        }
        let h = self.h.unwrap_or(ell / DEFAULT_ELEMENTS_PER_ELL);
        if !(h.is_finite() && h > 0.0 && h <= 0.5) {
            return Err(invalid(format!("element size h = {h} must lie in (0, 0.5]")));
        }
        self.h = Some(h);
        if self.dtn_terms < 2 {
            return Err(invalid(format!("--dtn-terms = {} must be at least 2", self.dtn_terms)));
        }
        if !(self.margin_factor.is_finite() && self.margin_factor > 0.0) {
            return Err(invalid(format!("--margin-factor = {} must be positive", self.margin_factor)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0 && self.tol < 0.1) {
            return Err(invalid(format!("--tol = {} must lie in (0, 0.1)", self.tol)));
        }
        if self.threads == Some(0) {
            return Err(invalid("--threads must be at least 1"));
        }
        if self.out.is_none() {
            self.out = Some(std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from));
        }

        let mut probe = None;
        if let Some(default) = needs.sweep {
            let [a, b] = self.range.unwrap_or(default);
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(invalid(format!("empty sweep range [{a}, {b}]: need START < END")));
            }
            if a <= 1.0 {
                return Err(invalid(format!("sweep range starts at L = {a}: the branch height must exceed 1")));
            }
            if !(self.step.is_finite() && self.step > 0.0) {
                return Err(invalid(format!("--step = {} must be positive", self.step)));
            }
            let points = ((b - a) / self.step + 1e-9).floor() as usize + 1;
            if points < needs.min_points {
                return Err(invalid(format!(
                    "range [{a}, {b}] with step {} gives {points} points, need at least {}",
                    self.step, needs.min_points
                )));
            }
            self.range = Some([a, b]);
            probe = Some(a);
        }
        if needs.single_height {
            let l = self
                .branch_height
                .ok_or_else(|| invalid("this command needs the branch height --L"))?;
            probe = Some(l);
        }
        if let Some(l) = probe {
            let geom = self.family().at(l).map_err(|e| invalid(e.to_string()))?;
            truncate(&GuideProblem::Full(geom), self.margins()).map_err(|e| invalid(e.to_string()))?;
        }
        Ok(self)
    }
}
