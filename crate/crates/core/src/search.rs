//! Parameter sweeps over the branch height and refinement of the special
//! points (invisibility, perfect reflection, trapped modes).

use log::{debug, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WaveguideGeometry;
use crate::scattering::{augmented, combine, half_coefficients, AugmentedMatrix, SolveOptions};

/// Family of geometries parametrized by the branch height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryFamily {
    Omega { k: f64 },
    Staircase { k: f64, tail_heights: Vec<f64> },
}

impl GeometryFamily {
    pub fn k(&self) -> f64 {
        match self {
            Self::Omega { k } | Self::Staircase { k, .. } => *k,
        }
    }

    pub fn at(&self, branch_height: f64) -> Result<WaveguideGeometry> {
        match self {
            Self::Omega { k } => WaveguideGeometry::omega(*k, branch_height),
            Self::Staircase { k, tail_heights } => WaveguideGeometry::staircase(*k, branch_height, tail_heights),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    T,
    R,
    #[serde(rename = "r")]
    HalfNeumann,
    #[serde(rename = "Rh")]
    HalfDirichlet,
    #[serde(rename = "s22")]
    S22,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Self::T => "T",
            Self::R => "R",
            Self::HalfNeumann => "r",
            Self::HalfDirichlet => "Rh",
            Self::S22 => "s22",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "L")]
    pub branch_height: f64,
    pub quantity: Quantity,
    pub value: Option<Complex64>,
    /// Energy residual for `T`/`R`, modulus residual for `r`/`Rh`,
    /// unitarity residual for `s22`.
    pub residual: Option<f64>,
    pub error: Option<String>,
}

/// `n` points `start, start + step, ...` not exceeding `end`.
pub fn grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start.is_finite() && end >= start) {
        return Err(Error::InvalidArgument(format!("bad range [{start}, {end}] with step {step}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn failed(branch_height: f64, quantity: Quantity, err: &Error) -> SweepRecord {
    SweepRecord {
        branch_height,
        quantity,
        value: None,
        residual: None,
        error: Some(err.to_string()),
    }
}

fn evaluate(family: &GeometryFamily, branch_height: f64, quantities: &[Quantity], opts: &SolveOptions) -> Vec<SweepRecord> {
    let geom = match family.at(branch_height) {
        Ok(g) => g,
        Err(e) => return quantities.iter().map(|&q| failed(branch_height, q, &e)).collect(),
    };
    let needs_half = quantities.iter().any(|q| *q != Quantity::S22);
    let half = needs_half.then(|| half_coefficients(&geom, opts));
    let aug = quantities.contains(&Quantity::S22).then(|| augmented(&geom, opts));
    quantities
        .iter()
        .map(|&q| {
            let ok = |value: Complex64, residual: f64| SweepRecord {
                branch_height,
                quantity: q,
                value: Some(value),
                residual: Some(residual),
                error: None,
            };
            if q == Quantity::S22 {
                return match aug.as_ref().unwrap() {
                    Ok(s) => ok(s.s(2, 2), s.unitarity_residual),
                    Err(e) => failed(branch_height, q, e),
                };
            }
            match half.as_ref().unwrap() {
                Ok(h) => {
                    let pair = combine(family.k(), branch_height, h.r, h.rh);
                    match q {
                        Quantity::T => ok(pair.transmission, pair.energy_residual),
                        Quantity::R => ok(pair.reflection, pair.energy_residual),
                        Quantity::HalfNeumann => ok(h.r, h.r_modulus_residual),
                        _ => ok(h.rh, h.rh_modulus_residual),
                    }
                }
                Err(e) => failed(branch_height, q, e),
            }
        })
        .collect()
}

/// Evaluates `quantities` at every branch height in parallel. Failures are
/// recorded per point instead of aborting; records are sorted by height,
/// then by the order of `quantities`.
pub fn sweep(
    family: &GeometryFamily,
    heights: &[f64],
    quantities: &[Quantity],
    opts: &SolveOptions,
) -> Result<Vec<SweepRecord>> {
    opts.validate()?;
    if quantities.is_empty() {
        return Err(Error::InvalidArgument("no quantity requested".into()));
    }
    let mut records: Vec<(f64, Vec<SweepRecord>)> = heights
        .par_iter()
        .map(|&l| (l, evaluate(family, l, quantities, opts)))
        .collect();
    records.sort_by(|a, b| a.0.total_cmp(&b.0));
    let records: Vec<SweepRecord> = records.into_iter().flat_map(|(_, r)| r).collect();
    for r in records.iter().filter(|r| r.error.is_some()) {
        warn!("L = {}: {} failed: {}", r.branch_height, r.quantity.name(), r.error.as_deref().unwrap_or(""));
    }
    Ok(records)
}

/// Augmented matrix at one branch height, or the reason it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    #[serde(rename = "L")]
    pub branch_height: f64,
    pub matrix: Option<AugmentedMatrix>,
    pub error: Option<String>,
}

impl MatrixRecord {
    /// The `s22` entry as a sweep record.
    pub fn s22_record(&self) -> SweepRecord {
        SweepRecord {
            branch_height: self.branch_height,
            quantity: Quantity::S22,
            value: self.matrix.as_ref().map(|m| m.s(2, 2)),
            residual: self.matrix.as_ref().map(|m| m.unitarity_residual),
            error: self.error.clone(),
        }
    }
}

/// Full augmented matrices over `heights`, evaluated in parallel and sorted by height.
pub fn augmented_sweep(family: &GeometryFamily, heights: &[f64], opts: &SolveOptions) -> Result<Vec<MatrixRecord>> {
    opts.validate()?;
    let mut records: Vec<MatrixRecord> = heights
        .par_iter()
        .map(|&l| match family.at(l).and_then(|g| augmented(&g, opts)) {
            Ok(m) => MatrixRecord {
                branch_height: l,
                matrix: Some(m),
                error: None,
            },
            Err(e) => {
                warn!("L = {l}: augmented matrix failed: {e}");
                MatrixRecord {
                    branch_height: l,
                    matrix: None,
                    error: Some(e.to_string()),
                }
            }
        })
        .collect();
    records.sort_by(|a, b| a.branch_height.total_cmp(&b.branch_height));
    Ok(records)
}

/// Special points located by minimizing a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// `T = 1`: invisibility.
    #[serde(rename = "T_eq_1")]
    TEqOne,
    /// `R = 1`: perfect reflection.
    #[serde(rename = "R_eq_1")]
    REqOne,
    /// `s22 = -1`: trapped mode.
    #[serde(rename = "s22_eq_minus1")]
    S22EqMinusOne,
}

impl Target {
    pub fn quantity(self) -> Quantity {
        match self {
            Self::TEqOne => Quantity::T,
            Self::REqOne => Quantity::R,
            Self::S22EqMinusOne => Quantity::S22,
        }
    }

    pub fn distance(self, value: Complex64) -> f64 {
        match self {
            Self::TEqOne | Self::REqOne => (value - 1.0).norm(),
            Self::S22EqMinusOne => (value + 1.0).norm(),
        }
    }

    fn objective(self, family: &GeometryFamily, branch_height: f64, opts: &SolveOptions) -> Result<(f64, Complex64)> {
        let geom = family.at(branch_height)?;
        let value = match self {
            Self::S22EqMinusOne => augmented(&geom, opts)?.s(2, 2),
            Self::TEqOne | Self::REqOne => {
                let h = half_coefficients(&geom, opts)?;
                let pair = combine(family.k(), branch_height, h.r, h.rh);
                if self == Self::TEqOne {
                    pair.transmission
                } else {
                    pair.reflection
                }
            }
        };
        Ok((self.distance(value), value))
    }
}

/// Indices (into `records`) of strict interior local minima of the target
/// distance (maxima of `-ln distance`) over the successful records of the
/// target quantity.
pub fn detect_peaks(records: &[SweepRecord], target: Target) -> Vec<usize> {
    let series: Vec<(usize, f64)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.quantity == target.quantity())
        .filter_map(|(i, r)| r.value.map(|v| (i, target.distance(v))))
        .collect();
    series
        .windows(3)
        .filter(|w| w[1].1 < w[0].1 && w[1].1 < w[2].1)
        .map(|w| w[1].0)
        .collect()
}

/// Brackets `(lo, hi)` around each detected minimum, from its neighbours.
pub fn brackets(records: &[SweepRecord], target: Target) -> Vec<(f64, f64)> {
    let heights: Vec<f64> = records
        .iter()
        .filter(|r| r.quantity == target.quantity() && r.value.is_some())
        .map(|r| r.branch_height)
        .collect();
    detect_peaks(records, target)
        .into_iter()
        .filter_map(|i| {
            let l = records[i].branch_height;
            let pos = heights.iter().position(|&x| x == l)?;
            Some((heights[pos - 1], heights[pos + 1]))
        })
        .collect()
}

/// Default golden-section interval width in `L`.
pub const DEFAULT_REFINE_TOL: f64 = 1e-4;
/// Default sweep step in `L`.
pub const DEFAULT_STEP: f64 = 0.02;
/// Distance to the target below which a refined minimum is a special point.
pub const ACCEPT_DISTANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedPoint {
    pub target: Target,
    #[serde(rename = "L")]
    pub branch_height: f64,
    pub value: Complex64,
    pub distance: f64,
    pub iterations: usize,
}

/// Golden-section search for a minimum of `f(x).0` on `bracket`, stopped when
/// the interval is narrower than `tol`. Returns the best abscissa, its value
/// and the iteration count. A minimum within `2 tol` of an endpoint is an
/// error: the bracket held no interior minimum.
pub fn golden_section<T: Clone>(
    mut f: impl FnMut(f64) -> Result<(f64, T)>,
    bracket: (f64, f64),
    tol: f64,
) -> Result<(f64, (f64, T), usize)> {
    let (mut a, mut b) = bracket;
    if !(a < b && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bad bracket [{a}, {b}] with tol {tol}")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while b - a > tol && iterations < 200 {
        iterations += 1;
        if f1.0 < f2.0 {
            b = x2;
            x2 = x1;
            f2 = f1.clone();
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2.clone();
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let (x, best) = if f1.0 < f2.0 { (x1, f1) } else { (x2, f2) };
    let edge = 2.0 * tol;
    if x - bracket.0 < edge || bracket.1 - x < edge {
        return Err(Error::Search(format!(
            "minimum at the bracket endpoint {x} of [{}, {}]",
            bracket.0, bracket.1
        )));
    }
    Ok((x, best, iterations))
}

/// Minimizes the target distance on `bracket`; each evaluation is a fresh solve.
pub fn refine(
    family: &GeometryFamily,
    target: Target,
    bracket: (f64, f64),
    opts: &SolveOptions,
    tol: f64,
) -> Result<RefinedPoint> {
    let (l, (distance, value), iterations) =
        golden_section(|l| target.objective(family, l, opts), bracket, tol)
            .map_err(|e| Error::Search(format!("{target:?}: {e}")))?;
    debug!("{target:?}: L = {l}, distance {distance:e} after {iterations} iterations");
    Ok(RefinedPoint {
        target,
        branch_height: l,
        value,
        distance,
        iterations,
    })
}

/// Outcome of re-locating a refined point on a mesh with half the element size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityGate {
    /// Height of the point on the default mesh.
    #[serde(rename = "L")]
    pub branch_height: f64,
    pub accepted: bool,
    /// The point found with `h / 2`, if any.
    pub refined_mesh: Option<RefinedPoint>,
    /// `|L(h) - L(h/2)|`
    pub shift: Option<f64>,
}

/// Accepts `point` when its distance is below [`ACCEPT_DISTANCE`] and the
/// same minimum, searched within `max_shift` on the mesh refined once,
/// also reaches the target with a shift below `max_shift`. Discretization
/// artifacts do not survive the refinement. The refined search uses at most
/// [`DEFAULT_REFINE_TOL`], so that a loose `tol` cannot reject a sharp peak.
pub fn quality_gate(
    family: &GeometryFamily,
    point: &RefinedPoint,
    opts: &SolveOptions,
    tol: f64,
    max_shift: f64,
) -> QualityGate {
    if point.distance >= ACCEPT_DISTANCE {
        return QualityGate {
            branch_height: point.branch_height,
            accepted: false,
            refined_mesh: None,
            shift: None,
        };
    }
    let l = point.branch_height;
    let bracket = (l - 2.0 * max_shift, l + 2.0 * max_shift);
    let fine = refine(family, point.target, bracket, &opts.refined(), tol.min(DEFAULT_REFINE_TOL)).ok();
    let shift = fine.as_ref().map(|p| (p.branch_height - l).abs());
    QualityGate {
        branch_height: l,
        accepted: fine.as_ref().is_some_and(|p| p.distance < ACCEPT_DISTANCE) && shift.is_some_and(|s| s < max_shift),
        refined_mesh: fine,
        shift,
    }
}

/// Refined special points of one target, with their spacing statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub target: Target,
    /// Every refined minimum, accepted or not.
    pub candidates: Vec<RefinedPoint>,
    /// Heights of the minima with distance below [`ACCEPT_DISTANCE`].
    pub peaks: Vec<f64>,
    pub spacings: Option<SpacingStats>,
}

/// Refines every bracket of `records` for `target` (brackets in parallel)
/// and collects the accepted points. Failed refinements are logged and skipped.
pub fn peak_set(
    family: &GeometryFamily,
    records: &[SweepRecord],
    target: Target,
    opts: &SolveOptions,
    tol: f64,
    predicted_period: Option<f64>,
) -> PeakSet {
    let found: Vec<Result<RefinedPoint>> = brackets(records, target)
        .into_par_iter()
        .map(|br| refine(family, target, br, opts, tol))
        .collect();
    let mut candidates = Vec::new();
    for p in found {
        match p {
            Ok(p) => candidates.push(p),
            Err(e) => warn!("{e}"),
        }
    }
    candidates.sort_by(|a, b| a.branch_height.total_cmp(&b.branch_height));
    let peaks: Vec<f64> = candidates
        .iter()
        .filter(|p| p.distance < ACCEPT_DISTANCE)
        .map(|p| p.branch_height)
        .collect();
    let spacings = spacing_stats(&peaks, predicted_period).ok();
    PeakSet {
        target,
        candidates,
        peaks,
        spacings,
    }
}

/// Sweeps `heights`, then refines every detected minimum.
pub fn find_points(
    family: &GeometryFamily,
    target: Target,
    heights: &[f64],
    opts: &SolveOptions,
    tol: f64,
) -> Result<Vec<RefinedPoint>> {
    let records = sweep(family, heights, &[target.quantity()], opts)?;
    Ok(peak_set(family, &records, target, opts, tol, None).candidates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingStats {
    pub spacings: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
    /// `(mean - predicted) / predicted`
    pub deviation_from_predicted: Option<f64>,
}

/// Spacings between consecutive sorted heights, compared with `predicted`.
pub fn spacing_stats(heights: &[f64], predicted: Option<f64>) -> Result<SpacingStats> {
    if heights.len() < 2 {
        return Err(Error::InvalidArgument("spacing needs at least two points".into()));
    }
    let mut sorted = heights.to_vec();
    sorted.sort_by(f64::total_cmp);
    let spacings: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let n = spacings.len() as f64;
    let mean = spacings.iter().sum::<f64>() / n;
    let var = spacings.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok(SpacingStats {
        spacings,
        mean,
        std_dev: var.sqrt(),
        deviation_from_predicted: predicted.map(|p| (mean - p) / p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(l: f64, v: f64) -> SweepRecord {
        SweepRecord {
            branch_height: l,
            quantity: Quantity::T,
            value: Some(Complex64::new(v, 0.0)),
            residual: Some(0.0),
            error: None,
        }
    }

    #[test]
    fn grid_and_spacings() {
        let g = grid(1.3, 8.0, 0.05).unwrap();
        assert_eq!(g.len(), 135);
        assert!((g.last().unwrap() - 8.0).abs() < 1e-12);
        assert!(grid(1.0, 0.0, 0.1).is_err());
        let s = spacing_stats(&[3.0, 1.0, 2.0, 4.5], None).unwrap();
        assert_eq!(s.spacings, vec![1.0, 1.0, 1.5]);
        assert!((s.mean - 3.5 / 3.0).abs() < 1e-15);
        let arithmetic: Vec<f64> = (0..6).map(|i| 1.3 + 1.25 * i as f64).collect();
        let s = spacing_stats(&arithmetic, Some(1.25)).unwrap();
        assert!(s.deviation_from_predicted.unwrap().abs() < 1e-14 && s.std_dev < 1e-14);
        assert!(spacing_stats(&[1.0], None).is_err());
    }

    #[test]
    fn minima_of_synthetic_series() {
        let recs: Vec<SweepRecord> = [0.5, 0.2, 0.4, 0.9, 0.95, 0.3, 0.6]
            .iter()
            .enumerate()
            .map(|(i, &v)| record(i as f64, 1.0 - v))
            .collect();
        assert_eq!(detect_peaks(&recs, Target::TEqOne), vec![1, 5]);
        assert_eq!(brackets(&recs, Target::TEqOne), vec![(0.0, 2.0), (4.0, 6.0)]);
        assert!(detect_peaks(&recs, Target::S22EqMinusOne).is_empty());
    }

    #[test]
    fn golden_section_on_analytic_minimum() {
        let k = 0.8 * std::f64::consts::PI;
        let f = |l: f64| Ok(((k * l).cos() + 1.0, ()));
        let (l, (v, ()), _) = golden_section(f, (1.0, 1.5), 1e-4).unwrap();
        assert!((l - std::f64::consts::PI / k).abs() < 1e-4);
        assert!(v < 1e-7);
        assert!(golden_section(|l: f64| Ok((l, ())), (0.0, 1.0), 1e-4).is_err());
        assert!(golden_section(|l: f64| Ok((l, ())), (1.0, 0.0), 1e-4).is_err());
    }

    #[test]
    fn monotone_data_has_no_peaks() {
        let recs: Vec<SweepRecord> = (0..10).map(|i| record(i as f64, 0.1 * i as f64)).collect();
        assert!(detect_peaks(&recs, Target::TEqOne).is_empty());
        assert!(detect_peaks(&recs[..2], Target::TEqOne).is_empty());
    }

    #[test]
    fn quantity_names_serialize() {
        assert_eq!(serde_json::to_string(&Quantity::HalfDirichlet).unwrap(), "\"Rh\"");
        assert_eq!(serde_json::to_string(&Quantity::S22).unwrap(), "\"s22\"");
        assert_eq!(serde_json::to_string(&Target::S22EqMinusOne).unwrap(), "\"s22_eq_minus1\"");
        let fam: GeometryFamily = serde_json::from_str(r#"{"kind":"omega","k":2.0}"#).unwrap();
        assert_eq!(fam, GeometryFamily::Omega { k: 2.0 });
    }

    #[test]
    fn failed_points_are_recorded() {
        let k = 0.8 * std::f64::consts::PI;
        let fam = GeometryFamily::Omega { k };
        let opts = SolveOptions::new(k).with_h(0.125);
        let recs = sweep(&fam, &[-1.0, 2.0], &[Quantity::T, Quantity::S22], &opts).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs[0].error.is_some() && recs[1].error.is_some());
        assert!(recs[2].value.is_some() && recs[3].value.is_some());
        assert!(refine(&fam, Target::TEqOne, (2.0, 1.0), &opts, 1e-6).is_err());
    }

    #[test]
    fn trapped_point_refines_inside_bracket() {
        let k = 0.8 * std::f64::consts::PI;
        let fam = GeometryFamily::Omega { k };
        let opts = SolveOptions::new(k).with_h(0.125);
        let p = refine(&fam, Target::S22EqMinusOne, (2.45, 2.65), &opts, 1e-6).unwrap();
        assert!((p.branch_height - 2.5524).abs() < 0.03, "{p:?}");
        assert!(p.distance < 1e-3, "{p:?}");
        // Monotone distance on this bracket: minimum at the endpoint.
        assert!(refine(&fam, Target::S22EqMinusOne, (2.6, 2.8), &opts, 1e-6).is_err());
    }
}
