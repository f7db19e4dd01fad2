//! The five experiments. Each resolves its configuration, runs the solves and
//! writes its files under `<out>/<experiment>/`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use log::info;
use rayon::prelude::*;
use serde::Serialize;
use wgscat_core::asymptotics::{
    decay_compare, identity_report, mobius_circle_2, predicted_periods, r_asy, s22_asy, threshold_weight, DecayFit,
    MobiusCircle, Periods,
};
use wgscat_core::modal::{branch_gamma, strip_beta};
use wgscat_core::scattering::{
    limit_mixed, limit_neumann, solve_full_field, trapped_candidate, unfold, Parity, TrappedCandidate,
};
use wgscat_core::search::{
    augmented_sweep, grid, peak_set, quality_gate, spacing_stats, sweep, MatrixRecord, QualityGate, ACCEPT_DISTANCE,
};
use wgscat_core::solver::{GridSpec, SolveDiagnostics};
use wgscat_core::{
    Complex64, ComplexField, GeometryFamily, LimitGeometry, PeakSet, Quantity, ScatteringMatrix, ScatteringPair,
    SolveOptions, SweepRecord, SymmetryBc, Target,
};

use crate::config::{ConfigArgs, FieldMode, Needs, RunConfig, ValidationError, SAMPLES_PER_ELL};
use crate::output::{complex_cells, ensure_dir, field_table, num, opt, write_json, Table};
use crate::svg::{panels, Heatmap, Plot, Series, PALETTE};

/// Every solve of a run failed.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct SolverFailure(pub String);

struct Run {
    cfg: RunConfig,
    opts: SolveOptions,
    dir: PathBuf,
}

fn prepare(args: &ConfigArgs, needs: Needs, subdir: &str, mode: Option<FieldMode>) -> anyhow::Result<Run> {
    let mut cfg = args.load()?;
    if let Some(m) = mode {
        cfg.mode = m;
    }
    let cfg = cfg.resolve(needs)?;
    let opts = cfg.solve_options();
    opts.validate().map_err(|e| ValidationError(e.to_string()))?;
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    let dir = ensure_dir(&cfg.out_dir().join(subdir))?;
    info!("writing to {}", dir.display());
    Ok(Run { cfg, opts, dir })
}

fn sweep_needs(default: [f64; 2], min_points: usize) -> Needs {
    Needs {
        sweep: Some(default),
        min_points,
        single_height: false,
    }
}

fn heights(cfg: &RunConfig) -> anyhow::Result<Vec<f64>> {
    let [a, b] = cfg.range();
    Ok(grid(a, b, cfg.step)?)
}

fn write_svg(path: &Path, svg: String) -> anyhow::Result<()> {
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}

fn point(z: Option<Complex64>) -> Option<[f64; 2]> {
    z.map(|z| [z.re, z.im])
}

/// `-ln |z - target|`, `None` when undefined.
fn neg_ln_distance(z: Option<Complex64>, target: f64) -> Option<f64> {
    z.map(|z| -(z - target).norm().ln()).filter(|v| v.is_finite())
}

fn require_success<T>(items: &[T], ok: impl Fn(&T) -> bool, what: &str) -> anyhow::Result<()> {
    if items.iter().any(ok) {
        Ok(())
    } else {
        Err(SolverFailure(format!("every {what} solve failed; see the warnings above")).into())
    }
}

/// Peaks of one target after refinement and, if enabled, the quality gate.
#[derive(Debug, Serialize)]
struct TargetReport {
    #[serde(flatten)]
    set: PeakSet,
    quality_gates: Vec<QualityGate>,
}

fn peak_report(
    family: &GeometryFamily,
    records: &[SweepRecord],
    target: Target,
    run: &Run,
    period: Option<f64>,
) -> TargetReport {
    let mut set = peak_set(family, records, target, &run.opts, run.cfg.tol, period);
    let mut gates = Vec::new();
    if run.cfg.quality_gate {
        gates = set
            .candidates
            .par_iter()
            .filter(|p| p.distance < ACCEPT_DISTANCE)
            .map(|p| quality_gate(family, p, &run.opts, run.cfg.tol, run.cfg.step))
            .collect();
        set.peaks = gates.iter().filter(|g| g.accepted).map(|g| g.branch_height).collect();
        set.spacings = spacing_stats(&set.peaks, period).ok();
    }
    TargetReport {
        set,
        quality_gates: gates,
    }
}

fn print_peaks(report: &TargetReport) {
    let name = serde_json::to_string(&report.set.target).unwrap_or_default();
    println!(
        "{name}: {} candidates, {} accepted",
        report.set.candidates.len(),
        report.set.peaks.len()
    );
    for l in &report.set.peaks {
        println!("  L = {l:.5}");
    }
    if let Some(s) = &report.set.spacings {
        match s.deviation_from_predicted {
            Some(d) => println!("  mean spacing {:.4} ({:+.2}% from prediction)", s.mean, 100.0 * d),
            None => println!("  mean spacing {:.4}", s.mean),
        }
    }
}

fn unit_circle(plot: Plot) -> Plot {
    plot.with_circle("|z| = 1", [0.0, 0.0], 1.0, "#7f7f7f")
}

fn complex_curve(title: &str, label: &str, values: &[Option<Complex64>]) -> Plot {
    unit_circle(Plot::new(title, "Re", "Im").equal_aspect())
        .with_series(Series::new(label, values.iter().map(|z| point(*z)).collect(), PALETTE[0]).with_markers())
}

fn log_plot(title: &str, y_label: &str, heights: &[f64], values: &[Option<f64>]) -> Plot {
    let points = heights.iter().zip(values).map(|(l, v)| v.map(|v| [*l, v])).collect();
    Plot::new(title, "L", y_label).with_series(Series::new("", points, PALETTE[0]))
}

#[derive(Serialize)]
struct SweepBody<'a> {
    predicted_periods: Periods,
    targets: Vec<TargetReport>,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    trapped_modes: &'a [TrappedSummary],
}

pub fn sweep_invisibility(args: &ConfigArgs) -> anyhow::Result<()> {
    let run = prepare(args, sweep_needs([1.3, 8.0], 3), "invisibility", None)?;
    let family = run.cfg.family();
    let hs = heights(&run.cfg)?;
    println!("sweeping T and R over {} heights", hs.len());
    let records = sweep(&family, &hs, &[Quantity::T, Quantity::R], &run.opts)?;
    require_success(&records, |r| r.value.is_some(), "half-guide")?;
    let periods = predicted_periods(run.cfg.k)?;

    let mut table = Table::new(&["L", "T_re", "T_im", "R_re", "R_im", "energy_residual", "neg_ln_abs_T_minus_1", "error"]);
    let (mut t_values, mut r_values) = (Vec::new(), Vec::new());
    for pair in records.chunks(2) {
        let (t, r) = (&pair[0], &pair[1]);
        let [tr, ti] = complex_cells(t.value);
        let [rr, ri] = complex_cells(r.value);
        table.row(&[
            num(t.branch_height),
            tr,
            ti,
            rr,
            ri,
            opt(t.residual),
            opt(neg_ln_distance(t.value, 1.0)),
            t.error.clone().unwrap_or_default(),
        ]);
        t_values.push(t.value);
        r_values.push(r.value);
    }
    table.write(&run.dir.join("sweep.csv"))?;

    let targets: Vec<TargetReport> = [Target::TEqOne, Target::REqOne]
        .into_iter()
        .map(|t| peak_report(&family, &records, t, &run, Some(periods.invisibility)))
        .collect();
    targets.iter().for_each(print_peaks);
    write_json(
        &run.dir.join("peaks.json"),
        "sweep-invisibility",
        &run.cfg,
        SweepBody {
            predicted_periods: periods,
            targets,
            trapped_modes: &[],
        },
    )?;

    let half = |p: Plot| p.with_circle("|z - 1/2| = 1/2", [0.5, 0.0], 0.5, "#bcbd22");
    write_svg(&run.dir.join("T_curve.svg"), half(complex_curve("T(L)", "T", &t_values)).to_svg())?;
    write_svg(&run.dir.join("R_curve.svg"), half(complex_curve("R(L)", "R", &r_values)).to_svg())?;
    let neg_ln = |vals: &[Option<Complex64>]| vals.iter().map(|z| neg_ln_distance(*z, 1.0)).collect::<Vec<_>>();
    write_svg(
        &run.dir.join("neg_ln_T.svg"),
        log_plot("-ln|T - 1|", "-ln|T - 1|", &hs, &neg_ln(&t_values)).to_svg(),
    )?;
    write_svg(
        &run.dir.join("neg_ln_R.svg"),
        log_plot("-ln|R - 1|", "-ln|R - 1|", &hs, &neg_ln(&r_values)).to_svg(),
    )?;
    println!("wrote {}", run.dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct TrappedSummary {
    #[serde(rename = "L")]
    branch_height: f64,
    s22: Complex64,
    outgoing_piston_amplitude: Complex64,
    tail_decay_rate: f64,
    /// Decay rate of the first evanescent strip mode.
    beta: f64,
    fit_window: (f64, f64),
    diagnostics: SolveDiagnostics,
    files: Vec<String>,
}

/// Grid with [`SAMPLES_PER_ELL`] samples per `ell` over the bounding box of the mesh.
fn sampling_grid(field: &ComplexField, ell: f64) -> GridSpec {
    let v = field.mesh.vertices();
    let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
    for p in v {
        x = (x.0.min(p[0]), x.1.max(p[0]));
        y = (y.0.min(p[1]), y.1.max(p[1]));
    }
    GridSpec::with_density(x.0, x.1, y.0, y.1, SAMPLES_PER_ELL / ell)
}

/// Heatmap suffix, title and the real quantity plotted.
type FieldMap<'a> = (&'a str, &'a str, &'a dyn Fn([f64; 2], Complex64) -> f64);

/// Writes `<stem>.csv` and one heatmap per `(suffix, title, part)`.
fn export_field(
    dir: &Path,
    stem: &str,
    field: &ComplexField,
    ell: f64,
    maps: &[FieldMap],
) -> anyhow::Result<Vec<String>> {
    let grid = sampling_grid(field, ell);
    let values = field.eval_on_grid(&grid);
    let mut files = vec![format!("{stem}.csv")];
    field_table(&grid, &values).write(&dir.join(&files[0]))?;
    for (suffix, title, part) in maps {
        let scalar = values
            .iter()
            .enumerate()
            .map(|(n, v)| v.map(|v| part(grid.point(n % grid.nx, n / grid.nx), v)))
            .collect();
        let name = format!("{stem}_{suffix}.svg");
        let map = Heatmap {
            title: title.to_string(),
            grid: &grid,
            values: scalar,
        };
        write_svg(&dir.join(&name), map.to_svg())?;
        files.push(name);
    }
    Ok(files)
}

fn export_trapped(dir: &Path, cand: &TrappedCandidate, geom_l: f64, cfg: &RunConfig) -> anyhow::Result<TrappedSummary> {
    let ell = cfg.ell();
    let re: &dyn Fn([f64; 2], Complex64) -> f64 = &|_, v| v.re;
    let im: &dyn Fn([f64; 2], Complex64) -> f64 = &|_, v| v.im;
    let mut files = export_field(dir, "half", &cand.field, ell, &[])?;
    let unfolded = unfold(&cand.field, Parity::Even)?;
    files.extend(export_field(
        dir,
        "unfolded",
        &unfolded,
        ell,
        &[
            ("re", &format!("Re u, L = {geom_l:.4}"), re),
            ("im", &format!("Im u, L = {geom_l:.4}"), im),
        ],
    )?);
    Ok(TrappedSummary {
        branch_height: geom_l,
        s22: cand.s22,
        outgoing_piston_amplitude: cand.outgoing_piston_amplitude,
        tail_decay_rate: cand.tail_decay_rate,
        beta: strip_beta(cfg.k),
        fit_window: cand.fit_window,
        diagnostics: cand.diagnostics.clone(),
        files,
    })
}

pub fn sweep_trapped(args: &ConfigArgs) -> anyhow::Result<()> {
    let run = prepare(args, sweep_needs([1.3, 8.0], 3), "trapped", None)?;
    let family = run.cfg.family();
    let hs = heights(&run.cfg)?;
    println!("sweeping the augmented matrix over {} heights", hs.len());
    let matrices: Vec<MatrixRecord> = augmented_sweep(&family, &hs, &run.opts)?;
    require_success(&matrices, |m| m.matrix.is_some(), "augmented")?;
    let periods = predicted_periods(run.cfg.k)?;

    let entry = |m: &MatrixRecord, i, j| m.matrix.as_ref().map(|s| s.s(i, j));
    let idx = [(1, 1), (1, 2), (2, 1), (2, 2)];
    let mut columns = vec!["L".to_string()];
    for (i, j) in idx {
        columns.push(format!("s{i}{j}_re"));
        columns.push(format!("s{i}{j}_im"));
    }
    columns.extend(["unitarity_residual", "symmetry_residual", "neg_ln_abs_s22_plus_1", "error"].map(String::from));
    let mut table = Table::new(&columns);
    for m in &matrices {
        let mut row = vec![num(m.branch_height)];
        for (i, j) in idx {
            row.extend(complex_cells(entry(m, i, j)));
        }
        row.push(opt(m.matrix.as_ref().map(|s| s.unitarity_residual)));
        row.push(opt(m.matrix.as_ref().map(|s| s.symmetry_residual)));
        row.push(opt(neg_ln_distance(entry(m, 2, 2), -1.0)));
        row.push(m.error.clone().unwrap_or_default());
        table.row(&row);
    }
    table.write(&run.dir.join("sweep.csv"))?;

    let entry_plots: Vec<Plot> = idx
        .iter()
        .map(|&(i, j)| {
            let vals: Vec<Option<Complex64>> = matrices.iter().map(|m| entry(m, i, j)).collect();
            complex_curve(&format!("s{i}{j}(L)"), &format!("s{i}{j}"), &vals)
        })
        .collect();
    write_svg(&run.dir.join("s_ij.svg"), panels(&entry_plots, 2))?;
    let neg_ln: Vec<Option<f64>> = matrices.iter().map(|m| neg_ln_distance(entry(m, 2, 2), -1.0)).collect();
    write_svg(
        &run.dir.join("neg_ln_s22.svg"),
        log_plot("-ln|s22 + 1|", "-ln|s22 + 1|", &hs, &neg_ln).to_svg(),
    )?;

    let records: Vec<SweepRecord> = matrices.iter().map(MatrixRecord::s22_record).collect();
    let report = peak_report(&family, &records, Target::S22EqMinusOne, &run, Some(periods.trapped));
    print_peaks(&report);
    let mut modes = Vec::new();
    for (n, &l) in report.set.peaks.iter().enumerate() {
        let dir = ensure_dir(&run.dir.join(format!("mode_{n}")))?;
        let cand = trapped_candidate(&family.at(l)?, &run.opts)?;
        let summary = export_trapped(&dir, &cand, l, &run.cfg)?;
        println!(
            "  mode {n}: |outgoing piston| = {:.2e}, tail rate {:.4} (beta = {:.4})",
            summary.outgoing_piston_amplitude.norm(),
            summary.tail_decay_rate,
            summary.beta
        );
        modes.push(summary);
    }
    write_json(
        &run.dir.join("peaks.json"),
        "sweep-trapped",
        &run.cfg,
        SweepBody {
            predicted_periods: periods,
            targets: vec![report],
            trapped_modes: &modes,
        },
    )?;
    println!("wrote {}", run.dir.display());
    Ok(())
}

/// Limit geometry of the configured family; independent of `L`.
fn limit_geometry(cfg: &RunConfig, symmetry: SymmetryBc) -> anyhow::Result<LimitGeometry> {
    let top = cfg.heights.iter().copied().fold(1.0, f64::max);
    Ok(cfg.family().at(top + 1.0)?.limit(symmetry))
}

fn limit_pair(cfg: &RunConfig, opts: &SolveOptions) -> anyhow::Result<(ScatteringMatrix, ScatteringMatrix)> {
    let (mixed, neumann) = rayon::join(
        || limit_mixed(&limit_geometry(cfg, SymmetryBc::DirichletOnSigma)?, opts).map_err(anyhow::Error::from),
        || limit_neumann(&limit_geometry(cfg, SymmetryBc::NeumannOnSigma)?, opts).map_err(anyhow::Error::from),
    );
    Ok((mixed?, neumann?))
}

fn max_entry_change(a: &ScatteringMatrix, b: &ScatteringMatrix) -> f64 {
    a.entries
        .iter()
        .flatten()
        .zip(b.entries.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entry change when the margins are doubled. The packet channel
/// makes the Neumann matrix increasingly ill-conditioned as the left port
/// recedes, so this can fail or grow with the margins.
#[derive(Serialize)]
struct MarginCheck {
    margin_factor: f64,
    mixed_max_change: Option<f64>,
    neumann_max_change: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct LimitBody {
    mixed: ScatteringMatrix,
    neumann: ScatteringMatrix,
    identities: wgscat_core::asymptotics::IdentityReport,
    threshold_weight: Complex64,
    predicted_periods: Periods,
    margin_doubling: MarginCheck,
}

pub fn limit_matrices(args: &ConfigArgs) -> anyhow::Result<()> {
    let needs = Needs {
        sweep: None,
        min_points: 0,
        single_height: false,
    };
    let run = prepare(args, needs, "limits", None)?;
    let (mixed, neumann) = limit_pair(&run.cfg, &run.opts)?;
    let identities = identity_report(&mixed, &neumann)?;
    let doubled = run.opts.with_margins(run.cfg.margins().scaled(2.0));
    let check = match limit_pair(&run.cfg, &doubled) {
        Ok((mixed2, neumann2)) => MarginCheck {
            margin_factor: 2.0 * run.cfg.margin_factor,
            mixed_max_change: Some(max_entry_change(&mixed, &mixed2)),
            neumann_max_change: Some(max_entry_change(&neumann, &neumann2)),
            error: None,
        },
        Err(e) => MarginCheck {
            margin_factor: 2.0 * run.cfg.margin_factor,
            mixed_max_change: None,
            neumann_max_change: None,
            error: Some(format!("{e:#}")),
        },
    };

    println!("mixed 2x2: unitarity {:.2e}, symmetry {:.2e}, |S12| = {:.4}", identities.mixed_unitarity, identities.mixed_symmetry, identities.mixed_s12);
    if let Some(c) = identities.circle_2 {
        println!("  circle: center {:.2e}, radius {:.6}", c.center.norm(), c.radius);
    }
    println!(
        "Neumann 4x4: unitarity {:.2e}, symmetry {:.2e}, relations {:.2e}",
        identities.neumann_unitarity,
        identities.neumann_symmetry,
        identities.relations.iter().copied().fold(0.0, f64::max)
    );
    if let Some(p) = identities.abcd {
        println!("  |b + d^2| = {:.2e}", p.b_plus_d2);
    }
    if let Some(c) = identities.circle_4 {
        println!("  circle: center {:.2e}, radius {:.6}", c.center.norm(), c.radius);
    }
    match (check.mixed_max_change, check.neumann_max_change) {
        (Some(m), Some(n)) => println!("margin doubling changes entries by {m:.2e} (mixed), {n:.2e} (Neumann)"),
        _ => println!("margin doubling failed: {}", check.error.as_deref().unwrap_or("")),
    }
    for w in &identities.warnings {
        println!("warning: {w}");
    }
    write_json(
        &run.dir.join("limits.json"),
        "limit-matrices",
        &run.cfg,
        LimitBody {
            threshold_weight: threshold_weight(run.cfg.k),
            predicted_periods: predicted_periods(run.cfg.k)?,
            mixed,
            neumann,
            identities,
            margin_doubling: check,
        },
    )?;
    println!("wrote {}", run.dir.display());
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    fitted_rate: f64,
    prefactor: f64,
    /// `(fitted - reference) / reference`, when a reference rate exists.
    relative_deviation: Option<f64>,
}

impl FitReport {
    fn new(fit: &DecayFit, reference: Option<f64>) -> Self {
        Self {
            fitted_rate: fit.fitted_rate,
            prefactor: fit.prefactor,
            relative_deviation: reference.map(|g| (fit.fitted_rate - g) / g),
        }
    }
}

#[derive(Serialize)]
struct AsymptoticBody {
    gamma: f64,
    circle_2: MobiusCircle,
    rh: FitReport,
    /// Empirical only: no rate is predicted for this comparison.
    s22: FitReport,
}

fn successes(records: &[SweepRecord], q: Quantity) -> Vec<(f64, Complex64)> {
    records
        .iter()
        .filter(|r| r.quantity == q)
        .filter_map(|r| r.value.map(|v| (r.branch_height, v)))
        .collect()
}

pub fn asymptotic_compare(args: &ConfigArgs) -> anyhow::Result<()> {
    let run = prepare(args, sweep_needs([3.0, 8.0], 6), "asymptotics", None)?;
    let k = run.cfg.k;
    let (mixed, neumann) = limit_pair(&run.cfg, &run.opts)?;
    let (s2, s4) = (mixed.to_mat2()?, neumann.to_mat4()?);
    let circle_2 = mobius_circle_2(&s2)?;
    let hs = heights(&run.cfg)?;
    println!("comparing Rh and s22 with their asymptotics over {} heights", hs.len());
    let records = sweep(&run.cfg.family(), &hs, &[Quantity::HalfDirichlet, Quantity::S22], &run.opts)?;
    require_success(&records, |r| r.value.is_some(), "finite-height")?;
    let (rh, s22) = (successes(&records, Quantity::HalfDirichlet), successes(&records, Quantity::S22));
    let rh_fit = decay_compare(&rh, |l| r_asy(&s2, k, l))?;
    let s22_fit = decay_compare(&s22, |l| s22_asy(&s4, k, l))?;
    let gamma = branch_gamma(k);

    let mut table = Table::new(&[
        "L", "Rh_re", "Rh_im", "Rh_asy_re", "Rh_asy_im", "Rh_error", "s22_re", "s22_im", "s22_asy_re", "s22_asy_im",
        "s22_error",
    ]);
    let mut curves: [Vec<Option<Complex64>>; 4] = Default::default();
    for pair in records.chunks(2) {
        let l = pair[0].branch_height;
        let rh_asy = r_asy(&s2, k, l)?;
        let s22_asy_l = s22_asy(&s4, k, l)?;
        let err = |v: Option<Complex64>, a: Complex64| v.map(|v| (v - a).norm());
        let mut row = vec![num(l)];
        row.extend(complex_cells(pair[0].value));
        row.extend(complex_cells(Some(rh_asy)));
        row.push(opt(err(pair[0].value, rh_asy)));
        row.extend(complex_cells(pair[1].value));
        row.extend(complex_cells(Some(s22_asy_l)));
        row.push(opt(err(pair[1].value, s22_asy_l)));
        table.row(&row);
        curves[0].push(pair[0].value);
        curves[1].push(Some(rh_asy));
        curves[2].push(pair[1].value);
        curves[3].push(Some(s22_asy_l));
    }
    table.write(&run.dir.join("compare.csv"))?;

    for (stem, name, direct, asy, fit) in [
        ("rh", "Rh", &curves[0], &curves[1], &rh_fit),
        ("s22", "s22", &curves[2], &curves[3], &s22_fit),
    ] {
        let plot = unit_circle(Plot::new(format!("{name}(L) and its asymptotics"), "Re", "Im").equal_aspect())
            .with_series(Series::new(name, direct.iter().map(|z| point(*z)).collect(), PALETTE[0]))
            .with_series(Series::new(format!("{name} asy"), asy.iter().map(|z| point(*z)).collect(), PALETTE[1]).dashed());
        write_svg(&run.dir.join(format!("{stem}_curves.svg")), plot.to_svg())?;
        let errors: Vec<Option<[f64; 2]>> = fit.errors.iter().map(|(l, e)| Some([*l, e.ln()])).collect();
        let fitted: Vec<Option<[f64; 2]>> = fit
            .errors
            .iter()
            .map(|(l, _)| Some([*l, fit.prefactor.ln() - fit.fitted_rate * l]))
            .collect();
        let plot = Plot::new(format!("ln|{name} - {name} asy|"), "L", "ln error")
            .with_series(Series::new("error", errors, PALETTE[0]))
            .with_series(Series::new(format!("fit, rate {:.3}", fit.fitted_rate), fitted, PALETTE[1]).dashed());
        write_svg(&run.dir.join(format!("{stem}_log_error.svg")), plot.to_svg())?;
    }

    println!(
        "Rh: fitted rate {:.4}, gamma = {:.4} ({:+.1}%)",
        rh_fit.fitted_rate,
        gamma,
        100.0 * (rh_fit.fitted_rate - gamma) / gamma
    );
    println!("s22: fitted rate {:.4}", s22_fit.fitted_rate);
    write_json(
        &run.dir.join("report.json"),
        "asymptotic-compare",
        &run.cfg,
        AsymptoticBody {
            gamma,
            circle_2,
            rh: FitReport::new(&rh_fit, Some(gamma)),
            s22: FitReport::new(&s22_fit, None),
        },
    )?;
    println!("wrote {}", run.dir.display());
    Ok(())
}

#[derive(Serialize)]
struct ScatteringFieldBody {
    pair: ScatteringPair,
    diagnostics: SolveDiagnostics,
    sup_v: f64,
    /// `sup |Re(v - incident)|` over the nodes.
    sup_re_scattered: f64,
    /// `sup |Im v|` over the nodes.
    sup_im_v: f64,
    files: Vec<String>,
}

pub fn solve_field(args: &ConfigArgs, mode: Option<FieldMode>) -> anyhow::Result<()> {
    let needs = Needs {
        sweep: None,
        min_points: 0,
        single_height: true,
    };
    let run = prepare(args, needs, "field", mode)?;
    let l = run.cfg.branch_height.expect("resolved");
    let geom = run.cfg.family().at(l)?;
    let k = run.cfg.k;
    match run.cfg.mode {
        FieldMode::Scattering => {
            let solve = solve_full_field(&geom, &run.opts)?;
            let amp = 1.0 / (2.0 * k).sqrt();
            let incident = move |x: f64| Complex64::from_polar(amp, k * x);
            let mesh = &solve.field.mesh;
            let (mut sup_re, mut sup_im) = (0.0f64, 0.0f64);
            for (i, v) in solve.field.values.iter().enumerate() {
                sup_re = sup_re.max((v - incident(mesh.node(i)[0])).re.abs());
                sup_im = sup_im.max(v.im.abs());
            }
            let sup = solve.field.sup_norm();
            let re: &dyn Fn([f64; 2], Complex64) -> f64 = &|_, v| v.re;
            let im: &dyn Fn([f64; 2], Complex64) -> f64 = &|_, v| v.im;
            let im_scat: &dyn Fn([f64; 2], Complex64) -> f64 = &|p, v| (v - incident(p[0])).im;
            let files = export_field(
                &run.dir,
                "field",
                &solve.field,
                run.cfg.ell(),
                &[
                    ("re", &format!("Re v, L = {l:.4}"), re),
                    ("im", &format!("Im v, L = {l:.4}"), im),
                    ("im_scattered", &format!("Im(v - w), L = {l:.4}"), im_scat),
                ],
            )?;
            let p = &solve.pair;
            println!("R = {:.6}, T = {:.6}, energy residual {:.2e}", p.reflection, p.transmission, p.energy_residual);
            println!("sup|Re(v - w)| = {sup_re:.4e} ({:.2e} of sup|v|)", sup_re / sup);
            println!("sup|Im v| = {sup_im:.4e} ({:.2e} of sup|v|)", sup_im / sup);
            write_json(
                &run.dir.join("field.json"),
                "solve-field",
                &run.cfg,
                ScatteringFieldBody {
                    pair: solve.pair.clone(),
                    diagnostics: solve.diagnostics.clone(),
                    sup_v: sup,
                    sup_re_scattered: sup_re,
                    sup_im_v: sup_im,
                    files,
                },
            )?;
        }
        FieldMode::Trapped => {
            let cand = trapped_candidate(&geom, &run.opts)?;
            let summary = export_trapped(&run.dir, &cand, l, &run.cfg)?;
            println!(
                "s22 = {:.6}, |outgoing piston| = {:.2e}, tail rate {:.4} (beta = {:.4})",
                summary.s22,
                summary.outgoing_piston_amplitude.norm(),
                summary.tail_decay_rate,
                summary.beta
            );
            write_json(&run.dir.join("field.json"), "solve-field", &run.cfg, summary)?;
        }
    }
    println!("wrote {}", run.dir.display());
    Ok(())
}
