//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a subset.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use common::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wgscat_core::asymptotics::*;
use wgscat_core::geometry::{LimitGeometry, SymmetryBc, WaveguideGeometry};
use wgscat_core::modal::branch_gamma;
use wgscat_core::scattering::*;
use wgscat_core::search::*;

const STAIRCASE_TAIL: [f64; 4] = [2.5, 2.0, 1.5, 1.0];
/// Golden-section interval width; distances to the targets vary by O(10) per
/// unit height, so this sits far below every distance tolerance.
const REFINE_TOL: f64 = 1e-7;
/// A refined minimum counts as a genuine special point below this distance.
const HIT: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn opts() -> SolveOptions {
    SolveOptions::new(K)
}

fn omega() -> GeometryFamily {
    GeometryFamily::Omega { k: K }
}

fn staircase() -> GeometryFamily {
    GeometryFamily::Staircase {
        k: K,
        tail_heights: STAIRCASE_TAIL.to_vec(),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Twenty heights spanning `[1.3, 8]`.
fn heights20() -> Vec<f64> {
    linspace(1.3, 8.0, 20)
}

struct FullData {
    coarse: Vec<ScatteringPair>,
    fine: Vec<ScatteringPair>,
}

fn full_data() -> &'static FullData {
    static DATA: OnceLock<FullData> = OnceLock::new();
    DATA.get_or_init(|| {
        let run = |o: SolveOptions| -> Vec<ScatteringPair> {
            heights20()
                .par_iter()
                .map(|&l| solve_full(&WaveguideGeometry::omega(K, l).unwrap(), &o).unwrap())
                .collect()
        };
        FullData {
            coarse: run(opts()),
            fine: run(opts().refined()),
        }
    })
}

struct HalfData {
    half: Vec<HalfCoefficients>,
    augmented: Vec<AugmentedMatrix>,
}

fn half_data() -> &'static HalfData {
    static DATA: OnceLock<HalfData> = OnceLock::new();
    DATA.get_or_init(|| {
        let o = opts();
        let pairs: Vec<_> = heights20()
            .par_iter()
            .map(|&l| {
                let g = WaveguideGeometry::omega(K, l).unwrap();
                (half_coefficients(&g, &o).unwrap(), augmented(&g, &o).unwrap())
            })
            .collect();
        let (half, augmented) = pairs.into_iter().unzip();
        HalfData { half, augmented }
    })
}

struct OmegaPoints {
    invisibility: Vec<RefinedPoint>,
    trapped: Vec<RefinedPoint>,
}

/// Sweep of the single-branch guide over `[1.3, 8]` with refinement of every
/// local minimum of `|T - 1|` and `|s22 + 1|`.
fn omega_points() -> &'static OmegaPoints {
    static DATA: OnceLock<OmegaPoints> = OnceLock::new();
    DATA.get_or_init(|| {
        let o = opts();
        let fam = omega();
        let records = sweep(&fam, &grid(1.3, 8.0, 0.05).unwrap(), &[Quantity::T, Quantity::S22], &o).unwrap();
        let refine_all = |target: Target| -> Vec<RefinedPoint> {
            let mut pts: Vec<RefinedPoint> = brackets(&records, target)
                .into_par_iter()
                .filter_map(|b| refine(&fam, target, b, &o, REFINE_TOL).ok())
                .collect();
            pts.sort_by(|a, b| a.branch_height.total_cmp(&b.branch_height));
            pts
        };
        OmegaPoints {
            invisibility: refine_all(Target::TEqOne),
            trapped: refine_all(Target::S22EqMinusOne),
        }
    })
}

fn hits(points: &[RefinedPoint]) -> Vec<&RefinedPoint> {
    points.iter().filter(|p| p.distance < HIT).collect()
}

fn first_invisibility() -> Option<&'static RefinedPoint> {
    hits(&omega_points().invisibility).into_iter().next()
}

fn first_trapped() -> Option<&'static RefinedPoint> {
    hits(&omega_points().trapped).into_iter().next()
}

/// Refined staircase points closest to the expected heights, one per target.
fn staircase_points() -> &'static Vec<(Target, f64, Option<RefinedPoint>)> {
    static DATA: OnceLock<Vec<(Target, f64, Option<RefinedPoint>)>> = OnceLock::new();
    DATA.get_or_init(|| {
        let o = opts();
        let fam = staircase();
        let records = sweep(
            &fam,
            &grid(3.5, 5.0, 0.05).unwrap(),
            &[Quantity::T, Quantity::R, Quantity::S22],
            &o,
        )
        .unwrap();
        [(Target::TEqOne, 4.5808), (Target::REqOne, 4.3758), (Target::S22EqMinusOne, 3.8273)]
            .into_iter()
            .map(|(target, expected)| {
                let best = brackets(&records, target)
                    .into_par_iter()
                    .filter_map(|b| refine(&fam, target, b, &o, REFINE_TOL).ok())
                    .filter(|p| p.distance < HIT)
                    .min_by(|a, b| {
                        (a.branch_height - expected).abs().total_cmp(&(b.branch_height - expected).abs())
                    });
                (target, expected, best)
            })
            .collect()
    })
}

fn max(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn energy_conservation() -> Outcome {
    let data = full_data();
    let coarse = max(data.coarse.iter().map(|p| p.energy_residual));
    let fine = max(data.fine.iter().map(|p| p.energy_residual));
    // Below this both maxima are roundoff and carry no ordering.
    let floor = 1e-12;
    let decreases = fine <= coarse || (fine < floor && coarse < floor);
    outcome(
        coarse < 1e-4 && decreases,
        format!("max residual {coarse:.2e} at h = ell/20, {fine:.2e} at h = ell/40"),
    )
}

fn r_identity() -> Outcome {
    let worst = max(half_data().half.iter().map(|h| (h.r - 1.0).norm()));
    outcome(worst < 1e-4, format!("max |r - 1| = {worst:.2e}"))
}

fn augmented_identities() -> Outcome {
    let a = &half_data().augmented;
    let s11 = max(a.iter().map(|s| (s.s(1, 1) - 1.0).norm()));
    let off = max(a.iter().map(|s| s.s(1, 2).norm().max(s.s(2, 1).norm())));
    let s22 = max(a.iter().map(|s| (s.s(2, 2).norm() - 1.0).abs()));
    let worst = s11.max(off).max(s22);
    outcome(
        worst < 1e-3,
        format!("max |s11-1| {s11:.2e}, |s12|,|s21| {off:.2e}, ||s22|-1| {s22:.2e}"),
    )
}

fn invisibility_point() -> Outcome {
    let Some(p) = first_invisibility() else {
        return outcome(false, "no point with |T - 1| < 1e-3 found");
    };
    let fine = refine(
        &omega(),
        Target::TEqOne,
        (p.branch_height - 0.05, p.branch_height + 0.05),
        &opts().refined(),
        REFINE_TOL,
    );
    let Ok(fine) = fine else {
        return outcome(false, format!("L* = {:.5}; refinement at h/2 failed", p.branch_height));
    };
    let pass = p.distance < 1e-3
        && (p.branch_height - 2.5756).abs() <= 0.02
        && fine.distance < 1e-3
        && (fine.branch_height - 2.5756).abs() <= 0.005;
    outcome(
        pass,
        format!(
            "L* = {:.5} (|T-1| {:.1e}), at h/2 L* = {:.5} (|T-1| {:.1e}), shift {:.1e}",
            p.branch_height,
            p.distance,
            fine.branch_height,
            fine.distance,
            (fine.branch_height - p.branch_height).abs()
        ),
    )
}

fn trapped_point() -> Outcome {
    let Some(p) = first_trapped() else {
        return outcome(false, "no point with |s22 + 1| < 1e-3 found");
    };
    outcome(
        p.distance < 1e-3 && (p.branch_height - 2.5524).abs() <= 0.02,
        format!("L* = {:.5}, |s22+1| = {:.1e}", p.branch_height, p.distance),
    )
}

fn peak_spacings() -> Outcome {
    let pts = omega_points();
    let periods = predicted_periods(K).unwrap();
    let inv: Vec<f64> = hits(&pts.invisibility).iter().map(|p| p.branch_height).collect();
    let trap: Vec<f64> = hits(&pts.trapped).iter().map(|p| p.branch_height).collect();
    let (Ok(si), Ok(st)) = (spacing_stats(&inv, None), spacing_stats(&trap, None)) else {
        return outcome(false, format!("too few points: {} invisibility, {} trapped", inv.len(), trap.len()));
    };
    let ei = (si.mean - periods.invisibility).abs() / periods.invisibility;
    let et = (st.mean - periods.trapped).abs() / periods.trapped;
    outcome(
        ei < 0.02 && et < 0.02,
        format!(
            "invisibility mean {:.4} over {} points ({:.2}% off {:.4}); trapped mean {:.4} over {} points ({:.2}% off {:.4})",
            si.mean,
            inv.len(),
            100.0 * ei,
            periods.invisibility,
            st.mean,
            trap.len(),
            100.0 * et,
            periods.trapped
        ),
    )
}

fn staircase_geometry() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (target, expected, point) in staircase_points() {
        match point {
            Some(p) => {
                let ok = (p.branch_height - expected).abs() <= 0.03;
                pass &= ok;
                parts.push(format!("{target:?} L* = {:.5} (expected {expected})", p.branch_height));
            }
            None => {
                pass = false;
                parts.push(format!("{target:?}: no point found"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn limit_identities() -> Outcome {
    let o = opts();
    let mixed = limit_mixed(&LimitGeometry::omega(K, SymmetryBc::DirichletOnSigma).unwrap(), &o).unwrap();
    let neumann = limit_neumann(&LimitGeometry::omega(K, SymmetryBc::NeumannOnSigma).unwrap(), &o).unwrap();
    let rep = identity_report(&mixed, &neumann).unwrap();
    let circle_err = |c: Option<MobiusCircle>| c.map_or(f64::INFINITY, |c| c.center.norm().max((c.radius - 1.0).abs()));
    let c2 = circle_err(rep.circle_2);
    let c4 = circle_err(rep.circle_4);
    let rel = max(rep.relations);
    let bd2 = rep.abcd.map_or(f64::INFINITY, |p| p.b_plus_d2);
    let unit = rep.mixed_unitarity.max(rep.neumann_unitarity);
    let sym = rep.mixed_symmetry.max(rep.neumann_symmetry);
    let pass = [unit, sym, rel, bd2, c2, c4].iter().all(|v| *v < 1e-3);
    outcome(
        pass,
        format!(
            "unitarity {unit:.1e}, symmetry {sym:.1e}, relations {rel:.1e}, |b+d^2| {bd2:.1e}, circle 2 {c2:.1e}, circle 4 {c4:.1e}"
        ),
    )
}

fn asymptotic_convergence() -> Outcome {
    let o = opts();
    let mixed = limit_mixed(&LimitGeometry::omega(K, SymmetryBc::DirichletOnSigma).unwrap(), &o).unwrap();
    let s = mixed.to_mat2().unwrap();
    let records = sweep(&omega(), &grid(3.0, 8.0, 0.25).unwrap(), &[Quantity::HalfDirichlet], &o).unwrap();
    let direct: Vec<(f64, Complex64)> = records.iter().map(|r| (r.branch_height, r.value.unwrap())).collect();
    let fit = decay_compare(&direct, |l| r_asy(&s, K, l)).unwrap();
    let gamma = branch_gamma(K);
    let rel = (fit.fitted_rate - gamma).abs() / gamma;
    let range = fit.errors.iter().map(|e| e.1);
    let (lo, hi) = (range.clone().fold(f64::INFINITY, f64::min), max(range));
    outcome(
        rel <= 0.2,
        format!(
            "fitted rate {:.3} vs gamma {gamma:.3} ({:.0}% off); |Rh - Rh_asy| spans [{lo:.1e}, {hi:.1e}]",
            fit.fitted_rate,
            100.0 * rel
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let o = opts();
    let oracle = [2.0, 2.5756, 3.0]
        .par_iter()
        .map(|&l| {
            let h = half_coefficients(&WaveguideGeometry::omega(K, l).unwrap(), &o).unwrap();
            let fem = combine(K, l, h.r, h.rh);
            let (r, t) = mode_matching(K, l, 30);
            (fem.reflection - r).norm().max((fem.transmission - t).norm())
        })
        .collect::<Vec<_>>();
    let oracle_err = max(oracle.iter().copied());
    let full = &full_data().coarse;
    let half = &half_data().half;
    let combined_err = max((0..20).step_by(2).map(|i| {
        let c = combine(K, half[i].branch_height, half[i].r, half[i].rh);
        (c.reflection - full[i].reflection).norm().max((c.transmission - full[i].transmission).norm())
    }));
    outcome(
        oracle_err < 1e-3 && combined_err < 1e-4,
        format!("mode matching max deviation {oracle_err:.1e}; combined vs direct over 10 heights {combined_err:.1e}"),
    )
}

fn remark_structure() -> Outcome {
    let o = opts();
    let Some(inv) = first_invisibility() else {
        return outcome(false, "no invisibility point");
    };
    let Some((_, _, Some(refl))) = staircase_points().iter().find(|p| p.0 == Target::REqOne) else {
        return outcome(false, "no perfect-reflection point");
    };
    let a = solve_full_field(&WaveguideGeometry::omega(K, inv.branch_height).unwrap(), &o).unwrap();
    let ra = remark_checks(&a.field, &a.pair, HIT);
    let b = solve_full_field(&staircase().at(refl.branch_height).unwrap(), &o).unwrap();
    let rb = remark_checks(&b.field, &b.pair, HIT);
    let re = ra.re_residual.map(|v| v / ra.sup);
    let im = rb.im_residual.map(|v| v / rb.sup);
    let show = |v: Option<f64>| v.map_or("not evaluated".to_string(), |v| format!("{v:.1e}"));
    outcome(
        re.is_some_and(|v| v < 1e-2) && im.is_some_and(|v| v < 1e-2),
        format!(
            "sup|Re(v - inc)|/sup|v| = {} at L = {:.5}; sup|Im v|/sup|v| = {} at staircase L = {:.5}",
            show(re),
            inv.branch_height,
            show(im),
            refl.branch_height
        ),
    )
}

fn trapped_structure() -> Outcome {
    let Some(p) = first_trapped() else {
        return outcome(false, "no trapped point");
    };
    let c = trapped_candidate(&WaveguideGeometry::omega(K, p.branch_height).unwrap(), &opts()).unwrap();
    let beta = 0.6 * PI;
    let amp = c.outgoing_piston_amplitude.norm();
    let rel = (c.tail_decay_rate - beta).abs() / beta;
    outcome(
        amp < 1e-3 && rel <= 0.1,
        format!(
            "|outgoing piston| = {amp:.1e}; tail rate {:.4} vs beta {beta:.4} ({:.2}% off) on x in [{:.3}, {:.3}]",
            c.tail_decay_rate,
            100.0 * rel,
            c.fit_window.0,
            c.fit_window.1
        ),
    )
}

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut circle_err: f64 = 0.0;
    let mut skipped = 0;
    let mut redrawn = 0;
    for _ in 0..1000 {
        let mut s = unitary_symmetric_2(&mut rng);
        while s[0][1].norm() <= 1e-3 {
            redrawn += 1;
            s = unitary_symmetric_2(&mut rng);
        }
        match mobius_circle_2(&s) {
            Ok(c) => circle_err = circle_err.max(c.center.norm()).max((c.radius - 1.0).abs()),
            Err(_) => skipped += 1,
        }
    }
    let periods = predicted_periods(K).unwrap();
    let w = threshold_weight(K);
    let mut period_err: f64 = 0.0;
    for i in 0..200 {
        let l = 1.3 + 0.033 * i as f64;
        let s2 = unitary_symmetric_2(&mut rng);
        if let (Ok(a), Ok(b)) = (r_asy(&s2, K, l), r_asy(&s2, K, l + periods.invisibility)) {
            period_err = period_err.max((a - b).norm());
        }
        let s4 = unitary_symmetric_4_with_relations(w, &mut rng);
        if let (Ok(a), Ok(b)) = (s22_asy(&s4, K, l), s22_asy(&s4, K, l + periods.trapped)) {
            period_err = period_err.max((a - b).norm());
        }
    }
    let (patch_energy, patch_mass) = quadratic_patch_errors();
    let patch = patch_energy.max(patch_mass);
    outcome(
        circle_err < 1e-8 && skipped == 0 && period_err < 1e-12 && patch < 1e-10,
        format!(
            "circle deviation {circle_err:.1e} over {} matrices ({skipped} exceptional, {redrawn} redrawn with |S12| <= 1e-3); periodicity {period_err:.1e}; quadratic patch {patch:.1e}",
            1000 - skipped
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 13] = [
        (1, "energy conservation", energy_conservation),
        (2, "r identity", r_identity),
        (3, "augmented identities", augmented_identities),
        (4, "first invisibility point", invisibility_point),
        (5, "first trapped-mode point", trapped_point),
        (6, "peak spacings", peak_spacings),
        (7, "staircase geometry", staircase_geometry),
        (8, "limit-matrix identities", limit_identities),
        (9, "asymptotic convergence", asymptotic_convergence),
        (10, "oracle equivalence", oracle_equivalence),
        (11, "remark checks", remark_structure),
        (12, "trapped-mode structure", trapped_structure),
        (13, "property suite", property_suite),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict} [{name}] {} ({:.1}s)",
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
