//! Large-height asymptotics built from the limit scattering matrices.
//!
//! As the branch height grows, the half-guide coefficients approach Möbius
//! images of the unit circle parametrized by `e^{-2i gamma L}` (Dirichlet
//! problem) or `e^{-2ikL}` (augmented Neumann problem).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal::branch_gamma;
use crate::scattering::ScatteringMatrix;

pub type Mat2 = [[Complex64; 2]; 2];
pub type Mat4 = [[Complex64; 4]; 4];

/// Distance to the degenerate configurations below which an input is rejected.
pub const EXCEPTIONAL_THRESHOLD: f64 = 1e-3;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusCircle {
    pub center: Complex64,
    pub radius: f64,
}

impl ScatteringMatrix {
    pub fn to_mat2(&self) -> Result<Mat2> {
        if self.dim() != 2 {
            return Err(Error::InvalidArgument(format!("expected a 2x2 matrix, got {}", self.dim())));
        }
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| self.entries[i][j])))
    }

    pub fn to_mat4(&self) -> Result<Mat4> {
        if self.dim() != 4 {
            return Err(Error::InvalidArgument(format!("expected a 4x4 matrix, got {}", self.dim())));
        }
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| self.entries[i][j])))
    }
}

/// `|S22| = 1` is equivalent to `S12 = 0` for unitary `S`; the coupling is the
/// quantity tested, since it is what the circle construction divides out.
fn check_s22(s: &Mat2) -> Result<()> {
    let coupling = s[0][1].norm().min(s[1][0].norm());
    if coupling <= EXCEPTIONAL_THRESHOLD || s[1][1].norm() >= 1.0 {
        Err(Error::Exceptional(format!(
            "|S22| = {} with |S12| = {coupling:e}: the branch decouples",
            s[1][1].norm()
        )))
    } else {
        Ok(())
    }
}

/// `S11 + S12 S21 / (e^{-2i gamma L} - S22)`.
pub fn r_asy(s: &Mat2, k: f64, branch_height: f64) -> Result<Complex64> {
    check_s22(s)?;
    let z = Complex64::from_polar(1.0, -2.0 * branch_gamma(k) * branch_height);
    Ok(s[0][0] + s[0][1] * s[1][0] / (z - s[1][1]))
}

/// Image circle of `z -> S11 + S12 S21 / (z - S22)` over the unit circle.
pub fn mobius_circle_2(s: &Mat2) -> Result<MobiusCircle> {
    check_s22(s)?;
    let denom = 1.0 - s[1][1].norm_sqr();
    Ok(MobiusCircle {
        center: s[0][0] + s[0][1] * s[1][1].conj() * s[1][0] / denom,
        radius: (s[0][1] * s[1][0]).norm() / denom,
    })
}

/// Constants of the reduced form `s22_asy = c - d^2 / (-e^{-2ikL} + a)`.
/// `const_b` is the constant the reduction produces in place of `-d^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Abcd {
    pub a: Complex64,
    pub const_b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    /// `|const_b + d^2|`
    pub b_plus_d2: f64,
}

fn check_s14(s: &Mat4) -> Result<()> {
    if s[0][3].norm() < EXCEPTIONAL_THRESHOLD {
        Err(Error::Exceptional(format!(
            "s14 = {} vanishes: threshold and piston channels decouple",
            s[0][3]
        )))
    } else {
        Ok(())
    }
}

pub fn abcd(s: &Mat4) -> Result<Abcd> {
    check_s14(s)?;
    let e = |i: usize, j: usize| s[i - 1][j - 1];
    let s14 = e(1, 4);
    let a = e(3, 3) - e(1, 3) * e(3, 4) / s14;
    let const_b = (e(2, 4) * e(1, 3) * e(3, 2) * 2.0
        - e(2, 3) * s14 * e(3, 2)
        - e(1, 2) * e(4, 2) * e(1, 3) * e(3, 4) / s14)
        / s14;
    let c = e(2, 2) - e(1, 2) * e(4, 2) / s14;
    let d = e(2, 3) - e(2, 4) * e(1, 3) / s14;
    Ok(Abcd {
        a,
        const_b,
        c,
        d,
        b_plus_d2: (const_b + d * d).norm(),
    })
}

fn check_gauge_assumptions(s: &Mat4) -> Result<Abcd> {
    let abcd = abcd(s)?;
    if (abcd.a.norm() - 1.0).abs() < EXCEPTIONAL_THRESHOLD {
        return Err(Error::Exceptional(format!(
            "|s33 - s13 s34 / s14| = {} is within {EXCEPTIONAL_THRESHOLD:e} of 1",
            abcd.a.norm()
        )));
    }
    Ok(abcd)
}

/// Gauge amplitudes `(a(L), b(L))` of the propagating and threshold branch
/// solutions that restore the Neumann condition on the branch top.
pub fn gauges_ab(s: &Mat4, k: f64, branch_height: f64) -> Result<(Complex64, Complex64)> {
    check_gauge_assumptions(s)?;
    let e = |i: usize, j: usize| s[i - 1][j - 1];
    let z = Complex64::from_polar(1.0, -2.0 * k * branch_height);
    let denom = (ONE + e(4, 4)) * (-z + e(3, 3)) - e(3, 4) * e(4, 3);
    if denom.norm() < f64::EPSILON {
        return Err(Error::Exceptional(format!("gauge system is singular at L = {branch_height}")));
    }
    let a = (e(2, 4) * e(4, 3) - e(2, 3) * (ONE + e(4, 4))) / denom;
    let b = (e(2, 4) * (z - e(3, 3)) + e(2, 3) * e(3, 4)) / denom;
    Ok((a, b))
}

/// Residuals of the two gauge equations at `L`.
pub fn gauge_residuals(s: &Mat4, k: f64, branch_height: f64, a: Complex64, b: Complex64) -> [f64; 2] {
    let e = |i: usize, j: usize| s[i - 1][j - 1];
    let p = Complex64::from_polar(1.0, k * branch_height);
    let first = e(2, 3) * p + a * (-p.inv() + e(3, 3) * p) + b * e(4, 3) * p;
    let second = e(2, 4) + a * e(3, 4) + b * (ONE + e(4, 4));
    [first.norm(), second.norm()]
}

/// `s22 + a(L) s32 + b(L) s42`.
pub fn s22_asy(s: &Mat4, k: f64, branch_height: f64) -> Result<Complex64> {
    let (a, b) = gauges_ab(s, k, branch_height)?;
    Ok(s[1][1] + a * s[2][1] + b * s[3][1])
}

/// `c - d^2 / (-e^{-2ikL} + a)`.
pub fn s22_asy_reduced(s: &Mat4, k: f64, branch_height: f64) -> Result<Complex64> {
    let p = check_gauge_assumptions(s)?;
    let z = Complex64::from_polar(1.0, -2.0 * k * branch_height);
    Ok(p.c - p.d * p.d / (-z + p.a))
}

/// Image circle of `z -> c - d^2 / (z + a)` over the unit circle.
pub fn mobius_circle_4(a: Complex64, c: Complex64, d: Complex64) -> Result<MobiusCircle> {
    if (a.norm() - 1.0).abs() < EXCEPTIONAL_THRESHOLD {
        return Err(Error::Exceptional(format!("|a| = {} is within {EXCEPTIONAL_THRESHOLD:e} of 1", a.norm())));
    }
    let denom = 1.0 - a.norm_sqr();
    Ok(MobiusCircle {
        center: c + d * d * a.conj() / denom,
        radius: d.norm_sqr() / denom,
    })
}

/// `sqrt(ell) / (i sqrt(2k))`: weight of the threshold channel in `sqrt(2/k) cos(kx)`.
pub fn threshold_weight(k: f64) -> Complex64 {
    let ell = PI / k;
    Complex64::from(ell.sqrt() / (2.0 * k).sqrt()) / I
}

/// Residuals of the four linear relations tying the first column of the
/// Neumann limit matrix to its threshold column:
/// `s11 + w s41 = 1`, `s12 + w s42 = 0`, `s13 + w s43 = 0`, `s14 + w s44 = -w`.
pub fn relpart_residuals(s: &Mat4, k: f64) -> [f64; 4] {
    let w = threshold_weight(k);
    [
        (s[0][0] + w * s[3][0] - 1.0).norm(),
        (s[0][1] + w * s[3][1]).norm(),
        (s[0][2] + w * s[3][2]).norm(),
        (s[0][3] + w * s[3][3] + w).norm(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Periods {
    /// Period of the Dirichlet-problem asymptote, `2 pi / (k sqrt 3)`.
    pub invisibility: f64,
    /// Period of the augmented-problem asymptote, `pi / k`.
    pub trapped: f64,
}

pub fn predicted_periods(k: f64) -> Result<Periods> {
    if !(k.is_finite() && k > 0.0 && k < PI) {
        return Err(Error::Wavenumber(k));
    }
    Ok(Periods {
        invisibility: 2.0 * PI / (k * 3f64.sqrt()),
        trapped: PI / k,
    })
}

/// Least-squares line `y = slope x + intercept`.
pub fn log_linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("line fit needs matching samples, at least two".into()));
    }
    if !ys.iter().chain(xs).all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("line fit on non-finite samples".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("line fit on coincident abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `rate` in `|direct - asy| ~ prefactor e^{-rate L}`.
    pub fitted_rate: f64,
    pub prefactor: f64,
    /// `(L, |direct - asy|)` samples used.
    pub errors: Vec<(f64, f64)>,
}

/// Fits an exponential to `|direct(L) - asy(L)|`.
pub fn decay_compare(
    direct: &[(f64, Complex64)],
    asy: impl Fn(f64) -> Result<Complex64>,
) -> Result<DecayFit> {
    if direct.len() < 6 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 6 samples, got {}",
            direct.len()
        )));
    }
    let errors = direct
        .iter()
        .map(|&(l, v)| Ok((l, (v - asy(l)?).norm())))
        .collect::<Result<Vec<_>>>()?;
    if let Some((l, _)) = errors.iter().find(|e| e.1.is_nan() || e.1 <= 0.0) {
        return Err(Error::InvalidArgument(format!("zero error at L = {l}: cannot fit a logarithm")));
    }
    let xs: Vec<f64> = errors.iter().map(|e| e.0).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.1.ln()).collect();
    let (slope, intercept) = log_linear_fit(&xs, &ys)?;
    Ok(DecayFit {
        fitted_rate: -slope,
        prefactor: intercept.exp(),
        errors,
    })
}

/// Every identity residual of a pair of limit matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub k: f64,
    pub mixed_unitarity: f64,
    pub mixed_symmetry: f64,
    pub mixed_s12: f64,
    pub circle_2: Option<MobiusCircle>,
    pub neumann_unitarity: f64,
    pub neumann_symmetry: f64,
    pub relations: [f64; 4],
    pub abcd: Option<Abcd>,
    /// `|a|^2 + |d|^2 - 1`
    pub rho_identity: Option<f64>,
    /// `|c conj(d) + d conj(a)|`
    pub alpha_identity: Option<f64>,
    pub circle_4: Option<MobiusCircle>,
    pub warnings: Vec<String>,
}

pub fn identity_report(mixed: &ScatteringMatrix, neumann: &ScatteringMatrix) -> Result<IdentityReport> {
    let s2 = mixed.to_mat2()?;
    let s4 = neumann.to_mat4()?;
    let k = mixed.k;
    let mut warnings = Vec::new();
    let circle_2 = mobius_circle_2(&s2).map_err(|e| warnings.push(e.to_string())).ok();
    let p = abcd(&s4).map_err(|e| warnings.push(e.to_string())).ok();
    let circle_4 = p.and_then(|p| mobius_circle_4(p.a, p.c, p.d).map_err(|e| warnings.push(e.to_string())).ok());
    if (s4[3][3] + 1.0).norm() < EXCEPTIONAL_THRESHOLD {
        warnings.push(format!("s44 = {} is within {EXCEPTIONAL_THRESHOLD:e} of -1", s4[3][3]));
    }
    Ok(IdentityReport {
        k,
        mixed_unitarity: mixed.unitarity_residual,
        mixed_symmetry: mixed.symmetry_residual,
        mixed_s12: s2[0][1].norm(),
        circle_2,
        neumann_unitarity: neumann.unitarity_residual,
        neumann_symmetry: neumann.symmetry_residual,
        relations: relpart_residuals(&s4, k),
        abcd: p,
        rho_identity: p.map(|p| (p.a.norm_sqr() + p.d.norm_sqr() - 1.0).abs()),
        alpha_identity: p.map(|p| (p.c * p.d.conj() + p.d * p.a.conj()).norm()),
        circle_4,
        warnings,
    })
}
