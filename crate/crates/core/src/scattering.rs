//! Scattering coefficients and matrices extracted from finite-element solves.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asymptotics::log_linear_fit;
use crate::error::{Error, Result};
use crate::geometry::{
    truncate, BoundaryTag, GuideProblem, LimitGeometry, Margins, SymmetryBc, TruncatedDomain,
    WaveguideGeometry, LEFT_PORT, RIGHT_PORT, TOP_PORT,
};
use crate::mesh::{generate_graded, Mesh};
use crate::modal::{basis_for, PortBasis, PortId, PortSide, DEFAULT_DTN_TERMS};
use crate::solver::{assemble, factor_solve, ComplexField, Incident, SolveDiagnostics};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Default number of elements per `ell`.
pub const DEFAULT_ELEMENTS_PER_ELL: f64 = 20.0;

/// Default levels of mesh grading toward the reentrant corners.
pub const DEFAULT_CORNER_GRADING: usize = 4;

/// Discretization parameters shared by every solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Target element size.
    pub h: f64,
    pub dtn_terms: usize,
    pub margins: Margins,
    /// Levels of halving mesh lines toward the steps of the guide.
    #[serde(default)]
    pub corner_grading: usize,
}

impl SolveOptions {
    /// `h = ell / 20` graded 4 times toward the steps, 15 modal terms, ports
    /// `ell` beyond the last step and `2 ell` above the junction.
    pub fn new(k: f64) -> Self {
        let ell = PI / k;
        Self {
            h: ell / DEFAULT_ELEMENTS_PER_ELL,
            dtn_terms: DEFAULT_DTN_TERMS,
            margins: Margins::for_ell(ell),
            corner_grading: DEFAULT_CORNER_GRADING,
        }
    }

    pub fn with_h(self, h: f64) -> Self {
        Self { h, ..self }
    }

    pub fn with_dtn_terms(self, dtn_terms: usize) -> Self {
        Self { dtn_terms, ..self }
    }

    pub fn with_margins(self, margins: Margins) -> Self {
        Self { margins, ..self }
    }

    pub fn with_corner_grading(self, corner_grading: usize) -> Self {
        Self { corner_grading, ..self }
    }

    /// Halved element size.
    pub fn refined(self) -> Self {
        self.with_h(0.5 * self.h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidArgument(format!("element size h = {}", self.h)));
        }
        if self.dtn_terms < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 modal terms, got {}",
                self.dtn_terms
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    DirectFullGuide,
    CombinedHalfGuides,
}

/// Reflection and transmission of the piston mode incident from the left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringPair {
    pub k: f64,
    #[serde(rename = "L")]
    pub branch_height: f64,
    pub reflection: Complex64,
    pub transmission: Complex64,
    /// `| |R|^2 + |T|^2 - 1 |`
    pub energy_residual: f64,
    pub provenance: Provenance,
}

impl ScatteringPair {
    fn new(k: f64, branch_height: f64, r: Complex64, t: Complex64, provenance: Provenance) -> Self {
        Self {
            k,
            branch_height,
            reflection: r,
            transmission: t,
            energy_residual: (r.norm_sqr() + t.norm_sqr() - 1.0).abs(),
            provenance,
        }
    }
}

/// Reflection coefficients of the Neumann (`r`) and Dirichlet (`rh`)
/// half-guide problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfCoefficients {
    pub k: f64,
    #[serde(rename = "L")]
    pub branch_height: f64,
    pub r: Complex64,
    pub rh: Complex64,
    /// `| |r| - 1 |`
    pub r_modulus_residual: f64,
    /// `| |rh| - 1 |`
    pub rh_modulus_residual: f64,
}

/// An incoming/outgoing channel: a scattering mode on a port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub port: PortId,
    pub mode: usize,
}

/// Scattering matrix `s[i][j]`: coefficient of outgoing channel `j` in the
/// solution excited by incoming channel `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringMatrix {
    pub k: f64,
    pub channels: Vec<Channel>,
    pub entries: Vec<Vec<Complex64>>,
    /// Frobenius norm of `S conj(S)^T - I`.
    pub unitarity_residual: f64,
    /// Largest `|s_ij - s_ji|`.
    pub symmetry_residual: f64,
}

/// 2x2 matrix of the Neumann half guide with the wave-packet channel.
pub type AugmentedMatrix = ScatteringMatrix;
/// 2x2 matrix of the limit half guide with Dirichlet on the symmetry line.
pub type LimitMatrixMixed = ScatteringMatrix;
/// 4x4 matrix of the Neumann limit half guide with packet and threshold channels.
pub type LimitMatrixNeumann = ScatteringMatrix;

impl ScatteringMatrix {
    pub fn from_entries(k: f64, channels: Vec<Channel>, entries: Vec<Vec<Complex64>>) -> Self {
        let n = entries.len();
        let mut unitarity = 0.0;
        let mut symmetry: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p: Complex64 = (0..n).map(|m| entries[i][m] * entries[j][m].conj()).sum();
                let delta = if i == j { ONE } else { ZERO };
                unitarity += (p - delta).norm_sqr();
                symmetry = symmetry.max((entries[i][j] - entries[j][i]).norm());
            }
        }
        Self {
            k,
            channels,
            entries,
            unitarity_residual: unitarity.sqrt(),
            symmetry_residual: symmetry,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// One-based entry `s_ij`.
    pub fn s(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i - 1][j - 1]
    }
}

/// Solve of one truncated problem with every port basis.
struct PortSolve {
    bases: Vec<PortBasis>,
    fields: Vec<ComplexField>,
    diagnostics: SolveDiagnostics,
}

fn basis_of(bases: &[PortBasis], port: PortId) -> &PortBasis {
    bases.iter().find(|b| b.port.id == port).unwrap()
}

fn solve_domain(
    domain: &TruncatedDomain,
    opts: &SolveOptions,
    packet: bool,
    incidents: &[Incident],
) -> Result<PortSolve> {
    opts.validate()?;
    let mesh = Arc::new(generate_graded(domain, opts.h, opts.corner_grading)?);
    let bases = domain
        .ports
        .iter()
        .map(|p| basis_for(domain.k, p, opts.dtn_terms, packet && p.side == PortSide::Left))
        .collect::<Result<Vec<_>>>()?;
    let dirichlet = match domain.symmetry {
        Some(SymmetryBc::DirichletOnSigma) => Some(BoundaryTag::Symmetry),
        _ => None,
    };
    let system = assemble(mesh, domain.k, &bases, incidents, dirichlet)?;
    let sol = factor_solve(&system)?;
    Ok(PortSolve {
        bases,
        fields: sol.fields,
        diagnostics: sol.diagnostics,
    })
}

/// Outgoing coefficient of `out` in the field excited by `inc`.
fn coefficient(bases: &[PortBasis], field: &ComplexField, inc: Channel, out: Channel) -> Result<Complex64> {
    let basis = basis_of(bases, out.port);
    let amplitude = field.modal_amplitude(basis, out.mode)?;
    let incident = if inc == out { ONE } else { ZERO };
    basis
        .outgoing_coefficient(out.mode, amplitude, incident)
        .ok_or_else(|| Error::InvalidArgument(format!("mode {} of port {:?} is not a channel", out.mode, out.port)))
}

fn matrix_solve(
    domain: &TruncatedDomain,
    opts: &SolveOptions,
    packet: bool,
    channels: Vec<Channel>,
) -> Result<(ScatteringMatrix, PortSolve)> {
    let incidents: Vec<Incident> = channels.iter().map(|c| Incident::new(c.port, c.mode)).collect();
    let solve = solve_domain(domain, opts, packet, &incidents)?;
    let entries = channels
        .iter()
        .zip(&solve.fields)
        .map(|(&inc, field)| {
            channels
                .iter()
                .map(|&out| coefficient(&solve.bases, field, inc, out))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ScatteringMatrix::from_entries(domain.k, channels, entries), solve))
}

/// Full-guide solve with its total field.
#[derive(Debug, Clone)]
pub struct FullSolve {
    pub pair: ScatteringPair,
    pub field: ComplexField,
    pub diagnostics: SolveDiagnostics,
}

/// Direct solve on the truncated full guide, piston incident from the left.
pub fn solve_full_field(geom: &WaveguideGeometry, opts: &SolveOptions) -> Result<FullSolve> {
    let domain = truncate(&GuideProblem::Full(geom.clone()), opts.margins)?;
    let inc = Channel { port: LEFT_PORT, mode: 0 };
    let mut solve = solve_domain(&domain, opts, false, &[Incident::new(LEFT_PORT, 0)])?;
    let field = solve.fields.remove(0).with_label("full guide");
    let r = coefficient(&solve.bases, &field, inc, inc)?;
    let t = coefficient(&solve.bases, &field, inc, Channel { port: RIGHT_PORT, mode: 0 })?;
    Ok(FullSolve {
        pair: ScatteringPair::new(geom.k(), geom.branch_height(), r, t, Provenance::DirectFullGuide),
        field,
        diagnostics: solve.diagnostics,
    })
}

pub fn solve_full(geom: &WaveguideGeometry, opts: &SolveOptions) -> Result<ScatteringPair> {
    Ok(solve_full_field(geom, opts)?.pair)
}

/// Half-guide solve with its field.
#[derive(Debug, Clone)]
pub struct HalfSolve {
    pub coefficient: Complex64,
    pub field: ComplexField,
    pub diagnostics: SolveDiagnostics,
}

/// Reflection coefficient of the half guide with the given condition on
/// the symmetry line, piston incident from the left.
pub fn solve_half_field(geom: &WaveguideGeometry, bc: SymmetryBc, opts: &SolveOptions) -> Result<HalfSolve> {
    let domain = truncate(&GuideProblem::Half(geom.half(bc)), opts.margins)?;
    let inc = Channel { port: LEFT_PORT, mode: 0 };
    let mut solve = solve_domain(&domain, opts, false, &[Incident::new(LEFT_PORT, 0)])?;
    let field = solve.fields.remove(0).with_label(match bc {
        SymmetryBc::NeumannOnSigma => "half guide, Neumann",
        SymmetryBc::DirichletOnSigma => "half guide, Dirichlet",
    });
    Ok(HalfSolve {
        coefficient: coefficient(&solve.bases, &field, inc, inc)?,
        field,
        diagnostics: solve.diagnostics,
    })
}

pub fn solve_half(geom: &WaveguideGeometry, bc: SymmetryBc, opts: &SolveOptions) -> Result<Complex64> {
    Ok(solve_half_field(geom, bc, opts)?.coefficient)
}

/// Both half-guide problems, solved concurrently.
pub fn half_coefficients(geom: &WaveguideGeometry, opts: &SolveOptions) -> Result<HalfCoefficients> {
    let (r, rh) = rayon::join(
        || solve_half(geom, SymmetryBc::NeumannOnSigma, opts),
        || solve_half(geom, SymmetryBc::DirichletOnSigma, opts),
    );
    let (r, rh) = (r?, rh?);
    Ok(HalfCoefficients {
        k: geom.k(),
        branch_height: geom.branch_height(),
        r,
        rh,
        r_modulus_residual: (r.norm() - 1.0).abs(),
        rh_modulus_residual: (rh.norm() - 1.0).abs(),
    })
}

/// `R = (r + rh) / 2`, `T = (r - rh) / 2`.
pub fn combine(k: f64, branch_height: f64, r: Complex64, rh: Complex64) -> ScatteringPair {
    ScatteringPair::new(
        k,
        branch_height,
        (r + rh) * 0.5,
        (r - rh) * 0.5,
        Provenance::CombinedHalfGuides,
    )
}

/// Augmented matrix with its two fields (`u1` piston incident, `u2` packet incident).
#[derive(Debug, Clone)]
pub struct AugmentedSolve {
    pub matrix: AugmentedMatrix,
    pub fields: Vec<ComplexField>,
    pub diagnostics: SolveDiagnostics,
}

/// Augmented scattering matrix of the Neumann half guide: channels are the
/// piston mode and the wave packet on the left port.
pub fn augmented_solve(geom: &WaveguideGeometry, opts: &SolveOptions) -> Result<AugmentedSolve> {
    let domain = truncate(&GuideProblem::Half(geom.half(SymmetryBc::NeumannOnSigma)), opts.margins)?;
    let channels = vec![
        Channel { port: LEFT_PORT, mode: 0 },
        Channel { port: LEFT_PORT, mode: 1 },
    ];
    let (matrix, solve) = matrix_solve(&domain, opts, true, channels)?;
    if matrix.unitarity_residual > 1e-3 {
        log::warn!(
            "augmented matrix at L = {} has unitarity residual {:.2e}",
            geom.branch_height(),
            matrix.unitarity_residual
        );
    }
    Ok(AugmentedSolve {
        matrix,
        fields: solve.fields,
        diagnostics: solve.diagnostics,
    })
}

pub fn augmented(geom: &WaveguideGeometry, opts: &SolveOptions) -> Result<AugmentedMatrix> {
    Ok(augmented_solve(geom, opts)?.matrix)
}

/// Limit matrix of the half guide with Dirichlet on `x = 0`: channels are
/// the left piston mode and the propagating branch mode.
pub fn limit_mixed(limit: &LimitGeometry, opts: &SolveOptions) -> Result<LimitMatrixMixed> {
    if limit.symmetry != SymmetryBc::DirichletOnSigma {
        return Err(Error::InvalidArgument("mixed limit problem needs Dirichlet on the symmetry line".into()));
    }
    let domain = truncate(&GuideProblem::Limit(limit.clone()), opts.margins)?;
    let channels = vec![
        Channel { port: LEFT_PORT, mode: 0 },
        Channel { port: TOP_PORT, mode: 0 },
    ];
    Ok(matrix_solve(&domain, opts, false, channels)?.0)
}

/// Limit matrix of the Neumann half guide: channels are the left piston
/// mode, the left wave packet, the propagating branch mode and the branch
/// threshold mode.
pub fn limit_neumann(limit: &LimitGeometry, opts: &SolveOptions) -> Result<LimitMatrixNeumann> {
    if limit.symmetry != SymmetryBc::NeumannOnSigma {
        return Err(Error::InvalidArgument("Neumann limit problem needs Neumann on the symmetry line".into()));
    }
    let domain = truncate(&GuideProblem::Limit(limit.clone()), opts.margins)?;
    let channels = vec![
        Channel { port: LEFT_PORT, mode: 0 },
        Channel { port: LEFT_PORT, mode: 1 },
        Channel { port: TOP_PORT, mode: 0 },
        Channel { port: TOP_PORT, mode: 1 },
    ];
    let (m, _) = matrix_solve(&domain, opts, true, channels)?;
    if m.s(1, 4).norm() < 1e-3 {
        log::warn!("limit matrix entry s14 = {} is nearly zero", m.s(1, 4));
    }
    Ok(m)
}

/// The packet-incident solution of the augmented problem, examined as a
/// trapped-mode candidate.
#[derive(Debug, Clone)]
pub struct TrappedCandidate {
    pub field: ComplexField,
    pub s22: Complex64,
    /// Coefficient of the outgoing piston mode; vanishes for a trapped mode.
    pub outgoing_piston_amplitude: Complex64,
    /// Fitted exponential rate of the cross-section norm toward `x = -inf`.
    pub tail_decay_rate: f64,
    /// Interval of `x` used for the fit.
    pub fit_window: (f64, f64),
    pub diagnostics: SolveDiagnostics,
}

/// Fits the growth rate `d/dx log ||u(x, .)||` over `window` from `samples`
/// cross-sections of height `height`.
pub fn tail_decay_rate(field: &ComplexField, window: (f64, f64), height: f64, samples: usize) -> Result<f64> {
    let samples = samples.max(2);
    let pieces = ((height / field.mesh.h()).ceil() as usize).max(4);
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    for i in 0..samples {
        let x = window.0 + (window.1 - window.0) * i as f64 / (samples - 1) as f64;
        let n = field
            .section_norm(x, height, pieces)
            .ok_or_else(|| Error::Field(format!("cross-section x = {x} leaves the mesh")))?;
        xs.push(x);
        ys.push(n.ln());
    }
    Ok(log_linear_fit(&xs, &ys)?.0)
}

pub fn trapped_candidate(geom: &WaveguideGeometry, opts: &SolveOptions) -> Result<TrappedCandidate> {
    let solve = augmented_solve(geom, opts)?;
    let field = solve.fields[1].clone().with_label("packet incident");
    let x_port = -(geom.last_breakpoint() + opts.margins.left);
    let window = (x_port, -(geom.last_breakpoint() + 0.5 * geom.ell()));
    let rate = tail_decay_rate(&field, window, 1.0, 13)?;
    Ok(TrappedCandidate {
        field,
        s22: solve.matrix.s(2, 2),
        outgoing_piston_amplitude: solve.matrix.s(2, 1),
        tail_decay_rate: rate,
        fit_window: window,
        diagnostics: solve.diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Extends a half-guide field on `x <= 0` to the full guide by `u(-x, y)`
/// (even) or `-u(-x, y)` (odd). The left port of the half guide becomes the
/// right port of the mirror image.
pub fn unfold(field: &ComplexField, parity: Parity) -> Result<ComplexField> {
    let mesh = &field.mesh;
    if parity == Parity::Odd {
        let sup = field.sup_norm();
        let sigma = mesh.boundary_nodes(BoundaryTag::Symmetry);
        let trace = sigma.iter().map(|&n| field.values[n].norm()).fold(0.0, f64::max);
        if sigma.is_empty() || trace > 1e-8 * sup.max(f64::MIN_POSITIVE) {
            return Err(Error::Field(format!(
                "odd unfolding needs a vanishing trace on the symmetry line, found {trace:.3e}"
            )));
        }
    }
    let (full, map): (Mesh, _) = mesh.unfold(|t| match t {
        BoundaryTag::Port(p) if p == LEFT_PORT => BoundaryTag::Port(RIGHT_PORT),
        t => t,
    })?;
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let values = map
        .iter()
        .map(|&(src, mirrored)| {
            let v = field.values[src];
            if mirrored {
                v * sign
            } else {
                v
            }
        })
        .collect();
    let mut meta = field.meta.clone();
    meta.label = format!("{} (unfolded)", meta.label);
    Ok(ComplexField {
        mesh: Arc::new(full),
        values,
        meta,
    })
}

/// Sup-norm checks of the real/imaginary structure of the full-guide field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemarkChecks {
    /// `sup |Re(v - incident)|` when `|T - 1| < tol`.
    pub re_residual: Option<f64>,
    /// `sup |Im v|` when `|R - 1| < tol`.
    pub im_residual: Option<f64>,
    /// `sup |v|`.
    pub sup: f64,
}

pub fn remark_checks(field: &ComplexField, pair: &ScatteringPair, tol: f64) -> RemarkChecks {
    let k = field.meta.k;
    let scale = 1.0 / (2.0 * k).sqrt();
    let mesh = &field.mesh;
    let nodes = 0..mesh.n_nodes();
    let re_residual = ((pair.transmission - 1.0).norm() < tol).then(|| {
        nodes
            .clone()
            .map(|i| {
                let inc = Complex64::from_polar(scale, k * mesh.node(i)[0]);
                (field.values[i] - inc).re.abs()
            })
            .fold(0.0, f64::max)
    });
    let im_residual = ((pair.reflection - 1.0).norm() < tol)
        .then(|| field.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max));
    RemarkChecks {
        re_residual,
        im_residual,
        sup: field.sup_norm(),
    }
}

/// Whether the unit-circle value `s22` is within `threshold` of -1.
pub fn is_trapped_candidate(s22: Complex64, threshold: f64) -> bool {
    (s22 + 1.0).norm() < threshold
}
