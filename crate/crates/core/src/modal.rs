//! Transverse modes on port cross-sections and their outgoing Robin data.
//!
//! Every mode is a product `f(s) c_n(t)` of a longitudinal factor `f` along
//! the port normal and a transverse profile `c_n`. Profiles and longitudinal
//! factors use global coordinates (`x = 0`, `y = 0` anchored), so amplitudes
//! extracted at a port are directly the scattering coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default number of modal terms kept in each port condition.
pub const DEFAULT_DTN_TERMS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortSide {
    /// Outward normal `-x`.
    Left,
    /// Outward normal `+x`.
    Right,
    /// Outward normal `+y`.
    Top,
}

impl PortSide {
    /// Sign of the outward normal along the longitudinal coordinate.
    pub fn outward_sign(self) -> f64 {
        match self {
            PortSide::Left => -1.0,
            PortSide::Right | PortSide::Top => 1.0,
        }
    }
}

/// Which family of transverse profiles lives on the cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortKind {
    /// Horizontal unit strip, Neumann on both walls: `cos(n pi y)`.
    Strip,
    /// Vertical half-branch of width `ell`, Neumann on both sides: `cos(n pi x / ell)`.
    Branch,
    /// Vertical half-branch with Dirichlet on `x = 0`: `sin((2m+1) pi x / (2 ell))`.
    MixedBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Port {
    pub id: PortId,
    pub side: PortSide,
    pub kind: PortKind,
    /// Cross-section interval in the transverse coordinate.
    pub span: (f64, f64),
    /// Longitudinal coordinate of the port line.
    pub position: f64,
}

impl Port {
    pub fn new(id: PortId, side: PortSide, kind: PortKind, span: (f64, f64), position: f64) -> Self {
        Self {
            id,
            side,
            kind,
            span,
            position,
        }
    }

    pub fn width(&self) -> f64 {
        self.span.1 - self.span.0
    }

    /// Transverse coordinate of a point on the port line.
    pub fn transverse(&self, p: [f64; 2]) -> f64 {
        match self.side {
            PortSide::Left | PortSide::Right => p[1],
            PortSide::Top => p[0],
        }
    }
}

/// Transverse profile in the global transverse coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    Cos { freq: f64 },
    Sin { freq: f64 },
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Profile::Cos { freq } => (freq * t).cos(),
            Profile::Sin { freq } => (freq * t).sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeKind {
    Propagating,
    Evanescent,
    WavePacket,
    Threshold,
}

/// Longitudinal factor of a mode, as a function of the coordinate normal to the port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Longitudinal {
    /// `scale * exp(i q s)`
    Wave { q: f64, scale: f64 },
    /// `scale * (exp(-rate s) + mix * exp(rate s))`
    Packet { rate: f64, mix: Complex64, scale: f64 },
    /// `scale * (s + shift)`
    Linear { shift: Complex64, scale: f64 },
    /// `exp(rate s)`
    Exp { rate: f64 },
}

impl Longitudinal {
    pub fn value(&self, s: f64) -> Complex64 {
        match *self {
            Longitudinal::Wave { q, scale } => Complex64::from_polar(scale, q * s),
            Longitudinal::Packet { rate, mix, scale } => {
                ((-rate * s).exp() + mix * (rate * s).exp()) * scale
            }
            Longitudinal::Linear { shift, scale } => (shift + s) * scale,
            Longitudinal::Exp { rate } => Complex64::from((rate * s).exp()),
        }
    }

    pub fn derivative(&self, s: f64) -> Complex64 {
        match *self {
            Longitudinal::Wave { q, scale } => I * q * Complex64::from_polar(scale, q * s),
            Longitudinal::Packet { rate, mix, scale } => {
                (-(-rate * s).exp() + mix * (rate * s).exp()) * (rate * scale)
            }
            Longitudinal::Linear { scale, .. } => Complex64::from(scale),
            Longitudinal::Exp { rate } => Complex64::from(rate * (rate * s).exp()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransverseMode {
    pub index: usize,
    pub profile: Profile,
    /// `integral of profile^2` over the span.
    pub norm_sq: f64,
    pub kind: ModeKind,
    /// Longitudinal rate: wavenumber for propagating modes, decay rate for
    /// evanescent ones and packets, zero at threshold.
    pub rate: f64,
    pub outgoing: Longitudinal,
    /// Present for scattering channels (propagating, packet, threshold).
    pub incoming: Option<Longitudinal>,
    /// Outward normal derivative over value of the outgoing factor at the port.
    pub robin: Complex64,
}

impl TransverseMode {
    pub fn is_channel(&self) -> bool {
        self.incoming.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortBasis {
    pub port: Port,
    pub modes: Vec<TransverseMode>,
}

impl PortBasis {
    pub fn terms(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, n: usize) -> Option<&TransverseMode> {
        self.modes.get(n)
    }

    /// `(d_n f - robin f)` of the incoming factor of mode `n` at the port: the
    /// boundary forcing produced by a unit incident wave in that mode.
    pub fn incident_forcing(&self, n: usize) -> Option<Complex64> {
        let m = self.modes.get(n)?;
        let inc = m.incoming.as_ref()?;
        let s = self.port.position;
        let sign = self.port.side.outward_sign();
        Some(inc.derivative(s) * sign - m.robin * inc.value(s))
    }

    /// Outgoing coefficient of channel `n` from its modal amplitude at the port.
    pub fn outgoing_coefficient(&self, n: usize, amplitude: Complex64, incident: Complex64) -> Option<Complex64> {
        let m = self.modes.get(n)?;
        let s = self.port.position;
        let inc = m.incoming.as_ref()?;
        Some((amplitude - incident * inc.value(s)) / m.outgoing.value(s))
    }
}

fn robin_of(f: &Longitudinal, side: PortSide, s: f64) -> Complex64 {
    f.derivative(s) * side.outward_sign() / f.value(s)
}

fn check_terms(n_terms: usize) -> Result<()> {
    if n_terms == 0 {
        Err(Error::PortBasis("need at least one modal term".into()))
    } else {
        Ok(())
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 && k < PI {
        Ok(())
    } else {
        Err(Error::Wavenumber(k))
    }
}

fn check_branch_width(k: f64, port: &Port) -> Result<()> {
    if port.side != PortSide::Top {
        return Err(Error::PortBasis(format!(
            "branch modes need a top port, got {:?}",
            port.side
        )));
    }
    if (port.width() - PI / k).abs() > 1e-10 {
        return Err(Error::PortBasis(format!(
            "branch port width {} differs from pi/k = {}",
            port.width(),
            PI / k
        )));
    }
    if port.span.1.abs() > 1e-12 {
        return Err(Error::PortBasis("branch port must end on x = 0".into()));
    }
    Ok(())
}

/// Modes of a horizontal unit strip port. With `packet`, mode 1 is the
/// outgoing wave packet `(e^{-beta x} - i e^{beta x}) / sqrt(2 beta)`
/// instead of a purely decaying exponential.
pub fn strip_modes(k: f64, port: &Port, n_terms: usize, packet: bool) -> Result<PortBasis> {
    check_k(k)?;
    check_terms(n_terms)?;
    if port.side == PortSide::Top {
        return Err(Error::PortBasis("strip modes need a horizontal port".into()));
    }
    if port.span.0 != 0.0 || port.width() <= 0.0 {
        return Err(Error::PortBasis(format!(
            "strip port span must start at y = 0, got {:?}",
            port.span
        )));
    }
    if packet && n_terms < 2 {
        return Err(Error::PortBasis(
            "the wave-packet mode needs at least two terms".into(),
        ));
    }
    if packet && port.side != PortSide::Left {
        return Err(Error::PortBasis("wave packets are defined for the left port".into()));
    }
    let w = port.width();
    let sign = port.side.outward_sign();
    let s = port.position;
    let modes = (0..n_terms)
        .map(|n| {
            let freq = n as f64 * PI / w;
            let norm_sq = if n == 0 { w } else { 0.5 * w };
            let (kind, rate, outgoing, incoming) = if n == 0 {
                let scale = 1.0 / (2.0 * k).sqrt();
                // outgoing travels away from the domain: e^{-ikx} on the left.
                let q = sign * k;
                (
                    ModeKind::Propagating,
                    k,
                    Longitudinal::Wave { q, scale },
                    Some(Longitudinal::Wave { q: -q, scale }),
                )
            } else {
                let mu = (freq * freq - k * k).sqrt();
                if n == 1 && packet {
                    let scale = 1.0 / (2.0 * mu).sqrt();
                    (
                        ModeKind::WavePacket,
                        mu,
                        Longitudinal::Packet {
                            rate: mu,
                            mix: -I,
                            scale,
                        },
                        Some(Longitudinal::Packet {
                            rate: mu,
                            mix: I,
                            scale,
                        }),
                    )
                } else {
                    (
                        ModeKind::Evanescent,
                        mu,
                        Longitudinal::Exp { rate: -sign * mu },
                        None,
                    )
                }
            };
            TransverseMode {
                index: n,
                profile: Profile::Cos { freq },
                norm_sq,
                kind,
                rate,
                robin: robin_of(&outgoing, port.side, s),
                outgoing,
                incoming,
            }
        })
        .collect();
    Ok(PortBasis { port: *port, modes })
}

/// Modes of the top port of the Neumann half-branch of width `ell = pi / k`.
/// Mode 1 sits exactly at cut-off and is represented by the linear
/// threshold waves `(y -+ i) cos(pi x / ell) / sqrt(ell)`.
pub fn branch_modes(k: f64, port: &Port, n_terms: usize) -> Result<PortBasis> {
    check_k(k)?;
    check_terms(n_terms)?;
    check_branch_width(k, port)?;
    let ell = PI / k;
    let s = port.position;
    let modes = (0..n_terms)
        .map(|n| {
            let freq = n as f64 * PI / ell;
            let norm_sq = if n == 0 { ell } else { 0.5 * ell };
            let (kind, rate, outgoing, incoming) = match n {
                0 => {
                    let scale = 1.0 / (2.0 * k * ell).sqrt();
                    (
                        ModeKind::Propagating,
                        k,
                        Longitudinal::Wave { q: k, scale },
                        Some(Longitudinal::Wave { q: -k, scale }),
                    )
                }
                1 => {
                    let scale = 1.0 / ell.sqrt();
                    (
                        ModeKind::Threshold,
                        0.0,
                        Longitudinal::Linear { shift: -I, scale },
                        Some(Longitudinal::Linear { shift: I, scale }),
                    )
                }
                _ => {
                    let mu = k * ((n * n - 1) as f64).sqrt();
                    (ModeKind::Evanescent, mu, Longitudinal::Exp { rate: -mu }, None)
                }
            };
            TransverseMode {
                index: n,
                profile: Profile::Cos { freq },
                norm_sq,
                kind,
                rate,
                robin: robin_of(&outgoing, port.side, s),
                outgoing,
                incoming,
            }
        })
        .collect();
    Ok(PortBasis { port: *port, modes })
}

/// Modes of the top port of the half-branch with Dirichlet on `x = 0`.
/// These are the antisymmetric modes of the full branch of width `2 ell`;
/// only `m = 0` propagates, with `gamma = k sqrt(3) / 2`.
pub fn branch_modes_mixed(k: f64, port: &Port, n_terms: usize) -> Result<PortBasis> {
    check_k(k)?;
    check_terms(n_terms)?;
    check_branch_width(k, port)?;
    let ell = PI / k;
    let s = port.position;
    let modes = (0..n_terms)
        .map(|m| {
            let freq = (2 * m + 1) as f64 * PI / (2.0 * ell);
            let (kind, rate, outgoing, incoming) = if m == 0 {
                let gamma = (k * k - freq * freq).sqrt();
                let scale = 1.0 / (gamma * ell).sqrt();
                (
                    ModeKind::Propagating,
                    gamma,
                    Longitudinal::Wave { q: gamma, scale },
                    Some(Longitudinal::Wave { q: -gamma, scale }),
                )
            } else {
                let mu = (freq * freq - k * k).sqrt();
                (ModeKind::Evanescent, mu, Longitudinal::Exp { rate: -mu }, None)
            };
            TransverseMode {
                index: m,
                profile: Profile::Sin { freq },
                norm_sq: 0.5 * ell,
                kind,
                rate,
                robin: robin_of(&outgoing, port.side, s),
                outgoing,
                incoming,
            }
        })
        .collect();
    Ok(PortBasis { port: *port, modes })
}

/// Basis appropriate for the port's kind.
pub fn basis_for(k: f64, port: &Port, n_terms: usize, packet: bool) -> Result<PortBasis> {
    match port.kind {
        PortKind::Strip => strip_modes(k, port, n_terms, packet),
        PortKind::Branch => branch_modes(k, port, n_terms),
        PortKind::MixedBranch => branch_modes_mixed(k, port, n_terms),
    }
}

/// `beta = sqrt(pi^2 - k^2)`, decay rate of the first strip mode.
pub fn strip_beta(k: f64) -> f64 {
    (PI * PI - k * k).sqrt()
}

/// `gamma = sqrt(k^2 - (pi / (2 ell))^2) = k sqrt(3) / 2`.
pub fn branch_gamma(k: f64) -> f64 {
    let ell = PI / k;
    (k * k - (PI / (2.0 * ell)).powi(2)).sqrt()
}

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Quadratic Lagrange shape functions on `[0, 1]` with nodes `0, 1/2, 1`,
/// returned in the order `(start, mid, end)`.
#[inline]
pub(crate) fn p2_line(t: f64) -> [f64; 3] {
    [(1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)]
}

/// `integral of phi_i(t) f(t)` over the edge `[ta, tb]` for the three
/// quadratic shape functions (start, mid, end), 3-point Gauss.
pub(crate) fn edge_moments(ta: f64, tb: f64, f: impl Fn(f64) -> f64) -> [f64; 3] {
    let len = (tb - ta).abs();
    let mut out = [0.0; 3];
    for &(xi, w) in &GAUSS3 {
        let t = ta + (tb - ta) * xi;
        let fv = f(t) * w * len;
        let phi = p2_line(xi);
        for i in 0..3 {
            out[i] += phi[i] * fv;
        }
    }
    out
}

/// Field trace on a port sampled at quadratic boundary nodes: `coords` has
/// `2 m + 1` ascending entries, vertices at even positions and edge midpoints
/// at odd positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PortTrace {
    pub coords: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl PortTrace {
    /// Samples `f` on `edges` uniform edges over `span`.
    pub fn sample(span: (f64, f64), edges: usize, f: impl Fn(f64) -> Complex64) -> Self {
        let n = 2 * edges;
        let coords: Vec<f64> = (0..=n)
            .map(|i| span.0 + (span.1 - span.0) * i as f64 / n as f64)
            .collect();
        let values = coords.iter().map(|&t| f(t)).collect();
        Self { coords, values }
    }
}

/// Modal amplitude `integral(trace c_n) / ||c_n||^2` by composite quadratic quadrature.
pub fn project_trace(trace: &PortTrace, basis: &PortBasis, n: usize) -> Result<Complex64> {
    let mode = basis
        .mode(n)
        .ok_or_else(|| Error::PortBasis(format!("mode {n} beyond {} terms", basis.terms())))?;
    if trace.coords.len() != trace.values.len() || trace.coords.len() < 3 || trace.coords.len() % 2 == 0 {
        return Err(Error::PortBasis(
            "trace must hold 2m+1 quadratic nodes".into(),
        ));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for e in (0..trace.coords.len() - 1).step_by(2) {
        let m = edge_moments(trace.coords[e], trace.coords[e + 2], |t| mode.profile.eval(t));
        for (i, w) in m.iter().enumerate() {
            acc += trace.values[e + i] * *w;
        }
    }
    Ok(acc / mode.norm_sq)
}
