//! Symmetric staircase waveguides and their truncated computational domains.
//!
//! A geometry is described by the even profile `g(x)`: the guide occupies
//! `0 < y < g(x)`, with `g` piecewise constant and breakpoints only at integer
//! multiples of `ell = pi / k`. The branch height `L` is `g` on `[0, ell)`,
//! and the profile drops to the unit strip beyond the last step.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal::{Port, PortId, PortKind, PortSide};

/// Relative slack used when comparing coordinates produced by arithmetic on `ell`.
pub(crate) const GEOM_EPS: f64 = 1e-10;

fn check_wavenumber(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 && k < PI {
        Ok(())
    } else {
        Err(Error::Wavenumber(k))
    }
}

/// Even staircase waveguide `{0 < y < g(x)}` at wavenumber `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometrySpec", into = "GeometrySpec")]
pub struct WaveguideGeometry {
    k: f64,
    ell: f64,
    /// `heights[j]` is the profile on `[j ell, (j+1) ell)`; the last entry is 1
    /// and extends to infinity.
    heights: Vec<f64>,
}

/// Serialized form of a geometry: `{"k": .., "L": .., "tail_heights": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub k: f64,
    #[serde(rename = "L")]
    pub branch_height: f64,
    pub tail_heights: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_nonmonotone: bool,
}

impl TryFrom<GeometrySpec> for WaveguideGeometry {
    type Error = Error;

    fn try_from(spec: GeometrySpec) -> Result<Self> {
        WaveguideGeometry::staircase_with(
            spec.k,
            spec.branch_height,
            &spec.tail_heights,
            spec.allow_nonmonotone,
        )
    }
}

impl From<WaveguideGeometry> for GeometrySpec {
    fn from(g: WaveguideGeometry) -> Self {
        let allow_nonmonotone = g.heights[1..].windows(2).any(|w| w[1] > w[0]);
        GeometrySpec {
            k: g.k,
            branch_height: g.heights[0],
            tail_heights: g.heights[1..].to_vec(),
            allow_nonmonotone,
        }
    }
}

impl WaveguideGeometry {
    /// The single-branch guide: a unit strip with the branch `(-ell, ell) x [1, L)`.
    pub fn omega(k: f64, branch_height: f64) -> Result<Self> {
        Self::staircase(k, branch_height, &[1.0])
    }

    /// Staircase guide with `g = L` on `[0, ell)` followed by `tail_heights`
    /// on successive intervals of length `ell`. The tail must be
    /// nonincreasing, at least 1 and end at exactly 1.
    pub fn staircase(k: f64, branch_height: f64, tail_heights: &[f64]) -> Result<Self> {
        Self::staircase_with(k, branch_height, tail_heights, false)
    }

    /// Like [`WaveguideGeometry::staircase`]; `allow_nonmonotone` lifts the
    /// monotonicity requirement on the tail. Evenness and breakpoints at
    /// multiples of `ell` are always enforced.
    pub fn staircase_with(
        k: f64,
        branch_height: f64,
        tail_heights: &[f64],
        allow_nonmonotone: bool,
    ) -> Result<Self> {
        check_wavenumber(k)?;
        if !(branch_height.is_finite() && branch_height > 1.0) {
            return Err(Error::BranchHeight(branch_height));
        }
        let Some(&last) = tail_heights.last() else {
            return Err(Error::Staircase("tail_heights is empty".into()));
        };
        if last != 1.0 {
            return Err(Error::Staircase(format!(
                "tail must end at height 1, got {last}"
            )));
        }
        if let Some((j, h)) = tail_heights
            .iter()
            .enumerate()
            .find(|(_, h)| !(h.is_finite() && **h >= 1.0))
        {
            return Err(Error::Staircase(format!(
                "tail height #{j} = {h} is below the unit strip"
            )));
        }
        if !allow_nonmonotone {
            if let Some(j) = tail_heights.windows(2).position(|w| w[1] > w[0]) {
                return Err(Error::Staircase(format!(
                    "tail heights must be nonincreasing: {} < {} at step {}",
                    tail_heights[j],
                    tail_heights[j + 1],
                    j + 1
                )));
            }
        }
        let mut heights = Vec::with_capacity(tail_heights.len() + 1);
        heights.push(branch_height);
        heights.extend_from_slice(tail_heights);
        Ok(Self {
            k,
            ell: PI / k,
            heights,
        })
    }

    /// Same staircase with a different branch height.
    pub fn with_branch_height(&self, branch_height: f64) -> Result<Self> {
        Self::staircase_with(
            self.k,
            branch_height,
            &self.heights[1..],
            self.heights[1..].windows(2).any(|w| w[1] > w[0]),
        )
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Half-width of the branch, `pi / k`.
    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn branch_height(&self) -> f64 {
        self.heights[0]
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn tail_heights(&self) -> &[f64] {
        &self.heights[1..]
    }

    /// `(step_index, height)` pairs.
    pub fn steps(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.heights.iter().copied().enumerate()
    }

    /// True when this is the plain single-branch guide.
    pub fn is_omega(&self) -> bool {
        self.heights.len() == 2
    }

    /// Abscissa of the outermost breakpoint, `(n - 1) ell`.
    pub fn last_breakpoint(&self) -> f64 {
        (self.heights.len() - 1) as f64 * self.ell
    }

    /// The profile `g(x)`.
    pub fn profile(&self, x: f64) -> f64 {
        let j = (x.abs() / self.ell).floor();
        let j = if j.is_finite() { j as usize } else { usize::MAX };
        self.heights[j.min(self.heights.len() - 1)]
    }

    pub fn half(&self, symmetry: SymmetryBc) -> HalfGuideProblem {
        HalfGuideProblem {
            geometry: self.clone(),
            symmetry,
        }
    }

    pub fn limit(&self, symmetry: SymmetryBc) -> LimitGeometry {
        LimitGeometry {
            k: self.k,
            ell: self.ell,
            tail_heights: self.heights[1..].to_vec(),
            symmetry,
        }
    }

    pub fn default_margins(&self) -> Margins {
        Margins::for_ell(self.ell)
    }
}

/// Boundary condition imposed on the symmetry line `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryBc {
    NeumannOnSigma,
    DirichletOnSigma,
}

/// Restriction of a symmetric guide to `x < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfGuideProblem {
    pub geometry: WaveguideGeometry,
    pub symmetry: SymmetryBc,
}

impl HalfGuideProblem {
    /// Height of the segment `Sigma = {0} x (0, g(0))`.
    pub fn sigma_height(&self) -> f64 {
        self.geometry.branch_height()
    }
}

/// Half guide whose branch over `(-ell, 0)` extends to `y = +infinity`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitGeometry {
    pub k: f64,
    pub ell: f64,
    /// Profile on `(-(j+2) ell, -(j+1) ell)`; ends at 1.
    pub tail_heights: Vec<f64>,
    pub symmetry: SymmetryBc,
}

impl LimitGeometry {
    /// The limit of the single-branch guide.
    pub fn omega(k: f64, symmetry: SymmetryBc) -> Result<Self> {
        check_wavenumber(k)?;
        Ok(Self {
            k,
            ell: PI / k,
            tail_heights: vec![1.0],
            symmetry,
        })
    }

    /// Width of the vertical channel.
    pub fn channel_width(&self) -> f64 {
        self.ell
    }

    /// Top of the tallest step outside the branch; junction level for the top port.
    pub fn junction_height(&self) -> f64 {
        self.tail_heights.iter().copied().fold(1.0, f64::max)
    }
}

/// Distances from the outermost geometric feature to the artificial ports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub left: f64,
    pub top: f64,
}

impl Margins {
    /// Ports at `2 ell` from the origin for the single-branch guide and the
    /// top port `2 ell` above the junction.
    pub fn for_ell(ell: f64) -> Self {
        Self {
            left: ell,
            top: 2.0 * ell,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            left: self.left * factor,
            top: self.top * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Wall,
    Port(PortId),
    Symmetry,
}

/// Axis-aligned piece of the boundary, oriented counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub tag: BoundaryTag,
}

impl BoundarySegment {
    pub fn is_vertical(&self) -> bool {
        self.start[0] == self.end[0]
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).abs() + (self.end[1] - self.start[1]).abs()
    }

    /// Whether the segment `[a, b]` lies on this one.
    pub fn contains(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let tol = GEOM_EPS * (1.0 + self.length());
        let on = |p: [f64; 2]| {
            if self.is_vertical() {
                let (lo, hi) = minmax(self.start[1], self.end[1]);
                (p[0] - self.start[0]).abs() <= tol && p[1] >= lo - tol && p[1] <= hi + tol
            } else {
                let (lo, hi) = minmax(self.start[0], self.end[0]);
                (p[1] - self.start[1]).abs() <= tol && p[0] >= lo - tol && p[0] <= hi + tol
            }
        };
        on(a) && on(b)
    }

    /// For walls: whether `cos(kx)` has zero normal derivative along the segment.
    pub fn is_cos_compatible(&self, k: f64) -> bool {
        !self.is_vertical() || (k * (k * self.start[0]).sin()).abs() < 1e-9
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A vertical slab `[x0, x1] x (0, top)` of a skyline domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Column {
    pub x0: f64,
    pub x1: f64,
    pub top: f64,
}

/// Bounded domain with artificial ports, ready for meshing.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDomain {
    pub k: f64,
    pub ell: f64,
    /// Left to right, contiguous.
    pub columns: Vec<Column>,
    /// Closed counterclockwise boundary.
    pub segments: Vec<BoundarySegment>,
    pub ports: Vec<Port>,
    pub symmetry: Option<SymmetryBc>,
}

/// Anything that can be cut down to a [`TruncatedDomain`].
#[derive(Debug, Clone, PartialEq)]
pub enum GuideProblem {
    Full(WaveguideGeometry),
    Half(HalfGuideProblem),
    Limit(LimitGeometry),
}

pub const LEFT_PORT: PortId = PortId(0);
pub const RIGHT_PORT: PortId = PortId(1);
pub const TOP_PORT: PortId = PortId(1);

pub fn truncate(problem: &GuideProblem, margins: Margins) -> Result<TruncatedDomain> {
    match problem {
        GuideProblem::Full(g) => TruncatedDomain::full(g, margins),
        GuideProblem::Half(h) => TruncatedDomain::half(h, margins),
        GuideProblem::Limit(l) => TruncatedDomain::limit(l, margins),
    }
}

fn check_margin(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > GEOM_EPS {
        Ok(())
    } else {
        Err(Error::Margin { name, value })
    }
}

/// Columns on `x < 0` for a staircase with the given profile heights
/// (`heights[0]` is the column next to the axis), ending at `-x_port`.
fn left_columns(ell: f64, heights: &[f64], x_port: f64) -> Vec<Column> {
    let n = heights.len();
    let mut cols = vec![Column {
        x0: -x_port,
        x1: -((n - 1) as f64) * ell,
        top: heights[n - 1],
    }];
    for j in (0..n - 1).rev() {
        cols.push(Column {
            x0: -((j + 1) as f64) * ell,
            x1: -(j as f64) * ell,
            top: heights[j],
        });
    }
    cols
}

impl TruncatedDomain {
    /// Full guide with ports at `x = -X` and `x = X`.
    pub fn full(geom: &WaveguideGeometry, margins: Margins) -> Result<Self> {
        check_margin("left", margins.left)?;
        let ell = geom.ell;
        let x_port = geom.last_breakpoint() + margins.left;
        let mut columns = left_columns(ell, &geom.heights, x_port);
        let mirrored: Vec<Column> = columns
            .iter()
            .rev()
            .map(|c| Column {
                x0: -c.x1,
                x1: -c.x0,
                top: c.top,
            })
            .collect();
        columns.extend(mirrored);
        let ports = vec![
            Port::new(LEFT_PORT, PortSide::Left, PortKind::Strip, (0.0, 1.0), -x_port),
            Port::new(RIGHT_PORT, PortSide::Right, PortKind::Strip, (0.0, 1.0), x_port),
        ];
        Self::assemble(
            geom.k,
            ell,
            columns,
            ports,
            None,
            BoundaryTag::Port(RIGHT_PORT),
        )
    }

    /// Half guide on `x < 0` with the symmetry segment `Sigma` on `x = 0`.
    pub fn half(problem: &HalfGuideProblem, margins: Margins) -> Result<Self> {
        check_margin("left", margins.left)?;
        let geom = &problem.geometry;
        let x_port = geom.last_breakpoint() + margins.left;
        let columns = left_columns(geom.ell, &geom.heights, x_port);
        let ports = vec![Port::new(
            LEFT_PORT,
            PortSide::Left,
            PortKind::Strip,
            (0.0, 1.0),
            -x_port,
        )];
        Self::assemble(
            geom.k,
            geom.ell,
            columns,
            ports,
            Some(problem.symmetry),
            BoundaryTag::Symmetry,
        )
    }

    /// Limit half guide cut by a left port and a top port across the branch.
    pub fn limit(limit: &LimitGeometry, margins: Margins) -> Result<Self> {
        check_margin("left", margins.left)?;
        check_margin("top", margins.top)?;
        let ell = limit.ell;
        let y_top = limit.junction_height() + margins.top;
        let mut heights = vec![y_top];
        heights.extend_from_slice(&limit.tail_heights);
        let x_port = (heights.len() - 1) as f64 * ell + margins.left;
        let columns = left_columns(ell, &heights, x_port);
        let top_kind = match limit.symmetry {
            SymmetryBc::NeumannOnSigma => PortKind::Branch,
            SymmetryBc::DirichletOnSigma => PortKind::MixedBranch,
        };
        let ports = vec![
            Port::new(LEFT_PORT, PortSide::Left, PortKind::Strip, (0.0, 1.0), -x_port),
            Port::new(TOP_PORT, PortSide::Top, top_kind, (-ell, 0.0), y_top),
        ];
        Self::assemble(
            limit.k,
            ell,
            columns,
            ports,
            Some(limit.symmetry),
            BoundaryTag::Symmetry,
        )
    }

    /// Straight unit strip `(x0, x1) x (0, 1)` with ports at both ends.
    pub fn strip(k: f64, x0: f64, x1: f64) -> Result<Self> {
        check_wavenumber(k)?;
        let columns = vec![Column { x0, x1, top: 1.0 }];
        let ports = vec![
            Port::new(LEFT_PORT, PortSide::Left, PortKind::Strip, (0.0, 1.0), x0),
            Port::new(RIGHT_PORT, PortSide::Right, PortKind::Strip, (0.0, 1.0), x1),
        ];
        Self::assemble(k, PI / k, columns, ports, None, BoundaryTag::Port(RIGHT_PORT))
    }

    fn assemble(
        k: f64,
        ell: f64,
        columns: Vec<Column>,
        ports: Vec<Port>,
        symmetry: Option<SymmetryBc>,
        right_tag: BoundaryTag,
    ) -> Result<Self> {
        for c in &columns {
            if !(c.x1 - c.x0 > GEOM_EPS && c.top > GEOM_EPS) {
                return Err(Error::DegenerateDomain(format!("zero-area column {c:?}")));
            }
        }
        let top_port = ports.iter().find(|p| p.side == PortSide::Top);
        let x_min = columns[0].x0;
        let x_max = columns[columns.len() - 1].x1;
        let mut segments = vec![BoundarySegment {
            start: [x_min, 0.0],
            end: [x_max, 0.0],
            tag: BoundaryTag::Wall,
        }];
        let last = columns[columns.len() - 1];
        segments.push(BoundarySegment {
            start: [x_max, 0.0],
            end: [x_max, last.top],
            tag: right_tag,
        });
        for (i, c) in columns.iter().enumerate().rev() {
            let is_port = top_port.is_some_and(|p| {
                (p.span.0 - c.x0).abs() < GEOM_EPS
                    && (p.span.1 - c.x1).abs() < GEOM_EPS
                    && (p.position - c.top).abs() < GEOM_EPS
            });
            segments.push(BoundarySegment {
                start: [c.x1, c.top],
                end: [c.x0, c.top],
                tag: match (is_port, top_port) {
                    (true, Some(p)) => BoundaryTag::Port(p.id),
                    _ => BoundaryTag::Wall,
                },
            });
            let next_top = if i == 0 { 0.0 } else { columns[i - 1].top };
            if next_top != c.top {
                let tag = if i == 0 {
                    BoundaryTag::Port(LEFT_PORT)
                } else {
                    BoundaryTag::Wall
                };
                segments.push(BoundarySegment {
                    start: [c.x0, c.top],
                    end: [c.x0, next_top],
                    tag,
                });
            }
        }
        let domain = Self {
            k,
            ell,
            columns,
            segments,
            ports,
            symmetry,
        };
        domain.validate()?;
        Ok(domain)
    }

    fn validate(&self) -> Result<()> {
        let n = self.segments.len();
        for i in 0..n {
            let a = self.segments[i].end;
            let b = self.segments[(i + 1) % n].start;
            if a != b {
                return Err(Error::DegenerateDomain(format!(
                    "boundary not closed between segments {i} and {}",
                    (i + 1) % n
                )));
            }
        }
        let area = self.signed_area();
        let expected: f64 = self.columns.iter().map(|c| (c.x1 - c.x0) * c.top).sum();
        if !(area > 0.0 && (area - expected).abs() <= 1e-12 * expected) {
            return Err(Error::DegenerateDomain(format!(
                "polygon area {area} does not match column area {expected}"
            )));
        }
        Ok(())
    }

    /// Shoelace area of the boundary polygon (positive for counterclockwise).
    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .segments
            .iter()
            .map(|s| s.start[0] * s.end[1] - s.end[0] * s.start[1])
            .sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.columns.iter().map(|c| (c.x1 - c.x0) * c.top).sum()
    }

    pub fn port(&self, id: PortId) -> Option<&Port> {
        self.ports.iter().find(|p| p.id == id)
    }

    pub fn walls(&self) -> impl Iterator<Item = &BoundarySegment> {
        self.segments.iter().filter(|s| s.tag == BoundaryTag::Wall)
    }

    pub fn symmetry_segment(&self) -> Option<&BoundarySegment> {
        self.segments.iter().find(|s| s.tag == BoundaryTag::Symmetry)
    }

    /// Tag of the boundary piece containing the segment `[a, b]`, if any.
    pub fn tag_at(&self, a: [f64; 2], b: [f64; 2]) -> Option<BoundaryTag> {
        self.segments
            .iter()
            .find(|s| s.contains(a, b))
            .map(|s| s.tag)
    }

    /// Top of the column containing `x`.
    pub fn top_at(&self, x: f64) -> f64 {
        self.columns
            .iter()
            .find(|c| x >= c.x0 - GEOM_EPS && x <= c.x1 + GEOM_EPS)
            .map_or(0.0, |c| c.top)
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.columns[0].x0, self.columns[self.columns.len() - 1].x1)
    }

    /// Whether a point lies in the closed domain.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (x0, x1) = self.x_range();
        if p[0] < x0 - GEOM_EPS || p[0] > x1 + GEOM_EPS || p[1] < -GEOM_EPS {
            return false;
        }
        // On a breakpoint the taller neighbour counts.
        let top = self
            .columns
            .iter()
            .filter(|c| p[0] >= c.x0 - GEOM_EPS && p[0] <= c.x1 + GEOM_EPS)
            .map(|c| c.top)
            .fold(0.0, f64::max);
        p[1] <= top + GEOM_EPS
    }

    /// Every port cross-section lies in a uniform section of the guide.
    pub fn ports_on_uniform_sections(&self) -> bool {
        self.ports.iter().all(|p| match p.side {
            PortSide::Left => self.columns[0].x1 - p.position > GEOM_EPS,
            PortSide::Right => p.position - self.columns[self.columns.len() - 1].x0 > GEOM_EPS,
            PortSide::Top => {
                let beside = self
                    .columns
                    .iter()
                    .filter(|c| c.x1 <= p.span.0 + GEOM_EPS || c.x0 >= p.span.1 - GEOM_EPS)
                    .map(|c| c.top)
                    .fold(0.0, f64::max);
                p.position - beside > GEOM_EPS
            }
        })
    }
}
