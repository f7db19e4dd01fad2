//! Quadratic finite-element assembly and direct solution of the Helmholtz
//! problem with Neumann walls, optional Dirichlet lines and modal Robin ports.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundaryTag;
use crate::mesh::Mesh;
use crate::modal::{edge_moments, project_trace, Port, PortBasis, PortId, PortTrace};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Reciprocal condition estimates below this flag a solve as ill-conditioned.
pub const RCOND_FLAG: f64 = 1e-12;

/// Six-point degree-4 rule on the reference triangle: barycentric points and
/// weights summing to one.
const DUNAVANT6: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_964_9;
    const W1: f64 = 0.223_381_589_678_011_47;
    const A2: f64 = 0.091_576_213_509_770_74;
    const W2: f64 = 0.109_951_743_655_321_87;
    [
        ([A1, A1, 1.0 - 2.0 * A1], W1),
        ([A1, 1.0 - 2.0 * A1, A1], W1),
        ([1.0 - 2.0 * A1, A1, A1], W1),
        ([A2, A2, 1.0 - 2.0 * A2], W2),
        ([A2, 1.0 - 2.0 * A2, A2], W2),
        ([1.0 - 2.0 * A2, A2, A2], W2),
    ]
};

/// Quadratic shape functions at barycentric point `l`, node order
/// `[v0, v1, v2, e01, e12, e20]`.
#[inline]
pub fn p2_shape(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Gradients of the barycentric coordinates and the triangle area.
fn barycentric_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let twice = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let g = [
        [(p[1][1] - p[2][1]) / twice, (p[2][0] - p[1][0]) / twice],
        [(p[2][1] - p[0][1]) / twice, (p[0][0] - p[2][0]) / twice],
        [(p[0][1] - p[1][1]) / twice, (p[1][0] - p[0][0]) / twice],
    ];
    (g, 0.5 * twice)
}

#[inline]
fn p2_gradients(l: [f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for d in 0..2 {
        out[0][d] = (4.0 * l[0] - 1.0) * g[0][d];
        out[1][d] = (4.0 * l[1] - 1.0) * g[1][d];
        out[2][d] = (4.0 * l[2] - 1.0) * g[2][d];
        out[3][d] = 4.0 * (l[0] * g[1][d] + l[1] * g[0][d]);
        out[4][d] = 4.0 * (l[1] * g[2][d] + l[2] * g[1][d]);
        out[5][d] = 4.0 * (l[2] * g[0][d] + l[0] * g[2][d]);
    }
    out
}

/// Stiffness and mass matrices of one quadratic triangle.
pub fn element_matrices(p: [[f64; 2]; 3]) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let (g, area) = barycentric_gradients(p);
    let mut stiff = [[0.0; 6]; 6];
    let mut mass = [[0.0; 6]; 6];
    for (l, w) in DUNAVANT6 {
        let n = p2_shape(l);
        let dn = p2_gradients(l, &g);
        let w = w * area;
        for i in 0..6 {
            for j in 0..6 {
                stiff[i][j] += w * (dn[i][0] * dn[j][0] + dn[i][1] * dn[j][1]);
                mass[i][j] += w * (n[i] * n[j]);
            }
        }
    }
    (stiff, mass)
}

/// Compressed sparse row matrix with merged duplicates.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Duplicates are summed in insertion order, so mirrored contributions
    /// produce bitwise mirrored entries.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => ZERO,
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|p| self.values[p] * x[self.cols[p]])
                    .sum()
            })
            .collect()
    }

    /// Largest absolute row sum (equal to the 1-norm for symmetric matrices).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                worst = worst.max((self.values[p] - self.get(self.cols[p], i)).norm());
            }
        }
        worst
    }
}

/// Incident channel: unit incoming wave in mode `mode` at port `port`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Incident {
    pub port: PortId,
    pub mode: usize,
}

impl Incident {
    pub fn new(port: PortId, mode: usize) -> Self {
        Self { port, mode }
    }
}

/// Inner products of the quadratic basis functions on a port with each
/// transverse profile: `moments[n][i] = integral(phi_{nodes[i]} c_n)`.
#[derive(Debug, Clone)]
pub struct PortCoupling {
    pub basis: PortBasis,
    pub nodes: Vec<usize>,
    pub moments: Vec<Vec<f64>>,
}

impl PortCoupling {
    pub fn new(mesh: &Mesh, basis: &PortBasis) -> Result<Self> {
        let port = &basis.port;
        let edges = mesh.port_edges(port)?;
        let mut nodes: Vec<usize> = edges.iter().flatten().copied().collect();
        nodes.sort_unstable();
        nodes.dedup();
        let local = |n: usize| nodes.binary_search(&n).unwrap();
        let mut moments = vec![vec![0.0; nodes.len()]; basis.terms()];
        for e in &edges {
            let ta = port.transverse(mesh.node(e[0]));
            let tb = port.transverse(mesh.node(e[2]));
            for (n, mode) in basis.modes.iter().enumerate() {
                let m = edge_moments(ta, tb, |t| mode.profile.eval(t));
                for (i, &node) in e.iter().enumerate() {
                    moments[n][local(node)] += m[i];
                }
            }
        }
        Ok(Self {
            basis: basis.clone(),
            nodes,
            moments,
        })
    }

    /// Modal amplitude `integral(u c_n) / ||c_n||^2` of nodal values `u`.
    pub fn amplitude(&self, u: &[Complex64], n: usize) -> Complex64 {
        let s: Complex64 = self
            .nodes
            .iter()
            .zip(&self.moments[n])
            .map(|(&i, &g)| u[i] * g)
            .sum();
        s / self.basis.modes[n].norm_sq
    }
}

/// Discrete Helmholtz problem `A u = b` on the free nodes, one right-hand
/// side per incident channel.
#[derive(Debug, Clone)]
pub struct HelmholtzSystem {
    pub mesh: Arc<Mesh>,
    pub k: f64,
    pub matrix: CsrMatrix,
    pub rhs: Vec<Vec<Complex64>>,
    pub incidents: Vec<Incident>,
    /// Degree of freedom of each node, `None` when constrained.
    pub dof: Vec<Option<usize>>,
    pub constrained: Vec<usize>,
    pub couplings: Vec<PortCoupling>,
}

/// Assembles `K - k^2 M - sum_n robin_n g_n g_n^T / ||c_n||^2` with port
/// forcing for each incident channel. Nodes on boundary edges tagged
/// `dirichlet` are eliminated. Without incidents a single zero right-hand
/// side is produced.
pub fn assemble(
    mesh: Arc<Mesh>,
    k: f64,
    bases: &[PortBasis],
    incidents: &[Incident],
    dirichlet: Option<BoundaryTag>,
) -> Result<HelmholtzSystem> {
    let mut port_ids: Vec<PortId> = mesh
        .boundary()
        .iter()
        .filter_map(|(_, t)| match t {
            BoundaryTag::Port(p) => Some(*p),
            _ => None,
        })
        .collect();
    port_ids.sort();
    port_ids.dedup();
    for id in &port_ids {
        if !bases.iter().any(|b| b.port.id == *id) {
            return Err(Error::MissingBasis(*id));
        }
    }
    let couplings = bases
        .iter()
        .map(|b| PortCoupling::new(&mesh, b))
        .collect::<Result<Vec<_>>>()?;
    for inc in incidents {
        let c = couplings
            .iter()
            .find(|c| c.basis.port.id == inc.port)
            .ok_or(Error::MissingBasis(inc.port))?;
        if c.basis.incident_forcing(inc.mode).is_none() {
            return Err(Error::IncidentMode {
                port: inc.port,
                mode: inc.mode,
                terms: c.basis.terms(),
            });
        }
    }

    let n_nodes = mesh.n_nodes();
    let constrained = match dirichlet {
        Some(tag) => mesh.boundary_nodes(tag),
        None => Vec::new(),
    };
    let mut dof = vec![None; n_nodes];
    let mut n = 0;
    let mut c = constrained.iter().peekable();
    for (i, d) in dof.iter_mut().enumerate() {
        if c.peek() == Some(&&i) {
            c.next();
        } else {
            *d = Some(n);
            n += 1;
        }
    }

    let k2 = k * k;
    let mut triplets = Vec::with_capacity(36 * mesh.elements().len());
    for (t, el) in mesh.elements().iter().enumerate() {
        let p = mesh.triangles()[t].map(|v| mesh.vertices()[v]);
        let (stiff, mass) = element_matrices(p);
        for i in 0..6 {
            let Some(di) = dof[el[i]] else { continue };
            for j in 0..6 {
                let Some(dj) = dof[el[j]] else { continue };
                triplets.push((di, dj, Complex64::from(stiff[i][j] - k2 * mass[i][j])));
            }
        }
    }
    for cp in &couplings {
        for (mode, g) in cp.basis.modes.iter().zip(&cp.moments) {
            let scale = -mode.robin / mode.norm_sq;
            for (a, &na) in cp.nodes.iter().enumerate() {
                let Some(di) = dof[na] else { continue };
                for (b, &nb) in cp.nodes.iter().enumerate() {
                    let Some(dj) = dof[nb] else { continue };
                    triplets.push((di, dj, scale * (g[a] * g[b])));
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(n, triplets);

    let rhs = if incidents.is_empty() {
        vec![vec![ZERO; n]]
    } else {
        incidents
            .iter()
            .map(|inc| {
                let cp = couplings.iter().find(|c| c.basis.port.id == inc.port).unwrap();
                let forcing = cp.basis.incident_forcing(inc.mode).unwrap();
                let mut b = vec![ZERO; n];
                for (&node, &g) in cp.nodes.iter().zip(&cp.moments[inc.mode]) {
                    if let Some(d) = dof[node] {
                        b[d] += forcing * g;
                    }
                }
                b
            })
            .collect()
    };

    Ok(HelmholtzSystem {
        mesh,
        k,
        matrix,
        rhs,
        incidents: incidents.to_vec(),
        dof,
        constrained,
        couplings,
    })
}

/// Per-solve diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub unknowns: usize,
    pub nonzeros: usize,
    /// `||A x - b|| / ||b||` per right-hand side (absolute when `b = 0`).
    pub residuals: Vec<f64>,
    /// Estimate of `1 / (||A||_1 ||A^-1||_1)`.
    pub rcond: f64,
    pub ill_conditioned: bool,
}

impl SolveDiagnostics {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Provenance carried by a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub k: f64,
    pub label: String,
    pub incident: Option<Incident>,
}

/// Nodal values of a quadratic finite-element function.
#[derive(Debug, Clone)]
pub struct ComplexField {
    pub mesh: Arc<Mesh>,
    pub values: Vec<Complex64>,
    pub meta: FieldMeta,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub fields: Vec<ComplexField>,
    pub diagnostics: SolveDiagnostics,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Sparse LU factorization followed by one solve per right-hand side.
pub fn factor_solve(system: &HelmholtzSystem) -> Result<Solution> {
    let a = &system.matrix;
    let n = a.n;
    if n == 0 {
        return Err(Error::Singular("empty system".into()));
    }
    let triplets: Vec<Triplet<usize, usize, Complex64>> = (0..n)
        .flat_map(|i| (a.row_ptr[i]..a.row_ptr[i + 1]).map(move |p| (i, p)))
        .map(|(i, p)| Triplet::new(i, a.cols[p], a.values[p]))
        .collect();
    let sparse = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Singular(format!("matrix construction failed: {e:?}")))?;
    let lu = sparse
        .sp_lu()
        .map_err(|e| Error::Singular(format!("LU factorization failed: {e:?}")))?;

    let solve = |b: &[Complex64]| -> Result<Vec<Complex64>> {
        let mut x = Mat::<Complex64>::from_fn(n, 1, |i, _| b[i]);
        lu.solve_in_place(x.as_mut());
        let x: Vec<Complex64> = (0..n).map(|i| x[(i, 0)]).collect();
        if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Singular("non-finite solution".into()))
        }
    };

    let mut fields = Vec::with_capacity(system.rhs.len());
    let mut residuals = Vec::with_capacity(system.rhs.len());
    for (r, b) in system.rhs.iter().enumerate() {
        let x = solve(b)?;
        let ax = a.mul_vec(&x);
        let diff: Vec<Complex64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
        let nb = norm2(b);
        residuals.push(if nb > 0.0 { norm2(&diff) / nb } else { norm2(&diff) });
        let mut values = vec![ZERO; system.mesh.n_nodes()];
        for (node, d) in system.dof.iter().enumerate() {
            if let Some(d) = d {
                values[node] = x[*d];
            }
        }
        fields.push(ComplexField {
            mesh: Arc::clone(&system.mesh),
            values,
            meta: FieldMeta {
                k: system.k,
                label: String::new(),
                incident: system.incidents.get(r).copied(),
            },
        });
    }

    // Hager-Higham estimate of ||A^-1||_1. A is complex symmetric, so
    // A^H z = w is solved as A conj(z) = conj(w).
    let mut x = vec![Complex64::from(1.0 / n as f64); n];
    let mut inv_norm = 0.0;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = solve(&x)?;
        inv_norm = y.iter().map(|z| z.norm()).sum::<f64>();
        let xi: Vec<Complex64> = y
            .iter()
            .map(|z| if z.norm() > 0.0 { (z / z.norm()).conj() } else { Complex64::from(1.0) })
            .collect();
        let z: Vec<Complex64> = solve(&xi)?.iter().map(|z| z.conj()).collect();
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(j, v)| (j, v.norm()))
            .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        if zmax <= ztx || j == last_j {
            break;
        }
        last_j = j;
        x = vec![ZERO; n];
        x[j] = Complex64::from(1.0);
    }
    let rcond = 1.0 / (a.norm_inf() * inv_norm);
    let ill_conditioned = rcond.is_nan() || rcond < RCOND_FLAG;
    if ill_conditioned {
        log::warn!("reciprocal condition estimate {rcond:.3e} below {RCOND_FLAG:e}; the truncated problem may be near resonance");
    }

    Ok(Solution {
        fields,
        diagnostics: SolveDiagnostics {
            unknowns: n,
            nonzeros: a.nnz(),
            residuals,
            rcond,
            ill_conditioned,
        },
    })
}

/// `L^2` and `H^1` norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldNorms {
    pub l2: f64,
    pub h1: f64,
}

/// Regular sampling grid `x0 + i dx`, `y0 + j dy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub y0: f64,
    pub y1: f64,
    pub ny: usize,
}

impl GridSpec {
    /// Grid over `[x0, x1] x [y0, y1]` with `per_unit` samples per unit length.
    pub fn with_density(x0: f64, x1: f64, y0: f64, y1: f64, per_unit: f64) -> Self {
        let n = |a: f64, b: f64| (((b - a) * per_unit).round() as usize).max(1) + 1;
        Self {
            x0,
            x1,
            nx: n(x0, x1),
            y0,
            y1,
            ny: n(y0, y1),
        }
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let t = |a: f64, b: f64, i: usize, n: usize| {
            if n <= 1 {
                a
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        [t(self.x0, self.x1, i, self.nx), t(self.y0, self.y1, j, self.ny)]
    }
}

impl ComplexField {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.meta.label = label.into();
        self
    }

    /// Builds a field by evaluating `f` at every node.
    pub fn from_fn(mesh: Arc<Mesh>, k: f64, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..mesh.n_nodes()).map(|i| f(mesh.node(i))).collect();
        Self {
            mesh,
            values,
            meta: FieldMeta {
                k,
                label: String::new(),
                incident: None,
            },
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.values.len() != self.mesh.n_nodes() {
            return Err(Error::Field(format!(
                "{} values for {} nodes",
                self.values.len(),
                self.mesh.n_nodes()
            )));
        }
        if !self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Field("non-finite nodal value".into()));
        }
        Ok(())
    }

    fn element_values(&self, t: usize) -> [Complex64; 6] {
        self.mesh.elements()[t].map(|n| self.values[n])
    }

    /// Quadratic interpolation; `None` outside the mesh.
    pub fn eval(&self, p: [f64; 2]) -> Option<Complex64> {
        let (t, l) = self.mesh.locate(p)?;
        let n = p2_shape(l);
        let u = self.element_values(t);
        Some((0..6).map(|i| u[i] * n[i]).sum())
    }

    /// Samples on a regular grid, row by row (`y` outer, `x` inner).
    pub fn eval_on_grid(&self, grid: &GridSpec) -> Vec<Option<Complex64>> {
        let mut out = Vec::with_capacity(grid.nx * grid.ny);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                out.push(self.eval(grid.point(i, j)));
            }
        }
        out
    }

    /// Norms over elements whose centroid satisfies `region` (all when `None`).
    pub fn norms(&self, region: Option<&dyn Fn([f64; 2]) -> bool>) -> FieldNorms {
        let mesh = &self.mesh;
        let (mut l2, mut grad) = (0.0, 0.0);
        for t in 0..mesh.triangles().len() {
            if let Some(r) = region {
                if !r(mesh.centroid(t)) {
                    continue;
                }
            }
            let p = mesh.triangles()[t].map(|v| mesh.vertices()[v]);
            let (g, area) = barycentric_gradients(p);
            let u = self.element_values(t);
            for (l, w) in DUNAVANT6 {
                let n = p2_shape(l);
                let dn = p2_gradients(l, &g);
                let mut val = ZERO;
                let mut du = [ZERO; 2];
                for i in 0..6 {
                    val += u[i] * n[i];
                    du[0] += u[i] * dn[i][0];
                    du[1] += u[i] * dn[i][1];
                }
                l2 += w * area * val.norm_sqr();
                grad += w * area * (du[0].norm_sqr() + du[1].norm_sqr());
            }
        }
        FieldNorms {
            l2: l2.sqrt(),
            h1: (l2 + grad).sqrt(),
        }
    }

    /// Trace on a port at its quadratic boundary nodes.
    pub fn port_trace(&self, port: &Port) -> Result<PortTrace> {
        let edges = self.mesh.port_edges(port)?;
        let mut coords = Vec::with_capacity(2 * edges.len() + 1);
        let mut values = Vec::with_capacity(2 * edges.len() + 1);
        for (i, e) in edges.iter().enumerate() {
            let nodes: &[usize] = if i == 0 { &e[..] } else { &e[1..] };
            for &n in nodes {
                coords.push(port.transverse(self.mesh.node(n)));
                values.push(self.values[n]);
            }
        }
        Ok(PortTrace { coords, values })
    }

    /// Modal amplitude of mode `n` of `basis` on its port.
    pub fn modal_amplitude(&self, basis: &PortBasis, n: usize) -> Result<Complex64> {
        project_trace(&self.port_trace(&basis.port)?, basis, n)
    }

    /// `L^2` norm of `u(x, .)` over the vertical cross-section at `x`, by
    /// 3-point Gauss on `pieces` equal subintervals of `(0, height)`.
    pub fn section_norm(&self, x: f64, height: f64, pieces: usize) -> Option<f64> {
        let gauss = [
            (0.112_701_665_379_258_31, 5.0 / 18.0),
            (0.5, 8.0 / 18.0),
            (0.887_298_334_620_741_7, 5.0 / 18.0),
        ];
        let dy = height / pieces as f64;
        let mut acc = 0.0;
        for p in 0..pieces {
            for (t, w) in gauss {
                let y = (p as f64 + t) * dy;
                acc += w * dy * self.eval([x, y])?.norm_sqr();
            }
        }
        Some(acc.sqrt())
    }

    /// Largest nodal modulus.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Free-function form of [`ComplexField::norms`].
pub fn field_norms(field: &ComplexField, region: Option<&dyn Fn([f64; 2]) -> bool>) -> FieldNorms {
    field.norms(region)
}

/// Free-function form of [`ComplexField::eval_on_grid`].
pub fn eval_on_grid(field: &ComplexField, grid: &GridSpec) -> Vec<Option<Complex64>> {
    field.eval_on_grid(grid)
}
