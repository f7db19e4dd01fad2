//! Test-side oracles: mode matching for the single-branch guide and random
//! unitary matrices with prescribed structure.
#![allow(dead_code)]

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use wgscat_core::geometry::TruncatedDomain;
use wgscat_core::mesh::generate;
use wgscat_core::solver::element_matrices;

pub const K: f64 = 0.8 * PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `sqrt(k^2 - t^2)` on the branch with nonnegative imaginary part, so that
/// `e^{i q |x|}` is bounded.
fn longitudinal(k: f64, t: f64) -> Complex64 {
    let d = k * k - t * t;
    if d >= 0.0 {
        Complex64::from(d.sqrt())
    } else {
        I * (-d).sqrt()
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Reflection and transmission of the piston mode by the single-branch guide
/// `{0 < y < 1} u ((-ell, ell) x [1, L))`, by mode matching at `x = +-ell`.
///
/// Strips use `strip_modes` cosines; the central block of height `L` uses
/// about `strip_modes * L` cosines so both sides resolve the same
/// transverse scale on the common interface.
pub fn mode_matching(k: f64, height: f64, strip_modes: usize) -> (Complex64, Complex64) {
    let ell = PI / k;
    let n = strip_modes;
    let m = (strip_modes as f64 * height).round() as usize;
    let kn: Vec<Complex64> = (0..n).map(|j| longitudinal(k, j as f64 * PI)).collect();
    let qm: Vec<Complex64> = (0..m).map(|j| longitudinal(k, j as f64 * PI / height)).collect();
    let em: Vec<Complex64> = qm.iter().map(|q| (I * q * 2.0 * ell).exp()).collect();
    let strip_norm = |j: usize| if j == 0 { 1.0 } else { 0.5 };
    let block_norm = |j: usize| if j == 0 { height } else { 0.5 * height };
    let overlap = |a: usize, b: usize| {
        let s = a as f64 * PI;
        let t = b as f64 * PI / height;
        0.5 * (sinc(s - t) + sinc(s + t))
    };
    let p = Mat::<f64>::from_fn(n, m, overlap);

    // Unknowns: reflected R_n, transmitted T_n, block amplitudes A_m, B_m of
    // e^{iq(x+ell)} and e^{-iq(x-ell)}.
    let (r0, t0, a0, b0) = (0, n, 2 * n, 2 * n + m);
    let size = 2 * n + 2 * m;
    let mut a = Mat::<Complex64>::zeros(size, size);
    let mut rhs = Mat::<Complex64>::zeros(size, 1);
    let incident = Complex64::from_polar(1.0, -k * ell);

    for j in 0..n {
        // Continuity of u at x = -ell and x = ell on strip mode j.
        a[(j, r0 + j)] = Complex64::from(strip_norm(j));
        a[(n + j, t0 + j)] = Complex64::from(strip_norm(j));
        for l in 0..m {
            a[(j, a0 + l)] = Complex64::from(-p[(j, l)]);
            a[(j, b0 + l)] = -p[(j, l)] * em[l];
            a[(n + j, a0 + l)] = -p[(j, l)] * em[l];
            a[(n + j, b0 + l)] = Complex64::from(-p[(j, l)]);
        }
    }
    rhs[(0, 0)] = -incident;
    for l in 0..m {
        // Continuity of u_x on block mode l; the walls above the strip are sound-hard.
        let (left, right) = (2 * n + l, 2 * n + m + l);
        let w = I * qm[l] * block_norm(l);
        a[(left, a0 + l)] = w;
        a[(left, b0 + l)] = -w * em[l];
        a[(right, a0 + l)] = w * em[l];
        a[(right, b0 + l)] = -w;
        for j in 0..n {
            a[(left, r0 + j)] = I * kn[j] * p[(j, l)];
            a[(right, t0 + j)] = -I * kn[j] * p[(j, l)];
        }
        rhs[(left, 0)] = I * k * incident * p[(0, l)];
    }
    let sol = a.partial_piv_lu().solve(&rhs);
    (sol[(r0, 0)] * incident, sol[(t0, 0)] * incident)
}

fn gaussian_matrix<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect()
}

/// Orthonormalizes the columns of `cols` in place (modified Gram-Schmidt).
fn orthonormalize(cols: &mut [Vec<Complex64>]) {
    for i in 0..cols.len() {
        for j in 0..i {
            let proj: Complex64 = cols[j].iter().zip(&cols[i]).map(|(a, b)| a.conj() * b).sum();
            let cj = cols[j].clone();
            for (x, y) in cols[i].iter_mut().zip(cj) {
                *x -= proj * y;
            }
        }
        let norm = cols[i].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        cols[i].iter_mut().for_each(|x| *x /= norm);
    }
}

/// Haar-distributed unitary, returned as a row-major array.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    let mut cols = gaussian_matrix(n, rng);
    orthonormalize(&mut cols);
    transpose(&cols)
}

fn transpose(m: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = m.len();
    (0..n).map(|i| (0..n).map(|j| m[j][i]).collect()).collect()
}

fn matmul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

/// Random unitary symmetric 2x2 matrix `U U^T`.
pub fn unitary_symmetric_2<R: Rng>(rng: &mut R) -> [[Complex64; 2]; 2] {
    let u = haar_unitary(2, rng);
    let s = matmul(&u, &transpose(&u));
    [[s[0][0], s[0][1]], [s[1][0], s[1][1]]]
}

/// Random unitary symmetric 4x4 matrix obeying `s1j + w s4j = delta_1j - w delta_4j`
/// with `w` purely imaginary. Built as `W^T W` with `W = Q diag(1, V) E^H`,
/// where `E` is unitary with first column `(1, 0, 0, w) / |.|`, `Q` is real
/// orthogonal and `V` is Haar unitary.
pub fn unitary_symmetric_4_with_relations<R: Rng>(w: Complex64, rng: &mut R) -> [[Complex64; 4]; 4] {
    let zero = Complex64::from(0.0);
    let one = Complex64::from(1.0);
    let e: Vec<Complex64> = {
        let v = [one, zero, zero, w];
        let norm = (1.0 + w.norm_sqr()).sqrt();
        v.iter().map(|x| x / norm).collect()
    };
    let mut e_cols = vec![e];
    e_cols.extend(gaussian_matrix(4, rng).into_iter().take(3));
    orthonormalize(&mut e_cols);
    let e_mat = transpose(&e_cols);

    let mut q_cols: Vec<Vec<Complex64>> = (0..4)
        .map(|_| (0..4).map(|_| Complex64::from(rng.sample::<f64, _>(StandardNormal))).collect())
        .collect();
    orthonormalize(&mut q_cols);
    let q_mat = transpose(&q_cols);

    let v = haar_unitary(3, rng);
    let mut d = vec![vec![zero; 4]; 4];
    d[0][0] = one;
    for i in 0..3 {
        for j in 0..3 {
            d[i + 1][j + 1] = v[i][j];
        }
    }
    let e_h: Vec<Vec<Complex64>> = transpose(&e_mat).iter().map(|r| r.iter().map(|x| x.conj()).collect()).collect();
    let w_mat = matmul(&matmul(&q_mat, &d), &e_h);
    let s = matmul(&transpose(&w_mat), &w_mat);
    std::array::from_fn(|i| std::array::from_fn(|j| s[i][j]))
}

/// Relative errors `(energy, mass)` of a quadratic field assembled element by
/// element over a strip mesh, against tensor Gauss-Legendre integrals.
pub fn quadratic_patch_errors() -> (f64, f64) {
    let domain = TruncatedDomain::strip(K, 0.0, 2.0).unwrap();
    let mesh = generate(&domain, 0.3).unwrap();
    let p = |x: f64, y: f64| 1.0 + 2.0 * x - y + 0.5 * x * x + x * y - 3.0 * y * y;
    let grad = |x: f64, y: f64| [2.0 + x + y, -1.0 + x - 6.0 * y];
    let (mut energy, mut mass) = (0.0, 0.0);
    for (t, el) in mesh.elements().iter().enumerate() {
        let verts = mesh.triangles()[t].map(|v| mesh.vertices()[v]);
        let (ke, me) = element_matrices(verts);
        let u = el.map(|n| {
            let q = mesh.node(n);
            p(q[0], q[1])
        });
        for i in 0..6 {
            for j in 0..6 {
                energy += u[i] * ke[i][j] * u[j];
                mass += u[i] * me[i][j] * u[j];
            }
        }
    }
    let gl = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.0, 0.568_888_888_888_888_9),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let (mut e_ref, mut m_ref) = (0.0, 0.0);
    for (sx, wx) in gl {
        for (sy, wy) in gl {
            let (x, y) = (1.0 + sx, 0.5 + 0.5 * sy);
            let w = wx * wy * 0.5;
            let g = grad(x, y);
            e_ref += w * (g[0] * g[0] + g[1] * g[1]);
            m_ref += w * p(x, y).powi(2);
        }
    }
    ((energy - e_ref).abs() / e_ref, (mass - m_ref).abs() / m_ref)
}
