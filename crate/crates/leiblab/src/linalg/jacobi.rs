//! Jacobi-rotation kernels: Hermitian eigendecomposition, simultaneous
//! diagonalization of a commuting Hermitian pair, and one-sided SVD.
//!
//! All three share the same 2x2 primitive. A Hermitian 2x2 block
//! [[a, b], [conj(b), g]] has Bloch vector h = (a - g, 2 Re b, 2 Im b); the
//! unitary that aligns h with the +z axis diagonalizes the block. For a pair
//! of matrices the rotation instead aligns the direction that carries the
//! largest combined diagonal mass: the top eigenvector of sum_k h_k h_k^T
//! (the classical joint-diagonalization choice).

use num_complex::Complex64;

use super::CMatrix;

/// Plane rotation R = [[c, -conj(s)], [s, c]] acting on coordinates (p, q),
/// with c real in [1/sqrt(2), 1], c^2 + |s|^2 = 1.
struct Rotation {
    c: f64,
    s: Complex64,
}

/// Rotation aligning the direction of (x, y, z) with +z. Returns None for the
/// zero vector. The sign fix x >= 0 keeps c away from 0 and makes the result
/// independent of eigenvector sign conventions.
fn bloch_rotation(x: f64, y: f64, z: f64) -> Option<Rotation> {
    let n = (x * x + y * y + z * z).sqrt();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    let (mut ux, mut uy, mut uz) = (x / n, y / n, z / n);
    if ux < 0.0 {
        ux = -ux;
        uy = -uy;
        uz = -uz;
    }
    let c = ((1.0 + ux) / 2.0).sqrt();
    let s = Complex64::new(uy, -uz) / (2.0 * c);
    Some(Rotation { c, s })
}

/// A <- A R on columns (p, q).
fn rotate_right(a: &mut CMatrix, p: usize, q: usize, r: &Rotation) {
    let d = a.dim();
    for i in 0..d {
        let ap = a[(i, p)];
        let aq = a[(i, q)];
        a[(i, p)] = r.c * ap + r.s * aq;
        a[(i, q)] = -r.s.conj() * ap + r.c * aq;
    }
}

/// A <- R^H A on rows (p, q).
fn rotate_left(a: &mut CMatrix, p: usize, q: usize, r: &Rotation) {
    let d = a.dim();
    for j in 0..d {
        let pj = a[(p, j)];
        let qj = a[(q, j)];
        a[(p, j)] = r.c * pj + r.s.conj() * qj;
        a[(q, j)] = -r.s * pj + r.c * qj;
    }
}

fn offdiag_sq(a: &CMatrix) -> f64 {
    let d = a.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc
}

/// Cyclic Jacobi for a Hermitian matrix. Returns (V, eigenvalues ascending)
/// with V^H H V diagonal, i.e. H = V diag V^H.
pub(super) fn hermitian_jacobi(h: &CMatrix) -> (CMatrix, Vec<f64>) {
    let d = h.dim();
    let mut a = h.clone();
    let mut v = CMatrix::identity(d);
    if d > 1 {
        let scale = a.frobenius().max(f64::MIN_POSITIVE);
        let stop_sq = (8e-16 * scale) * (8e-16 * scale);
        // Entries below entry_tol cannot lift the off-diagonal mass above the
        // stopping level, so rotating on them is wasted work.
        let entry_tol = 8e-16 * scale / (2.0 * d as f64);
        for _sweep in 0..40 {
            if offdiag_sq(&a) <= stop_sq {
                break;
            }
            let mut rotated = false;
            for p in 0..d {
                for q in (p + 1)..d {
                    let b = a[(p, q)];
                    if b.norm_sqr() <= entry_tol * entry_tol {
                        continue;
                    }
                    let x = a[(p, p)].re - a[(q, q)].re;
                    if let Some(r) = bloch_rotation(x, 2.0 * b.re, 2.0 * b.im) {
                        rotate_right(&mut a, p, q, &r);
                        rotate_left(&mut a, p, q, &r);
                        a[(p, q)] = Complex64::new(0.0, 0.0);
                        a[(q, p)] = Complex64::new(0.0, 0.0);
                        rotate_right(&mut v, p, q, &r);
                        rotated = true;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let evals: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    (v.select_columns(&order), evals)
}

/// Simultaneous Jacobi for a commuting Hermitian pair. Returns V such that
/// both V^H M_k V are diagonal up to the achievable residue; callers verify
/// the residue on the matrix they actually care about.
pub(super) fn joint_jacobi(m1: &CMatrix, m2: &CMatrix) -> CMatrix {
    let d = m1.dim();
    let mut a1 = m1.clone();
    let mut a2 = m2.clone();
    let mut v = CMatrix::identity(d);
    if d < 2 {
        return v;
    }
    let scale = a1.frobenius().hypot(a2.frobenius()).max(f64::MIN_POSITIVE);
    let stop_sq = (8e-16 * scale) * (8e-16 * scale);
    let entry_tol_sq = {
        let t = 8e-16 * scale / (2.0 * d as f64);
        t * t
    };
    for _sweep in 0..60 {
        if offdiag_sq(&a1) + offdiag_sq(&a2) <= stop_sq {
            break;
        }
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let b1 = a1[(p, q)];
                let b2 = a2[(p, q)];
                if b1.norm_sqr() + b2.norm_sqr() <= entry_tol_sq {
                    continue;
                }
                let h1 = [a1[(p, p)].re - a1[(q, q)].re, 2.0 * b1.re, 2.0 * b1.im];
                let h2 = [a2[(p, p)].re - a2[(q, q)].re, 2.0 * b2.re, 2.0 * b2.im];
                let mut g = CMatrix::zeros(3);
                for i in 0..3 {
                    for j in 0..3 {
                        g[(i, j)] = Complex64::new(h1[i] * h1[j] + h2[i] * h2[j], 0.0);
                    }
                }
                let (gv, _) = hermitian_jacobi(&g);
                // Largest eigenvalue sits in the last column (ascending order).
                let u = (gv[(0, 2)].re, gv[(1, 2)].re, gv[(2, 2)].re);
                if let Some(r) = bloch_rotation(u.0, u.1, u.2) {
                    rotate_right(&mut a1, p, q, &r);
                    rotate_left(&mut a1, p, q, &r);
                    rotate_right(&mut a2, p, q, &r);
                    rotate_left(&mut a2, p, q, &r);
                    rotate_right(&mut v, p, q, &r);
                    rotated = true;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

pub(super) struct Svd {
    /// Columns with index below the numerical rank are unit left singular
    /// vectors; the rest are zero.
    pub u: CMatrix,
    /// Descending.
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

/// One-sided (Hestenes) Jacobi SVD: orthogonalizes columns by right
/// rotations, so small singular values keep high relative accuracy.
/// `want_uv` skips the U/V bookkeeping when only singular values are needed.
pub(super) fn one_sided_svd(m: &CMatrix, want_uv: bool) -> Svd {
    let d = m.dim();
    let mut a = m.clone();
    let mut v = CMatrix::identity(if want_uv { d } else { 0 });
    for _sweep in 0..40 {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let mut gpp = 0.0;
                let mut gqq = 0.0;
                let mut gpq = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)];
                    gpp += ap.norm_sqr();
                    gqq += aq.norm_sqr();
                    gpq += ap.conj() * aq;
                }
                if gpq.norm() <= 1e-15 * (gpp * gqq).sqrt() + f64::MIN_POSITIVE {
                    continue;
                }
                if let Some(r) = bloch_rotation(gpp - gqq, 2.0 * gpq.re, 2.0 * gpq.im) {
                    rotate_right(&mut a, p, q, &r);
                    if want_uv {
                        rotate_right(&mut v, p, q, &r);
                    }
                    rotated = true;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut norms: Vec<f64> = (0..d)
        .map(|j| (0..d).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    norms = order.iter().map(|&j| norms[j]).collect();
    if !want_uv {
        return Svd {
            u: CMatrix::zeros(0),
            sigma: norms,
            v: CMatrix::zeros(0),
        };
    }
    let a = a.select_columns(&order);
    let v = v.select_columns(&order);
    let mut u = CMatrix::zeros(d);
    let cutoff = norms.first().copied().unwrap_or(0.0) * 1e-15 * d as f64;
    for j in 0..d {
        if norms[j] > cutoff && norms[j] > 0.0 {
            for i in 0..d {
                u[(i, j)] = a[(i, j)] / norms[j];
            }
        }
    }
    Svd {
        u,
        sigma: norms,
        v,
    }
}
