//! Dense complex linear algebra on small square matrices: spectral norms,
//! Hermitian and normal spectral decompositions, inverses, Kronecker
//! products, positivity tests.
//!
//! Everything downstream measures inequalities at 1e-9..1e-12 relative
//! tolerance, so the decompositions here are Jacobi-based: slowest of the
//! standard methods, but the most accurate, and the matrices never exceed a
//! few dozen rows.

mod jacobi;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Square complex matrix, row-major. Construction validates shape and
/// finiteness; all arithmetic assumes (and preserves) both.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Row-major entries; length must be dim*dim and every entry finite.
    pub fn from_data(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Malformed(format!(
                "matrix of dim {dim} needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(z) = data.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Malformed(format!("non-finite entry {z}")));
        }
        Ok(CMatrix { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Malformed(format!(
                "expected {dim} rows of length {dim}"
            )));
        }
        CMatrix::from_data(dim, rows.into_iter().flatten().collect())
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = CMatrix::zeros(diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        CMatrix::from_diag(
            &diag
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect::<Vec<_>>(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: Complex64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// (M + M^*)/2.
    pub fn hermitian_part(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Frobenius distance to the adjoint, the hermiticity residue.
    pub fn herm_residue(&self) -> f64 {
        (self - &self.adjoint()).frobenius()
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "mat_vec length mismatch");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Row-major flattening; the coordinate convention used by the GNS space.
    pub fn flatten(&self) -> Vec<Complex64> {
        self.data.clone()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    fn select_columns(&self, order: &[usize]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim);
        for (newj, &oldj) in order.iter().enumerate() {
            for i in 0..self.dim {
                m[(i, newj)] = self[(i, oldj)];
            }
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl std::ops::Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "add: dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "sub: dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "mul: dimension mismatch");
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let aik = self[(i, k)];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix(dim={})", self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{:+.4}{:+.4}i", self[(i, j)].re, self[(i, j)].im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Eigendecomposition M = transform diag(eigenvalues) transform^*.
///
/// Invariants: transform unitary within 1e-12*dim; reconstruction within
/// 1e-10*||input|| (Hermitian) or 1e-9*||input|| (normal).
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<Complex64>,
    pub transform: CMatrix,
}

impl SpectralData {
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = self.transform.dim();
        let mut vd = self.transform.clone();
        for j in 0..d {
            for i in 0..d {
                vd[(i, j)] *= self.eigenvalues[j];
            }
        }
        &vd * &self.transform.adjoint()
    }
}

/// Largest singular value, 0 for the zero matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    jacobi::one_sided_svd(m, false)
        .sigma
        .first()
        .copied()
        .unwrap_or(0.0)
}

/// All singular values, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    jacobi::one_sided_svd(m, false).sigma
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending. The input
/// is symmetrized before decomposition to absorb round-off, but must be
/// Hermitian within 1e-10 relative to start with.
pub fn eig_hermitian(h: &CMatrix) -> Result<SpectralData> {
    let scale = h.frobenius();
    let residue = h.herm_residue();
    if residue > 1e-10 * scale.max(1e-300) && residue > 0.0 {
        return Err(Error::Domain(format!(
            "matrix is not Hermitian: ||H - H*|| = {residue:.3e} vs scale {scale:.3e}"
        )));
    }
    let (v, evals) = jacobi::hermitian_jacobi(&h.hermitian_part());
    Ok(SpectralData {
        eigenvalues: evals.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        transform: v,
    })
}

/// Spectral decomposition of a normal matrix via simultaneous
/// diagonalization of its commuting Hermitian and anti-Hermitian parts.
/// Eigenvalues sorted lexicographically by (re, im). The off-diagonal residue
/// of V^H N V is verified at 1e-9*||N||.
pub fn decompose_normal(n: &CMatrix) -> Result<SpectralData> {
    let d = n.dim();
    let norm = spectral_norm(n);
    let commutator = &(&n.adjoint() * n) - &(n * &n.adjoint());
    let normality = spectral_norm(&commutator);
    if normality > 1e-9 * norm * norm && normality > 0.0 {
        return Err(Error::Domain(format!(
            "matrix is not normal: ||N*N - NN*|| = {normality:.3e} vs 1e-9*||N||^2 = {:.3e}",
            1e-9 * norm * norm
        )));
    }
    let h1 = n.hermitian_part();
    let h2 = (n - &n.adjoint()).scale(Complex64::new(0.0, -0.5));
    let v = jacobi::joint_jacobi(&h1, &h2);
    let t = &(&v.adjoint() * n) * &v;
    let mut off = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                off += t[(i, j)].norm_sqr();
            }
        }
    }
    let off = off.sqrt();
    if off > 1e-9 * norm.max(1e-300) {
        return Err(Error::Internal(format!(
            "normal diagonalization residue {off:.3e} exceeds 1e-9*||N|| = {:.3e}",
            1e-9 * norm
        )));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (t[(i, i)], t[(j, j)]);
        a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
    });
    Ok(SpectralData {
        eigenvalues: order.iter().map(|&i| t[(i, i)]).collect(),
        transform: v.select_columns(&order),
    })
}

/// Continuous functional calculus on a normal matrix: V diag(F(lambda)) V^H.
/// `f` returns None where it is undefined; that surfaces as a domain error
/// naming the offending eigenvalue.
pub fn apply_function(
    n: &CMatrix,
    f: impl Fn(Complex64) -> Option<Complex64>,
) -> Result<CMatrix> {
    let sd = decompose_normal(n)?;
    let mut mapped = Vec::with_capacity(sd.eigenvalues.len());
    for &lam in &sd.eigenvalues {
        match f(lam) {
            Some(w) if w.re.is_finite() && w.im.is_finite() => mapped.push(w),
            _ => {
                return Err(Error::Domain(format!(
                    "function undefined at eigenvalue {lam}"
                )))
            }
        }
    }
    Ok(SpectralData {
        eigenvalues: mapped,
        transform: sd.transform,
    }
    .reconstruct())
}

/// Inverse together with its conditioning diagnostics.
#[derive(Clone, Debug)]
pub struct Inverse {
    pub matrix: CMatrix,
    pub cond: f64,
    pub sigma_min: f64,
    /// ||M M^{-1} - I||, checked against 1e-9*(1 + cond).
    pub residual: f64,
}

/// SVD-based inverse: M^{-1} = V diag(1/sigma) U^H. Rejects matrices whose
/// smallest singular value sits below 1e-12*||M||.
pub fn matrix_inverse(m: &CMatrix) -> Result<Inverse> {
    let d = m.dim();
    let svd = jacobi::one_sided_svd(m, true);
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    let sigma_min = svd.sigma.last().copied().unwrap_or(0.0);
    if sigma_min <= 1e-12 * sigma_max || sigma_min == 0.0 {
        return Err(Error::Singular {
            sigma_min,
            threshold: 1e-12 * sigma_max,
        });
    }
    let mut vs = svd.v.clone();
    for j in 0..d {
        for i in 0..d {
            vs[(i, j)] /= svd.sigma[j];
        }
    }
    let inv = &vs * &svd.u.adjoint();
    let cond = sigma_max / sigma_min;
    let residual = spectral_norm(&(&(m * &inv) - &CMatrix::identity(d)));
    if residual > 1e-9 * (1.0 + cond) {
        return Err(Error::Internal(format!(
            "inverse residual {residual:.3e} exceeds 1e-9*(1 + cond) with cond {cond:.3e}"
        )));
    }
    Ok(Inverse {
        matrix: inv,
        cond,
        sigma_min,
        residual,
    })
}

/// Kronecker product; block (j, k) of the result is X[j,k] * Y.
pub fn kron(x: &CMatrix, y: &CMatrix) -> CMatrix {
    let (dx, dy) = (x.dim(), y.dim());
    let mut out = CMatrix::zeros(dx * dy);
    for i in 0..dx {
        for j in 0..dx {
            let xij = x[(i, j)];
            if xij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for a in 0..dy {
                for b in 0..dy {
                    out[(i * dy + a, j * dy + b)] = xij * y[(a, b)];
                }
            }
        }
    }
    out
}

/// Positive semidefiniteness up to a mixed tolerance: min eigenvalue down to
/// -tol*max(1, ||H||) still counts as PSD.
pub fn is_psd(h: &CMatrix, tol: f64) -> Result<bool> {
    let sd = eig_hermitian(h)?;
    let min_eig = sd.eigenvalues.first().map(|z| z.re).unwrap_or(0.0);
    let max_abs = sd
        .eigenvalues
        .iter()
        .map(|z| z.re.abs())
        .fold(0.0, f64::max);
    Ok(min_eig >= -tol * max_abs.max(1.0))
}

/// <u, v> with the convention conjugate-linear in the first slot.
pub fn vec_inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    assert_eq!(u.len(), v.len(), "vec_inner length mismatch");
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Serializable mirror of [`CMatrix`]: dim plus separate real and imaginary
/// dim x dim arrays. The repo-wide matrix file format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixRepr {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixRepr {
    fn from(m: &CMatrix) -> Self {
        let d = m.dim();
        MatrixRepr {
            dim: d,
            re: (0..d)
                .map(|i| (0..d).map(|j| m[(i, j)].re).collect())
                .collect(),
            im: (0..d)
                .map(|i| (0..d).map(|j| m[(i, j)].im).collect())
                .collect(),
        }
    }
}

impl MatrixRepr {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.dim == 0 {
            return Err(Error::Malformed("matrix dim must be positive".into()));
        }
        if self.re.len() != self.dim || self.im.len() != self.dim {
            return Err(Error::Malformed(format!(
                "expected {0}x{0} re/im arrays",
                self.dim
            )));
        }
        let mut data = Vec::with_capacity(self.dim * self.dim);
        for (rrow, irow) in self.re.iter().zip(&self.im) {
            if rrow.len() != self.dim || irow.len() != self.dim {
                return Err(Error::Malformed(format!(
                    "expected {0}x{0} re/im arrays",
                    self.dim
                )));
            }
            for (&re, &im) in rrow.iter().zip(irow) {
                data.push(Complex64::new(re, im));
            }
        }
        CMatrix::from_data(self.dim, data)
    }
}
