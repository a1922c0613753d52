//! States on M_d and the standard-deviation seminorms they induce.
//!
//! For a state `mu(A) = trace(rho A)` the seminorm `L0(A) = ||A - mu(A)||_mu`
//! generalizes classical standard deviation; its symmetrization
//! `sigma_mu(A) = max(L0(A), L0(A*))` is the object whose Leibniz, strongly
//! Leibniz, and Markov properties this crate measures. Two operator
//! realizations compute `sigma_mu` as a commutator norm: the rank-one Dirac
//! operator on the unitization (mapped out by [`UnitizationDirac`]) and the
//! GNS projection onto the cyclic vector ([`GnsSpace::commutator_norm`]).
//! Both equalities are exact identities, so the tests pin them at 1e-9.

use num_complex::Complex64;

use crate::linalg::{self, spectral_norm, CMatrix};
use crate::{Error, Result};

fn c_re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// State on M_d given by a density matrix. `faithful` and `tracial` are
/// computed at construction, never trusted from the caller: faithful means
/// min eigenvalue >= 1e-10, tracial means rho = I/d within 1e-12.
///
/// Construction accepts non-faithful densities (boundary states show up as
/// duality maximizers); operations that mathematically require faithfulness
/// reject them instead of regularizing.
#[derive(Clone, Debug)]
pub struct State {
    dim: usize,
    rho: CMatrix,
    faithful: bool,
    tracial: bool,
    min_eig: f64,
}

impl State {
    pub fn new(rho: CMatrix) -> Result<State> {
        let dim = rho.dim();
        if dim == 0 {
            return Err(Error::Malformed("state dimension must be positive".into()));
        }
        let herm = rho.herm_residue();
        if herm > 1e-12 {
            return Err(Error::Malformed(format!(
                "density not Hermitian: ||rho - rho*|| = {herm:.3e} > 1e-12"
            )));
        }
        let tr = rho.trace();
        if (tr - c_re(1.0)).norm() > 1e-12 {
            return Err(Error::Malformed(format!(
                "density trace {tr} differs from 1 beyond 1e-12"
            )));
        }
        let eig = linalg::eig_hermitian(&rho)?;
        let min_eig = eig.eigenvalues.first().map(|z| z.re).unwrap_or(0.0);
        if min_eig < -1e-12 {
            return Err(Error::Malformed(format!(
                "density not positive semidefinite: min eigenvalue {min_eig:.3e} < -1e-12"
            )));
        }
        let mut tracial_dist = (&rho - &CMatrix::identity(dim).scale(c_re(1.0 / dim as f64)))
            .frobenius();
        if !tracial_dist.is_finite() {
            tracial_dist = f64::INFINITY;
        }
        Ok(State {
            dim,
            rho,
            faithful: min_eig >= 1e-10,
            tracial: tracial_dist <= 1e-12,
            min_eig,
        })
    }

    /// The unique tracial state on M_d, rho = I/d exactly.
    pub fn tracial(dim: usize) -> State {
        let rho = CMatrix::identity(dim).scale(c_re(1.0 / dim as f64));
        State {
            dim,
            rho,
            faithful: true,
            tracial: true,
            min_eig: 1.0 / dim as f64,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn is_faithful(&self) -> bool {
        self.faithful
    }

    pub fn is_tracial(&self) -> bool {
        self.tracial
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig
    }

    fn check_dim(&self, a: &CMatrix, context: &'static str) -> Result<()> {
        if a.dim() != self.dim {
            return Err(Error::DimMismatch {
                left: self.dim,
                right: a.dim(),
                context,
            });
        }
        Ok(())
    }

    /// mu(A) = trace(rho A).
    pub fn expectation(&self, a: &CMatrix) -> Result<Complex64> {
        self.check_dim(a, "expectation")?;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            for k in 0..self.dim {
                acc += self.rho[(i, k)] * a[(k, i)];
            }
        }
        Ok(acc)
    }

    /// ||A||_mu = mu(A* A)^{1/2}. The radicand is a trace of a PSD product,
    /// so anything below -1e-14*(1 + ||A||_F^2) means our own arithmetic broke.
    pub fn mu_norm(&self, a: &CMatrix) -> Result<f64> {
        self.check_dim(a, "mu_norm")?;
        let gram = &a.adjoint() * a;
        let radicand = self.expectation(&gram)?.re;
        let floor = 1e-14 * (1.0 + a.frobenius().powi(2));
        if radicand < -floor {
            return Err(Error::Internal(format!(
                "mu_norm radicand {radicand:.3e} below -{floor:.3e}"
            )));
        }
        Ok(radicand.max(0.0).sqrt())
    }

    /// L0(A) = ||A - mu(A)||_mu, cross-checked against the variance formula
    /// (mu(A*A) - |mu(A)|^2)^{1/2}.
    pub fn l0(&self, a: &CMatrix) -> Result<f64> {
        self.check_dim(a, "l0")?;
        let mean = self.expectation(a)?;
        let centered = a - &CMatrix::identity(self.dim).scale(mean);
        let direct = self.mu_norm(&centered)?;
        let var_radicand = self.expectation(&(&a.adjoint() * a))?.re - mean.norm_sqr();
        // compare radicands, not roots: near zero the roots lose half the digits
        let scale = 1.0 + a.frobenius().powi(2);
        if (direct * direct - var_radicand).abs() > 1e-12 * scale {
            return Err(Error::Internal(format!(
                "l0 disagreement: centered norm^2 {:.12e} vs variance formula {var_radicand:.12e}",
                direct * direct
            )));
        }
        Ok(direct)
    }

    /// sigma_mu(A) = max(L0(A), L0(A*)). The symmetric max makes the
    /// *-invariance sigma_mu(A) = sigma_mu(A*) bitwise.
    pub fn sigma_mu(&self, a: &CMatrix) -> Result<f64> {
        Ok(f64::max(self.l0(a)?, self.l0(&a.adjoint())?))
    }

    /// Whether A lies in the null space of sigma_mu at working precision.
    /// For faithful states on M_d, d >= 2, only scalars do.
    pub fn is_definite_null(&self, a: &CMatrix, tol: f64) -> Result<bool> {
        let sigma = self.sigma_mu(a)?;
        Ok(sigma <= tol * (1.0 + spectral_norm(a)))
    }

    /// Evaluates g(alpha) = max(||A - alpha||_mu, ||A* - conj(alpha)||_mu) at
    /// mu(A) and at each candidate. Prop-3.2-style optimality says the gap
    /// min_candidates g - g(mu(A)) can only be negative through round-off.
    pub fn quotient_optimality(
        &self,
        a: &CMatrix,
        candidates: &[Complex64],
    ) -> Result<QuotientReport> {
        self.check_dim(a, "quotient_optimality")?;
        let g = |alpha: Complex64| -> Result<f64> {
            let shift = CMatrix::identity(self.dim).scale(alpha);
            Ok(f64::max(
                self.mu_norm(&(a - &shift))?,
                self.mu_norm(&(&a.adjoint() - &shift.adjoint()))?,
            ))
        };
        let base = g(self.expectation(a)?)?;
        let mut best = f64::INFINITY;
        let mut best_candidate = None;
        for &alpha in candidates {
            let v = g(alpha)?;
            if v < best {
                best = v;
                best_candidate = Some(alpha);
            }
        }
        Ok(QuotientReport {
            base,
            best,
            best_candidate,
            min_gap: best - base,
        })
    }

    /// Margin of the Markov inequality sigma_mu(F(N)) <= Lip(F) sigma_mu(N)
    /// for normal N; returns Lip(F)*sigma_mu(N) - sigma_mu(F(N)).
    pub fn markov_margin(&self, n: &CMatrix, f: &LipschitzFn) -> Result<f64> {
        self.check_dim(n, "markov_margin")?;
        let sd = linalg::decompose_normal(n)?;
        let scale = sd.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if f.requires_real_spectrum() {
            let max_im = sd.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if max_im > 1e-9 * (1.0 + scale) {
                return Err(Error::Domain(format!(
                    "piecewise-linear functions need a real spectrum; found imaginary part {max_im:.3e}"
                )));
            }
        }
        let mut mapped = Vec::with_capacity(sd.eigenvalues.len());
        for &lam in &sd.eigenvalues {
            mapped.push(f.eval(lam)?);
        }
        let f_of_n = linalg::SpectralData {
            eigenvalues: mapped,
            transform: sd.transform,
        }
        .reconstruct();
        Ok(f.lip_constant() * self.sigma_mu(n)? - self.sigma_mu(&f_of_n)?)
    }
}

/// Result of [`State::quotient_optimality`].
#[derive(Clone, Debug)]
pub struct QuotientReport {
    /// g at the canonical point mu(A).
    pub base: f64,
    /// Best candidate value (infinite when no candidates).
    pub best: f64,
    pub best_candidate: Option<Complex64>,
    /// best - base; >= -1e-10*(1 + ||A||) by optimality of mu(A).
    pub min_gap: f64,
}

/// GNS coordinates for a faithful state: A maps to the flattened d^2-vector
/// of A rho^{1/2}, which turns <A, B>_mu = trace(rho A* B) into the plain
/// Hilbert-Schmidt inner product. Left multiplication becomes kron(A, I) and
/// the projection onto the cyclic vector becomes an honest rank-one matrix.
#[derive(Clone, Debug)]
pub struct GnsSpace {
    state: State,
    root: CMatrix,
    dirac_e: CMatrix,
}

impl GnsSpace {
    pub fn new(state: &State) -> Result<GnsSpace> {
        if !state.is_faithful() {
            return Err(Error::NonFaithful {
                min_eig: state.min_eigenvalue(),
                threshold: 1e-10,
            });
        }
        let sd = linalg::eig_hermitian(state.rho())?;
        let d = state.dim();
        let mut root = sd.transform.clone();
        for j in 0..d {
            let s = sd.eigenvalues[j].re.max(0.0).sqrt();
            for i in 0..d {
                root[(i, j)] *= s;
            }
        }
        let root = &root * &sd.transform.adjoint();
        let w = root.flatten();
        let h = d * d;
        let mut dirac_e = CMatrix::zeros(h);
        for u in 0..h {
            for v in 0..h {
                dirac_e[(u, v)] = w[u] * w[v].conj();
            }
        }
        Ok(GnsSpace {
            state: state.clone(),
            root,
            dirac_e,
        })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    /// rho^{1/2}.
    pub fn root(&self) -> &CMatrix {
        &self.root
    }

    /// Coordinates of A, a vector of length d^2.
    pub fn embed(&self, a: &CMatrix) -> Result<Vec<Complex64>> {
        self.state.check_dim(a, "gns embed")?;
        Ok((a * &self.root).flatten())
    }

    /// pi(A), left multiplication in coordinates: kron(A, I_d).
    pub fn left_rep(&self, a: &CMatrix) -> Result<CMatrix> {
        self.state.check_dim(a, "gns left_rep")?;
        Ok(linalg::kron(a, &CMatrix::identity(self.state.dim())))
    }

    /// Orthogonal projection onto the span of embed(identity).
    pub fn dirac_e(&self) -> &CMatrix {
        &self.dirac_e
    }

    /// ||[E, pi(A)]||; equals sigma_mu(A) exactly, which the tests pin down.
    pub fn commutator_norm(&self, a: &CMatrix) -> Result<f64> {
        let l = self.left_rep(a)?;
        let comm = &(&self.dirac_e * &l) - &(&l * &self.dirac_e);
        Ok(spectral_norm(&comm))
    }
}

/// ||[E, pi(A)]|| in the GNS coordinates of s.
pub fn dirac_norm_projection(s: &State, a: &CMatrix) -> Result<f64> {
    GnsSpace::new(s)?.commutator_norm(a)
}

/// Element (A, alpha) of the unitization A + C.
#[derive(Clone, Debug)]
pub struct UnitizedElement {
    pub a: CMatrix,
    pub alpha: Complex64,
}

/// Rank-one Dirac operator D = |xi><eta| - |eta><xi| on K = H + C, where xi
/// is the GNS image of the identity and eta spans the extra coordinate.
#[derive(Clone, Debug)]
pub struct UnitizationDirac {
    gns: GnsSpace,
    matrix: CMatrix,
}

impl UnitizationDirac {
    pub fn new(state: &State) -> Result<UnitizationDirac> {
        let gns = GnsSpace::new(state)?;
        let w = gns.root.flatten();
        let h = w.len();
        let mut matrix = CMatrix::zeros(h + 1);
        for (u, &wu) in w.iter().enumerate() {
            matrix[(u, h)] = wu;
            matrix[(h, u)] = -wu.conj();
        }
        Ok(UnitizationDirac { gns, matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn gns(&self) -> &GnsSpace {
        &self.gns
    }

    /// The action of (A, alpha) on H + C: block diag(pi(A), alpha).
    pub fn action(&self, x: &UnitizedElement) -> Result<CMatrix> {
        let l = self.gns.left_rep(&x.a)?;
        let h = l.dim();
        let mut t = CMatrix::zeros(h + 1);
        for i in 0..h {
            for j in 0..h {
                t[(i, j)] = l[(i, j)];
            }
        }
        t[(h, h)] = x.alpha;
        Ok(t)
    }

    /// ||[D, (A, alpha)]||; equals max(||A - alpha||_mu, ||A* - conj(alpha)||_mu).
    pub fn commutator_norm(&self, x: &UnitizedElement) -> Result<f64> {
        let t = self.action(x)?;
        let comm = &(&self.matrix * &t) - &(&t * &self.matrix);
        Ok(spectral_norm(&comm))
    }
}

/// ||[D, (A, alpha)]|| for the rank-one Dirac operator of s.
pub fn dirac_norm_unitization(s: &State, x: &UnitizedElement) -> Result<f64> {
    UnitizationDirac::new(s)?.commutator_norm(x)
}

/// Two independent copies of a state: the product state rho x rho on M_{d^2}
/// together with omega0 = identity.
#[derive(Clone, Debug)]
pub struct IndependentCopies {
    pub state: State,
    pub product_state: CMatrix,
    pub omega0: CMatrix,
}

impl IndependentCopies {
    pub fn new(state: &State) -> IndependentCopies {
        let rho = state.rho();
        IndependentCopies {
            state: state.clone(),
            product_state: linalg::kron(rho, rho),
            omega0: CMatrix::identity(state.dim() * state.dim()),
        }
    }
}

/// For tracial mu: the squared product-norm of 1 x A - A x 1 against
/// 2(mu(A*A) - |mu(A)|^2). Returns (lhs, rhs) for the caller to compare.
pub fn independent_copies_identity(s: &State, a: &CMatrix) -> Result<(f64, f64)> {
    if a.dim() != s.dim() {
        return Err(Error::DimMismatch {
            left: s.dim(),
            right: a.dim(),
            context: "independent_copies_identity",
        });
    }
    if !s.is_tracial() {
        let d = s.dim();
        let dist = (s.rho() - &CMatrix::identity(d).scale(c_re(1.0 / d as f64))).frobenius();
        return Err(Error::NonTracial { distance: dist });
    }
    let copies = IndependentCopies::new(s);
    let d = s.dim();
    let id = CMatrix::identity(d);
    let x = &linalg::kron(&id, a) - &linalg::kron(a, &id);
    let gram = &x.adjoint() * &x;
    let mut lhs = Complex64::new(0.0, 0.0);
    let dd = d * d;
    for i in 0..dd {
        for k in 0..dd {
            lhs += copies.product_state[(i, k)] * gram[(k, i)];
        }
    }
    let second = s.expectation(&(&a.adjoint() * a))?.re;
    let mean = s.expectation(a)?;
    Ok((lhs.re, 2.0 * (second - mean.norm_sqr())))
}

/// Scalar function with a known exact Lipschitz constant. Piecewise-linear
/// functions live on the real line (constant extension beyond the last
/// breakpoint); the complex-spectrum cases are the closed forms where Lip is
/// available exactly.
#[derive(Clone, Debug)]
pub enum LipschitzFn {
    PiecewiseLinear { breakpoints: Vec<f64>, values: Vec<f64> },
    /// F(z) = 1/z on the domain |z| >= min_modulus.
    Reciprocal { min_modulus: f64 },
    /// F(z) = conj(z).
    Conjugation,
    /// F(z) = a z + b.
    Affine { a: Complex64, b: Complex64 },
}

impl LipschitzFn {
    pub fn piecewise_linear(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<LipschitzFn> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return Err(Error::Malformed(
                "piecewise-linear function needs n >= 2 breakpoints with n values".into(),
            ));
        }
        if breakpoints.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Malformed("non-finite breakpoint or value".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Malformed(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(LipschitzFn::PiecewiseLinear {
            breakpoints,
            values,
        })
    }

    pub fn reciprocal(min_modulus: f64) -> Result<LipschitzFn> {
        if !(min_modulus > 0.0) || !min_modulus.is_finite() {
            return Err(Error::Malformed(format!(
                "reciprocal needs a positive min modulus, got {min_modulus}"
            )));
        }
        Ok(LipschitzFn::Reciprocal { min_modulus })
    }

    pub fn lip_constant(&self) -> f64 {
        match self {
            LipschitzFn::PiecewiseLinear {
                breakpoints,
                values,
            } => breakpoints
                .windows(2)
                .zip(values.windows(2))
                .map(|(xs, ys)| ((ys[1] - ys[0]) / (xs[1] - xs[0])).abs())
                .fold(0.0, f64::max),
            LipschitzFn::Reciprocal { min_modulus } => 1.0 / (min_modulus * min_modulus),
            LipschitzFn::Conjugation => 1.0,
            LipschitzFn::Affine { a, .. } => a.norm(),
        }
    }

    pub fn requires_real_spectrum(&self) -> bool {
        matches!(self, LipschitzFn::PiecewiseLinear { .. })
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self {
            LipschitzFn::PiecewiseLinear {
                breakpoints,
                values,
            } => {
                if z.im.abs() > 1e-9 * (1.0 + z.norm()) {
                    return Err(Error::Domain(format!(
                        "piecewise-linear function undefined off the real line, at {z}"
                    )));
                }
                Ok(c_re(eval_piecewise(breakpoints, values, z.re)))
            }
            LipschitzFn::Reciprocal { min_modulus } => {
                if z.norm() < min_modulus * (1.0 - 1e-12) {
                    return Err(Error::Domain(format!(
                        "reciprocal undefined at {z}: modulus below domain bound {min_modulus}"
                    )));
                }
                Ok(z.inv())
            }
            LipschitzFn::Conjugation => Ok(z.conj()),
            LipschitzFn::Affine { a, b } => Ok(a * z + b),
        }
    }
}

fn eval_piecewise(breakpoints: &[f64], values: &[f64], x: f64) -> f64 {
    let n = breakpoints.len();
    if x <= breakpoints[0] {
        return values[0];
    }
    if x >= breakpoints[n - 1] {
        return values[n - 1];
    }
    let k = breakpoints.partition_point(|&b| b <= x) - 1;
    let t = (x - breakpoints[k]) / (breakpoints[k + 1] - breakpoints[k]);
    values[k] + t * (values[k + 1] - values[k])
}
