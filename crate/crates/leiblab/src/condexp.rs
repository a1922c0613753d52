//! Conditional expectation onto block scalars and the module seminorms.
//!
//! `M_{nd}` is read as n x n blocks of d x d matrices. The slice map
//! `cond_exp` applies the state to every block, leaving an n x n scalar
//! matrix; it is the conditional expectation onto the subalgebra
//! `M_n (x) I_d`. Out of it come a module inner product `e_inner`, the norm
//! `e_norm`, the centered seminorm `l0_tilde`, and its symmetrization
//! `sigma_e`. The block Dirac operator and the sampled localizations give two
//! independent operator pictures of the same quantities.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, spectral_norm, CMatrix};
use crate::ncprob::State;
use crate::{Error, Result};

/// Element of M_{nd} carrying its block structure (n x n blocks, each d x d).
#[derive(Clone, Debug)]
pub struct ModuleElement {
    value: CMatrix,
    n: usize,
    d: usize,
}

impl ModuleElement {
    pub fn new(value: CMatrix, n: usize, d: usize) -> Result<ModuleElement> {
        if n == 0 || d == 0 {
            return Err(Error::Malformed(
                "block structure needs positive n and d".into(),
            ));
        }
        if value.dim() != n * d {
            return Err(Error::DimMismatch {
                left: value.dim(),
                right: n * d,
                context: "module element block structure",
            });
        }
        Ok(ModuleElement { value, n, d })
    }

    pub fn value(&self) -> &CMatrix {
        &self.value
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn block(&self, j: usize, k: usize) -> CMatrix {
        let d = self.d;
        CMatrix::from_fn(d, |r, c| self.value[(j * d + r, k * d + c)])
    }

    pub fn adjoint(&self) -> ModuleElement {
        ModuleElement {
            value: self.value.adjoint(),
            n: self.n,
            d: self.d,
        }
    }

    /// X (x) I_d for scalar X in M_n.
    pub fn embed_scalar(x: &CMatrix, d: usize) -> ModuleElement {
        ModuleElement {
            value: linalg::kron(x, &CMatrix::identity(d)),
            n: x.dim(),
            d,
        }
    }
}

/// The slice map id_n (x) mu from M_{nd} onto M_n determined by a state on M_d.
#[derive(Clone, Debug)]
pub struct CondExp {
    n: usize,
    state: State,
}

impl CondExp {
    pub fn new(n: usize, state: State) -> Result<CondExp> {
        if n == 0 {
            return Err(Error::Malformed("block count n must be positive".into()));
        }
        Ok(CondExp { n, state })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.state.dim()
    }

    pub fn total_dim(&self) -> usize {
        self.n * self.state.dim()
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    fn check(&self, a: &ModuleElement, context: &'static str) -> Result<()> {
        if a.n != self.n || a.d != self.state.dim() {
            return Err(Error::DimMismatch {
                left: a.value.dim(),
                right: self.total_dim(),
                context,
            });
        }
        Ok(())
    }

    /// Applies the state to each block: result (j,k) = mu(block_{jk}(A)).
    pub fn cond_exp(&self, a: &ModuleElement) -> Result<CMatrix> {
        self.check(a, "cond_exp")?;
        let mut out = CMatrix::zeros(self.n);
        for j in 0..self.n {
            for k in 0..self.n {
                out[(j, k)] = self.state.expectation(&a.block(j, k))?;
            }
        }
        Ok(out)
    }

    /// <A,B> = cond_exp(A* B), the module-valued inner product.
    pub fn e_inner(&self, a: &ModuleElement, b: &ModuleElement) -> Result<CMatrix> {
        self.check(a, "e_inner")?;
        self.check(b, "e_inner")?;
        let prod = ModuleElement {
            value: &a.value.adjoint() * &b.value,
            n: self.n,
            d: a.d,
        };
        self.cond_exp(&prod)
    }

    /// ||A||_E = ||cond_exp(A* A)||^{1/2} with the norm taken spectrally.
    pub fn e_norm(&self, a: &ModuleElement) -> Result<f64> {
        let gram = self.e_inner(a, a)?;
        let eig = linalg::eig_hermitian(&gram)?.real_eigenvalues();
        Ok(eig.last().copied().unwrap_or(0.0).max(0.0).sqrt())
    }

    /// ||A - cond_exp(A) (x) I_d||_E, the distance to the block scalars.
    pub fn l0_tilde(&self, a: &ModuleElement) -> Result<f64> {
        self.check(a, "l0_tilde")?;
        let center = ModuleElement::embed_scalar(&self.cond_exp(a)?, a.d);
        let diff = ModuleElement {
            value: &a.value - &center.value,
            n: a.n,
            d: a.d,
        };
        self.e_norm(&diff)
    }

    /// max(l0_tilde(A), l0_tilde(A*)).
    pub fn sigma_e(&self, a: &ModuleElement) -> Result<f64> {
        Ok(f64::max(self.l0_tilde(a)?, self.l0_tilde(&a.adjoint())?))
    }

    /// cond_exp(A*A) - cond_exp(A*) cond_exp(A), positive semidefinite by the
    /// Schwarz inequality for completely positive unital maps.
    pub fn schwarz_gap(&self, a: &ModuleElement) -> Result<CMatrix> {
        self.check(a, "schwarz_gap")?;
        let second = self.e_inner(a, a)?;
        let ea = self.cond_exp(a)?;
        let ea_star = self.cond_exp(&a.adjoint())?;
        Ok(&second - &(&ea_star * &ea))
    }

    /// Sampled localization of the module commutator picture: for `samples`
    /// random faithful states tau on M_n, computes ||[E_hat, A_hat]|| in the
    /// coordinates of the state tau (x) rho and returns (sup over samples,
    /// sigma_e(A)). Every sample is bounded by sigma_e(A); how close the
    /// supremum comes is an experiment, not a guarantee.
    pub fn localized_norm_bound(
        &self,
        a: &ModuleElement,
        samples: usize,
        seed: u64,
    ) -> Result<(f64, f64)> {
        self.check(a, "localized_norm_bound")?;
        if !self.state.is_faithful() {
            return Err(Error::NonFaithful {
                min_eig: self.state.min_eigenvalue(),
                threshold: 1e-10,
            });
        }
        let bound = self.sigma_e(a)?;
        let mut sup: f64 = 0.0;
        for i in 0..samples {
            let tau = sample_faithful_state(self.n, seed, i as u64)?;
            sup = sup.max(self.localized_commutator_norm(a, &tau)?);
        }
        Ok((sup, bound))
    }

    /// ||[E_hat, A_hat]|| in the coordinates a |-> a (tau (x) rho)^{1/2},
    /// where E_hat projects onto the image of M_n (x) I_d.
    fn localized_commutator_norm(&self, a: &ModuleElement, tau: &CMatrix) -> Result<f64> {
        let nd = self.total_dim();
        let omega = linalg::kron(tau, self.state.rho());
        let sd = linalg::eig_hermitian(&omega)?;
        let mut root = sd.transform.clone();
        for j in 0..nd {
            let s = sd.eigenvalues[j].re.max(0.0).sqrt();
            for i in 0..nd {
                root[(i, j)] *= s;
            }
        }
        let root = &root * &sd.transform.adjoint();

        // images of the n^2 matrix units of the subalgebra, orthonormalized
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(self.n * self.n);
        for j in 0..self.n {
            for k in 0..self.n {
                let mut unit = CMatrix::zeros(self.n);
                unit[(j, k)] = Complex64::new(1.0, 0.0);
                let embedded = ModuleElement::embed_scalar(&unit, self.state.dim());
                basis.push((&embedded.value * &root).flatten());
            }
        }
        let ortho = orthonormalize(basis)?;

        let h = nd * nd;
        let mut proj = CMatrix::zeros(h);
        for q in &ortho {
            for u in 0..h {
                for v in 0..h {
                    proj[(u, v)] += q[u] * q[v].conj();
                }
            }
        }
        let act = linalg::kron(&a.value, &CMatrix::identity(nd));
        let comm = &(&proj * &act) - &(&act * &proj);
        Ok(spectral_norm(&comm))
    }
}

/// sigma_n applied to A in M_{nd}: the block standard deviation for the
/// conditional expectation (n, s).
pub fn matricial_family(s: &State, a: &ModuleElement, n: usize) -> Result<f64> {
    if a.n() != n || a.d() != s.dim() {
        return Err(Error::DimMismatch {
            left: a.value().dim(),
            right: n * s.dim(),
            context: "matricial_family",
        });
    }
    CondExp::new(n, s.clone())?.sigma_e(a)
}

/// ||[D_n, (A, alpha)]|| for the block-diagonal rank-one Dirac operator
/// D_n = I_n (x) D; equals max(||A - alpha (x) I||_E, ||A* - alpha* (x) I||_E).
pub fn dirac_norm_blocks(s: &State, a: &ModuleElement, alpha: &CMatrix) -> Result<f64> {
    let n = a.n();
    if alpha.dim() != n || a.d() != s.dim() {
        return Err(Error::DimMismatch {
            left: alpha.dim(),
            right: n,
            context: "dirac_norm_blocks",
        });
    }
    let dirac = crate::ncprob::UnitizationDirac::new(s)?;
    let gns = dirac.gns();
    let site = dirac.matrix().dim(); // d^2 + 1
    let total = n * site;

    let d_n = linalg::kron(&CMatrix::identity(n), dirac.matrix());
    let mut action = CMatrix::zeros(total);
    for j in 0..n {
        for k in 0..n {
            let rep = gns.left_rep(&a.block(j, k))?;
            for u in 0..site - 1 {
                for v in 0..site - 1 {
                    action[(j * site + u, k * site + v)] = rep[(u, v)];
                }
            }
            action[(j * site + site - 1, k * site + site - 1)] = alpha[(j, k)];
        }
    }
    let comm = &(&d_n * &action) - &(&action * &d_n);
    Ok(spectral_norm(&comm))
}

/// Modified Gram-Schmidt with a second pass; errors if the family is
/// numerically dependent.
fn orthonormalize(mut vs: Vec<Vec<Complex64>>) -> Result<Vec<Vec<Complex64>>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(vs.len());
    for v in vs.iter_mut() {
        for _pass in 0..2 {
            for q in &out {
                let c = linalg::vec_inner(q, v);
                for (x, &qi) in v.iter_mut().zip(q.iter()) {
                    *x -= c * qi;
                }
            }
        }
        let norm = linalg::vec_norm(v);
        if norm < 1e-10 {
            return Err(Error::Internal(format!(
                "localization basis numerically dependent: residual norm {norm:.3e}"
            )));
        }
        out.push(v.iter().map(|&x| x / norm).collect());
    }
    Ok(out)
}

/// Normalized-Wishart faithful state on M_n with a stream derived from
/// (seed, index); resamples near-degenerate draws.
fn sample_faithful_state(n: usize, seed: u64, index: u64) -> Result<CMatrix> {
    let mut key = [0u8; 32];
    let mut x = seed ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    for chunk in key.chunks_mut(8) {
        x = x.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    for _attempt in 0..100 {
        let g = CMatrix::from_fn(n, |_, _| {
            Complex64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        });
        let w = &g * &g.adjoint();
        let tr = w.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            continue;
        }
        let rho = w.scale(Complex64::new(1.0 / tr, 0.0));
        let eig = linalg::eig_hermitian(&rho)?.real_eigenvalues();
        if eig[0] >= 1e-8 {
            return Ok(rho);
        }
    }
    Err(Error::Internal(
        "could not sample a faithful state in 100 attempts".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncprob::{dirac_norm_unitization, UnitizedElement};
    use crate::testutil::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_module(n: usize, d: usize, st: &mut u64) -> ModuleElement {
        ModuleElement::new(rand_mat(n * d, st), n, d).unwrap()
    }

    #[test]
    fn module_element_structure() {
        let mut st = 0x200u64;
        let m = rand_module(2, 3, &mut st);
        // reassemble from blocks
        let mut re = CMatrix::zeros(6);
        for j in 0..2 {
            for k in 0..2 {
                let b = m.block(j, k);
                for r in 0..3 {
                    for cc in 0..3 {
                        re[(j * 3 + r, k * 3 + cc)] = b[(r, cc)];
                    }
                }
            }
        }
        assert!((&re - m.value()).frobenius() == 0.0);
        assert!(ModuleElement::new(CMatrix::identity(5), 2, 3).is_err());

        let x = rand_mat(2, &mut st);
        let e = ModuleElement::embed_scalar(&x, 3);
        for j in 0..2 {
            for k in 0..2 {
                let want = CMatrix::identity(3).scale(x[(j, k)]);
                assert!((&e.block(j, k) - &want).frobenius() == 0.0);
            }
        }
    }

    #[test]
    fn cond_exp_cases() {
        let mut st = 0x210u64;
        let s = rand_state(2, &mut st);
        let e = CondExp::new(2, s.clone()).unwrap();

        // scalar blocks recovered exactly up to round-off
        let x = rand_mat(2, &mut st);
        let back = e.cond_exp(&ModuleElement::embed_scalar(&x, 2)).unwrap();
        assert!((&back - &x).frobenius() <= 1e-13 * (1.0 + x.frobenius()));

        // identity invariant
        let id = ModuleElement::embed_scalar(&CMatrix::identity(2), 2);
        assert!((&e.cond_exp(&id).unwrap() - &CMatrix::identity(2)).frobenius() <= 1e-12);

        // n = 1 reduction
        let e1 = CondExp::new(1, s.clone()).unwrap();
        let a = rand_mat(2, &mut st);
        let m = ModuleElement::new(a.clone(), 1, 2).unwrap();
        let got = e1.cond_exp(&m).unwrap();
        assert!((got[(0, 0)] - s.expectation(&a).unwrap()).norm() < 1e-14);

        // per-block naive-trace oracle
        for _ in 0..20 {
            let m = rand_module(2, 3, &mut st);
            let s3 = rand_state(3, &mut st);
            let e = CondExp::new(2, s3.clone()).unwrap();
            let got = e.cond_exp(&m).unwrap();
            for j in 0..2 {
                for k in 0..2 {
                    let block = m.block(j, k);
                    let prod = &s3.rho().clone() * &block;
                    let mut naive = c(0.0, 0.0);
                    for i in 0..3 {
                        naive += prod[(i, i)];
                    }
                    assert!((got[(j, k)] - naive).norm() < 1e-13);
                }
            }
        }

        // bimodule property E((C(x)I) A (D(x)I)) = C E(A) D
        for _ in 0..20 {
            let s = rand_state(2, &mut st);
            let e = CondExp::new(2, s).unwrap();
            let a = rand_module(2, 2, &mut st);
            let (cm, dm) = (rand_mat(2, &mut st), rand_mat(2, &mut st));
            let sandwiched = ModuleElement::new(
                &(&ModuleElement::embed_scalar(&cm, 2).value().clone() * a.value())
                    * ModuleElement::embed_scalar(&dm, 2).value(),
                2,
                2,
            )
            .unwrap();
            let lhs = e.cond_exp(&sandwiched).unwrap();
            let rhs = &(&cm * &e.cond_exp(&a).unwrap()) * &dm;
            let scale = (1.0 + cm.frobenius()) * (1.0 + dm.frobenius()) * (1.0 + a.value().frobenius());
            assert!((&lhs - &rhs).frobenius() <= 1e-11 * scale);
        }

        // dim mismatch
        let wrong = rand_module(3, 2, &mut st);
        assert!(matches!(
            e.cond_exp(&wrong),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn e_inner_cases() {
        let mut st = 0x220u64;
        let s = rand_state(2, &mut st);
        let e = CondExp::new(2, s).unwrap();

        let id = ModuleElement::embed_scalar(&CMatrix::identity(2), 2);
        assert!((&e.e_inner(&id, &id).unwrap() - &CMatrix::identity(2)).frobenius() <= 1e-12);

        for _ in 0..10 {
            let a = rand_module(2, 2, &mut st);
            let b = rand_module(2, 2, &mut st);
            let scale =
                (1.0 + a.value().frobenius()) * (1.0 + b.value().frobenius());

            // conjugate symmetry
            let ab = e.e_inner(&a, &b).unwrap();
            let ba = e.e_inner(&b, &a).unwrap();
            assert!((&ab.adjoint() - &ba).frobenius() <= 1e-12 * scale);

            // right module axiom <A, B(D(x)I)> = <A,B> D
            let dm = rand_mat(2, &mut st);
            let bd = ModuleElement::new(
                b.value() * ModuleElement::embed_scalar(&dm, 2).value(),
                2,
                2,
            )
            .unwrap();
            let lhs = e.e_inner(&a, &bd).unwrap();
            let rhs = &ab * &dm;
            assert!((&lhs - &rhs).frobenius() <= 1e-11 * scale * (1.0 + dm.frobenius()));

            // Gram positivity
            assert!(linalg::is_psd(&e.e_inner(&a, &a).unwrap(), 1e-10).unwrap());
        }
    }

    #[test]
    fn e_norm_cases() {
        let mut st = 0x230u64;
        let s = rand_state(2, &mut st);
        let e = CondExp::new(2, s.clone()).unwrap();

        let id = ModuleElement::embed_scalar(&CMatrix::identity(2), 2);
        assert!((e.e_norm(&id).unwrap() - 1.0).abs() < 1e-12);

        // n = 1 reduction to mu_norm
        let e1 = CondExp::new(1, s.clone()).unwrap();
        for _ in 0..10 {
            let a = rand_mat(2, &mut st);
            let m = ModuleElement::new(a.clone(), 1, 2).unwrap();
            assert!((e1.e_norm(&m).unwrap() - s.mu_norm(&a).unwrap()).abs() < 1e-11);
        }

        // ||AB||_E <= ||A|| ||B||_E
        for _ in 0..50 {
            let a = rand_module(2, 2, &mut st);
            let b = rand_module(2, 2, &mut st);
            let ab = ModuleElement::new(a.value() * b.value(), 2, 2).unwrap();
            let lhs = e.e_norm(&ab).unwrap();
            let rhs = spectral_norm(a.value()) * e.e_norm(&b).unwrap();
            assert!(lhs <= rhs + 1e-10 * (1.0 + rhs));
        }
    }

    #[test]
    fn l0_tilde_cases() {
        let mut st = 0x240u64;
        let s = rand_state(2, &mut st);
        let e = CondExp::new(2, s.clone()).unwrap();

        let x = rand_mat(2, &mut st);
        assert!(e.l0_tilde(&ModuleElement::embed_scalar(&x, 2)).unwrap() < 1e-12);

        // n = 1 reduction
        let e1 = CondExp::new(1, s.clone()).unwrap();
        let a = rand_mat(2, &mut st);
        let m = ModuleElement::new(a.clone(), 1, 2).unwrap();
        assert!((e1.l0_tilde(&m).unwrap() - s.l0(&a).unwrap()).abs() < 1e-11);

        // optimality: no sampled scalar block beats cond_exp(A)
        let a = rand_module(2, 2, &mut st);
        let best = e.l0_tilde(&a).unwrap();
        let scale = 1.0 + a.value().frobenius();
        for _ in 0..1000 {
            let d = rand_mat(2, &mut st);
            let shifted = ModuleElement::new(
                a.value() - &ModuleElement::embed_scalar(&d, 2).value().clone(),
                2,
                2,
            )
            .unwrap();
            assert!(e.e_norm(&shifted).unwrap() >= best - 1e-10 * scale);
        }
    }

    #[test]
    fn sigma_e_cases() {
        let mut st = 0x250u64;
        let s = rand_state(2, &mut st);
        let e = CondExp::new(2, s.clone()).unwrap();

        let h = rand_hermitian(4, &mut st);
        let m = ModuleElement::new(h, 2, 2).unwrap();
        assert_eq!(e.sigma_e(&m).unwrap(), e.l0_tilde(&m).unwrap());

        // n = 1 reduction
        let e1 = CondExp::new(1, s.clone()).unwrap();
        let a = rand_mat(2, &mut st);
        let m1 = ModuleElement::new(a.clone(), 1, 2).unwrap();
        assert!((e1.sigma_e(&m1).unwrap() - s.sigma_mu(&a).unwrap()).abs() < 1e-11);

        for _ in 0..10 {
            let a = rand_module(2, 2, &mut st);
            assert_eq!(
                e.sigma_e(&a).unwrap().to_bits(),
                e.sigma_e(&a.adjoint()).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn schwarz_gap_cases() {
        let mut st = 0x260u64;
        let s = rand_state(2, &mut st);
        let e = CondExp::new(2, s.clone()).unwrap();

        let x = rand_mat(2, &mut st);
        let gap = e.schwarz_gap(&ModuleElement::embed_scalar(&x, 2)).unwrap();
        assert!(gap.frobenius() <= 1e-12 * (1.0 + x.frobenius().powi(2)));

        // n = 1: scalar variance
        let e1 = CondExp::new(1, s.clone()).unwrap();
        let a = rand_mat(2, &mut st);
        let m1 = ModuleElement::new(a.clone(), 1, 2).unwrap();
        let gap = e1.schwarz_gap(&m1).unwrap();
        let mean = s.expectation(&a).unwrap();
        let want = s.expectation(&(&a.adjoint() * &a)).unwrap().re - mean.norm_sqr();
        assert!((gap[(0, 0)].re - want).abs() < 1e-12 * (1.0 + want.abs()));
        assert!(gap[(0, 0)].re >= -1e-12);

        for _ in 0..20 {
            let a = rand_module(2, 2, &mut st);
            assert!(linalg::is_psd(&e.schwarz_gap(&a).unwrap(), 1e-10).unwrap());
        }
    }

    #[test]
    fn matricial_family_cases() {
        let mut st = 0x270u64;
        let s = rand_state(2, &mut st);

        // n = 1: sigma_mu
        let a = rand_mat(2, &mut st);
        let m1 = ModuleElement::new(a.clone(), 1, 2).unwrap();
        assert!(
            (matricial_family(&s, &m1, 1).unwrap() - s.sigma_mu(&a).unwrap()).abs() < 1e-11
        );

        // scalar blocks vanish
        let x = rand_mat(3, &mut st);
        let m = ModuleElement::embed_scalar(&x, 2);
        assert!(matricial_family(&s, &m, 3).unwrap() < 1e-12);

        // strongly Leibniz for the block seminorm
        for _ in 0..10 {
            let a = rand_invertible(4, 1e4, &mut st);
            let m = ModuleElement::new(a.clone(), 2, 2).unwrap();
            let inv = linalg::matrix_inverse(&a).unwrap().matrix;
            let minv = ModuleElement::new(inv.clone(), 2, 2).unwrap();
            let ninv = spectral_norm(&inv);
            let margin = ninv * ninv * matricial_family(&s, &m, 2).unwrap()
                - matricial_family(&s, &minv, 2).unwrap();
            let scale = ninv * ninv * (1.0 + spectral_norm(&a));
            assert!(margin >= -1e-9 * scale, "block strongly-leibniz margin {margin:.3e}");
        }
    }

    #[test]
    fn dirac_norm_blocks_cases() {
        let mut st = 0x280u64;
        let s = rand_state(2, &mut st);

        // (identity, I_n) commutes
        let id = ModuleElement::embed_scalar(&CMatrix::identity(2), 2);
        assert!(dirac_norm_blocks(&s, &id, &CMatrix::identity(2)).unwrap() < 1e-12);

        // n = 1 reduces to the unitization Dirac norm
        for _ in 0..5 {
            let a = rand_mat(2, &mut st);
            let alpha = cgauss(&mut st);
            let m1 = ModuleElement::new(a.clone(), 1, 2).unwrap();
            let mut am = CMatrix::zeros(1);
            am[(0, 0)] = alpha;
            let got = dirac_norm_blocks(&s, &m1, &am).unwrap();
            let want =
                dirac_norm_unitization(&s, &UnitizedElement { a: a.clone(), alpha }).unwrap();
            assert!((got - want).abs() <= 1e-10 * (1.0 + want));
        }

        // Prop-4.1-style oracle at n = 2, d = 2
        let e = CondExp::new(2, s.clone()).unwrap();
        for _ in 0..10 {
            let a = rand_module(2, 2, &mut st);
            let alpha = rand_mat(2, &mut st);
            let got = dirac_norm_blocks(&s, &a, &alpha).unwrap();
            let shift = ModuleElement::embed_scalar(&alpha, 2);
            let diff = ModuleElement::new(a.value() - shift.value(), 2, 2).unwrap();
            let diff_star = ModuleElement::new(
                &a.value().adjoint() - &shift.value().adjoint(),
                2,
                2,
            )
            .unwrap();
            let want = f64::max(e.e_norm(&diff).unwrap(), e.e_norm(&diff_star).unwrap());
            assert!(
                (got - want).abs() <= 1e-8 * (1.0 + want),
                "block dirac {got:.12e} vs module norm {want:.12e}"
            );
        }
    }

    #[test]
    fn localized_norm_bound_cases() {
        let mut st = 0x290u64;
        let s = rand_state(2, &mut st);
        let e = CondExp::new(2, s.clone()).unwrap();

        // scalar blocks localize to zero
        let x = rand_mat(2, &mut st);
        let (sup, bound) = e
            .localized_norm_bound(&ModuleElement::embed_scalar(&x, 2), 8, 7)
            .unwrap();
        assert!(sup < 1e-10 && bound < 1e-12);

        // n = 1: the single localization is the projection Dirac picture
        let e1 = CondExp::new(1, s.clone()).unwrap();
        let a = rand_mat(2, &mut st);
        let m1 = ModuleElement::new(a.clone(), 1, 2).unwrap();
        let (sup, bound) = e1.localized_norm_bound(&m1, 4, 11).unwrap();
        let sigma = s.sigma_mu(&a).unwrap();
        assert!((sup - sigma).abs() <= 1e-9 * (1.0 + sigma));
        assert!((bound - sigma).abs() <= 1e-11 * (1.0 + sigma));

        // sampled sup approaches but never exceeds the bound
        for trial in 0..3 {
            let a = rand_module(2, 2, &mut st);
            let (sup, bound) = e.localized_norm_bound(&a, 256, 1000 + trial).unwrap();
            assert!(sup <= bound + 1e-9 * (1.0 + bound), "sup {sup} bound {bound}");
            assert!(sup >= 0.9 * bound, "sup {sup} too far below bound {bound}");
        }
    }

    #[test]
    fn leibniz_and_contraction_invariants() {
        let mut st = 0x2a0u64;
        let s = rand_state(2, &mut st);
        let e = CondExp::new(2, s.clone()).unwrap();

        for _ in 0..30 {
            let a = rand_module(2, 2, &mut st);
            let b = rand_module(2, 2, &mut st);
            let ab = ModuleElement::new(a.value() * b.value(), 2, 2).unwrap();
            let (na, nb) = (spectral_norm(a.value()), spectral_norm(b.value()));
            let scale = (1.0 + na) * (1.0 + nb);

            let m = na * e.l0_tilde(&b).unwrap() + e.l0_tilde(&a).unwrap() * nb
                - e.l0_tilde(&ab).unwrap();
            assert!(m >= -1e-10 * scale, "l0_tilde leibniz margin {m:.3e}");

            let m = na * e.sigma_e(&b).unwrap() + e.sigma_e(&a).unwrap() * nb
                - e.sigma_e(&ab).unwrap();
            assert!(m >= -1e-10 * scale, "sigma_e leibniz margin {m:.3e}");

            // contraction: ||E(A) (x) I||_E <= ||A||_E
            let back = ModuleElement::embed_scalar(&e.cond_exp(&a).unwrap(), 2);
            assert!(
                e.e_norm(&back).unwrap()
                    <= e.e_norm(&a).unwrap() + 1e-10 * (1.0 + a.value().frobenius())
            );
        }

        // strongly Leibniz for sigma_e
        for _ in 0..10 {
            let a = rand_invertible(4, 1e4, &mut st);
            let inv = linalg::matrix_inverse(&a).unwrap().matrix;
            let ninv = spectral_norm(&inv);
            let ma = ModuleElement::new(a.clone(), 2, 2).unwrap();
            let mi = ModuleElement::new(inv, 2, 2).unwrap();
            let margin = ninv * ninv * e.sigma_e(&ma).unwrap() - e.sigma_e(&mi).unwrap();
            assert!(
                margin >= -1e-9 * ninv * ninv * (1.0 + spectral_norm(&a)),
                "sigma_e strongly-leibniz margin {margin:.3e}"
            );
        }
    }

    #[test]
    fn consistency_tower_n_equals_one() {
        let mut st = 0x2b0u64;
        for _ in 0..10 {
            let s = rand_state(3, &mut st);
            let e = CondExp::new(1, s.clone()).unwrap();
            let a = rand_mat(3, &mut st);
            let m = ModuleElement::new(a.clone(), 1, 3).unwrap();

            assert!(
                (e.cond_exp(&m).unwrap()[(0, 0)] - s.expectation(&a).unwrap()).norm() < 1e-11
            );
            assert!((e.e_norm(&m).unwrap() - s.mu_norm(&a).unwrap()).abs() < 1e-11);
            assert!((e.l0_tilde(&m).unwrap() - s.l0(&a).unwrap()).abs() < 1e-11);
            assert!((e.sigma_e(&m).unwrap() - s.sigma_mu(&a).unwrap()).abs() < 1e-11);
        }
    }
}
