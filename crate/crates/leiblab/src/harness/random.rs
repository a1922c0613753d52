//! Seeded random instances with documented distributions.
//!
//! Every sampler draws from an explicit stream created by [`trial_rng`], a
//! hash of (suite label, master seed, trial index). Streams never share
//! state, so trials are reproducible independently of execution order.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::linalg::{self, CMatrix};
use crate::ncprob::{LipschitzFn, State};
use crate::{Error, Result};

/// Deterministic per-trial generator, domain-separated by a label so that
/// different suites sharing a master seed still see independent streams.
pub fn trial_rng(label: &str, seed: u64, trial: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"leiblab.trial.v1");
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(trial.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Standard complex Gaussian: independent N(0, 1/2) real and imaginary
/// parts, so E|z|^2 = 1.
pub fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix(dim: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(dim, |_, _| gaussian_complex(rng))
}

/// Symmetrized Gaussian: (G + G*)/2.
pub fn gaussian_hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    gaussian_matrix(dim, rng).hermitian_part()
}

/// Orthonormalization of a Gaussian matrix by modified Gram-Schmidt. The
/// normalization uses positive real column norms, which fixes the phase
/// convention and makes the draw a deterministic function of the stream.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    'resample: loop {
        let g = gaussian_matrix(dim, rng);
        // columns of g
        let mut cols: Vec<Vec<Complex64>> = (0..dim)
            .map(|j| (0..dim).map(|i| g[(i, j)]).collect())
            .collect();
        for j in 0..dim {
            for k in 0..j {
                let proj = linalg::vec_inner(&cols[k], &cols[j]);
                for i in 0..dim {
                    let correction = proj * cols[k][i];
                    cols[j][i] -= correction;
                }
            }
            let norm = linalg::vec_norm(&cols[j]);
            if norm < 1e-8 {
                continue 'resample;
            }
            for x in cols[j].iter_mut() {
                *x /= norm;
            }
        }
        return CMatrix::from_fn(dim, |i, j| cols[j][i]);
    }
}

/// Gaussian matrix plus a growing real multiple of the identity until the
/// condition number drops under `cond_cap`.
pub fn invertible_with_cond(dim: usize, cond_cap: f64, rng: &mut impl Rng) -> Result<CMatrix> {
    let g = gaussian_matrix(dim, rng);
    let base_norm = linalg::spectral_norm(&g).max(1.0);
    let mut lambda = 0.0f64;
    for _ in 0..64 {
        let a = &g + &CMatrix::identity(dim).scale(Complex64::new(lambda, 0.0));
        let sv = linalg::singular_values(&a);
        let smax = sv.first().copied().unwrap_or(0.0);
        let smin = sv.last().copied().unwrap_or(0.0);
        if smin > 0.0 && smax / smin <= cond_cap {
            return Ok(a);
        }
        lambda = if lambda == 0.0 { 0.25 * base_norm } else { 2.0 * lambda };
    }
    Err(Error::Internal(
        "identity shift failed to reach the requested condition number".into(),
    ))
}

/// Normalized Wishart density G G*/trace, resampled until faithful.
pub fn wishart_state(dim: usize, rng: &mut impl Rng) -> Result<State> {
    for _ in 0..200 {
        let g = gaussian_matrix(dim, rng);
        let w = &g * &g.adjoint();
        let t = w.trace().re;
        if t <= 0.0 {
            continue;
        }
        let rho = w.scale(Complex64::new(1.0 / t, 0.0));
        match State::new(rho.hermitian_part()) {
            Ok(s) if s.is_faithful() => return Ok(s),
            _ => continue,
        }
    }
    Err(Error::Internal(
        "could not sample a faithful state in 200 attempts".into(),
    ))
}

/// Wishart state rejected until its Frobenius distance from the tracial
/// state reaches `min_distance` (the search-bias parameter).
pub fn nontracial_faithful_state(
    dim: usize,
    min_distance: f64,
    rng: &mut impl Rng,
) -> Result<State> {
    let center = CMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0));
    for _ in 0..500 {
        let s = wishart_state(dim, rng)?;
        if (s.rho() - &center).frobenius() >= min_distance {
            return Ok(s);
        }
    }
    Err(Error::Internal(
        "could not sample a non-tracial faithful state in 500 attempts".into(),
    ))
}

/// Invertible sample rejected until the normality residue ||A*A - AA*||_F
/// reaches `residue_floor * ||A||_F^2` (the search-bias parameter).
pub fn nonnormal_invertible(
    dim: usize,
    cond_cap: f64,
    residue_floor: f64,
    rng: &mut impl Rng,
) -> Result<CMatrix> {
    for _ in 0..500 {
        let a = invertible_with_cond(dim, cond_cap, rng)?;
        if a.herm_residue() >= residue_floor * a.frobenius().powi(2) {
            return Ok(a);
        }
    }
    Err(Error::Internal(
        "could not sample a non-normal invertible in 500 attempts".into(),
    ))
}

/// Piecewise-linear function with 5 to 9 strictly increasing breakpoints
/// covering [lo, hi] (endpoints padded outward) and standard Gaussian values.
pub fn pl_spanning(lo: f64, hi: f64, rng: &mut impl Rng) -> Result<LipschitzFn> {
    let width = (hi - lo).max(0.0);
    let pad = 0.1 * (1.0 + width);
    let count = rng.gen_range(5..=9usize);
    let mut breakpoints = Vec::with_capacity(count);
    breakpoints.push(lo - pad);
    for _ in 0..count - 2 {
        breakpoints.push(lo + rng.gen::<f64>() * width);
    }
    breakpoints.push(hi + pad);
    breakpoints.sort_by(f64::total_cmp);
    // enforce strict increase; interior collisions get nudged right
    let gap = 1e-9 * (1.0 + width);
    for i in 1..breakpoints.len() {
        if breakpoints[i] <= breakpoints[i - 1] + gap {
            breakpoints[i] = breakpoints[i - 1] + gap;
        }
    }
    let values = (0..count)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    LipschitzFn::piecewise_linear(breakpoints, values)
}

/// Instance kinds for [`random_instance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandomKind {
    Matrix,
    Hermitian,
    Unitary,
    Invertible,
    StateFaithful,
    StateTracial,
    LipschitzPl,
}

/// A sampled value, tagged by shape.
#[derive(Clone, Debug)]
pub enum InstanceValue {
    Matrix(CMatrix),
    State(State),
    Lipschitz(LipschitzFn),
}

/// One sample of the requested kind with the documented distribution:
/// matrices are i.i.d. complex Gaussian; Hermitians symmetrized Gaussians;
/// unitaries Gram-Schmidt orthonormalizations; invertibles Gaussian plus an
/// identity shift with condition number at most 1e4; faithful states
/// normalized Wisharts; the piecewise-linear functions span [-3 sqrt(dim),
/// 3 sqrt(dim)], the typical spectral range at that dimension.
pub fn random_instance(
    kind: RandomKind,
    dim: usize,
    rng: &mut impl Rng,
) -> Result<InstanceValue> {
    if dim == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    Ok(match kind {
        RandomKind::Matrix => InstanceValue::Matrix(gaussian_matrix(dim, rng)),
        RandomKind::Hermitian => InstanceValue::Matrix(gaussian_hermitian(dim, rng)),
        RandomKind::Unitary => InstanceValue::Matrix(random_unitary(dim, rng)),
        RandomKind::Invertible => InstanceValue::Matrix(invertible_with_cond(dim, 1e4, rng)?),
        RandomKind::StateFaithful => InstanceValue::State(wishart_state(dim, rng)?),
        RandomKind::StateTracial => InstanceValue::State(State::tracial(dim)),
        RandomKind::LipschitzPl => {
            let r = 3.0 * (dim as f64).sqrt();
            InstanceValue::Lipschitz(pl_spanning(-r, r, rng)?)
        }
    })
}
