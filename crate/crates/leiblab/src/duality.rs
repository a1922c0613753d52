//! Two solvers for the maximal deviation of a matrix, attacked from both
//! sides of a minimax identity.
//!
//! The scalar side minimizes `g(alpha) = ||A - alpha||` over the complex
//! plane (convex, 1-Lipschitz in alpha). The state side maximizes the
//! variance `V(rho) = tr(rho A*A) - |tr(rho A)|^2` over density matrices
//! (concave). The two optima agree, and [`certify_duality`] runs both
//! independently and reports the gap; route-sharing between the solvers is
//! deliberately avoided so agreement stays evidence rather than tautology.

use num_complex::Complex64;

use crate::linalg::{self, spectral_norm, CMatrix};
use crate::ncprob::{LipschitzFn, State};
use crate::{Error, Result};

fn c_re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Outcome of the scalar minimization.
#[derive(Clone, Debug)]
pub struct ScalarFit {
    pub value: f64,
    pub argmin: Complex64,
    pub evaluations: usize,
}

/// Outcome of the density-matrix maximization. `fw_gap` is the final
/// linearization gap, a certified bound on how suboptimal `value^2` is.
#[derive(Clone, Debug)]
pub struct StateFit {
    pub value: f64,
    pub argmax: CMatrix,
    pub iterations: usize,
    pub fw_gap: f64,
}

/// Both solvers' answers side by side. `certified` is false whenever any
/// cross-check failed; the failures list says which.
#[derive(Clone, Debug)]
pub struct DualityCertificate {
    pub delta_min: f64,
    pub argmin_alpha: Complex64,
    pub delta_max: f64,
    pub argmax_rho: CMatrix,
    pub gap: f64,
    pub min_evaluations: usize,
    pub max_iterations: usize,
    pub certified: bool,
    pub failures: Vec<String>,
}

/// min over alpha of ||A - alpha I|| (spectral norm), solved by multi-start
/// Nelder-Mead plus a compass polish. Convexity makes the local optimum
/// global; the objective is 1-Lipschitz in alpha, so the final step size
/// bounds the value error.
pub fn delta_min(a: &CMatrix, tol: f64) -> Result<ScalarFit> {
    if !(tol >= 1e-12) {
        return Err(Error::Config(format!(
            "scalar solver tolerance {tol:.3e} below 1e-12"
        )));
    }
    let d = a.dim();
    let shifted = |alpha: Complex64| a - &CMatrix::identity(d).scale(alpha);
    let f = |alpha: Complex64| spectral_norm(&shifted(alpha));
    let center = a.trace() / d as f64;
    let radius = spectral_norm(a).max(tol);
    minimize_convex_2d(&f, center, radius, tol)
}

/// The same minimum computed from a known spectrum of a normal matrix:
/// ||N - alpha|| = max_i |lambda_i - alpha| by unitary invariance. Used where
/// the full solver would be wasteful; agreement with [`delta_min`] is tested,
/// not assumed.
pub fn delta_min_spectrum(eigs: &[Complex64], tol: f64) -> Result<ScalarFit> {
    if !(tol >= 1e-12) {
        return Err(Error::Config(format!(
            "scalar solver tolerance {tol:.3e} below 1e-12"
        )));
    }
    if eigs.is_empty() {
        return Err(Error::Malformed("empty spectrum".into()));
    }
    let f = |alpha: Complex64| {
        eigs.iter()
            .map(|&lam| (lam - alpha).norm())
            .fold(0.0, f64::max)
    };
    let center = eigs.iter().sum::<Complex64>() / eigs.len() as f64;
    let radius = eigs
        .iter()
        .map(|&lam| (lam - center).norm())
        .fold(tol, f64::max);
    minimize_convex_2d(&f, center, radius, tol)
}

const EVAL_CAP: usize = 200_000;

fn minimize_convex_2d(
    f: &dyn Fn(Complex64) -> f64,
    center: Complex64,
    radius: f64,
    tol: f64,
) -> Result<ScalarFit> {
    let starts = [
        center,
        center + c_re(radius / 2.0),
        center - c_re(radius / 2.0),
        center + Complex64::new(0.0, radius / 2.0),
        center - Complex64::new(0.0, radius / 2.0),
    ];
    let mut evals = 0usize;
    let mut best = (center, f64::INFINITY);
    for &s in &starts {
        let (p, v) = nelder_mead(f, s, radius / 4.0, tol, &mut evals);
        if v < best.1 {
            best = (p, v);
        }
    }
    let (p, v) = compass_polish(f, best.0, best.1, radius / 4.0, tol, &mut evals);
    if evals > EVAL_CAP {
        return Err(Error::Solver {
            message: "scalar minimization exceeded the evaluation cap".into(),
            best: v,
            iterations: evals,
        });
    }
    Ok(ScalarFit {
        value: v,
        argmin: p,
        evaluations: evals,
    })
}

/// Standard Nelder-Mead on the plane; runs until the simplex diameter is
/// below tol/4 or the shared evaluation budget runs dry.
fn nelder_mead(
    f: &dyn Fn(Complex64) -> f64,
    start: Complex64,
    step: f64,
    tol: f64,
    evals: &mut usize,
) -> (Complex64, f64) {
    let count = std::cell::Cell::new(*evals);
    let eval = |x: Complex64| {
        count.set(count.get() + 1);
        f(x)
    };
    let mut simplex = [
        (start, eval(start)),
        (start + c_re(step), eval(start + c_re(step))),
        (
            start + Complex64::new(0.0, step),
            eval(start + Complex64::new(0.0, step)),
        ),
    ];
    for _ in 0..600 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diam = (simplex[0].0 - simplex[1].0)
            .norm()
            .max((simplex[0].0 - simplex[2].0).norm())
            .max((simplex[1].0 - simplex[2].0).norm());
        if diam <= tol / 4.0 || count.get() > EVAL_CAP {
            break;
        }
        let (best, second, worst) = (simplex[0], simplex[1], simplex[2]);
        let centroid = (best.0 + second.0) / 2.0;
        let reflected = centroid + (centroid - worst.0);
        let fr = eval(reflected);
        if fr < best.1 {
            let expanded = centroid + (centroid - worst.0) * 2.0;
            let fe = eval(expanded);
            simplex[2] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < second.1 {
            simplex[2] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 {
                centroid + (reflected - centroid) / 2.0
            } else {
                centroid + (worst.0 - centroid) / 2.0
            };
            let fc = eval(contracted);
            if fc < worst.1.min(fr) {
                simplex[2] = (contracted, fc);
            } else {
                // shrink toward the best vertex
                for i in 1..3 {
                    let p = best.0 + (simplex[i].0 - best.0) / 2.0;
                    simplex[i] = (p, eval(p));
                }
            }
        }
    }
    *evals = count.get();
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Coordinate descent with halving steps; each accepted move strictly
/// improves, each rejected sweep halves the step, ending below tol/8.
fn compass_polish(
    f: &dyn Fn(Complex64) -> f64,
    mut point: Complex64,
    mut value: f64,
    mut step: f64,
    tol: f64,
    evals: &mut usize,
) -> (Complex64, f64) {
    step = step.max(tol);
    while step > tol / 8.0 && *evals < EVAL_CAP {
        let moves = [
            c_re(step),
            -c_re(step),
            Complex64::new(0.0, step),
            Complex64::new(0.0, -step),
        ];
        let mut improved = false;
        for m in moves {
            let candidate = point + m;
            *evals += 1;
            let v = f(candidate);
            if v < value {
                point = candidate;
                value = v;
                improved = true;
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    (point, value)
}

/// Atom of the density-matrix simplex: either the uniform state or a pure
/// state. Only the two scalars (a, z) = (tr(rho_i A*A), tr(rho_i A)) matter
/// to the objective, so they are cached.
struct Atom {
    weight: f64,
    a: f64,
    z: Complex64,
    density: CMatrix,
}

/// max over density matrices of sqrt(tr(rho A*A) - |tr(rho A)|^2).
///
/// Conditional-gradient ascent: the linear subproblem over the state space
/// is exactly the top eigenvector of the gradient, and each iteration takes
/// the better of a pure toward-step and a pairwise swap between the best new
/// direction and the worst active atom, both with exact line search (the
/// objective is quadratic along any segment). Stops when the linearization
/// gap certifies the value to tol; the gap floor `2e-14 * (1 + ||G||_F)`
/// concedes what double precision cannot certify below.
pub fn delta_max_states(a: &CMatrix, tol: f64) -> Result<StateFit> {
    if !(tol >= 1e-10) {
        return Err(Error::Config(format!(
            "state solver tolerance {tol:.3e} below 1e-10"
        )));
    }
    let d = a.dim();
    let norm_a = spectral_norm(a);
    if norm_a == 0.0 {
        return Ok(StateFit {
            value: 0.0,
            argmax: CMatrix::identity(d).scale(c_re(1.0 / d as f64)),
            iterations: 0,
            fw_gap: 0.0,
        });
    }
    let scale = norm_a.max(1.0);
    let ahat = a.scale(c_re(1.0 / scale));
    let gram = &ahat.adjoint() * &ahat;
    let tol_hat = tol / scale;

    let uniform = CMatrix::identity(d).scale(c_re(1.0 / d as f64));
    let mut atoms = vec![Atom {
        weight: 1.0,
        a: gram.trace().re / d as f64,
        z: ahat.trace() / d as f64,
        density: uniform,
    }];

    let cap = 100_000usize;
    let mut iterations = 0usize;
    let final_gap = loop {
        let c: Complex64 = atoms.iter().map(|at| at.z * at.weight).sum();
        let s: f64 = atoms.iter().map(|at| at.a * at.weight).sum();
        // gradient of the variance at the current mixture
        let g = &(&gram - &ahat.scale(c.conj())) - &ahat.adjoint().scale(c);
        let eig = linalg::eig_hermitian(&g)?;
        let lam_max = eig.eigenvalues.last().map(|z| z.re).unwrap_or(0.0);
        let gap = lam_max - (s - 2.0 * c.norm_sqr());
        let floor = 2e-14 * (1.0 + g.frobenius());
        if gap <= (tol_hat * tol_hat).max(floor) {
            break gap;
        }
        if iterations >= cap {
            let best = scale
                * atoms
                    .iter()
                    .map(|at| at.a * at.weight)
                    .sum::<f64>()
                    .max(0.0)
                    .sqrt();
            return Err(Error::Solver {
                message: format!("linearization gap stalled at {gap:.3e}"),
                best,
                iterations,
            });
        }
        iterations += 1;

        // new candidate atom: the top eigenvector of the gradient
        let v: Vec<Complex64> = (0..d).map(|i| eig.transform[(i, d - 1)]).collect();
        let av = ahat.mat_vec(&v);
        let new_a: f64 = av.iter().map(|x| x.norm_sqr()).sum();
        let new_z = linalg::vec_inner(&v, &av);
        let mut new_density = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                new_density[(i, j)] = v[i] * v[j].conj();
            }
        }

        let rayleigh = |at: &Atom| at.a - 2.0 * (c.conj() * at.z).re;
        let new_ray = new_a - 2.0 * (c.conj() * new_z).re;

        // candidate 1: pure step rho + delta (P - rho), delta in [0, 1]
        let beta_fw = gap;
        let gamma_fw = (new_z - c).norm_sqr();
        let (delta_fw, gain_fw) = line_search(beta_fw, gamma_fw, 1.0);

        // candidate 2: pairwise swap from the worst active atom, delta in [0, w]
        let worst = (0..atoms.len())
            .min_by(|&i, &j| rayleigh(&atoms[i]).total_cmp(&rayleigh(&atoms[j])))
            .unwrap();
        let beta_pw = new_ray - rayleigh(&atoms[worst]);
        let gamma_pw = (new_z - atoms[worst].z).norm_sqr();
        let (delta_pw, gain_pw) = line_search(beta_pw, gamma_pw, atoms[worst].weight);

        if gain_pw >= gain_fw {
            atoms[worst].weight -= delta_pw;
            atoms.push(Atom {
                weight: delta_pw,
                a: new_a,
                z: new_z,
                density: new_density,
            });
        } else {
            for at in atoms.iter_mut() {
                at.weight *= 1.0 - delta_fw;
            }
            atoms.push(Atom {
                weight: delta_fw,
                a: new_a,
                z: new_z,
                density: new_density,
            });
        }
        atoms.retain(|at| at.weight > 1e-18);
        let total: f64 = atoms.iter().map(|at| at.weight).sum();
        for at in atoms.iter_mut() {
            at.weight /= total;
        }
    };

    let c: Complex64 = atoms.iter().map(|at| at.z * at.weight).sum();
    let s: f64 = atoms.iter().map(|at| at.a * at.weight).sum();
    let variance = (s - c.norm_sqr()).max(0.0);
    let mut rho = CMatrix::zeros(d);
    for at in &atoms {
        rho = &rho + &at.density.scale(c_re(at.weight));
    }
    // exact symmetrization; the mixture is Hermitian up to round-off
    rho = rho.hermitian_part();
    Ok(StateFit {
        value: scale * variance.sqrt(),
        argmax: rho,
        iterations,
        fw_gap: final_gap,
    })
}

/// Maximizer of beta*delta - gamma*delta^2 over [0, hi] with beta > 0,
/// gamma >= 0; returns (argmax, gain).
fn line_search(beta: f64, gamma: f64, hi: f64) -> (f64, f64) {
    let delta = if gamma > 0.0 {
        (beta / (2.0 * gamma)).min(hi)
    } else {
        hi
    };
    (delta, beta * delta - gamma * delta * delta)
}

/// Runs both solvers and cross-checks them: the values must agree within
/// 10*tol, the maximizer must be a valid state, and its standard deviation
/// of A must not exceed the scalar optimum. Failures are reported, never
/// absorbed.
pub fn certify_duality(a: &CMatrix, tol: f64) -> Result<DualityCertificate> {
    if !(tol >= 1e-8) {
        return Err(Error::Config(format!(
            "certification tolerance {tol:.3e} below 1e-8"
        )));
    }
    let lo = delta_min(a, tol)?;
    let hi = delta_max_states(a, tol)?;
    let gap = (lo.value - hi.value).abs();
    let mut failures = Vec::new();
    if gap > 10.0 * tol {
        failures.push(format!(
            "solver gap {gap:.3e} exceeds {:.3e}",
            10.0 * tol
        ));
    }
    if hi.value > lo.value + 10.0 * tol {
        failures.push(format!(
            "weak duality violated: state side {:.12e} above scalar side {:.12e}",
            hi.value, lo.value
        ));
    }
    match State::new(hi.argmax.clone()) {
        Ok(state) => {
            let sigma = state.sigma_mu(a)?;
            if sigma > lo.value + 10.0 * tol {
                failures.push(format!(
                    "maximizer deviation {sigma:.12e} above scalar optimum {:.12e}",
                    lo.value
                ));
            }
        }
        Err(e) => failures.push(format!("maximizer is not a valid state: {e}")),
    }
    Ok(DualityCertificate {
        delta_min: lo.value,
        argmin_alpha: lo.argmin,
        delta_max: hi.value,
        argmax_rho: hi.argmax,
        gap,
        min_evaluations: lo.evaluations,
        max_iterations: hi.iterations,
        certified: failures.is_empty(),
        failures,
    })
}

/// Lip(F) * delta(N) - delta(F(N)) for normal N, both distances measured to
/// the scalars. Nonnegative up to solver tolerance because the deviation
/// respects Lipschitz functional calculus.
pub fn delta_markov_margin(n: &CMatrix, f: &LipschitzFn, tol: f64) -> Result<f64> {
    if !(tol >= 1e-12) {
        return Err(Error::Config(format!(
            "markov margin tolerance {tol:.3e} below 1e-12"
        )));
    }
    let sd = linalg::decompose_normal(n)?;
    let top = sd.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if f.requires_real_spectrum() {
        let max_im = sd.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if max_im > 1e-9 * (1.0 + top) {
            return Err(Error::Domain(format!(
                "piecewise-linear functions need a real spectrum; found imaginary part {max_im:.3e}"
            )));
        }
    }
    let mut mapped = Vec::with_capacity(sd.eigenvalues.len());
    for &lam in &sd.eigenvalues {
        mapped.push(f.eval(lam)?);
    }
    let before = delta_min_spectrum(&sd.eigenvalues, tol)?;
    let after = delta_min_spectrum(&mapped, tol)?;
    Ok(f.lip_constant() * before.value - after.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Hierarchical grid oracle for the scalar problem: a coarse lattice over
    /// the bounding square, window shrunk around the incumbent until the
    /// lattice step is below final_step.
    fn grid_oracle(
        f: &dyn Fn(Complex64) -> f64,
        center: Complex64,
        radius: f64,
        final_step: f64,
    ) -> f64 {
        let mut center = center;
        let mut radius = radius;
        let mut best = f64::INFINITY;
        loop {
            let step = radius / 20.0;
            let mut best_point = center;
            for i in -20..=20i32 {
                for j in -20..=20i32 {
                    let p = center + c(step * i as f64, step * j as f64);
                    let v = f(p);
                    if v < best {
                        best = v;
                        best_point = p;
                    }
                }
            }
            if step <= final_step {
                return best;
            }
            center = best_point;
            radius = 3.0 * step;
        }
    }

    #[test]
    fn delta_min_trivial_cases() {
        let a = CMatrix::identity(3).scale(c(2.0, -1.0));
        let fit = delta_min(&a, 1e-10).unwrap();
        assert!(fit.value < 1e-9);
        assert!((fit.argmin - c(2.0, -1.0)).norm() < 1e-8);

        let a = CMatrix::from_real_diag(&[1.0, -1.0]);
        let fit = delta_min(&a, 1e-10).unwrap();
        assert!((fit.value - 1.0).abs() < 1e-9);
        assert!(fit.argmin.norm() < 1e-4);

        assert!(matches!(
            delta_min(&a, 1e-13),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn delta_min_matches_grid_oracle() {
        let mut st = 0x300u64;
        for dim in [2usize, 3, 4] {
            for _ in 0..4 {
                let a = rand_mat(dim, &mut st);
                let fit = delta_min(&a, 1e-9).unwrap();
                let d = a.dim();
                let f = |alpha: Complex64| {
                    spectral_norm(&(&a - &CMatrix::identity(d).scale(alpha)))
                };
                let oracle = grid_oracle(&f, a.trace() / d as f64, 2.0 * spectral_norm(&a), 1e-8);
                assert!(
                    (fit.value - oracle).abs() < 1e-6,
                    "solver {:.9e} vs grid {:.9e}",
                    fit.value,
                    oracle
                );
            }
        }
    }

    #[test]
    fn delta_min_spectrum_cases() {
        // real diagonal: (max - min) / 2
        let eigs = [c(3.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0)];
        let fit = delta_min_spectrum(&eigs, 1e-10).unwrap();
        assert!((fit.value - 2.0).abs() < 1e-9);
        // the objective is quadratically flat off the real axis, so the
        // argmin is only pinned to about sqrt(tol)
        assert!((fit.argmin - c(1.0, 0.0)).norm() < 1e-4);

        // agreement with the matrix solver on normal inputs
        let mut st = 0x310u64;
        for _ in 0..5 {
            let u = rand_unitary(3, &mut st);
            let lam: Vec<Complex64> = (0..3).map(|_| cgauss(&mut st)).collect();
            let n = &(&u * &CMatrix::from_diag(&lam)) * &u.adjoint();
            let via_matrix = delta_min(&n, 1e-9).unwrap().value;
            let via_spectrum = delta_min_spectrum(&lam, 1e-9).unwrap().value;
            assert!(
                (via_matrix - via_spectrum).abs() < 1e-7,
                "matrix {via_matrix:.9e} vs spectrum {via_spectrum:.9e}"
            );
        }

        assert!(delta_min_spectrum(&[], 1e-10).is_err());
    }

    #[test]
    fn delta_min_is_star_seminorm() {
        let mut st = 0x320u64;
        for _ in 0..8 {
            let a = rand_mat(3, &mut st);
            let tol = 1e-9;
            let lhs = delta_min(&a, tol).unwrap().value;
            let rhs = delta_min(&a.adjoint(), tol).unwrap().value;
            assert!((lhs - rhs).abs() <= 2.0 * tol + 1e-9);
        }
    }

    #[test]
    fn delta_max_trivial_cases() {
        let fit = delta_max_states(&CMatrix::identity(3), 1e-9).unwrap();
        assert!(fit.value < 1e-8);

        let a = CMatrix::from_real_diag(&[1.0, -1.0]);
        let fit = delta_max_states(&a, 1e-9).unwrap();
        assert!((fit.value - 1.0).abs() < 1e-8);
        // any maximizer must put equal diagonal mass
        assert!((fit.argmax[(0, 0)].re - 0.5).abs() < 1e-6);

        assert!(matches!(
            delta_max_states(&a, 1e-11),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn delta_max_nilpotent_and_brute_force() {
        let a = CMatrix::from_rows(vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![
            c(0.0, 0.0),
            c(0.0, 0.0),
        ]])
        .unwrap();
        let fit = delta_max_states(&a, 1e-9).unwrap();
        assert!((fit.value - 1.0).abs() < 1e-8);
        // unique maximizer diag(0, 1)
        assert!((fit.argmax[(0, 0)]).norm() < 1e-6);
        assert!((fit.argmax[(1, 1)] - c(1.0, 0.0)).norm() < 1e-6);

        // brute force over parametrized 2x2 densities
        let mut st = 0x330u64;
        for _ in 0..3 {
            let a = rand_mat(2, &mut st);
            let fit = delta_max_states(&a, 1e-9).unwrap();
            let gram = &a.adjoint() * &a;
            let value = |p: f64, z: Complex64| -> f64 {
                // V(rho) for rho = [[p, z], [conj z, 1-p]]
                let t = p * gram[(0, 0)].re
                    + (1.0 - p) * gram[(1, 1)].re
                    + 2.0 * (z * gram[(1, 0)]).re;
                let mean = p * a[(0, 0)]
                    + (1.0 - p) * a[(1, 1)]
                    + z * a[(1, 0)]
                    + z.conj() * a[(0, 1)];
                t - mean.norm_sqr()
            };
            let mut best = 0.0f64;
            let n = 60;
            for ip in 0..=n {
                let p = ip as f64 / n as f64;
                let rmax = (p * (1.0 - p)).sqrt();
                for ir in 0..=n {
                    let r = rmax * ir as f64 / n as f64;
                    for it in 0..n {
                        let th = 2.0 * std::f64::consts::PI * it as f64 / n as f64;
                        best = best.max(value(p, c(r * th.cos(), r * th.sin())));
                    }
                }
            }
            let brute = best.max(0.0).sqrt();
            assert!(
                fit.value >= brute - 1e-4 && fit.value <= brute + 0.05 * brute + 1e-6,
                "solver {:.8e} vs brute {:.8e}",
                fit.value,
                brute
            );
        }
    }

    #[test]
    fn delta_max_argmax_is_state_with_reported_variance() {
        let mut st = 0x340u64;
        for _ in 0..5 {
            let a = rand_mat(4, &mut st);
            let fit = delta_max_states(&a, 1e-9).unwrap();
            let state = State::new(fit.argmax.clone()).unwrap();
            let mean = state.expectation(&a).unwrap();
            let second = state.expectation(&(&a.adjoint() * &a)).unwrap().re;
            let variance = (second - mean.norm_sqr()).max(0.0);
            assert!(
                (variance.sqrt() - fit.value).abs() <= 1e-7 * (1.0 + fit.value),
                "variance of argmax {:.10e} vs reported {:.10e}",
                variance.sqrt(),
                fit.value
            );
        }
    }

    #[test]
    fn certify_duality_cases() {
        let mut st = 0x350u64;

        // scalar matrix: both sides vanish
        let a = CMatrix::identity(2).scale(c(0.7, -0.4));
        let cert = certify_duality(&a, 1e-8).unwrap();
        assert!(cert.certified, "{:?}", cert.failures);
        assert!(cert.delta_min < 1e-7 && cert.delta_max < 1e-7);

        // Hermitian diagonal closed form
        for _ in 0..5 {
            let entries: Vec<f64> = (0..4).map(|_| 3.0 * gauss(&mut st)).collect();
            let a = CMatrix::from_real_diag(&entries);
            let (mx, mn) = (
                entries.iter().cloned().fold(f64::MIN, f64::max),
                entries.iter().cloned().fold(f64::MAX, f64::min),
            );
            let want = (mx - mn) / 2.0;
            let cert = certify_duality(&a, 1e-8).unwrap();
            assert!(cert.certified, "{:?}", cert.failures);
            assert!((cert.delta_min - want).abs() < 1e-7);
            assert!((cert.delta_max - want).abs() < 1e-7);
        }

        // random small matrices: the acceptance experiment shape
        for dim in [2usize, 3, 5] {
            let a = rand_mat(dim, &mut st);
            let cert = certify_duality(&a, 1e-8).unwrap();
            assert!(cert.certified, "{:?}", cert.failures);
            assert!(cert.gap <= 1e-6, "gap {:.3e}", cert.gap);
        }
    }

    #[test]
    fn weak_duality_and_monotone_sandwich() {
        let mut st = 0x360u64;
        for _ in 0..5 {
            let a = rand_mat(3, &mut st);
            let tol = 1e-9;
            let lo = delta_min(&a, tol).unwrap();
            for _ in 0..50 {
                let s = rand_state(3, &mut st);
                assert!(s.l0(&a).unwrap() <= lo.value + tol + 1e-9);
                assert!(s.sigma_mu(&a).unwrap() <= lo.value + tol + 1e-9);
            }
        }
    }

    #[test]
    fn delta_strongly_leibniz() {
        let mut st = 0x370u64;
        let tol = 1e-9;
        for _ in 0..6 {
            let a = rand_invertible(3, 1e3, &mut st);
            let inv = linalg::matrix_inverse(&a).unwrap().matrix;
            let ninv = spectral_norm(&inv);
            let margin = ninv * ninv * delta_min(&a, tol).unwrap().value
                - delta_min(&inv, tol).unwrap().value;
            assert!(
                margin >= -10.0 * tol * (1.0 + ninv * ninv),
                "delta strongly-leibniz margin {margin:.3e}"
            );
        }
    }

    #[test]
    fn delta_markov_margin_cases() {
        let mut st = 0x380u64;
        let tol = 1e-9;

        // affine functions scale both sides exactly
        let h = rand_hermitian(3, &mut st);
        let f = LipschitzFn::Affine {
            a: c(1.5, -0.5),
            b: c(2.0, 1.0),
        };
        let margin = delta_markov_margin(&h, &f, tol).unwrap();
        assert!(margin.abs() <= 10.0 * tol * (1.0 + spectral_norm(&h)));

        // constant function: zero Lipschitz constant, zero distance
        let konst = LipschitzFn::piecewise_linear(vec![-50.0, 50.0], vec![2.0, 2.0]).unwrap();
        let margin = delta_markov_margin(&h, &konst, tol).unwrap();
        assert!(margin.abs() <= 10.0 * tol);

        // random Hermitian with random piecewise-linear
        for _ in 0..10 {
            let h = rand_hermitian(3, &mut st);
            let ev = linalg::eig_hermitian(&h).unwrap().real_eigenvalues();
            let (lo, hi) = (ev[0] - 0.3, ev[ev.len() - 1] + 0.3);
            let bps: Vec<f64> = (0..5)
                .map(|k| lo + (hi - lo) * k as f64 / 4.0)
                .collect();
            let vals: Vec<f64> = (0..5).map(|_| gauss(&mut st)).collect();
            let f = LipschitzFn::piecewise_linear(bps, vals).unwrap();
            let margin = delta_markov_margin(&h, &f, tol).unwrap();
            assert!(margin >= -1e-6, "delta markov margin {margin:.3e}");

            // the fast path agrees with the full solver route
            let sd = linalg::decompose_normal(&h).unwrap();
            let mapped: Vec<Complex64> = sd
                .eigenvalues
                .iter()
                .map(|&lam| f.eval(lam).unwrap())
                .collect();
            let f_of_h = linalg::SpectralData {
                eigenvalues: mapped,
                transform: sd.transform,
            }
            .reconstruct();
            let full = f.lip_constant() * delta_min(&h, tol).unwrap().value
                - delta_min(&f_of_h, tol).unwrap().value;
            assert!(
                (full - margin).abs() <= 1e-6 * (1.0 + f.lip_constant()),
                "fast path {margin:.9e} vs full {full:.9e}"
            );
        }

        // domain propagation
        let f = LipschitzFn::piecewise_linear(vec![-1.0, 1.0], vec![0.0, 1.0]).unwrap();
        let rot = CMatrix::from_diag(&[c(0.0, 1.0), c(0.0, -1.0)]);
        assert!(matches!(
            delta_markov_margin(&rot, &f, tol),
            Err(Error::Domain(_))
        ));
    }
}
