//! Seed-stable random inputs for unit tests. The production samplers with
//! their documented distributions live in `harness::random`; these are the
//! minimal splitmix-based versions tests reach for.

use num_complex::Complex64;

use crate::linalg::{self, CMatrix};
use crate::ncprob::State;

pub fn next_u64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn unit(state: &mut u64) -> f64 {
    (next_u64(state) >> 11) as f64 / (1u64 << 53) as f64
}

pub fn gauss(state: &mut u64) -> f64 {
    let (u1, u2) = (unit(state).max(1e-300), unit(state));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn cgauss(state: &mut u64) -> Complex64 {
    Complex64::new(gauss(state), gauss(state)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn rand_mat(d: usize, state: &mut u64) -> CMatrix {
    CMatrix::from_fn(d, |_, _| cgauss(state))
}

pub fn rand_hermitian(d: usize, state: &mut u64) -> CMatrix {
    rand_mat(d, state).hermitian_part()
}

pub fn rand_unitary(d: usize, state: &mut u64) -> CMatrix {
    loop {
        if let Some(u) = gram_schmidt(&rand_mat(d, state)) {
            return u;
        }
    }
}

fn gram_schmidt(m: &CMatrix) -> Option<CMatrix> {
    let d = m.dim();
    let mut cols: Vec<Vec<Complex64>> = (0..d)
        .map(|j| (0..d).map(|i| m[(i, j)]).collect())
        .collect();
    for j in 0..d {
        for k in 0..j {
            let proj: Complex64 = (0..d).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..d {
                let t = cols[k][i];
                cols[j][i] -= proj * t;
            }
        }
        let n = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n < 1e-8 {
            return None;
        }
        for z in cols[j].iter_mut() {
            *z /= n;
        }
    }
    Some(CMatrix::from_fn(d, |i, j| cols[j][i]))
}

/// Wishart density G G^* / trace; faithful almost surely.
pub fn rand_state(d: usize, state: &mut u64) -> State {
    loop {
        let g = rand_mat(d, state);
        let w = &g * &g.adjoint();
        let t = w.trace().re;
        if t < 1e-10 {
            continue;
        }
        let rho = w.scale(Complex64::new(1.0 / t, 0.0));
        match State::new(rho) {
            Ok(s) if s.is_faithful() => return s,
            _ => continue,
        }
    }
}

/// Gaussian matrix, resampled until cond <= cap.
pub fn rand_invertible(d: usize, cap: f64, state: &mut u64) -> CMatrix {
    loop {
        let m = rand_mat(d, state);
        let sv = linalg::singular_values(&m);
        let (max, min) = (sv[0], sv[d - 1]);
        if min > 0.0 && max / min <= cap {
            return m;
        }
    }
}
