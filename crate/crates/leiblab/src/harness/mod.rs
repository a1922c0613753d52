//! Randomized margin suites, deterministic reports, and the counterexample
//! search for the one-sided deviation inequality.
//!
//! Every suite follows one convention: for an inequality LHS <= RHS, the
//! margin is RHS - LHS and an instance conforms when margin >= -tol * scale,
//! where scale normalizes by the magnitude of the right-hand side. Trials
//! draw from independent per-trial streams ([`random::trial_rng`]), so the
//! execution order cannot influence results and reports are reproducible
//! byte for byte. Candidate violations are re-verified through a tightened
//! path (refined inverses, tightened solver tolerances) at tol/100 before
//! they may be called confirmed; anything that fails re-verification is
//! published as a numerical artifact, never as a counterexample.

pub mod metric;
pub mod random;

pub use metric::{lipschitz_seminorm, FiniteMetric};
pub use random::{random_instance, trial_rng, InstanceValue, RandomKind};

use std::path::PathBuf;

use num_complex::Complex64;
use num_traits::One;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::condexp::{self, CondExp, ModuleElement};
use crate::duality;
use crate::io;
use crate::linalg::{self, CMatrix};
use crate::ncprob::{self, LipschitzFn, State};
use crate::shiftlab;
use crate::{Error, Result};

/// The available suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// sigma(AB) <= sigma(A)||B|| + ||A|| sigma(B), scalar or module level.
    Leibniz,
    /// sigma(A^{-1}) <= ||A^{-1}||^2 sigma(A) on conditioned invertibles.
    Strong,
    /// sigma(F(N)) <= Lip(F) sigma(N) for normal N.
    Markov,
    /// The minimax identity: distance to scalars equals the largest
    /// deviation over states, checked by two independent solvers.
    Audenaert,
    /// No scalar (or subalgebra element) beats the canonical center.
    Quotient,
    /// The two-independent-copies variance identity for tracial states.
    TracialCopies,
    /// The matricial seminorm family at level n.
    Matricial,
    /// Search for a counterexample to the one-sided strongly-Leibniz bound.
    SearchL0Strong,
    /// Exact rational identities of the bilateral-shift lab.
    Shift,
    /// Seminorm axioms of the finite-metric Lipschitz constant.
    LipschitzMetric,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Leibniz,
        Suite::Strong,
        Suite::Markov,
        Suite::Audenaert,
        Suite::Quotient,
        Suite::TracialCopies,
        Suite::Matricial,
        Suite::SearchL0Strong,
        Suite::Shift,
        Suite::LipschitzMetric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Leibniz => "leibniz",
            Suite::Strong => "strong",
            Suite::Markov => "markov",
            Suite::Audenaert => "audenaert",
            Suite::Quotient => "quotient",
            Suite::TracialCopies => "tracial-copies",
            Suite::Matricial => "matricial",
            Suite::SearchL0Strong => "search-l0-strong",
            Suite::Shift => "shift",
            Suite::LipschitzMetric => "lipschitz-metric",
        }
    }

    pub fn from_name(name: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                let known: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!(
                    "unknown suite '{name}'; expected one of {}",
                    known.join(", ")
                ))
            })
    }
}

/// How each trial obtains its state.
#[derive(Clone, Debug)]
pub enum StateKind {
    Tracial,
    RandomFaithful,
    Fixed(State),
}

impl StateKind {
    pub fn label(&self) -> &'static str {
        match self {
            StateKind::Tracial => "tracial",
            StateKind::RandomFaithful => "random-faithful",
            StateKind::Fixed(_) => "fixed-from-file",
        }
    }
}

/// Full description of a suite run; the report is a pure function of this.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub dim: usize,
    /// Matricial level for the module suites; window radius for shift.
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub tol: f64,
    pub state_kind: StateKind,
    pub out: Option<PathBuf>,
}

impl SuiteConfig {
    pub fn new(suite: Suite, dim: usize) -> SuiteConfig {
        SuiteConfig {
            suite,
            dim,
            n: 1,
            trials: 100,
            seed: 0,
            tol: 1e-9,
            state_kind: StateKind::RandomFaithful,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.n < 1 {
            return Err(Error::Config("matricial level n must be at least 1".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Config(format!(
                "tol must be a positive real, got {}",
                self.tol
            )));
        }
        if self.n * self.dim > 64 {
            return Err(Error::Config(format!(
                "matrix side n*d = {} too large for dense eigensolves; keep n*d <= 64",
                self.n * self.dim
            )));
        }
        match self.suite {
            Suite::Shift if self.dim < 4 => {
                return Err(Error::Config(
                    "shift suite interprets dim as the window radius and needs dim >= 4".into(),
                ));
            }
            Suite::LipschitzMetric if self.dim < 2 => {
                return Err(Error::Config(
                    "lipschitz-metric needs at least two points (dim >= 2)".into(),
                ));
            }
            Suite::SearchL0Strong => {
                if !matches!(self.state_kind, StateKind::RandomFaithful) {
                    return Err(Error::Config(
                        "search-l0-strong requires state random-faithful (it rejects \
                         near-tracial draws itself)"
                            .into(),
                    ));
                }
                if self.dim < 2 {
                    return Err(Error::Config(
                        "search-l0-strong needs dim >= 2 for non-tracial states".into(),
                    ));
                }
            }
            _ => {}
        }
        if let StateKind::Fixed(s) = &self.state_kind {
            if s.dim() != self.dim {
                return Err(Error::Config(format!(
                    "fixed state has dim {} but the suite asked for {}",
                    s.dim(),
                    self.dim
                )));
            }
        }
        Ok(())
    }
}

/// One per-trial row, the CSV payload.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRow {
    pub trial: u64,
    pub margin: f64,
    pub scale: f64,
    pub pass: bool,
}

/// A margin that crossed -tol*scale, together with its re-verification.
#[derive(Clone, Debug, Serialize)]
pub struct ViolationRecord {
    pub trial: u64,
    pub margin: f64,
    pub scale: f64,
    pub refined_margin: f64,
    /// "confirmed" or "numerical-artifact".
    pub verdict: String,
    pub instance: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginStats {
    pub mean: f64,
    pub p01: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p99: f64,
}

/// Deterministic summary of one suite run. `digest` is the SHA-256 of the
/// report serialized with the digest field blanked, so two runs agree iff
/// their digests do.
#[derive(Clone, Debug, Serialize)]
pub struct MarginReport {
    pub suite: String,
    pub dim: usize,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub tol: f64,
    pub state_kind: String,
    /// Documented sampling-bias parameters and stream derivation.
    pub sampling_notes: Vec<String>,
    pub completed_trials: u64,
    pub error_count: u64,
    /// First few per-trial solver errors, verbatim.
    pub errors: Vec<String>,
    pub min_margin: f64,
    pub min_margin_scale: f64,
    pub argmin_trial: Option<u64>,
    pub argmin_instance: Value,
    pub stats: MarginStats,
    pub violations: Vec<ViolationRecord>,
    pub digest: String,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

impl MarginReport {
    pub fn confirmed_violations(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| v.verdict == "confirmed")
            .count()
    }

    /// Per-trial margins as comma-separated rows.
    pub fn csv(&self) -> String {
        let mut out = String::from("trial,margin,scale,pass\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.trial, r.margin, r.scale, r.pass));
        }
        out
    }
}

struct Outcome {
    margin: f64,
    scale: f64,
    instance: Option<Value>,
}

/// Runs a full suite: per-trial margins, argmin instance, violation
/// re-verification, summary statistics, and the content digest.
pub fn run_suite(cfg: &SuiteConfig) -> Result<MarginReport> {
    cfg.validate()?;
    // the shift suite is exact and instance-free; one pass covers it
    let trials = if cfg.suite == Suite::Shift { 1 } else { cfg.trials };

    let mut rows = Vec::with_capacity(trials as usize);
    let mut errors = Vec::new();
    let mut error_count = 0u64;
    for t in 0..trials {
        match run_trial(cfg, t, false, false) {
            Ok(o) => rows.push(TrialRow {
                trial: t,
                margin: o.margin,
                scale: o.scale,
                pass: o.margin >= -cfg.tol * o.scale,
            }),
            Err(e) => {
                error_count += 1;
                if errors.len() < 32 {
                    errors.push(format!("trial {t}: {e}"));
                }
            }
        }
    }

    let argmin = rows
        .iter()
        .min_by(|a, b| (a.margin / a.scale).total_cmp(&(b.margin / b.scale)))
        .map(|r| (r.trial, r.margin, r.scale));
    let argmin_instance = match argmin {
        Some((t, _, _)) => run_trial(cfg, t, true, false)
            .map(|o| o.instance.unwrap_or(Value::Null))
            .unwrap_or_else(|e| json!({ "error": e.to_string() })),
        None => Value::Null,
    };

    let mut violations = Vec::new();
    for r in rows.iter().filter(|r| !r.pass) {
        let (refined_margin, refined_scale, instance) = match run_trial(cfg, r.trial, true, true) {
            Ok(o) => (o.margin, o.scale, o.instance.unwrap_or(Value::Null)),
            Err(e) => (
                f64::INFINITY,
                1.0,
                json!({ "re-verification error": e.to_string() }),
            ),
        };
        let verdict = if refined_margin < -(cfg.tol / 100.0) * refined_scale {
            "confirmed"
        } else {
            "numerical-artifact"
        };
        violations.push(ViolationRecord {
            trial: r.trial,
            margin: r.margin,
            scale: r.scale,
            refined_margin,
            verdict: verdict.into(),
            instance,
        });
    }

    let mut sorted: Vec<f64> = rows.iter().map(|r| r.margin).collect();
    sorted.sort_by(f64::total_cmp);
    let mean = if sorted.is_empty() {
        f64::NAN
    } else {
        sorted.iter().sum::<f64>() / sorted.len() as f64
    };
    let stats = MarginStats {
        mean,
        p01: percentile(&sorted, 1.0),
        p25: percentile(&sorted, 25.0),
        p50: percentile(&sorted, 50.0),
        p75: percentile(&sorted, 75.0),
        p99: percentile(&sorted, 99.0),
    };

    let mut report = MarginReport {
        suite: cfg.suite.name().into(),
        dim: cfg.dim,
        n: cfg.n,
        trials,
        seed: cfg.seed,
        tol: cfg.tol,
        state_kind: cfg.state_kind.label().into(),
        sampling_notes: sampling_notes(cfg),
        completed_trials: rows.len() as u64,
        error_count,
        errors,
        min_margin: argmin.map(|(_, m, _)| m).unwrap_or(f64::INFINITY),
        min_margin_scale: argmin.map(|(_, _, s)| s).unwrap_or(1.0),
        argmin_trial: argmin.map(|(t, _, _)| t),
        argmin_instance,
        stats,
        violations,
        digest: String::new(),
        rows,
    };
    report.digest = compute_digest(&report)?;
    Ok(report)
}

/// The open-question search with its documented sampling bias; equivalent to
/// [`run_suite`] with the suite forced to `search-l0-strong`.
pub fn search_l0_strong(cfg: &SuiteConfig) -> Result<MarginReport> {
    let mut search_cfg = cfg.clone();
    search_cfg.suite = Suite::SearchL0Strong;
    run_suite(&search_cfg)
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = ((p / 100.0) * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

fn compute_digest(report: &MarginReport) -> Result<String> {
    let mut blanked = report.clone();
    blanked.digest = String::new();
    let text = serde_json::to_string(&blanked)
        .map_err(|e| Error::Internal(format!("digesting report: {e}")))?;
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    Ok(h.finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>())
}

fn sampling_notes(cfg: &SuiteConfig) -> Vec<String> {
    let mut notes = vec![
        "per-trial stream: chacha8 keyed by sha256(suite label, seed, trial index)".into(),
    ];
    match cfg.suite {
        Suite::Leibniz | Suite::Matricial => {
            notes.push(
                "leibniz and matricial share one stream label, so at n = 1 they see \
                 identical draws through their two code paths"
                    .into(),
            );
        }
        Suite::Markov => {
            notes.push(
                "every 11th trial checks F(z) = 1/z on a normal invertible; the rest use \
                 piecewise-linear F spanning a Hermitian spectrum"
                    .into(),
            );
        }
        Suite::TracialCopies => {
            notes.push("state forced to I/d: the identity under test assumes traciality".into());
        }
        Suite::SearchL0Strong => {
            notes.push(
                "states: normalized Wishart, resampled until ||rho - I/d||_F >= 0.05 \
                 (search-bias parameter, not derived)"
                    .into(),
            );
            notes.push(
                "matrices: Gaussian + identity shift to cond <= 1e4, resampled until \
                 ||A*A - AA*||_F >= 0.01 ||A||_F^2 (search-bias parameter, not derived)"
                    .into(),
            );
        }
        Suite::Shift => {
            notes.push("exact rational arithmetic; dim is the window radius; trials = 1".into());
        }
        _ => {}
    }
    notes
}

fn rng_label(suite: Suite) -> &'static str {
    match suite {
        // shared on purpose: identical draws let the two sigma code paths be
        // compared trial by trial at n = 1
        Suite::Leibniz | Suite::Matricial => "leibniz",
        s => s.name(),
    }
}

fn run_trial(cfg: &SuiteConfig, trial: u64, capture: bool, refined: bool) -> Result<Outcome> {
    let mut rng = random::trial_rng(rng_label(cfg.suite), cfg.seed, trial);
    match cfg.suite {
        Suite::Leibniz => leibniz_trial(cfg, &mut rng, capture),
        Suite::Strong => strong_trial(cfg, &mut rng, capture, refined),
        Suite::Markov => markov_trial(cfg, trial, &mut rng, capture),
        Suite::Audenaert => audenaert_trial(cfg, &mut rng, capture, refined),
        Suite::Quotient => quotient_trial(cfg, &mut rng, capture),
        Suite::TracialCopies => tracial_copies_trial(cfg, &mut rng, capture),
        Suite::Matricial => matricial_trial(cfg, &mut rng, capture),
        Suite::SearchL0Strong => search_trial(cfg, &mut rng, capture, refined),
        Suite::Shift => shift_trial(cfg, capture),
        Suite::LipschitzMetric => lipschitz_metric_trial(cfg, &mut rng, capture),
    }
}

fn sample_state(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<State> {
    match &cfg.state_kind {
        StateKind::Tracial => Ok(State::tracial(cfg.dim)),
        StateKind::RandomFaithful => random::wishart_state(cfg.dim, rng),
        StateKind::Fixed(s) => Ok(s.clone()),
    }
}

/// Worst component by normalized margin; scales are all >= 1.
fn worst(components: &[(f64, f64)]) -> (f64, f64) {
    components
        .iter()
        .copied()
        .min_by(|a, b| (a.0 / a.1).total_cmp(&(b.0 / b.1)))
        .expect("at least one component")
}

/// Two Newton steps X <- X(2I - AX); each squares the inversion residual,
/// which is the tightened path for inverse-based margins.
fn refined_inverse(a: &CMatrix, x0: &CMatrix) -> CMatrix {
    let two_id = CMatrix::identity(a.dim()).scale(Complex64::new(2.0, 0.0));
    let mut x = x0.clone();
    for _ in 0..2 {
        x = &x * &(&two_id - &(a * &x));
    }
    x
}

fn leibniz_trial(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, capture: bool) -> Result<Outcome> {
    let s = sample_state(cfg, rng)?;
    let side = cfg.n * cfg.dim;
    let a = random::gaussian_matrix(side, rng);
    let b = random::gaussian_matrix(side, rng);
    let ab = &a * &b;
    let (la, lb, lab) = if cfg.n == 1 {
        (s.sigma_mu(&a)?, s.sigma_mu(&b)?, s.sigma_mu(&ab)?)
    } else {
        let ce = CondExp::new(cfg.n, s.clone())?;
        let ma = ModuleElement::new(a.clone(), cfg.n, cfg.dim)?;
        let mb = ModuleElement::new(b.clone(), cfg.n, cfg.dim)?;
        let mab = ModuleElement::new(ab.clone(), cfg.n, cfg.dim)?;
        (ce.sigma_e(&ma)?, ce.sigma_e(&mb)?, ce.sigma_e(&mab)?)
    };
    let rhs = la * linalg::spectral_norm(&b) + linalg::spectral_norm(&a) * lb;
    Ok(Outcome {
        margin: rhs - lab,
        scale: 1.0 + rhs,
        instance: capture.then(|| {
            json!({
                "state": io::state_to_value(&s),
                "a": io::matrix_to_value(&a),
                "b": io::matrix_to_value(&b),
            })
        }),
    })
}

fn matricial_trial(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, capture: bool) -> Result<Outcome> {
    let s = sample_state(cfg, rng)?;
    let side = cfg.n * cfg.dim;
    let a = random::gaussian_matrix(side, rng);
    let b = random::gaussian_matrix(side, rng);
    let ab = &a * &b;
    let ma = ModuleElement::new(a.clone(), cfg.n, cfg.dim)?;
    let mb = ModuleElement::new(b.clone(), cfg.n, cfg.dim)?;
    let mab = ModuleElement::new(ab, cfg.n, cfg.dim)?;
    let la = condexp::matricial_family(&s, &ma, cfg.n)?;
    let lb = condexp::matricial_family(&s, &mb, cfg.n)?;
    let lab = condexp::matricial_family(&s, &mab, cfg.n)?;
    let rhs = la * linalg::spectral_norm(&b) + linalg::spectral_norm(&a) * lb;
    Ok(Outcome {
        margin: rhs - lab,
        scale: 1.0 + rhs,
        instance: capture.then(|| {
            json!({
                "state": io::state_to_value(&s),
                "a": io::matrix_to_value(&a),
                "b": io::matrix_to_value(&b),
            })
        }),
    })
}

fn strong_trial(
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    capture: bool,
    refined: bool,
) -> Result<Outcome> {
    let s = sample_state(cfg, rng)?;
    let side = cfg.n * cfg.dim;
    let a = random::invertible_with_cond(side, 1e4, rng)?;
    let inverse = linalg::matrix_inverse(&a)?;
    let inv = if refined {
        refined_inverse(&a, &inverse.matrix)
    } else {
        inverse.matrix
    };
    let (la, linv) = if cfg.n == 1 {
        (s.sigma_mu(&a)?, s.sigma_mu(&inv)?)
    } else {
        let ce = CondExp::new(cfg.n, s.clone())?;
        let ma = ModuleElement::new(a.clone(), cfg.n, cfg.dim)?;
        let mi = ModuleElement::new(inv.clone(), cfg.n, cfg.dim)?;
        (ce.sigma_e(&ma)?, ce.sigma_e(&mi)?)
    };
    let rhs = linalg::spectral_norm(&inv).powi(2) * la;
    Ok(Outcome {
        margin: rhs - linv,
        scale: 1.0 + rhs,
        instance: capture.then(|| {
            json!({
                "state": io::state_to_value(&s),
                "a": io::matrix_to_value(&a),
                "cond": inverse.cond,
            })
        }),
    })
}

fn markov_trial(
    cfg: &SuiteConfig,
    trial: u64,
    rng: &mut ChaCha8Rng,
    capture: bool,
) -> Result<Outcome> {
    let s = sample_state(cfg, rng)?;
    let (nmat, f) = if trial % 11 == 10 {
        // normal invertible with spectrum kept away from zero
        let u = random::random_unitary(cfg.dim, rng);
        let eigs: Vec<Complex64> = (0..cfg.dim)
            .map(|_| {
                let z = random::gaussian_complex(rng);
                let r = z.norm();
                if r < 1e-12 {
                    Complex64::new(0.3, 0.0)
                } else {
                    z / r * (r + 0.3)
                }
            })
            .collect();
        let nmat = &(&u * &CMatrix::from_diag(&eigs)) * &u.adjoint();
        (nmat, LipschitzFn::reciprocal(0.29)?)
    } else {
        let h = random::gaussian_hermitian(cfg.dim, rng);
        let eig = linalg::eig_hermitian(&h)?;
        let lo = eig.eigenvalues.first().map(|z| z.re).unwrap_or(0.0);
        let hi = eig.eigenvalues.last().map(|z| z.re).unwrap_or(0.0);
        (h, random::pl_spanning(lo, hi, rng)?)
    };
    let margin = s.markov_margin(&nmat, &f)?;
    let rhs = f.lip_constant() * s.sigma_mu(&nmat)?;
    Ok(Outcome {
        margin,
        scale: 1.0 + rhs,
        instance: capture.then(|| {
            json!({
                "state": io::state_to_value(&s),
                "matrix": io::matrix_to_value(&nmat),
                "function": io::lipschitz_to_value(&f),
            })
        }),
    })
}

fn audenaert_trial(
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    capture: bool,
    refined: bool,
) -> Result<Outcome> {
    let a = random::gaussian_matrix(cfg.dim, rng);
    let base_tol = (cfg.tol / 10.0).clamp(1e-8, 1e-7);
    let solver_tol = if refined { 1e-8 } else { base_tol };
    let cert = duality::certify_duality(&a, solver_tol)?;
    let a_scale = 1.0 + linalg::spectral_norm(&a);

    // the two solvers must meet...
    let mut comps = vec![(-cert.gap.abs(), a_scale)];
    // ...and no state, sampled or optimal, may deviate past the distance
    for _ in 0..4 {
        let s = random::wishart_state(cfg.dim, rng)?;
        comps.push((cert.delta_min - s.sigma_mu(&a)?, a_scale));
    }
    if let Ok(argmax) = State::new(cert.argmax_rho.clone()) {
        comps.push((cert.delta_min - argmax.sigma_mu(&a)?, a_scale));
    }
    // Lipschitz functional calculus compatibility of the same distance
    let h = random::gaussian_hermitian(cfg.dim, rng);
    let heig = linalg::eig_hermitian(&h)?;
    let lo = heig.eigenvalues.first().map(|z| z.re).unwrap_or(0.0);
    let hi = heig.eigenvalues.last().map(|z| z.re).unwrap_or(0.0);
    let f = random::pl_spanning(lo, hi, rng)?;
    let dm = duality::delta_markov_margin(&h, &f, 1e-10)?;
    let dh = duality::delta_min_spectrum(&heig.eigenvalues, 1e-10)?.value;
    comps.push((dm, 1.0 + f.lip_constant() * dh));

    let (margin, scale) = worst(&comps);
    Ok(Outcome {
        margin,
        scale,
        instance: capture.then(|| {
            json!({
                "a": io::matrix_to_value(&a),
                "delta_min": cert.delta_min,
                "delta_max": cert.delta_max,
                "gap": cert.gap,
                "certified": cert.certified,
                "failures": cert.failures,
                "argmax_rho": io::matrix_to_value(&cert.argmax_rho),
            })
        }),
    })
}

fn quotient_trial(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, capture: bool) -> Result<Outcome> {
    let s = sample_state(cfg, rng)?;
    if cfg.n == 1 {
        let a = random::gaussian_matrix(cfg.dim, rng);
        let mean = s.expectation(&a)?;
        let radius = 2.0 * s.sigma_mu(&a)? + 0.1;
        let mut candidates = Vec::with_capacity(24);
        for _ in 0..16 {
            let r = radius * rng.gen::<f64>().sqrt();
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            candidates.push(mean + Complex64::from_polar(r, theta));
        }
        for _ in 0..8 {
            candidates.push(mean + random::gaussian_complex(rng) * 1e-3 * (1.0 + mean.norm()));
        }
        let report = s.quotient_optimality(&a, &candidates)?;
        Ok(Outcome {
            margin: report.min_gap,
            scale: 1.0 + report.base,
            instance: capture.then(|| {
                json!({
                    "state": io::state_to_value(&s),
                    "a": io::matrix_to_value(&a),
                    "canonical_value": report.base,
                    "best_candidate_value": report.best,
                })
            }),
        })
    } else {
        let ce = CondExp::new(cfg.n, s.clone())?;
        let a = ModuleElement::new(
            random::gaussian_matrix(cfg.n * cfg.dim, rng),
            cfg.n,
            cfg.dim,
        )?;
        let center = ce.cond_exp(&a)?;
        let base = ce.l0_tilde(&a)?;
        let mut best = f64::INFINITY;
        for delta in [1e-3, 0.3, 1.0] {
            for _ in 0..8 {
                let x = &center + &random::gaussian_matrix(cfg.n, rng).scale(Complex64::new(delta, 0.0));
                let shifted = ModuleElement::new(
                    a.value() - ModuleElement::embed_scalar(&x, cfg.dim).value(),
                    cfg.n,
                    cfg.dim,
                )?;
                best = best.min(ce.e_norm(&shifted)?);
            }
        }
        Ok(Outcome {
            margin: best - base,
            scale: 1.0 + base,
            instance: capture.then(|| {
                json!({
                    "state": io::state_to_value(&s),
                    "a": io::module_element_to_value(&a),
                    "canonical_value": base,
                    "best_candidate_value": best,
                })
            }),
        })
    }
}

fn tracial_copies_trial(
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    capture: bool,
) -> Result<Outcome> {
    let s = State::tracial(cfg.dim);
    let a = random::gaussian_matrix(cfg.dim, rng);
    let (lhs, rhs) = ncprob::independent_copies_identity(&s, &a)?;
    Ok(Outcome {
        margin: -(lhs - rhs).abs(),
        scale: 1.0 + linalg::spectral_norm(&a).powi(2),
        instance: capture.then(|| {
            json!({
                "a": io::matrix_to_value(&a),
                "copies_norm_sq": lhs,
                "twice_variance": rhs,
            })
        }),
    })
}

fn search_trial(
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    capture: bool,
    refined: bool,
) -> Result<Outcome> {
    let s = random::nontracial_faithful_state(cfg.dim, 0.05, rng)?;
    let a = random::nonnormal_invertible(cfg.dim, 1e4, 0.01, rng)?;
    let inverse = linalg::matrix_inverse(&a)?;
    let inv = if refined {
        refined_inverse(&a, &inverse.matrix)
    } else {
        inverse.matrix
    };
    let rhs = linalg::spectral_norm(&inv).powi(2) * s.l0(&a)?;
    let margin = rhs - s.l0(&inv)?;
    Ok(Outcome {
        margin,
        scale: 1.0 + rhs,
        instance: capture.then(|| {
            json!({
                "state": io::state_to_value(&s),
                "a": io::matrix_to_value(&a),
                "cond": inverse.cond,
                "normality_residue": a.herm_residue(),
            })
        }),
    })
}

fn shift_trial(cfg: &SuiteConfig, capture: bool) -> Result<Outcome> {
    let window = cfg.dim as i64;
    let identities = shiftlab::verify_shift_identities(window)?;
    let block = shiftlab::verify_block_unitary(window)?;
    let split = shiftlab::commutator_split_identity(&shiftlab::ShiftOp::B, window)?;
    let w_b = shiftlab::gamma_seminorm_witness(&shiftlab::ShiftOp::B, window)?;
    let w_binv = shiftlab::gamma_seminorm_witness(&shiftlab::ShiftOp::Binv, window)?;
    let gamma_ok = w_b.vanishing && !w_binv.vanishing && w_binv.lower_bound_sq.is_one();

    let mut failing: Vec<Value> = Vec::new();
    for (label, report) in [
        ("identities", &identities),
        ("block-unitary", &block),
        ("commutator-split", &split),
    ] {
        for entry in report.failures() {
            failing.push(json!({
                "report": label,
                "check": entry.check,
                "index": entry.index,
                "expected": entry.expected,
                "got": entry.got,
            }));
        }
    }
    if !gamma_ok {
        failing.push(json!({
            "report": "gamma-witness",
            "check": "corner norms of the shift and its inverse",
            "expected": "vanishing for B, squared lower bound 1 for B'",
            "got": format!(
                "B vanishing = {}, B' bound^2 = {}",
                w_b.vanishing, w_binv.lower_bound_sq
            ),
        }));
    }

    let all_pass = failing.is_empty();
    Ok(Outcome {
        // exact arithmetic: any failure is a real failure, not a tolerance
        margin: if all_pass { 0.0 } else { -1.0 },
        scale: 1.0,
        instance: capture.then(|| {
            json!({
                "window": window,
                "checks": identities.entries.len() + block.entries.len() + split.entries.len() + 1,
                "failures": failing,
            })
        }),
    })
}

fn lipschitz_metric_trial(
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    capture: bool,
) -> Result<Outcome> {
    let k = cfg.dim;
    let coords: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let m = FiniteMetric::from_points(&coords)?;
    let f: Vec<Complex64> = (0..k).map(|_| random::gaussian_complex(rng)).collect();
    let g: Vec<Complex64> = (0..k).map(|_| random::gaussian_complex(rng)).collect();
    let lf = lipschitz_seminorm(&m, &f)?;
    let lg = lipschitz_seminorm(&m, &g)?;
    let sum: Vec<Complex64> = f.iter().zip(&g).map(|(x, y)| x + y).collect();
    let lsum = lipschitz_seminorm(&m, &sum)?;

    let c = random::gaussian_complex(rng);
    let cf: Vec<Complex64> = f.iter().map(|x| c * x).collect();
    let lcf = lipschitz_seminorm(&m, &cf)?;

    let mut domination = f64::INFINITY;
    for i in 0..k {
        for j in (i + 1)..k {
            domination = domination.min(lf * m.dist(i, j) - (f[i] - f[j]).norm());
        }
    }

    let scale = 1.0 + lf + lg;
    let (margin, scale) = worst(&[
        (lf + lg - lsum, scale),
        (-(lcf - c.norm() * lf).abs(), scale),
        (domination, scale),
    ]);
    Ok(Outcome {
        margin,
        scale,
        instance: capture.then(|| {
            json!({
                "points": k,
                "lipschitz_f": lf,
                "lipschitz_g": lg,
                "lipschitz_sum": lsum,
            })
        }),
    })
}
