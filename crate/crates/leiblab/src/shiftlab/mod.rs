//! Exact operator algebra on finitely supported two-sided sequences.
//!
//! Everything here is computed in Gaussian-rational arithmetic: no floats,
//! no tolerances. The generators are the bilateral shift `B`, the index
//! reflection `J`, and the half-line projection `P`; expression trees over
//! them act on [`FinVec`]s. Out of these come two counterexample machines:
//! a pair of partial isometries whose sum has an invertible `R*R` but a
//! non-invertible `RR*`, and the compression seminorm witness showing
//! `||P_perp U P|| = 0` while `||P_perp U^{-1} P|| = 1` for the shift `U`,
//! so that seminorm cannot satisfy the inverse inequality.

pub mod parse;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::{Error, Result};

/// Exact complex number with rational real and imaginary parts.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QC {
    pub re: BigRational,
    pub im: BigRational,
}

impl QC {
    pub fn zero() -> QC {
        QC {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> QC {
        QC {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    pub fn from_int(n: i64) -> QC {
        QC {
            re: BigRational::from_integer(BigInt::from(n)),
            im: BigRational::zero(),
        }
    }

    pub fn from_ratio(num: i64, den: i64) -> Result<QC> {
        if den == 0 {
            return Err(Error::Malformed("zero denominator in scalar".into()));
        }
        Ok(QC {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        })
    }

    pub fn imaginary(num: i64, den: i64) -> Result<QC> {
        if den == 0 {
            return Err(Error::Malformed("zero denominator in scalar".into()));
        }
        Ok(QC {
            re: BigRational::zero(),
            im: BigRational::new(BigInt::from(num), BigInt::from(den)),
        })
    }

    pub fn conj(&self) -> QC {
        QC {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn add(&self, other: &QC) -> QC {
        QC {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn sub(&self, other: &QC) -> QC {
        QC {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    pub fn mul(&self, other: &QC) -> QC {
        QC {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn neg(&self) -> QC {
        QC {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

impl fmt::Display for QC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "({}{}i)", self.re, self.im)
        } else {
            write!(f, "({}+{}i)", self.re, self.im)
        }
    }
}

/// Finitely supported sequence over the integers; stored coefficients are
/// never zero, so structural equality is exact vector equality.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FinVec {
    terms: BTreeMap<i64, QC>,
}

impl FinVec {
    pub fn zero() -> FinVec {
        FinVec::default()
    }

    pub fn basis(n: i64) -> FinVec {
        let mut terms = BTreeMap::new();
        terms.insert(n, QC::one());
        FinVec { terms }
    }

    pub fn set(&mut self, n: i64, c: QC) {
        if c.is_zero() {
            self.terms.remove(&n);
        } else {
            self.terms.insert(n, c);
        }
    }

    pub fn get(&self, n: i64) -> QC {
        self.terms.get(&n).cloned().unwrap_or_else(QC::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.terms.keys().copied()
    }

    pub fn add(&self, other: &FinVec) -> FinVec {
        let mut out = self.clone();
        for (&n, c) in &other.terms {
            let sum = out.get(n).add(c);
            out.set(n, sum);
        }
        out
    }

    pub fn scale(&self, c: &QC) -> FinVec {
        if c.is_zero() {
            return FinVec::zero();
        }
        FinVec {
            terms: self
                .terms
                .iter()
                .map(|(&n, x)| (n, x.mul(c)))
                .collect(),
        }
    }

    /// Inner product, conjugate-linear in self.
    pub fn inner(&self, other: &FinVec) -> QC {
        let mut acc = QC::zero();
        for (&n, c) in &self.terms {
            if let Some(d) = other.terms.get(&n) {
                acc = acc.add(&c.conj().mul(d));
            }
        }
        acc
    }

    /// Squared Euclidean norm, an exact nonnegative rational.
    pub fn norm_sqr(&self) -> BigRational {
        self.terms
            .values()
            .map(|c| c.norm_sqr())
            .fold(BigRational::zero(), |a, b| a + b)
    }
}

impl fmt::Display for FinVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (n, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if *c == QC::one() {
                write!(f, "e[{n}]")?;
            } else {
                write!(f, "{c} e[{n}]")?;
            }
        }
        Ok(())
    }
}

/// Expression tree over the shift generators. Adjoints are never stored:
/// [`ShiftOp::adjoint`] rewrites the tree through the structural rules, so
/// every tree in circulation is adjoint-free.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ShiftOp {
    /// e_n -> e_{n+1}
    B,
    /// e_n -> e_{n-1}
    Binv,
    /// e_n -> e_{-n}
    J,
    /// keeps e_n for n >= 0, kills the rest
    P,
    Id,
    Scale(QC, Box<ShiftOp>),
    Sum(Box<ShiftOp>, Box<ShiftOp>),
    /// Compose(x, y) applies y first.
    Compose(Box<ShiftOp>, Box<ShiftOp>),
}

impl ShiftOp {
    pub fn apply(&self, v: &FinVec) -> FinVec {
        match self {
            ShiftOp::B => remap(v, |n| Some(n + 1)),
            ShiftOp::Binv => remap(v, |n| Some(n - 1)),
            ShiftOp::J => remap(v, |n| Some(-n)),
            ShiftOp::P => remap(v, |n| if n >= 0 { Some(n) } else { None }),
            ShiftOp::Id => v.clone(),
            ShiftOp::Scale(c, x) => x.apply(v).scale(c),
            ShiftOp::Sum(x, y) => x.apply(v).add(&y.apply(v)),
            ShiftOp::Compose(x, y) => x.apply(&y.apply(v)),
        }
    }

    /// Structural adjoint: B <-> Binv, J and P fixed, products reversed,
    /// scalars conjugated.
    pub fn adjoint(&self) -> ShiftOp {
        match self {
            ShiftOp::B => ShiftOp::Binv,
            ShiftOp::Binv => ShiftOp::B,
            ShiftOp::J => ShiftOp::J,
            ShiftOp::P => ShiftOp::P,
            ShiftOp::Id => ShiftOp::Id,
            ShiftOp::Scale(c, x) => ShiftOp::Scale(c.conj(), Box::new(x.adjoint())),
            ShiftOp::Sum(x, y) => ShiftOp::Sum(Box::new(x.adjoint()), Box::new(y.adjoint())),
            ShiftOp::Compose(x, y) => {
                ShiftOp::Compose(Box::new(y.adjoint()), Box::new(x.adjoint()))
            }
        }
    }

    /// Bound on how far the absolute value of a support index can grow:
    /// the image of e_n is supported where |m| <= |n| + reach.
    pub fn reach(&self) -> u64 {
        match self {
            ShiftOp::B | ShiftOp::Binv => 1,
            ShiftOp::J | ShiftOp::P | ShiftOp::Id => 0,
            ShiftOp::Scale(_, x) => x.reach(),
            ShiftOp::Sum(x, y) => x.reach().max(y.reach()),
            ShiftOp::Compose(x, y) => x.reach() + y.reach(),
        }
    }

    pub fn compose(self, other: ShiftOp) -> ShiftOp {
        ShiftOp::Compose(Box::new(self), Box::new(other))
    }

    pub fn plus(self, other: ShiftOp) -> ShiftOp {
        ShiftOp::Sum(Box::new(self), Box::new(other))
    }

    pub fn minus(self, other: ShiftOp) -> ShiftOp {
        self.plus(ShiftOp::Scale(QC::from_int(-1), Box::new(other)))
    }

    pub fn scaled(self, c: QC) -> ShiftOp {
        ShiftOp::Scale(c, Box::new(self))
    }

    /// Product of a sequence, leftmost applied last.
    pub fn product(ops: &[ShiftOp]) -> ShiftOp {
        let mut it = ops.iter().rev().cloned();
        let first = it.next().unwrap_or(ShiftOp::Id);
        it.fold(first, |acc, op| op.compose(acc))
    }
}

fn remap(v: &FinVec, f: impl Fn(i64) -> Option<i64>) -> FinVec {
    let mut out = FinVec::zero();
    for (&n, c) in &v.terms {
        if let Some(m) = f(n) {
            let sum = out.get(m).add(c);
            out.set(m, sum);
        }
    }
    out
}

impl fmt::Display for ShiftOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atomic(op: &ShiftOp) -> bool {
            matches!(
                op,
                ShiftOp::B | ShiftOp::Binv | ShiftOp::J | ShiftOp::P | ShiftOp::Id
            )
        }
        fn wrap(op: &ShiftOp, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if atomic(op) {
                write!(f, "{op}")
            } else {
                write!(f, "({op})")
            }
        }
        match self {
            ShiftOp::B => write!(f, "B"),
            ShiftOp::Binv => write!(f, "B'"),
            ShiftOp::J => write!(f, "J"),
            ShiftOp::P => write!(f, "P"),
            ShiftOp::Id => write!(f, "I"),
            ShiftOp::Scale(c, x) => {
                write!(f, "{c}*")?;
                wrap(x, f)
            }
            ShiftOp::Sum(x, y) => write!(f, "{x} + {y}"),
            ShiftOp::Compose(x, y) => {
                wrap(x, f)?;
                write!(f, " ")?;
                wrap(y, f)
            }
        }
    }
}

/// The partial isometries S = J B P and T = B P J, their sum R, and the
/// unitaries V = B^{-1}, W = B that conjugate one into the other's adjoint.
#[derive(Clone, Debug)]
pub struct ShiftFamily {
    pub s: ShiftOp,
    pub t: ShiftOp,
    pub r: ShiftOp,
    pub v: ShiftOp,
    pub w: ShiftOp,
}

pub fn shift_family() -> ShiftFamily {
    let s = ShiftOp::product(&[ShiftOp::J, ShiftOp::B, ShiftOp::P]);
    let t = ShiftOp::product(&[ShiftOp::B, ShiftOp::P, ShiftOp::J]);
    let r = s.clone().plus(t.clone());
    ShiftFamily {
        s,
        t,
        r,
        v: ShiftOp::Binv,
        w: ShiftOp::B,
    }
}

/// 2x2 matrix of shift operators acting on pairs of vectors.
#[derive(Clone, Debug)]
pub struct BlockOp {
    pub entries: [[ShiftOp; 2]; 2],
}

impl BlockOp {
    pub fn new(entries: [[ShiftOp; 2]; 2]) -> BlockOp {
        BlockOp { entries }
    }

    pub fn scalar(op: ShiftOp) -> BlockOp {
        BlockOp {
            entries: [
                [op.clone(), ShiftOp::Scale(QC::zero(), Box::new(ShiftOp::Id))],
                [ShiftOp::Scale(QC::zero(), Box::new(ShiftOp::Id)), op],
            ],
        }
    }

    pub fn apply(&self, v: &(FinVec, FinVec)) -> (FinVec, FinVec) {
        (
            self.entries[0][0]
                .apply(&v.0)
                .add(&self.entries[0][1].apply(&v.1)),
            self.entries[1][0]
                .apply(&v.0)
                .add(&self.entries[1][1].apply(&v.1)),
        )
    }

    pub fn adjoint(&self) -> BlockOp {
        BlockOp {
            entries: [
                [self.entries[0][0].adjoint(), self.entries[1][0].adjoint()],
                [self.entries[0][1].adjoint(), self.entries[1][1].adjoint()],
            ],
        }
    }

    pub fn compose(&self, other: &BlockOp) -> BlockOp {
        let entry = |i: usize, j: usize| {
            self.entries[i][0]
                .clone()
                .compose(other.entries[0][j].clone())
                .plus(self.entries[i][1].clone().compose(other.entries[1][j].clone()))
        };
        BlockOp {
            entries: [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]],
        }
    }
}

/// The block unitary built from the family: the product
/// diag(V, 1) * [[T, 1-TT*], [-(1-T*T), T*]] * diag(W, 1), with the square
/// roots replaced by the projections they equal (verified separately).
pub fn block_unitary() -> BlockOp {
    let fam = shift_family();
    let t_star = fam.t.adjoint();
    let tt_star = fam.t.clone().compose(t_star.clone());
    let t_star_t = t_star.clone().compose(fam.t.clone());
    BlockOp::new([
        [
            ShiftOp::product(&[fam.v.clone(), fam.t.clone(), fam.w.clone()]),
            fam.v.clone().compose(ShiftOp::Id.minus(tt_star)),
        ],
        [
            ShiftOp::Id
                .minus(t_star_t)
                .compose(fam.w.clone())
                .scaled(QC::from_int(-1)),
            t_star,
        ],
    ])
}

/// One exact comparison: `pass` iff expected and got are structurally equal.
#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub check: String,
    pub index: i64,
    pub expected: String,
    pub got: String,
    pub pass: bool,
}

/// Window-indexed collection of exact checks.
#[derive(Clone, Debug, Serialize)]
pub struct ShiftReport {
    pub window: i64,
    pub entries: Vec<CheckEntry>,
}

impl ShiftReport {
    fn new(window: i64) -> ShiftReport {
        ShiftReport {
            window,
            entries: Vec::new(),
        }
    }

    fn push(&mut self, check: &str, index: i64, expected: &FinVec, got: &FinVec) {
        self.entries.push(CheckEntry {
            check: check.to_string(),
            index,
            expected: expected.to_string(),
            got: got.to_string(),
            pass: expected == got,
        });
    }

    fn push_pair(
        &mut self,
        check: &str,
        index: i64,
        expected: &(FinVec, FinVec),
        got: &(FinVec, FinVec),
    ) {
        self.entries.push(CheckEntry {
            check: check.to_string(),
            index,
            expected: format!("[{} ; {}]", expected.0, expected.1),
            got: format!("[{} ; {}]", got.0, got.1),
            pass: expected == got,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

fn window_indices(window: i64) -> impl Iterator<Item = i64> {
    -window..=window
}

/// Exact verification of the partial-isometry identities on basis vectors
/// |n| <= window: R*R fixes every e_n except doubling e_0, R* kills e_0,
/// S* = V T W, and S*S, T*T are idempotent.
pub fn verify_shift_identities(window: i64) -> Result<ShiftReport> {
    if window < 4 {
        return Err(Error::Config(format!(
            "window {window} too small; need at least 4"
        )));
    }
    let fam = shift_family();
    let mut report = ShiftReport::new(window);
    let r_star = fam.r.adjoint();
    let r_star_r = r_star.clone().compose(fam.r.clone());
    let s_star = fam.s.adjoint();
    let vtw = ShiftOp::product(&[fam.v.clone(), fam.t.clone(), fam.w.clone()]);
    let s_star_s = s_star.clone().compose(fam.s.clone());
    let t_star_t = fam.t.adjoint().compose(fam.t.clone());

    for n in window_indices(window) {
        let e = FinVec::basis(n);
        let expected = if n == 0 {
            e.scale(&QC::from_int(2))
        } else {
            e.clone()
        };
        report.push("r_star_r_fixes_basis", n, &expected, &r_star_r.apply(&e));
        report.push("s_star_equals_vtw", n, &s_star.apply(&e), &vtw.apply(&e));
        for (name, op) in [
            ("s_partial_isometry", &s_star_s),
            ("t_partial_isometry", &t_star_t),
        ] {
            let once = op.apply(&e);
            let twice = op.apply(&once);
            report.push(name, n, &once, &twice);
        }
    }
    report.push(
        "r_star_kills_e0",
        0,
        &FinVec::zero(),
        &r_star.apply(&FinVec::basis(0)),
    );
    Ok(report)
}

/// Exact verification that the block operator is unitary on the window,
/// after first confirming the projection identities T*T = J P J and
/// TT* = B P B' that legitimize dropping the square roots.
pub fn verify_block_unitary(window: i64) -> Result<ShiftReport> {
    if window < 4 {
        return Err(Error::Config(format!(
            "window {window} too small; need at least 4"
        )));
    }
    let fam = shift_family();
    let mut report = ShiftReport::new(window);
    let t_star = fam.t.adjoint();
    let t_star_t = t_star.clone().compose(fam.t.clone());
    let tt_star = fam.t.clone().compose(t_star.clone());
    let jpj = ShiftOp::product(&[ShiftOp::J, ShiftOp::P, ShiftOp::J]);
    let bpbinv = ShiftOp::product(&[ShiftOp::B, ShiftOp::P, ShiftOp::Binv]);

    for n in window_indices(window) {
        let e = FinVec::basis(n);
        report.push("t_star_t_is_jpj", n, &jpj.apply(&e), &t_star_t.apply(&e));
        report.push("t_t_star_is_bpbinv", n, &bpbinv.apply(&e), &tt_star.apply(&e));
        for (name, op) in [
            ("t_star_t_idempotent", &t_star_t),
            ("t_t_star_idempotent", &tt_star),
        ] {
            let once = op.apply(&e);
            report.push(name, n, &once, &op.apply(&once));
        }
        for (name, op) in [
            ("t_star_t_self_adjoint", &t_star_t),
            ("t_t_star_self_adjoint", &tt_star),
        ] {
            report.push(name, n, &op.apply(&e), &op.adjoint().apply(&e));
        }
        // complements stay idempotent
        let comp = ShiftOp::Id.minus(tt_star.clone());
        let once = comp.apply(&e);
        report.push("complement_idempotent", n, &once, &comp.apply(&once));
    }

    let u = block_unitary();
    let u_star = u.adjoint();
    let u_star_u = u_star.compose(&u);
    let u_u_star = u.compose(&u.adjoint());
    for n in window_indices(window) {
        for (tag, pair) in [
            (0i64, (FinVec::basis(n), FinVec::zero())),
            (1i64, (FinVec::zero(), FinVec::basis(n))),
        ] {
            report.push_pair(
                if tag == 0 {
                    "u_star_u_first_component"
                } else {
                    "u_star_u_second_component"
                },
                n,
                &pair,
                &u_star_u.apply(&pair),
            );
            report.push_pair(
                if tag == 0 {
                    "u_u_star_first_component"
                } else {
                    "u_u_star_second_component"
                },
                n,
                &pair,
                &u_u_star.apply(&pair),
            );
        }
    }
    Ok(report)
}

/// Result of compressing an operator to the corner P_perp . P and probing it
/// with window basis vectors. The squared lower bound is exact; combined
/// with a structural upper bound (compositions of contractions have norm
/// <= 1) it pins norms like 0 and 1 exactly.
#[derive(Clone, Debug)]
pub struct GammaWitness {
    pub vanishing: bool,
    pub lower_bound_sq: BigRational,
    pub witness_index: Option<i64>,
}

/// Evaluates P_perp * op * P on all |n| <= window.
pub fn gamma_seminorm_witness(op: &ShiftOp, window: i64) -> Result<GammaWitness> {
    if window < 2 {
        return Err(Error::Config(format!(
            "window {window} too small; need at least 2"
        )));
    }
    let p_perp = ShiftOp::Id.minus(ShiftOp::P);
    let compressed = ShiftOp::product(&[p_perp, op.clone(), ShiftOp::P]);
    let mut best = BigRational::zero();
    let mut witness = None;
    let mut vanishing = true;
    for n in window_indices(window) {
        let image = compressed.apply(&FinVec::basis(n));
        if image.is_zero() {
            continue;
        }
        vanishing = false;
        let nsq = image.norm_sqr();
        if nsq > best {
            best = nsq;
            witness = Some(n);
        }
    }
    Ok(GammaWitness {
        vanishing,
        lower_bound_sq: best,
        witness_index: witness,
    })
}

/// Verifies [P, op] = P op P_perp - P_perp op P exactly on the window, and
/// that the two summands land on opposite half-lines.
pub fn commutator_split_identity(op: &ShiftOp, window: i64) -> Result<ShiftReport> {
    if window < 2 {
        return Err(Error::Config(format!(
            "window {window} too small; need at least 2"
        )));
    }
    let p = ShiftOp::P;
    let p_perp = ShiftOp::Id.minus(p.clone());
    let commutator = p.clone().compose(op.clone()).minus(op.clone().compose(p.clone()));
    let upper = ShiftOp::product(&[p.clone(), op.clone(), p_perp.clone()]);
    let lower = ShiftOp::product(&[p_perp.clone(), op.clone(), p.clone()]);
    let split = upper.clone().minus(lower.clone());

    let mut report = ShiftReport::new(window);
    for n in window_indices(window) {
        let e = FinVec::basis(n);
        report.push("commutator_split", n, &commutator.apply(&e), &split.apply(&e));

        let up = upper.apply(&e);
        let down = lower.apply(&e);
        let up_ok = up.support().all(|m| m >= 0);
        let down_ok = down.support().all(|m| m < 0);
        report.entries.push(CheckEntry {
            check: "split_ranges_disjoint".into(),
            index: n,
            expected: "upper half-line / lower half-line".into(),
            got: format!("[{up} ; {down}]"),
            pass: up_ok && down_ok,
        });
    }
    Ok(report)
}
