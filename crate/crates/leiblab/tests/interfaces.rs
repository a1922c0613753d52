//! Round-trip checks for the text formats and the operator grammar: every
//! f64 must survive a write/read cycle bit for bit, and parsed expressions
//! must act on basis vectors exactly like hand-built operators.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::Rng;

use leiblab::condexp::ModuleElement;
use leiblab::harness::random;
use leiblab::io;
use leiblab::linalg::CMatrix;
use leiblab::ncprob::State;
use leiblab::shiftlab::parse::parse_shift_expr;
use leiblab::shiftlab::{shift_family, FinVec, ShiftOp, QC};
use leiblab::Error;

fn assert_bits_equal(a: &CMatrix, b: &CMatrix, context: &str) {
    assert_eq!(a.dim(), b.dim(), "{context}: dimension changed");
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            let (x, y) = (a[(i, j)], b[(i, j)]);
            assert_eq!(x.re.to_bits(), y.re.to_bits(), "{context}: re[{i}][{j}]");
            assert_eq!(x.im.to_bits(), y.im.to_bits(), "{context}: im[{i}][{j}]");
        }
    }
}

#[test]
fn matrix_text_roundtrip_is_bit_exact() {
    // values chosen to be hostile to shortest-representation printing and
    // to non-correctly-rounded parsing
    let awkward = CMatrix::from_rows(vec![
        vec![
            Complex64::new(0.1 + 0.2, 1.0 / 3.0),
            Complex64::new(6.666_666_666_666_667e-14, -0.0),
        ],
        vec![
            Complex64::new(f64::MIN_POSITIVE, 2.0f64.powi(-1074)),
            Complex64::new(9.007_199_254_740_993e15, -1.234_567_890_123_456_7e-300),
        ],
    ])
    .unwrap();
    let back = io::matrix_from_str(&io::matrix_to_string(&awkward)).unwrap();
    assert_bits_equal(&awkward, &back, "awkward matrix");

    for d in 1..=6usize {
        for t in 0..20u64 {
            let mut rng = random::trial_rng("iface-matrix", d as u64, t);
            let m = random::gaussian_matrix(d, &mut rng);
            let back = io::matrix_from_str(&io::matrix_to_string(&m)).unwrap();
            assert_bits_equal(&m, &back, "random matrix");
        }
    }
}

#[test]
fn state_text_roundtrip_preserves_density_and_flags() {
    let mut rng = random::trial_rng("iface-state", 0, 0);
    for s in [State::tracial(4), random::wishart_state(5, &mut rng).unwrap()] {
        let text = io::state_to_string(&s);
        let back = io::state_from_str(&text).unwrap();
        assert_bits_equal(s.rho(), back.rho(), "density");
        assert_eq!(s.is_faithful(), back.is_faithful());
        assert_eq!(s.is_tracial(), back.is_tracial());
    }
}

#[test]
fn state_text_rejects_flags_that_contradict_the_density() {
    let mut v = io::state_to_value(&State::tracial(3));
    v["tracial"] = serde_json::json!(false);
    let err = io::state_from_value(&v).unwrap_err();
    assert!(
        err.to_string().contains("tracial"),
        "error should name the lying flag: {err}"
    );
}

#[test]
fn module_element_roundtrip_keeps_block_structure() {
    let mut rng = random::trial_rng("iface-module", 0, 0);
    let a = ModuleElement::new(random::gaussian_matrix(6, &mut rng), 2, 3).unwrap();
    let back = io::module_element_from_value(&io::module_element_to_value(&a)).unwrap();
    assert_bits_equal(a.value(), back.value(), "module value");
    assert_eq!(back.n(), 2);
    assert_eq!(back.d(), 3);

    let mut v = io::module_element_to_value(&a);
    v["n"] = serde_json::json!(4);
    assert!(io::module_element_from_value(&v).is_err());
}

#[test]
fn lipschitz_encodings_are_kind_tagged() {
    let f = leiblab::ncprob::LipschitzFn::piecewise_linear(
        vec![-1.0, 0.0, 2.0],
        vec![0.5, -0.25, 1.75],
    )
    .unwrap();
    let v = io::lipschitz_to_value(&f);
    assert_eq!(v["kind"], "piecewise-linear");
    assert_eq!(v["breakpoints"][2], 2.0);
    let r = io::lipschitz_to_value(&leiblab::ncprob::LipschitzFn::Reciprocal { min_modulus: 0.3 });
    assert_eq!(r["kind"], "reciprocal");
}

#[test]
fn json_files_survive_a_disk_cycle() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let mut rng = random::trial_rng("iface-disk", 0, 0);
    let m = random::gaussian_matrix(4, &mut rng);
    let path = dir.join("iface-matrix.json");
    io::write_json(&path, &io::matrix_to_value(&m)).unwrap();
    let back = io::matrix_from_value(&io::read_json(&path).unwrap()).unwrap();
    assert_bits_equal(&m, &back, "disk matrix");

    let s = random::wishart_state(3, &mut rng).unwrap();
    let spath = dir.join("iface-state.json");
    io::write_json(&spath, &io::state_to_value(&s)).unwrap();
    let sback = io::state_from_value(&io::read_json(&spath).unwrap()).unwrap();
    assert_bits_equal(s.rho(), sback.rho(), "disk state");
}

fn agree_on_window(left: &ShiftOp, right: &ShiftOp, window: i64) -> bool {
    (-window..=window).all(|n| {
        let e = FinVec::basis(n);
        left.apply(&e) == right.apply(&e)
    })
}

#[test]
fn grammar_matches_hand_built_operators() {
    let fam = shift_family();
    let window = 12;
    for (text, op) in [
        ("J B P", fam.s.clone()),
        ("B P J", fam.t.clone()),
        ("J B P + B P J", fam.r.clone()),
        ("(J B P)^", fam.s.adjoint()),
        ("B^", ShiftOp::Binv),
        ("B B^ - I", ShiftOp::Id.minus(ShiftOp::Id)),
        (
            "3/4 (B + B')",
            ShiftOp::B
                .plus(ShiftOp::Binv)
                .scaled(QC::from_ratio(3, 4).unwrap()),
        ),
    ] {
        let parsed = parse_shift_expr(text).unwrap();
        assert!(
            agree_on_window(&parsed, &op, window),
            "'{text}' disagrees with the hand-built operator"
        );
    }
}

#[test]
fn grammar_display_reparses_to_the_same_action() {
    let window = 10;
    let mut rng = random::trial_rng("iface-grammar", 0, 0);
    let atoms = ["B", "B'", "J", "P", "I"];
    for _ in 0..50 {
        let a = atoms[rng.gen_range(0..atoms.len())];
        let b = atoms[rng.gen_range(0..atoms.len())];
        let c = atoms[rng.gen_range(0..atoms.len())];
        let k = rng.gen_range(-5i64..=5);
        let text = format!("{k} {a} {b} + ({c})^");
        let once = parse_shift_expr(&text).unwrap();
        let shown = once.to_string();
        let twice = parse_shift_expr(&shown).unwrap();
        assert!(
            agree_on_window(&once, &twice, window),
            "display '{shown}' of '{text}' changed the operator"
        );
        assert_eq!(shown, twice.to_string(), "display is not stable");
    }
}

#[test]
fn grammar_rejects_malformed_input() {
    for bad in ["", "B +", "Q", "1/0", "(B", "B )", "1/", "^B", "* B"] {
        match parse_shift_expr(bad) {
            Err(Error::Parse(_)) => {}
            other => panic!("'{bad}' should be a parse error, got {other:?}"),
        }
    }
}
