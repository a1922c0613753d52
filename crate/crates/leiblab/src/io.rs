//! Text formats for matrices, states, module elements, and reports.
//!
//! Everything is JSON built from one primitive: the matrix object
//! `{dim, re, im}` with separate real and imaginary `dim x dim` arrays.
//! Floats render in shortest round-trip decimal form, so every format
//! round-trips to full double precision. Readers validate and answer with a
//! diagnostic naming the violated bound rather than accepting bad data.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::condexp::ModuleElement;
use crate::linalg::{CMatrix, MatrixRepr};
use crate::ncprob::{LipschitzFn, State};
use crate::{Error, Result};

pub fn matrix_to_value(m: &CMatrix) -> Value {
    serde_json::to_value(MatrixRepr::from(m)).expect("matrix serialization cannot fail")
}

pub fn matrix_from_value(v: &Value) -> Result<CMatrix> {
    let repr: MatrixRepr = serde_json::from_value(v.clone())
        .map_err(|e| Error::Parse(format!("matrix object: {e}")))?;
    repr.to_matrix()
}

pub fn matrix_to_string(m: &CMatrix) -> String {
    serde_json::to_string_pretty(&MatrixRepr::from(m)).expect("matrix serialization cannot fail")
}

pub fn matrix_from_str(text: &str) -> Result<CMatrix> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("matrix text: {e}")))?;
    matrix_from_value(&v)
}

/// State format: the matrix object for rho plus the derived boolean flags.
/// Flags in the input are advisory; the density is re-validated and a flag
/// disagreeing with the recomputed value is rejected.
pub fn state_to_value(s: &State) -> Value {
    let mut v = matrix_to_value(s.rho());
    v["faithful"] = json!(s.is_faithful());
    v["tracial"] = json!(s.is_tracial());
    v
}

pub fn state_from_value(v: &Value) -> Result<State> {
    let rho = matrix_from_value(v)?;
    let state = State::new(rho)?;
    for (key, actual) in [
        ("faithful", state.is_faithful()),
        ("tracial", state.is_tracial()),
    ] {
        if let Some(flag) = v.get(key) {
            let claimed = flag
                .as_bool()
                .ok_or_else(|| Error::Parse(format!("state flag '{key}' must be a boolean")))?;
            if claimed != actual {
                return Err(Error::Malformed(format!(
                    "state flag '{key}' claims {claimed} but the density gives {actual}"
                )));
            }
        }
    }
    Ok(state)
}

pub fn state_to_string(s: &State) -> String {
    serde_json::to_string_pretty(&state_to_value(s)).expect("state serialization cannot fail")
}

pub fn state_from_str(text: &str) -> Result<State> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("state text: {e}")))?;
    state_from_value(&v)
}

/// Module element format: the matrix object for the full n*d value plus the
/// block structure (n, d).
pub fn module_element_to_value(a: &ModuleElement) -> Value {
    let mut v = matrix_to_value(a.value());
    v["n"] = json!(a.n());
    v["d"] = json!(a.d());
    v
}

pub fn module_element_from_value(v: &Value) -> Result<ModuleElement> {
    let value = matrix_from_value(v)?;
    let n = v
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Parse("module element needs an integer field 'n'".into()))?;
    let d = v
        .get("d")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Parse("module element needs an integer field 'd'".into()))?;
    ModuleElement::new(value, n as usize, d as usize)
}

pub fn lipschitz_to_value(f: &LipschitzFn) -> Value {
    match f {
        LipschitzFn::PiecewiseLinear {
            breakpoints,
            values,
        } => json!({
            "kind": "piecewise-linear",
            "breakpoints": breakpoints,
            "values": values,
        }),
        LipschitzFn::Reciprocal { min_modulus } => json!({
            "kind": "reciprocal",
            "min_modulus": min_modulus,
        }),
        LipschitzFn::Conjugation => json!({"kind": "conjugation"}),
        LipschitzFn::Affine { a, b } => json!({
            "kind": "affine",
            "a": [a.re, a.im],
            "b": [b.re, b.im],
        }),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Io(format!("serializing report: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
