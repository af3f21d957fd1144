//! Python bindings: thin wrappers returning plain dicts, lists and JSON strings.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use drinfeld::algebra::{parse_poly, Field};
use drinfeld::carlitz::{self, Lattice};
use drinfeld::forms::GeneratorId;
use drinfeld::hecke::{self, PrimeP};
use drinfeld::spectral;
use drinfeld::suites::{self, RunConfig};

fn err(e: drinfeld::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn field(q: u32) -> PyResult<Arc<Field>> {
    RunConfig::q(q).and_then(|c| c.field()).map_err(err)
}

/// Coefficients {index: "num/den"} of a named generator below `prec`.
#[pyfunction]
#[pyo3(signature = (form, q=3, prec=30))]
fn expand(form: &str, q: u32, prec: usize) -> PyResult<BTreeMap<usize, String>> {
    let f = field(q)?;
    let s = GeneratorId::parse(&f, form).and_then(|id| id.build(&f, prec)).map_err(err)?;
    Ok(s.coeffs().iter().map(|(i, c)| (*i, c.to_text())).collect())
}

/// G_1..G_kmax for "period", "toy" or "torsion:<P>".
#[pyfunction]
#[pyo3(signature = (lattice, kmax, q=3))]
fn goss(lattice: &str, kmax: usize, q: u32) -> PyResult<Vec<String>> {
    let f = field(q)?;
    let lat = Lattice::parse(&f, lattice).map_err(err)?;
    let t = carlitz::goss_table_for(&lat, &f, kmax).map_err(err)?;
    Ok((1..=kmax).map(|i| t.get(i).to_text()).collect())
}

/// T_P ("T"), U_P ("U") or δ_P ("delta") applied to a named generator.
#[pyfunction]
#[pyo3(name = "hecke", signature = (form, p, op="T", q=3, prec=20))]
fn hecke_op(form: &str, p: &str, op: &str, q: u32, prec: usize) -> PyResult<BTreeMap<usize, String>> {
    let f = field(q)?;
    let id = GeneratorId::parse(&f, form).map_err(err)?;
    let pp = parse_poly(&f, p).and_then(|p| PrimeP::new(&p)).map_err(err)?;
    let big = pp.needed_precision(prec);
    let s = match op {
        "T" => id.build(&f, big).and_then(|s| hecke::op_t(&s, &pp, prec)),
        "U" => id.build(&f, big).and_then(|s| hecke::op_u(&s, &pp, prec)),
        "delta" => id.build(&f, prec).and_then(|s| hecke::op_delta_p(&s, &pp, prec)),
        _ => return Err(PyValueError::new_err(format!("unknown op {op}; use T, U or delta"))),
    }
    .map_err(err)?;
    Ok(s.coeffs().iter().map(|(i, c)| (*i, c.to_text())).collect())
}

/// HeckeReport as a JSON string.
#[pyfunction]
#[pyo3(signature = (p, k, l, cusp=false, q=3))]
fn matrix(p: &str, k: i64, l: u32, cusp: bool, q: u32) -> PyResult<String> {
    let f = field(q)?;
    let pp = parse_poly(&f, p).and_then(|p| PrimeP::new(&p)).map_err(err)?;
    let r = spectral::hecke_matrix(&f, &pp, k, l, cusp).map_err(err)?;
    Ok(serde_json::to_string(&r).expect("json"))
}

/// Run a suite; returns (all passed, JSON report). elapsed_ms is zeroed.
#[pyfunction]
#[pyo3(signature = (suite, q=3, prec=None, params=None, seed=0))]
fn verify(suite: &str, q: u32, prec: Option<usize>, params: Option<HashMap<String, String>>, seed: u64) -> PyResult<(bool, String)> {
    let mut cfg = RunConfig::q(q).map_err(err)?;
    cfg.prec = prec;
    cfg.seed = seed;
    for (k, v) in params.unwrap_or_default() {
        cfg = cfg.with(&k, &v);
    }
    let mut r = suites::run_suite(suite, &cfg).map_err(err)?;
    r.elapsed_ms = 0;
    Ok((r.passed(), r.to_json()))
}

#[pyfunction]
fn suite_names() -> Vec<&'static str> {
    suites::SUITES.to_vec()
}

#[pymodule]
fn drinfeld_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(expand, m)?)?;
    m.add_function(wrap_pyfunction!(goss, m)?)?;
    m.add_function(wrap_pyfunction!(hecke_op, m)?)?;
    m.add_function(wrap_pyfunction!(matrix, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(suite_names, m)?)?;
    Ok(())
}
