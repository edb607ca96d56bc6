//! Python bindings: a thin layer over the core crate that trades in
//! scalars and JSON strings, so the Python side needs no bespoke types.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use goodcurves::arith::{EpsilonSign, FieldDesc, Place};
use goodcurves::data::Dataset;
use goodcurves::localglobal::{TripleLocalVerdict, VerdictOutcome, REASON_AL_SIGN_PRODUCT};
use goodcurves::repcore::GroupSpec;
use goodcurves::Error;

fn to_py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_dataset(data: &str, certificates: Option<&str>) -> PyResult<Dataset> {
    let mut ds: Dataset = serde_json::from_str(data)
        .map_err(|e| PyValueError::new_err(format!("dataset: {e}")))?;
    if let Some(raw) = certificates {
        let extra: Dataset = serde_json::from_str(raw)
            .map_err(|e| PyValueError::new_err(format!("certificates: {e}")))?;
        ds.certificates.extend(extra.certificates);
    }
    ds.validate().map_err(to_py_err)?;
    Ok(ds)
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| PyRuntimeError::new_err(format!("serialization: {e}")))
}

fn parse_group(kind: &str, n: u64) -> PyResult<GroupSpec> {
    let g = match kind {
        "cyclic" => GroupSpec::Cyclic(n),
        "dihedral" => GroupSpec::Dihedral(n),
        other => {
            return Err(PyValueError::new_err(format!(
                "group kind must be \"cyclic\" or \"dihedral\", got {other:?}"
            )))
        }
    };
    g.validate().map_err(to_py_err)?;
    Ok(g)
}

fn parse_sign(value: i64) -> PyResult<EpsilonSign> {
    EpsilonSign::from_i64(value).map_err(to_py_err)
}

fn parse_finite_signs(signs: Vec<(String, i64)>) -> PyResult<Vec<(Place, EpsilonSign)>> {
    let mut out = Vec::with_capacity(signs.len());
    for (place, sign) in signs {
        let place = Place::parse(&place).map_err(to_py_err)?;
        if place.is_real() {
            return Err(PyValueError::new_err(format!(
                "{place} is a real place; pass finite places only"
            )));
        }
        out.push((place, parse_sign(sign)?));
    }
    Ok(out)
}

/// Full goodness report for one curve, as a JSON string.
#[pyfunction]
#[pyo3(signature = (data, label, certificates=None))]
fn check_curve(data: &str, label: &str, certificates: Option<&str>) -> PyResult<String> {
    let ds = parse_dataset(data, certificates)?;
    let report = goodcurves::goodness::check_curve(&ds, label, None).map_err(to_py_err)?;
    to_json(&report)
}

/// The bare goodness verdict for one curve: "yes", "no", or "unknown".
#[pyfunction]
#[pyo3(signature = (data, label, certificates=None))]
fn good_verdict(data: &str, label: &str, certificates: Option<&str>) -> PyResult<String> {
    let ds = parse_dataset(data, certificates)?;
    let report = goodcurves::goodness::check_curve(&ds, label, None).map_err(to_py_err)?;
    Ok(report.good.to_string())
}

/// Place-by-place verdict for one triple of newform orbits, as JSON.
#[pyfunction]
#[pyo3(signature = (data, first, second, third, certificates=None))]
fn check_triple(
    data: &str,
    first: &str,
    second: &str,
    third: &str,
    certificates: Option<&str>,
) -> PyResult<String> {
    let ds = parse_dataset(data, certificates)?;
    let labels = [first.to_string(), second.to_string(), third.to_string()];
    let verdict = goodcurves::goodness::check_triple(&ds, &labels, None).map_err(to_py_err)?;
    to_json(&verdict)
}

/// Reproduction report against the reference good list, as JSON.
#[pyfunction]
#[pyo3(signature = (data, certificates=None))]
fn reproduce_tables(data: &str, certificates: Option<&str>) -> PyResult<String> {
    let ds = parse_dataset(data, certificates)?;
    let report = goodcurves::goodness::reproduce_tables(&ds).map_err(to_py_err)?;
    to_json(&report)
}

/// Multiplicity of the trivial representation in a triple tensor product.
#[pyfunction]
fn trilinear_multiplicity(kind: &str, n: u64, a: &str, b: &str, c: &str) -> PyResult<u64> {
    let g = parse_group(kind, n)?;
    let a = goodcurves::repcore::parse_label(g, a).map_err(to_py_err)?;
    let b = goodcurves::repcore::parse_label(g, b).map_err(to_py_err)?;
    let c = goodcurves::repcore::parse_label(g, c).map_err(to_py_err)?;
    goodcurves::repcore::trilinear_multiplicity(g, &a, &b, &c).map_err(to_py_err)
}

/// Global root number over the rationals from finite local signs given as
/// (place, sign) pairs: returns (global_sign, l_value_forced_zero).
#[pyfunction]
fn global_root_number(signs: Vec<(String, i64)>) -> PyResult<(i64, bool)> {
    let verdicts: Vec<TripleLocalVerdict> = parse_finite_signs(signs)?
        .into_iter()
        .map(|(place, sign)| TripleLocalVerdict {
            place,
            outcome: match sign {
                EpsilonSign::Minus => VerdictOutcome::Vanishes {
                    reason: REASON_AL_SIGN_PRODUCT.to_string(),
                },
                EpsilonSign::Plus => VerdictOutcome::FormExists {
                    reason: REASON_AL_SIGN_PRODUCT.to_string(),
                },
            },
            epsilon: Some(sign),
        })
        .collect();
    let result =
        goodcurves::localglobal::global_root_number(&FieldDesc::rationals(), &verdicts)
            .map_err(to_py_err)?;
    Ok((result.global_sign.as_i64(), result.l_value_forced_zero))
}

/// Ramified places of the quaternion algebra supporting the local signs
/// over the rationals, or None when the parity rules one out.
#[pyfunction]
fn supporting_quaternion(signs: Vec<(String, i64)>) -> PyResult<Option<Vec<String>>> {
    let finite: BTreeMap<Place, EpsilonSign> =
        parse_finite_signs(signs)?.into_iter().collect();
    let algebra =
        goodcurves::localglobal::supporting_quaternion(&FieldDesc::rationals(), &finite)
            .map_err(to_py_err)?;
    Ok(algebra.map(|a| a.ramified.iter().map(Place::to_string).collect()))
}

/// Smallest real quadratic discriminant whose field splits all the primes.
#[pyfunction]
fn find_real_quadratic_split(primes: Vec<u64>) -> PyResult<u64> {
    let set = primes.into_iter().collect();
    goodcurves::arith::find_real_quadratic_split(&set).map_err(to_py_err)
}

/// Runs the vanishing pipeline for a triple at p and returns the
/// construction certificate as JSON.
#[pyfunction]
fn construct_certificate(
    data: &str,
    first: &str,
    second: &str,
    third: &str,
    p: u64,
) -> PyResult<String> {
    let ds = parse_dataset(data, None)?;
    let labels = [first.to_string(), second.to_string(), third.to_string()];
    let cert = goodcurves::construct::vanishing_pipeline(&ds, &labels, p).map_err(to_py_err)?;
    to_json(&cert)
}

/// Independently re-derives a construction certificate: returns
/// (ok, failures).
#[pyfunction]
fn verify_certificate(certificate: &str) -> PyResult<(bool, Vec<String>)> {
    let cert: goodcurves::construct::ConstructionCertificate =
        serde_json::from_str(certificate)
            .map_err(|e| PyValueError::new_err(format!("certificate: {e}")))?;
    let report = goodcurves::construct::verify_certificate(&cert);
    Ok((report.ok, report.failures))
}

#[pymodule]
fn goodcurves_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(check_curve, m)?)?;
    m.add_function(wrap_pyfunction!(good_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(check_triple, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_tables, m)?)?;
    m.add_function(wrap_pyfunction!(trilinear_multiplicity, m)?)?;
    m.add_function(wrap_pyfunction!(global_root_number, m)?)?;
    m.add_function(wrap_pyfunction!(supporting_quaternion, m)?)?;
    m.add_function(wrap_pyfunction!(find_real_quadratic_split, m)?)?;
    m.add_function(wrap_pyfunction!(construct_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(verify_certificate, m)?)?;
    m.add(
        "VANISHING_CITATION",
        goodcurves::goodness::VANISHING_CITATION,
    )?;
    m.add(
        "L_VALUE_CITATION",
        goodcurves::localglobal::L_VALUE_CITATION,
    )?;
    Ok(())
}
