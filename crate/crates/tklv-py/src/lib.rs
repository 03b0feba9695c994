use std::collections::BTreeMap;

use num_bigint::BigInt;
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use tklv::{hecke, klv};

/// Exact Laurent polynomial in `v` with integer coefficients.
#[pyclass(name = "LaurentPoly", module = "tklv_py", frozen, eq)]
#[derive(Clone, PartialEq)]
struct PyLaurentPoly(tklv::LaurentPoly);

#[pymethods]
impl PyLaurentPoly {
    #[new]
    #[pyo3(signature = (text = "0"))]
    fn new(text: &str) -> PyResult<Self> {
        text.parse()
            .map(Self)
            .map_err(|e: tklv::LaurentError| PyValueError::new_err(e.to_string()))
    }

    /// Build from a `{exponent: coefficient}` mapping.
    #[staticmethod]
    fn from_terms(terms: BTreeMap<i64, BigInt>) -> Self {
        Self(tklv::LaurentPoly::from_terms(terms))
    }

    /// Parse a polynomial written in `u = v^2`.
    #[staticmethod]
    fn parse_u(text: &str) -> PyResult<Self> {
        tklv::LaurentPoly::parse_u(text)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn terms(&self) -> BTreeMap<i64, BigInt> {
        self.0.terms().map(|(e, c)| (e, c.clone())).collect()
    }

    fn coeff(&self, exponent: i64) -> BigInt {
        self.0.coeff(exponent)
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `v -> v^-1`.
    fn bar(&self) -> Self {
        Self(self.0.bar())
    }

    fn shift(&self, k: i64) -> Self {
        Self(self.0.shift(k))
    }

    fn to_u_string(&self) -> PyResult<String> {
        self.0
            .to_u_string()
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __add__(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    fn __sub__(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    fn __mul__(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    fn __neg__(&self) -> Self {
        Self(-self.0.clone())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("LaurentPoly('{}')", self.0)
    }
}

/// A validated extended block.
#[pyclass(name = "ExtBlock", module = "tklv_py", frozen)]
struct PyExtBlock(tklv::ExtBlock);

#[pymethods]
impl PyExtBlock {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        tklv::ExtBlock::from_json_str(text)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        tklv::ExtBlock::from_json_file(path)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        self.0.to_json_pretty()
    }

    #[getter]
    fn name(&self) -> &str {
        self.0.name()
    }

    fn __len__(&self) -> usize {
        self.0.size()
    }

    #[getter]
    fn kappa_count(&self) -> usize {
        self.0.kappa_count()
    }

    fn length(&self, gamma: usize) -> PyResult<u32> {
        self.check(gamma, 0)?;
        Ok(self.0.length(gamma))
    }

    fn tau(&self, gamma: usize) -> PyResult<Vec<usize>> {
        self.check(gamma, 0)?;
        Ok(self.0.tau(gamma).into_iter().collect())
    }

    fn type_code(&self, gamma: usize, kappa: usize) -> PyResult<String> {
        self.check(gamma, kappa)?;
        Ok(self.0.type_of(gamma, kappa).to_string())
    }

    fn __repr__(&self) -> String {
        format!(
            "ExtBlock('{}', {} parameters)",
            self.0.name(),
            self.0.size()
        )
    }
}

impl PyExtBlock {
    fn check(&self, gamma: usize, kappa: usize) -> PyResult<()> {
        if gamma >= self.0.size() || (kappa > 0 && kappa >= self.0.kappa_count()) {
            return Err(PyIndexError::new_err(format!(
                "no parameter {gamma} / generator {kappa}"
            )));
        }
        Ok(())
    }
}

/// Nonzero entries `{(gamma, delta): P}`. With `verify`, the eigen and
/// decomposition equations are checked first.
#[pyfunction]
#[pyo3(signature = (block, verify = false))]
fn compute(block: &PyExtBlock, verify: bool) -> PyResult<BTreeMap<(usize, usize), PyLaurentPoly>> {
    let b = &block.0;
    let t = klv::compute_all(b).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    if let Some((g, d, why)) = t.unresolved().into_iter().next() {
        return Err(PyRuntimeError::new_err(format!(
            "P({g},{d}) unresolved: {why}"
        )));
    }
    if verify {
        let rep = klv::verify(b, &t);
        if !rep.passed() {
            return Err(PyRuntimeError::new_err(format!(
                "verification failed: {:?}",
                rep
            )));
        }
    }
    Ok(t.nonzero_offdiagonal()
        .into_iter()
        .map(|(g, d, p)| ((g, d), PyLaurentPoly(p.clone())))
        .chain((0..b.size()).map(|g| ((g, g), PyLaurentPoly(tklv::LaurentPoly::one()))))
        .collect())
}

/// `{"passed": bool, "quadratic": [bool], "braid": [(k1, k2, m, bool)]}`.
#[pyfunction]
#[pyo3(signature = (block, braid = true))]
fn hecke_check<'py>(
    py: Python<'py>,
    block: &PyExtBlock,
    braid: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let (quad, br) = hecke::check_all(&block.0, braid);
    let d = PyDict::new(py);
    let passed = quad.iter().all(|q| q.passed) && br.iter().all(|r| r.passed);
    d.set_item("passed", passed)?;
    d.set_item(
        "quadratic",
        quad.iter().map(|q| q.passed).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "braid",
        br.iter()
            .map(|r| (r.kappas.0, r.kappas.1, r.order, r.passed))
            .collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// `(lower, higher, mu, arrow_kappas)`.
type Edge = (usize, usize, BigInt, Vec<usize>);

/// W-graph edges, each listed once.
#[pyfunction]
fn wgraph(block: &PyExtBlock) -> PyResult<Vec<Edge>> {
    let b = &block.0;
    let t = klv::compute_all(b).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let w = klv::wgraph(b, &t);
    let mut out = vec![];
    for v in &w.vertices {
        for e in v.edges.iter().filter(|e| e.to > v.id) {
            let mu: BigInt = e.mu.parse().expect("integer mu");
            out.push((v.id, e.to, mu, e.arrow.clone()));
        }
    }
    Ok(out)
}

#[pymodule]
fn tklv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLaurentPoly>()?;
    m.add_class::<PyExtBlock>()?;
    m.add_function(wrap_pyfunction!(compute, m)?)?;
    m.add_function(wrap_pyfunction!(hecke_check, m)?)?;
    m.add_function(wrap_pyfunction!(wgraph, m)?)?;
    Ok(())
}
