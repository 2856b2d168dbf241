//! Python bindings for `wordfiber`.
//!
//! Exact probabilities come back as `fractions.Fraction`; structured reports
//! (scans, tower experiments) come back as JSON strings.

use num_bigint::BigInt;
use num_rational::BigRational;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wordfiber::families::{scan_family as scan, Family, ScanConfig};
use wordfiber::prob;
use wordfiber::tower::{randomly_free_experiment as free_experiment, TowerSpec};
use wordfiber::words::{count_reduced, enumerate_reduced as enumerate};
use wordfiber::{Budget, Error, FiniteGroup, GroupBackend};

create_exception!(
    wordfiber,
    BudgetExceeded,
    PyException,
    "An exhaustive computation exceeded its budget."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded { .. } => BudgetExceeded::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn fraction<'py>(py: Python<'py>, q: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    let (num, den): (BigInt, BigInt) = (q.numer().clone(), q.denom().clone());
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((num, den))
}

fn budget(value: Option<u64>) -> Budget {
    value.map(Budget).unwrap_or(Budget::DEFAULT)
}

/// A freely reduced word in `x1, x2, ...`.
#[pyclass(name = "Word", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyWord(wordfiber::Word);

#[pymethods]
impl PyWord {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        wordfiber::Word::parse(text).map(PyWord).map_err(to_py)
    }

    #[staticmethod]
    fn commutator(u: &PyWord, v: &PyWord) -> Self {
        PyWord(wordfiber::Word::commutator(&u.0, &v.0))
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    fn inverse(&self) -> Self {
        PyWord(self.0.invert())
    }

    fn concat(&self, other: &PyWord) -> Self {
        PyWord(self.0.concat(&other.0))
    }

    fn __mul__(&self, other: &PyWord) -> Self {
        self.concat(other)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __str__(&self) -> String {
        self.0.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Word('{}')", self.0.to_text())
    }
}

/// A finite group built from a spec such as `"S:4"` or `"SL:2:5 x C:3"`.
#[pyclass(name = "Group", frozen)]
struct PyGroup {
    group: FiniteGroup,
    budget: Budget,
}

#[pymethods]
impl PyGroup {
    #[new]
    #[pyo3(signature = (spec, budget=None))]
    fn new(spec: &str, budget: Option<u64>) -> PyResult<Self> {
        let budget = self::budget(budget);
        let group = FiniteGroup::from_spec(spec, budget).map_err(to_py)?;
        Ok(PyGroup { group, budget })
    }

    #[getter]
    fn order(&self) -> usize {
        self.group.order()
    }

    #[getter]
    fn spec(&self) -> String {
        self.group.backend().to_string()
    }

    fn elements(&self) -> Vec<String> {
        (0..self.group.order() as u32)
            .map(|i| self.group.format(i))
            .collect()
    }

    /// `(representative, size)` for every conjugacy class.
    fn classes(&self) -> PyResult<Vec<(String, u64)>> {
        let data = self.group.conjugacy_data(self.budget).map_err(to_py)?;
        Ok(data
            .classes()
            .iter()
            .map(|c| (self.group.format(c.representative), c.size))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Group('{}')", self.spec())
    }
}

/// Per-class fiber counts: list of dicts with `class_rep`, `class_size`,
/// `count`, `total`.
#[pyfunction]
fn exact_distribution<'py>(
    py: Python<'py>,
    group: &PyGroup,
    word: &PyWord,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let d = prob::exact_distribution(&group.group, &word.0, group.budget).map_err(to_py)?;
    d.classes
        .iter()
        .map(|c| {
            let row = PyDict::new(py);
            row.set_item("class_rep", &c.representative_text)?;
            row.set_item("class_size", c.class_size)?;
            row.set_item("count", c.count.clone())?;
            row.set_item("total", d.total.clone())?;
            Ok(row)
        })
        .collect()
}

#[pyfunction]
fn prob_identity<'py>(
    py: Python<'py>,
    group: &PyGroup,
    word: &PyWord,
) -> PyResult<Bound<'py, PyAny>> {
    let p = prob::prob_identity(&group.group, &word.0, group.budget).map_err(to_py)?;
    fraction(py, &p)
}

/// `(max fiber probability, witness class representative)`.
#[pyfunction]
fn norm_infinity<'py>(
    py: Python<'py>,
    group: &PyGroup,
    word: &PyWord,
) -> PyResult<(Bound<'py, PyAny>, String)> {
    let d = prob::exact_distribution(&group.group, &word.0, group.budget).map_err(to_py)?;
    let (norm, witness) = d.norm_infinity();
    Ok((fraction(py, &norm)?, witness.representative_text.clone()))
}

#[pyfunction]
fn count_power_word<'py>(py: Python<'py>, group: &PyGroup, k: u64) -> PyResult<Bound<'py, PyAny>> {
    let p = prob::count_power_word(&group.group, k, group.budget).map_err(to_py)?;
    fraction(py, &p)
}

#[pyfunction]
fn commuting_probability<'py>(py: Python<'py>, group: &PyGroup) -> PyResult<Bound<'py, PyAny>> {
    let p = prob::commuting_probability(&group.group, group.budget).map_err(to_py)?;
    fraction(py, &p)
}

/// Estimate report as a dict; `target` is element text, the identity by default.
#[pyfunction]
#[pyo3(signature = (group, word, trials, seed=0, target=None))]
fn monte_carlo<'py>(
    py: Python<'py>,
    group: &str,
    word: &PyWord,
    trials: u64,
    seed: u64,
    target: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let g = GroupBackend::parse(group).map_err(to_py)?;
    let target = target
        .map(|t| g.parse_element(t))
        .transpose()
        .map_err(to_py)?;
    let r = py
        .detach(|| prob::monte_carlo(&g, &word.0, target.as_ref(), trials, seed))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("group", r.group)?;
    out.set_item("word", r.word)?;
    out.set_item("target", r.target)?;
    out.set_item("trials", r.trials)?;
    out.set_item("hits", r.hits)?;
    out.set_item("estimate", r.estimate)?;
    out.set_item("wilson_lo", r.wilson_lo)?;
    out.set_item("wilson_hi", r.wilson_hi)?;
    out.set_item("seed", r.seed)?;
    Ok(out)
}

/// `(holds, witness)`; the witness is a list of element texts or `None`.
#[pyfunction]
fn check_coset_identity(
    group: &PyGroup,
    subgroup_gens: Vec<String>,
    reps: Vec<String>,
    word: &PyWord,
) -> PyResult<(bool, Option<Vec<String>>)> {
    let g = &group.group;
    let parse = |xs: &[String]| -> PyResult<Vec<u32>> {
        xs.iter()
            .map(|t| g.parse_element(t).map_err(to_py))
            .collect()
    };
    let cosets = g
        .subgroup_closure(&parse(&subgroup_gens)?, group.budget)
        .map_err(to_py)?;
    let check = prob::check_coset_identity(g, &cosets, &parse(&reps)?, &word.0, group.budget)
        .map_err(to_py)?;
    Ok((
        check.holds,
        check
            .witness
            .map(|t| t.iter().map(|&x| g.format(x)).collect()),
    ))
}

#[pyfunction]
fn generation_probability<'py>(
    py: Python<'py>,
    p: u64,
    n: u32,
    r: u32,
) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &prob::generation_probability(p, n, r).map_err(to_py)?)
}

#[pyfunction]
fn generation_bound<'py>(py: Python<'py>, p: u64, n: u32) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &prob::generation_bound(p, n).map_err(to_py)?)
}

/// Family scan report as a JSON string.
#[pyfunction]
#[pyo3(signature = (family, params, word, mc_trials=100_000, seed=0, budget=None))]
fn scan_family(
    py: Python<'_>,
    family: &str,
    params: Vec<u64>,
    word: &PyWord,
    mc_trials: u64,
    seed: u64,
    budget: Option<u64>,
) -> PyResult<String> {
    let family = Family::parse(family).map_err(to_py)?;
    let config = ScanConfig {
        budget: self::budget(budget),
        mc_trials,
        seed,
        ..ScanConfig::default()
    };
    let report = py
        .detach(|| scan(family, &params, &word.0, &config))
        .map_err(to_py)?;
    Ok(report.to_json().to_string())
}

/// Tower freeness experiment report as a JSON string.
#[pyfunction]
#[pyo3(signature = (p, levels, rank, max_len, trials, seed=0, budget=None))]
#[allow(clippy::too_many_arguments)]
fn randomly_free_experiment(
    py: Python<'_>,
    p: u64,
    levels: u32,
    rank: usize,
    max_len: usize,
    trials: u64,
    seed: u64,
    budget: Option<u64>,
) -> PyResult<String> {
    let spec = TowerSpec::new(p, levels, rank).map_err(to_py)?;
    let e = py
        .detach(|| free_experiment(spec, max_len, trials, seed, self::budget(budget)))
        .map_err(to_py)?;
    Ok(e.to_json().to_string())
}

/// Reduced words of length `1..=max_len` in length-lex order.
#[pyfunction]
#[pyo3(signature = (n, max_len, budget=None))]
fn enumerate_reduced(n: usize, max_len: usize, budget: Option<u64>) -> PyResult<Vec<PyWord>> {
    self::budget(budget)
        .check_u128(count_reduced(n, max_len))
        .map_err(to_py)?;
    Ok(enumerate(n, max_len).map(PyWord).collect())
}

/// Adds the classes and functions to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWord>()?;
    m.add_class::<PyGroup>()?;
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    m.add_function(wrap_pyfunction!(exact_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(prob_identity, m)?)?;
    m.add_function(wrap_pyfunction!(norm_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(count_power_word, m)?)?;
    m.add_function(wrap_pyfunction!(commuting_probability, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(check_coset_identity, m)?)?;
    m.add_function(wrap_pyfunction!(generation_probability, m)?)?;
    m.add_function(wrap_pyfunction!(generation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(scan_family, m)?)?;
    m.add_function(wrap_pyfunction!(randomly_free_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_reduced, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "wordfiber")]
fn wordfiber_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
