use std::collections::BTreeSet;

use aspic::ground::{ground_rules, AtomTable};
use aspic::service::SessionRegistry;
use aspic::shell::{self, EntailmentMode, Outcome};
use aspic::solver::{self, GroundProgram};
use aspic::syntax;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn atoms_to_strings(atoms: &[syntax::Atom]) -> Vec<String> {
    atoms.iter().map(ToString::to_string).collect()
}

fn outcome_to_dict<'py>(py: Python<'py>, outcome: &Outcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("messages", &outcome.messages)?;
    d.set_item("warnings", &outcome.warnings)?;
    d.set_item("exit", outcome.exit)?;
    match &outcome.answer {
        None => d.set_item("answer", py.None())?,
        Some(a) => {
            let ad = PyDict::new(py);
            ad.set_item("verdict", a.verdict.to_string())?;
            ad.set_item("status", a.status.to_string())?;
            let models: Vec<Vec<String>> = a.models.iter().map(|m| atoms_to_strings(m)).collect();
            ad.set_item("models", models)?;
            ad.set_item("consolidated", a.consolidated.as_deref().map(atoms_to_strings))?;
            d.set_item("answer", ad)?;
        }
    }
    Ok(d)
}

/// An interactive session: the state, its atoms and the query options.
#[pyclass(name = "Session", module = "aspic_py")]
struct PySession {
    inner: shell::Session,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (base_dir=None))]
    fn new(base_dir: Option<std::path::PathBuf>) -> Self {
        let inner = match base_dir {
            Some(dir) => shell::Session::with_base_dir(dir),
            None => shell::Session::new(),
        };
        PySession { inner }
    }

    /// Runs one complete command; raises ValueError on errors.
    fn execute<'py>(&mut self, py: Python<'py>, command: &str) -> PyResult<Bound<'py, PyDict>> {
        let outcome = self.inner.execute_text(command).map_err(|e| PyValueError::new_err(e.to_string()))?;
        outcome_to_dict(py, &outcome)
    }

    /// Runs one input line and returns the rendered text, as the shell would.
    fn repl_step(&mut self, line: &str) -> String {
        self.inner.repl_step(line)
    }

    /// Replays a script and returns the transcript with prompts.
    fn transcript(&mut self, script: &str) -> String {
        shell::transcript(&mut self.inner, script)
    }

    fn state(&self) -> String {
        self.inner.dump_state()
    }

    fn digest<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let g = self.inner.state().digest();
        let d = PyDict::new(py);
        for (k, v) in [
            ("rules", g.rules),
            ("inputs", g.inputs),
            ("i_true", g.i_true),
            ("i_open", g.i_open),
            ("j_true", g.j_true),
            ("j_false", g.j_false),
        ] {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    #[getter]
    fn model_limit(&self) -> usize {
        self.inner.options().model_limit
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner.options().mode {
            EntailmentMode::Enumerate => "enumerate",
            EntailmentMode::Brave => "brave",
            EntailmentMode::Cautious => "cautious",
        }
    }

    #[getter]
    fn awaiting_more(&self) -> bool {
        self.inner.awaiting_more()
    }
}

/// Named sessions driven by JSON requests.
#[pyclass(name = "Service", module = "aspic_py")]
struct PyService {
    inner: SessionRegistry,
}

#[pymethods]
impl PyService {
    #[new]
    #[pyo3(signature = (base_dir=None))]
    fn new(base_dir: Option<std::path::PathBuf>) -> Self {
        let inner = match base_dir {
            Some(dir) => SessionRegistry::with_base_dir(dir),
            None => SessionRegistry::new(),
        };
        PyService { inner }
    }

    /// Handles one JSON request and returns the JSON response.
    fn handle(&self, py: Python<'_>, request: &str) -> String {
        py.detach(|| self.inner.handle_line(request))
    }
}

/// Stable models of a program text, as lists of atom strings. `limit == 0`
/// returns all models.
#[pyfunction]
#[pyo3(signature = (program, limit=0))]
fn solve<'py>(py: Python<'py>, program: &str, limit: usize) -> PyResult<Bound<'py, PyList>> {
    let (parsed, _) = syntax::parse_program(program).map_err(|e| PyValueError::new_err(e.to_string()))?;
    for rule in &parsed.rules {
        aspic::ground::check_safety(rule).map_err(|e| PyValueError::new_err(format!("{rule}: {e}")))?;
    }
    let ground = ground_rules(&parsed.rules, &BTreeSet::new());
    let mut table = AtomTable::new();
    let rules = ground.rules.iter().map(|r| table.ground_rule(r)).collect();
    let result = py.detach(|| solver::solve(&GroundProgram::new(rules), &[], limit));
    let models: Vec<Vec<String>> = result
        .models
        .iter()
        .map(|m| {
            let mut atoms: Vec<&syntax::Atom> = m.iter().map(|&a| table.resolve(a)).collect();
            atoms.sort();
            atoms.into_iter().map(ToString::to_string).collect()
        })
        .collect();
    PyList::new(py, models)
}

/// Parses a query and returns it in normalized text form.
#[pyfunction]
fn parse_query(text: &str) -> PyResult<String> {
    syntax::parse_query(text).map(|q| q.to_string()).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[pymodule]
fn aspic_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySession>()?;
    m.add_class::<PyService>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(parse_query, m)?)?;
    m.add_function(wrap_pyfunction!(version, m)?)?;
    Ok(())
}
