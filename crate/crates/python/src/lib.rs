//! Python bindings. Arrays cross the boundary as nested sequences, so
//! numpy arrays and plain lists are both accepted.

use ndarray::{Array1, Array2};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rbgr::io::FitConfig;
use rbgr::metrics::{self, EvalRules, GewekeConfig, HScoreMethod};
use rbgr::simgen::{self, PrecisionConfig, SimConfig, SimTruth};
use rbgr::summary::{self, AlphaRule, Cutoff, EdgeRule};
use rbgr::{Dataset, Error, PosteriorDraws};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::CorruptState(_) | Error::ImproperDensity(_) | Error::RejectionExhausted(_) | Error::Node { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>, what: &str) -> PyResult<Array2<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!("{what} rows have different lengths")));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, ncols), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn alpha_rule(name: &str) -> PyResult<AlphaRule> {
    match name {
        "min" => Ok(AlphaRule::Min),
        "max" => Ok(AlphaRule::Max),
        _ => Err(PyValueError::new_err(format!("unknown rule {name:?}; use 'min' or 'max'"))),
    }
}

fn edge_rule(name: &str) -> PyResult<EdgeRule> {
    match name {
        "min" => Ok(EdgeRule::Min),
        "max" => Ok(EdgeRule::Max),
        _ => Err(PyValueError::new_err(format!("unknown rule {name:?}; use 'min' or 'max'"))),
    }
}

/// Exact sampler for a density whose log is piecewise quadratic.
#[pyclass(name = "PiecewiseDensity")]
struct PyPiecewise {
    inner: rbgr::PiecewiseDensity,
}

#[pymethods]
impl PyPiecewise {
    /// `pieces`: `(side, a1, a2, a3, bound)` with side `"lower"` (active
    /// above `bound`) or `"upper"` (active below). `prior`: `("normal",
    /// mean, var)` or `("uniform", lo, hi)`.
    #[new]
    fn new(pieces: Vec<(String, f64, f64, f64, f64)>, prior: (String, f64, f64)) -> PyResult<Self> {
        let pieces = pieces
            .into_iter()
            .map(|(side, a1, a2, a3, b)| match side.as_str() {
                "lower" => Ok(rbgr::QuadraticPiece::lower(a1, a2, a3, b)),
                "upper" => Ok(rbgr::QuadraticPiece::upper(a1, a2, a3, b)),
                _ => Err(PyValueError::new_err(format!("unknown side {side:?}"))),
            })
            .collect::<PyResult<Vec<_>>>()?;
        let kernel = match prior.0.as_str() {
            "normal" => rbgr::PriorKernel::normal(prior.1, prior.2),
            "uniform" => rbgr::PriorKernel::uniform(prior.1, prior.2),
            other => return Err(PyValueError::new_err(format!("unknown prior {other:?}"))),
        };
        let inner = rbgr::PiecewiseDensity::build(&pieces, &kernel).map_err(py_err)?;
        Ok(PyPiecewise { inner })
    }

    #[getter]
    fn log_norm(&self) -> f64 {
        self.inner.log_norm()
    }

    fn logpdf(&self, x: f64) -> f64 {
        self.inner.logpdf(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights()
    }

    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.inner.sample(&mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!("PiecewiseDensity(intervals={})", self.inner.intervals().len())
    }
}

/// Posterior draws of every node regression.
#[pyclass(name = "Fit")]
struct PyFit {
    draws: Vec<PosteriorDraws>,
}

impl PyFit {
    fn symmetric(&self, rule: &str) -> PyResult<summary::SymmetricAlpha> {
        let pip = summary::pip_alpha(&self.draws).map_err(py_err)?;
        let ahat = summary::alpha_hat(&self.draws).map_err(py_err)?;
        summary::symmetrize_alpha(&pip, &ahat, alpha_rule(rule)?).map_err(py_err)
    }
}

fn tensor(a: &ndarray::Array3<f64>) -> Vec<Vec<Vec<f64>>> {
    a.outer_iter().map(|m| rows(&m.to_owned())).collect()
}

#[pymethods]
impl PyFit {
    #[getter]
    fn p(&self) -> usize {
        self.draws.len()
    }

    #[getter]
    fn q(&self) -> usize {
        self.draws[0].q()
    }

    #[getter]
    fn num_draws(&self) -> usize {
        self.draws[0].len()
    }

    /// Directed posterior inclusion probabilities, `p x p x q`.
    fn pip(&self) -> PyResult<Vec<Vec<Vec<f64>>>> {
        Ok(tensor(&summary::pip_alpha(&self.draws).map_err(py_err)?))
    }

    /// Directed posterior-mean coefficients over slab draws, `p x p x q`.
    fn alpha_hat(&self) -> PyResult<Vec<Vec<Vec<f64>>>> {
        Ok(tensor(&summary::alpha_hat(&self.draws).map_err(py_err)?))
    }

    /// Scalar traces of one node's chain.
    fn trace<'py>(&self, py: Python<'py>, node: usize) -> PyResult<Bound<'py, PyDict>> {
        let d = self
            .draws
            .get(node)
            .ok_or_else(|| PyValueError::new_err(format!("node {node} out of range")))?;
        let out = PyDict::new(py);
        out.set_item("iteration", d.iterations.clone())?;
        out.set_item("t", d.t.clone())?;
        out.set_item("sigma2", d.sigma2.clone())?;
        out.set_item("loglik", d.loglik.clone())?;
        out.set_item("unit_scale_frac", d.unit_scale_frac.clone())?;
        Ok(out)
    }

    /// Covariate-level edges with symmetrized PIP above `c0`, or at or above
    /// the Bayesian FDR cutoff when `fdr` is given.
    #[pyo3(signature = (c0 = 0.5, alpha_rule = "min", fdr = None))]
    fn population_edges<'py>(
        &self,
        py: Python<'py>,
        c0: f64,
        alpha_rule: &str,
        fdr: Option<f64>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let sym = self.symmetric(alpha_rule)?;
        let cutoff = match fdr {
            Some(level) => {
                let (p, _, q) = sym.pip.dim();
                let pips: Vec<f64> = (0..p)
                    .flat_map(|j| ((j + 1)..p).flat_map(move |k| (0..q).map(move |h| (j, k, h))))
                    .map(|idx| sym.pip[idx])
                    .collect();
                Cutoff::AtLeast(metrics::fdr_cutoff(&pips, level))
            }
            None => Cutoff::Above(c0),
        };
        let mut out = Vec::new();
        for net in summary::population_network(&sym, cutoff) {
            for e in net.edges {
                let d = PyDict::new(py);
                d.set_item("node_a", e.node_a)?;
                d.set_item("node_b", e.node_b)?;
                d.set_item("covariate", e.covariate)?;
                d.set_item("alpha_hat", e.alpha_hat)?;
                d.set_item("pip", e.pip)?;
                d.set_item("sign", e.sign)?;
                out.push(d);
            }
        }
        Ok(out)
    }

    /// Individual network at covariate vector `x`.
    #[pyo3(signature = (x, c1 = 0.5, alpha_rule = "min", edge_rule = "max"))]
    fn individual_network<'py>(
        &self,
        py: Python<'py>,
        x: Vec<f64>,
        c1: f64,
        alpha_rule: &str,
        edge_rule: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let sym = self.symmetric(alpha_rule)?;
        let probs = summary::epp_edge(&self.draws, &sym, Array1::from(x).view()).map_err(py_err)?;
        let net = summary::individual_network(&probs, self::edge_rule(edge_rule)?, Cutoff::Above(c1)).map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("epp", rows(&net.epp))?;
        out.set_item("sign", net.sign.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<Vec<i8>>>())?;
        out.set_item("edges", net.edges.iter().map(|e| (e.node_a, e.node_b, e.epp, e.sign)).collect::<Vec<_>>())?;
        Ok(out)
    }

    /// Geweke z-scores of every coefficient chain.
    fn geweke<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let suite = metrics::geweke_suite(&self.draws, &GewekeConfig::default()).map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("converged", suite.converged)?;
        out.set_item(
            "entries",
            suite.entries.iter().map(|e| (e.j, e.k, e.h, e.z, e.adjusted_p, e.pass)).collect::<Vec<_>>(),
        )?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("Fit(p={}, q={}, draws={})", self.p(), self.q(), self.num_draws())
    }
}

/// Run the node-wise samplers. `config` is an optional JSON document with
/// `hyper`, `chain` and `options` sections; explicit arguments override
/// its chain settings.
#[pyfunction]
#[pyo3(signature = (y, x, iters = None, burnin = None, thin = None, seed = None, threads = None, center = false, update_scales = None, config = None))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    y: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    iters: Option<usize>,
    burnin: Option<usize>,
    thin: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    center: bool,
    update_scales: Option<bool>,
    config: Option<&str>,
) -> PyResult<PyFit> {
    let mut cfg: FitConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => FitConfig::default(),
    };
    cfg.chain.iters = iters.unwrap_or(cfg.chain.iters);
    cfg.chain.burnin = burnin.unwrap_or(cfg.chain.burnin);
    cfg.chain.thin = thin.unwrap_or(cfg.chain.thin);
    cfg.chain.seed = seed.unwrap_or(cfg.chain.seed);
    cfg.options.update_scales = update_scales.unwrap_or(cfg.options.update_scales);
    cfg.validate().map_err(py_err)?;
    let data = Dataset::new(matrix(y, "y")?, matrix(x, "x")?, center).map_err(py_err)?;
    let draws = py
        .detach(|| rbgr::run_all(&data, &cfg.hyper, &cfg.chain, &cfg.options, threads))
        .map_err(py_err)?;
    Ok(PyFit { draws })
}

/// A synthetic dataset with its generating truth.
#[pyclass(name = "Simulation")]
struct PySimulation {
    truth: SimTruth,
}

#[pymethods]
impl PySimulation {
    #[getter]
    fn y(&self) -> Vec<Vec<f64>> {
        rows(&self.truth.y)
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        rows(&self.truth.x)
    }

    #[getter]
    fn scales(&self) -> Vec<Vec<f64>> {
        rows(&self.truth.scales)
    }

    /// Pairs `(j, k)`, `j < k`, with a nonzero true coefficient.
    #[getter]
    fn support(&self) -> Vec<(usize, usize)> {
        let s = &self.truth.spec.support;
        let p = s.nrows();
        (0..p).flat_map(|j| ((j + 1)..p).map(move |k| (j, k))).filter(|&(j, k)| s[[j, k]]).collect()
    }

    #[getter]
    fn rejections(&self) -> usize {
        self.truth.spec.rejections
    }

    /// Selection metrics of a fit against this truth.
    #[pyo3(signature = (fit, c0 = 0.5, c1 = 0.5))]
    fn evaluate<'py>(&self, py: Python<'py>, fit: &PyFit, c0: f64, c1: f64) -> PyResult<Bound<'py, PyDict>> {
        let rules = EvalRules { c0: Cutoff::Above(c0), c1: Cutoff::Above(c1), ..EvalRules::default() };
        let ev = metrics::evaluate(&fit.draws, &self.truth, &rules).map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("covariate_tpr", ev.covariate.tpr())?;
        out.set_item("covariate_tnr", ev.covariate.tnr())?;
        out.set_item("covariate_mcc", ev.covariate_mcc)?;
        out.set_item("covariate_auc", ev.covariate_auc)?;
        out.set_item("edge_tpr", ev.edge.tpr())?;
        out.set_item("edge_tnr", ev.edge.tnr())?;
        out.set_item("edge_mcc", ev.edge_mcc)?;
        out.set_item("edge_auc", ev.edge_auc)?;
        out.set_item("edge_pauc", ev.edge_pauc)?;
        out.set_item("sign_mcc", ev.sign.defined.then_some(ev.sign.mcc))?;
        Ok(out)
    }
}

#[pyfunction]
#[pyo3(signature = (n = 150, p = 10, q = 3, pi = 0.5, sparsity = 0.07, seed = 1))]
fn simulate(py: Python<'_>, n: usize, p: usize, q: usize, pi: f64, sparsity: f64, seed: u64) -> PyResult<PySimulation> {
    let cfg = SimConfig { n, p, q, pi, precision: PrecisionConfig { sparsity, ..PrecisionConfig::default() }, ..SimConfig::default() };
    let truth = py
        .detach(|| simgen::gen_dataset(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)))
        .map_err(py_err)?;
    Ok(PySimulation { truth })
}

/// `2 Phi(log(1 - p))` of a Lilliefors-type normality test.
#[pyfunction]
#[pyo3(signature = (sample, method = "calibrated"))]
fn h_score(sample: Vec<f64>, method: &str) -> PyResult<f64> {
    let method = match method {
        "calibrated" => HScoreMethod::Calibrated,
        "asymptotic" => HScoreMethod::Asymptotic,
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    metrics::h_score(&sample, method).map_err(py_err)
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    Ok(metrics::roc(&scores, &labels).map_err(py_err)?.auc)
}

#[pyfunction]
fn mcc(selected: Vec<bool>, truth: Vec<bool>) -> PyResult<f64> {
    Ok(metrics::mcc(&metrics::confusion(&selected, &truth).map_err(py_err)?))
}

/// Largest probability cutoff whose implied Bayesian FDR stays below `alpha`.
#[pyfunction]
fn fdr_cutoff(probs: Vec<f64>, alpha: f64) -> f64 {
    metrics::fdr_cutoff(&probs, alpha)
}

#[pymodule]
fn rbgr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPiecewise>()?;
    m.add_class::<PyFit>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(h_score, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(mcc, m)?)?;
    m.add_function(wrap_pyfunction!(fdr_cutoff, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
