//! Python bindings: `import rde_lab_py`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rde_lab::assignment::{self, CostLaw, CostMatrix};
use rde_lab::operators;
use rde_lab::pwit::{run_coupling_ladder, PwitConfig};
use rde_lab::{beta, GridSpec, LogisticKernel, QuadratureRule, TailFunction};

const RULE: QuadratureRule = QuadratureRule::Simpson;

fn err(e: rde_lab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn law(name: &str) -> PyResult<CostLaw> {
    name.parse().map_err(err)
}

#[pyfunction]
fn cdf(x: f64) -> PyResult<f64> {
    LogisticKernel.cdf(x).map_err(err)
}

#[pyfunction]
fn tail(x: f64) -> PyResult<f64> {
    LogisticKernel.tail(x).map_err(err)
}

#[pyfunction]
fn density(x: f64) -> PyResult<f64> {
    LogisticKernel.density(x).map_err(err)
}

#[pyfunction]
fn quantile(p: f64) -> PyResult<f64> {
    LogisticKernel.quantile(p).map_err(err)
}

#[pyfunction]
fn tail_integral(x: f64) -> PyResult<f64> {
    LogisticKernel.tail_integral(x).map_err(err)
}

/// `n` Logistic draws from a seeded generator.
#[pyfunction]
#[pyo3(signature = (n, seed=0))]
fn sample_logistic(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|_| LogisticKernel.sample(&mut rng)).collect()
}

/// A tail function sampled on a symmetric grid.
#[pyclass(name = "Tail", module = "rde_lab_py", frozen)]
#[derive(Clone)]
struct PyTail {
    inner: TailFunction,
}

#[pymethods]
impl PyTail {
    /// The Logistic tail.
    #[staticmethod]
    #[pyo3(signature = (x_max=40.0, step=0.01))]
    fn logistic(x_max: f64, step: f64) -> PyResult<Self> {
        let grid = GridSpec::symmetric(x_max, step).map_err(err)?;
        Ok(Self {
            inner: TailFunction::logistic_tail(grid),
        })
    }

    /// The squared Logistic tail (lower envelope).
    #[staticmethod]
    #[pyo3(signature = (x_max=40.0, step=0.01))]
    fn logistic_squared(x_max: f64, step: f64) -> PyResult<Self> {
        let grid = GridSpec::symmetric(x_max, step).map_err(err)?;
        Ok(Self {
            inner: TailFunction::logistic_tail_squared(grid),
        })
    }

    /// Values on the grid `-x_max, -x_max + step, …, x_max`.
    #[staticmethod]
    fn from_values(x_max: f64, step: f64, values: Vec<f64>) -> PyResult<Self> {
        let grid = GridSpec::symmetric(x_max, step).map_err(err)?;
        let inner = TailFunction::new(
            grid,
            values,
            rde_lab::TailClosure::OneLeftLogisticSqueezeRight,
        )
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid().xs().collect()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn evaluate(&self, x: f64) -> f64 {
        self.inner.evaluate(x)
    }

    fn apply_t(&self) -> PyResult<Self> {
        operators::apply_t(&self.inner, RULE)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn apply_a(&self) -> PyResult<Self> {
        operators::apply_a(&self.inner, RULE)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn identity_residual(&self) -> PyResult<f64> {
        operators::identity_residual(&self.inner, RULE).map_err(err)
    }

    fn sup_distance_to_logistic_tail(&self) -> f64 {
        self.inner.sup_distance_to_logistic_tail()
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Tail(x_min={}, x_max={}, len={})",
            self.inner.x_min(),
            self.inner.x_max(),
            self.inner.values().len()
        )
    }
}

/// Iterates `T` from the lower envelope.
#[pyfunction]
#[pyo3(signature = (x_max=40.0, step=0.01, max_iters=100, tolerance=1e-6))]
fn iterate_t<'py>(
    py: Python<'py>,
    x_max: f64,
    step: f64,
    max_iters: usize,
    tolerance: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = GridSpec::symmetric(x_max, step).map_err(err)?;
    let traj = py
        .detach(|| {
            operators::iterate_to_fixed_point(
                TailFunction::logistic_tail_squared(grid),
                max_iters,
                tolerance,
                RULE,
            )
        })
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("converged_at", traj.converged_at)?;
    let dists: Vec<f64> = traj
        .iterates
        .iter()
        .map(|it| it.sup_distance_to_logistic_tail)
        .collect();
    out.set_item("sup_distance_to_logistic_tail", dists)?;
    out.set_item(
        "last",
        PyTail {
            inner: traj.last().function.clone(),
        },
    )?;
    Ok(out)
}

/// The beta recursion on `[0, 1]`.
#[pyfunction]
#[pyo3(signature = (n_max=50, stop_tolerance=1e-6, resolution=10_000))]
fn beta_recursion<'py>(
    py: Python<'py>,
    n_max: usize,
    stop_tolerance: f64,
    resolution: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let seq = py
        .detach(|| beta::run_recursion(n_max, stop_tolerance, resolution, RULE))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("beta_n_at_zero", seq.values_at_zero.clone())?;
    out.set_item("stopped_early", seq.stopped_early)?;
    out.set_item("last_curve", seq.last().values().to_vec())?;
    Ok(out)
}

/// Shared-innovation coupling; one dict per depth.
#[pyfunction]
#[pyo3(signature = (depths=vec![0, 2, 4, 6, 8, 10], replicates=10_000, seed=0x5eed, xi_cutoff=30.0))]
fn coupling<'py>(
    py: Python<'py>,
    depths: Vec<u32>,
    replicates: usize,
    seed: u64,
    xi_cutoff: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = PwitConfig {
        depth: depths.first().copied().unwrap_or(0),
        xi_cutoff,
        replicates,
        master_seed: seed,
        ..PwitConfig::default()
    };
    let (report, _) = py
        .detach(|| run_coupling_ladder(&config, &depths))
        .map_err(err)?;
    report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("depth", r.depth)?;
            d.set_item("replicates", r.replicates)?;
            d.set_item("mean_abs_root_gap", r.mean_abs_root_gap)?;
            d.set_item("gap_std_error", r.gap_std_error)?;
            d.set_item("rms_root_gap", r.rms_root_gap)?;
            d.set_item(
                "ks_statistic_min_vs_logistic",
                r.ks_statistic_min_vs_logistic,
            )?;
            d.set_item(
                "ks_statistic_root_vs_logistic",
                r.ks_statistic_root_vs_logistic,
            )?;
            d.set_item("truncation_flag_rate", r.truncation_flag_rate)?;
            Ok(d)
        })
        .collect()
}

/// Exact assignment: `(permutation, raw_cost, objective)`.
#[pyfunction]
#[pyo3(signature = (costs, law="uniform01"))]
fn solve_assignment(costs: Vec<Vec<f64>>, law: &str) -> PyResult<(Vec<usize>, f64, f64)> {
    let m = CostMatrix::from_rows(&costs, self::law(law)?).map_err(err)?;
    let r = assignment::solve_exact(&m);
    Ok((r.permutation, r.raw_cost, r.objective))
}

/// `(mean, std_error)` of the optimal objective.
#[pyfunction]
#[pyo3(signature = (n, law="exponential_mean_n", replicates=1000, seed=0))]
fn estimate_mean_objective(
    py: Python<'_>,
    n: usize,
    law: &str,
    replicates: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let law = self::law(law)?;
    let est = py
        .detach(|| assignment::estimate_mean_objective(n, law, replicates, seed))
        .map_err(err)?;
    Ok((est.mean, est.std_error))
}

#[pyfunction]
fn parisi_partial_sum(n: usize) -> f64 {
    assignment::parisi_partial_sum(n)
}

#[pymodule]
fn rde_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", rde_lab::VERSION)?;
    m.add_class::<PyTail>()?;
    m.add_function(wrap_pyfunction!(cdf, m)?)?;
    m.add_function(wrap_pyfunction!(tail, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(quantile, m)?)?;
    m.add_function(wrap_pyfunction!(tail_integral, m)?)?;
    m.add_function(wrap_pyfunction!(sample_logistic, m)?)?;
    m.add_function(wrap_pyfunction!(iterate_t, m)?)?;
    m.add_function(wrap_pyfunction!(beta_recursion, m)?)?;
    m.add_function(wrap_pyfunction!(coupling, m)?)?;
    m.add_function(wrap_pyfunction!(solve_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_mean_objective, m)?)?;
    m.add_function(wrap_pyfunction!(parisi_partial_sum, m)?)?;
    Ok(())
}
