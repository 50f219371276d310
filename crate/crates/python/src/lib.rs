//! Python bindings: the main scene/pmf types and the bound, simulation,
//! closed-form, optimization, and verification entry points.

use ndsense::fock::{ModeLayout, ModePattern, PhotonPmf};
use ndsense::optimize::EnergyConstraint;
use ndsense::oracle::{make_nds_state, random_input};
use ndsense::phase::TrianglePoint;
use ndsense::scene::{CostFunction, Image, SceneFile, SceneSpec};
use ndsense::verify::VerifyConfig;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(err: ndsense::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// `(leak pattern, lambda, conditional priors, |overlap|)` rows.
type SubEnsembleRow = (Vec<u32>, f64, Vec<f64>, f64);
/// `((p0, p1, p2), value)` pairs.
type TriangleMinimum = ((f64, f64, f64), f64);

/// A discrimination scene: mode layout, images, priors, and cost function.
#[pyclass(frozen, module = "_ndsense")]
struct Scene {
    inner: SceneFile,
}

#[pymethods]
impl Scene {
    /// Parse the scene JSON schema.
    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(Self {
            inner: SceneFile::from_json(json).map_err(value_err)?,
        })
    }

    /// Built-in 0-vs-pi phase discrimination at transmittance `eta`.
    #[staticmethod]
    fn phase01pi(eta: f64) -> PyResult<Self> {
        let scene = ndsense::phase::scene(eta).map_err(value_err)?;
        Ok(Self {
            inner: SceneFile::new(scene, Some(CostFunction::error_probability(2)))
                .map_err(value_err)?,
        })
    }

    /// Built-in transmittance discrimination (`eta1` vs `eta2`, no phase).
    #[staticmethod]
    fn reading(eta1: f64, eta2: f64) -> PyResult<Self> {
        let scene = SceneSpec::new(
            ModeLayout::single_pixel(1).map_err(value_err)?,
            vec![
                Image::uniform(1, eta1, 0.0).map_err(value_err)?,
                Image::uniform(1, eta2, 0.0).map_err(value_err)?,
            ],
            vec![0.5, 0.5],
        )
        .map_err(value_err)?;
        Ok(Self {
            inner: SceneFile::new(scene, Some(CostFunction::error_probability(2)))
                .map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn hypothesis_count(&self) -> usize {
        self.inner.scene.hypothesis_count()
    }

    #[getter]
    fn pixel_count(&self) -> usize {
        self.inner.scene.layout().pixel_count()
    }

    #[getter]
    fn mode_count(&self) -> usize {
        self.inner.scene.layout().total_modes()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scene(images={}, pixels={}, modes={})",
            self.inner.scene.hypothesis_count(),
            self.inner.scene.layout().pixel_count(),
            self.inner.scene.layout().total_modes()
        )
    }
}

/// A finite-support photon-number distribution over the signal modes.
#[pyclass(frozen, module = "_ndsense")]
struct Pmf {
    inner: PhotonPmf,
}

#[pymethods]
impl Pmf {
    /// Build from `[(pattern, probability), ...]` entries.
    #[new]
    fn new(entries: Vec<(Vec<u32>, f64)>) -> PyResult<Self> {
        let inner = PhotonPmf::new(
            entries
                .into_iter()
                .map(|(pattern, p)| (ModePattern::new(pattern), p))
                .collect(),
        )
        .map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Single-mode pmf: `probs[k]` is the probability of `k` photons.
    #[staticmethod]
    fn single_mode(probs: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: PhotonPmf::single_mode(&probs).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(Self {
            inner: PhotonPmf::from_json(json).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Entries in canonical pattern order.
    fn entries(&self) -> Vec<(Vec<u32>, f64)> {
        self.inner
            .support()
            .iter()
            .map(|(n, p)| (n.counts().to_vec(), *p))
            .collect()
    }

    #[getter]
    fn mean_energy(&self) -> f64 {
        ndsense::fock::mean_energy(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Pmf({} patterns)", self.inner.support().len())
    }
}

/// Minimum error probability of the NDS state with this pmf; also the lower
/// bound for any pure input with the same pmf.
#[pyfunction]
fn nds_bound_binary(scene: &Scene, pmf: &Pmf) -> PyResult<f64> {
    ndsense::gram::nds_bound_binary(&scene.inner.scene, &pmf.inner).map_err(value_err)
}

/// Brute-force cross-check: build the NDS state, propagate both hypotheses,
/// and apply the Helstrom formula to the explicit density matrices.
#[pyfunction]
fn oracle_min_error_nds(scene: &Scene, pmf: &Pmf) -> PyResult<f64> {
    let state = make_nds_state(scene.inner.scene.layout(), &pmf.inner).map_err(value_err)?;
    ndsense::oracle::oracle_min_error(&state, &scene.inner.scene).map_err(value_err)
}

/// Error probability of a seeded random pure input (random phases and idler
/// vectors) with the given pmf. Never beats `nds_bound_binary`.
#[pyfunction]
fn oracle_min_error_random(scene: &Scene, pmf: &Pmf, seed: u64, idler_dim: usize) -> PyResult<f64> {
    let state = random_input(seed, scene.inner.scene.layout(), &pmf.inner, idler_dim)
        .map_err(value_err)?;
    ndsense::oracle::oracle_min_error(&state, &scene.inner.scene).map_err(value_err)
}

/// Per-leak sub-ensemble table: `(leak, lambda, cond_priors, overlap_abs)`.
#[pyfunction]
fn sub_ensembles(scene: &Scene, pmf: &Pmf) -> PyResult<Vec<SubEnsembleRow>> {
    Ok(ndsense::gram::sub_ensembles(&scene.inner.scene, &pmf.inner)
        .map_err(value_err)?
        .into_iter()
        .map(|s| {
            let overlap = s.normalized_overlap(0, 1).norm();
            (
                s.leak.counts().to_vec(),
                s.lambda,
                s.cond_priors,
                overlap,
            )
        })
        .collect())
}

/// Closed-form NDS error probability of the 0-vs-pi example.
#[pyfunction]
fn nds_pe_closed_form(p0: f64, p1: f64, p2: f64, eta: f64) -> PyResult<f64> {
    let pt = TrianglePoint::new(p0, p1, p2).map_err(value_err)?;
    Ok(ndsense::phase::nds_pe_closed_form(&pt, eta))
}

/// The interior stationary point of the closed form, as `(p0, p1, p2)`.
#[pyfunction]
fn interior_extremum(eta: f64) -> PyResult<(f64, f64, f64)> {
    let pt = ndsense::phase::interior_extremum(eta).map_err(value_err)?;
    Ok((pt.p0(), pt.p1(), pt.p2()))
}

/// Error probability of the signal-only probe at a triangle point.
#[pyfunction]
fn signal_only_pe(p0: f64, p1: f64, p2: f64, eta: f64) -> PyResult<f64> {
    let pt = TrianglePoint::new(p0, p1, p2).map_err(value_err)?;
    ndsense::phase::signal_only_pe(&pt, eta).map_err(value_err)
}

/// The two boundary local minima as `((p0, p1, p2), value)` pairs.
#[pyfunction]
fn boundary_local_minima(eta: f64) -> PyResult<Vec<TriangleMinimum>> {
    Ok(ndsense::phase::boundary_local_minima(eta)
        .map_err(value_err)?
        .into_iter()
        .map(|(pt, value)| ((pt.p0(), pt.p1(), pt.p2()), value))
        .collect())
}

/// The triangle-sweep CSV (`p0,p1,pe_nds,pe_signal_only,difference`).
#[pyfunction]
fn triangle_csv(eta: f64, grid_step: f64) -> PyResult<String> {
    let mut buf = Vec::new();
    ndsense::phase::write_triangle_csv(&mut buf, eta, grid_step).map_err(value_err)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Result of [`minimize_pmf`].
#[pyclass(frozen, module = "_ndsense")]
struct OptimizeResult {
    #[pyo3(get)]
    best_pmf: Vec<(Vec<u32>, f64)>,
    #[pyo3(get)]
    best_cost: f64,
    #[pyo3(get)]
    grid_cost: f64,
    #[pyo3(get)]
    evaluations: u64,
    #[pyo3(get)]
    tie_count: usize,
}

#[pymethods]
impl OptimizeResult {
    fn __repr__(&self) -> String {
        format!(
            "OptimizeResult(best_cost={}, evaluations={})",
            self.best_cost, self.evaluations
        )
    }
}

/// Lattice scan plus local refinement of the NDS bound over photon pmfs.
#[pyfunction]
#[pyo3(signature = (scene, grid_step, peak=None, per_mode_peak=None, mean_energy=None, refine=true))]
fn minimize_pmf(
    scene: &Scene,
    grid_step: f64,
    peak: Option<u32>,
    per_mode_peak: Option<Vec<u32>>,
    mean_energy: Option<f64>,
    refine: bool,
) -> PyResult<OptimizeResult> {
    let constraint = EnergyConstraint {
        mean_at_most: mean_energy,
        peak_at_most: peak,
        per_mode_peak,
    };
    let grid = ndsense::optimize::grid_minimize(&scene.inner.scene, &constraint, grid_step)
        .map_err(value_err)?;
    let (best_pmf, best_cost) = if refine {
        ndsense::optimize::local_refine(&scene.inner.scene, &constraint, &grid.best_pmf)
            .map_err(value_err)?
    } else {
        (grid.best_pmf.clone(), grid.best_cost)
    };
    Ok(OptimizeResult {
        best_pmf: best_pmf
            .support()
            .iter()
            .map(|(n, p)| (n.counts().to_vec(), *p))
            .collect(),
        best_cost,
        grid_cost: grid.best_cost,
        evaluations: grid.evaluations,
        tie_count: grid.ties.len(),
    })
}

/// Run the randomized verification suites; returns
/// `(name, trials, failure_count)` per suite.
#[pyfunction]
#[pyo3(signature = (seed=7, trials=50, tol=None))]
fn verify(seed: u64, trials: u32, tol: Option<f64>) -> Vec<(String, u32, usize)> {
    ndsense::verify::run_all(&VerifyConfig { seed, trials, tol })
        .into_iter()
        .map(|report| (report.name.to_string(), report.trials, report.failures.len()))
        .collect()
}

#[pymodule]
fn _ndsense(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scene>()?;
    m.add_class::<Pmf>()?;
    m.add_class::<OptimizeResult>()?;
    m.add_function(wrap_pyfunction!(nds_bound_binary, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_min_error_nds, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_min_error_random, m)?)?;
    m.add_function(wrap_pyfunction!(sub_ensembles, m)?)?;
    m.add_function(wrap_pyfunction!(nds_pe_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(interior_extremum, m)?)?;
    m.add_function(wrap_pyfunction!(signal_only_pe, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_local_minima, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_csv, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
