//! Python bindings: profiles, data norms, weights, simulation time series,
//! decay fits, Gronwall certificates and the config-driven runner.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wavedecay::analysis::{self, DecayModel, EnergyHistory};
use wavedecay::diagnostics::{self, fill_morawetz_residual, Recorder};
use wavedecay::{
    compute_eta, init_data_norms, make_profile, DimMode, Family, Field, InitialData, Simulation,
    SolverConfig, WavespeedProfile,
};
use wavedecay_cli::{run_experiment, RunOptions};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_dim(dim: &str) -> PyResult<DimMode> {
    match dim {
        "line-1d" => Ok(DimMode::Line1D),
        "plane-2d" => Ok(DimMode::Plane2D),
        "radial-3d" => Ok(DimMode::Radial3D),
        other => Err(value_err(format!(
            "unknown dim `{other}` (line-1d, plane-2d, radial-3d)"
        ))),
    }
}

fn point(x: &[f64]) -> PyResult<[f64; 3]> {
    if x.len() > 3 {
        return Err(value_err("points have at most three coordinates"));
    }
    let mut p = [0.0; 3];
    p[..x.len()].copy_from_slice(x);
    Ok(p)
}

/// Wavespeed profile `c(x)`, constant or a radial bump of radius `support`.
#[pyclass(name = "Profile", frozen)]
struct PyProfile {
    inner: WavespeedProfile,
}

#[pymethods]
impl PyProfile {
    #[new]
    #[pyo3(signature = (dim, family = "constant", support = 1.0, amplitude = 0.0))]
    fn new(dim: &str, family: &str, support: f64, amplitude: f64) -> PyResult<Self> {
        let family = match family {
            "constant" => Family::Constant,
            "radial_bump" => Family::RadialBump { amplitude },
            other => return Err(value_err(format!("unknown family `{other}`"))),
        };
        let inner = make_profile(parse_dim(dim)?, family, support).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    /// `eta < 1`, the hypothesis of the decay estimate.
    #[getter]
    fn eta_applicable(&self) -> bool {
        compute_eta(&self.inner).applicable
    }

    #[getter]
    fn c_min(&self) -> f64 {
        self.inner.c_min
    }

    #[getter]
    fn c_sup(&self) -> f64 {
        self.inner.c_sup
    }

    #[getter]
    fn grad_c_sup(&self) -> f64 {
        self.inner.grad_c_sup
    }

    #[getter]
    fn support(&self) -> f64 {
        self.inner.support
    }

    fn speed(&self, x: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.speed(&point(&x)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "Profile(dim={}, support={}, c_min={}, c_sup={}, eta={:.7})",
            self.inner.dim, self.inner.support, self.inner.c_min, self.inner.c_sup, self.inner.eta
        )
    }
}

/// Initial data `u0`, `u1` built from centered polynomial bumps.
#[pyclass(name = "InitialData", frozen)]
struct PyData {
    inner: InitialData,
}

#[pymethods]
impl PyData {
    #[new]
    #[pyo3(signature = (u0_radius = 1.0, u0_amplitude = 1.0, u1_radius = 1.0, u1_amplitude = 0.0, power = 4, center = vec![]))]
    fn new(
        u0_radius: f64,
        u0_amplitude: f64,
        u1_radius: f64,
        u1_amplitude: f64,
        power: u32,
        center: Vec<f64>,
    ) -> PyResult<Self> {
        let c = point(&center)?;
        Ok(Self {
            inner: InitialData::new(
                Field::bump(c, u0_radius, u0_amplitude, power),
                Field::bump(c, u1_radius, u1_amplitude, power),
            ),
        })
    }

    fn u0(&self, x: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.u0.value(&point(&x)?))
    }

    fn u1(&self, x: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.u1.value(&point(&x)?))
    }
}

/// Weighted norms of the data (`i0_sq`, `j0_sq`, `moment`, ...).
#[pyfunction]
#[pyo3(signature = (profile, data, gamma = 1.0, h = 0.01))]
fn data_norms(
    profile: &PyProfile,
    data: &PyData,
    gamma: f64,
    h: f64,
) -> PyResult<BTreeMap<String, f64>> {
    let n = init_data_norms(&data.inner, &profile.inner, gamma, h).map_err(value_err)?;
    Ok(BTreeMap::from([
        ("i0_sq".into(), n.i0_sq),
        ("j0_sq".into(), n.j0_sq),
        ("moment".into(), n.moment),
        ("u1_l2".into(), n.u1_l2),
        ("u1_l1".into(), n.u1_l1),
        ("u1_l1_gamma".into(), n.u1_l1_gamma),
        ("inv_c_u0_l2".into(), n.inv_c_u0_l2),
        ("energy".into(), n.energy),
    ]))
}

/// `psi(t, x)`, `psi_t`, `phi(t)`, `phi_t` for a ball of radius `support`.
#[pyfunction]
fn weights(t: f64, x: Vec<f64>, support: f64) -> PyResult<BTreeMap<String, f64>> {
    let w = diagnostics::weights(t, &point(&x)?, support);
    Ok(BTreeMap::from([
        ("psi".into(), w.psi),
        ("psi_t".into(), w.psi_t),
        ("phi".into(), w.phi),
        ("phi_t".into(), w.phi_t),
    ]))
}

/// Runs the solver and returns the diagnostic time series as lists.
#[pyfunction]
#[pyo3(signature = (profile, data, radii, h = 0.01, t_final = 10.0, cfl = 0.5, sample_stride = 10))]
fn simulate(
    py: Python<'_>,
    profile: &PyProfile,
    data: &PyData,
    radii: Vec<f64>,
    h: f64,
    t_final: f64,
    cfl: f64,
    sample_stride: usize,
) -> PyResult<BTreeMap<String, Vec<f64>>> {
    let cfg = SolverConfig {
        cfl,
        h,
        t_final,
        sample_stride,
        ..Default::default()
    };
    let p = &profile.inner;
    let d = &data.inner;
    let records = py
        .detach(|| -> wavedecay::Result<_> {
            let norms = init_data_norms(d, p, 1.0, h)?;
            let mut rec = Recorder::new(p, &radii)?;
            Simulation::new(d, p, &cfg)?.run(d, &mut [&mut rec])?;
            fill_morawetz_residual(&mut rec.records, norms.j0_sq, p.dim);
            Ok(rec.records)
        })
        .map_err(|e| match e {
            wavedecay::Error::Unstable { .. } => PyRuntimeError::new_err(e.to_string()),
            other => value_err(other),
        })?;
    let col = |f: &dyn Fn(&diagnostics::DiagnosticsRecord) -> f64| records.iter().map(f).collect();
    let mut out = BTreeMap::new();
    out.insert("t".into(), col(&|r| r.t));
    out.insert("E_u".into(), col(&|r| r.energy));
    out.insert("l2_u".into(), col(&|r| r.l2_u));
    out.insert("S_accum".into(), col(&|r| r.source_accum));
    out.insert("morawetz_residual".into(), col(&|r| r.morawetz_residual));
    for (j, r) in radii.iter().enumerate() {
        out.insert(format!("E_R@{r}"), col(&|x| x.local_energy[j]));
        out.insert(format!("wext@{r}"), col(&|x| x.weighted_ext[j]));
    }
    Ok(out)
}

/// Fits `E = A t^-p` (`model="algebraic"`) or `A / log^2(2 + t)`.
#[pyfunction]
#[pyo3(signature = (t, e, window, model = "algebraic", reference = 1.0))]
fn fit_decay(
    t: Vec<f64>,
    e: Vec<f64>,
    window: (f64, f64),
    model: &str,
    reference: f64,
) -> PyResult<BTreeMap<String, Option<f64>>> {
    if t.len() != e.len() {
        return Err(value_err("t and e differ in length"));
    }
    let model = match model {
        "algebraic" => DecayModel::Algebraic,
        "logarithmic" => DecayModel::Logarithmic,
        other => return Err(value_err(format!("unknown model `{other}`"))),
    };
    let series: Vec<_> = t.into_iter().zip(e).collect();
    let fit = analysis::fit_decay(&series, window, model, reference).map_err(value_err)?;
    Ok(BTreeMap::from([
        ("exponent".into(), fit.exponent),
        ("amplitude".into(), fit.amplitude),
        ("rss".into(), fit.rss),
        ("used_samples".into(), Some(fit.used_samples as f64)),
        ("excluded_samples".into(), Some(fit.excluded_samples as f64)),
    ]))
}

/// Status of the scaled-energy boundedness check: `pass`, `fail` or `skipped:<reason>`.
#[pyfunction]
fn bounded_check(
    t: Vec<f64>,
    e: Vec<f64>,
    eta: f64,
    radius: f64,
    c_min: f64,
    window: (f64, f64),
) -> PyResult<String> {
    let series: Vec<_> = t.into_iter().zip(e).collect();
    let v = analysis::bounded_scaled_energy_check(&series, eta, radius, c_min, window)
        .map_err(value_err)?;
    Ok(v.status())
}

/// Gronwall certificate for a sampled series; returns `(m0, max_ratio)`.
/// `k0_sq=None` uses the smallest admissible value.
#[pyfunction]
#[pyo3(signature = (t, e, eta, a, t0, k0_sq = None))]
fn gronwall(
    t: Vec<f64>,
    e: Vec<f64>,
    eta: f64,
    a: f64,
    t0: f64,
    k0_sq: Option<f64>,
) -> PyResult<BTreeMap<String, f64>> {
    let hist = EnergyHistory::from_samples(t, e, 0.0).map_err(value_err)?;
    let k0 = match k0_sq {
        Some(k) => k,
        None => analysis::minimal_k0_sq(&hist, eta, a, t0).map_err(value_err)?,
    };
    let cert = analysis::gronwall_bound(&hist, k0, eta, a, t0).map_err(value_err)?;
    Ok(BTreeMap::from([
        ("k0_sq".into(), cert.k0_sq),
        ("m0".into(), cert.m0),
        ("t0".into(), cert.t0),
        ("max_ratio".into(), cert.max_ratio),
    ]))
}

/// Runs a TOML experiment; returns `(all_passed, output_dir)`.
#[pyfunction]
#[pyo3(signature = (config, out, parallel = 1, resolution_scale = 1.0))]
fn run_config(
    py: Python<'_>,
    config: PathBuf,
    out: PathBuf,
    parallel: usize,
    resolution_scale: f64,
) -> PyResult<(bool, String)> {
    let opts = RunOptions {
        out_root: out,
        parallel,
        resolution_scale,
    };
    let outcome =
        py.detach(|| run_experiment(&config, &opts))
            .map_err(|e| match e.exit_code() {
                2 => value_err(e),
                _ => PyRuntimeError::new_err(e.to_string()),
            })?;
    Ok((outcome.all_passed(), outcome.dir.display().to_string()))
}

#[pymodule]
fn pywavedecay(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProfile>()?;
    m.add_class::<PyData>()?;
    m.add_function(wrap_pyfunction!(data_norms, m)?)?;
    m.add_function(wrap_pyfunction!(weights, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay, m)?)?;
    m.add_function(wrap_pyfunction!(bounded_check, m)?)?;
    m.add_function(wrap_pyfunction!(gronwall, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
