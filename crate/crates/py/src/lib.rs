//! Python bindings for `onoff-core`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use onoff_core::asymptotic::{self, EtaAtom};
use onoff_core::rng::{stream, Domain};
use onoff_core::{beamforming, channel, quantization, selection, sim};

fn to_py(e: onoff_core::Error) -> PyErr {
    match e {
        onoff_core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "UserProfile", frozen, from_py_object)]
#[derive(Clone)]
struct PyUserProfile {
    inner: channel::UserProfile,
}

#[pymethods]
impl PyUserProfile {
    #[new]
    fn new(gamma: f64, rate_bits: u32) -> PyResult<Self> {
        let inner = channel::UserProfile::new(gamma, rate_bits).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn rate_bits(&self) -> u32 {
        self.inner.rate_bits
    }

    fn __repr__(&self) -> String {
        format!("UserProfile(gamma={}, rate_bits={})", self.inner.gamma, self.inner.rate_bits)
    }
}

#[pyclass(name = "SystemConfig", frozen)]
struct PySystemConfig {
    inner: channel::SystemConfig,
}

#[pymethods]
impl PySystemConfig {
    /// `rho_db` is the total transmit SNR in dB.
    #[new]
    fn new(antennas: usize, rho_db: f64, users: Vec<PyUserProfile>) -> PyResult<Self> {
        let users = users.into_iter().map(|u| u.inner).collect();
        let inner = channel::SystemConfig::with_snr_db(antennas, rho_db, users).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn antennas(&self) -> usize {
        self.inner.antennas()
    }

    #[getter]
    fn users(&self) -> usize {
        self.inner.user_count()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho()
    }

    /// Main-order choice of `s` and the on-users, as a dict.
    fn choose_s<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = selection::choose_s_main(&self.inner);
        let d = PyDict::new(py);
        d.set_item("s_star", r.s_star)?;
        d.set_item("on_users", r.on_users)?;
        d.set_item("i_main_per_user", r.i_main_per_user)?;
        d.set_item("i_main_total", r.i_main_total)?;
        Ok(d)
    }

    /// Main-order rate of every user if `s` users were on.
    fn main_order_rates(&self, s: usize) -> Vec<f64> {
        selection::main_order_rates(&self.inner, s)
    }
}

#[pyclass(name = "Codebook", frozen)]
struct PyCodebook {
    inner: quantization::Codebook,
}

#[pymethods]
impl PyCodebook {
    #[new]
    fn new(entries: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let dim = entries.first().map_or(0, Vec::len);
        let inner = quantization::Codebook::from_entries(dim, &entries).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// A codebook of `2^rate_bits` isotropic unit vectors.
    #[staticmethod]
    fn random(dim: usize, rate_bits: u32, seed: u64) -> PyResult<Self> {
        let mut rng = stream(seed, Domain::Codebook, dim as u32, rate_bits);
        let inner = quantization::random_codebook(dim, rate_bits, &mut rng).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn entry(&self, index: usize) -> PyResult<Vec<Complex64>> {
        if index >= self.inner.len() {
            return Err(PyValueError::new_err(format!("index {index} out of range")));
        }
        Ok(self.inner.entry(index).to_vec())
    }

    /// Returns `(index, codeword, |v†p|², 1 - |v†p|²)` for a unit vector `v`.
    fn quantize(&self, v: Vec<Complex64>) -> PyResult<(usize, Vec<Complex64>, f64, f64)> {
        let q = quantization::quantize(&v, &self.inner).map_err(to_py)?;
        Ok((q.index, q.codeword, q.alignment, q.chordal_loss))
    }

    fn empirical_distortion(&self, trials: usize, seed: u64) -> PyResult<f64> {
        quantization::empirical_distortion(&self.inner, trials, seed).map_err(to_py)
    }
}

#[pyclass(name = "EtaDistribution", frozen)]
struct PyEtaDistribution {
    inner: asymptotic::EtaDistribution,
}

#[pymethods]
impl PyEtaDistribution {
    /// `atoms` is a list of `(eta, mass)` pairs with masses summing to one.
    #[new]
    fn new(atoms: Vec<(f64, f64)>) -> PyResult<Self> {
        let atoms = atoms.into_iter().map(|(eta, mass)| EtaAtom { eta, mass }).collect();
        let inner = asymptotic::EtaDistribution::new(atoms).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Limiting law of user classes `(fraction, gamma, rbar)` at linear SNR `rho`.
    #[staticmethod]
    fn from_classes(classes: Vec<(f64, f64, f64)>, rho: f64) -> PyResult<Self> {
        let classes: Vec<_> = classes
            .into_iter()
            .map(|(fraction, gamma, rbar)| asymptotic::UserClass { fraction, gamma, rbar })
            .collect();
        let inner = asymptotic::build_eta_distribution(&classes, rho).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        self.inner.atoms().iter().map(|a| (a.eta, a.mass)).collect()
    }

    fn threshold(&self, mbar: f64, sbar: f64) -> f64 {
        asymptotic::eta_threshold(&self.inner, mbar, sbar)
    }

    fn spatial_efficiency(&self, mbar: f64, sbar: f64) -> f64 {
        asymptotic::spatial_efficiency(&self.inner, mbar, sbar)
    }

    /// Returns `(sbar_star, value)`.
    #[pyo3(signature = (mbar, grid_step = asymptotic::MAX_GRID_STEP))]
    fn optimal_sbar(&self, mbar: f64, grid_step: f64) -> PyResult<(f64, f64)> {
        let opt = asymptotic::optimal_sbar(&self.inner, mbar, grid_step).map_err(to_py)?;
        Ok((opt.sbar, opt.value))
    }
}

/// One CN(0, I) channel of dimension `antennas`.
#[pyfunction]
fn draw_channel(antennas: usize, seed: u64) -> Vec<Complex64> {
    channel::draw_channel(antennas, &mut stream(seed, Domain::Channel, 0, 0)).h().to_vec()
}

/// Returns `(lower, upper)`.
#[pyfunction]
fn distortion_bounds(dim: usize, rate_bits: u32) -> PyResult<(f64, f64)> {
    let b = quantization::distortion_rate_bounds(dim, rate_bits).map_err(to_py)?;
    Ok((b.lower, b.upper))
}

#[pyfunction]
fn estimate_distortion(dim: usize, rate_bits: u32) -> f64 {
    quantization::estimate_distortion(dim, rate_bits)
}

/// Zero-forcing beams for the given unit directions, one per on-user.
#[pyfunction]
fn zero_forcing_beams(directions: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<Complex64>>> {
    let dim = directions.first().map_or(0, Vec::len);
    let refs: Vec<&[Complex64]> = directions.iter().map(Vec::as_slice).collect();
    let on: Vec<usize> = (0..directions.len()).collect();
    let plan = beamforming::zero_forcing_beams(&on, &refs, dim).map_err(to_py)?;
    Ok(plan.beams().to_vec())
}

/// Returns `(E[P_sig], E[P_int])`.
#[pyfunction]
fn expected_powers(antennas: usize, s: usize, gamma: f64, rho: f64, d: f64) -> (f64, f64) {
    let p = selection::expected_powers(antennas, s, gamma, rho, d);
    (p.signal, p.interference)
}

#[pyfunction]
fn i_main(e_sig: f64, e_int: f64) -> f64 {
    selection::i_main(e_sig, e_int)
}

#[pyfunction]
fn eta(rho: f64, gamma: f64, d: f64) -> f64 {
    selection::eta(rho, gamma, d)
}

/// Runs the sweep described by a config file and returns one dict per row.
#[pyfunction]
#[pyo3(signature = (config, seed = None))]
fn simulate<'py>(py: Python<'py>, config: PathBuf, seed: Option<u64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut file = sim::ConfigFile::load(&config).map_err(to_py)?;
    if let Some(seed) = seed {
        file.seed = seed;
    }
    let spec = file.into_spec().map_err(to_py)?;
    let rows = py.detach(|| sim::run_experiment(&spec)).map_err(to_py)?;
    rows.into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("snr_db", r.snr_db)?;
            d.set_item("scheme", r.scheme)?;
            d.set_item("s_used", r.s_used)?;
            d.set_item("mc_throughput_bits", r.mc_throughput_bits)?;
            d.set_item("mc_stderr", r.mc_stderr)?;
            d.set_item("theory_i_main_bits", r.theory_i_main_bits)?;
            d.set_item("trials_effective", r.trials_effective)?;
            Ok(d)
        })
        .collect()
}

type CheckTuple = (String, bool, String);

/// Runs the self-check suite; returns `(all_passed, [(name, passed, detail)])`.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn verify(py: Python<'_>, seed: u64) -> PyResult<(bool, Vec<CheckTuple>)> {
    let report = py.detach(|| sim::verify_suite(seed)).map_err(to_py)?;
    let all = report.all_passed();
    Ok((all, report.checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect()))
}

#[pymodule]
fn onoff(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyUserProfile>()?;
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyCodebook>()?;
    m.add_class::<PyEtaDistribution>()?;
    m.add_function(wrap_pyfunction!(draw_channel, m)?)?;
    m.add_function(wrap_pyfunction!(distortion_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_distortion, m)?)?;
    m.add_function(wrap_pyfunction!(zero_forcing_beams, m)?)?;
    m.add_function(wrap_pyfunction!(expected_powers, m)?)?;
    m.add_function(wrap_pyfunction!(i_main, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
