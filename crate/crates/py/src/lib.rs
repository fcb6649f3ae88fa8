//! Python bindings: campaign configuration and execution, CSV export, and the
//! geometry, allocation and oracle kernels.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use vlcsec_core::channel::{self, LedParams, PdParams};
use vlcsec_core::config::Config;
use vlcsec_core::geom::{self, BodyCylinder, Vec3};
use vlcsec_core::{noma, oracle, report, sim, topology};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn v3((x, y, z): (f64, f64, f64)) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Statistics of one sweep point.
#[pyclass(get_all, frozen, skip_from_py_object, module = "vlcsec")]
#[derive(Clone)]
struct SweepStats {
    power_w: f64,
    eve_xy: Option<(f64, f64)>,
    trials: usize,
    mean_rd: f64,
    se_rd: f64,
    mean_rs: f64,
    se_rs: f64,
    /// Per user: (mean rate, mean wiretap rate, mean secrecy term).
    per_user: Vec<(f64, f64, f64)>,
    blocked_links: usize,
    unserved_user_trials: usize,
    clipped_secrecy: usize,
    flagged_trials: usize,
}

#[pymethods]
impl SweepStats {
    fn __repr__(&self) -> String {
        format!(
            "SweepStats(power_w={}, eve_xy={:?}, trials={}, mean_rd={:.6}, mean_rs={:.6})",
            self.power_w, self.eve_xy, self.trials, self.mean_rd, self.mean_rs
        )
    }
}

impl From<&sim::SweepRow> for SweepStats {
    fn from(row: &sim::SweepRow) -> Self {
        let s = &row.stats;
        Self {
            power_w: row.point.power,
            eve_xy: row.point.eve.fixed_xy(),
            trials: s.trials,
            mean_rd: s.mean_rd,
            se_rd: s.se_rd,
            mean_rs: s.mean_rs,
            se_rs: s.se_rs,
            per_user: s.per_user.iter().map(|u| (u.mean_rate, u.mean_wiretap, u.mean_secrecy)).collect(),
            blocked_links: s.diagnostics.blocked_links,
            unserved_user_trials: s.diagnostics.unserved_user_trials,
            clipped_secrecy: s.diagnostics.clipped_secrecy,
            flagged_trials: s.diagnostics.flagged_trials,
        }
    }
}

/// A campaign configuration. Keyword arguments override the reference
/// defaults; `from_toml` accepts the same schema as the command line tool.
#[pyclass(skip_from_py_object, module = "vlcsec")]
#[derive(Clone)]
struct Campaign {
    config: Config,
}

#[pymethods]
impl Campaign {
    #[new]
    #[pyo3(signature = (scenario = "1", strategy = "broadcasting", trials = 1000, seed = 1, power_dbm = None, zeta = None, optimized = false))]
    fn new(
        scenario: &str,
        strategy: &str,
        trials: usize,
        seed: u64,
        power_dbm: Option<Vec<f64>>,
        zeta: Option<f64>,
        optimized: bool,
    ) -> PyResult<Self> {
        let mut config = Config {
            scenario: scenario.to_string(),
            strategy: strategy.parse::<topology::Strategy>().map_err(value_err)?,
            trials,
            seed,
            power_dbm,
            ..Config::default()
        };
        if let Some(z) = zeta {
            config.allocation.zeta = z;
        }
        if optimized {
            config.allocation.scheme = vlcsec_core::config::SchemeKind::Optimized;
        }
        config.resolve().map_err(value_err)?;
        Ok(Self { config })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let config = Config::from_toml_str(text).map_err(value_err)?;
        config.resolve().map_err(value_err)?;
        Ok(Self { config })
    }

    fn to_toml(&self) -> String {
        self.config.to_toml_string()
    }

    /// LED positions of the resolved room as (x, y, z) tuples.
    fn leds(&self) -> PyResult<Vec<(f64, f64, f64)>> {
        let cfg = self.config.resolve().map_err(value_err)?;
        Ok(cfg.room.leds.iter().map(|p| (p.x, p.y, p.z)).collect())
    }

    /// Runs every sweep point; releases the interpreter while simulating.
    fn run(&self, py: Python<'_>) -> PyResult<Vec<SweepStats>> {
        let cfg = self.config.resolve().map_err(value_err)?;
        let rows = py.detach(|| sim::sweep(&cfg)).map_err(value_err)?;
        Ok(rows.iter().map(SweepStats::from).collect())
    }

    /// Summary table exactly as written by the command line tool.
    fn summary_csv(&self, py: Python<'_>) -> PyResult<String> {
        let cfg = self.config.resolve().map_err(value_err)?;
        let rows = py.detach(|| sim::sweep(&cfg)).map_err(value_err)?;
        let mut buf = Vec::new();
        report::write_summary(&mut buf, &cfg, &rows).map_err(value_err)?;
        String::from_utf8(buf).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Campaign(scenario={:?}, strategy={}, trials={}, seed={})",
            self.config.scenario, self.config.strategy, self.config.trials, self.config.seed
        )
    }
}

/// Whether the segment from `led` to `pd` passes through a body cylinder
/// whose axis stands at `body_xy`.
#[pyfunction]
#[pyo3(signature = (led, pd, body_xy, radius = 0.2, height = 1.6))]
fn is_blocked(led: (f64, f64, f64), pd: (f64, f64, f64), body_xy: (f64, f64), radius: f64, height: f64) -> PyResult<bool> {
    let body = BodyCylinder::new(Vec3::new(body_xy.0, body_xy.1, height), radius, height).map_err(value_err)?;
    Ok(geom::is_blocked(v3(led), v3(pd), &body))
}

/// Blockage-free LoS gain for a device with the given orientation (degrees),
/// using the reference LED and photodiode parameters unless overridden.
#[pyfunction]
#[pyo3(signature = (led, pd, azimuth_deg = 0.0, polar_deg = 0.0, half_angle_deg = 70.0, fov_deg = 60.0, area = 1e-4, refractive_index = 1.5))]
#[allow(clippy::too_many_arguments)]
fn channel_gain(
    led: (f64, f64, f64),
    pd: (f64, f64, f64),
    azimuth_deg: f64,
    polar_deg: f64,
    half_angle_deg: f64,
    fov_deg: f64,
    area: f64,
    refractive_index: f64,
) -> f64 {
    let led_params = LedParams::new(half_angle_deg.to_radians());
    let pd_params = PdParams { area, fov: fov_deg.to_radians(), refractive_index, responsivity: 1.0 };
    channel::estimated_gain_at_azimuth(v3(led), v3(pd), azimuth_deg.to_radians(), polar_deg.to_radians(), &led_params, &pd_params)
}

#[pyfunction]
fn fixed_allocation(size: usize, zeta: f64) -> PyResult<Vec<f64>> {
    noma::fixed_allocation(size, zeta).map_err(value_err)
}

/// Maximises the sum rate of one group given squared serving gains and
/// interference-plus-noise floors, weakest user first.
#[pyfunction]
fn optimize_allocation(gains_sq: Vec<f64>, floor: Vec<f64>) -> PyResult<(Vec<f64>, f64, bool)> {
    if gains_sq.len() != floor.len() {
        return Err(PyValueError::new_err("gains_sq and floor differ in length"));
    }
    let obj = noma::GroupObjective { gains_sq, floor };
    let sol = noma::optimize_allocation(&obj, &noma::SolverOptions::default()).map_err(value_err)?;
    Ok((sol.betas, sol.objective, sol.converged))
}

#[pyfunction]
#[pyo3(signature = (length = 40.0, width = 40.0, ceiling = 3.98, side = 9.6, anchor = (20.0, 20.0)))]
fn triangular_lattice(length: f64, width: f64, ceiling: f64, side: f64, anchor: (f64, f64)) -> PyResult<Vec<(f64, f64)>> {
    let leds = topology::triangular_lattice(length, width, ceiling, side, anchor, f64::INFINITY).map_err(value_err)?;
    Ok(leds.iter().map(|p| (p.x, p.y)).collect())
}

/// Runs a self-check oracle; returns (passed, report text).
#[pyfunction]
#[pyo3(signature = (kind, n = 1000, seed = 1))]
fn run_oracle(py: Python<'_>, kind: &str, n: usize, seed: u64) -> PyResult<(bool, String)> {
    let report = py
        .detach(|| oracle::run(kind, n, seed))
        .ok_or_else(|| PyValueError::new_err(format!("unknown oracle `{kind}`")))?;
    Ok((report.passed(), report.to_string()))
}

#[pymodule]
fn vlcsec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Campaign>()?;
    m.add_class::<SweepStats>()?;
    m.add_function(wrap_pyfunction!(is_blocked, m)?)?;
    m.add_function(wrap_pyfunction!(channel_gain, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_allocation, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_allocation, m)?)?;
    m.add_function(wrap_pyfunction!(triangular_lattice, m)?)?;
    m.add_function(wrap_pyfunction!(run_oracle, m)?)?;
    Ok(())
}
