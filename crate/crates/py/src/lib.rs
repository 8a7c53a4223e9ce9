//! Python bindings: the force maps, their resolvents and the scenario runner.

use nshyd_core::actuator::{self, lpm_to_m3s, orifice_coefficient, ActuatorParams, ValveCommand};
use nshyd_core::regen::{self, RegenInputs, RegenValve};
use nshyd_core::scenario::{self, Scenario};
use nshyd_core::{nonsmooth, Error, NormalizedInputs};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Regime(_) | Error::Config(_) | Error::Scenario(_) => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// One actuator with its valve coefficients. Defaults are the reference
/// excavator cylinder with identical orifices.
#[pyclass(module = "nshyd", frozen)]
struct Actuator {
    params: ActuatorParams,
    discharge: f64,
    density: f64,
}

impl Actuator {
    fn inputs(&self, u_c: f64, u_b: f64) -> PyResult<NormalizedInputs> {
        let cmd = ValveCommand::from_lever(u_c, u_b).map_err(to_py)?;
        actuator::normalize(&self.params, &cmd).map_err(to_py)
    }

    fn regen(&self, u_c: f64, u_b: f64, u_a: f64, valve_area: f64) -> PyResult<RegenInputs> {
        let valve = RegenValve { c_a: orifice_coefficient(self.discharge, valve_area, self.density), u_a };
        RegenInputs::new(self.inputs(u_c, u_b)?, valve).map_err(to_py)
    }
}

#[pymethods]
impl Actuator {
    #[new]
    #[pyo3(signature = (
        area_head = 0.024, area_rod = 0.012, relief_head = 42e6, relief_rod = 40e6, relief_pump = 36e6,
        supply_l_per_min = 500.0, discharge = 0.6, density = 850.0, valve_area = 1e-4
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        area_head: f64,
        area_rod: f64,
        relief_head: f64,
        relief_rod: f64,
        relief_pump: f64,
        supply_l_per_min: f64,
        discharge: f64,
        density: f64,
        valve_area: f64,
    ) -> PyResult<Self> {
        let c = orifice_coefficient(discharge, valve_area, density);
        let params = ActuatorParams {
            area_head,
            area_rod,
            relief_head,
            relief_rod,
            relief_pump,
            supply: lpm_to_m3s(supply_l_per_min),
            c_ph: c,
            c_th: c,
            c_pr: c,
            c_tr: c,
            c_b: c,
        };
        params.validate().map_err(to_py)?;
        Ok(Actuator { params, discharge, density })
    }

    /// Force interval `(lo, hi)` compatible with rod velocity `v`.
    fn gamma(&self, u_c: f64, u_b: f64, v: f64) -> PyResult<(f64, f64)> {
        let g = actuator::gamma(&self.inputs(u_c, u_b)?, v);
        Ok((g.lo, g.hi))
    }

    /// Velocity solving `beta v + fbar ∈ Γ(v)`.
    fn resolve(&self, u_c: f64, u_b: f64, beta: f64, fbar: f64) -> PyResult<f64> {
        actuator::lambda(&self.inputs(u_c, u_b)?, beta, fbar).map_err(to_py)
    }

    /// Force interval and regeneration velocity `(lo, hi, v_a)`.
    #[pyo3(signature = (u_c, u_b, u_a, v, valve_area = 1e-4))]
    fn gamma_regen(&self, u_c: f64, u_b: f64, u_a: f64, v: f64, valve_area: f64) -> PyResult<(f64, f64, f64)> {
        let (g, v_a) = regen::gamma_reg_with_flow(&self.regen(u_c, u_b, u_a, valve_area)?, v).map_err(to_py)?;
        Ok((g.lo, g.hi, v_a))
    }

    #[pyo3(signature = (u_c, u_b, u_a, beta, fbar, valve_area = 1e-4))]
    fn resolve_regen(&self, u_c: f64, u_b: f64, u_a: f64, beta: f64, fbar: f64, valve_area: f64) -> PyResult<f64> {
        regen::lambda_reg(&self.regen(u_c, u_b, u_a, valve_area)?, beta, fbar).map_err(to_py)
    }

    /// `(-A_r P_rM, A_h P_hM)`.
    fn force_limits(&self) -> (f64, f64) {
        (-self.params.rod_force_limit(), self.params.head_force_limit())
    }
}

#[pyfunction]
fn phi_a(b: f64, c: f64, a: f64) -> PyResult<f64> {
    nonsmooth::phi_a(b, c, a).map_err(to_py)
}

#[pyfunction]
fn phi_b(b: f64, c: f64, a0: f64, a1: f64, x1: f64) -> PyResult<f64> {
    nonsmooth::phi_b(b, c, a0, a1, x1).map_err(to_py)
}

/// Parses and checks a scenario given as TOML text. Returns the output
/// columns; raises ValueError listing every problem otherwise.
#[pyfunction]
fn validate_scenario(text: &str) -> PyResult<Vec<String>> {
    Ok(Scenario::from_toml_str(text).map_err(to_py)?.all_columns())
}

/// Runs a scenario given as TOML text. Returns `(header, rows)`.
#[pyfunction]
fn run_scenario(py: Python<'_>, text: &str) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let sc = Scenario::from_toml_str(text).map_err(to_py)?;
    let table = py.detach(|| scenario::run(&sc)).map_err(to_py)?;
    Ok((table.header, table.rows))
}

#[pymodule]
#[pyo3(name = "nshyd")]
fn nshyd_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Actuator>()?;
    m.add_function(wrap_pyfunction!(phi_a, m)?)?;
    m.add_function(wrap_pyfunction!(phi_b, m)?)?;
    m.add_function(wrap_pyfunction!(validate_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
