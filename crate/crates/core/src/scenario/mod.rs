//! Scenario files: TOML schema, validation and the sweep and simulation
//! runners behind the `nshyd` command.
//!
//! Every physical key carries its unit in the name (`_Pa`, `_MPa`, `_m2`,
//! `_m3_per_s`, `_L_per_min`, ...). Where two units are accepted, exactly one
//! may be given. Omitted actuator and arm keys take the reference values of
//! [`ActuatorParams::reference`] and [`ArmParams::reference`]. The schema is
//! documented in the repository README.

mod run;
mod schedule;

pub use run::{format_value, run, run_simulation, run_sweep, Table};
pub use schedule::{Interp, Schedule, ScheduleSpec};

use crate::actuator::{lpm_to_m3s, orifice_coefficient, ActuatorParams};
use crate::coupling::{DEFAULT_STIFFNESS, DEFAULT_VISCOSITY};
use crate::error::{Error, Result};
use crate::mbs::ArmParams;
use serde::Deserialize;
use std::path::Path;

const DEFAULT_DISCHARGE: f64 = 0.6;
const DEFAULT_DENSITY: f64 = 850.0;
const DEFAULT_VALVE_AREA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sweep,
    Simulate,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    mode: Mode,
    #[serde(default)]
    actuator: RawActuator,
    regen: Option<RawRegen>,
    pump: Option<RawPump>,
    sweep: Option<RawSweep>,
    simulation: Option<RawSimulation>,
    #[serde(default)]
    arm: Vec<RawArm>,
    output: Option<RawOutput>,
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActuator {
    area_head_m2: Option<f64>,
    area_rod_m2: Option<f64>,
    relief_head_Pa: Option<f64>,
    relief_head_MPa: Option<f64>,
    relief_rod_Pa: Option<f64>,
    relief_rod_MPa: Option<f64>,
    relief_pump_Pa: Option<f64>,
    relief_pump_MPa: Option<f64>,
    supply_m3_per_s: Option<f64>,
    supply_L_per_min: Option<f64>,
    discharge: Option<f64>,
    density_kg_per_m3: Option<f64>,
    valve_area_m2: Option<f64>,
    valve_area_ph_m2: Option<f64>,
    valve_area_th_m2: Option<f64>,
    valve_area_pr_m2: Option<f64>,
    valve_area_tr_m2: Option<f64>,
    valve_area_b_m2: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegen {
    discharge: Option<f64>,
    valve_area_m2: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPump {
    supply_m3_per_s: Option<f64>,
    supply_L_per_min: Option<f64>,
    relief_pump_Pa: Option<f64>,
    relief_pump_MPa: Option<f64>,
    u_b: Option<ScheduleSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    v_min_m_per_s: f64,
    v_max_m_per_s: f64,
    n_points: i64,
    u_c: Vec<f64>,
    u_b: Vec<f64>,
    u_a: Option<Vec<f64>>,
    other_velocity_m_per_s: Option<Vec<f64>>,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    h_s: f64,
    t_end_s: f64,
    stiffness_N_per_m: Option<f64>,
    viscosity_N_s_per_m: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArm {
    theta0_deg: Option<f64>,
    theta0_rad: Option<f64>,
    thetadot0_rad_per_s: Option<f64>,
    l_g_m: Option<f64>,
    l_m_m: Option<f64>,
    l_f_m: Option<f64>,
    alpha_deg: Option<f64>,
    alpha_rad: Option<f64>,
    mass_kg: Option<f64>,
    inertia_kg_m2: Option<f64>,
    gravity_m_per_s2: Option<f64>,
    base_m: Option<[f64; 2]>,
    u_c: Option<ScheduleSpec>,
    u_b: Option<ScheduleSpec>,
    u_a: Option<ScheduleSpec>,
    f_ey_N: Option<ScheduleSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    columns: Vec<String>,
}

/// Shared pump. Under `simulate` it also carries the bleed opening schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpSpec {
    pub supply: f64,
    pub relief_pump: f64,
    pub u_b: Option<Schedule>,
}

/// Velocity grid and command lists. Every combination of the lists is swept.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub v_min: f64,
    pub v_max: f64,
    pub n_points: usize,
    pub u_c: Vec<f64>,
    pub u_b: Vec<f64>,
    /// Regeneration openings; only with a regeneration valve.
    pub u_a: Vec<f64>,
    /// Velocities of the second actuator at a shared pump.
    pub other_velocity: Vec<f64>,
}

impl SweepSpec {
    pub fn velocities(&self) -> Vec<f64> {
        let last = (self.n_points - 1) as f64;
        let scale = self.v_min.abs().max(self.v_max.abs());
        (0..self.n_points)
            .map(|k| {
                let s = k as f64 / last;
                let v = self.v_min * (1.0 - s) + self.v_max * s;
                // a grid that passes through rest must hit it exactly
                if v.abs() <= 4.0 * f64::EPSILON * scale {
                    0.0
                } else {
                    v
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSpec {
    pub h: f64,
    pub t_end: f64,
    pub stiffness: f64,
    pub viscosity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    pub arm: ArmParams,
    pub theta0: f64,
    pub thetadot0: f64,
    pub u_c: Schedule,
    /// Absent for arms at a shared pump, whose bleed is scheduled on the pump.
    pub u_b: Option<Schedule>,
    pub u_a: Schedule,
    pub f_ey: Schedule,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mode: Mode,
    pub actuator: ActuatorParams,
    /// Regeneration valve orifice coefficient, when the circuit has one.
    pub regen_coefficient: Option<f64>,
    pub pump: Option<PumpSpec>,
    pub sweep: Option<SweepSpec>,
    pub simulation: Option<SimulationSpec>,
    pub arms: Vec<ArmSpec>,
    /// Output column selection; all columns when absent.
    pub columns: Option<Vec<String>>,
}

// Collects problems instead of stopping at the first one.
#[derive(Default)]
struct Check {
    issues: Vec<String>,
}

impl Check {
    fn fail(&mut self, msg: String) {
        self.issues.push(msg);
    }

    /// Value of a key given in one of two units, converted to the first.
    fn either(&mut self, a: (&str, Option<f64>), b: (&str, Option<f64>), b_to_a: f64) -> Option<f64> {
        match (a.1, b.1) {
            (Some(_), Some(_)) => {
                self.fail(format!("{} and {}: give only one", a.0, b.0));
                None
            }
            (Some(x), None) => Some(x),
            (None, Some(y)) => Some(y * b_to_a),
            (None, None) => None,
        }
    }

    /// [`Check::either`] under `section`, falling back to `default`; must be positive.
    fn pick(&mut self, section: &str, a: (&str, Option<f64>), b: (&str, Option<f64>), b_to_a: f64, default: f64) -> f64 {
        let (ka, kb) = (format!("{section}.{}", a.0), format!("{section}.{}", b.0));
        let x = self.either((&ka, a.1), (&kb, b.1), b_to_a).unwrap_or(default);
        self.positive(&ka, x)
    }

    fn positive(&mut self, key: &str, x: f64) -> f64 {
        if !(x > 0.0 && x.is_finite()) {
            self.fail(format!("{key}: must be positive and finite (got {x})"));
        }
        x
    }

    fn finite(&mut self, key: &str, x: f64) -> f64 {
        if !x.is_finite() {
            self.fail(format!("{key}: must be finite (got {x})"));
        }
        x
    }

    fn within(&mut self, key: &str, x: f64, lo: f64, hi: f64) {
        if !(lo..=hi).contains(&x) {
            self.fail(format!("{key}: {x} is outside [{lo}, {hi}]"));
        }
    }

    fn schedule(&mut self, key: &str, spec: Option<&ScheduleSpec>, default: Option<f64>) -> Option<Schedule> {
        match (spec, default) {
            (Some(s), _) => match Schedule::from_spec(key, s) {
                Ok(s) => Some(s),
                Err(e) => {
                    self.fail(e);
                    None
                }
            },
            (None, Some(y)) => Some(Schedule::constant(y)),
            (None, None) => {
                self.fail(format!("{key}: missing"));
                None
            }
        }
    }

    fn schedule_within(&mut self, key: &str, s: &Option<Schedule>, lo: f64, hi: f64) {
        if let Some(s) = s {
            let (a, b) = s.range();
            if a < lo || b > hi {
                self.fail(format!("{key}: values span [{a}, {b}], outside [{lo}, {hi}]"));
            }
        }
    }
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(vec![format!("{}: {e}", path.display())]))?;
        Scenario::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Scenario(vec![e.to_string().trim().to_string()]))?;
        let mut ck = Check::default();
        let sc = build(&mut ck, raw);
        if ck.issues.is_empty() {
            Ok(sc)
        } else {
            Err(Error::Scenario(ck.issues))
        }
    }

    /// Column names of the full output table, before any selection.
    pub fn all_columns(&self) -> Vec<String> {
        run::header(self)
    }
}

fn build(ck: &mut Check, raw: RawScenario) -> Scenario {
    let actuator = build_actuator(ck, &raw.actuator);
    let density = raw.actuator.density_kg_per_m3.unwrap_or(DEFAULT_DENSITY);
    let regen_coefficient = raw.regen.as_ref().map(|r| {
        let d = ck.positive("regen.discharge", r.discharge.unwrap_or(DEFAULT_DISCHARGE));
        let a = ck.positive("regen.valve_area_m2", r.valve_area_m2.unwrap_or(DEFAULT_VALVE_AREA));
        orifice_coefficient(d, a, density)
    });
    if regen_coefficient.is_some() && actuator.area_head < actuator.area_rod {
        ck.fail("regen: needs area_head_m2 >= area_rod_m2".into());
    }
    let pump = raw.pump.as_ref().map(|p| PumpSpec {
        supply: ck.pick(
            "pump",
            ("supply_m3_per_s", p.supply_m3_per_s),
            ("supply_L_per_min", p.supply_L_per_min),
            lpm_to_m3s(1.0),
            actuator.supply,
        ),
        relief_pump: ck.pick("pump", ("relief_pump_Pa", p.relief_pump_Pa), ("relief_pump_MPa", p.relief_pump_MPa), 1e6, actuator.relief_pump),
        u_b: p.u_b.as_ref().and_then(|s| ck.schedule("pump.u_b", Some(s), None)),
    });
    if let Some(p) = &pump {
        ck.schedule_within("pump.u_b", &p.u_b, 0.0, 1.0);
    }
    if regen_coefficient.is_some() && pump.is_some() {
        ck.fail("regen and pump: a regeneration valve at a shared pump is not supported".into());
    }

    let mut sc = Scenario {
        mode: raw.mode,
        actuator,
        regen_coefficient,
        pump,
        sweep: None,
        simulation: None,
        arms: Vec::new(),
        columns: raw.output.map(|o| o.columns),
    };
    match raw.mode {
        Mode::Sweep => {
            if raw.simulation.is_some() || !raw.arm.is_empty() {
                ck.fail("mode = \"sweep\" takes no [simulation] or [[arm]] blocks".into());
            }
            if sc.pump.as_ref().is_some_and(|p| p.u_b.is_some()) {
                ck.fail("pump.u_b: sweeps take u_b from [sweep]".into());
            }
            match &raw.sweep {
                Some(s) => sc.sweep = Some(build_sweep(ck, s, &sc)),
                None => ck.fail("sweep: missing [sweep] block".into()),
            }
        }
        Mode::Simulate => {
            if raw.sweep.is_some() {
                ck.fail("mode = \"simulate\" takes no [sweep] block".into());
            }
            match &raw.simulation {
                Some(s) => sc.simulation = Some(build_simulation(ck, s)),
                None => ck.fail("simulation: missing [simulation] block".into()),
            }
            if raw.arm.is_empty() {
                ck.fail("arm: at least one [[arm]] block is required".into());
            }
            if raw.arm.len() > 1 && sc.pump.is_none() {
                ck.fail("arm: several arms need a [pump] block".into());
            }
            if let Some(p) = &sc.pump {
                if p.u_b.is_none() {
                    ck.fail("pump.u_b: missing (the bleed opening of a shared pump)".into());
                }
            }
            for (j, a) in raw.arm.iter().enumerate() {
                if let Some(spec) = build_arm(ck, j + 1, a, &sc) {
                    sc.arms.push(spec);
                }
            }
        }
    }
    if let Some(cols) = &sc.columns {
        if ck.issues.is_empty() {
            let all = run::header(&sc);
            for c in cols {
                if !all.contains(c) {
                    ck.fail(format!("output.columns: unknown column {c:?} (available: {})", all.join(", ")));
                }
            }
        }
        if cols.is_empty() {
            ck.fail("output.columns: empty selection".into());
        }
    }
    sc
}

fn build_actuator(ck: &mut Check, a: &RawActuator) -> ActuatorParams {
    let r = ActuatorParams::reference();
    let discharge = a.discharge.unwrap_or(DEFAULT_DISCHARGE);
    let density = a.density_kg_per_m3.unwrap_or(DEFAULT_DENSITY);
    ck.positive("actuator.discharge", discharge);
    ck.positive("actuator.density_kg_per_m3", density);
    let area = a.valve_area_m2.unwrap_or(DEFAULT_VALVE_AREA);
    let coeff = |ck: &mut Check, key: &str, own: Option<f64>| {
        let x = own.unwrap_or(area);
        ck.positive(&format!("actuator.{key}"), x);
        orifice_coefficient(discharge, x, density)
    };
    let sec = "actuator";
    ActuatorParams {
        area_head: ck.positive("actuator.area_head_m2", a.area_head_m2.unwrap_or(r.area_head)),
        area_rod: ck.positive("actuator.area_rod_m2", a.area_rod_m2.unwrap_or(r.area_rod)),
        relief_head: ck.pick(sec, ("relief_head_Pa", a.relief_head_Pa), ("relief_head_MPa", a.relief_head_MPa), 1e6, r.relief_head),
        relief_rod: ck.pick(sec, ("relief_rod_Pa", a.relief_rod_Pa), ("relief_rod_MPa", a.relief_rod_MPa), 1e6, r.relief_rod),
        relief_pump: ck.pick(sec, ("relief_pump_Pa", a.relief_pump_Pa), ("relief_pump_MPa", a.relief_pump_MPa), 1e6, r.relief_pump),
        supply: ck.pick(
            sec,
            ("supply_m3_per_s", a.supply_m3_per_s),
            ("supply_L_per_min", a.supply_L_per_min),
            lpm_to_m3s(1.0),
            r.supply,
        ),
        c_ph: coeff(ck, "valve_area_ph_m2", a.valve_area_ph_m2),
        c_th: coeff(ck, "valve_area_th_m2", a.valve_area_th_m2),
        c_pr: coeff(ck, "valve_area_pr_m2", a.valve_area_pr_m2),
        c_tr: coeff(ck, "valve_area_tr_m2", a.valve_area_tr_m2),
        c_b: coeff(ck, "valve_area_b_m2", a.valve_area_b_m2),
    }
}

fn build_sweep(ck: &mut Check, s: &RawSweep, sc: &Scenario) -> SweepSpec {
    let v_min = ck.finite("sweep.v_min_m_per_s", s.v_min_m_per_s);
    let v_max = ck.finite("sweep.v_max_m_per_s", s.v_max_m_per_s);
    if v_min >= v_max {
        ck.fail(format!("sweep: v_min_m_per_s ({v_min}) must be below v_max_m_per_s ({v_max})"));
    }
    if s.n_points < 2 {
        ck.fail(format!("sweep.n_points: must be at least 2 (got {})", s.n_points));
    }
    let list = |ck: &mut Check, key: &str, xs: &[f64], lo: f64, hi: f64| {
        if xs.is_empty() {
            ck.fail(format!("sweep.{key}: empty list"));
        }
        for &x in xs {
            ck.within(&format!("sweep.{key}"), x, lo, hi);
        }
        xs.to_vec()
    };
    let u_c = list(ck, "u_c", &s.u_c, -1.0, 1.0);
    let u_b = list(ck, "u_b", &s.u_b, 0.0, 1.0);
    if u_c.contains(&0.0) && u_b.contains(&0.0) {
        ck.fail("sweep: u_c = 0 with u_b = 0 closes every valve".into());
    }
    let u_a = match (&s.u_a, sc.regen_coefficient) {
        (Some(xs), Some(_)) => list(ck, "u_a", xs, 0.0, 1.0),
        (Some(_), None) => {
            ck.fail("sweep.u_a: needs a [regen] block".into());
            Vec::new()
        }
        (None, Some(_)) => {
            ck.fail("sweep.u_a: missing (required with a [regen] block)".into());
            Vec::new()
        }
        (None, None) => Vec::new(),
    };
    let other_velocity = match (&s.other_velocity_m_per_s, &sc.pump) {
        (Some(xs), Some(_)) => list(ck, "other_velocity_m_per_s", xs, f64::MIN, f64::MAX),
        (Some(_), None) => {
            ck.fail("sweep.other_velocity_m_per_s: needs a [pump] block".into());
            Vec::new()
        }
        (None, Some(_)) => {
            ck.fail("sweep.other_velocity_m_per_s: missing (required with a [pump] block)".into());
            Vec::new()
        }
        (None, None) => Vec::new(),
    };
    SweepSpec { v_min, v_max, n_points: s.n_points.max(2) as usize, u_c, u_b, u_a, other_velocity }
}

fn build_simulation(ck: &mut Check, s: &RawSimulation) -> SimulationSpec {
    let h = ck.positive("simulation.h_s", s.h_s);
    let t_end = ck.positive("simulation.t_end_s", s.t_end_s);
    if h > 0.0 && t_end > 0.0 && (t_end / h).round() < 1.0 {
        ck.fail(format!("simulation: t_end_s ({t_end}) is shorter than one step"));
    }
    SimulationSpec {
        h,
        t_end,
        stiffness: ck.positive("simulation.stiffness_N_per_m", s.stiffness_N_per_m.unwrap_or(DEFAULT_STIFFNESS)),
        viscosity: ck.positive("simulation.viscosity_N_s_per_m", s.viscosity_N_s_per_m.unwrap_or(DEFAULT_VISCOSITY)),
    }
}

fn build_arm(ck: &mut Check, j: usize, a: &RawArm, sc: &Scenario) -> Option<ArmSpec> {
    let key = |k: &str| format!("arm[{j}].{k}");
    let r = ArmParams::reference();
    let deg = std::f64::consts::PI / 180.0;
    let arm = ArmParams {
        l_g: a.l_g_m.unwrap_or(r.l_g),
        l_m: a.l_m_m.unwrap_or(r.l_m),
        l_f: a.l_f_m.unwrap_or(r.l_f),
        alpha: ck.either((&key("alpha_rad"), a.alpha_rad), (&key("alpha_deg"), a.alpha_deg), deg).unwrap_or(r.alpha),
        mass: a.mass_kg.unwrap_or(r.mass),
        inertia: a.inertia_kg_m2.unwrap_or(r.inertia),
        gravity: a.gravity_m_per_s2.unwrap_or(r.gravity),
        base: a.base_m.unwrap_or(r.base),
    };
    if let Err(e) = arm.validate() {
        ck.fail(format!("arm[{j}]: {e}"));
    }
    let theta0 = ck.either((&key("theta0_rad"), a.theta0_rad), (&key("theta0_deg"), a.theta0_deg), deg).unwrap_or(0.0);
    ck.finite(&key("theta0"), theta0);
    let thetadot0 = ck.finite(&key("thetadot0_rad_per_s"), a.thetadot0_rad_per_s.unwrap_or(0.0));
    if arm.validate().is_ok() && arm.geometry(theta0).is_err() {
        ck.fail(format!("arm[{j}]: cylinder length is zero at the initial angle"));
    }

    let u_c = ck.schedule(&key("u_c"), a.u_c.as_ref(), Some(0.0));
    let u_b = match (&sc.pump, &a.u_b) {
        (Some(_), Some(_)) => {
            ck.fail(format!("{}: set the bleed opening on [pump] for shared-pump runs", key("u_b")));
            None
        }
        (Some(_), None) => None,
        (None, spec) => ck.schedule(&key("u_b"), spec.as_ref(), None),
    };
    let u_a = ck.schedule(&key("u_a"), a.u_a.as_ref(), Some(0.0));
    let f_ey = ck.schedule(&key("f_ey_N"), a.f_ey_N.as_ref(), Some(0.0));
    ck.schedule_within(&key("u_c"), &u_c, -1.0, 1.0);
    ck.schedule_within(&key("u_b"), &u_b, 0.0, 1.0);
    ck.schedule_within(&key("u_a"), &u_a, 0.0, 1.0);
    if sc.regen_coefficient.is_none() && u_a.as_ref().is_some_and(|s| s.range() != (0.0, 0.0)) {
        ck.fail(format!("{}: needs a [regen] block", key("u_a")));
    }
    // lever at rest with the bleed shut closes every valve, which no map covers
    if let (Some(c), Some(b)) = (&u_c, u_b.as_ref().or(sc.pump.as_ref().and_then(|p| p.u_b.as_ref()))) {
        if c.touches_zero() && b.touches_zero() {
            ck.fail(format!("arm[{j}]: u_c and u_b can both be 0, which closes every valve"));
        }
    }
    Some(ArmSpec { arm, theta0, thetadot0, u_c: u_c?, u_b, u_a: u_a?, f_ey: f_ey? })
}
