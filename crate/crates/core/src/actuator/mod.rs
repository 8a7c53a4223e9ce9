//! Quasistatic model of a cylinder driven by a four-valve independent
//! metering circuit with bleed, pump check, pump relief, chamber relief and
//! suction check valves.
//!
//! The model maps the rod velocity `v` (positive when extending) to the set
//! of forces `f` (positive when compressing the rod) that are consistent with
//! steady orifice flow in every valve. See [`gamma`] for the forward map and
//! [`lambda`] for its resolvent.

mod map;
mod valves;

pub use map::{gamma, gamma_bounds_at_zero, gamma_hull, lambda, Segment};
pub(crate) use map::{bounds_at_zero, gamma_head_extend, gamma_rod_extend, gamma_tracked, lambda_with_supply, Supply};
pub use valves::{valve_states, ValveState, ValveStateReport};

use crate::error::{Error, Result};
use crate::nonsmooth::Interval;

/// A set-valued actuator force in newtons.
pub type ForceInterval = Interval;

/// Converts a flowrate from L/min to m³/s.
pub fn lpm_to_m3s(q: f64) -> f64 {
    q / 60_000.0
}

/// Orifice coefficient `C a sqrt(2 / rho)` in m³/(s·√Pa).
pub fn orifice_coefficient(discharge: f64, area: f64, density: f64) -> f64 {
    discharge * area * (2.0 / density).sqrt()
}

/// Geometry, valve coefficients, relief limits and pump supply of one circuit.
///
/// Pressures in Pa, areas in m², flowrate in m³/s, coefficients in
/// m³/(s·√Pa).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorParams {
    pub area_head: f64,
    pub area_rod: f64,
    pub relief_head: f64,
    pub relief_rod: f64,
    pub relief_pump: f64,
    pub supply: f64,
    pub c_ph: f64,
    pub c_th: f64,
    pub c_pr: f64,
    pub c_tr: f64,
    pub c_b: f64,
}

impl ActuatorParams {
    /// Cylinder used throughout the examples: 0.024/0.012 m² areas,
    /// 42/40/36 MPa relief limits, 500 L/min supply and all five valves with
    /// discharge coefficient 0.6, 1 cm² maximum opening and 850 kg/m³ oil.
    pub fn reference() -> Self {
        let c = orifice_coefficient(0.6, 1e-4, 850.0);
        ActuatorParams {
            area_head: 0.024,
            area_rod: 0.012,
            relief_head: 42e6,
            relief_rod: 40e6,
            relief_pump: 36e6,
            supply: lpm_to_m3s(500.0),
            c_ph: c,
            c_th: c,
            c_pr: c,
            c_tr: c,
            c_b: c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("area_head", self.area_head),
            ("area_rod", self.area_rod),
            ("relief_head", self.relief_head),
            ("relief_rod", self.relief_rod),
            ("relief_pump", self.relief_pump),
            ("supply", self.supply),
            ("c_ph", self.c_ph),
            ("c_th", self.c_th),
            ("c_pr", self.c_pr),
            ("c_tr", self.c_tr),
            ("c_b", self.c_b),
        ];
        let bad: Vec<_> = fields
            .iter()
            .filter(|(_, x)| !(x.is_finite() && *x > 0.0))
            .map(|(name, x)| format!("{name} = {x}"))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(format!("actuator parameters must be positive: {}", bad.join(", "))))
        }
    }

    /// Head-side relief force `A_h P_hM`.
    pub fn head_force_limit(&self) -> f64 {
        self.area_head * self.relief_head
    }

    /// Rod-side relief force `A_r P_rM`.
    pub fn rod_force_limit(&self) -> f64 {
        self.area_rod * self.relief_rod
    }
}

/// Which of the three admissible command sets a valve vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// All four main valves closed, bleed open (U0).
    Hold,
    /// Pump-to-head and/or rod-to-tank open, the other two closed (U+).
    Extend,
    /// Pump-to-rod and/or head-to-tank open, the other two closed (U−).
    Retract,
}

impl Regime {
    /// Classifies `[u_ph, u_tr, u_pr, u_th, u_b]`.
    pub fn classify(u: [f64; 5]) -> Result<Regime> {
        let [ph, tr, pr, th, b] = u;
        let extend_open = ph != 0.0 || tr != 0.0;
        let retract_open = pr != 0.0 || th != 0.0;
        match (extend_open, retract_open) {
            (false, false) if b > 0.0 => Ok(Regime::Hold),
            (true, false) if b >= 0.0 => Ok(Regime::Extend),
            (false, true) if b >= 0.0 => Ok(Regime::Retract),
            _ => Err(Error::Regime(u)),
        }
    }
}

/// Opening ratios of the five control valves, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValveCommand {
    u_ph: f64,
    u_tr: f64,
    u_pr: f64,
    u_th: f64,
    u_b: f64,
    regime: Regime,
}

impl ValveCommand {
    pub fn new(u_ph: f64, u_tr: f64, u_pr: f64, u_th: f64, u_b: f64) -> Result<Self> {
        let u = [u_ph, u_tr, u_pr, u_th, u_b];
        if let Some(x) = u.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("valve opening {x} outside [0, 1]")));
        }
        let regime = Regime::classify(u)?;
        Ok(ValveCommand { u_ph, u_tr, u_pr, u_th, u_b, regime })
    }

    /// Maps a single lever command `u_c ∈ [-1, 1]` onto the four main valves:
    /// `u_ph = u_tr = max(u_c, 0)`, `u_pr = u_th = max(-u_c, 0)`.
    pub fn from_lever(u_c: f64, u_b: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&u_c) {
            return Err(Error::Domain(format!("lever command {u_c} outside [-1, 1]")));
        }
        let ext = u_c.max(0.0);
        let ret = (-u_c).max(0.0);
        ValveCommand::new(ext, ext, ret, ret, u_b)
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.u_ph, self.u_tr, self.u_pr, self.u_th, self.u_b]
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn u_b(&self) -> f64 {
        self.u_b
    }
}

/// Valve openings scaled by the orifice coefficients and chamber areas.
///
/// `uh_ph = c_ph u_ph / A_h^{3/2}` (same for `th`), `uh_pr = c_pr u_pr / A_r^{3/2}`
/// (same for `tr`) and `bleed = c_b u_b`. With this scaling a chamber flow
/// divided by its area is `uh * R(force drop)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedInputs {
    pub(crate) uh_ph: f64,
    pub(crate) uh_tr: f64,
    pub(crate) uh_pr: f64,
    pub(crate) uh_th: f64,
    pub(crate) bleed: f64,
    pub(crate) regime: Regime,
    pub(crate) params: ActuatorParams,
}

/// Builds the normalized inputs for a validated command.
pub fn normalize(params: &ActuatorParams, cmd: &ValveCommand) -> Result<NormalizedInputs> {
    params.validate()?;
    let head = params.area_head.powf(1.5);
    let rod = params.area_rod.powf(1.5);
    let n = NormalizedInputs {
        uh_ph: params.c_ph * cmd.u_ph / head,
        uh_tr: params.c_tr * cmd.u_tr / rod,
        uh_pr: params.c_pr * cmd.u_pr / rod,
        uh_th: params.c_th * cmd.u_th / head,
        bleed: params.c_b * cmd.u_b,
        regime: cmd.regime,
        params: *params,
    };
    // scaling by positive coefficients cannot change the sign pattern
    debug_assert_eq!(
        Regime::classify([n.uh_ph, n.uh_tr, n.uh_pr, n.uh_th, n.bleed]).ok(),
        Some(n.regime)
    );
    Ok(n)
}

impl NormalizedInputs {
    pub fn new(params: &ActuatorParams, cmd: &ValveCommand) -> Result<Self> {
        normalize(params, cmd)
    }

    pub fn uh_ph(&self) -> f64 {
        self.uh_ph
    }
    pub fn uh_tr(&self) -> f64 {
        self.uh_tr
    }
    pub fn uh_pr(&self) -> f64 {
        self.uh_pr
    }
    pub fn uh_th(&self) -> f64 {
        self.uh_th
    }
    /// `U_b = c_b u_b`.
    pub fn bleed(&self) -> f64 {
        self.bleed
    }
    pub fn regime(&self) -> Regime {
        self.regime
    }
    pub fn params(&self) -> &ActuatorParams {
        &self.params
    }
    pub fn f_hm(&self) -> f64 {
        self.params.head_force_limit()
    }
    pub fn f_rm(&self) -> f64 {
        self.params.rod_force_limit()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_examples() {
        let p = ActuatorParams::reference();
        let n = normalize(&p, &ValveCommand::new(0.0, 0.0, 0.0, 0.0, 0.2).unwrap()).unwrap();
        assert_eq!(n.regime(), Regime::Hold);
        let n = normalize(&p, &ValveCommand::new(0.5, 0.5, 0.0, 0.0, 0.2).unwrap()).unwrap();
        assert_eq!(n.regime(), Regime::Extend);
        assert!(matches!(ValveCommand::new(0.5, 0.0, 0.5, 0.0, 0.2), Err(Error::Regime(_))));
        // every valve shut, bleed included
        assert!(matches!(ValveCommand::new(0.0, 0.0, 0.0, 0.0, 0.0), Err(Error::Regime(_))));
        assert!(matches!(ValveCommand::new(1.2, 0.0, 0.0, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn lever_mapping() {
        let c = ValveCommand::from_lever(-0.5, 0.2).unwrap();
        assert_eq!(c.as_array(), [0.0, 0.0, 0.5, 0.5, 0.2]);
        assert_eq!(c.regime(), Regime::Retract);
        assert_eq!(ValveCommand::from_lever(0.0, 0.3).unwrap().regime(), Regime::Hold);
        assert!(ValveCommand::from_lever(0.0, 0.0).is_err());
    }

    #[test]
    fn normalization_scaling() {
        let p = ActuatorParams::reference();
        let n = normalize(&p, &ValveCommand::new(0.5, 0.25, 0.0, 0.0, 0.2).unwrap()).unwrap();
        assert!((n.uh_ph() - p.c_ph * 0.5 / 0.024f64.powf(1.5)).abs() < 1e-18);
        assert!((n.uh_tr() - p.c_tr * 0.25 / 0.012f64.powf(1.5)).abs() < 1e-18);
        assert_eq!(n.bleed(), p.c_b * 0.2);
        assert_eq!(n.f_hm(), 0.024 * 42e6);
        assert_eq!(n.f_rm(), 0.012 * 40e6);
    }

    #[test]
    fn rejects_nonpositive_params() {
        let mut p = ActuatorParams::reference();
        p.area_rod = 0.0;
        let cmd = ValveCommand::from_lever(0.5, 0.2).unwrap();
        assert!(normalize(&p, &cmd).is_err());
    }
}
