//! Planar one-link arm lifted by a hydraulic cylinder.
//!
//! The arm pivots at the origin. Its mass centre sits at `r_g`, the rod end
//! of the cylinder at `r_m` and the external load acts vertically at `r_f`.
//! The cylinder base is fixed at `base`. The cylinder force enters through
//! [`Coupling`], and the arm is integrated by semi-implicit Euler.

use crate::actuator::{normalize, ActuatorParams, NormalizedInputs, ValveCommand};
use crate::coupling::{step_shared, Coupling, Resolvent, StepOutput};
use crate::error::{Error, Result};
use crate::multipump::PumpNode;
use crate::regen::{v_a_hat, RegenInputs, RegenValve};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmParams {
    /// Pivot to mass centre, m.
    pub l_g: f64,
    /// Pivot to cylinder rod end, m.
    pub l_m: f64,
    /// Pivot to external load point, m.
    pub l_f: f64,
    /// Angular offset of the rod end behind the pivot, rad.
    pub alpha: f64,
    pub mass: f64,
    /// Inertia about the mass centre, kg m².
    pub inertia: f64,
    pub gravity: f64,
    /// Cylinder base anchor in the pivot frame, m.
    pub base: [f64; 2],
}

/// Positions at one arm angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub r_g: [f64; 2],
    pub r_m: [f64; 2],
    pub r_f: [f64; 2],
    /// Cylinder length `‖r_m - base‖`.
    pub ell: f64,
    /// Unit vector from the base to the rod end.
    pub axis: [f64; 2],
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl ArmParams {
    /// The excavator-like arm of the examples. The base anchor is not part of
    /// the published data; this one puts the cylinder nearly vertical below
    /// the rod end, so extending the rod lowers the arm.
    pub fn reference() -> Self {
        ArmParams {
            l_g: 1.5,
            l_m: 0.6,
            l_f: 3.0,
            alpha: std::f64::consts::FRAC_PI_4,
            mass: 2000.0,
            inertia: 5000.0,
            gravity: 9.81,
            base: [-0.6, -1.2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("l_g", self.l_g), ("l_m", self.l_m), ("l_f", self.l_f), ("mass", self.mass), ("inertia", self.inertia)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("arm {name} must be positive (got {x})")));
            }
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) || !self.alpha.is_finite() {
            return Err(Error::Config("arm gravity must be >= 0 and alpha finite".into()));
        }
        if !(self.base[0].is_finite() && self.base[1].is_finite()) {
            return Err(Error::Config("arm base anchor must be finite".into()));
        }
        Ok(())
    }

    pub fn geometry(&self, theta: f64) -> Result<Geometry> {
        let (c, s) = (theta.cos(), theta.sin());
        let r_m = [-self.l_m * (theta - self.alpha).cos(), -self.l_m * (theta - self.alpha).sin()];
        let d = [r_m[0] - self.base[0], r_m[1] - self.base[1]];
        let ell = d[0].hypot(d[1]);
        if !(ell > 0.0) {
            return Err(Error::Geometry);
        }
        Ok(Geometry {
            r_g: [self.l_g * c, self.l_g * s],
            r_m,
            r_f: [self.l_f * c, self.l_f * s],
            ell,
            axis: [d[0] / ell, d[1] / ell],
        })
    }

    /// Moment of inertia about the pivot.
    pub fn pivot_inertia(&self) -> f64 {
        self.inertia + self.mass * self.l_g * self.l_g
    }

    /// Angular acceleration under cylinder force `f` and vertical load `f_ey`.
    pub fn acceleration(&self, g: &Geometry, f: f64, f_ey: f64) -> f64 {
        let torque = cross(g.r_g, [0.0, -self.mass * self.gravity])
            + cross(g.r_m, [g.axis[0] * f, g.axis[1] * f])
            + cross(g.r_f, [0.0, f_ey]);
        torque / self.pivot_inertia()
    }

    /// Kinetic plus gravitational energy, zero potential at the pivot height.
    pub fn energy(&self, theta: f64, thetadot: f64) -> f64 {
        0.5 * self.pivot_inertia() * thetadot * thetadot + self.mass * self.gravity * self.l_g * theta.sin()
    }
}

/// Arm angle, angular velocity and the cylinder coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmState {
    pub theta: f64,
    pub thetadot: f64,
    pub coupling: Coupling,
    /// Cylinder length at the previous step.
    pub ell_prev: f64,
}

impl ArmState {
    /// Arm at rest-length coupling: `p` starts equal to the cylinder length.
    pub fn new(arm: &ArmParams, theta: f64, thetadot: f64, stiffness: f64, viscosity: f64) -> Result<Self> {
        let ell = arm.geometry(theta)?.ell;
        Ok(ArmState { theta, thetadot, coupling: Coupling::new(ell, stiffness, viscosity)?, ell_prev: ell })
    }
}

/// One row of a simulation: the state at the start of a step and the
/// cylinder velocity and force over it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmRecord {
    pub t: f64,
    pub theta: f64,
    pub thetadot: f64,
    pub v: f64,
    pub f: f64,
    pub p: f64,
    pub ell: f64,
}

impl ArmRecord {
    pub fn deflection(&self) -> f64 {
        self.p - self.ell
    }
}

fn record(t: f64, st: &ArmState, ell: f64, p: f64, out: &StepOutput) -> ArmRecord {
    ArmRecord { t, theta: st.theta, thetadot: st.thetadot, v: out.v, f: out.f, p, ell }
}

fn advance(arm: &ArmParams, st: &mut ArmState, g: &Geometry, f: f64, f_ey: f64, h: f64) {
    st.thetadot += h * arm.acceleration(g, f, f_ey);
    st.theta += h * st.thetadot;
    st.ell_prev = g.ell;
}

/// Advances the arm by one step of size `h`; returns the step's record
/// stamped with time `t`.
pub fn arm_step<R: Resolvent + ?Sized>(arm: &ArmParams, st: &mut ArmState, r: &R, f_ey: f64, t: f64, h: f64) -> Result<ArmRecord> {
    let g = arm.geometry(st.theta)?;
    let p = st.coupling.p;
    let out = st.coupling.step(r, g.ell, st.ell_prev, h)?;
    let rec = record(t, st, g.ell, p, &out);
    advance(arm, st, &g, out.f, f_ey, h);
    Ok(rec)
}

/// Operator inputs at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmInputs {
    /// Lever command in [-1, 1]; positive extends the rod.
    pub u_c: f64,
    pub u_b: f64,
    /// Regeneration valve opening; ignored without a regeneration valve.
    pub u_a: f64,
    /// Vertical external load at the arm tip, N.
    pub f_ey: f64,
}

/// One arm with its cylinder and coupling constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmSetup {
    pub arm: ArmParams,
    pub actuator: ActuatorParams,
    /// Regeneration valve coefficient, when the circuit has one.
    pub regen_coefficient: Option<f64>,
    pub stiffness: f64,
    pub viscosity: f64,
    pub theta0: f64,
    pub thetadot0: f64,
}

/// Time grid: `steps` steps of size `h` from 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub h: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(h: f64, t_end: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::Config(format!("time step and horizon must be positive (got {h}, {t_end})")));
        }
        Ok(TimeGrid { h, steps: (t_end / h).round() as usize })
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }
}

fn state_dump(st: &ArmState) -> String {
    format!("theta = {}, thetadot = {}, p = {}, ell = {}", st.theta, st.thetadot, st.coupling.p, st.ell_prev)
}

fn wrap(step: usize, t: f64, state: String, e: Error) -> Error {
    Error::Step { step, t, state, source: Box::new(e) }
}

/// Single-arm row with the regeneration flow, zero without regeneration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleRecord {
    pub arm: ArmRecord,
    pub v_a: f64,
}

fn single_step(setup: &ArmSetup, st: &mut ArmState, input: &ArmInputs, t: f64, h: f64) -> Result<SingleRecord> {
    let cmd = ValveCommand::from_lever(input.u_c, input.u_b)?;
    let n = normalize(&setup.actuator, &cmd)?;
    match setup.regen_coefficient {
        Some(c_a) => {
            let r = RegenInputs::new(n, RegenValve { c_a, u_a: input.u_a })?;
            let arm = arm_step(&setup.arm, st, &r, input.f_ey, t, h)?;
            Ok(SingleRecord { arm, v_a: v_a_hat(&r, arm.v)? })
        }
        None => Ok(SingleRecord { arm: arm_step(&setup.arm, st, &n, input.f_ey, t, h)?, v_a: 0.0 }),
    }
}

/// Runs one arm over the time grid with inputs sampled at each step start.
pub fn simulate<F>(setup: &ArmSetup, grid: TimeGrid, inputs: F) -> Result<Vec<SingleRecord>>
where
    F: Fn(f64) -> ArmInputs,
{
    setup.arm.validate()?;
    setup.actuator.validate()?;
    let mut st = ArmState::new(&setup.arm, setup.theta0, setup.thetadot0, setup.stiffness, setup.viscosity)?;
    let mut out = Vec::with_capacity(grid.steps);
    for k in 0..grid.steps {
        let t = grid.time(k);
        let before = state_dump(&st);
        let rec = single_step(setup, &mut st, &inputs(t), t, grid.h).map_err(|e| wrap(k, t, before, e))?;
        out.push(rec);
    }
    Ok(out)
}

/// Several arms whose cylinders share one pump.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedSetup {
    pub arms: Vec<ArmSetup>,
    pub supply: f64,
    pub relief_pump: f64,
    /// Bleed valve coefficient; the opening comes from the inputs of arm 0.
    pub c_b: f64,
}

/// Row of a shared-pump run.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedRecord {
    pub t: f64,
    pub arms: Vec<ArmRecord>,
    pub pressure: f64,
    pub relief_flow: f64,
}

/// Runs all arms of `setup` with one joint resolvent call per step.
/// `inputs(j, t)` gives the inputs of arm `j`.
pub fn simulate_shared<F>(setup: &SharedSetup, grid: TimeGrid, inputs: F) -> Result<Vec<SharedRecord>>
where
    F: Fn(usize, f64) -> ArmInputs,
{
    if setup.arms.is_empty() {
        return Err(Error::Config("shared-pump run needs at least one arm".into()));
    }
    let mut states = Vec::with_capacity(setup.arms.len());
    for a in &setup.arms {
        a.arm.validate()?;
        a.actuator.validate()?;
        if a.regen_coefficient.is_some() {
            return Err(Error::Config("regeneration valves are not supported at a shared pump".into()));
        }
        states.push(ArmState::new(&a.arm, a.theta0, a.thetadot0, a.stiffness, a.viscosity)?);
    }
    let mut out = Vec::with_capacity(grid.steps);
    for k in 0..grid.steps {
        let t = grid.time(k);
        let before = states.iter().map(state_dump).collect::<Vec<_>>().join("; ");
        let row = shared_step(setup, &mut states, &inputs, t, grid.h).map_err(|e| wrap(k, t, before, e))?;
        out.push(row);
    }
    Ok(out)
}

fn shared_step<F>(setup: &SharedSetup, states: &mut [ArmState], inputs: &F, t: f64, h: f64) -> Result<SharedRecord>
where
    F: Fn(usize, f64) -> ArmInputs,
{
    let ins: Vec<ArmInputs> = (0..setup.arms.len()).map(|j| inputs(j, t)).collect();
    let u_b = ins[0].u_b;
    let acts = setup
        .arms
        .iter()
        .zip(&ins)
        .map(|(a, i)| normalize(&a.actuator, &ValveCommand::from_lever(i.u_c, u_b)?))
        .collect::<Result<Vec<NormalizedInputs>>>()?;
    let node = PumpNode::new(setup.supply, setup.relief_pump, setup.c_b * u_b, acts)?;
    let geoms = setup.arms.iter().zip(states.iter()).map(|(a, s)| a.arm.geometry(s.theta)).collect::<Result<Vec<_>>>()?;
    let ell: Vec<f64> = geoms.iter().map(|g| g.ell).collect();
    let ell_prev: Vec<f64> = states.iter().map(|s| s.ell_prev).collect();
    let p_before: Vec<f64> = states.iter().map(|s| s.coupling.p).collect();
    let mut couplings: Vec<Coupling> = states.iter().map(|s| s.coupling).collect();
    let (outs, sol) = step_shared(&node, &mut couplings, &ell, &ell_prev, h)?;
    let mut arms = Vec::with_capacity(states.len());
    for (j, st) in states.iter_mut().enumerate() {
        arms.push(record(t, st, ell[j], p_before[j], &outs[j]));
        st.coupling = couplings[j];
        advance(&setup.arms[j].arm, st, &geoms[j], outs[j].f, ins[j].f_ey, h);
    }
    Ok(SharedRecord { t, arms, pressure: sol.pressure, relief_flow: sol.relief_flow })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{DEFAULT_STIFFNESS, DEFAULT_VISCOSITY};

    fn setup(theta0: f64) -> ArmSetup {
        ArmSetup {
            arm: ArmParams::reference(),
            actuator: ActuatorParams::reference(),
            regen_coefficient: None,
            stiffness: DEFAULT_STIFFNESS,
            viscosity: DEFAULT_VISCOSITY,
            theta0,
            thetadot0: 0.0,
        }
    }

    #[test]
    fn geometry_and_torque_arm() {
        let arm = ArmParams::reference();
        let g = arm.geometry(0.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2 * 0.6;
        assert!((g.r_m[0] + s).abs() < 1e-15 && (g.r_m[1] - s).abs() < 1e-15);
        // the cylinder torque per unit force equals dℓ/dθ (virtual work)
        let dt = 1e-7;
        let dl = (arm.geometry(dt).unwrap().ell - arm.geometry(-dt).unwrap().ell) / (2.0 * dt);
        let per_force = cross(g.r_m, g.axis);
        assert!((per_force - dl).abs() < 1e-7);
        assert!(dl < 0.0);
        let mut bad = arm;
        bad.base = g.r_m;
        assert_eq!(bad.geometry(0.0), Err(Error::Geometry));
    }

    #[test]
    fn closed_valves_hold_the_arm() {
        let s = setup(0.3);
        let recs = simulate(&s, TimeGrid::new(1e-3, 2.0).unwrap(), |t| ArmInputs {
            u_c: 0.0,
            u_b: 0.3,
            u_a: 0.0,
            f_ey: 1e4 * (4.0 * std::f64::consts::PI * t).sin(),
        })
        .unwrap();
        for r in &recs {
            assert!((r.arm.theta - 0.3).abs() < 1e-2);
            assert!(r.arm.deflection().abs() < 0.05);
        }
    }

    #[test]
    fn locked_arm_dissipates() {
        let s = setup(0.2);
        let mut st = ArmState::new(&s.arm, s.theta0, 0.05, s.stiffness, s.viscosity).unwrap();
        let n = normalize(&s.actuator, &ValveCommand::from_lever(0.0, 0.3).unwrap()).unwrap();
        let energy = |st: &ArmState| {
            let ell = s.arm.geometry(st.theta).unwrap().ell;
            s.arm.energy(st.theta, st.thetadot) + 0.5 * s.stiffness * (st.coupling.p - ell).powi(2)
        };
        let e0 = energy(&st);
        let mut prev = e0;
        for k in 0..3000 {
            arm_step(&s.arm, &mut st, &n, 0.0, k as f64 * 1e-3, 1e-3).unwrap();
            let e = energy(&st);
            assert!(e <= prev + 1e-6 * e0.abs(), "step {k}: {e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn retract_lifts_and_extend_lowers() {
        let s = setup(0.0);
        let grid = TimeGrid::new(1e-3, 1.0).unwrap();
        let up = simulate(&s, grid, |_| ArmInputs { u_c: -0.5, u_b: 0.3, u_a: 0.0, f_ey: 0.0 }).unwrap();
        let down = simulate(&s, grid, |_| ArmInputs { u_c: 0.5, u_b: 0.3, u_a: 0.0, f_ey: 0.0 }).unwrap();
        assert!(up.last().unwrap().arm.theta > 0.05);
        assert!(down.last().unwrap().arm.theta < -0.05);
    }

    #[test]
    fn length_changes_follow_the_angle() {
        let s = setup(0.0);
        let recs = simulate(&s, TimeGrid::new(1e-3, 1.0).unwrap(), |_| ArmInputs { u_c: -0.7, u_b: 0.3, u_a: 0.0, f_ey: 0.0 }).unwrap();
        for w in recs.windows(2) {
            let (a, b) = (&w[0].arm, &w[1].arm);
            assert!((b.ell - a.ell).abs() <= s.arm.l_m * (b.theta - a.theta).abs() + 1e-12);
        }
    }

    #[test]
    fn regen_circuit_runs() {
        let mut s = setup(30f64.to_radians());
        s.regen_coefficient = Some(crate::actuator::orifice_coefficient(0.6, 1e-4, 850.0));
        let recs = simulate(&s, TimeGrid::new(1e-3, 1.0).unwrap(), |t| ArmInputs {
            u_c: if t >= 0.5 { 0.5 } else { 0.0 },
            u_b: 0.2,
            u_a: 0.5,
            f_ey: 0.0,
        })
        .unwrap();
        assert!(recs.iter().any(|r| r.v_a > 0.0));
    }

    #[test]
    fn step_failure_reports_the_step() {
        let s = setup(0.0);
        let err = simulate(&s, TimeGrid::new(1e-3, 0.01).unwrap(), |t| ArmInputs {
            u_c: 0.0,
            u_b: if t > 0.004 { 0.0 } else { 0.3 },
            u_a: 0.0,
            f_ey: 0.0,
        })
        .unwrap_err();
        assert!(matches!(err, Error::Step { step: 5, .. }), "{err:?}");
    }

    #[test]
    fn shared_pump_runs() {
        let p = ActuatorParams::reference();
        let sh = SharedSetup { arms: vec![setup(-0.5), setup(0.35)], supply: p.supply, relief_pump: p.relief_pump, c_b: p.c_b };
        let recs = simulate_shared(&sh, TimeGrid::new(1e-3, 0.5).unwrap(), |j, _| ArmInputs {
            u_c: if j == 0 { -0.6 } else { 0.0 },
            u_b: 0.2,
            u_a: 0.0,
            f_ey: 0.0,
        })
        .unwrap();
        let last = recs.last().unwrap();
        assert!(last.arms[0].theta > -0.5);
        assert!((last.arms[1].theta - 0.35).abs() < 1e-2);
    }
}
