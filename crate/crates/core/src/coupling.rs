//! Virtual spring-damper between an actuator map and a multibody model.
//!
//! The rod displacement `p` is an internal state that follows the
//! actuator's velocity-force relation, while the mechanism sees the force
//! `f = K (p - ℓ) + B (ṗ - ℓ̇)` of a stiff viscoelastic element stretched
//! between `p` and the geometric actuator length `ℓ`. Both the ODE form and
//! the implicit Euler step reduce to one resolvent call.

use crate::actuator::{gamma, lambda, NormalizedInputs};
use crate::error::{Error, Result};
use crate::multipump::{lambda_mul_report, PumpNode, PumpSolution};
use crate::nonsmooth::Interval;
use crate::regen::{gamma_reg, lambda_reg, RegenInputs};

/// Default virtual stiffness, N/m.
pub const DEFAULT_STIFFNESS: f64 = 5e7;
/// Default virtual viscosity, N s/m.
pub const DEFAULT_VISCOSITY: f64 = 2.5e6;

/// An actuator model that can solve `beta v + fbar ∈ Γ(v)` for `v`.
pub trait Resolvent {
    fn resolve(&self, beta: f64, fbar: f64) -> Result<f64>;
    /// The force set `Γ(v)`, for consistency checks.
    fn forces(&self, v: f64) -> Result<Interval>;
}

impl Resolvent for NormalizedInputs {
    fn resolve(&self, beta: f64, fbar: f64) -> Result<f64> {
        lambda(self, beta, fbar)
    }
    fn forces(&self, v: f64) -> Result<Interval> {
        Ok(gamma(self, v))
    }
}

impl Resolvent for RegenInputs {
    fn resolve(&self, beta: f64, fbar: f64) -> Result<f64> {
        lambda_reg(self, beta, fbar)
    }
    fn forces(&self, v: f64) -> Result<Interval> {
        gamma_reg(self, v)
    }
}

/// Spring-damper state: rod displacement and the element constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub p: f64,
    stiffness: f64,
    viscosity: f64,
}

/// Damping and free force of one implicit step, before the resolvent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prepared {
    pub beta: f64,
    pub fbar: f64,
    h: f64,
}

/// Result of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// Rod velocity over the step.
    pub v: f64,
    /// Actuator force acting on the mechanism.
    pub f: f64,
    /// Rod displacement at the end of the step.
    pub p: f64,
}

impl Coupling {
    pub fn new(p: f64, stiffness: f64, viscosity: f64) -> Result<Self> {
        if !(stiffness > 0.0 && stiffness.is_finite()) || !(viscosity > 0.0 && viscosity.is_finite()) {
            return Err(Error::Config(format!(
                "coupling needs K > 0 and B > 0 (got K = {stiffness}, B = {viscosity})"
            )));
        }
        if !p.is_finite() {
            return Err(Error::Domain(format!("rod displacement must be finite (got {p})")));
        }
        Ok(Coupling { p, stiffness, viscosity })
    }

    /// Coupling with the default constants, started at the geometric length.
    pub fn at_length(ell: f64) -> Result<Self> {
        Coupling::new(ell, DEFAULT_STIFFNESS, DEFAULT_VISCOSITY)
    }

    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    /// `(ṗ, f)` of the continuous relaxation.
    pub fn ode_rhs<R: Resolvent + ?Sized>(&self, r: &R, ell: f64, elldot: f64) -> Result<(f64, f64)> {
        let spring = self.stiffness * (self.p - ell);
        let pdot = r.resolve(self.viscosity, spring - self.viscosity * elldot)?;
        Ok((pdot, spring + self.viscosity * (pdot - elldot)))
    }

    /// First half of [`Coupling::step`], for solving several couplings jointly.
    pub fn prepare(&self, ell_k: f64, ell_prev: f64, h: f64) -> Result<Prepared> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive (got {h})")));
        }
        Ok(Prepared {
            beta: self.viscosity + h * self.stiffness,
            fbar: self.stiffness * (self.p - ell_k) - self.viscosity * (ell_k - ell_prev) / h,
            h,
        })
    }

    /// Second half of [`Coupling::step`]: applies the velocity found for `prep`.
    pub fn finish(&mut self, prep: Prepared, v: f64) -> StepOutput {
        self.p += prep.h * v;
        StepOutput { v, f: prep.fbar + prep.beta * v, p: self.p }
    }

    /// Implicit Euler step against the length `ell_k`, with `ℓ̇` taken as
    /// the backward difference to `ell_prev`. Advances `p`.
    pub fn step<R: Resolvent + ?Sized>(&mut self, r: &R, ell_k: f64, ell_prev: f64, h: f64) -> Result<StepOutput> {
        let prep = self.prepare(ell_k, ell_prev, h)?;
        let v = r.resolve(prep.beta, prep.fbar)?;
        Ok(self.finish(prep, v))
    }
}

/// Steps several couplings whose actuators share one pump, with a single
/// joint resolvent call.
pub fn step_shared(
    node: &PumpNode,
    couplings: &mut [Coupling],
    ell_k: &[f64],
    ell_prev: &[f64],
    h: f64,
) -> Result<(Vec<StepOutput>, PumpSolution)> {
    if couplings.len() != node.len() || ell_k.len() != node.len() || ell_prev.len() != node.len() {
        return Err(Error::Domain(format!("expected {} couplings and lengths", node.len())));
    }
    let preps = couplings
        .iter()
        .zip(ell_k.iter().zip(ell_prev))
        .map(|(c, (&l, &lp))| c.prepare(l, lp, h))
        .collect::<Result<Vec<_>>>()?;
    let beta: Vec<f64> = preps.iter().map(|p| p.beta).collect();
    let fbar: Vec<f64> = preps.iter().map(|p| p.fbar).collect();
    let sol = lambda_mul_report(node, &beta, &fbar)?;
    let out = couplings.iter_mut().zip(preps).zip(&sol.velocities).map(|((c, p), &v)| c.finish(p, v)).collect();
    Ok((out, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::{normalize, ActuatorParams, ValveCommand};
    use crate::multipump::gamma_mul;
    use proptest::prelude::*;

    fn inputs(u_c: f64) -> NormalizedInputs {
        normalize(&ActuatorParams::reference(), &ValveCommand::from_lever(u_c, 0.2).unwrap()).unwrap()
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(Coupling::new(0.0, 0.0, 1.0).is_err());
        assert!(Coupling::new(0.0, 1.0, -1.0).is_err());
        let c = Coupling::at_length(1.2).unwrap();
        assert!(c.prepare(1.2, 1.2, 0.0).is_err());
    }

    #[test]
    fn closed_valves_at_rest() {
        let n = inputs(0.0);
        let c = Coupling::at_length(1.5).unwrap();
        assert_eq!(c.ode_rhs(&n, 1.5, 0.0).unwrap(), (0.0, 0.0));
        let mut c = Coupling::at_length(1.5).unwrap();
        for _ in 0..10 {
            let out = c.step(&n, 1.5, 1.5, 1e-3).unwrap();
            assert_eq!((out.v, out.f), (0.0, 0.0));
        }
        assert_eq!(c.p, 1.5);
    }

    #[test]
    fn closed_valves_lock_the_rod() {
        let n = inputs(0.0);
        let mut c = Coupling::at_length(1.5).unwrap();
        // a held 1 mm stretch is below both relief forces
        let out = c.step(&n, 1.501, 1.501, 1e-3).unwrap();
        assert_eq!(out.v, 0.0);
        let expected = DEFAULT_STIFFNESS * -0.001;
        assert!((out.f - expected).abs() <= 1e-9 * expected.abs());
        assert_eq!(c.p, 1.5);
    }

    #[test]
    fn relief_lets_the_rod_follow() {
        let n = inputs(0.0);
        let mut c = Coupling::at_length(1.5).unwrap();
        let h = 1e-3;
        let out = c.step(&n, 1.52, 1.5, h).unwrap();
        let prep_fbar = DEFAULT_STIFFNESS * -0.02 - DEFAULT_VISCOSITY * 0.02 / h;
        assert!(prep_fbar < -n.f_rm());
        let beta = DEFAULT_VISCOSITY + h * DEFAULT_STIFFNESS;
        assert!((out.v - (-n.f_rm() - prep_fbar) / beta).abs() <= 1e-12);
        assert!(out.v > 0.0);
        assert!((out.f + n.f_rm()).abs() <= 1e-6);
    }

    #[test]
    fn shared_step_matches_joint_resolvent() {
        let p = ActuatorParams::reference();
        let node = PumpNode::new(p.supply, p.relief_pump, p.c_b * 0.2, vec![inputs(0.5), inputs(-0.6)]).unwrap();
        let mut cs = [Coupling::at_length(1.6).unwrap(), Coupling::at_length(1.4).unwrap()];
        let (out, sol) = step_shared(&node, &mut cs, &[1.6, 1.4], &[1.6, 1.4], 1e-3).unwrap();
        let g = gamma_mul(&node, &sol.velocities).unwrap();
        for (o, g) in out.iter().zip(&g) {
            assert!(g.contains(o.f, 1e-6 * o.f.abs().max(1.0)));
        }
        assert!(out[0].v > 0.0 && out[1].v < 0.0);
        assert_eq!(cs[0].p, 1.6 + 1e-3 * out[0].v);
    }

    proptest! {
        #[test]
        fn step_force_is_on_the_map(u_c in -1.0f64..1.0, dp in -0.05f64..0.05, dl in -0.5f64..0.5, log_h in -5.0f64..-2.0) {
            prop_assume!(u_c != 0.0);
            let n = inputs(u_c);
            let h = 10f64.powf(log_h);
            let mut c = Coupling::at_length(1.5 + dp).unwrap();
            let out = c.step(&n, 1.5, 1.5 - dl * h, h).unwrap();
            let tol = 1e-9 * out.f.abs().max(1.0);
            let dv = 1e-12 * out.v.abs().max(1e-3);
            let g = crate::actuator::gamma_hull(&n, out.v - dv, out.v + dv);
            prop_assert!(g.contains(out.f, tol), "{} not in {:?}", out.f, g);
            let (pdot, f) = Coupling::at_length(1.5 + dp).unwrap().ode_rhs(&n, 1.5, dl).unwrap();
            let g = crate::actuator::gamma_hull(&n, pdot - 1e-12 * pdot.abs().max(1e-3), pdot + 1e-12 * pdot.abs().max(1e-3));
            prop_assert!(g.contains(f, 1e-9 * f.abs().max(1.0)));
        }
    }
}
