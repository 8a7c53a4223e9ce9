//! Several actuators fed from one pump through a common junction.
//!
//! At a fixed junction pressure `P` each actuator follows the map of a
//! single actuator with the pump relief pressure replaced by `P` and the
//! flow-limited segments removed. The pressure itself is set by the flow
//! balance at the junction: pump flow = bleed + actuator draws + relief.

use crate::actuator::{bounds_at_zero, gamma_tracked, lambda_with_supply, NormalizedInputs, Regime, Supply};
use crate::error::{Error, Result};
use crate::nonsmooth::{r_signed, s_signed, Interval};
use crate::rootfind::{find_root_monotone, RootConfig};

/// The shared pump and the actuators hanging off it.
///
/// Supply flow, relief pressure and bleed of the individual actuator
/// parameter sets are ignored; the node's values apply.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpNode {
    pub supply: f64,
    pub relief_pump: f64,
    /// `U_b = c_b u_b`, m³/(s √Pa).
    pub bleed: f64,
    pub actuators: Vec<NormalizedInputs>,
}

impl PumpNode {
    pub fn new(supply: f64, relief_pump: f64, bleed: f64, actuators: Vec<NormalizedInputs>) -> Result<Self> {
        if actuators.is_empty() {
            return Err(Error::Config("pump node needs at least one actuator".into()));
        }
        if !(supply > 0.0 && supply.is_finite()) || !(relief_pump > 0.0 && relief_pump.is_finite()) {
            return Err(Error::Config(format!(
                "pump node needs positive supply and relief pressure (got {supply}, {relief_pump})"
            )));
        }
        if !(bleed >= 0.0 && bleed.is_finite()) {
            return Err(Error::Config(format!("pump node bleed must be >= 0 (got {bleed})")));
        }
        Ok(PumpNode { supply, relief_pump, bleed, actuators })
    }

    pub fn len(&self) -> usize {
        self.actuators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actuators.is_empty()
    }

    fn check_len(&self, k: usize) -> Result<()> {
        if k != self.actuators.len() {
            return Err(Error::Domain(format!("expected {} values, got {k}", self.actuators.len())));
        }
        Ok(())
    }

    fn cfg(&self) -> RootConfig {
        RootConfig { abs_tol: 1e-15 * self.relief_pump, res_tol: 1e-13 * self.supply, max_iter: 400, accelerate: true }
    }

    fn surplus(&self, pressure: f64, draw: f64) -> f64 {
        self.supply - self.bleed * r_signed(pressure) - draw
    }

    // P_M when the balance leaves flow for the relief, else the root on
    // [0, P_M] of the non-increasing surplus.
    fn settle<F: Fn(f64) -> f64>(&self, surplus: F) -> Result<f64> {
        if surplus(self.relief_pump) >= 0.0 {
            return Ok(self.relief_pump);
        }
        if surplus(0.0) <= 0.0 {
            return Err(Error::Overdrawn { shortfall: -surplus(0.0) });
        }
        find_root_monotone(surplus, 0.0, self.relief_pump, &self.cfg())
    }
}

fn check_pressure(pressure: f64) -> Result<()> {
    if !(pressure >= 0.0 && pressure.is_finite()) {
        return Err(Error::Domain(format!("junction pressure must be finite and >= 0 (got {pressure})")));
    }
    Ok(())
}

/// Forces consistent with rod velocity `v` at junction pressure `pressure`.
pub fn gamma_hat(n: &NormalizedInputs, pressure: f64, v: f64) -> Result<Interval> {
    check_pressure(pressure)?;
    Ok(gamma_tracked(n, Supply::Pressure(pressure), v).0)
}

/// Resolvent of [`gamma_hat`] at fixed pressure.
pub fn lambda_hat(n: &NormalizedInputs, pressure: f64, beta: f64, fbar: f64) -> Result<f64> {
    check_pressure(pressure)?;
    lambda_with_supply(n, Supply::Pressure(pressure), beta, fbar)
}

/// Flow the actuator draws from the junction at pressure `pressure`, rod
/// velocity `v` and force `f`. Zero at rest and under a hold command.
pub fn q_p_hat(n: &NormalizedInputs, pressure: f64, v: f64, f: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let p = n.params();
    let floor = |u: f64| (u * u).max(1e-30);
    match n.regime() {
        Regime::Hold => 0.0,
        Regime::Extend => {
            let rod = (s_signed(v) / floor(n.uh_tr())).clamp(0.0, n.f_rm());
            p.area_head * n.uh_ph() * r_signed(p.area_head * pressure - rod - f).max(0.0)
        }
        Regime::Retract => {
            let head = (-s_signed(v) / floor(n.uh_th())).clamp(0.0, n.f_hm());
            p.area_rod * n.uh_pr() * r_signed(p.area_rod * pressure - head + f).max(0.0)
        }
    }
}

// At rest the draw is zero whatever force the interval holds.
fn draw_at(n: &NormalizedInputs, pressure: f64, v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let f = gamma_tracked(n, Supply::Pressure(pressure), v).0.lo;
    q_p_hat(n, pressure, v, f)
}

/// Junction flow surplus `Q - U_b R(P) - Σ q_j` at given rod velocities.
pub fn xi_p(node: &PumpNode, pressure: f64, v: &[f64]) -> Result<f64> {
    node.check_len(v.len())?;
    let draw: f64 = node.actuators.iter().zip(v).map(|(n, &v)| draw_at(n, pressure, v)).sum();
    Ok(node.surplus(pressure, draw))
}

/// Junction pressure at given rod velocities.
pub fn solve_pressure(node: &PumpNode, v: &[f64]) -> Result<f64> {
    node.check_len(v.len())?;
    node.settle(|p| {
        let draw: f64 = node.actuators.iter().zip(v).map(|(n, &v)| draw_at(n, p, v)).sum();
        node.surplus(p, draw)
    })
}

/// Pressure, motion and flows at the junction after a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpSolution {
    pub pressure: f64,
    pub velocities: Vec<f64>,
    pub forces: Vec<Interval>,
    pub draws: Vec<f64>,
    pub bleed_flow: f64,
    /// Flow through the pump relief valve; nonzero only at `P = P_M`.
    pub relief_flow: f64,
}

fn assemble(node: &PumpNode, pressure: f64, velocities: Vec<f64>, forces: Vec<Interval>) -> PumpSolution {
    let draws: Vec<f64> = node
        .actuators
        .iter()
        .zip(velocities.iter().zip(&forces))
        .map(|(n, (&v, f))| if v == 0.0 { 0.0 } else { q_p_hat(n, pressure, v, f.lo) })
        .collect();
    let bleed_flow = node.bleed * r_signed(pressure);
    let relief_flow = if pressure >= node.relief_pump {
        (node.supply - bleed_flow - draws.iter().sum::<f64>()).max(0.0)
    } else {
        0.0
    };
    PumpSolution { pressure, velocities, forces, draws, bleed_flow, relief_flow }
}

/// [`gamma_mul`] with pressure and flows.
pub fn gamma_mul_report(node: &PumpNode, v: &[f64]) -> Result<PumpSolution> {
    let pressure = solve_pressure(node, v)?;
    let forces = node.actuators.iter().zip(v).map(|(n, &v)| gamma_tracked(n, Supply::Pressure(pressure), v).0).collect();
    Ok(assemble(node, pressure, v.to_vec(), forces))
}

/// Force sets of all actuators at the pressure their velocities induce.
pub fn gamma_mul(node: &PumpNode, v: &[f64]) -> Result<Vec<Interval>> {
    gamma_mul_report(node, v).map(|s| s.forces)
}

fn resolve_at(node: &PumpNode, pressure: f64, beta: &[f64], fbar: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut draw = 0.0;
    let mut v = Vec::with_capacity(beta.len());
    for ((n, &b), &fb) in node.actuators.iter().zip(beta).zip(fbar) {
        let vj = lambda_with_supply(n, Supply::Pressure(pressure), b, fb)?;
        draw += q_p_hat(n, pressure, vj, fb + b * vj);
        v.push(vj);
    }
    Ok((v, draw))
}

/// [`lambda_mul`] with pressure and flows.
pub fn lambda_mul_report(node: &PumpNode, beta: &[f64], fbar: &[f64]) -> Result<PumpSolution> {
    node.check_len(beta.len())?;
    node.check_len(fbar.len())?;
    if let Some(b) = beta.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        return Err(Error::Domain(format!("lambda_mul requires finite beta > 0 (got {b})")));
    }
    // a failed inner resolvent poisons the residual; surface it afterwards
    let residual = |p: f64| match resolve_at(node, p, beta, fbar) {
        Ok((_, draw)) => node.surplus(p, draw),
        Err(_) => f64::NAN,
    };
    let pressure = node.settle(residual)?;
    let (v, _) = resolve_at(node, pressure, beta, fbar)?;
    let forces = v.iter().zip(beta.iter().zip(fbar)).map(|(&v, (&b, &fb))| Interval::singleton(fb + b * v)).collect();
    Ok(assemble(node, pressure, v, forces))
}

/// Velocities `v` with `beta_j v_j + fbar_j ∈ Γ_mul(v)_j` for all actuators.
pub fn lambda_mul(node: &PumpNode, beta: &[f64], fbar: &[f64]) -> Result<Vec<f64>> {
    lambda_mul_report(node, beta, fbar).map(|s| s.velocities)
}

/// Rest interval of one actuator at junction pressure `pressure`.
pub fn gamma_hat_bounds_at_zero(n: &NormalizedInputs, pressure: f64) -> Result<Interval> {
    check_pressure(pressure)?;
    Ok(bounds_at_zero(n, Supply::Pressure(pressure)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::{gamma, normalize, ActuatorParams, Segment, ValveCommand};

    use proptest::prelude::*;

    fn inputs(u_c: f64, u_b: f64) -> NormalizedInputs {
        normalize(&ActuatorParams::reference(), &ValveCommand::from_lever(u_c, u_b).unwrap()).unwrap()
    }

    fn node(cmds: &[f64], u_b: f64) -> PumpNode {
        let p = ActuatorParams::reference();
        PumpNode::new(p.supply, p.relief_pump, p.c_b * u_b, cmds.iter().map(|&u| inputs(u, u_b)).collect()).unwrap()
    }

    #[test]
    fn hold_rest_interval() {
        let n = inputs(0.0, 0.2);
        for p in [0.0, 1e6, 36e6] {
            assert_eq!(gamma_hat(&n, p, 0.0).unwrap(), Interval::hull(-n.f_rm(), n.f_hm()));
        }
    }

    #[test]
    fn fixed_pressure_segment() {
        let n = inputs(0.5, 0.2);
        let (p, v) = (10e6, 0.01);
        let expected = n.params().area_head * p - s_signed(v) / n.uh_ph().powi(2) - s_signed(v) / n.uh_tr().powi(2);
        let got = gamma_hat(&n, p, v).unwrap();
        assert!((got.lo - expected).abs() <= 1e-9 * expected.abs());
    }

    #[test]
    fn relief_pressure_matches_single_map_off_flow_segments() {
        let mut checked = 0;
        for u_c in [-0.8, -0.3, 0.3, 0.8] {
            for u_b in [0.05, 0.2, 1.0] {
                let n = inputs(u_c, u_b);
                let p = n.params();
                for i in -100..=100 {
                    let v = i as f64 * 0.01;
                    // flow-limited force on the supplied chamber, compared with the
                    // relief-limited one; the flow limit must not bind
                    let u2 = n.bleed() * n.bleed();
                    let free = if v > 0.0 {
                        -p.area_head.powi(3) * s_signed(v - p.supply / p.area_head) / u2 >= p.area_head * p.relief_pump
                    } else if v < 0.0 {
                        -p.area_rod.powi(3) * s_signed(v + p.supply / p.area_rod) / u2 <= -p.area_rod * p.relief_pump
                    } else {
                        false
                    };
                    if !free {
                        continue;
                    }
                    assert_eq!(gamma_hat(&n, p.relief_pump, v).unwrap(), gamma(&n, v), "u_c = {u_c}, v = {v}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 100, "{checked}");
    }

    #[test]
    fn draw_examples() {
        let n = inputs(0.5, 0.2);
        assert_eq!(q_p_hat(&n, 10e6, 0.0, 1e5), 0.0);
        assert_eq!(q_p_hat(&inputs(0.0, 0.2), 10e6, 0.1, 0.0), 0.0);
        // head chamber above the junction pressure: check valve shuts
        assert_eq!(q_p_hat(&n, 1e6, 0.01, 5e5), 0.0);
        // on the fixed-pressure segment the draw is the displaced volume
        let v = 0.01;
        let f = gamma_hat(&n, 10e6, v).unwrap().lo;
        let q = q_p_hat(&n, 10e6, v, f);
        assert!((q - n.params().area_head * v).abs() <= 1e-9 * q);
    }

    #[test]
    fn closed_circuit_hits_relief() {
        let nd = node(&[0.0, 0.0], 0.2);
        assert!(xi_p(&nd, nd.relief_pump, &[0.0, 0.0]).unwrap() >= 0.0);
        assert_eq!(solve_pressure(&nd, &[0.0, 0.0]).unwrap(), nd.relief_pump);
        let s = gamma_mul_report(&nd, &[0.0, 0.0]).unwrap();
        for (f, n) in s.forces.iter().zip(&nd.actuators) {
            assert_eq!(*f, Interval::hull(-n.f_rm(), n.f_hm()));
        }
        assert!(s.relief_flow > 0.0);
        assert_eq!(lambda_mul(&nd, &[1e6, 1e6], &[1e4, -2e4]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn wide_bleed_balances_below_relief() {
        let p = ActuatorParams::reference();
        let bleed = 100.0 * p.c_b;
        let nd = PumpNode::new(p.supply, p.relief_pump, bleed, vec![inputs(0.0, 1.0)]).unwrap();
        let pr = solve_pressure(&nd, &[0.0]).unwrap();
        let expected = s_signed(p.supply / bleed);
        assert!(pr < p.relief_pump);
        assert!((pr - expected).abs() <= 1e-9 * expected);
        assert!(xi_p(&nd, pr, &[0.0]).unwrap().abs() <= 1e-9 * p.supply);
    }

    #[test]
    fn faster_neighbour_lowers_pressure() {
        let nd = node(&[0.5, 0.5], 0.2);
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let pr = solve_pressure(&nd, &[0.05, 0.01 * i as f64]).unwrap();
            assert!(pr <= prev);
            prev = pr;
        }
        assert!(prev < nd.relief_pump);
    }

    #[test]
    fn faster_neighbour_slows_actuator() {
        // the velocity at which actuator 1 carries zero force drops as v2 grows
        let nd = node(&[0.5, 0.5], 0.2);
        let v1_at_zero_force = |v2: f64| {
            find_root_monotone(
                |v1| -gamma_mul(&nd, &[v1, v2]).unwrap()[0].lo,
                1e-6,
                2.0,
                &RootConfig::default(),
            )
            .unwrap()
        };
        let (slow, fast) = (v1_at_zero_force(0.0), v1_at_zero_force(0.2));
        assert!(fast < slow, "{fast} >= {slow}");
    }

    #[test]
    fn single_actuator_matches_single_map() {
        // with a wide-open bleed the flow-limited segments stay inactive
        let n = inputs(0.6, 0.2);
        let p = n.params();
        let nd = PumpNode::new(p.supply, p.relief_pump, n.bleed(), vec![n]).unwrap();
        for i in -50..=50 {
            let v = i as f64 * 0.002;
            let (g, seg) = gamma_tracked(&n, Supply::Pump, v);
            if matches!(seg, Segment::Plus1a | Segment::Plus1b | Segment::Minus1a | Segment::Minus1b) {
                continue;
            }
            let m = gamma_mul(&nd, &[v]).unwrap()[0];
            assert!((m.lo - g.lo).abs() <= 1e-6 * g.lo.abs().max(1.0));
            assert!((m.hi - g.hi).abs() <= 1e-6 * g.hi.abs().max(1.0));
        }
    }

    #[test]
    fn flow_conservation() {
        let nd = node(&[0.5, -0.4], 0.2);
        for (v1, v2) in [(0.0, 0.0), (0.05, -0.02), (0.2, -0.1), (0.01, 0.0)] {
            let s = gamma_mul_report(&nd, &[v1, v2]).unwrap();
            let balance = nd.supply - s.bleed_flow - s.draws.iter().sum::<f64>() - s.relief_flow;
            assert!(balance.abs() <= 1e-10 * nd.supply, "{balance}");
            assert!(s.pressure <= nd.relief_pump);
            let xi = xi_p(&nd, s.pressure, &[v1, v2]).unwrap();
            assert!(xi >= -1e-10 * nd.supply);
            assert!(((nd.relief_pump - s.pressure) * xi).abs() <= 1e-6 * nd.relief_pump * nd.supply);
        }
    }

    fn arb_node() -> impl Strategy<Value = PumpNode> {
        (
            proptest::collection::vec(-1.0f64..1.0, 1..4),
            0.0f64..1.0,
            1e-3f64..2e-2,
            10e6f64..40e6,
        )
            .prop_map(|(cmds, u_b, q, p_m)| {
                let mut p = ActuatorParams::reference();
                p.supply = q;
                p.relief_pump = p_m;
                let acts = cmds
                    .iter()
                    .map(|&u| {
                        let u_b = if u == 0.0 { u_b.max(0.1) } else { u_b };
                        normalize(&p, &ValveCommand::from_lever(u, u_b).unwrap()).unwrap()
                    })
                    .collect();
                PumpNode::new(q, p_m, p.c_b * u_b, acts).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn fixed_pressure_inverse(u_c in -1.0f64..1.0, p in 0.0f64..40e6, log_beta in 3.0f64..9.0, t in 0.0f64..1.0) {
            prop_assume!(u_c != 0.0);
            let n = inputs(u_c, 0.2);
            let beta = 10f64.powf(log_beta);
            let fbar = -2.0 * n.f_rm() + t * 2.0 * (n.f_hm() + n.f_rm());
            let v = lambda_hat(&n, p, beta, fbar).unwrap();
            let f = beta * v + fbar;
            let dv = 1e-12 * v.abs().max(1e-3);
            let lo = gamma_hat(&n, p, v + dv).unwrap().lo.min(gamma_hat(&n, p, v).unwrap().lo);
            let hi = gamma_hat(&n, p, v - dv).unwrap().hi.max(gamma_hat(&n, p, v).unwrap().hi);
            prop_assert!(Interval::hull(lo, hi).contains(f, 1e-9 * f.abs().max(1.0)), "{} not in {:?}", f, (lo, hi));
        }

        #[test]
        fn surplus_non_increasing(nd in arb_node(), vs in proptest::collection::vec(-0.5f64..0.5, 3), betas in proptest::collection::vec(3.0f64..8.0, 3), fs in proptest::collection::vec(-1e6f64..1e6, 3)) {
            let k = nd.len();
            let (v, beta, fbar) = (&vs[..k], betas[..k].iter().map(|b| 10f64.powf(*b)).collect::<Vec<_>>(), &fs[..k]);
            let mut prev = (f64::INFINITY, f64::INFINITY);
            for i in 0..=50 {
                let p = nd.relief_pump * i as f64 / 50.0;
                let a = xi_p(&nd, p, v).unwrap();
                let (_, draw) = resolve_at(&nd, p, &beta, fbar).unwrap();
                let b = nd.surplus(p, draw);
                prop_assert!(a <= prev.0 + 1e-12 && b <= prev.1 + 1e-12);
                prev = (a, b);
            }
        }

        #[test]
        fn coupled_inverse(nd in arb_node(), betas in proptest::collection::vec(3.0f64..8.0, 3), ts in proptest::collection::vec(0.0f64..1.0, 3)) {
            let k = nd.len();
            let beta: Vec<f64> = betas[..k].iter().map(|b| 10f64.powf(*b)).collect();
            let fbar: Vec<f64> = nd.actuators.iter().zip(&ts).map(|(n, t)| -1.5 * n.f_rm() + t * 1.5 * (n.f_hm() + n.f_rm())).collect();
            let s = lambda_mul_report(&nd, &beta, &fbar).unwrap();
            let g = gamma_mul_report(&nd, &s.velocities).unwrap();
            prop_assert!((g.pressure - s.pressure).abs() <= 1e-6 * nd.relief_pump, "pressure {} vs {}", g.pressure, s.pressure);
            for j in 0..k {
                let f = beta[j] * s.velocities[j] + fbar[j];
                prop_assert!(g.forces[j].contains(f, 1e-6 * f.abs().max(1.0)), "actuator {}: {} vs {:?}", j, f, g.forces[j]);
            }
        }
    }
}
