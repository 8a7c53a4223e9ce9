//! The force-velocity map and its resolvent.
//!
//! For `v > 0` the force is the extend branch `Γ_+(v)`, for `v < 0` the
//! retract branch `Γ_-(v)`, and at `v = 0` the closed interval between the
//! two zero-velocity limits. Each branch is a max/min lattice of smooth
//! segments; every segment corresponds to one combination of open and closed
//! relief, suction and check valves.

use super::{NormalizedInputs, Regime};
use crate::error::{Error, Result};
use crate::nonsmooth::{clamp, phi_a, phi_b, s_signed, Interval};

/// Floor for squared openings in denominators.
pub(crate) const EPS: f64 = 1e-30;

/// Segment of the map attaining the force at a given velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Segment {
    /// Rod-side relief open while extending, `f = -F_rM`.
    RodRelief,
    Plus3,
    Plus2b,
    Plus2a,
    Plus1b,
    Plus1a,
    Plus0b,
    Plus0a,
    /// `v = 0` under an extend command.
    ZeroExtend,
    /// `v = 0` with all main valves closed.
    ZeroHold,
    /// `v = 0` under a retract command.
    ZeroRetract,
    Minus0a,
    Minus0b,
    Minus1a,
    Minus1b,
    Minus2a,
    Minus2b,
    Minus3,
    /// Head-side relief open while retracting, `f = F_hM`.
    HeadRelief,
}

/// Where the pump-side pressure comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Supply {
    /// Dedicated pump with flow `Q`, bleed `U_b` and relief `P_M`.
    Pump,
    /// Fixed junction pressure shared with other actuators. The
    /// flow-limited segments drop out.
    Pressure(f64),
}

#[inline]
fn inv_sq(u: f64) -> f64 {
    1.0 / sq(u)
}

type Tracked = (f64, Segment);

#[inline]
fn tmax(a: Tracked, b: Tracked) -> Tracked {
    if b.0 > a.0 {
        b
    } else {
        a
    }
}

#[inline]
fn tmin(a: Tracked, b: Tracked) -> Tracked {
    if b.0 < a.0 {
        b
    } else {
        a
    }
}

impl NormalizedInputs {
    fn head_supply_force(&self, supply: Supply) -> f64 {
        match supply {
            Supply::Pump => self.params.area_head * self.params.relief_pump,
            Supply::Pressure(p) => self.params.area_head * p,
        }
    }

    fn rod_supply_force(&self, supply: Supply) -> f64 {
        match supply {
            Supply::Pump => self.params.area_rod * self.params.relief_pump,
            Supply::Pressure(p) => self.params.area_rod * p,
        }
    }

    /// Head force the pump flow can sustain against the bleed while the rod
    /// extends at `v`: `-A_h^3 S(v - Q/A_h) / U_b^2`.
    fn head_flow_force(&self, v: f64) -> f64 {
        let a = self.params.area_head;
        -a.powi(3) * s_signed(v - self.params.supply / a) / (self.bleed * self.bleed).max(EPS)
    }

    fn rod_flow_force(&self, v: f64) -> f64 {
        let a = self.params.area_rod;
        -a.powi(3) * s_signed(v + self.params.supply / a) / (self.bleed * self.bleed).max(EPS)
    }
}

/// Extend branch `Γ_+(v)` with the attaining segment. Meaningful for `v > 0`.
pub(crate) fn plus_branch(n: &NormalizedInputs, supply: Supply, v: f64) -> Tracked {
    let (f_hm, f_rm) = (n.f_hm(), n.f_rm());
    let s = s_signed(v);
    let k_tr = s * inv_sq(n.uh_tr);
    let k_ph = s * inv_sq(n.uh_ph);
    let p_m = n.head_supply_force(supply);

    let g0 = tmax((f_hm - k_tr, Segment::Plus0a), (f_hm - f_rm, Segment::Plus0b));
    let g2 = tmax((p_m - k_ph - k_tr, Segment::Plus2a), (p_m - k_ph - f_rm, Segment::Plus2b));
    let inner = match supply {
        Supply::Pump => {
            let x = n.head_flow_force(v);
            let g1 = tmax((x - k_ph - k_tr, Segment::Plus1a), (x - k_ph - f_rm, Segment::Plus1b));
            tmin(tmin(g0, g1), g2)
        }
        Supply::Pressure(_) => tmin(g0, g2),
    };
    tmax(tmax(inner, (-k_tr, Segment::Plus3)), (-f_rm, Segment::RodRelief))
}

/// Retract branch `Γ_-(v)` with the attaining segment. Meaningful for `v < 0`.
pub(crate) fn minus_branch(n: &NormalizedInputs, supply: Supply, v: f64) -> Tracked {
    let (f_hm, f_rm) = (n.f_hm(), n.f_rm());
    let s = s_signed(v);
    let k_th = s * inv_sq(n.uh_th);
    let k_pr = s * inv_sq(n.uh_pr);
    let p_m = n.rod_supply_force(supply);

    let g0 = tmin((-f_rm - k_th, Segment::Minus0a), (f_hm - f_rm, Segment::Minus0b));
    let g2 = tmin((-p_m - k_pr - k_th, Segment::Minus2a), (-p_m - k_pr + f_hm, Segment::Minus2b));
    let outer = match supply {
        Supply::Pump => {
            let y = n.rod_flow_force(v);
            let g1 = tmin((y - k_pr - k_th, Segment::Minus1a), (y - k_pr + f_hm, Segment::Minus1b));
            tmax(tmax(g0, g1), g2)
        }
        Supply::Pressure(_) => tmax(g0, g2),
    };
    tmin(tmin(outer, (-k_th, Segment::Minus3)), (f_hm, Segment::HeadRelief))
}

/// `[Γ_+(0), Γ_-(0)]`, assembled from the chamber-wise limits at rest.
pub(crate) fn bounds_at_zero(n: &NormalizedInputs, supply: Supply) -> Interval {
    let (f_hm, f_rm) = (n.f_hm(), n.f_rm());
    let (head_sustain, rod_sustain) = match supply {
        Supply::Pump => {
            let p_bleed = n.params.supply.powi(2) / (n.bleed * n.bleed).max(EPS);
            (
                n.params.area_head * n.params.relief_pump.min(p_bleed),
                n.params.area_rod * n.params.relief_pump.min(p_bleed),
            )
        }
        Supply::Pressure(p) => (n.params.area_head * p, n.params.area_rod * p),
    };
    let head_plus = if n.uh_ph > 0.0 { f_hm.min(head_sustain) } else { 0.0 };
    let rod_plus = if n.uh_tr > 0.0 { 0.0 } else { f_rm };
    let head_minus = if n.uh_th > 0.0 { 0.0 } else { f_hm };
    let rod_minus = if n.uh_pr > 0.0 { f_rm.min(rod_sustain) } else { 0.0 };
    Interval::hull(head_plus - rod_plus, head_minus - rod_minus)
}

fn zero_segment(regime: Regime) -> Segment {
    match regime {
        Regime::Extend => Segment::ZeroExtend,
        Regime::Hold => Segment::ZeroHold,
        Regime::Retract => Segment::ZeroRetract,
    }
}

pub(crate) fn gamma_tracked(n: &NormalizedInputs, supply: Supply, v: f64) -> (Interval, Segment) {
    if v > 0.0 {
        let (f, seg) = plus_branch(n, supply, v);
        (Interval::singleton(f), seg)
    } else if v < 0.0 {
        let (f, seg) = minus_branch(n, supply, v);
        (Interval::singleton(f), seg)
    } else {
        (bounds_at_zero(n, supply), zero_segment(n.regime))
    }
}

/// The set of actuator forces consistent with rod velocity `v`.
///
/// Singleton for `v != 0`; the closed interval `[Γ_+(0), Γ_-(0)]` at rest.
pub fn gamma(n: &NormalizedInputs, v: f64) -> Interval {
    gamma_tracked(n, Supply::Pump, v).0
}

/// Hull of `Γ` over the velocity range `[v_lo, v_hi]`.
///
/// `Γ` is non-increasing, so this is `[Γ(v_hi).lo, Γ(v_lo).hi]`. Useful for
/// membership checks near the nearly vertical segments that appear when a
/// flow limit has no bleed.
pub fn gamma_hull(n: &NormalizedInputs, v_lo: f64, v_hi: f64) -> Interval {
    let mut lo = gamma(n, v_hi).lo;
    let mut hi = gamma(n, v_lo).hi;
    if v_lo <= 0.0 && 0.0 <= v_hi {
        let z = gamma_bounds_at_zero(n);
        lo = lo.min(z.lo);
        hi = hi.max(z.hi);
    }
    Interval::hull(lo, hi)
}

/// The force interval the actuator can hold at rest.
pub fn gamma_bounds_at_zero(n: &NormalizedInputs) -> Interval {
    bounds_at_zero(n, Supply::Pump)
}

/// Head-chamber force `Γ_h+(v)` under an extend command, taking the right
/// limit at `v = 0`. Defined for `v >= 0`.
pub(crate) fn gamma_head_extend(n: &NormalizedInputs, v: f64) -> f64 {
    let f_hm = n.f_hm();
    if v == 0.0 {
        return bounds_at_zero_head(n);
    }
    let supply = n.head_supply_force(Supply::Pump).min(n.head_flow_force(v));
    clamp(0.0, f_hm, supply - s_signed(v) * inv_sq(n.uh_ph))
}

fn bounds_at_zero_head(n: &NormalizedInputs) -> f64 {
    if n.uh_ph > 0.0 {
        let p_bleed = n.params.supply.powi(2) / (n.bleed * n.bleed).max(EPS);
        n.f_hm().min(n.params.area_head * n.params.relief_pump.min(p_bleed))
    } else {
        0.0
    }
}

/// Rod-chamber force `Γ_r+(v)` under an extend command, right limit at 0.
pub(crate) fn gamma_rod_extend(n: &NormalizedInputs, v: f64) -> f64 {
    if v == 0.0 {
        return if n.uh_tr > 0.0 { 0.0 } else { n.f_rm() };
    }
    clamp(0.0, n.f_rm(), s_signed(v) * inv_sq(n.uh_tr))
}

/// Squared opening as it enters the segment formulas.
#[inline]
fn sq(u: f64) -> f64 {
    (u * u).max(EPS)
}

/// Series coefficient of two floored openings, consistent with summing the
/// two guarded `S(v)/u^2` terms.
#[inline]
fn series(u1: f64, u2: f64) -> f64 {
    1.0 / (1.0 / sq(u1) + 1.0 / sq(u2))
}

// The candidate roots use the same floored coefficients as the segments, so
// the resolvent inverts exactly the map that `gamma` evaluates and no
// candidate is ever undefined.
fn lambda_plus(n: &NormalizedInputs, supply: Supply, beta: f64, fbar: f64) -> Result<f64> {
    let (f_hm, f_rm) = (n.f_hm(), n.f_rm());
    let (ph2, tr2) = (sq(n.uh_ph), sq(n.uh_tr));
    let both = series(n.uh_ph, n.uh_tr);
    let p_m = n.head_supply_force(supply);

    let v0 = phi_a(beta, fbar - f_hm, tr2)?.max((f_hm - f_rm - fbar) / beta);
    let v2 = phi_a(beta, fbar - p_m, both)?.max(phi_a(beta, fbar - p_m + f_rm, ph2)?);
    let inner = match supply {
        Supply::Pump => {
            let a = n.params.area_head;
            let a1 = sq(n.bleed) / a.powi(3);
            let x1 = n.params.supply / a;
            let v1a = phi_b(beta, fbar, both, a1, x1)?;
            let v1b = phi_b(beta, fbar + f_rm, ph2, a1, x1)?;
            v0.min(v1a.max(v1b)).min(v2)
        }
        Supply::Pressure(_) => v0.min(v2),
    };
    let v3 = phi_a(beta, fbar, tr2)?;
    let v_rm = (-f_rm - fbar) / beta;
    Ok(inner.max(v3).max(v_rm))
}

fn lambda_minus(n: &NormalizedInputs, supply: Supply, beta: f64, fbar: f64) -> Result<f64> {
    let (f_hm, f_rm) = (n.f_hm(), n.f_rm());
    let (pr2, th2) = (sq(n.uh_pr), sq(n.uh_th));
    let both = series(n.uh_pr, n.uh_th);
    let p_m = n.rod_supply_force(supply);

    let v0 = phi_a(beta, fbar + f_rm, th2)?.min((f_hm - f_rm - fbar) / beta);
    let v2 = phi_a(beta, fbar + p_m, both)?.min(phi_a(beta, fbar + p_m - f_hm, pr2)?);
    let outer = match supply {
        Supply::Pump => {
            let a = n.params.area_rod;
            let a1 = sq(n.bleed) / a.powi(3);
            let x1 = -n.params.supply / a;
            let v1a = phi_b(beta, fbar, both, a1, x1)?;
            let v1b = phi_b(beta, fbar - f_hm, pr2, a1, x1)?;
            v0.max(v1a.min(v1b)).max(v2)
        }
        Supply::Pressure(_) => v0.max(v2),
    };
    let v3 = phi_a(beta, fbar, th2)?;
    let v_hm = (f_hm - fbar) / beta;
    Ok(outer.min(v3).min(v_hm))
}

pub(crate) fn lambda_with_supply(
    n: &NormalizedInputs,
    supply: Supply,
    beta: f64,
    fbar: f64,
) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("lambda requires finite beta > 0 (got {beta})")));
    }
    if !fbar.is_finite() {
        return Err(Error::Domain(format!("lambda requires a finite force (got {fbar})")));
    }
    let rest = bounds_at_zero(n, supply);
    if rest.lo <= fbar && fbar <= rest.hi {
        return Ok(0.0);
    }
    if fbar < rest.lo {
        match n.regime {
            Regime::Extend => lambda_plus(n, supply, beta, fbar),
            // the extend branch is the rod relief line
            Regime::Hold | Regime::Retract => Ok((-n.f_rm() - fbar) / beta),
        }
    } else {
        match n.regime {
            Regime::Retract => lambda_minus(n, supply, beta, fbar),
            Regime::Hold | Regime::Extend => Ok((n.f_hm() - fbar) / beta),
        }
    }
}

/// The unique `v` with `beta v + fbar ∈ Γ(v)`, for `beta > 0`.
pub fn lambda(n: &NormalizedInputs, beta: f64, fbar: f64) -> Result<f64> {
    lambda_with_supply(n, Supply::Pump, beta, fbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::{normalize, ActuatorParams, ValveCommand};
    use proptest::prelude::*;

    fn inputs(u_c: f64, u_b: f64) -> NormalizedInputs {
        normalize(&ActuatorParams::reference(), &ValveCommand::from_lever(u_c, u_b).unwrap()).unwrap()
    }

    /// Direct chamber-wise definition `Γ_h± − Γ_r±`, independent of the lattice.
    fn chamberwise(n: &NormalizedInputs, v: f64) -> f64 {
        let p = n.params();
        let s = s_signed(v);
        if v > 0.0 {
            let head = (p.area_head * p.relief_pump).min(n.head_flow_force(v)) - s * inv_sq(n.uh_ph);
            clamp(0.0, n.f_hm(), head) - clamp(0.0, n.f_rm(), s * inv_sq(n.uh_tr))
        } else {
            let rod = (p.area_rod * p.relief_pump).min(-n.rod_flow_force(v)) + s * inv_sq(n.uh_pr);
            clamp(0.0, n.f_hm(), -s * inv_sq(n.uh_th)) - clamp(0.0, n.f_rm(), rod)
        }
    }

    #[test]
    fn hold_regime_values() {
        let n = inputs(0.0, 0.2);
        assert_eq!(gamma(&n, 0.1), Interval::singleton(-4.8e5));
        assert_eq!(gamma(&n, -0.1), Interval::singleton(1.008e6));
        let z = gamma(&n, 0.0);
        assert_eq!((z.lo, z.hi), (-4.8e5, 1.008e6));
        assert_eq!(gamma_bounds_at_zero(&n), z);
    }

    #[test]
    fn extend_rest_bound_is_pump_relief() {
        let n = inputs(0.5, 0.2);
        let z = gamma_bounds_at_zero(&n);
        assert!((z.lo - 0.864e6).abs() < 1e-6);
        assert_eq!(z.hi, 1.008e6);
    }

    #[test]
    fn lambda_head_relief_example() {
        let n = inputs(0.5, 0.2);
        let v = lambda(&n, 1e6, 1.108e6).unwrap();
        assert!((v + 0.1).abs() < 1e-12);
    }

    #[test]
    fn lambda_zero_inside_rest_interval() {
        let n = inputs(0.5, 0.2);
        assert_eq!(lambda(&n, 1e6, 0.9e6).unwrap(), 0.0);
        assert_eq!(lambda(&n, 1e6, 0.864e6).unwrap(), 0.0);
        assert!(lambda(&n, 0.0, 0.9e6).is_err());
    }

    #[test]
    fn lattice_matches_chamberwise_definition() {
        for &(u_c, u_b) in &[(0.5, 0.2), (-0.5, 0.2), (0.7, 0.0), (1.0, 1.0), (-0.05, 0.7), (0.0, 0.3)] {
            let n = inputs(u_c, u_b);
            for i in 1..=400 {
                let v = -1.0 + 2.0 * i as f64 / 401.0;
                if v == 0.0 {
                    continue;
                }
                let lat = gamma(&n, v).lo;
                let direct = chamberwise(&n, v);
                assert!(
                    (lat - direct).abs() <= 1e-9 * direct.abs().max(1.0),
                    "u_c = {u_c}, u_b = {u_b}, v = {v}: {lat} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn rest_bounds_are_right_and_left_limits() {
        for &(u_c, u_b) in &[(0.5, 0.2), (-0.5, 0.2), (0.7, 1.0), (0.0, 0.2)] {
            let n = inputs(u_c, u_b);
            let z = gamma_bounds_at_zero(&n);
            let right = plus_branch(&n, Supply::Pump, 1e-9).0;
            let left = minus_branch(&n, Supply::Pump, -1e-9).0;
            assert!((z.lo - right).abs() < 1e-3 * z.lo.abs().max(1.0), "{u_c}: {} vs {right}", z.lo);
            assert!((z.hi - left).abs() < 1e-3 * z.hi.abs().max(1.0), "{u_c}: {} vs {left}", z.hi);
        }
    }

    #[test]
    fn extend_segments_visited_in_order() {
        let n = inputs(0.5, 0.2);
        let mut seen = Vec::new();
        for i in 1..2000 {
            let (_, seg) = gamma_tracked(&n, Supply::Pump, i as f64 * 5e-4);
            if seen.last() != Some(&seg) {
                seen.push(seg);
            }
        }
        assert_eq!(seen.first(), Some(&Segment::Plus2a));
        assert_eq!(seen.last(), Some(&Segment::RodRelief));
    }

    #[test]
    fn head_and_rod_extend_parts_sum_to_plus_branch() {
        let n = inputs(0.6, 0.3);
        for i in 0..200 {
            let v = i as f64 * 2e-3;
            let f = gamma_head_extend(&n, v) - gamma_rod_extend(&n, v);
            let want = if v == 0.0 { gamma_bounds_at_zero(&n).lo } else { gamma(&n, v).lo };
            assert!((f - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }

    fn arb_inputs() -> impl Strategy<Value = NormalizedInputs> {
        (
            (0.005f64..0.05, 0.3f64..0.9, 20e6f64..50e6, 20e6f64..50e6, 10e6f64..40e6, 1e-3f64..2e-2),
            (-1.0f64..1.0, 0.0f64..1.0, prop::bool::ANY, prop::bool::ANY),
            (1e-5f64..5e-4, 1e-5f64..5e-4, 1e-5f64..5e-4),
        )
            .prop_filter_map("inadmissible command", |((ah, ratio, phm, prm, pm, q), (u_c, u_b, close_one, bleed_off), (a1, a2, a3))| {
                let c = |a: f64| crate::actuator::orifice_coefficient(0.6, a, 850.0);
                let p = ActuatorParams {
                    area_head: ah,
                    area_rod: ratio * ah,
                    relief_head: phm,
                    relief_rod: prm,
                    relief_pump: pm,
                    supply: q,
                    c_ph: c(a1),
                    c_th: c(a2),
                    c_pr: c(a2),
                    c_tr: c(a3),
                    c_b: c(a1),
                };
                let (ext, ret) = (u_c.max(0.0), (-u_c).max(0.0));
                let u_b = if bleed_off { 0.0 } else { u_b };
                let cmd = if close_one {
                    ValveCommand::new(ext, 0.0, 0.0, ret, u_b)
                } else {
                    ValveCommand::new(ext, ext, ret, ret, u_b)
                };
                cmd.ok().map(|cmd| normalize(&p, &cmd).unwrap())
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn lambda_is_inverse(n in arb_inputs(), log_beta in 3.0f64..9.0, t in 0.0f64..1.0) {
            let beta = 10f64.powf(log_beta);
            let fbar = -2.0 * n.f_rm() + t * 2.0 * (n.f_hm() + n.f_rm());
            let v = lambda(&n, beta, fbar).unwrap();
            let f = beta * v + fbar;
            let dv = 1e-12 * v.abs().max(1e-3);
            let g = gamma_hull(&n, v - dv, v + dv);
            prop_assert!(g.contains(f, 1e-9 * fbar.abs().max(1.0)), "v = {v}, f = {f}, gamma = {g:?}");
        }

        #[test]
        fn branches_non_increasing(n in arb_inputs(), v in 1e-4f64..2.0, dv in 1e-6f64..0.1) {
            let tol = 1e-9 * n.f_hm();
            prop_assert!(plus_branch(&n, Supply::Pump, v + dv).0 <= plus_branch(&n, Supply::Pump, v).0 + tol);
            prop_assert!(minus_branch(&n, Supply::Pump, -v).0 <= minus_branch(&n, Supply::Pump, -v - dv).0 + tol);
        }

        #[test]
        fn range_and_rest_order(n in arb_inputs(), v in -2.0f64..2.0) {
            let g = gamma(&n, v);
            prop_assert!(g.lo >= -n.f_rm() && g.hi <= n.f_hm());
            let z = gamma_bounds_at_zero(&n);
            prop_assert!(z.lo <= z.hi);
        }

        #[test]
        fn round_trip(n in arb_inputs(), v in prop_oneof![-1.0f64..-1e-3, 1e-3f64..1.0], log_beta in 3.0f64..9.0) {
            let beta = 10f64.powf(log_beta);
            let f = gamma(&n, v).lo;
            let back = lambda(&n, beta, f - beta * v).unwrap();
            prop_assert!((back - v).abs() <= 1e-8 * v.abs().max(1e-3), "v = {v}, back = {back}");
        }
    }
}
