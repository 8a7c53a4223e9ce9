//! Brute-force reference solver for the reduced steady-state circuit.
//!
//! At a fixed rod velocity `v` the circuit reduces to four unknowns: head
//! and rod chamber forces `F_h`, `F_r`, pump-side pressure `P_c` and junction
//! pressure `P`, tied by two chamber flow balances (normal cones of the
//! relief ranges), the pump check valve and the pump relief valve. This
//! module enumerates every complementarity branch of those four relations,
//! solves the remaining monotone scalar equations by bracketed bisection and
//! keeps the combinations whose residuals all vanish. It never touches the
//! segment formulas in [`crate::actuator`], which is the point: it is the
//! ground truth they are tested against.

use crate::actuator::NormalizedInputs;
use crate::error::{Error, Result};
use crate::nonsmooth::{normal_cone_violation, r_signed, Interval};
use crate::rootfind::{find_root_monotone, RootConfig};

/// A solution of the reduced system with its residual violations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPoint {
    pub f_h: f64,
    pub f_r: f64,
    pub p_c: f64,
    pub p: f64,
    /// Violations of head balance, rod balance, check valve, relief valve
    /// and the force definition, each scaled to be dimensionless.
    pub residuals: [f64; 5],
}

impl ResidualPoint {
    pub fn force(&self) -> f64 {
        self.f_h - self.f_r
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(*r))
    }
}

/// Branch of a chamber relation `r ∈ N_[0, F_M](F)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chamber {
    Empty,
    Interior,
    Relief,
}

/// Branch of the check valve relation `q ∈ N_(-∞, P_c](P)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Check {
    Closed,
    Open,
}

/// Branch of the pump relief relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Relief {
    Below,
    Open,
}

const CHAMBER: [Chamber; 3] = [Chamber::Empty, Chamber::Interior, Chamber::Relief];

/// Residual tolerance on the scaled relations.
pub const RESIDUAL_TOL: f64 = 1e-6;

struct System<'a> {
    n: &'a NormalizedInputs,
    v: f64,
    cfg: RootConfig,
}

impl System<'_> {
    fn f_hm(&self) -> f64 {
        self.n.f_hm()
    }
    fn f_rm(&self) -> f64 {
        self.n.f_rm()
    }

    /// Net head-chamber inflow minus displacement, divided by `A_h`.
    fn head_balance(&self, f_h: f64, p_c: f64) -> f64 {
        let a = self.n.params().area_head;
        -self.v + self.n.uh_ph() * r_signed(a * p_c - f_h) - self.n.uh_th() * r_signed(f_h)
    }

    fn rod_balance(&self, f_r: f64, p_c: f64) -> f64 {
        let a = self.n.params().area_rod;
        self.v + self.n.uh_pr() * r_signed(a * p_c - f_r) - self.n.uh_tr() * r_signed(f_r)
    }

    /// Flow through the check valve into the two chambers.
    fn pump_flow(&self, f_h: f64, f_r: f64, p_c: f64) -> f64 {
        let p = self.n.params();
        p.area_head * self.n.uh_ph() * r_signed(p.area_head * p_c - f_h)
            + p.area_rod * self.n.uh_pr() * r_signed(p.area_rod * p_c - f_r)
    }

    /// Solves a decreasing chamber balance `r(F) ∈ N_[0, F_M](F)` on the
    /// given branch. The interior branch falls back to the bound the
    /// balance pushes it to, so that it stays continuous and monotone in the
    /// pump-side pressure; the outer searches rely on that.
    fn chamber(&self, branch: Chamber, limit: f64, r: impl Fn(f64) -> f64) -> Result<Option<f64>> {
        Ok(match branch {
            Chamber::Empty => Some(0.0),
            Chamber::Relief => Some(limit),
            Chamber::Interior => {
                let (r0, r1) = (r(0.0), r(limit));
                if r0 == 0.0 && r1 == 0.0 {
                    // balance independent of the force: any interior value
                    Some(0.5 * limit)
                } else if r0 <= 0.0 {
                    Some(0.0)
                } else if r1 >= 0.0 {
                    Some(limit)
                } else {
                    Some(find_root_monotone(&r, 0.0, limit, &self.cfg)?)
                }
            }
        })
    }

    fn forces(&self, hb: Chamber, rb: Chamber, p_c: f64) -> Result<Option<(f64, f64)>> {
        let f_h = self.chamber(hb, self.f_hm(), |f| self.head_balance(f, p_c))?;
        let f_r = self.chamber(rb, self.f_rm(), |f| self.rod_balance(f, p_c))?;
        Ok(f_h.zip(f_r))
    }

    fn velocity_scale(&self) -> f64 {
        let p = self.n.params();
        self.v.abs().max(p.supply / p.area_head.min(p.area_rod))
    }

    fn point(&self, f_h: f64, f_r: f64, p_c: f64, p: f64) -> ResidualPoint {
        let params = self.n.params();
        let vs = self.velocity_scale();
        let qs = params.supply;
        let q = self.pump_flow(f_h, f_r, p_c);
        let surplus = params.supply - self.n.bleed() * r_signed(p) - q;
        let ftol = |m: f64| 1e-12 * m.max(1.0);
        let ptol = 1e-12 * params.relief_pump.max(p_c.abs());
        ResidualPoint {
            f_h,
            f_r,
            p_c,
            p,
            residuals: [
                normal_cone_violation(0.0, self.f_hm(), f_h, self.head_balance(f_h, p_c), ftol(self.f_hm())) / vs,
                normal_cone_violation(0.0, self.f_rm(), f_r, self.rod_balance(f_r, p_c), ftol(self.f_rm())) / vs,
                normal_cone_violation(f64::NEG_INFINITY, p_c, p, q, ptol) / qs,
                normal_cone_violation(f64::NEG_INFINITY, params.relief_pump, p, surplus, ptol) / qs,
                0.0,
            ],
        }
    }

    /// Upper end of the pump-side pressure search: beyond it both chambers
    /// can only receive flow.
    fn pressure_ceiling(&self, p: f64) -> f64 {
        let params = self.n.params();
        p.max(self.f_hm() / params.area_head).max(self.f_rm() / params.area_rod) * (1.0 + 1e-9)
    }

    fn solve_branch(&self, hb: Chamber, rb: Chamber, check: Check, relief: Relief) -> Result<Option<ResidualPoint>> {
        let params = self.n.params();
        let p_m = params.relief_pump;
        match check {
            Check::Closed => {
                // no flow into the actuator: the junction sees only the bleed
                let p = match relief {
                    Relief::Open => p_m,
                    Relief::Below if self.n.bleed() > 0.0 => (params.supply / self.n.bleed()).powi(2),
                    Relief::Below => return Ok(None),
                };
                // P_c is whatever pressure makes the actuator draw nothing
                let q_at = |p_c: f64| -> f64 {
                    match self.forces(hb, rb, p_c) {
                        Ok(Some((f_h, f_r))) => self.pump_flow(f_h, f_r, p_c),
                        _ => f64::NAN,
                    }
                };
                let hi = self.pressure_ceiling(p);
                let (q_lo, q_hi) = (q_at(p), q_at(hi));
                if q_lo.is_nan() || q_hi.is_nan() || q_lo > 0.0 || q_hi < 0.0 {
                    return Ok(None);
                }
                let p_c = if q_lo == 0.0 {
                    p
                } else {
                    match find_root_monotone(q_at, p, hi, &self.cfg) {
                        Ok(x) => x,
                        Err(Error::Domain(_)) => return Ok(None),
                        Err(e) => return Err(e),
                    }
                };
                Ok(self.forces(hb, rb, p_c)?.map(|(f_h, f_r)| self.point(f_h, f_r, p_c, p)))
            }
            Check::Open => {
                let surplus = |p: f64| -> f64 {
                    match self.forces(hb, rb, p) {
                        Ok(Some((f_h, f_r))) => params.supply - self.n.bleed() * r_signed(p) - self.pump_flow(f_h, f_r, p),
                        _ => f64::NAN,
                    }
                };
                let p = match relief {
                    Relief::Open => p_m,
                    Relief::Below => {
                        let s_hi = surplus(p_m);
                        if s_hi.is_nan() || s_hi > 0.0 {
                            return Ok(None);
                        }
                        let mut lo = -self.pressure_ceiling(p_m);
                        let mut s_lo = surplus(lo);
                        for _ in 0..60 {
                            if s_lo.is_nan() || s_lo >= 0.0 {
                                break;
                            }
                            lo *= 2.0;
                            s_lo = surplus(lo);
                        }
                        if s_lo.is_nan() || s_lo < 0.0 {
                            return Ok(None);
                        }
                        match find_root_monotone(surplus, lo, p_m, &self.cfg) {
                            Ok(x) => x,
                            Err(Error::Domain(_)) => return Ok(None),
                            Err(e) => return Err(e),
                        }
                    }
                };
                Ok(self.forces(hb, rb, p)?.map(|(f_h, f_r)| self.point(f_h, f_r, p, p)))
            }
        }
    }
}

/// Every branch combination of the reduced system at velocity `v` whose
/// solution satisfies all relations within [`RESIDUAL_TOL`].
pub fn solve_points(n: &NormalizedInputs, v: f64) -> Result<Vec<ResidualPoint>> {
    if !v.is_finite() {
        return Err(Error::Domain(format!("velocity must be finite (got {v})")));
    }
    // iterate to the end of floating-point resolution
    let cfg = RootConfig { abs_tol: 1e-300, res_tol: 1e-300, max_iter: 400, accelerate: true };
    let sys = System { n, v, cfg };
    let mut found = Vec::new();
    for hb in CHAMBER {
        for rb in CHAMBER {
            for check in [Check::Closed, Check::Open] {
                for relief in [Relief::Below, Relief::Open] {
                    if let Some(pt) = sys.solve_branch(hb, rb, check, relief)? {
                        if pt.max_residual() <= RESIDUAL_TOL {
                            found.push(pt);
                        }
                    }
                }
            }
        }
    }
    Ok(found)
}

/// Interval hull of all forces `F_h - F_r` consistent with velocity `v`.
pub fn solve_inclusion(n: &NormalizedInputs, v: f64) -> Result<Interval> {
    let pts = solve_points(n, v)?;
    let mut it = pts.iter().map(ResidualPoint::force);
    let first = it.next().ok_or(Error::Infeasible(v))?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), f| (lo.min(f), hi.max(f)));
    Ok(Interval::hull(lo, hi))
}
