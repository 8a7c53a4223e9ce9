//! Regeneration pipeline from the rod-side to the head-side chamber.
//!
//! While extending, oil leaving the rod chamber may be routed back into the
//! head chamber through a one-way valve instead of going to tank. The
//! regeneration flow, expressed as the rod velocity it accounts for,
//! is `v_a = û_a max(R(F_r - Â F_h), 0)` with `Â = A_r / A_h`. The chamber
//! forces then follow the extend branches evaluated at the reduced
//! velocities `v - Â v_a` (head) and `v - v_a` (rod).

use crate::actuator::{gamma, gamma_head_extend, gamma_rod_extend, lambda, NormalizedInputs, Regime};
use crate::error::{Error, Result};
use crate::nonsmooth::{s_signed, Interval};
use crate::rootfind::{find_root_monotone, RootConfig};

/// Exit tolerance on the force residual of the alternating search, N.
pub const FORCE_TOL: f64 = 1e-3;
/// Exit tolerance on the regeneration-flow residual, m²/s².
pub const FLOW_TOL: f64 = 1e-9;
/// Outer iteration cap of the alternating search.
pub const MAX_OUTER: usize = 100;

/// Regeneration valve: coefficient `c_a = C_a a_a sqrt(2/ρ)` and opening.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegenValve {
    pub c_a: f64,
    pub u_a: f64,
}

/// An actuator with a regeneration valve, ready for evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegenInputs {
    n: NormalizedInputs,
    uh_a: f64,
    a_hat: f64,
}

impl RegenInputs {
    /// Rejects `A_h < A_r`, and an open regeneration valve under an extend
    /// command with the rod-to-tank valve closed. An open valve under any
    /// other command is accepted and has no effect.
    pub fn new(n: NormalizedInputs, valve: RegenValve) -> Result<Self> {
        if !(valve.c_a > 0.0 && valve.c_a.is_finite()) {
            return Err(Error::Domain(format!("regeneration coefficient must be positive (got {})", valve.c_a)));
        }
        if !(0.0..=1.0).contains(&valve.u_a) {
            return Err(Error::Domain(format!("regeneration opening {} outside [0, 1]", valve.u_a)));
        }
        let p = n.params();
        if p.area_head < p.area_rod {
            return Err(Error::Config(format!(
                "regeneration needs area_head >= area_rod (got {} < {})",
                p.area_head, p.area_rod
            )));
        }
        if valve.u_a > 0.0 && n.regime() == Regime::Extend && n.uh_tr() == 0.0 {
            return Err(Error::Config(
                "regeneration valve open while extending with the rod-to-tank valve closed".into(),
            ));
        }
        Ok(RegenInputs {
            n,
            uh_a: valve.c_a * valve.u_a / p.area_rod.powf(1.5),
            a_hat: p.area_rod / p.area_head,
        })
    }

    pub fn inputs(&self) -> &NormalizedInputs {
        &self.n
    }

    /// `û_a = c_a u_a / A_r^{3/2}`.
    pub fn uh_a(&self) -> f64 {
        self.uh_a
    }

    /// `Â = A_r / A_h`.
    pub fn area_ratio(&self) -> f64 {
        self.a_hat
    }

    fn can_regenerate(&self) -> bool {
        self.uh_a > 0.0 && self.n.regime() == Regime::Extend
    }

    fn force(&self, v: f64, v_a: f64) -> f64 {
        gamma_head_extend(&self.n, v - self.a_hat * v_a) - gamma_rod_extend(&self.n, v - v_a)
    }

    /// Whether the regeneration valve carries flow at rod velocity `v`.
    fn active_at(&self, v: f64) -> bool {
        self.can_regenerate() && v > 0.0 && xi_v(self, v, 0.0) < 0.0
    }
}

/// Flow residual `Ξ_v(v, v_a) = S(v_a) - û_a² (Γ_r+(v - v_a) - Â Γ_h+(v - Â v_a))`.
///
/// Increasing in `v_a`, non-increasing in `v`.
pub fn xi_v(r: &RegenInputs, v: f64, v_a: f64) -> f64 {
    let drop = gamma_rod_extend(&r.n, v - v_a) - r.a_hat * gamma_head_extend(&r.n, v - r.a_hat * v_a);
    s_signed(v_a) - r.uh_a * r.uh_a * drop
}

fn xi_f(r: &RegenInputs, beta: f64, fbar: f64, v: f64, v_a: f64) -> f64 {
    beta * v + fbar - r.force(v, v_a)
}

fn cfg_for(width: f64) -> RootConfig {
    RootConfig { abs_tol: 1e-15 * width.max(1e-12), res_tol: 1e-300, max_iter: 300, accelerate: true }
}

// Roundoff can leave a warm-started bracket with a residual of the wrong
// sign at an end; the nearest end is then the root.
fn root_in<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    if f(lo) >= 0.0 {
        return Ok(lo);
    }
    if f(hi) <= 0.0 {
        return Ok(hi);
    }
    find_root_monotone(f, lo, hi, &cfg_for(hi - lo))
}

/// Regeneration flow `v_a` at rod velocity `v`; always in `[0, max(0, v)]`.
pub fn v_a_hat(r: &RegenInputs, v: f64) -> Result<f64> {
    if !r.active_at(v) {
        return Ok(0.0);
    }
    root_in(|x| xi_v(r, v, x), 0.0, v)
}

/// Forces consistent with rod velocity `v` and the matching regeneration flow.
pub fn gamma_reg_with_flow(r: &RegenInputs, v: f64) -> Result<(Interval, f64)> {
    let v_a = v_a_hat(r, v)?;
    if v_a == 0.0 {
        return Ok((gamma(&r.n, v), 0.0));
    }
    Ok((Interval::singleton(r.force(v, v_a)), v_a))
}

/// Force-velocity map of the actuator with regeneration. Identical to
/// [`gamma`] whenever the regeneration valve is closed or inactive.
pub fn gamma_reg(r: &RegenInputs, v: f64) -> Result<Interval> {
    gamma_reg_with_flow(r, v).map(|(f, _)| f)
}

/// Result of the alternating search in [`lambda_reg_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegenSolution {
    pub v: f64,
    pub v_a: f64,
    pub iterations: usize,
    /// `(v, v_a)` after every outer iteration.
    pub trace: Vec<(f64, f64)>,
}

// The staircase converges linearly, slowly near the flow-limit wall where
// both residual curves are steep. Project the last three v iterates to
// their limit and keep the projection only if it is still below the
// solution (force residual on the flow curve non-positive), shortening it
// otherwise, so iterates
// stay monotone and the brackets stay valid.
fn extrapolate(
    r: &RegenInputs,
    beta: f64,
    fbar: f64,
    history: &[f64],
    v_a: f64,
    v_max: f64,
) -> Result<Option<(f64, f64)>> {
    let k = history.len();
    if k < 3 {
        return Ok(None);
    }
    let (d0, d1) = (history[k - 2] - history[k - 3], history[k - 1] - history[k - 2]);
    if !(d0 > 0.0 && d1 > 0.0 && d1 < d0) {
        return Ok(None);
    }
    let rho = d1 / d0;
    let v = history[k - 1];
    let mut step = d1 * rho / (1.0 - rho);
    // the contraction rate drifts, so a full projection can overshoot
    for _ in 0..6 {
        let v_ext = v + step;
        if v_ext > v && v_ext < v_max {
            let v_a_ext = root_in(|x| xi_v(r, v_ext, x), v_a, v_ext)?;
            if xi_f(r, beta, fbar, v_ext, v_a_ext) <= 0.0 {
                return Ok(Some((v_ext, v_a_ext)));
            }
        }
        step *= 0.5;
    }
    Ok(None)
}

/// [`lambda_reg`] with the iterates of the alternating search.
pub fn lambda_reg_report(r: &RegenInputs, beta: f64, fbar: f64) -> Result<RegenSolution> {
    let mut v = lambda(&r.n, beta, fbar)?;
    let mut v_a = 0.0;
    let mut trace = Vec::new();
    if !r.active_at(v) {
        return Ok(RegenSolution { v, v_a, iterations: 0, trace });
    }
    let v_max = (r.n.f_hm() - fbar) / beta;
    let mut history: Vec<f64> = vec![v];
    for iter in 1..=MAX_OUTER {
        v_a = root_in(|x| xi_v(r, v, x), v_a, v)?;
        if xi_f(r, beta, fbar, v, v_a).abs() < FORCE_TOL {
            trace.push((v, v_a));
            return Ok(RegenSolution { v, v_a, iterations: iter, trace });
        }
        v = root_in(|x| xi_f(r, beta, fbar, x, v_a), v, v_max)?;
        trace.push((v, v_a));
        if xi_v(r, v, v_a).abs() < FLOW_TOL {
            return Ok(RegenSolution { v, v_a, iterations: iter, trace });
        }
        history.push(v);
        if let Some((v_ext, v_a_ext)) = extrapolate(r, beta, fbar, &history, v_a, v_max)? {
            v = v_ext;
            v_a = v_a_ext;
            history.clear();
            history.push(v);
        }
    }
    Err(Error::Convergence { best: v, iterations: MAX_OUTER })
}

/// The unique `v` with `beta v + fbar ∈ Γ_reg(v)`, by alternating monotone
/// root searches in `v_a` and `v` starting from the no-regeneration
/// solution.
pub fn lambda_reg(r: &RegenInputs, beta: f64, fbar: f64) -> Result<f64> {
    lambda_reg_report(r, beta, fbar).map(|s| s.v)
}
