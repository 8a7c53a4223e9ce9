//! Bracketed root finding for continuous monotone scalar functions.

use crate::error::{Error, Result};

/// Stopping rules for [`find_root_monotone`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    /// Bracket width at which the search stops.
    pub abs_tol: f64,
    /// Residual magnitude at which the search stops.
    pub res_tol: f64,
    pub max_iter: usize,
    /// Take an Illinois false-position step before each bisection step.
    pub accelerate: bool,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            abs_tol: 1e-10,
            res_tol: 1e-8,
            max_iter: 200,
            accelerate: true,
        }
    }
}

impl RootConfig {
    pub fn new(abs_tol: f64, res_tol: f64, max_iter: usize) -> Result<Self> {
        let cfg = RootConfig {
            abs_tol,
            res_tol,
            max_iter,
            accelerate: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn bisection(mut self) -> Self {
        self.accelerate = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.res_tol > 0.0) || self.max_iter < 1 {
            return Err(Error::Config(format!(
                "root finder needs abs_tol > 0, res_tol > 0, max_iter >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }

    /// Copy with `abs_tol` multiplied by `arg_scale` and `res_tol` by `res_scale`.
    pub fn scaled(&self, arg_scale: f64, res_scale: f64) -> Self {
        RootConfig {
            abs_tol: self.abs_tol * arg_scale,
            res_tol: self.res_tol * res_scale,
            ..*self
        }
    }
}

/// Result of a root search with iteration bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootReport {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finds `x` in `[lo, hi]` with `f(x) ≈ 0` for a continuous monotone `f`
/// whose endpoint values do not share a strict sign.
pub fn find_root_monotone<F>(f: F, lo: f64, hi: f64, cfg: &RootConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    solve(f, lo, hi, cfg).map(|r| r.x)
}

/// [`find_root_monotone`] returning the iteration count and final residual.
pub fn solve<F>(f: F, lo: f64, hi: f64, cfg: &RootConfig) -> Result<RootReport>
where
    F: Fn(f64) -> f64,
{
    if !(lo <= hi) {
        return Err(Error::Domain(format!("root bracket out of order: [{lo}, {hi}]")));
    }
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_nan() {
            Err(Error::Domain(format!("function is NaN at {x}")))
        } else {
            Ok(y)
        }
    };

    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    if fa == 0.0 {
        return Ok(RootReport { x: a, residual: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(RootReport { x: b, residual: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket { lo, hi, f_lo: fa, f_hi: fb });
    }

    let best = |a: f64, fa: f64, b: f64, fb: f64| {
        if fa.abs() <= fb.abs() {
            (a, fa)
        } else {
            (b, fb)
        }
    };

    // Illinois bookkeeping: the end that did not move in the previous
    // false-position step gets its value halved when placing the next one.
    let mut last_moved = 0i8;
    for iter in 1..=cfg.max_iter {
        if cfg.accelerate {
            let (ga, gb) = match last_moved {
                -1 => (fa, 0.5 * fb),
                1 => (0.5 * fa, fb),
                _ => (fa, fb),
            };
            let x = b - gb * (b - a) / (gb - ga);
            if x > a && x < b {
                let fx = eval(x)?;
                if fx.abs() <= cfg.res_tol {
                    return Ok(RootReport { x, residual: fx, iterations: iter });
                }
                if fx.signum() == fa.signum() {
                    a = x;
                    fa = fx;
                    last_moved = -1;
                } else {
                    b = x;
                    fb = fx;
                    last_moved = 1;
                }
            }
        }

        if b - a <= cfg.abs_tol {
            let (x, fx) = best(a, fa, b, fb);
            return Ok(RootReport { x, residual: fx, iterations: iter });
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            let (x, fx) = best(a, fa, b, fb);
            return Ok(RootReport { x, residual: fx, iterations: iter });
        }
        let fm = eval(mid)?;
        if fm.abs() <= cfg.res_tol {
            return Ok(RootReport { x: mid, residual: fm, iterations: iter });
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
        if b - a <= cfg.abs_tol {
            let (x, fx) = best(a, fa, b, fb);
            return Ok(RootReport { x, residual: fx, iterations: iter });
        }
    }
    let (x, _) = best(a, fa, b, fb);
    Err(Error::Convergence { best: x, iterations: cfg.max_iter })
}
