use super::map::{gamma_tracked, Segment, Supply};
use super::NormalizedInputs;
use crate::error::{Error, Result};

/// Open/closed state of a pressure-controlled valve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValveState {
    Open,
    Closed,
    /// Not determined by the segment alone.
    Either,
}

/// States of the five passive valves on one segment of the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ValveStateReport {
    pub segment: Segment,
    pub head_relief: ValveState,
    pub head_suction: ValveState,
    pub pump_relief: ValveState,
    pub rod_suction: ValveState,
    pub rod_relief: ValveState,
}

const REL_TOL: f64 = 1e-6;

fn row(segment: Segment) -> [ValveState; 5] {
    use Segment::*;
    use ValveState::{Closed as X, Either as E, Open as O};
    // head relief, head suction, pump relief, rod suction, rod relief
    match segment {
        RodRelief => [X, O, E, X, O],
        Plus3 => [X, O, E, X, X],
        Plus2b => [X, X, O, X, O],
        Plus2a => [X, X, O, X, X],
        Plus1b => [X, X, X, X, O],
        Plus1a => [X, X, X, X, X],
        Plus0b => [O, X, E, X, O],
        Plus0a => [O, X, E, X, X],
        ZeroExtend | ZeroHold | ZeroRetract => [X, X, E, X, X],
        Minus0a => [X, X, E, X, O],
        Minus0b => [O, X, E, X, O],
        Minus1a => [X, X, X, X, X],
        Minus1b => [O, X, X, X, X],
        Minus2a => [X, X, O, X, X],
        Minus2b => [O, X, O, X, X],
        Minus3 => [X, X, E, O, X],
        HeadRelief => [O, X, E, O, X],
    }
}

/// Which passive valves are open at the operating point `(v, f)`.
///
/// Fails with [`Error::Inconsistent`] when `f` is not in `Γ(v)` within a
/// relative tolerance of `1e-6`.
pub fn valve_states(n: &NormalizedInputs, v: f64, f: f64) -> Result<ValveStateReport> {
    let (set, segment) = gamma_tracked(n, Supply::Pump, v);
    let scale = f.abs().max(set.lo.abs()).max(set.hi.abs()).max(1.0);
    if !set.contains(f, REL_TOL * scale) {
        return Err(Error::Inconsistent { velocity: v, force: f, lo: set.lo, hi: set.hi });
    }
    let [head_relief, head_suction, pump_relief, rod_suction, rod_relief] = row(segment);
    Ok(ValveStateReport { segment, head_relief, head_suction, pump_relief, rod_suction, rod_relief })
}
