use thiserror::Error;

/// Errors raised by the hydraulic models, the solvers and the scenario layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A valve command is outside every admissible regime.
    #[error("valve command {0:?} is not in U0, U+ or U-")]
    Regime([f64; 5]),

    /// Root bracket does not enclose a sign change.
    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// An iterative solver ran out of iterations.
    #[error("no convergence after {iterations} iterations (best iterate {best})")]
    Convergence { best: f64, iterations: usize },

    /// Parameter blocks that are individually valid but not usable together.
    #[error("configuration error: {0}")]
    Config(String),

    /// Actuator anchor points coincide.
    #[error("geometry singularity: actuator length is zero")]
    Geometry,

    /// A (velocity, force) pair that is not on the graph of the map.
    #[error("force {force} is not in the map at v = {velocity} (expected [{lo}, {hi}])")]
    Inconsistent {
        velocity: f64,
        force: f64,
        lo: f64,
        hi: f64,
    },

    /// The brute-force solver found no consistent branch combination.
    #[error("no consistent solution of the inclusion system at v = {0}")]
    Infeasible(f64),

    /// Actuator velocities at a shared pump that need more flow than the
    /// pump delivers even at zero junction pressure.
    #[error("actuators draw {shortfall} m^3/s more than the pump supplies")]
    Overdrawn { shortfall: f64 },

    /// A scenario file that does not parse or fails validation; one
    /// message per offending field.
    #[error("invalid scenario: {}", .0.join("; "))]
    Scenario(Vec<String>),

    /// A time step failed; carries the step index and the state before it.
    #[error("step {step} at t = {t} failed ({state}): {source}")]
    Step {
        step: usize,
        t: f64,
        state: String,
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
