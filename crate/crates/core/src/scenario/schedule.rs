//! Time schedules for operator inputs.

use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    /// Hold each value until the next time stamp.
    Step,
    Linear,
}

/// As written in a scenario file: a bare number or a table of `[t, value]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Constant(f64),
    Table {
        interp: Interp,
        points: Vec<[f64; 2]>,
    },
}

/// A validated schedule. Before the first and after the last time stamp
/// the end values are held.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    Table { interp: Interp, t: Vec<f64>, y: Vec<f64> },
}

impl Schedule {
    pub fn constant(y: f64) -> Self {
        Schedule::Constant(y)
    }

    /// Checks finiteness and strictly increasing time stamps. Problems are
    /// reported against `name`.
    pub fn from_spec(name: &str, spec: &ScheduleSpec) -> std::result::Result<Self, String> {
        match spec {
            ScheduleSpec::Constant(y) if y.is_finite() => Ok(Schedule::Constant(*y)),
            ScheduleSpec::Constant(y) => Err(format!("{name}: value {y} is not finite")),
            ScheduleSpec::Table { interp, points } => {
                if points.is_empty() {
                    return Err(format!("{name}: schedule has no points"));
                }
                if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                    return Err(format!("{name}: schedule points must be finite"));
                }
                if let Some(w) = points.windows(2).find(|w| w[1][0] <= w[0][0]) {
                    return Err(format!(
                        "{name}: time stamps must be strictly increasing ({} then {})",
                        w[0][0], w[1][0]
                    ));
                }
                Ok(Schedule::Table {
                    interp: *interp,
                    t: points.iter().map(|p| p[0]).collect(),
                    y: points.iter().map(|p| p[1]).collect(),
                })
            }
        }
    }

    pub fn eval(&self, time: f64) -> f64 {
        let (interp, t, y) = match self {
            Schedule::Constant(y) => return *y,
            Schedule::Table { interp, t, y } => (interp, t, y),
        };
        // index of the first stamp strictly after `time`
        let k = t.partition_point(|&s| s <= time);
        if k == 0 {
            return y[0];
        }
        if k == t.len() {
            return y[k - 1];
        }
        match interp {
            Interp::Step => y[k - 1],
            Interp::Linear => {
                let w = (time - t[k - 1]) / (t[k] - t[k - 1]);
                y[k - 1] + w * (y[k] - y[k - 1])
            }
        }
    }

    /// Smallest and largest value the schedule takes.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Schedule::Constant(y) => (*y, *y),
            Schedule::Table { y, .. } => y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
        }
    }

    /// Whether the schedule is zero at some time. Linear segments that cross
    /// zero count.
    pub fn touches_zero(&self) -> bool {
        match self {
            Schedule::Constant(y) => *y == 0.0,
            Schedule::Table { interp, y, .. } => {
                y.iter().any(|&v| v == 0.0)
                    || (*interp == Interp::Linear && y.windows(2).any(|w| w[0].signum() != w[1].signum()))
            }
        }
    }
}
