//! Sweep and simulation runners and their CSV tables.

use super::{Mode, Scenario, SweepSpec};
use crate::actuator::{gamma, normalize, ValveCommand};
use crate::error::{Error, Result};
use crate::mbs::{simulate, simulate_shared, ArmInputs, ArmSetup, SharedSetup, TimeGrid};
use crate::multipump::{gamma_mul_report, xi_p, PumpNode};
use crate::regen::{gamma_reg_with_flow, RegenInputs, RegenValve};
use rayon::prelude::*;
use std::io;

/// Numeric output table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// CSV cell text: 17 significant digits in scientific notation.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// The named columns in the given order. Unknown names are skipped.
    pub fn select(&self, names: &[String]) -> Table {
        let idx: Vec<usize> = names.iter().filter_map(|n| self.header.iter().position(|h| h == n)).collect();
        Table {
            header: idx.iter().map(|&k| self.header[k].clone()).collect(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&k| r[k]).collect()).collect(),
        }
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_value(x)))?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Runs the scenario in its mode and applies the column selection.
pub fn run(sc: &Scenario) -> Result<Table> {
    let table = match sc.mode {
        Mode::Sweep => run_sweep(sc)?,
        Mode::Simulate => run_simulation(sc)?,
    };
    Ok(match &sc.columns {
        Some(cols) => table.select(cols),
        None => table,
    })
}

fn strs(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

const ARM_COLUMNS: [&str; 7] = ["theta", "thetadot", "v", "f", "p", "ell", "p_minus_ell"];

pub(super) fn header(sc: &Scenario) -> Vec<String> {
    let regen = sc.regen_coefficient.is_some();
    let pump = sc.pump.is_some();
    match sc.mode {
        Mode::Sweep => {
            let mut h = strs(&["u_c", "u_b"]);
            if regen {
                h.push("u_a".into());
            }
            if pump {
                h.push("v_other".into());
            }
            h.extend(strs(&["v", "f_lo", "f_hi"]));
            if regen {
                h.push("v_a".into());
            }
            if pump {
                h.extend(strs(&["pressure", "junction_surplus"]));
            }
            h
        }
        Mode::Simulate if pump => {
            let mut h = strs(&["t"]);
            for j in 1..=sc.arms.len() {
                h.extend(ARM_COLUMNS.iter().map(|c| format!("{c}_{j}")));
            }
            h.extend(strs(&["pressure", "relief_flow"]));
            h
        }
        Mode::Simulate => {
            let mut h = strs(&["t"]);
            h.extend(strs(&ARM_COLUMNS));
            if regen {
                h.push("v_a".into());
            }
            h
        }
    }
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("NSHYD_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Scenario(vec![format!("NSHYD_THREADS: expected a positive integer, got {s:?}")])),
        },
    }
}

#[derive(Debug, Clone, Copy)]
struct Combo {
    u_c: f64,
    u_b: f64,
    u_a: Option<f64>,
    v_other: Option<f64>,
}

fn combos(sw: &SweepSpec) -> Vec<Combo> {
    let opt = |xs: &[f64]| if xs.is_empty() { vec![None] } else { xs.iter().map(|&x| Some(x)).collect() };
    let mut out = Vec::new();
    for &u_c in &sw.u_c {
        for &u_b in &sw.u_b {
            for &u_a in &opt(&sw.u_a) {
                for &v_other in &opt(&sw.other_velocity) {
                    out.push(Combo { u_c, u_b, u_a, v_other });
                }
            }
        }
    }
    out
}

fn sweep_row(sc: &Scenario, c: &Combo, v: f64) -> Result<Vec<f64>> {
    let n = normalize(&sc.actuator, &ValveCommand::from_lever(c.u_c, c.u_b)?)?;
    let mut row = vec![c.u_c, c.u_b];
    row.extend(c.u_a);
    row.extend(c.v_other);
    row.push(v);
    match (sc.regen_coefficient, &sc.pump) {
        (Some(c_a), _) => {
            let r = RegenInputs::new(n, RegenValve { c_a, u_a: c.u_a.unwrap_or(0.0) })?;
            let (g, v_a) = gamma_reg_with_flow(&r, v)?;
            row.extend([g.lo, g.hi, v_a]);
        }
        (None, Some(pump)) => {
            let node = PumpNode::new(pump.supply, pump.relief_pump, sc.actuator.c_b * c.u_b, vec![n, n])?;
            let vs = [v, c.v_other.unwrap_or(0.0)];
            match gamma_mul_report(&node, &vs) {
                Ok(s) => {
                    let surplus = xi_p(&node, s.pressure, &vs)?;
                    row.extend([s.forces[0].lo, s.forces[0].hi, s.pressure, surplus]);
                }
                // the pump cannot feed these velocities at any pressure
                Err(Error::Overdrawn { .. }) => row.extend([f64::NAN; 4]),
                Err(e) => return Err(e),
            }
        }
        (None, None) => {
            let g = gamma(&n, v);
            row.extend([g.lo, g.hi]);
        }
    }
    Ok(row)
}

/// Evaluates the force map over the velocity grid for every command
/// combination. Rows come in grid order whatever the thread count.
pub fn run_sweep(sc: &Scenario) -> Result<Table> {
    let sw = sc.sweep.as_ref().ok_or_else(|| Error::Scenario(vec!["sweep: missing [sweep] block".into()]))?;
    let cs = combos(sw);
    let vs = sw.velocities();
    let points: Vec<(usize, usize)> = (0..cs.len()).flat_map(|c| (0..vs.len()).map(move |k| (c, k))).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|&(c, k)| sweep_row(sc, &cs[c], vs[k]))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Table { header: header(sc), rows })
}

/// Steps the arm or arms over the scenario's time grid.
pub fn run_simulation(sc: &Scenario) -> Result<Table> {
    let sim = sc.simulation.ok_or_else(|| Error::Scenario(vec!["simulation: missing [simulation] block".into()]))?;
    let grid = TimeGrid::new(sim.h, sim.t_end)?;
    let setups: Vec<ArmSetup> = sc
        .arms
        .iter()
        .map(|a| ArmSetup {
            arm: a.arm,
            actuator: sc.actuator,
            regen_coefficient: sc.regen_coefficient,
            stiffness: sim.stiffness,
            viscosity: sim.viscosity,
            theta0: a.theta0,
            thetadot0: a.thetadot0,
        })
        .collect();
    let header = header(sc);
    let rows = match &sc.pump {
        None => {
            let a = &sc.arms[0];
            let u_b = a.u_b.as_ref().ok_or_else(|| Error::Scenario(vec!["arm[1].u_b: missing".into()]))?;
            let recs = simulate(&setups[0], grid, |t| ArmInputs {
                u_c: a.u_c.eval(t),
                u_b: u_b.eval(t),
                u_a: a.u_a.eval(t),
                f_ey: a.f_ey.eval(t),
            })?;
            recs.iter()
                .map(|r| {
                    let x = r.arm;
                    let mut row = vec![x.t, x.theta, x.thetadot, x.v, x.f, x.p, x.ell, x.deflection()];
                    if sc.regen_coefficient.is_some() {
                        row.push(r.v_a);
                    }
                    row
                })
                .collect()
        }
        Some(pump) => {
            let u_b = pump.u_b.as_ref().ok_or_else(|| Error::Scenario(vec!["pump.u_b: missing".into()]))?;
            let setup = SharedSetup { arms: setups, supply: pump.supply, relief_pump: pump.relief_pump, c_b: sc.actuator.c_b };
            let recs = simulate_shared(&setup, grid, |j, t| {
                let a = &sc.arms[j];
                ArmInputs { u_c: a.u_c.eval(t), u_b: u_b.eval(t), u_a: 0.0, f_ey: a.f_ey.eval(t) }
            })?;
            recs.iter()
                .map(|r| {
                    let mut row = vec![r.t];
                    for x in &r.arms {
                        row.extend([x.theta, x.thetadot, x.v, x.f, x.p, x.ell, x.deflection()]);
                    }
                    row.extend([r.pressure, r.relief_flow]);
                    row
                })
                .collect()
        }
    };
    Ok(Table { header, rows })
}
