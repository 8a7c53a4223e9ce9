use nshyd_core::actuator::{gamma, normalize, orifice_coefficient, ActuatorParams, ValveCommand};
use nshyd_core::oracle::solve_inclusion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn check_grid(p: &ActuatorParams, cmd: &ValveCommand, points: usize, v_max: f64) {
    let n = normalize(p, cmd).unwrap();
    for i in 0..points {
        let v = -v_max + 2.0 * v_max * i as f64 / (points - 1) as f64;
        let o = solve_inclusion(&n, v).unwrap();
        let g = gamma(&n, v);
        assert!(
            close(o.lo, g.lo, 1e-6) && close(o.hi, g.hi, 1e-6),
            "cmd = {:?}, v = {v}: oracle {o:?} vs map {g:?}",
            cmd.as_array()
        );
    }
}

#[test]
fn reference_cylinder_with_asymmetric_openings() {
    let p = ActuatorParams::reference();
    for u in [
        [0.5, 0.1, 0.0, 0.0, 0.2],
        [0.1, 0.8, 0.0, 0.0, 0.05],
        [0.0, 0.0, 0.9, 0.2, 0.2],
        [0.0, 0.0, 0.2, 1.0, 0.0],
        [1.0, 0.0, 0.0, 0.0, 0.4],
        [0.0, 0.6, 0.0, 0.0, 0.4],
        [0.0, 0.0, 0.7, 0.0, 0.3],
        [0.0, 0.0, 0.0, 0.7, 0.3],
    ] {
        let cmd = ValveCommand::new(u[0], u[1], u[2], u[3], u[4]).unwrap();
        check_grid(&p, &cmd, 81, 1.0);
    }
}

#[test]
fn random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let area_head = rng.random_range(0.005..0.05);
        let c = |rng: &mut ChaCha8Rng| orifice_coefficient(0.6, rng.random_range(1e-5..5e-4), 850.0);
        let p = ActuatorParams {
            area_head,
            area_rod: rng.random_range(0.3..0.9) * area_head,
            relief_head: rng.random_range(20e6..50e6),
            relief_rod: rng.random_range(20e6..50e6),
            relief_pump: rng.random_range(10e6..40e6),
            supply: rng.random_range(1e-3..2e-2),
            c_ph: c(&mut rng),
            c_th: c(&mut rng),
            c_pr: c(&mut rng),
            c_tr: c(&mut rng),
            c_b: c(&mut rng),
        };
        let u_c: f64 = rng.random_range(-1.0..1.0);
        let u_b = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) };
        let cmd = match ValveCommand::from_lever(u_c, u_b) {
            Ok(c) => c,
            Err(_) => continue,
        };
        check_grid(&p, &cmd, 41, 1.5);
    }
}
