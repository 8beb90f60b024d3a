use proptest::prelude::*;

use penalized_nsf::cascade::fit_log_log;
use penalized_nsf::config::parse_config_str;
use penalized_nsf::fields::{read_snapshot, write_snapshot, Grid, State};
use penalized_nsf::solver::{continuity_step, face_velocities, relax_normal, Reconstruction};

fn recon() -> impl Strategy<Value = Reconstruction> {
    prop_oneof![Just(Reconstruction::Upwind), Just(Reconstruction::Minmod), Just(Reconstruction::Superbee)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn continuity_telescopes_and_stays_positive(
        cells in proptest::collection::vec((0.01f64..5.0, -1.0f64..1.0), 8..64),
        courant in 0.05f64..0.45,
        scheme in recon(),
    ) {
        let grid = Grid::new_1d(0.0, 1.0, cells.len()).unwrap();
        let rho: Vec<f64> = cells.iter().map(|c| c.0).collect();
        let u: Vec<[f64; 2]> = cells.iter().map(|c| [c.1, 0.0]).collect();
        let umax = u.iter().map(|v| v[0].abs()).fold(1e-12, f64::max);
        let dt = courant * grid.h() / umax;
        let (next, _) = continuity_step(&grid, &rho, &face_velocities(&grid, &u), dt, scheme).unwrap();
        let before = grid.integrate(rho.iter().copied());
        let after = grid.integrate(next.iter().copied());
        prop_assert!((after - before).abs() <= 1e-13 * before);
        prop_assert!(next.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn relaxation_contracts_the_normal_jump(
        u in proptest::array::uniform2(-10.0f64..10.0),
        v in proptest::array::uniform2(-10.0f64..10.0),
        angle in 0.0f64..std::f64::consts::TAU,
        rho in 1e-6f64..10.0,
        w in 0.0f64..1e6,
    ) {
        let n = [angle.cos(), angle.sin()];
        let out = relax_normal(u, v, n, rho, w, true);
        let jump = |x: [f64; 2]| (x[0] - v[0]) * n[0] + (x[1] - v[1]) * n[1];
        let tangential = |x: [f64; 2]| -x[0] * n[1] + x[1] * n[0];
        prop_assert!(jump(out).abs() <= jump(u).abs() * (1.0 + 1e-12) + 1e-12);
        prop_assert!((tangential(out) - tangential(u)).abs() <= 1e-9 * (1.0 + tangential(u).abs()));
        prop_assert!((jump(out) - jump(u) * rho / (rho + w)).abs() <= 1e-9 * (1.0 + jump(u).abs()));
    }

    #[test]
    fn log_log_fit_recovers_power_laws(
        c in 1e-6f64..1e3,
        p in -3.0f64..3.0,
        first in 1e-4f64..1.0,
        ratio in 0.1f64..0.9,
        count in 3usize..8,
    ) {
        let xs: Vec<f64> = (0..count).map(|k| first * ratio.powi(k as i32)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(p)).collect();
        let fit = fit_log_log(&xs, &ys).unwrap();
        prop_assert!((fit.slope - p).abs() <= 1e-9);
        prop_assert!(fit.r2 >= 1.0 - 1e-9);
    }

    #[test]
    fn snapshots_round_trip_bitwise(
        nx in 8usize..20,
        ny in prop_oneof![Just(1usize), 8usize..16],
        seed in proptest::collection::vec(-1e6f64..1e6, 4),
        time in 0.0f64..10.0,
    ) {
        let grid = if ny == 1 {
            Grid::new_1d(-0.5, 1.5, nx).unwrap()
        } else {
            Grid::new_2d([0.0, 0.0], [nx as f64 * 0.125, ny as f64 * 0.125], [nx, ny]).unwrap()
        };
        let mut state = State::zeros(grid.len());
        state.time = time;
        for k in 0..grid.len() {
            let s = (k as f64 + 1.0).sqrt();
            state.rho[k] = (seed[0] * s).abs();
            state.momentum[k] = [seed[1] / s, if grid.dim() == 2 { seed[2] * s } else { 0.0 }];
            state.rhoe[k] = seed[3] + s;
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.nsf");
        write_snapshot(&state, &grid, &path).unwrap();
        let (back, grid_back) = read_snapshot(&path).unwrap();
        prop_assert_eq!(back, state);
        prop_assert_eq!(grid_back.cells(), grid.cells());
        prop_assert_eq!(grid_back.h(), grid.h());
    }

    #[test]
    fn config_dump_is_a_fixed_point(
        scenario in prop_oneof![Just("piston1d"), Just("disk2d"), Just("fixedbox")],
        epsilon in 1e-6f64..1e-1,
        omega in 1e-4f64..1.0,
        cfl in 0.05f64..0.9,
        t_end in 0.01f64..2.0,
        auto_alpha in any::<bool>(),
    ) {
        let n = if scenario == "disk2d" { 64 } else { 400 };
        let alpha = if auto_alpha { "auto".to_string() } else { "0.02".to_string() };
        let text = format!(
            "[run]\nscenario = {scenario}\nn = {n}\nt_end = {t_end}\n\
             [penalty]\nepsilon = {epsilon}\nomega = {omega}\nalpha = {alpha}\n[scheme]\ncfl = {cfl}\n"
        );
        let first = parse_config_str(&text).unwrap();
        let dumped = first.dump();
        let second = parse_config_str(&dumped).unwrap();
        prop_assert_eq!(&second.dump(), &dumped);
        prop_assert_eq!(second.spec.params.epsilon, epsilon);
        prop_assert_eq!(second.spec.scheme.cfl, cfl);
        prop_assert_eq!(second.spec.t_end, t_end);
    }
}
