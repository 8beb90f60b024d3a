use penalized_nsf::cascade::RunSpec;
use penalized_nsf::diagnostics::{
    apriori_bounds, dissipation_inequality, entropy_production, renormalized_residual, Renormalization,
};
use penalized_nsf::fields::State;
use penalized_nsf::solver::{Coefficients, Frame, Model, PenaltyParams, Scenario, SchemeConfig};
use penalized_nsf::thermo::{EosModel, TransportCoeffs};

fn shear_model() -> Model {
    let sc = Scenario::Disk2d;
    let grid = sc.grid(64).unwrap();
    let params = PenaltyParams { eta: 1.0, omega: 1.0, nu: 1.0, alpha: 2.0 * grid.h(), ..PenaltyParams::default() };
    let domain = sc.domain(&grid, params.alpha, 0.1).unwrap();
    let transport = TransportCoeffs { mu_lower: 1.0, mu_upper: 2.0, mu_slope: 2.0, bulk: 0.0, ..TransportCoeffs::default() };
    Model::new(grid, domain, EosModel::default(), transport, params, SchemeConfig::default()).unwrap()
}

fn uniform(model: &Model, velocity: impl Fn([f64; 2]) -> [f64; 2]) -> State {
    let coeffs = Coefficients::at(model, 0.0);
    let mut s = State::zeros(model.grid.len());
    for (k, x) in model.grid.centers().into_iter().enumerate() {
        s.rho[k] = 1.0;
        s.momentum[k] = velocity(x);
        s.rhoe[k] = model.eos.internal_energy_unchecked(1.0, 1.0, coeffs.a_loc[k]);
    }
    s
}

#[test]
fn uniform_state_produces_no_entropy() {
    let model = shear_model();
    let frame = Frame::build(&model, &uniform(&model, |_| [0.0, 0.0])).unwrap();
    let (viscous, conductive) = entropy_production(&model, &frame);
    assert!(viscous.iter().chain(&conductive).all(|&v| v == 0.0));
}

#[test]
fn pure_shear_produces_two_gamma_squared() {
    let model = shear_model();
    let frame = Frame::build(&model, &uniform(&model, |x| [0.0, x[0]])).unwrap();
    let (viscous, _) = entropy_production(&model, &frame);
    let grid = &model.grid;
    let mut checked = 0;
    for k in 0..grid.len() {
        if grid.distance_to_boundary(grid.center(k)) > 2.0 * grid.h() {
            approx::assert_relative_eq!(viscous[k], 2.0, max_relative = 1e-10);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn renormalized_residual_vanishes_at_rest() {
    let grid = Scenario::FixedBox.grid(50).unwrap();
    let states: Vec<State> = (0..5)
        .map(|i| {
            let mut s = State::zeros(grid.len());
            s.time = 0.1 * i as f64;
            for (k, r) in s.rho.iter_mut().enumerate() {
                *r = 0.5 + (k as f64 * 0.37).sin().abs();
            }
            s
        })
        .collect();
    for tag in Renormalization::LIBRARY {
        assert!(renormalized_residual(&states, &grid, tag, 0.0).unwrap().abs() <= 1e-12);
    }
    assert!(renormalized_residual(&[], &grid, Renormalization::Zero, 0.0).is_err());
    assert!(Renormalization::from_tag("cubic").is_err());
    assert_eq!(Renormalization::from_tag("min:3").unwrap(), Renormalization::Truncation(3.0));
}

#[test]
fn piston_run_satisfies_the_pointwise_signs() {
    let spec = RunSpec::new(Scenario::Piston1d, 200, 0.3).unwrap();
    let (_, _, report) = spec.run().unwrap();
    let checks = dissipation_inequality(&report);
    assert!(checks[0].lhs <= checks[0].rhs);
    for (c, cp) in checks.iter().zip(&report.checkpoints) {
        assert!(c.lhs.is_finite() && c.lhs >= -1e-10, "t = {}: {}", c.time, c.lhs);
        assert!(cp.min_relative_entropy >= -1e-13);
        assert!(cp.penalty_flux >= 0.0 && cp.entropy_production >= 0.0 && cp.confinement >= 0.0);
    }
    assert!(apriori_bounds(&report).values().iter().all(|v| v.is_finite()));
    assert_eq!(report.initial().confinement, 0.0);
}

#[test]
fn csv_has_one_row_per_checkpoint() {
    let spec = RunSpec::new(Scenario::Piston1d, 200, 0.1).unwrap();
    let (_, _, report) = spec.run().unwrap();
    let text = String::from_utf8(report.write_csv(Vec::new()).unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), report.checkpoints.len() + 1);
    assert_eq!(lines[0].split(',').count(), penalized_nsf::diagnostics::CSV_COLUMNS.len());
    assert!(lines[0].starts_with("t,steps,M,"));
}
