//! Manufactured heat-conduction solution on the fixed box: with the flow
//! frozen (`u = 0`, uniform density, all contrasts one), the temperature
//! `ϑ = 1 + ½ cos(πx) e^{-t}` solves the internal-energy equation with an
//! explicit volumetric source.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{advance, Frame, Model, PenaltyParams, Scenario, SchemeConfig};
use crate::error::Result;
use crate::fields::State;
use crate::thermo::{EosModel, TransportCoeffs};

pub fn exact_temperature(t: f64, x: f64) -> f64 {
    1.0 + 0.5 * (PI * x).cos() * (-t).exp()
}

pub fn transport() -> TransportCoeffs<f64> {
    TransportCoeffs {
        kappa_m_lower: 0.5,
        kappa_m_upper: 1.0,
        kappa_r_lower: 0.05,
        kappa_r_upper: 0.1,
        ..TransportCoeffs::default()
    }
}

/// Model for the harness on `n` cells with time step `dt_per_h · h`.
pub fn model(n: usize, t_end: f64, dt_per_h: f64) -> Result<Model> {
    let sc = Scenario::FixedBox;
    let grid = sc.grid(n)?;
    let params = PenaltyParams { eta: 1.0, omega: 1.0, nu: 1.0, alpha: 2.0 * grid.h(), ..PenaltyParams::default() };
    let domain = sc.domain(&grid, params.alpha, t_end)?;
    let scheme = SchemeConfig {
        frozen_flow: true,
        fixed_dt: Some(dt_per_h * grid.h()),
        checkpoints: 1,
        ..SchemeConfig::default()
    };
    let eos = EosModel::default();
    let tr = transport();
    let lambda = params.lambda;
    let rho = 1.0;
    let (eos_c, tr_c) = (eos.clone(), tr.clone());
    let source = move |t: f64, x: [f64; 2]| {
        let decay = (-t).exp();
        let th = exact_temperature(t, x[0]);
        let th_t = -0.5 * (PI * x[0]).cos() * decay;
        let th_x = -0.5 * PI * (PI * x[0]).sin() * decay;
        let th_xx = -0.5 * PI * PI * (PI * x[0]).cos() * decay;
        let dkappa = tr_c.kappa_m_lower + 3.0 * tr_c.kappa_r_lower * th * th;
        eos_c.heat_capacity(rho, th, eos_c.radiation) * th_t - dkappa * th_x * th_x - tr_c.conductivity(th) * th_xx
            + lambda * th.powi(5)
    };
    Ok(Model::new(grid, domain, eos, tr, params, scheme)?.with_energy_source(Arc::new(source)))
}

pub fn initial_state(model: &Model) -> State {
    let grid = &model.grid;
    let mut s = State::zeros(grid.len());
    for (k, x) in grid.centers().into_iter().enumerate() {
        s.rho[k] = 1.0;
        s.rhoe[k] = model.eos.internal_energy_unchecked(1.0, exact_temperature(0.0, x[0]), model.eos.radiation);
    }
    s
}

/// `Σ |ϑ - ϑ_exact| h` at `t_end`.
pub fn l1_error(n: usize, t_end: f64, dt_per_h: f64) -> Result<f64> {
    let model = model(n, t_end, dt_per_h)?;
    let (state, _) = advance(&model, initial_state(&model), t_end)?;
    let frame = Frame::build(&model, &state)?;
    let grid = &model.grid;
    Ok(grid.integrate(
        grid.centers().iter().zip(&frame.theta).map(|(x, th)| (th - exact_temperature(state.time, x[0])).abs()),
    ))
}

/// Observed orders between successive refinements by factor two.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
