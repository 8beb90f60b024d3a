use super::{Frame, Model};
use crate::error::{Error, Result};
use crate::fields::State;

/// Admissible step and the two bounds it is derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeStep {
    pub dt: f64,
    /// `min h / (d (|u| + c_s))`.
    pub advective: f64,
    /// `min h² / (2d D)` over viscous and thermal diffusivities.
    pub diffusive: f64,
}

/// Time step from the acoustic CFL condition; the diffusive bound only
/// applies when viscosity and conduction are explicit. The penalty never
/// restricts the step since it is relaxed implicitly.
pub fn compute_dt(model: &Model, state: &State, frame: &Frame) -> Result<TimeStep> {
    let grid = &model.grid;
    let h = grid.h();
    let d = grid.dim() as f64;
    let eos = &model.eos;
    let tr = &model.transport;
    let c = &frame.coeffs;
    let mut advective = f64::INFINITY;
    let mut diffusive = f64::INFINITY;
    for k in 0..grid.len() {
        let rho = state.rho[k];
        let th = frame.theta[k];
        let speed = frame.u[k][0].hypot(frame.u[k][1]);
        let cv = eos.heat_capacity(rho, th, c.a_loc[k]);
        let mut diff = c.chi_cond[k] * tr.conductivity(th) / cv;
        if frame.vacuum[k] {
            if speed > 0.0 {
                advective = advective.min(h / (d * speed));
            }
        } else {
            let cs = eos.dp_drho(rho, th, model.params.delta).sqrt();
            advective = advective.min(h / (d * (speed + cs)));
            let visc = c.chi_visc[k] * (4.0 / 3.0 * tr.viscosity(th) + tr.bulk_viscosity(th)) / rho;
            diff = diff.max(visc);
        }
        if diff > 0.0 {
            diffusive = diffusive.min(h * h / (2.0 * d * diff));
        }
    }
    let cfl = model.scheme.cfl;
    let mut dt = if model.scheme.implicit_diffusion { cfl * advective } else { cfl * advective.min(diffusive) };
    if !dt.is_finite() {
        dt = cfl * diffusive;
    }
    if let Some(fixed) = model.scheme.fixed_dt {
        dt = fixed;
    }
    if !(dt > 1e-14) || !dt.is_finite() {
        return Err(Error::TimeStepCollapse(dt));
    }
    Ok(TimeStep { dt, advective, diffusive })
}
