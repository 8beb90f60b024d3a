//! Acoustic pressure–velocity coupling at faces.
//!
//! Each face carries the linearized Riemann state `(u*, p*)` of its two cells,
//! weighted by the impedances `Z = ρ c` with the isothermal sound speed that
//! bounds the time step. The momentum equation takes the pressure force from
//! `p*` and the internal energy takes the compression work from `u*`; their sum
//! telescopes up to the nonnegative face dissipation
//! `Z_L (u* − u_L)² + Z_R (u* − u_R)²`, which is returned to each side as heat.
//! Where `u*` is clipped to the signal speed, each side keeps its own
//! `p* = p ∓ Z (u* − u)` and the work of the resulting face force is heat too.
//! A light cell next to dense fluid therefore only feels its own pressure and
//! is not accelerated by its neighbor's.
//!
//! Faces inside the penalty band carry the interface penalty on their own
//! velocity component, a face force `κ n_a² (u* − V_a)` with `κ = h b / ε`,
//! solved together with the Riemann state. The two sides then see different
//! pressures and the face dissipates `κ n_a² (u* − V_a)²` into the penalty flux.

use super::continuity::FaceField;
use super::{penalty_band, Frame, Model};
use crate::fields::{Grid, State};

/// Face states of one step.
#[derive(Clone, Debug)]
pub struct AcousticFaces {
    /// Normal velocity `u*` on every forward face; zero on `∂B`.
    pub velocity: FaceField,
    /// Interface pressures `p*` seen by the low and the high side of every forward face;
    /// they differ by the penalty and clipping forces.
    pub pressure: Vec<[[f64; 2]; 2]>,
    /// Interface pressure on the `∂B` faces of each cell, `[axis][low, high]`.
    pub wall_pressure: Vec<[[f64; 2]; 2]>,
    /// Heating rate per unit volume released by the coupling.
    pub heating: Vec<f64>,
    /// `∫ b |(u* − V)·n|²` over the band faces, the face share of the penalty flux.
    pub penalty_flux: f64,
}

impl AcousticFaces {
    /// Pressure force `−(p*₊ − p*₋)/h` on cell `k` along `axis`.
    pub fn force(&self, grid: &Grid<f64>, k: usize, axis: usize) -> f64 {
        let hi = match grid.neighbor(k, axis, true) {
            Some(_) => self.pressure[k][axis][0],
            None => self.wall_pressure[k][axis][1],
        };
        let lo = match grid.neighbor(k, axis, false) {
            Some(l) => self.pressure[l][axis][1],
            None => self.wall_pressure[k][axis][0],
        };
        -(hi - lo) / grid.h()
    }
}

/// Acoustic impedance `ρ √(∂_ρp)`.
pub fn impedance(model: &Model, rho: f64, theta: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    rho * model.eos.dp_drho(rho, theta, model.params.delta).max(0.0).sqrt()
}

/// Isothermal signal speed `|u| + √(∂_ρp)` that bounds the time step.
fn signal_speed(model: &Model, state: &State, frame: &Frame, k: usize) -> f64 {
    let u = frame.u[k];
    let speed = u[0].hypot(u[1]);
    if frame.vacuum[k] {
        speed
    } else {
        speed + model.eos.dp_drho(state.rho[k], frame.theta[k], model.params.delta).sqrt()
    }
}

/// Face states from the cell values of `frame`. `u*` is clipped to the
/// adjacent signal speeds so the transport keeps the CFL bound of `compute_dt`.
pub fn acoustic_faces(model: &Model, state: &State, frame: &Frame) -> AcousticFaces {
    let grid = &model.grid;
    let n = grid.len();
    let h = grid.h();
    let t = frame.coeffs.time;
    let shape = model.domain.shape_at(t);
    let field = &model.domain.field;
    let eps = model.params.epsilon;
    let mut penalty_flux = 0.0;
    let z: Vec<f64> = (0..n)
        .map(|k| if frame.vacuum[k] { 0.0 } else { impedance(model, state.rho[k], frame.theta[k]) })
        .collect();
    let p = &frame.pressure;
    let u = &frame.u;
    let mut velocity = vec![[0.0; 2]; n];
    let mut pressure = vec![[[0.0; 2]; 2]; n];
    let mut wall_pressure = vec![[[0.0; 2]; 2]; n];
    let mut heating = vec![0.0; n];
    for k in 0..n {
        for a in 0..grid.dim() {
            match grid.neighbor(k, a, true) {
                Some(r) => {
                    let (zl, zr) = (z[k], z[r]);
                    let (ul, ur) = (u[k][a], u[r][a]);
                    let (pl, pr) = (p[k], p[r]);
                    let mut x = grid.center(k);
                    x[a] += 0.5 * h;
                    let b = penalty_band(model, shape.signed_distance(x));
                    // penalty stiffness on this component and its target `V·e_a`
                    let (kappa, target) = if b > 0.0 {
                        let na = shape.normal(x)[a];
                        (h * b / eps * na * na, field.velocity(t, x)[a])
                    } else {
                        (0.0, 0.0)
                    };
                    let s = zl + zr + kappa;
                    if s > 0.0 {
                        let mut cap = signal_speed(model, state, frame, k).max(signal_speed(model, state, frame, r));
                        if kappa > 0.0 {
                            cap = cap.max(target.abs());
                        }
                        let ideal = (zl * ul + zr * ur - (pr - pl) + kappa * target) / s;
                        let us = ideal.clamp(-cap, cap);
                        velocity[k][a] = us;
                        pressure[k][a] = [pl - zl * (us - ul), pr + zr * (us - ur)];
                        heating[k] += zl * (us - ul) * (us - ul) / h;
                        heating[r] += zr * (us - ur) * (us - ur) / h;
                        if kappa > 0.0 {
                            penalty_flux += eps * kappa * (ideal - target) * (us - target) * grid.cell_volume() / h;
                        }
                    } else {
                        velocity[k][a] = 0.5 * (ul + ur);
                        pressure[k][a] = [0.5 * (pl + pr); 2];
                    }
                }
                None => {
                    wall_pressure[k][a][1] = p[k] + z[k] * u[k][a];
                    heating[k] += z[k] * u[k][a] * u[k][a] / h;
                }
            }
            if grid.neighbor(k, a, false).is_none() {
                wall_pressure[k][a][0] = p[k] - z[k] * u[k][a];
                heating[k] += z[k] * u[k][a] * u[k][a] / h;
            }
        }
    }
    AcousticFaces { velocity, pressure, wall_pressure, heating, penalty_flux }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::State;
    use crate::solver::{initial_data, Coefficients, Model, PenaltyParams, Scenario, SchemeConfig};
    use crate::thermo::{EosModel, TransportCoeffs};

    fn box_model(n: usize) -> Model {
        let sc = Scenario::FixedBox;
        let grid = sc.grid(n).unwrap();
        let alpha = 2.0 * grid.h();
        let params = PenaltyParams { alpha, ..PenaltyParams::default() };
        let domain = sc.domain(&grid, alpha, 1.0).unwrap();
        Model::new(grid, domain, EosModel::default(), TransportCoeffs::default(), params, SchemeConfig::default())
            .unwrap()
    }

    #[test]
    fn uniform_state_has_no_force_or_heating() {
        let model = box_model(32);
        let mut state = State::zeros(model.grid.len());
        state.rho.iter_mut().for_each(|r| *r = 1.0);
        let coeffs = Coefficients::at(&model, 0.0);
        for k in 0..state.len() {
            state.rhoe[k] = model.eos.internal_energy_unchecked(1.0, 1.0, coeffs.a_loc[k]);
        }
        let frame = Frame::with_coefficients(&model, &state, coeffs).unwrap();
        let faces = acoustic_faces(&model, &state, &frame);
        for k in 0..state.len() {
            // the radiation pressure varies with the local constant across the band
            let smooth = frame.pressure[k] == frame.pressure[k.saturating_sub(1)]
                && frame.pressure[k] == frame.pressure[(k + 1).min(state.len() - 1)];
            if smooth {
                assert_eq!(faces.force(&model.grid, k, 0), 0.0);
                assert_eq!(faces.heating[k], 0.0);
            }
        }
    }

    #[test]
    fn work_pairs_with_force_up_to_heating_and_penalty() {
        let model = box_model(40);
        let mut state = initial_data(&model).unwrap();
        for k in 0..state.len() {
            let x = model.grid.center(k)[0];
            state.momentum[k][0] = state.rho[k] * (0.3 * (7.0 * x).sin());
            state.rhoe[k] *= 1.0 + 0.2 * (3.0 * x).cos();
        }
        let frame = Frame::build(&model, &state).unwrap();
        let f = acoustic_faces(&model, &state, &frame);
        let grid = &model.grid;
        let h = grid.h();
        let mut kinetic = 0.0;
        let mut internal = 0.0;
        let mut heat = 0.0;
        for k in 0..grid.len() {
            kinetic += frame.u[k][0] * f.force(grid, k, 0) * h;
            let hi = if grid.neighbor(k, 0, true).is_some() { f.velocity[k][0] } else { 0.0 };
            let lo = grid.neighbor(k, 0, false).map_or(0.0, |l| f.velocity[l][0]);
            internal -= frame.pressure[k] * (hi - lo);
            heat += f.heating[k] * h;
        }
        assert!(heat > 0.0 && f.penalty_flux > 0.0);
        let penalty = f.penalty_flux / model.params.epsilon;
        approx::assert_abs_diff_eq!(kinetic + internal + heat + penalty, 0.0, epsilon = 1e-12);
    }
}
