use super::continuity::{flux_divergence, Transport};
use super::linalg::conjugate_gradient;
use super::{Coefficients, Frame, Model};
use crate::error::{Error, Result};
use crate::fields::Grid;

/// Interior faces `(k, r)` with their averaged conductivity contrast.
fn conduction_faces(grid: &Grid<f64>, chi: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(grid.len() * grid.dim());
    for a in 0..grid.dim() {
        for k in 0..grid.len() {
            if let Some(r) = grid.neighbor(k, a, true) {
                out.push((k, r, 0.5 * (chi[k] + chi[r])));
            }
        }
    }
    out
}

/// `Σ_faces χ_f (K_nb - K_k) / h²`, the conservative discretization of `div(χ ∇K)`
/// with zero flux through `∂B`.
fn conduction(faces: &[(usize, usize, f64)], kpot: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; kpot.len()];
    let inv = 1.0 / (h * h);
    for &(k, r, chi) in faces {
        let f = chi * (kpot[r] - kpot[k]) * inv;
        out[k] += f;
        out[r] -= f;
    }
    out
}

/// Internal-energy update. Advection of the specific energy by the mass flux,
/// the compression work `p_η div u` at the transport velocities, `heating` and
/// any external source are explicit, the result raised to the `theta_min`
/// energy where it falls below (counted as floor hits); conduction and the
/// `λϑ⁵` sink are backward Euler, solved by Newton's method in the variable
/// `K(ϑ)` so that every linear system is symmetric positive definite.
#[allow(clippy::too_many_arguments)]
pub fn energy_step(
    model: &Model,
    frame: &Frame,
    next: &Coefficients,
    transport: Option<&Transport>,
    rhoe: &[f64],
    rho_new: &[f64],
    heating: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, usize)> {
    let grid = &model.grid;
    let n = grid.len();
    let h = grid.h();
    let eos = &model.eos;
    let tr = &model.transport;
    let lambda = model.params.lambda;

    let mut explicit = rhoe.to_vec();
    if let Some(tr) = transport {
        let div = flux_divergence(grid, &tr.specific_fluxes(grid, rhoe, model.scheme.rho_vac));
        for k in 0..n {
            explicit[k] -= dt * div[k];
        }
    }
    for k in 0..n {
        explicit[k] += dt * heating[k];
    }
    if let Some(src) = &model.energy_source {
        let centers = grid.centers();
        for k in 0..n {
            explicit[k] += dt * src(next.time, centers[k]);
        }
    }
    if let Some(tr) = transport {
        let div = flux_divergence(grid, &tr.velocity);
        for k in 0..n {
            let p_eta = eos.pressure_unchecked(tr.rho[k], frame.theta[k], frame.coeffs.a_loc[k], 0.0);
            explicit[k] -= dt * p_eta * div[k];
        }
    }
    let a = &next.a_loc;
    let mut floor_hits = 0;
    for k in 0..n {
        let floor = eos.internal_energy_unchecked(rho_new[k], model.scheme.theta_min, a[k]);
        if explicit[k] < floor {
            explicit[k] = floor;
            floor_hits += 1;
        }
    }
    let faces = conduction_faces(grid, &next.chi_cond);

    let residual = |theta: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let kpot: Vec<f64> = theta.iter().map(|&t| tr.conductivity_primitive_unchecked(t)).collect();
        let cond = conduction(&faces, &kpot, h);
        let sources: Vec<f64> = (0..n)
            .map(|k| {
                let t = theta[k];
                dt * cond[k] - dt * lambda * t.powi(5)
            })
            .collect();
        let r = (0..n)
            .map(|k| eos.internal_energy_unchecked(rho_new[k], theta[k], a[k]) - explicit[k] - sources[k])
            .collect();
        (r, sources)
    };

    let mut theta = frame.theta.clone();
    let scale: Vec<f64> = explicit.iter().map(|e| e.abs().max(1e-300)).collect();
    let inv_h2 = 1.0 / (h * h);
    let mut converged = false;
    for _ in 0..60 {
        let (r, _) = residual(&theta);
        let kappa: Vec<f64> = theta.iter().map(|&t| tr.conductivity(t)).collect();
        let diag_d: Vec<f64> = (0..n)
            .map(|k| {
                let t = theta[k];
                let cv = eos.heat_capacity(rho_new[k], t, a[k]);
                (cv + 5.0 * dt * lambda * t.powi(4)) / kappa[k]
            })
            .collect();
        let mut diag = diag_d.clone();
        for &(k, rr, chi) in &faces {
            diag[k] += dt * chi * inv_h2;
            diag[rr] += dt * chi * inv_h2;
        }
        let apply = |x: &[f64], out: &mut [f64]| {
            for k in 0..n {
                out[k] = diag_d[k] * x[k];
            }
            for &(k, rr, chi) in &faces {
                let f = dt * chi * (x[k] - x[rr]) * inv_h2;
                out[k] += f;
                out[rr] -= f;
            }
        };
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut dk = vec![0.0; n];
        conjugate_gradient(apply, &diag, &rhs, &mut dk, &vec![true; n], 1e-13)?;
        let mut max_rel: f64 = 0.0;
        for k in 0..n {
            let step = dk[k] / kappa[k];
            let updated = (theta[k] + step).max(0.2 * theta[k]);
            max_rel = max_rel.max(((updated - theta[k]) / theta[k]).abs());
            theta[k] = updated;
        }
        let worst = r.iter().zip(&scale).map(|(v, s)| (v / s).abs()).fold(0.0, f64::max);
        if max_rel < 1e-12 || worst < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        let (r, _) = residual(&theta);
        let worst = r.iter().zip(&scale).map(|(v, s)| (v / s).abs()).fold(0.0, f64::max);
        if worst > 1e-9 {
            return Err(Error::SolverDivergence { iterations: 60, residual: worst });
        }
    }
    let (_, sources) = residual(&theta);
    Ok(((0..n).map(|k| explicit[k] + sources[k]).collect(), floor_hits))
}
