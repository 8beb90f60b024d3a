use super::continuity::{flux_divergence, FaceField};
use super::linalg::conjugate_gradient;
use super::{AcousticFaces, Coefficients, Frame, Model};
use crate::error::{Error, Result};
use crate::fields::{Grid, State};
use crate::scalar::Point;
use crate::thermo::{double_dot, stress_from_coefficients, Tensor};

#[derive(Clone, Debug)]
pub struct MomentumUpdate {
    pub momentum: Vec<Point<f64>>,
    /// Velocity after the viscous solve and the penalty relaxation.
    pub velocity: Vec<Point<f64>>,
    /// Cellwise `S_ω:∇u` of the viscous solve, the heating seen by the energy equation.
    pub dissipation: Vec<f64>,
}

/// Linear stencil of one velocity-gradient entry at a face.
#[derive(Clone, Copy, Debug, Default)]
struct Terms {
    items: [(usize, f64); 4],
    len: usize,
}

impl Terms {
    fn push(&mut self, cell: usize, coeff: f64) {
        self.items[self.len] = (cell, coeff);
        self.len += 1;
    }

    fn iter(&self) -> impl Iterator<Item = &(usize, f64)> {
        self.items[..self.len].iter()
    }

    fn eval(&self, u: &[f64], d: usize, c: usize) -> f64 {
        self.iter().map(|&(k, w)| w * u[k * d + c]).sum()
    }
}

/// A face of the viscous quadratic form: `∂_b u_c = Σ terms[b]` for every component `c`.
#[derive(Clone, Debug)]
struct Face {
    cells: [usize; 2],
    n_cells: usize,
    terms: [Terms; 2],
    weight: f64,
    mu: f64,
    eta: f64,
}

/// Centred difference along `axis` at cell `k` with odd (no-slip) ghosts.
fn centred_terms(grid: &Grid<f64>, k: usize, axis: usize, scale: f64, out: &mut Terms) {
    let c = scale / (2.0 * grid.h());
    match grid.neighbor(k, axis, true) {
        Some(r) => out.push(r, c),
        None => out.push(k, -c),
    }
    match grid.neighbor(k, axis, false) {
        Some(l) => out.push(l, -c),
        None => out.push(k, c),
    }
}

fn build_faces(grid: &Grid<f64>, mu: &[f64], eta: &[f64]) -> Vec<Face> {
    let d = grid.dim();
    let h = grid.h();
    let mut faces = Vec::with_capacity(grid.len() * d + 4 * grid.cells()[0].max(grid.cells()[1]));
    for a in 0..d {
        for k in 0..grid.len() {
            let fwd = grid.neighbor(k, a, true);
            let bwd = grid.neighbor(k, a, false);
            let mut candidates: Vec<(Option<usize>, bool)> = vec![(fwd, true)];
            if bwd.is_none() {
                candidates.push((None, false));
            }
            for (other, forward) in candidates {
                let mut terms = [Terms::default(); 2];
                let face = match other {
                    Some(r) => {
                        terms[a].push(r, 1.0 / h);
                        terms[a].push(k, -1.0 / h);
                        for (b, tb) in terms.iter_mut().enumerate().take(d) {
                            if b != a {
                                centred_terms(grid, k, b, 0.5, tb);
                                centred_terms(grid, r, b, 0.5, tb);
                            }
                        }
                        Face {
                            cells: [k, r],
                            n_cells: 2,
                            terms,
                            weight: 1.0 / d as f64,
                            mu: 0.5 * (mu[k] + mu[r]),
                            eta: 0.5 * (eta[k] + eta[r]),
                        }
                    }
                    None => {
                        // wall face: ghost value -u_k, tangential derivatives cancel
                        terms[a].push(k, if forward { -2.0 / h } else { 2.0 / h });
                        Face {
                            cells: [k, k],
                            n_cells: 1,
                            terms,
                            weight: 0.5 / d as f64,
                            mu: mu[k],
                            eta: eta[k],
                        }
                    }
                };
                faces.push(face);
            }
        }
    }
    faces
}

fn face_gradient(face: &Face, u: &[f64], d: usize) -> Tensor<f64> {
    let mut g = [[0.0; 3]; 3];
    for (c, row) in g.iter_mut().enumerate().take(d) {
        for (b, entry) in row.iter_mut().enumerate().take(d) {
            *entry = face.terms[b].eval(u, d, c);
        }
    }
    g
}

fn flatten(u: &[Point<f64>], d: usize) -> Vec<f64> {
    u.iter().flat_map(|v| v[..d].to_vec()).collect()
}

fn unflatten(x: &[f64], d: usize) -> Vec<Point<f64>> {
    x.chunks(d).map(|c| if d == 1 { [c[0], 0.0] } else { [c[0], c[1]] }).collect()
}

/// Cellwise `S_ω:∇u` with face viscosities: each face's quadratic form is
/// shared equally by the cells adjacent to it.
fn dissipation_on_faces(grid: &Grid<f64>, faces: &[Face], u: &[f64]) -> Vec<f64> {
    let d = grid.dim();
    let share = 0.5 / d as f64;
    let mut out = vec![0.0; grid.len()];
    for f in faces {
        let g = face_gradient(f, u, d);
        let s = stress_from_coefficients(f.mu, f.eta, &g);
        let q = double_dot(&s, &g).max(0.0);
        for &c in &f.cells[..f.n_cells] {
            out[c] += share * q;
        }
    }
    out
}

fn viscosity_fields(model: &Model, theta: &[f64], chi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let tr = &model.transport;
    let mu = theta.iter().zip(chi).map(|(&t, &c)| c * tr.viscosity(t)).collect();
    let eta = theta.iter().zip(chi).map(|(&t, &c)| c * tr.bulk_viscosity(t)).collect();
    (mu, eta)
}

/// Cellwise viscous dissipation `S_ω:∇u ≥ 0` of a frame.
pub fn face_dissipation(grid: &Grid<f64>, u: &[Point<f64>], mu: &[f64], eta: &[f64]) -> Vec<f64> {
    let faces = build_faces(grid, mu, eta);
    dissipation_on_faces(grid, &faces, &flatten(u, grid.dim()))
}

/// Interface penalty on the normal velocity of one cell with density `rho` and
/// weight `w = dt b / ε`: implicitly `(u − V)·n ↦ ρ (u − V)·n / (ρ + w)`,
/// explicitly `(u − V)·n ↦ (1 − w/ρ)(u − V)·n`.
pub fn relax_normal(u: Point<f64>, v: Point<f64>, n: Point<f64>, rho: f64, w: f64, implicit: bool) -> Point<f64> {
    let jump = (u[0] - v[0]) * n[0] + (u[1] - v[1]) * n[1];
    let change = if implicit { w * jump / (rho + w) } else { w * jump / rho };
    [u[0] - change * n[0], u[1] - change * n[1]]
}

/// Momentum update: upwind convection and the acoustic pressure force explicitly, then
/// backward-Euler viscosity, then the pointwise implicit interface penalty.
pub fn momentum_step(
    model: &Model,
    state: &State,
    frame: &Frame,
    faces: &AcousticFaces,
    rho_new: &[f64],
    mass_flux: &FaceField,
    next: &Coefficients,
    dt: f64,
) -> Result<MomentumUpdate> {
    let grid = &model.grid;
    let d = grid.dim();
    let n = grid.len();

    // convective fluxes of each momentum component, upwinded with the mass flux
    let mut m_star = state.momentum.clone();
    for c in 0..d {
        let flux: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let mut f = [0.0; 2];
                for (a, fa) in f.iter_mut().enumerate().take(d) {
                    if let Some(r) = grid.neighbor(k, a, true) {
                        let mf = mass_flux[k][a];
                        let up = if mf > 0.0 { k } else { r };
                        *fa = mf * frame.u[up][c];
                    }
                }
                f
            })
            .collect();
        let div = flux_divergence(grid, &flux);
        for k in 0..n {
            m_star[k][c] += dt * (faces.force(grid, k, c) - div[k]);
        }
    }

    let vac = model.scheme.rho_vac;
    let free_cell: Vec<bool> = rho_new.iter().map(|&r| r > vac).collect();
    let u_star: Vec<Point<f64>> = (0..n)
        .map(|k| {
            if free_cell[k] {
                [m_star[k][0] / rho_new[k], m_star[k][1] / rho_new[k]]
            } else {
                next.velocity[k]
            }
        })
        .collect();

    let (mu, eta) = viscosity_fields(model, &frame.theta, &next.chi_visc);
    let faces = build_faces(grid, &mu, &eta);
    let mut x = flatten(&u_star, d);
    let free: Vec<bool> = free_cell.iter().flat_map(|&f| std::iter::repeat(f).take(d)).collect();
    let rhs: Vec<f64> = (0..n * d).map(|i| rho_new[i / d] * x[i]).collect();
    let mut diag: Vec<f64> = (0..n * d).map(|i| rho_new[i / d]).collect();
    for f in &faces {
        let stiff = dt * f.weight * (2.0 * f.mu + f.eta);
        for t in &f.terms[..d] {
            for &(k, w) in t.iter() {
                for c in 0..d {
                    diag[k * d + c] += stiff * w * w;
                }
            }
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (o, (i, v)) in out.iter_mut().zip(x.iter().enumerate()) {
            *o = rho_new[i / d] * v;
        }
        for f in &faces {
            let g = face_gradient(f, x, d);
            let s = stress_from_coefficients(f.mu, f.eta, &g);
            let scale = dt * f.weight;
            for (b, t) in f.terms[..d].iter().enumerate() {
                for &(k, w) in t.iter() {
                    for c in 0..d {
                        out[k * d + c] += scale * w * s[c][b];
                    }
                }
            }
        }
    };
    if free.iter().any(|&f| f) {
        conjugate_gradient(apply, &diag, &rhs, &mut x, &free, 1e-12)?;
    }
    let dissipation = dissipation_on_faces(grid, &faces, &x);
    let mut u = unflatten(&x, d);

    let eps = model.params.epsilon;
    for k in 0..n {
        let b = next.band[k];
        if b == 0.0 || !free_cell[k] {
            continue;
        }
        let w = dt * b / eps;
        u[k] = relax_normal(u[k], next.velocity[k], next.normal[k], rho_new[k], w, model.scheme.implicit_penalty);
    }

    let mut momentum = Vec::with_capacity(n);
    for k in 0..n {
        let m = [rho_new[k] * u[k][0], rho_new[k] * u[k][1]];
        if !(m[0].is_finite() && m[1].is_finite()) {
            return Err(Error::NonFinite { field: "momentum", cell: k });
        }
        momentum.push(m);
    }
    Ok(MomentumUpdate { momentum, velocity: u, dissipation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_weight_halves_the_normal_velocity() {
        let u = relax_normal([1.0, 0.0], [0.0, 0.0], [1.0, 0.0], 1.0, 1.0, true);
        assert_eq!(u, [0.5, 0.0]);
    }

    #[test]
    fn matching_velocity_is_untouched() {
        let v = [0.3, -0.2];
        assert_eq!(relax_normal(v, v, [0.6, 0.8], 2.0, 50.0, true), v);
        assert_eq!(relax_normal(v, v, [0.6, 0.8], 2.0, 0.5, false), v);
    }

    #[test]
    fn tangential_component_is_kept() {
        let u = relax_normal([1.0, 2.0], [0.0, 0.0], [1.0, 0.0], 1.0, 1e12, true);
        assert!(u[0].abs() < 1e-11);
        assert_eq!(u[1], 2.0);
    }
}
