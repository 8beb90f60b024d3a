//! Monitored quantities of a run: conserved totals, energies, penalty flux,
//! entropy production, confinement, the total energy balance, the total
//! dissipation inequality, renormalized continuity residuals and a priori norms.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fields::{divergence, gradient_with, ordered_sum, Boundary, CsvWriter, Grid, State};
use crate::geometry::solid_weight;
use crate::scalar::Point;
use crate::solver::{face_dissipation, Frame, Model};

/// Knobs of the inequality checks.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsConfig {
    /// Constant multiplying the data terms of the dissipation inequality.
    pub dissipation_constant: f64,
    /// Relative slack before `LHS > RHS` counts as a violation.
    pub violation_tolerance: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self { dissipation_constant: 1.0, violation_tolerance: 0.05 }
    }
}

/// Function `b` of the renormalized continuity equation; `B` solves
/// `B(ρ) = B(1) + ∫₁^ρ b(z)/z² dz`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Renormalization {
    /// `b ≡ 0`, `B ≡ 1`: plain mass conservation.
    Zero,
    /// `b(z) = min(z, K)` with `K ≥ 1`.
    Truncation(f64),
    /// `b(z) = z / (1 + z)`.
    Saturating,
}

impl Renormalization {
    pub const LIBRARY: [Renormalization; 3] =
        [Renormalization::Zero, Renormalization::Truncation(2.0), Renormalization::Saturating];

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "zero" => Ok(Self::Zero),
            "saturating" => Ok(Self::Saturating),
            _ => {
                let k = tag
                    .strip_prefix("min:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown renormalization '{tag}'")))?;
                if !(k >= 1.0) {
                    return Err(Error::InvalidArgument("truncation level must be at least 1".into()));
                }
                Ok(Self::Truncation(k))
            }
        }
    }

    pub fn b(self, z: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Truncation(k) => z.min(k),
            Self::Saturating => z / (1.0 + z),
        }
    }

    /// `ρ B(ρ)`, continuous at `ρ = 0`.
    pub fn rho_b(self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let big_b = match self {
            Self::Zero => 1.0,
            Self::Truncation(k) => {
                if rho <= k {
                    rho.ln()
                } else {
                    k.ln() + 1.0 - k / rho
                }
            }
            Self::Saturating => (2.0 * rho / (1.0 + rho)).ln(),
        };
        rho * big_b
    }
}

fn velocity_of(state: &State, rho_vac: f64) -> Vec<Point<f64>> {
    state
        .rho
        .iter()
        .zip(&state.momentum)
        .map(|(&r, m)| if r > rho_vac { [m[0] / r, m[1] / r] } else { [0.0; 2] })
        .collect()
}

fn renormalized_content(state: &State, grid: &Grid<f64>, tag: Renormalization) -> f64 {
    grid.integrate(state.rho.iter().map(|&r| tag.rho_b(r)))
}

fn renormalized_rate(rho: &[f64], u: &[Point<f64>], grid: &Grid<f64>, tag: Renormalization) -> f64 {
    let div = divergence(u, grid);
    grid.integrate(rho.iter().zip(&div).map(|(&r, &d)| tag.b(r) * d))
}

/// Residual `∫ρB(ρ)(τ) - ∫ρ₀B(ρ₀) + ∫₀^τ∫ b(ρ) div u` of the renormalized
/// continuity equation over a state sequence, trapezoid rule in time.
/// Velocities are `m/ρ` above `rho_vac` and zero below (where `b` vanishes).
pub fn renormalized_residual(states: &[State], grid: &Grid<f64>, tag: Renormalization, rho_vac: f64) -> Result<f64> {
    let (first, last) = match (states.first(), states.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::InvalidArgument("empty state sequence".into())),
    };
    let rates: Vec<f64> = states
        .iter()
        .map(|s| renormalized_rate(&s.rho, &velocity_of(s, rho_vac), grid, tag))
        .collect();
    let mut integral = 0.0;
    for i in 1..states.len() {
        integral += 0.5 * (states[i].time - states[i - 1].time) * (rates[i] + rates[i - 1]);
    }
    Ok(renormalized_content(last, grid, tag) - renormalized_content(first, grid, tag) + integral)
}

/// `∫_{Γ_t} |(u - V)·n|² dS` by smeared-delta quadrature.
pub fn penalty_flux(model: &Model, frame: &Frame) -> f64 {
    let c = &frame.coeffs;
    model.grid.integrate((0..model.grid.len()).filter(|&k| c.band[k] > 0.0).map(|k| {
        let n = c.normal[k];
        let j = (frame.u[k][0] - c.velocity[k][0]) * n[0] + (frame.u[k][1] - c.velocity[k][1]) * n[1];
        j * j * c.band[k]
    }))
}

/// `∫_{B \ Ω_t} ρ` with interface cells weighted by the smeared solid indicator.
pub fn confinement_mass(model: &Model, state: &State, t: f64) -> f64 {
    let grid = &model.grid;
    let phi = model.domain.distance_field(t, grid);
    let h = grid.h();
    grid.integrate(phi.iter().zip(&state.rho).map(|(&p, &r)| solid_weight(p, h) * r))
}

/// Cellwise entropy production `(1/ϑ)(S_ω:∇u + κ_ν|∇ϑ|²/ϑ)` with the viscous and
/// conductive parts returned separately; both are nonnegative.
pub fn entropy_production(model: &Model, frame: &Frame) -> (Vec<f64>, Vec<f64>) {
    let grid = &model.grid;
    let tr = &model.transport;
    let c = &frame.coeffs;
    let mu: Vec<f64> = frame.theta.iter().zip(&c.chi_visc).map(|(&t, &x)| x * tr.viscosity(t)).collect();
    let eta: Vec<f64> = frame.theta.iter().zip(&c.chi_visc).map(|(&t, &x)| x * tr.bulk_viscosity(t)).collect();
    let diss = face_dissipation(grid, &frame.u, &mu, &eta);
    let grad = gradient_with(&frame.theta, grid, Boundary::Neumann);
    let viscous = diss.iter().zip(&frame.theta).map(|(d, t)| d / t).collect();
    let conductive = (0..grid.len())
        .map(|k| {
            let t = frame.theta[k];
            let g2 = grad[k][0] * grad[k][0] + grad[k][1] * grad[k][1];
            c.chi_cond[k] * tr.conductivity(t) * g2 / (t * t)
        })
        .collect();
    (viscous, conductive)
}

/// Sup-in-time norms monitored for cross-run comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AprioriNorms {
    /// `δ ‖ρ^β‖₁`.
    pub artificial: f64,
    /// `‖√ρ u‖₂`.
    pub momentum: f64,
    /// `λ ‖ϑ⁵‖₁`.
    pub sink: f64,
    /// `‖∇u‖₂`.
    pub grad_velocity: f64,
    /// `‖a_η ϑ⁴‖₁`.
    pub radiation: f64,
    /// `‖ρ‖_{5/3}`.
    pub density: f64,
    /// `‖∇ log ϑ‖₂`.
    pub grad_log_theta: f64,
    /// `‖∇ ϑ^{3/2}‖₂`.
    pub grad_theta_32: f64,
}

impl AprioriNorms {
    pub const NAMES: [&'static str; 8] = [
        "norm_artificial",
        "norm_momentum",
        "norm_sink",
        "norm_grad_u",
        "norm_radiation",
        "norm_density",
        "norm_grad_log_theta",
        "norm_grad_theta32",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.artificial,
            self.momentum,
            self.sink,
            self.grad_velocity,
            self.radiation,
            self.density,
            self.grad_log_theta,
            self.grad_theta_32,
        ]
    }

    fn sup(&self, other: &Self) -> Self {
        let a = self.values();
        let b = other.values();
        let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        Self {
            artificial: m[0],
            momentum: m[1],
            sink: m[2],
            grad_velocity: m[3],
            radiation: m[4],
            density: m[5],
            grad_log_theta: m[6],
            grad_theta_32: m[7],
        }
    }

    fn measure(model: &Model, state: &State, frame: &Frame) -> Self {
        let grid = &model.grid;
        let p = &model.params;
        let n = grid.len();
        let l2 = |vals: &mut dyn Iterator<Item = f64>| grid.integrate(vals).sqrt();
        let grad_norm = |g: &[Point<f64>]| l2(&mut g.iter().map(|v| v[0] * v[0] + v[1] * v[1]));
        let comps: Vec<Vec<f64>> = (0..grid.dim()).map(|a| frame.u.iter().map(|v| v[a]).collect()).collect();
        let mut grad_u2 = vec![0.0; n];
        for comp in &comps {
            for (acc, g) in grad_u2.iter_mut().zip(gradient_with(comp, grid, Boundary::NoSlip)) {
                *acc += g[0] * g[0] + g[1] * g[1];
            }
        }
        let log_t: Vec<f64> = frame.theta.iter().map(|t| t.ln()).collect();
        let t32: Vec<f64> = frame.theta.iter().map(|t| t.powf(1.5)).collect();
        Self {
            artificial: p.delta * grid.integrate(state.rho.iter().map(|r| r.powf(p.beta))),
            momentum: l2(&mut (0..n).map(|k| state.rho[k] * (frame.u[k][0].powi(2) + frame.u[k][1].powi(2)))),
            sink: p.lambda * grid.integrate(frame.theta.iter().map(|t| t.powi(5))),
            grad_velocity: grid.integrate(grad_u2.iter().copied()).sqrt(),
            radiation: grid.integrate(frame.theta.iter().zip(&frame.coeffs.a_loc).map(|(t, a)| a * t.powi(4))),
            density: grid.integrate(state.rho.iter().map(|r| r.powf(5.0 / 3.0))).powf(0.6),
            grad_log_theta: grad_norm(&gradient_with(&log_t, grid, Boundary::Neumann)),
            grad_theta_32: grad_norm(&gradient_with(&t32, grid, Boundary::Neumann)),
        }
    }
}

/// Instantaneous integrands accumulated in time by the trapezoid rule.
#[derive(Clone, Copy, Debug, Default)]
struct Rates {
    penalty_flux: f64,
    sink5: f64,
    sink4: f64,
    entropy: f64,
    entropy_half_viscous: f64,
    work: f64,
    renorm: [f64; 3],
    solid_viscous: f64,
    solid_conduction: f64,
    solid_radiation: f64,
    min_sigma: f64,
}

/// Time integrals at a checkpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Integrals {
    /// `∫ F dt`.
    pub penalty_flux: f64,
    /// `λ ∫∫ ϑ⁵`.
    pub sink5: f64,
    /// `λ ∫∫ ϑ⁴`.
    pub sink4: f64,
    /// `∫∫ σ`.
    pub entropy: f64,
    /// `∫∫ (1/ϑ)(½ S:∇u + κ|∇ϑ|²/ϑ)`.
    pub entropy_half_viscous: f64,
    /// `∫∫ (S:∇V - ρu·∂_tV - ρu⊗u:∇V - p div V)`.
    pub work: f64,
    pub renorm: [f64; 3],
    /// `∫∫ w_s (1/ϑ) S_ω:∇u` over the solid region.
    pub solid_viscous: f64,
    /// `∫∫ w_s (κ_ν/ϑ) |∇ϑ|` over the solid region.
    pub solid_conduction: f64,
    /// `∫∫ w_s a_η ϑ⁴` over the solid region.
    pub solid_radiation: f64,
}

/// One row of the diagnostics time series.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub time: f64,
    pub steps: usize,
    pub mass: f64,
    pub kinetic: f64,
    pub internal: f64,
    pub artificial: f64,
    /// Instantaneous penalty flux.
    pub penalty_flux: f64,
    /// Instantaneous entropy production integral.
    pub entropy_production: f64,
    pub sink5: f64,
    pub sink4: f64,
    pub confinement: f64,
    pub integrals: Integrals,
    /// Boundary work terms `∫ρu·V(τ) - ∫(ρu)₀·V(0)`.
    pub momentum_work: f64,
    pub dissipation_lhs: f64,
    pub dissipation_rhs: f64,
    /// Smallest cellwise entropy production seen at any step so far.
    pub min_sigma: f64,
    /// Smallest cellwise relative-entropy integrand at this instant.
    pub min_relative_entropy: f64,
    pub norms: AprioriNorms,
    pub floor_hits: usize,
}

impl Checkpoint {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.internal + self.artificial
    }
}

/// Complete time series of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsReport {
    pub epsilon: f64,
    pub initial_energy: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub dissipation: DiagnosticsConfig,
}

pub const CSV_COLUMNS: [&str; 34] = [
    "t",
    "steps",
    "M",
    "E_kin",
    "E_int",
    "E_art",
    "E",
    "F",
    "F_int",
    "Sigma",
    "Sigma_int",
    "lambda_theta5",
    "lambda_theta4",
    "lambda_theta5_int",
    "lambda_theta4_int",
    "C",
    "LHS",
    "RHS",
    "energy_LHS",
    "energy_RHS",
    "energy_residual",
    "renorm_zero",
    "renorm_min2",
    "renorm_saturating",
    "min_sigma",
    "min_relative_entropy",
    "norm_artificial",
    "norm_momentum",
    "norm_sink",
    "norm_grad_u",
    "norm_radiation",
    "norm_density",
    "norm_grad_log_theta",
    "norm_grad_theta32",
];

impl DiagnosticsReport {
    pub fn initial(&self) -> &Checkpoint {
        &self.checkpoints[0]
    }

    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("report has the initial checkpoint")
    }

    /// Largest `|M(t) - M(0)| / M(0)`.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.initial().mass;
        self.checkpoints.iter().map(|c| ((c.mass - m0) / m0).abs()).fold(0.0, f64::max)
    }

    pub fn max_confinement(&self) -> f64 {
        self.checkpoints.iter().map(|c| c.confinement).fold(0.0, f64::max)
    }

    pub fn min_sigma(&self) -> f64 {
        self.last().min_sigma
    }

    pub fn energy_lhs(&self, cp: &Checkpoint, flux_scale: f64) -> f64 {
        cp.energy() + flux_scale * cp.integrals.penalty_flux / self.epsilon + cp.integrals.sink5
    }

    pub fn energy_rhs(&self, cp: &Checkpoint) -> f64 {
        self.initial_energy + cp.momentum_work + cp.integrals.work
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<W> {
        let mut csv = CsvWriter::new(out, &CSV_COLUMNS)?;
        for cp in &self.checkpoints {
            let residual = energy_balance_residual(self, cp, 1.0).unwrap_or(f64::NAN);
            let mut row = vec![
                cp.time,
                cp.steps as f64,
                cp.mass,
                cp.kinetic,
                cp.internal,
                cp.artificial,
                cp.energy(),
                cp.penalty_flux,
                cp.integrals.penalty_flux,
                cp.entropy_production,
                cp.integrals.entropy,
                cp.sink5,
                cp.sink4,
                cp.integrals.sink5,
                cp.integrals.sink4,
                cp.confinement,
                cp.dissipation_lhs,
                cp.dissipation_rhs,
                self.energy_lhs(cp, 1.0),
                self.energy_rhs(cp),
                residual,
                cp.integrals.renorm[0],
                cp.integrals.renorm[1],
                cp.integrals.renorm[2],
                cp.min_sigma,
                cp.min_relative_entropy,
            ];
            row.extend(cp.norms.values());
            csv.row(&row)?;
        }
        Ok(csv.into_inner())
    }
}

/// `(LHS - RHS)/|RHS|` of the total energy balance
/// `E(τ) + (1/ε)∫F + λ∫∫ϑ⁵ = E₀ - ∫(ρu)₀·V(0) + ∫ρu·V(τ) + ∫∫(S:∇V - ρu·∂_tV - ρu⊗u:∇V - p div V)`;
/// a value at or below tolerance certifies the inequality. `flux_scale`
/// multiplies the penalty term (one for the actual balance).
pub fn energy_balance_residual(report: &DiagnosticsReport, cp: &Checkpoint, flux_scale: f64) -> Result<f64> {
    let rhs = report.energy_rhs(cp);
    if !(rhs.abs() > 1e-14 * report.initial_energy.abs().max(1.0)) {
        return Err(Error::InvalidArgument("energy balance right-hand side vanishes".into()));
    }
    Ok((report.energy_lhs(cp, flux_scale) - rhs) / rhs.abs())
}

/// One checkpoint of the total dissipation inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissipationCheck {
    pub time: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `LHS > RHS + tol |RHS|`.
    pub violated: bool,
}

pub fn dissipation_inequality(report: &DiagnosticsReport) -> Vec<DissipationCheck> {
    let tol = report.dissipation.violation_tolerance;
    report
        .checkpoints
        .iter()
        .map(|c| DissipationCheck {
            time: c.time,
            lhs: c.dissipation_lhs,
            rhs: c.dissipation_rhs,
            violated: c.dissipation_lhs > c.dissipation_rhs + tol * c.dissipation_rhs.abs(),
        })
        .collect()
}

/// Sup-in-time of every monitored norm.
pub fn apriori_bounds(report: &DiagnosticsReport) -> AprioriNorms {
    report.checkpoints.iter().fold(AprioriNorms::default(), |acc, c| acc.sup(&c.norms))
}

/// Incremental builder of a [`DiagnosticsReport`], fed by the time loop.
#[derive(Debug)]
pub struct Recorder {
    report: DiagnosticsReport,
    integrals: Integrals,
    prev: Rates,
    rho_bar: f64,
    slope_bar: f64,
    data_term: f64,
    initial_shift: f64,
    initial_momentum_work: f64,
    renorm_initial: [f64; 3],
    steps: usize,
    floor_hits: usize,
    min_sigma: f64,
}

struct Totals {
    mass: f64,
    kinetic: f64,
    internal: f64,
    artificial: f64,
    momentum_work: f64,
    helmholtz: f64,
    bar_shift: f64,
    min_relative_entropy: f64,
}

impl Recorder {
    pub fn new(model: &Model, state: &State, frame: &Frame) -> Result<Self> {
        let grid = &model.grid;
        let volume = grid.integrate(std::iter::repeat(1.0).take(grid.len()));
        let mass = state.mass(grid);
        let rho_bar = mass / volume;
        let slope_bar = if rho_bar > 0.0 { model.eos.helmholtz_density_slope_at_unit_temperature(rho_bar) } else { 0.0 };
        let mut rec = Self {
            report: DiagnosticsReport {
                epsilon: model.params.epsilon,
                initial_energy: 0.0,
                checkpoints: Vec::new(),
                dissipation: model.diagnostics.clone(),
            },
            integrals: Integrals::default(),
            prev: Rates::default(),
            rho_bar,
            slope_bar,
            data_term: 0.0,
            initial_shift: 0.0,
            initial_momentum_work: 0.0,
            renorm_initial: [0.0; 3],
            steps: 0,
            floor_hits: 0,
            min_sigma: f64::INFINITY,
        };
        let totals = rec.totals(model, state, frame);
        rec.report.initial_energy = totals.kinetic + totals.internal + totals.artificial;
        rec.initial_momentum_work = totals.momentum_work;
        rec.data_term = totals.kinetic + totals.helmholtz + totals.artificial - totals.momentum_work + volume;
        rec.initial_shift = totals.bar_shift;
        for (slot, tag) in rec.renorm_initial.iter_mut().zip(Renormalization::LIBRARY) {
            *slot = renormalized_content(state, grid, tag);
        }
        rec.prev = rec.rates(model, state, frame);
        rec.min_sigma = rec.prev.min_sigma;
        rec.checkpoint(model, state, frame)?;
        Ok(rec)
    }

    fn totals(&self, model: &Model, state: &State, frame: &Frame) -> Totals {
        let grid = &model.grid;
        let eos = &model.eos;
        let p = &model.params;
        let n = grid.len();
        let mut min_rel = f64::INFINITY;
        let mut helm = Vec::with_capacity(n);
        let mut shift = Vec::with_capacity(n);
        for k in 0..n {
            let a = frame.coeffs.a_loc[k];
            let rho = state.rho[k];
            let th = frame.theta[k];
            let h1 = eos.helmholtz_density(rho, th, a);
            let s = (rho - self.rho_bar) * self.slope_bar + eos.helmholtz_density(self.rho_bar, 1.0, a);
            min_rel = min_rel.min(h1 - s);
            helm.push(h1);
            shift.push(s);
        }
        Totals {
            mass: state.mass(grid),
            kinetic: grid.integrate((0..n).map(|k| {
                0.5 * state.rho[k] * (frame.u[k][0] * frame.u[k][0] + frame.u[k][1] * frame.u[k][1])
            })),
            internal: grid.integrate(state.rhoe.iter().copied()),
            artificial: grid.integrate(state.rho.iter().map(|&r| eos.artificial_energy(r, p.delta))),
            momentum_work: grid.integrate((0..n).map(|k| {
                let v = frame.coeffs.velocity[k];
                state.momentum[k][0] * v[0] + state.momentum[k][1] * v[1]
            })),
            helmholtz: grid.integrate(helm),
            bar_shift: grid.integrate(shift),
            min_relative_entropy: min_rel,
        }
    }

    fn rates(&self, model: &Model, state: &State, frame: &Frame) -> Rates {
        let grid = &model.grid;
        let h = grid.h();
        let n = grid.len();
        let d = grid.dim();
        let p = &model.params;
        let tr = &model.transport;
        let c = &frame.coeffs;
        let (visc, cond) = entropy_production(model, frame);
        let sigma: Vec<f64> = visc.iter().zip(&cond).map(|(a, b)| a + b).collect();
        let min_sigma = sigma.iter().copied().fold(f64::INFINITY, f64::min);
        let ws: Vec<f64> = c.phi.iter().map(|&ph| solid_weight(ph, h)).collect();
        let grad_theta = gradient_with(&frame.theta, grid, Boundary::Neumann);

        // cell-centred stress and velocity-field gradients for the work terms
        let comps: Vec<Vec<f64>> = (0..d).map(|a| frame.u.iter().map(|v| v[a]).collect()).collect();
        let grad_u: Vec<Vec<Point<f64>>> = comps.iter().map(|f| gradient_with(f, grid, Boundary::NoSlip)).collect();
        let vcomps: Vec<Vec<f64>> = (0..d).map(|a| c.velocity.iter().map(|v| v[a]).collect()).collect();
        let grad_v: Vec<Vec<Point<f64>>> = vcomps.iter().map(|f| gradient_with(f, grid, Boundary::NoSlip)).collect();
        let work = grid.integrate((0..n).map(|k| {
            let mut gu = [[0.0; 3]; 3];
            let mut gv = [[0.0; 3]; 3];
            for ci in 0..d {
                for b in 0..d {
                    gu[ci][b] = grad_u[ci][k][b];
                    gv[ci][b] = grad_v[ci][k][b];
                }
            }
            let th = frame.theta[k];
            let s = crate::thermo::stress_from_coefficients(
                c.chi_visc[k] * tr.viscosity(th),
                c.chi_visc[k] * tr.bulk_viscosity(th),
                &gu,
            );
            let s_gv = crate::thermo::double_dot(&s, &gv);
            let m = state.momentum[k];
            let u = frame.u[k];
            let m_vt = m[0] * c.acceleration[k][0] + m[1] * c.acceleration[k][1];
            let mut convective = 0.0;
            for ci in 0..d {
                for b in 0..d {
                    convective += m[ci] * u[b] * gv[ci][b];
                }
            }
            let div_v: f64 = (0..d).map(|a| gv[a][a]).sum();
            s_gv - m_vt - convective - frame.pressure[k] * div_v
        }));
        let mut renorm = [0.0; 3];
        for (slot, tag) in renorm.iter_mut().zip(Renormalization::LIBRARY) {
            *slot = renormalized_rate(&state.rho, &frame.u, grid, tag);
        }
        Rates {
            penalty_flux: penalty_flux(model, frame),
            sink5: p.lambda * grid.integrate(frame.theta.iter().map(|t| t.powi(5))),
            sink4: p.lambda * grid.integrate(frame.theta.iter().map(|t| t.powi(4))),
            entropy: grid.integrate(sigma.iter().copied()),
            entropy_half_viscous: grid.integrate(visc.iter().zip(&cond).map(|(a, b)| 0.5 * a + b)),
            work,
            renorm,
            solid_viscous: grid.integrate(ws.iter().zip(&visc).map(|(w, v)| w * v)),
            solid_conduction: grid.integrate((0..n).map(|k| {
                let th = frame.theta[k];
                let g = grad_theta[k][0].hypot(grad_theta[k][1]);
                ws[k] * c.chi_cond[k] * tr.conductivity(th) * g / th
            })),
            solid_radiation: grid.integrate((0..n).map(|k| ws[k] * c.a_loc[k] * frame.theta[k].powi(4))),
            min_sigma,
        }
    }

    /// Accumulates the time integrals over one step. `face_penalty_flux` is the
    /// penalty flux rate the step released on faces, added to the cell quadrature.
    pub fn after_step(
        &mut self,
        model: &Model,
        state: &State,
        frame: &Frame,
        dt: f64,
        face_penalty_flux: f64,
        floor_hits: usize,
    ) -> Result<()> {
        let mut r = self.rates(model, state, frame);
        r.penalty_flux += face_penalty_flux;
        let a = &self.prev;
        let half = 0.5 * dt;
        let i = &mut self.integrals;
        // Terms the step treats implicitly take the right endpoint, matching backward Euler.
        i.penalty_flux += dt * r.penalty_flux;
        i.sink5 += dt * r.sink5;
        i.sink4 += dt * r.sink4;
        i.entropy += dt * r.entropy;
        i.entropy_half_viscous += dt * r.entropy_half_viscous;
        i.solid_viscous += dt * r.solid_viscous;
        i.solid_conduction += dt * r.solid_conduction;
        i.solid_radiation += dt * r.solid_radiation;
        i.work += half * (a.work + r.work);
        for j in 0..3 {
            i.renorm[j] += half * (a.renorm[j] + r.renorm[j]);
        }
        self.min_sigma = self.min_sigma.min(r.min_sigma);
        self.prev = r;
        self.steps += 1;
        self.floor_hits += floor_hits;
        Ok(())
    }

    pub fn checkpoint(&mut self, model: &Model, state: &State, frame: &Frame) -> Result<()> {
        let grid = &model.grid;
        let t = self.totals(model, state, frame);
        let i = self.integrals;
        let mut integrals = i;
        for j in 0..3 {
            let tag = Renormalization::LIBRARY[j];
            integrals.renorm[j] = renormalized_content(state, grid, tag) - self.renorm_initial[j] + i.renorm[j];
        }
        let eps = model.params.epsilon;
        let dissipation_lhs = t.kinetic + t.helmholtz - t.bar_shift + t.artificial
            + i.penalty_flux / eps
            + i.entropy_half_viscous
            + 0.5 * i.sink5;
        let dissipation_rhs = model.diagnostics.dissipation_constant * self.data_term - self.initial_shift;
        let cp = Checkpoint {
            time: state.time,
            steps: self.steps,
            mass: t.mass,
            kinetic: t.kinetic,
            internal: t.internal,
            artificial: t.artificial,
            penalty_flux: self.prev.penalty_flux,
            entropy_production: self.prev.entropy,
            sink5: self.prev.sink5,
            sink4: self.prev.sink4,
            confinement: confinement_mass(model, state, state.time),
            integrals,
            momentum_work: t.momentum_work - self.initial_momentum_work,
            dissipation_lhs,
            dissipation_rhs,
            min_sigma: self.min_sigma,
            min_relative_entropy: t.min_relative_entropy,
            norms: AprioriNorms::measure(model, state, frame),
            floor_hits: self.floor_hits,
        };
        let finite = [cp.mass, cp.kinetic, cp.internal, cp.artificial, dissipation_lhs, dissipation_rhs]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite { field: "diagnostics", cell: 0 });
        }
        self.report.checkpoints.push(cp);
        Ok(())
    }

    pub fn finish(self) -> DiagnosticsReport {
        self.report
    }
}

/// Fixed-order total of a cellwise field, exposed for double-entry checks.
pub fn total_energy(model: &Model, state: &State, frame: &Frame) -> f64 {
    let grid = &model.grid;
    let p = &model.params;
    ordered_sum((0..grid.len()).map(|k| {
        0.5 * state.rho[k] * (frame.u[k][0].powi(2) + frame.u[k][1].powi(2))
            + state.rhoe[k]
            + model.eos.artificial_energy(state.rho[k], p.delta)
    })) * grid.cell_volume()
}
