//! Finite-volume advance of the penalized Navier–Stokes–Fourier system on a
//! collocated Cartesian grid: upwind continuity, momentum with implicit
//! viscosity and implicit interface penalty, and an implicit internal-energy
//! update for conduction, compression work and the `λϑ⁵` sink.

mod acoustic;
mod continuity;
mod energy;
mod initial;
pub mod linalg;
pub mod manufactured;
mod momentum;
mod timestep;

use std::sync::Arc;

pub use acoustic::{acoustic_faces, impedance, AcousticFaces};
pub use continuity::{continuity_step, face_velocities, FaceField, Reconstruction, Transport};
pub use energy::energy_step;
pub use initial::{initial_data, Scenario};
pub use momentum::{face_dissipation, momentum_step, relax_normal, MomentumUpdate};
pub use timestep::{compute_dt, TimeStep};

use crate::diagnostics::{DiagnosticsConfig, DiagnosticsReport, Recorder};
use crate::error::{Error, Result};
use crate::fields::{Grid, State};
use crate::geometry::{mollified_jump, smeared_delta, MovingDomain};
use crate::scalar::Point;
use crate::thermo::{EosModel, TransportCoeffs};

/// Penalization parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyParams {
    /// Interface flux penalty `ε`.
    pub epsilon: f64,
    /// Radiation contrast `η` outside the fluid domain.
    pub eta: f64,
    /// Viscosity contrast `ω`.
    pub omega: f64,
    /// Conductivity contrast `ν`.
    pub nu: f64,
    /// Temperature control `λ`.
    pub lambda: f64,
    /// Artificial pressure weight `δ`.
    pub delta: f64,
    /// Artificial pressure exponent `β`.
    pub beta: f64,
    /// Mollification width `α` of the indicator fields.
    pub alpha: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            eta: 1e-2,
            omega: 1e-2,
            nu: 1e-2,
            lambda: 1e-2,
            delta: 1e-3,
            beta: 4.0,
            alpha: 0.01,
        }
    }
}

impl PenaltyParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("epsilon", self.epsilon),
            ("eta", self.eta),
            ("omega", self.omega),
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("delta", self.delta),
            ("alpha", self.alpha),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be strictly positive")));
            }
        }
        for (name, v) in [("eta", self.eta), ("omega", self.omega), ("nu", self.nu)] {
            if v > 1.0 {
                return Err(Error::InvalidArgument(format!("contrast {name} must not exceed 1")));
            }
        }
        if self.lambda > 1.0 {
            return Err(Error::InvalidArgument("lambda must not exceed 1".into()));
        }
        if !(self.beta >= 4.0) {
            return Err(Error::InvalidArgument("beta must satisfy β ≥ 4".into()));
        }
        Ok(())
    }
}

/// Numerical knobs of the time stepping.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub cfl: f64,
    /// Face reconstruction of density and internal energy in the convective fluxes.
    pub reconstruction: Reconstruction,
    /// Width of the solid-side layer, in units of `α`, on which the penalty
    /// weight is `1/h`; zero leaves the smeared delta alone.
    pub penalty_layer: f64,
    /// Relax the penalty implicitly; the explicit variant is only stable for `dt ≲ ερ h`.
    pub implicit_penalty: bool,
    /// Viscosity and conduction are implicit; the diffusive time-step bound is then
    /// reported but not enforced.
    pub implicit_diffusion: bool,
    pub theta_min: f64,
    /// Cells with `ρ ≤ rho_vac` are treated as vacuum: `u = V` there.
    pub rho_vac: f64,
    /// Number of equally spaced diagnostic checkpoints in `(0, t_end]`.
    pub checkpoints: usize,
    pub fixed_dt: Option<f64>,
    pub max_steps: usize,
    /// Skip continuity and momentum (heat-conduction harness).
    pub frozen_flow: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            reconstruction: Reconstruction::Superbee,
            penalty_layer: 1.0,
            implicit_penalty: true,
            implicit_diffusion: true,
            theta_min: 1e-8,
            rho_vac: 1e-10,
            checkpoints: 20,
            fixed_dt: None,
            max_steps: 1_000_000,
            frozen_flow: false,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::InvalidArgument("CFL number must lie in (0, 0.9]".into()));
        }
        if !(self.theta_min > 0.0) || self.rho_vac < 0.0 {
            return Err(Error::InvalidArgument("floors must be nonnegative, theta_min positive".into()));
        }
        if self.checkpoints == 0 {
            return Err(Error::InvalidArgument("at least one checkpoint is required".into()));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0) {
                return Err(Error::InvalidArgument("fixed time step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Volumetric internal-energy source `(t, x) ↦ S`, used by manufactured solutions.
pub type EnergySource = Arc<dyn Fn(f64, Point<f64>) -> f64 + Send + Sync>;

/// Everything that stays fixed during a run.
#[derive(Clone)]
pub struct Model {
    pub grid: Grid<f64>,
    pub domain: MovingDomain<f64>,
    pub eos: EosModel<f64>,
    pub transport: TransportCoeffs<f64>,
    pub params: PenaltyParams,
    pub scheme: SchemeConfig,
    pub diagnostics: DiagnosticsConfig,
    pub energy_source: Option<EnergySource>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("grid", &self.grid)
            .field("domain", &self.domain)
            .field("eos", &self.eos)
            .field("transport", &self.transport)
            .field("params", &self.params)
            .field("scheme", &self.scheme)
            .field("diagnostics", &self.diagnostics)
            .field("energy_source", &self.energy_source.is_some())
            .finish()
    }
}

impl Model {
    pub fn new(
        grid: Grid<f64>,
        domain: MovingDomain<f64>,
        eos: EosModel<f64>,
        transport: TransportCoeffs<f64>,
        params: PenaltyParams,
        scheme: SchemeConfig,
    ) -> Result<Self> {
        params.validate()?;
        scheme.validate()?;
        eos.validate()?;
        transport.validate()?;
        if (eos.beta - params.beta).abs() > 0.0 {
            return Err(Error::InvalidArgument("EOS and penalty exponents β differ".into()));
        }
        if params.alpha < grid.h() {
            return Err(Error::InvalidArgument("mollification width α must be at least h".into()));
        }
        Ok(Self { grid, domain, eos, transport, params, scheme, diagnostics: DiagnosticsConfig::default(), energy_source: None })
    }

    pub fn with_energy_source(mut self, source: EnergySource) -> Self {
        self.energy_source = Some(source);
        self
    }
}

/// Geometry-dependent coefficient fields at one instant.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub time: f64,
    /// Signed distance to `Γ_t`, negative in the fluid.
    pub phi: Vec<f64>,
    /// Outward normal, set on interface-band cells only.
    pub normal: Vec<Point<f64>>,
    /// `δ_h(φ) |∇φ|`.
    pub band: Vec<f64>,
    /// Prescribed velocity `V(t, x)`.
    pub velocity: Vec<Point<f64>>,
    /// `∂_t V`.
    pub acceleration: Vec<Point<f64>>,
    pub chi_visc: Vec<f64>,
    pub chi_cond: Vec<f64>,
    /// `a_η = χ^α_η a`.
    pub a_loc: Vec<f64>,
}

impl Coefficients {
    pub fn at(model: &Model, t: f64) -> Self {
        let grid = &model.grid;
        let p = &model.params;
        let shape = model.domain.shape_at(t);
        let centers = grid.centers();
        let phi: Vec<f64> = centers.iter().map(|&x| shape.signed_distance(x)).collect();
        let band: Vec<f64> = phi.iter().map(|&d| penalty_band(model, d)).collect();
        let normal = centers
            .iter()
            .zip(&band)
            .map(|(&x, &b)| if b > 0.0 { shape.normal(x) } else { [0.0; 2] })
            .collect();
        let field = &model.domain.field;
        Self {
            time: t,
            normal,
            band,
            velocity: centers.iter().map(|&x| field.velocity(t, x)).collect(),
            acceleration: centers.iter().map(|&x| field.time_derivative(t, x)).collect(),
            chi_visc: phi.iter().map(|&d| mollified_jump(d, p.omega, p.alpha)).collect(),
            chi_cond: phi.iter().map(|&d| mollified_jump(d, p.nu, p.alpha)).collect(),
            a_loc: phi.iter().map(|&d| model.eos.radiation * mollified_jump(d, p.eta, p.alpha)).collect(),
            phi,
        }
    }
}

/// Penalty weight at signed distance `phi`: the smeared delta `δ_h(φ)`, raised to
/// `1/h` on the solid-side layer `0 < φ < penalty_layer·α`.
pub fn penalty_band(model: &Model, phi: f64) -> f64 {
    let h = model.grid.h();
    if phi > 0.0 && phi < model.scheme.penalty_layer * model.params.alpha {
        1.0 / h
    } else {
        smeared_delta(phi, h)
    }
}

/// Primitive variables and coefficients derived from a state.
#[derive(Clone, Debug)]
pub struct Frame {
    pub coeffs: Coefficients,
    /// Velocity; equals `V` in vacuum cells.
    pub u: Vec<Point<f64>>,
    pub theta: Vec<f64>,
    pub vacuum: Vec<bool>,
    /// `p_{η,δ}`.
    pub pressure: Vec<f64>,
}

impl Frame {
    pub fn build(model: &Model, state: &State) -> Result<Self> {
        let coeffs = Coefficients::at(model, state.time);
        Self::with_coefficients(model, state, coeffs)
    }

    pub fn with_coefficients(model: &Model, state: &State, coeffs: Coefficients) -> Result<Self> {
        if let Some((field, cell)) = state.find_non_finite() {
            return Err(Error::NonFinite { field, cell });
        }
        let n = state.len();
        let mut u = Vec::with_capacity(n);
        let mut theta = Vec::with_capacity(n);
        let mut vacuum = Vec::with_capacity(n);
        let mut pressure = Vec::with_capacity(n);
        for k in 0..n {
            let rho = state.rho[k];
            if rho < 0.0 {
                return Err(Error::NegativeDensity { cell: k, value: rho });
            }
            let vac = rho <= model.scheme.rho_vac;
            vacuum.push(vac);
            u.push(if vac {
                coeffs.velocity[k]
            } else {
                [state.momentum[k][0] / rho, state.momentum[k][1] / rho]
            });
            let a = coeffs.a_loc[k];
            let th = model.eos.invert_temperature(rho, state.rhoe[k], a).map_err(|_| Error::BelowColdFloor {
                cell: k,
                value: state.rhoe[k],
                floor: model.eos.cold_floor(rho),
            })?;
            theta.push(th);
            pressure.push(model.eos.pressure_unchecked(rho, th, a, model.params.delta));
        }
        Ok(Self { coeffs, u, theta, vacuum, pressure })
    }
}

/// Result of a single time step.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: State,
    /// Cellwise viscous dissipation `S_ω:∇u` at the new velocity.
    pub dissipation: Vec<f64>,
    /// Penalty flux rate of the band faces over the step.
    pub face_penalty_flux: f64,
    /// Cells whose temperature was raised to `theta_min`.
    pub floor_hits: usize,
    /// Coefficient fields at the new time.
    pub coefficients: Coefficients,
}

/// Advances `state` by `dt`: continuity, momentum, energy, floors.
pub fn step(model: &Model, state: &State, frame: &Frame, dt: f64) -> Result<StepOutput> {
    let grid = &model.grid;
    let t_new = state.time + dt;
    let next = Coefficients::at(model, t_new);
    let (rho, momentum, heating, dissipation, transport, face_penalty) = if model.scheme.frozen_flow {
        (state.rho.clone(), state.momentum.clone(), vec![0.0; grid.len()], vec![0.0; grid.len()], None, 0.0)
    } else {
        let faces = acoustic_faces(model, state, frame);
        let velocity = faces.velocity.clone();
        let (rho, mass_flux) = continuity_step(grid, &state.rho, &velocity, dt, model.scheme.reconstruction)?;
        let m = momentum_step(model, state, frame, &faces, &rho, &mass_flux, &next, dt)?;
        let heating: Vec<f64> = m.dissipation.iter().zip(&faces.heating).map(|(d, q)| d + q).collect();
        let transport = Transport { rho: state.rho.clone(), velocity, mass_flux };
        (rho, m.momentum, heating, m.dissipation, Some(transport), faces.penalty_flux)
    };
    let (mut rhoe, mut floor_hits) =
        energy_step(model, frame, &next, transport.as_ref(), &state.rhoe, &rho, &heating, dt)?;
    for k in 0..grid.len() {
        let a = next.a_loc[k];
        let floor = model.eos.internal_energy_unchecked(rho[k], model.scheme.theta_min, a);
        if rhoe[k] < floor && rhoe[k] > model.eos.cold_floor(rho[k]) {
            rhoe[k] = floor;
            floor_hits += 1;
        }
    }
    let state = State { time: t_new, rho, momentum, rhoe };
    if let Some((field, cell)) = state.find_non_finite() {
        return Err(Error::NonFinite { field, cell });
    }
    Ok(StepOutput { state, dissipation, face_penalty_flux: face_penalty, floor_hits, coefficients: next })
}

/// Runs from `state.time` to `t_end`, recording diagnostics at the configured
/// checkpoints. Deterministic for a given model and initial state.
pub fn advance(model: &Model, state: State, t_end: f64) -> Result<(State, DiagnosticsReport)> {
    advance_observed(model, state, t_end, |_, _| Ok(()))
}

/// As [`advance`], calling `observe(k, state)` at checkpoint `k`, the initial
/// state being checkpoint zero.
pub fn advance_observed(
    model: &Model,
    state: State,
    t_end: f64,
    mut observe: impl FnMut(usize, &State) -> Result<()>,
) -> Result<(State, DiagnosticsReport)> {
    let t0 = state.time;
    if t_end < t0 {
        return Err(Error::InvalidArgument("t_end precedes the current time".into()));
    }
    let mut frame = Frame::build(model, &state)?;
    let mut recorder = Recorder::new(model, &state, &frame)?;
    let mut state = state;
    observe(0, &state)?;
    if t_end == t0 {
        return Ok((state, recorder.finish()));
    }
    let n_cp = model.scheme.checkpoints;
    let mut next_cp = 1;
    let checkpoint_time = |k: usize| t0 + (t_end - t0) * k as f64 / n_cp as f64;
    let mut steps = 0usize;
    while next_cp <= n_cp {
        let target = checkpoint_time(next_cp);
        let ts = compute_dt(model, &state, &frame)?;
        let mut dt = ts.dt;
        let remaining = target - state.time;
        let mut hits_checkpoint = false;
        if dt >= remaining * (1.0 - 1e-12) {
            dt = remaining;
            hits_checkpoint = true;
        }
        let wrap = |e: Error, time: f64| Error::Step { step: steps, time, source: Box::new(e) };
        let out = step(model, &state, &frame, dt).map_err(|e| wrap(e, state.time))?;
        let mut new_state = out.state;
        if hits_checkpoint {
            new_state.time = target;
        }
        let new_frame =
            Frame::with_coefficients(model, &new_state, out.coefficients).map_err(|e| wrap(e, new_state.time))?;
        recorder.after_step(model, &new_state, &new_frame, dt, out.face_penalty_flux, out.floor_hits)?;
        state = new_state;
        frame = new_frame;
        steps += 1;
        if hits_checkpoint {
            recorder.checkpoint(model, &state, &frame)?;
            observe(next_cp, &state)?;
            next_cp += 1;
        }
        if steps >= model.scheme.max_steps && next_cp <= n_cp {
            return Err(Error::Step {
                step: steps,
                time: state.time,
                source: Box::new(Error::InvalidArgument("step budget exhausted".into())),
            });
        }
    }
    Ok((state, recorder.finish()))
}
