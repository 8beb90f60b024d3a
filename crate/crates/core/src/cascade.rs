//! One-parameter sweeps over the penalization ladder: each run changes one of
//! `ε, η, ω, ν, λ, δ` and keeps the others frozen, and the table records the
//! decay of the monitored quantities.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::diagnostics::{DiagnosticsConfig, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::fields::State;
use crate::solver::{advance, initial_data, Model, PenaltyParams, Scenario, SchemeConfig};
use crate::thermo::{EosModel, TransportCoeffs};

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "NSF_THREADS";

/// Everything needed to start one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub scenario: Scenario,
    /// Cells per unit length.
    pub n: usize,
    pub t_end: f64,
    pub params: PenaltyParams,
    pub eos: EosModel<f64>,
    pub transport: TransportCoeffs<f64>,
    pub scheme: SchemeConfig,
    pub diagnostics: DiagnosticsConfig,
}

impl RunSpec {
    /// Spec with default constants and `α = max(0.01, 2h)`.
    pub fn new(scenario: Scenario, n: usize, t_end: f64) -> Result<Self> {
        let grid = scenario.grid(n)?;
        Ok(Self {
            scenario,
            n,
            t_end,
            params: PenaltyParams { alpha: default_alpha(grid.h()), ..PenaltyParams::default() },
            eos: EosModel::default(),
            transport: TransportCoeffs::default(),
            scheme: SchemeConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
        })
    }

    pub fn model(&self) -> Result<Model> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument("t_end must be positive".into()));
        }
        let grid = self.scenario.grid(self.n)?;
        let domain = self.scenario.domain(&grid, self.params.alpha, self.t_end)?;
        let mut model = Model::new(
            grid,
            domain,
            self.eos.clone(),
            self.transport.clone(),
            self.params.clone(),
            self.scheme.clone(),
        )?;
        model.diagnostics = self.diagnostics.clone();
        Ok(model)
    }

    /// Runs from the scenario's initial data to `t_end`.
    pub fn run(&self) -> Result<(Model, State, DiagnosticsReport)> {
        let model = self.model()?;
        let initial = initial_data(&model)?;
        let (state, report) = advance(&model, initial, self.t_end)?;
        Ok((model, state, report))
    }
}

/// Default mollification width on a grid of spacing `h`.
pub fn default_alpha(h: f64) -> f64 {
    0.01f64.max(2.0 * h)
}

/// Swept penalization parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parameter {
    Epsilon,
    Eta,
    Omega,
    Nu,
    Lambda,
    Delta,
}

impl Parameter {
    pub const ALL: [Parameter; 6] =
        [Parameter::Epsilon, Parameter::Eta, Parameter::Omega, Parameter::Nu, Parameter::Lambda, Parameter::Delta];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Epsilon => "epsilon",
            Parameter::Eta => "eta",
            Parameter::Omega => "omega",
            Parameter::Nu => "nu",
            Parameter::Lambda => "lambda",
            Parameter::Delta => "delta",
        }
    }

    pub fn get(self, p: &PenaltyParams) -> f64 {
        match self {
            Parameter::Epsilon => p.epsilon,
            Parameter::Eta => p.eta,
            Parameter::Omega => p.omega,
            Parameter::Nu => p.nu,
            Parameter::Lambda => p.lambda,
            Parameter::Delta => p.delta,
        }
    }

    pub fn set(self, p: &mut PenaltyParams, value: f64) {
        let slot = match self {
            Parameter::Epsilon => &mut p.epsilon,
            Parameter::Eta => &mut p.eta,
            Parameter::Omega => &mut p.omega,
            Parameter::Nu => &mut p.nu,
            Parameter::Lambda => &mut p.lambda,
            Parameter::Delta => &mut p.delta,
        };
        *slot = value;
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Parameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sweep parameter `{s}`")))
    }
}

/// Quantity extracted from each run's report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    /// `∫₀^T F dt`.
    PenaltyFlux,
    /// `max_t C(t)`.
    Confinement,
    /// `∫∫ w_s (1/ϑ) S_ω:∇u`.
    SolidViscous,
    /// `∫∫ w_s (κ_ν/ϑ) |∇ϑ|`.
    SolidConduction,
    /// `∫∫ w_s a_η ϑ⁴`.
    SolidRadiation,
    /// `sup_t λ‖ϑ⁵‖₁`.
    Sink,
    /// `max_t |energy balance residual|`.
    EnergyResidual,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::PenaltyFlux,
        Metric::Confinement,
        Metric::SolidViscous,
        Metric::SolidConduction,
        Metric::SolidRadiation,
        Metric::Sink,
        Metric::EnergyResidual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::PenaltyFlux => "penalty_flux",
            Metric::Confinement => "confinement",
            Metric::SolidViscous => "solid_viscous",
            Metric::SolidConduction => "solid_conduction",
            Metric::SolidRadiation => "solid_radiation",
            Metric::Sink => "sink",
            Metric::EnergyResidual => "energy_residual",
        }
    }

    /// Whether the metric is expected to decrease along a decreasing ladder.
    /// The others are only reported.
    pub fn expects_decrease(self) -> bool {
        !matches!(self, Metric::Sink | Metric::EnergyResidual)
    }

    pub fn extract(self, report: &DiagnosticsReport) -> f64 {
        let last = report.last();
        match self {
            Metric::PenaltyFlux => last.integrals.penalty_flux,
            Metric::Confinement => report.max_confinement(),
            Metric::SolidViscous => last.integrals.solid_viscous,
            Metric::SolidConduction => last.integrals.solid_conduction,
            Metric::SolidRadiation => last.integrals.solid_radiation,
            Metric::Sink => report.checkpoints.iter().map(|c| c.norms.sink).fold(0.0, f64::max),
            Metric::EnergyResidual => report
                .checkpoints
                .iter()
                .skip(1)
                .filter_map(|c| crate::diagnostics::energy_balance_residual(report, c, 1.0).ok())
                .map(f64::abs)
                .fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sweep metric `{s}`")))
    }
}

/// One parameter ladder over an otherwise fixed run.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    /// Frozen values of everything but the swept parameter.
    pub base: RunSpec,
    pub parameter: Parameter,
    pub ladder: Vec<f64>,
    pub metrics: Vec<Metric>,
}

impl SweepPlan {
    /// Geometric ladder `first · ratio^k`, `k < count`.
    pub fn geometric(base: RunSpec, parameter: Parameter, first: f64, ratio: f64, count: usize) -> Self {
        let ladder = (0..count).map(|k| first * ratio.powi(k as i32)).collect();
        Self { base, parameter, ladder, metrics: Metric::ALL.to_vec() }
    }

    /// At least three positive values, strictly decreasing or all equal.
    pub fn validate(&self) -> Result<()> {
        if self.ladder.len() < 3 {
            return Err(Error::InvalidArgument("sweep ladder needs at least three values".into()));
        }
        if self.ladder.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("sweep ladder values must be positive".into()));
        }
        let decreasing = self.ladder.windows(2).all(|w| w[1] < w[0]);
        let repeated = self.ladder.windows(2).all(|w| w[1] == w[0]);
        if !(decreasing || repeated) {
            return Err(Error::InvalidArgument("sweep ladder must be strictly decreasing".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one metric".into()));
        }
        for &v in &self.ladder {
            self.spec_at(v).params.validate()?;
        }
        Ok(())
    }

    pub fn spec_at(&self, value: f64) -> RunSpec {
        let mut spec = self.base.clone();
        self.parameter.set(&mut spec.params, value);
        spec
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    /// In the order of the plan's metrics.
    pub metrics: Vec<f64>,
}

/// Rows ordered by ladder index; failed runs are missing and listed in `failures`.
#[derive(Debug)]
pub struct SweepTable {
    pub parameter: Parameter,
    pub metrics: Vec<Metric>,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<Error>,
}

impl SweepTable {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn column(&self, metric: Metric) -> Option<Vec<f64>> {
        let j = self.metrics.iter().position(|&m| m == metric)?;
        Some(self.rows.iter().map(|r| r.metrics[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<W> {
        write!(out, "index,{}", self.parameter)?;
        for m in &self.metrics {
            write!(out, ",{m}")?;
        }
        writeln!(out)?;
        for row in &self.rows {
            write!(out, "{},{:e}", row.index, row.value)?;
            for v in &row.metrics {
                write!(out, ",{v:e}")?;
            }
            writeln!(out)?;
        }
        Ok(out)
    }

    /// Trend verdicts of the metrics expected to decrease.
    pub fn verdicts(&self, min_slope: Option<(Metric, f64)>) -> Vec<TrendVerdict> {
        self.metrics
            .iter()
            .filter(|m| m.expects_decrease())
            .map(|&metric| {
                let column = self.column(metric).unwrap_or_default();
                let decreasing = column.len() >= 2 && column.windows(2).all(|w| w[1] < w[0]);
                let fit = fit_trend(self, metric).ok();
                let slope_ok = match (min_slope, fit) {
                    (Some((m, threshold)), Some(f)) if m == metric => f.slope >= threshold,
                    (Some((m, _)), None) if m == metric => false,
                    _ => true,
                };
                TrendVerdict { metric, decreasing, fit, pass: self.is_complete() && decreasing && slope_ok }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrendVerdict {
    pub metric: Metric,
    pub decreasing: bool,
    pub fit: Option<Trend>,
    pub pass: bool,
}

/// Log-log least-squares fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trend {
    pub slope: f64,
    /// Coefficient of determination.
    pub r2: f64,
}

/// Least-squares slope of `log metric` against `log parameter`.
pub fn fit_trend(table: &SweepTable, metric: Metric) -> Result<Trend> {
    let ys = table
        .column(metric)
        .ok_or_else(|| Error::InvalidArgument(format!("metric {metric} not in the table")))?;
    let xs: Vec<f64> = table.rows.iter().map(|r| r.value).collect();
    fit_log_log(&xs, &ys)
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<Trend> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InvalidArgument("trend fit needs at least three rows".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("trend fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("trend fit needs distinct parameter values".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(Trend { slope, r2 })
}

/// Worker count from `NSF_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidArgument(format!("{THREADS_VAR} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs every ladder value, concurrently up to the thread cap.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepTable> {
    plan.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(cap) = thread_cap()? {
        builder = builder.num_threads(cap.min(plan.ladder.len()));
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Result<SweepRow>> = pool.install(|| {
        plan.ladder
            .par_iter()
            .enumerate()
            .map(|(index, &value)| {
                let (_, _, report) = plan
                    .spec_at(value)
                    .run()
                    .map_err(|e| Error::Sweep { index, value, source: Box::new(e) })?;
                let metrics = plan.metrics.iter().map(|m| m.extract(&report)).collect();
                Ok(SweepRow { index, value, metrics })
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(e),
        }
    }
    Ok(SweepTable { parameter: plan.parameter, metrics: plan.metrics.clone(), rows, failures })
}
