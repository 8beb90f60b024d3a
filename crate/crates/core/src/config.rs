//! Plain-text run configuration: `key = value` lines grouped under
//! `[section]` headers, `#` starting a comment. Unknown sections and keys are
//! errors. Every key is optional; the defaults are those of
//! [`RunConfig::dump`] applied to an empty file, except that `alpha = auto`
//! resolves to `max(0.01, 2h)`.
//!
//! | section | keys |
//! |---|---|
//! | `run` | `scenario` (piston1d, disk2d, fixedbox), `n`, `t_end`, `checkpoints`, `snapshot_times`, `output`, `seed` |
//! | `penalty` | `epsilon`, `eta`, `omega`, `nu`, `lambda`, `delta`, `beta`, `alpha` |
//! | `eos` | `p_linear`, `p_degenerate`, `radiation` |
//! | `transport` | `mu_lower`, `mu_upper`, `mu_slope`, `bulk`, `bulk_upper`, `kappa_m_lower`, `kappa_m_upper`, `kappa_r_lower`, `kappa_r_upper` |
//! | `scheme` | `cfl`, `reconstruction`, `penalty_layer`, `implicit_penalty`, `implicit_diffusion`, `theta_min`, `rho_vac`, `fixed_dt`, `max_steps` |
//! | `sweep` | `parameter`, `values`, `metrics`, `slope_metric`, `min_slope` |
//! | `checks` | `mass`, `mass_tolerance`, `entropy`, `entropy_tolerance`, `dissipation`, `dissipation_tolerance`, `dissipation_constant`, `energy`, `energy_tolerance`, `confinement`, `confinement_fraction`, `trends` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cascade::{default_alpha, Metric, Parameter, RunSpec, SweepPlan};
use crate::error::{Error, Result};
use crate::solver::{Reconstruction, Scenario};

const SECTIONS: [&str; 7] = ["run", "penalty", "eos", "transport", "scheme", "sweep", "checks"];

/// Assertions evaluated after a run; each can be switched off.
#[derive(Clone, Debug, PartialEq)]
pub struct Checks {
    /// `max_t |M(t) − M(0)|/M(0) ≤ mass_tolerance`.
    pub mass: bool,
    pub mass_tolerance: f64,
    /// Cellwise entropy production `≥ −entropy_tolerance` at every step.
    pub entropy: bool,
    pub entropy_tolerance: f64,
    /// Dissipation inequality: `LHS ≥ −1e−10` and no `LHS > RHS` beyond the tolerance.
    pub dissipation: bool,
    /// Energy balance residual `≤ energy_tolerance` at every checkpoint.
    pub energy: bool,
    pub energy_tolerance: f64,
    /// `max_t C(t) ≤ confinement_fraction · M(0)`; for sweeps, at the last ladder value.
    pub confinement: bool,
    pub confinement_fraction: f64,
    /// Sweep trend verdicts.
    pub trends: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            mass: true,
            mass_tolerance: 1e-12,
            entropy: true,
            entropy_tolerance: 1e-13,
            dissipation: true,
            energy: true,
            energy_tolerance: 0.05,
            confinement: false,
            confinement_fraction: 1e-2,
            trends: true,
        }
    }
}

/// Ladder definition of the `sweep` subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSection {
    pub parameter: Parameter,
    pub values: Vec<f64>,
    pub metrics: Vec<Metric>,
    /// Metric whose log-log slope must reach `min_slope`.
    pub slope: Option<(Metric, f64)>,
}

/// Metrics recorded by default for a swept parameter.
pub fn default_metrics(parameter: Parameter) -> Vec<Metric> {
    match parameter {
        Parameter::Epsilon => vec![Metric::PenaltyFlux, Metric::Confinement],
        Parameter::Eta => vec![Metric::SolidRadiation],
        Parameter::Omega => vec![Metric::SolidViscous],
        Parameter::Nu => vec![Metric::SolidConduction],
        Parameter::Lambda => vec![Metric::Sink],
        Parameter::Delta => vec![Metric::EnergyResidual],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: RunSpec,
    /// Explicit `α`; `None` means `max(0.01, 2h)`.
    pub alpha: Option<f64>,
    /// Times at which snapshots are written; each must be a checkpoint time.
    pub snapshot_times: Vec<f64>,
    pub output: Option<PathBuf>,
    /// Reserved; the solver is deterministic and draws no random numbers.
    pub seed: u64,
    pub sweep: Option<SweepSection>,
    pub checks: Checks,
}

impl RunConfig {
    /// Checkpoint indices of the snapshot times.
    pub fn snapshot_checkpoints(&self) -> Vec<usize> {
        let n = self.spec.scheme.checkpoints;
        self.snapshot_times.iter().map(|&t| (t / self.spec.t_end * n as f64).round() as usize).collect()
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::ConfigConstraint { key: "sweep".into(), message: "section missing".into() })?;
        let plan = SweepPlan {
            base: self.spec.clone(),
            parameter: sweep.parameter,
            ladder: sweep.values.clone(),
            metrics: sweep.metrics.clone(),
        };
        plan.validate().map_err(|e| constraint("sweep.values", e))?;
        Ok(plan)
    }

    /// Normalized text form; parsing it yields the same configuration.
    pub fn dump(&self) -> String {
        let s = &self.spec;
        let p = &s.params;
        let mut out = String::new();
        let mut section = |name: &str, entries: Vec<(&str, String)>| {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in entries {
                let _ = writeln!(out, "{k} = {v}");
            }
            out.push('\n');
        };
        let mut run = vec![
            ("scenario", s.scenario.name().to_string()),
            ("n", s.n.to_string()),
            ("t_end", fmt_f(s.t_end)),
            ("checkpoints", s.scheme.checkpoints.to_string()),
            ("snapshot_times", join(self.snapshot_times.iter().map(|&t| fmt_f(t)))),
        ];
        if let Some(o) = &self.output {
            run.push(("output", o.display().to_string()));
        }
        run.push(("seed", self.seed.to_string()));
        section("run", run);
        section(
            "penalty",
            vec![
                ("epsilon", fmt_f(p.epsilon)),
                ("eta", fmt_f(p.eta)),
                ("omega", fmt_f(p.omega)),
                ("nu", fmt_f(p.nu)),
                ("lambda", fmt_f(p.lambda)),
                ("delta", fmt_f(p.delta)),
                ("beta", fmt_f(p.beta)),
                ("alpha", self.alpha.map_or("auto".into(), fmt_f)),
            ],
        );
        section(
            "eos",
            vec![
                ("p_linear", fmt_f(s.eos.p_linear)),
                ("p_degenerate", fmt_f(s.eos.p_degenerate)),
                ("radiation", fmt_f(s.eos.radiation)),
            ],
        );
        let t = &s.transport;
        section(
            "transport",
            vec![
                ("mu_lower", fmt_f(t.mu_lower)),
                ("mu_upper", fmt_f(t.mu_upper)),
                ("mu_slope", fmt_f(t.mu_slope)),
                ("bulk", fmt_f(t.bulk)),
                ("bulk_upper", fmt_f(t.bulk_upper)),
                ("kappa_m_lower", fmt_f(t.kappa_m_lower)),
                ("kappa_m_upper", fmt_f(t.kappa_m_upper)),
                ("kappa_r_lower", fmt_f(t.kappa_r_lower)),
                ("kappa_r_upper", fmt_f(t.kappa_r_upper)),
            ],
        );
        let sc = &s.scheme;
        let mut scheme = vec![
            ("cfl", fmt_f(sc.cfl)),
            ("reconstruction", sc.reconstruction.name().to_string()),
            ("penalty_layer", fmt_f(sc.penalty_layer)),
            ("implicit_penalty", sc.implicit_penalty.to_string()),
            ("implicit_diffusion", sc.implicit_diffusion.to_string()),
            ("theta_min", fmt_f(sc.theta_min)),
            ("rho_vac", fmt_f(sc.rho_vac)),
        ];
        if let Some(dt) = sc.fixed_dt {
            scheme.push(("fixed_dt", fmt_f(dt)));
        }
        scheme.push(("max_steps", sc.max_steps.to_string()));
        section("scheme", scheme);
        if let Some(sw) = &self.sweep {
            let mut entries = vec![
                ("parameter", sw.parameter.name().to_string()),
                ("values", join(sw.values.iter().map(|&v| fmt_f(v)))),
                ("metrics", join(sw.metrics.iter().map(|m| m.name().to_string()))),
            ];
            if let Some((m, v)) = sw.slope {
                entries.push(("slope_metric", m.name().to_string()));
                entries.push(("min_slope", fmt_f(v)));
            }
            section("sweep", entries);
        }
        let c = &self.checks;
        let d = &s.diagnostics;
        section(
            "checks",
            vec![
                ("mass", c.mass.to_string()),
                ("mass_tolerance", fmt_f(c.mass_tolerance)),
                ("entropy", c.entropy.to_string()),
                ("entropy_tolerance", fmt_f(c.entropy_tolerance)),
                ("dissipation", c.dissipation.to_string()),
                ("dissipation_tolerance", fmt_f(d.violation_tolerance)),
                ("dissipation_constant", fmt_f(d.dissipation_constant)),
                ("energy", c.energy.to_string()),
                ("energy_tolerance", fmt_f(c.energy_tolerance)),
                ("confinement", c.confinement.to_string()),
                ("confinement_fraction", fmt_f(c.confinement_fraction)),
                ("trends", c.trends.to_string()),
            ],
        );
        out.pop();
        out
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(", ")
}

fn constraint(key: &str, e: Error) -> Error {
    let message = match e {
        Error::InvalidArgument(m) | Error::Thermo(m) | Error::Geometry(m) => m,
        other => other.to_string(),
    };
    Error::ConfigConstraint { key: key.into(), message }
}

/// Raw entries by `(section, key)`, consumed as they are interpreted.
struct Entries {
    map: BTreeMap<(String, String), (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::ConfigParse { line, message: "unterminated section header".into() })?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::ConfigParse { line, message: format!("unknown section [{name}]") });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::ConfigParse { line, message: "expected `key = value`".into() })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::ConfigParse { line, message: "empty key".into() });
            }
            let sec = section
                .clone()
                .ok_or_else(|| Error::ConfigParse { line, message: format!("key `{key}` outside any section") })?;
            if map.insert((sec.clone(), key.to_string()), (line, value.to_string())).is_some() {
                return Err(Error::ConfigParse { line, message: format!("duplicate key `{key}` in [{sec}]") });
            }
        }
        Ok(Self { map })
    }

    fn has_section(&self, section: &str) -> bool {
        self.map.keys().any(|(s, _)| s == section)
    }

    fn take_raw(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.map.remove(&(section.to_string(), key.to_string()))
    }

    fn take<T: FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T> {
        match self.take_raw(section, key) {
            Some((line, v)) => v
                .parse()
                .map_err(|_| Error::ConfigParse { line, message: format!("invalid value `{v}` for `{key}`") }),
            None => Ok(default),
        }
    }

    fn take_list<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        match self.take_raw(section, key) {
            Some((line, v)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::ConfigParse { line, message: format!("invalid item `{s}` in `{key}`") })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
            None => Ok(None),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.iter().min_by_key(|(_, (line, _))| *line) {
            Some(((sec, key), (line, _))) => {
                Err(Error::ConfigParse { line: *line, message: format!("unknown key `{key}` in [{sec}]") })
            }
            None => Ok(()),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::ConfigConstraint { key: key.into(), message: format!("must be strictly positive, got {v}") })
    }
}

fn nonnegative(key: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::ConfigConstraint { key: key.into(), message: format!("must be nonnegative, got {v}") })
    }
}

/// Parses configuration text; all constraints are checked before returning.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut e = Entries::parse(text)?;

    let scenario: Scenario = match e.take_raw("run", "scenario") {
        Some((line, v)) => v.parse().map_err(|_| Error::ConfigParse { line, message: format!("unknown scenario `{v}`") })?,
        None => Scenario::Piston1d,
    };
    let default_n = if scenario == Scenario::Disk2d { 64 } else { 400 };
    let n: usize = e.take("run", "n", default_n)?;
    if n < 4 {
        return Err(Error::ConfigConstraint { key: "run.n".into(), message: "at least 4 cells are required".into() });
    }
    let t_end = positive("run.t_end", e.take("run", "t_end", 0.5)?)?;
    let mut spec = RunSpec::new(scenario, n, t_end).map_err(|err| constraint("run.n", err))?;
    spec.scheme.checkpoints = e.take("run", "checkpoints", spec.scheme.checkpoints)?;
    if spec.scheme.checkpoints == 0 {
        return Err(Error::ConfigConstraint { key: "run.checkpoints".into(), message: "must be at least 1".into() });
    }
    let snapshot_times: Vec<f64> = e.take_list("run", "snapshot_times")?.unwrap_or_else(|| vec![t_end]);
    for &t in &snapshot_times {
        let k = t / t_end * spec.scheme.checkpoints as f64;
        if !(t >= 0.0 && t <= t_end) || (k - k.round()).abs() > 1e-9 {
            return Err(Error::ConfigConstraint {
                key: "run.snapshot_times".into(),
                message: format!("{t} is not a checkpoint time in [0, t_end]"),
            });
        }
    }
    let output = e.take_raw("run", "output").map(|(_, v)| PathBuf::from(v));
    let seed: u64 = e.take("run", "seed", 0)?;

    let p = &mut spec.params;
    p.epsilon = positive("penalty.epsilon", e.take("penalty", "epsilon", p.epsilon)?)?;
    p.eta = positive("penalty.eta", e.take("penalty", "eta", p.eta)?)?;
    p.omega = positive("penalty.omega", e.take("penalty", "omega", p.omega)?)?;
    p.nu = positive("penalty.nu", e.take("penalty", "nu", p.nu)?)?;
    p.lambda = positive("penalty.lambda", e.take("penalty", "lambda", p.lambda)?)?;
    p.delta = positive("penalty.delta", e.take("penalty", "delta", p.delta)?)?;
    p.beta = e.take("penalty", "beta", p.beta)?;
    if !(p.beta >= 4.0) {
        return Err(Error::ConfigConstraint { key: "penalty.beta".into(), message: "β ≥ 4 is required".into() });
    }
    let alpha = match e.take_raw("penalty", "alpha") {
        Some((_, v)) if v == "auto" => None,
        Some((line, v)) => Some(positive(
            "penalty.alpha",
            v.parse().map_err(|_| Error::ConfigParse { line, message: format!("invalid value `{v}` for `alpha`") })?,
        )?),
        None => None,
    };
    let h = scenario.grid(n).map_err(|err| constraint("run.n", err))?.h();
    p.alpha = alpha.unwrap_or_else(|| default_alpha(h));
    p.validate().map_err(|err| constraint("penalty", err))?;

    let eos = &mut spec.eos;
    eos.p_linear = positive("eos.p_linear", e.take("eos", "p_linear", eos.p_linear)?)?;
    eos.p_degenerate = positive("eos.p_degenerate", e.take("eos", "p_degenerate", eos.p_degenerate)?)?;
    eos.radiation = positive("eos.radiation", e.take("eos", "radiation", eos.radiation)?)?;
    eos.beta = spec.params.beta;
    eos.validate().map_err(|err| constraint("eos", err))?;

    let t = &mut spec.transport;
    for (key, slot) in [
        ("mu_lower", &mut t.mu_lower),
        ("mu_upper", &mut t.mu_upper),
        ("mu_slope", &mut t.mu_slope),
        ("bulk", &mut t.bulk),
        ("bulk_upper", &mut t.bulk_upper),
        ("kappa_m_lower", &mut t.kappa_m_lower),
        ("kappa_m_upper", &mut t.kappa_m_upper),
        ("kappa_r_lower", &mut t.kappa_r_lower),
        ("kappa_r_upper", &mut t.kappa_r_upper),
    ] {
        *slot = nonnegative(&format!("transport.{key}"), e.take("transport", key, *slot)?)?;
    }
    t.validate().map_err(|err| constraint("transport", err))?;

    let sc = &mut spec.scheme;
    sc.cfl = positive("scheme.cfl", e.take("scheme", "cfl", sc.cfl)?)?;
    sc.reconstruction = match e.take_raw("scheme", "reconstruction") {
        Some((line, v)) => Reconstruction::from_str(&v)
            .map_err(|_| Error::ConfigParse { line, message: format!("unknown reconstruction `{v}`") })?,
        None => sc.reconstruction,
    };
    sc.penalty_layer = nonnegative("scheme.penalty_layer", e.take("scheme", "penalty_layer", sc.penalty_layer)?)?;
    sc.implicit_penalty = e.take("scheme", "implicit_penalty", sc.implicit_penalty)?;
    sc.implicit_diffusion = e.take("scheme", "implicit_diffusion", sc.implicit_diffusion)?;
    sc.theta_min = positive("scheme.theta_min", e.take("scheme", "theta_min", sc.theta_min)?)?;
    sc.rho_vac = nonnegative("scheme.rho_vac", e.take("scheme", "rho_vac", sc.rho_vac)?)?;
    sc.fixed_dt = match e.take_raw("scheme", "fixed_dt") {
        Some((line, v)) => Some(positive(
            "scheme.fixed_dt",
            v.parse().map_err(|_| Error::ConfigParse { line, message: format!("invalid value `{v}` for `fixed_dt`") })?,
        )?),
        None => None,
    };
    sc.max_steps = e.take("scheme", "max_steps", sc.max_steps)?;
    sc.validate().map_err(|err| constraint("scheme", err))?;

    let sweep = if e.has_section("sweep") {
        let parameter: Parameter = match e.take_raw("sweep", "parameter") {
            Some((line, v)) => {
                v.parse().map_err(|_| Error::ConfigParse { line, message: format!("unknown parameter `{v}`") })?
            }
            None => {
                return Err(Error::ConfigConstraint { key: "sweep.parameter".into(), message: "required".into() })
            }
        };
        let values: Vec<f64> = e.take_list("sweep", "values")?.ok_or_else(|| Error::ConfigConstraint {
            key: "sweep.values".into(),
            message: "required".into(),
        })?;
        let metrics = e.take_list("sweep", "metrics")?.unwrap_or_else(|| default_metrics(parameter));
        let slope_metric: Option<Metric> = match e.take_raw("sweep", "slope_metric") {
            Some((line, v)) => {
                Some(v.parse().map_err(|_| Error::ConfigParse { line, message: format!("unknown metric `{v}`") })?)
            }
            None => None,
        };
        let min_slope: Option<f64> = e.take_list("sweep", "min_slope")?.and_then(|v| v.first().copied());
        let slope = match (slope_metric, min_slope) {
            (Some(m), Some(s)) => {
                if !metrics.contains(&m) {
                    return Err(Error::ConfigConstraint {
                        key: "sweep.slope_metric".into(),
                        message: format!("{m} is not among the sweep metrics"),
                    });
                }
                Some((m, s))
            }
            (None, None) => None,
            _ => {
                return Err(Error::ConfigConstraint {
                    key: "sweep.min_slope".into(),
                    message: "slope_metric and min_slope go together".into(),
                })
            }
        };
        Some(SweepSection { parameter, values, metrics, slope })
    } else {
        None
    };

    let mut checks = Checks::default();
    checks.mass = e.take("checks", "mass", checks.mass)?;
    checks.mass_tolerance = nonnegative("checks.mass_tolerance", e.take("checks", "mass_tolerance", checks.mass_tolerance)?)?;
    checks.entropy = e.take("checks", "entropy", checks.entropy)?;
    checks.entropy_tolerance =
        nonnegative("checks.entropy_tolerance", e.take("checks", "entropy_tolerance", checks.entropy_tolerance)?)?;
    checks.dissipation = e.take("checks", "dissipation", checks.dissipation)?;
    let d = &mut spec.diagnostics;
    d.violation_tolerance =
        nonnegative("checks.dissipation_tolerance", e.take("checks", "dissipation_tolerance", d.violation_tolerance)?)?;
    d.dissipation_constant =
        positive("checks.dissipation_constant", e.take("checks", "dissipation_constant", d.dissipation_constant)?)?;
    checks.energy = e.take("checks", "energy", checks.energy)?;
    checks.energy_tolerance =
        nonnegative("checks.energy_tolerance", e.take("checks", "energy_tolerance", checks.energy_tolerance)?)?;
    checks.confinement = e.take("checks", "confinement", checks.confinement)?;
    checks.confinement_fraction =
        positive("checks.confinement_fraction", e.take("checks", "confinement_fraction", checks.confinement_fraction)?)?;
    checks.trends = e.take("checks", "trends", checks.trends)?;

    e.finish()?;
    let config = RunConfig { spec, alpha, snapshot_times, output, seed, sweep, checks };
    config.spec.model().map_err(|err| constraint("run", err))?;
    if config.sweep.is_some() {
        config.sweep_plan()?;
    }
    Ok(config)
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|err| {
        Error::Io(std::io::Error::new(err.kind(), format!("cannot read config {}: {err}", path.display())))
    })?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults_and_dump_reparses() {
        let c = parse_config_str("[run]\nscenario = piston1d\n").unwrap();
        assert_eq!(c.spec.n, 400);
        assert_eq!(c.spec.params.alpha, 0.01);
        assert_eq!(c.spec.params.epsilon, 1e-3);
        assert_eq!(c.snapshot_times, vec![0.5]);
        let dump = c.dump();
        let again = parse_config_str(&dump).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.dump(), dump);
    }

    #[test]
    fn beta_below_four_is_rejected() {
        let err = parse_config_str("[penalty]\nbeta = 3\n").unwrap_err();
        assert!(matches!(err, Error::ConfigConstraint { ref key, .. } if key == "penalty.beta"), "{err}");
    }

    #[test]
    fn zero_epsilon_is_rejected() {
        let err = parse_config_str("[penalty]\nepsilon = 0\n").unwrap_err();
        assert!(matches!(err, Error::ConfigConstraint { ref key, .. } if key == "penalty.epsilon"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_values_carry_line_numbers() {
        let err = parse_config_str("[run]\nn = 200\n\n[scheme]\nwidth = 3\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 5, .. }), "{err}");
        let err = parse_config_str("[run]\nn = many\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 2, .. }), "{err}");
        let err = parse_config_str("n = 4\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }), "{err}");
        let err = parse_config_str("[mesh]\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }), "{err}");
    }

    #[test]
    fn sweep_section_round_trips() {
        let text = "[run]\nn = 200\nt_end = 0.1\n[sweep]\nparameter = epsilon\nvalues = 1e-2, 5e-3, 2.5e-3\n\
                    slope_metric = penalty_flux\nmin_slope = 1\n";
        let c = parse_config_str(text).unwrap();
        let sw = c.sweep.as_ref().unwrap();
        assert_eq!(sw.metrics, vec![Metric::PenaltyFlux, Metric::Confinement]);
        assert_eq!(sw.slope, Some((Metric::PenaltyFlux, 1.0)));
        assert_eq!(parse_config_str(&c.dump()).unwrap(), c);
        let bad = "[sweep]\nparameter = epsilon\nvalues = 1e-2, 2e-2, 5e-3\n";
        assert!(matches!(parse_config_str(bad), Err(Error::ConfigConstraint { .. })));
    }

    #[test]
    fn snapshot_times_must_be_checkpoints() {
        assert!(parse_config_str("[run]\nt_end = 0.5\ncheckpoints = 4\nsnapshot_times = 0.125, 0.5\n").is_ok());
        let err = parse_config_str("[run]\nt_end = 0.5\ncheckpoints = 4\nsnapshot_times = 0.1\n").unwrap_err();
        assert!(matches!(err, Error::ConfigConstraint { .. }));
    }

    #[test]
    fn explicit_alpha_survives_the_dump() {
        let c = parse_config_str("[penalty]\nalpha = 0.02\n").unwrap();
        assert_eq!(c.alpha, Some(0.02));
        assert_eq!(parse_config_str(&c.dump()).unwrap(), c);
    }
}
