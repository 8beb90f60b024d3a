//! Subcommand execution behind the `nsf` binary: runs, output files and the
//! `key = value` summary whose verdicts decide the exit status.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::cascade::{run_sweep, Metric};
use crate::config::RunConfig;
use crate::diagnostics::{dissipation_inequality, energy_balance_residual, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::fields::write_snapshot;
use crate::solver::{advance_observed, initial_data};
use crate::thermo::hypothesis_report;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const SWEEP_TABLE_FILE: &str = "sweep_table.csv";
pub const CONFIG_ECHO_FILE: &str = "config.txt";
pub const DEFAULT_OUTPUT: &str = "nsf-output";

/// Lower bound on the dissipation-inequality left-hand side.
pub const DISSIPATION_LHS_FLOOR: f64 = -1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    ValidateEos,
    Sweep,
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    /// Overrides the configured output directory.
    pub output: Option<PathBuf>,
    pub quiet: bool,
}

/// Summary lines plus the overall verdict.
#[derive(Clone, Debug, Default)]
pub struct Summary {
    lines: Vec<(String, String)>,
    failed: usize,
    checked: usize,
}

impl Summary {
    pub fn value(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn verdict(&mut self, key: &str, pass: bool) {
        self.checked += 1;
        if !pass {
            self.failed += 1;
        }
        self.value(key, if pass { "PASS" } else { "FAIL" });
    }

    /// True when every recorded verdict passed.
    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "assertions = {}", self.checked);
        let _ = writeln!(out, "failed = {}", self.failed);
        let _ = writeln!(out, "status = {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn slug(name: &str) -> String {
    let mut s = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_matches('_').to_string()
}

fn output_dir(config: &RunConfig, opts: &Options) -> Result<PathBuf> {
    let dir = opts.output.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    fs::create_dir_all(&dir)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("output directory {}: {e}", dir.display()))))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display()))))
}

/// Executes `command`; the summary is also written to `summary.txt`.
pub fn run(command: Command, config: &RunConfig, opts: &Options) -> Result<Summary> {
    let dir = output_dir(config, opts)?;
    write_text(&dir.join(CONFIG_ECHO_FILE), &config.dump())?;
    let started = Instant::now();
    let mut summary = Summary::default();
    match command {
        Command::Simulate => simulate(config, &dir, &mut summary, opts.quiet)?,
        Command::ValidateEos => validate_eos(config, &mut summary),
        Command::Sweep => sweep(config, &dir, &mut summary, opts.quiet)?,
    }
    write_text(&dir.join(SUMMARY_FILE), &summary.render())?;
    if !opts.quiet {
        eprintln!(
            "{} in {:.2} s: {} ({})",
            match command {
                Command::Simulate => "simulate",
                Command::ValidateEos => "validate-eos",
                Command::Sweep => "sweep",
            },
            started.elapsed().as_secs_f64(),
            if summary.passed() { "PASS" } else { "FAIL" },
            dir.join(SUMMARY_FILE).display()
        );
    }
    Ok(summary)
}

fn simulate(config: &RunConfig, dir: &Path, summary: &mut Summary, quiet: bool) -> Result<()> {
    let spec = &config.spec;
    let model = spec.model()?;
    let initial = initial_data(&model)?;
    let wanted = config.snapshot_checkpoints();
    let (_, report) = advance_observed(&model, initial, spec.t_end, |k, state| {
        if wanted.contains(&k) {
            write_snapshot(state, &model.grid, &dir.join(format!("snapshot_{k:04}.nsf")))?;
        }
        if !quiet {
            eprintln!("checkpoint {k}/{} t = {:.6}", spec.scheme.checkpoints, state.time);
        }
        Ok(())
    })?;
    let file = fs::File::create(dir.join(DIAGNOSTICS_FILE))?;
    report.write_csv(BufWriter::new(file))?;

    summary.value("command", "simulate");
    summary.value("scenario", spec.scenario.name());
    summary.value("n", spec.n);
    summary.value("t_end", spec.t_end);
    summary.value("epsilon", spec.params.epsilon);
    summary.value("steps", report.last().steps);
    summary.value("snapshots", wanted.len());
    run_checks(config, &report, summary);
    Ok(())
}

/// Verdicts of the enabled checks on one run.
pub fn run_checks(config: &RunConfig, report: &DiagnosticsReport, summary: &mut Summary) {
    let checks = &config.checks;
    let m0 = report.initial().mass;
    let drift = report.max_mass_drift();
    summary.value("mass_initial", m0);
    summary.value("mass_drift_max", drift);
    if checks.mass {
        summary.verdict("check.mass", drift <= checks.mass_tolerance);
    }
    let min_sigma = report.min_sigma();
    summary.value("entropy_production_min", min_sigma);
    if checks.entropy {
        summary.verdict("check.entropy", min_sigma >= -checks.entropy_tolerance);
    }
    let dis = dissipation_inequality(report);
    let min_lhs = dis.iter().map(|d| d.lhs).fold(f64::INFINITY, f64::min);
    let violations = dis.iter().filter(|d| d.violated).count();
    summary.value("dissipation_lhs_min", min_lhs);
    summary.value("dissipation_violations", violations);
    if checks.dissipation {
        summary.verdict("check.dissipation", min_lhs >= DISSIPATION_LHS_FLOOR && violations == 0);
    }
    let residuals: Vec<f64> =
        report.checkpoints.iter().skip(1).map(|c| energy_balance_residual(report, c, 1.0).unwrap_or(f64::NAN)).collect();
    let worst = residuals.iter().copied().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() || b > a { b } else { a });
    summary.value("energy_residual_final", residuals.last().copied().unwrap_or(0.0));
    summary.value("energy_residual_max", if residuals.is_empty() { 0.0 } else { worst });
    if checks.energy {
        summary.verdict("check.energy", residuals.iter().all(|r| *r <= checks.energy_tolerance));
    }
    let conf = report.max_confinement();
    summary.value("confinement_max", conf);
    summary.value("penalty_flux_integral", report.last().integrals.penalty_flux);
    summary.value("floor_hits", report.last().floor_hits);
    if checks.confinement {
        summary.verdict("check.confinement", conf <= checks.confinement_fraction * m0);
    }
}

fn validate_eos(config: &RunConfig, summary: &mut Summary) {
    summary.value("command", "validate-eos");
    for check in hypothesis_report(&config.spec.eos, &config.spec.transport) {
        summary.value(&format!("detail.{}", slug(check.name)), &check.detail);
        summary.verdict(&format!("check.{}", slug(check.name)), check.passed);
    }
}

fn sweep(config: &RunConfig, dir: &Path, summary: &mut Summary, quiet: bool) -> Result<()> {
    let plan = config.sweep_plan()?;
    let section = config.sweep.as_ref().expect("sweep plan implies a sweep section");
    if !quiet {
        eprintln!("sweep {} over {:?}", plan.parameter, plan.ladder);
    }
    let table = run_sweep(&plan)?;
    let file = fs::File::create(dir.join(SWEEP_TABLE_FILE))?;
    table.write_csv(BufWriter::new(file))?;

    summary.value("command", "sweep");
    summary.value("scenario", config.spec.scenario.name());
    summary.value("n", config.spec.n);
    summary.value("parameter", plan.parameter);
    summary.value("runs", plan.ladder.len());
    summary.value("complete", table.is_complete());
    for (i, e) in table.failures.iter().enumerate() {
        summary.value(&format!("failure.{i}"), e);
    }
    summary.verdict("check.runs", table.is_complete());
    if config.checks.trends {
        for v in table.verdicts(section.slope) {
            if let Some(fit) = v.fit {
                summary.value(&format!("trend.{}.slope", v.metric), fit.slope);
                summary.value(&format!("trend.{}.r2", v.metric), fit.r2);
            }
            summary.value(&format!("trend.{}.decreasing", v.metric), v.decreasing);
            summary.verdict(&format!("check.trend.{}", v.metric), v.pass);
        }
    }
    if config.checks.confinement && plan.metrics.contains(&Metric::Confinement) {
        let last_value = *plan.ladder.last().expect("validated ladder");
        let spec = plan.spec_at(last_value);
        let model = spec.model()?;
        let m0 = initial_data(&model)?.mass(&model.grid);
        let conf = table.column(Metric::Confinement).and_then(|c| c.last().copied()).filter(|_| table.is_complete());
        summary.value("confinement_smallest", conf.unwrap_or(f64::NAN));
        summary.verdict("check.confinement", conf.is_some_and(|c| c <= config.checks.confinement_fraction * m0));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;

    #[test]
    fn summary_status_reflects_every_verdict() {
        let mut s = Summary::default();
        s.value("n", 4);
        s.verdict("check.a", true);
        assert!(s.passed());
        s.verdict("check.b", false);
        assert!(!s.passed());
        let text = s.render();
        assert!(text.contains("check.b = FAIL\n"));
        assert!(text.ends_with("status = FAIL\n"));
    }

    #[test]
    fn slugs_are_key_safe() {
        assert_eq!(slug("structure function P'(Z) > 0"), "structure_function_p_z_0");
    }

    #[test]
    fn validate_eos_passes_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config_str("[run]\nscenario = piston1d\n").unwrap();
        let opts = Options { output: Some(dir.path().to_path_buf()), quiet: true };
        let summary = run(Command::ValidateEos, &config, &opts).unwrap();
        assert!(summary.passed(), "{}", summary.render());
        assert!(dir.path().join(SUMMARY_FILE).exists());
    }
}
