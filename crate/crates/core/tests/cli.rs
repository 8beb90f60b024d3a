use std::path::Path;
use std::process::{Command, Output};

fn nsf(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nsf"));
    cmd.args(args).current_dir(dir).env_remove("NSF_THREADS");
    if let Some(t) = threads {
        cmd.env("NSF_THREADS", t);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn summary(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("summary.txt")).unwrap()
}

#[test]
fn simulate_piston_passes_mass_conservation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "p.cfg", "[run]\nscenario = piston1d\nn = 400\nt_end = 0.5\nsnapshot_times = 0, 0.5\n");
    let out = nsf(&["simulate", &cfg, "--output", "out", "--quiet"], tmp.path(), None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty());
    let dir = tmp.path().join("out");
    let text = summary(&dir);
    assert!(text.contains("check.mass = PASS\n"));
    assert!(text.ends_with("status = PASS\n"));
    let csv = std::fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 22);
    let (state, grid) = penalized_nsf::fields::read_snapshot(&dir.join("snapshot_0020.nsf")).unwrap();
    assert_eq!(grid.len(), 400);
    assert_eq!(state.time, 0.5);
    assert!(dir.join("snapshot_0000.nsf").exists());
    let echoed = std::fs::read_to_string(dir.join("config.txt")).unwrap();
    assert!(echoed.contains("alpha = auto"));
}

#[test]
fn validate_eos_passes_with_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "e.cfg", "[run]\nscenario = piston1d\n");
    let out = nsf(&["validate-eos", &cfg, "--output", "out"], tmp.path(), None);
    assert!(out.status.success());
    let text = summary(&tmp.path().join("out"));
    assert!(text.contains("check.gibbs_relation = PASS"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn invalid_config_exits_with_one_line_cause() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "b.cfg", "[penalty]\nbeta = 3\n");
    let out = nsf(&["simulate", &cfg], tmp.path(), None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("penalty.beta"));
    let out = nsf(&["simulate", "missing.cfg"], tmp.path(), None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_assertion_sets_exit_status() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.cfg",
        "[run]\nn = 200\nt_end = 0.1\n[checks]\nconfinement = true\nconfinement_fraction = 1e-9\n",
    );
    let out = nsf(&["simulate", &cfg, "--output", "out", "--quiet"], tmp.path(), None);
    assert_eq!(out.status.code(), Some(1));
    let text = summary(&tmp.path().join("out"));
    assert!(text.contains("check.confinement = FAIL"));
    assert!(text.contains("check.mass = PASS"));
}

#[test]
fn sweep_writes_table_and_trend_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.cfg",
        "[run]\nn = 200\nt_end = 0.2\n[sweep]\nparameter = epsilon\nvalues = 1e-2, 5e-3, 2.5e-3\n\
         slope_metric = penalty_flux\nmin_slope = 1\n",
    );
    let out = nsf(&["sweep", &cfg, "--output", "out", "--quiet"], tmp.path(), Some("2"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    let table = std::fs::read_to_string(dir.join("sweep_table.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("index,epsilon,penalty_flux,confinement"));
    assert_eq!(table.lines().count(), 4);
    let text = summary(&dir);
    assert!(text.contains("check.trend.penalty_flux = PASS"));
    assert!(text.contains("complete = true"));
}

#[test]
fn thread_cap_must_be_a_positive_integer() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "e.cfg", "[run]\nscenario = piston1d\n");
    let out = nsf(&["validate-eos", &cfg, "--quiet"], tmp.path(), Some("zero"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("NSF_THREADS"));
}

#[test]
fn repeated_ladder_gives_identical_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "r.cfg",
        "[run]\nn = 200\nt_end = 0.1\n[sweep]\nparameter = omega\nvalues = 1e-2, 1e-2, 1e-2\n[checks]\ntrends = false\n",
    );
    let out = nsf(&["sweep", &cfg, "--output", "out", "--quiet"], tmp.path(), Some("3"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(tmp.path().join("out/sweep_table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).map(|l| l.split_once(',').unwrap().1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| *r == rows[0]));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let config = penalized_nsf::config::parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            if path.file_name().unwrap().to_string_lossy().starts_with("sweep") {
                config.sweep_plan().unwrap();
            }
            count += 1;
        }
    }
    assert!(count >= 5);
}
