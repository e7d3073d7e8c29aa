use std::path::Path;
use std::process::Command;

use ghz_transfer::params::RampTimes;
use ghz_transfer::{AmplitudeSource, PhysicalParams, RunMode};
use ghz_transfer_cli::budget::sig_figs;
use ghz_transfer_cli::sweep::{parse_values, write_csv};
use ghz_transfer_cli::{budget_table, execute, parse, run, run_sweep, run_verify, RunConfig, SweepAxis, Thresholds};
use num_complex::Complex64 as C64;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ghz-transfer"))
}

fn repo(rel: &str) -> String {
    format!("{}/../../{rel}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn budget_table_rows() {
    let p = PhysicalParams::transmon_preset();
    let t = budget_table(&p, 3, 1e-6).unwrap();
    let text = t.to_string();
    assert!(text.contains("tau_r      31.2 ns"), "{text}");
    assert!(text.contains("tau_o      70.7 ns"), "{text}");
    assert!(text.contains("tau_a        48 ns"), "{text}");
    assert!(text.contains("tau        0.15 us"), "{text}");
    assert_eq!(t.segments.len(), 9);
    assert_eq!(t.segments[4].label, "step3");
    let sum: f64 = t.segments.iter().map(|r| r.ramp_s + r.duration_s).sum::<f64>() + t.final_ramp_s;
    assert!((sum - t.budget.tau).abs() < 1e-20);

    let fast = PhysicalParams { ramps: RampTimes::uniform(1e-9), ..p.clone() };
    assert!((budget_table(&fast, 3, 1e-6).unwrap().budget.tau_a - 16e-9).abs() < 1e-22);

    let doubled = PhysicalParams {
        mu1: 2.0 * p.mu1,
        mu1_tilde: 2.0 * p.mu1_tilde,
        mu1p: 2.0 * p.mu1p,
        mu1p_tilde: 2.0 * p.mu1p_tilde,
        mu_al: 2.0 * p.mu_al,
        mu_ar: 2.0 * p.mu_ar,
        ..p.clone()
    };
    assert_eq!(budget_table(&doubled, 3, 1e-6).unwrap().budget.tau_r, t.budget.tau_r / 2.0);
}

#[test]
fn significant_figures() {
    assert_eq!(sig_figs(31.213203, 3), "31.2");
    assert_eq!(sig_figs(0.14992, 2), "0.15");
    assert_eq!(sig_figs(48.000000001, 2), "48");
    assert_eq!(sig_figs(1234.5, 2), "1200");
    assert_eq!(sig_figs(0.0, 3), "0");
}

#[test]
fn run_preset_n3_passes() {
    let r = execute(&RunConfig::default()).unwrap().report;
    assert!(r.passed, "{}", run::render_summary(&r));
    assert!(r.summary.min_final_fidelity.unwrap() >= 1.0 - 1e-6);
    assert!(((r.budget.tau - 0.15e-6) / 0.15e-6).abs() < 0.05);
    assert_eq!(r.samples[0].checkpoints.len(), 6);
    assert!(r.checks.iter().any(|c| c.name == "checkpoint_fidelity" && c.passed));
}

#[test]
fn total_time_does_not_depend_on_n() {
    let tau = |n| execute(&RunConfig { n, ..Default::default() }).unwrap().report.budget;
    assert_eq!(tau(2), tau(3));
}

#[test]
fn unentangled_input_stays_a_product() {
    let cfg = RunConfig {
        n: 2,
        amplitudes: AmplitudeSource::Literal(C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        ..Default::default()
    };
    let r = execute(&cfg).unwrap().report;
    assert!((r.summary.min_final_fidelity.unwrap() - 1.0).abs() < 1e-12);
    assert!(r.passed);
}

#[test]
fn reports_are_deterministic() {
    let cfg = RunConfig { n: 2, amplitudes: "random:5:3".parse().unwrap(), ..Default::default() };
    let a = execute(&cfg).unwrap().report.to_json();
    let b = execute(&cfg).unwrap().report.to_json();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 3);
    assert_eq!(v["run"]["mode"], "ideal-reduced");
    assert_eq!(v["passed"], true);
}

#[test]
fn failed_threshold_fails_the_run() {
    let cfg = RunConfig {
        n: 2,
        mode: RunMode::FullDispersive,
        delta_ratio: Some(5.0),
        thresholds: Thresholds { final_fidelity: Some(0.99), ..Default::default() },
        ..Default::default()
    };
    let r = execute(&cfg).unwrap().report;
    assert!(!r.passed);
    let c = r.checks.iter().find(|c| c.name == "final_fidelity").unwrap();
    assert_eq!(c.limit, 0.99);
    assert!(!c.passed);
}

#[test]
fn lindblad_needs_rates() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("bare.toml");
    let text = PhysicalParams::preset_source("transmon-tlr").unwrap();
    let bare = &text[..text.find("[decoherence.left]").unwrap()];
    std::fs::write(&params, bare).unwrap();
    let cfg = RunConfig { n: 2, mode: RunMode::Lindblad, params: params.display().to_string(), ..Default::default() };
    let err = execute(&cfg).err().unwrap().to_string();
    assert!(err.contains("needs decoherence rates"), "{err}");
    // a cavity lifetime alone is enough
    let ok = RunConfig { kappa_inv_us: Some(5.0), ..cfg };
    assert!(execute(&ok).unwrap().report.summary.min_final_fidelity.unwrap() < 1.0);
}

#[test]
fn config_file_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        format!(
            "params = \"transmon-tlr\"\nn = 2\nmode = \"ideal-reduced\"\namplitudes = \"0.6,0.8\"\noutput = \"out\"\n\
             schedule = \"{}\"\n\n[emit]\ntrajectory = true\nplots_data = true\n\n[thresholds]\nfinal_fidelity = 0.5\n",
            repo("schedules/literal-n2.sched")
        ),
    )
    .unwrap();
    let cfg = RunConfig::from_file(&cfg_path).unwrap();
    assert_eq!(cfg.output.as_deref(), Some(dir.path().join("out").as_path()));
    assert_eq!(cfg.thresholds().final_fidelity, Some(0.5));
    assert_eq!(cfg.thresholds().max_drift, Some(1e-9));
    let result = execute(&cfg).unwrap();
    assert!(result.report.passed);
    assert!(result.report.run.schedule_source.ends_with("literal-n2.sched"));
    let out = cfg.output.clone().unwrap();
    run::write_outputs(&result, &cfg, &out).unwrap();
    for f in ["report.json", "trajectory.csv", "checkpoints.csv", "segments.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("segment,time_s,norm,"));
    assert!(traj.lines().count() > 100);
    let cps = std::fs::read_to_string(out.join("checkpoints.csv")).unwrap();
    assert_eq!(cps.lines().count(), 7);
    assert!(cps.lines().nth(1).unwrap().starts_with("0,initial,"));

    std::fs::write(&cfg_path, "n = 2\ncolour = \"red\"\n").unwrap();
    assert!(RunConfig::from_file(&cfg_path).is_err());
}

#[test]
fn sweep_axes() {
    assert_eq!("delta-ratio".parse::<SweepAxis>().unwrap(), SweepAxis::DeltaRatio);
    assert_eq!("n".parse::<SweepAxis>().unwrap(), SweepAxis::N);
    let err = "mode".parse::<SweepAxis>().unwrap_err().to_string();
    assert!(err.contains("not a numeric axis"), "{err}");
    assert!("colour".parse::<SweepAxis>().is_err());
    assert!(parse_values("1, 2.5,x").is_err());
    assert_eq!(parse_values("5,10").unwrap(), vec![5.0, 10.0]);
    assert!(run_sweep(&RunConfig::default(), SweepAxis::N, &[2.5], Some(1)).is_err());
}

#[test]
fn sweep_over_detuning_lowers_f_occupation() {
    let cfg = RunConfig { n: 2, mode: RunMode::FullDispersive, ..Default::default() };
    let rows = run_sweep(&cfg, SweepAxis::DeltaRatio, &[5.0, 10.0, 20.0, 40.0], Some(2)).unwrap();
    let occ: Vec<f64> = rows.iter().map(|r| r.max_f_occupation.unwrap()).collect();
    assert!(occ.windows(2).all(|w| w[1] < w[0]), "{occ:?}");
    assert!(rows.iter().all(|r| r.n == 2 && r.mode == "full-dispersive"));
    assert!((rows[2].delta_ratio - 20.0).abs() < 1e-12);

    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("axis,value,n,mode,delta_ratio,kappa_inv_us,final_fidelity,max_f_occupation"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn sweep_over_cavity_lifetime() {
    let cfg = RunConfig { n: 2, mode: RunMode::Lindblad, ..Default::default() };
    let rows = run_sweep(&cfg, SweepAxis::KappaInvUs, &[1.0, 5.1, 50.0], None).unwrap();
    let f: Vec<f64> = rows.iter().map(|r| r.final_fidelity.unwrap()).collect();
    assert!(f[0] < f[1] && f[1] < f[2], "{f:?}");
    assert!((rows[1].kappa_inv_us.unwrap() - 5.1).abs() < 1e-12);
}

#[test]
fn sweep_rows_are_order_stable() {
    let cfg = RunConfig::default();
    let values = [4.0, 1.0, 3.0, 2.0];
    let one = run_sweep(&cfg, SweepAxis::N, &values, Some(1)).unwrap();
    let many = run_sweep(&cfg, SweepAxis::N, &values, Some(4)).unwrap();
    assert_eq!(one, many);
    assert_eq!(one.iter().map(|r| r.n).collect::<Vec<_>>(), vec![4, 1, 3, 2]);
}

#[test]
fn single_point_sweep_matches_run() {
    let cfg = RunConfig { n: 2, mode: RunMode::FullDispersive, ..Default::default() };
    let row = &run_sweep(&cfg, SweepAxis::DeltaRatio, &[10.0], Some(1)).unwrap()[0];
    let r = execute(&RunConfig { delta_ratio: Some(10.0), ..cfg }).unwrap().report;
    assert_eq!(row.final_fidelity, r.summary.min_final_fidelity);
    assert_eq!(row.max_f_occupation, r.summary.max_f_occupation);
    assert_eq!(row.tau_s, r.budget.tau);
}

#[test]
fn verify_passes_for_preset() {
    let checks = run_verify(&PhysicalParams::transmon_preset(), 1e-6).unwrap();
    assert_eq!(checks.len(), 6);
    assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
}

#[test]
fn parse_reports_located_diagnostics() {
    let p = PhysicalParams::transmon_preset();
    let bad = "version 1\nlayout n_left=2 n_right=2\nsegment s resonant-ge cavity=L site=A coupling=2pi*50MHz duration=5 ramp=0ns\n";
    let out = parse::check_text("x.sched", bad, &p);
    assert!(!out.ok());
    assert_eq!(out.messages, vec!["x.sched:3:67: error[missing-unit]: missing unit: `5` needs ns, us, ms or s (at `5`)"]);
    let good = parse::check_file(Path::new(&repo("schedules/canonical-n3.sched")), &p).unwrap();
    assert!(good.ok());
    assert_eq!(good.segments, 9);
}

#[test]
fn binary_exit_codes() {
    let out = bin().args(["budget", "--n", "2"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("tau_a        48 ns"));

    let out = bin().args(["parse", &repo("schedules/canonical-n3.sched"), "--canonical"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("version 1\nlayout n_left=3"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sched");
    std::fs::write(&bad, "version 1\nlayout n_left=2 n_right=2\nsegment s bogus\n").unwrap();
    let out = bin().args(["parse", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.sched:3:"));

    let out = bin().args(["run", "--params", "no-such-file.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["sweep", "--axis", "mode", "--values", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args(["run", "--n", "2", "--mode", "full-dispersive", "--delta-ratio", "5", "--json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);

    let out = bin().args(["sweep", "--axis", "n", "--values", "2,3", "--n", "2"]).env("GHZT_WORKERS", "2").output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}

#[test]
fn shipped_scenarios_pass() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut names: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for path in names.iter().filter(|p| p.extension().is_some_and(|e| e == "toml")) {
        let cfg = RunConfig::from_file(path).unwrap();
        let r = execute(&cfg).unwrap().report;
        assert!(r.passed, "{}:\n{}", path.display(), run::render_summary(&r));
    }
}
