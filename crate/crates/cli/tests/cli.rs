use std::fs;
use std::path::Path;
use std::process::Command;

use fibercap::bounds::{gn_peak_power, RateMethod};
use fibercap::units::watts_to_dbm;
use fibercap::ChannelParams;
use fibercap_cli::{compare, sweep, CliError, GridSpec, Method, RawConfig, RunConfig};

fn config(text: &str) -> RunConfig {
    RawConfig::parse_str(text).unwrap().build().unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fibercap"))
}

fn read_column(path: &Path, column: usize) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(column).unwrap().to_string())
        .collect()
}

#[test]
fn gn_curve_peaks_at_gn_peak_power() {
    let peak = gn_peak_power(&ChannelParams::reference(1)).unwrap();
    let centre = watts_to_dbm(peak);
    let cfg = config(&format!(
        "method = gn\npmin_dbm = {}\npmax_dbm = {}\npstep_dbm = 0.25",
        centre - 2.0,
        centre + 2.0
    ));
    let curve = sweep(&cfg).unwrap();
    let best = curve
        .points
        .iter()
        .max_by(|a, b| a.rate.total_cmp(&b.rate))
        .unwrap();
    assert!((best.power - peak).abs() < 1e-9 * peak);
}

#[test]
fn closed_form_rates_grow_with_memory() {
    let peak = gn_peak_power(&ChannelParams::reference(1)).unwrap();
    let dbm = watts_to_dbm(0.7 * peak);
    let rates: Vec<f64> = [1, 2, 4, 8]
        .iter()
        .map(|n| {
            let cfg = config(&format!("memory = {n}\npmin_dbm = {dbm}\npmax_dbm = {dbm}"));
            sweep(&cfg).unwrap().points[0].rate
        })
        .collect();
    assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{rates:?}");
}

#[test]
fn mc_on_linear_channel_tracks_awgn_capacity() {
    let cfg = config("method = mc\neta = 0\nns = 3000\nnq = 20\neps = 1e-5\npmin_dbm = -36\npmax_dbm = -30\npstep_dbm = 6");
    let curve = sweep(&cfg).unwrap();
    assert_eq!(curve.method, RateMethod::MonteCarlo);
    for p in &curve.points {
        let capacity = (1.0 + p.power / 4.1e-6).log2();
        assert!(p.rate <= capacity + 3.0 * p.std_err);
        assert!(
            (p.rate - capacity).abs() <= 3.0 * p.std_err + 0.01,
            "{p:?} vs {capacity}"
        );
    }
}

#[test]
fn cgm_sweep_is_monotone() {
    let cfg =
        config("method = cgm\nk = 2\nbudget = 30\npmin_dbm = -20\npmax_dbm = -10\npstep_dbm = 5");
    let curve = sweep(&cfg).unwrap();
    assert_eq!(curve.points.len(), 3);
    assert!(curve.points.windows(2).all(|w| w[1].rate >= w[0].rate));
}

#[test]
fn compare_overlays_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.csv");
    let grid = "pmin_dbm = -20\npmax_dbm = -2\npstep_dbm = 1\n";
    let cfgs = [
        config(&format!("{grid}memory = 1\nlabel = n1")),
        config(&format!("{grid}memory = 8\nlabel = n8")),
        config(&format!("{grid}method = gn")),
    ];
    let curves = compare(&cfgs, Some(&out)).unwrap();
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "power_w,power_dbm,n1_rate,n1_std_err,n8_rate,n8_std_err,gn-n1_rate,gn-n1_std_err"
    );
    // every grid point here is below the GN optimum
    for ((a, b), g) in curves[0]
        .points
        .iter()
        .zip(&curves[1].points)
        .zip(&curves[2].points)
    {
        assert!((g.rate - b.rate).abs() <= (g.rate - a.rate).abs());
    }
}

#[test]
fn compare_matches_run_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = "method = mc\nns = 500\nnq = 4\neps = 1e-5\npmin_dbm = -10\npmax_dbm = -4\npstep_dbm = 3\nseed = 3\n";
    let conf = dir.path().join("a.conf");
    fs::write(&conf, text).unwrap();
    let run_out = dir.path().join("run.csv");
    let status = bin()
        .arg("--config")
        .arg(&conf)
        .arg("--out")
        .arg(&run_out)
        .status()
        .unwrap();
    assert!(status.success());

    let single = dir.path().join("single.csv");
    let status = bin()
        .arg("compare")
        .arg(&conf)
        .arg("--out")
        .arg(&single)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read_column(&single, 2), read_column(&run_out, 2));
    assert_eq!(read_column(&single, 3), read_column(&run_out, 3));
    assert_eq!(read_column(&single, 0), read_column(&run_out, 0));

    let double = dir.path().join("double.csv");
    let status = bin()
        .arg("compare")
        .arg(&conf)
        .arg(&conf)
        .arg("--out")
        .arg(&double)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read_column(&double, 2), read_column(&double, 4));
    assert_eq!(read_column(&double, 3), read_column(&double, 5));
}

#[test]
fn compare_rejects_grid_mismatch() {
    let a = config("pmin_dbm = -10\npmax_dbm = 0");
    let b = config("pmin_dbm = -10\npmax_dbm = 0\npstep_dbm = 1");
    assert!(matches!(
        compare(&[a, b], None),
        Err(CliError::GridMismatch { first: 0, other: 1 })
    ));
    assert!(matches!(compare(&[], None), Err(CliError::NoConfigs)));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    fs::write(
        &conf,
        "method = gn\nmemory = 3\npmin_dbm = -5\npmax_dbm = 5\n",
    )
    .unwrap();
    let out = dir.path().join("o.csv");
    let status = bin()
        .args([
            "--method",
            "closed-form",
            "--pmin-dbm",
            "-3",
            "--pmax-dbm",
            "-1",
            "--pstep-dbm",
            "1",
        ])
        .arg("--config")
        .arg(&conf)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read_column(&out, 4), vec!["closed-form"; 3]);
    assert_eq!(read_column(&out, 5), vec!["3"; 3]);
    assert!((read_column(&out, 1)[0].parse::<f64>().unwrap() + 3.0).abs() < 1e-12);
}

#[test]
fn writes_to_stdout_without_out() {
    let output = bin()
        .args(["--method", "gn", "--pmin-dbm", "0", "--pmax-dbm", "0"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(
        text.starts_with("power_w,power_dbm,rate_bits_per_symbol,std_err,method,memory_n,seed\n")
    );
}

#[test]
fn errors_exit_nonzero_with_message() {
    for args in [
        vec!["--method", "cgm", "--k", "3"],
        vec!["--method", "mc", "--ns", "100"],
        vec!["--eta", "-1"],
        vec!["--pmin-dbm", "5", "--pmax-dbm", "0"],
        vec!["--config", "/nonexistent/file.conf"],
        vec!["compare", "/nonexistent/a.conf"],
    ] {
        let output = bin().args(&args).output().unwrap();
        assert!(!output.status.success(), "{args:?}");
        assert!(
            String::from_utf8(output.stderr).unwrap().contains("error"),
            "{args:?}"
        );
    }
    let output = bin().args(["--method", "qam"]).output().unwrap();
    assert!(!output.status.success());
}

#[test]
fn default_grid() {
    let cfg = config("");
    assert_eq!(cfg.method, Method::ClosedForm);
    assert_eq!(
        cfg.grid,
        GridSpec {
            min_dbm: -40.0,
            max_dbm: 10.0,
            step_db: 0.5
        }
    );
    assert_eq!(sweep(&cfg).unwrap().points.len(), 101);
}
