//! End-to-end CLI behavior: subcommand surfaces, file formats, exit codes,
//! and byte-identical reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prandtl-lab"))
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("prandtl-lab-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

const SMALL_PLAN: &str = "\
# short wall-active run
x_end = 10
n_psi = 400
dx0 = 0.005
output_per_decade = 8
initial_data.kind = bump
initial_data.center = 2
initial_data.width = 0.5
";

#[test]
fn blasius_emits_table_and_summary() {
    let dir = tempdir("blasius");
    let out = bin()
        .args(["blasius", "--quiet", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("fpp0=0.469600") && stdout.contains("beta=1.216"),
        "summary: {stdout}"
    );
    let csv = std::fs::read_to_string(dir.join("blasius.csv")).unwrap();
    assert!(csv.starts_with("eta,f,fp,fpp,fppp\n"));
    let first: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(
        (first[0], first[1], first[2], first[4]),
        (0.0, 0.0, 0.0, 0.0)
    );
    assert!((first[3] - 0.4696).abs() <= 1e-5, "fpp0 row: {first:?}");
}

#[test]
fn verify_omega_exits_zero_on_pass() {
    let dir = tempdir("omega");
    let out = bin()
        .args(["verify-omega", "--quiet", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.join("omega.csv")).unwrap();
    assert!(csv.starts_with("eta,omega,domega,neg_eta_fppp\n"));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("min_omega="), "{stdout}");
}

#[test]
fn march_writes_stations_ledger_and_manifest() {
    let dir = tempdir("march");
    let plan_path = dir.join("plan.txt");
    std::fs::write(&plan_path, SMALL_PLAN).unwrap();
    let out = bin()
        .args(["march", "--quiet", "--plan"])
        .arg(&plan_path)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = find_run_dir(&dir);
    let names = dir_names(&run_dir);
    assert!(names
        .iter()
        .any(|n| n.starts_with("station_") && n.ends_with("_10.csv")));
    assert!(names.iter().any(|n| n.starts_with("ledger_")));
    assert!(names.iter().any(|n| n.starts_with("norms_")));
    let station = names
        .iter()
        .find(|n| n.starts_with("station_") && n.ends_with("_10.csv"))
        .unwrap();
    let csv = std::fs::read_to_string(run_dir.join(station)).unwrap();
    assert!(csv.starts_with("psi,w,u,phi\n"));
    let ledger = names.iter().find(|n| n.starts_with("ledger_")).unwrap();
    let lcsv = std::fs::read_to_string(run_dir.join(ledger)).unwrap();
    assert!(lcsv.starts_with("x,l2_phi,wdiv_phi,diss,wdiss,cons,energy_lhs,div_identity_residual,omega_term,omega_r_term,nash_lhs,nash_rhs,nash_ratio,x1_l2,x1_wdiv,x1_diss,x1_wdiss\n"));
    // manifest closed, every artifact listed
    let manifest = std::fs::read_to_string(run_dir.join("manifest.txt")).unwrap();
    assert!(manifest.lines().any(|l| l == "closed = true"));
    for n in names.iter().filter(|n| n.ends_with(".csv")) {
        assert!(
            manifest.contains(&format!("artifact = {n}")),
            "manifest missing {n}"
        );
    }

    // determinism: a rerun reproduces every CSV byte-identically
    let dir2 = tempdir("march2");
    std::fs::write(dir2.join("plan.txt"), SMALL_PLAN).unwrap();
    let out2 = bin()
        .args(["march", "--quiet", "--plan"])
        .arg(dir2.join("plan.txt"))
        .arg("--out")
        .arg(&dir2)
        .output()
        .unwrap();
    assert_eq!(code(&out2), 0);
    let run_dir2 = find_run_dir(&dir2);
    for n in names.iter().filter(|n| n.ends_with(".csv")) {
        let a = std::fs::read(run_dir.join(n)).unwrap();
        let b = std::fs::read(run_dir2.join(n)).unwrap();
        assert_eq!(a, b, "{n} differs between reruns");
    }
}

#[test]
fn bad_config_exits_two() {
    let dir = tempdir("badconf");
    let plan_path = dir.join("plan.txt");
    std::fs::write(&plan_path, "theta = 0.3\n").unwrap();
    let out = bin()
        .args(["march", "--quiet", "--plan"])
        .arg(&plan_path)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 1") && err.contains("theta"), "{err}");

    let dup = dir.join("dup.txt");
    std::fs::write(&dup, "x_end = 10\nx_end = 20\n").unwrap();
    let out = bin()
        .args(["march", "--quiet", "--plan"])
        .arg(&dup)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("lines 1 and 2"), "{err}");
}

#[test]
fn decay_fit_and_negative_control_exit_codes() {
    let dir = tempdir("fit");
    // synthetic exact power law
    let mut csv = String::from("x,val\n");
    for k in 0..40 {
        let x = 100.0 * 10f64.powf(k as f64 / 19.0);
        csv.push_str(&format!("{x},{}\n", 7.0 * x.powf(-0.25)));
    }
    let path = dir.join("series.csv");
    std::fs::write(&path, csv).unwrap();
    let out = bin()
        .args([
            "decay-fit",
            "--field",
            "val",
            "--window",
            "100,10000",
            "--ledger",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("slope=-0.25"));
    // correct prediction passes
    let out = bin()
        .args([
            "decay-fit",
            "--field",
            "val",
            "--window",
            "100,10000",
            "--predicted",
            "-0.25",
            "--ledger",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    // deliberately wrong prediction fails with the acceptance code
    let out = bin()
        .args([
            "decay-fit",
            "--field",
            "val",
            "--window",
            "100,10000",
            "--predicted",
            "-1.0",
            "--ledger",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 4);
    // missing column is a configuration error
    let out = bin()
        .args([
            "decay-fit",
            "--field",
            "zzz",
            "--window",
            "100,10000",
            "--ledger",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn nash_check_flags_nonfinite_as_gate_failure() {
    let dir = tempdir("nash");
    let good = dir.join("good.csv");
    std::fs::write(
        &good,
        "x,nash_ratio,nash_rhs\n1,0.5,1.0\n10,0.55,0.8\n100,0.6,0.5\n",
    )
    .unwrap();
    let out = bin()
        .args(["nash-check", "--ledger"])
        .arg(&good)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("empirical_constant=0.6"));
    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "x,nash_ratio,nash_rhs\n1,NaN,1.0\n").unwrap();
    let out = bin()
        .args(["nash-check", "--ledger"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

fn find_run_dir(dir: &Path) -> PathBuf {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| p.is_dir() && p.file_name().unwrap().to_string_lossy().starts_with("run_"))
        .expect("no run_<id> directory")
}

fn dir_names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().to_string())
        .collect();
    v.sort();
    v
}
