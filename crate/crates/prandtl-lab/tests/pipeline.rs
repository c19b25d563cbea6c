//! Orchestrator-level integration: stage ordering, gate behavior, manifest
//! lifecycle, and report reproducibility on a desk-scale plan.

use prandtl_lab::plan::Plan;
use prandtl_lab::runner::{manifest_is_closed, orchestrate, FailureKind, OrchestrateOpts};

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("prandtl-pipe-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn small_plan() -> Plan {
    Plan::parse(
        "x_end = 10\nn_psi = 400\ndx0 = 0.005\noutput_per_decade = 8\n\
         initial_data.center = 2\ninitial_data.width = 0.5\n",
    )
    .unwrap()
}

#[test]
fn orchestrate_end_to_end_small_plan() {
    let dir = tempdir("e2e");
    let plan = small_plan();
    let bundle = orchestrate(&plan, &OrchestrateOpts::new(dir.clone())).unwrap();
    // fits are skipped on a 1-decade run; the verdict stays vacuously true
    assert!(bundle.verdict_pass);
    assert!(bundle.summary.contains("blasius: fpp0=0.469600"));
    assert!(bundle.summary.contains("fits skipped"));
    let manifest = std::fs::read_to_string(bundle.dir.join("manifest.txt")).unwrap();
    assert!(manifest_is_closed(&manifest));
    for name in &bundle.files {
        assert!(
            bundle.dir.join(name).exists(),
            "listed artifact {name} missing"
        );
    }
    // every emitted file is listed (manifest + the artifacts themselves)
    for entry in std::fs::read_dir(&bundle.dir).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().to_string();
        if name != "manifest.txt" {
            assert!(bundle.files.contains(&name), "unlisted file {name}");
        }
    }
}

#[test]
fn heat_gate_failure_withholds_fits() {
    let dir = tempdir("gate");
    let plan = small_plan();
    let mut opts = OrchestrateOpts::new(dir.clone());
    opts.heat_gate_tol = 1e-9; // unattainable: forces the gate to fail
    let err = orchestrate(&plan, &opts).unwrap_err();
    assert_eq!(err.stage, "heat-calibrate");
    assert_eq!(err.kind, FailureKind::Numerical);
    // gate ordering: no march artifacts, no verdict; manifest left unclosed
    let run_dir = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| p.is_dir())
        .unwrap();
    let names: Vec<String> = std::fs::read_dir(&run_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().to_string())
        .collect();
    assert!(!names.iter().any(|n| n.starts_with("verdict_")));
    assert!(!names.iter().any(|n| n.starts_with("ledger_")));
    let manifest = std::fs::read_to_string(run_dir.join("manifest.txt")).unwrap();
    assert!(
        !manifest_is_closed(&manifest),
        "killed/failed run must be detectable as stale"
    );
}

#[test]
fn default_plan_completes_within_desk_budget() {
    let dir = tempdir("default");
    let t0 = std::time::Instant::now();
    let bundle = orchestrate(&Plan::default(), &OrchestrateOpts::new(dir)).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 600.0, "default plan took {dt:.0}s");
    assert!(bundle.verdict_pass, "verdict failed:\n{}", bundle.summary);
    assert!(bundle.summary.contains("nash: empirical constant"));
}

#[test]
fn rerun_reproduces_csvs_byte_identically() {
    let plan = small_plan();
    let dir_a = tempdir("repro-a");
    let dir_b = tempdir("repro-b");
    let a = orchestrate(&plan, &OrchestrateOpts::new(dir_a)).unwrap();
    let b = orchestrate(&plan, &OrchestrateOpts::new(dir_b)).unwrap();
    assert_eq!(a.run_id, b.run_id);
    for name in a.files.iter().filter(|n| n.ends_with(".csv")) {
        let fa = std::fs::read(a.dir.join(name)).unwrap();
        let fb = std::fs::read(b.dir.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} not reproducible");
    }
}
