//! `report` subcommand end to end on a desk-scale plan.

use std::process::Command;

#[test]
fn report_runs_all_stages_and_exits_zero() {
    let dir = std::env::temp_dir().join(format!("prandtl-report-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let plan = dir.join("plan.txt");
    std::fs::write(
        &plan,
        "x_end = 10\nn_psi = 400\ndx0 = 0.005\noutput_per_decade = 8\n\
         initial_data.center = 2\ninitial_data.width = 0.5\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_prandtl-lab"))
        .args(["report", "--quiet", "--config"])
        .arg(&plan)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run_dir = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| p.is_dir())
        .unwrap();
    let summary = std::fs::read_to_string(run_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("blasius: fpp0=0.469600"));
    assert!(summary.contains("heat: alpha=1 beta=0 p=inf"));
    assert!(summary.contains("monotone beyond x=10"));
    for stage_file in ["blasius.csv", "omega.csv", "heat.csv", "manifest.txt"] {
        assert!(run_dir.join(stage_file).exists(), "missing {stage_file}");
    }
}
