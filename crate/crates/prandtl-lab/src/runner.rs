//! Orchestration: run the stages in order (profile → Ω audit → heat
//! calibration → march → ledgers → fits → verdict), fail fast on gate
//! failures, and leave a manifest-tracked, byte-reproducible artifact tree.

use crate::blasius::{build_profile, BlasiusProfile, ShootConfig};
use crate::csvio::{self, Table};
use crate::decay::{
    self, expected_exponent, fit_exponent, heat_calibration, make_initial_data, measure_norms,
    verdict, DecayFit, Field, HeatSpec, NormSpec, PNorm, VerdictRow,
};
use crate::ledger::{self, WeightPolicy, LEDGER_HEADER};
use crate::march::{self, displacement_series, displacement_smooth, History};
use crate::omega;
use crate::plan::Plan;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// configuration / input errors → exit 2
    Config,
    /// numerical gate failures → exit 3
    Numerical,
    /// acceptance (verdict) failures → exit 4
    Acceptance,
    /// filesystem errors → exit 1
    Io,
}

#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub kind: FailureKind,
    pub message: String,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.message)
    }
}

impl std::error::Error for StageError {}

fn stage_err(stage: &'static str, kind: FailureKind, message: impl ToString) -> StageError {
    StageError {
        stage,
        kind,
        message: message.to_string(),
    }
}

fn io_err(stage: &'static str) -> impl Fn(std::io::Error) -> StageError {
    move |e| stage_err(stage, FailureKind::Io, e)
}

#[derive(Debug)]
pub struct ReportBundle {
    pub run_id: String,
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub verdict_pass: bool,
    pub summary: String,
}

/// Compact x tag for station filenames: up to 4 decimals, trailing zeros
/// trimmed (the geometric schedule never collides at this precision).
pub fn x_tag(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

pub struct Manifest {
    path: PathBuf,
    artifacts: Vec<String>,
    body: String,
}

impl Manifest {
    pub fn open(dir: &Path, plan: &Plan) -> std::io::Result<Manifest> {
        let started = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut body = String::new();
        let _ = writeln!(body, "run_id = {}", plan.run_id());
        let _ = writeln!(body, "code_version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(body, "started_unix = {started}");
        let _ = writeln!(body, "# configuration (canonical)");
        body.push_str(&plan.canonical());
        let path = dir.join("manifest.txt");
        std::fs::write(&path, &body)?;
        Ok(Manifest {
            path,
            artifacts: Vec::new(),
            body,
        })
    }

    pub fn add(&mut self, name: &str) -> std::io::Result<()> {
        self.artifacts.push(name.to_string());
        let _ = writeln!(self.body, "artifact = {name}");
        std::fs::write(&self.path, &self.body)
    }

    pub fn close(mut self) -> std::io::Result<Vec<String>> {
        let finished = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(self.body, "finished_unix = {finished}");
        let _ = writeln!(self.body, "closed = true");
        std::fs::write(&self.path, &self.body)?;
        Ok(self.artifacts)
    }
}

/// A manifest without its close record marks the run's artifacts as stale
/// (the run was killed mid-flight).
pub fn manifest_is_closed(text: &str) -> bool {
    text.lines().any(|l| l.trim() == "closed = true")
}

/// Write the profile CSV (`eta,f,fp,fpp,fppp`) and return the summary line.
pub fn write_blasius_csv(profile: &BlasiusProfile, path: &Path) -> std::io::Result<String> {
    let (eta, f, fp, fpp) = profile.table();
    let rows = (0..eta.len()).map(|i| {
        let fppp = -f[i] * fpp[i];
        vec![eta[i], f[i], fp[i], fpp[i], fppp]
    });
    csvio::write_csv(path, &["eta", "f", "fp", "fpp", "fppp"], rows)?;
    Ok(format!("fpp0={:.6} beta={:.6}", profile.fpp0, profile.beta))
}

pub fn write_omega_csv(report: &omega::PositivityReport, path: &Path) -> std::io::Result<String> {
    csvio::write_csv(
        path,
        &["eta", "omega", "domega", "neg_eta_fppp"],
        report
            .rows
            .iter()
            .map(|r| vec![r.eta, r.omega, r.domega, r.neg_eta_fppp]),
    )?;
    Ok(format!(
        "min_omega={:.3e} min_domega={:.3e} identity_residual_max={:.3e} wall: fppp0={} f4={} f5={:.6}",
        report.min_omega,
        report.min_domega,
        report.identity_residual_max,
        report.wall.fppp0,
        report.wall.f4_0,
        report.wall.f5_0
    ))
}

fn write_heat_csv(rows: &[decay::HeatFit], path: &Path) -> std::io::Result<()> {
    let mut s = String::from("alpha,beta,p,slope,stderr,predicted,pass\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.alpha,
            r.beta,
            r.p.name(),
            r.slope,
            r.stderr,
            r.predicted,
            u8::from(r.pass)
        );
    }
    std::fs::write(path, s)
}

fn write_verdict_csv(rows: &[VerdictRow], path: &Path) -> std::io::Result<()> {
    let mut s = String::from("field,alpha,beta,p,slope,stderr,predicted,kappa,pass\n");
    for r in rows {
        let (alpha, beta, p) = field_orders(&r.fit.field_id);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.fit.field_id,
            alpha,
            beta,
            p,
            r.fit.slope,
            r.fit.stderr,
            r.fit.predicted,
            r.fit.kappa_slack,
            u8::from(r.pass)
        );
    }
    std::fs::write(path, s)
}

fn field_orders(field_id: &str) -> (u8, u8, &'static str) {
    match field_id {
        "u_l1" => (0, 0, "1"),
        "u_l2" => (0, 0, "2"),
        "u_linf" => (0, 0, "inf"),
        "dyu_l2" => (0, 1, "2"),
        "v_linf" => (0, 0, "inf"),
        _ => (0, 0, "?"),
    }
}

/// The acceptance fit set: (norm spec, per-field tolerance).
pub fn acceptance_fit_set() -> Vec<(NormSpec, f64)> {
    vec![
        (NormSpec::new(0, 0, PNorm::P2, Field::U), 0.10),
        (NormSpec::new(0, 0, PNorm::PInf, Field::U), 0.10),
        (NormSpec::new(0, 1, PNorm::P2, Field::U), 0.15),
        (NormSpec::new(0, 0, PNorm::PInf, Field::V), 0.15),
    ]
}

pub struct MarchArtifacts {
    pub history: History,
    pub rows: Vec<ledger::LedgerRow>,
    pub norm_columns: Vec<(String, decay::Series)>,
}

/// March per the plan and compute ledgers and the standard norm series.
pub fn run_march_stage(
    plan: &Plan,
    profile: &BlasiusProfile,
) -> Result<MarchArtifacts, StageError> {
    let data = make_initial_data(&plan.initial_spec(), profile, plan.x_start)
        .map_err(|e| stage_err("march", FailureKind::Config, e))?;
    let history = march::run(&plan.march_spec(), &*data)
        .map_err(|e| stage_err("march", FailureKind::Numerical, e))?;
    let disp = displacement_series(&history);
    if !displacement_smooth(&disp) {
        return Err(stage_err(
            "march",
            FailureKind::Numerical,
            "displacement monitor detected a step-to-step jump (Picard misconvergence?)",
        ));
    }
    let policy = WeightPolicy::new().map_err(|e| stage_err("ledger", FailureKind::Numerical, e))?;
    let rows = ledger::ledger_series(&history, profile, &policy)
        .map_err(|e| stage_err("ledger", FailureKind::Numerical, e))?;
    let mut norm_columns = Vec::new();
    for spec in decay::standard_norm_specs() {
        let series = measure_norms(&history, profile, spec)
            .map_err(|e| stage_err("norms", FailureKind::Numerical, e))?;
        norm_columns.push((spec.column_name(), series));
    }
    Ok(MarchArtifacts {
        history,
        rows,
        norm_columns,
    })
}

pub fn write_march_artifacts(
    art: &MarchArtifacts,
    profile: &BlasiusProfile,
    run_id: &str,
    dir: &Path,
    manifest: &mut Manifest,
) -> std::io::Result<()> {
    let grid = &art.history.grid;
    for s in &art.history.stations {
        let name = format!("station_{run_id}_{}.csv", x_tag(s.x));
        let u = s.u();
        let rows = (0..grid.len()).map(|i| {
            let phi = s.w[i] - profile.w_stream(s.x, grid.nodes[i]).unwrap_or(f64::NAN);
            vec![grid.nodes[i], s.w[i], u[i], phi]
        });
        csvio::write_csv(&dir.join(&name), &["psi", "w", "u", "phi"], rows)?;
        manifest.add(&name)?;
    }
    let ledger_name = format!("ledger_{run_id}.csv");
    csvio::write_csv(
        &dir.join(&ledger_name),
        &LEDGER_HEADER,
        art.rows.iter().map(|r| r.to_vec()),
    )?;
    manifest.add(&ledger_name)?;
    let norms_name = format!("norms_{run_id}.csv");
    let mut header: Vec<&str> = vec!["x"];
    for (name, _) in &art.norm_columns {
        header.push(name);
    }
    let xs = &art.norm_columns[0].1.x;
    let rows = (0..xs.len()).map(|i| {
        let mut row = vec![xs[i]];
        for (_, s) in &art.norm_columns {
            row.push(s.v[i]);
        }
        row
    });
    csvio::write_csv(&dir.join(&norms_name), &header, rows)?;
    manifest.add(&norms_name)?;
    Ok(())
}

/// Fit the acceptance fields over the window, with κ slack.
pub fn fit_stage(
    art: &MarchArtifacts,
    window: (f64, f64),
    kappa: f64,
) -> Result<Vec<(DecayFit, f64)>, StageError> {
    let mut out = Vec::new();
    for (spec, tol) in acceptance_fit_set() {
        let name = spec.column_name();
        let series = art
            .norm_columns
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| stage_err("fit", FailureKind::Config, format!("no column {name}")))?;
        let predicted = expected_exponent(spec.alpha, spec.beta, spec.p, spec.field)
            .map_err(|e| stage_err("fit", FailureKind::Config, e))?;
        // a pure-noise series (blasius run) is allowed through to the
        // verdict, which marks it as a vacuous pass
        let peak = series.v.iter().fold(0.0f64, |a, &b| a.max(b));
        let fit = if peak <= decay::NOISE_FLOOR {
            DecayFit {
                field_id: name,
                window,
                slope: 0.0,
                stderr: 0.0,
                predicted,
                kappa_slack: kappa,
                n_points: 0,
                peak,
            }
        } else {
            fit_exponent(series, window, &name, predicted, kappa)
                .map_err(|e| stage_err("fit", FailureKind::Numerical, e))?
        };
        out.push((fit, tol));
    }
    Ok(out)
}

/// Nash-ratio summary over a ledger table.
pub struct NashSummary {
    pub sup_ratio: f64,
    pub last_two_decades_variation: f64,
    pub branch_switches: usize,
    pub empirical_constant: f64,
}

pub fn nash_check(table: &Table) -> Result<NashSummary, String> {
    let x = table.column("x").ok_or("ledger has no x column")?;
    let ratio = table
        .column("nash_ratio")
        .ok_or("ledger has no nash_ratio column")?;
    let rhs = table
        .column("nash_rhs")
        .ok_or("ledger has no nash_rhs column")?;
    if x.is_empty() {
        return Err("empty ledger".into());
    }
    let mut sup = 0.0f64;
    for &r in ratio {
        if !r.is_finite() {
            return Err("non-finite nash ratio".into());
        }
        sup = sup.max(r);
    }
    let x_hi = x[x.len() - 1];
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (&xi, &r) in x.iter().zip(ratio.iter()) {
        if xi >= x_hi / 100.0 && r > 0.0 {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if !(lo.is_finite() && hi > 0.0) {
        return Err("no positive ratios in the final two decades".into());
    }
    // branch bookkeeping from the stored maxima
    let mut switches = 0usize;
    let mut prev: Option<bool> = None;
    for (&xi, &rv) in x.iter().zip(rhs.iter()) {
        if rv <= 0.0 || !rv.is_finite() {
            continue;
        }
        let d_if_b1 = (rv / xi.powf(0.1)).powf(1.25);
        let b1 = d_if_b1 >= xi.powf(-0.75);
        if let Some(p) = prev {
            if p != b1 {
                switches += 1;
            }
        }
        prev = Some(b1);
    }
    Ok(NashSummary {
        sup_ratio: sup,
        last_two_decades_variation: hi / lo,
        branch_switches: switches,
        empirical_constant: sup,
    })
}

pub struct OrchestrateOpts {
    pub out_dir: PathBuf,
    pub quiet: bool,
    pub heat_gate_tol: f64,
    pub kappa: f64,
}

impl OrchestrateOpts {
    pub fn new(out_dir: PathBuf) -> Self {
        OrchestrateOpts {
            out_dir,
            quiet: true,
            heat_gate_tol: 0.03,
            kappa: 0.02,
        }
    }
}

/// The full pipeline. Gate order: profile invariants, Ω positivity, heat
/// calibration; no decay fit is emitted if a gate failed.
pub fn orchestrate(plan: &Plan, opts: &OrchestrateOpts) -> Result<ReportBundle, StageError> {
    let run_id = plan.run_id();
    let dir = opts.out_dir.join(format!("run_{run_id}"));
    std::fs::create_dir_all(&dir).map_err(io_err("setup"))?;
    let mut manifest = Manifest::open(&dir, plan).map_err(io_err("setup"))?;
    let mut summary = String::new();
    let say = |summary: &mut String, line: &str, quiet: bool| {
        if !quiet {
            println!("{line}");
        }
        summary.push_str(line);
        summary.push('\n');
    };

    // stage 1: profile (invariants are the gate)
    let profile = build_profile(ShootConfig::default())
        .map_err(|e| stage_err("blasius", FailureKind::Numerical, e))?;
    let line = write_blasius_csv(&profile, &dir.join("blasius.csv")).map_err(io_err("blasius"))?;
    manifest.add("blasius.csv").map_err(io_err("blasius"))?;
    say(&mut summary, &format!("blasius: {line}"), opts.quiet);

    // stage 2: omega positivity gate
    let audit = omega::audit(&profile, 1e-8)
        .map_err(|e| stage_err("verify-omega", FailureKind::Numerical, e))?;
    let line = write_omega_csv(&audit, &dir.join("omega.csv")).map_err(io_err("verify-omega"))?;
    manifest.add("omega.csv").map_err(io_err("verify-omega"))?;
    say(&mut summary, &format!("verify-omega: {line}"), opts.quiet);
    if !audit.passed() {
        return Err(stage_err(
            "verify-omega",
            FailureKind::Numerical,
            "positivity audit failed",
        ));
    }

    // stage 3: heat calibration gate
    let heat = heat_calibration(&HeatSpec::default(), (100.0, 1e4), opts.heat_gate_tol)
        .map_err(|e| stage_err("heat-calibrate", FailureKind::Numerical, e))?;
    write_heat_csv(&heat, &dir.join("heat.csv")).map_err(io_err("heat-calibrate"))?;
    manifest.add("heat.csv").map_err(io_err("heat-calibrate"))?;
    for r in &heat {
        say(
            &mut summary,
            &format!(
                "heat: alpha={} beta={} p={} slope={:+.4} predicted={:+.4} {}",
                r.alpha,
                r.beta,
                r.p.name(),
                r.slope,
                r.predicted,
                if r.pass { "PASS" } else { "FAIL" }
            ),
            opts.quiet,
        );
    }
    if heat.iter().any(|r| !r.pass) {
        return Err(stage_err(
            "heat-calibrate",
            FailureKind::Numerical,
            "heat calibration gate failed; decay fits withheld",
        ));
    }

    // stage 4: march + ledgers + norms
    let art = run_march_stage(plan, &profile)?;
    write_march_artifacts(&art, &profile, &run_id, &dir, &mut manifest).map_err(io_err("march"))?;
    say(
        &mut summary,
        &format!(
            "march: {} stations, x in [{}, {}]",
            art.history.stations.len(),
            plan.x_start,
            plan.x_end
        ),
        opts.quiet,
    );
    // eventual-monotonicity flags (reported, not gated)
    let flags: Vec<String> = art
        .norm_columns
        .iter()
        .map(|(name, s)| {
            let ok = decay::monotone_decreasing_after(s, 10.0 * plan.x_start, 0.01);
            format!("{name}={}", if ok { "yes" } else { "FLAGGED" })
        })
        .collect();
    say(
        &mut summary,
        &format!(
            "monotone beyond x={}: {}",
            10.0 * plan.x_start,
            flags.join(" ")
        ),
        opts.quiet,
    );

    // stage 5: fits + verdict
    let last_x = art.rows.last().map_or(plan.x_end, |r| r.x);
    let window = (100.0f64.max(10.0 * plan.x_start), last_x.min(1e4));
    let mut verdict_pass = true;
    if window.1 / window.0 >= 10f64.powf(1.5) {
        let fits = fit_stage(&art, window, opts.kappa)?;
        let rows = verdict(&fits);
        write_verdict_csv(&rows, &dir.join(format!("verdict_{run_id}.csv")))
            .map_err(io_err("verdict"))?;
        manifest
            .add(&format!("verdict_{run_id}.csv"))
            .map_err(io_err("verdict"))?;
        for r in &rows {
            verdict_pass &= r.pass;
            say(
                &mut summary,
                &format!(
                    "fit: {} slope={:+.4} (se {:.4}) predicted={:+.4} tol={} kappa={} {}",
                    r.fit.field_id,
                    r.fit.slope,
                    r.fit.stderr,
                    r.fit.predicted,
                    r.tol,
                    r.fit.kappa_slack,
                    if r.vacuous {
                        "PASS (vacuous: noise floor)"
                    } else if r.pass {
                        "PASS"
                    } else {
                        "FAIL"
                    }
                ),
                opts.quiet,
            );
        }
    } else {
        say(
            &mut summary,
            &format!(
                "fit: window [{}, {}] spans < 1.5 decades, fits skipped",
                window.0, window.1
            ),
            opts.quiet,
        );
    }

    // nash summary from the in-memory rows
    let ledger_csv = csvio::csv_string(&LEDGER_HEADER, art.rows.iter().map(|r| r.to_vec()));
    match csvio::parse_table(&ledger_csv).ok().as_ref().map(nash_check) {
        Some(Ok(n)) => say(
            &mut summary,
            &format!(
                "nash: empirical constant {:.4}, final-two-decade variation {:.3}, branch switches {}",
                n.empirical_constant, n.last_two_decades_variation, n.branch_switches
            ),
            opts.quiet,
        ),
        _ => say(&mut summary, "nash: unavailable", opts.quiet),
    }

    std::fs::write(dir.join("summary.txt"), &summary).map_err(io_err("report"))?;
    manifest.add("summary.txt").map_err(io_err("report"))?;
    let files = manifest.close().map_err(io_err("report"))?;
    Ok(ReportBundle {
        run_id,
        dir,
        files,
        verdict_pass,
        summary,
    })
}
