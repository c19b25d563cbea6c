//! `prandtl-lab`: CLI for the Blasius boundary-layer laboratory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical gate failure,
//! 4 acceptance failure.

use clap::{Parser, Subcommand};
use prandtl_lab::blasius::{build_profile, ShootConfig};
use prandtl_lab::csvio;
use prandtl_lab::decay::{fit_exponent, Series};
use prandtl_lab::omega;
use prandtl_lab::plan::Plan;
use prandtl_lab::runner::{
    self, nash_check, run_march_stage, write_blasius_csv, write_march_artifacts, write_omega_csv,
    OrchestrateOpts,
};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "prandtl-lab",
    version,
    about = "Blasius boundary-layer laboratory"
)]
struct Cli {
    /// Plan/config file (line-oriented `key = value`)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Suppress progress output
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Shoot the profile and emit the eta,f,fp,fpp,fppp table
    Blasius {
        #[arg(long, default_value_t = 20.0)]
        eta_max: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
    },
    /// Audit the global nonnegativity of the structural quantity
    VerifyOmega {
        /// positivity tolerance (float-noise budget)
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// March the plan downstream, dumping stations, ledger, and norms
    March {
        #[arg(long)]
        plan: PathBuf,
    },
    /// Fit a log-log decay exponent to a CSV column
    DecayFit {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        field: String,
        /// Fit window "a,b" in x
        #[arg(long)]
        window: String,
        /// Predicted exponent; enables the pass/fail verdict
        #[arg(long, allow_negative_numbers = true)]
        predicted: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        tol: f64,
        #[arg(long, default_value_t = 0.02)]
        kappa: f64,
    },
    /// Run the heat-kernel calibration gate for the fitting pipeline
    HeatCalibrate,
    /// Report the Nash-ratio summary of a ledger CSV
    NashCheck {
        #[arg(long)]
        ledger: PathBuf,
    },
    /// Full pipeline: profile, audits, march, ledgers, fits, verdict
    Report,
}

fn load_plan(path: Option<&PathBuf>) -> Result<Plan, String> {
    match path {
        None => Ok(Plan::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            Plan::parse(&text).map_err(|e| e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    let conf_err = |m: String| (EXIT_CONFIG, m);
    let num_err = |m: String| (EXIT_NUMERICAL, m);
    match cli.cmd {
        Cmd::Blasius { eta_max, tol, h } => {
            let profile = build_profile(ShootConfig { eta_max, tol, h })
                .map_err(|e| num_err(e.to_string()))?;
            std::fs::create_dir_all(&cli.out).map_err(|e| (1, e.to_string()))?;
            let path = cli.out.join("blasius.csv");
            let line = write_blasius_csv(&profile, &path).map_err(|e| (1, e.to_string()))?;
            if !cli.quiet {
                println!("wrote {}", path.display());
            }
            println!("{line}");
            Ok(())
        }
        Cmd::VerifyOmega { tol } => {
            let profile =
                build_profile(ShootConfig::default()).map_err(|e| num_err(e.to_string()))?;
            let report = omega::audit(&profile, tol).map_err(|e| num_err(e.to_string()))?;
            std::fs::create_dir_all(&cli.out).map_err(|e| (1, e.to_string()))?;
            let path = cli.out.join("omega.csv");
            let line = write_omega_csv(&report, &path).map_err(|e| (1, e.to_string()))?;
            println!("{line}");
            if report.passed() {
                Ok(())
            } else {
                Err(num_err("positivity audit failed".into()))
            }
        }
        Cmd::March { plan } => {
            let text = std::fs::read_to_string(&plan)
                .map_err(|e| conf_err(format!("cannot read {}: {e}", plan.display())))?;
            let plan = Plan::parse(&text).map_err(|e| conf_err(e.to_string()))?;
            let profile =
                build_profile(ShootConfig::default()).map_err(|e| num_err(e.to_string()))?;
            let art = run_march_stage(&plan, &profile).map_err(stage_to_exit)?;
            let run_id = plan.run_id();
            let dir = cli.out.join(format!("run_{run_id}"));
            std::fs::create_dir_all(&dir).map_err(|e| (1, e.to_string()))?;
            let mut manifest =
                runner::Manifest::open(&dir, &plan).map_err(|e| (1, e.to_string()))?;
            write_march_artifacts(&art, &profile, &run_id, &dir, &mut manifest)
                .map_err(|e| (1, e.to_string()))?;
            manifest.close().map_err(|e| (1, e.to_string()))?;
            if !cli.quiet {
                println!(
                    "run {run_id}: {} stations written to {}",
                    art.history.stations.len(),
                    dir.display()
                );
            }
            Ok(())
        }
        Cmd::DecayFit {
            ledger,
            field,
            window,
            predicted,
            tol,
            kappa,
        } => {
            let text = std::fs::read_to_string(&ledger)
                .map_err(|e| conf_err(format!("cannot read {}: {e}", ledger.display())))?;
            let table = csvio::parse_table(&text).map_err(|e| conf_err(e.to_string()))?;
            let (a, b) = parse_window(&window).map_err(conf_err)?;
            let x = table
                .column("x")
                .ok_or_else(|| conf_err("no x column".into()))?;
            let v = table
                .column(&field)
                .ok_or_else(|| conf_err(format!("no column `{field}`")))?;
            let series = Series {
                x: x.to_vec(),
                v: v.to_vec(),
            };
            let fit = fit_exponent(
                &series,
                (a, b),
                &field,
                predicted.unwrap_or(f64::NAN),
                kappa,
            )
            .map_err(|e| num_err(e.to_string()))?;
            println!(
                "field={field} window=[{a},{b}] slope={:+.6} stderr={:.2e} n={}",
                fit.slope, fit.stderr, fit.n_points
            );
            if let Some(pred) = predicted {
                let pass = (fit.slope - pred).abs() <= tol + kappa;
                println!(
                    "predicted={pred:+.4} tol={tol} kappa={kappa} -> {}",
                    if pass { "PASS" } else { "FAIL" }
                );
                if !pass {
                    return Err((EXIT_ACCEPTANCE, format!("slope {} vs {}", fit.slope, pred)));
                }
            }
            Ok(())
        }
        Cmd::HeatCalibrate => {
            let rows = prandtl_lab::decay::heat_calibration(
                &prandtl_lab::decay::HeatSpec::default(),
                (100.0, 1e4),
                0.03,
            )
            .map_err(|e| num_err(e.to_string()))?;
            let mut all = true;
            for r in &rows {
                all &= r.pass;
                println!(
                    "alpha={} beta={} p={} slope={:+.4} predicted={:+.4} {}",
                    r.alpha,
                    r.beta,
                    r.p.name(),
                    r.slope,
                    r.predicted,
                    if r.pass { "PASS" } else { "FAIL" }
                );
            }
            if all {
                Ok(())
            } else {
                Err(num_err("heat calibration gate failed".into()))
            }
        }
        Cmd::NashCheck { ledger } => {
            let text = std::fs::read_to_string(&ledger)
                .map_err(|e| conf_err(format!("cannot read {}: {e}", ledger.display())))?;
            let table = csvio::parse_table(&text).map_err(|e| conf_err(e.to_string()))?;
            let n = nash_check(&table).map_err(num_err)?;
            println!(
                "nash: empirical_constant={:.6} final_two_decade_variation={:.4} branch_switches={}",
                n.empirical_constant, n.last_two_decades_variation, n.branch_switches
            );
            Ok(())
        }
        Cmd::Report => {
            let plan = load_plan(cli.config.as_ref()).map_err(conf_err)?;
            let mut opts = OrchestrateOpts::new(cli.out.clone());
            opts.quiet = cli.quiet;
            let bundle = runner::orchestrate(&plan, &opts).map_err(stage_to_exit)?;
            println!("report written to {}", bundle.dir.display());
            if bundle.verdict_pass {
                Ok(())
            } else {
                Err((EXIT_ACCEPTANCE, "verdict table has failures".into()))
            }
        }
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("window `{s}` is not `a,b`"));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad window start `{}`", parts[0]))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("bad window end `{}`", parts[1]))?;
    if !(a > 0.0 && b > a) {
        return Err(format!("window [{a}, {b}] is not increasing and positive"));
    }
    Ok((a, b))
}

fn stage_to_exit(e: runner::StageError) -> (u8, String) {
    let code = match e.kind {
        runner::FailureKind::Config => EXIT_CONFIG,
        runner::FailureKind::Numerical => EXIT_NUMERICAL,
        runner::FailureKind::Acceptance => EXIT_ACCEPTANCE,
        runner::FailureKind::Io => 1,
    };
    (code, e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
