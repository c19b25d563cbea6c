//! Acceptance suite. Each test prints one `criterion N: PASS/FAIL` line and
//! enforces its tolerances; `cargo test --test acceptance` runs the full
//! gate. Expensive marches are shared across criteria via OnceLock.

use prandtl_lab::blasius::{build_profile, shoot, BlasiusProfile, ShootConfig};
use prandtl_lab::decay::{
    expected_exponent, fit_exponent, heat_calibration, make_initial_data, measure_norms, verdict,
    DataKind, Field, HeatSpec, InitialDataSpec, NormSpec, PNorm, Series,
};
use prandtl_lab::ledger::{ledger_series, LedgerRow, WeightPolicy};
use prandtl_lab::march::{run, History, MarchConfig, RunSpec};
use prandtl_lab::omega;
use prandtl_lab::physical::{cross_compare, run_physical, PhysSpec};
use std::sync::OnceLock;
use std::time::Instant;

fn profile() -> &'static BlasiusProfile {
    static P: OnceLock<BlasiusProfile> = OnceLock::new();
    P.get_or_init(|| build_profile(ShootConfig::default()).unwrap())
}

fn policy() -> WeightPolicy {
    WeightPolicy::new().unwrap()
}

/// The criterion-7/9 run: free-stream bump, four decades. Wall contact
/// happens beyond the fit window, where the mass-carrying rates are realized.
fn far_bump_run() -> &'static (History, Vec<LedgerRow>) {
    static H: OnceLock<(History, Vec<LedgerRow>)> = OnceLock::new();
    H.get_or_init(|| {
        let p = profile();
        let spec = RunSpec {
            x_start: 1.0,
            x_end: 1.2e4,
            n_psi: 2400,
            xi_cover: 8.0,
            output_per_decade: 24,
            march: MarchConfig::default(),
        };
        let data = make_initial_data(
            &InitialDataSpec {
                kind: DataKind::Bump,
                eps: 0.05,
                center: 212.0,
                width: 14.0,
                moment_free: false,
            },
            p,
            1.0,
        )
        .unwrap();
        let h = run(&spec, &*data).unwrap();
        let rows = ledger_series(&h, p, &policy()).unwrap();
        (h, rows)
    })
}

fn near_bump_data(p: &BlasiusProfile) -> impl Fn(f64) -> f64 + '_ {
    let data = make_initial_data(
        &InitialDataSpec {
            kind: DataKind::Bump,
            eps: 0.05,
            center: 2.0,
            width: 0.5,
            moment_free: false,
        },
        p,
        1.0,
    )
    .unwrap();
    move |psi| data(psi)
}

/// Independent oracle for criterion 1: bisection over f''(0) with step-halved
/// RK4 until two step sizes agree to 1e-8.
fn oracle_fpp0(eta_max: f64) -> f64 {
    fn fp_end(g: f64, eta_max: f64, h: f64) -> f64 {
        let n = (eta_max / h).round() as usize;
        let (mut f, mut fp, mut fpp) = (0.0f64, 0.0f64, g);
        for _ in 0..n {
            let d = |f: f64, fp: f64, fpp: f64| (fp, fpp, -f * fpp);
            let (a1, b1, c1) = d(f, fp, fpp);
            let (a2, b2, c2) = d(f + 0.5 * h * a1, fp + 0.5 * h * b1, fpp + 0.5 * h * c1);
            let (a3, b3, c3) = d(f + 0.5 * h * a2, fp + 0.5 * h * b2, fpp + 0.5 * h * c2);
            let (a4, b4, c4) = d(f + h * a3, fp + h * b3, fpp + h * c3);
            f += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            fp += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            fpp += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
        }
        fp
    }
    fn bisect(eta_max: f64, h: f64) -> f64 {
        let (mut lo, mut hi) = (0.1f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fp_end(mid, eta_max, h) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
    let mut h = 0.02;
    let mut prev = bisect(eta_max, h);
    loop {
        h *= 0.5;
        let cur = bisect(eta_max, h);
        if (cur - prev).abs() <= 1e-8 {
            return cur;
        }
        prev = cur;
    }
}

fn sup_dev_from_base(h: &History, p: &BlasiusProfile) -> f64 {
    let mut worst: f64 = 0.0;
    for s in &h.stations {
        for (i, &psi) in h.grid.nodes.iter().enumerate() {
            worst = worst.max((s.w[i] - p.w_stream(s.x, psi).unwrap()).abs());
        }
    }
    worst
}

#[test]
fn criterion_01_blasius_shooting() {
    let t0 = Instant::now();
    let got = shoot(ShootConfig {
        eta_max: 20.0,
        tol: 1e-10,
        h: 1e-3,
    })
    .unwrap();
    let want = oracle_fpp0(20.0);
    let d_oracle = (got - want).abs();
    assert!(d_oracle <= 1e-5, "fpp0 {got} vs oracle {want}");
    assert!((got - 0.469600).abs() <= 1e-5, "fpp0 {got} vs 0.469600");
    let tr = prandtl_lab::blasius::integrate_ivp(got, 20.0, 1e-3).unwrap();
    let far = (tr.fp.last().unwrap() - 1.0).abs();
    assert!(far <= 1e-8, "|f'(20) - 1| = {far:e}");
    let f12 = shoot(ShootConfig {
        eta_max: 12.0,
        ..Default::default()
    })
    .unwrap();
    let f25 = shoot(ShootConfig {
        eta_max: 25.0,
        ..Default::default()
    })
    .unwrap();
    let spread = (f12 - got).abs().max((f25 - got).abs());
    assert!(spread <= 1e-6, "truncation spread {spread:e}");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 5.0, "runtime {dt:.2}s");
    println!(
        "criterion 1: PASS (fpp0={got:.7}, |oracle diff|={d_oracle:.1e}, far={far:.1e}, spread={spread:.1e}, {dt:.2}s)"
    );
}

#[test]
fn criterion_02_omega_positivity() {
    let t0 = Instant::now();
    let p = profile();
    let mut min_omega = f64::INFINITY;
    let mut min_domega = f64::INFINITY;
    let mut min_neg = f64::INFINITY;
    let n = 20_000usize;
    for k in 0..=n {
        let eta = 20.0 * k as f64 / n as f64;
        let v = p.eval(eta).unwrap();
        min_omega = min_omega.min(2.0 * v.f - eta * v.fp);
        min_domega = min_domega.min(v.fp - eta * v.fpp);
        min_neg = min_neg.min(-eta * v.fppp);
    }
    assert!(min_omega >= -1e-8 && min_domega >= -1e-8 && min_neg >= -1e-8);
    let mut ident: f64 = 0.0;
    for &x in &[1.0, 10.0, 100.0] {
        for k in 0..=2000 {
            let eta = 20.0 * k as f64 / 2000.0;
            let y = eta * (x + p.x0).sqrt();
            let om = omega::omega_physical(p, x, y).unwrap();
            let v = p.eval(eta).unwrap();
            ident = ident.max((2.0 * (x + p.x0) * om - (2.0 * v.f - eta * v.fp) * v.fpp).abs());
        }
    }
    assert!(ident <= 1e-8, "identity residual {ident:e}");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 5.0, "runtime {dt:.2}s");
    println!(
        "criterion 2: PASS (min omega={min_omega:.2e}, min domega={min_domega:.2e}, min -eta f'''={min_neg:.2e}, identity={ident:.1e}, {dt:.2}s)"
    );
}

#[test]
fn criterion_03_wall_taylor() {
    let p = profile();
    let w = omega::taylor_wall_checks(p);
    assert_eq!(w.fppp0, 0.0);
    assert_eq!(w.f4_0, 0.0);
    let d = (w.f5_0 + p.fpp0 * p.fpp0).abs();
    assert!(d <= 1e-10, "f5 identity residual {d:e}");
    println!(
        "criterion 3: PASS (f'''(0)=0, f''''(0)=0, f5(0)={:.6} = -fpp0^2 to {d:.1e})",
        w.f5_0
    );
}

#[test]
fn criterion_04_self_similarity_preservation() {
    let t0 = Instant::now();
    let p = profile();
    let base = |spec: RunSpec| -> f64 {
        let h = run(&spec, |psi| p.w_stream(1.0, psi).unwrap()).unwrap();
        sup_dev_from_base(&h, p)
    };
    let coarse = base(RunSpec {
        x_start: 1.0,
        x_end: 100.0,
        n_psi: 2000,
        xi_cover: 8.0,
        output_per_decade: 8,
        march: MarchConfig {
            theta: 0.5,
            dx0: 1e-3,
            ..Default::default()
        },
    });
    assert!(coarse <= 5e-3, "sup relative deviation {coarse:e}");
    let fine = base(RunSpec {
        x_start: 1.0,
        x_end: 100.0,
        n_psi: 4000,
        xi_cover: 8.0,
        output_per_decade: 8,
        march: MarchConfig {
            theta: 0.5,
            dx0: 5e-4,
            ..Default::default()
        },
    });
    let ratio = coarse / fine;
    assert!(ratio >= 3.0, "refinement ratio {ratio:.2}");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 120.0, "runtime {dt:.1}s");
    println!(
        "criterion 4: PASS (deviation={coarse:.2e}, refined={fine:.2e}, ratio={ratio:.2}, {dt:.1}s)"
    );
}

#[test]
fn criterion_05_cross_solver_agreement() {
    let t0 = Instant::now();
    let p = profile();
    let spec = RunSpec {
        x_start: 1.0,
        x_end: 100.0,
        n_psi: 2000,
        xi_cover: 8.0,
        output_per_decade: 8,
        march: MarchConfig::default(),
    };
    let data = near_bump_data(p);
    let vm = run(&spec, &data).unwrap();
    // physical initial data: u0(y) through the psi -> y map of w0
    let w0: Vec<f64> = vm.grid.nodes.iter().map(|&psi| data(psi)).collect();
    let u0: Vec<f64> = w0.iter().map(|&w| w.max(0.0).sqrt()).collect();
    let y0 = prandtl_lab::physical::y_of_psi(&vm.grid.nodes, &u0);
    let sched: Vec<f64> = vm.stations.iter().skip(1).map(|s| s.x).collect();
    let phys = run_physical(
        &PhysSpec::desk(1.0, 100.0),
        |y| {
            if y <= 0.0 {
                return 0.0;
            }
            match y0.binary_search_by(|v| v.total_cmp(&y)) {
                Ok(i) => u0[i],
                Err(i) => {
                    if i >= y0.len() {
                        1.0
                    } else {
                        let t = (y - y0[i - 1]) / (y0[i] - y0[i - 1]);
                        (1.0 - t) * u0[i - 1] + t * u0[i]
                    }
                }
            }
        },
        &sched,
    )
    .unwrap();
    let worst = cross_compare(&vm, &phys).unwrap();
    assert!(worst <= 1e-2, "cross-solver disagreement {worst:e}");
    let dt = t0.elapsed().as_secs_f64();
    println!("criterion 5: PASS (sup|u_vm - u_phys|={worst:.2e}, {dt:.1}s)");
}

#[test]
fn criterion_06_heat_calibration_gate() {
    let t0 = Instant::now();
    let rows = heat_calibration(&HeatSpec::default(), (100.0, 1e4), 0.03).unwrap();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        assert!(
            r.pass,
            "heat (alpha={}, beta={}, p={}): slope {} vs {}",
            r.alpha,
            r.beta,
            r.p.name(),
            r.slope,
            r.predicted
        );
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 60.0, "runtime {dt:.1}s");
    let worst = rows
        .iter()
        .map(|r| (r.slope - r.predicted).abs())
        .fold(0.0f64, f64::max);
    println!("criterion 6: PASS (9 exponents, worst |slope-predicted|={worst:.3}, {dt:.1}s)");
}

fn criterion7_fits() -> Vec<(prandtl_lab::decay::DecayFit, f64)> {
    let p = profile();
    let (h, _) = far_bump_run();
    let set: [(NormSpec, f64); 4] = [
        (NormSpec::new(0, 0, PNorm::P2, Field::U), 0.10),
        (NormSpec::new(0, 0, PNorm::PInf, Field::U), 0.10),
        (NormSpec::new(0, 1, PNorm::P2, Field::U), 0.15),
        (NormSpec::new(0, 0, PNorm::PInf, Field::V), 0.15),
    ];
    set.iter()
        .map(|(spec, tol)| {
            let series = measure_norms(h, p, *spec).unwrap();
            let predicted = expected_exponent(spec.alpha, spec.beta, spec.p, spec.field).unwrap();
            (
                fit_exponent(&series, (100.0, 1e4), &spec.column_name(), predicted, 0.02).unwrap(),
                *tol,
            )
        })
        .collect()
}

#[test]
fn criterion_07_decay_reproduction() {
    let t0 = Instant::now();
    let fits = criterion7_fits();
    for (fit, tol) in &fits {
        let d = (fit.slope - fit.predicted).abs();
        assert!(
            d <= *tol,
            "{}: slope {} vs predicted {} (tol {})",
            fit.field_id,
            fit.slope,
            fit.predicted,
            tol
        );
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 600.0, "runtime {dt:.1}s");
    let detail: Vec<String> = fits
        .iter()
        .map(|(f, _)| format!("{}={:+.3}", f.field_id, f.slope))
        .collect();
    println!("criterion 7: PASS ({}, {dt:.1}s)", detail.join(" "));
}

#[test]
fn criterion_08_ledgers() {
    let p = profile();
    let pol = policy();
    let make = |n: usize, dx0: f64, opd: usize| -> (History, Vec<LedgerRow>) {
        let spec = RunSpec {
            x_start: 1.0,
            x_end: 100.0,
            n_psi: n,
            xi_cover: 8.0,
            output_per_decade: opd,
            march: MarchConfig {
                dx0,
                ..Default::default()
            },
        };
        let data = near_bump_data(p);
        let h = run(&spec, data).unwrap();
        let rows = ledger_series(&h, p, &pol).unwrap();
        (h, rows)
    };
    let (_, coarse_rows) = make(1200, 2e-3, 16);
    let (_, fine_rows) = make(2400, 1e-3, 32);
    let at_x = |rows: &[LedgerRow], x: f64| -> LedgerRow {
        *rows
            .iter()
            .min_by(|a, b| (a.x - x).abs().total_cmp(&(b.x - x).abs()))
            .unwrap()
    };
    let rc = at_x(&coarse_rows, 10.0).div_identity_residual.abs();
    let rf = at_x(&fine_rows, 10.0).div_identity_residual.abs();
    let order = (rc / rf).log2();
    assert!(
        order >= 1.0,
        "division residual order {order:.2} (coarse {rc:e}, fine {rf:e})"
    );
    // sign structure on every recorded station of both runs and the big run
    let (_, big_rows) = far_bump_run();
    for rows in [&coarse_rows, &fine_rows, big_rows] {
        for r in rows.iter() {
            assert!(
                r.omega_term >= -1e-10,
                "omega_term {:e} at x={}",
                r.omega_term,
                r.x
            );
            assert!(r.diss >= 0.0);
        }
    }
    // conserved monitor nonincreasing beyond x = 10 up to 1%
    for rows in [&fine_rows, big_rows] {
        let mut prev: Option<f64> = None;
        for r in rows.iter().filter(|r| r.x >= 10.0) {
            if let Some(pc) = prev {
                assert!(
                    r.cons <= pc * 1.01,
                    "cons rose {pc} -> {} at x={}",
                    r.cons,
                    r.x
                );
            }
            prev = Some(r.cons);
        }
    }
    println!(
        "criterion 8: PASS (residual order={order:.2}, omega_term>=0 at all stations, cons nonincreasing)"
    );
}

#[test]
fn criterion_09_nash_ratio() {
    let (_, rows) = far_bump_run();
    let sup = rows.iter().fold(0.0f64, |a, r| a.max(r.nash_ratio));
    assert!(sup.is_finite() && sup > 0.0);
    let x_hi = rows.last().unwrap().x;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for r in rows.iter().filter(|r| r.x >= x_hi / 100.0) {
        lo = lo.min(r.nash_ratio);
        hi = hi.max(r.nash_ratio);
    }
    let variation = hi / lo;
    assert!(
        variation < 10.0,
        "nash ratio varies by {variation:.2} over the final two decades"
    );
    println!(
        "criterion 9: PASS (empirical constant={sup:.4}, final-two-decade variation={variation:.3})"
    );
}

#[test]
fn criterion_10_negative_control() {
    let fits = criterion7_fits();
    // feed the u_l2 fit a deliberately wrong predicted exponent
    let mut wrong = fits[0].0.clone();
    wrong.predicted = -1.0;
    let rows = verdict(&[(wrong, 0.10)]);
    assert!(!rows[0].pass, "negative control passed unexpectedly");
    // and the true prediction passes on the same data
    let rows_ok = verdict(&[(fits[0].0.clone(), 0.10)]);
    assert!(rows_ok[0].pass);
    println!("criterion 10: PASS (wrong predicted exponent rejected on criterion-7 data)");
}

#[test]
fn p_ordering_and_monotone_flags() {
    // fitted u-exponents for p = 1, 2, inf are ordered per 1/(2p), and the
    // standard norm series decay monotonically once past the transient
    let p = profile();
    let (h, _) = far_bump_run();
    let slope_of = |pn: PNorm| {
        let spec = NormSpec::new(0, 0, pn, Field::U);
        let s = measure_norms(h, p, spec).unwrap();
        fit_exponent(&s, (100.0, 1e4), &spec.column_name(), 0.0, 0.0)
            .unwrap()
            .slope
    };
    let (s1, s2, sinf) = (
        slope_of(PNorm::P1),
        slope_of(PNorm::P2),
        slope_of(PNorm::PInf),
    );
    assert!(
        s1 > s2 && s2 > sinf,
        "p-ordering violated: {s1} !> {s2} !> {sinf}"
    );
    for spec in [
        NormSpec::new(0, 0, PNorm::P2, Field::U),
        NormSpec::new(0, 0, PNorm::PInf, Field::U),
    ] {
        let s = measure_norms(h, p, spec).unwrap();
        assert!(
            prandtl_lab::decay::monotone_decreasing_after(&s, 10.0, 0.01),
            "{} not monotone past the first decade",
            spec.column_name()
        );
    }
}

#[test]
fn fitting_pipeline_sanity_synthetic() {
    // exact power law recovered to machine precision (supports criterion 10)
    let x: Vec<f64> = (0..40)
        .map(|k| 100.0 * 10f64.powf(k as f64 / 19.0))
        .collect();
    let v: Vec<f64> = x.iter().map(|&x| 7.0 * x.powf(-0.25)).collect();
    let f = fit_exponent(&Series { x, v }, (100.0, 1e4), "synthetic", -0.25, 0.0).unwrap();
    assert!((f.slope + 0.25).abs() < 1e-12);
}
