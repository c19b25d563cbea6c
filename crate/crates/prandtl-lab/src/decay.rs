//! Decay laboratory: compatible localized perturbations of the base flow,
//! norm series of u − ū and v − v̄ along a march, log-log exponent fits, the
//! closed-form heat calibration of the fitting pipeline, and the verdict
//! table against the predicted rates.

use crate::blasius::BlasiusProfile;
use crate::grid::{ddx_coeffs, first_diff};
use crate::march::History;
use crate::physical::y_of_psi;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecayError {
    #[error("invalid initial-data spec: {0}")]
    BadSpec(String),
    #[error("unsupported derivative orders: alpha = {alpha}, beta = {beta}, p = {p}")]
    UnsupportedOrders { alpha: u8, beta: u8, p: String },
    #[error("fit window must span >= 1.5 decades and contain >= 12 points (got {decades:.2} decades, {points})")]
    WindowTooSmall { decades: f64, points: usize },
    #[error("fit refused: nonpositive values in window")]
    NonPositive,
    #[error(transparent)]
    Profile(#[from] crate::blasius::BlasiusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Blasius,
    Bump,
    HeatCalibration,
}

impl DataKind {
    pub fn parse(s: &str) -> Option<DataKind> {
        match s {
            "blasius" => Some(DataKind::Blasius),
            "bump" => Some(DataKind::Bump),
            "heat-calibration" => Some(DataKind::HeatCalibration),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DataKind::Blasius => "blasius",
            DataKind::Bump => "bump",
            DataKind::HeatCalibration => "heat-calibration",
        }
    }
}

/// Perturbation description. `center` and `width` are in the self-similar
/// stream coordinate ξ = ψ/√(x+1) at the starting station.
#[derive(Debug, Clone, Copy)]
pub struct InitialDataSpec {
    pub kind: DataKind,
    pub eps: f64,
    pub center: f64,
    pub width: f64,
    pub moment_free: bool,
}

impl InitialDataSpec {
    pub fn validate(&self) -> Result<(), DecayError> {
        if !(0.0..=0.1).contains(&self.eps) {
            return Err(DecayError::BadSpec(format!(
                "eps = {} outside [0, 0.1]",
                self.eps
            )));
        }
        if self.kind == DataKind::Bump {
            if self.center <= 0.0 || self.width <= 0.0 {
                return Err(DecayError::BadSpec(
                    "bump needs center > 0, width > 0".into(),
                ));
            }
            // support [center - width, center + width] must clear the wall
            // region xi <= 0.05*center
            if self.center - self.width < 0.05 * self.center {
                return Err(DecayError::BadSpec(format!(
                    "bump support reaches the wall: center {} width {}",
                    self.center, self.width
                )));
            }
        }
        Ok(())
    }
}

/// C^∞ compactly supported mollifier, B(0) = 1, support (−1, 1).
pub fn mollifier(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Initial field w₀(ψ) at x_start. Bump data multiplies the base flow by
/// (1 + ε·B(ξ)); the optional moment-free variant subtracts a double-width
/// bump scaled so that ∫φ₀ dψ = 0.
pub fn make_initial_data(
    spec: &InitialDataSpec,
    profile: &BlasiusProfile,
    x_start: f64,
) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>, DecayError> {
    spec.validate()?;
    let p = profile.clone();
    match spec.kind {
        DataKind::Blasius => Ok(Box::new(move |psi| p.w_stream(x_start, psi).unwrap())),
        DataKind::HeatCalibration => Err(DecayError::BadSpec(
            "heat-calibration data drives the heat oracle, not the march".into(),
        )),
        DataKind::Bump => {
            let sx = (x_start + 1.0).sqrt();
            let (eps, c, w) = (spec.eps, spec.center, spec.width);
            let moment_scale = if spec.moment_free {
                // zero out int phi0 dpsi with a double-width sibling bump
                let quad = |width: f64| {
                    let n = 4000;
                    let lo = (c - 2.0 * width).max(0.0) * sx;
                    let hi = (c + 2.0 * width) * sx;
                    let h = (hi - lo) / n as f64;
                    let mut acc = 0.0;
                    for k in 0..=n {
                        let psi = lo + k as f64 * h;
                        let wgt = if k == 0 || k == n { 0.5 } else { 1.0 };
                        acc += wgt
                            * p.w_stream(x_start, psi).unwrap()
                            * mollifier((psi / sx - c) / width)
                            * h;
                    }
                    acc
                };
                quad(w) / quad(2.0 * w)
            } else {
                0.0
            };
            let p2 = p.clone();
            Ok(Box::new(move |psi| {
                let xi = psi / sx;
                let b = mollifier((xi - c) / w) - moment_scale * mollifier((xi - c) / (2.0 * w));
                p2.w_stream(x_start, psi).unwrap() * (1.0 + eps * b)
            }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PNorm {
    P1,
    P2,
    PInf,
}

impl PNorm {
    pub fn name(&self) -> &'static str {
        match self {
            PNorm::P1 => "1",
            PNorm::P2 => "2",
            PNorm::PInf => "inf",
        }
    }

    /// 1/(2p), with the p = ∞ limit 0.
    fn half_inv(&self) -> f64 {
        match self {
            PNorm::P1 => 0.5,
            PNorm::P2 => 0.25,
            PNorm::PInf => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    U,
    V,
}

impl Field {
    pub fn name(&self) -> &'static str {
        match self {
            Field::U => "u",
            Field::V => "v",
        }
    }
}

/// Predicted decay exponent of ‖∂ₓ^α∂_y^β{field − base}‖_{L^p_y}:
/// −1/2 + 1/(2p) − α − β/2 for u − ū, −1 + 1/(2p) − α − β/2 for v − v̄
/// (κ is reported separately as verdict slack).
pub fn expected_exponent(alpha: u8, beta: u8, p: PNorm, field: Field) -> Result<f64, DecayError> {
    if alpha > 1 || beta > 1 || (field == Field::V && beta != 0) {
        return Err(DecayError::UnsupportedOrders {
            alpha,
            beta,
            p: p.name().into(),
        });
    }
    let base = match field {
        Field::U => -0.5,
        Field::V => -1.0,
    };
    Ok(base + p.half_inv() - alpha as f64 - 0.5 * beta as f64)
}

/// One measured norm series (x, value) on the recorded schedule interior.
#[derive(Debug, Clone)]
pub struct Series {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// Measurement options: γ is the ⟨η⟩^γ weight order (default 0).
#[derive(Debug, Clone, Copy)]
pub struct NormSpec {
    pub alpha: u8,
    pub beta: u8,
    pub p: PNorm,
    pub field: Field,
    pub gamma: u8,
}

impl NormSpec {
    pub fn new(alpha: u8, beta: u8, p: PNorm, field: Field) -> Self {
        NormSpec {
            alpha,
            beta,
            p,
            field,
            gamma: 0,
        }
    }

    pub fn column_name(&self) -> String {
        match (self.field, self.alpha, self.beta, self.p) {
            (Field::U, 0, 0, PNorm::P1) => "u_l1".into(),
            (Field::U, 0, 0, PNorm::P2) => "u_l2".into(),
            (Field::U, 0, 0, PNorm::PInf) => "u_linf".into(),
            (Field::U, 0, 1, PNorm::P2) => "dyu_l2".into(),
            (Field::V, 0, 0, PNorm::PInf) => "v_linf".into(),
            (f, a, b, p) => format!("{}_a{}_b{}_p{}", f.name(), a, b, p.name()),
        }
    }
}

/// v(ψ) = −u·∫₀^ψ (∂ₓu)/u² dψ′ on the grid, with ∂ₓu from the 3-station
/// stencil at fixed ψ and the wall cell closed by the ψ^{-1/2} model.
fn v_discrete(psi: &[f64], um: &[f64], u0: &[f64], up: &[f64], c: (f64, f64, f64)) -> Vec<f64> {
    let n = psi.len();
    let integrand = |k: usize| (c.0 * um[k] + c.1 * u0[k] + c.2 * up[k]) / (u0[k] * u0[k]);
    let mut q = vec![0.0; n];
    q[1] = 2.0 * psi[1] * integrand(1);
    for k in 2..n {
        q[k] = q[k - 1] + 0.5 * (integrand(k - 1) + integrand(k)) * (psi[k] - psi[k - 1]);
    }
    let mut v = vec![0.0; n];
    for k in 1..n {
        v[k] = -u0[k] * q[k];
    }
    v
}

/// L^p_y norm of nodal values `g` on the von Mises grid: dy = dψ/u, wall node
/// skipped (the integrands are bounded there; the first cell uses the plain
/// rectangle closure).
fn lp_y(psi: &[f64], u: &[f64], g: &[f64], p: PNorm, weight: Option<&[f64]>) -> f64 {
    let wt = |i: usize| weight.map_or(1.0, |w| w[i]);
    match p {
        PNorm::PInf => (1..psi.len())
            .map(|i| (g[i] * wt(i)).abs())
            .fold(0.0, f64::max),
        _ => {
            let pw = if p == PNorm::P1 { 1 } else { 2 };
            let mut acc = 0.0;
            for i in 1..psi.len() - 1 {
                let a = (g[i] * wt(i)).abs().powi(pw) / u[i];
                let b = (g[i + 1] * wt(i + 1)).abs().powi(pw) / u[i + 1];
                acc += 0.5 * (a + b) * (psi[i + 1] - psi[i]);
            }
            acc += psi[1] * (g[1] * wt(1)).abs().powi(pw) / u[1];
            if p == PNorm::P1 {
                acc
            } else {
                acc.sqrt()
            }
        }
    }
}

/// Measure one norm along the history. Stations without a full x-stencil are
/// skipped. The u-field difference is ρ = φ/(u + ū) at fixed ψ; y-derivatives
/// are u·∂_ψ; v − v̄ comes from v = −u·∫₀^ψ ∂ₓu/u² dψ′ (the x-stencil form of
/// −∂ₓ∫₀^y u dy′ through the von Mises map).
pub fn measure_norms(
    history: &History,
    profile: &BlasiusProfile,
    spec: NormSpec,
) -> Result<Series, DecayError> {
    if spec.alpha > 1 || spec.beta > 1 || (spec.field == Field::V && spec.beta != 0) {
        return Err(DecayError::UnsupportedOrders {
            alpha: spec.alpha,
            beta: spec.beta,
            p: spec.p.name().into(),
        });
    }
    if spec.alpha == 1 && spec.field == Field::V {
        // v already consumed the x-stencil; a second x-derivative stacks
        // stencil noise and is out of measurement scope
        return Err(DecayError::UnsupportedOrders {
            alpha: spec.alpha,
            beta: spec.beta,
            p: spec.p.name().into(),
        });
    }
    let psi = &history.grid.nodes;
    let n = psi.len();
    let mut out = Series {
        x: Vec::new(),
        v: Vec::new(),
    };
    let stations = &history.stations;
    // per-station u and base-flow tables, shared across stencils
    let mut u_tab: Vec<Vec<f64>> = Vec::with_capacity(stations.len());
    let mut ub_tab: Vec<Vec<f64>> = Vec::with_capacity(stations.len());
    for s in stations.iter() {
        u_tab.push(s.w.iter().map(|&w| w.max(0.0).sqrt()).collect());
        let mut ub = vec![0.0; n];
        for k in 0..n {
            ub[k] = profile.stream_base(s.x, psi[k])?.u;
        }
        ub_tab.push(ub);
    }
    for i in 1..stations.len().saturating_sub(1) {
        let x = stations[i].x;
        let c = ddx_coeffs(stations[i - 1].x, x, stations[i + 1].x);
        let (c0, c1, c2) = c;
        let u = &u_tab[i];
        let rho_at = |j: usize| -> Vec<f64> {
            let mut rho = vec![0.0; n];
            for k in 1..n {
                rho[k] =
                    (stations[j].w[k] - ub_tab[j][k] * ub_tab[j][k]) / (u_tab[j][k] + ub_tab[j][k]);
            }
            rho
        };
        let mut g = match spec.field {
            Field::U => rho_at(i),
            Field::V => {
                // the same discrete operator -u * cumint(u_x/u^2) is applied
                // to the evolved field and the base flow, so the difference
                // carries only perturbation-scale discretization error
                let v_num = v_discrete(psi, &u_tab[i - 1], u, &u_tab[i + 1], c);
                let v_base = v_discrete(psi, &ub_tab[i - 1], &ub_tab[i], &ub_tab[i + 1], c);
                (0..n).map(|k| v_num[k] - v_base[k]).collect()
            }
        };
        if spec.alpha == 1 && spec.field == Field::U {
            let (gm, g0, gp) = (rho_at(i - 1), rho_at(i), rho_at(i + 1));
            g = (0..n)
                .map(|k| c0 * gm[k] + c1 * g0[k] + c2 * gp[k])
                .collect();
        }
        if spec.beta == 1 {
            let dpsi = first_diff(psi, &g);
            g = (0..n).map(|k| u[k] * dpsi[k]).collect();
            g[0] = 0.0;
        }
        let weight: Option<Vec<f64>> = if spec.gamma > 0 {
            let yv = y_of_psi(psi, u);
            let sx = (x + profile.x0).sqrt();
            Some(
                (0..n)
                    .map(|k| {
                        let eta = yv[k] / sx;
                        (1.0 + eta * eta).sqrt().powi(spec.gamma as i32)
                    })
                    .collect(),
            )
        } else {
            None
        };
        out.x.push(x);
        out.v.push(lp_y(psi, u, &g, spec.p, weight.as_deref()));
    }
    Ok(out)
}

/// True if the series is nonincreasing (up to relative `slack`) wherever
/// x ≥ x0. For small data every measured norm is expected to be eventually
/// monotone decreasing; callers flag violations rather than assert them.
pub fn monotone_decreasing_after(series: &Series, x0: f64, slack: f64) -> bool {
    let mut prev: Option<f64> = None;
    for (&x, &v) in series.x.iter().zip(series.v.iter()) {
        if x < x0 {
            continue;
        }
        if let Some(p) = prev {
            if v > p * (1.0 + slack) {
                return false;
            }
        }
        prev = Some(v);
    }
    true
}

/// The five standard columns of the norms CSV.
pub fn standard_norm_specs() -> Vec<NormSpec> {
    vec![
        NormSpec::new(0, 0, PNorm::P1, Field::U),
        NormSpec::new(0, 0, PNorm::P2, Field::U),
        NormSpec::new(0, 0, PNorm::PInf, Field::U),
        NormSpec::new(0, 1, PNorm::P2, Field::U),
        NormSpec::new(0, 0, PNorm::PInf, Field::V),
    ]
}

/// Fitted log-log exponent over a window.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub field_id: String,
    pub window: (f64, f64),
    pub slope: f64,
    pub stderr: f64,
    pub predicted: f64,
    pub kappa_slack: f64,
    pub n_points: usize,
    /// peak series value inside the window (noise-floor detection)
    pub peak: f64,
}

/// Ordinary least squares of ln(value) on ln(x) over the window.
pub fn fit_exponent(
    series: &Series,
    window: (f64, f64),
    field_id: &str,
    predicted: f64,
    kappa: f64,
) -> Result<DecayFit, DecayError> {
    let mut lx = Vec::new();
    let mut lv = Vec::new();
    let mut peak: f64 = 0.0;
    for (&x, &v) in series.x.iter().zip(series.v.iter()) {
        if x >= window.0 && x <= window.1 {
            if v <= 0.0 {
                return Err(DecayError::NonPositive);
            }
            peak = peak.max(v);
            lx.push(x.ln());
            lv.push(v.ln());
        }
    }
    let decades = (window.1 / window.0).log10();
    if decades < 1.5 || lx.len() < 12 {
        return Err(DecayError::WindowTooSmall {
            decades,
            points: lx.len(),
        });
    }
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let mv = lv.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx
        .iter()
        .zip(lv.iter())
        .map(|(&x, &v)| (x - mx) * (v - mv))
        .sum();
    let slope = sxy / sxx;
    let icept = mv - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(lv.iter())
        .map(|(&x, &v)| {
            let r = v - (slope * x + icept);
            r * r
        })
        .sum();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok(DecayFit {
        field_id: field_id.to_string(),
        window,
        slope,
        stderr,
        predicted,
        kappa_slack: kappa,
        n_points: lx.len(),
        peak,
    })
}

/// Heat-calibration data: half-line heat equation h_x = h_yy with absorbing
/// wall, evolved by odd extension + Gaussian-kernel quadrature. The bump sits
/// far from the wall (image effects ≤ e^{-yc²/x} over the fit window) so that
/// the mass-carrying rates of the whole-line comparison are realized.
#[derive(Debug, Clone, Copy)]
pub struct HeatSpec {
    pub y_center: f64,
    pub sigma: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub points: usize,
}

impl Default for HeatSpec {
    fn default() -> Self {
        HeatSpec {
            y_center: 300.0,
            sigma: 2.0,
            x_lo: 70.0,
            x_hi: 1.4e4,
            points: 40,
        }
    }
}

/// ‖∂ₓ^α∂_y^β h‖_{L^p_y} series on a geometric x-schedule.
pub fn heat_oracle_run(spec: &HeatSpec, alpha: u8, beta: u8, p: PNorm) -> Series {
    let nq = 400usize; // source quadrature points across the bump
    let q_lo = spec.y_center - 10.0 * spec.sigma;
    let q_hi = spec.y_center + 10.0 * spec.sigma;
    let hq = (q_hi - q_lo) / nq as f64;
    let h0 = |yp: f64| {
        let t = (yp - spec.y_center) / spec.sigma;
        (-0.5 * t * t).exp()
    };
    let mut out = Series {
        x: Vec::new(),
        v: Vec::new(),
    };
    for k in 0..spec.points {
        let x = spec.x_lo * (spec.x_hi / spec.x_lo).powf(k as f64 / (spec.points - 1) as f64);
        let kern = |z: f64| -> f64 {
            let g = (-z * z / (4.0 * x)).exp() / (4.0 * std::f64::consts::PI * x).sqrt();
            match (alpha, beta) {
                (0, 0) => g,
                (0, 1) => -z / (2.0 * x) * g,
                (1, 0) => (z * z / (4.0 * x * x) - 1.0 / (2.0 * x)) * g,
                _ => f64::NAN,
            }
        };
        let h_at = |y: f64| -> f64 {
            let mut acc = 0.0;
            for j in 0..=nq {
                let yp = q_lo + j as f64 * hq;
                let wgt = if j == 0 || j == nq { 0.5 } else { 1.0 };
                acc += wgt * (kern(y - yp) - kern(y + yp)) * h0(yp) * hq;
            }
            acc
        };
        let y_max = spec.y_center + 8.0 * (spec.sigma * spec.sigma + 2.0 * x).sqrt();
        let ny = 2000usize;
        let dy = y_max / ny as f64;
        let v = match p {
            PNorm::PInf => (0..=ny)
                .map(|j| h_at(j as f64 * dy).abs())
                .fold(0.0, f64::max),
            PNorm::P1 | PNorm::P2 => {
                let pw = if p == PNorm::P1 { 1 } else { 2 };
                let mut acc = 0.0;
                for j in 0..=ny {
                    let wgt = if j == 0 || j == ny { 0.5 } else { 1.0 };
                    acc += wgt * h_at(j as f64 * dy).abs().powi(pw) * dy;
                }
                if p == PNorm::P1 {
                    acc
                } else {
                    acc.sqrt()
                }
            }
        };
        out.x.push(x);
        out.v.push(v);
    }
    out
}

/// One heat-calibration row.
#[derive(Debug, Clone)]
pub struct HeatFit {
    pub alpha: u8,
    pub beta: u8,
    pub p: PNorm,
    pub slope: f64,
    pub stderr: f64,
    pub predicted: f64,
    pub pass: bool,
}

/// The full 9-combination calibration gate: fitted exponents must match
/// −1/2 + 1/(2p) − α − β/2 within `tol`. This is a hard gate before any
/// Prandtl fit is trusted.
pub fn heat_calibration(
    spec: &HeatSpec,
    window: (f64, f64),
    tol: f64,
) -> Result<Vec<HeatFit>, DecayError> {
    let mut rows = Vec::new();
    for &(alpha, beta) in &[(0u8, 0u8), (0, 1), (1, 0)] {
        for &p in &[PNorm::P1, PNorm::P2, PNorm::PInf] {
            let series = heat_oracle_run(spec, alpha, beta, p);
            let predicted = -0.5 + p.half_inv() - alpha as f64 - 0.5 * beta as f64;
            let fit = fit_exponent(
                &series,
                window,
                &format!("heat_a{}_b{}_p{}", alpha, beta, p.name()),
                predicted,
                0.0,
            )?;
            rows.push(HeatFit {
                alpha,
                beta,
                p,
                slope: fit.slope,
                stderr: fit.stderr,
                predicted,
                pass: (fit.slope - predicted).abs() <= tol,
            });
        }
    }
    Ok(rows)
}

/// Verdict over a set of fits: PASS iff |slope − predicted| ≤ tol + κ, with a
/// vacuous pass when the series peak is at the noise floor.
#[derive(Debug, Clone)]
pub struct VerdictRow {
    pub fit: DecayFit,
    pub tol: f64,
    pub pass: bool,
    pub vacuous: bool,
}

pub const NOISE_FLOOR: f64 = 1e-8;

pub fn verdict(fits: &[(DecayFit, f64)]) -> Vec<VerdictRow> {
    fits.iter()
        .map(|(fit, tol)| {
            let vacuous = fit.peak <= NOISE_FLOOR;
            let pass = vacuous || (fit.slope - fit.predicted).abs() <= tol + fit.kappa_slack;
            VerdictRow {
                fit: fit.clone(),
                tol: *tol,
                pass,
                vacuous,
            }
        })
        .collect()
}
