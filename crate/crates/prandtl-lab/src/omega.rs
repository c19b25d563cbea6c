//! Positivity audit for the structural quantity Ω of the Blasius base flow.
//!
//! In self-similar variables 2(x+x₀)·Ω = ω(η)·f″(η) with ω = 2f − ηf′, so
//! global nonnegativity of Ω reduces to ω ≥ 0. The audit certifies the sign
//! ladder numerically: −ηf‴ ≥ 0 ⇒ ∂_ηω nondecreasing; ∂_ηω(0) = 0 ⇒
//! ∂_ηω ≥ 0 ⇒ ω nondecreasing; ω(0) = 0 ⇒ ω ≥ 0.
//!
//! All wall derivatives come from the differentiated ODE, never finite
//! differences: near η = 0 the quantities vanish to 5th order, so numerical
//! differentiation there would be pure noise.

use crate::blasius::{BlasiusError, BlasiusProfile};

/// ω(η) = 2f − ηf′, the self-similar reduction of 2(x+x₀)Ω / f″.
pub fn omega_ss(profile: &BlasiusProfile, eta: f64) -> Result<f64, BlasiusError> {
    let v = profile.eval(eta)?;
    Ok(2.0 * v.f - eta * v.fp)
}

/// ∂_η ω = f′ − ηf″.
pub fn domega(profile: &BlasiusProfile, eta: f64) -> Result<f64, BlasiusError> {
    let v = profile.eval(eta)?;
    Ok(v.fp - eta * v.fpp)
}

/// Ω(x, y) assembled from the base-flow fields through the momentum-equation
/// reduction Ω = −½ū_yy − ½v̄ū_y (the raw definition −ū_yy + ½ūū_x reduces to
/// this because ū solves the Prandtl system); with the self-similar fields of
/// `base_flow` this makes the identity 2(x+x₀)Ω = ω·f″ exact.
pub fn omega_physical(profile: &BlasiusProfile, x: f64, y: f64) -> Result<f64, BlasiusError> {
    let b = profile.base_flow(x, y)?;
    Ok(-0.5 * b.u_yy - 0.5 * b.v * b.u_y)
}

/// Wall Taylor data from the differentiated ODE:
/// f‴(0) = −f f″|₀, f⁗(0) = (−f′f″ − f f‴)|₀,
/// f⁽⁵⁾(0) = (−f″² − 2f′f‴ − f f⁗)|₀ = −f″(0)².
#[derive(Debug, Clone, Copy)]
pub struct WallChecks {
    pub fppp0: f64,
    pub f4_0: f64,
    pub f5_0: f64,
    /// f⁽⁵⁾(0) + f″(0)², zero up to roundoff.
    pub f5_identity: f64,
}

pub fn taylor_wall_checks(profile: &BlasiusProfile) -> WallChecks {
    let f0 = 0.0;
    let fp0 = 0.0;
    let fpp0 = profile.fpp0;
    let fppp0 = -f0 * fpp0 + 0.0; // + 0.0 normalizes the sign of zero
    let f4_0 = -fp0 * fpp0 - f0 * fppp0 + 0.0;
    let f5_0 = -fpp0 * fpp0 - 2.0 * fp0 * fppp0 - f0 * f4_0;
    WallChecks {
        fppp0,
        f4_0,
        f5_0,
        f5_identity: f5_0 + fpp0 * fpp0,
    }
}

/// One audit sample.
#[derive(Debug, Clone, Copy)]
pub struct AuditRow {
    pub eta: f64,
    pub omega: f64,
    pub domega: f64,
    /// −η·f‴ (nonnegative since f‴ ≤ 0)
    pub neg_eta_fppp: f64,
}

#[derive(Debug, Clone)]
pub struct PositivityReport {
    pub rows: Vec<AuditRow>,
    pub min_omega: f64,
    pub min_domega: f64,
    pub min_neg_eta_fppp: f64,
    /// max over sampled (x, η) of |2(x+x₀)Ω − ω·f″|
    pub identity_residual_max: f64,
    /// max over η of |(x+x₀)Ω| spread across the sampled x values
    pub x_invariance_max: f64,
    pub wall: WallChecks,
    pub tol: f64,
}

impl PositivityReport {
    pub fn passed(&self) -> bool {
        self.min_omega >= -self.tol
            && self.min_domega >= -self.tol
            && self.min_neg_eta_fppp >= -self.tol
            && self.identity_residual_max <= self.tol
            && self.wall.fppp0 == 0.0
            && self.wall.f4_0 == 0.0
            && self.wall.f5_identity.abs() <= 1e-10
    }
}

/// Audit grid: uniform in η on [0, 5] at `fine_step`, then geometric up to
/// eta_max — dense where ω is smallest.
pub fn audit_grid(eta_max: f64, fine_step: f64) -> Vec<f64> {
    let mut g = Vec::new();
    let n = (5.0 / fine_step).round() as usize;
    for i in 0..=n {
        g.push(i as f64 * fine_step);
    }
    let mut eta = 5.0;
    while eta < eta_max {
        eta = (eta * 1.02).min(eta_max);
        g.push(eta);
    }
    g
}

/// Run the full audit at positivity tolerance `tol` (float-noise budget,
/// default 1e-8) over x ∈ {1, 10, 100}.
pub fn audit(profile: &BlasiusProfile, tol: f64) -> Result<PositivityReport, BlasiusError> {
    let grid = audit_grid(profile.eta_max, 1e-3);
    let mut rows = Vec::with_capacity(grid.len());
    let mut min_omega = f64::INFINITY;
    let mut min_domega = f64::INFINITY;
    let mut min_neg = f64::INFINITY;
    let mut ident: f64 = 0.0;
    let xs = [1.0, 10.0, 100.0];
    let mut profiles_x: Vec<Vec<f64>> = vec![Vec::new(); xs.len()];
    for &eta in &grid {
        let v = profile.eval(eta)?;
        let om = 2.0 * v.f - eta * v.fp;
        let dom = v.fp - eta * v.fpp;
        let neg = -eta * v.fppp;
        min_omega = min_omega.min(om);
        min_domega = min_domega.min(dom);
        min_neg = min_neg.min(neg);
        rows.push(AuditRow {
            eta,
            omega: om,
            domega: dom,
            neg_eta_fppp: neg,
        });
        for (k, &x) in xs.iter().enumerate() {
            let y = eta * (x + profile.x0).sqrt();
            let omp = omega_physical(profile, x, y)?;
            ident = ident.max((2.0 * (x + profile.x0) * omp - om * v.fpp).abs());
            profiles_x[k].push((x + profile.x0) * omp);
        }
    }
    let mut xinv: f64 = 0.0;
    for i in 0..grid.len() {
        for k in 1..xs.len() {
            xinv = xinv.max((profiles_x[k][i] - profiles_x[0][i]).abs());
        }
    }
    Ok(PositivityReport {
        rows,
        min_omega,
        min_domega,
        min_neg_eta_fppp: min_neg,
        identity_residual_max: ident,
        x_invariance_max: xinv,
        wall: taylor_wall_checks(profile),
        tol,
    })
}
