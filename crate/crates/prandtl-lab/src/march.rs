//! Downstream march of the Prandtl system in von Mises variables (x, ψ),
//! where w = u² solves w_x = √w · w_ψψ with w(x, 0) = 0, w(x, ψ_max) = 1.
//!
//! The scheme is θ-implicit with Picard linearization of the √w coefficient:
//! each pass freezes u* = √(½(w + w⁺)) and solves one tridiagonal system.
//! θ ≥ ½ keeps the frozen-coefficient scheme unconditionally stable; θ = ½ is
//! second order in ψ. The wall degeneracy u ~ ψ^{1/2} is handled by the
//! square-root-clustered grid (u is linear in the stretched index), with no
//! regularization of √w.

use crate::blasius::BlasiusProfile;
use crate::grid::{self, PsiGrid};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarchError {
    #[error("initial data incompatible: {0}")]
    Compatibility(String),
    #[error("Picard stalled at x = {x} (dx = {dx}, delta = {delta:e})")]
    PicardStall { x: f64, dx: f64, delta: f64 },
    #[error("positivity failure at x = {x}: w({psi}) = {w:e}")]
    Positivity { x: f64, psi: f64, w: f64 },
    #[error("step retries exhausted at x = {x}")]
    RetriesExhausted { x: f64 },
    #[error("bad march configuration: {0}")]
    Config(String),
}

/// Field w = u² at one downstream location.
#[derive(Debug, Clone)]
pub struct Station {
    pub x: f64,
    pub w: Vec<f64>,
}

impl Station {
    pub fn u(&self) -> Vec<f64> {
        self.w.iter().map(|&w| w.max(0.0).sqrt()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MarchConfig {
    /// Implicitness weight in [0.5, 1].
    pub theta: f64,
    /// Initial Δx; also sets the growth cap dx ≤ 2·dx0·x/x_start.
    pub dx0: f64,
    /// Geometric step growth factor per step.
    pub dx_growth: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
}

impl Default for MarchConfig {
    fn default() -> Self {
        MarchConfig {
            theta: 0.5,
            dx0: 1e-3,
            dx_growth: 1.002,
            picard_tol: 1e-12,
            picard_max: 14,
        }
    }
}

impl MarchConfig {
    pub fn validate(&self) -> Result<(), MarchError> {
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(MarchError::Config(format!(
                "theta = {} outside [0.5, 1]",
                self.theta
            )));
        }
        if self.dx0 <= 0.0 || self.dx_growth < 1.0 || self.picard_tol <= 0.0 {
            return Err(MarchError::Config("dx0, dx_growth, picard_tol".into()));
        }
        Ok(())
    }
}

/// Everything that fully determines one march.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub x_start: f64,
    pub x_end: f64,
    pub n_psi: usize,
    /// Far-field coverage: psi_max = xi_cover · √(x_end + 1).
    pub xi_cover: f64,
    pub output_per_decade: usize,
    pub march: MarchConfig,
}

#[derive(Debug, Clone)]
pub struct History {
    pub grid: PsiGrid,
    pub stations: Vec<Station>,
}

impl History {
    pub fn xs(&self) -> Vec<f64> {
        self.stations.iter().map(|s| s.x).collect()
    }
}

/// Sample initial data onto the grid and enforce the compatibility conditions
/// w(0) = 0, w(ψ_max) = 1 ± 1e-8, w ∈ [0, 1.3].
pub fn init_station<F: Fn(f64) -> f64>(
    grid: &PsiGrid,
    initial_data: F,
    x_start: f64,
) -> Result<Station, MarchError> {
    let w: Vec<f64> = grid.nodes.iter().map(|&p| initial_data(p)).collect();
    if w[0] != 0.0 {
        return Err(MarchError::Compatibility(format!(
            "wall no-slip violated: w(0) = {}",
            w[0]
        )));
    }
    let far = *w.last().unwrap();
    if (far - 1.0).abs() > 1e-8 {
        return Err(MarchError::Compatibility(format!(
            "far field: |w(psi_max) - 1| = {:e}",
            (far - 1.0).abs()
        )));
    }
    for (i, &v) in w.iter().enumerate() {
        if !(v.is_finite() && (-1e-12..=1.3).contains(&v)) {
            return Err(MarchError::Compatibility(format!(
                "w({}) = {} outside [0, 1.3]",
                grid.nodes[i], v
            )));
        }
    }
    Ok(Station { x: x_start, w })
}

/// One-step workspace; reusable across steps.
pub struct Marcher {
    d2: (Vec<f64>, Vec<f64>, Vec<f64>),
    lo: Vec<f64>,
    di: Vec<f64>,
    hi: Vec<f64>,
    rhs: Vec<f64>,
    wp: Vec<f64>,
    cfg: MarchConfig,
}

impl Marcher {
    pub fn new(grid: &PsiGrid, cfg: MarchConfig) -> Result<Self, MarchError> {
        cfg.validate()?;
        let n = grid.len();
        Ok(Marcher {
            d2: grid.d2_coeffs(),
            lo: vec![0.0; n],
            di: vec![0.0; n],
            hi: vec![0.0; n],
            rhs: vec![0.0; n],
            wp: vec![0.0; n],
            cfg,
        })
    }

    /// Advance `station` by `dx` in place. Returns the Picard iteration count.
    pub fn step(
        &mut self,
        grid: &PsiGrid,
        station: &mut Station,
        dx: f64,
    ) -> Result<usize, MarchError> {
        let n = grid.len();
        let w = &station.w;
        let th = self.cfg.theta;
        let (d2lo, d2di, d2hi) = (&self.d2.0, &self.d2.1, &self.d2.2);
        self.wp.copy_from_slice(w);
        let mut iters = 0;
        let mut delta = f64::INFINITY;
        for it in 0..self.cfg.picard_max {
            iters = it + 1;
            self.lo[0] = 0.0;
            self.di[0] = 1.0;
            self.hi[0] = 0.0;
            self.rhs[0] = 0.0;
            self.lo[n - 1] = 0.0;
            self.di[n - 1] = 1.0;
            self.hi[n - 1] = 0.0;
            self.rhs[n - 1] = 1.0;
            for i in 1..n - 1 {
                let ustar = (0.5 * (w[i] + self.wp[i])).max(0.0).sqrt();
                let expl = d2lo[i - 1] * w[i - 1] + d2di[i - 1] * w[i] + d2hi[i - 1] * w[i + 1];
                self.lo[i] = -th * ustar * d2lo[i - 1];
                self.di[i] = 1.0 / dx - th * ustar * d2di[i - 1];
                self.hi[i] = -th * ustar * d2hi[i - 1];
                self.rhs[i] = w[i] / dx + (1.0 - th) * ustar * expl;
            }
            let new = grid::solve_tridiagonal(&self.lo, &self.di, &self.hi, &self.rhs);
            delta = new
                .iter()
                .zip(self.wp.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            self.wp.copy_from_slice(&new);
            if delta <= self.cfg.picard_tol {
                break;
            }
        }
        if delta > self.cfg.picard_tol {
            return Err(MarchError::PicardStall {
                x: station.x,
                dx,
                delta,
            });
        }
        for i in 1..n - 1 {
            if self.wp[i] < -1e-10 {
                return Err(MarchError::Positivity {
                    x: station.x + dx,
                    psi: grid.nodes[i],
                    w: self.wp[i],
                });
            }
        }
        station.w.copy_from_slice(&self.wp);
        station.x += dx;
        Ok(iters)
    }
}

/// Geometric output schedule x_start·10^(k/opd), ending exactly at x_end.
pub fn output_schedule(x_start: f64, x_end: f64, opd: usize) -> Vec<f64> {
    let mut sched = Vec::new();
    let mut k = 1u32;
    loop {
        let x = x_start * 10f64.powf(k as f64 / opd as f64);
        if x >= x_end * (1.0 - 1e-12) {
            break;
        }
        sched.push(x);
        k += 1;
    }
    sched.push(x_end);
    sched
}

/// March from x_start to x_end, recording stations on the geometric output
/// schedule. dx grows geometrically, capped at 2·dx0·x/x_start, and is
/// clamped to land exactly on each scheduled x. On a Picard stall the step is
/// retried with halved dx, at most 5 times. Deterministic.
pub fn run<F: Fn(f64) -> f64>(spec: &RunSpec, initial_data: F) -> Result<History, MarchError> {
    if spec.x_end <= spec.x_start || spec.x_start <= 0.0 {
        return Err(MarchError::Config("need 0 < x_start < x_end".into()));
    }
    if spec.xi_cover < 8.0 {
        return Err(MarchError::Config(format!(
            "xi_cover = {} < 8 leaves the far field uncovered",
            spec.xi_cover
        )));
    }
    let psi_max = spec.xi_cover * (spec.x_end + 1.0).sqrt();
    let grid = PsiGrid::new(spec.n_psi, psi_max);
    let mut station = init_station(&grid, initial_data, spec.x_start)?;
    let mut marcher = Marcher::new(&grid, spec.march)?;
    let sched = output_schedule(spec.x_start, spec.x_end, spec.output_per_decade);
    let mut stations = vec![station.clone()];
    let mut dx_policy = spec.march.dx0;
    let mut k = 0usize;
    while k < sched.len() {
        let cap = 2.0 * spec.march.dx0 * station.x / spec.x_start;
        dx_policy = (dx_policy * spec.march.dx_growth).min(cap);
        let mut dx = dx_policy.min(sched[k] - station.x);
        let mut tries = 0;
        loop {
            let before = station.x;
            match marcher.step(&grid, &mut station, dx) {
                Ok(_) => break,
                Err(MarchError::PicardStall { .. }) if tries < 5 => {
                    tries += 1;
                    dx *= 0.5;
                    station.x = before;
                }
                Err(e) => return Err(e),
            }
        }
        if station.x >= sched[k] * (1.0 - 1e-12) {
            station.x = sched[k];
            stations.push(station.clone());
            k += 1;
        }
    }
    Ok(History { grid, stations })
}

/// Pointwise residual of φ_x − u·φ_ψψ + A·φ on the interior (3 cells trimmed
/// at each end), returned as (‖residual‖_{L²_ψ}, ‖φ‖_{L²_ψ}) at station
/// `index` using its two neighbors for the x-stencil.
pub fn residual_nonlin_eq(
    history: &History,
    profile: &BlasiusProfile,
    index: usize,
) -> Result<(f64, f64), MarchError> {
    if index == 0 || index + 1 >= history.stations.len() {
        return Err(MarchError::Config(
            "residual stencil needs interior station index".into(),
        ));
    }
    let grid = &history.grid;
    let n = grid.len();
    let (sm, s0, sp) = (
        &history.stations[index - 1],
        &history.stations[index],
        &history.stations[index + 1],
    );
    let (c0, c1, c2) = grid::ddx_coeffs(sm.x, s0.x, sp.x);
    let phi = |s: &Station| -> Vec<f64> {
        grid.nodes
            .iter()
            .zip(s.w.iter())
            .map(|(&p, &w)| w - profile.w_stream(s.x, p).unwrap_or(f64::NAN))
            .collect()
    };
    let (fm, f0, fp) = (phi(sm), phi(s0), phi(sp));
    let d2 = grid::second_diff(grid, &f0);
    let wq = grid.trapezoid_weights();
    let mut r2 = 0.0;
    let mut p2 = 0.0;
    for i in 3..n - 3 {
        let u = s0.w[i].max(0.0).sqrt();
        let base = profile
            .stream_base(s0.x, grid.nodes[i])
            .map_err(|e| MarchError::Config(e.to_string()))?;
        let a = -2.0 * base.u_yy / (base.u * (base.u + u));
        let phix = c0 * fm[i] + c1 * f0[i] + c2 * fp[i];
        let r = phix - u * d2[i] + a * f0[i];
        r2 += r * r * wq[i];
        p2 += f0[i] * f0[i] * wq[i];
    }
    Ok((r2.sqrt(), p2.sqrt()))
}

/// Displacement-thickness monitor ∫(1 − u) dy = ∫(1 − u)/u dψ per station,
/// with the wall cell closed by the u ∝ √ψ model. Jumps exceeding 10× the
/// local trend flag Picard misconvergence.
pub fn displacement_series(history: &History) -> Vec<f64> {
    let psi = &history.grid.nodes;
    history
        .stations
        .iter()
        .map(|s| {
            let mut acc = 0.0;
            let integ =
                |i: usize| -> f64 { (1.0 - s.w[i].max(0.0).sqrt()) / s.w[i].max(0.0).sqrt() };
            for i in 1..psi.len() - 1 {
                acc += 0.5 * (integ(i) + integ(i + 1)) * (psi[i + 1] - psi[i]);
            }
            // wall cell: (1 - u)/u ~ psi^{-1/2}: integral = 2 psi_1 * value(psi_1)
            acc += 2.0 * psi[1] * integ(1);
            acc
        })
        .collect()
}

/// Check the displacement series for step-to-step jumps beyond 10× the local
/// trend (median of neighboring increments), with an absolute floor for
/// noise-level series.
pub fn displacement_smooth(series: &[f64]) -> bool {
    if series.len() < 4 {
        return true;
    }
    let jumps: Vec<f64> = series.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut sorted = jumps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2].max(1e-12);
    jumps.iter().all(|&j| j <= 10.0 * median + 1e-12)
}
