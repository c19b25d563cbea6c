//! Blasius profile: shooting solver for f‴ + f f″ = 0 with f(0) = f′(0) = 0,
//! f′(∞) = 1, and evaluation of the self-similar base flow in physical and
//! stream-function coordinates.
//!
//! f(0) = 0 is imposed as the third condition; it is forced by boundedness of
//! v̄ at the wall. In this normalization f″(0) ≈ 0.46960 and the displacement
//! constant β = lim (η − f) ≈ 1.21678.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BlasiusError {
    /// The RK4 trajectory left the representable range; the shooting guess is
    /// far outside the bracket.
    #[error("divergent shooting guess fpp0 = {0}")]
    DivergentGuess(f64),
    #[error("no sign change of f'(eta_max) - 1 on the shooting bracket [{lo}, {hi}]")]
    BracketNotFound { lo: f64, hi: f64 },
    #[error("profile invariant violated: {0}")]
    InvariantViolated(String),
    #[error("eta out of domain: {0}")]
    DomainError(f64),
    #[error("bad shooting configuration: {0}")]
    Config(String),
}

/// Shooting configuration. `eta_max = 20` keeps the truncation error below
/// 1e-12 (f″ decays super-exponentially).
#[derive(Debug, Clone, Copy)]
pub struct ShootConfig {
    pub eta_max: f64,
    pub tol: f64,
    pub h: f64,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            eta_max: 20.0,
            tol: 1e-10,
            h: 1e-3,
        }
    }
}

/// RK4 trajectory of the first-order system (f, f′, f″)′ = (f′, f″, −f f″)
/// on a uniform η-grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub eta: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
}

fn rhs(y: [f64; 3]) -> [f64; 3] {
    [y[1], y[2], -y[0] * y[2]]
}

/// Classical 4th-order integration from (0, 0, `fpp0_guess`).
pub fn integrate_ivp(fpp0_guess: f64, eta_max: f64, h: f64) -> Result<Trajectory, BlasiusError> {
    if fpp0_guess.is_nan() || fpp0_guess < 0.0 || h <= 0.0 || eta_max < 10.0 {
        return Err(BlasiusError::Config(format!(
            "need fpp0_guess >= 0, h > 0, eta_max >= 10 (got {fpp0_guess}, {h}, {eta_max})"
        )));
    }
    let n = (eta_max / h).round() as usize;
    let mut eta = Vec::with_capacity(n + 1);
    let mut f = Vec::with_capacity(n + 1);
    let mut fp = Vec::with_capacity(n + 1);
    let mut fpp = Vec::with_capacity(n + 1);
    let mut y = [0.0, 0.0, fpp0_guess];
    eta.push(0.0);
    f.push(y[0]);
    fp.push(y[1]);
    fpp.push(y[2]);
    for i in 0..n {
        let k1 = rhs(y);
        let y2 = [
            y[0] + 0.5 * h * k1[0],
            y[1] + 0.5 * h * k1[1],
            y[2] + 0.5 * h * k1[2],
        ];
        let k2 = rhs(y2);
        let y3 = [
            y[0] + 0.5 * h * k2[0],
            y[1] + 0.5 * h * k2[1],
            y[2] + 0.5 * h * k2[2],
        ];
        let k3 = rhs(y3);
        let y4 = [y[0] + h * k3[0], y[1] + h * k3[1], y[2] + h * k3[2]];
        let k4 = rhs(y4);
        for j in 0..3 {
            y[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(BlasiusError::DivergentGuess(fpp0_guess));
        }
        eta.push((i + 1) as f64 * h);
        f.push(y[0]);
        fp.push(y[1]);
        fpp.push(y[2]);
    }
    Ok(Trajectory { eta, f, fp, fpp })
}

/// Bisection on the monotone map fpp0 ↦ f′(eta_max) over the bracket
/// [0.1, 1.0] (safe: the map is strictly increasing). Deterministic.
pub fn shoot(cfg: ShootConfig) -> Result<f64, BlasiusError> {
    if cfg.tol < f64::EPSILON * 100.0 {
        return Err(BlasiusError::Config(format!(
            "tol {} below 100*machine-epsilon",
            cfg.tol
        )));
    }
    let (mut lo, mut hi) = (0.1, 1.0);
    let end = |g: f64| -> Result<f64, BlasiusError> {
        Ok(integrate_ivp(g, cfg.eta_max, cfg.h)?.fp.last().unwrap() - 1.0)
    };
    let glo = end(lo)?;
    let ghi = end(hi)?;
    if glo.signum() == ghi.signum() {
        return Err(BlasiusError::BracketNotFound { lo, hi });
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let g = end(mid)?;
        if g.abs() <= cfg.tol {
            return Ok(mid);
        }
        if g.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid {
            break;
        }
    }
    Ok(mid)
}

/// Evaluated profile values at one η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FVals {
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
    /// Always the ODE relation −f·f″, never a finite difference.
    pub fppp: f64,
}

/// Base flow at a physical point, in the self-similar display form
/// η = y/√(x+x₀): ū = f′(η), v̄ = (ηf′−f)/√(x+x₀), ū_y = f″/√(x+x₀),
/// ū_yy = f‴/(x+x₀), ū_x = −½ηf″/(x+x₀).
#[derive(Debug, Clone, Copy)]
pub struct BaseFlow {
    pub u: f64,
    pub v: f64,
    pub u_y: f64,
    pub u_yy: f64,
    pub u_x: f64,
}

/// Base-flow data at (x, ψ) in the stream-function parametrization that is an
/// exact solution of ∂ₓ(u²) = u ∂_ψψ(u²), namely f(η) = ψ/√(2(x+x₀)).
/// All x-derivatives here are at fixed ψ.
#[derive(Debug, Clone, Copy)]
pub struct StreamBase {
    pub eta: f64,
    /// ū(x, ψ)
    pub u: f64,
    /// w̄ = ū²
    pub w: f64,
    /// ū_yy = f‴ / (2(x+x₀))
    pub u_yy: f64,
    /// ∂ₓū at fixed ψ = −f f″ / (2(x+x₀) f′); zero at the wall by convention
    pub u_x_psi: f64,
}

/// Tabulated Blasius profile. Immutable after construction; safe to share
/// across threads.
#[derive(Debug, Clone)]
pub struct BlasiusProfile {
    eta_grid: Vec<f64>,
    f: Vec<f64>,
    fp: Vec<f64>,
    fpp: Vec<f64>,
    h: f64,
    pub fpp0: f64,
    pub beta: f64,
    pub eta_max: f64,
    pub x0: f64,
}

/// Build the profile: shoot, integrate once more at the profile step, check
/// every invariant. Construction failures name the violated invariant.
pub fn build_profile(cfg: ShootConfig) -> Result<BlasiusProfile, BlasiusError> {
    let fpp0 = shoot(cfg)?;
    let tr = integrate_ivp(fpp0, cfg.eta_max, cfg.h)?;
    let beta = cfg.eta_max - tr.f.last().unwrap();
    let p = BlasiusProfile {
        eta_grid: tr.eta,
        f: tr.f,
        fp: tr.fp,
        fpp: tr.fpp,
        h: cfg.h,
        fpp0,
        beta,
        eta_max: cfg.eta_max,
        x0: 1.0,
    };
    p.check_invariants(cfg.tol)?;
    Ok(p)
}

impl BlasiusProfile {
    fn check_invariants(&self, tol: f64) -> Result<(), BlasiusError> {
        let err = |m: String| Err(BlasiusError::InvariantViolated(m));
        if self.f[0] != 0.0 || self.fp[0] != 0.0 {
            return err("f(0) = f'(0) = 0".into());
        }
        let fp_end = *self.fp.last().unwrap();
        if (fp_end - 1.0).abs() > tol {
            return err(format!(
                "|f'(eta_max) - 1| = {:e} > tol",
                (fp_end - 1.0).abs()
            ));
        }
        // f' approaches 1 only to within the shooting tolerance
        let slack = tol.max(1e-12);
        for i in 0..self.fp.len() {
            if !(-slack..=1.0 + slack).contains(&self.fp[i]) {
                return err(format!("f' out of [0,1] at eta = {}", self.eta_grid[i]));
            }
            if i > 0 {
                if self.fp[i] < self.fp[i - 1] - slack {
                    return err(format!("f' decreasing at eta = {}", self.eta_grid[i]));
                }
                if self.fpp[i] > self.fpp[i - 1] + slack {
                    return err(format!("f'' increasing at eta = {}", self.eta_grid[i]));
                }
                let d = (self.eta_grid[i] - self.f[i]) - (self.eta_grid[i - 1] - self.f[i - 1]);
                if d < -slack {
                    return err(format!("eta - f decreasing at eta = {}", self.eta_grid[i]));
                }
            }
            if self.fpp[i] <= 0.0 {
                return err(format!("f'' <= 0 at eta = {}", self.eta_grid[i]));
            }
        }
        let tail = self.eta_max - self.f.last().unwrap();
        if (tail - self.beta).abs() > tol.max(1e-12) {
            return err("displacement limit eta_max - f(eta_max) != beta".into());
        }
        Ok(())
    }

    /// Monotone cubic Hermite on one interval, with a Fritsch–Carlson-style
    /// slope limiter. `v` are node values, `d` node derivatives.
    fn hermite(&self, v: &[f64], d: &[f64], eta: f64) -> f64 {
        let i = ((eta / self.h) as usize).min(v.len() - 2);
        let e0 = self.eta_grid[i];
        let t = (eta - e0) / self.h;
        let (v0, v1) = (v[i], v[i + 1]);
        let sec = (v1 - v0) / self.h;
        let (mut d0, mut d1) = (d[i], d[i + 1]);
        // limiter only acts when node slopes overshoot the secant badly;
        // on this data it is a no-op except at roundoff level
        if sec != 0.0 {
            let (a, b) = (d0 / sec, d1 / sec);
            if a < 0.0 {
                d0 = 0.0;
            } else if a > 3.0 {
                d0 = 3.0 * sec;
            }
            if b < 0.0 {
                d1 = 0.0;
            } else if b > 3.0 {
                d1 = 3.0 * sec;
            }
        }
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        h00 * v0 + h10 * self.h * d0 + h01 * v1 + h11 * self.h * d1
    }

    /// (f, f′, f″, f‴) at η ≥ 0. Beyond eta_max the far-field closure
    /// f = η − β, f′ = 1, f″ = f‴ = 0 keeps ū ≡ 1 and ū_y ≡ 0 exact.
    pub fn eval(&self, eta: f64) -> Result<FVals, BlasiusError> {
        if eta.is_nan() || eta < 0.0 {
            return Err(BlasiusError::DomainError(eta));
        }
        if eta >= self.eta_max {
            return Ok(FVals {
                f: eta - self.beta,
                fp: 1.0,
                fpp: 0.0,
                fppp: 0.0,
            });
        }
        let f = self.hermite(&self.f, &self.fp, eta);
        let fp = self.hermite(&self.fp, &self.fpp, eta);
        // derivative nodes for f'' are f''' = -f f'' (exact ODE relation)
        let i = ((eta / self.h) as usize).min(self.f.len() - 2);
        let d0 = -self.f[i] * self.fpp[i];
        let d1 = -self.f[i + 1] * self.fpp[i + 1];
        let t = (eta - self.eta_grid[i]) / self.h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let fpp = h00 * self.fpp[i] + h10 * self.h * d0 + h01 * self.fpp[i + 1] + h11 * self.h * d1;
        Ok(FVals {
            f,
            fp,
            fpp,
            fppp: -f * fpp,
        })
    }

    /// Profile table access (grid, f, f′, f″) for CSV dumps and audits.
    pub fn table(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        (&self.eta_grid, &self.f, &self.fp, &self.fpp)
    }

    /// Base flow in the self-similar display form (see [`BaseFlow`]).
    pub fn base_flow(&self, x: f64, y: f64) -> Result<BaseFlow, BlasiusError> {
        if x < 0.0 || y < 0.0 {
            return Err(BlasiusError::DomainError(if x < 0.0 { x } else { y }));
        }
        let sx = (x + self.x0).sqrt();
        let eta = y / sx;
        let v = self.eval(eta)?;
        Ok(BaseFlow {
            u: v.fp,
            v: (eta * v.fp - v.f) / sx,
            u_y: v.fpp / sx,
            u_yy: v.fppp / (x + self.x0),
            u_x: -0.5 * eta * v.fpp / (x + self.x0),
        })
    }

    /// ψ = √(x+x₀)·f(η), ξ = f(η): the self-similar stream coordinates of the
    /// display form (x₀ = 1).
    pub fn map_eta_xi(&self, x: f64, eta: f64) -> Result<(f64, f64), BlasiusError> {
        let v = self.eval(eta)?;
        Ok(((x + self.x0).sqrt() * v.f, v.f))
    }

    /// Monotone inverse of ξ = f(η) by bisection + Hermite evaluation; beyond
    /// the table the far-field closure gives η = ξ + β.
    pub fn eta_of_xi(&self, xi: f64) -> Result<f64, BlasiusError> {
        if xi.is_nan() || xi < 0.0 {
            return Err(BlasiusError::DomainError(xi));
        }
        if xi == 0.0 {
            return Ok(0.0);
        }
        let f_end = self.eta_max - self.beta;
        if xi >= f_end {
            return Ok(xi + self.beta);
        }
        let (mut lo, mut hi) = (0.0, self.eta_max);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid)?.f < xi {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * self.eta_max {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// η such that f(η) = ψ/√(2(x+x₀)) — the stream-function inversion under
    /// which w̄(x, ψ) = f′(η)² is an exact solution of the von Mises equation.
    pub fn eta_of_stream(&self, x: f64, psi: f64) -> Result<f64, BlasiusError> {
        self.eta_of_xi(psi / (2.0 * (x + self.x0)).sqrt())
    }

    /// w̄(x, ψ) = ū² in the stream parametrization.
    pub fn w_stream(&self, x: f64, psi: f64) -> Result<f64, BlasiusError> {
        let eta = self.eta_of_stream(x, psi)?;
        let fp = self.eval(eta)?.fp;
        Ok(fp * fp)
    }

    /// Full base-flow bundle at (x, ψ); see [`StreamBase`].
    pub fn stream_base(&self, x: f64, psi: f64) -> Result<StreamBase, BlasiusError> {
        let eta = self.eta_of_stream(x, psi)?;
        let v = self.eval(eta)?;
        let two_x = 2.0 * (x + self.x0);
        let u_x_psi = if v.fp > 0.0 {
            -v.f * v.fpp / (two_x * v.fp)
        } else {
            0.0
        };
        Ok(StreamBase {
            eta,
            u: v.fp,
            w: v.fp * v.fp,
            u_yy: v.fppp / two_x,
            u_x_psi,
        })
    }

    /// Physical-variable base flow in the exact scaling η_t = y/√(2(x+x₀)):
    /// returns (ū, v̄).
    pub fn physical_base(&self, x: f64, y: f64) -> Result<(f64, f64), BlasiusError> {
        let s = (2.0 * (x + self.x0)).sqrt();
        let eta = y / s;
        let v = self.eval(eta)?;
        Ok((v.fp, (eta * v.fp - v.f) / s))
    }
}
