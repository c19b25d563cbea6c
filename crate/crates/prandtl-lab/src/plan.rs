//! Line-oriented `key = value` experiment plans: parsing with line-numbered
//! diagnostics, validated defaults, canonical echo, and content-hash run ids.

use crate::decay::{DataKind, InitialDataSpec};
use crate::march::{MarchConfig, RunSpec};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("duplicate key `{key}` (lines {first} and {second})")]
    DuplicateKey {
        key: String,
        first: usize,
        second: usize,
    },
    #[error("line {line}: key `{key}`: {msg}")]
    Value {
        line: usize,
        key: String,
        msg: String,
    },
}

pub const PLAN_KEYS: [&str; 14] = [
    "x_start",
    "x_end",
    "n_psi",
    "xi_cover",
    "theta",
    "dx0",
    "dx_growth",
    "picard_tol",
    "output_per_decade",
    "initial_data.kind",
    "initial_data.eps",
    "initial_data.center",
    "initial_data.width",
    "seed",
];

/// A fully validated experiment plan; defaults fill any key the file omits.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub x_start: f64,
    pub x_end: f64,
    pub n_psi: usize,
    pub xi_cover: f64,
    pub theta: f64,
    pub dx0: f64,
    pub dx_growth: f64,
    pub picard_tol: f64,
    pub output_per_decade: usize,
    pub initial_kind: DataKind,
    pub initial_eps: f64,
    pub initial_center: f64,
    pub initial_width: f64,
    pub seed: u64,
}

impl Default for Plan {
    /// The reference desk-scale experiment: free-stream bump marched over
    /// four decades, wall contact beyond the fit window.
    fn default() -> Self {
        Plan {
            x_start: 1.0,
            x_end: 1.2e4,
            n_psi: 2400,
            xi_cover: 8.0,
            theta: 0.5,
            dx0: 1e-3,
            dx_growth: 1.002,
            picard_tol: 1e-12,
            output_per_decade: 24,
            initial_kind: DataKind::Bump,
            initial_eps: 0.05,
            initial_center: 212.0,
            initial_width: 14.0,
            seed: 0,
        }
    }
}

impl Plan {
    pub fn parse(text: &str) -> Result<Plan, PlanError> {
        let mut plan = Plan::default();
        let mut seen: Vec<(String, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            };
            if content.trim().is_empty() {
                continue;
            }
            let mut parts = content.splitn(2, '=');
            let key = parts.next().unwrap().trim().to_string();
            let value = match parts.next() {
                Some(v) => v.trim().to_string(),
                None => {
                    return Err(PlanError::Syntax {
                        line,
                        text: content.trim().to_string(),
                    })
                }
            };
            if key.is_empty() || value.is_empty() {
                return Err(PlanError::Syntax {
                    line,
                    text: content.trim().to_string(),
                });
            }
            if !PLAN_KEYS.contains(&key.as_str()) {
                return Err(PlanError::UnknownKey { line, key });
            }
            if let Some((_, first)) = seen.iter().find(|(k, _)| *k == key) {
                return Err(PlanError::DuplicateKey {
                    key,
                    first: *first,
                    second: line,
                });
            }
            seen.push((key.clone(), line));
            plan.set(&key, &value, line)?;
        }
        plan.validate(&seen)?;
        Ok(plan)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), PlanError> {
        let bad = |msg: String| PlanError::Value {
            line,
            key: key.to_string(),
            msg,
        };
        let as_f64 = |v: &str| -> Result<f64, PlanError> {
            v.parse::<f64>()
                .map_err(|_| bad(format!("`{v}` is not a number")))
                .and_then(|x| {
                    if x.is_finite() {
                        Ok(x)
                    } else {
                        Err(bad(format!("`{v}` is not finite")))
                    }
                })
        };
        let as_usize = |v: &str| -> Result<usize, PlanError> {
            v.parse::<usize>()
                .map_err(|_| bad(format!("`{v}` is not a nonnegative integer")))
        };
        match key {
            "x_start" => {
                let v = as_f64(value)?;
                if v <= 0.0 {
                    return Err(bad("x_start must be > 0".into()));
                }
                self.x_start = v;
            }
            "x_end" => {
                let v = as_f64(value)?;
                if v <= 0.0 {
                    return Err(bad("x_end must be > 0".into()));
                }
                self.x_end = v;
            }
            "n_psi" => {
                let v = as_usize(value)?;
                if !(64..=1_000_000).contains(&v) {
                    return Err(bad("n_psi must be in [64, 1000000]".into()));
                }
                self.n_psi = v;
            }
            "xi_cover" => {
                let v = as_f64(value)?;
                if v < 8.0 {
                    return Err(bad("xi_cover must be >= 8 (far-field coverage)".into()));
                }
                self.xi_cover = v;
            }
            "theta" => {
                let v = as_f64(value)?;
                if !(0.5..=1.0).contains(&v) {
                    return Err(bad(format!(
                        "theta = {v} violates the stability bound theta in [0.5, 1]"
                    )));
                }
                self.theta = v;
            }
            "dx0" => {
                let v = as_f64(value)?;
                if v <= 0.0 {
                    return Err(bad("dx0 must be > 0".into()));
                }
                self.dx0 = v;
            }
            "dx_growth" => {
                let v = as_f64(value)?;
                if !(1.0..2.0).contains(&v) {
                    return Err(bad("dx_growth must be in [1, 2)".into()));
                }
                self.dx_growth = v;
            }
            "picard_tol" => {
                let v = as_f64(value)?;
                if v <= 0.0 || v > 1e-6 {
                    return Err(bad("picard_tol must be in (0, 1e-6]".into()));
                }
                self.picard_tol = v;
            }
            "output_per_decade" => {
                let v = as_usize(value)?;
                if !(4..=1000).contains(&v) {
                    return Err(bad("output_per_decade must be in [4, 1000]".into()));
                }
                self.output_per_decade = v;
            }
            "initial_data.kind" => {
                self.initial_kind = DataKind::parse(value).ok_or_else(|| {
                    bad(format!(
                        "`{value}` is not one of blasius | bump | heat-calibration"
                    ))
                })?;
            }
            "initial_data.eps" => {
                let v = as_f64(value)?;
                if !(0.0..=0.1).contains(&v) {
                    return Err(bad("eps must be in [0, 0.1]".into()));
                }
                self.initial_eps = v;
            }
            "initial_data.center" => {
                let v = as_f64(value)?;
                if v <= 0.0 {
                    return Err(bad("center must be > 0".into()));
                }
                self.initial_center = v;
            }
            "initial_data.width" => {
                let v = as_f64(value)?;
                if v <= 0.0 {
                    return Err(bad("width must be > 0".into()));
                }
                self.initial_width = v;
            }
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| bad(format!("`{value}` is not a u64")))?;
            }
            _ => unreachable!("key membership already checked"),
        }
        Ok(())
    }

    fn validate(&self, seen: &[(String, usize)]) -> Result<(), PlanError> {
        let line_of = |key: &str| seen.iter().find(|(k, _)| k == key).map_or(0, |(_, l)| *l);
        if self.x_end <= self.x_start {
            return Err(PlanError::Value {
                line: line_of("x_end"),
                key: "x_end".into(),
                msg: format!(
                    "x_end = {} must exceed x_start = {}",
                    self.x_end, self.x_start
                ),
            });
        }
        if self.initial_kind == DataKind::Bump
            && self.initial_center - self.initial_width < 0.05 * self.initial_center
        {
            return Err(PlanError::Value {
                line: line_of("initial_data.width"),
                key: "initial_data.width".into(),
                msg: format!(
                    "bump support reaches the wall region xi <= 0.05*center (center {}, width {})",
                    self.initial_center, self.initial_width
                ),
            });
        }
        Ok(())
    }

    /// Canonical echo: every key, sorted, with the effective value. The same
    /// plan always echoes byte-identically, independent of key order in the
    /// source file.
    pub fn canonical(&self) -> String {
        let mut lines = vec![
            format!("dx0 = {}", self.dx0),
            format!("dx_growth = {}", self.dx_growth),
            format!("initial_data.center = {}", self.initial_center),
            format!("initial_data.eps = {}", self.initial_eps),
            format!("initial_data.kind = {}", self.initial_kind.name()),
            format!("initial_data.width = {}", self.initial_width),
            format!("n_psi = {}", self.n_psi),
            format!("output_per_decade = {}", self.output_per_decade),
            format!("picard_tol = {}", self.picard_tol),
            format!("seed = {}", self.seed),
            format!("theta = {}", self.theta),
            format!("x_end = {}", self.x_end),
            format!("x_start = {}", self.x_start),
            format!("xi_cover = {}", self.xi_cover),
        ];
        lines.sort();
        lines.join("\n") + "\n"
    }

    /// Content-hash run identifier (12 hex chars of SHA-256 of the canonical
    /// echo); stable under reordering of the plan file.
    pub fn run_id(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        let digest = hasher.finalize();
        digest[..6].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn march_spec(&self) -> RunSpec {
        RunSpec {
            x_start: self.x_start,
            x_end: self.x_end,
            n_psi: self.n_psi,
            xi_cover: self.xi_cover,
            output_per_decade: self.output_per_decade,
            march: MarchConfig {
                theta: self.theta,
                dx0: self.dx0,
                dx_growth: self.dx_growth,
                picard_tol: self.picard_tol,
                picard_max: 14,
            },
        }
    }

    pub fn initial_spec(&self) -> InitialDataSpec {
        InitialDataSpec {
            kind: self.initial_kind,
            eps: self.initial_eps,
            center: self.initial_center,
            width: self.initial_width,
            moment_free: false,
        }
    }
}
