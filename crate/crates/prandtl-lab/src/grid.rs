//! Nonuniform ψ-grid, difference stencils, and the tridiagonal solver shared
//! by the marchers and the ledger quadratures.

/// Stream-function grid: square-root-clustered near the wall (nodes ∝ j²),
/// blending into a uniform tail. `nodes[0] = 0`.
#[derive(Debug, Clone)]
pub struct PsiGrid {
    pub nodes: Vec<f64>,
    pub psi_max: f64,
}

/// Index fraction at which the quadratic (clustered) branch hands over to the
/// tangent-linear (uniform) tail.
const SPLIT: f64 = 0.5;

impl PsiGrid {
    /// `n` cells (`n + 1` nodes) on `[0, psi_max]`.
    pub fn new(n: usize, psi_max: f64) -> Self {
        assert!(n >= 8 && psi_max > 0.0);
        let g1 = SPLIT * SPLIT + 2.0 * SPLIT * (1.0 - SPLIT);
        let nodes = (0..=n)
            .map(|j| {
                let s = j as f64 / n as f64;
                let g = if s <= SPLIT {
                    s * s
                } else {
                    SPLIT * SPLIT + 2.0 * SPLIT * (s - SPLIT)
                };
                psi_max * g / g1
            })
            .collect();
        PsiGrid { nodes, psi_max }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Coefficients (lower, diag, upper) of the 3-point second difference at
    /// interior nodes `1..len-1`.
    pub fn d2_coeffs(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let p = &self.nodes;
        let m = p.len() - 2;
        let mut lo = vec![0.0; m];
        let mut di = vec![0.0; m];
        let mut hi = vec![0.0; m];
        for i in 1..=m {
            let hm = p[i] - p[i - 1];
            let hp = p[i + 1] - p[i];
            lo[i - 1] = 2.0 / (hm * (hm + hp));
            di[i - 1] = -2.0 / (hm * hp);
            hi[i - 1] = 2.0 / (hp * (hm + hp));
        }
        (lo, di, hi)
    }

    /// Trapezoid quadrature weights over the full grid.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let p = &self.nodes;
        let n = p.len();
        let mut w = vec![0.0; n];
        w[0] = 0.5 * (p[1] - p[0]);
        w[n - 1] = 0.5 * (p[n - 1] - p[n - 2]);
        for i in 1..n - 1 {
            w[i] = 0.5 * (p[i + 1] - p[i - 1]);
        }
        w
    }
}

/// Second difference of `v` on the grid interior (same indexing as
/// `d2_coeffs`; endpoints are the caller's business).
pub fn second_diff(grid: &PsiGrid, v: &[f64]) -> Vec<f64> {
    let (lo, di, hi) = grid.d2_coeffs();
    let mut out = vec![0.0; v.len()];
    for i in 1..v.len() - 1 {
        out[i] = lo[i - 1] * v[i - 1] + di[i - 1] * v[i] + hi[i - 1] * v[i + 1];
    }
    out
}

/// Centered nonuniform first derivative, one-sided at the ends.
pub fn first_diff(psi: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let hm = psi[i] - psi[i - 1];
        let hp = psi[i + 1] - psi[i];
        out[i] = (-hp / (hm * (hm + hp))) * v[i - 1]
            + ((hp - hm) / (hm * hp)) * v[i]
            + (hm / (hp * (hm + hp))) * v[i + 1];
    }
    out[0] = (v[1] - v[0]) / (psi[1] - psi[0]);
    out[n - 1] = (v[n - 1] - v[n - 2]) / (psi[n - 1] - psi[n - 2]);
    out
}

/// Coefficients of the 3-point first-derivative stencil at `x1` for the
/// nonuniformly spaced triple `x0 < x1 < x2`.
pub fn ddx_coeffs(x0: f64, x1: f64, x2: f64) -> (f64, f64, f64) {
    let h1 = x1 - x0;
    let h2 = x2 - x1;
    (
        -h2 / (h1 * (h1 + h2)),
        (h2 - h1) / (h1 * h2),
        h1 / (h2 * (h1 + h2)),
    )
}

/// Thomas algorithm for a tridiagonal system. `lo[0]` and `hi[n-1]` are
/// ignored. Panics on a zero pivot (the march assembles strictly diagonally
/// dominant systems).
pub fn solve_tridiagonal(lo: &[f64], di: &[f64], hi: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    assert!(n >= 2 && lo.len() == n && di.len() == n && hi.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = hi[0] / di[0];
    d[0] = rhs[0] / di[0];
    for i in 1..n {
        let den = di[i] - lo[i] * c[i - 1];
        assert!(den != 0.0, "singular tridiagonal system at row {i}");
        if i < n - 1 {
            c[i] = hi[i] / den;
        }
        d[i] = (rhs[i] - lo[i] * d[i - 1]) / den;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let xi = x[i] - c[i] * x[i + 1];
        x[i] = xi;
    }
    x
}

/// Residual max-norm of a tridiagonal system at a candidate solution.
pub fn tridiagonal_residual(lo: &[f64], di: &[f64], hi: &[f64], rhs: &[f64], x: &[f64]) -> f64 {
    let n = rhs.len();
    let mut r: f64 = 0.0;
    for i in 0..n {
        let mut ax = di[i] * x[i];
        if i > 0 {
            ax += lo[i] * x[i - 1];
        }
        if i < n - 1 {
            ax += hi[i] * x[i + 1];
        }
        r = r.max((ax - rhs[i]).abs());
    }
    r
}
