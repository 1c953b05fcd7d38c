//! Revised primal simplex specialized to the quantile regression LP in
//! standard form:
//!
//!   min  Σ_i [u·ξ⁺_i + (1−u)·ξ⁻_i] + Σ_j λ_u·w_j·(β⁺_j + β⁻_j)
//!   s.t. ξ⁺ − ξ⁻ + X(β⁺ − β⁻) = y,   all variables ≥ 0,
//!
//! with λ_u = λ√(u(1−u)) and w_j the per-column penalty weights. The
//! constraint matrix has one row per observation, so the basis is n×n
//! regardless of p. The residual splits ξ± give a trivially feasible
//! starting basis (no phase 1), and the simplex multipliers at the
//! optimum are the rank scores of the dual program.
//!
//! Columns are ordered ξ⁺ (0..n), ξ⁻ (n..2n), β⁺ (2n..2n+p), β⁻
//! (2n+p..2n+2p); all tie-breaking is by lowest index in this order, so
//! solves are deterministic. Pricing normalizes reduced costs by static
//! column norms; after 50 consecutive degenerate pivots the rule switches
//! to Bland's (lowest eligible index) until a nondegenerate pivot occurs.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;

const REFACTOR_EVERY: usize = 64;
const STALL_LIMIT: usize = 50;

pub(crate) struct Program<'a> {
    pub n: usize,
    pub p: usize,
    /// X stored column-major for fast column dots.
    pub xcols: &'a [f64],
    pub y: &'a [f64],
    /// Cost of ξ⁺ variables (= u).
    pub cost_pos: f64,
    /// Cost of ξ⁻ variables (= 1 − u).
    pub cost_neg: f64,
    /// Cost of β±_j variables (= λ_u·w_j).
    pub beta_cost: &'a [f64],
    /// Columns j allowed to enter (restriction support), or all when None.
    pub allowed: Option<&'a [bool]>,
}

pub(crate) struct Solution {
    /// Basic column index per row.
    pub basis: Vec<usize>,
    /// Values of the basic variables.
    pub x_basic: Vec<f64>,
    /// Simplex multipliers π = c_B'B⁻¹ (unnormalized rank scores).
    pub pi: Vec<f64>,
    pub iterations: usize,
    pub perturbed: bool,
}

impl Program<'_> {
    fn ncols(&self) -> usize {
        2 * self.n + 2 * self.p
    }

    fn cost(&self, col: usize) -> f64 {
        let n = self.n;
        if col < n {
            self.cost_pos
        } else if col < 2 * n {
            self.cost_neg
        } else if col < 2 * n + self.p {
            self.beta_cost[col - 2 * n]
        } else {
            self.beta_cost[col - 2 * n - self.p]
        }
    }

    fn column_allowed(&self, col: usize) -> bool {
        let n = self.n;
        if col < 2 * n {
            return true;
        }
        match self.allowed {
            None => true,
            Some(mask) => {
                let j = if col < 2 * n + self.p {
                    col - 2 * n
                } else {
                    col - 2 * n - self.p
                };
                mask[j]
            }
        }
    }

    /// Writes the dense constraint column into `out`.
    fn write_column(&self, col: usize, out: &mut [f64]) {
        let n = self.n;
        out.fill(0.0);
        if col < n {
            out[col] = 1.0;
        } else if col < 2 * n {
            out[col - n] = -1.0;
        } else if col < 2 * n + self.p {
            let j = col - 2 * n;
            out.copy_from_slice(&self.xcols[j * n..(j + 1) * n]);
        } else {
            let j = col - 2 * n - self.p;
            for (o, v) in out.iter_mut().zip(&self.xcols[j * n..(j + 1) * n]) {
                *o = -v;
            }
        }
    }
}

struct Tableau {
    n: usize,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    x_basic: Vec<f64>,
    pivots_since_refactor: usize,
}

impl Tableau {
    fn starting(prog: &Program, y: &[f64]) -> Tableau {
        let n = prog.n;
        let mut basis = Vec::with_capacity(n);
        let mut binv = vec![0.0; n * n];
        let mut x_basic = vec![0.0; n];
        let mut is_basic = vec![false; prog.ncols()];
        for i in 0..n {
            if y[i] >= 0.0 {
                basis.push(i);
                binv[i * n + i] = 1.0;
                x_basic[i] = y[i];
            } else {
                basis.push(n + i);
                binv[i * n + i] = -1.0;
                x_basic[i] = -y[i];
            }
            is_basic[basis[i]] = true;
        }
        Tableau {
            n,
            basis,
            is_basic,
            binv,
            x_basic,
            pivots_since_refactor: 0,
        }
    }

    fn multipliers(&self, prog: &Program) -> Vec<f64> {
        let n = self.n;
        let mut pi = vec![0.0; n];
        for r in 0..n {
            let c = prog.cost(self.basis[r]);
            if c != 0.0 {
                let row = &self.binv[r * n..(r + 1) * n];
                for (pi_i, b) in pi.iter_mut().zip(row) {
                    *pi_i += c * b;
                }
            }
        }
        pi
    }

    /// dir = B⁻¹·A_col.
    fn direction(&self, prog: &Program, col: usize, scratch: &mut [f64], out: &mut [f64]) {
        let n = self.n;
        if col < 2 * n {
            let (i, sign) = if col < n { (col, 1.0) } else { (col - n, -1.0) };
            for (r, o) in out.iter_mut().enumerate() {
                *o = sign * self.binv[r * n + i];
            }
            return;
        }
        prog.write_column(col, scratch);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.binv[r * n..(r + 1) * n];
            *o = row.iter().zip(scratch.iter()).map(|(a, b)| a * b).sum();
        }
    }

    fn pivot(&mut self, row: usize, col: usize, dir: &[f64], theta: f64) {
        let n = self.n;
        let dr = dir[row];
        for r in 0..n {
            if r != row && dir[r] != 0.0 {
                self.x_basic[r] -= theta * dir[r];
                if self.x_basic[r] < 0.0 && self.x_basic[r] > -1e-11 {
                    self.x_basic[r] = 0.0;
                }
            }
        }
        self.x_basic[row] = theta;

        // Eta update of B⁻¹: subtract multiples of the pivot row.
        let (before, rest) = self.binv.split_at_mut(row * n);
        let (prow, after) = rest.split_at_mut(n);
        let inv_dr = 1.0 / dr;
        for v in prow.iter_mut() {
            *v *= inv_dr;
        }
        for (r, chunk) in before.chunks_exact_mut(n).enumerate() {
            let f = dir[r];
            if f != 0.0 {
                for (v, pv) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
            }
        }
        for (off, chunk) in after.chunks_exact_mut(n).enumerate() {
            let f = dir[row + 1 + off];
            if f != 0.0 {
                for (v, pv) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
            }
        }

        self.is_basic[self.basis[row]] = false;
        self.is_basic[col] = true;
        self.basis[row] = col;
        self.pivots_since_refactor += 1;
    }

    fn refactor(&mut self, prog: &Program, y: &[f64]) -> Result<()> {
        let n = self.n;
        let mut b = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for (r, &c) in self.basis.iter().enumerate() {
            prog.write_column(c, &mut col);
            for i in 0..n {
                b[i * n + r] = col[i];
            }
        }
        self.binv = linalg::invert(&b, n).map_err(|_| Error::NumericalBreakdown {
            stage: "basis refactorization",
            detail: "basis matrix is numerically singular".into(),
        })?;
        let feas_tol = 1e-7 * (1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        for r in 0..n {
            let row = &self.binv[r * n..(r + 1) * n];
            let v: f64 = row.iter().zip(y).map(|(a, b)| a * b).sum();
            if v < -feas_tol {
                return Err(Error::NumericalBreakdown {
                    stage: "basis refactorization",
                    detail: format!("basic value {v:.3e} lost feasibility"),
                });
            }
            self.x_basic[r] = v.max(0.0);
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }
}

/// Most negative reduced cost normalized by the static column norm;
/// ties keep the lowest column index.
fn price_normalized(
    prog: &Program,
    tab: &Tableau,
    pi: &[f64],
    opt_tol: f64,
    beta_norm: &[f64],
) -> Option<usize> {
    let n = prog.n;
    let p = prog.p;
    let mut best: Option<(f64, usize)> = None;
    let mut consider = |score: f64, col: usize| match best {
        Some((b, _)) if b <= score => {}
        _ => best = Some((score, col)),
    };
    for i in 0..n {
        if !tab.is_basic[i] {
            let rc = prog.cost_pos - pi[i];
            if rc < -opt_tol {
                consider(rc, i);
            }
        }
    }
    for i in 0..n {
        if !tab.is_basic[n + i] {
            let rc = prog.cost_neg + pi[i];
            if rc < -opt_tol {
                consider(rc, n + i);
            }
        }
    }
    for j in 0..p {
        if !prog.column_allowed(2 * n + j) {
            continue;
        }
        let col = &prog.xcols[j * n..(j + 1) * n];
        let t: f64 = col.iter().zip(pi).map(|(a, b)| a * b).sum();
        let cb = prog.beta_cost[j];
        if !tab.is_basic[2 * n + j] {
            let rc = cb - t;
            if rc < -opt_tol {
                consider(rc / beta_norm[j], 2 * n + j);
            }
        }
        if !tab.is_basic[2 * n + p + j] {
            let rc = cb + t;
            if rc < -opt_tol {
                consider(rc / beta_norm[j], 2 * n + p + j);
            }
        }
    }
    best.map(|(_, col)| col)
}

/// Bland's rule: the lowest-index column with a negative reduced cost.
fn price_bland(prog: &Program, tab: &Tableau, pi: &[f64], opt_tol: f64) -> Option<usize> {
    let n = prog.n;
    let p = prog.p;
    for i in 0..n {
        if !tab.is_basic[i] && prog.cost_pos - pi[i] < -opt_tol {
            return Some(i);
        }
    }
    for i in 0..n {
        if !tab.is_basic[n + i] && prog.cost_neg + pi[i] < -opt_tol {
            return Some(n + i);
        }
    }
    let dot = |j: usize| -> f64 {
        prog.xcols[j * n..(j + 1) * n]
            .iter()
            .zip(pi)
            .map(|(a, b)| a * b)
            .sum()
    };
    for j in 0..p {
        if prog.column_allowed(2 * n + j)
            && !tab.is_basic[2 * n + j]
            && prog.beta_cost[j] - dot(j) < -opt_tol
        {
            return Some(2 * n + j);
        }
    }
    for j in 0..p {
        if prog.column_allowed(2 * n + p + j)
            && !tab.is_basic[2 * n + p + j]
            && prog.beta_cost[j] + dot(j) < -opt_tol
        {
            return Some(2 * n + p + j);
        }
    }
    None
}

/// Runs the simplex to optimality on the given right-hand side.
fn optimize(prog: &Program, y: &[f64], cap: usize) -> Result<(Tableau, usize)> {
    let n = prog.n;
    let p = prog.p;
    let mut tab = Tableau::starting(prog, y);

    let cmax = prog
        .cost_pos
        .max(prog.cost_neg)
        .max(prog.beta_cost.iter().fold(0.0f64, |m, &v| m.max(v)));
    let opt_tol = 1e-9 * (1.0 + cmax);

    // Static pricing norms: 1 for the residual splits, ‖X_j‖ for β±_j.
    let beta_norm: Vec<f64> = (0..p)
        .map(|j| {
            let col = &prog.xcols[j * n..(j + 1) * n];
            col.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300)
        })
        .collect();

    let mut scratch = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut stall = 0usize;
    let mut bland = false;
    let mut iterations = 0usize;

    loop {
        if iterations >= cap {
            return Err(Error::IterationLimit {
                limit: cap,
                perturbed: false,
            });
        }
        let pi = tab.multipliers(prog);

        let entering = if bland {
            price_bland(prog, &tab, &pi, opt_tol)
        } else {
            price_normalized(prog, &tab, &pi, opt_tol, &beta_norm)
        };
        let Some(q) = entering else {
            return Ok((tab, iterations));
        };

        tab.direction(prog, q, &mut scratch, &mut dir);
        let dmax = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let piv_tol = 1e-10 * dmax.max(1.0);

        let mut theta = f64::INFINITY;
        for r in 0..n {
            if dir[r] > piv_tol {
                let ratio = tab.x_basic[r].max(0.0) / dir[r];
                if ratio < theta {
                    theta = ratio;
                }
            }
        }
        if !theta.is_finite() {
            return Err(Error::NumericalBreakdown {
                stage: "ratio test",
                detail: format!("no blocking row for entering column {q}"),
            });
        }
        let ratio_tol = 1e-9 * (1.0 + theta);
        let mut leave: Option<usize> = None;
        for r in 0..n {
            if dir[r] > piv_tol {
                let ratio = tab.x_basic[r].max(0.0) / dir[r];
                if ratio <= theta + ratio_tol {
                    leave = Some(match leave {
                        None => r,
                        Some(cur) => {
                            if bland {
                                if tab.basis[r] < tab.basis[cur] {
                                    r
                                } else {
                                    cur
                                }
                            } else if dir[r] > dir[cur] {
                                r
                            } else {
                                cur
                            }
                        }
                    });
                }
            }
        }
        let r = leave.expect("ratio test found a finite theta");

        let degen_scale = 1e-12 * (1.0 + tab.x_basic.iter().fold(0.0f64, |m, v| m.max(*v)));
        if theta <= degen_scale {
            stall += 1;
            if stall >= STALL_LIMIT {
                bland = true;
            }
        } else {
            stall = 0;
            bland = false;
        }

        tab.pivot(r, q, &dir, theta);
        iterations += 1;
        if tab.pivots_since_refactor >= REFACTOR_EVERY {
            tab.refactor(prog, y)?;
        }
    }
}

/// Solves the program, retrying once from a deterministically perturbed
/// right-hand side if the pivot cap is hit, then re-expressing the final
/// basis on the original data.
pub(crate) fn solve(prog: &Program) -> Result<Solution> {
    let n = prog.n;
    let cap = 50 * (n + prog.p);

    let attempt = optimize(prog, prog.y, cap);
    let (mut tab, iterations, perturbed) = match attempt {
        Ok((tab, it)) => (tab, it, false),
        Err(Error::IterationLimit { .. }) => {
            let mut rng = crate::rng::stream_rng(0x51D0_5EED, 0);
            let y_pert: Vec<f64> = prog
                .y
                .iter()
                .map(|&v| v + (2.0 * rng.random::<f64>() - 1.0) * 1e-10 * (1.0 + v.abs()))
                .collect();
            match optimize(prog, &y_pert, cap) {
                Ok((tab, it)) => (tab, it, true),
                Err(Error::IterationLimit { limit, .. }) => {
                    return Err(Error::IterationLimit {
                        limit,
                        perturbed: true,
                    })
                }
                Err(e) => return Err(e),
            }
        }
        Err(e) => return Err(e),
    };

    // Final refactorization against the original right-hand side for a
    // clean basis inverse, basic values, and multipliers.
    tab.refactor(prog, prog.y)?;
    let pi = tab.multipliers(prog);
    Ok(Solution {
        basis: tab.basis,
        x_basic: tab.x_basic,
        pi,
        iterations,
        perturbed,
    })
}
