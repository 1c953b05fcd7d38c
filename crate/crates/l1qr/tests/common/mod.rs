//! Test-side oracles, independent of the solver implementation.
//!
//! The LP oracle enumerates every candidate vertex of the quantile
//! regression program directly from its structure: a vertex interpolates
//! some subset I of observations using an equal-sized subset S of
//! columns (plus the all-zero candidate), so the optimum is the best
//! objective over all (I, S) pairs with an invertible X[I, S]. A dual
//! certificate is then reconstructed from the active signs and checked
//! for feasibility and strong duality. No code is shared with the
//! production solve path; even the linear solves are local.

#![allow(dead_code)]

use l1qr::{penalized_objective, Coefficients, Dataset, QuantileIndex};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// A dual certificate for a candidate optimum: multipliers π (one per
/// observation, the unnormalized rank scores) proving optimality.
pub struct DualCertificate {
    pub pi: Vec<f64>,
    pub beta: Vec<f64>,
    /// X_j'π for every column.
    pub column_correlations: Vec<f64>,
}

/// The oracle's answer: the exact optimum over all enumerated vertices
/// and a feasible dual certificate at (one of) the optimal vertices.
pub struct OracleSolution {
    pub objective: f64,
    pub beta: Vec<f64>,
    pub certificate: DualCertificate,
}

const CERT_TOL: f64 = 1e-9;

/// Solves the ℓ1-penalized quantile regression program by brute-force
/// vertex enumeration. Feasible for n ≲ 15, p ≲ 5.
pub fn enumerate_qr_lp(d: &Dataset, u: QuantileIndex, lambda: f64) -> OracleSolution {
    let n = d.n();
    let p = d.p();
    let kmax = n.min(p);

    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    let zero = vec![0.0; p];
    candidates.push((objective_of(d, u, lambda, &zero), zero));

    for k in 1..=kmax {
        for rows in subsets(n, k) {
            for cols in subsets(p, k) {
                if let Some(beta_s) = interpolate(d, &rows, &cols) {
                    let mut beta = vec![0.0; p];
                    for (idx, &j) in cols.iter().enumerate() {
                        beta[j] = beta_s[idx];
                    }
                    candidates.push((objective_of(d, u, lambda, &beta), beta));
                }
            }
        }
    }

    let best = candidates
        .iter()
        .map(|(obj, _)| *obj)
        .fold(f64::INFINITY, f64::min);

    let mut near_optimal: Vec<&(f64, Vec<f64>)> = candidates
        .iter()
        .filter(|(obj, _)| *obj <= best + 1e-12 * (1.0 + best.abs()))
        .collect();
    near_optimal.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    for (obj, beta) in &near_optimal {
        if let Some(cert) = build_certificate(d, u, lambda, beta, *obj) {
            return OracleSolution {
                objective: best,
                beta: beta.clone(),
                certificate: cert,
            };
        }
    }
    panic!("oracle found no feasible dual certificate at any optimal vertex");
}

fn objective_of(d: &Dataset, u: QuantileIndex, lambda: f64, beta: &[f64]) -> f64 {
    penalized_objective(d, u, lambda, &Coefficients::from(beta.to_vec())).unwrap()
}

/// β on `cols` interpolating y on `rows`, or None when X[rows, cols] is
/// singular.
fn interpolate(d: &Dataset, rows: &[usize], cols: &[usize]) -> Option<Vec<f64>> {
    let k = rows.len();
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for (ri, &i) in rows.iter().enumerate() {
        for (ci, &j) in cols.iter().enumerate() {
            a[ri * k + ci] = d.x()[[i, j]];
        }
        b[ri] = d.y()[i];
    }
    gauss_solve(&mut a, &mut b, k).then_some(b)
}

/// Reconstructs the dual multipliers implied by the active set of a
/// candidate β and verifies feasibility, complementary slackness, and
/// strong duality. Returns None when this vertex admits no feasible
/// certificate (then another optimal vertex will).
fn build_certificate(
    d: &Dataset,
    u: QuantileIndex,
    lambda: f64,
    beta: &[f64],
    objective: f64,
) -> Option<DualCertificate> {
    let n = d.n();
    let p = d.p();
    let uv = u.value();
    let lam_u = lambda * u.penalty_multiplier();

    let coef = Coefficients::from(beta.to_vec());
    let resid = d.residuals(&coef);
    let support: Vec<usize> = (0..p).filter(|&j| beta[j].abs() > 1e-13).collect();
    let interp: Vec<usize> = (0..n).filter(|&i| resid[i].abs() <= 1e-10).collect();
    if support.len() > interp.len() {
        return None;
    }

    // π is pinned to u or u−1 off the interpolated set; on it, π solves
    // the active-sign equations X_j'π = sign(β_j)·λ_u·w_j for j in the
    // support. With fewer active signs than interpolated points the
    // remaining freedom is resolved by trying the box endpoints.
    let free = interp.clone();
    let k = free.len();
    let mut pinned = vec![0.0; n];
    for i in 0..n {
        if resid[i] > 1e-10 {
            pinned[i] = uv;
        } else if resid[i] < -1e-10 {
            pinned[i] = uv - 1.0;
        }
    }

    if support.len() < k {
        // Underdetermined: fall back to pinning the extra interpolated
        // rows at each box endpoint combination (small k − |S| only).
        let extra = k - support.len();
        if extra > 3 {
            return None;
        }
        let extras: Vec<usize> = free[support.len()..].to_vec();
        let reduced: Vec<usize> = free[..support.len()].to_vec();
        for mask in 0..(1u32 << extra) {
            let mut pinned2 = pinned.clone();
            for (b, &i) in extras.iter().enumerate() {
                pinned2[i] = if mask & (1 << b) != 0 { uv } else { uv - 1.0 };
            }
            if let Some(cert) =
                solve_certificate(d, uv, lam_u, beta, &reduced, &support, &pinned2, objective)
            {
                return Some(cert);
            }
        }
        return None;
    }

    solve_certificate(d, uv, lam_u, beta, &free, &support, &pinned, objective)
}

#[allow(clippy::too_many_arguments)]
fn solve_certificate(
    d: &Dataset,
    uv: f64,
    lam_u: f64,
    beta: &[f64],
    free: &[usize],
    support: &[usize],
    pinned: &[f64],
    objective: f64,
) -> Option<DualCertificate> {
    let n = d.n();
    let p = d.p();
    let k = free.len();
    debug_assert_eq!(k, support.len());

    let mut pi = pinned.to_vec();
    if k > 0 {
        let mut a = vec![0.0; k * k];
        let mut b = vec![0.0; k];
        for (eq, &j) in support.iter().enumerate() {
            let target = beta[j].signum() * lam_u * d.penalty_weight(j);
            let mut rhs = target;
            for i in 0..n {
                if !free.contains(&i) {
                    rhs -= d.x()[[i, j]] * pinned[i];
                }
            }
            for (vi, &i) in free.iter().enumerate() {
                a[eq * k + vi] = d.x()[[i, j]];
            }
            b[eq] = rhs;
        }
        if !gauss_solve(&mut a, &mut b, k) {
            return None;
        }
        for (vi, &i) in free.iter().enumerate() {
            pi[i] = b[vi];
        }
    }

    // Box feasibility.
    if pi.iter().any(|&v| v < uv - 1.0 - CERT_TOL || v > uv + CERT_TOL) {
        return None;
    }
    // Column constraint feasibility and complementary slackness.
    let mut corrs = vec![0.0; p];
    for j in 0..p {
        let g: f64 = (0..n).map(|i| d.x()[[i, j]] * pi[i]).sum();
        corrs[j] = g;
        let bound = lam_u * d.penalty_weight(j);
        if g.abs() > bound + CERT_TOL {
            return None;
        }
        if beta[j].abs() > 1e-13 && (g - beta[j].signum() * bound).abs() > CERT_TOL {
            return None;
        }
    }
    // Strong duality: y'π must equal n × the primal objective.
    let dual: f64 = (0..n).map(|i| d.y()[i] * pi[i]).sum();
    if (dual - n as f64 * objective).abs() > CERT_TOL * (1.0 + n as f64 * objective.abs()) {
        return None;
    }

    Some(DualCertificate {
        pi,
        beta: beta.to_vec(),
        column_correlations: corrs,
    })
}

/// All k-subsets of {0..n}, lexicographic.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let needed = k - cur.len();
        for i in start..=(n - needed) {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    if k <= n {
        rec(0, n, k, &mut cur, &mut out);
    }
    out
}

/// In-place Gaussian elimination with partial pivoting, local to the
/// oracle. Returns false on a (numerically) singular system.
fn gauss_solve(a: &mut [f64], b: &mut [f64], k: usize) -> bool {
    for col in 0..k {
        let mut piv = col;
        let mut best = a[col * k + col].abs();
        for r in (col + 1)..k {
            if a[r * k + col].abs() > best {
                best = a[r * k + col].abs();
                piv = r;
            }
        }
        if best < 1e-11 {
            return false;
        }
        if piv != col {
            for j in 0..k {
                a.swap(col * k + j, piv * k + j);
            }
            b.swap(col, piv);
        }
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = a[r * k + col] / a[col * k + col];
            if f != 0.0 {
                for j in col..k {
                    a[r * k + j] -= f * a[col * k + j];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for i in 0..k {
        b[i] /= a[i * k + i];
    }
    true
}

/// Exact (1−α)-style quantile of |n − 2·Binomial(n, 1/2)| by direct
/// probability-mass enumeration: the smallest value v with
/// P(|n − 2B| ≤ v) ≥ level.
pub fn exact_abs_binomial_quantile(n: usize, level: f64) -> f64 {
    // pmf via the multiplicative recursion, exact to f64 roundoff.
    let mut pmf = vec![0.0f64; n + 1];
    pmf[0] = 0.5f64.powi(n as i32);
    for k in 0..n {
        pmf[k + 1] = pmf[k] * (n - k) as f64 / (k + 1) as f64;
    }
    let mut values: Vec<usize> = (0..=n).map(|k| (n as i64 - 2 * k as i64).unsigned_abs() as usize).collect();
    values.sort_unstable();
    values.dedup();
    for &v in &values {
        let cdf: f64 = (0..=n)
            .filter(|&k| (n as i64 - 2 * k as i64).unsigned_abs() as usize <= v)
            .map(|k| pmf[k])
            .sum();
        if cdf >= level {
            return v as f64;
        }
    }
    n as f64
}

/// A seeded Gaussian test instance: X with an optional leading ones
/// column, remaining columns AR(1)-correlated with parameter rho, and a
/// continuous response.
pub fn gaussian_instance(
    seed: u64,
    n: usize,
    p: usize,
    rho: f64,
    intercept: bool,
) -> Dataset {
    let mut rng = l1qr::rng::stream_rng(seed, 0);
    let mut x = Array2::zeros((n, p));
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            if intercept && j == 0 {
                x[[i, j]] = 1.0;
                continue;
            }
            let w: f64 = StandardNormal.sample(&mut rng);
            let z = if (intercept && j == 1) || (!intercept && j == 0) {
                w
            } else {
                rho * prev + (1.0 - rho * rho).sqrt() * w
            };
            x[[i, j]] = z;
            prev = z;
        }
    }
    let y = Array1::from_shape_fn(n, |_| {
        let e: f64 = StandardNormal.sample(&mut rng);
        2.0 * e + rng.random::<f64>()
    });
    Dataset::new(x, y, intercept.then_some(0)).unwrap()
}
