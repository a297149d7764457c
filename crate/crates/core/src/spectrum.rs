//! Weight spectral shape `G(omega)` of protograph ensembles and the typical
//! relative minimum distance `omega*`.
//!
//! Each VN type `j` carries a fraction `delta_j` of ones among its `Q`
//! copies. In nats per lifting copy the exponent of the expected number of
//! codewords with profile `delta` is
//!
//! ```text
//! J(delta) = sum_j (1 - deg_j) H(delta_j) + sum_i phi_i(delta)
//! phi_i(delta) = min_u  ln A_i(u) - sum_j b_ij delta_j u_j
//! A_i(u) = (prod_j (1 + e^u_j)^b_ij + prod_j (1 - e^u_j)^b_ij) / 2
//! ```
//!
//! and `G(omega) = max J / (n_t ln 2)` over profiles whose transmitted
//! weight is `omega * n_t`, `n_t` being the number of transmitted columns.
//! Punctured columns carry weight but do not count towards `omega`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ensemble::BaseMatrix;
use crate::error::{Error, Result};

const LN2: f64 = std::f64::consts::LN_2;

/// Binary entropy in bits.
pub fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.log2() + (1.0 - x) * (1.0 - x).log2())
}

fn h_nats(x: f64) -> f64 {
    -(x * x.ln() + (1.0 - x) * (-x).ln_1p())
}

/// Growth rate of the random linear code ensemble, `h(omega) - (1 - R)`.
pub fn random_code_growth_rate(omega: f64, rate: f64) -> f64 {
    h2(omega) - (1.0 - rate)
}

/// Gilbert-Varshamov relative distance: the root of `h(omega) = 1 - R` in
/// `(0, 1/2]`.
pub fn gilbert_varshamov(rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rate must be in (0,1), got {rate}"
        )));
    }
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if random_code_growth_rate(mid, rate) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumConfig {
    /// Random starting points in addition to the deterministic ones.
    pub restarts: usize,
    pub seed: u64,
    /// Stop the outer ascent once the Newton decrement is below
    /// `grad_tol^2`.
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            restarts: 2,
            seed: 1,
            grad_tol: 1e-9,
            max_iters: 100,
        }
    }
}

/// Maximiser found for one `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthPoint {
    pub omega: f64,
    /// `G(omega)` in bits per transmitted bit.
    pub g: f64,
    /// Optimal weight fraction per VN type.
    pub delta: Vec<f64>,
    /// Final Newton decrement `g . d` of the winning start.
    pub decrement: f64,
}

/// Per-row data of the inner problem.
struct Row {
    /// `(column, b_ij)` for non-zero entries.
    cols: Vec<(usize, u32)>,
}

/// Solves a dense symmetric system in place by Gaussian elimination with
/// partial pivoting. Returns `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

/// Even and odd parts of `(1 + t)^b` and their first two derivatives in
/// `t`, as sums of positive terms.
fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64)
}

fn parity_parts(b: u32, t: f64) -> [[f64; 2]; 3] {
    let mut out = [[0.0; 2]; 3];
    let mut c = 1.0; // binomial(b, k)
    for k in 0..=b {
        let kf = k as f64;
        let p = (k % 2) as usize;
        out[0][p] += c * t.powi(k as i32);
        if k >= 1 {
            out[1][p] += c * kf * t.powi(k as i32 - 1);
        }
        if k >= 2 {
            out[2][p] += c * kf * (kf - 1.0) * t.powi(k as i32 - 2);
        }
        c = c * (b - k) as f64 / (kf + 1.0);
    }
    out
}

/// Inner objective for `t = e^u <= 1`, where the closed form loses the
/// second-order terms that carry the edge weights.
fn inner_eval_small(
    b: &[f64],
    delta: &[f64],
    u: &[f64],
    want_hess: bool,
) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let n = u.len();
    let t: Vec<f64> = u.iter().map(|x| x.exp()).collect();
    let parts: Vec<[[f64; 2]; 3]> = (0..n).map(|j| parity_parts(b[j] as u32, t[j])).collect();
    // even part of the product of the chosen factors; `order[j]` picks the
    // derivative order of factor j
    let even = |order: &dyn Fn(usize) -> usize| -> f64 {
        let (mut e, mut o) = (1.0, 0.0);
        for (j, f) in parts.iter().enumerate() {
            let [fe, fo] = f[order(j)];
            (e, o) = (e * fe + o * fo, e * fo + o * fe);
        }
        e
    };
    let a = even(&|_| 0);
    // a - 1 without cancellation: all factor terms beyond the constant are
    // positive
    let excess = {
        let (mut em1, mut o) = (0.0, 0.0);
        for (j, f) in parts.iter().enumerate() {
            let [fe, fo] = f[0];
            let fe_m1: f64 = (2..=b[j] as i32)
                .step_by(2)
                .map(|k| binom(b[j] as u32, k as u32) * t[j].powi(k))
                .sum();
            (em1, o) = (em1 * fe + fe_m1 + o * fo, (em1 + 1.0) * fo + o * fe);
        }
        em1
    };
    let a1: Vec<f64> = (0..n)
        .map(|j| t[j] * even(&|k| usize::from(k == j)) / a)
        .collect();
    let val = excess.ln_1p() - (0..n).map(|j| b[j] * delta[j] * u[j]).sum::<f64>();
    let grad = (0..n).map(|j| a1[j] - b[j] * delta[j]).collect();
    let mut hess = Vec::new();
    if want_hess {
        hess = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in j..n {
                let second = if j == k {
                    t[j] * t[j] * even(&|l| if l == j { 2 } else { 0 }) / a + a1[j]
                } else {
                    t[j] * t[k] * even(&|l| usize::from(l == j || l == k)) / a
                };
                hess[j][k] = second - a1[j] * a1[k];
                hess[k][j] = hess[j][k];
            }
        }
    }
    (val, grad, hess)
}

/// Value, gradient and Hessian of the convex inner objective.
fn inner_eval(
    b: &[f64],
    delta: &[f64],
    u: &[f64],
    want_hess: bool,
) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    if u.iter().all(|&x| x <= 0.0) {
        return inner_eval_small(b, delta, u, want_hess);
    }
    let n = u.len();
    let s: Vec<f64> = u.iter().map(|&x| 1.0 / (1.0 + (-x).exp())).collect();
    let r: Vec<f64> = s.iter().map(|&x| 1.0 - 2.0 * x).collect();
    let rp: Vec<f64> = s.iter().map(|&x| -2.0 * x * (1.0 - x)).collect();
    let rho: Vec<f64> = (0..n).map(|j| r[j].powi(b[j] as i32)).collect();
    let rho1: Vec<f64> = (0..n)
        .map(|j| b[j] * r[j].powi(b[j] as i32 - 1) * rp[j])
        .collect();
    let prod_except = |skip: &[usize]| -> f64 {
        (0..n)
            .filter(|k| !skip.contains(k))
            .map(|k| rho[k])
            .product()
    };
    let big_r: f64 = rho.iter().product();
    let one_r = 1.0 + big_r;

    let softplus = |x: f64| {
        if x > 30.0 {
            x + (-x).exp()
        } else {
            x.exp().ln_1p()
        }
    };
    // ln((1 + R) / 2) without cancellation when R is close to 1
    let ln_half_one_r = if r.iter().all(|&x| x > 0.0) {
        let ln_r: f64 = (0..n).map(|j| b[j] * (-2.0 * s[j]).ln_1p()).sum();
        (0.5 * ln_r.exp_m1()).ln_1p()
    } else {
        (0.5 * one_r).ln()
    };
    let val = (0..n)
        .map(|j| b[j] * (softplus(u[j]) - delta[j] * u[j]))
        .sum::<f64>()
        + ln_half_one_r;
    let rj: Vec<f64> = (0..n).map(|j| rho1[j] * prod_except(&[j])).collect();
    let grad = (0..n)
        .map(|j| b[j] * (s[j] - delta[j]) + rj[j] / one_r)
        .collect();
    let mut hess = Vec::new();
    if want_hess {
        hess = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in 0..n {
                let rjk = if j == k {
                    let rpp = rp[j] * r[j];
                    let mut second = b[j] * r[j].powi(b[j] as i32 - 1) * rpp;
                    if b[j] >= 2.0 {
                        second += b[j] * (b[j] - 1.0) * r[j].powi(b[j] as i32 - 2) * rp[j] * rp[j];
                    }
                    second * prod_except(&[j])
                } else {
                    rho1[j] * rho1[k] * prod_except(&[j, k])
                };
                hess[j][k] = rjk / one_r - rj[j] * rj[k] / (one_r * one_r);
            }
            hess[j][j] += b[j] * s[j] * (1.0 - s[j]);
        }
    }
    (val, grad, hess)
}

/// Whether sockets carrying `delta[j]` with multiplicity `b[j]` lie in the
/// parity polytope, up to a relative tolerance. Only the most violated
/// odd-set facet is checked: `S` is the set of sockets above one half, made
/// odd by toggling the socket closest to one half. Equal sockets of one type
/// can sit on such a facet while the type profile is interior, so points on
/// the boundary are accepted.
fn in_parity_polytope(b: &[f64], delta: &[f64]) -> bool {
    let mut odd = 0usize;
    let mut margin = 0.0;
    let mut closest = (f64::INFINITY, 0usize);
    let mut mass = 0.0;
    for (j, (&m, &d)) in b.iter().zip(delta).enumerate() {
        let n = m as usize;
        mass += m * d.min(1.0 - d);
        if d > 0.5 {
            odd += n;
            margin += m * d;
        } else {
            margin -= m * d;
        }
        if n > 0 && (d - 0.5).abs() < closest.0 {
            closest = ((d - 0.5).abs(), j);
        }
    }
    if odd % 2 == 0 {
        let d = delta[closest.1];
        if d > 0.5 {
            odd -= 1;
            margin -= 2.0 * d;
        } else {
            odd += 1;
            margin += 2.0 * d;
        }
    }
    (1.0 - odd as f64) + margin <= 1e-9 * mass
}

/// `phi`, its minimiser and the Hessian there for one CN type, starting
/// from `u0`; `None` when the profile is not achievable by even-weight
/// local assignments.
fn inner_min(
    b: &[f64],
    delta: &[f64],
    u0: Option<&[f64]>,
) -> Option<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    if !in_parity_polytope(b, delta) {
        return None;
    }
    let mut u: Vec<f64> = match u0 {
        Some(u0) if u0.len() == b.len() => u0.to_vec(),
        _ => delta.iter().map(|&d| (d / (1.0 - d)).ln()).collect(),
    };
    // every term scales with the check mass, so tolerances are relative to it
    let scale: f64 = b
        .iter()
        .zip(delta)
        .map(|(x, d)| x * d)
        .sum::<f64>()
        .max(1e-300);
    let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt() / scale;
    let (mut val, mut grad, mut hess) = inner_eval(b, delta, &u, true);
    for _ in 0..200 {
        if norm(&grad) < 1e-11 {
            return Some((val, u, hess));
        }
        let mut damping = 0.0;
        let step = loop {
            let mut h = hess.clone();
            for (j, row) in h.iter_mut().enumerate() {
                row[j] += damping;
            }
            if let Some(x) = solve(h, grad.clone()) {
                if x.iter().all(|v| v.is_finite())
                    && x.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>() > 0.0
                {
                    break x;
                }
            }
            damping = if damping == 0.0 {
                1e-10
            } else {
                damping * 100.0
            };
            if damping > 1e10 {
                return None;
            }
        };
        let slope: f64 = step.iter().zip(&grad).map(|(a, b)| a * b).sum();
        if slope < 1e-26 * scale {
            return Some((val, u, hess));
        }
        if slope < 1e-10 * scale {
            // quadratic regime: values no longer resolve the decrease
            u.iter_mut().zip(&step).for_each(|(x, d)| *x -= d);
            (val, grad, hess) = inner_eval(b, delta, &u, true);
            continue;
        }
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = u.iter().zip(&step).map(|(x, d)| x - t * d).collect();
            let (v, _, _) = inner_eval(b, delta, &cand, false);
            if v.is_finite() && v <= val - 1e-4 * t * slope {
                u = cand;
                (val, grad, hess) = inner_eval(b, delta, &u, true);
                break;
            }
            t *= 0.5;
            if t < 1e-14 {
                // no further decrease representable
                return (norm(&grad) < 1e-8).then_some((val, u, hess));
            }
        }
        if u.iter().any(|x| x.abs() > 80.0) {
            return None;
        }
    }
    (norm(&grad) < 1e-8).then_some((val, u, hess))
}

/// Outer objective `J(delta)` in nats per lifting copy with its gradient
/// and Hessian in `delta`; `None` outside the feasible set. `warm` holds
/// the inner minimisers of the previous call.
fn outer_eval(
    rows: &[Row],
    deg: &[f64],
    delta: &[f64],
    warm: &mut [Vec<f64>],
) -> Option<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    if delta.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
        return None;
    }
    let n0 = delta.len();
    let mut val = 0.0;
    let mut grad = vec![0.0; n0];
    let mut hess = vec![vec![0.0; n0]; n0];
    for (j, &d) in delta.iter().enumerate() {
        val += (1.0 - deg[j]) * h_nats(d);
        grad[j] += (1.0 - deg[j]) * ((1.0 - d) / d).ln();
        hess[j][j] += (deg[j] - 1.0) / (d * (1.0 - d));
    }
    for (row, w) in rows.iter().zip(warm.iter_mut()) {
        let b: Vec<f64> = row.cols.iter().map(|&(_, m)| m as f64).collect();
        let d: Vec<f64> = row.cols.iter().map(|&(j, _)| delta[j]).collect();
        let (phi, u, h) = inner_min(&b, &d, Some(w))?;
        val += phi;
        for (k, &(j, m)) in row.cols.iter().enumerate() {
            grad[j] -= m as f64 * u[k];
        }
        // du/d delta_k = H^-1 b_k e_k by implicit differentiation
        for (k, &(jk, _)) in row.cols.iter().enumerate() {
            let mut rhs = vec![0.0; b.len()];
            rhs[k] = b[k];
            let mut hd = h.clone();
            let scale = hd
                .iter()
                .enumerate()
                .map(|(i, r)| r[i].abs())
                .fold(0.0, f64::max);
            for (i, r) in hd.iter_mut().enumerate() {
                r[i] += 1e-14 * scale;
            }
            let x = solve(hd, rhs)?;
            for (l, &(jl, _)) in row.cols.iter().enumerate() {
                hess[jl][jk] -= b[l] * x[l];
            }
        }
        *w = u;
    }
    Some((val, grad, hess))
}

/// Constrained Newton ascent on `J` over profiles with fixed transmitted
/// weight, from the feasible `delta`. Returns `(J, delta, decrement)`.
fn ascend(
    rows: &[Row],
    deg: &[f64],
    transmitted: &[bool],
    mut delta: Vec<f64>,
    cfg: &SpectrumConfig,
) -> Option<(f64, Vec<f64>, f64)> {
    let n = delta.len();
    let weight: f64 = (0..n).filter(|&j| transmitted[j]).map(|j| delta[j]).sum();
    let mut warm: Vec<Vec<f64>> = vec![Vec::new(); rows.len()];
    let (mut val, mut grad, mut hess) = outer_eval(rows, deg, &delta, &mut warm)?;
    let mut decrement = f64::INFINITY;
    for _ in 0..cfg.max_iters {
        // Newton in x = ln(delta). The Lagrangian Hessian is
        // D H D + diag((g - lambda [j in T]) delta), lambda being the
        // multiplier of the weight constraint.
        let gx: Vec<f64> = (0..n).map(|j| grad[j] * delta[j]).collect();
        let lambda = (0..n)
            .filter(|&j| transmitted[j])
            .map(|j| gx[j])
            .sum::<f64>()
            / weight;
        let hx: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let curv = (grad[i] - if transmitted[i] { lambda } else { 0.0 }) * delta[i];
                (0..n)
                    .map(|j| delta[i] * hess[i][j] * delta[j] + if i == j { curv } else { 0.0 })
                    .collect()
            })
            .collect();
        // KKT system of the quadratic model, linearised weight constraint
        // sum_T delta_j dx_j = 0
        let scale = (0..n).map(|j| hx[j][j].abs()).fold(1e-300, f64::max);
        let mut mu = 0.0;
        let step = loop {
            let mut k = vec![vec![0.0; n + 1]; n + 1];
            for i in 0..n {
                for j in 0..n {
                    k[i][j] = -hx[i][j];
                }
                k[i][i] += mu;
                if transmitted[i] {
                    k[i][n] = delta[i];
                    k[n][i] = delta[i];
                }
            }
            let mut rhs = gx.clone();
            rhs.push(0.0);
            if let Some(x) = solve(k, rhs) {
                let d = x[..n].to_vec();
                let curv: f64 = (0..n)
                    .map(|i| d[i] * (0..n).map(|j| -hx[i][j] * d[j]).sum::<f64>())
                    .sum::<f64>()
                    + mu * d.iter().map(|v| v * v).sum::<f64>();
                if d.iter().all(|v| v.is_finite()) && curv > 0.0 {
                    break d;
                }
            }
            mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
            if mu > 1e30 {
                return None;
            }
        };
        let slope: f64 = step.iter().zip(&gx).map(|(a, b)| a * b).sum();
        decrement = slope;
        if slope < cfg.grad_tol * cfg.grad_tol {
            break;
        }
        // trust region on the log scale
        let longest = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut t: f64 = if longest > 5.0 { 5.0 / longest } else { 1.0 };
        let accepted = loop {
            let mut cand: Vec<f64> = delta
                .iter()
                .zip(&step)
                .map(|(d, s)| d * (t * s).exp())
                .collect();
            let sum: f64 = (0..n).filter(|&j| transmitted[j]).map(|j| cand[j]).sum();
            for j in 0..n {
                if transmitted[j] {
                    cand[j] *= weight / sum;
                }
            }
            let mut w = warm.clone();
            if let Some((v, g, h)) = outer_eval(rows, deg, &cand, &mut w) {
                if v >= val + 1e-4 * t * slope {
                    break Some((cand, v, g, h, w));
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                break None;
            }
        };
        let Some((nd, nv, ng, nh, nw)) = accepted else {
            break;
        };
        let stalled = nv - val <= 1e-14 * val.abs().max(1e-300);
        delta = nd;
        (val, grad, hess, warm) = (nv, ng, nh, nw);
        if stalled {
            break;
        }
    }
    Some((val, delta, decrement))
}

fn setup(b: &BaseMatrix) -> Result<(Vec<Row>, Vec<f64>, Vec<bool>)> {
    b.validate()?;
    let rows = (0..b.rows())
        .map(|i| Row {
            cols: (0..b.cols())
                .filter(|&j| b.get(i, j) > 0)
                .map(|j| (j, b.get(i, j)))
                .collect(),
        })
        .collect();
    let deg = (0..b.cols()).map(|j| b.col_degree(j) as f64).collect();
    let transmitted: Vec<bool> = (0..b.cols()).map(|j| !b.is_punctured(j)).collect();
    if !transmitted.iter().any(|&t| t) {
        return Err(Error::BaseMatrix("no transmitted columns".into()));
    }
    Ok((rows, deg, transmitted))
}

/// `G(omega)` with its maximising profile.
pub fn growth_rate_with(b: &BaseMatrix, omega: f64, cfg: &SpectrumConfig) -> Result<GrowthPoint> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "omega must be in (0,1), got {omega}"
        )));
    }
    let (rows, deg, transmitted) = setup(b)?;
    let nt = transmitted.iter().filter(|&&t| t).count();
    let weight = omega * nt as f64;

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let mut push_profile = |w: Vec<f64>| {
        let sum: f64 = (0..b.cols())
            .filter(|&j| transmitted[j])
            .map(|j| w[j])
            .sum();
        let d: Vec<f64> = (0..b.cols())
            .map(|j| {
                if transmitted[j] {
                    weight * w[j] / sum
                } else {
                    omega
                }
            })
            .collect();
        if d.iter().all(|&x| x < 1.0) {
            starts.push(d);
        }
    };
    push_profile(vec![1.0; b.cols()]);
    // low-weight codewords live on low-degree columns
    push_profile(deg.iter().map(|&d| (-2.0 * d).exp()).collect());
    push_profile(deg.iter().map(|&d| 1.0 / d).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.restarts {
        push_profile((0..b.cols()).map(|_| rng.random::<f64>() + 1e-3).collect());
    }

    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut failures = 0;
    for d0 in starts {
        match ascend(&rows, &deg, &transmitted, d0, cfg) {
            Some(r) => {
                if best.as_ref().is_none_or(|b| r.0 > b.0) {
                    best = Some(r);
                }
            }
            None => failures += 1,
        }
    }
    let (j, delta, decrement) = best.ok_or_else(|| {
        Error::Optimisation(format!(
            "growth rate at omega = {omega}: all {failures} starts infeasible"
        ))
    })?;
    if decrement > 1e-12 {
        log::warn!(
            "growth rate at omega = {omega}: ascent stopped with Newton decrement {decrement:.2e}"
        );
    }
    Ok(GrowthPoint {
        omega,
        g: j / (nt as f64 * LN2),
        delta,
        decrement,
    })
}

/// `G(omega)` in bits per transmitted bit.
pub fn growth_rate(b: &BaseMatrix, omega: f64) -> Result<f64> {
    growth_rate_with(b, omega, &SpectrumConfig::default()).map(|p| p.g)
}

/// Sampled spectral shape with the typical relative minimum distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralShape {
    pub samples: Vec<(f64, f64)>,
    pub omega_star: Option<f64>,
}

impl SpectralShape {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega,G\n");
        for (w, g) in &self.samples {
            let _ = writeln!(s, "{w:.10e},{g:.10e}");
        }
        s
    }
}

/// 40 logarithmic points in `[1e-4, 1e-2)` followed by a linear grid up to
/// 0.5 in steps of 0.01.
pub fn default_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..40)
        .map(|k| 10f64.powf(-4.0 + 2.0 * k as f64 / 40.0))
        .collect();
    g.extend((1..=50).map(|k| 0.01 * k as f64));
    g
}

pub fn spectral_shape(b: &BaseMatrix, grid: &[f64], cfg: &SpectrumConfig) -> Result<SpectralShape> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "omega grid must be strictly increasing".into(),
        ));
    }
    let samples = grid
        .par_iter()
        .map(|&w| growth_rate_with(b, w, cfg).map(|p| (w, p.g)))
        .collect::<Result<Vec<_>>>()?;
    let omega_star = typical_min_distance_with(b, cfg)?;
    Ok(SpectralShape {
        samples,
        omega_star,
    })
}

/// Smallest `omega` below which `G` is negative; `None` when `G >= 0` right
/// of zero or no sign change exists up to 1/2.
pub fn typical_min_distance_with(b: &BaseMatrix, cfg: &SpectrumConfig) -> Result<Option<f64>> {
    let g = |w: f64| growth_rate_with(b, w, cfg).map(|p| p.g);
    // geometric scan from 1e-6 (ratio 10^0.2) up to 1/2, stopping at the
    // first non-negative value
    let grid = (0..)
        .map(|k| 1e-6 * 10f64.powf(0.2 * k as f64))
        .take_while(|&w| w < 0.5)
        .chain([0.5]);
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for w in grid {
        let v = g(w)?;
        if v >= 0.0 {
            bracket = prev.map(|p| (p, (w, v)));
            break;
        }
        prev = Some((w, v));
    }
    let Some(((mut lo, mut glo), (mut hi, mut ghi))) = bracket else {
        return Ok(None);
    };
    // regula falsi (Illinois) on the bracket
    let mut side = 0i32;
    for _ in 0..200 {
        let mid = (lo * ghi - hi * glo) / (ghi - glo);
        let mid = if mid > lo && mid < hi {
            mid
        } else {
            0.5 * (lo + hi)
        };
        let gm = g(mid)?;
        if gm.abs() < 1e-11 || hi - lo < 1e-12 * hi {
            return Ok(Some(mid));
        }
        if gm < 0.0 {
            lo = mid;
            glo = gm;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            ghi = gm;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

pub fn typical_min_distance(b: &BaseMatrix) -> Result<Option<f64>> {
    typical_min_distance_with(b, &SpectrumConfig::default())
}

fn ln_binom(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Exact ensemble-average weight enumerator `E[A_w]`, `w = 0..=n_t Q`, for
/// a lifting factor `Q`, with one independent uniform permutation per
/// protograph edge. Exponential in the row degree; small cases only.
pub fn ensemble_average_enumerator(b: &BaseMatrix, q: usize) -> Result<Vec<f64>> {
    b.validate()?;
    let n0 = b.cols();
    let transmitted: Vec<usize> = (0..n0).filter(|&j| !b.is_punctured(j)).collect();
    let row_edges: Vec<Vec<usize>> = (0..b.rows())
        .map(|i| {
            (0..n0)
                .flat_map(|j| std::iter::repeat_n(j, b.get(i, j) as usize))
                .collect()
        })
        .collect();
    let cells: f64 = row_edges
        .iter()
        .map(|r| ((q + 1) as f64).powi(r.len() as i32))
        .sum::<f64>()
        + ((q + 1) as f64).powi(n0 as i32);
    if cells > 2e7 {
        return Err(Error::InvalidParameter(
            "ensemble too large for exact enumeration".into(),
        ));
    }
    // coefficient table of A_c(x_1..x_k)^Q for each row, indexed in base q+1
    let tables: Vec<Vec<f64>> = row_edges
        .iter()
        .map(|e| check_power_table(e.len(), q))
        .collect();
    let mut out = vec![0.0; transmitted.len() * q + 1];
    let total = (q + 1).pow(n0 as u32);
    for idx in 0..total {
        let d: Vec<usize> = (0..n0)
            .map(|j| idx / (q + 1).pow(j as u32) % (q + 1))
            .collect();
        let mut ln = (0..n0).map(|j| ln_binom(q, d[j])).sum::<f64>();
        let mut zero = false;
        for (i, e) in row_edges.iter().enumerate() {
            let pos: usize = e
                .iter()
                .enumerate()
                .map(|(k, &j)| d[j] * (q + 1).pow(k as u32))
                .sum();
            let c = tables[i][pos];
            if c == 0.0 {
                zero = true;
                break;
            }
            ln += c.ln() - e.iter().map(|&j| ln_binom(q, d[j])).sum::<f64>();
        }
        if !zero {
            let w: usize = transmitted.iter().map(|&j| d[j]).sum();
            out[w] += ln.exp();
        }
    }
    Ok(out)
}

/// Coefficients of `((prod(1+x_e) + prod(1-x_e))/2)^q` over `k` variables.
fn check_power_table(k: usize, q: usize) -> Vec<f64> {
    let base = q + 1;
    let size = base.pow(k as u32);
    // even-weight patterns of one check
    let patterns: Vec<usize> = (0..1usize << k)
        .filter(|m| m.count_ones() % 2 == 0)
        .map(|m| {
            (0..k)
                .filter(|&e| m >> e & 1 == 1)
                .map(|e| base.pow(e as u32))
                .sum()
        })
        .collect();
    let mut t = vec![0.0; size];
    t[0] = 1.0;
    // after `step` factors every exponent is at most `step`, so digits never carry
    for _ in 0..q {
        let mut next = vec![0.0; size];
        for (pos, &v) in t.iter().enumerate() {
            if v != 0.0 {
                for &p in &patterns {
                    if pos + p < size {
                        next[pos + p] += v;
                    }
                }
            }
        }
        t = next;
    }
    t
}

/// `E[A_w]` by exhaustive enumeration of every lifting (first edge
/// permutation fixed, which leaves the code distribution unchanged) and of
/// every word. Brute-force oracle for tiny cases.
pub fn brute_force_enumerator(b: &BaseMatrix, q: usize) -> Result<Vec<f64>> {
    b.validate()?;
    if b.punctured_columns().len() > 0 {
        return Err(Error::InvalidParameter(
            "brute force supports unpunctured matrices".into(),
        ));
    }
    let (m0, n0) = (b.rows(), b.cols());
    let n = n0 * q;
    let instances: Vec<(usize, usize)> = b
        .edge_types()
        .flat_map(|(i, j)| std::iter::repeat_n((i, j), b.get(i, j) as usize))
        .collect();
    let perms = permutations(q);
    let free = instances.len() - 1;
    let combos = perms.len().pow(free as u32);
    if n > 20 || combos as f64 * (1u64 << n) as f64 > 5e9 {
        return Err(Error::InvalidParameter(
            "ensemble too large for brute force".into(),
        ));
    }
    let mut counts = vec![0u64; n + 1];
    for c in 0..combos {
        // check masks per CN
        let mut masks = vec![0u32; m0 * q];
        for (k, &(i, j)) in instances.iter().enumerate() {
            let perm = if k == 0 {
                &perms[0]
            } else {
                &perms[c / perms.len().pow(k as u32 - 1) % perms.len()]
            };
            for t in 0..q {
                // VN copy t meets CN copy perm[t]; parallel instances toggle
                masks[i * q + perm[t]] ^= 1 << (j * q + t);
            }
        }
        for word in 0u32..(1 << n) {
            if masks.iter().all(|&m| (m & word).count_ones() % 2 == 0) {
                counts[word.count_ones() as usize] += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / combos as f64)
        .collect())
}

fn permutations(q: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                prefix.push(x);
                rec(prefix, used, out);
                prefix.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; q], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regular36() -> BaseMatrix {
        BaseMatrix::new(vec![vec![3, 3]], &[]).unwrap()
    }

    #[test]
    fn parity_polytope_membership() {
        let b = [3.0, 1.0, 4.0, 3.0, 1.0, 13.0];
        let d = [1.7e-8, 9.94e-6, 1.25e-11, 8.0e-11, 1.08e-8, 7.1e-11];
        assert!(!in_parity_polytope(&b, &d));
        assert!(in_parity_polytope(&b, &[0.1; 6]));
        assert!(in_parity_polytope(&[1.0, 1.0], &[0.3, 0.31]) == false);
        assert!(in_parity_polytope(&[1.0, 1.0, 1.0], &[0.3, 0.31, 0.2]));
        // odd number of sockets above one half
        assert!(!in_parity_polytope(&[1.0, 1.0, 1.0], &[0.9, 0.9, 0.9]));
        assert!(in_parity_polytope(&[2.0], &[0.4]));
        assert!(!in_parity_polytope(&[1.0, 2.0], &[0.5, 0.1]));
    }

    #[test]
    fn gv_distance() {
        let w = gilbert_varshamov(0.5).unwrap();
        assert!((w - 0.110028).abs() < 1e-5, "{w}");
        assert!(random_code_growth_rate(w, 0.5).abs() < 1e-10);
    }

    #[test]
    fn regular_36_distance() {
        let w = typical_min_distance(&regular36()).unwrap().unwrap();
        assert!((w - 0.0227).abs() < 2e-4, "{w}");
        let g = growth_rate(&regular36(), w).unwrap();
        assert!(g.abs() < 1e-7);
    }

    #[test]
    fn regular_36_shape_at_half() {
        // a (3,6) code has the random-code exponent at omega = 1/2
        let g = growth_rate(&regular36(), 0.5).unwrap();
        assert!((g - 0.5).abs() < 1e-6, "{g}");
    }

    #[test]
    fn inner_newton_matches_single_check() {
        // one check with two edges: only (0,0) and (1,1), phi = H(delta)
        // two edges: only 00 and 11, so phi = H(delta)
        let (phi, _, _) = inner_min(&[1.0, 1.0], &[0.2, 0.2], None).unwrap();
        assert!((phi - h_nats(0.2)).abs() < 1e-9, "{phi}");
        // three parallel edges: a fraction 1.5 delta of checks has weight 2
        let (phi, _, _) = inner_min(&[3.0], &[0.1], None).unwrap();
        assert!(
            (phi - (h_nats(0.15) + 0.15 * 3f64.ln())).abs() < 1e-9,
            "{phi}"
        );
    }

    #[test]
    fn exact_formula_matches_brute_force() {
        let b = BaseMatrix::new(vec![vec![2, 2]], &[]).unwrap();
        for q in [2, 3] {
            let exact = ensemble_average_enumerator(&b, q).unwrap();
            let brute = brute_force_enumerator(&b, q).unwrap();
            for (e, x) in exact.iter().zip(&brute) {
                assert!(
                    (e - x).abs() < 1e-9 * (1.0 + x),
                    "Q={q}: {exact:?} vs {brute:?}"
                );
            }
        }
    }

    #[test]
    fn permutation_invariance() {
        let b = BaseMatrix::new(vec![vec![1, 2, 1, 3], vec![2, 1, 2, 1]], &[]).unwrap();
        let p = b.permuted(&[1, 0], &[2, 0, 3, 1]);
        for w in [0.01, 0.1] {
            let (x, y) = (growth_rate(&b, w).unwrap(), growth_rate(&p, w).unwrap());
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}
