//! Primal-dual interior-point solver for the linear epsilon-SVR.
//!
//! Works on the primal with slack `xi` and the three constraint blocks
//!
//! ```text
//! s1 = eps + xi - r >= 0,   s2 = eps + xi + r >= 0,   xi >= 0
//! r  = y - K beta - b
//! ```
//!
//! with multipliers `l1, l2, l3` and `beta = l1 - l2`. Starting from a point
//! where every linear equation already holds, each Mehrotra step eliminates
//! the per-sample unknowns and solves one `n x n` positive definite system
//! `diag(1/h) + K`. The loop stops once the duality gap drops below
//! `tol * max(1, P)`.
//!
//! A converged run is then snapped to the active set it identified: the
//! free multipliers and the bias are recomputed from the tube-edge
//! equations, and the result replaces the interior iterate when it passes a
//! KKT check.

use nalgebra::{DMatrix, DVector};

use super::svr::{DualSolution, SvrConfig};

const STEP_FRACTION: f64 = 0.99;

struct Direction {
    beta: Vec<f64>,
    b: f64,
    xi: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
    l3: Vec<f64>,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Largest step in `(0, inf)` keeping `x + a dx >= 0`.
fn max_step(x: &[f64], dx: &[f64], limit: f64) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -v / d)
        .fold(limit, f64::min)
}

fn residuals(k: &DMatrix<f64>, y: &[f64], beta: &[f64], b: f64) -> Vec<f64> {
    let kb = k * DVector::from_column_slice(beta);
    y.iter().zip(kb.iter()).map(|(yi, f)| yi - f - b).collect()
}

/// `(primal, gap)` for a dual-feasible `beta` and bias `b`.
fn primal_and_gap(
    k: &DMatrix<f64>,
    y: &[f64],
    beta: &[f64],
    b: f64,
    c: f64,
    eps: f64,
) -> (f64, f64) {
    let r = residuals(k, y, beta, b);
    let bv = DVector::from_column_slice(beta);
    let wsq = bv.dot(&(k * &bv));
    let mut loss = 0.0;
    let mut gap = 0.0;
    for (ri, bi) in r.iter().zip(beta) {
        let l = (ri.abs() - eps).max(0.0);
        loss += l;
        gap += c * l - bi * ri + eps * bi.abs();
    }
    (0.5 * wsq + c * loss, gap.max(0.0))
}

fn factor(k: &DMatrix<f64>, h: &[f64]) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let scale = 1.0 + k.diagonal().amax();
    let mut jitter = 0.0;
    for _ in 0..8 {
        let mut g = k.clone();
        for (i, hi) in h.iter().enumerate() {
            g[(i, i)] += 1.0 / hi + jitter;
        }
        if let Some(ch) = g.cholesky() {
            return Some(ch);
        }
        jitter = if jitter == 0.0 {
            1e-14 * scale
        } else {
            jitter * 100.0
        };
    }
    None
}

pub(super) fn solve_interior_point(
    gram: &ndarray::Array2<f64>,
    y: &[f64],
    cfg: &SvrConfig,
) -> DualSolution {
    let n = y.len();
    let (c, eps) = (cfg.c, cfg.epsilon);
    let k = DMatrix::from_fn(n, n, |i, j| gram[[i, j]]);

    let mut b = median(y);
    let mut xi: Vec<f64> = y
        .iter()
        .map(|yi| ((yi - b).abs() - eps).max(0.0) + 1.0)
        .collect();
    let mut s1: Vec<f64> = y
        .iter()
        .zip(&xi)
        .map(|(yi, x)| eps + x - (yi - b))
        .collect();
    let mut s2: Vec<f64> = y
        .iter()
        .zip(&xi)
        .map(|(yi, x)| eps + x + (yi - b))
        .collect();
    let mut l1 = vec![c / 3.0; n];
    let mut l2 = vec![c / 3.0; n];
    let mut l3 = vec![c / 3.0; n];
    let beta_of =
        |l1: &[f64], l2: &[f64]| -> Vec<f64> { l1.iter().zip(l2).map(|(a, b)| a - b).collect() };

    let mut iterations = 0;
    let mut converged = false;
    let mut violation;
    loop {
        let beta = beta_of(&l1, &l2);
        let (primal, gap) = primal_and_gap(&k, y, &beta, b, c, eps);
        violation = gap / primal.abs().max(1.0);
        if violation <= cfg.tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        let d1: Vec<f64> = (0..n).map(|i| l1[i] / s1[i]).collect();
        let d2: Vec<f64> = (0..n).map(|i| l2[i] / s2[i]).collect();
        let d3: Vec<f64> = (0..n).map(|i| l3[i] / xi[i]).collect();
        let dsum: Vec<f64> = (0..n).map(|i| d1[i] + d2[i] + d3[i]).collect();
        let h: Vec<f64> = (0..n)
            .map(|i| (4.0 * d1[i] * d2[i] + d3[i] * (d1[i] + d2[i])) / dsum[i])
            .collect();
        let Some(chol) = factor(&k, &h) else {
            break;
        };
        let q = chol.solve(&DVector::from_element(n, 1.0));
        let q_sum = q.sum();

        let direction = |c1: &[f64], c2: &[f64], c3: &[f64]| -> Direction {
            let mut e = vec![0.0; n];
            let mut g = vec![0.0; n];
            for i in 0..n {
                let (a1, a2, a3) = (c1[i] / s1[i], c2[i] / s2[i], c3[i] / xi[i]);
                e[i] = (a1 + a2 + a3) / dsum[i];
                g[i] = a1 - a2 - (d1[i] - d2[i]) * e[i];
            }
            let v = chol.solve(&DVector::from_iterator(n, (0..n).map(|i| g[i] / h[i])));
            let db = v.sum() / q_sum;
            let u: Vec<f64> = (0..n).map(|i| v[i] - db * q[i]).collect();
            let mut dir = Direction {
                beta: u,
                b: db,
                xi: vec![0.0; n],
                s1: vec![0.0; n],
                s2: vec![0.0; n],
                l1: vec![0.0; n],
                l2: vec![0.0; n],
                l3: vec![0.0; n],
            };
            for i in 0..n {
                let dr = (dir.beta[i] - g[i]) / h[i];
                let dxi = e[i] + (d1[i] - d2[i]) / dsum[i] * dr;
                dir.xi[i] = dxi;
                dir.s1[i] = dxi - dr;
                dir.s2[i] = dxi + dr;
                dir.l1[i] = c1[i] / s1[i] - d1[i] * dir.s1[i];
                dir.l2[i] = c2[i] / s2[i] - d2[i] * dir.s2[i];
                dir.l3[i] = c3[i] / xi[i] - d3[i] * dxi;
            }
            dir
        };
        let step_of = |d: &Direction| -> f64 {
            let mut a = f64::INFINITY;
            for (x, dx) in [
                (&s1, &d.s1),
                (&s2, &d.s2),
                (&xi, &d.xi),
                (&l1, &d.l1),
                (&l2, &d.l2),
                (&l3, &d.l3),
            ] {
                a = max_step(x, dx, a);
            }
            a
        };

        let mu = (0..n)
            .map(|i| l1[i] * s1[i] + l2[i] * s2[i] + l3[i] * xi[i])
            .sum::<f64>()
            / (3 * n) as f64;
        let neg =
            |l: &[f64], s: &[f64]| -> Vec<f64> { l.iter().zip(s).map(|(a, b)| -a * b).collect() };
        let aff = direction(&neg(&l1, &s1), &neg(&l2, &s2), &neg(&l3, &xi));
        let a_aff = step_of(&aff).min(1.0);
        let mu_aff = (0..n)
            .map(|i| {
                (l1[i] + a_aff * aff.l1[i]) * (s1[i] + a_aff * aff.s1[i])
                    + (l2[i] + a_aff * aff.l2[i]) * (s2[i] + a_aff * aff.s2[i])
                    + (l3[i] + a_aff * aff.l3[i]) * (xi[i] + a_aff * aff.xi[i])
            })
            .sum::<f64>()
            / (3 * n) as f64;
        let sigma = (mu_aff / mu).powi(3).min(1.0);
        let target = sigma * mu;
        let corr = |l: &[f64], s: &[f64], dl: &[f64], ds: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| target - l[i] * s[i] - dl[i] * ds[i])
                .collect()
        };
        let dir = direction(
            &corr(&l1, &s1, &aff.l1, &aff.s1),
            &corr(&l2, &s2, &aff.l2, &aff.s2),
            &corr(&l3, &xi, &aff.l3, &aff.xi),
        );
        let alpha = (STEP_FRACTION * step_of(&dir)).min(1.0);
        if !(alpha > 0.0) {
            break;
        }
        b += alpha * dir.b;
        for i in 0..n {
            xi[i] += alpha * dir.xi[i];
            s1[i] += alpha * dir.s1[i];
            s2[i] += alpha * dir.s2[i];
            l1[i] += alpha * dir.l1[i];
            l2[i] += alpha * dir.l2[i];
            l3[i] += alpha * dir.l3[i];
        }
    }

    let beta = beta_of(&l1, &l2);
    if converged && iterations > 0 {
        let sides: Vec<Side> = (0..n)
            .map(|i| classify(s1[i] < l1[i], s2[i] < l2[i], xi[i] < l3[i]))
            .collect();
        if let Some((snapped, sb)) = snap_to_active_set(&k, y, &sides, c, eps) {
            let (primal, gap) = primal_and_gap(&k, y, &snapped, sb, c, eps);
            let (old_primal, _) = primal_and_gap(&k, y, &beta, b, c, eps);
            if primal <= old_primal + 1e-12 * old_primal.abs().max(1.0) {
                return DualSolution {
                    beta: snapped,
                    bias: sb,
                    iterations,
                    converged,
                    violation: gap / primal.abs().max(1.0),
                };
            }
        }
    }
    DualSolution {
        beta,
        bias: b,
        iterations,
        converged,
        violation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Side {
    Inside,
    /// On the tube edge with multiplier sign `+1` (above) or `-1` (below).
    Edge(f64),
    /// Outside the tube with `|beta| = C`.
    Bound(f64),
}

fn classify(upper: bool, lower: bool, no_slack: bool) -> Side {
    let sign = match (upper, lower) {
        (false, false) => return Side::Inside,
        (true, false) => 1.0,
        (false, true) => -1.0,
        // both edges only meet when eps = 0; the slack decides
        (true, true) => return Side::Edge(0.0),
    };
    if no_slack {
        Side::Edge(sign)
    } else {
        Side::Bound(sign)
    }
}

/// Solves the tube-edge equations for the free multipliers and the bias,
/// then checks every sample against its assumed side.
fn snap_to_active_set(
    k: &DMatrix<f64>,
    y: &[f64],
    sides: &[Side],
    c: f64,
    eps: f64,
) -> Option<(Vec<f64>, f64)> {
    let n = y.len();
    let free: Vec<usize> = (0..n)
        .filter(|&i| matches!(sides[i], Side::Edge(_)))
        .collect();
    if free.is_empty() {
        return None;
    }
    let mut beta = vec![0.0; n];
    for (i, s) in sides.iter().enumerate() {
        if let Side::Bound(sign) = s {
            beta[i] = sign * c;
        }
    }
    let bound_sum: f64 = beta.iter().sum();
    let kb = k * DVector::from_column_slice(&beta);

    let m = free.len();
    let mut a = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = DVector::zeros(m + 1);
    for (p, &i) in free.iter().enumerate() {
        for (q, &j) in free.iter().enumerate() {
            a[(p, q)] = k[(i, j)];
        }
        a[(p, m)] = 1.0;
        a[(m, p)] = 1.0;
        let Side::Edge(sign) = sides[i] else {
            unreachable!()
        };
        rhs[p] = y[i] - sign * eps - kb[i];
    }
    rhs[m] = -bound_sum;
    let sol = a.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    for (p, &i) in free.iter().enumerate() {
        beta[i] = sol[p];
    }
    let b = sol[m];

    let scale = y.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-9 * scale;
    let r = residuals(k, y, &beta, b);
    for i in 0..n {
        let ok = match sides[i] {
            Side::Inside => r[i].abs() <= eps + tol,
            Side::Bound(sign) => sign * r[i] >= eps - tol,
            Side::Edge(sign) => {
                let sign = if sign == 0.0 { beta[i].signum() } else { sign };
                sign * beta[i] >= -1e-12 * c && beta[i].abs() <= c * (1.0 + 1e-12)
            }
        };
        if !ok {
            return None;
        }
    }
    for (i, s) in sides.iter().enumerate() {
        if matches!(s, Side::Edge(_)) {
            beta[i] = beta[i].clamp(-c, c);
        }
    }
    Some((beta, b))
}
