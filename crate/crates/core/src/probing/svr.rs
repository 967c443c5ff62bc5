//! Linear epsilon-insensitive support vector regression with an unregularized
//! bias.
//!
//! The default solver is the interior-point method in the sibling module.
//! The SMO path below solves the dual, which keeps the two multiplier
//! blocks `alpha` and `alpha*` stacked in one vector `a` of length `2n`
//! with signs `s = (+1, .., -1, ..)`:
//!
//! ```text
//! min  1/2 a' Q a + p' a,   Q_tu = s_t s_u K(t mod n, u mod n)
//!      p = (eps - y, eps + y)
//! s.t. s' a = 0,  0 <= a <= C
//! ```
//!
//! Each SMO step updates two coordinates chosen by second-order working-set
//! selection and clips the analytic step to the box. The stopping measure is
//! the maximal KKT violation `m(a) - M(a)`. Ties in the selection go to the
//! lowest index, so a fit is a pure function of its inputs.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::ipm::solve_interior_point;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// Only the linear kernel is implemented.
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub standardize: bool,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default)]
    pub solver: SvrSolver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SvrSolver {
    /// Mehrotra predictor-corrector on the primal, finished by an active-set
    /// snap. Takes a few dozen `n x n` factorizations.
    #[default]
    InteriorPoint,
    /// Pairwise dual coordinate descent. Needs many iterations once most
    /// samples sit on the tube edge.
    Smo,
}

impl Default for SvrConfig {
    fn default() -> Self {
        SvrConfig {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-4,
            max_iter: 100_000,
            standardize: true,
            kernel: Kernel::Linear,
            solver: SvrSolver::InteriorPoint,
        }
    }
}

impl SvrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "C must be > 0, got {}",
                self.c
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Per-column affine map applied before fitting. A zero scale marks a
/// constant column, which is mapped to all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut scales = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            means.push(mean);
            // relative cutoff so that columns equal up to rounding count as constant
            scales.push(if sd > 1e-12 * (1.0 + mean.abs()) {
                sd
            } else {
                0.0
            });
        }
        Standardizer { means, scales }
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.means[j], self.scales[j]);
            col.mapv_inplace(|v| if s > 0.0 { (v - m) / s } else { 0.0 });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    /// Weights in the (possibly standardized) training space.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub dual_coefs: Vec<f64>,
    /// Primal objective `1/2 |w|^2 + C sum xi_i` at the returned `(w, b)`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Stopping measure at exit: the relative duality gap for the
    /// interior-point solver, the largest pairwise KKT violation for SMO.
    pub max_violation: f64,
    pub standardizer: Option<Standardizer>,
}

impl SvrModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let z = match &self.standardizer {
            Some(s) => s.transform(x),
            None => x.to_owned(),
        };
        let w = Array1::from(self.weights.clone());
        z.dot(&w).iter().map(|v| v + self.bias).collect()
    }

    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                violation: self.max_violation,
            })
        }
    }
}

/// Squared-weight feature scores.
pub fn svr_feature_scores(model: &SvrModel) -> Vec<f64> {
    model.weights.iter().map(|w| w * w).collect()
}

/// Fits the linear epsilon-SVR. A run that hits `max_iter` is returned with
/// `converged == false` rather than discarded.
pub fn train_epsilon_svr(x: ArrayView2<'_, f64>, y: &[f64], cfg: &SvrConfig) -> Result<SvrModel> {
    cfg.validate()?;
    let (n, m) = x.dim();
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if m == 0 {
        return Err(Error::DegenerateInput("no feature columns".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for {n} rows",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite input".into()));
    }

    let standardizer = cfg.standardize.then(|| Standardizer::fit(x));
    let z = match &standardizer {
        Some(s) => s.transform(x),
        None => x.to_owned(),
    };
    let gram = z.dot(&z.t());

    let solution = match cfg.solver {
        SvrSolver::InteriorPoint => solve_interior_point(&gram, y, cfg),
        SvrSolver::Smo => solve_dual(&gram, y, cfg),
    };
    let beta = Array1::from(solution.beta.clone());
    let weights = z.t().dot(&beta).to_vec();

    let fitted = z.dot(&Array1::from(weights.clone()));
    let residuals: Vec<f64> = y
        .iter()
        .zip(fitted.iter())
        .map(|(yi, fi)| yi - fi)
        .collect();
    let bias = refine_bias(&residuals, cfg.c, cfg.epsilon, solution.bias);
    let slack: f64 = residuals
        .iter()
        .map(|r| ((r - bias).abs() - cfg.epsilon).max(0.0))
        .sum();
    let objective = 0.5 * weights.iter().map(|w| w * w).sum::<f64>() + cfg.c * slack;

    Ok(SvrModel {
        weights,
        bias,
        dual_coefs: solution.beta,
        objective,
        iterations: solution.iterations,
        converged: solution.converged,
        max_violation: solution.violation,
        standardizer,
    })
}

pub(super) struct DualSolution {
    pub(super) beta: Vec<f64>,
    pub(super) bias: f64,
    pub(super) iterations: usize,
    pub(super) converged: bool,
    pub(super) violation: f64,
}

/// Curvature floor for pairs whose kernel distance vanishes.
const TAU: f64 = 1e-12;

fn solve_dual(gram: &Array2<f64>, y: &[f64], cfg: &SvrConfig) -> DualSolution {
    let n = y.len();
    let (c, eps) = (cfg.c, cfg.epsilon);
    let len = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let k = |t: usize, u: usize| gram[[t % n, u % n]];

    let mut a = vec![0.0; len];
    let mut grad: Vec<f64> = (0..len)
        .map(|t| if t < n { eps - y[t] } else { eps + y[t - n] })
        .collect();

    let mut iterations = 0;
    let mut violation;
    let mut converged = false;
    loop {
        // i maximizes -s_t G_t over coordinates that may move up along s
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..len {
            let movable = if t < n { a[t] < c } else { a[t] > 0.0 };
            if movable && -sign(t) * grad[t] > g_max {
                g_max = -sign(t) * grad[t];
                i = t;
            }
        }
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..len {
            let movable = if t < n { a[t] > 0.0 } else { a[t] < c };
            if !movable {
                continue;
            }
            let v = sign(t) * grad[t];
            if v > g_max2 {
                g_max2 = v;
            }
            let diff = g_max + v;
            if i != usize::MAX && diff > 0.0 {
                let quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
                let gain = -diff * diff / if quad > 0.0 { quad } else { TAU };
                if gain < best_gain {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        violation = (g_max + g_max2).max(0.0);
        if violation <= cfg.tol || j == usize::MAX {
            converged = violation <= cfg.tol;
            break;
        }
        if iterations == cfg.max_iter {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (a[i], a[j]);
        let kij = k(i, j);
        if sign(i) != sign(j) {
            let quad = k(i, i) + k(j, j) + 2.0 * sign(i) * sign(j) * kij;
            let delta = (-grad[i] - grad[j]) / if quad > 0.0 { quad } else { TAU };
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let quad = k(i, i) + k(j, j) - 2.0 * kij;
            let delta = (grad[i] - grad[j]) / if quad > 0.0 { quad } else { TAU };
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }

        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        for t in 0..len {
            grad[t] += sign(t) * (sign(i) * k(t, i) * di + sign(j) * k(t, j) * dj);
        }
    }

    // bias from free multipliers, else the midpoint of the feasible range
    let (mut free_sum, mut free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..len {
        let yg = sign(t) * grad[t];
        if a[t] >= c {
            if t < n {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if a[t] <= 0.0 {
            if t < n {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free += 1;
        }
    }
    let r = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };

    DualSolution {
        beta: (0..n).map(|t| a[t] - a[t + n]).collect(),
        bias: -r,
        iterations,
        converged,
        violation,
    }
}

/// Picks the bias minimizing `C sum max(0, |r_i - b| - eps)`, preferring the
/// KKT estimate when it is already optimal.
fn refine_bias(residuals: &[f64], c: f64, eps: f64, guess: f64) -> f64 {
    let loss = |b: f64| -> f64 {
        c * residuals
            .iter()
            .map(|r| ((r - b).abs() - eps).max(0.0))
            .sum::<f64>()
    };
    let at_guess = loss(guess);
    let mut best = (at_guess, guess);
    for r in residuals {
        for cand in [r - eps, r + eps] {
            let l = loss(cand);
            let closer = (cand - guess).abs() < (best.1 - guess).abs();
            if l < best.0 - 1e-12 * (1.0 + best.0) || (l <= best.0 && closer) {
                best = (l, cand);
            }
        }
    }
    if at_guess <= best.0 + 1e-12 * (1.0 + best.0) {
        guess
    } else {
        best.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn raw(c: f64, epsilon: f64) -> SvrConfig {
        SvrConfig {
            c,
            epsilon,
            tol: 1e-9,
            standardize: false,
            ..SvrConfig::default()
        }
    }

    /// Dense grid over (w, b) for the 1-feature case.
    fn grid_objective(x: &[f64], y: &[f64], c: f64, eps: f64) -> (f64, f64, f64) {
        let obj = |w: f64, b: f64| {
            0.5 * w * w
                + c * x
                    .iter()
                    .zip(y)
                    .map(|(xi, yi)| ((yi - w * xi - b).abs() - eps).max(0.0))
                    .sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for iw in 0..=4000 {
            let w = -1.0 + iw as f64 * 0.001;
            for ib in 0..=1000 {
                let b = -0.5 + ib as f64 * 0.001;
                let v = obj(w, b);
                if v < best.0 {
                    best = (v, w, b);
                }
            }
        }
        best
    }

    #[test]
    fn two_point_problem_shrinks_slope_into_tube() {
        let x = array![[0.0], [1.0]];
        let y = [0.0, 2.0];
        let model = train_epsilon_svr(x.view(), &y, &raw(1e3, 0.1)).unwrap();
        let (grid_obj, grid_w, grid_b) = grid_objective(&[0.0, 1.0], &y, 1e3, 0.1);
        // frozen from the grid: w = 1.8, b = 0.1, objective = 1.62
        assert!((grid_w - 1.8).abs() < 1e-9 && (grid_b - 0.1).abs() < 1e-9);
        assert!((model.weights[0] - 1.8).abs() < 1e-6, "{:?}", model.weights);
        assert!((model.bias - 0.1).abs() < 1e-6);
        assert!((model.objective - grid_obj).abs() < 1e-4);
        for (p, yi) in model.predict(x.view()).iter().zip(y) {
            assert!((yi - p).abs() <= 0.1 + 1e-6);
        }
    }

    #[test]
    fn constant_target_gives_zero_weights() {
        let x = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [2.0, 2.0]];
        let y = [2.5; 4];
        let model = train_epsilon_svr(x.view(), &y, &SvrConfig::default()).unwrap();
        assert!(model.weights.iter().all(|&w| w == 0.0));
        assert_eq!(model.bias, 2.5);
        assert_eq!(model.objective, 0.0);
        assert!(model.converged);
    }

    #[test]
    fn scores_are_squared_weights() {
        let model = SvrModel {
            weights: vec![3.0, -4.0],
            bias: 0.0,
            dual_coefs: vec![],
            objective: 0.0,
            iterations: 0,
            converged: true,
            max_violation: 0.0,
            standardizer: None,
        };
        assert_eq!(svr_feature_scores(&model), vec![9.0, 16.0]);
    }

    #[test]
    fn kkt_conditions_hold_at_convergence() {
        let x = array![
            [0.3, -1.2, 0.8],
            [1.5, 0.4, -0.3],
            [-0.7, 0.9, 1.1],
            [0.2, 0.2, -1.4],
            [1.1, -0.6, 0.5],
            [-1.3, 1.7, 0.0]
        ];
        let y = [1.0, -0.5, 2.0, 0.3, 0.9, -1.2];
        let cfg = raw(10.0, 0.1);
        let model = train_epsilon_svr(x.view(), &y, &cfg).unwrap();
        assert!(model.converged);
        let sum: f64 = model.dual_coefs.iter().sum();
        assert!(sum.abs() < 1e-9);
        let pred = model.predict(x.view());
        let tol = 1e-6;
        for ((beta, p), yi) in model.dual_coefs.iter().zip(&pred).zip(y) {
            let r = yi - p;
            if r.abs() < cfg.epsilon - tol {
                assert!(beta.abs() < 1e-9, "inside tube but beta = {beta}");
            }
            if beta.abs() >= cfg.c {
                assert!(r.abs() >= cfg.epsilon - tol);
                assert_eq!(beta.signum(), r.signum());
            }
            if beta.abs() > 1e-9 && beta.abs() < cfg.c {
                assert!(
                    (r.abs() - cfg.epsilon).abs() < tol,
                    "free point off the tube edge"
                );
            }
        }
    }

    #[test]
    fn constant_column_gets_zero_weight_when_standardized() {
        let x = array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [4.0, 5.0]];
        let y = [0.0, 0.0, 1.0, 1.0];
        let model = train_epsilon_svr(x.view(), &y, &SvrConfig::default()).unwrap();
        assert_eq!(model.weights[1], 0.0);
        assert!(model.weights[0] > 0.0);
    }

    #[test]
    fn rejects_degenerate_input_and_bad_config() {
        let x = array![[1.0]];
        assert!(matches!(
            train_epsilon_svr(x.view(), &[1.0], &SvrConfig::default()),
            Err(Error::DegenerateInput(_))
        ));
        let x = array![[1.0], [2.0]];
        let bad = SvrConfig {
            c: 0.0,
            ..SvrConfig::default()
        };
        assert!(matches!(
            train_epsilon_svr(x.view(), &[1.0, 2.0], &bad),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn iteration_cap_flags_model() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [0.0, 1.0, 3.0, 2.0];
        let cfg = SvrConfig {
            max_iter: 1,
            ..raw(100.0, 0.0)
        };
        let model = train_epsilon_svr(x.view(), &y, &cfg).unwrap();
        assert!(!model.converged);
        assert!(matches!(
            model.ensure_converged(),
            Err(Error::NotConverged { iterations: 1, .. })
        ));
    }
}
