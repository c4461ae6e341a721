//! Lasso by coordinate descent on standardized features.
//!
//! Each path is solved from the null-model penalty downwards with warm
//! starts. Features are standardized to zero mean and unit (population)
//! variance, the response is centered, and coefficients are mapped back to
//! the original scale on output. Gram columns are formed lazily, only for
//! features that enter the active set.

use serde::{Deserialize, Serialize};

use super::folds::fold_assignment;
use super::spec::{LambdaRule, LassoParams};
use crate::data::{Dataset, Matrix};
use crate::error::{contract, ErpxError, Result};
use crate::scalar::Real;
use crate::seed::RngSeed;

/// One point of a solved path, on the original feature scale.
#[derive(Clone, Debug, PartialEq)]
pub struct LassoFit<T> {
    pub lambda: T,
    pub intercept: T,
    pub coefficients: Vec<T>,
    pub sweeps: usize,
    pub converged: bool,
}

/// A Lasso fit at one selected penalty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoModel<T> {
    pub lambda: T,
    pub intercept: T,
    /// Aligned with the feature subset the model was trained on.
    pub coefficients: Vec<T>,
}

impl<T: Real> LassoModel<T> {
    pub fn predict_row(&self, row: impl Iterator<Item = T>) -> T {
        self.coefficients
            .iter()
            .zip(row)
            .fold(self.intercept, |acc, (&b, x)| acc + b * x)
    }
}

pub(crate) struct Standardized<T> {
    n: usize,
    p: usize,
    z: Vec<T>,
    mean: Vec<T>,
    scale: Vec<T>,
    y_mean: T,
    y_sd: T,
    xty: Vec<T>,
    diag: Vec<T>,
}

impl<T: Real> Standardized<T> {
    /// Standardizes the given columns over `rows` (all rows when `None`).
    pub(crate) fn new(cols: &[&[T]], y: &[T], rows: Option<&[usize]>) -> Self {
        let n = rows.map_or(y.len(), <[usize]>::len);
        let p = cols.len();
        let nt = T::of_usize(n);
        let gather = |src: &[T], dst: &mut Vec<T>| match rows {
            Some(r) => dst.extend(r.iter().map(|&i| src[i])),
            None => dst.extend_from_slice(src),
        };
        let mut yc = Vec::with_capacity(n);
        gather(y, &mut yc);
        let y_mean = yc.iter().copied().sum::<T>() / nt;
        for v in &mut yc {
            *v = *v - y_mean;
        }
        let y_sd = (yc.iter().map(|&v| v * v).sum::<T>() / nt).sqrt();

        let mut z = Vec::with_capacity(n * p);
        let mut mean = Vec::with_capacity(p);
        let mut scale = Vec::with_capacity(p);
        let mut xty = Vec::with_capacity(p);
        let mut diag = Vec::with_capacity(p);
        let tiny = T::epsilon() * T::of(1e3);
        for col in cols {
            let start = z.len();
            gather(col, &mut z);
            let c = &mut z[start..];
            let m = c.iter().copied().sum::<T>() / nt;
            let mut ss = T::zero();
            let mut amax = T::zero();
            for v in c.iter_mut() {
                amax = amax.max(v.abs());
                *v = *v - m;
                ss = ss + *v * *v;
            }
            let sd = (ss / nt).sqrt();
            if sd <= tiny * amax.max(T::min_positive_value()) {
                c.iter_mut().for_each(|v| *v = T::zero());
                mean.push(m);
                scale.push(T::zero());
                xty.push(T::zero());
                diag.push(T::zero());
                continue;
            }
            let mut d = T::zero();
            let mut g = T::zero();
            for (v, &r) in c.iter_mut().zip(&yc) {
                *v = *v / sd;
                d = d + *v * *v;
                g = g + *v * r;
            }
            mean.push(m);
            scale.push(sd);
            xty.push(g / nt);
            diag.push(d / nt);
        }
        Standardized {
            n,
            p,
            z,
            mean,
            scale,
            y_mean,
            y_sd,
            xty,
            diag,
        }
    }

    #[inline]
    fn zcol(&self, j: usize) -> &[T] {
        &self.z[j * self.n..(j + 1) * self.n]
    }

    /// Smallest penalty at which every slope is zero.
    pub(crate) fn lambda_max(&self) -> T {
        self.xty.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    fn to_original(&self, b: &[T]) -> (T, Vec<T>) {
        let mut intercept = self.y_mean;
        let coefs = b
            .iter()
            .zip(&self.scale)
            .zip(&self.mean)
            .map(|((&bj, &s), &m)| {
                if s == T::zero() {
                    T::zero()
                } else {
                    let beta = bj / s;
                    intercept = intercept - beta * m;
                    beta
                }
            })
            .collect();
        (intercept, coefs)
    }
}

struct CdState<T> {
    b: Vec<T>,
    q: Vec<T>,
    gram: Vec<Option<Vec<T>>>,
    active: Vec<usize>,
    in_active: Vec<bool>,
}

#[inline]
fn soft_threshold<T: Real>(v: T, lambda: T) -> T {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        T::zero()
    }
}

impl<T: Real> CdState<T> {
    fn new(p: usize) -> Self {
        CdState {
            b: vec![T::zero(); p],
            q: vec![T::zero(); p],
            gram: vec![None; p],
            active: Vec::new(),
            in_active: vec![false; p],
        }
    }

    fn gram_col<'a>(gram: &'a mut [Option<Vec<T>>], prob: &Standardized<T>, j: usize) -> &'a [T] {
        gram[j].get_or_insert_with(|| {
            let zj = prob.zcol(j);
            let nt = T::of_usize(prob.n);
            (0..prob.p)
                .map(|k| {
                    prob.zcol(k)
                        .iter()
                        .zip(zj)
                        .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
                        / nt
                })
                .collect()
        })
    }

    #[inline]
    fn update(&mut self, prob: &Standardized<T>, j: usize, lambda: T) -> T {
        let d = prob.diag[j];
        if d == T::zero() {
            return T::zero();
        }
        let bj = self.b[j];
        let g = prob.xty[j] - self.q[j] + d * bj;
        let new = soft_threshold(g, lambda) / d;
        let delta = new - bj;
        if delta == T::zero() {
            return T::zero();
        }
        let col = Self::gram_col(&mut self.gram, prob, j);
        for (q, &g) in self.q.iter_mut().zip(col) {
            *q = *q + delta * g;
        }
        self.b[j] = new;
        if !self.in_active[j] {
            self.in_active[j] = true;
            self.active.push(j);
        }
        d * delta * delta
    }

    /// Runs coordinate descent at one penalty; returns (sweeps, converged).
    fn solve(&mut self, prob: &Standardized<T>, lambda: T, tol: T, max_iters: usize) -> (usize, bool) {
        let thr = if prob.y_sd > T::zero() { tol * prob.y_sd * prob.y_sd } else { tol };
        let mut sweeps = 0;
        loop {
            let mut max_delta = T::zero();
            for j in 0..prob.p {
                max_delta = max_delta.max(self.update(prob, j, lambda));
            }
            sweeps += 1;
            if max_delta <= thr {
                return (sweeps, true);
            }
            loop {
                if sweeps >= max_iters {
                    return (sweeps, false);
                }
                let mut max_delta = T::zero();
                for idx in 0..self.active.len() {
                    let j = self.active[idx];
                    max_delta = max_delta.max(self.update(prob, j, lambda));
                }
                sweeps += 1;
                if max_delta <= thr {
                    break;
                }
            }
            if sweeps >= max_iters {
                return (sweeps, false);
            }
        }
    }
}

/// Walks a penalty path with warm starts, handing each solution to `visit`.
fn run_path<T: Real>(
    prob: &Standardized<T>,
    lambdas: &[T],
    params: &LassoParams,
    mut visit: impl FnMut(usize, &[T], usize, bool),
) {
    let mut state = CdState::new(prob.p);
    let tol = T::of(params.convergence_tol);
    for (idx, &lambda) in lambdas.iter().enumerate() {
        let (sweeps, converged) = state.solve(prob, lambda, tol, params.max_iters);
        if !converged {
            log::warn!("lasso: coordinate descent hit max_iters at lambda={lambda}");
        }
        visit(idx, &state.b, sweeps, converged);
    }
}

/// `len` log-spaced penalties from `lambda_max` down to `ratio * lambda_max`.
/// A non-positive `lambda_max` yields the single penalty 0 (intercept-only).
pub fn lambda_grid<T: Real>(lambda_max: T, len: usize, ratio: f64) -> Vec<T> {
    if lambda_max <= T::zero() || len == 0 {
        return vec![T::zero()];
    }
    if len == 1 {
        return vec![lambda_max];
    }
    let log_ratio = T::of(ratio).ln();
    (0..len)
        .map(|k| lambda_max * (log_ratio * T::of_usize(k) / T::of_usize(len - 1)).exp())
        .collect()
}

fn check_lambdas<T: Real>(lambdas: &[T]) -> Result<()> {
    contract!(!lambdas.is_empty(), "empty penalty sequence");
    contract!(
        lambdas.iter().all(|&l| l >= T::zero() && l.is_finite()),
        "penalties must be finite and non-negative"
    );
    contract!(
        lambdas.windows(2).all(|w| w[0] > w[1]),
        "penalties must be strictly descending"
    );
    Ok(())
}

/// Solves the Lasso at each penalty in `lambdas` (strictly descending, ≥ 0)
/// for the columns of `x`, minimizing `(1/2n)‖y − β₀ − Xβ‖² + λ‖β‖₁` with the
/// penalty applied to standardized coefficients.
pub fn solve_lasso_path<T: Real>(
    x: &Matrix<T>,
    y: &[T],
    lambdas: &[T],
    params: &LassoParams,
) -> Result<Vec<LassoFit<T>>> {
    contract!(x.n_rows() == y.len(), "design has {} rows, response {}", x.n_rows(), y.len());
    contract!(!y.is_empty(), "empty response");
    check_lambdas(lambdas)?;
    if y.iter().any(|v| !v.is_finite()) || x.columns().flatten().any(|v| !v.is_finite()) {
        return Err(ErpxError::Data("non-finite value in lasso input".into()));
    }
    let cols: Vec<&[T]> = x.columns().collect();
    let prob = Standardized::new(&cols, y, None);
    let mut out = Vec::with_capacity(lambdas.len());
    run_path(&prob, lambdas, params, |idx, b, sweeps, converged| {
        let (intercept, coefficients) = prob.to_original(b);
        out.push(LassoFit {
            lambda: lambdas[idx],
            intercept,
            coefficients,
            sweeps,
            converged,
        });
    });
    Ok(out)
}

/// Fits on `train` rows, choosing the penalty by an inner K-fold CV over a
/// log-spaced path and the configured selection rule.
pub(crate) fn fit_lasso_cv_rows<T: Real>(
    cols: &[&[T]],
    y: &[T],
    train: &[usize],
    params: &LassoParams,
    seed: RngSeed,
) -> Result<LassoModel<T>> {
    let full = Standardized::new(cols, y, Some(train));
    let lambda_max = full.lambda_max();
    if !(lambda_max > T::zero()) {
        let (intercept, coefficients) = full.to_original(&vec![T::zero(); cols.len()]);
        return Ok(LassoModel {
            lambda: T::zero(),
            intercept,
            coefficients,
        });
    }
    let grid = lambda_grid(lambda_max, params.path_length, params.lambda_min_ratio);
    let k = params.n_folds.min(train.len());
    if k < 2 {
        return Err(ErpxError::Data(format!(
            "inner cross-validation needs at least 2 training rows, got {}",
            train.len()
        )));
    }
    let folds = fold_assignment(train.len(), k, seed);
    let n_l = grid.len();
    let mut fold_sum = vec![vec![T::zero(); n_l]; k];
    let mut fold_count = vec![0usize; k];
    for fold in 0..k {
        let (fit_rows, held): (Vec<usize>, Vec<usize>) = {
            let mut fit_rows = Vec::new();
            let mut held = Vec::new();
            for (pos, &row) in train.iter().enumerate() {
                if folds[pos] == fold {
                    held.push(row);
                } else {
                    fit_rows.push(row);
                }
            }
            (fit_rows, held)
        };
        fold_count[fold] = held.len();
        let prob = Standardized::new(cols, y, Some(&fit_rows));
        let sums = &mut fold_sum[fold];
        run_path(&prob, &grid, params, |idx, b, _, _| {
            let (b0, beta) = prob.to_original(b);
            let nz: Vec<(usize, T)> = beta
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != T::zero())
                .map(|(j, &v)| (j, v))
                .collect();
            let mut s = T::zero();
            for &row in &held {
                let pred = nz.iter().fold(b0, |acc, &(j, v)| acc + v * cols[j][row]);
                let e = y[row] - pred;
                s = s + e * e;
            }
            sums[idx] = s;
        });
    }
    let n_tot = T::of_usize(train.len());
    let cvm: Vec<T> = (0..n_l)
        .map(|l| fold_sum.iter().map(|s| s[l]).sum::<T>() / n_tot)
        .collect();
    let best = (0..n_l).fold(0, |b, l| if cvm[l] < cvm[b] { l } else { b });
    let chosen = match params.lambda_rule {
        LambdaRule::Min => best,
        LambdaRule::OneSe => {
            let var = (0..k)
                .filter(|&f| fold_count[f] > 0)
                .map(|f| {
                    let m = fold_sum[f][best] / T::of_usize(fold_count[f]);
                    T::of_usize(fold_count[f]) * (m - cvm[best]) * (m - cvm[best])
                })
                .sum::<T>()
                / n_tot
                / T::of_usize(k - 1);
            let bound = cvm[best] + var.sqrt();
            (0..=best).find(|&l| cvm[l] <= bound).unwrap_or(best)
        }
    };
    let mut model = None;
    run_path(&full, &grid[..=chosen], params, |idx, b, _, _| {
        if idx == chosen {
            let (intercept, coefficients) = full.to_original(b);
            model = Some(LassoModel {
                lambda: grid[chosen],
                intercept,
                coefficients,
            });
        }
    });
    Ok(model.expect("path visits the chosen penalty"))
}

/// Lasso on `subset` over all rows with the penalty chosen by inner CV.
pub fn fit_lasso_cv<T: Real>(
    data: &Dataset<T>,
    subset: &[usize],
    params: &LassoParams,
    seed: RngSeed,
) -> Result<LassoModel<T>> {
    contract!(!subset.is_empty(), "empty feature subset");
    contract!(subset.iter().all(|&j| j < data.n_features()), "feature index out of range");
    data.require_fittable()?;
    let cols: Vec<&[T]> = subset.iter().map(|&j| data.x().col(j)).collect();
    let rows: Vec<usize> = (0..data.n()).collect();
    fit_lasso_cv_rows(&cols, data.y(), &rows, params, seed)
}
