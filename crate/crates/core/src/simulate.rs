//! Synthetic datasets that mimic a reference dataset: multivariate normal
//! features with the reference's mean and (optionally perturbed) covariance,
//! and linear or two-regime mixture responses on ten hidden signal columns.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind, Matrix};
use crate::error::{contract, ErpxError, Result};
use crate::metrics::{empirical_quantile, mean, sample_variance};
use crate::scalar::Real;
use crate::seed::RngSeed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLevel {
    #[default]
    None,
    Medium,
    High,
}

impl NoiseLevel {
    /// Multiple of the smallest feature standard deviation used as the
    /// perturbation scale.
    pub fn multiplier(self) -> f64 {
        match self {
            NoiseLevel::None => 0.0,
            NoiseLevel::Medium => 3.0,
            NoiseLevel::High => 5.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseKind {
    #[default]
    Linear,
    Mixture,
}

macro_rules! name_enum {
    ($ty:ty, $($variant:path => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = ErpxError;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(ErpxError::Config(format!(
                        concat!("unknown ", stringify!($ty), " '{}'"), other
                    ))),
                }
            }
        }
    };
}

name_enum!(NoiseLevel, NoiseLevel::None => "none", NoiseLevel::Medium => "medium", NoiseLevel::High => "high");
name_enum!(ResponseKind, ResponseKind::Linear => "linear", ResponseKind::Mixture => "mixture");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub noise_level: NoiseLevel,
    pub n_signals: usize,
    pub response_kind: ResponseKind,
    pub n_replicates: usize,
    /// Rows per replicate; defaults to the reference's row count.
    pub n_rows: Option<usize>,
    /// Standard deviation of the additive response noise.
    pub response_noise_sd: f64,
    pub seed: RngSeed,
}

impl SimulationConfig {
    pub fn new(noise_level: NoiseLevel, response_kind: ResponseKind, n_replicates: usize, seed: RngSeed) -> Self {
        SimulationConfig {
            noise_level,
            n_signals: 10,
            response_kind,
            n_replicates,
            n_rows: None,
            response_noise_sd: 1.0,
            seed,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        let bad = |m: String| Err(ErpxError::Config(m));
        if self.n_signals == 0 || self.n_signals > n_features {
            return bad(format!("n_signals must lie in 1..={n_features}, got {}", self.n_signals));
        }
        if self.n_replicates == 0 {
            return bad("n_replicates must be at least 1".into());
        }
        if self.n_rows == Some(0) {
            return bad("n_rows must be at least 1".into());
        }
        if !(self.response_noise_sd >= 0.0 && self.response_noise_sd.is_finite()) {
            return bad(format!("response noise sd must be finite and >= 0, got {}", self.response_noise_sd));
        }
        Ok(())
    }
}

/// Everything needed to regenerate a simulated response from its features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecipe<T> {
    pub kind: ResponseKind,
    pub signal_indices: Vec<usize>,
    /// Coefficients of the linear pattern, or of the lower regime.
    pub beta1: Vec<T>,
    /// Upper-regime coefficients of a mixture.
    pub beta2: Option<Vec<T>>,
    pub scale: T,
    /// Minimum of the initial (unscaled) response.
    pub init_min: T,
    pub reference_range: (T, T),
    pub noise: Vec<T>,
}

impl<T: Real> ResponseRecipe<T> {
    /// Which rows use `beta2` (row value on the first signal column at or
    /// above that column's median). All false for linear recipes.
    pub fn regimes(&self, x: &Matrix<T>) -> Result<Vec<bool>> {
        if self.beta2.is_none() {
            return Ok(vec![false; x.n_rows()]);
        }
        let k1 = x.col(self.signal_indices[0]);
        let med = empirical_quantile(k1, T::of(0.5))?;
        Ok(k1.iter().map(|&v| v >= med).collect())
    }

    /// Unscaled response `Σ β_j x_{k_j}` with the row's regime coefficients.
    pub fn initial_response(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        contract!(
            self.signal_indices.iter().all(|&k| k < x.n_cols()),
            "recipe refers to columns beyond the matrix"
        );
        let regimes = self.regimes(x)?;
        Ok((0..x.n_rows())
            .map(|i| {
                let beta = match (&self.beta2, regimes[i]) {
                    (Some(b2), true) => b2,
                    _ => &self.beta1,
                };
                self.signal_indices
                    .iter()
                    .zip(beta)
                    .fold(T::zero(), |acc, (&k, &b)| acc + b * x.get(i, k))
            })
            .collect())
    }

    /// `min(y_ref) + a·(y_init − min(y_init)) + ε`, with `ε` optionally suppressed.
    pub fn apply(&self, x: &Matrix<T>, with_noise: bool) -> Result<Vec<T>> {
        let init = self.initial_response(x)?;
        contract!(
            !with_noise || self.noise.len() == init.len(),
            "recipe noise has {} entries for {} rows",
            self.noise.len(),
            init.len()
        );
        Ok(init
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let y = self.reference_range.0 + self.scale * (v - self.init_min);
                if with_noise { y + self.noise[i] } else { y }
            })
            .collect())
    }
}

fn sample_sd<T: Real>(v: &[T]) -> T {
    sample_variance(v).sqrt()
}

/// Sample covariance (`n − 1` denominator) of the columns of `x`.
pub fn sample_covariance<T: Real>(x: &Matrix<T>) -> Matrix<T> {
    let (n, p) = (x.n_rows(), x.n_cols());
    let centred: Vec<Vec<T>> = x
        .columns()
        .map(|c| {
            let m = mean(c);
            c.iter().map(|&v| v - m).collect()
        })
        .collect();
    let denom = T::of_usize(n.saturating_sub(1).max(1));
    let mut cov = Matrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let s = centred[a].iter().zip(&centred[b]).fold(T::zero(), |acc, (&u, &v)| acc + u * v) / denom;
            cov.set(a, b, s);
            cov.set(b, a, s);
        }
    }
    cov
}

/// Mean vector and covariance for simulating from `reference`.
///
/// The mean is always the column means of the unmodified reference. For the
/// medium and high levels every entry of the reference matrix is perturbed by
/// independent normal noise with standard deviation `k·σ` (`k` = 3 or 5,
/// `σ` the smallest feature standard deviation) before the covariance is
/// computed.
pub fn covariance_from_reference<T: Real>(
    reference: &Dataset<T>,
    noise_level: NoiseLevel,
    seed: RngSeed,
) -> Result<(Vec<T>, Matrix<T>)> {
    contract!(reference.n() >= 2, "reference needs at least 2 rows");
    let x = reference.x();
    let mu: Vec<T> = x.columns().map(mean).collect();
    let k = noise_level.multiplier();
    if k == 0.0 {
        return Ok((mu, sample_covariance(x)));
    }
    let sigma = x.columns().map(sample_sd).fold(T::infinity(), T::min).as_f64();
    let sd = k * sigma;
    let mut noised = x.clone();
    if sd > 0.0 {
        let normal = Normal::new(0.0, sd).map_err(|e| ErpxError::Contract(e.to_string()))?;
        let mut rng = seed.derive("covariance-noise").rng();
        for j in 0..noised.n_cols() {
            for v in noised.col_mut(j) {
                *v = *v + T::of(normal.sample(&mut rng));
            }
        }
    }
    Ok((mu, sample_covariance(&noised)))
}

/// `n` draws from `N(μ, Σ)` using the symmetric eigendecomposition of `Σ`
/// with negative eigenvalues clipped to zero.
pub fn sample_features<T: Real>(mean: &[T], covariance: &Matrix<T>, n: usize, seed: RngSeed) -> Result<Matrix<T>> {
    let p = mean.len();
    contract!(
        covariance.n_rows() == p && covariance.n_cols() == p,
        "covariance must be {p}×{p}"
    );
    let scale = (0..p)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .map(|(i, j)| covariance.get(i, j).as_f64().abs())
        .fold(0.0, f64::max);
    for i in 0..p {
        for j in (i + 1)..p {
            let (a, b) = (covariance.get(i, j).as_f64(), covariance.get(j, i).as_f64());
            contract!(
                (a - b).abs() <= 1e-10 * scale.max(1.0),
                "covariance is not symmetric at ({i}, {j})"
            );
        }
    }
    let root = clipped_root(covariance);
    let mut rng = seed.rng();
    let mut cols = vec![vec![T::zero(); n]; p];
    let mut z = vec![0.0f64; p];
    for i in 0..n {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let dev = &root * nalgebra::DVector::from_column_slice(&z);
        for j in 0..p {
            cols[j][i] = mean[j] + T::of(dev[j]);
        }
    }
    Matrix::from_columns(cols)
}

/// `V·diag(√max(λ, 0))` for `Σ = V diag(λ) Vᵀ`.
fn clipped_root<T: Real>(covariance: &Matrix<T>) -> DMatrix<f64> {
    let p = covariance.n_rows();
    let sym = DMatrix::from_fn(p, p, |i, j| 0.5 * (covariance.get(i, j).as_f64() + covariance.get(j, i).as_f64()));
    let eig = SymmetricEigen::new(sym);
    let mut root = eig.eigenvectors;
    // Eigenvalues within rounding error of zero count as zero.
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let tol = top * p as f64 * f64::EPSILON;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = if lambda > tol { lambda.sqrt() } else { 0.0 };
        root.column_mut(k).scale_mut(s);
    }
    root
}

/// The covariance the clipped sampler actually targets.
pub fn clipped_covariance<T: Real>(covariance: &Matrix<T>) -> Matrix<T> {
    let r = clipped_root(covariance);
    let c = &r * r.transpose();
    let p = covariance.n_rows();
    let mut out = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            out.set(i, j, T::of(c[(i, j)]));
        }
    }
    out
}

fn draw_recipe<T: Real>(
    x: &Matrix<T>,
    kind: ResponseKind,
    n_signals: usize,
    reference_range: (T, T),
    noise_sd: f64,
    seed: RngSeed,
) -> Result<ResponseRecipe<T>> {
    let p = x.n_cols();
    contract!(
        (1..=p).contains(&n_signals),
        "need at least {n_signals} feature columns, got {p}"
    );
    contract!(reference_range.0 <= reference_range.1, "reference range is reversed");
    let mut rng = seed.rng();
    let signal_indices: Vec<usize> = sample(&mut rng, p, n_signals).into_vec();
    let mut coefs = || (0..n_signals).map(|_| T::of(rng.random::<f64>())).collect::<Vec<T>>();
    let beta1 = coefs();
    let beta2 = (kind == ResponseKind::Mixture).then(&mut coefs);
    let normal = Normal::new(0.0, noise_sd).map_err(|e| ErpxError::Config(e.to_string()))?;
    let mut noise_rng = seed.derive("epsilon").rng();
    let noise = (0..x.n_rows()).map(|_| T::of(normal.sample(&mut noise_rng))).collect();
    let mut recipe = ResponseRecipe {
        kind,
        signal_indices,
        beta1,
        beta2,
        scale: T::one(),
        init_min: T::zero(),
        reference_range,
        noise,
    };
    let init = recipe.initial_response(x)?;
    let lo = init.iter().copied().fold(T::infinity(), T::min);
    let hi = init.iter().copied().fold(T::neg_infinity(), T::max);
    if !(hi > lo) {
        return Err(ErpxError::Data("simulated initial response is constant; cannot rescale".into()));
    }
    recipe.scale = (reference_range.1 - reference_range.0) / (hi - lo);
    recipe.init_min = lo;
    Ok(recipe)
}

/// Linear response on `n_signals` random columns, mapped onto the reference
/// range, plus `N(0, noise_sd²)` noise.
pub fn linear_response_with<T: Real>(
    x: &Matrix<T>,
    reference_range: (T, T),
    n_signals: usize,
    noise_sd: f64,
    seed: RngSeed,
) -> Result<(Vec<T>, ResponseRecipe<T>)> {
    let r = draw_recipe(x, ResponseKind::Linear, n_signals, reference_range, noise_sd, seed)?;
    Ok((r.apply(x, true)?, r))
}

/// Two linear patterns split at the median of the first signal column.
pub fn mixture_response_with<T: Real>(
    x: &Matrix<T>,
    reference_range: (T, T),
    n_signals: usize,
    noise_sd: f64,
    seed: RngSeed,
) -> Result<(Vec<T>, ResponseRecipe<T>)> {
    let r = draw_recipe(x, ResponseKind::Mixture, n_signals, reference_range, noise_sd, seed)?;
    Ok((r.apply(x, true)?, r))
}

/// Ten signals and standard normal noise.
pub fn linear_response<T: Real>(x: &Matrix<T>, reference_range: (T, T), seed: RngSeed) -> Result<(Vec<T>, ResponseRecipe<T>)> {
    linear_response_with(x, reference_range, 10, 1.0, seed)
}

pub fn mixture_response<T: Real>(x: &Matrix<T>, reference_range: (T, T), seed: RngSeed) -> Result<(Vec<T>, ResponseRecipe<T>)> {
    mixture_response_with(x, reference_range, 10, 1.0, seed)
}

/// Minimum and maximum of a response.
pub fn response_range<T: Real>(y: &[T]) -> (T, T) {
    let lo = y.iter().copied().fold(T::infinity(), T::min);
    let hi = y.iter().copied().fold(T::neg_infinity(), T::max);
    (lo, hi)
}

/// Features and response sampled for one replicate.
#[derive(Clone, Debug)]
pub struct Replicate<T> {
    pub index: usize,
    pub seed: RngSeed,
    pub data: Dataset<T>,
    pub recipe: ResponseRecipe<T>,
}

/// Replicate `index` of a simulation design. Each replicate perturbs the
/// covariance, samples features and draws a response from its own seed.
pub fn simulate_replicate<T: Real>(reference: &Dataset<T>, config: &SimulationConfig, index: usize) -> Result<Replicate<T>> {
    config.validate(reference.n_features())?;
    let seed = config.seed.derive_index("replicate", index as u64);
    let (mu, cov) = covariance_from_reference(reference, config.noise_level, seed)?;
    let n = config.n_rows.unwrap_or(reference.n());
    let x = sample_features(&mu, &cov, n, seed.derive("features"))?;
    let range = response_range(reference.y());
    let response_seed = seed.derive("response");
    let (y, recipe) = match config.response_kind {
        ResponseKind::Linear => linear_response_with(&x, range, config.n_signals, config.response_noise_sd, response_seed)?,
        ResponseKind::Mixture => mixture_response_with(&x, range, config.n_signals, config.response_noise_sd, response_seed)?,
    };
    let kinds = x.columns().map(FeatureKind::infer).collect();
    let data = Dataset::new(y, x, reference.feature_names().to_vec(), kinds)?;
    Ok(Replicate { index, seed, data, recipe })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_reference() -> Dataset<f64> {
        let x = Matrix::from_columns(vec![vec![1.0, 2.0, 3.0, 6.0], vec![2.0, 1.0, 4.0, 5.0]]).unwrap();
        Dataset::from_parts(vec![0.0, 1.0, 2.0, 3.0], x).unwrap()
    }

    #[test]
    fn hand_covariance_without_noise() {
        let (mu, cov) = covariance_from_reference(&toy_reference(), NoiseLevel::None, RngSeed(1)).unwrap();
        assert_eq!(mu, vec![3.0, 3.0]);
        // Deviations (-2,-1,0,3) and (-1,-2,1,2).
        assert!((cov.get(0, 0) - 14.0 / 3.0).abs() < 1e-12);
        assert!((cov.get(1, 1) - 10.0 / 3.0).abs() < 1e-12);
        assert!((cov.get(0, 1) - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(cov.get(0, 1), cov.get(1, 0));
    }

    #[test]
    fn noise_perturbs_covariance_per_seed() {
        let r = toy_reference();
        let (mu, a) = covariance_from_reference(&r, NoiseLevel::Medium, RngSeed(1)).unwrap();
        let (_, b) = covariance_from_reference(&r, NoiseLevel::Medium, RngSeed(2)).unwrap();
        assert_eq!(mu, vec![3.0, 3.0]);
        assert_ne!(a, b);
        for c in [&a, &b] {
            assert_eq!(c.get(0, 1), c.get(1, 0));
            let clipped = clipped_covariance(c);
            let det = clipped.get(0, 0) * clipped.get(1, 1) - clipped.get(0, 1) * clipped.get(1, 0);
            assert!(clipped.get(0, 0) >= -1e-12 && det >= -1e-9);
        }
    }

    #[test]
    fn zero_covariance_repeats_the_mean() {
        let x = sample_features(&[1.5, -2.0], &Matrix::zeros(2, 2), 5, RngSeed(3)).unwrap();
        for i in 0..5 {
            assert_eq!(x.row(i), vec![1.5, -2.0]);
        }
    }

    #[test]
    fn identity_covariance_is_recovered() {
        let mut id = Matrix::<f64>::zeros(2, 2);
        id.set(0, 0, 1.0);
        id.set(1, 1, 1.0);
        let x: Matrix<f64> = sample_features(&[0.0, 0.0], &id, 100_000, RngSeed(4)).unwrap();
        let c = sample_covariance(&x);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((c.get(i, j) - target).abs() < 0.02, "{i},{j}: {}", c.get(i, j));
            }
        }
    }

    #[test]
    fn rank_one_draws_lie_on_the_line() {
        let v: [f64; 3] = [1.0, -2.0, 0.5];
        let mut cov = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                cov.set(i, j, v[i] * v[j]);
            }
        }
        let x = sample_features(&[0.0f64; 3], &cov, 50, RngSeed(5)).unwrap();
        for i in 0..50 {
            let r = x.row(i);
            let t = r[0] / v[0];
            for j in 0..3 {
                assert!((r[j] - t * v[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn indefinite_input_targets_clipped_covariance() {
        // Eigenvalues 3 and -1.
        let cov = Matrix::<f64>::from_columns(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let clipped = clipped_covariance(&cov);
        for i in 0..2 {
            for j in 0..2 {
                assert!((clipped.get(i, j) - 1.5).abs() < 1e-12);
            }
        }
        let x = sample_features(&[0.0, 0.0], &cov, 100_000, RngSeed(6)).unwrap();
        let c = sample_covariance(&x);
        for i in 0..2 {
            for j in 0..2 {
                assert!((c.get(i, j) - 1.5).abs() < 0.05);
            }
        }
    }

    #[test]
    fn asymmetric_covariance_is_rejected() {
        let cov = Matrix::from_columns(vec![vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(sample_features(&[0.0, 0.0], &cov, 3, RngSeed(0)).is_err());
    }

    fn random_matrix(n: usize, p: usize, seed: u64) -> Matrix<f64> {
        let mut rng = RngSeed(seed).rng();
        Matrix::from_columns((0..p).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect()).unwrap()
    }

    #[test]
    fn noiseless_response_spans_reference_range() {
        let x = random_matrix(33, 20, 7);
        let (_, r) = linear_response(&x, (87.0, 94.0), RngSeed(8)).unwrap();
        let y = r.apply(&x, false).unwrap();
        let (lo, hi) = response_range(&y);
        assert_eq!(lo, 87.0);
        assert!((hi - 94.0).abs() < 1e-12);
        assert_eq!(r.signal_indices.len(), 10);
        let mut s = r.signal_indices.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 10);
        assert!(r.beta1.iter().all(|&b| (0.0..1.0).contains(&b)));
    }

    #[test]
    fn degenerate_mixture_equals_linear() {
        let x = random_matrix(30, 15, 9);
        let (_, mut r) = mixture_response(&x, (0.0, 1.0), RngSeed(10)).unwrap();
        let mut lin = r.clone();
        lin.beta2 = None;
        lin.kind = ResponseKind::Linear;
        r.beta2 = Some(r.beta1.clone());
        assert_eq!(r.apply(&x, true).unwrap(), lin.apply(&x, true).unwrap());
    }

    #[test]
    fn mixture_regimes_split_at_median() {
        for n in [30, 33] {
            let x = random_matrix(n, 12, n as u64);
            let (_, r) = mixture_response(&x, (0.0, 1.0), RngSeed(11)).unwrap();
            let upper = r.regimes(&x).unwrap().iter().filter(|&&b| b).count();
            assert_eq!(upper, n.div_ceil(2));
            assert!(r.beta2.as_ref().is_some_and(|b| b.len() == 10));
        }
    }

    #[test]
    fn responses_are_reproducible() {
        let x = random_matrix(20, 12, 12);
        assert_eq!(linear_response(&x, (0.0, 1.0), RngSeed(1)).unwrap(), linear_response(&x, (0.0, 1.0), RngSeed(1)).unwrap());
        assert_ne!(linear_response(&x, (0.0, 1.0), RngSeed(1)).unwrap().0, linear_response(&x, (0.0, 1.0), RngSeed(2)).unwrap().0);
    }

    #[test]
    fn too_few_columns_is_rejected() {
        let x = random_matrix(20, 5, 1);
        assert!(linear_response(&x, (0.0, 1.0), RngSeed(1)).is_err());
    }

    #[test]
    fn replicates_differ_and_keep_shape() {
        let mut rng = RngSeed(13).rng();
        let x = Matrix::from_columns((0..12).map(|_| (0..15).map(|_| rng.random::<f64>()).collect()).collect()).unwrap();
        let reference = Dataset::from_parts((0..15).map(f64::from).collect(), x).unwrap();
        let cfg = SimulationConfig::new(NoiseLevel::High, ResponseKind::Mixture, 2, RngSeed(14));
        let a = simulate_replicate(&reference, &cfg, 0).unwrap();
        let b = simulate_replicate(&reference, &cfg, 1).unwrap();
        assert_eq!((a.data.n(), a.data.n_features()), (15, 12));
        assert_ne!(a.seed, b.seed);
        assert_ne!(a.data.y(), b.data.y());
        assert_eq!(simulate_replicate(&reference, &cfg, 0).unwrap().data, a.data);
    }

    #[test]
    fn level_names_round_trip() {
        for l in [NoiseLevel::None, NoiseLevel::Medium, NoiseLevel::High] {
            assert_eq!(l.to_string().parse::<NoiseLevel>().unwrap(), l);
        }
        assert!("loud".parse::<NoiseLevel>().is_err());
        assert_eq!("Mixture".parse::<ResponseKind>().unwrap(), ResponseKind::Mixture);
    }
}
