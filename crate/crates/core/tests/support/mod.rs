#![allow(dead_code)]

pub mod oracle;

use erpx::data::{Dataset, Matrix};
use erpx::seed::RngSeed;
use rand::Rng;

/// Smooth NIR-like absorbance spectra: a sloped baseline plus overlapping
/// Gaussian absorption bands whose heights are per-sample concentrations.
/// The concentrations share a latent factor that also drives the response,
/// so most wavelengths carry some signal, as in gasoline octane spectra.
/// The response lies in an octane-number range.
pub fn nir_like_reference(n: usize, p: usize, seed: u64) -> Dataset<f64> {
    let mut rng = RngSeed(seed).rng();
    let normal = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { rng.sample(rand_distr::StandardNormal) };
    let n_bands = 12;
    let bands: Vec<(f64, f64, f64, f64)> = (0..n_bands)
        .map(|k| {
            let centre = (k as f64 + 0.5) / n_bands as f64 + 0.02 * normal(&mut rng);
            let width = 0.03 + 0.09 * rng.random::<f64>();
            let loading = 2.0 * rng.random::<f64>() - 1.0;
            let weight = 0.3 * normal(&mut rng);
            (centre, width, loading, weight)
        })
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let latent = normal(&mut rng);
        let conc: Vec<f64> = bands.iter().map(|b| 1.0 + 0.5 * b.2 * latent + 0.08 * normal(&mut rng)).collect();
        let offset = 0.02 * normal(&mut rng);
        let slope = 0.03 * normal(&mut rng);
        let row: Vec<f64> = (0..p)
            .map(|j| {
                let t = j as f64 / (p - 1).max(1) as f64;
                let signal: f64 = bands
                    .iter()
                    .zip(&conc)
                    .map(|(&(c, w, _, _), &a)| a * (-(t - c) * (t - c) / (2.0 * w * w)).exp())
                    .sum();
                offset + slope * t + 0.3 * signal + 0.001 * normal(&mut rng)
            })
            .collect();
        let score: f64 = 1.2 * latent + bands.iter().zip(&conc).map(|(b, c)| b.3 * (c - 1.0)).sum::<f64>();
        y.push(87.0 + score + 0.25 * normal(&mut rng));
        rows.push(row);
    }
    let x = Matrix::from_rows(&rows).expect("rectangular spectra");
    let names = (0..p).map(|j| format!("nm{}", 1102 + 2 * j)).collect();
    let kinds = vec![erpx::data::FeatureKind::Continuous; p];
    Dataset::new(y, x, names, kinds).expect("valid reference")
}
