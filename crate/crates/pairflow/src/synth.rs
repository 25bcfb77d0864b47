//! Synthetic ground-truth generator for tests and demos.
//!
//! Draws a factor pair with geometrically decaying masses (volume on real
//! exchanges is heavily concentrated in a few transit assets), masks the
//! reconstructed volumes to a connected listing graph that keeps the
//! heaviest pairs (exchanges list where the demand is), and emits one or
//! more monthly windows with optional additive noise.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::VolumeRecord;
use crate::matcore::{
    pair_count, reconstruct_k, DisjointSet, FactorPair, PairGraph, SymbolTable, SymMatrix,
    VolumeMatrix,
};

/// Ratio between the lightest and heaviest mass, independent of `n`.
const MASS_SPAN: f64 = 7.6e-4;
const MASS_TOP: f64 = 3.0;
/// Per-asset jitter half-width on the log scale.
const MASS_JITTER: f64 = 0.2;
/// Relative size of the signed correction factor.
const CORRECTION_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    /// Fraction of unordered pairs that are listed, in (0, 1].
    pub density: f64,
    /// Additive noise level relative to the mean listed-cell volume.
    pub noise: f64,
    pub seed: u64,
    /// Number of monthly windows to emit (same mask and factors, fresh noise).
    pub windows: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { n: 10, density: 0.6, noise: 0.0, seed: 0, windows: 1 }
    }
}

/// Generated dataset plus the ground truth that produced it.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub symbols: SymbolTable,
    pub truth: FactorPair,
    pub mask: PairGraph,
    pub windows: Vec<(String, VolumeMatrix)>,
}

/// Ground-truth sidecar written next to generated CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthTruth {
    pub tickers: Vec<String>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub mask_edges: Vec<(String, String)>,
    pub config: SynthConfig,
}

fn month_label(index: usize) -> String {
    let year = 2022 + index / 12;
    let month = index % 12 + 1;
    format!("{year}-{month:02}")
}

/// Standard normal via Box-Muller on the shared stream.
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    let n = cfg.n;
    if n < 2 {
        return Err(Error::InvalidProblem(format!("need at least 2 assets, got {n}")));
    }
    if !(cfg.density > 0.0 && cfg.density <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "density must lie in (0, 1], got {}",
            cfg.density
        )));
    }
    if cfg.noise < 0.0 {
        return Err(Error::InvalidConfig("noise must be >= 0".into()));
    }
    if cfg.windows == 0 {
        return Err(Error::InvalidConfig("need at least one window".into()));
    }
    let p = pair_count(n);
    let budget = (cfg.density * p as f64).round() as usize;
    if budget < n - 1 {
        return Err(Error::InfeasibleBudget(format!(
            "density {} yields {budget} pairs, fewer than the {} needed for connectivity",
            cfg.density,
            n - 1
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Masses: geometric decay over a fixed span with per-asset jitter.
    let decay = MASS_SPAN.powf(1.0 / (n - 1) as f64);
    let mut w1: Vec<f64> = (0..n)
        .map(|i| {
            MASS_TOP * decay.powi(i as i32) * rng.gen_range(-MASS_JITTER..MASS_JITTER).exp()
        })
        .collect();
    // Signed correction proportional to the local mass, orthogonalized.
    let mut w2: Vec<f64> = w1
        .iter()
        .map(|&m| CORRECTION_SCALE * m * rng.gen_range(-1.0..1.0))
        .collect();
    let w1_sq: f64 = w1.iter().map(|x| x * x).sum();
    let dot: f64 = w1.iter().zip(&w2).map(|(a, b)| a * b).sum();
    for i in 0..n {
        w2[i] -= dot / w1_sq * w1[i];
    }
    // The orthogonalization can only tilt w2 slightly; masses stay positive.
    for x in w1.iter_mut() {
        debug_assert!(*x > 0.0);
        *x = x.max(f64::MIN_POSITIVE);
    }
    let truth = FactorPair { w1, w2 };
    let k_true = reconstruct_k(&truth)?;

    // Listing mask: heaviest pairs first, spanning tree guaranteed.
    let mut order: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    order.sort_by(|a, b| {
        k_true
            .get(b.0, b.1)
            .partial_cmp(&k_true.get(a.0, a.1))
            .unwrap()
            .then_with(|| a.cmp(b))
    });
    let mut dsu = DisjointSet::new(n);
    let mut tree = Vec::new();
    let mut rest = Vec::new();
    for &(i, j) in &order {
        if dsu.union(i, j) {
            tree.push((i, j));
        } else {
            rest.push((i, j));
        }
    }
    let mut edges = tree;
    edges.extend(rest.into_iter().take(budget.saturating_sub(edges.len())));
    let mask = PairGraph::from_edges(n, &edges);

    let mean_listed: f64 = edges.iter().map(|&(i, j)| k_true.get(i, j)).sum::<f64>()
        / edges.len() as f64;
    let noise_sd = cfg.noise * mean_listed;

    let symbols = SymbolTable::new((0..n).map(|i| format!("C{i:02}")))?;
    let mut windows = Vec::with_capacity(cfg.windows);
    for widx in 0..cfg.windows {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if mask.has_edge(i, j) {
                    let noise = if noise_sd > 0.0 { noise_sd * gauss(&mut rng) } else { 0.0 };
                    m.set(i, j, (k_true.get(i, j) + noise).max(0.0));
                }
            }
        }
        windows.push((month_label(widx), VolumeMatrix::new(m)?));
    }

    Ok(SynthDataset { symbols, truth, mask, windows })
}

impl SynthDataset {
    /// Flattens the dataset into parseable volume records.
    pub fn to_records(&self) -> Vec<VolumeRecord> {
        let mut out = Vec::new();
        for (period, v) in &self.windows {
            for i in 0..v.n() {
                for j in (i + 1)..v.n() {
                    if self.mask.has_edge(i, j) {
                        out.push(VolumeRecord {
                            base: self.symbols.ticker(i).to_string(),
                            quote: self.symbols.ticker(j).to_string(),
                            volume: v.get(i, j),
                            window: period.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn truth_sidecar(&self, config: &SynthConfig) -> SynthTruth {
        SynthTruth {
            tickers: self.symbols.tickers().to_vec(),
            w1: self.truth.w1.clone(),
            w2: self.truth.w2.clone(),
            mask_edges: self
                .mask
                .edge_list()
                .into_iter()
                .map(|(i, j)| {
                    (
                        self.symbols.ticker(i).to_string(),
                        self.symbols.ticker(j).to_string(),
                    )
                })
                .collect(),
            config: config.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generates_connected_mask_with_exact_budget() {
        let cfg = SynthConfig { n: 10, density: 0.6, ..Default::default() };
        let ds = generate(&cfg).unwrap();
        assert!(ds.mask.is_connected());
        assert_eq!(ds.mask.edge_count(), (0.6 * 45.0_f64).round() as usize);
        // Truth is orthogonal and nonnegative-mass by construction.
        assert!(ds.truth.orthogonality().abs() < 1e-12 * 10.0);
        assert!(ds.truth.w1.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn noise_free_windows_are_identical() {
        let cfg = SynthConfig { windows: 3, ..Default::default() };
        let ds = generate(&cfg).unwrap();
        for (_, v) in &ds.windows[1..] {
            assert_eq!(v, &ds.windows[0].1);
        }
    }

    #[test]
    fn reconstruction_is_positive_on_listed_pairs() {
        let ds = generate(&SynthConfig::default()).unwrap();
        for (i, j) in ds.mask.edge_list() {
            assert!(ds.windows[0].1.get(i, j) > 0.0);
        }
    }

    #[test]
    fn determinism_per_seed() {
        let cfg = SynthConfig { noise: 0.3, windows: 2, ..Default::default() };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.windows, b.windows);
        let c = generate(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.windows, c.windows);
    }

    #[test]
    fn too_sparse_fails() {
        let cfg = SynthConfig { n: 10, density: 0.01, ..Default::default() };
        assert!(matches!(generate(&cfg), Err(Error::InfeasibleBudget(_))));
    }

    #[test]
    fn month_labels_roll_over_years() {
        assert_eq!(month_label(0), "2022-01");
        assert_eq!(month_label(11), "2022-12");
        assert_eq!(month_label(12), "2023-01");
    }
}
