//! Rolling-window evaluation: coverage curves, retention curves, and diffs
//! between optimized and observed listings.
//!
//! Coverage is measured against realized volume: the numerator counts
//! observed volume on pairs the optimizer kept, so newly added (unobserved)
//! pairs contribute zero. The estimate-based coverage using `K*` on all
//! selected pairs is reported alongside for comparison.

use serde::{Deserialize, Serialize};

use crate::bnb::{search, SearchConfig};
use crate::error::{Error, Result};
use crate::ingest::WindowedDataset;
use crate::ipm::{estimate, IpmConfig};
use crate::matcore::{pair_count, PairGraph, SymbolTable, reconstruct_k};

/// Coverage of one `(window, m)` point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub window: String,
    pub m: usize,
    /// Fraction of the window's realized volume carried by the selected graph.
    pub coverage: f64,
    /// Fraction of total positive `K*` carried by the selected graph.
    pub coverage_kstar: f64,
    /// Whether the search proved optimality (false when node-capped).
    pub optimal: bool,
}

/// Mean overlap between consecutive optimal edge sets at one budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetentionPoint {
    pub m: usize,
    /// Mean over consecutive window pairs of |E*_t ∩ E*_{t+1}| / m.
    pub retention: f64,
}

/// Listing changes between the observed graph and the optimized one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDiff {
    /// Observed but not selected, as sorted ticker pairs.
    pub removed: Vec<(String, String)>,
    /// Selected but not observed.
    pub added: Vec<(String, String)>,
}

/// Optimal edge sets per window at a fixed budget, shared by both curves.
fn optimal_graphs_for_budget(
    dataset: &WindowedDataset,
    m: usize,
    ipm_cfg: &IpmConfig,
    search_cfg: &SearchConfig,
) -> Result<Vec<(String, PairGraph, bool)>> {
    let mut out = Vec::with_capacity(dataset.windows.len());
    for (period, v) in &dataset.windows {
        let g = v.support_graph();
        let (factors, _) = estimate(v, &g, ipm_cfg)?;
        let k_star = reconstruct_k(&factors)?;
        let cfg = SearchConfig { m, ..search_cfg.clone() };
        let res = search(&k_star, &cfg)?;
        out.push((period.clone(), res.graph, res.optimal));
    }
    Ok(out)
}

/// Sweeps edge budgets on one window: estimate once, search per budget.
///
/// Per-point estimator or search failures are reported as `Err` entries so
/// a failing budget does not abort the rest of the sweep.
pub fn coverage_curve(
    dataset: &WindowedDataset,
    window: &str,
    ms: &[usize],
    ipm_cfg: &IpmConfig,
    search_cfg: &SearchConfig,
) -> Result<Vec<Result<CoveragePoint>>> {
    let v = dataset
        .window(window)
        .ok_or_else(|| Error::EmptyWindow(format!("window {window} not in dataset")))?;
    let g = v.support_graph();
    let (factors, _) = estimate(v, &g, ipm_cfg)?;
    let k_star = reconstruct_k(&factors)?;
    let n = v.n();

    // Same iteration order for numerator and denominator so that the full
    // budget gives exactly 1.0.
    let total_v = v.total();
    if total_v <= 0.0 {
        return Err(Error::UndefinedShare);
    }
    let total_kstar_pos: f64 = {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += k_star.get(i, j).max(0.0);
            }
        }
        s
    };

    let mut points = Vec::with_capacity(ms.len());
    for &m in ms {
        let cfg = SearchConfig { m, ..search_cfg.clone() };
        let point = search(&k_star, &cfg).map(|res| {
            let mut kept_v = 0.0;
            let mut kept_k = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    if res.graph.has_edge(i, j) {
                        kept_v += v.get(i, j);
                        kept_k += k_star.get(i, j);
                    }
                }
            }
            CoveragePoint {
                window: window.to_string(),
                m,
                coverage: kept_v / total_v,
                coverage_kstar: if total_kstar_pos > 0.0 { kept_k / total_kstar_pos } else { 0.0 },
                optimal: res.optimal,
            }
        });
        points.push(point);
    }
    Ok(points)
}

/// Average retention of the optimal edge set between consecutive windows,
/// for each budget in `ms`. Needs at least two windows.
pub fn retention_curve(
    dataset: &WindowedDataset,
    ms: &[usize],
    ipm_cfg: &IpmConfig,
    search_cfg: &SearchConfig,
) -> Result<Vec<RetentionPoint>> {
    if dataset.windows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "retention needs >= 2 windows, got {}",
            dataset.windows.len()
        )));
    }
    let mut out = Vec::with_capacity(ms.len());
    for &m in ms {
        let graphs = optimal_graphs_for_budget(dataset, m, ipm_cfg, search_cfg)?;
        let mut overlap_sum = 0.0;
        for pair in graphs.windows(2) {
            let (_, ref a, _) = pair[0];
            let (_, ref b, _) = pair[1];
            let n = a.n();
            let mut common = 0usize;
            for i in 0..n {
                for j in (i + 1)..n {
                    if a.has_edge(i, j) && b.has_edge(i, j) {
                        common += 1;
                    }
                }
            }
            overlap_sum += common as f64 / m as f64;
        }
        out.push(RetentionPoint { m, retention: overlap_sum / (graphs.len() - 1) as f64 });
    }
    Ok(out)
}

/// Set difference between observed and optimized listings as ticker pairs,
/// each pair alphabetical, lists sorted.
pub fn diff_pairs(
    observed: &PairGraph,
    optimal: &PairGraph,
    symbols: &SymbolTable,
) -> Result<PairDiff> {
    if observed.n() != optimal.n() {
        return Err(Error::DimensionMismatch(format!(
            "graphs disagree: {} vs {} vertices",
            observed.n(),
            optimal.n()
        )));
    }
    if observed.n() != symbols.len() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} vertices but table has {} tickers",
            observed.n(),
            symbols.len()
        )));
    }
    let name_pair = |i: usize, j: usize| {
        let a = symbols.ticker(i).to_string();
        let b = symbols.ticker(j).to_string();
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    };
    let mut removed = Vec::new();
    let mut added = Vec::new();
    for i in 0..observed.n() {
        for j in (i + 1)..observed.n() {
            match (observed.has_edge(i, j), optimal.has_edge(i, j)) {
                (true, false) => removed.push(name_pair(i, j)),
                (false, true) => added.push(name_pair(i, j)),
                _ => {}
            }
        }
    }
    removed.sort();
    added.sort();
    Ok(PairDiff { removed, added })
}

/// Pigeonhole floor on retention: with `p` available pairs and two sets of
/// size `m`, at least `2m - p` pairs must coincide.
pub fn retention_floor(m: usize, n: usize) -> f64 {
    let p = pair_count(n);
    if 2 * m > p {
        (2 * m - p) as f64 / m as f64
    } else {
        0.0
    }
}
