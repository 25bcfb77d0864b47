//! Parsing and aggregation of per-pair trading-volume records.
//!
//! Input is CSV with header `base,quote,volume,window`; tickers need no
//! quoting, windows are calendar months (`YYYY-MM`), and lines starting
//! with `#` are ignored (outputs of this crate embed their resolved run
//! configuration as such comments). Pairs are directionless: both
//! orientations of a pair accumulate into the same matrix cell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{SymMatrix, SymbolTable, VolumeMatrix};

/// One volume observation for an unordered pair in one calendar month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeRecord {
    pub base: String,
    pub quote: String,
    pub volume: f64,
    pub window: String,
}

const CSV_HEADER: &str = "base,quote,volume,window";

fn valid_window(s: &str) -> bool {
    let bytes = s.as_bytes();
    if bytes.len() != 7 || bytes[4] != b'-' {
        return false;
    }
    if !bytes[..4].iter().all(|b| b.is_ascii_digit()) {
        return false;
    }
    if !bytes[5..].iter().all(|b| b.is_ascii_digit()) {
        return false;
    }
    let month: u32 = s[5..].parse().unwrap_or(0);
    (1..=12).contains(&month)
}

/// Parses and validates volume records from CSV text.
///
/// Errors carry the 1-based physical line number (the header is line 1).
pub fn parse_volume_csv(text: &str) -> Result<Vec<VolumeRecord>> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((no, line)) => {
                let t = line.trim();
                if t.is_empty() || t.starts_with('#') {
                    continue;
                }
                break (no + 1, t.to_string());
            }
            None => {
                return Err(Error::Parse { line: 1, msg: "missing header".into() });
            }
        }
    };
    if header.1.to_ascii_lowercase() != CSV_HEADER {
        return Err(Error::Parse {
            line: header.0,
            msg: format!("expected header `{CSV_HEADER}`, found `{}`", header.1),
        });
    }

    let mut out = Vec::new();
    for (no, raw) in lines {
        let line = no + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 comma-separated fields, found {}", fields.len()),
            });
        }
        let base = fields[0].to_ascii_uppercase();
        let quote = fields[1].to_ascii_uppercase();
        if base.is_empty() || quote.is_empty() {
            return Err(Error::Validation { line, msg: "empty ticker".into() });
        }
        if base == quote {
            return Err(Error::Validation {
                line,
                msg: format!("self-pair {base}/{quote}"),
            });
        }
        let volume: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("volume `{}` is not a number", fields[2]),
        })?;
        if !volume.is_finite() || volume < 0.0 {
            return Err(Error::Validation {
                line,
                msg: format!("volume must be finite and nonnegative, got {volume}"),
            });
        }
        let window = fields[3].to_string();
        if !valid_window(&window) {
            return Err(Error::Validation {
                line,
                msg: format!("window `{window}` is not of the form YYYY-MM"),
            });
        }
        out.push(VolumeRecord { base, quote, volume, window });
    }
    Ok(out)
}

/// Renders records back to the CSV dialect accepted by [`parse_volume_csv`].
pub fn records_to_csv(records: &[VolumeRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{},{},{}\n", r.base, r.quote, r.volume, r.window));
    }
    out
}

/// Orders tickers by descending total volume, ties broken alphabetically.
fn ordered_symbols(totals: &BTreeMap<String, f64>) -> Vec<String> {
    let mut names: Vec<&String> = totals.keys().collect();
    names.sort_by(|a, b| {
        totals[*b]
            .partial_cmp(&totals[*a])
            .unwrap()
            .then_with(|| a.cmp(b))
    });
    names.into_iter().cloned().collect()
}

/// Sums one period's records into a symmetric volume matrix; the symbol
/// table covers exactly the tickers active in that period.
pub fn aggregate_window(
    records: &[VolumeRecord],
    period: &str,
) -> Result<(SymbolTable, VolumeMatrix)> {
    let in_window: Vec<&VolumeRecord> =
        records.iter().filter(|r| r.window == period).collect();
    if in_window.is_empty() {
        return Err(Error::EmptyWindow(format!("no records in window {period}")));
    }
    let mut totals: BTreeMap<String, f64> = BTreeMap::new();
    for r in &in_window {
        *totals.entry(r.base.clone()).or_default() += r.volume;
        *totals.entry(r.quote.clone()).or_default() += r.volume;
    }
    let symbols = SymbolTable::new(ordered_symbols(&totals))?;
    let n = symbols.len();
    let mut m = SymMatrix::zeros(n);
    for r in &in_window {
        let i = symbols.id(&r.base).expect("ticker from table");
        let j = symbols.id(&r.quote).expect("ticker from table");
        m.set(i, j, m.get(i, j) + r.volume);
    }
    Ok((symbols, VolumeMatrix::new(m)?))
}

/// Per-period volume matrices over one shared symbol table, periods strictly
/// increasing. The shared table is ordered by total volume across all
/// periods (descending, ties alphabetical), so top-k slicing is a prefix.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    pub symbols: SymbolTable,
    pub windows: Vec<(String, VolumeMatrix)>,
}

impl WindowedDataset {
    pub fn from_records(records: &[VolumeRecord]) -> Result<WindowedDataset> {
        if records.is_empty() {
            return Err(Error::EmptyWindow("no records".into()));
        }
        let mut totals: BTreeMap<String, f64> = BTreeMap::new();
        let mut periods: Vec<String> = Vec::new();
        for r in records {
            *totals.entry(r.base.clone()).or_default() += r.volume;
            *totals.entry(r.quote.clone()).or_default() += r.volume;
            if !periods.contains(&r.window) {
                periods.push(r.window.clone());
            }
        }
        periods.sort(); // YYYY-MM sorts chronologically
        let symbols = SymbolTable::new(ordered_symbols(&totals))?;
        let n = symbols.len();
        let mut windows = Vec::with_capacity(periods.len());
        for p in &periods {
            let mut m = SymMatrix::zeros(n);
            for r in records.iter().filter(|r| &r.window == p) {
                let i = symbols.id(&r.base).unwrap();
                let j = symbols.id(&r.quote).unwrap();
                m.set(i, j, m.get(i, j) + r.volume);
            }
            windows.push((p.clone(), VolumeMatrix::new(m)?));
        }
        Ok(WindowedDataset { symbols, windows })
    }

    pub fn window(&self, period: &str) -> Option<&VolumeMatrix> {
        self.windows.iter().find(|(p, _)| p == period).map(|(_, v)| v)
    }
}

/// Keeps the `k` assets with the largest row sums, returning the induced
/// submatrix and remapped table (again volume-ordered).
pub fn top_k_filter(
    symbols: &SymbolTable,
    v: &VolumeMatrix,
    k: usize,
) -> Result<(SymbolTable, VolumeMatrix)> {
    let n = symbols.len();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "top-k must lie in 1..={n}, got {k}"
        )));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.sort_by(|&a, &b| {
        v.matrix()
            .row_sum(b)
            .partial_cmp(&v.matrix().row_sum(a))
            .unwrap()
            .then_with(|| symbols.ticker(a).cmp(symbols.ticker(b)))
    });
    ids.truncate(k);
    let sub = symbols.subset(&ids)?;
    let mut m = SymMatrix::zeros(k);
    for (a, &ia) in ids.iter().enumerate() {
        for (b, &ib) in ids.iter().enumerate().skip(a + 1) {
            m.set(a, b, v.get(ia, ib));
        }
    }
    Ok((sub, VolumeMatrix::new(m)?))
}

/// Headline dataset statistics mirroring the usual overview table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_coins: usize,
    /// Listed pairs: nonzero upper-triangle cells.
    pub n_pairs: usize,
    /// Total volume counting each unordered pair once.
    pub total_volume: f64,
    /// Fraction of volume on pairs touching at least one top-k asset.
    pub topk_share: f64,
}

/// Computes [`DatasetStats`] with the top-k split at `k` assets by row sum.
pub fn concentration_stats(
    symbols: &SymbolTable,
    v: &VolumeMatrix,
    k: usize,
) -> Result<DatasetStats> {
    let n = symbols.len();
    if k > n {
        return Err(Error::InvalidConfig(format!(
            "top-k must not exceed {n}, got {k}"
        )));
    }
    let total = v.total();
    if total <= 0.0 {
        return Err(Error::UndefinedShare);
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.sort_by(|&a, &b| {
        v.matrix()
            .row_sum(b)
            .partial_cmp(&v.matrix().row_sum(a))
            .unwrap()
            .then_with(|| symbols.ticker(a).cmp(symbols.ticker(b)))
    });
    let mut is_top = vec![false; n];
    for &id in ids.iter().take(k) {
        is_top[id] = true;
    }
    let mut covered = 0.0;
    let mut n_pairs = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let vij = v.get(i, j);
            if vij > 0.0 {
                n_pairs += 1;
            }
            if is_top[i] || is_top[j] {
                covered += vij;
            }
        }
    }
    Ok(DatasetStats {
        n_coins: n,
        n_pairs,
        total_volume: total,
        topk_share: covered / total,
    })
}

/// Relationship between volumes of the same base against two quotes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Number of bases with positive volume against both quotes.
    pub pairs_used: usize,
    /// Pearson correlation of log-volumes (volumes span orders of magnitude).
    pub correlation: f64,
    /// Pearson correlation of raw volumes, for comparison.
    pub raw_correlation: f64,
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Correlation of volumes for common bases traded against both quotes.
/// Needs at least 3 bases with positive volume against each quote.
pub fn same_base_correlation(
    symbols: &SymbolTable,
    v: &VolumeMatrix,
    quote_a: &str,
    quote_b: &str,
) -> Result<CorrelationReport> {
    let a = symbols
        .id(quote_a)
        .ok_or_else(|| Error::InvalidProblem(format!("quote {quote_a} not in table")))?;
    let b = symbols
        .id(quote_b)
        .ok_or_else(|| Error::InvalidProblem(format!("quote {quote_b} not in table")))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for base in 0..symbols.len() {
        if base == a || base == b {
            continue;
        }
        let va = v.get(base, a);
        let vb = v.get(base, b);
        if va > 0.0 && vb > 0.0 {
            xs.push(va);
            ys.push(vb);
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need >= 3 common bases for {quote_a}/{quote_b}, found {}",
            xs.len()
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(CorrelationReport {
        pairs_used: xs.len(),
        correlation: pearson(&lx, &ly),
        raw_correlation: pearson(&xs, &ys),
    })
}

/// Plain-text overview table, one row per window plus whatever rows the
/// caller passes (e.g. an `overall` row).
pub fn render_stats_table(rows: &[(String, DatasetStats)], k: usize) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>7} {:>7} {:>14} {:>10}\n",
        "Window",
        "#Coins",
        "#Pairs",
        "Volume($)",
        format!("Top{k}(%)")
    ));
    for (name, s) in rows {
        out.push_str(&format!(
            "{:<12} {:>7} {:>7} {:>14.4e} {:>10.2}\n",
            name,
            s.n_coins,
            s.n_pairs,
            s.total_volume,
            s.topk_share * 100.0
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_record() {
        let recs = parse_volume_csv("base,quote,volume,window\nBTC,USDT,100.5,2022-01\n").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].base, "BTC");
        assert_eq!(recs[0].volume, 100.5);
    }

    #[test]
    fn self_pair_fails_with_line_number() {
        let err = parse_volume_csv("base,quote,volume,window\nBTC,BTC,5,2022-01\n").unwrap_err();
        match err {
            Error::Validation { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn header_only_gives_empty_sequence() {
        assert!(parse_volume_csv("base,quote,volume,window\n").unwrap().is_empty());
    }

    #[test]
    fn negative_volume_rejected() {
        let err = parse_volume_csv("base,quote,volume,window\nBTC,USDT,-3,2022-01\n").unwrap_err();
        assert!(matches!(err, Error::Validation { line: 2, .. }));
    }

    #[test]
    fn malformed_row_rejected() {
        let err = parse_volume_csv("base,quote,volume,window\nBTC,USDT,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_volume_csv("base,quote,volume,window\nBTC,USDT,abc,2022-01\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_volume_csv("base,quote,volume,window\nBTC,USDT,1,202201\n").unwrap_err();
        assert!(matches!(err, Error::Validation { line: 2, .. }));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# cfg: seed=0\n\nbase,quote,volume,window\n# data follows\nBTC,USDT,1,2022-01\n";
        assert_eq!(parse_volume_csv(text).unwrap().len(), 1);
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "base,quote,volume,window\nBTC,USDT,100.5,2022-01\nETH,BTC,3.25,2022-02\n";
        let recs = parse_volume_csv(text).unwrap();
        let again = parse_volume_csv(&records_to_csv(&recs)).unwrap();
        assert_eq!(recs, again);
    }

    #[test]
    fn aggregation_symmetrizes_orientations() {
        let recs = parse_volume_csv(
            "base,quote,volume,window\nBTC,USDT,100,2022-01\nUSDT,BTC,50,2022-01\n",
        )
        .unwrap();
        let (sym, v) = aggregate_window(&recs, "2022-01").unwrap();
        let i = sym.id("BTC").unwrap();
        let j = sym.id("USDT").unwrap();
        assert_eq!(v.get(i, j), 150.0);
    }

    #[test]
    fn aggregation_respects_period() {
        let recs = parse_volume_csv(
            "base,quote,volume,window\nBTC,USDT,100,2022-01\nBTC,USDT,70,2022-02\n",
        )
        .unwrap();
        let (sym, v) = aggregate_window(&recs, "2022-02").unwrap();
        assert_eq!(v.get(sym.id("BTC").unwrap(), sym.id("USDT").unwrap()), 70.0);
        assert!(matches!(
            aggregate_window(&recs, "2022-03"),
            Err(Error::EmptyWindow(_))
        ));
    }

    #[test]
    fn aggregation_matches_map_accumulation_oracle() {
        // Ten fixed records; accumulate independently into a hash map.
        let text = "base,quote,volume,window\n\
                    A,B,1,2022-01\nB,A,2,2022-01\nA,C,3,2022-01\nC,D,4,2022-01\n\
                    D,A,5,2022-01\nB,C,6,2022-01\nC,B,7,2022-01\nD,B,8,2022-01\n\
                    A,D,9,2022-01\nC,A,10,2022-01\n";
        let recs = parse_volume_csv(text).unwrap();
        let mut oracle: BTreeMap<(String, String), f64> = BTreeMap::new();
        for r in &recs {
            let key = if r.base < r.quote {
                (r.base.clone(), r.quote.clone())
            } else {
                (r.quote.clone(), r.base.clone())
            };
            *oracle.entry(key).or_default() += r.volume;
        }
        let (sym, v) = aggregate_window(&recs, "2022-01").unwrap();
        for ((a, b), total) in oracle {
            let i = sym.id(&a).unwrap();
            let j = sym.id(&b).unwrap();
            assert_eq!(v.get(i, j), total, "{a}/{b}");
        }
        // Volume matrix invariants hold by construction.
        for i in 0..sym.len() {
            assert_eq!(v.get(i, i), 0.0);
        }
    }

    fn five_asset_fixture() -> (SymbolTable, VolumeMatrix) {
        // E is the heavyweight; volumes chosen so row sums rank E > A > B > C > D.
        let recs = parse_volume_csv(
            "base,quote,volume,window\n\
             E,A,100,2022-01\nE,B,60,2022-01\nA,B,40,2022-01\n\
             C,A,10,2022-01\nD,C,2,2022-01\n",
        )
        .unwrap();
        aggregate_window(&recs, "2022-01").unwrap()
    }

    #[test]
    fn top_k_filter_identity_and_single() {
        let (sym, v) = five_asset_fixture();
        let (s_all, v_all) = top_k_filter(&sym, &v, sym.len()).unwrap();
        assert_eq!(s_all.len(), sym.len());
        assert_eq!(v_all.total(), v.total());

        let (s1, v1) = top_k_filter(&sym, &v, 1).unwrap();
        assert_eq!(s1.tickers(), &["E"]);
        assert_eq!(v1.total(), 0.0);

        assert!(top_k_filter(&sym, &v, 6).is_err());
    }

    #[test]
    fn top_k_filter_matches_manual_row_sum_ranking() {
        let (sym, v) = five_asset_fixture();
        // Row sums: E=160, A=150, B=100, C=12, D=2 -> top 3 = {E, A, B}.
        let (s3, v3) = top_k_filter(&sym, &v, 3).unwrap();
        assert_eq!(s3.tickers(), &["E", "A", "B"]);
        let e = s3.id("E").unwrap();
        let a = s3.id("A").unwrap();
        let b = s3.id("B").unwrap();
        assert_eq!(v3.get(e, a), 100.0);
        assert_eq!(v3.get(e, b), 60.0);
        assert_eq!(v3.get(a, b), 40.0);
    }

    #[test]
    fn concentration_share_examples() {
        let (sym, v) = five_asset_fixture();
        // k = 1 ({E}): pairs touching E carry 160 of 212.
        let s = concentration_stats(&sym, &v, 1).unwrap();
        assert!((s.topk_share - 160.0 / 212.0).abs() < 1e-15);
        assert_eq!(s.n_pairs, 5);
        assert_eq!(s.n_coins, 5);
        assert_eq!(s.total_volume, 212.0);
        // k = n covers everything exactly.
        let s = concentration_stats(&sym, &v, 5).unwrap();
        assert_eq!(s.topk_share, 1.0);
    }

    #[test]
    fn concentration_undefined_on_zero_volume() {
        let sym = SymbolTable::new(["A", "B"]).unwrap();
        let v = VolumeMatrix::zeros(2);
        assert!(matches!(
            concentration_stats(&sym, &v, 1),
            Err(Error::UndefinedShare)
        ));
    }

    #[test]
    fn correlation_proportional_vectors() {
        // Bases P, Q, R traded against both A and B with y = 2x.
        let recs = parse_volume_csv(
            "base,quote,volume,window\n\
             P,A,1,2022-01\nP,B,2,2022-01\n\
             Q,A,5,2022-01\nQ,B,10,2022-01\n\
             R,A,20,2022-01\nR,B,40,2022-01\n",
        )
        .unwrap();
        let (sym, v) = aggregate_window(&recs, "2022-01").unwrap();
        let rep = same_base_correlation(&sym, &v, "A", "B").unwrap();
        assert_eq!(rep.pairs_used, 3);
        assert!((rep.correlation - 1.0).abs() < 1e-12);
        assert!((rep.raw_correlation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_anti_ordered_matches_formula() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys = [8.0, 4.0, 2.0, 1.0];
        let mut csv = String::from("base,quote,volume,window\n");
        for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
            csv.push_str(&format!("B{i},QA,{x},2022-01\nB{i},QB,{y},2022-01\n"));
        }
        let recs = parse_volume_csv(&csv).unwrap();
        let (sym, v) = aggregate_window(&recs, "2022-01").unwrap();
        let rep = same_base_correlation(&sym, &v, "QA", "QB").unwrap();
        assert!(rep.correlation < 0.0);
        // Direct Pearson on logs: exactly -1 for a geometric anti-order.
        assert!((rep.correlation + 1.0).abs() < 1e-12);
        // Raw-space value from the textbook formula.
        let n = 4.0;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        let expect = sxy / (sxx * syy).sqrt();
        assert!((rep.raw_correlation - expect).abs() < 1e-12);
    }

    #[test]
    fn correlation_needs_three_bases() {
        let recs = parse_volume_csv(
            "base,quote,volume,window\n\
             P,A,1,2022-01\nP,B,2,2022-01\nQ,A,5,2022-01\nQ,B,10,2022-01\n",
        )
        .unwrap();
        let (sym, v) = aggregate_window(&recs, "2022-01").unwrap();
        assert!(matches!(
            same_base_correlation(&sym, &v, "A", "B"),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn windowed_dataset_shares_table_and_sorts_periods() {
        let recs = parse_volume_csv(
            "base,quote,volume,window\n\
             BTC,USDT,5,2022-02\nETH,USDT,3,2022-01\nBTC,ETH,1,2022-01\n",
        )
        .unwrap();
        let ds = WindowedDataset::from_records(&recs).unwrap();
        assert_eq!(ds.windows.len(), 2);
        assert_eq!(ds.windows[0].0, "2022-01");
        assert_eq!(ds.windows[1].0, "2022-02");
        assert_eq!(ds.symbols.len(), 3);
        for (_, v) in &ds.windows {
            assert_eq!(v.n(), 3);
        }
    }

    #[test]
    fn stats_table_has_overview_columns() {
        let rows = vec![(
            "2022-01".to_string(),
            DatasetStats { n_coins: 3, n_pairs: 2, total_volume: 8.0, topk_share: 1.0 },
        )];
        let table = render_stats_table(&rows, 20);
        assert!(table.contains("#Coins"));
        assert!(table.contains("#Pairs"));
        assert!(table.contains("Volume($)"));
        assert!(table.contains("Top20(%)"));
    }
}
