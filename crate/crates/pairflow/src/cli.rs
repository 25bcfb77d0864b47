//! Batch subcommands wiring ingestion, estimation, search, and evaluation.
//!
//! Every command is deterministic for fixed inputs, flags, and seed, and
//! echoes its fully resolved configuration into the output (a `config`
//! object in JSON, `# key=value` comment lines in CSV). Flag values override
//! config-file values, which override built-in defaults.
//!
//! Exit codes: 0 success, 2 input missing/unreadable, 3 data validation
//! failure, 4 infeasible configuration, 5 internal error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use crate::bnb::{search, BranchRule, SearchConfig};
use crate::error::{Error, Result};
use crate::eval::{coverage_curve, diff_pairs, retention_curve};
use crate::ingest::{
    aggregate_window, concentration_stats, parse_volume_csv, records_to_csv, render_stats_table,
    top_k_filter, DatasetStats, VolumeRecord, WindowedDataset,
};
use crate::ipm::{estimate, IpmConfig};
use crate::matcore::{reconstruct_k, SymbolTable, SymMatrix, VolumeMatrix};
use crate::synth::{generate, SynthConfig};

#[derive(Parser, Debug)]
#[command(
    name = "pairflow",
    version,
    about = "Estimate latent trading volume and optimize exchange pair listings"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dataset overview statistics per window and overall
    Stats(CommonArgs),
    /// Estimate the latent volume factors for one window
    Estimate(CommonArgs),
    /// Search for the optimal M-edge trading-pair graph in one window
    Optimize(CommonArgs),
    /// Coverage and retention curves over all windows for an M sweep
    Evaluate(CommonArgs),
    /// Generate a synthetic dataset with a known ground truth
    Synth(CommonArgs),
}

/// One flag set shared by all commands; each command reads the subset it
/// needs and rejects contradictions through its own validation.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Input CSV path (base,quote,volume,window)
    #[arg(long)]
    input: Option<String>,
    /// Output path; stdout when omitted
    #[arg(long)]
    output: Option<String>,
    /// Output format: json or csv
    #[arg(long)]
    format: Option<String>,
    /// Config file (JSON or key=value lines) supplying defaults for flags
    #[arg(long)]
    config: Option<String>,
    /// Calendar month to operate on, e.g. 2022-03
    #[arg(long)]
    window: Option<String>,
    /// Keep only the top-k assets by volume
    #[arg(long)]
    top_k: Option<usize>,
    /// Edge budget for optimize (defaults to the observed pair count)
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated edge budgets for evaluate, e.g. 9,14,20
    #[arg(long, value_delimiter = ',')]
    m_sweep: Option<Vec<usize>>,
    /// Regularization weight on unlisted cells
    #[arg(long)]
    lambda: Option<f64>,
    /// Seed for all randomized choices
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, hide = true)]
    mu0: Option<f64>,
    #[arg(long, hide = true)]
    sigma: Option<f64>,
    #[arg(long, hide = true)]
    mu_min: Option<f64>,
    #[arg(long, hide = true)]
    tol_kkt: Option<f64>,
    #[arg(long, hide = true)]
    tol_orth: Option<f64>,
    #[arg(long, hide = true)]
    max_outer: Option<usize>,
    #[arg(long, hide = true)]
    max_newton: Option<usize>,
    #[arg(long, hide = true)]
    ftb_tau: Option<f64>,
    /// Node expansion cap for the search
    #[arg(long)]
    node_cap: Option<usize>,
    /// Asset count for synth
    #[arg(long)]
    n: Option<usize>,
    /// Listed-pair density for synth, in (0, 1]
    #[arg(long)]
    density: Option<f64>,
    /// Noise level for synth (relative to the mean listed volume)
    #[arg(long)]
    noise: Option<f64>,
    /// Number of monthly windows for synth
    #[arg(long)]
    windows: Option<usize>,
}

/// Flat key-value run configuration; every field mirrors a flag.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    input: Option<String>,
    output: Option<String>,
    format: Option<String>,
    window: Option<String>,
    top_k: Option<usize>,
    m: Option<usize>,
    m_sweep: Option<Vec<usize>>,
    lambda: Option<f64>,
    seed: Option<u64>,
    mu0: Option<f64>,
    sigma: Option<f64>,
    mu_min: Option<f64>,
    tol_kkt: Option<f64>,
    tol_orth: Option<f64>,
    max_outer: Option<usize>,
    max_newton: Option<usize>,
    ftb_tau: Option<f64>,
    node_cap: Option<usize>,
    n: Option<usize>,
    density: Option<f64>,
    noise: Option<f64>,
    windows: Option<usize>,
}

impl RunConfig {
    fn from_file(path: &str) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            return Ok(serde_json::from_str(&text)?);
        }
        // key=value lines, # comments
        let mut cfg = RunConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: no + 1,
                msg: format!("expected key=value, found `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::Parse {
                line: no + 1,
                msg: format!("invalid {what}: `{value}`"),
            };
            match key {
                "input" => cfg.input = Some(value.to_string()),
                "output" => cfg.output = Some(value.to_string()),
                "format" => cfg.format = Some(value.to_string()),
                "window" => cfg.window = Some(value.to_string()),
                "top_k" => cfg.top_k = Some(value.parse().map_err(|_| bad("integer"))?),
                "m" => cfg.m = Some(value.parse().map_err(|_| bad("integer"))?),
                "m_sweep" => {
                    let parsed: std::result::Result<Vec<usize>, _> =
                        value.split(',').map(|v| v.trim().parse()).collect();
                    cfg.m_sweep = Some(parsed.map_err(|_| bad("integer list"))?);
                }
                "lambda" => cfg.lambda = Some(value.parse().map_err(|_| bad("number"))?),
                "seed" => cfg.seed = Some(value.parse().map_err(|_| bad("integer"))?),
                "mu0" => cfg.mu0 = Some(value.parse().map_err(|_| bad("number"))?),
                "sigma" => cfg.sigma = Some(value.parse().map_err(|_| bad("number"))?),
                "mu_min" => cfg.mu_min = Some(value.parse().map_err(|_| bad("number"))?),
                "tol_kkt" => cfg.tol_kkt = Some(value.parse().map_err(|_| bad("number"))?),
                "tol_orth" => cfg.tol_orth = Some(value.parse().map_err(|_| bad("number"))?),
                "max_outer" => cfg.max_outer = Some(value.parse().map_err(|_| bad("integer"))?),
                "max_newton" => cfg.max_newton = Some(value.parse().map_err(|_| bad("integer"))?),
                "ftb_tau" => cfg.ftb_tau = Some(value.parse().map_err(|_| bad("number"))?),
                "node_cap" => cfg.node_cap = Some(value.parse().map_err(|_| bad("integer"))?),
                "n" => cfg.n = Some(value.parse().map_err(|_| bad("integer"))?),
                "density" => cfg.density = Some(value.parse().map_err(|_| bad("number"))?),
                "noise" => cfg.noise = Some(value.parse().map_err(|_| bad("number"))?),
                "windows" => cfg.windows = Some(value.parse().map_err(|_| bad("integer"))?),
                other => {
                    return Err(Error::InvalidConfig(format!("unknown config key `{other}`")));
                }
            }
        }
        Ok(cfg)
    }

    /// Flags override config-file values.
    fn overlaid(self, a: &CommonArgs) -> RunConfig {
        RunConfig {
            input: a.input.clone().or(self.input),
            output: a.output.clone().or(self.output),
            format: a.format.clone().or(self.format),
            window: a.window.clone().or(self.window),
            top_k: a.top_k.or(self.top_k),
            m: a.m.or(self.m),
            m_sweep: a.m_sweep.clone().or(self.m_sweep),
            lambda: a.lambda.or(self.lambda),
            seed: a.seed.or(self.seed),
            mu0: a.mu0.or(self.mu0),
            sigma: a.sigma.or(self.sigma),
            mu_min: a.mu_min.or(self.mu_min),
            tol_kkt: a.tol_kkt.or(self.tol_kkt),
            tol_orth: a.tol_orth.or(self.tol_orth),
            max_outer: a.max_outer.or(self.max_outer),
            max_newton: a.max_newton.or(self.max_newton),
            ftb_tau: a.ftb_tau.or(self.ftb_tau),
            node_cap: a.node_cap.or(self.node_cap),
            n: a.n.or(self.n),
            density: a.density.or(self.density),
            noise: a.noise.or(self.noise),
            windows: a.windows.or(self.windows),
        }
    }

    fn resolve(args: &CommonArgs) -> Result<RunConfig> {
        let base = match &args.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overlaid(args))
    }

    fn ipm_config(&self) -> IpmConfig {
        let d = IpmConfig::default();
        IpmConfig {
            lambda_reg: self.lambda.unwrap_or(d.lambda_reg),
            mu0: self.mu0.unwrap_or(d.mu0),
            sigma: self.sigma.unwrap_or(d.sigma),
            mu_min: self.mu_min.unwrap_or(d.mu_min),
            tol_kkt: self.tol_kkt.unwrap_or(d.tol_kkt),
            tol_orth: self.tol_orth.unwrap_or(d.tol_orth),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            max_newton: self.max_newton.unwrap_or(d.max_newton),
            ftb_tau: self.ftb_tau.unwrap_or(d.ftb_tau),
            seed: self.seed.unwrap_or(0),
        }
    }

    fn search_config(&self, m: usize) -> SearchConfig {
        SearchConfig {
            m,
            node_cap: self.node_cap.unwrap_or_else(|| SearchConfig::new(m).node_cap),
            branch_rule: BranchRule::LargestValue,
        }
    }

    fn format(&self) -> Result<OutputFormat> {
        match self.format.as_deref() {
            None | Some("json") => Ok(OutputFormat::Json),
            Some("csv") => Ok(OutputFormat::Csv),
            Some(other) => Err(Error::InvalidConfig(format!(
                "format must be json or csv, got `{other}`"
            ))),
        }
    }

    /// The fully resolved settings relevant to `keys`, for echoing.
    fn echo(&self, keys: &[&str]) -> BTreeMap<String, serde_json::Value> {
        let ipm = self.ipm_config();
        let mut map = BTreeMap::new();
        for &k in keys {
            let v: serde_json::Value = match k {
                "input" => json!(self.input),
                "output" => json!(self.output),
                "format" => json!(self.format.clone().unwrap_or_else(|| "json".into())),
                "window" => json!(self.window),
                "top_k" => json!(self.top_k),
                "m" => json!(self.m),
                "m_sweep" => json!(self.m_sweep),
                "lambda" => json!(ipm.lambda_reg),
                "seed" => json!(ipm.seed),
                "mu0" => json!(ipm.mu0),
                "sigma" => json!(ipm.sigma),
                "mu_min" => json!(ipm.mu_min),
                "tol_kkt" => json!(ipm.tol_kkt),
                "tol_orth" => json!(ipm.tol_orth),
                "max_outer" => json!(ipm.max_outer),
                "max_newton" => json!(ipm.max_newton),
                "ftb_tau" => json!(ipm.ftb_tau),
                "node_cap" => json!(self.node_cap.unwrap_or(10_000_000)),
                "n" => json!(self.n),
                "density" => json!(self.density),
                "noise" => json!(self.noise.unwrap_or(0.0)),
                "windows" => json!(self.windows.unwrap_or(1)),
                _ => json!(null),
            };
            map.insert(k.to_string(), v);
        }
        map
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OutputFormat {
    Json,
    Csv,
}

fn config_comment_block(echo: &BTreeMap<String, serde_json::Value>) -> String {
    let mut out = String::new();
    for (k, v) in echo {
        let _ = writeln!(out, "# {k}={v}");
    }
    out
}

fn write_output(path: Option<&str>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, content)?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn read_records(cfg: &RunConfig) -> Result<Vec<VolumeRecord>> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("--input is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::Io(std::io::Error::new(e.kind(), format!("input not found: {path}")))
        } else {
            Error::Io(e)
        }
    })?;
    parse_volume_csv(&text)
}

/// Picks the requested window, or the only window when unambiguous.
fn select_window<'d>(
    ds: &'d WindowedDataset,
    requested: Option<&str>,
) -> Result<(&'d str, &'d VolumeMatrix)> {
    match requested {
        Some(w) => ds
            .windows
            .iter()
            .find(|(p, _)| p == w)
            .map(|(p, v)| (p.as_str(), v))
            .ok_or_else(|| Error::EmptyWindow(format!("window {w} not in dataset"))),
        None if ds.windows.len() == 1 => {
            let (p, v) = &ds.windows[0];
            Ok((p.as_str(), v))
        }
        None => Err(Error::InvalidConfig(
            "--window is required when the input has several windows".into(),
        )),
    }
}

/// Window data after the optional top-k cut.
fn windowed_view(
    ds: &WindowedDataset,
    cfg: &RunConfig,
) -> Result<(String, SymbolTable, VolumeMatrix)> {
    let (period, v) = select_window(ds, cfg.window.as_deref())?;
    let (symbols, v) = match cfg.top_k {
        Some(k) => top_k_filter(&ds.symbols, v, k)?,
        None => (ds.symbols.clone(), v.clone()),
    };
    Ok((period.to_string(), symbols, v))
}

fn cmd_stats(cfg: &RunConfig) -> Result<()> {
    let records = read_records(cfg)?;
    let ds = WindowedDataset::from_records(&records)?;
    let k = cfg.top_k.unwrap_or(20);

    let mut rows: Vec<(String, DatasetStats)> = Vec::new();
    for (period, _) in &ds.windows {
        let (symbols, v) = aggregate_window(&records, period)?;
        let stats = concentration_stats(&symbols, &v, k.min(symbols.len()))?;
        rows.push((period.clone(), stats));
    }
    // Overall: sum of all windows on the shared table.
    let n = ds.symbols.len();
    let mut total = SymMatrix::zeros(n);
    for (_, v) in &ds.windows {
        for i in 0..n {
            for j in (i + 1)..n {
                total.set(i, j, total.get(i, j) + v.get(i, j));
            }
        }
    }
    let overall = concentration_stats(&ds.symbols, &VolumeMatrix::new(total)?, k.min(n))?;
    rows.push(("overall".to_string(), overall));

    let echo = cfg.echo(&["input", "output", "format", "top_k"]);
    let content = match cfg.format()? {
        OutputFormat::Json => {
            let table = render_stats_table(&rows, k);
            let rows_json: Vec<_> = rows
                .iter()
                .map(|(w, s)| {
                    json!({
                        "window": w,
                        "n_coins": s.n_coins,
                        "n_pairs": s.n_pairs,
                        "total_volume": s.total_volume,
                        "topk_share": s.topk_share,
                    })
                })
                .collect();
            let doc = json!({ "config": echo, "stats": rows_json, "table": table });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        OutputFormat::Csv => {
            let mut out = config_comment_block(&echo);
            let _ = writeln!(out, "window,#Coins,#Pairs,Volume($),Top{k}(%)");
            for (w, s) in &rows {
                let _ = writeln!(
                    out,
                    "{w},{},{},{},{}",
                    s.n_coins,
                    s.n_pairs,
                    s.total_volume,
                    s.topk_share * 100.0
                );
            }
            out
        }
    };
    write_output(cfg.output.as_deref(), &content)
}

fn cmd_estimate(cfg: &RunConfig) -> Result<()> {
    let records = read_records(cfg)?;
    let ds = WindowedDataset::from_records(&records)?;
    let (period, symbols, v) = windowed_view(&ds, cfg)?;
    let ipm_cfg = cfg.ipm_config();
    let mask = v.support_graph();
    let (factors, report) = estimate(&v, &mask, &ipm_cfg)?;

    // Per-ticker factors sorted by descending mass, ties by ticker.
    let mut order: Vec<usize> = (0..symbols.len()).collect();
    order.sort_by(|&a, &b| {
        factors.w1[b]
            .total_cmp(&factors.w1[a])
            .then_with(|| symbols.ticker(a).cmp(symbols.ticker(b)))
    });

    let echo = cfg.echo(&[
        "input", "output", "format", "window", "top_k", "lambda", "seed", "mu0", "sigma",
        "mu_min", "tol_kkt", "tol_orth", "max_outer", "max_newton", "ftb_tau",
    ]);
    let content = match cfg.format()? {
        OutputFormat::Json => {
            let rows: Vec<_> = order
                .iter()
                .map(|&i| {
                    json!({
                        "ticker": symbols.ticker(i),
                        "w1": factors.w1[i],
                        "w2": factors.w2[i],
                    })
                })
                .collect();
            let doc = json!({
                "config": echo,
                "window": period,
                "factors": rows,
                "report": report,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        OutputFormat::Csv => {
            let mut out = config_comment_block(&echo);
            let _ = writeln!(out, "ticker,w1,w2");
            for &i in &order {
                let _ = writeln!(out, "{},{},{}", symbols.ticker(i), factors.w1[i], factors.w2[i]);
            }
            let _ = writeln!(
                out,
                "# converged={} kkt_residual={:e} orth={:e} objective={:e}",
                report.converged, report.final_kkt_residual, report.final_orth, report.objective
            );
            out
        }
    };
    write_output(cfg.output.as_deref(), &content)
}

fn cmd_optimize(cfg: &RunConfig) -> Result<()> {
    let records = read_records(cfg)?;
    let ds = WindowedDataset::from_records(&records)?;
    let (period, symbols, v) = windowed_view(&ds, cfg)?;
    let observed = v.support_graph();
    let m = cfg.m.unwrap_or_else(|| observed.edge_count());

    let ipm_cfg = cfg.ipm_config();
    let (factors, report) = estimate(&v, &observed, &ipm_cfg)?;
    let k_star = reconstruct_k(&factors)?;
    let res = search(&k_star, &cfg.search_config(m))?;
    let diff = diff_pairs(&observed, &res.graph, &symbols)?;

    let edges: Vec<(String, String)> = res
        .graph
        .edge_list()
        .into_iter()
        .map(|(i, j)| (symbols.ticker(i).to_string(), symbols.ticker(j).to_string()))
        .collect();

    let echo = cfg.echo(&[
        "input", "output", "format", "window", "top_k", "m", "lambda", "seed", "node_cap",
    ]);
    let content = match cfg.format()? {
        OutputFormat::Json => {
            let doc = json!({
                "config": echo,
                "window": period,
                "m": m,
                "estimator_converged": report.converged,
                "result": {
                    "edges": edges,
                    "objective": res.objective,
                    "optimal": res.optimal,
                    "nodes_expanded": res.nodes_expanded,
                    "nodes_pruned": res.nodes_pruned,
                },
                "diff": { "removed": diff.removed, "added": diff.added },
            });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        OutputFormat::Csv => {
            let mut out = config_comment_block(&echo);
            let _ = writeln!(out, "status,base,quote");
            for (a, b) in &edges {
                let status = if diff.added.contains(&(a.clone(), b.clone()))
                    || diff.added.contains(&(b.clone(), a.clone()))
                {
                    "added"
                } else {
                    "kept"
                };
                let _ = writeln!(out, "{status},{a},{b}");
            }
            for (a, b) in &diff.removed {
                let _ = writeln!(out, "removed,{a},{b}");
            }
            let _ = writeln!(
                out,
                "# objective={:e} optimal={} nodes_expanded={} nodes_pruned={}",
                res.objective, res.optimal, res.nodes_expanded, res.nodes_pruned
            );
            out
        }
    };
    write_output(cfg.output.as_deref(), &content)
}

fn cmd_evaluate(cfg: &RunConfig) -> Result<()> {
    let records = read_records(cfg)?;
    let ds = WindowedDataset::from_records(&records)?;
    if ds.windows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "evaluation needs >= 2 windows, got {}",
            ds.windows.len()
        )));
    }
    let ms = cfg
        .m_sweep
        .clone()
        .ok_or_else(|| Error::InvalidConfig("--m-sweep is required for evaluate".into()))?;
    if ms.is_empty() {
        return Err(Error::InvalidConfig("--m-sweep must not be empty".into()));
    }
    let ipm_cfg = cfg.ipm_config();
    let search_cfg = cfg.search_config(ms[0]);

    let mut coverage_rows = Vec::new();
    let mut errors = Vec::new();
    for (period, _) in &ds.windows {
        let points = coverage_curve(&ds, period, &ms, &ipm_cfg, &search_cfg)?;
        for point in points {
            match point {
                Ok(p) => coverage_rows.push(p),
                Err(e) => {
                    log::warn!("coverage point failed in {period}: {e}");
                    errors.push(json!({ "window": period, "error": e.to_string() }));
                }
            }
        }
    }
    let retention = retention_curve(&ds, &ms, &ipm_cfg, &search_cfg)?;

    let echo = cfg.echo(&[
        "input", "output", "format", "m_sweep", "top_k", "lambda", "seed", "node_cap",
    ]);
    let content = match cfg.format()? {
        OutputFormat::Json => {
            let doc = json!({
                "config": echo,
                "coverage": coverage_rows,
                "retention": retention,
                "errors": errors,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        OutputFormat::Csv => {
            let mut out = config_comment_block(&echo);
            let _ = writeln!(out, "window,m,coverage_realized,coverage_kstar,optimal,retention");
            for p in &coverage_rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},",
                    p.window, p.m, p.coverage, p.coverage_kstar, p.optimal
                );
            }
            for r in &retention {
                let _ = writeln!(out, ",{},,,,{}", r.m, r.retention);
            }
            out
        }
    };
    write_output(cfg.output.as_deref(), &content)
}

fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let synth_cfg = SynthConfig {
        n: cfg.n.ok_or_else(|| Error::InvalidConfig("--n is required for synth".into()))?,
        density: cfg
            .density
            .ok_or_else(|| Error::InvalidConfig("--density is required for synth".into()))?,
        noise: cfg.noise.unwrap_or(0.0),
        seed: cfg.seed.unwrap_or(0),
        windows: cfg.windows.unwrap_or(1),
    };
    let dataset = generate(&synth_cfg)?;

    let echo = cfg.echo(&["output", "n", "density", "noise", "seed", "windows"]);
    let mut csv = config_comment_block(&echo);
    csv.push_str(&records_to_csv(&dataset.to_records()));

    let truth = dataset.truth_sidecar(&synth_cfg);
    match cfg.output.as_deref() {
        Some(path) => {
            std::fs::write(path, &csv)?;
            let sidecar = format!("{}.truth.json", path);
            std::fs::write(&sidecar, format!("{}\n", serde_json::to_string_pretty(&truth)?))?;
            Ok(())
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// Runs a parsed command, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (args, run_fn): (&CommonArgs, fn(&RunConfig) -> Result<()>) = match &cli.command {
        Command::Stats(a) => (a, cmd_stats),
        Command::Estimate(a) => (a, cmd_estimate),
        Command::Optimize(a) => (a, cmd_optimize),
        Command::Evaluate(a) => (a, cmd_evaluate),
        Command::Synth(a) => (a, cmd_synth),
    };
    let cfg = match RunConfig::resolve(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match run_fn(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses argv-style arguments and runs; entry point for tests and `main`.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(cli),
        Err(e) => {
            // clap handles --help/--version printing itself
            let _ = e.print();
            if e.use_stderr() {
                4
            } else {
                0
            }
        }
    }
}

/// True when `path` exists; used by callers that must distinguish missing
/// inputs before doing any work.
pub fn input_exists(path: &str) -> bool {
    Path::new(path).exists()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ini_config_parses_known_keys() {
        let dir = std::env::temp_dir().join("pairflow_cli_test_ini");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "# comment\nlambda = 0.7\nm_sweep = 5, 9\ntop_k=20\n").unwrap();
        let cfg = RunConfig::from_file(path.to_str().unwrap()).unwrap();
        assert_eq!(cfg.lambda, Some(0.7));
        assert_eq!(cfg.m_sweep, Some(vec![5, 9]));
        assert_eq!(cfg.top_k, Some(20));
    }

    #[test]
    fn unknown_config_key_rejected() {
        let dir = std::env::temp_dir().join("pairflow_cli_test_unknown");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "lambduh=0.7\n").unwrap();
        assert!(matches!(
            RunConfig::from_file(path.to_str().unwrap()),
            Err(Error::InvalidConfig(_))
        ));
        let json_path = dir.join("run.json");
        std::fs::write(&json_path, "{\"lambduh\": 0.7}").unwrap();
        assert!(RunConfig::from_file(json_path.to_str().unwrap()).is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let file = RunConfig { lambda: Some(0.7), seed: Some(3), ..Default::default() };
        let args = CommonArgs { lambda: Some(1.5), ..Default::default() };
        let merged = file.overlaid(&args);
        assert_eq!(merged.lambda, Some(1.5));
        assert_eq!(merged.seed, Some(3));
    }
}
