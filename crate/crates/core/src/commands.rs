//! The `simulate`, `fit`, `summarize` and `diagnose` commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::gibbs::{for_each_node, run_node};
use crate::io::{
    column_names, draw_path, fmt_f64, read_csv, read_draws, write_csv, write_draws, write_json, write_rows,
    DrawFormat, FitConfig, NodeStatus, RunManifest,
};
use crate::metrics::{fdr_cutoff, geweke_suite, h_scores, GewekeConfig, HScoreMethod};
use crate::model::Dataset;
use crate::simgen::{gen_dataset, SimConfig, SimTruth};
use crate::summary::{
    alpha_hat, epp_edge, individual_network, percentile_queries, pip_alpha, population_network, symmetrize_alpha,
    symmetrize_epp, AlphaRule, Cutoff, EdgeRule, DEFAULT_PERCENTILES,
};
use crate::PosteriorDraws;

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Serialized view of the simulation truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub pi: f64,
    pub t0: f64,
    pub rejections: usize,
    /// Supported pairs `(j, k)` with `j < k`.
    pub support: Vec<(usize, usize)>,
    /// `nu[j][k][h]`.
    pub nu: Vec<Vec<Vec<f64>>>,
    pub all_scales_one: bool,
    pub scales: Vec<Vec<f64>>,
    /// `(i, j, k, sign)` for every realized edge with `j < k`; `sign` is the
    /// sign of the regression coefficient.
    pub edges: Vec<(usize, usize, usize, i8)>,
    /// `(j, k, h)` with `j < k` for every nonzero covariate coefficient.
    pub covariate_support: Vec<(usize, usize, usize)>,
}

impl TruthFile {
    pub fn from_truth(sim: &SimTruth, pi: f64) -> Self {
        let (n, p) = sim.y.dim();
        let q = sim.x.ncols();
        let mut support = Vec::new();
        let mut covariate_support = Vec::new();
        for j in 0..p {
            for k in (j + 1)..p {
                if sim.spec.support[[j, k]] {
                    support.push((j, k));
                }
                for h in 0..q {
                    if sim.covariate_support[[j, k, h]] {
                        covariate_support.push((j, k, h));
                    }
                }
            }
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for &(j, k) in &support {
                if sim.edges[[i, j, k]] {
                    edges.push((i, j, k, sim.signs[[i, j, k]]));
                }
            }
        }
        TruthFile {
            n,
            p,
            q,
            pi,
            t0: sim.spec.t0,
            rejections: sim.spec.rejections,
            support,
            nu: (0..p).map(|j| (0..p).map(|k| (0..q).map(|h| sim.spec.nu[[j, k, h]]).collect()).collect()).collect(),
            all_scales_one: sim.scales.iter().all(|&d| d == 1.0),
            scales: sim.scales.rows().into_iter().map(|r| r.to_vec()).collect(),
            edges,
            covariate_support,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateArgs {
    pub out: PathBuf,
    pub sim: SimConfig,
    pub seed: u64,
}

/// Writes `y.csv`, `x.csv`, `truth.json` and, last, `manifest.json`.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimTruth> {
    let start = Instant::now();
    args.sim.precision.validate()?;
    ensure_dir(&args.out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let sim = gen_dataset(&args.sim, &mut rng)?;
    let y_path = args.out.join("y.csv");
    let x_path = args.out.join("x.csv");
    let truth_path = args.out.join("truth.json");
    write_csv(&y_path, &column_names("y", args.sim.p), sim.y.view())?;
    write_csv(&x_path, &column_names("x", args.sim.q), sim.x.view())?;
    write_json(&truth_path, &TruthFile::from_truth(&sim, args.sim.pi))?;
    let config = serde_json::to_value(&args.sim).map_err(|e| Error::Config(e.to_string()))?;
    let mut manifest = RunManifest::new("simulate", args.seed, config);
    manifest.dims = Some((args.sim.n, args.sim.p, args.sim.q));
    manifest.outputs = ["y.csv", "x.csv", "truth.json"].iter().map(|s| s.to_string()).collect();
    manifest.seconds = start.elapsed().as_secs_f64();
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(sim)
}

/// Loads a dataset written by [`cmd_simulate`] or with the same layout.
pub fn load_dataset(y_path: &Path, x_path: &Path, center: bool) -> Result<Dataset> {
    let (_, y) = read_csv(y_path)?;
    let (_, x) = read_csv(x_path)?;
    Dataset::new(y, x, center)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitArgs {
    pub y: PathBuf,
    pub x: PathBuf,
    pub out: PathBuf,
    pub config: FitConfig,
    pub format: DrawFormat,
    pub threads: Option<usize>,
    pub center: bool,
}

/// Runs every node's chain and writes `draws/node_<j>.<ext>` plus
/// `manifest.json`. Node failures are recorded in the manifest and
/// reported as the first failing node's error.
pub fn cmd_fit(args: &FitArgs) -> Result<RunManifest> {
    let start = Instant::now();
    args.config.validate()?;
    let data = load_dataset(&args.y, &args.x, args.center)?;
    let draws_dir = args.out.join("draws");
    ensure_dir(&draws_dir)?;
    let cfg = &args.config;
    let results = for_each_node(data.p(), args.threads, |j| {
        let t0 = Instant::now();
        let res = run_node(&data, &cfg.hyper, &cfg.chain, &cfg.options, j).and_then(|d| {
            let path = draw_path(&draws_dir, j, args.format);
            write_draws(&path, &d, data.p(), args.format)?;
            Ok((d.len(), path))
        });
        (res, t0.elapsed().as_secs_f64())
    })?;
    let config = json!({
        "fit": cfg,
        "format": args.format,
        "center": args.center,
        "threads": args.threads,
        "y": args.y.display().to_string(),
        "x": args.x.display().to_string(),
    });
    let mut manifest = RunManifest::new("fit", cfg.chain.seed, config);
    manifest.add_input(&args.y)?;
    manifest.add_input(&args.x)?;
    manifest.dims = Some((data.n(), data.p(), data.q()));
    manifest.draw_format = Some(args.format);
    let mut first_err = None;
    for (j, (res, secs)) in results.into_iter().enumerate() {
        let status = match res {
            Ok((count, path)) => {
                let rel = format!("draws/{}", path.file_name().expect("file name").to_string_lossy());
                manifest.outputs.push(rel.clone());
                NodeStatus { node: j, status: "ok".into(), seconds: secs, draws: count, file: Some(rel), error: None }
            }
            Err(e) => {
                let msg = e.to_string();
                first_err.get_or_insert(Error::Node { node: j, source: Box::new(e) });
                NodeStatus { node: j, status: "failed".into(), seconds: secs, draws: 0, file: None, error: Some(msg) }
            }
        };
        manifest.nodes.push(status);
    }
    manifest.seconds = start.elapsed().as_secs_f64();
    manifest.write(&args.out.join("manifest.json"))?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

/// Reads the manifest and every node's draws from a fit directory.
pub fn load_fit(dir: &Path) -> Result<(RunManifest, Vec<PosteriorDraws>)> {
    let manifest = RunManifest::load(&dir.join("manifest.json"))?;
    let (_, p, q) = manifest.dims.ok_or_else(|| Error::format(dir, "manifest lacks data dimensions"))?;
    let format = manifest.draw_format.ok_or_else(|| Error::format(dir, "manifest is not from a fit"))?;
    if manifest.nodes.iter().any(|n| n.status != "ok") {
        return Err(Error::format(dir, "fit has failed nodes"));
    }
    let draws = (0..p)
        .map(|j| read_draws(&draw_path(&dir.join("draws"), j, format), j, p, q, format))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, draws))
}

fn manifest_input(manifest: &RunManifest, idx: usize) -> Result<PathBuf> {
    manifest
        .inputs
        .get(idx)
        .map(|i| PathBuf::from(&i.path))
        .ok_or(Error::CorruptState("manifest inputs"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummarizeArgs {
    pub fit: PathBuf,
    /// Covariate file; defaults to the one recorded by the fit.
    pub x: Option<PathBuf>,
    pub out: PathBuf,
    pub c0: f64,
    pub c1: f64,
    pub alpha_rule: AlphaRule,
    pub edge_rule: EdgeRule,
    /// Derive both cutoffs from this FDR level instead of `c0`/`c1`.
    pub fdr: Option<f64>,
    /// Covariate varied across the percentile networks.
    pub covariate: usize,
    pub percentiles: Vec<f64>,
}

impl SummarizeArgs {
    pub fn new(fit: PathBuf, out: PathBuf) -> Self {
        SummarizeArgs {
            fit,
            x: None,
            out,
            c0: 0.5,
            c1: 0.5,
            alpha_rule: AlphaRule::Min,
            edge_rule: EdgeRule::Max,
            fdr: None,
            covariate: 0,
            percentiles: DEFAULT_PERCENTILES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub c0: f64,
    pub c1: f64,
    pub population_edges: usize,
    pub individual_edges: usize,
}

/// Writes `population_edges.csv` and `individual_edges.csv`.
pub fn cmd_summarize(args: &SummarizeArgs) -> Result<SummaryReport> {
    let (manifest, draws) = load_fit(&args.fit)?;
    let x_path = match &args.x {
        Some(p) => p.clone(),
        None => manifest_input(&manifest, 1)?,
    };
    let (_, x) = read_csv(&x_path)?;
    if args.covariate >= x.ncols() {
        return Err(Error::InvalidParameter(format!("covariate {} out of range", args.covariate)));
    }
    let sym = symmetrize_alpha(&pip_alpha(&draws)?, &alpha_hat(&draws)?, args.alpha_rule)?;
    let queries = percentile_queries(x.view(), args.covariate, &args.percentiles)?;
    let probs = queries
        .iter()
        .map(|qv| epp_edge(&draws, &sym, qv.view()))
        .collect::<Result<Vec<_>>>()?;
    let p = draws.len();
    let (c0, c1) = match args.fdr {
        Some(alpha) => {
            let pips: Vec<f64> = (0..p)
                .flat_map(|j| ((j + 1)..p).map(move |k| (j, k)))
                .flat_map(|(j, k)| (0..sym.pip.dim().2).map(move |h| (j, k, h)))
                .map(|idx| sym.pip[idx])
                .collect();
            let mut epps = Vec::new();
            for pr in &probs {
                let (e, _) = symmetrize_epp(&pr.epp, args.edge_rule)?;
                for j in 0..p {
                    for k in (j + 1)..p {
                        epps.push(e[[j, k]]);
                    }
                }
            }
            (Cutoff::AtLeast(fdr_cutoff(&pips, alpha)), Cutoff::AtLeast(fdr_cutoff(&epps, alpha)))
        }
        None => (Cutoff::Above(args.c0), Cutoff::Above(args.c1)),
    };
    ensure_dir(&args.out)?;
    let mut pop_rows = Vec::new();
    for net in population_network(&sym, c0) {
        for e in net.edges {
            pop_rows.push(vec![
                e.node_a.to_string(),
                e.node_b.to_string(),
                e.covariate.to_string(),
                fmt_f64(e.alpha_hat),
                fmt_f64(e.pip),
                e.sign.to_string(),
            ]);
        }
    }
    write_rows(
        &args.out.join("population_edges.csv"),
        &["node_a", "node_b", "covariate", "alpha_hat", "pip", "sign"],
        &pop_rows,
    )?;
    let mut ind_rows = Vec::new();
    for (pct, pr) in args.percentiles.iter().zip(&probs) {
        for e in individual_network(pr, args.edge_rule, c1)?.edges {
            ind_rows.push(vec![
                format!("{pct}"),
                e.node_a.to_string(),
                e.node_b.to_string(),
                fmt_f64(e.epp),
                e.sign.to_string(),
            ]);
        }
    }
    write_rows(
        &args.out.join("individual_edges.csv"),
        &["percentile", "node_a", "node_b", "epp", "sign"],
        &ind_rows,
    )?;
    Ok(SummaryReport {
        c0: c0.value(),
        c1: c1.value(),
        population_edges: pop_rows.len(),
        individual_edges: ind_rows.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseArgs {
    pub fit: PathBuf,
    /// Response file for the H-scores; defaults to the one recorded by the fit.
    pub y: Option<PathBuf>,
    pub out: PathBuf,
    pub geweke: GewekeConfig,
    pub h_method: HScoreMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub converged: bool,
    pub failing_chains: usize,
    pub h_scores: Vec<f64>,
}

/// Writes `geweke.csv`, `hscore.csv` and `trace_node_<j>.csv`.
pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<DiagnoseReport> {
    let (manifest, draws) = load_fit(&args.fit)?;
    let y_path = match &args.y {
        Some(p) => p.clone(),
        None => manifest_input(&manifest, 0)?,
    };
    let (_, y) = read_csv(&y_path)?;
    ensure_dir(&args.out)?;
    let suite = geweke_suite(&draws, &args.geweke)?;
    let rows: Vec<Vec<String>> = suite
        .entries
        .iter()
        .map(|e| {
            vec![
                e.j.to_string(),
                e.k.to_string(),
                e.h.to_string(),
                fmt_f64(e.z),
                fmt_f64(e.p_value),
                e.pass.to_string(),
            ]
        })
        .collect();
    write_rows(&args.out.join("geweke.csv"), &["j", "k", "h", "z", "p", "adjusted_pass"], &rows)?;
    let h = h_scores(y.view(), args.h_method)?;
    let rows: Vec<Vec<String>> = h.iter().enumerate().map(|(j, v)| vec![j.to_string(), fmt_f64(*v)]).collect();
    write_rows(&args.out.join("hscore.csv"), &["column", "h_score"], &rows)?;
    for d in &draws {
        let rows: Vec<Vec<String>> = (0..d.len())
            .map(|s| {
                vec![
                    d.iterations[s].to_string(),
                    fmt_f64(d.loglik[s]),
                    fmt_f64(d.t[s]),
                    fmt_f64(d.sigma2[s]),
                    fmt_f64(d.unit_scale_frac[s]),
                ]
            })
            .collect();
        write_rows(
            &args.out.join(format!("trace_node_{}.csv", d.node)),
            &["iteration", "loglik", "t", "sigma2", "unit_scale_frac"],
            &rows,
        )?;
    }
    Ok(DiagnoseReport {
        converged: suite.converged,
        failing_chains: suite.entries.iter().filter(|e| !e.pass).count(),
        h_scores: h,
    })
}
