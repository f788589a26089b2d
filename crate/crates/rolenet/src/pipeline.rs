//! End-to-end orchestration: configuration, the full run, and every file
//! artifact (manifest, similarity dump, edge list, scan curves, robust
//! partitions).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{parse_edge_list, parse_nodes_file, DirectedGraph, ParseOptions};
use crate::rbs::{self, KMax, RbsConfig, SimilarityMatrix};
use crate::rmst::{self, RmstNetwork};
use crate::stability::{self, MarkovProcess, RobustScale, ScanResult};

pub const MANDATORY_FILES: [&str; 4] = [
    "manifest.json",
    "rmst_edges.csv",
    "scan.csv",
    "robust_partitions.json",
];

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input_path: PathBuf,
    pub nodes_path: Option<PathBuf>,
    pub alpha: f64,
    pub k_max: KMax,
    pub gamma: f64,
    pub weighted_similarity: bool,
    pub t_min: f64,
    pub t_max: f64,
    pub n_times: usize,
    pub runs: usize,
    pub seed: u64,
    pub vi_threshold: f64,
    pub min_plateau: usize,
    pub output_dir: PathBuf,
    pub emit_similarity: bool,
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input_path: PathBuf::new(),
            nodes_path: None,
            alpha: 0.95,
            k_max: KMax::Auto,
            gamma: 0.5,
            weighted_similarity: false,
            t_min: 0.1,
            t_max: 1000.0,
            n_times: 100,
            runs: 100,
            seed: 0,
            vi_threshold: 0.05,
            min_plateau: 3,
            output_dir: PathBuf::from("rolenet-out"),
            emit_similarity: false,
            threads: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.gamma < 0.0 {
            return Err(Error::Config(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.t_min > 0.0) {
            return Err(Error::Config(format!(
                "t_min must be positive, got {}",
                self.t_min
            )));
        }
        if self.t_min >= self.t_max {
            return Err(Error::Config(format!(
                "t_min must be smaller than t_max ({} >= {})",
                self.t_min, self.t_max
            )));
        }
        if self.n_times < 2 {
            return Err(Error::Config(format!(
                "n_times must be >= 2, got {}",
                self.n_times
            )));
        }
        if self.runs < 2 {
            return Err(Error::Config(format!(
                "runs must be >= 2, got {}",
                self.runs
            )));
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Vec<f64> {
        let lo = self.t_min.log10();
        let hi = self.t_max.log10();
        (0..self.n_times)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (self.n_times - 1) as f64))
            .collect()
    }

    fn rbs_config(&self) -> RbsConfig {
        RbsConfig {
            alpha: self.alpha,
            k_max: self.k_max,
            ..RbsConfig::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigSnapshot {
    pub input_path: String,
    pub nodes_path: Option<String>,
    pub alpha: f64,
    pub k_max: String,
    pub gamma: f64,
    pub weighted_similarity: bool,
    pub t_min: f64,
    pub t_max: f64,
    pub n_times: usize,
    pub runs: usize,
    pub seed: u64,
    pub vi_threshold: f64,
    pub min_plateau: usize,
    pub output_dir: String,
    pub emit_similarity: bool,
    pub threads: Option<usize>,
}

impl From<&PipelineConfig> for ConfigSnapshot {
    fn from(cfg: &PipelineConfig) -> Self {
        ConfigSnapshot {
            input_path: cfg.input_path.display().to_string(),
            nodes_path: cfg.nodes_path.as_ref().map(|p| p.display().to_string()),
            alpha: cfg.alpha,
            k_max: match cfg.k_max {
                KMax::Auto => "auto".to_string(),
                KMax::Fixed(k) => k.to_string(),
            },
            gamma: cfg.gamma,
            weighted_similarity: cfg.weighted_similarity,
            t_min: cfg.t_min,
            t_max: cfg.t_max,
            n_times: cfg.n_times,
            runs: cfg.runs,
            seed: cfg.seed,
            vi_threshold: cfg.vi_threshold,
            min_plateau: cfg.min_plateau,
            output_dir: cfg.output_dir.display().to_string(),
            emit_similarity: cfg.emit_similarity,
            threads: cfg.threads,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeSummary {
    pub t: f64,
    pub n_communities: usize,
    pub best_stability: f64,
    pub mean_vi: f64,
    /// VI between the best partitions at this grid point and the next one;
    /// absent for the last point.
    pub vi_to_next: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectedScale {
    pub t: f64,
    pub n_communities: usize,
    pub stability: f64,
    pub mean_vi: f64,
    pub plateau_len: usize,
    pub assignment: Vec<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTimings {
    pub parse_secs: f64,
    pub rbs_secs: f64,
    pub rmst_secs: f64,
    pub scan_secs: f64,
    pub total_secs: f64,
}

/// The reproducibility record of a run. Note: `timings` varies between runs;
/// every other field is a deterministic function of (input bytes, config).
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: ConfigSnapshot,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub parse_warnings: ParseWarningSummary,
    pub lambda_1: f64,
    pub beta: f64,
    pub realized_k_max: usize,
    pub rmst_edge_count: usize,
    pub time_grid: Vec<f64>,
    pub per_time: Vec<TimeSummary>,
    pub selected_scales: Vec<SelectedScale>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParseWarningSummary {
    pub duplicate_edges: usize,
    pub self_loops: usize,
    pub weighted_lines: usize,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Formats a float with full round-trip precision (shortest representation).
fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn similarity_csv(y: &DMatrix<f64>, labels: &[String]) -> String {
    let n = y.nrows();
    let mut out = labels.join(",");
    out.push('\n');
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| fmt(y[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_similarity_csv(text: &str) -> Result<(Vec<String>, SimilarityMatrix)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 0,
        message: "empty similarity file".to_string(),
    })?;
    let labels: Vec<String> = header.split(',').map(str::to_string).collect();
    let n = labels.len();
    let mut y = DMatrix::zeros(n, n);
    let mut rows = 0;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<&str> = line.split(',').collect();
        if values.len() != n || rows >= n {
            return Err(Error::Parse {
                line: lineno + 2,
                message: format!("expected {n} columns and {n} rows in the similarity matrix"),
            });
        }
        for (j, v) in values.iter().enumerate() {
            y[(rows, j)] = v.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno + 2,
                message: format!("bad similarity value {v:?}"),
            })?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Parse {
            line: 0,
            message: format!("similarity matrix has {rows} rows, expected {n}"),
        });
    }
    Ok((labels, SimilarityMatrix { y }))
}

pub fn rmst_edges_csv(net: &RmstNetwork, labels: &[String]) -> String {
    let mut out = String::from("source_label,target_label,similarity\n");
    for (idx, &(i, j)) in net.edges.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            labels[i],
            labels[j],
            fmt(net.similarities[idx])
        ));
    }
    out
}

/// Reads an RMST edge CSV back into a network (labels in first-appearance
/// order; the MST subset is not recorded in the CSV and is left empty).
pub fn parse_rmst_edges_csv(text: &str, gamma: f64) -> Result<(Vec<String>, RmstNetwork)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "source_label,target_label,similarity" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "expected header source_label,target_label,similarity".to_string(),
            })
        }
    }
    let mut labels: Vec<String> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut edges = Vec::new();
    let mut similarities = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected 3 columns, found {}", parts.len()),
            });
        }
        let mut resolve = |tok: &str| -> usize {
            *index.entry(tok.to_string()).or_insert_with(|| {
                labels.push(tok.to_string());
                labels.len() - 1
            })
        };
        let i = resolve(parts[0]);
        let j = resolve(parts[1]);
        let s = parts[2].parse::<f64>().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("bad similarity value {:?}", parts[2]),
        })?;
        edges.push((i.min(j), i.max(j)));
        similarities.push(s);
    }
    if edges.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "edge file contains no edges".to_string(),
        });
    }
    let net = RmstNetwork {
        n: labels.len(),
        edges,
        similarities,
        mst_edges: Vec::new(),
        gamma,
    };
    Ok((labels, net))
}

pub fn scan_csv(scan: &[ScanResult]) -> String {
    let mut out = String::from("t,n_communities,best_stability,mean_vi\n");
    for r in scan {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(r.t),
            r.n_communities,
            fmt(r.best_stability),
            fmt(r.mean_vi)
        ));
    }
    out
}

pub fn robust_partitions_json(scales: &[RobustScale]) -> String {
    let selected: Vec<SelectedScale> = scales
        .iter()
        .map(|s| SelectedScale {
            t: s.t,
            n_communities: s.n_communities,
            stability: s.stability,
            mean_vi: s.mean_vi,
            plateau_len: s.plateau_len,
            assignment: s.partition.assignment().to_vec(),
        })
        .collect();
    serde_json::to_string_pretty(&selected).expect("serializable scales")
}

fn check_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    // probe writability eagerly, before any computation
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(dir, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

pub struct PipelineArtifacts {
    pub graph: DirectedGraph,
    pub similarity: SimilarityMatrix,
    pub network: RmstNetwork,
    pub scan: Vec<ScanResult>,
    pub scales: Vec<RobustScale>,
    pub manifest: RunManifest,
}

/// Runs parse -> RBS -> RMST -> stability scan -> robust-scale selection and
/// writes all artifacts under the configured output directory. The entire
/// run is a deterministic function of (input bytes, config); only the
/// timing fields of the manifest vary between repeats.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    let artifacts = run_pipeline_full(cfg)?;
    Ok(artifacts.manifest)
}

pub fn run_pipeline_full(cfg: &PipelineConfig) -> Result<PipelineArtifacts> {
    cfg.validate()?;
    check_output_dir(&cfg.output_dir)?;
    let total_start = Instant::now();

    // stage: parse
    let stage = Instant::now();
    let text = read_to_string(&cfg.input_path)?;
    let node_labels = match &cfg.nodes_path {
        Some(p) => Some(parse_nodes_file(&read_to_string(p)?)?),
        None => None,
    };
    let outcome = parse_edge_list(&text, &ParseOptions { node_labels })?;
    let graph = outcome.graph;
    let parse_secs = stage.elapsed().as_secs_f64();

    // stage: role-based similarity
    let stage = Instant::now();
    let rbs_cfg = cfg.rbs_config();
    let spectral = rbs::spectral_radius(&graph, &rbs_cfg)?;
    let features = rbs::feature_matrix(&graph, &rbs_cfg, &spectral)?;
    let similarity = rbs::rbs_matrix(&features);
    let rbs_secs = stage.elapsed().as_secs_f64();

    // stage: relaxed minimum spanning tree
    let stage = Instant::now();
    let network = rmst::rmst(&similarity, cfg.gamma)?;
    let rmst_secs = stage.elapsed().as_secs_f64();

    // stage: stability scan
    let stage = Instant::now();
    let mp = MarkovProcess::new(&network, cfg.weighted_similarity)?;
    let times = cfg.time_grid();
    let scan = stability::time_scan(&mp, &times, cfg.runs, cfg.seed)?;
    let scales = stability::select_robust(&scan, cfg.vi_threshold, cfg.min_plateau);
    let scan_secs = stage.elapsed().as_secs_f64();

    let per_time: Vec<TimeSummary> = scan
        .iter()
        .enumerate()
        .map(|(i, r)| TimeSummary {
            t: r.t,
            n_communities: r.n_communities,
            best_stability: r.best_stability,
            mean_vi: r.mean_vi,
            vi_to_next: scan.get(i + 1).map(|next| {
                stability::variation_of_information(&r.best_partition, &next.best_partition)
                    .expect("same node count")
            }),
        })
        .collect();

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: ConfigSnapshot::from(cfg),
        n_nodes: graph.n(),
        n_edges: graph.edges().len(),
        parse_warnings: ParseWarningSummary {
            duplicate_edges: outcome.warnings.duplicate_edges,
            self_loops: outcome.warnings.self_loops,
            weighted_lines: outcome.warnings.weighted_lines,
        },
        lambda_1: spectral.lambda_1,
        beta: spectral.beta,
        realized_k_max: features.k_max,
        rmst_edge_count: network.edges.len(),
        time_grid: times,
        per_time,
        selected_scales: scales
            .iter()
            .map(|s| SelectedScale {
                t: s.t,
                n_communities: s.n_communities,
                stability: s.stability,
                mean_vi: s.mean_vi,
                plateau_len: s.plateau_len,
                assignment: s.partition.assignment().to_vec(),
            })
            .collect(),
        timings: StageTimings {
            parse_secs,
            rbs_secs,
            rmst_secs,
            scan_secs,
            total_secs: total_start.elapsed().as_secs_f64(),
        },
    };

    let artifacts = PipelineArtifacts {
        graph,
        similarity,
        network,
        scan,
        scales,
        manifest,
    };
    emit_outputs(cfg, &artifacts)?;
    Ok(artifacts)
}

/// Writes manifest.json, rmst_edges.csv, scan.csv, robust_partitions.json
/// and (behind the flag) similarity.csv.
pub fn emit_outputs(cfg: &PipelineConfig, artifacts: &PipelineArtifacts) -> Result<()> {
    let dir = &cfg.output_dir;
    write_file(
        &dir.join("manifest.json"),
        &serde_json::to_string_pretty(&artifacts.manifest).expect("serializable manifest"),
    )?;
    write_file(
        &dir.join("rmst_edges.csv"),
        &rmst_edges_csv(&artifacts.network, artifacts.graph.labels()),
    )?;
    write_file(&dir.join("scan.csv"), &scan_csv(&artifacts.scan))?;
    write_file(
        &dir.join("robust_partitions.json"),
        &robust_partitions_json(&artifacts.scales),
    )?;
    if cfg.emit_similarity {
        write_file(
            &dir.join("similarity.csv"),
            &similarity_csv(&artifacts.similarity.y, artifacts.graph.labels()),
        )?;
    }
    Ok(())
}
