use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rolenet::error::{Error, Result};
use rolenet::graph::{parse_edge_list, parse_nodes_file, ParseOptions};
use rolenet::pipeline::{
    self, parse_rmst_edges_csv, parse_similarity_csv, rmst_edges_csv, robust_partitions_json,
    scan_csv, similarity_csv, PipelineConfig,
};
use rolenet::rbs::{self, KMax, RbsConfig};
use rolenet::rmst;
use rolenet::stability::{self, MarkovProcess};

#[derive(Parser)]
#[command(
    name = "rolenet",
    version,
    about = "Role-community detection in directed networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: parse, similarity, sparsification, scan.
    Run(RunArgs),
    /// Compute the similarity matrix only (writes similarity.csv).
    Rbs(RbsArgs),
    /// Sparsify a similarity matrix into a network (writes rmst_edges.csv).
    Rmst(RmstArgs),
    /// Scan a similarity network over Markov times (writes scan.csv and
    /// robust_partitions.json).
    Scan(ScanArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Directed edge-list file (whitespace or comma separated; # comments).
    #[arg(long)]
    input: PathBuf,
    /// Optional nodes file fixing node order and declaring isolated nodes.
    #[arg(long = "nodes-file")]
    nodes_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    /// Feature depth: "auto" or an explicit positive integer < N.
    #[arg(long, default_value = "auto")]
    kmax: String,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Use similarity-weighted edges in the diffusion process.
    #[arg(long)]
    weighted: bool,
    #[arg(long = "t-min", default_value_t = 0.1)]
    t_min: f64,
    #[arg(long = "t-max", default_value_t = 1000.0)]
    t_max: f64,
    #[arg(long = "n-times", default_value_t = 100)]
    n_times: usize,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "vi-threshold", default_value_t = 0.05)]
    vi_threshold: f64,
    #[arg(long = "min-plateau", default_value_t = 3)]
    min_plateau: usize,
    #[arg(long = "out", default_value = "rolenet-out")]
    out: PathBuf,
    /// Also dump the full similarity matrix as similarity.csv.
    #[arg(long = "emit-similarity")]
    emit_similarity: bool,
    /// Worker threads for the scan (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RbsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "nodes-file")]
    nodes_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    #[arg(long, default_value = "auto")]
    kmax: String,
    #[arg(long = "out", default_value = "rolenet-out")]
    out: PathBuf,
}

#[derive(Args)]
struct RmstArgs {
    /// similarity.csv produced by the rbs stage.
    #[arg(long)]
    similarity: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long = "out", default_value = "rolenet-out")]
    out: PathBuf,
}

#[derive(Args)]
struct ScanArgs {
    /// rmst_edges.csv produced by the rmst stage.
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    weighted: bool,
    #[arg(long = "t-min", default_value_t = 0.1)]
    t_min: f64,
    #[arg(long = "t-max", default_value_t = 1000.0)]
    t_max: f64,
    #[arg(long = "n-times", default_value_t = 100)]
    n_times: usize,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "vi-threshold", default_value_t = 0.05)]
    vi_threshold: f64,
    #[arg(long = "min-plateau", default_value_t = 3)]
    min_plateau: usize,
    #[arg(long = "out", default_value = "rolenet-out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_kmax(text: &str) -> Result<KMax> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(KMax::Auto);
    }
    text.parse::<usize>()
        .map(KMax::Fixed)
        .map_err(|_| Error::Config(format!("kmax must be \"auto\" or an integer, got {text:?}")))
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {t} threads: {e}")))?;
    }
    Ok(())
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.clone(), e))
}

fn write(path: &PathBuf, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.to_path_buf(), e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path.clone(), e))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    configure_threads(args.threads)?;
    let cfg = PipelineConfig {
        input_path: args.input,
        nodes_path: args.nodes_file,
        alpha: args.alpha,
        k_max: parse_kmax(&args.kmax)?,
        gamma: args.gamma,
        weighted_similarity: args.weighted,
        t_min: args.t_min,
        t_max: args.t_max,
        n_times: args.n_times,
        runs: args.runs,
        seed: args.seed,
        vi_threshold: args.vi_threshold,
        min_plateau: args.min_plateau,
        output_dir: args.out,
        emit_similarity: args.emit_similarity,
        threads: args.threads,
    };
    let manifest = pipeline::run_pipeline(&cfg)?;
    eprintln!(
        "done: N={}, |E|={}, lambda_1={}, realized K_max={}, RMST edges={}, {} robust scale(s)",
        manifest.n_nodes,
        manifest.n_edges,
        manifest.lambda_1,
        manifest.realized_k_max,
        manifest.rmst_edge_count,
        manifest.selected_scales.len()
    );
    for s in &manifest.selected_scales {
        eprintln!(
            "  t={}: {} communities (plateau {}, mean VI {})",
            s.t, s.n_communities, s.plateau_len, s.mean_vi
        );
    }
    Ok(())
}

fn cmd_rbs(args: RbsArgs) -> Result<()> {
    let text = read(&args.input)?;
    let node_labels = match &args.nodes_file {
        Some(p) => Some(parse_nodes_file(&read(p)?)?),
        None => None,
    };
    let outcome = parse_edge_list(&text, &ParseOptions { node_labels })?;
    warn_parse(&outcome.warnings);
    let cfg = RbsConfig {
        alpha: args.alpha,
        k_max: parse_kmax(&args.kmax)?,
        ..RbsConfig::default()
    };
    let spectral = rbs::spectral_radius(&outcome.graph, &cfg)?;
    let features = rbs::feature_matrix(&outcome.graph, &cfg, &spectral)?;
    let similarity = rbs::rbs_matrix(&features);
    write(
        &args.out.join("similarity.csv"),
        &similarity_csv(&similarity.y, outcome.graph.labels()),
    )?;
    eprintln!(
        "rbs: N={}, lambda_1={}, beta={}, realized K_max={}",
        outcome.graph.n(),
        spectral.lambda_1,
        spectral.beta,
        features.k_max
    );
    Ok(())
}

fn cmd_rmst(args: RmstArgs) -> Result<()> {
    let (labels, similarity) = parse_similarity_csv(&read(&args.similarity)?)?;
    let network = rmst::rmst(&similarity, args.gamma)?;
    write(
        &args.out.join("rmst_edges.csv"),
        &rmst_edges_csv(&network, &labels),
    )?;
    eprintln!(
        "rmst: N={}, kept {} edges ({} in the spanning tree)",
        network.n,
        network.edges.len(),
        network.mst_edges.len()
    );
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<()> {
    configure_threads(args.threads)?;
    let (_labels, network) = parse_rmst_edges_csv(&read(&args.edges)?, 0.5)?;
    let grid_cfg = PipelineConfig {
        t_min: args.t_min,
        t_max: args.t_max,
        n_times: args.n_times,
        runs: args.runs,
        ..PipelineConfig::default()
    };
    grid_cfg.validate()?;
    let mp = MarkovProcess::new(&network, args.weighted)?;
    let times = grid_cfg.time_grid();
    let scan = stability::time_scan(&mp, &times, args.runs, args.seed)?;
    let scales = stability::select_robust(&scan, args.vi_threshold, args.min_plateau);
    write(&args.out.join("scan.csv"), &scan_csv(&scan))?;
    write(
        &args.out.join("robust_partitions.json"),
        &robust_partitions_json(&scales),
    )?;
    eprintln!("scan: {} grid points, {} robust scale(s)", scan.len(), scales.len());
    Ok(())
}

fn warn_parse(warnings: &rolenet::graph::ParseWarnings) {
    if warnings.duplicate_edges > 0 {
        eprintln!(
            "warning: collapsed {} duplicate edge line(s)",
            warnings.duplicate_edges
        );
    }
    if warnings.self_loops > 0 {
        eprintln!("warning: input contains {} self-loop(s)", warnings.self_loops);
    }
    if warnings.weighted_lines > 0 {
        eprintln!(
            "warning: ignored weight column on {} line(s); the method is defined on unweighted graphs",
            warnings.weighted_lines
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Rbs(args) => cmd_rbs(args),
        Command::Rmst(args) => cmd_rmst(args),
        Command::Scan(args) => cmd_scan(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
