use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use coregap::cli::{self, ScanRequest};
use coregap::config::PartialConfig;
use coregap::metrics::default_cache_dir;
use coregap::topology::TopologyKind;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "coregap", version, about = "Spectral-gap and majorization scans for multicore random circuits")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the link set of a topology.
    Topology {
        /// linear | ring | star | full
        #[arg(long)]
        kind: TopologyKind,
        #[arg(long)]
        cores: usize,
    },
    /// Scan the normalized spectral gap over I and write CSV.
    GapScan(ScanArgs),
    /// Scan ID_H / D_H over I with a statevector ensemble and write CSV.
    EnsembleScan(ScanArgs),
    /// Analyze a gap CSV and an ensemble CSV into a JSON report.
    Analyze {
        /// Gap-scan CSV path.
        #[arg(long)]
        gap: PathBuf,
        /// Ensemble-scan CSV path.
        #[arg(long)]
        ensemble: PathBuf,
        /// Report path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScanArgs {
    /// Config file: flat `key = value`, or a manifest JSON to reproduce.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    topology: Option<TopologyKind>,
    #[arg(long)]
    cores: Option<usize>,
    #[arg(long)]
    qubits_per_core: Option<usize>,
    #[arg(long, default_value_t = 1)]
    i_min: usize,
    #[arg(long, default_value_t = 8)]
    i_max: usize,
    /// Layers per circuit (ensemble scans).
    #[arg(long)]
    layers: Option<usize>,
    /// Ensemble size (ensemble scans).
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    p_single: Option<f64>,
    #[arg(long)]
    c_rand: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

impl ScanArgs {
    fn resolve(&self, threads: Option<usize>) -> anyhow::Result<ScanRequest> {
        let mut merged = PartialConfig::default();
        if let Some(path) = &self.config {
            merged = cli::load_config_source(path)
                .with_context(|| format!("reading config {}", path.display()))?;
        }
        let flags = PartialConfig {
            n_cores: self.cores,
            n_qubits_per_core: self.qubits_per_core,
            intracore_steps: None,
            n_layers: self.layers,
            topology: self.topology,
            p_single: self.p_single,
            c_rand: self.c_rand,
            master_seed: self.seed,
            ensemble_size: self.samples,
        };
        let config = merged.merged_with(&flags).resolve()?;
        Ok(ScanRequest {
            config,
            i_min: self.i_min,
            i_max: self.i_max,
            out_path: self.out.clone(),
            threads,
        })
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Topology { kind, cores } => {
            cli::run_topology(kind, cores, &mut std::io::stdout())?;
        }
        Command::GapScan(args) => {
            let req = args.resolve(cli.threads)?;
            let manifest = cli::run_gap_scan(&req)?;
            eprintln!(
                "wrote {} ({} rows)",
                manifest.outputs[0].path,
                req.i_max - req.i_min + 1
            );
        }
        Command::EnsembleScan(args) => {
            let req = args.resolve(cli.threads)?;
            let manifest = cli::run_ensemble_scan(&req, &default_cache_dir())?;
            eprintln!(
                "wrote {} ({} rows, {} samples per I)",
                manifest.outputs[0].path,
                req.i_max - req.i_min + 1,
                req.config.ensemble_size
            );
        }
        Command::Analyze { gap, ensemble, out } => {
            let report = cli::run_analyze(&gap, &ensemble)?;
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            match out {
                Some(path) => std::fs::write(&path, json)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{json}"),
            }
        }
    }
    Ok(())
}
