use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use skillscope_cli::config::{PipelineConfig, DEFAULTS};
use skillscope_cli::pipeline::{Pipeline, PipelineError};

#[derive(Parser)]
#[command(
    name = "skillscope",
    version,
    about = "Skill-demand analytics over job advertisement corpora"
)]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Global seed, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Crawl a job portal into harvest.jsonl.
    Harvest(HarvestArgs),
    /// Parse and validate the input corpus.
    Ingest,
    /// Group job titles and filter and cluster skills.
    Preprocess,
    /// Group job titles by semantic distance.
    ClusterTitles,
    /// Cluster skills by co-occurrence similarity.
    ClusterSkills,
    /// Mine frequent skill sets and recommendations.
    Mine,
    /// Frequency tables, cluster distributions and geo buckets.
    Analyze,
    /// Every stage, then report.json.
    Run,
    /// List every configuration problem without running anything.
    Validate,
}

#[derive(Args)]
struct HarvestArgs {
    #[arg(long)]
    root: Option<String>,
    #[arg(long)]
    key_phrase: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Requests per second per worker.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    max_pages: Option<usize>,
}

fn load(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(|d| anyhow::anyhow!("{d}"))?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = std::env::current_dir().context("current directory")?.join(out);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn stage_failed(e: PipelineError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{DEFAULTS}");
        return ExitCode::SUCCESS;
    }
    let Some(command) = &cli.command else {
        eprintln!("error: no subcommand given (try --help)");
        return ExitCode::from(2);
    };
    let mut cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config: {e:#}");
            return ExitCode::from(2);
        }
    };

    if let Command::Validate = command {
        let problems = cfg.validate();
        for d in &problems {
            println!("{d}");
        }
        return if problems.is_empty() {
            println!("config ok");
            ExitCode::SUCCESS
        } else {
            ExitCode::from(2)
        };
    }

    if let Command::Harvest(a) = command {
        if let Some(r) = &a.root {
            cfg.harvest.root_url = r.clone();
        }
        if let Some(k) = &a.key_phrase {
            cfg.harvest.key_phrase = k.clone();
        }
        if let Some(w) = a.workers {
            cfg.harvest.max_workers = w;
        }
        if let Some(r) = a.rate {
            cfg.harvest.max_requests_per_worker_per_sec = r;
        }
        if a.max_pages.is_some() {
            cfg.harvest.max_pages = a.max_pages;
        }
        let problems = cfg.harvest.problems();
        if !problems.is_empty() {
            for p in &problems {
                eprintln!("harvest: {p}");
            }
            return ExitCode::from(2);
        }
        let out = cfg.output_path();
        if let Err(e) = std::fs::create_dir_all(&out) {
            eprintln!("error: cannot create {}: {e}", out.display());
            return ExitCode::from(3);
        }
        return match harvest_only(cfg) {
            Ok(n) => {
                println!("harvested {n} advertisements into {}", out.join("harvest.jsonl").display());
                ExitCode::SUCCESS
            }
            Err(e) => stage_failed(e),
        };
    }

    let mut p = match Pipeline::new(cfg) {
        Ok(p) => p,
        Err(e) => return stage_failed(e),
    };
    let result = match command {
        Command::Ingest => p.ingest().map(|_| ()),
        Command::Preprocess => p.cluster_titles().map(|_| ()).and_then(|_| p.cluster_skills().map(|_| ())),
        Command::ClusterTitles => p.cluster_titles().map(|_| ()),
        Command::ClusterSkills => p.cluster_skills().map(|_| ()),
        Command::Mine => p.mine().map(|_| ()),
        Command::Analyze => p.analyze().map(|_| ()),
        Command::Run => p.run_all().map(|_| ()),
        Command::Harvest(_) | Command::Validate => unreachable!("handled above"),
    };
    match result {
        Ok(()) => {
            let s = p.summary();
            log::info!("cache hits: {:?}; misses: {:?}", s.cache_hits, s.cache_misses);
            println!("outputs written to {}", p.output_dir().display());
            ExitCode::SUCCESS
        }
        Err(e) => stage_failed(e),
    }
}

/// Harvest needs only the crawl settings, so it skips full validation.
fn harvest_only(cfg: PipelineConfig) -> Result<usize, PipelineError> {
    skillscope_cli::pipeline::harvest_to(&cfg).map(|o| o.documents.len())
}
