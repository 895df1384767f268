use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mammocad::gafs::{search_report, FitnessSplit};
use mammocad::pipeline::{self, DatasetManifest, DemoParams, Outcome, RunConfig};
use mammocad::{Error, Result};

#[derive(Parser)]
#[command(name = "mammocad", version, about = "BI-RADS mass classification pipeline")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crop, equalize and sweep every ROI into review bundles.
    Segment {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Review step: serve the UI/API or auto-select fixtures.
    Review {
        #[command(subcommand)]
        action: ReviewAction,
    },
    /// Extract and normalize the 130 features of every reviewed ROI.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        /// Selection manifest; defaults to <out>/selections.jsonl.
        #[arg(long)]
        selections: Option<PathBuf>,
    },
    /// Genetic feature selection, final model and test metrics.
    Select {
        /// Feature CSV; defaults to <out>/features.csv.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Inclusive subset-size range, e.g. 2..20.
        #[arg(long, value_parser = parse_range)]
        l_range: Option<[usize; 2]>,
        #[arg(long, value_parser = parse_split)]
        fitness_split: Option<FitnessSplit>,
    },
    /// Train a network on chosen feature ids (all by default).
    Train {
        #[arg(long)]
        features: Option<PathBuf>,
        /// Comma-separated 1-based feature ids.
        #[arg(long, value_delimiter = ',')]
        ids: Option<Vec<u16>>,
    },
    /// Score a model on the test split, or a confusion matrix file.
    Evaluate {
        #[arg(long, conflicts_with = "matrix")]
        model: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        /// Four lines of four counts; rows are actual classes.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Synthetic data.
    Demo {
        #[command(subcommand)]
        action: DemoAction,
    },
}

#[derive(Subcommand)]
enum ReviewAction {
    /// Serve the review API and UI.
    Serve {
        #[arg(long, default_value_t = 8737)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of built UI assets.
        #[arg(long)]
        ui: Option<PathBuf>,
        #[arg(long)]
        selections: Option<PathBuf>,
    },
    /// Select the largest border-free candidate for every unreviewed ROI.
    Auto {
        #[arg(long)]
        selections: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DemoAction {
    /// Write synthetic images and a manifest to <out>.
    Generate {
        #[arg(long, default_value_t = 40)]
        count: usize,
    },
}

fn parse_range(s: &str) -> std::result::Result<[usize; 2], String> {
    let (a, b) = s.split_once("..").unwrap_or((s, s));
    let a: usize = a.trim().parse().map_err(|_| format!("bad range start in {s:?}"))?;
    let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| format!("bad range end in {s:?}"))?;
    Ok([a, b])
}

fn parse_split(s: &str) -> std::result::Result<FitnessSplit, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.resolve_seeds();
    Ok(cfg)
}

fn or_default(p: &Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    p.clone().unwrap_or_else(|| out.join(name))
}

fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = load_config(&cli)?;
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let bundles = out.join(pipeline::BUNDLES_DIR);
    match &cli.command {
        Command::Segment { manifest } => {
            let m = DatasetManifest::load(manifest)?;
            let s = pipeline::cmd_segment(&m, &cfg, &out)?;
            println!("segmented {}/{} ROIs into {}", s.succeeded.len(), s.total, bundles.display());
            for f in &s.failures {
                eprintln!("failed {}: {}", f.case_id, f.message);
            }
            Ok(s.outcome())
        }
        Command::Review { action: ReviewAction::Auto { selections } } => {
            let path = or_default(selections, &out, pipeline::SELECTIONS_FILE);
            let n = pipeline::cmd_review_auto(&bundles, &path)?;
            println!("auto-selected {n} ROIs into {}", path.display());
            Ok(Outcome::Complete)
        }
        Command::Review { action: ReviewAction::Serve { port, host, ui, selections } } => {
            let path = or_default(selections, &out, pipeline::SELECTIONS_FILE);
            let server = pipeline::ReviewServer::bind(&format!("{host}:{port}"), &bundles, &path, ui.as_deref())?;
            println!("review service on http://{}", server.local_addr());
            server.run();
            Ok(Outcome::Complete)
        }
        Command::Features { manifest, selections } => {
            let m = DatasetManifest::load(manifest)?;
            let sel = or_default(selections, &out, pipeline::SELECTIONS_FILE);
            let table = pipeline::cmd_features(&m, &bundles, &sel, &cfg, &out)?;
            println!("wrote {} rows to {}", table.rows.len(), out.join(pipeline::FEATURES_FILE).display());
            Ok(Outcome::Complete)
        }
        Command::Select { features, l_range, fitness_split } => {
            if let Some(r) = l_range {
                cfg.ga.l_range = *r;
            }
            if let Some(s) = fitness_split {
                cfg.ga.fitness_split = *s;
            }
            let csv = or_default(features, &out, pipeline::FEATURES_FILE);
            let run = pipeline::cmd_select(&csv, &cfg, &out)?;
            print!("{}", search_report(&run.search, mammocad::features::FEATURE_COUNT));
            print!("{}", run.metrics.to_text());
            Ok(Outcome::Complete)
        }
        Command::Train { features, ids } => {
            let csv = or_default(features, &out, pipeline::FEATURES_FILE);
            let (model, acc) = pipeline::cmd_train(&csv, ids.as_deref(), &cfg, &out)?;
            println!(
                "trained {}-{}-{} network, training accuracy {acc:.4}, saved to {}",
                model.shape().inputs,
                model.shape().hidden,
                model.shape().outputs,
                out.join(pipeline::MODEL_FILE).display()
            );
            Ok(Outcome::Complete)
        }
        Command::Evaluate { model, features, matrix } => {
            let report = match matrix {
                Some(m) => pipeline::cmd_evaluate_matrix(m, &out)?,
                None => {
                    let model = or_default(model, &out, pipeline::MODEL_FILE);
                    let csv = or_default(features, &out, pipeline::FEATURES_FILE);
                    pipeline::cmd_evaluate(&model, &csv, &out)?
                }
            };
            print!("{}", report.to_text());
            Ok(Outcome::Complete)
        }
        Command::Demo { action: DemoAction::Generate { count } } => {
            let params = DemoParams { count: *count, seed: cfg.seed, ..DemoParams::default() };
            let m = pipeline::generate_demo(&out, &params)?;
            println!("wrote {} demo cases and {}", m.entries.len(), out.join("manifest.jsonl").display());
            Ok(Outcome::Complete)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Complete) => ExitCode::from(pipeline::EXIT_OK as u8),
        Ok(Outcome::Partial) => ExitCode::from(pipeline::EXIT_PARTIAL as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(pipeline::exit_code(&e) as u8)
        }
    }
}
