use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use namescale::corpus::{generate_synthetic, SyntheticConfig};
use namescale::network::RandomSelection;
use namescale::{Corpus, FitMethod, HyperPolicy, Method, SliceSpec};
use namescale_cli::output::{write_csv, write_svg};
use namescale_cli::stages::{self, parse_fit_method, parse_hyper, parse_ratios, parse_slice, SimKind, SweepPlan};
use namescale_cli::{run, CliError, Provenance, RunManifest, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "namescale", version, about = "Name disambiguation and coauthorship degree scaling")]
struct Cli {
    /// Directory that receives outputs given by bare file names.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Input {
    /// Corpus in JSONL, one paper per line.
    input: PathBuf,
    /// Profiles JSONL used to attach truth IDs before anything else.
    #[arg(long)]
    profiles: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Network {
    #[arg(long, value_delimiter = ',', default_value = "aini,fini")]
    methods: Vec<Method>,
    /// none, top:<percent> or max:<authors>.
    #[arg(long, value_parser = parse_hyper, default_value = "top:1")]
    hyper: HyperPolicy,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus.
    Gen {
        /// TOML file of generator settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n_authors: Option<usize>,
        #[arg(long, default_value = "corpus.jsonl")]
        out: PathBuf,
    },
    /// Validate a corpus, optionally link truth IDs, and write it back normalized.
    Ingest {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "ingested.jsonl")]
        out: PathBuf,
    },
    /// Entity ID of every mention under each method.
    Disambiguate {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_delimiter = ',', default_value = "aini,fini")]
        methods: Vec<Method>,
        #[arg(long, default_value = "disambiguation.csv")]
        out: PathBuf,
    },
    /// Cluster-level error ratios against truth IDs.
    Accuracy {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_delimiter = ',', default_value = "aini,fini")]
        methods: Vec<Method>,
        #[arg(long, default_value = "accuracy.csv")]
        out: PathBuf,
    },
    /// Degree statistics of one slice.
    Netstats {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        network: Network,
        /// all, cum<start>-<end> or w<length>:<end>.
        #[arg(long, value_parser = parse_slice, default_value = "all")]
        slice: SliceSpec,
        /// Also write the degree histogram of each method as <stem>_<method>.csv.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value = "netstats.csv")]
        out: PathBuf,
    },
    /// Power-law fits of one slice.
    Fit {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        network: Network,
        #[arg(long, value_parser = parse_slice, default_value = "all")]
        slice: SliceSpec,
        #[arg(long, value_delimiter = ',', value_parser = parse_fit_method, default_value = "cdf_ls,mle_ks")]
        fit_methods: Vec<FitMethod>,
        #[arg(long, default_value = "fit.csv")]
        out: PathBuf,
    },
    /// Fits over a slice sequence or random subsets.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        network: Network,
        /// cumulative, window5, window1, whole or random.
        #[arg(long, default_value = "cumulative")]
        plan: SweepPlan,
        #[arg(long, value_delimiter = ',', value_parser = parse_fit_method, default_value = "cdf_ls")]
        fit_methods: Vec<FitMethod>,
        /// Seed of the random plan.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Inject merge or split errors over a range of ratios and refit.
    Simulate {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_hyper, default_value = "top:1")]
        hyper: HyperPolicy,
        #[arg(long)]
        kind: SimKind,
        /// Merge target key: aini or fini.
        #[arg(long)]
        key: Option<Method>,
        /// start:end:step or a comma-separated list.
        #[arg(long, default_value = "0.01:1:0.01")]
        ratios: String,
        #[arg(long)]
        seed: u64,
        /// Identities the errors are injected into: truth or algorithmic.
        #[arg(long, default_value = "truth")]
        baseline: Method,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value = "simulate.csv")]
        out: PathBuf,
    },
    /// Execute a run manifest.
    Run { manifest: PathBuf },
}

fn at(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() || p.components().count() > 1 {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

fn load(input: &Input, hyper: Option<HyperPolicy>) -> Result<Corpus, CliError> {
    let corpus = stages::load(&input.input, input.profiles.as_deref())?;
    match hyper {
        Some(h) => stages::apply_hyper(&corpus, h),
        None => Ok(corpus),
    }
}

fn execute(cli: Cli, provenance: &Provenance) -> Result<Vec<PathBuf>, CliError> {
    let dir = cli.out_dir.as_path();
    match cli.command {
        Command::Gen { config, seed, n_authors, out } => {
            let mut cfg = match config {
                Some(p) => {
                    let text = fs::read_to_string(&p)
                        .map_err(|e| CliError::validation("gen", format!("cannot read {}: {e}", p.display())))?;
                    toml::from_str::<SyntheticConfig>(&text).map_err(|e| CliError::validation("gen", e))?
                }
                None => SyntheticConfig::default(),
            };
            cfg.seed = seed;
            if let Some(n) = n_authors {
                cfg.n_authors = n;
            }
            let corpus = generate_synthetic(&cfg).map_err(|e| CliError::from_corpus("gen", e))?;
            let path = at(dir, &out);
            corpus.save(&path).map_err(|e| CliError::from_corpus("gen", e))?;
            Ok(vec![path])
        }
        Command::Ingest { input, out } => {
            let corpus = load(&input, None)?;
            let stats = corpus.stats();
            println!("{}", serde_json::to_string(&stats).map_err(|e| CliError::invariant("ingest", e))?);
            let path = at(dir, &out);
            corpus.save(&path).map_err(|e| CliError::from_corpus("ingest", e))?;
            Ok(vec![path])
        }
        Command::Disambiguate { input, methods, out } => {
            let corpus = load(&input, None)?;
            let rows = stages::disambiguation_rows(&corpus, &methods)?;
            Ok(vec![write_csv("disambiguate", &at(dir, &out), provenance, stages::DISAMBIG_HEADER, &rows)?])
        }
        Command::Accuracy { input, methods, out } => {
            let corpus = load(&input, None)?;
            let rows = stages::accuracy_rows(&corpus, &methods)?;
            Ok(vec![write_csv("accuracy", &at(dir, &out), provenance, stages::ACCURACY_HEADER, &rows)?])
        }
        Command::Netstats { input, network, slice, histogram, out } => {
            let corpus = load(&input, Some(network.hyper))?;
            let part = stages::slice_corpus(&corpus, slice)?;
            let (rows, dists) = stages::netstats(&part, &slice.label(), &network.methods)?;
            let mut written = vec![write_csv("netstats", &at(dir, &out), provenance, stages::NETSTATS_HEADER, &rows)?];
            if let Some(h) = histogram {
                let base = at(dir, &h);
                let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("histogram").to_string();
                for (method, dist) in &dists {
                    let path = base.with_file_name(format!("{stem}_{method}.csv"));
                    let rows = stages::histogram_rows(dist)?;
                    written.push(write_csv("netstats", &path, provenance, stages::HISTOGRAM_HEADER, &rows)?);
                }
            }
            Ok(written)
        }
        Command::Fit { input, network, slice, fit_methods, out } => {
            let corpus = load(&input, Some(network.hyper))?;
            let rows = stages::fit_slice(&corpus, slice, &network.methods, &fit_methods)?;
            Ok(vec![write_csv("fit", &at(dir, &out), provenance, stages::FIT_HEADER, &stages::fit_rows(&rows))?])
        }
        Command::Sweep { input, network, plan, fit_methods, seed, svg, out } => {
            let corpus = load(&input, Some(network.hyper))?;
            let selection = RandomSelection { seed, ..RandomSelection::default() };
            let rows = stages::run_sweep(&corpus, plan, selection, &network.methods, &fit_methods)?;
            let mut written =
                vec![write_csv("sweep", &at(dir, &out), provenance, stages::SWEEP_HEADER, &stages::sweep_rows(&rows))?];
            if let Some(p) = svg {
                written.push(write_svg("sweep", &at(dir, &p), provenance, &stages::sweep_svg(&rows, plan.name()))?);
            }
            Ok(written)
        }
        Command::Simulate { input, hyper, kind, key, ratios, seed, baseline, svg, out } => {
            let kind = kind.with_key(key).map_err(|e| CliError::validation("simulate", e))?;
            let ratios = parse_ratios(&ratios).map_err(|e| CliError::validation("simulate", e))?;
            let corpus = load(&input, Some(hyper))?;
            let result = stages::simulate(&corpus, kind, &ratios, seed, baseline)?;
            let rows = stages::simulate_rows(&result);
            let mut written = vec![write_csv("simulate", &at(dir, &out), provenance, stages::SIMULATE_HEADER, &rows)?];
            if let Some(p) = svg {
                written.push(write_svg("simulate", &at(dir, &p), provenance, &stages::simulate_svg(&result))?);
            }
            Ok(written)
        }
        Command::Run { manifest } => {
            let (m, manifest_provenance) = RunManifest::load(&manifest)?;
            run(&m, &manifest_provenance, dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let provenance = Provenance::of_args(std::env::args().skip(1));
    match execute(cli, &provenance) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
