//! Run manifests: one TOML file describing a whole pipeline run.
//!
//! ```toml
//! seed = 42                      # master seed; every other seed derives from it
//! out_dir = "out"                # optional; relative to the manifest
//! methods = ["aini", "fini", "truth"]
//! fit_methods = ["cdf_ls", "mle_ks"]
//! hyper = { kind = "top_percentile", percent = 1.0 }
//! plans = ["cumulative", "window5", "window1"]
//! disambiguate = false
//! accuracy = true
//! netstats = true
//! svg = true
//!
//! [corpus]
//! path = "corpus.jsonl"          # or a [corpus.synthetic] table
//! profiles = "profiles.jsonl"    # optional truth linking
//! save = false                   # write the corpus used to corpus.jsonl
//!
//! [random]                       # read when plans contains "random"
//! base_fraction = 0.1
//!
//! [[simulate]]
//! kind = "merge"
//! key = "fini"
//! ratios = "0:1:0.01"
//! baseline = "truth"
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use namescale::corpus::{generate_synthetic, SyntheticConfig};
use namescale::network::RandomSelection;
use namescale::rng::derive_seed;
use namescale::{Corpus, FitMethod, HyperPolicy, Method, SliceSpec};

use crate::output::{write_csv, write_svg, Provenance};
use crate::stages::{self, parse_ratios, SimKind, SweepPlan};
use crate::CliError;

const STAGE: &str = "manifest";
const SYNTHETIC_STREAM: u64 = 1;
const RANDOM_STREAM: u64 = 2;
const SIMULATE_STREAM: u64 = 3;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSource {
    pub path: Option<PathBuf>,
    /// [`SyntheticConfig`] fields without `seed`.
    pub synthetic: Option<toml::Table>,
    pub profiles: Option<PathBuf>,
    #[serde(default)]
    pub save: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub kind: SimKind,
    pub key: Option<Method>,
    #[serde(default = "default_ratios")]
    pub ratios: String,
    #[serde(default = "default_baseline")]
    pub baseline: Method,
}

fn default_ratios() -> String {
    "0:1:0.01".into()
}

fn default_baseline() -> Method {
    Method::Truth
}

fn default_methods() -> Vec<Method> {
    vec![Method::Aini, Method::Fini, Method::Truth]
}

fn default_fit_methods() -> Vec<FitMethod> {
    vec![FitMethod::CdfLs]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub corpus: CorpusSource,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_fit_methods")]
    pub fit_methods: Vec<FitMethod>,
    #[serde(default)]
    pub hyper: HyperPolicy,
    #[serde(default)]
    pub plans: Vec<SweepPlan>,
    /// [`RandomSelection`] fields without `seed`.
    pub random: Option<toml::Table>,
    #[serde(default)]
    pub disambiguate: bool,
    #[serde(default)]
    pub accuracy: bool,
    #[serde(default = "default_true")]
    pub netstats: bool,
    #[serde(default)]
    pub svg: bool,
    #[serde(default)]
    pub simulate: Vec<SimulationSpec>,
}

fn seedless<T: serde::de::DeserializeOwned>(table: &toml::Table, what: &str) -> Result<T, CliError> {
    if table.contains_key("seed") {
        return Err(CliError::validation(
            STAGE,
            format!("[{what}] must not set seed; it derives from the manifest seed"),
        ));
    }
    toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e| CliError::validation(STAGE, format!("[{what}]: {e}")))
}

impl RunManifest {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation(STAGE, e))
    }

    /// Reads and validates a manifest; relative paths inside it resolve
    /// against its own directory. The provenance hashes the file's bytes.
    pub fn load(path: &Path) -> Result<(Self, Provenance), CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::validation(STAGE, format!("cannot read manifest {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::validation(STAGE, format!("{} is not UTF-8", path.display())))?;
        let mut m = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        m.corpus.path.as_mut().map(resolve);
        m.corpus.profiles.as_mut().map(resolve);
        m.out_dir.as_mut().map(resolve);
        m.validate()?;
        Ok((m, Provenance::of_bytes(&bytes)))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::validation(STAGE, msg));
        match (&self.corpus.path, &self.corpus.synthetic) {
            (Some(_), Some(_)) => return fail("[corpus] sets both path and synthetic".into()),
            (None, None) => return fail("[corpus] needs path or synthetic".into()),
            _ => {}
        }
        for p in [&self.corpus.path, &self.corpus.profiles].into_iter().flatten() {
            if !p.is_file() {
                return fail(format!("input path does not exist: {}", p.display()));
            }
        }
        if self.methods.is_empty() {
            return fail("methods is empty".into());
        }
        if self.fit_methods.is_empty() {
            return fail("fit_methods is empty".into());
        }
        if let Some(cfg) = self.synthetic_config()? {
            cfg.validate().map_err(|e| CliError::validation(STAGE, e))?;
        }
        self.random_selection()?;
        let mut names = HashSet::new();
        for (i, s) in self.simulate.iter().enumerate() {
            let kind = s
                .kind
                .with_key(s.key)
                .map_err(|e| CliError::validation(STAGE, format!("simulate[{i}]: {e}")))?;
            parse_ratios(&s.ratios).map_err(|e| CliError::validation(STAGE, format!("simulate[{i}]: {e}")))?;
            if !matches!(s.baseline, Method::Algorithmic | Method::Truth) {
                return fail(format!("simulate[{i}]: baseline must be algorithmic or truth"));
            }
            if !names.insert(kind.to_string()) {
                return fail(format!("simulate[{i}]: {kind} appears twice"));
            }
        }
        Ok(())
    }

    /// The synthetic generator config with its derived seed, if the corpus is synthetic.
    pub fn synthetic_config(&self) -> Result<Option<SyntheticConfig>, CliError> {
        let Some(t) = &self.corpus.synthetic else {
            return Ok(None);
        };
        let mut cfg: SyntheticConfig = seedless(t, "corpus.synthetic")?;
        cfg.seed = derive_seed(self.seed, SYNTHETIC_STREAM);
        Ok(Some(cfg))
    }

    pub fn random_selection(&self) -> Result<RandomSelection, CliError> {
        let mut sel: RandomSelection = match &self.random {
            Some(t) => seedless(t, "random")?,
            None => RandomSelection::default(),
        };
        sel.seed = derive_seed(self.seed, RANDOM_STREAM);
        Ok(sel)
    }

    /// `out_dir` from the manifest, else `default`.
    pub fn output_dir(&self, default: &Path) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| default.to_path_buf())
    }
}

fn load_corpus(m: &RunManifest) -> Result<Corpus, CliError> {
    let Some(cfg) = m.synthetic_config()? else {
        let path = m.corpus.path.as_deref().expect("validated manifest has a corpus source");
        return stages::load(path, m.corpus.profiles.as_deref());
    };
    let corpus = generate_synthetic(&cfg).map_err(|e| CliError::from_corpus("gen", e))?;
    match &m.corpus.profiles {
        Some(p) => stages::link(&corpus, p),
        None => Ok(corpus),
    }
}

/// Runs every configured stage in dependency order and returns the files
/// written, in writing order.
pub fn run(m: &RunManifest, provenance: &Provenance, default_out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let out = m.output_dir(default_out);
    let mut written = Vec::new();

    log::info!("stage ingest");
    let corpus = load_corpus(m)?;
    if m.corpus.save {
        let path = out.join("corpus.jsonl");
        corpus.save(&path).map_err(|e| CliError::from_corpus("ingest", e))?;
        written.push(path);
    }

    log::info!("stage filter");
    let corpus = stages::apply_hyper(&corpus, m.hyper)?;

    if m.disambiguate {
        log::info!("stage disambiguate");
        let rows = stages::disambiguation_rows(&corpus, &m.methods)?;
        written.push(write_csv(
            "disambiguate",
            &out.join("disambiguation.csv"),
            provenance,
            stages::DISAMBIG_HEADER,
            &rows,
        )?);
    }

    if m.accuracy {
        log::info!("stage accuracy");
        let rows = stages::accuracy_rows(&corpus, &m.methods)?;
        written.push(write_csv("accuracy", &out.join("accuracy.csv"), provenance, stages::ACCURACY_HEADER, &rows)?);
    }

    if m.netstats {
        log::info!("stage netstats");
        let label = SliceSpec::WholeRange.label();
        let (rows, dists) = stages::netstats(&corpus, &label, &m.methods)?;
        written.push(write_csv("netstats", &out.join("netstats.csv"), provenance, stages::NETSTATS_HEADER, &rows)?);
        for (method, dist) in &dists {
            let rows = stages::histogram_rows(dist)?;
            written.push(write_csv(
                "netstats",
                &out.join(format!("histogram_{method}.csv")),
                provenance,
                stages::HISTOGRAM_HEADER,
                &rows,
            )?);
        }
    }

    let selection = m.random_selection()?;
    for &plan in &m.plans {
        let stage = format!("sweep/{}", plan.name());
        log::info!("stage {stage}");
        let rows = stages::run_sweep(&corpus, plan, selection, &m.methods, &m.fit_methods)?;
        written.push(write_csv(
            &stage,
            &out.join(format!("sweep_{}.csv", plan.name())),
            provenance,
            stages::SWEEP_HEADER,
            &stages::sweep_rows(&rows),
        )?);
        if m.svg {
            let svg = stages::sweep_svg(&rows, plan.name());
            written.push(write_svg(&stage, &out.join(format!("sweep_{}.svg", plan.name())), provenance, &svg)?);
        }
    }

    for (i, s) in m.simulate.iter().enumerate() {
        let kind = s.kind.with_key(s.key).map_err(|e| CliError::validation(STAGE, e))?;
        let ratios = parse_ratios(&s.ratios).map_err(|e| CliError::validation(STAGE, e))?;
        let stage = format!("simulate/{kind}");
        log::info!("stage {stage}");
        let seed = derive_seed(m.seed, SIMULATE_STREAM + i as u64);
        let result = stages::simulate(&corpus, kind, &ratios, seed, s.baseline)?;
        written.push(write_csv(
            &stage,
            &out.join(format!("simulate_{kind}.csv")),
            provenance,
            stages::SIMULATE_HEADER,
            &stages::simulate_rows(&result),
        )?);
        if m.svg {
            let svg = stages::simulate_svg(&result);
            written.push(write_svg(&stage, &out.join(format!("simulate_{kind}.svg")), provenance, &svg)?);
        }
    }
    Ok(written)
}
