//! Pipeline stages shared by the subcommands and by manifest runs. Each
//! stage turns core results into CSV rows; callers decide where they go.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use namescale::accuracy::{error_report, AccuracyError};
use namescale::corpus::{link_truth_ids, load_profiles};
use namescale::disambig::DisambigError;
use namescale::network::{filter_hyperauthorship, random_subsets, slice, NetworkError, RandomSelection};
use namescale::pipeline::{analyze, random_sweep, slice_sweep, FitRow, SlicePlan};
use namescale::simulation::{sweep, ErrorKind, SimulationError, SweepResult};
use namescale::{
    assign_identities, ccdf, degree_distribution, load_corpus, Corpus, DegreeDistribution, FitMethod, HyperPolicy,
    Method, SliceSpec,
};

use crate::output::{num, opt_num};
use crate::svg::{trajectory_svg, Series};
use crate::CliError;

pub const DISAMBIG_HEADER: &[&str] = &["paper_id", "pos", "method", "entity_id"];
pub const ACCURACY_HEADER: &[&str] = &["method", "n_clusters", "no_error", "merged", "split", "merged_and_split"];
pub const NETSTATS_HEADER: &[&str] = &["method", "slice", "n_authors", "mean_degree", "sd_degree"];
pub const HISTOGRAM_HEADER: &[&str] = &["x", "count", "ccdf"];
pub const FIT_HEADER: &[&str] = &[
    "method", "slice", "fit_method", "alpha", "r_squared", "slope", "x_min", "ks", "n_tail", "tail_ratio",
];
/// [`FIT_HEADER`] plus the size of each slice.
pub const SWEEP_HEADER: &[&str] = &[
    "method", "slice", "fit_method", "alpha", "r_squared", "slope", "x_min", "ks", "n_tail", "tail_ratio",
    "n_records", "n_authors", "mean_degree",
];
pub const SIMULATE_HEADER: &[&str] = &["ratio", "alpha", "r_squared", "n_entities", "mean_degree"];

const PLACES: usize = 6;

pub fn network_error(stage: &str, e: NetworkError) -> CliError {
    match e {
        NetworkError::InvalidSlice(_) | NetworkError::InvalidPolicy(_) | NetworkError::InvalidSelection(_) => {
            CliError::validation(stage, e)
        }
        NetworkError::AssignmentMismatch { .. } => CliError::invariant(stage, e),
        NetworkError::EmptyCorpus | NetworkError::NoPositiveDegree => CliError::data(stage, e),
    }
}

fn disambig_error(stage: &str, e: DisambigError) -> CliError {
    match e {
        DisambigError::UnknownMethod(_) => CliError::validation(stage, e),
        _ => CliError::data(stage, e),
    }
}

fn simulation_error(stage: &str, e: SimulationError) -> CliError {
    match e {
        SimulationError::Disambig(d) => disambig_error(stage, d),
        SimulationError::Network(n) => network_error(stage, n),
        other => CliError::validation(stage, other),
    }
}

pub fn parse_fit_method(s: &str) -> Result<FitMethod, String> {
    match s.to_ascii_lowercase().as_str() {
        "cdf_ls" | "ls" => Ok(FitMethod::CdfLs),
        "mle_ks" | "mle" => Ok(FitMethod::MleKs),
        _ => Err(format!("unknown fit method {s:?}; expected cdf_ls or mle_ks")),
    }
}

/// `none`, `top:<percent>` or `max:<authors>`.
pub fn parse_hyper(s: &str) -> Result<HyperPolicy, String> {
    let bad = || format!("invalid hyper-authorship policy {s:?}; expected none, top:<percent> or max:<authors>");
    match s.split_once(':') {
        None if s == "none" => Ok(HyperPolicy::None),
        Some(("top", v)) => v.parse().map(|percent| HyperPolicy::TopPercentile { percent }).map_err(|_| bad()),
        Some(("max", v)) => v.parse().map(|max_authors| HyperPolicy::AbsoluteCutoff { max_authors }).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

/// The display form of a [`SliceSpec`]: `all`, `cum<start>-<end>` or `w<length>:<end>`.
pub fn parse_slice(s: &str) -> Result<SliceSpec, String> {
    let bad = || format!("invalid slice {s:?}; expected all, cum<start>-<end> or w<length>:<end>");
    let spec = if s == "all" {
        SliceSpec::WholeRange
    } else if let Some(rest) = s.strip_prefix("cum") {
        // the start year may itself be negative, so split at the last '-' after the first character
        let cut = rest.get(1..).and_then(|r| r.find('-')).map(|i| i + 1).ok_or_else(bad)?;
        let (a, b) = (&rest[..cut], &rest[cut + 1..]);
        SliceSpec::Cumulative {
            start: a.parse().map_err(|_| bad())?,
            end: b.parse().map_err(|_| bad())?,
        }
    } else if let Some(rest) = s.strip_prefix('w') {
        let (a, b) = rest.split_once(':').ok_or_else(bad)?;
        SliceSpec::Window {
            length: a.parse().map_err(|_| bad())?,
            end: b.parse().map_err(|_| bad())?,
        }
    } else {
        return Err(bad());
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// `start:end:step` (inclusive) or a comma-separated list; values in [0, 1],
/// strictly increasing.
pub fn parse_ratios(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("invalid ratio {t:?}"));
    let ratios: Vec<f64> = match s.split(':').collect::<Vec<_>>()[..] {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(format!("invalid ratio range {s:?}"));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            // rounding keeps 0.07 from printing as 0.07000000000000001
            (0..=n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect()
        }
        [_] => s.split(',').map(num).collect::<Result<_, _>>()?,
        _ => return Err(format!("invalid ratio spec {s:?}")),
    };
    if ratios.is_empty() {
        return Err("no ratios given".into());
    }
    if let Some(r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(format!("ratio {r} outside [0, 1]"));
    }
    if ratios.windows(2).any(|w| w[0] >= w[1]) {
        return Err("ratios must be strictly increasing".into());
    }
    Ok(ratios)
}

/// Kind of identity error injected by `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimKind {
    Merge,
    Split,
}

impl FromStr for SimKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "merge" => Ok(SimKind::Merge),
            "split" => Ok(SimKind::Split),
            _ => Err(format!("unknown error kind {s:?}; expected merge or split")),
        }
    }
}

impl SimKind {
    pub fn with_key(self, key: Option<Method>) -> Result<ErrorKind, String> {
        match (self, key) {
            (SimKind::Merge, Some(k @ (Method::Aini | Method::Fini))) => Ok(ErrorKind::Merge { target_key: k }),
            (SimKind::Merge, Some(k)) => Err(format!("merge key must be aini or fini, got {k}")),
            (SimKind::Merge, None) => Err("merge needs a key (aini or fini)".into()),
            (SimKind::Split, None) => Ok(ErrorKind::Split),
            (SimKind::Split, Some(_)) => Err("split takes no key".into()),
        }
    }
}

/// A slice sequence, or repeated random subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepPlan {
    Cumulative,
    Window5,
    Window1,
    Whole,
    Random,
}

impl FromStr for SweepPlan {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cumulative" => Ok(SweepPlan::Cumulative),
            "window5" => Ok(SweepPlan::Window5),
            "window1" => Ok(SweepPlan::Window1),
            "whole" => Ok(SweepPlan::Whole),
            "random" => Ok(SweepPlan::Random),
            _ => Err(format!(
                "unknown plan {s:?}; expected cumulative, window5, window1, whole or random"
            )),
        }
    }
}

impl SweepPlan {
    pub fn name(self) -> &'static str {
        self.slices().map_or("random", SlicePlan::name)
    }

    fn slices(self) -> Option<SlicePlan> {
        match self {
            SweepPlan::Cumulative => Some(SlicePlan::Cumulative),
            SweepPlan::Window5 => Some(SlicePlan::Window5),
            SweepPlan::Window1 => Some(SlicePlan::Window1),
            SweepPlan::Whole => Some(SlicePlan::Whole),
            SweepPlan::Random => None,
        }
    }
}

/// Loads a JSONL corpus, attaching truth IDs from a profiles file if given.
pub fn load(input: &Path, profiles: Option<&Path>) -> Result<Corpus, CliError> {
    let corpus = load_corpus(input).map_err(|e| CliError::from_corpus("ingest", e))?;
    match profiles {
        Some(p) => link(&corpus, p),
        None => Ok(corpus),
    }
}

pub fn link(corpus: &Corpus, profiles: &Path) -> Result<Corpus, CliError> {
    let profiles = load_profiles(profiles).map_err(|e| CliError::from_corpus("ingest", e))?;
    let (linked, summary) = link_truth_ids(corpus, &profiles);
    log::info!(
        "linked {} mentions ({} duplicate titles, {} ambiguous, {} conflicting, {} unmatched profiles)",
        summary.linked_mentions,
        summary.duplicate_titles,
        summary.ambiguous_mentions,
        summary.conflicting_mentions,
        summary.unmatched_profiles
    );
    Ok(linked)
}

pub fn apply_hyper(corpus: &Corpus, policy: HyperPolicy) -> Result<Corpus, CliError> {
    let (filtered, threshold) = filter_hyperauthorship(corpus, policy).map_err(|e| network_error("filter", e))?;
    if let Some(t) = threshold {
        log::info!(
            "dropped {} of {} papers with {t} or more authors",
            corpus.len() - filtered.len(),
            corpus.len()
        );
    }
    if filtered.is_empty() {
        return Err(CliError::data("filter", "no paper survives the hyper-authorship filter"));
    }
    Ok(filtered)
}

pub fn slice_corpus(corpus: &Corpus, spec: SliceSpec) -> Result<Corpus, CliError> {
    slice(corpus, spec).map_err(|e| network_error("slice", e))
}

/// One row per mention per method; uncovered mentions get an empty entity.
pub fn disambiguation_rows(corpus: &Corpus, methods: &[Method]) -> Result<Vec<Vec<String>>, CliError> {
    let mut rows = Vec::with_capacity(corpus.n_mentions() * methods.len());
    for &method in methods {
        let a = assign_identities(corpus, method).map_err(|e| disambig_error("disambiguate", e))?;
        for (m, mention) in corpus.mentions() {
            let entity = a.label(corpus, m).map(|l| a.entity_name(l)).unwrap_or_default();
            rows.push(vec![
                corpus.records()[m.record].paper_id.clone(),
                mention.byline_pos.to_string(),
                method.to_string(),
                entity.to_string(),
            ]);
        }
    }
    Ok(rows)
}

pub fn accuracy_rows(corpus: &Corpus, methods: &[Method]) -> Result<Vec<Vec<String>>, CliError> {
    const STAGE: &str = "accuracy";
    let mut rows = Vec::new();
    for &method in methods {
        let a = assign_identities(corpus, method).map_err(|e| disambig_error(STAGE, e))?;
        let r = error_report(corpus, &a).map_err(|e| match e {
            AccuracyError::NoTruthClusters => CliError::data(STAGE, e),
            AccuracyError::Uncovered { .. } => CliError::data(STAGE, e),
        })?;
        let sum = r.ratio_sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CliError::invariant(STAGE, format!("{method} ratios sum to {sum}")));
        }
        rows.push(vec![
            method.to_string(),
            r.n_clusters.to_string(),
            num(r.ratio_no_error, 4),
            num(r.ratio_merged, 4),
            num(r.ratio_split, 4),
            num(r.ratio_merged_and_split, 4),
        ]);
    }
    Ok(rows)
}

/// Degree statistics per method, with the distributions for histograms.
pub fn netstats(
    corpus: &Corpus,
    label: &str,
    methods: &[Method],
) -> Result<(Vec<Vec<String>>, Vec<(Method, DegreeDistribution)>), CliError> {
    const STAGE: &str = "netstats";
    let mut rows = Vec::new();
    let mut dists = Vec::new();
    for &method in methods {
        let a = assign_identities(corpus, method).map_err(|e| disambig_error(STAGE, e))?;
        let d = degree_distribution(corpus, &a).map_err(|e| network_error(STAGE, e))?;
        rows.push(vec![
            method.to_string(),
            label.to_string(),
            d.n_authors().to_string(),
            num(d.mean_degree(), PLACES),
            num(d.sd_degree(), PLACES),
        ]);
        dists.push((method, d));
    }
    Ok((rows, dists))
}

/// Positive degrees with their author counts and the CCDF over
/// positive-degree authors.
pub fn histogram_rows(dist: &DegreeDistribution) -> Result<Vec<Vec<String>>, CliError> {
    let points = ccdf(dist, false).map_err(|e| network_error("netstats", e))?;
    Ok(points
        .points
        .iter()
        .map(|p| {
            vec![
                p.x.to_string(),
                dist.counts().get(&p.x).copied().unwrap_or(0).to_string(),
                num(p.fraction, PLACES),
            ]
        })
        .collect())
}

fn fit_fields(row: &FitRow) -> Vec<String> {
    let f = row.fit.as_ref();
    vec![
        row.method.to_string(),
        row.slice.clone(),
        row.fit_method.to_string(),
        opt_num(f.map(|f| f.alpha), PLACES),
        opt_num(f.and_then(|f| f.r_squared), PLACES),
        opt_num(f.and_then(|f| f.slope), PLACES),
        f.map(|f| f.x_min.to_string()).unwrap_or_default(),
        opt_num(f.and_then(|f| f.ks_distance), PLACES),
        f.map(|f| f.n_tail.to_string()).unwrap_or_default(),
        opt_num(f.map(|f| f.tail_ratio), PLACES),
    ]
}

/// Rows under [`FIT_HEADER`].
pub fn fit_rows(rows: &[FitRow]) -> Vec<Vec<String>> {
    rows.iter().map(fit_fields).collect()
}

/// Rows under [`SWEEP_HEADER`].
pub fn sweep_rows(rows: &[FitRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut v = fit_fields(r);
            v.push(r.n_records.to_string());
            v.push(r.n_authors.to_string());
            v.push(num(r.mean_degree, PLACES));
            v
        })
        .collect()
}

/// Fits one slice for every method and fit method.
pub fn fit_slice(
    corpus: &Corpus,
    spec: SliceSpec,
    methods: &[Method],
    fit_methods: &[FitMethod],
) -> Result<Vec<FitRow>, CliError> {
    let part = slice_corpus(corpus, spec)?;
    analyze(&part, &spec.label(), methods, fit_methods).map_err(|e| network_error("fit", e))
}

pub fn run_sweep(
    corpus: &Corpus,
    plan: SweepPlan,
    selection: RandomSelection,
    methods: &[Method],
    fit_methods: &[FitMethod],
) -> Result<Vec<FitRow>, CliError> {
    let stage = format!("sweep/{}", plan.name());
    match plan.slices() {
        Some(p) => slice_sweep(corpus, p, methods, fit_methods),
        None => {
            // validate before the sweep so a bad selection is not reported as data
            random_subsets(corpus, selection).map_err(|e| network_error(&stage, e))?;
            random_sweep(corpus, selection, methods, fit_methods)
        }
    }
    .map_err(|e| network_error(&stage, e))
}

/// One (α, R²) trajectory per method from the least-squares rows, in slice order.
pub fn sweep_svg(rows: &[FitRow], title: &str) -> String {
    let mut by_method: BTreeMap<Method, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.fit_method == FitMethod::CdfLs) {
        if let Some((a, r2)) = r.fit.as_ref().and_then(|f| Some((f.alpha, f.r_squared?))) {
            by_method.entry(r.method).or_default().push((a, r2));
        }
    }
    let series: Vec<Series> = by_method
        .into_iter()
        .map(|(m, points)| Series { label: m.to_string(), points })
        .collect();
    trajectory_svg(title, "alpha", "R squared", &series)
}

pub fn simulate(
    corpus: &Corpus,
    kind: ErrorKind,
    ratios: &[f64],
    seed: u64,
    baseline: Method,
) -> Result<SweepResult, CliError> {
    sweep(corpus, kind, ratios, seed, baseline).map_err(|e| simulation_error("simulate", e))
}

pub fn simulate_rows(result: &SweepResult) -> Vec<Vec<String>> {
    result
        .points
        .iter()
        .map(|p| {
            vec![
                num(p.ratio, 4),
                opt_num(p.fit.as_ref().map(|f| f.alpha), PLACES),
                opt_num(p.fit.as_ref().and_then(|f| f.r_squared), PLACES),
                p.n_entities.to_string(),
                num(p.mean_degree, PLACES),
            ]
        })
        .collect()
}

/// Trajectory over increasing ratio, skipping points outside the plotting window.
pub fn simulate_svg(result: &SweepResult) -> String {
    let points = result
        .points
        .iter()
        .filter(|p| p.plottable())
        .filter_map(|p| p.fit.as_ref().and_then(|f| Some((f.alpha, f.r_squared?))))
        .collect();
    let label = result.kind.to_string();
    trajectory_svg(&label, "alpha", "R squared", &[Series { label: label.clone(), points }])
}
