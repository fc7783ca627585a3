//! Controlled merging and splitting errors.
//!
//! Starting from a baseline partition (algorithmic or truth IDs), a merge
//! perturbation picks entities whose initial-based key collides with another
//! entity's and replaces their identity with that key, so selected entities
//! sharing a key fuse. A split perturbation picks entities seen on two or
//! more papers and gives every one of their mentions a fresh identity.
//! Each ratio is drawn independently from the unperturbed corpus.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, MentionRef};
use crate::disambig::{assign_identities, key_fold, to_aini, to_fini, DisambigError, IdentityAssignment, Method};
use crate::fitting::{fit_cdf_ls, FitError, FitResult};
use crate::network::{ccdf, degree_distribution, NetworkError};
use crate::rng::{derive_seed, seeded};

/// Prefix of entity IDs created by merging, keeping them apart from baseline IDs.
pub const MERGED_PREFIX: &str = "merged:";

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("ratio {0} outside [0, 1]")]
    InvalidRatio(f64),
    #[error("ratios must be strictly increasing")]
    UnorderedRatios,
    #[error("merge target must be AINI or FINI, got {0}")]
    InvalidTarget(Method),
    #[error("baseline must be algorithmic or truth IDs, got {0}")]
    InvalidBaseline(Method),
    #[error(transparent)]
    Disambig(#[from] DisambigError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorKind {
    Merge { target_key: Method },
    Split,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorKind::Merge { target_key } => write!(f, "merge_{target_key}"),
            ErrorKind::Split => f.write_str("split"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub kind: ErrorKind,
    pub ratio: f64,
    pub seed: u64,
    pub baseline_method: Method,
}

/// Number of entities drawn for `ratio` of a pool of `pool` entities.
pub fn selection_size(ratio: f64, pool: usize) -> usize {
    ((ratio * pool as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Entity ID of each baseline entity, keyed by its representative name: the
/// name on its first mention in `(paper_id, pos)` order.
fn representative_names<'a>(corpus: &'a Corpus, baseline: &IdentityAssignment) -> Vec<Option<&'a str>> {
    let mut best: Vec<Option<(&str, u32, &str)>> = vec![None; baseline.n_entities()];
    for (m, mention) in corpus.mentions() {
        if let Some(l) = baseline.label(corpus, m) {
            let rec = &corpus.records()[m.record];
            let cand = (rec.paper_id.as_str(), mention.byline_pos, mention.name_full.as_str());
            let slot = &mut best[l as usize];
            if slot.map_or(true, |b| (cand.0, cand.1) < (b.0, b.1)) {
                *slot = Some(cand);
            }
        }
    }
    best.into_iter().map(|b| b.map(|b| b.2)).collect()
}

fn target_key(name: &str, target: Method) -> Result<String, SimulationError> {
    match target {
        Method::Aini => Ok(to_aini(name)?),
        Method::Fini => Ok(to_fini(name)?),
        other => Err(SimulationError::InvalidTarget(other)),
    }
}

/// Baseline entities whose target key (from the representative name) is
/// shared with at least one other baseline entity.
pub fn merge_prone_entities(
    corpus: &Corpus,
    baseline: &IdentityAssignment,
    target: Method,
) -> Result<BTreeSet<String>, SimulationError> {
    let keys = entity_keys(corpus, baseline, target)?;
    Ok(prone_indices(&keys)
        .into_iter()
        .map(|i| baseline.entity_name(i).to_string())
        .collect())
}

fn entity_keys(
    corpus: &Corpus,
    baseline: &IdentityAssignment,
    target: Method,
) -> Result<Vec<Option<String>>, SimulationError> {
    representative_names(corpus, baseline)
        .into_iter()
        .map(|n| n.map(|n| target_key(n, target).map(|k| key_fold(&k))).transpose())
        .collect()
}

fn prone_indices(keys: &[Option<String>]) -> Vec<u32> {
    let mut count: HashMap<&str, usize> = HashMap::new();
    for k in keys.iter().flatten() {
        *count.entry(k).or_default() += 1;
    }
    keys.iter()
        .enumerate()
        .filter(|(_, k)| k.as_deref().is_some_and(|k| count[k] > 1))
        .map(|(i, _)| i as u32)
        .collect()
}

/// Precomputed baseline state shared by every ratio of a sweep.
pub struct Perturber<'a> {
    corpus: &'a Corpus,
    kind: ErrorKind,
    baseline: IdentityAssignment,
    /// Merge: folded target key per entity.
    keys: Vec<Option<String>>,
    /// Candidate entities, ordered by entity ID.
    pool: Vec<u32>,
}

impl<'a> Perturber<'a> {
    pub fn new(corpus: &'a Corpus, kind: ErrorKind, baseline_method: Method) -> Result<Self, SimulationError> {
        if !matches!(baseline_method, Method::Algorithmic | Method::Truth) {
            return Err(SimulationError::InvalidBaseline(baseline_method));
        }
        let baseline = assign_identities(corpus, baseline_method)?;
        let (keys, mut pool) = match kind {
            ErrorKind::Merge { target_key } => {
                let keys = entity_keys(corpus, &baseline, target_key)?;
                let pool = prone_indices(&keys);
                (keys, pool)
            }
            ErrorKind::Split => {
                let mut papers: Vec<HashSet<usize>> = vec![HashSet::new(); baseline.n_entities()];
                for (m, _) in corpus.mentions() {
                    if let Some(l) = baseline.label(corpus, m) {
                        papers[l as usize].insert(m.record);
                    }
                }
                let pool = (0..baseline.n_entities() as u32)
                    .filter(|&e| papers[e as usize].len() >= 2)
                    .collect();
                (Vec::new(), pool)
            }
        };
        pool.sort_by(|&a, &b| baseline.entity_name(a).cmp(baseline.entity_name(b)));
        Ok(Perturber {
            corpus,
            kind,
            baseline,
            keys,
            pool,
        })
    }

    pub fn baseline(&self) -> &IdentityAssignment {
        &self.baseline
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    /// Entities selected for `ratio`, as a membership mask over baseline entities.
    fn selection(&self, ratio: f64, seed: u64) -> Result<Vec<bool>, SimulationError> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(SimulationError::InvalidRatio(ratio));
        }
        let k = selection_size(ratio, self.pool.len());
        if ratio > 0.0 && self.pool.is_empty() {
            log::warn!("{}: no candidate entities; corpus left unchanged", self.kind);
        }
        let mut mask = vec![false; self.baseline.n_entities()];
        let mut rng = seeded(seed);
        for i in index::sample(&mut rng, self.pool.len(), k.min(self.pool.len())) {
            mask[self.pool[i] as usize] = true;
        }
        Ok(mask)
    }

    /// New entity ID for each mention (`None` keeps the baseline identity).
    fn rewrites(&self, mask: &[bool]) -> Vec<Option<String>> {
        let mut split_counter: HashMap<u32, usize> = HashMap::new();
        self.corpus
            .mentions()
            .map(|(m, _)| {
                let l = self.baseline.label(self.corpus, m)?;
                if !mask[l as usize] {
                    return None;
                }
                Some(match self.kind {
                    ErrorKind::Merge { .. } => {
                        format!("{MERGED_PREFIX}{}", self.keys[l as usize].as_deref().unwrap_or_default())
                    }
                    ErrorKind::Split => {
                        let n = split_counter.entry(l).or_insert(0);
                        *n += 1;
                        format!("{}#{n}", self.baseline.entity_name(l))
                    }
                })
            })
            .collect()
    }

    /// Perturbed identities for `ratio`, without materialising a corpus.
    pub fn assignment(&self, ratio: f64, seed: u64) -> Result<IdentityAssignment, SimulationError> {
        let mask = self.selection(ratio, seed)?;
        let rewrites = self.rewrites(&mask);
        let ids: Vec<Option<&str>> = self
            .corpus
            .mentions()
            .zip(&rewrites)
            .map(|((m, _), r)| match r {
                Some(r) => Some(r.as_str()),
                None => self.baseline.label(self.corpus, m).map(|l| self.baseline.entity_name(l)),
            })
            .collect();
        Ok(IdentityAssignment::from_ids(self.baseline.method(), ids))
    }

    /// Perturbed corpus for `ratio`: the baseline ID channel is rewritten and,
    /// for merges, the names of affected mentions are put in the target format.
    pub fn corpus(&self, ratio: f64, seed: u64) -> Result<Corpus, SimulationError> {
        let mask = self.selection(ratio, seed)?;
        let rewrites = self.rewrites(&mask);
        let mut records = self.corpus.records().to_vec();
        let refs: Vec<MentionRef> = self.corpus.mentions().map(|(m, _)| m).collect();
        for (m, r) in refs.into_iter().zip(rewrites) {
            let Some(id) = r else { continue };
            let mention = &mut records[m.record].mentions[m.slot];
            if let ErrorKind::Merge { target_key: t } = self.kind {
                mention.name_full = target_key(&mention.name_full, t)?;
            }
            match self.baseline.method() {
                Method::Algorithmic => mention.algo_id = Some(id),
                _ => mention.truth_id = Some(id),
            }
        }
        Ok(Corpus::new(records).expect("perturbation keeps records valid"))
    }
}

fn check_kind(config: &SimulationConfig, want_merge: bool) -> Result<(), SimulationError> {
    match (config.kind, want_merge) {
        (ErrorKind::Merge { target_key }, true) if !matches!(target_key, Method::Aini | Method::Fini) => {
            Err(SimulationError::InvalidTarget(target_key))
        }
        (ErrorKind::Merge { .. }, true) | (ErrorKind::Split, false) => Ok(()),
        (ErrorKind::Merge { target_key }, false) => Err(SimulationError::InvalidTarget(target_key)),
        (ErrorKind::Split, true) => Err(SimulationError::InvalidTarget(config.baseline_method)),
    }
}

pub fn apply_merge_errors(corpus: &Corpus, config: &SimulationConfig) -> Result<Corpus, SimulationError> {
    check_kind(config, true)?;
    Perturber::new(corpus, config.kind, config.baseline_method)?.corpus(config.ratio, config.seed)
}

pub fn apply_split_errors(corpus: &Corpus, config: &SimulationConfig) -> Result<Corpus, SimulationError> {
    check_kind(config, false)?;
    Perturber::new(corpus, config.kind, config.baseline_method)?.corpus(config.ratio, config.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub ratio: f64,
    pub n_entities: usize,
    pub mean_degree: f64,
    /// `None` when the distribution has too few points to fit.
    pub fit: Option<FitResult>,
}

impl SweepPoint {
    /// Inside the plotting window `α ≤ 6`, `R² ≥ 0.9`.
    pub fn plottable(&self) -> bool {
        self.fit
            .as_ref()
            .is_some_and(|f| f.alpha <= 6.0 && f.r_squared.is_some_and(|r| r >= 0.9))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub kind: ErrorKind,
    pub points: Vec<SweepPoint>,
}

/// `1%, 2%, ..., 100%`.
pub fn percent_ratios() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 100.0).collect()
}

/// Seed used for one ratio of a sweep; depends on the ratio, not its position.
pub fn ratio_seed(seed: u64, ratio: f64) -> u64 {
    derive_seed(seed, (ratio * 1e6).round() as u64)
}

/// Perturbs the corpus at every ratio, rebuilds the degree distribution and
/// fits it by least squares on the CCDF.
pub fn sweep(
    corpus: &Corpus,
    kind: ErrorKind,
    ratios: &[f64],
    seed: u64,
    baseline_method: Method,
) -> Result<SweepResult, SimulationError> {
    if ratios.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimulationError::UnorderedRatios);
    }
    if let Some(&r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(SimulationError::InvalidRatio(r));
    }
    if let ErrorKind::Merge { target_key } = kind {
        if !matches!(target_key, Method::Aini | Method::Fini) {
            return Err(SimulationError::InvalidTarget(target_key));
        }
    }
    let perturber = Perturber::new(corpus, kind, baseline_method)?;
    let points = ratios
        .par_iter()
        .map(|&ratio| {
            let assignment = perturber.assignment(ratio, ratio_seed(seed, ratio))?;
            let dist = degree_distribution(corpus, &assignment)?;
            let fit = match ccdf(&dist, false) {
                Ok(points) => match fit_cdf_ls(&points, 1) {
                    Ok(f) => Some(f),
                    Err(FitError::TooFewPoints { .. } | FitError::ZeroVariance) => None,
                    Err(e) => unreachable!("least-squares fit failed: {e}"),
                },
                Err(_) => None,
            };
            Ok(SweepPoint {
                ratio,
                n_entities: assignment.n_entities(),
                mean_degree: dist.mean_degree(),
                fit,
            })
        })
        .collect::<Result<Vec<_>, SimulationError>>()?;
    Ok(SweepResult { kind, points })
}

/// Entities of an assignment grouped by their mention sets; used to compare
/// partitions independently of entity naming.
pub fn partition_of(assignment: &IdentityAssignment) -> BTreeSet<Vec<usize>> {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, l) in assignment.labels().iter().enumerate() {
        if let Some(l) = l {
            groups.entry(*l).or_default().push(i);
        }
    }
    groups.into_values().collect()
}
