//! Coauthorship degree distributions.
//!
//! Every paper links all entities on its byline to each other; an entity's
//! degree is the number of distinct other entities it has shared a byline
//! with. Mentions the assignment does not cover are left out entirely.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, PaperRecord};
use crate::disambig::IdentityAssignment;
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no author has a positive degree")]
    NoPositiveDegree,
    #[error("invalid slice: {0}")]
    InvalidSlice(String),
    #[error("invalid hyper-authorship policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid random selection: {0}")]
    InvalidSelection(String),
    #[error("assignment covers {assignment} mentions but the corpus has {corpus}")]
    AssignmentMismatch { assignment: usize, corpus: usize },
}

/// Histogram of entity degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    counts: BTreeMap<u32, usize>,
    n_authors: usize,
    mean: f64,
    sd: f64,
}

impl DegreeDistribution {
    pub fn from_degrees<I: IntoIterator<Item = u32>>(degrees: I) -> Self {
        let mut counts = BTreeMap::new();
        for d in degrees {
            *counts.entry(d).or_insert(0usize) += 1;
        }
        Self::from_counts(counts)
    }

    /// Zero counts are dropped.
    pub fn from_counts(mut counts: BTreeMap<u32, usize>) -> Self {
        counts.retain(|_, c| *c > 0);
        let n: usize = counts.values().sum();
        let (mean, sd) = if n == 0 {
            (0.0, 0.0)
        } else {
            let nf = n as f64;
            let mean = counts.iter().map(|(&x, &c)| x as f64 * c as f64).sum::<f64>() / nf;
            let var = counts
                .iter()
                .map(|(&x, &c)| c as f64 * (x as f64 - mean).powi(2))
                .sum::<f64>()
                / nf;
            (mean, var.sqrt())
        };
        DegreeDistribution {
            counts,
            n_authors: n,
            mean,
            sd,
        }
    }

    pub fn counts(&self) -> &BTreeMap<u32, usize> {
        &self.counts
    }

    pub fn n_authors(&self) -> usize {
        self.n_authors
    }

    pub fn n_positive(&self) -> usize {
        self.counts.range(1..).map(|(_, c)| c).sum()
    }

    pub fn mean_degree(&self) -> f64 {
        self.mean
    }

    /// Population standard deviation.
    pub fn sd_degree(&self) -> f64 {
        self.sd
    }

    /// Degrees with multiplicity, ascending.
    pub fn degrees(&self) -> impl Iterator<Item = u32> + '_ {
        self.counts
            .iter()
            .flat_map(|(&x, &c)| std::iter::repeat(x).take(c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcdfPoint {
    pub x: u32,
    pub fraction: f64,
    /// Authors with degree ≥ x.
    pub at_least: usize,
}

/// Complementary cumulative distribution over the observed degrees ≥ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfPoints {
    pub points: Vec<CcdfPoint>,
    pub denominator: usize,
}

impl CcdfPoints {
    /// Points given directly as `(x, fraction)`, with no author counts.
    pub fn from_pairs(pairs: &[(u32, f64)]) -> Self {
        CcdfPoints {
            points: pairs
                .iter()
                .map(|&(x, fraction)| CcdfPoint { x, fraction, at_least: 0 })
                .collect(),
            denominator: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn pairs(&self) -> Vec<(u32, f64)> {
        self.points.iter().map(|p| (p.x, p.fraction)).collect()
    }
}

/// CCDF of `dist`. The denominator is the number of authors with degree ≥ 1,
/// or all authors when `include_isolates` is set.
pub fn ccdf(dist: &DegreeDistribution, include_isolates: bool) -> Result<CcdfPoints, NetworkError> {
    let positive = dist.n_positive();
    if positive == 0 {
        return Err(NetworkError::NoPositiveDegree);
    }
    let denominator = if include_isolates { dist.n_authors() } else { positive };
    let mut remaining = positive;
    let mut points = Vec::new();
    for (&x, &c) in dist.counts().range(1..) {
        points.push(CcdfPoint {
            x,
            fraction: remaining as f64 / denominator as f64,
            at_least: remaining,
        });
        remaining -= c;
    }
    Ok(CcdfPoints { points, denominator })
}

/// Degree of every entity that has at least one covered mention in `corpus`,
/// indexed by the assignment's entity index (`None` for absent entities).
pub fn entity_degrees(
    corpus: &Corpus,
    assignment: &IdentityAssignment,
) -> Result<Vec<Option<u32>>, NetworkError> {
    let labels = assignment.labels();
    if labels.len() != corpus.n_mentions() {
        return Err(NetworkError::AssignmentMismatch {
            assignment: labels.len(),
            corpus: corpus.n_mentions(),
        });
    }
    let mut offsets = Vec::with_capacity(corpus.len());
    let mut acc = 0;
    for r in corpus.records() {
        offsets.push(acc);
        acc += r.mentions.len();
    }
    let mut present = vec![false; assignment.n_entities()];
    for l in labels.iter().flatten() {
        present[*l as usize] = true;
    }
    let mut edges: Vec<u64> = corpus
        .records()
        .par_iter()
        .zip(offsets.par_iter())
        .flat_map_iter(|(rec, &off)| {
            let mut members: Vec<u32> = labels[off..off + rec.mentions.len()]
                .iter()
                .flatten()
                .copied()
                .collect();
            members.sort_unstable();
            members.dedup();
            let mut out = Vec::with_capacity(members.len() * members.len().saturating_sub(1));
            for &a in &members {
                for &b in &members {
                    if a != b {
                        out.push(((a as u64) << 32) | b as u64);
                    }
                }
            }
            out
        })
        .collect();
    edges.par_sort_unstable();
    edges.dedup();
    let mut degree: Vec<Option<u32>> = present.iter().map(|&p| p.then_some(0)).collect();
    for e in edges {
        let a = (e >> 32) as usize;
        if let Some(d) = degree[a].as_mut() {
            *d += 1;
        }
    }
    Ok(degree)
}

pub fn degree_distribution(
    corpus: &Corpus,
    assignment: &IdentityAssignment,
) -> Result<DegreeDistribution, NetworkError> {
    let degrees = entity_degrees(corpus, assignment)?;
    Ok(DegreeDistribution::from_degrees(degrees.into_iter().flatten()))
}

/// The `k` highest-degree entities; ties go to the lexicographically smaller entity ID.
pub fn top_degree_entities(
    corpus: &Corpus,
    assignment: &IdentityAssignment,
    k: usize,
) -> Result<Vec<(String, u32)>, NetworkError> {
    let degrees = entity_degrees(corpus, assignment)?;
    let mut ranked: Vec<(&str, u32)> = degrees
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.map(|d| (assignment.entity_name(i as u32), d)))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(ranked
        .into_iter()
        .take(k)
        .map(|(n, d)| (n.to_string(), d))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HyperPolicy {
    /// Drop the papers with the most authors, up to `percent` of all papers.
    TopPercentile { percent: f64 },
    /// Drop papers with more than `max_authors` authors.
    AbsoluteCutoff { max_authors: usize },
    None,
}

impl Default for HyperPolicy {
    fn default() -> Self {
        HyperPolicy::TopPercentile { percent: 1.0 }
    }
}

/// Removes hyper-authored papers. Returns the filtered corpus and the
/// exclusion threshold `T`: papers with `T` or more authors were dropped.
/// `None` as the threshold means nothing could have been dropped.
pub fn filter_hyperauthorship(
    corpus: &Corpus,
    policy: HyperPolicy,
) -> Result<(Corpus, Option<usize>), NetworkError> {
    if corpus.is_empty() {
        return Err(NetworkError::EmptyCorpus);
    }
    let threshold = match policy {
        HyperPolicy::None => return Ok((corpus.clone(), None)),
        HyperPolicy::AbsoluteCutoff { max_authors } => {
            if max_authors == 0 {
                return Err(NetworkError::InvalidPolicy("max_authors must be at least 1".into()));
            }
            max_authors + 1
        }
        HyperPolicy::TopPercentile { percent } => {
            if !(percent > 0.0 && percent < 100.0) {
                return Err(NetworkError::InvalidPolicy(format!(
                    "percentile {percent} outside (0, 100)"
                )));
            }
            percentile_threshold(corpus.records(), percent)
        }
    };
    Ok((corpus.filter(|r| r.n_authors() < threshold), Some(threshold)))
}

/// Smallest author count `T` such that papers with ≥ `T` authors make up at
/// most `percent`% of the corpus.
fn percentile_threshold(records: &[PaperRecord], percent: f64) -> usize {
    let max = records.iter().map(PaperRecord::n_authors).max().unwrap_or(0);
    let mut hist = vec![0usize; max + 2];
    for r in records {
        hist[r.n_authors()] += 1;
    }
    let allowed = percent / 100.0 * records.len() as f64;
    let mut at_least = 0usize;
    let mut threshold = max + 1;
    for t in (1..=max).rev() {
        at_least += hist[t];
        if at_least as f64 <= allowed {
            threshold = t;
        } else {
            break;
        }
    }
    threshold
}

/// A range of publication years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SliceSpec {
    /// Years `start..=end`.
    Cumulative { start: i32, end: i32 },
    /// The `length` years ending at `end`: `(end - length, end]`.
    Window { length: u32, end: i32 },
    WholeRange,
}

impl SliceSpec {
    pub fn validate(&self) -> Result<(), NetworkError> {
        match *self {
            SliceSpec::Cumulative { start, end } if start > end => {
                Err(NetworkError::InvalidSlice(format!("start {start} after end {end}")))
            }
            SliceSpec::Window { length: 0, .. } => {
                Err(NetworkError::InvalidSlice("window length must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, year: i32) -> bool {
        match *self {
            SliceSpec::Cumulative { start, end } => (start..=end).contains(&year),
            SliceSpec::Window { length, end } => year <= end && year > end - length as i32,
            SliceSpec::WholeRange => true,
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SliceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceSpec::Cumulative { start, end } => write!(f, "cum{start}-{end}"),
            SliceSpec::Window { length, end } => write!(f, "w{length}:{end}"),
            SliceSpec::WholeRange => f.write_str("all"),
        }
    }
}

/// Records whose year falls in `spec`. Windows reaching before the first
/// year of the data simply cover fewer years.
pub fn slice(corpus: &Corpus, spec: SliceSpec) -> Result<Corpus, NetworkError> {
    spec.validate()?;
    let out = corpus.filter(|r| spec.contains(r.year));
    if out.is_empty() && !corpus.is_empty() {
        log::warn!("slice {spec} selects no records");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomSelection {
    /// Share of the corpus drawn as the base sample.
    pub base_fraction: f64,
    /// First subset size as a share of the base sample.
    pub start_fraction: f64,
    pub increment: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for RandomSelection {
    fn default() -> Self {
        RandomSelection {
            base_fraction: 0.1,
            start_fraction: 0.1,
            increment: 10_000,
            repeats: 10,
            seed: 1,
        }
    }
}

/// Subset sizes `increment, 2·increment, ...` from the first multiple at or
/// above `start_fraction · base` up to `base`; `base` itself always closes
/// the sequence.
pub fn subset_sizes(base: usize, increment: usize, start_fraction: f64) -> Vec<usize> {
    if base == 0 || increment == 0 {
        return Vec::new();
    }
    let start = (start_fraction * base as f64).ceil().max(1.0) as usize;
    let first = start.div_ceil(increment).max(1);
    let mut sizes: Vec<usize> = (first..=base / increment).map(|k| k * increment).collect();
    if sizes.last() != Some(&base) {
        sizes.push(base);
    }
    sizes
}

#[derive(Debug, Clone)]
pub struct RandomSubset {
    pub repeat: usize,
    pub size: usize,
    pub corpus: Corpus,
}

/// Lazily yields random subsets: per repeat, one base sample, then subsets of
/// each size drawn independently from it without replacement.
pub struct RandomSubsets<'a> {
    corpus: &'a Corpus,
    sel: RandomSelection,
    base_size: usize,
    sizes: Vec<usize>,
    repeat: usize,
    step: usize,
    base: Vec<usize>,
}

impl Iterator for RandomSubsets<'_> {
    type Item = RandomSubset;

    fn next(&mut self) -> Option<RandomSubset> {
        if self.repeat >= self.sel.repeats {
            return None;
        }
        let repeat_seed = derive_seed(self.sel.seed, self.repeat as u64);
        if self.step == 0 {
            let mut rng = seeded(repeat_seed);
            self.base = index::sample(&mut rng, self.corpus.len(), self.base_size).into_vec();
        }
        let size = self.sizes[self.step];
        let mut rng = seeded(derive_seed(repeat_seed, self.step as u64 + 1));
        let mut picked: Vec<usize> = if size == self.base.len() {
            self.base.clone()
        } else {
            index::sample(&mut rng, self.base.len(), size)
                .into_iter()
                .map(|i| self.base[i])
                .collect()
        };
        picked.sort_unstable();
        let item = RandomSubset {
            repeat: self.repeat,
            size,
            corpus: self.corpus.select(&picked),
        };
        self.step += 1;
        if self.step == self.sizes.len() {
            self.step = 0;
            self.repeat += 1;
        }
        Some(item)
    }
}

pub fn random_subsets(corpus: &Corpus, sel: RandomSelection) -> Result<RandomSubsets<'_>, NetworkError> {
    let bad = |m: String| Err(NetworkError::InvalidSelection(m));
    if corpus.is_empty() {
        return Err(NetworkError::EmptyCorpus);
    }
    if !(sel.base_fraction > 0.0 && sel.base_fraction <= 1.0) {
        return bad(format!("base_fraction {} outside (0, 1]", sel.base_fraction));
    }
    if !(sel.start_fraction > 0.0 && sel.start_fraction <= 1.0) {
        return bad(format!("start_fraction {} outside (0, 1]", sel.start_fraction));
    }
    if sel.repeats == 0 {
        return bad("repeats must be at least 1".into());
    }
    let base_size = ((sel.base_fraction * corpus.len() as f64).ceil() as usize).min(corpus.len());
    if sel.increment == 0 || sel.increment > base_size {
        return bad(format!(
            "increment {} must be between 1 and the base sample size {base_size}",
            sel.increment
        ));
    }
    Ok(RandomSubsets {
        corpus,
        sel,
        base_size,
        sizes: subset_sizes(base_size, sel.increment, sel.start_fraction),
        repeat: 0,
        step: 0,
        base: Vec::new(),
    })
}
