//! Slice sequences and per-slice fit tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::disambig::{assign_identities, DisambigError, Method};
use crate::fitting::{fit_cdf_ls, fit_mle_ks, FitMethod, FitResult};
use crate::network::{
    ccdf, degree_distribution, random_subsets, slice, NetworkError, RandomSelection, SliceSpec,
};

/// A sequence of year slices advanced one year at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlicePlan {
    /// From the first year up to each target year.
    Cumulative,
    Window5,
    Window1,
    Whole,
}

impl SlicePlan {
    pub fn specs(self, years: (i32, i32)) -> Vec<SliceSpec> {
        let (lo, hi) = years;
        match self {
            SlicePlan::Cumulative => (lo..=hi).map(|end| SliceSpec::Cumulative { start: lo, end }).collect(),
            SlicePlan::Window5 => (lo..=hi).map(|end| SliceSpec::Window { length: 5, end }).collect(),
            SlicePlan::Window1 => (lo..=hi).map(|end| SliceSpec::Window { length: 1, end }).collect(),
            SlicePlan::Whole => vec![SliceSpec::WholeRange],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SlicePlan::Cumulative => "cumulative",
            SlicePlan::Window5 => "window5",
            SlicePlan::Window1 => "window1",
            SlicePlan::Whole => "whole",
        }
    }
}

/// Network statistics and one fit for one (slice, method, fit method).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub method: Method,
    pub slice: String,
    pub fit_method: FitMethod,
    pub n_records: usize,
    pub n_authors: usize,
    pub mean_degree: f64,
    pub sd_degree: f64,
    /// `None` when the slice is too small to fit.
    pub fit: Option<FitResult>,
}

fn fit_one(dist: &crate::network::DegreeDistribution, fm: FitMethod) -> Option<FitResult> {
    match fm {
        FitMethod::CdfLs => ccdf(dist, false).ok().and_then(|p| fit_cdf_ls(&p, 1).ok()),
        FitMethod::MleKs => fit_mle_ks(dist).ok(),
    }
}

/// Degree distribution and fits of one corpus slice for every method.
pub fn analyze(
    corpus: &Corpus,
    label: &str,
    methods: &[Method],
    fit_methods: &[FitMethod],
) -> Result<Vec<FitRow>, NetworkError> {
    let mut rows = Vec::with_capacity(methods.len() * fit_methods.len());
    for &method in methods {
        let dist = match assign_identities(corpus, method) {
            Ok(a) => Some(degree_distribution(corpus, &a)?),
            Err(DisambigError::NoIdentifiers(_)) => None,
            Err(e) => {
                log::warn!("{label}/{method}: {e}");
                None
            }
        };
        for &fm in fit_methods {
            rows.push(FitRow {
                method,
                slice: label.to_string(),
                fit_method: fm,
                n_records: corpus.len(),
                n_authors: dist.as_ref().map_or(0, |d| d.n_authors()),
                mean_degree: dist.as_ref().map_or(0.0, |d| d.mean_degree()),
                sd_degree: dist.as_ref().map_or(0.0, |d| d.sd_degree()),
                fit: dist.as_ref().and_then(|d| fit_one(d, fm)),
            });
        }
    }
    Ok(rows)
}

/// Rows for every slice of `plan`, in slice order, then method order.
pub fn slice_sweep(
    corpus: &Corpus,
    plan: SlicePlan,
    methods: &[Method],
    fit_methods: &[FitMethod],
) -> Result<Vec<FitRow>, NetworkError> {
    let Some(years) = corpus.year_range() else {
        return Ok(Vec::new());
    };
    let specs = plan.specs(years);
    let per_slice = specs
        .par_iter()
        .map(|spec| {
            let part = slice(corpus, *spec)?;
            analyze(&part, &spec.label(), methods, fit_methods)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_slice.into_iter().flatten().collect())
}

/// Rows for every random subset; slice labels read `r<repeat>:<size>`.
pub fn random_sweep(
    corpus: &Corpus,
    selection: RandomSelection,
    methods: &[Method],
    fit_methods: &[FitMethod],
) -> Result<Vec<FitRow>, NetworkError> {
    let subsets: Vec<_> = random_subsets(corpus, selection)?.collect();
    let per_subset = subsets
        .par_iter()
        .map(|s| analyze(&s.corpus, &format!("r{}:{}", s.repeat, s.size), methods, fit_methods))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_subset.into_iter().flatten().collect())
}
