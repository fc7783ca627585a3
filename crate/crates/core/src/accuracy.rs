//! Cluster-level error taxonomy for a disambiguation result.
//!
//! Only truth-linked mentions take part: the test clusters of an assignment
//! are its entities restricted to those mentions. A truth cluster is
//! `Split` when its mentions land in two or more test clusters, `Merged` when
//! one of those test clusters also holds a mention of another truth cluster,
//! `MergedAndSplit` when both hold, and `NoError` otherwise.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, MentionRef};
use crate::disambig::IdentityAssignment;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AccuracyError {
    #[error("truth-linked mention {paper_id}#{pos} is not covered by the {method} assignment")]
    Uncovered {
        paper_id: String,
        pos: u32,
        method: crate::disambig::Method,
    },
    #[error("corpus has no truth-linked mentions")]
    NoTruthClusters,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthCluster {
    pub truth_id: String,
    pub instances: Vec<MentionRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ErrorKind {
    NoError,
    Merged,
    Split,
    MergedAndSplit,
}

impl ErrorKind {
    pub fn from_flags(merged: bool, split: bool) -> Self {
        match (merged, split) {
            (false, false) => ErrorKind::NoError,
            (true, false) => ErrorKind::Merged,
            (false, true) => ErrorKind::Split,
            (true, true) => ErrorKind::MergedAndSplit,
        }
    }

    pub fn is_merged(self) -> bool {
        matches!(self, ErrorKind::Merged | ErrorKind::MergedAndSplit)
    }

    pub fn is_split(self) -> bool {
        matches!(self, ErrorKind::Split | ErrorKind::MergedAndSplit)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::NoError => "no_error",
            ErrorKind::Merged => "merged",
            ErrorKind::Split => "split",
            ErrorKind::MergedAndSplit => "merged_and_split",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    pub n_clusters: usize,
    pub ratio_no_error: f64,
    pub ratio_merged: f64,
    pub ratio_split: f64,
    pub ratio_merged_and_split: f64,
}

impl ErrorReport {
    pub fn from_counts(no_error: usize, merged: usize, split: usize, both: usize) -> Self {
        let n = no_error + merged + split + both;
        let r = |c: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
        ErrorReport {
            n_clusters: n,
            ratio_no_error: r(no_error),
            ratio_merged: r(merged),
            ratio_split: r(split),
            ratio_merged_and_split: r(both),
        }
    }

    /// Share of clusters with any merging (`Merged` or `MergedAndSplit`).
    pub fn merged_involved(&self) -> f64 {
        self.ratio_merged + self.ratio_merged_and_split
    }

    /// Share of clusters with any splitting (`Split` or `MergedAndSplit`).
    pub fn split_involved(&self) -> f64 {
        self.ratio_split + self.ratio_merged_and_split
    }

    pub fn ratio_sum(&self) -> f64 {
        self.ratio_no_error + self.ratio_merged + self.ratio_split + self.ratio_merged_and_split
    }
}

/// One cluster per distinct truth ID, ordered by truth ID.
pub fn build_truth_clusters(corpus: &Corpus) -> Vec<TruthCluster> {
    let mut groups: BTreeMap<&str, Vec<MentionRef>> = BTreeMap::new();
    for (m, mention) in corpus.mentions() {
        if let Some(t) = &mention.truth_id {
            groups.entry(t).or_default().push(m);
        }
    }
    groups
        .into_iter()
        .map(|(t, instances)| TruthCluster {
            truth_id: t.to_string(),
            instances,
        })
        .collect()
}

/// Test-cluster view of an assignment restricted to truth-linked mentions.
pub struct TestClusters<'a> {
    corpus: &'a Corpus,
    assignment: &'a IdentityAssignment,
    /// entity → truth clusters (by index) with a mention in it
    members: HashMap<u32, HashSet<usize>>,
}

impl<'a> TestClusters<'a> {
    pub fn new(
        corpus: &'a Corpus,
        assignment: &'a IdentityAssignment,
        clusters: &[TruthCluster],
    ) -> Result<Self, AccuracyError> {
        let mut members: HashMap<u32, HashSet<usize>> = HashMap::new();
        for (ci, c) in clusters.iter().enumerate() {
            for &m in &c.instances {
                let label = label_of(corpus, assignment, m)?;
                members.entry(label).or_default().insert(ci);
            }
        }
        Ok(TestClusters {
            corpus,
            assignment,
            members,
        })
    }

    /// Classifies `clusters[index]`.
    pub fn classify(&self, clusters: &[TruthCluster], index: usize) -> Result<ErrorKind, AccuracyError> {
        let mut labels = HashSet::new();
        for &m in &clusters[index].instances {
            labels.insert(label_of(self.corpus, self.assignment, m)?);
        }
        let split = labels.len() >= 2;
        let merged = labels
            .iter()
            .any(|l| self.members.get(l).is_some_and(|s| s.iter().any(|&c| c != index)));
        Ok(ErrorKind::from_flags(merged, split))
    }
}

fn label_of(corpus: &Corpus, assignment: &IdentityAssignment, m: MentionRef) -> Result<u32, AccuracyError> {
    assignment.label(corpus, m).ok_or_else(|| {
        let rec = &corpus.records()[m.record];
        AccuracyError::Uncovered {
            paper_id: rec.paper_id.clone(),
            pos: rec.mentions[m.slot].byline_pos,
            method: assignment.method(),
        }
    })
}

/// Classifies one truth cluster against `assignment`, with the other truth
/// clusters of the corpus as the evaluation universe.
pub fn classify_cluster(
    corpus: &Corpus,
    clusters: &[TruthCluster],
    index: usize,
    assignment: &IdentityAssignment,
) -> Result<ErrorKind, AccuracyError> {
    TestClusters::new(corpus, assignment, clusters)?.classify(clusters, index)
}

/// Classification of every truth cluster, in cluster order.
pub fn classify_all(
    corpus: &Corpus,
    clusters: &[TruthCluster],
    assignment: &IdentityAssignment,
) -> Result<Vec<ErrorKind>, AccuracyError> {
    let tc = TestClusters::new(corpus, assignment, clusters)?;
    (0..clusters.len()).map(|i| tc.classify(clusters, i)).collect()
}

pub fn error_report(corpus: &Corpus, assignment: &IdentityAssignment) -> Result<ErrorReport, AccuracyError> {
    let clusters = build_truth_clusters(corpus);
    if clusters.is_empty() {
        return Err(AccuracyError::NoTruthClusters);
    }
    let kinds = classify_all(corpus, &clusters, assignment)?;
    let count = |k: ErrorKind| kinds.iter().filter(|&&x| x == k).count();
    Ok(ErrorReport::from_counts(
        count(ErrorKind::NoError),
        count(ErrorKind::Merged),
        count(ErrorKind::Split),
        count(ErrorKind::MergedAndSplit),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AuthorMention, PaperRecord};
    use crate::disambig::{assign_identities, Method};

    /// Corpus with one mention per paper; `truth[i]` and `algo[i]` label mention i.
    fn universe(truth: &[&str], algo: &[&str]) -> Corpus {
        let records = truth
            .iter()
            .zip(algo)
            .enumerate()
            .map(|(i, (t, a))| PaperRecord {
                paper_id: format!("p{i}"),
                year: 2000,
                title: None,
                mentions: vec![AuthorMention::new("X Y", 1).with_truth(*t).with_algo(*a)],
            })
            .collect();
        Corpus::new(records).unwrap()
    }

    fn kinds(truth: &[&str], algo: &[&str]) -> Vec<(String, ErrorKind)> {
        let c = universe(truth, algo);
        let a = assign_identities(&c, Method::Algorithmic).unwrap();
        let clusters = build_truth_clusters(&c);
        let k = classify_all(&c, &clusters, &a).unwrap();
        clusters.into_iter().map(|c| c.truth_id).zip(k).collect()
    }

    #[test]
    fn four_categories() {
        // i1,i2 belong to t1; j1 to t2
        assert_eq!(kinds(&["t1", "t1"], &["a", "a"])[0].1, ErrorKind::NoError);
        assert_eq!(kinds(&["t1", "t1", "t2"], &["a", "a", "a"])[0].1, ErrorKind::Merged);
        assert_eq!(kinds(&["t1", "t1"], &["a", "b"])[0].1, ErrorKind::Split);
        assert_eq!(
            kinds(&["t1", "t1", "t2"], &["a", "b", "a"])[0].1,
            ErrorKind::MergedAndSplit
        );
    }

    #[test]
    fn singleton_is_no_error() {
        assert_eq!(kinds(&["t1"], &["a"])[0].1, ErrorKind::NoError);
    }

    #[test]
    fn cluster_sizes() {
        let c = universe(&["t1", "t1", "t2", "t1"], &["a", "b", "c", "d"]);
        let sizes: Vec<usize> = build_truth_clusters(&c).iter().map(|c| c.instances.len()).collect();
        assert_eq!(sizes, vec![3, 1]);
        let none = Corpus::new(vec![PaperRecord::from_names("p", 2000, &["A"])]).unwrap();
        assert!(build_truth_clusters(&none).is_empty());
    }

    #[test]
    fn perfect_assignment_report() {
        let c = universe(&["t1", "t1", "t2"], &["a", "a", "b"]);
        let truth = assign_identities(&c, Method::Truth).unwrap();
        let r = error_report(&c, &truth).unwrap();
        assert_eq!(r.ratio_no_error, 1.0);
        assert_eq!(r.n_clusters, 2);
    }

    #[test]
    fn unlinked_mentions_do_not_count_as_merging() {
        let c = Corpus::new(vec![
            PaperRecord {
                paper_id: "p1".into(),
                year: 2000,
                title: None,
                mentions: vec![AuthorMention::new("Charles Brown", 1).with_truth("t1")],
            },
            PaperRecord::from_names("p2", 2000, &["Carl Brown"]),
        ])
        .unwrap();
        let fini = assign_identities(&c, Method::Fini).unwrap();
        assert_eq!(error_report(&c, &fini).unwrap().ratio_no_error, 1.0);
    }

    #[test]
    fn uncovered_mention_and_empty_truth_are_errors() {
        let c = Corpus::new(vec![PaperRecord {
            paper_id: "p1".into(),
            year: 2000,
            title: None,
            mentions: vec![
                AuthorMention::new("A B", 1).with_truth("t1").with_algo("x"),
                AuthorMention::new("C D", 2).with_truth("t2"),
            ],
        }])
        .unwrap();
        let algo = assign_identities(&c, Method::Algorithmic).unwrap();
        assert!(matches!(error_report(&c, &algo), Err(AccuracyError::Uncovered { pos: 2, .. })));

        let bare = Corpus::new(vec![PaperRecord::from_names("p", 2000, &["A"])]).unwrap();
        let aini = assign_identities(&bare, Method::Aini).unwrap();
        assert_eq!(error_report(&bare, &aini), Err(AccuracyError::NoTruthClusters));
    }
}
