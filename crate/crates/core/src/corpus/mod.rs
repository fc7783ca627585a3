//! Bibliographic data model: paper records with ordered author mentions.
//!
//! A [`Corpus`] is validated once on construction and is immutable afterwards,
//! so it can be shared read-only across worker threads. The on-disk format is
//! line-delimited JSON, one paper per line:
//!
//! ```text
//! {"paper_id": "p1", "year": 1991, "title": null,
//!  "mentions": [{"name": "Charles C. Brown", "pos": 1, "algo_id": null, "truth_id": "0000-0001"}]}
//! ```

mod link;
mod synthetic;
mod title;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use link::{link_truth_ids, load_profiles, names_match_full, LinkSummary, Profile};
pub use synthetic::{generate_synthetic, AlgoChannel, CountDist, SyntheticConfig};
pub use title::{fold_ascii, normalize_title, STOP_WORDS};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate paper_id {0:?}")]
    DuplicatePaperId(String),
    #[error("paper {paper_id:?}: {reason}")]
    InvalidRecord { paper_id: String, reason: String },
    #[error("corpus is empty")]
    Empty,
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

/// One author name as printed on a byline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorMention {
    #[serde(rename = "name")]
    pub name_full: String,
    #[serde(rename = "pos")]
    pub byline_pos: u32,
    pub algo_id: Option<String>,
    pub truth_id: Option<String>,
}

impl AuthorMention {
    pub fn new(name: impl Into<String>, pos: u32) -> Self {
        AuthorMention {
            name_full: name.into(),
            byline_pos: pos,
            algo_id: None,
            truth_id: None,
        }
    }

    pub fn with_algo(mut self, id: impl Into<String>) -> Self {
        self.algo_id = Some(id.into());
        self
    }

    pub fn with_truth(mut self, id: impl Into<String>) -> Self {
        self.truth_id = Some(id.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub year: i32,
    pub title: Option<String>,
    pub mentions: Vec<AuthorMention>,
}

impl PaperRecord {
    /// Builds a record whose byline positions follow the order of `names`.
    pub fn from_names(paper_id: &str, year: i32, names: &[&str]) -> Self {
        PaperRecord {
            paper_id: paper_id.to_string(),
            year,
            title: None,
            mentions: names
                .iter()
                .enumerate()
                .map(|(i, n)| AuthorMention::new(*n, i as u32 + 1))
                .collect(),
        }
    }

    pub fn n_authors(&self) -> usize {
        self.mentions.len()
    }
}

/// Identifies one author mention inside a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MentionRef {
    pub record: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub records: usize,
    pub mentions: usize,
    pub distinct_algo_ids: usize,
    pub distinct_truth_ids: usize,
    pub year_min: Option<i32>,
    pub year_max: Option<i32>,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<PaperRecord>,
    index: HashMap<String, usize>,
    offsets: Vec<usize>,
    n_mentions: usize,
    years: Option<(i32, i32)>,
}

impl Corpus {
    /// Validates `records` and builds a corpus. Mentions are reordered by
    /// byline position; positions must then run exactly `1..=len`.
    pub fn new(mut records: Vec<PaperRecord>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for rec in &mut records {
            validate_record(rec)?;
            if !seen.insert(rec.paper_id.clone()) {
                return Err(CorpusError::DuplicatePaperId(rec.paper_id.clone()));
            }
        }
        Ok(Self::from_validated(records))
    }

    /// Records taken from an already validated corpus.
    pub(crate) fn from_validated(records: Vec<PaperRecord>) -> Self {
        let mut index = HashMap::with_capacity(records.len());
        let mut offsets = Vec::with_capacity(records.len());
        let mut n_mentions = 0;
        let mut years: Option<(i32, i32)> = None;
        for (i, rec) in records.iter().enumerate() {
            index.insert(rec.paper_id.clone(), i);
            offsets.push(n_mentions);
            n_mentions += rec.mentions.len();
            years = Some(match years {
                None => (rec.year, rec.year),
                Some((lo, hi)) => (lo.min(rec.year), hi.max(rec.year)),
            });
        }
        Corpus {
            records,
            index,
            offsets,
            n_mentions,
            years,
        }
    }

    pub fn records(&self) -> &[PaperRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<PaperRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_mentions(&self) -> usize {
        self.n_mentions
    }

    pub fn year_range(&self) -> Option<(i32, i32)> {
        self.years
    }

    pub fn record(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.index.get(paper_id).map(|&i| &self.records[i])
    }

    pub fn record_index(&self, paper_id: &str) -> Option<usize> {
        self.index.get(paper_id).copied()
    }

    /// Flat position of a mention in corpus order.
    pub fn flat_index(&self, m: MentionRef) -> usize {
        self.offsets[m.record] + m.slot
    }

    /// Resolves `(paper_id, byline_pos)` to a mention reference.
    pub fn locate(&self, paper_id: &str, pos: u32) -> Option<MentionRef> {
        let record = self.record_index(paper_id)?;
        let n = self.records[record].mentions.len();
        let slot = (pos as usize).checked_sub(1).filter(|&s| s < n)?;
        Some(MentionRef { record, slot })
    }

    pub fn mention(&self, m: MentionRef) -> &AuthorMention {
        &self.records[m.record].mentions[m.slot]
    }

    /// All mentions in corpus order (record order, then byline order).
    pub fn mentions(&self) -> impl Iterator<Item = (MentionRef, &AuthorMention)> + '_ {
        self.records.iter().enumerate().flat_map(|(record, rec)| {
            rec.mentions
                .iter()
                .enumerate()
                .map(move |(slot, m)| (MentionRef { record, slot }, m))
        })
    }

    pub fn stats(&self) -> CorpusStats {
        let mut algo = HashSet::new();
        let mut truth = HashSet::new();
        for (_, m) in self.mentions() {
            if let Some(a) = &m.algo_id {
                algo.insert(a.as_str());
            }
            if let Some(t) = &m.truth_id {
                truth.insert(t.as_str());
            }
        }
        CorpusStats {
            records: self.len(),
            mentions: self.n_mentions,
            distinct_algo_ids: algo.len(),
            distinct_truth_ids: truth.len(),
            year_min: self.years.map(|y| y.0),
            year_max: self.years.map(|y| y.1),
        }
    }

    /// Keeps the records accepted by `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&PaperRecord) -> bool) -> Corpus {
        Corpus::from_validated(self.records.iter().filter(|r| keep(r)).cloned().collect())
    }

    /// Records at the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Corpus {
        Corpus::from_validated(indices.iter().map(|&i| self.records[i].clone()).collect())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for rec in &self.records {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let io_err = |source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        self.write_jsonl(BufWriter::new(file)).map_err(io_err)
    }
}

fn validate_record(rec: &mut PaperRecord) -> Result<(), CorpusError> {
    let bad = |reason: String| CorpusError::InvalidRecord {
        paper_id: rec.paper_id.clone(),
        reason,
    };
    if rec.paper_id.trim().is_empty() {
        return Err(bad("empty paper_id".into()));
    }
    if rec.mentions.is_empty() {
        return Err(bad("no author mentions".into()));
    }
    rec.mentions.sort_by_key(|m| m.byline_pos);
    for (i, m) in rec.mentions.iter().enumerate() {
        if m.name_full.trim().is_empty() {
            return Err(bad(format!("empty author name at position {}", m.byline_pos)));
        }
        if m.byline_pos as usize != i + 1 {
            return Err(bad(format!(
                "byline positions must be 1..={} without gaps or repeats, found {}",
                rec.mentions.len(),
                m.byline_pos
            )));
        }
    }
    Ok(())
}

/// Reads a JSONL corpus. Blank lines are skipped; line numbers in errors are 1-based.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PaperRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Corpus::new(records)
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_jsonl(BufReader::new(file))
}

/// Fraction of papers with at least `x` authors, for every `x` from 1 to the
/// largest byline.
pub fn authors_per_paper_ccdf(corpus: &Corpus) -> Result<Vec<(usize, f64)>, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    let max = corpus.records.iter().map(|r| r.n_authors()).max().unwrap_or(0);
    let mut hist = vec![0usize; max + 1];
    for r in &corpus.records {
        hist[r.n_authors()] += 1;
    }
    let n = corpus.len() as f64;
    let mut at_least = corpus.len();
    let mut out = Vec::with_capacity(max);
    for (x, &count) in hist.iter().enumerate().skip(1) {
        out.push((x, at_least as f64 / n));
        at_least -= count;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Corpus, CorpusError> {
        read_jsonl(text.as_bytes())
    }

    #[test]
    fn minimal_file_loads() {
        let c = parse(
            r#"{"paper_id":"p1","year":1991,"title":null,"mentions":[{"name":"A. Smith","pos":1,"algo_id":null,"truth_id":null},{"name":"B. Jones","pos":2,"algo_id":null,"truth_id":null}]}"#,
        )
        .unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.n_mentions(), 2);
        assert_eq!(c.year_range(), Some((1991, 1991)));
    }

    #[test]
    fn duplicate_paper_id_is_named() {
        let line = r#"{"paper_id":"p1","year":1991,"title":null,"mentions":[{"name":"A","pos":1,"algo_id":null,"truth_id":null}]}"#;
        let err = parse(&format!("{line}\n{line}\n")).unwrap_err();
        assert!(matches!(&err, CorpusError::DuplicatePaperId(id) if id == "p1"));
        assert!(err.to_string().contains("p1"));
    }

    #[test]
    fn byline_gap_is_rejected() {
        let err = parse(r#"{"paper_id":"gap","year":2000,"title":"t","mentions":[{"name":"A","pos":1,"algo_id":null,"truth_id":null},{"name":"B","pos":3,"algo_id":null,"truth_id":null}]}"#).unwrap_err();
        assert!(matches!(&err, CorpusError::InvalidRecord { paper_id, .. } if paper_id == "gap"));
    }

    #[test]
    fn parse_error_reports_line() {
        let good = r#"{"paper_id":"p1","year":1991,"title":null,"mentions":[{"name":"A","pos":1,"algo_id":null,"truth_id":null}]}"#;
        let err = parse(&format!("{good}\n{{not json\n")).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
    }

    #[test]
    fn empty_name_and_empty_byline_rejected() {
        let r = PaperRecord::from_names("p", 2000, &["  "]);
        assert!(Corpus::new(vec![r]).is_err());
        let r = PaperRecord::from_names("q", 2000, &[]);
        assert!(Corpus::new(vec![r]).is_err());
    }

    #[test]
    fn out_of_order_positions_are_sorted() {
        let mut r = PaperRecord::from_names("p", 2000, &["A", "B"]);
        r.mentions.reverse();
        let c = Corpus::new(vec![r]).unwrap();
        assert_eq!(c.records()[0].mentions[0].name_full, "A");
    }

    #[test]
    fn authors_per_paper_two_papers() {
        let c = Corpus::new(vec![
            PaperRecord::from_names("a", 2000, &["A", "B"]),
            PaperRecord::from_names("b", 2000, &["A", "B", "C", "D", "E"]),
        ])
        .unwrap();
        let pts = authors_per_paper_ccdf(&c).unwrap();
        assert_eq!(pts, vec![(1, 1.0), (2, 1.0), (3, 0.5), (4, 0.5), (5, 0.5)]);
    }

    #[test]
    fn authors_per_paper_solo_and_empty() {
        let c = Corpus::new(vec![
            PaperRecord::from_names("a", 2000, &["A"]),
            PaperRecord::from_names("b", 2001, &["B"]),
        ])
        .unwrap();
        assert_eq!(authors_per_paper_ccdf(&c).unwrap(), vec![(1, 1.0)]);
        assert!(matches!(
            authors_per_paper_ccdf(&Corpus::default()),
            Err(CorpusError::Empty)
        ));
    }

    #[test]
    fn locate_and_flat_index() {
        let c = Corpus::new(vec![
            PaperRecord::from_names("a", 2000, &["A", "B"]),
            PaperRecord::from_names("b", 2000, &["C", "D", "E"]),
        ])
        .unwrap();
        let m = c.locate("b", 2).unwrap();
        assert_eq!(c.mention(m).name_full, "D");
        assert_eq!(c.flat_index(m), 3);
        assert!(c.locate("b", 4).is_none());
        assert!(c.locate("b", 0).is_none());
    }
}
