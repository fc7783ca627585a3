//! Seeded generator of ambiguous synthetic corpora.
//!
//! Authors get a surname drawn from a Zipf-skewed pool and forenames drawn
//! uniformly from a forename pool, so initial-based keys collide at a rate set
//! by the pool sizes and the skew. Papers are filled by shuffling one slot per
//! authored paper and cutting the sequence into bylines: coauthors are picked
//! uniformly at random, with no preferential attachment.

use std::collections::HashSet;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AuthorMention, Corpus, CorpusError, PaperRecord};
use crate::rng::{derive_seed, seeded, Rng as SeededRng};

/// A positive integer distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountDist {
    Fixed { value: u32 },
    Uniform { min: u32, max: u32 },
    /// Geometric on `1, 2, ...` with the given mean (≥ 1).
    Geometric { mean: f64 },
    /// `1 + Poisson(mean - 1)`.
    Poisson { mean: f64 },
}

impl CountDist {
    fn validate(&self, what: &str) -> Result<(), CorpusError> {
        let ok = match *self {
            CountDist::Fixed { value } => value >= 1,
            CountDist::Uniform { min, max } => min >= 1 && min <= max,
            CountDist::Geometric { mean } | CountDist::Poisson { mean } => mean.is_finite() && mean >= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(CorpusError::InvalidConfig(format!("{what}: {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match *self {
            CountDist::Fixed { value } => value,
            CountDist::Uniform { min, max } => rng.gen_range(min..=max),
            CountDist::Geometric { mean } => {
                if mean <= 1.0 {
                    return 1;
                }
                let p = 1.0 / mean;
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                1 + (u.ln() / (1.0 - p).ln()).floor() as u32
            }
            CountDist::Poisson { mean } => 1 + poisson(rng, mean - 1.0),
        }
    }
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u32 {
    // Knuth's method on chunks of at most 20 keeps exp(-lambda) representable
    let mut remaining = lambda;
    let mut total = 0;
    while remaining > 0.0 {
        let chunk = remaining.min(20.0);
        remaining -= chunk;
        let limit = (-chunk).exp();
        let mut prod: f64 = rng.gen();
        while prod > limit {
            total += 1;
            prod *= rng.gen::<f64>();
        }
    }
    total
}

/// How the algorithmic-ID channel relates to the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgoChannel {
    /// `algo_id` mirrors the true author.
    Perfect,
    /// Each author with two or more mentions is, with probability `rate`,
    /// split into two algorithmic IDs by a fair coin per mention.
    Split { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_authors: usize,
    pub surname_pool: usize,
    /// Zipf exponent of surname popularity; 0 is uniform.
    pub surname_skew: f64,
    pub forename_pool: usize,
    pub middle_name_prob: f64,
    /// Probability that a mention prints a variant of its author's name
    /// (middle name dropped, or forename reduced to an initial).
    pub name_variant_prob: f64,
    pub papers_per_author: CountDist,
    pub authors_per_paper: CountDist,
    pub year_start: i32,
    pub year_end: i32,
    pub algo: AlgoChannel,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_authors: 20_000,
            surname_pool: 2_000,
            surname_skew: 1.0,
            forename_pool: 300,
            middle_name_prob: 0.3,
            name_variant_prob: 0.0,
            papers_per_author: CountDist::Geometric { mean: 3.0 },
            authors_per_paper: CountDist::Poisson { mean: 3.5 },
            year_start: 1991,
            year_end: 2010,
            algo: AlgoChannel::Perfect,
            seed: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |m: &str| Err(CorpusError::InvalidConfig(m.to_string()));
        if self.n_authors == 0 {
            return fail("n_authors must be positive");
        }
        if self.surname_pool == 0 || self.forename_pool == 0 {
            return fail("name pools must be non-empty");
        }
        if !(self.surname_skew.is_finite() && self.surname_skew >= 0.0) {
            return fail("surname_skew must be a finite non-negative number");
        }
        for (name, p) in [
            ("middle_name_prob", self.middle_name_prob),
            ("name_variant_prob", self.name_variant_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return fail(&format!("{name} must lie in [0, 1]"));
            }
        }
        if let AlgoChannel::Split { rate } = self.algo {
            if !(0.0..=1.0).contains(&rate) {
                return fail("algo split rate must lie in [0, 1]");
            }
        }
        if self.year_start > self.year_end {
            return fail("year_start after year_end");
        }
        self.papers_per_author.validate("papers_per_author")?;
        self.authors_per_paper.validate("authors_per_paper")
    }
}

const SURNAME_SYLLABLES: &[&str] = &[
    "ka", "li", "wan", "zhu", "mo", "ta", "ne", "ro", "sen", "ha", "pa", "gu", "kim", "chen", "yo",
    "shi", "da", "ber", "ton", "mar", "vel", "os", "ri", "lan", "fen", "qu", "hol", "sa", "ni", "dor",
];
const FORENAME_ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "y", "z",
    "ch", "sh", "th", "st", "br",
];
const FORENAME_RIMES: &[&str] = &[
    "a", "e", "i", "o", "u", "an", "en", "ar", "el", "ia", "ie", "on", "ul", "ay", "is",
];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

fn make_pool(n: usize, rng: &mut SeededRng, mut draw: impl FnMut(&mut SeededRng) -> String) -> Vec<String> {
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        let mut name = draw(rng);
        attempts += 1;
        if attempts > 50 * n {
            // pool larger than the syllable space; make names unique by suffixing
            let mut k = attempts;
            while k > 0 {
                name.push_str(SURNAME_SYLLABLES[k % SURNAME_SYLLABLES.len()]);
                k /= SURNAME_SYLLABLES.len();
            }
        }
        if seen.insert(name.clone()) {
            out.push(name);
        }
    }
    out
}

fn surname_pool(n: usize, rng: &mut SeededRng) -> Vec<String> {
    make_pool(n, rng, |r| {
        let k = r.gen_range(2..=3);
        let s: String = (0..k)
            .map(|_| *SURNAME_SYLLABLES.choose(r).expect("non-empty"))
            .collect();
        capitalize(&s)
    })
}

fn forename_pool(n: usize, rng: &mut SeededRng) -> Vec<String> {
    make_pool(n, rng, |r| {
        let k = r.gen_range(2..=3);
        let s: String = (0..k)
            .map(|_| {
                format!(
                    "{}{}",
                    FORENAME_ONSETS.choose(r).expect("non-empty"),
                    FORENAME_RIMES.choose(r).expect("non-empty")
                )
            })
            .collect();
        capitalize(&s)
    })
}

struct Person {
    forename: String,
    middle: Option<String>,
    surname: String,
}

impl Person {
    fn full(&self) -> String {
        match &self.middle {
            Some(m) => format!("{} {} {}", self.forename, m, self.surname),
            None => format!("{} {}", self.forename, self.surname),
        }
    }

    fn variant(&self) -> String {
        match &self.middle {
            Some(_) => format!("{} {}", self.forename, self.surname),
            None => format!("{}. {}", &self.forename[..1], self.surname),
        }
    }
}

/// Generates a corpus; identical configs give identical corpora.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Corpus, CorpusError> {
    config.validate()?;
    let mut names_rng = seeded(derive_seed(config.seed, 1));
    let surnames = surname_pool(config.surname_pool, &mut names_rng);
    let forenames = forename_pool(config.forename_pool, &mut names_rng);
    let weights: Vec<f64> = (1..=surnames.len())
        .map(|r| (r as f64).powf(-config.surname_skew))
        .collect();
    let surname_dist = WeightedIndex::new(&weights).expect("positive weights");

    let mut people_rng = seeded(derive_seed(config.seed, 2));
    let people: Vec<Person> = (0..config.n_authors)
        .map(|_| {
            let surname = surnames[surname_dist.sample(&mut people_rng)].clone();
            let forename = forenames.choose(&mut people_rng).expect("non-empty").clone();
            let middle = (people_rng.gen::<f64>() < config.middle_name_prob)
                .then(|| forenames.choose(&mut people_rng).expect("non-empty").clone());
            Person {
                forename,
                middle,
                surname,
            }
        })
        .collect();

    let mut slot_rng = seeded(derive_seed(config.seed, 3));
    let mut slots: Vec<usize> = Vec::new();
    for a in 0..people.len() {
        let k = config.papers_per_author.sample(&mut slot_rng);
        slots.extend(std::iter::repeat(a).take(k as usize));
    }
    slots.shuffle(&mut slot_rng);

    let mut bylines: Vec<Vec<usize>> = Vec::new();
    let mut cursor = 0;
    while cursor < slots.len() {
        let size = config.authors_per_paper.sample(&mut slot_rng) as usize;
        let end = (cursor + size).min(slots.len());
        let mut byline: Vec<usize> = Vec::with_capacity(end - cursor);
        for &a in &slots[cursor..end] {
            if !byline.contains(&a) {
                byline.push(a);
            }
        }
        bylines.push(byline);
        cursor = end;
    }

    let mut mention_rng = seeded(derive_seed(config.seed, 4));
    let mut mentions_of: Vec<usize> = vec![0; people.len()];
    for b in &bylines {
        for &a in b {
            mentions_of[a] += 1;
        }
    }
    let split_author: Vec<bool> = match config.algo {
        AlgoChannel::Perfect => vec![false; people.len()],
        AlgoChannel::Split { rate } => mentions_of
            .iter()
            .map(|&n| n >= 2 && mention_rng.gen::<f64>() < rate)
            .collect(),
    };

    let n_years = (config.year_end - config.year_start) as u32 + 1;
    let width = (bylines.len().max(1) as f64).log10().floor() as usize + 1;
    let records = bylines
        .iter()
        .enumerate()
        .map(|(i, byline)| {
            let year = config.year_start + mention_rng.gen_range(0..n_years) as i32;
            let mentions = byline
                .iter()
                .enumerate()
                .map(|(slot, &a)| {
                    let person = &people[a];
                    let name = if mention_rng.gen::<f64>() < config.name_variant_prob {
                        person.variant()
                    } else {
                        person.full()
                    };
                    let algo = if split_author[a] && mention_rng.gen::<bool>() {
                        format!("A{a}b")
                    } else {
                        format!("A{a}")
                    };
                    AuthorMention {
                        name_full: name,
                        byline_pos: slot as u32 + 1,
                        algo_id: Some(algo),
                        truth_id: Some(format!("T{a}")),
                    }
                })
                .collect();
            PaperRecord {
                paper_id: format!("P{i:0width$}"),
                year,
                title: Some(format!("Synthetic record {i}")),
                mentions,
            }
        })
        .collect();
    Ok(Corpus::from_validated(records))
}
