//! Attaching ground-truth author IDs to mentions by title matching.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_title, Corpus, CorpusError};
use crate::disambig::ParsedName;

/// A researcher profile listing the titles its owner has claimed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub truth_id: String,
    pub name: String,
    pub titles: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LinkSummary {
    pub linked_mentions: usize,
    /// Corpus titles excluded because their normalized form is not unique.
    pub duplicate_titles: usize,
    /// Mentions that matched more than one profile and were left unlinked.
    pub ambiguous_mentions: usize,
    /// Mentions that already carried a different truth ID.
    pub conflicting_mentions: usize,
    /// Profiles that linked no mention at all.
    pub unmatched_profiles: usize,
}

/// Full-name match between a byline name and a profile owner's name: equal
/// surnames (case- and diacritic-insensitive), and at least one forename of
/// the byline written in full that also appears among the owner's forenames.
pub fn names_match_full(byline: &str, owner: &str) -> bool {
    let (Ok(b), Ok(o)) = (ParsedName::parse(byline), ParsedName::parse(owner)) else {
        return false;
    };
    if !b.surname.eq_ignore_ascii_case(&o.surname) {
        return false;
    }
    let owner_words: HashSet<String> = o.full_forenames().map(str::to_ascii_lowercase).collect();
    let matched = b
        .full_forenames()
        .any(|w| owner_words.contains(&w.to_ascii_lowercase()));
    matched
}

/// Assigns profile truth IDs to mentions on papers whose normalized title is
/// unique in the corpus and listed in the profile, when the mention's name
/// matches the owner's in full-name form.
pub fn link_truth_ids(corpus: &Corpus, profiles: &[Profile]) -> (Corpus, LinkSummary) {
    let mut summary = LinkSummary::default();

    let normalized: Vec<String> = corpus
        .records()
        .iter()
        .map(|r| r.title.as_deref().map(normalize_title).unwrap_or_default())
        .collect();
    let mut title_count: HashMap<&str, usize> = HashMap::new();
    for t in normalized.iter().filter(|t| !t.is_empty()) {
        *title_count.entry(t).or_default() += 1;
    }
    summary.duplicate_titles = title_count.values().filter(|&&c| c > 1).count();

    let mut claims: HashMap<String, Vec<usize>> = HashMap::new();
    for (pi, p) in profiles.iter().enumerate() {
        let mut own = HashSet::new();
        for t in &p.titles {
            let n = normalize_title(t);
            if !n.is_empty() && own.insert(n.clone()) {
                claims.entry(n).or_default().push(pi);
            }
        }
    }

    let mut records = corpus.records().to_vec();
    let mut profile_used = vec![false; profiles.len()];
    for (rec, norm) in records.iter_mut().zip(&normalized) {
        if norm.is_empty() || title_count.get(norm.as_str()) != Some(&1) {
            continue;
        }
        let Some(claimants) = claims.get(norm) else {
            continue;
        };
        // per mention: distinct profiles whose owner name matches
        let mut hits: Vec<Vec<usize>> = vec![Vec::new(); rec.mentions.len()];
        // per profile: mentions it matches on this paper
        let mut per_profile: HashMap<usize, usize> = HashMap::new();
        for &pi in claimants {
            for (slot, m) in rec.mentions.iter().enumerate() {
                if names_match_full(&m.name_full, &profiles[pi].name) {
                    hits[slot].push(pi);
                    *per_profile.entry(pi).or_default() += 1;
                }
            }
        }
        for (slot, h) in hits.iter().enumerate() {
            let distinct: HashSet<&str> = h.iter().map(|&pi| profiles[pi].truth_id.as_str()).collect();
            if distinct.is_empty() {
                continue;
            }
            // an owner matching two bylines on one paper is as ambiguous as two owners on one byline
            if distinct.len() > 1 || h.iter().any(|pi| per_profile[pi] > 1) {
                summary.ambiguous_mentions += 1;
                continue;
            }
            let pi = h[0];
            let tid = &profiles[pi].truth_id;
            let mention = &mut rec.mentions[slot];
            match &mention.truth_id {
                Some(existing) if existing != tid => summary.conflicting_mentions += 1,
                Some(_) => profile_used[pi] = true,
                None => {
                    mention.truth_id = Some(tid.clone());
                    summary.linked_mentions += 1;
                    for &p in h {
                        profile_used[p] = true;
                    }
                }
            }
        }
    }
    summary.unmatched_profiles = profile_used.iter().filter(|u| !**u).count();
    (Corpus::from_validated(records), summary)
}

pub fn load_profiles(path: &Path) -> Result<Vec<Profile>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AuthorMention, PaperRecord};

    fn paper(id: &str, title: &str, names: &[&str]) -> PaperRecord {
        let mut r = PaperRecord::from_names(id, 2010, names);
        r.title = Some(title.into());
        r
    }

    fn profile(id: &str, name: &str, titles: &[&str]) -> Profile {
        Profile {
            truth_id: id.into(),
            name: name.into(),
            titles: titles.iter().map(|t| t.to_string()).collect(),
        }
    }

    #[test]
    fn full_name_rule() {
        assert!(names_match_full("Charles C. Brown", "Charles Brown"));
        assert!(names_match_full("Brown, Charles", "charles brown"));
        assert!(!names_match_full("C. C. Brown", "Charles Brown"));
        assert!(!names_match_full("Charles Brown", "Charles Browne"));
        assert!(!names_match_full("Clarke Brown", "Charles Brown"));
    }

    #[test]
    fn unique_title_and_full_name_links_one_mention() {
        let c = Corpus::new(vec![paper("p1", "Networks of Science", &["Charles C. Brown", "Ann Lee"])]).unwrap();
        let (linked, s) = link_truth_ids(&c, &[profile("o1", "Charles Brown", &["networks of science."])]);
        assert_eq!(linked.records()[0].mentions[0].truth_id.as_deref(), Some("o1"));
        assert_eq!(linked.records()[0].mentions[1].truth_id, None);
        assert_eq!(s.linked_mentions, 1);
        assert_eq!(s.unmatched_profiles, 0);
    }

    #[test]
    fn duplicate_corpus_title_never_links() {
        let c = Corpus::new(vec![
            paper("p1", "The Same Title", &["Charles Brown"]),
            paper("p2", "Same title!", &["Dana White"]),
        ])
        .unwrap();
        let (linked, s) = link_truth_ids(&c, &[profile("o1", "Charles Brown", &["Same Title"])]);
        assert!(linked.mentions().all(|(_, m)| m.truth_id.is_none()));
        assert_eq!(s.duplicate_titles, 1);
        assert_eq!(s.unmatched_profiles, 1);
    }

    #[test]
    fn initialized_byline_is_not_linked() {
        let full = Corpus::new(vec![paper("p1", "Unique Paper", &["Charles Brown"])]).unwrap();
        let init = Corpus::new(vec![paper("p1", "Unique Paper", &["C. Brown"])]).unwrap();
        let profiles = [profile("o1", "Charles Brown", &["Unique paper"])];
        assert_eq!(link_truth_ids(&full, &profiles).1.linked_mentions, 1);
        assert_eq!(link_truth_ids(&init, &profiles).1.linked_mentions, 0);
    }

    #[test]
    fn two_profiles_same_owner_name_are_ambiguous() {
        let c = Corpus::new(vec![paper("p1", "Shared Work", &["Charles Brown", "Ann Lee"])]).unwrap();
        let profiles = [
            profile("o1", "Charles Brown", &["Shared Work"]),
            profile("o2", "Charles X. Brown", &["Shared Work"]),
            profile("o3", "Ann Lee", &["Shared Work"]),
        ];
        let (linked, s) = link_truth_ids(&c, &profiles);
        let r = &linked.records()[0];
        assert_eq!(r.mentions[0].truth_id, None);
        assert_eq!(r.mentions[1].truth_id.as_deref(), Some("o3"));
        assert_eq!(s.ambiguous_mentions, 1);
    }

    #[test]
    fn existing_truth_ids_are_kept() {
        let mut r = paper("p1", "Kept", &["Charles Brown"]);
        r.mentions[0] = AuthorMention::new("Charles Brown", 1).with_truth("x");
        let c = Corpus::new(vec![r]).unwrap();
        let (linked, s) = link_truth_ids(&c, &[profile("o1", "Charles Brown", &["Kept"])]);
        assert_eq!(linked.records()[0].mentions[0].truth_id.as_deref(), Some("x"));
        assert_eq!(s.conflicting_mentions, 1);
    }
}
