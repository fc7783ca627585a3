use std::collections::{BTreeMap, BTreeSet, HashSet};

use proptest::prelude::*;

use namescale::accuracy::{build_truth_clusters, classify_all, error_report};
use namescale::corpus::{authors_per_paper_ccdf, link_truth_ids, normalize_title, read_jsonl, MentionRef, Profile};
use namescale::network::{entity_degrees, CcdfPoints};
use namescale::simulation::{merge_prone_entities, ErrorKind, Perturber};
use namescale::{
    assign_identities, ccdf, degree_distribution, fit_cdf_ls, fit_mle_ks, AuthorMention, Corpus,
    DegreeDistribution, Method, PaperRecord,
};

/// People with the names they publish under; several collide on initials.
const PEOPLE: &[(&str, &[&str])] = &[
    ("t0", &["Charles C. Brown", "Charles Brown", "C. C. Brown"]),
    ("t1", &["Clarke Brown"]),
    ("t2", &["Carl W. Brown", "C. W. Brown"]),
    ("t3", &["Ann Lee", "A. Lee"]),
    ("t4", &["Anne Lee"]),
    ("t5", &["Bo Kim"]),
    ("t6", &["Mary-Jane van der Berg", "M.-J. van der Berg"]),
    ("t7", &["Zoë García", "Zoe Garcia"]),
    ("t8", &["Zack Garcia"]),
    ("t9", &["Ben Kim"]),
];
const TITLES: &[&str] = &["On Graphs", "on graphs!", "Degree Laws", "The Name Problem", "Coauthors", "Scaling"];

/// (person, name variant) bylines over a few years; no person twice on one paper.
fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    let byline = prop::collection::btree_map(0..PEOPLE.len(), 0usize..3, 1..5);
    let paper = (byline, 2000i32..2006, 0..TITLES.len(), any::<bool>());
    prop::collection::vec(paper, 1..14).prop_map(|papers| {
        let records = papers
            .into_iter()
            .enumerate()
            .map(|(i, (byline, year, title, linked))| PaperRecord {
                paper_id: format!("p{i:02}"),
                year,
                title: Some(TITLES[title].to_string()),
                mentions: byline
                    .into_iter()
                    .enumerate()
                    .map(|(slot, (person, variant))| {
                        let (tid, names) = PEOPLE[person];
                        let m = AuthorMention::new(names[variant % names.len()], slot as u32 + 1).with_algo(tid);
                        if linked {
                            m.with_truth(tid)
                        } else {
                            m
                        }
                    })
                    .collect(),
            })
            .collect();
        Corpus::new(records).expect("generated records are valid")
    })
}

fn degree_counts(corpus: &Corpus, method: Method) -> BTreeMap<u32, usize> {
    let a = assign_identities(corpus, method).unwrap();
    degree_distribution(corpus, &a).unwrap().counts().clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn jsonl_round_trip(c in corpus_strategy()) {
        let mut buf = Vec::new();
        c.write_jsonl(&mut buf).unwrap();
        let back = read_jsonl(buf.as_slice()).unwrap();
        prop_assert_eq!(back.records(), c.records());
    }

    #[test]
    fn linking_respects_unique_titles(c in corpus_strategy(), claims in prop::collection::vec((0..PEOPLE.len(), 0..TITLES.len()), 0..12)) {
        let unlinked = Corpus::new(
            c.records().iter().cloned().map(|mut r| {
                for m in &mut r.mentions {
                    m.truth_id = None;
                }
                r
            }).collect(),
        ).unwrap();
        let profiles: Vec<Profile> = claims.iter().map(|&(p, t)| Profile {
            truth_id: PEOPLE[p].0.to_string(),
            name: PEOPLE[p].1[0].to_string(),
            titles: vec![TITLES[t].to_string()],
        }).collect();
        let (linked, summary) = link_truth_ids(&unlinked, &profiles);
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for r in unlinked.records() {
            *seen.entry(normalize_title(r.title.as_deref().unwrap())).or_default() += 1;
        }
        let mut n = 0;
        for r in linked.records() {
            let dup = seen[&normalize_title(r.title.as_deref().unwrap())] > 1;
            for m in &r.mentions {
                if let Some(t) = &m.truth_id {
                    n += 1;
                    prop_assert!(!dup, "linked a duplicated title");
                    // a full-name match only ever links the claimant's own byline
                    prop_assert_eq!(m.algo_id.as_ref(), Some(t));
                }
            }
        }
        prop_assert_eq!(n, summary.linked_mentions);
    }

    #[test]
    fn authors_per_paper_ccdf_is_monotone(c in corpus_strategy()) {
        let points = authors_per_paper_ccdf(&c).unwrap();
        prop_assert_eq!(points[0], (1, 1.0));
        prop_assert!(points.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn keys_coarsen_entity_counts(c in corpus_strategy()) {
        let aini = assign_identities(&c, Method::Aini).unwrap();
        let fini = assign_identities(&c, Method::Fini).unwrap();
        prop_assert!(fini.n_entities() <= aini.n_entities());
        // every AINI entity lies inside one FINI entity
        let mut inside: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for (a, f) in aini.labels().iter().zip(fini.labels()) {
            inside.entry(a.unwrap()).or_default().insert(f.unwrap());
        }
        prop_assert!(inside.values().all(|s| s.len() == 1));
        prop_assert_eq!(&assign_identities(&c, Method::Aini).unwrap(), &aini);
    }

    #[test]
    fn error_ratios_sum_to_one_and_order_by_coarseness(c in corpus_strategy()) {
        prop_assume!(!build_truth_clusters(&c).is_empty());
        let aini = assign_identities(&c, Method::Aini).unwrap();
        let fini = assign_identities(&c, Method::Fini).unwrap();
        let (ra, rf) = (error_report(&c, &aini).unwrap(), error_report(&c, &fini).unwrap());
        prop_assert!((ra.ratio_sum() - 1.0).abs() <= 1e-9);
        prop_assert!((rf.ratio_sum() - 1.0).abs() <= 1e-9);
        let clusters = build_truth_clusters(&c);
        let ka = classify_all(&c, &clusters, &aini).unwrap();
        let kf = classify_all(&c, &clusters, &fini).unwrap();
        for (a, f) in ka.iter().zip(&kf) {
            prop_assert!(!f.is_split() || a.is_split());
            prop_assert!(!a.is_merged() || f.is_merged());
        }
    }

    #[test]
    fn degrees_ignore_record_and_byline_order(c in corpus_strategy(), rotate in 0usize..5) {
        let shuffled = Corpus::new(
            c.records().iter().rev().cloned().map(|mut r| {
                let n = r.mentions.len();
                r.mentions.rotate_left(rotate % n);
                for (i, m) in r.mentions.iter_mut().enumerate() {
                    m.byline_pos = i as u32 + 1;
                }
                r
            }).collect(),
        ).unwrap();
        for method in [Method::Algorithmic, Method::Aini, Method::Fini] {
            prop_assert_eq!(degree_counts(&c, method), degree_counts(&shuffled, method));
        }
    }

    #[test]
    fn ccdf_starts_at_one_and_never_rises(degrees in prop::collection::vec(0u32..50, 1..200)) {
        prop_assume!(degrees.iter().any(|&d| d > 0));
        let dist = DegreeDistribution::from_degrees(degrees);
        let points = ccdf(&dist, false).unwrap();
        prop_assert_eq!(points.points[0].fraction, 1.0);
        prop_assert!(points.points.windows(2).all(|w| w[1].fraction <= w[0].fraction));
        let with_isolates = ccdf(&dist, true).unwrap();
        prop_assert!(with_isolates.points.iter().zip(&points.points).all(|(a, b)| a.fraction <= b.fraction));
    }

    #[test]
    fn least_squares_recovers_exact_lines(slope in -4.0f64..-0.2, c in -2.0f64..2.0, xs in prop::collection::btree_set(1u32..5000, 3..40)) {
        let pairs: Vec<(u32, f64)> = xs.iter().map(|&x| (x, 10f64.powf(c + slope * (x as f64).log10()))).collect();
        let fit = fit_cdf_ls(&CcdfPoints::from_pairs(&pairs), 1).unwrap();
        prop_assert!((fit.slope.unwrap() - slope).abs() <= 1e-9);
        prop_assert!((fit.r_squared.unwrap() - 1.0).abs() <= 1e-9);
        prop_assert!((fit.alpha - (1.0 - slope)).abs() <= 1e-9);
    }

    #[test]
    fn fits_ignore_count_scaling(counts in prop::collection::btree_map(1u32..60, 1usize..30, 6..25), k in 2usize..5) {
        let dist = DegreeDistribution::from_counts(counts.clone());
        let scaled = DegreeDistribution::from_counts(counts.into_iter().map(|(d, n)| (d, n * k)).collect());
        let (p, q) = (ccdf(&dist, false).unwrap(), ccdf(&scaled, false).unwrap());
        prop_assert_eq!(p.pairs(), q.pairs());
        let (a, b) = (fit_cdf_ls(&p, 1).unwrap(), fit_cdf_ls(&q, 1).unwrap());
        prop_assert_eq!(a.alpha, b.alpha);
        prop_assert_eq!(a.r_squared, b.r_squared);
        let (m, n) = (fit_mle_ks(&dist).unwrap(), fit_mle_ks(&scaled).unwrap());
        prop_assert_eq!(m.x_min, n.x_min);
        // the likelihood is flat at its maximum, so α is only resolved to about sqrt(ε)
        prop_assert!((m.alpha - n.alpha).abs() <= 1e-6 * m.alpha);
        prop_assert!((m.ks_distance.unwrap() - n.ks_distance.unwrap()).abs() <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perturbations_move_entity_counts_one_way(c in corpus_strategy(), ratio in 0.0f64..=1.0, seed in any::<u64>()) {
        let merge = Perturber::new(&c, ErrorKind::Merge { target_key: Method::Fini }, Method::Algorithmic).unwrap();
        let split = Perturber::new(&c, ErrorKind::Split, Method::Algorithmic).unwrap();
        let base = merge.baseline().clone();
        let merged = merge.assignment(ratio, seed).unwrap();
        let fragmented = split.assignment(ratio, seed).unwrap();
        prop_assert!(merged.n_entities() <= base.n_entities());
        prop_assert!(fragmented.n_entities() >= base.n_entities());
        prop_assert_eq!(merged.n_covered(), base.n_covered());
        prop_assert_eq!(fragmented.n_covered(), base.n_covered());
        prop_assert_eq!(&merge.assignment(ratio, seed).unwrap(), &merged);
        prop_assert_eq!(merge.corpus(ratio, seed).unwrap().into_records(), merge.corpus(ratio, seed).unwrap().into_records());
    }

    #[test]
    fn aini_prone_entities_are_fini_prone(c in corpus_strategy()) {
        let base = assign_identities(&c, Method::Algorithmic).unwrap();
        let aini = merge_prone_entities(&c, &base, Method::Aini).unwrap();
        let fini = merge_prone_entities(&c, &base, Method::Fini).unwrap();
        prop_assert!(aini.is_subset(&fini));
    }

    #[test]
    fn split_fragments_keep_their_own_coauthors(c in corpus_strategy(), seed in any::<u64>()) {
        let split = Perturber::new(&c, ErrorKind::Split, Method::Algorithmic).unwrap();
        let base = split.baseline().clone();
        let after = split.assignment(1.0, seed).unwrap();
        let (b, a) = (base.labels(), after.labels());
        // fragments map back onto exactly one baseline entity
        let mut back: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for (x, y) in b.iter().zip(a) {
            back.entry(y.unwrap()).or_default().insert(x.unwrap());
        }
        prop_assert!(back.values().all(|s| s.len() == 1));
        // per mention, coauthors seen through baseline identities are unchanged
        for (m, _) in c.mentions() {
            let slots = |labels: &[Option<u32>]| -> BTreeSet<u32> {
                let me = labels[c.flat_index(m)];
                (0..c.records()[m.record].mentions.len())
                    .map(|slot| c.flat_index(MentionRef { record: m.record, slot }))
                    .filter(|&i| labels[i] != me)
                    .map(|i| b[i].unwrap())
                    .collect()
            };
            prop_assert_eq!(slots(a), slots(b));
        }
        // degree of every fragment is bounded by its own paper's byline
        let degrees = entity_degrees(&c, &after).unwrap();
        let sizes: HashSet<usize> = c.records().iter().map(|r| r.mentions.len()).collect();
        let largest = *sizes.iter().max().unwrap() as u32;
        prop_assert!(degrees.iter().flatten().all(|&d| d < largest.max(1)));
    }
}
