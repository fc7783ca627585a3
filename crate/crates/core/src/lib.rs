//! Measuring how author-name disambiguation reshapes coauthorship degree
//! distributions.
//!
//! The crate is organised along the analysis pipeline:
//!
//! * [`corpus`]: paper records, JSONL loading, title matching against
//!   researcher profiles and a seeded synthetic generator.
//! * [`disambig`]: initial-based name keys (AINI, FINI) and identity
//!   assignment from algorithmic or ground-truth IDs.
//! * [`accuracy`]: per-author classification into no error, merged, split, or
//!   merged and split.
//! * [`network`]: degree distributions, CCDFs, year slicing, hyper-authorship
//!   filtering and random subsets.
//! * [`fitting`]: least-squares CCDF fits and discrete MLE with KS-selected
//!   `x_min`.
//! * [`simulation`]: injected merge and split errors swept over error ratios.
//! * [`pipeline`]: slice sequences and fit tables shared by the command line.

pub mod accuracy;
pub mod corpus;
pub mod disambig;
pub mod fitting;
pub mod network;
pub mod pipeline;
pub mod rng;
pub mod simulation;

pub use corpus::{load_corpus, AuthorMention, Corpus, CorpusError, PaperRecord};
pub use disambig::{assign_identities, to_aini, to_fini, IdentityAssignment, Method};
pub use fitting::{fit_cdf_ls, fit_mle_ks, FitMethod, FitResult};
pub use network::{ccdf, degree_distribution, DegreeDistribution, HyperPolicy, SliceSpec};
