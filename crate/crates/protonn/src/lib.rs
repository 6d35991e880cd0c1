//! Prototype nearest-neighbor classification with gamma-net prototype
//! selection and lossless prototype compression.
//!
//! The crate provides:
//!
//! * [`geom`] — points, labeled datasets, and deterministic Euclidean
//!   nearest-neighbor queries with smaller-index tie-breaking;
//! * [`netting`] — gamma-nets (maximal packings) over finite pools;
//! * [`rules`] — the optinet / protonn / protoknn / knn classifiers,
//!   their fitting procedures, and the margin and pool-size schedules;
//! * [`compress`] — Voronoi neighbor relations (exact via bisector-witness
//!   linear programs, Monte-Carlo, and sample-approximated) and the
//!   simultaneous and iterative prototype removals built on them;
//! * [`synth`] — a radial two-class family with analytic Bayes oracles;
//! * [`harness`] — sweep orchestration, slope fitting, and result files;
//! * [`io`] — the shared CSV dataset format.
//!
//! All randomness is ChaCha8 with documented seed derivation, so every
//! experiment is reproducible bit-for-bit.

pub mod compress;
pub mod error;
pub mod geom;
pub mod harness;
pub mod io;
pub mod netting;
pub mod rules;
mod simplex;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
pub use geom::{distance, k_nearest, nearest, second_nearest, LabeledDataset, Label, Point};
pub use netting::{build_gamma_net, net_size_bound, verify_covering, verify_packing, GammaNet};
pub use rules::{
    fit_knn, fit_optinet, fit_protoknn, fit_protonn, knn_classify, majority_label,
    PrototypeRule, RuleKind, Schedule,
};
