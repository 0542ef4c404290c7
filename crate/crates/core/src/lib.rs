//! Precision–recall curves between two finite sample sets, estimated through
//! families of binary classifiers.
//!
//! Given samples `X ~ P` (real) and `Y ~ Q` (generated), a PR curve is the set
//! of pairs `(alpha_l, beta_l)` for `l` in `[0, +inf]` where
//! `alpha_l = min_f { l * fpr(f) + fnr(f) }` and `beta_l = alpha_l / l`.
//! This crate restricts `f` to one-parameter families built from nearest
//! neighbor counts or kernel counts, and minimizes the empirical risk exactly
//! over each family with a sorted threshold sweep.
//!
//! The crate is `no_std` (it needs `alloc`). The `std` feature enables a
//! runtime-detected AVX2/FMA distance kernel on x86-64, and the default
//! `parallel` feature (which implies `std`) spreads the per-query neighbor
//! scan over a rayon pool; results do not depend on the number of threads.
//!
//! Module map:
//!
//! * [`model`]: sample sets, splits, λ-grids, curves, RNG streams
//! * [`neighbors`]: brute-force distances, kNN radii and ball counts
//! * [`scores`]: per-test-point scores for the kNN, KDE, iPR and Cov families
//! * [`estimator`]: ERM sweep, Pareto cleanup, ensemble statistics
//! * [`extremes`]: the published scalar extremes (iPR, Cov, EAS, PRC, PPR)
//! * [`density`]: Gaussian / GMM models and the Monte-Carlo ground truth
//! * [`analysis`]: envelopes, AuC, F-scores, PR-median, PR@ε, IoU
//! * [`linalg`]: covariance fitting, Jacobi eigensolver, Cholesky, PCA
//! * [`synthetic`]: the shifted-Gaussian and four-mode GMM toy pairs
//! * [`pipeline`]: split → score → sweep in one call

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod analysis;
pub mod density;
pub mod error;
pub mod estimator;
pub mod extremes;
pub mod linalg;
pub mod model;
pub mod neighbors;
pub mod pipeline;
pub mod scores;
pub mod synthetic;

mod math;
mod par;

pub use error::{Error, Result};
pub use model::{
    make_lambda_grid, split_samples, CurveMeta, LambdaGrid, PrCurve, PrPoint, RngStream, SampleSet, Split, SplitSpec,
};
pub use scores::{FamilyConfig, KRule, Method, SigmaRule};
