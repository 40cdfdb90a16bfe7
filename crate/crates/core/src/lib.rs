//! Multiple testing procedures valid under arbitrary dependence between
//! p-values, and a Dirichlet-process sensitivity analysis over the space of
//! step-up procedures.
//!
//! * [`pvalue`]: validated p-value batches, CSV ingestion, order statistics
//! * [`classic`]: Bonferroni, weighted Bonferroni, Sidak, Holm, BH, BY
//! * [`dp`]: the DP prior on rank-bin measures and the shapes it induces
//! * [`sensitivity`]: prior-predictive discovery counts and per-p-value
//!   significance probabilities
//! * [`posterior`]: Gibbs sampler for the DP mass
//! * [`simulation`]: correlated p-value generator and FDR/FWER estimates
//! * [`combine`]: Tippett combination
//! * [`report`], [`cli`]: file formats and the `mtp` command

pub mod classic;
pub mod cli;
pub mod combine;
pub mod dp;
pub mod error;
pub mod posterior;
pub mod pvalue;
pub mod report;
pub mod rng;
pub mod sensitivity;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
pub use pvalue::{load_pvalues, order_statistics, PValueSet, SortedPValues};
