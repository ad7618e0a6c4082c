//! Bayesian variable selection for Gaussian linear regression under Zellner
//! g-priors.
//!
//! The model space is every subset of `p` candidate columns, each model
//! fitted with an intercept. This crate provides
//!
//! * closed-form g-prior Bayes factors ([`bayesfactor`]) on top of an
//!   incremental least-squares engine ([`linmodel`]),
//! * a Gibbs sampler over inclusion indicators, with a Metropolis-Hastings
//!   step for `g` under the Zellner-Siow prior ([`sampler`]),
//! * visit-frequency (Hansen-Hurwitz) estimators with variance estimates, and
//!   estimators that renormalize Bayes factors over the visited models
//!   ([`estimators`]),
//! * parallel exhaustive enumeration for ground truth at moderate `p` ([`exact`]).

pub mod bayesfactor;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod linmodel;
pub mod logspace;
pub mod sampler;
pub mod synthetic;

pub use bayesfactor::{GPrior, GPriorSpec, LogBayesFactor, ModelPrior};
pub use linmodel::{Dataset, FitState, ModelIndex, Update};
