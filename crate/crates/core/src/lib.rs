//! Structure-based virtual screening toolkit.
//!
//! Molecules and binding pockets are atom graphs ([`molgraph`]). They can be
//! fingerprinted with a fixed hashing scheme ([`ecfp`]) or a learnable
//! graph convolution ([`neural`]), scored pairwise by a dual-tower model
//! ([`model`]) trained against randomly paired negatives ([`train`]), and
//! evaluated per target with ROC AUC ([`metrics`]).

pub mod activation;
pub mod ecfp;
pub mod experiment;
pub mod gradcheck;
pub mod ingest;
pub mod linalg;
pub mod logreg;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod molgraph;
pub mod negatives;
pub mod neural;
pub mod optim;
pub mod par;
pub mod params;
pub mod synth;
pub mod train;
