//! Behavior modeling for collaborative mixed-reality sessions.
//!
//! The pipeline: parse or generate interaction logs ([`logmodel`],
//! [`corpusgen`]), extract per-participant feature vectors ([`features`]),
//! cluster them with Gaussian mixtures ([`clustering`]), synthesize new
//! participants and groups from the fitted clusters ([`behaviorsim`]), and
//! quantify how faithful the synthetic data is ([`fidelity`], [`sociograph`],
//! [`taskpredict`]).

pub mod behaviorsim;
pub mod clustering;
pub mod corpusgen;
pub mod error;
pub mod features;
pub mod fidelity;
pub mod logmodel;
pub mod seeding;
pub mod sociograph;
pub mod taskpredict;

pub use error::{Error, Result};
