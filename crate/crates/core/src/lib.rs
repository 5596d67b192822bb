//! Environment-assisted correction of noisy continuous-variable Gaussian
//! channels.
//!
//! A signal mode is mixed with a thermal environment on a beam splitter. Part
//! of the leaked light is measured, and the record is used either to displace
//! the transmitted signal (feedforward) or to accept/reject each shot
//! (heralding). The crate provides closed-form expressions for the resulting
//! gain and added noise, a phase-space Gaussian toolkit that checks them, a
//! seeded Monte Carlo simulator that plays the role of the experiment, and a
//! key-rate layer for CV-QKD.

// `!(x > 0.0)` is the NaN-rejecting form used throughout parameter checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod correction;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod herald;
pub mod montecarlo;
pub mod qkd;

pub use channel::{build_plant, ChannelParams, Detector, Plant, TapConfig};
pub use correction::{FeedforwardPlan, Strategy};
pub use error::{Error, Result};
pub use gaussian::{GaussianState, Quadrature, SymplecticMap};
pub use herald::HeraldWindow;
pub use montecarlo::{Estimate, Simulation, TrajectoryBatch};
