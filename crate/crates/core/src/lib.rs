//! Energy-efficient RF-chain selection and hybrid beamforming for mmWave
//! MIMO links.
//!
//! The library models a point-to-point large-array link where every active
//! RF chain costs circuit power: [`channel`] draws clustered multipath
//! realizations, [`power`] prices a configuration, [`dinkelbach`] picks the
//! energy-efficiency-optimal number of active chains by ratio search,
//! [`hbf`] factorizes the resulting digital beamformers into
//! constant-modulus analogue and small digital matrices by greedy pursuit,
//! [`baselines`] provides the exhaustive/digital/analogue comparison
//! strategies, and [`sim`] runs seeded Monte-Carlo sweeps and writes CSV.

pub mod baselines;
pub mod channel;
pub mod config;
pub mod dinkelbach;
pub mod error;
pub mod hbf;
pub mod power;
pub mod rate;
pub mod sim;

pub use error::{Error, Result};
