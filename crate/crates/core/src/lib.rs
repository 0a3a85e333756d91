//! Near-field line-of-sight MIMO between two coaxial disk apertures.
//!
//! The crate samples both apertures at (by default) half-wavelength pitch,
//! builds the Green's-function channel matrix, and compares the capacity of
//! several precoders: the channel's own right singular vectors, unfocused
//! and focused OAM modes, and radial / angular / polar Walsh functions.
//!
//! Lengths are expressed in wavelengths throughout.

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod modes;

pub use capacity::{capacity, epa, link_budget, waterfill, LinkBudget, PowerAllocation};
pub use channel::{build_channel, channel_svd, green, ChannelMatrix, ChannelSvd, Point3};
pub use error::{Error, Result};
pub use experiment::{rayleigh_distance, run_sweep, Scheme, SweepConfig, SweepRecord, SweepResult};
pub use geometry::{point_count, sample_disk, Aperture, SamplePoint};
pub use modes::{
    build_mode_precoder, build_svd_precoder, gram_orthogonality, ModeFamily, ModeSpec, Precoder,
};
