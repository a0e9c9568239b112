//! Achievable information rates for a finite-memory nonlinear optical fiber
//! channel.
//!
//! The channel adds ASE noise and a nonlinear noise term whose variance grows
//! with the cube of the average input power over a sliding window of
//! `2N + 1` symbols. The crate provides:
//!
//! - [`channel`]: the model, its simulation and conditional densities;
//! - [`bounds`]: closed-form Gaussian-input lower bounds and the GN model;
//! - [`estimator`]: Monte Carlo rates for quantized inputs via a forward
//!   recursion over the channel memory, plus finite-alphabet
//!   auxiliary-channel checks;
//! - [`cgm`]: complex Gaussian mixture inputs and their optimization.
//!
//! All powers are in watts and all rates in bits per symbol.
//!
//! ```
//! use fibercap::bounds::{capacity_lower_bound, gn_capacity, p_star};
//! use fibercap::channel::ChannelParams;
//!
//! let params = ChannelParams::reference(1);
//! let peak = p_star(&params).unwrap();
//! let rate = capacity_lower_bound(peak, &params).unwrap();
//! assert!(rate < gn_capacity(peak, &params).unwrap());
//! ```

pub mod bounds;
pub mod cgm;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod rng;
pub mod stats;
pub mod units;

pub use channel::{ChannelParams, ComplexSequence, SimOutput};
pub use error::{Error, Result};
pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/mixtures.md")]
    mod mixtures {}
}
