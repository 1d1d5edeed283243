//! Key-leakage-storage rate regions for secret-key agreement from a hidden
//! identifier source measured through a broadcast channel, plus a concrete
//! random-binning simulator for the achievability scheme.
//!
//! The crate is organized as:
//!
//! - [`info`]: finite-alphabet distributions, channels, entropy and mutual
//!   information.
//! - [`model`]: the source/broadcast-channel model with its derived views and
//!   channel-class tests (physically degraded, less noisy,
//!   semi-deterministic).
//! - [`region`]: achievable (secret-key, privacy-leakage, storage) tuples for
//!   the generated-secret and chosen-secret variants, boundary sweeps, Pareto
//!   filtering, and curve comparison.
//! - [`osrb`]: three-index random binning with Slepian-Wolf decoding and
//!   one-time-pad key embedding, evaluated exactly or by Monte Carlo.
//! - [`rng`]: the counter-based PRNG that makes every experiment reproducible
//!   from its seed.
//!
//! ```
//! use kls::info::{bsc, ProbVector};
//! use kls::model::SourceBcModel;
//! use kls::region::{rate_tuple_gs, rate_tuple_cs};
//!
//! // Uniform binary source measured through BSC(0.05) at the encoder and
//! // BSC(0.15) at the decoder; aux channel BSC(0.1).
//! let model = SourceBcModel::from_separate_measurements(
//!     ProbVector::uniform(2),
//!     &bsc(0.05)?,
//!     &bsc(0.15)?,
//! )?;
//! let aux = bsc(0.1)?;
//! let (gs, mi) = rate_tuple_gs(&model, &aux)?;
//! let cs = rate_tuple_cs(&model, &aux)?;
//! assert!(gs.r_s > 0.0);
//! // The chosen-secret variant stores the key on top of the helper data.
//! assert!((cs.r_w - gs.r_w - gs.r_s).abs() < 1e-9);
//! assert!((gs.r_s - mi.mi_uy).abs() < 1e-12);
//! # Ok::<(), kls::Error>(())
//! ```

// Multi-index loops over probability tables mirror the summation formulas;
// iterator rewrites obscure which axis is which.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod info;
pub mod model;
pub mod osrb;
pub mod region;
pub mod rng;

pub use error::{Error, Result};
pub use info::{Channel, ProbVector};
pub use model::{ClassificationReport, SourceBcModel};
pub use osrb::{BinningCode, SimReport};
pub use region::{RateTuple, RegionBoundary};
