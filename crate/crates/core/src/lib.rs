//! Error exponents of discrete memoryless channels and Monte Carlo
//! concentration experiments for pairwise-independent random code ensembles.
//!
//! * [`channel`]: channels, input distributions, Bhattacharyya distances.
//! * [`exponents`]: `E0`, random-coding, expurgated, sphere-packing and
//!   typical random-coding exponents.
//! * [`typecalc`]: joint distributions and types, brute-force simplex oracle.
//! * [`ensemble`]: codebook sampling, exponent statistics, exact error
//!   probabilities and bounds on tiny codes.
//! * [`refdist`]: Gaussian and min-of-Gaussians reference laws.
//! * [`cli`]: the `explab` command-line front end.
//!
//! Everything is in nats unless a caller asks for bits at the output stage.

pub mod channel;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod exponents;
pub mod format;
pub mod refdist;
pub mod typecalc;

pub use channel::{BhattacharyyaMatrix, Channel, InputDistribution};
pub use ensemble::{EnsembleConfig, EnsembleKind};
pub use error::{Error, Result};
