//! Photon-stream Monte Carlo and the estimators applied to it.

mod detector;
mod fringe;
mod histogram;
mod jumps;
mod seed;
mod stream;

pub use detector::{apply_detector, hbt_split, DetectorModel};
pub use fringe::{visibility_from_fringe, FringeFit};
pub use histogram::{g2_histogram, CorrelationHistogram};
pub use jumps::{simulate_segments, simulate_stream};
pub use seed::derive_seed;
pub use stream::PhotonStream;
