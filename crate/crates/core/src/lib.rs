//! Screen detection and privacy curation for first-person camera images.
//!
//! - [`imaging`]: raster I/O, preprocessing geometry, capture degradations
//! - [`features`]: color / LBP / HOG histogram features
//! - [`classifier`]: one-vs-rest logistic models, hierarchical and flat composition
//! - [`screentag`]: ScreenTag payloads, QR (v1–v2, level H) codec, overlay, poller, scanner
//! - [`policy`]: curation policy language and evaluation
//! - [`eval`]: metrics, manifests, synthetic data and experiment runner
//! - [`cli`]: the `sa` command-line front end

pub mod classifier;
pub mod cli;
pub mod eval;
pub mod features;
pub(crate) mod geometry;
pub mod imaging;
pub mod policy;
pub mod screentag;
