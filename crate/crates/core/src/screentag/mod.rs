//! ScreenTag: a QR marker advertising which monitored applications are
//! currently on screen, with an encoder, overlay, poller and photo scanner.

pub mod gf256;
pub mod payload;
pub mod poll;
pub mod qr;
pub mod render;
pub mod rs;
pub mod scan;

use thiserror::Error;

pub use payload::{
    payload_decode, payload_encode, payload_len, AppRegistry, DecodedPayload, PayloadError,
    MAX_APPS,
};
pub use poll::{
    spawn_poller, Clock, FileStateProvider, PollError, Poller, ScriptedProvider, SimulatedClock,
    Snapshot, StateProvider, SystemClock,
};
pub use qr::{qr_decode_matrix, qr_encode, qr_encode_min_version, QrError, QrMatrix};
pub use render::{overlay, render_tag, Corner, OverlayPlacement, DEFAULT_QUIET_ZONE};
pub use rs::{rs_decode, rs_encode, RsError};
pub use scan::{scan, scan_qr, ScanError, ScanResult};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TagError {
    #[error("tag of {size}px with margin {margin}px does not fit a {width}x{height} screen")]
    DoesNotFit {
        size: u32,
        margin: u32,
        width: u32,
        height: u32,
    },
    #[error(transparent)]
    Payload(#[from] PayloadError),
    #[error(transparent)]
    Qr(#[from] QrError),
}

/// Encodes the active subset of `registry` into a rendered tag image.
pub fn encode_tag<S: AsRef<str>>(
    registry: &AppRegistry,
    active: &[S],
    module_px: u32,
) -> Result<crate::imaging::Image, TagError> {
    let bytes = payload_encode(registry, active)?;
    let matrix = qr_encode(&bytes)?;
    Ok(render_tag(&matrix, module_px, DEFAULT_QUIET_ZONE))
}
