//! ScreenTag payload wire format.
//!
//! ```text
//! byte 0   magic 0x53
//! byte 1   version 0x01
//! byte 2   app count n, 1..=32
//! byte 3.. ceil(n/8) bitfield bytes; app i is bit (i % 8) of byte 3 + i / 8
//! ```
//! Bits at or beyond `n` in the final byte must be zero.

use std::collections::BTreeSet;

use thiserror::Error;

pub const PAYLOAD_MAGIC: u8 = 0x53;
pub const PAYLOAD_VERSION: u8 = 0x01;
pub const MAX_APPS: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PayloadError {
    #[error("registry holds {0} apps; at most 32 are supported")]
    TooManyApps(usize),
    #[error("invalid registry: {0}")]
    BadRegistry(String),
    #[error("app '{0}' is not in the registry")]
    UnknownApp(String),
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("unsupported payload version {0}")]
    UnsupportedVersion(u8),
    #[error("payload length {got} does not match app count (expected {expected})")]
    LengthMismatch { expected: usize, got: usize },
    #[error("padding bits beyond the app count are set")]
    NonzeroPadding,
}

/// Ordered list of monitored applications; an app's index is its bit position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppRegistry {
    apps: Vec<String>,
}

impl AppRegistry {
    pub fn new<S: AsRef<str>>(apps: impl IntoIterator<Item = S>) -> Result<Self, PayloadError> {
        let apps: Vec<String> = apps.into_iter().map(|s| s.as_ref().to_string()).collect();
        if apps.len() > MAX_APPS {
            return Err(PayloadError::TooManyApps(apps.len()));
        }
        if apps.is_empty() {
            return Err(PayloadError::BadRegistry("registry is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for app in &apps {
            if app.is_empty() || *app != app.to_lowercase() || app.trim() != app {
                return Err(PayloadError::BadRegistry(format!(
                    "'{app}' must be nonempty lowercase"
                )));
            }
            if !seen.insert(app.as_str()) {
                return Err(PayloadError::BadRegistry(format!("duplicate app '{app}'")));
            }
        }
        Ok(Self { apps })
    }

    /// Parses a comma-separated list such as `gmail,facebook,messenger`.
    pub fn parse_list(list: &str) -> Result<Self, PayloadError> {
        Self::new(list.split(',').map(str::trim).filter(|s| !s.is_empty()))
    }

    pub fn apps(&self) -> &[String] {
        &self.apps
    }

    pub fn len(&self) -> usize {
        self.apps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apps.is_empty()
    }

    pub fn index_of(&self, app: &str) -> Option<usize> {
        self.apps.iter().position(|a| a == app)
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.apps.get(index).map(String::as_str)
    }
}

/// Decoded payload contents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedPayload {
    pub app_count: usize,
    /// Indices of active apps, ascending.
    pub active: Vec<usize>,
}

impl DecodedPayload {
    /// Resolves active indices against a registry; indices beyond it are dropped.
    pub fn active_names(&self, registry: &AppRegistry) -> Vec<String> {
        self.active
            .iter()
            .filter_map(|&i| registry.name(i).map(str::to_string))
            .collect()
    }
}

pub fn payload_len(app_count: usize) -> usize {
    3 + app_count.div_ceil(8)
}

/// Serializes the active subset of `registry`.
pub fn payload_encode<S: AsRef<str>>(
    registry: &AppRegistry,
    active: &[S],
) -> Result<Vec<u8>, PayloadError> {
    let n = registry.len();
    if n > MAX_APPS {
        return Err(PayloadError::TooManyApps(n));
    }
    let mut out = vec![0u8; payload_len(n)];
    out[0] = PAYLOAD_MAGIC;
    out[1] = PAYLOAD_VERSION;
    out[2] = n as u8;
    for app in active {
        let app = app.as_ref();
        let i = registry
            .index_of(app)
            .ok_or_else(|| PayloadError::UnknownApp(app.to_string()))?;
        out[3 + i / 8] |= 1 << (i % 8);
    }
    Ok(out)
}

pub fn payload_decode(bytes: &[u8]) -> Result<DecodedPayload, PayloadError> {
    if bytes.len() < 3 {
        return Err(PayloadError::LengthMismatch {
            expected: 3,
            got: bytes.len(),
        });
    }
    if bytes[0] != PAYLOAD_MAGIC {
        return Err(PayloadError::BadMagic(bytes[0]));
    }
    if bytes[1] != PAYLOAD_VERSION {
        return Err(PayloadError::UnsupportedVersion(bytes[1]));
    }
    let n = bytes[2] as usize;
    if n == 0 || n > MAX_APPS {
        return Err(PayloadError::LengthMismatch {
            expected: payload_len(n.clamp(1, MAX_APPS)),
            got: bytes.len(),
        });
    }
    if bytes.len() != payload_len(n) {
        return Err(PayloadError::LengthMismatch {
            expected: payload_len(n),
            got: bytes.len(),
        });
    }
    let mut active = Vec::new();
    for (byte_index, &b) in bytes[3..].iter().enumerate() {
        for bit in 0..8 {
            if b & (1 << bit) != 0 {
                let i = byte_index * 8 + bit;
                if i >= n {
                    return Err(PayloadError::NonzeroPadding);
                }
                active.push(i);
            }
        }
    }
    Ok(DecodedPayload {
        app_count: n,
        active,
    })
}
