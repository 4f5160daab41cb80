// SPDX-License-Identifier: Apache-2.0 OR MIT

use thiserror::Error;

use crate::norms::GaugeError;

pub type Result<T, E = CdtwError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CdtwError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid gauge polygon: {0}")]
    InvalidGauge(#[from] GaugeError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("norm is not polygonal; replace it with norms::approximate_norm first")]
    NotPolygonal,

    #[error("numeric guard tripped: {0}")]
    Numeric(String),

    #[error("grid of {nodes} nodes exceeds the memory limit of {limit_mb} MB")]
    MemoryLimit { nodes: u64, limit_mb: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CdtwError {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            CdtwError::Numeric(_) | CdtwError::MemoryLimit { .. } => 2,
            _ => 1,
        }
    }
}
