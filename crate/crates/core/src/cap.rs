//! Desk-scale size limit shared by every construction in the crate.
//!
//! The default cap is 12 live qubits (4096-dimensional density matrices). It
//! can be raised or lowered through the `QCT_MAX_QUBITS` environment variable,
//! which is read once per process.

use std::sync::OnceLock;

use crate::error::{QctError, Result};

pub const DEFAULT_MAX_QUBITS: usize = 12;
pub const MAX_QUBITS_ENV: &str = "QCT_MAX_QUBITS";

static CAP: OnceLock<usize> = OnceLock::new();

pub fn max_qubits() -> usize {
    *CAP.get_or_init(|| {
        std::env::var(MAX_QUBITS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0 && n < 31)
            .unwrap_or(DEFAULT_MAX_QUBITS)
    })
}

pub fn check_qubits(required: usize, context: &str) -> Result<()> {
    let cap = max_qubits();
    if required > cap {
        return Err(QctError::Capacity {
            context: context.to_string(),
            required,
            cap,
        });
    }
    Ok(())
}

/// Number of qubits spanning a dimension, rounding up for non powers of two.
pub fn qubits_for_dim(dim: usize) -> usize {
    if dim <= 1 {
        0
    } else {
        (usize::BITS - (dim - 1).leading_zeros()) as usize
    }
}

pub fn check_dim(dim: usize, context: &str) -> Result<()> {
    check_qubits(qubits_for_dim(dim), context)
}
