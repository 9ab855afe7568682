//! Feature extraction mapping a batch composition onto the variables the
//! linear cost models are trained over.

use crate::domain::{BatchEntry, Phase, Tokens};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NUM_FEATURES: usize = 7;
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "bias",
    "sum_c",
    "sum_c2_prefill",
    "sum_mc_prefill",
    "sum_m_decode",
    "n_prefill",
    "n_decode",
];

/// Request-dependent variables of one batch, one field per operator class term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchFeatures {
    /// Total tokens processed (prefill chunks plus one per decode).
    pub sum_c: Tokens,
    /// Sum of c^2 over prefill entries (quadratic attention data transfer).
    pub sum_c2_prefill: u64,
    /// Sum of m*c over prefill entries (refill attention against cached KVs).
    pub sum_mc_prefill: u64,
    /// Sum of m over decode entries (KVs read per decode step).
    pub sum_m_decode: Tokens,
    pub n_prefill: u64,
    pub n_decode: u64,
}

impl BatchFeatures {
    /// Dense vector including the leading bias term.
    pub fn to_vector(self) -> [f64; NUM_FEATURES] {
        [
            1.0,
            self.sum_c as f64,
            self.sum_c2_prefill as f64,
            self.sum_mc_prefill as f64,
            self.sum_m_decode as f64,
            self.n_prefill as f64,
            self.n_decode as f64,
        ]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("cannot extract features from an empty batch")]
    EmptyBatch,
}

/// Deterministic feature vector for a batch. Decode entries contribute their
/// single token to `sum_c` and their cached length to `sum_m_decode`; prefill
/// entries contribute `c`, `c^2`, and `m*c`.
pub fn extract_features(entries: &[BatchEntry]) -> Result<BatchFeatures, FeatureError> {
    if entries.is_empty() {
        return Err(FeatureError::EmptyBatch);
    }
    let mut f = BatchFeatures::default();
    for e in entries {
        f.sum_c += e.c;
        match e.phase_at_batch {
            Phase::Decode => {
                f.n_decode += 1;
                f.sum_m_decode += e.m_before;
            }
            _ => {
                f.n_prefill += 1;
                f.sum_c2_prefill += e.c * e.c;
                f.sum_mc_prefill += e.m_before * e.c;
            }
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefill(c: Tokens, m: Tokens) -> BatchEntry {
        BatchEntry { request_id: 0, c, m_before: m, phase_at_batch: Phase::Prefill }
    }

    fn decode(m: Tokens) -> BatchEntry {
        BatchEntry { request_id: 0, c: 1, m_before: m, phase_at_batch: Phase::Decode }
    }

    #[test]
    fn single_decode_entry() {
        let f = extract_features(&[decode(100)]).unwrap();
        assert_eq!(
            f,
            BatchFeatures {
                sum_c: 1,
                sum_c2_prefill: 0,
                sum_mc_prefill: 0,
                sum_m_decode: 100,
                n_prefill: 0,
                n_decode: 1,
            }
        );
    }

    #[test]
    fn prefill_entry_squares_its_chunk() {
        let f = extract_features(&[prefill(512, 0)]).unwrap();
        assert_eq!(f.sum_c2_prefill, 262_144);
        assert_eq!(f.sum_c, 512);
    }

    #[test]
    fn hybrid_batch_composes_by_hand() {
        let f = extract_features(&[prefill(512, 0), decode(50), decode(50)]).unwrap();
        assert_eq!(f.sum_c, 514);
        assert_eq!(f.sum_m_decode, 100);
        assert_eq!(f.n_prefill, 1);
        assert_eq!(f.n_decode, 2);
    }

    #[test]
    fn empty_batch_is_an_error() {
        assert_eq!(extract_features(&[]), Err(FeatureError::EmptyBatch));
    }
}
