//! Online histogram estimating output lengths from input lengths, used to
//! defer admissions that would later trigger preemption.

use crate::domain::Tokens;
use serde::{Deserialize, Serialize};

const BUCKET_CAP: usize = 1024;

/// Geometric input-length bins, each holding a bounded sample set of observed
/// output lengths. Prediction is a nearest-rank p90 with fallbacks: bucket
/// quantile, then global quantile, then a configured prior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputHistogram {
    buckets: Vec<Bucket>,
    global: Bucket,
    pub min_observations: usize,
    pub quantile: f64,
    pub prior: Tokens,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Bucket {
    count: u64,
    /// Sorted observed output lengths (capped; oldest evicted by rank rotation).
    samples: Vec<Tokens>,
}

impl Bucket {
    fn observe(&mut self, output_len: Tokens) {
        self.count += 1;
        if self.samples.len() >= BUCKET_CAP {
            // Deterministic replacement keeps the sketch bounded.
            let slot = (self.count as usize) % BUCKET_CAP;
            self.samples.remove(slot.min(self.samples.len() - 1));
        }
        let pos = self.samples.partition_point(|&s| s < output_len);
        self.samples.insert(pos, output_len);
    }

    fn nearest_rank(&self, q: f64) -> Option<Tokens> {
        if self.samples.is_empty() {
            return None;
        }
        let n = self.samples.len();
        let idx = ((q * n as f64).floor() as usize).min(n - 1);
        Some(self.samples[idx])
    }
}

impl OutputHistogram {
    pub fn new(context_size: Tokens) -> Self {
        let num_buckets = (context_size.max(2) as f64).log2().ceil() as usize + 1;
        OutputHistogram {
            buckets: vec![Bucket::default(); num_buckets],
            global: Bucket::default(),
            min_observations: 8,
            quantile: 0.9,
            prior: 256,
        }
    }

    fn bucket_index(&self, input_len: Tokens) -> usize {
        let idx = (64 - input_len.max(1).leading_zeros() as usize).saturating_sub(1);
        idx.min(self.buckets.len() - 1)
    }

    /// Records a completed request's actual output length.
    pub fn observe(&mut self, input_len: Tokens, output_len: Tokens) {
        let idx = self.bucket_index(input_len);
        self.buckets[idx].observe(output_len);
        self.global.observe(output_len);
    }

    /// Predicted output length for a request of the given input length.
    pub fn predict(&self, input_len: Tokens) -> Tokens {
        let bucket = &self.buckets[self.bucket_index(input_len)];
        if bucket.count >= self.min_observations as u64 {
            if let Some(p) = bucket.nearest_rank(self.quantile) {
                return p;
            }
        }
        if self.global.count >= self.min_observations as u64 {
            if let Some(p) = self.global.nearest_rank(self.quantile) {
                return p;
            }
        }
        self.prior
    }
}
