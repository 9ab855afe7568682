//! Synthetic profiler: generates batch-time samples from the roofline model
//! with per-operator inefficiency factors and seeded multiplicative noise,
//! standing in for GPU profiling runs.

use super::features::extract_features;
use super::fit::ProfileSample;
use super::{layer_operator_costs, theoretical_latency};
use crate::domain::{BatchEntry, HardwareSpec, ModelSpec, Phase, Tokens};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfilerConfig {
    pub model: ModelSpec,
    pub hardware: HardwareSpec,
    /// Observed attention time over its roofline bound.
    pub attention_inefficiency: f64,
    /// Observed matmul time over its roofline bound.
    pub matmul_inefficiency: f64,
    /// Multiplicative noise amplitude (0.02 = +/-2%).
    pub noise: f64,
    pub seed: u64,
}

impl ProfilerConfig {
    pub fn new(model: ModelSpec, hardware: HardwareSpec, seed: u64) -> Self {
        ProfilerConfig {
            model,
            hardware,
            attention_inefficiency: 3.0,
            matmul_inefficiency: 1.25,
            noise: 0.02,
            seed,
        }
    }

    /// Noise-free "measured" time for one batch. The first five operators of
    /// a layer are matmuls, the rest attention (see `layer_operator_costs`).
    pub fn observe_exact(&self, entries: &[BatchEntry]) -> f64 {
        let ops = layer_operator_costs(entries, &self.model);
        let per_layer: f64 = ops
            .iter()
            .enumerate()
            .map(|(i, op)| {
                let factor = if i < 5 { self.matmul_inefficiency } else { self.attention_inefficiency };
                theoretical_latency(op, &self.hardware) * factor
            })
            .sum();
        per_layer * self.model.num_layers as f64
    }
}

fn prefill(c: Tokens, m: Tokens) -> BatchEntry {
    BatchEntry { request_id: 0, c, m_before: m, phase_at_batch: Phase::Prefill }
}

fn decode(m: Tokens) -> BatchEntry {
    BatchEntry { request_id: 0, c: 1, m_before: m, phase_at_batch: Phase::Decode }
}

/// Batch compositions covering prefill-only, decode-only, and hybrid batches
/// over a range of chunk sizes, cached lengths, and batch sizes.
pub fn profile_batches(model: &ModelSpec) -> Vec<Vec<BatchEntry>> {
    let s = model.context_size;
    let c_grid: Vec<Tokens> = [1, 4, 16, 64, 128, 256, 512, 1024, 2048, 4096]
        .into_iter()
        .filter(|c| *c <= s)
        .collect();
    let m_grid: Vec<Tokens> = [0, 16, 128, 512, 1024, 2048]
        .into_iter()
        .filter(|m| *m < s)
        .collect();
    let b_grid = [1u64, 4, 16, 64, 128];

    let mut batches = Vec::new();
    for &c in &c_grid {
        for &m in &m_grid {
            if c + m <= s {
                batches.push(vec![prefill(c, m)]);
            }
        }
    }
    for &m in &m_grid {
        for &b in &b_grid {
            batches.push((0..b).map(|_| decode(m.max(1))).collect());
        }
    }
    for &c in &c_grid {
        for &b in &b_grid {
            for &m in &[16u64, 512, 2048] {
                if m < s {
                    let mut batch = vec![prefill(c, 0)];
                    batch.extend((0..b).map(|_| decode(m)));
                    batches.push(batch);
                }
            }
        }
    }
    batches
}

/// Generates profile samples for the standard composition grid.
pub fn synthesize_profile(config: &ProfilerConfig) -> Vec<ProfileSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    profile_batches(&config.model)
        .iter()
        .map(|batch| {
            let exact = config.observe_exact(batch);
            let noisy = exact * (1.0 + config.noise * rng.gen_range(-1.0..1.0));
            ProfileSample {
                features: extract_features(batch).expect("non-empty profile batch"),
                observed_seconds: noisy,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::fit_linear;

    fn config() -> ProfilerConfig {
        ProfilerConfig::new(ModelSpec::llama2_7b(), HardwareSpec::a100(), 42)
    }

    #[test]
    fn profile_is_deterministic_per_seed() {
        let a = synthesize_profile(&config());
        let b = synthesize_profile(&config());
        assert_eq!(a, b);
    }

    #[test]
    fn observed_times_are_positive() {
        for s in synthesize_profile(&config()) {
            assert!(s.observed_seconds > 0.0);
        }
    }

    #[test]
    fn calibration_on_synthetic_profile_fits_well() {
        let samples = synthesize_profile(&config());
        let model = fit_linear(&samples).unwrap();
        assert!(model.r_squared >= 0.96, "r2 = {}", model.r_squared);
        for c in &model.coefficients[1..] {
            assert!(*c >= 0.0);
        }
    }
}
