//! Batch-time cost models: per-operator FLOPs/data-movement accounting,
//! theoretical roofline latencies, calibrated linear models, and the
//! derived analysis quantities built on top of them.

mod analysis;
mod features;
mod fit;
mod profiler;

pub use analysis::{
    five_minute_interval, slo_pareto, swap_recompute_breakeven, Breakeven, SloCurve, SloStatus,
};
pub use features::{extract_features, BatchFeatures, FEATURE_NAMES, NUM_FEATURES};
pub use fit::{fit_linear, read_profile_csv, write_profile_csv, FitError, LinearCostModel, ProfileSample};
pub use profiler::{synthesize_profile, ProfilerConfig};

use crate::domain::{BatchEntry, HardwareSpec, ModelSpec, Phase, Tokens};
use serde::{Deserialize, Serialize};

/// FLOPs and bytes read+written for one operator invocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OpCost {
    pub flops: f64,
    /// Bytes read plus written.
    pub rw: f64,
}

impl OpCost {
    pub fn zero() -> Self {
        OpCost { flops: 0.0, rw: 0.0 }
    }

    pub fn add(self, other: OpCost) -> OpCost {
        OpCost {
            flops: self.flops + other.flops,
            rw: self.rw + other.rw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundedness {
    ComputeBound,
    MemoryBound,
}

/// Cost of a `(c x in_dim) x (in_dim x out_dim)` matmul. The weight matrix is
/// loaded even when `c = 0`.
pub fn matmul_cost(c: Tokens, in_dim: u64, out_dim: u64, bytes_per_element: u64) -> OpCost {
    let (c, i, o, b) = (c as f64, in_dim as f64, out_dim as f64, bytes_per_element as f64);
    OpCost {
        flops: 2.0 * c * i * o,
        rw: b * (i * o + c * i + c * o),
    }
}

/// Attention cost for `batch_size` requests that all share `(c, m)`.
///
/// `c = 0` is rejected: a request contributes no attention work when it
/// processes no tokens.
pub fn attention_cost(
    c: Tokens,
    m: Tokens,
    batch_size: u64,
    model: &ModelSpec,
) -> Result<OpCost, CostError> {
    if c == 0 || batch_size == 0 {
        return Err(CostError::EmptyAttention);
    }
    let h = model.head_dim as f64;
    let nq = model.num_query_heads as f64;
    let nkv = model.num_kv_heads as f64;
    let b = batch_size as f64;
    let cm = (c + m) as f64;
    let cf = c as f64;
    let chunks = c.div_ceil(model.head_dim) as f64;
    let flops = 4.0 * cf * cm * b * h * nq;
    let rw_elements = 2.0 * cf * h * nq + 2.0 * cf * cm * b * nq + 2.0 * chunks * cm * b * h * nkv;
    Ok(OpCost {
        flops,
        rw: rw_elements * model.bytes_per_element as f64,
    })
}

/// Arithmetic intensity in FLOPs per byte moved.
pub fn intensity(cost: &OpCost) -> Result<f64, CostError> {
    if cost.rw <= 0.0 {
        return Err(CostError::UndefinedIntensity);
    }
    Ok(cost.flops / cost.rw)
}

/// Compute-bound iff the intensity reaches the hardware's FLOPS/bandwidth ridge.
pub fn classify(intensity: f64, hw: &HardwareSpec) -> Boundedness {
    if intensity >= hw.peak_flops / hw.mem_bandwidth {
        Boundedness::ComputeBound
    } else {
        Boundedness::MemoryBound
    }
}

/// Roofline latency: both resources fully overlapped, the slower one binds.
pub fn theoretical_latency(cost: &OpCost, hw: &HardwareSpec) -> f64 {
    (cost.flops / hw.peak_flops).max(cost.rw / hw.mem_bandwidth)
}

/// Per-operator costs of one transformer layer for a mixed batch.
///
/// Non-attention matmuls see the concatenated token count; attention is
/// summed per request (heterogeneous `(c, m)` batches reduce to the uniform
/// closed form when all requests match).
pub fn layer_operator_costs(entries: &[BatchEntry], model: &ModelSpec) -> Vec<OpCost> {
    let sum_c: Tokens = entries.iter().map(|e| e.c).sum();
    let h = model.hidden_dim;
    let f = model.dense_dim;
    let qkv_out = (model.num_query_heads + 2 * model.num_kv_heads) * model.head_dim;
    let b = model.bytes_per_element;

    let mut ops = vec![
        matmul_cost(sum_c, h, qkv_out, b), // QKV_proj
        matmul_cost(sum_c, h, h, b),       // O_proj
        matmul_cost(sum_c, h, f, b),       // Gate_proj
        matmul_cost(sum_c, h, f, b),       // Up_proj
        matmul_cost(sum_c, f, h, b),       // Down_proj
    ];

    let mut prefill_attn = OpCost::zero();
    let mut decode_attn = OpCost::zero();
    for e in entries {
        let cost = attention_cost(e.c, e.m_before, 1, model).expect("entry with c >= 1");
        match e.phase_at_batch {
            Phase::Decode => decode_attn = decode_attn.add(cost),
            _ => prefill_attn = prefill_attn.add(cost),
        }
    }
    if prefill_attn.rw > 0.0 {
        ops.push(prefill_attn);
    }
    if decode_attn.rw > 0.0 {
        ops.push(decode_attn);
    }
    ops
}

/// Roofline time for the whole batch: per-operator latencies summed over one
/// layer, times the layer count. Empty batches cost nothing.
pub fn theoretical_batch_time(entries: &[BatchEntry], model: &ModelSpec, hw: &HardwareSpec) -> f64 {
    if entries.is_empty() {
        return 0.0;
    }
    let per_layer: f64 = layer_operator_costs(entries, model)
        .iter()
        .map(|op| theoretical_latency(op, hw))
        .sum();
    per_layer * model.num_layers as f64
}

/// How batch durations are predicted during simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CostMode {
    /// Roofline bound from model and hardware specs.
    Theoretical { model: ModelSpec, hardware: HardwareSpec },
    /// Fitted linear model over batch features.
    Calibrated { model: LinearCostModel },
}

impl CostMode {
    pub fn predict_batch_time(&self, entries: &[BatchEntry]) -> f64 {
        if entries.is_empty() {
            return 0.0;
        }
        match self {
            CostMode::Theoretical { model, hardware } => {
                theoretical_batch_time(entries, model, hardware)
            }
            CostMode::Calibrated { model } => {
                let features = extract_features(entries).expect("non-empty batch");
                model.predict(&features)
            }
        }
    }

    /// Cost of re-prefilling `n` tokens from an empty cache (one request).
    pub fn recompute_time(&self, n: Tokens) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let entry = BatchEntry {
            request_id: 0,
            c: n,
            m_before: 0,
            phase_at_batch: Phase::Prefill,
        };
        self.predict_batch_time(std::slice::from_ref(&entry))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CostError {
    #[error("attention requires c >= 1 and batch_size >= 1")]
    EmptyAttention,
    #[error("intensity undefined for rw = 0")]
    UndefinedIntensity,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model_elems() -> ModelSpec {
        // bytes_per_element = 1 keeps rw in element units for intensity checks.
        ModelSpec {
            bytes_per_element: 1,
            ..ModelSpec::llama2_7b()
        }
    }

    #[test]
    fn matmul_cost_examples() {
        let c0 = matmul_cost(0, 11008, 4096, 2);
        assert_eq!(c0.flops, 0.0);
        assert_eq!(c0.rw, 2.0 * 11008.0 * 4096.0);

        let c1 = matmul_cost(1, 4096, 4096, 2);
        assert_eq!(c1.flops, 33_554_432.0);

        // Hand count: 2*2*3*5 = 60 flops; elements moved 15 + 6 + 10 = 31.
        let c2 = matmul_cost(2, 3, 5, 2);
        assert_eq!(c2.flops, 60.0);
        assert_eq!(c2.rw, 62.0);
    }

    #[test]
    fn attention_cost_single_token() {
        let m = model_elems();
        let cost = attention_cost(1, 0, 1, &m).unwrap();
        assert_eq!(cost.flops, 4.0 * 128.0 * 32.0);
        assert_eq!(cost.flops, 16_384.0);
    }

    #[test]
    fn attention_rejects_zero_tokens() {
        assert!(attention_cost(0, 10, 1, &model_elems()).is_err());
    }

    #[test]
    fn attention_flops_additive_over_batch() {
        let m = model_elems();
        for (c, mm, b) in [(17, 5, 4), (128, 0, 8), (1, 999, 32)] {
            let grouped = attention_cost(c, mm, b, &m).unwrap();
            let single = attention_cost(c, mm, 1, &m).unwrap();
            assert_relative_eq!(grouped.flops, single.flops * b as f64, max_relative = 1e-12);
            // RW differs only by the shared Q-write term counted once per call.
            let q_term = 2.0 * c as f64 * 128.0 * 32.0;
            assert_relative_eq!(
                grouped.rw,
                single.rw * b as f64 - q_term * (b - 1) as f64,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn prefill_intensity_approaches_head_dim_limit() {
        let m = model_elems();
        let cost = attention_cost(4096, 0, 1, &m).unwrap();
        let i = intensity(&cost).unwrap();
        assert!((i - 128.0).abs() / 128.0 < 0.02, "intensity {i}");
    }

    #[test]
    fn decode_intensity_is_near_two() {
        let m = model_elems();
        let cost = attention_cost(1, 100_000, 1, &m).unwrap();
        let i = intensity(&cost).unwrap();
        assert!((i - 2.0).abs() / 2.0 < 0.05, "intensity {i}");
    }

    #[test]
    fn zero_flops_is_memory_bound() {
        let cost = OpCost { flops: 0.0, rw: 10.0 };
        let i = intensity(&cost).unwrap();
        assert_eq!(i, 0.0);
        assert_eq!(classify(i, &HardwareSpec::a100()), Boundedness::MemoryBound);
    }

    #[test]
    fn intensity_undefined_for_zero_rw() {
        assert!(intensity(&OpCost { flops: 1.0, rw: 0.0 }).is_err());
    }

    #[test]
    fn latency_is_max_of_resource_times() {
        let hw = HardwareSpec {
            peak_flops: 100.0,
            mem_bandwidth: 10.0,
            pcie_bandwidth: 1.0,
            kv_cache_capacity: 1,
        };
        assert_eq!(theoretical_latency(&OpCost::zero(), &hw), 0.0);
        // flops term twice the rw term: compute time returned.
        let cost = OpCost { flops: 200.0, rw: 10.0 };
        assert_eq!(theoretical_latency(&cost, &hw), 2.0);
        let t = theoretical_latency(&cost, &hw);
        assert!(t >= cost.flops / hw.peak_flops && t >= cost.rw / hw.mem_bandwidth);
    }

    #[test]
    fn layer_time_matches_hand_summed_operators() {
        // Cross-check against an independent summation of the operator table.
        let model = ModelSpec::llama2_7b();
        let hw = HardwareSpec::a100();
        let entry = BatchEntry {
            request_id: 0,
            c: 512,
            m_before: 0,
            phase_at_batch: Phase::Prefill,
        };
        let total = theoretical_batch_time(std::slice::from_ref(&entry), &model, &hw);

        let (c, h, f) = (512u64, 4096u64, 11008u64);
        let mats = [
            matmul_cost(c, h, (32 + 64) * 128, 2),
            matmul_cost(c, h, h, 2),
            matmul_cost(c, h, f, 2),
            matmul_cost(c, h, f, 2),
            matmul_cost(c, f, h, 2),
        ];
        let attn = attention_cost(c, 0, 1, &model).unwrap();
        let mut per_layer = 0.0;
        for op in mats.iter().chain(std::iter::once(&attn)) {
            per_layer += (op.flops / hw.peak_flops).max(op.rw / hw.mem_bandwidth);
        }
        assert_relative_eq!(total, per_layer * 32.0, max_relative = 1e-12);
    }

    #[test]
    fn uniform_batch_attention_matches_per_request_sum() {
        // Heterogeneous costing must reduce to the closed form on uniform batches.
        let model = ModelSpec::llama2_7b();
        let grouped = attention_cost(64, 32, 5, &model).unwrap();
        let single = attention_cost(64, 32, 1, &model).unwrap();
        assert_relative_eq!(grouped.flops, 5.0 * single.flops, max_relative = 1e-12);
    }

    #[test]
    fn empty_batch_costs_nothing() {
        let mode = CostMode::Theoretical {
            model: ModelSpec::llama2_7b(),
            hardware: HardwareSpec::a100(),
        };
        assert_eq!(mode.predict_batch_time(&[]), 0.0);
    }
}
