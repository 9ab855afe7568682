//! Shared domain types: model/hardware descriptions, request lifecycle state,
//! batches, and the schedule log that every metric is derived from.
//!
//! All token counts are plain integers and all times are `f64` seconds.
//! Every type here is a plain value; nothing holds shared mutable state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type RequestId = u32;
pub type Tokens = u64;

/// Transformer model dimensions relevant to batch cost estimation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Hidden dimension `h` (= head_dim * num_query_heads).
    pub hidden_dim: u64,
    /// Dense (FFN) layer dimension `f`.
    pub dense_dim: u64,
    /// Attention head size `H`.
    pub head_dim: u64,
    /// Number of query heads `N_Q`.
    pub num_query_heads: u64,
    /// Number of KV heads `N_KV` (grouped-query attention).
    pub num_kv_heads: u64,
    pub num_layers: u64,
    /// Context size `S` in tokens.
    pub context_size: Tokens,
    /// Bytes per element for weights and activations (2 for fp16/bf16).
    pub bytes_per_element: u64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.hidden_dim == 0
            || self.dense_dim == 0
            || self.head_dim == 0
            || self.num_query_heads == 0
            || self.num_kv_heads == 0
            || self.num_layers == 0
            || self.context_size == 0
            || self.bytes_per_element == 0
        {
            return Err(DomainError::InvalidSpec("model fields must be positive".into()));
        }
        if self.hidden_dim != self.head_dim * self.num_query_heads {
            return Err(DomainError::InvalidSpec(format!(
                "hidden_dim {} != head_dim {} * num_query_heads {}",
                self.hidden_dim, self.head_dim, self.num_query_heads
            )));
        }
        if self.num_kv_heads > self.num_query_heads || self.num_query_heads % self.num_kv_heads != 0
        {
            return Err(DomainError::InvalidSpec(format!(
                "num_kv_heads {} must divide num_query_heads {}",
                self.num_kv_heads, self.num_query_heads
            )));
        }
        Ok(())
    }

    /// Llama-2-7B-like defaults used throughout the experiments.
    pub fn llama2_7b() -> Self {
        ModelSpec {
            hidden_dim: 4096,
            dense_dim: 11008,
            head_dim: 128,
            num_query_heads: 32,
            num_kv_heads: 32,
            num_layers: 32,
            context_size: 4096,
            bytes_per_element: 2,
        }
    }

    /// Bytes of KV cache per cached token (keys + values across all layers).
    pub fn kv_bytes_per_token(&self) -> u64 {
        2 * self.num_layers * self.num_kv_heads * self.head_dim * self.bytes_per_element
    }
}

/// Aggregate single-device hardware description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareSpec {
    /// Peak compute throughput in FLOPs/second.
    pub peak_flops: f64,
    /// Memory bandwidth in bytes/second.
    pub mem_bandwidth: f64,
    /// Host-device link bandwidth in bytes/second (for KV swap analysis).
    pub pcie_bandwidth: f64,
    /// KV cache capacity `M` in tokens.
    pub kv_cache_capacity: Tokens,
}

impl HardwareSpec {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.peak_flops <= 0.0
            || self.mem_bandwidth <= 0.0
            || self.pcie_bandwidth <= 0.0
            || self.kv_cache_capacity == 0
        {
            return Err(DomainError::InvalidSpec(
                "hardware fields must be strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// A100 80GB datasheet values (bf16 dense), M = 100K tokens.
    pub fn a100() -> Self {
        HardwareSpec {
            peak_flops: 312e12,
            mem_bandwidth: 2.039e12,
            pcie_bandwidth: 64e9,
            kv_cache_capacity: 100_000,
        }
    }

    /// H100 SXM datasheet values (bf16 dense), M = 100K tokens.
    pub fn h100() -> Self {
        HardwareSpec {
            peak_flops: 989e12,
            mem_bandwidth: 3.35e12,
            pcie_bandwidth: 128e9,
            kv_cache_capacity: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Waiting,
    Prefill,
    Decode,
    Completed,
}

/// One inference job with its mutable execution state.
///
/// `output_len` is ground truth: only hypothetical schedulers, the
/// simulator's completion check, and the exact optimizer may read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub arrival_time: f64,
    pub input_len: Tokens,
    pub output_len: Tokens,
    /// Processed tokens currently cached (KVs held).
    pub m: Tokens,
    /// Output tokens produced so far.
    pub generated: Tokens,
    pub phase: Phase,
    pub preempt_count: u32,
    pub first_token_time: Option<f64>,
    pub completion_time: Option<f64>,
    /// Tokens of KV cache reserved at admission (reservation-mode dependent).
    pub reserved: Tokens,
}

impl Request {
    pub fn new(id: RequestId, arrival_time: f64, input_len: Tokens, output_len: Tokens) -> Self {
        Request {
            id,
            arrival_time,
            input_len,
            output_len,
            m: 0,
            generated: 0,
            phase: Phase::Waiting,
            preempt_count: 0,
            first_token_time: None,
            completion_time: None,
            reserved: 0,
        }
    }

    /// Total input plus generated tokens (`s` in the schedule formulation).
    pub fn sequence_length(&self) -> Tokens {
        self.input_len + self.generated
    }

    /// Maximum `c` schedulable for this request in the next batch.
    pub fn tokens_available(&self) -> Result<Tokens, DomainError> {
        if self.phase == Phase::Completed {
            return Err(DomainError::RequestCompleted(self.id));
        }
        Ok(self.sequence_length() - self.m)
    }

    /// Peak KV demand `I + O - 1`; reads ground-truth output length.
    pub fn peak_kv_demand(&self) -> Tokens {
        self.input_len + self.output_len - 1
    }
}

/// One request's share of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub request_id: RequestId,
    /// Tokens to process this batch.
    pub c: Tokens,
    /// Tokens already cached when the batch starts.
    pub m_before: Tokens,
    pub phase_at_batch: Phase,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub index: usize,
    pub entries: Vec<BatchEntry>,
    pub start_time: f64,
    pub duration: f64,
}

impl Batch {
    pub fn total_tokens(&self) -> Tokens {
        self.entries.iter().map(|e| e.c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A preemption: `(batch_index, request_id, m_discarded)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreemptionEvent {
    pub batch_index: usize,
    pub request_id: RequestId,
    pub m_discarded: Tokens,
}

/// Ordered record of every batch and preemption; the single source for metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleLog {
    pub batches: Vec<Batch>,
    pub preemption_events: Vec<PreemptionEvent>,
    pub completion_order: Vec<RequestId>,
}

impl ScheduleLog {
    /// Total tokens recomputed due to preemption.
    pub fn refilled_tokens(&self) -> Tokens {
        self.preemption_events.iter().map(|e| e.m_discarded).sum()
    }

    /// Serializes as CSV: `batch,start_s,duration_s,request,phase,c,m_before,event`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "batch", "start_s", "duration_s", "request", "phase", "c", "m_before", "event",
        ])?;
        let mut events_by_batch: std::collections::HashMap<usize, Vec<&PreemptionEvent>> =
            std::collections::HashMap::new();
        for ev in &self.preemption_events {
            events_by_batch.entry(ev.batch_index).or_default().push(ev);
        }
        for batch in &self.batches {
            for e in &batch.entries {
                let phase = match e.phase_at_batch {
                    Phase::Prefill => "prefill",
                    Phase::Decode => "decode",
                    _ => "other",
                };
                wtr.write_record([
                    batch.index.to_string(),
                    format!("{:.9}", batch.start_time),
                    format!("{:.9}", batch.duration),
                    e.request_id.to_string(),
                    phase.to_string(),
                    e.c.to_string(),
                    e.m_before.to_string(),
                    String::new(),
                ])?;
            }
            for ev in events_by_batch.get(&batch.index).into_iter().flatten() {
                wtr.write_record([
                    batch.index.to_string(),
                    format!("{:.9}", batch.start_time),
                    format!("{:.9}", batch.duration),
                    ev.request_id.to_string(),
                    "preempt".to_string(),
                    "0".to_string(),
                    ev.m_discarded.to_string(),
                    "preempt".to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("request {0} is already completed")]
    RequestCompleted(RequestId),
}
