//! Analysis quantities derived from the cost models: SLO Pareto curves,
//! swap-vs-recompute break-even, and the cache-residency (five-minute-rule)
//! interval.

use super::CostMode;
use crate::domain::{BatchEntry, Phase, Tokens};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SloStatus {
    Ok,
    /// The threshold is below the cost of the emptiest possible batch.
    ThresholdBelowBias,
}

/// Boundary `(c, m)` pairs under which a hybrid batch meets the TPOT target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SloCurve {
    /// `(per-prefill chunk c, per-decode cached length m)` boundary points.
    pub points: Vec<(Tokens, Tokens)>,
    pub status: SloStatus,
}

fn hybrid_batch(c: Tokens, m: Tokens, n_prefill: u64, n_decode: u64) -> Vec<BatchEntry> {
    let mut entries = Vec::with_capacity((n_prefill + n_decode) as usize);
    for _ in 0..n_prefill {
        entries.push(BatchEntry { request_id: 0, c, m_before: 0, phase_at_batch: Phase::Prefill });
    }
    for _ in 0..n_decode {
        entries.push(BatchEntry { request_id: 0, c: 1, m_before: m, phase_at_batch: Phase::Decode });
    }
    entries
}

/// For 64 log-spaced prefill chunk sizes in `[1, c_max]`, the maximal decode
/// cached length `m` (to within one token, by bisection) keeping the batch
/// under `tpot_threshold`. Monotone cost models yield a non-increasing curve.
pub fn slo_pareto(
    tpot_threshold: f64,
    n_prefill: u64,
    n_decode: u64,
    mode: &CostMode,
    c_max: Tokens,
    m_max: Tokens,
) -> SloCurve {
    assert!(tpot_threshold > 0.0, "threshold must be positive");
    let time_at = |c: Tokens, m: Tokens| mode.predict_batch_time(&hybrid_batch(c, m, n_prefill, n_decode));

    if time_at(1, 0) > tpot_threshold {
        return SloCurve { points: Vec::new(), status: SloStatus::ThresholdBelowBias };
    }

    let mut points = Vec::new();
    for c in log_grid(c_max, 64) {
        if time_at(c, 0) > tpot_threshold {
            continue; // this chunk size is infeasible even with no cached KVs
        }
        // Bisect the largest feasible m in [0, m_max].
        let (mut lo, mut hi) = (0, m_max);
        if time_at(c, m_max) <= tpot_threshold {
            lo = m_max;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if time_at(c, mid) <= tpot_threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        points.push((c, lo));
    }
    SloCurve { points, status: SloStatus::Ok }
}

/// 64 log-spaced integer points in `[1, max]`, deduplicated and ascending.
fn log_grid(max: Tokens, n: usize) -> Vec<Tokens> {
    let mut grid: Vec<Tokens> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            ((max as f64).powf(t).round() as Tokens).clamp(1, max)
        })
        .collect();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Breakeven {
    /// Smallest KV count at which recomputing is no slower than swapping in.
    At(Tokens),
    /// Swapping wins everywhere within the context size.
    AlwaysSwap,
    /// Recomputing wins from a single KV onward.
    AlwaysRecompute,
}

/// Compares refilling `n` KVs by recomputation against loading them over the
/// host link. `recompute` must include the fixed weight-loading bias.
pub fn swap_recompute_breakeven(
    recompute: impl Fn(Tokens) -> f64,
    kv_bytes_per_token: u64,
    pcie_bandwidth: f64,
    context_size: Tokens,
) -> Breakeven {
    assert!(pcie_bandwidth > 0.0);
    let swap_in = |n: Tokens| n as f64 * kv_bytes_per_token as f64 / pcie_bandwidth;
    if recompute(1) <= swap_in(1) {
        return Breakeven::AlwaysRecompute;
    }
    // recompute has a fixed bias, swap grows linearly: scan for the first crossing.
    let mut lo = 1;
    let mut hi = context_size;
    if recompute(hi) > swap_in(hi) {
        return Breakeven::AlwaysSwap;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if recompute(mid) <= swap_in(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Breakeven::At(hi)
}

/// Break-even residency interval for cached KVs: per-KV recompute time of an
/// `n`-token refill, scaled to the full cache of `m_capacity` KVs.
pub fn five_minute_interval(n: Tokens, recompute: impl Fn(Tokens) -> f64, m_capacity: Tokens) -> f64 {
    assert!(n >= 1 && m_capacity >= 1);
    (recompute(n) / n as f64) * m_capacity as f64
}
