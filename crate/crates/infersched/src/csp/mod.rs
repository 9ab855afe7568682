//! Constraint formulation of the scheduling problem: integer variables for
//! per-request sequence, cache, and chunk sizes per batch, linearized with
//! big-M constants for LP export, plus an exact branch-and-bound solver for
//! small instances.

mod lp;
mod solve;

pub use lp::{export_lp, parse_solution_vars, solution_from_assignment};
pub use solve::{existence_query, solution_to_log, solve_exact, SolveLimits};

use crate::costmodel::CostMode;
use crate::domain::{RequestId, Tokens};
use crate::workload::Workload;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CspRequest {
    pub input_len: Tokens,
    pub output_len: Tokens,
    pub arrival_time: f64,
}

/// Linear surrogate for one batch's duration:
/// `gamma * [batch nonempty] + alpha * Σc + beta * Σ m_before`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSurrogate {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CostSurrogate {
    /// Derives surrogate coefficients from a cost mode. Calibrated models map
    /// their bias, per-token, and per-cached-KV coefficients directly; the
    /// roofline model is probed with small and large batches.
    pub fn from_cost(cost: &CostMode) -> CostSurrogate {
        match cost {
            CostMode::Calibrated { model } => CostSurrogate {
                gamma: model.coefficients[0].max(0.0),
                alpha: model.coefficients[1],
                beta: model.coefficients[4],
            },
            CostMode::Theoretical { .. } => {
                use crate::domain::{BatchEntry, Phase};
                let prefill = |c: Tokens| {
                    cost.predict_batch_time(&[BatchEntry {
                        request_id: 0,
                        c,
                        m_before: 0,
                        phase_at_batch: Phase::Prefill,
                    }])
                };
                let decode = |m: Tokens| {
                    cost.predict_batch_time(&[BatchEntry {
                        request_id: 0,
                        c: 1,
                        m_before: m,
                        phase_at_batch: Phase::Decode,
                    }])
                };
                let gamma = prefill(1);
                CostSurrogate {
                    gamma,
                    alpha: ((prefill(4096) - gamma) / 4095.0).max(0.0),
                    beta: ((decode(10_000) - decode(1)) / 9999.0).max(0.0),
                }
            }
        }
    }

    pub fn batch_cost(&self, sum_c: Tokens, sum_m_before: Tokens) -> f64 {
        if sum_c == 0 {
            return 0.0;
        }
        self.gamma + self.alpha * sum_c as f64 + self.beta * sum_m_before as f64
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CspOptions {
    pub j_max: Option<usize>,
    /// Adds accumulated-time variables gating each request's first batch to
    /// its arrival time.
    pub online: bool,
    /// Adds a constraint capping total schedule cost.
    pub latency_cap: Option<f64>,
    /// Forces all eviction variables to zero (preemption-free schedules).
    pub forbid_eviction: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CspInstance {
    pub requests: Vec<CspRequest>,
    pub j_max: usize,
    pub token_limit: Tokens,
    pub m_capacity: Tokens,
    pub context_size: Tokens,
    /// Big-M constant: max(S, M, C) + 1.
    pub big_m: Tokens,
    pub surrogate: CostSurrogate,
    pub options: CspOptions,
}

#[derive(Debug, Error)]
pub enum CspError {
    #[error("workload is empty")]
    EmptyWorkload,
    #[error("horizon {given} is below the minimal {minimum} batches")]
    HorizonTooSmall { given: usize, minimum: usize },
    #[error("instance caps exceeded ({0}); export an LP file for an external solver")]
    CapsExceeded(String),
    #[error("exact solver handles offline instances only (all arrivals at zero)")]
    OnlineUnsupported,
    #[error("no feasible schedule within the horizon")]
    Infeasible,
    #[error("bad solution file: {0}")]
    BadSolutionFile(String),
    #[error("request {0} missing from instance")]
    UnknownRequest(RequestId),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Smallest horizon that can possibly finish: every prefill chunked at C
/// plus the longest decode tail.
pub fn minimal_horizon(requests: &[CspRequest], token_limit: Tokens) -> usize {
    let chunks: usize =
        requests.iter().map(|r| r.input_len.div_ceil(token_limit) as usize).sum();
    let tail = requests.iter().map(|r| r.output_len as usize).max().unwrap_or(0);
    chunks + tail
}

/// Default horizon: serial prefills plus all decode steps plus one slack
/// batch per request for refills.
pub fn default_horizon(requests: &[CspRequest], token_limit: Tokens) -> usize {
    let chunks: usize =
        requests.iter().map(|r| r.input_len.div_ceil(token_limit) as usize).sum();
    let decodes: usize = requests.iter().map(|r| r.output_len as usize).sum();
    chunks + decodes + requests.len()
}

pub fn build_instance(
    workload: &Workload,
    surrogate: CostSurrogate,
    token_limit: Tokens,
    m_capacity: Tokens,
    context_size: Tokens,
    options: CspOptions,
) -> Result<CspInstance, CspError> {
    if workload.requests.is_empty() {
        return Err(CspError::EmptyWorkload);
    }
    let mut sorted = workload.requests.clone();
    sorted.sort_by_key(|r| r.id);
    let requests: Vec<CspRequest> = sorted
        .iter()
        .map(|r| CspRequest {
            input_len: r.input_len,
            output_len: r.output_len,
            arrival_time: r.arrival_time,
        })
        .collect();
    let minimum = minimal_horizon(&requests, token_limit);
    let j_max = options.j_max.unwrap_or_else(|| default_horizon(&requests, token_limit));
    if j_max < minimum {
        return Err(CspError::HorizonTooSmall { given: j_max, minimum });
    }
    Ok(CspInstance {
        requests,
        j_max,
        token_limit,
        m_capacity,
        context_size,
        big_m: context_size.max(m_capacity).max(token_limit) + 1,
        surrogate,
        options,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Optimality {
    ProvedOptimal,
    Feasible,
    Infeasible,
}

/// One batch of a concrete schedule: `(request index, c)` entries plus the
/// requests evicted at that batch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub entries: Vec<(usize, Tokens)>,
    pub evictions: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleSolution {
    pub plan: Vec<BatchPlan>,
    pub objective: f64,
    pub status: Optimality,
}

impl ScheduleSolution {
    pub fn preemption_count(&self) -> usize {
        self.plan.iter().map(|b| b.evictions.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{LinearCostModel, NUM_FEATURES};
    use crate::workload::WorkloadSpec;

    fn unit_surrogate() -> CostSurrogate {
        CostSurrogate { gamma: 1.0, alpha: 0.0, beta: 0.0 }
    }

    #[test]
    fn horizon_formula_matches_audit() {
        // Four requests, I=32, O=4, C=4096: 4 chunks + 16 decodes + 4 slack.
        let reqs: Vec<CspRequest> = (0..4)
            .map(|_| CspRequest { input_len: 32, output_len: 4, arrival_time: 0.0 })
            .collect();
        assert_eq!(default_horizon(&reqs, 4096), 24);
        assert_eq!(minimal_horizon(&reqs, 4096), 8);
    }

    #[test]
    fn too_small_horizon_rejected() {
        let workload = WorkloadSpec::fixed(32, 4, 2).generate(4096).unwrap();
        let err = build_instance(
            &workload,
            unit_surrogate(),
            4096,
            100,
            4096,
            CspOptions { j_max: Some(3), ..Default::default() },
        );
        assert!(matches!(err, Err(CspError::HorizonTooSmall { given: 3, minimum: 6 })));
    }

    #[test]
    fn big_m_exceeds_every_range() {
        let workload = WorkloadSpec::fixed(4, 2, 1).generate(4096).unwrap();
        let inst = build_instance(
            &workload,
            unit_surrogate(),
            512,
            100_000,
            4096,
            CspOptions::default(),
        )
        .unwrap();
        assert_eq!(inst.big_m, 100_001);
    }

    #[test]
    fn surrogate_from_calibrated_model() {
        let mut coefficients = [0.0; NUM_FEATURES];
        coefficients[0] = 0.01;
        coefficients[1] = 2e-4;
        coefficients[4] = 3e-7;
        let mode = CostMode::Calibrated { model: LinearCostModel::from_coefficients(coefficients) };
        let s = CostSurrogate::from_cost(&mode);
        assert_eq!((s.gamma, s.alpha, s.beta), (0.01, 2e-4, 3e-7));
        assert!((s.batch_cost(10, 100) - (0.01 + 2e-3 + 3e-5)).abs() < 1e-15);
        assert_eq!(s.batch_cost(0, 100), 0.0);
    }

    #[test]
    fn surrogate_from_roofline_is_positive() {
        use crate::domain::{HardwareSpec, ModelSpec};
        let mode = CostMode::Theoretical {
            model: ModelSpec::llama2_7b(),
            hardware: HardwareSpec::a100(),
        };
        let s = CostSurrogate::from_cost(&mode);
        assert!(s.gamma > 0.0 && s.alpha > 0.0 && s.beta > 0.0);
    }
}
