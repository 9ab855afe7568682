//! Discrete-event simulation loop: admits arrivals, asks the scheduler for
//! batches, advances the clock by predicted batch times, and records a
//! ScheduleLog plus a MetricsReport. Includes an independent log verifier.

use crate::costmodel::CostMode;
use crate::domain::{Batch, Phase, Request, RequestId, ScheduleLog, Tokens};
use crate::scheduler::{Scheduler, SchedulerConfig, SchedulerError};
use crate::workload::Workload;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum WhatIf {
    #[default]
    None,
    /// Caps memory at the sum of all peak demands so nothing ever evicts.
    InfiniteM,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub scheduler: SchedulerConfig,
    /// KV cache capacity M in tokens.
    pub m_capacity: Tokens,
    pub what_if: WhatIf,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("workload is empty")]
    EmptyWorkload,
    #[error("requests {0:?} need more KVs than the context size allows")]
    WorkloadRejected(Vec<RequestId>),
    #[error("request ids must be 0..n and unique")]
    BadRequestIds,
    #[error("schedule is stuck: no batch can be formed for pending requests {0:?}")]
    StuckSchedule(Vec<RequestId>),
    #[error("log incomplete: requests {0:?} never finished")]
    IncompleteLog(Vec<RequestId>),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Aggregate {
    pub mean: f64,
    pub p50: f64,
    pub p99: f64,
}

impl Aggregate {
    /// Nearest-rank quantiles over the given samples.
    fn over(mut samples: Vec<f64>) -> Aggregate {
        if samples.is_empty() {
            return Aggregate::default();
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let rank = |q: f64| samples[((q * n as f64).floor() as usize).min(n - 1)];
        Aggregate {
            mean: samples.iter().sum::<f64>() / n as f64,
            p50: rank(0.5),
            p99: rank(0.99),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestMetrics {
    pub id: RequestId,
    pub latency: f64,
    pub ttft: f64,
    /// Mean decode gap; absent for single-token outputs.
    pub tpot: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub makespan: f64,
    /// Generated tokens per second of makespan.
    pub tps: f64,
    pub preemption_count: usize,
    /// Tokens recomputed because their KVs were discarded.
    pub refilled_tokens: Tokens,
    /// Generated tokens over processed tokens.
    pub progress: f64,
    /// Mean number of requests per non-empty batch.
    pub avg_batch_size: f64,
    pub latency: Aggregate,
    pub ttft: Aggregate,
    pub tpot: Aggregate,
    /// KV holdings sampled at each batch end.
    pub kv_usage_timeline: Vec<(f64, Tokens)>,
    pub per_request: Vec<RequestMetrics>,
}

/// Runs one simulation to completion. Deterministic in its inputs.
pub fn run(
    workload: &Workload,
    config: &SimulationConfig,
    cost: &CostMode,
) -> Result<(ScheduleLog, MetricsReport), SimError> {
    if workload.requests.is_empty() {
        return Err(SimError::EmptyWorkload);
    }
    let mut ids: Vec<RequestId> = workload.requests.iter().map(|r| r.id).collect();
    ids.sort_unstable();
    if ids.iter().enumerate().any(|(i, &id)| id as usize != i) {
        return Err(SimError::BadRequestIds);
    }
    let s = config.scheduler.context_size;
    let rejected: Vec<RequestId> = workload
        .requests
        .iter()
        .filter(|r| r.peak_kv_demand() > s)
        .map(|r| r.id)
        .collect();
    if !rejected.is_empty() {
        return Err(SimError::WorkloadRejected(rejected));
    }

    let mut requests: Vec<Request> = vec![Request::new(0, 0.0, 1, 1); workload.requests.len()];
    for r in &workload.requests {
        requests[r.id as usize] = r.clone();
    }
    let m_capacity = match config.what_if {
        WhatIf::None => config.m_capacity,
        WhatIf::InfiniteM => requests.iter().map(|r| r.peak_kv_demand()).sum(),
    };

    let mut arrivals: Vec<RequestId> = (0..requests.len() as RequestId).collect();
    arrivals.sort_by(|&a, &b| {
        requests[a as usize]
            .arrival_time
            .total_cmp(&requests[b as usize].arrival_time)
            .then(a.cmp(&b))
    });

    let mut scheduler = Scheduler::new(config.scheduler.clone())?;
    let mut log = ScheduleLog::default();
    let mut clock: f64 = 0.0;
    let mut next_arrival = 0usize;
    let mut remaining = requests.len();
    let mut batch_index = 0usize;

    while remaining > 0 {
        while next_arrival < arrivals.len()
            && requests[arrivals[next_arrival] as usize].arrival_time <= clock
        {
            scheduler.add_request(arrivals[next_arrival]);
            next_arrival += 1;
        }
        let (entries, preemptions) =
            scheduler.get_next_batch(&mut requests, m_capacity, batch_index)?;
        if entries.is_empty() {
            if next_arrival < arrivals.len() {
                clock = requests[arrivals[next_arrival] as usize].arrival_time;
                continue;
            }
            let pending: Vec<RequestId> = requests
                .iter()
                .filter(|r| r.phase != Phase::Completed)
                .map(|r| r.id)
                .collect();
            return Err(SimError::StuckSchedule(pending));
        }
        let duration = cost.predict_batch_time(&entries);
        let start = clock;
        clock += duration;

        for e in &entries {
            let r = &mut requests[e.request_id as usize];
            let s_before = r.sequence_length();
            r.m += e.c;
            if e.c == s_before - e.m_before {
                r.generated += 1;
                if r.first_token_time.is_none() {
                    r.first_token_time = Some(clock);
                }
                if r.generated == r.output_len {
                    r.phase = Phase::Completed;
                    r.completion_time = Some(clock);
                    r.m = 0;
                    r.reserved = 0;
                    remaining -= 1;
                    log.completion_order.push(r.id);
                    let (i, o) = (r.input_len, r.output_len);
                    scheduler.finish_request(e.request_id, i, o);
                } else {
                    r.phase = Phase::Decode;
                }
            }
        }
        log.preemption_events.extend(preemptions);
        log.batches.push(Batch { index: batch_index, entries, start_time: start, duration });
        batch_index += 1;
    }

    let metrics = compute_metrics(&log, &workload.requests)?;
    Ok((log, metrics))
}

/// One request's trajectory re-derived purely from the log.
#[derive(Debug, Clone)]
struct Replayed {
    input_len: Tokens,
    output_len: Tokens,
    arrival_time: f64,
    m: Tokens,
    generated: Tokens,
    first_token_time: Option<f64>,
    completion_time: Option<f64>,
}

fn replay_base(workload: &[Request]) -> HashMap<RequestId, Replayed> {
    workload
        .iter()
        .map(|r| {
            (
                r.id,
                Replayed {
                    input_len: r.input_len,
                    output_len: r.output_len,
                    arrival_time: r.arrival_time,
                    m: 0,
                    generated: 0,
                    first_token_time: None,
                    completion_time: None,
                },
            )
        })
        .collect()
}

/// Preempted request ids grouped by batch index, for O(1) per-batch lookup.
fn evictions_by_batch(log: &ScheduleLog) -> HashMap<usize, Vec<RequestId>> {
    let mut by_batch: HashMap<usize, Vec<RequestId>> = HashMap::new();
    for ev in &log.preemption_events {
        by_batch.entry(ev.batch_index).or_default().push(ev.request_id);
    }
    by_batch
}

/// Recomputes every request's state trajectory from the log alone.
/// Generation is implied: a batch generates a token for a request iff its
/// processed chunk covers everything not yet cached.
fn replay(log: &ScheduleLog, workload: &[Request]) -> HashMap<RequestId, Replayed> {
    let mut state = replay_base(workload);
    let evictions = evictions_by_batch(log);
    for batch in &log.batches {
        for id in evictions.get(&batch.index).into_iter().flatten() {
            if let Some(r) = state.get_mut(id) {
                r.m = 0;
            }
        }
        let end = batch.start_time + batch.duration;
        for e in &batch.entries {
            let Some(r) = state.get_mut(&e.request_id) else { continue };
            let s_before = r.input_len + r.generated;
            let m_prev = r.m;
            r.m += e.c;
            if e.c == s_before.saturating_sub(m_prev) {
                r.generated += 1;
                r.first_token_time.get_or_insert(end);
                if r.generated == r.output_len {
                    r.completion_time = Some(end);
                    r.m = 0;
                }
            }
        }
    }
    state
}

/// Derives the metrics report from a completed log. Errors if any request
/// never finished according to the replayed trajectories.
pub fn compute_metrics(log: &ScheduleLog, workload: &[Request]) -> Result<MetricsReport, SimError> {
    let state = replay(log, workload);
    let mut unfinished: Vec<RequestId> =
        state.iter().filter(|(_, r)| r.completion_time.is_none()).map(|(&id, _)| id).collect();
    if !unfinished.is_empty() {
        unfinished.sort_unstable();
        return Err(SimError::IncompleteLog(unfinished));
    }

    let first_arrival = workload.iter().map(|r| r.arrival_time).fold(f64::INFINITY, f64::min);
    let last_completion = state
        .values()
        .map(|r| r.completion_time.unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let makespan = last_completion - first_arrival;
    let total_output: Tokens = workload.iter().map(|r| r.output_len).sum();
    let processed: Tokens = log.batches.iter().map(|b| b.total_tokens()).sum();

    let mut per_request: Vec<RequestMetrics> = Vec::with_capacity(workload.len());
    let mut ids: Vec<RequestId> = state.keys().copied().collect();
    ids.sort_unstable();
    for id in ids {
        let r = &state[&id];
        let completion = r.completion_time.unwrap();
        let first = r.first_token_time.unwrap();
        let tpot = (r.output_len > 1)
            .then(|| (completion - first) / (r.output_len - 1) as f64);
        per_request.push(RequestMetrics {
            id,
            latency: completion - r.arrival_time,
            ttft: first - r.arrival_time,
            tpot,
        });
    }

    // KV holdings at each batch end, replayed batch by batch with the total
    // maintained incrementally.
    let mut running = replay_base(workload);
    let evictions = evictions_by_batch(log);
    let mut kv_usage_timeline = Vec::with_capacity(log.batches.len());
    let mut usage: Tokens = 0;
    for batch in &log.batches {
        for id in evictions.get(&batch.index).into_iter().flatten() {
            if let Some(r) = running.get_mut(id) {
                usage -= r.m;
                r.m = 0;
            }
        }
        for e in &batch.entries {
            let Some(r) = running.get_mut(&e.request_id) else { continue };
            let s_before = r.input_len + r.generated;
            let m_prev = r.m;
            r.m += e.c;
            usage += e.c;
            if e.c == s_before.saturating_sub(m_prev) {
                r.generated += 1;
                if r.generated == r.output_len {
                    usage -= r.m;
                    r.m = 0;
                }
            }
        }
        kv_usage_timeline.push((batch.start_time + batch.duration, usage));
    }

    Ok(MetricsReport {
        makespan,
        tps: total_output as f64 / makespan,
        preemption_count: log.preemption_events.len(),
        refilled_tokens: log.refilled_tokens(),
        progress: total_output as f64 / processed as f64,
        avg_batch_size: log.batches.iter().map(|b| b.entries.len()).sum::<usize>() as f64
            / log.batches.len() as f64,
        latency: Aggregate::over(per_request.iter().map(|r| r.latency).collect()),
        ttft: Aggregate::over(per_request.iter().map(|r| r.ttft).collect()),
        tpot: Aggregate::over(per_request.iter().filter_map(|r| r.tpot).collect()),
        kv_usage_timeline,
        per_request,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TokenLimit { batch: usize, sum_c: Tokens, limit: Tokens },
    Memory { batch: usize, usage: Tokens, capacity: Tokens },
    TokensExceedAvailable { batch: usize, request: RequestId },
    StateMismatch { batch: usize, request: RequestId, logged_m: Tokens, replayed_m: Tokens },
    ClockRegression { batch: usize },
    BeforeArrival { batch: usize, request: RequestId },
    OverGeneration { batch: usize, request: RequestId },
    Incomplete { request: RequestId, generated: Tokens, output_len: Tokens },
    DuplicateEntry { batch: usize, request: RequestId },
}

/// Independent invariant checker: re-derives every trajectory from the log
/// and reports all violations of the batch, memory, and generation rules.
pub fn verify_log(
    log: &ScheduleLog,
    workload: &[Request],
    token_limit: Tokens,
    m_capacity: Tokens,
) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut state = replay_base(workload);
    let evictions = evictions_by_batch(log);
    let mut clock = f64::NEG_INFINITY;
    let mut usage: Tokens = 0;

    for batch in &log.batches {
        if batch.start_time < clock - 1e-9 {
            violations.push(Violation::ClockRegression { batch: batch.index });
        }
        clock = batch.start_time + batch.duration;

        let sum_c = batch.total_tokens();
        if sum_c > token_limit {
            violations.push(Violation::TokenLimit { batch: batch.index, sum_c, limit: token_limit });
        }
        for id in evictions.get(&batch.index).into_iter().flatten() {
            if let Some(r) = state.get_mut(id) {
                usage -= r.m;
                r.m = 0;
            }
        }
        let mut seen: HashSet<RequestId> = HashSet::with_capacity(batch.entries.len());
        for e in &batch.entries {
            if !seen.insert(e.request_id) {
                violations.push(Violation::DuplicateEntry { batch: batch.index, request: e.request_id });
                continue;
            }
            let Some(r) = state.get_mut(&e.request_id) else { continue };
            if batch.start_time < r.arrival_time - 1e-9 {
                violations.push(Violation::BeforeArrival { batch: batch.index, request: e.request_id });
            }
            if e.m_before != r.m {
                violations.push(Violation::StateMismatch {
                    batch: batch.index,
                    request: e.request_id,
                    logged_m: e.m_before,
                    replayed_m: r.m,
                });
            }
            let s_before = r.input_len + r.generated;
            let m_prev = r.m;
            let available = s_before.saturating_sub(m_prev);
            if e.c > available || e.c == 0 {
                violations.push(Violation::TokensExceedAvailable { batch: batch.index, request: e.request_id });
                continue;
            }
            r.m += e.c;
            usage += e.c;
            if e.c == s_before - m_prev {
                if r.generated >= r.output_len {
                    violations.push(Violation::OverGeneration { batch: batch.index, request: e.request_id });
                } else {
                    r.generated += 1;
                    if r.generated == r.output_len {
                        usage -= r.m;
                        r.m = 0;
                    }
                }
            }
        }
        if usage > m_capacity {
            violations.push(Violation::Memory { batch: batch.index, usage, capacity: m_capacity });
        }
    }
    let mut ids: Vec<RequestId> = state.keys().copied().collect();
    ids.sort_unstable();
    for id in ids {
        let r = &state[&id];
        if r.generated != r.output_len {
            violations.push(Violation::Incomplete {
                request: id,
                generated: r.generated,
                output_len: r.output_len,
            });
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{CostMode, LinearCostModel, NUM_FEATURES};
    use crate::domain::BatchEntry;
    use crate::workload::WorkloadSpec;

    /// Flat one-second-per-batch cost model.
    fn unit_cost() -> CostMode {
        let mut coefficients = [0.0; NUM_FEATURES];
        coefficients[0] = 1.0;
        CostMode::Calibrated { model: LinearCostModel::from_coefficients(coefficients) }
    }

    fn sim_config(preset: &str, m_capacity: Tokens) -> SimulationConfig {
        SimulationConfig {
            scheduler: SchedulerConfig::preset(preset).unwrap(),
            m_capacity,
            what_if: WhatIf::None,
        }
    }

    fn fixed_workload(i: Tokens, o: Tokens, w: u32) -> Workload {
        WorkloadSpec::fixed(i, o, w).generate(4096).unwrap()
    }

    #[test]
    fn single_request_hand_trace() {
        let workload = fixed_workload(2, 3, 1);
        let (log, metrics) = run(&workload, &sim_config("vllm", 100), &unit_cost()).unwrap();
        // Prefill batch then two decode batches, one second each.
        assert_eq!(log.batches.len(), 3);
        assert_eq!(log.batches[0].entries[0].c, 2);
        assert_eq!(log.batches[1].entries[0].c, 1);
        assert_eq!(log.batches[1].entries[0].m_before, 2);
        assert_eq!(log.batches[2].entries[0].m_before, 3);
        assert!((metrics.ttft.mean - 1.0).abs() < 1e-12);
        assert!((metrics.tpot.mean - 1.0).abs() < 1e-12);
        assert!((metrics.makespan - 3.0).abs() < 1e-12);
        assert_eq!(metrics.preemption_count, 0);
        assert_eq!(log.completion_order, vec![0]);
    }

    #[test]
    fn ample_memory_never_preempts() {
        for preset in ["vllm", "sarathi", "orca", "vllm-srf", "sarathi-pf"] {
            let workload = fixed_workload(64, 8, 32);
            let (log, metrics) = run(&workload, &sim_config(preset, 100_000), &unit_cost()).unwrap();
            assert_eq!(metrics.preemption_count, 0, "{preset}");
            assert!(verify_log(&log, &workload.requests, 4096, 100_000).is_empty(), "{preset}");
        }
    }

    #[test]
    fn sarathi_respects_its_own_token_limit() {
        let workload = fixed_workload(1024, 4, 8);
        let (log, _) = run(&workload, &sim_config("sarathi", 100_000), &unit_cost()).unwrap();
        for batch in &log.batches {
            assert!(batch.total_tokens() <= 512);
        }
        assert!(verify_log(&log, &workload.requests, 512, 100_000).is_empty());
    }

    #[test]
    fn tight_memory_forces_preemption_and_refill() {
        let workload = fixed_workload(8, 8, 8);
        let (log, metrics) = run(&workload, &sim_config("vllm", 40), &unit_cost()).unwrap();
        assert!(metrics.preemption_count > 0);
        assert_eq!(metrics.refilled_tokens, log.refilled_tokens());
        assert!(metrics.refilled_tokens > 0);
        assert!(verify_log(&log, &workload.requests, 4096, 40).is_empty());
    }

    #[test]
    fn infinite_m_removes_preemptions() {
        let workload = fixed_workload(8, 8, 8);
        let mut config = sim_config("vllm", 40);
        let (_, finite) = run(&workload, &config, &unit_cost()).unwrap();
        config.what_if = WhatIf::InfiniteM;
        let (log, infinite) = run(&workload, &config, &unit_cost()).unwrap();
        assert_eq!(infinite.preemption_count, 0);
        assert!(infinite.makespan <= finite.makespan + 1e-12);
        assert!(verify_log(&log, &workload.requests, 4096, Tokens::MAX).is_empty());
    }

    #[test]
    fn oversized_request_rejected_upfront() {
        let workload =
            Workload { requests: vec![Request::new(0, 0.0, 4096, 2)], clamp_warnings: 0 };
        let err = run(&workload, &sim_config("vllm", 100_000), &unit_cost());
        assert!(matches!(err, Err(SimError::WorkloadRejected(ids)) if ids == vec![0]));
    }

    #[test]
    fn runs_are_deterministic() {
        let workload = fixed_workload(16, 8, 16);
        let (a, _) = run(&workload, &sim_config("sarathi", 200), &unit_cost()).unwrap();
        let (b, _) = run(&workload, &sim_config("sarathi", 200), &unit_cost()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn late_arrival_advances_clock() {
        let mut workload = fixed_workload(4, 2, 2);
        workload.requests[1].arrival_time = 10.0;
        let (log, metrics) = run(&workload, &sim_config("vllm", 100_000), &unit_cost()).unwrap();
        let second_start = log
            .batches
            .iter()
            .find(|b| b.entries.iter().any(|e| e.request_id == 1))
            .unwrap()
            .start_time;
        assert!(second_start >= 10.0);
        assert!(metrics.makespan >= 10.0);
    }

    #[test]
    fn single_token_outputs_excluded_from_tpot() {
        let workload = fixed_workload(4, 1, 3);
        let (_, metrics) = run(&workload, &sim_config("vllm", 100_000), &unit_cost()).unwrap();
        assert!(metrics.per_request.iter().all(|r| r.tpot.is_none()));
        assert_eq!(metrics.tpot.mean, 0.0);
    }

    #[test]
    fn progress_and_tps_definitions() {
        let workload = fixed_workload(4, 3, 2);
        let (log, metrics) = run(&workload, &sim_config("vllm", 100_000), &unit_cost()).unwrap();
        let processed: Tokens = log.batches.iter().map(|b| b.total_tokens()).sum();
        assert!((metrics.progress - 6.0 / processed as f64).abs() < 1e-12);
        assert!((metrics.tps - 6.0 / metrics.makespan).abs() < 1e-12);
        assert!(metrics.progress <= 1.0);
    }

    #[test]
    fn incomplete_log_lists_unfinished() {
        let workload = fixed_workload(4, 2, 2);
        let (mut log, _) = run(&workload, &sim_config("vllm", 100_000), &unit_cost()).unwrap();
        log.batches.pop();
        let err = compute_metrics(&log, &workload.requests);
        assert!(matches!(err, Err(SimError::IncompleteLog(_))));
    }

    #[test]
    fn verifier_flags_token_limit_mutation() {
        let workload = fixed_workload(4, 2, 1);
        let (mut log, _) = run(&workload, &sim_config("vllm", 100_000), &unit_cost()).unwrap();
        log.batches[0].entries[0].c = 4097;
        let violations = verify_log(&log, &workload.requests, 4096, 100_000);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::TokenLimit { batch: 0, sum_c: 4097, .. })));
    }

    #[test]
    fn verifier_flags_short_refill_claiming_generation() {
        // A request with I=4 and one generated token is preempted; the forged
        // log refills only 3 of its 5 owed tokens yet continues decoding as
        // if the position were regenerated.
        let workload = fixed_workload(4, 3, 1);
        let mk = |index: usize, c: Tokens, m_before: Tokens, phase| Batch {
            index,
            entries: vec![BatchEntry { request_id: 0, c, m_before, phase_at_batch: phase }],
            start_time: index as f64,
            duration: 1.0,
        };
        let log = ScheduleLog {
            batches: vec![
                mk(0, 4, 0, Phase::Prefill),
                mk(1, 3, 0, Phase::Prefill),
                mk(2, 1, 5, Phase::Decode),
                mk(3, 1, 6, Phase::Decode),
            ],
            preemption_events: vec![crate::domain::PreemptionEvent {
                batch_index: 1,
                request_id: 0,
                m_discarded: 4,
            }],
            completion_order: vec![0],
        };
        let violations = verify_log(&log, &workload.requests, 4096, 100_000);
        assert!(
            violations
                .iter()
                .any(|v| matches!(v, Violation::StateMismatch { .. } | Violation::TokensExceedAvailable { .. })),
            "{violations:?}"
        );
    }

    #[test]
    fn verifier_accepts_all_presets() {
        for preset in ["vllm", "sarathi", "sarathi-cs", "vllm-hy", "sarathi-nohy", "vllm-srf"] {
            let workload = fixed_workload(16, 4, 12);
            let config = sim_config(preset, 300);
            let (log, _) = run(&workload, &config, &unit_cost()).unwrap();
            let violations = verify_log(
                &log,
                &workload.requests,
                config.scheduler.token_limit,
                config.m_capacity,
            );
            assert!(violations.is_empty(), "{preset}: {violations:?}");
        }
    }

    #[test]
    fn kv_timeline_matches_hand_trace() {
        let workload = fixed_workload(2, 3, 1);
        let (_, metrics) = run(&workload, &sim_config("vllm", 100), &unit_cost()).unwrap();
        // After prefill: 2 cached; after first decode: 3; completion frees all.
        assert_eq!(metrics.kv_usage_timeline, vec![(1.0, 2), (2.0, 3), (3.0, 0)]);
    }
}
