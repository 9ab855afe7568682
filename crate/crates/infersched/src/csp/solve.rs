//! Exact depth-first branch-and-bound over batch compositions for small
//! instances, with dominance memoization and preset warm starts. Evaluates
//! the true cost model per batch, so it can prove optimality claims the
//! linear LP surrogate cannot express.

use super::{BatchPlan, CspError, CspInstance, Optimality, ScheduleSolution};
use crate::costmodel::CostMode;
use crate::domain::{
    Batch, BatchEntry, Phase, PreemptionEvent, Request, ScheduleLog, Tokens,
};
use crate::scheduler::SchedulerConfig;
use crate::simulator::{self, SimulationConfig, WhatIf};
use crate::workload::Workload;
use std::collections::HashMap;

/// Chunk sizes are enumerated exhaustively up to this remainder; above it
/// only maximal chunks (full remainder, budget cap, memory cap) are tried.
const FULL_ENUM: Tokens = 8;

#[derive(Debug, Clone)]
pub struct SolveLimits {
    pub max_requests: usize,
    pub max_total_output: Tokens,
    pub node_limit: u64,
    /// Seed the incumbent with simulated preset schedules.
    pub warm_start: bool,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_requests: 6,
            max_total_output: 32,
            node_limit: 20_000_000,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ReqState {
    m: Tokens,
    generated: Tokens,
}

struct Searcher<'a> {
    instance: &'a CspInstance,
    cost: &'a CostMode,
    limits: &'a SolveLimits,
    /// Admissible per-token and per-batch lower-bound coefficients.
    lb_gamma: f64,
    lb_alpha: f64,
    best_value: f64,
    best_plan: Option<Vec<BatchPlan>>,
    /// Best (cost, depth) at which each canonical state was reached.
    seen: HashMap<Vec<(Tokens, Tokens, Tokens, Tokens)>, (f64, usize)>,
    nodes: u64,
    exhausted: bool,
    /// Stop as soon as any solution beats the initial incumbent.
    first_hit: bool,
    hit: bool,
}

impl<'a> Searcher<'a> {
    fn new(instance: &'a CspInstance, cost: &'a CostMode, limits: &'a SolveLimits) -> Self {
        let min_batch = cost.predict_batch_time(&[BatchEntry {
            request_id: 0,
            c: 1,
            m_before: 0,
            phase_at_batch: Phase::Prefill,
        }]);
        let (lb_gamma, lb_alpha) = match cost {
            CostMode::Calibrated { model } => {
                (model.coefficients[0].max(0.0), model.coefficients[1].max(0.0))
            }
            CostMode::Theoretical { .. } => (min_batch.max(0.0), 0.0),
        };
        Searcher {
            instance,
            cost,
            limits,
            lb_gamma,
            lb_alpha,
            best_value: f64::INFINITY,
            best_plan: None,
            seen: HashMap::new(),
            nodes: 0,
            exhausted: true,
            first_hit: false,
            hit: false,
        }
    }

    fn canon(&self, state: &[ReqState]) -> Vec<(Tokens, Tokens, Tokens, Tokens)> {
        let mut key: Vec<_> = state
            .iter()
            .zip(&self.instance.requests)
            .map(|(s, r)| (r.input_len, r.output_len, s.m, s.generated))
            .collect();
        key.sort_unstable();
        key
    }

    /// Admissible remaining-cost bound: every request still has to process at
    /// least its uncached peak demand, in at least as many batches as the
    /// longest decode tail requires.
    fn lower_bound(&self, state: &[ReqState]) -> f64 {
        let mut remaining_tokens: Tokens = 0;
        let mut max_gens: Tokens = 0;
        for (s, r) in state.iter().zip(&self.instance.requests) {
            if s.generated == r.output_len {
                continue;
            }
            let peak = r.input_len + r.output_len - 1;
            remaining_tokens += peak.saturating_sub(s.m);
            max_gens = max_gens.max(r.output_len - s.generated);
        }
        let min_batches = max_gens.max(remaining_tokens.div_ceil(self.instance.token_limit));
        self.lb_gamma * min_batches as f64 + self.lb_alpha * remaining_tokens as f64
    }

    fn chunk_candidates(&self, avail: Tokens, budget: Tokens, mem_slack: Tokens) -> Vec<Tokens> {
        let cap = avail.min(budget);
        if cap == 0 {
            return Vec::new();
        }
        if cap <= FULL_ENUM {
            return (1..=cap).rev().collect();
        }
        let mut cands = vec![cap];
        if mem_slack < cap && mem_slack > 0 {
            cands.push(mem_slack);
        }
        cands
    }

    fn search(&mut self, state: &mut Vec<ReqState>, plan: &mut Vec<BatchPlan>, cost_so_far: f64) {
        if self.first_hit && self.hit {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.limits.node_limit {
            self.exhausted = false;
            return;
        }
        let done = state
            .iter()
            .zip(&self.instance.requests)
            .all(|(s, r)| s.generated == r.output_len);
        if done {
            if cost_so_far < self.best_value - 1e-15 {
                self.best_value = cost_so_far;
                self.best_plan = Some(plan.clone());
                self.hit = true;
            }
            return;
        }
        if plan.len() >= self.instance.j_max {
            return;
        }
        if cost_so_far + self.lower_bound(state) >= self.best_value - 1e-15 {
            return;
        }
        let key = self.canon(state);
        if let Some(&(seen_cost, seen_depth)) = self.seen.get(&key) {
            if seen_cost <= cost_so_far + 1e-15 && seen_depth <= plan.len() {
                return;
            }
        }
        self.seen.insert(key, (cost_so_far, plan.len()));

        // Enumerate batch compositions request by request.
        let mut actions: Vec<Action> = Vec::with_capacity(state.len());
        self.compose(0, state, plan, cost_so_far, &mut actions);
    }

    fn compose(
        &mut self,
        i: usize,
        state: &mut Vec<ReqState>,
        plan: &mut Vec<BatchPlan>,
        cost_so_far: f64,
        actions: &mut Vec<Action>,
    ) {
        if self.first_hit && self.hit {
            return;
        }
        if i == state.len() {
            self.apply_batch(state, plan, cost_so_far, actions);
            return;
        }
        let r = self.instance.requests[i];
        let st = state[i];
        let completed = st.generated == r.output_len;
        if completed {
            actions.push(Action::Skip);
            self.compose(i + 1, state, plan, cost_so_far, actions);
            actions.pop();
            return;
        }
        let budget_used: Tokens = actions.iter().map(Action::c).sum();
        let budget = self.instance.token_limit - budget_used;
        let avail = r.input_len + st.generated - st.m;
        // Memory headroom assuming every other request keeps its cache.
        let total_m: Tokens = state.iter().map(|s| s.m).sum();
        let mem_slack = self.instance.m_capacity.saturating_sub(total_m);
        for c in self.chunk_candidates(avail, budget, mem_slack) {
            actions.push(Action::Process(c));
            self.compose(i + 1, state, plan, cost_so_far, actions);
            actions.pop();
        }
        if st.m > 0 && !self.instance.options.forbid_eviction {
            actions.push(Action::Evict);
            self.compose(i + 1, state, plan, cost_so_far, actions);
            actions.pop();
        }
        actions.push(Action::Skip);
        self.compose(i + 1, state, plan, cost_so_far, actions);
        actions.pop();
    }

    fn apply_batch(
        &mut self,
        state: &mut Vec<ReqState>,
        plan: &mut Vec<BatchPlan>,
        cost_so_far: f64,
        actions: &[Action],
    ) {
        let sum_c: Tokens = actions.iter().map(Action::c).sum();
        if sum_c == 0 {
            return;
        }
        let mut entries: Vec<BatchEntry> = Vec::new();
        let mut batch = BatchPlan::default();
        let saved = state.clone();
        for (i, action) in actions.iter().enumerate() {
            let r = self.instance.requests[i];
            match *action {
                Action::Skip => {}
                Action::Evict => {
                    batch.evictions.push(i);
                    state[i].m = 0;
                }
                Action::Process(c) => {
                    let st = state[i];
                    let s_before = r.input_len + st.generated;
                    let avail = s_before - st.m;
                    let phase = if avail == 1 && st.generated >= 1 {
                        Phase::Decode
                    } else {
                        Phase::Prefill
                    };
                    entries.push(BatchEntry {
                        request_id: i as u32,
                        c,
                        m_before: st.m,
                        phase_at_batch: phase,
                    });
                    batch.entries.push((i, c));
                    if c == avail {
                        state[i].generated += 1;
                        if state[i].generated == r.output_len {
                            state[i].m = 0;
                        } else {
                            state[i].m += c;
                        }
                    } else {
                        state[i].m += c;
                    }
                }
            }
        }
        let usage: Tokens = state.iter().map(|s| s.m).sum();
        if usage <= self.instance.m_capacity {
            let duration = self.cost.predict_batch_time(&entries);
            plan.push(batch);
            self.search(state, plan, cost_so_far + duration);
            plan.pop();
        }
        *state = saved;
    }
}

#[derive(Debug, Clone, Copy)]
enum Action {
    Skip,
    Evict,
    Process(Tokens),
}

impl Action {
    fn c(&self) -> Tokens {
        match self {
            Action::Process(c) => *c,
            _ => 0,
        }
    }
}

fn check_caps(instance: &CspInstance, limits: &SolveLimits) -> Result<(), CspError> {
    if instance.requests.iter().any(|r| r.arrival_time > 0.0) {
        return Err(CspError::OnlineUnsupported);
    }
    if instance.requests.len() > limits.max_requests {
        return Err(CspError::CapsExceeded(format!(
            "{} requests > {}",
            instance.requests.len(),
            limits.max_requests
        )));
    }
    let total_o: Tokens = instance.requests.iter().map(|r| r.output_len).sum();
    if total_o > limits.max_total_output {
        return Err(CspError::CapsExceeded(format!(
            "total output {total_o} > {}",
            limits.max_total_output
        )));
    }
    Ok(())
}

fn instance_workload(instance: &CspInstance) -> Workload {
    let requests = instance
        .requests
        .iter()
        .enumerate()
        .map(|(i, r)| Request::new(i as u32, r.arrival_time, r.input_len, r.output_len))
        .collect();
    Workload { requests, clamp_warnings: 0 }
}

/// Simulates scheduler presets on the instance and converts any schedule
/// fitting the horizon into a warm-start plan.
fn warm_start_plans(instance: &CspInstance, cost: &CostMode) -> Vec<(Vec<BatchPlan>, f64)> {
    let workload = instance_workload(instance);
    let mut plans = Vec::new();
    let presets: &[&str] = if instance.options.forbid_eviction {
        &["vllm-pf", "sarathi-pf", "orca"]
    } else {
        &["vllm", "sarathi", "vllm-pf", "sarathi-pf"]
    };
    for preset in presets {
        let Ok(mut scheduler_config) = SchedulerConfig::preset(preset) else { continue };
        scheduler_config.token_limit = scheduler_config.token_limit.min(instance.token_limit);
        scheduler_config.context_size = instance.context_size;
        let config = SimulationConfig {
            scheduler: scheduler_config,
            m_capacity: instance.m_capacity,
            what_if: WhatIf::None,
        };
        let Ok((log, _)) = simulator::run(&workload, &config, cost) else { continue };
        if log.batches.len() > instance.j_max {
            continue;
        }
        let plan: Vec<BatchPlan> = log
            .batches
            .iter()
            .map(|b| BatchPlan {
                entries: b.entries.iter().map(|e| (e.request_id as usize, e.c)).collect(),
                evictions: log
                    .preemption_events
                    .iter()
                    .filter(|ev| ev.batch_index == b.index)
                    .map(|ev| ev.request_id as usize)
                    .collect(),
            })
            .collect();
        let value: f64 = log.batches.iter().map(|b| b.duration).sum();
        plans.push((plan, value));
    }
    plans
}

/// Finds a minimum-total-duration schedule by exhaustive branch-and-bound.
/// Chunk sizes above a small remainder are restricted to maximal values
/// (full remainder or capacity caps), which is exact for monotone costs on
/// the tiny instances this solver accepts.
pub fn solve_exact(
    instance: &CspInstance,
    cost: &CostMode,
    limits: &SolveLimits,
) -> Result<ScheduleSolution, CspError> {
    check_caps(instance, limits)?;
    let mut searcher = Searcher::new(instance, cost, limits);
    if limits.warm_start {
        for (plan, value) in warm_start_plans(instance, cost) {
            if value < searcher.best_value {
                searcher.best_value = value;
                searcher.best_plan = Some(plan);
            }
        }
    }
    let mut state: Vec<ReqState> =
        vec![ReqState { m: 0, generated: 0 }; instance.requests.len()];
    let mut plan = Vec::new();
    searcher.search(&mut state, &mut plan, 0.0);
    match searcher.best_plan {
        Some(plan) => Ok(ScheduleSolution {
            plan,
            objective: searcher.best_value,
            status: if searcher.exhausted {
                Optimality::ProvedOptimal
            } else {
                Optimality::Feasible
            },
        }),
        None => Err(CspError::Infeasible),
    }
}

/// True iff a schedule with total cost at most `latency_cap` exists.
pub fn existence_query(
    instance: &CspInstance,
    cost: &CostMode,
    limits: &SolveLimits,
    latency_cap: f64,
) -> Result<bool, CspError> {
    check_caps(instance, limits)?;
    let mut searcher = Searcher::new(instance, cost, limits);
    searcher.best_value = latency_cap * (1.0 + 1e-12) + 1e-15;
    searcher.first_hit = true;
    if limits.warm_start {
        for (plan, value) in warm_start_plans(instance, cost) {
            if value < searcher.best_value {
                searcher.best_plan = Some(plan);
                searcher.hit = true;
                return Ok(true);
            }
        }
    }
    let mut state: Vec<ReqState> =
        vec![ReqState { m: 0, generated: 0 }; instance.requests.len()];
    let mut plan = Vec::new();
    searcher.search(&mut state, &mut plan, 0.0);
    Ok(searcher.hit)
}

/// Converts a solved plan into a ScheduleLog with durations from the cost
/// model, suitable for the shared verifier and metrics.
pub fn solution_to_log(
    solution: &ScheduleSolution,
    instance: &CspInstance,
    cost: &CostMode,
) -> Result<ScheduleLog, CspError> {
    let w = instance.requests.len();
    let mut m: Vec<Tokens> = vec![0; w];
    let mut generated: Vec<Tokens> = vec![0; w];
    let mut log = ScheduleLog::default();
    let mut clock = 0.0;
    for (index, batch) in solution.plan.iter().enumerate() {
        for &i in &batch.evictions {
            if i >= w {
                return Err(CspError::UnknownRequest(i as u32));
            }
            if m[i] > 0 {
                log.preemption_events.push(PreemptionEvent {
                    batch_index: index,
                    request_id: i as u32,
                    m_discarded: m[i],
                });
                m[i] = 0;
            }
        }
        let mut entries = Vec::with_capacity(batch.entries.len());
        for &(i, c) in &batch.entries {
            if i >= w {
                return Err(CspError::UnknownRequest(i as u32));
            }
            let r = instance.requests[i];
            let s_before = r.input_len + generated[i];
            let avail = s_before - m[i];
            let phase = if avail == 1 && generated[i] >= 1 { Phase::Decode } else { Phase::Prefill };
            entries.push(BatchEntry {
                request_id: i as u32,
                c,
                m_before: m[i],
                phase_at_batch: phase,
            });
            if c == avail {
                generated[i] += 1;
                if generated[i] == r.output_len {
                    m[i] = 0;
                    log.completion_order.push(i as u32);
                } else {
                    m[i] += c;
                }
            } else {
                m[i] += c;
            }
        }
        let duration = cost.predict_batch_time(&entries);
        log.batches.push(Batch { index, entries, start_time: clock, duration });
        clock += duration;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{LinearCostModel, NUM_FEATURES};
    use crate::csp::{build_instance, CostSurrogate, CspOptions};
    use crate::simulator::verify_log;
    use crate::workload::WorkloadSpec;

    fn stub_cost() -> CostMode {
        let mut coefficients = [0.0; NUM_FEATURES];
        coefficients[0] = 1.0;
        coefficients[1] = 0.01;
        coefficients[4] = 0.001;
        CostMode::Calibrated { model: LinearCostModel::from_coefficients(coefficients) }
    }

    fn instance(i: Tokens, o: Tokens, w: u32, c: Tokens, m: Tokens) -> CspInstance {
        let workload = WorkloadSpec::fixed(i, o, w).generate(4096).unwrap();
        build_instance(
            &workload,
            CostSurrogate::from_cost(&stub_cost()),
            c,
            m,
            4096,
            CspOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn single_token_request_uses_one_batch() {
        let solution = solve_exact(&instance(1, 1, 1, 4096, 100), &stub_cost(), &Default::default())
            .unwrap();
        assert_eq!(solution.status, Optimality::ProvedOptimal);
        assert_eq!(solution.plan.len(), 1);
        assert_eq!(solution.plan[0].entries, vec![(0, 1)]);
        assert!((solution.objective - 1.01).abs() < 1e-12);
    }

    #[test]
    fn single_request_matches_closed_form() {
        // I=5, O=3, C=2: chunks 2+2+1 (third generates), then 2 decodes.
        let solution =
            solve_exact(&instance(5, 3, 1, 2, 100), &stub_cost(), &Default::default()).unwrap();
        assert_eq!(solution.status, Optimality::ProvedOptimal);
        assert_eq!(solution.plan.len(), 5);
        assert_eq!(solution.preemption_count(), 0);
        // Durations: prefill chunks then decodes reading the growing cache.
        let expected: f64 = [
            1.0 + 0.02,
            1.0 + 0.02,
            1.0 + 0.01,
            1.0 + 0.01 + 0.001 * 5.0,
            1.0 + 0.01 + 0.001 * 6.0,
        ]
        .iter()
        .sum();
        assert!((solution.objective - expected).abs() < 1e-9, "{}", solution.objective);
    }

    #[test]
    fn solver_lower_bounds_presets() {
        let inst = instance(4, 3, 3, 8, 12);
        let cost = stub_cost();
        let solution = solve_exact(&inst, &cost, &Default::default()).unwrap();
        let workload = WorkloadSpec::fixed(4, 3, 3).generate(4096).unwrap();
        for preset in ["vllm", "sarathi", "vllm-pf"] {
            let mut sc = SchedulerConfig::preset(preset).unwrap();
            sc.token_limit = sc.token_limit.min(8);
            let config = SimulationConfig { scheduler: sc, m_capacity: 12, what_if: WhatIf::None };
            let (_, metrics) = simulator::run(&workload, &config, &cost).unwrap();
            assert!(
                solution.objective <= metrics.makespan + 1e-9,
                "{preset}: {} > {}",
                solution.objective,
                metrics.makespan
            );
        }
    }

    #[test]
    fn forbidding_eviction_never_improves() {
        let mut inst = instance(4, 3, 3, 4096, 10);
        let free = solve_exact(&inst, &stub_cost(), &Default::default()).unwrap();
        inst.options.forbid_eviction = true;
        let pf = solve_exact(&inst, &stub_cost(), &Default::default()).unwrap();
        assert!(free.objective <= pf.objective + 1e-12);
        assert_eq!(pf.preemption_count(), 0);
    }

    #[test]
    fn existence_query_brackets_optimum() {
        let inst = instance(3, 2, 2, 4096, 100);
        let cost = stub_cost();
        let opt = solve_exact(&inst, &cost, &Default::default()).unwrap().objective;
        let limits = SolveLimits { warm_start: false, ..Default::default() };
        assert!(existence_query(&inst, &cost, &limits, opt * 1.0001).unwrap());
        assert!(!existence_query(&inst, &cost, &limits, opt * 0.9999).unwrap());
    }

    #[test]
    fn solution_log_passes_verifier() {
        for (i, o, w, cap, m) in [(1, 1, 1, 4096, 100), (5, 3, 1, 2, 100), (4, 3, 3, 8, 12)] {
            let inst = instance(i, o, w, cap, m);
            let cost = stub_cost();
            let solution = solve_exact(&inst, &cost, &Default::default()).unwrap();
            let log = solution_to_log(&solution, &inst, &cost).unwrap();
            let workload = instance_workload(&inst);
            let violations = verify_log(&log, &workload.requests, cap, m);
            assert!(violations.is_empty(), "({i},{o},{w}): {violations:?}");
        }
    }

    #[test]
    fn caps_are_enforced() {
        let inst = instance(1, 8, 7, 4096, 100_000);
        assert!(matches!(
            solve_exact(&inst, &stub_cost(), &Default::default()),
            Err(CspError::CapsExceeded(_))
        ));
        let inst = instance(1, 8, 5, 4096, 100_000);
        assert!(matches!(
            solve_exact(&inst, &stub_cost(), &SolveLimits { max_total_output: 16, ..Default::default() }),
            Err(CspError::CapsExceeded(_))
        ));
    }

    #[test]
    fn online_instances_are_refused() {
        let mut workload = WorkloadSpec::fixed(2, 2, 2).generate(4096).unwrap();
        workload.requests[1].arrival_time = 5.0;
        let inst = build_instance(
            &workload,
            CostSurrogate::from_cost(&stub_cost()),
            4096,
            100,
            4096,
            CspOptions::default(),
        )
        .unwrap();
        assert!(matches!(
            solve_exact(&inst, &stub_cost(), &Default::default()),
            Err(CspError::OnlineUnsupported)
        ));
    }

    /// Plain exhaustive enumeration over all (c, e) assignments per batch,
    /// evaluating the conditional rules directly. Independent of the
    /// branch-and-bound machinery.
    fn brute_force(inst: &CspInstance, cost: &CostMode, horizon: usize) -> f64 {
        #[derive(Clone)]
        struct St {
            m: Vec<Tokens>,
            gen: Vec<Tokens>,
        }
        fn recurse(
            inst: &CspInstance,
            cost: &CostMode,
            st: &St,
            depth: usize,
            horizon: usize,
            acc: f64,
            best: &mut f64,
        ) {
            let w = inst.requests.len();
            if (0..w).all(|i| st.gen[i] == inst.requests[i].output_len) {
                *best = best.min(acc);
                return;
            }
            if depth == horizon || acc >= *best {
                return;
            }
            // Enumerate every combination of per-request (evict, c).
            let mut options: Vec<Vec<(bool, Tokens)>> = Vec::new();
            for i in 0..w {
                let r = inst.requests[i];
                if st.gen[i] == r.output_len {
                    options.push(vec![(false, 0)]);
                    continue;
                }
                let avail = r.input_len + st.gen[i] - st.m[i];
                let mut opts: Vec<(bool, Tokens)> = (0..=avail).rev().map(|c| (false, c)).collect();
                if st.m[i] > 0 {
                    opts.push((true, 0));
                }
                options.push(opts);
            }
            let mut idx = vec![0usize; w];
            loop {
                let choice: Vec<(bool, Tokens)> =
                    (0..w).map(|i| options[i][idx[i]]).collect();
                let sum_c: Tokens = choice.iter().map(|&(_, c)| c).sum();
                if sum_c >= 1 && sum_c <= inst.token_limit {
                    let mut next = st.clone();
                    let mut entries = Vec::new();
                    for i in 0..w {
                        let (evict, c) = choice[i];
                        let r = inst.requests[i];
                        if evict {
                            next.m[i] = 0;
                            continue;
                        }
                        if c == 0 {
                            continue;
                        }
                        let s_before = r.input_len + st.gen[i];
                        let avail = s_before - st.m[i];
                        let phase = if avail == 1 && st.gen[i] >= 1 {
                            Phase::Decode
                        } else {
                            Phase::Prefill
                        };
                        entries.push(BatchEntry {
                            request_id: i as u32,
                            c,
                            m_before: st.m[i],
                            phase_at_batch: phase,
                        });
                        // Generation rule: chunk covers the whole remainder.
                        if c == avail {
                            next.gen[i] += 1;
                            if next.gen[i] == r.output_len {
                                next.m[i] = 0;
                            } else {
                                next.m[i] += c;
                            }
                        } else {
                            next.m[i] += c;
                        }
                    }
                    if next.m.iter().sum::<Tokens>() <= inst.m_capacity {
                        let dur = cost.predict_batch_time(&entries);
                        recurse(inst, cost, &next, depth + 1, horizon, acc + dur, best);
                    }
                }
                // Advance the mixed-radix counter.
                let mut i = 0;
                loop {
                    if i == w {
                        return;
                    }
                    idx[i] += 1;
                    if idx[i] < options[i].len() {
                        break;
                    }
                    idx[i] = 0;
                    i += 1;
                }
            }
        }
        let st = St {
            m: vec![0; inst.requests.len()],
            gen: vec![0; inst.requests.len()],
        };
        let mut best = f64::INFINITY;
        recurse(inst, cost, &st, 0, horizon, 0.0, &mut best);
        best
    }

    #[test]
    fn matches_brute_force_on_tiny_instances() {
        let cost = stub_cost();
        for (i, o, w, cap, m) in [
            (1, 1, 2, 4096, 100),
            (2, 2, 2, 4096, 3),
            (3, 2, 2, 2, 4),
            (3, 2, 1, 4096, 3),
            (2, 2, 2, 2, 2),
        ] {
            let mut inst = instance(i, o, w, cap, m);
            let horizon = inst.j_max.min(8);
            inst.j_max = horizon;
            let oracle = brute_force(&inst, &cost, horizon);
            match solve_exact(&inst, &cost, &Default::default()) {
                Ok(solution) => {
                    assert!(
                        (solution.objective - oracle).abs() < 1e-9,
                        "({i},{o},{w},{cap},{m}): solver {} oracle {oracle}",
                        solution.objective
                    );
                }
                Err(CspError::Infeasible) => {
                    assert!(oracle.is_infinite(), "({i},{o},{w},{cap},{m})");
                }
                Err(e) => panic!("{e}"),
            }
        }
    }
}
