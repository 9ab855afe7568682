//! Batch scheduler: builds the next iteration's batch from waiting and
//! running requests under token-budget and KV-memory constraints, with
//! pluggable insertion order, reservation accounting, and replacement policy.

mod histogram;

pub use histogram::OutputHistogram;

use crate::domain::{
    BatchEntry, DomainError, Phase, PreemptionEvent, Request, RequestId, Tokens,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InsertionPolicy {
    /// Waiting requests (including preempted refills) before running decodes.
    PrefillFirst,
    /// Running decodes, then running prefills, then waiting requests.
    DecodeFirst,
    /// Single group sorted ascending by input length.
    RankByInput,
    /// Single group sorted ascending by output length (needs ground truth).
    RankByOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReplacementPolicy {
    /// Newest request first: evict the latest arrival.
    Nrf,
    /// Smallest refill first: evict the request with the fewest cached KVs.
    Srf,
    /// Never evict; contenders wait for capacity.
    PreemptionFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReservationMode {
    /// Reserve the current sequence length at admission; cache grows per decode.
    InputOnly,
    /// Reserve the peak demand I + O - 1 (requires knowing O up front).
    PeakDemand,
    /// Reserve the full context size.
    FullContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub insertion_policy: InsertionPolicy,
    pub replacement_policy: ReplacementPolicy,
    pub reservation_mode: ReservationMode,
    pub hybrid_batching: bool,
    pub chunked_prefill: bool,
    /// Per-batch token budget C.
    pub token_limit: Tokens,
    pub context_size: Tokens,
    pub defer_with_histogram: bool,
    /// Allows policies that read a request's true output length.
    pub hypothetical: bool,
}

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("unknown scheduler preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid scheduler config: {0}")]
    InvalidConfig(String),
    #[error("policy reads true output lengths; enable hypothetical mode to use it")]
    HypotheticalRequired,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

pub const PRESET_NAMES: [&str; 7] =
    ["vllm", "sarathi", "sarathi-cs", "sarathi-nocp", "vllm-hy", "sarathi-nohy", "orca"];

pub const PRESET_SUFFIXES: [&str; 5] = ["-pf", "-srf", "-srf-hist", "-rank-i", "-rank-o"];

impl SchedulerConfig {
    pub fn validate(&self) -> Result<(), SchedulerError> {
        if self.replacement_policy == ReplacementPolicy::PreemptionFree
            && self.reservation_mode == ReservationMode::InputOnly
        {
            return Err(SchedulerError::InvalidConfig(
                "preemption-free operation needs a reservation covering peak demand".into(),
            ));
        }
        if self.chunked_prefill && !self.hybrid_batching {
            return Err(SchedulerError::InvalidConfig(
                "chunked prefill requires hybrid batching".into(),
            ));
        }
        if !self.hypothetical {
            if self.insertion_policy == InsertionPolicy::RankByOutput {
                return Err(SchedulerError::HypotheticalRequired);
            }
            if self.reservation_mode == ReservationMode::PeakDemand {
                return Err(SchedulerError::HypotheticalRequired);
            }
        }
        if self.token_limit == 0 || self.context_size == 0 {
            return Err(SchedulerError::InvalidConfig(
                "token limit and context size must be positive".into(),
            ));
        }
        Ok(())
    }

    fn base_preset(name: &str) -> Option<SchedulerConfig> {
        let dflt = SchedulerConfig {
            insertion_policy: InsertionPolicy::PrefillFirst,
            replacement_policy: ReplacementPolicy::Nrf,
            reservation_mode: ReservationMode::InputOnly,
            hybrid_batching: false,
            chunked_prefill: false,
            token_limit: 4096,
            context_size: 4096,
            defer_with_histogram: false,
            hypothetical: false,
        };
        let config = match name {
            "vllm" => dflt,
            "vllm-hy" => SchedulerConfig { hybrid_batching: true, ..dflt },
            "sarathi" => SchedulerConfig {
                insertion_policy: InsertionPolicy::DecodeFirst,
                hybrid_batching: true,
                chunked_prefill: true,
                token_limit: 512,
                ..dflt
            },
            "sarathi-cs" => SchedulerConfig {
                insertion_policy: InsertionPolicy::DecodeFirst,
                hybrid_batching: true,
                chunked_prefill: true,
                ..dflt
            },
            "sarathi-nocp" => SchedulerConfig {
                insertion_policy: InsertionPolicy::DecodeFirst,
                hybrid_batching: true,
                ..dflt
            },
            "sarathi-nohy" => {
                SchedulerConfig { insertion_policy: InsertionPolicy::DecodeFirst, ..dflt }
            }
            "orca" => SchedulerConfig {
                insertion_policy: InsertionPolicy::DecodeFirst,
                replacement_policy: ReplacementPolicy::PreemptionFree,
                reservation_mode: ReservationMode::FullContext,
                hybrid_batching: true,
                ..dflt
            },
            _ => return None,
        };
        Some(config)
    }

    /// Builds a named preset. Suffixes modify the base configuration:
    /// `-pf` (preemption-free with peak-demand reservation), `-srf`,
    /// `-srf-hist`, `-rank-i`, `-rank-o`.
    pub fn preset(name: &str) -> Result<SchedulerConfig, SchedulerError> {
        if let Some(config) = Self::base_preset(name) {
            return Ok(config);
        }
        for suffix in PRESET_SUFFIXES {
            // "-srf-hist" must win over "-srf"; the list is ordered for that.
            let Some(base) = name.strip_suffix(suffix) else { continue };
            let Some(mut config) = Self::base_preset(base) else { continue };
            match suffix {
                "-pf" => {
                    config.replacement_policy = ReplacementPolicy::PreemptionFree;
                    config.reservation_mode = ReservationMode::PeakDemand;
                    config.hypothetical = true;
                }
                "-srf" => config.replacement_policy = ReplacementPolicy::Srf,
                "-srf-hist" => {
                    config.replacement_policy = ReplacementPolicy::Srf;
                    config.defer_with_histogram = true;
                }
                "-rank-i" => config.insertion_policy = InsertionPolicy::RankByInput,
                "-rank-o" => config.insertion_policy = InsertionPolicy::RankByOutput,
                _ => unreachable!(),
            }
            return Ok(config);
        }
        Err(SchedulerError::UnknownPreset(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationCheck {
    Admit,
    RejectTokenLimit,
    RejectMemory,
}

/// Token-budget and memory check for one candidate. `planned_memory` is
/// Σ max(reserved, m after the batch) over running plus already-batched
/// requests plus the candidate.
pub fn can_allocate(
    cand_c: Tokens,
    batch_sum_c: Tokens,
    planned_memory: Tokens,
    token_limit: Tokens,
    m_capacity: Tokens,
) -> AllocationCheck {
    if batch_sum_c + cand_c > token_limit {
        AllocationCheck::RejectTokenLimit
    } else if planned_memory > m_capacity {
        AllocationCheck::RejectMemory
    } else {
        AllocationCheck::Admit
    }
}

/// Prefill tokens to process this batch: the whole remainder if it fits the
/// budget, a cropped chunk when chunking is on, 0 (skip) otherwise.
pub fn chunk_prefill(tokens_available: Tokens, budget: Tokens, chunked: bool) -> Tokens {
    if tokens_available <= budget {
        tokens_available
    } else if chunked {
        budget
    } else {
        0
    }
}

/// Picks the eviction victim among preemptible running requests. Candidates
/// carry the sequence number of their latest admission for NRF tie-breaks.
pub fn select_victim<'a>(
    policy: ReplacementPolicy,
    candidates: impl IntoIterator<Item = (&'a Request, u64)>,
) -> Option<RequestId> {
    match policy {
        ReplacementPolicy::PreemptionFree => None,
        ReplacementPolicy::Nrf => candidates
            .into_iter()
            .max_by(|(a, sa), (b, sb)| {
                a.arrival_time.total_cmp(&b.arrival_time).then(sa.cmp(sb)).then(a.id.cmp(&b.id))
            })
            .map(|(r, _)| r.id),
        ReplacementPolicy::Srf => candidates
            .into_iter()
            .min_by(|(a, sa), (b, sb)| {
                // Smallest m loses; among equals the later arrival is evicted.
                a.m.cmp(&b.m)
                    .then(b.arrival_time.total_cmp(&a.arrival_time))
                    .then(sb.cmp(sa))
                    .then(b.id.cmp(&a.id))
            })
            .map(|(r, _)| r.id),
    }
}

/// Evicts a running request: its KVs are discarded but generated tokens are
/// kept, so the refill re-prefills input plus generated tokens.
pub fn preempt(request: &mut Request) -> Tokens {
    let discarded = request.m;
    request.m = 0;
    request.reserved = 0;
    request.phase = Phase::Waiting;
    request.preempt_count += 1;
    discarded
}

/// Groups candidate request ids by the insertion policy, highest priority
/// first. Requests within a group keep ascending (arrival, id) order.
pub fn group_requests(
    requests: &[Request],
    ids: &[RequestId],
    policy: InsertionPolicy,
    hypothetical: bool,
) -> Result<Vec<Vec<RequestId>>, SchedulerError> {
    let by_arrival = |ids: &mut Vec<RequestId>| {
        ids.sort_by(|&a, &b| {
            let (ra, rb) = (&requests[a as usize], &requests[b as usize]);
            ra.arrival_time.total_cmp(&rb.arrival_time).then(a.cmp(&b))
        });
    };
    let phase = |id: RequestId| requests[id as usize].phase;
    match policy {
        InsertionPolicy::PrefillFirst => {
            let mut prefills: Vec<RequestId> = ids
                .iter()
                .copied()
                .filter(|&id| matches!(phase(id), Phase::Waiting | Phase::Prefill))
                .collect();
            let mut decodes: Vec<RequestId> =
                ids.iter().copied().filter(|&id| phase(id) == Phase::Decode).collect();
            by_arrival(&mut prefills);
            by_arrival(&mut decodes);
            Ok(vec![prefills, decodes])
        }
        InsertionPolicy::DecodeFirst => {
            let mut decodes: Vec<RequestId> =
                ids.iter().copied().filter(|&id| phase(id) == Phase::Decode).collect();
            let mut running_prefills: Vec<RequestId> =
                ids.iter().copied().filter(|&id| phase(id) == Phase::Prefill).collect();
            let mut waiting: Vec<RequestId> =
                ids.iter().copied().filter(|&id| phase(id) == Phase::Waiting).collect();
            by_arrival(&mut decodes);
            by_arrival(&mut running_prefills);
            by_arrival(&mut waiting);
            Ok(vec![decodes, running_prefills, waiting])
        }
        InsertionPolicy::RankByInput | InsertionPolicy::RankByOutput => {
            if policy == InsertionPolicy::RankByOutput && !hypothetical {
                return Err(SchedulerError::HypotheticalRequired);
            }
            let key = |id: RequestId| {
                let r = &requests[id as usize];
                if policy == InsertionPolicy::RankByInput { r.input_len } else { r.output_len }
            };
            let mut group: Vec<RequestId> = ids.to_vec();
            group.sort_by(|&a, &b| {
                key(a)
                    .cmp(&key(b))
                    .then(requests[a as usize].arrival_time.total_cmp(&requests[b as usize].arrival_time))
                    .then(a.cmp(&b))
            });
            Ok(vec![group])
        }
    }
}

/// Scheduler state for one simulation. Request bodies live in a slice owned
/// by the caller and indexed by request id; the scheduler tracks which ids
/// are in the system plus admission bookkeeping and the output histogram.
#[derive(Debug, Clone)]
pub struct Scheduler {
    pub config: SchedulerConfig,
    in_system: Vec<RequestId>,
    /// Admission sequence number per request id; 0 = not admitted.
    admission_seq: Vec<u64>,
    next_seq: u64,
    ever_admitted: Vec<bool>,
    /// Ids in order of first-ever admission into a batch.
    pub first_admissions: Vec<RequestId>,
    pub histogram: OutputHistogram,
}

impl Scheduler {
    pub fn new(config: SchedulerConfig) -> Result<Self, SchedulerError> {
        config.validate()?;
        let histogram = OutputHistogram::new(config.context_size);
        Ok(Scheduler {
            config,
            in_system: Vec::new(),
            admission_seq: Vec::new(),
            next_seq: 0,
            ever_admitted: Vec::new(),
            first_admissions: Vec::new(),
            histogram,
        })
    }

    pub fn from_preset(name: &str) -> Result<Self, SchedulerError> {
        Self::new(SchedulerConfig::preset(name)?)
    }

    /// Hands an arrived request to the scheduler. Callers must add requests
    /// in arrival order.
    pub fn add_request(&mut self, id: RequestId) {
        self.in_system.push(id);
        if self.admission_seq.len() <= id as usize {
            self.admission_seq.resize(id as usize + 1, 0);
            self.ever_admitted.resize(id as usize + 1, false);
        }
    }

    /// Removes a completed request and records its output length.
    pub fn finish_request(&mut self, id: RequestId, input_len: Tokens, output_len: Tokens) {
        self.in_system.retain(|&x| x != id);
        self.admission_seq[id as usize] = 0;
        self.histogram.observe(input_len, output_len);
    }

    pub fn in_system(&self) -> &[RequestId] {
        &self.in_system
    }

    fn reserve_for(&self, r: &Request) -> Tokens {
        match self.config.reservation_mode {
            ReservationMode::InputOnly => r.sequence_length(),
            ReservationMode::PeakDemand => r.peak_kv_demand(),
            ReservationMode::FullContext => self.config.context_size,
        }
    }

    fn contribution(r: &Request) -> Tokens {
        match r.phase {
            Phase::Prefill | Phase::Decode => r.reserved.max(r.m),
            Phase::Waiting | Phase::Completed => 0,
        }
    }

    /// True iff admitting `cand` would, by the histogram's output-length
    /// estimate, later overflow memory and force a preemption.
    pub fn should_defer(&self, requests: &[Request], cand: RequestId, m_capacity: Tokens) -> bool {
        let remaining = |r: &Request| {
            self.histogram.predict(r.input_len).saturating_sub(r.generated)
        };
        let mut projected: Tokens = self
            .in_system
            .iter()
            .map(|&id| &requests[id as usize])
            .filter(|r| matches!(r.phase, Phase::Prefill | Phase::Decode))
            .map(|r| r.m + remaining(r))
            .sum();
        let c = &requests[cand as usize];
        projected += c.sequence_length() + remaining(c);
        projected > m_capacity
    }

    /// Builds the next batch. Walks candidates in group-priority order,
    /// crops prefill chunks to the token budget, and on a memory reject
    /// evicts victims per the replacement policy until the candidate fits
    /// or no victim remains (then the candidate is skipped).
    pub fn get_next_batch(
        &mut self,
        requests: &mut [Request],
        m_capacity: Tokens,
        batch_index: usize,
    ) -> Result<(Vec<BatchEntry>, Vec<PreemptionEvent>), SchedulerError> {
        let groups = group_requests(
            requests,
            &self.in_system,
            self.config.insertion_policy,
            self.config.hypothetical,
        )?;
        let mut group_of: Vec<usize> = vec![usize::MAX; requests.len()];
        for (gi, group) in groups.iter().enumerate() {
            for &id in group {
                group_of[id as usize] = gi;
            }
        }

        let mut planned_mem: Tokens = self
            .in_system
            .iter()
            .map(|&id| Self::contribution(&requests[id as usize]))
            .sum();
        let any_running = planned_mem > 0
            || self.in_system.iter().any(|&id| {
                matches!(requests[id as usize].phase, Phase::Prefill | Phase::Decode)
            });

        let mut entries: Vec<BatchEntry> = Vec::new();
        let mut preemptions: Vec<PreemptionEvent> = Vec::new();
        let mut in_batch: Vec<bool> = vec![false; requests.len()];
        let mut preempted_now: Vec<bool> = vec![false; requests.len()];
        let mut sum_c: Tokens = 0;
        let mut batch_class: Option<bool> = None;
        // Once a waiting candidate finds no victim, the eligible pool (which
        // only ever shrinks during a call, and never contained the waiting
        // candidate itself) stays empty for every group from here up.
        let mut no_victim_from: usize = usize::MAX;

        for (gi, group) in groups.iter().enumerate() {
            'cand: for &id in group {
                let r = &requests[id as usize];
                // A request preempted earlier in this very call waits for the
                // next batch rather than re-entering as a refill candidate.
                if in_batch[id as usize] || preempted_now[id as usize] || r.phase == Phase::Completed
                {
                    continue;
                }
                let was_waiting = r.phase == Phase::Waiting;
                let is_decode = r.phase == Phase::Decode;
                if !self.config.hybrid_batching {
                    if let Some(class) = batch_class {
                        if class != is_decode {
                            continue;
                        }
                    }
                }
                if self.config.defer_with_histogram
                    && was_waiting
                    && r.generated == 0
                    && r.preempt_count == 0
                    && (any_running || !entries.is_empty())
                    && self.should_defer(requests, id, m_capacity)
                {
                    continue;
                }
                let avail = r.tokens_available()?;
                if avail == 0 {
                    continue;
                }
                let budget = self.config.token_limit.saturating_sub(sum_c);
                let c = if is_decode {
                    1
                } else {
                    chunk_prefill(avail, budget, self.config.chunked_prefill)
                };
                if c == 0 {
                    continue;
                }
                let new_reserved = if was_waiting { self.reserve_for(r) } else { r.reserved };
                let contrib_before = Self::contribution(r);
                let contrib_after = new_reserved.max(r.m + c);

                loop {
                    let planned = planned_mem - contrib_before + contrib_after;
                    match can_allocate(c, sum_c, planned, self.config.token_limit, m_capacity) {
                        AllocationCheck::Admit => break,
                        AllocationCheck::RejectTokenLimit => continue 'cand,
                        AllocationCheck::RejectMemory => {
                            if gi >= no_victim_from {
                                continue 'cand;
                            }
                            let victims = self.in_system.iter().filter_map(|&vid| {
                                let v = &requests[vid as usize];
                                let running = matches!(v.phase, Phase::Prefill | Phase::Decode);
                                let eligible = running
                                    && vid != id
                                    && !in_batch[vid as usize]
                                    && group_of[vid as usize] >= gi;
                                eligible.then(|| (v, self.admission_seq[vid as usize]))
                            });
                            let Some(victim_id) =
                                select_victim(self.config.replacement_policy, victims)
                            else {
                                if was_waiting {
                                    no_victim_from = gi;
                                }
                                continue 'cand;
                            };
                            let victim = &mut requests[victim_id as usize];
                            planned_mem -= Self::contribution(victim);
                            let discarded = preempt(victim);
                            preempted_now[victim_id as usize] = true;
                            preemptions.push(PreemptionEvent {
                                batch_index,
                                request_id: victim_id,
                                m_discarded: discarded,
                            });
                        }
                    }
                }

                let r = &mut requests[id as usize];
                if was_waiting {
                    r.reserved = new_reserved;
                    r.phase = Phase::Prefill;
                    self.next_seq += 1;
                    self.admission_seq[id as usize] = self.next_seq;
                    if !self.ever_admitted[id as usize] {
                        self.ever_admitted[id as usize] = true;
                        self.first_admissions.push(id);
                    }
                }
                entries.push(BatchEntry {
                    request_id: id,
                    c,
                    m_before: r.m,
                    phase_at_batch: if is_decode { Phase::Decode } else { Phase::Prefill },
                });
                sum_c += c;
                planned_mem = planned_mem - contrib_before + contrib_after;
                in_batch[id as usize] = true;
                batch_class.get_or_insert(is_decode);
            }
        }
        Ok((entries, preemptions))
    }
}
