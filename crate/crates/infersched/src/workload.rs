//! Workload generation and trace ingestion: fixed grids, heterogeneous
//! length-group mixes, CSV traces, and scaling knobs.

use crate::domain::{Request, Tokens};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Read;
use thiserror::Error;

/// Input/output length profile groups for heterogeneous workloads.
/// Small lengths draw from {8, 16}, large from {512, 1024}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthGroup {
    Siso,
    Silo,
    Liso,
    Lilo,
}

impl LengthGroup {
    fn input_choices(self) -> [Tokens; 2] {
        match self {
            LengthGroup::Siso | LengthGroup::Silo => [8, 16],
            LengthGroup::Liso | LengthGroup::Lilo => [512, 1024],
        }
    }

    fn output_choices(self) -> [Tokens; 2] {
        match self {
            LengthGroup::Siso | LengthGroup::Liso => [8, 16],
            LengthGroup::Silo | LengthGroup::Lilo => [512, 1024],
        }
    }
}

impl std::str::FromStr for LengthGroup {
    type Err = WorkloadError;
    fn from_str(s: &str) -> Result<Self, WorkloadError> {
        match s.to_ascii_lowercase().as_str() {
            "siso" => Ok(LengthGroup::Siso),
            "silo" => Ok(LengthGroup::Silo),
            "liso" => Ok(LengthGroup::Liso),
            "lilo" => Ok(LengthGroup::Lilo),
            other => Err(WorkloadError::InvalidGroup(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ArrivalMode {
    AllAtZero,
    /// Evenly spaced over [0, span] seconds; deterministic default for
    /// long-form style online runs.
    EvenlySpaced { span: f64 },
    UniformRandom { span: f64, seed: u64 },
    FromTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WorkloadKind {
    FixedGrid { input_len: Tokens, output_len: Tokens, count: u32 },
    HeteroMix { groups: (LengthGroup, LengthGroup), count: u32, seed: u64 },
    Trace { path: String },
}

/// Serializable description of how a workload is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub arrival_mode: ArrivalMode,
    /// Multiplier applied to every output length (ceiling).
    pub o_scale: f64,
    /// Multiplier on the system KV capacity, applied at run time.
    pub m_scale: f64,
}

impl WorkloadSpec {
    pub fn fixed(input_len: Tokens, output_len: Tokens, count: u32) -> Self {
        WorkloadSpec {
            kind: WorkloadKind::FixedGrid { input_len, output_len, count },
            arrival_mode: ArrivalMode::AllAtZero,
            o_scale: 1.0,
            m_scale: 1.0,
        }
    }

    /// Materializes the requests. `context_size` bounds every request.
    pub fn generate(&self, context_size: Tokens) -> Result<Workload, WorkloadError> {
        let mut workload = match &self.kind {
            WorkloadKind::FixedGrid { input_len, output_len, count } => {
                gen_fixed(*input_len, *output_len, *count, &self.arrival_mode, context_size)?
            }
            WorkloadKind::HeteroMix { groups, count, seed } => {
                let mut w = gen_hetero(groups.0, groups.1, *count, *seed, context_size)?;
                apply_arrivals(&mut w.requests, &self.arrival_mode);
                w
            }
            WorkloadKind::Trace { path } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| WorkloadError::Io(format!("{path}: {e}")))?;
                load_trace(file)?
            }
        };
        if self.o_scale != 1.0 {
            workload = scale(workload, self.o_scale, context_size);
        }
        Ok(workload)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Workload {
    pub requests: Vec<Request>,
    /// Requests whose scaled output was clamped to fit the context.
    pub clamp_warnings: u32,
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("request length {length} exceeds context size {context} (I + O - 1 <= S)")]
    TooLong { length: Tokens, context: Tokens },
    #[error("workload must contain at least one request")]
    Empty,
    #[error("hetero mix needs an even request count, got {0}")]
    OddCount(u32),
    #[error("unknown length group `{0}`")]
    InvalidGroup(String),
    #[error("trace row {line}: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

fn apply_arrivals(requests: &mut [Request], mode: &ArrivalMode) {
    let n = requests.len();
    match mode {
        ArrivalMode::AllAtZero | ArrivalMode::FromTrace => {}
        ArrivalMode::EvenlySpaced { span } => {
            for (i, r) in requests.iter_mut().enumerate() {
                r.arrival_time = if n > 1 { span * i as f64 / (n - 1) as f64 } else { 0.0 };
            }
        }
        ArrivalMode::UniformRandom { span, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut times: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..*span)).collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (r, t) in requests.iter_mut().zip(times) {
                r.arrival_time = t;
            }
        }
    }
}

/// `count` identical requests.
pub fn gen_fixed(
    input_len: Tokens,
    output_len: Tokens,
    count: u32,
    arrival_mode: &ArrivalMode,
    context_size: Tokens,
) -> Result<Workload, WorkloadError> {
    if count == 0 {
        return Err(WorkloadError::Empty);
    }
    if input_len + output_len - 1 > context_size {
        return Err(WorkloadError::TooLong { length: input_len + output_len - 1, context: context_size });
    }
    let mut requests: Vec<Request> =
        (0..count).map(|i| Request::new(i, 0.0, input_len, output_len)).collect();
    apply_arrivals(&mut requests, arrival_mode);
    Ok(Workload { requests, clamp_warnings: 0 })
}

/// A shuffled half-and-half mix of two length groups, lengths drawn uniformly
/// and independently from each group's sets.
pub fn gen_hetero(
    a: LengthGroup,
    b: LengthGroup,
    count: u32,
    seed: u64,
    context_size: Tokens,
) -> Result<Workload, WorkloadError> {
    if count == 0 {
        return Err(WorkloadError::Empty);
    }
    if count % 2 != 0 {
        return Err(WorkloadError::OddCount(count));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut requests = Vec::with_capacity(count as usize);
    for group in [a, b] {
        for _ in 0..count / 2 {
            let input_len = *group.input_choices().choose(&mut rng).unwrap();
            let output_len = *group.output_choices().choose(&mut rng).unwrap();
            debug_assert!(input_len + output_len - 1 <= context_size);
            requests.push((input_len, output_len));
        }
    }
    requests.shuffle(&mut rng);
    let requests = requests
        .into_iter()
        .enumerate()
        .map(|(i, (input_len, output_len))| Request::new(i as u32, 0.0, input_len, output_len))
        .collect();
    Ok(Workload { requests, clamp_warnings: 0 })
}

/// Parses `request_id,arrival_s,input_tokens,output_tokens` rows; arrivals
/// are re-sorted if non-monotone.
pub fn load_trace<R: Read>(reader: R) -> Result<Workload, WorkloadError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| WorkloadError::MalformedRow { line: 1, message: e.to_string() })?;
    let expected = ["request_id", "arrival_s", "input_tokens", "output_tokens"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(WorkloadError::MalformedRow {
            line: 1,
            message: format!("expected header {expected:?}, got {headers:?}"),
        });
    }
    let mut requests = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| WorkloadError::MalformedRow { line, message: e.to_string() })?;
        if rec.len() != 4 {
            return Err(WorkloadError::MalformedRow { line, message: format!("expected 4 fields, got {}", rec.len()) });
        }
        let arrival: f64 = rec[1].trim().parse().map_err(|_| WorkloadError::MalformedRow {
            line,
            message: format!("bad arrival `{}`", &rec[1]),
        })?;
        let input_len: Tokens = rec[2].trim().parse().map_err(|_| WorkloadError::MalformedRow {
            line,
            message: format!("bad input length `{}`", &rec[2]),
        })?;
        let output_len: Tokens = rec[3].trim().parse().map_err(|_| WorkloadError::MalformedRow {
            line,
            message: format!("bad output length `{}`", &rec[3]),
        })?;
        if input_len == 0 || output_len == 0 {
            return Err(WorkloadError::MalformedRow { line, message: "lengths must be >= 1".into() });
        }
        requests.push((arrival, input_len, output_len));
    }
    if requests.is_empty() {
        return Err(WorkloadError::Empty);
    }
    requests.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let requests = requests
        .into_iter()
        .enumerate()
        .map(|(i, (arrival, input_len, output_len))| Request::new(i as u32, arrival, input_len, output_len))
        .collect();
    Ok(Workload { requests, clamp_warnings: 0 })
}

/// Multiplies output lengths by `o_scale` (ceiling); over-length requests are
/// clamped to `S - I + 1` and counted.
pub fn scale(mut workload: Workload, o_scale: f64, context_size: Tokens) -> Workload {
    assert!(o_scale > 0.0);
    for r in &mut workload.requests {
        let scaled = ((r.output_len as f64) * o_scale).ceil() as Tokens;
        let cap = context_size - r.input_len + 1;
        if scaled > cap {
            r.output_len = cap;
            workload.clamp_warnings += 1;
        } else {
            r.output_len = scaled.max(1);
        }
    }
    workload
}
