//! Command-line front end tying the simulator, cost models, workload
//! generators, and exact optimizer into reproducible experiments. Every
//! file-emitting command archives a `config.json` next to its outputs from
//! which the run can be repeated.

use crate::costmodel::{
    attention_cost, classify, fit_linear, five_minute_interval, intensity, read_profile_csv,
    slo_pareto, swap_recompute_breakeven, synthesize_profile, theoretical_latency,
    write_profile_csv, CostMode, LinearCostModel, ProfilerConfig,
};
use crate::csp::{
    build_instance, existence_query, export_lp, solution_to_log, solve_exact, CostSurrogate,
    CspError, CspOptions, SolveLimits,
};
use crate::domain::{HardwareSpec, ModelSpec, Tokens};
use crate::scheduler::SchedulerConfig;
use crate::simulator::{self, SimError, SimulationConfig, WhatIf};
use crate::workload::{ArrivalMode, LengthGroup, WorkloadKind, WorkloadSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Exit codes: 0 success, 1 validation error, 2 runtime error.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::EmptyWorkload | SimError::WorkloadRejected(_) | SimError::BadRequestIds => {
            CliError::Validation(e.to_string())
        }
        _ => CliError::Runtime(e.to_string()),
    }
}

fn csp_error(e: CspError) -> CliError {
    match e {
        CspError::EmptyWorkload
        | CspError::HorizonTooSmall { .. }
        | CspError::CapsExceeded(_)
        | CspError::OnlineUnsupported
        | CspError::BadSolutionFile(_) => CliError::Validation(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "infersched", about = "LLM inference scheduling laboratory", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write metrics.json, schedule.csv, config.json.
    Simulate(SimulateArgs),
    /// Run a Cartesian grid of simulations and write one CSV row per cell.
    Sweep(SweepArgs),
    /// Fit a linear cost model from a profile CSV.
    Calibrate(CalibrateArgs),
    /// Generate a synthetic profiler CSV for calibration.
    ProfileSynth(ProfileSynthArgs),
    /// Exact schedule optimization: solve, export LP, or existence check.
    #[command(subcommand)]
    Csp(CspCommand),
    /// Cost-model analyses: roofline, SLO Pareto, break-even, cache residency.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HardwareName {
    A100,
    H100,
}

impl HardwareName {
    fn spec(self) -> HardwareSpec {
        match self {
            HardwareName::A100 => HardwareSpec::a100(),
            HardwareName::H100 => HardwareSpec::h100(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CostKind {
    /// Roofline bound from model and hardware specs.
    Theoretical,
    /// Linear model fitted to (synthetic) profiler measurements.
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WhatIfArg {
    None,
    InfiniteM,
}

impl WhatIfArg {
    fn to_sim(self) -> WhatIf {
        match self {
            WhatIfArg::None => WhatIf::None,
            WhatIfArg::InfiniteM => WhatIf::InfiniteM,
        }
    }
}

/// Model, hardware, cost-mode, and seed flags shared by most commands.
#[derive(Debug, Clone, Args)]
struct BundleArgs {
    /// Hardware preset.
    #[arg(long, value_enum, default_value_t = HardwareName::A100)]
    hardware: HardwareName,
    /// Batch-duration predictor.
    #[arg(long, value_enum, default_value_t = CostKind::Calibrated)]
    cost: CostKind,
    /// Fitted cost model JSON; when absent, calibrated mode fits a model to
    /// the synthetic profiler seeded by --seed.
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// RNG seed; falls back to INFERSCHED_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

impl BundleArgs {
    fn seed(&self) -> Result<u64, CliError> {
        resolve_seed(self.seed)
    }

    fn build(&self) -> Result<(ModelSpec, HardwareSpec, CostMode, u64), CliError> {
        let model = ModelSpec::llama2_7b();
        let hardware = self.hardware.spec();
        let seed = self.seed()?;
        let cost = match self.cost {
            CostKind::Theoretical => CostMode::Theoretical {
                model: model.clone(),
                hardware: hardware.clone(),
            },
            CostKind::Calibrated => {
                let fitted = match &self.model_file {
                    Some(path) => {
                        let text = std::fs::read_to_string(path)
                            .map_err(|e| validation(format!("{}: {e}", path.display())))?;
                        serde_json::from_str::<LinearCostModel>(&text)
                            .map_err(|e| validation(format!("{}: {e}", path.display())))?
                    }
                    None => {
                        let profile = synthesize_profile(&ProfilerConfig::new(
                            model.clone(),
                            hardware.clone(),
                            seed,
                        ));
                        fit_linear(&profile).map_err(runtime)?
                    }
                };
                CostMode::Calibrated { model: fitted }
            }
        };
        Ok((model, hardware, cost, seed))
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("INFERSCHED_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| validation(format!("INFERSCHED_SEED is not an integer: `{text}`"))),
        Err(_) => Ok(0),
    }
}

/// Parses `fixed:I=512,O=32,W=1024`, `hetero:groups=lilo+silo,W=4[,seed=7]`,
/// or `trace:path.csv` into a workload description.
fn parse_workload(
    spec: &str,
    arrivals: &str,
    o_scale: f64,
    m_scale: f64,
    seed: u64,
) -> Result<WorkloadSpec, CliError> {
    let (kind_name, body) = spec
        .split_once(':')
        .ok_or_else(|| validation(format!("workload `{spec}` must look like kind:args")))?;
    let kind = match kind_name {
        "fixed" => {
            let (mut i, mut o, mut w) = (None, None, None);
            for part in body.split(',') {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| validation(format!("bad workload field `{part}`")))?;
                let parsed: u64 = value
                    .parse()
                    .map_err(|_| validation(format!("bad workload value `{part}`")))?;
                match key {
                    "I" => i = Some(parsed),
                    "O" => o = Some(parsed),
                    "W" => w = Some(parsed as u32),
                    _ => return Err(validation(format!("unknown workload field `{key}`"))),
                }
            }
            match (i, o, w) {
                (Some(i), Some(o), Some(w)) => {
                    WorkloadKind::FixedGrid { input_len: i, output_len: o, count: w }
                }
                _ => return Err(validation("fixed workload needs I=, O=, W=")),
            }
        }
        "hetero" => {
            let (mut groups, mut w, mut group_seed) = (None, None, seed);
            for part in body.split(',') {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| validation(format!("bad workload field `{part}`")))?;
                match key {
                    "groups" => {
                        let (a, b) = value.split_once('+').ok_or_else(|| {
                            validation(format!("groups `{value}` must look like lilo+silo"))
                        })?;
                        let a: LengthGroup = a.parse().map_err(validation)?;
                        let b: LengthGroup = b.parse().map_err(validation)?;
                        groups = Some((a, b));
                    }
                    "W" => {
                        w = Some(value.parse::<u32>().map_err(|_| {
                            validation(format!("bad workload value `{part}`"))
                        })?)
                    }
                    "seed" => {
                        group_seed = value.parse().map_err(|_| {
                            validation(format!("bad workload value `{part}`"))
                        })?
                    }
                    _ => return Err(validation(format!("unknown workload field `{key}`"))),
                }
            }
            match (groups, w) {
                (Some(groups), Some(count)) => {
                    WorkloadKind::HeteroMix { groups, count, seed: group_seed }
                }
                _ => return Err(validation("hetero workload needs groups= and W=")),
            }
        }
        "trace" => WorkloadKind::Trace { path: body.to_string() },
        other => return Err(validation(format!("unknown workload kind `{other}`"))),
    };
    Ok(WorkloadSpec {
        kind,
        arrival_mode: parse_arrivals(arrivals, seed)?,
        o_scale,
        m_scale,
    })
}

/// `zero`, `even[:SPAN]`, or `uniform[:SPAN]` (span defaults to 100 s).
fn parse_arrivals(text: &str, seed: u64) -> Result<ArrivalMode, CliError> {
    let (name, span) = match text.split_once(':') {
        Some((name, span)) => {
            let span: f64 = span
                .parse()
                .map_err(|_| validation(format!("bad arrival span `{span}`")))?;
            if !(span > 0.0) {
                return Err(validation("arrival span must be positive"));
            }
            (name, span)
        }
        None => (text, 100.0),
    };
    match name {
        "zero" => Ok(ArrivalMode::AllAtZero),
        "even" => Ok(ArrivalMode::EvenlySpaced { span }),
        "uniform" => Ok(ArrivalMode::UniformRandom { span, seed }),
        other => Err(validation(format!("unknown arrival mode `{other}`"))),
    }
}

fn scheduler_config(
    preset: &str,
    hypothetical: bool,
    token_limit: Option<Tokens>,
) -> Result<SchedulerConfig, CliError> {
    let mut config = SchedulerConfig::preset(preset).map_err(validation)?;
    if hypothetical {
        config.hypothetical = true;
    }
    if let Some(limit) = token_limit {
        config.token_limit = limit;
    }
    config.validate().map_err(validation)?;
    Ok(config)
}

fn scaled_capacity(base: Tokens, m_scale: f64) -> Result<Tokens, CliError> {
    if !(m_scale > 0.0) {
        return Err(validation("--m-scale must be positive"));
    }
    Ok(((base as f64 * m_scale).round() as Tokens).max(1))
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| runtime(format!("{}: {e}", out.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    std::fs::write(path, text + "\n").map_err(|e| runtime(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scheduler preset, e.g. vllm, sarathi, orca, sarathi-pf, vllm-srf.
    #[arg(long, default_value = "vllm")]
    preset: String,
    /// Allow policies that read a request's true output length.
    #[arg(long)]
    hypothetical: bool,
    /// Workload: fixed:I=512,O=32,W=1024 | hetero:groups=lilo+silo,W=4 | trace:path.
    #[arg(long)]
    workload: String,
    /// Arrival process: zero | even[:SPAN] | uniform[:SPAN].
    #[arg(long, default_value = "zero")]
    arrivals: String,
    /// Output-length multiplier (ceiling, clamped to the context).
    #[arg(long, default_value_t = 1.0)]
    o_scale: f64,
    /// KV capacity multiplier applied after --M.
    #[arg(long, default_value_t = 1.0)]
    m_scale: f64,
    /// KV cache capacity in tokens; defaults to the hardware preset's.
    #[arg(long, short = 'M')]
    m_capacity: Option<Tokens>,
    /// Per-batch token budget override.
    #[arg(long, short = 'C')]
    token_limit: Option<Tokens>,
    #[arg(long, value_enum, default_value_t = WhatIfArg::None)]
    what_if: WhatIfArg,
    #[command(flatten)]
    bundle: BundleArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Archived next to every simulation's outputs; re-running from this file
/// alone reproduces the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub hardware: HardwareSpec,
    pub scheduler: SchedulerConfig,
    pub workload: WorkloadSpec,
    pub cost: CostMode,
    pub what_if: WhatIf,
    pub m_capacity: Tokens,
    pub seed: u64,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (model, hardware, cost, seed) = args.bundle.build()?;
    let scheduler = scheduler_config(&args.preset, args.hypothetical, args.token_limit)?;
    let spec = parse_workload(&args.workload, &args.arrivals, args.o_scale, args.m_scale, seed)?;
    let base_m = args.m_capacity.unwrap_or(hardware.kv_cache_capacity);
    let m_capacity = scaled_capacity(base_m, args.m_scale)?;
    let workload = spec.generate(model.context_size).map_err(validation)?;
    if workload.clamp_warnings > 0 {
        eprintln!("warning: {} request(s) clamped to the context size", workload.clamp_warnings);
    }
    let config = ExperimentConfig {
        model,
        hardware,
        scheduler: scheduler.clone(),
        workload: spec,
        cost: cost.clone(),
        what_if: args.what_if.to_sim(),
        m_capacity,
        seed,
    };
    let sim_config = SimulationConfig {
        scheduler,
        m_capacity,
        what_if: args.what_if.to_sim(),
    };
    let (log, metrics) = simulator::run(&workload, &sim_config, &cost).map_err(sim_error)?;
    ensure_out_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &config)?;
    write_json(&args.out.join("metrics.json"), &metrics)?;
    let file = std::fs::File::create(args.out.join("schedule.csv")).map_err(runtime)?;
    log.write_csv(file).map_err(runtime)?;
    println!(
        "preset={} makespan={:.6}s tps={:.2} preemptions={} refilled={} mean_ttft={:.6}s mean_tpot={}",
        args.preset,
        metrics.makespan,
        metrics.tps,
        metrics.preemption_count,
        metrics.refilled_tokens,
        metrics.ttft.mean,
        if metrics.tpot.mean.is_nan() { "n/a".to_string() } else { format!("{:.6}s", metrics.tpot.mean) },
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated preset names.
    #[arg(long, value_delimiter = ',', required = true)]
    presets: Vec<String>,
    /// Input lengths.
    #[arg(long = "I", value_delimiter = ',', required = true)]
    inputs: Vec<Tokens>,
    /// Output lengths.
    #[arg(long = "O", value_delimiter = ',', required = true)]
    outputs: Vec<Tokens>,
    /// Request counts.
    #[arg(long = "W", value_delimiter = ',', required = true)]
    counts: Vec<u32>,
    /// KV cache capacities.
    #[arg(long = "M", value_delimiter = ',', required = true)]
    capacities: Vec<Tokens>,
    /// Allow output-length-aware policies.
    #[arg(long)]
    hypothetical: bool,
    /// Per-batch token budget override.
    #[arg(long, short = 'C')]
    token_limit: Option<Tokens>,
    /// Arrival process applied to every cell.
    #[arg(long, default_value = "zero")]
    arrivals: String,
    /// Concurrent cells (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    bundle: BundleArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: ModelSpec,
    pub hardware: HardwareSpec,
    pub presets: Vec<String>,
    pub inputs: Vec<Tokens>,
    pub outputs: Vec<Tokens>,
    pub counts: Vec<u32>,
    pub capacities: Vec<Tokens>,
    pub hypothetical: bool,
    pub token_limit: Option<Tokens>,
    pub arrivals: String,
    pub cost: CostMode,
    pub seed: u64,
}

const SWEEP_HEADER: [&str; 17] = [
    "preset", "I", "O", "W", "M", "status", "makespan_s", "tps", "preemptions",
    "refilled_tokens", "progress", "avg_batch_size", "mean_latency_s", "p99_latency_s",
    "mean_ttft_s", "p99_ttft_s", "mean_tpot_s",
];

fn sweep_cell(
    preset: &str,
    i: Tokens,
    o: Tokens,
    w: u32,
    m: Tokens,
    args: &SweepArgs,
    model: &ModelSpec,
    cost: &CostMode,
    seed: u64,
) -> Vec<String> {
    let head = vec![
        preset.to_string(),
        i.to_string(),
        o.to_string(),
        w.to_string(),
        m.to_string(),
    ];
    let fail = |msg: String| {
        let mut row = head.clone();
        row.push(msg);
        row.extend(std::iter::repeat(String::new()).take(SWEEP_HEADER.len() - 6));
        row
    };
    let scheduler = match scheduler_config(preset, args.hypothetical, args.token_limit) {
        Ok(s) => s,
        Err(e) => return fail(e.message().to_string()),
    };
    let spec = match parse_workload(
        &format!("fixed:I={i},O={o},W={w}"),
        &args.arrivals,
        1.0,
        1.0,
        seed,
    ) {
        Ok(s) => s,
        Err(e) => return fail(e.message().to_string()),
    };
    let workload = match spec.generate(model.context_size) {
        Ok(w) => w,
        Err(e) => return fail(e.to_string()),
    };
    let config = SimulationConfig { scheduler, m_capacity: m, what_if: WhatIf::None };
    match simulator::run(&workload, &config, cost) {
        Ok((_, metrics)) => {
            let mut row = head;
            row.push("ok".to_string());
            for value in [
                metrics.makespan,
                metrics.tps,
                metrics.preemption_count as f64,
                metrics.refilled_tokens as f64,
                metrics.progress,
                metrics.avg_batch_size,
                metrics.latency.mean,
                metrics.latency.p99,
                metrics.ttft.mean,
                metrics.ttft.p99,
                metrics.tpot.mean,
            ] {
                row.push(if value.is_nan() { String::new() } else { format!("{value}") });
            }
            row
        }
        Err(e) => fail(e.to_string()),
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let (model, hardware, cost, seed) = args.bundle.build()?;
    // Deduplicated Cartesian product, in deterministic order.
    let mut grid: BTreeSet<(String, Tokens, Tokens, u32, Tokens)> = BTreeSet::new();
    for preset in &args.presets {
        for &i in &args.inputs {
            for &o in &args.outputs {
                for &w in &args.counts {
                    for &m in &args.capacities {
                        grid.insert((preset.clone(), i, o, w, m));
                    }
                }
            }
        }
    }
    if grid.is_empty() {
        return Err(validation("empty sweep grid"));
    }
    for preset in &args.presets {
        // Refuse invalid presets up front rather than emitting all-error rows.
        scheduler_config(preset, args.hypothetical, args.token_limit)?;
    }
    let cells: Vec<_> = grid.into_iter().collect();
    let run_all = || -> Vec<Vec<String>> {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|(preset, i, o, w, m)| {
                sweep_cell(preset, *i, *o, *w, *m, args, &model, &cost, seed)
            })
            .collect()
    };
    let rows = if args.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()
            .map_err(runtime)?;
        pool.install(run_all)
    } else {
        run_all()
    };
    ensure_out_dir(&args.out)?;
    let config = SweepConfig {
        model,
        hardware,
        presets: args.presets.clone(),
        inputs: args.inputs.clone(),
        outputs: args.outputs.clone(),
        counts: args.counts.clone(),
        capacities: args.capacities.clone(),
        hypothetical: args.hypothetical,
        token_limit: args.token_limit,
        arrivals: args.arrivals.clone(),
        cost,
        seed,
    };
    write_json(&args.out.join("config.json"), &config)?;
    let mut writer = csv::Writer::from_path(args.out.join("sweep.csv")).map_err(runtime)?;
    writer.write_record(SWEEP_HEADER).map_err(runtime)?;
    let mut failed = 0usize;
    for row in &rows {
        if row[5] != "ok" {
            failed += 1;
        }
        writer.write_record(row).map_err(runtime)?;
    }
    writer.flush().map_err(runtime)?;
    println!("{} cells ({} failed) -> {}", rows.len(), failed, args.out.join("sweep.csv").display());
    Ok(())
}

// ---------------------------------------------------------------------------
// calibrate / profile-synth

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Profile CSV produced by profile-synth (or a real profiler).
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrateConfig {
    pub profile: String,
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let file = std::fs::File::open(&args.profile)
        .map_err(|e| validation(format!("{}: {e}", args.profile.display())))?;
    let samples = read_profile_csv(file).map_err(validation)?;
    let model = fit_linear(&samples).map_err(validation)?;
    ensure_out_dir(&args.out)?;
    write_json(
        &args.out.join("config.json"),
        &CalibrateConfig { profile: args.profile.display().to_string() },
    )?;
    write_json(&args.out.join("model.json"), &model)?;
    println!(
        "fit {} samples, r_squared={:.6} -> {}",
        samples.len(),
        model.r_squared,
        args.out.join("model.json").display()
    );
    Ok(())
}

#[derive(Debug, Args)]
struct ProfileSynthArgs {
    #[arg(long, value_enum, default_value_t = HardwareName::A100)]
    hardware: HardwareName,
    /// Multiplicative noise amplitude (default 0.02 = +/-2%).
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn cmd_profile_synth(args: &ProfileSynthArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let mut config = ProfilerConfig::new(ModelSpec::llama2_7b(), args.hardware.spec(), seed);
    if let Some(noise) = args.noise {
        if !(0.0..1.0).contains(&noise) {
            return Err(validation("--noise must be in [0, 1)"));
        }
        config.noise = noise;
    }
    let samples = synthesize_profile(&config);
    ensure_out_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &config)?;
    let file = std::fs::File::create(args.out.join("profile.csv")).map_err(runtime)?;
    write_profile_csv(&samples, file).map_err(runtime)?;
    println!("{} samples -> {}", samples.len(), args.out.join("profile.csv").display());
    Ok(())
}

// ---------------------------------------------------------------------------
// csp

#[derive(Debug, Subcommand)]
enum CspCommand {
    /// Find a provably minimal schedule by branch-and-bound.
    Solve(CspSolveArgs),
    /// Write the mixed-integer formulation as an LP-format file.
    Export(CspExportArgs),
    /// Answer: does any schedule beat a preset's makespan by a factor?
    Check(CspCheckArgs),
}

#[derive(Debug, Clone, Args)]
struct CspCommonArgs {
    /// Workload: fixed:I=32,O=4,W=4 (offline; arrivals stay at zero).
    #[arg(long)]
    workload: String,
    /// KV capacity in tokens, or `auto` = max(2I, I+O-1) over the workload.
    #[arg(long, short = 'M', default_value = "auto")]
    m_capacity: String,
    /// Per-batch token budget.
    #[arg(long, short = 'C', default_value_t = 4096)]
    token_limit: Tokens,
    /// Batch horizon; defaults to serial prefills + all decodes + slack.
    #[arg(long)]
    j_max: Option<usize>,
    /// Restrict to preemption-free schedules.
    #[arg(long)]
    forbid_eviction: bool,
    #[command(flatten)]
    bundle: BundleArgs,
}

#[derive(Debug, Args)]
struct CspSolveArgs {
    #[command(flatten)]
    common: CspCommonArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CspExportArgs {
    #[command(flatten)]
    common: CspCommonArgs,
    /// Gate each request's first batch on its arrival time.
    #[arg(long)]
    online: bool,
    /// Add a constraint capping total schedule cost.
    #[arg(long)]
    latency_cap: Option<f64>,
    /// Arrival process (only meaningful with --online).
    #[arg(long, default_value = "zero")]
    arrivals: String,
    /// Destination .lp file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CspCheckArgs {
    #[command(flatten)]
    common: CspCommonArgs,
    /// Preset whose simulated makespan sets the baseline.
    #[arg(long)]
    against: String,
    /// Fraction of the baseline to test for, e.g. 0.9.
    #[arg(long)]
    factor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CspConfig {
    pub model: ModelSpec,
    pub hardware: HardwareSpec,
    pub workload: WorkloadSpec,
    pub m_capacity: Tokens,
    pub token_limit: Tokens,
    pub options: CspOptions,
    pub cost: CostMode,
    pub seed: u64,
}

struct CspSetup {
    model: ModelSpec,
    hardware: HardwareSpec,
    cost: CostMode,
    seed: u64,
    workload_spec: WorkloadSpec,
    workload: crate::workload::Workload,
    m_capacity: Tokens,
}

fn csp_setup(common: &CspCommonArgs, arrivals: &str) -> Result<CspSetup, CliError> {
    let (model, hardware, cost, seed) = common.bundle.build()?;
    let workload_spec = parse_workload(&common.workload, arrivals, 1.0, 1.0, seed)?;
    let workload = workload_spec.generate(model.context_size).map_err(validation)?;
    let m_capacity = if common.m_capacity == "auto" {
        workload
            .requests
            .iter()
            .map(|r| (2 * r.input_len).max(r.peak_kv_demand()))
            .max()
            .unwrap_or(1)
    } else {
        common
            .m_capacity
            .parse()
            .map_err(|_| validation(format!("bad -M value `{}`", common.m_capacity)))?
    };
    Ok(CspSetup { model, hardware, cost, seed, workload_spec, workload, m_capacity })
}

fn cmd_csp_solve(args: &CspSolveArgs) -> Result<(), CliError> {
    let setup = csp_setup(&args.common, "zero")?;
    let options = CspOptions {
        j_max: args.common.j_max,
        online: false,
        latency_cap: None,
        forbid_eviction: args.common.forbid_eviction,
    };
    let instance = build_instance(
        &setup.workload,
        CostSurrogate::from_cost(&setup.cost),
        args.common.token_limit,
        setup.m_capacity,
        setup.model.context_size,
        options.clone(),
    )
    .map_err(csp_error)?;
    let solution =
        solve_exact(&instance, &setup.cost, &SolveLimits::default()).map_err(csp_error)?;
    let log = solution_to_log(&solution, &instance, &setup.cost).map_err(csp_error)?;
    ensure_out_dir(&args.out)?;
    let config = CspConfig {
        model: setup.model,
        hardware: setup.hardware,
        workload: setup.workload_spec,
        m_capacity: setup.m_capacity,
        token_limit: args.common.token_limit,
        options,
        cost: setup.cost,
        seed: setup.seed,
    };
    write_json(&args.out.join("config.json"), &config)?;
    write_json(&args.out.join("solution.json"), &solution)?;
    let file = std::fs::File::create(args.out.join("schedule.csv")).map_err(runtime)?;
    log.write_csv(file).map_err(runtime)?;
    println!(
        "status={:?} objective={:.6}s batches={} preemptions={} M={}",
        solution.status,
        solution.objective,
        solution.plan.len(),
        solution.preemption_count(),
        setup.m_capacity,
    );
    Ok(())
}

fn cmd_csp_export(args: &CspExportArgs) -> Result<(), CliError> {
    let setup = csp_setup(&args.common, &args.arrivals)?;
    let options = CspOptions {
        j_max: args.common.j_max,
        online: args.online,
        latency_cap: args.latency_cap,
        forbid_eviction: args.common.forbid_eviction,
    };
    let instance = build_instance(
        &setup.workload,
        CostSurrogate::from_cost(&setup.cost),
        args.common.token_limit,
        setup.m_capacity,
        setup.model.context_size,
        options,
    )
    .map_err(csp_error)?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_out_dir(dir)?;
        }
    }
    let mut file = std::fs::File::create(&args.out)
        .map_err(|e| runtime(format!("{}: {e}", args.out.display())))?;
    export_lp(&instance, &mut file).map_err(runtime)?;
    file.flush().map_err(runtime)?;
    println!(
        "{} requests x {} batches -> {}",
        instance.requests.len(),
        instance.j_max,
        args.out.display()
    );
    Ok(())
}

fn cmd_csp_check(args: &CspCheckArgs) -> Result<(), CliError> {
    if !(args.factor > 0.0) {
        return Err(validation("--factor must be positive"));
    }
    let setup = csp_setup(&args.common, "zero")?;
    let scheduler = scheduler_config(&args.against, false, Some(args.common.token_limit))?;
    let sim_config = SimulationConfig {
        scheduler,
        m_capacity: setup.m_capacity,
        what_if: WhatIf::None,
    };
    let (_, metrics) =
        simulator::run(&setup.workload, &sim_config, &setup.cost).map_err(sim_error)?;
    let cap = metrics.makespan * args.factor;
    let options = CspOptions {
        j_max: args.common.j_max,
        online: false,
        latency_cap: Some(cap),
        forbid_eviction: args.common.forbid_eviction,
    };
    let instance = build_instance(
        &setup.workload,
        CostSurrogate::from_cost(&setup.cost),
        args.common.token_limit,
        setup.m_capacity,
        setup.model.context_size,
        options,
    )
    .map_err(csp_error)?;
    let exists =
        existence_query(&instance, &setup.cost, &SolveLimits::default(), cap).map_err(csp_error)?;
    println!("{exists}");
    eprintln!(
        "baseline {}={:.6}s, cap {:.6}s ({}x)",
        args.against, metrics.makespan, cap, args.factor
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// Arithmetic intensity and boundedness of an attention configuration.
    Roofline(RooflineArgs),
    /// Pareto boundary of (prefill chunk, decode cache) under a TPOT target.
    Slo(SloArgs),
    /// KV count where recomputing beats swapping over the host link.
    Breakeven(BreakevenArgs),
    /// Break-even cache-residency interval (five-minute-rule analogue).
    Fiverule(FiveruleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RooflineOp {
    /// Prefill attention: c processed tokens, empty cache.
    PrefillAttn,
    /// Decode attention: one token against m cached KVs.
    DecodeAttn,
}

#[derive(Debug, Args)]
struct RooflineArgs {
    #[arg(long, value_enum)]
    op: RooflineOp,
    /// Tokens processed per request (defaults: prefill 4096, decode 1).
    #[arg(long, short = 'c')]
    c: Option<Tokens>,
    /// Cached KVs per request (defaults: prefill 0, decode 100000).
    #[arg(long, short = 'm')]
    m: Option<Tokens>,
    /// Requests sharing the (c, m) shape.
    #[arg(long, default_value_t = 1)]
    batch: u64,
    #[arg(long, value_enum, default_value_t = HardwareName::A100)]
    hardware: HardwareName,
    /// Also write the JSON report into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct RooflineReport {
    op: String,
    c: Tokens,
    m: Tokens,
    batch: u64,
    flops: f64,
    bytes: f64,
    /// FLOPs per byte moved.
    intensity: f64,
    /// Hardware FLOPS/bandwidth ridge point.
    ridge: f64,
    boundedness: crate::costmodel::Boundedness,
    latency_s: f64,
}

fn cmd_analyze_roofline(args: &RooflineArgs) -> Result<(), CliError> {
    let model = ModelSpec::llama2_7b();
    let hardware = args.hardware.spec();
    let (c, m) = match args.op {
        RooflineOp::PrefillAttn => (args.c.unwrap_or(4096), args.m.unwrap_or(0)),
        RooflineOp::DecodeAttn => (args.c.unwrap_or(1), args.m.unwrap_or(100_000)),
    };
    let cost = attention_cost(c, m, args.batch, &model).map_err(validation)?;
    let intensity = intensity(&cost).map_err(validation)?;
    let report = RooflineReport {
        op: format!("{:?}", args.op),
        c,
        m,
        batch: args.batch,
        flops: cost.flops,
        bytes: cost.rw,
        intensity,
        ridge: hardware.peak_flops / hardware.mem_bandwidth,
        boundedness: classify(intensity, &hardware),
        latency_s: theoretical_latency(&cost, &hardware),
    };
    let text = serde_json::to_string_pretty(&report).map_err(runtime)?;
    println!("{text}");
    if let Some(out) = &args.out {
        ensure_out_dir(out)?;
        std::fs::write(out.join("roofline.json"), text + "\n").map_err(runtime)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
struct SloArgs {
    /// Per-batch time budget in seconds.
    #[arg(long)]
    tpot: f64,
    /// Concurrent prefill entries in the probe batch.
    #[arg(long, default_value_t = 1)]
    prefill: u64,
    /// Concurrent decode entries in the probe batch.
    #[arg(long, default_value_t = 1)]
    decode: u64,
    #[arg(long, default_value_t = 4096)]
    c_max: Tokens,
    #[arg(long, default_value_t = 100_000)]
    m_max: Tokens,
    #[command(flatten)]
    bundle: BundleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_analyze_slo(args: &SloArgs) -> Result<(), CliError> {
    if !(args.tpot > 0.0) {
        return Err(validation("--tpot must be positive"));
    }
    if args.c_max == 0 || args.m_max == 0 {
        return Err(validation("--c-max and --m-max must be at least 1"));
    }
    let (_, _, cost, _) = args.bundle.build()?;
    let curve = slo_pareto(args.tpot, args.prefill, args.decode, &cost, args.c_max, args.m_max);
    let mut text = String::from("c,m\n");
    for (c, m) in &curve.points {
        text.push_str(&format!("{c},{m}\n"));
    }
    print!("{text}");
    eprintln!("status={:?} points={}", curve.status, curve.points.len());
    if let Some(out) = &args.out {
        ensure_out_dir(out)?;
        std::fs::write(out.join("slo.csv"), text).map_err(runtime)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
struct BreakevenArgs {
    #[command(flatten)]
    bundle: BundleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_analyze_breakeven(args: &BreakevenArgs) -> Result<(), CliError> {
    let (model, hardware, cost, _) = args.bundle.build()?;
    let breakeven = swap_recompute_breakeven(
        |n| cost.recompute_time(n),
        model.kv_bytes_per_token(),
        hardware.pcie_bandwidth,
        model.context_size,
    );
    let report = serde_json::json!({
        "kv_bytes_per_token": model.kv_bytes_per_token(),
        "pcie_bandwidth": hardware.pcie_bandwidth,
        "breakeven": breakeven,
    });
    let text = serde_json::to_string_pretty(&report).map_err(runtime)?;
    println!("{text}");
    if let Some(out) = &args.out {
        ensure_out_dir(out)?;
        std::fs::write(out.join("breakeven.json"), text + "\n").map_err(runtime)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
struct FiveruleArgs {
    /// Refill sizes to evaluate.
    #[arg(long = "n", value_delimiter = ',', required = true)]
    sizes: Vec<Tokens>,
    /// KV cache capacity in tokens.
    #[arg(long, short = 'M', default_value_t = 100_000)]
    m_capacity: Tokens,
    #[command(flatten)]
    bundle: BundleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_analyze_fiverule(args: &FiveruleArgs) -> Result<(), CliError> {
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        return Err(validation("--n needs at least one size >= 1"));
    }
    if args.m_capacity == 0 {
        return Err(validation("-M must be at least 1"));
    }
    let (_, _, cost, _) = args.bundle.build()?;
    let mut text = String::from("n,interval_s\n");
    for &n in &args.sizes {
        let interval = five_minute_interval(n, |k| cost.recompute_time(k), args.m_capacity);
        text.push_str(&format!("{n},{interval}\n"));
    }
    print!("{text}");
    if let Some(out) = &args.out {
        ensure_out_dir(out)?;
        std::fs::write(out.join("fiverule.csv"), text).map_err(runtime)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// entry points

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::ProfileSynth(args) => cmd_profile_synth(args),
        Command::Csp(CspCommand::Solve(args)) => cmd_csp_solve(args),
        Command::Csp(CspCommand::Export(args)) => cmd_csp_export(args),
        Command::Csp(CspCommand::Check(args)) => cmd_csp_check(args),
        Command::Analyze(AnalyzeCommand::Roofline(args)) => cmd_analyze_roofline(args),
        Command::Analyze(AnalyzeCommand::Slo(args)) => cmd_analyze_slo(args),
        Command::Analyze(AnalyzeCommand::Breakeven(args)) => cmd_analyze_breakeven(args),
        Command::Analyze(AnalyzeCommand::Fiverule(args)) => cmd_analyze_fiverule(args),
    }
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version via "errors" with exit code 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}
