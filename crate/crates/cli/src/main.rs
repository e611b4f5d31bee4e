//! Command line front end for the split inference simulator.
//!
//! `run` simulates one scenario and writes its request, KPI and event logs;
//! `sweep` compares static against adaptive orchestration across backhaul
//! bandwidths and renders the comparison; `solve` prints the optimizer's pick
//! for the scenario state at a single instant.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use splitsim_core::config::ScenarioConfig;
use splitsim_core::cost::{CostBreakdown, SystemState};
use splitsim_core::orchestrator::Mode;
use splitsim_core::report;
use splitsim_core::sim::{run_scenario, sweep_bandwidths, ScenarioRun};
use splitsim_core::solver::SolveContext;

#[derive(Parser)]
#[command(name = "splitsim", version, about = "Adaptive split inference placement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write request, KPI and event logs.
    Run(RunArgs),
    /// Compare static and adaptive orchestration across backhaul bandwidths.
    Sweep(SweepArgs),
    /// Print the best deployment for the scenario state at one instant.
    Solve(SolveArgs),
}

/// Flags shared by every subcommand; each one overrides a scenario field.
#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the arrival process seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the latency trigger threshold (ms).
    #[arg(long)]
    l_max_ms: Option<f64>,
    /// Override the utilization trigger threshold.
    #[arg(long)]
    u_max: Option<f64>,
    /// Override the bandwidth trigger threshold (Mb/s).
    #[arg(long)]
    b_min_mbps: Option<f64>,
    /// Override the reconfiguration cooldown (s).
    #[arg(long)]
    t_cool_s: Option<f64>,
    /// Override the segment budget for split revision.
    #[arg(long)]
    max_segments: Option<usize>,
}

impl CommonArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::from_path(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(v) = self.l_max_ms {
            cfg.thresholds.l_max_ms = v;
        }
        if let Some(v) = self.u_max {
            cfg.thresholds.u_max = v;
        }
        if let Some(v) = self.b_min_mbps {
            cfg.thresholds.b_min_mbps = v;
        }
        if let Some(v) = self.t_cool_s {
            cfg.thresholds.t_cool_s = v;
        }
        if let Some(v) = self.max_segments {
            cfg.max_segments = v;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the orchestration mode (static or adaptive).
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Output directory for requests.csv, kpi.csv and events.jsonl.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated backhaul bandwidths in Mb/s, e.g. 20,50,100,200.
    #[arg(long)]
    bandwidths: String,
    /// Output directory for summary.csv, the chart and per-cell logs.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Instant to sample the infrastructure state at (s).
    #[arg(long, default_value_t = 0.0)]
    t: f64,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    match s {
        "static" => Ok(Mode::Static),
        "adaptive" => Ok(Mode::Adaptive),
        other => Err(format!("unknown mode `{other}`, expected static or adaptive")),
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Static => "static",
        Mode::Adaptive => "adaptive",
    }
}

fn write_run_logs(dir: &Path, run: &ScenarioRun) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let open = |name: &str| -> Result<BufWriter<File>> {
        let path = dir.join(name);
        Ok(BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        ))
    };
    report::write_requests_csv(open("requests.csv")?, &run.records)?;
    report::write_kpi_csv(open("kpi.csv")?, &run.windows)?;
    report::write_events_jsonl(open("events.jsonl")?, &run.events)?;
    Ok(())
}

fn print_run_summary(run: &ScenarioRun) {
    let served = run.records.iter().filter(|r| r.served).count();
    println!(
        "scenario {} ({}): {} requests, {} served",
        run.scenario_name,
        mode_name(run.mode),
        run.records.len(),
        served
    );
    let fmt = |v: Option<f64>| match v {
        Some(v) => format!("{v:.2} ms"),
        None => "n/a".to_string(),
    };
    println!(
        "steady state: mean {}, p95 {}, throughput {:.2} rps, max utilization {:.3}",
        fmt(run.steady.mean_latency_ms),
        fmt(run.steady.p95_latency_ms),
        run.steady.throughput_rps,
        run.steady.max_node_utilization
    );
    let applied = run.events.iter().filter(|e| e.kind.applied()).count();
    println!(
        "reconfigurations: {} applied of {} monitor cycles; orchestration overhead {:.0} ms",
        applied,
        run.events.len(),
        run.orchestration_overhead_ms
    );
    println!(
        "final deployment: boundaries {:?} on {:?}",
        run.final_boundaries, run.final_placement
    );
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut cfg = args.common.load()?;
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    let run = run_scenario(&cfg)?;
    write_run_logs(&args.out, &run)?;
    print_run_summary(&run);
    println!(
        "wrote {}",
        ["requests.csv", "kpi.csv", "events.jsonl"]
            .map(|f| args.out.join(f).display().to_string())
            .join(", ")
    );
    Ok(())
}

fn fmt_bandwidth(bw: f64) -> String {
    if bw.fract() == 0.0 {
        format!("{}", bw as u64)
    } else {
        format!("{bw}")
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let cfg = args.common.load()?;
    let bandwidths = args
        .bandwidths
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid bandwidth `{s}`"))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, cells) = sweep_bandwidths(&cfg, &bandwidths)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let summary_path = args.out.join("summary.csv");
    report::write_summary_csv(
        BufWriter::new(File::create(&summary_path)?),
        &rows,
    )?;
    let chart_path = args.out.join("latency_vs_bandwidth.svg");
    fs::write(&chart_path, report::render_latency_chart(&cfg.name, &rows))?;
    for cell in &cells {
        let dir = args.out.join(format!(
            "{}mbps-{}",
            fmt_bandwidth(cell.bandwidth_mbps),
            mode_name(cell.mode)
        ));
        write_run_logs(&dir, &cell.run)?;
    }

    println!("bandwidth_mbps  static_ms  adaptive_ms  delta_pct  thr_ratio  max_util  reconfigs");
    for r in &rows {
        println!(
            "{:<15} {:>9.2} {:>12.2} {:>10.1} {:>10.2} {:>9.3} {:>10}",
            fmt_bandwidth(r.bandwidth_mbps),
            r.static_latency_ms,
            r.adaptive_latency_ms,
            r.delta_pct,
            r.throughput_ratio,
            r.max_gpu_util,
            r.reconfig_count
        );
    }
    println!(
        "wrote {}, {} and {} per-cell log directories",
        summary_path.display(),
        chart_path.display(),
        cells.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    scenario: String,
    t_s: f64,
    boundaries: Vec<usize>,
    placement: Vec<String>,
    cost: CostBreakdown,
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let cfg = args.common.load()?;
    let scn = cfg.build()?;
    let state = SystemState::sample(&scn.topo, args.t, scn.arrival_rate_per_s, scn.workload)?;
    let ctx = SolveContext::new(&scn.topo, &state, &scn.params, &scn.weights);
    let (scheme, placement, cost) = ctx.split_revision(&scn.profile, scn.max_segments)?;
    let out = SolveOutput {
        scenario: scn.name.clone(),
        t_s: args.t,
        boundaries: scheme.boundaries.clone(),
        placement: placement
            .assignment()
            .iter()
            .map(|&n| scn.topo.node_id(n).to_string())
            .collect(),
        cost,
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Solve(args) => cmd_solve(&args),
    }
}
