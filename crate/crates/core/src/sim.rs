//! Deterministic discrete-time simulation of a scenario.
//!
//! Arrivals are a Poisson process pregenerated from the scenario seed, so a
//! static and an adaptive run of the same scenario see the same requests at
//! the same instants. The engine advances in fixed ticks: each tick runs a
//! monitoring cycle when one is due (adaptive mode only), refreshes the
//! analytic service capacity of the current deployment, and serves the tick's
//! arrivals through a token bucket sized to one second of that capacity.
//! Served requests get the closed-form latency of the deployment at their
//! exact arrival instant, plus the migration delay while a reconfiguration
//! transfer is in flight; requests beyond capacity are dropped. Nothing reads
//! the clock or an unseeded RNG, so identical inputs produce identical output.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Scenario, ScenarioConfig};
use crate::cost::{CostModel, SystemState};
use crate::error::{Error, Result};
use crate::monitor::{update_ewma, EnvironmentState};
use crate::orchestrator::{Mode, OrchestratorState, ReconfigEvent, StepContext};
use crate::solver::SolveContext;

/// One request's journey through the simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestRecord {
    pub request_id: u64,
    pub arrival_s: f64,
    pub workload: f64,
    pub served: bool,
    /// End-to-end latency; empty for dropped requests.
    pub latency_ms: Option<f64>,
    /// Deployment generation that handled the request.
    pub epoch: u64,
    /// True when the request arrived during a reconfiguration transfer and
    /// paid the migration delay.
    pub penalized_by_migration: bool,
}

/// Aggregated metrics over one KPI window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiWindow {
    pub start_s: f64,
    pub end_s: f64,
    pub arrivals: u64,
    pub served: u64,
    pub mean_latency_ms: Option<f64>,
    pub p95_latency_ms: Option<f64>,
    /// Smoothed latency as of the window's end.
    pub ewma_latency_ms: Option<f64>,
    pub throughput_rps: f64,
    pub max_node_utilization: f64,
    pub mean_node_utilization: f64,
    /// Applied reconfigurations inside the window.
    pub reconfig_count: u64,
}

/// Post-warmup aggregates of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadySummary {
    pub mean_latency_ms: Option<f64>,
    pub p95_latency_ms: Option<f64>,
    pub throughput_rps: f64,
    pub max_node_utilization: f64,
}

/// Complete output of one simulated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub scenario_name: String,
    pub mode: Mode,
    pub records: Vec<RequestRecord>,
    pub windows: Vec<KpiWindow>,
    pub events: Vec<ReconfigEvent>,
    pub steady: SteadySummary,
    /// Accumulated monitoring-cycle cost, accounted separately from request
    /// latency.
    pub orchestration_overhead_ms: f64,
    pub final_boundaries: Vec<usize>,
    pub final_placement: Vec<String>,
}

/// Poisson arrival times on `[0, duration_s)`, pregenerated from `seed` and
/// independent of anything the simulation later does.
pub fn poisson_arrivals(seed: u64, rate_per_s: f64, duration_s: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    if rate_per_s <= 0.0 {
        return out;
    }
    let mut t = 0.0;
    loop {
        // 53-bit uniform in [0, 1); the gap -ln(1-u)/rate is exponential.
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        t += -(1.0 - u).ln() / rate_per_s;
        if t >= duration_s {
            break;
        }
        out.push(t);
    }
    out
}

/// Nearest-rank 95th percentile of an unsorted sample.
fn p95(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("latencies are finite"));
    let rank = ((0.95 * values.len() as f64).ceil() as usize).max(1);
    Some(values[rank - 1])
}

/// Runs a validated scenario to completion.
pub fn run(scn: &Scenario) -> Result<ScenarioRun> {
    let arrivals = poisson_arrivals(scn.seed, scn.arrival_rate_per_s, scn.duration_s);
    let tick = scn.calibration.tick_s;
    let model = CostModel::new(&scn.topo, &scn.params);

    let state0 = SystemState::sample(&scn.topo, 0.0, scn.arrival_rate_per_s, scn.workload)?;
    let ctx0 = SolveContext::new(&scn.topo, &state0, &scn.params, &scn.weights);
    let mut orch = OrchestratorState::deploy(
        &ctx0,
        &scn.profile,
        &scn.baseline_boundaries,
        scn.baseline_placement.clone(),
        scn.mode,
    )?;

    let mut records: Vec<RequestRecord> = Vec::with_capacity(arrivals.len());
    let mut ewma: Option<f64> = None;
    let mut overhead_ms = 0.0;
    let mut credit: Option<f64> = None;
    let mut transfer_end_s = f64::NEG_INFINITY;
    let mut transfer_delay_ms = 0.0;
    let mut cursor = 0usize;
    let mut tick_util_max: Vec<f64> = Vec::with_capacity(scn.ticks_total as usize);
    let mut tick_util_mean: Vec<f64> = Vec::with_capacity(scn.ticks_total as usize);

    for i in 0..scn.ticks_total {
        let t = i as f64 * tick;
        let state = SystemState::sample(&scn.topo, t, scn.arrival_rate_per_s, scn.workload)?;

        if scn.mode == Mode::Adaptive && i % scn.ticks_per_monitor == 0 {
            overhead_ms += scn.calibration.monitor_overhead_ms;
            let utils =
                model.node_utilizations(&orch.scheme, orch.placement.assignment(), &state);
            let env = EnvironmentState {
                t_s: t,
                ewma_latency_ms: ewma,
                node_utilization: utils,
                link_bandwidth_mbps: state.link_bandwidth_mbps.clone(),
                window_s: scn.calibration.monitor_interval_s,
            };
            let solve = SolveContext::new(&scn.topo, &state, &scn.params, &scn.weights);
            let sctx = StepContext {
                solve,
                profile: &scn.profile,
                thresholds: &scn.thresholds,
                max_segments: scn.max_segments,
                migration_overhead_ms: scn.calibration.migration_overhead_ms,
            };
            let event = orch.step(&env, &sctx);
            if event.kind.applied() {
                // Weight transfer in flight: requests arriving before it
                // finishes pay the full switchover delay.
                transfer_end_s = t + event.migration_delay_ms / 1000.0;
                transfer_delay_ms = event.migration_delay_ms;
                credit = None;
            }
        }

        // Admission: a token bucket holding one second of the deployment's
        // bottleneck capacity, refilled per tick.
        let capacity_rps =
            model.bottleneck_capacity_rps(&orch.scheme, orch.placement.assignment(), &state)?;
        let depth = capacity_rps.max(1.0);
        let bucket = credit.get_or_insert(depth);
        *bucket = (*bucket + capacity_rps * tick).min(depth);

        let tick_end = (i + 1) as f64 * tick;
        while cursor < arrivals.len() && arrivals[cursor] < tick_end {
            let ta = arrivals[cursor];
            let served = *bucket >= 1.0;
            let mut latency_ms = None;
            let mut penalized = false;
            if served {
                *bucket -= 1.0;
                let state_a =
                    SystemState::sample(&scn.topo, ta, scn.arrival_rate_per_s, scn.workload)?;
                let lat =
                    model.latency(&orch.scheme, orch.placement.assignment(), &state_a)?;
                let mut total = lat.total_ms;
                if ta < transfer_end_s {
                    total += transfer_delay_ms;
                    penalized = true;
                }
                ewma = Some(update_ewma(ewma, total, scn.calibration.ewma_smoothing));
                latency_ms = Some(total);
            }
            records.push(RequestRecord {
                request_id: cursor as u64,
                arrival_s: ta,
                workload: scn.workload,
                served,
                latency_ms,
                epoch: orch.epoch,
                penalized_by_migration: penalized,
            });
            cursor += 1;
        }

        let utils = model.node_utilizations(&orch.scheme, orch.placement.assignment(), &state);
        let max_u = utils.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean_u = utils.iter().sum::<f64>() / utils.len() as f64;
        tick_util_max.push(max_u);
        tick_util_mean.push(mean_u);
    }

    let windows = build_windows(scn, &records, &orch.events, &tick_util_max, &tick_util_mean);
    let steady = steady_summary(scn, &records, &tick_util_max);
    let final_placement = orch
        .placement
        .assignment()
        .iter()
        .map(|&n| scn.topo.node_id(n).to_string())
        .collect();

    Ok(ScenarioRun {
        scenario_name: scn.name.clone(),
        mode: scn.mode,
        records,
        windows,
        events: orch.events,
        steady,
        orchestration_overhead_ms: overhead_ms,
        final_boundaries: orch.scheme.boundaries,
        final_placement,
    })
}

/// Parses, validates and runs a scenario configuration.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    run(&cfg.build()?)
}

fn build_windows(
    scn: &Scenario,
    records: &[RequestRecord],
    events: &[ReconfigEvent],
    tick_util_max: &[f64],
    tick_util_mean: &[f64],
) -> Vec<KpiWindow> {
    let tick = scn.calibration.tick_s;
    let tpw = scn.ticks_per_window;
    let n_windows = scn.ticks_total.div_ceil(tpw);
    let mut windows = Vec::with_capacity(n_windows as usize);
    let mut rec_cursor = 0usize;
    // Replay the engine's EWMA stream so window-end snapshots match what the
    // monitor saw, bit for bit.
    let mut ewma: Option<f64> = None;

    for w in 0..n_windows {
        let start_tick = w * tpw;
        let end_tick = ((w + 1) * tpw).min(scn.ticks_total);
        let start_s = start_tick as f64 * tick;
        let end_s = end_tick as f64 * tick;

        let mut arrivals = 0u64;
        let mut served = 0u64;
        let mut latencies = Vec::new();
        while rec_cursor < records.len() && records[rec_cursor].arrival_s < end_s {
            let r = &records[rec_cursor];
            arrivals += 1;
            if r.served {
                served += 1;
                let l = r.latency_ms.expect("served requests have a latency");
                ewma = Some(update_ewma(ewma, l, scn.calibration.ewma_smoothing));
                latencies.push(l);
            }
            rec_cursor += 1;
        }

        let mean = (!latencies.is_empty())
            .then(|| latencies.iter().sum::<f64>() / latencies.len() as f64);
        let p95_ms = p95(&mut latencies);
        let span = end_s - start_s;
        let ticks = &tick_util_max[start_tick as usize..end_tick as usize];
        let max_u = ticks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean_ticks = &tick_util_mean[start_tick as usize..end_tick as usize];
        let mean_u = mean_ticks.iter().sum::<f64>() / mean_ticks.len() as f64;
        let reconfigs = events
            .iter()
            .filter(|e| e.kind.applied() && e.t_s >= start_s && e.t_s < end_s)
            .count() as u64;

        windows.push(KpiWindow {
            start_s,
            end_s,
            arrivals,
            served,
            mean_latency_ms: mean,
            p95_latency_ms: p95_ms,
            ewma_latency_ms: ewma,
            throughput_rps: served as f64 / span,
            max_node_utilization: max_u,
            mean_node_utilization: mean_u,
            reconfig_count: reconfigs,
        });
    }
    windows
}

fn steady_summary(
    scn: &Scenario,
    records: &[RequestRecord],
    tick_util_max: &[f64],
) -> SteadySummary {
    let warmup = scn.calibration.warmup_s;
    let tick = scn.calibration.tick_s;
    let mut latencies = Vec::new();
    let mut served = 0u64;
    for r in records {
        if r.arrival_s < warmup {
            continue;
        }
        if r.served {
            served += 1;
            latencies.push(r.latency_ms.expect("served requests have a latency"));
        }
    }
    let mean = (!latencies.is_empty())
        .then(|| latencies.iter().sum::<f64>() / latencies.len() as f64);
    let p95_ms = p95(&mut latencies);
    let span = scn.duration_s - warmup;
    // First tick index at or past the warmup cutoff.
    let first_tick = ((warmup / tick) - 1e-9).ceil().max(0.0) as usize;
    let max_u = tick_util_max[first_tick.min(tick_util_max.len())..]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    SteadySummary {
        mean_latency_ms: mean,
        p95_latency_ms: p95_ms,
        throughput_rps: served as f64 / span,
        max_node_utilization: max_u,
    }
}

/// One row of the bandwidth sweep summary, matching the reference layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub bandwidth_mbps: f64,
    pub static_latency_ms: f64,
    pub adaptive_latency_ms: f64,
    pub delta_pct: f64,
    pub throughput_ratio: f64,
    pub max_gpu_util: f64,
    pub reconfig_count: u64,
}

/// One simulated cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub bandwidth_mbps: f64,
    pub mode: Mode,
    pub run: ScenarioRun,
}

/// Runs the scenario once per bandwidth and mode, with identical seeds, and
/// reduces each bandwidth to one comparison row.
pub fn sweep_bandwidths(
    cfg: &ScenarioConfig,
    bandwidths: &[f64],
) -> Result<(Vec<ComparisonRow>, Vec<SweepCell>)> {
    if bandwidths.is_empty() {
        return Err(Error::config("sweep", "at least one bandwidth is required"));
    }
    let mut rows = Vec::with_capacity(bandwidths.len());
    let mut cells = Vec::with_capacity(bandwidths.len() * 2);
    for &bw in bandwidths {
        if bw <= 0.0 || !bw.is_finite() {
            return Err(Error::config("sweep", format!("invalid bandwidth {bw}")));
        }
        let mut static_cfg = cfg.clone();
        static_cfg.set_backhaul_bandwidth(bw);
        static_cfg.mode = Mode::Static;
        let mut adaptive_cfg = cfg.clone();
        adaptive_cfg.set_backhaul_bandwidth(bw);
        adaptive_cfg.mode = Mode::Adaptive;

        let static_run = run_scenario(&static_cfg)?;
        let adaptive_run = run_scenario(&adaptive_cfg)?;

        let static_latency = static_run.steady.mean_latency_ms.ok_or_else(|| {
            Error::config("sweep", format!("static cell at {bw} Mb/s served no steady-state requests"))
        })?;
        let adaptive_latency = adaptive_run.steady.mean_latency_ms.ok_or_else(|| {
            Error::config("sweep", format!("adaptive cell at {bw} Mb/s served no steady-state requests"))
        })?;
        let throughput_ratio = if static_run.steady.throughput_rps > 0.0 {
            adaptive_run.steady.throughput_rps / static_run.steady.throughput_rps
        } else if adaptive_run.steady.throughput_rps == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
        let reconfig_count = adaptive_run
            .events
            .iter()
            .filter(|e| e.kind.applied())
            .count() as u64;

        rows.push(ComparisonRow {
            bandwidth_mbps: bw,
            static_latency_ms: static_latency,
            adaptive_latency_ms: adaptive_latency,
            delta_pct: (adaptive_latency - static_latency) / static_latency * 100.0,
            throughput_ratio,
            max_gpu_util: adaptive_run.steady.max_node_utilization,
            reconfig_count,
        });
        cells.push(SweepCell {
            bandwidth_mbps: bw,
            mode: Mode::Static,
            run: static_run,
        });
        cells.push(SweepCell {
            bandwidth_mbps: bw,
            mode: Mode::Adaptive,
            run: adaptive_run,
        });
    }
    Ok((rows, cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrivals_are_deterministic_per_seed() {
        let a = poisson_arrivals(42, 10.0, 50.0);
        let b = poisson_arrivals(42, 10.0, 50.0);
        assert_eq!(a, b);
        let c = poisson_arrivals(43, 10.0, 50.0);
        assert_ne!(a, c);
    }

    #[test]
    fn arrivals_are_sorted_in_range_and_plausible() {
        let a = poisson_arrivals(7, 10.0, 100.0);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.iter().all(|&t| (0.0..100.0).contains(&t)));
        // Poisson(1000): five sigmas is about 160.
        assert!((800..1200).contains(&a.len()), "got {}", a.len());
    }

    #[test]
    fn zero_rate_produces_no_arrivals() {
        assert!(poisson_arrivals(1, 0.0, 100.0).is_empty());
    }

    #[test]
    fn p95_nearest_rank() {
        let mut v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(p95(&mut v), Some(95.0));
        let mut v: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        assert_eq!(p95(&mut v), Some(19.0));
        let mut one = vec![7.0];
        assert_eq!(p95(&mut one), Some(7.0));
        let mut empty: Vec<f64> = Vec::new();
        assert_eq!(p95(&mut empty), None);
    }

    fn tiny_config(mode: &str) -> ScenarioConfig {
        let json = format!(
            r#"{{
            "model": {{
                "name": "tiny",
                "layers": [{{"repeat": 2, "compute_flops": 1e9, "weight_bytes": 1000, "activation_out_bits": 8000}}]
            }},
            "topology": {{
                "nodes": [{{"id": "edge", "trusted": true, "compute_rate_flops": 1e12, "mem_capacity_bytes": 1e6}}]
            }},
            "arrival_rate_per_s": 5.0,
            "duration_s": 20.0,
            "seed": 11,
            "mode": "{mode}",
            "max_segments": 2,
            "calibration": {{"warmup_s": 4.0}},
            "baseline": {{"boundaries": [], "placement": ["edge"]}}
        }}"#
        );
        ScenarioConfig::from_json(&json).unwrap()
    }

    #[test]
    fn every_arrival_becomes_exactly_one_record() {
        let cfg = tiny_config("static");
        let run = run_scenario(&cfg).unwrap();
        let expected = poisson_arrivals(11, 5.0, 20.0);
        assert_eq!(run.records.len(), expected.len());
        for (r, &t) in run.records.iter().zip(&expected) {
            assert_eq!(r.arrival_s, t);
            assert!(r.served, "underloaded single node drops nothing");
            assert_eq!(r.epoch, 0);
        }
        let ids: Vec<u64> = run.records.iter().map(|r| r.request_id).collect();
        let want: Vec<u64> = (0..expected.len() as u64).collect();
        assert_eq!(ids, want);
    }

    #[test]
    fn static_mode_never_reconfigures() {
        let cfg = tiny_config("static");
        let run = run_scenario(&cfg).unwrap();
        assert!(run.events.is_empty());
        assert_eq!(run.orchestration_overhead_ms, 0.0);
        assert_eq!(run.final_boundaries, Vec::<usize>::new());
        assert_eq!(run.final_placement, vec!["edge".to_string()]);
    }

    #[test]
    fn runs_are_bit_identical() {
        for mode in ["static", "adaptive"] {
            let cfg = tiny_config(mode);
            let a = run_scenario(&cfg).unwrap();
            let b = run_scenario(&cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn windows_tile_the_horizon_and_conserve_requests() {
        let cfg = tiny_config("adaptive");
        let run = run_scenario(&cfg).unwrap();
        // 20 s horizon, 10 s windows.
        assert_eq!(run.windows.len(), 2);
        assert_eq!(run.windows[0].start_s, 0.0);
        assert_eq!(run.windows[1].end_s, 20.0);
        let arrivals: u64 = run.windows.iter().map(|w| w.arrivals).sum();
        assert_eq!(arrivals as usize, run.records.len());
        let served: u64 = run.windows.iter().map(|w| w.served).sum();
        assert_eq!(served as usize, run.records.iter().filter(|r| r.served).count());
        for w in &run.windows {
            assert_eq!(w.throughput_rps, w.served as f64 / (w.end_s - w.start_s));
        }
    }

    #[test]
    fn single_node_static_and_adaptive_agree() {
        // With one node there is nothing to optimize: the adaptive run must
        // reproduce the static latencies exactly.
        let s = run_scenario(&tiny_config("static")).unwrap();
        let a = run_scenario(&tiny_config("adaptive")).unwrap();
        assert_eq!(s.records.len(), a.records.len());
        for (rs, ra) in s.records.iter().zip(&a.records) {
            assert_eq!(rs.latency_ms, ra.latency_ms);
            assert_eq!(rs.served, ra.served);
        }
        assert_eq!(s.steady.mean_latency_ms, a.steady.mean_latency_ms);
        assert!(a.events.iter().all(|e| !e.kind.applied()));
    }

    #[test]
    fn sweep_produces_one_row_and_two_cells_per_bandwidth() {
        let cfg = tiny_config("adaptive");
        let (rows, cells) = sweep_bandwidths(&cfg, &[50.0, 100.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(cells.len(), 4);
        assert_eq!(rows[0].bandwidth_mbps, 50.0);
        // Single node: identical latencies, ratio exactly 1.
        assert_eq!(rows[0].delta_pct, 0.0);
        assert_eq!(rows[0].throughput_ratio, 1.0);
        assert_eq!(rows[0].reconfig_count, 0);
    }

    #[test]
    fn sweep_rejects_empty_and_invalid_bandwidths() {
        let cfg = tiny_config("adaptive");
        assert!(sweep_bandwidths(&cfg, &[]).is_err());
        assert!(sweep_bandwidths(&cfg, &[-5.0]).is_err());
    }
}
