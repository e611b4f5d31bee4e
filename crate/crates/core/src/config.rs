//! Scenario configuration: JSON schema, defaults, validation, and the build
//! into runtime types. Validation errors carry the dotted path of the
//! offending field.

use std::path::Path;

use serde::{Deserialize, Deserializer};

use crate::cost::{CostParams, CostWeights};
use crate::error::{Error, Result};
use crate::infra::{Link, Node, Topology, Trace};
use crate::model::{make_split, LayerProfile, ModelProfile};
use crate::monitor::TriggerThresholds;
use crate::orchestrator::Mode;
use crate::solver::Placement;

/// Accepts byte counts written as JSON integers or as integral floats such as
/// `2.5e8`. Rejects fractions and anything beyond exact f64 integer range.
fn bytes_from_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
    let v = f64::deserialize(d)?;
    if !v.is_finite() || v < 0.0 || v.fract() != 0.0 || v > 9.007_199_254_740_992e15 {
        return Err(serde::de::Error::custom(format!(
            "expected a non-negative integral byte count, found {v}"
        )));
    }
    Ok(v as u64)
}

/// Piecewise-constant trace: either a single constant or `[t, value]` points.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TraceSpec {
    Constant(f64),
    Points(Vec<(f64, f64)>),
}

impl TraceSpec {
    fn build(&self, field: &str) -> Result<Trace> {
        let trace = match self {
            TraceSpec::Constant(v) => Ok(Trace::constant(*v)),
            TraceSpec::Points(points) => Trace::new(points.clone()),
        };
        trace.map_err(|e| match e {
            Error::Config { reason, .. } => Error::config(field, reason),
            other => other,
        })
    }
}

fn default_repeat() -> usize {
    1
}

/// One layer, or a run of identical layers when `repeat > 1`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerGroupConfig {
    #[serde(default = "default_repeat")]
    pub repeat: usize,
    pub compute_flops: f64,
    #[serde(deserialize_with = "bytes_from_number")]
    pub weight_bytes: u64,
    pub activation_out_bits: f64,
    #[serde(default)]
    pub privacy_critical: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub layers: Vec<LayerGroupConfig>,
}

fn default_utilization() -> TraceSpec {
    TraceSpec::Constant(0.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub id: String,
    #[serde(default)]
    pub cloud: bool,
    #[serde(default)]
    pub trusted: bool,
    pub compute_rate_flops: f64,
    #[serde(deserialize_with = "bytes_from_number")]
    pub mem_capacity_bytes: u64,
    #[serde(default = "default_utilization")]
    pub utilization: TraceSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub a: String,
    pub b: String,
    pub bandwidth_mbps: TraceSpec,
    #[serde(default)]
    pub propagation_delay_ms: f64,
    #[serde(default)]
    pub backhaul: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub nodes: Vec<NodeConfig>,
    #[serde(default)]
    pub links: Vec<LinkConfig>,
}

/// Model-shape and engine parameters. Every field has a sensible default, so
/// configs only name what they change.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub q_scale_ms: f64,
    pub rho_cap: f64,
    pub overload_penalty: f64,
    pub ewma_smoothing: f64,
    pub monitor_interval_s: f64,
    pub tick_s: f64,
    pub kpi_window_s: f64,
    pub warmup_s: f64,
    pub migration_overhead_ms: f64,
    pub monitor_overhead_ms: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            q_scale_ms: 20.0,
            rho_cap: 0.99,
            overload_penalty: 10.0,
            ewma_smoothing: 0.2,
            monitor_interval_s: 2.0,
            tick_s: 0.1,
            kpi_window_s: 10.0,
            warmup_s: 20.0,
            migration_overhead_ms: 10.0,
            monitor_overhead_ms: 10.0,
        }
    }
}

impl CalibrationConfig {
    pub fn cost_params(&self) -> CostParams {
        CostParams {
            q_scale_ms: self.q_scale_ms,
            rho_cap: self.rho_cap,
            overload_penalty: self.overload_penalty,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub boundaries: Vec<usize>,
    pub placement: Vec<String>,
}

fn default_name() -> String {
    "scenario".to_string()
}

fn default_workload() -> f64 {
    1.0
}

fn default_mode() -> Mode {
    Mode::Adaptive
}

fn default_max_segments() -> usize {
    4
}

/// Root of a scenario file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub model: ModelConfig,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub weights: CostWeights,
    #[serde(default)]
    pub thresholds: TriggerThresholds,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    pub arrival_rate_per_s: f64,
    #[serde(default = "default_workload")]
    pub workload: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_max_segments")]
    pub max_segments: usize,
    pub baseline: BaselineConfig,
}

/// Fully validated runtime scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub profile: ModelProfile,
    pub topo: Topology,
    pub weights: CostWeights,
    pub thresholds: TriggerThresholds,
    pub params: CostParams,
    pub calibration: CalibrationConfig,
    pub arrival_rate_per_s: f64,
    pub workload: f64,
    pub duration_s: f64,
    pub seed: u64,
    pub mode: Mode,
    pub max_segments: usize,
    pub baseline_boundaries: Vec<usize>,
    pub baseline_placement: Placement,
    /// Tick counts derived from the calibration block.
    pub ticks_total: u64,
    pub ticks_per_monitor: u64,
    pub ticks_per_window: u64,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// `value` must be a whole number of ticks.
fn tick_multiple(field: &str, value: f64, tick_s: f64) -> Result<u64> {
    if value <= 0.0 || !value.is_finite() {
        return Err(Error::config(field, "must be finite and > 0"));
    }
    let n = (value / tick_s).round();
    if n < 1.0 || (n * tick_s - value).abs() > 1e-9 * value.max(1.0) {
        return Err(Error::config(
            field,
            format!("must be a whole multiple of tick_s = {tick_s}"),
        ));
    }
    Ok(n as u64)
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::config("$", e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config { field, reason } => Error::Config {
                field: format!("{}:{field}", path.as_ref().display()),
                reason,
            },
            other => other,
        })
    }

    /// Overrides the bandwidth of every link flagged `backhaul`, or of every
    /// link when none is flagged. Used by bandwidth sweeps.
    pub fn set_backhaul_bandwidth(&mut self, mbps: f64) {
        let any_backhaul = self.topology.links.iter().any(|l| l.backhaul);
        for link in &mut self.topology.links {
            if link.backhaul || !any_backhaul {
                link.bandwidth_mbps = TraceSpec::Constant(mbps);
            }
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        // Model.
        let mut layers = Vec::new();
        for (g, group) in self.model.layers.iter().enumerate() {
            if group.repeat == 0 {
                return Err(Error::config(
                    format!("model.layers[{g}].repeat"),
                    "must be >= 1",
                ));
            }
            for _ in 0..group.repeat {
                layers.push(LayerProfile {
                    index: layers.len(),
                    compute_flops: group.compute_flops,
                    weight_bytes: group.weight_bytes,
                    activation_out_bits: group.activation_out_bits,
                    privacy_critical: group.privacy_critical,
                });
            }
        }
        let profile = ModelProfile::new(self.model.name.clone(), layers)?;

        // Topology.
        let mut nodes = Vec::new();
        for (i, nc) in self.topology.nodes.iter().enumerate() {
            if !valid_id(&nc.id) {
                return Err(Error::config(
                    format!("topology.nodes[{i}].id"),
                    format!(
                        "`{}` is not a valid id (ascii letters, digits, `_-.`)",
                        nc.id
                    ),
                ));
            }
            nodes.push(Node {
                id: nc.id.clone(),
                is_cloud: nc.cloud,
                trusted: nc.trusted,
                compute_rate_flops: nc.compute_rate_flops,
                mem_capacity_bytes: nc.mem_capacity_bytes,
                utilization: nc
                    .utilization
                    .build(&format!("topology.nodes[{i}].utilization"))?,
            });
        }
        let mut links = Vec::new();
        for (i, lc) in self.topology.links.iter().enumerate() {
            let a = nodes.iter().position(|n| n.id == lc.a).ok_or_else(|| {
                Error::config(format!("topology.links[{i}].a"), format!("unknown node `{}`", lc.a))
            })?;
            let b = nodes.iter().position(|n| n.id == lc.b).ok_or_else(|| {
                Error::config(format!("topology.links[{i}].b"), format!("unknown node `{}`", lc.b))
            })?;
            links.push(Link {
                a,
                b,
                bandwidth_mbps: lc
                    .bandwidth_mbps
                    .build(&format!("topology.links[{i}].bandwidth_mbps"))?,
                propagation_delay_ms: lc.propagation_delay_ms,
                backhaul: lc.backhaul,
            });
        }
        let topo = Topology::new(nodes, links)?;

        // Objective and engine parameters.
        self.weights.validate()?;
        let thr = &self.thresholds;
        for (field, v) in [
            ("thresholds.l_max_ms", thr.l_max_ms),
            ("thresholds.u_max", thr.u_max),
            ("thresholds.b_min_mbps", thr.b_min_mbps),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::config(field, "must be finite and > 0"));
            }
        }
        if thr.t_cool_s < 0.0 || !thr.t_cool_s.is_finite() {
            return Err(Error::config("thresholds.t_cool_s", "must be finite and >= 0"));
        }

        let cal = &self.calibration;
        if cal.q_scale_ms < 0.0 || !cal.q_scale_ms.is_finite() {
            return Err(Error::config("calibration.q_scale_ms", "must be finite and >= 0"));
        }
        if !(cal.rho_cap > 0.0 && cal.rho_cap < 1.0) {
            return Err(Error::config("calibration.rho_cap", "must lie in (0, 1)"));
        }
        if cal.overload_penalty < 0.0 || !cal.overload_penalty.is_finite() {
            return Err(Error::config("calibration.overload_penalty", "must be finite and >= 0"));
        }
        if !(cal.ewma_smoothing > 0.0 && cal.ewma_smoothing <= 1.0) {
            return Err(Error::config("calibration.ewma_smoothing", "must lie in (0, 1]"));
        }
        if cal.tick_s <= 0.0 || !cal.tick_s.is_finite() {
            return Err(Error::config("calibration.tick_s", "must be finite and > 0"));
        }
        for (field, v) in [
            ("calibration.warmup_s", cal.warmup_s),
            ("calibration.migration_overhead_ms", cal.migration_overhead_ms),
            ("calibration.monitor_overhead_ms", cal.monitor_overhead_ms),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::config(field, "must be finite and >= 0"));
            }
        }

        if self.arrival_rate_per_s < 0.0 || !self.arrival_rate_per_s.is_finite() {
            return Err(Error::config("arrival_rate_per_s", "must be finite and >= 0"));
        }
        if self.workload <= 0.0 || !self.workload.is_finite() {
            return Err(Error::config("workload", "must be finite and > 0"));
        }
        let ticks_total = tick_multiple("duration_s", self.duration_s, cal.tick_s)?;
        let ticks_per_monitor =
            tick_multiple("calibration.monitor_interval_s", cal.monitor_interval_s, cal.tick_s)?;
        let ticks_per_window =
            tick_multiple("calibration.kpi_window_s", cal.kpi_window_s, cal.tick_s)?;
        if cal.warmup_s >= self.duration_s {
            return Err(Error::config(
                "calibration.warmup_s",
                format!(
                    "warmup {}s leaves no steady-state interval in a {}s run",
                    cal.warmup_s, self.duration_s
                ),
            ));
        }
        if self.max_segments == 0 {
            return Err(Error::config("max_segments", "must be >= 1"));
        }
        // A model cannot split into more segments than it has layers.
        let max_segments = self.max_segments.min(profile.num_layers());

        // Baseline deployment.
        make_split(&profile, &self.baseline.boundaries).map_err(|e| {
            Error::config("baseline.boundaries", e.to_string())
        })?;
        if self.baseline.placement.len() != self.baseline.boundaries.len() + 1 {
            return Err(Error::config(
                "baseline.placement",
                format!(
                    "expected {} hosts for {} boundaries, found {}",
                    self.baseline.boundaries.len() + 1,
                    self.baseline.boundaries.len(),
                    self.baseline.placement.len()
                ),
            ));
        }
        let mut assignment = Vec::new();
        for (j, id) in self.baseline.placement.iter().enumerate() {
            let idx = topo.node_index(id).ok_or_else(|| {
                Error::config(
                    format!("baseline.placement[{j}]"),
                    format!("unknown node `{id}`"),
                )
            })?;
            assignment.push(idx);
        }

        Ok(Scenario {
            name: self.name.clone(),
            profile,
            topo,
            weights: self.weights,
            thresholds: self.thresholds,
            params: cal.cost_params(),
            calibration: cal.clone(),
            arrival_rate_per_s: self.arrival_rate_per_s,
            workload: self.workload,
            duration_s: self.duration_s,
            seed: self.seed,
            mode: self.mode,
            max_segments,
            baseline_boundaries: self.baseline.boundaries.clone(),
            baseline_placement: Placement::new(assignment),
            ticks_total,
            ticks_per_monitor,
            ticks_per_window,
        })
    }
}
