//! Deterministic simulator and optimizer for split inference of layered
//! models across heterogeneous edge and cloud nodes.
//!
//! The crate models a layer-partitioned network (`model`), a node/link
//! topology with time-varying capacity (`infra`), a weighted cost of running
//! a given split on given nodes (`cost`), solvers that minimize that cost
//! (`solver`), threshold-based reconfiguration triggers (`monitor`), the
//! runtime that applies migrations and split revisions (`orchestrator`), and
//! a seeded discrete-time simulation loop (`sim`) with file-format helpers
//! (`report`) and a JSON scenario schema (`config`).

pub mod config;
pub mod cost;
pub mod error;
pub mod infra;
pub mod model;
pub mod monitor;
pub mod orchestrator;
pub mod report;
pub mod sim;
pub mod solver;
pub mod synth;

pub use config::{CalibrationConfig, Scenario, ScenarioConfig};
pub use cost::{CostBreakdown, CostModel, CostParams, CostWeights, LatencyBreakdown, SystemState};
pub use error::{Error, Result};
pub use infra::{CapacitySnapshot, Link, Node, Topology, Trace};
pub use model::{
    enumerate_splits, make_split, subdivide, LayerProfile, ModelProfile, Segment, SplitScheme,
};
pub use monitor::{
    should_reconfigure, update_ewma, EnvironmentState, TriggerCause, TriggerReport,
    TriggerThresholds,
};
pub use orchestrator::{
    Mode, OrchestratorState, ReconfigEvent, ReconfigKind, StepContext,
};
pub use sim::{
    poisson_arrivals, run, run_scenario, sweep_bandwidths, ComparisonRow, KpiWindow,
    RequestRecord, ScenarioRun, SteadySummary, SweepCell,
};
pub use solver::{
    ConstraintKind, FeasibilityReport, Placement, SolveContext, Violation,
};
