//! Deployment lifecycle: initial placement, trigger-driven reconfiguration,
//! and the audit trail of every decision.
//!
//! On a fired trigger the orchestrator first re-solves the placement of the
//! current split (migration). If the best migration still violates the latency
//! or utilization targets it escalates to a joint split revision. Every
//! evaluation lands in the event log, including suppressed triggers and
//! no-ops, so the decision sequence can be replayed from the log alone.

use serde::{Deserialize, Serialize};

use crate::cost::CostBreakdown;
use crate::error::{Error, Result};
use crate::model::{make_split, ModelProfile, SplitScheme};
use crate::monitor::{should_reconfigure, EnvironmentState, TriggerCause, TriggerThresholds};
use crate::solver::{Placement, SolveContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Static,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconfigKind {
    /// New placement for the unchanged split.
    Migration,
    /// New split (and placement) after migration alone was insufficient.
    Resplit,
    /// Trigger held but the cooldown window was still open.
    Suppressed,
    /// Trigger fired and the incumbent deployment was already optimal,
    /// or nothing fired at this cycle.
    NoOp,
    /// Trigger fired but no feasible deployment exists.
    Failed,
}

impl ReconfigKind {
    /// True for events that changed the running deployment.
    pub fn applied(&self) -> bool {
        matches!(self, ReconfigKind::Migration | ReconfigKind::Resplit)
    }
}

/// Best placement found for the current split during a fired trigger, and
/// whether it met the latency/utilization targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MigrationEval {
    pub placement: Vec<String>,
    pub predicted_latency_ms: f64,
    pub predicted_max_utilization: f64,
    pub cleared: bool,
}

/// One orchestration decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconfigEvent {
    pub t_s: f64,
    pub kind: ReconfigKind,
    pub causes: Vec<TriggerCause>,
    pub old_boundaries: Vec<usize>,
    pub new_boundaries: Vec<usize>,
    pub old_placement: Vec<String>,
    pub new_placement: Vec<String>,
    /// Segment weight bytes that must move for this change.
    pub migration_bytes: u64,
    /// Transfer time over the slowest involved link plus fixed overhead.
    pub migration_delay_ms: f64,
    /// Present whenever a placement for the incumbent split was evaluated.
    pub migration_eval: Option<MigrationEval>,
    pub note: Option<String>,
}

/// Everything a reconfiguration step needs besides the orchestrator itself.
pub struct StepContext<'a> {
    pub solve: SolveContext<'a>,
    pub profile: &'a ModelProfile,
    pub thresholds: &'a TriggerThresholds,
    pub max_segments: usize,
    pub migration_overhead_ms: f64,
}

/// Live deployment plus reconfiguration history.
#[derive(Debug, Clone)]
pub struct OrchestratorState {
    pub mode: Mode,
    pub scheme: SplitScheme,
    pub placement: Placement,
    /// Time of the last applied reconfiguration; -inf before the first.
    pub t_last_s: f64,
    /// Counts applied reconfigurations; tags requests with the deployment
    /// generation that served them.
    pub epoch: u64,
    pub events: Vec<ReconfigEvent>,
}

impl OrchestratorState {
    /// Validates and installs the initial deployment at t = 0.
    pub fn deploy(
        ctx: &SolveContext,
        profile: &ModelProfile,
        boundaries: &[usize],
        placement: Placement,
        mode: Mode,
    ) -> Result<Self> {
        let scheme = make_split(profile, boundaries)?;
        let report = ctx.check_feasible(&scheme, placement.assignment());
        if !report.is_feasible() {
            let detail = report
                .violations
                .iter()
                .map(|v| v.detail.as_str())
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::NoFeasiblePlacement {
                detail: format!("initial deployment rejected: {detail}"),
            });
        }
        Ok(OrchestratorState {
            mode,
            scheme,
            placement,
            t_last_s: f64::NEG_INFINITY,
            epoch: 0,
            events: Vec::new(),
        })
    }

    fn ids(&self, ctx: &SolveContext, hosts: &[usize]) -> Vec<String> {
        hosts
            .iter()
            .map(|&n| ctx.topo.node_id(n).to_string())
            .collect()
    }

    /// Runs one monitoring cycle: trigger evaluation, candidate search,
    /// escalation, and (possibly) application. Returns the logged event.
    pub fn step(&mut self, env: &EnvironmentState, ctx: &StepContext) -> ReconfigEvent {
        let t = env.t_s;
        let report = should_reconfigure(env, ctx.thresholds, self.t_last_s);
        let current_ids = self.ids(&ctx.solve, self.placement.assignment());

        if !report.fired {
            let kind = if report.suppressed_by_cooldown {
                ReconfigKind::Suppressed
            } else {
                ReconfigKind::NoOp
            };
            let event = ReconfigEvent {
                t_s: t,
                kind,
                causes: report.causes,
                old_boundaries: self.scheme.boundaries.clone(),
                new_boundaries: self.scheme.boundaries.clone(),
                old_placement: current_ids.clone(),
                new_placement: current_ids,
                migration_bytes: 0,
                migration_delay_ms: 0.0,
                migration_eval: None,
                note: None,
            };
            self.events.push(event.clone());
            return event;
        }

        // Migration first: best placement of the split we already run.
        let mut note = None;
        let mut migration_eval = None;
        let candidate: Option<(SplitScheme, Placement, CostBreakdown)> =
            match ctx.solve.solve_placement(&self.scheme) {
                Ok((pl, cost)) => {
                    let rho = ctx.solve.cost_model().node_utilizations(
                        &self.scheme,
                        pl.assignment(),
                        ctx.solve.state,
                    );
                    let max_rho = rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let cleared =
                        cost.latency_ms <= ctx.thresholds.l_max_ms && max_rho <= ctx.thresholds.u_max;
                    migration_eval = Some(MigrationEval {
                        placement: self.ids(&ctx.solve, pl.assignment()),
                        predicted_latency_ms: cost.latency_ms,
                        predicted_max_utilization: max_rho,
                        cleared,
                    });
                    if cleared {
                        Some((self.scheme.clone(), pl, cost))
                    } else {
                        // Migration cannot reach the targets: revise the split.
                        match ctx.solve.split_revision(ctx.profile, ctx.max_segments) {
                            Ok(found) => Some(found),
                            Err(_) => {
                                note = Some(
                                    "split revision found no feasible deployment".to_string(),
                                );
                                None
                            }
                        }
                    }
                }
                Err(_) => {
                    note = Some("current split has no feasible placement".to_string());
                    match ctx.solve.split_revision(ctx.profile, ctx.max_segments) {
                        Ok(found) => Some(found),
                        Err(_) => {
                            note = Some(
                                "current split unplaceable and split revision found no feasible deployment"
                                    .to_string(),
                            );
                            None
                        }
                    }
                }
            };

        let Some((new_scheme, new_placement, _cost)) = candidate else {
            let event = ReconfigEvent {
                t_s: t,
                kind: ReconfigKind::Failed,
                causes: report.causes,
                old_boundaries: self.scheme.boundaries.clone(),
                new_boundaries: self.scheme.boundaries.clone(),
                old_placement: current_ids.clone(),
                new_placement: current_ids,
                migration_bytes: 0,
                migration_delay_ms: 0.0,
                migration_eval,
                note,
            };
            self.events.push(event.clone());
            return event;
        };

        let unchanged = new_scheme.boundaries == self.scheme.boundaries
            && new_placement == self.placement;
        if unchanged {
            let event = ReconfigEvent {
                t_s: t,
                kind: ReconfigKind::NoOp,
                causes: report.causes,
                old_boundaries: self.scheme.boundaries.clone(),
                new_boundaries: self.scheme.boundaries.clone(),
                old_placement: current_ids.clone(),
                new_placement: current_ids,
                migration_bytes: 0,
                migration_delay_ms: 0.0,
                migration_eval,
                note: Some("incumbent deployment already optimal".to_string()),
            };
            self.events.push(event.clone());
            return event;
        }

        let resplit = new_scheme.boundaries != self.scheme.boundaries;
        let (migration_bytes, migration_delay_ms) = migration_cost(
            &self.scheme,
            self.placement.assignment(),
            &new_scheme,
            new_placement.assignment(),
            ctx,
        );

        let event = ReconfigEvent {
            t_s: t,
            kind: if resplit {
                ReconfigKind::Resplit
            } else {
                ReconfigKind::Migration
            },
            causes: report.causes,
            old_boundaries: self.scheme.boundaries.clone(),
            new_boundaries: new_scheme.boundaries.clone(),
            old_placement: current_ids,
            new_placement: self.ids(&ctx.solve, new_placement.assignment()),
            migration_bytes,
            migration_delay_ms,
            migration_eval,
            note,
        };
        self.scheme = new_scheme;
        self.placement = new_placement;
        self.t_last_s = t;
        self.epoch += 1;
        self.events.push(event.clone());
        event
    }
}

/// Weight bytes that must move between the two deployments, and the transfer
/// time over the slowest involved link plus the fixed switchover overhead.
///
/// A segment moves when a same-range segment existed before on a different
/// node, or when its boundaries are new. Transfers run from each previous
/// host of the affected layers to the new host.
fn migration_cost(
    old_scheme: &SplitScheme,
    old_hosts: &[usize],
    new_scheme: &SplitScheme,
    new_hosts: &[usize],
    ctx: &StepContext,
) -> (u64, f64) {
    let mut bytes = 0u64;
    let mut slowest_mbps = f64::INFINITY;
    let mut any_transfer = false;

    for (ns, &nh) in new_scheme.segments.iter().zip(new_hosts) {
        let same_range = old_scheme
            .segments
            .iter()
            .position(|os| os.layer_start == ns.layer_start && os.layer_end == ns.layer_end);
        let moved = match same_range {
            Some(oi) => old_hosts[oi] != nh,
            None => true,
        };
        if !moved {
            continue;
        }
        bytes = bytes.saturating_add(ns.load_mem_bytes);
        // Sources: previous hosts of any overlapping layer range.
        for (os, &oh) in old_scheme.segments.iter().zip(old_hosts) {
            if os.layer_start < ns.layer_end && ns.layer_start < os.layer_end && oh != nh {
                any_transfer = true;
                let bw = match ctx.solve.topo.link_index_between(oh, nh) {
                    Some(li) => ctx.solve.state.link_bandwidth_mbps[li],
                    // No direct link: assume the worst path in the network.
                    None => ctx
                        .solve
                        .state
                        .link_bandwidth_mbps
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min),
                };
                slowest_mbps = slowest_mbps.min(bw);
            }
        }
    }

    let transfer_ms = if any_transfer && bytes > 0 && slowest_mbps.is_finite() {
        bytes as f64 * 8.0 / (slowest_mbps * 1000.0)
    } else {
        0.0
    };
    (bytes, transfer_ms + ctx.migration_overhead_ms)
}
