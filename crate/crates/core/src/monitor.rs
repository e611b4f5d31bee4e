//! Telemetry aggregation and reconfiguration triggering.
//!
//! The monitor smooths request latency with an EWMA and compares the smoothed
//! view of the system against thresholds. All three trigger comparisons are
//! strict, so a metric sitting exactly on its threshold never fires; and a
//! fired trigger inside the cooldown window is reported as suppressed rather
//! than dropped, preserving the cause list for the audit log.

use serde::{Deserialize, Serialize};

/// Trigger thresholds and the reconfiguration cooldown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriggerThresholds {
    /// Fire when smoothed latency exceeds this, in ms.
    pub l_max_ms: f64,
    /// Fire when any node's utilization exceeds this.
    pub u_max: f64,
    /// Fire when any link's bandwidth drops below this, in Mb/s.
    pub b_min_mbps: f64,
    /// Minimum spacing between applied reconfigurations, in seconds.
    pub t_cool_s: f64,
}

impl Default for TriggerThresholds {
    fn default() -> Self {
        TriggerThresholds {
            l_max_ms: 150.0,
            u_max: 0.85,
            b_min_mbps: 50.0,
            t_cool_s: 30.0,
        }
    }
}

/// What the monitor sees at one sampling instant.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentState {
    pub t_s: f64,
    /// Smoothed end-to-end latency; `None` until the first request completes.
    pub ewma_latency_ms: Option<f64>,
    /// Total utilization per node (exogenous plus induced by the deployment).
    pub node_utilization: Vec<f64>,
    /// Current bandwidth per link, indexed like the topology's link list.
    pub link_bandwidth_mbps: Vec<f64>,
    /// Sampling interval that produced this snapshot, in seconds.
    pub window_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriggerCause {
    /// EWMA latency above `l_max_ms`.
    Latency,
    /// Some node above `u_max`.
    Utilization,
    /// Some link below `b_min_mbps`.
    Bandwidth,
}

/// Outcome of one trigger evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriggerReport {
    /// True when a reconfiguration should be attempted now.
    pub fired: bool,
    /// Conditions that held, in fixed latency/utilization/bandwidth order.
    /// Non-empty with `fired == false` means the cooldown suppressed them.
    pub causes: Vec<TriggerCause>,
    pub suppressed_by_cooldown: bool,
}

/// One EWMA step: `smoothing * sample + (1 - smoothing) * previous`.
/// The first sample initializes the average.
pub fn update_ewma(previous: Option<f64>, sample_ms: f64, smoothing: f64) -> f64 {
    debug_assert!(smoothing > 0.0 && smoothing <= 1.0);
    match previous {
        None => sample_ms,
        Some(prev) => smoothing * sample_ms + (1.0 - smoothing) * prev,
    }
}

/// Evaluates the trigger conditions against `env`, honouring the cooldown.
///
/// `t_last_s` is the time of the last applied reconfiguration,
/// `f64::NEG_INFINITY` when none has happened yet. Pure: identical inputs
/// always produce identical reports.
pub fn should_reconfigure(
    env: &EnvironmentState,
    thresholds: &TriggerThresholds,
    t_last_s: f64,
) -> TriggerReport {
    let mut causes = Vec::new();
    if let Some(l) = env.ewma_latency_ms {
        if l > thresholds.l_max_ms {
            causes.push(TriggerCause::Latency);
        }
    }
    if env.node_utilization.iter().any(|&u| u > thresholds.u_max) {
        causes.push(TriggerCause::Utilization);
    }
    if env
        .link_bandwidth_mbps
        .iter()
        .any(|&bw| bw < thresholds.b_min_mbps)
    {
        causes.push(TriggerCause::Bandwidth);
    }

    if causes.is_empty() {
        return TriggerReport {
            fired: false,
            causes,
            suppressed_by_cooldown: false,
        };
    }
    // Strictly inside the cooldown window: suppress. Exactly at the window
    // edge the system is allowed to act again.
    if env.t_s - t_last_s < thresholds.t_cool_s {
        return TriggerReport {
            fired: false,
            causes,
            suppressed_by_cooldown: true,
        };
    }
    TriggerReport {
        fired: true,
        causes,
        suppressed_by_cooldown: false,
    }
}
