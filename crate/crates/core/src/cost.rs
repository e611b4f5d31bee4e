//! Cost model for a split deployment: per-request latency, load-balance
//! penalty, privacy violations, and their weighted sum.
//!
//! Latency decomposes into processing, queueing and transfer:
//!
//! * processing: `1000 * W_r * load_flops / (rate * (1 - rho_ext))` ms per segment;
//! * queueing: `q_scale * rho_hat / (1 - rho_hat)` ms once per distinct hosting
//!   node, where `rho_hat = min(rho_ext + rho_induced, rho_cap)` and the induced
//!   part is per-request service time times the offered request rate;
//! * transfer: `activation_bits / (bw_mbps * 1000) + propagation_ms` per
//!   boundary whose adjacent segments sit on different nodes.
//!
//! The balance term is the population standard deviation of per-node
//! utilization over all nodes (uncapped), plus `overload_penalty * (rho - 1)`
//! for every node pushed past saturation. Summation orders are fixed
//! (segments, then nodes, then boundaries, each in index order) so equal
//! deployments always produce bit-identical totals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infra::{CapacitySnapshot, Topology};
use crate::model::SplitScheme;

/// Objective weights for latency, balance, privacy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(
                    format!("weights.{name}"),
                    "must be finite and >= 0",
                ));
            }
        }
        Ok(())
    }
}

/// Shape parameters of the latency and balance models.
#[derive(Debug, Clone, PartialEq)]
pub struct CostParams {
    /// Queueing scale in ms; one `q_scale * rho/(1-rho)` term per hosting node.
    pub q_scale_ms: f64,
    /// Utilization is clamped here before entering the queue term.
    pub rho_cap: f64,
    /// Balance-term weight per unit of utilization beyond 1.0.
    pub overload_penalty: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            q_scale_ms: 20.0,
            rho_cap: 0.99,
            overload_penalty: 10.0,
        }
    }
}

/// Snapshot of everything time-varying the cost model reads: per-node free
/// capacity, per-link bandwidth, plus the offered load.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t_s: f64,
    pub nodes: Vec<CapacitySnapshot>,
    /// Indexed like `Topology::links()`.
    pub link_bandwidth_mbps: Vec<f64>,
    /// Offered request rate used for induced utilization.
    pub request_rate_per_s: f64,
    /// Per-request work multiplier `W_r`.
    pub workload: f64,
}

impl SystemState {
    pub fn sample(
        topo: &Topology,
        t: f64,
        request_rate_per_s: f64,
        workload: f64,
    ) -> Result<Self> {
        let nodes = (0..topo.num_nodes())
            .map(|i| topo.capacity_at(i, t))
            .collect::<Result<Vec<_>>>()?;
        if t.is_nan() || t < 0.0 {
            return Err(Error::TimeOutOfRange(t));
        }
        let link_bandwidth_mbps = topo
            .links()
            .iter()
            .map(|l| l.bandwidth_mbps.value_at(t))
            .collect();
        Ok(SystemState {
            t_s: t,
            nodes,
            link_bandwidth_mbps,
            request_rate_per_s,
            workload,
        })
    }
}

/// Per-request latency with its additive parts.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyBreakdown {
    /// Processing time per assigned segment, in segment order.
    pub proc_ms: Vec<f64>,
    /// `(node, queue_ms)` per distinct hosting node, ascending node index.
    pub queue_ms: Vec<(usize, f64)>,
    /// Transfer time per interior boundary; 0 where neighbours are co-located.
    pub tx_ms: Vec<f64>,
    pub total_ms: f64,
    /// True when some hosting node's utilization reached 1.0 and the queue
    /// term was evaluated at the cap instead of the singularity.
    pub overload_capped: bool,
}

/// Weighted objective with its components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub latency_ms: f64,
    pub utilization_term: f64,
    pub privacy_violations: usize,
    pub total: f64,
    pub overload_capped: bool,
}

/// Evaluation context tying a topology to the model parameters.
#[derive(Clone, Copy)]
pub struct CostModel<'a> {
    pub topo: &'a Topology,
    pub params: &'a CostParams,
}

impl<'a> CostModel<'a> {
    pub fn new(topo: &'a Topology, params: &'a CostParams) -> Self {
        CostModel { topo, params }
    }

    /// Per-node compute load in FLOPs per request under the (possibly partial)
    /// assignment `hosts[j] = node of segment j`.
    fn node_loads(&self, scheme: &SplitScheme, hosts: &[usize]) -> Vec<f64> {
        let mut loads = vec![0.0; self.topo.num_nodes()];
        for (seg, &n) in scheme.segments.iter().zip(hosts) {
            loads[n] += seg.load_compute_flops;
        }
        loads
    }

    /// Total utilization (exogenous plus induced, uncapped) per node.
    ///
    /// `hosts` may be a prefix of the full assignment; unassigned segments
    /// simply contribute no load.
    pub fn node_utilizations(
        &self,
        scheme: &SplitScheme,
        hosts: &[usize],
        state: &SystemState,
    ) -> Vec<f64> {
        let loads = self.node_loads(scheme, hosts);
        state
            .nodes
            .iter()
            .zip(&loads)
            .map(|(cap, &load)| {
                let service_s = state.workload * load / cap.compute_rate_free_flops;
                cap.utilization + service_s * state.request_rate_per_s
            })
            .collect()
    }

    /// Latency of one request under the (possibly partial) assignment.
    pub fn latency(
        &self,
        scheme: &SplitScheme,
        hosts: &[usize],
        state: &SystemState,
    ) -> Result<LatencyBreakdown> {
        debug_assert!(hosts.len() <= scheme.num_segments());

        let mut proc_ms = Vec::with_capacity(hosts.len());
        for (seg, &n) in scheme.segments.iter().zip(hosts) {
            let cap = &state.nodes[n];
            proc_ms.push(
                1000.0 * state.workload * seg.load_compute_flops / cap.compute_rate_free_flops,
            );
        }

        let rho = self.node_utilizations(scheme, hosts, state);
        let mut hosting: Vec<bool> = vec![false; self.topo.num_nodes()];
        for &n in hosts {
            hosting[n] = true;
        }
        let mut queue_ms = Vec::new();
        let mut overload_capped = false;
        for (n, (&is_host, &r)) in hosting.iter().zip(&rho).enumerate() {
            if !is_host {
                continue;
            }
            if r >= 1.0 {
                overload_capped = true;
            }
            let r_hat = r.min(self.params.rho_cap);
            queue_ms.push((n, self.params.q_scale_ms * r_hat / (1.0 - r_hat)));
        }

        let mut tx_ms = Vec::new();
        for j in 0..hosts.len().saturating_sub(1) {
            let (a, b) = (hosts[j], hosts[j + 1]);
            if a == b {
                tx_ms.push(0.0);
                continue;
            }
            let li = self.topo.link_index_between(a, b).ok_or_else(|| Error::NoLink {
                a: self.topo.node_id(a).to_string(),
                b: self.topo.node_id(b).to_string(),
            })?;
            let bw = state.link_bandwidth_mbps[li];
            let bits = scheme.segments[j].boundary_activation_bits;
            tx_ms.push(bits / (bw * 1000.0) + self.topo.links()[li].propagation_delay_ms);
        }

        let mut total_ms = 0.0;
        for v in &proc_ms {
            total_ms += v;
        }
        for (_, v) in &queue_ms {
            total_ms += v;
        }
        for v in &tx_ms {
            total_ms += v;
        }

        Ok(LatencyBreakdown {
            proc_ms,
            queue_ms,
            tx_ms,
            total_ms,
            overload_capped,
        })
    }

    /// Load-balance term: population stddev of utilization over all nodes,
    /// plus the overload penalty.
    pub fn utilization_term(
        &self,
        scheme: &SplitScheme,
        hosts: &[usize],
        state: &SystemState,
    ) -> f64 {
        let rho = self.node_utilizations(scheme, hosts, state);
        let n = rho.len() as f64;
        let mut mean = 0.0;
        for r in &rho {
            mean += r;
        }
        mean /= n;
        let mut var = 0.0;
        for r in &rho {
            var += (r - mean) * (r - mean);
        }
        var /= n;
        let mut overload = 0.0;
        for r in &rho {
            overload += (r - 1.0).max(0.0);
        }
        var.sqrt() + self.params.overload_penalty * overload
    }

    /// Number of privacy-critical segments assigned to untrusted nodes.
    pub fn privacy_violations(&self, scheme: &SplitScheme, hosts: &[usize]) -> usize {
        scheme
            .segments
            .iter()
            .zip(hosts)
            .filter(|(seg, &n)| seg.privacy_critical && !self.topo.nodes()[n].trusted)
            .count()
    }

    /// Weighted objective `alpha * L + beta * U + gamma * P`.
    pub fn total(
        &self,
        scheme: &SplitScheme,
        hosts: &[usize],
        state: &SystemState,
        weights: &CostWeights,
    ) -> Result<CostBreakdown> {
        let lat = self.latency(scheme, hosts, state)?;
        let util = self.utilization_term(scheme, hosts, state);
        let priv_count = self.privacy_violations(scheme, hosts);
        let total =
            weights.alpha * lat.total_ms + weights.beta * util + weights.gamma * priv_count as f64;
        Ok(CostBreakdown {
            latency_ms: lat.total_ms,
            utilization_term: util,
            privacy_violations: priv_count,
            total,
            overload_capped: lat.overload_capped,
        })
    }

    /// Sustainable request rate of a full deployment: the minimum over node
    /// service capacities `rate_free / (W_r * load)` and link capacities
    /// `bw / crossing_bits` along the segment chain.
    pub fn bottleneck_capacity_rps(
        &self,
        scheme: &SplitScheme,
        hosts: &[usize],
        state: &SystemState,
    ) -> Result<f64> {
        assert_eq!(
            hosts.len(),
            scheme.num_segments(),
            "capacity needs a full assignment"
        );
        let loads = self.node_loads(scheme, hosts);
        let mut cap = f64::INFINITY;
        for (c, load) in state.nodes.iter().zip(&loads) {
            if *load > 0.0 {
                cap = cap.min(c.compute_rate_free_flops / (state.workload * load));
            }
        }
        // Aggregate crossing bits per physical link; a link reused by several
        // boundaries carries their sum per request.
        let mut link_bits = vec![0.0f64; self.topo.links().len()];
        for j in 0..hosts.len().saturating_sub(1) {
            let (a, b) = (hosts[j], hosts[j + 1]);
            if a == b {
                continue;
            }
            let li = self.topo.link_index_between(a, b).ok_or_else(|| Error::NoLink {
                a: self.topo.node_id(a).to_string(),
                b: self.topo.node_id(b).to_string(),
            })?;
            link_bits[li] += scheme.segments[j].boundary_activation_bits;
        }
        for (li, bits) in link_bits.iter().enumerate() {
            if *bits > 0.0 {
                cap = cap.min(state.link_bandwidth_mbps[li] * 1e6 / bits);
            }
        }
        Ok(cap)
    }
}
