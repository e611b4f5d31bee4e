//! Placement search over split schemes.
//!
//! Three routes produce placements: an exhaustive depth-first search with
//! capacity-based pruning (the production path), an unpruned brute-force
//! enumeration kept as a cross-check oracle, and a greedy heuristic. All three
//! rank candidates by the same weighted cost, so the exhaustive and brute-force
//! routes must agree exactly; ties fall to the lexicographically smallest
//! assignment vector. Split revision searches the cross product of enumerated
//! schemes and optimal placements, preferring fewer segments, then smaller
//! boundary lists, on cost ties.

use serde::Serialize;

use crate::cost::{CostBreakdown, CostModel, CostParams, CostWeights, SystemState};
use crate::error::{Error, Result};
use crate::infra::Topology;
use crate::model::{enumerate_splits, ModelProfile, SplitScheme};

/// Assignment of segments to node indices: `assignment[j]` hosts segment `j`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Placement {
    assignment: Vec<usize>,
}

impl Placement {
    pub fn new(assignment: Vec<usize>) -> Self {
        Placement { assignment }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn host_of(&self, segment: usize) -> usize {
        self.assignment[segment]
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Binary assignment matrix `x[segment][node]`, one 1 per row.
    pub fn as_matrix(&self, num_nodes: usize) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; num_nodes]; self.assignment.len()];
        for (j, &n) in self.assignment.iter().enumerate() {
            m[j][n] = 1;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    /// Every segment on exactly one valid node.
    UniqueAssignment,
    /// Memory fit and strict utilization headroom per node.
    Capacity,
    /// Privacy-critical segments only on trusted nodes.
    Privacy,
    /// Consecutive segments on distinct nodes need a direct link.
    Connectivity,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub constraint: ConstraintKind,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Everything a solve needs: topology, sampled state, cost parameters, weights.
#[derive(Clone, Copy)]
pub struct SolveContext<'a> {
    pub topo: &'a Topology,
    pub state: &'a SystemState,
    pub params: &'a CostParams,
    pub weights: &'a CostWeights,
}

impl<'a> SolveContext<'a> {
    pub fn new(
        topo: &'a Topology,
        state: &'a SystemState,
        params: &'a CostParams,
        weights: &'a CostWeights,
    ) -> Self {
        SolveContext {
            topo,
            state,
            params,
            weights,
        }
    }

    pub fn cost_model(&self) -> CostModel<'a> {
        CostModel::new(self.topo, self.params)
    }

    /// Full constraint check of a complete assignment.
    pub fn check_feasible(&self, scheme: &SplitScheme, hosts: &[usize]) -> FeasibilityReport {
        let mut violations = Vec::new();
        let k = scheme.num_segments();
        let n_nodes = self.topo.num_nodes();

        if hosts.len() != k {
            violations.push(Violation {
                constraint: ConstraintKind::UniqueAssignment,
                detail: format!("expected {k} assignments, found {}", hosts.len()),
            });
            return FeasibilityReport { violations };
        }
        for (j, &n) in hosts.iter().enumerate() {
            if n >= n_nodes {
                violations.push(Violation {
                    constraint: ConstraintKind::UniqueAssignment,
                    detail: format!("segment {j} assigned to unknown node index {n}"),
                });
            }
        }
        if !violations.is_empty() {
            return FeasibilityReport { violations };
        }

        // Capacity: aggregate memory fit and strict utilization headroom.
        let mut mem_used = vec![0u64; n_nodes];
        for (seg, &n) in scheme.segments.iter().zip(hosts) {
            mem_used[n] = mem_used[n].saturating_add(seg.load_mem_bytes);
        }
        let model = self.cost_model();
        let rho = model.node_utilizations(scheme, hosts, self.state);
        for n in 0..n_nodes {
            if mem_used[n] > self.state.nodes[n].mem_free_bytes {
                violations.push(Violation {
                    constraint: ConstraintKind::Capacity,
                    detail: format!(
                        "node `{}` needs {} bytes but has {}",
                        self.topo.node_id(n),
                        mem_used[n],
                        self.state.nodes[n].mem_free_bytes
                    ),
                });
            }
            if mem_used[n] > 0 && rho[n] >= 1.0 {
                violations.push(Violation {
                    constraint: ConstraintKind::Capacity,
                    detail: format!(
                        "node `{}` utilization {:.3} leaves no headroom",
                        self.topo.node_id(n),
                        rho[n]
                    ),
                });
            }
        }

        for (seg, &n) in scheme.segments.iter().zip(hosts) {
            if seg.privacy_critical && !self.topo.nodes()[n].trusted {
                violations.push(Violation {
                    constraint: ConstraintKind::Privacy,
                    detail: format!(
                        "privacy-critical segment {} on untrusted node `{}`",
                        seg.index,
                        self.topo.node_id(n)
                    ),
                });
            }
        }

        for j in 0..k.saturating_sub(1) {
            let (a, b) = (hosts[j], hosts[j + 1]);
            if a != b && self.topo.link_between(a, b).is_none() {
                violations.push(Violation {
                    constraint: ConstraintKind::Connectivity,
                    detail: format!(
                        "no link between `{}` and `{}` for boundary {j}",
                        self.topo.node_id(a),
                        self.topo.node_id(b)
                    ),
                });
            }
        }

        FeasibilityReport { violations }
    }

    /// Incremental feasibility of extending a prefix with `node` for segment
    /// `j`. `mem_used`/`induced` carry the prefix's per-node accumulations.
    fn admits(
        &self,
        scheme: &SplitScheme,
        prefix: &[usize],
        j: usize,
        node: usize,
        mem_used: &[u64],
        induced: &[f64],
    ) -> bool {
        let seg = &scheme.segments[j];
        let cap = &self.state.nodes[node];
        if mem_used[node].saturating_add(seg.load_mem_bytes) > cap.mem_free_bytes {
            return false;
        }
        let d_induced = self.state.workload * seg.load_compute_flops
            / cap.compute_rate_free_flops
            * self.state.request_rate_per_s;
        if cap.utilization + induced[node] + d_induced >= 1.0 {
            return false;
        }
        if seg.privacy_critical && !self.topo.nodes()[node].trusted {
            return false;
        }
        if j > 0 {
            let prev = prefix[j - 1];
            if prev != node && self.topo.link_between(prev, node).is_none() {
                return false;
            }
        }
        true
    }

    /// Exhaustive search with capacity/privacy/connectivity pruning.
    ///
    /// Returns the feasible assignment minimizing the weighted cost; exact
    /// cost ties fall to the lexicographically smallest assignment vector.
    pub fn solve_placement(&self, scheme: &SplitScheme) -> Result<(Placement, CostBreakdown)> {
        let k = scheme.num_segments();
        let n_nodes = self.topo.num_nodes();
        let model = self.cost_model();

        struct Search<'s, 'a> {
            ctx: &'s SolveContext<'a>,
            model: CostModel<'a>,
            scheme: &'s SplitScheme,
            prefix: Vec<usize>,
            mem_used: Vec<u64>,
            induced: Vec<f64>,
            best: Option<(Vec<usize>, CostBreakdown)>,
        }

        impl Search<'_, '_> {
            fn run(&mut self, j: usize, k: usize, n_nodes: usize) -> Result<()> {
                if j == k {
                    let cost = self.model.total(
                        self.scheme,
                        &self.prefix,
                        self.ctx.state,
                        self.ctx.weights,
                    )?;
                    // Ascending node order at every level makes assignments
                    // arrive in lexicographic order, so strict improvement
                    // keeps the lex-smallest among exact ties.
                    if self.best.as_ref().is_none_or(|(_, b)| cost.total < b.total) {
                        self.best = Some((self.prefix.clone(), cost));
                    }
                    return Ok(());
                }
                let seg = &self.scheme.segments[j];
                for node in 0..n_nodes {
                    if !self
                        .ctx
                        .admits(self.scheme, &self.prefix, j, node, &self.mem_used, &self.induced)
                    {
                        continue;
                    }
                    let cap = &self.ctx.state.nodes[node];
                    let d_induced = self.ctx.state.workload * seg.load_compute_flops
                        / cap.compute_rate_free_flops
                        * self.ctx.state.request_rate_per_s;
                    self.prefix.push(node);
                    self.mem_used[node] += seg.load_mem_bytes;
                    self.induced[node] += d_induced;
                    self.run(j + 1, k, n_nodes)?;
                    self.induced[node] -= d_induced;
                    self.mem_used[node] -= seg.load_mem_bytes;
                    self.prefix.pop();
                }
                Ok(())
            }
        }

        let mut search = Search {
            ctx: self,
            model,
            scheme,
            prefix: Vec::with_capacity(k),
            mem_used: vec![0; n_nodes],
            induced: vec![0.0; n_nodes],
            best: None,
        };
        search.run(0, k, n_nodes)?;
        search
            .best
            .map(|(hosts, cost)| (Placement::new(hosts), cost))
            .ok_or_else(|| Error::NoFeasiblePlacement {
                detail: format!("{k} segments over {n_nodes} nodes"),
            })
    }

    /// Unpruned enumeration of all `n^k` assignments, filtered by the full
    /// constraint check. Slow by design; exists to cross-check the search.
    pub fn brute_force_oracle(&self, scheme: &SplitScheme) -> Result<(Placement, CostBreakdown)> {
        let k = scheme.num_segments();
        let n_nodes = self.topo.num_nodes();
        let model = self.cost_model();
        let mut hosts = vec![0usize; k];
        let mut best: Option<(Vec<usize>, CostBreakdown)> = None;
        loop {
            if self.check_feasible(scheme, &hosts).is_feasible() {
                let cost = model.total(scheme, &hosts, self.state, self.weights)?;
                if best.as_ref().is_none_or(|(_, b)| cost.total < b.total) {
                    best = Some((hosts.clone(), cost));
                }
            }
            // Odometer increment walks assignments in lexicographic order.
            let mut pos = k;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                hosts[pos] += 1;
                if hosts[pos] < n_nodes {
                    break;
                }
                hosts[pos] = 0;
            }
            if pos == 0 && hosts[0] == 0 {
                break;
            }
        }
        best.map(|(hosts, cost)| (Placement::new(hosts), cost))
            .ok_or_else(|| Error::NoFeasiblePlacement {
                detail: format!("{k} segments over {n_nodes} nodes"),
            })
    }

    /// Greedy heuristic: assign segments in order, each to the node that
    /// minimizes the cost of the assigned prefix. Fast but can paint itself
    /// into a corner, which is reported as a dead end rather than infeasibility.
    pub fn greedy_placement(&self, scheme: &SplitScheme) -> Result<(Placement, CostBreakdown)> {
        let k = scheme.num_segments();
        let n_nodes = self.topo.num_nodes();
        let model = self.cost_model();
        let mut hosts: Vec<usize> = Vec::with_capacity(k);
        let mut mem_used = vec![0u64; n_nodes];
        let mut induced = vec![0.0f64; n_nodes];
        let mut last_cost: Option<CostBreakdown> = None;

        for j in 0..k {
            let mut best: Option<(usize, CostBreakdown)> = None;
            for node in 0..n_nodes {
                if !self.admits(scheme, &hosts, j, node, &mem_used, &induced) {
                    continue;
                }
                hosts.push(node);
                let cost = model.total(scheme, &hosts, self.state, self.weights)?;
                hosts.pop();
                if best.as_ref().is_none_or(|(_, b)| cost.total < b.total) {
                    best = Some((node, cost));
                }
            }
            let (node, cost) = best.ok_or(Error::GreedyDeadEnd { segment: j })?;
            let cap = &self.state.nodes[node];
            induced[node] += self.state.workload * scheme.segments[j].load_compute_flops
                / cap.compute_rate_free_flops
                * self.state.request_rate_per_s;
            mem_used[node] += scheme.segments[j].load_mem_bytes;
            hosts.push(node);
            last_cost = Some(cost);
        }

        let cost = last_cost.expect("k >= 1 for any scheme");
        Ok((Placement::new(hosts), cost))
    }

    /// Joint search over every split into at most `max_segments` segments and
    /// the optimal placement of each. Cost ties prefer fewer segments, then
    /// the lexicographically smaller boundary list.
    pub fn split_revision(
        &self,
        profile: &ModelProfile,
        max_segments: usize,
    ) -> Result<(SplitScheme, Placement, CostBreakdown)> {
        let schemes = enumerate_splits(profile, max_segments)?;
        let mut best: Option<(SplitScheme, Placement, CostBreakdown)> = None;
        for scheme in schemes {
            let (placement, cost) = match self.solve_placement(&scheme) {
                Ok(found) => found,
                Err(Error::NoFeasiblePlacement { .. }) => continue,
                Err(e) => return Err(e),
            };
            let take = match &best {
                None => true,
                Some((bs, bp, bc)) => {
                    cost.total < bc.total
                        || (cost.total == bc.total
                            && (scheme.num_segments() < bs.num_segments()
                                || (scheme.num_segments() == bs.num_segments()
                                    && (scheme.boundaries < bs.boundaries
                                        || (scheme.boundaries == bs.boundaries
                                            && placement.assignment() < bp.assignment())))))
                }
            };
            if take {
                best = Some((scheme, placement, cost));
            }
        }
        best.ok_or_else(|| Error::NoFeasiblePlacement {
            detail: format!("no split into <= {max_segments} segments is placeable"),
        })
    }
}
