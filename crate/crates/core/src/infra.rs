//! Node and link descriptions with piecewise-constant time traces.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Piecewise-constant, right-continuous time series. The first point pins the
/// value from t = 0; each later point takes effect exactly at its timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    points: Vec<(f64, f64)>,
}

impl Trace {
    pub fn constant(value: f64) -> Self {
        Trace {
            points: vec![(0.0, value)],
        }
    }

    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("trace", "trace must have at least one point"));
        }
        if points[0].0 != 0.0 {
            return Err(Error::config(
                "trace",
                format!("first point must be at t=0, found t={}", points[0].0),
            ));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::config(
                    "trace",
                    format!("timestamps must be strictly increasing, found {} then {}", w[0].0, w[1].0),
                ));
            }
        }
        Ok(Trace { points })
    }

    /// Value at time `t >= 0`. Holds the last value forever past the end.
    pub fn value_at(&self, t: f64) -> f64 {
        let mut v = self.points[0].1;
        for &(ts, val) in &self.points {
            if ts <= t {
                v = val;
            } else {
                break;
            }
        }
        v
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// A compute node. `utilization` is the exogenous background load in [0, 1),
/// i.e. the share of `compute_rate_flops` consumed by other tenants.
#[derive(Debug, Clone)]
pub struct Node {
    pub id: String,
    pub is_cloud: bool,
    pub trusted: bool,
    pub compute_rate_flops: f64,
    pub mem_capacity_bytes: u64,
    pub utilization: Trace,
}

/// An undirected link between two nodes. Bandwidth is in Mb/s.
#[derive(Debug, Clone)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub bandwidth_mbps: Trace,
    pub propagation_delay_ms: f64,
    /// Marks the link swept by bandwidth studies.
    pub backhaul: bool,
}

/// Free capacity of one node at a sampling instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySnapshot {
    /// Rate left after exogenous load: `compute_rate * (1 - utilization)`.
    pub compute_rate_free_flops: f64,
    pub mem_free_bytes: u64,
    /// Exogenous utilization at the instant.
    pub utilization: f64,
}

/// Validated node/link graph. Node and link indices are positions in the
/// vectors handed to `new`, and all other modules address by those indices.
#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    link_by_pair: HashMap<(usize, usize), usize>,
}

impl Topology {
    pub fn new(nodes: Vec<Node>, links: Vec<Link>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::config("topology.nodes", "at least one node is required"));
        }
        let mut seen = HashMap::new();
        let mut clouds = 0usize;
        for (i, n) in nodes.iter().enumerate() {
            if let Some(prev) = seen.insert(n.id.clone(), i) {
                return Err(Error::config(
                    format!("topology.nodes[{i}].id"),
                    format!("duplicate id `{}` (also node {prev})", n.id),
                ));
            }
            if n.is_cloud {
                clouds += 1;
            }
            if n.compute_rate_flops <= 0.0 || !n.compute_rate_flops.is_finite() {
                return Err(Error::config(
                    format!("topology.nodes[{i}].compute_rate_flops"),
                    "must be finite and > 0",
                ));
            }
            if n.mem_capacity_bytes == 0 {
                return Err(Error::config(
                    format!("topology.nodes[{i}].mem_capacity_bytes"),
                    "must be > 0",
                ));
            }
            for &(_, u) in n.utilization.points() {
                if !(0.0..1.0).contains(&u) {
                    return Err(Error::config(
                        format!("topology.nodes[{i}].utilization"),
                        format!("exogenous utilization must lie in [0, 1), found {u}"),
                    ));
                }
            }
        }
        if clouds > 1 {
            return Err(Error::config(
                "topology.nodes",
                format!("at most one cloud node is allowed, found {clouds}"),
            ));
        }

        let mut link_by_pair = HashMap::new();
        for (i, l) in links.iter().enumerate() {
            if l.a >= nodes.len() || l.b >= nodes.len() {
                return Err(Error::config(
                    format!("topology.links[{i}]"),
                    "endpoint index out of range",
                ));
            }
            if l.a == l.b {
                return Err(Error::config(
                    format!("topology.links[{i}]"),
                    "self links are not allowed",
                ));
            }
            if l.propagation_delay_ms.is_nan() || l.propagation_delay_ms < 0.0 {
                return Err(Error::config(
                    format!("topology.links[{i}].propagation_delay_ms"),
                    "must be >= 0",
                ));
            }
            for &(_, bw) in l.bandwidth_mbps.points() {
                if bw <= 0.0 || !bw.is_finite() {
                    return Err(Error::config(
                        format!("topology.links[{i}].bandwidth_mbps"),
                        format!("bandwidth must be finite and > 0, found {bw}"),
                    ));
                }
            }
            let key = (l.a.min(l.b), l.a.max(l.b));
            if link_by_pair.insert(key, i).is_some() {
                return Err(Error::config(
                    format!("topology.links[{i}]"),
                    format!("duplicate link between nodes {} and {}", l.a, l.b),
                ));
            }
        }

        // Connectivity: every node reachable from node 0.
        if nodes.len() > 1 {
            let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
            for l in &links {
                adj[l.a].push(l.b);
                adj[l.b].push(l.a);
            }
            let mut visited = vec![false; nodes.len()];
            let mut stack = vec![0usize];
            visited[0] = true;
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !visited[v] {
                        visited[v] = true;
                        stack.push(v);
                    }
                }
            }
            if let Some(i) = visited.iter().position(|v| !v) {
                return Err(Error::config(
                    "topology.links",
                    format!("graph is not connected: node `{}` is unreachable", nodes[i].id),
                ));
            }
        }

        Ok(Topology {
            nodes,
            links,
            link_by_pair,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn node_id(&self, index: usize) -> &str {
        &self.nodes[index].id
    }

    pub fn link_between(&self, a: usize, b: usize) -> Option<&Link> {
        self.link_index_between(a, b).map(|i| &self.links[i])
    }

    pub fn link_index_between(&self, a: usize, b: usize) -> Option<usize> {
        self.link_by_pair.get(&(a.min(b), a.max(b))).copied()
    }

    /// Free capacity of node `index` at time `t`.
    pub fn capacity_at(&self, index: usize, t: f64) -> Result<CapacitySnapshot> {
        let node = self
            .nodes
            .get(index)
            .ok_or_else(|| Error::UnknownNode(format!("index {index}")))?;
        if t.is_nan() || t < 0.0 {
            return Err(Error::TimeOutOfRange(t));
        }
        let u = node.utilization.value_at(t);
        Ok(CapacitySnapshot {
            compute_rate_free_flops: node.compute_rate_flops * (1.0 - u),
            mem_free_bytes: node.mem_capacity_bytes,
            utilization: u,
        })
    }

    /// Bandwidth of the undirected link `a`-`b` at time `t`, in Mb/s.
    pub fn bandwidth_at(&self, a: usize, b: usize, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::TimeOutOfRange(t));
        }
        let link = self.link_between(a, b).ok_or_else(|| Error::NoLink {
            a: self.nodes.get(a).map(|n| n.id.clone()).unwrap_or_else(|| format!("index {a}")),
            b: self.nodes.get(b).map(|n| n.id.clone()).unwrap_or_else(|| format!("index {b}")),
        })?;
        Ok(link.bandwidth_mbps.value_at(t))
    }
}
