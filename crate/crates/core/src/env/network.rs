use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, LaneRegion};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub from: usize,
    pub to: usize,
    pub nm: f64,
    pub base_hours: f64,
    pub region: LaneRegion,
}

/// Static port attributes. Dynamic queue state lives in [`super::Port`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortInfo {
    pub id: usize,
    pub berth_capacity: u32,
    pub crane_capacity: u32,
    pub service_hours: u32,
}

/// Directed sea-lane graph over ports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortNetwork {
    pub ports: Vec<PortInfo>,
    pub lanes: Vec<Lane>,
    outgoing: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Port sequence including both endpoints.
    pub ports: Vec<usize>,
    pub nm: f64,
}

#[derive(Copy, Clone, PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PortNetwork {
    pub fn from_config(cfg: &EnvConfig) -> Self {
        let ports = cfg
            .ports
            .iter()
            .map(|p| PortInfo {
                id: p.id,
                berth_capacity: p.berth_capacity,
                crane_capacity: p.crane_capacity,
                service_hours: p.service_hours,
            })
            .collect::<Vec<_>>();
        let speed = cfg.physics.reference_speed_knots;
        let threshold = cfg.weather.coastal_threshold_nm;
        let mut lanes: Vec<Lane> = Vec::new();
        let mut push = |from: usize, to: usize, nm: f64, region: Option<LaneRegion>| {
            if lanes.iter().any(|l| l.from == from && l.to == to) {
                return;
            }
            let region = region.unwrap_or(if nm <= threshold {
                LaneRegion::Coastal
            } else {
                LaneRegion::OpenSea
            });
            lanes.push(Lane {
                from,
                to,
                nm,
                base_hours: nm / speed,
                region,
            });
        };
        for l in &cfg.lanes {
            push(l.from, l.to, l.nm, l.region);
            if l.bidirectional {
                push(l.to, l.from, l.nm, l.region);
            }
        }
        let mut outgoing = vec![Vec::new(); ports.len()];
        for (i, l) in lanes.iter().enumerate() {
            outgoing[l.from].push(i);
        }
        Self {
            ports,
            lanes,
            outgoing,
        }
    }

    pub fn port_count(&self) -> usize {
        self.ports.len()
    }

    pub fn lane_between(&self, from: usize, to: usize) -> Option<usize> {
        self.outgoing
            .get(from)?
            .iter()
            .copied()
            .find(|&i| self.lanes[i].to == to)
    }

    pub fn neighbours(&self, port: usize) -> impl Iterator<Item = usize> + '_ {
        self.outgoing[port].iter().map(move |&i| self.lanes[i].to)
    }

    pub fn path_nm(&self, ports: &[usize]) -> Option<f64> {
        ports
            .windows(2)
            .map(|w| self.lane_between(w[0], w[1]).map(|i| self.lanes[i].nm))
            .sum()
    }

    /// True when consecutive ports in `ports` are joined by lanes.
    pub fn is_path(&self, ports: &[usize]) -> bool {
        !ports.is_empty() && self.path_nm(ports).is_some()
    }

    fn dijkstra(
        &self,
        from: usize,
        to: usize,
        banned_nodes: &HashSet<usize>,
        banned_lanes: &HashSet<usize>,
    ) -> Option<Path> {
        let n = self.ports.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(Frontier {
            dist: 0.0,
            node: from,
        });
        while let Some(Frontier { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            if node == to {
                break;
            }
            for &li in &self.outgoing[node] {
                let lane = &self.lanes[li];
                if banned_lanes.contains(&li) || banned_nodes.contains(&lane.to) {
                    continue;
                }
                let nd = d + lane.nm;
                if nd < dist[lane.to] {
                    dist[lane.to] = nd;
                    prev[lane.to] = node;
                    heap.push(Frontier {
                        dist: nd,
                        node: lane.to,
                    });
                }
            }
        }
        if !dist[to].is_finite() {
            return None;
        }
        let mut ports = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[cur];
            ports.push(cur);
        }
        ports.reverse();
        Some(Path { ports, nm: dist[to] })
    }

    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Path> {
        if from == to {
            return Some(Path {
                ports: vec![from],
                nm: 0.0,
            });
        }
        self.dijkstra(from, to, &HashSet::new(), &HashSet::new())
    }

    /// Up to `k` loopless paths in increasing length (Yen's algorithm:
    /// repeated shortest-path searches with edge removal).
    pub fn k_shortest_paths(&self, from: usize, to: usize, k: usize) -> Result<Vec<Path>> {
        let first = self
            .shortest_path(from, to)
            .ok_or(Error::NoRoute { from, to })?;
        if from == to || k <= 1 {
            return Ok(vec![first]);
        }
        let mut accepted = vec![first];
        let mut candidates: Vec<Path> = Vec::new();
        while accepted.len() < k {
            let last = accepted.last().unwrap().clone();
            for spur_idx in 0..last.ports.len() - 1 {
                let spur = last.ports[spur_idx];
                let root = &last.ports[..=spur_idx];
                let mut banned_lanes = HashSet::new();
                for p in &accepted {
                    if p.ports.len() > spur_idx + 1 && p.ports[..=spur_idx] == *root {
                        if let Some(li) = self.lane_between(p.ports[spur_idx], p.ports[spur_idx + 1])
                        {
                            banned_lanes.insert(li);
                        }
                    }
                }
                let banned_nodes: HashSet<usize> = root[..spur_idx].iter().copied().collect();
                if let Some(tail) = self.dijkstra(spur, to, &banned_nodes, &banned_lanes) {
                    let mut ports = root[..spur_idx].to_vec();
                    ports.extend_from_slice(&tail.ports);
                    let nm = self.path_nm(&ports).expect("joined path is connected");
                    let path = Path { ports, nm };
                    if !candidates.iter().any(|c| c.ports == path.ports)
                        && !accepted.iter().any(|c| c.ports == path.ports)
                    {
                        candidates.push(path);
                    }
                }
            }
            if candidates.is_empty() {
                break;
            }
            let best = candidates
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.nm.total_cmp(&b.1.nm).then(a.1.ports.cmp(&b.1.ports)))
                .map(|(i, _)| i)
                .unwrap();
            accepted.push(candidates.swap_remove(best));
        }
        Ok(accepted)
    }

    /// Ports reachable from `from` within `hops` lanes, excluding `from`.
    pub fn within_hops(&self, from: usize, hops: usize) -> Vec<usize> {
        let mut seen = vec![false; self.ports.len()];
        seen[from] = true;
        let mut frontier = vec![from];
        let mut out = Vec::new();
        for _ in 0..hops {
            let mut next = Vec::new();
            for &u in &frontier {
                for v in self.neighbours(u) {
                    if !seen[v] {
                        seen[v] = true;
                        out.push(v);
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::config::*;

    fn grid() -> EnvConfig {
        // 0 -- 1 -- 3, 0 -- 2 -- 3, 0 -- 3 (long)
        let lane = |from, to, nm| LaneSpec {
            from,
            to,
            nm,
            region: None,
            bidirectional: true,
        };
        EnvConfig {
            ports: (0..4)
                .map(|id| PortSpec {
                    id,
                    name: None,
                    berth_capacity: 1,
                    crane_capacity: 1,
                    service_hours: 2,
                })
                .collect(),
            lanes: vec![
                lane(0, 1, 100.0),
                lane(1, 3, 100.0),
                lane(0, 2, 120.0),
                lane(2, 3, 120.0),
                lane(0, 3, 500.0),
            ],
            vessels: vec![VesselSpec {
                hull_coefficient: 1.0,
                v_ref: 12.0,
                v_max: 18.0,
                start: 0,
                fuel_capacity: 100.0,
                jobs: vec![],
            }],
            weather: Default::default(),
            failures: Default::default(),
            prices: Default::default(),
            physics: Default::default(),
            emission_bound: None,
        }
    }

    #[test]
    fn k_shortest_orders_by_length() {
        let net = PortNetwork::from_config(&grid());
        let paths = net.k_shortest_paths(0, 3, 3).unwrap();
        let seqs: Vec<_> = paths.iter().map(|p| p.ports.clone()).collect();
        assert_eq!(seqs, vec![vec![0, 1, 3], vec![0, 2, 3], vec![0, 3]]);
        assert_eq!(paths[2].nm, 500.0);
    }

    #[test]
    fn same_port_is_trivial_path() {
        let net = PortNetwork::from_config(&grid());
        let paths = net.k_shortest_paths(2, 2, 3).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].ports, vec![2]);
    }

    #[test]
    fn one_way_lane_leaves_no_route_back() {
        let mut cfg = grid();
        cfg.lanes = vec![LaneSpec {
            from: 0,
            to: 1,
            nm: 50.0,
            region: None,
            bidirectional: false,
        }];
        cfg.ports.truncate(2);
        let net = PortNetwork::from_config(&cfg);
        assert!(matches!(
            net.k_shortest_paths(1, 0, 3),
            Err(Error::NoRoute { from: 1, to: 0 })
        ));
    }

    #[test]
    fn hops_neighbourhood() {
        let net = PortNetwork::from_config(&grid());
        assert_eq!(net.within_hops(1, 1), vec![0, 3]);
        assert_eq!(net.within_hops(1, 2), vec![0, 2, 3]);
    }
}
