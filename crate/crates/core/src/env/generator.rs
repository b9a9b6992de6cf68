//! Seeded synthetic port network and fleet.
//!
//! Ports are scattered uniformly in a square sea area and joined to their
//! nearest neighbours (degree at least 2); components are then bridged by
//! their closest port pairs. Distances are Euclidean, clamped to
//! `[min_nm, max_nm]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::*;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    pub ports: usize,
    pub vessels: usize,
    pub seed: u64,
    #[serde(default = "default_side")]
    pub area_nm: f64,
    #[serde(default = "default_min_nm")]
    pub min_nm: f64,
    #[serde(default = "default_max_nm")]
    pub max_nm: f64,
    #[serde(default = "default_degree")]
    pub neighbours: usize,
}

fn default_side() -> f64 {
    900.0
}
fn default_min_nm() -> f64 {
    100.0
}
fn default_max_nm() -> f64 {
    2000.0
}
fn default_degree() -> usize {
    2
}

impl GeneratorParams {
    pub fn new(ports: usize, vessels: usize, seed: u64) -> Self {
        Self {
            ports,
            vessels,
            seed,
            area_nm: default_side(),
            min_nm: default_min_nm(),
            max_nm: default_max_nm(),
            neighbours: default_degree(),
        }
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut c = x;
    while parent[c] != r {
        let next = parent[c];
        parent[c] = r;
        c = next;
    }
    r
}

/// Builds a validated [`EnvConfig`] from generator parameters.
pub fn generate(params: &GeneratorParams) -> Result<EnvConfig> {
    let n = params.ports;
    if n < 2 {
        return Err(Error::InvalidConfig("generator needs at least 2 ports".into()));
    }
    if params.vessels == 0 {
        return Err(Error::InvalidConfig("generator needs at least 1 vessel".into()));
    }
    if !(params.min_nm > 0.0 && params.min_nm <= params.max_nm) {
        return Err(Error::InvalidConfig("generator distance range is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.random::<f64>() * params.area_nm,
                rng.random::<f64>() * params.area_nm,
            )
        })
        .collect();

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let add = |a: usize, b: usize, edges: &mut Vec<(usize, usize)>| {
        let key = (a.min(b), a.max(b));
        if !edges.contains(&key) {
            edges.push(key);
        }
    };
    let degree = params.neighbours.max(2).min(n - 1);
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| dist(pts[i], pts[a]).total_cmp(&dist(pts[i], pts[b])));
        for &j in order.iter().take(degree) {
            add(i, j, &mut edges);
        }
    }
    // bridge components through their closest pair
    loop {
        let mut parent: Vec<usize> = (0..n).collect();
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let root0 = find(&mut parent, 0);
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if find(&mut parent, i) != root0 {
                continue;
            }
            for j in 0..n {
                if find(&mut parent, j) == root0 {
                    continue;
                }
                let d = dist(pts[i], pts[j]);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => add(i, j, &mut edges),
            None => break,
        }
    }
    edges.sort_unstable();

    let ports = (0..n)
        .map(|id| {
            let berths = rng.random_range(1..=3u32);
            PortSpec {
                id,
                name: None,
                berth_capacity: berths,
                crane_capacity: rng.random_range(1..=berths),
                service_hours: rng.random_range(3..=5u32),
            }
        })
        .collect();
    let lanes = edges
        .iter()
        .map(|&(a, b)| LaneSpec {
            from: a,
            to: b,
            nm: (dist(pts[a], pts[b]).round()).clamp(params.min_nm, params.max_nm),
            region: None,
            bidirectional: true,
        })
        .collect();
    let vessels = (0..params.vessels)
        .map(|_| {
            let v_ref = 12.0 + 4.0 * rng.random::<f64>();
            VesselSpec {
                hull_coefficient: 0.8 + 2.2 * rng.random::<f64>(),
                v_ref,
                v_max: v_ref * 1.4,
                start: rng.random_range(0..n),
                fuel_capacity: 800.0,
                jobs: Vec::new(),
            }
        })
        .collect();
    let cfg = EnvConfig {
        ports,
        lanes,
        vessels,
        weather: WeatherConfig::default(),
        failures: FailureConfig::default(),
        prices: PriceConfig::default(),
        physics: PhysicsConfig::default(),
        emission_bound: None,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::PortNetwork;

    #[test]
    fn generated_network_is_valid_and_reproducible() {
        let p = GeneratorParams::new(16, 50, 7);
        let a = generate(&p).unwrap();
        let b = generate(&p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ports.len(), 16);
        assert_eq!(a.vessels.len(), 50);
        let net = PortNetwork::from_config(&a);
        for port in 0..16 {
            assert!(net.neighbours(port).count() >= 2, "port {port} degree < 2");
        }
        for l in &a.lanes {
            assert!((100.0..=2000.0).contains(&l.nm));
        }
    }

    #[test]
    fn different_seed_different_layout() {
        let a = generate(&GeneratorParams::new(8, 4, 1)).unwrap();
        let b = generate(&GeneratorParams::new(8, 4, 2)).unwrap();
        assert_ne!(a, b);
    }
}
