use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::network::PortInfo;

/// Dynamic state of one port: berth and crane queues plus current occupants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub id: usize,
    pub berth_capacity: u32,
    pub crane_capacity: u32,
    pub service_hours: u32,
    pub berth_queue: VecDeque<usize>,
    pub crane_queue: VecDeque<usize>,
    /// Vessels holding a berth, in the order they were served.
    pub berthed: Vec<usize>,
    /// Berthed vessels currently holding a crane slot.
    pub craned: Vec<usize>,
}

/// Outcome of one FIFO resolution round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Resolution {
    pub served: Vec<usize>,
    pub waiting: Vec<usize>,
    /// `[demand - capacity]+`, measured before resolution.
    pub overflow: u32,
}

fn fifo_resolve(
    queue: &mut VecDeque<usize>,
    occupants: &mut Vec<usize>,
    capacity: u32,
    arrivals: &[usize],
) -> Resolution {
    queue.extend(arrivals.iter().copied());
    let demand = occupants.len() + queue.len();
    let overflow = demand.saturating_sub(capacity as usize) as u32;
    let free = (capacity as usize).saturating_sub(occupants.len());
    let take = free.min(queue.len());
    let served: Vec<usize> = queue.drain(..take).collect();
    occupants.extend(served.iter().copied());
    Resolution {
        served,
        waiting: queue.iter().copied().collect(),
        overflow,
    }
}

impl Port {
    pub fn new(info: &PortInfo) -> Self {
        Self {
            id: info.id,
            berth_capacity: info.berth_capacity,
            crane_capacity: info.crane_capacity,
            service_hours: info.service_hours,
            berth_queue: VecDeque::new(),
            crane_queue: VecDeque::new(),
            berthed: Vec::new(),
            craned: Vec::new(),
        }
    }

    /// Appends `arrivals` to the berth queue in order and serves the queue
    /// head FIFO until berths are full. Remaining queue members wait.
    pub fn queue_step(&mut self, arrivals: &[usize]) -> Resolution {
        fifo_resolve(
            &mut self.berth_queue,
            &mut self.berthed,
            self.berth_capacity,
            arrivals,
        )
    }

    /// Crane allocation among berthed vessels, analogous to [`Port::queue_step`].
    pub fn crane_step(&mut self, requests: &[usize]) -> Resolution {
        fifo_resolve(
            &mut self.crane_queue,
            &mut self.craned,
            self.crane_capacity,
            requests,
        )
    }

    /// Frees the berth and crane held by `vessel`.
    pub fn release(&mut self, vessel: usize) {
        self.berthed.retain(|&v| v != vessel);
        self.craned.retain(|&v| v != vessel);
        self.crane_queue.retain(|&v| v != vessel);
    }

    pub fn berth_occupancy(&self) -> u32 {
        self.berthed.len() as u32
    }

    pub fn crane_occupancy(&self) -> u32 {
        self.craned.len() as u32
    }

    pub fn within_capacity(&self) -> bool {
        self.berth_occupancy() <= self.berth_capacity
            && self.crane_occupancy() <= self.crane_capacity
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;

    fn port(berths: u32) -> Port {
        Port::new(&PortInfo {
            id: 0,
            berth_capacity: berths,
            crane_capacity: 1,
            service_hours: 1,
        })
    }

    #[test]
    fn fifo_truncation() {
        let mut p = port(2);
        let r = p.queue_step(&[A, B, C]);
        assert_eq!(r.served, vec![A, B]);
        assert_eq!(r.waiting, vec![C]);
        assert_eq!(r.overflow, 1);
        assert!(p.within_capacity());
    }

    #[test]
    fn under_capacity() {
        let mut p = port(5);
        let r = p.queue_step(&[A]);
        assert_eq!(r.served, vec![A]);
        assert!(r.waiting.is_empty());
        assert_eq!(r.overflow, 0);
    }

    #[test]
    fn two_step_single_berth_trace() {
        let mut p = port(1);
        let mut waited = [0u32; 2];
        let r1 = p.queue_step(&[A, B]);
        assert_eq!(r1.served, vec![A]);
        for &w in &r1.waiting {
            waited[w] += 1;
        }
        // A's one-hour service completes; B moves in next hour
        p.release(A);
        let r2 = p.queue_step(&[]);
        assert_eq!(r2.served, vec![B]);
        assert!(r2.waiting.is_empty());
        assert_eq!(waited, [0, 1]);
    }

    #[test]
    fn occupied_berths_count_toward_overflow() {
        let mut p = port(2);
        p.queue_step(&[A]);
        let r = p.queue_step(&[B, C]);
        assert_eq!(r.served, vec![B]);
        assert_eq!(r.overflow, 1);
        assert_eq!(p.berth_occupancy(), 2);
    }

    #[test]
    fn crane_slots_follow_berth_order() {
        let mut p = port(3);
        let r = p.queue_step(&[A, B, C]);
        let c = p.crane_step(&r.served);
        assert_eq!(c.served, vec![A]);
        assert_eq!(c.waiting, vec![B, C]);
        assert_eq!(c.overflow, 2);
        p.release(A);
        let c2 = p.crane_step(&[]);
        assert_eq!(c2.served, vec![B]);
    }
}
