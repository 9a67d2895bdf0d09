//! Deterministic discrete-event queue.
//!
//! Events with equal fire times are ordered by (priority, insertion id), so a
//! run is a strict total order over events: same queue contents always drain
//! in the same sequence, which is what makes whole-scenario replays
//! byte-identical.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::time::SimTime;

/// Identifier handed back by [`EventQueue::schedule`]; strictly increasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    /// Scheduling before the current clock signals a model bug, never a
    /// recoverable condition.
    #[error("event scheduled in the past: fire_at {fire_at} < clock {clock}")]
    PastEvent { fire_at: SimTime, clock: SimTime },
}

struct Scheduled<E> {
    fire_at: SimTime,
    priority: u8,
    id: u64,
    payload: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// BinaryHeap is a max-heap; reverse so the earliest (fire_at, priority, id)
// pops first.
impl<E> Ord for Scheduled<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.fire_at, other.priority, other.id).cmp(&(self.fire_at, self.priority, self.id))
    }
}

/// Priority-ordered event queue with a monotone clock.
pub struct EventQueue<E> {
    heap: BinaryHeap<Scheduled<E>>,
    clock: SimTime,
    next_id: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            clock: SimTime::ZERO,
            next_id: 0,
        }
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    /// Enqueue an event. Returns a strictly increasing id.
    pub fn schedule(
        &mut self,
        fire_at: SimTime,
        priority: u8,
        payload: E,
    ) -> Result<EventId, ScheduleError> {
        if fire_at < self.clock {
            return Err(ScheduleError::PastEvent {
                fire_at,
                clock: self.clock,
            });
        }
        self.next_id += 1;
        let id = self.next_id;
        self.heap.push(Scheduled {
            fire_at,
            priority,
            id,
            payload,
        });
        Ok(EventId(id))
    }

    /// Pop the next event if it fires at or before `t_end`, advancing the
    /// clock to its fire time.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<(SimTime, E)> {
        if self.heap.peek().map(|s| s.fire_at <= t_end) == Some(true) {
            let s = self.heap.pop().unwrap();
            debug_assert!(s.fire_at >= self.clock, "clock must never decrease");
            self.clock = self.clock.max(s.fire_at);
            Some((s.fire_at, s.payload))
        } else {
            None
        }
    }

    /// Fire all events up to `t_end` through `handler`. Returns the number of
    /// events fired. The clock ends at the last fired event's time (or stays
    /// put when nothing fires).
    pub fn run_until(
        &mut self,
        t_end: SimTime,
        mut handler: impl FnMut(&mut Self, SimTime, E),
    ) -> u64 {
        let mut fired = 0;
        while let Some((t, payload)) = self.pop_until(t_end) {
            handler(self, t, payload);
            fired += 1;
        }
        fired
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_event_gets_id_one() {
        let mut q: EventQueue<u32> = EventQueue::new();
        let id = q.schedule(SimTime::ZERO, 0, 7).unwrap();
        assert_eq!(id, EventId(1));
    }

    #[test]
    fn equal_time_events_fire_in_priority_order() {
        let mut q: EventQueue<&str> = EventQueue::new();
        q.schedule(SimTime(100), 1, "second").unwrap();
        q.schedule(SimTime(100), 0, "first").unwrap();
        let mut order = Vec::new();
        q.run_until(SimTime(100), |_, _, e| order.push(e));
        assert_eq!(order, ["first", "second"]);
    }

    #[test]
    fn scheduling_in_the_past_is_an_error() {
        let mut q: EventQueue<u32> = EventQueue::new();
        q.schedule(SimTime(100), 0, 1).unwrap();
        q.run_until(SimTime(100), |_, _, _| {});
        assert_eq!(q.clock(), SimTime(100));
        let err = q.schedule(SimTime(50), 0, 2).unwrap_err();
        assert!(matches!(err, ScheduleError::PastEvent { .. }));
    }

    #[test]
    fn run_until_empty_queue_fires_nothing() {
        let mut q: EventQueue<u32> = EventQueue::new();
        assert_eq!(q.run_until(SimTime::from_secs(1), |_, _, _| {}), 0);
        assert_eq!(q.clock(), SimTime::ZERO);
    }

    #[test]
    fn run_until_stops_at_bound_and_clock_tracks_last_fired() {
        let mut q: EventQueue<u32> = EventQueue::new();
        for t in [10, 20, 30] {
            q.schedule(SimTime(t), 0, t as u32).unwrap();
        }
        let fired = q.run_until(SimTime(25), |_, _, _| {});
        assert_eq!(fired, 2);
        assert_eq!(q.clock(), SimTime(20));
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn handler_can_schedule_followups() {
        let mut q: EventQueue<u32> = EventQueue::new();
        q.schedule(SimTime(10), 0, 1).unwrap();
        let mut seen = Vec::new();
        q.run_until(SimTime(100), |q, t, e| {
            seen.push(e);
            if e < 3 {
                q.schedule(t + 10, 0, e + 1).unwrap();
            }
        });
        assert_eq!(seen, [1, 2, 3]);
        assert_eq!(q.clock(), SimTime(30));
    }

    proptest! {
        /// Equal-time events always drain in (priority, id) order no matter
        /// the insertion interleaving.
        #[test]
        fn equal_time_total_order(prios in proptest::collection::vec(0u8..4, 1..40)) {
            let mut q: EventQueue<usize> = EventQueue::new();
            let mut expected: Vec<(u8, u64)> = Vec::new();
            for (i, &p) in prios.iter().enumerate() {
                let id = q.schedule(SimTime(500), p, i).unwrap();
                expected.push((p, id.0));
            }
            expected.sort();
            let mut fired: Vec<usize> = Vec::new();
            q.run_until(SimTime(500), |_, _, e| fired.push(e));
            let expected_idx: Vec<usize> = expected
                .iter()
                .map(|&(_, id)| (id - 1) as usize)
                .collect();
            prop_assert_eq!(fired, expected_idx);
        }

        /// The clock never decreases across an arbitrary schedule.
        #[test]
        fn clock_monotone(times in proptest::collection::vec(0u64..10_000, 1..60)) {
            let mut q: EventQueue<u64> = EventQueue::new();
            for &t in &times {
                q.schedule(SimTime(t), 0, t).unwrap();
            }
            let mut last = SimTime::ZERO;
            while let Some((t, _)) = q.pop_until(SimTime(u64::MAX)) {
                prop_assert!(t >= last);
                last = t;
                prop_assert_eq!(q.clock(), t);
            }
        }
    }
}
