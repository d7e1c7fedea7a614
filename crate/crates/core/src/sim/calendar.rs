use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

struct Entry<E> {
    time: f64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // Reversed so the max-heap pops the earliest time, then lowest sequence.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

/// Time-ordered event queue; equal times pop in insertion order.
pub struct EventCalendar<E> {
    heap: BinaryHeap<Entry<E>>,
    seq: u64,
    clock: f64,
}

impl<E> Default for EventCalendar<E> {
    fn default() -> Self {
        EventCalendar { heap: BinaryHeap::new(), seq: 0, clock: 0.0 }
    }
}

impl<E> EventCalendar<E> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Time of the last popped event.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `event`; times before the clock are moved up to it.
    pub fn schedule(&mut self, time: f64, event: E) {
        let time = if time < self.clock { self.clock } else { time };
        self.heap.push(Entry { time, seq: self.seq, event });
        self.seq += 1;
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn pop(&mut self) -> Option<(f64, E)> {
        let e = self.heap.pop()?;
        self.clock = e.time;
        Some((e.time, e.event))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn ties_in_insertion_order() {
        let mut c = EventCalendar::new();
        c.schedule(1.0, 'a');
        c.schedule(0.5, 'b');
        c.schedule(1.0, 'c');
        let order: Vec<char> = core::iter::from_fn(|| c.pop().map(|(_, e)| e)).collect();
        assert_eq!(order, ['b', 'a', 'c']);
    }

    #[test]
    fn past_events_clamped_to_clock() {
        let mut c = EventCalendar::new();
        c.schedule(2.0, 0);
        c.pop();
        c.schedule(1.0, 1);
        assert_eq!(c.pop(), Some((2.0, 1)));
    }

    proptest! {
        #[test]
        fn pops_non_decreasing(times in proptest::collection::vec(0.0f64..100.0, 1..200)) {
            let mut c = EventCalendar::new();
            for (i, t) in times.iter().enumerate() {
                c.schedule(*t, i);
            }
            let mut last = f64::NEG_INFINITY;
            while let Some((t, _)) = c.pop() {
                prop_assert!(t >= last);
                last = t;
            }
        }
    }
}
