//! Discrete-event delivery queue.

use std::collections::{BTreeMap, VecDeque};

use crate::geometry::Timestamp;

use super::link::InTransit;

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery<M> {
    pub message: M,
    pub sender: u32,
    pub send_time: Timestamp,
    /// Time drawn by the link.
    pub scheduled_time: Timestamp,
    /// Time actually handed over; later than `scheduled_time` only when an
    /// in-order link held the message behind an earlier one.
    pub delivered_at: Timestamp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueueStats {
    pub sent: u64,
    pub dropped: u64,
    pub delivered: u64,
}

#[derive(Debug)]
struct Pending<M> {
    transit: InTransit<M>,
    sender: u32,
    order: u64,
}

/// Holds messages in flight. Senders on in-order links are delivered in send
/// order; all others strictly by delivery time (ties by send order).
#[derive(Debug)]
pub struct DeliveryQueue<M> {
    in_order: BTreeMap<u32, VecDeque<Pending<M>>>,
    last_delivered: BTreeMap<u32, Timestamp>,
    unordered: BTreeMap<(Timestamp, u64), Pending<M>>,
    counter: u64,
    stats: QueueStats,
}

impl<M> Default for DeliveryQueue<M> {
    fn default() -> Self {
        DeliveryQueue {
            in_order: BTreeMap::new(),
            last_delivered: BTreeMap::new(),
            unordered: BTreeMap::new(),
            counter: 0,
            stats: QueueStats::default(),
        }
    }
}

impl<M> DeliveryQueue<M> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> QueueStats {
        self.stats
    }

    pub fn pending(&self) -> usize {
        self.unordered.len() + self.in_order.values().map(VecDeque::len).sum::<usize>()
    }

    pub fn push(&mut self, sender: u32, transit: InTransit<M>, reorder_allowed: bool) {
        self.stats.sent += 1;
        if transit.dropped {
            self.stats.dropped += 1;
            return;
        }
        let p = Pending {
            order: self.counter,
            sender,
            transit,
        };
        self.counter += 1;
        if reorder_allowed {
            self.unordered.insert((p.transit.delivery_time, p.order), p);
        } else {
            self.in_order.entry(sender).or_default().push_back(p);
        }
    }

    fn front_due(&self, sender: u32, p: &Pending<M>) -> Timestamp {
        let held = self.last_delivered.get(&sender).copied().unwrap_or(Timestamp::ZERO);
        p.transit.delivery_time.max(held)
    }

    /// Earliest time at which `poll` would return something.
    pub fn next_due(&self) -> Option<Timestamp> {
        let a = self.unordered.keys().next().map(|k| k.0);
        let b = self
            .in_order
            .iter()
            .filter_map(|(&s, q)| q.front().map(|p| self.front_due(s, p)))
            .min();
        match (a, b) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Every message due at or before `now`, ordered by hand-over time.
    pub fn poll(&mut self, now: Timestamp) -> Vec<Delivery<M>> {
        let mut out: Vec<(u64, Delivery<M>)> = Vec::new();
        let later = self.unordered.split_off(&(Timestamp(now.0.saturating_add(1)), 0));
        let due = std::mem::replace(&mut self.unordered, later);
        for ((t, order), p) in due {
            out.push((order, deliver(p, t)));
        }
        let senders: Vec<u32> = self.in_order.keys().copied().collect();
        for s in senders {
            while let Some(p) = self.in_order[&s].front() {
                let due_at = self.front_due(s, p);
                if due_at > now {
                    break;
                }
                let p = self.in_order.get_mut(&s).and_then(VecDeque::pop_front).expect("front exists");
                self.last_delivered.insert(s, due_at);
                out.push((p.order, deliver(p, due_at)));
            }
        }
        self.in_order.retain(|_, q| !q.is_empty());
        out.sort_by_key(|(order, d)| (d.delivered_at, *order));
        self.stats.delivered += out.len() as u64;
        out.into_iter().map(|(_, d)| d).collect()
    }
}

fn deliver<M>(p: Pending<M>, at: Timestamp) -> Delivery<M> {
    Delivery {
        sender: p.sender,
        send_time: p.transit.send_time,
        scheduled_time: p.transit.delivery_time,
        delivered_at: at,
        message: p.transit.message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transit(msg: u32, send: u64, deliver: u64) -> InTransit<u32> {
        InTransit {
            message: msg,
            send_time: Timestamp(send),
            delivery_time: Timestamp(deliver),
            dropped: false,
        }
    }

    #[test]
    fn empty_queue() {
        let mut q = DeliveryQueue::<u32>::new();
        assert!(q.poll(Timestamp(1_000)).is_empty());
        assert_eq!(q.next_due(), None);
    }

    #[test]
    fn threshold_semantics() {
        let mut q = DeliveryQueue::new();
        q.push(1, transit(1, 0, 100), true);
        q.push(1, transit(2, 0, 200), true);
        let d = q.poll(Timestamp(150));
        assert_eq!(d.iter().map(|d| d.message).collect::<Vec<_>>(), vec![1]);
        assert_eq!(q.next_due(), Some(Timestamp(200)));
        assert_eq!(q.poll(Timestamp(200))[0].message, 2);
        assert_eq!(q.pending(), 0);
    }

    #[test]
    fn in_order_link_holds_overtaking_message() {
        let mut q = DeliveryQueue::new();
        q.push(7, transit(1, 0, 500), false);
        q.push(7, transit(2, 10, 300), false);
        assert_eq!(q.next_due(), Some(Timestamp(500)));
        assert!(q.poll(Timestamp(400)).is_empty());
        let d = q.poll(Timestamp(500));
        assert_eq!(d.iter().map(|d| d.message).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(d[1].delivered_at, Timestamp(500));
        assert_eq!(d[1].scheduled_time, Timestamp(300));
    }

    #[test]
    fn reordering_link_delivers_by_time() {
        let mut q = DeliveryQueue::new();
        q.push(7, transit(1, 0, 500), true);
        q.push(7, transit(2, 10, 300), true);
        let d = q.poll(Timestamp(1000));
        assert_eq!(d.iter().map(|d| d.message).collect::<Vec<_>>(), vec![2, 1]);
    }

    #[test]
    fn dropped_messages_are_counted_not_queued() {
        let mut q = DeliveryQueue::new();
        let mut t = transit(1, 0, 5);
        t.dropped = true;
        q.push(1, t, false);
        q.push(1, transit(2, 0, 5), false);
        assert_eq!(q.poll(Timestamp(10)).len(), 1);
        assert_eq!(q.stats(), QueueStats { sent: 2, dropped: 1, delivered: 1 });
    }
}
