//! Seamless-redundancy layer: duplicate copies at the source, first-copy-wins
//! deduplication at the destination, redundant-link sample extraction.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::mac::{ChannelId, TxRecord};
use crate::time::SimTime;

#[derive(Debug, Error, PartialEq)]
pub enum PrpError {
    #[error("duplicate accept for seq {0}: dedup state corrupted")]
    DuplicateAccept(u64),
    #[error("arrivals not time-ordered at seq {0}")]
    UnorderedArrivals(u64),
}

/// One delivery observation at the recipient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub seq: u64,
    pub channel: ChannelId,
    pub t_arrival: SimTime,
}

/// An accepted (first-arriving) copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Accepted {
    pub seq: u64,
    pub channel: ChannelId,
    pub t_accept: SimTime,
}

/// Streaming first-copy-wins filter. Feed arrivals in non-decreasing time
/// order; the first copy of each seq is accepted, later copies are counted
/// and discarded.
#[derive(Debug, Default)]
pub struct StreamingDedup {
    accepted: BTreeMap<u64, Accepted>,
    discarded: u64,
    last_time: SimTime,
}

impl StreamingDedup {
    pub fn new() -> Self {
        Self::default()
    }

    /// Offer one arrival; returns the acceptance if this copy won.
    pub fn offer(&mut self, arrival: Arrival) -> Result<Option<Accepted>, PrpError> {
        if arrival.t_arrival < self.last_time {
            return Err(PrpError::UnorderedArrivals(arrival.seq));
        }
        self.last_time = arrival.t_arrival;
        if self.accepted.contains_key(&arrival.seq) {
            self.discarded += 1;
            return Ok(None);
        }
        let acc = Accepted {
            seq: arrival.seq,
            channel: arrival.channel,
            t_accept: arrival.t_arrival,
        };
        // Entry API keeps the accept unique; a second insert for the same seq
        // is unreachable given the contains_key guard above.
        if self.accepted.insert(arrival.seq, acc).is_some() {
            return Err(PrpError::DuplicateAccept(arrival.seq));
        }
        Ok(Some(acc))
    }

    pub fn discarded(&self) -> u64 {
        self.discarded
    }

    pub fn into_accepted(self) -> BTreeMap<u64, Accepted> {
        self.accepted
    }
}

/// Per-seq view of a redundant link after a complete run.
#[derive(Debug, Clone)]
pub struct RedundantLinkView {
    pub channels: Vec<ChannelId>,
    /// seq -> accepted copy; absent when every copy was lost.
    pub accepted: BTreeMap<u64, Accepted>,
    /// All generated seqs with their generation times.
    pub generated: BTreeMap<u64, SimTime>,
}

impl RedundantLinkView {
    /// Build the view from per-channel records by running arrivals through
    /// the streaming filter in delivery-time order.
    pub fn from_records(
        channels: Vec<ChannelId>,
        per_channel: &BTreeMap<ChannelId, Vec<TxRecord>>,
    ) -> Result<Self, PrpError> {
        let mut generated = BTreeMap::new();
        let mut arrivals = Vec::new();
        for (&ch, records) in per_channel {
            for r in records {
                generated.entry(r.seq).or_insert(r.t_gen);
                if let Some(t) = r.t_eth {
                    arrivals.push(Arrival {
                        seq: r.seq,
                        channel: ch,
                        t_arrival: t,
                    });
                }
            }
        }
        arrivals.sort_by_key(|a| (a.t_arrival, a.channel, a.seq));
        let mut dedup = StreamingDedup::new();
        for a in arrivals {
            dedup.offer(a)?;
        }
        Ok(RedundantLinkView {
            channels,
            accepted: dedup.into_accepted(),
            generated,
        })
    }

    /// Redundant-link latency samples: per seq, the first-arriving copy's
    /// latency, or a loss when every copy was lost.
    pub fn redundant_samples(&self) -> Vec<(u64, Option<u64>)> {
        self.generated
            .iter()
            .map(|(&seq, &t_gen)| {
                let d = self.accepted.get(&seq).map(|a| a.t_accept - t_gen);
                (seq, d)
            })
            .collect()
    }

    pub fn lost_count(&self) -> u64 {
        (self.generated.len() - self.accepted.len()) as u64
    }
}

/// Duplicate a packet onto every channel of the redundant link. Copies share
/// seq and generation time.
pub fn duplicate(seq: u64, t_gen: SimTime, channels: &[ChannelId]) -> Vec<TxRecord> {
    channels
        .iter()
        .map(|&ch| TxRecord::new(seq, ch, t_gen))
        .collect()
}

/// Brute-force reference for the dedup: group arrivals by seq and take the
/// earliest (ties by channel then seq, same as the streaming order).
pub fn dedup_oracle(arrivals: &[Arrival]) -> BTreeMap<u64, Accepted> {
    let mut best: BTreeMap<u64, Arrival> = BTreeMap::new();
    for &a in arrivals {
        best.entry(a.seq)
            .and_modify(|cur| {
                if (a.t_arrival, a.channel) < (cur.t_arrival, cur.channel) {
                    *cur = a;
                }
            })
            .or_insert(a);
    }
    best.into_iter()
        .map(|(seq, a)| {
            (
                seq,
                Accepted {
                    seq,
                    channel: a.channel,
                    t_accept: a.t_arrival,
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(seq: u64, channel: ChannelId, t_ms: u64) -> Arrival {
        Arrival {
            seq,
            channel,
            t_arrival: SimTime::from_millis(t_ms),
        }
    }

    #[test]
    fn duplicate_shares_seq_across_channels() {
        let copies = duplicate(9, SimTime::from_millis(1), &[1, 165]);
        assert_eq!(copies.len(), 2);
        assert!(copies.iter().all(|c| c.seq == 9 && c.t_gen == SimTime::from_millis(1)));
        assert_eq!(copies[0].channel, 1);
        assert_eq!(copies[1].channel, 165);

        // Degenerate single-channel link and three-way generalization.
        assert_eq!(duplicate(1, SimTime::ZERO, &[36]).len(), 1);
        assert_eq!(duplicate(1, SimTime::ZERO, &[1, 36, 165]).len(), 3);
    }

    #[test]
    fn first_copy_wins() {
        let mut d = StreamingDedup::new();
        let first = d.offer(arr(1, 1, 5)).unwrap();
        assert_eq!(first.unwrap().channel, 1);
        let second = d.offer(arr(1, 165, 7)).unwrap();
        assert!(second.is_none());
        assert_eq!(d.discarded(), 1);
    }

    #[test]
    fn lone_surviving_copy_is_accepted() {
        let mut d = StreamingDedup::new();
        let acc = d.offer(arr(3, 165, 3)).unwrap().unwrap();
        assert_eq!(acc.channel, 165);
        assert_eq!(acc.t_accept, SimTime::from_millis(3));
    }

    #[test]
    fn unordered_arrivals_are_rejected() {
        let mut d = StreamingDedup::new();
        d.offer(arr(1, 1, 10)).unwrap();
        assert_eq!(
            d.offer(arr(2, 1, 5)).unwrap_err(),
            PrpError::UnorderedArrivals(2)
        );
    }

    #[test]
    fn view_reports_min_latency_and_losses() {
        let mut per_channel: BTreeMap<ChannelId, Vec<TxRecord>> = BTreeMap::new();
        let mut mk = |seq: u64, ch: ChannelId, eth_ms: Option<u64>| {
            let mut r = TxRecord::new(seq, ch, SimTime::ZERO);
            r.t_eth = eth_ms.map(SimTime::from_millis);
            r.data_lost = eth_ms.is_none();
            per_channel.entry(ch).or_default().push(r);
        };
        // seq 1: ch1 at 2 ms, ch165 at 1 ms -> union latency 1 ms via ch165.
        mk(1, 1, Some(2));
        mk(1, 165, Some(1));
        // seq 2: ch1 lost, ch165 at 3 ms.
        mk(2, 1, None);
        mk(2, 165, Some(3));
        // seq 3: both lost.
        mk(3, 1, None);
        mk(3, 165, None);

        let view = RedundantLinkView::from_records(vec![1, 165], &per_channel).unwrap();
        let samples = view.redundant_samples();
        assert_eq!(samples[0], (1, Some(1_000_000)));
        assert_eq!(samples[1], (2, Some(3_000_000)));
        assert_eq!(samples[2], (3, None));
        assert_eq!(view.lost_count(), 1);
        assert_eq!(view.accepted[&1].channel, 165);
    }

    #[test]
    fn streaming_matches_oracle_on_small_case() {
        let arrivals = vec![
            arr(2, 1, 1),
            arr(1, 165, 2),
            arr(1, 1, 2),
            arr(2, 165, 3),
            arr(3, 165, 4),
        ];
        let mut sorted = arrivals.clone();
        sorted.sort_by_key(|a| (a.t_arrival, a.channel, a.seq));
        let mut d = StreamingDedup::new();
        for a in sorted {
            d.offer(a).unwrap();
        }
        assert_eq!(d.into_accepted(), dedup_oracle(&arrivals));
    }
}
