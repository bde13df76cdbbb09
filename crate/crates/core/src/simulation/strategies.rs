//! Receiver-side retrieval strategies and their resource tallies.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::{project_message, GroupAssignment, GroupId, Message, ProjectedMessage, UserId};
use crate::rng::{rng_from_seed, SimRng};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PollOutcome {
    /// Friend-group indices in `0..d_b`, in polling order.
    pub polls: Vec<u32>,
    pub connections: u64,
}

/// Polls uniformly random friend groups until every one of the `d_b` groups
/// has been visited.
pub fn strategy_random_poll(d_b: u32, seed: u64) -> Result<PollOutcome> {
    if d_b == 0 {
        return Err(Error::Config("random polling needs at least one friend group".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut seen = vec![false; d_b as usize];
    let mut left = d_b;
    let mut polls = Vec::new();
    while left > 0 {
        let g = rng.random_range(0..d_b);
        polls.push(g);
        if !std::mem::replace(&mut seen[g as usize], true) {
            left -= 1;
        }
    }
    Ok(PollOutcome { connections: polls.len() as u64, polls })
}

/// Number of polls for one full check, drawn from `rng`.
pub(crate) fn random_poll_count(d_b: u32, rng: &mut SimRng) -> u64 {
    // waiting time for the next new group is geometric with success (d_b - seen) / d_b
    let mut polls = 0u64;
    for seen in 0..d_b {
        let fresh = (d_b - seen) as f64 / d_b as f64;
        polls += 1;
        if fresh < 1.0 {
            while rng.random::<f64>() >= fresh {
                polls += 1;
            }
        }
    }
    polls
}

/// `P[T <= t]` for the number of polls `T` needed to visit all `d` groups.
pub fn poll_count_cdf(d: u32, t: u64) -> f64 {
    if d == 0 {
        return 1.0;
    }
    let mut binom = 1.0f64;
    let mut sum = 0.0;
    for k in 0..=d {
        if k > 0 {
            binom *= (d - k + 1) as f64 / k as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * (1.0 - k as f64 / d as f64).powi(t.min(i32::MAX as u64) as i32);
    }
    sum.clamp(0.0, 1.0)
}

/// A projected message together with the endpoints only its recipient can
/// recognize after decrypting the header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub projected: ProjectedMessage,
    pub sender: UserId,
    pub recipient: UserId,
    pub header_ratio: f64,
}

impl Envelope {
    pub fn new(message: &Message, assignment: &GroupAssignment) -> Result<Self> {
        Ok(Self {
            projected: project_message(message, assignment)?,
            sender: message.sender,
            recipient: message.recipient,
            header_ratio: message.header_ratio,
        })
    }

    fn wire_size(&self) -> f64 {
        self.projected.size * (1.0 + self.header_ratio)
    }
}

/// Work done by one receiver. Volumes are in body-size units and include the
/// header; decrypting a header costs `phi` times the body size.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResourceTally {
    pub downloaded_messages: u64,
    pub downloaded_units: f64,
    pub useful_messages: u64,
    pub useful_units: f64,
    pub useful_body_units: f64,
    pub header_decryptions: u64,
    pub body_decryptions: u64,
    pub computation_units: f64,
    pub connections: u64,
}

impl ResourceTally {
    /// Downloaded volume per volume meant for the user.
    pub fn bandwidth_ratio(&self) -> Option<f64> {
        (self.useful_messages > 0).then(|| self.downloaded_units / self.useful_units)
    }

    /// Decryption work per unit of body meant for the user.
    pub fn computation_ratio(&self) -> Option<f64> {
        (self.useful_messages > 0).then(|| self.computation_units / self.useful_body_units)
    }

    fn download(&mut self, env: &Envelope, user: UserId) {
        let body = env.projected.size;
        self.downloaded_messages += 1;
        self.downloaded_units += env.wire_size();
        self.header_decryptions += 1;
        self.computation_units += env.header_ratio * body;
        if env.recipient == user {
            self.useful_messages += 1;
            self.useful_units += env.wire_size();
            self.useful_body_units += body;
            self.body_decryptions += 1;
            self.computation_units += body;
        }
    }
}

/// Downloads the whole inbox of `user_group` in one connection, screens every
/// header and decrypts the bodies addressed to `user`.
pub fn strategy_bulk_download(inbox: &[Envelope], user: UserId, user_group: GroupId) -> Result<ResourceTally> {
    let mut tally = ResourceTally { connections: 1, ..Default::default() };
    for env in inbox {
        if env.projected.dest_group != user_group {
            return Err(Error::Config(format!(
                "inbox of group {user_group} holds a message for group {}",
                env.projected.dest_group
            )));
        }
        tally.download(env, user);
    }
    Ok(tally)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RendezvousOutcome {
    /// Destination group of each message in order.
    pub destinations: Vec<GroupId>,
    /// Distinct `(source group, destination group)` mailboxes in order of first use.
    pub mailboxes: Vec<(GroupId, GroupId)>,
    pub tally: ResourceTally,
}

impl RendezvousOutcome {
    pub fn distinct_destinations(&self) -> usize {
        self.destinations.iter().collect::<BTreeSet<_>>().len()
    }
}

/// Sends a one-directional conversation through announced mailboxes. The
/// first message goes to the recipient's own group; each message names a
/// uniformly random group for the next one, and the recipient polls exactly
/// that mailbox.
pub fn strategy_dynamic_rendezvous(
    conversation: &[Message],
    assignment: &GroupAssignment,
    seed: u64,
) -> Result<RendezvousOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut out = RendezvousOutcome { destinations: Vec::new(), mailboxes: Vec::new(), tally: ResourceTally::default() };
    let Some(first) = conversation.first() else {
        return Ok(out);
    };
    let source = assignment.group(first.sender)?;
    let mut next = assignment.group(first.recipient)?;
    let mut seen = BTreeSet::new();
    for msg in conversation {
        if (msg.sender, msg.recipient) != (first.sender, first.recipient) {
            return Err(Error::Config("a conversation must keep one sender and one recipient".into()));
        }
        let dest = next;
        next = rng.random_range(0..assignment.m());
        out.destinations.push(dest);
        if seen.insert((source, dest)) {
            out.mailboxes.push((source, dest));
        }
        let mut env = Envelope::new(msg, assignment)?;
        env.projected.dest_group = dest;
        out.tally.connections += 1;
        out.tally.download(&env, msg.recipient);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::resources::coupon_collector_expectation;
    use crate::projection::assign_groups;
    use crate::rng::derive_seed;

    #[test]
    fn single_group_needs_one_poll() {
        for seed in 0..20 {
            let out = strategy_random_poll(1, seed).unwrap();
            assert_eq!(out.connections, 1);
            assert_eq!(out.polls, vec![0]);
        }
        assert!(strategy_random_poll(0, 0).is_err());
    }

    #[test]
    fn poll_sequence_visits_everything_and_stops() {
        let out = strategy_random_poll(7, 42).unwrap();
        let last = *out.polls.last().unwrap();
        assert_eq!(out.polls.iter().collect::<BTreeSet<_>>().len(), 7);
        assert_eq!(out.polls.iter().filter(|&&g| g == last).count(), 1);
    }

    #[test]
    fn mean_polls_match_coupon_collector() {
        for &(d, expected) in &[(2u32, 3.0), (10, 29.29)] {
            let trials = 10_000u64;
            let mean = (0..trials)
                .map(|t| strategy_random_poll(d, derive_seed(d as u64, t)).unwrap().connections as f64)
                .sum::<f64>()
                / trials as f64;
            assert!((mean - expected).abs() <= 0.05 * expected, "d = {d}: {mean}");
            assert!((coupon_collector_expectation(d as u64) - expected).abs() < 0.01);
        }
    }

    #[test]
    fn fast_poll_count_has_the_same_mean() {
        let mut rng = rng_from_seed(3);
        let mean = (0..20_000).map(|_| random_poll_count(10, &mut rng) as f64).sum::<f64>() / 20_000.0;
        assert!((mean - coupon_collector_expectation(10)).abs() < 0.05 * 29.29);
        assert_eq!(random_poll_count(1, &mut rng), 1);
    }

    #[test]
    fn exact_poll_law() {
        assert_eq!(poll_count_cdf(3, 2), 0.0);
        // P[T = d] = d! / d^d
        assert!((poll_count_cdf(3, 3) - 6.0 / 27.0).abs() < 1e-12);
        assert!((poll_count_cdf(5, 400) - 1.0).abs() < 1e-12);
        let mean: f64 = (1..2000u64).map(|t| 1.0 - poll_count_cdf(5, t)).sum::<f64>() + 1.0;
        assert!((mean - coupon_collector_expectation(5)).abs() < 1e-9);
    }

    fn assignment() -> GroupAssignment {
        GroupAssignment::from_groups(4, vec![0, 0, 1, 1, 2, 2, 3, 3]).unwrap()
    }

    fn envelope(sender: UserId, recipient: UserId, phi: f64) -> Envelope {
        Envelope::new(&Message::new(sender, recipient, 0, 1.0, phi).unwrap(), &assignment()).unwrap()
    }

    #[test]
    fn bulk_inbox_of_one_hundred() {
        // group 1 holds users 2 and 3; one message for user 2
        let mut inbox: Vec<Envelope> = (0..99).map(|i| envelope([0, 4, 6][i % 3], 3, 0.05)).collect();
        inbox.push(envelope(1, 2, 0.05));
        let t = strategy_bulk_download(&inbox, 2, 1).unwrap();
        assert!((t.downloaded_units - 105.0).abs() < 1e-9);
        assert_eq!(t.useful_messages, 1);
        assert_eq!(t.connections, 1);
        assert!((t.bandwidth_ratio().unwrap() - 100.0).abs() < 1e-9);
        assert!((t.computation_ratio().unwrap() - 6.0).abs() < 1e-9);
        assert_eq!(t.header_decryptions, 100);
        assert_eq!(t.body_decryptions, 1);
    }

    #[test]
    fn bulk_edge_cases() {
        let empty = strategy_bulk_download(&[], 2, 1).unwrap();
        assert_eq!((empty.downloaded_messages, empty.connections), (0, 1));
        assert_eq!(empty.bandwidth_ratio(), None);
        let inbox = vec![envelope(0, 3, 0.1), envelope(4, 3, 0.1)];
        let lonely = strategy_bulk_download(&inbox, 2, 1).unwrap();
        assert_eq!((lonely.downloaded_messages, lonely.header_decryptions, lonely.body_decryptions), (2, 2, 0));
        assert!(strategy_bulk_download(&inbox, 0, 0).is_err());
    }

    #[test]
    fn one_message_rendezvous_is_static() {
        let a = assignment();
        let msg = Message::new(0, 5, 3, 1.0, 0.05).unwrap();
        let out = strategy_dynamic_rendezvous(&[msg], &a, 1).unwrap();
        assert_eq!(out.destinations, vec![2]);
        assert_eq!(out.mailboxes, vec![(0, 2)]);
        assert_eq!(out.tally.connections, 1);
        assert_eq!(out.tally.bandwidth_ratio(), Some(1.0));
        assert!(strategy_dynamic_rendezvous(&[], &a, 1).unwrap().destinations.is_empty());
        let mixed = [msg, Message::new(1, 5, 4, 1.0, 0.05).unwrap()];
        assert!(strategy_dynamic_rendezvous(&mixed, &a, 1).is_err());
    }

    #[test]
    fn rendezvous_occupancy() {
        let m = 1000u32;
        let a = assign_groups(4000, m, 5).unwrap();
        let conversation: Vec<Message> = (0..100).map(|t| Message::new(0, 1, t, 1.0, 0.05).unwrap()).collect();
        let trials = 2000u64;
        let counts: Vec<f64> = (0..trials)
            .map(|s| {
                let out = strategy_dynamic_rendezvous(&conversation, &a, derive_seed(99, s)).unwrap();
                assert_eq!(out.tally.connections, 100);
                assert_eq!(out.mailboxes.len(), out.distinct_destinations());
                out.distinct_destinations() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let q = 1.0 - 1.0 / m as f64;
        let expected = 1.0 + (m - 1) as f64 * (1.0 - q.powi(99));
        assert!((mean - expected).abs() <= 3.0 * (var / trials as f64).sqrt() + 1e-9, "{mean} vs {expected}");
    }
}
