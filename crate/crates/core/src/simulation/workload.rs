//! Message workloads over a projected graph, with receiver strategies and
//! resource accounting.
//!
//! Within one replication, friend pairs exchange messages at `send_rate` per
//! pair per tick, each message's direction decided by a fair coin. Time is
//! cut into poll windows of `poll_interval` ticks. A message sent in window
//! `w` sits in the mailbox keyed by (sender group, destination group, `w`)
//! and is fetched during window `w + 1` at a tick drawn uniformly per
//! receiver and window.
//!
//! Users that receive at least one message during the run are the active
//! receivers. Under `poll`, each active receiver checks every window: it
//! polls random friend groups until all have been seen and fetches each
//! friend group's mailbox for it. Under `bulk` it fetches its group's whole
//! inbox in one connection. Under `rendezvous`, every directed conversation
//! starts at the recipient's group and then hops to a uniformly random group
//! announced in the previous message; the recipient fetches exactly the
//! announced mailbox. Receivers never count their own sent messages.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adversary::{AdversaryLog, AdversaryRecord};
use super::connectivity::{sample_pairs, EXPLICIT_STUB_CAP};
use super::privacy::estimate_edge_privacy;
use super::strategies::random_poll_count;
use super::Estimate;
use crate::degree::{DegreeDistribution, GraphProfile};
use crate::error::{Error, Result};
use crate::projection::{assign_groups, project_graph, GroupAssignment, GroupId, SocialGraph, Tick, UserId};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Poll,
    Bulk,
    Rendezvous,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poll" => Ok(Strategy::Poll),
            "bulk" => Ok(Strategy::Bulk),
            "rendezvous" => Ok(Strategy::Rendezvous),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Poll => "poll",
            Strategy::Bulk => "bulk",
            Strategy::Rendezvous => "rendezvous",
        })
    }
}

#[derive(Debug, Clone)]
pub enum Population {
    /// A fresh configuration-model graph matching the profile per replication.
    Profile(GraphProfile),
    /// A fixed graph; without an assignment, groups are redrawn per replication.
    Graph { graph: SocialGraph, assignment: Option<GroupAssignment> },
}

#[derive(Debug, Clone)]
pub struct WorkloadConfig {
    pub population: Population,
    pub m: u32,
    pub ticks: u64,
    /// Expected messages per friend pair per tick.
    pub send_rate: f64,
    pub phi: f64,
    /// One of `poll`, `bulk`, `rendezvous`.
    pub strategy: String,
    pub replications: u32,
    pub seed: u64,
    /// Threads for replications; 0 uses the global default.
    pub workers: usize,
    pub poll_interval: u64,
    /// Fetch headers first and bodies only on a match. Not part of the
    /// reference resource model; off by default.
    pub header_only: bool,
    /// Group pairs drawn per replication for the connection estimate; 0 skips it.
    pub pairs_sampled: u64,
    /// Friend pairs per replication for edge privacy; 0 skips it.
    pub privacy_trials: u64,
    pub message_size: f64,
}

impl WorkloadConfig {
    pub fn new(population: Population, m: u32) -> Self {
        Self {
            population,
            m,
            ticks: 1,
            send_rate: 1.0,
            phi: 0.05,
            strategy: "poll".into(),
            replications: 1,
            seed: 0,
            workers: 0,
            poll_interval: 1,
            header_only: false,
            pairs_sampled: 0,
            privacy_trials: 0,
            message_size: 1.0,
        }
    }

    fn n(&self) -> u64 {
        match &self.population {
            Population::Profile(p) => p.n,
            Population::Graph { graph, .. } => graph.n() as u64,
        }
    }

    pub fn validate(&self) -> Result<Strategy> {
        let strategy: Strategy = self.strategy.parse()?;
        let fail = |msg: String| Err(Error::Config(msg));
        if self.ticks == 0 {
            return fail("ticks must be at least 1".into());
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.poll_interval == 0 {
            return fail("poll interval must be at least 1 tick".into());
        }
        if !(self.send_rate.is_finite() && self.send_rate >= 0.0) {
            return fail(format!("send rate must be finite and nonnegative, got {}", self.send_rate));
        }
        if !(0.0..1.0).contains(&self.phi) {
            return fail(format!("header ratio phi must lie in [0, 1), got {}", self.phi));
        }
        if !(self.message_size.is_finite() && self.message_size > 0.0) {
            return fail(format!("message size must be positive, got {}", self.message_size));
        }
        if self.m == 0 || self.m as u64 > self.n() {
            return fail(format!("m = {} must lie in [1, n = {}]", self.m, self.n()));
        }
        if (1..100).contains(&self.pairs_sampled) {
            return fail(format!("pairs sampled must be 0 or at least 100, got {}", self.pairs_sampled));
        }
        if (1..100).contains(&self.privacy_trials) {
            return fail(format!("privacy trials must be 0 or at least 100, got {}", self.privacy_trials));
        }
        match &self.population {
            Population::Profile(p) => {
                let stubs = p.total_degree().ceil() as u64;
                if stubs > EXPLICIT_STUB_CAP {
                    return Err(Error::ResourceCap { stubs, cap: EXPLICIT_STUB_CAP });
                }
            }
            Population::Graph { graph, assignment: Some(a) } => {
                if a.m() != self.m || a.n() != graph.n() {
                    return fail(format!(
                        "assignment has m = {} over {} users, expected m = {} over {}",
                        a.m(),
                        a.n(),
                        self.m,
                        graph.n()
                    ));
                }
            }
            Population::Graph { .. } => {}
        }
        Ok(strategy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub strategy: Strategy,
    pub n: u64,
    pub m: u32,
    pub ticks: u64,
    pub send_rate: f64,
    pub phi: f64,
    pub header_only: bool,
    pub replications: u32,
    pub seed: u64,
    /// Mean over replications of total degree over `m^2`.
    pub lambda: f64,
    pub messages_sent: u64,
    pub empirical_connect_prob: Option<Estimate>,
    /// Pooled over replications; empty when no pairs were sampled.
    pub stream_size_histogram: BTreeMap<u64, f64>,
    /// Total downloaded volume over total volume meant for receivers, per
    /// replication. Absent when nothing was delivered.
    pub bandwidth_ratio: Option<Estimate>,
    pub computation_ratio: Option<Estimate>,
    /// Service contacts per mailbox check.
    pub connections: Estimate,
    pub edge_privacy_estimate: Option<Estimate>,
}

#[derive(Debug, Default)]
struct Replica {
    lambda: f64,
    messages: u64,
    connect_hits: u64,
    pairs: u64,
    stream_counts: BTreeMap<u64, u64>,
    downloaded_full: u64,
    downloaded_header_only: u64,
    meant: u64,
    connections: u64,
    checks: u64,
    privacy: Option<Estimate>,
    log: Option<AdversaryLog>,
}

impl Replica {
    fn bandwidth(&self, phi: f64) -> Option<f64> {
        (self.meant > 0).then(|| {
            (self.downloaded_full as f64 * (1.0 + phi) + self.downloaded_header_only as f64 * phi)
                / (self.meant as f64 * (1.0 + phi))
        })
    }

    fn computation(&self, phi: f64) -> Option<f64> {
        let headers = self.downloaded_full + self.downloaded_header_only;
        (self.meant > 0).then(|| (headers as f64 * phi + self.meant as f64) / self.meant as f64)
    }

    fn connections_per_check(&self) -> f64 {
        if self.checks == 0 {
            0.0
        } else {
            self.connections as f64 / self.checks as f64
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Sent {
    tick: Tick,
    sender: UserId,
    recipient: UserId,
    source_group: GroupId,
    dest_group: GroupId,
}

/// Runs every replication and returns the merged report together with the
/// adversary's view of the first replication.
pub fn run_workload(config: &WorkloadConfig) -> Result<(SimReport, AdversaryLog)> {
    let strategy = config.validate()?;
    let law = match &config.population {
        Population::Profile(p) if p.d > 0.0 => Some(DegreeDistribution::matched(p)?),
        Population::Profile(_) => Some(DegreeDistribution::point_mass(0)),
        Population::Graph { .. } => None,
    };
    let run = |r: u32| run_replica(config, strategy, law.as_ref(), r);
    let replicas: Vec<Replica> = if config.workers == 0 {
        (0..config.replications).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", config.workers)))?;
        pool.install(|| (0..config.replications).into_par_iter().map(run).collect::<Result<_>>())?
    };
    Ok(merge(config, strategy, replicas))
}

fn merge(config: &WorkloadConfig, strategy: Strategy, mut replicas: Vec<Replica>) -> (SimReport, AdversaryLog) {
    let r = replicas.len() as f64;
    let phi = config.phi;
    let lambda = replicas.iter().map(|x| x.lambda).sum::<f64>() / r;

    let empirical_connect_prob = (config.pairs_sampled > 0).then(|| {
        if replicas.len() == 1 {
            Estimate::binomial(replicas[0].connect_hits, replicas[0].pairs)
        } else {
            let freqs: Vec<f64> = replicas.iter().map(|x| x.connect_hits as f64 / x.pairs as f64).collect();
            Estimate::from_replications(&freqs).expect("at least one replication")
        }
    });
    let mut pooled: BTreeMap<u64, u64> = BTreeMap::new();
    for x in &replicas {
        for (&k, &c) in &x.stream_counts {
            *pooled.entry(k).or_insert(0) += c;
        }
    }
    let total_pairs: u64 = pooled.values().sum();
    let stream_size_histogram = pooled.into_iter().map(|(k, c)| (k, c as f64 / total_pairs as f64)).collect();

    let collect = |f: &dyn Fn(&Replica) -> Option<f64>| {
        let values: Vec<f64> = replicas.iter().filter_map(f).collect();
        Estimate::from_replications(&values)
    };
    let bandwidth_ratio = collect(&|x| x.bandwidth(phi));
    let computation_ratio = collect(&|x| x.computation(phi));
    let connections = collect(&|x| Some(x.connections_per_check())).expect("at least one replication");
    let edge_privacy_estimate = if replicas.len() == 1 {
        replicas[0].privacy
    } else {
        collect(&|x| x.privacy.map(|e| e.value))
    };

    let report = SimReport {
        strategy,
        n: config.n(),
        m: config.m,
        ticks: config.ticks,
        send_rate: config.send_rate,
        phi,
        header_only: config.header_only,
        replications: config.replications,
        seed: config.seed,
        lambda,
        messages_sent: replicas.iter().map(|x| x.messages).sum(),
        empirical_connect_prob,
        stream_size_histogram,
        bandwidth_ratio,
        computation_ratio,
        connections,
        edge_privacy_estimate,
    };
    let log = replicas[0].log.take().unwrap_or_default();
    (report, log)
}

fn run_replica(
    config: &WorkloadConfig,
    strategy: Strategy,
    law: Option<&DegreeDistribution>,
    index: u32,
) -> Result<Replica> {
    let seed = derive_seed(config.seed, index as u64);
    let (graph, assignment): (Cow<SocialGraph>, Cow<GroupAssignment>) = match &config.population {
        Population::Profile(p) => {
            let law = law.expect("law fitted for profile populations");
            let n = p.n as usize;
            let graph = SocialGraph::sample(law, n, derive_seed(seed, 0))?;
            (Cow::Owned(graph), Cow::Owned(assign_groups(n, config.m, derive_seed(seed, 1))?))
        }
        Population::Graph { graph, assignment } => {
            let a = match assignment {
                Some(a) => Cow::Borrowed(a),
                None => Cow::Owned(assign_groups(graph.n(), config.m, derive_seed(seed, 1))?),
            };
            (Cow::Borrowed(graph), a)
        }
    };
    let m = config.m as f64;
    let mut rep = Replica {
        lambda: graph.degrees().iter().map(|&k| k as f64).sum::<f64>() / (m * m),
        ..Default::default()
    };

    if config.pairs_sampled > 0 {
        let network = project_graph(&graph, &assignment)?;
        let mut rng = rng_from_seed(derive_seed(seed, 4));
        for s in sample_pairs(&network, config.pairs_sampled, &mut rng) {
            *rep.stream_counts.entry(s).or_insert(0) += 1;
            rep.connect_hits += (s > 0) as u64;
        }
        rep.pairs = config.pairs_sampled;
    }

    let friend_edges: Vec<(UserId, UserId)> = graph.edges().iter().copied().filter(|&(a, b)| a != b).collect();
    if config.privacy_trials > 0 && !friend_edges.is_empty() {
        rep.privacy = Some(estimate_edge_privacy(&graph, &assignment, config.privacy_trials, derive_seed(seed, 5))?);
    }

    let messages = generate_messages(config, strategy, &friend_edges, &assignment, derive_seed(seed, 2))?;
    rep.messages = messages.len() as u64;
    let mut pickups: Option<Vec<Vec<Tick>>> = (index == 0).then(|| vec![Vec::new(); messages.len()]);
    let mut rng = rng_from_seed(derive_seed(seed, 3));
    let interval = config.poll_interval;
    let window = |t: Tick| t / interval;
    let pickup_tick = |w: u64, rng: &mut SimRng| (w + 1) * interval + rng.random_range(0..interval);

    // tallies one mailbox fetch by `user` into `rep`
    let fetch = |rep: &mut Replica, list: &[u32], user: UserId, tick: Tick, pickups: &mut Option<Vec<Vec<Tick>>>| {
        for &i in list {
            let msg = &messages[i as usize];
            if msg.sender == user {
                continue;
            }
            if msg.recipient == user {
                rep.meant += 1;
                rep.downloaded_full += 1;
            } else if config.header_only {
                rep.downloaded_header_only += 1;
            } else {
                rep.downloaded_full += 1;
            }
            if let Some(p) = pickups.as_mut() {
                p[i as usize].push(tick);
            }
        }
    };

    let groups = assignment.groups();
    match strategy {
        Strategy::Poll | Strategy::Bulk => {
            let mut mailboxes: HashMap<(GroupId, GroupId, u64), Vec<u32>> = HashMap::new();
            for (i, msg) in messages.iter().enumerate() {
                let src = if strategy == Strategy::Bulk { GroupId::MAX } else { msg.source_group };
                mailboxes.entry((src, msg.dest_group, window(msg.tick))).or_default().push(i as u32);
            }
            let mut active: Vec<UserId> = messages.iter().map(|msg| msg.recipient).collect();
            active.sort_unstable();
            active.dedup();
            let incidence = graph.incidence();
            let edges = graph.edges();
            let friend_groups: Vec<Vec<GroupId>> = active
                .iter()
                .map(|&u| {
                    let mut gs: Vec<GroupId> = incidence
                        .edges_of(u)
                        .iter()
                        .filter_map(|&e| {
                            let (a, b) = edges[e as usize];
                            (a != b).then(|| groups[if a == u { b } else { a } as usize])
                        })
                        .collect();
                    gs.sort_unstable();
                    gs.dedup();
                    gs
                })
                .collect();
            let windows = config.ticks.div_ceil(interval);
            for w in 0..windows {
                for (&u, fg) in active.iter().zip(&friend_groups) {
                    let own = groups[u as usize];
                    let tick = pickup_tick(w, &mut rng);
                    rep.checks += 1;
                    if strategy == Strategy::Bulk {
                        rep.connections += 1;
                        if let Some(list) = mailboxes.get(&(GroupId::MAX, own, w)) {
                            fetch(&mut rep, list, u, tick, &mut pickups);
                        }
                        continue;
                    }
                    rep.connections += random_poll_count(fg.len() as u32, &mut rng);
                    for &g in fg {
                        if let Some(list) = mailboxes.get(&(g, own, w)) {
                            fetch(&mut rep, list, u, tick, &mut pickups);
                        }
                    }
                }
            }
        }
        Strategy::Rendezvous => {
            let mut mailboxes: HashMap<(GroupId, GroupId, u64), Vec<u32>> = HashMap::new();
            for (i, msg) in messages.iter().enumerate() {
                mailboxes.entry((msg.source_group, msg.dest_group, window(msg.tick))).or_default().push(i as u32);
            }
            let mut polled: HashSet<(UserId, GroupId, GroupId, u64)> = HashSet::new();
            for msg in &messages {
                let key = (msg.source_group, msg.dest_group, window(msg.tick));
                if !polled.insert((msg.recipient, key.0, key.1, key.2)) {
                    continue;
                }
                rep.checks += 1;
                rep.connections += 1;
                let tick = pickup_tick(key.2, &mut rng);
                fetch(&mut rep, &mailboxes[&key], msg.recipient, tick, &mut pickups);
            }
        }
    }

    rep.log = pickups.map(|p| AdversaryLog {
        records: messages
            .iter()
            .zip(p)
            .map(|(msg, mut ticks)| {
                ticks.sort_unstable();
                ticks.dedup();
                AdversaryRecord {
                    source_group: msg.source_group,
                    dest_group: msg.dest_group,
                    t_send: msg.tick,
                    pickup_ticks: ticks,
                    size: config.message_size,
                }
            })
            .collect(),
    });
    Ok(rep)
}

/// All messages of one replication in send order. Rendezvous destinations are
/// drawn here, in that order.
fn generate_messages(
    config: &WorkloadConfig,
    strategy: Strategy,
    friend_edges: &[(UserId, UserId)],
    assignment: &GroupAssignment,
    seed: u64,
) -> Result<Vec<Sent>> {
    let mean = config.send_rate * friend_edges.len() as f64 * config.ticks as f64;
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let mut rng = rng_from_seed(seed);
    let total = Poisson::new(mean)
        .map_err(|e| Error::Config(format!("send volume {mean} is out of range: {e}")))?
        .sample(&mut rng) as u64;
    let mut raw: Vec<(Tick, u32, bool)> = (0..total)
        .map(|_| {
            (
                rng.random_range(0..config.ticks),
                rng.random_range(0..friend_edges.len() as u32),
                rng.random::<bool>(),
            )
        })
        .collect();
    raw.sort_unstable();
    let groups = assignment.groups();
    let mut next_hop: HashMap<(UserId, UserId), GroupId> = HashMap::new();
    Ok(raw
        .into_iter()
        .map(|(tick, e, flip)| {
            let (a, b) = friend_edges[e as usize];
            let (sender, recipient) = if flip { (b, a) } else { (a, b) };
            let home = groups[recipient as usize];
            let dest_group = match strategy {
                Strategy::Rendezvous => {
                    let hop = rng.random_range(0..assignment.m());
                    next_hop.insert((sender, recipient), hop).unwrap_or(home)
                }
                _ => home,
            };
            Sent { tick, sender, recipient, source_group: groups[sender as usize], dest_group }
        })
        .collect())
}
