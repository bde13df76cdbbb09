//! Users, groups and the projection of the friendship relation onto groups.
//!
//! A [`SocialGraph`] is a multigraph on `0..n`. [`assign_groups`] places every
//! user in one of `m` groups uniformly at random and [`project_graph`] tallies,
//! for every unordered group pair (self-pairs included), how many friendship
//! edges run between the two groups. Pairs with a nonzero tally form the
//! projected relation; the tally itself is the stream size.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degree::{sample_degree_sequence, DegreeDistribution};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub type UserId = u32;
pub type GroupId = u32;
pub type Tick = u64;

/// Friendship multigraph. Self-loops and parallel edges are kept, as the
/// configuration model produces them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialGraph {
    n: usize,
    degrees: Vec<u32>,
    edges: Vec<(UserId, UserId)>,
}

impl SocialGraph {
    pub fn from_edges(n: usize, edges: Vec<(UserId, UserId)>) -> Result<Self> {
        let mut degrees = vec![0u32; n];
        for &(a, b) in &edges {
            for u in [a, b] {
                if u as usize >= n {
                    return Err(Error::UserOutOfRange { user: u, n });
                }
                degrees[u as usize] += 1;
            }
        }
        Ok(Self { n, degrees, edges })
    }

    /// Pairs degree stubs uniformly at random.
    pub fn configuration_model(degrees: Vec<u32>, seed: u64) -> Result<Self> {
        let total: u64 = degrees.iter().map(|&k| k as u64).sum();
        if total % 2 == 1 {
            return Err(Error::Config(format!("degree sequence has odd total {total}")));
        }
        if degrees.len() > UserId::MAX as usize {
            return Err(Error::Config("population exceeds the user id range".into()));
        }
        let mut stubs: Vec<UserId> = Vec::with_capacity(total as usize);
        for (u, &k) in degrees.iter().enumerate() {
            stubs.extend(std::iter::repeat_n(u as UserId, k as usize));
        }
        let mut rng = rng_from_seed(seed);
        stubs.shuffle(&mut rng);
        let edges = stubs.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        Ok(Self { n: degrees.len(), degrees, edges })
    }

    /// Draws a degree sequence from `law` and realizes it with the configuration model.
    pub fn sample(law: &DegreeDistribution, n: usize, seed: u64) -> Result<Self> {
        let degrees = sample_degree_sequence(law, n, derive_seed(seed, 0));
        Self::configuration_model(degrees, derive_seed(seed, 1))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn edges(&self) -> &[(UserId, UserId)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Incident edge indices per user, self-loops listed once.
    pub fn incidence(&self) -> Incidence {
        let mut offsets = vec![0usize; self.n + 1];
        for &(a, b) in &self.edges {
            offsets[a as usize + 1] += 1;
            if a != b {
                offsets[b as usize + 1] += 1;
            }
        }
        for i in 0..self.n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut entries = vec![0u32; offsets[self.n]];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            entries[cursor[a as usize]] = e as u32;
            cursor[a as usize] += 1;
            if a != b {
                entries[cursor[b as usize]] = e as u32;
                cursor[b as usize] += 1;
            }
        }
        Incidence { offsets, entries }
    }
}

/// Compressed incidence lists built by [`SocialGraph::incidence`].
#[derive(Debug, Clone)]
pub struct Incidence {
    offsets: Vec<usize>,
    entries: Vec<u32>,
}

impl Incidence {
    pub fn edges_of(&self, user: UserId) -> &[u32] {
        let u = user as usize;
        &self.entries[self.offsets[u]..self.offsets[u + 1]]
    }
}

/// User-to-group map over `m` groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    m: u32,
    group_of: Vec<GroupId>,
    sizes: Vec<u32>,
}

impl GroupAssignment {
    pub fn from_groups(m: u32, group_of: Vec<GroupId>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("group count m must be at least 1".into()));
        }
        let mut sizes = vec![0u32; m as usize];
        for &g in &group_of {
            if g >= m {
                return Err(Error::GroupOutOfRange { index: g, m });
            }
            sizes[g as usize] += 1;
        }
        Ok(Self { m, group_of, sizes })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.group_of.len()
    }

    pub fn groups(&self) -> &[GroupId] {
        &self.group_of
    }

    pub fn group(&self, user: UserId) -> Result<GroupId> {
        self.group_of
            .get(user as usize)
            .copied()
            .ok_or(Error::UserOutOfRange { user, n: self.group_of.len() })
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn size_of(&self, group: GroupId) -> Result<u32> {
        self.sizes.get(group as usize).copied().ok_or(Error::GroupOutOfRange { index: group, m: self.m })
    }

    /// Members of every group, in user order.
    pub fn members(&self) -> Vec<Vec<UserId>> {
        let mut out: Vec<Vec<UserId>> = self.sizes.iter().map(|&s| Vec::with_capacity(s as usize)).collect();
        for (u, &g) in self.group_of.iter().enumerate() {
            out[g as usize].push(u as UserId);
        }
        out
    }
}

/// Assigns each of `n` users to one of `m` groups independently and uniformly.
pub fn assign_groups(n: usize, m: u32, seed: u64) -> Result<GroupAssignment> {
    if m == 0 || m as usize > n {
        return Err(Error::Config(format!("group count must satisfy 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let group_of = (0..n).map(|_| rng.random_range(0..m)).collect();
    GroupAssignment::from_groups(m, group_of)
}

/// Mean group size `n/m` under uniform assignment.
pub fn expected_group_size(n: u64, m: u32) -> f64 {
    n as f64 / m as f64
}

/// Standard deviation of a group's size, `sqrt(n (1/m) (1 - 1/m))`.
pub fn group_size_std(n: u64, m: u32) -> f64 {
    let p = 1.0 / m as f64;
    (n as f64 * p * (1.0 - p)).sqrt()
}

/// Anonymity parameter `floor(n / 2m)`.
pub fn anonymity_k(n: u64, m: u32) -> u64 {
    n / (2 * m as u64)
}

/// Unordered pair of groups, stored with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupPair {
    #[serde(rename = "group_i")]
    pub lo: GroupId,
    #[serde(rename = "group_j")]
    pub hi: GroupId,
}

impl GroupPair {
    pub fn new(a: GroupId, b: GroupId) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    fn key(self) -> u64 {
        ((self.lo as u64) << 32) | self.hi as u64
    }

    fn from_key(key: u64) -> Self {
        Self { lo: (key >> 32) as u32, hi: key as u32 }
    }

    pub fn is_self_pair(self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stream {
    #[serde(flatten)]
    pub pair: GroupPair,
    pub multiplicity: u64,
}

/// Group-level image of a social graph: edge multiplicity per group pair.
///
/// Only pairs with multiplicity >= 1 are stored, sorted by pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionNetwork {
    m: u32,
    streams: Vec<Stream>,
}

impl ProjectionNetwork {
    pub fn from_streams(m: u32, mut streams: Vec<Stream>) -> Result<Self> {
        for s in &streams {
            if s.pair.hi >= m {
                return Err(Error::GroupOutOfRange { index: s.pair.hi, m });
            }
            if s.pair.lo > s.pair.hi {
                return Err(Error::Config(format!("group pair ({}, {}) is not normalized", s.pair.lo, s.pair.hi)));
            }
        }
        streams.retain(|s| s.multiplicity > 0);
        streams.sort_by_key(|s| s.pair);
        for w in streams.windows(2) {
            if w[0].pair == w[1].pair {
                return Err(Error::Config(format!("group pair ({}, {}) listed twice", w[0].pair.lo, w[0].pair.hi)));
            }
        }
        Ok(Self { m, streams })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn streams(&self) -> &[Stream] {
        &self.streams
    }

    /// Pairs in the projected relation.
    pub fn relation(&self) -> impl Iterator<Item = GroupPair> + '_ {
        self.streams.iter().map(|s| s.pair)
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.streams.iter().map(|s| s.multiplicity).sum()
    }

    /// Stream size between groups `a` and `b`, zero when unconnected.
    pub fn streams_between(&self, a: GroupId, b: GroupId) -> Result<u64> {
        for g in [a, b] {
            if g >= self.m {
                return Err(Error::GroupOutOfRange { index: g, m: self.m });
            }
        }
        let pair = GroupPair::new(a, b);
        Ok(self
            .streams
            .binary_search_by_key(&pair, |s| s.pair)
            .map(|i| self.streams[i].multiplicity)
            .unwrap_or(0))
    }

    pub fn contains(&self, a: GroupId, b: GroupId) -> bool {
        self.streams_between(a, b).map(|c| c > 0).unwrap_or(false)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# m={}", self.m)?;
        writeln!(out, "group_i,group_j,multiplicity")?;
        for s in &self.streams {
            writeln!(out, "{},{},{}", s.pair.lo, s.pair.hi, s.multiplicity)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Parse { path: "<projection csv>".into(), line: line as u64, message };
        let mut m = None;
        let mut streams = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line == "group_i,group_j,multiplicity" {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# m=") {
                m = Some(rest.parse::<u32>().map_err(|e| bad(idx + 1, e.to_string()))?);
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(bad(idx + 1, format!("expected 3 columns, found {}", fields.len())));
            }
            let num = |s: &str| s.trim().parse::<u64>().map_err(|e| bad(idx + 1, e.to_string()));
            let (a, b, c) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
            streams.push(Stream { pair: GroupPair::new(a as u32, b as u32), multiplicity: c });
        }
        let m = m.ok_or_else(|| bad(1, "missing `# m=` header".into()))?;
        Self::from_streams(m, streams)
    }
}

fn tally(keys: &mut [u64]) -> Vec<(u64, u64)> {
    keys.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::new();
    for &k in keys.iter() {
        match out.last_mut() {
            Some((last, count)) if *last == k => *count += 1,
            _ => out.push((k, 1)),
        }
    }
    out
}

fn check_cover(graph: &SocialGraph, assignment: &GroupAssignment) -> Result<()> {
    if assignment.n() != graph.n() {
        return Err(Error::Config(format!(
            "assignment covers {} users but the graph has {}",
            assignment.n(),
            graph.n()
        )));
    }
    Ok(())
}

/// Projects the friendship relation onto group pairs.
pub fn project_graph(graph: &SocialGraph, assignment: &GroupAssignment) -> Result<ProjectionNetwork> {
    check_cover(graph, assignment)?;
    let groups = assignment.groups();
    let mut keys: Vec<u64> = graph
        .edges()
        .iter()
        .map(|&(a, b)| GroupPair::new(groups[a as usize], groups[b as usize]).key())
        .collect();
    Ok(network_from_tally(assignment.m(), tally(&mut keys)))
}

/// [`project_graph`] with the edge list split into `workers` shards tallied
/// in parallel. The merged result does not depend on `workers`.
pub fn project_graph_sharded(
    graph: &SocialGraph,
    assignment: &GroupAssignment,
    workers: usize,
) -> Result<ProjectionNetwork> {
    check_cover(graph, assignment)?;
    let workers = workers.max(1);
    let groups = assignment.groups();
    let chunk = graph.edge_count().div_ceil(workers).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let partials: Vec<Vec<(u64, u64)>> = pool.install(|| {
        graph
            .edges()
            .par_chunks(chunk)
            .map(|shard| {
                let mut keys: Vec<u64> = shard
                    .iter()
                    .map(|&(a, b)| GroupPair::new(groups[a as usize], groups[b as usize]).key())
                    .collect();
                tally(&mut keys)
            })
            .collect()
    });
    let mut merged: BTreeMap<u64, u64> = BTreeMap::new();
    for (k, c) in partials.into_iter().flatten() {
        *merged.entry(k).or_insert(0) += c;
    }
    Ok(network_from_tally(assignment.m(), merged.into_iter().collect()))
}

fn network_from_tally(m: u32, tally: Vec<(u64, u64)>) -> ProjectionNetwork {
    ProjectionNetwork {
        m,
        streams: tally
            .into_iter()
            .map(|(k, c)| Stream { pair: GroupPair::from_key(k), multiplicity: c })
            .collect(),
    }
}

/// Content is modeled by its size only; `header_ratio` is the size of the
/// recipient-identifying header relative to the body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub sender: UserId,
    pub recipient: UserId,
    pub t_send: Tick,
    pub t_receive: Option<Tick>,
    pub size: f64,
    pub header_ratio: f64,
}

impl Message {
    pub fn new(sender: UserId, recipient: UserId, t_send: Tick, size: f64, header_ratio: f64) -> Result<Self> {
        if !(size.is_finite() && size > 0.0) {
            return Err(Error::Config(format!("message size must be positive, got {size}")));
        }
        if !(0.0..1.0).contains(&header_ratio) {
            return Err(Error::Config(format!("header ratio must lie in [0, 1), got {header_ratio}")));
        }
        Ok(Self { sender, recipient, t_send, t_receive: None, size, header_ratio })
    }

    pub fn received_at(mut self, tick: Tick) -> Result<Self> {
        if tick < self.t_send {
            return Err(Error::Config(format!("receive tick {tick} precedes send tick {}", self.t_send)));
        }
        self.t_receive = Some(tick);
        Ok(self)
    }

    /// Transmitted volume: body plus header.
    pub fn wire_size(&self) -> f64 {
        self.size * (1.0 + self.header_ratio)
    }
}

/// A message as the service sees it: group header, send tick, and the sparse
/// set of pickup ticks by members of the destination group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedMessage {
    pub source_group: GroupId,
    pub dest_group: GroupId,
    pub t_send: Tick,
    /// Keyed by the downloader's position within the destination group.
    pub pickup_times: BTreeMap<u32, Tick>,
    pub size: f64,
    dest_group_size: u32,
}

impl ProjectedMessage {
    pub fn dest_group_size(&self) -> u32 {
        self.dest_group_size
    }

    pub fn record_pickup(&mut self, position: u32, tick: Tick) -> Result<()> {
        if position >= self.dest_group_size {
            return Err(Error::Config(format!(
                "pickup position {position} outside destination group of size {}",
                self.dest_group_size
            )));
        }
        if tick < self.t_send {
            return Err(Error::Config(format!("pickup tick {tick} precedes send tick {}", self.t_send)));
        }
        self.pickup_times.insert(position, tick);
        Ok(())
    }
}

pub fn project_message(msg: &Message, assignment: &GroupAssignment) -> Result<ProjectedMessage> {
    let source_group = assignment.group(msg.sender)?;
    let dest_group = assignment.group(msg.recipient)?;
    Ok(ProjectedMessage {
        source_group,
        dest_group,
        t_send: msg.t_send,
        pickup_times: BTreeMap::new(),
        size: msg.size,
        dest_group_size: assignment.size_of(dest_group)?,
    })
}
