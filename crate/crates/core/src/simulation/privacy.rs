//! Empirical edge privacy: does a friend pair's group pair stay connected
//! once the sender's own edges are deleted?

use rand::Rng;

use super::Estimate;
use crate::error::{Error, Result};
use crate::projection::{project_graph, GroupAssignment, SocialGraph, UserId};
use crate::rng::rng_from_seed;

/// Below this many ordered friend pairs every pair is enumerated instead of sampled.
const EXHAUSTIVE_LIMIT: usize = 4096;

/// Frequency with which, for a friend pair (Alice, Bob), some edge other than
/// Alice's still joins Alice's group to Bob's group.
///
/// Ordered pairs come from non-loop edges in both orientations. When there
/// are at most `max(trials, 4096)` of them the result is the exact frequency
/// over all of them, with zero standard error; otherwise `trials` pairs are
/// drawn uniformly with replacement.
pub fn estimate_edge_privacy(
    graph: &SocialGraph,
    assignment: &GroupAssignment,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials < 100 {
        return Err(Error::Config(format!("privacy trials must be at least 100, got {trials}")));
    }
    if assignment.n() != graph.n() {
        return Err(Error::Config(format!(
            "assignment covers {} users but the graph has {}",
            assignment.n(),
            graph.n()
        )));
    }
    let friend_edges: Vec<u32> =
        graph.edges().iter().enumerate().filter(|(_, &(a, b))| a != b).map(|(e, _)| e as u32).collect();
    if friend_edges.is_empty() {
        return Err(Error::Config("edge privacy needs at least one friendship edge".into()));
    }
    let network = project_graph(graph, assignment)?;
    let incidence = graph.incidence();
    let groups = assignment.groups();
    let edges = graph.edges();

    let survives = |alice: UserId, bob: UserId| -> bool {
        let (ga, gb) = (groups[alice as usize], groups[bob as usize]);
        let stream = network.streams_between(ga, gb).expect("groups in range");
        let own = incidence
            .edges_of(alice)
            .iter()
            .filter(|&&e| {
                let (x, y) = edges[e as usize];
                let other = if x == alice { y } else { x };
                groups[other as usize] == gb
            })
            .count() as u64;
        stream > own
    };

    let ordered = 2 * friend_edges.len();
    if ordered <= EXHAUSTIVE_LIMIT.max(trials as usize) {
        let hits = friend_edges
            .iter()
            .map(|&e| {
                let (a, b) = edges[e as usize];
                survives(a, b) as u64 + survives(b, a) as u64
            })
            .sum::<u64>();
        return Ok(Estimate { value: hits as f64 / ordered as f64, std_error: 0.0 });
    }
    let mut rng = rng_from_seed(seed);
    let mut hits = 0u64;
    for _ in 0..trials {
        let (a, b) = edges[friend_edges[rng.random_range(0..friend_edges.len())] as usize];
        let (alice, bob) = if rng.random::<bool>() { (a, b) } else { (b, a) };
        hits += survives(alice, bob) as u64;
    }
    Ok(Estimate::binomial(hits, trials))
}
