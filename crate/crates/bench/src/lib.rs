//! Shared fixtures for the benchmarks.

use kanon_core::{assign_groups, DegreeDistribution, GraphProfile, GroupAssignment, SocialGraph};

/// Desk-scale population: `n = 10^5`, `d = 20`, Poisson-like spread.
pub fn desk_profile() -> GraphProfile {
    GraphProfile::new(100_000, 20.0, 20f64.sqrt()).expect("valid profile")
}

/// Group count giving `lambda` expected edges per group pair.
pub fn m_for_lambda(profile: &GraphProfile, lambda: f64) -> u32 {
    (profile.total_degree() / lambda).sqrt().round() as u32
}

/// A sampled graph and assignment for `profile` at `m` groups.
pub fn instance(profile: &GraphProfile, m: u32, seed: u64) -> (SocialGraph, GroupAssignment) {
    let law = DegreeDistribution::matched(profile).expect("profile fits");
    let n = profile.n as usize;
    let graph = SocialGraph::sample(&law, n, seed).expect("graph samples");
    let assignment = assign_groups(n, m, seed ^ 1).expect("m within range");
    (graph, assignment)
}
