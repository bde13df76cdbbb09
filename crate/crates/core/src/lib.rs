//! Group-based anonymity sets sized from social-graph degree statistics.
//!
//! Users are split uniformly at random into `m` groups. Friendship edges then
//! project onto group pairs, and the multiplicity of each pair (its stream)
//! decides how much cover traffic hides an individual conversation.

pub mod analytics;
pub mod degree;
pub mod error;
pub mod projection;
pub mod rng;
pub mod simulation;

pub use degree::{DegreeDistribution, GraphProfile, Provenance};
pub use error::{Error, Result};
pub use projection::{
    assign_groups, project_graph, project_graph_sharded, project_message, GroupAssignment, GroupId, GroupPair,
    Message, ProjectedMessage, ProjectionNetwork, SocialGraph, Stream, Tick, UserId,
};
