//! Empirical connection probability and stream-size law of random group pairs.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};

use super::Estimate;
use crate::analytics::poisson::poisson_pmf;
use crate::degree::{DegreeDistribution, GraphProfile};
use crate::error::{Error, Result};
use crate::projection::{assign_groups, project_graph, ProjectionNetwork, SocialGraph};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

/// Largest total stub count `n d` built explicitly.
pub const EXPLICIT_STUB_CAP: u64 = 50_000_000;
/// Group sizes up to this sum their members' degrees one by one in the
/// shortcut; larger groups use the normal limit of the sum.
const EXACT_SUM_LIMIT: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMethod {
    /// Build the configuration-model graph and project it.
    #[default]
    Explicit,
    /// Draw each pair's two group degree sums and thin binomially, without
    /// building a graph. Approximate: pairs are independent, and large group
    /// sums are drawn from their normal limit.
    StubShortcut,
}

/// Multiplicities of independently sampled group pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSample {
    pub lambda: f64,
    pub multiplicities: Vec<u64>,
}

impl StreamSample {
    pub fn connect_estimate(&self) -> Estimate {
        let hits = self.multiplicities.iter().filter(|&&s| s > 0).count() as u64;
        Estimate::binomial(hits, self.multiplicities.len() as u64)
    }

    /// Relative frequency of each multiplicity; sums to 1.
    pub fn histogram(&self) -> BTreeMap<u64, f64> {
        let mut counts = BTreeMap::new();
        for &s in &self.multiplicities {
            *counts.entry(s).or_insert(0u64) += 1;
        }
        let total = self.multiplicities.len() as f64;
        counts.into_iter().map(|(k, c)| (k, c as f64 / total)).collect()
    }

    pub fn mean(&self) -> Estimate {
        let r = self.multiplicities.len() as f64;
        let mean = self.multiplicities.iter().sum::<u64>() as f64 / r;
        let var = self.multiplicities.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (r - 1.0);
        Estimate { value: mean, std_error: (var / r).sqrt() }
    }
}

/// Draws one uniformly random unordered pair of distinct groups (the single
/// self-pair when `m = 1`) and returns its stream size, `pairs` times.
pub fn sample_pairs(network: &ProjectionNetwork, pairs: u64, rng: &mut SimRng) -> Vec<u64> {
    let m = network.m();
    (0..pairs)
        .map(|_| {
            let (i, j) = random_pair(m, rng);
            network.streams_between(i, j).expect("sampled groups lie in range")
        })
        .collect()
}

fn random_pair(m: u32, rng: &mut SimRng) -> (u32, u32) {
    if m == 1 {
        return (0, 0);
    }
    let i = rng.random_range(0..m);
    let mut j = rng.random_range(0..m - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

fn check_args(profile: &GraphProfile, m: u32, pairs: u64) -> Result<()> {
    if pairs < 100 {
        return Err(Error::Config(format!("pairs_sampled must be at least 100, got {pairs}")));
    }
    if m == 0 || m as u64 > profile.n {
        return Err(Error::Config(format!("m = {m} must lie in [1, n = {}]", profile.n)));
    }
    Ok(())
}

pub fn sample_streams(
    profile: &GraphProfile,
    m: u32,
    pairs: u64,
    seed: u64,
    method: SamplingMethod,
) -> Result<StreamSample> {
    check_args(profile, m, pairs)?;
    let lambda = profile.total_degree() / (m as f64 * m as f64);
    if profile.d == 0.0 {
        return Ok(StreamSample { lambda, multiplicities: vec![0; pairs as usize] });
    }
    let law = DegreeDistribution::matched(profile)?;
    let multiplicities = match method {
        SamplingMethod::Explicit => {
            let stubs = profile.total_degree().ceil() as u64;
            if stubs > EXPLICIT_STUB_CAP {
                return Err(Error::ResourceCap { stubs, cap: EXPLICIT_STUB_CAP });
            }
            let n = profile.n as usize;
            let graph = SocialGraph::sample(&law, n, derive_seed(seed, 0))?;
            let assignment = assign_groups(n, m, derive_seed(seed, 1))?;
            let network = project_graph(&graph, &assignment)?;
            sample_pairs(&network, pairs, &mut rng_from_seed(derive_seed(seed, 2)))
        }
        SamplingMethod::StubShortcut => shortcut(&law, profile.n, m, pairs, seed)?,
    };
    Ok(StreamSample { lambda, multiplicities })
}

fn shortcut(law: &DegreeDistribution, n: u64, m: u32, pairs: u64, seed: u64) -> Result<Vec<u64>> {
    let mut rng = rng_from_seed(derive_seed(seed, 3));
    let sampler = law.sampler();
    let (mean, sd) = (law.mean(), law.std());
    let total_stubs = n as f64 * mean;
    let degree_sum = |members: u64, rng: &mut SimRng| -> u64 {
        if members <= EXACT_SUM_LIMIT {
            (0..members).map(|_| sampler.sample(rng) as u64).sum()
        } else {
            let k = members as f64;
            let normal = Normal::new(k * mean, k.sqrt() * sd).expect("finite parameters");
            normal.sample(rng).round().max(0.0) as u64
        }
    };
    let bin = |trials: u64, p: f64| Binomial::new(trials, p.clamp(0.0, 1.0)).expect("probability in range");

    let mut out = Vec::with_capacity(pairs as usize);
    for _ in 0..pairs {
        if m == 1 {
            out.push((total_stubs / 2.0).round() as u64);
            continue;
        }
        let n_i = bin(n, 1.0 / m as f64).sample(&mut rng);
        let n_j = bin(n - n_i, 1.0 / (m - 1) as f64).sample(&mut rng);
        let d_i = degree_sum(n_i, &mut rng);
        let d_j = degree_sum(n_j, &mut rng);
        // each of the D_i stubs pairs with one of the other S - 1 stubs
        let p = d_j as f64 / (total_stubs - 1.0).max(1.0);
        out.push(bin(d_i, p).sample(&mut rng));
    }
    Ok(out)
}

/// Fraction of sampled group pairs joined by at least one edge.
pub fn simulate_connection_prob(profile: &GraphProfile, m: u32, pairs_sampled: u64, seed: u64) -> Result<Estimate> {
    Ok(sample_streams(profile, m, pairs_sampled, seed, SamplingMethod::Explicit)?.connect_estimate())
}

pub fn simulate_stream_histogram(
    profile: &GraphProfile,
    m: u32,
    pairs_sampled: u64,
    seed: u64,
) -> Result<BTreeMap<u64, f64>> {
    Ok(sample_streams(profile, m, pairs_sampled, seed, SamplingMethod::Explicit)?.histogram())
}

/// Total-variation distance between an empirical law on `0..` and Poisson(`lambda`).
pub fn total_variation_to_poisson(histogram: &BTreeMap<u64, f64>, lambda: f64) -> f64 {
    let top = histogram.keys().next_back().copied().unwrap_or(0);
    let mut covered = 0.0;
    let mut diff = 0.0;
    for k in 0..=top {
        let p = poisson_pmf(k, lambda);
        covered += p;
        diff += (histogram.get(&k).copied().unwrap_or(0.0) - p).abs();
    }
    // Poisson mass above the largest observed multiplicity
    diff += (1.0 - covered).max(0.0);
    0.5 * diff
}
