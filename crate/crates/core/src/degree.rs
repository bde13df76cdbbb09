//! Degree laws of the underlying social graph.
//!
//! Only the degree of each user matters once users are grouped uniformly at
//! random, so a graph is summarized by a [`GraphProfile`] (population, mean
//! degree, degree spread) and a sampleable [`DegreeDistribution`]. A law is
//! either read from a `(degree, count)` histogram or fitted as a truncated,
//! discretized lognormal whose first two moments are pinned to the profile.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Population summary: `n` users with mean degree `d` and degree std `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphProfile {
    pub n: u64,
    pub d: f64,
    pub sigma: f64,
}

impl GraphProfile {
    pub fn new(n: u64, d: f64, sigma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("population n must be at least 1".into()));
        }
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::Config(format!("mean degree d must be >= 0, got {d}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Config(format!("degree std sigma must be >= 0, got {sigma}")));
        }
        if d >= n as f64 {
            return Err(Error::Config(format!(
                "mean degree d = {d} is not achievable in a simple graph on n = {n} users"
            )));
        }
        Ok(Self { n, d, sigma })
    }

    /// The Facebook social graph summary used throughout the group-size analysis.
    pub fn facebook() -> Self {
        Self { n: 721_094_633, d: 191.416_1, sigma: 190.426_3 }
    }

    /// Total degree `n * d` (twice the expected edge count).
    pub fn total_degree(&self) -> f64 {
        self.n as f64 * self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    EmpiricalHistogram,
    ParametricFit,
}

/// Probability mass over nonnegative integer degrees, sorted by degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    support: Vec<(u32, f64)>,
    provenance: Provenance,
}

const NORMALIZATION_TOL: f64 = 1e-9;

impl DegreeDistribution {
    /// Builds a law from `(degree, mass)` pairs. Masses are renormalized if
    /// they sum to 1 within tolerance; duplicate degrees are merged.
    pub fn from_masses(mut support: Vec<(u32, f64)>, provenance: Provenance) -> Result<Self> {
        if support.iter().any(|&(_, p)| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::Config("probability masses must be finite and nonnegative".into()));
        }
        support.sort_by_key(|&(k, _)| k);
        support.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 += later.1;
                true
            } else {
                false
            }
        });
        support.retain(|&(_, p)| p > 0.0);
        let total: f64 = support.iter().map(|&(_, p)| p).sum();
        if support.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Config(format!("probability masses sum to {total}, not 1")));
        }
        for entry in &mut support {
            entry.1 /= total;
        }
        Ok(Self { support, provenance })
    }

    pub fn point_mass(degree: u32) -> Self {
        Self { support: vec![(degree, 1.0)], provenance: Provenance::ParametricFit }
    }

    /// Law fitted to `profile` with a truncation window wide enough for its spread.
    pub fn matched(profile: &GraphProfile) -> Result<Self> {
        if profile.d == 0.0 || (profile.sigma == 0.0 && profile.d.fract() == 0.0) {
            return Ok(Self::point_mass(profile.d as u32));
        }
        let window = (profile.d + 40.0 * profile.sigma).max(2.0 * profile.d + 10.0).ceil();
        let max_degree = window.min((profile.n - 1) as f64).max(profile.d.ceil() + 1.0) as u32;
        fit_matched_lognormal(profile, max_degree)
    }

    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn total_mass(&self) -> f64 {
        self.support.iter().map(|&(_, p)| p).sum()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.support
            .iter()
            .map(|&(k, p)| {
                let dev = k as f64 - mean;
                dev * dev * p
            })
            .sum()
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn mass_at(&self, degree: u32) -> f64 {
        self.support
            .binary_search_by_key(&degree, |&(k, _)| k)
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    pub fn profile(&self, n: u64) -> Result<GraphProfile> {
        GraphProfile::new(n, self.mean(), self.std())
    }

    pub fn sampler(&self) -> DegreeSampler {
        let mut acc = 0.0;
        let cdf = self
            .support
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();
        DegreeSampler { degrees: self.support.iter().map(|&(k, _)| k).collect(), cdf }
    }
}

/// Inverse-CDF sampler over a [`DegreeDistribution`].
#[derive(Debug, Clone)]
pub struct DegreeSampler {
    degrees: Vec<u32>,
    cdf: Vec<f64>,
}

impl DegreeSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let total = *self.cdf.last().expect("nonempty support");
        let u: f64 = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.degrees.len() - 1);
        self.degrees[idx]
    }
}

/// Reads a two-column `degree,count` CSV. A non-numeric first row is taken as
/// a header.
pub fn load_histogram(path: impl AsRef<Path>) -> Result<DegreeDistribution> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_histogram(file, path)
}

pub fn parse_histogram<R: Read>(reader: R, label: &Path) -> Result<DegreeDistribution> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let parse_err = |line: u64, message: String| Error::Parse { path: label.to_path_buf(), line, message };

    let mut counts: Vec<(u32, f64)> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(idx as u64 + 1);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 columns, found {}", record.len())));
        }
        let degree = record[0].parse::<u32>();
        let count = record[1].parse::<f64>();
        match (degree, count) {
            (Ok(k), Ok(c)) if c.is_finite() && c >= 0.0 => counts.push((k, c)),
            (Ok(_), Ok(c)) => {
                return Err(parse_err(line, format!("count must be a nonnegative number, got {c}")))
            }
            _ if counts.is_empty() && idx == 0 => continue,
            _ => {
                return Err(parse_err(
                    line,
                    format!("row `{},{}` is not a (degree, count) pair", &record[0], &record[1]),
                ))
            }
        }
    }

    let total: f64 = counts.iter().map(|&(_, c)| c).sum();
    if total <= 0.0 {
        return Err(Error::EmptyDistribution);
    }
    let masses = counts.into_iter().map(|(k, c)| (k, c / total)).collect();
    DegreeDistribution::from_masses(masses, Provenance::EmpiricalHistogram)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Discretized lognormal on `0..=max_degree`: degree `k` gets the continuous
/// mass of `(k - 1/2, k + 1/2]`, renormalized after truncation.
struct DiscreteLognormal {
    max_degree: u32,
    // ln(k + 1/2) for k in 0..=max_degree
    log_edges: Vec<f64>,
}

impl DiscreteLognormal {
    fn new(max_degree: u32) -> Self {
        let log_edges = (0..=max_degree).map(|k| (k as f64 + 0.5).ln()).collect();
        Self { max_degree, log_edges }
    }

    fn cdf_at_edge(&self, k: i64, mu: f64, s: f64) -> f64 {
        // CDF at k + 1/2
        if k < 0 {
            0.0
        } else {
            normal_cdf((self.log_edges[k as usize] - mu) / s)
        }
    }

    /// Degrees with non-negligible mass.
    fn window(&self, mu: f64, s: f64) -> (u32, u32) {
        let lo = (mu - 12.0 * s).exp().floor().max(0.0);
        let hi = (mu + 12.0 * s).exp().ceil();
        let max = self.max_degree as f64;
        (lo.min(max) as u32, hi.min(max) as u32)
    }

    fn masses(&self, mu: f64, s: f64) -> impl Iterator<Item = (u32, f64)> + '_ {
        let (lo, hi) = self.window(mu, s);
        let below = self.cdf_at_edge(lo as i64 - 1, mu, s);
        let norm = self.cdf_at_edge(hi as i64, mu, s) - below;
        let mut prev = below;
        (lo..=hi).map(move |k| {
            let c = self.cdf_at_edge(k as i64, mu, s);
            let p = (c - prev) / norm;
            prev = c;
            (k, p)
        })
    }

    fn moments(&self, mu: f64, s: f64) -> (f64, f64) {
        let (mut m1, mut m2) = (0.0, 0.0);
        for (k, p) in self.masses(mu, s) {
            let k = k as f64;
            m1 += k * p;
            m2 += k * k * p;
        }
        (m1, (m2 - m1 * m1).max(0.0).sqrt())
    }

    /// Location parameter giving mean `target` at shape `s`.
    fn solve_location(&self, s: f64, target: f64) -> f64 {
        let mut lo = -10.0;
        let mut hi = (self.max_degree as f64 + 1.0).ln() + 12.0 * s + 1.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.moments(mid, s).0 < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Fits a discretized lognormal truncated at `max_degree` whose mean and std
/// match the profile to within 0.5%.
pub fn fit_matched_lognormal(profile: &GraphProfile, max_degree: u32) -> Result<DegreeDistribution> {
    let (d, sigma) = (profile.d, profile.sigma);
    if !(d > 0.0 && sigma > 0.0) {
        return Err(Error::Config(format!(
            "lognormal fit needs d > 0 and sigma > 0, got d = {d}, sigma = {sigma}"
        )));
    }
    if (max_degree as f64) <= d {
        return Err(Error::Config(format!("max_degree {max_degree} must exceed the mean degree {d}")));
    }

    let law = DiscreteLognormal::new(max_degree);
    let std_at = |log_s: f64| {
        let s = log_s.exp();
        let mu = law.solve_location(s, d);
        law.moments(mu, s).1
    };

    let (mut lo, mut hi) = (1e-4f64.ln(), 6.0f64.ln());
    let (std_lo, std_hi) = (std_at(lo), std_at(hi));
    if std_hi < sigma * (1.0 - 0.005) {
        return Err(Error::FitFailure(format!(
            "sigma = {sigma} exceeds the largest std ({std_hi:.4}) reachable below max_degree = {max_degree}"
        )));
    }
    if std_lo > sigma * (1.0 + 0.005) {
        return Err(Error::FitFailure(format!(
            "sigma = {sigma} is below the smallest std ({std_lo:.4}) of an integer law with mean {d}"
        )));
    }
    for _ in 0..70 {
        let mid = 0.5 * (lo + hi);
        if std_at(mid) < sigma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = (0.5 * (lo + hi)).exp();
    let mu = law.solve_location(s, d);
    let masses: Vec<(u32, f64)> = law.masses(mu, s).collect();
    let total: f64 = masses.iter().map(|&(_, p)| p).sum();
    let dist = DegreeDistribution::from_masses(
        masses.into_iter().map(|(k, p)| (k, p / total)).collect(),
        Provenance::ParametricFit,
    )?;

    let (mean, std) = (dist.mean(), dist.std());
    if (mean - d).abs() / d > 0.005 || (std - sigma).abs() / sigma > 0.005 {
        return Err(Error::FitFailure(format!(
            "moment correction reached mean {mean:.4}, std {std:.4} for target ({d}, {sigma})"
        )));
    }
    Ok(dist)
}

/// Draws `n` independent degrees. An odd total is repaired by incrementing
/// the last entry so the sequence is graphical as a multigraph.
pub fn sample_degree_sequence(dist: &DegreeDistribution, n: usize, seed: u64) -> Vec<u32> {
    assert!(n >= 1, "degree sequence needs n >= 1");
    let sampler = dist.sampler();
    let mut rng = rng_from_seed(seed);
    let mut degrees: Vec<u32> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
    let total: u64 = degrees.iter().map(|&k| k as u64).sum();
    if total % 2 == 1 {
        *degrees.last_mut().unwrap() += 1;
    }
    degrees
}
