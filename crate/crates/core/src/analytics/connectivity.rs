//! Probability that two uniformly chosen groups share no friendship edge.
//!
//! A group's size is approximately normal with mean and variance `n/m`; given
//! `j` members its degree sum is approximately normal with mean `j d` and
//! variance `j sigma^2`. Each of the `x` edge ends leaving the group misses a
//! fixed other group with probability `1 - 1/m`, so
//!
//! ```text
//! P[disconnected] = ∫∫ (1 - 1/m)^x  N(j; n/m, sqrt(n/m))  N(x; j d, sqrt(j) sigma)  dx dj
//! ```
//!
//! over the positive quadrant. [`disconnect_prob_integral`] evaluates this by
//! nested adaptive quadrature; [`disconnect_prob_mgf`] integrates the
//! exponential kernel against both normals in closed form and serves as an
//! independent check.

use serde::{Deserialize, Serialize};

use super::poisson::{poisson_lambda, prob_at_least};
use super::quadrature::integrate;
use crate::degree::GraphProfile;
use crate::error::{Error, Result};

/// Half-width of both integration windows, in standard deviations.
const WINDOW_SIGMAS: f64 = 8.0;
const OUTER_TOL: f64 = 1e-9;
const INNER_TOL: f64 = 1e-11;
const MAX_SEGMENTS: usize = 400;
/// Group sizes below this make the normal approximations unreliable.
pub const MIN_RELIABLE_GROUP_SIZE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisconnectEstimate {
    pub m: u32,
    pub probability: f64,
    /// Bound on the absolute quadrature error.
    pub error: f64,
    pub closed_form: f64,
    pub small_groups: bool,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_87;

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    INV_SQRT_2PI / sd * (-0.5 * z * z).exp()
}

pub fn disconnect_prob_integral(profile: &GraphProfile, m: u32) -> Result<DisconnectEstimate> {
    if m < 2 {
        return Err(Error::Config(format!("disconnect probability needs m >= 2, got {m}")));
    }
    let size_mean = profile.n as f64 / m as f64;
    let size_sd = size_mean.sqrt();
    let small_groups = size_mean < MIN_RELIABLE_GROUP_SIZE;
    if small_groups {
        log::warn!("mean group size n/m = {size_mean:.1} is below {MIN_RELIABLE_GROUP_SIZE}; normal approximations are loose");
    }
    // ln(1 - 1/m)
    let log_miss = (-1.0 / m as f64).ln_1p();
    let (d, sigma) = (profile.d, profile.sigma);

    let mut inner_error = 0.0f64;
    let mut inner_failure: Option<Error> = None;
    let mut inner = |j: f64| -> f64 {
        let mean = j * d;
        let sd = j.sqrt() * sigma;
        if sd <= mean * 1e-12 || sd == 0.0 {
            return (mean * log_miss).exp();
        }
        let lo = (mean - WINDOW_SIGMAS * sd).max(0.0);
        let hi = mean + WINDOW_SIGMAS * sd;
        match integrate(|x| (x * log_miss).exp() * normal_pdf(x, mean, sd), lo, hi, INNER_TOL, MAX_SEGMENTS) {
            Ok(r) => {
                inner_error = inner_error.max(r.error);
                r.value
            }
            Err(e) => {
                inner_failure.get_or_insert(e);
                f64::NAN
            }
        }
    };

    let lo = (size_mean - WINDOW_SIGMAS * size_sd).max(0.0);
    let hi = size_mean + WINDOW_SIGMAS * size_sd;
    let outer = integrate(|j| inner(j) * normal_pdf(j, size_mean, size_sd), lo, hi, OUTER_TOL, MAX_SEGMENTS);
    if let Some(e) = inner_failure {
        return Err(e);
    }
    let outer = outer?;
    let error = outer.error + inner_error;
    if !outer.value.is_finite() || error > 1e-6 {
        return Err(Error::Quadrature { achieved: error, requested: 1e-6 });
    }
    Ok(DisconnectEstimate {
        m,
        probability: outer.value.clamp(0.0, 1.0),
        error,
        closed_form: disconnect_prob_mgf(profile, m),
        small_groups,
    })
}

/// Closed form of the same double integral taken over the whole plane:
/// with `a = -ln(1 - 1/m)` and `c = a d - a^2 sigma^2 / 2`,
/// `P = exp(-(n/m) c + (n/m) c^2 / 2)`.
///
/// Only meaningful while the normals put negligible mass below zero, which
/// holds for the group sizes of interest but not for very small `m`.
pub fn disconnect_prob_mgf(profile: &GraphProfile, m: u32) -> f64 {
    let a = -(-1.0 / m as f64).ln_1p();
    let c = a * profile.d - 0.5 * a * a * profile.sigma * profile.sigma;
    let size_mean = profile.n as f64 / m as f64;
    (-size_mean * c + 0.5 * size_mean * c * c).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: u32,
    pub connected: f64,
}

/// `1 - P[disconnected]` for each `m` of the grid.
pub fn connection_curve(profile: &GraphProfile, m_grid: &[u32]) -> Result<Vec<CurvePoint>> {
    if m_grid.is_empty() {
        return Err(Error::Config("connection curve needs at least one m".into()));
    }
    m_grid
        .iter()
        .map(|&m| {
            disconnect_prob_integral(profile, m).map(|e| CurvePoint { m, connected: 1.0 - e.probability })
        })
        .collect()
}

/// `points` values of `m` spaced evenly in log scale over `[m_min, m_max]`,
/// deduplicated after rounding.
pub fn log_spaced_grid(m_min: u32, m_max: u32, points: usize) -> Vec<u32> {
    if points <= 1 || m_min >= m_max {
        return vec![m_min];
    }
    let (lo, hi) = ((m_min as f64).ln(), (m_max as f64).ln());
    let mut grid: Vec<u32> = (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp().round() as u32)
        .collect();
    grid.dedup();
    grid
}

/// Probability that the pair of groups stays connected once Alice's edges are
/// removed. One edge out of `n d / 2` does not move the pair-connection law,
/// so this is the connection probability `1 - e^-lambda`.
pub fn edge_privacy_closed_form(profile: &GraphProfile, m: u32) -> Result<f64> {
    if m < 2 {
        return Err(Error::Config(format!("edge privacy needs m >= 2, got {m}")));
    }
    Ok(prob_at_least(1, poisson_lambda(profile, m)))
}
