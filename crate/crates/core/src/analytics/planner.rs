//! Choosing the number of groups `m` for each design.
//!
//! Every planner inverts a monotone map of `m` by integer bisection. The
//! light design wants the *smallest* `m` at which a second edge between a
//! connected pair is unlikely; the stream and hybrid designs want the
//! *largest* `m` at which at least `l` edges join a pair with the requested
//! confidence.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::poisson::{poisson_lambda, prob_at_least};
use crate::degree::GraphProfile;
use crate::error::{Error, Result};
use crate::projection::anonymity_k;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Light,
    Hybrid,
    Stream,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Light => "light",
            Regime::Hybrid => "hybrid",
            Regime::Stream => "stream",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPlan {
    pub regime: Regime,
    pub m: u32,
    /// Expected edges between two groups, `n d / m^2`.
    pub lambda: f64,
    /// Target disconnect probability; `1 - epsilon` is the connection
    /// probability the plan was solved for.
    pub epsilon: f64,
    /// Minimum stream size; absent for the light design.
    pub l: Option<u64>,
    pub k: u64,
    pub expected_group_size: f64,
    pub profile: GraphProfile,
}

impl DesignPlan {
    fn build(regime: Regime, m: u32, epsilon: f64, l: Option<u64>, profile: &GraphProfile) -> Self {
        Self {
            regime,
            m,
            lambda: poisson_lambda(profile, m),
            epsilon,
            l,
            k: anonymity_k(profile.n, m),
            expected_group_size: profile.n as f64 / m as f64,
            profile: *profile,
        }
    }

    /// Connection probability targeted by the plan.
    pub fn target_connection(&self) -> f64 {
        1.0 - self.epsilon
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie strictly between 0 and 1, got {p}")))
    }
}

fn check_edges(profile: &GraphProfile) -> Result<()> {
    if profile.d > 0.0 {
        Ok(())
    } else {
        Err(Error::Infeasible("mean degree d must be positive; an edgeless graph has no streams to size".into()))
    }
}

/// Smallest `m` in `[1, 2^32)` with `holds(m)`, for `holds` monotone false→true.
fn first_true(holds: impl Fn(u64) -> bool) -> Option<u64> {
    if holds(1) {
        return Some(1);
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while !holds(hi) {
        lo = hi;
        hi *= 2;
        if hi > u32::MAX as u64 {
            return None;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn lambda_at(profile: &GraphProfile, m: u64) -> f64 {
    profile.total_degree() / (m as f64 * m as f64)
}

/// Light design: the smallest `m` at which a connected pair of groups carries
/// a second edge with probability at most `uniqueness_failure`.
pub fn plan_light(profile: &GraphProfile, uniqueness_failure: f64) -> Result<DesignPlan> {
    check_probability("uniqueness failure", uniqueness_failure)?;
    check_edges(profile)?;
    let m = first_true(|m| prob_at_least(1, lambda_at(profile, m)) <= uniqueness_failure)
        .ok_or_else(|| Error::Infeasible("no representable group count reaches the uniqueness target".into()))?;
    if m > profile.n {
        return Err(Error::Infeasible(format!(
            "light design needs m = {m} groups but only n = {} users exist",
            profile.n
        )));
    }
    Ok(DesignPlan::build(Regime::Light, m as u32, 1.0 - uniqueness_failure, None, profile))
}

/// Stream design (hybrid when `l = 1`): the largest `m` with
/// `P[Poisson(n d / m^2) >= l] >= confidence`.
pub fn plan_stream(profile: &GraphProfile, l: u64, confidence: f64) -> Result<DesignPlan> {
    if l == 0 {
        return Err(Error::Config("minimum stream size l must be at least 1".into()));
    }
    check_probability("confidence", confidence)?;
    check_edges(profile)?;
    let reaches = |m: u64| prob_at_least(l, lambda_at(profile, m)) >= confidence;
    if !reaches(1) {
        return Err(Error::Infeasible(format!(
            "P[stream >= {l}] = {:.6} even with a single group, below confidence {confidence}",
            prob_at_least(l, profile.total_degree())
        )));
    }
    let first_fail = first_true(|m| !reaches(m))
        .ok_or_else(|| Error::Infeasible("confidence holds for every representable m".into()))?;
    let m = (first_fail - 1).min(profile.n);
    let regime = if l == 1 { Regime::Hybrid } else { Regime::Stream };
    Ok(DesignPlan::build(regime, m as u32, 1.0 - confidence, Some(l), profile))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub confidence: f64,
    pub m: u32,
    /// Whole users per group, `floor(n / m)`.
    pub group_size: u64,
    pub lambda: f64,
}

pub const TABLE1_CONFIDENCES: [f64; 9] = [0.999, 0.995, 0.99, 0.9, 0.8, 0.75, 0.2, 0.1, 0.01];

/// One hybrid plan per connection confidence.
pub fn table1(profile: &GraphProfile, confidences: &[f64]) -> Result<Vec<Table1Row>> {
    if confidences.is_empty() {
        return Err(Error::Config("at least one confidence is required".into()));
    }
    confidences
        .iter()
        .map(|&c| {
            let plan = plan_stream(profile, 1, c)?;
            Ok(Table1Row { confidence: c, m: plan.m, group_size: profile.n / plan.m as u64, lambda: plan.lambda })
        })
        .collect()
}

pub fn write_table1_csv<W: Write>(rows: &[Table1Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["confidence", "m", "group_size", "lambda"])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replan {
    pub plan: DesignPlan,
    /// New `m` over old `m`.
    pub growth_factor: f64,
}

/// Re-solves `plan` for a grown population, keeping regime, `l` and target.
pub fn replan_for_growth(plan: &DesignPlan, new_profile: &GraphProfile) -> Result<Replan> {
    if new_profile.n < plan.profile.n {
        return Err(Error::Config(format!(
            "replanning expects a growing population, got n = {} after {}",
            new_profile.n, plan.profile.n
        )));
    }
    let next = match plan.regime {
        Regime::Light => plan_light(new_profile, plan.target_connection())?,
        Regime::Hybrid | Regime::Stream => {
            plan_stream(new_profile, plan.l.unwrap_or(1), plan.target_connection())?
        }
    };
    Ok(Replan { growth_factor: next.m as f64 / plan.m as f64, plan: next })
}
