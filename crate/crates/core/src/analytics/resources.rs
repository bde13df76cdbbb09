//! Approximate per-user resource use of each retrieval scheme.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::planner::{DesignPlan, Regime};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalScheme {
    Light,
    Stream,
    Hybrid,
    BulkDownload,
}

impl From<Regime> for RetrievalScheme {
    fn from(r: Regime) -> Self {
        match r {
            Regime::Light => RetrievalScheme::Light,
            Regime::Stream => RetrievalScheme::Stream,
            Regime::Hybrid => RetrievalScheme::Hybrid,
        }
    }
}

impl std::fmt::Display for RetrievalScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RetrievalScheme::Light => "light",
            RetrievalScheme::Stream => "stream",
            RetrievalScheme::Hybrid => "hybrid",
            RetrievalScheme::BulkDownload => "bulk_download",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub bandwidth_ratio: f64,
    pub computation_ratio: f64,
    pub expected_connections: f64,
}

/// `H_n = 1 + 1/2 + ... + 1/n`.
pub fn harmonic(n: u64) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// Expected number of uniform polls needed to visit all `d_b` friend groups.
pub fn coupon_collector_expectation(d_b: u64) -> f64 {
    d_b as f64 * harmonic(d_b)
}

/// The plan's own scheme and bulk download, keyed by scheme.
///
/// `phi` is the header size relative to a full message, `d_b` the number of
/// distinct groups holding a friend, and `group_size` the receiver's group
/// population used for bulk download.
pub fn resource_table(
    plan: &DesignPlan,
    phi: f64,
    d_b: u64,
    group_size: u64,
) -> Result<BTreeMap<RetrievalScheme, ResourceEstimate>> {
    if !(0.0..1.0).contains(&phi) {
        return Err(Error::Config(format!("header ratio phi must lie in [0, 1), got {phi}")));
    }
    if d_b == 0 {
        return Err(Error::Config("d_B must be at least 1".into()));
    }
    let polls = coupon_collector_expectation(d_b);
    let mu = plan.lambda;
    let scheme = RetrievalScheme::from(plan.regime);
    let own = match plan.regime {
        Regime::Light => ResourceEstimate { bandwidth_ratio: 1.0, computation_ratio: 1.0, expected_connections: polls },
        Regime::Hybrid | Regime::Stream => ResourceEstimate {
            bandwidth_ratio: mu * (1.0 + phi),
            computation_ratio: 1.0 + phi * mu,
            expected_connections: polls,
        },
    };
    let bulk = ResourceEstimate {
        bandwidth_ratio: group_size as f64 * (1.0 + phi),
        computation_ratio: own.computation_ratio,
        expected_connections: 1.0,
    };
    Ok(BTreeMap::from([(scheme, own), (RetrievalScheme::BulkDownload, bulk)]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceRow {
    pub strategy: RetrievalScheme,
    pub bandwidth: f64,
    pub computation: f64,
    pub connections: f64,
}

pub fn resource_rows(table: &BTreeMap<RetrievalScheme, ResourceEstimate>) -> Vec<ResourceRow> {
    table
        .iter()
        .map(|(&strategy, e)| ResourceRow {
            strategy,
            bandwidth: e.bandwidth_ratio,
            computation: e.computation_ratio,
            connections: e.expected_connections,
        })
        .collect()
}

pub fn write_resource_csv<W: Write>(rows: &[ResourceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["strategy", "bandwidth", "computation", "connections"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::planner::{plan_light, plan_stream};
    use crate::degree::GraphProfile;
    use proptest::prelude::*;

    fn hybrid_with_lambda(lambda: f64) -> DesignPlan {
        let mut plan = plan_stream(&GraphProfile::facebook(), 1, 0.99).unwrap();
        plan.lambda = lambda;
        plan
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(1), 1.0);
        assert_eq!(coupon_collector_expectation(2), 3.0);
        assert!((coupon_collector_expectation(10) - 29.289_682_539_682_54).abs() < 1e-12);
    }

    #[test]
    fn light_single_friend_group() {
        let plan = plan_light(&GraphProfile::facebook(), 0.2).unwrap();
        for &phi in &[0.0, 0.05, 0.5] {
            let t = resource_table(&plan, phi, 1, 916).unwrap();
            let e = t[&RetrievalScheme::Light];
            assert_eq!((e.bandwidth_ratio, e.computation_ratio, e.expected_connections), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn hybrid_and_bulk_examples() {
        let t = resource_table(&hybrid_with_lambda(4.6052), 0.05, 3, 916).unwrap();
        let h = t[&RetrievalScheme::Hybrid];
        assert!((h.bandwidth_ratio - 4.835_46).abs() < 1e-9);
        assert!((h.computation_ratio - 1.230_26).abs() < 1e-9);
        assert_eq!(h.expected_connections, 5.5);
        let bd = t[&RetrievalScheme::BulkDownload];
        assert!((bd.bandwidth_ratio - 961.8).abs() < 1e-9);
        assert_eq!(bd.expected_connections, 1.0);
        assert_eq!(bd.computation_ratio, h.computation_ratio);
    }

    #[test]
    fn rejects_bad_parameters() {
        let plan = hybrid_with_lambda(1.0);
        assert!(resource_table(&plan, 1.0, 1, 10).is_err());
        assert!(resource_table(&plan, -0.1, 1, 10).is_err());
        assert!(resource_table(&plan, 0.1, 0, 10).is_err());
    }

    #[test]
    fn csv_columns() {
        let t = resource_table(&hybrid_with_lambda(2.0), 0.1, 2, 100).unwrap();
        let mut buf = Vec::new();
        write_resource_csv(&resource_rows(&t), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("strategy,bandwidth,computation,connections"));
        assert!(lines.next().unwrap().starts_with("hybrid,"));
        assert!(lines.next().unwrap().starts_with("bulk_download,1"));
    }

    fn rel_eq(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1e-300)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn formulas_hold(mu in 0.01f64..20.0, phi in 0.0f64..0.99, v_b in 1u64..100_000) {
            let t = resource_table(&hybrid_with_lambda(mu), phi, 4, v_b).unwrap();
            let h = t[&RetrievalScheme::Hybrid];
            prop_assert!(rel_eq(h.bandwidth_ratio, mu * (1.0 + phi)));
            prop_assert!(rel_eq(h.computation_ratio, 1.0 + phi * mu));
            prop_assert!(rel_eq(h.expected_connections, 4.0 * (1.0 + 0.5 + 1.0 / 3.0 + 0.25)));
            let bd = t[&RetrievalScheme::BulkDownload];
            prop_assert!(rel_eq(bd.bandwidth_ratio, v_b as f64 * (1.0 + phi)));
            prop_assert!(rel_eq(bd.computation_ratio, 1.0 + phi * mu));
        }
    }
}
