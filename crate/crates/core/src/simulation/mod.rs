//! Monte Carlo counterparts of the analytic model.

pub mod adversary;
pub mod connectivity;
pub mod privacy;
pub mod strategies;
pub mod workload;

use serde::{Deserialize, Serialize};

pub use adversary::{export_adversary_log, AdversaryLog, AdversaryRecord};
pub use connectivity::{
    sample_streams, simulate_connection_prob, simulate_stream_histogram, total_variation_to_poisson, SamplingMethod,
    StreamSample, EXPLICIT_STUB_CAP,
};
pub use privacy::estimate_edge_privacy;
pub use strategies::{
    poll_count_cdf, strategy_bulk_download, strategy_dynamic_rendezvous, strategy_random_poll, Envelope, PollOutcome,
    RendezvousOutcome, ResourceTally,
};
pub use workload::{run_workload, Population, SimReport, Strategy, WorkloadConfig};

/// A Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Frequency of `hits` among `trials` with the binomial standard error.
    pub fn binomial(hits: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self { value: f64::NAN, std_error: f64::NAN };
        }
        let p = hits as f64 / trials as f64;
        Self { value: p, std_error: (p * (1.0 - p) / trials as f64).sqrt() }
    }

    /// Mean of per-replication values with the standard error of that mean.
    /// Returns `None` for an empty slice; a single value has zero error.
    pub fn from_replications(values: &[f64]) -> Option<Self> {
        let r = values.len();
        if r == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / r as f64;
        if r == 1 {
            return Some(Self { value: mean, std_error: 0.0 });
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
        Some(Self { value: mean, std_error: (var / r as f64).sqrt() })
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_estimate() {
        let e = Estimate::binomial(25, 100);
        assert_eq!(e.value, 0.25);
        assert!((e.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert!(Estimate::binomial(0, 0).value.is_nan());
    }

    #[test]
    fn replication_estimate() {
        assert!(Estimate::from_replications(&[]).is_none());
        assert_eq!(Estimate::from_replications(&[0.5]).unwrap().std_error, 0.0);
        let e = Estimate::from_replications(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.value, 2.0);
        assert!((e.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(e.within(2.5, 1.0));
        assert!(!e.within(3.5, 2.0));
    }
}
