use crate::degree::GraphProfile;

/// Expected number of edges between two distinct groups, `n d / m^2`.
pub fn poisson_lambda(profile: &GraphProfile, m: u32) -> f64 {
    profile.total_degree() / (m as f64 * m as f64)
}

pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln = k as f64 * lambda.ln() - lambda - libm::lgamma(k as f64 + 1.0);
    ln.exp()
}

/// `P[Poisson(lambda) >= l]`.
pub fn prob_at_least(l: u64, lambda: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => -(-lambda).exp_m1(),
        _ => {
            let mut term = (-lambda).exp();
            let mut below = term;
            for i in 1..l {
                term *= lambda / i as f64;
                below += term;
            }
            (1.0 - below).max(0.0)
        }
    }
}

/// Mean stream size conditioned on the pair being connected, `lambda / (1 - e^-lambda)`.
pub fn conditional_stream_mean(lambda: f64) -> f64 {
    if lambda == 0.0 {
        1.0
    } else {
        lambda / -(-lambda).exp_m1()
    }
}

/// Smallest `lambda` with `P[Poisson(lambda) >= l] >= confidence`.
pub fn lambda_for_confidence(l: u64, confidence: f64) -> f64 {
    if l == 1 {
        return -(-confidence).ln_1p();
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while prob_at_least(l, hi) < confidence {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if prob_at_least(l, mid) >= confidence {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_examples() {
        let fb = GraphProfile::facebook();
        assert!((poisson_lambda(&fb, 786_490) - 0.2231).abs() < 1e-4);
        let flat = GraphProfile::new(1000, 0.0, 0.0).unwrap();
        assert_eq!(poisson_lambda(&flat, 10), 0.0);
        let small = GraphProfile::new(1000, 4.0, 1.0).unwrap();
        assert!((poisson_lambda(&small, 50) - 1.6).abs() < 1e-12);
    }

    #[test]
    fn tail_examples() {
        assert!((prob_at_least(1, 4.6052) - 0.99).abs() < 1e-5);
        assert_eq!(prob_at_least(1, 0.0), 0.0);
        assert!((prob_at_least(3, 2.0) - (1.0 - 5.0 * (-2.0f64).exp())).abs() < 1e-12);
        assert!((prob_at_least(3, 2.0) - 0.3233).abs() < 1e-4);
        assert_eq!(prob_at_least(0, 3.0), 1.0);
    }

    #[test]
    fn tail_matches_pmf_sum() {
        for &lambda in &[0.1, 1.0, 4.6, 12.0] {
            for l in 0..8u64 {
                let below: f64 = (0..l).map(|k| poisson_pmf(k, lambda)).sum();
                assert!((prob_at_least(l, lambda) - (1.0 - below)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_tail() {
        assert!((lambda_for_confidence(1, 0.99) - 4.605_170_185_988_091).abs() < 1e-12);
        let l2 = lambda_for_confidence(2, 0.99);
        assert!((1.0 - (-l2).exp() * (1.0 + l2) - 0.99).abs() < 1e-12);
    }

    #[test]
    fn conditional_mean() {
        assert!((conditional_stream_mean(4.6052) - 4.6052 / 0.99).abs() < 1e-4);
        assert_eq!(conditional_stream_mean(0.0), 1.0);
    }
}
