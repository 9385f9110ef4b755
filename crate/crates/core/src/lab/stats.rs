use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Outcome of a batch of games.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinStats {
    pub trials: u64,
    pub wins: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl WinStats {
    pub fn new(wins: u64, trials: u64, seed: u64) -> Self {
        assert!(trials >= 1 && wins <= trials, "{wins} wins out of {trials}");
        let estimate = wins as f64 / trials as f64;
        let (low, high) = wilson_interval(wins, trials);
        Self {
            trials,
            wins,
            estimate,
            ci_low: low.min(estimate),
            ci_high: high.max(estimate),
            seed,
        }
    }

    /// Binomial standard error of the estimate if the true rate is `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// `|estimate − p| ≤ k σ(p)`. A rate of exactly 0 or 1 must be hit exactly.
    pub fn within_sigmas(&self, p: f64, k: f64) -> bool {
        (self.estimate - p).abs() <= k * self.sigma_at(p)
    }

    /// Distance from `p` in units of `σ(p)`.
    pub fn z_score(&self, p: f64) -> f64 {
        let sigma = self.sigma_at(p);
        if sigma == 0.0 {
            if self.estimate == p {
                0.0
            } else {
                (self.estimate - p).signum() * f64::INFINITY
            }
        } else {
            (self.estimate - p) / sigma
        }
    }
}

/// 95% Wilson score interval, clamped to `[0, 1]`.
pub fn wilson_interval(wins: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = wins as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_brackets_estimate() {
        for (w, n) in [(0, 10), (10, 10), (3, 10), (666_667, 1_000_000), (1, 1)] {
            let s = WinStats::new(w, n, 0);
            assert!(0.0 <= s.ci_low && s.ci_low <= s.estimate);
            assert!(s.estimate <= s.ci_high && s.ci_high <= 1.0);
        }
    }

    #[test]
    fn known_wilson_values() {
        let (lo, hi) = wilson_interval(5, 10);
        assert!((lo - 0.236593090512564).abs() < 1e-12);
        assert!((hi - 0.763406909487436).abs() < 1e-12);
        let all = WinStats::new(10, 10, 0);
        assert!((all.ci_low - 0.7224672001371107).abs() < 1e-12);
        assert_eq!(all.ci_high, 1.0);
    }

    #[test]
    fn sigma_checks() {
        let s = WinStats::new(6667, 10_000, 1);
        assert!(s.within_sigmas(2.0 / 3.0, 4.0));
        assert!(!s.within_sigmas(0.5, 4.0));
        let perfect = WinStats::new(100, 100, 1);
        assert!(perfect.within_sigmas(1.0, 4.0));
        assert_eq!(WinStats::new(99, 100, 1).z_score(1.0), f64::NEG_INFINITY);
    }
}
