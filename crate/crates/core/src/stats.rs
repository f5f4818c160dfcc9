use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

/// Two-sided Clopper-Pearson interval for `successes` out of `trials`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn clopper_pearson(successes: usize, trials: usize, confidence: f64) -> Proportion {
    assert!(successes <= trials, "successes exceed trials");
    if trials == 0 {
        return Proportion { successes, trials, p_hat: f64::NAN, lo: 0.0, hi: 1.0 };
    }
    let alpha = 1.0 - confidence;
    let (x, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 { 0.0 } else { inv_beta_reg(x, n - x + 1.0, alpha / 2.0) };
    let hi = if successes == trials { 1.0 } else { inv_beta_reg(x + 1.0, n - x, 1.0 - alpha / 2.0) };
    Proportion { successes, trials, p_hat: x / n, lo, hi }
}

pub fn clopper_pearson_95(successes: usize, trials: usize) -> Proportion {
    clopper_pearson(successes, trials, 0.95)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_intervals() {
        // 0 of 10: upper = 1 - 0.025^(1/10)
        let p = clopper_pearson_95(0, 10);
        assert_eq!(p.lo, 0.0);
        assert!((p.hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
        let p = clopper_pearson_95(10, 10);
        assert!((p.lo - 0.025f64.powf(0.1)).abs() < 1e-9);
        assert_eq!(p.hi, 1.0);
        // 5 of 10: (0.187086, 0.812914)
        let p = clopper_pearson_95(5, 10);
        assert!((p.lo - 0.187_086).abs() < 1e-5);
        assert!((p.hi - 0.812_914).abs() < 1e-5);
    }

    #[test]
    fn interval_brackets_estimate() {
        for n in [1usize, 7, 50, 400] {
            for x in 0..=n {
                let p = clopper_pearson_95(x, n);
                assert!(p.lo <= p.p_hat && p.p_hat <= p.hi);
            }
        }
    }
}
