use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meter::{MeterConfig, ZERO_STRENGTH_TOL};
use crate::weakval::{ArmLabel, ArmPair};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    /// First-order Poisson standard error; 0 for exact evaluations.
    pub stderr: f64,
    /// Coincidences per basis behind the estimate, when sampled.
    pub counts: Option<[u64; 4]>,
}

impl EstimateWithError {
    pub fn exact(value: f64) -> Self {
        EstimateWithError { value, stderr: 0.0, counts: None }
    }

    /// `|value − target| / stderr`; infinite for a zero error and a miss.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn meter(strength: f64) -> Result<(f64, f64)> {
    if strength <= ZERO_STRENGTH_TOL {
        return Err(Error::ZeroStrength(strength));
    }
    let cfg = MeterConfig::from_strength(strength)?;
    Ok((cfg.strength(), cfg.epsilon() * cfg.epsilon()))
}

/// `Σ_b w_b R̂_b` with `R̂_b = (n_b/T − ε²)/s`, `T = Σ n`, and its standard error
/// from `∂/∂n_c = (w_c T − Σ_b w_b n_b) / (T² s)` with `Var n_c = n_c`.
pub fn weighted_readout(counts: &[u64; 4], strength: f64, weights: &[f64; 4]) -> Result<EstimateWithError> {
    let (s, e2) = meter(strength)?;
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::AllZeroCounts);
    }
    let t = total as f64;
    let n = counts.map(|c| c as f64);
    let wn: f64 = weights.iter().zip(&n).map(|(w, x)| w * x).sum();
    let wsum: f64 = weights.iter().sum();
    let value = (wn / t - e2 * wsum) / s;
    let var: f64 = (0..4)
        .map(|c| {
            let g = (weights[c] * t - wn) / (t * t * s);
            g * g * n[c]
        })
        .sum();
    Ok(EstimateWithError { value, stderr: var.sqrt(), counts: Some(*counts) })
}

/// Readout estimates indexed by the signal basis index `2k + l`.
pub fn estimate_readouts(counts: &[u64; 4], strength: f64) -> Result<[EstimateWithError; 4]> {
    let mut out = [EstimateWithError::exact(0.0); 4];
    for (b, o) in out.iter_mut().enumerate() {
        let mut w = [0.0; 4];
        w[b] = 1.0;
        *o = weighted_readout(counts, strength, &w)?;
    }
    Ok(out)
}

/// Single-arm readout `R(arm) = Σ R(k,l)` over the pairs containing `arm`.
pub fn estimate_marginal(counts: &[u64; 4], strength: f64, arm: ArmLabel) -> Result<EstimateWithError> {
    weighted_readout(counts, strength, &marginal_weights(arm))
}

pub fn marginal_weights(arm: ArmLabel) -> [f64; 4] {
    let mut w = [0.0; 4];
    for p in ArmPair::all() {
        let a = if arm.photon == 1 { p.first } else { p.second };
        if a == arm.arm {
            w[p.index()] = 1.0;
        }
    }
    w
}

/// Infinite-shot limit: exact conditional probabilities in, exact readouts out.
pub fn readouts_from_probabilities(probabilities: &[f64; 4], strength: f64) -> Result<[EstimateWithError; 4]> {
    let (s, e2) = meter(strength)?;
    let total: f64 = probabilities.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroCounts);
    }
    Ok(probabilities.map(|p| EstimateWithError::exact((p / total - e2) / s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meter::conditional_readout_closed_form;
    use crate::weakval::{hardy_postselection, hardy_preselection};
    use proptest::prelude::*;

    #[test]
    fn exact_probabilities_reproduce_closed_form() {
        let cfg = MeterConfig::from_strength(0.3).unwrap();
        let closed = conditional_readout_closed_form(&hardy_preselection(), &hardy_postselection(), &cfg).unwrap();
        let est = readouts_from_probabilities(&closed.probabilities, 0.3).unwrap();
        let r = closed.readouts.unwrap();
        for b in 0..4 {
            assert!((est[b].value - r[b]).abs() < 1e-14);
            assert_eq!(est[b].stderr, 0.0);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(estimate_readouts(&[0; 4], 0.3), Err(Error::AllZeroCounts)));
        assert!(matches!(estimate_readouts(&[1, 2, 3, 4], 0.0), Err(Error::ZeroStrength(_))));
    }

    #[test]
    fn error_matches_finite_difference() {
        let counts = [120u64, 400, 1500, 1480];
        let s = 0.3;
        let est = estimate_readouts(&counts, s).unwrap();
        for b in 0..4 {
            let mut var = 0.0;
            for c in 0..4 {
                let mut up = counts.map(|x| x as f64);
                let h = 1e-3;
                up[c] += h;
                let t: f64 = up.iter().sum();
                let e2 = (1.0 - s) / 4.0;
                let r_up = (up[b] / t - e2) / s;
                let r0 = est[b].value;
                var += ((r_up - r0) / h).powi(2) * counts[c] as f64;
            }
            assert!((var.sqrt() - est[b].stderr).abs() / est[b].stderr < 1e-3);
        }
    }

    #[test]
    fn marginal_is_sum_of_pairs() {
        let counts = [10u64, 20, 30, 40];
        let est = estimate_readouts(&counts, 0.5).unwrap();
        let o1 = estimate_marginal(&counts, 0.5, "O1".parse().unwrap()).unwrap();
        assert!((o1.value - est[2].value - est[3].value).abs() < 1e-14);
        assert_eq!(marginal_weights("NO2".parse().unwrap()), [1.0, 0.0, 1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn readouts_sum_to_one(
            counts in prop::array::uniform4(0u64..100_000),
            s in 0.001f64..=1.0,
        ) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let est = estimate_readouts(&counts, s).unwrap();
            let sum: f64 = est.iter().map(|e| e.value).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
