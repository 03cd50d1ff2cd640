use serde::{Deserialize, Serialize};

use super::MeterConfig;
use crate::statekit::{Basis, Ket, Role, Space};

/// One pure component of the single-qubit meter marginal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VisibilityBranch {
    pub probability: f64,
    pub state: Ket,
    /// Which-path distinguishability `K = 1 − 2 p_err`.
    pub strength: f64,
    pub visibility: f64,
    pub error_probability: f64,
}

/// Visibility and distinguishability of one interferometer, averaged over the
/// two pure components of the meter-1 marginal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub k_ave: f64,
    pub v_ave: f64,
    pub branches: Vec<VisibilityBranch>,
    pub error_probability: f64,
}

impl VisibilityReport {
    /// `1 − (V² + K²)`, nonnegative by complementarity.
    pub fn complementarity_gap(&self) -> f64 {
        1.0 - (self.v_ave * self.v_ave + self.k_ave * self.k_ave)
    }
}

pub fn visibility_closed_form(cfg: &MeterConfig) -> VisibilityReport {
    let (d, e) = (cfg.delta(), cfg.epsilon());
    let space = Space::single(Role::Meter1, Basis::Computational);
    let p0 = d * d + e * e;
    let p1 = 2.0 * e * e;
    let k0 = (d * d - e * e) / p0;
    let v0 = 2.0 * e * d / p0;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let branches = vec![
        VisibilityBranch {
            probability: p0,
            state: Ket::from_real(space.clone(), &[d / p0.sqrt(), e / p0.sqrt()]).expect("normalized"),
            strength: k0,
            visibility: v0,
            error_probability: (1.0 - k0) / 2.0,
        },
        VisibilityBranch {
            probability: p1,
            state: Ket::from_real(space, &[h, h]).expect("normalized"),
            strength: 0.0,
            visibility: 1.0,
            error_probability: 0.5,
        },
    ];
    let k_ave = branches.iter().map(|b| b.probability * b.strength).sum::<f64>();
    let v_ave = branches.iter().map(|b| b.probability * b.visibility).sum::<f64>();
    VisibilityReport { k_ave, v_ave, branches, error_probability: (1.0 - k_ave) / 2.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meter::meter_state;
    use crate::statekit::Density;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    #[test]
    fn endpoints_and_midpoint() {
        let r0 = visibility_closed_form(&MeterConfig::from_strength(0.0).unwrap());
        assert!((r0.v_ave - 1.0).abs() < 1e-15 && r0.k_ave.abs() < 1e-15);
        let r1 = visibility_closed_form(&MeterConfig::from_strength(1.0).unwrap());
        assert!(r1.v_ave.abs() < 1e-15 && (r1.k_ave - 1.0).abs() < 1e-15);
        let c = MeterConfig::from_strength(0.3).unwrap();
        let r = visibility_closed_form(&c);
        assert!((r.v_ave - 2.0 * c.epsilon() * (c.delta() + c.epsilon())).abs() < 1e-15);
        assert!((r.v_ave - 0.9266).abs() < 5e-5);
        assert!((r.k_ave - 0.3).abs() < 1e-15);
    }

    #[test]
    fn bound_is_saturated_only_at_the_ends() {
        for i in 0..=20 {
            let s = i as f64 / 20.0;
            let gap = visibility_closed_form(&MeterConfig::from_strength(s).unwrap()).complementarity_gap();
            if i == 0 || i == 20 {
                assert!(gap.abs() < 1e-12);
            } else {
                assert!(gap > 1e-6, "s = {s}: gap {gap}");
            }
        }
    }

    #[test]
    fn branches_rebuild_meter_marginal() {
        for s in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let c = MeterConfig::from_strength(s).unwrap();
            let marginal = Density::pure(&meter_state(&c)).unwrap().partial_trace(&[Role::Meter1]).unwrap();
            let mut rebuilt = DMatrix::<Complex64>::zeros(2, 2);
            for b in visibility_closed_form(&c).branches {
                let v = nalgebra::DVector::from_column_slice(b.state.amplitudes());
                rebuilt += (&v * v.adjoint()) * Complex64::new(b.probability, 0.0);
            }
            assert!((marginal.matrix() - rebuilt).iter().all(|z| z.norm() < 1e-12));
        }
    }
}
