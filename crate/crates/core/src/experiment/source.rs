use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meter::MeterConfig;
use crate::statekit::{Ket, Space};

const SOURCE_TOL: f64 = 1e-9;
const FORM_TOL: f64 = 1e-9;

/// Down-conversion pair `η|HH> + η̄|VV>` followed by one half-wave plate per
/// photon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub eta: f64,
    pub eta_bar: f64,
    pub hwp1_angle: f64,
    pub hwp2_angle: f64,
}

impl SourceConfig {
    pub fn new(eta: f64, eta_bar: f64, hwp1_angle: f64, hwp2_angle: f64) -> Result<Self> {
        let s = SourceConfig { eta, eta_bar, hwp1_angle, hwp2_angle };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta < 0.0 || self.eta_bar < 0.0 {
            return Err(Error::InvalidSource(format!("amplitudes must be nonnegative: ({}, {})", self.eta, self.eta_bar)));
        }
        let n = self.eta * self.eta + self.eta_bar * self.eta_bar;
        if (n - 1.0).abs() > SOURCE_TOL {
            return Err(Error::InvalidSource(format!("eta^2 + eta_bar^2 = {n}, expected 1")));
        }
        Ok(())
    }

    /// Source and common plate angle producing the meter of strength `s`.
    ///
    /// In the H/V basis the meter amplitude matrix is `J D J` with
    /// `D = diag(η, η̄)` and `J` the (symmetric, involutive) plate matrix, so
    /// `η ≥ η̄` are the eigenvalues of the target matrix and the leading
    /// eigenvector is `(cos 2a, sin 2a)`.
    pub fn for_strength(strength: f64) -> Result<Self> {
        let cfg = MeterConfig::from_strength(strength)?;
        let (d, e) = (cfg.delta(), cfg.epsilon());
        // Target amplitudes in the ± basis, rotated to H/V by B = [[1, 1], [1, −1]]/√2.
        let xi = Matrix2::new(d, e, e, e);
        let b = Matrix2::new(1.0, 1.0, 1.0, -1.0) * std::f64::consts::FRAC_1_SQRT_2;
        let m = b * xi * b.transpose();
        let eig = SymmetricEigen::new(m);
        let (hi, lo) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
        let v = eig.eigenvectors.column(hi);
        let angle = v[1].atan2(v[0]) / 2.0;
        let eta = eig.eigenvalues[hi].max(0.0);
        let eta_bar = eig.eigenvalues[lo].max(0.0);
        let norm = (eta * eta + eta_bar * eta_bar).sqrt();
        SourceConfig::new(eta / norm, eta_bar / norm, angle, angle)
    }
}

/// `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]` on `(H, V)`.
pub fn halfwave_jones(angle: f64) -> Matrix2<f64> {
    let (s, c) = (2.0 * angle).sin_cos();
    Matrix2::new(c, s, s, -c)
}

/// Meter ket after the plates, in the `{|+>, |->}` basis with index `2k + l`.
pub fn source_ket(src: &SourceConfig) -> Result<Ket> {
    src.validate()?;
    let j1 = halfwave_jones(src.hwp1_angle);
    let j2 = halfwave_jones(src.hwp2_angle);
    // Amplitude matrix in H/V: M[p][q] = Σ_x J1[p][x] D[x] J2[q][x].
    let m = j1 * Matrix2::new(src.eta, 0.0, 0.0, src.eta_bar) * j2.transpose();
    let b = Matrix2::new(1.0, 1.0, 1.0, -1.0) * std::f64::consts::FRAC_1_SQRT_2;
    let pm = b.transpose() * m * b;
    let amps = vec![pm[(0, 0)], pm[(0, 1)], pm[(1, 0)], pm[(1, 1)]];
    Ket::new(Space::meter(), amps.into_iter().map(|a| Complex64::new(a, 0.0)).collect())
}

/// Meter ket for `src` and, when it has the form `δ|00> + ε(|01>+|10>+|11>)`
/// up to global phase, its configuration.
pub fn meter_from_source(src: &SourceConfig) -> Result<(Ket, MeterConfig)> {
    let ket = source_ket(src)?;
    let not_form = |reason: String| Error::NotMeterForm { ket: Box::new(ket.clone()), reason };
    let a = ket.amplitudes();
    let phase = if a[0].norm() > FORM_TOL { a[0] / a[0].norm() } else { Complex64::new(1.0, 0.0) };
    let r: Vec<Complex64> = a.iter().map(|x| x / phase).collect();
    if r.iter().any(|x| x.im.abs() > FORM_TOL || x.re < -FORM_TOL) {
        return Err(not_form("relative phases between components".into()));
    }
    let (d, e) = (r[0].re, r[1].re);
    if (r[2].re - e).abs() > FORM_TOL || (r[3].re - e).abs() > FORM_TOL {
        return Err(not_form(format!("unequal minority amplitudes ({:.6}, {:.6}, {:.6})", r[1].re, r[2].re, r[3].re)));
    }
    if d + FORM_TOL < e {
        return Err(not_form(format!("leading amplitude {d:.6} below {e:.6}")));
    }
    let cfg = MeterConfig::new(d, e.max(0.0)).map_err(|err| not_form(err.to_string()))?;
    Ok((ket, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8};

    #[test]
    fn product_source_at_zero_angle_is_strength_zero() {
        let (ket, cfg) = meter_from_source(&SourceConfig::new(1.0, 0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(cfg.strength().abs() < 1e-12);
        assert!(ket.amplitudes().iter().all(|a| (a.re - 0.5).abs() < 1e-12));
    }

    #[test]
    fn product_source_rotated_to_diagonal_is_strength_one() {
        let (ket, cfg) = meter_from_source(&SourceConfig::new(1.0, 0.0, FRAC_PI_8, FRAC_PI_8).unwrap()).unwrap();
        assert!((cfg.strength() - 1.0).abs() < 1e-12);
        assert!((ket.amplitude(0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximally_entangled_source_is_not_meter_form() {
        // (|HH> + |VV>)/√2 is invariant in form under equal rotations: it
        // becomes (|++> + |-->)/√2, with no |+-> or |-+> component.
        let src = SourceConfig::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_PI_8, FRAC_PI_8).unwrap();
        match meter_from_source(&src) {
            Err(Error::NotMeterForm { ket, .. }) => {
                assert!((ket.amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-12);
                assert!(ket.amplitude(1).norm() < 1e-12 && ket.amplitude(2).norm() < 1e-12);
                assert!((ket.amplitude(3).re - FRAC_1_SQRT_2).abs() < 1e-12);
            }
            other => panic!("expected NotMeterForm, got {other:?}"),
        }
    }

    #[test]
    fn inverse_round_trip() {
        for k in 0..=20 {
            let s = k as f64 / 20.0;
            let src = SourceConfig::for_strength(s).unwrap();
            assert!((src.hwp1_angle - src.hwp2_angle).abs() == 0.0);
            let (_, cfg) = meter_from_source(&src).unwrap();
            assert!((cfg.strength() - s).abs() < 1e-9, "{s}: {}", cfg.strength());
        }
    }

    #[test]
    fn invalid_sources_rejected() {
        assert!(matches!(SourceConfig::new(0.9, 0.9, 0.0, 0.0), Err(Error::InvalidSource(_))));
        assert!(matches!(SourceConfig::new(-1.0, 0.0, 0.0, 0.0), Err(Error::InvalidSource(_))));
    }

    #[test]
    fn misaligned_plate_breaks_meter_form() {
        let mut src = SourceConfig::for_strength(0.3).unwrap();
        src.hwp1_angle += 0.01;
        assert!(matches!(meter_from_source(&src), Err(Error::NotMeterForm { .. })));
        assert!(source_ket(&src).unwrap().is_normalized());
    }
}
