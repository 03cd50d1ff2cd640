use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::space::{Basis, Role, Space};
use crate::error::{Error, Result};

/// Tolerance on `|<k|k>| - 1` for kets declared normalized.
pub const NORM_TOL: f64 = 1e-12;

/// Complex amplitude vector over a labelled qubit space.
///
/// A ket is either normalized (checked on construction) or explicitly flagged
/// as unnormalized, e.g. a post-selected vector before renormalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ket {
    space: Space,
    amplitudes: Vec<Complex64>,
    normalized: bool,
}

impl Ket {
    pub fn new(space: Space, amplitudes: Vec<Complex64>) -> Result<Self> {
        let k = Ket::unnormalized(space, amplitudes)?;
        let n = k.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Ket { normalized: true, ..k })
    }

    pub fn unnormalized(space: Space, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::Dimension { expected: space.dim(), got: amplitudes.len() });
        }
        Ok(Ket { space, amplitudes, normalized: false })
    }

    pub fn from_real(space: Space, amplitudes: &[f64]) -> Result<Self> {
        Ket::new(space, amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn basis_state(space: Space, index: usize) -> Result<Self> {
        let dim = space.dim();
        if index >= dim {
            return Err(Error::Dimension { expected: dim, got: index });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ket::new(space, amps)
    }

    pub fn qubit(role: Role, basis: Basis, a0: Complex64, a1: Complex64) -> Result<Self> {
        Ket::new(Space::single(role, basis), vec![a0, a1])
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&self) -> Result<Ket> {
        let n = self.norm();
        if n <= f64::EPSILON {
            return Err(Error::ZeroNorm);
        }
        Ok(Ket {
            space: self.space.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a / n).collect(),
            normalized: true,
        })
    }

    pub fn scale(&self, c: Complex64) -> Ket {
        Ket {
            space: self.space.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
            normalized: self.normalized && (c.norm() - 1.0).abs() <= NORM_TOL,
        }
    }

    /// Same amplitudes relabelled onto a compatible space (same roles).
    pub fn with_space(&self, space: Space) -> Result<Ket> {
        self.space.ensure_compatible(&space)?;
        Ok(Ket { space, ..self.clone() })
    }

    pub(crate) fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.amplitudes)
    }

    pub(crate) fn from_vector(space: Space, v: DVector<Complex64>, normalized: bool) -> Ket {
        Ket { space, amplitudes: v.iter().copied().collect(), normalized }
    }

    /// `| <self|other> |^2` for normalized kets.
    pub fn overlap_sqr(&self, other: &Ket) -> Result<f64> {
        Ok(inner(self, other)?.norm_sqr())
    }

    /// Largest amplitude difference after removing the global phase that
    /// best aligns `self` with `other`.
    pub fn distance_up_to_phase(&self, other: &Ket) -> Result<f64> {
        let ov = inner(other, self)?;
        let phase = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { Complex64::new(1.0, 0.0) };
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max))
    }
}

/// `a ⊗ b`; the roles of `a` must all precede those of `b`.
pub fn tensor(a: &Ket, b: &Ket) -> Result<Ket> {
    let space = a.space.product(&b.space)?;
    let mut amps = Vec::with_capacity(space.dim());
    for x in &a.amplitudes {
        for y in &b.amplitudes {
            amps.push(x * y);
        }
    }
    Ok(Ket { space, amplitudes: amps, normalized: a.normalized && b.normalized })
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &Ket, b: &Ket) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    a.space.ensure_compatible(&b.space)?;
    Ok(a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_zero_product() {
        let z1 = Ket::qubit(Role::Signal1, Basis::Computational, c(1.0), c(0.0)).unwrap();
        let z2 = Ket::qubit(Role::Signal2, Basis::Computational, c(1.0), c(0.0)).unwrap();
        let k = tensor(&z1, &z2).unwrap();
        assert_eq!(k.amplitudes(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!(k.is_normalized());
    }

    #[test]
    fn distributes_over_superposition() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Ket::qubit(Role::Signal1, Basis::Computational, c(h), c(h)).unwrap();
        let one = Ket::qubit(Role::Signal2, Basis::Computational, c(0.0), c(1.0)).unwrap();
        let k = tensor(&plus, &one).unwrap();
        assert_eq!(k.amplitudes(), &[c(0.0), c(h), c(0.0), c(h)]);
    }

    #[test]
    fn orthogonal_basis_states() {
        let a = Ket::basis_state(Space::signal(), 0).unwrap();
        let b = Ket::basis_state(Space::signal(), 3).unwrap();
        assert_eq!(inner(&a, &b).unwrap(), c(0.0));
        assert_eq!(inner(&a, &a).unwrap(), c(1.0));
    }

    #[test]
    fn normalization_is_checked_not_applied() {
        assert!(matches!(
            Ket::from_real(Space::signal(), &[1.0, 1.0, 0.0, 0.0]),
            Err(Error::NotNormalized(_))
        ));
        let u = Ket::unnormalized(Space::signal(), vec![c(1.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        assert!(!u.is_normalized());
        assert!(u.normalize().unwrap().is_normalized());
        let zero = Ket::unnormalized(Space::signal(), vec![c(0.0); 4]).unwrap();
        assert!(matches!(zero.normalize(), Err(Error::ZeroNorm)));
    }

    #[test]
    fn mismatched_inputs() {
        let a = Ket::basis_state(Space::signal(), 0).unwrap();
        let b = Ket::basis_state(Space::joint(), 0).unwrap();
        assert!(matches!(inner(&a, &b), Err(Error::Dimension { .. })));
        assert!(matches!(tensor(&a, &a), Err(Error::Ordering(_))));
        assert!(Ket::unnormalized(Space::signal(), vec![c(1.0)]).is_err());
    }
}
