use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::ket::Ket;
use super::operator::{Operator, ALGEBRA_TOL};
use super::space::{Role, Space};
use crate::error::{Error, Result};

/// Tolerance on `tr ρ = 1` and on negative eigenvalues.
const TRACE_TOL: f64 = 1e-9;

/// Density matrix. Keeps the generating ket when constructed from a pure
/// state so that fidelities against it need no matrix square roots.
#[derive(Clone, Debug)]
pub struct Density {
    space: Space,
    matrix: DMatrix<Complex64>,
    pure: Option<Ket>,
}

impl Density {
    pub fn pure(k: &Ket) -> Result<Self> {
        if !k.is_normalized() {
            return Err(Error::NotNormalized(k.norm_sqr()));
        }
        let v = k.to_vector();
        Ok(Density { space: k.space().clone(), matrix: &v * v.adjoint(), pure: Some(k.clone()) })
    }

    pub fn new(space: Space, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension { expected: dim, got: matrix.nrows() });
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > ALGEBRA_TOL {
            return Err(Error::InvalidDensity(format!("not hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let min_eig = SymmetricEigen::new(matrix.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -TRACE_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Density { space, matrix, pure: None })
    }

    /// Incoherent mixture `Σ p_i |k_i><k_i|`.
    pub fn mixture(terms: &[(f64, Ket)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidDensity("empty mixture".into()))?;
        let space = first.1.space().clone();
        let dim = space.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (p, k) in terms {
            space.ensure_compatible(k.space())?;
            let v = k.to_vector();
            m += (&v * v.adjoint()) * Complex64::new(*p, 0.0);
        }
        Density::new(space, m)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `tr(A ρ)`.
    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        self.space.ensure_compatible(op.space())?;
        Ok((op.matrix() * &self.matrix).trace())
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &Operator) -> Result<Density> {
        self.space.ensure_compatible(u.space())?;
        let m = u.matrix() * &self.matrix * u.matrix().adjoint();
        Ok(Density { space: self.space.clone(), matrix: m, pure: None })
    }

    pub fn tensor(&self, other: &Density) -> Result<Density> {
        let space = self.space.product(&other.space)?;
        Ok(Density { space, matrix: self.matrix.kronecker(&other.matrix), pure: None })
    }

    /// Reduced state on `keep`, tracing out every other factor.
    pub fn partial_trace(&self, keep: &[Role]) -> Result<Density> {
        let kept_space = self.space.restrict(keep)?;
        let n = self.space.factors().len();
        let kept_pos: Vec<usize> = (0..n).filter(|&p| keep.contains(&self.space.factors()[p].role)).collect();
        let traced_pos: Vec<usize> = (0..n).filter(|p| !kept_pos.contains(p)).collect();
        let split = |i: usize| -> (usize, usize) {
            let pick = |positions: &[usize]| {
                positions.iter().fold(0usize, |acc, &p| (acc << 1) | self.space.digit(i, p))
            };
            (pick(&kept_pos), pick(&traced_pos))
        };
        let dim = self.space.dim();
        let kd = kept_space.dim();
        let mut m = DMatrix::zeros(kd, kd);
        for i in 0..dim {
            let (ki, ti) = split(i);
            for j in 0..dim {
                let (kj, tj) = split(j);
                if ti == tj {
                    m[(ki, kj)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(Density { space: kept_space, matrix: m, pure: None })
    }

    fn check_unit_trace(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        Ok(())
    }
}

impl TryFrom<&Ket> for Density {
    type Error = Error;

    fn try_from(k: &Ket) -> Result<Density> {
        Density::pure(k)
    }
}

fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`, in `[0, 1]`.
pub fn fidelity(a: &Density, b: &Density) -> Result<f64> {
    a.space.ensure_compatible(&b.space)?;
    a.check_unit_trace()?;
    b.check_unit_trace()?;
    let f = match (&a.pure, &b.pure) {
        (Some(k), _) => {
            let v = k.to_vector();
            (v.adjoint() * &b.matrix * &v)[(0, 0)].re
        }
        (None, Some(k)) => {
            let v = k.to_vector();
            (v.adjoint() * &a.matrix * &v)[(0, 0)].re
        }
        (None, None) => {
            let sa = psd_sqrt(&a.matrix);
            let inner = &sa * &b.matrix * &sa;
            let eig = SymmetricEigen::new((&inner + inner.adjoint()) * Complex64::new(0.5, 0.0));
            let t: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
            t * t
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statekit::Basis;

    fn qubit(a0: f64, a1: f64) -> Ket {
        Ket::from_real(Space::single(Role::Signal1, Basis::Computational), &[a0, a1]).unwrap()
    }

    #[test]
    fn fidelity_of_identical_and_orthogonal() {
        let z = Density::pure(&qubit(1.0, 0.0)).unwrap();
        let o = Density::pure(&qubit(0.0, 1.0)).unwrap();
        assert_eq!(fidelity(&z, &z).unwrap(), 1.0);
        assert_eq!(fidelity(&z, &o).unwrap(), 0.0);
    }

    #[test]
    fn mixed_fidelity_matches_known_value() {
        // F(I/2, |0><0|) = 1/2 and F(I/2, I/2) = 1.
        let mixed = Density::mixture(&[(0.5, qubit(1.0, 0.0)), (0.5, qubit(0.0, 1.0))]).unwrap();
        let z = Density::pure(&qubit(1.0, 0.0)).unwrap();
        assert!((fidelity(&mixed, &z).unwrap() - 0.5).abs() < 1e-12);
        assert!((fidelity(&mixed, &mixed).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_density() {
        let m = DMatrix::from_diagonal_element(2, 2, Complex64::new(1.0, 0.0));
        let s = Space::single(Role::Signal1, Basis::Computational);
        assert!(matches!(Density::new(s.clone(), m), Err(Error::InvalidDensity(_))));
        let u = Ket::unnormalized(s, vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        assert!(Density::pure(&u).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = qubit(0.6, 0.8);
        let b = Ket::from_real(Space::single(Role::Signal2, Basis::Computational), &[0.0, 1.0]).unwrap();
        let ab = crate::statekit::tensor(&a, &b).unwrap();
        let r = Density::pure(&ab).unwrap().partial_trace(&[Role::Signal1]).unwrap();
        let expected = Density::pure(&a).unwrap();
        assert!((r.matrix() - expected.matrix()).iter().all(|z| z.norm() < 1e-15));
    }
}
