use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ket::Ket;
use super::space::{Role, Space};
use crate::error::{Error, Result};

/// Tolerance for `U†U = I` and `A = A†`.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Dense operator on a labelled space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: Space,
    matrix: DMatrix<Complex64>,
    unitary: bool,
}

impl Operator {
    pub fn new(space: Space, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension { expected: dim, got: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Operator { space, matrix, unitary: false })
    }

    /// Validated unitary; norm-preserving when applied.
    pub fn unitary(space: Space, matrix: DMatrix<Complex64>) -> Result<Self> {
        let op = Operator::new(space, matrix)?;
        let dev = op.unitarity_deviation();
        if dev > ALGEBRA_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Operator { unitary: true, ..op })
    }

    /// Validated Hermitian observable.
    pub fn hermitian(space: Space, matrix: DMatrix<Complex64>) -> Result<Self> {
        let op = Operator::new(space, matrix)?;
        let dev = op.hermiticity_deviation();
        if dev > ALGEBRA_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(op)
    }

    pub fn identity(space: Space) -> Self {
        let dim = space.dim();
        Operator { space, matrix: DMatrix::identity(dim, dim), unitary: true }
    }

    /// `|k><k|` (for a normalized `k`, a rank-one projector).
    pub fn projector(k: &Ket) -> Self {
        let v = k.to_vector();
        Operator { space: k.space().clone(), matrix: &v * v.adjoint(), unitary: false }
    }

    /// `|a><b|`.
    pub fn outer(a: &Ket, b: &Ket) -> Result<Self> {
        a.space().ensure_compatible(b.space())?;
        let (va, vb) = (a.to_vector(), b.to_vector());
        Ok(Operator { space: a.space().clone(), matrix: &va * vb.adjoint(), unitary: false })
    }

    /// Controlled-NOT with `control` flipping `target` when the control is `|1>`.
    pub fn cnot(space: Space, control: Role, target: Role) -> Result<Self> {
        let c = space.position(control).ok_or_else(|| Error::UnknownLabel(format!("{control:?}")))?;
        let t = space.position(target).ok_or_else(|| Error::UnknownLabel(format!("{target:?}")))?;
        let n = space.factors().len();
        let dim = space.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let j = if space.digit(i, c) == 1 { i ^ (1 << (n - 1 - t)) } else { i };
            m[(j, i)] = Complex64::new(1.0, 0.0);
        }
        Ok(Operator { space, matrix: m, unitary: true })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn adjoint(&self) -> Operator {
        Operator { space: self.space.clone(), matrix: self.matrix.adjoint(), unitary: self.unitary }
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let dim = self.space.dim();
        let p = self.matrix.adjoint() * &self.matrix - DMatrix::<Complex64>::identity(dim, dim);
        p.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self ⊗ other` under the global ordering.
    pub fn tensor(&self, other: &Operator) -> Result<Operator> {
        let space = self.space.product(&other.space)?;
        Ok(Operator {
            space,
            matrix: self.matrix.kronecker(&other.matrix),
            unitary: self.unitary && other.unitary,
        })
    }

    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_compatible(&other.space)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
            unitary: self.unitary && other.unitary,
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_compatible(&other.space)?;
        Ok(Operator { space: self.space.clone(), matrix: &self.matrix + &other.matrix, unitary: false })
    }

    pub fn scale(&self, c: Complex64) -> Operator {
        Operator { space: self.space.clone(), matrix: &self.matrix * c, unitary: false }
    }

    /// `<a|self|b>`.
    pub fn matrix_element(&self, a: &Ket, b: &Ket) -> Result<Complex64> {
        let ab = apply(self, b)?;
        super::ket::inner(a, &ab)
    }
}

/// Matrix-vector product. The result keeps the normalized flag only when the
/// operator is a validated unitary.
pub fn apply(op: &Operator, k: &Ket) -> Result<Ket> {
    if op.space.dim() != k.dim() {
        return Err(Error::Dimension { expected: op.space.dim(), got: k.dim() });
    }
    op.space.ensure_compatible(k.space())?;
    let v = &op.matrix * k.to_vector();
    Ok(Ket::from_vector(k.space().clone(), v, op.unitary && k.is_normalized()))
}
