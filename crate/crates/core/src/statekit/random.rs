//! Random states and operators for property checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Density, Ket, Operator, Space};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random normalized ket.
pub fn ket<R: Rng + ?Sized>(rng: &mut R, space: Space) -> Ket {
    let amps: Vec<Complex64> = (0..space.dim()).map(|_| gaussian(rng)).collect();
    Ket::unnormalized(space, amps)
        .and_then(|k| k.normalize())
        .expect("gaussian vector has nonzero norm")
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, space: Space) -> Operator {
    let dim = space.dim();
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Operator::unitary(space, q).expect("QR factor is unitary")
}

/// Random full-rank density matrix `G G† / tr(G G†)`.
pub fn density<R: Rng + ?Sized>(rng: &mut R, space: Space) -> Density {
    let dim = space.dim();
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let m = &g * g.adjoint();
    let tr = m.trace();
    let m = m / tr;
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    Density::new(space, m).expect("Wishart matrix is a valid density")
}

/// Random Hermitian operator.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, space: Space) -> Operator {
    let dim = space.dim();
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let m = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    Operator::hermitian(space, m).expect("symmetrized matrix is hermitian")
}
