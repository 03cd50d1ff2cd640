use nalgebra::DMatrix;
use num_complex::Complex64;

use super::mode::{Mode, ModeLayout};
use crate::error::{Error, Result};

/// Two bosons over a closed mode set.
///
/// Stored as the symmetric coefficient matrix `S` of
/// `|Ψ> = Σ_ij S_ij a†_i a†_j |0>`. A linear-optical map `a†_i → Σ_k U_ki a†_k`
/// sends `S` to `U S Uᵀ`. The Fock amplitude of the unordered pair `{i, j}` is
/// `2 S_ij` for `i ≠ j` and `√2 S_ii` for a doubly occupied mode.
#[derive(Clone, Debug)]
pub struct TwoPhotonState {
    layout: ModeLayout,
    coeffs: DMatrix<Complex64>,
    lost: f64,
}

impl TwoPhotonState {
    pub fn vacuum(layout: ModeLayout) -> Self {
        let n = layout.mode_count();
        TwoPhotonState { layout, coeffs: DMatrix::zeros(n, n), lost: 0.0 }
    }

    /// `Σ c · a†_m a†_m'` over the given terms.
    pub fn from_creation_terms(layout: ModeLayout, terms: &[(Mode, Mode, Complex64)]) -> Result<Self> {
        let mut st = TwoPhotonState::vacuum(layout);
        let n = st.layout.mode_count();
        for &(a, b, c) in terms {
            let (i, j) = (st.layout.index(a), st.layout.index(b));
            if i >= n || j >= n || a.path >= st.layout.paths().len() || b.path >= st.layout.paths().len() {
                return Err(Error::UnknownMode(format!("{a:?} / {b:?}")));
            }
            st.coeffs[(i, j)] += c * 0.5;
            st.coeffs[(j, i)] += c * 0.5;
        }
        Ok(st)
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    /// Probability that left through a block element.
    pub fn lost(&self) -> f64 {
        self.lost
    }

    /// Fock amplitude of finding one photon in each of `a`, `b` (or two in `a`
    /// when `a == b`). Symmetric in its arguments.
    pub fn amplitude(&self, a: Mode, b: Mode) -> Complex64 {
        let (i, j) = (self.layout.index(a), self.layout.index(b));
        self.amplitude_by_index(i, j)
    }

    pub(crate) fn amplitude_by_index(&self, i: usize, j: usize) -> Complex64 {
        if i == j {
            self.coeffs[(i, i)] * std::f64::consts::SQRT_2
        } else {
            self.coeffs[(i, j)] * 2.0
        }
    }

    pub fn pair_probability(&self, a: Mode, b: Mode) -> f64 {
        self.amplitude(a, b).norm_sqr()
    }

    /// `<Ψ|Ψ>` with the bosonic weights: `2 Σ_ij |S_ij|²`.
    pub fn norm_sqr(&self) -> f64 {
        2.0 * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.coeffs - self.coeffs.transpose()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Probability that at least one photon occupies one of `modes`.
    pub fn occupation_probability(&self, modes: &[usize]) -> f64 {
        let n = self.layout.mode_count();
        let mut p = 0.0;
        for i in 0..n {
            for j in i..n {
                if modes.contains(&i) || modes.contains(&j) {
                    p += self.amplitude_by_index(i, j).norm_sqr();
                }
            }
        }
        p
    }

    /// Sum of pair probabilities with one photon in `first` and the other in `second`.
    pub fn joint_probability(&self, first: &[usize], second: &[usize]) -> f64 {
        let mut p = 0.0;
        for &i in first {
            for &j in second {
                debug_assert_ne!(i, j);
                p += self.amplitude_by_index(i, j).norm_sqr();
            }
        }
        p
    }

    /// `S → U S Uᵀ` for a single-particle transfer matrix `U`; any norm that
    /// disappears (blocked paths) is added to `lost`.
    pub(crate) fn transform(&self, u: &DMatrix<Complex64>) -> TwoPhotonState {
        let before = self.norm_sqr();
        let coeffs = u * &self.coeffs * u.transpose();
        let mut out = TwoPhotonState { layout: self.layout.clone(), coeffs, lost: self.lost };
        out.lost += (before - out.norm_sqr()).max(0.0);
        out
    }
}
