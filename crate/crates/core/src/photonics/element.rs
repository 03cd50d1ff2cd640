use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mode::{Mode, ModeLayout, Pol, Tag};
use super::state::TwoPhotonState;
use crate::error::{Error, Result};

/// Symmetric beamsplitter `[[t, r], [r, t]]` with `t = √T`,
/// `r = √(1−T) e^{iφ}`. The default is 50:50 with `φ = π/2`, i.e.
/// `(t, r) = (1/√2, i/√2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitterConvention {
    pub transmissivity: f64,
    pub reflection_phase: f64,
}

impl Default for SplitterConvention {
    fn default() -> Self {
        SplitterConvention { transmissivity: 0.5, reflection_phase: std::f64::consts::FRAC_PI_2 }
    }
}

impl SplitterConvention {
    pub fn transmission(&self) -> Complex64 {
        Complex64::new(self.transmissivity.sqrt(), 0.0)
    }

    pub fn reflection(&self) -> Complex64 {
        Complex64::from_polar((1.0 - self.transmissivity).sqrt(), self.reflection_phase)
    }

    /// `t r* + r t* = 0`, required for the symmetric form to be unitary.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.transmissivity) {
            return Err(Error::NoSolution(format!("transmissivity {} outside [0, 1]", self.transmissivity)));
        }
        let (t, r) = (self.transmission(), self.reflection());
        let dev = (t * r.conj() + r * t.conj()).norm();
        if dev > 1e-12 {
            return Err(Error::NotUnitary(dev));
        }
        Ok(())
    }
}

/// Optical element acting on named paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CircuitElement {
    /// Mixes paths `a` and `b`; polarization-independent.
    Beamsplitter { name: String, a: String, b: String },
    /// Phase `e^{iφ}` on every mode of `path`.
    Phase { name: String, path: String, radians: f64 },
    /// Half-wave plate with fast axis at `angle` from H:
    /// `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]` on `(H, V)`.
    Halfwave { name: String, path: String, angle: f64 },
    /// Removes all amplitude on `path` into a loss sink.
    Block { path: String },
}

impl CircuitElement {
    pub fn beamsplitter(name: &str, a: &str, b: &str) -> Self {
        CircuitElement::Beamsplitter { name: name.into(), a: a.into(), b: b.into() }
    }

    pub fn phase(name: &str, path: &str, radians: f64) -> Self {
        CircuitElement::Phase { name: name.into(), path: path.into(), radians }
    }

    pub fn halfwave(name: &str, path: &str, angle: f64) -> Self {
        CircuitElement::Halfwave { name: name.into(), path: path.into(), angle }
    }

    pub fn block(path: &str) -> Self {
        CircuitElement::Block { path: path.into() }
    }

    pub fn name(&self) -> &str {
        match self {
            CircuitElement::Beamsplitter { name, .. }
            | CircuitElement::Phase { name, .. }
            | CircuitElement::Halfwave { name, .. } => name,
            CircuitElement::Block { .. } => "block",
        }
    }

    /// Single-particle transfer matrix on the full mode space: column `i`
    /// holds the image of `a†_i`.
    pub fn transfer(&self, layout: &ModeLayout, convention: &SplitterConvention) -> Result<DMatrix<Complex64>> {
        let n = layout.mode_count();
        let mut u = DMatrix::<Complex64>::identity(n, n);
        self.left_apply(&mut u, layout, convention)?;
        Ok(u)
    }

    /// `m ← T m` for this element's transfer matrix `T`, as row operations.
    pub(crate) fn left_apply(
        &self,
        m: &mut DMatrix<Complex64>,
        layout: &ModeLayout,
        convention: &SplitterConvention,
    ) -> Result<()> {
        let mix = |m: &mut DMatrix<Complex64>, i: usize, j: usize, k: [[Complex64; 2]; 2]| {
            for c in 0..m.ncols() {
                let (x, y) = (m[(i, c)], m[(j, c)]);
                m[(i, c)] = k[0][0] * x + k[0][1] * y;
                m[(j, c)] = k[1][0] * x + k[1][1] * y;
            }
        };
        match self {
            CircuitElement::Beamsplitter { a, b, .. } => {
                let (pa, pb) = (layout.path_index(a)?, layout.path_index(b)?);
                if pa == pb {
                    return Err(Error::UnknownMode(format!("beamsplitter joins `{a}` to itself")));
                }
                let (t, r) = (convention.transmission(), convention.reflection());
                for tag in [Tag::First, Tag::Second] {
                    for pol in [Pol::H, Pol::V] {
                        let i = layout.index(Mode { tag, path: pa, pol });
                        let j = layout.index(Mode { tag, path: pb, pol });
                        mix(m, i, j, [[t, r], [r, t]]);
                    }
                }
            }
            CircuitElement::Phase { path, radians, .. } => {
                let p = layout.path_index(path)?;
                let z = Complex64::from_polar(1.0, *radians);
                for i in layout.indices_on_path(p) {
                    for x in m.row_mut(i).iter_mut() {
                        *x *= z;
                    }
                }
            }
            CircuitElement::Halfwave { path, angle, .. } => {
                let p = layout.path_index(path)?;
                let (s, c) = (2.0 * angle).sin_cos();
                let one = Complex64::new(1.0, 0.0);
                for tag in [Tag::First, Tag::Second] {
                    let h = layout.index(Mode { tag, path: p, pol: Pol::H });
                    let v = layout.index(Mode { tag, path: p, pol: Pol::V });
                    mix(m, h, v, [[one * c, one * s], [one * s, -one * c]]);
                }
            }
            CircuitElement::Block { path } => {
                let p = layout.path_index(path)?;
                for i in layout.indices_on_path(p) {
                    m.row_mut(i).fill(Complex64::new(0.0, 0.0));
                }
            }
        }
        Ok(())
    }
}

/// Composite single-particle transfer matrix of an ordered element list.
pub fn transfer_matrix(
    elements: &[CircuitElement],
    layout: &ModeLayout,
    convention: &SplitterConvention,
) -> Result<DMatrix<Complex64>> {
    let n = layout.mode_count();
    let mut total = DMatrix::<Complex64>::identity(n, n);
    for e in elements {
        e.left_apply(&mut total, layout, convention)?;
    }
    Ok(total)
}

/// Applies each element in order. Norm is preserved except through blocks,
/// whose removed probability is tracked by [`TwoPhotonState::lost`].
pub fn propagate(
    state: &TwoPhotonState,
    elements: &[CircuitElement],
    convention: &SplitterConvention,
) -> Result<TwoPhotonState> {
    convention.validate()?;
    let u = transfer_matrix(elements, state.layout(), convention)?;
    Ok(state.transform(&u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> ModeLayout {
        ModeLayout::new(["a", "b"]).unwrap()
    }

    fn pair(l: &ModeLayout, pa: Pol, tb: Tag, pb: Pol) -> TwoPhotonState {
        let a = l.mode(Tag::First, "a", pa).unwrap();
        let b = l.mode(tb, "b", pb).unwrap();
        TwoPhotonState::from_creation_terms(l.clone(), &[(a, b, Complex64::new(1.0, 0.0))]).unwrap()
    }

    fn coincidence(st: &TwoPhotonState) -> f64 {
        let l = st.layout();
        let on = |p: &str| -> Vec<usize> { l.indices_on_path(l.path_index(p).unwrap()).to_vec() };
        st.joint_probability(&on("a"), &on("b"))
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let l = layout();
        let bs = [CircuitElement::beamsplitter("BS", "a", "b")];
        let conv = SplitterConvention::default();
        let same = propagate(&pair(&l, Pol::H, Tag::First, Pol::H), &bs, &conv).unwrap();
        assert!(coincidence(&same) < 1e-30);
        assert!((same.norm_sqr() - 1.0).abs() < 1e-12);
        let cross = propagate(&pair(&l, Pol::H, Tag::First, Pol::V), &bs, &conv).unwrap();
        assert!((coincidence(&cross) - 0.5).abs() < 1e-12);
        let tagged = propagate(&pair(&l, Pol::H, Tag::Second, Pol::H), &bs, &conv).unwrap();
        assert!((coincidence(&tagged) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let l = layout();
        let st = pair(&l, Pol::H, Tag::First, Pol::V);
        let out = propagate(&st, &[], &SplitterConvention::default()).unwrap();
        let a = l.mode(Tag::First, "a", Pol::H).unwrap();
        let b = l.mode(Tag::First, "b", Pol::V).unwrap();
        assert_eq!(out.amplitude(a, b), Complex64::new(1.0, 0.0));
        assert_eq!(out.amplitude(b, a), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn block_moves_probability_to_sink() {
        let l = layout();
        let st = pair(&l, Pol::H, Tag::First, Pol::H);
        let out = propagate(
            &st,
            &[CircuitElement::beamsplitter("BS", "a", "b"), CircuitElement::block("b")],
            &SplitterConvention::default(),
        )
        .unwrap();
        // Both photons bunch; half the time they bunch into `b`.
        assert!((out.lost() - 0.5).abs() < 1e-12);
        assert!((out.norm_sqr() + out.lost() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_path_is_rejected() {
        let l = layout();
        let st = pair(&l, Pol::H, Tag::First, Pol::H);
        let r = propagate(&st, &[CircuitElement::phase("P", "zz", 1.0)], &SplitterConvention::default());
        assert!(matches!(r, Err(Error::UnknownMode(_))));
    }

    #[test]
    fn halfwave_at_zero_swaps_diagonal_states() {
        let l = ModeLayout::new(["a", "b"]).unwrap();
        let u = CircuitElement::halfwave("HWP", "a", 0.0).transfer(&l, &SplitterConvention::default()).unwrap();
        let h = l.index(Mode { tag: Tag::First, path: 0, pol: Pol::H });
        let v = l.index(Mode { tag: Tag::First, path: 0, pol: Pol::V });
        // |+> = (H + V)/√2 ↦ (H − V)/√2 = |->
        assert_eq!(u[(h, h)], Complex64::new(1.0, 0.0));
        assert_eq!(u[(v, v)], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn non_unitary_convention_rejected() {
        let bad = SplitterConvention { transmissivity: 0.5, reflection_phase: 0.0 };
        assert!(bad.validate().is_err());
        let unbalanced = SplitterConvention { transmissivity: 0.6, ..Default::default() };
        assert!(unbalanced.validate().is_ok());
    }
}
