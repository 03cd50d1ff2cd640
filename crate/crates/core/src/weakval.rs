//! Weak values `<post|A|pre> / <post|pre>` and the four joint path projectors
//! of the two-interferometer setup.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statekit::{inner, Ket, Operator, Space};

/// Below this overlap magnitude the selection is treated as orthogonal.
pub const ORTHOGONAL_TOL: f64 = 1e-12;

/// Interferometer arm taken by one photon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    /// Outer arm `NO`, signal qubit `|0>`.
    Outer,
    /// Overlapping arm `O`, signal qubit `|1>`.
    Overlap,
}

impl Arm {
    pub fn bit(self) -> usize {
        match self {
            Arm::Outer => 0,
            Arm::Overlap => 1,
        }
    }

    pub fn from_bit(b: usize) -> Arm {
        if b == 0 {
            Arm::Outer
        } else {
            Arm::Overlap
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Arm::Outer => "NO",
            Arm::Overlap => "O",
        }
    }
}

/// Arm of a single photon, e.g. `O1` or `NO2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArmLabel {
    pub photon: u8,
    pub arm: Arm,
}

impl fmt::Display for ArmLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.arm.prefix(), self.photon)
    }
}

impl FromStr for ArmLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (arm, rest) = if let Some(r) = t.strip_prefix("NO") {
            (Arm::Outer, r)
        } else if let Some(r) = t.strip_prefix('O') {
            (Arm::Overlap, r)
        } else {
            return Err(Error::UnknownLabel(s.to_string()));
        };
        let photon = match rest {
            "1" => 1,
            "2" => 2,
            _ => return Err(Error::UnknownLabel(s.to_string())),
        };
        Ok(ArmLabel { photon, arm })
    }
}

/// Joint arm assignment `(photon 1, photon 2)`; signal basis index `2k + l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArmPair {
    pub first: Arm,
    pub second: Arm,
}

impl ArmPair {
    pub const fn new(first: Arm, second: Arm) -> Self {
        ArmPair { first, second }
    }

    /// Column order used in tables: `O1O2, NO1NO2, O1NO2, NO1O2`.
    pub const TABLE_ORDER: [ArmPair; 4] = [
        ArmPair::new(Arm::Overlap, Arm::Overlap),
        ArmPair::new(Arm::Outer, Arm::Outer),
        ArmPair::new(Arm::Overlap, Arm::Outer),
        ArmPair::new(Arm::Outer, Arm::Overlap),
    ];

    pub fn index(self) -> usize {
        2 * self.first.bit() + self.second.bit()
    }

    pub fn from_index(i: usize) -> ArmPair {
        ArmPair::new(Arm::from_bit((i >> 1) & 1), Arm::from_bit(i & 1))
    }

    pub fn all() -> impl Iterator<Item = ArmPair> {
        (0..4).map(ArmPair::from_index)
    }

    pub fn basis_ket(self) -> Ket {
        Ket::basis_state(Space::signal(), self.index()).expect("index < 4")
    }

    pub fn projector(self) -> Operator {
        Operator::projector(&self.basis_ket())
    }
}

impl fmt::Display for ArmPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}1{}2", self.first.prefix(), self.second.prefix())
    }
}

impl FromStr for ArmPair {
    type Err = Error;

    /// Accepts `O1,NO2`, `O1NO2` or `O1+NO2`.
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !matches!(c, ',' | '+' | ' ' | '|')).collect();
        let split = t.find('1').ok_or_else(|| Error::UnknownLabel(s.to_string()))?;
        let a: ArmLabel = t[..=split].parse().map_err(|_| Error::UnknownLabel(s.to_string()))?;
        let b: ArmLabel = t[split + 1..].parse().map_err(|_| Error::UnknownLabel(s.to_string()))?;
        if a.photon != 1 || b.photon != 2 {
            return Err(Error::UnknownLabel(s.to_string()));
        }
        Ok(ArmPair::new(a.arm, b.arm))
    }
}

/// `(|NO1,O2> + |O1,NO2> + |NO1,NO2>)/√3`, the state entering the coupling region.
pub fn hardy_preselection() -> Ket {
    let a = 1.0 / 3f64.sqrt();
    Ket::from_real(Space::signal(), &[a, a, a, 0.0]).expect("normalized")
}

/// `(|NO1> - |O1>)(|NO2> - |O2>)/2`, retrodicted from a C1∧C2 coincidence.
pub fn hardy_postselection() -> Ket {
    Ket::from_real(Space::signal(), &[0.5, -0.5, -0.5, 0.5]).expect("normalized")
}

fn selection_overlap(pre: &Ket, post: &Ket) -> Result<Complex64> {
    let ov = inner(post, pre)?;
    if ov.norm() <= ORTHOGONAL_TOL {
        return Err(Error::OrthogonalSelection(ov.norm()));
    }
    Ok(ov)
}

pub fn weak_value(op: &Operator, pre: &Ket, post: &Ket) -> Result<Complex64> {
    let ov = selection_overlap(pre, post)?;
    Ok(op.matrix_element(post, pre)? / ov)
}

/// Weak values of the four joint path projectors, plus `ζ = 1 − Σ|w|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakValueSet {
    values: [Complex64; 4],
    zeta: f64,
    overlap: Complex64,
}

impl WeakValueSet {
    pub fn get(&self, pair: ArmPair) -> Complex64 {
        self.values[pair.index()]
    }

    /// Indexed by signal basis index.
    pub fn values(&self) -> &[Complex64; 4] {
        &self.values
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// `<post|pre>`.
    pub fn overlap(&self) -> Complex64 {
        self.overlap
    }

    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }
}

pub fn joint_weak_values(pre: &Ket, post: &Ket) -> Result<WeakValueSet> {
    if pre.dim() != 4 || !pre.space().compatible(&Space::signal()) {
        return Err(Error::SpaceMismatch(format!("expected two signal qubits, got {}", pre.space())));
    }
    let overlap = selection_overlap(pre, post)?;
    // <post|kl><kl|pre> = conj(post_kl) pre_kl
    let mut values = [Complex64::new(0.0, 0.0); 4];
    for (i, v) in values.iter_mut().enumerate() {
        *v = post.amplitude(i).conj() * pre.amplitude(i) / overlap;
    }
    let zeta = 1.0 - values.iter().map(|w| w.norm_sqr()).sum::<f64>();
    Ok(WeakValueSet { values, zeta, overlap })
}

/// Weak value of `|arm><arm| ⊗ I`, the sum of the two joint values sharing `arm`.
pub fn marginal_weak_value(arm: ArmLabel, set: &WeakValueSet) -> Result<Complex64> {
    if arm.photon != 1 && arm.photon != 2 {
        return Err(Error::UnknownLabel(arm.to_string()));
    }
    Ok(ArmPair::all()
        .filter(|p| if arm.photon == 1 { p.first == arm.arm } else { p.second == arm.arm })
        .map(|p| set.get(p))
        .sum())
}

/// Projector onto one photon's arm, acting on the two-photon signal space.
pub fn marginal_projector(arm: ArmLabel) -> Operator {
    let mut acc: Option<Operator> = None;
    for p in ArmPair::all() {
        let hit = if arm.photon == 1 { p.first == arm.arm } else { p.second == arm.arm };
        if hit {
            let proj = p.projector();
            acc = Some(match acc {
                None => proj,
                Some(a) => a.add(&proj).expect("same space"),
            });
        }
    }
    acc.expect("two pairs share every arm")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statekit::random;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: Complex64, b: f64) -> bool {
        (a - Complex64::new(b, 0.0)).norm() < 1e-12
    }

    #[test]
    fn hardy_overlap() {
        let ov = inner(&hardy_postselection(), &hardy_preselection()).unwrap();
        assert!(close(ov, -1.0 / (2.0 * 3f64.sqrt())));
    }

    #[test]
    fn hardy_joint_values() {
        let w = joint_weak_values(&hardy_preselection(), &hardy_postselection()).unwrap();
        let [oo, nn, on, no] = ArmPair::TABLE_ORDER.map(|p| w.get(p));
        assert!(close(oo, 0.0));
        assert!(close(nn, -1.0));
        assert!(close(on, 1.0));
        assert!(close(no, 1.0));
        assert!((w.zeta() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn hardy_single_projectors() {
        let pre = hardy_preselection();
        let post = hardy_postselection();
        let oo = ArmPair::new(Arm::Overlap, Arm::Overlap).projector();
        let nn = ArmPair::new(Arm::Outer, Arm::Outer).projector();
        assert!(close(weak_value(&oo, &pre, &post).unwrap(), 0.0));
        assert!(close(weak_value(&nn, &pre, &post).unwrap(), -1.0));
    }

    #[test]
    fn marginals_for_hardy() {
        let w = joint_weak_values(&hardy_preselection(), &hardy_postselection()).unwrap();
        for (label, expected) in [("O1", 1.0), ("O2", 1.0), ("NO1", 0.0), ("NO2", 0.0)] {
            let v = marginal_weak_value(label.parse().unwrap(), &w).unwrap();
            assert!(close(v, expected), "{label}: {v}");
        }
        assert!(matches!("X1".parse::<ArmLabel>(), Err(Error::UnknownLabel(_))));
        assert!(matches!("O3".parse::<ArmLabel>(), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn equal_selection_gives_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random::ket(&mut rng, Space::signal());
        let a = random::hermitian(&mut rng, Space::signal());
        let wv = weak_value(&a, &psi, &psi).unwrap();
        let ev = a.matrix_element(&psi, &psi).unwrap();
        assert!((wv - ev).norm() < 1e-12);
    }

    #[test]
    fn basis_preselection() {
        let pre = ArmPair::new(Arm::Overlap, Arm::Outer).basis_ket();
        let w = joint_weak_values(&pre, &hardy_postselection()).unwrap();
        assert!(close(w.get(ArmPair::new(Arm::Overlap, Arm::Outer)), 1.0));
        for p in ArmPair::all().filter(|p| *p != ArmPair::new(Arm::Overlap, Arm::Outer)) {
            assert!(close(w.get(p), 0.0));
        }
        assert!(w.zeta().abs() < 1e-12);
    }

    #[test]
    fn orthogonal_selection_is_an_error() {
        let pre = ArmPair::new(Arm::Overlap, Arm::Overlap).basis_ket();
        let post = ArmPair::new(Arm::Outer, Arm::Outer).basis_ket();
        assert!(matches!(joint_weak_values(&pre, &post), Err(Error::OrthogonalSelection(_))));
        assert!(matches!(weak_value(&pre_proj(), &pre, &post), Err(Error::OrthogonalSelection(_))));
    }

    fn pre_proj() -> Operator {
        ArmPair::new(Arm::Overlap, Arm::Overlap).projector()
    }

    #[test]
    fn pair_labels_round_trip() {
        for p in ArmPair::all() {
            assert_eq!(p.to_string().parse::<ArmPair>().unwrap(), p);
        }
        assert_eq!("NO1,NO2".parse::<ArmPair>().unwrap(), ArmPair::new(Arm::Outer, Arm::Outer));
        assert!("O2,O1".parse::<ArmPair>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn linear_in_the_observable(seed in any::<u64>(), ar in -2.0..2.0f64, ai in -2.0..2.0f64, br in -2.0..2.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pre = random::ket(&mut rng, Space::signal());
            let post = random::ket(&mut rng, Space::signal());
            let a = random::hermitian(&mut rng, Space::signal());
            let b = random::hermitian(&mut rng, Space::signal());
            let (alpha, beta) = (Complex64::new(ar, ai), Complex64::new(br, 0.0));
            let combo = a.scale(alpha).add(&b.scale(beta)).unwrap();
            let lhs = weak_value(&combo, &pre, &post).unwrap();
            let rhs = alpha * weak_value(&a, &pre, &post).unwrap() + beta * weak_value(&b, &pre, &post).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn completeness_and_cross_check(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pre = random::ket(&mut rng, Space::signal());
            let post = random::ket(&mut rng, Space::signal());
            let set = joint_weak_values(&pre, &post).unwrap();
            prop_assert!((set.sum() - Complex64::new(1.0, 0.0)).norm() < 1e-12 * (1.0 + set.values().iter().map(|w| w.norm()).sum::<f64>()));
            for p in ArmPair::all() {
                let direct = weak_value(&p.projector(), &pre, &post).unwrap();
                prop_assert!((direct - set.get(p)).norm() <= 1e-12 * (1.0 + direct.norm()));
            }
            for label in ["O1", "NO1", "O2", "NO2"] {
                let arm: ArmLabel = label.parse().unwrap();
                let direct = weak_value(&marginal_projector(arm), &pre, &post).unwrap();
                let summed = marginal_weak_value(arm, &set).unwrap();
                prop_assert!((direct - summed).norm() <= 1e-12 * (1.0 + direct.norm()));
            }
        }
    }
}
