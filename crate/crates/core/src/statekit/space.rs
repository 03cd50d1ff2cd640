use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subsystem role inside a composite space.
///
/// The derived ordering is the global tensor ordering: every composite space
/// lists its factors as signal 1, signal 2, meter 1, meter 2 (skipping absent
/// ones). Products that would violate this order are rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Signal1,
    Signal2,
    Meter1,
    Meter2,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Signal1, Role::Signal2, Role::Meter1, Role::Meter2];

    /// Photon index (1 or 2) the subsystem belongs to.
    pub fn photon(self) -> u8 {
        match self {
            Role::Signal1 | Role::Meter1 => 1,
            Role::Signal2 | Role::Meter2 => 2,
        }
    }
}

/// Two-element basis in which a qubit factor is written.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Which-arm encoding: `|0> = |NO>` (outer arm), `|1> = |O>` (overlapping arm).
    Path,
    /// Abstract `|0>, |1>`.
    Computational,
    /// Polarization `|+>, |->` with `|±> = (|H> ± |V>)/√2`.
    Diagonal,
    /// Polarization `|H>, |V>`.
    Linear,
}

impl Basis {
    pub fn labels(self) -> [&'static str; 2] {
        match self {
            Basis::Path => ["NO", "O"],
            Basis::Computational => ["0", "1"],
            Basis::Diagonal => ["+", "-"],
            Basis::Linear => ["H", "V"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub role: Role,
    pub basis: Basis,
}

impl Factor {
    pub fn new(role: Role, basis: Basis) -> Self {
        Factor { role, basis }
    }

    /// Label of basis state `i`. Path labels carry the photon index (`NO1`, `O2`).
    pub fn label(&self, i: usize) -> String {
        let base = self.basis.labels()[i];
        match self.basis {
            Basis::Path => format!("{base}{}", self.role.photon()),
            _ => base.to_string(),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        (0..2).find(|&i| self.label(i) == label || self.basis.labels()[i] == label)
    }
}

/// Ordered list of qubit factors. Basis index `i` is big-endian over the
/// factors: the first factor is the most significant bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space {
    factors: Vec<Factor>,
}

impl Space {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::SpaceMismatch("a space needs at least one factor".into()));
        }
        for pair in factors.windows(2) {
            if pair[0].role >= pair[1].role {
                return Err(Error::Ordering(format!(
                    "{:?} may not precede {:?}",
                    pair[0].role, pair[1].role
                )));
            }
        }
        Ok(Space { factors })
    }

    pub fn single(role: Role, basis: Basis) -> Self {
        Space { factors: vec![Factor::new(role, basis)] }
    }

    /// Two path qubits, the signal space of the interferometers.
    pub fn signal() -> Self {
        Space {
            factors: vec![Factor::new(Role::Signal1, Basis::Path), Factor::new(Role::Signal2, Basis::Path)],
        }
    }

    /// Two meter qubits in the abstract computational basis.
    pub fn meter() -> Self {
        Space {
            factors: vec![
                Factor::new(Role::Meter1, Basis::Computational),
                Factor::new(Role::Meter2, Basis::Computational),
            ],
        }
    }

    /// Signal ⊗ meter, the 16-dimensional coupling space.
    pub fn joint() -> Self {
        let mut factors = Space::signal().factors;
        factors.extend(Space::meter().factors);
        Space { factors }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        1 << self.factors.len()
    }

    pub fn roles(&self) -> impl Iterator<Item = Role> + '_ {
        self.factors.iter().map(|f| f.role)
    }

    pub fn position(&self, role: Role) -> Option<usize> {
        self.factors.iter().position(|f| f.role == role)
    }

    /// Tensor product `self ⊗ other`; every role of `self` must precede every
    /// role of `other` in the global ordering.
    pub fn product(&self, other: &Space) -> Result<Space> {
        let last = self.factors.last().map(|f| f.role);
        let first = other.factors.first().map(|f| f.role);
        if let (Some(a), Some(b)) = (last, first) {
            if a >= b {
                return Err(Error::Ordering(format!(
                    "cannot place {:?} before {:?}",
                    a, b
                )));
            }
        }
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Ok(Space { factors })
    }

    /// Bit of factor `pos` within basis index `index`.
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index >> (self.factors.len() - 1 - pos)) & 1
    }

    pub fn labels(&self, index: usize) -> Vec<String> {
        self.factors
            .iter()
            .enumerate()
            .map(|(pos, f)| f.label(self.digit(index, pos)))
            .collect()
    }

    pub fn label(&self, index: usize) -> String {
        self.labels(index).join(",")
    }

    pub fn index_of(&self, labels: &[&str]) -> Result<usize> {
        if labels.len() != self.factors.len() {
            return Err(Error::Dimension { expected: self.factors.len(), got: labels.len() });
        }
        let mut index = 0;
        for (f, l) in self.factors.iter().zip(labels) {
            let d = f.index_of(l).ok_or_else(|| Error::UnknownLabel(l.to_string()))?;
            index = (index << 1) | d;
        }
        Ok(index)
    }

    /// Same roles and dimensions; bases may differ in name only.
    pub fn compatible(&self, other: &Space) -> bool {
        self.factors.len() == other.factors.len()
            && self.factors.iter().zip(&other.factors).all(|(a, b)| a.role == b.role)
    }

    pub(crate) fn ensure_compatible(&self, other: &Space) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!("{self} vs {other}")))
        }
    }

    /// Sub-space made of the listed roles (in global order).
    pub fn restrict(&self, keep: &[Role]) -> Result<Space> {
        let factors: Vec<Factor> = self.factors.iter().copied().filter(|f| keep.contains(&f.role)).collect();
        if factors.len() != keep.len() {
            return Err(Error::SpaceMismatch(format!("{self} does not contain all of {keep:?}")));
        }
        Space::new(factors)
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.factors.iter().map(|x| format!("{:?}", x.role)).collect();
        write!(f, "[{}]", names.join(" ⊗ "))
    }
}
