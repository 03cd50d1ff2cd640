use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }

    pub fn from_index(i: usize) -> Pol {
        if i == 0 {
            Pol::H
        } else {
            Pol::V
        }
    }
}

/// Diagonal polarization `|±> = (|H> ± |V>)/√2`, the meter qubit value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn bit(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_bit(b: usize) -> Sign {
        if b == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    /// `<p|±>` for `p ∈ {H, V}`.
    pub fn component(self, p: Pol) -> Complex64 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match (self, p) {
            (Sign::Minus, Pol::V) => Complex64::new(-h, 0.0),
            _ => Complex64::new(h, 0.0),
        }
    }
}

/// Polarization analyzer setting for the two detectors, e.g. `+-`.
/// Index `2k + l` matches the meter outcome `(k, l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub first: Sign,
    pub second: Sign,
}

impl AnalyzerSetting {
    pub const ALL: [AnalyzerSetting; 4] = [
        AnalyzerSetting { first: Sign::Plus, second: Sign::Plus },
        AnalyzerSetting { first: Sign::Plus, second: Sign::Minus },
        AnalyzerSetting { first: Sign::Minus, second: Sign::Plus },
        AnalyzerSetting { first: Sign::Minus, second: Sign::Minus },
    ];

    pub fn index(self) -> usize {
        2 * self.first.bit() + self.second.bit()
    }

    pub fn from_index(i: usize) -> Self {
        AnalyzerSetting { first: Sign::from_bit((i >> 1) & 1), second: Sign::from_bit(i & 1) }
    }
}

impl fmt::Display for AnalyzerSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |s: Sign| if s == Sign::Plus { '+' } else { '-' };
        write!(f, "{}{}", c(self.first), c(self.second))
    }
}

impl FromStr for AnalyzerSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let signs: Vec<Sign> = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' | '−' => Ok(Sign::Minus),
                _ => Err(Error::UnknownLabel(s.to_string())),
            })
            .collect::<Result<_>>()?;
        match signs.as_slice() {
            [a, b] => Ok(AnalyzerSetting { first: *a, second: *b }),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// Which source photon a mode's internal (spectral/temporal) state belongs
/// to. Photons with equal tags are indistinguishable and interfere; different
/// tags never do.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    First,
    Second,
}

impl Tag {
    fn index(self) -> usize {
        match self {
            Tag::First => 0,
            Tag::Second => 1,
        }
    }
}

/// One optical mode: internal tag × path × polarization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mode {
    pub tag: Tag,
    pub path: usize,
    pub pol: Pol,
}

/// Closed set of paths a circuit acts on. Mode index is
/// `(tag · paths + path) · 2 + pol`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLayout {
    paths: Vec<String>,
}

impl ModeLayout {
    pub fn new<S: Into<String>>(paths: impl IntoIterator<Item = S>) -> Result<Self> {
        let paths: Vec<String> = paths.into_iter().map(Into::into).collect();
        for (i, p) in paths.iter().enumerate() {
            if paths[..i].contains(p) {
                return Err(Error::UnknownMode(format!("duplicate path `{p}`")));
            }
        }
        Ok(ModeLayout { paths })
    }

    pub fn paths(&self) -> &[String] {
        &self.paths
    }

    pub fn path_index(&self, name: &str) -> Result<usize> {
        self.paths.iter().position(|p| p == name).ok_or_else(|| Error::UnknownMode(name.to_string()))
    }

    pub fn mode_count(&self) -> usize {
        self.paths.len() * 4
    }

    pub fn index(&self, m: Mode) -> usize {
        (m.tag.index() * self.paths.len() + m.path) * 2 + m.pol.index()
    }

    pub fn mode(&self, tag: Tag, path: &str, pol: Pol) -> Result<Mode> {
        Ok(Mode { tag, path: self.path_index(path)?, pol })
    }

    /// Mode indices on `path` for both tags and polarizations.
    pub fn indices_on_path(&self, path: usize) -> [usize; 4] {
        let mut out = [0; 4];
        let mut n = 0;
        for tag in [Tag::First, Tag::Second] {
            for pol in [Pol::H, Pol::V] {
                out[n] = self.index(Mode { tag, path, pol });
                n += 1;
            }
        }
        out
    }
}
