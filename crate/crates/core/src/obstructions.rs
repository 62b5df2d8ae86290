//! Which closed surfaces survive the topological obstructions to Lagrangian
//! embeddings in McDuff and torus-bundle domains.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed connected surface: orientable of genus `g`, or a connected sum of
/// `m ≥ 1` projective planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SurfaceDescriptor {
    orientable: bool,
    genus_or_crosscaps: u32,
}

impl SurfaceDescriptor {
    pub fn orientable(genus: u32) -> Self {
        SurfaceDescriptor {
            orientable: true,
            genus_or_crosscaps: genus,
        }
    }

    pub fn non_orientable(crosscaps: u32) -> Result<Self> {
        if crosscaps == 0 {
            return Err(Error::InvalidInput("a non-orientable surface needs at least one crosscap".into()));
        }
        Ok(SurfaceDescriptor {
            orientable: false,
            genus_or_crosscaps: crosscaps,
        })
    }

    pub fn new(orientable: bool, genus_or_crosscaps: u32) -> Result<Self> {
        if orientable {
            Ok(Self::orientable(genus_or_crosscaps))
        } else {
            Self::non_orientable(genus_or_crosscaps)
        }
    }

    pub fn torus() -> Self {
        Self::orientable(1)
    }

    pub fn klein_bottle() -> Self {
        Self::non_orientable(2).expect("two crosscaps")
    }

    pub fn is_orientable(&self) -> bool {
        self.orientable
    }

    pub fn genus_or_crosscaps(&self) -> u32 {
        self.genus_or_crosscaps
    }

    pub fn euler_characteristic(&self) -> i64 {
        let k = self.genus_or_crosscaps as i64;
        if self.orientable {
            2 - 2 * k
        } else {
            2 - k
        }
    }
}

impl fmt::Display for SurfaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.orientable, self.genus_or_crosscaps) {
            (true, 0) => write!(f, "sphere"),
            (true, 1) => write!(f, "torus"),
            (true, g) => write!(f, "orientable genus {g}"),
            (false, 1) => write!(f, "RP2"),
            (false, 2) => write!(f, "Klein bottle"),
            (false, m) => write!(f, "#{m} RP2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Oriented Lagrangians have `χ = 0`.
    ChiNonzero,
    /// Non-orientable Lagrangians have even `χ`.
    ChiOdd,
    /// No Lagrangian Klein bottles.
    KleinBottle,
    /// Optional: `χ ≡ 0 mod 4`.
    Mod4Filter,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::ChiNonzero => "chi_nonzero",
            Rule::ChiOdd => "chi_odd",
            Rule::KleinBottle => "klein_bottle",
            Rule::Mod4Filter => "mod4_filter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Admissible,
    /// Not excluded by any rule, but only tori are actually classified.
    AdmissibleCandidate,
    Inadmissible,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Admissible => "admissible",
            Label::AdmissibleCandidate => "admissible-candidate",
            Label::Inadmissible => "inadmissible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub surface: SurfaceDescriptor,
    pub admissible: bool,
    pub label: Label,
    pub euler_characteristic: i64,
    pub reasons: Vec<Rule>,
}

pub fn admissible_surface(d: SurfaceDescriptor, apply_mod4_filter: bool) -> AdmissibilityVerdict {
    let chi = d.euler_characteristic();
    let mut reasons = Vec::new();
    if d.orientable {
        if chi != 0 {
            reasons.push(Rule::ChiNonzero);
        }
    } else {
        if chi % 2 != 0 {
            reasons.push(Rule::ChiOdd);
        }
        if d.genus_or_crosscaps == 2 {
            reasons.push(Rule::KleinBottle);
        }
        if apply_mod4_filter && chi.rem_euclid(4) != 0 {
            reasons.push(Rule::Mod4Filter);
        }
    }
    let admissible = reasons.is_empty();
    let label = match (admissible, d.orientable) {
        (false, _) => Label::Inadmissible,
        (true, true) => Label::Admissible,
        (true, false) => Label::AdmissibleCandidate,
    };
    AdmissibilityVerdict {
        surface: d,
        admissible,
        label,
        euler_characteristic: chi,
        reasons,
    }
}

/// Verdicts for every surface with genus or crosscap count `≤ max`.
pub fn verdict_table(max: u32, apply_mod4_filter: bool) -> Vec<AdmissibilityVerdict> {
    let orientable = (0..=max).map(SurfaceDescriptor::orientable);
    let non_orientable = (1..=max).map(|m| SurfaceDescriptor::non_orientable(m).expect("m ≥ 1"));
    orientable
        .chain(non_orientable)
        .map(|d| admissible_surface(d, apply_mod4_filter))
        .collect()
}
