//! Named example states and a JSON amplitude format.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlin::linalg::{c, CVector};
use crate::qlin::random::random_pure_state;
use crate::qlin::{PureState, SubsystemLayout};
use crate::rng::LabRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `Phi_2` on `A B`, trivial `R`.
    Epr,
    /// `Phi_2` on `A R`, `|0>` on `B`.
    EprAr,
    /// One-dimensional `A`, `Phi_2` on `B R`.
    Product,
    /// Random pure state on `A B` (dims default `2,2`), trivial `R`.
    PureAb,
    Ghz3,
    Ghz4,
    /// Random pure state on `A, B, C, ...` with the given dims.
    Random,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "epr" => Preset::Epr,
            "epr-ar" => Preset::EprAr,
            "product" => Preset::Product,
            "pure-ab" => Preset::PureAb,
            "ghz3" => Preset::Ghz3,
            "ghz4" => Preset::Ghz4,
            "random" => Preset::Random,
            other => return Err(Error::InvalidParameter(format!("unknown state preset `{other}`"))),
        })
    }
}

/// Labels `A, B, C, D, ...` for `k` parties.
pub fn party_labels(k: usize) -> Vec<String> {
    let mut out = vec!["A".to_string(), "B".to_string()];
    out.extend((0..k.saturating_sub(2)).map(|i| char::from(b'C' + i as u8).to_string()));
    out.truncate(k);
    out
}

fn zero(label: &str, d: usize) -> Result<PureState> {
    PureState::basis(SubsystemLayout::single(label, d)?, 0)
}

/// Builds a preset; `dims` overrides the local dimension (or the full list for
/// `pure-ab` and `random`).
pub fn build(preset: Preset, dims: Option<&[usize]>, rng: &mut LabRng) -> Result<PureState> {
    let local = |default: usize| -> Result<usize> {
        match dims {
            None => Ok(default),
            Some([d]) if *d >= 2 => Ok(*d),
            Some(other) => Err(Error::InvalidParameter(format!("preset takes one local dimension >= 2, got {other:?}"))),
        }
    };
    match preset {
        Preset::Epr => PureState::maximally_entangled("A", "B", local(2)?)?.tensor(&zero("R", 1)?),
        Preset::EprAr => PureState::maximally_entangled("A", "R", local(2)?)?.tensor(&zero("B", 1)?)?.permuted(&["A", "B", "R"]),
        Preset::Product => zero("A", 1)?.tensor(&PureState::maximally_entangled("B", "R", local(2)?)?),
        Preset::PureAb => {
            let d = dims.unwrap_or(&[2, 2]);
            if d.len() != 2 {
                return Err(Error::InvalidParameter(format!("pure-ab takes two dims, got {d:?}")));
            }
            random_pure_state(SubsystemLayout::new([("A", d[0]), ("B", d[1])])?, rng)?.tensor(&zero("R", 1)?)
        }
        Preset::Ghz3 => PureState::ghz(&["A", "B", "C"], local(2)?),
        Preset::Ghz4 => PureState::ghz(&["A", "B", "C", "D"], local(2)?),
        Preset::Random => {
            let d = dims.unwrap_or(&[2, 2, 2]);
            if d.len() < 2 || d.len() > 8 {
                return Err(Error::InvalidParameter(format!("random takes 2 to 8 dims, got {d:?}")));
            }
            let labels = party_labels(d.len());
            random_pure_state(SubsystemLayout::new(labels.iter().map(String::as_str).zip(d.iter().copied()))?, rng)
        }
    }
}

/// `{"parts": [["A", 2], ...], "re": [...], "im": [...]}`; `im` may be omitted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmplitudeFile {
    pub parts: Vec<(String, usize)>,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

impl AmplitudeFile {
    pub fn into_state(self) -> Result<PureState> {
        let layout = SubsystemLayout::new(self.parts)?;
        if !self.im.is_empty() && self.im.len() != self.re.len() {
            return Err(Error::DimensionMismatch(format!("{} real vs {} imaginary parts", self.re.len(), self.im.len())));
        }
        let amps = CVector::from_iterator(
            self.re.len(),
            self.re.iter().enumerate().map(|(i, &x)| c(x, self.im.get(i).copied().unwrap_or(0.0))),
        );
        PureState::normalized(amps, layout)
    }
}
