use serde::{Deserialize, Serialize};

use super::finite::{Component, FiniteMeasure};
use super::space::{Colour, ColourSpace};
use crate::{Error, Result};

/// Finitely many signed atoms, canonical: distinct colours, nonzero weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedAtomicMeasure {
    space: ColourSpace,
    atoms: Vec<(Colour, f64)>,
}

impl SignedAtomicMeasure {
    pub fn new(space: ColourSpace, atoms: impl IntoIterator<Item = (Colour, f64)>) -> Result<Self> {
        let mut out = Self {
            space,
            atoms: Vec::new(),
        };
        for (c, w) in atoms {
            if !out.space.contains(&c) {
                return Err(Error::ColourMismatch(c));
            }
            if !w.is_finite() {
                return Err(Error::InvalidParams(format!("signed weight {w} is not finite")));
            }
            out.accumulate(c, w);
        }
        out.atoms.retain(|(_, w)| *w != 0.0);
        Ok(out)
    }

    pub fn zero(space: ColourSpace) -> Self {
        Self {
            space,
            atoms: Vec::new(),
        }
    }

    fn accumulate(&mut self, c: Colour, w: f64) {
        match self.atoms.iter_mut().find(|(a, _)| *a == c) {
            Some((_, existing)) => *existing += w,
            None => self.atoms.push((c, w)),
        }
    }

    pub fn space(&self) -> &ColourSpace {
        &self.space
    }

    pub fn atoms(&self) -> &[(Colour, f64)] {
        &self.atoms
    }

    /// Signed total mass `σ(S)`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().fold(0.0, |acc, (_, w)| acc + w)
    }

    pub fn weight(&self, colour: &Colour) -> f64 {
        self.atoms
            .iter()
            .find(|(c, _)| c == colour)
            .map_or(0.0, |(_, w)| *w)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|(_, w)| *w >= 0.0)
    }

    /// Jordan decomposition `σ = σ⁺ − σ⁻`.
    pub fn jordan(&self) -> (FiniteMeasure, FiniteMeasure) {
        let part = |sign: f64| {
            FiniteMeasure::from_components(
                self.space.clone(),
                self.atoms
                    .iter()
                    .filter(|(_, w)| w * sign > 0.0)
                    .map(|(c, w)| Component::atom(w.abs(), c.clone())),
            )
            .expect("canonical atoms lie in the space")
        };
        (part(1.0), part(-1.0))
    }

    /// `|σ| = σ⁺ + σ⁻`.
    pub fn variation(&self) -> FiniteMeasure {
        let (pos, neg) = self.jordan();
        pos.add(&neg).expect("same space")
    }

    /// View a purely atomic measure as a signed one.
    pub fn from_measure(m: &FiniteMeasure) -> Result<Self> {
        let mut atoms = Vec::with_capacity(m.components().len());
        for c in m.components() {
            match &c.payload {
                super::Payload::Atom(colour) => atoms.push((colour.clone(), c.weight)),
                _ => {
                    return Err(Error::InvalidParams(
                        "signed measures are atomic only".into(),
                    ))
                }
            }
        }
        Self::new(m.space().clone(), atoms)
    }
}
