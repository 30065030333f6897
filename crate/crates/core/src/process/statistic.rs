use std::fmt;
use std::sync::Arc;

use crate::measure::{FiniteMeasure, TestSet};
use crate::{Error, Result};

use super::run::{Draw, Trajectory};

type CustomFn = dyn Fn(&FiniteMeasure, &[Draw]) -> f64 + Send + Sync;

/// Scalar functionals of an urn state and the draws that led to it.
#[derive(Clone)]
pub enum Statistic {
    /// `X_n(S)`.
    Mass,
    /// `X_n(B)`.
    Evaluate(TestSet),
    /// `X_n(B) / X_n(S)`, 0 for the stopped urn.
    Fraction(TestSet),
    /// Number of atoms of `X_n`.
    DistinctAtoms,
    /// Largest atom weight divided by `X_n(S)`.
    MaxAtomFraction,
    /// Weight of the atom at the first drawn colour, divided by `X_n(S)`.
    FirstDrawFraction,
    /// Number of draws so far whose colour lies in `B`.
    DrawCount(TestSet),
    Custom(Arc<CustomFn>),
}

impl fmt::Debug for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Mass => f.write_str("Mass"),
            Statistic::Evaluate(b) => write!(f, "Evaluate({b:?})"),
            Statistic::Fraction(b) => write!(f, "Fraction({b:?})"),
            Statistic::DistinctAtoms => f.write_str("DistinctAtoms"),
            Statistic::MaxAtomFraction => f.write_str("MaxAtomFraction"),
            Statistic::FirstDrawFraction => f.write_str("FirstDrawFraction"),
            Statistic::DrawCount(b) => write!(f, "DrawCount({b:?})"),
            Statistic::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Statistic {
    pub fn custom(f: impl Fn(&FiniteMeasure, &[Draw]) -> f64 + Send + Sync + 'static) -> Self {
        Statistic::Custom(Arc::new(f))
    }

    pub fn needs_draws(&self) -> bool {
        matches!(
            self,
            Statistic::FirstDrawFraction | Statistic::DrawCount(_) | Statistic::Custom(_)
        )
    }

    /// Default label used in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Mass => "mass",
            Statistic::Evaluate(_) => "evaluate",
            Statistic::Fraction(_) => "fraction",
            Statistic::DistinctAtoms => "distinct_atoms",
            Statistic::MaxAtomFraction => "max_atom_fraction",
            Statistic::FirstDrawFraction => "first_draw_fraction",
            Statistic::DrawCount(_) => "draw_count",
            Statistic::Custom(_) => "custom",
        }
    }

    pub fn test_set(&self) -> Option<&TestSet> {
        match self {
            Statistic::Evaluate(b) | Statistic::Fraction(b) | Statistic::DrawCount(b) => Some(b),
            _ => None,
        }
    }

    pub fn evaluate(&self, state: &FiniteMeasure, draws: &[Draw]) -> Result<f64> {
        let mass = state.total_mass();
        let ratio = |x: f64| if mass > 0.0 { x / mass } else { 0.0 };
        Ok(match self {
            Statistic::Mass => mass,
            Statistic::Evaluate(b) => state.evaluate(b)?,
            Statistic::Fraction(b) => ratio(state.evaluate(b)?),
            Statistic::DistinctAtoms => state.atom_count() as f64,
            Statistic::MaxAtomFraction => ratio(state.atoms().map(|(_, w)| w).fold(0.0, f64::max)),
            Statistic::FirstDrawFraction => match draws.first() {
                Some(d) => ratio(state.atom_weight(&d.colour)),
                None => 0.0,
            },
            Statistic::DrawCount(b) => {
                b.check(state.space())?;
                draws.iter().filter(|d| b.contains(&d.colour)).count() as f64
            }
            Statistic::Custom(f) => f(state, draws),
        })
    }

    /// The statistic at the final state of a run.
    pub fn on_trajectory(&self, traj: &Trajectory) -> Result<f64> {
        if self.needs_draws() && traj.draws().len() < traj.steps_taken() {
            return Err(Error::InvalidParams(
                "statistic needs draws but the run did not keep them".into(),
            ));
        }
        self.evaluate(traj.final_measure(), traj.draws())
    }
}
