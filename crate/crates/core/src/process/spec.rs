use std::fmt;
use std::sync::Arc;

use crate::kernel::Kernel;
use crate::measure::{ColourSpace, FiniteMeasure};
use crate::rng::RandomnessStream;
use crate::{Error, Result};

type Predicate = dyn Fn(&FiniteMeasure) -> bool + Send + Sync;

/// The admissible set of states for urns with removals.
#[derive(Clone, Default)]
pub enum Admissibility {
    /// Replacements must be nonnegative.
    #[default]
    None,
    /// States are nonzero finite integer-valued atomic measures (or their
    /// products with λ).
    IntegerUrn,
    Custom(Arc<Predicate>),
}

impl fmt::Debug for Admissibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Admissibility::None => f.write_str("None"),
            Admissibility::IntegerUrn => f.write_str("IntegerUrn"),
            Admissibility::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Admissibility {
    pub fn custom(pred: impl Fn(&FiniteMeasure) -> bool + Send + Sync + 'static) -> Self {
        Admissibility::Custom(Arc::new(pred))
    }

    pub fn allows_removals(&self) -> bool {
        !matches!(self, Admissibility::None)
    }

    /// The zero measure is always admitted: it is the stopped state.
    pub fn admits(&self, m: &FiniteMeasure) -> bool {
        if m.is_zero() {
            return true;
        }
        match self {
            Admissibility::None => true,
            Admissibility::IntegerUrn => m.is_integer_valued(1e-9),
            Admissibility::Custom(pred) => pred(m),
        }
    }
}

/// Colour space, replacement kernel, initial state and admissible set.
#[derive(Clone, Debug)]
pub struct UrnSpec {
    kernel: Kernel,
    x0: FiniteMeasure,
    admissibility: Admissibility,
}

impl UrnSpec {
    pub fn new(kernel: impl Into<Kernel>, x0: FiniteMeasure) -> Result<Self> {
        Self::with_admissibility(kernel, x0, Admissibility::None)
    }

    pub fn with_admissibility(
        kernel: impl Into<Kernel>,
        x0: FiniteMeasure,
        admissibility: Admissibility,
    ) -> Result<Self> {
        let kernel = kernel.into();
        if kernel.space() != x0.space() {
            return Err(Error::SpaceMismatch);
        }
        if x0.total_mass() <= 0.0 {
            return Err(Error::ZeroMass);
        }
        if !admissibility.admits(&x0) {
            return Err(Error::InvalidParams(
                "initial state is not in the admissible set".into(),
            ));
        }
        Ok(Self {
            kernel,
            x0,
            admissibility,
        })
    }

    /// Same kernel, new initial state.
    pub fn with_x0(&self, x0: FiniteMeasure) -> Result<Self> {
        Self::with_admissibility(self.kernel.clone(), x0, self.admissibility.clone())
    }

    pub fn space(&self) -> &ColourSpace {
        self.kernel.space()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn x0(&self) -> &FiniteMeasure {
        &self.x0
    }

    pub fn admissibility(&self) -> &Admissibility {
        &self.admissibility
    }

    /// Spot-check the kernel's declared balance on `samples` inputs.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let mut stream = RandomnessStream::new(0x5eed, u64::MAX);
        self.kernel.check_balance(samples, &mut stream)
    }
}
