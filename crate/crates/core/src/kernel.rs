//! Replacement kernels.
//!
//! A deterministic kernel maps a drawn colour `s` to the measure `R_s` added
//! to the urn. A random kernel is given by its representation `f(s, u)`: a
//! pure function of the colour and a single uniform `u`, such that `f(s, U)`
//! with `U ~ U(0,1)` has the intended replacement law. Kernels that need more
//! randomness split `u` with [`split_uniform`].

use std::fmt;
use std::sync::Arc;

use crate::measure::{Colour, ColourSpace, Component, FiniteMeasure, SignedAtomicMeasure};
use crate::rng::{RandomnessStream, UniformSource};
use crate::{Error, Result};

pub use crate::rng::split_uniform;

/// What a kernel adds to the urn.
#[derive(Debug, Clone, PartialEq)]
pub enum Replacement {
    /// A nonnegative finite measure.
    Add(FiniteMeasure),
    /// Signed atoms; allowed only in urns with an admissible set.
    Signed(SignedAtomicMeasure),
    /// `σ × λ` for signed atoms `σ` on the base of a product space.
    SignedProduct(SignedAtomicMeasure),
}

impl Replacement {
    pub fn space(&self) -> ColourSpace {
        match self {
            Replacement::Add(m) => m.space().clone(),
            Replacement::Signed(s) => s.space().clone(),
            Replacement::SignedProduct(s) => ColourSpace::product(s.space().clone()),
        }
    }

    /// Signed total mass.
    pub fn total_mass(&self) -> f64 {
        match self {
            Replacement::Add(m) => m.total_mass(),
            Replacement::Signed(s) | Replacement::SignedProduct(s) => s.total_mass(),
        }
    }

    pub fn has_removals(&self) -> bool {
        match self {
            Replacement::Add(_) => false,
            Replacement::Signed(s) | Replacement::SignedProduct(s) => !s.is_nonnegative(),
        }
    }

    pub fn is_signed(&self) -> bool {
        !matches!(self, Replacement::Add(_))
    }

    /// `R × λ`.
    pub fn product_with_uniform(&self) -> Result<Replacement> {
        match self {
            Replacement::Add(m) => Ok(Replacement::Add(m.product_with_uniform())),
            Replacement::Signed(s) => Ok(Replacement::SignedProduct(s.clone())),
            Replacement::SignedProduct(_) => Err(Error::InvalidParams(
                "signed replacements can be lifted only once".into(),
            )),
        }
    }

    /// Push-forward along the last coordinate projection.
    pub fn project(&self) -> Result<Replacement> {
        match self {
            Replacement::Add(m) => Ok(Replacement::Add(m.project()?)),
            Replacement::SignedProduct(s) => Ok(Replacement::Signed(s.clone())),
            Replacement::Signed(s) => {
                let atoms = s
                    .atoms()
                    .iter()
                    .map(|(c, w)| {
                        c.project()
                            .cloned()
                            .map(|c| (c, *w))
                            .ok_or(Error::NotProductSpace)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let ColourSpace::Product(base) = s.space() else {
                    return Err(Error::NotProductSpace);
                };
                Ok(Replacement::Signed(SignedAtomicMeasure::new(
                    (**base).clone(),
                    atoms,
                )?))
            }
        }
    }

    /// `μ + R`.
    pub fn apply_to(&self, mu: &FiniteMeasure) -> Result<FiniteMeasure> {
        match self {
            Replacement::Add(m) => mu.add(m),
            Replacement::Signed(s) => mu.add_signed(s),
            Replacement::SignedProduct(s) => mu.add_signed_product(s),
        }
    }
}

type DeterministicFn = dyn Fn(&Colour) -> Replacement + Send + Sync;
type RandomFn = dyn Fn(&Colour, f64) -> Replacement + Send + Sync;

#[derive(Clone)]
enum DeterministicEval {
    Fn(Arc<DeterministicFn>),
    // (s, u) ↦ f(s, u) × λ on S × [0,1].
    Lifted(RandomKernel),
}

/// `s ↦ R_s`.
#[derive(Clone)]
pub struct DeterministicKernel {
    name: String,
    space: ColourSpace,
    eval: DeterministicEval,
    declared_balance: Option<f64>,
}

impl DeterministicKernel {
    pub fn new(
        name: impl Into<String>,
        space: ColourSpace,
        eval: impl Fn(&Colour) -> Replacement + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            space,
            eval: DeterministicEval::Fn(Arc::new(eval)),
            declared_balance: None,
        }
    }

    /// The deterministic kernel `R̃_{(s,u)} = f(s, u) × λ` on `S × [0,1]`.
    pub fn lifted(f: &RandomKernel) -> Self {
        Self {
            name: format!("lift({})", f.name),
            space: ColourSpace::product(f.space.clone()),
            eval: DeterministicEval::Lifted(f.clone()),
            declared_balance: f.declared_balance,
        }
    }

    /// Declare that every `R_s` has total mass `a`.
    pub fn with_balance(mut self, a: f64) -> Self {
        self.declared_balance = Some(a);
        self
    }

    pub fn eval(&self, s: &Colour) -> Result<Replacement> {
        if !self.space.contains(s) {
            return Err(Error::ColourMismatch(s.clone()));
        }
        let r = match &self.eval {
            DeterministicEval::Fn(f) => f(s),
            DeterministicEval::Lifted(f) => {
                let Colour::Pair(base, u) = s else {
                    return Err(Error::ColourMismatch(s.clone()));
                };
                f.eval(base, *u)?.product_with_uniform()?
            }
        };
        if r.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(r)
    }
}

/// `(s, u) ↦ f(s, u)`.
#[derive(Clone)]
pub struct RandomKernel {
    name: String,
    space: ColourSpace,
    eval: Arc<RandomFn>,
    declared_balance: Option<f64>,
}

impl RandomKernel {
    pub fn new(
        name: impl Into<String>,
        space: ColourSpace,
        eval: impl Fn(&Colour, f64) -> Replacement + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            space,
            eval: Arc::new(eval),
            declared_balance: None,
        }
    }

    pub fn with_balance(mut self, a: f64) -> Self {
        self.declared_balance = Some(a);
        self
    }

    pub fn eval(&self, s: &Colour, u: f64) -> Result<Replacement> {
        if !self.space.contains(s) {
            return Err(Error::ColourMismatch(s.clone()));
        }
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::UniformOutOfRange(u));
        }
        let r = (self.eval)(s, u);
        if r.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(r)
    }
}

#[derive(Clone)]
pub enum Kernel {
    Deterministic(DeterministicKernel),
    Random(RandomKernel),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, name, space, balance) = match self {
            Kernel::Deterministic(k) => ("deterministic", &k.name, &k.space, k.declared_balance),
            Kernel::Random(k) => ("random", &k.name, &k.space, k.declared_balance),
        };
        f.debug_struct("Kernel")
            .field("kind", &kind)
            .field("name", name)
            .field("space", space)
            .field("declared_balance", &balance)
            .finish()
    }
}

impl From<DeterministicKernel> for Kernel {
    fn from(k: DeterministicKernel) -> Self {
        Kernel::Deterministic(k)
    }
}

impl From<RandomKernel> for Kernel {
    fn from(k: RandomKernel) -> Self {
        Kernel::Random(k)
    }
}

impl Kernel {
    pub fn name(&self) -> &str {
        match self {
            Kernel::Deterministic(k) => &k.name,
            Kernel::Random(k) => &k.name,
        }
    }

    pub fn space(&self) -> &ColourSpace {
        match self {
            Kernel::Deterministic(k) => &k.space,
            Kernel::Random(k) => &k.space,
        }
    }

    pub fn declared_balance(&self) -> Option<f64> {
        match self {
            Kernel::Deterministic(k) => k.declared_balance,
            Kernel::Random(k) => k.declared_balance,
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Kernel::Random(_))
    }

    /// Evaluate with kernel uniform `u`; deterministic kernels ignore it.
    pub fn eval(&self, s: &Colour, u: f64) -> Result<Replacement> {
        match self {
            Kernel::Deterministic(k) => k.eval(s),
            Kernel::Random(k) => k.eval(s, u),
        }
    }

    /// Spot-check the declared balance on `samples` arbitrary inputs.
    pub fn check_balance(&self, samples: usize, stream: &mut RandomnessStream) -> Result<()> {
        let Some(a) = self.declared_balance() else {
            return Ok(());
        };
        for _ in 0..samples {
            let s = self.space().arbitrary_colour(stream);
            let u = stream.uniform();
            let mass = self.eval(&s, u)?.total_mass();
            if (mass - a).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(Error::BalanceViolated {
                    colour: s,
                    declared: a,
                    actual: mass,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityViolation {
    pub sample: usize,
    pub colour: Colour,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub samples: usize,
    pub violations: Vec<AdmissibilityViolation>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<&AdmissibilityViolation> {
        self.violations.first()
    }
}

/// Check `μ + R_s` stays admissible for `samples` colours drawn from `μ/μ(S)`.
///
/// With `integer_urn`, the result must also be a nonnegative integer-valued
/// atomic measure.
pub fn check_admissibility(
    kernel: &Kernel,
    mu: &FiniteMeasure,
    samples: usize,
    stream: &mut RandomnessStream,
    integer_urn: bool,
) -> Result<AdmissibilityReport> {
    if mu.is_zero() {
        return Err(Error::ZeroMass);
    }
    let mut violations = Vec::new();
    for sample in 0..samples {
        let s = mu.sample(stream)?;
        let u = stream.uniform();
        let reason = match kernel.eval(&s, u).and_then(|r| r.apply_to(mu)) {
            Err(e) => Some(e.to_string()),
            Ok(next) if integer_urn && !next.is_integer_valued(1e-9) => {
                Some("result is not integer-valued".to_string())
            }
            Ok(_) => None,
        };
        if let Some(reason) = reason {
            violations.push(AdmissibilityViolation {
                sample,
                colour: s,
                reason,
            });
        }
    }
    Ok(AdmissibilityReport {
        samples,
        violations,
    })
}

/// `R_s = a·δ_s`.
pub fn polya(space: ColourSpace, a: f64) -> DeterministicKernel {
    let sp = space.clone();
    DeterministicKernel::new("polya", space, move |s| {
        Replacement::Add(
            FiniteMeasure::from_components(sp.clone(), [Component::atom(a, s.clone())])
                .expect("drawn colour lies in the space"),
        )
    })
    .with_balance(a)
}

/// `R_s = 0`.
pub fn zero(space: ColourSpace) -> DeterministicKernel {
    let sp = space.clone();
    DeterministicKernel::new("zero", space, move |_| {
        Replacement::Add(FiniteMeasure::zero(sp.clone()))
    })
    .with_balance(0.0)
}

/// Two colours: add `δ_s` if `u < p`, else `δ_{1-s}`.
pub fn friedman(p: f64) -> RandomKernel {
    RandomKernel::new("friedman", ColourSpace::Finite(2), move |s, u| {
        let k = s.as_index().expect("finite colour");
        let added = if u < p { k } else { 1 - k };
        Replacement::Add(
            FiniteMeasure::atom(ColourSpace::Finite(2), Colour::Index(added), 1.0)
                .expect("index below 2"),
        )
    })
    .with_balance(1.0)
}

fn pick_by_uniform<T>(law: &[(T, f64)], u: f64) -> &T {
    let mut cumulative = 0.0;
    for (item, p) in law {
        cumulative += p;
        if u < cumulative {
            return item;
        }
    }
    // u beyond the fp sum of the law: take the last item with positive mass.
    &law
        .iter()
        .rev()
        .find(|(_, p)| *p > 0.0)
        .unwrap_or(&law[law.len() - 1])
        .0
}

/// Translation-invariant kernel on `Z^dim`: add `δ_{s+ξ}` with `ξ` drawn from
/// `steps` by inverse CDF on `u`.
pub fn lattice_step(dim: usize, steps: Vec<(Vec<i64>, f64)>) -> Result<RandomKernel> {
    crate::models::check_law(steps.iter().map(|(_, p)| *p))?;
    if steps.iter().any(|(o, _)| o.len() != dim) {
        return Err(Error::InvalidParams(format!(
            "every offset must have {dim} coordinates"
        )));
    }
    let space = ColourSpace::Lattice(dim);
    let sp = space.clone();
    Ok(RandomKernel::new("lattice_step", space, move |s, u| {
        let Colour::Point(p) = s else {
            unreachable!("lattice colour")
        };
        let offset = pick_by_uniform(&steps, u);
        let target = p.iter().zip(offset).map(|(a, b)| a + b).collect();
        Replacement::Add(
            FiniteMeasure::atom(sp.clone(), Colour::Point(target), 1.0).expect("lattice point"),
        )
    })
    .with_balance(1.0))
}

fn discard_and_add_row(d: usize, s: usize, row: &[u64]) -> Replacement {
    let atoms = std::iter::once((Colour::Index(s), -1.0)).chain(
        row.iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(j, &n)| (Colour::Index(j), n as f64)),
    );
    Replacement::Signed(
        SignedAtomicMeasure::new(ColourSpace::Finite(d), atoms).expect("indices below d"),
    )
}

fn row_balance(rows: impl Iterator<Item = u64>) -> Option<f64> {
    let sums: Vec<u64> = rows.collect();
    match sums.first() {
        Some(&first) if sums.iter().all(|&s| s == first) => Some(first as f64 - 1.0),
        _ => None,
    }
}

/// Drawing without replacement: discard the drawn ball `s`, add
/// `addition[s][j]` balls of each colour `j`, i.e. `R_s = −δ_s + Σ_j a_sj δ_j`.
///
/// Balanced (declared) when all rows have the same sum.
pub fn discard_and_add(addition: Vec<Vec<u64>>) -> Result<DeterministicKernel> {
    let d = addition.len();
    if d == 0 || addition.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidParams("addition must be a square matrix".into()));
    }
    let balance = row_balance(addition.iter().map(|r| r.iter().sum()));
    let k = DeterministicKernel::new("without_replacement", ColourSpace::Finite(d), move |s| {
        let k = s.as_index().expect("finite colour");
        discard_and_add_row(d, k, &addition[k])
    });
    Ok(match balance {
        Some(a) => k.with_balance(a),
        None => k,
    })
}

/// Random drawing without replacement: for drawn colour `s`, a row is chosen
/// from `law[s]` by `u`, then `s` is discarded and the row added.
pub fn random_discard_and_add(law: Vec<Vec<(Vec<u64>, f64)>>) -> Result<RandomKernel> {
    let d = law.len();
    if d == 0 {
        return Err(Error::InvalidParams("law needs at least one colour".into()));
    }
    for rows in &law {
        crate::models::check_law(rows.iter().map(|(_, p)| *p))?;
        if rows.iter().any(|(r, _)| r.len() != d) {
            return Err(Error::InvalidParams(format!("every row must have {d} entries")));
        }
    }
    let balance = row_balance(
        law.iter()
            .flat_map(|rows| rows.iter().filter(|(_, p)| *p > 0.0))
            .map(|(r, _)| r.iter().sum()),
    );
    let k = RandomKernel::new(
        "random_without_replacement",
        ColourSpace::Finite(d),
        move |s, u| {
            let k = s.as_index().expect("finite colour");
            discard_and_add_row(d, k, pick_by_uniform(&law[k], u))
        },
    );
    Ok(match balance {
        Some(a) => k.with_balance(a),
        None => k,
    })
}
