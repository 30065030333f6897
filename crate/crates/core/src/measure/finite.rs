use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::space::{covered_length, Colour, ColourSpace, TestSet};
use crate::rng::UniformSource;
use crate::{Error, Result};

/// Diffuse probability laws a component can carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuousFamily {
    /// Uniform on `[lo, hi] ⊆ [0,1]`; `Uniform { lo: 0, hi: 1 }` is λ.
    Uniform { lo: f64, hi: f64 },
}

impl ContinuousFamily {
    pub fn lebesgue() -> Self {
        ContinuousFamily::Uniform { lo: 0.0, hi: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ContinuousFamily::Uniform { .. } => "uniform",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ContinuousFamily::Uniform { lo, hi } if 0.0 <= lo && lo < hi && hi <= 1.0 => Ok(()),
            ContinuousFamily::Uniform { lo, hi } => Err(Error::InvalidParams(format!(
                "uniform family needs 0 <= lo < hi <= 1, got [{lo}, {hi}]"
            ))),
        }
    }

    fn space(&self) -> ColourSpace {
        ColourSpace::UnitInterval
    }

    fn sample(&self, src: &mut impl UniformSource) -> Colour {
        match *self {
            ContinuousFamily::Uniform { lo, hi } => Colour::Real(lo + (hi - lo) * src.uniform()),
        }
    }

    /// Probability of a test set.
    fn probability(&self, set: &TestSet) -> Result<f64> {
        match (*self, set) {
            (_, TestSet::Full) => Ok(1.0),
            (ContinuousFamily::Uniform { lo, hi }, TestSet::Intervals(iv)) => {
                Ok(covered_length(iv, lo, hi) / (hi - lo))
            }
            _ => Err(Error::UnsupportedTestSet),
        }
    }

    fn same(&self, other: &Self) -> bool {
        match (self, other) {
            (
                ContinuousFamily::Uniform { lo: a, hi: b },
                ContinuousFamily::Uniform { lo: c, hi: d },
            ) => a.to_bits() == c.to_bits() && b.to_bits() == d.to_bits(),
        }
    }
}

/// What a component's mass is spread over.
#[derive(Debug, Clone)]
pub enum Payload {
    Atom(Colour),
    Continuous(ContinuousFamily),
    /// `inner × λ`, living one product level above `inner`.
    ProductWithLambda(Box<Payload>),
}

impl PartialEq for Payload {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Payload::Atom(a), Payload::Atom(b)) => a == b,
            (Payload::Continuous(a), Payload::Continuous(b)) => a.same(b),
            (Payload::ProductWithLambda(a), Payload::ProductWithLambda(b)) => a == b,
            _ => false,
        }
    }
}

impl Payload {
    pub fn lifted(inner: Payload) -> Self {
        Payload::ProductWithLambda(Box::new(inner))
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Payload::Atom(_))
    }

    /// Atom, possibly wrapped in any number of `× λ` factors.
    pub fn is_atomic_core(&self) -> bool {
        match self {
            Payload::Atom(_) => true,
            Payload::ProductWithLambda(inner) => inner.is_atomic_core(),
            Payload::Continuous(_) => false,
        }
    }

    pub fn lives_in(&self, space: &ColourSpace) -> bool {
        match (self, space) {
            (Payload::Atom(c), s) => s.contains(c),
            (Payload::Continuous(f), s) => &f.space() == s,
            (Payload::ProductWithLambda(inner), ColourSpace::Product(base)) => inner.lives_in(base),
            _ => false,
        }
    }

    // `depth` is the product depth of the space the payload lives in.
    fn sample(&self, depth: usize, src: &mut impl UniformSource) -> Colour {
        match self {
            Payload::Atom(c) => c.clone(),
            Payload::Continuous(f) => f.sample(src),
            Payload::ProductWithLambda(inner) => {
                let s = inner.sample(depth - 1, src);
                Colour::pair(s, src.coordinate(depth))
            }
        }
    }

    fn probability(&self, set: &TestSet) -> Result<f64> {
        match (self, set) {
            (Payload::Atom(c), set) => Ok(if set.contains(c) { 1.0 } else { 0.0 }),
            (Payload::Continuous(f), set) => f.probability(set),
            (Payload::ProductWithLambda(_), TestSet::Full) => Ok(1.0),
            (Payload::ProductWithLambda(inner), TestSet::Product { base, intervals }) => {
                Ok(inner.probability(base)? * covered_length(intervals, 0.0, 1.0))
            }
            _ => Err(Error::UnsupportedTestSet),
        }
    }

    fn project(&self) -> Result<Payload> {
        match self {
            Payload::ProductWithLambda(inner) => Ok((**inner).clone()),
            Payload::Atom(Colour::Pair(s, _)) => Ok(Payload::Atom((**s).clone())),
            _ => Err(Error::NotProductSpace),
        }
    }
}

/// A weighted payload; weights are strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub payload: Payload,
}

impl Component {
    pub fn new(weight: f64, payload: Payload) -> Self {
        Self { weight, payload }
    }

    pub fn atom(weight: f64, colour: Colour) -> Self {
        Self::new(weight, Payload::Atom(colour))
    }
}

/// A finite measure on a colour space, held as a list of components.
///
/// Components with identical payloads are merged, so every payload occurs at
/// most once.
#[derive(Debug, Clone)]
pub struct FiniteMeasure {
    space: ColourSpace,
    components: Vec<Component>,
    mass: f64,
}

impl PartialEq for FiniteMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.components == other.components
    }
}

impl FiniteMeasure {
    pub fn zero(space: ColourSpace) -> Self {
        Self {
            space,
            components: Vec::new(),
            mass: 0.0,
        }
    }

    pub fn from_components(
        space: ColourSpace,
        components: impl IntoIterator<Item = Component>,
    ) -> Result<Self> {
        space.validate()?;
        let mut m = Self::zero(space);
        for c in components {
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "component weight must be finite and nonnegative, got {}",
                    c.weight
                )));
            }
            if !c.payload.lives_in(&m.space) {
                return Err(Error::SpaceMismatch);
            }
            if let Payload::Continuous(f) = &c.payload {
                f.validate()?;
            }
            m.push(c);
        }
        Ok(m)
    }

    /// `Σ w_i δ_i` on `Finite(weights.len())`; zero weights are skipped.
    pub fn discrete(weights: &[f64]) -> Result<Self> {
        Self::from_components(
            ColourSpace::Finite(weights.len()),
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| Component::atom(w, Colour::Index(i))),
        )
    }

    pub fn atom(space: ColourSpace, colour: Colour, weight: f64) -> Result<Self> {
        Self::from_components(space, [Component::atom(weight, colour)])
    }

    /// `weight · λ` on the unit interval.
    pub fn lebesgue(weight: f64) -> Result<Self> {
        Self::from_components(
            ColourSpace::UnitInterval,
            [Component::new(
                weight,
                Payload::Continuous(ContinuousFamily::lebesgue()),
            )],
        )
    }

    pub fn space(&self) -> &ColourSpace {
        &self.space
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn total_mass(&self) -> f64 {
        self.mass
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    fn push(&mut self, c: Component) {
        if c.weight == 0.0 {
            return;
        }
        self.mass += c.weight;
        match self.components.iter_mut().find(|e| e.payload == c.payload) {
            Some(existing) => existing.weight += c.weight,
            None => self.components.push(c),
        }
    }

    fn recompute_mass(&mut self) {
        // Fold from +0: an empty f64 sum is -0.
        self.mass = self.components.iter().fold(0.0, |acc, c| acc + c.weight);
    }

    pub fn add(&self, other: &FiniteMeasure) -> Result<FiniteMeasure> {
        let mut out = self.clone();
        out.absorb(other)?;
        Ok(out)
    }

    pub(crate) fn absorb(&mut self, other: &FiniteMeasure) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        for c in &other.components {
            self.push(c.clone());
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> FiniteMeasure {
        let mut out = Self::zero(self.space.clone());
        if factor > 0.0 {
            out.components = self
                .components
                .iter()
                .map(|c| Component::new(c.weight * factor, c.payload.clone()))
                .collect();
            out.recompute_mass();
        }
        out
    }

    /// `μ / μ(S)`.
    pub fn normalize(&self) -> Result<FiniteMeasure> {
        if self.mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(self.scaled(1.0 / self.mass))
    }

    /// Draw a colour from `μ / μ(S)`: one uniform picks the component by
    /// cumulative weight, then the component is sampled.
    pub fn sample(&self, src: &mut impl UniformSource) -> Result<Colour> {
        let index = self.select_component(src.uniform())?;
        Ok(self.components[index]
            .payload
            .sample(self.space.depth(), src))
    }

    fn select_component(&self, u: f64) -> Result<usize> {
        if self.components.is_empty() || self.mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let target = u * self.mass;
        let mut cumulative = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            cumulative += c.weight;
            if target < cumulative {
                return Ok(i);
            }
        }
        Ok(self.components.len() - 1)
    }

    /// Exact mass of a test set.
    pub fn evaluate(&self, set: &TestSet) -> Result<f64> {
        set.check(&self.space)?;
        let mut total = 0.0;
        for c in &self.components {
            total += c.weight * c.payload.probability(set)?;
        }
        Ok(total)
    }

    /// `μ × λ` on `space × [0,1]`.
    pub fn product_with_uniform(&self) -> FiniteMeasure {
        FiniteMeasure {
            space: ColourSpace::product(self.space.clone()),
            components: self
                .components
                .iter()
                .map(|c| Component::new(c.weight, Payload::lifted(c.payload.clone())))
                .collect(),
            mass: self.mass,
        }
    }

    /// Push-forward along the projection `space × [0,1] → space`.
    pub fn project(&self) -> Result<FiniteMeasure> {
        let ColourSpace::Product(base) = &self.space else {
            return Err(Error::NotProductSpace);
        };
        let mut out = FiniteMeasure::zero((**base).clone());
        for c in &self.components {
            out.push(Component::new(c.weight, c.payload.project()?));
        }
        out.recompute_mass();
        Ok(out)
    }

    /// Project down until the measure lives on `target`.
    pub fn project_to(&self, target: &ColourSpace) -> Result<FiniteMeasure> {
        let mut m = self.clone();
        while &m.space != target {
            m = m.project()?;
        }
        Ok(m)
    }

    /// True iff every component is of the form `inner × λ`.
    pub fn is_product_form(&self) -> bool {
        self.components
            .iter()
            .all(|c| matches!(c.payload, Payload::ProductWithLambda(_)))
    }

    /// Weight of the atom at `colour` (0 if absent).
    pub fn atom_weight(&self, colour: &Colour) -> f64 {
        self.components
            .iter()
            .find(|c| matches!(&c.payload, Payload::Atom(a) if a == colour))
            .map_or(0.0, |c| c.weight)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Colour, f64)> {
        self.components.iter().filter_map(|c| match &c.payload {
            Payload::Atom(a) => Some((a, c.weight)),
            _ => None,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms().count()
    }

    /// Every weight is within `tol` of a nonnegative integer and every
    /// component is an atom (possibly times λ factors).
    pub fn is_integer_valued(&self, tol: f64) -> bool {
        self.components
            .iter()
            .all(|c| c.payload.is_atomic_core() && (c.weight - c.weight.round()).abs() <= tol)
    }

    /// Add a signed atomic measure. Resulting atoms within `1e-12` below zero
    /// are clamped to zero and dropped.
    pub fn add_signed(&self, signed: &super::SignedAtomicMeasure) -> Result<FiniteMeasure> {
        if signed.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        self.add_signed_payloads(signed.atoms().iter().map(|(c, w)| {
            (Payload::Atom(c.clone()), *w, c)
        }))
    }

    /// Add `σ × λ` where `σ` lives on the base of this product space.
    pub fn add_signed_product(&self, signed: &super::SignedAtomicMeasure) -> Result<FiniteMeasure> {
        match &self.space {
            ColourSpace::Product(base) if **base == *signed.space() => {}
            ColourSpace::Product(_) => return Err(Error::SpaceMismatch),
            _ => return Err(Error::NotProductSpace),
        }
        self.add_signed_payloads(signed.atoms().iter().map(|(c, w)| {
            (Payload::lifted(Payload::Atom(c.clone())), *w, c)
        }))
    }

    fn add_signed_payloads<'a>(
        &self,
        terms: impl Iterator<Item = (Payload, f64, &'a Colour)>,
    ) -> Result<FiniteMeasure> {
        const CLAMP: f64 = -1e-12;
        let mut out = self.clone();
        for (payload, w, colour) in terms {
            match out.components.iter().position(|c| c.payload == payload) {
                Some(i) => {
                    let new = out.components[i].weight + w;
                    if new < CLAMP {
                        return Err(Error::NegativeMass(colour.clone()));
                    }
                    if new <= 0.0 {
                        out.components.remove(i);
                    } else {
                        out.components[i].weight = new;
                    }
                }
                None if w > 0.0 => out.components.push(Component::new(w, payload)),
                None => return Err(Error::NegativeMass(colour.clone())),
            }
        }
        out.recompute_mass();
        Ok(out)
    }

    fn merged(&self) -> HashMap<PayloadKey<'_>, f64> {
        let mut map = HashMap::new();
        for c in &self.components {
            *map.entry(PayloadKey(&c.payload)).or_insert(0.0) += c.weight;
        }
        map
    }

    /// Compare component by component with relative weight tolerance `tol`.
    ///
    /// Atoms present in only one measure make the result `false`; a continuous
    /// or product component present in only one is `Incomparable`.
    pub fn approx_equal(&self, other: &FiniteMeasure, tol: f64) -> Result<bool> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        let (a, b) = (self.merged(), other.merged());
        let mut equal = true;
        for (key, &wa) in &a {
            match b.get(key) {
                Some(&wb) => {
                    if (wa - wb).abs() > tol * wa.abs().max(wb.abs()) {
                        equal = false;
                    }
                }
                None if key.0.is_atom() => equal = false,
                None => return Err(Error::Incomparable),
            }
        }
        for key in b.keys() {
            if !a.contains_key(key) {
                if key.0.is_atom() {
                    equal = false;
                } else {
                    return Err(Error::Incomparable);
                }
            }
        }
        Ok(equal)
    }

    /// Largest absolute weight difference over all payloads, a missing payload
    /// counting as weight 0.
    pub fn max_weight_difference(&self, other: &FiniteMeasure) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        let (a, b) = (self.merged(), other.merged());
        let mut worst: f64 = 0.0;
        for (key, &wa) in &a {
            worst = worst.max((wa - b.get(key).copied().unwrap_or(0.0)).abs());
        }
        for (key, &wb) in &b {
            if !a.contains_key(key) {
                worst = worst.max(wb.abs());
            }
        }
        Ok(worst)
    }
}

// Hashable view of a payload for order-insensitive comparisons.
#[derive(PartialEq)]
struct PayloadKey<'a>(&'a Payload);

impl Eq for PayloadKey<'_> {}

impl std::hash::Hash for PayloadKey<'_> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        fn go<H: std::hash::Hasher>(p: &Payload, state: &mut H) {
            match p {
                Payload::Atom(c) => {
                    0u8.hash(state);
                    c.hash(state);
                }
                Payload::Continuous(ContinuousFamily::Uniform { lo, hi }) => {
                    1u8.hash(state);
                    lo.to_bits().hash(state);
                    hi.to_bits().hash(state);
                }
                Payload::ProductWithLambda(inner) => {
                    2u8.hash(state);
                    go(inner, state);
                }
            }
        }
        go(self.0, state)
    }
}

// JSON form: {"space": ..., "components": [{"w": .., "atom": ..} |
// {"w": .., "family": .., "params": ..} | {"w": .., "product_lambda": {..}}]}.
// The object under "product_lambda" is a payload, without "w".

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentRepr {
    #[serde(skip_serializing_if = "Option::is_none")]
    w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    atom: Option<Colour>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<UniformParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    product_lambda: Option<Box<ComponentRepr>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UniformParams {
    #[serde(default)]
    lo: f64,
    #[serde(default = "one")]
    hi: f64,
}

fn one() -> f64 {
    1.0
}

impl ComponentRepr {
    fn from_payload(w: Option<f64>, p: &Payload) -> Self {
        let mut r = ComponentRepr {
            w,
            atom: None,
            family: None,
            params: None,
            product_lambda: None,
        };
        match p {
            Payload::Atom(c) => r.atom = Some(c.clone()),
            Payload::Continuous(f @ ContinuousFamily::Uniform { lo, hi }) => {
                r.family = Some(f.name().to_string());
                r.params = Some(UniformParams { lo: *lo, hi: *hi });
            }
            Payload::ProductWithLambda(inner) => {
                r.product_lambda = Some(Box::new(Self::from_payload(None, inner)))
            }
        }
        r
    }

    fn into_payload(self) -> std::result::Result<Payload, String> {
        match (self.atom, self.family, self.product_lambda) {
            (Some(c), None, None) if self.params.is_none() => Ok(Payload::Atom(c)),
            (None, Some(family), None) => match family.as_str() {
                "uniform" => {
                    let p = self.params.unwrap_or(UniformParams { lo: 0.0, hi: 1.0 });
                    let f = ContinuousFamily::Uniform { lo: p.lo, hi: p.hi };
                    f.validate().map_err(|e| e.to_string())?;
                    Ok(Payload::Continuous(f))
                }
                other => Err(format!("unknown continuous family `{other}`")),
            },
            (None, None, Some(inner)) if self.params.is_none() => {
                if inner.w.is_some() {
                    return Err("payload under `product_lambda` takes no `w`".into());
                }
                Ok(Payload::lifted(inner.into_payload()?))
            }
            _ => Err("component needs exactly one of `atom`, `family`, `product_lambda`".into()),
        }
    }
}

impl Serialize for Component {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ComponentRepr::from_payload(Some(self.weight), &self.payload).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Component {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ComponentRepr::deserialize(d)?;
        let w = repr
            .w
            .ok_or_else(|| serde::de::Error::custom("component is missing `w`"))?;
        if !(w.is_finite() && w > 0.0) {
            return Err(serde::de::Error::custom(format!(
                "component weight must be positive, got {w}"
            )));
        }
        let payload = repr.into_payload().map_err(serde::de::Error::custom)?;
        Ok(Component::new(w, payload))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureRepr {
    space: ColourSpace,
    components: Vec<Component>,
}

impl Serialize for FiniteMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRepr {
            space: self.space.clone(),
            components: self.components.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MeasureRepr::deserialize(d)?;
        FiniteMeasure::from_components(repr.space, repr.components)
            .map_err(serde::de::Error::custom)
    }
}
