use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::rng::UniformSource;
use crate::{Error, Result};

/// Concrete Borel colour spaces.
///
/// `Product(base)` is always `base × [0,1]`; nesting is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColourSpace {
    Finite(usize),
    Lattice(usize),
    UnitInterval,
    Product(Box<ColourSpace>),
}

impl ColourSpace {
    pub fn product(base: ColourSpace) -> Self {
        ColourSpace::Product(Box::new(base))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ColourSpace::Finite(0) => Err(Error::InvalidParams(
                "finite space needs at least one colour".into(),
            )),
            ColourSpace::Lattice(0) => Err(Error::InvalidParams(
                "lattice dimension must be at least 1".into(),
            )),
            ColourSpace::Product(base) => base.validate(),
            _ => Ok(()),
        }
    }

    /// Number of `× [0,1]` factors.
    pub fn depth(&self) -> usize {
        match self {
            ColourSpace::Product(base) => 1 + base.depth(),
            _ => 0,
        }
    }

    /// The space with every product factor stripped.
    pub fn root(&self) -> &ColourSpace {
        match self {
            ColourSpace::Product(base) => base.root(),
            s => s,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ColourSpace::Finite(_) | ColourSpace::Lattice(_))
    }

    pub fn contains(&self, colour: &Colour) -> bool {
        match (self, colour) {
            (ColourSpace::Finite(d), Colour::Index(k)) => k < d,
            (ColourSpace::Lattice(dim), Colour::Point(p)) => p.len() == *dim,
            (ColourSpace::UnitInterval, Colour::Real(x)) => (0.0..=1.0).contains(x),
            (ColourSpace::Product(base), Colour::Pair(s, u)) => {
                (0.0..=1.0).contains(u) && base.contains(s)
            }
            _ => false,
        }
    }

    /// An arbitrary colour of the space, for spot checks of kernel contracts.
    /// Lattice coordinates are drawn from `-32..=32`.
    pub fn arbitrary_colour(&self, src: &mut impl UniformSource) -> Colour {
        match self {
            ColourSpace::Finite(d) => {
                Colour::Index(((src.uniform() * *d as f64) as usize).min(d - 1))
            }
            ColourSpace::Lattice(dim) => Colour::Point(
                (0..*dim)
                    .map(|_| (src.uniform() * 65.0) as i64 - 32)
                    .collect(),
            ),
            ColourSpace::UnitInterval => Colour::Real(src.uniform()),
            ColourSpace::Product(base) => {
                let s = base.arbitrary_colour(src);
                Colour::pair(s, src.uniform())
            }
        }
    }
}

impl fmt::Display for ColourSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColourSpace::Finite(d) => write!(f, "{{0..{}}}", d.saturating_sub(1)),
            ColourSpace::Lattice(dim) => write!(f, "Z^{dim}"),
            ColourSpace::UnitInterval => write!(f, "[0,1]"),
            ColourSpace::Product(base) => write!(f, "{base} x [0,1]"),
        }
    }
}

/// A point of a colour space.
///
/// Equality and hashing of the real coordinates are bitwise, so that two
/// atoms merge only when they sit at exactly the same colour.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Colour {
    Index(usize),
    Point(Vec<i64>),
    Real(f64),
    Pair(Box<Colour>, f64),
}

impl Colour {
    pub fn pair(base: Colour, u: f64) -> Self {
        Colour::Pair(Box::new(base), u)
    }

    /// Drop the outermost `[0,1]` coordinate.
    pub fn project(&self) -> Option<&Colour> {
        match self {
            Colour::Pair(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn as_index(&self) -> Option<usize> {
        match self {
            Colour::Index(k) => Some(*k),
            _ => None,
        }
    }
}

impl PartialEq for Colour {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Colour::Index(a), Colour::Index(b)) => a == b,
            (Colour::Point(a), Colour::Point(b)) => a == b,
            (Colour::Real(a), Colour::Real(b)) => a.to_bits() == b.to_bits(),
            (Colour::Pair(a, u), Colour::Pair(b, v)) => u.to_bits() == v.to_bits() && a == b,
            _ => false,
        }
    }
}

impl Eq for Colour {}

impl Hash for Colour {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Colour::Index(k) => k.hash(state),
            Colour::Point(p) => p.hash(state),
            Colour::Real(x) => x.to_bits().hash(state),
            Colour::Pair(s, u) => {
                s.hash(state);
                u.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Colour::Index(k) => write!(f, "{k}"),
            Colour::Point(p) => {
                write!(f, "(")?;
                for (i, c) in p.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            Colour::Real(x) => write!(f, "{x}"),
            Colour::Pair(s, u) => write!(f, "({s}, {u})"),
        }
    }
}

/// Sets on which measures can be evaluated exactly.
///
/// Intervals are closed and clipped to `[0,1]`; a list of intervals means
/// their union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSet {
    Full,
    Colours(Vec<usize>),
    Points(Vec<Vec<i64>>),
    Intervals(Vec<(f64, f64)>),
    Product {
        base: Box<TestSet>,
        intervals: Vec<(f64, f64)>,
    },
}

impl TestSet {
    pub fn colours(ks: impl IntoIterator<Item = usize>) -> Self {
        TestSet::Colours(ks.into_iter().collect())
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        TestSet::Intervals(vec![(lo, hi)])
    }

    pub fn product(base: TestSet, intervals: Vec<(f64, f64)>) -> Self {
        TestSet::Product {
            base: Box::new(base),
            intervals,
        }
    }

    /// `B × [0,1]` for every product level of `space`.
    pub fn cylinder(base: TestSet, space: &ColourSpace) -> Self {
        (0..space.depth()).fold(base, |b, _| TestSet::product(b, vec![(0.0, 1.0)]))
    }

    pub fn check(&self, space: &ColourSpace) -> Result<()> {
        let ok = match (self, space) {
            (TestSet::Full, _) => true,
            (TestSet::Colours(ks), ColourSpace::Finite(d)) => ks.iter().all(|k| k < d),
            (TestSet::Points(ps), ColourSpace::Lattice(dim)) => ps.iter().all(|p| p.len() == *dim),
            (TestSet::Intervals(iv), ColourSpace::UnitInterval) => intervals_valid(iv),
            (TestSet::Product { base, intervals }, ColourSpace::Product(inner)) => {
                return if intervals_valid(intervals) {
                    base.check(inner)
                } else {
                    Err(Error::UnsupportedTestSet)
                };
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedTestSet)
        }
    }

    pub fn contains(&self, colour: &Colour) -> bool {
        match (self, colour) {
            (TestSet::Full, _) => true,
            (TestSet::Colours(ks), Colour::Index(k)) => ks.contains(k),
            (TestSet::Points(ps), Colour::Point(p)) => ps.iter().any(|q| q == p),
            (TestSet::Intervals(iv), Colour::Real(x)) => in_union(iv, *x),
            (TestSet::Product { base, intervals }, Colour::Pair(s, u)) => {
                in_union(intervals, *u) && base.contains(s)
            }
            _ => false,
        }
    }
}

fn intervals_valid(iv: &[(f64, f64)]) -> bool {
    iv.iter().all(|(a, b)| a.is_finite() && b.is_finite() && a <= b)
}

fn in_union(iv: &[(f64, f64)], x: f64) -> bool {
    iv.iter().any(|&(a, b)| a <= x && x <= b)
}

/// Lebesgue measure of `union(iv) ∩ [lo, hi]`.
pub(crate) fn covered_length(iv: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let mut clipped: Vec<(f64, f64)> = iv
        .iter()
        .map(|&(a, b)| (a.max(lo), b.min(hi)))
        .filter(|(a, b)| a < b)
        .collect();
    clipped.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (a, b) in clipped {
        current = match current {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((ca, cb)) = current {
        total += cb - ca;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_length_merges_overlaps() {
        assert_eq!(covered_length(&[(0.0, 0.25)], 0.0, 1.0), 0.25);
        assert_eq!(covered_length(&[(0.0, 0.5), (0.25, 0.75)], 0.0, 1.0), 0.75);
        assert_eq!(covered_length(&[(-1.0, 2.0)], 0.0, 1.0), 1.0);
        assert!((covered_length(&[(0.6, 0.7), (0.1, 0.2)], 0.0, 1.0) - 0.2).abs() < 1e-15);
        assert_eq!(covered_length(&[], 0.0, 1.0), 0.0);
    }

    #[test]
    fn colour_equality_is_bitwise() {
        assert_eq!(Colour::Real(0.5), Colour::Real(0.5));
        assert_ne!(Colour::Real(0.0), Colour::Real(-0.0));
        assert_eq!(
            Colour::pair(Colour::Index(1), 0.7),
            Colour::pair(Colour::Index(1), 0.7)
        );
        assert_ne!(Colour::Index(1), Colour::Real(1.0));
    }

    #[test]
    fn membership() {
        let s = ColourSpace::product(ColourSpace::Finite(2));
        assert!(s.contains(&Colour::pair(Colour::Index(1), 0.3)));
        assert!(!s.contains(&Colour::pair(Colour::Index(2), 0.3)));
        assert!(!s.contains(&Colour::Index(0)));
        assert_eq!(s.depth(), 1);
        assert_eq!(s.root(), &ColourSpace::Finite(2));
        assert!(ColourSpace::Lattice(2).contains(&Colour::Point(vec![-3, 4])));
        assert!(ColourSpace::Finite(0).validate().is_err());
    }

    #[test]
    fn test_sets_check_against_space() {
        let s = ColourSpace::product(ColourSpace::UnitInterval);
        let b = TestSet::product(TestSet::interval(0.0, 0.5), vec![(0.2, 0.4)]);
        assert!(b.check(&s).is_ok());
        assert!(TestSet::colours([0]).check(&s).is_err());
        assert!(TestSet::colours([2]).check(&ColourSpace::Finite(2)).is_err());
        assert!(b.contains(&Colour::pair(Colour::Real(0.1), 0.3)));
        assert!(!b.contains(&Colour::pair(Colour::Real(0.1), 0.5)));
    }

    #[test]
    fn serde_shapes() {
        let s = ColourSpace::product(ColourSpace::Finite(2));
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"product":{"finite":2}}"#);
        assert_eq!(
            serde_json::to_string(&ColourSpace::UnitInterval).unwrap(),
            r#""unit_interval""#
        );
        let c: Colour = serde_json::from_str(r#"{"pair":[{"index":1},0.7]}"#).unwrap();
        assert_eq!(c, Colour::pair(Colour::Index(1), 0.7));
        let t: TestSet = serde_json::from_str(r#"{"colours":[0]}"#).unwrap();
        assert_eq!(t, TestSet::colours([0]));
    }
}
