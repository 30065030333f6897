//! Built-in urns.
//!
//! Each model is a plain constructor returning an [`UrnSpec`], and is also
//! reachable by name with JSON parameters through [`build`].

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::kernel;
use crate::measure::{Colour, ColourSpace, FiniteMeasure};
use crate::process::{Admissibility, UrnSpec};
use crate::{Error, Result};

/// A probability vector: nonempty, finite, nonnegative, summing to 1.
pub(crate) fn check_law(probs: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut n = 0usize;
    for p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidProbabilities(format!("entry {p} is not in [0, 1]")));
        }
        total += p;
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidProbabilities("empty law".into()));
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbabilities(format!("sums to {total}, not 1")));
    }
    Ok(())
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive, got {x}")))
    }
}

/// Classical Pólya urn on `d ≥ 2` colours: return the ball with `a` more of
/// its colour. `X₀ = Σ w_i δ_i`.
pub fn eggenberger_polya(a: f64, w: &[f64]) -> Result<UrnSpec> {
    positive("a", a)?;
    if w.len() < 2 {
        return Err(Error::InvalidParams("w needs at least two colours".into()));
    }
    for &x in w {
        positive("every initial weight", x)?;
    }
    let x0 = FiniteMeasure::discrete(w)?;
    UrnSpec::new(kernel::polya(ColourSpace::Finite(w.len()), a), x0)
}

/// `R_s = δ_s` on `[0,1]` started from `θ·λ`: the Blackwell–MacQueen urn,
/// whose normalized atoms converge to a `PD(0, θ)` random measure.
pub fn blackwell_macqueen(theta: f64) -> Result<UrnSpec> {
    positive("theta", theta)?;
    UrnSpec::new(
        kernel::polya(ColourSpace::UnitInterval, 1.0),
        FiniteMeasure::lebesgue(theta)?,
    )
}

/// Two colours with random replacement: the drawn colour with probability
/// `p`, the other one otherwise. `X₀ = δ₀ + δ₁`.
pub fn friedman_random(p: f64) -> Result<UrnSpec> {
    friedman_random_from(p, &[1.0, 1.0])
}

/// [`friedman_random`] with `X₀ = w₀δ₀ + w₁δ₁`.
pub fn friedman_random_from(p: f64, w: &[f64]) -> Result<UrnSpec> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("p must lie in [0, 1], got {p}")));
    }
    if w.len() != 2 {
        return Err(Error::InvalidParams("w must have two entries".into()));
    }
    UrnSpec::new(kernel::friedman(p), FiniteMeasure::discrete(w)?)
}

/// Translation-invariant urn on `Z^dim` started from `δ_0`: a drawn ball at
/// `s` adds one at `s + ξ`, `ξ` from `steps`.
pub fn lattice_walk(dim: usize, steps: Vec<(Vec<i64>, f64)>) -> Result<UrnSpec> {
    if dim == 0 {
        return Err(Error::InvalidParams("dim must be at least 1".into()));
    }
    let k = kernel::lattice_step(dim, steps)?;
    let x0 = FiniteMeasure::atom(ColourSpace::Lattice(dim), Colour::Point(vec![0; dim]), 1.0)?;
    UrnSpec::new(k, x0)
}

fn integer_x0(x0: &[f64]) -> Result<FiniteMeasure> {
    if let Some(w) = x0.iter().find(|w| !(w.is_finite() && **w >= 0.0 && w.fract() == 0.0)) {
        return Err(Error::InvalidParams(format!(
            "initial ball counts must be nonnegative integers, got {w}"
        )));
    }
    FiniteMeasure::discrete(x0)
}

/// Drawing without replacement: the drawn ball is discarded and
/// `addition[s][j]` balls of each colour `j` are added. The urn lives on
/// nonzero integer-valued measures and stops when it empties.
pub fn without_replacement_urn(addition: Vec<Vec<u64>>, x0: &[f64]) -> Result<UrnSpec> {
    let k = kernel::discard_and_add(addition)?;
    let x0 = integer_x0(x0)?;
    UrnSpec::with_admissibility(k, x0, Admissibility::IntegerUrn)
}

/// Random drawing without replacement: the added row is drawn from `law[s]`.
pub fn random_without_replacement(
    law: Vec<Vec<(Vec<u64>, f64)>>,
    x0: &[f64],
) -> Result<UrnSpec> {
    let k = kernel::random_discard_and_add(law)?;
    let x0 = integer_x0(x0)?;
    UrnSpec::with_admissibility(k, x0, Admissibility::IntegerUrn)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyaParams {
    #[serde(default = "one")]
    a: f64,
    #[serde(default = "two_balls")]
    w: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThetaParams {
    #[serde(default = "one")]
    theta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FriedmanParams {
    p: f64,
    #[serde(default = "two_balls")]
    w: Vec<f64>,
}

/// One entry `(offset, probability)` of a step law.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeStep {
    pub offset: Vec<i64>,
    pub p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeParams {
    dim: usize,
    steps: Vec<LatticeStep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WithoutReplacementParams {
    addition: Vec<Vec<u64>>,
    x0: Vec<f64>,
}

/// One candidate addition row and its probability.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedRow {
    pub row: Vec<u64>,
    pub p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomWithoutReplacementParams {
    law: Vec<Vec<WeightedRow>>,
    x0: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn two_balls() -> Vec<f64> {
    vec![1.0, 1.0]
}

/// Description of a named model, as printed by the `models` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub name: &'static str,
    pub random: bool,
    pub summary: &'static str,
    pub example_params: &'static str,
}

pub const MODELS: &[ModelInfo] = &[
    ModelInfo {
        name: "eggenberger_polya",
        random: false,
        summary: "d colours, the drawn colour gets a extra balls",
        example_params: r#"{"a":1,"w":[1,1]}"#,
    },
    ModelInfo {
        name: "blackwell_macqueen",
        random: false,
        summary: "colours in [0,1], X0 = theta * Lebesgue, R_s = delta_s",
        example_params: r#"{"theta":1}"#,
    },
    ModelInfo {
        name: "friedman_random",
        random: true,
        summary: "two colours, add the drawn colour w.p. p, the other one otherwise",
        example_params: r#"{"p":0.5,"w":[1,1]}"#,
    },
    ModelInfo {
        name: "lattice_walk",
        random: true,
        summary: "colours in Z^dim, a ball at s adds one at s + xi, xi from the step law",
        example_params: r#"{"dim":1,"steps":[{"offset":[1],"p":0.5},{"offset":[-1],"p":0.5}]}"#,
    },
    ModelInfo {
        name: "without_replacement_urn",
        random: false,
        summary: "discard the drawn ball, add addition[s][j] balls of colour j",
        example_params: r#"{"addition":[[0,0],[0,0]],"x0":[2,1]}"#,
    },
    ModelInfo {
        name: "random_without_replacement",
        random: true,
        summary: "discard the drawn ball, add a row drawn from law[s]",
        example_params: r#"{"law":[[{"row":[1,1],"p":0.5},{"row":[2,0],"p":0.5}],[{"row":[0,2],"p":1}]],"x0":[2,1]}"#,
    },
];

fn parse<T: for<'de> Deserialize<'de>>(name: &str, params: &Value) -> Result<T> {
    let params = if params.is_null() {
        Value::Object(Default::default())
    } else {
        params.clone()
    };
    serde_json::from_value(params)
        .map_err(|e| Error::InvalidParams(format!("{name}: {e}")))
}

/// Build a named model from JSON parameters. `null` means all defaults.
pub fn build(name: &str, params: &Value) -> Result<UrnSpec> {
    match name {
        "eggenberger_polya" => {
            let p: PolyaParams = parse(name, params)?;
            eggenberger_polya(p.a, &p.w)
        }
        "blackwell_macqueen" => {
            let p: ThetaParams = parse(name, params)?;
            blackwell_macqueen(p.theta)
        }
        "friedman_random" => {
            let p: FriedmanParams = parse(name, params)?;
            friedman_random_from(p.p, &p.w)
        }
        "lattice_walk" => {
            let p: LatticeParams = parse(name, params)?;
            lattice_walk(p.dim, p.steps.into_iter().map(|s| (s.offset, s.p)).collect())
        }
        "without_replacement_urn" => {
            let p: WithoutReplacementParams = parse(name, params)?;
            without_replacement_urn(p.addition, &p.x0)
        }
        "random_without_replacement" => {
            let p: RandomWithoutReplacementParams = parse(name, params)?;
            let law = p
                .law
                .into_iter()
                .map(|rows| rows.into_iter().map(|r| (r.row, r.p)).collect())
                .collect();
            random_without_replacement(law, &p.x0)
        }
        other => Err(Error::InvalidParams(format!("unknown model {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Replacement;
    use crate::process::{self, RunOptions, Statistic};
    use crate::measure::TestSet;
    use crate::stats;
    use serde_json::json;

    #[test]
    fn law_validation() {
        assert!(check_law([0.25, 0.75]).is_ok());
        assert!(check_law([0.5, 0.6]).is_err());
        assert!(check_law([1.5, -0.5]).is_err());
        assert!(check_law([]).is_err());
        assert!(check_law([f64::NAN]).is_err());
    }

    #[test]
    fn polya_params() {
        assert!(eggenberger_polya(1.0, &[1.0]).is_err());
        assert!(eggenberger_polya(0.0, &[1.0, 1.0]).is_err());
        assert!(eggenberger_polya(1.0, &[1.0, -1.0]).is_err());
        let s = eggenberger_polya(2.0, &[1.0, 3.0, 0.5]).unwrap();
        assert_eq!(s.space(), &ColourSpace::Finite(3));
        assert_eq!(s.x0().total_mass(), 4.5);
        assert_eq!(s.kernel().declared_balance(), Some(2.0));
    }

    #[test]
    fn every_model_validates() {
        for info in MODELS {
            let params: Value = serde_json::from_str(info.example_params).unwrap();
            let spec = build(info.name, &params).unwrap();
            assert_eq!(spec.kernel().is_random(), info.random, "{}", info.name);
            spec.validate(1000).unwrap();
        }
    }

    #[test]
    fn registry_rejects_bad_input() {
        assert!(build("nope", &Value::Null).is_err());
        assert!(build("eggenberger_polya", &json!({"a": 1, "extra": 2})).is_err());
        assert!(build("friedman_random", &Value::Null).is_err());
        assert!(build("blackwell_macqueen", &Value::Null).is_ok());
    }

    #[test]
    fn blackwell_macqueen_state() {
        let spec = blackwell_macqueen(2.5).unwrap();
        assert_eq!(spec.space(), &ColourSpace::UnitInterval);
        assert_eq!(spec.x0().total_mass(), 2.5);
        assert_eq!(spec.x0().atom_count(), 0);
        assert!(blackwell_macqueen(0.0).is_err());
        let t = process::run(&spec, 300, 5, 0, &RunOptions::new().keep_states()).unwrap();
        for m in t.states().unwrap() {
            // Lebesgue part untouched; atoms have positive integer weights.
            assert_eq!(m.total_mass() - m.atoms().map(|(_, w)| w).sum::<f64>(), 2.5);
            assert!(m.atoms().all(|(_, w)| w >= 1.0 && w.fract() == 0.0));
        }
    }

    #[test]
    fn friedman_p_one_is_polya() {
        let f = friedman_random(1.0).unwrap();
        let p = eggenberger_polya(1.0, &[1.0, 1.0]).unwrap();
        let stat = Statistic::Fraction(TestSet::colours([0]));
        let a = process::monte_carlo(&f, 40, 50, &stat, 3, 1).unwrap();
        let b = process::monte_carlo(&p, 40, 50, &stat, 3, 1).unwrap();
        // Same selection uniforms; the unused kernel uniform does not matter.
        assert_eq!(a, b);
    }

    #[test]
    fn friedman_symmetric_mean() {
        let spec = friedman_random(0.5).unwrap();
        let stat = Statistic::Fraction(TestSet::colours([0]));
        let xs = process::monte_carlo(&spec, 60, 4000, &stat, 21, 0).unwrap();
        let (mean, se) = stats::mean_and_se(&xs);
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn lattice_walk_single_offset_is_a_shift() {
        let spec = lattice_walk(2, vec![(vec![1, -1], 1.0)]).unwrap();
        for u in [0.0, 0.4, 1.0] {
            let r = spec.kernel().eval(&Colour::Point(vec![5, 5]), u).unwrap();
            let Replacement::Add(m) = r else { panic!() };
            assert_eq!(m.atom_weight(&Colour::Point(vec![6, 4])), 1.0);
        }
        assert!(lattice_walk(1, vec![(vec![1], 0.5)]).is_err());
        assert!(lattice_walk(1, vec![(vec![1, 1], 1.0)]).is_err());
    }

    #[test]
    fn symmetric_lattice_walk_drift_free() {
        let spec = lattice_walk(1, vec![(vec![1], 0.5), (vec![-1], 0.5)]).unwrap();
        let last = Statistic::custom(|_, draws| match &draws.last().unwrap().colour {
            Colour::Point(p) => p[0] as f64,
            _ => f64::NAN,
        });
        let xs = process::monte_carlo(&spec, 30, 4000, &last, 8, 0).unwrap();
        let (mean, se) = stats::mean_and_se(&xs);
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
        let t = process::run(&spec, 100, 1, 0, &RunOptions::new()).unwrap();
        assert!(process::check_balanced(&t, 1.0, 1.0, 1e-12));
    }

    #[test]
    fn without_replacement_requires_integer_x0() {
        assert!(without_replacement_urn(vec![vec![0, 0], vec![0, 0]], &[1.5, 1.0]).is_err());
        assert!(without_replacement_urn(vec![vec![0, 0], vec![0, 0]], &[2.0, 1.0]).is_ok());
        assert!(without_replacement_urn(vec![vec![0, 0]], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn identity_addition_is_sampling_with_replacement() {
        let spec = without_replacement_urn(vec![vec![1, 0], vec![0, 1]], &[2.0, 1.0]).unwrap();
        let t = process::run(&spec, 50, 2, 0, &RunOptions::new().keep_states()).unwrap();
        for m in t.states().unwrap() {
            assert_eq!(m, spec.x0());
        }
    }

    #[test]
    fn single_row_law_matches_deterministic_version() {
        let det = without_replacement_urn(vec![vec![1, 1], vec![2, 0]], &[2.0, 1.0]).unwrap();
        let rnd = random_without_replacement(
            vec![vec![(vec![1, 1], 1.0)], vec![(vec![2, 0], 1.0)]],
            &[2.0, 1.0],
        )
        .unwrap();
        let opts = RunOptions::new().keep_states();
        for seed in 0..10 {
            let a = process::run(&det, 100, seed, 0, &opts).unwrap();
            let b = process::run(&rnd, 100, seed, 0, &opts).unwrap();
            assert_eq!(a.states(), b.states());
        }
    }

    #[test]
    fn balanced_removal_urn_mass() {
        // Rows sum to 2, so a = 1.
        let spec = without_replacement_urn(vec![vec![1, 1], vec![0, 2]], &[2.0, 1.0]).unwrap();
        assert_eq!(spec.kernel().declared_balance(), Some(1.0));
        let t = process::run(&spec, 500, 4, 0, &RunOptions::new()).unwrap();
        assert!(process::check_balanced(&t, 1.0, 3.0, 1e-9));
    }
}
