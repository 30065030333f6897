use proptest::prelude::*;

use super::*;
use crate::rng::RandomnessStream;
use crate::stats;
use crate::Error;

fn idx(k: usize) -> Colour {
    Colour::Index(k)
}

fn d(w: &[f64]) -> FiniteMeasure {
    FiniteMeasure::discrete(w).unwrap()
}

#[test]
fn mass_examples() {
    assert_eq!(FiniteMeasure::zero(ColourSpace::Finite(2)).total_mass(), 0.0);
    let mu = d(&[2.0, 3.0]);
    assert_eq!(mu.total_mass(), 5.0);
    assert_eq!(mu.product_with_uniform().total_mass(), 5.0);
}

#[test]
fn addition_examples() {
    let sum = d(&[2.0, 0.0]).add(&d(&[1.0, 3.0])).unwrap();
    assert_eq!(sum, d(&[3.0, 3.0]));
    let mu = d(&[1.0, 4.0]);
    assert_eq!(mu.add(&FiniteMeasure::zero(mu.space().clone())).unwrap(), mu);
    let lifted = mu
        .product_with_uniform()
        .add(&d(&[2.0, 0.0]).product_with_uniform())
        .unwrap();
    assert!(lifted.is_product_form());
    assert_eq!(lifted, d(&[3.0, 4.0]).product_with_uniform());
    assert_eq!(
        mu.add(&FiniteMeasure::lebesgue(1.0).unwrap()),
        Err(Error::SpaceMismatch)
    );
}

#[test]
fn normalize_examples() {
    assert_eq!(d(&[2.0, 2.0]).normalize().unwrap(), d(&[0.5, 0.5]));
    let p = d(&[0.25, 0.75]);
    assert_eq!(p.normalize().unwrap(), p);
    assert_eq!(
        FiniteMeasure::zero(ColourSpace::Finite(1)).normalize(),
        Err(Error::ZeroMass)
    );
}

#[test]
fn single_atom_always_sampled() {
    let mu = d(&[1.0]);
    let mut s = RandomnessStream::new(0, 0);
    for _ in 0..100 {
        assert_eq!(mu.sample(&mut s).unwrap(), idx(0));
    }
    assert_eq!(
        FiniteMeasure::zero(ColourSpace::Finite(1)).sample(&mut s),
        Err(Error::ZeroMass)
    );
}

#[test]
fn lebesgue_samples_are_uniform() {
    let lambda = FiniteMeasure::lebesgue(1.0).unwrap();
    let mut s = RandomnessStream::new(1, 0);
    let mut bins = [0u64; 10];
    for _ in 0..100_000 {
        let Colour::Real(x) = lambda.sample(&mut s).unwrap() else {
            panic!("real colour")
        };
        bins[((x * 10.0) as usize).min(9)] += 1;
    }
    assert!(stats::chi_square_gof(&bins, &[0.1; 10]).unwrap().pass);
}

#[test]
fn sampling_respects_weights() {
    let mu = d(&[1.0, 3.0]);
    let mut s = RandomnessStream::new(2, 0);
    let n = 100_000;
    let ones = (0..n).filter(|_| mu.sample(&mut s).unwrap() == idx(1)).count();
    let se = (0.75f64 * 0.25 / n as f64).sqrt();
    assert!((ones as f64 / n as f64 - 0.75).abs() < 3.0 * se);
}

#[test]
fn component_chi_square() {
    let mu = d(&[1.0, 2.0, 3.0, 4.0]);
    let mut s = RandomnessStream::new(3, 0);
    let mut counts = [0u64; 4];
    for _ in 0..100_000 {
        counts[mu.sample(&mut s).unwrap().as_index().unwrap()] += 1;
    }
    assert!(stats::chi_square_gof(&counts, &[0.1, 0.2, 0.3, 0.4]).unwrap().pass);
}

#[test]
fn product_samples_carry_independent_uniform() {
    // Under (δ₀ + δ₁) × λ the coordinate is uniform and independent of the base.
    let mu = d(&[1.0, 1.0]).product_with_uniform();
    let mut s = RandomnessStream::new(4, 0);
    let mut cells = [0u64; 4];
    for _ in 0..40_000 {
        let Colour::Pair(base, u) = mu.sample(&mut s).unwrap() else {
            panic!("pair colour")
        };
        cells[base.as_index().unwrap() * 2 + usize::from(u >= 0.5)] += 1;
    }
    assert!(stats::chi_square_gof(&cells, &[0.25; 4]).unwrap().pass);
}

#[test]
fn evaluate_examples() {
    let lambda = FiniteMeasure::lebesgue(1.0).unwrap();
    assert_eq!(lambda.evaluate(&TestSet::interval(0.0, 0.25)).unwrap(), 0.25);
    let mu = d(&[2.0, 3.0]);
    assert_eq!(mu.evaluate(&TestSet::colours([0])).unwrap(), 2.0);
    assert_eq!(mu.evaluate(&TestSet::Full).unwrap(), 5.0);
    assert_eq!(
        mu.evaluate(&TestSet::interval(0.0, 1.0)),
        Err(Error::UnsupportedTestSet)
    );
}

#[test]
fn product_evaluation() {
    let lifted = d(&[2.0]).product_with_uniform();
    let set = TestSet::product(TestSet::colours([0]), vec![(0.0, 0.5)]);
    assert_eq!(lifted.evaluate(&set).unwrap(), 1.0);
    let empty = FiniteMeasure::zero(ColourSpace::Finite(3)).product_with_uniform();
    assert!(empty.is_zero());
    assert_eq!(empty.space(), &ColourSpace::product(ColourSpace::Finite(3)));
}

#[test]
fn projection_examples() {
    let lifted = d(&[2.0]).product_with_uniform();
    assert_eq!(lifted.project().unwrap(), d(&[2.0]));
    let pair_atom = FiniteMeasure::atom(
        ColourSpace::product(ColourSpace::Finite(2)),
        Colour::pair(idx(1), 0.7),
        1.0,
    )
    .unwrap();
    assert_eq!(pair_atom.project().unwrap(), d(&[0.0, 1.0]));
    assert_eq!(d(&[1.0]).project(), Err(Error::NotProductSpace));
}

#[test]
fn signed_addition_examples() {
    let minus = |k: usize| SignedAtomicMeasure::new(ColourSpace::Finite(2), [(idx(k), -1.0)]).unwrap();
    assert_eq!(d(&[2.0, 1.0]).add_signed(&minus(0)).unwrap(), d(&[1.0, 1.0]));
    assert_eq!(
        d(&[1.0, 0.0]).add_signed(&minus(1)),
        Err(Error::NegativeMass(idx(1)))
    );
    let emptied = d(&[1.0, 0.0]).add_signed(&minus(0)).unwrap();
    assert!(emptied.is_zero());
    assert_eq!(emptied.total_mass(), 0.0);
}

#[test]
fn signed_addition_clamps_fp_noise() {
    let sp = ColourSpace::Finite(1);
    let mu = FiniteMeasure::atom(sp.clone(), idx(0), 0.3).unwrap();
    let sigma = SignedAtomicMeasure::new(sp.clone(), [(idx(0), -(0.1 + 0.2))]).unwrap();
    // 0.3 − (0.1 + 0.2) ≈ −5.6e-17: within the clamp.
    assert!(mu.add_signed(&sigma).unwrap().is_zero());
    let too_much = SignedAtomicMeasure::new(sp, [(idx(0), -0.31)]).unwrap();
    assert!(matches!(mu.add_signed(&too_much), Err(Error::NegativeMass(_))));
}

#[test]
fn signed_product_addition() {
    let mu = d(&[2.0, 1.0]).product_with_uniform();
    let sigma =
        SignedAtomicMeasure::new(ColourSpace::Finite(2), [(idx(0), -1.0), (idx(1), 2.0)]).unwrap();
    let next = mu.add_signed_product(&sigma).unwrap();
    assert!(next.is_product_form());
    assert_eq!(next, d(&[1.0, 3.0]).product_with_uniform());
    assert_eq!(next.project().unwrap(), d(&[2.0, 1.0]).add_signed(&sigma).unwrap());
}

#[test]
fn jordan_example_variation() {
    let sigma =
        SignedAtomicMeasure::new(ColourSpace::Finite(2), [(idx(0), 2.0), (idx(1), -1.0)]).unwrap();
    let (plus, minus) = sigma.jordan();
    assert_eq!(plus, d(&[2.0, 0.0]));
    assert_eq!(minus, d(&[0.0, 1.0]));
    assert_eq!(sigma.variation().total_mass(), 3.0);
}

#[test]
fn approx_equal_examples() {
    let mu = d(&[1.0, 2.0]);
    assert!(mu.approx_equal(&mu, 0.0).unwrap());
    assert!(d(&[1.0]).approx_equal(&d(&[1.0 + 1e-12]), 1e-9).unwrap());
    assert!(!d(&[1.0, 0.0]).approx_equal(&d(&[0.0, 1.0]), 0.5).unwrap());
    let lambda = FiniteMeasure::lebesgue(1.0).unwrap();
    let atom = FiniteMeasure::atom(ColourSpace::UnitInterval, Colour::Real(0.5), 1.0).unwrap();
    assert_eq!(lambda.approx_equal(&atom, 1e-9), Err(Error::Incomparable));
}

#[test]
fn json_round_trip() {
    let mu = FiniteMeasure::from_components(
        ColourSpace::UnitInterval,
        [
            Component::atom(2.0, Colour::Real(0.25)),
            Component::new(
                1.5,
                Payload::Continuous(ContinuousFamily::Uniform { lo: 0.5, hi: 1.0 }),
            ),
        ],
    )
    .unwrap()
    .product_with_uniform();
    let text = serde_json::to_string(&mu).unwrap();
    assert!(text.contains("product_lambda"));
    let back: FiniteMeasure = serde_json::from_str(&text).unwrap();
    assert_eq!(back, mu);
    let bad = r#"{"space":{"finite":2},"components":[{"w":1,"atom":{"index":2}}]}"#;
    assert!(serde_json::from_str::<FiniteMeasure>(bad).is_err());
    let no_weight = r#"{"space":{"finite":2},"components":[{"atom":{"index":0}}]}"#;
    assert!(serde_json::from_str::<FiniteMeasure>(no_weight).is_err());
}

fn finite_measure(d: usize) -> impl Strategy<Value = FiniteMeasure> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.001f64..100.0], d)
        .prop_map(|w| FiniteMeasure::discrete(&w).unwrap())
}

// Atoms at a few fixed reals (so merges happen) plus uniform pieces.
fn interval_measure() -> impl Strategy<Value = FiniteMeasure> {
    let atom = (0usize..4, 0.01f64..10.0)
        .prop_map(|(k, w)| Component::atom(w, Colour::Real(k as f64 / 4.0)));
    let piece = (0usize..4, 1usize..5, 0.01f64..10.0).prop_map(|(lo, len, w)| {
        let lo = lo as f64 / 8.0;
        Component::new(
            w,
            Payload::Continuous(ContinuousFamily::Uniform {
                lo,
                hi: lo + len as f64 / 8.0,
            }),
        )
    });
    prop::collection::vec(prop_oneof![atom, piece], 0..8).prop_map(|cs| {
        FiniteMeasure::from_components(ColourSpace::UnitInterval, cs).unwrap()
    })
}

fn signed_measure() -> impl Strategy<Value = SignedAtomicMeasure> {
    prop::collection::vec((0usize..5, -20.0f64..20.0), 0..10).prop_map(|atoms| {
        SignedAtomicMeasure::new(
            ColourSpace::Finite(5),
            atoms.into_iter().map(|(k, w)| (Colour::Index(k), w)),
        )
        .unwrap()
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn mass_is_additive(a in finite_measure(4), b in finite_measure(4)) {
        let sum = a.add(&b).unwrap();
        prop_assert!(close(sum.total_mass(), a.total_mass() + b.total_mass(), 1e-9));
    }

    #[test]
    fn mass_is_additive_with_continuous_parts(a in interval_measure(), b in interval_measure()) {
        let sum = a.add(&b).unwrap();
        prop_assert!(close(sum.total_mass(), a.total_mass() + b.total_mass(), 1e-9));
        let listed: f64 = sum.components().iter().map(|c| c.weight).sum();
        prop_assert!(close(sum.total_mass(), listed, 1e-9));
    }

    #[test]
    fn normalized_mass_is_one(a in interval_measure()) {
        prop_assume!(!a.is_zero());
        prop_assert!((a.normalize().unwrap().total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn project_undoes_product(a in interval_measure(), levels in 1usize..4) {
        let mut lifted = a.clone();
        for _ in 0..levels {
            lifted = lifted.product_with_uniform();
            prop_assert!(lifted.is_product_form());
        }
        prop_assert_eq!(lifted.total_mass(), a.total_mass());
        prop_assert_eq!(lifted.project_to(a.space()).unwrap(), a);
    }

    #[test]
    fn jordan_reconstructs(sigma in signed_measure()) {
        let (plus, minus) = sigma.jordan();
        for k in 0..5 {
            let c = Colour::Index(k);
            prop_assert_eq!(plus.atom_weight(&c) - minus.atom_weight(&c), sigma.weight(&c));
        }
        let parts = plus.total_mass() + minus.total_mass();
        prop_assert!(close(sigma.variation().total_mass(), parts, 1e-12));
    }

    #[test]
    fn evaluate_is_additive(a in interval_measure(), cut in 0.0f64..1.0) {
        // [0, cut] and [cut, 1] overlap only at `cut`; shift the right piece by
        // one ulp so atoms at the cut are not counted twice.
        let right = f64::from_bits(cut.to_bits() + 1);
        let left = a.evaluate(&TestSet::interval(0.0, cut)).unwrap();
        let rest = a.evaluate(&TestSet::interval(right, 1.0)).unwrap();
        let full = a.evaluate(&TestSet::Full).unwrap();
        prop_assert!(close(left + rest, full, 1e-9));
        prop_assert!(close(full, a.total_mass(), 1e-12));
    }

    #[test]
    fn evaluate_is_additive_on_colours(a in finite_measure(5), mask in 0u32..32) {
        let inside: Vec<usize> = (0..5).filter(|k| mask >> k & 1 == 1).collect();
        let outside: Vec<usize> = (0..5).filter(|k| mask >> k & 1 == 0).collect();
        let sum = a.evaluate(&TestSet::colours(inside)).unwrap()
            + a.evaluate(&TestSet::colours(outside)).unwrap();
        prop_assert!(close(sum, a.total_mass(), 1e-12));
    }

    #[test]
    fn sampled_colour_lies_in_space(a in interval_measure(), seed in any::<u64>()) {
        prop_assume!(!a.is_zero());
        let lifted = a.product_with_uniform();
        let mut s = RandomnessStream::new(seed, 0);
        prop_assert!(a.space().contains(&a.sample(&mut s).unwrap()));
        prop_assert!(lifted.space().contains(&lifted.sample(&mut s).unwrap()));
    }
}
