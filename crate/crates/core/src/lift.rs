//! Derandomization of random-replacement urns.
//!
//! An urn on `S` with random kernel `f(s, u)` is turned into an urn on
//! `S × [0,1]` with the deterministic kernel `R̃_{(s,u)} = f(s, u) × λ` and
//! initial state `X₀ × λ`. The lifted urn starts in product form and every
//! replacement is of product form, so `X̃_n = π♯(X̃_n) × λ` at every step, and
//! `π♯(X̃_n)` has the law of `X_n`.
//!
//! [`coupled_run`] realizes the coupling `X̃_n = X_n × λ` pathwise: both chains
//! are driven by the same stream, and the lifted chain, sampled through the
//! generic product-space sampler, must draw exactly `(s, u)` where the base
//! chain drew `s` and its kernel uniform `u`.

use serde::Serialize;

use crate::kernel::{DeterministicKernel, Kernel};
use crate::measure::{ColourSpace, FiniteMeasure};
use crate::process::{self, Admissibility, Recorder, RunOptions, Statistic, Trajectory, UrnSpec};
use crate::rng::StreamKey;
use crate::stats::{self, TestReport};
use crate::{Error, Result};

/// The deterministic urn on `S × [0,1]` equivalent to a random urn on `S`.
pub fn lift_spec(spec: &UrnSpec) -> Result<UrnSpec> {
    let Kernel::Random(f) = spec.kernel() else {
        return Err(Error::AlreadyDeterministic);
    };
    let admissibility = match spec.admissibility() {
        Admissibility::None => Admissibility::None,
        Admissibility::IntegerUrn => {
            Admissibility::custom(|m| m.is_product_form() && m.is_integer_valued(1e-9))
        }
        Admissibility::Custom(pred) => {
            let pred = pred.clone();
            Admissibility::custom(move |m| {
                m.is_product_form() && m.project().map(|p| pred(&p)).unwrap_or(false)
            })
        }
    };
    UrnSpec::with_admissibility(
        DeterministicKernel::lifted(f),
        spec.x0().product_with_uniform(),
        admissibility,
    )
}

/// Base and lifted trajectories from one coupled run.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub base: Trajectory,
    pub lifted: Trajectory,
    /// Largest `|π♯(X̃_n) − X_n|` atom weight error over all steps.
    pub max_projection_error: f64,
}

fn check_coupled(
    step: usize,
    base: &FiniteMeasure,
    lifted: &FiniteMeasure,
    tol: f64,
) -> Result<f64> {
    let broken = |reason: String| Error::CouplingBroken { step, reason };
    if !lifted.is_product_form() {
        return Err(broken("lifted state has a component not of the form ν × λ".into()));
    }
    let projected = lifted.project()?;
    let err = projected.max_weight_difference(base)?;
    let close = projected
        .approx_equal(base, tol)
        .map_err(|e| broken(e.to_string()))?;
    if !close || err > tol {
        return Err(broken(format!("projection error {err:e} exceeds {tol:e}")));
    }
    Ok(err)
}

/// Run a random urn and its lift on a shared randomness source for `n` steps,
/// asserting `π♯(X̃_n) ≈ X_n` (relative `tol`) and product form at every step.
pub fn coupled_run(spec: &UrnSpec, n: usize, seed: u64, tol: f64) -> Result<CoupledRun> {
    let lifted_spec = lift_spec(spec)?;
    let key = StreamKey::new(seed, 0);
    let opts = RunOptions::new().keep_states().keep_draws();
    let mut base = Recorder::new(spec, n, key, &opts);
    let mut lifted = Recorder::new(&lifted_spec, n, key, &opts);
    base.record()?;
    lifted.record()?;
    let mut max_err = check_coupled(0, &base.state().measure, &lifted.state().measure, tol)?;

    for _ in 0..n {
        if base.state().stopped {
            break;
        }
        let step = base.state().step_index + 1;
        let d = process::draw(spec, base.state(), key).map_err(|e| e.at_step(step))?;
        let u = d.kernel_uniform.expect("random kernel draws a uniform");
        if spec.kernel().eval(&d.colour, u)?.is_signed() {
            return Err(Error::RemovalsNotCoupled);
        }
        let dl = process::draw(&lifted_spec, lifted.state(), key).map_err(|e| e.at_step(step))?;
        let expected = crate::measure::Colour::pair(d.colour.clone(), u);
        if dl.colour != expected {
            return Err(Error::CouplingBroken {
                step,
                reason: format!("lifted chain drew {} instead of {}", dl.colour, expected),
            });
        }
        base.advance(spec, d)?;
        lifted.advance(&lifted_spec, dl)?;
        let err = check_coupled(step, &base.state().measure, &lifted.state().measure, tol)?;
        max_err = max_err.max(err);
    }

    Ok(CoupledRun {
        base: base.finish(),
        lifted: lifted.finish(),
        max_projection_error: max_err,
    })
}

/// Outcome of coupled runs over many seeds.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CouplingSummary {
    pub seeds: u64,
    pub steps: usize,
    pub max_projection_error: f64,
    pub pass: bool,
}

/// [`coupled_run`] for seeds `first_seed .. first_seed + seeds`, in parallel.
pub fn couple_many(
    spec: &UrnSpec,
    n: usize,
    first_seed: u64,
    seeds: u64,
    tol: f64,
    threads: usize,
) -> Result<CouplingSummary> {
    let errors = process::par_replicates(seeds, threads, |i| {
        coupled_run(spec, n, first_seed.wrapping_add(i), tol).map(|c| c.max_projection_error)
    })?;
    let max_projection_error = errors.into_iter().fold(0.0, f64::max);
    Ok(CouplingSummary {
        seeds,
        steps: n,
        max_projection_error,
        pass: max_projection_error <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompareConfig {
    pub steps: usize,
    pub replicates: u64,
    pub seed: u64,
    pub threads: usize,
}

/// Two-sample KS comparison of `statistic` at step `n` between two urns run
/// independently.
///
/// One space must be the other with extra `× [0,1]` factors; the statistic is
/// evaluated on the push-forward to the smaller space. Replicate `r` of
/// `a` uses key `(seed, r)`, of `b` key `(seed, replicates + r)`.
pub fn distributional_compare(
    a: &UrnSpec,
    b: &UrnSpec,
    statistic: &Statistic,
    alpha: f64,
    cfg: CompareConfig,
) -> Result<TestReport> {
    let target = common_base(a.space(), b.space())?;
    let sample = |spec: &UrnSpec, offset: u64| {
        let opts = RunOptions::for_statistic(statistic);
        process::par_replicates(cfg.replicates, cfg.threads, |r| {
            let traj = process::run(spec, cfg.steps, cfg.seed, offset + r, &opts)?;
            statistic.on_trajectory(&traj.project_to(&target)?)
        })
    };
    let xs = sample(a, 0)?;
    let ys = sample(b, cfg.replicates)?;
    let ks = stats::ks_two_sample(&xs, &ys, alpha)?;
    Ok(ks.report(alpha))
}

/// [`distributional_compare`] of a random urn against its own lift.
pub fn compare_with_lift(
    spec: &UrnSpec,
    statistic: &Statistic,
    alpha: f64,
    cfg: CompareConfig,
) -> Result<TestReport> {
    distributional_compare(spec, &lift_spec(spec)?, statistic, alpha, cfg)
}

fn common_base(a: &ColourSpace, b: &ColourSpace) -> Result<ColourSpace> {
    let (deep, shallow) = if a.depth() >= b.depth() { (a, b) } else { (b, a) };
    let mut s = deep;
    while s != shallow {
        match s {
            ColourSpace::Product(base) => s = base,
            _ => return Err(Error::SpaceMismatch),
        }
    }
    Ok(shallow.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{self, Replacement};
    use crate::measure::{Colour, TestSet};
    use crate::models;

    #[test]
    fn lifting_a_deterministic_urn_fails() {
        let spec = models::eggenberger_polya(1.0, &[1.0, 1.0]).unwrap();
        assert!(matches!(lift_spec(&spec), Err(Error::AlreadyDeterministic)));
        assert!(matches!(
            coupled_run(&spec, 3, 0, 1e-9),
            Err(Error::AlreadyDeterministic)
        ));
    }

    #[test]
    fn lifted_kernel_is_branch_times_lambda() {
        let spec = models::friedman_random(0.3).unwrap();
        let lifted = lift_spec(&spec).unwrap();
        let r = lifted
            .kernel()
            .eval(&Colour::pair(Colour::Index(0), 0.1), 0.0)
            .unwrap();
        let expected = FiniteMeasure::discrete(&[1.0, 0.0])
            .unwrap()
            .product_with_uniform();
        assert_eq!(r, Replacement::Add(expected));
        assert_eq!(lifted.kernel().declared_balance(), Some(1.0));
        assert!(!lifted.kernel().is_random());
    }

    #[test]
    fn lifted_initial_state() {
        let spec = models::friedman_random(0.5).unwrap();
        let lifted = lift_spec(&spec).unwrap();
        assert_eq!(lifted.x0(), &spec.x0().product_with_uniform());
        assert_eq!(lifted.x0().total_mass(), 2.0);
        assert_eq!(lifted.space(), &ColourSpace::product(ColourSpace::Finite(2)));
    }

    #[test]
    fn projected_lifted_kernel_recovers_random_kernel() {
        let spec = models::lattice_walk(2, vec![(vec![1, 0], 0.25), (vec![0, 1], 0.75)]).unwrap();
        let lifted = lift_spec(&spec).unwrap();
        let mut stream = crate::rng::RandomnessStream::new(9, 0);
        for _ in 0..200 {
            let s = spec.space().arbitrary_colour(&mut stream);
            let u = stream.next_uniform();
            let direct = spec.kernel().eval(&s, u).unwrap();
            let via_lift = lifted
                .kernel()
                .eval(&Colour::pair(s, u), 0.0)
                .unwrap()
                .project()
                .unwrap();
            assert_eq!(direct, via_lift);
        }
    }

    #[test]
    fn zero_step_coupling_is_exact() {
        let spec = models::friedman_random(0.5).unwrap();
        let c = coupled_run(&spec, 0, 4, 0.0).unwrap();
        assert_eq!(c.max_projection_error, 0.0);
        assert_eq!(c.lifted.final_measure().project().unwrap(), *spec.x0());
    }

    #[test]
    fn degenerate_random_kernel_couples_pathwise() {
        // f independent of u: the lift is product_with_uniform of the base path.
        let sp = ColourSpace::Finite(3);
        let f = kernel::RandomKernel::new("constant", sp.clone(), move |s, _u| {
            Replacement::Add(FiniteMeasure::atom(sp.clone(), s.clone(), 2.0).unwrap())
        });
        let spec = UrnSpec::new(f, FiniteMeasure::discrete(&[1.0, 2.0, 3.0]).unwrap()).unwrap();
        let c = coupled_run(&spec, 100, 17, 1e-9).unwrap();
        let base = c.base.states().unwrap();
        let lifted = c.lifted.states().unwrap();
        for (b, l) in base.iter().zip(lifted) {
            assert_eq!(&b.product_with_uniform(), l);
        }
        assert_eq!(c.max_projection_error, 0.0);
    }

    #[test]
    fn removal_urns_are_not_coupled() {
        let spec = models::random_without_replacement(
            vec![vec![(vec![1, 1], 1.0)], vec![(vec![1, 1], 1.0)]],
            &[2.0, 1.0],
        )
        .unwrap();
        assert!(matches!(
            coupled_run(&spec, 10, 0, 1e-9),
            Err(Error::RemovalsNotCoupled)
        ));
    }

    #[test]
    fn removal_lift_runs_in_product_form() {
        let spec = models::random_without_replacement(
            vec![
                vec![(vec![1, 1], 0.5), (vec![0, 2], 0.5)],
                vec![(vec![2, 0], 1.0)],
            ],
            &[2.0, 1.0],
        )
        .unwrap();
        let lifted = lift_spec(&spec).unwrap();
        let t = process::run(&lifted, 200, 3, 0, &RunOptions::new().keep_states()).unwrap();
        for m in t.states().unwrap() {
            assert!(m.is_product_form());
            assert!(m.project().unwrap().is_integer_valued(1e-9));
        }
        assert!(process::check_balanced(&t, 1.0, 3.0, 1e-9));
    }

    #[test]
    fn compare_requires_related_spaces() {
        let a = models::friedman_random(0.5).unwrap();
        let b = models::blackwell_macqueen(1.0).unwrap();
        let cfg = CompareConfig {
            steps: 5,
            replicates: 30,
            seed: 0,
            threads: 1,
        };
        assert!(distributional_compare(&a, &b, &Statistic::Mass, 0.01, cfg).is_err());
        let r = compare_with_lift(
            &a,
            &Statistic::Fraction(TestSet::colours([0])),
            0.01,
            cfg,
        )
        .unwrap();
        assert_eq!(r.test, "ks_two_sample");
    }
}
