use rayon::prelude::*;

use crate::kernel::Kernel;
use crate::measure::{Colour, ColourSpace, FiniteMeasure};
use crate::rng::{RandomnessStream, StepDraws, StreamKey};
use crate::{Error, Result};

use super::spec::UrnSpec;
use super::statistic::Statistic;

/// `X_n` together with its step index. Once stopped (zero mass) it never
/// changes.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnState {
    pub measure: FiniteMeasure,
    pub step_index: usize,
    pub stopped: bool,
}

impl UrnState {
    pub fn initial(spec: &UrnSpec) -> Self {
        Self {
            measure: spec.x0().clone(),
            step_index: 0,
            stopped: false,
        }
    }
}

/// One draw: the colour and, for random kernels, the kernel uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub colour: Colour,
    pub kernel_uniform: Option<f64>,
}

impl Draw {
    pub fn project(&self) -> Result<Draw> {
        Ok(Draw {
            colour: self.colour.project().cloned().ok_or(Error::NotProductSpace)?,
            kernel_uniform: self.kernel_uniform,
        })
    }
}

/// Transition for a given draw: `X_{n+1} = X_n + R_s` (or `f(s,u)`).
pub fn apply_draw(spec: &UrnSpec, state: &UrnState, draw: &Draw) -> Result<UrnState> {
    let mut next = state.clone();
    apply_in_place(spec, &mut next, draw)?;
    Ok(next)
}

pub(crate) fn apply_in_place(spec: &UrnSpec, state: &mut UrnState, draw: &Draw) -> Result<()> {
    if state.stopped {
        return Err(Error::ZeroMass);
    }
    let step = state.step_index + 1;
    let u = match (spec.kernel(), draw.kernel_uniform) {
        (Kernel::Random(_), None) => {
            return Err(Error::InvalidParams("random kernel needs a uniform".into()))
        }
        (_, u) => u.unwrap_or(0.0),
    };
    let replacement = spec
        .kernel()
        .eval(&draw.colour, u)
        .map_err(|e| e.at_step(step))?;
    if replacement.is_signed() && !spec.admissibility().allows_removals() {
        return Err(Error::SignedWithoutAdmissibility.at_step(step));
    }
    let next = replacement
        .apply_to(&state.measure)
        .map_err(|e| e.at_step(step))?;
    if !spec.admissibility().admits(&next) {
        return Err(Error::AdmissibilityViolated { step });
    }
    state.stopped = next.is_zero();
    state.measure = next;
    state.step_index = step;
    Ok(())
}

/// Draw `s` from `X_n / X_n(S)` (channel 0 and the coordinate channels) and,
/// for a random kernel, `u` from the kernel channel.
pub fn draw(spec: &UrnSpec, state: &UrnState, key: StreamKey) -> Result<Draw> {
    if state.stopped {
        return Err(Error::ZeroMass);
    }
    let mut draws = StepDraws::new(key, state.step_index as u64);
    let colour = state.measure.sample(&mut draws)?;
    let kernel_uniform = spec
        .kernel()
        .is_random()
        .then(|| draws.kernel_uniform(spec.space().depth()));
    Ok(Draw {
        colour,
        kernel_uniform,
    })
}

/// One urn step, returning the new state and the draw that produced it.
pub fn step_traced(
    spec: &UrnSpec,
    state: &UrnState,
    stream: &RandomnessStream,
) -> Result<(UrnState, Draw)> {
    let d = draw(spec, state, stream.key())?;
    let next = apply_draw(spec, state, &d)?;
    Ok((next, d))
}

pub fn step(spec: &UrnSpec, state: &UrnState, stream: &RandomnessStream) -> Result<UrnState> {
    step_traced(spec, state, stream).map(|(s, _)| s)
}

/// What a run records besides the total mass at every step.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub stats: Vec<(String, Statistic)>,
    pub keep_states: bool,
    pub keep_draws: bool,
}

impl RunOptions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stat(mut self, label: impl Into<String>, stat: Statistic) -> Self {
        self.stats.push((label.into(), stat));
        self
    }

    pub fn keep_states(mut self) -> Self {
        self.keep_states = true;
        self
    }

    pub fn keep_draws(mut self) -> Self {
        self.keep_draws = true;
        self
    }

    /// Minimal options to evaluate `stat` at the end of a run.
    pub fn for_statistic(stat: &Statistic) -> Self {
        Self {
            keep_draws: stat.needs_draws(),
            ..Self::default()
        }
    }

    fn needs_draws(&self) -> bool {
        self.keep_draws || self.stats.iter().any(|(_, s)| s.needs_draws())
    }
}

/// A recorded run `X_0, X_1, ...`, up to the requested step or the stopping
/// step, whichever comes first.
#[derive(Debug, Clone)]
pub struct Trajectory {
    space: ColourSpace,
    key: StreamKey,
    requested_steps: usize,
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
    masses: Vec<f64>,
    states: Option<Vec<FiniteMeasure>>,
    draws: Vec<Draw>,
    final_state: UrnState,
}

impl Trajectory {
    pub fn space(&self) -> &ColourSpace {
        &self.space
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn requested_steps(&self) -> usize {
        self.requested_steps
    }

    /// Number of steps actually executed.
    pub fn steps_taken(&self) -> usize {
        self.final_state.step_index
    }

    pub fn stopped_at(&self) -> Option<usize> {
        self.final_state.stopped.then_some(self.final_state.step_index)
    }

    pub fn final_state(&self) -> &UrnState {
        &self.final_state
    }

    pub fn final_measure(&self) -> &FiniteMeasure {
        &self.final_state.measure
    }

    pub fn stat_labels(&self) -> &[String] {
        &self.labels
    }

    /// Recorded statistics, one row per executed step starting at step 0.
    pub fn stat_rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Total masses for steps `0..=steps_taken()`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `X_m(S)`, zero after the urn stopped.
    pub fn mass(&self, m: usize) -> Option<f64> {
        if m > self.requested_steps {
            return None;
        }
        Some(self.masses.get(m).copied().unwrap_or(0.0))
    }

    /// `X_m` when states were kept; zero after the urn stopped.
    pub fn state(&self, m: usize) -> Option<FiniteMeasure> {
        if m > self.requested_steps {
            return None;
        }
        let states = self.states.as_ref()?;
        Some(
            states
                .get(m)
                .cloned()
                .unwrap_or_else(|| FiniteMeasure::zero(self.space.clone())),
        )
    }

    pub fn states(&self) -> Option<&[FiniteMeasure]> {
        self.states.as_deref()
    }

    pub fn draws(&self) -> &[Draw] {
        &self.draws
    }

    /// Push the run forward along coordinate projections until it lives on
    /// `target`. Recorded statistics are dropped; masses are kept.
    pub fn project_to(&self, target: &ColourSpace) -> Result<Trajectory> {
        let mut space = self.space.clone();
        let mut draws = self.draws.clone();
        while &space != target {
            let ColourSpace::Product(base) = space else {
                return Err(Error::NotProductSpace);
            };
            draws = draws.iter().map(Draw::project).collect::<Result<_>>()?;
            space = *base;
        }
        let states = match &self.states {
            Some(v) => Some(
                v.iter()
                    .map(|m| m.project_to(target))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        Ok(Trajectory {
            space,
            key: self.key,
            requested_steps: self.requested_steps,
            labels: Vec::new(),
            rows: Vec::new(),
            masses: self.masses.clone(),
            states,
            draws,
            final_state: UrnState {
                measure: self.final_state.measure.project_to(target)?,
                ..self.final_state
            },
        })
    }
}

pub(crate) struct Recorder<'a> {
    opts: &'a RunOptions,
    keep_draws: bool,
    pub(crate) traj: Trajectory,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(spec: &UrnSpec, n: usize, key: StreamKey, opts: &'a RunOptions) -> Self {
        let state = UrnState::initial(spec);
        Self {
            opts,
            keep_draws: opts.needs_draws(),
            traj: Trajectory {
                space: spec.space().clone(),
                key,
                requested_steps: n,
                labels: opts.stats.iter().map(|(l, _)| l.clone()).collect(),
                rows: Vec::new(),
                masses: Vec::with_capacity(n + 1),
                states: opts.keep_states.then(Vec::new),
                draws: Vec::new(),
                final_state: state,
            },
        }
    }

    pub(crate) fn state(&self) -> &UrnState {
        &self.traj.final_state
    }

    /// Apply a draw, then record the new state.
    pub(crate) fn advance(&mut self, spec: &UrnSpec, d: Draw) -> Result<()> {
        apply_in_place(spec, &mut self.traj.final_state, &d)?;
        if self.keep_draws {
            self.traj.draws.push(d);
        }
        self.record()
    }

    pub(crate) fn finish(self) -> Trajectory {
        self.traj
    }

    pub(crate) fn record(&mut self) -> Result<()> {
        let t = &mut self.traj;
        let m = &t.final_state.measure;
        t.masses.push(m.total_mass());
        if !self.opts.stats.is_empty() {
            let row = self
                .opts
                .stats
                .iter()
                .map(|(_, s)| s.evaluate(m, &t.draws))
                .collect::<Result<Vec<_>>>()?;
            t.rows.push(row);
        }
        if let Some(states) = &mut t.states {
            states.push(m.clone());
        }
        Ok(())
    }
}

/// Run `n` steps (or until the urn stops). Deterministic in
/// `(spec, n, seed, replicate)`.
pub fn run(
    spec: &UrnSpec,
    n: usize,
    seed: u64,
    replicate: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    let key = StreamKey::new(seed, replicate);
    let mut rec = Recorder::new(spec, n, key, opts);
    rec.record()?;
    for _ in 0..n {
        let state = rec.state();
        if state.stopped {
            break;
        }
        let d = draw(spec, state, key).map_err(|e| e.at_step(state.step_index + 1))?;
        rec.advance(spec, d)?;
    }
    Ok(rec.finish())
}

/// Evaluate `job(r)` for `r in 0..replicates`, in parallel when
/// `threads != 1` (`0` means one thread per core). The output is ordered by
/// replicate; on failure the error of the lowest failing replicate is
/// returned, so the outcome never depends on scheduling.
pub fn par_replicates<T, F>(replicates: u64, threads: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let results: Vec<Result<T>> = if threads == 1 {
        (0..replicates).map(&job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
        pool.install(|| (0..replicates).into_par_iter().map(&job).collect())
    };
    results.into_iter().collect()
}

/// `statistic(run(spec, n, seed, r))` for every replicate `r`.
pub fn monte_carlo(
    spec: &UrnSpec,
    n: usize,
    replicates: u64,
    statistic: &Statistic,
    seed: u64,
    threads: usize,
) -> Result<Vec<f64>> {
    if replicates == 0 {
        return Err(Error::InvalidParams("need at least one replicate".into()));
    }
    let opts = RunOptions::for_statistic(statistic);
    par_replicates(replicates, threads, |r| {
        statistic.on_trajectory(&run(spec, n, seed, r, &opts)?)
    })
}

/// `|X_n(S) − (an + b)| ≤ tol · max(1, an + b)` at every recorded step.
pub fn check_balanced(traj: &Trajectory, a: f64, b: f64, tol: f64) -> bool {
    traj.masses().iter().enumerate().all(|(n, &m)| {
        let expected = a * n as f64 + b;
        (m - expected).abs() <= tol * expected.abs().max(1.0)
    })
}
