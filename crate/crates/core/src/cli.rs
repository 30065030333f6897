//! The `urnlift` command line.
//!
//! ```text
//! urnlift simulate --model eggenberger_polya --params '{"a":1,"w":[1,1]}' --steps 10
//! urnlift couple   --model friedman_random --params '{"p":0.5}' --steps 200 --seeds 100
//! urnlift compare  --model friedman_random --params '{"p":0.3}' --steps 50 --reps 5000 \
//!                  --stat 'fraction:{"colours":[0]}'
//! urnlift models
//! ```
//!
//! An urn is a named model with JSON parameters or a JSON config file; flags
//! override config values. Exit codes: 0 success, 2 invalid input, 3 runtime
//! failure of the urn, 4 broken coupling.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::kernel::{self, Kernel};
use crate::lift::{self, CompareConfig};
use crate::measure::{Component, ColourSpace, FiniteMeasure, TestSet};
use crate::models;
use crate::process::{self, Admissibility, RunOptions, Statistic, UrnSpec};
use crate::{Error, Result};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_COUPLING: i32 = 4;

/// Which urn to build: a named model, or a bare kernel with explicit
/// `space` and `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Name(String),
    Kernel { kernel: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_set: Option<TestSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A JSON urn config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrnConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<ColourSpace>,
    pub model: ModelRef,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<Component>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stats: Vec<StatConfig>,
}

impl UrnConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParams(format!("config: {e}")))
    }

    pub fn build_spec(&self) -> Result<UrnSpec> {
        self.build_spec_with(&self.params)
    }

    fn build_spec_with(&self, params: &Value) -> Result<UrnSpec> {
        let spec = match &self.model {
            ModelRef::Name(name) => {
                let spec = models::build(name, params)?;
                if let Some(space) = &self.space {
                    if space != spec.space() {
                        return Err(Error::InvalidParams(format!(
                            "model {name} lives on {}, config declares {space}",
                            spec.space()
                        )));
                    }
                }
                match &self.x0 {
                    Some(x0) => spec.with_x0(FiniteMeasure::from_components(
                        spec.space().clone(),
                        x0.iter().cloned(),
                    )?)?,
                    None => spec,
                }
            }
            ModelRef::Kernel { kernel } => {
                let (Some(space), Some(x0)) = (&self.space, &self.x0) else {
                    return Err(Error::InvalidParams(
                        "a bare kernel needs `space` and `x0`".into(),
                    ));
                };
                space.validate()?;
                let (k, adm) = named_kernel(kernel, space, params)?;
                if k.space() != space {
                    return Err(Error::InvalidParams(format!(
                        "kernel {kernel} lives on {}, config declares {space}",
                        k.space()
                    )));
                }
                let x0 = FiniteMeasure::from_components(space.clone(), x0.iter().cloned())?;
                UrnSpec::with_admissibility(k, x0, adm)?
            }
        };
        spec.validate(1000)?;
        Ok(spec)
    }

    pub fn statistics(&self) -> Result<Vec<(String, Statistic)>> {
        self.stats.iter().map(StatConfig::build).collect()
    }
}

impl StatConfig {
    pub fn build(&self) -> Result<(String, Statistic)> {
        let needs_set = || {
            self.test_set.clone().ok_or_else(|| {
                Error::InvalidParams(format!("statistic {} needs a test_set", self.name))
            })
        };
        let stat = match self.name.as_str() {
            "mass" => Statistic::Mass,
            "evaluate" => Statistic::Evaluate(needs_set()?),
            "fraction" => Statistic::Fraction(needs_set()?),
            "distinct_atoms" => Statistic::DistinctAtoms,
            "max_atom_fraction" => Statistic::MaxAtomFraction,
            "first_draw_fraction" => Statistic::FirstDrawFraction,
            "draw_count" => Statistic::DrawCount(needs_set()?),
            other => return Err(Error::InvalidParams(format!("unknown statistic {other:?}"))),
        };
        if stat.test_set().is_none() && self.test_set.is_some() {
            return Err(Error::InvalidParams(format!(
                "statistic {} takes no test_set",
                self.name
            )));
        }
        let label = self.label.clone().unwrap_or_else(|| self.name.clone());
        Ok((label, stat))
    }

    /// `name` or `name:<test set JSON>`.
    pub fn parse_flag(s: &str) -> Result<Self> {
        let (name, set) = match s.split_once(':') {
            Some((n, json)) => {
                let set = serde_json::from_str(json)
                    .map_err(|e| Error::InvalidParams(format!("--stat {s}: {e}")))?;
                (n, Some(set))
            }
            None => (s, None),
        };
        Ok(StatConfig {
            name: name.to_string(),
            test_set: set,
            label: None,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct APolya {
    a: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Empty {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PFriedman {
    p: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Steps {
    steps: Vec<models::LatticeStep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Addition {
    addition: Vec<Vec<u64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Law {
    law: Vec<Vec<models::WeightedRow>>,
}

fn kernel_params<T: for<'de> Deserialize<'de>>(name: &str, params: &Value) -> Result<T> {
    let v = if params.is_null() {
        Value::Object(Default::default())
    } else {
        params.clone()
    };
    serde_json::from_value(v).map_err(|e| Error::InvalidParams(format!("kernel {name}: {e}")))
}

fn named_kernel(name: &str, space: &ColourSpace, params: &Value) -> Result<(Kernel, Admissibility)> {
    Ok(match name {
        "polya" => {
            let p: APolya = kernel_params(name, params)?;
            if !(p.a.is_finite() && p.a > 0.0) {
                return Err(Error::InvalidParams(format!("a must be positive, got {}", p.a)));
            }
            (kernel::polya(space.clone(), p.a).into(), Admissibility::None)
        }
        "zero" => {
            let _: Empty = kernel_params(name, params)?;
            (kernel::zero(space.clone()).into(), Admissibility::None)
        }
        "friedman" => {
            let p: PFriedman = kernel_params(name, params)?;
            if !(0.0..=1.0).contains(&p.p) {
                return Err(Error::InvalidParams(format!("p must lie in [0, 1], got {}", p.p)));
            }
            (kernel::friedman(p.p).into(), Admissibility::None)
        }
        "lattice_step" => {
            let p: Steps = kernel_params(name, params)?;
            let ColourSpace::Lattice(dim) = space else {
                return Err(Error::InvalidParams("lattice_step needs a lattice space".into()));
            };
            let steps = p.steps.into_iter().map(|s| (s.offset, s.p)).collect();
            (kernel::lattice_step(*dim, steps)?.into(), Admissibility::None)
        }
        "without_replacement" => {
            let p: Addition = kernel_params(name, params)?;
            (kernel::discard_and_add(p.addition)?.into(), Admissibility::IntegerUrn)
        }
        "random_without_replacement" => {
            let p: Law = kernel_params(name, params)?;
            let law = p
                .law
                .into_iter()
                .map(|rows| rows.into_iter().map(|r| (r.row, r.p)).collect())
                .collect();
            (kernel::random_discard_and_add(law)?.into(), Admissibility::IntegerUrn)
        }
        other => return Err(Error::InvalidParams(format!("unknown kernel {other:?}"))),
    })
}

/// Format like C's `%.17g`: 17 significant digits, trailing zeros removed.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let s = format!("{:.*}", (16 - exp) as usize, x);
        trim_fraction(&s).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Parser)]
#[command(name = "urnlift", version, about = "Measure-valued Pólya urns and their derandomizing lift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run replicates and write `replicate,step,stat_name,value` CSV.
    Simulate {
        #[command(flatten)]
        urn: UrnArgs,
        /// Keep writing rows up to --steps after the urn stops (state 0).
        #[arg(long)]
        pad_stopped: bool,
        /// Only the final value per replicate, as `replicate,value` CSV.
        #[arg(long)]
        final_only: bool,
    },
    /// Run a random urn coupled with its lift and report the projection error.
    Couple {
        #[command(flatten)]
        urn: UrnArgs,
        /// Number of seeds, starting at --seed.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Two-sample KS test of one statistic between two urns run independently.
    Compare {
        #[command(flatten)]
        urn: UrnArgs,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        /// Compare with the lift of the urn, or with the urn itself.
        #[arg(long, value_enum, default_value_t = Against::Lift)]
        against: Against,
        /// Parameters of the second urn, when they should differ from --params.
        #[arg(long)]
        against_params: Option<String>,
    },
    /// List the built-in models.
    Models,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Against {
    Lift,
    #[value(name = "self")]
    Itself,
}

#[derive(Debug, Args)]
struct UrnArgs {
    /// Built-in model name (see `urnlift models`).
    #[arg(long)]
    model: Option<String>,
    /// Model parameters as JSON.
    #[arg(long)]
    params: Option<String>,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Statistic `name` or `name:<test set JSON>`; repeatable.
    #[arg(long)]
    stat: Vec<String>,
    /// Worker threads for replicates; 0 uses every core.
    #[arg(long, env = "URNLIFT_THREADS", default_value_t = 0)]
    threads: usize,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

const DEFAULT_STEPS: usize = 100;

struct Resolved {
    config: UrnConfig,
    steps: usize,
    replicates: u64,
    seed: u64,
    stats: Vec<(String, Statistic)>,
    threads: usize,
    out: Option<PathBuf>,
}

impl UrnArgs {
    fn resolve(&self) -> Result<Resolved> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::InvalidParams(format!("cannot read {}: {e}", path.display()))
                })?;
                UrnConfig::from_json(&text)?
            }
            None => {
                let model = self.model.clone().ok_or_else(|| {
                    Error::InvalidParams("give --model or --config".into())
                })?;
                UrnConfig {
                    space: None,
                    model: ModelRef::Name(model),
                    params: Value::Null,
                    x0: None,
                    steps: None,
                    replicates: None,
                    seed: None,
                    stats: Vec::new(),
                }
            }
        };
        if self.config.is_some() {
            if let Some(m) = &self.model {
                config.model = ModelRef::Name(m.clone());
            }
        }
        if let Some(p) = &self.params {
            config.params = parse_json("--params", p)?;
        }
        if !self.stat.is_empty() {
            config.stats = self
                .stat
                .iter()
                .map(|s| StatConfig::parse_flag(s))
                .collect::<Result<_>>()?;
        }
        let mut stats = config.statistics()?;
        if stats.is_empty() {
            stats.push(("mass".into(), Statistic::Mass));
        }
        Ok(Resolved {
            steps: self.steps.or(config.steps).unwrap_or(DEFAULT_STEPS),
            replicates: self.reps.or(config.replicates).unwrap_or(1),
            seed: self.seed.or(config.seed).unwrap_or(0),
            stats,
            threads: self.threads,
            out: self.out.clone(),
            config,
        })
    }
}

fn parse_json(flag: &str, s: &str) -> Result<Value> {
    serde_json::from_str(s).map_err(|e| Error::InvalidParams(format!("{flag}: {e}")))
}

/// Map an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::CouplingBroken { .. } => EXIT_COUPLING,
        _ if e.step().is_some() => EXIT_RUNTIME,
        Error::NegativeMass(_)
        | Error::AdmissibilityViolated { .. }
        | Error::ZeroMass
        | Error::BalanceViolated { .. } => EXIT_RUNTIME,
        _ => EXIT_CONFIG,
    }
}

fn simulate(r: &Resolved, pad_stopped: bool, final_only: bool) -> Result<String> {
    let spec = r.config.build_spec()?;
    if final_only {
        let [(_, stat)] = r.stats.as_slice() else {
            return Err(Error::InvalidParams("--final-only takes exactly one --stat".into()));
        };
        let values = process::monte_carlo(&spec, r.steps, r.replicates, stat, r.seed, r.threads)?;
        let mut out = String::from("replicate,value\n");
        for (i, v) in values.iter().enumerate() {
            writeln!(out, "{i},{}", format_g17(*v)).expect("write to string");
        }
        return Ok(out);
    }
    let mut opts = RunOptions::new();
    for (label, stat) in &r.stats {
        opts = opts.stat(label.clone(), stat.clone());
    }
    let chunks = process::par_replicates(r.replicates, r.threads, |rep| {
        let traj = process::run(&spec, r.steps, r.seed, rep, &opts)?;
        let mut out = String::new();
        for (step, row) in traj.stat_rows().iter().enumerate() {
            for (label, v) in traj.stat_labels().iter().zip(row) {
                writeln!(out, "{rep},{step},{label},{}", format_g17(*v)).expect("write to string");
            }
        }
        if pad_stopped && traj.stopped_at().is_some() {
            let zero = FiniteMeasure::zero(spec.space().clone());
            for step in traj.steps_taken() + 1..=r.steps {
                for (label, stat) in &r.stats {
                    let v = stat.evaluate(&zero, traj.draws())?;
                    writeln!(out, "{rep},{step},{label},{}", format_g17(v))
                        .expect("write to string");
                }
            }
        }
        Ok(out)
    })?;
    let mut out = String::from("replicate,step,stat_name,value\n");
    out.extend(chunks);
    Ok(out)
}

#[derive(Serialize)]
struct CoupleReport {
    seeds: u64,
    steps: usize,
    max_projection_error: f64,
    tol: f64,
    pass: bool,
}

fn couple(r: &Resolved, seeds: u64, tol: f64) -> Result<String> {
    let spec = r.config.build_spec()?;
    let s = lift::couple_many(&spec, r.steps, r.seed, seeds, tol, r.threads)?;
    let report = CoupleReport {
        seeds: s.seeds,
        steps: s.steps,
        max_projection_error: s.max_projection_error,
        tol,
        pass: s.pass,
    };
    Ok(serde_json::to_string_pretty(&report).expect("serializable") + "\n")
}

fn compare(
    r: &Resolved,
    alpha: f64,
    against: Against,
    against_params: Option<&str>,
) -> Result<String> {
    let a = r.config.build_spec()?;
    let b_base = match against_params {
        Some(p) => r.config.build_spec_with(&parse_json("--against-params", p)?)?,
        None => a.clone(),
    };
    let b = match against {
        Against::Lift => lift::lift_spec(&b_base)?,
        Against::Itself => b_base,
    };
    let [(_, stat)] = r.stats.as_slice() else {
        return Err(Error::InvalidParams("compare takes exactly one --stat".into()));
    };
    let cfg = CompareConfig {
        steps: r.steps,
        replicates: r.replicates,
        seed: r.seed,
        threads: r.threads,
    };
    let report = lift::distributional_compare(&a, &b, stat, alpha, cfg)?;
    Ok(serde_json::to_string_pretty(&report).expect("serializable") + "\n")
}

fn list_models() -> String {
    let mut out = String::new();
    for m in models::MODELS {
        let kind = if m.random { "random" } else { "deterministic" };
        writeln!(out, "{:<28}{:<15}{}", m.name, kind, m.summary).expect("write to string");
        writeln!(out, "{:<28}params: {}", "", m.example_params).expect("write to string");
    }
    out
}

fn emit(out: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidParams(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::InvalidParams(format!("stdout: {e}"))),
    }
}

/// Run the command line `args` (including the program name) and return the
/// exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                EXIT_CONFIG
            } else {
                let _ = write!(stdout, "{e}");
                0
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Models => emit(None, &list_models(), stdout),
        Command::Simulate {
            urn,
            pad_stopped,
            final_only,
        } => urn.resolve().and_then(|r| {
            let text = simulate(&r, *pad_stopped, *final_only)?;
            emit(r.out.as_ref(), &text, stdout)
        }),
        Command::Couple { urn, seeds, tol } => urn.resolve().and_then(|r| {
            let text = couple(&r, *seeds, *tol)?;
            emit(r.out.as_ref(), &text, stdout)
        }),
        Command::Compare {
            urn,
            alpha,
            against,
            against_params,
        } => urn.resolve().and_then(|r| {
            let text = compare(&r, *alpha, *against, against_params.as_deref())?;
            emit(r.out.as_ref(), &text, stdout)
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "urnlift: {e}");
            exit_code(&e)
        }
    }
}
