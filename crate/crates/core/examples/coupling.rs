//! A random-replacement urn and its lift run on one randomness stream. The
//! lifted urn has deterministic replacements on S × [0,1], and projecting it
//! back onto S reproduces the original urn exactly, step by step.

use urnlift::measure::{Colour, ColourSpace, FiniteMeasure};
use urnlift::{lift, models};

fn main() -> urnlift::Result<()> {
    let spec = models::friedman_random(0.5)?;
    let c = lift::coupled_run(&spec, 10, 42, 1e-9)?;
    println!("step  base X_n                projected lift");
    for n in 0..=10 {
        let base = c.base.state(n).expect("states kept");
        let lifted = c.lifted.state(n).expect("states kept");
        let proj = lifted.project_to(&ColourSpace::Finite(2))?;
        let w = |m: &FiniteMeasure| (0..2).map(|k| m.atom_weight(&Colour::Index(k))).collect::<Vec<_>>();
        println!("{n:>4}  {:<22}  {:?}", format!("{:?}", w(&base)), w(&proj));
    }
    println!("max projection error over the run: {:e}", c.max_projection_error);

    let summary = lift::couple_many(&spec, 500, 0, 200, 1e-9, 0)?;
    println!(
        "{} seeds x {} steps: pass = {}, max error {:e}",
        summary.seeds, summary.steps, summary.pass, summary.max_projection_error
    );
    Ok(())
}
