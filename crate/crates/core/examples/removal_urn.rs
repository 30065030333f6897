//! Urns that discard the drawn ball. Integer urns may empty out, at which
//! point the run stops.

use urnlift::measure::{Colour, TestSet};
use urnlift::process::{self, RunOptions, Statistic};
use urnlift::{lift, models};

fn main() -> urnlift::Result<()> {
    // Pure sampling without replacement from 2 balls of colour 0, 1 of colour 1.
    let spec = models::without_replacement_urn(vec![vec![0, 0], vec![0, 0]], &[2.0, 1.0])?;
    let t = process::run(&spec, 10, 0, 0, &RunOptions::new().keep_draws())?;
    println!("masses {:?}, stopped at step {:?}", t.masses(), t.stopped_at());
    let order: Vec<_> = t.draws().iter().map(|d| d.colour.clone()).collect();
    println!("draw order {order:?}");

    // Discard one, then add two balls whose colours are random.
    let law = vec![
        vec![(vec![1, 1], 0.5), (vec![0, 2], 0.5)],
        vec![(vec![2, 0], 1.0)],
    ];
    let random = models::random_without_replacement(law, &[2.0, 1.0])?;
    let t = process::run(&random, 20, 5, 0, &RunOptions::new())?;
    let m = t.final_measure();
    println!(
        "after 20 steps: {} of colour 0, {} of colour 1 (mass {})",
        m.atom_weight(&Colour::Index(0)),
        m.atom_weight(&Colour::Index(1)),
        m.total_mass()
    );

    // Its lift keeps the removals as signed atoms times Lebesgue measure.
    let summary = lift::compare_with_lift(
        &random,
        &Statistic::Fraction(TestSet::colours([0])),
        0.01,
        lift::CompareConfig { steps: 30, replicates: 2000, seed: 9, threads: 0 },
    )?;
    println!("in-law check against the lift: D = {:.4}, pass {}", summary.statistic, summary.pass);
    Ok(())
}
