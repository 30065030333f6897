//! Urn on Z²: a ball at s adds a ball at s + ξ with ξ from a step law. The
//! empirical centre of mass drifts with the mean step.

use urnlift::measure::Colour;
use urnlift::models;
use urnlift::process::{self, RunOptions};

fn main() -> urnlift::Result<()> {
    let steps = vec![(vec![1, 0], 0.5), (vec![0, 1], 0.3), (vec![-1, -1], 0.2)];
    let spec = models::lattice_walk(2, steps)?;
    let t = process::run(&spec, 2000, 1, 0, &RunOptions::new())?;
    let m = t.final_measure();
    let mut centre = [0.0; 2];
    for (c, w) in m.atoms() {
        if let Colour::Point(p) = c {
            centre[0] += w * p[0] as f64;
            centre[1] += w * p[1] as f64;
        }
    }
    let mass = m.total_mass();
    println!("{} occupied sites, mass {mass}", m.atom_count());
    println!("centre of mass ({:.3}, {:.3})", centre[0] / mass, centre[1] / mass);
    let far = m
        .atoms()
        .filter_map(|(c, _)| match c {
            Colour::Point(p) => Some(p[0].abs() + p[1].abs()),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    println!("farthest site at L1 distance {far}");
    Ok(())
}
