//! Blackwell–MacQueen urn with diffuse initial composition `θ·λ` on [0,1].
//! Each new colour is a fresh uniform point; old colours are reinforced.

use urnlift::models;
use urnlift::process::{self, RunOptions, Statistic};
use urnlift::rng::RandomnessStream;
use urnlift::stats;

fn main() -> urnlift::Result<()> {
    for theta in [0.5, 1.0, 5.0] {
        let spec = models::blackwell_macqueen(theta)?;
        let k = process::monte_carlo(&spec, 200, 1000, &Statistic::DistinctAtoms, 7, 0)?;
        let (mean, se) = stats::mean_and_se(&k);
        println!(
            "theta {theta}: distinct colours after 200 draws {mean:.3} ± {se:.3} (exact {:.3})",
            stats::expected_distinct(theta, 200)
        );
    }

    // One path: the atoms and their normalized weights.
    let spec = models::blackwell_macqueen(1.0)?;
    let t = process::run(&spec, 1000, 3, 0, &RunOptions::new())?;
    let m = t.final_measure();
    let mut atoms: Vec<_> = m.atoms().map(|(c, w)| (c.clone(), w / m.total_mass())).collect();
    atoms.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("one run, 1000 draws: {} atoms", atoms.len());
    for (c, w) in atoms.iter().take(5) {
        println!("  {c:?}  {w:.4}");
    }

    // The normalized weights look like GEM(1) stick lengths.
    let mut s = RandomnessStream::new(11, 0);
    let gem = stats::gem_stick_breaking(1.0, 5, &mut s)?;
    println!("five GEM(1) sticks: {gem:.4?}");
    Ok(())
}
