//! Replicates run in parallel, each on its own counter-based stream, so the
//! results do not depend on the number of threads.

use std::time::Instant;

use urnlift::measure::TestSet;
use urnlift::models;
use urnlift::process::{self, Statistic};

fn main() -> urnlift::Result<()> {
    let spec = models::friedman_random(0.8)?;
    let stat = Statistic::Fraction(TestSet::colours([0]));
    let mut reference = None;
    for threads in [1, 2, 8, 0] {
        let start = Instant::now();
        let xs = process::monte_carlo(&spec, 1000, 2000, &stat, 123, threads)?;
        let elapsed = start.elapsed();
        let same = reference.get_or_insert_with(|| xs.clone()) == &xs;
        println!("threads {threads}: {elapsed:>10.2?}  identical to 1 thread: {same}");
    }
    let xs = reference.expect("ran at least once");
    let (mean, se) = urnlift::stats::mean_and_se(&xs);
    println!("mean fraction of colour 0 after 1000 draws: {mean:.4} ± {se:.4}");
    Ok(())
}
