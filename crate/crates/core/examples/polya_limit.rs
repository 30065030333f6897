//! The two-colour Pólya urn: the fraction of colour 0 converges to a
//! Beta(w0/a, w1/a) limit. With `a = 1` and one ball of each colour the limit
//! is uniform, so its empirical quartiles should sit near 0.25, 0.5 and 0.75.

use urnlift::measure::TestSet;
use urnlift::models;
use urnlift::process::{self, Statistic};

fn main() -> urnlift::Result<()> {
    let spec = models::eggenberger_polya(1.0, &[1.0, 1.0])?;
    let stat = Statistic::Fraction(TestSet::colours([0]));
    let mut xs = process::monte_carlo(&spec, 2000, 4000, &stat, 1, 0)?;
    xs.sort_by(f64::total_cmp);
    let q = |p: f64| xs[((xs.len() - 1) as f64 * p) as usize];
    println!("fraction of colour 0 after 2000 draws, 4000 replicates");
    println!("quartiles: {:.3} {:.3} {:.3}", q(0.25), q(0.5), q(0.75));

    // Skewed start: the limit is Beta(3, 1) with mean 0.75.
    let skewed = models::eggenberger_polya(1.0, &[3.0, 1.0])?;
    let ys = process::monte_carlo(&skewed, 2000, 4000, &stat, 2, 0)?;
    let (mean, se) = urnlift::stats::mean_and_se(&ys);
    println!("start (3, 1): mean fraction {mean:.4} ± {se:.4}");
    Ok(())
}
