//! Equality in law between an urn and its lift, checked by a two-sample
//! Kolmogorov–Smirnov test on independent replicates. A lift built from the
//! wrong parameter is rejected.

use urnlift::lift::{self, CompareConfig};
use urnlift::measure::TestSet;
use urnlift::models;
use urnlift::process::Statistic;

fn main() -> urnlift::Result<()> {
    let stat = Statistic::Fraction(TestSet::colours([0]));
    let cfg = CompareConfig {
        steps: 50,
        replicates: 5000,
        seed: 1,
        threads: 0,
    };
    let spec = models::friedman_random(0.3)?;
    let same = lift::compare_with_lift(&spec, &stat, 0.01, cfg)?;
    println!("p=0.3 vs its lift:     D = {:.4}, critical {:.4}, pass {}", same.statistic, same.threshold, same.pass);

    let wrong = lift::lift_spec(&models::friedman_random(0.7)?)?;
    let r = lift::distributional_compare(&spec, &wrong, &stat, 0.01, cfg)?;
    println!("p=0.3 vs lift of 0.7:  D = {:.4}, critical {:.4}, pass {}", r.statistic, r.threshold, r.pass);
    Ok(())
}
