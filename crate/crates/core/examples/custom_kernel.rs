//! A user-defined random kernel on three colours. One uniform per draw is
//! split into two: the first chooses which colour to add, the second how many.

use urnlift::kernel::{split_uniform, RandomKernel, Replacement};
use urnlift::measure::{Colour, ColourSpace, FiniteMeasure};
use urnlift::process::UrnSpec;
use urnlift::lift;

fn main() -> urnlift::Result<()> {
    let space = ColourSpace::Finite(3);
    let kernel = RandomKernel::new("rotate", space.clone(), |s, u| {
        let [a, b] = split_uniform(u, 2).expect("u in [0,1]")[..] else {
            unreachable!()
        };
        let k = s.as_index().expect("finite colour");
        let colour = if a < 0.6 { k } else { (k + 1) % 3 };
        let weight = if b < 0.5 { 1.0 } else { 2.0 };
        Replacement::Add(
            FiniteMeasure::atom(ColourSpace::Finite(3), Colour::Index(colour), weight)
                .expect("index below 3"),
        )
    });
    let spec = UrnSpec::new(kernel, FiniteMeasure::discrete(&[1.0, 1.0, 1.0])?)?;
    spec.validate(1000)?;

    let c = lift::coupled_run(&spec, 300, 8, 1e-9)?;
    let m = c.base.final_measure();
    let w: Vec<_> = (0..3).map(|k| m.atom_weight(&Colour::Index(k))).collect();
    println!("after 300 draws: {w:?}");
    println!("lifted state has {} components, projection error {:e}",
        c.lifted.final_measure().components().len(), c.max_projection_error);
    Ok(())
}
