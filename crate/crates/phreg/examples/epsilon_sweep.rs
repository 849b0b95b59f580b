//! Scan the controller tuning parameter: the closed-loop spectral abscissa
//! is flat at the plant floor for small values and loses stability once the
//! internal-model coupling overpowers it.

use phreg::disc::{assemble, reduce_to_lti, BoundaryConstraint, Grid};
use phreg::regulator::epsilon_sweep;
use phreg::scenarios;

fn main() -> phreg::Result<()> {
    let model = scenarios::beam_model(1.0, 1.0)?;
    let grid = Grid::with_spacing((0.0, 1.0), 0.05)?;
    let dp = assemble(&model, &grid)?;
    let plant = reduce_to_lti(&dp, BoundaryConstraint::OutputFeedback(1.0))?;
    let exo = scenarios::beam_exosystem()?;

    let grid_eps = [0.01, 0.02, 0.05, 0.1, 0.15, 0.17, 0.2, 0.25, 0.3, 0.4, 0.5];
    let report = epsilon_sweep(&plant, &exo, 1.0, &grid_eps)?;
    println!("{:>10} {:>15}", "epsilon", "abscissa");
    for entry in &report.entries {
        println!("{:>10.3} {:>+15.6e}", entry.epsilon, entry.abscissa);
    }
    println!(
        "\nbest: epsilon = {} (abscissa {:+.6e})",
        report.best.epsilon, report.best.abscissa
    );
    match report.epsilon_star {
        Some(star) => println!("largest stable prefix of the grid ends at epsilon* = {star}"),
        None => println!("no stable tuning found on this grid"),
    }
    Ok(())
}
