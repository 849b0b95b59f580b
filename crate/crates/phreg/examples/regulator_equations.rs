//! The regulation oracle: solve the Sylvester (regulator) equations
//! columnwise and inspect the output-equation residual. A controller with a
//! complete internal model drives the residual to roundoff; detuning one
//! frequency makes it order one.

use phreg::disc::{assemble, reduce_to_lti, BoundaryConstraint, Grid};
use phreg::linalg;
use phreg::regulator::{
    assemble_closed_loop, solve_regulator_equations, spectral_abscissa, synthesize, GainRule,
};
use phreg::scenarios;

fn main() -> phreg::Result<()> {
    let model = scenarios::beam_model(1.0, 1.0)?;
    let grid = Grid::with_spacing((0.0, 1.0), 0.05)?;
    let dp = assemble(&model, &grid)?;
    let exo = scenarios::beam_exosystem()?;
    let plant = reduce_to_lti(&dp, BoundaryConstraint::OutputFeedback(1.0))?;

    let ctrl = synthesize(&exo, &dp, 1.0, 0.17, &GainRule::Pseudoinverse)?;
    let cl = assemble_closed_loop(&plant, &ctrl, &exo)?;
    let sol = solve_regulator_equations(&cl, &exo)?;
    println!("nominal controller:");
    println!(
        "  ||D_e||              = {:.4e}",
        linalg::spectral_norm(&cl.d_e)
    );
    println!("  ||C_e Sigma + D_e||  = {:.4e}", sol.residual);
    println!("  relative residual    = {:.4e}", sol.residual_rel);

    for shift in [0.5, 0.1, 0.01] {
        let mut detuned = ctrl.clone();
        detuned.freqs[0] += shift;
        let cl = assemble_closed_loop(&plant, &detuned, &exo)?;
        match spectral_abscissa(&cl.a_e)? {
            a if a >= 0.0 => {
                println!("first frequency +{shift}: closed loop unstable (abscissa {a:+.3e})")
            }
            _ => {
                let sol = solve_regulator_equations(&cl, &exo)?;
                println!(
                    "first frequency +{shift}: relative residual {:.4e} (regulation lost)",
                    sol.residual_rel
                );
            }
        }
    }
    Ok(())
}
