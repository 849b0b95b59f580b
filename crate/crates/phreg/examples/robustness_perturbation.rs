//! Robustness of the nominal controller: rescale mass density and bending
//! stiffness, keep the controller fixed, and watch regulation survive as
//! long as the perturbed closed loop stays stable.

use phreg::disc::{assemble, reduce_to_lti, BoundaryConstraint, Grid};
use phreg::linalg::{cr, CVec};
use phreg::regulator::{
    assemble_closed_loop, solve_regulator_equations, spectral_abscissa, synthesize, GainRule,
};
use phreg::scenarios;
use phreg::sim::{error_metrics, perturb_model, simulate, Scalings};

fn main() -> phreg::Result<()> {
    let model = scenarios::beam_model(1.0, 1.0)?;
    let grid = Grid::with_spacing((0.0, 1.0), 0.05)?;
    let dp = assemble(&model, &grid)?;
    let exo = scenarios::beam_exosystem()?;
    let ctrl = synthesize(&exo, &dp, 1.0, 0.17, &GainRule::Pseudoinverse)?;
    let v0 = CVec::from_element(4, cr(1.0));

    println!(
        "{:>6} {:>6} {:>13} {:>13} {:>11}",
        "rho", "EI", "abscissa", "residual", "tail/head"
    );
    for rho in [0.9, 1.0, 1.1] {
        for ei in [0.9, 1.0, 1.1] {
            let (m2, e2) = perturb_model(
                &model,
                &exo,
                Scalings {
                    rho,
                    ei,
                    ..Scalings::default()
                },
            )?;
            let dp2 = assemble(&m2, &grid)?;
            let plant = reduce_to_lti(&dp2, BoundaryConstraint::OutputFeedback(1.0))?;
            // the nominal controller, unchanged
            let cl = assemble_closed_loop(&plant, &ctrl, &e2)?;
            let abscissa = spectral_abscissa(&cl.a_e)?;
            if abscissa >= 0.0 {
                println!(
                    "{rho:>6} {ei:>6} {abscissa:>+13.4e}  destabilized; regulation not claimed"
                );
                continue;
            }
            let sol = solve_regulator_equations(&cl, &e2)?;
            let traj = simulate(&cl, &e2, &v0, &CVec::zeros(cl.a_e.nrows()), 20.0, 1e-3)?;
            let m = error_metrics(&traj);
            println!(
                "{rho:>6} {ei:>6} {abscissa:>+13.4e} {:>13.4e} {:>11.4e}",
                sol.residual_rel,
                m.tail_sup / m.head_sup
            );
        }
    }
    Ok(())
}
