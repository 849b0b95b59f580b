//! Evaluate the boundary transfer function of the transport model against
//! its analytic value `P(lambda) = exp(-lambda)` and watch the error shrink
//! under grid refinement.

use std::f64::consts::PI;

use phreg::disc::{assemble, transfer_function, BoundaryConstraint, Grid};
use phreg::linalg::c;
use phreg::scenarios;

fn main() -> phreg::Result<()> {
    let model = scenarios::transport_model()?;
    println!("transport: y = exp(-lambda) u, discrete vs analytic\n");
    println!(
        "{:>8} {:>14} {:>14} {:>14}",
        "nodes", "|err| at i*pi", "|err| at 2i*pi", "|err| at 0.3"
    );
    let mut previous: Option<[f64; 3]> = None;
    for nodes in [26usize, 51, 101, 201, 401] {
        let grid = Grid::with_nodes((0.0, 1.0), nodes)?;
        let dp = assemble(&model, &grid)?;
        let mut errs = [0.0; 3];
        for (i, lambda) in [c(0.0, PI), c(0.0, 2.0 * PI), c(0.3, 0.0)]
            .into_iter()
            .enumerate()
        {
            let p = transfer_function(&dp, BoundaryConstraint::Input, lambda)?;
            errs[i] = (p[(0, 0)] - (-lambda).exp()).norm();
        }
        print!(
            "{:>8} {:>14.4e} {:>14.4e} {:>14.4e}",
            nodes, errs[0], errs[1], errs[2]
        );
        if let Some(prev) = previous {
            print!(
                "   factors {:.2} / {:.2} / {:.2}",
                prev[0] / errs[0],
                prev[1] / errs[1],
                prev[2] / errs[2]
            );
        }
        println!();
        previous = Some(errs);
    }

    println!("\nfeedback identity P_kappa = P (I + kappa P)^-1 (two eliminations, defect -> 0):");
    for nodes in [51usize, 101, 201] {
        let grid = Grid::with_nodes((0.0, 1.0), nodes)?;
        let dp = assemble(&model, &grid)?;
        let lambda = c(0.3, PI);
        let p = transfer_function(&dp, BoundaryConstraint::Input, lambda)?;
        let direct = transfer_function(&dp, BoundaryConstraint::OutputFeedback(1.0), lambda)?;
        let via = p[(0, 0)] / (1.0 + p[(0, 0)]);
        println!(
            "  nodes {:>4}: defect {:.3e}",
            nodes,
            (via - direct[(0, 0)]).norm()
        );
    }
    Ok(())
}
