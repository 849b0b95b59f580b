//! Independent eigenvalue oracle: the closed-plant spectrum of the beam
//! under output feedback is computed here analytically (characteristic
//! exponentials + complex Newton on the 4x4 boundary determinant, no use of
//! the discretization under test), and the discrete eigenvalues must
//! converge to it under grid refinement.

use phreg::disc::{assemble, reduce_to_lti, BoundaryConstraint, Grid};
use phreg::linalg::{self, c, cr, CMat, C64};
use phreg::scenarios;

/// Determinant of the boundary-condition matrix for the beam eigenproblem
/// `lambda w = P2 w''` with `(B + kappa C) w = 0`: basis `e^{mu z}` with
/// `mu^4 = -lambda^2`, `w2 = mu^2 / lambda * w1`.
fn boundary_determinant(lambda: C64, kappa: f64) -> C64 {
    let tau = (-lambda * lambda).powf(0.25);
    let mus = [tau, tau * c(0.0, 1.0), -tau, -tau * c(0.0, 1.0)];
    let mut f = CMat::zeros(4, 4);
    for (j, &mu) in mus.iter().enumerate() {
        let e1 = mu.exp();
        let r = mu * mu / lambda;
        let k = cr(kappa);
        // rows: (w1'(0) - k w2(0), w1(0) + k w2'(0), w2'(1) - k w1(1), w2(1) + k w1'(1))
        f[(0, j)] = mu - k * r;
        f[(1, j)] = cr(1.0) + k * r * mu;
        f[(2, j)] = r * mu * e1 - k * e1;
        f[(3, j)] = r * e1 + k * mu * e1;
    }
    f.determinant()
}

fn newton_eigenvalue(seed: C64, kappa: f64) -> C64 {
    let mut lam = seed;
    for _ in 0..80 {
        let f0 = boundary_determinant(lam, kappa);
        let h = cr(1e-7) * cr(lam.norm().max(1.0));
        let df = (boundary_determinant(lam + h, kappa) - boundary_determinant(lam - h, kappa))
            / (h * cr(2.0));
        if df.norm() == 0.0 {
            break;
        }
        let step = f0 / df;
        lam -= step;
        if step.norm() < 1e-13 * lam.norm().max(1.0) {
            break;
        }
    }
    lam
}

#[test]
fn discrete_modes_converge_to_continuum_spectrum() {
    let kappa = 1.0;
    let targets = [
        newton_eigenvalue(c(-2.0, 0.3), kappa),
        newton_eigenvalue(c(-4.0, 10.3), kappa),
    ];
    // sanity of the oracle itself
    for t in &targets {
        assert!(boundary_determinant(*t, kappa).norm() < 1e-8);
        assert!(t.re < -1.0, "continuum mode {t} must be strongly damped");
    }

    let model = scenarios::beam_model(1.0, 1.0).unwrap();
    let mut distances: Vec<[f64; 2]> = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let grid = Grid::with_spacing((0.0, 1.0), h).unwrap();
        let dp = assemble(&model, &grid).unwrap();
        let sys = reduce_to_lti(&dp, BoundaryConstraint::OutputFeedback(kappa)).unwrap();
        let eigs = linalg::eigenvalues(&sys.a_sys).unwrap();
        let mut row = [0.0; 2];
        for (k, t) in targets.iter().enumerate() {
            row[k] = eigs
                .iter()
                .map(|e| (e - t).norm())
                .fold(f64::INFINITY, f64::min);
        }
        distances.push(row);
    }
    println!(
        "spectrum oracle: targets {:.6} / {:.6}, distances {:?}",
        targets[0], targets[1], distances
    );
    for k in 0..2 {
        assert!(
            distances[1][k] < distances[0][k] / 3.0 && distances[2][k] < distances[1][k] / 3.0,
            "mode {k}: no second-order convergence: {distances:?}"
        );
    }
    assert!(distances[2][0] < 5e-4);
    assert!(distances[2][1] < 1e-2);
}
