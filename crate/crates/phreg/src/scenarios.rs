//! Built-in reference models: a clamped-free Euler-Bernoulli beam with
//! boundary control/observation at both ends, and a one-dimensional
//! transport equation with inflow control.

use std::f64::consts::PI;

use crate::error::Result;
use crate::linalg::{c, cr, CMat};
use crate::model::{
    boundary_from_jet_rows, build_q, jet_selection, Coefficient, PhModel, PortMatrices,
};
use crate::regulator::Exosystem;

/// Euler-Bernoulli beam on `[0, 1]` in the port-Hamiltonian state
/// `x = (rho * v_t, v_zz)`, a second-order model with `n = 2`:
/// `P_2 = [[0, -1], [1, 0]]`, `P_1 = P_0 = 0`, `H = diag(1/rho, EI)`.
///
/// Inputs are angular velocity and velocity at the left end plus shear and
/// moment at the right end; outputs are the complementary port quantities.
/// The boundary maps select entries of the jet of `Hx`, so the input/output
/// structure (and with it the passivity class) does not depend on `rho`, `EI`.
pub fn beam_model(rho: f64, ei: f64) -> Result<PhModel> {
    let p1 = CMat::zeros(2, 2);
    let p2 = CMat::from_row_slice(2, 2, &[cr(0.0), cr(-1.0), cr(1.0), cr(0.0)]);
    let h = CMat::from_row_slice(2, 2, &[cr(1.0 / rho), cr(0.0), cr(0.0), cr(ei)]);
    let bounds = ((1.0 / rho).min(ei), (1.0 / rho).max(ei));

    // Port matrices for this coefficient set, needed to express the jet
    // selections as W matrices.
    let q = build_q(&[p1.clone(), p2.clone()], 2, 2)?;
    let eye = CMat::identity(4, 4);
    let r_ext = crate::linalg::block2x2(&q, &q.scale(-1.0), &eye, &eye).scale(1.0 / 2.0_f64.sqrt());
    let pm = PortMatrices {
        q,
        r_ext,
        sigma: crate::model::sigma_matrix(4),
    };

    // jet order: (w1(b), w2(b), w1'(b), w2'(b), w1(a), w2(a), w1'(a), w2'(a))
    // with w = Hx evaluated at b = 1, a = 0.
    let b_rows = jet_selection(&[(6, 1.0), (4, 1.0), (3, 1.0), (1, 1.0)], 8);
    let c_rows = jet_selection(&[(5, -1.0), (7, 1.0), (0, -1.0), (2, 1.0)], 8);
    let w_b = boundary_from_jet_rows(&b_rows, &pm)?;
    let w_c = boundary_from_jet_rows(&c_rows, &pm)?;

    PhModel::new(
        2,
        2,
        (0.0, 1.0),
        vec![p1, p2],
        Coefficient::zero(2),
        Coefficient::Constant(h),
        bounds,
        w_b,
        w_c,
    )
}

/// Exosystem for the beam scenario: frequencies `(-2pi, -pi, pi, 2pi)` with
/// maps chosen so the disturbance is
/// `(sin 2pi t, cos pi t, cos 2pi t, sin pi t)` and the reference is
/// `(-sin pi t, -cos 2pi t, cos pi t, sin 2pi t)` for `v0 = (1, 1, 1, 1)`.
pub fn beam_exosystem() -> Result<Exosystem> {
    let freqs = vec![-2.0 * PI, -PI, PI, 2.0 * PI];
    let half = cr(0.5);
    let ih = c(0.0, 0.5);
    let zero = cr(0.0);
    let e = CMat::from_row_slice(
        4,
        4,
        &[
            ih, zero, zero, -ih, //
            zero, half, half, zero, //
            half, zero, zero, half, //
            zero, ih, -ih, zero,
        ],
    );
    let f = CMat::from_row_slice(
        4,
        4,
        &[
            zero, ih, -ih, zero, //
            half, zero, zero, half, //
            zero, -half, -half, zero, //
            -ih, zero, zero, ih,
        ],
    );
    Exosystem::new(freqs, e, f)
}

/// Transport equation `x_t = -x_z` on `[0, 1]` with inflow input `u = x(0)`
/// and outflow output `y = x(1)`. Exponentially stable under the input
/// boundary condition but not impedance passive for this port selection.
pub fn transport_model() -> Result<PhModel> {
    let s = 1.0 / 2.0_f64.sqrt();
    let w_b = CMat::from_row_slice(1, 2, &[cr(s), cr(s)]);
    let w_c = CMat::from_row_slice(1, 2, &[cr(-s), cr(s)]);
    PhModel::new(
        1,
        1,
        (0.0, 1.0),
        vec![CMat::from_row_slice(1, 1, &[cr(-1.0)])],
        Coefficient::zero(1),
        Coefficient::identity(1),
        (1.0, 1.0),
        w_b,
        w_c,
    )
}
