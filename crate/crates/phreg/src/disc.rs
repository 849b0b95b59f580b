//! Finite-difference discretization of a port-Hamiltonian model and
//! reduction to a standard input/output LTI system.
//!
//! The spatial operator is assembled from powers of a single first-derivative
//! matrix `D` that satisfies summation by parts against the trapezoid
//! weights: `Hw D + D' Hw` vanishes except for `-1`/`+1` at the endpoint
//! nodes. Endpoint jets of `Hx` are read off as boundary rows of the powers
//! of `D`. Telescoping the weighted energy product against these operators
//! reproduces the continuous integration by parts without remainder, so the
//! discrete energy balance
//!
//! ```text
//! 2 Re <A x, x>_W  =  jet(b)* S jet(b) - jet(a)* S jet(a)  =  2 Re <f, e>
//! ```
//!
//! holds exactly for every grid state, not only for resolved ones. Boundary
//! conditions are enforced by eliminating `nN` degrees of freedom: the state
//! is reduced to a weighted-orthonormal basis of the constraint kernel plus
//! a lift of the input, which keeps the balance exact under feedback (the
//! dissipation audit in `sim` relies on this). The interior rows use the
//! plain second-order central stencils; the price of the exact balance is
//! first-order closures next to the endpoints.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMat, CVec};
use crate::model::PhModel;
use crate::stencil::fd_weights;
use crate::tol;

/// Uniform spatial grid on the model interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nodes: usize,
    spacing: f64,
    interval: (f64, f64),
}

impl Grid {
    pub fn with_nodes(interval: (f64, f64), nodes: usize) -> Result<Self> {
        let (a, b) = interval;
        if !(a < b) {
            return Err(Error::InvariantViolation(format!(
                "interval ({a}, {b}) must satisfy a < b"
            )));
        }
        if nodes < 2 {
            return Err(Error::GridTooCoarse { nodes, required: 2 });
        }
        Ok(Grid {
            nodes,
            spacing: (b - a) / (nodes - 1) as f64,
            interval,
        })
    }

    /// Grid whose spacing is as close as possible to `h` (node count rounds).
    pub fn with_spacing(interval: (f64, f64), h: f64) -> Result<Self> {
        let (a, b) = interval;
        if !(h > 0.0) {
            return Err(Error::InvariantViolation(format!(
                "spacing {h} must be positive"
            )));
        }
        let nodes = ((b - a) / h).round() as usize + 1;
        Self::with_nodes(interval, nodes)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.interval.0 + j as f64 * self.spacing
    }
}

/// Which boundary map closes the discrete system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryConstraint {
    /// `B x = u`: the plain input map.
    Input,
    /// `(B + kappa C) x = u`: the negative-output-feedback loop.
    OutputFeedback(f64),
}

/// First-derivative matrix with the summation-by-parts property against the
/// trapezoid weights: second-order central rows inside, one-sided closures
/// at the two endpoint rows.
fn sbp_derivative(nodes: usize, h: f64) -> nalgebra::DMatrix<f64> {
    let mut d = nalgebra::DMatrix::<f64>::zeros(nodes, nodes);
    let edge = fd_weights(&[0, 1], 0.0, 1);
    let central = fd_weights(&[-1, 0, 1], 0.0, 1);
    d[(0, 0)] = edge[0] / h;
    d[(0, 1)] = edge[1] / h;
    for j in 1..nodes - 1 {
        d[(j, j - 1)] = central[0] / h;
        d[(j, j + 1)] = central[2] / h;
    }
    d[(nodes - 1, nodes - 2)] = -edge[1] / h;
    d[(nodes - 1, nodes - 1)] = -edge[0] / h;
    d
}

/// Narrow second-derivative matrix: the `[1, -2, 1]/h^2` stencil at every
/// row, anchored one-sided at the two endpoint rows. Against the trapezoid
/// weights its energy remainder is boundary-local and factors exactly
/// through the nodal value and the second-order one-sided first-derivative
/// stencil, which is what makes the discrete port balance exact.
fn narrow_second_derivative(nodes: usize, h: f64) -> nalgebra::DMatrix<f64> {
    let mut d = nalgebra::DMatrix::<f64>::zeros(nodes, nodes);
    let central = fd_weights(&[-1, 0, 1], 0.0, 2);
    let h2 = h * h;
    for j in 1..nodes - 1 {
        for (o, &w) in central.iter().enumerate() {
            d[(j, j - 1 + o)] += w / h2;
        }
    }
    for (o, &w) in central.iter().enumerate() {
        d[(0, o)] += w / h2;
        d[(nodes - 1, nodes - 3 + o)] += w / h2;
    }
    d
}

/// Per-order derivative operators and the endpoint jet stencils they pair
/// with exactly. Orders one and two use the narrow compatible family; higher
/// orders fall back to powers of the summation-by-parts first derivative
/// (still exactly balanced, at the price of wide stencils).
struct CompatibleOperators {
    /// `d_ops[k-1]` approximates the k-th derivative.
    d_ops: Vec<nalgebra::DMatrix<f64>>,
    /// `jet_rows[l]` = (left row, right row) approximating the l-th
    /// derivative at the endpoints.
    jet_rows: Vec<(nalgebra::RowDVector<f64>, nalgebra::RowDVector<f64>)>,
}

fn compatible_operators(order: usize, nodes: usize, h: f64) -> CompatibleOperators {
    let mut d_ops = Vec::with_capacity(order);
    let mut jet_rows = Vec::with_capacity(order);
    let nodal = |j: usize| {
        let mut r = nalgebra::RowDVector::zeros(nodes);
        r[j] = 1.0;
        r
    };
    jet_rows.push((nodal(0), nodal(nodes - 1)));
    if order <= 2 {
        d_ops.push(sbp_derivative(nodes, h));
        if order == 2 {
            d_ops.push(narrow_second_derivative(nodes, h));
            let w = fd_weights(&[0, 1, 2], 0.0, 1);
            let mut left = nalgebra::RowDVector::zeros(nodes);
            let mut right = nalgebra::RowDVector::zeros(nodes);
            for (o, &c) in w.iter().enumerate() {
                left[o] = c / h;
                right[nodes - 1 - o] = -c / h;
            }
            jet_rows.push((left, right));
        }
    } else {
        let d1 = sbp_derivative(nodes, h);
        d_ops.push(d1.clone());
        for _ in 1..order {
            let next = &d1 * d_ops.last().unwrap();
            d_ops.push(next);
        }
        for dk in d_ops.iter().take(order - 1) {
            jet_rows.push((dk.row(0).into_owned(), dk.row(nodes - 1).into_owned()));
        }
    }
    CompatibleOperators { d_ops, jet_rows }
}

/// Finite-difference realization of a model on a grid.
#[derive(Debug, Clone)]
pub struct DiscretePlant {
    state_dim: usize,
    order: usize,
    grid: Grid,
    /// Full collocation operator, `nM x nM`.
    a_full: CMat,
    /// Collocation rows away from the endpoints, `(nM - nN) x nM`.
    a_rows: CMat,
    /// `x -> W_B R_ext Phi_h(Hx)`, `nN x nM`.
    b_map: CMat,
    /// `x -> W_C R_ext Phi_h(Hx)`, `nN x nM`.
    c_map: CMat,
    /// Endpoint jet extraction `Phi_h` applied to `Hx`, `2nN x nM`.
    jet_map: CMat,
    /// Trapezoid-weighted Hamiltonian blocks `tau_j h H(z_j)`, one per node.
    weight_blocks: Vec<CMat>,
    kept_nodes: Vec<usize>,
}

impl DiscretePlant {
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn port_dim(&self) -> usize {
        self.state_dim * self.order
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Total number of grid unknowns `n M`.
    pub fn dof(&self) -> usize {
        self.state_dim * self.grid.nodes()
    }

    pub fn a_rows(&self) -> &CMat {
        &self.a_rows
    }

    pub fn b_map(&self) -> &CMat {
        &self.b_map
    }

    pub fn c_map(&self) -> &CMat {
        &self.c_map
    }

    pub fn jet_map(&self) -> &CMat {
        &self.jet_map
    }

    pub fn kept_nodes(&self) -> &[usize] {
        &self.kept_nodes
    }

    pub fn constraint_map(&self, constraint: BoundaryConstraint) -> CMat {
        match constraint {
            BoundaryConstraint::Input => self.b_map.clone(),
            BoundaryConstraint::OutputFeedback(kappa) => &self.b_map + self.c_map.scale(kappa),
        }
    }

    /// Full block-diagonal weight matrix of the discrete state inner product.
    pub fn weight_matrix(&self) -> CMat {
        let n = self.state_dim;
        let mut w = CMat::zeros(self.dof(), self.dof());
        for (j, blk) in self.weight_blocks.iter().enumerate() {
            w.view_mut((j * n, j * n), (n, n)).copy_from(blk);
        }
        w
    }

    fn weight_inverse(&self) -> CMat {
        let n = self.state_dim;
        let mut w = CMat::zeros(self.dof(), self.dof());
        for (j, blk) in self.weight_blocks.iter().enumerate() {
            let inv = linalg::try_inverse(blk).expect("weight blocks are positive definite");
            w.view_mut((j * n, j * n), (n, n)).copy_from(&inv);
        }
        w
    }

    /// Weighted inner product `<x, y>_W = y* W x` over full grid states.
    pub fn weighted_inner(&self, x: &CVec, y: &CVec) -> Complex64 {
        let n = self.state_dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, blk) in self.weight_blocks.iter().enumerate() {
            let xj = x.rows(j * n, n);
            let yj = y.rows(j * n, n);
            acc += (yj.adjoint() * blk * xj)[(0, 0)];
        }
        acc
    }

    /// Weighted squared norm of a full grid state (the discrete energy).
    pub fn energy(&self, x: &CVec) -> f64 {
        self.weighted_inner(x, x).re
    }
}

/// Assemble the finite-difference realization of a validated model.
pub fn assemble(model: &PhModel, grid: &Grid) -> Result<DiscretePlant> {
    let n = model.state_dim();
    let order = model.order();
    let nodes = grid.nodes();
    let required = 4 * order + 2;
    if nodes < required {
        return Err(Error::GridTooCoarse { nodes, required });
    }
    let h = grid.spacing();
    let nn = model.port_dim();
    let dof = n * nodes;

    let hmat: Vec<CMat> = (0..nodes)
        .map(|j| model.hamiltonian().at_node(j, nodes).cloned())
        .collect::<Result<_>>()?;
    let p0: Vec<CMat> = (0..nodes)
        .map(|j| model.p0().at_node(j, nodes).cloned())
        .collect::<Result<_>>()?;

    let ops = compatible_operators(order, nodes, h);

    // A_full block (i, j) = (sum_k D_k[i,j] P_k + delta_ij P0_i) H_j
    let mut a_full = CMat::zeros(dof, dof);
    for i in 0..nodes {
        for j in 0..nodes {
            let mut block = CMat::zeros(n, n);
            let mut nonzero = false;
            for (k, dk) in ops.d_ops.iter().enumerate() {
                let w = dk[(i, j)];
                if w != 0.0 {
                    block += model.p_coeffs()[k].scale(w);
                    nonzero = true;
                }
            }
            if i == j {
                block += &p0[i];
                nonzero = true;
            }
            if nonzero {
                let block = block * &hmat[j];
                a_full.view_mut((i * n, j * n), (n, n)).copy_from(&block);
            }
        }
    }

    // collocation rows away from the endpoints
    let drop_front = order.div_ceil(2);
    let drop_back = order / 2;
    let kept_nodes: Vec<usize> = (drop_front..nodes - drop_back).collect();
    let mut a_rows = CMat::zeros(dof - nn, dof);
    for (r, &node) in kept_nodes.iter().enumerate() {
        a_rows
            .view_mut((r * n, 0), (n, dof))
            .copy_from(&a_full.view((node * n, 0), (n, dof)));
    }

    // endpoint jets of Hx: derivatives 0..N-1 at b first, then at a
    let mut jet_map = CMat::zeros(2 * nn, dof);
    for (l, (left, right)) in ops.jet_rows.iter().enumerate() {
        for (side, row) in [(0usize, right), (1usize, left)] {
            let row0 = side * nn + l * n;
            for j in 0..nodes {
                let w = row[j];
                if w != 0.0 {
                    let block = hmat[j].scale(w);
                    let mut view = jet_map.view_mut((row0, j * n), (n, n));
                    view += block;
                }
            }
        }
    }

    let pm = model.port_matrices()?;
    let to_ports = &pm.r_ext * &jet_map;
    let b_map = model.w_b() * &to_ports;
    let c_map = model.w_c() * &to_ports;

    let weight_blocks: Vec<CMat> = (0..nodes)
        .map(|j| {
            let tau = if j == 0 || j == nodes - 1 { 0.5 } else { 1.0 };
            hmat[j].scale(tau * h)
        })
        .collect();

    Ok(DiscretePlant {
        state_dim: n,
        order,
        grid: *grid,
        a_full,
        a_rows,
        b_map,
        c_map,
        jet_map,
        weight_blocks,
        kept_nodes,
    })
}

/// Standard state-space system obtained by eliminating the boundary-condition
/// degrees of freedom.
///
/// The reduced state lives in a weighted-orthonormal basis of the constraint
/// kernel, so the discrete energy of the lifted grid state is exactly
/// `|s|^2` when the input vanishes. The basis and the input lift are kept so
/// full grid states (and with them weighted energies) can be reconstructed.
#[derive(Debug, Clone)]
pub struct LtiSystem {
    pub a_sys: CMat,
    pub b_sys: CMat,
    pub c_sys: CMat,
    pub d_sys: CMat,
    constraint: BoundaryConstraint,
    /// Kernel basis `T` with `T* W T = I`, `nM x (nM - nN)`.
    basis: CMat,
    /// Input lift `L = W^-1 G* (G W^-1 G*)^-1`, W-orthogonal to the kernel.
    lift: CMat,
    state_dim: usize,
    weight_blocks: Vec<CMat>,
}

impl LtiSystem {
    /// Wrap raw state-space matrices (identity state weight, no grid
    /// behind it); used for synthetic plants in tests and desk-scale
    /// studies.
    pub fn from_matrices(a_sys: CMat, b_sys: CMat, c_sys: CMat, d_sys: CMat) -> Self {
        let n = a_sys.nrows();
        let m = b_sys.ncols();
        LtiSystem {
            a_sys,
            b_sys,
            c_sys,
            d_sys,
            constraint: BoundaryConstraint::Input,
            basis: CMat::identity(n, n),
            lift: CMat::zeros(n, m),
            state_dim: 1,
            weight_blocks: vec![CMat::identity(1, 1); n],
        }
    }

    pub fn n_states(&self) -> usize {
        self.a_sys.nrows()
    }

    pub fn n_ports(&self) -> usize {
        self.b_sys.ncols()
    }

    pub fn constraint(&self) -> BoundaryConstraint {
        self.constraint
    }

    /// Transfer function `C (lambda I - A)^-1 B + D`.
    pub fn transfer(&self, lambda: Complex64) -> Result<CMat> {
        let n = self.n_states();
        let shifted = CMat::identity(n, n) * lambda - &self.a_sys;
        let x = linalg::solve(&shifted, &self.b_sys).ok_or(Error::ResolventSingular {
            lambda,
            cond: f64::INFINITY,
        })?;
        Ok(&self.c_sys * x + &self.d_sys)
    }

    /// Rebuild the full grid state from the reduced state and the input:
    /// `X = T s + L u`.
    pub fn reconstruct(&self, x_reduced: &CVec, u: &CVec) -> CVec {
        &self.basis * x_reduced + &self.lift * u
    }

    /// Discrete energy `||X||^2_W` of the reconstructed full state.
    pub fn energy(&self, x_reduced: &CVec, u: &CVec) -> f64 {
        let full = self.reconstruct(x_reduced, u);
        let n = self.state_dim;
        let mut acc = 0.0;
        for (j, blk) in self.weight_blocks.iter().enumerate() {
            let xj = full.rows(j * n, n);
            acc += (xj.adjoint() * blk * xj)[(0, 0)].re;
        }
        acc
    }
}

/// Kernel basis of the constraint (weighted-orthonormal) and the
/// W-orthogonal input lift.
fn constraint_geometry(dp: &DiscretePlant, g: &CMat) -> Result<(CMat, CMat)> {
    let nn = dp.port_dim();
    let dof = dp.dof();
    let sv = linalg::singular_values(g);
    if sv[0] == 0.0 || sv[sv.len() - 1] <= tol::RANK_REL * sv[0] {
        return Err(Error::SingularElimination);
    }
    // orthonormal kernel basis from the projector onto range(G*)^perp
    let q_range = g.adjoint().qr().q();
    let projector = CMat::identity(dof, dof) - &q_range * q_range.adjoint();
    let eig = projector.symmetric_eigen();
    let mut cols = Vec::with_capacity(dof - nn);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.5 {
            cols.push(eig.eigenvectors.column(i).clone_owned());
        }
    }
    if cols.len() != dof - nn {
        return Err(Error::SingularElimination);
    }
    let kernel = CMat::from_columns(&cols);
    let w = dp.weight_matrix();
    let gram = kernel.adjoint() * &w * &kernel;
    let chol = gram.cholesky().ok_or(Error::SingularElimination)?;
    // T = kernel * L^-*, so T* W T = I
    let l_adj_inv = linalg::try_inverse(&chol.l().adjoint()).ok_or(Error::SingularElimination)?;
    let basis = kernel * l_adj_inv;

    let w_inv = dp.weight_inverse();
    let wg = &w_inv * g.adjoint();
    let small = g * &wg;
    let small_inv = linalg::try_inverse(&small).ok_or(Error::SingularElimination)?;
    let lift = wg * small_inv;
    Ok((basis, lift))
}

/// Eliminate the `nN` constrained degrees of freedom, producing
/// `s' = A s + B u`, `y = C s + D u` on the weighted-orthonormal kernel
/// coordinates.
pub fn reduce_to_lti(dp: &DiscretePlant, constraint: BoundaryConstraint) -> Result<LtiSystem> {
    let g = dp.constraint_map(constraint);
    let (basis, lift) = constraint_geometry(dp, &g)?;
    let w = dp.weight_matrix();
    let test = basis.adjoint() * &w; // T* W, the weighted interior rows
    let a_sys = &test * &dp.a_full * &basis;
    let b_sys = &test * &dp.a_full * &lift;
    let c_sys = dp.c_map() * &basis;
    let d_sys = dp.c_map() * &lift;
    Ok(LtiSystem {
        a_sys,
        b_sys,
        c_sys,
        d_sys,
        constraint,
        basis,
        lift,
        state_dim: dp.state_dim(),
        weight_blocks: dp.weight_blocks.clone(),
    })
}

/// Evaluate the boundary-input to boundary-output transfer function at
/// `lambda` by solving the stacked square system
/// `{A_w x = lambda E_w x, constraint x = e_j}` column by column, where
/// `A_w = T* W A` and `E_w = T* W` are the weighted interior rows.
pub fn transfer_function(
    dp: &DiscretePlant,
    constraint: BoundaryConstraint,
    lambda: Complex64,
) -> Result<CMat> {
    let nn = dp.port_dim();
    let dof = dp.dof();
    let g = dp.constraint_map(constraint);
    let (basis, _) = constraint_geometry(dp, &g)?;
    let w = dp.weight_matrix();
    let test = basis.adjoint() * &w;

    let mut stacked = CMat::zeros(dof, dof);
    stacked
        .view_mut((0, 0), (dof - nn, dof))
        .copy_from(&(&test * lambda - &test * &dp.a_full));
    stacked.view_mut((dof - nn, 0), (nn, dof)).copy_from(&g);

    let cond = linalg::condition(&stacked);
    if !cond.is_finite() || cond > tol::COND_LIMIT {
        return Err(Error::ResolventSingular { lambda, cond });
    }

    let mut rhs = CMat::zeros(dof, nn);
    for j in 0..nn {
        rhs[(dof - nn + j, j)] = cr(1.0);
    }
    let x = linalg::solve(&stacked, &rhs).ok_or(Error::ResolventSingular { lambda, cond })?;
    Ok(dp.c_map() * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::scenarios;
    use std::f64::consts::PI;

    fn transport_plant(nodes: usize) -> DiscretePlant {
        let model = scenarios::transport_model().unwrap();
        let grid = Grid::with_nodes((0.0, 1.0), nodes).unwrap();
        assemble(&model, &grid).unwrap()
    }

    fn beam_plant(h: f64) -> DiscretePlant {
        let model = scenarios::beam_model(1.0, 1.0).unwrap();
        let grid = Grid::with_spacing((0.0, 1.0), h).unwrap();
        assemble(&model, &grid).unwrap()
    }

    #[test]
    fn grid_from_spacing() {
        let grid = Grid::with_spacing((0.0, 1.0), 0.05).unwrap();
        assert_eq!(grid.nodes(), 21);
        assert!((grid.spacing() - 0.05).abs() < 1e-15);
        assert!((grid.coord(20) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_coefficients_match_constant_assembly() {
        // Hamiltonian density supplied per grid node instead of as a constant
        let reference = scenarios::beam_model(1.0, 2.0).unwrap();
        let grid = Grid::with_spacing((0.0, 1.0), 0.1).unwrap();
        let samples = vec![
            match reference.hamiltonian() {
                crate::model::Coefficient::Constant(m) => m.clone(),
                _ => unreachable!(),
            };
            grid.nodes()
        ];
        let sampled = crate::model::PhModel::new(
            reference.order(),
            reference.state_dim(),
            reference.interval(),
            reference.p_coeffs().to_vec(),
            reference.p0().clone(),
            crate::model::Coefficient::Samples(samples),
            reference.h_bounds(),
            reference.w_b().clone(),
            reference.w_c().clone(),
        )
        .unwrap();
        let a = assemble(&reference, &grid).unwrap();
        let b = assemble(&sampled, &grid).unwrap();
        assert_eq!(a.a_rows(), b.a_rows());
        assert_eq!(a.b_map(), b.b_map());
        // mismatched sample count is rejected
        let wrong_grid = Grid::with_spacing((0.0, 1.0), 0.05).unwrap();
        assert!(matches!(
            assemble(&sampled, &wrong_grid),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let model = scenarios::beam_model(1.0, 1.0).unwrap();
        let grid = Grid::with_nodes((0.0, 1.0), 8).unwrap();
        let err = assemble(&model, &grid).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { required: 10, .. }));
    }

    #[test]
    fn summation_by_parts_identity() {
        // Hw D + D' Hw = diag(-1, 0, ..., 0, 1)
        let nodes = 13;
        let h = 0.37;
        let d = sbp_derivative(nodes, h);
        let mut hw = nalgebra::DMatrix::<f64>::zeros(nodes, nodes);
        for j in 0..nodes {
            hw[(j, j)] = if j == 0 || j == nodes - 1 { 0.5 * h } else { h };
        }
        let form = &hw * &d + d.transpose() * &hw;
        for i in 0..nodes {
            for j in 0..nodes {
                let expect = if i == 0 && j == 0 {
                    -1.0
                } else if i == nodes - 1 && j == nodes - 1 {
                    1.0
                } else {
                    0.0
                };
                assert!((form[(i, j)] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn transport_rows_match_hand_built_stencils() {
        let nodes = 11;
        let dp = transport_plant(nodes);
        assert_eq!(dp.a_rows().shape(), (10, 11));
        let h = dp.grid().spacing();
        let mut expected = CMat::zeros(10, 11);
        // A = -D(Hx) with H = 1: central rows at nodes 1..9, upwind at 10
        for (row, j) in (1..=9usize).enumerate() {
            expected[(row, j - 1)] = cr(1.0 / (2.0 * h));
            expected[(row, j + 1)] = cr(-1.0 / (2.0 * h));
        }
        expected[(9, 9)] = cr(1.0 / h);
        expected[(9, 10)] = cr(-1.0 / h);
        assert!(linalg::max_abs_entry(&(dp.a_rows() - expected)) < 1e-12);
    }

    #[test]
    fn constant_states_are_annihilated() {
        let dp = beam_plant(0.1);
        let x = CVec::from_fn(
            dp.dof(),
            |i, _| if i % 2 == 0 { cr(2.5) } else { c(0.0, -1.0) },
        );
        let residual = dp.a_rows() * x;
        assert!(residual.iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn beam_dimensions_at_reference_grid() {
        let dp = beam_plant(0.05);
        assert_eq!(dp.dof(), 42);
        assert_eq!(dp.b_map().shape(), (4, 42));
        assert_eq!(dp.a_rows().shape(), (38, 42));
    }

    /// The heart of the discretization: the weighted energy pairing of the
    /// full collocation operator reduces exactly to the discrete port form
    /// `2 Re <f, e>`, for arbitrary (also rough) states.
    #[test]
    fn discrete_energy_balance_is_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let cases = [
            (scenarios::transport_model().unwrap(), transport_plant(17)),
            (scenarios::beam_model(1.0, 1.0).unwrap(), beam_plant(0.1)),
        ];
        for (model, dp) in &cases {
            let pm = model.port_matrices().unwrap();
            let nn = dp.port_dim();
            for _ in 0..20 {
                let x = CVec::from_fn(dp.dof(), |_, _| {
                    c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                });
                let ax = &dp.a_full * &x;
                let lhs = 2.0 * dp.weighted_inner(&ax, &x).re;
                let fe = &pm.r_ext * (dp.jet_map() * &x);
                let f = fe.rows(0, nn);
                let e = fe.rows(nn, nn);
                let rhs = 2.0 * (e.adjoint() * f)[(0, 0)].re;
                let scale = dp.energy(&x).max(1.0) / dp.grid().spacing();
                assert!(
                    (lhs - rhs).abs() < 1e-10 * scale,
                    "balance defect {} vs scale {scale}",
                    lhs - rhs
                );
            }
        }
    }

    /// For the energy-preserving beam the flux also equals `2 Re <Bx, Cx>`.
    #[test]
    fn beam_flux_equals_io_pairing() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let dp = beam_plant(0.1);
        let x = CVec::from_fn(dp.dof(), |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let ax = &dp.a_full * &x;
        let lhs = 2.0 * dp.weighted_inner(&ax, &x).re;
        let u = dp.b_map() * &x;
        let y = dp.c_map() * &x;
        let rhs = 2.0 * (y.adjoint() * u)[(0, 0)].re;
        let scale = dp.energy(&x).max(1.0) / dp.grid().spacing();
        assert!((lhs - rhs).abs() < 1e-10 * scale);
    }

    #[test]
    fn stacked_system_full_rank_for_reference_models() {
        for dp in [transport_plant(11), beam_plant(0.1)] {
            let stacked =
                linalg::vstack(&[dp.a_rows(), &dp.constraint_map(BoundaryConstraint::Input)]);
            assert_eq!(linalg::rank(&stacked, tol::RANK_REL), dp.dof());
        }
    }

    #[test]
    fn weight_matrix_is_positive_definite() {
        let dp = beam_plant(0.1);
        let w = dp.weight_matrix();
        assert!(linalg::hermitian_min_eigenvalue(&w) > 0.0);
    }

    #[test]
    fn transport_reduction_is_stable() {
        let dp = transport_plant(21);
        let sys = reduce_to_lti(&dp, BoundaryConstraint::Input).unwrap();
        let abscissa = linalg::abscissa(&sys.a_sys).unwrap();
        assert!(abscissa < 0.0, "abscissa = {abscissa}");
    }

    #[test]
    fn beam_feedback_reduction_is_stable_at_two_resolutions() {
        for h in [0.1, 0.05] {
            let dp = beam_plant(h);
            let sys = reduce_to_lti(&dp, BoundaryConstraint::OutputFeedback(1.0)).unwrap();
            let abscissa = linalg::abscissa(&sys.a_sys).unwrap();
            assert!(abscissa < 0.0, "h = {h}: abscissa = {abscissa}");
        }
    }

    /// For the energy-preserving beam under the plain input constraint the
    /// reduced generator is exactly skew; under output feedback its Hermitian
    /// part is exactly `-kappa C* C`.
    #[test]
    fn reduced_generators_inherit_the_exact_balance() {
        let dp = beam_plant(0.1);
        let sys = reduce_to_lti(&dp, BoundaryConstraint::Input).unwrap();
        let herm = linalg::hermitian_part(&sys.a_sys);
        let scale = linalg::max_abs_entry(&sys.a_sys);
        assert!(linalg::max_abs_entry(&herm) < 1e-10 * scale);

        let kappa = 1.0;
        let sys = reduce_to_lti(&dp, BoundaryConstraint::OutputFeedback(kappa)).unwrap();
        let herm = linalg::hermitian_part(&sys.a_sys);
        let expected = (sys.c_sys.adjoint() * &sys.c_sys).scale(-kappa);
        assert!(linalg::max_abs_entry(&(&herm - &expected)) < 1e-10 * scale);
        assert!(linalg::hermitian_max_eigenvalue(&herm) <= 1e-10 * scale);
    }

    #[test]
    fn transport_transfer_matches_analytic_exponential() {
        // exact solution of lambda x = -x', x(0) = u gives y = exp(-lambda) u
        let dp = transport_plant(101);
        for (omega, expect) in [(PI, c(-1.0, 0.0)), (0.0, c(1.0, 0.0))] {
            let p = transfer_function(&dp, BoundaryConstraint::Input, c(0.0, omega)).unwrap();
            let err = (p[(0, 0)] - expect).norm();
            assert!(err < 0.05, "omega = {omega}: error {err}");
        }
    }

    #[test]
    fn transfer_error_shrinks_under_refinement() {
        for omega in [PI, 2.0 * PI] {
            let exact = c(0.0, -omega).exp();
            let mut errs = Vec::new();
            for nodes in [101usize, 201] {
                let dp = transport_plant(nodes);
                let p = transfer_function(&dp, BoundaryConstraint::Input, c(0.0, omega)).unwrap();
                errs.push((p[(0, 0)] - exact).norm());
            }
            let factor = errs[0] / errs[1];
            assert!(factor >= 1.8, "omega = {omega}: factor {factor}");
        }
    }

    /// `P_kappa = P (I + kappa P)^-1` relates the two boundary constraints.
    /// The two sides are distinct eliminations of the same collocation
    /// operator, so the identity holds to discretization accuracy and the
    /// defect must vanish under refinement.
    #[test]
    fn feedback_transfer_approaches_moebius_identity() {
        let kappa = 1.0;
        let lambda = c(0.3, PI);
        let mut defects = Vec::new();
        for nodes in [41usize, 81, 161] {
            let dp = transport_plant(nodes);
            let nn = dp.port_dim();
            let p = transfer_function(&dp, BoundaryConstraint::Input, lambda).unwrap();
            let via_identity =
                &p * linalg::try_inverse(&(CMat::identity(nn, nn) + p.scale(kappa))).unwrap();
            let direct =
                transfer_function(&dp, BoundaryConstraint::OutputFeedback(kappa), lambda).unwrap();
            defects.push(linalg::max_abs_entry(&(&via_identity - &direct)));
        }
        assert!(defects[0] < 0.05, "defect = {}", defects[0]);
        assert!(
            defects[0] / defects[1] > 1.5 && defects[1] / defects[2] > 1.5,
            "defects do not shrink: {defects:?}"
        );
    }

    #[test]
    fn reduced_and_stacked_transfer_routes_agree() {
        let dp = beam_plant(0.1);
        let sys = reduce_to_lti(&dp, BoundaryConstraint::OutputFeedback(1.0)).unwrap();
        for lambda in [c(0.5, 0.0), c(0.2, PI), c(1.0, -2.0 * PI), c(0.05, 11.3)] {
            let via_reduced = sys.transfer(lambda).unwrap();
            let via_stacked =
                transfer_function(&dp, BoundaryConstraint::OutputFeedback(1.0), lambda).unwrap();
            let diff = linalg::max_abs_entry(&(&via_reduced - &via_stacked));
            assert!(
                diff < tol::TRANSFER_ROUTE_AGREEMENT,
                "lambda = {lambda}: diff = {diff}"
            );
        }
    }

    #[test]
    fn resolvent_collision_is_reported() {
        let dp = transport_plant(21);
        let sys = reduce_to_lti(&dp, BoundaryConstraint::Input).unwrap();
        let eig = linalg::eigenvalues(&sys.a_sys).unwrap()[0];
        let err = transfer_function(&dp, BoundaryConstraint::Input, eig).unwrap_err();
        assert!(matches!(err, Error::ResolventSingular { .. }));
    }

    #[test]
    fn reconstruct_satisfies_constraint_rows() {
        let dp = beam_plant(0.1);
        for constraint in [
            BoundaryConstraint::Input,
            BoundaryConstraint::OutputFeedback(1.0),
        ] {
            let sys = reduce_to_lti(&dp, constraint).unwrap();
            let s = CVec::from_fn(sys.n_states(), |i, _| {
                c((i as f64 * 0.17).sin(), 0.3 - i as f64 * 0.01)
            });
            let u = CVec::from_fn(4, |i, _| c(1.0 - i as f64, 0.5 * i as f64));
            let full = sys.reconstruct(&s, &u);
            let residual = dp.constraint_map(constraint) * &full - &u;
            assert!(residual.norm() < 1e-9, "residual {}", residual.norm());
            // with u = 0 the energy of the lifted state is exactly |s|^2
            let e = sys.energy(&s, &CVec::zeros(4));
            assert!((e - s.norm_squared()).abs() < 1e-10 * e.max(1.0));
        }
    }
}
