//! Port-Hamiltonian models on an interval and the boundary-port algebra.
//!
//! A model of order `N` with state dimension `n` is the operator
//! `x |-> sum_k P_k d^k/dz^k (H(z) x) + P_0(z) H(z) x` on `(a, b)` together
//! with boundary input/output matrices `W_B`, `W_C` acting on the boundary
//! port variables. This module validates the algebraic structure, builds the
//! port-variable transformation, and certifies passivity and stability
//! directly from the matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMat, CVec};
use crate::tol;

/// Matrix-valued coefficient: constant in space, or one sample per grid node.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(CMat),
    Samples(Vec<CMat>),
}

impl Coefficient {
    pub fn zero(n: usize) -> Self {
        Coefficient::Constant(CMat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Coefficient::Constant(CMat::identity(n, n))
    }

    /// All stored matrices (one for a constant, all samples otherwise).
    pub fn samples(&self) -> Vec<&CMat> {
        match self {
            Coefficient::Constant(m) => vec![m],
            Coefficient::Samples(v) => v.iter().collect(),
        }
    }

    /// Value at grid node `j` of a grid with `nodes` points.
    pub fn at_node(&self, j: usize, nodes: usize) -> Result<&CMat> {
        match self {
            Coefficient::Constant(m) => Ok(m),
            Coefficient::Samples(v) => {
                if v.len() != nodes {
                    return Err(Error::DimensionMismatch(format!(
                        "coefficient sampled at {} points, grid has {} nodes",
                        v.len(),
                        nodes
                    )));
                }
                Ok(&v[j])
            }
        }
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        match self {
            Coefficient::Constant(m) => Coefficient::Constant(f(m)),
            Coefficient::Samples(v) => Coefficient::Samples(v.iter().map(f).collect()),
        }
    }
}

/// A validated linear port-Hamiltonian model with boundary control and
/// observation.
#[derive(Debug, Clone)]
pub struct PhModel {
    order: usize,
    state_dim: usize,
    interval: (f64, f64),
    /// `P_1 ... P_N`; `P_k` is Hermitian for odd `k`, skew-Hermitian for even `k`.
    p_coeffs: Vec<CMat>,
    p0: Coefficient,
    /// Hamiltonian density `H(z)`, Hermitian with `m I <= H <= M I`.
    hamiltonian: Coefficient,
    h_bounds: (f64, f64),
    w_b: CMat,
    w_c: CMat,
}

impl PhModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        order: usize,
        state_dim: usize,
        interval: (f64, f64),
        p_coeffs: Vec<CMat>,
        p0: Coefficient,
        hamiltonian: Coefficient,
        h_bounds: (f64, f64),
        w_b: CMat,
        w_c: CMat,
    ) -> Result<Self> {
        let model = PhModel {
            order,
            state_dim,
            interval,
            p_coeffs,
            p0,
            hamiltonian,
            h_bounds,
            w_b,
            w_c,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Boundary port dimension `n * N` (= dim of both input and output).
    pub fn port_dim(&self) -> usize {
        self.state_dim * self.order
    }

    pub fn p_coeffs(&self) -> &[CMat] {
        &self.p_coeffs
    }

    pub fn p0(&self) -> &Coefficient {
        &self.p0
    }

    pub fn hamiltonian(&self) -> &Coefficient {
        &self.hamiltonian
    }

    pub fn h_bounds(&self) -> (f64, f64) {
        self.h_bounds
    }

    pub fn w_b(&self) -> &CMat {
        &self.w_b
    }

    pub fn w_c(&self) -> &CMat {
        &self.w_c
    }

    /// Re-runs every structural invariant; `new` calls this once.
    pub fn validate(&self) -> Result<()> {
        let n = self.state_dim;
        let nn = self.port_dim();
        if self.order == 0 || n == 0 {
            return Err(Error::InvariantViolation(
                "order and state dimension must be positive".into(),
            ));
        }
        let (a, b) = self.interval;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvariantViolation(format!(
                "interval ({a}, {b}) must satisfy a < b"
            )));
        }
        if self.p_coeffs.len() != self.order {
            return Err(Error::InvariantViolation(format!(
                "expected {} coefficient matrices, got {}",
                self.order,
                self.p_coeffs.len()
            )));
        }
        for (k, p) in self.p_coeffs.iter().enumerate() {
            let k1 = k + 1;
            if p.nrows() != n || p.ncols() != n {
                return Err(Error::DimensionMismatch(format!("P_{k1} must be {n}x{n}")));
            }
            // P_k* = (-1)^(k+1) P_k
            let sign = if k1 % 2 == 1 { 1.0 } else { -1.0 };
            let defect = linalg::max_abs_entry(&(p.adjoint() - p.scale(sign)));
            let scale = linalg::max_abs_entry(p).max(1.0);
            if defect > 1e-9 * scale {
                let kind = if k1 % 2 == 1 {
                    "Hermitian"
                } else {
                    "skew-Hermitian"
                };
                return Err(Error::InvariantViolation(format!(
                    "P_{k1} must be {kind} (defect {defect:.3e})"
                )));
            }
        }
        let p_top = &self.p_coeffs[self.order - 1];
        let sv = linalg::singular_values(p_top);
        if sv[0] == 0.0 || sv[sv.len() - 1] <= tol::RANK_REL * sv[0] {
            return Err(Error::InvariantViolation(
                "leading coefficient P_N must be invertible".into(),
            ));
        }
        for (idx, p0) in self.p0.samples().into_iter().enumerate() {
            if p0.nrows() != n || p0.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "P_0 sample {idx} must be {n}x{n}"
                )));
            }
            let max_re = linalg::hermitian_max_eigenvalue(p0);
            let scale = linalg::max_abs_entry(p0).max(1.0);
            if max_re > tol::RANK_REL * scale {
                return Err(Error::InvariantViolation(format!(
                    "Re P_0 must be negative semidefinite (sample {idx}, max eigenvalue {max_re:.3e})"
                )));
            }
        }
        let (m, big_m) = self.h_bounds;
        if !(0.0 < m && m <= big_m) {
            return Err(Error::InvariantViolation(format!(
                "Hamiltonian bounds must satisfy 0 < m <= M, got ({m}, {big_m})"
            )));
        }
        for (idx, h) in self.hamiltonian.samples().into_iter().enumerate() {
            if h.nrows() != n || h.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "Hamiltonian sample {idx} must be {n}x{n}"
                )));
            }
            let herm_defect = linalg::max_abs_entry(&(h.adjoint() - h));
            if herm_defect > 1e-9 * linalg::max_abs_entry(h).max(1.0) {
                return Err(Error::InvariantViolation(format!(
                    "Hamiltonian sample {idx} must be Hermitian (defect {herm_defect:.3e})"
                )));
            }
            let ev = linalg::hermitian_eigenvalues(h);
            let lo = ev[0];
            let hi = ev[ev.len() - 1];
            let slack = 1e-9 * big_m;
            if lo < m - slack || hi > big_m + slack {
                return Err(Error::InvariantViolation(format!(
                    "Hamiltonian sample {idx} outside declared bounds: eigenvalues in [{lo:.6e}, {hi:.6e}], bounds [{m}, {big_m}]"
                )));
            }
        }
        for (name, w) in [("W_B", &self.w_b), ("W_C", &self.w_c)] {
            if w.nrows() != nn || w.ncols() != 2 * nn {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be {}x{}",
                    nn,
                    2 * nn
                )));
            }
            if linalg::rank(w, tol::RANK_REL) != nn {
                return Err(Error::InvariantViolation(format!(
                    "{name} must have full row rank {nn}"
                )));
            }
        }
        let stacked = linalg::vstack(&[&self.w_b, &self.w_c]);
        if linalg::rank(&stacked, tol::RANK_REL) != 2 * nn {
            return Err(Error::InvariantViolation(
                "stacked [W_B; W_C] must have full rank 2nN".into(),
            ));
        }
        Ok(())
    }

    pub fn port_matrices(&self) -> Result<PortMatrices> {
        build_port_matrices(self)
    }
}

/// The port-variable transformation data for a model of port dimension `nN`.
#[derive(Debug, Clone)]
pub struct PortMatrices {
    /// Block matrix assembled from `P_1 ... P_N`; maps endpoint jets to flows.
    pub q: CMat,
    /// `(1/sqrt 2) [[Q, -Q], [I, I]]`: jet of `Hx` at both endpoints to `(f, e)`.
    pub r_ext: CMat,
    /// Block-antidiagonal pairing `[[0, I], [I, 0]]`.
    pub sigma: CMat,
}

/// Pairing matrix `[[0, I], [I, 0]]` of size `2 dim`.
pub fn sigma_matrix(dim: usize) -> CMat {
    let eye = CMat::identity(dim, dim);
    let zero = CMat::zeros(dim, dim);
    linalg::block2x2(&zero, &eye, &eye, &zero)
}

/// Assemble the `nN x nN` block matrix of the boundary energy form with
/// blocks `Q_ij = (-1)^(i-1) P_(i+j-1)` for `i + j <= N + 1` (1-based),
/// zero else: integrating `2 Re <Ax, x>` by parts leaves exactly the
/// boundary quadratic form of this matrix, which is what makes the port
/// variables carry the energy flux.
///
/// Returns `SingularQ` when the result is numerically singular, which can
/// only happen for an inconsistent leading coefficient.
pub fn build_q(p_coeffs: &[CMat], state_dim: usize, order: usize) -> Result<CMat> {
    if p_coeffs.len() != order {
        return Err(Error::DimensionMismatch(format!(
            "expected {order} coefficient matrices, got {}",
            p_coeffs.len()
        )));
    }
    let n = state_dim;
    let mut q = CMat::zeros(n * order, n * order);
    for i in 1..=order {
        for j in 1..=order {
            if i + j <= order + 1 {
                let sign = if (i - 1) % 2 == 0 { 1.0 } else { -1.0 };
                let block = p_coeffs[i + j - 2].scale(sign);
                q.view_mut(((i - 1) * n, (j - 1) * n), (n, n))
                    .copy_from(&block);
            }
        }
    }
    let sv = linalg::singular_values(&q);
    let min_sv = sv[sv.len() - 1];
    if sv[0] == 0.0 || min_sv <= tol::RANK_REL * sv[0] {
        return Err(Error::SingularQ { min_sv });
    }
    Ok(q)
}

/// Build `Q`, `R_ext` and the pairing matrix for a validated model.
pub fn build_port_matrices(model: &PhModel) -> Result<PortMatrices> {
    let nn = model.port_dim();
    let q = build_q(model.p_coeffs(), model.state_dim(), model.order())?;
    let eye = CMat::identity(nn, nn);
    let r_ext = linalg::block2x2(&q, &q.scale(-1.0), &eye, &eye).scale(1.0 / 2.0_f64.sqrt());
    // R_ext inherits invertibility from Q; check anyway
    let cond = linalg::condition(&r_ext);
    if !cond.is_finite() || cond > tol::COND_LIMIT {
        return Err(Error::SingularQ {
            min_sv: linalg::smallest_singular_value(&r_ext),
        });
    }
    Ok(PortMatrices {
        q,
        r_ext,
        sigma: sigma_matrix(nn),
    })
}

/// Map an endpoint jet of `Hx`,
/// `((Hx)(b), ..., (Hx)^(N-1)(b), (Hx)(a), ..., (Hx)^(N-1)(a))`,
/// to the boundary port variables `(f, e)`.
pub fn port_variables(jet: &CVec, pm: &PortMatrices) -> Result<(CVec, CVec)> {
    let dim = pm.r_ext.nrows();
    if jet.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "jet length {} does not match 2nN = {dim}",
            jet.len()
        )));
    }
    let fe = &pm.r_ext * jet;
    let nn = dim / 2;
    Ok((fe.rows(0, nn).clone_owned(), fe.rows(nn, nn).clone_owned()))
}

/// Express boundary maps given as rows acting on the endpoint jet of `Hx`
/// directly as a `W` matrix acting on the port variables: `W = rows * R_ext^-1`.
///
/// This is how physically stated input/output maps (selections and sign
/// patterns of endpoint values and derivatives) become `W_B`/`W_C` data.
pub fn boundary_from_jet_rows(rows: &CMat, pm: &PortMatrices) -> Result<CMat> {
    let dim = pm.r_ext.nrows();
    if rows.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "jet rows must have {dim} columns, got {}",
            rows.ncols()
        )));
    }
    let inv = linalg::try_inverse(&pm.r_ext).ok_or(Error::SingularQ {
        min_sv: linalg::smallest_singular_value(&pm.r_ext),
    })?;
    Ok(rows * inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassivityClass {
    EnergyPreserving,
    Passive,
    Neither,
}

impl std::fmt::Display for PassivityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PassivityClass::EnergyPreserving => "energy_preserving",
            PassivityClass::Passive => "passive",
            PassivityClass::Neither => "neither",
        };
        f.write_str(s)
    }
}

/// Outcome of the passivity classification together with the eigenvalue
/// diagnostics the decision was based on.
#[derive(Debug, Clone)]
pub struct PassivityReport {
    pub classification: PassivityClass,
    /// Inverse of the boundary Gram matrix; `None` when the Gram matrix is
    /// numerically singular (degenerate `W_B`/`W_C` pairing).
    pub p_wbwc: Option<CMat>,
    /// `max |entry|` of `P - Sigma` (equality test for energy preservation).
    pub equality_defect: f64,
    /// Largest eigenvalue of the Hermitian part of `P - Sigma`
    /// (semidefinite-order test for passivity).
    pub order_defect: f64,
    /// Largest `|eigenvalue|` of `Re P_0` over the samples (skewness test).
    pub p0_skew_defect: f64,
    /// Largest eigenvalue of `Re P_0` over the samples (dissipativity test).
    pub p0_dissipation_defect: f64,
    pub gram_singular: bool,
}

/// Classify a model as impedance energy preserving, impedance passive, or
/// neither, from the boundary Gram matrix and `P_0`.
pub fn classify_passivity(model: &PhModel) -> Result<PassivityReport> {
    let mut p0_skew: f64 = 0.0;
    let mut p0_diss = f64::NEG_INFINITY;
    for p0 in model.p0().samples() {
        let herm = linalg::hermitian_part(p0);
        p0_skew = p0_skew.max(linalg::max_abs_entry(&herm));
        p0_diss = p0_diss.max(linalg::hermitian_max_eigenvalue(p0));
    }
    Ok(classify_from_boundary(
        model.w_b(),
        model.w_c(),
        p0_skew,
        p0_diss,
    ))
}

/// Classification core on raw boundary matrices; `p0_skew_defect` and
/// `p0_dissipation_defect` summarize the `P_0` samples.
pub(crate) fn classify_from_boundary(
    w_b: &CMat,
    w_c: &CMat,
    p0_skew_defect: f64,
    p0_dissipation_defect: f64,
) -> PassivityReport {
    let nn = w_b.nrows();
    let sigma = sigma_matrix(nn);
    let gram = {
        let bb = w_b * &sigma * w_b.adjoint();
        let bc = w_b * &sigma * w_c.adjoint();
        let cb = w_c * &sigma * w_b.adjoint();
        let cc = w_c * &sigma * w_c.adjoint();
        linalg::block2x2(&bb, &bc, &cb, &cc)
    };
    let cond = linalg::condition(&gram);
    if !cond.is_finite() || cond > tol::COND_LIMIT {
        return PassivityReport {
            classification: PassivityClass::Neither,
            p_wbwc: None,
            equality_defect: f64::INFINITY,
            order_defect: f64::INFINITY,
            p0_skew_defect,
            p0_dissipation_defect,
            gram_singular: true,
        };
    }
    let p = linalg::try_inverse(&gram).expect("condition check guarantees invertibility");
    let big_sigma = sigma_matrix(nn);
    let diff = &p - &big_sigma;
    let equality_defect = linalg::max_abs_entry(&diff);
    let order_defect = linalg::hermitian_max_eigenvalue(&diff);
    let scale = linalg::max_abs_entry(&p).max(1.0);
    let tol_eq = tol::RANK_REL * scale;
    let classification = if equality_defect <= tol_eq && p0_skew_defect <= tol_eq {
        PassivityClass::EnergyPreserving
    } else if order_defect <= tol_eq && p0_dissipation_defect <= tol_eq {
        PassivityClass::Passive
    } else {
        PassivityClass::Neither
    };
    PassivityReport {
        classification,
        p_wbwc: Some(p),
        equality_defect,
        order_defect,
        p0_skew_defect,
        p0_dissipation_defect,
        gram_singular: false,
    }
}

/// Certificate for exponential stability of the semigroup generated under
/// the boundary condition `W_B (f, e) = 0`: positive definiteness of
/// `W_B Sigma W_B*`.
#[derive(Debug, Clone, Copy)]
pub struct StabilityCertificate {
    pub certified: bool,
    pub min_eigenvalue: f64,
}

pub fn stability_certificate(w_b: &CMat) -> StabilityCertificate {
    let nn = w_b.nrows();
    let sigma = sigma_matrix(nn);
    let gram = w_b * &sigma * w_b.adjoint();
    let min_eigenvalue = linalg::hermitian_min_eigenvalue(&gram);
    let scale = linalg::max_abs_entry(&gram).max(1.0);
    StabilityCertificate {
        certified: min_eigenvalue > tol::RANK_REL * scale,
        min_eigenvalue,
    }
}

/// Negative output feedback `u = -kappa y` merges the boundary maps into
/// `W_kappa = W_B + kappa W_C`. For an impedance passive model this satisfies
/// `W_kappa Sigma W_kappa* >= 2 kappa I`, so the certificate always holds.
pub fn feedback_boundary(model: &PhModel, kappa: f64) -> Result<(CMat, StabilityCertificate)> {
    if !(kappa > 0.0) {
        return Err(Error::InvariantViolation(format!(
            "feedback gain must be positive, got {kappa}"
        )));
    }
    let report = classify_passivity(model)?;
    if report.classification == PassivityClass::Neither {
        return Err(Error::NotPassive(format!(
            "classification is 'neither' (order defect {:.3e})",
            report.order_defect
        )));
    }
    let nn = model.port_dim();
    let sigma = sigma_matrix(nn);
    let cross = model.w_b() * &sigma * model.w_c().adjoint();
    let cross_defect = linalg::max_abs_entry(&(&cross - CMat::identity(nn, nn)));
    if cross_defect > 1e-8 {
        return Err(Error::NotPassive(format!(
            "W_B Sigma W_C* = I fails (defect {cross_defect:.3e}), the 2*kappa bound is not guaranteed"
        )));
    }
    let w_kappa = model.w_b() + model.w_c().scale(kappa);
    let cert = stability_certificate(&w_kappa);
    debug_assert!(
        cert.min_eigenvalue >= 2.0 * kappa - 1e-9 * (1.0 + 2.0 * kappa),
        "feedback certificate below the guaranteed bound: {} < {}",
        cert.min_eigenvalue,
        2.0 * kappa
    );
    Ok((w_kappa, cert))
}

/// Convenience used by tests and scenario builders: jet-coordinate rows that
/// select entry `index` of the jet with sign `sign`.
pub fn jet_selection(rows: &[(usize, f64)], jet_dim: usize) -> CMat {
    let mut m = CMat::zeros(rows.len(), jet_dim);
    for (r, &(idx, sign)) in rows.iter().enumerate() {
        m[(r, idx)] = cr(sign);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, C64};
    use crate::scenarios;
    use proptest::prelude::*;

    fn cm(rows: usize, cols: usize, data: &[f64]) -> CMat {
        CMat::from_row_slice(rows, cols, &data.iter().map(|&x| cr(x)).collect::<Vec<_>>())
    }

    #[test]
    fn build_q_single_block() {
        let q = build_q(&[cm(1, 1, &[-1.0])], 1, 1).unwrap();
        assert_eq!(q, cm(1, 1, &[-1.0]));
    }

    #[test]
    fn build_q_beam_blocks() {
        let p1 = CMat::zeros(2, 2);
        let p2 = cm(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let q = build_q(&[p1, p2], 2, 2).unwrap();
        let expected = cm(
            4,
            4,
            &[
                0.0, 0.0, 0.0, -1.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                -1.0, 0.0, 0.0, 0.0,
            ],
        );
        assert_eq!(q, expected);
    }

    #[test]
    fn build_q_scalar_second_order() {
        // N=2, n=1, P1=2, P2=1 (raw coefficient list; alternation is a model
        // invariant, not a precondition of the assembly formula)
        let q = build_q(&[cm(1, 1, &[2.0]), cm(1, 1, &[1.0])], 1, 2).unwrap();
        assert_eq!(q, cm(2, 2, &[2.0, 1.0, -1.0, 0.0]));
    }

    #[test]
    fn build_q_singular_is_rejected() {
        let err = build_q(&[cm(1, 1, &[0.0])], 1, 1).unwrap_err();
        assert!(matches!(err, Error::SingularQ { .. }));
    }

    /// Independent element-level oracle for the block assembly formula.
    fn q_oracle(p: &[CMat], n: usize, order: usize) -> CMat {
        let mut q = CMat::zeros(n * order, n * order);
        for row in 0..n * order {
            for col in 0..n * order {
                let (bi, r) = (row / n, row % n);
                let (bj, s) = (col / n, col % n);
                if bi + bj < order {
                    let sign = if bi % 2 == 0 { 1.0 } else { -1.0 };
                    q[(row, col)] = p[bi + bj][(r, s)].scale(sign);
                }
            }
        }
        q
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn build_q_matches_elementwise_oracle(
            order in 1usize..=4,
            n in 1usize..=3,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut p: Vec<CMat> = (0..order)
                .map(|_| CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
                .collect();
            // keep P_N comfortably invertible
            let top = p.last_mut().unwrap();
            *top += CMat::identity(n, n).scale(2.0);
            match build_q(&p, n, order) {
                Ok(q) => prop_assert!(linalg::max_abs_entry(&(&q - q_oracle(&p, n, order))) < 1e-12),
                Err(Error::SingularQ { .. }) => {} // random P_N may still conspire; formula not exercised
                Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
            }
        }
    }

    /// The port variables must carry the boundary energy flux:
    /// `2 Re <Ax, x>_X = 2 Re <f, e>` for `P_0 = 0`. Checked on random
    /// coefficient sets against direct quadrature of the left-hand side,
    /// with `w = Hx` a random vector polynomial.
    #[test]
    fn port_variables_carry_energy_flux() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for order in 1..=3usize {
            for n in 1..=2usize {
                // random coefficients with the Hermitian/skew alternation
                let p: Vec<CMat> = (1..=order)
                    .map(|k| {
                        let raw = CMat::from_fn(n, n, |_, _| {
                            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                        });
                        let mut m = if k % 2 == 1 {
                            (&raw + raw.adjoint()).scale(0.5)
                        } else {
                            (&raw - raw.adjoint()).scale(0.5)
                        };
                        if k == order {
                            // keep P_N invertible
                            if k % 2 == 1 {
                                m += CMat::identity(n, n).scale(2.0);
                            } else {
                                m += CMat::identity(n, n) * c(0.0, 2.0);
                            }
                        }
                        m
                    })
                    .collect();
                // random polynomial w(z), degree order + 2, per component
                let deg = order + 3;
                let coeffs: Vec<Vec<C64>> = (0..n)
                    .map(|_| {
                        (0..deg)
                            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                            .collect()
                    })
                    .collect();
                let eval = |coeffs: &[Vec<C64>], der: usize, z: f64| -> CVec {
                    CVec::from_fn(n, |comp, _| {
                        coeffs[comp]
                            .iter()
                            .enumerate()
                            .skip(der)
                            .map(|(pw, &a)| {
                                let fall: f64 = ((pw - der + 1)..=pw).map(|q| q as f64).product();
                                a * cr(fall * z.powi((pw - der) as i32))
                            })
                            .sum()
                    })
                };
                // lhs: 2 Re int w* (sum P_k w^(k)) dz by Simpson quadrature
                let panels = 400;
                let h = 1.0 / panels as f64;
                let integrand = |z: f64| -> f64 {
                    let w = eval(&coeffs, 0, z);
                    let mut aw = CVec::zeros(n);
                    for (k, pk) in p.iter().enumerate() {
                        aw += pk * eval(&coeffs, k + 1, z);
                    }
                    2.0 * (w.adjoint() * aw)[(0, 0)].re
                };
                let mut lhs = 0.0;
                for j in 0..panels {
                    let z0 = j as f64 * h;
                    lhs += h / 6.0
                        * (integrand(z0) + 4.0 * integrand(z0 + h / 2.0) + integrand(z0 + h));
                }
                // rhs: 2 Re <f, e> from the endpoint jets
                let q = build_q(&p, n, order).unwrap();
                let nn = n * order;
                let eye = CMat::identity(nn, nn);
                let r_ext =
                    linalg::block2x2(&q, &q.scale(-1.0), &eye, &eye).scale(1.0 / 2.0_f64.sqrt());
                let pm = PortMatrices {
                    q,
                    r_ext,
                    sigma: sigma_matrix(nn),
                };
                let mut jet = CVec::zeros(2 * nn);
                for der in 0..order {
                    let wb = eval(&coeffs, der, 1.0);
                    let wa = eval(&coeffs, der, 0.0);
                    for comp in 0..n {
                        jet[der * n + comp] = wb[comp];
                        jet[nn + der * n + comp] = wa[comp];
                    }
                }
                let (f, e) = port_variables(&jet, &pm).unwrap();
                let rhs = 2.0 * (e.adjoint() * f)[(0, 0)].re;
                assert!(
                    (lhs - rhs).abs() < 1e-7 * lhs.abs().max(1.0),
                    "order {order}, n {n}: quadrature {lhs} vs ports {rhs}"
                );
            }
        }
    }

    #[test]
    fn transport_port_matrices() {
        let model = scenarios::transport_model().unwrap();
        let pm = model.port_matrices().unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let expected = cm(2, 2, &[-s, s, s, s]);
        assert!(linalg::max_abs_entry(&(&pm.r_ext - expected)) < 1e-15);
    }

    #[test]
    fn beam_port_matrices_invertible() {
        let model = scenarios::beam_model(1.0, 1.0).unwrap();
        let pm = model.port_matrices().unwrap();
        assert_eq!(pm.r_ext.nrows(), 8);
        let inv = linalg::try_inverse(&pm.r_ext).unwrap();
        let defect = linalg::max_abs_entry(&(&pm.r_ext * inv - CMat::identity(8, 8)));
        assert!(defect < 1e-12);
    }

    #[test]
    fn port_variables_on_transport() {
        let model = scenarios::transport_model().unwrap();
        let pm = model.port_matrices().unwrap();
        // jet = (x(1), x(0)) with H = 1
        let x1 = c(0.3, -0.2);
        let x0 = c(-1.1, 0.4);
        let jet = CVec::from_vec(vec![x1, x0]);
        let (f, e) = port_variables(&jet, &pm).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((f[0] - (x0 - x1) * cr(s)).norm() < 1e-15);
        assert!((e[0] - (x0 + x1) * cr(s)).norm() < 1e-15);
    }

    #[test]
    fn port_variables_zero_jet() {
        let model = scenarios::beam_model(1.0, 1.0).unwrap();
        let pm = model.port_matrices().unwrap();
        let (f, e) = port_variables(&CVec::zeros(8), &pm).unwrap();
        assert!(f.norm() == 0.0 && e.norm() == 0.0);
    }

    #[test]
    fn port_variables_round_trip() {
        let model = scenarios::beam_model(1.0, 1.0).unwrap();
        let pm = model.port_matrices().unwrap();
        let target = CVec::from_fn(8, |i, _| c(i as f64 * 0.25 - 1.0, 0.5 - i as f64 * 0.1));
        let jet = linalg::try_inverse(&pm.r_ext).unwrap() * &target;
        let (f, e) = port_variables(&jet, &pm).unwrap();
        for i in 0..4 {
            assert!((f[i] - target[i]).norm() < 1e-12);
            assert!((e[i] - target[i + 4]).norm() < 1e-12);
        }
    }

    #[test]
    fn port_variables_dimension_check() {
        let model = scenarios::transport_model().unwrap();
        let pm = model.port_matrices().unwrap();
        let err = port_variables(&CVec::zeros(3), &pm).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn beam_is_energy_preserving() {
        let model = scenarios::beam_model(1.0, 1.0).unwrap();
        let report = classify_passivity(&model).unwrap();
        assert_eq!(report.classification, PassivityClass::EnergyPreserving);
        // all four Gram blocks as implied by P = Sigma
        let nn = model.port_dim();
        let sigma = sigma_matrix(nn);
        let bb = model.w_b() * &sigma * model.w_b().adjoint();
        let cc = model.w_c() * &sigma * model.w_c().adjoint();
        let bc = model.w_b() * &sigma * model.w_c().adjoint();
        assert!(linalg::max_abs_entry(&bb) < 1e-12);
        assert!(linalg::max_abs_entry(&cc) < 1e-12);
        assert!(linalg::max_abs_entry(&(&bc - CMat::identity(nn, nn))) < 1e-12);
    }

    #[test]
    fn transport_is_neither() {
        let model = scenarios::transport_model().unwrap();
        let report = classify_passivity(&model).unwrap();
        assert_eq!(report.classification, PassivityClass::Neither);
    }

    #[test]
    fn dissipative_p0_downgrades_to_passive() {
        let beam = scenarios::beam_model(1.0, 1.0).unwrap();
        let model = PhModel::new(
            beam.order(),
            beam.state_dim(),
            beam.interval(),
            beam.p_coeffs().to_vec(),
            Coefficient::Constant(CMat::identity(2, 2).scale(-1.0)),
            beam.hamiltonian().clone(),
            beam.h_bounds(),
            beam.w_b().clone(),
            beam.w_c().clone(),
        )
        .unwrap();
        let report = classify_passivity(&model).unwrap();
        assert_eq!(report.classification, PassivityClass::Passive);
    }

    #[test]
    fn degenerate_pairing_reports_neither() {
        let w = cm(1, 2, &[1.0, 0.0]);
        let report = classify_from_boundary(&w, &w, 0.0, 0.0);
        assert!(report.gram_singular);
        assert_eq!(report.classification, PassivityClass::Neither);
        assert!(report.p_wbwc.is_none());
    }

    #[test]
    fn stability_certificate_transport() {
        let s = 1.0 / 2.0_f64.sqrt();
        let cert = stability_certificate(&cm(1, 2, &[s, s]));
        assert!(cert.certified);
        assert!((cert.min_eigenvalue - 1.0).abs() < 1e-12);

        let cert = stability_certificate(&cm(1, 2, &[s, -s]));
        assert!(!cert.certified);
        assert!((cert.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn feedback_boundary_beam() {
        let model = scenarios::beam_model(1.0, 1.0).unwrap();
        for kappa in [1.0, 2.0] {
            let (_, cert) = feedback_boundary(&model, kappa).unwrap();
            assert!(cert.certified);
            assert!(cert.min_eigenvalue >= 2.0 * kappa - 1e-9);
        }
    }

    #[test]
    fn feedback_boundary_small_kappa_limit() {
        // energy preserving: W_B Sigma W_B* = 0, so the certificate value is
        // exactly 2 kappa
        let model = scenarios::beam_model(1.0, 1.0).unwrap();
        let kappa = 1e-3;
        let (_, cert) = feedback_boundary(&model, kappa).unwrap();
        assert!((cert.min_eigenvalue - 2.0 * kappa).abs() < 1e-10);
    }

    #[test]
    fn feedback_boundary_rejects_non_passive() {
        let model = scenarios::transport_model().unwrap();
        let err = feedback_boundary(&model, 1.0).unwrap_err();
        assert!(matches!(err, Error::NotPassive(_)));
    }

    /// Random energy-preserving boundary pair: for any invertible T,
    /// W_B = (1/sqrt2)[T, iT] and W_C = (1/sqrt2)[iT^-*, T^-*] give Gram = Sigma.
    fn random_energy_preserving(nn: usize, seed: u64) -> (CMat, CMat) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = CMat::from_fn(nn, nn, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        t += CMat::identity(nn, nn).scale(2.0);
        let tinv_adj = linalg::try_inverse(&t).unwrap().adjoint();
        let s = 1.0 / 2.0_f64.sqrt();
        let i = c(0.0, 1.0);
        let w_b = linalg::hstack(&[&t, &(t.scale(1.0) * i)]).scale(s);
        let w_c = linalg::hstack(&[&(&tinv_adj * i), &tinv_adj]).scale(s);
        (w_b, w_c)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_passive_pairs_certify_feedback(seed in any::<u64>(), nn in 1usize..=3) {
            use rand::{Rng, SeedableRng};
            let (w_b0, w_c) = random_energy_preserving(nn, seed);
            // add a PSD Hermitian block R via W_B -> W_B + R W_C: Gram becomes
            // [[2R, I], [I, 0]], still impedance passive
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b9);
            let g = CMat::from_fn(nn, nn, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let r = &g * g.adjoint();
            let w_b = &w_b0 + &r * &w_c;
            let report = classify_from_boundary(&w_b, &w_c, 0.0, 0.0);
            prop_assert!(matches!(
                report.classification,
                PassivityClass::Passive | PassivityClass::EnergyPreserving
            ));
            for kappa in [0.1, 1.0, 10.0] {
                let w_kappa = &w_b + w_c.scale(kappa);
                let cert = stability_certificate(&w_kappa);
                prop_assert!(cert.certified, "kappa={kappa}: {}", cert.min_eigenvalue);
                prop_assert!(cert.min_eigenvalue >= 2.0 * kappa - 1e-8 * (1.0 + kappa));
            }
        }
    }

    #[test]
    fn validation_rejects_broken_alternation() {
        // P_1 must be Hermitian
        let p1 = CMat::from_row_slice(1, 1, &[c(0.0, 1.0)]);
        let err = PhModel::new(
            1,
            1,
            (0.0, 1.0),
            vec![p1],
            Coefficient::zero(1),
            Coefficient::identity(1),
            (1.0, 1.0),
            cm(1, 2, &[1.0, 0.0]),
            cm(1, 2, &[0.0, 1.0]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)));
    }

    #[test]
    fn validation_rejects_indefinite_hamiltonian() {
        let err = PhModel::new(
            1,
            1,
            (0.0, 1.0),
            vec![cm(1, 1, &[-1.0])],
            Coefficient::zero(1),
            Coefficient::Constant(cm(1, 1, &[-1.0])),
            (0.5, 2.0),
            cm(1, 2, &[1.0, 0.0]),
            cm(1, 2, &[0.0, 1.0]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)));
    }
}
