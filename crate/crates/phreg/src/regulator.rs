//! Exosystem handling, minimal-order robust controller synthesis, the
//! internal-model rank conditions, closed-loop assembly, and the
//! regulator-equation solver used as the regulation oracle.

use rayon::prelude::*;

use crate::disc::{transfer_function, BoundaryConstraint, DiscretePlant, LtiSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::tol;

/// Finite-dimensional signal generator `v' = S v`, `w = E v`,
/// `y_ref = -F v` with `S = diag(i omega_k)`.
#[derive(Debug, Clone)]
pub struct Exosystem {
    pub freqs: Vec<f64>,
    pub e: CMat,
    pub f: CMat,
}

impl Exosystem {
    pub fn new(freqs: Vec<f64>, e: CMat, f: CMat) -> Result<Self> {
        let q = freqs.len();
        if q == 0 {
            return Err(Error::InvariantViolation(
                "exosystem needs at least one frequency".into(),
            ));
        }
        for i in 0..q {
            for j in i + 1..q {
                if freqs[i] == freqs[j] {
                    return Err(Error::InvariantViolation(format!(
                        "exosystem frequencies must be pairwise distinct (omega = {})",
                        freqs[i]
                    )));
                }
            }
        }
        if e.ncols() != q || f.ncols() != q || e.nrows() != f.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "E is {}x{}, F is {}x{}, expected both with {} columns and equal rows",
                e.nrows(),
                e.ncols(),
                f.nrows(),
                f.ncols(),
                q
            )));
        }
        Ok(Exosystem { freqs, e, f })
    }

    pub fn dim(&self) -> usize {
        self.freqs.len()
    }

    pub fn s_matrix(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(
            self.freqs.len(),
            self.freqs.iter().map(|&w| c(0.0, w)),
        ))
    }
}

/// Exact exosystem solution `v_k(t) = exp(i omega_k t) v0_k`.
pub fn exo_solution(exo: &Exosystem, v0: &CVec, t: f64) -> CVec {
    assert_eq!(
        v0.len(),
        exo.dim(),
        "v0 length must match exosystem dimension"
    );
    CVec::from_iterator(
        exo.dim(),
        exo.freqs
            .iter()
            .zip(v0.iter())
            .map(|(&w, &v)| c(0.0, w * t).exp() * v),
    )
}

/// How the per-frequency gains `K_0^k` are chosen.
#[derive(Debug, Clone)]
pub enum GainRule {
    /// `K_0^k = P_kappa(i omega_k)^+`, which makes every `G_2` block `-I`.
    Pseudoinverse,
    /// User-supplied blocks, one per frequency.
    Custom(Vec<CMat>),
}

/// Minimal-order internal-model controller
/// `z' = G_1 z + G_2 e`, `u = K z - kappa e` with
/// `G_1 = diag(i omega_k I)`, `G_2 = stack(-(P_kappa(i omega_k) K_0^k)*)`,
/// `K = epsilon [K_0^1 ... K_0^q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub freqs: Vec<f64>,
    pub g2_blocks: Vec<CMat>,
    pub k0_blocks: Vec<CMat>,
    pub kappa: f64,
    pub epsilon: f64,
}

impl Controller {
    /// Copies of the exosystem frequencies this controller replicates.
    pub fn dim(&self) -> usize {
        self.freqs.len()
    }

    pub fn port_dim(&self) -> usize {
        self.g2_blocks.first().map_or(0, |b| b.ncols())
    }

    pub fn state_dim(&self) -> usize {
        self.dim() * self.port_dim()
    }

    /// Block-diagonal internal model `diag(i omega_k I)`.
    pub fn g1(&self) -> CMat {
        let nn = self.port_dim();
        let mut g1 = CMat::zeros(self.state_dim(), self.state_dim());
        for (k, &w) in self.freqs.iter().enumerate() {
            for i in 0..nn {
                g1[(k * nn + i, k * nn + i)] = c(0.0, w);
            }
        }
        g1
    }

    /// Stacked injection `[G_2^1; ...; G_2^q]`.
    pub fn g2(&self) -> CMat {
        let refs: Vec<&CMat> = self.g2_blocks.iter().collect();
        linalg::vstack(&refs)
    }

    /// Feedback gain `epsilon [K_0^1 ... K_0^q]`.
    pub fn k_gain(&self) -> CMat {
        let refs: Vec<&CMat> = self.k0_blocks.iter().collect();
        linalg::hstack(&refs).scale(self.epsilon)
    }
}

/// Per-frequency transfer-function values and gains used by synthesis.
#[derive(Debug)]
pub struct ControllerGains {
    pub p_values: Vec<CMat>,
    pub k0_blocks: Vec<CMat>,
}

/// Evaluate the (already feedback-stabilized) plant's transfer function at
/// every exosystem frequency, check surjectivity, and pick gains.
pub fn controller_gains<F>(mut eval: F, freqs: &[f64], rule: &GainRule) -> Result<ControllerGains>
where
    F: FnMut(f64) -> Result<CMat>,
{
    let mut p_values = Vec::with_capacity(freqs.len());
    let mut k0_blocks = Vec::with_capacity(freqs.len());
    for (k, &omega) in freqs.iter().enumerate() {
        let p = eval(omega)?;
        let expected = p.nrows();
        let rank = linalg::rank(&p, tol::RANK_REL);
        if rank < expected {
            return Err(Error::NotSurjective {
                omega,
                rank,
                expected,
            });
        }
        let k0 = match rule {
            GainRule::Pseudoinverse => linalg::pseudo_inverse(&p)?,
            GainRule::Custom(blocks) => {
                let blk = blocks.get(k).ok_or_else(|| {
                    Error::DimensionMismatch(format!(
                        "gain rule provides {} blocks for {} frequencies",
                        blocks.len(),
                        freqs.len()
                    ))
                })?;
                let cond = linalg::condition(&(&p * blk));
                if !cond.is_finite() || cond > tol::COND_LIMIT {
                    return Err(Error::InvariantViolation(format!(
                        "P(i omega) K_0 must be invertible at omega = {omega}"
                    )));
                }
                blk.clone()
            }
        };
        p_values.push(p);
        k0_blocks.push(k0);
    }
    Ok(ControllerGains {
        p_values,
        k0_blocks,
    })
}

/// Build the controller for an impedance passive plant: gains come from the
/// transfer function of the kappa-feedback plant evaluated on the exosystem
/// frequencies.
pub fn synthesize(
    exo: &Exosystem,
    plant: &DiscretePlant,
    kappa: f64,
    epsilon: f64,
    rule: &GainRule,
) -> Result<Controller> {
    let gains = controller_gains(
        |omega| {
            transfer_function(
                plant,
                BoundaryConstraint::OutputFeedback(kappa),
                c(0.0, omega),
            )
        },
        &exo.freqs,
        rule,
    )?;
    Ok(controller_from_gains(&exo.freqs, gains, kappa, epsilon))
}

/// Assemble the controller blocks from precomputed gains:
/// `G_2^k = -(P_k K_0^k)*`.
pub fn controller_from_gains(
    freqs: &[f64],
    gains: ControllerGains,
    kappa: f64,
    epsilon: f64,
) -> Controller {
    let g2_blocks = gains
        .p_values
        .iter()
        .zip(&gains.k0_blocks)
        .map(|(p, k0)| (p * k0).adjoint().scale(-1.0))
        .collect();
    Controller {
        freqs: freqs.to_vec(),
        g2_blocks,
        k0_blocks: gains.k0_blocks,
        kappa,
        epsilon,
    }
}

/// Rank diagnostics of the internal-model conditions at one frequency.
#[derive(Debug, Clone)]
pub struct FrequencyRankCheck {
    pub freq: f64,
    pub rank_shifted: usize,
    pub rank_joint: usize,
    pub intersection_trivial: bool,
}

/// Outcome of the internal-model conditions
/// `R(i omega_k - G_1) intersect R(G_2) = {0}` and `N(G_2) = {0}`.
#[derive(Debug, Clone)]
pub struct GConditionReport {
    pub ok: bool,
    pub g2_rank: usize,
    pub kernel_trivial: bool,
    pub per_freq: Vec<FrequencyRankCheck>,
}

/// Check the internal-model conditions of a controller against a frequency
/// list (normally the exosystem's spectrum).
pub fn check_g_conditions(ctrl: &Controller, freqs: &[f64]) -> GConditionReport {
    let g1 = ctrl.g1();
    let g2 = ctrl.g2();
    let dim = g1.nrows();
    let g2_rank = linalg::rank(&g2, tol::GCOND_REL);
    let kernel_trivial = g2_rank == g2.ncols();
    let mut per_freq = Vec::with_capacity(freqs.len());
    let mut ok = kernel_trivial;
    for &w in freqs {
        let shifted = CMat::identity(dim, dim) * c(0.0, w) - &g1;
        let rank_shifted = linalg::rank(&shifted, tol::GCOND_REL);
        let joint = linalg::hstack(&[&shifted, &g2]);
        let rank_joint = linalg::rank(&joint, tol::GCOND_REL);
        let intersection_trivial = rank_joint == rank_shifted + g2_rank;
        ok &= intersection_trivial;
        per_freq.push(FrequencyRankCheck {
            freq: w,
            rank_shifted,
            rank_joint,
            intersection_trivial,
        });
    }
    GConditionReport {
        ok,
        g2_rank,
        kernel_trivial,
        per_freq,
    }
}

/// Closed loop of the feedback-stabilized plant and the controller on the
/// extended state (reduced plant state, controller state).
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub a_e: CMat,
    pub b_e: CMat,
    pub c_e: CMat,
    pub d_e: CMat,
    pub n_plant: usize,
    pub n_ctrl: usize,
    /// The reduced plant, kept for grid-state reconstruction; absent for
    /// synthetic loops assembled directly from matrices.
    pub plant: Option<LtiSystem>,
    /// `K` with the tuning factor applied.
    pub k_gain: CMat,
    /// `E - kappa F`: the exogenous forcing entering the boundary condition.
    pub exo_input: CMat,
}

impl ClosedLoop {
    /// Wrap raw extended-state matrices; no plant energy is recorded when
    /// simulating such a loop.
    pub fn from_matrices(a_e: CMat, b_e: CMat, c_e: CMat, d_e: CMat) -> Self {
        let n = a_e.nrows();
        let q = b_e.ncols();
        ClosedLoop {
            a_e,
            b_e,
            c_e,
            d_e,
            n_plant: 0,
            n_ctrl: n,
            plant: None,
            k_gain: CMat::zeros(0, n),
            exo_input: CMat::zeros(0, q),
        }
    }
}

/// Couple plant and controller:
///
/// ```text
/// x' = A x + B (K z + (E - kappa F) v)
/// z' = G_1 z + G_2 e
/// e  = C x + D (K z + (E - kappa F) v) + F v
/// ```
pub fn assemble_closed_loop(
    plant: &LtiSystem,
    ctrl: &Controller,
    exo: &Exosystem,
) -> Result<ClosedLoop> {
    let nn = plant.n_ports();
    if ctrl.port_dim() != nn {
        return Err(Error::DimensionMismatch(format!(
            "controller port dimension {} does not match plant {}",
            ctrl.port_dim(),
            nn
        )));
    }
    if exo.e.nrows() != nn || exo.f.nrows() != nn {
        return Err(Error::DimensionMismatch(format!(
            "exosystem maps must have {nn} rows, got E: {}, F: {}",
            exo.e.nrows(),
            exo.f.nrows()
        )));
    }
    let n_p = plant.n_states();
    let n_c = ctrl.state_dim();
    let g1 = ctrl.g1();
    let g2 = ctrl.g2();
    let k = ctrl.k_gain();
    let exo_input = &exo.e - exo.f.scale(ctrl.kappa);

    let bk = &plant.b_sys * &k;
    let dk = &plant.d_sys * &k;
    let a_e = linalg::block2x2(&plant.a_sys, &bk, &(&g2 * &plant.c_sys), &(&g1 + &g2 * &dk));
    let d_e = &plant.d_sys * &exo_input + &exo.f;
    let b_e = linalg::vstack(&[&(&plant.b_sys * &exo_input), &(&g2 * &d_e)]);
    let c_e = linalg::hstack(&[&plant.c_sys, &dk]);

    debug_assert_eq!(a_e.nrows(), n_p + n_c);
    Ok(ClosedLoop {
        a_e,
        b_e,
        c_e,
        d_e,
        n_plant: n_p,
        n_ctrl: n_c,
        plant: Some(plant.clone()),
        k_gain: k,
        exo_input,
    })
}

/// Largest real part of the spectrum (dense eigenvalue solve).
pub fn spectral_abscissa(a: &CMat) -> Result<f64> {
    linalg::abscissa(a)
}

/// Solution of the regulator equations and the residual of the output
/// equation.
#[derive(Debug, Clone)]
pub struct RegulatorSolution {
    /// Columnwise Sylvester solution, `(n_plant + n_ctrl) x q`.
    pub sigma: CMat,
    /// `||C_e Sigma + D_e||_2`.
    pub residual: f64,
    /// Residual over `max(1, ||D_e||_2)`.
    pub residual_rel: f64,
}

/// Solve `Sigma S = A_e Sigma + B_e` columnwise (the exosystem basis is the
/// standard one since `S` is diagonal) and report `||C_e Sigma + D_e||`.
///
/// Requires the closed loop to be exponentially stable: the solve is refused
/// otherwise because `sigma(S)` lies on the imaginary axis.
pub fn solve_regulator_equations(cl: &ClosedLoop, exo: &Exosystem) -> Result<RegulatorSolution> {
    solve_regulator_core(&cl.a_e, &cl.b_e, &cl.c_e, &cl.d_e, &exo.freqs)
}

pub(crate) fn solve_regulator_core(
    a_e: &CMat,
    b_e: &CMat,
    c_e: &CMat,
    d_e: &CMat,
    freqs: &[f64],
) -> Result<RegulatorSolution> {
    let abscissa = spectral_abscissa(a_e)?;
    if abscissa >= 0.0 {
        return Err(Error::Unstable { abscissa });
    }
    let dim = a_e.nrows();
    let mut sigma = CMat::zeros(dim, freqs.len());
    for (k, &w) in freqs.iter().enumerate() {
        let shifted = CMat::identity(dim, dim) * c(0.0, w) - a_e;
        let rhs = b_e.column(k).clone_owned();
        let col = linalg::solve(&shifted, &CMat::from_columns(&[rhs])).ok_or(
            Error::ResolventSingular {
                lambda: c(0.0, w),
                cond: f64::INFINITY,
            },
        )?;
        sigma.set_column(k, &col.column(0));
    }
    let defect = c_e * &sigma + d_e;
    let residual = linalg::spectral_norm(&defect);
    let residual_rel = residual / linalg::spectral_norm(d_e).max(1.0);
    Ok(RegulatorSolution {
        sigma,
        residual,
        residual_rel,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub abscissa: f64,
}

/// Result of scanning the tuning parameter.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub best: SweepEntry,
    /// Largest grid value such that every grid point up to it (the longest
    /// prefix) has a strictly negative abscissa; the empirical stability
    /// margin of the tuning parameter.
    pub epsilon_star: Option<f64>,
}

/// Closed-loop spectral abscissa per tuning value over an ascending positive
/// grid. Entries are independent and evaluated in parallel.
pub fn epsilon_sweep(
    plant: &LtiSystem,
    exo: &Exosystem,
    kappa: f64,
    grid: &[f64],
) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.iter().any(|&e| !(e > 0.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvariantViolation(
            "epsilon grid must be positive and strictly ascending".into(),
        ));
    }
    let gains = controller_gains(
        |omega| plant.transfer(c(0.0, omega)),
        &exo.freqs,
        &GainRule::Pseudoinverse,
    )?;
    let g2_blocks: Vec<CMat> = gains
        .p_values
        .iter()
        .zip(&gains.k0_blocks)
        .map(|(p, k0)| (p * k0).adjoint().scale(-1.0))
        .collect();

    let entries: Vec<SweepEntry> = grid
        .par_iter()
        .map(|&epsilon| {
            let ctrl = Controller {
                freqs: exo.freqs.clone(),
                g2_blocks: g2_blocks.clone(),
                k0_blocks: gains.k0_blocks.clone(),
                kappa,
                epsilon,
            };
            let cl = assemble_closed_loop(plant, &ctrl, exo)?;
            let abscissa = spectral_abscissa(&cl.a_e)?;
            Ok(SweepEntry { epsilon, abscissa })
        })
        .collect::<Result<_>>()?;

    let best = entries
        .iter()
        .copied()
        .min_by(|a, b| a.abscissa.partial_cmp(&b.abscissa).unwrap())
        .expect("grid is nonempty");
    let epsilon_star = entries
        .iter()
        .take_while(|e| e.abscissa < 0.0)
        .last()
        .map(|e| e.epsilon);
    Ok(SweepReport {
        entries,
        best,
        epsilon_star,
    })
}
