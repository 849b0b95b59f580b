//! phreg: boundary-controlled port-Hamiltonian systems on an interval.
//!
//! The crate models arbitrary-order linear port-Hamiltonian systems with
//! boundary control and observation, certifies passivity and stability from
//! the boundary matrices alone, synthesizes the minimal-order internal-model
//! controller for robust output regulation, and verifies regulation by
//! finite-difference closed-loop simulation.
//!
//! The primary interface is the `examples/` directory, one runnable example
//! per capability:
//!
//! ```text
//! cargo run --release --example passivity_certificates
//! cargo run --release --example transfer_function_convergence
//! cargo run --release --example controller_synthesis
//! cargo run --release --example beam_regulation
//! cargo run --release --example regulator_equations
//! cargo run --release --example epsilon_sweep
//! cargo run --release --example energy_audit
//! cargo run --release --example robustness_perturbation
//! ```
//!
//! A thin `phreg` binary exposes the same pipeline on JSON scenario files:
//! `phreg validate|synth|simulate|sweep|reproduce-beam --config <file> --out <dir>`.
//!
//! The whole pipeline in six calls:
//!
//! ```
//! use phreg::disc::{assemble, reduce_to_lti, BoundaryConstraint, Grid};
//! use phreg::regulator::{assemble_closed_loop, solve_regulator_equations, synthesize, GainRule};
//! use phreg::scenarios;
//!
//! let model = scenarios::beam_model(1.0, 1.0)?;
//! let grid = Grid::with_spacing((0.0, 1.0), 0.1)?;
//! let plant = assemble(&model, &grid)?;
//! let stabilized = reduce_to_lti(&plant, BoundaryConstraint::OutputFeedback(1.0))?;
//! let exo = scenarios::beam_exosystem()?;
//! let controller = synthesize(&exo, &plant, 1.0, 0.17, &GainRule::Pseudoinverse)?;
//! let loop_ = assemble_closed_loop(&stabilized, &controller, &exo)?;
//! let regulation = solve_regulator_equations(&loop_, &exo)?;
//! assert!(regulation.residual_rel < 1e-8);
//! # Ok::<(), phreg::Error>(())
//! ```

// negated float comparisons are deliberate: they reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod disc;
pub mod error;
pub mod linalg;
pub mod model;
pub mod output;
pub mod regulator;
pub mod scenarios;
pub mod sim;
pub mod stencil;
pub mod tol;

pub use error::{Error, Result};
