//! Synthesize the minimal-order robust regulation controller for the beam
//! and check the internal-model rank conditions, including how a detuned
//! frequency is caught.

use phreg::disc::{assemble, transfer_function, BoundaryConstraint, Grid};
use phreg::linalg::{self, c, CMat};
use phreg::regulator::{check_g_conditions, synthesize, GainRule};
use phreg::scenarios;

fn main() -> phreg::Result<()> {
    let model = scenarios::beam_model(1.0, 1.0)?;
    let grid = Grid::with_spacing((0.0, 1.0), 0.05)?;
    let dp = assemble(&model, &grid)?;
    let exo = scenarios::beam_exosystem()?;
    let kappa = 1.0;

    println!("transfer function of the feedback plant on the exosystem spectrum:");
    for &omega in &exo.freqs {
        let p = transfer_function(
            &dp,
            BoundaryConstraint::OutputFeedback(kappa),
            c(0.0, omega),
        )?;
        println!(
            "  P_kappa(i*{omega:+.4}): norm {:.4}, condition {:.2}",
            linalg::spectral_norm(&p),
            linalg::condition(&p)
        );
    }

    let ctrl = synthesize(&exo, &dp, kappa, 0.17, &GainRule::Pseudoinverse)?;
    println!(
        "\ncontroller: state dim {}, K is {}x{}",
        ctrl.state_dim(),
        ctrl.k_gain().nrows(),
        ctrl.k_gain().ncols()
    );
    let nn = ctrl.port_dim();
    for (k, blk) in ctrl.g2_blocks.iter().enumerate() {
        let defect = linalg::max_abs_entry(&(blk + CMat::identity(nn, nn)));
        println!("  G2 block {k}: distance from -I = {defect:.2e}");
    }

    let report = check_g_conditions(&ctrl, &exo.freqs);
    println!("\ninternal-model conditions: ok = {}", report.ok);
    for f in &report.per_freq {
        println!(
            "  omega {:+.4}: rank(i w - G1) = {}, joint rank = {}, intersection trivial: {}",
            f.freq, f.rank_shifted, f.rank_joint, f.intersection_trivial
        );
    }

    let mut broken = ctrl.clone();
    broken.freqs[0] += 0.5;
    let report = check_g_conditions(&broken, &exo.freqs);
    println!(
        "\nwith the first frequency detuned by +0.5: ok = {}",
        report.ok
    );
    for f in report.per_freq.iter().filter(|f| !f.intersection_trivial) {
        println!("  failure at omega {:+.4}", f.freq);
    }
    Ok(())
}
