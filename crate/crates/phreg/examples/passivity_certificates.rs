//! Classify the built-in models and certify stability from the boundary
//! matrices alone: the Gram test for impedance passivity, positive
//! definiteness of `W_B Sigma W_B*`, and the `2 kappa` lower bound under
//! negative output feedback.

use phreg::model::{classify_passivity, feedback_boundary, stability_certificate};
use phreg::scenarios;

fn main() -> phreg::Result<()> {
    for (name, model) in [
        ("beam", scenarios::beam_model(1.0, 1.0)?),
        ("transport", scenarios::transport_model()?),
    ] {
        println!(
            "== {name} (order {}, state dim {})",
            model.order(),
            model.state_dim()
        );
        let report = classify_passivity(&model)?;
        println!("  classification:      {}", report.classification);
        println!("  equality defect:     {:.3e}", report.equality_defect);
        println!("  order defect:        {:.3e}", report.order_defect);
        let cert = stability_certificate(model.w_b());
        println!(
            "  W_B certificate:     {} (min eigenvalue {:+.6e})",
            if cert.certified {
                "certified"
            } else {
                "not certified"
            },
            cert.min_eigenvalue
        );
        for kappa in [0.5, 1.0, 2.0] {
            match feedback_boundary(&model, kappa) {
                Ok((_, fb)) => println!(
                    "  kappa = {kappa}: W_kappa certificate min eigenvalue {:.9} (bound {})",
                    fb.min_eigenvalue,
                    2.0 * kappa
                ),
                Err(e) => println!("  kappa = {kappa}: {e}"),
            }
        }
        println!();
    }
    Ok(())
}
