//! Constants of the Poincaré/Harnack-type ratios, measured once on the
//! reference corpus (`CORPUS_SEED`, `CORPUS_SIZE` fields) with the Laplacian
//! and the meshes fixed in [`crate::properties`]. Checks accept a ratio up
//! to `MARGIN` times its constant.
//!
//! Regenerate with `cargo run --release --example calibrate`.

use crate::corpus::Corpus;
use crate::error::Result;
use crate::operator::EllipticOperator;
use crate::properties::{
    average_poincare_ratio, harnack_average_ratio, kato_poincare_ratio, kato_reference_measures, PropertyOutcome,
    CORPUS_SEED, CORPUS_SIZE,
};

pub const MARGIN: f64 = 2.0;

/// `∫_A u² dμ ≤ C ‖μ‖_K ∫ |∇u|²` on bubbles of `B_{0.3}`.
pub const KATO_POINCARE: f64 = 5.037013e-2;

/// `M_r^ρ φ ≤ C M_r^{qr} φ` for positive `φ`, `q = 1/2`.
pub const HARNACK_AVERAGE: f64 = 1.000066;

/// `‖u - M_r^ρ u‖_{L²(Q_r)} ≤ C r ‖∇u‖_{L²(Q_r)}`.
pub const AVERAGE_POINCARE: f64 = 6.113585e-1;

fn outcome(name: &str, value: f64, constant: f64) -> PropertyOutcome {
    let bound = MARGIN * constant;
    PropertyOutcome::new(
        name,
        value.is_finite() && value <= bound,
        format!("ratio {value:.6e}, calibrated {constant:.6e}, bound {bound:.6e}"),
    )
}

/// Recomputes the three ratios on the reference corpus for `op`.
pub fn calibrated_checks(op: &EllipticOperator) -> Result<Vec<PropertyOutcome>> {
    let corpus = Corpus::new(CORPUS_SEED, CORPUS_SIZE);
    Ok(vec![
        outcome(
            "Kato-weighted Poincaré inequality",
            kato_poincare_ratio(&kato_reference_measures(), &corpus)?,
            KATO_POINCARE,
        ),
        outcome("Harnack comparison of capacitary averages", harnack_average_ratio(op, &corpus)?, HARNACK_AVERAGE),
        outcome("Poincaré inequality for capacitary averages", average_poincare_ratio(op, &corpus)?, AVERAGE_POINCARE),
    ])
}
