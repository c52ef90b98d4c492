use proptest::prelude::*;

use relaxlab::capacity::{cap_concentric_closed_form, hole_radius};
use relaxlab::measures::{Density, MeasureSpec};
use relaxlab::operator::{Coefficient, ScalarField};
use relaxlab::perforation::{build_holes, build_holes_cached, holes_report, RadiusCache};
use relaxlab::perforation::HoleFamily;
use relaxlab::{EllipticOperator, Error, Rect, Result};

fn representable(r: Result<HoleFamily>) -> Option<HoleFamily> {
    match r {
        Err(Error::UnderResolved(_)) => None,
        r => Some(r.unwrap()),
    }
}

fn isotropic() -> impl Strategy<Value = (EllipticOperator, f64)> {
    prop_oneof![
        Just((EllipticOperator::laplace(), 1.0)),
        (0.5..2.0f64).prop_map(|a| {
            let op = EllipticOperator::new(Coefficient::Scalar(ScalarField::Constant(a)), 0.5f64.min(1.0 / a).min(a)).unwrap();
            (op, a)
        }),
    ]
}

fn density_measure() -> impl Strategy<Value = MeasureSpec> {
    prop_oneof![
        (1.0..400.0f64).prop_map(Density::Constant),
        (1.0..300.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..2.0f64).prop_map(|(coeff, x, y, exponent)| Density::Radial {
            coeff,
            center: [x, y],
            exponent
        }),
        (0.0..300.0f64, 0.0..300.0f64, 1..7u32).prop_map(|(a, b, k)| Density::Checkerboard { a, b, k }),
    ]
    .prop_map(|d| MeasureSpec::new(Rect::unit(), d, vec![], vec![]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inversion_recovers_capacity(log_t in -1.5..4.5f64, r in 0.01..0.5f64, (op, a) in isotropic()) {
        let t = 10f64.powf(log_t);
        let rho = hole_radius(t, r, &op, 1e-9).unwrap();
        prop_assert!(rho > 0.0 && rho < r);
        let cap = a * cap_concentric_closed_form(rho, r, 2).unwrap();
        prop_assert!((cap / t - 1.0).abs() < 1e-8, "t = {t}, cap = {cap}");
    }

    #[test]
    fn underflowing_radii_are_errors(t in 1e-4..5e-3f64) {
        prop_assert!(hole_radius(t, 0.1, &EllipticOperator::laplace(), 1e-9).is_err());
    }

    #[test]
    fn truncation_shrinks_every_hole(mu in density_measure(), k in 0.0..300.0f64, h in 3..8u32) {
        let op = EllipticOperator::laplace();
        let full = representable(build_holes(&Rect::unit(), &mu, &op, h));
        let cut = representable(build_holes(&Rect::unit(), &mu.truncate_density(k), &op, h));
        prop_assume!(full.is_some() && cut.is_some());
        let (full, cut) = (full.unwrap(), cut.unwrap());
        prop_assert_eq!(full.holes.len(), cut.holes.len());
        for (a, b) in full.holes.iter().zip(&cut.holes) {
            prop_assert_eq!(a.i, b.i);
            prop_assert!(b.radius <= a.radius, "{:?}: {} > {}", a.i, b.radius, a.radius);
        }
    }

    #[test]
    fn hole_capacities_add_up_to_cube_masses(mu in density_measure(), h in 3..9u32, (op, a) in isotropic()) {
        let fam = representable(build_holes(&Rect::unit(), &mu, &op, h));
        prop_assume!(fam.is_some());
        let fam = fam.unwrap();
        let r = fam.reference_radius();
        let caps: f64 = fam.active().map(|hole| a * cap_concentric_closed_form(hole.radius, r, 2).unwrap()).sum();
        let masses = holes_report(&fam, 1e-3).total_capacity;
        prop_assert!((caps - masses).abs() <= 1e-6 * masses.max(1e-12), "{caps} vs {masses}");
        prop_assert!(masses <= mu.total_mass() * (1.0 + 1e-9));
    }

    #[test]
    fn families_are_deterministic(mu in density_measure(), h in 3..9u32) {
        let op = EllipticOperator::laplace();
        let a = representable(build_holes(&Rect::unit(), &mu, &op, h));
        prop_assume!(a.is_some());
        let a = a.unwrap();
        let b = build_holes_cached(&Rect::unit(), &mu, &op, h, &RadiusCache::new()).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}

#[test]
fn anisotropic_families_are_reproducible() {
    let op = EllipticOperator::new(Coefficient::Matrix { a11: 1.3, a12: 0.2, a22: 0.8 }, 0.6).unwrap();
    let mu = MeasureSpec::constant(Rect::unit(), 150.0).unwrap();
    let a = build_holes(&Rect::unit(), &mu, &op, 4).unwrap();
    let b = build_holes(&Rect::unit(), &mu, &op, 4).unwrap();
    assert_eq!(a, b);
    let lap = build_holes(&Rect::unit(), &mu, &EllipticOperator::laplace(), 4).unwrap();
    for (x, y) in a.holes.iter().zip(&lap.holes) {
        assert!(x.radius > 0.0 && x.radius < a.reference_radius());
        assert!((x.radius / y.radius - 1.0).abs() < 0.5);
    }
}
