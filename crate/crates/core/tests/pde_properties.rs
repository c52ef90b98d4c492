use proptest::prelude::*;

use relaxlab::assembly::{load_vector, measure_mass, stiffness};
use relaxlab::linalg::{dot, SolverOptions};
use relaxlab::measures::{Density, MeasureSpec};
use relaxlab::operator::{Coefficient, ScalarField};
use relaxlab::pde::{classify_nodes, solve_dirichlet_perforated, solve_relaxed, Load, NodeClass, PerforationOptions};
use relaxlab::perforation::build_holes;
use relaxlab::{EllipticOperator, Mesh, Rect};

const TIGHT: SolverOptions = SolverOptions { rel_tol: 1e-11, max_iter: None };

fn operator() -> impl Strategy<Value = (EllipticOperator, bool)> {
    prop_oneof![
        Just((EllipticOperator::laplace(), true)),
        (0.5..2.0f64).prop_map(|a| (EllipticOperator::new(Coefficient::Scalar(ScalarField::Constant(a)), 0.5).unwrap(), true)),
        (1.0..4.0f64, 1.0..4.0f64, 1..5u32).prop_map(|(a, b, k)| {
            (EllipticOperator::new(Coefficient::Scalar(ScalarField::Checkerboard { a, b, k }), 0.25).unwrap(), true)
        }),
        (0.8..1.4f64, -0.3..0.3f64, 0.8..1.4f64).prop_map(|(a11, a12, a22)| {
            (EllipticOperator::new(Coefficient::Matrix { a11, a12, a22 }, 0.5).unwrap(), a12 == 0.0)
        }),
    ]
}

fn nonnegative_load() -> impl Strategy<Value = Load> {
    prop_oneof![
        (0.0..10.0f64).prop_map(Load::Constant),
        (0.0..10.0f64).prop_map(|amplitude| Load::ProductSine { amplitude }),
        (0.2..0.8f64, 0.2..0.8f64, 0.05..0.3f64, 0.0..50.0f64).prop_map(|(x, y, radius, height)| Load::Bump {
            center: [x, y],
            radius,
            height
        }),
    ]
}

fn holes_measure() -> impl Strategy<Value = Option<(MeasureSpec, u32)>> {
    prop_oneof![
        Just(None),
        (20.0..300.0f64, 3..6u32).prop_map(|(c, h)| Some((MeasureSpec::constant(Rect::unit(), c).unwrap(), h))),
    ]
}

fn relative_free_residual(k: &relaxlab::linalg::StencilMatrix, u: &[f64], b: &[f64], free: &[bool]) -> f64 {
    let mut ku = vec![0.0; u.len()];
    k.apply(u, &mut ku);
    let (mut rr, mut bb) = (0.0, 0.0);
    for i in 0..u.len() {
        if free[i] {
            rr += (b[i] - ku[i]).powi(2);
            bb += b[i] * b[i];
        }
    }
    (rr / bb).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn perforated_solutions_are_consistent((op, m_matrix) in operator(), f in nonnegative_load(), holes in holes_measure()) {
        let mesh = Mesh::new(&Rect::unit(), 1.0 / 64.0).unwrap();
        let family = match &holes {
            Some((mu, h)) => build_holes(&Rect::unit(), mu, &EllipticOperator::laplace(), *h).unwrap(),
            None => build_holes(&Rect::unit(), &MeasureSpec::zero(Rect::unit()), &op, 3).unwrap(),
        };
        let opts = PerforationOptions { solver: TIGHT, pin_nearest: true };
        let (u, _) = solve_dirichlet_perforated(&family, &op, &f, &mesh, &opts).unwrap();
        let umax = u.max_abs();
        let umin = u.values.iter().copied().fold(0.0, f64::min);
        if m_matrix {
            prop_assert!(umin >= -1e-10, "min {umin}");
        } else {
            prop_assert!(-umin <= 1e-6 * umax, "min {umin}, max {umax}");
        }

        let class = classify_nodes(&mesh, Some(&family), true).unwrap();
        let free: Vec<bool> = class.iter().map(|c| *c == NodeClass::Interior).collect();
        for (v, c) in u.values.iter().zip(&class) {
            if *c != NodeClass::Interior {
                prop_assert_eq!(*v, 0.0);
            }
        }
        let k = stiffness(&mesh, &op);
        let b = load_vector(&mesh, |p| f.eval(p));
        if f.is_zero() {
            prop_assert!(umax == 0.0);
        } else {
            prop_assert!(relative_free_residual(&k, &u.values, &b, &free) <= 1e-10);
            let lhs = k.quadratic_form(&u.values);
            let rhs = dot(&b, &u.values);
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs(), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn relaxed_solutions_are_consistent((op, _) in operator(), f in nonnegative_load(), c in 0.0..500.0f64, k in 1..6u32) {
        let mesh = Mesh::new(&Rect::unit(), 1.0 / 48.0).unwrap();
        let mu = MeasureSpec::new(Rect::unit(), Density::Checkerboard { a: c, b: 0.5 * c, k }, vec![], vec![]).unwrap();
        let (u, _) = solve_relaxed(&mu, &op, &f, &mesh, &TIGHT).unwrap();
        let mut a = stiffness(&mesh, &op);
        a.add_matrix(&measure_mass(&mesh, &mu, None));
        let b = load_vector(&mesh, |p| f.eval(p));
        let free: Vec<bool> = (0..mesh.node_count()).map(|i| !mesh.is_boundary_node(i)).collect();
        if !f.is_zero() {
            prop_assert!(relative_free_residual(&a, &u.values, &b, &free) <= 1e-10);
            let lhs = a.quadratic_form(&u.values);
            let rhs = dot(&b, &u.values);
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs());
        }
    }
}
