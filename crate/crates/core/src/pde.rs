//! Finite element solves: the perforated Dirichlet problem, the relaxed
//! problem `Lu + μu = f`, the corrector of a hole family, the energy
//! `F_μ` and error metrics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::{h1_seminorm_sq, l2_norm_sq, load_vector, measure_mass, measure_quadratic, stiffness};
use crate::capacity::potential_on_mesh;
use crate::error::{Error, Result};
use crate::geometry::{dist, Point};
use crate::linalg::{solve_constrained, SolveStats, SolverOptions, StencilMatrix};
use crate::measures::MeasureSpec;
use crate::mesh::{Field, Mesh};
use crate::operator::EllipticOperator;
use crate::perforation::{Hole, HoleFamily};

/// Analytic loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Load {
    Zero,
    Constant(f64),
    /// `amplitude · sin(πx) sin(πy)`
    ProductSine { amplitude: f64 },
    /// `height · (1 - |x - center|² / radius²)²` inside the disk, 0 outside.
    Bump { center: Point, radius: f64, height: f64 },
}

impl Load {
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            Load::Zero => 0.0,
            Load::Constant(c) => *c,
            Load::ProductSine { amplitude } => amplitude * (PI * p[0]).sin() * (PI * p[1]).sin(),
            Load::Bump { center, radius, height } => {
                let t = 1.0 - (dist(p, *center) / radius).powi(2);
                if t > 0.0 {
                    height * t * t
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Load::Zero => true,
            Load::Constant(c) => *c == 0.0,
            Load::ProductSine { amplitude } => *amplitude == 0.0,
            Load::Bump { height, .. } => *height == 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    DomainBoundary,
    HoleConstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerforationOptions {
    pub solver: SolverOptions,
    /// Under-resolved holes constrain their nearest node instead of being
    /// rejected. Experimental: it changes the effective capacity.
    pub pin_nearest: bool,
}

/// Nodes strictly inside the ball of `hole`.
fn hole_nodes(mesh: &Mesh, hole: &Hole, mut visit: impl FnMut(usize)) {
    let (_, map) = mesh.window(hole.center, hole.radius);
    for &k in &map {
        if dist(mesh.node_point(k), hole.center) < hole.radius {
            visit(k);
        }
    }
}

fn nearest_node(mesh: &Mesh, p: Point) -> usize {
    let s = mesh.spacing();
    let o = mesh.origin();
    let (nx, ny) = mesh.cells();
    let i = ((p[0] - o[0]) / s).round().clamp(0.0, nx as f64) as usize;
    let j = ((p[1] - o[1]) / s).round().clamp(0.0, ny as f64) as usize;
    mesh.node_index(i, j)
}

/// Classification of every node of `mesh` against the domain boundary and
/// the holes of `family`.
pub fn classify_nodes(mesh: &Mesh, family: Option<&HoleFamily>, pin_nearest: bool) -> Result<Vec<NodeClass>> {
    let mut class: Vec<NodeClass> = (0..mesh.node_count())
        .map(|k| if mesh.is_boundary_node(k) { NodeClass::DomainBoundary } else { NodeClass::Interior })
        .collect();
    let Some(family) = family else { return Ok(class) };
    let s = mesh.spacing();
    for hole in family.active() {
        if hole.radius < 2.0 * s {
            if !pin_nearest {
                return Err(Error::UnderResolved(format!(
                    "hole {:?} of radius {:.3e} needs spacing <= {:.3e} (got {s:.3e})",
                    hole.i,
                    hole.radius,
                    hole.radius / 2.0
                )));
            }
            let k = nearest_node(mesh, hole.center);
            if class[k] == NodeClass::Interior {
                class[k] = NodeClass::HoleConstrained;
            }
            continue;
        }
        hole_nodes(mesh, hole, |k| {
            if class[k] == NodeClass::Interior {
                class[k] = NodeClass::HoleConstrained;
            }
        });
    }
    Ok(class)
}

fn solve_with_zero_data(mesh: &Mesh, a: &StencilMatrix, rhs: &[f64], fixed: &[bool], opts: &SolverOptions) -> Result<(Field, SolveStats)> {
    let mut x = vec![0.0; mesh.node_count()];
    let stats = solve_constrained(a, rhs, fixed, &mut x, opts)?;
    Ok((Field { mesh: *mesh, values: x }, stats))
}

/// `Lu = f` in the perforated domain, `u = 0` on `∂Ω` and on every node
/// strictly inside a hole; the result is extended by zero.
pub fn solve_dirichlet_perforated(
    holes: &HoleFamily,
    op: &EllipticOperator,
    f: &Load,
    mesh: &Mesh,
    opts: &PerforationOptions,
) -> Result<(Field, SolveStats)> {
    let class = classify_nodes(mesh, Some(holes), opts.pin_nearest)?;
    let fixed: Vec<bool> = class.iter().map(|c| *c != NodeClass::Interior).collect();
    let k = stiffness(mesh, op);
    let b = load_vector(mesh, |p| f.eval(p));
    solve_with_zero_data(mesh, &k, &b, &fixed, &opts.solver)
}

/// Unperforated Dirichlet problem `Lu = f`, `u = 0` on `∂Ω`.
pub fn solve_dirichlet(op: &EllipticOperator, f: &Load, mesh: &Mesh, solver: &SolverOptions) -> Result<(Field, SolveStats)> {
    let class = classify_nodes(mesh, None, false)?;
    let fixed: Vec<bool> = class.iter().map(|c| *c != NodeClass::Interior).collect();
    let k = stiffness(mesh, op);
    let b = load_vector(mesh, |p| f.eval(p));
    solve_with_zero_data(mesh, &k, &b, &fixed, solver)
}

/// Relaxed problem `⟨Lu, v⟩ + ∫ uv dμ₀ = ⟨f, v⟩` with `u ∈ H¹₀(Ω)`.
pub fn solve_relaxed(mu0: &MeasureSpec, op: &EllipticOperator, f: &Load, mesh: &Mesh, solver: &SolverOptions) -> Result<(Field, SolveStats)> {
    if mu0.has_atoms() {
        return Err(Error::AtomsPresent(
            "atoms have positive mass on sets of zero capacity; the relaxed limit keeps only the atom-free part μ₀".into(),
        ));
    }
    let fixed: Vec<bool> = (0..mesh.node_count()).map(|k| mesh.is_boundary_node(k)).collect();
    let mut a = stiffness(mesh, op);
    if !mu0.is_zero() {
        a.add_matrix(&measure_mass(mesh, mu0, None));
    }
    let b = load_vector(mesh, |p| f.eval(p));
    solve_with_zero_data(mesh, &a, &b, &fixed, solver)
}

/// Corrector `w_h`: `1 - v_i` in each reference ball `B_h^i`, where `v_i`
/// is the discrete capacitary potential of the hole in its ball, and 1
/// elsewhere.
pub fn corrector_field(holes: &HoleFamily, op: &EllipticOperator, mesh: &Mesh) -> Result<Field> {
    let s = mesh.spacing();
    let r = holes.reference_radius();
    let mut w = Field::constant(*mesh, 1.0);
    for hole in holes.active() {
        if hole.radius < 2.0 * s {
            return Err(Error::UnderResolved(format!(
                "hole {:?} of radius {:.3e} below two cells of {s:.3e}",
                hole.i, hole.radius
            )));
        }
        let (win, map) = mesh.window(hole.center, r);
        let d: Vec<f64> = map.iter().map(|&k| dist(mesh.node_point(k), hole.center)).collect();
        let inner: Vec<bool> = d.iter().map(|&x| x < hole.radius).collect();
        let outer: Vec<bool> = d.iter().map(|&x| x >= r).collect();
        let k = stiffness(&win, op);
        let pot = potential_on_mesh(win, &k, &inner, &outer)?;
        for (local, &global) in map.iter().enumerate() {
            if !outer[local] {
                w.values[global] -= pot.w.values[local];
            }
        }
    }
    for v in &mut w.values {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(w)
}

/// `F_μ(u) = ⟨Lu, u⟩ + ∫ u² dμ`; atoms contribute `m u(x₀)²`.
pub fn energy_functional(u: &Field, mu: &MeasureSpec, op: &EllipticOperator) -> f64 {
    let k = stiffness(&u.mesh, op);
    let mut e = k.quadratic_form(&u.values);
    if !mu.is_zero() {
        e += measure_quadratic(u, mu);
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMetrics {
    pub l2: f64,
    pub h1: f64,
    pub linf: f64,
}

/// Norms of `u - v`. On different meshes of the same domain the coarser
/// field is nodally interpolated (P1) onto the finer mesh.
pub fn field_metrics(u: &Field, v: &Field) -> Result<FieldMetrics> {
    let (u, v) = if u.mesh == v.mesh {
        (u.clone(), v.clone())
    } else {
        let (du, dv) = (u.mesh.domain(), v.mesh.domain());
        let tol = 1e-9 * du.diam().max(dv.diam());
        let same = (0..2).all(|c| (du.min[c] - dv.min[c]).abs() <= tol && (du.max[c] - dv.max[c]).abs() <= tol);
        if !same {
            return Err(Error::InvalidInput("fields live on different domains".into()));
        }
        if u.mesh.spacing() <= v.mesh.spacing() {
            (u.clone(), v.interpolate_to(&u.mesh))
        } else {
            (u.interpolate_to(&v.mesh), v.clone())
        }
    };
    let diff = Field {
        mesh: u.mesh,
        values: u.values.iter().zip(&v.values).map(|(a, b)| a - b).collect(),
    };
    Ok(FieldMetrics {
        l2: l2_norm_sq(&diff).sqrt(),
        h1: h1_seminorm_sq(&diff).sqrt(),
        linf: diff.max_abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::perforation::build_holes;

    fn sine(p: Point) -> f64 {
        (PI * p[0]).sin() * (PI * p[1]).sin()
    }

    fn l2_error(u: &Field) -> f64 {
        let exact = Field::from_fn(u.mesh, sine);
        field_metrics(u, &exact).unwrap().l2
    }

    #[test]
    fn manufactured_dirichlet_second_order() {
        let op = EllipticOperator::laplace();
        let f = Load::ProductSine { amplitude: 2.0 * PI * PI };
        let e: Vec<f64> = [32.0, 64.0]
            .iter()
            .map(|n| {
                let mesh = Mesh::new(&Rect::unit(), 1.0 / n).unwrap();
                l2_error(&solve_dirichlet(&op, &f, &mesh, &SolverOptions::default()).unwrap().0)
            })
            .collect();
        assert!((e[0] / e[1]).log2() >= 1.8, "{e:?}");
    }

    #[test]
    fn manufactured_relaxed_second_order() {
        let op = EllipticOperator::laplace();
        let c = 30.0;
        let mu = MeasureSpec::constant(Rect::unit(), c).unwrap();
        let f = Load::ProductSine { amplitude: 2.0 * PI * PI + c };
        let e: Vec<f64> = [32.0, 64.0]
            .iter()
            .map(|n| {
                let mesh = Mesh::new(&Rect::unit(), 1.0 / n).unwrap();
                l2_error(&solve_relaxed(&mu, &op, &f, &mesh, &SolverOptions::default()).unwrap().0)
            })
            .collect();
        assert!((e[0] / e[1]).log2() >= 1.8, "{e:?}");
    }

    #[test]
    fn zero_load_and_zero_measure() {
        let op = EllipticOperator::laplace();
        let mesh = Mesh::new(&Rect::unit(), 1.0 / 32.0).unwrap();
        let mu = MeasureSpec::constant(Rect::unit(), 200.0).unwrap();
        let fam = build_holes(&Rect::unit(), &mu, &op, 4).unwrap();
        let (u, _) = solve_dirichlet_perforated(&fam, &op, &Load::Zero, &mesh, &PerforationOptions::default()).unwrap();
        assert!(u.values.iter().all(|v| *v == 0.0));

        let f = Load::ProductSine { amplitude: 3.0 };
        let plain = solve_dirichlet(&op, &f, &mesh, &SolverOptions::default()).unwrap().0;
        let relaxed = solve_relaxed(&MeasureSpec::zero(Rect::unit()), &op, &f, &mesh, &SolverOptions::default()).unwrap().0;
        assert_eq!(plain.values, relaxed.values);
        let zero_holes = build_holes(&Rect::unit(), &MeasureSpec::zero(Rect::unit()), &op, 4).unwrap();
        let perforated = solve_dirichlet_perforated(&zero_holes, &op, &f, &mesh, &PerforationOptions::default()).unwrap().0;
        assert_eq!(plain.values, perforated.values);
    }

    #[test]
    fn holes_are_zero_and_resolution_is_checked() {
        let op = EllipticOperator::laplace();
        let mu = MeasureSpec::constant(Rect::unit(), 200.0).unwrap();
        let fam = build_holes(&Rect::unit(), &mu, &op, 4).unwrap();
        let mesh = Mesh::new(&Rect::unit(), 1.0 / 64.0).unwrap();
        let (u, _) = solve_dirichlet_perforated(&fam, &op, &Load::Constant(1.0), &mesh, &PerforationOptions::default()).unwrap();
        let class = classify_nodes(&mesh, Some(&fam), false).unwrap();
        let pinned = class.iter().filter(|c| **c == NodeClass::HoleConstrained).count();
        assert!(pinned > 0);
        for (k, c) in class.iter().enumerate() {
            if *c != NodeClass::Interior {
                assert_eq!(u.values[k], 0.0);
            }
        }
        assert!(u.values.iter().all(|v| *v >= -1e-10));

        let coarse = Mesh::new(&Rect::unit(), 1.0 / 16.0).unwrap();
        assert!(matches!(
            solve_dirichlet_perforated(&fam, &op, &Load::Constant(1.0), &coarse, &PerforationOptions::default()),
            Err(Error::UnderResolved(_))
        ));
        let pin = PerforationOptions { pin_nearest: true, ..Default::default() };
        let (u, _) = solve_dirichlet_perforated(&fam, &op, &Load::Constant(1.0), &coarse, &pin).unwrap();
        for hole in &fam.holes {
            assert_eq!(u.eval(hole.center).unwrap(), 0.0);
        }
    }

    #[test]
    fn relaxed_rejects_atoms_and_penalizes_segments() {
        let op = EllipticOperator::laplace();
        let mesh = Mesh::new(&Rect::unit(), 1.0 / 64.0).unwrap();
        let atom = MeasureSpec::zero(Rect::unit()).with_atom([0.5, 0.5], 1.0).unwrap();
        assert!(matches!(
            solve_relaxed(&atom, &op, &Load::Constant(1.0), &mesh, &SolverOptions::default()),
            Err(Error::AtomsPresent(_))
        ));
        let seg = MeasureSpec::zero(Rect::unit()).with_segment([0.25, 0.5], [0.75, 0.5], 1e6).unwrap();
        let (u, _) = solve_relaxed(&seg, &op, &Load::Constant(1.0), &mesh, &SolverOptions::default()).unwrap();
        let trace = (0..=32).map(|k| u.eval([0.25 + 0.5 * k as f64 / 32.0, 0.5]).unwrap().abs()).fold(0.0, f64::max);
        assert!(trace <= 1e-2 * u.max_abs(), "{trace} vs {}", u.max_abs());
    }

    #[test]
    fn energy_functional_examples() {
        let op = EllipticOperator::laplace();
        let mesh = Mesh::new(&Rect::unit(), 1.0 / 128.0).unwrap();
        let c = 10.0;
        let mu = MeasureSpec::constant(Rect::unit(), c).unwrap();
        assert_eq!(energy_functional(&Field::constant(mesh, 0.0), &mu, &op), 0.0);
        let u = Field::from_fn(mesh, sine);
        let e = energy_functional(&u, &mu, &op);
        let exact = PI * PI / 2.0 + c / 4.0;
        assert!((e - exact).abs() <= 0.01 * exact, "{e} vs {exact}");
        let atom = MeasureSpec::zero(Rect::unit()).with_atom([0.3, 0.6], 2.5).unwrap();
        let base = energy_functional(&u, &MeasureSpec::zero(Rect::unit()), &op);
        let with = energy_functional(&u, &atom, &op);
        let uv = u.eval([0.3, 0.6]).unwrap();
        assert!((with - base - 2.5 * uv * uv).abs() < 1e-12);
    }

    #[test]
    fn metrics_basics() {
        let fine = Mesh::new(&Rect::unit(), 1.0 / 128.0).unwrap();
        let u = Field::from_fn(fine, sine);
        let z = Field::constant(fine, 0.0);
        let m = field_metrics(&u, &u).unwrap();
        assert_eq!((m.l2, m.h1, m.linf), (0.0, 0.0, 0.0));
        let a = field_metrics(&u, &z).unwrap();
        assert!((a.l2 - 0.5).abs() < 1e-3);
        assert_eq!(a, field_metrics(&z, &u).unwrap());
        let coarse = Field::from_fn(Mesh::new(&Rect::unit(), 1.0 / 32.0).unwrap(), sine);
        assert_eq!(field_metrics(&u, &coarse).unwrap(), field_metrics(&coarse, &u).unwrap());
        let other = Field::constant(Mesh::new(&Rect::new([0.0, 0.0], [2.0, 1.0]).unwrap(), 0.25).unwrap(), 0.0);
        assert!(field_metrics(&u, &other).is_err());
    }

    #[test]
    fn corrector_energy_and_limits() {
        let op = EllipticOperator::laplace();
        let mesh = Mesh::new(&Rect::unit(), 1.0 / 256.0).unwrap();
        let none = build_holes(&Rect::unit(), &MeasureSpec::zero(Rect::unit()), &op, 4).unwrap();
        assert!(corrector_field(&none, &op, &mesh).unwrap().values.iter().all(|v| *v == 1.0));
        let mu = MeasureSpec::constant(Rect::unit(), 200.0).unwrap();
        let fam = build_holes(&Rect::unit(), &mu, &op, 4).unwrap();
        let w = corrector_field(&fam, &op, &mesh).unwrap();
        let energy = h1_seminorm_sq(&w);
        assert!(energy <= 1.03 * fam.total_mass(), "{energy} vs {}", fam.total_mass());
        assert!(energy >= 0.9 * fam.total_mass());
        for hole in &fam.holes {
            assert_eq!(w.eval(hole.center).unwrap(), 0.0);
        }
        assert_eq!(w.eval([0.01, 0.01]).unwrap(), 1.0);
    }
}
