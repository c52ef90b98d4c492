//! Harmonic and L-capacities of condensers, μ-capacities, capacitary
//! potentials with their inner/outer distributions, boundary averages and
//! the inversion from a capacity to a hole radius.
//!
//! Discrete conventions:
//! - a node belongs to the plate `V` iff it lies in `closure(V)`, and is
//!   held at zero iff it lies outside the open set `U`;
//! - the capacitary distributions are the residuals of the unconstrained
//!   operator at the constrained solution, `K w = γ - ν`, so `Σγ = Σν`
//!   holds up to solver tolerance and both equal `wᵀKw`.

use std::f64::consts::PI;

use crate::assembly::{h1_seminorm_sq_on, measure_mass, stiffness};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::geometry::{dist, Point, Rect, Region};
use crate::linalg::{solve_constrained, SolveStats, SolverOptions, StencilMatrix};
use crate::measures::MeasureSpec;
use crate::mesh::{Field, Mesh};
use crate::operator::EllipticOperator;

/// Default relative tolerance for [`hole_radius`].
pub const DEFAULT_RADIUS_TOL: f64 = 1e-6;

/// Linear solves behind capacities run tighter than field solves so the
/// distribution identities hold to ~1e-10.
const CAPACITY_SOLVER: SolverOptions = SolverOptions {
    rel_tol: 1e-12,
    max_iter: None,
};

/// Minimum number of cells across the plate `V`.
const MIN_CELLS_ACROSS: f64 = 4.0;

/// `cap(B_rho, B_r)` for the Laplacian in dimension `n ∈ {2, 3}`.
pub fn cap_concentric_closed_form(rho: f64, r: f64, n: u32) -> Result<f64> {
    if !(rho >= 0.0 && rho < r) {
        return Err(Error::Geometry(format!("need 0 <= rho < r, got rho = {rho}, r = {r}")));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    match n {
        2 => {
            let q = r / rho;
            let log = if q.is_finite() { q.ln() } else { r.ln() - rho.ln() };
            Ok(2.0 * PI / log)
        }
        3 => Ok(4.0 * PI / (1.0 / rho - 1.0 / r)),
        _ => Err(Error::InvalidInput(format!("closed form needs n = 2 or 3, got {n}"))),
    }
}

/// Inverse of [`cap_concentric_closed_form`] in `rho`.
pub fn concentric_radius_closed_form(target: f64, r: f64, n: u32) -> Result<f64> {
    if target.is_infinite() {
        return Err(Error::InfiniteTarget);
    }
    if !(target >= 0.0) || !(r > 0.0) {
        return Err(Error::InvalidInput(format!("target {target} and r {r} must be nonnegative / positive")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    match n {
        2 => Ok(r * (-2.0 * PI / target).exp()),
        3 => Ok(1.0 / (4.0 * PI / target + 1.0 / r)),
        _ => Err(Error::InvalidInput(format!("closed form needs n = 2 or 3, got {n}"))),
    }
}

/// Equilibrium potential of the condenser `(V, U)` on a local mesh.
#[derive(Debug, Clone)]
pub struct CapacitaryPotential {
    /// Potential, clamped to `[0, 1]`.
    pub w: Field,
    /// Inner distribution, supported on the plate's boundary nodes.
    pub gamma: Vec<f64>,
    /// Outer distribution, supported on the first zero nodes outside `U`.
    pub nu: Vec<f64>,
    pub cap_value: f64,
    pub stats: SolveStats,
}

impl CapacitaryPotential {
    pub fn gamma_total(&self) -> f64 {
        self.gamma.iter().sum()
    }

    pub fn nu_total(&self) -> f64 {
        self.nu.iter().sum()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.w.mesh
    }
}

fn anchor_of(u: &Region) -> Option<Point> {
    match u {
        Region::Disk(d) => Some(d.center),
        Region::Rect(r) => Some(r.min),
        other => other.bbox().map(|b| b.center()),
    }
}

/// Local mesh for a condenser: lattice anchored at `U`'s centre (disks) or
/// corner (rectangles).
fn condenser_mesh(u: &Region, spacing: f64) -> Result<Mesh> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidInput(format!("mesh spacing {spacing} must be positive")));
    }
    let bbox = u
        .bbox()
        .ok_or_else(|| Error::Geometry("outer set of a condenser must be nonempty".into()))?;
    let anchor = anchor_of(u).unwrap_or(bbox.min);
    Ok(Mesh::covering(&bbox, anchor, spacing))
}

fn check_condenser(v: &Region, u: &Region, spacing: f64) -> Result<()> {
    if !v.is_compactly_inside(u) {
        return Err(Error::Geometry("plate must satisfy closure(V) ⊂ U".into()));
    }
    if let Some(d) = v.min_piece_diameter() {
        if d < MIN_CELLS_ACROSS * spacing {
            return Err(Error::UnderResolved(format!(
                "plate piece of diameter {d:.3e} has fewer than {MIN_CELLS_ACROSS} cells of size {spacing:.3e} across"
            )));
        }
    }
    Ok(())
}

/// Solves the condenser problem on `mesh`: `w = 1` on `inner`, `w = 0` on
/// `outer`, discrete L-harmonic elsewhere.
pub(crate) fn potential_on_mesh(
    mesh: Mesh,
    k: &StencilMatrix,
    inner: &[bool],
    outer: &[bool],
) -> Result<CapacitaryPotential> {
    let n = mesh.node_count();
    if inner.iter().zip(outer).any(|(a, b)| *a && *b) {
        return Err(Error::Geometry("plate touches the outer boundary".into()));
    }
    if !inner.iter().any(|v| *v) {
        return Err(Error::UnderResolved("no mesh node inside the plate".into()));
    }
    let fixed: Vec<bool> = inner.iter().zip(outer).map(|(a, b)| *a || *b).collect();
    let mut x: Vec<f64> = inner.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
    let stats = solve_constrained(k, &vec![0.0; n], &fixed, &mut x, &CAPACITY_SOLVER)?;
    let mut res = vec![0.0; n];
    k.apply(&x, &mut res);
    let gamma: Vec<f64> = (0..n).map(|i| if inner[i] { res[i] } else { 0.0 }).collect();
    let nu: Vec<f64> = (0..n).map(|i| if outer[i] { -res[i] } else { 0.0 }).collect();
    let cap_value = crate::linalg::dot(&x, &res);
    for v in &mut x {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(CapacitaryPotential {
        w: Field { mesh, values: x },
        gamma,
        nu,
        cap_value,
        stats,
    })
}

/// L-capacitary potential of `V` relative to `U` at the given mesh spacing.
pub fn capacitary_potential(v: &Region, u: &Region, op: &EllipticOperator, spacing: f64) -> Result<CapacitaryPotential> {
    check_condenser(v, u, spacing)?;
    let mesh = condenser_mesh(u, spacing)?;
    let k = stiffness(&mesh, op);
    let pts: Vec<Point> = (0..mesh.node_count()).map(|i| mesh.node_point(i)).collect();
    let inner: Vec<bool> = pts.iter().map(|&p| v.contains_closed(p)).collect();
    let outer: Vec<bool> = pts.iter().map(|&p| !u.contains_open(p)).collect();
    potential_on_mesh(mesh, &k, &inner, &outer)
}

/// `cap^L(V, U)` as the minimal discrete energy.
pub fn cap_variational(v: &Region, u: &Region, op: &EllipticOperator, spacing: f64) -> Result<f64> {
    if v.is_empty() {
        return Ok(0.0);
    }
    capacitary_potential(v, u, op, spacing).map(|p| p.cap_value)
}

/// Measure entering a μ-capacity.
#[derive(Debug, Clone, Copy)]
pub enum CapacityMeasure<'a> {
    /// A catalog measure restricted to `E`; it must be atom-free there.
    Measure(&'a MeasureSpec),
    /// `∞_E`: the hard constraint `u = 0` on `E`.
    Infinite,
}

/// `cap_μ^L(E, A) = min { ⟨Lu, u⟩ + ∫_E u² dμ : u - 1 ∈ H¹₀(A) }`.
pub fn mu_capacity(
    e: &Region,
    a: &Region,
    mu: CapacityMeasure<'_>,
    op: &EllipticOperator,
    spacing: f64,
) -> Result<f64> {
    if !e.is_subset_of(a) {
        return Err(Error::Geometry("μ-capacity needs E ⊆ A".into()));
    }
    if e.is_empty() {
        return Ok(0.0);
    }
    let mu = match mu {
        CapacityMeasure::Infinite => return cap_variational(e, a, op, spacing),
        CapacityMeasure::Measure(m) => m,
    };
    if mu.atoms.iter().any(|at| e.contains_closed(at.position)) {
        return Err(Error::AtomsPresent("μ-capacity over a set carrying atoms; use the ∞ constraint".into()));
    }
    let mesh = condenser_mesh(a, spacing)?;
    let k = stiffness(&mesh, op);
    let m = measure_mass(&mesh, mu, Some(e));
    let mut km = k.clone();
    km.add_matrix(&m);
    let n = mesh.node_count();
    let fixed: Vec<bool> = (0..n).map(|i| !a.contains_open(mesh.node_point(i))).collect();
    // v = u - 1 vanishes off A and solves (K + M) v = -M 1
    let ones = vec![1.0; n];
    let mut rhs = vec![0.0; n];
    m.apply(&ones, &mut rhs);
    rhs.iter_mut().for_each(|r| *r = -*r);
    let mut v = vec![0.0; n];
    solve_constrained(&km, &rhs, &fixed, &mut v, &CAPACITY_SOLVER)?;
    // K annihilates constants, so the energy of u = v + 1 is that of v
    let u: Vec<f64> = v.iter().map(|x| x + 1.0).collect();
    Ok(k.quadratic_form(&v) + m.quadratic_form(&u))
}

/// Radius `rho` with `cap^L(B_rho, B_r) = target` in the plane, for balls
/// centred at `center`.
///
/// Constant isotropic operators `A = aI` (the Laplacian included) use the
/// closed form `rho = r exp(-2πa / target)`. Other operators use
/// [`hole_radius_variational`] at spacing `r / 48`.
pub fn hole_radius(target: f64, r: f64, op: &EllipticOperator, tol: f64) -> Result<f64> {
    hole_radius_at(target, r, [0.5, 0.5], op, tol)
}

pub fn hole_radius_at(target: f64, r: f64, center: Point, op: &EllipticOperator, tol: f64) -> Result<f64> {
    if target.is_infinite() {
        return Err(Error::InfiniteTarget);
    }
    if !(target >= 0.0) || !(r > 0.0) || target.is_nan() {
        return Err(Error::InvalidInput(format!("hole radius needs target >= 0 and r > 0 (got {target}, {r})")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    if let Some(a) = op.isotropic_scale() {
        let rho = concentric_radius_closed_form(target / a, r, 2)?;
        if rho == 0.0 {
            return Err(Error::UnderResolved(format!(
                "hole radius for capacity {target:e} in a ball of radius {r:e} underflows"
            )));
        }
        return Ok(rho.min(r * (1.0 - 1e-9)));
    }
    hole_radius_variational(target, r, center, op, tol, r / 48.0)
}

/// Inverts the discrete capacity of concentric disks around `center`.
///
/// Plates are the node sets `{ |x - center| <= d }` for the distinct node
/// distances `d` ("shells"), so the discrete capacity is a step function
/// of the radius; it is made continuous by linear interpolation between
/// consecutive shells (and from `(0, 0)` to the first shell). The shell is
/// located by bisection on the shell index (capacity is monotone in the
/// plate), then the interpolant is inverted exactly.
pub fn hole_radius_variational(
    target: f64,
    r: f64,
    center: Point,
    op: &EllipticOperator,
    tol: f64,
    spacing: f64,
) -> Result<f64> {
    if target == 0.0 {
        return Ok(0.0);
    }
    let outer = Region::disk(center, r);
    let mesh = Mesh::covering(&Rect::centered(center, r), center, spacing);
    let k = stiffness(&mesh, op);
    let n = mesh.node_count();
    let dists: Vec<f64> = (0..n).map(|i| dist(mesh.node_point(i), center)).collect();
    let outer_mask: Vec<bool> = (0..n).map(|i| !outer.contains_open(mesh.node_point(i))).collect();
    let limit = r - 1.5 * spacing;
    let mut shells: Vec<f64> = dists.iter().copied().filter(|&d| d > 0.0 && d <= limit).collect();
    shells.sort_by(|a, b| a.partial_cmp(b).unwrap());
    shells.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * spacing);
    if shells.is_empty() {
        return Err(Error::UnderResolved(format!("no shells between the centre and r = {r}")));
    }
    let cap_at = |idx: usize| -> Result<f64> {
        let d = shells[idx] * (1.0 + 1e-12);
        let inner: Vec<bool> = dists.iter().map(|&x| x <= d).collect();
        potential_on_mesh(mesh, &k, &inner, &outer_mask).map(|p| p.cap_value)
    };
    let top = shells.len() - 1;
    let cap_top = cap_at(top)?;
    if target > cap_top {
        return Err(Error::UnderResolved(format!(
            "target capacity {target} exceeds the largest resolvable condenser ({cap_top}) at spacing {spacing}"
        )));
    }
    let cap0 = cap_at(0)?;
    let (d_lo, c_lo, d_hi, c_hi) = if target <= cap0 {
        (0.0, 0.0, shells[0], cap0)
    } else {
        // invariant: cap(lo) < target <= cap(hi)
        let (mut lo, mut hi) = (0usize, top);
        let (mut c_lo, mut c_hi) = (cap0, cap_top);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let c = cap_at(mid)?;
            if c < target {
                lo = mid;
                c_lo = c;
            } else {
                hi = mid;
                c_hi = c;
            }
        }
        (shells[lo], c_lo, shells[hi], c_hi)
    };
    let rho = if c_hi > c_lo {
        d_lo + (target - c_lo) / (c_hi - c_lo) * (d_hi - d_lo)
    } else {
        d_hi
    };
    let achieved = c_lo + (rho - d_lo) / (d_hi - d_lo) * (c_hi - c_lo);
    if (achieved - target).abs() > tol * target.max(f64::EPSILON) {
        return Err(Error::NonConvergence { iterations: 0, residual: (achieved - target).abs() / target });
    }
    Ok(rho)
}

/// `M u = Σ u ν / Σ ν`, the average of `u` against the outer distribution.
pub fn boundary_average(u: &Field, pot: &CapacitaryPotential) -> Result<f64> {
    if u.mesh != pot.w.mesh {
        return Err(Error::InvalidInput("field and potential live on different meshes".into()));
    }
    let total = pot.nu_total();
    if !(total > 0.0) {
        return Err(Error::DegeneratePotential);
    }
    Ok(u.values.iter().zip(&pot.nu).map(|(u, n)| u * n).sum::<f64>() / total)
}

/// Empirical modulus `ω_μ(r)`: the largest ratio
/// `‖u - M_r u‖_{L²_μ(Q̂_r)} / ‖∇u‖_{L²(Q_r)}` over a seeded corpus of
/// smooth fields, where `M_r` averages against the outer distribution of
/// the ball `B_ρ(r)` whose capacity in `B_r` equals `μ(Q̂_r)`.
///
/// A cube of zero mass gives 0 (the numerator vanishes whatever average is
/// used; the convention is the potential at `ρ = r/4`).
pub fn poincare_modulus_estimate(
    mu: &MeasureSpec,
    r: f64,
    center: Point,
    op: &EllipticOperator,
    corpus_size: usize,
) -> Result<f64> {
    let cube = Rect::centered(center, r);
    if !cube.is_compactly_inside(&mu.domain) {
        return Err(Error::Geometry(format!("cube Q_r({center:?}, {r}) must lie compactly in Ω")));
    }
    if mu.atoms.iter().any(|a| cube.contains_half_open(a.position)) {
        return Err(Error::AtomsPresent("modulus estimate needs an atom-free cube".into()));
    }
    let mass = mu.mass_on_rect(&cube);
    if mass == 0.0 {
        return Ok(0.0);
    }
    let rho = hole_radius_at(mass, r, center, op, DEFAULT_RADIUS_TOL)?;
    let cells = (64.0_f64).max((3.0 * r / rho).ceil());
    if cells > 2048.0 {
        return Err(Error::UnderResolved(format!("hole radius {rho:.3e} too small against r = {r}")));
    }
    let spacing = r / cells;
    let pot = capacitary_potential(&Region::disk(center, rho), &Region::disk(center, r), op, spacing)?;
    let mesh = *pot.mesh();
    let cube_region = Region::Rect(cube);
    let mass_form = measure_mass(&mesh, mu, Some(&cube_region));
    let corpus = Corpus::new(0x5eed_0001, corpus_size);
    let mut worst = 0.0_f64;
    for sample in corpus.fields() {
        let u = Field::from_fn(mesh, |p| sample.eval([(p[0] - center[0]) / r, (p[1] - center[1]) / r]));
        let grad = h1_seminorm_sq_on(&u, &cube_region);
        if grad <= 1e-14 {
            continue;
        }
        let m = boundary_average(&u, &pot)?;
        let e: Vec<f64> = u.values.iter().map(|v| v - m).collect();
        let num = mass_form.quadratic_form(&e).max(0.0);
        worst = worst.max((num / grad).sqrt());
    }
    Ok(worst)
}
