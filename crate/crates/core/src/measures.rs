//! Positive Radon measures on a rectangular domain, built from a closed
//! catalog: an area density, point atoms and segments carrying a linear
//! density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, LatticeCube, Point, Rect};
use crate::quadrature::{gl8, integrate_rect_adaptive};

const DENSITY_REL_TOL: f64 = 1e-10;
const DENSITY_MAX_DEPTH: u32 = 40;

/// Catalogued nonnegative area density `g(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Density {
    Zero,
    Constant(f64),
    /// `coeff * |x - center|^exponent`
    Radial { coeff: f64, center: Point, exponent: f64 },
    /// `a` on cells `[m/k, (m+1)/k) x [n/k, (n+1)/k)` with `m + n` even, `b` otherwise.
    Checkerboard { a: f64, b: f64, k: u32 },
    /// `min(base, cap)`
    Truncated { base: Box<Density>, cap: f64 },
}

impl Density {
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Constant(c) => *c,
            Density::Radial { coeff, center, exponent } => {
                let r = dist(p, *center);
                if *exponent == 0.0 {
                    *coeff
                } else {
                    coeff * r.powf(*exponent)
                }
            }
            Density::Checkerboard { a, b, k } => {
                let kf = *k as f64;
                let parity = ((p[0] * kf).floor() as i64 + (p[1] * kf).floor() as i64).rem_euclid(2);
                if parity == 0 {
                    *a
                } else {
                    *b
                }
            }
            Density::Truncated { base, cap } => base.eval(p).min(*cap),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Density::Zero => true,
            Density::Constant(c) => *c == 0.0,
            Density::Radial { coeff, .. } => *coeff == 0.0,
            Density::Checkerboard { a, b, .. } => *a == 0.0 && *b == 0.0,
            Density::Truncated { base, cap } => *cap == 0.0 || base.is_zero(),
        }
    }

    fn validate(&self, domain: &Rect) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        match self {
            Density::Zero => Ok(()),
            Density::Constant(c) if !(c.is_finite() && *c >= 0.0) => bad(format!("constant density {c} must be finite and >= 0")),
            Density::Constant(_) => Ok(()),
            Density::Radial { coeff, center, exponent } => {
                if !(coeff.is_finite() && *coeff >= 0.0) || !exponent.is_finite() {
                    return bad(format!("radial density coefficient {coeff} / exponent {exponent} invalid"));
                }
                if *exponent < 0.0 && domain.contains_open(*center) {
                    return bad("radial density with negative exponent must be centred outside the open domain".into());
                }
                Ok(())
            }
            Density::Checkerboard { a, b, k } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && *b >= 0.0) || *k == 0 {
                    return bad(format!("checkerboard({a}, {b}, {k}) needs a, b >= 0 and k >= 1"));
                }
                Ok(())
            }
            Density::Truncated { base, cap } => {
                if !(cap.is_finite() && *cap >= 0.0) {
                    return bad(format!("truncation level {cap} must be finite and >= 0"));
                }
                base.validate(domain)
            }
        }
    }

    /// `∫_rect g dx`.
    pub fn integral(&self, rect: &Rect) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Constant(c) => c * rect.area(),
            Density::Checkerboard { a, b, k } => checkerboard_integral(*a, *b, *k, rect),
            _ => integrate_rect_adaptive(rect, &|p| self.eval(p), DENSITY_REL_TOL, DENSITY_MAX_DEPTH),
        }
    }

    fn truncated(&self, cap: f64) -> Density {
        match self {
            Density::Zero => Density::Zero,
            Density::Constant(c) => Density::Constant(c.min(cap)),
            Density::Checkerboard { a, b, k } => Density::Checkerboard {
                a: a.min(cap),
                b: b.min(cap),
                k: *k,
            },
            Density::Truncated { base, cap: c } => Density::Truncated {
                base: base.clone(),
                cap: c.min(cap),
            },
            other => Density::Truncated {
                base: Box::new(other.clone()),
                cap,
            },
        }
    }
}

fn checkerboard_integral(a: f64, b: f64, k: u32, rect: &Rect) -> f64 {
    let kf = k as f64;
    let breaks = |lo: f64, hi: f64| {
        let mut pts = vec![lo];
        let mut m = (lo * kf).floor() + 1.0;
        while m / kf < hi {
            pts.push(m / kf);
            m += 1.0;
        }
        pts.push(hi);
        pts
    };
    let xs = breaks(rect.min[0], rect.max[0]);
    let ys = breaks(rect.min[1], rect.max[1]);
    let mut total = 0.0;
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            let mid = [0.5 * (wx[0] + wx[1]), 0.5 * (wy[0] + wy[1])];
            let parity = ((mid[0] * kf).floor() as i64 + (mid[1] * kf).floor() as i64).rem_euclid(2);
            let g = if parity == 0 { a } else { b };
            total += g * (wx[1] - wx[0]) * (wy[1] - wy[0]);
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: Point,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
    /// linear density
    pub density: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        dist(self.start, self.end)
    }

    pub fn point_at(&self, t: f64) -> Point {
        [
            self.start[0] + t * (self.end[0] - self.start[0]),
            self.start[1] + t * (self.end[1] - self.start[1]),
        ]
    }

    /// Length of the part inside the half-open rectangle.
    pub fn length_in(&self, rect: &Rect) -> f64 {
        rect.clip_segment_half_open(self.start, self.end)
            .map_or(0.0, |(t0, t1)| (t1 - t0) * self.length())
    }
}

/// Positive Radon measure on the open rectangle `domain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub domain: Rect,
    pub density: Density,
    pub atoms: Vec<Atom>,
    pub segments: Vec<Segment>,
}

/// `mu = mu0 + mu1`: `mu0` charges no set of zero capacity, `mu1` lives on
/// a finite point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub mu0: MeasureSpec,
    pub mu1: MeasureSpec,
}

impl MeasureSpec {
    pub fn new(domain: Rect, density: Density, atoms: Vec<Atom>, segments: Vec<Segment>) -> Result<Self> {
        density.validate(&domain)?;
        for a in &atoms {
            if !domain.contains_open(a.position) {
                return Err(Error::InvalidInput(format!("atom at {:?} outside Ω", a.position)));
            }
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::InvalidInput(format!("atom mass {} must be finite and > 0", a.mass)));
            }
        }
        for s in &segments {
            if !domain.contains_open(s.start) || !domain.contains_open(s.end) {
                return Err(Error::InvalidInput(format!(
                    "segment {:?}-{:?} outside Ω",
                    s.start, s.end
                )));
            }
            if !(s.density.is_finite() && s.density >= 0.0) {
                return Err(Error::InvalidInput(format!("segment density {} must be finite and >= 0", s.density)));
            }
            if s.length() == 0.0 {
                return Err(Error::InvalidInput("zero-length segment".into()));
            }
        }
        Ok(MeasureSpec {
            domain,
            density,
            atoms,
            segments,
        })
    }

    pub fn zero(domain: Rect) -> Self {
        MeasureSpec {
            domain,
            density: Density::Zero,
            atoms: Vec::new(),
            segments: Vec::new(),
        }
    }

    pub fn constant(domain: Rect, c: f64) -> Result<Self> {
        MeasureSpec::new(domain, Density::Constant(c), Vec::new(), Vec::new())
    }

    pub fn with_atom(mut self, position: Point, mass: f64) -> Result<Self> {
        self.atoms.push(Atom { position, mass });
        MeasureSpec::new(self.domain, self.density, self.atoms, self.segments)
    }

    pub fn with_segment(mut self, start: Point, end: Point, density: f64) -> Result<Self> {
        self.segments.push(Segment { start, end, density });
        MeasureSpec::new(self.domain, self.density, self.atoms, self.segments)
    }

    pub fn is_zero(&self) -> bool {
        self.density.is_zero()
            && self.atoms.is_empty()
            && self.segments.iter().all(|s| s.density == 0.0)
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    /// `μ(Q)` for a lattice cube.
    pub fn mass_on_box(&self, cube: &LatticeCube) -> f64 {
        self.mass_on_rect(&cube.rect())
    }

    /// `μ(R)` for a half-open rectangle `R` (intersected with Ω).
    pub fn mass_on_rect(&self, rect: &Rect) -> f64 {
        let density = rect
            .intersect(&self.domain)
            .map_or(0.0, |r| self.density.integral(&r));
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| rect.contains_half_open(a.position))
            .map(|a| a.mass)
            .sum();
        let segments: f64 = self.segments.iter().map(|s| s.density * s.length_in(rect)).sum();
        // atoms last, so that decompose() splits the sum exactly
        density + segments + atoms
    }

    /// `μ(Ω)`.
    pub fn total_mass(&self) -> f64 {
        self.mass_on_rect(&self.domain)
    }

    /// Splits off the atoms. Points have zero capacity in the plane while
    /// densities and segments charge no such set, so the classification is
    /// by component type.
    pub fn decompose(&self) -> Decomposition {
        Decomposition {
            mu0: MeasureSpec {
                atoms: Vec::new(),
                ..self.clone()
            },
            mu1: MeasureSpec {
                domain: self.domain,
                density: Density::Zero,
                atoms: self.atoms.clone(),
                segments: Vec::new(),
            },
        }
    }

    /// Replaces the density by `min(g, k)`; atoms and segments are kept.
    pub fn truncate_density(&self, k: f64) -> MeasureSpec {
        MeasureSpec {
            density: self.density.truncated(k),
            ..self.clone()
        }
    }

    /// Kato norm `‖μ‖_{K_n^+(A)}` of `μ` restricted to the half-open
    /// rectangle `A`.
    ///
    /// The supremum over `x ∈ A` is taken on nested sample grids
    /// (`2^j + 1` points per side) until two successive grids agree to 1%,
    /// so the value is a lower-bound estimate of the true supremum. An atom
    /// inside `A` makes the norm infinite.
    pub fn kato_norm(&self, region: &Rect, n: u32) -> Result<f64> {
        if n != 2 && n != 3 {
            return Err(Error::InvalidInput(format!("Kato norm dimension must be 2 or 3, got {n}")));
        }
        if self.atoms.iter().any(|a| region.contains_half_open(a.position)) {
            return Ok(f64::INFINITY);
        }
        let Some(clipped) = region.intersect(&self.domain) else {
            return Ok(0.0);
        };
        let segments: Vec<(Point, Point, f64)> = self
            .segments
            .iter()
            .filter(|s| s.density > 0.0)
            .filter_map(|s| {
                region
                    .clip_segment_half_open(s.start, s.end)
                    .map(|(t0, t1)| (s.point_at(t0), s.point_at(t1), s.density))
            })
            .collect();
        if self.density.is_zero() && segments.is_empty() {
            return Ok(0.0);
        }
        let kernel = KatoKernel::new(n, region.diam());
        let potential = |x: Point| {
            let mut v = 0.0;
            if !self.density.is_zero() {
                v += density_potential(&self.density, &clipped, x, &kernel);
            }
            for &(a, b, l) in &segments {
                v += l * kernel.segment_integral(a, b, x);
            }
            v
        };
        let mut best = f64::NEG_INFINITY;
        let mut prev = f64::NAN;
        for level in 1..=7 {
            let m = (1usize << level) + 1;
            for iy in 0..m {
                for ix in 0..m {
                    let x = [
                        region.min[0] + region.width() * ix as f64 / (m - 1) as f64,
                        region.min[1] + region.height() * iy as f64 / (m - 1) as f64,
                    ];
                    best = best.max(potential(x));
                }
            }
            if best.is_infinite() {
                break;
            }
            if prev.is_finite() && (best - prev).abs() <= 0.01 * best.abs() {
                break;
            }
            prev = best;
        }
        let extra = if n == 2 { self.mass_on_rect(region) } else { 0.0 };
        Ok(best + extra)
    }
}

/// Kernel `log(diam/r)` (n = 2) or `r^{2-n}` (n = 3).
struct KatoKernel {
    n: u32,
    diam: f64,
}

impl KatoKernel {
    fn new(n: u32, diam: f64) -> Self {
        KatoKernel { n, diam }
    }

    /// `∫_{[a,b]} K(|y - x|) ds(y)` in closed form.
    fn segment_integral(&self, a: Point, b: Point, x: Point) -> f64 {
        let len = dist(a, b);
        if len == 0.0 {
            return 0.0;
        }
        let e = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let rel = [x[0] - a[0], x[1] - a[1]];
        let foot = rel[0] * e[0] + rel[1] * e[1];
        let d = (rel[0] * e[1] - rel[1] * e[0]).abs();
        let (s0, s1) = (-foot, len - foot);
        if self.n == 2 {
            let log_d = self.diam.ln();
            // ∫ ½ ln(s² + d²) ds
            let half_log = |s: f64| {
                if d > 0.0 {
                    0.5 * (s * (s * s + d * d).ln() - 2.0 * s + 2.0 * d * (s / d).atan())
                } else if s == 0.0 {
                    0.0
                } else {
                    s * s.abs().ln() - s
                }
            };
            (s1 - s0) * log_d - (half_log(s1) - half_log(s0))
        } else if d > 0.0 {
            (s1 / d).asinh() - (s0 / d).asinh()
        } else if s0 < 0.0 && s1 > 0.0 || s0 == 0.0 || s1 == 0.0 {
            f64::INFINITY
        } else {
            (s1.abs() / s0.abs()).ln().abs()
        }
    }
}

/// `∫_R g(y) K(|y - x|) dy` with `x ∈ closure(R)`: `R` is split into
/// rectangles cornered at `x`, each integrated through a Duffy map on two
/// triangles with graded Gauss panels towards the singular vertex.
fn density_potential(density: &Density, rect: &Rect, x: Point, kernel: &KatoKernel) -> f64 {
    let xs = [rect.min[0], x[0].clamp(rect.min[0], rect.max[0]), rect.max[0]];
    let ys = [rect.min[1], x[1].clamp(rect.min[1], rect.max[1]), rect.max[1]];
    let mut total = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let (x0, x1) = (xs[i], xs[i + 1]);
            let (y0, y1) = (ys[j], ys[j + 1]);
            if x1 <= x0 || y1 <= y0 {
                continue;
            }
            let corner_x = if i == 0 { x1 } else { x0 };
            let corner_y = if j == 0 { y1 } else { y0 };
            let far_x = if i == 0 { x0 } else { x1 };
            let far_y = if j == 0 { y0 } else { y1 };
            let origin = [corner_x, corner_y];
            let c1 = [far_x, corner_y];
            let c2 = [far_x, far_y];
            let c3 = [corner_x, far_y];
            total += duffy_triangle(density, origin, c1, c2, x, kernel);
            total += duffy_triangle(density, origin, c2, c3, x, kernel);
        }
    }
    total
}

// When x lies outside the clipped rectangle, v0 is its clamped image and
// the integrand is regular.
fn duffy_triangle(density: &Density, v0: Point, v1: Point, v2: Point, x: Point, kernel: &KatoKernel) -> f64 {
    let e1 = [v1[0] - v0[0], v1[1] - v0[1]];
    let e2 = [v2[0] - v1[0], v2[1] - v1[1]];
    let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
    if jac == 0.0 {
        return 0.0;
    }
    let (nodes, weights) = gl8();
    let mut total = 0.0;
    const PANELS: i32 = 30;
    for p in 0..=PANELS {
        let (u0, u1) = if p == PANELS {
            (0.0, 0.5f64.powi(PANELS))
        } else {
            (0.5f64.powi(p + 1), 0.5f64.powi(p))
        };
        let hu = 0.5 * (u1 - u0);
        let mu = 0.5 * (u1 + u0);
        for (xu, wu) in nodes.iter().zip(weights) {
            let u = mu + hu * xu;
            let mut inner = 0.0;
            for (xv, wv) in nodes.iter().zip(weights) {
                let v = 0.5 * (1.0 + xv);
                let y = [v0[0] + u * (e1[0] + v * e2[0]), v0[1] + u * (e1[1] + v * e2[1])];
                let r = dist(y, x);
                let k = if kernel.n == 2 {
                    (kernel.diam / r).ln()
                } else {
                    1.0 / r
                };
                inner += 0.5 * wv * density.eval(y) * k;
            }
            total += hu * wu * u * jac * inner;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit() -> Rect {
        Rect::unit()
    }

    #[test]
    fn constant_density_mass() {
        let mu = MeasureSpec::constant(unit(), 3.0).unwrap();
        let q = LatticeCube::new(2, [0, 1]).unwrap();
        assert!((mu.mass_on_box(&q) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn atom_mass_uses_half_open_cubes() {
        let mu = MeasureSpec::zero(unit()).with_atom([0.3, 0.3], 2.0).unwrap();
        let q = LatticeCube::new(4, [1, 1]).unwrap();
        assert_eq!(mu.mass_on_box(&q), 2.0);
        let on_face = MeasureSpec::zero(unit()).with_atom([0.5, 0.3], 1.0).unwrap();
        assert_eq!(on_face.mass_on_box(&q), 0.0);
        assert_eq!(on_face.mass_on_box(&LatticeCube::new(4, [2, 1]).unwrap()), 1.0);
    }

    #[test]
    fn segment_on_lower_face_counts() {
        let mu = MeasureSpec::zero(unit()).with_segment([1e-9, 0.5], [1.0 - 1e-9, 0.5], 4.0).unwrap();
        let q = LatticeCube::new(4, [1, 2]).unwrap();
        assert!((mu.mass_on_box(&q) - 1.0).abs() < 1e-12);
        let below = LatticeCube::new(4, [1, 1]).unwrap();
        assert_eq!(mu.mass_on_box(&below), 0.0);
    }

    #[test]
    fn rejects_atoms_outside_domain() {
        assert!(MeasureSpec::zero(unit()).with_atom([1.5, 0.5], 1.0).is_err());
        assert!(MeasureSpec::zero(unit()).with_atom([0.0, 0.5], 1.0).is_err());
        assert!(MeasureSpec::zero(unit()).with_atom([0.5, 0.5], 0.0).is_err());
    }

    #[test]
    fn checkerboard_and_radial_integrals() {
        let d = Density::Checkerboard { a: 1.0, b: 3.0, k: 4 };
        assert!((d.integral(&unit()) - 2.0).abs() < 1e-14);
        let r = Rect::new([0.1, 0.2], [0.37, 0.61]).unwrap();
        let fine = crate::quadrature::integrate_rect_adaptive(&r, &|p| d.eval(p), 1e-12, 14);
        assert!((d.integral(&r) - fine).abs() < 1e-6);
        // ∫_{[0,1]^2} |x|^2 = 2/3
        let rad = Density::Radial { coeff: 1.0, center: [0.0, 0.0], exponent: 2.0 };
        assert!((rad.integral(&unit()) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn decompose_splits_atoms() {
        let mu = MeasureSpec::constant(unit(), 200.0).unwrap().with_atom([0.51, 0.53], 1.0).unwrap();
        let d = mu.decompose();
        assert_eq!(d.mu0.density, Density::Constant(200.0));
        assert!(d.mu0.atoms.is_empty());
        assert_eq!(d.mu1.atoms.len(), 1);
        assert!(d.mu1.density.is_zero());
        let z = MeasureSpec::zero(unit()).decompose();
        assert!(z.mu0.is_zero() && z.mu1.is_zero());
        let seg = MeasureSpec::zero(unit()).with_segment([0.1, 0.1], [0.9, 0.2], 2.0).unwrap();
        let ds = seg.decompose();
        assert_eq!(ds.mu0, seg);
        assert!(ds.mu1.is_zero());
    }

    #[test]
    fn truncation() {
        let mu = MeasureSpec::constant(unit(), 200.0).unwrap();
        assert_eq!(mu.truncate_density(50.0).density, Density::Constant(50.0));
        let small = MeasureSpec::constant(unit(), 3.0).unwrap();
        assert_eq!(small.truncate_density(10.0), small);
        assert!(MeasureSpec::zero(unit()).truncate_density(4.0).is_zero());
    }

    #[test]
    fn kato_norm_trivial_cases() {
        let r = Rect::centered([0.5, 0.5], 0.1);
        assert_eq!(MeasureSpec::zero(unit()).kato_norm(&r, 2).unwrap(), 0.0);
        let atom = MeasureSpec::zero(unit()).with_atom([0.5, 0.5], 1.0).unwrap();
        assert!(atom.kato_norm(&r, 2).unwrap().is_infinite());
        assert!(MeasureSpec::zero(unit()).kato_norm(&r, 4).is_err());
    }

    /// Independent oracle: polar coordinates around the centre with the
    /// radial integral done analytically.
    fn centre_potential_polar(half: f64, n: u32) -> f64 {
        let diam = 2.0 * half * 2f64.sqrt();
        let rule = crate::quadrature::gauss_legendre(40);
        // 8 congruent octants, θ ∈ [0, π/4], R(θ) = half / cos θ
        8.0 * crate::quadrature::integrate_interval(&rule, 0.0, PI / 4.0, |t| {
            let big_r = half / t.cos();
            if n == 2 {
                big_r * big_r / 2.0 * ((diam / big_r).ln() + 0.5)
            } else {
                big_r
            }
        })
    }

    #[test]
    fn kato_norm_of_unit_density_matches_polar_oracle() {
        let mu = MeasureSpec::constant(unit(), 1.0).unwrap();
        let region = Rect::centered([0.5, 0.5], 0.125);
        let got = mu.kato_norm(&region, 2).unwrap();
        let expected = centre_potential_polar(0.125, 2) + 0.0625;
        assert!((got - expected).abs() < 1e-6 * expected, "{got} vs {expected}");
        let got3 = mu.kato_norm(&region, 3).unwrap();
        let expected3 = centre_potential_polar(0.125, 3);
        assert!((got3 - expected3).abs() < 1e-6 * expected3, "{got3} vs {expected3}");
    }

    #[test]
    fn segment_kernel_closed_forms() {
        let k2 = KatoKernel::new(2, 1.0);
        // x at distance 0 from the middle of a unit segment: ∫_{-1/2}^{1/2} -ln|s| ds = 1 + ln 2
        let got = k2.segment_integral([0.0, 0.0], [1.0, 0.0], [0.5, 0.0]);
        assert!((got - (1.0 + 2f64.ln())).abs() < 1e-12);
        let off = k2.segment_integral([0.0, 0.0], [1.0, 0.0], [0.5, 0.2]);
        let rule = crate::quadrature::gauss_legendre(30);
        let q = crate::quadrature::integrate_interval(&rule, 0.0, 1.0, |s| -((s - 0.5f64).hypot(0.2)).ln());
        assert!((off - q).abs() < 1e-10);
        let k3 = KatoKernel::new(3, 1.0);
        assert!(k3.segment_integral([0.0, 0.0], [1.0, 0.0], [0.5, 0.0]).is_infinite());
        let g = k3.segment_integral([0.0, 0.0], [1.0, 0.0], [0.5, 0.2]);
        let q3 = crate::quadrature::integrate_interval(&rule, 0.0, 1.0, |s| 1.0 / (s - 0.5f64).hypot(0.2));
        assert!((g - q3).abs() < 1e-10);
    }
}
