//! Perforation at lattice level `h`: interior cubes, capacity-matched holes
//! and their summary.

use std::collections::HashMap;
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{hole_radius_at, DEFAULT_RADIUS_TOL};
use crate::error::{Error, Result};
use crate::geometry::{LatticeCube, Point, Rect};
use crate::measures::MeasureSpec;
use crate::operator::EllipticOperator;

/// Interior cubes `Q_h^i`, closure inside the open domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLevel {
    pub h: u32,
    /// Lexicographically sorted.
    pub interior_indices: Vec<[i64; 2]>,
}

impl GridLevel {
    pub fn cubes(&self) -> impl Iterator<Item = LatticeCube> + '_ {
        let h = self.h;
        self.interior_indices.iter().map(move |&index| LatticeCube { level: h, index })
    }

    pub fn len(&self) -> usize {
        self.interior_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior_indices.is_empty()
    }
}

pub fn interior_cubes(domain: &Rect, h: u32) -> Result<GridLevel> {
    if h == 0 {
        return Err(Error::InvalidInput("lattice level h must be >= 1".into()));
    }
    let hf = h as f64;
    let range = |lo: f64, hi: f64| -> (i64, i64) { ((lo * hf).floor() as i64 - 1, (hi * hf).ceil() as i64 + 1) };
    let (x0, x1) = range(domain.min[0], domain.max[0]);
    let (y0, y1) = range(domain.min[1], domain.max[1]);
    let mut interior_indices = Vec::new();
    for i in x0..=x1 {
        for j in y0..=y1 {
            let cube = LatticeCube { level: h, index: [i, j] };
            if cube.rect().is_compactly_inside(domain) {
                interior_indices.push([i, j]);
            }
        }
    }
    Ok(GridLevel { h, interior_indices })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub i: [i64; 2],
    pub center: Point,
    pub radius: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleFamily {
    pub h: u32,
    pub holes: Vec<Hole>,
    pub operator: String,
}

impl HoleFamily {
    /// Radius of the reference balls `B_h^i`.
    pub fn reference_radius(&self) -> f64 {
        0.5 / self.h as f64
    }

    /// Holes that actually perforate (positive radius).
    pub fn active(&self) -> impl Iterator<Item = &Hole> {
        self.holes.iter().filter(|h| h.radius > 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.holes.iter().map(|h| h.mass).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

type RadiusKey = (String, u64, u64, Option<[u64; 2]>);

/// Memo of hole radii keyed by operator, mass and ball. Concurrent readers,
/// one writer at a time.
#[derive(Debug, Default)]
pub struct RadiusCache {
    map: RwLock<HashMap<RadiusKey, f64>>,
}

impl RadiusCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Radius for `mass` in a ball of radius `r` at `center`. The centre is
    /// part of the key only for variable coefficients.
    pub fn radius(&self, op: &EllipticOperator, mass: f64, r: f64, center: Point) -> Result<f64> {
        let key: RadiusKey = (
            op.fingerprint(),
            mass.to_bits(),
            r.to_bits(),
            (!op.is_constant()).then(|| [center[0].to_bits(), center[1].to_bits()]),
        );
        if let Some(v) = self.map.read().ok().and_then(|m| m.get(&key).copied()) {
            return Ok(v);
        }
        let rho = hole_radius_at(mass, r, center, op, DEFAULT_RADIUS_TOL)?;
        if let Ok(mut m) = self.map.write() {
            m.insert(key, rho);
        }
        Ok(rho)
    }
}

/// Holes `E_h^i` with `cap^L(E_h^i, B_h^i) = μ(Q_h^i)`.
pub fn build_holes(domain: &Rect, mu: &MeasureSpec, op: &EllipticOperator, h: u32) -> Result<HoleFamily> {
    build_holes_cached(domain, mu, op, h, &RadiusCache::new())
}

pub fn build_holes_cached(
    domain: &Rect,
    mu: &MeasureSpec,
    op: &EllipticOperator,
    h: u32,
    cache: &RadiusCache,
) -> Result<HoleFamily> {
    let level = interior_cubes(domain, h)?;
    let r = 0.5 / h as f64;
    let holes = level
        .interior_indices
        .par_iter()
        .map(|&i| {
            let cube = LatticeCube { level: h, index: i };
            let mass = mu.mass_on_box(&cube);
            let center = cube.center();
            let radius = if mass > 0.0 { cache.radius(op, mass, r, center)? } else { 0.0 };
            if radius >= r {
                return Err(Error::Geometry(format!("hole radius {radius} reaches its reference ball at cube {i:?}")));
            }
            Ok(Hole { i, center, radius, mass })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HoleFamily {
        h,
        holes,
        operator: op.fingerprint(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolesReport {
    pub count: usize,
    pub active: usize,
    pub min_radius: f64,
    pub max_radius: f64,
    pub total_capacity: f64,
    pub spacing: f64,
    pub resolvable: bool,
}

/// Summary of a family against a mesh spacing; resolvable iff every
/// positive radius is at least two cells.
pub fn holes_report(family: &HoleFamily, spacing: f64) -> HolesReport {
    let radii: Vec<f64> = family.active().map(|h| h.radius).collect();
    let min_radius = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let max_radius = radii.iter().copied().fold(0.0, f64::max);
    HolesReport {
        count: family.holes.len(),
        active: radii.len(),
        min_radius: if radii.is_empty() { 0.0 } else { min_radius },
        max_radius,
        total_capacity: family.active().map(|h| h.mass).sum(),
        spacing,
        resolvable: radii.iter().all(|&r| r >= 2.0 * spacing),
    }
}
