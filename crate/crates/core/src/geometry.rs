//! Planar geometry: rectangles, disks, lattice cubes and simple regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Axis-aligned rectangle `[min, max]`.
///
/// Membership comes in three flavours: closed, open, and half-open
/// (`min <= x < max`), the last one matching the lattice cube convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        let finite = min.iter().chain(max.iter()).all(|v| v.is_finite());
        if !finite || max[0] <= min[0] || max[1] <= min[1] {
            return Err(Error::Geometry(format!(
                "degenerate rectangle {min:?}..{max:?}"
            )));
        }
        Ok(Rect { min, max })
    }

    pub fn unit() -> Self {
        Rect {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        }
    }

    /// Square with the given center and half side.
    pub fn centered(center: Point, half_side: f64) -> Self {
        Rect {
            min: [center[0] - half_side, center[1] - half_side],
            max: [center[0] + half_side, center[1] + half_side],
        }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diam(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
        ]
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        (0..2).all(|k| self.min[k] <= p[k] && p[k] <= self.max[k])
    }

    pub fn contains_open(&self, p: Point) -> bool {
        (0..2).all(|k| self.min[k] < p[k] && p[k] < self.max[k])
    }

    pub fn contains_half_open(&self, p: Point) -> bool {
        (0..2).all(|k| self.min[k] <= p[k] && p[k] < self.max[k])
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let min = [self.min[0].max(other.min[0]), self.min[1].max(other.min[1])];
        let max = [self.max[0].min(other.max[0]), self.max[1].min(other.max[1])];
        (max[0] > min[0] && max[1] > min[1]).then_some(Rect { min, max })
    }

    /// `self ⊆ other` as closed sets.
    pub fn is_subset_of(&self, other: &Rect) -> bool {
        (0..2).all(|k| other.min[k] <= self.min[k] && self.max[k] <= other.max[k])
    }

    /// The closure of `self` lies in the open interior of `other`.
    pub fn is_compactly_inside(&self, other: &Rect) -> bool {
        (0..2).all(|k| other.min[k] < self.min[k] && self.max[k] < other.max[k])
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            self.min,
            [self.max[0], self.min[1]],
            self.max,
            [self.min[0], self.max[1]],
        ]
    }

    /// Splits into four equal quadrants.
    pub fn quadrants(&self) -> [Rect; 4] {
        let c = self.center();
        [
            Rect { min: self.min, max: c },
            Rect {
                min: [c[0], self.min[1]],
                max: [self.max[0], c[1]],
            },
            Rect {
                min: [self.min[0], c[1]],
                max: [c[0], self.max[1]],
            },
            Rect { min: c, max: self.max },
        ]
    }

    /// Parameter interval `[t0, t1] ⊆ [0, 1]` of the segment `a + t (b - a)`
    /// lying in the half-open rectangle. A segment running along a lower
    /// face counts as inside, one along an upper face as outside.
    pub fn clip_segment_half_open(&self, a: Point, b: Point) -> Option<(f64, f64)> {
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        for k in 0..2 {
            let d = b[k] - a[k];
            if d == 0.0 {
                if a[k] < self.min[k] || a[k] >= self.max[k] {
                    return None;
                }
            } else {
                let mut lo = (self.min[k] - a[k]) / d;
                let mut hi = (self.max[k] - a[k]) / d;
                if lo > hi {
                    std::mem::swap(&mut lo, &mut hi);
                }
                t0 = t0.max(lo);
                t1 = t1.min(hi);
            }
        }
        (t1 > t0).then_some((t0, t1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Self {
        Disk { center, radius }
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        dist(self.center, p) <= self.radius
    }

    pub fn contains_open(&self, p: Point) -> bool {
        dist(self.center, p) < self.radius
    }

    pub fn bbox(&self) -> Rect {
        Rect::centered(self.center, self.radius)
    }
}

/// Bounded planar set built from disks and rectangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Empty,
    Disk(Disk),
    Rect(Rect),
    Union(Vec<Region>),
}

impl Region {
    pub fn disk(center: Point, radius: f64) -> Self {
        Region::Disk(Disk::new(center, radius))
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Region::Empty => true,
            Region::Disk(d) => d.radius <= 0.0,
            Region::Rect(_) => false,
            Region::Union(parts) => parts.iter().all(Region::is_empty),
        }
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        match self {
            Region::Empty => false,
            Region::Disk(d) => d.contains_closed(p),
            Region::Rect(r) => r.contains_closed(p),
            Region::Union(parts) => parts.iter().any(|r| r.contains_closed(p)),
        }
    }

    pub fn contains_open(&self, p: Point) -> bool {
        match self {
            Region::Empty => false,
            Region::Disk(d) => d.contains_open(p),
            Region::Rect(r) => r.contains_open(p),
            Region::Union(parts) => parts.iter().any(|r| r.contains_open(p)),
        }
    }

    pub fn bbox(&self) -> Option<Rect> {
        match self {
            Region::Empty => None,
            Region::Disk(d) => (d.radius > 0.0).then(|| d.bbox()),
            Region::Rect(r) => Some(*r),
            Region::Union(parts) => parts.iter().filter_map(Region::bbox).reduce(|a, b| Rect {
                min: [a.min[0].min(b.min[0]), a.min[1].min(b.min[1])],
                max: [a.max[0].max(b.max[0]), a.max[1].max(b.max[1])],
            }),
        }
    }

    /// Smallest diameter among the pieces; `None` for the empty set.
    pub fn min_piece_diameter(&self) -> Option<f64> {
        match self {
            Region::Empty => None,
            Region::Disk(d) => (d.radius > 0.0).then_some(2.0 * d.radius),
            Region::Rect(r) => Some(r.width().min(r.height())),
            Region::Union(parts) => parts
                .iter()
                .filter_map(Region::min_piece_diameter)
                .reduce(f64::min),
        }
    }

    /// Closed-set inclusion `self ⊆ other`, exact for the disk/rectangle
    /// pairs; a union on the right is handled piecewise (sufficient test).
    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.inclusion(other, false)
    }

    /// `closure(self) ⊂ interior(other)`.
    pub fn is_compactly_inside(&self, other: &Region) -> bool {
        self.inclusion(other, true)
    }

    fn inclusion(&self, other: &Region, strict: bool) -> bool {
        let le = |a: f64, b: f64| if strict { a < b } else { a <= b };
        match (self, other) {
            (s, _) if s.is_empty() => true,
            (Region::Union(parts), _) => parts.iter().all(|p| p.inclusion(other, strict)),
            (_, Region::Union(parts)) => parts.iter().any(|o| self.inclusion(o, strict)),
            (_, Region::Empty) => false,
            (Region::Disk(a), Region::Disk(b)) => le(dist(a.center, b.center) + a.radius, b.radius),
            (Region::Rect(a), Region::Disk(b)) => a
                .corners()
                .iter()
                .all(|&c| le(dist(c, b.center), b.radius)),
            (Region::Disk(a), Region::Rect(b)) => {
                let bb = a.bbox();
                if strict {
                    bb.is_compactly_inside(b)
                } else {
                    bb.is_subset_of(b)
                }
            }
            (Region::Rect(a), Region::Rect(b)) => {
                if strict {
                    a.is_compactly_inside(b)
                } else {
                    a.is_subset_of(b)
                }
            }
            (Region::Empty, _) => true,
        }
    }
}

/// Lattice cube `Q_h^i = { i_k/h <= x_k < (i_k+1)/h }` of side `1/h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeCube {
    pub level: u32,
    pub index: [i64; 2],
}

impl LatticeCube {
    pub fn new(level: u32, index: [i64; 2]) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidInput("lattice level must be positive".into()));
        }
        Ok(LatticeCube { level, index })
    }

    pub fn side(&self) -> f64 {
        1.0 / self.level as f64
    }

    pub fn rect(&self) -> Rect {
        let h = self.level as f64;
        Rect {
            min: [self.index[0] as f64 / h, self.index[1] as f64 / h],
            max: [(self.index[0] + 1) as f64 / h, (self.index[1] + 1) as f64 / h],
        }
    }

    pub fn center(&self) -> Point {
        let h = self.level as f64;
        [
            (self.index[0] as f64 + 0.5) / h,
            (self.index[1] as f64 + 0.5) / h,
        ]
    }

    pub fn contains(&self, p: Point) -> bool {
        self.rect().contains_half_open(p)
    }

    /// The four cubes of level `2h` that tile this one.
    pub fn children(&self) -> [LatticeCube; 4] {
        let [i, j] = self.index;
        let level = 2 * self.level;
        [
            LatticeCube { level, index: [2 * i, 2 * j] },
            LatticeCube { level, index: [2 * i + 1, 2 * j] },
            LatticeCube { level, index: [2 * i, 2 * j + 1] },
            LatticeCube { level, index: [2 * i + 1, 2 * j + 1] },
        ]
    }
}
