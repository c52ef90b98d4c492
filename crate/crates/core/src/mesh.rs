//! Uniform triangulations of rectangles and piecewise-linear nodal fields.
//!
//! Each square cell is split into two right triangles. The diagonal
//! alternates with the parity of `i + j` (global lattice parity is kept for
//! sub-windows), so the pattern is symmetric under reflections through any
//! node line.
//!
//! # Field file formats
//!
//! CSV: a header line `nx,ny,spacing,origin_x,origin_y` (`nx`, `ny` are node
//! counts) followed by `ny` rows of `nx` comma-separated values; row `j`
//! holds the nodes with `y = origin_y + j * spacing`.
//!
//! Binary (all little-endian): magic `RLXF`, `u32` version (= 1), `u64 nx`,
//! `u64 ny`, `f64 spacing`, `f64 origin_x`, `f64 origin_y`, then `nx * ny`
//! `f64` values in the same row-major order.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    origin: Point,
    spacing: f64,
    nx: usize,
    ny: usize,
    parity: usize,
}

/// One triangle: global node numbers, vertex coordinates, and the index of
/// its shape among the four congruent right triangles of the pattern.
#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    pub nodes: [usize; 3],
    pub verts: [Point; 3],
    pub shape: usize,
}

impl Triangle {
    pub fn area(&self) -> f64 {
        let [a, b, c] = self.verts;
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
    }

    pub fn point(&self, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.verts;
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    pub fn centroid(&self) -> Point {
        self.point([1.0 / 3.0; 3])
    }

    /// Gradients of the three barycentric coordinates.
    pub fn gradients(&self) -> [[f64; 2]; 3] {
        let [a, b, c] = self.verts;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        [
            [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
            [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
        ]
    }

    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let [a, b, c] = self.verts;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}

impl Mesh {
    /// Mesh of `domain`; `spacing` must divide both side lengths.
    pub fn new(domain: &Rect, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidInput(format!("mesh spacing {spacing} must be positive")));
        }
        let count = |len: f64| -> Result<usize> {
            let n = (len / spacing).round();
            if n < 1.0 || (n * spacing - len).abs() > 1e-9 * len {
                return Err(Error::InvalidInput(format!(
                    "spacing {spacing} does not divide side length {len}"
                )));
            }
            Ok(n as usize)
        };
        Ok(Mesh {
            origin: domain.min,
            spacing,
            nx: count(domain.width())?,
            ny: count(domain.height())?,
            parity: 0,
        })
    }

    /// Mesh on the lattice `anchor + spacing * Z²` covering `bbox` with at
    /// least one spare cell on each side.
    pub fn covering(bbox: &Rect, anchor: Point, spacing: f64) -> Self {
        let lo = |v: f64, a: f64| ((v - a) / spacing).floor() as i64 - 1;
        let hi = |v: f64, a: f64| ((v - a) / spacing).ceil() as i64 + 1;
        let (i0, i1) = (lo(bbox.min[0], anchor[0]), hi(bbox.max[0], anchor[0]));
        let (j0, j1) = (lo(bbox.min[1], anchor[1]), hi(bbox.max[1], anchor[1]));
        Mesh {
            origin: [anchor[0] + i0 as f64 * spacing, anchor[1] + j0 as f64 * spacing],
            spacing,
            nx: (i1 - i0) as usize,
            ny: (j1 - j0) as usize,
            parity: (i0 + j0).rem_euclid(2) as usize,
        }
    }

    /// Sub-mesh of whole cells containing the disk `B(center, radius)`
    /// plus one spare cell, clipped to this mesh. Returns it together with
    /// the global index of each local node.
    pub fn window(&self, center: Point, radius: f64) -> (Mesh, Vec<usize>) {
        let s = self.spacing;
        let clamp_i = |v: f64, n: usize| v.max(0.0).min(n as f64) as usize;
        let i0 = clamp_i(((center[0] - radius - self.origin[0]) / s).floor() - 1.0, self.nx);
        let i1 = clamp_i(((center[0] + radius - self.origin[0]) / s).ceil() + 1.0, self.nx);
        let j0 = clamp_i(((center[1] - radius - self.origin[1]) / s).floor() - 1.0, self.ny);
        let j1 = clamp_i(((center[1] + radius - self.origin[1]) / s).ceil() + 1.0, self.ny);
        let sub = Mesh {
            origin: [self.origin[0] + i0 as f64 * s, self.origin[1] + j0 as f64 * s],
            spacing: s,
            nx: i1 - i0,
            ny: j1 - j0,
            parity: (self.parity + i0 + j0) % 2,
        };
        let mut map = Vec::with_capacity(sub.node_count());
        for j in 0..=sub.ny {
            for i in 0..=sub.nx {
                map.push(self.node_index(i0 + i, j0 + j));
            }
        }
        (sub, map)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn cells(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn nodes_x(&self) -> usize {
        self.nx + 1
    }

    pub fn nodes_y(&self) -> usize {
        self.ny + 1
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn domain(&self) -> Rect {
        Rect {
            min: self.origin,
            max: [
                self.origin[0] + self.nx as f64 * self.spacing,
                self.origin[1] + self.ny as f64 * self.spacing,
            ],
        }
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node_ij(&self, k: usize) -> (usize, usize) {
        (k % (self.nx + 1), k / (self.nx + 1))
    }

    pub fn node_point(&self, k: usize) -> Point {
        let (i, j) = self.node_ij(k);
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
        ]
    }

    pub fn is_boundary_node(&self, k: usize) -> bool {
        let (i, j) = self.node_ij(k);
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    fn cell_even(&self, i: usize, j: usize) -> bool {
        (i + j + self.parity) % 2 == 0
    }

    pub fn cell_triangles(&self, i: usize, j: usize) -> [Triangle; 2] {
        let s = self.spacing;
        let x0 = self.origin[0] + i as f64 * s;
        let y0 = self.origin[1] + j as f64 * s;
        let p00 = [x0, y0];
        let p10 = [x0 + s, y0];
        let p11 = [x0 + s, y0 + s];
        let p01 = [x0, y0 + s];
        let n00 = self.node_index(i, j);
        let n10 = self.node_index(i + 1, j);
        let n11 = self.node_index(i + 1, j + 1);
        let n01 = self.node_index(i, j + 1);
        if self.cell_even(i, j) {
            [
                Triangle { nodes: [n00, n10, n11], verts: [p00, p10, p11], shape: 0 },
                Triangle { nodes: [n00, n11, n01], verts: [p00, p11, p01], shape: 1 },
            ]
        } else {
            [
                Triangle { nodes: [n00, n10, n01], verts: [p00, p10, p01], shape: 2 },
                Triangle { nodes: [n10, n11, n01], verts: [p10, p11, p01], shape: 3 },
            ]
        }
    }

    pub fn for_each_triangle(&self, mut f: impl FnMut(&Triangle)) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                for t in self.cell_triangles(i, j) {
                    f(&t);
                }
            }
        }
    }

    /// Triangle containing `p` with the barycentric coordinates of `p`, or
    /// `None` outside the mesh rectangle.
    pub fn locate(&self, p: Point) -> Option<(Triangle, [f64; 3])> {
        let tol = 1e-12 * self.spacing;
        let d = self.domain();
        if p[0] < d.min[0] - tol || p[0] > d.max[0] + tol || p[1] < d.min[1] - tol || p[1] > d.max[1] + tol {
            return None;
        }
        let fx = (p[0] - self.origin[0]) / self.spacing;
        let fy = (p[1] - self.origin[1]) / self.spacing;
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        let (xi, eta) = (fx - i as f64, fy - j as f64);
        let [t0, t1] = self.cell_triangles(i, j);
        let first = if self.cell_even(i, j) { xi >= eta } else { xi + eta <= 1.0 };
        let t = if first { t0 } else { t1 };
        let bary = t.barycentric(p);
        Some((t, bary))
    }

    pub fn same_grid(&self, other: &Mesh) -> bool {
        self == other
    }
}

/// Continuous piecewise-linear function given by its nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub mesh: Mesh,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::InvalidInput(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        Ok(Field { mesh, values })
    }

    pub fn constant(mesh: Mesh, value: f64) -> Self {
        Field {
            mesh,
            values: vec![value; mesh.node_count()],
        }
    }

    pub fn from_fn(mesh: Mesh, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..mesh.node_count()).map(|k| f(mesh.node_point(k))).collect();
        Field { mesh, values }
    }

    pub fn eval(&self, p: Point) -> Option<f64> {
        self.mesh.locate(p).map(|(t, b)| {
            b[0] * self.values[t.nodes[0]] + b[1] * self.values[t.nodes[1]] + b[2] * self.values[t.nodes[2]]
        })
    }

    /// Nodal interpolant of this field on another mesh; nodes of `target`
    /// outside this mesh get 0.
    pub fn interpolate_to(&self, target: &Mesh) -> Field {
        if self.mesh == *target {
            return self.clone();
        }
        Field::from_fn(*target, |p| self.eval(p).unwrap_or(0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn write_csv(&self, w: impl Write) -> std::io::Result<()> {
        let mut w = BufWriter::new(w);
        let o = self.mesh.origin();
        writeln!(
            w,
            "{},{},{},{},{}",
            self.mesh.nodes_x(),
            self.mesh.nodes_y(),
            self.mesh.spacing(),
            o[0],
            o[1]
        )?;
        for row in self.values.chunks(self.mesh.nodes_x()) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    }

    pub fn read_csv(r: impl Read) -> Result<Field> {
        let bad = |m: &str| Error::InvalidInput(format!("field csv: {m}"));
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| bad("empty input"))?
            .map_err(|e| bad(&e.to_string()))?;
        let h: Vec<&str> = header.trim().split(',').collect();
        if h.len() != 5 {
            return Err(bad("header must be nx,ny,spacing,origin_x,origin_y"));
        }
        let nx: usize = h[0].parse().map_err(|_| bad("nx"))?;
        let ny: usize = h[1].parse().map_err(|_| bad("ny"))?;
        let nums: Vec<f64> = h[2..]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| bad("header number")))
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(nx * ny);
        for line in lines {
            let line = line.map_err(|e| bad(&e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            for v in line.trim().split(',') {
                values.push(v.parse::<f64>().map_err(|_| bad("value"))?);
            }
        }
        let mesh = raw_mesh(nx, ny, nums[0], [nums[1], nums[2]]).ok_or_else(|| bad("bad grid size"))?;
        Field::new(mesh, values)
    }

    pub fn write_binary(&self, w: impl Write) -> std::io::Result<()> {
        let mut w = BufWriter::new(w);
        let o = self.mesh.origin();
        w.write_all(b"RLXF")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.mesh.nodes_x() as u64).to_le_bytes())?;
        w.write_all(&(self.mesh.nodes_y() as u64).to_le_bytes())?;
        for v in [self.mesh.spacing(), o[0], o[1]] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_binary(mut r: impl Read) -> Result<Field> {
        let bad = |m: &str| Error::InvalidInput(format!("field binary: {m}"));
        let mut buf = Vec::new();
        r.read_to_end(&mut buf).map_err(|e| bad(&e.to_string()))?;
        if buf.len() < 48 || &buf[..4] != b"RLXF" {
            return Err(bad("missing RLXF header"));
        }
        let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != 1 {
            return Err(bad("unsupported version"));
        }
        let nx = u64_at(8) as usize;
        let ny = u64_at(16) as usize;
        let (spacing, ox, oy) = (f64_at(24), f64_at(32), f64_at(40));
        if buf.len() != 48 + 8 * nx * ny {
            return Err(bad("length does not match grid size"));
        }
        let values = (0..nx * ny).map(|k| f64_at(48 + 8 * k)).collect();
        let mesh = raw_mesh(nx, ny, spacing, [ox, oy]).ok_or_else(|| bad("bad grid size"))?;
        Field::new(mesh, values)
    }

    /// Writes CSV, or the binary form when the extension is `.bin`.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let res = if path.extension().is_some_and(|e| e == "bin") {
            self.write_binary(file)
        } else {
            self.write_csv(file)
        };
        res.map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Field> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "bin") {
            Field::read_binary(file)
        } else {
            Field::read_csv(file)
        }
    }
}

fn raw_mesh(nodes_x: usize, nodes_y: usize, spacing: f64, origin: Point) -> Option<Mesh> {
    (nodes_x >= 2 && nodes_y >= 2 && spacing > 0.0).then_some(Mesh {
        origin,
        spacing,
        nx: nodes_x - 1,
        ny: nodes_y - 1,
        parity: 0,
    })
}
