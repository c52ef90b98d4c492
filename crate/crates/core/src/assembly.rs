//! P1 finite element assembly on [`Mesh`]: stiffness forms, measure
//! mass forms, load vectors and element-exact norms.

use crate::geometry::{Point, Region};
use crate::linalg::StencilMatrix;
use crate::measures::{Density, MeasureSpec, Segment};
use crate::mesh::{Field, Mesh, Triangle};
use crate::operator::EllipticOperator;
use crate::quadrature::{gl4, TRIANGLE_RULE};

/// `∫ A∇φ_i·∇φ_j`, with `A` sampled at element centroids.
pub fn stiffness(mesh: &Mesh, op: &EllipticOperator) -> StencilMatrix {
    let mut k = StencilMatrix::zeros(mesh);
    let constant = op.is_constant().then(|| op.matrix_at([0.0, 0.0]));
    // the four triangle shapes repeat, so constant coefficients need only
    // four element matrices
    let mut cache: [Option<[[f64; 3]; 3]>; 4] = [None; 4];
    mesh.for_each_triangle(|t| {
        let local = match constant {
            Some(a) => *cache[t.shape].get_or_insert_with(|| element_stiffness(t, a)),
            None => element_stiffness(t, op.matrix_at(t.centroid())),
        };
        for a in 0..3 {
            for b in 0..3 {
                k.add(t.nodes[a], t.nodes[b], local[a][b]);
            }
        }
    });
    k
}

/// Stiffness of `-Δ` (unit coefficient).
pub fn laplace_stiffness(mesh: &Mesh) -> StencilMatrix {
    stiffness(mesh, &EllipticOperator::laplace())
}

fn element_stiffness(t: &Triangle, a: [f64; 3]) -> [[f64; 3]; 3] {
    let g = t.gradients();
    let area = t.area();
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        let ag = [a[0] * g[i][0] + a[1] * g[i][1], a[1] * g[i][0] + a[2] * g[i][1]];
        for j in 0..3 {
            m[i][j] = area * (ag[0] * g[j][0] + ag[1] * g[j][1]);
        }
    }
    m
}

/// Adds `∫ g φ_i φ_j dx` for the density restricted to `Ω ∩ restrict`
/// (indicator sampled at quadrature points).
pub fn add_density_mass(mesh: &Mesh, mu: &MeasureSpec, restrict: Option<&Region>, m: &mut StencilMatrix) {
    if mu.density.is_zero() {
        return;
    }
    let constant = match mu.density {
        Density::Constant(c) => Some(c),
        _ => None,
    };
    mesh.for_each_triangle(|t| {
        let area = t.area();
        let mut local = [[0.0; 3]; 3];
        for (bary, w) in TRIANGLE_RULE.iter() {
            let p = t.point(*bary);
            if !mu.domain.contains_open(p) || restrict.is_some_and(|r| !r.contains_closed(p)) {
                continue;
            }
            let g = constant.unwrap_or_else(|| mu.density.eval(p));
            for a in 0..3 {
                for b in 0..3 {
                    local[a][b] += w * area * g * bary[a] * bary[b];
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                if local[a][b] != 0.0 {
                    m.add(t.nodes[a], t.nodes[b], local[a][b]);
                }
            }
        }
    });
}

/// Pieces of a segment on which every P1 basis function is affine: the
/// segment is cut at grid lines and cell diagonals. Each piece comes with
/// the triangle containing it.
fn segment_pieces(mesh: &Mesh, seg: &Segment) -> Vec<(f64, f64, Triangle)> {
    let s = mesh.spacing();
    let o = mesh.origin();
    let (a, b) = (seg.start, seg.end);
    let mut ts = vec![0.0, 1.0];
    for k in 0..2 {
        let d = b[k] - a[k];
        if d == 0.0 {
            continue;
        }
        let lo = ((a[k].min(b[k]) - o[k]) / s).floor() as i64;
        let hi = ((a[k].max(b[k]) - o[k]) / s).ceil() as i64;
        for m in lo..=hi {
            let t = (o[k] + m as f64 * s - a[k]) / d;
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);

    let mut pieces = Vec::new();
    for w in ts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 - t0 <= 0.0 {
            continue;
        }
        // split at the crossing with the diagonal of the cell holding the midpoint
        let mid = seg.point_at(0.5 * (t0 + t1));
        let Some((tri, _)) = mesh.locate(mid) else { continue };
        let [p0, p1, _] = tri.verts;
        let cell = [p0[0].min(p1[0]), p0[1].min(p1[1])];
        let local = |t: f64| {
            let p = seg.point_at(t);
            [(p[0] - cell[0]) / s, (p[1] - cell[1]) / s]
        };
        // diagonal as g(ξ, η) = 0, linear in t
        let even = tri.shape <= 1;
        let g = |t: f64| {
            let q = local(t);
            if even {
                q[0] - q[1]
            } else {
                q[0] + q[1] - 1.0
            }
        };
        let (g0, g1) = (g(t0), g(t1));
        let mut cuts = vec![t0];
        if g0 * g1 < 0.0 {
            cuts.push(t0 + (t1 - t0) * g0 / (g0 - g1));
        }
        cuts.push(t1);
        for c in cuts.windows(2) {
            let m = seg.point_at(0.5 * (c[0] + c[1]));
            if let Some((tri, _)) = mesh.locate(m) {
                pieces.push((c[0], c[1], tri));
            }
        }
    }
    pieces
}

/// Adds `∫ ℓ φ_i φ_j ds` along every segment (restricted to `restrict` by
/// sampling the indicator at the Gauss points).
pub fn add_segment_mass(mesh: &Mesh, mu: &MeasureSpec, restrict: Option<&Region>, m: &mut StencilMatrix) {
    let (nodes, weights) = gl4();
    for seg in mu.segments.iter().filter(|s| s.density > 0.0) {
        let len = seg.length();
        for (t0, t1, tri) in segment_pieces(mesh, seg) {
            let half = 0.5 * (t1 - t0) * len;
            let mut local = [[0.0; 3]; 3];
            for (x, w) in nodes.iter().zip(weights) {
                let p = seg.point_at(0.5 * (t0 + t1) + 0.5 * (t1 - t0) * x);
                if restrict.is_some_and(|r| !r.contains_closed(p)) {
                    continue;
                }
                let bary = tri.barycentric(p);
                for a in 0..3 {
                    for b in 0..3 {
                        local[a][b] += seg.density * w * half * bary[a] * bary[b];
                    }
                }
            }
            for a in 0..3 {
                for b in 0..3 {
                    if local[a][b] != 0.0 {
                        m.add(tri.nodes[a], tri.nodes[b], local[a][b]);
                    }
                }
            }
        }
    }
}

/// Mass form of the atom-free part of `mu`.
pub fn measure_mass(mesh: &Mesh, mu: &MeasureSpec, restrict: Option<&Region>) -> StencilMatrix {
    let mut m = StencilMatrix::zeros(mesh);
    add_density_mass(mesh, mu, restrict, &mut m);
    add_segment_mass(mesh, mu, restrict, &mut m);
    m
}

/// `∫ f φ_i dx`.
pub fn load_vector(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; mesh.node_count()];
    mesh.for_each_triangle(|t| {
        let area = t.area();
        for (bary, w) in TRIANGLE_RULE.iter() {
            let v = w * area * f(t.point(*bary));
            for a in 0..3 {
                b[t.nodes[a]] += v * bary[a];
            }
        }
    });
    b
}

/// `∫ u² dμ` including atoms (P1 point values).
pub fn measure_quadratic(u: &Field, mu: &MeasureSpec) -> f64 {
    let mesh = &u.mesh;
    let mass = measure_mass(mesh, mu, None);
    let mut total = mass.quadratic_form(&u.values);
    for atom in &mu.atoms {
        total += atom.mass * u.eval(atom.position).unwrap_or(0.0).powi(2);
    }
    total
}

/// `∫ u²` over the mesh, exact for P1.
pub fn l2_norm_sq(u: &Field) -> f64 {
    let mut total = 0.0;
    u.mesh.for_each_triangle(|t| {
        let v = t.nodes.map(|k| u.values[k]);
        let sum = v[0] + v[1] + v[2];
        total += t.area() / 12.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + sum * sum);
    });
    total
}

/// `∫ |∇u|²` over the mesh, exact for P1.
pub fn h1_seminorm_sq(u: &Field) -> f64 {
    let mut total = 0.0;
    u.mesh.for_each_triangle(|t| {
        let g = t.gradients();
        let mut grad = [0.0; 2];
        for a in 0..3 {
            grad[0] += u.values[t.nodes[a]] * g[a][0];
            grad[1] += u.values[t.nodes[a]] * g[a][1];
        }
        total += t.area() * (grad[0] * grad[0] + grad[1] * grad[1]);
    });
    total
}

/// Integrals restricted to triangles whose centroid lies in `region`
/// (`region` should be a union of whole cells for exactness).
pub fn l2_norm_sq_on(u: &Field, region: &Region) -> f64 {
    let mut total = 0.0;
    u.mesh.for_each_triangle(|t| {
        if !region.contains_closed(t.centroid()) {
            return;
        }
        let v = t.nodes.map(|k| u.values[k]);
        let sum = v[0] + v[1] + v[2];
        total += t.area() / 12.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + sum * sum);
    });
    total
}

pub fn h1_seminorm_sq_on(u: &Field, region: &Region) -> f64 {
    let mut total = 0.0;
    u.mesh.for_each_triangle(|t| {
        if !region.contains_closed(t.centroid()) {
            return;
        }
        let g = t.gradients();
        let mut grad = [0.0; 2];
        for a in 0..3 {
            grad[0] += u.values[t.nodes[a]] * g[a][0];
            grad[1] += u.values[t.nodes[a]] * g[a][1];
        }
        total += t.area() * (grad[0] * grad[0] + grad[1] * grad[1]);
    });
    total
}
