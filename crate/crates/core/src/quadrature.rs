//! Gauss–Legendre rules on intervals and rectangles, and a degree-4 rule
//! on triangles.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::geometry::Rect;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// The order-8 rule used for density integrals.
pub fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// The 4-point rule used along segments.
pub fn gl4() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(4))
}

/// Integrates `f` over `[a, b]` with the given rule.
pub fn integrate_interval(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Tensor-product order-8 rule over a rectangle.
pub fn integrate_rect(rect: &Rect, f: &impl Fn([f64; 2]) -> f64) -> f64 {
    let (nodes, weights) = gl8();
    let hx = 0.5 * rect.width();
    let hy = 0.5 * rect.height();
    let c = rect.center();
    let mut acc = 0.0;
    for (xi, wi) in nodes.iter().zip(weights) {
        let x = c[0] + hx * xi;
        let mut row = 0.0;
        for (yj, wj) in nodes.iter().zip(weights) {
            row += wj * f([x, c[1] + hy * yj]);
        }
        acc += wi * row;
    }
    acc * hx * hy
}

/// Adaptive dyadic refinement of [`integrate_rect`]: a cell is accepted once
/// its four children change the estimate by less than `rel_tol` relative to
/// the whole-rectangle estimate.
pub fn integrate_rect_adaptive(rect: &Rect, f: &impl Fn([f64; 2]) -> f64, rel_tol: f64, max_depth: u32) -> f64 {
    let coarse = integrate_rect(rect, f);
    let fine: f64 = rect.quadrants().iter().map(|q| integrate_rect(q, f)).sum();
    let scale = fine.abs().max(coarse.abs()).max(f64::MIN_POSITIVE);
    if (fine - coarse).abs() <= rel_tol * scale {
        return fine;
    }
    let total_area = rect.area();
    rect.quadrants()
        .iter()
        .map(|q| refine(q, f, rel_tol * scale, total_area, 1, max_depth))
        .sum()
}

fn refine(rect: &Rect, f: &impl Fn([f64; 2]) -> f64, abs_tol: f64, total_area: f64, depth: u32, max_depth: u32) -> f64 {
    let coarse = integrate_rect(rect, f);
    let quads = rect.quadrants();
    let fine: f64 = quads.iter().map(|q| integrate_rect(q, f)).sum();
    // tolerance shared in proportion to area, floored so singular cells terminate
    let local = (abs_tol * rect.area() / total_area).max(abs_tol * 1e-6);
    if (fine - coarse).abs() <= local || depth >= max_depth {
        return fine;
    }
    quads
        .iter()
        .map(|q| refine(q, f, abs_tol, total_area, depth + 1, max_depth))
        .sum()
}

/// Degree-4 symmetric six-point rule on a triangle, as barycentric
/// coordinates and weights summing to one.
pub const TRIANGLE_RULE: [([f64; 3], f64); 6] = {
    const A: f64 = 0.445_948_490_915_965;
    const B: f64 = 1.0 - 2.0 * A;
    const WA: f64 = 0.223_381_589_678_011;
    const C: f64 = 0.091_576_213_509_771;
    const D: f64 = 1.0 - 2.0 * C;
    const WC: f64 = 0.109_951_743_655_322;
    [
        ([A, A, B], WA),
        ([A, B, A], WA),
        ([B, A, A], WA),
        ([C, C, D], WC),
        ([C, D, C], WC),
        ([D, C, C], WC),
    ]
};
