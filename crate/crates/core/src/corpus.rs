//! Seeded corpora of smooth test functions for empirical Poincaré-type
//! constants.
//!
//! Members are evaluated in a local frame `y = (x - x0) / r`, so one corpus
//! serves every ball. Member 0 is constant, members 1 and 2 are linear, the
//! rest are random trigonometric polynomials with decaying amplitudes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point;

const MODES: usize = 6;
const MAX_WAVENUMBER: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothFunction {
    offset: f64,
    linear: [f64; 2],
    /// `(amplitude, kx, ky, phase)`
    modes: Vec<(f64, f64, f64, f64)>,
}

impl SmoothFunction {
    pub fn eval(&self, y: Point) -> f64 {
        let mut v = self.offset + self.linear[0] * y[0] + self.linear[1] * y[1];
        for &(a, kx, ky, ph) in &self.modes {
            v += a * (kx * y[0] + ky * y[1] + ph).sin();
        }
        v
    }

    pub fn gradient(&self, y: Point) -> [f64; 2] {
        let mut g = self.linear;
        for &(a, kx, ky, ph) in &self.modes {
            let c = a * (kx * y[0] + ky * y[1] + ph).cos();
            g[0] += c * kx;
            g[1] += c * ky;
        }
        g
    }

    /// `u · (1 - |y|²)₊`, vanishing outside the unit ball.
    pub fn bubble(&self, y: Point) -> f64 {
        let b = 1.0 - y[0] * y[0] - y[1] * y[1];
        if b <= 0.0 {
            0.0
        } else {
            self.eval(y) * b
        }
    }

    /// Strictly positive companion `exp(u)`.
    pub fn positive(&self, y: Point) -> f64 {
        self.eval(y).exp()
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    fields: Vec<SmoothFunction>,
}

impl Corpus {
    pub fn new(seed: u64, size: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fields = Vec::with_capacity(size);
        for idx in 0..size {
            let f = match idx {
                0 => SmoothFunction { offset: 1.0, linear: [0.0, 0.0], modes: Vec::new() },
                1 => SmoothFunction { offset: 0.5, linear: [1.0, 0.0], modes: Vec::new() },
                2 => SmoothFunction { offset: -0.25, linear: [0.3, -0.8], modes: Vec::new() },
                _ => random_function(&mut rng),
            };
            fields.push(f);
        }
        Corpus { fields }
    }

    pub fn fields(&self) -> &[SmoothFunction] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

fn random_function(rng: &mut ChaCha8Rng) -> SmoothFunction {
    let offset = rng.gen_range(-1.0..1.0);
    let linear = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let modes = (0..MODES)
        .map(|_| {
            let kx = rng.gen_range(-MAX_WAVENUMBER..MAX_WAVENUMBER);
            let ky = rng.gen_range(-MAX_WAVENUMBER..MAX_WAVENUMBER);
            let amp = rng.gen_range(-1.0..1.0) / (1.0 + kx * kx + ky * ky);
            (amp, kx, ky, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    SmoothFunction { offset, linear, modes }
}
