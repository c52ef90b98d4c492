//! Symmetric divergence-form operators `Lu = -div(A ∇u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, Point};

/// Scalar coefficient field `a(x)`; the operator matrix is `a(x) I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScalarField {
    Constant(f64),
    Checkerboard { a: f64, b: f64, k: u32 },
    /// `base + slope * |x - center|`
    Radial { center: Point, base: f64, slope: f64 },
}

impl ScalarField {
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Checkerboard { a, b, k } => {
                let kf = *k as f64;
                let parity = ((p[0] * kf).floor() as i64 + (p[1] * kf).floor() as i64).rem_euclid(2);
                if parity == 0 {
                    *a
                } else {
                    *b
                }
            }
            ScalarField::Radial { center, base, slope } => base + slope * dist(p, *center),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Coefficient {
    Laplace,
    /// Constant symmetric matrix `[[a11, a12], [a12, a22]]`.
    Matrix { a11: f64, a12: f64, a22: f64 },
    Scalar(ScalarField),
}

/// Elliptic operator with ellipticity constant `alpha`:
/// `alpha |ξ|² <= ξ·A(x)ξ <= alpha⁻¹ |ξ|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticOperator {
    coefficient: Coefficient,
    alpha: f64,
}

/// Side of the sample lattice on the unit square used to check ellipticity
/// of variable coefficients.
const ELLIPTICITY_SAMPLES: usize = 65;

impl EllipticOperator {
    /// Validates the two-sided bound; exactly for constant and checkerboard
    /// coefficients, on a deterministic sample of the unit square otherwise.
    pub fn new(coefficient: Coefficient, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::NotElliptic(format!("alpha = {alpha} must lie in (0, 1]")));
        }
        let op = EllipticOperator { coefficient, alpha };
        let check = |(lo, hi): (f64, f64), at: Point| -> Result<()> {
            let slack = 1e-12;
            if !(lo.is_finite() && hi.is_finite()) || lo < alpha * (1.0 - slack) || hi > (1.0 + slack) / alpha {
                return Err(Error::NotElliptic(format!(
                    "eigenvalues [{lo}, {hi}] of A at {at:?} leave [{alpha}, {}]",
                    1.0 / alpha
                )));
            }
            Ok(())
        };
        match &op.coefficient {
            Coefficient::Laplace | Coefficient::Matrix { .. } | Coefficient::Scalar(ScalarField::Constant(_)) => {
                check(op.eigen_bounds([0.5, 0.5]), [0.5, 0.5])?
            }
            Coefficient::Scalar(ScalarField::Checkerboard { a, b, k }) => {
                if *k == 0 {
                    return Err(Error::InvalidInput("checkerboard coefficient needs k >= 1".into()));
                }
                check((a.min(*b), a.max(*b)), [0.5, 0.5])?
            }
            Coefficient::Scalar(ScalarField::Radial { .. }) => {
                let n = ELLIPTICITY_SAMPLES;
                for j in 0..n {
                    for i in 0..n {
                        let p = [i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64];
                        check(op.eigen_bounds(p), p)?;
                    }
                }
            }
        }
        Ok(op)
    }

    pub fn laplace() -> Self {
        EllipticOperator {
            coefficient: Coefficient::Laplace,
            alpha: 1.0,
        }
    }

    pub fn coefficient(&self) -> &Coefficient {
        &self.coefficient
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `A(x)` as `[a11, a12, a22]`.
    pub fn matrix_at(&self, p: Point) -> [f64; 3] {
        match &self.coefficient {
            Coefficient::Laplace => [1.0, 0.0, 1.0],
            Coefficient::Matrix { a11, a12, a22 } => [*a11, *a12, *a22],
            Coefficient::Scalar(f) => {
                let a = f.eval(p);
                [a, 0.0, a]
            }
        }
    }

    fn eigen_bounds(&self, p: Point) -> (f64, f64) {
        let [a, b, c] = self.matrix_at(p);
        let mean = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (mean - rad, mean + rad)
    }

    pub fn is_constant(&self) -> bool {
        matches!(
            self.coefficient,
            Coefficient::Laplace | Coefficient::Matrix { .. } | Coefficient::Scalar(ScalarField::Constant(_))
        )
    }

    /// `Some(a)` when `A ≡ a I`.
    pub fn isotropic_scale(&self) -> Option<f64> {
        match &self.coefficient {
            Coefficient::Laplace => Some(1.0),
            Coefficient::Matrix { a11, a12, a22 } if *a12 == 0.0 && a11 == a22 => Some(*a11),
            Coefficient::Scalar(ScalarField::Constant(a)) => Some(*a),
            _ => None,
        }
    }

    pub fn is_laplace(&self) -> bool {
        self.isotropic_scale() == Some(1.0)
    }

    /// Stable text identity, used as a memoization key and in hole files.
    pub fn fingerprint(&self) -> String {
        let c = match &self.coefficient {
            Coefficient::Laplace => "laplace".to_string(),
            Coefficient::Matrix { a11, a12, a22 } => format!("matrix({a11:e},{a12:e},{a22:e})"),
            Coefficient::Scalar(ScalarField::Constant(a)) => format!("scalar-constant({a:e})"),
            Coefficient::Scalar(ScalarField::Checkerboard { a, b, k }) => {
                format!("scalar-checkerboard({a:e},{b:e},{k})")
            }
            Coefficient::Scalar(ScalarField::Radial { center, base, slope }) => format!(
                "scalar-radial({:e},{:e},{base:e},{slope:e})",
                center[0], center[1]
            ),
        };
        format!("{c};alpha={:e}", self.alpha)
    }
}
