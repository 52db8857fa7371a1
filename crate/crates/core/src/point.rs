use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVector, Mat, Vector};

/// Iterate of a factored solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FactorPoint {
    Sym(Mat),
    Asym { l: Mat, r: Mat },
    Vector(Vector),
    ComplexPair { h: CVector, x: CVector },
    /// Phase synchronization iterate.
    ComplexVector(CVector),
}

impl FactorPoint {
    pub fn kind(&self) -> &'static str {
        match self {
            FactorPoint::Sym(_) => "sym",
            FactorPoint::Asym { .. } => "asym",
            FactorPoint::Vector(_) => "vector",
            FactorPoint::ComplexPair { .. } => "complex_pair",
            FactorPoint::ComplexVector(_) => "complex_vector",
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, FactorPoint::ComplexPair { .. } | FactorPoint::ComplexVector(_))
    }

    pub fn shape_matches(&self, other: &FactorPoint) -> bool {
        match (self, other) {
            (FactorPoint::Sym(a), FactorPoint::Sym(b)) => a.shape() == b.shape(),
            (FactorPoint::Asym { l, r }, FactorPoint::Asym { l: l2, r: r2 }) => {
                l.shape() == l2.shape() && r.shape() == r2.shape()
            }
            (FactorPoint::Vector(a), FactorPoint::Vector(b)) => a.len() == b.len(),
            (FactorPoint::ComplexPair { h, x }, FactorPoint::ComplexPair { h: h2, x: x2 }) => {
                h.len() == h2.len() && x.len() == x2.len()
            }
            (FactorPoint::ComplexVector(a), FactorPoint::ComplexVector(b)) => a.len() == b.len(),
            _ => false,
        }
    }

    pub fn zeros_like(&self) -> FactorPoint {
        match self {
            FactorPoint::Sym(a) => FactorPoint::Sym(Mat::zeros(a.nrows(), a.ncols())),
            FactorPoint::Asym { l, r } => FactorPoint::Asym {
                l: Mat::zeros(l.nrows(), l.ncols()),
                r: Mat::zeros(r.nrows(), r.ncols()),
            },
            FactorPoint::Vector(v) => FactorPoint::Vector(Vector::zeros(v.len())),
            FactorPoint::ComplexPair { h, x } => FactorPoint::ComplexPair {
                h: CVector::zeros(h.len()),
                x: CVector::zeros(x.len()),
            },
            FactorPoint::ComplexVector(v) => FactorPoint::ComplexVector(CVector::zeros(v.len())),
        }
    }

    /// self += alpha * other
    pub fn axpy(&mut self, alpha: f64, other: &FactorPoint) -> Result<()> {
        if !self.shape_matches(other) {
            return Err(Error::Shape(format!("{} vs {}", self.kind(), other.kind())));
        }
        match (self, other) {
            (FactorPoint::Sym(a), FactorPoint::Sym(b)) => *a += b * alpha,
            (FactorPoint::Asym { l, r }, FactorPoint::Asym { l: l2, r: r2 }) => {
                *l += l2 * alpha;
                *r += r2 * alpha;
            }
            (FactorPoint::Vector(a), FactorPoint::Vector(b)) => *a += b * alpha,
            (FactorPoint::ComplexPair { h, x }, FactorPoint::ComplexPair { h: h2, x: x2 }) => {
                let c = Complex64::new(alpha, 0.0);
                *h += h2 * c;
                *x += x2 * c;
            }
            (FactorPoint::ComplexVector(a), FactorPoint::ComplexVector(b)) => *a += b * Complex64::new(alpha, 0.0),
            _ => unreachable!(),
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> FactorPoint {
        let mut z = self.zeros_like();
        z.axpy(alpha, self).expect("same shape");
        z
    }

    /// Real inner product Re Σ conj(a)·b over all blocks.
    pub fn real_inner(&self, other: &FactorPoint) -> Result<f64> {
        if !self.shape_matches(other) {
            return Err(Error::Shape(format!("{} vs {}", self.kind(), other.kind())));
        }
        Ok(match (self, other) {
            (FactorPoint::Sym(a), FactorPoint::Sym(b)) => a.dot(b),
            (FactorPoint::Asym { l, r }, FactorPoint::Asym { l: l2, r: r2 }) => l.dot(l2) + r.dot(r2),
            (FactorPoint::Vector(a), FactorPoint::Vector(b)) => a.dot(b),
            (FactorPoint::ComplexPair { h, x }, FactorPoint::ComplexPair { h: h2, x: x2 }) => {
                h.dotc(h2).re + x.dotc(x2).re
            }
            (FactorPoint::ComplexVector(a), FactorPoint::ComplexVector(b)) => a.dotc(b).re,
            _ => unreachable!(),
        })
    }

    pub fn norm(&self) -> f64 {
        self.real_inner(self).expect("same shape").max(0.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        match self {
            FactorPoint::Sym(a) => a.iter().all(|v| v.is_finite()),
            FactorPoint::Asym { l, r } => l.iter().chain(r.iter()).all(|v| v.is_finite()),
            FactorPoint::Vector(a) => a.iter().all(|v| v.is_finite()),
            FactorPoint::ComplexPair { h, x } => h.iter().chain(x.iter()).all(|v| v.re.is_finite() && v.im.is_finite()),
            FactorPoint::ComplexVector(a) => a.iter().all(|v| v.re.is_finite() && v.im.is_finite()),
        }
    }

    pub fn as_sym(&self) -> Option<&Mat> {
        match self {
            FactorPoint::Sym(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&Vector> {
        match self {
            FactorPoint::Vector(a) => Some(a),
            _ => None,
        }
    }
}
