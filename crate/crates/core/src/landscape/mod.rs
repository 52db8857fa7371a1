//! Critical points of small dense objectives, strict-saddle checks and
//! second-order or perturbed methods that escape saddles.

mod escape;
mod experiments;
mod rank1;

pub use escape::*;
pub use experiments::*;
pub use rank1::*;

use serde::{Deserialize, Serialize};

use crate::linalg::{Mat, Vector};
use crate::metrics::dist_sign;
use crate::point::FactorPoint;
use crate::problems::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianSource {
    Analytic,
    FiniteDifference,
}

/// Smooth objective on ℝⁿ with gradient and Hessian oracles.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> Mat {
        fd_hessian(|v| self.gradient(v), x)
    }
    fn hessian_source(&self) -> HessianSource {
        HessianSource::FiniteDifference
    }
    /// Distance to the solution set when it is known, NaN otherwise.
    fn dist(&self, _x: &Vector) -> f64 {
        f64::NAN
    }
}

/// Symmetrized central differences of a gradient map.
pub fn fd_hessian(grad: impl Fn(&Vector) -> Vector, x: &Vector) -> Mat {
    let n = x.len();
    let h = 1e-5 * x.norm().max(1.0);
    let mut out = Mat::zeros(n, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        out.set_column(j, &((grad(&xp) - grad(&xm)) / (2.0 * h)));
    }
    (&out + out.transpose()) * 0.5
}

/// f(x) = ¼‖xxᵀ − M‖_F².
#[derive(Debug, Clone)]
pub struct Rank1Mf {
    pub m: Mat,
    /// √λ₁u₁, used for `dist`.
    pub x_star: Option<Vector>,
}

impl Rank1Mf {
    pub fn new(m: Mat) -> Self {
        let (vals, vecs) = crate::linalg::dense_eigen(&m);
        let x_star = (vals[0] > 0.0).then(|| vecs.column(0) * vals[0].sqrt());
        Rank1Mf { m, x_star }
    }
}

impl Objective for Rank1Mf {
    fn dim(&self) -> usize {
        self.m.nrows()
    }
    fn value(&self, x: &Vector) -> f64 {
        0.25 * (x * x.transpose() - &self.m).norm_squared()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        rank1_gradient(&self.m, x)
    }
    fn hessian(&self, x: &Vector) -> Mat {
        rank1_hessian(&self.m, x)
    }
    fn hessian_source(&self) -> HessianSource {
        HessianSource::Analytic
    }
    fn dist(&self, x: &Vector) -> f64 {
        self.x_star.as_ref().map_or(f64::NAN, |s| dist_sign(x, s))
    }
}

/// Intensity loss of a phase-retrieval instance, with its analytic Hessian
/// (1/m)Σ(3(a_iᵀx)² − y_i)a_ia_iᵀ.
#[derive(Debug, Clone, Copy)]
pub struct PrObjective<'a> {
    pub inst: &'a ProblemInstance,
}

impl<'a> PrObjective<'a> {
    pub fn new(inst: &'a ProblemInstance) -> crate::Result<Self> {
        match inst {
            ProblemInstance::PhaseRetrieval(_) => Ok(PrObjective { inst }),
            _ => Err(crate::Error::Family("PrObjective needs a phase retrieval instance".into())),
        }
    }
    fn pr(&self) -> &PrInstance {
        match self.inst {
            ProblemInstance::PhaseRetrieval(p) => p,
            _ => unreachable!(),
        }
    }
    fn eval(&self, x: &Vector) -> LossEval {
        loss_and_grad(self.inst, &FactorPoint::Vector(x.clone()), &LossSpec::plain()).expect("checked in new")
    }
}

impl Objective for PrObjective<'_> {
    fn dim(&self) -> usize {
        self.pr().n
    }
    fn value(&self, x: &Vector) -> f64 {
        self.eval(x).loss
    }
    fn gradient(&self, x: &Vector) -> Vector {
        match self.eval(x).grad {
            FactorPoint::Vector(g) => g,
            _ => unreachable!(),
        }
    }
    fn hessian(&self, x: &Vector) -> Mat {
        let p = self.pr();
        let ax = &p.a * x;
        let mut w = p.a.clone();
        for i in 0..p.m {
            let c = 3.0 * ax[i] * ax[i] - p.y[i];
            w.row_mut(i).scale_mut(c);
        }
        p.a.tr_mul(&w) / p.m as f64
    }
    fn hessian_source(&self) -> HessianSource {
        HessianSource::Analytic
    }
    fn dist(&self, x: &Vector) -> f64 {
        dist_sign(x, &self.pr().x_star)
    }
}

/// Rank-one symmetric sensing f(x) = (1/4m)Σ(xᵀA_ix − y_i)², Hessian
/// (1/m)Σ[(xᵀA_ix − y_i)A_i + 2A_ixxᵀA_i].
#[derive(Debug, Clone)]
pub struct SensingRank1<'a> {
    s: &'a SensingInstance,
    mats: Vec<Mat>,
    x_star: Option<Vector>,
}

impl<'a> SensingRank1<'a> {
    pub fn new(inst: &'a ProblemInstance) -> crate::Result<Self> {
        match inst {
            ProblemInstance::Sensing(s) if s.symmetric => {
                let mats = (0..s.m).map(|i| s.sensing_matrix(i)).collect();
                let x_star = (s.truth.l.ncols() == 1).then(|| s.truth.l.column(0).into_owned());
                Ok(SensingRank1 { s, mats, x_star })
            }
            _ => Err(crate::Error::Family("SensingRank1 needs a symmetric matrix sensing instance".into())),
        }
    }
    fn residuals(&self, x: &Vector) -> (Vec<Vector>, Vector) {
        let ax: Vec<Vector> = self.mats.iter().map(|a| a * x).collect();
        let r = Vector::from_iterator(self.s.m, ax.iter().zip(self.s.y.iter()).map(|(v, &y)| x.dot(v) - y));
        (ax, r)
    }
}

impl Objective for SensingRank1<'_> {
    fn dim(&self) -> usize {
        self.s.n1
    }
    fn value(&self, x: &Vector) -> f64 {
        let (_, r) = self.residuals(x);
        r.norm_squared() / (4.0 * self.s.m as f64)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let (ax, r) = self.residuals(x);
        let mut g = Vector::zeros(x.len());
        for (v, &ri) in ax.iter().zip(r.iter()) {
            g += v * ri;
        }
        g / self.s.m as f64
    }
    fn hessian(&self, x: &Vector) -> Mat {
        let (ax, r) = self.residuals(x);
        let n = x.len();
        let mut h = Mat::zeros(n, n);
        for ((a, v), &ri) in self.mats.iter().zip(&ax).zip(r.iter()) {
            h += a * ri + v * v.transpose() * 2.0;
        }
        h / self.s.m as f64
    }
    fn hessian_source(&self) -> HessianSource {
        HessianSource::Analytic
    }
    fn dist(&self, x: &Vector) -> f64 {
        self.x_star.as_ref().map_or(f64::NAN, |s| dist_sign(x, s))
    }
}
