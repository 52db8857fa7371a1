//! Statistical models: generators, forward models and loss oracles.

mod generate;
mod loss;
mod rip;

pub use generate::*;
pub use loss::*;
pub use rip::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVector, Mat, Vector};
use crate::point::FactorPoint;
use crate::serial::{dense, dense_vec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    MatrixSensingSym,
    MatrixSensingAsym,
    PhaseRetrieval,
    QuadraticSensing,
    MatrixCompletionSym,
    MatrixCompletionAsym,
    BlindDeconv,
    RobustPca,
    PhaseSync,
    JointAlignment,
}

/// Rank-r ground truth in balanced form: L⋆ = UΣ^{1/2}, R⋆ = VΣ^{1/2}, M⋆ = L⋆R⋆ᵀ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankTruth {
    #[serde(with = "dense")]
    pub m_star: Mat,
    #[serde(with = "dense")]
    pub l: Mat,
    #[serde(with = "dense")]
    pub r: Mat,
    /// Singular values of M⋆, descending.
    pub sigma: Vec<f64>,
}

impl LowRankTruth {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }
    pub fn sigma_max(&self) -> f64 {
        self.sigma[0]
    }
    pub fn sigma_min(&self) -> f64 {
        self.sigma[self.sigma.len() - 1]
    }
}

/// y_i = ⟨A_i, M⋆⟩ + noise. Column i of `a` is vec(A_i), column-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingInstance {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub m: usize,
    pub symmetric: bool,
    pub noise: f64,
    pub seed: u64,
    pub truth: LowRankTruth,
    #[serde(with = "dense")]
    pub a: Mat,
    #[serde(with = "dense_vec")]
    pub y: Vector,
}

/// y_i = (a_iᵀx⋆)², rows of `a` are a_iᵀ. `outliers` lists corrupted indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrInstance {
    pub n: usize,
    pub m: usize,
    pub noise: f64,
    pub seed: u64,
    #[serde(with = "dense_vec")]
    pub x_star: Vector,
    #[serde(with = "dense")]
    pub a: Mat,
    #[serde(with = "dense_vec")]
    pub y: Vector,
    pub outliers: Vec<usize>,
}

/// y_i = ‖a_iᵀX⋆‖².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsInstance {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub seed: u64,
    pub truth: LowRankTruth,
    #[serde(with = "dense")]
    pub a: Mat,
    #[serde(with = "dense_vec")]
    pub y: Vector,
}

/// Entries of M⋆ observed on Ω (row-major sorted, distinct).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McInstance {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub p: f64,
    pub symmetric: bool,
    pub noise: f64,
    pub seed: u64,
    pub truth: LowRankTruth,
    pub omega: Vec<(usize, usize)>,
    pub obs: Vec<f64>,
}

/// y_j = b_jᴴh⋆·x⋆ᴴa_j. Row j of `b` is b_jᴴ, row j of `a` is a_jᴴ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdInstance {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub noise: f64,
    pub seed: u64,
    #[serde(with = "dense_vec")]
    pub h_star: CVector,
    #[serde(with = "dense_vec")]
    pub x_star: CVector,
    #[serde(with = "dense")]
    pub b: CMat,
    #[serde(with = "dense")]
    pub a: CMat,
    #[serde(with = "dense_vec")]
    pub y: CVector,
}

/// Γ⋆ = M⋆ + S⋆ observed on Ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcaInstance {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub p: f64,
    pub alpha: f64,
    pub magnitude: f64,
    pub symmetric: bool,
    pub seed: u64,
    pub truth: LowRankTruth,
    #[serde(with = "dense")]
    pub s_star: Mat,
    pub omega: Vec<(usize, usize)>,
    pub obs: Vec<f64>,
}

/// L = x⋆x⋆ᴴ + σW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsInstance {
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    #[serde(with = "dense_vec")]
    pub x_star: CVector,
    #[serde(with = "dense")]
    pub l: CMat,
}

/// y_ij = x_i − x_j + z_ij mod m for i < j, with lifted log-likelihood matrix `l`
/// indexed by (i·m + a, j·m + b).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaInstance {
    pub n: usize,
    pub alphabet: usize,
    pub flip_prob: f64,
    pub seed: u64,
    pub x_star: Vec<usize>,
    /// Upper-triangle pairs (i, j, y_ij), row-major.
    pub y: Vec<(usize, usize, usize)>,
    #[serde(with = "dense")]
    pub l: Mat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family_group", content = "data", rename_all = "snake_case")]
pub enum ProblemInstance {
    Sensing(SensingInstance),
    PhaseRetrieval(PrInstance),
    QuadraticSensing(QsInstance),
    Completion(McInstance),
    BlindDeconv(BdInstance),
    RobustPca(RpcaInstance),
    PhaseSync(PsInstance),
    JointAlignment(JaInstance),
}

impl ProblemInstance {
    pub fn family(&self) -> Family {
        match self {
            ProblemInstance::Sensing(s) if s.symmetric => Family::MatrixSensingSym,
            ProblemInstance::Sensing(_) => Family::MatrixSensingAsym,
            ProblemInstance::PhaseRetrieval(_) => Family::PhaseRetrieval,
            ProblemInstance::QuadraticSensing(_) => Family::QuadraticSensing,
            ProblemInstance::Completion(c) if c.symmetric => Family::MatrixCompletionSym,
            ProblemInstance::Completion(_) => Family::MatrixCompletionAsym,
            ProblemInstance::BlindDeconv(_) => Family::BlindDeconv,
            ProblemInstance::RobustPca(_) => Family::RobustPca,
            ProblemInstance::PhaseSync(_) => Family::PhaseSync,
            ProblemInstance::JointAlignment(_) => Family::JointAlignment,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ProblemInstance::Sensing(s) => s.seed,
            ProblemInstance::PhaseRetrieval(s) => s.seed,
            ProblemInstance::QuadraticSensing(s) => s.seed,
            ProblemInstance::Completion(s) => s.seed,
            ProblemInstance::BlindDeconv(s) => s.seed,
            ProblemInstance::RobustPca(s) => s.seed,
            ProblemInstance::PhaseSync(s) => s.seed,
            ProblemInstance::JointAlignment(s) => s.seed,
        }
    }

    /// The ground truth as a point of the family's parametrization.
    pub fn truth_point(&self) -> FactorPoint {
        match self {
            ProblemInstance::Sensing(s) if s.symmetric => FactorPoint::Sym(s.truth.l.clone()),
            ProblemInstance::Sensing(s) => FactorPoint::Asym { l: s.truth.l.clone(), r: s.truth.r.clone() },
            ProblemInstance::PhaseRetrieval(s) => FactorPoint::Vector(s.x_star.clone()),
            ProblemInstance::QuadraticSensing(s) => FactorPoint::Sym(s.truth.l.clone()),
            ProblemInstance::Completion(c) if c.symmetric => FactorPoint::Sym(c.truth.l.clone()),
            ProblemInstance::Completion(c) => FactorPoint::Asym { l: c.truth.l.clone(), r: c.truth.r.clone() },
            ProblemInstance::BlindDeconv(b) => FactorPoint::ComplexPair { h: b.h_star.clone(), x: b.x_star.clone() },
            ProblemInstance::RobustPca(c) if c.symmetric => FactorPoint::Sym(c.truth.l.clone()),
            ProblemInstance::RobustPca(c) => FactorPoint::Asym { l: c.truth.l.clone(), r: c.truth.r.clone() },
            ProblemInstance::PhaseSync(p) => FactorPoint::ComplexVector(p.x_star.clone()),
            ProblemInstance::JointAlignment(j) => FactorPoint::Vector(lift_labels(&j.x_star, j.alphabet)),
        }
    }

    /// Norm of the truth in the family's parametrization; success
    /// thresholds are relative to it.
    pub fn truth_scale(&self) -> f64 {
        self.truth_point().norm()
    }

    /// Family-appropriate distance from `point` to the truth.
    pub fn dist_to_truth(&self, point: &FactorPoint) -> Result<f64> {
        use crate::metrics::*;
        match (self, point) {
            (ProblemInstance::Sensing(s), FactorPoint::Sym(x)) if s.symmetric => dist_factors(x, &s.truth.l),
            (ProblemInstance::Sensing(s), FactorPoint::Asym { l, r }) if !s.symmetric => {
                dist_stacked(l, r, &s.truth.l, &s.truth.r)
            }
            (ProblemInstance::PhaseRetrieval(p), FactorPoint::Vector(x)) => Ok(dist_sign(x, &p.x_star)),
            (ProblemInstance::QuadraticSensing(q), FactorPoint::Sym(x)) => dist_factors(x, &q.truth.l),
            (ProblemInstance::Completion(c), FactorPoint::Sym(x)) if c.symmetric => dist_factors(x, &c.truth.l),
            (ProblemInstance::Completion(c), FactorPoint::Asym { l, r }) if !c.symmetric => {
                dist_stacked(l, r, &c.truth.l, &c.truth.r)
            }
            (ProblemInstance::BlindDeconv(b), FactorPoint::ComplexPair { h, x }) => dist_bd(h, x, &b.h_star, &b.x_star),
            (ProblemInstance::RobustPca(c), FactorPoint::Sym(x)) if c.symmetric => dist_factors(x, &c.truth.l),
            (ProblemInstance::RobustPca(c), FactorPoint::Asym { l, r }) if !c.symmetric => {
                dist_stacked(l, r, &c.truth.l, &c.truth.r)
            }
            (ProblemInstance::PhaseSync(p), FactorPoint::ComplexVector(x)) => Ok(dist_phase(x, &p.x_star)),
            (ProblemInstance::JointAlignment(j), FactorPoint::Vector(x)) => {
                let labels = unlift_labels(x, j.alphabet)?;
                Ok(if labels_equal_mod_shift(&labels, &j.x_star, j.alphabet) { 0.0 } else { 1.0 })
            }
            _ => Err(Error::Shape(format!("{} point for {:?}", point.kind(), self.family()))),
        }
    }

    /// Re-run the forward model on the stored truth and design. Noise and
    /// outliers are not part of the replay; the caller compares on clean instances.
    pub fn replay_observations(&self) -> Vec<f64> {
        match self {
            ProblemInstance::Sensing(s) => sensing_forward(&s.a, &s.truth.m_star).iter().copied().collect(),
            ProblemInstance::PhaseRetrieval(p) => pr_forward(&p.a, &p.x_star).iter().copied().collect(),
            ProblemInstance::QuadraticSensing(q) => qs_forward(&q.a, &q.truth.l).iter().copied().collect(),
            ProblemInstance::Completion(c) => c.omega.iter().map(|&(i, j)| c.truth.m_star[(i, j)]).collect(),
            ProblemInstance::BlindDeconv(b) => {
                bd_forward(&b.b, &b.a, &b.h_star, &b.x_star).iter().flat_map(|z| [z.re, z.im]).collect()
            }
            ProblemInstance::RobustPca(c) => {
                c.omega.iter().map(|&(i, j)| c.truth.m_star[(i, j)] + c.s_star[(i, j)]).collect()
            }
            ProblemInstance::PhaseSync(p) => {
                let n = p.n;
                let mut ll = CMat::zeros(n, n);
                for j in 0..n {
                    for i in 0..n {
                        ll[(i, j)] = p.x_star[i] * p.x_star[j].conj();
                    }
                }
                ll.iter().flat_map(|z| [z.re, z.im]).collect()
            }
            ProblemInstance::JointAlignment(j) => jointalign_matrix(j.n, j.alphabet, j.flip_prob, &j.y).iter().copied().collect(),
        }
    }

    /// Observations as stored, flattened the same way as `replay_observations`.
    pub fn stored_observations(&self) -> Vec<f64> {
        match self {
            ProblemInstance::Sensing(s) => s.y.iter().copied().collect(),
            ProblemInstance::PhaseRetrieval(p) => p.y.iter().copied().collect(),
            ProblemInstance::QuadraticSensing(q) => q.y.iter().copied().collect(),
            ProblemInstance::Completion(c) => c.obs.clone(),
            ProblemInstance::BlindDeconv(b) => b.y.iter().flat_map(|z| [z.re, z.im]).collect(),
            ProblemInstance::RobustPca(c) => c.obs.clone(),
            ProblemInstance::PhaseSync(p) => p.l.iter().flat_map(|z| [z.re, z.im]).collect(),
            ProblemInstance::JointAlignment(j) => j.l.iter().copied().collect(),
        }
    }
}

/// One-hot lifting of labels in {0..m-1}.
pub fn lift_labels(labels: &[usize], m: usize) -> Vector {
    let mut v = Vector::zeros(labels.len() * m);
    for (i, &a) in labels.iter().enumerate() {
        v[i * m + a] = 1.0;
    }
    v
}

pub fn unlift_labels(x: &Vector, m: usize) -> Result<Vec<usize>> {
    if m == 0 || x.len() % m != 0 {
        return Err(Error::Shape(format!("lifted length {} not a multiple of {m}", x.len())));
    }
    Ok((0..x.len() / m)
        .map(|i| {
            let mut best = 0;
            for a in 1..m {
                if x[i * m + a] > x[i * m + best] {
                    best = a;
                }
            }
            best
        })
        .collect())
}

pub fn labels_equal_mod_shift(a: &[usize], b: &[usize], m: usize) -> bool {
    if a.len() != b.len() || a.is_empty() {
        return a.len() == b.len();
    }
    let shift = (a[0] + m - b[0]) % m;
    a.iter().zip(b).all(|(&x, &y)| (y + shift) % m == x)
}
