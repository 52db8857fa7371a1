use serde::{Deserialize, Serialize};

use super::*;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub r: usize,
    pub delta_hat: f64,
    pub trials: usize,
}

/// |‖A(T)‖² / ‖T‖² − 1| with A(T)_i = m^{-1/2}⟨A_i, T⟩.
pub fn rip_deviation(s: &SensingInstance, t: &Mat) -> f64 {
    let tn = t.as_slice().iter().map(|v| v * v).sum::<f64>();
    let at = sensing_forward(&s.a, t);
    let an = at.iter().map(|v| v * v).sum::<f64>() / s.m as f64;
    (an / tn - 1.0).abs()
}

/// Largest deviation over `trials` random rank-≤r test matrices
/// (symmetric ones for a symmetric design).
pub fn estimate_rip(inst: &ProblemInstance, r: usize, trials: usize, seed: u64) -> Result<RipEstimate> {
    let ProblemInstance::Sensing(s) = inst else {
        return Err(Error::Family("RIP estimate needs a matrix sensing instance".into()));
    };
    if r == 0 || r > s.n1.min(s.n2) {
        return crate::error::invalid(format!("rank {r} out of range"));
    }
    let mut rng = Rng::new(seed);
    let mut delta_hat = 0.0f64;
    for _ in 0..trials {
        let t = if s.symmetric {
            let g = rng.gaussian_matrix(s.n1, r);
            let d = Mat::from_diagonal(&rng.gaussian_vector(r));
            &g * d * g.transpose()
        } else {
            rng.gaussian_matrix(s.n1, r) * rng.gaussian_matrix(s.n2, r).transpose()
        };
        if t.norm() == 0.0 {
            continue;
        }
        delta_hat = delta_hat.max(rip_deviation(s, &t));
    }
    Ok(RipEstimate { r, delta_hat, trials })
}
