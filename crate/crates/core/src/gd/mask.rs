use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::Vector;
use crate::problems::PrInstance;
use crate::spectral::lower_median;

/// Trimming thresholds (α_lb, α_ub, α_h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwfThresholds {
    pub alpha_lb: f64,
    pub alpha_ub: f64,
    pub alpha_h: f64,
}

impl Default for TwfThresholds {
    fn default() -> Self {
        TwfThresholds { alpha_lb: 0.3, alpha_ub: 5.0, alpha_h: 5.0 }
    }
}

impl TwfThresholds {
    pub fn keep_all() -> Self {
        TwfThresholds { alpha_lb: 0.0, alpha_ub: f64::INFINITY, alpha_h: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_lb >= 0.0) || !(self.alpha_ub > self.alpha_lb) || !(self.alpha_h > 0.0) {
            return invalid("need 0 <= alpha_lb < alpha_ub and alpha_h > 0");
        }
        Ok(())
    }
}

/// Keep i iff α_lb ≤ |a_iᵀx|/‖x‖ ≤ α_ub and
/// |y_i − (a_iᵀx)²| ≤ (α_h/m)·Σ_j|y_j − (a_jᵀx)²|·|a_iᵀx|/‖x‖.
pub fn twf_mask(p: &PrInstance, x: &Vector, th: &TwfThresholds) -> Vec<bool> {
    let nx = x.norm();
    let ax = &p.a * x;
    let res: Vec<f64> = ax.iter().zip(p.y.iter()).map(|(&v, &y)| (y - v * v).abs()).collect();
    let mean_res = res.iter().sum::<f64>() / p.m as f64;
    (0..p.m)
        .map(|i| {
            let ratio = if nx > 0.0 { ax[i].abs() / nx } else { 0.0 };
            let e1 = ratio >= th.alpha_lb && (th.alpha_ub.is_infinite() || ratio <= th.alpha_ub);
            let e2 = th.alpha_h.is_infinite() || res[i] <= th.alpha_h * mean_res * ratio;
            e1 && e2
        })
        .collect()
}

/// Keep i iff |r_i| ≤ factor·median_j|r_j| with r_i = (a_iᵀx)² − y_i.
pub fn median_mask(p: &PrInstance, x: &Vector, factor: f64) -> Vec<bool> {
    if factor.is_infinite() {
        return vec![true; p.m];
    }
    let ax = &p.a * x;
    let res: Vec<f64> = ax.iter().zip(p.y.iter()).map(|(&v, &y)| (v * v - y).abs()).collect();
    let med = lower_median(&res);
    res.iter().map(|&r| r <= factor * med).collect()
}
