use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    MaxIters,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub dist: f64,
    pub incoh: f64,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub outcome: Outcome,
    /// Iterations at which a perturbation was injected (perturbed GD).
    pub events: Vec<usize>,
    #[serde(skip)]
    start: Option<Instant>,
}

pub const TRACE_HEADER: &str = "iter,loss,grad_norm,dist,incoh,ms";

impl Trace {
    pub fn new(timing: bool) -> Self {
        Trace { rows: Vec::new(), outcome: Outcome::MaxIters, events: Vec::new(), start: timing.then(Instant::now) }
    }

    pub fn push(&mut self, iter: usize, loss: f64, grad_norm: f64, dist: f64, incoh: f64) {
        let ms = self.start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
        self.rows.push(TraceRow { iter, loss, grad_norm, dist, incoh, ms });
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_dist(&self) -> f64 {
        self.rows.last().map_or(f64::INFINITY, |r| r.dist)
    }

    pub fn iters(&self) -> usize {
        self.rows.last().map_or(0, |r| r.iter)
    }

    /// First iteration with dist ≤ `tol`.
    pub fn first_below(&self, tol: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.dist <= tol).map(|r| r.iter)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{},{}", r.iter, r.loss, r.grad_norm, r.dist, r.incoh, r.ms)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }

    /// Least-squares slope of ln(dist) against iteration over the last half of
    /// rows with positive distance. None with fewer than 3 usable rows.
    pub fn log_dist_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.rows[self.rows.len() / 2..]
            .iter()
            .filter(|r| r.dist > 0.0 && r.dist.is_finite())
            .map(|r| (r.iter as f64, r.dist.ln()))
            .collect();
        fit_slope(&pts)
    }
}

pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
