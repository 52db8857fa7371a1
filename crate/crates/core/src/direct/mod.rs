//! Non-gradient solvers: alternating minimization, error reduction,
//! singular value projection and the projected power method.

mod altmin;
mod ppm;
mod svp;

pub use altmin::*;
pub use ppm::*;
pub use svp::*;

use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};

/// Relative pivot size below which a least-squares system counts as rank deficient.
const RANK_TOL: f64 = 1e-12;

/// argmin_z ‖Gz − b‖ by Householder QR.
pub(crate) fn lstsq(g: &Mat, b: &Vector, what: &str) -> Result<Vector> {
    let (rows, cols) = g.shape();
    if rows < cols {
        return Err(Error::Singular(format!("{what}: {rows} equations for {cols} unknowns")));
    }
    let qr = g.clone().qr();
    let r = qr.r();
    let dmax = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if dmax == 0.0 || (0..cols).any(|i| r[(i, i)].abs() <= RANK_TOL * dmax) {
        return Err(Error::Singular(format!("{what} is rank deficient")));
    }
    let qtb = qr.q().tr_mul(b);
    r.solve_upper_triangular(&qtb).ok_or_else(|| Error::Singular(format!("{what}: triangular solve failed")))
}
