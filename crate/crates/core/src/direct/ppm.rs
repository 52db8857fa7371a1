use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gd::{Outcome, Trace};
use crate::linalg::{dense_eigen, spectral_norm, CMat, CVector, Vector};
use crate::point::FactorPoint;
use crate::problems::*;
use crate::spectral::{init_phase_sync, unit_phase};

/// Phase-sync iterations stop once ‖x_{t+1} − x_t‖ ≤ PPM_TOL·√n.
pub const PPM_TOL: f64 = 1e-14;

/// Per-block argmax onto a vertex of the simplex; ties go to the lowest index.
pub fn project_vertices(z: &Vector, m: usize) -> Result<Vector> {
    if m == 0 || z.len() % m != 0 {
        return Err(Error::Shape(format!("length {} not a multiple of {m}", z.len())));
    }
    let mut out = Vector::zeros(z.len());
    for i in 0..z.len() / m {
        let mut best = 0;
        for a in 1..m {
            if z[i * m + a] > z[i * m + best] {
                best = a;
            }
        }
        out[i * m + best] = 1.0;
    }
    Ok(out)
}

fn objective_ps(l: &CMat, x: &CVector) -> f64 {
    x.dotc(&(l * x)).re
}

/// x_{t+1} = P_C(ηLx_t). Trace: loss is −xᴴLx, grad_norm is ‖x_t − x_{t−1}‖.
pub fn ppm(inst: &ProblemInstance, x0: &FactorPoint, eta: f64, max_iters: usize) -> Result<(FactorPoint, Trace)> {
    if !(eta > 0.0 && eta.is_finite()) {
        return invalid("PPM step must be positive");
    }
    let mut trace = Trace::new(false);
    match (inst, x0) {
        (ProblemInstance::PhaseSync(p), FactorPoint::ComplexVector(x0)) => {
            if x0.len() != p.n {
                return Err(Error::Shape(format!("x0 has length {}, expected {}", x0.len(), p.n)));
            }
            let eta_c = Complex64::new(eta, 0.0);
            let mut x = x0.map(unit_phase);
            trace.push(0, -objective_ps(&p.l, &x), 0.0, dist_of(inst, &x)?, 0.0);
            for t in 1..=max_iters {
                let next = (&p.l * &x * eta_c).map(unit_phase);
                let step = (&next - &x).norm();
                x = next;
                trace.push(t, -objective_ps(&p.l, &x), step, dist_of(inst, &x)?, 0.0);
                if step <= PPM_TOL * (p.n as f64).sqrt() {
                    trace.outcome = Outcome::Converged;
                    return Ok((FactorPoint::ComplexVector(x), trace));
                }
            }
            trace.outcome = Outcome::MaxIters;
            Ok((FactorPoint::ComplexVector(x), trace))
        }
        (ProblemInstance::JointAlignment(j), FactorPoint::Vector(x0)) => {
            let m = j.alphabet;
            if x0.len() != j.n * m {
                return Err(Error::Shape(format!("x0 has length {}, expected {}", x0.len(), j.n * m)));
            }
            let mut x = project_vertices(x0, m)?;
            let pt = |x: &Vector| FactorPoint::Vector(x.clone());
            trace.push(0, -x.dot(&(&j.l * &x)), 0.0, inst.dist_to_truth(&pt(&x))?, 0.0);
            for t in 1..=max_iters {
                let next = project_vertices(&(&j.l * &x * eta), m)?;
                let step = (&next - &x).norm();
                x = next;
                trace.push(t, -x.dot(&(&j.l * &x)), step, inst.dist_to_truth(&pt(&x))?, 0.0);
                if step == 0.0 {
                    trace.outcome = Outcome::Converged;
                    return Ok((pt(&x), trace));
                }
            }
            trace.outcome = Outcome::MaxIters;
            Ok((pt(&x), trace))
        }
        _ => Err(Error::Family(format!("ppm needs phase sync or joint alignment, got {:?} with a {} point", inst.family(), x0.kind()))),
    }
}

fn dist_of(inst: &ProblemInstance, x: &CVector) -> Result<f64> {
    inst.dist_to_truth(&FactorPoint::ComplexVector(x.clone()))
}

/// Global-optimality check for max xᴴLx over |x_i| = 1: x is optimal when
/// diag(Re(x̄ ∘ Lx)) − L is positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsCertificate {
    pub min_eig: f64,
    pub certified: bool,
}

pub fn certify_phase_sync(inst: &ProblemInstance, x: &CVector) -> Result<PsCertificate> {
    let ProblemInstance::PhaseSync(p) = inst else {
        return Err(Error::Family("certificate is defined for phase sync".into()));
    };
    if x.len() != p.n {
        return Err(Error::Shape(format!("x has length {}, expected {}", x.len(), p.n)));
    }
    let lx = &p.l * x;
    let mut s = -p.l.clone();
    for i in 0..p.n {
        s[(i, i)] += Complex64::new((x[i].conj() * lx[i]).re, 0.0);
    }
    let (vals, _) = dense_eigen(&s);
    let min_eig = *vals.last().unwrap_or(&0.0);
    let tol = 1e-9 * spectral_norm(&p.l).max(1.0);
    Ok(PsCertificate { min_eig, certified: min_eig >= -tol })
}

/// Spectral start, PPM from it for `max_iters`, then the certificate.
pub fn phase_sync_mle(inst: &ProblemInstance, max_iters: usize) -> Result<(CVector, PsCertificate)> {
    let x0 = init_phase_sync(inst)?;
    let (x, _) = ppm(inst, &x0, 1.0, max_iters)?;
    let FactorPoint::ComplexVector(x) = x else { unreachable!() };
    let cert = certify_phase_sync(inst, &x)?;
    Ok((x, cert))
}

/// ‖x − x⋆‖/‖x⋆‖ after the best global phase.
pub fn aligned_phase_error(x: &CVector, xstar: &CVector) -> f64 {
    crate::metrics::dist_phase(x, xstar) / xstar.norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_ties_go_low() {
        let z = Vector::from_vec(vec![1.0, 1.0, 0.0, -1.0, 2.0, 2.0]);
        let v = project_vertices(&z, 3).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_entry_maps_to_one() {
        assert_eq!(unit_phase(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
    }
}
