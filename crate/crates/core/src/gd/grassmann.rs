use super::*;
use crate::linalg::{is_orthonormal, svd};

fn columns_of(c: &McInstance) -> Vec<Vec<(usize, f64)>> {
    let mut cols = vec![Vec::new(); c.n2];
    for (&(i, j), &o) in c.omega.iter().zip(&c.obs) {
        cols[j].push((i, o));
    }
    cols
}

/// R̂ = argmin_R ‖P_Ω(M − LRᵀ)‖_F², solved column by column.
pub fn grassmann_lsq(c: &McInstance, l: &Mat) -> Result<Mat> {
    let r = l.ncols();
    let mut rhat = Mat::zeros(c.n2, r);
    for (j, entries) in columns_of(c).iter().enumerate() {
        let mut g = Mat::zeros(r, r);
        let mut b = Vector::zeros(r);
        for &(i, o) in entries {
            let li = l.row(i).transpose();
            g += &li * li.transpose();
            b += li * o;
        }
        let chol = g.cholesky().ok_or_else(|| Error::Singular(format!("least squares for column {j} is rank deficient")))?;
        rhat.row_mut(j).copy_from(&chol.solve(&b).transpose());
    }
    Ok(rhat)
}

/// (∇_G F(L), R̂) with ∇F = −2P_Ω(M − LR̂ᵀ)R̂ and ∇_G F = (I − LLᵀ)∇F.
pub fn grassmann_gradient(c: &McInstance, l: &Mat) -> Result<(Mat, Mat)> {
    let rhat = grassmann_lsq(c, l)?;
    let lt = l.transpose();
    let rt = rhat.transpose();
    let mut g = Mat::zeros(c.n1, l.ncols());
    for (&(i, j), &o) in c.omega.iter().zip(&c.obs) {
        let res = o - lt.column(i).dot(&rt.column(j));
        let mut gi = g.row_mut(i);
        gi -= rhat.row(j) * (2.0 * res);
    }
    let proj = &g - l * (l.transpose() * &g);
    Ok((proj, rhat))
}

fn completion(inst: &ProblemInstance) -> Result<&McInstance> {
    match inst {
        ProblemInstance::Completion(c) => Ok(c),
        _ => Err(Error::Family("Grassmann descent is defined for matrix completion".into())),
    }
}

fn check_orthonormal(l: &Mat) -> Result<()> {
    if !is_orthonormal(l, 1e-8) {
        return invalid("Grassmann iterate must have orthonormal columns");
    }
    Ok(())
}

/// L(η) = [L·V·cos(Ση) + U·sin(Ση)]·Vᵀ for −∇_G F = UΣVᵀ.
pub fn grassmann_step(inst: &ProblemInstance, l: &Mat, eta: f64) -> Result<Mat> {
    let c = completion(inst)?;
    check_orthonormal(l)?;
    let (g, _) = grassmann_gradient(c, l)?;
    let d = svd(&(-g));
    let r = l.ncols();
    let cos = Mat::from_diagonal(&Vector::from_iterator(r, d.s.iter().map(|s| (s * eta).cos())));
    let sin = Mat::from_diagonal(&Vector::from_iterator(r, d.s.iter().map(|s| (s * eta).sin())));
    Ok((l * &d.v * cos + &d.u * sin) * d.v.transpose())
}

/// Rank-1 form: cos(ση)L − sin(ση)·∇_G F/σ with σ = ‖∇_G F‖.
pub fn grassmann_step_rank1(inst: &ProblemInstance, l: &Mat, eta: f64) -> Result<Mat> {
    let c = completion(inst)?;
    if l.ncols() != 1 {
        return invalid("rank-1 Grassmann step needs a single column");
    }
    check_orthonormal(l)?;
    let (g, _) = grassmann_gradient(c, l)?;
    let sigma = g.norm();
    if sigma == 0.0 {
        return Ok(l.clone());
    }
    Ok(l * (sigma * eta).cos() - &g * ((sigma * eta).sin() / sigma))
}

/// Geodesic descent from an orthonormal L₀; the trace distance is ‖LR̂ᵀ − M⋆‖_F.
pub fn run_grassmann(inst: &ProblemInstance, l0: &Mat, eta: f64, max_iters: usize, tol: f64) -> Result<(Mat, Mat, Trace)> {
    let c = completion(inst)?;
    let mut l = l0.clone();
    let mut trace = Trace::new(false);
    for t in 0..=max_iters {
        let (g, rhat) = grassmann_gradient(c, &l)?;
        let fit = &l * rhat.transpose();
        let loss: f64 = c.omega.iter().zip(&c.obs).map(|(&(i, j), &o)| (o - fit[(i, j)]).powi(2)).sum();
        let dist = (&fit - &c.truth.m_star).norm();
        trace.push(t, loss, g.norm(), dist, 0.0);
        if dist <= tol || t == max_iters {
            trace.outcome = if dist <= tol { Outcome::Converged } else { Outcome::MaxIters };
            return Ok((l, rhat, trace));
        }
        l = grassmann_step(inst, &l, eta)?;
    }
    unreachable!()
}
