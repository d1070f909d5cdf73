//! Small dense helpers over nalgebra's decompositions.
//!
//! Singular value decompositions use one-sided Jacobi rotations rather than
//! nalgebra's bidiagonal QR, which returns inaccurate factors for some of the
//! structured interpolation matrices built here.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

const EIGEN_MAX_ITER: usize = 10_000;
const JACOBI_MAX_SWEEPS: usize = 80;

pub(crate) fn symmetric_eigen(h: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(h.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNonConvergence)
}

/// Spectral norm of a symmetric matrix, `max |λᵢ|`.
pub fn spectral_norm(h: &DMatrix<f64>) -> Result<f64> {
    if h.is_empty() {
        return Ok(0.0);
    }
    Ok(symmetric_eigen(h)?.eigenvalues.amax())
}

/// Smallest eigenvalue of a symmetric matrix and a unit eigenvector for it.
///
/// The pair satisfies `‖Hv - λv‖ ≤ 1e-10 · max(1, ‖H‖)`.
pub fn smallest_eigenpair(h: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let eig = symmetric_eigen(h)?;
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        })?;
    let v = eig.eigenvectors.column(idx).normalize();
    let residual = (h * &v - &v * lambda).norm();
    if residual > 1e-10 * eig.eigenvalues.amax().max(1.0) {
        return Err(Error::EigenNonConvergence);
    }
    Ok((lambda, v))
}

/// Orthogonalizes the columns of `w` (at least as many rows as columns) by
/// one-sided Jacobi rotations, accumulating them into `v` when given.
fn jacobi_sweeps(w: &mut DMatrix<f64>, mut v: Option<&mut DMatrix<f64>>) -> Result<()> {
    let (rows, cols) = w.shape();
    let tol = f64::EPSILON * rows as f64;
    // Columns below this squared norm are treated as zero.
    let negligible = {
        let scale = f64::EPSILON * w.norm();
        scale * scale
    };
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        let mut sq: Vec<f64> = (0..cols).map(|j| w.column(j).norm_squared()).collect();
        for p in 0..cols {
            for q in p + 1..cols {
                let (alpha, beta) = (sq[p], sq[q]);
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = w.column(p).dot(&w.column(q));
                if gamma.abs() <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(w.as_mut_slice(), rows, p, q, c, s);
                if let Some(v) = v.as_deref_mut() {
                    rotate(v.as_mut_slice(), cols, p, q, c, s);
                }
                sq[p] = alpha - t * gamma;
                sq[q] = beta + t * gamma;
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::SvdNonConvergence)
}

/// Rotates columns `p < q` of column-major storage with `rows` rows.
fn rotate(data: &mut [f64], rows: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = data.split_at_mut(q * rows);
    let x = &mut head[p * rows..(p + 1) * rows];
    let y = &mut tail[..rows];
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*xi, *yi);
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Normalizes the columns of `w` in place, replacing those with zero norm by
/// an orthonormal completion of the others.
fn normalize_columns(w: &mut DMatrix<f64>, sigma: &[f64]) {
    let (rows, cols) = w.shape();
    let floor = sigma.iter().fold(0.0f64, |a, &b| a.max(b)) * f64::EPSILON * rows.max(cols) as f64;
    let mut zero = Vec::new();
    for (j, &s) in sigma.iter().enumerate() {
        if s > floor && s > 0.0 {
            let col = w.column(j) / s;
            w.set_column(j, &col);
        } else {
            zero.push(j);
        }
    }
    let mut accepted: Vec<usize> = (0..cols).filter(|j| !zero.contains(j)).collect();
    for j in zero {
        // The unit vector with the largest component outside the accepted
        // span, orthogonalized twice.
        let residual = |k: usize| {
            let mut e = DVector::zeros(rows);
            e[k] = 1.0;
            for _ in 0..2 {
                for &a in &accepted {
                    let proj = w.column(a).dot(&e);
                    e -= w.column(a) * proj;
                }
            }
            e
        };
        let best = (0..rows)
            .map(residual)
            .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
            .expect("at least one row");
        let norm = best.norm();
        w.set_column(j, &(best / norm));
        accepted.push(j);
    }
}

/// Thin SVD of a matrix with at least as many rows as columns, singular
/// values in decreasing order.
///
/// With `A = QR`, the rotations `V₁` run on `Rᵀ`, giving `Rᵀ V₁ = W Σ` with
/// orthonormal `W`, hence `A = (Q V₁) Σ Wᵀ`.
fn tall_svd(m: &DMatrix<f64>, vectors: bool) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let cols = m.ncols();
    let qr = m.clone().qr();
    let mut w = qr.r().transpose();
    let mut v1 = DMatrix::identity(cols, cols);
    jacobi_sweeps(&mut w, vectors.then_some(&mut v1))?;
    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let singular_values = DVector::from_vec(sigma.clone());
    if !vectors {
        return Ok((DMatrix::zeros(0, 0), singular_values, DMatrix::zeros(0, 0)));
    }
    let mut right = w.select_columns(order.iter());
    normalize_columns(&mut right, &sigma);
    let u = qr.q() * v1.select_columns(order.iter());
    Ok((u, singular_values, right.transpose()))
}

fn decompose(m: &DMatrix<f64>, vectors: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::SvdNonConvergence);
    }
    let (u, singular_values, v_t) = if m.nrows() >= m.ncols() {
        tall_svd(m, vectors)?
    } else {
        let (u, s, v_t) = tall_svd(&m.transpose(), vectors)?;
        (v_t.transpose(), s, u.transpose())
    };
    Ok(SVD {
        u: vectors.then_some(u),
        v_t: vectors.then_some(v_t),
        singular_values,
    })
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    decompose(m, false).map(|svd| svd.singular_values)
}

/// `σ_max / σ_min` over the `min(rows, cols)` singular values; `+∞` when the
/// smallest one vanishes to working precision.
pub fn condition_number(m: &DMatrix<f64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(f64::INFINITY);
    }
    let s = singular_values(m)?;
    let max = s.max();
    let min = s.min();
    let floor = max * f64::EPSILON * (m.nrows().max(m.ncols()) as f64);
    if max == 0.0 || min <= floor {
        Ok(f64::INFINITY)
    } else {
        Ok(max / min)
    }
}

/// Thin SVD with both factors and singular values in decreasing order; the
/// left factor is orthonormal even where singular values vanish.
pub fn svd(m: &DMatrix<f64>) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    decompose(m, true)
}

/// Condition number read off an existing decomposition.
pub(crate) fn svd_condition(svd: &SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, rows: usize, cols: usize) -> f64 {
    let s = &svd.singular_values;
    if s.is_empty() {
        return f64::INFINITY;
    }
    let max = s.max();
    let min = s.min();
    if max == 0.0 || min <= max * f64::EPSILON * (rows.max(cols) as f64) {
        f64::INFINITY
    } else {
        max / min
    }
}
