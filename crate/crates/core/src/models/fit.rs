use nalgebra::{DMatrix, DVector};

use super::basis::{interpolation_matrix, Degree, MonomialBasis, SampleSet};
use crate::error::{Error, Result};
use crate::l1::{solve_traced, AdmmSettings, BasisPursuitProblem};
use crate::linalg::{condition_number, svd, svd_condition};
use crate::model::QuadraticModel;

/// Systems with a larger condition number are treated as not poised.
pub const POISEDNESS_LIMIT: f64 = 1e12;
/// Relative residual tolerance for interpolation and MFN models.
pub const INTERPOLATION_RESIDUAL: f64 = 1e-8;
/// Relative residual tolerance for ℓ1 models.
pub const SPARSE_RESIDUAL: f64 = 1e-6;

/// A fitted model together with its basis coefficients.
///
/// `alpha` is expressed in the scaled variables `(y - center) / radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub model: QuadraticModel,
    pub alpha: DVector<f64>,
    /// Condition number of the scaled interpolation matrix.
    pub condition: f64,
}

/// Converts scaled coefficients into a model about `set.center`.
pub fn model_from_coefficients(
    basis: &MonomialBasis,
    alpha: &DVector<f64>,
    center: &DVector<f64>,
    radius: f64,
) -> QuadraticModel {
    let n = basis.dim();
    let g = DVector::from_fn(n, |i, _| alpha[1 + i] / radius);
    let mut h = DMatrix::zeros(n, n);
    let r2 = radius * radius;
    for (k, (i, j)) in basis.quadratic_pairs().enumerate() {
        let v = alpha[n + 1 + k] / r2;
        h[(i, j)] = v;
        h[(j, i)] = v;
    }
    QuadraticModel::new(center.clone(), alpha[0], g, h)
}

fn check_values(set: &SampleSet, values: &[f64]) -> Result<DVector<f64>> {
    if values.len() != set.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            found: values.len(),
        });
    }
    Ok(DVector::from_column_slice(values))
}

fn check_residual(m: &DMatrix<f64>, alpha: &DVector<f64>, f: &DVector<f64>, rel: f64) -> Result<()> {
    let residual = (m * alpha - f).amax();
    let tolerance = rel * f.amax().max(1.0);
    if residual <= tolerance {
        Ok(())
    } else {
        Err(Error::Residual {
            residual,
            tolerance,
        })
    }
}

/// Pins the model constant to the sampled value at the center when the
/// interpolation conditions force it.
fn finish(basis: &MonomialBasis, set: &SampleSet, values: &[f64], alpha: DVector<f64>, condition: f64) -> Fit {
    let mut model = model_from_coefficients(basis, &alpha, &set.center, set.radius);
    if set.contains_center() {
        model = model.with_constant(values[0]);
    }
    Fit {
        model,
        alpha,
        condition,
    }
}

/// Unique interpolant on a square, poised system.
pub fn interpolate(set: &SampleSet, values: &[f64], basis: &MonomialBasis) -> Result<Fit> {
    let f = check_values(set, values)?;
    if set.len() != basis.len() {
        return Err(Error::SampleCount {
            what: "interpolation",
            points: set.len(),
            columns: basis.len(),
        });
    }
    let m = interpolation_matrix(basis, set, true)?;
    let dec = svd(&m)?;
    let condition = svd_condition(&dec, m.nrows(), m.ncols());
    if condition > POISEDNESS_LIMIT {
        return Err(Error::NotPoised { condition });
    }
    let alpha = dec.solve(&f, 0.0).map_err(|_| Error::NotPoised { condition })?;
    check_residual(&m, &alpha, &f, INTERPOLATION_RESIDUAL)?;
    Ok(finish(basis, set, values, alpha, condition))
}

/// Least-squares fit on an overdetermined, full-rank system.
///
/// The model constant is the fitted coefficient, which need not match the
/// sampled value at the center.
pub fn regress(set: &SampleSet, values: &[f64], basis: &MonomialBasis) -> Result<Fit> {
    let f = check_values(set, values)?;
    if set.len() <= basis.len() {
        return Err(Error::SampleCount {
            what: "regression",
            points: set.len(),
            columns: basis.len(),
        });
    }
    let m = interpolation_matrix(basis, set, true)?;
    let dec = svd(&m)?;
    let condition = svd_condition(&dec, m.nrows(), m.ncols());
    if condition > POISEDNESS_LIMIT {
        return Err(Error::NotPoised { condition });
    }
    let alpha = dec.solve(&f, 0.0).map_err(|_| Error::NotPoised { condition })?;
    let model = model_from_coefficients(basis, &alpha, &set.center, set.radius);
    Ok(Fit {
        model,
        alpha,
        condition,
    })
}

fn underdetermined_checks(set: &SampleSet, values: &[f64], what: &'static str) -> Result<(MonomialBasis, DVector<f64>)> {
    let basis = MonomialBasis::new(set.dim(), Degree::Quadratic);
    let f = check_values(set, values)?;
    if set.len() < basis.linear_len() || set.len() > basis.len() {
        return Err(Error::SampleCount {
            what,
            points: set.len(),
            columns: basis.len(),
        });
    }
    Ok((basis, f))
}

/// Quadratic interpolant minimizing `‖α_Q‖₂` subject to interpolation.
///
/// Solves the KKT system `[M_Q M_Qᵀ  M_L; M_Lᵀ  0] [λ; α_L] = [f; 0]` and sets
/// `α_Q = M_Qᵀ λ`.
pub fn mfn_model(set: &SampleSet, values: &[f64]) -> Result<Fit> {
    let (basis, f) = underdetermined_checks(set, values, "minimum-norm model")?;
    if set.len() == basis.len() {
        return interpolate(set, values, &basis);
    }
    let m = interpolation_matrix(&basis, set, true)?;
    let rows = m.nrows();
    let nl = basis.linear_len();
    let nq = basis.len() - nl;
    let ml = m.columns(0, nl);
    let mq = m.columns(nl, nq);

    let size = rows + nl;
    let mut kkt = DMatrix::zeros(size, size);
    kkt.view_mut((0, 0), (rows, rows)).copy_from(&(mq * mq.transpose()));
    kkt.view_mut((0, rows), (rows, nl)).copy_from(&ml);
    kkt.view_mut((rows, 0), (nl, rows)).copy_from(&ml.transpose());
    let mut rhs = DVector::zeros(size);
    rhs.rows_mut(0, rows).copy_from(&f);

    let dec = svd(&kkt)?;
    let kkt_condition = svd_condition(&dec, size, size);
    if kkt_condition > POISEDNESS_LIMIT {
        return Err(Error::NotPoised {
            condition: kkt_condition,
        });
    }
    let sol = dec.solve(&rhs, 0.0).map_err(|_| Error::NotPoised {
        condition: kkt_condition,
    })?;
    let lambda = sol.rows(0, rows);
    let mut alpha = DVector::zeros(basis.len());
    alpha.rows_mut(0, nl).copy_from(&sol.rows(rows, nl));
    alpha.rows_mut(nl, nq).copy_from(&(mq.transpose() * lambda));
    check_residual(&m, &alpha, &f, INTERPOLATION_RESIDUAL)?;
    let condition = condition_number(&m)?;
    Ok(finish(&basis, set, values, alpha, condition))
}

/// Quadratic interpolant minimizing `‖α_Q‖₁` subject to interpolation.
///
/// Values are shifted by the first sample and scaled to unit maximum before
/// the ℓ1 solve; both transformations map optimal solutions onto optimal
/// solutions because the constant column is unpenalized.
pub fn sparse_l1_model(set: &SampleSet, values: &[f64]) -> Result<Fit> {
    sparse_l1_model_with(set, values, AdmmSettings::default())
}

pub fn sparse_l1_model_with(set: &SampleSet, values: &[f64], settings: AdmmSettings) -> Result<Fit> {
    let (basis, f) = underdetermined_checks(set, values, "sparse model")?;
    let m = interpolation_matrix(&basis, set, true)?;
    let condition = condition_number(&m)?;
    if condition > POISEDNESS_LIMIT {
        return Err(Error::NotPoised { condition });
    }
    let shift = values[0];
    let centered = f.map(|v| v - shift);
    let scale = centered.amax();
    let mut alpha = DVector::zeros(basis.len());
    if scale > 0.0 {
        let mask = (0..basis.len()).map(|j| j >= basis.linear_len()).collect();
        let problem = BasisPursuitProblem::new(m.clone(), centered / scale, mask)?;
        let sol = solve_traced(&problem, settings, |_, _| {})?;
        alpha = sol.x * scale;
    }
    alpha[0] += shift;
    check_residual(&m, &alpha, &f, SPARSE_RESIDUAL)?;
    Ok(finish(&basis, set, values, alpha, condition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn pts(rows: &[&[f64]]) -> Vec<DVector<f64>> {
        rows.iter().map(|r| DVector::from_column_slice(r)).collect()
    }

    fn unit_set(rows: &[&[f64]]) -> SampleSet {
        let n = rows[0].len();
        SampleSet::new(DVector::zeros(n), 1.0, pts(rows))
    }

    #[test]
    fn interpolate_linear_simplex() {
        let set = unit_set(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        // f = x1 + 2 x2 + 3: α₀ = f(0) = 3, α₀ + α₁ = 4, α₀ + α₂ = 5.
        let fit = interpolate(&set, &[3.0, 4.0, 5.0], &MonomialBasis::linear(2)).unwrap();
        assert!((&fit.alpha - DVector::from_vec(vec![3.0, 1.0, 2.0])).amax() < 1e-14);
        assert!((fit.model.gradient() - DVector::from_vec(vec![1.0, 2.0])).amax() < 1e-14);
        assert_eq!(fit.model.constant(), 3.0);
    }

    #[test]
    fn interpolate_reproduces_quadratics() {
        let set = SampleSet::new(
            DVector::from_vec(vec![0.5, -1.0]),
            0.25,
            pts(&[&[0.5, -1.0], &[0.75, -1.0], &[0.25, -1.0], &[0.5, -0.75], &[0.5, -1.25], &[0.7, -0.8]]),
        );
        let f = |y: &DVector<f64>| 1.0 + 2.0 * y[0] - y[1] + 1.5 * y[0] * y[0] - 0.7 * y[0] * y[1] + 0.2 * y[1] * y[1];
        let values: Vec<f64> = set.points.iter().map(f).collect();
        let fit = interpolate(&set, &values, &MonomialBasis::quadratic(2)).unwrap();
        let c = &set.center;
        let g = DVector::from_vec(vec![2.0 + 3.0 * c[0] - 0.7 * c[1], -1.0 - 0.7 * c[0] + 0.4 * c[1]]);
        let h = DMatrix::from_row_slice(2, 2, &[3.0, -0.7, -0.7, 0.4]);
        assert!((fit.model.gradient() - g).amax() < 1e-10);
        assert!((fit.model.hessian() - h).amax() < 1e-9);
        assert_eq!(fit.model.constant(), f(c));
    }

    #[test]
    fn interpolate_rejects_duplicates() {
        let set = unit_set(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            interpolate(&set, &[0.0, 1.0, 1.0], &MonomialBasis::linear(2)),
            Err(Error::NotPoised { .. })
        ));
    }

    #[test]
    fn regress_examples() {
        let set = unit_set(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], &[-1.0, 0.5]]);
        let values: Vec<f64> = set.points.iter().map(|y| 2.0 - y[0] + 4.0 * y[1]).collect();
        let fit = regress(&set, &values, &MonomialBasis::linear(2)).unwrap();
        assert!((&fit.alpha - DVector::from_vec(vec![2.0, -1.0, 4.0])).amax() < 1e-12);

        // Closed-form simple linear regression of (0,0), (1,1), (2,4), (3,9):
        // slope = Σ(x-x̄)(y-ȳ) / Σ(x-x̄)² = 15 / 5, intercept = ȳ - 3 x̄ = -1.
        let set = unit_set(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        let fit = regress(&set, &[0.0, 1.0, 4.0, 9.0], &MonomialBasis::linear(1)).unwrap();
        assert!((&fit.alpha - DVector::from_vec(vec![-1.0, 3.0])).amax() < 1e-12);
    }

    #[test]
    fn repeated_rows_match_weighted_regression() {
        let set = unit_set(&[&[0.0], &[1.0], &[1.0], &[1.0], &[2.0], &[3.0]]);
        let values = [0.3, 1.1, 1.1, 1.1, 3.9, 9.2];
        let fit = regress(&set, &values, &MonomialBasis::linear(1)).unwrap();
        // Deduplicated weighted normal equations with weights (1, 3, 1, 1).
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.3, 1.1, 3.9, 9.2];
        let ws = [1.0, 3.0, 1.0, 1.0];
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..4 {
            s0 += ws[k];
            s1 += ws[k] * xs[k];
            s2 += ws[k] * xs[k] * xs[k];
            t0 += ws[k] * ys[k];
            t1 += ws[k] * xs[k] * ys[k];
        }
        let det = s0 * s2 - s1 * s1;
        let a0 = (t0 * s2 - s1 * t1) / det;
        let a1 = (s0 * t1 - s1 * t0) / det;
        assert!((fit.alpha[0] - a0).abs() < 1e-12 && (fit.alpha[1] - a1).abs() < 1e-12);
    }

    #[test]
    fn mfn_examples() {
        // min α₂² s.t. α₀ = 0, α₀ + α₁ + α₂/2 = 1 gives α = (0, 1, 0).
        let set = unit_set(&[&[0.0], &[1.0]]);
        let fit = mfn_model(&set, &[0.0, 1.0]).unwrap();
        assert!((&fit.alpha - DVector::from_vec(vec![0.0, 1.0, 0.0])).amax() < 1e-12);

        // Square poised set: same as the interpolant.
        let set = unit_set(&[&[0.0], &[1.0], &[-0.5]]);
        let values = [1.0, 0.2, 3.0];
        let a = mfn_model(&set, &values).unwrap();
        let b = interpolate(&set, &values, &MonomialBasis::quadratic(1)).unwrap();
        assert!((&a.alpha - &b.alpha).amax() < 1e-12);

        // Linear data: zero quadratic block.
        let set = unit_set(&[&[0.0, 0.0], &[0.3, 0.9], &[-0.8, 0.1], &[0.5, -0.6]]);
        let values: Vec<f64> = set.points.iter().map(|y| 1.0 + 0.5 * y[0] - 2.0 * y[1]).collect();
        let fit = mfn_model(&set, &values).unwrap();
        assert!(fit.alpha.rows(3, 3).amax() < 1e-12);
        assert!((fit.alpha.rows(0, 3) - DVector::from_vec(vec![1.0, 0.5, -2.0])).amax() < 1e-12);
    }

    #[test]
    fn mfn_rejects_degenerate_linear_block() {
        let set = unit_set(&[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]]);
        assert!(matches!(
            mfn_model(&set, &[0.0, 1.0, 2.0, 3.0]),
            Err(Error::NotPoised { .. })
        ));
        let set = unit_set(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(mfn_model(&set, &[0.0, 1.0]), Err(Error::SampleCount { .. })));
    }

    #[test]
    fn sparse_model_of_linear_data_has_no_curvature() {
        let set = unit_set(&[&[0.0, 0.0], &[0.3, 0.9], &[-0.8, 0.1], &[0.5, -0.6]]);
        let values: Vec<f64> = set.points.iter().map(|y| 1.0 + 0.5 * y[0] - 2.0 * y[1]).collect();
        let fit = sparse_l1_model(&set, &values).unwrap();
        assert!(fit.alpha.rows(3, 3).amax() < 1e-7);
        assert!((fit.alpha.rows(0, 3) - DVector::from_vec(vec![1.0, 0.5, -2.0])).amax() < 1e-7);
    }

    #[test]
    fn sparse_model_on_square_set_is_the_interpolant() {
        let set = unit_set(&[&[0.0], &[1.0], &[-0.5]]);
        let values = [1.0, 0.2, 3.0];
        let a = sparse_l1_model(&set, &values).unwrap();
        let b = interpolate(&set, &values, &MonomialBasis::quadratic(1)).unwrap();
        assert!((&a.alpha - &b.alpha).amax() < 1e-8);
    }
}
