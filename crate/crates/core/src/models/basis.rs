use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::condition_number;

/// Polynomial degree of a [`MonomialBasis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degree {
    Linear,
    Quadratic,
}

/// Natural monomial basis of degree one or two.
///
/// Elements are ordered as the constant, then `x₁ … x_n`, then the quadratic
/// block in lexicographic pair order `(1,1), (1,2), …, (1,n), (2,2), …`, where
/// the squared terms carry a factor ½. With that ordering the quadratic
/// coefficients are exactly the upper-triangular Hessian entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonomialBasis {
    dim: usize,
    degree: Degree,
}

impl MonomialBasis {
    pub fn new(dim: usize, degree: Degree) -> Self {
        Self { dim, degree }
    }

    pub fn linear(dim: usize) -> Self {
        Self::new(dim, Degree::Linear)
    }

    pub fn quadratic(dim: usize) -> Self {
        Self::new(dim, Degree::Quadratic)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    /// Number of basis elements.
    pub fn len(&self) -> usize {
        match self.degree {
            Degree::Linear => self.dim + 1,
            Degree::Quadratic => (self.dim + 1) * (self.dim + 2) / 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of constant-plus-linear elements.
    pub fn linear_len(&self) -> usize {
        self.dim + 1
    }

    /// Index pairs `(i, j)`, `i ≤ j`, of the quadratic block in basis order.
    pub fn quadratic_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = match self.degree {
            Degree::Linear => 0,
            Degree::Quadratic => self.dim,
        };
        (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
    }

    /// Values of every basis element at `y`.
    pub fn evaluate(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut row = DVector::zeros(self.len());
        row[0] = 1.0;
        for i in 0..self.dim {
            row[1 + i] = y[i];
        }
        for (k, (i, j)) in self.quadratic_pairs().enumerate() {
            row[self.dim + 1 + k] = if i == j {
                0.5 * y[i] * y[i]
            } else {
                y[i] * y[j]
            };
        }
        row
    }
}

/// Sample points around a center, with the radius used for scaling.
///
/// The first point is conventionally the center itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<DVector<f64>>,
    pub center: DVector<f64>,
    pub radius: f64,
    pub values: Option<Vec<f64>>,
    /// Condition number of the scaled interpolation matrix, once measured.
    pub condition: Option<f64>,
}

impl SampleSet {
    pub fn new(center: DVector<f64>, radius: f64, points: Vec<DVector<f64>>) -> Self {
        Self {
            points,
            center,
            radius,
            values: None,
            condition: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `(yᵢ - center) / radius` for every point.
    pub fn scaled_points(&self) -> Vec<DVector<f64>> {
        self.points
            .iter()
            .map(|y| (y - &self.center) / self.radius)
            .collect()
    }

    /// True when the first point coincides with the center.
    pub fn contains_center(&self) -> bool {
        self.points.first().is_some_and(|y| *y == self.center)
    }
}

/// `M(Φ, Y)`: one row per point, one column per basis element.
pub fn interpolation_matrix(
    basis: &MonomialBasis,
    set: &SampleSet,
    scaled: bool,
) -> Result<DMatrix<f64>> {
    for y in &set.points {
        if y.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: y.len(),
            });
        }
    }
    let rows: Vec<DVector<f64>> = if scaled {
        set.scaled_points()
    } else {
        set.points.clone()
    };
    let mut m = DMatrix::zeros(rows.len(), basis.len());
    for (i, y) in rows.iter().enumerate() {
        m.row_mut(i).copy_from(&basis.evaluate(y).transpose());
    }
    Ok(m)
}

/// Condition number of the scaled matrix `M(Φ, Ŷ)`; `+∞` when it is
/// numerically singular or the set has fewer than two points.
pub fn poisedness_condition(set: &SampleSet, basis: &MonomialBasis) -> Result<f64> {
    if set.len() < 2 {
        return Ok(f64::INFINITY);
    }
    condition_number(&interpolation_matrix(basis, set, true)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pts(rows: &[&[f64]]) -> Vec<DVector<f64>> {
        rows.iter().map(|r| DVector::from_column_slice(r)).collect()
    }

    #[test]
    fn basis_sizes_and_order() {
        assert_eq!(MonomialBasis::linear(4).len(), 5);
        assert_eq!(MonomialBasis::quadratic(10).len(), 66);
        let b = MonomialBasis::quadratic(3);
        let pairs: Vec<_> = b.quadratic_pairs().collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]);
        let row = b.evaluate(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        assert_eq!(
            row.as_slice(),
            &[1.0, 1.0, 2.0, 3.0, 0.5, 2.0, 3.0, 2.0, 6.0, 4.5]
        );
    }

    #[test]
    fn interpolation_matrix_examples() {
        let simplex = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let set = SampleSet::new(DVector::zeros(2), 1.0, simplex);
        let expected = DMatrix::from_row_slice(3, 3, &[1., 0., 0., 1., 1., 0., 1., 0., 1.]);
        assert_eq!(
            interpolation_matrix(&MonomialBasis::linear(2), &set, false).unwrap(),
            expected
        );

        let set = SampleSet::new(DVector::zeros(1), 1.0, pts(&[&[0.0], &[1.0], &[2.0]]));
        let m = interpolation_matrix(&MonomialBasis::quadratic(1), &set, false).unwrap();
        assert_eq!(
            m,
            DMatrix::from_row_slice(3, 3, &[1., 0., 0., 1., 1., 0.5, 1., 2., 2.])
        );

        let set = SampleSet::new(
            DVector::zeros(2),
            2.0,
            pts(&[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0]]),
        );
        assert_eq!(
            interpolation_matrix(&MonomialBasis::linear(2), &set, true).unwrap(),
            expected
        );

        let bad = SampleSet::new(DVector::zeros(2), 1.0, pts(&[&[0.0]]));
        assert!(matches!(
            interpolation_matrix(&MonomialBasis::linear(2), &bad, false),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn poisedness_examples() {
        let set = SampleSet::new(
            DVector::zeros(2),
            1.0,
            pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]),
        );
        // Independent route: eigenvalues of MᵀM by Jacobi rotations.
        let m = DMatrix::from_row_slice(3, 3, &[1., 0., 0., 1., 1., 0., 1., 0., 1.]);
        let eig = jacobi_eigenvalues(m.transpose() * &m);
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        let oracle = libm::sqrt(max / min);
        let cond = poisedness_condition(&set, &MonomialBasis::linear(2)).unwrap();
        assert!((cond - oracle).abs() < 1e-10 * oracle);

        let dup = SampleSet::new(
            DVector::zeros(2),
            1.0,
            pts(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]]),
        );
        assert_eq!(
            poisedness_condition(&dup, &MonomialBasis::linear(2)).unwrap(),
            f64::INFINITY
        );

        let single = SampleSet::new(DVector::zeros(1), 1.0, pts(&[&[0.0]]));
        assert_eq!(
            poisedness_condition(&single, &MonomialBasis::linear(1)).unwrap(),
            f64::INFINITY
        );
    }

    fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
        let n = a.nrows();
        for _ in 0..100 {
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    let mut rot = DMatrix::identity(n, n);
                    rot[(p, p)] = c;
                    rot[(q, q)] = c;
                    rot[(p, q)] = s;
                    rot[(q, p)] = -s;
                    a = rot.transpose() * a * &rot;
                }
            }
        }
        (0..n).map(|i| a[(i, i)]).collect()
    }
}
