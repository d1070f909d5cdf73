//! Equality-constrained ℓ1 minimization over a masked block of variables.
//!
//! Solves `min Σ_{i penalized} |xᵢ|  s.t.  Ax = b` by ADMM on the splitting
//! `x = z`: `x` is projected onto the affine set `{Ax = b}` through a
//! factorization computed once per problem, `z` is soft-thresholded on the
//! penalized coordinates, and `u` is the scaled dual variable. Unpenalized
//! coordinates are eliminated exactly before the iteration starts.
//!
//! On badly scaled instances ADMM can stall with a few tiny coefficients
//! still missing from its support. The iterate is then periodically handed
//! to a primal simplex crossover that finishes at an exact vertex.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{svd, svd_condition};

/// Largest accepted condition number of the constraint matrix.
pub const RANK_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct BasisPursuitProblem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    penalized: Vec<bool>,
}

impl BasisPursuitProblem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, penalized: Vec<bool>) -> Result<Self> {
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        if penalized.len() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.ncols(),
                found: penalized.len(),
            });
        }
        if a.nrows() > a.ncols() {
            return Err(Error::InvalidParameter {
                name: "A",
                reason: "more rows than columns",
            });
        }
        if !penalized.iter().any(|&p| p) {
            return Err(Error::InvalidParameter {
                name: "penalized_mask",
                reason: "no penalized column",
            });
        }
        Ok(Self { a, b, penalized })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn penalized(&self) -> &[bool] {
        &self.penalized
    }

    /// ℓ1 norm of the penalized coordinates of `x`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        x.iter()
            .zip(&self.penalized)
            .filter(|(_, &p)| p)
            .map(|(v, _)| v.abs())
            .sum()
    }
}

/// Componentwise `sign(v)·max(|v| - t, 0)` on penalized entries; the others
/// pass through.
pub fn soft_threshold(v: &DVector<f64>, t: f64, penalized: &[bool]) -> DVector<f64> {
    debug_assert!(t >= 0.0);
    DVector::from_iterator(
        v.len(),
        v.iter().zip(penalized).map(|(&x, &p)| {
            if !p {
                x
            } else if x > t {
                x - t
            } else if x < -t {
                x + t
            } else {
                0.0
            }
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmSettings {
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            rho: 1.0,
            tol: 1e-8,
            max_iter: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisPursuitSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Projector onto `{x : Ax = b}` from a thin SVD of `A`.
struct AffineProjector {
    vt: DMatrix<f64>,
    offset: DVector<f64>,
}

impl AffineProjector {
    fn new(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        let dec = svd(a)?;
        let condition = svd_condition(&dec, a.nrows(), a.ncols());
        if condition > RANK_CONDITION_LIMIT {
            return Err(Error::RankDeficient { condition });
        }
        let u = dec.u.as_ref().ok_or(Error::SvdNonConvergence)?;
        let vt = dec.v_t.clone().ok_or(Error::SvdNonConvergence)?;
        let mut ub = u.transpose() * b;
        for (c, s) in ub.iter_mut().zip(dec.singular_values.iter()) {
            *c /= s;
        }
        let offset = vt.transpose() * ub;
        Ok(Self { vt, offset })
    }

    fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let coeffs = &self.vt * v;
        v - self.vt.transpose() * coeffs + &self.offset
    }
}

/// Iterations between attempts to certify the current support.
pub const CERTIFICATE_INTERVAL: usize = 25;

/// Iterations without convergence after which the iterate is handed to the
/// simplex crossover.
const CROSSOVER_AFTER: usize = 500;

/// Certificate attempts between two crossover attempts.
const CROSSOVER_EVERY: usize = 10;

/// Pivot cap of the crossover, per column.
const PIVOTS_PER_COLUMN: usize = 20;

/// Extrapolated entering coordinates tried per certificate attempt.
const ENTERING_CANDIDATES: usize = 3;

/// Dual entries this close to ±1 mark candidate support coordinates.
const SATURATION_SLACK: f64 = 1e-3;

/// KKT certificates for candidate supports of `min ‖x‖₁ s.t. Ax = b`.
///
/// A support `S` with signs `σ` is optimal when `A_S x_S = b` has a solution
/// with signs `σ` and some `y` satisfies `A_Sᵀy = σ` and `|A_jᵀy| ≤ 1` off
/// `S`. The candidate `y` is the one closest to the least-squares fit of the
/// ADMM dual estimate `w ≈ Aᵀy`.
struct Certifier<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    dual_fit: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    tol: f64,
}

impl<'a> Certifier<'a> {
    fn new(a: &'a DMatrix<f64>, b: &'a DVector<f64>, tol: f64) -> Result<Self> {
        Ok(Self {
            a,
            b,
            dual_fit: svd(&a.transpose())?,
            tol,
        })
    }

    /// Tries the support of `z`, then that support widened by the coordinates
    /// where `w` is nearly saturated, then by the coordinates whose dual
    /// entries, extrapolated along `drift`, saturate first. With `crossover`
    /// it finally runs the simplex crossover from the iterate.
    fn attempt(
        &self,
        z: &DVector<f64>,
        w: &DVector<f64>,
        drift: &DVector<f64>,
        crossover: bool,
    ) -> Option<DVector<f64>> {
        let n = z.len();
        let y0 = self.dual_fit.solve(w, 0.0).ok()?;
        let narrow: Vec<usize> = (0..n).filter(|&i| z[i] != 0.0).collect();
        let signs: Vec<f64> = (0..n)
            .map(|i| {
                if z[i] != 0.0 {
                    z[i].signum()
                } else if w[i] != 0.0 {
                    w[i].signum()
                } else {
                    drift[i].signum()
                }
            })
            .collect();
        if let Some(x) = self.certify(&narrow, &signs, &y0) {
            return Some(x);
        }
        let wide: Vec<usize> = (0..n)
            .filter(|&i| z[i] != 0.0 || w[i].abs() >= 1.0 - SATURATION_SLACK)
            .collect();
        if wide.len() > narrow.len() {
            if let Some(x) = self.certify(&wide, &signs, &y0) {
                return Some(x);
            }
        }
        // Time until each idle dual entry reaches ±1 at the current drift.
        let mut entering: Vec<(f64, usize)> = (0..n)
            .filter(|&i| z[i] == 0.0 && w[i] * drift[i] >= 0.0 && drift[i] != 0.0)
            .map(|i| ((1.0 - w[i].abs()).max(0.0) / drift[i].abs(), i))
            .collect();
        entering.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut support = narrow.clone();
        for &(_, i) in entering.iter().take(ENTERING_CANDIDATES) {
            if support.len() >= self.a.nrows() {
                break;
            }
            support.push(i);
            support.sort_unstable();
            if let Some(x) = self.certify(&support, &signs, &y0) {
                return Some(x);
            }
        }
        if crossover {
            return self.crossover(z, w);
        }
        None
    }

    /// Primal simplex on `min 1ᵀt s.t. Σⱼ σⱼtⱼaⱼ = b, t ≥ 0`, started from the
    /// independent columns of largest `|z|`, then `|w|`. Any nonsingular basis
    /// is feasible once each column carries the sign of its basic value, so
    /// no first phase is needed.
    fn crossover(&self, z: &DVector<f64>, w: &DVector<f64>) -> Option<DVector<f64>> {
        let (a, b) = (self.a, self.b);
        let (m, n) = a.shape();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            z[j].abs()
                .total_cmp(&z[i].abs())
                .then(w[j].abs().total_cmp(&w[i].abs()))
                .then(i.cmp(&j))
        });
        let mut basis: Vec<usize> = Vec::with_capacity(m);
        let mut frame: Vec<DVector<f64>> = Vec::with_capacity(m);
        for &j in &order {
            if basis.len() == m {
                break;
            }
            let mut v = a.column(j).into_owned();
            let scale = v.norm();
            for _ in 0..2 {
                for q in &frame {
                    let c = q.dot(&v);
                    v -= q * c;
                }
            }
            let r = v.norm();
            if r > 1e-8 * scale && r > 0.0 {
                frame.push(v / r);
                basis.push(j);
            }
        }
        if basis.len() < m {
            return None;
        }
        let start = a.select_columns(basis.iter()).lu().solve(b)?;
        let mut sign: Vec<f64> = start.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let ones = DVector::from_element(m, 1.0);

        for pivot in 0..PIVOTS_PER_COLUMN * n {
            let mut bm = a.select_columns(basis.iter());
            for (k, &s) in sign.iter().enumerate() {
                bm.column_mut(k).scale_mut(s);
            }
            let y = bm.transpose().lu().solve(&ones)?;
            let lu = bm.lu();
            let t = lu.solve(b)?;
            let aty = a.transpose() * &y;

            // Dantzig pricing, switching to Bland's rule against cycling.
            let bland = pivot >= 2 * n;
            let mut entering = None;
            let mut best = 1.0 + 1e-9;
            for j in (0..n).filter(|j| !basis.contains(j)) {
                let v = aty[j].abs();
                if v > best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = v;
                }
            }
            let Some(j) = entering else {
                let mut x = DVector::zeros(n);
                for (k, &i) in basis.iter().enumerate() {
                    x[i] = sign[k] * t[k].max(0.0);
                }
                if (a * &x - b).norm() > self.tol * b.norm().max(1.0) {
                    return None;
                }
                return Some(x);
            };
            let s_j = aty[j].signum();
            let d = lu.solve(&(a.column(j) * s_j))?;
            let mut leave: Option<(f64, usize)> = None;
            for k in (0..m).filter(|&k| d[k] > 1e-12) {
                let ratio = t[k].max(0.0) / d[k];
                match leave {
                    Some((r, l)) if ratio > r || (ratio == r && basis[k] > basis[l]) => {}
                    _ => leave = Some((ratio, k)),
                }
            }
            let (_, k) = leave?;
            basis[k] = j;
            sign[k] = s_j;
        }
        None
    }

    /// Solves on `support` and accepts the result when its signs match
    /// `signs` and the dual check passes.
    fn certify(&self, support: &[usize], signs: &[f64], y0: &DVector<f64>) -> Option<DVector<f64>> {
        let (a, b) = (self.a, self.b);
        if support.is_empty() || support.len() > a.nrows() {
            return None;
        }
        let a_s = a.select_columns(support.iter());
        let dec = svd(&a_s).ok()?;
        if svd_condition(&dec, a_s.nrows(), a_s.ncols()) > RANK_CONDITION_LIMIT {
            return None;
        }
        let x_s = dec.solve(b, 0.0).ok()?;
        if (&a_s * &x_s - b).norm() > self.tol * b.norm().max(1.0) {
            return None;
        }
        if support.iter().zip(x_s.iter()).any(|(&i, &v)| v == 0.0 || v.signum() != signs[i]) {
            return None;
        }
        let sign_s = DVector::from_iterator(support.len(), x_s.iter().map(|v| v.signum()));

        let gap = &sign_s - a_s.transpose() * y0;
        let y = y0 + svd(&a_s.transpose()).ok()?.solve(&gap, 0.0).ok()?;
        if (a_s.transpose() * &y - &sign_s).amax() > 1e-9 {
            return None;
        }
        let aty = a.transpose() * &y;
        if (0..a.ncols()).any(|j| !support.contains(&j) && aty[j].abs() > 1.0 + 1e-9) {
            return None;
        }
        let mut x = DVector::zeros(a.ncols());
        for (k, &i) in support.iter().enumerate() {
            x[i] = x_s[k];
        }
        Some(x)
    }
}

/// Exact elimination of the unpenalized block.
///
/// With `A = [A_U A_P]` and `Q` an orthonormal basis of `range(A_U)^⊥`, the
/// penalized block solves `min ‖x_P‖₁ s.t. QᵀA_P x_P = Qᵀb` and the free block
/// is recovered as the least-norm solution of `A_U x_U = b - A_P x_P`.
struct Reduction {
    free: Vec<usize>,
    penalized: Vec<usize>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    free_block: Option<(nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, DMatrix<f64>)>,
}

impl Reduction {
    fn new(problem: &BasisPursuitProblem) -> Result<Self> {
        let (m, n) = problem.a.shape();
        let free: Vec<usize> = (0..n).filter(|&j| !problem.penalized[j]).collect();
        let penalized: Vec<usize> = (0..n).filter(|&j| problem.penalized[j]).collect();
        if free.is_empty() {
            return Ok(Self {
                free,
                penalized,
                a: problem.a.clone(),
                b: problem.b.clone(),
                free_block: None,
            });
        }
        let a_u = problem.a.select_columns(free.iter());
        let a_p = problem.a.select_columns(penalized.iter());
        // Zero padding makes the left factor square.
        let mut padded = DMatrix::zeros(m, free.len() + m);
        padded.columns_mut(0, free.len()).copy_from(&a_u);
        let dec = svd(&padded)?;
        let left = dec.u.as_ref().ok_or(Error::SvdNonConvergence)?;
        let smax = dec.singular_values.max();
        let rank = dec
            .singular_values
            .iter()
            .filter(|&&s| s > smax * f64::EPSILON * (m + free.len()) as f64)
            .count();
        let complement = left.columns(rank, m - rank);
        let a = complement.transpose() * &a_p;
        let b = complement.transpose() * &problem.b;
        Ok(Self {
            free,
            penalized,
            a,
            b,
            free_block: Some((svd(&a_u)?, a_p)),
        })
    }

    fn expand(&self, x_p: &DVector<f64>, problem: &BasisPursuitProblem) -> Result<DVector<f64>> {
        let Some((dec, a_p)) = &self.free_block else {
            return Ok(x_p.clone());
        };
        let rhs = &problem.b - a_p * x_p;
        let eps = dec.singular_values.max() * f64::EPSILON * problem.a.nrows().max(self.free.len()) as f64;
        let x_u = dec.solve(&rhs, eps).map_err(|_| Error::SvdNonConvergence)?;
        let mut x = DVector::zeros(problem.a.ncols());
        for (k, &j) in self.free.iter().enumerate() {
            x[j] = x_u[k];
        }
        for (k, &j) in self.penalized.iter().enumerate() {
            x[j] = x_p[k];
        }
        Ok(x)
    }
}

/// ADMM basis pursuit with per-iteration callback `(iteration, merit)`.
///
/// Unpenalized coordinates are eliminated first (see [`Reduction`]); the
/// iteration then runs on the penalized block alone and stops when the
/// residuals fall below tolerance, the current support is certified optimal
/// by a dual vector, or the crossover finishes a stalled run. The merit is
/// `‖z⁺ - z‖² + ‖u⁺ - u‖²`, the squared fixed-point residual of the
/// iteration, which is non-increasing.
pub fn solve_traced(
    problem: &BasisPursuitProblem,
    settings: AdmmSettings,
    mut observe: impl FnMut(usize, f64),
) -> Result<BasisPursuitSolution> {
    let condition = svd_condition(&svd(&problem.a)?, problem.a.nrows(), problem.a.ncols());
    if condition > RANK_CONDITION_LIMIT {
        return Err(Error::RankDeficient { condition });
    }
    let reduced = Reduction::new(problem)?;
    let finish = |x_p: DVector<f64>, iterations, primal, dual| -> Result<BasisPursuitSolution> {
        let x = reduced.expand(&x_p, problem)?;
        let x = polish(problem, &x.clone(), x, settings.tol);
        Ok(BasisPursuitSolution {
            objective: problem.objective(&x),
            x,
            iterations,
            primal_residual: primal,
            dual_residual: dual,
        })
    };
    if reduced.a.nrows() == 0 {
        return finish(DVector::zeros(reduced.penalized.len()), 0, 0.0, 0.0);
    }

    let projector = AffineProjector::new(&reduced.a, &reduced.b)?;
    let certifier = Certifier::new(&reduced.a, &reduced.b, settings.tol)?;
    let threshold = 1.0 / settings.rho;
    let mask = alloc::vec![true; reduced.a.ncols()];

    let mut z = projector.offset.clone();
    let mut u = DVector::zeros(z.len());
    let mut last_w = DVector::zeros(z.len());
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;

    for iter in 1..=settings.max_iter {
        let x = projector.project(&(&z - &u));
        let z_next = soft_threshold(&(&x + &u), threshold, &mask);
        let u_next = &u + &x - &z_next;

        primal = (&x - &z_next).norm();
        let dz = (&z_next - &z).norm();
        dual = settings.rho * dz;
        observe(iter, dz * dz + (&u_next - &u).norm_squared());

        z = z_next;
        u = u_next;

        let scale = z.norm().max(1.0);
        if primal <= settings.tol * scale && dual <= settings.tol * scale {
            return finish(x, iter, primal, dual);
        }
        if iter % CERTIFICATE_INTERVAL == 0 {
            let w = &u * settings.rho;
            let drift = (&w - &last_w) / CERTIFICATE_INTERVAL as f64;
            let crossover = iter >= CROSSOVER_AFTER && iter % (CROSSOVER_EVERY * CERTIFICATE_INTERVAL) == 0;
            if let Some(x) = certifier.attempt(&z, &w, &drift, crossover) {
                return finish(x, iter, primal, dual);
            }
            last_w = w;
        }
    }
    Err(Error::NotConverged {
        iterations: settings.max_iter,
        primal,
        dual,
    })
}

/// Re-solves on the support found by the thresholded iterate; keeps the
/// result only if it is feasible and no worse in objective.
fn polish(
    problem: &BasisPursuitProblem,
    z: &DVector<f64>,
    x: DVector<f64>,
    tol: f64,
) -> DVector<f64> {
    let support: Vec<usize> = (0..z.len())
        .filter(|&i| !problem.penalized[i] || z[i] != 0.0)
        .collect();
    if support.is_empty() || support.len() == z.len() {
        return x;
    }
    let sub = problem.a.select_columns(support.iter());
    let Ok(dec) = svd(&sub) else { return x };
    let Ok(w) = dec.solve(&problem.b, 1e-13 * dec.singular_values.max()) else {
        return x;
    };
    let mut candidate = DVector::zeros(z.len());
    for (k, &i) in support.iter().enumerate() {
        candidate[i] = w[k];
    }
    let b_scale = problem.b.norm().max(1.0);
    let residual = (&problem.a * &candidate - &problem.b).norm();
    let x_residual = (&problem.a * &x - &problem.b).norm();
    let obj = problem.objective(&x);
    if residual <= x_residual.max(tol * b_scale)
        && problem.objective(&candidate) <= obj + tol * obj.max(1.0)
    {
        candidate
    } else {
        x
    }
}

/// Solves the problem with the default settings at the given tolerance and
/// iteration cap.
pub fn basis_pursuit(
    problem: &BasisPursuitProblem,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>> {
    let settings = AdmmSettings {
        tol,
        max_iter,
        ..AdmmSettings::default()
    };
    solve_traced(problem, settings, |_, _| {}).map(|s| s.x)
}
