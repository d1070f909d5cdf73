//! Sample-set generators and the evaluation archive.

use alloc::vec::Vec;

use nalgebra::DVector;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::models::SampleSet;

/// Archived points farther than this multiple of the radius are not reused.
pub const GREEDY_RADIUS_FACTOR: f64 = 2.0;

/// Seedable generator: ChaCha with 8 rounds, seeded through
/// `SeedableRng::seed_from_u64`. Normal variates use the ziggurat sampler of
/// `rand_distr`. The stream depends only on the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    pub fn normal_vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.standard_normal())
    }

    /// Uniform on the unit sphere in `R^n`.
    pub fn unit_vector(&mut self, n: usize) -> DVector<f64> {
        loop {
            let z = self.normal_vector(n);
            let norm = z.norm();
            if norm > 0.0 {
                return z / norm;
            }
        }
    }
}

/// Every evaluated point with its function value, in evaluation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Archive {
    entries: Vec<(DVector<f64>, f64)>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: DVector<f64>, f: f64) {
        self.entries.push((x, f));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(DVector<f64>, f64)> {
        self.entries.iter()
    }

    /// Value recorded for an exact match of `x`, earliest first.
    pub fn lookup(&self, x: &DVector<f64>) -> Option<f64> {
        self.entries.iter().find(|(y, _)| y == x).map(|(_, f)| *f)
    }
}

fn require_count(count: usize) -> Result<()> {
    if count == 0 {
        Err(Error::InvalidParameter {
            name: "count",
            reason: "at least one random point is required",
        })
    } else {
        Ok(())
    }
}

/// `{center} ∪ {center + δ zᵢ}` with standard normal `zᵢ`; not clipped to the
/// ball.
pub fn gaussian_set(center: &DVector<f64>, delta: f64, count: usize, rng: &mut Rng) -> Result<SampleSet> {
    require_count(count)?;
    let n = center.len();
    let mut points = Vec::with_capacity(count + 1);
    points.push(center.clone());
    for _ in 0..count {
        points.push(center + rng.normal_vector(n) * delta);
    }
    Ok(SampleSet::new(center.clone(), delta, points))
}

/// `{center}` plus `count` points uniform in the ball `B(center, δ)`.
pub fn ball_uniform_set(center: &DVector<f64>, delta: f64, count: usize, rng: &mut Rng) -> Result<SampleSet> {
    require_count(count)?;
    let n = center.len();
    let mut points = Vec::with_capacity(count + 1);
    points.push(center.clone());
    for _ in 0..count {
        let dir = rng.unit_vector(n);
        let radius = delta * libm::pow(rng.uniform(), 1.0 / n as f64);
        points.push(center + dir * radius);
    }
    Ok(SampleSet::new(center.clone(), delta, points))
}

/// `{center} ∪ {center ± δ eᵢ}` in the order `+e₁, -e₁, +e₂, …`.
pub fn coordinate_set(center: &DVector<f64>, delta: f64) -> SampleSet {
    let n = center.len();
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(center.clone());
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut y = center.clone();
            y[i] += sign * delta;
            points.push(y);
        }
    }
    SampleSet::new(center.clone(), delta, points)
}

/// Up to `max_points` archived points nearest to `center` (the center first),
/// restricted to distance at most `GREEDY_RADIUS_FACTOR · δ`. Ties keep
/// archive order; repeated points are taken once. The returned set carries
/// the archived values.
pub fn greedy_reuse(archive: &Archive, center: &DVector<f64>, delta: f64, max_points: usize) -> Result<SampleSet> {
    let f_center = archive.lookup(center).ok_or(Error::InvalidParameter {
        name: "archive",
        reason: "the center has not been evaluated",
    })?;
    let limit = GREEDY_RADIUS_FACTOR * delta;
    let mut candidates: Vec<(f64, usize)> = archive
        .iter()
        .enumerate()
        .filter_map(|(i, (y, _))| {
            let d = (y - center).norm();
            (d > 0.0 && d <= limit).then_some((d, i))
        })
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut points = alloc::vec![center.clone()];
    let mut values = alloc::vec![f_center];
    for (_, i) in candidates {
        if points.len() >= max_points.max(1) {
            break;
        }
        let (y, f) = &archive.entries[i];
        if points.iter().any(|p| p == y) {
            continue;
        }
        points.push(y.clone());
        values.push(*f);
    }
    let mut set = SampleSet::new(center.clone(), delta, points);
    set.values = Some(values);
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn generators_are_deterministic() {
        let c = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let a = gaussian_set(&c, 0.1, 7, &mut Rng::seed_from_u64(9)).unwrap();
        let b = gaussian_set(&c, 0.1, 7, &mut Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let a = ball_uniform_set(&c, 0.1, 7, &mut Rng::seed_from_u64(9)).unwrap();
        let b = ball_uniform_set(&c, 0.1, 7, &mut Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
        assert_eq!(a.points[0], c);
    }

    #[test]
    fn zero_count_is_rejected() {
        let c = DVector::zeros(2);
        assert!(gaussian_set(&c, 1.0, 0, &mut Rng::seed_from_u64(0)).is_err());
        assert!(ball_uniform_set(&c, 1.0, 0, &mut Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn gaussian_offsets_have_zero_mean() {
        let c = DVector::from_vec(vec![3.0, -2.0]);
        let set = gaussian_set(&c, 1.0, 100_000, &mut Rng::seed_from_u64(1)).unwrap();
        let mut mean = DVector::zeros(2);
        for y in &set.points[1..] {
            mean += y - &c;
        }
        mean /= 100_000.0;
        assert!(mean.amax() < 0.02, "{mean}");
    }

    #[test]
    fn ball_points_are_uniform_in_the_ball() {
        let c = DVector::from_vec(vec![1.0, 1.0]);
        let set = ball_uniform_set(&c, 2.0, 100_000, &mut Rng::seed_from_u64(2)).unwrap();
        let radii: Vec<f64> = set.points[1..].iter().map(|y| (y - &c).norm()).collect();
        assert!(radii.iter().all(|&r| r <= 2.0));
        // Volume ratio of the half-radius ball in two dimensions is 1/4;
        // the binomial standard error at 1e5 draws is about 0.0014.
        let inner = radii.iter().filter(|&&r| r <= 1.0).count() as f64 / 1e5;
        assert!((inner - 0.25).abs() < 0.006, "{inner}");
    }

    #[test]
    fn coordinate_set_shape() {
        let set = coordinate_set(&DVector::zeros(2), 1.0);
        let expected: Vec<DVector<f64>> = [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
            .iter()
            .map(|p| DVector::from_column_slice(p))
            .collect();
        assert_eq!(set.points, expected);

        let degenerate = coordinate_set(&DVector::zeros(2), 0.0);
        assert!(degenerate.points.iter().all(|p| p.norm() == 0.0));

        let v = DVector::from_vec(vec![0.25, -3.0]);
        let moved = coordinate_set(&v, 1.0);
        for (a, b) in moved.points.iter().zip(&set.points) {
            assert_eq!(a, &(b + &v));
        }
    }

    #[test]
    fn greedy_reuse_center_only() {
        let c = DVector::from_vec(vec![1.0, 2.0]);
        let mut archive = Archive::new();
        archive.push(c.clone(), 5.0);
        let set = greedy_reuse(&archive, &c, 0.1, 31).unwrap();
        assert_eq!(set.points, vec![c]);
        assert_eq!(set.values, Some(vec![5.0]));
    }

    #[test]
    fn greedy_reuse_takes_nearest() {
        let c = DVector::zeros(2);
        let mut archive = Archive::new();
        let mut rng = Rng::seed_from_u64(4);
        for _ in 0..40 {
            let y = rng.unit_vector(2) * (rng.uniform() * 1.9);
            let f = y.norm();
            archive.push(y, f);
        }
        archive.push(c.clone(), 0.0);
        // Far points never enter.
        archive.push(DVector::from_vec(vec![2.5, 0.0]), 2.5);
        let set = greedy_reuse(&archive, &c, 1.0, 31).unwrap();
        assert_eq!(set.len(), 31);
        // Sort-by-distance oracle.
        let mut dists: Vec<f64> = archive.iter().map(|(y, _)| y.norm()).filter(|&d| d > 0.0 && d <= 2.0).collect();
        dists.sort_by(f64::total_cmp);
        let chosen: Vec<f64> = set.points[1..].iter().map(|y| y.norm()).collect();
        assert_eq!(chosen, dists[..30].to_vec());
        assert_eq!(set.values.as_ref().unwrap()[0], 0.0);
    }

    #[test]
    fn greedy_reuse_radius_filter() {
        let c = DVector::zeros(1);
        let mut archive = Archive::new();
        archive.push(c.clone(), 0.0);
        archive.push(DVector::from_element(1, 0.5), 1.0);
        archive.push(DVector::from_element(1, 3.0), 1.0);
        let set = greedy_reuse(&archive, &c, 1.0, 31).unwrap();
        assert_eq!(set.len(), 2);
        assert!(greedy_reuse(&Archive::new(), &c, 1.0, 31).is_err());
    }
}
