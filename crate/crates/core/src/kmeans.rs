// SPDX-License-Identifier: Apache-2.0

//! Lloyd-style k-means under a configurable similarity metric.
//!
//! The center update is chosen per metric so that each step minimizes the
//! within-cluster distortion for that metric: the mean for L2, the
//! coordinate-wise median for L1 and the coordinate-wise midrange for
//! Chebyshev. Seeding is k-means++ with distances measured by the same
//! metric, and empty clusters are re-seeded from the point that is farthest
//! from its current center.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::metric::SimilarityMetric;

pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone)]
pub struct KMeansFit {
    /// `c × dim` centers.
    pub centroids: Matrix,
    pub assignments: Vec<usize>,
    /// Total distortion after every assignment step.
    pub distortion_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansFit {
    pub fn distortion(&self) -> f64 {
        self.distortion_history.last().copied().unwrap_or(0.0)
    }
}

/// Fits `c` centroids to `points` (one point per row).
pub fn kmeans_fit(
    points: &Matrix,
    c: usize,
    metric: SimilarityMetric,
    seed: u64,
) -> Result<KMeansFit> {
    kmeans_fit_with(points, c, metric, seed, DEFAULT_MAX_ITER)
}

pub fn kmeans_fit_with(
    points: &Matrix,
    c: usize,
    metric: SimilarityMetric,
    seed: u64,
    max_iter: usize,
) -> Result<KMeansFit> {
    points.ensure_nonempty("k-means input")?;
    if c == 0 {
        return Err(invalid("k-means needs at least one centroid"));
    }
    if !points.all_finite() {
        return Err(invalid("k-means input contains non-finite values"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, c, metric, &mut rng);
    let n = points.rows();
    let mut assignments = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iter.max(1) {
        let (changed, total) = assign(points, &centroids, metric, &mut assignments);
        history.push(total);
        if !changed && iterations > 0 {
            converged = true;
            break;
        }
        iterations += 1;
        update_centers(points, &assignments, &mut centroids, metric);
        repair_empty(points, &mut centroids, &mut assignments, metric);
    }

    Ok(KMeansFit { centroids, assignments, distortion_history: history, iterations, converged })
}

/// Index of the nearest row of `centroids`; ties go to the lowest index.
pub fn nearest(x: &[f64], centroids: &Matrix, metric: SimilarityMetric) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for j in 0..centroids.rows() {
        let d = metric.eval_f64(x, centroids.row(j));
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Sum over points of the distance to their nearest centroid.
pub fn distortion(points: &Matrix, centroids: &Matrix, metric: SimilarityMetric) -> f64 {
    (0..points.rows()).map(|i| nearest(points.row(i), centroids, metric).1).sum()
}

fn plus_plus_init(points: &Matrix, c: usize, metric: SimilarityMetric, rng: &mut ChaCha8Rng) -> Matrix {
    let n = points.rows();
    let dim = points.cols();
    let mut centroids = Matrix::zeros(c, dim);
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut weights: Vec<f64> = (0..n).map(|i| metric.eval_f64(points.row(i), points.row(first))).collect();

    for j in 1..c {
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave `acc` just short of `target`
            chosen.unwrap_or_else(|| weights.iter().rposition(|w| *w > 0.0).unwrap_or(0))
        } else {
            // every point already coincides with a center
            rng.gen_range(0..n)
        };
        centroids.row_mut(j).copy_from_slice(points.row(pick));
        for (i, w) in weights.iter_mut().enumerate() {
            *w = w.min(metric.eval_f64(points.row(i), points.row(pick)));
        }
    }
    centroids
}

fn assign(points: &Matrix, centroids: &Matrix, metric: SimilarityMetric, out: &mut [usize]) -> (bool, f64) {
    let mut changed = false;
    let mut total = 0.0;
    for (i, slot) in out.iter_mut().enumerate() {
        let (j, d) = nearest(points.row(i), centroids, metric);
        total += d;
        if *slot != j {
            *slot = j;
            changed = true;
        }
    }
    (changed, total)
}

fn update_centers(points: &Matrix, assignments: &[usize], centroids: &mut Matrix, metric: SimilarityMetric) {
    let dim = points.cols();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); centroids.rows()];
    for (i, &j) in assignments.iter().enumerate() {
        members[j].push(i);
    }
    let mut column = Vec::new();
    for (j, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        for d in 0..dim {
            column.clear();
            column.extend(idx.iter().map(|&i| points[(i, d)]));
            centroids[(j, d)] = match metric {
                SimilarityMetric::L2 => column.iter().sum::<f64>() / column.len() as f64,
                SimilarityMetric::L1 => median(&mut column),
                SimilarityMetric::Chebyshev => {
                    let (lo, hi) = column
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
                    0.5 * (lo + hi)
                }
            };
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn repair_empty(points: &Matrix, centroids: &mut Matrix, assignments: &mut [usize], metric: SimilarityMetric) {
    let mut counts = vec![0usize; centroids.rows()];
    for &j in assignments.iter() {
        counts[j] += 1;
    }
    for j in 0..centroids.rows() {
        if counts[j] > 0 {
            continue;
        }
        let mut far = (usize::MAX, 0.0);
        for (i, &owner) in assignments.iter().enumerate() {
            if counts[owner] <= 1 {
                continue;
            }
            let d = metric.eval_f64(points.row(i), centroids.row(owner));
            if d > far.1 {
                far = (i, d);
            }
        }
        if far.0 == usize::MAX {
            // remaining points already sit on their centers
            continue;
        }
        let i = far.0;
        counts[assignments[i]] -= 1;
        assignments[i] = j;
        counts[j] = 1;
        centroids.row_mut(j).copy_from_slice(points.row(i));
    }
}
