// SPDX-License-Identifier: Apache-2.0

//! Toy classification tasks.

use lutdla_core::Matrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, TrainError};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(x: Matrix, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if x.rows() != labels.len() {
            return Err(TrainError::Config(format!("{} rows but {} labels", x.rows(), labels.len())));
        }
        if labels.iter().any(|&l| l >= classes) {
            return Err(TrainError::Config("label out of range".into()));
        }
        Ok(Self { x, labels, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let x = Matrix::from_fn(idx.len(), self.x.cols(), |r, c| self.x[(idx[r], c)]);
        Dataset { x, labels: idx.iter().map(|&i| self.labels[i]).collect(), classes: self.classes }
    }

    /// Deterministic shuffled split; the first part holds `fraction` of the rows.
    pub fn split(&self, fraction: f64, seed: u64) -> (Dataset, Dataset) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((self.len() as f64) * fraction).round() as usize;
        (self.subset(&idx[..cut]), self.subset(&idx[cut..]))
    }
}

/// Two interleaving half circles with Gaussian noise.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise.max(0.0)).unwrap();
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let t = rng.gen_range(0.0..std::f64::consts::PI);
        let (x, y) = if label == 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
        data.push(x + jitter.sample(&mut rng));
        data.push(y + jitter.sample(&mut rng));
        labels.push(label);
    }
    Dataset { x: Matrix::from_vec(n, 2, data).unwrap(), labels, classes: 2 }
}

const DIGITS_CSV: &str = include_str!("../data/digits.csv");

/// 8×8 handwritten digits (UCI optical recognition set), pixels scaled to
/// `[0, 1]`, restricted to the given classes and relabeled `0..classes.len()`.
pub fn digits(classes: &[usize]) -> Dataset {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for line in DIGITS_CSV.lines() {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        let label = fields[64] as usize;
        if let Some(pos) = classes.iter().position(|&c| c == label) {
            data.extend(fields[..64].iter().map(|p| p / 16.0));
            labels.push(pos);
        }
    }
    let rows = labels.len();
    Dataset { x: Matrix::from_vec(rows, 64, data).unwrap(), labels, classes: classes.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moons_are_balanced_and_reproducible() {
        let a = two_moons(100, 0.1, 3);
        assert_eq!(a.labels.iter().filter(|&&l| l == 1).count(), 50);
        assert_eq!(a, two_moons(100, 0.1, 3));
        assert_ne!(a, two_moons(100, 0.1, 4));
    }

    #[test]
    fn digits_subset() {
        let d = digits(&[0, 1]);
        assert_eq!(d.features(), 64);
        assert_eq!(d.classes, 2);
        assert!(d.len() > 300);
        assert!(d.x.as_slice().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn split_partitions_rows() {
        let d = two_moons(50, 0.1, 1);
        let (a, b) = d.split(0.8, 9);
        assert_eq!((a.len(), b.len()), (40, 10));
    }
}
