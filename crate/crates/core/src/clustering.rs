//! Z-score standardization, k-means (k-means++ seeding, Lloyd iterations,
//! best of several restarts) and silhouette-based choice of `k`.
//!
//! Points are rows (`Vec<f64>`); distances are Euclidean.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use thiserror::Error;

use crate::math::sqrt;
use crate::seed;

pub type Point = Vec<f64>;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("rows have inconsistent lengths")]
    RaggedRows,
    #[error("feature {column} has zero variance")]
    DegenerateFeature { column: usize },
    #[error("k = {k} is infeasible for {distinct} distinct points")]
    InvalidK { k: usize, distinct: usize },
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },
    #[error("{points} points but {labels} labels")]
    LengthMismatch { points: usize, labels: usize },
    #[error("no candidate k values given")]
    EmptyCandidates,
    #[error("max_iter and restarts must be >= 1")]
    InvalidIterations,
}

/// Per-feature mean and sample (n - 1) standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationParams {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_feature(&self, feature: usize, x: f64) -> f64 {
        (x - self.mean[feature]) / self.std[feature]
    }

    pub fn invert_feature(&self, feature: usize, z: f64) -> f64 {
        z * self.std[feature] + self.mean[feature]
    }

    pub fn apply(&self, row: &[f64]) -> Point {
        row.iter()
            .enumerate()
            .map(|(j, &x)| self.apply_feature(j, x))
            .collect()
    }

    pub fn invert(&self, row: &[f64]) -> Point {
        row.iter()
            .enumerate()
            .map(|(j, &z)| self.invert_feature(j, z))
            .collect()
    }

    /// Parameters for a subset of features, in the given order.
    pub fn select(&self, features: &[usize]) -> StandardizationParams {
        StandardizationParams {
            mean: features.iter().map(|&j| self.mean[j]).collect(),
            std: features.iter().map(|&j| self.std[j]).collect(),
        }
    }
}

fn check_rows(data: &[Point], needed: usize) -> Result<usize, ClusterError> {
    if data.len() < needed {
        return Err(ClusterError::TooFewRows {
            needed,
            got: data.len(),
        });
    }
    let dims = data[0].len();
    if dims == 0 || data.iter().any(|r| r.len() != dims) {
        return Err(ClusterError::RaggedRows);
    }
    Ok(dims)
}

/// Column-wise z-scores of `data`.
pub fn standardize(data: &[Point]) -> Result<(Vec<Point>, StandardizationParams), ClusterError> {
    let dims = check_rows(data, 2)?;
    let n = data.len() as f64;
    let mut mean = vec![0.0; dims];
    let mut std = vec![0.0; dims];
    for j in 0..dims {
        let m = data.iter().map(|r| r[j]).sum::<f64>() / n;
        let ss: f64 = data.iter().map(|r| (r[j] - m) * (r[j] - m)).sum();
        let s = sqrt(ss / (n - 1.0));
        if !(s > 0.0 && s.is_finite()) {
            return Err(ClusterError::DegenerateFeature { column: j });
        }
        mean[j] = m;
        std[j] = s;
    }
    let params = StandardizationParams { mean, std };
    let out = data.iter().map(|r| params.apply(r)).collect();
    Ok((out, params))
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    sqrt(sq_dist(a, b))
}

fn distinct_count(data: &[Point]) -> usize {
    let mut rows: Vec<&Point> = data.iter().collect();
    let cmp = |a: &&Point, b: &&Point| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    };
    rows.sort_by(cmp);
    rows.dedup_by(|a, b| cmp(&&**a, &&**b) == Ordering::Equal);
    rows.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Independent k-means++ starts; the lowest objective wins.
    pub restarts: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            max_iter: 300,
            restarts: 10,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    /// Centroids in the (standardized) feature space that was clustered.
    pub centroids: Vec<Point>,
    pub assignments: Vec<usize>,
    /// Intra-cluster sum of squared distances to the centroids.
    pub objective: f64,
    /// Objective after each Lloyd update of the winning restart.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    /// Number of empty-cluster repairs performed in the winning restart.
    pub repairs: usize,
    pub standardization: Option<StandardizationParams>,
}

impl ClusterModel {
    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn nearest(&self, point: &[f64]) -> usize {
        nearest(&self.centroids, point).0
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn with_standardization(mut self, params: StandardizationParams) -> Self {
        self.standardization = Some(params);
        self
    }
}

fn nearest(centroids: &[Point], point: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, point);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Sum of squared distances from each point to the centroid of its cluster.
pub fn objective(data: &[Point], centroids: &[Point], assignments: &[usize]) -> f64 {
    data.iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

fn assign(data: &[Point], centroids: &[Point]) -> Vec<usize> {
    data.iter().map(|p| nearest(centroids, p).0).collect()
}

fn means(data: &[Point], assignments: &[usize], previous: &[Point]) -> Vec<Point> {
    let dims = data[0].len();
    let mut sums = vec![vec![0.0; dims]; previous.len()];
    let mut counts = vec![0usize; previous.len()];
    for (p, &a) in data.iter().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((s, c), prev)| {
            if c == 0 {
                prev.clone()
            } else {
                s.into_iter().map(|x| x / c as f64).collect()
            }
        })
        .collect()
}

/// Moves each empty cluster's centroid onto the point farthest from its own
/// centroid, then reassigns. Returns the number of repairs.
fn repair_empty(data: &[Point], centroids: &mut [Point], assignments: &mut Vec<usize>) -> usize {
    let k = centroids.len();
    let mut repairs = 0;
    for _ in 0..k {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            break;
        };
        let mut far = (0, -1.0);
        for (i, p) in data.iter().enumerate() {
            if counts[assignments[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[assignments[i]]);
            if d > far.1 {
                far = (i, d);
            }
        }
        log::warn!(
            "k-means: cluster {empty} emptied; reseeding at point {} (distance^2 {})",
            far.0,
            far.1
        );
        centroids[empty] = data[far.0].clone();
        *assignments = assign(data, centroids);
        repairs += 1;
    }
    repairs
}

fn plus_plus_seeds<R: Rng>(data: &[Point], k: usize, rng: &mut R) -> Vec<Point> {
    let n = data.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(data[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = data.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    idx = i;
                    break;
                }
                r -= w;
            }
            // guard against rounding landing on a zero-weight tail
            if d2[idx] == 0.0 {
                idx = d2.iter().rposition(|&w| w > 0.0).unwrap_or(idx);
            }
            idx
        } else {
            rng.gen_range(0..n)
        };
        let c = data[pick].clone();
        for (w, p) in d2.iter_mut().zip(data) {
            *w = w.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd<R: Rng>(data: &[Point], k: usize, max_iter: usize, rng: &mut R) -> ClusterModel {
    let centroids = plus_plus_seeds(data, k, rng);
    iterate(data, centroids, max_iter)
}

/// Lloyd iterations from the given centroids until the assignments stop
/// changing or `max_iter` updates have run.
fn iterate(data: &[Point], mut centroids: Vec<Point>, max_iter: usize) -> ClusterModel {
    let k = centroids.len();
    let mut history = Vec::new();
    let mut repairs = 0;
    let mut previous: Option<Vec<usize>> = None;
    let mut iterations = 0;
    for _ in 0..max_iter {
        let mut labels = assign(data, &centroids);
        repairs += repair_empty(data, &mut centroids, &mut labels);
        if previous.as_ref() == Some(&labels) {
            break;
        }
        centroids = means(data, &labels, &centroids);
        history.push(objective(data, &centroids, &labels));
        previous = Some(labels);
        iterations += 1;
    }
    let mut assignments = assign(data, &centroids);
    repairs += repair_empty(data, &mut centroids, &mut assignments);
    let v = objective(data, &centroids, &assignments);
    if history.last().is_none_or(|&last| v < last) {
        history.push(v);
    }
    ClusterModel {
        k,
        centroids,
        assignments,
        objective: v,
        objective_history: history,
        iterations,
        repairs,
        standardization: None,
    }
}

/// Continues Lloyd iterations from existing centroids (used after clusters
/// are merged).
pub fn refine(
    data: &[Point],
    centroids: Vec<Point>,
    max_iter: usize,
) -> Result<ClusterModel, ClusterError> {
    let dims = check_rows(data, 1)?;
    if centroids.is_empty() || centroids.iter().any(|c| c.len() != dims) {
        return Err(ClusterError::RaggedRows);
    }
    if max_iter == 0 {
        return Err(ClusterError::InvalidIterations);
    }
    Ok(iterate(data, centroids, max_iter))
}

/// Best-of-`restarts` k-means on already standardized rows.
pub fn kmeans(data: &[Point], config: &KMeansConfig) -> Result<ClusterModel, ClusterError> {
    check_rows(data, 1)?;
    if config.max_iter == 0 || config.restarts == 0 {
        return Err(ClusterError::InvalidIterations);
    }
    let distinct = distinct_count(data);
    if config.k == 0 || config.k > distinct {
        return Err(ClusterError::InvalidK {
            k: config.k,
            distinct,
        });
    }
    let mut rng = seed::rng(config.seed);
    let mut best: Option<ClusterModel> = None;
    for _ in 0..config.restarts {
        let run = lloyd(data, config.k, config.max_iter, &mut rng);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Silhouette {
    pub scores: Vec<f64>,
    pub mean: f64,
}

/// `s(i) = (b - a) / max(a, b)`; points in singleton clusters score 0.
pub fn silhouette(data: &[Point], assignments: &[usize]) -> Result<Silhouette, ClusterError> {
    if data.len() != assignments.len() {
        return Err(ClusterError::LengthMismatch {
            points: data.len(),
            labels: assignments.len(),
        });
    }
    check_rows(data, 1)?;
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(ClusterError::SingleCluster);
    }
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if let Some(cluster) = sizes.iter().position(|&s| s == 0) {
        return Err(ClusterError::EmptyCluster { cluster });
    }
    let mut scores = Vec::with_capacity(data.len());
    let mut sums = vec![0.0; k];
    for (i, p) in data.iter().enumerate() {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (j, q) in data.iter().enumerate() {
            if i != j {
                sums[assignments[j]] += distance(p, q);
            }
        }
        let own = assignments[i];
        if sizes[own] == 1 {
            scores.push(0.0);
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        scores.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok(Silhouette { scores, mean })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KScore {
    pub k: usize,
    pub mean_silhouette: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KSelection {
    pub k: usize,
    /// One row per candidate, ascending in `k`.
    pub table: Vec<KScore>,
}

/// Picks the candidate `k` with the highest mean silhouette; ties go to the
/// smaller `k`.
pub fn select_k(
    data: &[Point],
    candidates: &[usize],
    seed: u64,
) -> Result<KSelection, ClusterError> {
    if candidates.is_empty() {
        return Err(ClusterError::EmptyCandidates);
    }
    let mut ks = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut table = Vec::with_capacity(ks.len());
    for &k in &ks {
        let model = kmeans(data, &KMeansConfig::new(k, seed))?;
        let s = silhouette(data, &model.assignments)?;
        table.push(KScore {
            k,
            mean_silhouette: s.mean,
            objective: model.objective,
        });
    }
    let mut best = table[0];
    for row in &table[1..] {
        if row.mean_silhouette > best.mean_silhouette {
            best = *row;
        }
    }
    Ok(KSelection { k: best.k, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn standardize_small_column() {
        let (z, p) = standardize(&col(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(z, col(&[-1.0, 0.0, 1.0]));
        assert_eq!((p.mean[0], p.std[0]), (2.0, 1.0));
    }

    #[test]
    fn standardize_is_idempotent() {
        let (z, _) = standardize(&col(&[3.0, -1.0, 4.0, 1.0, 5.0])).unwrap();
        let (z2, p2) = standardize(&z).unwrap();
        assert!(p2.mean[0].abs() < 1e-12 && (p2.std[0] - 1.0).abs() < 1e-12);
        for (a, b) in z.iter().zip(&z2) {
            assert!((a[0] - b[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let data = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
        assert_eq!(
            standardize(&data).unwrap_err(),
            ClusterError::DegenerateFeature { column: 1 }
        );
        assert!(matches!(
            standardize(&col(&[1.0])),
            Err(ClusterError::TooFewRows { .. })
        ));
    }

    #[test]
    fn kmeans_two_groups_on_a_line() {
        let model = kmeans(&col(&[0.0, 1.0, 9.0, 10.0]), &KMeansConfig::new(2, 1)).unwrap();
        let mut c: Vec<f64> = model.centroids.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, [0.5, 9.5]);
        assert!((model.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_single_cluster_is_the_mean() {
        let data = col(&[1.0, 2.0, 3.0, 10.0]);
        let model = kmeans(&data, &KMeansConfig::new(1, 3)).unwrap();
        assert!((model.centroids[0][0] - 4.0).abs() < 1e-12);
        // sum of squared deviations = (n - 1) * sample variance
        assert!((model.objective - 50.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_one_cluster_per_point() {
        let data = vec![
            vec![0.0, 0.0],
            vec![1.0, 3.0],
            vec![-2.0, 1.0],
            vec![4.0, 4.0],
        ];
        let model = kmeans(&data, &KMeansConfig::new(4, 9)).unwrap();
        assert_eq!(model.objective, 0.0);
        assert_eq!(model.cluster_sizes(), [1, 1, 1, 1]);
    }

    #[test]
    fn kmeans_rejects_too_many_clusters() {
        let data = col(&[1.0, 1.0, 2.0]);
        assert_eq!(
            kmeans(&data, &KMeansConfig::new(3, 0)).unwrap_err(),
            ClusterError::InvalidK { k: 3, distinct: 2 }
        );
    }

    #[test]
    fn kmeans_is_deterministic_per_seed() {
        let data: Vec<Point> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 1.1).cos()])
            .collect();
        let a = kmeans(&data, &KMeansConfig::new(3, 42)).unwrap();
        let b = kmeans(&data, &KMeansConfig::new(3, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_cluster_is_repaired() {
        let data = col(&[0.0, 0.1, 0.2, 10.0]);
        let mut centroids = col(&[0.1, 50.0, 10.0]);
        let mut labels = assign(&data, &centroids);
        assert_eq!(labels, [0, 0, 0, 2]);
        let repairs = repair_empty(&data, &mut centroids, &mut labels);
        assert_eq!(repairs, 1);
        assert!(labels.contains(&1));
    }

    #[test]
    fn silhouette_hand_case() {
        let s = silhouette(&col(&[0.0, 1.0, 9.0, 10.0]), &[0, 0, 1, 1]).unwrap();
        assert!((s.scores[0] - 8.5 / 9.5).abs() < 1e-12);
    }

    #[test]
    fn silhouette_of_coincident_clusters_is_zero() {
        let s = silhouette(&col(&[1.0, 1.0, 1.0, 1.0]), &[0, 1, 0, 1]).unwrap();
        assert!(s.scores.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn silhouette_singleton_and_errors() {
        let s = silhouette(&col(&[0.0, 1.0, 9.0]), &[0, 0, 1]).unwrap();
        assert_eq!(s.scores[2], 0.0);
        assert_eq!(
            silhouette(&col(&[0.0, 1.0]), &[0, 0]).unwrap_err(),
            ClusterError::SingleCluster
        );
        assert_eq!(
            silhouette(&col(&[0.0, 1.0]), &[0, 2]).unwrap_err(),
            ClusterError::EmptyCluster { cluster: 1 }
        );
    }

    #[test]
    fn select_k_single_candidate() {
        let data = col(&[0.0, 0.2, 5.0, 5.1, 9.0, 9.3]);
        let sel = select_k(&data, &[2], 5).unwrap();
        assert_eq!(sel.k, 2);
        assert_eq!(sel.table.len(), 1);
        assert_eq!(
            select_k(&data, &[], 5).unwrap_err(),
            ClusterError::EmptyCandidates
        );
    }
}
