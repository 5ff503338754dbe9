use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::rng::seeded;

pub const RESTARTS: usize = 50;
pub const SHIFT_TOLERANCE: f64 = 1e-6;
const MAX_ITERATIONS: usize = 500;
const SILHOUETTE_TIE: f64 = 1e-12;

type Point = [f64; 4];

fn dist2(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Result of a single seeded k-means run (best of the restarts).
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub centroids: Vec<Point>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each Lloyd step of the winning restart.
    pub history: Vec<f64>,
}

fn plus_plus_init<R: Rng + ?Sized>(points: &[Point], k: usize, rng: &mut R) -> Vec<Point> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    while centroids.len() < k {
        let d: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..points.len())
        } else {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = d.iter().rposition(|x| *x > 0.0).unwrap_or(0);
            for (i, x) in d.iter().enumerate() {
                acc += x;
                if u < acc && *x > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(points[pick]);
    }
    centroids
}

fn lloyd(points: &[Point], mut centroids: Vec<Point>) -> KMeansRun {
    let k = centroids.len();
    let mut assignments = vec![0usize; points.len()];
    let mut history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        for (a, p) in assignments.iter_mut().zip(points) {
            *a = nearest(p, &centroids).0;
        }
        let mut sums = vec![[0.0; 4]; k];
        let mut counts = vec![0usize; k];
        for (a, p) in assignments.iter().zip(points) {
            counts[*a] += 1;
            for d in 0..4 {
                sums[*a][d] += p[d];
            }
        }
        let mut next = centroids.clone();
        for c in 0..k {
            if counts[c] > 0 {
                next[c] = sums[c].map(|s| s / counts[c] as f64);
            } else {
                // Re-seed an empty cluster at the point worst served by the others.
                let far = points
                    .iter()
                    .enumerate()
                    .max_by(|(i, p), (j, q)| nearest(p, &next).1.total_cmp(&nearest(q, &next).1).then(j.cmp(i)))
                    .map(|(i, _)| i)
                    .expect("non-empty input");
                next[c] = points[far];
            }
        }
        let shift = centroids.iter().zip(&next).map(|(a, b)| dist2(a, b).sqrt()).fold(0.0, f64::max);
        centroids = next;
        let inertia: f64 = points.iter().map(|p| nearest(p, &centroids).1).sum();
        history.push(inertia);
        if shift < SHIFT_TOLERANCE {
            break;
        }
    }
    for (a, p) in assignments.iter_mut().zip(points) {
        *a = nearest(p, &centroids).0;
    }
    let inertia = points.iter().zip(&assignments).map(|(p, a)| dist2(p, &centroids[*a])).sum();
    KMeansRun { centroids, assignments, inertia, history }
}

/// k-means with k-means++ seeding; the lowest-inertia restart wins.
pub fn kmeans(points: &[Point], k: usize, seed: u64, restarts: usize) -> Result<KMeansRun, AnalyticsError> {
    if k == 0 {
        return Err(AnalyticsError::Range("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(AnalyticsError::TooFewVectors { need: k, got: points.len() });
    }
    let mut rng = seeded(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut best: Option<KMeansRun> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, plus_plus_init(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Mean silhouette coefficient. Points in singleton clusters score 0.
pub fn silhouette(points: &[Point], assignments: &[usize], k: usize) -> f64 {
    let n = points.len();
    if n == 0 || k < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if i != j {
                sums[assignments[j]] += dist2(&points[i], &points[j]).sqrt();
                counts[assignments[j]] += 1;
            }
        }
        let own = assignments[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|c| *c != own && counts[*c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            continue;
        }
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub inertia: f64,
    pub silhouette: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    pub centroids: Vec<Point>,
    /// Cluster index per input vector.
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub silhouette: f64,
    /// Inertia and silhouette for every k tried, for elbow inspection.
    pub curve: Vec<CurvePoint>,
}

impl Clustering {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for a in &self.assignments {
            s[*a] += 1;
        }
        s
    }
}

/// Run k-means for every k in `k_min..=k_max` and keep the k with the
/// highest silhouette (ties: lower inertia, then smaller k). All-identical input gives k = 1.
pub fn cluster_agents(vectors: &[Point], k_min: usize, k_max: usize, seed: u64) -> Result<Clustering, AnalyticsError> {
    if k_min < 2 || k_max < k_min {
        return Err(AnalyticsError::Range(format!("k range {k_min}..={k_max}")));
    }
    if vectors.len() < k_max {
        return Err(AnalyticsError::TooFewVectors { need: k_max, got: vectors.len() });
    }
    if vectors.iter().all(|v| dist2(v, &vectors[0]) == 0.0) {
        log::warn!("all {} vectors are identical; using a single cluster", vectors.len());
        return Ok(Clustering {
            k: 1,
            centroids: vec![vectors[0]],
            assignments: vec![0; vectors.len()],
            inertia: 0.0,
            silhouette: 0.0,
            curve: Vec::new(),
        });
    }
    let mut curve = Vec::new();
    let mut best: Option<(usize, KMeansRun, f64)> = None;
    for k in k_min..=k_max {
        let run = kmeans(vectors, k, seed, RESTARTS)?;
        let s = silhouette(vectors, &run.assignments, k);
        curve.push(CurvePoint { k, inertia: run.inertia, silhouette: s });
        let better = best.as_ref().is_none_or(|b| {
            s > b.2 + SILHOUETTE_TIE || ((s - b.2).abs() <= SILHOUETTE_TIE && run.inertia < b.1.inertia)
        });
        if better {
            best = Some((k, run, s));
        }
    }
    let (k, run, s) = best.expect("non-empty k range");
    Ok(Clustering { k, centroids: run.centroids, assignments: run.assignments, inertia: run.inertia, silhouette: s, curve })
}

/// Nearest-centroid labels; equidistant vectors go to the lowest index.
pub fn project_onto_centroids(vectors: &[Point], centroids: &[Point]) -> Result<Vec<usize>, AnalyticsError> {
    if centroids.is_empty() {
        return Err(AnalyticsError::NoCentroids);
    }
    Ok(vectors.iter().map(|v| nearest(v, centroids).0).collect())
}
