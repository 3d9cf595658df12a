//! Day clustering with seeded k-means.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RESTARTS: usize = 8;
const MAX_ITERS: usize = 100;
/// A further cluster must cut the SSE by at least this share to be kept.
const ELBOW_MIN_GAIN: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayCluster {
    pub members: BTreeSet<String>,
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sse: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (i, sq_dist(point, c)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one centroid")
}

fn plus_plus_seeds(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let weights: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = weights.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..points.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            weights
                .iter()
                .position(|w| {
                    target -= w;
                    target < 0.0
                })
                .unwrap_or(points.len() - 1)
        };
        centroids.push(points[pick].clone());
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KMeansFit {
    let dim = points[0].len();
    let mut assignments = vec![usize::MAX; points.len()];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for (p, slot) in points.iter().zip(assignments.iter_mut()) {
            let (c, _) = nearest(p, &centroids);
            if *slot != c {
                *slot = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (ci, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&assignments)
                .filter(|(_, &a)| a == ci)
                .map(|(p, _)| p)
                .collect();
            // An emptied cluster keeps its previous centroid.
            if !members.is_empty() {
                for d in 0..dim {
                    centroid[d] = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
                }
            }
        }
    }
    let sse = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum();
    KMeansFit {
        assignments,
        centroids,
        sse,
    }
}

/// Lloyd's k-means with k-means++ seeding; best of several seeded restarts.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit> {
    if points.is_empty() || k == 0 || k > points.len() {
        return Err(Error::param(format!(
            "k-means needs 1 <= k <= points ({k}, {})",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::param("k-means points differ in dimension"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..RESTARTS {
        let fit = lloyd(points, plus_plus_seeds(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| fit.sse < b.sse) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Largest admissible cluster count for `n_labels` day labels:
/// `ceil(sqrt(n / 2))`, at least 1.
pub fn max_clusters(n_labels: usize) -> usize {
    ((n_labels as f64 / 2.0).sqrt().ceil() as usize).max(1)
}

/// Clusters day labels by their daily profile.
///
/// k runs from 1 to `min(max_clusters(n_labels), labels)`; the smallest k
/// whose successor improves the SSE by less than 10% is kept.
pub fn cluster_days(
    daily_profiles: &BTreeMap<String, Vec<f64>>,
    n_labels: usize,
    seed: u64,
) -> Result<Vec<DayCluster>> {
    if daily_profiles.is_empty() {
        return Err(Error::param("no day profiles to cluster"));
    }
    let labels: Vec<&String> = daily_profiles.keys().collect();
    let points: Vec<Vec<f64>> = daily_profiles.values().cloned().collect();
    let k_max = max_clusters(n_labels).min(points.len());

    let mut chosen = kmeans(&points, 1, seed)?;
    for k in 2..=k_max {
        let next = kmeans(&points, k, seed)?;
        let gain = if chosen.sse > 0.0 {
            (chosen.sse - next.sse) / chosen.sse
        } else {
            0.0
        };
        if gain < ELBOW_MIN_GAIN {
            break;
        }
        chosen = next;
    }

    let mut clusters: Vec<DayCluster> = chosen
        .centroids
        .iter()
        .map(|c| DayCluster {
            members: BTreeSet::new(),
            centroid: c.clone(),
        })
        .collect();
    for (label, &a) in labels.iter().zip(&chosen.assignments) {
        clusters[a].members.insert((*label).clone());
    }
    clusters.retain(|c| !c.members.is_empty());
    // Stable order: by smallest member label.
    clusters.sort_by(|a, b| a.members.first().cmp(&b.members.first()));
    Ok(clusters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profiles(levels: &[(&str, f64)]) -> BTreeMap<String, Vec<f64>> {
        levels
            .iter()
            .map(|(l, v)| {
                (
                    l.to_string(),
                    (0..24).map(|h| v + (h as f64 * 0.1).sin()).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn identical_days_form_one_cluster() {
        let p = profiles(&[
            ("mon", 50.0),
            ("tue", 50.0),
            ("wed", 50.0),
            ("thu", 50.0),
            ("fri", 50.0),
            ("sat", 50.0),
            ("sun", 50.0),
        ]);
        let c = cluster_days(&p, 7, 1).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].members.len(), 7);
    }

    /// Exhaustive search over all 2-way partitions.
    fn best_two_partition(points: &[Vec<f64>]) -> (u32, f64) {
        let n = points.len();
        let mut best = (0u32, f64::INFINITY);
        for mask in 1u32..(1 << n) - 1 {
            let mut sse = 0.0;
            for side in [true, false] {
                let members: Vec<&Vec<f64>> = (0..n)
                    .filter(|i| ((mask >> i) & 1 == 1) == side)
                    .map(|i| &points[i])
                    .collect();
                let dim = members[0].len();
                let centroid: Vec<f64> = (0..dim)
                    .map(|d| members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64)
                    .collect();
                sse += members.iter().map(|m| sq_dist(m, &centroid)).sum::<f64>();
            }
            if sse < best.1 {
                best = (mask, sse);
            }
        }
        best
    }

    #[test]
    fn weekdays_and_weekend_split() {
        let p = profiles(&[
            ("fri", 100.0),
            ("mon", 100.0),
            ("sat", 10.0),
            ("sun", 10.0),
            ("thu", 100.0),
            ("tue", 100.0),
            ("wed", 100.0),
        ]);
        let points: Vec<Vec<f64>> = p.values().cloned().collect();
        let (mask, oracle_sse) = best_two_partition(&points);
        let fit = kmeans(&points, 2, 3).unwrap();
        assert!((fit.sse - oracle_sse).abs() < 1e-9);
        let same = |i: usize, j: usize| fit.assignments[i] == fit.assignments[j];
        for i in 0..points.len() {
            for j in 0..points.len() {
                assert_eq!(same(i, j), ((mask >> i) & 1) == ((mask >> j) & 1));
            }
        }

        let clusters = cluster_days(&p, 7, 3).unwrap();
        assert_eq!(clusters.len(), 2);
        let weekend: BTreeSet<String> = ["sat", "sun"].iter().map(|s| s.to_string()).collect();
        assert!(clusters.iter().any(|c| c.members == weekend));
    }

    #[test]
    fn cluster_bound_enforced() {
        assert_eq!(max_clusters(8), 2);
        assert_eq!(max_clusters(7), 2);
        assert_eq!(max_clusters(1), 1);
        assert_eq!(max_clusters(18), 3);
        // Three well separated groups, but eight labels allow only two clusters.
        let p = profiles(&[
            ("a", 0.0),
            ("b", 0.0),
            ("c", 100.0),
            ("d", 100.0),
            ("e", 200.0),
            ("f", 200.0),
            ("g", 300.0),
            ("h", 300.0),
        ]);
        let c = cluster_days(&p, 8, 0).unwrap();
        assert!(c.len() <= 2);
        let total: usize = c.iter().map(|c| c.members.len()).sum();
        assert_eq!(total, 8);
    }

    #[test]
    fn single_label_is_one_cluster() {
        let c = cluster_days(&profiles(&[("mon", 1.0)]), 1, 0).unwrap();
        assert_eq!(c.len(), 1);
    }
}
