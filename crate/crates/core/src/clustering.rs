//! Distribution center selection by k-medoids over a hospital distance matrix.
//!
//! The k-medoids loop alternates two steps until the medoid set stops
//! changing: assign every point to its nearest medoid, then move each
//! medoid to the cluster member with the smallest total distance to the
//! rest of its cluster. The number of centers is chosen by sweeping k over
//! `[2, n - 1]` and keeping the best mean silhouette.
//!
//! All ties are broken by the lowest index.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VdmError};
use crate::model::DistanceMatrix;

/// Upper bound on assign/update rounds. Equal-cost ties can in principle
/// make the update step oscillate; the bound keeps such inputs finite.
pub const MAX_ITERATIONS: usize = 500;

pub const DEFAULT_RESTARTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    /// Sorted, distinct indices into the candidate set.
    pub medoid_indices: Vec<usize>,
    /// For each candidate, the index of its medoid.
    pub labels: Vec<usize>,
    pub k: usize,
    pub silhouette: f64,
    pub iterations: usize,
    /// Total distance from every point to its medoid.
    pub cost: f64,
}

/// How the starting medoid sets are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initialization {
    /// `restarts` uniformly random medoid sets from a seeded generator.
    Random { restarts: usize },
    /// Every k-subset of the candidates, in lexicographic order.
    Exhaustive,
}

/// Labels every point with its nearest medoid.
pub fn assign_to_medoids(dist: &DistanceMatrix, medoids: &[usize]) -> Result<Vec<usize>> {
    check_medoids(dist, medoids)?;
    let mut sorted = medoids.to_vec();
    sorted.sort_unstable();
    Ok(nearest(dist, &sorted))
}

/// Expects `medoids` sorted ascending so that strict `<` implements the
/// lowest-index tie-break.
fn nearest(dist: &DistanceMatrix, medoids: &[usize]) -> Vec<usize> {
    (0..dist.len())
        .map(|a| {
            if medoids.binary_search(&a).is_ok() {
                return a;
            }
            let mut best = medoids[0];
            let mut best_d = dist.get(a, best);
            for &m in &medoids[1..] {
                let d = dist.get(a, m);
                if d < best_d {
                    best = m;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

fn check_medoids(dist: &DistanceMatrix, medoids: &[usize]) -> Result<()> {
    if medoids.is_empty() {
        return Err(VdmError::invalid("medoid list is empty"));
    }
    let mut seen = vec![false; dist.len()];
    for &m in medoids {
        if m >= dist.len() {
            return Err(VdmError::invalid(format!(
                "medoid {m} out of range for {} points",
                dist.len()
            )));
        }
        if std::mem::replace(&mut seen[m], true) {
            return Err(VdmError::invalid(format!("medoid {m} listed twice")));
        }
    }
    Ok(())
}

/// For every cluster in `labels`, the member with the smallest summed
/// distance to the other members. Returned sorted ascending.
pub fn update_medoids(dist: &DistanceMatrix, labels: &[usize]) -> Vec<usize> {
    let mut clusters: Vec<usize> = labels.to_vec();
    clusters.sort_unstable();
    clusters.dedup();

    let mut out: Vec<usize> = clusters
        .iter()
        .map(|&c| {
            let members: Vec<usize> = (0..labels.len()).filter(|&a| labels[a] == c).collect();
            let mut best = members[0];
            let mut best_sum = f64::INFINITY;
            for &q in &members {
                let s: f64 = members.iter().map(|&o| dist.get(q, o)).sum();
                if s < best_sum {
                    best = q;
                    best_sum = s;
                }
            }
            best
        })
        .collect();
    out.sort_unstable();
    out
}

fn total_cost(dist: &DistanceMatrix, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(a, &m)| dist.get(a, m))
        .sum()
}

/// Runs the assign/update loop from one starting medoid set.
fn refine(dist: &DistanceMatrix, start: Vec<usize>) -> (Vec<usize>, Vec<usize>, usize) {
    let mut medoids = start;
    medoids.sort_unstable();
    let mut labels = nearest(dist, &medoids);
    let mut iterations = 1;
    while iterations < MAX_ITERATIONS {
        let next = update_medoids(dist, &labels);
        if next == medoids {
            break;
        }
        medoids = next;
        labels = nearest(dist, &medoids);
        iterations += 1;
    }
    (medoids, labels, iterations)
}

fn check_k(dist: &DistanceMatrix, k: usize) -> Result<()> {
    let n = dist.len();
    if k < 2 || k + 1 > n {
        return Err(VdmError::invalid(format!(
            "k = {k} outside [2, n - 1] for n = {n}"
        )));
    }
    Ok(())
}

/// k-medoids with seeded random restarts; keeps the lowest-cost run.
pub fn k_medoids(
    dist: &DistanceMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusteringResult> {
    k_medoids_with(dist, k, Initialization::Random { restarts }, seed)
}

pub fn k_medoids_with(
    dist: &DistanceMatrix,
    k: usize,
    init: Initialization,
    seed: u64,
) -> Result<ClusteringResult> {
    check_k(dist, k)?;
    let starts: Vec<Vec<usize>> = match init {
        Initialization::Random { restarts } => {
            if restarts == 0 {
                return Err(VdmError::invalid("restarts must be positive"));
            }
            (0..restarts as u64)
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(r);
                    sample(&mut rng, dist.len(), k).into_vec()
                })
                .collect()
        }
        Initialization::Exhaustive => combinations(dist.len(), k),
    };

    let runs: Vec<(f64, Vec<usize>, Vec<usize>, usize)> = starts
        .into_par_iter()
        .map(|s| {
            let (m, l, it) = refine(dist, s);
            (total_cost(dist, &l), m, l, it)
        })
        .collect();

    // First minimum in start order.
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 < runs[best].0 {
            best = i;
        }
    }
    let (cost, medoid_indices, labels, iterations) = runs.into_iter().nth(best).expect("k >= 2");
    let silhouette = silhouette_score(dist, &labels)?;
    Ok(ClusteringResult {
        medoid_indices,
        labels,
        k,
        silhouette,
        iterations,
        cost,
    })
}

/// All k-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Mean silhouette over all points; singleton clusters contribute 0.
pub fn silhouette_score(dist: &DistanceMatrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != dist.len() {
        return Err(VdmError::invalid(format!(
            "{} labels for {} points",
            labels.len(),
            dist.len()
        )));
    }
    let mut clusters: Vec<usize> = labels.to_vec();
    clusters.sort_unstable();
    clusters.dedup();
    if clusters.len() < 2 {
        return Err(VdmError::invalid("silhouette needs at least two clusters"));
    }
    let slot = |label: usize| clusters.binary_search(&label).expect("label listed");
    let mut sizes = vec![0usize; clusters.len()];
    for &l in labels {
        sizes[slot(l)] += 1;
    }

    let n = labels.len();
    let mut total = 0.0;
    let mut sums = vec![0.0; clusters.len()];
    for a in 0..n {
        let own = slot(labels[a]);
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for b in 0..n {
            sums[slot(labels[b])] += dist.get(a, b);
        }
        let cohesion = sums[own] / (sizes[own] - 1) as f64;
        let separation = (0..clusters.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = cohesion.max(separation);
        if denom > 0.0 {
            total += (separation - cohesion) / denom;
        }
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteRow {
    pub k: usize,
    pub silhouette: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    pub table: Vec<SilhouetteRow>,
    pub best: ClusteringResult,
}

/// Sweeps k over `[2, n - 1]` and keeps the highest mean silhouette,
/// preferring the smallest k on ties.
pub fn select_optimal_k(dist: &DistanceMatrix, seed: u64, restarts: usize) -> Result<KSelection> {
    let n = dist.len();
    if n < 3 {
        return Err(VdmError::invalid(format!(
            "need at least 3 candidates to sweep k, got {n}"
        )));
    }
    let runs: Vec<ClusteringResult> = (2..n)
        .into_par_iter()
        .map(|k| k_medoids(dist, k, seed, restarts))
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.silhouette > runs[best].silhouette {
            best = i;
        }
    }
    let table = runs
        .iter()
        .map(|r| SilhouetteRow {
            k: r.k,
            silhouette: r.silhouette,
            cost: r.cost,
        })
        .collect();
    let best = runs.into_iter().nth(best).expect("n >= 3");
    Ok(KSelection {
        k: best.k,
        table,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DistanceMatrix {
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 0.0)).collect();
        DistanceMatrix::from_points(&pts)
    }

    fn two_pairs() -> DistanceMatrix {
        DistanceMatrix::from_rows(vec![
            vec![0.0, 1.0, 100.0, 100.0],
            vec![1.0, 0.0, 100.0, 100.0],
            vec![100.0, 100.0, 0.0, 1.0],
            vec![100.0, 100.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn nearest_medoid_on_a_line() {
        let d = line(&[0.0, 1.0, 10.0]);
        assert_eq!(assign_to_medoids(&d, &[0, 2]).unwrap(), vec![0, 0, 2]);
        assert_eq!(assign_to_medoids(&d, &[2, 1, 0]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn equidistant_point_goes_to_lower_medoid() {
        let d = line(&[0.0, -1.0, 5.0, 6.0, 1.0]);
        // point 0 is 1 away from both medoid 1 and medoid 4
        assert_eq!(assign_to_medoids(&d, &[4, 1]).unwrap()[0], 1);
    }

    #[test]
    fn bad_medoid_lists() {
        let d = line(&[0.0, 1.0, 2.0]);
        assert!(assign_to_medoids(&d, &[]).is_err());
        assert!(assign_to_medoids(&d, &[0, 0]).is_err());
        assert!(assign_to_medoids(&d, &[3]).is_err());
    }

    #[test]
    fn update_picks_min_sum_member() {
        let d = line(&[0.0, 1.0]);
        assert_eq!(update_medoids(&d, &[0, 0]), vec![0]);
        assert_eq!(update_medoids(&d, &[1, 1]), vec![0]);
        let d = line(&[0.0, 1.0, 10.0]);
        assert_eq!(update_medoids(&d, &[0, 0, 0]), vec![1]);
        let d = line(&[0.0, 1.0, 2.0, 3.0, 4.0, 50.0]);
        assert_eq!(update_medoids(&d, &[0, 0, 0, 0, 0, 5]), vec![2, 5]);
    }

    #[test]
    fn two_pairs_cluster_pairwise() {
        let r = k_medoids(&two_pairs(), 2, 1, 8).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[2], r.labels[3]);
        assert_ne!(r.labels[0], r.labels[2]);
        assert_eq!(r.cost, 2.0);
        assert!(r.silhouette >= 0.95);
    }

    #[test]
    fn k_out_of_range() {
        let d = two_pairs();
        assert!(k_medoids(&d, 1, 0, 1).is_err());
        assert!(k_medoids(&d, 4, 0, 1).is_err());
        assert!(k_medoids(&d, 2, 0, 0).is_err());
    }

    #[test]
    fn k_n_minus_one_gives_small_clusters() {
        let d = line(&[0.0, 3.0, 4.0, 9.0, 20.0]);
        let r = k_medoids(&d, 4, 3, 4).unwrap();
        for &m in &r.medoid_indices {
            assert!(r.labels.iter().filter(|&&l| l == m).count() <= 2);
            assert_eq!(r.labels[m], m);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let d = line(&[0.0, 3.0, 4.0, 9.0, 20.0, 21.0, 7.5]);
        assert_eq!(
            k_medoids(&d, 3, 9, 5).unwrap(),
            k_medoids(&d, 3, 9, 5).unwrap()
        );
    }

    #[test]
    fn silhouette_edge_cases() {
        let d = two_pairs();
        let good = silhouette_score(&d, &[0, 0, 2, 2]).unwrap();
        assert!((good - 0.99).abs() < 1e-12);
        assert_eq!(silhouette_score(&d, &[0, 1, 2, 3]).unwrap(), 0.0);
        assert!(silhouette_score(&d, &[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn swapped_point_has_negative_silhouette() {
        // point 1 labelled with the far pair: a = 100, b = 1
        let d = two_pairs();
        let labels = [0, 2, 2, 2];
        let total = silhouette_score(&d, &labels).unwrap();
        // point 0 is a singleton (0), point 1: (1 - 100)/100, points 2,3: a=(1+100)/2, b=100
        let expected = (0.0 + (1.0 - 100.0) / 100.0 + 2.0 * ((100.0 - 50.5) / 100.0)) / 4.0;
        assert!((total - expected).abs() < 1e-12);
    }

    #[test]
    fn combinations_enumerate_subsets() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(5, 3)[0], vec![0, 1, 2]);
        assert_eq!(combinations(5, 3).last().unwrap(), &vec![2, 3, 4]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn select_k_two_pairs() {
        let s = select_optimal_k(&two_pairs(), 0, 4).unwrap();
        assert_eq!(s.k, 2);
        assert_eq!(s.table.len(), 2);
    }

    #[test]
    fn select_k_ties_prefer_smallest() {
        let mut rows = vec![vec![1.0; 4]; 4];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = 0.0;
        }
        let s = select_optimal_k(&DistanceMatrix::from_rows(rows).unwrap(), 0, 4).unwrap();
        assert_eq!(s.table[0].silhouette, s.table[1].silhouette);
        assert_eq!(s.k, 2);
    }

    #[test]
    fn select_k_needs_three_points() {
        let d = line(&[0.0, 1.0]);
        assert!(select_optimal_k(&d, 0, 1).is_err());
    }
}
