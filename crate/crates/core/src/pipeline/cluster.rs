use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SkinnySvd};

/// k-means restarts used by [`cluster_from_z`].
pub const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITER: usize = 300;

/// `(‖Ẑ − Z₀‖/‖Z₀‖, ‖Ê − E₀‖/‖E₀‖)`, with the `Z` distance taken from the
/// factors.
pub fn relative_errors(
    e_hat: &DenseMatrix,
    z_hat: &SkinnySvd,
    e0: &DenseMatrix,
    z0: &SkinnySvd,
) -> Result<(f64, f64)> {
    if e_hat.shape() != e0.shape() || (z_hat.nrows(), z_hat.ncols()) != (z0.nrows(), z0.ncols()) {
        return Err(Error::Metric("estimate and reference shapes differ".into()));
    }
    let z_den = z0.frob_norm_sq().sqrt();
    let e_den = e0.norm();
    if z_den == 0.0 || e_den == 0.0 {
        return Err(Error::Metric("reference E or Z is zero; relative error undefined".into()));
    }
    Ok((z_hat.dist_sq(z0).sqrt() / z_den, (e_hat - e0).norm() / e_den))
}

/// Fraction of points labelled correctly under the best one-to-one matching
/// of predicted to true clusters.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Metric(format!(
            "label vectors differ in length: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Metric("no labels".into()));
    }
    let index = |labels: &[usize]| {
        let mut map = HashMap::new();
        let ids: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        (ids, map.len())
    };
    let (p, np) = index(pred);
    let (t, nt) = index(truth);
    let size = np.max(nt);
    let mut confusion = Matrix::new(size, size, 0i64);
    for (a, b) in p.iter().zip(&t) {
        confusion[(*a, *b)] += 1;
    }
    let (matched, _) = kuhn_munkres(&confusion);
    Ok(matched as f64 / pred.len() as f64)
}

/// Symmetric affinity `(|Z| + |Zᵀ|)/2`.
pub fn affinity(z: &SkinnySvd) -> DenseMatrix {
    let a = z.to_dense().abs();
    (&a + a.transpose()) * 0.5
}

/// Spectral clustering of the affinity built from `Z` into `s` groups.
///
/// Embeds each point with the eigenvectors of the `s` smallest eigenvalues
/// of `I − D^{-1/2} W D^{-1/2}`, normalizes the rows, then keeps the best of
/// [`KMEANS_RESTARTS`] seeded k-means runs.
pub fn cluster_from_z(z: &SkinnySvd, s: usize, seed: u64) -> Result<Vec<usize>> {
    let n = z.ncols();
    if z.nrows() != n {
        return Err(Error::Input(format!("Z must be square, got {}x{n}", z.nrows())));
    }
    if s < 2 {
        return Err(Error::Input(format!("need at least 2 clusters, got {s}")));
    }
    if s > n {
        return Err(Error::Input(format!("{s} clusters requested for {n} points")));
    }
    let w = affinity(z);
    let inv_sqrt: Vec<f64> = w
        .row_sum()
        .iter()
        .map(|d| if *d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    // The smallest eigenvalues of I − S are the largest of S.
    let normalized = DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * w[(i, j)] * inv_sqrt[j]);
    let eig = SymmetricEigen::new(normalized);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));

    let mut embed = DMatrix::zeros(n, s);
    for (c, &idx) in order.iter().take(s).enumerate() {
        embed.set_column(c, &eig.eigenvectors.column(idx));
    }
    for mut row in embed.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(kmeans(&embed, s, KMEANS_RESTARTS, seed))
}

/// Lloyd's algorithm with k-means++ seeding; returns the labelling with the
/// lowest within-cluster sum of squares over `restarts` runs.
pub fn kmeans(points: &DenseMatrix, k: usize, restarts: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts.max(1) {
        let (cost, labels) = lloyd(points, k, &mut rng);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, labels));
        }
    }
    best.expect("at least one restart").1
}

fn sq_dist(points: &DenseMatrix, i: usize, centers: &DenseMatrix, c: usize) -> f64 {
    (0..points.ncols())
        .map(|j| (points[(i, j)] - centers[(c, j)]).powi(2))
        .sum()
}

fn plus_plus(points: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = points.nrows();
    let mut centers = DMatrix::zeros(k, points.ncols());
    let first = rng.random_range(0..n);
    centers.set_row(0, &points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            d2.iter()
                .position(|d| {
                    target -= d;
                    target < 0.0
                })
                .unwrap_or(n - 1)
        } else {
            *(0..n).collect::<Vec<_>>().choose(rng).expect("n > 0")
        };
        centers.set_row(c, &points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &centers, c));
        }
    }
    centers
}

fn lloyd(points: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = points.nrows();
    let mut centers = plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut cost = f64::INFINITY;
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        cost = 0.0;
        for (i, label) in labels.iter_mut().enumerate() {
            let (c, d) = (0..k)
                .map(|c| (c, sq_dist(points, i, &centers, c)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("k > 0");
            cost += d;
            if *label != c {
                *label = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = DMatrix::zeros(k, points.ncols());
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            let mut row = sums.row_mut(c);
            row += points.row(i);
            counts[c] += 1;
        }
        for c in 0..k {
            // An emptied cluster keeps its old center.
            if counts[c] > 0 {
                centers.set_row(c, &(sums.row(c) / counts[c] as f64));
            }
        }
    }
    (cost, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_svd;

    fn block_diagonal(sizes: &[usize]) -> SkinnySvd {
        let n: usize = sizes.iter().sum();
        let mut z = DMatrix::zeros(n, n);
        let mut off = 0;
        for &b in sizes {
            for i in 0..b {
                for j in 0..b {
                    z[(off + i, off + j)] = 1.0 / b as f64 + 0.01 * ((i * 7 + j * 3) % 5) as f64;
                }
            }
            off += b;
        }
        let (u, sv, v) = dense_svd(&z);
        let r = sv.iter().filter(|s| **s > 1e-12).count();
        SkinnySvd::new(u.columns(0, r).into_owned(), sv[..r].to_vec(), v.columns(0, r).into_owned()).unwrap()
    }

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[5, 5, 2, 2, 9], &[0, 0, 1, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert!((accuracy(&[0, 1, 1, 2, 2, 0], &[0, 0, 1, 1, 2, 2]).unwrap() - 0.5).abs() < 1e-15);
        assert!(accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn random_labels_on_two_balanced_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth: Vec<usize> = (0..1000).map(|i| i % 2).collect();
        let mut total = 0.0;
        for _ in 0..50 {
            let pred: Vec<usize> = (0..1000).map(|_| rng.random_range(0..2)).collect();
            let a = accuracy(&pred, &truth).unwrap();
            assert!((0.4..=0.6).contains(&a), "{a}");
            total += a;
        }
        // The best matching is never below one half.
        assert!(total / 50.0 >= 0.5);
    }

    #[test]
    fn block_diagonal_z_is_recovered() {
        let z = block_diagonal(&[6, 8, 5]);
        let truth: Vec<usize> = [vec![0; 6], vec![1; 8], vec![2; 5]].concat();
        let labels = cluster_from_z(&z, 3, 1).unwrap();
        assert_eq!(accuracy(&labels, &truth).unwrap(), 1.0);
    }

    #[test]
    fn relabeling_is_equivariant_under_permutation() {
        let z = block_diagonal(&[5, 5, 5, 5]);
        let dense = z.to_dense();
        let n = dense.nrows();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let permuted = DMatrix::from_fn(n, n, |i, j| dense[(perm[i], perm[j])]);
        let (u, sv, v) = dense_svd(&permuted);
        let r = z.rank();
        let zp = SkinnySvd::new(u.columns(0, r).into_owned(), sv[..r].to_vec(), v.columns(0, r).into_owned()).unwrap();
        let a = cluster_from_z(&z, 4, 2).unwrap();
        let b = cluster_from_z(&zp, 4, 2).unwrap();
        let a_perm: Vec<usize> = perm.iter().map(|&i| a[i]).collect();
        assert_eq!(accuracy(&b, &a_perm).unwrap(), 1.0);
    }

    #[test]
    fn cluster_argument_checks() {
        let z = block_diagonal(&[2, 2]);
        assert!(cluster_from_z(&z, 1, 0).is_err());
        assert!(cluster_from_z(&z, 5, 0).is_err());
    }

    #[test]
    fn relative_error_cases() {
        let z = block_diagonal(&[3, 4]);
        let e = DMatrix::from_element(2, 7, 1.0);
        let (rz, re) = relative_errors(&e, &z, &e, &z).unwrap();
        assert!(rz < 1e-14 && re == 0.0);
        let mut z2 = z.clone();
        z2.sigma.iter_mut().for_each(|s| *s *= 2.0);
        let (rz, re) = relative_errors(&(&e * 2.0), &z2, &e, &z).unwrap();
        assert!((rz - 1.0).abs() < 1e-12 && (re - 1.0).abs() < 1e-12);
        assert!(relative_errors(&e, &z, &DMatrix::zeros(2, 7), &z).is_err());
        assert!(relative_errors(&e, &z, &e, &SkinnySvd::zero(7, 7)).is_err());
    }
}
