//! Lloyd's k-means with k-means++ seeding.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansConfig {
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Stop once no center moves farther than this.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_restarts() -> usize {
    5
}

fn default_max_iters() -> usize {
    300
}

fn default_tol() -> f64 {
    1e-6
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: default_restarts(),
            max_iters: default_max_iters(),
            tol: default_tol(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
    /// Within-cluster sum of squared distances.
    pub wcss: f64,
    pub iterations: usize,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Best of `cfg.restarts` Lloyd runs by WCSS.
pub fn kmeans(x: ArrayView2<'_, f64>, k: usize, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k-means needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if cfg.restarts == 0 || cfg.max_iters == 0 || cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::InvalidParameter(
            "k-means restarts and max_iters must be positive and tol > 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..cfg.restarts {
        let run = lloyd(x, seed_centers(x, k, &mut rng), cfg);
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// k-means++: first center uniform, then proportional to squared distance
/// from the closest chosen center.
fn seed_centers<R: Rng>(x: ArrayView2<'_, f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&x.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(first))).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in closest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the running sum
            chosen.unwrap_or_else(|| {
                closest
                    .iter()
                    .rposition(|&d| d > 0.0)
                    .expect("positive mass")
            })
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, d) in closest.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(pick)));
        }
    }
    centers
}

fn assign(x: ArrayView2<'_, f64>, centers: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let mut labels = Vec::with_capacity(x.nrows());
    let mut dists = Vec::with_capacity(x.nrows());
    for row in x.rows() {
        let (best, d) = centers
            .rows()
            .into_iter()
            .map(|c| sq_dist(row, c))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (j, d)| if d < acc.1 { (j, d) } else { acc },
            );
        labels.push(best);
        dists.push(d);
    }
    (labels, dists)
}

/// Gives every empty cluster the point farthest from its own center.
fn repair_empty(
    labels: &mut [usize],
    dists: &mut [f64],
    centers: &mut Array2<f64>,
    x: ArrayView2<'_, f64>,
) {
    let k = centers.nrows();
    loop {
        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let donor = (0..labels.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
            .expect("k <= n leaves a cluster with more than one point");
        labels[donor] = empty;
        dists[donor] = 0.0;
        centers.row_mut(empty).assign(&x.row(donor));
    }
}

fn lloyd(x: ArrayView2<'_, f64>, mut centers: Array2<f64>, cfg: &KMeansConfig) -> KMeansResult {
    let (n, d) = x.dim();
    let k = centers.nrows();
    let mut prev_wcss = f64::INFINITY;
    let mut iterations = 0;
    let (mut labels, mut dists) = assign(x, &centers);
    loop {
        repair_empty(&mut labels, &mut dists, &mut centers, x);
        let wcss: f64 = dists.iter().sum();
        debug_assert!(
            wcss <= prev_wcss + 1e-9 * prev_wcss.abs().max(1.0),
            "k-means WCSS increased from {prev_wcss} to {wcss}"
        );
        prev_wcss = wcss;
        iterations += 1;

        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let mut s = sums.row_mut(labels[i]);
            s += &x.row(i);
            counts[labels[i]] += 1;
        }
        let mut shift = 0.0f64;
        for (c, &count) in counts.iter().enumerate() {
            let mean = &sums.row(c) / count as f64;
            shift = shift.max(sq_dist(mean.view(), centers.row(c)).sqrt());
            centers.row_mut(c).assign(&mean);
        }
        let (new_labels, new_dists) = assign(x, &centers);
        labels = new_labels;
        dists = new_dists;
        if shift < cfg.tol || iterations >= cfg.max_iters {
            repair_empty(&mut labels, &mut dists, &mut centers, x);
            let wcss: f64 = dists.iter().sum();
            debug_assert!(wcss <= prev_wcss + 1e-9 * prev_wcss.abs().max(1.0));
            return KMeansResult {
                labels,
                centers,
                wcss,
                iterations,
            };
        }
    }
}
