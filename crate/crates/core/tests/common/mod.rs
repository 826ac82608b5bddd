#![allow(dead_code)]

pub mod bench;
pub mod brute;
pub mod dd;
pub mod oracle;

use mlkit::losses::{ClassWeights, LossConfig, LossKind};
use mlkit::{EmbeddingBatch, LabelVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use dd::Dd;

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const MAGNITUDE_FLOOR: f64 = 1e-8;
pub const KINK_GUARD: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

/// Labels drawn from `0..classes` until at least two classes appear.
pub fn labels(rng: &mut ChaCha8Rng, n: usize, classes: u64) -> LabelVector {
    loop {
        let raw: Vec<u64> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let first = raw[0];
        if raw.iter().any(|&l| l != first) {
            return LabelVector::from_raw(raw);
        }
    }
}

/// Central difference of `f` at every entry of `x`.
pub fn central_difference(x: &Array2<f64>, h: f64, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut out = Array2::zeros(x.dim());
    for ((i, j), slot) in out.indexed_iter_mut() {
        let mut plus = x.clone();
        plus[[i, j]] += h;
        let mut minus = x.clone();
        minus[[i, j]] -= h;
        *slot = (f(&plus) - f(&minus)) / (2.0 * h);
    }
    out
}

/// Worst componentwise relative error over components whose magnitude
/// exceeds the floor, with the offending index.
pub fn worst_relative_error(
    analytic: &Array2<f64>,
    numeric: &Array2<f64>,
) -> (f64, Option<(usize, usize)>) {
    let mut worst = (0.0, None);
    for ((idx, a), n) in analytic.indexed_iter().zip(numeric.iter()) {
        let scale = a.abs().max(n.abs());
        if scale <= MAGNITUDE_FLOOR {
            continue;
        }
        let rel = (a - n).abs() / scale;
        if rel > worst.0 {
            worst = (rel, Some(idx));
        }
    }
    worst
}

pub struct GradientCase {
    pub x: Array2<f64>,
    pub y: LabelVector,
    pub weights: Option<Array2<f64>>,
    pub resamples: usize,
}

/// Draws a batch (and class weights for ArcFace) away from every kink.
pub fn gradient_case(
    kind: LossKind,
    cfg: &LossConfig,
    seed: u64,
    n: usize,
    d: usize,
) -> GradientCase {
    let mut r = rng(seed);
    let mut resamples = 0;
    loop {
        let x = gaussian(&mut r, n, d);
        let y = labels(&mut r, n, 3);
        let weights = (kind == LossKind::ArcFace).then(|| gaussian(&mut r, y.num_classes(), d));
        let batch = EmbeddingBatch::new(x.clone()).unwrap();
        let w = weights.clone().map(|w| ClassWeights::new(w).unwrap());
        let out = cfg.compute(&batch, &y, None, w.as_ref()).unwrap();
        if out.kink_gap >= KINK_GUARD {
            return GradientCase {
                x,
                y,
                weights,
                resamples,
            };
        }
        resamples += 1;
    }
}

pub struct GradientCheck {
    pub embeddings: f64,
    pub weights: Option<f64>,
    /// Relative gap between the library loss and the oracle loss.
    pub value_gap: f64,
}

fn to_rows(m: &Array2<f64>) -> oracle::Rows {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|&v| Dd::new(v)).collect())
        .collect()
}

/// Central difference of the oracle loss in double-double arithmetic, with
/// the perturbation applied exactly to the entry.
fn oracle_difference(base: &oracle::Rows, h: f64, f: impl Fn(&oracle::Rows) -> Dd) -> Array2<f64> {
    let cols = base.first().map_or(0, Vec::len);
    let mut out = Array2::zeros((base.len(), cols));
    let step = Dd::new(h);
    for ((i, j), slot) in out.indexed_iter_mut() {
        let mut plus = base.clone();
        plus[i][j] = plus[i][j] + step;
        let mut minus = base.clone();
        minus[i][j] = minus[i][j] - step;
        *slot = ((f(&plus) - f(&minus)) / (step + step)).to_f64();
    }
    out
}

pub fn check_gradients(kind: LossKind, cfg: &LossConfig, case: &GradientCase) -> GradientCheck {
    let w = case.weights.clone().map(|w| ClassWeights::new(w).unwrap());
    let out = cfg
        .compute(
            &EmbeddingBatch::new(case.x.clone()).unwrap(),
            &case.y,
            None,
            w.as_ref(),
        )
        .unwrap();
    let ids = case.y.ids();
    let x0 = to_rows(&case.x);
    let w0 = case.weights.as_ref().map(to_rows);
    let reference = oracle::loss(kind, &x0, ids, w0.as_ref()).to_f64();
    let value_gap = (reference - out.value).abs() / reference.abs().max(1e-300);
    let fd_x = oracle_difference(&x0, FD_STEP, |x| oracle::loss(kind, x, ids, w0.as_ref()));
    let embeddings = worst_relative_error(&out.grad_embeddings, &fd_x).0;
    let weights = w0.as_ref().map(|w0| {
        let fd_w = oracle_difference(w0, FD_STEP, |w| oracle::loss(kind, &x0, ids, Some(w)));
        worst_relative_error(out.grad_weights.as_ref().unwrap(), &fd_w).0
    });
    GradientCheck {
        embeddings,
        weights,
        value_gap,
    }
}
