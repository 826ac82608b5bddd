//! Pairwise distance and similarity matrices.
//!
//! Every matrix carries an `inverted` flag: for similarities (cosine, dot
//! product) a larger value means "closer", for distances (Lp, SNR) a smaller
//! one does. Losses and miners consult the flag instead of the concrete kind.
//!
//! Besides the forward matrix, [`backward`] maps a gradient with respect to
//! the matrix entries back onto both argument batches.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::types::{normalize_rows, EmbeddingBatch, DEFAULT_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistanceKind {
    /// `(sum_k |x_k - y_k|^p)^(1/p)`, `p >= 1`.
    Lp {
        p: f64,
    },
    CosineSimilarity,
    DotProductSimilarity,
    /// Signal-to-noise ratio `Var(y - x) / Var(x)`; not symmetric.
    Snr,
}

impl DistanceKind {
    pub const EUCLIDEAN: DistanceKind = DistanceKind::Lp { p: 2.0 };

    pub fn is_inverted(self) -> bool {
        is_inverted(self)
    }

    pub fn validate(self) -> Result<()> {
        match self {
            DistanceKind::Lp { p } if !(p >= 1.0 && p.is_finite()) => Err(Error::InvalidParameter(
                format!("Lp distance requires finite p >= 1, got {p}"),
            )),
            _ => Ok(()),
        }
    }
}

impl Default for DistanceKind {
    fn default() -> Self {
        DistanceKind::EUCLIDEAN
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::Lp { p } => write!(f, "Lp(p={p})"),
            DistanceKind::CosineSimilarity => f.write_str("CosineSimilarity"),
            DistanceKind::DotProductSimilarity => f.write_str("DotProductSimilarity"),
            DistanceKind::Snr => f.write_str("SNR"),
        }
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    /// Accepts `euclidean`/`l2`, `l1`, `lp:<p>`, `cosine`, `dot`, `snr`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "euclidean" | "l2" => DistanceKind::Lp { p: 2.0 },
            "l1" | "manhattan" => DistanceKind::Lp { p: 1.0 },
            "cosine" | "cosine_similarity" => DistanceKind::CosineSimilarity,
            "dot" | "dot_product" | "dot_product_similarity" => DistanceKind::DotProductSimilarity,
            "snr" => DistanceKind::Snr,
            other => match other.strip_prefix("lp:") {
                Some(p) => DistanceKind::Lp {
                    p: p.parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad Lp exponent `{p}`")))?,
                },
                None => {
                    return Err(Error::InvalidParameter(format!("unknown distance `{s}`")));
                }
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// True when larger matrix values mean more similar.
pub fn is_inverted(kind: DistanceKind) -> bool {
    matches!(
        kind,
        DistanceKind::CosineSimilarity | DistanceKind::DotProductSimilarity
    )
}

/// A dense `n x m` comparison matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub values: Array2<f64>,
    pub inverted: bool,
    pub kind: DistanceKind,
}

impl DistanceMatrix {
    /// Wraps precomputed values, deriving `inverted` from `kind`.
    pub fn from_values(values: Array2<f64>, kind: DistanceKind) -> Self {
        Self {
            values,
            inverted: is_inverted(kind),
            kind,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }
}

pub fn pairwise_matrix(
    kind: DistanceKind,
    x: &EmbeddingBatch,
    y: &EmbeddingBatch,
) -> Result<DistanceMatrix> {
    pairwise_matrix_view(kind, x.view(), y.view())
}

pub(crate) fn pairwise_matrix_view(
    kind: DistanceKind,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<DistanceMatrix> {
    kind.validate()?;
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            left: x.ncols(),
            right: y.ncols(),
        });
    }
    let values = match kind {
        DistanceKind::Lp { p } => {
            let mut m = Array2::zeros((x.nrows(), y.nrows()));
            for (i, xi) in x.rows().into_iter().enumerate() {
                for (j, yj) in y.rows().into_iter().enumerate() {
                    m[[i, j]] = lp_distance(xi, yj, p);
                }
            }
            m
        }
        DistanceKind::CosineSimilarity => {
            let xn = normalize_rows(x, DEFAULT_EPS);
            let yn = normalize_rows(y, DEFAULT_EPS);
            xn.dot(&yn.t())
        }
        DistanceKind::DotProductSimilarity => x.dot(&y.t()),
        DistanceKind::Snr => {
            let mut m = Array2::zeros((x.nrows(), y.nrows()));
            for (i, xi) in x.rows().into_iter().enumerate() {
                let signal = variance(xi).max(DEFAULT_EPS);
                for (j, yj) in y.rows().into_iter().enumerate() {
                    let noise = (&yj - &xi).to_owned();
                    m[[i, j]] = variance(noise.view()) / signal;
                }
            }
            m
        }
    };
    Ok(DistanceMatrix::from_values(values, kind))
}

fn lp_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, p: f64) -> f64 {
    if p == 2.0 {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    } else if p == 1.0 {
        a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum()
    } else {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u - v).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Population variance over the coordinates of `v`.
fn variance(v: ArrayView1<'_, f64>) -> f64 {
    let mean = v.mean().unwrap_or(0.0);
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64
}

/// Pulls a gradient w.r.t. matrix entries back to `(d/dx, d/dy)`.
///
/// When the matrix compared a batch with itself, the embedding gradient is
/// the sum of both outputs.
pub fn backward(
    kind: DistanceKind,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    grad: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>) {
    let (n, d) = x.dim();
    let m = y.nrows();
    debug_assert_eq!(grad.dim(), (n, m));
    let mut gx = Array2::zeros((n, d));
    let mut gy = Array2::zeros((m, d));
    match kind {
        DistanceKind::DotProductSimilarity => {
            gx = grad.dot(&y);
            gy = grad.t().dot(&x);
        }
        DistanceKind::CosineSimilarity => {
            let xnorm: Array1<f64> = x.map_axis(Axis(1), |r| r.dot(&r).sqrt());
            let ynorm: Array1<f64> = y.map_axis(Axis(1), |r| r.dot(&r).sqrt());
            let xn = normalize_rows(x, DEFAULT_EPS);
            let yn = normalize_rows(y, DEFAULT_EPS);
            let sim = xn.dot(&yn.t());
            // d s_ij / d x_i = (yhat_j - s_ij xhat_i) / |x_i|, and yhat_j / eps below the floor.
            let gs = grad * &sim;
            let g_yhat = grad.dot(&yn);
            for i in 0..n {
                let weight = gs.row(i).sum();
                let mut row = gx.row_mut(i);
                if xnorm[i] >= DEFAULT_EPS {
                    row.assign(&((&g_yhat.row(i) - &(&xn.row(i) * weight)) / xnorm[i]));
                } else {
                    row.assign(&(&g_yhat.row(i) / DEFAULT_EPS));
                }
            }
            let g_xhat = grad.t().dot(&xn);
            for j in 0..m {
                let weight = gs.column(j).sum();
                let mut row = gy.row_mut(j);
                if ynorm[j] >= DEFAULT_EPS {
                    row.assign(&((&g_xhat.row(j) - &(&yn.row(j) * weight)) / ynorm[j]));
                } else {
                    row.assign(&(&g_xhat.row(j) / DEFAULT_EPS));
                }
            }
        }
        DistanceKind::Lp { p } => {
            for i in 0..n {
                for j in 0..m {
                    let g = grad[[i, j]];
                    if g == 0.0 {
                        continue;
                    }
                    let dist = lp_distance(x.row(i), y.row(j), p);
                    if dist == 0.0 {
                        // subgradient 0 at coincident points
                        continue;
                    }
                    for k in 0..d {
                        let diff = x[[i, k]] - y[[j, k]];
                        let partial = if p == 1.0 {
                            sign(diff)
                        } else if p == 2.0 {
                            diff / dist
                        } else {
                            sign(diff) * (diff.abs() / dist).powf(p - 1.0)
                        };
                        gx[[i, k]] += g * partial;
                        gy[[j, k]] -= g * partial;
                    }
                }
            }
        }
        DistanceKind::Snr => {
            let scale = 2.0 / d as f64;
            for i in 0..n {
                let xi = x.row(i);
                let xc = &xi - xi.mean().unwrap_or(0.0);
                let raw_signal = variance(xi);
                let signal = raw_signal.max(DEFAULT_EPS);
                for j in 0..m {
                    let g = grad[[i, j]];
                    if g == 0.0 {
                        continue;
                    }
                    let r = &y.row(j) - &xi;
                    let rc = &r - r.mean().unwrap_or(0.0);
                    let noise = rc.dot(&rc) / d as f64;
                    let d_noise = &rc * (scale / signal * g);
                    let mut gxi = gx.row_mut(i);
                    gxi -= &d_noise;
                    if raw_signal >= DEFAULT_EPS {
                        gxi -= &(&xc * (g * noise / (signal * signal) * scale));
                    }
                    let mut gyj = gy.row_mut(j);
                    gyj += &d_noise;
                }
            }
        }
    }
    (gx, gy)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Rejects distance kinds a loss cannot interpret.
pub fn check_distance_compatibility(loss: LossKind, kind: DistanceKind) -> Result<()> {
    kind.validate()?;
    let reject = |reason: &str| {
        Err(Error::IncompatibleDistance {
            loss: loss.to_string(),
            distance: kind.to_string(),
            reason: reason.to_string(),
        })
    };
    match loss {
        LossKind::TripletMargin | LossKind::Contrastive | LossKind::NtXent => Ok(()),
        LossKind::MultiSimilarity | LossKind::Circle if !is_inverted(kind) => {
            reject("this loss is defined on similarities and needs an inverted metric")
        }
        LossKind::ArcFace
            if !matches!(
                kind,
                DistanceKind::CosineSimilarity | DistanceKind::DotProductSimilarity
            ) =>
        {
            reject("classification against class weights only allows CosineSimilarity or DotProductSimilarity")
        }
        _ => Ok(()),
    }
}
