//! Embedding and class-weight regularizers.
//!
//! Both produce a per-element [`LossBundle`] that goes through the owning
//! loss's reducer, and a matching backward pass.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{normalize_rows, EmbeddingBatch, LossBundle, DEFAULT_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizerKind {
    /// `||row||_p ^ power` per row.
    Lp {
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default = "default_power")]
        power: u32,
    },
    /// Largest cosine between a class weight row and any other row.
    RegularFace,
}

fn default_p() -> f64 {
    2.0
}

fn default_power() -> u32 {
    1
}

impl RegularizerKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RegularizerKind::Lp { p, power } => {
                if !(p >= 1.0 && p.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "Lp regularizer requires p >= 1, got {p}"
                    )));
                }
                if power == 0 {
                    return Err(Error::InvalidParameter(
                        "Lp regularizer power must be positive".into(),
                    ));
                }
                Ok(())
            }
            RegularizerKind::RegularFace => Ok(()),
        }
    }

    /// Per-row regularization losses of `rows`.
    pub fn bundle(&self, rows: ArrayView2<'_, f64>) -> Result<LossBundle> {
        match *self {
            RegularizerKind::Lp { p, power } => Ok(lp_bundle(rows, p, power)),
            RegularizerKind::RegularFace => regular_face_bundle(rows),
        }
    }

    /// Gradient of `sum_i weights[i] * loss_i` with respect to `rows`.
    pub fn backward(&self, rows: ArrayView2<'_, f64>, weights: &[f64]) -> Array2<f64> {
        match *self {
            RegularizerKind::Lp { p, power } => lp_backward(rows, p, power, weights),
            RegularizerKind::RegularFace => regular_face_backward(rows, weights),
        }
    }
}

pub fn lp_embedding_regularizer(x: &EmbeddingBatch, p: f64, power: u32) -> LossBundle {
    lp_bundle(x.view(), p, power)
}

pub fn regular_face_regularizer(weights: ArrayView2<'_, f64>) -> Result<LossBundle> {
    regular_face_bundle(weights)
}

fn lp_norm(row: ArrayView1<'_, f64>, p: f64) -> f64 {
    if p == 2.0 {
        row.dot(&row).sqrt()
    } else if p == 1.0 {
        row.iter().map(|v| v.abs()).sum()
    } else {
        row.iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

fn lp_bundle(rows: ArrayView2<'_, f64>, p: f64, power: u32) -> LossBundle {
    let values = rows
        .rows()
        .into_iter()
        .map(|r| lp_norm(r, p).powi(power as i32))
        .collect();
    LossBundle::elements((0..rows.nrows()).collect(), values)
}

fn lp_backward(rows: ArrayView2<'_, f64>, p: f64, power: u32, weights: &[f64]) -> Array2<f64> {
    let mut grad = Array2::zeros(rows.dim());
    for (i, row) in rows.rows().into_iter().enumerate() {
        let w = weights[i];
        let norm = lp_norm(row, p);
        if w == 0.0 || norm == 0.0 {
            continue;
        }
        let outer = w * power as f64 * norm.powi(power as i32 - 1);
        for (k, &v) in row.iter().enumerate() {
            let inner = if p == 2.0 {
                v / norm
            } else if p == 1.0 {
                v.signum() * (v != 0.0) as u8 as f64
            } else {
                v.signum() * (v.abs() / norm).powf(p - 1.0)
            };
            grad[[i, k]] = outer * inner;
        }
    }
    grad
}

fn check_rows(w: ArrayView2<'_, f64>) -> Result<()> {
    if w.nrows() < 2 {
        return Err(Error::InvalidParameter(format!(
            "RegularFace needs at least 2 classes, got {}",
            w.nrows()
        )));
    }
    for (row, r) in w.rows().into_iter().enumerate() {
        if r.dot(&r).sqrt() < DEFAULT_EPS {
            return Err(Error::DegenerateWeights {
                row,
                eps: DEFAULT_EPS,
            });
        }
    }
    Ok(())
}

/// Index of the most similar other row for each row (lowest index on ties).
fn closest_others(cos: &Array2<f64>) -> Vec<usize> {
    let c = cos.nrows();
    (0..c)
        .map(|i| {
            (0..c)
                .filter(|&j| j != i)
                .fold(None::<usize>, |best, j| match best {
                    Some(b) if cos[[i, b]] >= cos[[i, j]] => Some(b),
                    _ => Some(j),
                })
                .expect("at least two rows")
        })
        .collect()
}

fn regular_face_bundle(w: ArrayView2<'_, f64>) -> Result<LossBundle> {
    check_rows(w)?;
    let wn = normalize_rows(w, DEFAULT_EPS);
    let cos = wn.dot(&wn.t());
    let values = closest_others(&cos)
        .into_iter()
        .enumerate()
        .map(|(i, j)| cos[[i, j]])
        .collect();
    Ok(LossBundle::elements((0..w.nrows()).collect(), values))
}

fn regular_face_backward(w: ArrayView2<'_, f64>, weights: &[f64]) -> Array2<f64> {
    let wn = normalize_rows(w, DEFAULT_EPS);
    let cos = wn.dot(&wn.t());
    let norms: Vec<f64> = w.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let mut grad = Array2::zeros(w.dim());
    for (i, j) in closest_others(&cos).into_iter().enumerate() {
        let g = weights[i];
        if g == 0.0 {
            continue;
        }
        let c = cos[[i, j]];
        // d cos(a, b) / d a = (bhat - cos * ahat) / |a|
        let gi = (&wn.row(j) - &(&wn.row(i) * c)) * (g / norms[i]);
        let gj = (&wn.row(i) - &(&wn.row(j) * c)) * (g / norms[j]);
        let mut ri = grad.row_mut(i);
        ri += &gi;
        let mut rj = grad.row_mut(j);
        rj += &gj;
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reducers::ReducerKind;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn lp_examples() {
        let x =
            EmbeddingBatch::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let b = lp_embedding_regularizer(&x, 2.0, 1);
        assert_eq!(b.per_element.values[..2], [5.0, 0.0]);
        let b1 = lp_embedding_regularizer(&x, 1.0, 2);
        assert_eq!(b1.per_element.values[2], 4.0);
    }

    #[test]
    #[allow(clippy::approx_constant)] // 0.7071 is the four-digit hand value
    fn regular_face_examples() {
        let ortho = regular_face_regularizer(array![[1.0, 0.0], [0.0, 1.0]].view()).unwrap();
        assert_eq!(ortho.per_element.values, vec![0.0, 0.0]);
        assert_eq!(ReducerKind::mean().reduce(&ortho), 0.0);

        let same = regular_face_regularizer(array![[2.0, 1.0], [2.0, 1.0]].view()).unwrap();
        for v in &same.per_element.values {
            assert!((v - 1.0).abs() < 1e-15);
        }

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let three =
            regular_face_regularizer(array![[1.0, 0.0], [0.0, 1.0], [h, h]].view()).unwrap();
        for v in &three.per_element.values {
            assert!((v - h).abs() < 1e-15);
        }
        assert!((ReducerKind::mean().reduce(&three) - 0.7071).abs() < 1e-4);
    }

    #[test]
    fn regular_face_errors() {
        assert!(matches!(
            regular_face_regularizer(array![[1.0, 0.0], [0.0, 0.0]].view()),
            Err(Error::DegenerateWeights { row: 1, .. })
        ));
        assert!(regular_face_regularizer(array![[1.0, 0.0]].view()).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let w = array![
            [0.4, -1.1, 0.3],
            [1.2, 0.2, -0.7],
            [-0.5, 0.8, 0.9],
            [0.1, 0.1, 1.0]
        ];
        let weights = [0.3, 1.0, 0.5, 0.25];
        let kinds = [
            RegularizerKind::Lp { p: 2.0, power: 1 },
            RegularizerKind::Lp { p: 2.0, power: 2 },
            RegularizerKind::Lp { p: 1.0, power: 3 },
            RegularizerKind::Lp { p: 3.0, power: 2 },
            RegularizerKind::RegularFace,
        ];
        let h = 1e-6;
        for kind in kinds {
            let f = |m: &Array2<f64>| {
                let b = kind.bundle(m.view()).unwrap();
                b.per_element
                    .values
                    .iter()
                    .zip(&weights)
                    .map(|(v, w)| v * w)
                    .sum::<f64>()
            };
            let g = kind.backward(w.view(), &weights);
            for ((i, k), analytic) in g.indexed_iter() {
                let mut p = w.clone();
                p[[i, k]] += h;
                let mut m = w.clone();
                m[[i, k]] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                assert!(
                    (fd - analytic).abs() < 1e-6,
                    "{kind:?} [{i},{k}] {fd} vs {analytic}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn l2_rotation_invariant(rows in proptest::collection::vec(
            proptest::collection::vec(-3.0f64..3.0, 2), 1..6), angle in 0.0f64..6.3)
        {
            let x = EmbeddingBatch::from_rows(&rows).unwrap();
            let (s, c) = angle.sin_cos();
            let rot = array![[c, -s], [s, c]];
            let rotated = EmbeddingBatch::new(x.view().dot(&rot)).unwrap();
            let a = lp_embedding_regularizer(&x, 2.0, 1);
            let b = lp_embedding_regularizer(&rotated, 2.0, 1);
            for (u, v) in a.per_element.values.iter().zip(&b.per_element.values) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }

        #[test]
        fn regular_face_range_and_scale(rows in proptest::collection::vec(
            proptest::collection::vec(0.1f64..3.0, 3), 2..6), scale in 0.1f64..10.0)
        {
            let w = Array2::from_shape_vec((rows.len(), 3), rows.concat()).unwrap();
            let r = ReducerKind::mean();
            let base = r.reduce(&regular_face_regularizer(w.view()).unwrap());
            // positive entries give non-negative cosines
            prop_assert!((0.0..=1.0 + 1e-12).contains(&base));
            let mut scaled = w.clone();
            scaled.row_mut(0).mapv_inplace(|v| v * scale);
            let after = r.reduce(&regular_face_regularizer(scaled.view()).unwrap());
            prop_assert!((base - after).abs() < 1e-12);
        }
    }
}
