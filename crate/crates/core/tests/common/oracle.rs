//! Direct evaluation of every loss at its default settings, written from the
//! formulas alone (all tuples, mean reduction per list, no regularizers).

use mlkit::losses::LossKind;

use super::dd::Dd;

pub type Rows = Vec<Vec<Dd>>;

fn dot(a: &[Dd], b: &[Dd]) -> Dd {
    a.iter().zip(b).map(|(&u, &v)| u * v).sum()
}

fn euclidean(a: &[Dd], b: &[Dd]) -> Dd {
    a.iter()
        .zip(b)
        .map(|(&u, &v)| (u - v) * (u - v))
        .sum::<Dd>()
        .sqrt()
}

fn cosine(a: &[Dd], b: &[Dd]) -> Dd {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

fn mean(values: &[Dd]) -> Dd {
    if values.is_empty() {
        return Dd::ZERO;
    }
    values.iter().copied().sum::<Dd>() / Dd::new(values.len() as f64)
}

fn log_sum_exp(z: &[Dd]) -> Dd {
    let m = z.iter().copied().fold(z[0], Dd::max);
    m + z.iter().map(|&v| (v - m).exp()).sum::<Dd>().ln()
}

fn softplus(t: Dd) -> Dd {
    let abs = if t.hi < 0.0 { -t } else { t };
    t.max(Dd::ZERO) + (Dd::ONE + (-abs).exp()).ln()
}

fn positives(y: &[usize], a: usize) -> Vec<usize> {
    (0..y.len()).filter(|&j| j != a && y[j] == y[a]).collect()
}

fn negatives(y: &[usize], a: usize) -> Vec<usize> {
    (0..y.len()).filter(|&j| y[j] != y[a]).collect()
}

pub fn loss(kind: LossKind, x: &Rows, y: &[usize], w: Option<&Rows>) -> Dd {
    let n = x.len();
    match kind {
        LossKind::TripletMargin => {
            let margin = Dd::new(0.05);
            let mut terms = Vec::new();
            for a in 0..n {
                for p in positives(y, a) {
                    for q in negatives(y, a) {
                        let arg = euclidean(&x[a], &x[p]) - euclidean(&x[a], &x[q]) + margin;
                        terms.push(arg.max(Dd::ZERO));
                    }
                }
            }
            mean(&terms)
        }
        LossKind::Contrastive => {
            let (pos_margin, neg_margin) = (Dd::new(0.0), Dd::new(1.0));
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for a in 0..n {
                for p in positives(y, a) {
                    pos.push((euclidean(&x[a], &x[p]) - pos_margin).max(Dd::ZERO));
                }
                for q in negatives(y, a) {
                    neg.push((neg_margin - euclidean(&x[a], &x[q])).max(Dd::ZERO));
                }
            }
            mean(&pos) + mean(&neg)
        }
        LossKind::NtXent => {
            let tau = Dd::new(0.07);
            let mut terms = Vec::new();
            for a in 0..n {
                let negs = negatives(y, a);
                if negs.is_empty() {
                    continue;
                }
                for p in positives(y, a) {
                    let mut z = vec![cosine(&x[a], &x[p]) / tau];
                    z.extend(negs.iter().map(|&q| cosine(&x[a], &x[q]) / tau));
                    terms.push(log_sum_exp(&z) - z[0]);
                }
            }
            mean(&terms)
        }
        LossKind::MultiSimilarity => {
            let (alpha, beta, base) = (Dd::new(2.0), Dd::new(50.0), Dd::new(0.5));
            let mut terms = Vec::new();
            for a in 0..n {
                let mut v = Dd::ZERO;
                let pos = positives(y, a);
                if !pos.is_empty() {
                    let s: Dd = pos
                        .iter()
                        .map(|&p| (-alpha * (cosine(&x[a], &x[p]) - base)).exp())
                        .sum();
                    v = v + (Dd::ONE + s).ln() / alpha;
                }
                let neg = negatives(y, a);
                if !neg.is_empty() {
                    let s: Dd = neg
                        .iter()
                        .map(|&q| (beta * (cosine(&x[a], &x[q]) - base)).exp())
                        .sum();
                    v = v + (Dd::ONE + s).ln() / beta;
                }
                terms.push(v);
            }
            mean(&terms)
        }
        LossKind::Circle => {
            let (m, gamma) = (Dd::new(0.4), Dd::new(80.0));
            let mut terms = Vec::new();
            for a in 0..n {
                let (pos, neg) = (positives(y, a), negatives(y, a));
                if pos.is_empty() || neg.is_empty() {
                    terms.push(Dd::ZERO);
                    continue;
                }
                let zp: Vec<Dd> = pos
                    .iter()
                    .map(|&p| {
                        let s = cosine(&x[a], &x[p]);
                        let weight = (Dd::ONE + m - s).max(Dd::ZERO);
                        -gamma * weight * (s - (Dd::ONE - m))
                    })
                    .collect();
                let zn: Vec<Dd> = neg
                    .iter()
                    .map(|&q| {
                        let s = cosine(&x[a], &x[q]);
                        let weight = (s + m).max(Dd::ZERO);
                        gamma * weight * (s - m)
                    })
                    .collect();
                // log(1 + sum_n sum_p exp(zn + zp))
                let mut pairs = Vec::with_capacity(zp.len() * zn.len());
                for &u in &zn {
                    for &v in &zp {
                        pairs.push(u + v);
                    }
                }
                terms.push(softplus(log_sum_exp(&pairs)));
            }
            mean(&terms)
        }
        LossKind::ArcFace => {
            let w = w.expect("class weights");
            let (margin, scale) = (0.5f64, Dd::new(64.0));
            let (cos_m, sin_m) = (Dd::new(margin.cos()), Dd::new(margin.sin()));
            let terms: Vec<Dd> = (0..n)
                .map(|i| {
                    let logits: Vec<Dd> = w
                        .iter()
                        .enumerate()
                        .map(|(j, row)| {
                            let c = cosine(&x[i], row);
                            if j == y[i] {
                                // cos(theta + m) with sin(theta) = sqrt(1 - c^2)
                                scale * (c * cos_m - (Dd::ONE - c * c).sqrt() * sin_m)
                            } else {
                                scale * c
                            }
                        })
                        .collect();
                    log_sum_exp(&logits) - logits[y[i]]
                })
                .collect();
            mean(&terms)
        }
    }
}
