//! Retrieval and clustering accuracy of an embedding.
//!
//! [`AccuracyCalculator::get_accuracy`] always runs k-NN; k-means runs only
//! when a requested metric is listed in [`AccuracyCalculator::requires_clustering`].

mod clustering;
mod kmeans;
mod knn;
mod retrieval;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

pub use clustering::{clustering_metrics, ClusteringScores, Contingency};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use knn::knn;
pub use retrieval::{per_query, relevant_counts, retrieval_metrics, QueryScores, RetrievalMetrics};

use crate::distances::DistanceKind;
use crate::error::{Error, Result};
use crate::types::{l2_normalize_rows, EmbeddingBatch, LabelVector, MetricReport, DEFAULT_EPS};

pub const PRECISION_AT_1: &str = "precision_at_1";
pub const R_PRECISION: &str = "r_precision";
pub const MAP_AT_R: &str = "map_at_r";
pub const NMI: &str = "NMI";
pub const AMI: &str = "AMI";

const RETRIEVAL_METRICS: [&str; 3] = [PRECISION_AT_1, R_PRECISION, MAP_AT_R];
const CLUSTERING_METRICS: [&str; 2] = [NMI, AMI];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalculatorConfig {
    /// Neighbors retrieved per query; `None` retrieves the largest R.
    #[serde(default)]
    pub k: Option<usize>,
    /// Metrics to report; `None` reports every registered metric.
    #[serde(default)]
    pub metrics: Option<Vec<String>>,
    /// Drop each query's own row when query and reference are the same set.
    #[serde(default = "yes")]
    pub exclude_self: bool,
    #[serde(default = "default_distance")]
    pub distance: DistanceKind,
    #[serde(default)]
    pub kmeans: KMeansConfig,
}

fn yes() -> bool {
    true
}

fn default_distance() -> DistanceKind {
    DistanceKind::EUCLIDEAN
}

impl Default for CalculatorConfig {
    fn default() -> Self {
        Self {
            k: None,
            metrics: None,
            exclude_self: true,
            distance: default_distance(),
            kmeans: KMeansConfig::default(),
        }
    }
}

impl CalculatorConfig {
    pub fn with_metrics<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.metrics = Some(names.into_iter().map(Into::into).collect());
        self
    }
}

/// What a custom metric sees.
pub struct MetricInput<'a> {
    pub query_labels: &'a [u64],
    pub reference_labels: &'a [u64],
    /// Ranked reference indices per query.
    pub neighbors: &'a [Vec<usize>],
    /// k-means assignment of the queries, present for metrics that need clustering.
    pub clusters: Option<&'a [usize]>,
}

pub type MetricFn = Box<dyn Fn(&MetricInput<'_>) -> f64 + Send + Sync>;

struct CustomMetric {
    func: MetricFn,
    needs_clustering: bool,
}

pub struct AccuracyCalculator {
    config: CalculatorConfig,
    custom: BTreeMap<String, CustomMetric>,
    kmeans_runs: AtomicUsize,
}

impl fmt::Debug for AccuracyCalculator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AccuracyCalculator")
            .field("config", &self.config)
            .field("custom", &self.custom.keys().collect::<Vec<_>>())
            .field("kmeans_runs", &self.kmeans_runs())
            .finish()
    }
}

impl AccuracyCalculator {
    pub fn new(config: CalculatorConfig) -> Result<Self> {
        if config.k == Some(0) {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        config.distance.validate()?;
        let calc = Self {
            config,
            custom: BTreeMap::new(),
            kmeans_runs: AtomicUsize::new(0),
        };
        calc.requested()?;
        Ok(calc)
    }

    pub fn config(&self) -> &CalculatorConfig {
        &self.config
    }

    pub fn register_custom_metric<F>(
        &mut self,
        name: &str,
        func: F,
        needs_clustering: bool,
    ) -> Result<()>
    where
        F: Fn(&MetricInput<'_>) -> f64 + Send + Sync + 'static,
    {
        if self.is_registered(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        self.custom.insert(
            name.to_string(),
            CustomMetric {
                func: Box::new(func),
                needs_clustering,
            },
        );
        Ok(())
    }

    /// Replaces the requested metrics; every name must already be registered.
    pub fn set_metrics<I, S>(&mut self, names: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let previous = self
            .config
            .metrics
            .replace(names.into_iter().map(Into::into).collect());
        if let Err(e) = self.requested() {
            self.config.metrics = previous;
            return Err(e);
        }
        Ok(())
    }

    fn is_registered(&self, name: &str) -> bool {
        RETRIEVAL_METRICS.contains(&name)
            || CLUSTERING_METRICS.contains(&name)
            || self.custom.contains_key(name)
    }

    /// Every registered metric name, built-ins first.
    pub fn metric_names(&self) -> Vec<String> {
        RETRIEVAL_METRICS
            .iter()
            .chain(&CLUSTERING_METRICS)
            .map(|s| s.to_string())
            .chain(self.custom.keys().cloned())
            .collect()
    }

    /// Names of the metrics that need a k-means run.
    pub fn requires_clustering(&self) -> Vec<String> {
        CLUSTERING_METRICS
            .iter()
            .map(|s| s.to_string())
            .chain(
                self.custom
                    .iter()
                    .filter(|(_, m)| m.needs_clustering)
                    .map(|(k, _)| k.clone()),
            )
            .collect()
    }

    /// How many k-means fits this calculator has run.
    pub fn kmeans_runs(&self) -> usize {
        self.kmeans_runs.load(Ordering::Relaxed)
    }

    fn requested(&self) -> Result<BTreeSet<String>> {
        match &self.config.metrics {
            None => Ok(self.metric_names().into_iter().collect()),
            Some(names) => names
                .iter()
                .map(|n| {
                    if self.is_registered(n) {
                        Ok(n.clone())
                    } else {
                        Err(Error::UnknownMetric(n.clone()))
                    }
                })
                .collect(),
        }
    }

    /// Scores `query` against `reference`. Set `same_source` when both are
    /// the same rows in the same order; self-matches are then excluded if
    /// the config asks for it.
    pub fn get_accuracy(
        &self,
        query: &EmbeddingBatch,
        reference: &EmbeddingBatch,
        query_labels: &LabelVector,
        reference_labels: &LabelVector,
        same_source: bool,
    ) -> Result<MetricReport> {
        let requested = self.requested()?;
        for (x, y) in [(query, query_labels), (reference, reference_labels)] {
            if x.rows() != y.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} embeddings but {} labels",
                    x.rows(),
                    y.len()
                )));
            }
        }
        if query.dim() != reference.dim() {
            return Err(Error::DimensionMismatch {
                left: query.dim(),
                right: reference.dim(),
            });
        }
        let exclude = same_source && self.config.exclude_self;
        let ql = query_labels.originals();
        let rl = reference_labels.originals();
        let k = match self.config.k {
            Some(k) => k,
            None => relevant_counts(&ql, &rl, exclude)
                .into_iter()
                .max()
                .unwrap_or(0)
                .max(1),
        };
        let neighbors = knn(query, reference, k, self.config.distance, exclude)?;
        let retrieval = retrieval_metrics(&neighbors, &ql, &rl, exclude)?;

        let clustering_names = self.requires_clustering();
        let clusters = if requested.iter().any(|n| clustering_names.contains(n)) {
            Some(self.cluster(query, query_labels)?)
        } else {
            None
        };
        let scores = match &clusters {
            Some(c) if requested.contains(NMI) || requested.contains(AMI) => {
                Some(clustering_metrics(&ql, c)?)
            }
            _ => None,
        };

        let input = MetricInput {
            query_labels: &ql,
            reference_labels: &rl,
            neighbors: &neighbors,
            clusters: None,
        };
        let mut report = MetricReport::default();
        for name in &requested {
            let value = match name.as_str() {
                PRECISION_AT_1 => retrieval.precision_at_1,
                R_PRECISION => retrieval.r_precision,
                MAP_AT_R => retrieval.map_at_r,
                NMI => scores.expect("clustering ran").nmi,
                AMI => scores.expect("clustering ran").ami,
                custom => {
                    let metric = &self.custom[custom];
                    let clusters = metric
                        .needs_clustering
                        .then_some(clusters.as_deref())
                        .flatten();
                    (metric.func)(&MetricInput { clusters, ..input })
                }
            };
            report.insert(name.clone(), value);
        }
        Ok(report)
    }

    /// k-means over the queries with one cluster per distinct label.
    fn cluster(&self, query: &EmbeddingBatch, labels: &LabelVector) -> Result<Vec<usize>> {
        self.kmeans_runs.fetch_add(1, Ordering::Relaxed);
        let k = labels.distinct_present();
        let result = if matches!(self.config.distance, DistanceKind::CosineSimilarity) {
            kmeans(
                l2_normalize_rows(query, DEFAULT_EPS).view(),
                k,
                &self.config.kmeans,
            )?
        } else {
            kmeans(query.view(), k, &self.config.kmeans)?
        };
        Ok(result.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separated() -> (EmbeddingBatch, LabelVector) {
        let x = EmbeddingBatch::from_rows(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![10.0, 10.0],
            vec![10.1, 10.0],
            vec![10.0, 10.1],
        ])
        .unwrap();
        (x, LabelVector::from_raw([7, 7, 7, 3, 3, 3]))
    }

    #[test]
    fn perfect_clusters() {
        let (x, y) = separated();
        let calc = AccuracyCalculator::new(CalculatorConfig::default()).unwrap();
        let r = calc.get_accuracy(&x, &x, &y, &y, true).unwrap();
        assert_eq!(r.len(), 5);
        for name in calc.metric_names() {
            assert!((r.get(&name).unwrap() - 1.0).abs() < 1e-12, "{name}");
        }
        assert_eq!(calc.kmeans_runs(), 1);
    }

    #[test]
    fn retrieval_only_skips_clustering() {
        let (x, y) = separated();
        let calc =
            AccuracyCalculator::new(CalculatorConfig::default().with_metrics([PRECISION_AT_1]))
                .unwrap();
        let r = calc.get_accuracy(&x, &x, &y, &y, true).unwrap();
        assert_eq!(r.keys().collect::<Vec<_>>(), vec![PRECISION_AT_1]);
        assert_eq!(calc.kmeans_runs(), 0);
    }

    #[test]
    fn custom_metrics() {
        let (x, y) = separated();
        let cfg = CalculatorConfig::default().with_metrics(["half", "CMI", PRECISION_AT_1]);
        assert!(matches!(
            AccuracyCalculator::new(cfg.clone()),
            Err(Error::UnknownMetric(_))
        ));
        let mut calc = AccuracyCalculator::new(CalculatorConfig::default()).unwrap();
        calc.register_custom_metric("half", |_| 0.5, false).unwrap();
        calc.register_custom_metric(
            "CMI",
            |m| {
                let c = m.clusters.expect("clustering requested");
                c.len() as f64
            },
            true,
        )
        .unwrap();
        assert!(matches!(
            calc.register_custom_metric("NMI", |_| 0.0, false),
            Err(Error::DuplicateName(_))
        ));
        assert!(calc.requires_clustering().contains(&"CMI".to_string()));
        assert!(calc.set_metrics(["half", "nope"]).is_err());
        calc.set_metrics(cfg.metrics.unwrap()).unwrap();
        let r = calc.get_accuracy(&x, &x, &y, &y, true).unwrap();
        assert_eq!(r.get("half"), Some(0.5));
        assert_eq!(r.get("CMI"), Some(6.0));
        assert_eq!(r.len(), 3);
        assert_eq!(calc.kmeans_runs(), 1);
    }

    #[test]
    fn self_match_without_exclusion() {
        let (x, _) = separated();
        let y = LabelVector::from_raw([0, 1, 2, 3, 4, 5]);
        let cfg = CalculatorConfig {
            exclude_self: false,
            k: Some(1),
            ..CalculatorConfig::default().with_metrics([PRECISION_AT_1])
        };
        let calc = AccuracyCalculator::new(cfg).unwrap();
        assert_eq!(
            calc.get_accuracy(&x, &x, &y, &y, true)
                .unwrap()
                .get(PRECISION_AT_1),
            Some(1.0)
        );
    }
}
