//! Label-fraction benchmark over a fold plan.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::folds::FoldPlan;
use super::metrics::{macro_metrics, Metrics};
use crate::error::{Error, Result};
use crate::gnn::{self, GnnConfig, GnnModel, Propagation};
use crate::rng;
use crate::text::{predict_logistic, train_logistic, LogisticParams};
use crate::Matrix;

/// A model the benchmark can fit on a set of labeled nodes and apply to every
/// node of the graph.
pub trait Classifier: Sync {
    fn name(&self) -> &str;

    /// `labels` is indexed by node; only entries in `train` may be read as
    /// supervision. Returns one predicted class per node.
    fn fit_predict(&self, train: &[usize], labels: &[u8], seed: u64) -> Result<Vec<u8>>;
}

/// A GNN variant over fixed features and propagation operators.
pub struct GnnClassifier<'a> {
    pub name: String,
    pub config: GnnConfig,
    pub prop: &'a Propagation,
    pub features: &'a Matrix,
}

impl Classifier for GnnClassifier<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit_predict(&self, train: &[usize], labels: &[u8], seed: u64) -> Result<Vec<u8>> {
        let mut config = self.config.clone();
        config.train.seed = seed;
        let model = GnnModel::new(config, self.features.ncols())?;
        let out = gnn::train(&model, self.prop, self.features, labels, train, &[])?;
        Ok(gnn::predict(&out.model, self.prop, self.features)?.classes)
    }
}

/// Logistic regression on per-node feature rows; the graph is not used.
pub struct LogisticClassifier<'a> {
    pub name: String,
    pub params: LogisticParams,
    pub features: &'a Matrix,
}

impl Classifier for LogisticClassifier<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit_predict(&self, train: &[usize], labels: &[u8], seed: u64) -> Result<Vec<u8>> {
        let x = self.features.select(ndarray::Axis(0), train);
        let y: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
        let params = LogisticParams {
            seed,
            ..self.params.clone()
        };
        let (model, _) = train_logistic(&x, &y, &params)?;
        Ok(predict_logistic(&model, self.features)?
            .into_iter()
            .map(|p| u8::from(p > 0.5))
            .collect())
    }
}

/// Always predicts one class.
pub struct ConstantClassifier {
    pub name: String,
    pub class: u8,
    pub num_nodes: usize,
}

impl Classifier for ConstantClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit_predict(&self, _: &[usize], _: &[u8], _: u64) -> Result<Vec<u8>> {
        Ok(vec![self.class; self.num_nodes])
    }
}

/// Echoes known labels; a harness sanity check.
pub struct OracleClassifier {
    pub truth: Vec<u8>,
}

impl Classifier for OracleClassifier {
    fn name(&self) -> &str {
        "oracle"
    }

    fn fit_predict(&self, _: &[usize], _: &[u8], _: u64) -> Result<Vec<u8>> {
        Ok(self.truth.clone())
    }
}

/// Coin flips per node.
pub struct RandomClassifier {
    pub num_nodes: usize,
}

impl Classifier for RandomClassifier {
    fn name(&self) -> &str {
        "random"
    }

    fn fit_predict(&self, _: &[usize], _: &[u8], seed: u64) -> Result<Vec<u8>> {
        use rand::Rng;
        let mut r = rng::rng(seed);
        Ok((0..self.num_nodes).map(|_| u8::from(r.random_bool(0.5))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub model: String,
    pub m: f64,
    pub fold: usize,
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub model: String,
    pub m: f64,
    pub fold: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<CellFailure>,
}

/// Seed of one (model, m, fold) cell.
pub fn cell_seed(root: u64, model: &str, m: f64, fold: usize) -> u64 {
    rng::indexed(rng::substream(root, model), &[m.to_bits(), fold as u64])
}

/// Fits every model on every (m, fold) cell and scores it on the fold's test
/// side. Cells run in parallel; rows come back in (model, m, fold) order. A
/// failing cell is recorded and the run continues.
pub fn run_benchmark(
    models: &[&dyn Classifier],
    labeled: &[(usize, u8)],
    num_nodes: usize,
    plan: &FoldPlan,
    root_seed: u64,
) -> Result<BenchResult> {
    let mut labels = vec![0u8; num_nodes];
    for &(v, c) in labeled {
        *labels
            .get_mut(v)
            .ok_or_else(|| Error::InvalidInput(format!("labeled node {v} outside 0..{num_nodes}")))? = c;
    }
    let cells: Vec<(usize, f64, usize)> = (0..models.len())
        .flat_map(|mi| {
            plan.fractions
                .iter()
                .flat_map(move |&m| (0..plan.folds.len()).map(move |f| (mi, m, f)))
        })
        .collect();
    let outcomes: Vec<std::result::Result<MetricsRow, CellFailure>> = cells
        .par_iter()
        .map(|&(mi, m, f)| {
            let model = models[mi];
            let fold = &plan.folds[f];
            let seed = cell_seed(root_seed, model.name(), m, f);
            let run = || -> Result<Metrics> {
                let train = fold
                    .train_subset(m)
                    .ok_or_else(|| Error::InvalidInput(format!("fraction {m} not in plan")))?;
                let pred = model.fit_predict(train, &labels, seed)?;
                if pred.len() != num_nodes {
                    return Err(Error::Shape(format!("{} predictions for {num_nodes} nodes", pred.len())));
                }
                let truth: Vec<u8> = fold.test.iter().map(|&v| labels[v]).collect();
                let guess: Vec<u8> = fold.test.iter().map(|&v| pred[v]).collect();
                macro_metrics(&truth, &guess)
            };
            match run() {
                Ok(metrics) => Ok(MetricsRow {
                    model: model.name().to_owned(),
                    m,
                    fold: f,
                    seed,
                    metrics,
                }),
                Err(e) => {
                    log::error!("{} m={m} fold={f}: {e}", model.name());
                    Err(CellFailure {
                        model: model.name().to_owned(),
                        m,
                        fold: f,
                        error: e.to_string(),
                    })
                }
            }
        })
        .collect();
    let mut result = BenchResult {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for o in outcomes {
        match o {
            Ok(r) => result.rows.push(r),
            Err(f) => result.failures.push(f),
        }
    }
    Ok(result)
}

const CLASS_NAMES: [&str; 2] = ["non_hateful", "hateful"];

/// CSV `model,m,fold,class,precision,recall,f1,macro_f1,accuracy,seed`, one
/// line per class per cell.
pub fn write_report_csv(rows: &[MetricsRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "m", "fold", "class", "precision", "recall", "f1", "macro_f1", "accuracy", "seed"])?;
    for r in rows {
        for (c, cm) in r.metrics.per_class.iter().enumerate() {
            out.write_record([
                r.model.clone(),
                r.m.to_string(),
                r.fold.to_string(),
                CLASS_NAMES[c].to_owned(),
                cm.precision.to_string(),
                cm.recall.to_string(),
                cm.f1.to_string(),
                r.metrics.macro_f1.to_string(),
                r.metrics.accuracy.to_string(),
                r.seed.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// CSV `model,m,fold,macro_f1,accuracy,f1_hateful,seed`, one line per cell.
pub fn write_sweep_csv(rows: &[MetricsRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "m", "fold", "macro_f1", "accuracy", "f1_hateful", "seed"])?;
    for r in rows {
        out.write_record([
            r.model.clone(),
            r.m.to_string(),
            r.fold.to_string(),
            r.metrics.macro_f1.to_string(),
            r.metrics.accuracy.to_string(),
            r.metrics.per_class[1].f1.to_string(),
            r.seed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub model: String,
    pub m: f64,
    pub folds: usize,
    pub mean_macro_f1: f64,
    pub std_macro_f1: f64,
    pub mean_accuracy: f64,
    pub mean_f1_hateful: f64,
    pub mean_recall_hateful: f64,
}

/// Means over folds per (model, m), in first-appearance order.
pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(m, f)| *m == r.model && *f == r.m) {
            keys.push((r.model.clone(), r.m));
        }
    }
    keys.into_iter()
        .map(|(model, m)| {
            let cell: Vec<&MetricsRow> = rows.iter().filter(|r| r.model == model && r.m == m).collect();
            let n = cell.len() as f64;
            let mean = |f: &dyn Fn(&MetricsRow) -> f64| cell.iter().map(|r| f(r)).sum::<f64>() / n;
            let mf = mean(&|r| r.metrics.macro_f1);
            let var = cell.iter().map(|r| (r.metrics.macro_f1 - mf).powi(2)).sum::<f64>() / n;
            SummaryRow {
                folds: cell.len(),
                mean_macro_f1: mf,
                std_macro_f1: var.sqrt(),
                mean_accuracy: mean(&|r| r.metrics.accuracy),
                mean_f1_hateful: mean(&|r| r.metrics.per_class[1].f1),
                mean_recall_hateful: mean(&|r| r.metrics.per_class[1].recall),
                model,
                m,
            }
        })
        .collect()
}

/// Mean macro-F1 of `model` at fraction `m`, if present.
pub fn mean_macro_f1(summary: &[SummaryRow], model: &str, m: f64) -> Option<f64> {
    summary
        .iter()
        .find(|s| s.model == model && s.m == m)
        .map(|s| s.mean_macro_f1)
}
