//! Full-batch training with Adam and best-validation model selection.

use std::io::Write;

use ndarray::Array2;
use serde::Serialize;

use super::model::{GnnModel, Mode, Propagation};
use crate::error::{Error, Result};
use crate::Matrix;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl AdamState {
    pub fn new(shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let (m, v) = shapes
            .into_iter()
            .map(|s| (Array2::zeros(s), Array2::zeros(s)))
            .unzip();
        Self { step: 0, m, v }
    }
}

/// One bias-corrected Adam update. Weight decay is coupled: `wd * theta` is
/// added to the gradient before the moments are updated.
pub fn adam_step<'a>(
    params: impl Iterator<Item = &'a mut Matrix>,
    grads: &[Matrix],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for (((p, g), m), v) in params.zip(grads).zip(&mut state.m).zip(&mut state.v) {
        ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
            let g = g + weight_decay * *p;
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: GnnModel,
    pub curve: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (1-based).
    pub best_epoch: usize,
}

/// Trains from `model`'s current parameters. Labels are indexed by node; only
/// entries under the masks are read. The parameters after the epoch with the
/// lowest validation loss are kept, or the final ones when `val_mask` is
/// empty.
pub fn train(
    model: &GnnModel,
    prop: &Propagation,
    x: &Matrix,
    labels: &[u8],
    train_mask: &[usize],
    val_mask: &[usize],
) -> Result<TrainOutcome> {
    if train_mask.is_empty() {
        return Err(Error::Empty("training mask is empty".into()));
    }
    let in_train: std::collections::HashSet<usize> = train_mask.iter().copied().collect();
    if let Some(v) = val_mask.iter().find(|v| in_train.contains(v)) {
        return Err(Error::InvalidInput(format!("node {v} is in both training and validation masks")));
    }
    let first = labels.get(train_mask[0]).copied();
    if train_mask.iter().all(|&i| labels.get(i).copied() == first) {
        log::warn!("every training label is {first:?}; the classifier cannot see the other class");
    }
    let cfg = model.config.train.clone();
    let mut current = model.clone();
    let mut state = AdamState::new(current.params().iter().map(|(_, m)| m.dim()));
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, GnnModel)> = None;
    for epoch in 1..=cfg.epochs {
        let mode = Mode::Train { epoch: epoch as u64 };
        let (train_loss, grads) = current.loss_and_grads(prop, x, labels, train_mask, mode)?;
        adam_step(current.params_mut(), &grads, &mut state, cfg.lr, cfg.weight_decay);
        let val_loss = if val_mask.is_empty() {
            None
        } else {
            Some(current.loss(prop, x, labels, val_mask, Mode::Eval)?)
        };
        if let Some(vl) = val_loss {
            if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
                best = Some((vl, epoch, current.clone()));
            }
        }
        curve.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
    }
    let (model, best_epoch) = match best {
        Some((_, e, m)) => (m, e),
        None => (current, cfg.epochs),
    };
    Ok(TrainOutcome {
        model,
        curve,
        best_epoch,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub classes: Vec<u8>,
    pub prob_hateful: Vec<f64>,
}

/// Class with the larger probability per node; ties go to non-hateful.
pub fn predict(model: &GnnModel, prop: &Propagation, x: &Matrix) -> Result<Predictions> {
    let lp = model.forward(prop, x, Mode::Eval)?;
    let prob_hateful: Vec<f64> = lp.outer_iter().map(|r| r[crate::HATEFUL as usize].exp()).collect();
    let classes = lp
        .outer_iter()
        .map(|r| {
            if r[crate::HATEFUL as usize] > r[crate::NON_HATEFUL as usize] {
                crate::HATEFUL
            } else {
                crate::NON_HATEFUL
            }
        })
        .collect();
    Ok(Predictions {
        classes,
        prob_hateful,
    })
}

/// CSV `epoch,train_loss,val_loss`; the last column is empty without a
/// validation mask.
pub fn write_loss_curve(curve: &[EpochRecord], mut w: impl Write) -> Result<()> {
    writeln!(w, "epoch,train_loss,val_loss")?;
    for r in curve {
        match r.val_loss {
            Some(v) => writeln!(w, "{},{},{}", r.epoch, r.train_loss, v)?,
            None => writeln!(w, "{},{},", r.epoch, r.train_loss)?,
        }
    }
    Ok(())
}
