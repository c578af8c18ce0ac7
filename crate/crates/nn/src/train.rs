use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adam::AdamState;
use crate::loss::{argmax, cross_entropy_mean};
use crate::model::{Batch, FovNetModel, GraphInput, Task};
use crate::{NnError, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    /// Graphs per step when classifying, faces per step when segmenting.
    pub batch_size: usize,
    /// Non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    /// Seeds the shuffling stream.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lr: 1e-3, batch_size: 64, patience: 30, max_epochs: 200, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch of the returned checkpoint.
    pub best_epoch: usize,
}

impl History {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{HISTORY_HEADER}")?;
        for r in &self.epochs {
            writeln!(w, "{},{},{},{},{}", r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub loss: f64,
    /// Graph accuracy when classifying, face accuracy when segmenting.
    pub accuracy: f64,
    /// Mean per-class IoU over classes present in prediction or truth.
    pub mean_iou: Option<f64>,
}

fn targets<T>(task: Task, batch: &Batch<T>) -> Result<&[usize], NnError> {
    match task {
        Task::Classify => Ok(&batch.classes),
        Task::Segment if batch.node_labels.len() == batch.n => Ok(&batch.node_labels),
        Task::Segment => Err(NnError::ShapeMismatch("segmentation needs per-face labels".into())),
    }
}

/// Groups indices into steps: fixed graph counts when classifying, whole
/// graphs until `size` faces when segmenting.
pub fn make_batches<T>(task: Task, order: &[usize], data: &[GraphInput<T>], size: usize) -> Vec<Vec<usize>> {
    let size = size.max(1);
    match task {
        Task::Classify => order.chunks(size).map(<[usize]>::to_vec).collect(),
        Task::Segment => {
            let mut out = Vec::new();
            let mut cur = Vec::new();
            let mut faces = 0;
            for &i in order {
                cur.push(i);
                faces += data[i].n;
                if faces >= size {
                    out.push(std::mem::take(&mut cur));
                    faces = 0;
                }
            }
            if !cur.is_empty() {
                out.push(cur);
            }
            out
        }
    }
}

/// Predicted labels: one per graph when classifying, one per face when segmenting.
pub fn predict<T: Real>(model: &FovNetModel<T>, data: &[GraphInput<T>]) -> Result<Vec<usize>, NnError> {
    let classes = model.config.classes;
    let mut out = Vec::new();
    for chunk in data.chunks(64) {
        let refs: Vec<&GraphInput<T>> = chunk.iter().collect();
        let (logits, _) = model.forward(&Batch::new(&refs)?)?;
        out.extend(logits.chunks(classes).map(argmax));
    }
    Ok(out)
}

pub fn evaluate<T: Real>(model: &FovNetModel<T>, data: &[GraphInput<T>]) -> Result<Metrics, NnError> {
    if data.is_empty() {
        return Err(NnError::EmptySplit("evaluation".into()));
    }
    let task = model.config.task;
    let classes = model.config.classes;
    let (mut loss, mut rows, mut correct) = (0.0, 0usize, 0usize);
    let mut inter = vec![0usize; classes];
    let mut union = vec![0usize; classes];
    for chunk in data.chunks(64) {
        let refs: Vec<&GraphInput<T>> = chunk.iter().collect();
        let batch = Batch::new(&refs)?;
        let (logits, _) = model.forward(&batch)?;
        let t = targets(task, &batch)?;
        let (l, _) = cross_entropy_mean(&logits, classes, t);
        loss += l.to_f64_lossy() * t.len() as f64;
        rows += t.len();
        for (row, &y) in logits.chunks(classes).zip(t) {
            let p = argmax(row);
            correct += usize::from(p == y);
            if p == y {
                inter[y] += 1;
                union[y] += 1;
            } else {
                union[y] += 1;
                union[p] += 1;
            }
        }
    }
    let mean_iou = (task == Task::Segment).then(|| {
        let present: Vec<f64> = (0..classes).filter(|&c| union[c] > 0).map(|c| inter[c] as f64 / union[c] as f64).collect();
        present.iter().sum::<f64>() / present.len().max(1) as f64
    });
    Ok(Metrics { loss: loss / rows as f64, accuracy: correct as f64 / rows as f64, mean_iou })
}

/// Adam training with early stopping on validation accuracy. The model is
/// left at the best-validation checkpoint.
///
/// Training also ends once validation accuracy reaches 1, since no later
/// epoch can then be selected.
pub fn train<T: Real>(
    model: &mut FovNetModel<T>,
    train_set: &[GraphInput<T>],
    val_set: &[GraphInput<T>],
    config: &TrainConfig,
) -> Result<History, NnError> {
    if train_set.is_empty() {
        return Err(NnError::EmptySplit("train".into()));
    }
    if val_set.is_empty() {
        return Err(NnError::EmptySplit("val".into()));
    }
    let task = model.config.task;
    let classes = model.config.classes;
    let mut adam = AdamState::new(model, config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = History::default();
    let mut best: Option<(f64, FovNetModel<T>)> = None;
    let mut since_best = 0;
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut rows, mut correct) = (0.0, 0usize, 0usize);
        for idx in make_batches(task, &order, train_set, config.batch_size) {
            let refs: Vec<&GraphInput<T>> = idx.iter().map(|&i| &train_set[i]).collect();
            let batch = Batch::new(&refs)?;
            let (logits, cache) = model.forward(&batch)?;
            let t = targets(task, &batch)?;
            let (loss, dlogits) = cross_entropy_mean(&logits, classes, t);
            loss_sum += loss.to_f64_lossy() * t.len() as f64;
            rows += t.len();
            correct += logits.chunks(classes).zip(t).filter(|(row, &y)| argmax(row) == y).count();
            model.zero_grad();
            model.backward(&batch, &cache, &dlogits);
            adam.update(model)?;
        }
        let val = evaluate(model, val_set)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / rows as f64,
            train_acc: correct as f64 / rows as f64,
            val_loss: val.loss,
            val_acc: val.accuracy,
        });
        if best.as_ref().is_none_or(|(acc, _)| val.accuracy > *acc) {
            best = Some((val.accuracy, model.clone()));
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best > config.patience || val.accuracy >= 1.0 {
            break;
        }
    }
    if let Some((_, m)) = best {
        *model = m;
    }
    Ok(history)
}
