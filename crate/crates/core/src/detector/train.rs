//! Separate training of the window classifier (Adam) and of the logit
//! smoother (RMSProp with truncated back-propagation through time).

use std::io::Write;
use std::path::Path;

use gatenav_nn::{kernels, Adam, Graph, RmsProp, Tensor, Var};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cache::WindowCache;
use super::smoother::{LstmSmoother, SmootherConfig};
use super::tcn::{TcnClassifier, TcnConfig};
use crate::domain::{imu_labels, MotionLabel, Sequence, Vec3, DEFAULT_VELOCITY_THRESHOLD};
use crate::error::{Error, Result};
use crate::filter::{world_accelerations, NavConfig};

/// Preprocessed accelerations with one ground-truth label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub name: String,
    pub accel: Vec<Vec3>,
    pub labels: Vec<MotionLabel>,
}

impl LabeledStream {
    pub fn new(name: &str, accel: Vec<Vec3>, labels: Vec<MotionLabel>) -> Result<Self> {
        if accel.len() != labels.len() {
            return Err(Error::Validation(format!(
                "stream '{name}': {} samples but {} labels",
                accel.len(),
                labels.len()
            )));
        }
        Ok(Self {
            name: name.to_string(),
            accel,
            labels,
        })
    }

    /// Uses the sequence's stored labels, or derives them from ground-truth
    /// velocity.
    pub fn from_sequence(seq: &Sequence, cfg: &NavConfig) -> Result<Self> {
        let accel = world_accelerations(seq, cfg).map_err(|e| e.in_sequence(&seq.name))?;
        let labels = match seq.label_values() {
            Some(l) => l,
            None => imu_labels(seq, DEFAULT_VELOCITY_THRESHOLD)?.into_iter().map(|x| x.1).collect(),
        };
        Self::new(&seq.name, accel, labels)
    }

    pub fn len(&self) -> usize {
        self.accel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accel.is_empty()
    }

    fn window(&self, end: usize, len: usize) -> Vec<[f64; 3]> {
        self.accel[end + 1 - len..=end].iter().map(|a| [a.x, a.y, a.z]).collect()
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub split: String,
    pub accuracy: f64,
    pub loss: f64,
}

pub fn write_training_log(path: &Path, rows: &[EpochLog]) -> Result<()> {
    let mut out = String::from("epoch,split,accuracy,loss\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.split, r.accuracy, r.loss));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub windows_per_epoch: usize,
    pub batch_size: usize,
    /// Trailing fraction of every stream held out for validation.
    pub val_fraction: f64,
    /// Validation windows evaluated per epoch, spread evenly.
    pub val_windows: usize,
}

impl Default for TcnTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 8,
            lr: 2e-3,
            seed: 1,
            windows_per_epoch: 2400,
            batch_size: 24,
            val_fraction: 0.15,
            val_windows: 600,
        }
    }
}

/// Window end indices `(stream, index)`.
type WindowIndex = Vec<(usize, usize)>;

/// Window end indices for training and validation.
fn split_windows(corpus: &[LabeledStream], window: usize, val_fraction: f64) -> (WindowIndex, WindowIndex) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (s, st) in corpus.iter().enumerate() {
        if st.len() < window {
            continue;
        }
        let cut = ((st.len() as f64) * (1.0 - val_fraction)).round() as usize;
        for end in window - 1..st.len() {
            if end < cut {
                train.push((s, end));
            } else if end + 1 - window >= cut {
                // Validation windows never overlap training samples.
                val.push((s, end));
            }
        }
    }
    (train, val)
}

fn spread<T: Copy>(items: &[T], count: usize) -> Vec<T> {
    if items.len() <= count || count == 0 {
        return items.to_vec();
    }
    (0..count).map(|k| items[k * items.len() / count]).collect()
}

/// Accuracy and mean cross-entropy of the classifier on the given windows.
pub fn evaluate_windows(model: &TcnClassifier, corpus: &[LabeledStream], windows: &[(usize, usize)]) -> Result<(f64, f64)> {
    if windows.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let (mut correct, mut loss) = (0usize, 0.0);
    for &(s, end) in windows {
        let logits = model.infer(&corpus[s].window(end, model.config.window))?;
        let target = corpus[s].labels[end].class_index();
        let (l, _) = kernels::softmax_cross_entropy(&logits, target);
        loss += l;
        if usize::from(logits[1] > logits[0]) == target {
            correct += 1;
        }
    }
    Ok((correct as f64 / windows.len() as f64, loss / windows.len() as f64))
}

/// Trains the window classifier with Adam on shift-1 windows sampled at
/// random from the leading part of each stream.
pub fn train_tcn(
    model_cfg: TcnConfig,
    corpus: &[LabeledStream],
    tc: &TcnTrainConfig,
) -> Result<(TcnClassifier, Vec<EpochLog>)> {
    let mut model = TcnClassifier::new(model_cfg, tc.seed)?;
    if tc.batch_size == 0 || !(tc.lr > 0.0) || !(0.0..1.0).contains(&tc.val_fraction) {
        return Err(Error::Config(format!("invalid training configuration {tc:?}")));
    }
    let (train, val) = split_windows(corpus, model_cfg.window, tc.val_fraction);
    if train.is_empty() && tc.epochs > 0 {
        return Err(Error::InsufficientData(format!(
            "no training windows: every stream is shorter than {} samples",
            model_cfg.window
        )));
    }
    let val_eval = spread(&val, tc.val_windows);
    let train_eval = spread(&train, tc.val_windows);
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x7463_6e5f_7472_6169);
    let mut opt = Adam::new(tc.lr);
    let mut log = Vec::new();
    let record = |epoch: usize, model: &TcnClassifier, log: &mut Vec<EpochLog>| -> Result<()> {
        let (acc, loss) = evaluate_windows(model, corpus, &train_eval)?;
        log.push(EpochLog {
            epoch,
            split: "train".into(),
            accuracy: acc,
            loss,
        });
        if !val_eval.is_empty() {
            let (acc, loss) = evaluate_windows(model, corpus, &val_eval)?;
            log.push(EpochLog {
                epoch,
                split: "val".into(),
                accuracy: acc,
                loss,
            });
        }
        Ok(())
    };
    record(0, &model, &mut log)?;
    for epoch in 1..=tc.epochs {
        let picks: Vec<(usize, usize)> = (0..tc.windows_per_epoch)
            .map(|_| train[rng.random_range(0..train.len())])
            .collect();
        for batch in picks.chunks(tc.batch_size) {
            model.store.zero_grads();
            for &(s, end) in batch {
                let input = model.input_tensor(&corpus[s].window(end, model_cfg.window))?;
                let target = corpus[s].labels[end].class_index();
                let grads = {
                    let mut g = Graph::new(&model.store);
                    let x = g.input(input);
                    let logits = model.forward(&mut g, x)?;
                    let loss = g.softmax_cross_entropy(logits, target)?;
                    let value = g.value(loss).data()[0];
                    if !value.is_finite() {
                        return Err(Error::Numeric(format!("classifier loss became {value} in epoch {epoch}")));
                    }
                    g.backward(loss)?
                };
                model.store.accumulate(&grads)?;
            }
            model.store.scale_grads(1.0 / batch.len() as f64);
            opt.step(&mut model.store)?;
        }
        record(epoch, &model, &mut log)?;
    }
    Ok((model, log))
}

/// Classifier logits at the detector ticks of a stream (`i % decimation ==
/// 0` with a full window), with the sample index of each tick.
pub fn tcn_logit_stream(model: &TcnClassifier, accel: &[Vec3], decimation: usize) -> Result<Vec<(usize, [f64; 2])>> {
    let mut cache = WindowCache::new(model.config.window);
    let mut out = Vec::new();
    for (i, a) in accel.iter().enumerate() {
        cache.push_sample(a);
        if i % decimation.max(1) == 0 {
            if let Some(w) = cache.window() {
                out.push((i, model.infer(&w)?));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmootherTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Truncated back-propagation length in ticks.
    pub chunk: usize,
    pub decimation: usize,
    pub val_fraction: f64,
}

impl Default for SmootherTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            lr: 3e-3,
            seed: 2,
            chunk: 48,
            decimation: 50,
            val_fraction: 0.15,
        }
    }
}

/// Logit sequence and targets of one stream at detector ticks.
#[derive(Debug, Clone)]
pub struct LogitStream {
    pub logits: Vec<[f64; 2]>,
    pub targets: Vec<usize>,
}

pub fn logit_streams(tcn: &TcnClassifier, corpus: &[LabeledStream], decimation: usize) -> Result<Vec<LogitStream>> {
    corpus
        .iter()
        .map(|st| {
            let ticks = tcn_logit_stream(tcn, &st.accel, decimation)?;
            Ok(LogitStream {
                targets: ticks.iter().map(|(i, _)| st.labels[*i].class_index()).collect(),
                logits: ticks.into_iter().map(|(_, l)| l).collect(),
            })
        })
        .collect()
}

/// Runs the smoother over a whole stream from a reset state and scores the
/// ticks in `range`.
fn score_stream(sm: &LstmSmoother, ls: &LogitStream, range: std::ops::Range<usize>) -> Result<(usize, f64, usize)> {
    let mut s = sm.clone();
    s.reset();
    let (mut correct, mut loss, mut n) = (0, 0.0, 0);
    for (k, l) in ls.logits.iter().enumerate() {
        let (label, p) = s.step(l)?;
        if range.contains(&k) {
            let t = ls.targets[k];
            loss -= p[t].max(1e-300).ln();
            if label.class_index() == t {
                correct += 1;
            }
            n += 1;
        }
    }
    Ok((correct, loss, n))
}

fn score(sm: &LstmSmoother, streams: &[LogitStream], val_fraction: f64, val: bool) -> Result<(f64, f64)> {
    let (mut c, mut l, mut n) = (0, 0.0, 0);
    for ls in streams {
        let cut = ((ls.logits.len() as f64) * (1.0 - val_fraction)).round() as usize;
        let range = if val { cut..ls.logits.len() } else { 0..cut };
        let (ci, li, ni) = score_stream(sm, ls, range)?;
        c += ci;
        l += li;
        n += ni;
    }
    if n == 0 {
        return Ok((f64::NAN, f64::NAN));
    }
    Ok((c as f64 / n as f64, l / n as f64))
}

/// Trains the smoother with RMSProp on the frozen classifier's logit
/// streams. Each stream is processed in order from a reset state in chunks
/// of `chunk` ticks; the recurrent state is carried across chunks but
/// gradients are not.
pub fn train_smoother(
    tcn: &TcnClassifier,
    corpus: &[LabeledStream],
    sm_cfg: SmootherConfig,
    tc: &SmootherTrainConfig,
) -> Result<(LstmSmoother, Vec<EpochLog>)> {
    let streams = logit_streams(tcn, corpus, tc.decimation)?;
    train_smoother_on_logits(&streams, sm_cfg, tc)
}

pub fn train_smoother_on_logits(
    streams: &[LogitStream],
    sm_cfg: SmootherConfig,
    tc: &SmootherTrainConfig,
) -> Result<(LstmSmoother, Vec<EpochLog>)> {
    if tc.chunk == 0 || !(tc.lr > 0.0) || !(0.0..1.0).contains(&tc.val_fraction) {
        return Err(Error::Config(format!("invalid smoother training configuration {tc:?}")));
    }
    let mut sm = LstmSmoother::new(sm_cfg, tc.seed)?;
    let mut opt = RmsProp::new(tc.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x736d_6f6f_7468);
    let hidden = sm_cfg.hidden;
    let mut log = Vec::new();
    let record = |epoch: usize, sm: &LstmSmoother, log: &mut Vec<EpochLog>| -> Result<()> {
        for (split, val) in [("train", false), ("val", true)] {
            let (accuracy, loss) = score(sm, streams, tc.val_fraction, val)?;
            log.push(EpochLog {
                epoch,
                split: split.into(),
                accuracy,
                loss,
            });
        }
        Ok(())
    };
    record(0, &sm, &mut log)?;
    let mut order: Vec<usize> = (0..streams.len()).collect();
    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        for &si in &order {
            let ls = &streams[si];
            let cut = ((ls.logits.len() as f64) * (1.0 - tc.val_fraction)).round() as usize;
            let mut state: Vec<(Tensor, Tensor)> =
                vec![(Tensor::zeros(&[hidden]), Tensor::zeros(&[hidden])); sm_cfg.cells];
            let mut start = 0;
            while start < cut {
                let end = (start + tc.chunk).min(cut);
                let (grads, next_state) = {
                    let mut g = Graph::new(&sm.store);
                    let mut vars: Vec<(Var, Var)> =
                        state.iter().map(|(h, c)| (g.input(h.clone()), g.input(c.clone()))).collect();
                    let mut losses = Vec::with_capacity(end - start);
                    for k in start..end {
                        let out = sm.forward_step(&mut g, &ls.logits[k], &mut vars)?;
                        losses.push(g.softmax_cross_entropy(out, ls.targets[k])?);
                    }
                    let loss = g.mean(&losses)?;
                    let value = g.value(loss).data()[0];
                    if !value.is_finite() {
                        return Err(Error::Numeric(format!("smoother loss became {value} in epoch {epoch}")));
                    }
                    let next: Vec<(Tensor, Tensor)> =
                        vars.iter().map(|(h, c)| (g.value(*h).clone(), g.value(*c).clone())).collect();
                    (g.backward(loss)?, next)
                };
                sm.store.zero_grads();
                sm.store.accumulate(&grads)?;
                opt.step(&mut sm.store)?;
                state = next_state;
                start = end;
            }
        }
        record(epoch, &sm, &mut log)?;
    }
    sm.reset();
    Ok((sm, log))
}
