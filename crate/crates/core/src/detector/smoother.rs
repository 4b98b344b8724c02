use gatenav_nn::{kernels, Checkpoint, Dense, Graph, LayerSpec, LstmCell, LstmState, ParamStore, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::MotionLabel;
use crate::error::{Error, Result};

pub const SMOOTHER_MODEL: &str = "lstm-smoother";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub hidden: usize,
    pub cells: usize,
    /// Scale applied to the incoming classifier logits.
    pub input_scale: f64,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            cells: 3,
            input_scale: 0.25,
        }
    }
}

/// Stacked LSTM over the classifier's logit stream with a dense head. The
/// recurrent state persists between calls until [`LstmSmoother::reset`].
#[derive(Debug, Clone)]
pub struct LstmSmoother {
    pub config: SmootherConfig,
    pub seed: u64,
    pub store: ParamStore,
    cells: Vec<LstmCell>,
    head: Dense,
    state: Vec<LstmState>,
}

impl LstmSmoother {
    pub fn new(config: SmootherConfig, seed: u64) -> Result<Self> {
        if config.hidden == 0 || config.cells == 0 || !(config.input_scale > 0.0) {
            return Err(Error::Config(format!("invalid smoother configuration {config:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let cells: Vec<LstmCell> = (0..config.cells)
            .map(|k| {
                let input = if k == 0 { 2 } else { config.hidden };
                LstmCell::new(&mut store, &format!("lstm{k}"), input, config.hidden, &mut rng)
            })
            .collect();
        let head = Dense::new(&mut store, "head", config.hidden, 2, &mut rng);
        let state = vec![LstmState::zeros(config.hidden); config.cells];
        Ok(Self {
            config,
            seed,
            store,
            cells,
            head,
            state,
        })
    }

    pub fn reset(&mut self) {
        self.state = vec![LstmState::zeros(self.config.hidden); self.config.cells];
    }

    pub fn state(&self) -> &[LstmState] {
        &self.state
    }

    fn input(&self, logits: &[f64; 2]) -> Tensor {
        let s = self.config.input_scale;
        Tensor::from_vec(vec![2], vec![logits[0] * s, logits[1] * s]).expect("shape [2] holds two values")
    }

    /// One inference step: smoothed label and class probabilities
    /// `[stillness, motion]`.
    pub fn step(&mut self, logits: &[f64; 2]) -> Result<(MotionLabel, [f64; 2])> {
        let mut x = self.input(logits);
        for (cell, st) in self.cells.iter().zip(self.state.iter_mut()) {
            x = cell.step(&self.store, &x, st)?;
        }
        let h = &self.head;
        let mut out = [0.0; 2];
        kernels::dense_forward(
            1,
            self.config.hidden,
            2,
            x.data(),
            self.store.value(h.weight).data(),
            self.store.value(h.bias).data(),
            &mut out,
        );
        let p = kernels::softmax(&out);
        let probs = [p[0], p[1]];
        let label = MotionLabel::from_class_index(usize::from(probs[1] > probs[0]));
        Ok((label, probs))
    }

    /// Records one step on a training graph; `state` holds `(h, c)` per
    /// cell and is advanced. Returns the output logits.
    pub fn forward_step(&self, g: &mut Graph<'_>, logits: &[f64; 2], state: &mut [(Var, Var)]) -> Result<Var> {
        let mut x = g.input(self.input(logits));
        for (cell, (h, c)) in self.cells.iter().zip(state.iter_mut()) {
            let (hn, cn) = cell.forward(g, x, *h, *c)?;
            *h = hn;
            *c = cn;
            x = hn;
        }
        Ok(self.head.forward(g, x)?)
    }

    pub fn layer_specs(&self) -> Vec<(String, LayerSpec)> {
        let mut out: Vec<(String, LayerSpec)> = self
            .cells
            .iter()
            .enumerate()
            .map(|(k, c)| (format!("lstm{k}"), c.spec()))
            .collect();
        out.push(("head".into(), self.head.spec()));
        out
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(SMOOTHER_MODEL, self.seed, self.layer_specs(), &self.store);
        ck.meta.insert("hidden".into(), self.config.hidden.to_string());
        ck.meta.insert("cells".into(), self.config.cells.to_string());
        ck.meta.insert("input_scale".into(), self.config.input_scale.to_string());
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.model != SMOOTHER_MODEL {
            return Err(Error::Model(format!(
                "expected a '{SMOOTHER_MODEL}' checkpoint, found '{}'",
                ck.model
            )));
        }
        let config = SmootherConfig {
            hidden: ck.meta_value("hidden")?,
            cells: ck.meta_value("cells")?,
            input_scale: ck.meta_value("input_scale")?,
        };
        let mut model = Self::new(config, ck.seed)?;
        ck.load_into(&mut model.store)?;
        Ok(model)
    }
}
