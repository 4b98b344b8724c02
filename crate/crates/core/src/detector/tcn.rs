use gatenav_nn::{receptive_field, CausalConv1d, Checkpoint, Dense, Graph, LayerSpec, ParamStore, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cache::WINDOW;
use crate::error::{Error, Result};

pub const TCN_MODEL: &str = "tcn";
const CONVS_PER_BLOCK: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcnConfig {
    /// Samples per input window.
    pub window: usize,
    pub hidden: usize,
    pub kernel: usize,
    /// Temporal blocks; block `b` uses dilation `2^b`.
    pub blocks: u32,
    /// Scale applied to the raw accelerations before the first layer.
    pub input_gain: f64,
}

impl Default for TcnConfig {
    fn default() -> Self {
        Self {
            window: WINDOW,
            hidden: 32,
            kernel: 8,
            blocks: 4,
            input_gain: 0.5,
        }
    }
}

impl TcnConfig {
    pub fn receptive_field(&self) -> usize {
        receptive_field(self.blocks, self.kernel, CONVS_PER_BLOCK)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.hidden == 0 || self.kernel == 0 || self.blocks == 0 {
            return Err(Error::Config(format!("TCN dimensions must be positive: {self:?}")));
        }
        if self.blocks > 16 {
            return Err(Error::Config(format!("TCN block count {} is too large", self.blocks)));
        }
        if !(self.input_gain > 0.0) || !self.input_gain.is_finite() {
            return Err(Error::Config(format!("TCN input gain must be positive, got {}", self.input_gain)));
        }
        let rf = self.receptive_field();
        if rf < self.window {
            return Err(Error::Config(format!(
                "receptive field {rf} does not cover the {}-sample window (blocks {}, kernel {})",
                self.window, self.blocks, self.kernel
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct TemporalBlock {
    convs: Vec<CausalConv1d>,
    downsample: Option<CausalConv1d>,
}

/// Dilated causal convolution classifier over a window of world-frame
/// accelerations. Each block is two convolutions with ReLU plus a residual
/// connection (1x1 convolution when the channel count changes); the head
/// reads the last time step.
#[derive(Debug, Clone)]
pub struct TcnClassifier {
    pub config: TcnConfig,
    pub seed: u64,
    pub store: ParamStore,
    blocks: Vec<TemporalBlock>,
    head: Dense,
}

impl TcnClassifier {
    pub fn new(config: TcnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let mut blocks = Vec::with_capacity(config.blocks as usize);
        let mut in_ch = 3;
        for b in 0..config.blocks {
            let dilation = 1usize << b;
            let mut convs = Vec::with_capacity(CONVS_PER_BLOCK);
            for c in 0..CONVS_PER_BLOCK {
                let spec = LayerSpec::CausalConv1d {
                    in_ch: if c == 0 { in_ch } else { config.hidden },
                    out_ch: config.hidden,
                    kernel: config.kernel,
                    dilation,
                };
                convs.push(CausalConv1d::new(&mut store, &format!("block{b}.conv{c}"), spec, &mut rng)?);
            }
            let downsample = if in_ch != config.hidden {
                let spec = LayerSpec::CausalConv1d {
                    in_ch,
                    out_ch: config.hidden,
                    kernel: 1,
                    dilation: 1,
                };
                Some(CausalConv1d::new(&mut store, &format!("block{b}.residual"), spec, &mut rng)?)
            } else {
                None
            };
            blocks.push(TemporalBlock { convs, downsample });
            in_ch = config.hidden;
        }
        let head = Dense::new(&mut store, "head", config.hidden, 2, &mut rng);
        Ok(Self {
            config,
            seed,
            store,
            blocks,
            head,
        })
    }

    pub fn layer_specs(&self) -> Vec<(String, LayerSpec)> {
        let mut out = Vec::new();
        for (b, block) in self.blocks.iter().enumerate() {
            for (c, conv) in block.convs.iter().enumerate() {
                out.push((format!("block{b}.conv{c}"), conv.spec()));
                out.push((format!("block{b}.relu{c}"), LayerSpec::Relu));
            }
            if let Some(d) = &block.downsample {
                out.push((format!("block{b}.residual"), d.spec()));
            }
        }
        out.push(("head".into(), self.head.spec()));
        out
    }

    /// Builds the input tensor `[window, 3]` from accelerations.
    pub fn input_tensor(&self, window: &[[f64; 3]]) -> Result<Tensor> {
        if window.len() != self.config.window {
            return Err(Error::Validation(format!(
                "window has {} samples, classifier expects {}",
                window.len(),
                self.config.window
            )));
        }
        let gain = self.config.input_gain;
        let data = window.iter().flat_map(|s| s.iter().map(move |v| v * gain)).collect();
        Ok(Tensor::from_vec(vec![self.config.window, 3], data)?)
    }

    /// Records the forward pass; returns the 2 logits.
    pub fn forward(&self, g: &mut Graph<'_>, x: Var) -> Result<Var> {
        let mut h = x;
        for block in &self.blocks {
            let mut y = h;
            for conv in &block.convs {
                y = conv.forward(g, y)?;
                y = g.relu(y);
            }
            let res = match &block.downsample {
                Some(d) => d.forward(g, h)?,
                None => h,
            };
            let s = g.add(y, res)?;
            h = g.relu(s);
        }
        let last = g.last_step(h)?;
        Ok(self.head.forward(g, last)?)
    }

    /// Logits `[stillness, motion]` for one window.
    pub fn infer(&self, window: &[[f64; 3]]) -> Result<[f64; 2]> {
        let input = self.input_tensor(window)?;
        let mut g = Graph::new(&self.store);
        let x = g.input(input);
        let logits = self.forward(&mut g, x)?;
        let d = g.value(logits).data();
        Ok([d[0], d[1]])
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(TCN_MODEL, self.seed, self.layer_specs(), &self.store);
        let c = &self.config;
        for (k, v) in [
            ("window", c.window.to_string()),
            ("hidden", c.hidden.to_string()),
            ("kernel", c.kernel.to_string()),
            ("blocks", c.blocks.to_string()),
            ("input_gain", c.input_gain.to_string()),
        ] {
            ck.meta.insert(k.into(), v);
        }
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.model != TCN_MODEL {
            return Err(Error::Model(format!("expected a '{TCN_MODEL}' checkpoint, found '{}'", ck.model)));
        }
        let config = TcnConfig {
            window: ck.meta_value("window")?,
            hidden: ck.meta_value("hidden")?,
            kernel: ck.meta_value("kernel")?,
            blocks: ck.meta_value("blocks")?,
            input_gain: ck.meta_value("input_gain")?,
        };
        let mut model = Self::new(config, ck.seed)?;
        ck.load_into(&mut model.store)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(seed: u64) -> Vec<[f64; 3]> {
        (0..WINDOW)
            .map(|k| {
                let x = (k as f64 * 0.37 + seed as f64).sin();
                [x, 0.5 * x, -x]
            })
            .collect()
    }

    #[test]
    fn default_receptive_field_covers_the_window() {
        assert_eq!(TcnConfig::default().receptive_field(), 211);
        assert!(TcnClassifier::new(TcnConfig::default(), 1).is_ok());
    }

    #[test]
    fn short_receptive_field_is_rejected() {
        let cfg = TcnConfig {
            kernel: 2,
            ..TcnConfig::default()
        };
        // Two convolutions per block: 1 + 2 * 1 * 15 = 31 < 100.
        assert_eq!(cfg.receptive_field(), 31);
        assert!(TcnClassifier::new(cfg, 1).is_err());
    }

    #[test]
    fn inference_is_deterministic() {
        let m = TcnClassifier::new(TcnConfig::default(), 3).unwrap();
        let w = window(0);
        assert_eq!(m.infer(&w).unwrap(), m.infer(&w).unwrap());
    }

    #[test]
    fn first_window_sample_influences_logits() {
        let m = TcnClassifier::new(TcnConfig::default(), 4).unwrap();
        let w = window(1);
        let mut edited = w.clone();
        edited[0] = [5.0, -5.0, 5.0];
        assert_ne!(m.infer(&w).unwrap(), m.infer(&edited).unwrap());
    }

    #[test]
    fn wrong_window_length_is_rejected() {
        let m = TcnClassifier::new(TcnConfig::default(), 4).unwrap();
        assert!(m.infer(&window(0)[..99]).is_err());
    }

    #[test]
    fn checkpoint_round_trip_preserves_logits() {
        let m = TcnClassifier::new(TcnConfig::default(), 9).unwrap();
        let ck = gatenav_nn::Checkpoint::from_json(&m.to_checkpoint().to_json().unwrap()).unwrap();
        let back = TcnClassifier::from_checkpoint(&ck).unwrap();
        let w = window(2);
        assert_eq!(m.infer(&w).unwrap(), back.infer(&w).unwrap());
    }
}
