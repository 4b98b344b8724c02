use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, NnError, Result};
use crate::graph::{Graph, Var};
use crate::param::{ParamId, ParamStore};
use crate::tensor::Tensor;

/// Serializable description of a layer, as stored in checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    CausalConv1d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        dilation: usize,
    },
    Dense {
        input: usize,
        output: usize,
    },
    LstmCell {
        input: usize,
        hidden: usize,
    },
    Relu,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LayerSpec::CausalConv1d {
                in_ch,
                out_ch,
                kernel,
                dilation,
            } => in_ch > 0 && out_ch > 0 && kernel > 0 && dilation > 0,
            LayerSpec::Dense { input, output } => input > 0 && output > 0,
            LayerSpec::LstmCell { input, hidden } => input > 0 && hidden > 0,
            LayerSpec::Relu => true,
        };
        if ok {
            Ok(())
        } else {
            Err(NnError::Invalid(format!("layer dimensions must be positive: {self:?}")))
        }
    }
}

/// Receptive field of a stack of temporal blocks whose dilation doubles per
/// block starting at 1.
pub fn receptive_field(blocks: u32, kernel: usize, convs_per_block: usize) -> usize {
    1 + convs_per_block * kernel.saturating_sub(1) * ((1usize << blocks) - 1)
}

#[derive(Debug, Clone)]
pub struct CausalConv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl CausalConv1d {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        spec: LayerSpec,
        rng: &mut R,
    ) -> Result<Self> {
        spec.validate()?;
        let LayerSpec::CausalConv1d {
            in_ch,
            out_ch,
            kernel,
            dilation,
        } = spec
        else {
            return Err(NnError::Invalid(format!("not a convolution spec: {spec:?}")));
        };
        let fan_in = in_ch * kernel;
        let weight = store.add_uniform(format!("{name}.weight"), &[kernel, in_ch, out_ch], fan_in, rng);
        let bias = store.add_uniform(format!("{name}.bias"), &[out_ch], fan_in, rng);
        Ok(Self {
            in_ch,
            out_ch,
            kernel,
            dilation,
            weight,
            bias,
        })
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec::CausalConv1d {
            in_ch: self.in_ch,
            out_ch: self.out_ch,
            kernel: self.kernel,
            dilation: self.dilation,
        }
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var) -> Result<Var> {
        let shape = g.value(x).shape();
        if shape.len() != 2 || shape[1] != self.in_ch {
            return Err(shape_err(
                "causal_conv1d",
                format!("expected [T, {}], got {shape:?}", self.in_ch),
            ));
        }
        let w = g.param(self.weight);
        let b = g.param(self.bias);
        g.conv1d(x, w, b, self.dilation)
    }
}

#[derive(Debug, Clone)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, input: usize, output: usize, rng: &mut R) -> Self {
        let weight = store.add_uniform(format!("{name}.weight"), &[input, output], input, rng);
        let bias = store.add_uniform(format!("{name}.bias"), &[output], input, rng);
        Self {
            input,
            output,
            weight,
            bias,
        }
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec::Dense {
            input: self.input,
            output: self.output,
        }
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var) -> Result<Var> {
        let w = g.param(self.weight);
        let b = g.param(self.bias);
        g.dense(x, w, b)
    }
}

/// Hidden and cell state carried between LSTM steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Tensor,
    pub c: Tensor,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: Tensor::zeros(&[hidden]),
            c: Tensor::zeros(&[hidden]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LstmCell {
    pub input: usize,
    pub hidden: usize,
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
}

impl LstmCell {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        let w_ih = store.add_uniform(format!("{name}.w_ih"), &[input, 4 * hidden], hidden, rng);
        let w_hh = store.add_uniform(format!("{name}.w_hh"), &[hidden, 4 * hidden], hidden, rng);
        let bias = store.add_uniform(format!("{name}.bias"), &[4 * hidden], hidden, rng);
        Self {
            input,
            hidden,
            w_ih,
            w_hh,
            bias,
        }
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec::LstmCell {
            input: self.input,
            hidden: self.hidden,
        }
    }

    /// Records one step on the graph; returns `(h_new, c_new)`.
    pub fn forward(&self, g: &mut Graph<'_>, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let wi = g.param(self.w_ih);
        let wh = g.param(self.w_hh);
        let b = g.param(self.bias);
        let hc = g.lstm_cell(x, h, c, wi, wh, b)?;
        let h_new = g.slice(hc, 0, self.hidden)?;
        let c_new = g.slice(hc, self.hidden, self.hidden)?;
        Ok((h_new, c_new))
    }

    /// Inference step that advances `state` in place and returns `h_new`.
    pub fn step(&self, store: &ParamStore, x: &Tensor, state: &mut LstmState) -> Result<Tensor> {
        if x.shape() != [self.input] || state.h.shape() != [self.hidden] || state.c.shape() != [self.hidden] {
            return Err(shape_err(
                "lstm_cell_step",
                format!(
                    "x {:?}, h {:?}, c {:?} for a cell with input {} and hidden {}",
                    x.shape(),
                    state.h.shape(),
                    state.c.shape(),
                    self.input,
                    self.hidden
                ),
            ));
        }
        let mut hc = vec![0.0; 2 * self.hidden];
        crate::kernels::lstm_forward(
            self.input,
            self.hidden,
            x.data(),
            state.h.data(),
            state.c.data(),
            store.value(self.w_ih).data(),
            store.value(self.w_hh).data(),
            store.value(self.bias).data(),
            &mut hc,
        );
        state.h.data_mut().copy_from_slice(&hc[..self.hidden]);
        state.c.data_mut().copy_from_slice(&hc[self.hidden..]);
        Ok(state.h.clone())
    }
}
