use crate::error::{shape_err, NnError, Result};
use crate::kernels::{self, ConvDims, LstmCache};
use crate::param::{ParamId, ParamStore};
use crate::tensor::Tensor;

/// Handle to a node recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    Conv1d {
        x: Var,
        w: Var,
        b: Var,
        dilation: usize,
    },
    Dense {
        x: Var,
        w: Var,
        b: Var,
    },
    Relu(Var),
    Add(Var, Var),
    LastStep(Var),
    Slice {
        x: Var,
        start: usize,
    },
    Lstm {
        x: Var,
        h: Var,
        c: Var,
        w_ih: Var,
        w_hh: Var,
        b: Var,
        cache: LstmCache,
    },
    SoftmaxCe {
        logits: Var,
        target: usize,
        probs: Vec<f64>,
    },
    Mean(Vec<Var>),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Gradients of one backward pass, indexed by parameter.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    slots: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.slots.get(id.0).and_then(|s| s.as_ref())
    }

    pub(crate) fn len(&self) -> usize {
        self.slots.len()
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (usize, &Tensor)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|t| (i, t)))
    }
}

/// A recording of one forward pass. Parameters are read from the borrowed
/// store; [`Graph::backward`] returns their gradients without touching it.
pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(Op::Input, t)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        // Parameters are re-read from the store at backward time; the node
        // keeps a copy so forward code can treat every operand uniformly.
        let value = self.store.value(id).clone();
        self.push(Op::Param(id), value)
    }

    /// Causal dilated convolution. `x: [T, C_in]`, `w: [K, C_in, C_out]`, `b: [C_out]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var, dilation: usize) -> Result<Var> {
        if dilation == 0 {
            return Err(NnError::Invalid("dilation must be >= 1".into()));
        }
        let (xs, ws, bs) = (self.value(x).shape(), self.value(w).shape(), self.value(b).shape());
        let ([steps, cin], [kernel, wcin, cout], [bout]) = (xs, ws, bs) else {
            return Err(shape_err(
                "conv1d",
                format!("expected x [T,C], w [K,C_in,C_out], b [C_out]; got {xs:?}, {ws:?}, {bs:?}"),
            ));
        };
        if cin != wcin || cout != bout {
            return Err(shape_err(
                "conv1d",
                format!("input has {cin} channels, weights expect {wcin}; bias {bout} vs out {cout}"),
            ));
        }
        let dims = ConvDims {
            steps: *steps,
            in_ch: *cin,
            out_ch: *cout,
            kernel: *kernel,
            dilation,
        };
        let mut out = Tensor::zeros(&[dims.steps, dims.out_ch]);
        kernels::conv1d_forward(
            &dims,
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            out.data_mut(),
        );
        Ok(self.push(Op::Conv1d { x, w, b, dilation }, out))
    }

    /// Affine map. `x: [N, in]` or `[in]`, `w: [in, out]`, `b: [out]`.
    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xv = self.value(x);
        let (rows, inp) = xv.rows_cols();
        let ws = self.value(w).shape();
        let bs = self.value(b).shape();
        let ([win, outp], [bout]) = (ws, bs) else {
            return Err(shape_err("dense", format!("bad weight/bias shapes {ws:?}, {bs:?}")));
        };
        if rows == 0 || inp != *win || outp != bout {
            return Err(shape_err(
                "dense",
                format!("input {:?} incompatible with weights {ws:?} and bias {bs:?}", xv.shape()),
            ));
        }
        let out_shape = if xv.rank() == 1 { vec![*outp] } else { vec![rows, *outp] };
        let (outp, inp) = (*outp, inp);
        let mut out = Tensor::zeros(&out_shape);
        kernels::dense_forward(
            rows,
            inp,
            outp,
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            out.data_mut(),
        );
        Ok(self.push(Op::Dense { x, w, b }, out))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let mut out = self.value(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        self.push(Op::Relu(x), out)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(shape_err(
                "add",
                format!("{:?} vs {:?}", self.value(a).shape(), self.value(b).shape()),
            ));
        }
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        Ok(self.push(Op::Add(a, b), out))
    }

    /// Selects the final row of a `[T, C]` sequence, giving `[C]`.
    pub fn last_step(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let [steps, ch] = xv.shape() else {
            return Err(shape_err("last_step", format!("expected [T, C], got {:?}", xv.shape())));
        };
        let (steps, ch) = (*steps, *ch);
        let out = Tensor::from_vec(vec![ch], xv.data()[(steps - 1) * ch..].to_vec())?;
        Ok(self.push(Op::LastStep(x), out))
    }

    /// Contiguous slice `[start, start + len)` of a rank-1 tensor.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        if xv.rank() != 1 || start + len > xv.len() || len == 0 {
            return Err(shape_err(
                "slice",
                format!("cannot take [{start}, {}) of {:?}", start + len, xv.shape()),
            ));
        }
        let out = Tensor::from_vec(vec![len], xv.data()[start..start + len].to_vec())?;
        Ok(self.push(Op::Slice { x, start }, out))
    }

    /// One LSTM step; the result is `[h_new ; c_new]` of length `2H`.
    #[allow(clippy::too_many_arguments)]
    pub fn lstm_cell(&mut self, x: Var, h: Var, c: Var, w_ih: Var, w_hh: Var, b: Var) -> Result<Var> {
        let ws = self.value(w_ih).shape().to_vec();
        let hs = self.value(w_hh).shape().to_vec();
        let [input, g4] = ws[..] else {
            return Err(shape_err("lstm", format!("w_ih must be [in, 4H], got {ws:?}")));
        };
        let hidden = g4 / 4;
        if g4 % 4 != 0
            || hs != [hidden, g4]
            || self.value(b).shape() != [g4]
            || self.value(x).shape() != [input]
            || self.value(h).shape() != [hidden]
            || self.value(c).shape() != [hidden]
        {
            return Err(shape_err(
                "lstm",
                format!(
                    "x {:?}, h {:?}, c {:?} incompatible with w_ih {ws:?}, w_hh {hs:?}",
                    self.value(x).shape(),
                    self.value(h).shape(),
                    self.value(c).shape()
                ),
            ));
        }
        let mut out = Tensor::zeros(&[2 * hidden]);
        let cache = kernels::lstm_forward(
            input,
            hidden,
            self.value(x).data(),
            self.value(h).data(),
            self.value(c).data(),
            self.value(w_ih).data(),
            self.value(w_hh).data(),
            self.value(b).data(),
            out.data_mut(),
        );
        Ok(self.push(
            Op::Lstm {
                x,
                h,
                c,
                w_ih,
                w_hh,
                b,
                cache,
            },
            out,
        ))
    }

    pub fn softmax_cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let lv = self.value(logits);
        if lv.rank() != 1 {
            return Err(shape_err("softmax_cross_entropy", format!("logits must be rank 1, got {:?}", lv.shape())));
        }
        if target >= lv.len() {
            return Err(NnError::Invalid(format!(
                "target class {target} out of range for {} logits",
                lv.len()
            )));
        }
        if !lv.is_finite() {
            return Err(NnError::NonFinite {
                context: "softmax_cross_entropy".into(),
                detail: format!("logits {:?}", lv.data()),
            });
        }
        let (loss, probs) = kernels::softmax_cross_entropy(lv.data(), target);
        Ok(self.push(Op::SoftmaxCe { logits, target, probs }, Tensor::scalar(loss)))
    }

    /// Mean of scalar nodes.
    pub fn mean(&mut self, terms: &[Var]) -> Result<Var> {
        if terms.is_empty() {
            return Err(NnError::Invalid("mean of zero terms".into()));
        }
        let mut s = 0.0;
        for &t in terms {
            let v = self.value(t);
            if v.len() != 1 {
                return Err(shape_err("mean", format!("term {:?} is not scalar", v.shape())));
            }
            s += v.data()[0];
        }
        Ok(self.push(Op::Mean(terms.to_vec()), Tensor::scalar(s / terms.len() as f64)))
    }

    /// Reverse pass from a scalar root. Calling it twice yields the same
    /// gradients; accumulating both into a store doubles them.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        if self.nodes.is_empty() || root.0 >= self.nodes.len() {
            return Err(NnError::State("backward called before any forward pass was recorded".into()));
        }
        if self.value(root).len() != 1 {
            return Err(NnError::State(format!(
                "backward root must be scalar, got {:?}",
                self.value(root).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..=root.0).map(|_| None).collect();
        grads[root.0] = Some(Tensor::scalar(1.0));
        let mut out = Gradients {
            slots: vec![None; self.store.len()],
        };

        for idx in (0..=root.0).rev() {
            let Some(gy) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => match &mut out.slots[id.0] {
                    Some(acc) => acc.add_assign(&gy),
                    slot @ None => *slot = Some(gy),
                },
                Op::Conv1d { x, w, b, dilation } => {
                    let (xv, wv) = (self.value(*x), self.value(*w));
                    let ws = wv.shape();
                    let dims = ConvDims {
                        steps: xv.shape()[0],
                        in_ch: ws[1],
                        out_ch: ws[2],
                        kernel: ws[0],
                        dilation: *dilation,
                    };
                    let mut gx = Tensor::zeros(xv.shape());
                    let mut gw = Tensor::zeros(ws);
                    let mut gb = Tensor::zeros(&[dims.out_ch]);
                    kernels::conv1d_backward(
                        &dims,
                        xv.data(),
                        wv.data(),
                        gy.data(),
                        gx.data_mut(),
                        gw.data_mut(),
                        gb.data_mut(),
                    );
                    accumulate(&mut grads, *x, gx);
                    accumulate(&mut grads, *w, gw);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Dense { x, w, b } => {
                    let (xv, wv) = (self.value(*x), self.value(*w));
                    let (rows, inp) = xv.rows_cols();
                    let outp = wv.shape()[1];
                    let mut gx = Tensor::zeros(xv.shape());
                    let mut gw = Tensor::zeros(wv.shape());
                    let mut gb = Tensor::zeros(&[outp]);
                    kernels::dense_backward(
                        rows,
                        inp,
                        outp,
                        xv.data(),
                        wv.data(),
                        gy.data(),
                        gx.data_mut(),
                        gw.data_mut(),
                        gb.data_mut(),
                    );
                    accumulate(&mut grads, *x, gx);
                    accumulate(&mut grads, *w, gw);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Relu(x) => {
                    let mut gx = gy;
                    for (g, y) in gx.data_mut().iter_mut().zip(node.value.data()) {
                        if *y <= 0.0 {
                            *g = 0.0;
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *b, gy.clone());
                    accumulate(&mut grads, *a, gy);
                }
                Op::LastStep(x) => {
                    let xv = self.value(*x);
                    let mut gx = Tensor::zeros(xv.shape());
                    let ch = xv.shape()[1];
                    let off = xv.len() - ch;
                    gx.data_mut()[off..].copy_from_slice(gy.data());
                    accumulate(&mut grads, *x, gx);
                }
                Op::Slice { x, start } => {
                    let mut gx = Tensor::zeros(self.value(*x).shape());
                    gx.data_mut()[*start..*start + gy.len()].copy_from_slice(gy.data());
                    accumulate(&mut grads, *x, gx);
                }
                Op::Lstm {
                    x,
                    h,
                    c,
                    w_ih,
                    w_hh,
                    b,
                    cache,
                } => {
                    let (xv, hv, cv) = (self.value(*x), self.value(*h), self.value(*c));
                    let (wi, wh) = (self.value(*w_ih), self.value(*w_hh));
                    let input = xv.len();
                    let hidden = hv.len();
                    let mut gx = Tensor::zeros(xv.shape());
                    let mut gh = Tensor::zeros(hv.shape());
                    let mut gc = Tensor::zeros(cv.shape());
                    let mut gwi = Tensor::zeros(wi.shape());
                    let mut gwh = Tensor::zeros(wh.shape());
                    let mut gb = Tensor::zeros(&[4 * hidden]);
                    kernels::lstm_backward(
                        input,
                        hidden,
                        xv.data(),
                        hv.data(),
                        cv.data(),
                        wi.data(),
                        wh.data(),
                        cache,
                        gy.data(),
                        gx.data_mut(),
                        gh.data_mut(),
                        gc.data_mut(),
                        gwi.data_mut(),
                        gwh.data_mut(),
                        gb.data_mut(),
                    );
                    accumulate(&mut grads, *x, gx);
                    accumulate(&mut grads, *h, gh);
                    accumulate(&mut grads, *c, gc);
                    accumulate(&mut grads, *w_ih, gwi);
                    accumulate(&mut grads, *w_hh, gwh);
                    accumulate(&mut grads, *b, gb);
                }
                Op::SoftmaxCe { logits, target, probs } => {
                    let scale = gy.data()[0];
                    let mut gl = Tensor::zeros(&[probs.len()]);
                    for (k, g) in gl.data_mut().iter_mut().enumerate() {
                        let onehot = if k == *target { 1.0 } else { 0.0 };
                        *g = scale * (probs[k] - onehot);
                    }
                    accumulate(&mut grads, *logits, gl);
                }
                Op::Mean(terms) => {
                    let share = gy.data()[0] / terms.len() as f64;
                    for &t in terms {
                        accumulate(&mut grads, t, Tensor::scalar(share));
                    }
                }
            }
        }

        for (i, slot) in out.slots.iter().enumerate() {
            if let Some(g) = slot {
                if !g.is_finite() {
                    return Err(NnError::NonFinite {
                        context: "backward".into(),
                        detail: format!("gradient of parameter '{}'", self.store.get(ParamId(i)).name),
                    });
                }
            }
        }
        Ok(out)
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_on_empty_graph_is_a_state_error() {
        let store = ParamStore::new();
        let g = Graph::new(&store);
        assert!(matches!(g.backward(Var(0)), Err(NnError::State(_))));
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.input(Tensor::zeros(&[3]));
        assert!(matches!(g.backward(x), Err(NnError::State(_))));
    }

    #[test]
    fn unused_parameter_gets_no_gradient() {
        let mut store = ParamStore::new();
        let used = store.add("used", Tensor::from_vec(vec![2], vec![0.3, -0.2]).unwrap());
        let unused = store.add("unused", Tensor::from_vec(vec![2], vec![1.0, 1.0]).unwrap());
        let grads = {
            let mut g = Graph::new(&store);
            let p = g.param(used);
            let loss = g.softmax_cross_entropy(p, 0).unwrap();
            g.backward(loss).unwrap()
        };
        assert!(grads.get(used).is_some());
        assert!(grads.get(unused).is_none());
        store.accumulate(&grads).unwrap();
        assert!(store.get(unused).grad.data().iter().all(|&g| g == 0.0));
    }
}
