//! Forward and backward kernels on raw slices.
//!
//! Layouts:
//! - sequences are `[T, C]` row-major;
//! - convolution weights are `[K, C_in, C_out]`, tap `K-1` being the current
//!   timestep and tap `k` looking back `(K-1-k) * dilation` steps;
//! - dense weights are `[in, out]`;
//! - LSTM weights are `[in, 4H]` and `[H, 4H]` with gate blocks ordered
//!   input, forget, cell candidate, output.

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Dot product with four fixed accumulators. The reduction order depends
/// only on the length, so results are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub struct ConvDims {
    pub steps: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub dilation: usize,
}

impl ConvDims {
    #[inline]
    fn lag(&self, tap: usize) -> usize {
        (self.kernel - 1 - tap) * self.dilation
    }
}

pub fn conv1d_forward(d: &ConvDims, x: &[f64], w: &[f64], b: &[f64], out: &mut [f64]) {
    let (ci, co) = (d.in_ch, d.out_ch);
    for t in 0..d.steps {
        let row = &mut out[t * co..(t + 1) * co];
        row.copy_from_slice(b);
        for k in 0..d.kernel {
            let lag = d.lag(k);
            if lag > t {
                continue;
            }
            let xs = &x[(t - lag) * ci..(t - lag + 1) * ci];
            let wk = &w[k * ci * co..(k + 1) * ci * co];
            for (i, &xv) in xs.iter().enumerate() {
                if xv != 0.0 {
                    axpy(row, xv, &wk[i * co..(i + 1) * co]);
                }
            }
        }
    }
}

/// Accumulates input, weight and bias gradients for a causal convolution.
pub fn conv1d_backward(
    d: &ConvDims,
    x: &[f64],
    w: &[f64],
    gy: &[f64],
    gx: &mut [f64],
    gw: &mut [f64],
    gb: &mut [f64],
) {
    let (ci, co) = (d.in_ch, d.out_ch);
    for t in 0..d.steps {
        let g = &gy[t * co..(t + 1) * co];
        if g.iter().all(|v| *v == 0.0) {
            continue;
        }
        axpy(gb, 1.0, g);
        for k in 0..d.kernel {
            let lag = d.lag(k);
            if lag > t {
                continue;
            }
            let src = (t - lag) * ci;
            let wk = &w[k * ci * co..(k + 1) * ci * co];
            let gwk = &mut gw[k * ci * co..(k + 1) * ci * co];
            for i in 0..ci {
                let xv = x[src + i];
                if xv != 0.0 {
                    axpy(&mut gwk[i * co..(i + 1) * co], xv, g);
                }
                gx[src + i] += dot(&wk[i * co..(i + 1) * co], g);
            }
        }
    }
}

pub fn dense_forward(rows: usize, inp: usize, outp: usize, x: &[f64], w: &[f64], b: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &mut out[r * outp..(r + 1) * outp];
        row.copy_from_slice(b);
        for i in 0..inp {
            let xv = x[r * inp + i];
            axpy(row, xv, &w[i * outp..(i + 1) * outp]);
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn dense_backward(
    rows: usize,
    inp: usize,
    outp: usize,
    x: &[f64],
    w: &[f64],
    gy: &[f64],
    gx: &mut [f64],
    gw: &mut [f64],
    gb: &mut [f64],
) {
    for r in 0..rows {
        let g = &gy[r * outp..(r + 1) * outp];
        axpy(gb, 1.0, g);
        for i in 0..inp {
            let xv = x[r * inp + i];
            axpy(&mut gw[i * outp..(i + 1) * outp], xv, g);
            gx[r * inp + i] += dot(&w[i * outp..(i + 1) * outp], g);
        }
    }
}

/// Activations cached by [`lstm_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    /// Post-activation gates, `[4H]`: i, f, g, o.
    pub gates: Vec<f64>,
    /// `tanh(c_new)`, `[H]`.
    pub tanh_c: Vec<f64>,
}

/// One LSTM step. Writes `h_new` and `c_new` into `hc_out` (`[2H]`).
#[allow(clippy::too_many_arguments)]
pub fn lstm_forward(
    input: usize,
    hidden: usize,
    x: &[f64],
    h: &[f64],
    c: &[f64],
    w_ih: &[f64],
    w_hh: &[f64],
    b: &[f64],
    hc_out: &mut [f64],
) -> LstmCache {
    let g4 = 4 * hidden;
    let mut z = b.to_vec();
    for (j, &xv) in x.iter().enumerate().take(input) {
        axpy(&mut z, xv, &w_ih[j * g4..(j + 1) * g4]);
    }
    for (j, &hv) in h.iter().enumerate().take(hidden) {
        axpy(&mut z, hv, &w_hh[j * g4..(j + 1) * g4]);
    }
    for k in 0..hidden {
        z[k] = sigmoid(z[k]);
        z[hidden + k] = sigmoid(z[hidden + k]);
        z[2 * hidden + k] = z[2 * hidden + k].tanh();
        z[3 * hidden + k] = sigmoid(z[3 * hidden + k]);
    }
    let mut tanh_c = vec![0.0; hidden];
    for k in 0..hidden {
        let (ig, fg, gg, og) = (z[k], z[hidden + k], z[2 * hidden + k], z[3 * hidden + k]);
        let c_new = fg * c[k] + ig * gg;
        tanh_c[k] = c_new.tanh();
        hc_out[k] = og * tanh_c[k];
        hc_out[hidden + k] = c_new;
    }
    LstmCache { gates: z, tanh_c }
}

#[allow(clippy::too_many_arguments)]
pub fn lstm_backward(
    input: usize,
    hidden: usize,
    x: &[f64],
    h: &[f64],
    c: &[f64],
    w_ih: &[f64],
    w_hh: &[f64],
    cache: &LstmCache,
    g_hc: &[f64],
    gx: &mut [f64],
    gh: &mut [f64],
    gc: &mut [f64],
    gw_ih: &mut [f64],
    gw_hh: &mut [f64],
    gb: &mut [f64],
) {
    let g4 = 4 * hidden;
    let z = &cache.gates;
    let mut dz = vec![0.0; g4];
    for k in 0..hidden {
        let (ig, fg, gg, og) = (z[k], z[hidden + k], z[2 * hidden + k], z[3 * hidden + k]);
        let tc = cache.tanh_c[k];
        let dh = g_hc[k];
        let dc = g_hc[hidden + k] + dh * og * (1.0 - tc * tc);
        let d_o = dh * tc;
        let d_i = dc * gg;
        let d_g = dc * ig;
        let d_f = dc * c[k];
        gc[k] += dc * fg;
        dz[k] = d_i * ig * (1.0 - ig);
        dz[hidden + k] = d_f * fg * (1.0 - fg);
        dz[2 * hidden + k] = d_g * (1.0 - gg * gg);
        dz[3 * hidden + k] = d_o * og * (1.0 - og);
    }
    axpy(gb, 1.0, &dz);
    for j in 0..input {
        axpy(&mut gw_ih[j * g4..(j + 1) * g4], x[j], &dz);
        gx[j] += dot(&w_ih[j * g4..(j + 1) * g4], &dz);
    }
    for j in 0..hidden {
        axpy(&mut gw_hh[j * g4..(j + 1) * g4], h[j], &dz);
        gh[j] += dot(&w_hh[j * g4..(j + 1) * g4], &dz);
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// Returns `(loss, softmax)` where `loss = -log softmax(logits)[target]`,
/// evaluated as `logsumexp(logits) - logits[target]`.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|v| (v - m).exp()).sum();
    let lse = m + sum.ln();
    let loss = lse - logits[target];
    (loss, softmax(logits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_sum_on_short_and_long_inputs() {
        for n in [0usize, 1, 3, 4, 7, 33] {
            let a: Vec<f64> = (0..n).map(|i| i as f64 * 0.5 - 1.0).collect();
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert!((dot(&a, &b) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn sigmoid_is_stable_for_large_inputs() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
