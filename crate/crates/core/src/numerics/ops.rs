//! Forward and backward passes for the layers used by the relation encoder.
//!
//! Every layer is a pair of free functions: the forward computes the output
//! from its inputs, the backward maps an upstream gradient onto the inputs
//! given whatever the forward needs to be saved. There is no graph; callers
//! (the encoder, the loss) chain them by hand.

use super::{NumericsError, Tensor};

/// Guard used by [`l2_normalize`].
pub const NORM_EPSILON: f64 = 1e-12;

/// Output length of a valid (unpadded) sliding window.
pub fn out_len(len: usize, window: usize, stride: usize) -> Option<usize> {
    if window == 0 || stride == 0 || len < window {
        return None;
    }
    Some((len - window) / stride + 1)
}

fn window_len(op: &'static str, len: usize, window: usize, stride: usize) -> Result<usize, NumericsError> {
    if stride == 0 || window == 0 {
        return Err(NumericsError::InvalidArgument {
            op,
            message: format!("window ({window}) and stride ({stride}) must be positive"),
        });
    }
    out_len(len, window, stride).ok_or(NumericsError::WindowTooLarge { op, len, window })
}

fn expect_rank(t: &Tensor, rank: usize, op: &'static str, what: &'static str) -> Result<(), NumericsError> {
    if t.rank() != rank {
        return Err(NumericsError::RankMismatch {
            op,
            what,
            expected: rank,
            found: t.shape().to_vec(),
        });
    }
    Ok(())
}

fn expect_dim(
    op: &'static str,
    dimension: &'static str,
    expected: usize,
    found: usize,
) -> Result<(), NumericsError> {
    if expected != found {
        return Err(NumericsError::DimensionMismatch {
            op,
            dimension,
            expected,
            found,
        });
    }
    Ok(())
}

/// Valid 1-D convolution. `input` is `[len, channels]`, `filters` is
/// `[window, channels, n_filters]`, `bias` is `[n_filters]`.
pub fn conv1d(input: &Tensor, filters: &Tensor, bias: &Tensor, stride: usize) -> Result<Tensor, NumericsError> {
    const OP: &str = "conv1d";
    expect_rank(input, 2, OP, "input")?;
    expect_rank(filters, 3, OP, "filters")?;
    expect_rank(bias, 1, OP, "bias")?;
    let (len, channels) = (input.dim(0), input.dim(1));
    let (window, n_filters) = (filters.dim(0), filters.dim(2));
    expect_dim(OP, "channels", channels, filters.dim(1))?;
    expect_dim(OP, "n_filters", n_filters, bias.dim(0))?;
    let out = window_len(OP, len, window, stride)?;

    let x = input.data();
    let w = filters.data();
    let mut y = Vec::with_capacity(out * n_filters);
    for _ in 0..out {
        y.extend_from_slice(bias.data());
    }
    for o in 0..out {
        let dst = &mut y[o * n_filters..(o + 1) * n_filters];
        for k in 0..window {
            let row = &x[(o * stride + k) * channels..(o * stride + k + 1) * channels];
            for (c, &xv) in row.iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let wrow = &w[(k * channels + c) * n_filters..(k * channels + c + 1) * n_filters];
                for (d, &wv) in dst.iter_mut().zip(wrow) {
                    *d += xv * wv;
                }
            }
        }
    }
    Tensor::new(vec![out, n_filters], y)
}

/// Gradients produced by [`conv1d_backward`].
#[derive(Debug, Clone)]
pub struct Conv1dGrads {
    /// `None` when the caller did not ask for the input gradient.
    pub input: Option<Tensor>,
    pub filters: Tensor,
    pub bias: Tensor,
}

pub fn conv1d_backward(
    input: &Tensor,
    filters: &Tensor,
    stride: usize,
    grad_out: &Tensor,
    want_input_grad: bool,
) -> Result<Conv1dGrads, NumericsError> {
    const OP: &str = "conv1d_backward";
    expect_rank(input, 2, OP, "input")?;
    expect_rank(filters, 3, OP, "filters")?;
    let (len, channels) = (input.dim(0), input.dim(1));
    let (window, n_filters) = (filters.dim(0), filters.dim(2));
    expect_dim(OP, "channels", channels, filters.dim(1))?;
    let out = window_len(OP, len, window, stride)?;
    grad_out.expect_shape(&[out, n_filters], OP)?;

    let x = input.data();
    let w = filters.data();
    let g = grad_out.data();
    let mut gw = vec![0.0; w.len()];
    let mut gb = vec![0.0; n_filters];
    let mut gx = if want_input_grad { vec![0.0; x.len()] } else { Vec::new() };

    for o in 0..out {
        let grow = &g[o * n_filters..(o + 1) * n_filters];
        for (b, &gv) in gb.iter_mut().zip(grow) {
            *b += gv;
        }
        for k in 0..window {
            let pos = o * stride + k;
            for c in 0..channels {
                let base = (k * channels + c) * n_filters;
                let xv = x[pos * channels + c];
                if xv != 0.0 {
                    for (dw, &gv) in gw[base..base + n_filters].iter_mut().zip(grow) {
                        *dw += xv * gv;
                    }
                }
                if want_input_grad {
                    let acc: f64 = w[base..base + n_filters].iter().zip(grow).map(|(a, b)| a * b).sum();
                    gx[pos * channels + c] += acc;
                }
            }
        }
    }

    Ok(Conv1dGrads {
        input: if want_input_grad {
            Some(Tensor::new(input.shape().to_vec(), gx)?)
        } else {
            None
        },
        filters: Tensor::new(filters.shape().to_vec(), gw)?,
        bias: Tensor::new(vec![n_filters], gb)?,
    })
}

/// Result of [`maxpool1d`]: pooled values plus, per output cell, the flat
/// input index that won.
#[derive(Debug, Clone)]
pub struct Pooled {
    pub output: Tensor,
    pub argmax: Vec<usize>,
}

/// Per-channel windowed max over `[len, channels]`. Ties go to the first
/// maximal position.
pub fn maxpool1d(input: &Tensor, window: usize, stride: usize) -> Result<Pooled, NumericsError> {
    const OP: &str = "maxpool1d";
    expect_rank(input, 2, OP, "input")?;
    let (len, channels) = (input.dim(0), input.dim(1));
    let out = window_len(OP, len, window, stride)?;
    let x = input.data();
    let mut values = Vec::with_capacity(out * channels);
    let mut argmax = Vec::with_capacity(out * channels);
    for o in 0..out {
        for c in 0..channels {
            let mut best = (o * stride) * channels + c;
            for k in 1..window {
                let idx = (o * stride + k) * channels + c;
                if x[idx] > x[best] {
                    best = idx;
                }
            }
            values.push(x[best]);
            argmax.push(best);
        }
    }
    Ok(Pooled {
        output: Tensor::new(vec![out, channels], values)?,
        argmax,
    })
}

pub fn maxpool1d_backward(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor,
) -> Result<Tensor, NumericsError> {
    if argmax.len() != grad_out.len() {
        return Err(NumericsError::DimensionMismatch {
            op: "maxpool1d_backward",
            dimension: "argmax",
            expected: grad_out.len(),
            found: argmax.len(),
        });
    }
    let mut gx = Tensor::zeros(input_shape);
    let dst = gx.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        dst[idx] += g;
    }
    Ok(gx)
}

pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// Gradient of relu is 1 where the input is strictly positive, 0 elsewhere.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Result<Tensor, NumericsError> {
    grad_out.expect_shape(input.shape(), "relu_backward")?;
    let mut g = grad_out.clone();
    for (gv, &xv) in g.data_mut().iter_mut().zip(input.data()) {
        if xv <= 0.0 {
            *gv = 0.0;
        }
    }
    Ok(g)
}

/// `weightᵀ · input + bias`, with `input: [n]`, `weight: [n, k]`, `bias: [k]`.
pub fn linear(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor, NumericsError> {
    const OP: &str = "linear";
    expect_rank(input, 1, OP, "input")?;
    expect_rank(weight, 2, OP, "weight")?;
    expect_rank(bias, 1, OP, "bias")?;
    let (n, k) = (weight.dim(0), weight.dim(1));
    expect_dim(OP, "in_features", n, input.dim(0))?;
    expect_dim(OP, "out_features", k, bias.dim(0))?;
    let mut y = bias.data().to_vec();
    for (i, &xv) in input.data().iter().enumerate() {
        if xv == 0.0 {
            continue;
        }
        for (d, &wv) in y.iter_mut().zip(weight.row(i)) {
            *d += xv * wv;
        }
    }
    Tensor::new(vec![k], y)
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

pub fn linear_backward(input: &Tensor, weight: &Tensor, grad_out: &Tensor) -> Result<LinearGrads, NumericsError> {
    const OP: &str = "linear_backward";
    expect_rank(input, 1, OP, "input")?;
    expect_rank(weight, 2, OP, "weight")?;
    let (n, k) = (weight.dim(0), weight.dim(1));
    expect_dim(OP, "in_features", n, input.dim(0))?;
    grad_out.expect_shape(&[k], OP)?;
    let g = grad_out.data();
    let mut gx = vec![0.0; n];
    let mut gw = vec![0.0; n * k];
    for (i, &xv) in input.data().iter().enumerate() {
        let wrow = weight.row(i);
        gx[i] = wrow.iter().zip(g).map(|(a, b)| a * b).sum();
        if xv != 0.0 {
            for (dw, &gv) in gw[i * k..(i + 1) * k].iter_mut().zip(g) {
                *dw = xv * gv;
            }
        }
    }
    Ok(LinearGrads {
        input: Tensor::new(vec![n], gx)?,
        weight: Tensor::new(vec![n, k], gw)?,
        bias: grad_out.clone(),
    })
}

/// `x / ‖x‖₂`. Fails on vectors whose norm is below [`NORM_EPSILON`].
pub fn l2_normalize(input: &Tensor) -> Result<Tensor, NumericsError> {
    let norm = input.l2_norm();
    if !(norm > NORM_EPSILON) {
        return Err(NumericsError::DegenerateVector { norm });
    }
    let mut out = input.clone();
    out.scale(1.0 / norm);
    Ok(out)
}

/// Backward of [`l2_normalize`]: `(g − ŷ (ŷ·g)) / ‖x‖`.
pub fn l2_normalize_backward(input: &Tensor, grad_out: &Tensor) -> Result<Tensor, NumericsError> {
    grad_out.expect_shape(input.shape(), "l2_normalize_backward")?;
    let norm = input.l2_norm();
    if !(norm > NORM_EPSILON) {
        return Err(NumericsError::DegenerateVector { norm });
    }
    let y: Vec<f64> = input.data().iter().map(|v| v / norm).collect();
    let dot: f64 = y.iter().zip(grad_out.data()).map(|(a, b)| a * b).sum();
    let g = grad_out
        .data()
        .iter()
        .zip(&y)
        .map(|(gv, yv)| (gv - yv * dot) / norm)
        .collect();
    Tensor::new(input.shape().to_vec(), g)
}

/// Concatenates `[len, c_i]` tensors along the channel axis.
pub fn concat_channels(parts: &[&Tensor]) -> Result<Tensor, NumericsError> {
    const OP: &str = "concat_channels";
    let first = parts.first().ok_or(NumericsError::InvalidArgument {
        op: OP,
        message: "no tensors to concatenate".into(),
    })?;
    let len = first.dim(0);
    for p in parts {
        expect_rank(p, 2, OP, "part")?;
        expect_dim(OP, "len", len, p.dim(0))?;
    }
    let total: usize = parts.iter().map(|p| p.dim(1)).sum();
    let mut out = Vec::with_capacity(len * total);
    for i in 0..len {
        for p in parts {
            out.extend_from_slice(p.row(i));
        }
    }
    Tensor::new(vec![len, total], out)
}

/// Inverse of [`concat_channels`] for gradients: splits `[len, Σc_i]` back
/// into per-part tensors.
pub fn split_channels(input: &Tensor, widths: &[usize]) -> Result<Vec<Tensor>, NumericsError> {
    const OP: &str = "split_channels";
    expect_rank(input, 2, OP, "input")?;
    expect_dim(OP, "channels", widths.iter().sum(), input.dim(1))?;
    let len = input.dim(0);
    let mut parts: Vec<Vec<f64>> = widths.iter().map(|w| Vec::with_capacity(len * w)).collect();
    for i in 0..len {
        let row = input.row(i);
        let mut start = 0;
        for (part, &w) in parts.iter_mut().zip(widths) {
            part.extend_from_slice(&row[start..start + w]);
            start += w;
        }
    }
    parts
        .into_iter()
        .zip(widths)
        .map(|(p, &w)| Tensor::new(vec![len, w], p))
        .collect()
}
