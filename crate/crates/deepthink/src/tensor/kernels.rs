//! Pure numeric kernels behind the tape operations.
//!
//! Convolutions run on a zero-padded per-sample copy of the input so the
//! inner loops are branch-free row accumulations; the 3x3 stride-1 case
//! (every convolution in the architecture families here) is fused into a
//! single nine-tap pass per output row. The weight gradient reuses the same
//! padded rows, and the input gradient of a stride-1 convolution is computed
//! as a convolution of the output gradient with the flipped, transposed
//! kernel. Strides other than one fall back to plain loops.

use super::Element;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub in_ch: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub dilation: usize,
    pub out_h: usize,
    pub out_w: usize,
}

pub fn conv_geometry(
    input_shape: &[usize],
    weight_shape: &[usize],
    bias_len: Option<usize>,
    stride: usize,
    padding: usize,
    dilation: usize,
) -> Result<ConvGeometry> {
    if stride == 0 || dilation == 0 {
        return Err(Error::invalid(format!(
            "conv2d stride and dilation must be positive (stride={stride}, dilation={dilation})"
        )));
    }
    let [n, c, h, w] = match input_shape {
        &[n, c, h, w] => [n, c, h, w],
        _ => {
            return Err(Error::shape(format!(
                "conv2d input must be NCHW, got {input_shape:?}"
            )))
        }
    };
    let [o, i, kh, kw] = match weight_shape {
        &[o, i, kh, kw] => [o, i, kh, kw],
        _ => {
            return Err(Error::shape(format!(
                "conv2d weight must be OIKK, got {weight_shape:?}"
            )))
        }
    };
    if kh != kw {
        return Err(Error::shape(format!(
            "conv2d kernel must be square, got {kh}x{kw}"
        )));
    }
    if i != c {
        return Err(Error::shape(format!(
            "conv2d channel mismatch: input {input_shape:?} has {c} channels, weight {weight_shape:?} expects {i}"
        )));
    }
    if let Some(b) = bias_len {
        if b != o {
            return Err(Error::shape(format!(
                "conv2d bias length {b} does not match {o} output channels"
            )));
        }
    }
    let span = dilation * (kh - 1) + 1;
    if h + 2 * padding < span || w + 2 * padding < span {
        return Err(Error::shape(format!(
            "conv2d kernel span {span} exceeds padded input {}x{} (input {input_shape:?}, padding {padding}, dilation {dilation})",
            h + 2 * padding,
            w + 2 * padding
        )));
    }
    let out_h = (h + 2 * padding - span) / stride + 1;
    let out_w = (w + 2 * padding - span) / stride + 1;
    Ok(ConvGeometry {
        batch: n,
        in_ch: c,
        in_h: h,
        in_w: w,
        out_ch: o,
        kernel: kh,
        stride,
        padding,
        dilation,
        out_h,
        out_w,
    })
}

/// Copies one sample's `C x H x W` planes into a zero-padded `C x PH x PW`
/// scratch buffer.
fn pad_sample<E: Element>(src: &[E], c: usize, h: usize, w: usize, pad: usize, dst: &mut [E]) {
    let pw = w + 2 * pad;
    let ph = h + 2 * pad;
    debug_assert_eq!(dst.len(), c * ph * pw);
    dst.fill(E::ZERO);
    for ch in 0..c {
        for row in 0..h {
            let s = &src[ch * h * w + row * w..][..w];
            let d = &mut dst[ch * ph * pw + (row + pad) * pw + pad..][..w];
            d.copy_from_slice(s);
        }
    }
}

pub fn conv2d_forward<E: Element>(
    g: &ConvGeometry,
    input: &[E],
    weight: &[E],
    bias: Option<&[E]>,
    out: &mut [E],
) {
    let (oh, ow) = (g.out_h, g.out_w);
    debug_assert_eq!(out.len(), g.batch * g.out_ch * oh * ow);
    let ph = g.in_h + 2 * g.padding;
    let pw = g.in_w + 2 * g.padding;
    let mut padded = vec![E::ZERO; g.in_ch * ph * pw];
    for n in 0..g.batch {
        pad_sample(
            &input[n * g.in_ch * g.in_h * g.in_w..][..g.in_ch * g.in_h * g.in_w],
            g.in_ch,
            g.in_h,
            g.in_w,
            g.padding,
            &mut padded,
        );
        let out_sample = &mut out[n * g.out_ch * oh * ow..][..g.out_ch * oh * ow];
        if g.stride == 1 && g.kernel == 3 {
            conv3_sample_fwd(g, &padded, pw, weight, bias, out_sample);
        } else {
            conv_sample_fwd_generic(g, &padded, pw, weight, bias, out_sample);
        }
    }
}

/// Fused 3x3 stride-1 forward for one sample: nine FMA taps per output
/// element, accumulated across input channels row by row.
fn conv3_sample_fwd<E: Element>(
    g: &ConvGeometry,
    padded: &[E],
    pw: usize,
    weight: &[E],
    bias: Option<&[E]>,
    out: &mut [E],
) {
    let (oh, ow, d) = (g.out_h, g.out_w, g.dilation);
    let ph = g.in_h + 2 * g.padding;
    let mut acc = vec![E::ZERO; ow];
    for o in 0..g.out_ch {
        let b = bias.map_or(E::ZERO, |b| b[o]);
        for row in 0..oh {
            acc.fill(b);
            for i in 0..g.in_ch {
                let wk = &weight[(o * g.in_ch + i) * 9..][..9];
                let (w00, w01, w02) = (wk[0], wk[1], wk[2]);
                let (w10, w11, w12) = (wk[3], wk[4], wk[5]);
                let (w20, w21, w22) = (wk[6], wk[7], wk[8]);
                let plane = &padded[i * ph * pw..][..ph * pw];
                let r0 = &plane[row * pw..][..pw];
                let r1 = &plane[(row + d) * pw..][..pw];
                let r2 = &plane[(row + 2 * d) * pw..][..pw];
                let (a0, b0, c0) = (&r0[..ow], &r0[d..d + ow], &r0[2 * d..2 * d + ow]);
                let (a1, b1, c1) = (&r1[..ow], &r1[d..d + ow], &r1[2 * d..2 * d + ow]);
                let (a2, b2, c2) = (&r2[..ow], &r2[d..d + ow], &r2[2 * d..2 * d + ow]);
                for x in 0..ow {
                    let mut v = acc[x];
                    v = w00.mul_add(a0[x], v);
                    v = w01.mul_add(b0[x], v);
                    v = w02.mul_add(c0[x], v);
                    v = w10.mul_add(a1[x], v);
                    v = w11.mul_add(b1[x], v);
                    v = w12.mul_add(c1[x], v);
                    v = w20.mul_add(a2[x], v);
                    v = w21.mul_add(b2[x], v);
                    v = w22.mul_add(c2[x], v);
                    acc[x] = v;
                }
            }
            out[(o * oh + row) * ow..][..ow].copy_from_slice(&acc);
        }
    }
}

fn conv_sample_fwd_generic<E: Element>(
    g: &ConvGeometry,
    padded: &[E],
    pw: usize,
    weight: &[E],
    bias: Option<&[E]>,
    out: &mut [E],
) {
    let (oh, ow, k, s, d) = (g.out_h, g.out_w, g.kernel, g.stride, g.dilation);
    let ph = g.in_h + 2 * g.padding;
    for o in 0..g.out_ch {
        let b = bias.map_or(E::ZERO, |b| b[o]);
        for row in 0..oh {
            for col in 0..ow {
                let mut v = b;
                for i in 0..g.in_ch {
                    let plane = &padded[i * ph * pw..];
                    let wk = &weight[(o * g.in_ch + i) * k * k..][..k * k];
                    for kh in 0..k {
                        let prow = &plane[(row * s + kh * d) * pw..];
                        for kw in 0..k {
                            v = wk[kh * k + kw].mul_add(prow[col * s + kw * d], v);
                        }
                    }
                }
                out[(o * oh + row) * ow + col] = v;
            }
        }
    }
}

/// Accumulates the weight gradient into `grad_weight`.
pub fn conv2d_backward_weight<E: Element>(
    g: &ConvGeometry,
    input: &[E],
    grad_out: &[E],
    grad_weight: &mut [E],
) {
    let k = g.kernel;
    debug_assert_eq!(grad_weight.len(), g.out_ch * g.in_ch * k * k);
    let ph = g.in_h + 2 * g.padding;
    let pw = g.in_w + 2 * g.padding;
    let (oh, ow, s, d) = (g.out_h, g.out_w, g.stride, g.dilation);
    let mut padded = vec![E::ZERO; g.in_ch * ph * pw];
    for n in 0..g.batch {
        pad_sample(
            &input[n * g.in_ch * g.in_h * g.in_w..][..g.in_ch * g.in_h * g.in_w],
            g.in_ch,
            g.in_h,
            g.in_w,
            g.padding,
            &mut padded,
        );
        let go_sample = &grad_out[n * g.out_ch * oh * ow..];
        for o in 0..g.out_ch {
            for i in 0..g.in_ch {
                let plane = &padded[i * ph * pw..][..ph * pw];
                let gw = &mut grad_weight[(o * g.in_ch + i) * k * k..][..k * k];
                if s == 1 && k == 3 {
                    // Nine running sums per output row.
                    for row in 0..oh {
                        let go = &go_sample[(o * oh + row) * ow..][..ow];
                        for kh in 0..3 {
                            let prow = &plane[(row + kh * d) * pw..][..pw];
                            let (t0, t1, t2) = (
                                &prow[..ow],
                                &prow[d..d + ow],
                                &prow[2 * d..2 * d + ow],
                            );
                            let (mut s0, mut s1, mut s2) = (E::ZERO, E::ZERO, E::ZERO);
                            for x in 0..ow {
                                s0 = go[x].mul_add(t0[x], s0);
                                s1 = go[x].mul_add(t1[x], s1);
                                s2 = go[x].mul_add(t2[x], s2);
                            }
                            gw[kh * 3] += s0;
                            gw[kh * 3 + 1] += s1;
                            gw[kh * 3 + 2] += s2;
                        }
                    }
                } else {
                    for kh in 0..k {
                        for kw in 0..k {
                            let mut sum = E::ZERO;
                            for row in 0..oh {
                                let go = &go_sample[(o * oh + row) * ow..][..ow];
                                let prow = &plane[(row * s + kh * d) * pw..];
                                for (col, &gv) in go.iter().enumerate() {
                                    sum = gv.mul_add(prow[col * s + kw * d], sum);
                                }
                            }
                            gw[kh * k + kw] += sum;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates the bias gradient into `grad_bias`.
pub fn conv2d_backward_bias<E: Element>(g: &ConvGeometry, grad_out: &[E], grad_bias: &mut [E]) {
    debug_assert_eq!(grad_bias.len(), g.out_ch);
    let plane = g.out_h * g.out_w;
    for n in 0..g.batch {
        for o in 0..g.out_ch {
            let go = &grad_out[(n * g.out_ch + o) * plane..][..plane];
            let mut sum = E::ZERO;
            for &v in go {
                sum += v;
            }
            grad_bias[o] += sum;
        }
    }
}

pub fn conv2d_backward_input<E: Element>(
    g: &ConvGeometry,
    weight: &[E],
    grad_out: &[E],
    grad_input: &mut [E],
) {
    let k = g.kernel;
    debug_assert_eq!(grad_input.len(), g.batch * g.in_ch * g.in_h * g.in_w);
    let back_pad = (g.dilation * (k - 1)).checked_sub(g.padding);
    if g.stride == 1 {
        if let Some(back_pad) = back_pad {
            // d(in) = conv(d(out), transposed + flipped kernel).
            let mut flipped = vec![E::ZERO; weight.len()];
            for o in 0..g.out_ch {
                for i in 0..g.in_ch {
                    for kh in 0..k {
                        for kw in 0..k {
                            flipped[((i * g.out_ch + o) * k + (k - 1 - kh)) * k + (k - 1 - kw)] =
                                weight[((o * g.in_ch + i) * k + kh) * k + kw];
                        }
                    }
                }
            }
            let back = ConvGeometry {
                batch: g.batch,
                in_ch: g.out_ch,
                in_h: g.out_h,
                in_w: g.out_w,
                out_ch: g.in_ch,
                kernel: k,
                stride: 1,
                padding: back_pad,
                dilation: g.dilation,
                out_h: g.in_h,
                out_w: g.in_w,
            };
            conv2d_forward(&back, grad_out, &flipped, None, grad_input);
            return;
        }
    }
    // General scatter fallback.
    grad_input.fill(E::ZERO);
    let (oh, ow, s, d, p) = (g.out_h, g.out_w, g.stride, g.dilation, g.padding);
    for n in 0..g.batch {
        let gi_sample = &mut grad_input[n * g.in_ch * g.in_h * g.in_w..];
        let go_sample = &grad_out[n * g.out_ch * oh * ow..];
        for o in 0..g.out_ch {
            for i in 0..g.in_ch {
                let wk = &weight[(o * g.in_ch + i) * k * k..][..k * k];
                for row in 0..oh {
                    for col in 0..ow {
                        let gv = go_sample[(o * oh + row) * ow + col];
                        for kh in 0..k {
                            let ih = row * s + kh * d;
                            if ih < p || ih - p >= g.in_h {
                                continue;
                            }
                            for kw in 0..k {
                                let iw = col * s + kw * d;
                                if iw < p || iw - p >= g.in_w {
                                    continue;
                                }
                                gi_sample[(i * g.in_h + ih - p) * g.in_w + iw - p] +=
                                    wk[kh * k + kw] * gv;
                            }
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// linear
// ---------------------------------------------------------------------------

/// out[n,g] = sum_f in[n,f] * w[f,g] + b[g]
pub fn linear_forward<E: Element>(
    n: usize,
    f: usize,
    g: usize,
    input: &[E],
    weight: &[E],
    bias: &[E],
    out: &mut [E],
) {
    debug_assert_eq!(out.len(), n * g);
    for row in 0..n {
        let out_row = &mut out[row * g..][..g];
        out_row.copy_from_slice(bias);
        let in_row = &input[row * f..][..f];
        for (k, &x) in in_row.iter().enumerate() {
            let w_row = &weight[k * g..][..g];
            for (o, &w) in out_row.iter_mut().zip(w_row) {
                *o = x.mul_add(w, *o);
            }
        }
    }
}

pub fn linear_backward<E: Element>(
    n: usize,
    f: usize,
    g: usize,
    input: &[E],
    weight: &[E],
    grad_out: &[E],
    grad_input: &mut [E],
    grad_weight: &mut [E],
    grad_bias: &mut [E],
) {
    grad_input.fill(E::ZERO);
    grad_weight.fill(E::ZERO);
    grad_bias.fill(E::ZERO);
    for row in 0..n {
        let go_row = &grad_out[row * g..][..g];
        let in_row = &input[row * f..][..f];
        let gi_row = &mut grad_input[row * f..][..f];
        for k in 0..f {
            let w_row = &weight[k * g..][..g];
            let gw_row = &mut grad_weight[k * g..][..g];
            let x = in_row[k];
            let mut dot = E::ZERO;
            for (j, &gv) in go_row.iter().enumerate() {
                dot = gv.mul_add(w_row[j], dot);
                gw_row[j] = x.mul_add(gv, gw_row[j]);
            }
            gi_row[k] = dot;
        }
        for (b, &gv) in grad_bias.iter_mut().zip(go_row) {
            *b += gv;
        }
    }
}

// ---------------------------------------------------------------------------
// pooling
// ---------------------------------------------------------------------------

pub struct PoolOut<E> {
    pub values: Vec<E>,
    /// Flat input offsets of each window's maximum (max pooling only);
    /// ties resolve to the lowest row-major index.
    pub argmax: Vec<usize>,
}

pub fn pool2d_forward<E: Element>(
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    window: usize,
    stride: usize,
    max_pool: bool,
    input: &[E],
) -> (usize, usize, PoolOut<E>) {
    let oh = (h - window) / stride + 1;
    let ow = (w - window) / stride + 1;
    let mut values = vec![E::ZERO; n * c * oh * ow];
    let mut argmax = if max_pool {
        vec![0usize; n * c * oh * ow]
    } else {
        Vec::new()
    };
    let inv = E::ONE / E::from_f64((window * window) as f64);
    for img in 0..n {
        for ch in 0..c {
            let plane = (img * c + ch) * h * w;
            for row in 0..oh {
                for col in 0..ow {
                    let out_idx = ((img * c + ch) * oh + row) * ow + col;
                    if max_pool {
                        let mut best = input[plane + row * stride * w + col * stride];
                        let mut best_at = plane + row * stride * w + col * stride;
                        for kh in 0..window {
                            for kw in 0..window {
                                let at = plane + (row * stride + kh) * w + col * stride + kw;
                                if input[at] > best {
                                    best = input[at];
                                    best_at = at;
                                }
                            }
                        }
                        values[out_idx] = best;
                        argmax[out_idx] = best_at;
                    } else {
                        let mut sum = E::ZERO;
                        for kh in 0..window {
                            for kw in 0..window {
                                sum += input[plane + (row * stride + kh) * w + col * stride + kw];
                            }
                        }
                        values[out_idx] = sum * inv;
                    }
                }
            }
        }
    }
    (oh, ow, PoolOut { values, argmax })
}

pub fn pool2d_backward<E: Element>(
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    window: usize,
    stride: usize,
    max_pool: bool,
    argmax: &[usize],
    grad_out: &[E],
    grad_input: &mut [E],
) {
    grad_input.fill(E::ZERO);
    let oh = (h - window) / stride + 1;
    let ow = (w - window) / stride + 1;
    if max_pool {
        for (idx, &at) in argmax.iter().enumerate() {
            grad_input[at] += grad_out[idx];
        }
    } else {
        let inv = E::ONE / E::from_f64((window * window) as f64);
        for img in 0..n {
            for ch in 0..c {
                let plane = (img * c + ch) * h * w;
                for row in 0..oh {
                    for col in 0..ow {
                        let g = grad_out[((img * c + ch) * oh + row) * ow + col] * inv;
                        for kh in 0..window {
                            for kw in 0..window {
                                grad_input
                                    [plane + (row * stride + kh) * w + col * stride + kw] += g;
                            }
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// batch normalization
// ---------------------------------------------------------------------------

/// Per-channel statistics cached by the forward pass for the backward pass.
pub struct BnCache<E> {
    pub mean: Vec<E>,
    pub inv_std: Vec<E>,
    /// True when batch statistics were used (train mode); eval mode treats
    /// the normalization as a fixed affine map.
    pub batch_stats: bool,
}

/// Train-mode forward over NCHW: normalizes by batch statistics (biased
/// variance) and returns them for the running-average update.
pub fn batch_norm_train_forward<E: Element>(
    n: usize,
    c: usize,
    plane: usize,
    eps: E,
    input: &[E],
    gamma: &[E],
    beta: &[E],
    out: &mut [E],
) -> (Vec<E>, Vec<E>, BnCache<E>) {
    let m = E::from_f64((n * plane) as f64);
    let mut mean = vec![E::ZERO; c];
    let mut var = vec![E::ZERO; c];
    for img in 0..n {
        for ch in 0..c {
            let x = &input[(img * c + ch) * plane..][..plane];
            let mut sum = E::ZERO;
            for &v in x {
                sum += v;
            }
            mean[ch] += sum;
        }
    }
    for ch in 0..c {
        mean[ch] = mean[ch] / m;
    }
    for img in 0..n {
        for ch in 0..c {
            let x = &input[(img * c + ch) * plane..][..plane];
            let mu = mean[ch];
            let mut sum = E::ZERO;
            for &v in x {
                let d = v - mu;
                sum = d.mul_add(d, sum);
            }
            var[ch] += sum;
        }
    }
    for ch in 0..c {
        var[ch] = var[ch] / m;
    }
    let inv_std: Vec<E> = var.iter().map(|&v| E::ONE / (v + eps).sqrt()).collect();
    for img in 0..n {
        for ch in 0..c {
            let x = &input[(img * c + ch) * plane..][..plane];
            let y = &mut out[(img * c + ch) * plane..][..plane];
            let (mu, is, g, b) = (mean[ch], inv_std[ch], gamma[ch], beta[ch]);
            let scale = g * is;
            for (o, &v) in y.iter_mut().zip(x) {
                *o = scale.mul_add(v - mu, b);
            }
        }
    }
    let cache = BnCache {
        mean: mean.clone(),
        inv_std: inv_std.clone(),
        batch_stats: true,
    };
    (mean, var, cache)
}

/// Eval-mode forward using frozen running statistics.
pub fn batch_norm_eval_forward<E: Element>(
    n: usize,
    c: usize,
    plane: usize,
    eps: E,
    input: &[E],
    running_mean: &[E],
    running_var: &[E],
    gamma: &[E],
    beta: &[E],
    out: &mut [E],
) -> BnCache<E> {
    let inv_std: Vec<E> = running_var
        .iter()
        .map(|&v| E::ONE / (v + eps).sqrt())
        .collect();
    for img in 0..n {
        for ch in 0..c {
            let x = &input[(img * c + ch) * plane..][..plane];
            let y = &mut out[(img * c + ch) * plane..][..plane];
            let (mu, is, g, b) = (running_mean[ch], inv_std[ch], gamma[ch], beta[ch]);
            let scale = g * is;
            for (o, &v) in y.iter_mut().zip(x) {
                *o = scale.mul_add(v - mu, b);
            }
        }
    }
    BnCache {
        mean: running_mean.to_vec(),
        inv_std,
        batch_stats: false,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn batch_norm_backward<E: Element>(
    n: usize,
    c: usize,
    plane: usize,
    input: &[E],
    gamma: &[E],
    cache: &BnCache<E>,
    grad_out: &[E],
    grad_input: &mut [E],
    grad_gamma: &mut [E],
    grad_beta: &mut [E],
) {
    let m = E::from_f64((n * plane) as f64);
    grad_gamma.fill(E::ZERO);
    grad_beta.fill(E::ZERO);
    // dgamma = sum(dout * xhat), dbeta = sum(dout)
    for img in 0..n {
        for ch in 0..c {
            let x = &input[(img * c + ch) * plane..][..plane];
            let go = &grad_out[(img * c + ch) * plane..][..plane];
            let (mu, is) = (cache.mean[ch], cache.inv_std[ch]);
            let mut dg = E::ZERO;
            let mut db = E::ZERO;
            for (&g, &v) in go.iter().zip(x) {
                dg = g.mul_add((v - mu) * is, dg);
                db += g;
            }
            grad_gamma[ch] += dg;
            grad_beta[ch] += db;
        }
    }
    if !cache.batch_stats {
        // Frozen statistics: y is an affine function of x per channel.
        for img in 0..n {
            for ch in 0..c {
                let go = &grad_out[(img * c + ch) * plane..][..plane];
                let gi = &mut grad_input[(img * c + ch) * plane..][..plane];
                let scale = gamma[ch] * cache.inv_std[ch];
                for (d, &g) in gi.iter_mut().zip(go) {
                    *d = scale * g;
                }
            }
        }
        return;
    }
    // Batch statistics participate in the forward value:
    // dx = (gamma * inv_std / m) * (m * dout - dbeta - xhat * dgamma)
    for img in 0..n {
        for ch in 0..c {
            let x = &input[(img * c + ch) * plane..][..plane];
            let go = &grad_out[(img * c + ch) * plane..][..plane];
            let gi = &mut grad_input[(img * c + ch) * plane..][..plane];
            let (mu, is) = (cache.mean[ch], cache.inv_std[ch]);
            let k = gamma[ch] * is / m;
            let (dg, db) = (grad_gamma[ch], grad_beta[ch]);
            for ((d, &g), &v) in gi.iter_mut().zip(go).zip(x) {
                let xhat = (v - mu) * is;
                *d = k * (m * g - db - xhat * dg);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// softmax cross-entropy
// ---------------------------------------------------------------------------

/// Mean of -log softmax(logits)[target] over all classified positions.
/// The logits tensor is viewed as [outer, classes, inner] around
/// `class_axis`; `targets` holds one class index per (outer, inner)
/// position, inner-fastest. Returns (loss, softmax probabilities).
pub fn softmax_xent_forward<E: Element>(
    outer: usize,
    classes: usize,
    inner: usize,
    logits: &[E],
    targets: &[usize],
) -> Result<(E, Vec<E>)> {
    let positions = outer * inner;
    let mut probs = vec![E::ZERO; logits.len()];
    let mut loss = E::ZERO;
    for ou in 0..outer {
        for inn in 0..inner {
            let base = ou * classes * inner + inn;
            let target = targets[ou * inner + inn];
            if target >= classes {
                return Err(Error::invalid(format!(
                    "target class {target} out of range for {classes} classes"
                )));
            }
            let mut max = logits[base];
            for cl in 1..classes {
                let v = logits[base + cl * inner];
                if v > max {
                    max = v;
                }
            }
            let mut sum = E::ZERO;
            for cl in 0..classes {
                let e = (logits[base + cl * inner] - max).exp();
                probs[base + cl * inner] = e;
                sum += e;
            }
            let inv = E::ONE / sum;
            for cl in 0..classes {
                probs[base + cl * inner] *= inv;
            }
            // -log softmax[target] = log(sum) + max - logit[target]
            loss += sum.ln() + max - logits[base + target * inner];
        }
    }
    Ok((loss / E::from_f64(positions as f64), probs))
}

pub fn softmax_xent_backward<E: Element>(
    outer: usize,
    classes: usize,
    inner: usize,
    probs: &[E],
    targets: &[usize],
    grad_loss: E,
    grad_logits: &mut [E],
) {
    let scale = grad_loss / E::from_f64((outer * inner) as f64);
    for ou in 0..outer {
        for inn in 0..inner {
            let base = ou * classes * inner + inn;
            let target = targets[ou * inner + inn];
            for cl in 0..classes {
                let onehot = if cl == target { E::ONE } else { E::ZERO };
                grad_logits[base + cl * inner] = (probs[base + cl * inner] - onehot) * scale;
            }
        }
    }
}
