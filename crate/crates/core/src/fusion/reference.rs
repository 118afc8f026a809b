//! Brute-force scalar-loop implementations used as oracles.
//!
//! These deliberately avoid the tensor helpers of the main path: every
//! quantity is computed element by element from its defining formula on
//! flat row-major buffers.

use super::attention::MhsaConfig;
use super::cfam::{Conv1x1, SpeedModulation};
use super::tensor::Tensor;

/// `out[o, p] = bias[o] + Σ_i w[o, i]·x[i, p]`.
pub fn adjust_conv(x: &Tensor, k: &Conv1x1) -> Vec<f64> {
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let xd = x.data();
    let mut out = vec![0.0; k.out_channels() * h * w];
    for o in 0..k.out_channels() {
        for y in 0..h {
            for xx in 0..w {
                let mut acc = k.bias(o);
                for i in 0..c {
                    acc += k.weight(o, i) * xd[(i * h + y) * w + xx];
                }
                out[(o * h + y) * w + xx] = acc;
            }
        }
    }
    out
}

/// Multi-head self-attention over `n` tokens of width `d` (flat `x[t*d + j]`).
pub fn mhsa(x: &[f64], n: usize, d: usize, cfg: &MhsaConfig) -> Vec<f64> {
    let heads = cfg.heads();
    let dk = d / heads;
    let (wq, wk, wv, wo) = (cfg.wq.data(), cfg.wk.data(), cfg.wv.data(), cfg.wo.data());
    let project = |w: &[f64], t: usize, j: usize| -> f64 {
        let mut acc = 0.0;
        for p in 0..d {
            acc += x[t * d + p] * w[p * d + j];
        }
        acc
    };
    let mut concat = vec![0.0; n * d];
    for h in 0..heads {
        for i in 0..n {
            let mut scores = vec![0.0; n];
            for (j, s) in scores.iter_mut().enumerate() {
                let mut dot = 0.0;
                for c in h * dk..(h + 1) * dk {
                    dot += project(wq, i, c) * project(wk, j, c);
                }
                *s = dot / (dk as f64).sqrt();
            }
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for s in scores.iter_mut() {
                *s = (*s - max).exp();
                denom += *s;
            }
            for c in h * dk..(h + 1) * dk {
                let mut acc = 0.0;
                for (j, s) in scores.iter().enumerate() {
                    acc += s / denom * project(wv, j, c);
                }
                concat[i * d + c] = acc;
            }
        }
    }
    let mut out = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..d {
            let mut acc = 0.0;
            for p in 0..d {
                acc += concat[i * d + p] * wo[p * d + j];
            }
            out[i * d + j] = acc;
        }
    }
    out
}

/// The whole fusion block, output laid out as `(2c, h, w)`.
pub fn cfam_fuse(x0: &Tensor, x1: &Tensor, conv: &Conv1x1, cfg: &MhsaConfig, m: &SpeedModulation) -> Vec<f64> {
    let (c, h, w) = (x0.shape()[0], x0.shape()[1], x0.shape()[2]);
    let n = h * w;
    let d = 2 * c;
    let x0d = x0.data();
    let x1d = x1.data();
    let adj = adjust_conv(x0, conv);
    // tokens[p, ch]: channels 0..c from X0', c..2c from X1
    let mut tokens = vec![0.0; n * d];
    for p in 0..n {
        for ch in 0..c {
            tokens[p * d + ch] = adj[ch * n + p];
            tokens[p * d + c + ch] = x1d[ch * n + p];
        }
    }
    let att = mhsa(&tokens, n, d, cfg);
    let mut out = vec![0.0; 2 * c * n];
    for ch in 0..c {
        for p in 0..n {
            let a0 = att[p * d + ch] * m.w0_scale;
            let a1 = att[p * d + c + ch] * m.w1_scale;
            let i = ch * n + p;
            let x0_sum = x0d[i] + a0;
            let x1_sum = x1d[i] + a1;
            out[i] = x1_sum + x0d[i];
            out[c * n + i] = x0_sum + x1d[i];
        }
    }
    out
}
