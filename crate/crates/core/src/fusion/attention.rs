use crate::error::{Error, Result};

use super::tensor::{column_slice, concat_columns, matmul, Tensor};

/// Row-wise softmax, stabilised by subtracting each row's maximum.
pub fn softmax_rows(scores: &Tensor) -> Result<Tensor> {
    let (n, m) = scores.matrix_dims()?;
    let mut out = Vec::with_capacity(n * m);
    for r in 0..n {
        let row = scores.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        out.extend(exps.into_iter().map(|e| e / sum));
    }
    Ok(Tensor::from_parts(vec![n, m], out))
}

/// Attention weights `softmax(Q·Kᵀ/√d_k)`, one row per query.
pub fn attention_weights(q: &Tensor, k: &Tensor, d_k: usize) -> Result<Tensor> {
    let (nq, dq) = q.matrix_dims()?;
    let (nk, dk) = k.matrix_dims()?;
    if dq != dk {
        return Err(Error::Shape(format!("query dim {dq} ≠ key dim {dk}")));
    }
    if d_k == 0 {
        return Err(Error::Shape("d_k must be positive".into()));
    }
    let scale = 1.0 / (d_k as f64).sqrt();
    let mut scores = Vec::with_capacity(nq * nk);
    for i in 0..nq {
        for j in 0..nk {
            let dot: f64 = q.row(i).iter().zip(k.row(j)).map(|(a, b)| a * b).sum();
            scores.push(dot * scale);
        }
    }
    softmax_rows(&Tensor::from_parts(vec![nq, nk], scores))
}

/// Scaled dot-product attention `softmax(Q·Kᵀ/√d_k)·V`.
pub fn attention(q: &Tensor, k: &Tensor, v: &Tensor, d_k: usize) -> Result<Tensor> {
    let (nk, _) = k.matrix_dims()?;
    let (nv, _) = v.matrix_dims()?;
    if nk != nv {
        return Err(Error::Shape(format!("{nk} keys but {nv} values")));
    }
    matmul(&attention_weights(q, k, d_k)?, v)
}

/// Multi-head self-attention parameters.
///
/// Tokens are rows, so projections act on the right: `Q = X·W^Q`. Head `i`
/// sees columns `[i·d_k, (i+1)·d_k)` of the projected matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MhsaConfig {
    heads: usize,
    model_dim: usize,
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
    pub wo: Tensor,
}

impl MhsaConfig {
    /// Checks divisibility and that every matrix is `model_dim × model_dim`.
    pub fn new(heads: usize, wq: Tensor, wk: Tensor, wv: Tensor, wo: Tensor) -> Result<Self> {
        let (model_dim, _) = wq.matrix_dims()?;
        if heads == 0 || model_dim == 0 || model_dim % heads != 0 {
            return Err(Error::Config(format!("model_dim {model_dim} is not divisible into {heads} heads")));
        }
        for (name, w) in [("wq", &wq), ("wk", &wk), ("wv", &wv), ("wo", &wo)] {
            if w.matrix_dims()? != (model_dim, model_dim) {
                return Err(Error::Shape(format!("{name} must be {model_dim}×{model_dim}, got {:?}", w.shape())));
            }
        }
        Ok(Self { heads, model_dim, wq, wk, wv, wo })
    }

    /// All four projections set to the identity.
    pub fn identity(heads: usize, model_dim: usize) -> Result<Self> {
        let i = Tensor::identity(model_dim);
        Self::new(heads, i.clone(), i.clone(), i.clone(), i)
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn model_dim(&self) -> usize {
        self.model_dim
    }

    /// Per-head width `d_k = model_dim / heads`.
    pub fn key_dim(&self) -> usize {
        self.model_dim / self.heads
    }
}

/// `Concat(head_1, …, head_h)·W^O` with `head_i = Attention(Q_i, K_i, V_i)`.
pub fn mhsa(x: &Tensor, cfg: &MhsaConfig) -> Result<Tensor> {
    let (_, d) = x.matrix_dims()?;
    if d != cfg.model_dim {
        return Err(Error::Shape(format!("token dim {d} ≠ model_dim {}", cfg.model_dim)));
    }
    let q = matmul(x, &cfg.wq)?;
    let k = matmul(x, &cfg.wk)?;
    let v = matmul(x, &cfg.wv)?;
    let dk = cfg.key_dim();
    let heads = (0..cfg.heads)
        .map(|h| {
            let s = h * dk;
            attention(&column_slice(&q, s, dk)?, &column_slice(&k, s, dk)?, &column_slice(&v, s, dk)?, dk)
        })
        .collect::<Result<Vec<_>>>()?;
    matmul(&concat_columns(&heads)?, &cfg.wo)
}
