use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};

use super::attention::{mhsa, MhsaConfig};
use super::tensor::{concat_channels, from_tokens, split_channels, to_tokens, Tensor};

/// Pointwise (1×1) convolution: an affine map across channels at each pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1x1 {
    in_channels: usize,
    out_channels: usize,
    /// `out_channels × in_channels`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Conv1x1 {
    pub fn new(in_channels: usize, out_channels: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 {
            return Err(Error::Shape("conv channel counts must be positive".into()));
        }
        if weights.len() != out_channels * in_channels || bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "conv {in_channels}→{out_channels} needs {} weights and {out_channels} biases, got {} and {}",
                out_channels * in_channels,
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Domain("conv parameters must be finite".into()));
        }
        Ok(Self { in_channels, out_channels, weights, bias })
    }

    /// Identity weights, zero bias.
    pub fn identity(channels: usize) -> Result<Self> {
        let mut w = vec![0.0; channels * channels];
        for i in 0..channels {
            w[i * channels + i] = 1.0;
        }
        Self::new(channels, channels, w, vec![0.0; channels])
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn weight(&self, out: usize, inp: usize) -> f64 {
        self.weights[out * self.in_channels + inp]
    }

    pub fn bias(&self, out: usize) -> f64 {
        self.bias[out]
    }
}

/// `X₀′ = adjust_conv(X₀)`: affine channel mixing, no activation.
pub fn adjust_conv(x: &Tensor, k: &Conv1x1) -> Result<Tensor> {
    let (c, h, w) = x.map_dims()?;
    if c != k.in_channels {
        return Err(Error::Shape(format!("conv expects {} channels, input has {c}", k.in_channels)));
    }
    let hw = h * w;
    let src = x.data();
    let mut out = vec![0.0; k.out_channels * hw];
    for o in 0..k.out_channels {
        let dst = &mut out[o * hw..(o + 1) * hw];
        dst.fill(k.bias[o]);
        for i in 0..c {
            let wt = k.weight(o, i);
            for (d, s) in dst.iter_mut().zip(&src[i * hw..(i + 1) * hw]) {
                *d += wt * s;
            }
        }
    }
    Ok(Tensor::from_parts(vec![k.out_channels, h, w], out))
}

/// Branch weights derived from target motion: fast targets lean on the
/// coarse branch (`w1`), slow ones on the detail branch (`w0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedModulation {
    pub displacement_px: f64,
    pub image_diag_px: f64,
    pub w0_scale: f64,
    pub w1_scale: f64,
}

/// Linear ramp on normalised displacement: `s = clamp(d/diag, 0, 1)`,
/// `w1 = s`, `w0 = 1 − s`.
pub fn speed_modulation(displacement_px: f64, image_diag_px: f64) -> Result<SpeedModulation> {
    ensure_finite("displacement", displacement_px)?;
    ensure_finite("image diagonal", image_diag_px)?;
    if image_diag_px <= 0.0 {
        return Err(Error::Domain(format!("image diagonal must be positive, got {image_diag_px}")));
    }
    if displacement_px < 0.0 {
        return Err(Error::Domain(format!("displacement must be non-negative, got {displacement_px}")));
    }
    let s = (displacement_px / image_diag_px).clamp(0.0, 1.0);
    Ok(SpeedModulation { displacement_px, image_diag_px, w0_scale: 1.0 - s, w1_scale: s })
}

/// Residual cross-fusion of the two branches given their attention weights:
///
/// ```text
/// X₀′_sum = X₀ + X₀′_weight        X₁_sum = X₁ + X₁_weight
/// X₀′_result = X₁_sum + X₀         X₁_result = X₀′_sum + X₁
/// ```
///
/// Returns `concat(X₀′_result, X₁_result)` along channels.
pub fn cross_fuse(x0: &Tensor, x1: &Tensor, x0_weight: &Tensor, x1_weight: &Tensor) -> Result<Tensor> {
    let x0_sum = x0.add(x0_weight)?;
    let x1_sum = x1.add(x1_weight)?;
    let x0_result = x1_sum.add(x0)?;
    let x1_result = x0_sum.add(x1)?;
    concat_channels(&x0_result, &x1_result)
}

/// Attention weight maps `(X₀′_weight, X₁_weight)` for a branch pair: MHSA
/// over the channel-concatenation of `X₀′` and `X₁` (one token per pixel),
/// split back into channel halves and scaled by the speed weights.
pub fn attention_weight_maps(
    x0_adj: &Tensor,
    x1: &Tensor,
    cfg: &MhsaConfig,
    modulation: &SpeedModulation,
) -> Result<(Tensor, Tensor)> {
    let (_, h, w) = x1.map_dims()?;
    let concat = concat_channels(x0_adj, x1)?;
    let attended = from_tokens(&mhsa(&to_tokens(&concat)?, cfg)?, h, w)?;
    let (a0, a1) = split_channels(&attended)?;
    Ok((a0.map(|v| v * modulation.w0_scale), a1.map(|v| v * modulation.w1_scale)))
}

/// Full fusion block: adjust `X₀`, attend over both branches, cross-fuse.
pub fn cfam_fuse(
    x0: &Tensor,
    x1: &Tensor,
    conv: &Conv1x1,
    cfg: &MhsaConfig,
    modulation: &SpeedModulation,
) -> Result<Tensor> {
    let (c0, h0, w0) = x0.map_dims()?;
    let (c1, h1, w1) = x1.map_dims()?;
    if (c0, h0, w0) != (c1, h1, w1) {
        return Err(Error::Shape(format!("branch shapes differ: {:?} vs {:?}", x0.shape(), x1.shape())));
    }
    if conv.out_channels != c0 {
        return Err(Error::Shape(format!("adjust conv must preserve {c0} channels, produces {}", conv.out_channels)));
    }
    if cfg.model_dim() != 2 * c0 {
        return Err(Error::Shape(format!(
            "attention model_dim {} must equal twice the branch channels ({})",
            cfg.model_dim(),
            2 * c0
        )));
    }
    let x0_adj = adjust_conv(x0, conv)?;
    let (a0, a1) = attention_weight_maps(&x0_adj, x1, cfg, modulation)?;
    cross_fuse(x0, x1, &a0, &a1)
}
