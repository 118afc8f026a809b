//! Seeded invariant and oracle suite for the fusion kernels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

use super::attention::{attention, attention_weights, mhsa, softmax_rows, MhsaConfig};
use super::cfam::{adjust_conv, attention_weight_maps, cfam_fuse, cross_fuse, speed_modulation, Conv1x1};
use super::reference;
use super::tensor::{concat_channels, split_channels, to_tokens, Tensor};

/// Largest channel count / spatial side accepted by the suite.
pub const MAX_CHECK_SIZE: usize = 8;

const ARITH_TOL: f64 = 1e-12;
const SOFTMAX_TOL: f64 = 1e-9;

/// Problem sizes for the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckSizes {
    /// Channels per branch; attention runs at `model_dim = 2·channels`.
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub heads: usize,
}

impl Default for CheckSizes {
    fn default() -> Self {
        Self { channels: 2, height: 2, width: 2, heads: 2 }
    }
}

impl CheckSizes {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.channels, self.height, self.width];
        if dims.iter().any(|&d| d == 0 || d > MAX_CHECK_SIZE) {
            return Err(Error::Config(format!(
                "channels and spatial sides must lie in 1..={MAX_CHECK_SIZE}, got {}×{}×{}",
                self.channels, self.height, self.width
            )));
        }
        let model_dim = 2 * self.channels;
        if self.heads == 0 || !model_dim.is_multiple_of(self.heads) {
            return Err(Error::Config(format!("{} heads do not divide model_dim {model_dim}", self.heads)));
        }
        Ok(())
    }
}

/// Result of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Measured discrepancy (0 for exact checks that passed).
    pub error: f64,
    pub tolerance: f64,
}

/// All outcomes of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionReport {
    pub seed: u64,
    pub sizes: CheckSizes,
    pub checks: Vec<CheckOutcome>,
}

impl FusionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>, scale: f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
    Tensor::new(shape, data).expect("finite by construction")
}

fn random_mhsa(rng: &mut ChaCha8Rng, heads: usize, d: usize) -> Result<MhsaConfig> {
    let s = 1.0 / (d as f64).sqrt();
    MhsaConfig::new(
        heads,
        random_tensor(rng, vec![d, d], s),
        random_tensor(rng, vec![d, d], s),
        random_tensor(rng, vec![d, d], s),
        random_tensor(rng, vec![d, d], s),
    )
}

fn random_conv(rng: &mut ChaCha8Rng, c: usize) -> Result<Conv1x1> {
    let w = (0..c * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = (0..c).map(|_| rng.gen_range(-0.5..0.5)).collect();
    Conv1x1::new(c, c, w, b)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct Suite {
    checks: Vec<CheckOutcome>,
}

impl Suite {
    fn within(&mut self, name: &'static str, error: f64, tolerance: f64) {
        self.checks.push(CheckOutcome { name, passed: error <= tolerance, error, tolerance });
    }

    fn exact(&mut self, name: &'static str, ok: bool, error: f64) {
        self.checks.push(CheckOutcome { name, passed: ok, error, tolerance: 0.0 });
    }
}

/// Runs every fusion invariant and oracle comparison.
///
/// `perturb_oracle` shifts the reference outputs by a small amount; it
/// exists to prove that the oracle comparisons can fail.
pub fn run_fusion_checks(seed: u64, sizes: &CheckSizes, perturb_oracle: bool) -> Result<FusionReport> {
    sizes.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c, h, w) = (sizes.channels, sizes.height, sizes.width);
    let n = h * w;
    let d = 2 * c;
    let nudge = if perturb_oracle { 1e-6 } else { 0.0 };
    let mut suite = Suite { checks: Vec::new() };

    // Softmax normalisation, including large-magnitude scores.
    let scores = random_tensor(&mut rng, vec![n.max(2), n.max(2)], 50.0);
    let sm = softmax_rows(&scores)?;
    let (rows, cols) = sm.matrix_dims()?;
    let worst =
        (0..rows).map(|r| (sm.data()[r * cols..(r + 1) * cols].iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    suite.within("softmax_rows_sum_to_one", worst, SOFTMAX_TOL);

    // Convex hull: every output coordinate within its V column's range.
    let q = random_tensor(&mut rng, vec![n, d], 2.0);
    let k = random_tensor(&mut rng, vec![n, d], 2.0);
    let v = random_tensor(&mut rng, vec![n, d], 2.0);
    let out = attention(&q, &k, &v, d)?;
    let mut excess: f64 = 0.0;
    for col in 0..d {
        let column: Vec<f64> = (0..n).map(|r| v.data()[r * d + col]).collect();
        let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for r in 0..n {
            let o = out.data()[r * d + col];
            excess = excess.max(lo - o).max(o - hi);
        }
    }
    suite.within("attention_convex_hull", excess.max(0.0), ARITH_TOL);

    // Single token: the value row comes back untouched.
    let q1 = random_tensor(&mut rng, vec![1, d], 1.0);
    let k1 = random_tensor(&mut rng, vec![1, d], 1.0);
    let v1 = random_tensor(&mut rng, vec![1, d], 1.0);
    let o1 = attention(&q1, &k1, &v1, d)?;
    suite.exact("attention_single_token_identity", o1 == v1, o1.max_abs_diff(&v1)?);

    // Identical keys: uniform weights, so every query returns the column
    // mean. Four tokens keep 1/n a power of two and the identity exact.
    let key_row = random_tensor(&mut rng, vec![1, d], 1.0);
    let keys = Tensor::new(vec![4, d], key_row.data().repeat(4))?;
    let vals = random_tensor(&mut rng, vec![4, d], 1.0);
    let queries = random_tensor(&mut rng, vec![3, d], 1.0);
    let om = attention(&queries, &keys, &vals, d)?;
    let mut worst: f64 = 0.0;
    for r in 0..3 {
        for col in 0..d {
            let mean = (0..4).map(|t| vals.data()[t * d + col]).sum::<f64>() / 4.0;
            worst = worst.max((om.data()[r * d + col] - mean).abs());
        }
    }
    suite.exact("attention_identical_keys_mean", worst == 0.0, worst);

    // Jointly permuting keys and values leaves the output unchanged.
    let perm: Vec<usize> = (0..n).rev().collect();
    let permute = |t: &Tensor| {
        let data: Vec<f64> = perm.iter().flat_map(|&r| t.data()[r * d..(r + 1) * d].to_vec()).collect();
        Tensor::new(vec![n, d], data)
    };
    let op = attention(&q, &permute(&k)?, &permute(&v)?, d)?;
    suite.within("attention_kv_permutation_invariance", op.max_abs_diff(&out)?, ARITH_TOL);

    // Single head with identity projections collapses to plain attention.
    let x = random_tensor(&mut rng, vec![n, d], 1.0);
    let ident = mhsa(&x, &MhsaConfig::identity(1, d)?)?;
    let plain = attention(&x, &x, &x, d)?;
    suite.within("mhsa_identity_projection_equals_attention", ident.max_abs_diff(&plain)?, ARITH_TOL);

    // MHSA against the flat-loop reference.
    let cfg = random_mhsa(&mut rng, sizes.heads, d)?;
    let got = mhsa(&x, &cfg)?;
    let want: Vec<f64> = reference::mhsa(x.data(), n, d, &cfg).iter().map(|v| v + nudge).collect();
    suite.within("mhsa_matches_reference", max_diff(got.data(), &want), ARITH_TOL);
    suite.exact("mhsa_preserves_shape", got.shape() == x.shape(), 0.0);

    // adjust_conv against the triple loop.
    let x0 = random_tensor(&mut rng, vec![c, h, w], 1.0);
    let x1 = random_tensor(&mut rng, vec![c, h, w], 1.0);
    let conv = random_conv(&mut rng, c)?;
    let got = adjust_conv(&x0, &conv)?;
    let want: Vec<f64> = reference::adjust_conv(&x0, &conv).iter().map(|v| v + nudge).collect();
    suite.within("adjust_conv_matches_reference", max_diff(got.data(), &want), ARITH_TOL);

    // Zero attention weights: both output halves are X₀ + X₁ exactly.
    let zero_out =
        MhsaConfig::new(sizes.heads, cfg.wq.clone(), cfg.wk.clone(), cfg.wv.clone(), Tensor::zeros(vec![d, d]))?;
    let modulation = speed_modulation(rng.gen_range(0.0..800.0), 800.0)?;
    let fused = cfam_fuse(&x0, &x1, &conv, &zero_out, &modulation)?;
    let (first, second) = split_channels(&fused)?;
    let sum = x0.add(&x1)?;
    let zero_ok = first == sum && second == sum;
    suite.exact("cfam_zero_weight_identity", zero_ok, first.max_abs_diff(&sum)?.max(second.max_abs_diff(&sum)?));

    // One-hot speed weights silence exactly one routed path.
    let x0_adj = adjust_conv(&x0, &conv)?;
    let only_detail = speed_modulation(0.0, 1.0)?;
    let (first, _) = split_channels(&cfam_fuse(&x0, &x1, &conv, &cfg, &only_detail)?)?;
    let only_coarse = speed_modulation(1.0, 1.0)?;
    let (_, second) = split_channels(&cfam_fuse(&x0, &x1, &conv, &cfg, &only_coarse)?)?;
    let one_hot_ok = first == sum && second == sum;
    suite.exact("cfam_one_hot_weight_routing", one_hot_ok, first.max_abs_diff(&sum)?.max(second.max_abs_diff(&sum)?));

    // Doubling both weight halves shifts the output by exactly the weights,
    // crossed over: the first half gains X₁_weight, the second X₀′_weight.
    let (a0, a1) = attention_weight_maps(&x0_adj, &x1, &cfg, &modulation)?;
    let base = cross_fuse(&x0, &x1, &a0, &a1)?;
    let doubled = cross_fuse(&x0, &x1, &a0.map(|v| 2.0 * v), &a1.map(|v| 2.0 * v))?;
    let expected_delta = concat_channels(&a1, &a0)?;
    let delta: Vec<f64> = doubled.data().iter().zip(base.data()).map(|(a, b)| a - b).collect();
    suite.within("cfam_residual_additivity", max_diff(&delta, expected_delta.data()), ARITH_TOL);

    // Full block against the scalar-loop reference.
    let got = cfam_fuse(&x0, &x1, &conv, &cfg, &modulation)?;
    let want: Vec<f64> = reference::cfam_fuse(&x0, &x1, &conv, &cfg, &modulation).iter().map(|v| v + nudge).collect();
    suite.within("cfam_matches_reference", max_diff(got.data(), &want), ARITH_TOL);
    suite.exact("cfam_output_shape", got.shape() == [2 * c, h, w], 0.0);

    // Token layout sanity: one row per pixel, one column per channel.
    let tokens = to_tokens(&x0)?;
    suite.exact("tokens_are_pixels_by_channels", tokens.shape() == [n, c], 0.0);

    // Speed weights always sum to one.
    let mut worst: f64 = 0.0;
    let mut in_range = true;
    for _ in 0..1000 {
        let diag = rng.gen_range(1.0..2000.0);
        let m = speed_modulation(rng.gen_range(0.0..3000.0), diag)?;
        worst = worst.max((m.w0_scale + m.w1_scale - 1.0).abs());
        in_range &= (0.0..=1.0).contains(&m.w0_scale) && (0.0..=1.0).contains(&m.w1_scale);
    }
    suite.exact("speed_weights_sum_to_one", worst == 0.0 && in_range, worst);

    // Attention weights themselves are row-stochastic.
    let aw = attention_weights(&q, &k, d)?;
    let worst = (0..n).map(|r| (aw.data()[r * n..(r + 1) * n].iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    suite.within("attention_weights_row_stochastic", worst, SOFTMAX_TOL);

    Ok(FusionReport { seed, sizes: *sizes, checks: suite.checks })
}
