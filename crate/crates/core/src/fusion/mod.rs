//! Forward-only CFAM fusion block and multi-head self-attention.
//!
//! Feature maps are `(channels, height, width)` tensors. For attention a
//! map is flattened into tokens: one token per pixel, one feature per
//! channel. The block:
//!
//! 1. `X₀′ = adjust_conv(X₀)` (1×1 convolution, affine only);
//! 2. multi-head self-attention over `concat(X₀′, X₁)`;
//! 3. split the result into channel halves, scaled by speed-derived weights
//!    that sum to one;
//! 4. cross-fuse through residual paths (see [`cross_fuse`]).
//!
//! A single projection set is shared by both branches.

mod attention;
mod cfam;
pub mod check;
pub mod reference;
mod tensor;

pub use attention::{attention, attention_weights, mhsa, softmax_rows, MhsaConfig};
pub use cfam::{adjust_conv, attention_weight_maps, cfam_fuse, cross_fuse, speed_modulation, Conv1x1, SpeedModulation};
pub use tensor::{
    column_slice, concat_channels, concat_columns, from_tokens, matmul, split_channels, to_tokens, Tensor,
};
