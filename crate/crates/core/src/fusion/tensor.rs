use crate::error::{Error, Result};

/// Dense row-major tensor of finite reals.
///
/// Used with two layouts: feature maps `(channels, height, width)` and
/// token matrices `(tokens, dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking length and finiteness.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!("shape {shape:?} needs {len} elements, got {}", data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("tensor element {i} is not finite: {}", data[i])));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self { shape, data: vec![0.0; len] }
    }

    /// `n × n` identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(vec![n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    /// Builds a tensor from already-validated parts (internal arithmetic only).
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// `(rows, cols)` of a rank-2 tensor.
    pub fn matrix_dims(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::Shape(format!("expected (tokens, dim), got {:?}", self.shape))),
        }
    }

    /// `(channels, height, width)` of a rank-3 tensor.
    pub fn map_dims(&self) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(Error::Shape(format!("expected (channels, height, width), got {:?}", self.shape))),
        }
    }

    /// Element-wise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.shape.clone(), self.data.iter().map(|&v| f(v)).collect())
    }

    /// Element-wise sum of two equally shaped tensors.
    pub fn add(&self, other: &Tensor) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!("cannot add {:?} and {:?}", self.shape, other.shape)));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self::from_parts(self.shape.clone(), data))
    }

    /// Largest absolute element-wise difference.
    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!("cannot compare {:?} and {:?}", self.shape, other.shape)));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Row slice of a matrix.
    pub(crate) fn row(&self, r: usize) -> &[f64] {
        let cols = self.shape[1];
        &self.data[r * cols..(r + 1) * cols]
    }
}

/// `a · b` for `(n × k)` and `(k × m)` matrices.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (n, k) = a.matrix_dims()?;
    let (k2, m) = b.matrix_dims()?;
    if k != k2 {
        return Err(Error::Shape(format!("matmul inner dims differ: {n}×{k} · {k2}×{m}")));
    }
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for p in 0..k {
            let aip = a.data[i * k + p];
            for j in 0..m {
                out[i * m + j] += aip * b.data[p * m + j];
            }
        }
    }
    Ok(Tensor::from_parts(vec![n, m], out))
}

/// Columns `[start, start + width)` of a matrix.
pub fn column_slice(t: &Tensor, start: usize, width: usize) -> Result<Tensor> {
    let (n, d) = t.matrix_dims()?;
    if start + width > d {
        return Err(Error::Shape(format!("column slice {start}..{} out of {d}", start + width)));
    }
    let mut out = Vec::with_capacity(n * width);
    for r in 0..n {
        out.extend_from_slice(&t.row(r)[start..start + width]);
    }
    Ok(Tensor::from_parts(vec![n, width], out))
}

/// Places matrices with equal row counts side by side.
pub fn concat_columns(parts: &[Tensor]) -> Result<Tensor> {
    let first = parts.first().ok_or_else(|| Error::Shape("nothing to concatenate".into()))?;
    let (n, _) = first.matrix_dims()?;
    let mut total = 0;
    for p in parts {
        let (pn, pd) = p.matrix_dims()?;
        if pn != n {
            return Err(Error::Shape(format!("row counts differ: {n} vs {pn}")));
        }
        total += pd;
    }
    let mut out = Vec::with_capacity(n * total);
    for r in 0..n {
        for p in parts {
            out.extend_from_slice(p.row(r));
        }
    }
    Ok(Tensor::from_parts(vec![n, total], out))
}

/// Feature map `(c, h, w)` → token matrix `(h·w, c)`; one token per pixel.
pub fn to_tokens(map: &Tensor) -> Result<Tensor> {
    let (c, h, w) = map.map_dims()?;
    let hw = h * w;
    let mut out = vec![0.0; hw * c];
    for ch in 0..c {
        for p in 0..hw {
            out[p * c + ch] = map.data[ch * hw + p];
        }
    }
    Ok(Tensor::from_parts(vec![hw, c], out))
}

/// Token matrix `(h·w, c)` → feature map `(c, h, w)`.
pub fn from_tokens(tokens: &Tensor, h: usize, w: usize) -> Result<Tensor> {
    let (n, c) = tokens.matrix_dims()?;
    if n != h * w {
        return Err(Error::Shape(format!("{n} tokens cannot fill a {h}×{w} map")));
    }
    let mut out = vec![0.0; n * c];
    for p in 0..n {
        for ch in 0..c {
            out[ch * n + p] = tokens.data[p * c + ch];
        }
    }
    Ok(Tensor::from_parts(vec![c, h, w], out))
}

/// Stacks feature maps with equal spatial size along the channel axis.
pub fn concat_channels(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (ca, ha, wa) = a.map_dims()?;
    let (cb, hb, wb) = b.map_dims()?;
    if (ha, wa) != (hb, wb) {
        return Err(Error::Shape(format!("spatial sizes differ: {ha}×{wa} vs {hb}×{wb}")));
    }
    let mut data = a.data.clone();
    data.extend_from_slice(&b.data);
    Ok(Tensor::from_parts(vec![ca + cb, ha, wa], data))
}

/// Splits a feature map into its first and second channel halves.
pub fn split_channels(t: &Tensor) -> Result<(Tensor, Tensor)> {
    let (c, h, w) = t.map_dims()?;
    if c % 2 != 0 {
        return Err(Error::Shape(format!("cannot halve {c} channels")));
    }
    let half = c / 2 * h * w;
    Ok((
        Tensor::from_parts(vec![c / 2, h, w], t.data[..half].to_vec()),
        Tensor::from_parts(vec![c / 2, h, w], t.data[half..].to_vec()),
    ))
}
