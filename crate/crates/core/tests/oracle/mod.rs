//! Independent scalar oracles written against the defining formulas, with
//! nested `Vec`s instead of the library's flat tensors.

#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;
/// `[channel][row][col]`
pub type Map = Vec<Vec<Vec<f64>>>;

pub fn mat_from_flat(rows: usize, cols: usize, flat: &[f64]) -> Mat {
    (0..rows).map(|r| flat[r * cols..(r + 1) * cols].to_vec()).collect()
}

pub fn map_from_flat(c: usize, h: usize, w: usize, flat: &[f64]) -> Map {
    (0..c).map(|ch| (0..h).map(|y| (0..w).map(|x| flat[(ch * h + y) * w + x]).collect()).collect()).collect()
}

pub fn flatten_map(m: &Map) -> Vec<f64> {
    m.iter().flat_map(|ch| ch.iter().flat_map(|row| row.iter().copied())).collect()
}

pub fn flatten_mat(m: &Mat) -> Vec<f64> {
    m.iter().flat_map(|r| r.iter().copied()).collect()
}

pub fn conv1x1(x: &Map, w: &Mat, b: &[f64]) -> Map {
    let (h, wd) = (x[0].len(), x[0][0].len());
    (0..w.len())
        .map(|o| {
            (0..h)
                .map(|y| (0..wd).map(|xx| b[o] + (0..x.len()).map(|i| w[o][i] * x[i][y][xx]).sum::<f64>()).collect())
                .collect()
        })
        .collect()
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    a.iter().map(|row| (0..b[0].len()).map(|j| (0..b.len()).map(|p| row[p] * b[p][j]).sum()).collect()).collect()
}

pub fn attention(q: &Mat, k: &Mat, v: &Mat, dk: usize) -> Mat {
    q.iter()
        .map(|qi| {
            let s: Vec<f64> =
                k.iter().map(|kj| qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() / (dk as f64).sqrt()).collect();
            let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = s.iter().map(|x| (x - m).exp()).collect();
            let z: f64 = e.iter().sum();
            (0..v[0].len()).map(|c| e.iter().zip(v).map(|(ej, vj)| ej / z * vj[c]).sum()).collect()
        })
        .collect()
}

pub fn mhsa(x: &Mat, heads: usize, wq: &Mat, wk: &Mat, wv: &Mat, wo: &Mat) -> Mat {
    let d = x[0].len();
    let dk = d / heads;
    let (q, k, v) = (mul(x, wq), mul(x, wk), mul(x, wv));
    let cols = |m: &Mat, h: usize| -> Mat { m.iter().map(|r| r[h * dk..(h + 1) * dk].to_vec()).collect() };
    let mut concat: Mat = vec![Vec::new(); x.len()];
    for h in 0..heads {
        let head = attention(&cols(&q, h), &cols(&k, h), &cols(&v, h), dk);
        for (row, hr) in concat.iter_mut().zip(head) {
            row.extend(hr);
        }
    }
    mul(&concat, wo)
}

#[allow(clippy::too_many_arguments)]
pub fn cfam(x0: &Map, x1: &Map, cw: &Mat, cb: &[f64], heads: usize, w: [&Mat; 4], w0: f64, w1: f64) -> Map {
    let c = x0.len();
    let (h, wd) = (x0[0].len(), x0[0][0].len());
    let adj = conv1x1(x0, cw, cb);
    // token order: row-major pixels; features: X0' channels then X1 channels
    let mut tokens: Mat = Vec::new();
    for y in 0..h {
        for xx in 0..wd {
            let mut t: Vec<f64> = (0..c).map(|ch| adj[ch][y][xx]).collect();
            t.extend((0..c).map(|ch| x1[ch][y][xx]));
            tokens.push(t);
        }
    }
    let att = mhsa(&tokens, heads, w[0], w[1], w[2], w[3]);
    let mut out: Map = vec![vec![vec![0.0; wd]; h]; 2 * c];
    for ch in 0..c {
        for y in 0..h {
            for xx in 0..wd {
                let p = y * wd + xx;
                let x0w = att[p][ch] * w0;
                let x1w = att[p][c + ch] * w1;
                let x0_sum = x0[ch][y][xx] + x0w;
                let x1_sum = x1[ch][y][xx] + x1w;
                out[ch][y][xx] = x1_sum + x0[ch][y][xx];
                out[c + ch][y][xx] = x0_sum + x1[ch][y][xx];
            }
        }
    }
    out
}

/// Free response of `Jθ'' + bθ' + Kθ = 0` (underdamped).
pub fn underdamped(j: f64, b: f64, k: f64, th0: f64, w0: f64, t: f64) -> f64 {
    let wn = (k / j).sqrt();
    let zeta = b / (2.0 * (j * k).sqrt());
    assert!(zeta < 1.0, "not underdamped");
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    let a = zeta * wn;
    (-a * t).exp() * (th0 * (wd * t).cos() + (w0 + a * th0) / wd * (wd * t).sin())
}
