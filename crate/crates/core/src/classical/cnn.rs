//! Small convolutional network for square images:
//! conv(32) -> ReLU -> maxpool -> conv(64) -> ReLU -> maxpool -> dense(128)
//! -> ReLU -> dense(1), trained on binary cross-entropy of the sigmoid logit.
//!
//! Convolutions use stride 1 and "same" zero padding (`(k-1)/2` rows before,
//! the rest after). Pooling uses 2x2 windows with stride 2; a trailing odd
//! row or column forms a truncated window, so sizes round up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{train_adam, TrainConfig};
use crate::classical::logistic::{sigmoid, softplus};
use crate::classical::mlp::{EpochSampler, DEFAULT_BATCH_SIZE};
use crate::classical::svm::sign;
use crate::error::{check_len, invalid, Result};

pub const CONV1_CHANNELS: usize = 32;
pub const CONV2_CHANNELS: usize = 64;
pub const DENSE_UNITS: usize = 128;

/// Geometry of the network for `channels` input planes of `side x side` pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnShape {
    pub channels: usize,
    pub side: usize,
    pub kernel: usize,
}

struct Offsets {
    c1w: usize,
    c1b: usize,
    c2w: usize,
    c2b: usize,
    d1w: usize,
    d1b: usize,
    d2w: usize,
    d2b: usize,
    total: usize,
}

impl CnnShape {
    pub fn new(channels: usize, side: usize, kernel: usize) -> Result<Self> {
        if kernel == 0 || channels == 0 {
            return Err(invalid("kernel size and channel count must be positive"));
        }
        if side < kernel {
            return Err(invalid(format!(
                "image side {side} is smaller than the kernel size {kernel}"
            )));
        }
        Ok(Self {
            channels,
            side,
            kernel,
        })
    }

    fn pooled(side: usize) -> usize {
        side.div_ceil(2)
    }

    pub fn flat_features(&self) -> usize {
        let s2 = Self::pooled(Self::pooled(self.side));
        CONV2_CHANNELS * s2 * s2
    }

    pub fn input_len(&self) -> usize {
        self.channels * self.side * self.side
    }

    fn offsets(&self) -> Offsets {
        let k2 = self.kernel * self.kernel;
        let c1w = 0;
        let c1b = c1w + CONV1_CHANNELS * self.channels * k2;
        let c2w = c1b + CONV1_CHANNELS;
        let c2b = c2w + CONV2_CHANNELS * CONV1_CHANNELS * k2;
        let d1w = c2b + CONV2_CHANNELS;
        let d1b = d1w + DENSE_UNITS * self.flat_features();
        let d2w = d1b + DENSE_UNITS;
        let d2b = d2w + DENSE_UNITS;
        Offsets {
            c1w,
            c1b,
            c2w,
            c2b,
            d1w,
            d1b,
            d2w,
            d2b,
            total: d2b + 1,
        }
    }

    pub fn param_count(&self) -> usize {
        self.offsets().total
    }

    /// LeCun-normal weights (`std = 1/sqrt(fan_in)`), zero biases.
    pub fn init(&self, rng: &mut impl Rng) -> Vec<f64> {
        let o = self.offsets();
        let k2 = self.kernel * self.kernel;
        let mut p = vec![0.0; o.total];
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, p: &mut Vec<f64>| {
            let n = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt()).unwrap();
            for v in &mut p[range] {
                *v = n.sample(rng);
            }
        };
        fill(o.c1w..o.c1b, self.channels * k2, &mut p);
        fill(o.c2w..o.c2b, CONV1_CHANNELS * k2, &mut p);
        fill(o.d1w..o.d1b, self.flat_features(), &mut p);
        fill(o.d2w..o.d2b, DENSE_UNITS, &mut p);
        p
    }
}

/// Same-padded, stride-1 convolution of a `c_in x side x side` tensor.
pub fn conv_same(
    input: &[f64],
    c_in: usize,
    side: usize,
    w: &[f64],
    b: &[f64],
    c_out: usize,
    k: usize,
) -> Vec<f64> {
    let lo = (k - 1) / 2;
    let mut out = vec![0.0; c_out * side * side];
    for o in 0..c_out {
        let plane = &mut out[o * side * side..(o + 1) * side * side];
        plane.iter_mut().for_each(|v| *v = b[o]);
        for c in 0..c_in {
            let inp = &input[c * side * side..(c + 1) * side * side];
            for a in 0..k {
                for bb in 0..k {
                    let wv = w[((o * c_in + c) * k + a) * k + bb];
                    for i in 0..side {
                        let ii = i as isize + a as isize - lo as isize;
                        if ii < 0 || ii >= side as isize {
                            continue;
                        }
                        let row = &inp[ii as usize * side..(ii as usize + 1) * side];
                        for j in 0..side {
                            let jj = j as isize + bb as isize - lo as isize;
                            if jj >= 0 && jj < side as isize {
                                plane[i * side + j] += wv * row[jj as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Backward pass of [`conv_same`]: accumulates weight and bias gradients and
/// returns the input gradient.
#[allow(clippy::too_many_arguments)]
fn conv_same_backward(
    input: &[f64],
    c_in: usize,
    side: usize,
    w: &[f64],
    c_out: usize,
    k: usize,
    d_out: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
) -> Vec<f64> {
    let lo = (k - 1) / 2;
    let mut d_in = vec![0.0; c_in * side * side];
    for o in 0..c_out {
        let dplane = &d_out[o * side * side..(o + 1) * side * side];
        gb[o] += dplane.iter().sum::<f64>();
        for c in 0..c_in {
            let inp = &input[c * side * side..(c + 1) * side * side];
            let dinp = &mut d_in[c * side * side..(c + 1) * side * side];
            for a in 0..k {
                for bb in 0..k {
                    let widx = ((o * c_in + c) * k + a) * k + bb;
                    let wv = w[widx];
                    let mut acc = 0.0;
                    for i in 0..side {
                        let ii = i as isize + a as isize - lo as isize;
                        if ii < 0 || ii >= side as isize {
                            continue;
                        }
                        let ii = ii as usize;
                        for j in 0..side {
                            let jj = j as isize + bb as isize - lo as isize;
                            if jj >= 0 && jj < side as isize {
                                let jj = jj as usize;
                                let g = dplane[i * side + j];
                                acc += g * inp[ii * side + jj];
                                dinp[ii * side + jj] += g * wv;
                            }
                        }
                    }
                    gw[widx] += acc;
                }
            }
        }
    }
    d_in
}

/// 2x2 max pooling with stride 2; returns the pooled tensor and, for every
/// output cell, the flat index of the winning input cell.
pub fn maxpool(input: &[f64], c: usize, side: usize) -> (Vec<f64>, Vec<usize>) {
    let ps = side.div_ceil(2);
    let mut out = vec![f64::NEG_INFINITY; c * ps * ps];
    let mut arg = vec![0; c * ps * ps];
    for ch in 0..c {
        for i in 0..side {
            for j in 0..side {
                let src = (ch * side + i) * side + j;
                let dst = (ch * ps + i / 2) * ps + j / 2;
                if input[src] > out[dst] {
                    out[dst] = input[src];
                    arg[dst] = src;
                }
            }
        }
    }
    (out, arg)
}

struct Tape {
    a1: Vec<f64>,
    p1: Vec<f64>,
    arg1: Vec<usize>,
    a2: Vec<f64>,
    p2: Vec<f64>,
    arg2: Vec<usize>,
    h: Vec<f64>,
    logit: f64,
}

fn dense(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(o, bo)| bo + w[o * x.len()..(o + 1) * x.len()].iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

fn run(shape: &CnnShape, p: &[f64], x: &[f64]) -> Tape {
    let o = shape.offsets();
    let k = shape.kernel;
    let s = shape.side;
    let s1 = CnnShape::pooled(s);
    let mut a1 = conv_same(x, shape.channels, s, &p[o.c1w..o.c1b], &p[o.c1b..o.c2w], CONV1_CHANNELS, k);
    a1.iter_mut().for_each(|v| *v = v.max(0.0));
    let (p1, arg1) = maxpool(&a1, CONV1_CHANNELS, s);
    let mut a2 = conv_same(&p1, CONV1_CHANNELS, s1, &p[o.c2w..o.c2b], &p[o.c2b..o.d1w], CONV2_CHANNELS, k);
    a2.iter_mut().for_each(|v| *v = v.max(0.0));
    let (p2, arg2) = maxpool(&a2, CONV2_CHANNELS, s1);
    let mut h = dense(&p[o.d1w..o.d1b], &p[o.d1b..o.d2w], &p2);
    h.iter_mut().for_each(|v| *v = v.max(0.0));
    let logit = p[o.d2b] + p[o.d2w..o.d2b].iter().zip(&h).map(|(a, v)| a * v).sum::<f64>();
    Tape {
        a1,
        p1,
        arg1,
        a2,
        p2,
        arg2,
        h,
        logit,
    }
}

/// Output logit for one input tensor.
pub fn cnn_logit(shape: &CnnShape, params: &[f64], x: &[f64]) -> f64 {
    run(shape, params, x).logit
}

/// Mean cross-entropy and its gradient over a batch.
pub fn cnn_loss_grad(shape: &CnnShape, p: &[f64], xs: &[&[f64]], ys: &[f64]) -> (f64, Vec<f64>) {
    let o = shape.offsets();
    let k = shape.kernel;
    let s = shape.side;
    let s1 = CnnShape::pooled(s);
    let bsz = xs.len() as f64;
    let mut g = vec![0.0; o.total];
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let t = run(shape, p, x);
        loss += softplus(-y * t.logit);
        let dz = -y * sigmoid(-y * t.logit) / bsz;
        g[o.d2b] += dz;
        let mut dh = vec![0.0; DENSE_UNITS];
        for u in 0..DENSE_UNITS {
            g[o.d2w + u] += dz * t.h[u];
            if t.h[u] > 0.0 {
                dh[u] = dz * p[o.d2w + u];
            }
        }
        let f = t.p2.len();
        let mut dp2 = vec![0.0; f];
        for u in 0..DENSE_UNITS {
            if dh[u] == 0.0 {
                continue;
            }
            g[o.d1b + u] += dh[u];
            let row = o.d1w + u * f;
            for q in 0..f {
                g[row + q] += dh[u] * t.p2[q];
                dp2[q] += dh[u] * p[row + q];
            }
        }
        let mut da2 = vec![0.0; t.a2.len()];
        for (q, &src) in t.arg2.iter().enumerate() {
            if t.a2[src] > 0.0 {
                da2[src] += dp2[q];
            }
        }
        let (gw2, rest) = g[o.c2w..o.d1w].split_at_mut(o.c2b - o.c2w);
        let dp1 = conv_same_backward(&t.p1, CONV1_CHANNELS, s1, &p[o.c2w..o.c2b], CONV2_CHANNELS, k, &da2, gw2, rest);
        let mut da1 = vec![0.0; t.a1.len()];
        for (q, &src) in t.arg1.iter().enumerate() {
            if t.a1[src] > 0.0 {
                da1[src] += dp1[q];
            }
        }
        let (gw1, rest) = g[o.c1w..o.c2w].split_at_mut(o.c1b - o.c1w);
        conv_same_backward(x, shape.channels, s, &p[o.c1w..o.c1b], CONV1_CHANNELS, k, &da1, gw1, rest);
    }
    (loss / bsz, g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub kernel_shape: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl CnnConfig {
    pub fn new(kernel_shape: usize, learning_rate: f64, seed: u64) -> Self {
        Self {
            kernel_shape,
            learning_rate,
            batch_size: DEFAULT_BATCH_SIZE,
            max_steps: crate::autodiff::DEFAULT_MAX_STEPS,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub shape: CnnShape,
    pub params: Vec<f64>,
    pub loss_history: Vec<f64>,
    pub converged: bool,
}

/// Trains on tensors of `channels x side x side` values (flattened,
/// channel-major).
pub fn cnn_fit(images: &[Vec<f64>], y: &[f64], channels: usize, cfg: &CnnConfig) -> Result<CnnModel> {
    check_len("CNN rows", images.len(), y.len())?;
    if images.is_empty() || channels == 0 {
        return Err(invalid("CNN needs training images"));
    }
    let per = images[0].len() / channels;
    let side = (per as f64).sqrt().round() as usize;
    if side * side * channels != images[0].len() {
        return Err(invalid(format!(
            "input of length {} is not {channels} square planes",
            images[0].len()
        )));
    }
    let shape = CnnShape::new(channels, side, cfg.kernel_shape)?;
    for im in images {
        check_len("CNN input length", shape.input_len(), im.len())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = shape.init(&mut rng);
    let mut sampler = EpochSampler::new(images.len(), cfg.batch_size);
    let train_cfg = TrainConfig {
        learning_rate: cfg.learning_rate,
        max_steps: cfg.max_steps,
        stop_on_convergence: true,
    };
    let out = train_adam(init, &train_cfg, &mut rng, |p, rng| {
        let idx = sampler.next(rng);
        let xs: Vec<&[f64]> = idx.iter().map(|&i| images[i].as_slice()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        Ok(cnn_loss_grad(&shape, p, &xs, &ys))
    })?;
    Ok(CnnModel {
        shape,
        params: out.params,
        loss_history: out.loss_history,
        converged: out.converged,
    })
}

impl CnnModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_len("CNN input length", self.shape.input_len(), x.len())?;
        Ok(cnn_logit(&self.shape, &self.params, x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sign(self.decision(x)?))
    }

    pub fn loss(&self, x: &[Vec<f64>], y: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (row, &t) in x.iter().zip(y) {
            total += softplus(-t * self.decision(row)?);
        }
        Ok(total / x.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct definition: zero padding of `(k-1)/2` before and `k/2` after.
    fn naive_conv(x: &[f64], c_in: usize, s: usize, w: &[f64], b: &[f64], c_out: usize, k: usize) -> Vec<f64> {
        let pad = (k - 1) / 2;
        let at = |c: usize, i: isize, j: isize| {
            if i < 0 || j < 0 || i >= s as isize || j >= s as isize {
                0.0
            } else {
                x[(c * s + i as usize) * s + j as usize]
            }
        };
        let mut out = Vec::new();
        for o in 0..c_out {
            for i in 0..s {
                for j in 0..s {
                    let mut v = b[o];
                    for c in 0..c_in {
                        for a in 0..k {
                            for bb in 0..k {
                                let wv = w[((o * c_in + c) * k + a) * k + bb];
                                v += wv * at(c, (i + a) as isize - pad as isize, (j + bb) as isize - pad as isize);
                            }
                        }
                    }
                    out.push(v);
                }
            }
        }
        out
    }

    #[test]
    fn convolution_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in [1, 2, 3] {
            let (c_in, c_out, s) = (2, 3, 5);
            let x: Vec<f64> = (0..c_in * s * s).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..c_out * c_in * k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = vec![0.1, -0.2, 0.3];
            let got = conv_same(&x, c_in, s, &w, &b, c_out, k);
            let want = naive_conv(&x, c_in, s, &w, &b, c_out, k);
            for (g, v) in got.iter().zip(&want) {
                assert!((g - v).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ceil_pooling_keeps_the_last_row() {
        let x: Vec<f64> = (0..9).map(|v| v as f64).collect();
        let (out, arg) = maxpool(&x, 1, 3);
        assert_eq!(out, vec![4.0, 5.0, 7.0, 8.0]);
        assert_eq!(arg, vec![4, 5, 7, 8]);
        assert_eq!(CnnShape::new(1, 5, 2).unwrap().flat_features(), CONV2_CHANNELS * 4);
        assert!(CnnShape::new(1, 2, 3).is_err());
    }

    #[test]
    fn gradient_matches_differences_on_sampled_coordinates() {
        let shape = CnnShape::new(2, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = shape.init(&mut rng);
        assert_eq!(p.len(), shape.param_count());
        let imgs: Vec<Vec<f64>> = (0..3).map(|_| (0..shape.input_len()).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let xs: Vec<&[f64]> = imgs.iter().map(Vec::as_slice).collect();
        let ys = [1.0, -1.0, 1.0];
        let (_, g) = cnn_loss_grad(&shape, &p, &xs, &ys);
        let h = 1e-6;
        let mut coords: Vec<usize> = (0..60).map(|_| rng.random_range(0..p.len())).collect();
        coords.push(p.len() - 1);
        for k in coords {
            let (mut a, mut b) = (p.clone(), p.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (cnn_loss_grad(&shape, &a, &xs, &ys).0 - cnn_loss_grad(&shape, &b, &xs, &ys).0) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7, "coordinate {k}: {fd} vs {}", g[k]);
        }
    }
}
