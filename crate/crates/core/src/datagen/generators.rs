use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::classical::StandardScaler;
use crate::datagen::dataset::{median_labels, split_train_test, Dataset, GeneratorConfig, TEST_TRAIN_RATIO};
use crate::error::{invalid, Result};

/// Attempts per requested sample before rejection sampling gives up.
pub const MARGIN_ATTEMPT_FACTOR: usize = 1000;
/// Candidate pool, in multiples of `N`, for class balancing.
pub const BALANCE_OVERSAMPLE_FACTOR: usize = 100;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| normal_vec(rng, cols)).collect()
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn finish(
    benchmark: &str,
    config: GeneratorConfig,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    rng: &mut impl Rng,
    image_side: Option<usize>,
) -> Result<Dataset> {
    let (train, test) = split_train_test(x, y, TEST_TRAIN_RATIO, rng);
    Dataset::new(benchmark, config, train, test, image_side)
}

/// Perceptron labels `w = (1, ..., 1)` on the hypercube, keeping points
/// outside the margin `|w.x| > margin * d` and splitting at the median.
pub fn gen_linearly_separable(d: usize, n: usize, seed: u64) -> Result<Dataset> {
    gen_linearly_separable_with_margin(d, n, 0.02, seed)
}

pub fn gen_linearly_separable_with_margin(d: usize, n: usize, margin: f64, seed: u64) -> Result<Dataset> {
    if d < 2 {
        return Err(invalid("linearly separable data needs d >= 2"));
    }
    if n < 2 {
        return Err(invalid("need at least two samples"));
    }
    let mut rng = rng_for(seed);
    let bound = margin * d as f64;
    let mut x = Vec::with_capacity(n);
    let mut attempts = 0;
    while x.len() < n {
        if attempts >= MARGIN_ATTEMPT_FACTOR * n {
            return Err(invalid(format!(
                "only {} of {n} points cleared the margin after {attempts} draws",
                x.len()
            )));
        }
        attempts += 1;
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if p.iter().sum::<f64>().abs() > bound {
            x.push(p);
        }
    }
    let scores: Vec<f64> = x.iter().map(|p| p.iter().sum()).collect();
    let y = median_labels(&scores);
    let config = GeneratorConfig::LinearlySeparable { d, n, margin, seed };
    finish("linearly_separable", config, x, y, &mut rng, None)
}

/// Noisy images of vertical bars (label -1) or horizontal stripes (+1),
/// flattened row-major.
pub fn gen_bars_and_stripes(width: usize, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if width == 0 || n < 2 {
        return Err(invalid("bars and stripes needs a positive width and two samples"));
    }
    if !(noise >= 0.0) {
        return Err(invalid("noise must be non-negative"));
    }
    let mut rng = rng_for(seed);
    let pixel_noise = Normal::new(0.0, noise).map_err(|e| invalid(e.to_string()))?;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let label = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let lines: Vec<f64> = (0..width)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let mut img = Vec::with_capacity(width * width);
        for r in 0..width {
            for c in 0..width {
                // -1 fills columns, +1 fills rows
                let clean = if label < 0.0 { lines[c] } else { lines[r] };
                img.push(clean + pixel_noise.sample(&mut rng));
            }
        }
        x.push(img);
        y.push(label);
    }
    let config = GeneratorConfig::BarsAndStripes { width, n, noise, seed };
    finish("bars_and_stripes", config, x, y, &mut rng, Some(width))
}

/// Inputs `tanh(F c / sqrt(m) - b)` of latent Gaussian `c`, labelled by a
/// random one-hidden-layer teacher on `c` and split at the median.
pub fn gen_hidden_manifold(d: usize, n: usize, m: usize, seed: u64) -> Result<Dataset> {
    gen_hidden_manifold_as("hidden_manifold", d, n, m, seed)
}

pub(crate) fn gen_hidden_manifold_as(benchmark: &str, d: usize, n: usize, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 || d == 0 || n < 2 {
        return Err(invalid("hidden manifold needs m >= 1, d >= 1 and two samples"));
    }
    let mut rng = rng_for(seed);
    let f = normal_matrix(&mut rng, d, m);
    let b = normal_vec(&mut rng, d);
    let w = normal_matrix(&mut rng, m, m);
    let v = normal_vec(&mut rng, m);
    let sq = (m as f64).sqrt();
    let mut x = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for _ in 0..n {
        let c = normal_vec(&mut rng, m);
        let fc = matvec(&f, &c);
        x.push(fc.iter().zip(&b).map(|(z, bi)| (z / sq - bi).tanh()).collect::<Vec<f64>>());
        let h = matvec(&w, &c);
        scores.push(h.iter().zip(&v).map(|(z, vi)| vi * (z / sq).tanh()).sum());
    }
    let y = median_labels(&scores);
    let config = GeneratorConfig::HiddenManifold { d, n, m, seed };
    finish(benchmark, config, x, y, &mut rng, None)
}

/// Two copies of a random Fourier curve in `d` dimensions; the class -1
/// copy is shifted by `offset` along every axis.
pub fn gen_two_curves(d: usize, n: usize, degree: usize, offset: f64, noise: f64, seed: u64) -> Result<Dataset> {
    gen_two_curves_as("two_curves", d, n, degree, offset, noise, seed)
}

pub(crate) fn gen_two_curves_as(
    benchmark: &str,
    d: usize,
    n: usize,
    degree: usize,
    offset: f64,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if degree == 0 || d == 0 || n < 2 {
        return Err(invalid("two curves needs degree >= 1, d >= 1 and two samples"));
    }
    if !(noise >= 0.0) {
        return Err(invalid("noise must be non-negative"));
    }
    let mut rng = rng_for(seed);
    let coef = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..d)
            .map(|_| (0..=degree).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect()
    };
    let alpha = coef(&mut rng);
    let beta = coef(&mut rng);
    let eps = Normal::new(0.0, noise).map_err(|e| invalid(e.to_string()))?;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let n_pos = n.div_ceil(2);
    for i in 0..n {
        let t: f64 = rng.random_range(0.0..1.0);
        let label = if i < n_pos { 1.0 } else { -1.0 };
        let shift = if label < 0.0 { offset } else { 0.0 };
        let p: Vec<f64> = (0..d)
            .map(|j| {
                let curve: f64 = (0..=degree)
                    .map(|k| alpha[j][k] * (k as f64 * t).cos() + beta[j][k] * (k as f64 * t).sin())
                    .sum();
                curve + shift + eps.sample(&mut rng)
            })
            .collect();
        x.push(p);
        y.push(label);
    }
    let config = GeneratorConfig::TwoCurves {
        d,
        n,
        degree,
        offset,
        noise,
        seed,
    };
    finish(benchmark, config, x, y, &mut rng, None)
}

/// Parity labels of `k` perceptron votes: `+1` iff the number of positive
/// votes `w_j . c + b_j > 0` is even.
pub fn parity_labels(c: &[Vec<f64>], w: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    c.iter()
        .map(|ci| {
            let positives = w
                .iter()
                .zip(b)
                .filter(|(wj, bj)| wj.iter().zip(ci).map(|(a, v)| a * v).sum::<f64>() + **bj > 0.0)
                .count();
            if positives % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Hyperplane-parity data on an `m`-dimensional latent space embedded by
/// `x = M c`, with exactly balanced classes and standardized inputs.
pub fn gen_hyperplanes_parity(d: usize, n: usize, k: usize, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 || m > d {
        return Err(invalid(format!("latent dimension m={m} must lie in 1..={d}")));
    }
    if k == 0 || n < 2 {
        return Err(invalid("need at least one hyperplane and two samples"));
    }
    let mut rng = rng_for(seed);
    let embed: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..m).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let w: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let b: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n_pos = n.div_ceil(2);
    let n_neg = n / 2;
    let mut pos = Vec::with_capacity(n_pos);
    let mut neg = Vec::with_capacity(n_neg);
    let pool = BALANCE_OVERSAMPLE_FACTOR * n;
    let mut drawn = 0;
    while (pos.len() < n_pos || neg.len() < n_neg) && drawn < pool {
        let c = normal_vec(&mut rng, m);
        drawn += 1;
        let label = parity_labels(std::slice::from_ref(&c), &w, &b)[0];
        if label > 0.0 && pos.len() < n_pos {
            pos.push(c);
        } else if label < 0.0 && neg.len() < n_neg {
            neg.push(c);
        }
    }
    if pos.len() < n_pos || neg.len() < n_neg {
        return Err(invalid(format!(
            "could not balance classes from {pool} candidates ({} positive, {} negative)",
            pos.len(),
            neg.len()
        )));
    }
    let mut y = vec![1.0; n_pos];
    y.extend(std::iter::repeat_n(-1.0, n_neg));
    let x: Vec<Vec<f64>> = pos.iter().chain(&neg).map(|c| matvec(&embed, c)).collect();
    let x = StandardScaler::fit(&x)?.transform(&x)?;
    let config = GeneratorConfig::HyperplanesParity { d, n, k, m, seed };
    finish("hyperplanes_parity", config, x, y, &mut rng, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(ds: &Dataset) -> impl Iterator<Item = (&Vec<f64>, f64)> {
        ds.x_train.iter().zip(ds.y_train.iter().copied()).chain(ds.x_test.iter().zip(ds.y_test.iter().copied()))
    }

    #[test]
    fn linearly_separable_respects_margin_and_threshold() {
        let ds = gen_linearly_separable(4, 300, 1).unwrap();
        assert_eq!(ds.n_train() + ds.n_test(), 300);
        assert_eq!(ds.n_test(), 50);
        let mut lo_pos = f64::INFINITY;
        let mut hi_neg = f64::NEG_INFINITY;
        for (x, y) in rows(&ds) {
            let s: f64 = x.iter().sum();
            assert!(s.abs() > 0.02 * 4.0);
            assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
            if y > 0.0 {
                lo_pos = lo_pos.min(s);
            } else {
                hi_neg = hi_neg.max(s);
            }
        }
        assert!(lo_pos > hi_neg);
        assert!(gen_linearly_separable(1, 10, 0).is_err());
        assert_eq!(ds, gen_linearly_separable(4, 300, 1).unwrap());
    }

    #[test]
    fn noiseless_bars_and_stripes() {
        let ds = gen_bars_and_stripes(4, 40, 0.0, 2).unwrap();
        for (x, y) in rows(&ds) {
            for r in 0..4 {
                for c in 0..4 {
                    let same = if y > 0.0 { x[r * 4] } else { x[c] };
                    assert_eq!(x[r * 4 + c], same);
                }
            }
        }
        assert_eq!(ds.image_side, Some(4));
    }

    #[test]
    fn hidden_manifold_is_balanced_and_bounded() {
        let ds = gen_hidden_manifold(5, 120, 3, 4).unwrap();
        let pos = rows(&ds).filter(|(_, y)| *y > 0.0).count();
        assert_eq!(pos, 60);
        assert!(rows(&ds).all(|(x, _)| x.iter().all(|v| v.abs() < 1.0)));
    }

    #[test]
    fn two_curves_offset_moves_the_negative_class() {
        let ds = gen_two_curves(3, 101, 2, 0.5, 0.0, 5).unwrap();
        assert_eq!(rows(&ds).filter(|(_, y)| *y > 0.0).count(), 51);
        // noiseless curves have values in [0, 2 * (degree + 1)], shifted by the offset for class -1
        for (x, y) in rows(&ds) {
            let lo = if y < 0.0 { 0.5 - 3.0 } else { -3.0 };
            assert!(x.iter().all(|&v| v >= lo && v <= 6.5));
        }
    }

    #[test]
    fn parity_counts_positive_votes() {
        let w = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = vec![0.0, 0.0];
        let c = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, -1.0]];
        assert_eq!(parity_labels(&c, &w, &b), vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn hyperplanes_parity_is_balanced_and_standardized() {
        let ds = gen_hyperplanes_parity(6, 99, 2, 3, 6).unwrap();
        assert_eq!(rows(&ds).filter(|(_, y)| *y > 0.0).count(), 50);
        let all: Vec<&Vec<f64>> = rows(&ds).map(|(x, _)| x).collect();
        for j in 0..6 {
            let mean = all.iter().map(|r| r[j]).sum::<f64>() / 99.0;
            assert!(mean.abs() < 1e-12);
        }
        assert!(gen_hyperplanes_parity(3, 10, 2, 4, 0).is_err());
    }
}
