//! MNIST IDX ingestion, restricted to the digits 3 (label -1) and 5 (+1).

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classical::{pca_fit, StandardScaler};
use crate::datagen::dataset::{Dataset, GeneratorConfig};
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;
pub const MNIST_SIDE: usize = 28;

/// Decoded image file: `count` images of `rows x cols` bytes.
#[derive(Clone, Debug, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<Vec<u8>>,
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse(format!("IDX header truncated at byte {at}")))
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Parse(format!("bad IDX image magic {magic:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() < count * size {
        return Err(Error::Parse(format!(
            "IDX image body has {} bytes, expected {}",
            body.len(),
            count * size
        )));
    }
    let pixels = body.chunks_exact(size.max(1)).take(count).map(<[u8]>::to_vec).collect();
    Ok(IdxImages { rows, cols, pixels })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Parse(format!("bad IDX label magic {magic:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::Parse(format!(
            "IDX label body has {} bytes, expected {count}",
            body.len()
        )));
    }
    Ok(body[..count].to_vec())
}

/// Images (pixel values in `[0, 1]`) and ±1 labels of one split.
#[derive(Clone, Debug, PartialEq)]
pub struct MnistSplit {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

/// Keeps digits 3 and 5, mapping 3 to -1 and 5 to +1.
pub fn filter_three_five(images: &IdxImages, labels: &[u8]) -> Result<MnistSplit> {
    crate::error::check_len("MNIST label count", images.pixels.len(), labels.len())?;
    let mut out = MnistSplit {
        images: Vec::new(),
        labels: Vec::new(),
    };
    for (img, &l) in images.pixels.iter().zip(labels) {
        let y = match l {
            3 => -1.0,
            5 => 1.0,
            _ => continue,
        };
        out.images.push(img.iter().map(|&p| f64::from(p) / 255.0).collect());
        out.labels.push(y);
    }
    Ok(out)
}

/// Raw train and test splits read from the four standard IDX files in `dir`.
pub struct MnistRaw {
    pub train: MnistSplit,
    pub test: MnistSplit,
}

pub fn load_mnist(dir: &Path) -> Result<MnistRaw> {
    let read = |name: &str| -> Result<Vec<u8>> {
        fs::read(dir.join(name)).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.join(name).display())))
        })
    };
    let train_images = parse_idx_images(&read("train-images-idx3-ubyte")?)?;
    let train_labels = parse_idx_labels(&read("train-labels-idx1-ubyte")?)?;
    let test_images = parse_idx_images(&read("t10k-images-idx3-ubyte")?)?;
    let test_labels = parse_idx_labels(&read("t10k-labels-idx1-ubyte")?)?;
    Ok(MnistRaw {
        train: filter_three_five(&train_images, &train_labels)?,
        test: filter_three_five(&test_images, &test_labels)?,
    })
}

/// Standardize with training statistics, then project onto the top `d`
/// principal components of the training set. With `subsample`, that many
/// rows are drawn from each split afterwards.
pub fn gen_mnist_pca(raw: &MnistRaw, d: usize, subsample: Option<usize>, seed: u64) -> Result<Dataset> {
    let scaler = StandardScaler::fit(&raw.train.images)?;
    let train = scaler.transform(&raw.train.images)?;
    let test = scaler.transform(&raw.test.images)?;
    let pca = pca_fit(&train, d)?;
    let mut x_train = pca.transform(&train)?;
    let mut y_train = raw.train.labels.clone();
    let mut x_test = pca.transform(&test)?;
    let mut y_test = raw.test.labels.clone();
    if let Some(s) = subsample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = |x: &mut Vec<Vec<f64>>, y: &mut Vec<f64>, rng: &mut ChaCha8Rng| -> Result<()> {
            if x.len() < s {
                return Err(crate::error::invalid(format!(
                    "cannot subsample {s} rows from {}",
                    x.len()
                )));
            }
            let mut idx = sample(rng, x.len(), s).into_vec();
            idx.sort_unstable();
            *x = idx.iter().map(|&i| x[i].clone()).collect();
            *y = idx.iter().map(|&i| y[i]).collect();
            Ok(())
        };
        pick(&mut x_train, &mut y_train, &mut rng)?;
        pick(&mut x_test, &mut y_test, &mut rng)?;
    }
    let benchmark = if subsample.is_some() { "mnist_pca_minus" } else { "mnist_pca" };
    Dataset::new(
        benchmark,
        GeneratorConfig::MnistPca { d, subsample, seed },
        (x_train, y_train),
        (x_test, y_test),
        None,
    )
}

/// Bilinear resize of a `side x side` row-major image to `out x out`.
///
/// Pixel centres sit at half-integer positions and samples outside the
/// image are clamped to the border, so resizing to the same size is the
/// identity.
pub fn resize_bilinear(img: &[f64], side: usize, out: usize) -> Vec<f64> {
    let scale = side as f64 / out as f64;
    let coord = |i: usize| -> (usize, usize, f64) {
        let c = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (side - 1) as f64);
        let lo = c.floor() as usize;
        let hi = (lo + 1).min(side - 1);
        (lo, hi, c - lo as f64)
    };
    let mut res = Vec::with_capacity(out * out);
    for r in 0..out {
        let (r0, r1, fr) = coord(r);
        for c in 0..out {
            let (c0, c1, fc) = coord(c);
            let top = img[r0 * side + c0] * (1.0 - fc) + img[r0 * side + c1] * fc;
            let bottom = img[r1 * side + c0] * (1.0 - fc) + img[r1 * side + c1] * fc;
            res.push(top * (1.0 - fr) + bottom * fr);
        }
    }
    res
}

/// Coarse-grained images: resize to `height x height`, flatten and
/// standardize with training statistics.
pub fn gen_mnist_cg(raw: &MnistRaw, height: usize, seed: u64) -> Result<Dataset> {
    if height == 0 {
        return Err(crate::error::invalid("target height must be positive"));
    }
    let resize = |imgs: &[Vec<f64>]| -> Vec<Vec<f64>> {
        imgs.iter().map(|im| resize_bilinear(im, MNIST_SIDE, height)).collect()
    };
    let train = resize(&raw.train.images);
    let test = resize(&raw.test.images);
    let scaler = StandardScaler::fit(&train)?;
    Dataset::new(
        "mnist_cg",
        GeneratorConfig::MnistCg { height, seed },
        (scaler.transform(&train)?, raw.train.labels.clone()),
        (scaler.transform(&test)?, raw.test.labels.clone()),
        Some(height),
    )
}
