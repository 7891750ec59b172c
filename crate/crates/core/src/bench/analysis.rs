//! Gram-matrix comparison, kernel landscapes and decision-boundary grids.

use std::f64::consts::PI;

use crate::classical::{rbf, rbf_gram, SvmKernel};
use crate::error::{check_len, invalid, Result};
use crate::models::{FittedState, TrainedModel};

/// Min-max rescales a matrix into [0, 1]. A constant matrix has no range to
/// stretch, so its entries are clipped into [0, 1] instead.
pub fn rescale_unit(g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (lo, hi) = g
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    g.iter()
        .map(|row| {
            row.iter()
                .map(|&v| if span > 0.0 { (v - lo) / span } else { v.clamp(0.0, 1.0) })
                .collect()
        })
        .collect()
}

fn check_shapes(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<usize> {
    check_len("Gram rows", a.len(), b.len())?;
    let mut n = 0;
    for (ra, rb) in a.iter().zip(b) {
        check_len("Gram columns", ra.len(), rb.len())?;
        n += ra.len();
    }
    if n == 0 {
        return Err(invalid("empty Gram matrices"));
    }
    Ok(n)
}

/// Mean squared entrywise difference of two equally shaped matrices, each
/// first rescaled with [`rescale_unit`]. 0 for identical matrices, 1 for
/// maximally different ones.
pub fn gram_difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let n = check_shapes(a, b)?;
    let (a, b) = (rescale_unit(a), rescale_unit(b));
    let sum: f64 = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    Ok(sum / n as f64)
}

/// Training-set Gram matrix of a fitted kernel model (quantum kernel or RBF
/// SVC), evaluated on `x` after the model's own preprocessing.
pub fn model_gram(model: &TrainedModel, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let xt = model.preprocessor.transform(x)?;
    match &model.state {
        FittedState::Kernel(k) => k.kernel.gram(&xt),
        FittedState::Svc(m) => match m.kernel {
            SvmKernel::Rbf { gamma } => Ok(rbf_gram(&xt, gamma)),
            SvmKernel::Precomputed => Err(invalid("SVC with a precomputed kernel has no kernel function")),
        },
        _ => Err(invalid(format!("{} is not a kernel model", model.spec.kind))),
    }
}

/// Kernel values on a regular 2d grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Landscape {
    /// `(x, y, value)` in row-major order, `x` varying fastest.
    pub points: Vec<(f64, f64, f64)>,
}

impl Landscape {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,value\n");
        for (x, y, v) in &self.points {
            s.push_str(&format!("{x},{y},{v}\n"));
        }
        s
    }
}

/// Fixed point of the landscape scan, in the model's input space.
pub const LANDSCAPE_CENTER: [f64; 2] = [PI / 2.0, PI / 2.0];

fn axis(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    if resolution == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..resolution)
        .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
        .collect()
}

/// `k(center, p)` for `p` on a `resolution × resolution` grid over `[0, π]²`.
pub fn landscape_of(k: impl Fn(&[f64], &[f64]) -> Result<f64>, resolution: usize) -> Result<Landscape> {
    if resolution == 0 {
        return Err(invalid("resolution must be positive"));
    }
    let ax = axis(0.0, PI, resolution);
    let mut points = Vec::with_capacity(resolution * resolution);
    for &y in &ax {
        for &x in &ax {
            points.push((x, y, k(&LANDSCAPE_CENTER, &[x, y])?));
        }
    }
    Ok(Landscape { points })
}

/// Landscape of a fitted 2d kernel model. Coordinates are the kernel's own
/// inputs, i.e. after the model's preprocessing.
pub fn kernel_landscape(model: &TrainedModel, resolution: usize) -> Result<Landscape> {
    if model.n_features != 2 {
        return Err(invalid(format!("landscape needs 2d inputs, model has {}", model.n_features)));
    }
    match &model.state {
        FittedState::Kernel(k) => landscape_of(|a, b| k.kernel.evaluate(a, b), resolution),
        FittedState::Svc(m) => match m.kernel {
            SvmKernel::Rbf { gamma } => landscape_of(|a, b| Ok(rbf(a, b, gamma)), resolution),
            SvmKernel::Precomputed => Err(invalid("SVC with a precomputed kernel has no kernel function")),
        },
        _ => Err(invalid(format!("{} is not a kernel model", model.spec.kind))),
    }
}

/// Predicted labels of a 2d model on a regular grid over the raw input
/// space `[x_lo, x_hi] × [y_lo, y_hi]`.
pub fn decision_grid(model: &TrainedModel, bounds: [(f64, f64); 2], resolution: usize) -> Result<Landscape> {
    if model.n_features != 2 {
        return Err(invalid(format!("decision grid needs 2d inputs, model has {}", model.n_features)));
    }
    if resolution == 0 {
        return Err(invalid("resolution must be positive"));
    }
    let (xs, ys) = (
        axis(bounds[0].0, bounds[0].1, resolution),
        axis(bounds[1].0, bounds[1].1, resolution),
    );
    let pts: Vec<Vec<f64>> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| vec![x, y])).collect();
    let labels = model.predict(&pts)?;
    Ok(Landscape {
        points: pts.iter().zip(labels).map(|(p, l)| (p[0], p[1], l)).collect(),
    })
}

/// Bounding box of a 2d dataset padded by `pad` of its extent on each side.
pub fn data_bounds(x: &[Vec<f64>], pad: f64) -> Result<[(f64, f64); 2]> {
    if x.is_empty() {
        return Err(invalid("no points"));
    }
    let mut b = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for row in x {
        check_len("input width", 2, row.len())?;
        for (k, &v) in row.iter().enumerate() {
            b[k] = (b[k].0.min(v), b[k].1.max(v));
        }
    }
    for r in &mut b {
        let w = (r.1 - r.0).max(1e-9) * pad;
        *r = (r.0 - w, r.1 + w);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rescaling() {
        assert_eq!(rescale_unit(&[vec![2.0, 4.0], vec![3.0, 6.0]]), vec![vec![0.0, 0.5], vec![0.25, 1.0]]);
        assert_eq!(rescale_unit(&vec![vec![1.7; 2]; 2]), vec![vec![1.0; 2]; 2]);
        assert_eq!(rescale_unit(&vec![vec![0.4; 2]; 2]), vec![vec![0.4; 2]; 2]);
    }

    #[test]
    fn gram_difference_extremes() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(gram_difference(&a, &a).unwrap(), 0.0);
        assert_eq!(gram_difference(&a, &b).unwrap(), 1.0);
        assert!(gram_difference(&a, &[vec![1.0]]).is_err());
        assert!(gram_difference(&[], &[]).is_err());
    }

    #[test]
    fn landscape_grid_layout() {
        let l = landscape_of(|a, b| Ok(a[0] + 10.0 * b[1]), 3).unwrap();
        assert_eq!(l.points.len(), 9);
        assert_eq!((l.points[1].0, l.points[1].1), (PI / 2.0, 0.0));
        assert!((l.points[8].2 - (PI / 2.0 + 10.0 * PI)).abs() < 1e-12);
        assert_eq!(landscape_of(|_, _| Ok(0.0), 1).unwrap().points[0].0, PI / 2.0);
        assert!(l.to_csv().starts_with("x,y,value\n"));
        let b = data_bounds(&[vec![0.0, 1.0], vec![2.0, 1.0]], 0.1).unwrap();
        assert!((b[0].0 + 0.2).abs() < 1e-12 && (b[0].1 - 2.2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn difference_is_a_bounded_symmetric_score(
            a in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 4),
            b in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 4),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let d = gram_difference(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert!((d - gram_difference(&b, &a).unwrap()).abs() < 1e-15);
            // positive affine maps of one argument leave the score unchanged
            let a2: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| v * scale + shift).collect()).collect();
            prop_assert!((d - gram_difference(&a2, &b).unwrap()).abs() < 1e-12);
        }
    }
}
