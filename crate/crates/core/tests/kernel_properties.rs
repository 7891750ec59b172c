//! Quantum kernel Gram matrices checked against an independent eigensolver.

mod common;

use common::{jacobi_min_eigenvalue, rng, uniform};
use proptest::prelude::*;
use qmlbench_core::models::{ProjectedKernel, QuantumKernel};

fn kernels(d: usize, seed: u64) -> Vec<QuantumKernel> {
    vec![
        QuantumKernel::iqp(d, 2, true).unwrap(),
        QuantumKernel::separable(d, 3).unwrap(),
        QuantumKernel::Projected(ProjectedKernel::new(d, 2, 0.5, 0.7, seed).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grams_are_symmetric_unit_diagonal_psd(d in 1usize..4, n in 2usize..10, seed in 0u64..1000) {
        let mut r = rng(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| uniform(&mut r, d, -1.5, 1.5)).collect();
        for k in kernels(d, seed) {
            let g = k.gram(&xs).unwrap();
            for i in 0..n {
                prop_assert!((g[i][i] - 1.0).abs() < 1e-10);
                for j in 0..n {
                    prop_assert_eq!(g[i][j], g[j][i]);
                    prop_assert!((-1e-12..=1.0 + 1e-12).contains(&g[i][j]));
                    prop_assert!((k.evaluate(&xs[i], &xs[j]).unwrap() - g[i][j]).abs() < 1e-12);
                }
            }
            prop_assert!(jacobi_min_eigenvalue(&g) >= -1e-8);
        }
    }
}
