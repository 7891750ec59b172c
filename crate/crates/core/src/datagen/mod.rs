//! Seeded synthetic dataset generators, MNIST ingestion and dataset files.

pub mod benchmarks;
pub mod dataset;
pub mod generators;
pub mod io;
pub mod mnist;

pub use benchmarks::{generate, Benchmark, SweepOptions};
pub use dataset::{median_labels, split_train_test, Dataset, GeneratorConfig, TEST_TRAIN_RATIO};
pub use generators::{
    gen_bars_and_stripes, gen_hidden_manifold, gen_hyperplanes_parity, gen_linearly_separable,
    gen_linearly_separable_with_margin, gen_two_curves, parity_labels,
};
pub use io::{parse_csv, read_dataset, to_csv, write_dataset, DatasetSidecar};
pub use mnist::{
    filter_three_five, gen_mnist_cg, gen_mnist_pca, load_mnist, parse_idx_images, parse_idx_labels,
    resize_bilinear, IdxImages, MnistRaw, MnistSplit,
};
