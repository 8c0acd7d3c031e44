//! Benchmark inputs shared by the criterion suites.

use tensor_denoise_core::{rng, DenseTensor, Matrix};

pub fn gaussian_tensor(shape: &[usize], seed: u64) -> DenseTensor {
    let len = shape.iter().product();
    let mut g = rng::stream(seed, rng::purpose::TRUTH);
    DenseTensor::new(shape.to_vec(), rng::gaussian_vec(&mut g, len)).expect("valid shape")
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut g = rng::stream(seed, rng::purpose::TRUTH);
    Matrix::new(rows, cols, rng::gaussian_vec(&mut g, rows * cols)).expect("valid size")
}
