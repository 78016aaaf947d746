#![allow(dead_code)]

use std::f64::consts::PI;

use deltastencil::{DiffusionTensor, Image, StencilParams, TensorField};
use rand::Rng;

/// PSD field with eigenvalues uniform in [0, 1] and uniform orientations.
pub fn random_field<R: Rng>(rng: &mut R, width: usize, height: usize) -> TensorField {
    TensorField::from_fn(width, height, |_, _| random_tensor(rng))
}

pub fn random_tensor<R: Rng>(rng: &mut R) -> DiffusionTensor {
    let l1: f64 = rng.random();
    let l2: f64 = rng.random();
    let theta = rng.random_range(0.0..PI);
    DiffusionTensor::from_eigen(l1, l2, theta)
}

pub fn random_params<R: Rng>(rng: &mut R) -> StencilParams {
    StencilParams::new(rng.random_range(0.0..=0.5), rng.random_range(-1.0..=1.0)).unwrap()
}

pub fn random_image<R: Rng>(rng: &mut R, width: usize, height: usize, scale: f64) -> Image {
    let values = (0..width * height)
        .map(|_| scale * rng.random::<f64>())
        .collect();
    Image::new(width, height, values).unwrap()
}

/// Simple P5 encoder of 8-bit samples for end-to-end fixtures.
pub fn p5_bytes(width: usize, height: usize, samples: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

/// 64×64 step edge at column 32 (grey levels 78 | 178) plus Gaussian noise σ = 10.
pub fn noisy_step_edge(seed: u64) -> Image {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 10.0).unwrap();
    let n = 64;
    let mut v = Vec::with_capacity(n * n);
    for _j in 0..n {
        for i in 0..n {
            let base = if i < 32 { 78.0 } else { 178.0 };
            v.push(base + noise.sample(&mut rng));
        }
    }
    Image::new(n, n, v).unwrap()
}
