//! Diffusion tensor fields on the staggered grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusivity::Diffusivity;
use crate::error::{Error, Result};
use crate::grid::{gaussian_smooth, staggered_gradient, Image, StaggeredField};

/// Rounding slack allowed on `ac − b²` before a tensor counts as indefinite.
pub const PSD_TOLERANCE: f64 = 1e-12;

/// Symmetric 2×2 tensor `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DiffusionTensor {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl DiffusionTensor {
    pub const IDENTITY: Self = Self {
        a: 1.0,
        b: 0.0,
        c: 1.0,
    };

    pub const ZERO: Self = Self {
        a: 0.0,
        b: 0.0,
        c: 0.0,
    };

    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Like [`DiffusionTensor::new`] but rejects tensors that are not positive semidefinite.
    pub fn psd(a: f64, b: f64, c: f64) -> Result<Self> {
        let t = Self { a, b, c };
        if t.is_psd() {
            Ok(t)
        } else {
            Err(Error::IndefiniteTensor { a, b, c })
        }
    }

    /// Tensor with eigenvalue `lambda1` along `(cos θ, sin θ)` and `lambda2`
    /// along the orthogonal direction.
    pub fn from_eigen(lambda1: f64, lambda2: f64, theta: f64) -> Self {
        let (v, u) = theta.sin_cos();
        Self {
            a: lambda1 * u * u + lambda2 * v * v,
            b: (lambda1 - lambda2) * u * v,
            c: lambda2 * u * u + lambda1 * v * v,
        }
    }

    pub fn is_psd(&self) -> bool {
        self.a.is_finite()
            && self.b.is_finite()
            && self.c.is_finite()
            && self.a >= 0.0
            && self.c >= 0.0
            && self.a * self.c - self.b * self.b >= -PSD_TOLERANCE
    }

    pub fn trace(&self) -> f64 {
        self.a + self.c
    }

    /// The same tensor seen in a frame with x and y swapped.
    pub fn transpose_axes(&self) -> Self {
        Self {
            a: self.c,
            b: self.b,
            c: self.a,
        }
    }
}

pub type TensorField = StaggeredField<DiffusionTensor>;

/// Every staggered site of a `width×height` image holds `t`.
pub fn constant_field(t: DiffusionTensor, width: usize, height: usize) -> Result<TensorField> {
    if !t.is_psd() {
        return Err(Error::IndefiniteTensor {
            a: t.a,
            b: t.b,
            c: t.c,
        });
    }
    Ok(TensorField::filled(width, height, t))
}

/// Edge-enhancing diffusion tensor built from the smoothed gradient.
///
/// Across the edge (along `∇u_σ`) the eigenvalue is `g(|∇u_σ|²)`, along the
/// edge it is 1. A vanishing gradient gives the identity.
pub fn eed_tensor(ux: f64, uy: f64, diffusivity: &Diffusivity) -> DiffusionTensor {
    let s2 = ux * ux + uy * uy;
    if s2 == 0.0 {
        return DiffusionTensor::IDENTITY;
    }
    let g = diffusivity.eval(s2);
    let n = s2.sqrt();
    let (vx, vy) = (ux / n, uy / n);
    DiffusionTensor {
        a: g * vx * vx + vy * vy,
        b: (g - 1.0) * vx * vy,
        c: g * vy * vy + vx * vx,
    }
}

pub fn eed_field(img: &Image, sigma: f64, diffusivity: &Diffusivity) -> Result<TensorField> {
    let smoothed = gaussian_smooth(img, sigma)?;
    let grad = staggered_gradient(&smoothed)?;
    let data: Vec<DiffusionTensor> = grad
        .as_slice()
        .par_iter()
        .map(|g| eed_tensor(g.ux, g.uy, diffusivity))
        .collect();
    TensorField::for_image(img.width(), img.height(), data)
}
