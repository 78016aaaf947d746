//! The one-parameter 3×3 stencil family for `div(D∇u)`.
//!
//! The 2-D operator is split into four 1-D diffusions along
//! `e0 = (1, 0)`, `e1 = (1, 1)/√2`, `e2 = (0, 1)` and `e3 = (−1, 1)/√2` with
//! directional diffusivities
//!
//! ```text
//! w0 = a − δ,   w1 = δ + b,   w2 = c − δ,   w3 = δ − b
//! ```
//!
//! where `δ = α(a + c) + γ(1 − 2α)|b|` is evaluated at every staggered corner
//! from that corner's tensor. Diagonal weights are taken at the corners,
//! axial weights at edge midpoints as the mean of the two adjacent corners.
//!
//! # Boundaries
//!
//! Pixels on the border have corners outside the staggered field ("ghost"
//! corners). A ghost corner takes `a` and `c` from the mirrored staggered
//! site and `b = 0`: it lies on the reflection axis, where only the
//! mirror-invariant part of the tensor survives. Stencil weights that reach
//! outside the pixel grid are folded back with [`reflect_index`]. This keeps
//! the assembled matrix symmetric with zero row sums.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{reflect_index, Image};
use crate::tensor::{DiffusionTensor, TensorField};

/// Largest grid handled by the dense matrix assembly.
pub const MAX_DENSE_UNKNOWNS: usize = 10_000;

/// Family parameters `α ∈ [0, ½]` and `γ ∈ [−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StencilParams {
    alpha: f64,
    gamma: f64,
}

impl StencilParams {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if !(-1.0..=1.0).contains(&gamma) {
            return Err(Error::GammaOutOfRange(gamma));
        }
        Ok(Self { alpha, gamma })
    }

    /// `α = 0, γ = 0`: the axial five-point discretisation (plus diagonal
    /// terms only where `b ≠ 0`).
    pub fn standard() -> Self {
        Self {
            alpha: 0.0,
            gamma: 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `γ(1 − 2α)`, the magnitude of `β`.
    #[inline]
    pub fn beta_magnitude(&self) -> f64 {
        self.gamma * (1.0 - 2.0 * self.alpha)
    }

    #[inline]
    pub fn delta(&self, t: &DiffusionTensor) -> f64 {
        delta_value(t, self)
    }
}

impl Default for StencilParams {
    fn default() -> Self {
        Self::standard()
    }
}

/// `δ = α(a + c) + β b` with `β = γ(1 − 2α) sgn(b)`.
#[inline]
pub fn delta_value(t: &DiffusionTensor, p: &StencilParams) -> f64 {
    p.alpha * (t.a + t.c) + p.beta_magnitude() * t.b.abs()
}

/// Diffusivities along `e0..e3`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DirectionalWeights {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl DirectionalWeights {
    pub fn sum(&self) -> f64 {
        self.w0 + self.w1 + self.w2 + self.w3
    }
}

#[inline]
pub fn directional_weights(t: &DiffusionTensor, delta: f64) -> DirectionalWeights {
    DirectionalWeights {
        w0: t.a - delta,
        w1: delta + t.b,
        w2: t.c - delta,
        w3: delta - t.b,
    }
}

/// Tensor at corner `(k+½, l+½)` for `k ∈ [−1, W−1]`, `l ∈ [−1, H−1]`,
/// including the ghost corners around the staggered field.
pub fn corner_tensor(field: &TensorField, k: isize, l: isize) -> DiffusionTensor {
    if field.is_empty() {
        return DiffusionTensor::ZERO;
    }
    let kk = reflect_index(k, field.width());
    let ll = reflect_index(l, field.height());
    let t = *field.get(kk, ll);
    if kk as isize == k && ll as isize == l {
        t
    } else {
        DiffusionTensor { b: 0.0, ..t }
    }
}

/// Directional weights at all `(W+1)×(H+1)` corners of a `W×H` image.
#[derive(Debug, Clone)]
pub struct CornerWeights {
    width: usize,
    height: usize,
    data: Vec<DirectionalWeights>,
}

impl CornerWeights {
    pub fn new(field: &TensorField, p: &StencilParams) -> Self {
        let width = field.width() + 2;
        let height = field.height() + 2;
        let mut data = vec![DirectionalWeights::default(); width * height];
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(row, out)| {
                let l = row as isize - 1;
                for (col, w) in out.iter_mut().enumerate() {
                    let t = corner_tensor(field, col as isize - 1, l);
                    *w = directional_weights(&t, delta_value(&t, p));
                }
            });
        Self {
            width,
            height,
            data,
        }
    }

    /// Image width this grid belongs to.
    pub fn image_width(&self) -> usize {
        self.width - 1
    }

    pub fn image_height(&self) -> usize {
        self.height - 1
    }

    /// Corner `(k+½, l+½)`, `k ∈ [−1, W−1]`, `l ∈ [−1, H−1]`.
    #[inline]
    pub fn get(&self, k: isize, l: isize) -> &DirectionalWeights {
        &self.data[(l + 1) as usize * self.width + (k + 1) as usize]
    }
}

/// Neighbour offsets `(di, dj)` in the order used by [`Stencil::neighbors`]:
/// E, W, N, S, NE, SW, NW, SE. `dj = +1` points along +y.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
];

/// Unscaled 3×3 mask at one pixel; the `1/h²` factor is applied on use.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stencil {
    pub center: f64,
    pub neighbors: [f64; 8],
}

impl Stencil {
    /// Weight at offset `(di, dj)`, both in `−1..=1`.
    pub fn weight(&self, di: isize, dj: isize) -> f64 {
        if di == 0 && dj == 0 {
            return self.center;
        }
        let idx = NEIGHBOR_OFFSETS
            .iter()
            .position(|&o| o == (di, dj))
            .expect("offset outside 3x3 mask");
        self.neighbors[idx]
    }

    pub fn sum(&self) -> f64 {
        self.center + self.neighbors.iter().sum::<f64>()
    }

    /// Rows top (`dj = +1`) to bottom, columns left to right.
    pub fn as_grid(&self) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        for (r, dj) in [1isize, 0, -1].into_iter().enumerate() {
            for (c, di) in [-1isize, 0, 1].into_iter().enumerate() {
                g[r][c] = self.weight(di, dj);
            }
        }
        g
    }
}

#[inline]
pub(crate) fn stencil_at(corners: &CornerWeights, i: usize, j: usize) -> Stencil {
    let (i, j) = (i as isize, j as isize);
    let ne = corners.get(i, j);
    let nw = corners.get(i - 1, j);
    let sw = corners.get(i - 1, j - 1);
    let se = corners.get(i, j - 1);
    let neighbors = [
        0.5 * (ne.w0 + se.w0),
        0.5 * (nw.w0 + sw.w0),
        0.5 * (ne.w2 + nw.w2),
        0.5 * (se.w2 + sw.w2),
        0.5 * ne.w1,
        0.5 * sw.w1,
        0.5 * nw.w3,
        0.5 * se.w3,
    ];
    Stencil {
        center: -neighbors.iter().sum::<f64>(),
        neighbors,
    }
}

/// The mask at pixel `(i, j)` of the image that `field` belongs to.
pub fn assemble_stencil(field: &TensorField, p: &StencilParams, i: usize, j: usize) -> Stencil {
    let corners = CornerWeights::new(field, p);
    stencil_at(&corners, i, j)
}

/// Per-pixel masks for a whole image.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilField {
    width: usize,
    height: usize,
    stencils: Vec<Stencil>,
}

impl StencilField {
    pub fn assemble(field: &TensorField, p: &StencilParams) -> Self {
        let corners = CornerWeights::new(field, p);
        let (width, height) = (corners.image_width(), corners.image_height());
        let mut stencils = vec![Stencil::default(); width * height];
        stencils
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(j, row)| {
                for (i, s) in row.iter_mut().enumerate() {
                    *s = stencil_at(&corners, i, j);
                }
            });
        Self {
            width,
            height,
            stencils,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, i: usize, j: usize) -> &Stencil {
        &self.stencils[j * self.width + i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Stencil> {
        self.stencils.iter()
    }

    /// `A·u` using the stored masks.
    pub fn apply(&self, img: &Image) -> Result<Image> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::DimensionMismatch {
                width: img.width(),
                height: img.height(),
                field_width: self.width.saturating_sub(1),
                field_height: self.height.saturating_sub(1),
            });
        }
        Ok(apply_with(img, |i, j| self.stencils[j * self.width + i]))
    }
}

fn apply_with(img: &Image, stencil: impl Fn(usize, usize) -> Stencil + Sync) -> Image {
    let (w, h) = (img.width(), img.height());
    let inv_h2 = 1.0 / (img.h() * img.h());
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(j, row)| {
        for (i, o) in row.iter_mut().enumerate() {
            let s = stencil(i, j);
            let centre = img.get(i, j);
            let mut acc = 0.0;
            for (&(di, dj), &wt) in NEIGHBOR_OFFSETS.iter().zip(&s.neighbors) {
                let q = img.get_reflected(i as isize + di, j as isize + dj);
                acc += wt * (q - centre);
            }
            *o = acc * inv_h2;
        }
    });
    Image::from_parts(w, h, img.h(), out)
}

/// Applies the pre-computed corner weights; shared by the time stepper.
pub(crate) fn apply_corners(img: &Image, corners: &CornerWeights) -> Image {
    apply_with(img, |i, j| stencil_at(corners, i, j))
}

/// Discrete `div(D∇u)` with the stencil family, reflecting boundaries.
pub fn apply_operator(img: &Image, field: &TensorField, p: &StencilParams) -> Result<Image> {
    field.check_fits(img)?;
    let corners = CornerWeights::new(field, p);
    Ok(apply_corners(img, &corners))
}

/// Dense `N×N` matrix of the operator, `N = width·height`, row-major pixel order.
pub fn assemble_matrix(
    field: &TensorField,
    p: &StencilParams,
    width: usize,
    height: usize,
    h: f64,
) -> Result<DMatrix<f64>> {
    let n = width * height;
    if n > MAX_DENSE_UNKNOWNS {
        return Err(Error::MatrixTooLarge {
            n,
            max: MAX_DENSE_UNKNOWNS,
        });
    }
    if !field.fits(width, height) {
        return Err(Error::DimensionMismatch {
            width,
            height,
            field_width: field.width(),
            field_height: field.height(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidGridSize(h));
    }
    let inv_h2 = 1.0 / (h * h);
    let corners = CornerWeights::new(field, p);
    let mut a = DMatrix::zeros(n, n);
    for j in 0..height {
        for i in 0..width {
            let row = j * width + i;
            let s = stencil_at(&corners, i, j);
            for (&(di, dj), &wt) in NEIGHBOR_OFFSETS.iter().zip(&s.neighbors) {
                let qi = reflect_index(i as isize + di, width);
                let qj = reflect_index(j as isize + dj, height);
                let col = qj * width + qi;
                if col != row {
                    a[(row, col)] += wt * inv_h2;
                    a[(row, row)] -= wt * inv_h2;
                }
            }
        }
    }
    Ok(a)
}
