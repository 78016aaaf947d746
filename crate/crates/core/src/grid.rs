//! Pixel grids, staggered fields and the boundary convention shared by every
//! operator in the crate.
//!
//! Pixel `(i, j)` sits at position `(i·h, j·h)`: `i` counts columns (the x
//! axis) and `j` counts rows (the y axis). Values are stored row-major.
//! Staggered sites live at the cell corners `(i+½, j+½)` and are indexed by
//! the pixel at their lower-left, so a `W×H` image owns a `(W−1)×(H−1)`
//! staggered field.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense greyscale image with grid size `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    h: f64,
    values: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_grid_size(width, height, 1.0, values)
    }

    pub fn with_grid_size(width: usize, height: usize, h: f64, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::ShapeMismatch {
                width,
                height,
                len: values.len(),
            });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGridSize(h));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(Self {
            width,
            height,
            h,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Samples `f(x, y)` at `x = i·h`, `y = j·h`.
    pub fn from_fn(
        width: usize,
        height: usize,
        h: f64,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                values.push(f(i as f64 * h, j as f64 * h));
            }
        }
        Self::with_grid_size(width, height, h, values)
    }

    /// Internal constructor for operator outputs whose shape is known to be right.
    pub(crate) fn from_parts(width: usize, height: usize, h: f64, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            h,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    /// Value at a possibly out-of-range index, mirrored back into the grid.
    #[inline]
    pub fn get_reflected(&self, i: isize, j: isize) -> f64 {
        self.get(reflect_index(i, self.width), reflect_index(j, self.height))
    }

    /// Euclidean norm of the value vector (no `h` weighting).
    pub fn norm(&self) -> f64 {
        ordered_sum(&self.values, |v| v * v).sqrt()
    }

    pub fn mean(&self) -> f64 {
        ordered_sum(&self.values, |v| v) / self.values.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Swaps the x and y axes.
    pub fn transpose(&self) -> Image {
        let mut values = Vec::with_capacity(self.len());
        for i in 0..self.width {
            for j in 0..self.height {
                values.push(self.get(i, j));
            }
        }
        Image::from_parts(self.height, self.width, self.h, values)
    }

    pub(crate) fn ensure_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }
}

/// Sum in fixed row-chunk order, so the result does not depend on the thread count.
pub(crate) fn ordered_sum(values: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    const CHUNK: usize = 4096;
    let partials: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|&v| f(v)).sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Field of values at the staggered positions `(i+½, j+½)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredField<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> StaggeredField<T> {
    /// Builds the staggered field belonging to an image of the given size.
    pub fn for_image(image_width: usize, image_height: usize, data: Vec<T>) -> Result<Self> {
        let width = image_width.saturating_sub(1);
        let height = image_height.saturating_sub(1);
        if data.len() != width * height {
            return Err(Error::ShapeMismatch {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        image_width: usize,
        image_height: usize,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Self {
        let width = image_width.saturating_sub(1);
        let height = image_height.saturating_sub(1);
        let mut data = Vec::with_capacity(width * height);
        for l in 0..height {
            for k in 0..width {
                data.push(f(k, l));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Site `(k+½, l+½)`.
    #[inline]
    pub fn get(&self, k: usize, l: usize) -> &T {
        &self.data[l * self.width + k]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> StaggeredField<U> {
        StaggeredField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// True when this field sits on the corners of a `width×height` image.
    pub fn fits(&self, image_width: usize, image_height: usize) -> bool {
        self.width == image_width.saturating_sub(1) && self.height == image_height.saturating_sub(1)
    }

    pub(crate) fn check_fits(&self, img: &Image) -> Result<()> {
        if self.fits(img.width(), img.height()) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                width: img.width(),
                height: img.height(),
                field_width: self.width,
                field_height: self.height,
            })
        }
    }
}

impl<T: Clone> StaggeredField<T> {
    pub fn filled(image_width: usize, image_height: usize, value: T) -> Self {
        let width = image_width.saturating_sub(1);
        let height = image_height.saturating_sub(1);
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Swaps the x and y axes of the site layout; payloads are untouched.
    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for k in 0..self.width {
            for l in 0..self.height {
                data.push(self.get(k, l).clone());
            }
        }
        Self {
            width: self.height,
            height: self.width,
            data,
        }
    }
}

/// Whole-sample mirroring: `-1 ↦ 0`, `n ↦ n-1`. Any offset is folded with
/// period `2n`, so deep reflections terminate too.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n >= 1);
    let n = n as isize;
    if (0..n).contains(&i) {
        return i as usize;
    }
    let m = i.rem_euclid(2 * n);
    if m < n {
        m as usize
    } else {
        (2 * n - 1 - m) as usize
    }
}

/// Sampled Gaussian truncated at radius `⌈3σ/h⌉` and renormalised to unit sum.
/// Returns the weights for offsets `0..=radius`.
pub fn gaussian_kernel(sigma: f64, h: f64) -> Vec<f64> {
    let radius = (3.0 * sigma / h).ceil() as usize;
    let mut half: Vec<f64> = (0..=radius)
        .map(|k| {
            let x = k as f64 * h;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total = half[0] + 2.0 * half[1..].iter().sum::<f64>();
    for w in &mut half {
        *w /= total;
    }
    half
}

/// Separable Gaussian smoothing under reflecting boundaries.
pub fn gaussian_smooth(img: &Image, sigma: f64) -> Result<Image> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::NegativeSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma, img.h());
    let (w, h) = (img.width(), img.height());
    let src = img.values();

    // Written as u + Σ w_k (u_{i±k} − u_i) so constants pass through exactly.
    let mut rows = vec![0.0; w * h];
    rows.par_chunks_mut(w).enumerate().for_each(|(j, out)| {
        let row = &src[j * w..(j + 1) * w];
        for (i, o) in out.iter_mut().enumerate() {
            let centre = row[i];
            let mut acc = 0.0;
            for (k, &wk) in kernel.iter().enumerate().skip(1) {
                let k = k as isize;
                let left = row[reflect_index(i as isize - k, w)];
                let right = row[reflect_index(i as isize + k, w)];
                acc += wk * ((left - centre) + (right - centre));
            }
            *o = centre + acc;
        }
    });

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(j, out_row)| {
        let centre_row = &rows[j * w..(j + 1) * w];
        for (i, o) in out_row.iter_mut().enumerate() {
            let centre = centre_row[i];
            let mut acc = 0.0;
            for (k, &wk) in kernel.iter().enumerate().skip(1) {
                let k = k as isize;
                let down = rows[reflect_index(j as isize - k, h) * w + i];
                let up = rows[reflect_index(j as isize + k, h) * w + i];
                acc += wk * ((down - centre) + (up - centre));
            }
            *o = centre + acc;
        }
    });
    Ok(Image::from_parts(w, h, img.h(), out))
}

/// Gradient `(ux, uy)` at a staggered site.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gradient {
    pub ux: f64,
    pub uy: f64,
}

impl Gradient {
    pub fn norm_sqr(&self) -> f64 {
        self.ux * self.ux + self.uy * self.uy
    }
}

/// Central differences in each 2×2 pixel block, placed at the block centre.
pub fn staggered_gradient(img: &Image) -> Result<StaggeredField<Gradient>> {
    let (w, h) = (img.width(), img.height());
    if w < 2 || h < 2 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 2,
        });
    }
    let inv = 1.0 / (2.0 * img.h());
    let sw = w - 1;
    let mut data = vec![Gradient::default(); sw * (h - 1)];
    data.par_chunks_mut(sw).enumerate().for_each(|(l, row)| {
        for (k, g) in row.iter_mut().enumerate() {
            let u00 = img.get(k, l);
            let u10 = img.get(k + 1, l);
            let u01 = img.get(k, l + 1);
            let u11 = img.get(k + 1, l + 1);
            *g = Gradient {
                ux: ((u10 + u11) - (u00 + u01)) * inv,
                uy: ((u01 + u11) - (u00 + u10)) * inv,
            };
        }
    });
    StaggeredField::for_image(w, h, data)
}
