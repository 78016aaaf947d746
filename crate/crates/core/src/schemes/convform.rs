//! Residual-block form of the explicit step.
//!
//! Each direction `e_i` is one branch: a forward-difference convolution
//! (`K1`), a space-variant gate holding the directional diffusivity `w_i`,
//! and a backward-difference convolution (`K2`). The block output is
//!
//! ```text
//! u + Σ_i K2_i( τ·w_i ⊙ K1_i(u) )
//! ```
//!
//! with zero biases and identity output activation. Forward differences read
//! mirrored pixels, so axial fluxes across the border vanish and diagonal
//! fluxes at ghost corners fold back exactly like the stencil weights do.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;

use crate::grid::Image;
use crate::stencil::{CornerWeights, DirectionalWeights};

/// One of the four splitting directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    E0,
    E1,
    E2,
    E3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::E0, Direction::E1, Direction::E2, Direction::E3];

    /// Pixel step of the forward difference.
    pub fn step(self) -> (isize, isize) {
        match self {
            Direction::E0 => (1, 0),
            Direction::E1 => (1, 1),
            Direction::E2 => (0, 1),
            Direction::E3 => (-1, 1),
        }
    }

    /// Distance between the two pixels of a difference, in units of `h`.
    pub fn spacing(self) -> f64 {
        match self {
            Direction::E0 | Direction::E2 => 1.0,
            Direction::E1 | Direction::E3 => SQRT_2,
        }
    }

    /// Gate for the segment from pixel `(i, j)` to `(i, j) + step`.
    #[inline]
    fn gate(self, corners: &CornerWeights, i: isize, j: isize) -> f64 {
        let pick = |c: &DirectionalWeights| match self {
            Direction::E0 => c.w0,
            Direction::E1 => c.w1,
            Direction::E2 => c.w2,
            Direction::E3 => c.w3,
        };
        match self {
            // edge (i+½, j) between corners (i+½, j±½)
            Direction::E0 => 0.5 * (pick(corners.get(i, j)) + pick(corners.get(i, j - 1))),
            // edge (i, j+½) between corners (i±½, j+½)
            Direction::E2 => 0.5 * (pick(corners.get(i, j)) + pick(corners.get(i - 1, j))),
            Direction::E1 => pick(corners.get(i, j)),
            Direction::E3 => pick(corners.get(i - 1, j)),
        }
    }
}

/// Gated forward differences on the padded index range `[-1, W] × [-1, H]`.
struct Flux {
    width: usize,
    data: Vec<f64>,
}

impl Flux {
    #[inline]
    fn get(&self, i: isize, j: isize) -> f64 {
        self.data[(j + 1) as usize * self.width + (i + 1) as usize]
    }
}

/// One directional branch `K2 ∘ gate ∘ K1`.
pub struct Branch<'a> {
    direction: Direction,
    corners: &'a CornerWeights,
    scale: f64,
}

impl<'a> Branch<'a> {
    pub fn new(direction: Direction, corners: &'a CornerWeights, scale: f64) -> Self {
        Self {
            direction,
            corners,
            scale,
        }
    }

    fn fluxes(&self, u: &Image) -> Flux {
        let (w, h) = (u.width() as isize, u.height() as isize);
        let (si, sj) = self.direction.step();
        let inv = 1.0 / (self.direction.spacing() * u.h());
        let pw = (w + 2) as usize;
        let mut data = vec![0.0; pw * (h + 2) as usize];
        // the backward pass reads fluxes at p and p − step for p inside the image
        let lo_i = (-si).min(0);
        let hi_i = (w - 1 - si).max(w - 1);
        let lo_j = -sj;
        let hi_j = h - 1;
        data.par_chunks_mut(pw).enumerate().for_each(|(row, out)| {
            let j = row as isize - 1;
            if j < lo_j || j > hi_j {
                return;
            }
            for i in lo_i..=hi_i {
                let forward = (u.get_reflected(i + si, j + sj) - u.get_reflected(i, j)) * inv;
                let gate = self.direction.gate(self.corners, i, j);
                out[(i + 1) as usize] = self.scale * gate * forward;
            }
        });
        Flux { width: pw, data }
    }

    /// Adds this branch's backward difference of the gated fluxes into `acc`.
    pub fn accumulate(&self, u: &Image, acc: &mut [f64]) {
        let flux = self.fluxes(u);
        let w = u.width();
        let (si, sj) = self.direction.step();
        let inv = 1.0 / (self.direction.spacing() * u.h());
        acc.par_chunks_mut(w).enumerate().for_each(|(j, row)| {
            let j = j as isize;
            for (i, o) in row.iter_mut().enumerate() {
                let i = i as isize;
                *o += (flux.get(i, j) - flux.get(i - si, j - sj)) * inv;
            }
        });
    }
}

/// `Σ_i K2_i(scale·w_i ⊙ K1_i(u))`.
pub fn divergence_sum(u: &Image, corners: &CornerWeights, scale: f64) -> Vec<f64> {
    let mut acc = vec![0.0; u.len()];
    for d in Direction::ALL {
        Branch::new(d, corners, scale).accumulate(u, &mut acc);
    }
    acc
}

/// Full block: `u + Σ_i K2_i(τ·w_i ⊙ K1_i(u))`.
pub fn residual_block(u: &Image, corners: &CornerWeights, tau: f64) -> Image {
    let mut acc = divergence_sum(u, corners, tau);
    acc.par_iter_mut()
        .zip(u.values().par_iter())
        .for_each(|(a, &v)| *a += v);
    Image::from_parts(u.width(), u.height(), u.h(), acc)
}
