//! Spectral-norm bounds for the stencil matrix and the resulting explicit
//! time step limits.
//!
//! For `α ∈ [0, ½]` and `|γ| ≤ 1` the operator matrix `A` is symmetric
//! negative semidefinite, so `‖u + τAu‖₂ ≤ ‖u‖₂` whenever `τ ≤ 2/ρ(A)`.
//! Two upper bounds on `ρ(A)` are offered:
//!
//! * [`theorem_bound`] depends only on the tensor eigenvalues,
//!   `(4(1−α)(λ1+λ2) + 2(1−γ(1−2α))(λ1−λ2))/h²`, maximised over the sites;
//! * [`gershgorin_field_bound`] evaluates the Gershgorin radius of every
//!   pixel, grouped by its four corner tensors.
//!
//! Note that the two bounds are not ordered in general. On adversarial
//! fields (corners whose `a − δ` or `c − δ` is negative) the per-pixel
//! Gershgorin sum can exceed the eigenvalue-only bound, while `ρ(A)` itself
//! stays below both.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{CornerWeights, StencilParams};
use crate::tensor::{DiffusionTensor, TensorField};

/// Above this size the oracle switches from a dense eigensolve to power iteration.
pub const DENSE_EIGEN_LIMIT: usize = 400;
pub const POWER_MAX_ITERATIONS: usize = 100_000;
pub const POWER_TOLERANCE: f64 = 1e-10;
const POWER_SEED: u64 = 0x5eed_0001;

/// Eigenvalues of a symmetric 2×2 tensor, `lambda1 ≥ lambda2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda1: f64,
    pub lambda2: f64,
}

pub fn eigenvalues_2x2(t: &DiffusionTensor) -> EigenPair {
    let mean = 0.5 * (t.a + t.c);
    let radius = (0.5 * (t.a - t.c)).hypot(t.b);
    EigenPair {
        lambda1: mean + radius,
        lambda2: mean - radius,
    }
}

pub fn theorem_bound(e: &EigenPair, p: &StencilParams, h: f64) -> f64 {
    let sum = e.lambda1 + e.lambda2;
    let gap = e.lambda1 - e.lambda2;
    (4.0 * (1.0 - p.alpha()) * sum + 2.0 * (1.0 - p.beta_magnitude()) * gap) / (h * h)
}

/// Largest per-site [`theorem_bound`] over the field (0 for an empty field).
pub fn field_theorem_bound(field: &TensorField, p: &StencilParams, h: f64) -> f64 {
    field
        .as_slice()
        .par_iter()
        .map(|t| theorem_bound(&eigenvalues_2x2(t), p, h))
        .reduce(|| 0.0, f64::max)
}

#[inline]
fn pos2(x: f64) -> f64 {
    x + x.abs()
}

/// `(1/(2h²)) · max_pixel Σ_corners [(a−δ)+|a−δ| + (δ±b)+|δ±b| + (c−δ)+|c−δ|]`,
/// `+b` at the NE/SW corners and `−b` at NW/SE, ghost corners included.
pub fn gershgorin_field_bound(field: &TensorField, p: &StencilParams, h: f64) -> f64 {
    let corners = CornerWeights::new(field, p);
    gershgorin_from_corners(&corners, h)
}

pub(crate) fn gershgorin_from_corners(corners: &CornerWeights, h: f64) -> f64 {
    let (w, ht) = (corners.image_width(), corners.image_height());
    let row_max: Vec<f64> = (0..ht)
        .into_par_iter()
        .map(|j| {
            let j = j as isize;
            let mut best: f64 = 0.0;
            for i in 0..w as isize {
                let ne = corners.get(i, j);
                let sw = corners.get(i - 1, j - 1);
                let nw = corners.get(i - 1, j);
                let se = corners.get(i, j - 1);
                let s = pos2(ne.w0)
                    + pos2(ne.w1)
                    + pos2(ne.w2)
                    + pos2(sw.w0)
                    + pos2(sw.w1)
                    + pos2(sw.w2)
                    + pos2(nw.w0)
                    + pos2(nw.w3)
                    + pos2(nw.w2)
                    + pos2(se.w0)
                    + pos2(se.w3)
                    + pos2(se.w2);
                best = best.max(s);
            }
            best
        })
        .collect();
    row_max.into_iter().fold(0.0, f64::max) / (2.0 * h * h)
}

/// Largest absolute eigenvalue of a symmetric matrix.
///
/// Dense eigensolve up to [`DENSE_EIGEN_LIMIT`] rows, deterministic power
/// iteration beyond that.
pub fn spectral_norm_oracle(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    if n <= DENSE_EIGEN_LIMIT {
        let eig = symmetric_eigenvalues(a);
        return Ok(eig.iter().fold(0.0, |m: f64, &v| m.max(v.abs())));
    }
    power_iteration(|x, y| y.copy_from(&(a * x)), n)
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Power iteration for `max |λ|` of a symmetric linear map of dimension `n`.
pub fn power_iteration(apply: impl Fn(&DVector<f64>, &mut DVector<f64>), n: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut x = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    x /= x.norm();
    let mut y = DVector::zeros(n);
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERATIONS {
        apply(&x, &mut y);
        let next = y.norm();
        if next == 0.0 {
            return Ok(0.0);
        }
        x.copy_from(&y);
        x /= next;
        if (next - estimate).abs() <= POWER_TOLERANCE * next {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::NotConverged {
        iterations: POWER_MAX_ITERATIONS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    Theorem,
    Gershgorin,
}

/// Largest stable step `2/ρ̂` for the chosen `ρ` bound.
pub fn max_step(field: &TensorField, p: &StencilParams, h: f64, mode: BoundMode) -> Result<f64> {
    let rho = match mode {
        BoundMode::Theorem => field_theorem_bound(field, p, h),
        BoundMode::Gershgorin => gershgorin_field_bound(field, p, h),
    };
    step_from_bound(rho)
}

pub(crate) fn step_from_bound(rho: f64) -> Result<f64> {
    if rho > 0.0 && rho.is_finite() {
        Ok(2.0 / rho)
    } else {
        Err(Error::NoStepLimit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub theorem_bound: f64,
    pub gershgorin_bound: f64,
    pub oracle_norm: Option<f64>,
    /// `2 / theorem_bound`.
    pub tau_max: f64,
}

impl StabilityReport {
    /// Both bounds, plus the exact norm when `with_oracle` is set and the
    /// grid is small enough for dense assembly.
    pub fn analyze(
        field: &TensorField,
        p: &StencilParams,
        h: f64,
        with_oracle: bool,
    ) -> Result<Self> {
        let theorem = field_theorem_bound(field, p, h);
        let gershgorin = gershgorin_field_bound(field, p, h);
        let oracle_norm = if with_oracle {
            let (w, ht) = (field.width() + 1, field.height() + 1);
            let a = crate::stencil::assemble_matrix(field, p, w, ht, h)?;
            Some(spectral_norm_oracle(&a)?)
        } else {
            None
        };
        Ok(Self {
            theorem_bound: theorem,
            gershgorin_bound: gershgorin,
            oracle_norm,
            tau_max: step_from_bound(theorem)?,
        })
    }

    /// `ρ(A) / theorem bound`, how tight the bound is on this field.
    pub fn tightness(&self) -> Option<f64> {
        self.oracle_norm.map(|r| r / self.theorem_bound)
    }
}
