//! Explicit time stepping: the 1-D nonlinear scheme, the 2-D anisotropic
//! step with either backend, and the iteration driver.

pub mod convform;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diffusivity::Diffusivity;
use crate::error::{Error, Result};
use crate::grid::{reflect_index, Image};
use crate::stability::{field_theorem_bound, gershgorin_from_corners, step_from_bound};
use crate::stencil::{apply_corners, CornerWeights, StencilParams};
use crate::tensor::{constant_field, eed_field, DiffusionTensor, TensorField};

/// One step of `u_t = (Φ(u_x))_x`:
/// `u_i + (τ/h)(Φ((u_{i+1}−u_i)/h) − Φ((u_i−u_{i−1})/h))`, mirrored ends.
pub fn explicit_step_1d(signal: &[f64], tau: f64, h: f64, kind: &Diffusivity) -> Vec<f64> {
    explicit_step_1d_with(signal, tau, h, |p| kind.flux(p))
}

/// [`explicit_step_1d`] with an arbitrary flux function.
pub fn explicit_step_1d_with(
    signal: &[f64],
    tau: f64,
    h: f64,
    flux: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let n = signal.len();
    let at = |i: isize| signal[reflect_index(i, n)];
    (0..n as isize)
        .map(|i| {
            let u = at(i);
            let right = flux((at(i + 1) - u) / h);
            let left = flux((u - at(i - 1)) / h);
            u + tau / h * (right - left)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Assemble the 3×3 mask per pixel and apply it.
    #[default]
    Stencil,
    /// Four forward-difference / gate / backward-difference branches.
    ConvForm,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "stencil" => Ok(Self::Stencil),
            "convform" => Ok(Self::ConvForm),
            other => Err(format!("unknown backend {other:?}")),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Stencil => "stencil",
            Backend::ConvForm => "convform",
        })
    }
}

fn step_with_corners(img: &Image, corners: &CornerWeights, tau: f64, backend: Backend) -> Image {
    match backend {
        Backend::Stencil => {
            let au = apply_corners(img, corners);
            let values = img
                .values()
                .iter()
                .zip(au.values())
                .map(|(u, d)| u + tau * d)
                .collect();
            Image::from_parts(img.width(), img.height(), img.h(), values)
        }
        Backend::ConvForm => convform::residual_block(img, corners, tau),
    }
}

/// `u + τ·A(u)·u` with the chosen backend.
pub fn explicit_step_2d(
    img: &Image,
    field: &TensorField,
    p: &StencilParams,
    tau: f64,
    backend: Backend,
) -> Result<Image> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidTimeStep(tau));
    }
    field.check_fits(img)?;
    let corners = CornerWeights::new(field, p);
    Ok(step_with_corners(img, &corners, tau, backend))
}

/// The divergence term computed by the residual-block pipeline; equals
/// [`crate::stencil::apply_operator`] up to rounding.
pub fn convform_apply(img: &Image, field: &TensorField, p: &StencilParams) -> Result<Image> {
    field.check_fits(img)?;
    let corners = CornerWeights::new(field, p);
    let values = convform::divergence_sum(img, &corners, 1.0);
    Ok(Image::from_parts(
        img.width(),
        img.height(),
        img.h(),
        values,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeStep {
    Fixed(f64),
    AutoTheorem,
    AutoGershgorin,
}

impl TimeStep {
    pub fn is_auto(&self) -> bool {
        !matches!(self, TimeStep::Fixed(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorModel {
    Constant(DiffusionTensor),
    Eed {
        sigma: f64,
        diffusivity: Diffusivity,
    },
}

impl TensorModel {
    pub fn field(&self, img: &Image) -> Result<TensorField> {
        match self {
            TensorModel::Constant(t) => constant_field(*t, img.width(), img.height()),
            TensorModel::Eed { sigma, diffusivity } => eed_field(img, *sigma, diffusivity),
        }
    }

    fn is_nonlinear(&self) -> bool {
        matches!(self, TensorModel::Eed { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub steps: usize,
    pub tau: TimeStep,
    pub params: StencilParams,
    pub model: TensorModel,
    pub backend: Backend,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidSteps);
        }
        if let TimeStep::Fixed(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidTimeStep(t));
            }
        }
        match self.model {
            TensorModel::Constant(t) if !t.is_psd() => Err(Error::IndefiniteTensor {
                a: t.a,
                b: t.b,
                c: t.c,
            }),
            TensorModel::Eed { sigma, .. } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(Error::NegativeSigma(sigma))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub tau: f64,
    /// Euclidean norm after the step.
    pub norm: f64,
    pub mean: f64,
    pub theorem_bound: f64,
    pub gershgorin_bound: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub initial_norm: f64,
    pub initial_mean: f64,
    pub steps: Vec<StepRecord>,
}

impl RunTrace {
    /// Every step keeps `‖u‖₂` within `rel_tol` of the previous norm or below.
    pub fn norms_nonincreasing(&self, rel_tol: f64) -> bool {
        let mut prev = self.initial_norm;
        self.steps.iter().all(|s| {
            let ok = s.norm <= prev * (1.0 + rel_tol);
            prev = s.norm;
            ok
        })
    }

    pub fn max_theorem_bound(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.theorem_bound)
            .fold(0.0, f64::max)
    }

    pub fn max_gershgorin_bound(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.gershgorin_bound)
            .fold(0.0, f64::max)
    }
}

/// Iterates the explicit scheme. The EED tensor is rebuilt from the current
/// image at every step; automatic step sizes follow the current field.
pub fn run_diffusion(img: &Image, cfg: &SchemeConfig) -> Result<(Image, RunTrace)> {
    cfg.validate()?;
    let h = img.h();
    let mut u = img.clone();
    let mut trace = RunTrace {
        initial_norm: u.norm(),
        initial_mean: u.mean(),
        steps: Vec::with_capacity(cfg.steps),
    };
    let fixed_field = if cfg.model.is_nonlinear() {
        None
    } else {
        Some(cfg.model.field(&u)?)
    };

    for step in 0..cfg.steps {
        let start = Instant::now();
        let rebuilt;
        let field = match &fixed_field {
            Some(f) => f,
            None => {
                rebuilt = cfg.model.field(&u)?;
                &rebuilt
            }
        };
        let corners = CornerWeights::new(field, &cfg.params);
        let theorem = field_theorem_bound(field, &cfg.params, h);
        let gershgorin = gershgorin_from_corners(&corners, h);
        let tau = match cfg.tau {
            TimeStep::Fixed(t) => t,
            TimeStep::AutoTheorem => step_from_bound(theorem)?,
            TimeStep::AutoGershgorin => step_from_bound(gershgorin)?,
        };
        let next = step_with_corners(&u, &corners, tau, cfg.backend);
        if next.ensure_finite().is_some() {
            return Err(Error::NonFinite { step });
        }
        u = next;
        trace.steps.push(StepRecord {
            tau,
            norm: u.norm(),
            mean: u.mean(),
            theorem_bound: theorem,
            gershgorin_bound: gershgorin,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok((u, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::apply_operator;

    #[test]
    fn one_d_examples() {
        let out = explicit_step_1d_with(&[0.0, 1.0, 0.0], 0.25, 1.0, |p| p);
        assert_eq!(out, vec![0.25, 0.5, 0.25]);
        let pm = Diffusivity::perona_malik(2.0).unwrap();
        let flat = explicit_step_1d(&[3.0; 6], 0.4, 1.0, &pm);
        assert_eq!(flat, vec![3.0; 6]);
    }

    #[test]
    fn one_d_conserves_sum() {
        let sig = [0.0, 4.0, 1.0, 7.0, -2.0, 3.5, 9.0];
        for d in [
            Diffusivity::perona_malik(1.5).unwrap(),
            Diffusivity::charbonnier(0.5).unwrap(),
            Diffusivity::wexp(3.0).unwrap(),
        ] {
            let out = explicit_step_1d(&sig, 0.2, 1.0, &d);
            let s0: f64 = sig.iter().sum();
            let s1: f64 = out.iter().sum();
            assert!((s0 - s1).abs() < 1e-12);
        }
    }

    #[test]
    fn five_point_step_on_impulse() {
        let n = 5;
        let mut v = vec![0.0; n * n];
        v[2 * n + 2] = 1.0;
        let img = Image::new(n, n, v).unwrap();
        let f = constant_field(DiffusionTensor::IDENTITY, n, n).unwrap();
        for backend in [Backend::Stencil, Backend::ConvForm] {
            let out =
                explicit_step_2d(&img, &f, &StencilParams::standard(), 0.25, backend).unwrap();
            assert!(out.get(2, 2).abs() < 1e-15);
            for (i, j) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
                assert!((out.get(i, j) - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn convform_matches_stencil_on_small_field() {
        let f = TensorField::from_fn(7, 6, |k, l| {
            DiffusionTensor::from_eigen(1.0, 0.15, 0.9 * k as f64 - 0.4 * l as f64)
        });
        let img = Image::from_fn(7, 6, 1.0, |x, y| (x * 0.7).sin() + (y * y * 0.1).cos()).unwrap();
        let p = StencilParams::new(0.35, 0.6).unwrap();
        let a = apply_operator(&img, &f, &p).unwrap();
        let b = convform_apply(&img, &f, &p).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
    }

    #[test]
    fn steps_must_be_positive() {
        let img = Image::constant(4, 4, 1.0).unwrap();
        let cfg = SchemeConfig {
            steps: 0,
            tau: TimeStep::AutoTheorem,
            params: StencilParams::standard(),
            model: TensorModel::Constant(DiffusionTensor::IDENTITY),
            backend: Backend::Stencil,
        };
        assert!(matches!(
            run_diffusion(&img, &cfg),
            Err(Error::InvalidSteps)
        ));
        let bad_tau = SchemeConfig {
            steps: 1,
            tau: TimeStep::Fixed(-1.0),
            ..cfg
        };
        assert!(matches!(
            run_diffusion(&img, &bad_tau),
            Err(Error::InvalidTimeStep(_))
        ));
    }

    #[test]
    fn single_linear_step_matches_direct() {
        let img = Image::from_fn(6, 5, 1.0, |x, y| x * x + 2.0 * y).unwrap();
        let cfg = SchemeConfig {
            steps: 1,
            tau: TimeStep::AutoTheorem,
            params: StencilParams::standard(),
            model: TensorModel::Constant(DiffusionTensor::IDENTITY),
            backend: Backend::Stencil,
        };
        let (out, trace) = run_diffusion(&img, &cfg).unwrap();
        let f = constant_field(DiffusionTensor::IDENTITY, 6, 5).unwrap();
        let direct = explicit_step_2d(&img, &f, &cfg.params, 0.25, Backend::Stencil).unwrap();
        assert_eq!(out, direct);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].tau, 0.25);
    }

    #[test]
    fn blowup_is_reported() {
        let img = Image::from_fn(8, 8, 1.0, |x, y| ((x + y) as i64 % 2) as f64 * 1e300).unwrap();
        let cfg = SchemeConfig {
            steps: 50,
            tau: TimeStep::Fixed(10.0),
            params: StencilParams::standard(),
            model: TensorModel::Constant(DiffusionTensor::IDENTITY),
            backend: Backend::Stencil,
        };
        assert!(matches!(
            run_diffusion(&img, &cfg),
            Err(Error::NonFinite { .. })
        ));
    }
}
