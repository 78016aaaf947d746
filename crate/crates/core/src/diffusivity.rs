//! Scalar diffusivities `g(s²)` and their flux functions `Φ(p) = g(p²)·p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant of the exponential edge-enhancing diffusivity, chosen so that the
/// flux `Φ` peaks exactly at `|p| = λ`.
pub const WEXP_CONSTANT: f64 = 3.31488;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusivityKind {
    PeronaMalik,
    Charbonnier,
    Wexp,
}

impl std::str::FromStr for DiffusivityKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pm" | "peronamalik" | "perona-malik" => Ok(Self::PeronaMalik),
            "charbonnier" => Ok(Self::Charbonnier),
            "wexp" => Ok(Self::Wexp),
            other => Err(format!("unknown diffusivity {other:?}")),
        }
    }
}

/// A diffusivity kind together with its contrast parameter `λ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diffusivity {
    kind: DiffusivityKind,
    lambda: f64,
}

impl Diffusivity {
    pub fn new(kind: DiffusivityKind, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidLambda(lambda));
        }
        Ok(Self { kind, lambda })
    }

    pub fn perona_malik(lambda: f64) -> Result<Self> {
        Self::new(DiffusivityKind::PeronaMalik, lambda)
    }

    pub fn charbonnier(lambda: f64) -> Result<Self> {
        Self::new(DiffusivityKind::Charbonnier, lambda)
    }

    pub fn wexp(lambda: f64) -> Result<Self> {
        Self::new(DiffusivityKind::Wexp, lambda)
    }

    pub fn kind(&self) -> DiffusivityKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `g(s2)` for `s2 ≥ 0`; the caller guarantees the sign.
    #[inline]
    pub fn eval(&self, s2: f64) -> f64 {
        debug_assert!(s2 >= 0.0);
        let r = s2 / (self.lambda * self.lambda);
        let g = match self.kind {
            DiffusivityKind::PeronaMalik => 1.0 / (1.0 + r),
            DiffusivityKind::Charbonnier => 1.0 / (1.0 + r).sqrt(),
            DiffusivityKind::Wexp => {
                if r == 0.0 {
                    1.0
                } else {
                    -(-WEXP_CONSTANT / (r * r * r * r)).exp_m1()
                }
            }
        };
        // keep g strictly positive even when r overflows
        g.max(f64::MIN_POSITIVE)
    }

    #[inline]
    pub fn flux(&self, p: f64) -> f64 {
        self.eval(p * p) * p
    }
}

/// Checked evaluation of `g(s2)`.
pub fn diffusivity(s2: f64, kind: &Diffusivity) -> Result<f64> {
    if s2.is_nan() || s2 < 0.0 {
        return Err(Error::NegativeArgument(s2));
    }
    Ok(kind.eval(s2))
}

/// `Φ(p) = g(p²)·p`.
pub fn flux(p: f64, kind: &Diffusivity) -> f64 {
    kind.flux(p)
}
