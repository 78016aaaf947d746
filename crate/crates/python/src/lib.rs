//! Python module `deltastencil_py`.

use deltastencil::pgm;
use deltastencil::report::DiagnosticsReport;
use deltastencil::schemes::{self, convform_apply};
use deltastencil::stability::{self, BoundMode};
use deltastencil::stencil::{self, StencilParams};
use deltastencil::tensor::{self, DiffusionTensor};
use deltastencil::{
    Backend, Diffusivity, DiffusivityKind, Error, SchemeConfig, TensorModel, TimeStep,
};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn params(alpha: f64, gamma: f64) -> PyResult<StencilParams> {
    StencilParams::new(alpha, gamma).map_err(to_py)
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

#[pyclass(name = "Image", module = "deltastencil_py", from_py_object)]
#[derive(Clone)]
pub struct PyImage {
    inner: deltastencil::Image,
}

#[pymethods]
impl PyImage {
    #[new]
    #[pyo3(signature = (width, height, values, h = 1.0))]
    fn new(width: usize, height: usize, values: Vec<f64>, h: f64) -> PyResult<Self> {
        deltastencil::Image::with_grid_size(width, height, h, values)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    /// Row-major samples.
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.inner.width() || j >= self.inner.height() {
            return Err(PyValueError::new_err("pixel index out of range"));
        }
        Ok(self.inner.get(i, j))
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn transpose(&self) -> Self {
        Self {
            inner: self.inner.transpose(),
        }
    }

    fn max_abs_diff(&self, other: &PyImage) -> f64 {
        self.inner.max_abs_diff(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Image(width={}, height={}, h={})",
            self.inner.width(),
            self.inner.height(),
            self.inner.h()
        )
    }
}

/// Diffusion tensors at the staggered sites of an image.
#[pyclass(name = "TensorField", module = "deltastencil_py", from_py_object)]
#[derive(Clone)]
pub struct PyTensorField {
    inner: deltastencil::TensorField,
}

#[pymethods]
impl PyTensorField {
    /// Field for a `width × height` image from `(a, b, c)` triples, row-major over the sites.
    #[staticmethod]
    fn from_tensors(width: usize, height: usize, tensors: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let data = tensors
            .into_iter()
            .map(|(a, b, c)| DiffusionTensor::psd(a, b, c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(to_py)?;
        deltastencil::TensorField::for_image(width, height, data)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn constant(a: f64, b: f64, c: f64, width: usize, height: usize) -> PyResult<Self> {
        let t = DiffusionTensor::psd(a, b, c).map_err(to_py)?;
        tensor::constant_field(t, width, height)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (image, sigma = 1.0, lam = 3.0, diffusivity = "charbonnier"))]
    fn eed(image: &PyImage, sigma: f64, lam: f64, diffusivity: &str) -> PyResult<Self> {
        let d = Diffusivity::new(parse::<DiffusivityKind>(diffusivity)?, lam).map_err(to_py)?;
        tensor::eed_field(&image.inner, sigma, &d)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Number of sites per row (image width − 1).
    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn tensors(&self) -> Vec<(f64, f64, f64)> {
        self.inner.iter().map(|t| (t.a, t.b, t.c)).collect()
    }
}

/// `A(u)·u` via the 3×3 stencil.
#[pyfunction]
#[pyo3(signature = (image, field, alpha = 0.0, gamma = 0.0))]
fn apply_operator(
    image: &PyImage,
    field: &PyTensorField,
    alpha: f64,
    gamma: f64,
) -> PyResult<PyImage> {
    stencil::apply_operator(&image.inner, &field.inner, &params(alpha, gamma)?)
        .map(|inner| PyImage { inner })
        .map_err(to_py)
}

/// `A(u)·u` via the residual-block pipeline.
#[pyfunction]
#[pyo3(name = "convform_apply", signature = (image, field, alpha = 0.0, gamma = 0.0))]
fn py_convform_apply(
    image: &PyImage,
    field: &PyTensorField,
    alpha: f64,
    gamma: f64,
) -> PyResult<PyImage> {
    convform_apply(&image.inner, &field.inner, &params(alpha, gamma)?)
        .map(|inner| PyImage { inner })
        .map_err(to_py)
}

/// Unscaled 3×3 mask at pixel `(i, j)`, rows top to bottom.
#[pyfunction]
#[pyo3(signature = (field, i, j, alpha = 0.0, gamma = 0.0))]
fn stencil_at(
    field: &PyTensorField,
    i: usize,
    j: usize,
    alpha: f64,
    gamma: f64,
) -> PyResult<[[f64; 3]; 3]> {
    if i > field.inner.width() || j > field.inner.height() {
        return Err(PyValueError::new_err("pixel index out of range"));
    }
    Ok(stencil::assemble_stencil(&field.inner, &params(alpha, gamma)?, i, j).as_grid())
}

#[pyfunction]
#[pyo3(signature = (field, alpha = 0.0, gamma = 0.0, h = 1.0))]
fn theorem_bound(field: &PyTensorField, alpha: f64, gamma: f64, h: f64) -> PyResult<f64> {
    Ok(stability::field_theorem_bound(
        &field.inner,
        &params(alpha, gamma)?,
        h,
    ))
}

#[pyfunction]
#[pyo3(signature = (field, alpha = 0.0, gamma = 0.0, h = 1.0))]
fn gershgorin_bound(field: &PyTensorField, alpha: f64, gamma: f64, h: f64) -> PyResult<f64> {
    Ok(stability::gershgorin_field_bound(
        &field.inner,
        &params(alpha, gamma)?,
        h,
    ))
}

/// Exact `ρ(A)` of the assembled matrix.
#[pyfunction]
#[pyo3(signature = (field, alpha = 0.0, gamma = 0.0, h = 1.0))]
fn spectral_norm(field: &PyTensorField, alpha: f64, gamma: f64, h: f64) -> PyResult<f64> {
    let (w, ht) = (field.inner.width() + 1, field.inner.height() + 1);
    let a =
        stencil::assemble_matrix(&field.inner, &params(alpha, gamma)?, w, ht, h).map_err(to_py)?;
    stability::spectral_norm_oracle(&a).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (field, alpha = 0.0, gamma = 0.0, h = 1.0, mode = "theorem"))]
fn max_step(field: &PyTensorField, alpha: f64, gamma: f64, h: f64, mode: &str) -> PyResult<f64> {
    let mode = match mode {
        "theorem" => BoundMode::Theorem,
        "gershgorin" => BoundMode::Gershgorin,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    stability::max_step(&field.inner, &params(alpha, gamma)?, h, mode).map_err(to_py)
}

/// One explicit step `u + τ·A(u)·u`.
#[pyfunction]
#[pyo3(signature = (image, field, tau, alpha = 0.0, gamma = 0.0, backend = "stencil"))]
fn explicit_step(
    image: &PyImage,
    field: &PyTensorField,
    tau: f64,
    alpha: f64,
    gamma: f64,
    backend: &str,
) -> PyResult<PyImage> {
    schemes::explicit_step_2d(
        &image.inner,
        &field.inner,
        &params(alpha, gamma)?,
        tau,
        parse::<Backend>(backend)?,
    )
    .map(|inner| PyImage { inner })
    .map_err(to_py)
}

/// Iterates the scheme; returns the filtered image and the diagnostics JSON.
#[pyfunction]
#[pyo3(signature = (
    image, steps = 10, tau = None, alpha = 0.4, gamma = 1.0, model = "eed",
    sigma = 1.0, lam = 3.0, diffusivity = "charbonnier", a = 1.0, b = 0.0, c = 1.0,
    backend = "stencil",
))]
#[allow(clippy::too_many_arguments)]
fn run_diffusion(
    image: &PyImage,
    steps: usize,
    tau: Option<&Bound<'_, PyAny>>,
    alpha: f64,
    gamma: f64,
    model: &str,
    sigma: f64,
    lam: f64,
    diffusivity: &str,
    a: f64,
    b: f64,
    c: f64,
    backend: &str,
) -> PyResult<(PyImage, String)> {
    let tau = match tau {
        None => TimeStep::AutoTheorem,
        Some(v) => match v.extract::<f64>() {
            Ok(t) => TimeStep::Fixed(t),
            Err(_) => match v.extract::<String>()?.as_str() {
                "auto-theorem" => TimeStep::AutoTheorem,
                "auto-gershgorin" => TimeStep::AutoGershgorin,
                other => return Err(PyValueError::new_err(format!("unknown tau mode {other:?}"))),
            },
        },
    };
    let model = match model {
        "eed" => TensorModel::Eed {
            sigma,
            diffusivity: Diffusivity::new(parse::<DiffusivityKind>(diffusivity)?, lam)
                .map_err(to_py)?,
        },
        "constant" => TensorModel::Constant(DiffusionTensor::psd(a, b, c).map_err(to_py)?),
        "homogeneous" => TensorModel::Constant(DiffusionTensor::IDENTITY),
        other => return Err(PyValueError::new_err(format!("unknown model {other:?}"))),
    };
    let cfg = SchemeConfig {
        steps,
        tau,
        params: params(alpha, gamma)?,
        model,
        backend: parse::<Backend>(backend)?,
    };
    let (out, trace) = deltastencil::run_diffusion(&image.inner, &cfg).map_err(to_py)?;
    let report = DiagnosticsReport::new(&cfg, 1, &trace);
    Ok((PyImage { inner: out }, report.to_json()))
}

#[pyfunction]
fn load_pgm(path: &str) -> PyResult<PyImage> {
    pgm::load_pgm(path)
        .map(|inner| PyImage { inner })
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (image, path, maxval = 255))]
fn save_pgm(image: &PyImage, path: &str, maxval: u32) -> PyResult<()> {
    pgm::save_pgm(&image.inner, path, maxval).map_err(to_py)
}

#[pymodule]
fn deltastencil_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyTensorField>()?;
    m.add_function(wrap_pyfunction!(apply_operator, m)?)?;
    m.add_function(wrap_pyfunction!(py_convform_apply, m)?)?;
    m.add_function(wrap_pyfunction!(stencil_at, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gershgorin_bound, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_norm, m)?)?;
    m.add_function(wrap_pyfunction!(max_step, m)?)?;
    m.add_function(wrap_pyfunction!(explicit_step, m)?)?;
    m.add_function(wrap_pyfunction!(run_diffusion, m)?)?;
    m.add_function(wrap_pyfunction!(load_pgm, m)?)?;
    m.add_function(wrap_pyfunction!(save_pgm, m)?)?;
    Ok(())
}
