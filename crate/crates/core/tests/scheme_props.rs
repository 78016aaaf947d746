mod common;

use std::f64::consts::PI;

use deltastencil::grid::{gaussian_smooth, reflect_index};
use deltastencil::schemes::{convform_apply, explicit_step_1d, explicit_step_2d};
use deltastencil::stability::{max_step, spectral_norm_oracle};
use deltastencil::stencil::{apply_operator, assemble_matrix};
use deltastencil::tensor::eed_tensor;
use deltastencil::{
    run_diffusion, Backend, BoundMode, DiffusionTensor, Diffusivity, DiffusivityKind, Image,
    SchemeConfig, StencilParams, TensorField, TensorModel, TimeStep,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind_strategy() -> impl Strategy<Value = DiffusivityKind> {
    prop::sample::select(vec![
        DiffusivityKind::PeronaMalik,
        DiffusivityKind::Charbonnier,
        DiffusivityKind::Wexp,
    ])
}

fn image_strategy(max: usize) -> impl Strategy<Value = Image> {
    (2usize..=max, 2usize..=max).prop_flat_map(|(w, h)| {
        prop::collection::vec(0.0..255.0f64, w * h).prop_map(move |v| Image::new(w, h, v).unwrap())
    })
}

fn params_strategy() -> impl Strategy<Value = StencilParams> {
    (0.0..=0.5f64, -1.0..=1.0f64).prop_map(|(a, g)| StencilParams::new(a, g).unwrap())
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}

fn halves(img: &Image) -> (Vec<f64>, Vec<f64>) {
    let (mut l, mut r) = (Vec::new(), Vec::new());
    for j in 0..img.height() {
        for i in 0..img.width() {
            if i < img.width() / 2 {
                l.push(img.get(i, j));
            } else {
                r.push(img.get(i, j));
            }
        }
    }
    (l, r)
}

#[test]
fn eed_preserves_noisy_step_edge() {
    let img = common::noisy_step_edge(2024);
    let cfg = SchemeConfig {
        steps: 1,
        tau: TimeStep::AutoTheorem,
        params: StencilParams::new(0.4, 1.0).unwrap(),
        model: TensorModel::Eed {
            sigma: 1.0,
            diffusivity: Diffusivity::charbonnier(3.0).unwrap(),
        },
        backend: Backend::Stencil,
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (l0, r0) = halves(&img);
    let gap0 = mean(&r0) - mean(&l0);
    let var0 = (variance(&l0), variance(&r0));
    let mut u = img;
    for _ in 0..10 {
        u = run_diffusion(&u, &cfg).unwrap().0;
        let (l, r) = halves(&u);
        let var = (variance(&l), variance(&r));
        assert!(
            var.0 < var0.0 && var.1 < var0.1,
            "{var:?} vs initial {var0:?}"
        );
    }
    let (l, r) = halves(&u);
    let gap = mean(&r) - mean(&l);
    assert!(gap < gap0 && gap > 0.95 * gap0, "gap {gap0} -> {gap}");
}

#[test]
fn linear_diffusion_of_cosine_mode_decays_at_symbol_rate() {
    // cos(π(i+½)/n) is an eigenvector of the Neumann five-point operator
    let n = 16;
    let img = Image::from_fn(n, n, 1.0, |x, _| (PI * (x + 0.5) / n as f64).cos()).unwrap();
    let f = deltastencil::tensor::constant_field(DiffusionTensor::IDENTITY, n, n).unwrap();
    let out = apply_operator(&img, &f, &StencilParams::standard()).unwrap();
    let mu = 2.0 * (PI / n as f64).cos() - 2.0;
    for (o, v) in out.values().iter().zip(img.values()) {
        assert!((o - mu * v).abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_preserves_mean(img in image_strategy(16), sigma in 0.0..6.0f64) {
        let s = gaussian_smooth(&img, sigma).unwrap();
        prop_assert!((s.mean() - img.mean()).abs() <= 1e-12 * img.mean().abs().max(1.0));
    }

    #[test]
    fn gaussian_matches_direct_reflected_convolution(img in image_strategy(9), sigma in 0.3..3.0f64) {
        let s = gaussian_smooth(&img, sigma).unwrap();
        let r = (3.0 * sigma).ceil() as isize;
        let raw: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let total: f64 = raw.iter().sum::<f64>().powi(2);
        let (w, h) = (img.width(), img.height());
        for j in 0..h {
            for i in 0..w {
                let mut acc = 0.0;
                for (a, wy) in (-r..=r).zip(&raw) {
                    for (b, wx) in (-r..=r).zip(&raw) {
                        let q = img.get(reflect_index(i as isize + b, w), reflect_index(j as isize + a, h));
                        acc += wx * wy * q;
                    }
                }
                prop_assert!((s.get(i, j) - acc / total).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn backends_agree(img in image_strategy(32), p in params_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = common::random_field(&mut rng, img.width(), img.height());
        let a = apply_operator(&img, &field, &p).unwrap();
        let b = convform_apply(&img, &field, &p).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-12);
    }

    #[test]
    fn explicit_step_is_norm_stable(img in image_strategy(10), p in params_strategy(), seed in any::<u64>(), gersh in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = common::random_field(&mut rng, img.width(), img.height());
        let mode = if gersh { BoundMode::Gershgorin } else { BoundMode::Theorem };
        let tau = max_step(&field, &p, 1.0, mode).unwrap();
        let mut u = img;
        for _ in 0..20 {
            let next = explicit_step_2d(&u, &field, &p, tau, Backend::Stencil).unwrap();
            prop_assert!(next.norm() <= u.norm() * (1.0 + 1e-12));
            u = next;
        }
    }

    #[test]
    fn iteration_matrix_has_unit_spectral_radius_bound(img in image_strategy(7), p in params_strategy(), seed in any::<u64>()) {
        // ‖I + τA‖₂ ≤ 1 at τ = 2/theorem bound
        let (w, h) = (img.width(), img.height());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = common::random_field(&mut rng, w, h);
        let tau = max_step(&field, &p, 1.0, BoundMode::Theorem).unwrap();
        let a = assemble_matrix(&field, &p, w, h, 1.0).unwrap();
        let m = nalgebra::DMatrix::identity(w * h, w * h) + a * tau;
        prop_assert!(spectral_norm_oracle(&m).unwrap() <= 1.0 + 1e-10);
    }

    #[test]
    fn rows_evolve_like_the_1d_scheme(
        signal in prop::collection::vec(0.0..255.0f64, 2..24),
        rows in 2usize..6,
        kind in kind_strategy(),
        lambda in 1.0..20.0f64,
        gamma in -1.0..=1.0f64,
        tau in 0.01..0.25f64,
    ) {
        let d = Diffusivity::new(kind, lambda).unwrap();
        let w = signal.len();
        let values: Vec<f64> = (0..rows).flat_map(|_| signal.iter().copied()).collect();
        let mut u = Image::new(w, rows, values).unwrap();
        let mut s = signal.clone();
        // α = 0 and b = 0 give δ = 0 for any γ
        let p = StencilParams::new(0.0, gamma).unwrap();
        for _ in 0..5 {
            let cur = u.clone();
            let field = TensorField::from_fn(w, rows, |k, l| {
                let p = cur.get(k + 1, l) - cur.get(k, l);
                DiffusionTensor::new(d.eval(p * p), 0.0, 0.0)
            });
            u = explicit_step_2d(&u, &field, &p, tau, Backend::Stencil).unwrap();
            s = explicit_step_1d(&s, tau, 1.0, &d);
            for j in 0..rows {
                for (i, si) in s.iter().enumerate() {
                    prop_assert!((u.get(i, j) - si).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn transposition_commutes_with_filtering(
        img in image_strategy(12),
        p in params_strategy(),
        kind in kind_strategy(),
        sigma in 0.0..2.0f64,
        t in (0.0..=1.0f64, 0.0..=1.0f64, 0.0..PI),
        backend in prop::sample::select(vec![Backend::Stencil, Backend::ConvForm]),
    ) {
        let eed = TensorModel::Eed { sigma, diffusivity: Diffusivity::new(kind, 5.0).unwrap() };
        let tensor = DiffusionTensor::from_eigen(t.0, t.1, t.2);
        for (model, transposed) in [
            (eed, eed),
            (TensorModel::Constant(tensor), TensorModel::Constant(tensor.transpose_axes())),
        ] {
            let cfg = SchemeConfig { steps: 3, tau: TimeStep::AutoTheorem, params: p, model, backend };
            let (direct, _) = run_diffusion(&img, &cfg).unwrap();
            let (flipped, _) = run_diffusion(&img.transpose(), &SchemeConfig { model: transposed, ..cfg }).unwrap();
            prop_assert!(flipped.max_abs_diff(&direct.transpose()) <= 1e-10);
        }
    }

    #[test]
    fn eed_tensor_rotates_with_gradient(ux in -50.0..50.0f64, uy in -50.0..50.0f64, theta in 0.0..(2.0 * PI), kind in kind_strategy()) {
        let d = Diffusivity::new(kind, 4.0).unwrap();
        let (s, c) = theta.sin_cos();
        let t = eed_tensor(ux, uy, &d);
        let r = eed_tensor(c * ux - s * uy, s * ux + c * uy, &d);
        // R D Rᵀ
        let a = c * c * t.a - 2.0 * s * c * t.b + s * s * t.c;
        let b = s * c * (t.a - t.c) + (c * c - s * s) * t.b;
        let cc = s * s * t.a + 2.0 * s * c * t.b + c * c * t.c;
        prop_assert!((r.a - a).abs() < 1e-9 && (r.b - b).abs() < 1e-9 && (r.c - cc).abs() < 1e-9);
        // eigenvalues g(|∇u|²) and 1
        let g = d.eval(ux * ux + uy * uy);
        prop_assert!((t.trace() - (1.0 + g)).abs() < 1e-12);
        prop_assert!((t.a * t.c - t.b * t.b - g).abs() < 1e-9);
    }

    #[test]
    fn mean_is_conserved(img in image_strategy(12), p in params_strategy(), kind in kind_strategy(), backend in prop::sample::select(vec![Backend::Stencil, Backend::ConvForm])) {
        let cfg = SchemeConfig {
            steps: 20,
            tau: TimeStep::AutoGershgorin,
            params: p,
            model: TensorModel::Eed { sigma: 1.0, diffusivity: Diffusivity::new(kind, 3.0).unwrap() },
            backend,
        };
        let (_, trace) = run_diffusion(&img, &cfg).unwrap();
        for st in &trace.steps {
            prop_assert!((st.mean - trace.initial_mean).abs() <= 1e-12 * trace.initial_mean.abs().max(1.0));
        }
        prop_assert!(trace.norms_nonincreasing(1e-12));
    }
}
