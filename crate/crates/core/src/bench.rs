//! Thread-scaling and backend-parity benchmark on a synthetic image.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Image;
use crate::schemes::{run_diffusion, Backend, SchemeConfig};

pub const BENCH_SEED: u64 = 42;
pub const BENCH_REPEATS: usize = 5;
/// Thread-scaling ratio below which a warning is recorded on machines with at least 4 cores.
pub const SPEEDUP_WARN_THRESHOLD: f64 = 1.5;

/// Piecewise-constant discs and bars with uniform noise, grey levels in `[0, 255]`.
pub fn synthetic_image(size: usize) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(BENCH_SEED);
    let s = size as f64;
    let mut values = Vec::with_capacity(size * size);
    for j in 0..size {
        for i in 0..size {
            let (x, y) = (i as f64 / s, j as f64 / s);
            let disc = (x - 0.35).powi(2) + (y - 0.4).powi(2) < 0.06;
            let bar = ((x + y) * 6.0).floor() as i64 % 2 == 0;
            let base = match (disc, bar) {
                (true, _) => 200.0,
                (false, true) => 120.0,
                (false, false) => 50.0,
            };
            let noise: f64 = rng.random_range(-20.0..20.0);
            values.push((base + noise).clamp(0.0, 255.0));
        }
    }
    Image::new(size, size, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub backend: Backend,
    pub threads: usize,
    pub median_ms: f64,
    pub runs_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub size: usize,
    pub steps: usize,
    pub repeats: usize,
    pub available_threads: usize,
    pub cells: Vec<BenchCell>,
    /// Single-thread median over max-thread median, per backend.
    pub speedup: Vec<(Backend, f64)>,
    /// Max-abs difference between the two backends' final images.
    pub backend_max_abs_diff: f64,
    pub warnings: Vec<String>,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))
}

pub fn available_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Times `repeats` runs of `cfg` for each backend and each thread count in
/// `{1, max_threads}`. The backend field of `cfg` is ignored.
pub fn benchmark(
    size: usize,
    cfg: &SchemeConfig,
    max_threads: usize,
    repeats: usize,
) -> Result<BenchReport> {
    let img = synthetic_image(size)?;
    let max_threads = max_threads.max(1);
    let mut thread_counts = vec![1, max_threads];
    thread_counts.dedup();
    let repeats = repeats.max(1);

    let mut cells = Vec::new();
    let mut finals: Vec<Image> = Vec::new();
    for backend in [Backend::Stencil, Backend::ConvForm] {
        let run_cfg = SchemeConfig { backend, ..*cfg };
        for &threads in &thread_counts {
            let pool = pool(threads)?;
            let mut runs = Vec::with_capacity(repeats);
            for r in 0..repeats {
                let start = Instant::now();
                let (out, _) = pool.install(|| run_diffusion(&img, &run_cfg))?;
                runs.push(start.elapsed().as_secs_f64() * 1e3);
                if r == 0 && threads == thread_counts[0] {
                    finals.push(out);
                }
            }
            cells.push(BenchCell {
                backend,
                threads,
                median_ms: median(&runs),
                runs_ms: runs,
            });
        }
    }

    let speedup: Vec<(Backend, f64)> = [Backend::Stencil, Backend::ConvForm]
        .into_iter()
        .map(|b| {
            let t = |n: usize| {
                cells
                    .iter()
                    .find(|c| c.backend == b && c.threads == n)
                    .map(|c| c.median_ms)
                    .expect("cell populated")
            };
            (b, t(1) / t(max_threads))
        })
        .collect();

    let mut warnings = Vec::new();
    let cores = available_threads();
    if cores < 4 {
        warnings.push(format!(
            "only {cores} hardware thread(s) available; thread-scaling check skipped"
        ));
    } else {
        for (b, s) in &speedup {
            if *s <= SPEEDUP_WARN_THRESHOLD {
                warnings.push(format!(
                    "{b}: speedup {s:.2} with {max_threads} threads is below {SPEEDUP_WARN_THRESHOLD}"
                ));
            }
        }
    }

    Ok(BenchReport {
        size,
        steps: cfg.steps,
        repeats,
        available_threads: cores,
        cells,
        speedup,
        backend_max_abs_diff: finals[0].max_abs_diff(&finals[1]),
        warnings,
    })
}
