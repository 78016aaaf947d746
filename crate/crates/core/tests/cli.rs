mod common;

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use deltastencil::pgm::{encode_pgm, parse_pgm, quantize};
use deltastencil::Image;
use proptest::prelude::*;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deltastencil"))
}

fn write_test_image(dir: &Path) -> std::path::PathBuf {
    let img = common::noisy_step_edge(99);
    let path = dir.join("input.pgm");
    std::fs::write(&path, encode_pgm(&img, 255).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_line(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "stderr: {text}");
    serde_json::from_str(text.trim()).unwrap()
}

#[test]
fn defaults_filter_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path());
    let output = dir.path().join("out.pgm");
    let diag = dir.path().join("diag.json");
    let out = run(&[
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--diagnostics",
        s(&diag),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let img = parse_pgm(&std::fs::read(&output).unwrap()).unwrap();
    assert_eq!((img.width(), img.height()), (64, 64));

    let v: Value = serde_json::from_str(&std::fs::read_to_string(&diag).unwrap()).unwrap();
    let cfg = &v["config"];
    assert_eq!(cfg["model"], "eed");
    assert_eq!(cfg["sigma"], 1.0);
    assert_eq!(cfg["lambda"], 3.0);
    assert_eq!(cfg["diffusivity"], "charbonnier");
    assert_eq!(cfg["alpha"], 0.4);
    assert_eq!(cfg["gamma"], 1.0);
    assert_eq!(cfg["steps"], 10);
    assert_eq!(cfg["tau"], "auto-theorem");
    assert_eq!(cfg["backend"], "stencil");
    assert!(cfg["threads"].as_u64().unwrap() >= 1);
    assert!(v["bounds"]["theorem"].as_f64().unwrap() > 0.0);
    assert!(v["bounds"]["gershgorin"].as_f64().unwrap() > 0.0);
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 10);
    let mut prev = v["initial"]["norm"].as_f64().unwrap();
    for st in steps {
        let norm = st["norm"].as_f64().unwrap();
        assert!(norm <= prev * (1.0 + 1e-12));
        prev = norm;
        assert!(st["tau"].as_f64().unwrap() > 0.0);
        assert!(st["mean"].as_f64().unwrap().is_finite());
        assert!(st["ms"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn backends_and_repeats_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path());
    let mut outputs = Vec::new();
    for (k, backend) in ["stencil", "convform", "stencil"].iter().enumerate() {
        let output = dir.path().join(format!("out{k}.pgm"));
        let out = run(&[
            "--input",
            s(&input),
            "--output",
            s(&output),
            "--backend",
            backend,
        ]);
        assert!(out.status.success());
        outputs.push(std::fs::read(&output).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path());
    let a = dir.path().join("a.pgm");
    let b = dir.path().join("b.pgm");
    assert!(
        run(&["--input", s(&input), "--output", s(&a), "--threads", "1"])
            .status
            .success()
    );
    assert!(
        run(&["--input", s(&input), "--output", s(&b), "--threads", "3"])
            .status
            .success()
    );
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn out_of_range_flags_are_rejected() {
    for (flag, value) in [
        ("--alpha", "0.7"),
        ("--gamma", "1.5"),
        ("--gamma", "-2"),
        ("--threads", "0"),
        ("--steps", "0"),
        ("--lambda", "0"),
    ] {
        let out = run(&["--input", "x.pgm", "--output", "y.pgm", flag, value]);
        assert!(!out.status.success());
        let line = error_line(&out);
        assert_eq!(line["flag"], flag, "{line}");
        assert_eq!(line["error"], "invalid_argument");
    }
}

#[test]
fn indefinite_tensor_names_flag() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path());
    let out = run(&[
        "--input",
        s(&input),
        "--output",
        "unused.pgm",
        "--model",
        "constant",
        "--a",
        "1",
        "--b",
        "-3",
        "--c",
        "1",
    ]);
    assert!(!out.status.success());
    assert_eq!(error_line(&out)["flag"], "--a");
}

#[test]
fn input_errors_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[u8], &str); 3] = [
        (
            "p6.ppm",
            b"P6\n1 1\n255\n\x00\x00\x00",
            "unsupported_format",
        ),
        ("short.pgm", b"P5\n4 4\n255\n\x01\x02", "format"),
        ("bad.pgm", b"P5\nfour 4\n255\n", "format"),
    ];
    for (name, bytes, kind) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, bytes).unwrap();
        let out = run(&[
            "--input",
            s(&path),
            "--output",
            s(&dir.path().join("o.pgm")),
        ]);
        assert!(!out.status.success());
        let line = error_line(&out);
        assert_eq!(line["error"], kind, "{line}");
        assert_eq!(line["flag"], "--input");
    }
    let missing = run(&[
        "--input",
        s(&dir.path().join("nope.pgm")),
        "--output",
        "o.pgm",
    ]);
    assert_eq!(error_line(&missing)["error"], "io");
}

#[test]
fn oversized_fixed_tau_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path());
    let output = dir.path().join("o.pgm");
    let out = run(&[
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--model",
        "homogeneous",
        "--alpha",
        "0",
        "--tau",
        "0.3",
        "--steps",
        "2",
    ]);
    assert!(out.status.success());
    let line = error_line(&out);
    assert_eq!(line["warning"], "tau_exceeds_bound");
    assert_eq!(line["flag"], "--tau");

    let quiet = run(&[
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--model",
        "homogeneous",
        "--alpha",
        "0",
        "--tau",
        "0.2",
        "--steps",
        "2",
    ]);
    assert!(quiet.status.success());
    assert!(quiet.stderr.is_empty());
}

#[test]
fn help_documents_every_flag() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in [
        "--input",
        "--output",
        "--model",
        "--sigma",
        "--lambda",
        "--diffusivity",
        "--a",
        "--b",
        "--c",
        "--alpha",
        "--gamma",
        "--steps",
        "--tau",
        "--backend",
        "--threads",
        "--diagnostics",
        "--benchmark",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn small_benchmark_runs_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("bench.json");
    let start = Instant::now();
    let out = run(&[
        "--benchmark",
        "64",
        "--threads",
        "2",
        "--diagnostics",
        s(&report),
    ]);
    let elapsed = start.elapsed();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        v,
        serde_json::from_str::<Value>(&std::fs::read_to_string(report).unwrap()).unwrap()
    );
    assert_eq!(v["size"], 64);
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for c in cells {
        assert_eq!(c["runs_ms"].as_array().unwrap().len(), 5);
        assert!(c["median_ms"].as_f64().unwrap() >= 0.0);
    }
    assert!(v["backend_max_abs_diff"].as_f64().unwrap() < 1e-10);
}

proptest! {
    #[test]
    fn pgm_roundtrip(w in 1usize..12, h in 1usize..12, maxval in prop::sample::select(vec![1u32, 255, 256, 1000, 65535]), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let hi = maxval as f64;
        let values: Vec<f64> = (0..w * h).map(|_| rng.random_range(-0.2 * hi - 1.0..1.2 * hi + 1.0)).collect();
        let img = Image::new(w, h, values.clone()).unwrap();
        let back = parse_pgm(&encode_pgm(&img, maxval).unwrap()).unwrap();
        for (b, v) in back.values().iter().zip(&values) {
            prop_assert_eq!(*b, quantize(*v, maxval) as f64);
        }
        // integer-valued images are exact
        prop_assert_eq!(parse_pgm(&encode_pgm(&back, maxval).unwrap()).unwrap(), back);
    }
}
