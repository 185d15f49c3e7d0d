//! Acceptance criteria, each checked at its stated tolerance.
//!
//! The `acceptance` test target prints one pass/fail line per criterion:
//! `cargo test -p sheetlab-validation --test acceptance`. Criterion numbers
//! given after `--` restrict the run, e.g. `-- 1 9`.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use sheetlab_cli::commands::Job;
use sheetlab_cli::{execute, replay};
use sheetlab_core::decay::{decay_fit, envelope_level_sweep, Regime};
use sheetlab_core::exponents::{hambrook_laba_q, necessary_q_bm, report};
use sheetlab_core::fourier::{transform_1d, transform_riemann_oracle, transform_sheet, Frequency};
use sheetlab_core::knapp::{dyadic_deltas, knapp_scaling_fit};
use sheetlab_core::paths::{gen_path, make_sheet, sheet_seeds, AdditiveSheet};
use sheetlab_core::rng::{counter_key, mix64};
use sheetlab_core::spectrum::curve::{sheet_replicates, SeededSource};
use sheetlab_core::spectrum::energy::{dyadic_radii, RadialPowerTransform, UnitTransform};
use sheetlab_core::spectrum::threshold::s_grid;
use sheetlab_core::spectrum::{
    frostman_probe, spectrum_curve, theory_spectrum, threshold_fit, truncated_energy, EvaluatedSamples,
    LogUniformSampler, SpectrumConfig, SpectrumCurve,
};
use sheetlab_core::sum::ComplexNeumaier;
use sheetlab_core::table::Rational;

/// Uniform draw in `[lo, hi]` addressed by `(seed, index)`.
fn uniform(seed: u64, index: u64, lo: f64, hi: f64) -> f64 {
    let u = (counter_key(seed, 0x6163, index) >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

type Outcome = Result<Verdict, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn criterion_1() -> Outcome {
    let mut bad = Vec::new();
    let expect_sufficient = [(1, Rational::from_integer(4)), (2, Rational::from_integer(3)), (3, Rational::new(26, 9))];
    for (k, q) in expect_sufficient {
        let r = report(k).map_err(err)?;
        if r.sufficient_q != q {
            bad.push(format!("sufficient q(k={k}) = {}", r.sufficient_q));
        }
    }
    for k in 1..=8i64 {
        let r = report(k).map_err(err)?;
        if r.necessary_q != Rational::from_integer(2) + Rational::new(1, k) || necessary_q_bm(k).map_err(err)? != r.necessary_q {
            bad.push(format!("necessary q(k={k}) = {}", r.necessary_q));
        }
        let hl = Rational::new(4 * (k + 1), 2 * k + 1);
        if r.hambrook_laba_q != hl || hambrook_laba_q(k).map_err(err)? != hl {
            bad.push(format!("Hambrook-Laba q(k={k}) = {}", r.hambrook_laba_q));
        }
        if k > 2 {
            let theta = Rational::new(2 * (k - 2), 2 * k - 1);
            if r.optimal_theta != theta {
                bad.push(format!("optimal theta(k={k}) = {}", r.optimal_theta));
            }
        }
    }
    let k3 = report(3).map_err(err)?;
    Ok(verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!(
                "k=3: {}, {}, {}, theta {}; k=1..8 exact",
                k3.sufficient_q, k3.necessary_q, k3.hambrook_laba_q, k3.optimal_theta
            )
        } else {
            bad.join("; ")
        },
    ))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_zero: f64 = 0.0;
    let mut worst_conj: f64 = 0.0;
    for seed in 1..=3u64 {
        let path = gen_path(seed, 12).map_err(err)?;
        worst_zero = worst_zero.max((transform_1d(&path, 0.0, 0.0).value - 1.0).norm());
        for i in 0..20u64 {
            let xi = uniform(seed, 2 * i, -256.0, 256.0);
            let y = uniform(seed, 2 * i + 1, -256.0, 256.0);
            let v = transform_1d(&path, xi, y).value;
            let oracle = transform_riemann_oracle(&path, xi, y, 1_000_000);
            worst = worst.max((v - oracle).norm());
            worst_conj = worst_conj.max((transform_1d(&path, -xi, -y).value - v.conj()).norm());
        }
    }
    Ok(verdict(
        worst <= 1e-6 && worst_zero <= 1e-12 && worst_conj <= 1e-12,
        format!("oracle error {worst:.2e} (tol 1e-6), |mu(0)-1| {worst_zero:.1e}, conjugate {worst_conj:.1e} (tol 1e-12)"),
    ))
}

/// Midpoint rule on an `n × n` grid over `[0, 1]^2`, summing every cell.
fn brute_force_2d(sheet: &AdditiveSheet, f: &Frequency, n: usize) -> Complex64 {
    let t: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let w1: Vec<f64> = t.iter().map(|&s| sheet.path(0).value_at(s)).collect();
    let w2: Vec<f64> = t.iter().map(|&s| sheet.path(1).value_at(s)).collect();
    let mut acc = ComplexNeumaier::default();
    for i in 0..n {
        for j in 0..n {
            let phase = -2.0 * PI * (f.xi[0] * t[i] + f.xi[1] * t[j] + f.y * (w1[i] + w2[j]));
            let (s, c) = phase.sin_cos();
            acc.add(Complex64::new(c, s));
        }
    }
    acc.total() / (n * n) as f64
}

fn criterion_3() -> Outcome {
    let sheet = make_sheet(&sheet_seeds(3, 0, 2), 8).map_err(err)?;
    let mut worst: f64 = 0.0;
    for i in 0..5u64 {
        let c = |j| uniform(33, 3 * i + j, -8.0, 8.0);
        let f = Frequency::new(vec![c(0), c(1)], c(2));
        let product = transform_sheet(&sheet, &f).map_err(err)?.value;
        worst = worst.max((product - brute_force_2d(&sheet, &f, 2048)).norm());
    }
    Ok(verdict(worst <= 1e-4, format!("level-8 sheet, 5 frequencies in [-8, 8]^3: worst error {worst:.2e} (tol 1e-4)")))
}

fn criterion_4() -> Outcome {
    let samples = LogUniformSampler::new(1, 1024.0).draw(10_000, 7);
    let mut parts = Vec::new();
    let mut pass = true;
    for base in 1..=3u64 {
        let seeds = sheet_seeds(base, 0, 1);
        let sweep = envelope_level_sweep(&seeds, &[10, 12, 14], &samples).map_err(err)?;
        let sheet = make_sheet(&seeds, 12).map_err(err)?;
        let hi = decay_fit(&sheet, Regime::HorizontalHighY, &samples).map_err(err)?;
        let lo = decay_fit(&sheet, Regime::HorizontalLowY, &samples).map_err(err)?;
        let ok = sweep.is_stable(2.0)
            && [&hi, &lo].iter().all(|f| f.sufficient && (-1.3..=-0.7).contains(&f.exponent));
        pass &= ok;
        parts.push(format!(
            "seed {base}: drift {:.2}, high-y {:.2}, low-y {:.2}",
            sweep.drift(),
            hi.exponent,
            lo.exponent
        ));
    }
    Ok(verdict(pass, parts.join("; ")))
}

fn spectrum_defaults(k: usize) -> Result<SpectrumCurve, String> {
    let sheets = (0..8u64).map(|i| make_sheet(&sheet_seeds(1, i, k), 12)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let reps = sheet_replicates(&sheets, 1);
    spectrum_curve(&reps, &[0.4, 0.6, 0.8, 1.0], &SpectrumConfig::default()).map_err(err)
}

fn criterion_5(k1: &SpectrumCurve) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut check = |curve: &SpectrumCurve, tol: f64| {
        let devs: Vec<String> = curve
            .theta_grid
            .iter()
            .zip(&curve.s_star)
            .map(|(t, s)| {
                let dev = s - theory_spectrum(curve.k, *t);
                pass &= dev.abs() <= tol;
                format!("{t}:{s:.2}")
            })
            .collect();
        parts.push(format!("k={} s* {} (tol {tol})", curve.k, devs.join(" ")));
    };
    check(k1, 0.2);
    for (k, tol) in [(2, 0.2), (3, 0.25)] {
        let curve = spectrum_defaults(k)?;
        check(&curve, tol);
    }
    let theta0_ok = (k1.theta0_estimate - 1.0).abs() <= 0.2;
    parts.push(format!("theta=0 k=1 {:.2}", k1.theta0_estimate));
    Ok(verdict(pass && theta0_ok, parts.join("; ")))
}

fn criterion_6(k1: &SpectrumCurve) -> Outcome {
    let ti = k1.theta_grid.iter().position(|&t| t == 1.0).ok_or("theta = 1 missing")?;
    let est = k1.energies[ti].iter().find(|e| (e.s - 1.6).abs() < 1e-9).ok_or("s = 1.6 not on the grid")?;
    let share = est.case_breakdown[2] + est.case_breakdown[3];
    Ok(verdict(share > 0.5, format!("k=1, theta=1, s=1.6: cases 3+4 hold {:.1}% of I(R_max)", 100.0 * share)))
}

fn frostman_mean(k: usize, level: u32, finest: i32, centres: usize) -> Result<(f64, Vec<f64>), String> {
    let radii: Vec<f64> = (3..=finest).map(|m| 2f64.powi(-m)).collect();
    let mut exps = Vec::new();
    for i in 0..8u64 {
        let sheet = make_sheet(&sheet_seeds(1, i, k), level).map_err(err)?;
        exps.push(frostman_probe(&sheet, &radii, centres, mix64(i + 1)).map_err(err)?.exponent);
    }
    Ok((mean(&exps), exps))
}

fn criterion_7() -> Outcome {
    let (e1, _) = frostman_mean(1, 20, 11, 400)?;
    let (e2, _) = frostman_mean(2, 13, 8, 100)?;
    Ok(verdict(
        (e1 - 1.5).abs() <= 0.15 && (e2 - 2.5).abs() <= 0.2,
        format!("k=1 exponent {e1:.3} (1.5 ± 0.15), k=2 exponent {e2:.3} (2.5 ± 0.2), 8 seeds each"),
    ))
}

fn criterion_8() -> Outcome {
    let deltas = dyadic_deltas(4, 9);
    let mut pass = true;
    let (mut lhs_dev, mut rhs_dev): (f64, f64) = (0.0, 0.0);
    let mut alphas = Vec::new();
    for i in 0..8u64 {
        let sheet = make_sheet(&sheet_seeds(1, i, 1), 12).map_err(err)?;
        let res = knapp_scaling_fit(&sheet, &[0.5], &deltas, 2.0, 4.0, 0.45, 16).map_err(err)?;
        let dl = res.lhs_exponent.value - res.predicted_lhs_exponent();
        let dr = res.rhs_exponent.value - 0.5;
        pass &= dl.abs() <= 0.1 && dr.abs() <= 0.05;
        lhs_dev = lhs_dev.max(dl.abs());
        rhs_dev = rhs_dev.max(dr.abs());
        alphas.push(res.alpha_eff.value);
    }
    Ok(verdict(
        pass,
        format!(
            "8 seeds: max |lhs - (3 - alpha_eff)/4| {lhs_dev:.3} (tol 0.1), max |rhs - 1/2| {rhs_dev:.3} (tol 0.05), mean alpha_eff {:.3}",
            mean(&alphas)
        ),
    ))
}

/// Surface area of the unit sphere in `R^d`.
fn sphere_area(d: usize) -> f64 {
    match d {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => unreachable!("only d = 2..=4 are exercised"),
    }
}

fn criterion_9() -> Outcome {
    let radial = RadialPowerTransform { k: 1, a: 1.5 };
    let reps = [SeededSource { source: &radial, sample_seed: 5 }];
    let curve = spectrum_curve(&reps, &[0.5, 1.0], &SpectrumConfig::default()).map_err(err)?;
    let radial_ok = curve.s_star_raw.iter().all(|s| (s - 1.5).abs() <= 0.1);

    // Direct fit on the same model at θ = 1 without the curve machinery.
    let radii = dyadic_radii(4, 14);
    let sampler = LogUniformSampler::new(1, 2f64.powi(14));
    let ev = EvaluatedSamples::evaluate(&radial, sampler.draw(100_000, 11));
    let ests = s_grid(1.5, 0.75, 0.05)
        .into_iter()
        .map(|s| truncated_energy(&ev, s, 1.0, &radii))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let fit = threshold_fit(&ests, 1.0).map_err(err)?;
    let fit_ok = (fit.s_star - 1.5).abs() <= 0.1;

    let mut worst_z: f64 = 0.0;
    for i in 0..5u64 {
        let k = 1 + (counter_key(9, 1, i) % 3) as usize;
        let theta = uniform(9, 3 * i, 0.3, 1.0);
        let s = uniform(9, 3 * i + 1, 0.2, 2.0) * theta;
        let r = 64.0;
        let sampler = LogUniformSampler::new(k, r).with_r_lo(2f64.powi(-20));
        let ev = EvaluatedSamples::evaluate(&UnitTransform { k }, sampler.draw(100_000, 100 + i));
        let est = truncated_energy(&ev, s, theta, &[r]).map_err(err)?;
        let a = s / theta;
        let exact = sphere_area(k + 1) * (r.powf(a) - 1.0) / a;
        worst_z = worst_z.max((est.largest() - exact).abs() / est.std_errors[0]);
    }
    Ok(verdict(
        radial_ok && fit_ok && worst_z <= 3.0,
        format!(
            "radial a=1.5: s* {:.3}/{:.3} via curve, {:.3} via direct fit (tol 0.1); annulus integrals worst |z| {worst_z:.2} (tol 3)",
            curve.s_star_raw[0], curve.s_star_raw[1], fit.s_star
        ),
    ))
}

fn criterion_10() -> Outcome {
    let root = tempfile::tempdir().map_err(err)?;
    let runs = root.path().join("runs");
    let jobs = [
        ("simulate", serde_json::json!({"k": 2, "level": 10})),
        ("transform", serde_json::json!({"level": 10, "count": 8})),
        ("decay", serde_json::json!({"level": 10, "samples": 2000, "radius": 512.0, "levels": [9, 10]})),
        ("spectrum", serde_json::json!({"level": 10, "seeds": 2, "samples": 5000, "radius_hi": 11, "theta": [0.5, 1.0]})),
        ("knapp", serde_json::json!({"level": 10, "delta_lo": 3, "delta_hi": 6})),
        ("exponents", serde_json::json!({"k": 5})),
        ("figures", serde_json::json!({})),
    ];
    let mut files = 0;
    for (name, flags) in jobs {
        let job = Job::build(name, None, flags).map_err(err)?;
        let first = execute(&job, &runs, None).map_err(err)?;
        let again = replay(&first.dir.join("manifest.json"), Some(&root.path().join("replays")))
            .map_err(|e| format!("{name}: {e}"))?;
        files += again.manifest.outputs.len();
    }
    Ok(verdict(true, format!("7 commands replayed, {files} output files byte-identical")))
}

pub const CRITERIA: u32 = 10;

#[derive(Debug, Clone)]
pub struct Report {
    pub criterion: u32,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} criterion {}: {} [{:.1} s]", self.criterion, self.detail, self.seconds)
    }
}

/// Runs the selected criteria (all when `selected` is empty) in order,
/// handing each report to `sink` as soon as it is known.
pub fn run(selected: &[u32], mut sink: impl FnMut(&Report)) -> Vec<Report> {
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);

    // Criteria 5 and 6 share the k = 1 curve at default settings.
    let mut k1_curve: Option<Result<SpectrumCurve, String>> = None;
    let mut k1 = || k1_curve.get_or_insert_with(|| spectrum_defaults(1)).clone();

    let mut reports = Vec::new();
    for n in (1..=CRITERIA).filter(|&n| wanted(n)) {
        let start = Instant::now();
        let outcome = match n {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => k1().and_then(|c| criterion_5(&c)),
            6 => k1().and_then(|c| criterion_6(&c)),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let report = Report { criterion: n, pass, detail, seconds: start.elapsed().as_secs_f64() };
        sink(&report);
        reports.push(report);
    }
    reports
}
