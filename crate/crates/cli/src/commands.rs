//! Command bodies. Each one writes its tables into the run directory and
//! returns the seeds it consumed plus a few summary lines for stdout.

use std::path::{Path, PathBuf};

use serde_json::Value;
use sheetlab_core::decay::{decay_fit, envelope_level_sweep, envelope_violation_report, Regime};
use sheetlab_core::exponents::{exponent_table, report};
use sheetlab_core::figures::{emit_svg, FigureId, FigureSpec};
use sheetlab_core::fourier::{sweep_table, Frequency};
use sheetlab_core::knapp::{dyadic_deltas, knapp_scaling_fit};
use sheetlab_core::paths::{holder_probe, make_sheet, sheet_seeds, AdditiveSheet};
use sheetlab_core::rng::counter_key;
use sheetlab_core::spectrum::curve::{sheet_replicates, theory_table};
use sheetlab_core::spectrum::{frostman_probe, spectrum_curve, LogUniformSampler, SpectrumConfig};
use sheetlab_core::table::{Cell, Column, Rational, Table};

use crate::config::*;
use crate::manifest::RunDir;
use crate::CliError;

/// A fully configured command, ready to execute or to be recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Simulate(SimulateConfig),
    Transform(TransformConfig),
    Decay(DecayConfig),
    Spectrum(SpectrumRunConfig),
    Knapp(KnappConfig),
    Exponents(ExponentsConfig),
    Figures(FiguresConfig),
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub seeds: Vec<u64>,
    pub summary: Vec<String>,
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Simulate(_) => "simulate",
            Job::Transform(_) => "transform",
            Job::Decay(_) => "decay",
            Job::Spectrum(_) => "spectrum",
            Job::Knapp(_) => "knapp",
            Job::Exponents(_) => "exponents",
            Job::Figures(_) => "figures",
        }
    }

    pub fn config_value(&self) -> Value {
        let v = match self {
            Job::Simulate(c) => serde_json::to_value(c),
            Job::Transform(c) => serde_json::to_value(c),
            Job::Decay(c) => serde_json::to_value(c),
            Job::Spectrum(c) => serde_json::to_value(c),
            Job::Knapp(c) => serde_json::to_value(c),
            Job::Exponents(c) => serde_json::to_value(c),
            Job::Figures(c) => serde_json::to_value(c),
        };
        v.expect("config structs serialize")
    }

    /// Rebuilds a job from a command name and a merged configuration, with
    /// `file` and `flags` layered over the defaults.
    pub fn build(command: &str, file: Option<Value>, flags: Value) -> Result<Job, CliError> {
        Ok(match command {
            "simulate" => Job::Simulate(merge(file, flags)?),
            "transform" => Job::Transform(merge(file, flags)?),
            "decay" => Job::Decay(merge(file, flags)?),
            "spectrum" => Job::Spectrum(merge(file, flags)?),
            "knapp" => Job::Knapp(merge(file, flags)?),
            "exponents" => Job::Exponents(merge(file, flags)?),
            "figures" => Job::Figures(merge(file, flags)?),
            other => return Err(CliError::Config(format!("unknown command {other:?}"))),
        })
    }

    pub fn execute(&self, dir: &mut RunDir) -> Result<Outcome, CliError> {
        match self {
            Job::Simulate(c) => simulate(c, dir),
            Job::Transform(c) => transform(c, dir),
            Job::Decay(c) => decay(c, dir),
            Job::Spectrum(c) => spectrum(c, dir),
            Job::Knapp(c) => knapp(c, dir),
            Job::Exponents(c) => exponents(c, dir),
            Job::Figures(c) => figures(c, dir),
        }
    }
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Core(sheetlab_core::Error::Validation(msg.into()))
}

fn sheet(k: usize, seed: u64, replicate: u64, level: u32) -> Result<AdditiveSheet, CliError> {
    if k == 0 {
        return Err(validation("k must be at least 1"));
    }
    Ok(make_sheet(&sheet_seeds(seed, replicate, k), level)?)
}

fn write(dir: &mut RunDir, name: &str, table: &Table) -> Result<(), CliError> {
    table.write_csv(&dir.output(name))?;
    Ok(())
}

fn simulate(c: &SimulateConfig, dir: &mut RunDir) -> Result<Outcome, CliError> {
    let sheet = sheet(c.k, c.seed, c.replicate, c.level)?;
    let mut out = Outcome { seeds: sheet.seeds(), ..Outcome::default() };
    for (j, path) in sheet.paths().iter().enumerate() {
        write(dir, &format!("path_{}.csv", j + 1), &path.to_table())?;
        let probe = holder_probe(path, c.alpha);
        out.summary.push(format!(
            "path {}: seed {}, level {}, Hölder constant at alpha {} = {:.6}",
            j + 1,
            path.seed(),
            path.level(),
            c.alpha,
            probe.constant
        ));
    }
    Ok(out)
}

/// Uniform draw in `[-r, r]` addressed by `(seed, index)`.
fn uniform_at(seed: u64, index: u64, r: f64) -> f64 {
    let u = (counter_key(seed, 0x7466, index) >> 11) as f64 / (1u64 << 53) as f64;
    r * (2.0 * u - 1.0)
}

fn transform(c: &TransformConfig, dir: &mut RunDir) -> Result<Outcome, CliError> {
    if !(c.radius > 0.0 && c.radius.is_finite()) {
        return Err(validation(format!("radius must be positive and finite, got {}", c.radius)));
    }
    let sheet = sheet(c.k, c.seed, 0, c.level)?;
    let d = c.k as u64 + 1;
    let freqs: Vec<Frequency> = (0..c.count as u64)
        .map(|i| {
            let coords: Vec<f64> = (0..d).map(|j| uniform_at(c.sample_seed, i * d + j, c.radius)).collect();
            Frequency::new(coords[..c.k].to_vec(), coords[c.k])
        })
        .collect();
    let table = sweep_table(&sheet, &freqs)?;
    write(dir, "transform.csv", &table)?;
    let mut seeds = sheet.seeds();
    seeds.push(c.sample_seed);
    Ok(Outcome { seeds, summary: vec![format!("{} frequencies evaluated on a level-{} sheet", freqs.len(), c.level)] })
}

fn decay(c: &DecayConfig, dir: &mut RunDir) -> Result<Outcome, CliError> {
    if !(c.radius > 1.0) {
        return Err(validation(format!("sampling radius must exceed 1, got {}", c.radius)));
    }
    let sheet = sheet(c.k, c.seed, 0, c.level)?;
    let samples = LogUniformSampler::new(c.k, c.radius).draw(c.samples, c.sample_seed);
    let report = envelope_violation_report(&sheet, &samples)?;
    write(dir, "decay_samples.csv", &report.to_table())?;

    let mut summary = vec![format!("level {}: 99th-percentile envelope ratio {:.4}", c.level, report.constant())];
    if !c.levels.is_empty() {
        let sweep = envelope_level_sweep(&sheet.seeds(), &c.levels, &samples)?;
        let mut t = Table::new(vec![Column::integer("level"), Column::real("constant"), Column::real("max_ratio")]);
        for ((l, k), m) in sweep.levels.iter().zip(&sweep.constants).zip(&sweep.max_ratios) {
            t.push(vec![Cell::Integer(i64::from(*l)), (*k).into(), (*m).into()])?;
        }
        write(dir, "decay_levels.csv", &t)?;
        summary.push(format!("constant drift across levels {:?}: {:.4}", c.levels, sweep.drift()));
    }

    let mut fits =
        Table::new(vec![Column::text("regime"), Column::real("exponent"), Column::integer("samples"), Column::real("residual_rms")]);
    for regime in Regime::ALL {
        let fit = decay_fit(&sheet, regime, &samples)?;
        fits.push(vec![regime.tag().into(), fit.exponent.into(), Cell::Integer(fit.samples as i64), fit.residual_rms.into()])?;
        if fit.sufficient {
            summary.push(format!("{} decay exponent {:.4} from {} samples", regime.tag(), fit.exponent, fit.samples));
        }
    }
    write(dir, "decay_fits.csv", &fits)?;
    let mut seeds = sheet.seeds();
    seeds.push(c.sample_seed);
    Ok(Outcome { seeds, summary })
}

fn spectrum(c: &SpectrumRunConfig, dir: &mut RunDir) -> Result<Outcome, CliError> {
    if c.seeds == 0 {
        return Err(validation("need at least one seed"));
    }
    let sheets = (0..c.seeds as u64).map(|i| sheet(c.k, c.seed, i, c.level)).collect::<Result<Vec<_>, _>>()?;
    let replicates = sheet_replicates(&sheets, c.seed);
    let config = SpectrumConfig {
        samples: c.samples,
        radius_lo: c.radius_lo,
        radius_hi: c.radius_hi,
        s_step: c.s_step,
        s_half_width: c.s_half_width,
        r_lo: c.r_lo,
    };
    let curve = spectrum_curve(&replicates, &c.theta, &config)?;
    write(dir, "spectrum_curve.csv", &curve.to_table()?)?;
    write(dir, "spectrum_seeds.csv", &curve.seeds_table()?)?;
    write(dir, "spectrum_energy.csv", &curve.energy_table()?)?;
    write(dir, "spectrum_cases.csv", &curve.case_table()?)?;

    let mut seeds: Vec<u64> = sheets.iter().flat_map(AdditiveSheet::seeds).collect();
    seeds.extend(replicates.iter().map(|r| r.sample_seed));
    let mut summary = vec![format!("theta = 0: sup-decay estimate {:.4}", curve.theta0_estimate)];
    for (i, theta) in curve.theta_grid.iter().enumerate() {
        summary.push(format!(
            "theta = {theta}: s* = {:.4} (raw {:.4} ± {:.4}), theory {:.4}",
            curve.s_star[i], curve.s_star_raw[i], curve.s_err[i], curve.theory[i]
        ));
    }

    if c.frostman {
        let (level, finest, centres) = frostman_defaults(c.k);
        let level = c.frostman_level.unwrap_or(level);
        let finest = c.frostman_radius_hi.unwrap_or(finest);
        let centres = c.frostman_centres.unwrap_or(centres);
        let radii: Vec<f64> = (c.frostman_radius_lo..=finest).map(|m| 2f64.powi(-m)).collect();
        let mut t = Table::new(vec![
            Column::integer("replicate"),
            Column::real("radius"),
            Column::real("max_mass"),
            Column::real("mean_mass"),
            Column::real("exponent"),
        ]);
        let mut total = 0.0;
        for i in 0..c.seeds as u64 {
            let sheet = sheet(c.k, c.seed, i, level)?;
            let probe = frostman_probe(&sheet, &radii, centres, replicates[i as usize].sample_seed)?;
            for ((r, mx), mn) in probe.radii.iter().zip(&probe.max_mass).zip(&probe.mean_mass) {
                t.push(vec![Cell::Integer(i as i64), (*r).into(), (*mx).into(), (*mn).into(), probe.exponent.into()])?;
            }
            total += probe.exponent;
        }
        write(dir, "frostman.csv", &t)?;
        summary.push(format!("Frostman exponent (mean over {} seeds, level {level}): {:.4}", c.seeds, total / c.seeds as f64));
    }
    Ok(Outcome { seeds, summary })
}

fn knapp(c: &KnappConfig, dir: &mut RunDir) -> Result<Outcome, CliError> {
    let sheet = sheet(c.k, c.seed, 0, c.level)?;
    let center = c.center.clone().unwrap_or_else(|| vec![0.5; c.k]);
    if center.len() != c.k {
        return Err(validation(format!("centre has {} coordinates, k = {}", center.len(), c.k)));
    }
    let deltas = dyadic_deltas(c.delta_lo, c.delta_hi);
    let res = knapp_scaling_fit(&sheet, &center, &deltas, c.p, c.q, c.alpha, c.nodes)?;
    write(dir, "knapp_scaling.csv", &res.to_table()?)?;

    let mut t = Table::new(vec![Column::text("quantity"), Column::real("fitted"), Column::real("std_error"), Column::real("predicted")]);
    t.push(vec![
        "lhs_exponent".into(),
        res.lhs_exponent.value.into(),
        res.lhs_exponent.std_error.into(),
        res.predicted_lhs_exponent().into(),
    ])?;
    t.push(vec![
        "rhs_exponent".into(),
        res.rhs_exponent.value.into(),
        res.rhs_exponent.std_error.into(),
        res.predicted_rhs_exponent().into(),
    ])?;
    t.push(vec!["alpha_eff".into(), res.alpha_eff.value.into(), res.alpha_eff.std_error.into(), c.alpha.into()])?;
    t.push(vec![
        "ratio_exponent".into(),
        res.ratio_exponent.value.into(),
        res.ratio_exponent.std_error.into(),
        (res.predicted_lhs_exponent() - res.predicted_rhs_exponent()).into(),
    ])?;
    write(dir, "knapp_summary.csv", &t)?;
    let summary = vec![
        format!(
            "lhs exponent {:.4} (predicted {:.4} at alpha_eff {:.4})",
            res.lhs_exponent.value,
            res.predicted_lhs_exponent(),
            res.alpha_eff.value
        ),
        format!("rhs exponent {:.4} (predicted {:.4})", res.rhs_exponent.value, res.predicted_rhs_exponent()),
        format!("extension estimate (p, q) = ({}, {}) violated: {}", c.p, c.q, res.violated()),
    ];
    Ok(Outcome { seeds: sheet.seeds(), summary })
}

fn exponents(c: &ExponentsConfig, dir: &mut RunDir) -> Result<Outcome, CliError> {
    let rep = report(c.k)?;
    write(dir, "exponents.csv", &exponent_table(c.k_max.max(c.k))?)?;
    let q = |r: Rational| r.to_string();
    let summary = vec![
        format!("k = {}, d = {}", rep.k, rep.d),
        format!("sufficient:    extension holds for q > {}", q(rep.sufficient_q)),
        format!("necessary:     extension fails for q < {}", q(rep.necessary_q)),
        format!("Hambrook-Laba: extension fails for 2 <= q < {}", q(rep.hambrook_laba_q)),
        format!("Stein-Tomas:   extension holds for q > {}", q(rep.stein_tomas_q)),
        format!("optimal theta: {}", q(rep.optimal_theta)),
    ];
    Ok(Outcome { seeds: Vec::new(), summary })
}

/// CSV a figure is drawn from, looked up by file name in the input directory.
fn figure_table(id: FigureId) -> &'static [&'static str] {
    match id {
        FigureId::SpectrumCurves => &["spectrum_curve.csv", "spectrum_theory.csv"],
        FigureId::RestrictionBounds => &["exponents.csv"],
        FigureId::KnappScaling => &["knapp_scaling.csv"],
        FigureId::DecayScatter => &["decay_samples.csv"],
    }
}

fn find_input(from: Option<&Path>, id: FigureId) -> Option<PathBuf> {
    let from = from?;
    figure_table(id).iter().map(|n| from.join(n)).find(|p| p.is_file())
}

fn figures(c: &FiguresConfig, dir: &mut RunDir) -> Result<Outcome, CliError> {
    let requested: Vec<FigureId> = if c.figures.is_empty() {
        FigureId::ALL.to_vec()
    } else {
        c.figures
            .iter()
            .map(|n| FigureId::parse(n).ok_or_else(|| validation(format!("unknown figure {n:?}"))))
            .collect::<Result<_, _>>()?
    };
    let from = c.from.as_deref();
    if let Some(from) = from {
        if !from.is_dir() {
            return Err(validation(format!("input directory {} does not exist", from.display())));
        }
    }
    let mut summary = Vec::new();
    for id in requested {
        let table = match find_input(from, id) {
            Some(path) => {
                dir.record_input(&path)?;
                path
            }
            None => match id {
                FigureId::SpectrumCurves => {
                    let path = dir.output("spectrum_theory.csv");
                    theory_table(c.k_max, c.theta_steps)?.write_csv(&path)?;
                    path
                }
                FigureId::RestrictionBounds => {
                    let path = dir.output("exponents.csv");
                    exponent_table(c.k_max as i64)?.write_csv(&path)?;
                    path
                }
                _ if c.figures.is_empty() => continue,
                _ => {
                    let wanted = figure_table(id).join(" or ");
                    let place = from.map_or("no --from directory given".to_string(), |p| p.display().to_string());
                    return Err(validation(format!("figure {} needs table {wanted} ({place})", id.name())));
                }
            },
        };
        let name = format!("{}.svg", id.name());
        emit_svg(&FigureSpec::new(id, table), &dir.output(&name))?;
        summary.push(format!("rendered {name}"));
    }
    Ok(Outcome { seeds: Vec::new(), summary })
}
