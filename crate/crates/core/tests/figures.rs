//! Figures regenerate byte-identically from their CSV tables.

use std::path::{Path, PathBuf};

use sheetlab_core::exponents::exponent_table;
use sheetlab_core::figures::{build_chart, render_svg, FigureId, FigureSpec};
use sheetlab_core::spectrum::curve::theory_table;

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against the checked-in file; `SHEETLAB_BLESS=1` rewrites it.
fn check_golden(name: &str, svg: &str) {
    let path = golden(name);
    if std::env::var_os("SHEETLAB_BLESS").is_some() {
        std::fs::write(&path, svg).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == svg, "{name} drifted from its golden copy");
}

#[test]
fn spectrum_curves_golden() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("spectrum_theory.csv");
    theory_table(6, 20).unwrap().write_csv(&csv).unwrap();
    let spec = FigureSpec::new(FigureId::SpectrumCurves, &csv);

    let chart = build_chart(&spec).unwrap();
    let k2 = chart.series.iter().find(|s| s.label == "k=2 theory").expect("k = 2 series");
    let at = |theta: f64| k2.points.iter().find(|p| (p.0 - theta).abs() < 1e-12).unwrap().1;
    assert_eq!(at(0.0), 2.0);
    assert_eq!(at(1.0), 2.5);
    // Phase transitions exist only for k > 2.
    assert_eq!(chart.markers.len(), 4);

    let svg = render_svg(&spec).unwrap();
    assert_eq!(svg, render_svg(&spec).unwrap());
    check_golden("spectrum_curves.svg", &svg);
}

#[test]
fn restriction_bounds_golden() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("exponents.csv");
    exponent_table(6).unwrap().write_csv(&csv).unwrap();
    let spec = FigureSpec::new(FigureId::RestrictionBounds, &csv);
    let chart = build_chart(&spec).unwrap();
    assert_eq!(chart.series.len(), 4);
    let labels: Vec<&str> = chart.series.iter().map(|s| s.label.as_str()).collect();
    for want in ["Stein", "sufficient", "necessary", "Hambrook"] {
        assert!(labels.iter().any(|l| l.contains(want)), "{want} in {labels:?}");
    }
    check_golden("restriction_bounds.svg", &render_svg(&spec).unwrap());
}

#[test]
fn missing_table_is_named() {
    let spec = FigureSpec::new(FigureId::KnappScaling, "/nonexistent/knapp_scaling.csv");
    let err = render_svg(&spec).unwrap_err().to_string();
    assert!(err.contains("knapp_scaling.csv"), "{err}");
}
