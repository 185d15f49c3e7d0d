//! Cross-module properties checked on random inputs.

use num_complex::Complex64;
use proptest::prelude::*;
use sheetlab_core::exponents::{dual, hambrook_laba_q, necessary_q_bm, report, Bound};
use sheetlab_core::fourier::{sweep_table, transform_1d, transform_sheet, Frequency};
use sheetlab_core::knapp::{build_cap, grid_mass};
use sheetlab_core::paths::{make_sheet, sheet_seeds};
use sheetlab_core::spectrum::energy::dyadic_radii;
use sheetlab_core::spectrum::{truncated_energy, EvaluatedSamples, LogUniformSampler};
use sheetlab_core::table::{parse_real, read_csv, Rational};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_is_a_bounded_hermitian_product(
        seed in 0u64..1000,
        k in 1usize..=3,
        xi in proptest::collection::vec(-300.0f64..300.0, 3),
        y in -300.0f64..300.0,
    ) {
        let sheet = make_sheet(&sheet_seeds(seed, 0, k), 8).unwrap();
        let f = Frequency::new(xi[..k].to_vec(), y);
        let v = transform_sheet(&sheet, &f).unwrap();
        prop_assert!(v.modulus <= 1.0 + 1e-12);
        let product = (0..k).fold(Complex64::new(1.0, 0.0), |acc, j| acc * transform_1d(sheet.path(j), f.xi[j], y).value);
        prop_assert!((v.value - product).norm() < 1e-12);
        let back = transform_sheet(&sheet, &f.neg()).unwrap();
        prop_assert!((back.value - v.value.conj()).norm() < 1e-12);
    }

    #[test]
    fn truncated_energy_is_nested(seed in 0u64..200, s in 0.3f64..3.0, theta in 0.05f64..1.0) {
        let sheet = make_sheet(&sheet_seeds(seed, 0, 1), 6).unwrap();
        let samples = LogUniformSampler::new(1, 256.0).draw(300, seed);
        let ev = EvaluatedSamples::evaluate(&sheet, samples);
        let est = truncated_energy(&ev, s, theta, &dyadic_radii(2, 8)).unwrap();
        for w in est.values.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        let shares: f64 = est.case_breakdown.iter().sum();
        prop_assert!(shares == 0.0 || (shares - 1.0).abs() < 1e-12);
    }

    #[test]
    fn knapp_cap_mass_matches_grid_count(seed in 0u64..200, c in 0.0f64..1.0, m in 3i32..7) {
        let sheet = make_sheet(&sheet_seeds(seed, 0, 1), 10).unwrap();
        let cap = build_cap(&sheet, &[c], 2f64.powi(-m)).unwrap();
        prop_assert!((cap.mass - 2.0 * cap.delta).abs() < 1e-15);
        prop_assert!((grid_mass(&sheet, &cap) - cap.mass).abs() < 1e-12);
    }
}

#[test]
fn thresholds_are_ordered() {
    for k in 1..=40i64 {
        let r = report(k).unwrap();
        assert!(r.hambrook_laba_q < r.necessary_q, "k={k}");
        assert!(r.necessary_q < r.sufficient_q, "k={k}");
        assert!(r.sufficient_q <= r.stein_tomas_q, "k={k}");
        assert_eq!(necessary_q_bm(k).unwrap(), r.necessary_q);
        assert_eq!(hambrook_laba_q(k).unwrap(), r.hambrook_laba_q);
        assert_eq!(dual(dual(r.sufficient_q)), r.sufficient_q);
        assert_eq!(Bound::Finite(r.necessary_q).dual().dual(), Bound::Finite(r.necessary_q));
    }
    assert_eq!(report(1).unwrap().sufficient_q, Rational::from_integer(4));
}

#[test]
fn sweep_csv_reads_back_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let sheet = make_sheet(&sheet_seeds(4, 0, 2), 9).unwrap();
    let freqs: Vec<Frequency> = (0..7).map(|i| Frequency::new(vec![i as f64 * 1.3, -2.0], 0.7 * i as f64)).collect();
    let table = sweep_table(&sheet, &freqs).unwrap();
    table.write_csv(&path).unwrap();
    let raw = read_csv(&path).unwrap();
    assert_eq!(raw.header, ["xi_1", "xi_2", "y", "Re", "Im", "modulus"]);
    for (f, rec) in freqs.iter().zip(&raw.records) {
        let v = transform_sheet(&sheet, f).unwrap();
        assert_eq!(parse_real(&rec[3]).unwrap().to_bits(), v.value.re.to_bits());
        assert_eq!(parse_real(&rec[4]).unwrap().to_bits(), v.value.im.to_bits());
    }
}
