//! Fourier transform of the surface measure on the piecewise-linear model.
//!
//! On a segment `[t_m, t_m + h]` the phase `ξ t + y W(t)` is affine with slope
//! `c = ξ + y b_m`, so each segment integral has the closed form
//! `h e^{-πi c h} sinc(π c h)` times the phase at the segment start. The
//! product of that phase with `e^{-πi c h}` is the phase at the segment
//! midpoint, which is what the evaluator uses.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::paths::{AdditiveSheet, BrownianPath};
use crate::sum::ComplexNeumaier;
use crate::table::{Cell, Column, Table};

/// Segment counts above this use compensated accumulation.
pub const COMPENSATION_THRESHOLD: usize = 1 << 12;

/// A frequency `(ξ_1, .., ξ_k, y)`; `y` pairs with the sheet height.
#[derive(Debug, Clone, PartialEq)]
pub struct Frequency {
    pub xi: Vec<f64>,
    pub y: f64,
}

impl Frequency {
    pub fn new(xi: Vec<f64>, y: f64) -> Self {
        Frequency { xi, y }
    }

    pub fn zero(k: usize) -> Self {
        Frequency { xi: vec![0.0; k], y: 0.0 }
    }

    pub fn k(&self) -> usize {
        self.xi.len()
    }

    /// Euclidean norm in `R^{k+1}`.
    pub fn norm(&self) -> f64 {
        (self.xi.iter().map(|x| x * x).sum::<f64>() + self.y * self.y).sqrt()
    }

    pub fn neg(&self) -> Self {
        Frequency { xi: self.xi.iter().map(|x| -x).collect(), y: -self.y }
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite() && self.xi.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformValue {
    pub value: Complex64,
    pub modulus: f64,
}

impl From<Complex64> for TransformValue {
    fn from(value: Complex64) -> Self {
        TransformValue { value, modulus: value.norm() }
    }
}

/// `sin(x)/x` with the removable singularity filled in.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `∫_0^h e^{-2πi c u} du`, in the cancellation-free form.
pub fn segment_integral(c: f64, h: f64) -> Complex64 {
    let a = PI * c * h;
    let (s, co) = a.sin_cos();
    Complex64::new(co, -s) * (h * sinc(a))
}

/// `e^{-2πi p}`, reduced modulo one first.
#[inline]
fn cis_turns(p: f64) -> Complex64 {
    let (s, c) = (-2.0 * PI * (p - p.round())).sin_cos();
    Complex64::new(c, s)
}

/// `(1 - e^{-iz}) / (iz)`, the normalised segment integral.
#[inline]
fn segment_factor(z: f64) -> Complex64 {
    if z.abs() < 1e-2 {
        // Taylor series; the first omitted term is below 1e-16.
        let z2 = z * z;
        let re = 1.0 - z2 / 6.0 * (1.0 - z2 / 20.0);
        let im = -z / 2.0 * (1.0 - z2 / 12.0 * (1.0 - z2 / 30.0));
        Complex64::new(re, im)
    } else {
        let (s, c) = z.sin_cos();
        Complex64::new(s / z, (c - 1.0) / z)
    }
}

/// Whole-interval sum, written in terms of node phases so that each node
/// costs one `sin_cos`.
fn accumulate_full(path: &BrownianPath, xi: f64, y: f64) -> Complex64 {
    let n = path.segments();
    let h = path.spacing();
    let w = path.values();
    let two_pi_h = 2.0 * PI * h;
    let mut e0 = cis_turns(y * w[0]);
    let mut term = |m: usize| -> Complex64 {
        let e1 = cis_turns(xi * ((m + 1) as f64 * h) + y * w[m + 1]);
        let z = two_pi_h * xi + 2.0 * PI * y * (w[m + 1] - w[m]);
        let out = if z.abs() < 1e-2 {
            e0 * segment_factor(z) * h
        } else {
            // (E_m - E_{m+1}) h / (iz)
            let d = e0 - e1;
            Complex64::new(d.im, -d.re) * (h / z)
        };
        e0 = e1;
        out
    };
    if n > COMPENSATION_THRESHOLD {
        let mut acc = ComplexNeumaier::default();
        for m in 0..n {
            acc.add(term(m));
        }
        acc.total()
    } else {
        (0..n).map(term).sum()
    }
}

/// Sum of exact segment integrals over `[a, b] ⊂ [0, 1]`.
fn accumulate(path: &BrownianPath, a: f64, b: f64, xi: f64, y: f64) -> Complex64 {
    let n = path.segments();
    let h = path.spacing();
    let w = path.values();
    let first = ((a * n as f64).floor() as usize).min(n - 1);
    let last = ((b * n as f64).ceil() as usize).clamp(first + 1, n);

    let term = |m: usize| -> Option<Complex64> {
        let t0 = m as f64 * h;
        let t1 = (m + 1) as f64 * h;
        let (u0, u1) = (t0.max(a), t1.min(b));
        if u1 <= u0 {
            return None;
        }
        let slope = (w[m + 1] - w[m]) / h;
        let len = u1 - u0;
        let (t_mid, w_mid) = if u0 == t0 && u1 == t1 {
            (0.5 * (t0 + t1), 0.5 * (w[m] + w[m + 1]))
        } else {
            let tm = 0.5 * (u0 + u1);
            (tm, w[m] + slope * (tm - t0))
        };
        let c = xi + y * slope;
        let phase = -2.0 * PI * (xi * t_mid + y * w_mid);
        let (s, co) = phase.sin_cos();
        Some(Complex64::new(co, s) * (len * sinc(PI * c * len)))
    };

    if last - first > COMPENSATION_THRESHOLD {
        let mut acc = ComplexNeumaier::default();
        for m in first..last {
            if let Some(z) = term(m) {
                acc.add(z);
            }
        }
        acc.total()
    } else {
        (first..last).filter_map(term).sum()
    }
}

/// `μ̂_j(ξ, y) = ∫_0^1 e^{-2πi(ξ t + y W(t))} dt`, exact for the interpolant.
pub fn transform_1d(path: &BrownianPath, xi: f64, y: f64) -> TransformValue {
    accumulate_full(path, xi, y).into()
}

/// The same integral restricted to `t ∈ [a, b]`.
pub fn windowed_transform_1d(path: &BrownianPath, a: f64, b: f64, xi: f64, y: f64) -> Result<Complex64> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::validation(format!("window [{a}, {b}] must satisfy 0 <= a < b <= 1")));
    }
    Ok(accumulate(path, a, b, xi, y))
}

/// Product of the one-dimensional factors at the shared vertical frequency.
pub fn transform_sheet(sheet: &AdditiveSheet, f: &Frequency) -> Result<TransformValue> {
    if f.k() != sheet.k() {
        return Err(Error::validation(format!(
            "frequency has {} horizontal coordinates, sheet has k = {}",
            f.k(),
            sheet.k()
        )));
    }
    let value = sheet
        .paths()
        .iter()
        .zip(&f.xi)
        .map(|(p, &xi)| transform_1d(p, xi, f.y).value)
        .product::<Complex64>();
    Ok(value.into())
}

/// Midpoint Riemann sum of the 1-D integrand with `n` subintervals.
pub fn transform_riemann_oracle(path: &BrownianPath, xi: f64, y: f64, n: usize) -> Complex64 {
    riemann_window(path, 0.0, 1.0, xi, y, n)
}

/// Midpoint Riemann sum over `[a, b]`.
pub fn riemann_window(path: &BrownianPath, a: f64, b: f64, xi: f64, y: f64, n: usize) -> Complex64 {
    assert!(n >= 1);
    let dt = (b - a) / n as f64;
    let mut acc = ComplexNeumaier::default();
    for i in 0..n {
        let t = a + (i as f64 + 0.5) * dt;
        let phase = -2.0 * PI * (xi * t + y * path.value_at(t));
        let (s, c) = phase.sin_cos();
        acc.add(Complex64::new(c, s));
    }
    acc.total() * dt
}

/// CSV of a frequency sweep: `xi_1..xi_k, y, Re, Im, modulus`.
pub fn sweep_table(sheet: &AdditiveSheet, freqs: &[Frequency]) -> Result<Table> {
    let mut cols: Vec<Column> = (1..=sheet.k()).map(|j| Column::real(&format!("xi_{j}"))).collect();
    cols.push(Column::real("y"));
    cols.push(Column::complex("Re", "Im"));
    cols.push(Column::real("modulus"));
    let mut table = Table::new(cols);
    for f in freqs {
        let v = transform_sheet(sheet, f)?;
        let mut row: Vec<Cell> = f.xi.iter().map(|&x| Cell::Real(x)).collect();
        row.push(Cell::Real(f.y));
        row.push(Cell::Complex(v.value));
        row.push(Cell::Real(v.modulus));
        table.push(row)?;
    }
    Ok(table)
}

pub fn write_sweep_csv(sheet: &AdditiveSheet, freqs: &[Frequency], path: &Path) -> Result<()> {
    sweep_table(sheet, freqs)?.write_csv(path)
}

/// Precomputed `|μ̂_j|` on a log-log lattice of `(|ξ|, |y|)`.
///
/// Two lattices are kept, one for `ξ y ≥ 0` and one for `ξ y < 0`, since the
/// modulus is only symmetric under joint sign flips. Lookups outside the
/// lattice fall back to direct evaluation.
#[derive(Debug, Clone)]
pub struct ModulusGrid {
    path: BrownianPath,
    log_lo: f64,
    log_hi: f64,
    nodes: usize,
    same_sign: Vec<f64>,
    opposite_sign: Vec<f64>,
}

impl ModulusGrid {
    /// Builds the lattice over `[lo, hi]` in both `|ξ|` and `|y|`, then checks
    /// it against direct evaluation at `checks` off-lattice points. Fails if
    /// the worst relative error exceeds `tolerance`.
    pub fn build(path: &BrownianPath, lo: f64, hi: f64, nodes: usize, checks: usize, tolerance: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && nodes >= 2) {
            return Err(Error::validation("modulus grid needs 0 < lo < hi and at least 2 nodes"));
        }
        let (log_lo, log_hi) = (lo.ln(), hi.ln());
        let at = |i: usize| (log_lo + (log_hi - log_lo) * i as f64 / (nodes - 1) as f64).exp();
        let mut same_sign = Vec::with_capacity(nodes * nodes);
        let mut opposite_sign = Vec::with_capacity(nodes * nodes);
        for i in 0..nodes {
            for j in 0..nodes {
                let (x, y) = (at(i), at(j));
                same_sign.push(transform_1d(path, x, y).modulus);
                opposite_sign.push(transform_1d(path, x, -y).modulus);
            }
        }
        let grid = ModulusGrid { path: path.clone(), log_lo, log_hi, nodes, same_sign, opposite_sign };
        let worst = grid.validate(checks);
        if worst > tolerance {
            return Err(Error::Numeric(format!(
                "modulus grid interpolation error {worst:.3e} exceeds tolerance {tolerance:.1e}"
            )));
        }
        Ok(grid)
    }

    fn validate(&self, checks: usize) -> f64 {
        let mut rng = crate::rng::stream(self.path.seed(), 0x6772_6964);
        let span = self.log_hi - self.log_lo;
        let mut worst = 0.0f64;
        for _ in 0..checks {
            let x = (self.log_lo + span * rand::Rng::random::<f64>(&mut rng)).exp();
            let y = (self.log_lo + span * rand::Rng::random::<f64>(&mut rng)).exp();
            let sign = if rand::Rng::random::<bool>(&mut rng) { 1.0 } else { -1.0 };
            let direct = transform_1d(&self.path, x, sign * y).modulus;
            let approx = self.modulus(x, sign * y);
            worst = worst.max((approx - direct).abs() / direct.max(f64::MIN_POSITIVE));
        }
        worst
    }

    /// Interpolated `|μ̂_j(ξ, y)|`.
    pub fn modulus(&self, xi: f64, y: f64) -> f64 {
        let (ax, ay) = (xi.abs(), y.abs());
        let step = (self.log_hi - self.log_lo) / (self.nodes - 1) as f64;
        let fx = (ax.ln() - self.log_lo) / step;
        let fy = (ay.ln() - self.log_lo) / step;
        let top = (self.nodes - 1) as f64;
        if !(0.0..=top).contains(&fx) || !(0.0..=top).contains(&fy) {
            return transform_1d(&self.path, xi, y).modulus;
        }
        let table = if xi * y >= 0.0 { &self.same_sign } else { &self.opposite_sign };
        let (i, j) = ((fx.floor() as usize).min(self.nodes - 2), (fy.floor() as usize).min(self.nodes - 2));
        let (u, v) = (fx - i as f64, fy - j as f64);
        let g = |a: usize, b: usize| table[a * self.nodes + b];
        (1.0 - u) * (1.0 - v) * g(i, j) + u * (1.0 - v) * g(i + 1, j) + (1.0 - u) * v * g(i, j + 1) + u * v * g(i + 1, j + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{gen_path, make_sheet};

    fn midpoint_segment(c: f64, h: f64, n: usize) -> Complex64 {
        let du = h / n as f64;
        let mut acc = ComplexNeumaier::default();
        for i in 0..n {
            let u = (i as f64 + 0.5) * du;
            let p = -2.0 * PI * c * u;
            acc.add(Complex64::new(p.cos(), p.sin()));
        }
        acc.total() * du
    }

    #[test]
    fn segment_integral_basics() {
        assert_eq!(segment_integral(0.0, 0.3), Complex64::new(0.3, 0.0));
        assert!(segment_integral(4.0, 0.25).norm() < 1e-16);
        let exact = segment_integral(0.3, 0.25);
        let oracle = midpoint_segment(0.3, 0.25, 1_000_000);
        assert!((exact - oracle).norm() / exact.norm() < 1e-9);
    }

    #[test]
    fn segment_integral_small_c_has_no_cancellation() {
        // (1 - e^{-2πich}) / (2πic) loses all digits here; the sinc form does not.
        let z = segment_integral(1e-12, 1.0);
        assert!((z.re - 1.0).abs() < 1e-15);
        assert!((z.im + PI * 1e-12).abs() < 1e-25);
    }

    #[test]
    fn normalization_and_lebesgue_limit() {
        let p = gen_path(4, 10).unwrap();
        let z = transform_1d(&p, 0.0, 0.0).value;
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(transform_1d(&p, 1.0, 0.0).modulus < 1e-12);
        assert!(transform_1d(&p, 7.0, 0.0).modulus < 1e-12);
    }

    #[test]
    fn matches_riemann_oracle() {
        let p = gen_path(17, 12).unwrap();
        let exact = transform_1d(&p, 37.5, 12.25).value;
        let oracle = transform_riemann_oracle(&p, 37.5, 12.25, 1_000_000);
        assert!((exact - oracle).norm() < 1e-6, "diff {}", (exact - oracle).norm());
    }

    #[test]
    fn oracle_converges_at_second_order() {
        // 10^4 and 2*10^4 are both multiples of 16, so on a level-4 path every
        // Riemann cell sits inside one linear piece and the error is pure O(N^-2).
        let p = gen_path(23, 4).unwrap();
        let exact = transform_1d(&p, 5.0, 3.0).value;
        let e1 = (transform_riemann_oracle(&p, 5.0, 3.0, 10_000) - exact).norm();
        let e2 = (transform_riemann_oracle(&p, 5.0, 3.0, 20_000) - exact).norm();
        let ratio = e1 / e2;
        assert!((3.0..5.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn oracle_trivial_values() {
        let p = gen_path(1, 8).unwrap();
        for n in [1, 7, 100] {
            assert!((transform_riemann_oracle(&p, 0.0, 0.0, n) - 1.0).norm() < 1e-12);
        }
        assert!(transform_riemann_oracle(&p, 1.0, 0.0, 1_000_000).norm() < 1e-6);
    }

    #[test]
    fn windowed_cases() {
        let p = gen_path(8, 12).unwrap();
        for (xi, y) in [(0.0, 0.0), (3.3, -2.0), (100.0, 40.0)] {
            // two algebraically equal forms of the same sum
            let d = windowed_transform_1d(&p, 0.0, 1.0, xi, y).unwrap() - transform_1d(&p, xi, y).value;
            assert!(d.norm() < 1e-12, "{d}");
        }
        let mass = windowed_transform_1d(&p, 0.2, 0.7001, 0.0, 0.0).unwrap();
        assert!((mass.re - 0.5001).abs() < 1e-14 && mass.im.abs() < 1e-15);
        let w = windowed_transform_1d(&p, 0.25, 0.75, 10.0, 4.0).unwrap();
        let o = riemann_window(&p, 0.25, 0.75, 10.0, 4.0, 1_000_000);
        assert!((w - o).norm() < 1e-6);
        assert!(windowed_transform_1d(&p, 0.5, 0.5, 1.0, 1.0).is_err());
        assert!(windowed_transform_1d(&p, 0.6, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn windowed_clips_partial_segments() {
        let p = gen_path(3, 6).unwrap();
        let (a, b) = (0.1234, 0.6789);
        let w = windowed_transform_1d(&p, a, b, 6.0, 2.5).unwrap();
        let o = riemann_window(&p, a, b, 6.0, 2.5, 400_000);
        assert!((w - o).norm() < 1e-8, "diff {}", (w - o).norm());
    }

    #[test]
    fn sheet_transform_properties() {
        let sheet = make_sheet(&[5, 6], 10).unwrap();
        let one = transform_sheet(&sheet, &Frequency::zero(2)).unwrap();
        assert!((one.value - 1.0).norm() < 1e-12);
        assert!(transform_sheet(&sheet, &Frequency::zero(3)).is_err());
        let mut rng = crate::rng::stream(1, 2);
        for _ in 0..1000 {
            use rand::Rng;
            let f = Frequency::new(vec![rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0)], rng.random_range(-60.0..60.0));
            let full = transform_sheet(&sheet, &f).unwrap();
            let m0 = transform_1d(sheet.path(0), f.xi[0], f.y).modulus;
            let m1 = transform_1d(sheet.path(1), f.xi[1], f.y).modulus;
            assert!(full.modulus <= m0.min(m1) * (1.0 + 1e-12) && m0.min(m1) <= 1.0 + 1e-12);
            let conj = transform_sheet(&sheet, &f.neg()).unwrap();
            assert!((conj.value - full.value.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn compensated_path_agrees() {
        let p = gen_path(2, 14).unwrap();
        let z = transform_1d(&p, 1234.5, 77.0).value;
        let o = transform_riemann_oracle(&p, 1234.5, 77.0, 1 << 22);
        assert!((z - o).norm() < 1e-6);
    }

    #[test]
    fn modulus_grid_validation() {
        let p = gen_path(12, 10).unwrap();
        // low frequencies: the modulus is smooth and the lattice is accurate
        let ok = ModulusGrid::build(&p, 1.0 / 16.0, 0.5, 64, 200, 0.01).unwrap();
        let direct = transform_1d(&p, 0.2, -0.3).modulus;
        assert!((ok.modulus(0.2, -0.3) - direct).abs() / direct < 0.01);
        // oscillatory range on a coarse lattice is rejected before use
        assert!(matches!(ModulusGrid::build(&p, 1.0, 1024.0, 16, 200, 0.01), Err(Error::Numeric(_))));
    }

    #[test]
    fn sweep_csv_columns() {
        let sheet = make_sheet(&[1, 2], 6).unwrap();
        let t = sweep_table(&sheet, &[Frequency::new(vec![1.0, 2.0], 3.0)]).unwrap();
        assert_eq!(t.header(), vec!["xi_1", "xi_2", "y", "Re", "Im", "modulus"]);
    }
}
