//! Exact restriction/extension exponent thresholds for the Brownian graph.
//!
//! Everything with a closed form is computed in `Ratio<i64>`; only tabulated
//! spectrum curves fall back to floating-point minimisation.

use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::table::{format_rational, Column, Rational, Table};

fn r(n: i64, d: i64) -> Rational {
    Ratio::new(n, d)
}

fn int(n: i64) -> Rational {
    Ratio::from_integer(n)
}

/// A threshold that may be vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Finite(Rational),
    Infinite,
}

impl Bound {
    pub fn finite(self) -> Option<Rational> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Infinite => None,
        }
    }

    /// Hölder conjugate `q′ = q/(q − 1)`; `∞′ = 1`.
    pub fn dual(self) -> Bound {
        match self {
            Bound::Finite(q) if q == int(1) => Bound::Infinite,
            Bound::Finite(q) => Bound::Finite(q / (q - int(1))),
            Bound::Infinite => Bound::Finite(int(1)),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Bound::Finite(v) => *v.numer() as f64 / *v.denom() as f64,
            Bound::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(v) => f.write_str(&format_rational(v)),
            Bound::Infinite => f.write_str("inf"),
        }
    }
}

/// Hölder conjugate of a finite exponent `q > 1`.
pub fn dual(q: Rational) -> Rational {
    q / (q - int(1))
}

/// `2 + 4(d − dim_Fr)/dim_F`; infinite when `dim_F = 0`.
pub fn stein_tomas_q(dim_f: Rational, dim_fr: Rational, d: i64) -> Result<Bound> {
    if dim_f < int(0) {
        return Err(Error::validation("Fourier dimension must be non-negative"));
    }
    if dim_fr < int(0) || dim_fr > int(d) {
        return Err(Error::validation(format!("Frostman dimension {dim_fr} outside [0, {d}]")));
    }
    if dim_f == int(0) {
        return Ok(Bound::Infinite);
    }
    Ok(Bound::Finite(int(2) + int(4) * (int(d) - dim_fr) / dim_f))
}

fn check_k(k: i64) -> Result<()> {
    if k < 1 {
        return Err(Error::validation(format!("k = {k} must be at least 1")));
    }
    Ok(())
}

/// `dim_F^θ = min{k + θ/2, 2 + kθ}` as its two affine pieces `a + bθ`.
fn brownian_branches(k: i64) -> [(Rational, Rational); 2] {
    [(int(k), r(1, 2)), (int(2), int(k))]
}

pub fn brownian_spectrum(k: i64, theta: Rational) -> Rational {
    brownian_branches(k).iter().map(|&(a, b)| a + b * theta).min().expect("two branches")
}

pub fn brownian_fourier_dim(k: i64) -> Rational {
    brownian_spectrum(k, int(0))
}

pub fn brownian_frostman_dim(k: i64) -> Rational {
    int(k) + r(1, 2)
}

/// `(k − 2)/(k − 1/2)` for `k > 2`.
pub fn phase_transition(k: i64) -> Option<Rational> {
    (k > 2).then(|| (int(k) - int(2)) / (int(k) - r(1, 2)))
}

/// Spectrum input for the generalised Stein–Tomas optimisation.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumInput {
    /// The closed-form additive Brownian curve.
    Brownian { k: i64 },
    /// Samples `(θ_i, dim_F^{θ_i})`, linearly interpolated.
    Tabulated { theta: Vec<f64>, dim: Vec<f64>, frostman: f64, d: i64 },
}

impl SpectrumInput {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpectrumInput::Brownian { k } => check_k(*k),
            SpectrumInput::Tabulated { theta, dim, frostman, d } => {
                if theta.len() < 2 || theta.len() != dim.len() {
                    return Err(Error::validation("tabulated curve needs at least two (theta, dim) pairs"));
                }
                if theta.windows(2).any(|w| w[1] <= w[0]) || theta[0] < 0.0 || theta[theta.len() - 1] > 1.0 {
                    return Err(Error::validation("theta values must increase inside [0, 1]"));
                }
                if dim.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::validation("tabulated spectrum must be non-decreasing in theta"));
                }
                if dim.iter().any(|v| !(0.0..=*d as f64).contains(v)) {
                    return Err(Error::validation(format!("spectrum values must lie in [0, {d}]")));
                }
                let at_one = interpolate(theta, dim, 1.0);
                if !(0.0..=at_one + 1e-12).contains(frostman) {
                    return Err(Error::validation("Frostman dimension exceeds the spectrum at theta = 1"));
                }
                Ok(())
            }
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneralizedSt {
    Exact { q: Rational, theta: Rational },
    Approximate { q: f64, theta: f64 },
    /// No θ satisfies `dim_F^θ > dθ`.
    NoAdmissibleTheta { diagnostic: String },
}

impl GeneralizedSt {
    pub fn q_f64(&self) -> f64 {
        match self {
            GeneralizedSt::Exact { q, .. } => Bound::Finite(*q).to_f64(),
            GeneralizedSt::Approximate { q, .. } => *q,
            GeneralizedSt::NoAdmissibleTheta { .. } => f64::INFINITY,
        }
    }
}

/// `2 + 2(d − F_r)(2 − θ)/(F(θ) − θ F_r)` at one θ, if the denominator is positive.
fn gst_value(f_theta: Rational, theta: Rational, fr: Rational, d: i64) -> Option<Rational> {
    let den = f_theta - theta * fr;
    (den > int(0)).then(|| int(2) + int(2) * (int(d) - fr) * (int(2) - theta) / den)
}

/// Minimises the generalised Stein–Tomas exponent over admissible θ.
///
/// On each affine piece of the spectrum the objective is a linear-fractional
/// function of θ, hence monotone, so the infimum over the closure of the
/// admissible set sits at a piece endpoint, a branch crossing, or a point
/// where `dim_F^θ = dθ`.
pub fn generalized_st_q(input: &SpectrumInput) -> Result<GeneralizedSt> {
    input.validate()?;
    match input {
        SpectrumInput::Brownian { k } => Ok(brownian_gst(*k)),
        SpectrumInput::Tabulated { theta, dim, frostman, d } => Ok(tabulated_gst(theta, dim, *frostman, *d)),
    }
}

fn brownian_gst(k: i64) -> GeneralizedSt {
    let d = k + 1;
    let fr = brownian_frostman_dim(k);
    let branches = brownian_branches(k);
    let mut candidates = vec![int(0), int(1)];
    let ((a0, b0), (a1, b1)) = (branches[0], branches[1]);
    if b0 != b1 {
        candidates.push((a1 - a0) / (b0 - b1));
    }
    for (a, b) in branches {
        // a + bθ = dθ
        if int(d) != b {
            candidates.push(a / (int(d) - b));
        }
    }
    let mut best: Option<(Rational, Rational)> = None;
    for theta in candidates.into_iter().filter(|t| *t >= int(0) && *t <= int(1)) {
        let f = brownian_spectrum(k, theta);
        if f < int(d) * theta {
            continue;
        }
        if let Some(q) = gst_value(f, theta, fr, d) {
            if best.is_none_or(|(bq, bt)| q < bq || (q == bq && theta < bt)) {
                best = Some((q, theta));
            }
        }
    }
    match best {
        Some((q, theta)) => GeneralizedSt::Exact { q, theta },
        None => GeneralizedSt::NoAdmissibleTheta { diagnostic: format!("k = {k}: dim_F^θ ≤ {d}θ for every θ") },
    }
}

const TABULATED_GRID: usize = 10_000;
const TABULATED_TOL: f64 = 1e-6;

fn tabulated_gst(theta: &[f64], dim: &[f64], fr: f64, d: i64) -> GeneralizedSt {
    let d = d as f64;
    let lo = theta[0];
    let hi = theta[theta.len() - 1];
    let objective = |t: f64| -> f64 {
        let f = interpolate(theta, dim, t);
        let den = f - t * fr;
        if f <= d * t || den <= 0.0 {
            f64::INFINITY
        } else {
            2.0 + 2.0 * (d - fr) * (2.0 - t) / den
        }
    };
    let step = (hi - lo) / TABULATED_GRID as f64;
    let (mut best_t, mut best_q) = (lo, objective(lo));
    for i in 1..=TABULATED_GRID {
        let t = lo + i as f64 * step;
        let q = objective(t);
        if q < best_q {
            (best_t, best_q) = (t, q);
        }
    }
    if !best_q.is_finite() {
        return GeneralizedSt::NoAdmissibleTheta { diagnostic: "tabulated spectrum never exceeds dθ".into() };
    }
    // Golden-section refinement around the best grid point.
    let (mut a, mut b) = ((best_t - step).max(lo), (best_t + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > TABULATED_TOL {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if objective(c) <= objective(e) {
            b = e;
        } else {
            a = c;
        }
    }
    let t = 0.5 * (a + b);
    let q = objective(t);
    if q <= best_q {
        GeneralizedSt::Approximate { q, theta: t }
    } else {
        GeneralizedSt::Approximate { q: best_q, theta: best_t }
    }
}

/// Extension holds for `q` strictly above this: 4 for `k = 1`, `(8k + 2)/(3k)` otherwise.
pub fn sufficient_q_bm(k: i64) -> Result<Rational> {
    check_k(k)?;
    Ok(if k == 1 { int(4) } else { int(8 * k + 2) / int(3 * k) })
}

/// `sup{2/θ : dim_F^θ < (k + 1)θ}`, solved on the branch `k + θ/2`.
pub fn necessary_q_bm(k: i64) -> Result<Rational> {
    check_k(k)?;
    // For θ above the root of k + θ/2 = (k + 1)θ the spectrum sits below
    // (k + 1)θ, so the supremum of 2/θ is attained at the root itself.
    let (a, b) = brownian_branches(k)[0];
    let root = a / (int(k + 1) - b);
    debug_assert!(brownian_spectrum(k, root) == a + b * root);
    Ok(int(2) / root)
}

/// `4(k + 1)/(2k + 1)`.
pub fn hambrook_laba_q(k: i64) -> Result<Rational> {
    check_k(k)?;
    Ok(int(4 * (k + 1)) / int(2 * k + 1))
}

/// Knapp constraint `p < kq/(k(q − 1) − α)`; infinite when `k(q − 1) ≤ α`.
pub fn knapp_constraint(k: i64, q: Rational, alpha: Rational) -> Result<Bound> {
    check_k(k)?;
    let den = int(k) * (q - int(1)) - alpha;
    if den <= int(0) {
        return Ok(Bound::Infinite);
    }
    Ok(Bound::Finite(int(k) * q / den))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentReport {
    pub k: i64,
    pub d: i64,
    /// Extension holds for `q > sufficient_q`.
    pub sufficient_q: Rational,
    /// Extension fails for `q < necessary_q`.
    pub necessary_q: Rational,
    /// Extension fails for `2 ≤ q < hambrook_laba_q`.
    pub hambrook_laba_q: Rational,
    /// Classical Stein–Tomas range `q > stein_tomas_q`.
    pub stein_tomas_q: Rational,
    /// Minimiser of the generalised Stein–Tomas exponent.
    pub optimal_theta: Rational,
}

impl ExponentReport {
    /// All four thresholds are strict inequalities; endpoints are not claimed.
    pub const STRICT: bool = true;

    pub fn duals(&self) -> [Rational; 4] {
        [self.sufficient_q, self.necessary_q, self.hambrook_laba_q, self.stein_tomas_q].map(dual)
    }
}

pub fn report(k: i64) -> Result<ExponentReport> {
    check_k(k)?;
    let d = k + 1;
    let sufficient_q = sufficient_q_bm(k)?;
    let GeneralizedSt::Exact { q, theta } = brownian_gst(k) else {
        return Err(Error::Numeric(format!("k = {k}: no admissible theta for the Brownian curve")));
    };
    if q != sufficient_q {
        return Err(Error::Numeric(format!("k = {k}: optimised exponent {q} disagrees with {sufficient_q}")));
    }
    let stein_tomas_q = stein_tomas_q(brownian_fourier_dim(k), brownian_frostman_dim(k), d)?
        .finite()
        .expect("positive Fourier dimension");
    Ok(ExponentReport {
        k,
        d,
        sufficient_q,
        necessary_q: necessary_q_bm(k)?,
        hambrook_laba_q: hambrook_laba_q(k)?,
        stein_tomas_q,
        optimal_theta: theta,
    })
}

/// Bounds table for `k = 1..=k_max`.
pub fn exponent_table(k_max: i64) -> Result<Table> {
    let mut table = Table::new(vec![
        Column::integer("k"),
        Column::rational("sufficient"),
        Column::rational("necessary"),
        Column::rational("hambrook_laba"),
        Column::rational("stein_tomas"),
        Column::rational("optimal_theta"),
        Column::rational("sufficient_dual"),
        Column::rational("necessary_dual"),
        Column::rational("hambrook_laba_dual"),
        Column::rational("stein_tomas_dual"),
    ]);
    for k in 1..=k_max {
        let rep = report(k)?;
        let [a, b, c, e] = rep.duals();
        table.push(vec![
            k.into(),
            rep.sufficient_q.into(),
            rep.necessary_q.into(),
            rep.hambrook_laba_q.into(),
            rep.stein_tomas_q.into(),
            rep.optimal_theta.into(),
            a.into(),
            b.into(),
            c.into(),
            e.into(),
        ])?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stein_tomas_examples() {
        assert_eq!(stein_tomas_q(int(1), r(3, 2), 2).unwrap(), Bound::Finite(int(4)));
        assert_eq!(stein_tomas_q(int(3), int(3), 3).unwrap(), Bound::Finite(int(2)));
        assert_eq!(stein_tomas_q(int(2), r(5, 2), 3).unwrap(), Bound::Finite(int(3)));
        assert_eq!(stein_tomas_q(int(0), int(1), 2).unwrap(), Bound::Infinite);
        assert!(stein_tomas_q(int(1), int(3), 2).is_err());
    }

    #[test]
    fn generalized_brownian_examples() {
        assert_eq!(brownian_gst(3), GeneralizedSt::Exact { q: r(26, 9), theta: r(2, 5) });
        assert_eq!(brownian_gst(1), GeneralizedSt::Exact { q: int(4), theta: int(0) });
        assert_eq!(brownian_gst(2), GeneralizedSt::Exact { q: int(3), theta: int(0) });
    }

    #[test]
    fn generalized_matches_sufficient_up_to_fifty() {
        for k in 1..=50 {
            let GeneralizedSt::Exact { q, theta } = brownian_gst(k) else { panic!("k = {k}") };
            assert_eq!(q, sufficient_q_bm(k).unwrap(), "k = {k}");
            if k > 2 {
                assert_eq!(Some(theta), phase_transition(k));
            } else {
                assert_eq!(theta, int(0));
            }
        }
    }

    #[test]
    fn sufficient_examples_and_trend() {
        assert_eq!(sufficient_q_bm(1).unwrap(), int(4));
        assert_eq!(sufficient_q_bm(2).unwrap(), int(3));
        assert_eq!(sufficient_q_bm(5).unwrap(), r(14, 5));
        for k in 2..50 {
            assert!(sufficient_q_bm(k + 1).unwrap() < sufficient_q_bm(k).unwrap());
        }
        assert!(sufficient_q_bm(0).is_err());
    }

    #[test]
    fn necessary_examples_and_trend() {
        assert_eq!(necessary_q_bm(1).unwrap(), int(3));
        assert_eq!(necessary_q_bm(2).unwrap(), r(5, 2));
        assert_eq!(dual(necessary_q_bm(2).unwrap()), r(5, 3));
        for k in 1..=50 {
            assert_eq!(necessary_q_bm(k).unwrap(), int(2) + r(1, k));
            assert_eq!(dual(necessary_q_bm(k).unwrap()), r(2 * k + 1, k + 1));
            assert!(necessary_q_bm(k).unwrap() <= sufficient_q_bm(k).unwrap());
            if k > 1 {
                assert!(necessary_q_bm(k).unwrap() < necessary_q_bm(k - 1).unwrap());
            }
        }
    }

    #[test]
    fn knapp_examples() {
        assert_eq!(knapp_constraint(1, int(2), r(1, 2)).unwrap(), Bound::Finite(int(4)));
        for k in 1..=4 {
            for q in [2, 3, 4] {
                let general = knapp_constraint(k, int(q), r(1, 2)).unwrap();
                let special = int(2 * k * q) / int(2 * k * (q - 1) - 1);
                assert_eq!(general, Bound::Finite(special));
            }
        }
        // p = 2 in the α = 1/2 constraint: 2 = 2kq/(2k(q−1) − 1) ⇔ q = 2 + 1/k.
        let k = 3;
        let q = r(7, 3);
        assert_eq!(knapp_constraint(k, q, r(1, 2)).unwrap(), Bound::Finite(int(2)));
        assert_eq!(q, necessary_q_bm(k).unwrap());
        assert_eq!(knapp_constraint(1, r(3, 2), int(1)).unwrap(), Bound::Infinite);
    }

    #[test]
    fn hambrook_laba_examples() {
        assert_eq!(hambrook_laba_q(1).unwrap(), r(8, 3));
        assert_eq!(hambrook_laba_q(2).unwrap(), r(12, 5));
        for k in 2..=20 {
            assert!(hambrook_laba_q(k).unwrap() < necessary_q_bm(k).unwrap());
        }
    }

    #[test]
    fn report_k3() {
        let rep = report(3).unwrap();
        assert_eq!(rep.sufficient_q, r(26, 9));
        assert_eq!(rep.necessary_q, r(7, 3));
        assert_eq!(rep.hambrook_laba_q, r(16, 7));
        assert_eq!(rep.stein_tomas_q, int(3));
        assert_eq!(rep.optimal_theta, r(2, 5));
        assert_eq!(rep.duals()[0], r(26, 17));
        for q in [rep.sufficient_q, rep.necessary_q, rep.hambrook_laba_q, rep.stein_tomas_q] {
            assert_eq!(int(1) / q + int(1) / dual(q), int(1));
        }
    }

    #[test]
    fn stein_tomas_dominance() {
        for k in 1..=50 {
            let rep = report(k).unwrap();
            if k <= 2 {
                assert_eq!(rep.sufficient_q, rep.stein_tomas_q);
            } else {
                assert!(rep.sufficient_q < rep.stein_tomas_q);
            }
            assert!(rep.optimal_theta >= int(0) && rep.optimal_theta <= int(1));
        }
    }

    #[test]
    fn tabulated_agrees_with_closed_form() {
        for k in 1..=4i64 {
            // sample the kink itself so interpolation does not cut the corner
            let mut theta: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
            if let Some(t) = phase_transition(k) {
                theta.push(Bound::Finite(t).to_f64());
                theta.sort_by(f64::total_cmp);
                theta.dedup();
            }
            let dim: Vec<f64> = theta.iter().map(|&t| (k as f64 + t / 2.0).min(2.0 + k as f64 * t)).collect();
            let input = SpectrumInput::Tabulated { theta, dim, frostman: k as f64 + 0.5, d: k + 1 };
            let out = generalized_st_q(&input).unwrap();
            let exact = sufficient_q_bm(k).unwrap();
            assert!((out.q_f64() - Bound::Finite(exact).to_f64()).abs() < 1e-6, "k = {k}: {out:?}");
        }
    }

    #[test]
    fn tabulated_validation() {
        let bad = SpectrumInput::Tabulated { theta: vec![0.0, 1.0], dim: vec![2.0, 1.0], frostman: 1.0, d: 2 };
        assert!(generalized_st_q(&bad).is_err());
        let none = SpectrumInput::Tabulated { theta: vec![0.0, 1.0], dim: vec![0.0, 0.0], frostman: 0.0, d: 2 };
        assert!(matches!(generalized_st_q(&none).unwrap(), GeneralizedSt::NoAdmissibleTheta { .. }));
    }

    #[test]
    fn table_has_requested_rows() {
        let t = exponent_table(3).unwrap();
        assert_eq!(t.len(), 3);
        let bytes = String::from_utf8(t.to_csv_bytes().unwrap()).unwrap();
        assert!(bytes.contains("3,26/9,7/3,16/7,3/1,2/5"), "{bytes}");
    }
}
