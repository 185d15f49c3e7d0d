//! Ordering cases of `1`, `|y|`, `|y|²` against the sorted `|ξ_j|`.
//!
//! With `|ξ|` sorted descending into `x_1 ≥ … ≥ x_k`:
//!
//! 1. `x_1 ≤ 1 ≤ |y| ≤ |y|²`
//! 2. `1 ≤ x_k`, `x_1 ≤ |y|`
//! 3. `1 ≤ |y| ≤ x_k`, `x_1 ≤ |y|²`
//! 4. `1 ≤ |y|`, `|y|² ≤ x_k`
//! 5. `|y| ≤ 1 ≤ x_1`, `x_2 ≤ |y|²`
//! 6. `|y| ≤ 1 ≤ x_k`
//!
//! Other orderings (intermediate positions of 1, `|y|`, `|y|²` inside the
//! sorted list) get no case; they are kept as a separate bucket. For `k = 1`
//! cases 5 and 6 describe the same region and case 5 is reported.

use std::fmt;

use crate::fourier::Frequency;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Case(u8);

impl Case {
    pub fn new(n: u8) -> Option<Case> {
        (1..=6).contains(&n).then_some(Case(n))
    }

    pub fn number(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Number of case buckets including the intermediate one.
pub const CASE_BUCKETS: usize = 7;

/// Bucket index: cases 1–6 map to 0–5, intermediate orderings to 6.
pub fn bucket(case: Option<Case>) -> usize {
    case.map_or(6, |c| c.0 as usize - 1)
}

pub fn classify_case(f: &Frequency) -> Option<Case> {
    let mut xs: Vec<f64> = f.xi.iter().map(|x| x.abs()).collect();
    xs.sort_by(|a, b| b.total_cmp(a));
    let y = f.y.abs();
    let y2 = y * y;
    let (largest, smallest) = (xs[0], xs[xs.len() - 1]);
    // standing assumption: something sits outside the unit cube
    if largest.max(y) <= 1.0 {
        return None;
    }
    if y > 1.0 {
        if largest <= 1.0 {
            return Case::new(1);
        }
        if smallest >= 1.0 && largest <= y {
            return Case::new(2);
        }
        if y <= smallest && largest <= y2 {
            return Case::new(3);
        }
        if y2 <= smallest {
            return Case::new(4);
        }
        None
    } else if y < 1.0 {
        let second = xs.get(1).copied().unwrap_or(0.0);
        if largest >= 1.0 && second <= y2 {
            return Case::new(5);
        }
        if smallest >= 1.0 {
            return Case::new(6);
        }
        None
    } else {
        None
    }
}
