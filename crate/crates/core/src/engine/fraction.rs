//! Exact non-negative rationals over record counts.
//!
//! Rates are compared and differenced as integers before a single final
//! division, so algebraically equal quantities (a TPR gap and the matching
//! FNR gap) come out bit-identical.

use std::cmp::Ordering;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        (den > 0).then_some(Self { num, den })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `|self - other|` rounded once.
    pub fn abs_diff(self, other: Self) -> f64 {
        let (a, b) = self.cross(other);
        a.abs_diff(b) as f64 / (self.den as u128 * other.den as u128) as f64
    }

    /// `self / other` rounded once; `None` when `other` is zero.
    pub fn divide(self, other: Self) -> Option<f64> {
        if other.num == 0 {
            return None;
        }
        Some((self.num as u128 * other.den as u128) as f64 / (self.den as u128 * other.num as u128) as f64)
    }

    /// Compares `|a - b|` against `|c - d|` exactly.
    pub fn cmp_abs_diff(a: Self, b: Self, c: Self, d: Self) -> Ordering {
        let (an, bn) = a.cross(b);
        let left_num = an.abs_diff(bn);
        let left_den = a.den as u128 * b.den as u128;
        let (cn, dn) = c.cross(d);
        let right_num = cn.abs_diff(dn);
        let right_den = c.den as u128 * d.den as u128;
        widening_cmp(left_num, right_den, right_num, left_den)
    }

    fn cross(self, other: Self) -> (u128, u128) {
        (self.num as u128 * other.den as u128, other.num as u128 * self.den as u128)
    }
}

/// Compares `a * b` with `c * d` without overflow.
fn widening_cmp(a: u128, b: u128, c: u128, d: u128) -> Ordering {
    match (a.checked_mul(b), c.checked_mul(d)) {
        (Some(x), Some(y)) => x.cmp(&y),
        _ => {
            // Products beyond 2^128 only occur for astronomically large slices.
            let x = a as f64 * b as f64;
            let y = c as f64 * d as f64;
            x.partial_cmp(&y).unwrap_or(Ordering::Equal)
        }
    }
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = self.cross(*other);
        a.cmp(&b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: u64, d: u64) -> Fraction {
        Fraction::new(n, d).unwrap()
    }

    #[test]
    fn zero_denominator_is_none() {
        assert!(Fraction::new(1, 0).is_none());
    }

    #[test]
    fn equal_values_with_different_representation() {
        assert_eq!(f(1, 2), f(3, 6));
        assert!(f(1, 3) < f(1, 2));
    }

    #[test]
    fn complementary_gaps_are_identical() {
        // tpr = tp/d, fnr = (d - tp)/d
        let (tp_a, d_a, tp_b, d_b) = (7, 13, 5, 11);
        let tpr_gap = f(tp_a, d_a).abs_diff(f(tp_b, d_b));
        let fnr_gap = f(d_a - tp_a, d_a).abs_diff(f(d_b - tp_b, d_b));
        assert_eq!(tpr_gap.to_bits(), fnr_gap.to_bits());
    }

    #[test]
    fn abs_diff_comparison() {
        assert_eq!(Fraction::cmp_abs_diff(f(1, 2), f(1, 4), f(3, 4), f(1, 2)), Ordering::Equal);
        assert_eq!(Fraction::cmp_abs_diff(f(1, 1), f(0, 4), f(3, 4), f(1, 2)), Ordering::Greater);
    }

    #[test]
    fn divide() {
        assert_eq!(f(1, 2).divide(f(4, 5)), Some(0.625));
        assert_eq!(f(1, 2).divide(f(0, 5)), None);
    }
}
