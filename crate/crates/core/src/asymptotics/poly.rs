//! Dense univariate polynomials over exact rationals, ascending coefficient
//! order. Just enough arithmetic to expand the characteristic polynomials.

use num::rational::BigRational;
use num::Zero;

#[derive(Debug, Clone, PartialEq)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn zero() -> Self {
        RationalPoly {
            coeffs: vec![BigRational::zero()],
        }
    }

    pub fn constant(value: BigRational) -> Self {
        RationalPoly {
            coeffs: vec![value],
        }
    }

    /// `intercept + slope * x`.
    pub fn linear(slope: BigRational, intercept: BigRational) -> Self {
        RationalPoly {
            coeffs: vec![intercept, slope],
        }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        let mut d = self.coeffs.len() - 1;
        while d > 0 && self.coeffs[d].is_zero() {
            d -= 1;
        }
        d
    }

    pub fn add(&self, other: &RationalPoly) -> RationalPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![BigRational::zero(); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        RationalPoly { coeffs }
    }

    pub fn mul(&self, other: &RationalPoly) -> RationalPoly {
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        RationalPoly { coeffs }
    }

    pub fn scale(&self, factor: &BigRational) -> RationalPoly {
        RationalPoly {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Drops leading zero coefficients down to the true degree.
    pub fn trimmed(mut self) -> RationalPoly {
        let d = self.degree();
        self.coeffs.truncate(d + 1);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio_i64;

    #[test]
    fn expand_and_evaluate() {
        // (2x + 3)(x - 1) = 2x^2 + x - 3
        let p = RationalPoly::linear(ratio_i64(2, 1), ratio_i64(3, 1))
            .mul(&RationalPoly::linear(ratio_i64(1, 1), ratio_i64(-1, 1)));
        assert_eq!(
            p.coeffs(),
            &[ratio_i64(-3, 1), ratio_i64(1, 1), ratio_i64(2, 1)]
        );
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn add_trims_cancelled_leading_terms() {
        let p = RationalPoly::linear(ratio_i64(1, 1), ratio_i64(0, 1));
        let q = RationalPoly::linear(ratio_i64(-1, 1), ratio_i64(5, 1));
        let sum = p.add(&q).trimmed();
        assert_eq!(sum.coeffs(), &[ratio_i64(5, 1)]);
        assert_eq!(sum.degree(), 0);
    }
}
