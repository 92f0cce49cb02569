//! Exact integer and rational special sequences: Stirling numbers of both
//! kinds, falling factorials, and binomial coefficients at rational arguments.
//!
//! Everything here is exact; no floating point is used.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};

/// Unsigned Stirling number of the first kind (cycle numbers).
///
/// Counts permutations of `n` elements with exactly `k` cycles. Zero when
/// `k > n` or when `k = 0` with `n > 0`; `(0, 0)` is 1.
pub fn stirling_first(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    if n == 0 {
        return BigInt::one();
    }
    if k == 0 {
        return BigInt::zero();
    }
    // Row-by-row with s(i, j) = s(i-1, j-1) + (i-1) * s(i-1, j).
    let mut prev = vec![BigInt::zero(); k + 1];
    prev[0] = BigInt::one();
    for i in 1..=n {
        let mut curr = vec![BigInt::zero(); k + 1];
        let limit = usize::min(i, k);
        for j in 1..=limit {
            curr[j] = &prev[j - 1] + &prev[j] * BigInt::from(i - 1);
        }
        prev = curr;
    }
    prev[k].clone()
}

/// Stirling number of the second kind (partition numbers).
///
/// Counts partitions of an `n`-set into `k` non-empty blocks, with the same
/// boundary conventions as [`stirling_first`].
pub fn stirling_second(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    if n == 0 {
        return BigInt::one();
    }
    if k == 0 {
        return BigInt::zero();
    }
    // S(i, j) = j * S(i-1, j) + S(i-1, j-1).
    let mut prev = vec![BigInt::zero(); k + 1];
    prev[0] = BigInt::one();
    for i in 1..=n {
        let mut curr = vec![BigInt::zero(); k + 1];
        let limit = usize::min(i, k);
        for j in 1..=limit {
            curr[j] = &prev[j - 1] + &prev[j] * BigInt::from(j);
        }
        prev = curr;
    }
    prev[k].clone()
}

/// Triangular memo tables for both Stirling kinds up to a declared row.
///
/// Lookups beyond `max_n` fall back to recomputation, so the cache is always
/// total. The tables are immutable after construction and safe to share
/// across threads.
#[derive(Debug, Clone)]
pub struct StirlingCache {
    first: Vec<Vec<BigInt>>,
    second: Vec<Vec<BigInt>>,
    max_n: usize,
}

impl StirlingCache {
    pub fn new(max_n: usize) -> Self {
        let mut first = vec![vec![BigInt::one()]];
        let mut second = vec![vec![BigInt::one()]];
        for n in 1..=max_n {
            let (pf, ps) = (&first[n - 1], &second[n - 1]);
            let mut rf = vec![BigInt::zero(); n + 1];
            let mut rs = vec![BigInt::zero(); n + 1];
            for k in 1..=n {
                let carry_f = if k < n {
                    &pf[k] * BigInt::from(n - 1)
                } else {
                    BigInt::zero()
                };
                let carry_s = if k < n {
                    &ps[k] * BigInt::from(k)
                } else {
                    BigInt::zero()
                };
                rf[k] = &pf[k - 1] + carry_f;
                rs[k] = &ps[k - 1] + carry_s;
            }
            first.push(rf);
            second.push(rs);
        }
        StirlingCache {
            first,
            second,
            max_n,
        }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn first(&self, n: usize, k: usize) -> BigInt {
        if n <= self.max_n {
            self.first[n].get(k).cloned().unwrap_or_else(BigInt::zero)
        } else {
            stirling_first(n, k)
        }
    }

    pub fn second(&self, n: usize, k: usize) -> BigInt {
        if n <= self.max_n {
            self.second[n].get(k).cloned().unwrap_or_else(BigInt::zero)
        } else {
            stirling_second(n, k)
        }
    }
}

/// Falling factorial x(x-1)...(x-l+1) at a rational argument; `l = 0` gives 1.
pub fn falling_factorial(x: &BigRational, l: usize) -> BigRational {
    let mut acc = BigRational::one();
    for t in 0..l {
        acc *= x - BigRational::from_integer(BigInt::from(t));
    }
    acc
}

/// Generalized binomial coefficient: falling_factorial(x, k) / k!.
pub fn generalized_binomial(x: &BigRational, k: usize) -> BigRational {
    falling_factorial(x, k) / BigRational::from_integer(factorial(k))
}

/// n! as a big integer.
pub fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for t in 2..=n {
        acc *= BigInt::from(t);
    }
    acc
}

/// Integer binomial coefficient with the convention C(n, k) = 0 for k > n.
pub fn binomial_u64(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for t in 0..k {
        acc = acc * BigInt::from(n - t) / BigInt::from(t + 1);
    }
    acc
}
