//! Cross-validation of the exact moment recurrences against the
//! distribution-oracle ground truth.

use num::rational::BigRational;
use num::{BigInt, One, Zero};
use urnlab_core::combinatorics::stirling_second;
use urnlab_core::distribution_oracle::{exact_distribution, oracle_moment};
use urnlab_core::exact_moments::{
    closed_form_expectation, factorial_moment_c1, multicolor_marginal_spec, MomentTable,
};
use urnlab_core::urn_model::{ModelKind, UrnSpec};

fn small_grid() -> Vec<UrnSpec> {
    let mut out = Vec::new();
    for model in [ModelKind::M, ModelKind::R] {
        for (m, c, w0, b0) in [(2u32, 1u32, 2u64, 1u64), (3, 2, 1, 1), (2, 2, 3, 2)] {
            if w0 + b0 >= u64::from(m) {
                out.push(UrnSpec::two_color(model, m, c, w0, b0).unwrap());
            }
        }
    }
    out
}

fn integer_falling(w: u64, s: usize) -> BigInt {
    let mut ff = BigInt::one();
    for t in 0..s as u64 {
        if t > w {
            return BigInt::zero();
        }
        ff *= BigInt::from(w - t);
    }
    ff
}

#[test]
fn recurrence_equals_oracle_exactly() {
    for spec in small_grid() {
        let table = MomentTable::build(&spec, 6, 4).unwrap();
        for n in 0..=6 {
            let dist = exact_distribution(&spec, n).unwrap();
            assert_eq!(dist.total_mass(), BigRational::one());
            for s in 0..=4 {
                assert_eq!(
                    table.get(n, s).unwrap(),
                    &oracle_moment(&dist, s),
                    "{} m={} c={} counts={:?} n={n} s={s}",
                    spec.model,
                    spec.m,
                    spec.c,
                    spec.counts
                );
            }
        }
    }
}

#[test]
fn friedman_oracle_matches_closed_expectation() {
    for model in [ModelKind::FM, ModelKind::FR] {
        // Covers both branches: mc == T0 and mc != T0.
        for (m, c, w0, b0) in [(2u32, 1u32, 1u64, 1u64), (2, 1, 2, 1), (2, 2, 2, 2)] {
            let spec = UrnSpec::two_color(model, m, c, w0, b0).unwrap();
            for n in 0..=6 {
                let dist = exact_distribution(&spec, n).unwrap();
                assert_eq!(
                    closed_form_expectation(&spec, n).unwrap(),
                    oracle_moment(&dist, 1),
                    "{model} m={m} c={c} ({w0},{b0}) n={n}"
                );
            }
        }
    }
}

#[test]
fn factorial_moments_agree_with_oracle_and_conversion() {
    let narrow = UrnSpec::two_color(ModelKind::M, 2, 1, 2, 1).unwrap();
    let wide = UrnSpec::two_color(ModelKind::M, 3, 1, 2, 3).unwrap();
    for spec in [narrow, wide] {
        let table = MomentTable::build(&spec, 6, 4).unwrap();
        for n in 0..=6 {
            let dist = exact_distribution(&spec, n).unwrap();
            for s in 1..=4usize {
                let factorial = factorial_moment_c1(&spec, n, s).unwrap();
                // Oracle route: sum of mass(w) * w(w-1)...(w-s+1).
                let oracle: BigRational = dist
                    .white_marginal()
                    .iter()
                    .map(|(w, p)| p * BigRational::from_integer(integer_falling(*w, s)))
                    .sum();
                assert_eq!(factorial, oracle, "n={n} s={s}");
                // Stirling conversion back to ordinary moments:
                // E(W^s) = sum_k S(s,k) E(ff(W,k)).
                let mut converted = BigRational::zero();
                for k in 1..=s {
                    converted += BigRational::from_integer(stirling_second(s, k))
                        * factorial_moment_c1(&spec, n, k).unwrap();
                }
                assert_eq!(&converted, table.get(n, s).unwrap(), "conversion n={n} s={s}");
            }
        }
    }
}

#[test]
fn multicolor_marginals_reuse_the_two_color_engine() {
    let spec = UrnSpec::multicolor(2, 1, vec![2, 1, 1]).unwrap();
    for color in 0..3 {
        let marginal = multicolor_marginal_spec(&spec, color).unwrap();
        let table = MomentTable::build(&marginal, 5, 3).unwrap();
        for n in 0..=5 {
            let dist = exact_distribution(&spec, n).unwrap();
            for s in 0..=3 {
                let mut powers = vec![0usize; 3];
                powers[color] = s;
                assert_eq!(
                    &dist.joint_moment(&powers).unwrap(),
                    table.get(n, s).unwrap(),
                    "color={color} n={n} s={s}"
                );
            }
        }
    }
}

#[test]
fn oracle_support_structure() {
    // Model M support within W0 + c*k, k <= m*n; FM support reflected into
    // the same lattice.
    let m_spec = UrnSpec::two_color(ModelKind::M, 2, 3, 2, 1).unwrap();
    let fm_spec = UrnSpec::two_color(ModelKind::FM, 2, 3, 2, 1).unwrap();
    for n in 0..=5u64 {
        for spec in [&m_spec, &fm_spec] {
            let dist = exact_distribution(spec, n as usize).unwrap();
            for state in dist.support() {
                let w = state[0];
                assert!(w >= 2);
                assert_eq!((w - 2) % 3, 0);
                assert!((w - 2) / 3 <= 2 * n);
            }
        }
    }
}
