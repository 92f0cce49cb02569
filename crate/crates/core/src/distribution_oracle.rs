//! Independent ground truth: exact forward dynamic programming over the
//! one-step kernels, yielding the full law of the white count (or color
//! vector) after `n` draws.
//!
//! This module deliberately knows nothing about the moment recurrences; it
//! only iterates [`crate::urn_model`] kernels, so it can serve as an oracle
//! for them.
//!
//! State-space sizes after `n` draws:
//!
//! | model        | states                     | growth    |
//! |--------------|----------------------------|-----------|
//! | M, R, FM, FR | `m*n + 1`                  | linear    |
//! | NB           | `m*n + 1`                  | linear    |
//! | MC (r colors)| `C(m*n + r - 1, r - 1)`    | degree r-1|

use crate::combinatorics::binomial_u64;
use crate::error::{Result, UrnError};
use crate::urn_model::{
    transition_distribution, transition_distribution_mc, transition_distribution_nb, ModelKind,
    UrnSpec,
};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Pow;
use num::{One, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Default cap on the projected number of states.
pub const DEFAULT_STATE_CAP: u64 = 1_000_000;

/// Exact probability mass over the reachable states at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub enum StateMass {
    /// White-ball count for the balanced two-color models.
    TwoColor(BTreeMap<u64, BigRational>),
    /// Explicit (white, black) pairs; NB totals are random.
    NonBalanced(BTreeMap<(u64, u64), BigRational>),
    /// Full color vectors for the multi-color model.
    MultiColor(BTreeMap<Vec<u64>, BigRational>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    pub spec: UrnSpec,
    pub n: usize,
    pub mass: StateMass,
}

impl StateDistribution {
    /// Exact total mass; 1 for a well-formed distribution.
    pub fn total_mass(&self) -> BigRational {
        match &self.mass {
            StateMass::TwoColor(m) => m.values().sum(),
            StateMass::NonBalanced(m) => m.values().sum(),
            StateMass::MultiColor(m) => m.values().sum(),
        }
    }

    /// Mass indexed by white count (first color for MC).
    pub fn white_marginal(&self) -> BTreeMap<u64, BigRational> {
        self.marginal(0)
    }

    /// Marginal law of one color.
    pub fn marginal(&self, color: usize) -> BTreeMap<u64, BigRational> {
        let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
        let mut add = |state: u64, p: &BigRational| {
            *out.entry(state).or_insert_with(BigRational::zero) += p;
        };
        match &self.mass {
            StateMass::TwoColor(m) => {
                for (w, p) in m {
                    let state = if color == 0 {
                        *w
                    } else {
                        self.spec.total_balls(self.n).expect("balanced") - *w
                    };
                    add(state, p);
                }
            }
            StateMass::NonBalanced(m) => {
                for ((w, b), p) in m {
                    add(if color == 0 { *w } else { *b }, p);
                }
            }
            StateMass::MultiColor(m) => {
                for (counts, p) in m {
                    add(counts[color], p);
                }
            }
        }
        out
    }

    /// Ordinary moment of the white count: sum of mass(w) * w^s.
    pub fn moment(&self, s: usize) -> BigRational {
        self.white_marginal()
            .iter()
            .map(|(w, p)| p * BigRational::from_integer(BigInt::from(*w).pow(s)))
            .sum()
    }

    /// Joint moment E(prod_i X_i^{s_i}) for the multi-color model.
    pub fn joint_moment(&self, powers: &[usize]) -> Result<BigRational> {
        let StateMass::MultiColor(mass) = &self.mass else {
            return Err(UrnError::UnsupportedModel {
                model: self.spec.model,
                operation: "joint_moment",
            });
        };
        if powers.len() != self.spec.num_colors() {
            return Err(UrnError::BadParameter(format!(
                "need {} powers, got {}",
                self.spec.num_colors(),
                powers.len()
            )));
        }
        Ok(mass
            .iter()
            .map(|(counts, p)| {
                let mut term = p.clone();
                for (x, s) in counts.iter().zip(powers) {
                    term *= BigRational::from_integer(BigInt::from(*x).pow(*s));
                }
                term
            })
            .sum())
    }

    /// States with positive mass, as full color vectors.
    pub fn support(&self) -> Vec<Vec<u64>> {
        match &self.mass {
            StateMass::TwoColor(m) => {
                let total = self.spec.total_balls(self.n).expect("balanced");
                m.keys().map(|w| vec![*w, total - *w]).collect()
            }
            StateMass::NonBalanced(m) => m.keys().map(|(w, b)| vec![*w, *b]).collect(),
            StateMass::MultiColor(m) => m.keys().cloned().collect(),
        }
    }
}

/// Number of states the DP would visit at time `n`, before running it.
pub fn projected_state_count(spec: &UrnSpec, n: usize) -> u64 {
    let steps = n as u64 * u64::from(spec.m);
    match spec.model {
        ModelKind::MC => {
            let r = spec.num_colors() as u64;
            binomial_u64(steps + r - 1, r - 1)
                .to_u64()
                .unwrap_or(u64::MAX)
        }
        _ => steps + 1,
    }
}

/// Exact law of the state after `n` draws, with the default state cap.
pub fn exact_distribution(spec: &UrnSpec, n: usize) -> Result<StateDistribution> {
    exact_distribution_capped(spec, n, DEFAULT_STATE_CAP)
}

/// Exact law of the state after `n` draws via forward DP over the kernels.
pub fn exact_distribution_capped(
    spec: &UrnSpec,
    n: usize,
    state_cap: u64,
) -> Result<StateDistribution> {
    spec.validate()?;
    let projected = projected_state_count(spec, n);
    if projected > state_cap {
        return Err(UrnError::StateSpaceTooLarge {
            projected,
            cap: state_cap,
        });
    }
    let mass = match spec.model {
        ModelKind::MC => StateMass::MultiColor(run_mc(spec, n)?),
        ModelKind::NB => StateMass::NonBalanced(run_nb(spec, n)?),
        _ => StateMass::TwoColor(run_two_color(spec, n)?),
    };
    Ok(StateDistribution {
        spec: spec.clone(),
        n,
        mass,
    })
}

fn run_two_color(spec: &UrnSpec, n: usize) -> Result<BTreeMap<u64, BigRational>> {
    let mut mass = BTreeMap::from([(spec.white0(), BigRational::one())]);
    for step in 0..n {
        let mut next: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (white, p) in &mass {
            let kernel = transition_distribution(spec, *white, step)?;
            for outcome in kernel.outcomes {
                if outcome.probability.is_zero() {
                    continue;
                }
                let target = (*white as i64 + outcome.white_delta) as u64;
                *next.entry(target).or_insert_with(BigRational::zero) +=
                    p * outcome.probability;
            }
        }
        mass = next;
    }
    Ok(mass)
}

fn run_nb(spec: &UrnSpec, n: usize) -> Result<BTreeMap<(u64, u64), BigRational>> {
    let mut mass = BTreeMap::from([((spec.counts[0], spec.counts[1]), BigRational::one())]);
    for _ in 0..n {
        let mut next: BTreeMap<(u64, u64), BigRational> = BTreeMap::new();
        for ((white, black), p) in &mass {
            for outcome in transition_distribution_nb(spec, *white, *black)? {
                if outcome.probability.is_zero() {
                    continue;
                }
                let target = (white + outcome.white_added, black + outcome.black_added);
                *next.entry(target).or_insert_with(BigRational::zero) +=
                    p * outcome.probability;
            }
        }
        mass = next;
    }
    Ok(mass)
}

fn run_mc(spec: &UrnSpec, n: usize) -> Result<BTreeMap<Vec<u64>, BigRational>> {
    let mut mass = BTreeMap::from([(spec.counts.clone(), BigRational::one())]);
    for step in 0..n {
        let mut next: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
        for (counts, p) in &mass {
            for outcome in transition_distribution_mc(spec, counts, step)? {
                if outcome.probability.is_zero() {
                    continue;
                }
                let c = u64::from(spec.c);
                let target: Vec<u64> = counts
                    .iter()
                    .zip(&outcome.drawn)
                    .map(|(x, k)| x + c * u64::from(*k))
                    .collect();
                *next.entry(target).or_insert_with(BigRational::zero) +=
                    p * outcome.probability;
            }
        }
        mass = next;
    }
    Ok(mass)
}

/// Ordinary moment of a distribution; named wrapper over
/// [`StateDistribution::moment`].
pub fn oracle_moment(dist: &StateDistribution, s: usize) -> BigRational {
    dist.moment(s)
}

/// Direct form of the model-R transition sum
/// `sum_{i=0}^{m} P(W_{n+1} = j + c*k | W_n = j + c*(k-i))`.
///
/// Each conditioning state `j + c*(k-i)` must lie in `[0, T_n]`.
pub fn lemma_transition_sum(spec: &UrnSpec, n: usize, j: u64, k: u64) -> Result<BigRational> {
    let (total, states) = lemma_states(spec, n, j, k)?;
    let t = BigInt::from(total);
    let mut sum = BigRational::zero();
    for (i, w) in states.iter().enumerate() {
        // From state w, reaching j + c*k requires drawing exactly i white.
        let numer = binomial_u64(u64::from(spec.m), i as u64)
            * BigInt::from(*w).pow(i)
            * (&t - BigInt::from(*w)).pow(spec.m as usize - i);
        sum += BigRational::new(numer, t.clone().pow(spec.m));
    }
    Ok(sum)
}

/// Expanded form of the same sum, grouped by powers of the total count:
/// `T^{-m} sum_{l=0}^{m} T^l sum_{i=0}^{m-l} C(m,i) C(m-i,l) w_i^i (-w_i)^{m-i-l}`
/// with `w_i = j + c*(k-i)`. Agrees with [`lemma_transition_sum`] exactly.
pub fn lemma_transition_sum_expanded(
    spec: &UrnSpec,
    n: usize,
    j: u64,
    k: u64,
) -> Result<BigRational> {
    let (total, states) = lemma_states(spec, n, j, k)?;
    let t = BigInt::from(total);
    let m = spec.m as usize;
    let mut numer = BigInt::zero();
    for l in 0..=m {
        let mut inner = BigInt::zero();
        for (i, w) in states.iter().enumerate().take(m - l + 1) {
            let w = BigInt::from(*w);
            inner += binomial_u64(m as u64, i as u64)
                * binomial_u64((m - i) as u64, l as u64)
                * w.clone().pow(i)
                * (-w).pow(m - i - l);
        }
        numer += t.clone().pow(l) * inner;
    }
    Ok(BigRational::new(numer, t.pow(m)))
}

fn lemma_states(spec: &UrnSpec, n: usize, j: u64, k: u64) -> Result<(u64, Vec<u64>)> {
    if spec.model != ModelKind::R {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "lemma_transition_sum",
        });
    }
    let total = spec.total_balls(n)?;
    let c = i128::from(spec.c);
    let mut states = Vec::with_capacity(spec.m as usize + 1);
    for i in 0..=i128::from(spec.m) {
        let w = j as i128 + c * (k as i128 - i);
        if w < 0 || w > total as i128 {
            return Err(UrnError::OutOfRangeState(format!(
                "conditioning state {w} outside [0, {total}] (j={j}, k={k}, i={i})"
            )));
        }
        states.push(w as u64);
    }
    Ok((total, states))
}

/// Exact gap statistic `n^2 * (sum - 1) + n` for the lemma's bound
/// `sum <= 1 - 1/n + kappa/n^2`; the bound holds iff this is `<= kappa`.
pub fn lemma_bound_statistic(spec: &UrnSpec, n: usize, j: u64, k: u64) -> Result<BigRational> {
    let sum = lemma_transition_sum(spec, n, j, k)?;
    let n_big = BigRational::from_integer(BigInt::from(n));
    Ok(&n_big * &n_big * (sum - BigRational::one()) + n_big)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio_i64;

    #[test]
    fn trivial_distribution_at_time_zero() {
        let spec = UrnSpec::two_color(ModelKind::M, 2, 1, 2, 1).unwrap();
        let dist = exact_distribution(&spec, 0).unwrap();
        assert_eq!(dist.moment(1), ratio_i64(2, 1));
        assert_eq!(dist.total_mass(), BigRational::one());
        let StateMass::TwoColor(mass) = &dist.mass else {
            panic!()
        };
        assert_eq!(mass.len(), 1);
        assert_eq!(mass[&2], BigRational::one());
    }

    #[test]
    fn model_m_one_step_law() {
        let spec = UrnSpec::two_color(ModelKind::M, 2, 1, 2, 1).unwrap();
        let dist = exact_distribution(&spec, 1).unwrap();
        let StateMass::TwoColor(mass) = &dist.mass else {
            panic!()
        };
        assert_eq!(mass[&3], ratio_i64(2, 3));
        assert_eq!(mass[&4], ratio_i64(1, 3));
        assert_eq!(dist.moment(2), ratio_i64(34, 3));
    }

    #[test]
    fn model_r_one_step_law() {
        let spec = UrnSpec::two_color(ModelKind::R, 2, 1, 1, 1).unwrap();
        let dist = exact_distribution(&spec, 1).unwrap();
        let StateMass::TwoColor(mass) = &dist.mass else {
            panic!()
        };
        assert_eq!(mass[&1], ratio_i64(1, 4));
        assert_eq!(mass[&2], ratio_i64(1, 2));
        assert_eq!(mass[&3], ratio_i64(1, 4));
    }

    #[test]
    fn oracle_moment_conventions() {
        let spec = UrnSpec::two_color(ModelKind::M, 2, 1, 2, 1).unwrap();
        let dist = exact_distribution(&spec, 1).unwrap();
        assert_eq!(oracle_moment(&dist, 0), BigRational::one());
        let at_zero = exact_distribution(&spec, 0).unwrap();
        assert_eq!(oracle_moment(&at_zero, 1), ratio_i64(2, 1));
    }

    #[test]
    fn state_cap_is_enforced_with_projection() {
        let spec = UrnSpec::multicolor(2, 1, vec![1, 1, 1]).unwrap();
        let err = exact_distribution_capped(&spec, 10, 5).unwrap_err();
        assert_eq!(
            err,
            UrnError::StateSpaceTooLarge {
                projected: binomial_u64(22, 2).to_u64().unwrap(),
                cap: 5
            }
        );
    }

    #[test]
    fn mc_marginal_matches_two_color_law() {
        let mc = UrnSpec::multicolor(2, 1, vec![2, 1, 1]).unwrap();
        let two = UrnSpec::two_color(ModelKind::M, 2, 1, 2, 2).unwrap();
        for n in 0..=3 {
            let marginal = exact_distribution(&mc, n).unwrap().white_marginal();
            let StateMass::TwoColor(law) =
                exact_distribution(&two, n).unwrap().mass
            else {
                panic!()
            };
            assert_eq!(marginal, law);
        }
    }

    #[test]
    fn lemma_sum_direct_values() {
        // m=1 specialization: (T_n - c)/T_n.
        let spec = UrnSpec::two_color(ModelKind::R, 1, 2, 3, 2).unwrap();
        for n in 0..4 {
            let t = spec.total_balls(n).unwrap() as i64;
            assert_eq!(
                lemma_transition_sum(&spec, n, 2, 1).unwrap(),
                ratio_i64(t - 2, t)
            );
        }
        // m=2, c=1, T_n=4, j=2, k=0 -> 5/8.
        let spec = UrnSpec::two_color(ModelKind::R, 2, 1, 2, 2).unwrap();
        assert_eq!(lemma_transition_sum(&spec, 0, 2, 0).unwrap(), ratio_i64(5, 8));
    }

    #[test]
    fn lemma_expanded_form_agrees_exactly() {
        let spec = UrnSpec::two_color(ModelKind::R, 3, 2, 2, 3).unwrap();
        for n in 0..5 {
            let total = spec.total_balls(n).unwrap();
            for j in 6..=total.min(12) {
                for k in 0..=3u64 {
                    let states_ok = (0..=3i64)
                        .all(|i| {
                            let w = j as i64 + 2 * (k as i64 - i);
                            w >= 0 && w <= total as i64
                        });
                    if !states_ok {
                        continue;
                    }
                    assert_eq!(
                        lemma_transition_sum(&spec, n, j, k).unwrap(),
                        lemma_transition_sum_expanded(&spec, n, j, k).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn lemma_rejects_out_of_range_states() {
        let spec = UrnSpec::two_color(ModelKind::R, 2, 1, 2, 2).unwrap();
        assert!(matches!(
            lemma_transition_sum(&spec, 0, 0, 0).unwrap_err(),
            UrnError::OutOfRangeState(_)
        ));
    }
}
