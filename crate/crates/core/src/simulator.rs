//! Seeded Monte Carlo simulation of every model variant.
//!
//! Sampling follows the kernels in law: the without-replacement models draw
//! the `m` balls as `m` sequential single-ball removals, the with-replacement
//! models as `m` independent picks. Each run owns a ChaCha8 stream derived
//! from the master seed and its run index, so runs are independent,
//! reproducible, and partitionable across workers; aggregation uses exact
//! integer power sums, making the merge associative and commutative with no
//! rounding.

use crate::error::{Result, UrnError};
use crate::exact_moments::friedman_martingale_coefficients;
use crate::rational::ratio_to_f64;
use crate::urn_model::{ModelKind, UrnSpec};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Summary statistics of a fixed-seed simulation batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub spec: UrnSpec,
    pub n: usize,
    pub runs: u64,
    pub seed: u64,
    /// `empirical_moments[s]` estimates `E(W_n^s)`, `s <= s_max`.
    pub empirical_moments: Vec<f64>,
    /// Standard error of each estimate.
    pub standard_errors: Vec<f64>,
    /// Empirical mean of the model's martingale statistic; `None` for NB.
    pub martingale_mean: Option<f64>,
}

fn rng_for_run(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// One step of the urn process, mutating `counts` in place.
fn step(spec: &UrnSpec, counts: &mut [u64], rng: &mut ChaCha8Rng) {
    let m = spec.m as usize;
    let mut drawn = vec![0u32; counts.len()];
    let with_replacement = match spec.model {
        ModelKind::R | ModelKind::FR => true,
        ModelKind::NB => spec.nb_replacement,
        _ => false,
    };
    if with_replacement {
        let total: u64 = counts.iter().sum();
        for _ in 0..m {
            let pick = rng.gen_range(0..total);
            drawn[locate_color(counts, pick)] += 1;
        }
    } else {
        // Sequential removals; the removed balls return with the additions.
        let mut remaining: Vec<u64> = counts.to_vec();
        let mut total: u64 = remaining.iter().sum();
        for _ in 0..m {
            let pick = rng.gen_range(0..total);
            let color = locate_color(&remaining, pick);
            drawn[color] += 1;
            remaining[color] -= 1;
            total -= 1;
        }
    }
    apply_additions(spec, counts, &drawn);
}

fn locate_color(counts: &[u64], mut pick: u64) -> usize {
    for (color, count) in counts.iter().enumerate() {
        if pick < *count {
            return color;
        }
        pick -= count;
    }
    unreachable!("pick below total")
}

fn apply_additions(spec: &UrnSpec, counts: &mut [u64], drawn: &[u32]) {
    let c = u64::from(spec.c);
    let m = u64::from(spec.m);
    match spec.model {
        ModelKind::M | ModelKind::R | ModelKind::MC => {
            for (count, k) in counts.iter_mut().zip(drawn) {
                *count += c * u64::from(*k);
            }
        }
        ModelKind::FM | ModelKind::FR => {
            // k white drawn: add c(m-k) white, c k black.
            let k = u64::from(drawn[0]);
            counts[0] += c * (m - k);
            counts[1] += c * k;
        }
        ModelKind::NB => {
            let nb = spec.nb.expect("validated NB spec");
            let k = u64::from(drawn[0]);
            counts[0] += k * u64::from(nb.a);
            counts[1] += (m - k) * u64::from(nb.b);
        }
    }
}

/// Simulates one trajectory; entry `i` is the full color-count vector after
/// `i` draws. Deterministic in `(spec, n, seed)`; equals run 0 of
/// [`estimate_moments`] with the same seed.
pub fn simulate_path(spec: &UrnSpec, n: usize, seed: u64) -> Result<Vec<Vec<u64>>> {
    spec.validate()?;
    let mut rng = rng_for_run(seed, 0);
    let mut counts = spec.counts.clone();
    let mut path = Vec::with_capacity(n + 1);
    path.push(counts.clone());
    for _ in 0..n {
        step(spec, &mut counts, &mut rng);
        path.push(counts.clone());
    }
    Ok(path)
}

/// Exact integer accumulator of white-count power sums over runs.
///
/// `merge` is associative and commutative, so partitions of the run range
/// can be aggregated in any order with bit-identical results.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    power_sums: Vec<BigInt>,
    runs: u64,
}

impl MomentAccumulator {
    /// Tracks power sums up to `2 * s_max` (the extra orders feed the
    /// standard errors).
    pub fn new(s_max: usize) -> Self {
        MomentAccumulator {
            power_sums: vec![BigInt::zero(); 2 * s_max + 1],
            runs: 0,
        }
    }

    pub fn record(&mut self, white: u64) {
        self.runs += 1;
        let mut power = BigInt::from(1u32);
        let w = BigInt::from(white);
        for sum in self.power_sums.iter_mut() {
            *sum += &power;
            power *= &w;
        }
    }

    pub fn merge(mut self, other: MomentAccumulator) -> MomentAccumulator {
        assert_eq!(self.power_sums.len(), other.power_sums.len());
        self.runs += other.runs;
        for (a, b) in self.power_sums.iter_mut().zip(other.power_sums) {
            *a += b;
        }
        self
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }

    /// Exact empirical moment `sum w^s / runs`.
    pub fn moment(&self, s: usize) -> BigRational {
        BigRational::new(self.power_sums[s].clone(), BigInt::from(self.runs))
    }

    fn s_max(&self) -> usize {
        (self.power_sums.len() - 1) / 2
    }

    /// Empirical moments and their standard errors, floating point.
    fn summarize(&self) -> (Vec<f64>, Vec<f64>) {
        let s_max = self.s_max();
        let mut moments = Vec::with_capacity(s_max + 1);
        let mut errors = Vec::with_capacity(s_max + 1);
        for s in 0..=s_max {
            let mean = self.moment(s);
            // Var of the mean estimate: (E w^{2s} - (E w^s)^2) / runs, exact
            // inside the square root.
            let spread = self.moment(2 * s) - &mean * &mean;
            moments.push(ratio_to_f64(&mean));
            errors.push((ratio_to_f64(&spread) / self.runs as f64).max(0.0).sqrt());
        }
        (moments, errors)
    }
}

fn accumulate(
    spec: &UrnSpec,
    n: usize,
    s_max: usize,
    seed: u64,
    runs: std::ops::Range<u64>,
) -> MomentAccumulator {
    let mut acc = MomentAccumulator::new(s_max);
    for run in runs {
        let mut rng = rng_for_run(seed, run);
        let mut counts = spec.counts.clone();
        for _ in 0..n {
            step(spec, &mut counts, &mut rng);
        }
        acc.record(counts[0]);
    }
    acc
}

/// Empirical moments of the white count after `n` draws over `runs`
/// independent seeded runs.
pub fn estimate_moments(
    spec: &UrnSpec,
    n: usize,
    s_max: usize,
    runs: u64,
    seed: u64,
) -> Result<SimulationSummary> {
    if runs < 1 {
        return Err(UrnError::BadParameter("runs must be >= 1".into()));
    }
    spec.validate()?;
    let acc = accumulate(spec, n, s_max.max(1), seed, 0..runs);
    summarize_accumulator(spec, n, s_max.max(1), seed, &acc)
}

fn summarize_accumulator(
    spec: &UrnSpec,
    n: usize,
    _s_max: usize,
    seed: u64,
    acc: &MomentAccumulator,
) -> Result<SimulationSummary> {
    let (empirical_moments, standard_errors) = acc.summarize();
    let martingale_mean = match spec.model {
        ModelKind::NB => None,
        ModelKind::M | ModelKind::R | ModelKind::MC => {
            let total = spec.total_balls(n)?;
            Some(ratio_to_f64(
                &(acc.moment(1) / BigRational::from_integer(BigInt::from(total))),
            ))
        }
        ModelKind::FM | ModelKind::FR => {
            let coeffs = friedman_martingale_coefficients(spec, n)?;
            Some(ratio_to_f64(&(coeffs.phi * acc.moment(1) + coeffs.psi)))
        }
    };
    Ok(SimulationSummary {
        spec: spec.clone(),
        n,
        runs: acc.runs(),
        seed,
        empirical_moments,
        standard_errors,
        martingale_mean,
    })
}

/// Empirical moment summaries at every time `0..=n_max` from one batch of
/// trajectories.
pub fn estimate_moment_profile(
    spec: &UrnSpec,
    n_max: usize,
    s_max: usize,
    runs: u64,
    seed: u64,
) -> Result<Vec<SimulationSummary>> {
    if runs < 1 {
        return Err(UrnError::BadParameter("runs must be >= 1".into()));
    }
    spec.validate()?;
    let s_max = s_max.max(1);
    let mut accs: Vec<MomentAccumulator> =
        (0..=n_max).map(|_| MomentAccumulator::new(s_max)).collect();
    for run in 0..runs {
        let mut rng = rng_for_run(seed, run);
        let mut counts = spec.counts.clone();
        accs[0].record(counts[0]);
        for time in 1..=n_max {
            step(spec, &mut counts, &mut rng);
            accs[time].record(counts[0]);
        }
    }
    accs.iter()
        .enumerate()
        .map(|(time, acc)| summarize_accumulator(spec, time, s_max, seed, acc))
        .collect()
}

/// Empirical mean of the martingale statistic: `W_n / T_n` for M/R/MC
/// (target `W0/T0`), `phi_n W_n + psi_n` for FM/FR (target `(T0-mc) W0/T0`).
pub fn martingale_diagnostic(spec: &UrnSpec, n: usize, runs: u64, seed: u64) -> Result<f64> {
    if spec.model == ModelKind::NB {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "martingale_diagnostic",
        });
    }
    let summary = estimate_moments(spec, n, 1, runs, seed)?;
    Ok(summary
        .martingale_mean
        .expect("non-NB models always produce the diagnostic"))
}

/// Empirical state frequencies of the white count after `n` draws.
pub fn empirical_white_frequencies(
    spec: &UrnSpec,
    n: usize,
    runs: u64,
    seed: u64,
) -> Result<std::collections::BTreeMap<u64, u64>> {
    spec.validate()?;
    let mut freq = std::collections::BTreeMap::new();
    for run in 0..runs {
        let mut rng = rng_for_run(seed, run);
        let mut counts = spec.counts.clone();
        for _ in 0..n {
            step(spec, &mut counts, &mut rng);
        }
        *freq.entry(counts[0]).or_insert(0) += 1;
    }
    Ok(freq)
}
