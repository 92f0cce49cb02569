//! Exact moment machinery for the urn models, in arbitrary-precision
//! rational arithmetic.
//!
//! For models M and R the s-th moment satisfies the one-step recurrence
//!
//! ```text
//! E(W_{n+1}^s) = multiplier(n, s) * E(W_n^s) + drift(n, s)
//! ```
//!
//! where the multiplier collapses the leading term of the conditional
//! hypergeometric (M) or binomial (R) sample moments, and the drift is a
//! Stirling-number weighted combination of the lower-order moments at the
//! same time index. Tables are filled in (n, s)-lexicographic order so every
//! drift input is available.
//!
//! Also implemented here: closed-form expectations (including the Friedman
//! variants), the factorial-moment recurrence for `c = 1`, the second-moment
//! closed form evaluated through the symmetric functions of its
//! characteristic pair (so the exact path never touches the irrational
//! roots), multi-color covariance, and the Friedman martingale coefficients.

use crate::combinatorics::{falling_factorial, StirlingCache};
use crate::error::{Result, UrnError};
use crate::rational::{ratio_to_f64, ratio_u64};
use crate::urn_model::{ModelKind, UrnSpec};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Pow;
use num::{Integer, One, ToPrimitive, Zero};

/// One-step recurrence coefficients: `E' = multiplier * E + inhomogeneous`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceCoefficients {
    pub multiplier: BigRational,
    pub inhomogeneous: BigRational,
}

/// Coefficients of the Friedman martingale `phi_n * W_n + psi_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleCoefficients {
    pub phi: BigRational,
    pub psi: BigRational,
    pub n: usize,
}

fn require_recurrence_model(spec: &UrnSpec, operation: &'static str) -> Result<()> {
    match spec.model {
        ModelKind::M | ModelKind::R => Ok(()),
        model => Err(UrnError::UnsupportedModel { model, operation }),
    }
}

fn int_falling(x: u64, l: usize) -> BigInt {
    let mut acc = BigInt::one();
    for t in 0..l as u64 {
        if t >= x {
            return BigInt::zero();
        }
        acc *= BigInt::from(x - t);
    }
    acc
}

fn binom_big(n: u64, k: u64) -> BigInt {
    crate::combinatorics::binomial_u64(n, k)
}

/// The recurrence multiplier at time `n` for order `s` (model M or R).
pub(crate) fn growth_factor(spec: &UrnSpec, n: usize, s: usize) -> BigRational {
    let total = spec.initial_total() + n as u64 * spec.mc();
    let c = BigInt::from(spec.c);
    let m = u64::from(spec.m);
    let mut acc = BigRational::zero();
    for l in 0..=s.min(m as usize) {
        let numer = binom_big(s as u64, l as u64) * c.clone().pow(l);
        let term = match spec.model {
            ModelKind::M => BigRational::new(
                numer * binom_big(m, l as u64),
                binom_big(total, l as u64),
            ),
            ModelKind::R => BigRational::new(
                numer * int_falling(m, l),
                BigInt::from(total).pow(l),
            ),
            _ => unreachable!("growth_factor requires model M or R"),
        };
        acc += term;
    }
    acc
}

/// Weights of the lower-order moments in the drift term at time `n`:
/// pairs `(r, w)` meaning the drift contains `w * E(W_n^r)`.
pub(crate) fn drift_weights(
    spec: &UrnSpec,
    cache: &StirlingCache,
    n: usize,
    s: usize,
) -> Vec<(usize, BigRational)> {
    let total = spec.initial_total() + n as u64 * spec.mc();
    let c = BigInt::from(spec.c);
    let m = u64::from(spec.m);
    let mut out = Vec::new();
    for i in 2..=s {
        let r = s + 1 - i;
        let mut weight = BigRational::zero();
        for l in i..=s {
            let scale = binom_big(s as u64, l as u64) * c.clone().pow(l);
            match spec.model {
                ModelKind::M => {
                    for j in (l + 1 - i)..=l.min(m as usize) {
                        let magnitude = cache.second(l, j)
                            * cache.first(j, l + 1 - i)
                            * binom_big(m, j as u64)
                            * &scale;
                        let signed = if (j + i + 1 + l) % 2 == 0 {
                            magnitude
                        } else {
                            -magnitude
                        };
                        weight += BigRational::new(signed, binom_big(total, j as u64));
                    }
                }
                ModelKind::R => {
                    let q = l + 1 - i;
                    if q > m as usize {
                        continue;
                    }
                    let numer = cache.second(l, q) * int_falling(m, q) * &scale;
                    weight += BigRational::new(numer, BigInt::from(total).pow(q));
                }
                _ => unreachable!("drift_weights requires model M or R"),
            }
        }
        if !weight.is_zero() {
            out.push((r, weight));
        }
    }
    out
}

/// `f64` twin of [`growth_factor`] for series evaluation past the exact horizon.
pub(crate) fn growth_factor_f64(spec: &UrnSpec, n: usize, s: usize) -> f64 {
    let total = (spec.initial_total() + n as u64 * spec.mc()) as f64;
    let c = f64::from(spec.c);
    let m = u64::from(spec.m);
    let mut acc = 0.0;
    for l in 0..=s.min(m as usize) {
        let base = binom_f64(s as u64, l) * c.powi(l as i32);
        acc += match spec.model {
            ModelKind::M => base * binom_f64(m, l) / binom_f64_real(total, l),
            ModelKind::R => base * falling_f64(m as f64, l) / total.powi(l as i32),
            _ => unreachable!(),
        };
    }
    acc
}

/// `f64` twin of [`drift_weights`].
pub(crate) fn drift_weights_f64(
    spec: &UrnSpec,
    cache: &StirlingCache,
    n: usize,
    s: usize,
) -> Vec<(usize, f64)> {
    let total = (spec.initial_total() + n as u64 * spec.mc()) as f64;
    let c = f64::from(spec.c);
    let m = u64::from(spec.m);
    let mut out = Vec::new();
    for i in 2..=s {
        let r = s + 1 - i;
        let mut weight = 0.0;
        for l in i..=s {
            let scale = binom_f64(s as u64, l) * c.powi(l as i32);
            match spec.model {
                ModelKind::M => {
                    for j in (l + 1 - i)..=l.min(m as usize) {
                        let sign = if (j + i + 1 + l) % 2 == 0 { 1.0 } else { -1.0 };
                        weight += sign
                            * scale
                            * cache.second(l, j).to_f64().unwrap_or(f64::NAN)
                            * cache.first(j, l + 1 - i).to_f64().unwrap_or(f64::NAN)
                            * binom_f64(m, j)
                            / binom_f64_real(total, j);
                    }
                }
                ModelKind::R => {
                    let q = l + 1 - i;
                    if q > m as usize {
                        continue;
                    }
                    weight += scale
                        * cache.second(l, q).to_f64().unwrap_or(f64::NAN)
                        * falling_f64(m as f64, q)
                        / total.powi(q as i32);
                }
                _ => unreachable!(),
            }
        }
        out.push((r, weight));
    }
    out
}

fn binom_f64(n: u64, k: usize) -> f64 {
    if k as u64 > n {
        return 0.0;
    }
    let mut acc = 1.0;
    for t in 0..k as u64 {
        acc = acc * (n - t) as f64 / (t + 1) as f64;
    }
    acc
}

fn binom_f64_real(x: f64, k: usize) -> f64 {
    let mut acc = 1.0;
    for t in 0..k {
        acc = acc * (x - t as f64) / (t + 1) as f64;
    }
    acc
}

fn falling_f64(x: f64, l: usize) -> f64 {
    (0..l).map(|t| x - t as f64).product()
}

/// Recurrence coefficients at `(n, s)`, with the drift assembled from the
/// lower-order moments of `lower_moments` at time `n`.
pub fn recurrence_coefficients(
    spec: &UrnSpec,
    n: usize,
    s: usize,
    lower_moments: &MomentTable,
) -> Result<RecurrenceCoefficients> {
    require_recurrence_model(spec, "recurrence_coefficients")?;
    if s == 0 {
        return Err(UrnError::BadParameter("order s must be >= 1".into()));
    }
    let cache = StirlingCache::new(s);
    let multiplier = growth_factor(spec, n, s);
    let mut inhomogeneous = BigRational::zero();
    for (r, weight) in drift_weights(spec, &cache, n, s) {
        let value = lower_moments
            .get(n, r)
            .ok_or(UrnError::MissingMoment { n, s: r })?;
        inhomogeneous += weight * value;
    }
    Ok(RecurrenceCoefficients {
        multiplier,
        inhomogeneous,
    })
}

const REDUCE_INTERVAL: usize = 256;

/// Streaming evaluator of the moment recurrence for models M and R.
///
/// The row of moments `E(W_n^s)`, `s <= s_max`, is carried as integer
/// numerators over one shared denominator; a step multiplies everything by
/// small integers only, and the row is renormalized periodically. Reading an
/// entry reduces it to lowest terms.
#[derive(Debug, Clone)]
pub struct MomentEngine {
    spec: UrnSpec,
    s_max: usize,
    time: usize,
    numerators: Vec<BigInt>,
    denominator: BigInt,
    cache: StirlingCache,
    steps_since_reduce: usize,
}

impl MomentEngine {
    pub fn new(spec: &UrnSpec, s_max: usize) -> Result<Self> {
        require_recurrence_model(spec, "moment recurrence")?;
        spec.validate()?;
        let w0 = BigInt::from(spec.white0());
        let numerators = (0..=s_max).map(|s| w0.clone().pow(s)).collect();
        Ok(MomentEngine {
            spec: spec.clone(),
            s_max,
            time: 0,
            numerators,
            denominator: BigInt::one(),
            cache: StirlingCache::new(s_max),
            steps_since_reduce: 0,
        })
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    /// Advances the row from time `n` to `n + 1`.
    pub fn step(&mut self) {
        let n = self.time;
        let growth: Vec<BigRational> = (1..=self.s_max)
            .map(|s| growth_factor(&self.spec, n, s))
            .collect();
        let drifts: Vec<Vec<(usize, BigRational)>> = (1..=self.s_max)
            .map(|s| drift_weights(&self.spec, &self.cache, n, s))
            .collect();

        let mut step_denom = BigInt::one();
        for g in &growth {
            step_denom = step_denom.lcm(g.denom());
        }
        for row in &drifts {
            for (_, w) in row {
                step_denom = step_denom.lcm(w.denom());
            }
        }

        let mut next = Vec::with_capacity(self.s_max + 1);
        next.push(&self.denominator * &step_denom);
        for s in 1..=self.s_max {
            let g = &growth[s - 1];
            let mut acc = g.numer() * (&step_denom / g.denom()) * &self.numerators[s];
            for (r, w) in &drifts[s - 1] {
                acc += w.numer() * (&step_denom / w.denom()) * &self.numerators[*r];
            }
            next.push(acc);
        }
        self.denominator = next[0].clone();
        self.numerators = next;
        self.time += 1;
        self.steps_since_reduce += 1;
        if self.steps_since_reduce >= REDUCE_INTERVAL {
            self.reduce();
        }
    }

    pub fn advance_to(&mut self, n: usize) {
        while self.time < n {
            self.step();
        }
    }

    fn reduce(&mut self) {
        let mut g = self.denominator.clone();
        for numer in &self.numerators[1..] {
            if g.is_one() {
                break;
            }
            g = g.gcd(numer);
        }
        if !g.is_one() {
            self.denominator = &self.denominator / &g;
            for numer in self.numerators.iter_mut() {
                *numer = &*numer / &g;
            }
        }
        self.steps_since_reduce = 0;
    }

    /// `E(W_n^s)` at the current time, in lowest terms. Panics if `s` exceeds
    /// the engine's declared order.
    pub fn moment(&self, s: usize) -> BigRational {
        assert!(s <= self.s_max, "order {s} exceeds engine s_max {}", self.s_max);
        BigRational::new(self.numerators[s].clone(), self.denominator.clone())
    }

    pub fn row(&self) -> Vec<BigRational> {
        (0..=self.s_max).map(|s| self.moment(s)).collect()
    }
}

/// Table of exact moments `E(W_n^s)` for `n <= n_max`, `s <= s_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    spec: UrnSpec,
    entries: Vec<Vec<BigRational>>,
}

impl MomentTable {
    /// Fills the table in lexicographic (n, s) order.
    pub fn build(spec: &UrnSpec, n_max: usize, s_max: usize) -> Result<Self> {
        let mut engine = MomentEngine::new(spec, s_max)?;
        let mut entries = Vec::with_capacity(n_max + 1);
        entries.push(engine.row());
        for _ in 0..n_max {
            engine.step();
            entries.push(engine.row());
        }
        Ok(MomentTable {
            spec: spec.clone(),
            entries,
        })
    }

    pub fn spec(&self) -> &UrnSpec {
        &self.spec
    }

    pub fn n_max(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn s_max(&self) -> usize {
        self.entries[0].len() - 1
    }

    pub fn get(&self, n: usize, s: usize) -> Option<&BigRational> {
        self.entries.get(n).and_then(|row| row.get(s))
    }
}

/// `E(W_n^s)` for models M and R.
pub fn moment(spec: &UrnSpec, n: usize, s: usize) -> Result<BigRational> {
    let mut engine = MomentEngine::new(spec, s)?;
    engine.advance_to(n);
    Ok(engine.moment(s))
}

/// Closed-form expectation of the white count.
///
/// Models M, R and MC (first color) follow `W0 (n m c + T0) / T0`. The
/// Friedman variants FM/FR share a two-case formula; when `m c = T0` the
/// reduced expression is only valid from `n = 1` on (the first step forces
/// `E(W_1) = m c` regardless of `W0`), so `n = 0` returns `W0`.
pub fn closed_form_expectation(spec: &UrnSpec, n: usize) -> Result<BigRational> {
    spec.validate()?;
    match spec.model {
        ModelKind::M | ModelKind::R | ModelKind::MC => Ok(martingale_expectation(
            spec.white0(),
            spec.initial_total(),
            spec.mc(),
            n,
        )),
        ModelKind::FM | ModelKind::FR => {
            let t0 = ratio_u64(spec.initial_total());
            let mc = ratio_u64(spec.mc());
            let w0 = ratio_u64(spec.white0());
            let n_r = ratio_u64(n as u64);
            if mc == t0 {
                if n == 0 {
                    return Ok(w0);
                }
                return Ok(&mc * ratio_u64(n as u64 + 1) / ratio_u64(2));
            }
            let pairs = ratio_u64((n as u64) * (n.saturating_sub(1) as u64) / 2);
            let numer = &mc * &mc * pairs + &mc * &t0 * &n_r + (&t0 - &mc) * &w0;
            let denom = &mc * (n_r - BigRational::one()) + &t0;
            Ok(numer / denom)
        }
        ModelKind::NB => Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "closed_form_expectation",
        }),
    }
}

fn martingale_expectation(x0: u64, t0: u64, mc: u64, n: usize) -> BigRational {
    BigRational::new(
        BigInt::from(x0) * BigInt::from(t0 + n as u64 * mc),
        BigInt::from(t0),
    )
}

/// Expectation of one color of the multi-color model: `X0_i (n m c + T0)/T0`.
pub fn multicolor_expectation(spec: &UrnSpec, n: usize, color: usize) -> Result<BigRational> {
    if spec.model != ModelKind::MC {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "multicolor_expectation",
        });
    }
    if color >= spec.num_colors() {
        return Err(UrnError::OutOfRangeState(format!(
            "color {color} out of range (r = {})",
            spec.num_colors()
        )));
    }
    Ok(martingale_expectation(
        spec.counts[color],
        spec.initial_total(),
        spec.mc(),
        n,
    ))
}

/// Two-color model-M spec whose white count is distributed like one color of
/// a multi-color spec. Lets the recurrence engine serve per-color moments.
pub fn multicolor_marginal_spec(spec: &UrnSpec, color: usize) -> Result<UrnSpec> {
    if spec.model != ModelKind::MC {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "multicolor_marginal_spec",
        });
    }
    if color >= spec.num_colors() {
        return Err(UrnError::OutOfRangeState(format!(
            "color {color} out of range (r = {})",
            spec.num_colors()
        )));
    }
    let white = spec.counts[color];
    UrnSpec::two_color(
        ModelKind::M,
        spec.m,
        spec.c,
        white,
        spec.initial_total() - white,
    )
}

/// Factorial moment `E(W_n (W_n - 1) ... (W_n - s + 1))` for model M, `c = 1`.
///
/// The multiplier of the top order reuses the sample-moment sum at the
/// pre-step total `T_{n-1}` (both sums of the recurrence live at the same
/// time index), which is the indexing pinned against the distribution oracle.
pub fn factorial_moment_c1(spec: &UrnSpec, n: usize, s: usize) -> Result<BigRational> {
    if spec.model != ModelKind::M {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "factorial_moment_c1",
        });
    }
    if spec.c != 1 {
        return Err(UrnError::RequiresCEquals1(spec.c));
    }
    if s == 0 {
        return Err(UrnError::BadParameter("order s must be >= 1".into()));
    }
    spec.validate()?;
    let m = u64::from(spec.m);
    let w0 = ratio_u64(spec.white0());
    // row[r] = E(ff(W_h, r)) for r <= s, advanced one step at a time.
    let mut row: Vec<BigRational> = (0..=s).map(|r| falling_factorial(&w0, r)).collect();
    for h in 0..n {
        let total = spec.initial_total() + h as u64 * spec.mc();
        let mut next = vec![BigRational::one(); s + 1];
        for r in 1..=s {
            let mut acc = BigRational::zero();
            for l in 0..=r.min(m as usize) {
                acc += BigRational::new(
                    binom_big(r as u64, l as u64) * binom_big(m, l as u64),
                    binom_big(total, l as u64),
                );
            }
            let mut value = acc * &row[r];
            for i in 1..=r {
                let mut weight = BigRational::zero();
                for l in i..=r {
                    let numer = binom_big(r as u64, l as u64)
                        * binom_big(m, l as u64)
                        * binom_big((r - l) as u64, i as u64)
                        * binom_big(l as u64, i as u64);
                    weight += BigRational::new(numer, binom_big(total, l as u64));
                }
                value += BigRational::from_integer(crate::combinatorics::factorial(i))
                    * weight
                    * &row[r - i];
            }
            next[r] = value;
        }
        row = next;
    }
    Ok(row[s].clone())
}

/// Sum and product of the second-moment characteristic pair, as exact
/// rationals: the lambda pair for M/MC, the mu pair for R.
pub fn second_moment_characteristic_pair(spec: &UrnSpec) -> Result<(BigRational, BigRational)> {
    let t0 = ratio_u64(spec.initial_total());
    let mc = ratio_u64(spec.mc());
    let one = BigRational::one();
    match spec.model {
        ModelKind::M | ModelKind::MC => {
            let two = ratio_u64(2);
            let sum = &two + (&two * &t0 - &one) / &mc;
            let m = ratio_u64(u64::from(spec.m));
            let prod = (&two + &t0 / &mc) * (&t0 - &one) / &mc + &one - &one / m;
            Ok((sum, prod))
        }
        ModelKind::R => {
            let sum = ratio_u64(2) * (&t0 + &mc) / &mc;
            let c2m = ratio_u64(u64::from(spec.c) * u64::from(spec.c) * u64::from(spec.m));
            let prod = ((&t0 + &mc) * (&t0 + &mc) - c2m) / (&mc * &mc);
            Ok((sum, prod))
        }
        model => Err(UrnError::UnsupportedModel {
            model,
            operation: "second_moment_characteristic_pair",
        }),
    }
}

/// `prod_{t=0}^{n-1} (t^2 + t*sum + prod) / ((t + a)(t + b))`, exactly.
/// Numerator and denominator accumulate as integers with only occasional
/// reduction, so each step multiplies a big value by a small one.
fn quadratic_ratio_product(
    sum: &BigRational,
    prod: &BigRational,
    a: &BigRational,
    b: &BigRational,
    n: usize,
) -> BigRational {
    let mut numerator = BigInt::one();
    let mut denominator = BigInt::one();
    for t in 0..n {
        let t_r = ratio_u64(t as u64);
        let factor = (&t_r * &t_r + &t_r * sum + prod) / ((&t_r + a) * (&t_r + b));
        numerator *= factor.numer();
        denominator *= factor.denom();
        if t % 256 == 255 {
            let g = numerator.gcd(&denominator);
            if !g.is_one() {
                numerator /= &g;
                denominator /= &g;
            }
        }
    }
    BigRational::new(numerator, denominator)
}

/// Second moment `E(W_n^2)` through the closed form, with the multiplier in
/// its factored shape evaluated via the symmetric functions of the
/// characteristic pair and the drift in its telescoped closed form. An
/// algebraic route independent of the Stirling-sum recurrence.
///
/// The solved form `prod * (W0^2 + sum of drift/partial-products)` is
/// accumulated Horner-style as one integer pair, so each step is
/// multiplicative and stays cheap at large `n`.
pub fn closed_second_moment(spec: &UrnSpec, n: usize) -> Result<BigRational> {
    require_recurrence_model(spec, "closed_second_moment")?;
    spec.validate()?;
    let (sum, prod) = second_moment_characteristic_pair(spec)?;
    let t0 = ratio_u64(spec.initial_total());
    let mc = ratio_u64(spec.mc());
    let (a, b) = match spec.model {
        ModelKind::M => (&t0 / &mc, (&t0 - BigRational::one()) / &mc),
        ModelKind::R => (&t0 / &mc, &t0 / &mc),
        _ => unreachable!(),
    };
    let drift_scale = ratio_u64(spec.white0())
        * ratio_u64(u64::from(spec.c) * u64::from(spec.c) * u64::from(spec.m))
        / &t0;
    let m_r = ratio_u64(u64::from(spec.m));
    let w0 = BigInt::from(spec.white0());
    let mut numerator = &w0 * &w0;
    let mut denominator = BigInt::one();
    for t in 0..n {
        let t_r = ratio_u64(t as u64);
        let factor_numer = &t_r * &t_r + &t_r * &sum + &prod;
        let factor_denom = (&t_r + &a) * (&t_r + &b);
        let multiplier = factor_numer / factor_denom;
        let total = ratio_u64(spec.initial_total() + t as u64 * spec.mc());
        let drift = match spec.model {
            ModelKind::M => &drift_scale * (&total - &m_r) / (&total - BigRational::one()),
            ModelKind::R => drift_scale.clone(),
            _ => unreachable!(),
        };
        numerator = multiplier.numer() * numerator * drift.denom()
            + drift.numer() * multiplier.denom() * &denominator;
        denominator = multiplier.denom() * denominator * drift.denom();
        if t % 256 == 255 {
            let g = numerator.gcd(&denominator);
            if !g.is_one() {
                numerator /= &g;
                denominator /= &g;
            }
        }
    }
    Ok(BigRational::new(numerator, denominator))
}

/// `prod_{l=0}^{n-1} multiplier(l, 2)` for the M-type kernel, evaluated via
/// the symmetric functions of the lambda pair. This is the factor carrying
/// the mixed moment `E(X_{n,i} X_{n,j}) = P_n X0_i X0_j` of the multi-color
/// model.
pub fn covariance_product_factor(spec: &UrnSpec, n: usize) -> Result<BigRational> {
    if !matches!(spec.model, ModelKind::MC | ModelKind::M) {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "covariance_product_factor",
        });
    }
    let (sum, prod) = second_moment_characteristic_pair(spec)?;
    let t0 = ratio_u64(spec.initial_total());
    let mc = ratio_u64(spec.mc());
    let a = &t0 / &mc;
    let b = (&t0 - BigRational::one()) / &mc;
    Ok(quadratic_ratio_product(&sum, &prod, &a, &b, n))
}

/// Exact covariance of two colors of the multi-color model:
/// `X0_i X0_j * (P_n - (T_n / T0)^2)`.
pub fn covariance_multicolor(
    spec: &UrnSpec,
    n: usize,
    i: usize,
    j: usize,
) -> Result<BigRational> {
    if spec.model != ModelKind::MC || spec.num_colors() < 3 {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "covariance_multicolor (needs MC with r >= 3)",
        });
    }
    if i == j {
        return Err(UrnError::SameColor(i));
    }
    let r = spec.num_colors();
    if i >= r || j >= r {
        return Err(UrnError::OutOfRangeState(format!(
            "color pair ({i}, {j}) out of range (r = {r})"
        )));
    }
    let product = covariance_product_factor(spec, n)?;
    let tn = ratio_u64(spec.total_balls(n)?);
    let t0 = ratio_u64(spec.initial_total());
    let scale = ratio_u64(spec.counts[i]) * ratio_u64(spec.counts[j]);
    Ok(scale * (product - (&tn / &t0) * (&tn / &t0)))
}

/// Friedman martingale coefficients: `phi_n = T_{n-1}/T0` for `n >= 1` with
/// `phi_0 = (T0 - mc)/T0`, and `psi_n = -c m sum_{k<n} T_k / T0`.
pub fn friedman_martingale_coefficients(
    spec: &UrnSpec,
    n: usize,
) -> Result<MartingaleCoefficients> {
    if !spec.model.is_friedman() {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "friedman_martingale_coefficients",
        });
    }
    spec.validate()?;
    let t0 = BigInt::from(spec.initial_total());
    let mc = BigInt::from(spec.mc());
    let phi = if n == 0 {
        BigRational::new(&t0 - &mc, t0.clone())
    } else {
        BigRational::new(&t0 + BigInt::from((n - 1) as u64) * &mc, t0.clone())
    };
    // sum_{k=0}^{n-1} T_k = n T0 + mc n(n-1)/2.
    let n_big = BigInt::from(n as u64);
    let partial = &n_big * &t0 + &mc * &n_big * (&n_big - BigInt::one()) / BigInt::from(2);
    let psi = BigRational::new(-(&mc * partial), t0);
    Ok(MartingaleCoefficients { phi, psi, n })
}

/// Normalized-limit scaling check: `E(W_n^s) <= (n m c + T0)^s`.
pub fn growth_bound(spec: &UrnSpec, n: usize, s: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(spec.initial_total() + n as u64 * spec.mc()).pow(s))
}

/// Converts an exact moment to `f64`; helper for normalized-ratio checks.
pub fn moment_ratio_f64(value: &BigRational, n: usize, s: usize) -> f64 {
    ratio_to_f64(value) / (n as f64).powi(s as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution_oracle::exact_distribution;
    use crate::rational::ratio_i64;

    fn spec_m_2_1() -> UrnSpec {
        UrnSpec::two_color(ModelKind::M, 2, 1, 2, 1).unwrap()
    }

    #[test]
    fn model_m_coefficients_at_origin() {
        let spec = spec_m_2_1();
        let table = MomentTable::build(&spec, 0, 1).unwrap();
        let coeffs = recurrence_coefficients(&spec, 0, 2, &table).unwrap();
        assert_eq!(coeffs.multiplier, ratio_i64(8, 3));
        assert_eq!(coeffs.inhomogeneous, ratio_i64(2, 3));
    }

    #[test]
    fn model_r_coefficients_at_origin() {
        let spec = UrnSpec::two_color(ModelKind::R, 2, 1, 1, 1).unwrap();
        let table = MomentTable::build(&spec, 0, 1).unwrap();
        let coeffs = recurrence_coefficients(&spec, 0, 2, &table).unwrap();
        assert_eq!(coeffs.multiplier, ratio_i64(7, 2));
        assert_eq!(coeffs.inhomogeneous, ratio_i64(1, 1));
        // One-step second moment = multiplier * W0^2 + drift = 9/2.
        assert_eq!(moment(&spec, 1, 2).unwrap(), ratio_i64(9, 2));
    }

    #[test]
    fn order_one_multiplier_is_total_ratio() {
        for model in [ModelKind::M, ModelKind::R] {
            let spec = UrnSpec::two_color(model, 3, 2, 3, 2).unwrap();
            let table = MomentTable::build(&spec, 5, 1).unwrap();
            for n in 0..5 {
                let coeffs = recurrence_coefficients(&spec, n, 1, &table).unwrap();
                let expected = BigRational::new(
                    BigInt::from(spec.total_balls(n + 1).unwrap()),
                    BigInt::from(spec.total_balls(n).unwrap()),
                );
                assert_eq!(coeffs.multiplier, expected);
                assert!(coeffs.inhomogeneous.is_zero());
            }
        }
    }

    #[test]
    fn missing_moment_is_reported() {
        let spec = spec_m_2_1();
        let table = MomentTable::build(&spec, 0, 1).unwrap();
        let err = recurrence_coefficients(&spec, 0, 3, &table).unwrap_err();
        assert_eq!(err, UrnError::MissingMoment { n: 0, s: 2 });
    }

    #[test]
    fn pinned_moments_model_m() {
        let spec = spec_m_2_1();
        assert_eq!(moment(&spec, 1, 1).unwrap(), ratio_i64(10, 3));
        assert_eq!(moment(&spec, 1, 2).unwrap(), ratio_i64(34, 3));
        assert_eq!(moment(&spec, 0, 3).unwrap(), ratio_i64(8, 1));
    }

    #[test]
    fn engine_reduction_is_transparent() {
        let spec = spec_m_2_1();
        let mut a = MomentEngine::new(&spec, 2).unwrap();
        let mut b = MomentEngine::new(&spec, 2).unwrap();
        a.advance_to(20);
        b.advance_to(7);
        b.reduce();
        b.advance_to(20);
        assert_eq!(a.moment(2), b.moment(2));
    }

    #[test]
    fn closed_form_expectation_pinned() {
        let spec = spec_m_2_1();
        assert_eq!(closed_form_expectation(&spec, 1).unwrap(), ratio_i64(10, 3));

        let fm_equal = UrnSpec::two_color(ModelKind::FM, 2, 1, 1, 1).unwrap();
        assert_eq!(closed_form_expectation(&fm_equal, 4).unwrap(), ratio_i64(5, 1));
        assert_eq!(closed_form_expectation(&fm_equal, 0).unwrap(), ratio_i64(1, 1));

        let fm = UrnSpec::two_color(ModelKind::FM, 2, 1, 2, 1).unwrap();
        assert_eq!(closed_form_expectation(&fm, 1).unwrap(), ratio_i64(8, 3));
    }

    #[test]
    fn friedman_expectation_matches_one_step_kernel() {
        // E(W_1) = W0 + c(m - m W0 / T0) for FM and FR alike.
        for model in [ModelKind::FM, ModelKind::FR] {
            let spec = UrnSpec::two_color(model, 2, 3, 4, 3).unwrap();
            let expected = ratio_i64(4, 1)
                + ratio_i64(3, 1) * (ratio_i64(2, 1) - ratio_i64(2 * 4, 7));
            assert_eq!(closed_form_expectation(&spec, 1).unwrap(), expected);
        }
    }

    #[test]
    fn factorial_moments_pinned() {
        let spec = spec_m_2_1();
        assert_eq!(factorial_moment_c1(&spec, 1, 1).unwrap(), ratio_i64(10, 3));
        assert_eq!(factorial_moment_c1(&spec, 1, 2).unwrap(), ratio_i64(8, 1));
        assert_eq!(
            factorial_moment_c1(&spec, 0, 3).unwrap(),
            falling_factorial(&ratio_i64(2, 1), 3)
        );
        let c2 = UrnSpec::two_color(ModelKind::M, 2, 2, 2, 1).unwrap();
        assert_eq!(
            factorial_moment_c1(&c2, 1, 1).unwrap_err(),
            UrnError::RequiresCEquals1(2)
        );
    }

    #[test]
    fn covariance_pinned_values() {
        let spec = UrnSpec::multicolor(2, 1, vec![1, 1, 1]).unwrap();
        assert_eq!(covariance_multicolor(&spec, 0, 0, 1).unwrap(), ratio_i64(0, 1));
        assert_eq!(covariance_multicolor(&spec, 1, 0, 1).unwrap(), ratio_i64(-1, 9));
        assert_eq!(covariance_product_factor(&spec, 1).unwrap(), ratio_i64(8, 3));
        assert_eq!(
            covariance_multicolor(&spec, 1, 1, 1).unwrap_err(),
            UrnError::SameColor(1)
        );
    }

    #[test]
    fn covariance_matches_joint_enumeration() {
        let spec = UrnSpec::multicolor(2, 1, vec![1, 1, 1]).unwrap();
        for n in 0..=3 {
            let dist = exact_distribution(&spec, n).unwrap();
            let mut powers = vec![0usize; 3];
            powers[0] = 1;
            powers[1] = 1;
            let joint = dist.joint_moment(&powers).unwrap();
            let e_i = multicolor_expectation(&spec, n, 0).unwrap();
            let e_j = multicolor_expectation(&spec, n, 1).unwrap();
            assert_eq!(
                covariance_multicolor(&spec, n, 0, 1).unwrap(),
                joint - e_i * e_j
            );
        }
    }

    #[test]
    fn friedman_martingale_coefficients_pinned() {
        let spec = UrnSpec::two_color(ModelKind::FM, 2, 1, 1, 1).unwrap();
        let at1 = friedman_martingale_coefficients(&spec, 1).unwrap();
        assert_eq!(at1.phi, ratio_i64(1, 1));
        assert_eq!(at1.psi, ratio_i64(-2, 1));
        let at0 = friedman_martingale_coefficients(&spec, 0).unwrap();
        assert_eq!(at0.phi, ratio_i64(0, 1));
        assert_eq!(at0.psi, ratio_i64(0, 1));

        let wider = UrnSpec::two_color(ModelKind::FR, 2, 1, 2, 1).unwrap();
        let at2 = friedman_martingale_coefficients(&wider, 2).unwrap();
        assert_eq!(at2.phi, ratio_i64(5, 3));
        assert_eq!(at2.psi, ratio_i64(-16, 3));
    }

    #[test]
    fn closed_second_moment_matches_recurrence() {
        for model in [ModelKind::M, ModelKind::R] {
            let spec = UrnSpec::two_color(model, 2, 1, 2, 1).unwrap();
            for n in [0, 1, 2, 5, 12] {
                assert_eq!(
                    closed_second_moment(&spec, n).unwrap(),
                    moment(&spec, n, 2).unwrap(),
                    "model {model} n={n}"
                );
            }
        }
    }

    #[test]
    fn f64_twins_agree_with_exact_coefficients() {
        let cache = StirlingCache::new(4);
        for model in [ModelKind::M, ModelKind::R] {
            let spec = UrnSpec::two_color(model, 3, 2, 3, 2).unwrap();
            for n in [0usize, 3, 50] {
                for s in 1..=4 {
                    let exact = ratio_to_f64(&growth_factor(&spec, n, s));
                    let fast = growth_factor_f64(&spec, n, s);
                    assert!((exact - fast).abs() <= 1e-12 * exact.abs());
                    let exact_w = drift_weights(&spec, &cache, n, s);
                    let fast_w = drift_weights_f64(&spec, &cache, n, s);
                    for (r, w) in &fast_w {
                        let reference = exact_w
                            .iter()
                            .find(|(er, _)| er == r)
                            .map(|(_, ew)| ratio_to_f64(ew))
                            .unwrap_or(0.0);
                        assert!((reference - w).abs() <= 1e-12 * (1.0 + reference.abs()));
                    }
                }
            }
        }
    }
}
