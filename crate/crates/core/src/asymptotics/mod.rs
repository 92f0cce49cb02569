//! Characteristic polynomials of the moment recurrences, their (negated)
//! roots, Gamma-product prefactors, and the convergent series giving the
//! normalized limit moments `lim E(W_n^s) / n^s`, plus the multi-color
//! covariance limit.

pub mod gamma;
mod poly;
mod roots;

use crate::combinatorics::{binomial_u64, factorial, StirlingCache};
use crate::error::{Result, UrnError};
use crate::exact_moments::{
    drift_weights, drift_weights_f64, growth_factor, growth_factor_f64, MomentEngine,
};
use crate::rational::{ratio_to_f64, ratio_u64};
use crate::urn_model::{ModelKind, UrnSpec};
use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::traits::Pow;
use num::{One, Signed, Zero};
use poly::RationalPoly;

/// Monic degree-`s` polynomial whose negated roots drive the `s`-th moment
/// asymptotics.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicPolynomial {
    pub spec: UrnSpec,
    pub s: usize,
    /// Ascending coefficients; `coefficients[s] == 1`.
    pub coefficients: Vec<BigRational>,
}

/// The negated roots (the positive characteristic values), their raw
/// residuals `|p(-root)|`, and the normalized tolerance they met.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub tolerance: f64,
}

/// A truncated limit evaluation: `value = prefactor * series`, with the
/// series tail bounded by `tail_bound <=` the requested tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitResult {
    pub value: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
    pub prefactor: f64,
}

fn require_limit_model(spec: &UrnSpec, operation: &'static str) -> Result<()> {
    match spec.model {
        ModelKind::M | ModelKind::R => Ok(()),
        model => Err(UrnError::UnsupportedModel { model, operation }),
    }
}

/// Exact characteristic polynomial of the order-`s` recurrence multiplier.
///
/// Model M: `s!/(mc)^s * sum_l c^l C(m,l) C(x mc + T0 - l, s - l)`.
/// Model R: `(mc)^{-s} * sum_l C(s,l) C(m,l) c^l l! (x mc + T0)^{s-l}`.
pub fn characteristic_polynomial(spec: &UrnSpec, s: usize) -> Result<CharacteristicPolynomial> {
    require_limit_model(spec, "characteristic_polynomial")?;
    if s == 0 {
        return Err(UrnError::BadParameter("order s must be >= 1".into()));
    }
    spec.validate()?;
    let m = u64::from(spec.m);
    let mc = ratio_u64(spec.mc());
    let t0 = spec.initial_total() as i64;
    let c_big = BigInt::from(spec.c);
    let mut p = RationalPoly::zero();
    for l in 0..=s.min(m as usize) {
        let scale_int = binomial_u64(m, l as u64) * c_big.clone().pow(l);
        match spec.model {
            ModelKind::M => {
                let mut q = RationalPoly::constant(BigRational::new(
                    scale_int,
                    factorial(s - l),
                ));
                for t in 0..(s - l) {
                    let intercept = BigRational::from_integer(BigInt::from(
                        t0 - l as i64 - t as i64,
                    ));
                    q = q.mul(&RationalPoly::linear(mc.clone(), intercept));
                }
                p = p.add(&q);
            }
            ModelKind::R => {
                let coefficient = BigRational::from_integer(
                    binomial_u64(s as u64, l as u64) * scale_int * factorial(l),
                );
                let base = RationalPoly::linear(mc.clone(), ratio_u64(spec.initial_total()));
                let mut q = RationalPoly::constant(coefficient);
                for _ in 0..(s - l) {
                    q = q.mul(&base);
                }
                p = p.add(&q);
            }
            _ => unreachable!(),
        }
    }
    let overall = match spec.model {
        ModelKind::M => BigRational::new(factorial(s), BigInt::from(spec.mc()).pow(s)),
        ModelKind::R => BigRational::new(BigInt::one(), BigInt::from(spec.mc()).pow(s)),
        _ => unreachable!(),
    };
    let p = p.scale(&overall).trimmed();
    let coefficients = p.coeffs().to_vec();
    assert_eq!(coefficients.len(), s + 1, "characteristic polynomial degree");
    assert!(coefficients[s].is_one(), "characteristic polynomial is monic");
    Ok(CharacteristicPolynomial {
        spec: spec.clone(),
        s,
        coefficients,
    })
}

/// The model-M root-sum identity `(s T0 - C(s,2)) / (mc) + s`, exactly.
pub fn model_m_root_sum_target(spec: &UrnSpec, s: usize) -> BigRational {
    let t0 = ratio_u64(spec.initial_total());
    let s_r = ratio_u64(s as u64);
    let pairs = ratio_u64((s as u64) * (s as u64 - 1) / 2);
    (&s_r * t0 - pairs) / ratio_u64(spec.mc()) + s_r
}

/// Extracts all `s` negated roots, verifying residuals (and, for model M,
/// the root-sum identity) against `tol`.
pub fn characteristic_roots(poly: &CharacteristicPolynomial, tol: f64) -> Result<RootSet> {
    if tol <= 0.0 {
        return Err(UrnError::BadParameter("tolerance must be positive".into()));
    }
    let coeffs: Vec<f64> = poly.coefficients.iter().map(ratio_to_f64).collect();
    let mut negated: Vec<Complex64> = roots::monic_roots(&coeffs)
        .into_iter()
        .map(|z| -z)
        .collect();
    // Largest characteristic value first.
    negated.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let mut residuals = Vec::with_capacity(negated.len());
    for lambda in &negated {
        let at = -lambda;
        let residual = roots::eval(&coeffs, at).norm();
        // Backward-error normalization: |p(x)| / sum |c_i| |x|^i.
        let scale: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.abs() * at.norm().powi(i as i32))
            .sum();
        if residual > tol * scale.max(1.0) {
            return Err(UrnError::RootFindingFailed {
                residual: residual / scale.max(1.0),
                tolerance: tol,
            });
        }
        residuals.push(residual);
    }
    if poly.spec.model == ModelKind::M {
        let target = ratio_to_f64(&model_m_root_sum_target(&poly.spec, poly.s));
        let total: Complex64 = negated.iter().sum();
        let gap = (total - target).norm();
        if gap > tol * target.abs().max(1.0) {
            return Err(UrnError::RootFindingFailed {
                residual: gap,
                tolerance: tol,
            });
        }
    }
    Ok(RootSet {
        roots: negated,
        residuals,
        tolerance: tol,
    })
}

/// Exact s = 1 limit `W0 m c / T0` of `E(W_n)/n` (models M and R).
pub fn normalized_expectation_limit(spec: &UrnSpec) -> Result<BigRational> {
    require_limit_model(spec, "normalized_expectation_limit")?;
    spec.validate()?;
    Ok(BigRational::new(
        BigInt::from(spec.white0()) * BigInt::from(spec.mc()),
        BigInt::from(spec.initial_total()),
    ))
}

/// Gamma-product prefactor of the normalized limit.
///
/// Model M pairs each pole of the numerator arguments `(T0 + 1 - l)/(mc)`
/// (a non-positive integer) with the characteristic root equal to it; such a
/// pair contributes exactly 1 and is cancelled before evaluating Gamma.
fn gamma_prefactor(spec: &UrnSpec, s: usize, root_set: &RootSet) -> Result<f64> {
    let mc = spec.mc();
    let t0 = spec.initial_total();
    let mut numerator_args: Vec<BigRational> = match spec.model {
        ModelKind::M => (1..=s as i64)
            .map(|l| {
                BigRational::new(BigInt::from(t0 as i64 + 1 - l), BigInt::from(mc))
            })
            .collect(),
        ModelKind::R => vec![BigRational::new(BigInt::from(t0), BigInt::from(mc)); s],
        _ => unreachable!(),
    };
    let mut lambdas = root_set.roots.clone();
    // Cancel pole pairs: a non-positive-integer numerator argument always has
    // a matching root (the recurrence multiplier stays finite).
    numerator_args.retain(|nu| {
        let is_pole = nu.denom().is_one() && !nu.numer().is_positive();
        if !is_pole {
            return true;
        }
        let nu_f = ratio_to_f64(nu);
        let matched = lambdas
            .iter()
            .enumerate()
            .filter(|(_, l)| (**l - nu_f).norm() <= 1e-6 * (1.0 + nu_f.abs()))
            .map(|(i, _)| i)
            .next();
        match matched {
            Some(i) => {
                lambdas.remove(i);
                false
            }
            None => true,
        }
    });
    for nu in &numerator_args {
        if nu.denom().is_one() && !nu.numer().is_positive() {
            return Err(UrnError::RootFindingFailed {
                residual: f64::INFINITY,
                tolerance: root_set.tolerance,
            });
        }
    }
    let mut product = Complex64::new(1.0, 0.0);
    for nu in &numerator_args {
        product *= gamma::gamma_real(ratio_to_f64(nu));
    }
    for lambda in &lambdas {
        product /= gamma::gamma(*lambda);
    }
    if !product.is_finite() {
        return Err(UrnError::NonRealResult {
            imaginary_ratio: f64::INFINITY,
        });
    }
    let imaginary_ratio = product.im.abs() / product.norm().max(f64::MIN_POSITIVE);
    if imaginary_ratio > 1e-9 {
        return Err(UrnError::NonRealResult { imaginary_ratio });
    }
    Ok(product.re)
}

/// Lower-order moments feeding the drift terms: exact while within the
/// horizon, then continued in floating point (every quantity involved is
/// positive, so the recurrences are stable).
enum MomentRow {
    Exact(MomentEngine),
    Float { row: Vec<f64>, time: usize },
}

const EXACT_SERIES_HORIZON: usize = 2048;

impl MomentRow {
    fn advance(&mut self, spec: &UrnSpec, cache: &StirlingCache) {
        match self {
            MomentRow::Exact(engine) => {
                engine.step();
                if engine.time() > EXACT_SERIES_HORIZON {
                    let row = engine.row().iter().map(ratio_to_f64).collect();
                    *self = MomentRow::Float {
                        row,
                        time: engine.time(),
                    };
                }
            }
            MomentRow::Float { row, time } => {
                let mut next = vec![1.0; row.len()];
                for r in 1..row.len() {
                    let mut value = growth_factor_f64(spec, *time, r) * row[r];
                    for (rr, w) in drift_weights_f64(spec, cache, *time, r) {
                        value += w * row[rr];
                    }
                    next[r] = value;
                }
                *row = next;
                *time += 1;
            }
        }
    }
}

/// Normalized limit moment `lim_{n->inf} E(W_n^s)/n^s` for models M and R.
///
/// The drift series is truncated once the empirical `O(1/l^2)` tail bound,
/// scaled by the prefactor, drops below `tol`: the bound constant is fitted
/// as `max(term_l * l^2)` over the 16 most recent terms and the tail beyond
/// `L` is bounded by `constant / L`.
pub fn normalized_moment_limit(
    spec: &UrnSpec,
    s: usize,
    tol: f64,
    max_terms: usize,
) -> Result<LimitResult> {
    require_limit_model(spec, "normalized_moment_limit")?;
    spec.validate()?;
    if s == 0 {
        return Err(UrnError::BadParameter("order s must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(UrnError::BadParameter("tolerance must be positive".into()));
    }
    if s == 1 {
        // Exact: the prefactor collapses to mc/T0 and the drift vanishes.
        let exact = normalized_expectation_limit(spec)?;
        let prefactor = spec.mc() as f64 / spec.initial_total() as f64;
        return Ok(LimitResult {
            value: ratio_to_f64(&exact),
            terms_used: 0,
            tail_bound: 0.0,
            prefactor,
        });
    }
    let poly = characteristic_polynomial(spec, s)?;
    let root_set = characteristic_roots(&poly, 1e-9)?;
    let prefactor = gamma_prefactor(spec, s, &root_set)?;

    let cache = StirlingCache::new(s);
    let mut moments = MomentRow::Exact(MomentEngine::new(spec, s - 1)?);
    let mut sum = (spec.white0() as f64).powi(s as i32);
    let mut alpha_product = 1.0f64;
    let mut recent = [0.0f64; 16];
    for l in 0..max_terms {
        let (alpha, drift) = match &moments {
            MomentRow::Exact(engine) => {
                debug_assert_eq!(engine.time(), l);
                let alpha = ratio_to_f64(&growth_factor(spec, l, s));
                let mut drift_exact = BigRational::zero();
                for (r, w) in drift_weights(spec, &cache, l, s) {
                    drift_exact += w * engine.moment(r);
                }
                (alpha, ratio_to_f64(&drift_exact))
            }
            MomentRow::Float { row, time } => {
                debug_assert_eq!(*time, l);
                let alpha = growth_factor_f64(spec, l, s);
                let drift = drift_weights_f64(spec, &cache, l, s)
                    .iter()
                    .map(|(r, w)| w * row[*r])
                    .sum();
                (alpha, drift)
            }
        };
        alpha_product *= alpha;
        let term = drift / alpha_product;
        sum += term;
        recent[l % recent.len()] = term.abs() * ((l + 1) as f64).powi(2);
        moments.advance(spec, &cache);

        if l + 1 >= recent.len() {
            let constant = recent.iter().cloned().fold(0.0, f64::max);
            let tail_bound = prefactor.abs() * constant / (l + 1) as f64;
            if tail_bound <= tol {
                return Ok(LimitResult {
                    value: prefactor * sum,
                    terms_used: l + 1,
                    tail_bound,
                    prefactor,
                });
            }
        }
    }
    let constant = recent.iter().cloned().fold(0.0, f64::max);
    Err(UrnError::NoConvergence {
        max_terms,
        tail_bound: prefactor.abs() * constant / max_terms.max(1) as f64,
    })
}

/// The lambda pair of the second-moment multiplier, as floats:
/// `(-1/2 + mc + T0 +- sqrt(1 + 4mc(1+c))/2) / (mc)`.
pub fn lambda_pair_f64(spec: &UrnSpec) -> (f64, f64) {
    let mc = spec.mc() as f64;
    let t0 = spec.initial_total() as f64;
    let c = f64::from(spec.c);
    let half_sqrt = 0.5 * (1.0 + 4.0 * mc * (1.0 + c)).sqrt();
    let base = -0.5 + mc + t0;
    ((base + half_sqrt) / mc, (base - half_sqrt) / mc)
}

/// The Gamma-ratio factor `Gamma(T0/mc) Gamma((T0-1)/mc) / (Gamma(l1) Gamma(l2))`
/// of the covariance limit; equals `lim P_n / n^2` for the exact mixed-moment
/// product factor `P_n`.
pub fn covariance_gamma_ratio(spec: &UrnSpec) -> Result<f64> {
    if spec.model != ModelKind::MC && spec.model != ModelKind::M {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "covariance_gamma_ratio",
        });
    }
    let mc = spec.mc() as f64;
    let t0 = spec.initial_total() as f64;
    let (l1, l2) = lambda_pair_f64(spec);
    Ok(gamma::gamma_real(t0 / mc) * gamma::gamma_real((t0 - 1.0) / mc)
        / (gamma::gamma_real(l1) * gamma::gamma_real(l2)))
}

/// Covariance limit of two colors of the multi-color model:
/// `X0_i X0_j (Gamma-ratio - (mc)^2 / T0^2)`.
pub fn covariance_limit(spec: &UrnSpec, i: usize, j: usize) -> Result<f64> {
    if spec.model != ModelKind::MC || spec.num_colors() < 3 {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "covariance_limit (needs MC with r >= 3)",
        });
    }
    if i == j {
        return Err(UrnError::SameColor(i));
    }
    if i >= spec.num_colors() || j >= spec.num_colors() {
        return Err(UrnError::OutOfRangeState(format!(
            "color pair ({i}, {j}) out of range (r = {})",
            spec.num_colors()
        )));
    }
    spec.validate()?;
    let mc = spec.mc() as f64;
    let t0 = spec.initial_total() as f64;
    let scale = (spec.counts[i] * spec.counts[j]) as f64;
    Ok(scale * (covariance_gamma_ratio(spec)? - (mc / t0) * (mc / t0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio_i64;

    #[test]
    fn model_m_polynomials_pinned() {
        // s=1: x + (T0 + cm)/(mc).
        let spec = UrnSpec::two_color(ModelKind::M, 2, 1, 2, 1).unwrap();
        let p = characteristic_polynomial(&spec, 1).unwrap();
        assert_eq!(p.coefficients, vec![ratio_i64(5, 2), ratio_i64(1, 1)]);
        // s=2, m=2, c=1, T0=3: x^2 + (9/2) x + 4.
        let p = characteristic_polynomial(&spec, 2).unwrap();
        assert_eq!(
            p.coefficients,
            vec![ratio_i64(4, 1), ratio_i64(9, 2), ratio_i64(1, 1)]
        );
    }

    #[test]
    fn model_r_polynomial_pinned() {
        // s=2, m=2, c=1, T0=2: x^2 + 4x + 7/2.
        let spec = UrnSpec::two_color(ModelKind::R, 2, 1, 1, 1).unwrap();
        let p = characteristic_polynomial(&spec, 2).unwrap();
        assert_eq!(
            p.coefficients,
            vec![ratio_i64(7, 2), ratio_i64(4, 1), ratio_i64(1, 1)]
        );
    }

    #[test]
    fn subleading_coefficient_is_the_root_sum() {
        for (m, c, w0, b0) in [(2u32, 1u32, 2u64, 1u64), (3, 2, 3, 2), (2, 2, 1, 1)] {
            let spec = UrnSpec::two_color(ModelKind::M, m, c, w0, b0).unwrap();
            for s in 1..=6 {
                let p = characteristic_polynomial(&spec, s).unwrap();
                assert_eq!(
                    p.coefficients[s - 1],
                    model_m_root_sum_target(&spec, s),
                    "m={m} c={c} s={s}"
                );
            }
        }
    }

    #[test]
    fn multiplier_factors_through_the_polynomial() {
        // multiplier(j, s) = p(j) / prod_l (j + nu_l) exactly, where nu_l are
        // the denominator arguments of the Gamma prefactor.
        use crate::exact_moments::growth_factor;
        for model in [ModelKind::M, ModelKind::R] {
            let spec = UrnSpec::two_color(model, 2, 1, 3, 2).unwrap();
            let t0 = spec.initial_total() as i64;
            let mc = spec.mc() as i64;
            for s in 1..=4usize {
                let p = characteristic_polynomial(&spec, s).unwrap();
                for j in 0..6u64 {
                    let x = ratio_u64(j);
                    let mut value = BigRational::from_integer(BigInt::from(0));
                    for c in p.coefficients.iter().rev() {
                        value = value * &x + c;
                    }
                    let mut denom = BigRational::from_integer(BigInt::from(1));
                    for l in 1..=s as i64 {
                        let nu = match model {
                            ModelKind::M => ratio_i64(t0 + 1 - l, mc),
                            _ => ratio_i64(t0, mc),
                        };
                        denom *= &x + nu;
                    }
                    assert_eq!(value / denom, growth_factor(&spec, j as usize, s));
                }
            }
        }
    }

    #[test]
    fn pinned_roots_model_m() {
        let spec = UrnSpec::two_color(ModelKind::M, 2, 1, 2, 1).unwrap();
        let p = characteristic_polynomial(&spec, 2).unwrap();
        let roots = characteristic_roots(&p, 1e-10).unwrap();
        assert!((roots.roots[0].re - 3.2807764064044151).abs() < 1e-12);
        assert!((roots.roots[1].re - 1.2192235935955849).abs() < 1e-12);
        assert_eq!(roots.roots[0].im, 0.0);

        let linear = characteristic_polynomial(&spec, 1).unwrap();
        let roots = characteristic_roots(&linear, 1e-10).unwrap();
        assert!((roots.roots[0].re - 2.5).abs() < 1e-14);
    }

    #[test]
    fn root_set_reconstructs_polynomial() {
        let spec = UrnSpec::two_color(ModelKind::M, 3, 2, 3, 2).unwrap();
        for s in 1..=5 {
            let p = characteristic_polynomial(&spec, s).unwrap();
            let roots = characteristic_roots(&p, 1e-9).unwrap();
            // Expand prod (x + lambda) and compare coefficients.
            let mut coeffs = vec![Complex64::new(1.0, 0.0)];
            for lambda in &roots.roots {
                let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
                for (i, c) in coeffs.iter().enumerate() {
                    next[i + 1] += c;
                    next[i] += c * lambda;
                }
                coeffs = next;
            }
            for (approx, exact) in coeffs.iter().zip(&p.coefficients) {
                let e = ratio_to_f64(exact);
                assert!(
                    (approx.re - e).abs() <= 1e-8 * (1.0 + e.abs()),
                    "s={s}: {approx} vs {e}"
                );
                assert!(approx.im.abs() <= 1e-8 * (1.0 + e.abs()));
            }
        }
    }

    #[test]
    fn expectation_limit_is_exact() {
        let spec = UrnSpec::two_color(ModelKind::M, 2, 1, 2, 1).unwrap();
        assert_eq!(
            normalized_expectation_limit(&spec).unwrap(),
            ratio_i64(4, 3)
        );
        let limit = normalized_moment_limit(&spec, 1, 1e-12, 10).unwrap();
        assert_eq!(limit.terms_used, 0);
        assert_eq!(limit.tail_bound, 0.0);
        assert!((limit.value - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_convergence_is_reported() {
        let spec = UrnSpec::two_color(ModelKind::M, 2, 1, 2, 1).unwrap();
        let err = normalized_moment_limit(&spec, 2, 1e-12, 40).unwrap_err();
        assert!(matches!(err, UrnError::NoConvergence { max_terms: 40, .. }));
    }

    #[test]
    fn gamma_pole_pairs_cancel_for_small_t0() {
        // T0 = 2, s = 3: one numerator argument is 0 and the polynomial has
        // the matching root 0.
        let spec = UrnSpec::two_color(ModelKind::M, 2, 1, 1, 1).unwrap();
        let p = characteristic_polynomial(&spec, 3).unwrap();
        assert!(p.coefficients[0].is_zero());
        let limit = normalized_moment_limit(&spec, 3, 5e-4, 2_000_000).unwrap();
        assert!(limit.value.is_finite());
        assert!(limit.value > 0.0);
    }

    #[test]
    fn covariance_limit_pinned() {
        let spec = UrnSpec::multicolor(2, 1, vec![1, 1, 1]).unwrap();
        let value = covariance_limit(&spec, 0, 1).unwrap();
        assert!((value - (-0.076)).abs() < 0.002, "{value}");
        // Linear in X0_i X0_j: within one urn, the pair with doubled count
        // product gets double the limit.
        let mixed = UrnSpec::multicolor(2, 1, vec![2, 1, 1]).unwrap();
        let big = covariance_limit(&mixed, 0, 1).unwrap();
        let small = covariance_limit(&mixed, 1, 2).unwrap();
        assert!((big - 2.0 * small).abs() <= 1e-12 * small.abs());
        assert_eq!(
            covariance_limit(&spec, 1, 1).unwrap_err(),
            UrnError::SameColor(1)
        );
    }
}
