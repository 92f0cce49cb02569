//! Urn specifications and exact one-step transition kernels.
//!
//! Six model variants are supported. `M` draws a sample of `m` balls without
//! replacement (hypergeometric kernel) and adds `c` balls per observed ball
//! of the same color. `R` is the with-replacement variant (binomial kernel).
//! `FM`/`FR` are the Friedman-style variants adding balls of the opposite
//! color profile. `MC` generalizes model `M` to `r >= 2` colors. `NB` is the
//! non-balanced two-color scheme adding `a` white per observed white and `b`
//! black per observed black; its total ball count is random.

use crate::combinatorics::binomial_u64;
use crate::error::{Result, UrnError};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Pow;
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Model variant selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Multi-draw without replacement.
    M,
    /// Multi-draw with replacement.
    R,
    /// Friedman-style without replacement.
    FM,
    /// Friedman-style with replacement.
    FR,
    /// Multi-color variant of model M.
    MC,
    /// Non-balanced two-color scheme; exact moments are out of scope.
    NB,
}

impl ModelKind {
    pub fn is_balanced_two_color(self) -> bool {
        matches!(self, ModelKind::M | ModelKind::R | ModelKind::FM | ModelKind::FR)
    }

    /// Friedman variants add balls of the color profile opposite to the draw.
    pub fn is_friedman(self) -> bool {
        matches!(self, ModelKind::FM | ModelKind::FR)
    }

    /// True when the sample of m balls is drawn with replacement.
    pub fn draws_with_replacement(self) -> bool {
        matches!(self, ModelKind::R | ModelKind::FR)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ModelKind::M => "M",
            ModelKind::R => "R",
            ModelKind::FM => "FM",
            ModelKind::FR => "FR",
            ModelKind::MC => "MC",
            ModelKind::NB => "NB",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = UrnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M" => Ok(ModelKind::M),
            "R" => Ok(ModelKind::R),
            "FM" => Ok(ModelKind::FM),
            "FR" => Ok(ModelKind::FR),
            "MC" => Ok(ModelKind::MC),
            "NB" => Ok(ModelKind::NB),
            other => Err(UrnError::BadParameter(format!("unknown model '{other}'"))),
        }
    }
}

/// Per-color additions of the non-balanced scheme: `a` white balls per
/// observed white, `b` black balls per observed black.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct NbParams {
    pub a: u32,
    pub b: u32,
}

impl From<[u32; 2]> for NbParams {
    fn from(v: [u32; 2]) -> Self {
        NbParams { a: v[0], b: v[1] }
    }
}

impl From<NbParams> for [u32; 2] {
    fn from(p: NbParams) -> Self {
        [p.a, p.b]
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// The parameter record every engine consumes.
///
/// `counts` holds the initial per-color ball counts: `(W0, B0)` for the
/// two-color models, or `r >= 2` entries for `MC`. For `NB` the increment
/// `c` is unused (the additions are governed by `nb`), and `nb_replacement`
/// selects with-replacement sampling of the `m` balls (default: without).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrnSpec {
    pub model: ModelKind,
    pub m: u32,
    pub c: u32,
    pub counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nb: Option<NbParams>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub nb_replacement: bool,
}

impl UrnSpec {
    /// Two-color spec for models M, R, FM, FR.
    pub fn two_color(model: ModelKind, m: u32, c: u32, white: u64, black: u64) -> Result<Self> {
        let spec = UrnSpec {
            model,
            m,
            c,
            counts: vec![white, black],
            nb: None,
            nb_replacement: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Multi-color spec (model MC).
    pub fn multicolor(m: u32, c: u32, counts: Vec<u64>) -> Result<Self> {
        let spec = UrnSpec {
            model: ModelKind::MC,
            m,
            c,
            counts,
            nb: None,
            nb_replacement: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Non-balanced spec (model NB).
    pub fn non_balanced(
        m: u32,
        white: u64,
        black: u64,
        a: u32,
        b: u32,
        with_replacement: bool,
    ) -> Result<Self> {
        let spec = UrnSpec {
            model: ModelKind::NB,
            m,
            c: 1,
            counts: vec![white, black],
            nb: Some(NbParams { a, b }),
            nb_replacement: with_replacement,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every structural invariant of the record.
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(UrnError::BadParameter("m must be >= 1".into()));
        }
        if self.c < 1 {
            return Err(UrnError::BadParameter("c must be >= 1".into()));
        }
        match self.model {
            ModelKind::MC => {
                if self.counts.len() < 2 {
                    return Err(UrnError::BadParameter(
                        "MC needs at least 2 colors".into(),
                    ));
                }
            }
            _ => {
                if self.counts.len() != 2 {
                    return Err(UrnError::BadParameter(format!(
                        "model {} needs exactly 2 counts, got {}",
                        self.model,
                        self.counts.len()
                    )));
                }
            }
        }
        for (index, count) in self.counts.iter().enumerate() {
            if *count == 0 {
                return Err(UrnError::NonPositiveCount { index });
            }
        }
        let total = self.initial_total();
        if total < u64::from(self.m) {
            return Err(UrnError::DegenerateUrn {
                total,
                m: self.m,
            });
        }
        match (self.model, &self.nb) {
            (ModelKind::NB, None) => {
                return Err(UrnError::ModelMismatch(
                    "model NB requires nb parameters [a, b]".into(),
                ))
            }
            (ModelKind::NB, Some(nb)) => {
                if nb.a < 1 || nb.b < 1 {
                    return Err(UrnError::BadParameter("nb parameters must be >= 1".into()));
                }
            }
            (_, Some(_)) => {
                return Err(UrnError::ModelMismatch(format!(
                    "model {} forbids nb parameters",
                    self.model
                )))
            }
            (_, None) => {}
        }
        if self.nb_replacement && self.model != ModelKind::NB {
            return Err(UrnError::ModelMismatch(
                "nb_replacement only applies to model NB".into(),
            ));
        }
        Ok(())
    }

    pub fn initial_total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// White (first color) count at time zero.
    pub fn white0(&self) -> u64 {
        self.counts[0]
    }

    /// `m * c`, the balanced per-step addition.
    pub fn mc(&self) -> u64 {
        u64::from(self.m) * u64::from(self.c)
    }

    pub fn num_colors(&self) -> usize {
        self.counts.len()
    }

    /// Total balls after `n` draws for the balanced models: T0 + n*m*c.
    pub fn total_balls(&self, n: usize) -> Result<u64> {
        if self.model == ModelKind::NB {
            return Err(UrnError::UnsupportedModel {
                model: self.model,
                operation: "total_balls (NB totals are random)",
            });
        }
        Ok(self.initial_total() + n as u64 * self.mc())
    }
}

/// Validates an urn specification; thin named wrapper over [`UrnSpec::validate`].
pub fn validate_spec(spec: &UrnSpec) -> Result<()> {
    spec.validate()
}

/// One sample outcome of a two-color draw: `drawn_white` of the m balls were
/// white, with exact probability and the signed change of the white count.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub drawn_white: u32,
    pub probability: BigRational,
    pub white_delta: i64,
}

/// Exact one-step law of the number of white balls in the sample.
///
/// Outcomes are listed for every `k` in `0..=m`, including zero-probability
/// ones, in increasing `k` order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDistribution {
    pub time: usize,
    pub outcomes: Vec<Outcome>,
}

impl TransitionDistribution {
    pub fn probability_of(&self, drawn_white: u32) -> BigRational {
        self.outcomes
            .iter()
            .find(|o| o.drawn_white == drawn_white)
            .map(|o| o.probability.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total_mass(&self) -> BigRational {
        self.outcomes.iter().map(|o| &o.probability).sum()
    }
}

/// Hypergeometric mass C(W,k)C(T-W,m-k)/C(T,m); infeasible terms are 0.
pub fn hypergeometric_pmf(total: u64, white: u64, m: u32, k: u32) -> BigRational {
    let m64 = u64::from(m);
    let k64 = u64::from(k);
    if k64 > m64 || white > total || total < m64 {
        return BigRational::zero();
    }
    let numer = binomial_u64(white, k64) * binomial_u64(total - white, m64 - k64);
    BigRational::new(numer, binomial_u64(total, m64))
}

/// Binomial mass C(m,k) W^k (T-W)^(m-k) / T^m.
pub fn binomial_pmf(total: u64, white: u64, m: u32, k: u32) -> BigRational {
    if k > m || white > total || total == 0 {
        return BigRational::zero();
    }
    let w = BigInt::from(white);
    let b = BigInt::from(total - white);
    let numer = binomial_u64(u64::from(m), u64::from(k))
        * w.pow(k)
        * b.pow(m - k);
    BigRational::new(numer, BigInt::from(total).pow(m))
}

/// Exact one-step kernel for the balanced two-color models (M, R, FM, FR).
///
/// `white` is the white count at time `n`; the law describes the sample of
/// the (n+1)-st draw. The white count changes by `c*k` for M/R and by
/// `c*(m-k)` for FM/FR, where `k` is the number of white balls drawn.
pub fn transition_distribution(spec: &UrnSpec, white: u64, n: usize) -> Result<TransitionDistribution> {
    if !spec.model.is_balanced_two_color() {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "transition_distribution (use the MC/NB variants)",
        });
    }
    let total = spec.total_balls(n)?;
    if white > total {
        return Err(UrnError::OutOfRangeState(format!(
            "white={white} exceeds total={total} at time {n}"
        )));
    }
    let c = i64::from(spec.c);
    let m = i64::from(spec.m);
    let outcomes = (0..=spec.m)
        .map(|k| {
            let probability = if spec.model.draws_with_replacement() {
                binomial_pmf(total, white, spec.m, k)
            } else {
                hypergeometric_pmf(total, white, spec.m, k)
            };
            let white_delta = if spec.model.is_friedman() {
                c * (m - i64::from(k))
            } else {
                c * i64::from(k)
            };
            Outcome {
                drawn_white: k,
                probability,
                white_delta,
            }
        })
        .collect();
    Ok(TransitionDistribution { time: n, outcomes })
}

/// One sample outcome for the multi-color model: the drawn composition and
/// its exact probability. Color `i` gains `c * drawn[i]` balls.
#[derive(Debug, Clone, PartialEq)]
pub struct McOutcome {
    pub drawn: Vec<u32>,
    pub probability: BigRational,
}

/// All compositions of `m` into `r` non-negative parts, lexicographic.
pub fn compositions(m: u32, r: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut buf = vec![0u32; r];
    fn rec(buf: &mut Vec<u32>, idx: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
        if idx + 1 == buf.len() {
            buf[idx] = remaining;
            out.push(buf.clone());
            return;
        }
        for v in 0..=remaining {
            buf[idx] = v;
            rec(buf, idx + 1, remaining - v, out);
        }
    }
    if r > 0 {
        rec(&mut buf, 0, m, &mut out);
    }
    out
}

/// Multivariate hypergeometric kernel of the multi-color model.
///
/// `counts` is the full color vector at time `n`. Outcomes cover every
/// composition of `m` into `r` parts in lexicographic order.
pub fn transition_distribution_mc(
    spec: &UrnSpec,
    counts: &[u64],
    n: usize,
) -> Result<Vec<McOutcome>> {
    if spec.model != ModelKind::MC {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "transition_distribution_mc",
        });
    }
    if counts.len() != spec.num_colors() {
        return Err(UrnError::OutOfRangeState(format!(
            "state has {} colors, spec has {}",
            counts.len(),
            spec.num_colors()
        )));
    }
    let total = spec.total_balls(n)?;
    let state_total: u64 = counts.iter().sum();
    if state_total != total {
        return Err(UrnError::OutOfRangeState(format!(
            "state total {state_total} differs from T_{n} = {total}"
        )));
    }
    let denom = binomial_u64(total, u64::from(spec.m));
    Ok(compositions(spec.m, counts.len())
        .into_iter()
        .map(|drawn| {
            let mut numer = BigInt::one();
            for (x, k) in counts.iter().zip(&drawn) {
                numer *= binomial_u64(*x, u64::from(*k));
            }
            McOutcome {
                drawn,
                probability: BigRational::new(numer, denom.clone()),
            }
        })
        .collect())
}

/// One sample outcome of the non-balanced model with the per-color additions.
#[derive(Debug, Clone, PartialEq)]
pub struct NbOutcome {
    pub drawn_white: u32,
    pub probability: BigRational,
    pub white_added: u64,
    pub black_added: u64,
}

/// Kernel of the non-balanced model from the explicit `(white, black)` state.
///
/// Drawing `k` white and `m-k` black adds `k*a` white and `(m-k)*b` black
/// balls. Sampling is hypergeometric, or binomial with `nb_replacement`.
pub fn transition_distribution_nb(
    spec: &UrnSpec,
    white: u64,
    black: u64,
) -> Result<Vec<NbOutcome>> {
    if spec.model != ModelKind::NB {
        return Err(UrnError::UnsupportedModel {
            model: spec.model,
            operation: "transition_distribution_nb",
        });
    }
    let nb = spec.nb.expect("validated NB spec has nb params");
    let total = white + black;
    if total < u64::from(spec.m) && !spec.nb_replacement {
        return Err(UrnError::OutOfRangeState(format!(
            "cannot draw {} balls without replacement from {total}",
            spec.m
        )));
    }
    Ok((0..=spec.m)
        .map(|k| {
            let probability = if spec.nb_replacement {
                binomial_pmf(total, white, spec.m, k)
            } else {
                hypergeometric_pmf(total, white, spec.m, k)
            };
            NbOutcome {
                drawn_white: k,
                probability,
                white_added: u64::from(k) * u64::from(nb.a),
                black_added: u64::from(spec.m - k) * u64::from(nb.b),
            }
        })
        .collect())
}
