//! Predictability statistics: one-way ANOVA, two-sided t-tests, Pearson
//! correlation and the Hurst exponent. Every p-value goes through the
//! in-house incomplete beta in [`special`].

pub mod hurst;
pub mod special;

pub use hurst::{hurst, HurstClass, HurstConfig, HurstEstimate};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} groups, got {got}")]
    TooFewGroups { needed: usize, got: usize },
    #[error("group {group} has {len} observations; at least {needed} required")]
    GroupSize {
        group: usize,
        len: usize,
        needed: usize,
    },
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("correlation undefined: zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("series has {len} points; at least {needed} required")]
    TooShort { len: usize, needed: usize },
    #[error("degenerate series: {0}")]
    Degenerate(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("incomplete beta evaluation failed to converge")]
    NoConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreesOfFreedom<T> {
    One(T),
    Two(T, T),
}

impl<T: Real> std::fmt::Display for DegreesOfFreedom<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DegreesOfFreedom::One(d) => write!(f, "{d:.3}"),
            DegreesOfFreedom::Two(a, b) => write!(f, "({a}, {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult<T> {
    pub statistic: T,
    pub p_value: T,
    pub ci_95: Option<(T, T)>,
    pub df: DegreesOfFreedom<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TTestKind {
    /// Unequal variances, Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Pooled variance, `na + nb − 2` degrees of freedom.
    Pooled,
}

fn check_finite<T: Real>(xs: &[T]) -> Result<(), StatsError> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(StatsError::NonFinite(i)),
        None => Ok(()),
    }
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

/// Sample variance (denominator `n − 1`).
pub fn variance<T: Real>(xs: &[T]) -> T {
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    ss / T::from_usize_lossy(xs.len() - 1)
}

/// One-way ANOVA across `groups`.
pub fn anova_oneway<T: Real>(groups: &[&[T]]) -> Result<TestResult<T>, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups {
            needed: 2,
            got: groups.len(),
        });
    }
    for (i, g) in groups.iter().enumerate() {
        if g.len() < 2 {
            return Err(StatsError::GroupSize {
                group: i,
                len: g.len(),
                needed: 2,
            });
        }
        check_finite(g)?;
    }
    let k = groups.len();
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let grand = groups.iter().flat_map(|g| g.iter().copied()).sum::<T>() / T::from_usize_lossy(n);

    let mut ssb = T::zero();
    let mut ssw = T::zero();
    for g in groups {
        let m = mean(g);
        ssb += T::from_usize_lossy(g.len()) * (m - grand) * (m - grand);
        ssw += g.iter().map(|&x| (x - m) * (x - m)).sum::<T>();
    }
    let d1 = T::from_usize_lossy(k - 1);
    let d2 = T::from_usize_lossy(n - k);
    let df = DegreesOfFreedom::Two(d1, d2);

    // Floating-point residue below this is treated as exact zero.
    let scale = groups
        .iter()
        .flat_map(|g| g.iter())
        .fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let resolution = T::epsilon() * T::lit(64.0) * T::from_usize_lossy(n) * scale;
    let noise = resolution * resolution;
    if ssb <= noise {
        return Ok(TestResult {
            statistic: T::zero(),
            p_value: T::one(),
            ci_95: None,
            df,
        });
    }
    if ssw <= noise {
        return Ok(TestResult {
            statistic: T::infinity(),
            p_value: T::zero(),
            ci_95: None,
            df,
        });
    }
    let f = (ssb / d1) / (ssw / d2);
    let p = special::f_sf(f, d1, d2).ok_or(StatsError::NoConvergence)?;
    Ok(TestResult {
        statistic: f,
        p_value: p,
        ci_95: None,
        df,
    })
}

/// Two-sided two-sample t-test of `mean(a) − mean(b)` with a 95% CI.
pub fn t_test_two_sided<T: Real>(
    a: &[T],
    b: &[T],
    kind: TTestKind,
) -> Result<TestResult<T>, StatsError> {
    for (i, s) in [a, b].iter().enumerate() {
        if s.len() < 2 {
            return Err(StatsError::GroupSize {
                group: i,
                len: s.len(),
                needed: 2,
            });
        }
        check_finite(s)?;
    }
    let (na, nb) = (T::from_usize_lossy(a.len()), T::from_usize_lossy(b.len()));
    let diff = mean(a) - mean(b);
    let (va, vb) = (variance(a), variance(b));
    let one = T::one();

    let (se, df) = match kind {
        TTestKind::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let denom = qa * qa / (na - one) + qb * qb / (nb - one);
            let df = if denom > T::zero() {
                se2 * se2 / denom
            } else {
                na + nb - T::lit(2.0)
            };
            (se2.sqrt(), df)
        }
        TTestKind::Pooled => {
            let df = na + nb - T::lit(2.0);
            let sp2 = ((na - one) * va + (nb - one) * vb) / df;
            ((sp2 * (one / na + one / nb)).sqrt(), df)
        }
    };
    let dof = DegreesOfFreedom::One(df);

    if se == T::zero() {
        // Both samples constant: the limit is either no evidence or certainty.
        return Ok(if diff == T::zero() {
            TestResult {
                statistic: T::zero(),
                p_value: one,
                ci_95: Some((T::zero(), T::zero())),
                df: dof,
            }
        } else {
            TestResult {
                statistic: if diff > T::zero() {
                    T::infinity()
                } else {
                    T::neg_infinity()
                },
                p_value: T::zero(),
                ci_95: Some((diff, diff)),
                df: dof,
            }
        });
    }
    let t = diff / se;
    let p = special::t_two_sided(t, df).ok_or(StatsError::NoConvergence)?;
    let crit = special::t_critical(T::lit(0.05), df).ok_or(StatsError::NoConvergence)?;
    let half = crit * se;
    Ok(TestResult {
        statistic: t,
        p_value: p,
        ci_95: Some((diff - half, diff + half)),
        df: dof,
    })
}

/// Sample Pearson correlation, clamped to `[-1, 1]`.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<T, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort {
            len: x.len(),
            needed: 2,
        });
    }
    check_finite(x)?;
    check_finite(y)?;
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == T::zero() {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == T::zero() {
        return Err(StatsError::ZeroVariance("y"));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}
