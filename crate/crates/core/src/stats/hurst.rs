//! Rescaled-range (R/S) Hurst exponent.
//!
//! Window sizes start at `min_window` and grow in steps of 10^0.25 up to
//! `n / 2`. For each size the series is cut into non-overlapping windows;
//! every window contributes `R / S` where `R` is the range of the
//! mean-adjusted cumulative sum and `S` the sample standard deviation.
//! `H` is the least-squares slope of `log10(mean R/S)` against
//! `log10(size)`. Raw slopes are reported without clamping, so values above
//! 1 are possible on strongly trending input.

use super::special::ln_gamma;
use super::StatsError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HurstClass {
    AntiPersistent,
    RandomWalk,
    Persistent,
}

impl std::fmt::Display for HurstClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HurstClass::AntiPersistent => "anti_persistent",
            HurstClass::RandomWalk => "random_walk",
            HurstClass::Persistent => "persistent",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HurstConfig {
    pub min_length: usize,
    pub min_window: usize,
    /// Half-width of the band around 0.5 classified as a random walk.
    pub band: f64,
    /// Subtract the Anis–Lloyd expected R/S before fitting.
    pub anis_lloyd: bool,
}

impl Default for HurstConfig {
    fn default() -> Self {
        HurstConfig {
            min_length: 100,
            min_window: 10,
            band: 0.05,
            anis_lloyd: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HurstEstimate<T> {
    pub h: T,
    pub classification: HurstClass,
    pub n: usize,
    /// `(window size, mean R/S)` pairs that entered the fit.
    pub points: Vec<(usize, T)>,
}

pub fn classify<T: Real>(h: T, band: f64) -> HurstClass {
    let d = h - T::lit(0.5);
    if d.abs() <= T::lit(band) {
        HurstClass::RandomWalk
    } else if d < T::zero() {
        HurstClass::AntiPersistent
    } else {
        HurstClass::Persistent
    }
}

/// Log-spaced window sizes in `[min_window, n / 2]`.
pub fn window_sizes(n: usize, min_window: usize) -> Vec<usize> {
    let max = n / 2;
    let start = (min_window.max(2) as f64).log10();
    let mut out: Vec<usize> = Vec::new();
    for k in 0.. {
        let w = 10f64.powf(start + 0.25 * k as f64).round() as usize;
        if w > max {
            break;
        }
        if out.last() != Some(&w) {
            out.push(w);
        }
    }
    out
}

fn rescaled_range<T: Real>(window: &[T]) -> Option<T> {
    let m = super::mean(window);
    let mut acc = T::zero();
    let mut lo = T::zero();
    let mut hi = T::zero();
    let mut ss = T::zero();
    for &x in window {
        let d = x - m;
        acc += d;
        lo = lo.min(acc);
        hi = hi.max(acc);
        ss += d * d;
    }
    let r = hi - lo;
    let s = (ss / T::from_usize_lossy(window.len() - 1)).sqrt();
    // A window this flat carries no information; skip it.
    let floor = T::epsilon() * T::lit(64.0) * (m.abs() + T::one());
    if r <= floor || s <= floor {
        None
    } else {
        Some(r / s)
    }
}

/// Expected R/S of white noise for window size `n` (Anis–Lloyd with the
/// Peters small-sample factor).
fn expected_rs<T: Real>(n: usize) -> T {
    let nf = T::from_usize_lossy(n);
    let half = T::lit(0.5);
    let tail: T = (1..n)
        .map(|i| {
            let i = T::from_usize_lossy(i);
            ((nf - i) / i).sqrt()
        })
        .sum();
    let front = if n <= 340 {
        (ln_gamma((nf - T::one()) * half) - ln_gamma(nf * half)).exp() / T::PI().sqrt()
    } else {
        T::one() / (nf * T::FRAC_PI_2()).sqrt()
    };
    (nf - half) / nf * front * tail
}

pub fn hurst<T: Real>(series: &[T], config: &HurstConfig) -> Result<HurstEstimate<T>, StatsError> {
    let n = series.len();
    if n < config.min_length.max(4) {
        return Err(StatsError::TooShort {
            len: n,
            needed: config.min_length.max(4),
        });
    }
    if let Some(i) = series.iter().position(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }
    if series.iter().all(|&x| x == series[0]) {
        return Err(StatsError::Degenerate("constant series".into()));
    }

    let mut points = Vec::new();
    for w in window_sizes(n, config.min_window) {
        let vals: Vec<T> = series.chunks_exact(w).filter_map(rescaled_range).collect();
        if vals.is_empty() {
            continue;
        }
        let mut rs = super::mean(&vals);
        if config.anis_lloyd {
            rs -= expected_rs::<T>(w);
        }
        if rs > T::zero() {
            points.push((w, rs));
        }
    }
    if points.len() < 2 {
        return Err(StatsError::Degenerate(format!(
            "only {} usable window size(s)",
            points.len()
        )));
    }

    let xs: Vec<T> = points
        .iter()
        .map(|&(w, _)| T::from_usize_lossy(w).log10())
        .collect();
    let ys: Vec<T> = points.iter().map(|&(_, rs)| rs.log10()).collect();
    let (mx, my) = (super::mean(&xs), super::mean(&ys));
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let mut h = sxy / sxx;
    if config.anis_lloyd {
        h += T::lit(0.5);
    }
    Ok(HurstEstimate {
        h,
        classification: classify(h, config.band),
        n,
        points,
    })
}
