//! Closed intervals and the handful of operations the estimation pipeline
//! needs. This is not a general interval-arithmetic library: there is no
//! subtraction, no signed multiplication and no outward rounding.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959964;

/// A closed interval `[lb, ub]` with `lb <= ub`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct Interval {
    lb: f64,
    ub: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    lb: f64,
    ub: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self> {
        Interval::new(raw.lb, raw.ub)
    }
}

impl From<Interval> for RawInterval {
    fn from(iv: Interval) -> Self {
        RawInterval {
            lb: iv.lb,
            ub: iv.ub,
        }
    }
}

impl Interval {
    /// Rejects `lb > ub` and non-finite endpoints.
    pub fn new(lb: f64, ub: f64) -> Result<Self> {
        if !lb.is_finite() || !ub.is_finite() || lb > ub {
            return Err(Error::InvalidInterval { lb, ub });
        }
        Ok(Interval { lb, ub })
    }

    /// Degenerate interval `[x, x]`.
    pub fn point(x: f64) -> Result<Self> {
        Interval::new(x, x)
    }

    pub fn lb(&self) -> f64 {
        self.lb
    }

    pub fn ub(&self) -> f64 {
        self.ub
    }

    pub fn width(&self) -> f64 {
        self.ub - self.lb
    }

    pub fn midpoint(&self) -> f64 {
        self.lb + 0.5 * (self.ub - self.lb)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lb <= x && x <= self.ub
    }

    /// True if `other` is a subset of `self`.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lb <= other.lb && other.ub <= self.ub
    }

    /// Closed-interval overlap. Touching endpoints count as overlapping.
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lb <= other.ub && other.lb <= self.ub
    }

    /// `[k*lb, k*ub]` for a nonnegative factor.
    pub fn scale(&self, k: f64) -> Result<Interval> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidInput(format!(
                "scale factor must be finite and nonnegative, got {k}"
            )));
        }
        Interval::new(self.lb * k, self.ub * k)
    }

    /// Divides a nonnegative interval by an interval of strictly positive
    /// values: `[lb / denom.ub, ub / denom.lb]`.
    pub fn divide_by(&self, denom: &Interval) -> Result<Interval> {
        if denom.lb <= 0.0 {
            return Err(Error::Domain(format!(
                "denominator interval must be strictly positive, lower bound is {}",
                denom.lb
            )));
        }
        if self.lb < 0.0 {
            return Err(Error::Domain(format!(
                "numerator interval must be nonnegative, lower bound is {}",
                self.lb
            )));
        }
        Interval::new(self.lb / denom.ub, self.ub / denom.lb)
    }

    /// Endpoints rounded to `places` decimals, half away from zero.
    pub fn rounded(&self, places: u32) -> (f64, f64) {
        (round_to(self.lb, places), round_to(self.ub, places))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "[{:.*}, {:.*}]", p, self.lb, p, self.ub),
            None => write!(f, "[{}, {}]", self.lb, self.ub),
        }
    }
}

/// Rounds half away from zero to the given number of decimal places.
pub fn round_to(x: f64, places: u32) -> f64 {
    if places == 0 {
        return x.round();
    }
    let factor = 10f64.powi(places as i32);
    (x * factor).round() / factor
}

/// Confidence level and normal multiplier used to turn a survey estimate and
/// its standard error into an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSpec {
    level: f64,
    z: f64,
}

impl ConfidenceSpec {
    pub fn new(level: f64, z: f64) -> Result<Self> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::InvalidInput(format!(
                "z multiplier must be positive, got {z}"
            )));
        }
        if !(level > 0.0 && level < 100.0) {
            return Err(Error::InvalidInput(format!(
                "confidence level must lie in (0, 100), got {level}"
            )));
        }
        Ok(ConfidenceSpec { level, z })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

impl Default for ConfidenceSpec {
    fn default() -> Self {
        ConfidenceSpec {
            level: 95.0,
            z: Z_95,
        }
    }
}

/// A probability interval derived from a percentage estimate, with a flag set
/// when either bound had to be clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceBounds {
    pub interval: Interval,
    pub clamped: bool,
}

/// `[(point - z*se)/100, (point + z*se)/100]`, clamped into `[0, 1]`.
///
/// Arithmetic is carried at full precision; round only for display.
pub fn confidence_interval(
    point_pct: f64,
    se_pct: f64,
    spec: &ConfidenceSpec,
) -> Result<ConfidenceBounds> {
    if !(0.0..=100.0).contains(&point_pct) {
        return Err(Error::InvalidInput(format!(
            "point estimate must be a percentage in [0, 100], got {point_pct}"
        )));
    }
    if !(se_pct >= 0.0) || !se_pct.is_finite() {
        return Err(Error::InvalidInput(format!(
            "standard error must be nonnegative, got {se_pct}"
        )));
    }
    let half = spec.z * se_pct;
    let lo = (point_pct - half) / 100.0;
    let hi = (point_pct + half) / 100.0;
    let clamped = lo < 0.0 || hi > 1.0;
    Ok(ConfidenceBounds {
        interval: Interval::new(lo.max(0.0), hi.min(1.0))?,
        clamped,
    })
}
