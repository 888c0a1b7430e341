//! Point-estimate percent changes versus interval-overlap sign identification.
//!
//! A comparison is only signed when the two intervals are disjoint; touching
//! endpoints leave the sign unidentified. Percent changes are always taken on
//! the conventional point estimates and are attached for contrast only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundsResult;
use crate::domain::CityName;
use crate::error::{Error, Result};
use crate::interval::Interval;

/// `(new - old) / old * 100`.
pub fn percent_change(old: f64, new: f64) -> Result<f64> {
    if old == 0.0 {
        return Err(Error::UndefinedChange);
    }
    Ok((new - old) / old * 100.0)
}

/// `(b - a) / max(a, b) * 100`: the difference expressed relative to the
/// larger value, as used for some cross-city contrasts.
pub fn percent_difference_of_larger(a: f64, b: f64) -> Result<f64> {
    let base = a.max(b);
    if base == 0.0 {
        return Err(Error::UndefinedChange);
    }
    Ok((b - a) / base * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "b_a")]
    ActualCount,
    #[serde(rename = "rate_pop")]
    RatePopulation,
    #[serde(rename = "rate_hh")]
    RateHousehold,
}

impl Metric {
    pub const ALL: [Metric; 3] = [
        Metric::ActualCount,
        Metric::RatePopulation,
        Metric::RateHousehold,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::ActualCount => "b_a",
            Metric::RatePopulation => "rate_pop",
            Metric::RateHousehold => "rate_hh",
        }
    }

    /// Interval and conventional point estimate for this metric. For counts
    /// the point estimate is the police-reported count.
    pub fn estimate(&self, r: &BoundsResult) -> Estimate {
        match self {
            Metric::ActualCount => Estimate {
                interval: r.b_a,
                point: r.b_p as f64,
            },
            Metric::RatePopulation => Estimate {
                interval: r.rate_pop,
                point: r.std_rate_pop,
            },
            Metric::RateHousehold => Estimate {
                interval: r.rate_hh,
                point: r.std_rate_hh,
            },
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "b_a" => Ok(Metric::ActualCount),
            "rate_pop" => Ok(Metric::RatePopulation),
            "rate_hh" => Ok(Metric::RateHousehold),
            other => Err(Error::Lookup(format!(
                "unknown metric `{other}` (expected b_a, rate_pop or rate_hh)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    SignIdentifiedAHigher,
    SignIdentifiedBHigher,
    NotIdentified,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::SignIdentifiedAHigher => "SIGN_IDENTIFIED_A_HIGHER",
            Verdict::SignIdentifiedBHigher => "SIGN_IDENTIFIED_B_HIGHER",
            Verdict::NotIdentified => "NOT_IDENTIFIED",
        }
    }

    pub fn mirrored(&self) -> Verdict {
        match self {
            Verdict::SignIdentifiedAHigher => Verdict::SignIdentifiedBHigher,
            Verdict::SignIdentifiedBHigher => Verdict::SignIdentifiedAHigher,
            Verdict::NotIdentified => Verdict::NotIdentified,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sign-identification verdict for two intervals.
pub fn classify(a: &Interval, b: &Interval) -> Verdict {
    if a.lb() > b.ub() {
        Verdict::SignIdentifiedAHigher
    } else if b.lb() > a.ub() {
        Verdict::SignIdentifiedBHigher
    } else {
        Verdict::NotIdentified
    }
}

/// Base used for the point-estimate percent change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PctBase {
    /// Relative to the first subject (the earlier year for over-time
    /// comparisons).
    #[default]
    First,
    /// Relative to the larger of the two point estimates.
    Larger,
}

impl FromStr for PctBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(PctBase::First),
            "larger" => Ok(PctBase::Larger),
            other => Err(Error::InvalidInput(format!(
                "unknown percent base `{other}` (expected first or larger)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub interval: Interval,
    pub point: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subject {
    pub city: CityName,
    pub year: i32,
    pub metric: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonVerdict {
    pub subject_a: Subject,
    pub subject_b: Subject,
    pub interval_a: Interval,
    pub interval_b: Interval,
    pub point_a: f64,
    pub point_b: f64,
    /// `None` when the base point estimate is zero.
    pub point_pct_change: Option<f64>,
    pub pct_base: PctBase,
    pub verdict: Verdict,
    pub incomplete: bool,
}

pub fn compare(
    subject_a: Subject,
    a: Estimate,
    subject_b: Subject,
    b: Estimate,
    pct_base: PctBase,
) -> ComparisonVerdict {
    let point_pct_change = match pct_base {
        PctBase::First => percent_change(a.point, b.point),
        PctBase::Larger => percent_difference_of_larger(a.point, b.point),
    }
    .ok();
    ComparisonVerdict {
        subject_a,
        subject_b,
        interval_a: a.interval,
        interval_b: b.interval,
        point_a: a.point,
        point_b: b.point,
        point_pct_change,
        pct_base,
        verdict: classify(&a.interval, &b.interval),
        incomplete: false,
    }
}

fn find<'a>(results: &'a [BoundsResult], city: &str, year: i32) -> Result<&'a BoundsResult> {
    results
        .iter()
        .find(|r| r.year == year && r.city.matches(city))
        .ok_or_else(|| Error::Lookup(format!("no result for {city} {year}")))
}

fn compare_results(
    a: &BoundsResult,
    b: &BoundsResult,
    metric: Metric,
    pct_base: PctBase,
) -> ComparisonVerdict {
    let subject = |r: &BoundsResult| Subject {
        city: r.city.clone(),
        year: r.year,
        metric,
    };
    let mut v = compare(
        subject(a),
        metric.estimate(a),
        subject(b),
        metric.estimate(b),
        pct_base,
    );
    v.incomplete = a.incomplete || b.incomplete;
    v
}

/// Compares one city's metric across two years, with the percent change taken
/// relative to `year1`.
pub fn compare_years(
    results: &[BoundsResult],
    city: &str,
    year1: i32,
    year2: i32,
    metric: Metric,
) -> Result<ComparisonVerdict> {
    let a = find(results, city, year1)?;
    let b = find(results, city, year2)?;
    Ok(compare_results(a, b, metric, PctBase::First))
}

/// Compares two cities in one year.
pub fn compare_cities(
    results: &[BoundsResult],
    city1: &str,
    city2: &str,
    year: i32,
    metric: Metric,
    pct_base: PctBase,
) -> Result<ComparisonVerdict> {
    let a = find(results, city1, year)?;
    let b = find(results, city2, year)?;
    Ok(compare_results(a, b, metric, pct_base))
}
