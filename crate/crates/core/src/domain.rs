//! Typed inputs: city-year observations, survey reporting rates, the
//! Hierarchy-Rule adjustment assumption and the assembled dataset.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{confidence_interval, ConfidenceBounds, ConfidenceSpec, Interval};

/// City identifier. Whitespace is trimmed; equality and ordering ignore case,
/// while the original spelling is kept for display.
#[derive(Debug, Clone)]
pub struct CityName {
    display: String,
    key: String,
}

impl CityName {
    pub fn new(name: &str) -> Self {
        let display = name.trim().to_string();
        let key = display.to_lowercase();
        CityName { display, key }
    }

    pub fn as_str(&self) -> &str {
        &self.display
    }

    pub fn matches(&self, name: &str) -> bool {
        self.key == name.trim().to_lowercase()
    }
}

impl PartialEq for CityName {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for CityName {}

impl Hash for CityName {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl PartialOrd for CityName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CityName {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl fmt::Display for CityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display)
    }
}

impl From<&str> for CityName {
    fn from(s: &str) -> Self {
        CityName::new(s)
    }
}

impl Serialize for CityName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.display)
    }
}

impl<'de> Deserialize<'de> for CityName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(CityName::new(&s))
    }
}

/// One jurisdiction-year of inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CityYearRecord {
    pub city: CityName,
    pub year: i32,
    /// Residential burglaries reported by police to the UCR program.
    pub b_p: u64,
    /// State population estimate.
    pub n_s: Option<u64>,
    /// Federal population estimate.
    pub n_f: Option<u64>,
    /// Average persons per household.
    pub pph: f64,
}

impl CityYearRecord {
    /// True when exactly one population estimate is available.
    pub fn is_incomplete(&self) -> bool {
        self.n_s.is_some() != self.n_f.is_some()
    }
}

/// Survey-year reporting rate and its standard error, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportingRateEstimate {
    pub year: i32,
    pub rate_pct: f64,
    pub se_pct: f64,
}

impl ReportingRateEstimate {
    pub fn probability_bounds(&self, spec: &ConfidenceSpec) -> Result<ConfidenceBounds> {
        confidence_interval(self.rate_pct, self.se_pct, spec)
    }
}

/// Assumed range of `theta`, the ratio of hierarchy-suppressed burglaries to
/// the police-reported count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HierarchyAssumption {
    theta: Interval,
}

impl HierarchyAssumption {
    pub fn new(theta: Interval) -> Result<Self> {
        if theta.lb() < 0.0 || theta.ub() >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "theta must satisfy 0 <= lb <= ub < 1, got {theta}"
            )));
        }
        Ok(HierarchyAssumption { theta })
    }

    pub fn theta(&self) -> Interval {
        self.theta
    }
}

impl Default for HierarchyAssumption {
    fn default() -> Self {
        HierarchyAssumption {
            theta: Interval::new(0.005, 0.01).expect("static interval"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub label: String,
    pub records: Vec<CityYearRecord>,
    pub reporting: BTreeMap<i32, ReportingRateEstimate>,
    pub hierarchy: HierarchyAssumption,
    pub confidence: ConfidenceSpec,
}

impl Dataset {
    pub fn new(label: impl Into<String>) -> Self {
        Dataset {
            label: label.into(),
            records: Vec::new(),
            reporting: BTreeMap::new(),
            hierarchy: HierarchyAssumption::default(),
            confidence: ConfidenceSpec::default(),
        }
    }

    pub fn record(&self, city: &str, year: i32) -> Option<&CityYearRecord> {
        self.records
            .iter()
            .find(|r| r.year == year && r.city.matches(city))
    }

    pub fn cities(&self) -> Vec<CityName> {
        let set: BTreeSet<_> = self.records.iter().map(|r| r.city.clone()).collect();
        set.into_iter().collect()
    }

    pub fn years(&self) -> Vec<i32> {
        let set: BTreeSet<_> = self.records.iter().map(|r| r.year).collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingCode {
    MissingReportingYear,
    DuplicateRecord,
    NonpositivePph,
    NonpositivePopulation,
    NoPopulation,
    SinglePopulation,
    InvalidReportingRate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: FindingCode,
    pub city: Option<CityName>,
    pub year: Option<i32>,
    pub message: String,
}

impl Finding {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    fn sort_key(&self) -> (Option<&CityName>, Option<i32>, FindingCode) {
        (self.city.as_ref(), self.year, self.code)
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}", self.message)
    }
}

/// Checks dataset consistency. Findings are sorted by city, then year, then
/// code; an empty list means the dataset is usable.
pub fn validate(ds: &Dataset) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut push = |severity, code, city: Option<&CityName>, year, message: String| {
        findings.push(Finding {
            severity,
            code,
            city: city.cloned(),
            year,
            message,
        })
    };

    for rr in ds.reporting.values() {
        if !(rr.rate_pct > 0.0 && rr.rate_pct < 100.0) || !(rr.se_pct >= 0.0) {
            push(
                Severity::Error,
                FindingCode::InvalidReportingRate,
                None,
                Some(rr.year),
                format!(
                    "reporting rate for {} must satisfy 0 < rate < 100 and se >= 0 (got {}, se {})",
                    rr.year, rr.rate_pct, rr.se_pct
                ),
            );
        }
    }

    let mut seen = BTreeSet::new();
    for rec in &ds.records {
        let (city, year) = (&rec.city, rec.year);
        if !seen.insert((city.clone(), year)) {
            push(
                Severity::Error,
                FindingCode::DuplicateRecord,
                Some(city),
                Some(year),
                format!("duplicate record for {city} {year}"),
            );
            continue;
        }
        if !ds.reporting.contains_key(&year) {
            push(
                Severity::Error,
                FindingCode::MissingReportingYear,
                Some(city),
                Some(year),
                format!("{city} {year}: no reporting rate for year {year}"),
            );
        }
        if !(rec.pph > 0.0) || !rec.pph.is_finite() {
            push(
                Severity::Error,
                FindingCode::NonpositivePph,
                Some(city),
                Some(year),
                format!(
                    "{city} {year}: persons per household must be positive, got {}",
                    rec.pph
                ),
            );
        }
        for (name, value) in [("n_s", rec.n_s), ("n_f", rec.n_f)] {
            if value == Some(0) {
                push(
                    Severity::Error,
                    FindingCode::NonpositivePopulation,
                    Some(city),
                    Some(year),
                    format!("{city} {year}: {name} must be positive"),
                );
            }
        }
        match (rec.n_s, rec.n_f) {
            (None, None) => push(
                Severity::Error,
                FindingCode::NoPopulation,
                Some(city),
                Some(year),
                format!("{city} {year}: both population estimates are missing"),
            ),
            (Some(_), None) | (None, Some(_)) => {
                let missing = if rec.n_s.is_none() { "n_s" } else { "n_f" };
                push(
                    Severity::Warning,
                    FindingCode::SinglePopulation,
                    Some(city),
                    Some(year),
                    format!(
                        "{city} {year} lacks {missing}; rate bounds use a single population \
                         estimate and the analysis is incomplete"
                    ),
                )
            }
            _ => {}
        }
    }

    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    findings
}
