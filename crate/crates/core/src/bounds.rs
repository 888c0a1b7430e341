//! The estimation pipeline: counts known to police, actual counts, rates per
//! person and per household, and the conventional point-estimate rates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{validate, CityName, CityYearRecord, Dataset, HierarchyAssumption};
use crate::error::{Error, Result};
use crate::interval::Interval;

/// `[b_p * (1 + theta.lb), b_p * (1 + theta.ub)]`.
pub fn known_count_bounds(b_p: u64, hierarchy: &HierarchyAssumption) -> Interval {
    let theta = hierarchy.theta();
    let b_p = b_p as f64;
    Interval::new(b_p * (1.0 + theta.lb()), b_p * (1.0 + theta.ub()))
        .expect("theta is validated nonnegative and ordered")
}

/// Actual count `b_k / p_r` bounded by dividing the known-count interval by
/// the reporting-probability interval.
pub fn actual_count_bounds(bk: Interval, pr: Interval) -> Result<Interval> {
    bk.divide_by(&pr)
}

/// `n / pph` rounded to the nearest household.
pub fn households(n: u64, pph: f64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidInput("population must be positive".into()));
    }
    if !(pph > 0.0) || !pph.is_finite() {
        return Err(Error::InvalidInput(format!(
            "persons per household must be positive, got {pph}"
        )));
    }
    Ok((n as f64 / pph).round() as u64)
}

/// A rate interval plus whether it was computed from a single denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub interval: Interval,
    pub incomplete: bool,
}

fn rate_bounds(
    ba: Interval,
    first: Option<u64>,
    second: Option<u64>,
    scale: f64,
    what: &str,
) -> Result<RateBounds> {
    let (hi, lo, incomplete) = match (first, second) {
        (Some(a), Some(b)) => (a.max(b), a.min(b), false),
        (Some(a), None) | (None, Some(a)) => (a, a, true),
        (None, None) => {
            return Err(Error::Domain(format!("both {what} estimates are absent")));
        }
    };
    if lo == 0 {
        return Err(Error::Domain(format!("{what} estimate must be positive")));
    }
    let interval = Interval::new(ba.lb() / hi as f64 * scale, ba.ub() / lo as f64 * scale)?;
    Ok(RateBounds {
        interval,
        incomplete,
    })
}

/// Lower bound divides by the larger population, upper bound by the smaller.
pub fn rate_bounds_population(
    ba: Interval,
    n_s: Option<u64>,
    n_f: Option<u64>,
    scale: f64,
) -> Result<RateBounds> {
    rate_bounds(ba, n_s, n_f, scale, "population")
}

/// Same construction as [`rate_bounds_population`] over household counts.
pub fn rate_bounds_household(
    ba: Interval,
    h_s: Option<u64>,
    h_f: Option<u64>,
    scale: f64,
) -> Result<RateBounds> {
    rate_bounds(ba, h_s, h_f, scale, "household")
}

/// Which population estimate feeds the conventional point-estimate rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopBasis {
    #[default]
    State,
    Federal,
    Mid,
}

impl fmt::Display for PopBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PopBasis::State => "state",
            PopBasis::Federal => "federal",
            PopBasis::Mid => "mid",
        })
    }
}

impl FromStr for PopBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state" => Ok(PopBasis::State),
            "federal" => Ok(PopBasis::Federal),
            "mid" => Ok(PopBasis::Mid),
            other => Err(Error::InvalidInput(format!(
                "unknown population basis `{other}` (expected state, federal or mid)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateScales {
    /// Persons per population-rate unit.
    pub population: f64,
    /// Households per household-rate unit.
    pub household: f64,
}

impl Default for RateScales {
    fn default() -> Self {
        RateScales {
            population: 100_000.0,
            household: 1_000.0,
        }
    }
}

/// Conventional point-estimate rates that ignore underreporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardRates {
    pub per_population: f64,
    pub per_household: f64,
    /// The basis actually used, after any fallback.
    pub basis: PopBasis,
    pub note: Option<String>,
}

/// `b_p / n * scale` and `b_p / (n / pph) * scale`, with `n` picked by `basis`.
/// Falls back to whichever estimate is present when the requested one is not.
pub fn standard_rates(
    b_p: u64,
    n_s: Option<u64>,
    n_f: Option<u64>,
    pph: f64,
    basis: PopBasis,
    scales: &RateScales,
) -> Result<StandardRates> {
    let (n, used, note) = match (basis, n_s, n_f) {
        (PopBasis::State, Some(s), _) => (s as f64, PopBasis::State, None),
        (PopBasis::Federal, _, Some(f)) => (f as f64, PopBasis::Federal, None),
        (PopBasis::Mid, Some(s), Some(f)) => ((s as f64 + f as f64) / 2.0, PopBasis::Mid, None),
        (_, Some(s), None) => (
            s as f64,
            PopBasis::State,
            Some(format!(
                "{basis} population unavailable; used state estimate"
            )),
        ),
        (_, None, Some(f)) => (
            f as f64,
            PopBasis::Federal,
            Some(format!(
                "{basis} population unavailable; used federal estimate"
            )),
        ),
        (_, None, None) => {
            return Err(Error::Domain("both population estimates are absent".into()));
        }
    };
    if !(n > 0.0) {
        return Err(Error::Domain("population estimate must be positive".into()));
    }
    if !(pph > 0.0) {
        return Err(Error::InvalidInput(format!(
            "persons per household must be positive, got {pph}"
        )));
    }
    let b_p = b_p as f64;
    Ok(StandardRates {
        per_population: b_p / n * scales.population,
        per_household: b_p / (n / pph) * scales.household,
        basis: used,
        note,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComputeOptions {
    pub scales: RateScales,
    pub basis: PopBasis,
}

/// Every derived quantity for one city-year, at full precision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsResult {
    pub city: CityName,
    pub year: i32,
    pub b_p: u64,
    /// Reporting probability interval used for this year.
    pub p_r: Interval,
    pub b_k: Interval,
    pub b_a: Interval,
    /// Per `scales.population` persons.
    pub rate_pop: Interval,
    /// Per `scales.household` households.
    pub rate_hh: Interval,
    pub std_rate_pop: f64,
    pub std_rate_hh: f64,
    pub std_basis: PopBasis,
    pub std_note: Option<String>,
    pub h_s: Option<u64>,
    pub h_f: Option<u64>,
    pub incomplete: bool,
}

impl BoundsResult {
    /// Structural checks that must hold for any valid input. Returns a
    /// description of the first violation.
    pub fn check_invariants(
        &self,
        hierarchy: &HierarchyAssumption,
    ) -> std::result::Result<(), String> {
        let theta = hierarchy.theta();
        let b_p = self.b_p as f64;
        let tol = 1e-9 * b_p.max(1.0);
        if self.b_k.lb() < b_p * (1.0 + theta.lb()) - tol
            || self.b_k.ub() > b_p * (1.0 + theta.ub()) + tol
        {
            return Err(format!(
                "{} {}: b_k {} outside hierarchy envelope",
                self.city, self.year, self.b_k
            ));
        }
        if self.p_r.ub() <= 1.0 && self.b_a.lb() < self.b_k.lb() - tol {
            return Err(format!("{} {}: b_a.lb below b_k.lb", self.city, self.year));
        }
        Ok(())
    }
}

fn compute_record(
    rec: &CityYearRecord,
    ds: &Dataset,
    opts: &ComputeOptions,
) -> Result<BoundsResult> {
    let rr = ds
        .reporting
        .get(&rec.year)
        .ok_or_else(|| Error::Lookup(format!("no reporting rate for year {}", rec.year)))?;
    let p_r = rr.probability_bounds(&ds.confidence)?.interval;
    let b_k = known_count_bounds(rec.b_p, &ds.hierarchy);
    let b_a = actual_count_bounds(b_k, p_r)?;
    let pop = rate_bounds_population(b_a, rec.n_s, rec.n_f, opts.scales.population)?;
    let h_s = rec.n_s.map(|n| households(n, rec.pph)).transpose()?;
    let h_f = rec.n_f.map(|n| households(n, rec.pph)).transpose()?;
    let hh = rate_bounds_household(b_a, h_s, h_f, opts.scales.household)?;
    let std = standard_rates(rec.b_p, rec.n_s, rec.n_f, rec.pph, opts.basis, &opts.scales)?;
    Ok(BoundsResult {
        city: rec.city.clone(),
        year: rec.year,
        b_p: rec.b_p,
        p_r,
        b_k,
        b_a,
        rate_pop: pop.interval,
        rate_hh: hh.interval,
        std_rate_pop: std.per_population,
        std_rate_hh: std.per_household,
        std_basis: std.basis,
        std_note: std.note,
        h_s,
        h_f,
        incomplete: pop.incomplete || hh.incomplete,
    })
}

/// Runs the pipeline for every record, sorted by city then year. Fails if the
/// dataset has any error-severity finding.
pub fn compute_all(ds: &Dataset, opts: &ComputeOptions) -> Result<Vec<BoundsResult>> {
    let findings = validate(ds);
    if findings.iter().any(|f| f.is_error()) {
        return Err(Error::Validation(findings));
    }
    let mut records: Vec<&CityYearRecord> = ds.records.iter().collect();
    records.sort_by(|a, b| (&a.city, a.year).cmp(&(&b.city, b.year)));
    records
        .into_iter()
        .map(|rec| compute_record(rec, ds, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ReportingRateEstimate;
    use proptest::prelude::*;

    fn iv(lb: f64, ub: f64) -> Interval {
        Interval::new(lb, ub).unwrap()
    }

    fn default_theta() -> HierarchyAssumption {
        HierarchyAssumption::default()
    }

    #[test]
    fn known_counts() {
        let t = default_theta();
        assert_eq!(known_count_bounds(7766, &t).rounded(0), (7805.0, 7844.0));
        assert_eq!(known_count_bounds(457, &t).rounded(0), (459.0, 462.0));
        assert_eq!(known_count_bounds(0, &t), iv(0.0, 0.0));
        assert_eq!(known_count_bounds(1000, &t).rounded(0), (1005.0, 1010.0));
    }

    #[test]
    fn actual_counts() {
        let ba = actual_count_bounds(iv(1005.0, 1010.0), iv(0.540, 0.606)).unwrap();
        assert_eq!(ba.rounded(0), (1658.0, 1870.0));
        let ba = actual_count_bounds(iv(500.0, 500.0), iv(1.0, 1.0)).unwrap();
        assert_eq!(ba, iv(500.0, 500.0));
        assert!(actual_count_bounds(iv(1.0, 2.0), iv(0.0, 0.5)).is_err());
    }

    #[test]
    fn household_counts() {
        assert_eq!(households(777708, 2.46).unwrap(), 316141);
        assert_eq!(households(99485, 2.19).unwrap(), 45427);
        assert_eq!(households(1000, 1.0).unwrap(), 1000);
        assert!(households(0, 2.0).is_err());
        assert!(households(10, 0.0).is_err());
    }

    #[test]
    fn rate_bound_trivial_cases() {
        let r =
            rate_bounds_population(iv(100.0, 200.0), Some(100_000), Some(100_000), 1e5).unwrap();
        assert_eq!(r.interval, iv(100.0, 200.0));
        assert!(!r.incomplete);
        let r = rate_bounds_household(iv(10.0, 10.0), Some(1000), Some(1000), 1e3).unwrap();
        assert_eq!(r.interval, iv(10.0, 10.0));
        let r = rate_bounds_population(iv(100.0, 200.0), Some(50_000), None, 1e5).unwrap();
        assert!(r.incomplete);
        assert_eq!(r.interval, iv(200.0, 400.0));
        assert!(rate_bounds_population(iv(1.0, 2.0), None, None, 1e5).is_err());
        assert!(rate_bounds_household(iv(1.0, 2.0), None, None, 1e3).is_err());
    }

    #[test]
    fn standard_rate_examples() {
        let s = RateScales::default();
        let r =
            standard_rates(7766, Some(738768), Some(777708), 2.46, PopBasis::State, &s).unwrap();
        assert_eq!(r.per_population.round(), 1051.0);
        let r =
            standard_rates(2364, Some(395716), Some(409014), 2.35, PopBasis::State, &s).unwrap();
        assert_eq!(r.per_population.round(), 597.0);
        let r = standard_rates(0, Some(100_000), None, 2.0, PopBasis::State, &s).unwrap();
        assert_eq!((r.per_population, r.per_household), (0.0, 0.0));
    }

    #[test]
    fn standard_rate_fallback_is_noted() {
        let s = RateScales::default();
        let r = standard_rates(100, None, Some(1000), 2.0, PopBasis::State, &s).unwrap();
        assert_eq!(r.basis, PopBasis::Federal);
        assert!(r.note.is_some());
        let r = standard_rates(100, Some(1000), Some(3000), 2.0, PopBasis::Mid, &s).unwrap();
        assert_eq!(r.per_population, 100.0 / 2000.0 * 1e5);
        assert!(r.note.is_none());
        let r = standard_rates(100, Some(1000), None, 2.0, PopBasis::Mid, &s).unwrap();
        assert_eq!(r.basis, PopBasis::State);
        assert!(r.note.unwrap().contains("mid"));
    }

    fn single_record_dataset() -> Dataset {
        let mut ds = Dataset::new("synthetic");
        ds.records.push(CityYearRecord {
            city: "Anytown".into(),
            year: 2009,
            b_p: 1000,
            n_s: Some(100_000),
            n_f: Some(100_000),
            pph: 2.0,
        });
        ds.reporting.insert(
            2009,
            ReportingRateEstimate {
                year: 2009,
                rate_pct: 57.3,
                se_pct: 1.7,
            },
        );
        ds
    }

    #[test]
    fn compute_all_single_record() {
        let out = compute_all(&single_record_dataset(), &ComputeOptions::default()).unwrap();
        assert_eq!(out.len(), 1);
        // Full-precision CI [0.53968, 0.60632]: 1005 / 0.60632 = 1657.54,
        // 1010 / 0.53968 = 1871.5. Rounding the CI to [0.540, 0.606] first
        // would give [1658, 1870].
        let (lb, ub) = (out[0].b_a.lb(), out[0].b_a.ub());
        assert!((lb - 1657.542).abs() < 0.01, "{lb}");
        assert!((ub - 1871.48).abs() < 0.01, "{ub}");
        assert!(!out[0].incomplete);
        assert!(out[0].check_invariants(&default_theta()).is_ok());
    }

    #[test]
    fn compute_all_rejects_invalid_dataset() {
        let mut ds = single_record_dataset();
        ds.reporting.clear();
        assert!(matches!(
            compute_all(&ds, &ComputeOptions::default()),
            Err(Error::Validation(_))
        ));
    }

    fn arb_theta() -> impl Strategy<Value = (f64, f64)> {
        (0.0..0.05f64, 0.0..0.05f64).prop_map(|(a, b)| (a.min(b), a.max(b)))
    }

    fn arb_pr() -> impl Strategy<Value = (f64, f64)> {
        (0.05..1.0f64, 0.05..1.0f64).prop_map(|(a, b)| (a.min(b), a.max(b)))
    }

    proptest! {
        #[test]
        fn actual_at_least_known(b_p in 0u64..100_000, t in arb_theta(), p in arb_pr()) {
            let h = HierarchyAssumption::new(iv(t.0, t.1)).unwrap();
            let bk = known_count_bounds(b_p, &h);
            let ba = actual_count_bounds(bk, iv(p.0, p.1)).unwrap();
            prop_assert!(ba.lb() >= bk.lb());
            prop_assert!(ba.ub() >= bk.ub());
        }

        #[test]
        fn larger_count_raises_bounds(b_p in 0u64..100_000, extra in 1u64..1000, t in arb_theta(), p in arb_pr()) {
            let h = HierarchyAssumption::new(iv(t.0, t.1)).unwrap();
            let pr = iv(p.0, p.1);
            let lo = actual_count_bounds(known_count_bounds(b_p, &h), pr).unwrap();
            let hi = actual_count_bounds(known_count_bounds(b_p + extra, &h), pr).unwrap();
            prop_assert!(hi.lb() > lo.lb());
            prop_assert!(hi.ub() > lo.ub());
        }

        #[test]
        fn nested_assumptions_nest_results(
            b_p in 0u64..100_000,
            t in arb_theta(),
            p in arb_pr(),
            fr in (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64),
        ) {
            // Build theta' within theta and p_r' within p_r by interpolation.
            let sub = |lo: f64, hi: f64, a: f64, b: f64| {
                let (a, b) = (a.min(b), a.max(b));
                (lo + a * (hi - lo), lo + b * (hi - lo))
            };
            let ti = sub(t.0, t.1, fr.0, fr.1);
            let pi = sub(p.0, p.1, fr.2, fr.3);
            let outer = actual_count_bounds(
                known_count_bounds(b_p, &HierarchyAssumption::new(iv(t.0, t.1)).unwrap()),
                iv(p.0, p.1),
            ).unwrap();
            let inner = actual_count_bounds(
                known_count_bounds(b_p, &HierarchyAssumption::new(iv(ti.0, ti.1)).unwrap()),
                iv(pi.0, pi.1),
            ).unwrap();
            let tol = 1e-9 * outer.ub().max(1.0);
            prop_assert!(inner.lb() >= outer.lb() - tol && inner.ub() <= outer.ub() + tol);
        }
    }
}
