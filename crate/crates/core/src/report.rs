//! Report bundle: display-rounded tables with the assumptions that produced
//! them, serialized as JSON, per-table CSV, or aligned text.
//!
//! Display rounding (half away from zero): counts and population rates as
//! integers, household rates to two decimals, percentages to one decimal.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::bounds::{BoundsResult, ComputeOptions, PopBasis};
use crate::comparison::{compare_cities, compare_years, ComparisonVerdict, Metric, PctBase};
use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::interval::{round_to, Interval};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A displayed number: integers print without a decimal point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Dec(f64),
}

impl Num {
    pub fn with_places(x: f64, places: u32) -> Num {
        if places == 0 {
            Num::Int(x.round() as i64)
        } else {
            Num::Dec(round_to(x, places))
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Num::Int(i) => i as f64,
            Num::Dec(d) => d,
        }
    }
}

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Num::Int(i) => write!(f, "{i}"),
            Num::Dec(d) => write!(f, "{d}"),
        }
    }
}

/// Decimal places used when displaying a metric.
pub fn metric_places(metric: Metric) -> u32 {
    match metric {
        Metric::ActualCount | Metric::RatePopulation => 0,
        Metric::RateHousehold => 2,
    }
}

fn pct(x: f64) -> f64 {
    round_to(x, 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportingRow {
    pub year: i32,
    pub rate_pct: f64,
    pub se_pct: f64,
    pub lower_pct: f64,
    pub upper_pct: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assumptions {
    pub theta_lb: f64,
    pub theta_ub: f64,
    pub confidence_level: f64,
    pub z: f64,
    pub population_scale: f64,
    pub household_scale: f64,
    pub pop_basis: PopBasis,
    pub reporting_rates: Vec<ReportingRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub dataset_label: String,
    pub artifact_version: String,
    pub assumptions: Assumptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownCountRow {
    pub city: String,
    pub year: i32,
    pub b_p: u64,
    pub lb: i64,
    pub ub: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActualCountRow {
    pub city: String,
    pub year: i32,
    pub p_r_lb_pct: f64,
    pub p_r_ub_pct: f64,
    pub lb: i64,
    pub ub: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationRateRow {
    pub city: String,
    pub year: i32,
    pub n_s: Option<u64>,
    pub n_f: Option<u64>,
    pub lb: i64,
    pub ub: i64,
    pub incomplete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HouseholdRateRow {
    pub city: String,
    pub year: i32,
    pub pph: f64,
    pub h_s: Option<u64>,
    pub h_f: Option<u64>,
    pub lb: f64,
    pub ub: f64,
    pub incomplete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardRateRow {
    pub city: String,
    pub year: i32,
    pub basis: PopBasis,
    pub per_population: i64,
    pub per_household: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub kind: &'static str,
    pub metric: Metric,
    pub city_a: String,
    pub year_a: i32,
    pub city_b: String,
    pub year_b: i32,
    pub lb_a: Num,
    pub ub_a: Num,
    pub lb_b: Num,
    pub ub_b: Num,
    pub point_a: Num,
    pub point_b: Num,
    pub pct_base: PctBase,
    pub point_pct_change: Option<f64>,
    pub verdict: &'static str,
    pub incomplete: bool,
}

impl ComparisonRow {
    pub fn from_verdict(v: &ComparisonVerdict) -> Self {
        let metric = v.subject_a.metric;
        let places = metric_places(metric);
        let kind = if v.subject_a.city == v.subject_b.city {
            "over_time"
        } else {
            "cross_city"
        };
        // Point estimates for counts are police counts; rates display like
        // their intervals.
        let n = |x: f64| Num::with_places(x, places);
        ComparisonRow {
            kind,
            metric,
            city_a: v.subject_a.city.to_string(),
            year_a: v.subject_a.year,
            city_b: v.subject_b.city.to_string(),
            year_b: v.subject_b.year,
            lb_a: n(v.interval_a.lb()),
            ub_a: n(v.interval_a.ub()),
            lb_b: n(v.interval_b.lb()),
            ub_b: n(v.interval_b.ub()),
            point_a: n(v.point_a),
            point_b: n(v.point_b),
            pct_base: v.pct_base,
            point_pct_change: v.point_pct_change.map(pct),
            verdict: v.verdict.as_str(),
            incomplete: v.incomplete,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tables {
    pub known_counts: Vec<KnownCountRow>,
    pub actual_counts: Vec<ActualCountRow>,
    pub rates_population: Vec<PopulationRateRow>,
    pub rates_household: Vec<HouseholdRateRow>,
    pub standard_rates: Vec<StandardRateRow>,
    pub comparisons: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub metadata: Metadata,
    pub tables: Tables,
    /// File names of charts written alongside the bundle.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub charts: Vec<String>,
}

fn int(x: f64) -> i64 {
    x.round() as i64
}

fn ends(iv: &Interval) -> (i64, i64) {
    (int(iv.lb()), int(iv.ub()))
}

/// Every within-city year pair and every cross-city pair per year, for each
/// metric. Cross-city percent changes use `pct_base`.
pub fn all_comparisons(
    results: &[BoundsResult],
    pct_base: PctBase,
) -> Result<Vec<ComparisonVerdict>> {
    let mut cities: Vec<_> = results.iter().map(|r| r.city.clone()).collect();
    cities.dedup();
    let mut years: Vec<_> = results.iter().map(|r| r.year).collect();
    years.sort_unstable();
    years.dedup();
    let has = |c: &str, y: i32| results.iter().any(|r| r.year == y && r.city.matches(c));

    let mut out = Vec::new();
    for metric in Metric::ALL {
        for city in &cities {
            for (i, &y1) in years.iter().enumerate() {
                for &y2 in &years[i + 1..] {
                    if has(city.as_str(), y1) && has(city.as_str(), y2) {
                        out.push(compare_years(results, city.as_str(), y1, y2, metric)?);
                    }
                }
            }
        }
        for &year in &years {
            for (i, a) in cities.iter().enumerate() {
                for b in &cities[i + 1..] {
                    if has(a.as_str(), year) && has(b.as_str(), year) {
                        out.push(compare_cities(
                            results,
                            a.as_str(),
                            b.as_str(),
                            year,
                            metric,
                            pct_base,
                        )?);
                    }
                }
            }
        }
    }
    Ok(out)
}

impl ReportBundle {
    pub fn build(
        ds: &Dataset,
        results: &[BoundsResult],
        opts: &ComputeOptions,
        pct_base: PctBase,
    ) -> Result<Self> {
        let mut reporting_rates = Vec::new();
        for rr in ds.reporting.values() {
            let ci = rr.probability_bounds(&ds.confidence)?;
            reporting_rates.push(ReportingRow {
                year: rr.year,
                rate_pct: rr.rate_pct,
                se_pct: rr.se_pct,
                lower_pct: pct(ci.interval.lb() * 100.0),
                upper_pct: pct(ci.interval.ub() * 100.0),
                clamped: ci.clamped,
            });
        }
        let theta = ds.hierarchy.theta();
        let metadata = Metadata {
            dataset_label: ds.label.clone(),
            artifact_version: ARTIFACT_VERSION.to_string(),
            assumptions: Assumptions {
                theta_lb: theta.lb(),
                theta_ub: theta.ub(),
                confidence_level: ds.confidence.level(),
                z: ds.confidence.z(),
                population_scale: opts.scales.population,
                household_scale: opts.scales.household,
                pop_basis: opts.basis,
                reporting_rates,
            },
        };

        let pph_of = |r: &BoundsResult| {
            ds.record(r.city.as_str(), r.year)
                .map(|rec| rec.pph)
                .ok_or_else(|| Error::Lookup(format!("no record for {} {}", r.city, r.year)))
        };
        let mut tables = Tables {
            known_counts: Vec::new(),
            actual_counts: Vec::new(),
            rates_population: Vec::new(),
            rates_household: Vec::new(),
            standard_rates: Vec::new(),
            comparisons: Vec::new(),
        };
        for r in results {
            let city = r.city.to_string();
            let rec = ds
                .record(r.city.as_str(), r.year)
                .ok_or_else(|| Error::Lookup(format!("no record for {} {}", r.city, r.year)))?;
            let (lb, ub) = ends(&r.b_k);
            tables.known_counts.push(KnownCountRow {
                city: city.clone(),
                year: r.year,
                b_p: r.b_p,
                lb,
                ub,
            });
            let (lb, ub) = ends(&r.b_a);
            tables.actual_counts.push(ActualCountRow {
                city: city.clone(),
                year: r.year,
                p_r_lb_pct: pct(r.p_r.lb() * 100.0),
                p_r_ub_pct: pct(r.p_r.ub() * 100.0),
                lb,
                ub,
            });
            let (lb, ub) = ends(&r.rate_pop);
            tables.rates_population.push(PopulationRateRow {
                city: city.clone(),
                year: r.year,
                n_s: rec.n_s,
                n_f: rec.n_f,
                lb,
                ub,
                incomplete: r.incomplete,
            });
            let (lb, ub) = r.rate_hh.rounded(2);
            tables.rates_household.push(HouseholdRateRow {
                city: city.clone(),
                year: r.year,
                pph: pph_of(r)?,
                h_s: r.h_s,
                h_f: r.h_f,
                lb,
                ub,
                incomplete: r.incomplete,
            });
            tables.standard_rates.push(StandardRateRow {
                city,
                year: r.year,
                basis: r.std_basis,
                per_population: int(r.std_rate_pop),
                per_household: round_to(r.std_rate_hh, 2),
                note: r.std_note.clone(),
            });
        }
        tables.comparisons = all_comparisons(results, pct_base)?
            .iter()
            .map(ComparisonRow::from_verdict)
            .collect();

        Ok(ReportBundle {
            metadata,
            tables,
            charts: Vec::new(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One CSV document per table, keyed by table name.
    pub fn csv_tables(&self) -> Result<Vec<(&'static str, String)>> {
        let t = &self.tables;
        Ok(vec![
            ("known_counts", to_csv(&t.known_counts)?),
            ("actual_counts", to_csv(&t.actual_counts)?),
            ("rates_population", to_csv(&t.rates_population)?),
            ("rates_household", to_csv(&t.rates_household)?),
            ("standard_rates", to_csv(&t.standard_rates)?),
            ("comparisons", to_csv(&t.comparisons)?),
        ])
    }

    /// Writes `bundle.json` and, when `with_csv`, one CSV per table.
    pub fn write(&self, dir: &Path, with_csv: bool) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("bundle.json");
        fs::write(&path, self.to_json()?).map_err(|e| Error::io(&path, e))?;
        if with_csv {
            for (name, body) in self.csv_tables()? {
                let path = dir.join(format!("{name}.csv"));
                fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            }
        }
        Ok(())
    }

    /// Aligned plain-text rendering of the main tables (comparisons omitted).
    pub fn to_text(&self) -> String {
        let a = &self.metadata.assumptions;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} (version {})",
            self.metadata.dataset_label, self.metadata.artifact_version
        );
        let _ = writeln!(
            s,
            "theta [{}, {}], {}% CI (z = {}), rates per {} persons / {} households, point basis {}",
            a.theta_lb,
            a.theta_ub,
            a.confidence_level,
            a.z,
            a.population_scale,
            a.household_scale,
            a.pop_basis
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<14} {:>4} {:>6} {:>13} {:>15} {:>13} {:>15} {:>6} {:>7}",
            "city", "year", "b_p", "b_k", "b_a", "rate_pop", "rate_hh", "std", "std_hh"
        );
        let t = &self.tables;
        for i in 0..t.known_counts.len() {
            let k = &t.known_counts[i];
            let ba = &t.actual_counts[i];
            let rp = &t.rates_population[i];
            let rh = &t.rates_household[i];
            let st = &t.standard_rates[i];
            let _ = writeln!(
                s,
                "{:<14} {:>4} {:>6} {:>13} {:>15} {:>13} {:>15} {:>6} {:>7.2}{}",
                k.city,
                k.year,
                k.b_p,
                format!("[{}, {}]", k.lb, k.ub),
                format!("[{}, {}]", ba.lb, ba.ub),
                format!("[{}, {}]", rp.lb, rp.ub),
                format!("[{:.2}, {:.2}]", rh.lb, rh.ub),
                st.per_population,
                st.per_household,
                if rp.incomplete {
                    "  (incomplete: one population estimate)"
                } else {
                    ""
                }
            );
        }
        s
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Single comparison rendered for the terminal.
pub fn verdict_text(row: &ComparisonRow) -> String {
    let base = match row.pct_base {
        PctBase::First => "relative to A",
        PctBase::Larger => "relative to the larger value",
    };
    let change = row
        .point_pct_change
        .map(|p| format!("{p:+.1}% ({base})"))
        .unwrap_or_else(|| "undefined".into());
    let mut s = String::new();
    let _ = writeln!(s, "metric   {}", row.metric);
    let _ = writeln!(
        s,
        "A        {} {}  [{}, {}]  point {}",
        row.city_a, row.year_a, row.lb_a, row.ub_a, row.point_a
    );
    let _ = writeln!(
        s,
        "B        {} {}  [{}, {}]  point {}",
        row.city_b, row.year_b, row.lb_b, row.ub_b, row.point_b
    );
    let _ = writeln!(s, "change   {change}");
    let _ = writeln!(s, "verdict  {}", row.verdict);
    if row.incomplete {
        let _ = writeln!(
            s,
            "note     incomplete: one side rests on a single population estimate"
        );
    }
    s
}
