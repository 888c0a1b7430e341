//! Loading datasets from the four delimited input files, and the embedded
//! North Carolina 2009-2011 reference dataset.
//!
//! File layouts (UTF-8, comma-delimited, header row required):
//!
//! | file              | columns                          |
//! |-------------------|----------------------------------|
//! | `counts.csv`      | `city,year,b_p`                  |
//! | `populations.csv` | `city,year,n_s,n_f`              |
//! | `pph.csv`         | `city,pph` (optionally `year`)   |
//! | `reporting.csv`   | `year,rate_pct,se_pct`           |
//!
//! Missing population estimates are written as empty fields. A `pph.csv` with
//! a `year` column may carry per-year overrides; rows with an empty year set
//! the city default.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{validate, CityName, CityYearRecord, Dataset, ReportingRateEstimate};
use crate::error::{Error, Result};

pub const REFERENCE_LABEL: &str = "North Carolina 2009-2011";
pub const REFERENCE_COUNTS: &str = include_str!("../data/nc/counts.csv");
pub const REFERENCE_POPULATIONS: &str = include_str!("../data/nc/populations.csv");
pub const REFERENCE_PPH: &str = include_str!("../data/nc/pph.csv");
pub const REFERENCE_REPORTING: &str = include_str!("../data/nc/reporting.csv");

pub const MANIFEST_FILE: &str = "manifest.json";

/// Locations of the four input files. Relative paths in a manifest file are
/// resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceManifest {
    pub dataset_label: String,
    pub counts_path: PathBuf,
    pub populations_path: PathBuf,
    pub pph_path: PathBuf,
    pub reporting_path: PathBuf,
}

impl SourceManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: SourceManifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [
            &mut m.counts_path,
            &mut m.populations_path,
            &mut m.pph_path,
            &mut m.reporting_path,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(m)
    }

    /// Standard file names inside `dir`.
    pub fn in_dir(dir: &Path, label: impl Into<String>) -> Self {
        SourceManifest {
            dataset_label: label.into(),
            counts_path: dir.join("counts.csv"),
            populations_path: dir.join("populations.csv"),
            pph_path: dir.join("pph.csv"),
            reporting_path: dir.join("reporting.csv"),
        }
    }
}

/// Loads and validates a dataset. Fails on the first malformed row, or with
/// all findings if validation reports any error.
pub fn load(manifest: &SourceManifest) -> Result<Dataset> {
    let open = |p: &PathBuf| -> Result<(String, fs::File)> {
        let f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
        Ok((p.display().to_string(), f))
    };
    let counts = open(&manifest.counts_path)?;
    let pops = open(&manifest.populations_path)?;
    let pph = open(&manifest.pph_path)?;
    let reporting = open(&manifest.reporting_path)?;
    parse_sources(&manifest.dataset_label, counts, pops, pph, reporting)
}

/// The reference dataset compiled into the library from `data/nc`.
pub fn embedded_reference() -> Dataset {
    parse_sources(
        REFERENCE_LABEL,
        ("counts.csv".into(), REFERENCE_COUNTS.as_bytes()),
        ("populations.csv".into(), REFERENCE_POPULATIONS.as_bytes()),
        ("pph.csv".into(), REFERENCE_PPH.as_bytes()),
        ("reporting.csv".into(), REFERENCE_REPORTING.as_bytes()),
    )
    .expect("embedded reference data is valid")
}

/// Parses the four sources, each given as `(name for messages, reader)`.
pub fn parse_sources<R1: Read, R2: Read, R3: Read, R4: Read>(
    label: &str,
    counts: (String, R1),
    populations: (String, R2),
    pph: (String, R3),
    reporting: (String, R4),
) -> Result<Dataset> {
    let counts = parse_counts(&counts.0, counts.1)?;
    let pops = parse_populations(&populations.0, populations.1)?;
    let pph_table = parse_pph(&pph.0, pph.1)?;
    let reporting = parse_reporting(&reporting.0, reporting.1)?;

    let mut ds = Dataset::new(label);
    ds.reporting = reporting;
    let mut used_pops = 0usize;
    for row in counts {
        let key = (row.city.clone(), row.year);
        let (n_s, n_f) = match pops.rows.get(&key) {
            Some(p) => {
                used_pops += 1;
                (p.n_s, p.n_f)
            }
            None => (None, None),
        };
        let pph = pph_table
            .lookup(&row.city, row.year)
            .ok_or_else(|| Error::Parse {
                source_name: pph.0.clone(),
                line: 0,
                message: format!("no persons-per-household value for {}", row.city),
            })?;
        ds.records.push(CityYearRecord {
            city: row.city,
            year: row.year,
            b_p: row.b_p,
            n_s,
            n_f,
            pph,
        });
    }
    if used_pops != pops.rows.len() {
        let orphan = pops
            .rows
            .iter()
            .filter(|(k, _)| ds.record(k.0.as_str(), k.1).is_none())
            .min_by_key(|(_, p)| p.line)
            .expect("at least one unmatched population row");
        return Err(Error::Parse {
            source_name: populations.0,
            line: orphan.1.line,
            message: format!(
                "population row for {} {} has no matching count row",
                orphan.0 .0, orphan.0 .1
            ),
        });
    }

    let findings = validate(&ds);
    if findings.iter().any(|f| f.is_error()) {
        return Err(Error::Validation(findings));
    }
    Ok(ds)
}

/// Header positions for one file, checked against the allowed column set.
struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn from_headers(
        source: &str,
        headers: &csv::StringRecord,
        required: &[&str],
        optional: &[&str],
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            let h = h.trim().trim_start_matches('\u{feff}');
            if !required.contains(&h) && !optional.contains(&h) {
                return Err(Error::UnknownColumn {
                    source_name: source.to_string(),
                    column: h.to_string(),
                });
            }
            if index.insert(h.to_string(), i).is_some() {
                return Err(Error::Parse {
                    source_name: source.to_string(),
                    line: 1,
                    message: format!("column `{h}` appears twice"),
                });
            }
        }
        for r in required {
            if !index.contains_key(*r) {
                return Err(Error::MissingColumn {
                    source_name: source.to_string(),
                    column: r.to_string(),
                });
            }
        }
        Ok(Columns { index })
    }

    fn get<'r>(&self, rec: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
        self.index
            .get(name)
            .and_then(|&i| rec.get(i))
            .map(str::trim)
    }
}

struct RowCtx<'a> {
    source: &'a str,
    line: u64,
}

impl RowCtx<'_> {
    fn err(&self, message: String) -> Error {
        Error::Parse {
            source_name: self.source.to_string(),
            line: self.line,
            message,
        }
    }

    fn dup(&self, key: String) -> Error {
        Error::DuplicateKey {
            source_name: self.source.to_string(),
            line: self.line,
            key,
        }
    }

    fn required<'r>(
        &self,
        cols: &Columns,
        rec: &'r csv::StringRecord,
        name: &str,
    ) -> Result<&'r str> {
        match cols.get(rec, name) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(self.err(format!("missing value for `{name}`"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, name: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| self.err(format!("cannot parse `{value}` as {name}")))
    }

    fn optional<T: std::str::FromStr>(
        &self,
        cols: &Columns,
        rec: &csv::StringRecord,
        name: &str,
    ) -> Result<Option<T>> {
        match cols.get(rec, name) {
            None | Some("") => Ok(None),
            Some(v) => self.parse(name, v).map(Some),
        }
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// Iterates records with their 1-based line numbers, converting csv errors.
fn for_each_row<R: Read>(
    source: &str,
    rdr: &mut csv::Reader<R>,
    mut f: impl FnMut(RowCtx<'_>, &csv::StringRecord) -> Result<()>,
) -> Result<usize> {
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            source_name: source.to_string(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        f(RowCtx { source, line }, &rec)?;
        n += 1;
    }
    Ok(n)
}

fn headers<R: Read>(source: &str, rdr: &mut csv::Reader<R>) -> Result<csv::StringRecord> {
    rdr.headers().cloned().map_err(|e| Error::Parse {
        source_name: source.to_string(),
        line: 1,
        message: e.to_string(),
    })
}

struct CountRow {
    city: CityName,
    year: i32,
    b_p: u64,
}

fn parse_counts<R: Read>(source: &str, r: R) -> Result<Vec<CountRow>> {
    let mut rdr = reader(r);
    let hdr = headers(source, &mut rdr)?;
    if hdr.is_empty() {
        return Err(Error::NoRecords(source.to_string()));
    }
    let cols = Columns::from_headers(source, &hdr, &["city", "year", "b_p"], &[])?;
    let mut rows = Vec::new();
    let mut seen = HashMap::new();
    for_each_row(source, &mut rdr, |ctx, rec| {
        let city = CityName::new(ctx.required(&cols, rec, "city")?);
        let year: i32 = ctx.parse("year", ctx.required(&cols, rec, "year")?)?;
        let b_p: u64 = ctx.parse("b_p", ctx.required(&cols, rec, "b_p")?)?;
        if let Some(first) = seen.insert((city.clone(), year), ctx.line) {
            return Err(ctx.dup(format!("({city}, {year}) first seen on line {first}")));
        }
        rows.push(CountRow { city, year, b_p });
        Ok(())
    })?;
    if rows.is_empty() {
        return Err(Error::NoRecords(source.to_string()));
    }
    Ok(rows)
}

struct PopRow {
    n_s: Option<u64>,
    n_f: Option<u64>,
    line: u64,
}

struct Populations {
    rows: BTreeMap<(CityName, i32), PopRow>,
}

fn parse_populations<R: Read>(source: &str, r: R) -> Result<Populations> {
    let mut rdr = reader(r);
    let hdr = headers(source, &mut rdr)?;
    let cols = Columns::from_headers(source, &hdr, &["city", "year", "n_s", "n_f"], &[])?;
    let mut rows = BTreeMap::new();
    for_each_row(source, &mut rdr, |ctx, rec| {
        let city = CityName::new(ctx.required(&cols, rec, "city")?);
        let year: i32 = ctx.parse("year", ctx.required(&cols, rec, "year")?)?;
        let n_s = ctx.optional(&cols, rec, "n_s")?;
        let n_f = ctx.optional(&cols, rec, "n_f")?;
        let key = (city, year);
        if rows.contains_key(&key) {
            return Err(ctx.dup(format!("({}, {})", key.0, key.1)));
        }
        rows.insert(
            key,
            PopRow {
                n_s,
                n_f,
                line: ctx.line,
            },
        );
        Ok(())
    })?;
    Ok(Populations { rows })
}

struct PphTable {
    by_city: HashMap<CityName, f64>,
    by_year: HashMap<(CityName, i32), f64>,
}

impl PphTable {
    fn lookup(&self, city: &CityName, year: i32) -> Option<f64> {
        self.by_year
            .get(&(city.clone(), year))
            .or_else(|| self.by_city.get(city))
            .copied()
    }
}

fn parse_pph<R: Read>(source: &str, r: R) -> Result<PphTable> {
    let mut rdr = reader(r);
    let hdr = headers(source, &mut rdr)?;
    let cols = Columns::from_headers(source, &hdr, &["city", "pph"], &["year"])?;
    let mut table = PphTable {
        by_city: HashMap::new(),
        by_year: HashMap::new(),
    };
    for_each_row(source, &mut rdr, |ctx, rec| {
        let city = CityName::new(ctx.required(&cols, rec, "city")?);
        let pph: f64 = ctx.parse("pph", ctx.required(&cols, rec, "pph")?)?;
        let year: Option<i32> = ctx.optional(&cols, rec, "year")?;
        let dup = match year {
            Some(y) => table.by_year.insert((city.clone(), y), pph).is_some(),
            None => table.by_city.insert(city.clone(), pph).is_some(),
        };
        if dup {
            let key = match year {
                Some(y) => format!("({city}, {y})"),
                None => city.to_string(),
            };
            return Err(ctx.dup(key));
        }
        Ok(())
    })?;
    Ok(table)
}

fn parse_reporting<R: Read>(source: &str, r: R) -> Result<BTreeMap<i32, ReportingRateEstimate>> {
    let mut rdr = reader(r);
    let hdr = headers(source, &mut rdr)?;
    let cols = Columns::from_headers(source, &hdr, &["year", "rate_pct", "se_pct"], &[])?;
    let mut out = BTreeMap::new();
    for_each_row(source, &mut rdr, |ctx, rec| {
        let year: i32 = ctx.parse("year", ctx.required(&cols, rec, "year")?)?;
        let rate_pct: f64 = ctx.parse("rate_pct", ctx.required(&cols, rec, "rate_pct")?)?;
        let se_pct: f64 = ctx.parse("se_pct", ctx.required(&cols, rec, "se_pct")?)?;
        if se_pct < 0.0 {
            return Err(ctx.err(format!("standard error must be nonnegative, got {se_pct}")));
        }
        if out
            .insert(
                year,
                ReportingRateEstimate {
                    year,
                    rate_pct,
                    se_pct,
                },
            )
            .is_some()
        {
            return Err(ctx.dup(year.to_string()));
        }
        Ok(())
    })?;
    Ok(out)
}

/// File contents produced by [`serialize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SerializedSources {
    pub counts: String,
    pub populations: String,
    pub pph: String,
    pub reporting: String,
}

/// Shortest decimal with at least `min_places` places that parses back to `x`.
fn fmt_decimal(x: f64, min_places: usize) -> String {
    let fixed = format!("{x:.min_places$}");
    if fixed.parse::<f64>().ok() == Some(x) {
        fixed
    } else {
        format!("{x:?}")
    }
}

fn write_csv(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes a dataset back to the four file formats. Record order is preserved.
pub fn serialize(ds: &Dataset) -> Result<SerializedSources> {
    let opt = |v: Option<u64>| v.map(|n| n.to_string()).unwrap_or_default();

    let mut counts = vec![vec!["city".into(), "year".into(), "b_p".into()]];
    let mut pops = vec![vec![
        "city".into(),
        "year".into(),
        "n_s".into(),
        "n_f".into(),
    ]];
    for r in &ds.records {
        counts.push(vec![
            r.city.to_string(),
            r.year.to_string(),
            r.b_p.to_string(),
        ]);
        pops.push(vec![
            r.city.to_string(),
            r.year.to_string(),
            opt(r.n_s),
            opt(r.n_f),
        ]);
    }

    let mut cities: Vec<&CityName> = Vec::new();
    for r in &ds.records {
        if !cities.contains(&&r.city) {
            cities.push(&r.city);
        }
    }
    let per_year = cities.iter().any(|c| {
        let mut vals = ds.records.iter().filter(|r| &r.city == *c).map(|r| r.pph);
        let first = vals.next();
        vals.any(|v| Some(v) != first)
    });
    let mut pph = Vec::new();
    if per_year {
        pph.push(vec!["city".into(), "year".into(), "pph".into()]);
        for r in &ds.records {
            pph.push(vec![
                r.city.to_string(),
                r.year.to_string(),
                fmt_decimal(r.pph, 2),
            ]);
        }
    } else {
        pph.push(vec!["city".into(), "pph".into()]);
        for c in cities {
            let v = ds
                .records
                .iter()
                .find(|r| &r.city == c)
                .expect("city has a record")
                .pph;
            pph.push(vec![c.to_string(), fmt_decimal(v, 2)]);
        }
    }

    let mut reporting = vec![vec!["year".into(), "rate_pct".into(), "se_pct".into()]];
    for rr in ds.reporting.values() {
        reporting.push(vec![
            rr.year.to_string(),
            fmt_decimal(rr.rate_pct, 1),
            fmt_decimal(rr.se_pct, 1),
        ]);
    }

    Ok(SerializedSources {
        counts: write_csv(counts)?,
        populations: write_csv(pops)?,
        pph: write_csv(pph)?,
        reporting: write_csv(reporting)?,
    })
}

/// Writes the four files plus `manifest.json` into `dir`.
pub fn write_sources(ds: &Dataset, dir: &Path) -> Result<SourceManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let s = serialize(ds)?;
    let manifest = SourceManifest::in_dir(dir, ds.label.clone());
    for (path, body) in [
        (&manifest.counts_path, &s.counts),
        (&manifest.populations_path, &s.populations),
        (&manifest.pph_path, &s.pph),
        (&manifest.reporting_path, &s.reporting),
    ] {
        fs::write(path, body).map_err(|e| Error::io(path, e))?;
    }
    let relative = SourceManifest::in_dir(Path::new(""), ds.label.clone());
    let json = serde_json::to_string_pretty(&relative)? + "\n";
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, json).map_err(|e| Error::io(&mpath, e))?;
    Ok(manifest)
}
