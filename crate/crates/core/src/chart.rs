//! Static SVG dot-and-interval charts: one panel per city, one interval bar
//! and one point-estimate marker per year.
//!
//! Plotted values are the display-rounded numbers that also appear in the
//! report bundle.

use std::fmt::Write as _;

use crate::bounds::BoundsResult;
use crate::comparison::Metric;
use crate::report::{metric_places, Num};

const PANEL_W: f64 = 170.0;
const PANEL_H: f64 = 260.0;
const COLS: usize = 5;
const MARGIN_L: f64 = 60.0;
const MARGIN_T: f64 = 60.0;
const PLOT_TOP: f64 = 30.0;
const PLOT_BOTTOM: f64 = 40.0;

fn title(metric: Metric) -> &'static str {
    match metric {
        Metric::ActualCount => "Residential Burglaries (Actual Count) Estimates",
        Metric::RatePopulation => "Residential Burglary Rate (Population) Estimates",
        Metric::RateHousehold => "Residential Burglary Rate (Household) Estimates",
    }
}

fn axis_label(metric: Metric) -> &'static str {
    match metric {
        Metric::ActualCount => "burglaries",
        Metric::RatePopulation => "per 100,000 persons",
        Metric::RateHousehold => "per 1,000 households",
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// A tick step of 1, 2 or 5 times a power of ten giving roughly `n` ticks.
fn nice_step(range: f64, n: f64) -> f64 {
    if !(range > 0.0) {
        return 1.0;
    }
    let raw = range / n;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

struct Point {
    year: i32,
    lb: Num,
    ub: Num,
    point: Num,
    incomplete: bool,
}

/// Renders the chart for `metric`. Results should be sorted by city and year.
pub fn render_svg(results: &[BoundsResult], metric: Metric) -> String {
    let places = metric_places(metric);
    let mut cities: Vec<(String, Vec<Point>)> = Vec::new();
    for r in results {
        let est = metric.estimate(r);
        let p = Point {
            year: r.year,
            lb: Num::with_places(est.interval.lb(), places),
            ub: Num::with_places(est.interval.ub(), places),
            point: Num::with_places(est.point, places),
            incomplete: r.incomplete,
        };
        match cities.last_mut() {
            Some((c, pts)) if c == r.city.as_str() => pts.push(p),
            _ => cities.push((r.city.to_string(), vec![p])),
        }
    }
    let mut years: Vec<i32> = results.iter().map(|r| r.year).collect();
    years.sort_unstable();
    years.dedup();

    let y_max = cities
        .iter()
        .flat_map(|(_, pts)| pts.iter().flat_map(|p| [p.ub.value(), p.point.value()]))
        .fold(0.0f64, f64::max);
    let step = nice_step(y_max, 5.0);
    let top = ((y_max / step).ceil() * step).max(step);

    let ncols = COLS.min(cities.len().max(1));
    let nrows = cities.len().div_ceil(COLS).max(1);
    let width = MARGIN_L + ncols as f64 * PANEL_W + 20.0;
    let height = MARGIN_T + nrows as f64 * PANEL_H + 50.0;
    let plot_h = PANEL_H - PLOT_TOP - PLOT_BOTTOM;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        s,
        "<style>.interval,.legend-interval{{stroke:#1f4e79;stroke-width:3}}.cap{{stroke:#1f4e79;stroke-width:2}}.point,.legend-point{{fill:#c0392b}}.grid{{stroke:#ddd;stroke-width:1}}.frame{{fill:none;stroke:#888}}</style>"
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="18">{}</text>"#,
        width / 2.0,
        title(metric)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-size="11" transform="rotate(-90 16 {:.1})" text-anchor="middle">{}</text>"#,
        MARGIN_T + nrows as f64 * PANEL_H / 2.0,
        MARGIN_T + nrows as f64 * PANEL_H / 2.0,
        axis_label(metric)
    );

    let mut any_incomplete = false;
    for (i, (city, pts)) in cities.iter().enumerate() {
        let x0 = MARGIN_L + (i % COLS) as f64 * PANEL_W;
        let y0 = MARGIN_T + (i / COLS) as f64 * PANEL_H;
        let plot_x0 = x0 + 10.0;
        let plot_w = PANEL_W - 20.0;
        let py = |v: f64| y0 + PLOT_TOP + plot_h * (1.0 - v / top);
        let _ = writeln!(s, r#"<g class="panel" data-city="{}">"#, esc(city));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
            x0 + PANEL_W / 2.0,
            y0 + 18.0,
            esc(city)
        );
        let mut tick = 0.0;
        while tick <= top + step * 1e-9 {
            let y = py(tick);
            let _ = writeln!(
                s,
                r#"<line class="grid" x1="{plot_x0:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}"/>"#,
                plot_x0 + plot_w
            );
            if i % COLS == 0 {
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="9">{}</text>"#,
                    plot_x0 - 4.0,
                    y + 3.0,
                    Num::with_places(tick, places)
                );
            }
            tick += step;
        }
        let _ = writeln!(
            s,
            r#"<rect class="frame" x="{plot_x0:.1}" y="{:.1}" width="{plot_w:.1}" height="{plot_h:.1}"/>"#,
            y0 + PLOT_TOP
        );
        for p in pts {
            let slot = years.iter().position(|&y| y == p.year).unwrap_or(0);
            let x = plot_x0 + plot_w * (slot as f64 + 0.5) / years.len().max(1) as f64;
            let (ylb, yub) = (py(p.lb.value()), py(p.ub.value()));
            let label = format!(
                "{} {}: [{}, {}]; standard {}{}",
                city,
                p.year,
                p.lb,
                p.ub,
                p.point,
                if p.incomplete { " (incomplete)" } else { "" }
            );
            let _ = writeln!(
                s,
                r#"<line class="interval" x1="{x:.1}" y1="{yub:.1}" x2="{x:.1}" y2="{ylb:.1}"><title>{}</title></line>"#,
                esc(&label)
            );
            for yc in [ylb, yub] {
                let _ = writeln!(
                    s,
                    r#"<line class="cap" x1="{:.1}" y1="{yc:.1}" x2="{:.1}" y2="{yc:.1}"/>"#,
                    x - 6.0,
                    x + 6.0
                );
            }
            let _ = writeln!(
                s,
                r#"<circle class="point" cx="{x:.1}" cy="{:.1}" r="4"><title>{}</title></circle>"#,
                py(p.point.value()),
                esc(&label)
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}{}</text>"#,
                y0 + PANEL_H - PLOT_BOTTOM + 14.0,
                p.year,
                if p.incomplete { "*" } else { "" }
            );
            if p.incomplete {
                any_incomplete = true;
                let _ = writeln!(
                    s,
                    r##"<text class="incomplete" x="{:.1}" y="{:.1}" font-size="12" fill="#c0392b">*</text>"##,
                    x + 7.0,
                    yub - 2.0
                );
            }
        }
        let _ = writeln!(s, "</g>");
    }

    let legend_y = height - 28.0;
    let _ = writeln!(
        s,
        r#"<line class="legend-interval" x1="{MARGIN_L:.1}" y1="{:.1}" x2="{MARGIN_L:.1}" y2="{:.1}"/>"#,
        legend_y - 8.0,
        legend_y + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="11">interval estimate</text>"#,
        MARGIN_L + 8.0,
        legend_y
    );
    let _ = writeln!(
        s,
        r#"<circle class="legend-point" cx="{:.1}" cy="{:.1}" r="4"/>"#,
        MARGIN_L + 130.0,
        legend_y - 3.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="11">standard point estimate</text>"#,
        MARGIN_L + 140.0,
        legend_y
    );
    if any_incomplete {
        let _ = writeln!(
            s,
            r#"<text class="footnote" x="{MARGIN_L:.1}" y="{:.1}" font-size="11">* incomplete: only one population estimate was published for this city-year</text>"#,
            legend_y + 18.0
        );
    }
    s.push_str("</svg>\n");
    s
}
