//! Static SVG line charts, generated from the CSV artifacts so the charts
//! are a pure view of the numbers already written to disk. Data values ride
//! along as XML comments for desk-scale inspection.

use std::fmt::Write as _;

use tei_core::{Error, Result};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 24.0;
const MARGIN_B: f64 = 44.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone)]
pub struct TeiRow {
    pub firm: String,
    pub year: i32,
    pub tei: f64,
}

#[derive(Debug, Clone)]
pub struct TfpgRow {
    pub firm: String,
    pub year: i32,
    pub dtc: f64,
    pub etc: f64,
    pub stc: f64,
    pub se: Option<f64>,
    pub tfpg: Option<f64>,
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::InvalidData(format!("chart input: bad {what} value `{field}`")))
}

fn parse_opt_f64(field: &str, what: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, what).map(Some)
    }
}

/// Parse the efficiency.csv text (firm, year, tei in the first columns).
pub fn parse_efficiency_csv(text: &str) -> Result<Vec<TeiRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(TeiRow {
            firm: record.get(0).unwrap_or_default().to_string(),
            year: record
                .get(1)
                .unwrap_or_default()
                .parse()
                .map_err(|_| Error::InvalidData("chart input: bad year".into()))?,
            tei: parse_f64(record.get(2).unwrap_or_default(), "tei")?,
        });
    }
    Ok(rows)
}

/// Parse the tfpg.csv text (firm, year, dtc, etc, stc, tc, se, tfpg).
pub fn parse_tfpg_csv(text: &str) -> Result<Vec<TfpgRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(TfpgRow {
            firm: record.get(0).unwrap_or_default().to_string(),
            year: record
                .get(1)
                .unwrap_or_default()
                .parse()
                .map_err(|_| Error::InvalidData("chart input: bad year".into()))?,
            dtc: parse_f64(record.get(2).unwrap_or_default(), "dtc")?,
            etc: parse_f64(record.get(3).unwrap_or_default(), "etc")?,
            stc: parse_f64(record.get(4).unwrap_or_default(), "stc")?,
            se: parse_opt_f64(record.get(6).unwrap_or_default(), "se")?,
            tfpg: parse_opt_f64(record.get(7).unwrap_or_default(), "tfpg")?,
        });
    }
    Ok(rows)
}

struct Scale {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Scale {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1e-9);
        MARGIN_L + (v - self.x_min) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-9);
        HEIGHT - MARGIN_B - (v - self.y_min) / span * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n<title>{title}</title>\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    )
}

fn axes(out: &mut String, s: &Scale, years: &[i32], y_label: &str) {
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    for &year in years {
        let x = s.x(f64::from(year));
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>\
             <text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{year}</text>",
            y0 + 4.0,
            y0 + 18.0
        );
    }
    for i in 0..=4 {
        let v = s.y_min + (s.y_max - s.y_min) * f64::from(i) / 4.0;
        let y = s.y(v);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/>\
             <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{v:.3}</text>",
            x0 - 4.0,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{:.2}\" transform=\"rotate(-90 14 {:.2})\" text-anchor=\"middle\">{y_label}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
}

fn polyline(out: &mut String, points: &[(f64, f64)], stroke: &str, dash: &str, width: f64) {
    if points.is_empty() {
        return;
    }
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash_attr = if dash.is_empty() {
        String::new()
    } else {
        format!(" stroke-dasharray=\"{dash}\"")
    };
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"{dash_attr} points=\"{}\"/>",
        pts.join(" ")
    );
}

/// All-firm TEI time-series chart.
pub fn efficiency_chart(rows: &[TeiRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidData("no efficiency rows to chart".into()));
    }
    let mut firms: Vec<String> = rows.iter().map(|r| r.firm.clone()).collect();
    firms.sort();
    firms.dedup();
    let mut years: Vec<i32> = rows.iter().map(|r| r.year).collect();
    years.sort_unstable();
    years.dedup();

    let y_min = rows.iter().map(|r| r.tei).fold(f64::INFINITY, f64::min);
    let y_max = rows.iter().map(|r| r.tei).fold(f64::NEG_INFINITY, f64::max);
    let pad = ((y_max - y_min) * 0.05).max(1e-3);
    let s = Scale {
        x_min: f64::from(years[0]),
        x_max: f64::from(*years.last().unwrap()),
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut out = svg_header("Technical efficiency indices");
    for r in rows {
        let _ = writeln!(out, "<!-- data firm={} year={} tei={} -->", r.firm, r.year, r.tei);
    }
    axes(&mut out, &s, &years, "TEI");
    for (i, firm) in firms.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| &r.firm == firm)
            .map(|r| (s.x(f64::from(r.year)), s.y(r.tei)))
            .collect();
        polyline(&mut out, &points, color, "", 1.5);
        let ly = MARGIN_T + 14.0 * i as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{ly:.2}\" x2=\"{}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{}\" y=\"{:.2}\">{firm}</text>",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 34.0,
            WIDTH - MARGIN_R + 40.0,
            ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Per-firm decomposition chart: DTC, ETC, SE, STC, TFPG series with
/// distinct dash patterns.
pub fn tfpg_chart(firm: &str, rows: &[TfpgRow]) -> Result<String> {
    let rows: Vec<&TfpgRow> = rows.iter().filter(|r| r.firm == firm).collect();
    if rows.is_empty() {
        return Err(Error::InvalidData(format!("no tfpg rows for firm {firm}")));
    }
    let years: Vec<i32> = rows.iter().map(|r| r.year).collect();

    let mut values: Vec<f64> = Vec::new();
    for r in &rows {
        values.extend([r.dtc, r.etc, r.stc]);
        values.extend(r.se);
        values.extend(r.tfpg);
    }
    let y_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((y_max - y_min) * 0.08).max(1e-3);
    let s = Scale {
        x_min: f64::from(years[0]),
        x_max: f64::from(*years.last().unwrap()),
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut out = svg_header(&format!("TFP growth decomposition: {firm}"));
    for r in &rows {
        let _ = writeln!(
            out,
            "<!-- data firm={} year={} dtc={} etc={} stc={} se={:?} tfpg={:?} -->",
            r.firm, r.year, r.dtc, r.etc, r.stc, r.se, r.tfpg
        );
    }
    axes(&mut out, &s, &years, "growth rate");

    // (label, dash pattern, width, extractor)
    type Extract = fn(&TfpgRow) -> Option<f64>;
    let series: [(&str, &str, f64, Extract); 5] = [
        ("DTC", "8 4", 1.5, |r| Some(r.dtc)),
        ("ETC", "2 3", 1.5, |r| Some(r.etc)),
        ("SE", "12 4 2 4", 1.5, |r| r.se),
        ("STC", "", 1.0, |r| Some(r.stc)),
        ("TFPG", "", 2.5, |r| r.tfpg),
    ];
    for (i, (label, dash, width, extract)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| extract(r).map(|v| (s.x(f64::from(r.year)), s.y(v))))
            .collect();
        polyline(&mut out, &points, color, dash, *width);
        let ly = MARGIN_T + 14.0 * i as f64;
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{ly:.2}\" x2=\"{}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"{dash_attr}/>\
             <text x=\"{}\" y=\"{:.2}\">{label}</text>",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 34.0,
            WIDTH - MARGIN_R + 40.0,
            ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficiency_chart_embeds_every_value() {
        let csv = "firm,year,tei,clamped\nA,2012,0.8,false\nA,2013,0.82,false\nB,2012,0.7,false\n";
        let rows = parse_efficiency_csv(csv).unwrap();
        assert_eq!(rows.len(), 3);
        let svg = efficiency_chart(&rows).unwrap();
        assert!(svg.contains("tei=0.8"));
        assert!(svg.contains("tei=0.82"));
        assert!(svg.contains("<polyline"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn flat_series_yields_flat_polyline() {
        let rows = vec![
            TeiRow { firm: "A".into(), year: 2012, tei: 0.5 },
            TeiRow { firm: "A".into(), year: 2013, tei: 0.5 },
            TeiRow { firm: "A".into(), year: 2014, tei: 0.5 },
        ];
        let svg = efficiency_chart(&rows).unwrap();
        // a single y coordinate repeated across the polyline
        let line = svg.lines().find(|l| l.contains("<polyline")).unwrap();
        let ys: Vec<&str> = line
            .split("points=\"")
            .nth(1)
            .unwrap()
            .trim_end_matches("\"/>")
            .split(' ')
            .map(|p| p.split(',').nth(1).unwrap())
            .collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]), "{ys:?}");
    }

    #[test]
    fn tfpg_chart_skips_missing_first_year() {
        let csv = "firm,year,dtc,etc,stc,tc,se,tfpg\n\
                   A,2012,-0.03,0.001,0.002,-0.027,,\n\
                   A,2013,-0.03,0.001,0.002,-0.027,0.01,-0.017\n";
        let rows = parse_tfpg_csv(csv).unwrap();
        assert!(rows[0].se.is_none());
        let svg = tfpg_chart("A", &rows).unwrap();
        assert!(svg.contains("TFPG"));
        assert!(svg.contains("stroke-dasharray"));
    }
}
