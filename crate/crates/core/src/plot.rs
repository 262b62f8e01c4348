//! Self-contained SVG line plots from in-memory series or CSV artifacts.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotStyle {
    /// One curve per distinct `t` in a `t,grid_x,value` table.
    DensityTrajectory,
    /// `u,lambda` with a horizontal zero line.
    GrowthRate,
    /// First column against each remaining column.
    Columns,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn bounds(series: &[Series], zero_line: bool) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for (&x, &y) in s.xs.iter().zip(&s.ys) {
            if x.is_finite() && y.is_finite() {
                b.0 = b.0.min(x);
                b.1 = b.1.max(x);
                b.2 = b.2.min(y);
                b.3 = b.3.max(y);
            }
        }
    }
    if zero_line {
        b.2 = b.2.min(0.0);
        b.3 = b.3.max(0.0);
    }
    if b.1 <= b.0 {
        b.1 = b.0 + 1.0;
    }
    if b.3 <= b.2 {
        b.3 = b.2 + 1.0;
    }
    b
}

/// Renders line series with axes, tick labels and a legend.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], zero_line: bool) -> Result<String> {
    if series.iter().all(|s| s.xs.is_empty()) {
        return Err(Error::NoRows);
    }
    let (x0, x1, y0, y1) = bounds(series, zero_line);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(out, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(fx), b + 16.0, tick(fx));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 6.0, py(fy) + 4.0, tick(fy));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    if zero_line {
        let _ = writeln!(out, r##"<line x1="{l}" y1="{0:.2}" x2="{r}" y2="{0:.2}" stroke="#888" stroke-dasharray="4 3"/>"##, py(0.0));
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (&x, &y) in s.xs.iter().zip(&s.ys) {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, px(x), py(y));
            pen_down = true;
        }
        let _ = writeln!(out, r#"<path d="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#, d.trim_end());
        if series.len() > 1 && k < 12 {
            let ly = t + 4.0 + 14.0 * k as f64;
            let _ = writeln!(out, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, r - 90.0, r - 70.0);
            let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, r - 64.0, ly + 4.0, escape(&s.name));
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Parses a CSV artifact and renders it in the requested style.
pub fn emit_plot(csv_text: &str, style: PlotStyle, title: &str) -> Result<String> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(csv_text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(|e| Error::Schema(e.to_string()))?.iter().map(str::to_string).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Schema(e.to_string()))?;
        let row = rec
            .iter()
            .map(|c| c.trim().parse::<f64>().map_err(|_| Error::Schema(format!("non-numeric cell {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    let col = |name: &str| header.iter().position(|h| h == name);
    match style {
        PlotStyle::DensityTrajectory => {
            let (Some(ti), Some(xi), Some(vi)) = (col("t"), col("grid_x"), col("value")) else {
                return Err(Error::Schema(format!("expected t,grid_x,value; got {}", header.join(","))));
            };
            let mut series: Vec<Series> = Vec::new();
            for r in &rows {
                let t = r[ti];
                if series.last().map_or(true, |s| s.name != format!("t={}", tick(t))) {
                    series.push(Series { name: format!("t={}", tick(t)), xs: vec![], ys: vec![] });
                }
                let s = series.last_mut().unwrap();
                s.xs.push(r[xi]);
                s.ys.push(r[vi]);
            }
            render_svg(title, "x", "density", &series, false)
        }
        PlotStyle::GrowthRate => {
            let (Some(ui), Some(li)) = (col("u"), col("lambda")) else {
                return Err(Error::Schema(format!("expected u,lambda; got {}", header.join(","))));
            };
            let s = Series { name: "λ(u)".into(), xs: rows.iter().map(|r| r[ui]).collect(), ys: rows.iter().map(|r| r[li]).collect() };
            render_svg(title, "frequency u", "growth rate", &[s], true)
        }
        PlotStyle::Columns => {
            if header.len() < 2 {
                return Err(Error::Schema("need at least two columns".into()));
            }
            let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let series: Vec<Series> = (1..header.len())
                .map(|j| Series { name: header[j].clone(), xs: xs.clone(), ys: rows.iter().map(|r| r[j]).collect() })
                .collect();
            render_svg(title, &header[0], "", &series, false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_trajectory_has_one_path_per_time() {
        let csv = "t,grid_x,value\n0,0,1\n0,1,0.5\n1,0,0.8\n1,1,0.7\n";
        let svg = emit_plot(csv, PlotStyle::DensityTrajectory, "density").unwrap();
        assert_eq!(svg.matches("<path d=\"M").count(), 3);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn growth_rate_has_zero_line() {
        let svg = emit_plot("u,lambda\n0,-1\n1,0.5\n", PlotStyle::GrowthRate, "λ").unwrap();
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert_eq!(emit_plot("u,lambda\n", PlotStyle::GrowthRate, "").unwrap_err(), Error::NoRows);
        assert!(matches!(emit_plot("a,b\n1,2\n", PlotStyle::GrowthRate, ""), Err(Error::Schema(_))));
        assert!(matches!(emit_plot("a,b\n1,x\n", PlotStyle::Columns, ""), Err(Error::Schema(_))));
    }
}
