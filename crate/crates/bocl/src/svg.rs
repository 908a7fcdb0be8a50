//! Minimal self-contained SVG plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: [f64; 4] = [60.0, 20.0, 40.0, 50.0]; // left, right, top, bottom

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>
"#,
        W / 2.0,
        escape(title)
    );
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Polyline plot with markers, plus an optional dashed horizontal reference.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    reference: Option<(&str, f64)>,
) -> String {
    let pts = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = span(pts().map(|p| p.0));
    let (mut y0, mut y1) = span(pts().map(|p| p.1).chain(reference.map(|r| r.1)));
    y0 = y0.min(0.0);
    y1 += 0.05 * (y1 - y0);
    let [ml, mr, mt, mb] = MARGIN;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (W - ml - mr);
    let sy = |y: f64| H - mb - (y - y0) / (y1 - y0) * (H - mt - mb);

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - ml - mr,
        H - mt - mb
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.3}</text>"#, sx(fx), H - mb + 16.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{fy:.3}</text>"#, ml - 4.0, sy(fy) + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    if let Some((label, y)) = reference {
        let _ = writeln!(
            out,
            r#"<line x1="{ml}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="red" stroke-dasharray="6 4"/>"#,
            sy(y),
            W - mr
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" fill="red">{}</text>"#, W - mr - 4.0, sy(y) - 4.0, escape(label));
    }
    let colors = ["#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd"];
    for (i, s) in series.iter().enumerate() {
        let c = colors[i % colors.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#, path.join(" "));
        for p in &path {
            let (x, y) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{c}"/>"#);
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}" fill="{c}">{}</text>"#, ml + 8.0, mt + 16.0 + 14.0 * i as f64, escape(&s.name));
    }
    out.push_str("</svg>\n");
    out
}

/// Grid of colored cells; `values[r][c]`, NaN drawn grey.
pub fn heat_map(
    title: &str,
    row_label: &str,
    col_label: &str,
    rows: &[f64],
    cols: &[f64],
    values: &[Vec<f64>],
) -> String {
    let (lo, hi) = span(values.iter().flatten().copied());
    let [ml, mr, mt, mb] = MARGIN;
    let cw = (W - ml - mr) / cols.len().max(1) as f64;
    let ch = (H - mt - mb) / rows.len().max(1) as f64;
    let mut out = String::new();
    header(&mut out, title);
    for (r, row) in values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let fill = if v.is_finite() {
                let f = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
                format!("rgb({},{},{})", (255.0 * f) as u8, (80.0 + 100.0 * (1.0 - f)) as u8, (255.0 * (1.0 - f)) as u8)
            } else {
                "#bbbbbb".to_string()
            };
            let (x, y) = (ml + c as f64 * cw, mt + r as f64 * ch);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cw:.1}" height="{ch:.1}" fill="{fill}" stroke="white"><title>{v:.6}</title></rect>"#
            );
            if cw > 40.0 && ch > 16.0 {
                let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{v:.3}</text>"#, x + cw / 2.0, y + ch / 2.0 + 4.0);
            }
        }
    }
    for (c, v) in cols.iter().enumerate() {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v}</text>"#, ml + (c as f64 + 0.5) * cw, H - mb + 16.0);
    }
    for (r, v) in rows.iter().enumerate() {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v}</text>"#, ml - 4.0, mt + (r as f64 + 0.5) * ch + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, escape(col_label));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(row_label)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_has_reference_and_series() {
        let s = Series {
            name: "err".into(),
            points: vec![(1.5, 0.01), (2.0, 0.02)],
        };
        let svg = line_plot("t", "x", "y", &[s], Some(("0.08 m", 0.08)));
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("stroke-dasharray"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn heat_map_draws_every_cell() {
        let svg = heat_map("t", "d", "r", &[0.57, 0.88], &[1.0, 2.0, 3.0], &[vec![1.0, 2.0, f64::NAN], vec![0.5, 1.0, 1.5]]);
        assert_eq!(svg.matches("<rect x=").count(), 6);
        assert!(svg.contains("#bbbbbb"));
    }
}
