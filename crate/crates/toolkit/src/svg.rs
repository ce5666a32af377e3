//! Static SVG charts: grouped bars for delta reports, and a labelled scatter
//! for 2-D projections.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#4e79a7", "#e15759", "#59a14f", "#f28e2b", "#b07aa1", "#76b7b2"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );
}

fn legend(out: &mut String, names: &[String]) {
    for (i, name) in names.iter().enumerate() {
        let x = MARGIN + 140.0 * i as f64;
        let y = HEIGHT - 14.0;
        let _ = writeln!(
            out,
            "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{:.2}\" y=\"{y:.2}\">{}</text>",
            y - 9.0,
            PALETTE[i % PALETTE.len()],
            x + 14.0,
            escape(name)
        );
    }
}

/// Symmetric value range with a little headroom, never empty.
fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.08 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Grouped bar chart; `groups` holds one value per series for each category.
pub fn bar_chart(title: &str, series: &[String], groups: &[(String, Vec<f64>)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (lo, hi) = extent(groups.iter().flat_map(|(_, v)| v.iter().copied()));
    let plot_h = HEIGHT - 2.0 * MARGIN - 10.0;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let y_of = |v: f64| MARGIN + (hi - v) / (hi - lo) * plot_h;
    let zero = y_of(0.0);
    let _ = writeln!(
        out,
        "<line x1=\"{MARGIN}\" y1=\"{zero:.2}\" x2=\"{:.2}\" y2=\"{zero:.2}\" stroke=\"black\"/>",
        MARGIN + plot_w
    );
    for v in [lo, 0.0, hi] {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.1}</text>",
            MARGIN - 6.0,
            y_of(v) + 4.0
        );
    }
    let slot = plot_w / groups.len().max(1) as f64;
    let bar_w = 0.8 * slot / series.len().max(1) as f64;
    for (g, (label, values)) in groups.iter().enumerate() {
        let x0 = MARGIN + g as f64 * slot + 0.1 * slot;
        for (s, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let y = y_of(v);
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{bar_w:.2}\" height=\"{:.2}\" fill=\"{}\"><title>{}: {v:.2}</title></rect>",
                x0 + s as f64 * bar_w,
                y.min(zero),
                (y - zero).abs(),
                PALETTE[s % PALETTE.len()],
                escape(&series.get(s).cloned().unwrap_or_default())
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            x0 + 0.4 * slot,
            MARGIN + plot_h + 18.0,
            escape(label)
        );
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}

/// Scatter plot coloured by label, in order of first appearance.
pub fn scatter(title: &str, points: &[(f64, f64, String)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let mut labels: Vec<String> = Vec::new();
    for (_, _, l) in points {
        if !labels.contains(l) {
            labels.push(l.clone());
        }
    }
    let (x_lo, x_hi) = extent(points.iter().map(|p| p.0));
    let (y_lo, y_hi) = extent(points.iter().map(|p| p.1));
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN - 10.0;
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{plot_w:.2}\" height=\"{plot_h:.2}\" fill=\"none\" stroke=\"#999\"/>"
    );
    for (x, y, l) in points {
        let idx = labels.iter().position(|k| k == l).unwrap_or(0);
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.7\"/>",
            MARGIN + (x - x_lo) / (x_hi - x_lo) * plot_w,
            MARGIN + (y_hi - y) / (y_hi - y_lo) * plot_h,
            PALETTE[idx % PALETTE.len()]
        );
    }
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bar_chart_has_one_rect_per_finite_value() {
        let svg = bar_chart(
            "a < b",
            &["x".into(), "y".into()],
            &[("R@1".into(), vec![-10.0, 5.0]), ("MedR".into(), vec![3.0, f64::NAN])],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<title>").count(), 3);
    }

    #[test]
    fn scatter_draws_every_point() {
        let pts = vec![(0.0, 0.0, "p".into()), (1.0, 2.0, "h".into()), (1.0, 2.0, "p".into())];
        let svg = scatter("proj", &pts);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.ends_with("</svg>\n"));
    }
}
