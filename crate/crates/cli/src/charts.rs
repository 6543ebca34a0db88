//! Minimal SVG charts. Every chart's numbers are also written as CSV or JSON
//! by the caller.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 4] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(svg: &mut String, title: &str) {
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>
"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0, x1, y1) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
    let _ = write!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>
<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>
<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>
<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>
"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn y_ticks(svg: &mut String, y_max: f64, to_y: impl Fn(f64) -> f64) {
    for t in 0..=4 {
        let v = y_max * t as f64 / 4.0;
        let y = to_y(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0
        );
    }
}

fn legend(svg: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let x = LEFT + 10.0 + 150.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            TOP - 8.0,
            PALETTE[i % PALETTE.len()],
            x + 14.0,
            TOP + 1.0,
            escape(name)
        );
    }
}

/// Line chart of `(pair index, d_i)` with a dashed threshold rule-line.
/// Points above the threshold are drawn in red.
pub fn drift_chart(title: &str, points: &[(usize, f64)], threshold: f64) -> String {
    let mut svg = String::new();
    open(&mut svg, title);
    axes(&mut svg, "pair index i", "d_i");
    let x_min = points.first().map_or(0, |p| p.0) as f64;
    let x_max = points.last().map_or(1, |p| p.0).max(x_min as usize + 1) as f64;
    let y_max = points
        .iter()
        .map(|p| p.1)
        .fold(threshold * 1.5, f64::max)
        .max(1e-9);
    let to_x = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - LEFT - RIGHT);
    let to_y = |y: f64| HEIGHT - BOTTOM - y / y_max * (HEIGHT - TOP - BOTTOM);
    y_ticks(&mut svg, y_max, to_y);
    let step = ((x_max - x_min) / 10.0).ceil().max(1.0) as usize;
    for &(i, _) in points.iter().step_by(step) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{i}</text>"#,
            to_x(i as f64),
            HEIGHT - BOTTOM + 16.0
        );
    }
    let path: Vec<String> = points
        .iter()
        .map(|&(i, d)| format!("{:.1},{:.1}", to_x(i as f64), to_y(d)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
        path.join(" "),
        PALETTE[0]
    );
    for &(i, d) in points {
        let color = if d > threshold { "#d62728" } else { PALETTE[0] };
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
            to_x(i as f64),
            to_y(d)
        );
    }
    let ty = to_y(threshold);
    let _ = write!(
        svg,
        r##"<line x1="{LEFT}" y1="{ty:.1}" x2="{:.1}" y2="{ty:.1}" stroke="#d62728" stroke-dasharray="6 4"/>
<text x="{:.1}" y="{:.1}" text-anchor="end" fill="#d62728">threshold {threshold}</text>
</svg>
"##,
        WIDTH - RIGHT,
        WIDTH - RIGHT,
        ty - 4.0
    );
    svg
}

/// Grouped bars: one group per label, one bar per series, values in [0, 1].
pub fn grouped_bars(title: &str, series: &[&str], groups: &[(String, Vec<f64>)]) -> String {
    let mut svg = String::new();
    open(&mut svg, title);
    axes(&mut svg, "", "average accuracy");
    legend(&mut svg, series);
    let to_y = |y: f64| HEIGHT - BOTTOM - y * (HEIGHT - TOP - BOTTOM);
    y_ticks(&mut svg, 1.0, to_y);
    let span = (WIDTH - LEFT - RIGHT) / groups.len().max(1) as f64;
    let bar = span * 0.8 / series.len().max(1) as f64;
    for (g, (label, values)) in groups.iter().enumerate() {
        let gx = LEFT + span * g as f64 + span * 0.1;
        for (s, &v) in values.iter().enumerate() {
            let y = to_y(v.clamp(0.0, 1.0));
            let _ = writeln!(
                svg,
                r#"<rect x="{:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{}: {v:.4}</title></rect>"#,
                gx + bar * s as f64,
                bar * 0.95,
                HEIGHT - BOTTOM - y,
                PALETTE[s % PALETTE.len()],
                escape(series.get(s).copied().unwrap_or(""))
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            gx + span * 0.4,
            HEIGHT - BOTTOM + 16.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// One row per scenario with a marker at every interval where a model was
/// trained.
pub fn retrain_markers(title: &str, intervals: usize, rows: &[(&str, &[usize])]) -> String {
    let mut svg = String::new();
    open(&mut svg, title);
    axes(&mut svg, "interval", "");
    let n = intervals.max(1) as f64;
    let to_x = |i: f64| LEFT + (i - 0.5) / n * (WIDTH - LEFT - RIGHT);
    let row_h = (HEIGHT - TOP - BOTTOM) / rows.len().max(1) as f64;
    for (r, (name, marks)) in rows.iter().enumerate() {
        let y = TOP + row_h * (r as f64 + 0.5);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#cccccc"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            WIDTH - RIGHT,
            LEFT - 4.0,
            y + 4.0,
            escape(name)
        );
        for &m in *marks {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{y:.1}" r="4" fill="{}"><title>{m}</title></circle>"#,
                to_x(m as f64),
                PALETTE[r % PALETTE.len()]
            );
        }
    }
    let step = (intervals / 10).max(1);
    for i in (1..=intervals).step_by(step) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{i}</text>"#,
            to_x(i as f64),
            HEIGHT - BOTTOM + 16.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_chart_marks_points_above_threshold() {
        let svg = drift_chart("d", &[(2, 0.01), (3, 0.2), (4, 0.02)], 0.05);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches(r##"r="3" fill="#d62728""##).count(), 1);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn bars_and_markers_count() {
        let svg = grouped_bars(
            "acc",
            &["static", "periodic", "drift_aware"],
            &[("a<b".into(), vec![0.5, 0.9, 0.85]), ("c".into(), vec![1.0, 1.0, 1.0])],
        );
        assert_eq!(svg.matches("<rect x").count(), 6 + 3);
        assert!(svg.contains("a&lt;b"));
        let svg = retrain_markers("m", 10, &[("static", &[1]), ("periodic", &[1, 2, 3])]);
        assert_eq!(svg.matches("<circle").count(), 4);
    }
}
