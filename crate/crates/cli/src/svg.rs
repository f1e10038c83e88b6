//! Hand-written SVG line plots of distance profiles.

use std::fmt::Write;

use mixlab::DistanceProfile;

use crate::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One polyline per profile on shared linear axes, `d` in `[0, 1]`.
pub fn emit_plot(profiles: &[DistanceProfile], comment: &str) -> Result<String, CliError> {
    if profiles.is_empty() || profiles.iter().any(|p| p.times.is_empty()) {
        return Err(CliError::input("EmptyProfile: nothing to plot"));
    }
    let t_lo = profiles.iter().flat_map(|p| p.times.iter().copied()).fold(f64::INFINITY, f64::min);
    let t_hi = profiles.iter().flat_map(|p| p.times.iter().copied()).fold(f64::NEG_INFINITY, f64::max);
    let span = if t_hi > t_lo { t_hi - t_lo } else { 1.0 };
    let x = |t: f64| MARGIN + (t - t_lo) / span * (WIDTH - 2.0 * MARGIN);
    let y = |d: f64| HEIGHT - MARGIN - d.clamp(0.0, 1.0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(s, "<!-- {} -->", comment.replace("--", "- -"));
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}" fill="none" stroke="black"/>"#);
    for (label, tx, ty, anchor) in [
        (format!("{t_lo}"), x0, y0 + 16.0, "start"),
        (format!("{t_hi}"), x1, y0 + 16.0, "end"),
        ("0".to_string(), x0 - 6.0, y0, "end"),
        ("1".to_string(), x0 - 6.0, y1 + 4.0, "end"),
        ("t".to_string(), (x0 + x1) / 2.0, y0 + 32.0, "middle"),
    ] {
        let _ = writeln!(s, r#"<text x="{tx:.2}" y="{ty:.2}" font-size="12" text-anchor="{anchor}">{label}</text>"#);
    }
    for (i, p) in profiles.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = p.times.iter().zip(&p.values).map(|(&t, &d)| format!("{:.2},{:.2}", x(t), y(d))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, points.join(" "));
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}"/>"#, x1 - 90.0, x1 - 70.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#, x1 - 64.0, ly + 4.0, p.mode);
    }
    s.push_str("</svg>\n");
    Ok(s)
}
