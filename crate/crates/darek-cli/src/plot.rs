//! Minimal SVG line plots: an optional band polygon plus polylines. The CSVs
//! are the data contract; these figures are display-only.

use crate::config::CliError;
use std::path::Path;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const PAD: f64 = 30.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn finite_min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || hi - lo < 1e-12 {
        (lo.min(0.0), lo.min(0.0) + 1.0)
    } else {
        (lo, hi)
    }
}

/// Writes a line plot of `series` over `xs`, with an optional shaded band.
pub fn write_band_plot(
    path: &Path,
    title: &str,
    xs: &[f64],
    series: &[(&str, &[f64])],
    band: Option<(&[f64], &[f64])>,
) -> Result<(), CliError> {
    let (x_lo, x_hi) = finite_min_max(xs.iter().copied());
    let all_ys = series
        .iter()
        .flat_map(|(_, ys)| ys.iter().copied())
        .chain(band.iter().flat_map(|(lo, hi)| {
            lo.iter().copied().chain(hi.iter().copied())
        }));
    let (y_lo, y_hi) = finite_min_max(all_ys);
    let sx = |x: f64| PAD + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * PAD);
    let sy = |y: f64| HEIGHT - PAD - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * PAD);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{PAD}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n"
    );
    if let Some((lo, hi)) = band {
        let mut points = String::new();
        for (i, &x) in xs.iter().enumerate() {
            if lo[i].is_finite() {
                points.push_str(&format!("{:.2},{:.2} ", sx(x), sy(lo[i])));
            }
        }
        for (i, &x) in xs.iter().enumerate().rev() {
            if hi[i].is_finite() {
                points.push_str(&format!("{:.2},{:.2} ", sx(x), sy(hi[i])));
            }
        }
        svg.push_str(&format!(
            "<polygon points=\"{}\" fill=\"#1f77b4\" opacity=\"0.2\"/>\n",
            points.trim_end()
        ));
    }
    for (idx, (label, ys)) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let mut points = String::new();
        for (&x, &y) in xs.iter().zip(ys.iter()) {
            if y.is_finite() {
                points.push_str(&format!("{:.2},{:.2} ", sx(x), sy(y)));
            }
        }
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            points.trim_end()
        ));
        svg.push_str(&format!(
            "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{color}\">{label}</text>\n",
            WIDTH - PAD - 80.0,
            20.0 + 16.0 * idx as f64
        ));
    }
    svg.push_str("</svg>\n");
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, svg)?;
    Ok(())
}
