//! Static SVG line charts.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::eval::SweepPoint;

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

/// A named polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn plot_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::format(path, format!("plot: {e}"))
}

/// Writes a line chart of `series` to an SVG file.
pub fn line_chart(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<()> {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(Error::InsufficientData("nothing to plot".into()));
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    let pad = ((y1 - y0) * 0.05).max(0.01);
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(55)
        .build_cartesian_2d(x0..x1, (y0 - pad)..(y1 + pad))
        .map_err(|e| plot_err(path, e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(|e| plot_err(path, e))?;
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(|e| plot_err(path, e))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))?;
    Ok(())
}

fn by_method(points: &[SweepPoint], value: impl Fn(&SweepPoint) -> f64) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for p in points {
        let idx = match out.iter().position(|s| s.label == p.method) {
            Some(i) => i,
            None => {
                out.push(Series { label: p.method.clone(), points: Vec::new() });
                out.len() - 1
            }
        };
        out[idx].points.push((p.snr_db, value(p)));
    }
    for s in &mut out {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// F1 and same-group similarity against SNR, one file each.
pub fn sweep_charts(f1_path: &Path, similarity_path: &Path, points: &[SweepPoint]) -> Result<()> {
    line_chart(f1_path, "F1 under additive noise", "SNR (dB)", "F1", &by_method(points, |p| p.f1))?;
    line_chart(
        similarity_path,
        "Same-group similarity under additive noise",
        "SNR (dB)",
        "mean similarity",
        &by_method(points, |p| p.same_group_similarity),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_svg() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.svg");
        line_chart(&p, "t", "x", "y", &[Series { label: "s".into(), points: vec![(0.0, 1.0), (1.0, 0.5)] }]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("<svg"));
    }

    #[test]
    fn empty_chart_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(line_chart(&dir.path().join("b.svg"), "t", "x", "y", &[]).is_err());
    }
}
