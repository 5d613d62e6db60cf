//! Static SVG rendering of the sweep table: median estimate per cell for each
//! estimator, one panel per sweep.

use std::path::Path;

use plotters::prelude::*;

use super::{median, Fig1Row, FIG1_ANCHOR_DIM, FIG1_ANCHOR_SIZE};
use crate::error::{Error, Result};
use crate::shift::EstimatorKind;

type Series = Vec<(f64, f64)>;
type SweepKey = Box<dyn Fn(&Fig1Row) -> Option<f64>>;

/// Draws the sample-size, dimension and distance sweeps side by side. Panels
/// whose sweep has no rows are left empty.
pub fn plot_fig1(rows: &[Fig1Row], path: &Path) -> Result<()> {
    let panels: [(&str, &str, SweepKey); 3] = [
        (
            "d = 70, ‖T‖ = 0",
            "n",
            Box::new(|r| (r.d == FIG1_ANCHOR_DIM && r.offset == 0.0).then_some(r.n as f64)),
        ),
        (
            "n = 1000, ‖T‖ = 0",
            "d",
            Box::new(|r| (r.n == FIG1_ANCHOR_SIZE && r.offset == 0.0).then_some(r.d as f64)),
        ),
        (
            "d = 70, n = 1000",
            "‖T‖",
            Box::new(|r| (r.d == FIG1_ANCHOR_DIM && r.n == FIG1_ANCHOR_SIZE).then_some(r.offset)),
        ),
    ];
    let root = SVGBackend::new(path, (1500, 450)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_error)?;
    for (area, (title, x_label, key)) in root.split_evenly((1, 3)).iter().zip(panels.iter()) {
        let plug_in = medians(rows, EstimatorKind::PlugIn, key);
        let debiased = medians(rows, EstimatorKind::Debiased, key);
        let truth: Series = {
            let mut xs: Vec<f64> = rows
                .iter()
                .filter_map(|r| key(r).map(|x| (x, r.truth)))
                .map(|p| p.0)
                .collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            xs.into_iter()
                .filter_map(|x| rows.iter().find(|r| key(r) == Some(x)).map(|r| (x, r.truth)))
                .collect()
        };
        draw_panel(
            area,
            title,
            x_label,
            &[
                ("plug-in", &plug_in, RED),
                ("debiased", &debiased, BLUE),
                ("truth", &truth, BLACK),
            ],
        )?;
    }
    root.present().map_err(draw_error)?;
    Ok(())
}

fn medians(rows: &[Fig1Row], kind: EstimatorKind, key: &dyn Fn(&Fig1Row) -> Option<f64>) -> Series {
    let mut xs: Vec<f64> = rows.iter().filter(|r| r.estimator == kind).filter_map(key).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.into_iter()
        .map(|x| {
            let m = median(
                rows.iter()
                    .filter(|r| r.estimator == kind && key(r) == Some(x))
                    .map(|r| r.estimate),
            );
            (x, m)
        })
        .filter(|(_, m)| m.is_finite())
        .collect()
}

fn draw_panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    title: &str,
    x_label: &str,
    series: &[(&str, &Series, RGBColor)],
) -> Result<()> {
    let points = series.iter().flat_map(|(_, s, _)| s.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(35)
        .y_label_area_size(45)
        .build_cartesian_2d(x0..x1, 0.0..(y1 * 1.1).max(1.0))
        .map_err(draw_error)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc("estimate")
        .draw()
        .map_err(draw_error)?;
    for (name, s, color) in series {
        let color = *color;
        chart
            .draw_series(LineSeries::new(s.iter().copied(), color.stroke_width(2)))
            .map_err(draw_error)?
            .label(*name)
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_error)?;
    Ok(())
}

fn draw_error<E: std::error::Error + Send + Sync>(e: DrawingAreaErrorKind<E>) -> Error {
    Error::InvalidInput(format!("plot rendering failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_an_svg_with_three_panels() {
        let row = |d, n, offset, estimator, estimate| Fig1Row {
            d,
            n,
            offset,
            seed: 0,
            estimator,
            estimate,
            truth: offset,
            abs_error: (estimate - offset).abs(),
        };
        let rows = vec![
            row(70, 250, 0.0, EstimatorKind::PlugIn, 5.0),
            row(70, 250, 0.0, EstimatorKind::Debiased, 0.2),
            row(70, 1000, 0.0, EstimatorKind::PlugIn, 4.6),
            row(70, 1000, 0.0, EstimatorKind::Debiased, 0.1),
            row(2, 1000, 0.0, EstimatorKind::PlugIn, 0.3),
            row(70, 1000, 4.0, EstimatorKind::Debiased, 4.1),
        ];
        let dir = std::env::temp_dir().join(format!("datashifts-plot-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("fig1.svg");
        plot_fig1(&rows, &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("debiased") && svg.contains("n = 1000"));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
