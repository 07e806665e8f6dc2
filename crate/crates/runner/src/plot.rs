//! Plot-ready tables and an optional SVG of the summary curves.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use plotters::prelude::*;

use crate::aggregate::{write_summary_csv, MethodSummary};
use crate::record::{write_atomic, Metric};

fn value_column(metric: Metric) -> &'static str {
    match metric {
        Metric::Regret => "mean_cumulative_regret",
        Metric::Reward => "mean_cumulative_reward",
    }
}

/// Writes `<method>.csv` per method plus `summary.csv` into `dir`. Output is a
/// pure function of the summaries, so reruns produce identical files.
pub fn emit_plot_data(dir: &Path, summaries: &[MethodSummary]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for s in summaries {
        let mut text = format!("iteration,{},standard_error\n", value_column(s.metric));
        for r in &s.rows {
            text.push_str(&format!("{},{},{}\n", r.iteration, r.mean, r.stderr));
        }
        let path = dir.join(format!("{}.csv", s.method));
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    let summary = dir.join("summary.csv");
    write_summary_csv(&summary, summaries)?;
    written.push(summary);
    Ok(written)
}

/// Mean curves with ±1 standard-error bands.
pub fn render_svg(path: &Path, summaries: &[MethodSummary]) -> Result<()> {
    let horizon = summaries.iter().map(|s| s.rows.len()).max().unwrap_or(1).max(2);
    let (lo, hi) = summaries
        .iter()
        .flat_map(|s| s.rows.iter().flat_map(|r| [r.mean - r.stderr, r.mean + r.stderr]))
        .fold((0.0f64, 1e-9f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let y_label = summaries.first().map_or("value", |s| match s.metric {
        Metric::Regret => "cumulative regret",
        Metric::Reward => "cumulative reward",
    });
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    let err = |e: &dyn std::fmt::Display| anyhow!("plotting: {e}");
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(1usize..horizon, lo..hi * 1.05)
        .map_err(|e| err(&e))?;
    chart.configure_mesh().x_desc("iteration").y_desc(y_label).draw().map_err(|e| err(&e))?;
    for (i, s) in summaries.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let band: Vec<(usize, f64)> = s
            .rows
            .iter()
            .map(|r| (r.iteration, r.mean + r.stderr))
            .chain(s.rows.iter().rev().map(|r| (r.iteration, r.mean - r.stderr)))
            .collect();
        chart.draw_series(std::iter::once(Polygon::new(band, color.mix(0.2)))).map_err(|e| err(&e))?;
        chart
            .draw_series(LineSeries::new(s.rows.iter().map(|r| (r.iteration, r.mean)), color.stroke_width(2)))
            .map_err(|e| err(&e))?
            .label(s.method.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(&e))?;
    root.present().map_err(|e| err(&e))?;
    Ok(())
}
