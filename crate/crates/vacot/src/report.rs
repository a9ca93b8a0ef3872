//! Report rendering: delimited-text summary tables and SVG plots built from
//! episode traces and training reports. Everything here is a pure function of
//! its inputs; only `render_reports` touches the filesystem.

use crate::engine::EpisodeTrace;
use crate::grpo::TrainingReport;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed input {path}: {message}")]
    MalformedInput { path: String, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Counts episodes by the step at which they terminated.
pub fn termination_histogram(traces: &[EpisodeTrace]) -> BTreeMap<usize, usize> {
    let mut histogram = BTreeMap::new();
    for trace in traces {
        *histogram.entry(trace.steps.len()).or_insert(0) += 1;
    }
    histogram
}

/// `steps,episodes` rows; header only for an empty input.
pub fn histogram_table(histogram: &BTreeMap<usize, usize>) -> String {
    let mut out = String::from("steps,episodes\n");
    for (steps, count) in histogram {
        let _ = writeln!(out, "{steps},{count}");
    }
    out
}

/// Mean recorded rewards per refinement iteration across traces.
pub fn per_iteration_reward_table(traces: &[EpisodeTrace]) -> String {
    let mut by_iteration: BTreeMap<usize, (usize, f64, f64, f64)> = BTreeMap::new();
    for trace in traces {
        for step in &trace.steps {
            if let Some(reward) = &step.reward {
                let entry = by_iteration.entry(step.iteration).or_insert((0, 0.0, 0.0, 0.0));
                entry.0 += 1;
                entry.1 += reward.r_total;
                entry.2 += reward.r_visual;
                entry.3 += reward.r_text;
            }
        }
    }
    let mut out = String::from("iteration,episodes,mean_r_total,mean_r_visual,mean_r_text\n");
    for (iteration, (count, total, visual, text)) in by_iteration {
        let n = count as f64;
        let _ = writeln!(
            out,
            "{iteration},{count},{},{},{}",
            total / n,
            visual / n,
            text / n
        );
    }
    out
}

/// One-row summary of a training run.
pub fn training_summary_table(report: &TrainingReport) -> String {
    let mut out = String::from("iterations,initial_reward,final_reward,max_reward,final_kl\n");
    let max_reward = report
        .rows
        .iter()
        .map(|r| r.mean_reward)
        .fold(f64::NEG_INFINITY, f64::max);
    let final_kl = report.rows.last().map(|r| r.kl).unwrap_or(0.0);
    let _ = writeln!(
        out,
        "{},{},{},{},{}",
        report.rows.len(),
        report.initial_mean_reward(),
        report.final_mean_reward(),
        if report.rows.is_empty() { 0.0 } else { max_reward },
        final_kl
    );
    out
}

/// Minimal SVG line plot: axes, tick labels, one polyline.
pub fn line_plot_svg(series: &[(f64, f64)], title: &str, x_label: &str, y_label: &str) -> String {
    const WIDTH: f64 = 640.0;
    const HEIGHT: f64 = 400.0;
    const LEFT: f64 = 64.0;
    const RIGHT: f64 = 24.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 48.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"  <text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape_xml(title)
    );

    if series.is_empty() {
        let _ = writeln!(
            svg,
            r#"  <text x="{}" y="{}" text-anchor="middle">no data</text>"#,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in series {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    let y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let map_x = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let map_y = |y: f64| TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    // Axes.
    let _ = writeln!(
        svg,
        r#"  <line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
        TOP + plot_h
    );
    let _ = writeln!(
        svg,
        r#"  <line x1="{LEFT}" y1="{}" x2="{}" y2="{0}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );

    // Ticks.
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let x_value = x_min + f * (x_max - x_min);
        let y_value = y_min + f * (y_max - y_min);
        let x = map_x(x_value);
        let y = map_y(y_value);
        let _ = writeln!(
            svg,
            r#"  <line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#,
            TOP + plot_h,
            TOP + plot_h + 4.0
        );
        let _ = writeln!(
            svg,
            r#"  <text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            format_tick(x_value)
        );
        let _ = writeln!(
            svg,
            r#"  <line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/>"#,
            LEFT - 4.0
        );
        let _ = writeln!(
            svg,
            r#"  <text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            format_tick(y_value)
        );
    }

    let _ = writeln!(
        svg,
        r#"  <text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape_xml(x_label)
    );
    let _ = writeln!(
        svg,
        r#"  <text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {0})">{}</text>"#,
        TOP + plot_h / 2.0,
        escape_xml(y_label)
    );

    let points: Vec<String> = series
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", map_x(x), map_y(y)))
        .collect();
    let _ = writeln!(
        svg,
        r##"  <polyline fill="none" stroke="#1f6fb2" stroke-width="1.5" points="{}"/>"##,
        points.join(" ")
    );
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(value: f64) -> String {
    if value == value.trunc() && value.abs() < 1e6 {
        format!("{}", value as i64)
    } else {
        format!("{value:.3}")
    }
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// The mean-reward curve of a training run.
pub fn training_reward_curve_svg(report: &TrainingReport) -> String {
    let series: Vec<(f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.iteration as f64, r.mean_reward))
        .collect();
    line_plot_svg(&series, "mean group reward", "iteration", "reward")
}

/// Writes every applicable table and plot under `out_dir`, returning the
/// paths written.
pub fn render_reports(
    traces: &[EpisodeTrace],
    training: Option<&TrainingReport>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, content: String| -> Result<(), ReportError> {
        let path = out_dir.join(name);
        std::fs::write(&path, content)?;
        written.push(path);
        Ok(())
    };

    emit(
        "termination_histogram.csv",
        histogram_table(&termination_histogram(traces)),
    )?;
    emit("per_iteration_rewards.csv", per_iteration_reward_table(traces))?;

    if let Some(report) = training {
        emit("training_summary.csv", training_summary_table(report))?;
        emit("reward_curve.svg", training_reward_curve_svg(report))?;
    }
    Ok(written)
}
