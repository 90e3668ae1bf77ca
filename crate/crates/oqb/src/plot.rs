//! Self-contained SVG rendering: line plots for trajectories and training
//! curves, heatmaps for temperature sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::records::{read_header, read_metrics, read_sweep, read_trajectory, Schema, SweepRow};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One labelled curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A closed interval with evenly spaced round tick values.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub ticks: Vec<f64>,
}

impl Axis {
    /// Smallest "nice" interval containing `[min, max]`.
    pub fn covering(min: f64, max: f64) -> Self {
        let (mut min, mut max) = (min, max);
        if max - min <= f64::EPSILON * max.abs().max(1.0) {
            let pad = if min == 0.0 { 0.5 } else { 0.1 * min.abs() };
            min -= pad;
            max += pad;
        }
        let raw = (max - min) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 2.5, 5.0, 10.0]
            .into_iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let lo = (min / step).floor() * step;
        let hi = (max / step).ceil() * step;
        let n = ((hi - lo) / step).round() as usize;
        let ticks = (0..=n).map(|k| lo + k as f64 * step).collect();
        // Rounding in the tick arithmetic can land a hair inside the data.
        Self {
            lo: lo.min(min),
            hi: hi.max(max),
            ticks,
        }
    }

    fn map(&self, v: f64, from: f64, to: f64) -> f64 {
        from + (v - self.lo) / (self.hi - self.lo) * (to - from)
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, x: &Axis, y: &Axis, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        svg,
        r#"<g id="plot-area" data-x-min="{}" data-x-max="{}" data-y-min="{}" data-y-max="{}">"#,
        x.lo, x.hi, y.lo, y.hi
    );
    let _ = writeln!(
        svg,
        r#"<rect id="frame" x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for &t in &x.ticks {
        let px = x.map(t, x0, x1);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + 19.0,
            tick_label(t)
        );
    }
    for &t in &y.ticks {
        let py = y.map(t, y0, y1);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    svg.push_str("</g>\n");
}

/// Renders curves on shared axes. Fails on an empty or non-finite series.
pub fn line_plot_svg(
    series: &[Series],
    title: &str,
    x_label: &str,
    y_label: &str,
) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Plot("no series to plot".into()));
    }
    let mut bounds = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for s in series {
        if s.points.is_empty() {
            return Err(Error::Plot(format!("series {:?} is empty", s.label)));
        }
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                return Err(Error::Plot(format!(
                    "series {:?} has a non-finite point",
                    s.label
                )));
            }
            bounds = (
                bounds.0.min(x),
                bounds.1.max(x),
                bounds.2.min(y),
                bounds.3.max(y),
            );
        }
    }
    let x = Axis::covering(bounds.0, bounds.1);
    let y = Axis::covering(bounds.2, bounds.3);
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &x, &y, x_label, y_label);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = String::new();
        for &(px, py) in &s.points {
            let _ = write!(
                pts,
                "{:.2},{:.2} ",
                x.map(px, LEFT, WIDTH - RIGHT),
                y.map(py, HEIGHT - BOTTOM, TOP)
            );
        }
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            escape(&s.label),
            pts.trim_end()
        );
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Piecewise-linear approximation of the viridis colormap on [0, 1].
fn colormap(u: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let u = u.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (u.floor() as usize).min(STOPS.len() - 2);
    let f = u - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Edges of cells centred on the given coordinates.
fn cell_edges(centres: &[f64]) -> Vec<f64> {
    if centres.len() == 1 {
        return vec![centres[0] - 0.5, centres[0] + 0.5];
    }
    let mut edges = Vec::with_capacity(centres.len() + 1);
    edges.push(centres[0] - (centres[1] - centres[0]) / 2.0);
    for w in centres.windows(2) {
        edges.push((w[0] + w[1]) / 2.0);
    }
    let n = centres.len();
    edges.push(centres[n - 1] + (centres[n - 1] - centres[n - 2]) / 2.0);
    edges
}

/// Heatmap of `column` (`kappa` or `w_max`) over time and temperature.
pub fn heatmap_svg(rows: &[SweepRow], column: &str, title: &str) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Plot("sweep has no rows".into()));
    }
    let value = |r: &SweepRow| match column {
        "kappa" => Ok(r.kappa),
        "w_max" => Ok(r.w_max),
        other => Err(Error::Plot(format!(
            "heatmaps show kappa or w_max, not {other:?}"
        ))),
    };
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for r in rows {
        let v = value(r)?;
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    let ts = sorted_unique(rows.iter().map(|r| r.t).collect());
    let temps = sorted_unique(rows.iter().map(|r| r.temperature).collect());
    let t_edges = cell_edges(&ts);
    let temp_edges = cell_edges(&temps);
    let x = Axis::covering(t_edges[0], t_edges[t_edges.len() - 1]);
    let y = Axis::covering(temp_edges[0], temp_edges[temp_edges.len() - 1]);
    let mut svg = String::new();
    header(&mut svg, title);
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };
    svg.push_str("<g id=\"cells\">\n");
    for r in rows {
        let i = ts.partition_point(|&v| v < r.t);
        let j = temps.partition_point(|&v| v < r.temperature);
        let px0 = x.map(t_edges[i], LEFT, WIDTH - RIGHT);
        let px1 = x.map(t_edges[i + 1], LEFT, WIDTH - RIGHT);
        let py0 = y.map(temp_edges[j + 1], HEIGHT - BOTTOM, TOP);
        let py1 = y.map(temp_edges[j], HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            svg,
            r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            px1 - px0,
            py1 - py0,
            colormap((value(r)? - vmin) / span)
        );
    }
    svg.push_str("</g>\n");
    axes(&mut svg, &x, &y, "t", "T");
    let bx = WIDTH - RIGHT + 24.0;
    let bh = HEIGHT - TOP - BOTTOM;
    let n = 32;
    for k in 0..n {
        let y0 = TOP + bh * (1.0 - (k + 1) as f64 / n as f64);
        let _ = writeln!(
            svg,
            r#"<rect x="{bx}" y="{y0:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            bh / n as f64 + 0.5,
            colormap((k as f64 + 0.5) / n as f64)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}">{}</text>"#,
        bx + 24.0,
        TOP + 10.0,
        tick_label(vmax)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}">{}</text>"#,
        bx + 24.0,
        TOP + bh,
        tick_label(vmin)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{bx}" y="{}">{}</text>"#,
        TOP - 6.0,
        escape(column)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Value columns accepted for each schema.
pub fn plottable_columns(schema: Schema) -> &'static [&'static str] {
    match schema {
        Schema::Trajectory => &crate::records::TRAJECTORY_COLUMNS[1..],
        Schema::Metrics => &[
            "critic_loss",
            "actor_loss",
            "mean_episode_reward",
            "wall_ms",
        ],
        Schema::Sweep => &["kappa", "w_max"],
    }
}

pub fn default_column(schema: Schema) -> &'static str {
    match schema {
        Schema::Trajectory => "w_max",
        Schema::Metrics => "critic_loss",
        Schema::Sweep => "kappa",
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into())
}

fn column_value(header: &[&str], values: &[f64], column: &str) -> f64 {
    values[header
        .iter()
        .position(|c| *c == column)
        .expect("column checked")]
}

/// Renders the given CSV files (all of one schema) to a single SVG at `out`.
/// Nothing is written when the inputs cannot be plotted.
pub fn plot_files(
    inputs: &[PathBuf],
    column: Option<&str>,
    title: Option<&str>,
    out: &Path,
) -> Result<PathBuf> {
    let first = inputs
        .first()
        .ok_or_else(|| Error::Plot("no input files".into()))?;
    let header = read_header(first)?;
    let schema = Schema::detect(&header)
        .ok_or_else(|| Error::schema(first, format!("unrecognized columns {header:?}")))?;
    for p in &inputs[1..] {
        if Schema::detect(&read_header(p)?) != Some(schema) {
            return Err(Error::schema(
                p,
                "all inputs to one plot must share a schema",
            ));
        }
    }
    let column = column.unwrap_or(default_column(schema));
    if !plottable_columns(schema).contains(&column) {
        return Err(Error::Plot(format!(
            "unknown column {column:?}; expected one of {:?}",
            plottable_columns(schema)
        )));
    }
    let title = title
        .map(str::to_owned)
        .unwrap_or_else(|| column.to_owned());
    let svg = match schema {
        Schema::Sweep => {
            if inputs.len() != 1 {
                return Err(Error::Plot("a heatmap takes exactly one sweep file".into()));
            }
            heatmap_svg(&read_sweep(first)?, column, &title)?
        }
        Schema::Trajectory => {
            let cols = crate::records::TRAJECTORY_COLUMNS;
            let mut series = Vec::new();
            for p in inputs {
                let points = read_trajectory(p)?
                    .iter()
                    .map(|r| {
                        let v = [
                            r.t,
                            r.w_max,
                            r.entropy,
                            r.population,
                            r.backflow,
                            r.power_ab,
                            r.eta,
                            r.kappa,
                            r.gate,
                            r.reward,
                        ];
                        (r.t, column_value(&cols, &v, column))
                    })
                    .collect();
                series.push(Series {
                    label: stem(p),
                    points,
                });
            }
            line_plot_svg(&series, &title, "t", column)?
        }
        Schema::Metrics => {
            let cols = [
                "critic_loss",
                "actor_loss",
                "mean_episode_reward",
                "wall_ms",
            ];
            let mut series = Vec::new();
            for p in inputs {
                let points = read_metrics(p)?
                    .iter()
                    .map(|r| {
                        let v = [
                            r.critic_loss,
                            r.actor_loss,
                            r.mean_episode_reward,
                            r.wall_ms as f64,
                        ];
                        (r.update as f64, column_value(&cols, &v, column))
                    })
                    .collect();
                series.push(Series {
                    label: stem(p),
                    points,
                });
            }
            line_plot_svg(&series, &title, "update", column)?
        }
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(out, svg).map_err(|e| Error::io(out, e))?;
    Ok(out.to_path_buf())
}
