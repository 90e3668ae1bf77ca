use std::fs;
use std::path::PathBuf;

use oqb::plot::{heatmap_svg, line_plot_svg, plot_files, Axis, Series};
use oqb::records::{
    write_metrics, write_sweep, write_trajectory, MetricsRecord, SweepRow, TrajectoryRow,
};
use oqb::Error;

fn parse_points(points: &str) -> Vec<(f64, f64)> {
    points
        .split_whitespace()
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

fn attr(node: roxmltree::Node, name: &str) -> f64 {
    node.attribute(name).unwrap().parse().unwrap()
}

#[test]
fn axis_covers_extrema() {
    for (lo, hi) in [
        (0.0, 1.0),
        (-3.7, 12.2),
        (0.013, 0.014),
        (5.0, 5.0),
        (0.0, 0.0),
        (-1e-9, 2e-9),
        (1e6, 3.3e6),
    ] {
        let a = Axis::covering(lo, hi);
        assert!(a.lo <= lo && a.hi >= hi, "{lo} {hi} -> {a:?}");
        assert!(a.hi > a.lo);
        assert!(a.ticks.len() >= 2 && a.ticks.len() <= 12, "{a:?}");
        assert!((a.ticks[0] - a.lo).abs() < 1e-12 * a.lo.abs().max(1.0));
    }
}

#[test]
fn line_plot_is_well_formed_and_in_frame() {
    let series = vec![
        Series {
            label: "a <&> b".into(),
            points: (0..50)
                .map(|k| (k as f64 * 0.2, (k as f64 * 0.3).sin() * 7.5))
                .collect(),
        },
        Series {
            label: "c".into(),
            points: vec![(-1.0, 20.0), (3.0, -9.0)],
        },
    ];
    let svg = line_plot_svg(&series, "title & more", "t", "w_max").unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let area = doc
        .descendants()
        .find(|n| n.attribute("id") == Some("plot-area"))
        .unwrap();
    assert!(attr(area, "data-x-min") <= -1.0 && attr(area, "data-x-max") >= 9.8);
    assert!(attr(area, "data-y-min") <= -9.0 && attr(area, "data-y-max") >= 20.0);
    let frame = doc
        .descendants()
        .find(|n| n.attribute("id") == Some("frame"))
        .unwrap();
    let (fx, fy, fw, fh) = (
        attr(frame, "x"),
        attr(frame, "y"),
        attr(frame, "width"),
        attr(frame, "height"),
    );
    let lines: Vec<_> = doc
        .descendants()
        .filter(|n| n.has_tag_name("polyline"))
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].attribute("data-label"), Some("a <&> b"));
    for l in lines {
        for (x, y) in parse_points(l.attribute("points").unwrap()) {
            assert!(x >= fx - 0.01 && x <= fx + fw + 0.01 && y >= fy - 0.01 && y <= fy + fh + 0.01);
        }
    }
}

#[test]
fn empty_or_non_finite_series_fail() {
    assert!(matches!(
        line_plot_svg(&[], "", "", ""),
        Err(Error::Plot(_))
    ));
    let empty = Series {
        label: "e".into(),
        points: vec![],
    };
    assert!(line_plot_svg(&[empty], "", "", "").is_err());
    let nan = Series {
        label: "n".into(),
        points: vec![(0.0, f64::NAN)],
    };
    assert!(line_plot_svg(&[nan], "", "", "").is_err());
    assert!(heatmap_svg(&[], "kappa", "").is_err());
}

fn sweep_rows() -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for j in 0..3 {
        for i in 0..=10 {
            rows.push(SweepRow {
                temperature: j as f64 * 0.5,
                t: i as f64,
                kappa: (i * (j + 1)) as f64,
                w_max: 0.1 * i as f64,
            });
        }
    }
    rows
}

#[test]
fn heatmap_has_one_cell_per_row() {
    let rows = sweep_rows();
    let svg = heatmap_svg(&rows, "kappa", "k").unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let cells = doc
        .descendants()
        .find(|n| n.attribute("id") == Some("cells"))
        .unwrap();
    assert_eq!(
        cells.children().filter(|n| n.has_tag_name("rect")).count(),
        rows.len()
    );
    let area = doc
        .descendants()
        .find(|n| n.attribute("id") == Some("plot-area"))
        .unwrap();
    assert!(attr(area, "data-x-min") <= 0.0 && attr(area, "data-x-max") >= 10.0);
    assert!(attr(area, "data-y-min") <= 0.0 && attr(area, "data-y-max") >= 1.0);
    assert!(heatmap_svg(&rows, "gate", "").is_err());
}

fn traj(n: usize) -> Vec<TrajectoryRow> {
    (0..n)
        .map(|k| TrajectoryRow {
            t: k as f64 * 0.1,
            w_max: k as f64,
            entropy: 0.0,
            population: 0.0,
            backflow: 0.0,
            power_ab: 0.0,
            eta: 1.0,
            kappa: 2.0,
            gate: 0.5,
            reward: 0.5,
        })
        .collect()
}

#[test]
fn files_render_by_schema() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("a.csv");
    write_trajectory(&t, &traj(11)).unwrap();
    let s = dir.path().join("s.csv");
    write_sweep(&s, &sweep_rows()).unwrap();
    let m = dir.path().join("m.csv");
    let metrics: Vec<MetricsRecord> = (1..=4)
        .map(|u| MetricsRecord {
            update: u,
            critic_loss: 1.0 / u as f64,
            actor_loss: 0.0,
            mean_episode_reward: 0.0,
            wall_ms: 0,
        })
        .collect();
    write_metrics(&m, &metrics).unwrap();

    for (inputs, column) in [
        (vec![t.clone(), t.clone()], "kappa"),
        (vec![s.clone()], "w_max"),
        (vec![m.clone()], "critic_loss"),
    ] {
        let out = dir.path().join(format!("{column}.svg"));
        plot_files(&inputs, Some(column), None, &out).unwrap();
        roxmltree::Document::parse(&fs::read_to_string(&out).unwrap()).unwrap();
    }

    let out = dir.path().join("x.svg");
    assert!(matches!(
        plot_files(&[t.clone()], Some("bogus"), None, &out),
        Err(Error::Plot(_))
    ));
    assert!(plot_files(&[t.clone(), m.clone()], None, None, &out).is_err());
    assert!(plot_files(&[], None, None, &out).is_err());
    assert!(!out.exists());
}

#[test]
fn empty_csv_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("empty.csv");
    write_trajectory(&t, &[]).unwrap();
    let out: PathBuf = dir.path().join("empty.svg");
    assert!(plot_files(&[t], Some("w_max"), None, &out).is_err());
    assert!(!out.exists());
}
