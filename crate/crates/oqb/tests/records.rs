use std::fs;

use oqb::records::*;
use oqb::Error;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e300..1e300f64,
        -1.0..1.0f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
        Just(f64::MAX),
    ]
}

fn trajectory(n: usize) -> impl Strategy<Value = Vec<TrajectoryRow>> {
    prop::collection::vec(prop::array::uniform9(finite()), n).prop_map(|vals| {
        vals.into_iter()
            .enumerate()
            .map(|(k, v)| TrajectoryRow {
                t: k as f64 * 0.1,
                w_max: v[0],
                entropy: v[1],
                population: v[2],
                backflow: v[3],
                power_ab: v[4],
                eta: v[5],
                kappa: v[6],
                gate: v[7],
                reward: v[8],
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectory_round_trip_is_bitwise(rows in trajectory(12)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory(&path, &rows).unwrap();
        let back = read_trajectory(&path).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!(a.w_max.to_bits(), b.w_max.to_bits());
            prop_assert_eq!(a.kappa.to_bits(), b.kappa.to_bits());
            prop_assert_eq!(a.reward.to_bits(), b.reward.to_bits());
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn metrics_and_sweep_round_trip(vals in prop::collection::vec((finite(), finite(), finite(), any::<u32>()), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let metrics: Vec<MetricsRecord> = vals
            .iter()
            .enumerate()
            .map(|(k, &(c, a, r, w))| MetricsRecord { update: k + 1, critic_loss: c, actor_loss: a, mean_episode_reward: r, wall_ms: w as u64 })
            .collect();
        let mp = dir.path().join("m.csv");
        write_metrics(&mp, &metrics).unwrap();
        prop_assert_eq!(read_metrics(&mp).unwrap(), metrics);

        let sweep: Vec<SweepRow> = vals
            .iter()
            .enumerate()
            .map(|(k, &(c, a, _, _))| SweepRow { temperature: 0.5, t: k as f64 * 0.1, kappa: c, w_max: a })
            .collect();
        let sp = dir.path().join("s.csv");
        write_sweep(&sp, &sweep).unwrap();
        prop_assert_eq!(read_sweep(&sp).unwrap(), sweep);
    }
}

fn write(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    fs::write(&path, text).unwrap();
    (dir, path)
}

#[test]
fn headers_identify_schemas() {
    let cols = |c: &[&str]| c.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    assert_eq!(
        Schema::detect(&cols(&TRAJECTORY_COLUMNS)),
        Some(Schema::Trajectory)
    );
    assert_eq!(
        Schema::detect(&cols(&METRICS_COLUMNS)),
        Some(Schema::Metrics)
    );
    assert_eq!(Schema::detect(&cols(&SWEEP_COLUMNS)), Some(Schema::Sweep));
    assert_eq!(Schema::detect(&cols(&["T", "t", "w_max", "kappa"])), None);
    assert_eq!(
        METRICS_COLUMNS.join(","),
        "update,critic_loss,actor_loss,mean_episode_reward,wall_ms"
    );
    assert_eq!(SWEEP_COLUMNS.join(","), "T,t,kappa,w_max");
}

#[test]
fn wrong_schema_is_rejected() {
    let (_d, path) = write("T,t,kappa,w_max\n0,0,1,0\n");
    assert!(matches!(read_trajectory(&path), Err(Error::Schema { .. })));
    assert!(read_sweep(&path).is_ok());
}

#[test]
fn non_finite_values_are_rejected() {
    let (_d, path) = write("T,t,kappa,w_max\n0,0,NaN,0\n");
    assert!(matches!(read_sweep(&path), Err(Error::Schema { .. })));
    let (_d, path) =
        write("update,critic_loss,actor_loss,mean_episode_reward,wall_ms\n1,inf,0,0,3\n");
    assert!(matches!(read_metrics(&path), Err(Error::Schema { .. })));
}

#[test]
fn trajectory_time_must_increase() {
    let header = TRAJECTORY_COLUMNS.join(",");
    let (_d, path) = write(&format!(
        "{header}\n0.1,0,0,0,0,0,0,0,0,0\n0.1,0,0,0,0,0,0,0,0,0\n"
    ));
    assert!(matches!(read_trajectory(&path), Err(Error::Schema { .. })));
}

#[test]
fn malformed_rows_are_rejected() {
    let (_d, path) = write("T,t,kappa,w_max\n0,0,abc,0\n");
    assert!(matches!(read_sweep(&path), Err(Error::Csv { .. })));
    let (_d, path) = write("T,t,kappa,w_max\n0,0,1\n");
    assert!(read_sweep(&path).is_err());
}

#[test]
fn metrics_writer_streams_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let rows: Vec<MetricsRecord> = (1..=5)
        .map(|k| MetricsRecord {
            update: k,
            critic_loss: 1.0 / k as f64,
            actor_loss: -(k as f64),
            mean_episode_reward: 0.5,
            wall_ms: 10 * k as u64,
        })
        .collect();
    {
        let mut w = MetricsWriter::create(&path).unwrap();
        for r in &rows {
            w.push(r).unwrap();
        }
    }
    assert_eq!(read_metrics(&path).unwrap(), rows);
}
