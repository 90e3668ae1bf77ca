use std::fs;
use std::path::Path;

use oqb::checkpoint::Checkpoint;
use oqb::commands::{cmd_eval, cmd_simulate, cmd_sweep, cmd_train};
use oqb::config::{RunConfig, StaticControl};
use oqb::records::{read_metrics, read_trajectory};
use oqb::Error;
use oqb_core::ddpg::{TrainConfig, Trainer};
use oqb_core::env::{EnvConfig, EnvParams};
use oqb_core::neural::Network;

fn simulate_config(dir: &Path, kappa: f64, eta: f64) -> RunConfig {
    RunConfig {
        point: EnvParams::new(0.0, 0.1, 0.1, 2.0),
        control: Some(StaticControl { kappa, eta }),
        out: Some(dir.to_path_buf()),
        ..RunConfig::default()
    }
}

#[test]
fn simulate_writes_101_rows_on_the_control_grid() {
    let dir = tempfile::tempdir().unwrap();
    let rows = cmd_simulate(&simulate_config(dir.path(), 5.0, 100.0)).unwrap();
    assert_eq!(rows.len(), 101);
    assert_eq!(
        read_trajectory(&dir.path().join("trajectory.csv")).unwrap(),
        rows
    );
    for (k, r) in rows.iter().enumerate() {
        assert!((r.t - 0.1 * k as f64).abs() < 1e-12);
        assert_eq!((r.kappa, r.eta, r.gate), (5.0, 100.0, 1.0));
        assert!((0.0..=1.0).contains(&r.reward));
    }
    assert!(dir.path().join("config.json").exists());
}

#[test]
fn undriven_battery_stays_empty() {
    let dir = tempfile::tempdir().unwrap();
    let rows = cmd_simulate(&simulate_config(dir.path(), 0.0, 0.0)).unwrap();
    assert!(
        rows.iter().all(|r| r.w_max.abs() < 1e-12),
        "{:?}",
        rows.iter().map(|r| r.w_max).fold(0.0, f64::max)
    );
}

#[test]
fn static_baseline_rises_and_oscillates() {
    let dir = tempfile::tempdir().unwrap();
    let rows = cmd_simulate(&simulate_config(dir.path(), 5.0, 100.0)).unwrap();
    let w: Vec<f64> = rows.iter().map(|r| r.w_max).collect();
    assert_eq!(w[0], 0.0);
    assert!(w.iter().cloned().fold(f64::MIN, f64::max) > 0.1);
    let rises = w.windows(2).any(|p| p[1] > p[0]);
    let falls = w.windows(2).any(|p| p[1] < p[0]);
    assert!(rises && falls);
}

#[test]
fn simulate_requires_controls() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = simulate_config(dir.path(), 5.0, 100.0);
    c.control = None;
    assert!(matches!(cmd_simulate(&c), Err(Error::Config(_))));
    c.control = Some(StaticControl {
        kappa: 500.0,
        eta: 1.0,
    });
    assert!(cmd_simulate(&c).is_err());
    assert!(!dir.path().join("trajectory.csv").exists());
}

fn quick_train(dir: &Path, n_updates: usize) -> RunConfig {
    RunConfig {
        env: EnvConfig {
            t_end: 2.0,
            ..EnvConfig::default()
        },
        train: TrainConfig {
            batch: 8,
            window: 5,
            n_updates,
            episodes_per_round: 4,
            updates_per_round: 4,
            checkpoint_every: 5,
            ..TrainConfig::default()
        },
        seed: 11,
        workers: Some(1),
        out: Some(dir.to_path_buf()),
        ..RunConfig::default()
    }
}

#[test]
fn train_writes_metrics_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let summary = cmd_train(&quick_train(dir.path(), 12)).unwrap();
    let metrics = read_metrics(&dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.len(), 12);
    assert_eq!(
        metrics.iter().map(|m| m.update).collect::<Vec<_>>(),
        (1..=12).collect::<Vec<_>>()
    );
    for name in [
        "checkpoint_000005.json",
        "checkpoint_000010.json",
        "checkpoint.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let ck = Checkpoint::load(&summary.checkpoint).unwrap();
    assert_eq!(ck.update_count, 12);
    assert_eq!(ck.actor().unwrap().params(), summary.trainer.actor.params());
}

#[test]
fn training_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = cmd_train(&quick_train(a.path(), 8)).unwrap().metrics;
    let rb = cmd_train(&quick_train(b.path(), 8)).unwrap().metrics;
    let strip = |rows: &[oqb::records::MetricsRecord]| {
        rows.iter()
            .map(|r| {
                (
                    r.update,
                    r.critic_loss.to_bits(),
                    r.actor_loss.to_bits(),
                    r.mean_episode_reward.to_bits(),
                )
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&ra), strip(&rb));
    assert_eq!(
        fs::read_to_string(a.path().join("checkpoint.json")).unwrap(),
        fs::read_to_string(b.path().join("checkpoint.json")).unwrap()
    );
}

#[test]
fn zero_updates_checkpoint_is_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_train(dir.path(), 0);
    cmd_train(&config).unwrap();
    let ck = Checkpoint::load(&dir.path().join("checkpoint.json")).unwrap();
    let init = Trainer::new(config.train, config.env, config.seed).unwrap();
    assert_eq!(ck.actor().unwrap().params(), init.actor.params());
    assert_eq!(ck.critic().unwrap().params(), init.critic.params());
    assert_eq!(ck.update_count, 0);
    assert!(read_metrics(&dir.path().join("metrics.csv"))
        .unwrap()
        .is_empty());
}

#[test]
fn smoke_training_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        train: TrainConfig {
            batch: 64,
            n_updates: 500,
            ..TrainConfig::default()
        },
        seed: 3,
        out: Some(dir.path().to_path_buf()),
        ..RunConfig::default()
    };
    cmd_train(&config).unwrap();
    let metrics = read_metrics(&dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.len(), 500);
    assert!(metrics.iter().all(|m| m.critic_loss.is_finite()));
}

fn with_checkpoint(dir: &Path) -> RunConfig {
    let train_dir = dir.join("train");
    let summary = cmd_train(&quick_train(&train_dir, 4)).unwrap();
    RunConfig {
        env: summary.trainer.env,
        point: EnvParams::new(0.0, 1.0, 0.1, 2.0),
        checkpoint: Some(summary.checkpoint),
        baselines: vec![StaticControl {
            kappa: 5.0,
            eta: 100.0,
        }],
        temperatures: vec![0.0, 1.0],
        ..RunConfig::default()
    }
}

#[test]
fn eval_is_deterministic_and_writes_one_file_per_task() {
    let dir = tempfile::tempdir().unwrap();
    let base = with_checkpoint(dir.path());
    let a = RunConfig {
        out: Some(dir.path().join("a")),
        workers: Some(1),
        ..base.clone()
    };
    let b = RunConfig {
        out: Some(dir.path().join("b")),
        workers: Some(4),
        ..base
    };
    let oa = cmd_eval(&a).unwrap();
    let ob = cmd_eval(&b).unwrap();
    assert_eq!(oa.len(), 4);
    for (x, y) in oa.iter().zip(&ob) {
        assert_eq!(x.label, y.label);
        assert_eq!(fs::read(&x.path).unwrap(), fs::read(&y.path).unwrap());
        assert_eq!(read_trajectory(&x.path).unwrap().len(), 21);
    }
    let labels: Vec<_> = oa.iter().map(|o| o.label.as_str()).collect();
    assert_eq!(
        labels,
        [
            "policy_T0",
            "static_k5_e100_T0",
            "policy_T1",
            "static_k5_e100_T1"
        ]
    );
}

#[test]
fn eval_rejects_bad_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = with_checkpoint(dir.path());
    c.out = Some(dir.path().join("e"));
    let path = c.checkpoint.clone().unwrap();
    let mut ck = Checkpoint::load(&path).unwrap();
    ck.arrays.get_mut("actor/fc2.w").unwrap().shape = vec![1, 1];
    let bad = dir.path().join("bad.json");
    fs::write(&bad, ck.to_json()).unwrap();
    c.checkpoint = Some(bad);
    assert!(matches!(cmd_eval(&c), Err(Error::Checkpoint(_))));
    c.checkpoint = None;
    assert!(matches!(cmd_eval(&c), Err(Error::Config(_))));
}

#[test]
fn sweep_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = with_checkpoint(dir.path());
    c.temperatures.clear();
    c.out = Some(dir.path().join("s"));
    let rows = cmd_sweep(&c).unwrap();
    let n_t = c.env.n_steps() + 1;
    assert_eq!(rows.len(), 11 * n_t);
    assert!(rows
        .iter()
        .all(|r| r.kappa.is_finite() && r.w_max.is_finite()));
    let back = oqb::records::read_sweep(&dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(back, rows);
}

#[test]
fn config_json_round_trips_and_rejects_unknown_fields() {
    let c = RunConfig {
        control: Some(StaticControl {
            kappa: 1.5,
            eta: 2.5,
        }),
        temperatures: vec![0.0, 0.25],
        ..RunConfig::default()
    };
    assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    assert!(RunConfig::from_json(r#"{"train": {"batch": 64, "lr": 1}}"#).is_err());
    let partial = RunConfig::from_json(r#"{"train": {"batch": 64}}"#).unwrap();
    assert_eq!(partial.train.batch, 64);
    assert_eq!(partial.train.lr_critic, TrainConfig::default().lr_critic);
}
