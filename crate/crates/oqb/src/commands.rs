//! The `simulate`, `train`, `eval` and `sweep` commands. Each returns its
//! in-memory result and writes CSV files into the configured directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use oqb_core::ddpg::{MetricsRow, TrainObserver, Trainer};
use oqb_core::env::{
    reward_breakdown, ControlSignal, EnvConfig, EnvParams, Environment, StepResult,
};
use oqb_core::neural::{ActorNet, RecurrentState};

use crate::checkpoint::Checkpoint;
use crate::config::{Mode, RunConfig, StaticControl};
use crate::error::{Error, Result};
use crate::parallel::{map_ordered, worker_count, ThreadedSource};
use crate::records::{
    write_sweep, write_trajectory, MetricsRecord, MetricsWriter, SweepRow, TrajectoryRow,
};

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn row_from_step(step: &StepResult) -> TrajectoryRow {
    let i = &step.info;
    TrajectoryRow {
        t: i.t,
        w_max: i.w_max,
        entropy: i.entropy,
        population: i.population,
        backflow: i.backflow,
        power_ab: i.power_ab,
        eta: i.eta,
        kappa: i.kappa,
        gate: i.gate,
        reward: step.reward,
    }
}

/// The `t = 0` row: observables of the initial state under the first control.
fn initial_row(env: &Environment, control: ControlSignal) -> Result<TrajectoryRow> {
    let work = env.observables(control.kappa)?;
    let cfg = env.config();
    let reward = reward_breakdown(
        work.w_max,
        work.backflow,
        control.gate,
        cfg.backflow_sign,
        cfg.penalty_b,
    );
    Ok(TrajectoryRow {
        t: env.time(),
        w_max: work.w_max,
        entropy: work.entropy,
        population: work.population,
        backflow: work.backflow,
        power_ab: work.power_ab,
        eta: control.eta,
        kappa: control.kappa,
        gate: control.gate,
        reward: reward.normalized,
    })
}

/// Runs one episode, asking `controller` for the control of each interval.
fn rollout<F>(
    config: &EnvConfig,
    params: EnvParams,
    step_bound: f64,
    mut controller: F,
) -> Result<Vec<TrajectoryRow>>
where
    F: FnMut(&Environment) -> Result<ControlSignal>,
{
    let mut env = Environment::new(*config, params)?;
    env.set_step_bound(step_bound);
    let mut rows = Vec::with_capacity(env.n_steps() + 1);
    let mut control = controller(&env)?;
    rows.push(initial_row(&env, control)?);
    loop {
        let step = env.step_control(control)?;
        rows.push(row_from_step(&step));
        if step.done {
            break;
        }
        control = controller(&env)?;
    }
    Ok(rows)
}

/// Trajectory under constant controls.
pub fn static_trajectory(
    config: &EnvConfig,
    params: EnvParams,
    control: StaticControl,
    step_bound: f64,
) -> Result<Vec<TrajectoryRow>> {
    let signal = control.signal();
    rollout(config, params, step_bound, |_| Ok(signal))
}

/// Noise-free trajectory of a stateful actor.
pub fn policy_trajectory(
    actor: &ActorNet,
    config: &EnvConfig,
    params: EnvParams,
    step_bound: f64,
) -> Result<Vec<TrajectoryRow>> {
    let mut state = RecurrentState::zeros(1);
    rollout(config, params, step_bound, |env| {
        let a = actor.act(&env.observation().0, &mut state);
        Ok(ControlSignal::decode(&a, env.config())?)
    })
}

fn save_config(config: &RunConfig, dir: &Path) -> Result<()> {
    let path = dir.join("config.json");
    fs::write(&path, config.to_json()).map_err(|e| Error::io(&path, e))
}

/// Compact, filename-safe rendering of a temperature.
pub fn temperature_tag(t: f64) -> String {
    format!("T{t}")
}

pub fn cmd_simulate(config: &RunConfig) -> Result<Vec<TrajectoryRow>> {
    config.validate(Mode::Simulate)?;
    let control = config.control.expect("validated");
    let rows = static_trajectory(&config.env, config.point, control, config.step_bound)?;
    let dir = config.out_dir();
    ensure_dir(&dir)?;
    save_config(config, &dir)?;
    write_trajectory(&dir.join("trajectory.csv"), &rows)?;
    Ok(rows)
}

/// Streams metrics to CSV and writes periodic checkpoints.
struct FileObserver {
    dir: PathBuf,
    metrics: MetricsWriter,
    rows: Vec<MetricsRecord>,
    start: Instant,
    failed: usize,
    error: Option<Error>,
}

impl TrainObserver for FileObserver {
    fn metrics(&mut self, row: &MetricsRow) {
        let record = MetricsRecord {
            update: row.update,
            critic_loss: row.critic_loss,
            actor_loss: row.actor_loss,
            mean_episode_reward: row.mean_episode_reward,
            wall_ms: self.start.elapsed().as_millis() as u64,
        };
        if let Err(e) = self.metrics.push(&record) {
            self.error.get_or_insert(e);
        }
        self.rows.push(record);
    }

    fn checkpoint(&mut self, trainer: &Trainer) -> oqb_core::Result<()> {
        let path = self
            .dir
            .join(format!("checkpoint_{:06}.json", trainer.update_count()));
        Checkpoint::from_trainer(trainer)
            .save(&path)
            .map_err(|e| oqb_core::Error::Invalid(e.to_string()))
    }

    fn episode_failed(&mut self, seed: u64, error: &oqb_core::Error) {
        self.failed += 1;
        eprintln!("episode {seed:#x} dropped: {error}");
    }

    fn update_skipped(&mut self, update: usize, error: &oqb_core::Error) {
        eprintln!("update {update} skipped: {error}");
    }
}

/// Outcome of a training run.
#[derive(Debug)]
pub struct TrainSummary {
    pub trainer: Trainer,
    pub metrics: Vec<MetricsRecord>,
    pub failed_episodes: usize,
    pub checkpoint: PathBuf,
}

pub fn cmd_train(config: &RunConfig) -> Result<TrainSummary> {
    config.validate(Mode::Train)?;
    let dir = config.out_dir();
    ensure_dir(&dir)?;
    save_config(config, &dir)?;
    let mut trainer = Trainer::new(config.train, config.env, config.seed)?;
    let mut source = ThreadedSource::new(worker_count(config.workers));
    let mut observer = FileObserver {
        metrics: MetricsWriter::create(&dir.join("metrics.csv"))?,
        dir: dir.clone(),
        rows: Vec::new(),
        start: Instant::now(),
        failed: 0,
        error: None,
    };
    trainer.run(&mut source, &mut observer)?;
    observer.metrics.flush()?;
    if let Some(e) = observer.error.take() {
        return Err(e);
    }
    let checkpoint = dir.join("checkpoint.json");
    Checkpoint::from_trainer(&trainer).save(&checkpoint)?;
    Ok(TrainSummary {
        trainer,
        metrics: observer.rows,
        failed_episodes: observer.failed,
        checkpoint,
    })
}

fn load_actor(config: &RunConfig) -> Result<(ActorNet, EnvConfig)> {
    let path = config.checkpoint.as_ref().expect("validated");
    let ckpt = Checkpoint::load(path)?;
    Ok((ckpt.actor()?, config.env))
}

/// One evaluated trajectory and the file it was written to.
#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub label: String,
    pub temperature: f64,
    pub path: PathBuf,
    pub rows: Vec<TrajectoryRow>,
}

pub fn cmd_eval(config: &RunConfig) -> Result<Vec<EvalOutput>> {
    config.validate(Mode::Eval)?;
    let (actor, env) = load_actor(config)?;
    let dir = config.out_dir();
    ensure_dir(&dir)?;
    save_config(config, &dir)?;
    let mut tasks: Vec<(String, f64, Option<StaticControl>)> = Vec::new();
    for t in config.eval_temperatures() {
        tasks.push((format!("policy_{}", temperature_tag(t)), t, None));
        for b in &config.baselines {
            tasks.push((format!("{}_{}", b.label(), temperature_tag(t)), t, Some(*b)));
        }
    }
    let results = map_ordered(
        &tasks,
        worker_count(config.workers),
        |(label, t, control)| {
            let params = EnvParams {
                temperature: *t,
                ..config.point
            };
            let rows = match control {
                Some(c) => static_trajectory(&env, params, *c, config.step_bound)?,
                None => policy_trajectory(&actor, &env, params, config.step_bound)?,
            };
            let path = dir.join(format!("{label}.csv"));
            write_trajectory(&path, &rows)?;
            Ok(EvalOutput {
                label: label.clone(),
                temperature: *t,
                path,
                rows,
            })
        },
    );
    results.into_iter().collect()
}

pub fn cmd_sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    config.validate(Mode::Sweep)?;
    let (actor, env) = load_actor(config)?;
    let temps = config.sweep_temperatures();
    let per_t = map_ordered(&temps, worker_count(config.workers), |&t| {
        let params = EnvParams {
            temperature: t,
            ..config.point
        };
        policy_trajectory(&actor, &env, params, config.step_bound).map(|rows| {
            rows.into_iter()
                .map(|r| SweepRow {
                    temperature: t,
                    t: r.t,
                    kappa: r.kappa,
                    w_max: r.w_max,
                })
                .collect::<Vec<_>>()
        })
    });
    let mut rows = Vec::new();
    for r in per_t {
        rows.extend(r?);
    }
    let dir = config.out_dir();
    ensure_dir(&dir)?;
    save_config(config, &dir)?;
    write_sweep(&dir.join("sweep.csv"), &rows)?;
    Ok(rows)
}

/// Renders the configured figure from the files a command produced. The
/// SVG goes to `<out>/<id>.svg`.
pub fn render_figure(config: &RunConfig, inputs: &[PathBuf]) -> Result<Option<PathBuf>> {
    let Some(fig) = &config.figure else {
        return Ok(None);
    };
    let out = config.out_dir().join(format!("{}.svg", fig.id));
    crate::plot::plot_files(inputs, Some(&fig.column), Some(&fig.title), &out).map(Some)
}
