//! JSON checkpoints: named, shaped flat arrays for the four networks and
//! the optimizer moments.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use oqb_core::ddpg::{TrainConfig, Trainer};
use oqb_core::env::EnvConfig;
use oqb_core::neural::{ActorNet, Adam, CriticNet, Network};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Array {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    pub train: TrainConfig,
    pub env: EnvConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSteps {
    pub actor: u64,
    pub critic: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub hyperparameters: Hyperparameters,
    pub rng_seed: u64,
    pub update_count: usize,
    pub optimizer_steps: OptimizerSteps,
    pub arrays: BTreeMap<String, Array>,
}

const ACTOR: &str = "actor";
const CRITIC: &str = "critic";
const TARGET_ACTOR: &str = "target_actor";
const TARGET_CRITIC: &str = "target_critic";

fn export(arrays: &mut BTreeMap<String, Array>, prefix: &str, net: &impl Network) {
    for seg in net.layout().segments() {
        arrays.insert(
            format!("{prefix}/{}", seg.name),
            Array {
                shape: vec![seg.rows, seg.cols],
                data: net.params()[seg.range()].to_vec(),
            },
        );
    }
}

fn export_moments(arrays: &mut BTreeMap<String, Array>, prefix: &str, opt: &Adam) {
    for (name, v) in [("m", &opt.m), ("v", &opt.v)] {
        arrays.insert(
            format!("{prefix}_adam/{name}"),
            Array {
                shape: vec![v.len()],
                data: v.clone(),
            },
        );
    }
}

impl Checkpoint {
    pub fn from_trainer(trainer: &Trainer) -> Self {
        let mut arrays = BTreeMap::new();
        export(&mut arrays, ACTOR, &trainer.actor);
        export(&mut arrays, CRITIC, &trainer.critic);
        export(&mut arrays, TARGET_ACTOR, &trainer.target_actor);
        export(&mut arrays, TARGET_CRITIC, &trainer.target_critic);
        export_moments(&mut arrays, ACTOR, &trainer.actor_opt);
        export_moments(&mut arrays, CRITIC, &trainer.critic_opt);
        Self {
            format_version: FORMAT_VERSION,
            hyperparameters: Hyperparameters {
                train: trainer.config,
                env: trainer.env,
            },
            rng_seed: trainer.seed,
            update_count: trainer.update_count(),
            optimizer_steps: OptimizerSteps {
                actor: trainer.actor_opt.step,
                critic: trainer.critic_opt.step,
            },
            arrays,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Self =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks the version and every array's shape against the network layouts.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        for (name, arr) in &self.arrays {
            let expected: usize = arr.shape.iter().product();
            if arr.data.len() != expected {
                return Err(Error::Checkpoint(format!(
                    "{name}: shape {:?} holds {expected} values but data has {}",
                    arr.shape,
                    arr.data.len()
                )));
            }
        }
        self.actor()?;
        self.critic()?;
        self.load_into(TARGET_ACTOR, ActorNet::zeroed())?;
        self.load_into(TARGET_CRITIC, CriticNet::zeroed())?;
        let n_actor = ActorNet::zeroed().n_params();
        let n_critic = CriticNet::zeroed().n_params();
        for (prefix, n) in [(ACTOR, n_actor), (CRITIC, n_critic)] {
            for m in ["m", "v"] {
                self.moment(prefix, m, n)?;
            }
        }
        Ok(())
    }

    fn array(&self, name: &str) -> Result<&Array> {
        self.arrays
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing array {name}")))
    }

    fn load_into<N: Network>(&self, prefix: &str, mut net: N) -> Result<N> {
        let segments = net.layout().segments().to_vec();
        for seg in segments {
            let name = format!("{prefix}/{}", seg.name);
            let arr = self.array(&name)?;
            if arr.shape != [seg.rows, seg.cols] {
                return Err(Error::Checkpoint(format!(
                    "{name}: shape {:?}, expected {:?}",
                    arr.shape,
                    [seg.rows, seg.cols]
                )));
            }
            net.params_mut()[seg.range()].copy_from_slice(&arr.data);
        }
        let expected = net.layout().segments().len();
        let present = self
            .arrays
            .keys()
            .filter(|k| k.starts_with(&format!("{prefix}/")))
            .count();
        if present != expected {
            return Err(Error::Checkpoint(format!(
                "{prefix}: {present} arrays, expected {expected}"
            )));
        }
        Ok(net)
    }

    fn moment(&self, prefix: &str, m: &str, n: usize) -> Result<Vec<f64>> {
        let name = format!("{prefix}_adam/{m}");
        let arr = self.array(&name)?;
        if arr.shape != [n] {
            return Err(Error::Checkpoint(format!(
                "{name}: shape {:?}, expected [{n}]",
                arr.shape
            )));
        }
        Ok(arr.data.clone())
    }

    pub fn actor(&self) -> Result<ActorNet> {
        self.load_into(ACTOR, ActorNet::zeroed())
    }

    pub fn critic(&self) -> Result<CriticNet> {
        self.load_into(CRITIC, CriticNet::zeroed())
    }

    /// Rebuilds a trainer with the saved networks and optimizer state. The
    /// replay buffer starts empty and the training stream is re-seeded.
    pub fn restore_trainer(&self) -> Result<Trainer> {
        let hp = &self.hyperparameters;
        let mut trainer = Trainer::new(hp.train, hp.env, self.rng_seed)?;
        trainer.actor = self.actor()?;
        trainer.critic = self.critic()?;
        trainer.target_actor = self.load_into(TARGET_ACTOR, ActorNet::zeroed())?;
        trainer.target_critic = self.load_into(TARGET_CRITIC, CriticNet::zeroed())?;
        for (opt, prefix, steps) in [
            (&mut trainer.actor_opt, ACTOR, self.optimizer_steps.actor),
            (&mut trainer.critic_opt, CRITIC, self.optimizer_steps.critic),
        ] {
            let n = opt.m.len();
            opt.m = self.moment(prefix, "m", n)?;
            opt.v = self.moment(prefix, "v", n)?;
            opt.step = steps;
        }
        Ok(trainer)
    }
}
