use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use dispinn::dynamics::{BurgersConfig, ProblemSpec};
use dispinn::pinn::{NetSpec, ProblemKind, RunSpec, TrainConfig, TrainMode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Named experiments; each fixes which problem family a config may describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    MassSpringReconstruction,
    MassSpringPrediction,
    BurgersFull,
    BurgersReduced,
    BurgersDetached,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::MassSpringReconstruction => "mass_spring_reconstruction",
            ExperimentId::MassSpringPrediction => "mass_spring_prediction",
            ExperimentId::BurgersFull => "burgers_full",
            ExperimentId::BurgersReduced => "burgers_reduced",
            ExperimentId::BurgersDetached => "burgers_detached",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomSection {
    /// Basis sizes for the reconstruction sweep; the largest is saved.
    pub n_modes: Vec<usize>,
    /// DEIM sample count for the saved operator.
    #[serde(default)]
    pub deim_points: Option<usize>,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

/// One experiment file: problem, run protocol and the seeds to use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub problem: ProblemKind,
    pub run: RunSpec,
    #[serde(default)]
    pub rom: Option<RomSection>,
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<TrainMode>,
    pub jacobian_interval: Option<usize>,
}

impl Overrides {
    fn apply_seeds(&self, seeds: &mut Vec<u64>) {
        if let Some(s) = self.seed {
            *seeds = vec![s];
        }
    }

    fn apply_train(&self, train: &mut TrainConfig) {
        if let Some(m) = self.mode {
            train.mode = m;
        }
        if let Some(k) = self.jacobian_interval {
            train.jacobian_interval = k;
        }
    }
}

pub fn read_toml<C: DeserializeOwned>(path: &Path) -> Result<C, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let mut cfg: Self = read_toml(path)?;
        ov.apply_seeds(&mut cfg.seeds);
        ov.apply_train(&mut cfg.run.train);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds: at least one seed is required".into()));
        }
        self.run.train.validate()?;
        let family_ok = matches!(
            (self.experiment, &self.problem),
            (
                ExperimentId::MassSpringReconstruction | ExperimentId::MassSpringPrediction,
                ProblemKind::RigidBody { .. }
            ) | (
                ExperimentId::BurgersFull | ExperimentId::BurgersDetached,
                ProblemKind::Burgers { .. }
            ) | (ExperimentId::BurgersReduced, ProblemKind::BurgersReduced { .. })
        );
        if !family_ok {
            return Err(CliError::Config(format!(
                "problem.kind does not fit experiment `{}`",
                self.experiment
            )));
        }
        if self.experiment == ExperimentId::BurgersDetached && self.run.train.mode != TrainMode::Detached {
            return Err(CliError::Config("burgers_detached needs run.train.mode = \"detached\"".into()));
        }
        if let Some(rom) = &self.rom {
            if rom.n_modes.is_empty() {
                return Err(CliError::Config("rom.n_modes: list is empty".into()));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seeds[0]
    }

    /// Forward problem whose trajectory gives the snapshots.
    pub fn snapshot_problem(&self) -> ProblemSpec {
        problem_spec(&self.problem)
    }
}

pub fn problem_spec(problem: &ProblemKind) -> ProblemSpec {
    match problem {
        ProblemKind::RigidBody {
            params,
            forcing,
            initial,
        } => ProblemSpec::RigidBody {
            params: *params,
            forcing: *forcing,
            initial: *initial,
        },
        ProblemKind::Burgers { config } | ProblemKind::BurgersReduced { config, .. } => {
            ProblemSpec::Burgers(config.clone())
        }
    }
}

/// Network plus optimiser settings for one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetProfile {
    pub net: NetSpec,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub problem: ProblemKind,
    pub ann: NetProfile,
    pub lstm: NetProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedSection {
    /// Mode counts compared with the full model; DEIM uses as many points.
    pub n_modes: Vec<usize>,
    /// Timed runs per configuration; the median is reported.
    #[serde(default = "one")]
    pub timing_repeats: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StalenessSection {
    pub intervals: Vec<usize>,
}

/// Everything `reproduce` needs: the reference problems, both network
/// families and the fixed seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceConfig {
    pub seeds: Vec<u64>,
    pub mass_spring: Suite,
    pub burgers: Suite,
    pub reduced: ReducedSection,
    pub staleness: StalenessSection,
}

impl ReproduceConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let mut cfg: Self = read_toml(path)?;
        ov.apply_seeds(&mut cfg.seeds);
        for s in [&mut cfg.mass_spring, &mut cfg.burgers] {
            ov.apply_train(&mut s.ann.train);
            ov.apply_train(&mut s.lstm.train);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds: at least one seed is required".into()));
        }
        if !matches!(self.mass_spring.problem, ProblemKind::RigidBody { .. }) {
            return Err(CliError::Config("mass_spring.problem.kind must be rigid_body".into()));
        }
        if !matches!(self.burgers.problem, ProblemKind::Burgers { .. }) {
            return Err(CliError::Config("burgers.problem.kind must be burgers".into()));
        }
        for s in [&self.mass_spring, &self.burgers] {
            s.ann.train.validate()?;
            s.lstm.train.validate()?;
        }
        if self.reduced.timing_repeats == 0 {
            return Err(CliError::Config("reduced.timing_repeats must be at least 1".into()));
        }
        Ok(())
    }

    pub fn burgers_config(&self) -> &BurgersConfig {
        match &self.burgers.problem {
            ProblemKind::Burgers { config } => config,
            _ => unreachable!("validated"),
        }
    }
}

/// Result tables `reproduce` knows how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    Table1,
    Table2,
    Table3,
    Table4,
    /// Five-trial reconstruction statistics for the plunge response.
    MassSpringTrials,
    /// Detached training with different Jacobian refresh intervals.
    JacobianInterval,
}

impl TableId {
    pub const ALL: [TableId; 6] = [
        TableId::Table1,
        TableId::Table2,
        TableId::Table3,
        TableId::Table4,
        TableId::MassSpringTrials,
        TableId::JacobianInterval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TableId::Table1 => "table1",
            TableId::Table2 => "table2",
            TableId::Table3 => "table3",
            TableId::Table4 => "table4",
            TableId::MassSpringTrials => "mass_spring_trials",
            TableId::JacobianInterval => "jacobian_interval",
        }
    }
}

impl FromStr for TableId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TableId::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = TableId::ALL.iter().map(|t| t.as_str()).collect();
            format!("unknown table `{s}`; expected one of {}", names.join(", "))
        })
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
