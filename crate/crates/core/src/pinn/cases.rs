use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{
    max_abs_error, relative_error, train, BurgersProvider, ExternalSolver, Horizon, LossReport, Objective,
    PinnError, ReducedBurgersProvider, ResidualProvider, RigidBodyProvider, Supervision, TrainConfig, TrainMode,
};
use crate::dynamics::{
    burgers_march, convective_term, periodic_amplitude_bound, rigid_body_march, BurgersConfig, ForcingSeries,
    InitialState, RigidBodyParams, RigidBodyState, SinusoidalForcing,
};
use crate::linalg::{matmul, matmul_tr, DenseMatrix};
use crate::neural::{make_sequences, Activation, ArchSpec, MinMaxScaler, Model, Network, SequenceBatch};
use crate::rom::{build_deim_operator, compute_pod, ModeSelector, PodBasis, SnapshotSet};
use crate::Scalar;

/// Network family and size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetSpec {
    Mlp { hidden: Vec<usize> },
    Lstm { hidden: usize, seq_len: usize },
}

impl Default for NetSpec {
    fn default() -> Self {
        NetSpec::Mlp {
            hidden: vec![124, 64, 24, 8],
        }
    }
}

impl NetSpec {
    pub fn label(&self) -> &'static str {
        match self {
            NetSpec::Mlp { .. } => "ANN",
            NetSpec::Lstm { .. } => "LSTM",
        }
    }

    /// Number of leading levels the network does not predict.
    pub fn context(&self) -> usize {
        match self {
            NetSpec::Mlp { .. } => 0,
            NetSpec::Lstm { seq_len, .. } => *seq_len,
        }
    }

    fn arch(&self, features: usize, outputs: usize) -> ArchSpec {
        match self {
            NetSpec::Mlp { hidden } => {
                let mut sizes = vec![features];
                sizes.extend(hidden);
                sizes.push(outputs);
                ArchSpec::Mlp {
                    sizes,
                    activation: Activation::Tanh,
                }
            }
            NetSpec::Lstm { hidden, seq_len } => ArchSpec::Lstm {
                features,
                hidden: *hidden,
                outputs,
                seq_len: *seq_len,
            },
        }
    }
}

/// Supervised levels besides the anchor at the first predicted level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataPoints {
    Count(usize),
    All,
}

/// Levels whose update equations enter the physics loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqnSpan {
    Full,
    /// The first `n` equations after the anchor level.
    Prefix(usize),
}

// Both read as either an integer or a keyword ("all" / "full").
macro_rules! count_or_keyword {
    ($ty:ident, $variant:ident, $count:ident, $kw:literal) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                match self {
                    $ty::$variant => s.serialize_str($kw),
                    $ty::$count(n) => s.serialize_u64(*n as u64),
                }
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                #[derive(Deserialize)]
                #[serde(untagged)]
                enum Raw {
                    N(u64),
                    S(String),
                }
                match Raw::deserialize(d)? {
                    Raw::N(n) => Ok($ty::$count(n as usize)),
                    Raw::S(s) if s == $kw => Ok($ty::$variant),
                    Raw::S(s) => Err(serde::de::Error::custom(format!(
                        "expected a count or \"{}\", got \"{s}\"",
                        $kw
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self {
                    $ty::$variant => f.write_str($kw),
                    $ty::$count(n) => write!(f, "{n}"),
                }
            }
        }
    };
}

count_or_keyword!(DataPoints, All, Count, "all");
count_or_keyword!(EqnSpan, Full, Prefix, "full");

/// The forward problem a network is trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemKind {
    RigidBody {
        params: RigidBodyParams,
        forcing: SinusoidalForcing,
        #[serde(default)]
        initial: InitialState,
    },
    Burgers {
        config: BurgersConfig,
    },
    BurgersReduced {
        config: BurgersConfig,
        n_modes: usize,
        /// DEIM sample count; plain Galerkin when absent.
        #[serde(default)]
        deim_points: Option<usize>,
    },
}

fn default_physics() -> bool {
    true
}

fn default_hard() -> bool {
    true
}

/// One training run: network, protocol and optimiser settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub net: NetSpec,
    pub data_points: DataPoints,
    pub eqn: EqnSpan,
    /// `false` trains on data only (the physics term is still reported).
    #[serde(default = "default_physics")]
    pub physics: bool,
    /// Pin the Burgers initial row and boundary columns instead of
    /// learning them.
    #[serde(default = "default_hard")]
    pub hard_constraints: bool,
    /// Overrides the physics-derived output scale.
    #[serde(default)]
    pub output_scale: Option<f64>,
    pub train: TrainConfig,
}

/// Error measure reported for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `‖pred − ref‖/‖ref‖` of one state column over the predicted levels.
    RelativeError { column: usize },
    /// Largest pointwise error over the predicted levels of the full field.
    MaxAbs,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::RelativeError { .. } => "relative_error",
            Metric::MaxAbs => "max_abs_error",
        }
    }
}

/// Network input matching the architecture.
#[derive(Debug, Clone)]
pub enum CaseInput<T> {
    Dense(DenseMatrix<T>),
    Sequence(SequenceBatch<T>),
}

/// A fully assembled training problem, independent of the random choices
/// made per run (initial weights and supervision levels).
pub struct PinnCase<T: Scalar> {
    pub arch: ArchSpec,
    pub input: CaseInput<T>,
    pub horizon: Horizon<T>,
    pub provider: Box<dyn ResidualProvider<T>>,
    /// Reference horizon in the network's state space.
    pub reference: DenseMatrix<T>,
    /// Reference in physical variables (levels × physical width).
    pub physical_reference: DenseMatrix<T>,
    /// Maps reduced coordinates back to the grid.
    pub basis: Option<PodBasis<T>>,
    pub metric: Metric,
    /// First predicted level; always supervised.
    pub anchor: usize,
}

impl<T: Scalar> PinnCase<T> {
    /// Anchor level plus `points` further predicted levels drawn without replacement.
    pub fn sample_data_levels(&self, points: DataPoints, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let others: Vec<usize> = self.horizon.out_levels().iter().copied().filter(|&l| l != self.anchor).collect();
        let mut levels = vec![self.anchor];
        match points {
            DataPoints::All => levels.extend(others),
            DataPoints::Count(n) => {
                levels.extend(others.choose_multiple(rng, n.min(others.len())).copied());
                levels[1..].sort_unstable();
            }
        }
        levels
    }

    /// Physical-space prediction for a reduced or full horizon.
    pub fn to_physical(&self, y: &DenseMatrix<T>) -> Result<DenseMatrix<T>, PinnError> {
        Ok(match &self.basis {
            Some(b) => matmul_tr(y, &b.phi)?,
            None => y.clone(),
        })
    }

    pub fn error(&self, y: &DenseMatrix<T>) -> Result<f64, PinnError> {
        let phys = self.to_physical(y)?;
        let levels = self.horizon.out_levels();
        let pick = |m: &DenseMatrix<T>, cols: &[usize]| -> Vec<T> {
            levels
                .iter()
                .flat_map(|&l| cols.iter().map(move |&c| m[(l, c)]))
                .collect()
        };
        let all: Vec<usize> = (0..phys.cols()).collect();
        let v = match self.metric {
            Metric::RelativeError { column } => relative_error(
                &pick(&phys, &[column]),
                &pick(&self.physical_reference, &[column]),
            )?,
            Metric::MaxAbs => max_abs_error(&pick(&phys, &all), &pick(&self.physical_reference, &all))?,
        };
        Ok(v.as_f64())
    }

    pub fn predict(&self, model: &Model<T>) -> Result<DenseMatrix<T>, PinnError> {
        let out = match (model, &self.input) {
            (Model::Mlp(m), CaseInput::Dense(x)) => m.forward(x)?,
            (Model::Lstm(l), CaseInput::Sequence(s)) => l.forward(s)?,
            _ => return Err(PinnError::Config("network does not match the case input".into())),
        };
        self.horizon.assemble(&out)
    }
}

fn net_input<T: Scalar>(features: &DenseMatrix<T>, net: &NetSpec) -> Result<CaseInput<T>, PinnError> {
    let scaled = MinMaxScaler::fit(features)?.transform(features)?;
    Ok(match net {
        NetSpec::Mlp { .. } => CaseInput::Dense(scaled),
        NetSpec::Lstm { seq_len, .. } => CaseInput::Sequence(make_sequences(
            &scaled,
            &DenseMatrix::zeros(scaled.rows(), 0),
            *seq_len,
        )?),
    })
}

fn eqn_levels(anchor: usize, levels: usize, span: EqnSpan) -> Result<Vec<usize>, PinnError> {
    let first = anchor + 1;
    let end = match span {
        EqnSpan::Full => levels,
        EqnSpan::Prefix(n) => (first + n).min(levels),
    };
    if first >= end {
        return Err(PinnError::Config(format!(
            "no equation levels between {first} and {end}"
        )));
    }
    Ok((first..end).collect())
}

fn time_features<T: Scalar>(n_t: usize, dt: f64) -> DenseMatrix<T> {
    DenseMatrix::from_fn(n_t, 1, |n, _| T::lit(n as f64 * dt))
}

/// Assembles inputs, layout, physics and reference data for `problem`.
pub fn build_case<T: Scalar>(problem: &ProblemKind, spec: &RunSpec) -> Result<PinnCase<T>, PinnError> {
    let ctx = spec.net.context();
    match problem {
        ProblemKind::RigidBody {
            params,
            forcing,
            initial,
        } => {
            let n = params.n_steps;
            if ctx + 2 > n {
                return Err(PinnError::Config(format!("{n} levels cannot hold a sequence of {ctx}")));
            }
            let series = ForcingSeries::<T>::sinusoidal(forcing, n);
            let z0 = match initial {
                InitialState::Periodic => RigidBodyState::periodic_start(params, forcing)?,
                InitialState::Rest => RigidBodyState::rest(),
            };
            let tr = rigid_body_march(params, &series, &z0)?;
            let reference = DenseMatrix::from_fn(n, 2, |l, c| tr.states[(c, l)]);
            let scale = match spec.output_scale {
                Some(s) => s,
                None => {
                    let b = periodic_amplitude_bound(params, forcing)?;
                    b[0].max(b[1])
                }
            };
            let mut horizon = Horizon::new(n, 2, (ctx..n).collect(), vec![0, 1], T::lit(scale))?;
            for l in 0..ctx {
                horizon.fix_level(l, reference.row(l));
            }
            let anchor = ctx;
            let provider = RigidBodyProvider::new(params, &series, [z0.z[2], z0.z[3]], eqn_levels(anchor, n, spec.eqn)?)?;
            Ok(PinnCase {
                arch: spec.net.arch(2, 2),
                input: net_input(&series.as_matrix(), &spec.net)?,
                horizon,
                provider: Box::new(provider),
                physical_reference: reference.clone(),
                reference,
                basis: None,
                metric: Metric::RelativeError { column: 0 },
                anchor,
            })
        }
        ProblemKind::Burgers { config } => {
            let (n_t, n_x) = (config.n_t, config.n_x);
            if ctx + 2 > n_t {
                return Err(PinnError::Config(format!("{n_t} levels cannot hold a sequence of {ctx}")));
            }
            let reference = burgers_march::<T>(config)?.states.transpose();
            let cols: Vec<usize> = if spec.hard_constraints {
                (1..n_x - 1).collect()
            } else {
                (0..n_x).collect()
            };
            let scale = spec.output_scale.unwrap_or_else(|| {
                let ic = config.initial_field::<f64>();
                ic.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(config.bc[0].abs()).max(config.bc[1].abs())
            });
            let mut horizon = Horizon::new(n_t, n_x, (ctx..n_t).collect(), cols, T::lit(scale))?;
            for l in 0..ctx {
                horizon.fix_level(l, reference.row(l));
            }
            if spec.hard_constraints {
                horizon.fix_column(0, &vec![T::lit(config.bc[0]); n_t]);
                horizon.fix_column(n_x - 1, &vec![T::lit(config.bc[1]); n_t]);
                if ctx == 0 {
                    horizon.fix_level(0, &config.initial_field::<T>());
                }
            }
            let anchor = ctx;
            let provider = BurgersProvider::new(config, eqn_levels(anchor, n_t, spec.eqn)?)?;
            Ok(PinnCase {
                arch: spec.net.arch(1, horizon.output_shape().1),
                input: net_input(&time_features(n_t, config.dt), &spec.net)?,
                horizon,
                provider: Box::new(provider),
                physical_reference: reference.clone(),
                reference,
                basis: None,
                metric: Metric::MaxAbs,
                anchor,
            })
        }
        ProblemKind::BurgersReduced {
            config,
            n_modes,
            deim_points,
        } => {
            let n_t = config.n_t;
            if ctx + 2 > n_t {
                return Err(PinnError::Config(format!("{n_t} levels cannot hold a sequence of {ctx}")));
            }
            let traj = burgers_march::<T>(config)?;
            let snaps = SnapshotSet::single(traj.states.clone(), config.dt, config.grid(), "burgers".into(), n_t);
            let basis = compute_pod(&snaps, ModeSelector::NModes(*n_modes))?;
            let hyper = match deim_points {
                Some(m) => {
                    let nl = snaps.map_columns(|u| convective_term(config, u));
                    Some(build_deim_operator(&basis, &nl, *m)?)
                }
                None => None,
            };
            let physical_reference = traj.states.transpose();
            let reference = matmul(&physical_reference, &basis.phi)?;
            let u0_hat = basis.project(&config.initial_field::<T>());
            let scale = spec
                .output_scale
                .unwrap_or_else(|| u0_hat.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs())));
            let mut horizon = Horizon::new(n_t, *n_modes, (ctx..n_t).collect(), (0..*n_modes).collect(), T::lit(scale))?;
            for l in 0..ctx {
                horizon.fix_level(l, reference.row(l));
            }
            if spec.hard_constraints && ctx == 0 {
                horizon.fix_level(0, &u0_hat);
            }
            let anchor = ctx;
            let provider =
                ReducedBurgersProvider::new(config, &basis, hyper.as_ref(), eqn_levels(anchor, n_t, spec.eqn)?)?;
            Ok(PinnCase {
                arch: spec.net.arch(1, *n_modes),
                input: net_input(&time_features(n_t, config.dt), &spec.net)?,
                horizon,
                provider: Box::new(provider),
                reference,
                physical_reference,
                basis: Some(basis),
                metric: Metric::MaxAbs,
                anchor,
            })
        }
    }
}

/// Trains whichever network `model` holds on `input`.
pub fn train_model<T: Scalar>(
    cfg: &TrainConfig,
    model: &mut Model<T>,
    input: &CaseInput<T>,
    obj: &Objective<'_, T>,
) -> Result<LossReport, PinnError> {
    match (model, input) {
        (Model::Mlp(m), CaseInput::Dense(x)) => train(cfg, m, x, obj),
        (Model::Lstm(l), CaseInput::Sequence(s)) => train(cfg, l, s, obj),
        _ => Err(PinnError::Config("network does not match the case input".into())),
    }
}

#[derive(Debug, Clone)]
pub struct RunResult<T> {
    pub seed: u64,
    pub data_levels: Vec<usize>,
    pub error: f64,
    pub report: LossReport,
    pub model: Model<T>,
    /// Final predicted horizon in the network's state space.
    pub prediction: DenseMatrix<T>,
}

/// One seeded training run on a prepared case.
pub fn run_case<T: Scalar>(case: &PinnCase<T>, spec: &RunSpec, seed: u64) -> Result<RunResult<T>, PinnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model: Model<T> = case.arch.build(&mut rng);
    let data_levels = case.sample_data_levels(spec.data_points, &mut rng);
    let data = Supervision {
        levels: data_levels.clone(),
        reference: case.reference.clone(),
    };
    let mut cfg = spec.train.clone();
    if !spec.physics {
        cfg.w_phys = 0.0;
    }
    let report = if cfg.mode == TrainMode::Detached {
        let detached = ExternalSolver(&*case.provider);
        let obj = Objective {
            horizon: &case.horizon,
            data: &data,
            provider: &detached,
        };
        train_model(&cfg, &mut model, &case.input, &obj)?
    } else {
        let obj = Objective {
            horizon: &case.horizon,
            data: &data,
            provider: &*case.provider,
        };
        train_model(&cfg, &mut model, &case.input, &obj)?
    };
    let prediction = case.predict(&model)?;
    Ok(RunResult {
        seed,
        data_levels,
        error: case.error(&prediction)?,
        report,
        model,
        prediction,
    })
}

/// Errors over repeated runs with different seeds (so different weights
/// and different supervision levels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub errors: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
}

impl TrialSummary {
    pub fn from_errors(errors: Vec<f64>) -> Result<Self, PinnError> {
        if errors.is_empty() {
            return Err(PinnError::Config("at least one trial is required".into()));
        }
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { errors, mean, max, min })
    }
}

pub fn run_trials<T: Scalar>(
    case: &PinnCase<T>,
    spec: &RunSpec,
    seeds: &[u64],
) -> Result<TrialSummary, PinnError> {
    if seeds.is_empty() {
        return Err(PinnError::Config("at least one trial is required".into()));
    }
    let errors = seeds
        .iter()
        .map(|&s| run_case(case, spec, s).map(|r| r.error))
        .collect::<Result<Vec<_>, _>>()?;
    TrialSummary::from_errors(errors)
}
