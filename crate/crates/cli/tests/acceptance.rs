//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria whose failure is a documented deviation are still evaluated and
//! reported as FAIL, but do not fail the target. `ACCEPTANCE_ONLY=1,2,3`
//! restricts the run to the listed criteria.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dispinn::dynamics::{
    burgers_march, burgers_residual, convective_term, reduced_march, rigid_body_assemble, rigid_body_march,
    rigid_body_residual, rigid_body_residual_first, BurgersConfig, ForcingSeries, RigidBodyParams, RigidBodyState,
    SinusoidalForcing, Stencil,
};
use dispinn::linalg::{matmul, DenseMatrix};
use dispinn::neural::{gradient_check, make_sequences, Activation, LstmParams, MlpParams, ParamSet};
use dispinn::pinn::{
    build_case, fd_jacobian, loss_gradients, CaseInput, DataPoints, EqnSpan, FdStep, NetSpec, Objective,
    PhysicsGradient, ProblemKind, RunSpec, Supervision, TrainConfig,
};
use dispinn::rom::{build_deim_operator, compute_pod, reconstruction_error, ModeSelector, SnapshotSet};
use dispinn_cli::config::{Overrides, ReproduceConfig, TableId};
use dispinn_cli::tables::{build_table, Scope, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria expected to fail; the analysis lives in the project notes.
const KNOWN_DEVIATIONS: &[u32] = &[4, 6, 9];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn reproduce_config() -> ReproduceConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/reproduce.toml");
    ReproduceConfig::load(&path, &Overrides::default()).expect("shipped reproduce config loads")
}

fn table_verdict(tables: &[Table]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for t in tables {
        for r in &t.comparisons {
            if let Some(ok) = r.pass() {
                pass &= ok;
                parts.push(format!("{} = {} ({}) {}", r.label(), r.outcome, r.tolerance(), r.status()));
            }
        }
    }
    verdict(pass && !parts.is_empty(), parts.join("; "))
}

fn criterion1() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for stencil in [Stencil::StandardUpwind, Stencil::PaperExact] {
        let cfg = BurgersConfig {
            stencil,
            ..BurgersConfig::default()
        };
        let tr = match burgers_march::<f64>(&cfg) {
            Ok(t) => t,
            Err(e) => return verdict(false, format!("{stencil:?} march failed: {e}")),
        };
        for k in 1..tr.len() {
            let r = burgers_residual(&cfg, &tr.state(k - 1), &tr.state(k)).expect("grid sizes agree");
            worst = worst.max(r.iter().fold(0.0, |m, v| m.max(v.abs())));
        }
    }
    let params = RigidBodyParams::default();
    let forcing = SinusoidalForcing::default();
    let series = ForcingSeries::<f64>::sinusoidal(&forcing, params.n_steps);
    let z0 = RigidBodyState::periodic_start(&params, &forcing).expect("default parameters are valid");
    let tr = rigid_body_march(&params, &series, &z0).expect("default march");
    let ops = rigid_body_assemble::<f64>(&params).expect("default operators");
    let z = |k: usize| -> [f64; 4] {
        let s = tr.state(k);
        [s[0], s[1], s[2], s[3]]
    };
    for k in 1..tr.len() {
        let r = if k == 1 {
            rigid_body_residual_first(&ops, params.dtau, &series, &z(0), &z(1))
        } else {
            rigid_body_residual(&ops, params.dtau, &series, &z(k - 2), &z(k - 1), &z(k), k)
        };
        worst = worst.max(r.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let t = start.elapsed();
    verdict(
        worst <= 1e-10 && t < Duration::from_secs(1),
        format!("max |R| = {worst:.2e} over both Burgers stencils and the rigid body in {t:.2?}"),
    )
}

fn criterion2() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_abs = 0.0f64;
    let mut ok = true;
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mlp = MlpParams::<f64>::init(&[2, 124, 64, 24, 8, 3], Activation::Tanh, &mut rng);
        let x = DenseMatrix::from_fn(6, 2, |_, _| rng.gen_range(-1.0..1.0));
        let up = DenseMatrix::from_fn(6, 3, |_, _| rng.gen_range(-1.0..1.0));
        let rep = gradient_check(&mlp, &x, &up).expect("shapes agree");
        ok &= rep.passes(1e-5, 1e-9);
        worst = worst.max(rep.max_rel_error(1e-9));
        worst_abs = rep.entries.iter().fold(worst_abs, |m, (_, a, f)| m.max((a - f).abs()));

        let lstm = LstmParams::<f64>::init(2, 10, 3, 10, &mut rng);
        let series = DenseMatrix::from_fn(16, 2, |_, _| rng.gen_range(-1.0..1.0));
        let batch = make_sequences(&series, &DenseMatrix::zeros(16, 0), 10).expect("long enough series");
        let up = DenseMatrix::from_fn(6, 3, |_, _| rng.gen_range(-1.0..1.0));
        let rep = gradient_check(&lstm, &batch, &up).expect("shapes agree");
        ok &= rep.passes(1e-5, 1e-9);
        worst = worst.max(rep.max_rel_error(1e-9));
        worst_abs = rep.entries.iter().fold(worst_abs, |m, (_, a, f)| m.max((a - f).abs()));
    }
    let t = start.elapsed();
    verdict(
        ok && t < Duration::from_secs(30),
        format!("worst relative gap {worst:.2e} above a 1e-9 floor, worst absolute gap {worst_abs:.1e} (MLP 124/64/24/8, LSTM h=10 s=10, 3 seeds) in {t:.2?}"),
    )
}

fn criterion3() -> Verdict {
    let start = Instant::now();
    let spec = RunSpec {
        net: NetSpec::default(),
        data_points: DataPoints::Count(1),
        eqn: EqnSpan::Full,
        physics: true,
        hard_constraints: true,
        output_scale: None,
        train: TrainConfig::default(),
    };
    let case = build_case::<f64>(
        &ProblemKind::Burgers {
            config: BurgersConfig::default(),
        },
        &spec,
    )
    .expect("default case");
    let data = Supervision {
        levels: vec![0],
        reference: case.reference.clone(),
    };
    let obj = Objective {
        horizon: &case.horizon,
        data: &data,
        provider: &*case.provider,
    };
    let CaseInput::Dense(x) = &case.input else {
        unreachable!("mlp input")
    };
    let mut worst = 0.0f64;
    let mut ok = true;
    for seed in 0..3u64 {
        let dispinn::neural::Model::Mlp(net) = case.arch.build::<f64, _>(&mut ChaCha8Rng::seed_from_u64(seed)) else {
            unreachable!("mlp arch")
        };
        let (g_in, y) = loss_gradients(&net, x, &obj, 0.0, 1.0, PhysicsGradient::InGraph).expect("in-graph");
        let j = fd_jacobian(&*case.provider, &y, FdStep::default(), 0).expect("jacobian");
        let (g_dis, _) = loss_gradients(&net, x, &obj, 0.0, 1.0, PhysicsGradient::Detached(&j)).expect("detached");
        let (a, b) = (g_in.flatten(), g_dis.flatten());
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (&u, &v) in a.iter().zip(&b) {
            // entries many orders below the gradient's scale are compared absolutely
            let denom = u.abs().max(v.abs()).max(1e-8 * scale);
            let rel = (u - v).abs() / denom;
            worst = worst.max(rel);
            ok &= rel <= 1e-6;
        }
    }
    let t = start.elapsed();
    verdict(
        ok && t < Duration::from_secs(60),
        format!("worst per-parameter relative gap {worst:.2e} over 3 seeds in {t:.2?}"),
    )
}

fn criterion8() -> Verdict {
    let cfg = BurgersConfig::default();
    let tr = burgers_march::<f64>(&cfg).expect("default march");
    let set = SnapshotSet::from_matrix(tr.states.clone());
    let mut errs = Vec::new();
    for n in [2, 5, 10] {
        let b = compute_pod(&set, ModeSelector::NModes(n)).expect("rank suffices");
        errs.push(reconstruction_error(&b, &set).expect("dims").max_abs);
    }
    let decades = errs[0] >= 10.0 * errs[1] && errs[1] >= 10.0 * errs[2];

    let basis = compute_pod(&set, ModeSelector::NModes(10)).expect("rank suffices");
    let nl = set.map_columns(|u| convective_term(&cfg, u));
    let deim = build_deim_operator(&basis, &nl, 10).expect("deim");
    // exact on the span of its own basis
    let mut exact = 0.0f64;
    for j in 0..deim.phi_h.cols() {
        let f = deim.phi_h.column(j);
        let g = deim.interpolate(&f).expect("length");
        exact = exact.max(f.iter().zip(&g).fold(0.0, |m, (a, b)| m.max((a - b).abs())));
    }
    let u0 = basis.project(&cfg.initial_field::<f64>());
    let red = reduced_march(&cfg, &basis, Some(&deim), &u0).expect("reduced march");
    let lifted = matmul(&basis.phi, &red.states).expect("dims");
    let track = lifted.sub(&tr.states).expect("dims").max_abs();
    verdict(
        decades && exact <= 1e-10 && track <= 1e-3,
        format!(
            "POD max abs n=2,5,10: {:.3e}, {:.3e}, {:.3e}; DEIM span error {exact:.1e}; n=m_h=10 march gap {track:.2e}",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn criterion9(cfg: &ReproduceConfig) -> Verdict {
    let mut cfg = cfg.clone();
    cfg.seeds.truncate(1);
    // ordering only: shorter runs than the published timings, repeated and medianed
    cfg.burgers.ann.train.epochs = 1500;
    cfg.burgers.lstm.train.epochs = 1500;
    cfg.reduced.timing_repeats = 3;
    let t = build_table(TableId::Table4, &cfg, Scope::Checked);
    table_verdict(&[t])
}

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().is_none_or(|o| o.contains(&n));
    let cfg = reproduce_config();

    type Job<'a> = Box<dyn Fn() -> Verdict + 'a>;
    // timing first while nothing else has warmed or loaded the machine
    let jobs: Vec<(u32, &str, Job)> = vec![
        (9, "reduced training is faster than full order", Box::new(|| criterion9(&cfg))),
        (1, "solver/residual consistency", Box::new(criterion1)),
        (2, "reverse-mode gradients match finite differences", Box::new(criterion2)),
        (3, "detached gradient with k=1 equals in-graph gradient", Box::new(criterion3)),
        (8, "ROM fidelity", Box::new(criterion8)),
        (
            4,
            "Jacobian refresh interval study",
            Box::new(|| table_verdict(&[build_table(TableId::JacobianInterval, &cfg, Scope::Checked)])),
        ),
        (
            5,
            "sparse-data Burgers reconstruction",
            Box::new(|| table_verdict(&[build_table(TableId::Table2, &cfg, Scope::Checked)])),
        ),
        (
            6,
            "sparse-data mass-spring reconstruction, 5 trials",
            Box::new(|| table_verdict(&[build_table(TableId::MassSpringTrials, &cfg, Scope::Checked)])),
        ),
        (
            7,
            "prediction protocol",
            Box::new(|| {
                table_verdict(&[
                    build_table(TableId::Table1, &cfg, Scope::Checked),
                    build_table(TableId::Table3, &cfg, Scope::Checked),
                ])
            }),
        ),
    ];

    let mut unexpected = 0;
    for (n, name, job) in &jobs {
        if !wanted(*n) {
            continue;
        }
        let start = Instant::now();
        let v = job();
        let elapsed = start.elapsed();
        let tag = match (v.pass, KNOWN_DEVIATIONS.contains(n)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known deviation)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("{tag} criterion {n}: {name} [{elapsed:.1?}] {}", v.detail);
    }
    if unexpected > 0 {
        println!("{unexpected} criterion/criteria failed unexpectedly");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
