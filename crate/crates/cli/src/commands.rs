use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dispinn::dynamics::{burgers_march, convective_term, generate_snapshots, reduced_march, ProblemSpec};
use dispinn::linalg::{read_csv, write_csv, DenseMatrix};
use dispinn::neural::save_checkpoint;
use dispinn::pinn::{build_case, run_case, EpochLoss, LossReport, ProblemKind};
use dispinn::rom::{build_deim_operator, compute_pod, reconstruction_error, save_rom, ModeSelector};
use serde::{Deserialize, Serialize};

use crate::config::{read_toml, ExperimentConfig, ReproduceConfig, TableId};
use crate::tables::{build_table, ResultRow, Scope, Table};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub label: String,
    pub rows: usize,
    pub columns: usize,
    pub dt: f64,
    pub grid: Vec<f64>,
}

fn write_toml<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let text = toml::to_string(value).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(path, text).map_err(|e| CliError::file(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))
}

/// Writes `snapshots.csv` (one column per time level) and `snapshots.toml`.
pub fn cmd_snapshots(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    let set = generate_snapshots::<f64>(&cfg.snapshot_problem())?;
    let dir = out.join(cfg.experiment.as_str()).join("snapshots");
    create_dir(&dir)?;
    write_csv(dir.join("snapshots.csv"), &set.data)?;
    let meta = SnapshotMeta {
        label: set.blocks.first().map_or_else(String::new, |b| b.label.clone()),
        rows: set.data.rows(),
        columns: set.data.cols(),
        dt: set.dt,
        grid: set.grid.clone(),
    };
    write_toml(&dir.join("snapshots.toml"), &meta)?;
    Ok(dir)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomSweepRow {
    pub n_modes: usize,
    pub max_abs_error: f64,
    pub frobenius_rel: f64,
    pub discarded_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomReport {
    pub sweep: Vec<RomSweepRow>,
    /// Whether the max-abs error strictly falls as modes are added.
    pub monotone: bool,
    pub saved_modes: usize,
    pub deim_points: Option<usize>,
    /// Max-abs gap between the lifted reduced march and the full solution.
    pub march_max_abs_error: f64,
}

/// POD sweep, saved basis (with DEIM when configured) and a reduced march
/// against the full-order solution.
pub fn cmd_rom(cfg: &ExperimentConfig, out: &Path) -> Result<(PathBuf, RomReport), CliError> {
    let ProblemSpec::Burgers(burgers) = cfg.snapshot_problem() else {
        return Err(CliError::Config("rom: only Burgers problems can be reduced".into()));
    };
    let rom = cfg
        .rom
        .as_ref()
        .ok_or_else(|| CliError::Config("rom: missing [rom] section".into()))?;
    let set = generate_snapshots::<f64>(&ProblemSpec::Burgers(burgers.clone()))?;
    let mut modes = rom.n_modes.clone();
    modes.sort_unstable();
    modes.dedup();
    let mut sweep = Vec::new();
    for &n in &modes {
        let basis = compute_pod(&set, ModeSelector::NModes(n))?;
        let e = reconstruction_error(&basis, &set)?;
        sweep.push(RomSweepRow {
            n_modes: n,
            max_abs_error: e.max_abs,
            frobenius_rel: e.frobenius_rel,
            discarded_energy: basis.discarded_energy,
        });
    }
    let monotone = sweep.windows(2).all(|w| w[1].max_abs_error < w[0].max_abs_error);
    if !monotone {
        log::warn!("reconstruction error does not fall monotonically with the mode count");
    }
    let saved = *modes.last().expect("validated non-empty");
    let basis = compute_pod(&set, ModeSelector::NModes(saved))?;
    let hyper = match rom.deim_points {
        Some(m) => {
            let nl = set.map_columns(|u| convective_term(&burgers, u));
            Some(build_deim_operator(&basis, &nl, m)?)
        }
        None => None,
    };
    let dir = out.join(cfg.experiment.as_str()).join("rom");
    create_dir(&dir)?;
    save_rom(&dir, &basis, hyper.as_ref())?;

    let full = burgers_march::<f64>(&burgers)?;
    let u0_hat = basis.project(&burgers.initial_field::<f64>());
    let red = reduced_march(&burgers, &basis, hyper.as_ref(), &u0_hat)?;
    let lifted = dispinn::linalg::matmul(&basis.phi, &red.states)?;
    let march_max_abs_error = lifted.sub(&full.states)?.max_abs();

    let mut w = csv::Writer::from_path(dir.join("rom_report.csv"))?;
    for row in &sweep {
        w.serialize(row)?;
    }
    w.flush()?;
    let report = RomReport {
        sweep,
        monotone,
        saved_modes: saved,
        deim_points: rom.deim_points,
        march_max_abs_error,
    };
    write_toml(&dir.join("rom_summary.toml"), &report)?;
    Ok((dir, report))
}

/// What `train` leaves behind besides the checkpoint and loss curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub experiment: String,
    pub network: String,
    pub seed: u64,
    pub data_levels: Vec<usize>,
    pub epochs: usize,
    pub metric: String,
    pub value: f64,
    pub final_mse_data: Option<f64>,
    pub final_mse_physics: Option<f64>,
}

pub fn run_dir(out: &Path, cfg: &ExperimentConfig) -> PathBuf {
    out.join(cfg.experiment.as_str()).join(format!("seed-{}", cfg.seed()))
}

/// One training run with the first configured seed.
///
/// The run directory holds `config.toml` (the effective configuration),
/// `checkpoint/`, `loss.csv`, `prediction.csv`, `reference.csv` (physical
/// variables, one row per time level), `result.csv` and `summary.toml`.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<(PathBuf, TrainSummary), CliError> {
    let seed = cfg.seed();
    let case = build_case::<f64>(&cfg.problem, &cfg.run)?;
    let result = run_case(&case, &cfg.run, seed)?;
    let dir = run_dir(out, cfg);
    create_dir(&dir)?;
    let effective = ExperimentConfig {
        seeds: vec![seed],
        ..cfg.clone()
    };
    write_toml(&dir.join("config.toml"), &effective)?;
    save_checkpoint(dir.join("checkpoint"), &result.model, cfg.run.train.epochs)?;
    result.report.write_csv(dir.join("loss.csv"))?;
    write_csv(dir.join("prediction.csv"), &case.to_physical(&result.prediction)?)?;
    write_csv(dir.join("reference.csv"), &case.physical_reference)?;

    let network = if cfg.run.physics {
        format!("{}-DisPINN", cfg.run.net.label())
    } else {
        cfg.run.net.label().to_string()
    };
    let metric = case.metric.name().to_string();
    let mut w = csv::Writer::from_path(dir.join("result.csv"))?;
    w.serialize(ResultRow {
        experiment: cfg.experiment.to_string(),
        network: network.clone(),
        data_points: cfg.run.data_points.to_string(),
        eqn_points: cfg.run.eqn.to_string(),
        metric: metric.clone(),
        value: result.error,
        seed: seed.to_string(),
    })?;
    w.flush()?;
    let last = result.report.last();
    let summary = TrainSummary {
        experiment: cfg.experiment.to_string(),
        network,
        seed,
        data_levels: result.data_levels.clone(),
        epochs: cfg.run.train.epochs,
        metric,
        value: result.error,
        final_mse_data: last.map(|e| e.mse_data),
        final_mse_physics: last.map(|e| e.mse_physics),
    };
    write_toml(&dir.join("summary.toml"), &summary)?;
    Ok((dir, summary))
}

/// First unused `v<N>` directory under `root`, so earlier tables survive.
pub fn next_version_dir(root: &Path) -> Result<PathBuf, CliError> {
    create_dir(root)?;
    let mut n = 1;
    loop {
        let dir = root.join(format!("v{n:03}"));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
            Err(e) => return Err(CliError::file(&dir, e)),
        }
    }
}

fn published_cell(metric: &str, v: Option<f64>) -> String {
    match (metric, v) {
        (_, None) => "-".into(),
        ("wall_ms", Some(ms)) => format!("{:.2} s", ms / 1e3),
        (_, Some(v)) => format!("{v}"),
    }
}

pub fn write_markdown<W: Write>(table: &Table, mut w: W) -> std::io::Result<()> {
    let id = table.id.map_or("table", |t| t.as_str());
    writeln!(w, "# {id}\n\n{}\n", table.caption)?;
    writeln!(w, "| network | data points | eqn points | metric | published | reproduced | tolerance | status |")?;
    writeln!(w, "|---|---|---|---|---|---|---|---|")?;
    for r in &table.comparisons {
        let ours = match (&r.outcome, r.metric.as_str()) {
            (crate::tables::Outcome::Value(v), "wall_ms") => format!("{:.2} s", v / 1e3),
            (o, _) => o.to_string(),
        };
        writeln!(
            w,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            r.network,
            r.data_points,
            r.eqn_points,
            r.metric,
            published_cell(&r.metric, r.published),
            ours,
            r.tolerance(),
            r.status()
        )?;
    }
    Ok(())
}

fn write_tables(table: &Table, dir: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
    for row in &table.results {
        w.serialize(row)?;
    }
    w.flush()?;
    let mut c = csv::Writer::from_path(dir.join("comparison.csv"))?;
    c.write_record([
        "network",
        "data_points",
        "eqn_points",
        "metric",
        "published",
        "reproduced",
        "tolerance",
        "status",
    ])?;
    for r in &table.comparisons {
        c.write_record([
            r.network.clone(),
            r.data_points.clone(),
            r.eqn_points.clone(),
            r.metric.clone(),
            r.published.map_or_else(String::new, |v| v.to_string()),
            match &r.outcome {
                crate::tables::Outcome::Value(v) => v.to_string(),
                other => other.to_string(),
            },
            r.tolerance(),
            r.status().to_string(),
        ])?;
    }
    c.flush()?;
    let path = dir.join("summary.md");
    let file = fs::File::create(&path).map_err(|e| CliError::file(&path, e))?;
    write_markdown(table, file).map_err(|e| CliError::file(&path, e))
}

/// Runs one table, writes it to a fresh versioned directory and fails with a
/// numeric error after writing if any sub-run failed.
pub fn cmd_reproduce(cfg: &ReproduceConfig, id: TableId, out: &Path) -> Result<(PathBuf, Table), CliError> {
    let dir = next_version_dir(&out.join("reproduce").join(id.as_str()))?;
    write_toml(&dir.join("config.toml"), cfg)?;
    let table = build_table(id, cfg, Scope::Everything);
    write_tables(&table, &dir)?;
    Ok((dir, table))
}

/// Plot-ready CSVs for a `train` run directory, written to `<run>/plots`.
pub fn cmd_export_plots(run: &Path) -> Result<PathBuf, CliError> {
    if !run.is_dir() {
        return Err(CliError::file(run, "run directory not found"));
    }
    let cfg: ExperimentConfig = read_toml(&run.join("config.toml"))?;
    let dir = run.join("plots");
    create_dir(&dir)?;

    let loss_path = run.join("loss.csv");
    let mut rd = csv::Reader::from_path(&loss_path).map_err(|e| CliError::file(&loss_path, e))?;
    let mut report = LossReport::default();
    for rec in rd.deserialize::<EpochLoss>() {
        report.epochs.push(rec.map_err(|e| CliError::file(&loss_path, e))?);
    }
    let mut w = csv::Writer::from_path(dir.join("loss_curve.csv"))?;
    w.write_record(["epoch", "mse_data", "mse_physics", "l_dis"])?;
    for e in &report.epochs {
        w.write_record([
            e.epoch.to_string(),
            format!("{:e}", e.mse_data),
            format!("{:e}", e.mse_physics),
            e.l_dis.map_or_else(String::new, |v| format!("{v:e}")),
        ])?;
    }
    w.flush()?;

    let pred: DenseMatrix<f64> = read_csv(run.join("prediction.csv"))?;
    let reference: DenseMatrix<f64> = read_csv(run.join("reference.csv"))?;
    if pred.shape() != reference.shape() {
        return Err(CliError::Config("prediction.csv and reference.csv differ in shape".into()));
    }
    match &cfg.problem {
        ProblemKind::Burgers { config } | ProblemKind::BurgersReduced { config, .. } => {
            let grid = config.grid();
            let mut w = csv::Writer::from_path(dir.join("error_field.csv"))?;
            w.write_record(["x", "t", "abs_error"])?;
            for l in 0..pred.rows() {
                for (c, x) in grid.iter().enumerate() {
                    w.write_record([
                        x.to_string(),
                        (l as f64 * config.dt).to_string(),
                        format!("{:e}", (pred[(l, c)] - reference[(l, c)]).abs()),
                    ])?;
                }
            }
            w.flush()?;
        }
        ProblemKind::RigidBody { params, .. } => {
            let mut w = csv::Writer::from_path(dir.join("time_series.csv"))?;
            w.write_record(["tau", "h_pred", "h_ref", "alpha_pred", "alpha_ref"])?;
            for l in 0..pred.rows() {
                w.write_record([
                    (l as f64 * params.dtau).to_string(),
                    pred[(l, 0)].to_string(),
                    reference[(l, 0)].to_string(),
                    pred[(l, 1)].to_string(),
                    reference[(l, 1)].to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(dir)
}
