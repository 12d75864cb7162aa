use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dispinn::linalg::{read_csv, DenseMatrix};
use dispinn::neural::{load_checkpoint, Model};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dispinn-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Shipped config with textual substitutions, written into `dir`.
fn config(dir: &Path, shipped: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = fs::read_to_string(workspace().join("configs").join(shipped)).unwrap();
    for (from, to) in edits {
        assert!(text.contains(from), "{shipped} has no `{from}`");
        text = text.replace(from, to);
    }
    let path = dir.join(shipped);
    fs::write(&path, text).unwrap();
    path
}

fn dispinn(args: &[&str], cfg: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dispinn"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = cfg {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn snapshot_matrices_have_grid_by_levels_shape() {
    let dir = scratch("snapshots");
    for (file, exp, shape) in [
        ("burgers_full.toml", "burgers_full", (20, 100)),
        ("mass_spring_reconstruction.toml", "mass_spring_reconstruction", (4, 1000)),
    ] {
        let cfg = config(&dir, file, &[]);
        let o = dispinn(&["snapshots"], Some(&cfg), &dir);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let m: DenseMatrix<f64> = read_csv(dir.join(exp).join("snapshots/snapshots.csv")).unwrap();
        assert_eq!(m.shape(), shape, "{exp}");
        assert!(dir.join(exp).join("snapshots/snapshots.toml").is_file());
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = scratch("config-errors");
    let bad_nu = config(&dir, "burgers_full.toml", &[("nu = 0.01", "nu = -0.01")]);
    let o = dispinn(&["train"], Some(&bad_nu), &dir);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nu"), "{}", stderr(&o));

    let typo = config(&dir, "mass_spring_prediction.toml", &[("learning_rate", "learnin_rate")]);
    assert_eq!(code(&dispinn(&["train"], Some(&typo), &dir)), 2);

    let missing = dir.join("nowhere.toml");
    assert_eq!(code(&dispinn(&["train"], Some(&missing), &dir)), 2);
    assert_eq!(code(&dispinn(&["train"], None, &dir)), 2);

    let reproduce = workspace().join("configs/reproduce.toml");
    let o = dispinn(&["reproduce", "table9"], Some(&reproduce), &dir);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("table4"), "{}", stderr(&o));

    let o = dispinn(&["export-plots", dir.join("no-run").to_str().unwrap()], None, &dir);
    assert_eq!(code(&o), 2);
}

#[test]
fn diverging_training_exits_with_three() {
    let dir = scratch("diverge");
    let cfg = config(
        &dir,
        "burgers_full.toml",
        &[("epochs = 6000", "epochs = 5"), ("learning_rate = 0.006", "learning_rate = 1e200")],
    );
    let o = dispinn(&["train"], Some(&cfg), &dir);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("epoch"), "{}", stderr(&o));
}

#[test]
fn zero_epoch_checkpoint_is_the_seeded_initialisation() {
    let dir = scratch("zero-epochs");
    for (file, exp, from) in [
        ("burgers_full.toml", "burgers_full", "epochs = 6000"),
        ("mass_spring_prediction.toml", "mass_spring_prediction", "epochs = 2000"),
    ] {
        let cfg = config(&dir, file, &[(from, "epochs = 0")]);
        let o = dispinn(&["train", "--seed", "7"], Some(&cfg), &dir);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let (model, epoch): (Model<f64>, usize) = load_checkpoint(dir.join(exp).join("seed-7/checkpoint")).unwrap();
        assert_eq!(epoch, 0);
        let fresh: Model<f64> = model.arch().build(&mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(model, fresh, "{exp}");
    }
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Drops the last CSV column, which is the wall clock.
fn without_wall_clock(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn repeated_training_is_byte_identical_apart_from_wall_clock() {
    let a = scratch("idem-a");
    let b = scratch("idem-b");
    let cfg = config(&a, "burgers_detached.toml", &[("epochs = 6000", "epochs = 40")]);
    for out in [&a, &b] {
        let o = dispinn(&["train", "--jacobian-interval", "7"], Some(&cfg), out);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let run = |root: &Path| tree(&root.join("burgers_detached"));
    let (ta, tb) = (run(&a), run(&b));
    assert_eq!(ta.len(), tb.len());
    for ((pa, ba), (pb, bb)) in ta.iter().zip(&tb) {
        assert_eq!(pa, pb);
        if pa.ends_with("loss.csv") {
            assert_eq!(without_wall_clock(ba), without_wall_clock(bb));
        } else {
            assert!(ba == bb, "{} differs", pa.display());
        }
    }
    let effective = String::from_utf8_lossy(&ta.iter().find(|(p, _)| p.ends_with("config.toml")).unwrap().1).into_owned();
    assert!(effective.contains("jacobian_interval = 7"), "{effective}");
}

#[test]
fn export_plots_writes_csvs_for_both_families() {
    let dir = scratch("plots");
    for (file, exp, from, plot, header) in [
        ("burgers_full.toml", "burgers_full", "epochs = 6000", "error_field.csv", "x,t,abs_error"),
        (
            "mass_spring_reconstruction.toml",
            "mass_spring_reconstruction",
            "epochs = 2000",
            "time_series.csv",
            "tau,h_pred,h_ref,alpha_pred,alpha_ref",
        ),
    ] {
        let cfg = config(&dir, file, &[(from, "epochs = 3")]);
        assert_eq!(code(&dispinn(&["train"], Some(&cfg), &dir)), 0);
        let run = dir.join(exp).join("seed-0");
        let o = dispinn(&["export-plots", run.to_str().unwrap()], None, &dir);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let text = fs::read_to_string(run.join("plots").join(plot)).unwrap();
        assert!(text.starts_with(header), "{plot}: {}", &text[..text.len().min(80)]);
        let loss = fs::read_to_string(run.join("plots/loss_curve.csv")).unwrap();
        assert_eq!(loss.lines().count(), 4, "{loss}");
    }
}

#[test]
fn reproduce_keeps_earlier_versions() {
    let dir = scratch("versions");
    let cfg = config(
        &dir,
        "reproduce.toml",
        &[
            ("seeds = [0, 1, 2, 3, 4]", "seeds = [0]"),
            ("epochs = 2000", "epochs = 2"),
        ],
    );
    for v in ["v001", "v002"] {
        let o = dispinn(&["reproduce", "table1"], Some(&cfg), &dir);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let d = dir.join("reproduce/table1").join(v);
        for f in ["results.csv", "comparison.csv", "summary.md", "config.toml"] {
            assert!(d.join(f).is_file(), "{v}/{f}");
        }
    }
    let summary = fs::read_to_string(dir.join("reproduce/table1/v001/summary.md")).unwrap();
    assert!(summary.contains("0.97"), "{summary}");
}
