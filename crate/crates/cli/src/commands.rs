//! Subcommands of the `fovnet` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fovnet_core::brep::{normalize_solid, random_rotation, Solid};
use fovnet_core::brj::{load_brj, save_brj};
use fovnet_core::dataset::{generate_dataset, mix, DatasetConfig, Split};
use fovnet_core::raycast::{compute_fov_grids_res, write_fov_debug_rows, DEBUG_CSV_HEADER};
use fovnet_core::sampler::compute_local_frame;
use fovnet_core::step::read_step;
use fovnet_nn::{Metrics, TrainConfig};

use crate::descriptors::{deviation, extract, parse_features, parse_resolution, resolution_name, Deviation, DEFAULT_RES};
use crate::protocol::{append_metrics, metrics_rows, parse_task, task_name, Experiment, LoadedDataset, RunConfig, Variant};
use crate::{Checkpoint, CliError};

/// Bound on invariant channel deviations under rotation.
pub const INVARIANCE_TOL: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "fovnet", version, about = "Rotation-invariant face descriptors and graph networks for B-rep solids")]
pub struct Cli {
    /// Worker threads for extraction; FOVNET_THREADS caps this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reads a STEP or .brj solid, normalizes it and optionally writes .brj.
    Parse {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes the descriptor container of a .brj solid.
    Extract {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Rotation seed applied before extraction, or `none`.
        #[arg(long, default_value = "none")]
        rotate: String,
        #[arg(long, default_value = "6x12")]
        fov_res: String,
        #[arg(long, default_value = "lrf,ov,iv,attributes")]
        features: String,
        /// Per-ray CSV of every field-of-view grid.
        #[arg(long)]
        debug_fov: Option<PathBuf>,
    },
    /// Measures descriptor deviation under random rotations.
    CheckInvariance {
        input: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generates the synthetic six-family dataset.
    Generate {
        #[arg(long)]
        out: PathBuf,
        /// Solids per family.
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Turn each solid by a random axis-preserving rotation.
        #[arg(long)]
        axis_turns: bool,
    },
    /// Trains one model and evaluates it on the test split.
    Train(TrainArgs),
    /// Evaluates a checkpoint on the test split.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    pub manifest: PathBuf,
    #[arg(long, default_value = "classify")]
    pub task: String,
    #[arg(long, default_value = "fovnet")]
    pub variant: String,
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 30)]
    pub patience: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value = "6x12")]
    pub fov_res: String,
    /// Directory receiving checkpoint.fovc, history.csv and metrics.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub rotated_test: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Must match the checkpoint when given.
    #[arg(long)]
    pub task: Option<String>,
    /// Must match the checkpoint when given.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub rotated_test: bool,
    /// Metrics CSV to append to.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

/// Thread count from `--workers`, capped by `FOVNET_THREADS`.
pub fn worker_count(flag: Option<usize>, env: Option<&str>) -> Option<usize> {
    let cap = env.and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match (flag.filter(|&n| n > 0), cap) {
        (Some(w), Some(c)) => Some(w.min(c)),
        (w, c) => w.or(c),
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Parse { input, out: dst } => cmd_parse(&input, dst.as_deref(), out),
        Command::Extract { input, out: dst, rotate, fov_res, features, debug_fov } => {
            cmd_extract(&input, &dst, &rotate, &fov_res, &features, debug_fov.as_deref(), out)
        }
        Command::CheckInvariance { input, trials, seed } => cmd_check_invariance(&input, trials, seed, out),
        Command::Generate { out: dst, count, seed, axis_turns } => cmd_generate(&dst, count, seed, axis_turns, out),
        Command::Train(args) => cmd_train(&args, out),
        Command::Eval(args) => cmd_eval(&args, out),
    }
}

fn is_brj(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("brj"))
}

pub fn load_solid(path: &Path) -> Result<Solid, CliError> {
    if is_brj(path) {
        Ok(load_brj(path)?)
    } else {
        Ok(read_step(path)?)
    }
}

pub fn cmd_parse(input: &Path, dst: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let (solid, _, _) = normalize_solid(&load_solid(input)?)?;
    if let Some(dst) = dst {
        save_brj(&solid, dst)?;
    }
    writeln!(out, "{} faces, {} edges", solid.faces.len(), solid.edges.len())?;
    Ok(())
}

fn parse_rotation_seed(s: &str) -> Result<Option<u64>, CliError> {
    match s {
        "none" => Ok(None),
        _ => s
            .parse()
            .map(Some)
            .map_err(|_| CliError::BadArgument(format!("rotation {s:?}; expected a u64 seed or none"))),
    }
}

pub fn cmd_extract(
    input: &Path,
    dst: &Path,
    rotate: &str,
    fov_res: &str,
    features: &str,
    debug_fov: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let res = parse_resolution(fov_res)?;
    let features = parse_features(features)?;
    let seed = parse_rotation_seed(rotate)?;
    let mut solid = load_brj(input)?;
    if let Some(seed) = seed {
        solid = solid.rotated(&random_rotation(seed));
    }
    let container = extract(&solid, res, &features);
    container.save(dst)?;
    if let Some(path) = debug_fov {
        let mut buf = Vec::new();
        writeln!(buf, "{DEBUG_CSV_HEADER}")?;
        for face in &solid.faces {
            let (ov, iv) = compute_fov_grids_res(&solid, &compute_local_frame(face), res.0, res.1);
            write_fov_debug_rows(&mut buf, face.id, &ov)?;
            write_fov_debug_rows(&mut buf, face.id, &iv)?;
        }
        std::fs::write(path, buf)?;
    }
    writeln!(
        out,
        "{} records, {} edges, fov {}",
        container.records.len(),
        container.edges.len(),
        resolution_name(res)
    )?;
    Ok(())
}

/// Largest deviation over `trials` rotations drawn from `seed`.
pub fn invariance_report(solid: &Solid, trials: usize, seed: u64) -> Deviation {
    (0..trials)
        .map(|t| deviation(solid, &solid.rotated(&random_rotation(mix(seed, t as u64)))))
        .fold(Deviation::default(), Deviation::max)
}

pub fn cmd_check_invariance(input: &Path, trials: usize, seed: u64, out: &mut dyn Write) -> Result<(), CliError> {
    let solid = load_solid(input)?;
    let dev = invariance_report(&solid, trials, seed);
    writeln!(out, "trials {trials}{}", if trials == 0 { " (trivial)" } else { "" })?;
    writeln!(out, "lrf max_dev {:.3e}", dev.lrf)?;
    writeln!(out, "ov max_dev {:.3e}", dev.ov)?;
    writeln!(out, "iv max_dev {:.3e}", dev.iv)?;
    writeln!(out, "global_uv max_dev {:.3e} expected-variant", dev.global_uv)?;
    if dev.invariant_max() <= INVARIANCE_TOL {
        writeln!(out, "PASS")?;
        Ok(())
    } else {
        writeln!(out, "FAIL")?;
        Err(CliError::InvarianceViolation(format!(
            "max deviation {:.3e} exceeds {INVARIANCE_TOL:e}",
            dev.invariant_max()
        )))
    }
}

pub fn cmd_generate(dst: &Path, count: usize, seed: u64, axis_turns: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let config = DatasetConfig { axis_turns, ..DatasetConfig::new(count, seed) };
    let (manifest, data) = generate_dataset(&config, dst)?;
    let m = &data.manifest;
    writeln!(
        out,
        "{} solids (train {}, val {}, test {}) -> {}",
        m.entries.len(),
        m.split_len(Split::Train),
        m.split_len(Split::Val),
        m.split_len(Split::Test),
        manifest.display()
    )?;
    Ok(())
}

fn print_metrics(out: &mut dyn Write, set: &str, m: &Metrics) -> Result<(), CliError> {
    write!(out, "{set} accuracy {:.6}", m.accuracy)?;
    if let Some(iou) = m.mean_iou {
        write!(out, " mean_iou {iou:.6}")?;
    }
    writeln!(out)?;
    Ok(())
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig {
        task: parse_task(&args.task)?,
        variant: Variant::parse(&args.variant)?,
        seed: args.seed,
        subset: args.subset,
        fov_res: parse_resolution(&args.fov_res)?,
        train: TrainConfig {
            lr: args.lr,
            batch_size: args.batch_size,
            patience: args.patience,
            max_epochs: args.epochs,
            seed: 0,
        },
        rotated_test: args.rotated_test,
    };
    let mut exp = Experiment::new(LoadedDataset::load(&args.manifest)?);
    let outcome = exp.run(&cfg)?;
    std::fs::create_dir_all(&args.out)?;
    outcome.checkpoint.save(&args.out.join("checkpoint.fovc"))?;
    let mut history = Vec::new();
    outcome.history.write_csv(&mut history)?;
    std::fs::write(args.out.join("history.csv"), history)?;
    let test_size = exp.data.manifest.split_len(Split::Test);
    let rows = metrics_rows(&cfg, &outcome.original, outcome.rotated.as_ref(), test_size);
    append_metrics(&args.out.join("metrics.csv"), &rows)?;
    writeln!(
        out,
        "trained {} epochs on {} solids, best epoch {}",
        outcome.history.epochs.len(),
        outcome.train_size,
        outcome.history.best_epoch
    )?;
    print_metrics(out, "original", &outcome.original)?;
    if let Some(m) = &outcome.rotated {
        print_metrics(out, "rotated", m)?;
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let config = &ckpt.model.config;
    let variant = Variant::from_features(&config.features)
        .ok_or_else(|| CliError::CheckpointMismatch("checkpoint features match no variant".into()))?;
    if let Some(v) = &args.variant {
        let asked = Variant::parse(v)?;
        if asked.features() != config.features {
            return Err(CliError::CheckpointMismatch(format!(
                "variant {} does not match checkpoint variant {}",
                asked.name(),
                variant.name()
            )));
        }
    }
    if let Some(t) = &args.task {
        let asked = parse_task(t)?;
        if asked != config.task {
            return Err(CliError::CheckpointMismatch(format!(
                "task {t} does not match checkpoint task {}",
                task_name(config.task)
            )));
        }
    }
    let mut exp = Experiment::new(LoadedDataset::load(&args.manifest)?);
    let (original, rotated) = exp.evaluate(&ckpt, args.rotated_test)?;
    print_metrics(out, "original", &original)?;
    if let Some(m) = &rotated {
        print_metrics(out, "rotated", m)?;
    }
    if let Some(path) = &args.metrics {
        let cfg = RunConfig {
            fov_res: ckpt.fov_res,
            ..RunConfig::new(config.task, variant, config.seed)
        };
        let rows = metrics_rows(&cfg, &original, rotated.as_ref(), exp.data.manifest.split_len(Split::Test));
        append_metrics(path, &rows)?;
    }
    Ok(())
}

/// Default FoV resolution name, for help texts and tests.
pub fn default_resolution() -> String {
    resolution_name(DEFAULT_RES)
}
