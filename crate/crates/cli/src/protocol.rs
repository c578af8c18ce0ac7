//! Training and evaluation protocol shared by the CLI and the experiments.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use fovnet_core::brep::{random_rotation, Rotation, Solid};
use fovnet_core::brj::load_brj;
use fovnet_core::dataset::{mix, subset, DatasetManifest, GeneratedDataset, Role, Split};
use fovnet_nn::{evaluate, train, FeatureConfig, FovNetModel, GraphInput, History, Metrics, ModelConfig, Task, TrainConfig};
use rayon::prelude::*;

use crate::checkpoint::{feature_bits, Checkpoint};
use crate::descriptors::{extract, resolution_name, to_graph_input, DEFAULT_RES};
use crate::CliError;

/// Seeds rotations of test solids that carry no rotation tag.
pub const EVAL_SEED: u64 = 0x0E7A_1000;

/// Single-feature-type arms of the ablation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arm {
    Fov,
    Lrf,
    Ov,
    Iv,
    Attributes,
    Topology,
}

impl Arm {
    pub const ALL: [Arm; 6] = [Arm::Fov, Arm::Lrf, Arm::Ov, Arm::Iv, Arm::Attributes, Arm::Topology];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Fov => "fov",
            Arm::Lrf => "lrf",
            Arm::Ov => "ov",
            Arm::Iv => "iv",
            Arm::Attributes => "attributes",
            Arm::Topology => "topology",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// LRF grids, both field-of-view grids and face attributes.
    FovNet,
    /// As [`Variant::FovNet`] with global UV grids in place of LRF grids.
    FovNetUv,
    Ablation(Arm),
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "fovnet" => Ok(Variant::FovNet),
            "fovnet-uv" => Ok(Variant::FovNetUv),
            _ => s
                .strip_prefix("ablation:")
                .and_then(|arm| Arm::ALL.into_iter().find(|a| a.name() == arm))
                .map(Variant::Ablation)
                .ok_or_else(|| {
                    CliError::BadArgument(format!(
                        "variant {s:?}; expected fovnet, fovnet-uv or ablation:<fov|lrf|ov|iv|attributes|topology>"
                    ))
                }),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Variant::FovNet => "fovnet".into(),
            Variant::FovNetUv => "fovnet-uv".into(),
            Variant::Ablation(a) => format!("ablation:{}", a.name()),
        }
    }

    pub fn features(&self) -> FeatureConfig {
        let none = FeatureConfig::NONE;
        match self {
            Variant::FovNet => FeatureConfig::FULL,
            Variant::FovNetUv => FeatureConfig::GLOBAL_UV,
            Variant::Ablation(Arm::Fov) => FeatureConfig { ov: true, iv: true, ..none },
            Variant::Ablation(Arm::Lrf) => FeatureConfig { lrf: true, ..none },
            Variant::Ablation(Arm::Ov) => FeatureConfig { ov: true, ..none },
            Variant::Ablation(Arm::Iv) => FeatureConfig { iv: true, ..none },
            Variant::Ablation(Arm::Attributes) => FeatureConfig { attributes: true, ..none },
            Variant::Ablation(Arm::Topology) => FeatureConfig::TOPOLOGY,
        }
    }

    pub fn from_features(f: &FeatureConfig) -> Option<Self> {
        let mut all = vec![Variant::FovNet, Variant::FovNetUv];
        all.extend(Arm::ALL.map(Variant::Ablation));
        all.into_iter().find(|v| v.features() == *f)
    }
}

pub fn parse_task(s: &str) -> Result<Task, CliError> {
    match s {
        "classify" => Ok(Task::Classify),
        "segment" => Ok(Task::Segment),
        _ => Err(CliError::BadArgument(format!("task {s:?}; expected classify or segment"))),
    }
}

pub fn task_name(t: Task) -> &'static str {
    match t {
        Task::Classify => "classify",
        Task::Segment => "segment",
    }
}

/// Manifest with its solids loaded, in manifest order.
#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub manifest: DatasetManifest,
    pub solids: Vec<Solid>,
}

impl LoadedDataset {
    pub fn load(manifest_path: &Path) -> Result<Self, CliError> {
        let manifest = DatasetManifest::load(manifest_path)?;
        let root = manifest_path.parent().unwrap_or(Path::new("."));
        let solids = manifest
            .entries
            .par_iter()
            .map(|e| load_brj(root.join(&e.path)).map_err(CliError::from))
            .collect::<Result<_, _>>()?;
        Ok(LoadedDataset { manifest, solids })
    }

    pub fn classes(&self) -> usize {
        self.manifest.entries.iter().map(|e| e.class as usize + 1).max().unwrap_or(0)
    }
}

impl From<GeneratedDataset> for LoadedDataset {
    fn from(d: GeneratedDataset) -> Self {
        LoadedDataset { manifest: d.manifest, solids: d.solids }
    }
}

/// One training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub variant: Variant,
    /// Seeds the model, the batch order and the train subset.
    pub seed: u64,
    pub subset: Option<usize>,
    pub fov_res: (usize, usize),
    pub train: TrainConfig,
    pub rotated_test: bool,
}

impl RunConfig {
    pub fn new(task: Task, variant: Variant, seed: u64) -> Self {
        RunConfig {
            task,
            variant,
            seed,
            subset: None,
            fov_res: DEFAULT_RES,
            train: TrainConfig::default(),
            rotated_test: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub checkpoint: Checkpoint,
    pub history: History,
    pub train_size: usize,
    pub original: Metrics,
    pub rotated: Option<Metrics>,
}

type CacheKey = (u32, (usize, usize), bool);

/// A dataset plus memoized network inputs per feature set, resolution and pose.
pub struct Experiment {
    pub data: LoadedDataset,
    cache: HashMap<CacheKey, Vec<Option<GraphInput<f32>>>>,
}

impl Experiment {
    pub fn new(data: LoadedDataset) -> Self {
        Experiment { data, cache: HashMap::new() }
    }

    /// Rotation applied to entry `k` by the rotated-test protocol: its
    /// manifest tag, or a draw from [`EVAL_SEED`].
    pub fn test_rotation(&self, k: usize) -> Rotation {
        self.data.manifest.entries[k].rotation().unwrap_or_else(|| random_rotation(mix(EVAL_SEED, k as u64)))
    }

    /// Network inputs of entries `idx`. Rotated solids turn about the origin
    /// without renormalization.
    pub fn inputs(&mut self, idx: &[usize], features: &FeatureConfig, res: (usize, usize), rotated: bool) -> Vec<GraphInput<f32>> {
        let key = (feature_bits(features), res, rotated);
        let n = self.data.solids.len();
        let missing: Vec<usize> = {
            let slot = self.cache.entry(key).or_insert_with(|| vec![None; n]);
            idx.iter().copied().filter(|&k| slot[k].is_none()).collect()
        };
        let computed: Vec<(usize, GraphInput<f32>)> = missing
            .par_iter()
            .map(|&k| {
                let entry = &self.data.manifest.entries[k];
                let solid = &self.data.solids[k];
                let container = if rotated {
                    extract(&solid.rotated(&self.test_rotation(k)), res, features)
                } else {
                    extract(solid, res, features)
                };
                (k, to_graph_input(&container, entry.class.max(0) as usize))
            })
            .collect();
        let slot = self.cache.get_mut(&key).unwrap();
        for (k, g) in computed {
            slot[k] = Some(g);
        }
        idx.iter().map(|&k| slot[k].clone().unwrap()).collect()
    }

    fn indices(manifest: &DatasetManifest, split: Split) -> Vec<usize> {
        (0..manifest.entries.len()).filter(|&k| manifest.entries[k].split == split).collect()
    }

    fn classes(&self, task: Task) -> usize {
        match task {
            Task::Classify => self.data.classes(),
            Task::Segment => Role::COUNT,
        }
    }

    /// Trains one model and evaluates it on the test split.
    pub fn run(&mut self, cfg: &RunConfig) -> Result<RunOutcome, CliError> {
        let manifest = match cfg.subset {
            Some(n) => subset(&self.data.manifest, n, cfg.seed)?,
            None => self.data.manifest.clone(),
        };
        // subsets keep manifest order, so entry positions map back by path
        let position: HashMap<&str, usize> =
            self.data.manifest.entries.iter().enumerate().map(|(k, e)| (e.path.as_str(), k)).collect();
        let pick = |split| -> Vec<usize> {
            Self::indices(&manifest, split).into_iter().map(|k| position[manifest.entries[k].path.as_str()]).collect()
        };
        let (tr, va) = (pick(Split::Train), pick(Split::Val));
        let features = cfg.variant.features();
        let train_set = self.inputs(&tr, &features, cfg.fov_res, false);
        let val_set = self.inputs(&va, &features, cfg.fov_res, false);
        let config = ModelConfig { task: cfg.task, classes: self.classes(cfg.task), features, seed: mix(cfg.seed, 0x4D4F_4445) };
        let mut model = FovNetModel::new(config)?;
        let tc = TrainConfig { seed: mix(cfg.seed, 0x5348_5546), ..cfg.train };
        let history = train(&mut model, &train_set, &val_set, &tc)?;
        let checkpoint = Checkpoint { model, fov_res: cfg.fov_res };
        let (original, rotated) = self.evaluate(&checkpoint, cfg.rotated_test)?;
        Ok(RunOutcome { checkpoint, history, train_size: tr.len(), original, rotated })
    }

    /// Test-split metrics on the original and, when asked, rotated solids.
    pub fn evaluate(&mut self, ckpt: &Checkpoint, rotated: bool) -> Result<(Metrics, Option<Metrics>), CliError> {
        let te = Self::indices(&self.data.manifest, Split::Test);
        if te.is_empty() {
            return Err(CliError::EmptySplit("test".into()));
        }
        let features = ckpt.model.config.features;
        let expected = self.classes(ckpt.model.config.task);
        if ckpt.model.config.classes != expected {
            return Err(CliError::CheckpointMismatch(format!(
                "checkpoint has {} classes, the dataset needs {expected}",
                ckpt.model.config.classes
            )));
        }
        let original = evaluate(&ckpt.model, &self.inputs(&te, &features, ckpt.fov_res, false))?;
        let rotated = if rotated {
            Some(evaluate(&ckpt.model, &self.inputs(&te, &features, ckpt.fov_res, true))?)
        } else {
            None
        };
        Ok((original, rotated))
    }
}

pub const METRICS_HEADER: &str = "task,variant,seed,subset,fov_res,test_set,accuracy,mean_iou,test_size";

/// One metrics row per evaluated test set.
pub fn metrics_rows(cfg: &RunConfig, original: &Metrics, rotated: Option<&Metrics>, test_size: usize) -> Vec<String> {
    let row = |set: &str, m: &Metrics| {
        format!(
            "{},{},{},{},{},{set},{},{},{test_size}",
            task_name(cfg.task),
            cfg.variant.name(),
            cfg.seed,
            cfg.subset.map_or(String::new(), |n| n.to_string()),
            resolution_name(cfg.fov_res),
            m.accuracy,
            m.mean_iou.map_or(String::new(), |v| v.to_string()),
        )
    };
    let mut rows = vec![row("original", original)];
    rows.extend(rotated.map(|m| row("rotated", m)));
    rows
}

/// Appends rows to a metrics CSV, writing the header into a new or empty file.
pub fn append_metrics(path: &Path, rows: &[String]) -> Result<(), CliError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{METRICS_HEADER}")?;
    }
    for r in rows {
        writeln!(f, "{r}")?;
    }
    Ok(())
}
