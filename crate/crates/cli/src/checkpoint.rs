//! `FOVC` checkpoints: the model configuration followed by named f32 tensors.

use std::path::Path;

use fovnet_nn::{FeatureConfig, FovNetModel, Module, ModelConfig, Task};

use crate::container::{Reader, Writer};
use crate::CliError;

pub const MAGIC: &[u8; 4] = b"FOVC";
pub const VERSION: u32 = 1;

/// Bit mask of a feature configuration, in field order.
pub fn feature_bits(f: &FeatureConfig) -> u32 {
    [f.lrf, f.ov, f.iv, f.attributes, f.global_uv, f.topology_only]
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (u32::from(b) << i))
}

pub fn features_from_bits(bits: u32) -> FeatureConfig {
    let on = |i: u32| bits & (1 << i) != 0;
    FeatureConfig { lrf: on(0), ov: on(1), iv: on(2), attributes: on(3), global_uv: on(4), topology_only: on(5) }
}

/// A trained model plus the field-of-view resolution its inputs used.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: FovNetModel<f32>,
    pub fov_res: (usize, usize),
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.model.config;
        let mut w = Writer(Vec::new());
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u32(match c.task {
            Task::Classify => 0,
            Task::Segment => 1,
        });
        w.u32(c.classes as u32);
        w.u32(feature_bits(&c.features));
        w.u64(c.seed);
        w.u32(self.fov_res.0 as u32);
        w.u32(self.fov_res.1 as u32);
        let mut tensors = Vec::new();
        self.model.visit(&mut |p| tensors.push(p));
        w.u32(tensors.len() as u32);
        for p in tensors {
            w.u32(p.name.len() as u32);
            w.bytes(p.name.as_bytes());
            w.u32(p.value.shape.len() as u32);
            for &d in &p.value.shape {
                w.u32(d as u32);
            }
            w.f32s(&p.value.data);
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(CliError::Container("bad checkpoint magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CliError::Container(format!("unsupported checkpoint version {version}")));
        }
        let task = match r.u32()? {
            0 => Task::Classify,
            1 => Task::Segment,
            t => return Err(CliError::Container(format!("unknown task code {t}"))),
        };
        let classes = r.u32()? as usize;
        let features = features_from_bits(r.u32()?);
        let seed = r.u64()?;
        let fov_res = (r.u32()? as usize, r.u32()? as usize);
        let config = ModelConfig { task, classes, features, seed };
        let mut model = FovNetModel::<f32>::new(config).map_err(|e| CliError::CheckpointMismatch(e.to_string()))?;
        let count = r.u32()? as usize;
        let mut stored = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| CliError::Container("tensor name is not UTF-8".into()))?;
            let ndim = r.u32()? as usize;
            let shape: Vec<usize> = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_, _>>()?;
            let len = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| CliError::Container(format!("tensor {name} shape overflows")))?;
            let data = r.f32s(len)?;
            stored.push((name, shape, data));
        }
        r.finish()?;
        let mut k = 0;
        let mut mismatch = None;
        model.visit_mut(&mut |p| {
            match stored.get(k) {
                Some((name, shape, data)) if *name == p.name && *shape == p.value.shape => p.value.data.clone_from(data),
                Some((name, shape, _)) => {
                    mismatch.get_or_insert(format!("tensor {name} {shape:?} where the config expects {} {:?}", p.name, p.value.shape));
                }
                None => {
                    mismatch.get_or_insert(format!("missing tensor {}", p.name));
                }
            }
            k += 1;
        });
        if let Some(m) = mismatch {
            return Err(CliError::CheckpointMismatch(m));
        }
        if k != stored.len() {
            return Err(CliError::CheckpointMismatch(format!("{} stored tensors, the config has {k}", stored.len())));
        }
        if !model.all_finite() {
            return Err(CliError::Container("non-finite parameter".into()));
        }
        Ok(Checkpoint { model, fov_res })
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
