//! Deterministic synthetic labeled solids and train/val/test split management.

mod families;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use families::{build_family, FamilySpec, Params, CIRCLE_SEGMENTS};

use crate::brep::{normalize_solid, random_rotation, Rotation, Solid, Vec3};
use crate::brj::{save_brj, BrjError};

/// Attempts per item before generation gives up.
pub const MAX_ATTEMPTS: usize = 100;
pub const MIN_COUNT: usize = 10;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("count {0} below the minimum of {MIN_COUNT} per family")]
    CountTooSmall(usize),
    #[error("subset size {n} exceeds train size {train}")]
    SubsetTooLarge { n: usize, train: usize },
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Brj(#[from] BrjError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Solid families; the discriminant is the classification label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Box = 0,
    BoxThroughHole = 1,
    BoxSlot = 2,
    CylinderCapped = 3,
    LBracket = 4,
    Washer = 5,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Box,
        Family::BoxThroughHole,
        Family::BoxSlot,
        Family::CylinderCapped,
        Family::LBracket,
        Family::Washer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Box => "box",
            Family::BoxThroughHole => "box_through_hole",
            Family::BoxSlot => "box_slot",
            Family::CylinderCapped => "cylinder_capped",
            Family::LBracket => "l_bracket",
            Family::Washer => "washer",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn from_label(label: i64) -> Option<Self> {
        usize::try_from(label).ok().and_then(|k| Self::ALL.get(k).copied())
    }
}

/// Per-face segmentation roles; the discriminant is the face label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Stock = 0,
    HoleWall = 1,
    SlotBottom = 2,
    SlotWall = 3,
    StepBottom = 4,
    StepWall = 5,
}

impl Role {
    pub const COUNT: usize = 6;

    pub fn name(self) -> &'static str {
        match self {
            Role::Stock => "stock",
            Role::HoleWall => "hole_wall",
            Role::SlotBottom => "slot_bottom",
            Role::SlotWall => "slot_wall",
            Role::StepBottom => "step_bottom",
            Role::StepWall => "step_wall",
        }
    }
}

/// The `k`-th of the 24 rotations mapping the coordinate axes onto signed
/// coordinate axes: `k / 4` picks the image of +z, `k % 4` the quarter turn about it.
pub fn axis_rotation(k: usize) -> Rotation {
    use std::f64::consts::{FRAC_PI_2, PI};
    let tilt = match (k / 4) % 6 {
        0 => Rotation::identity(),
        1 => Rotation::from_axis_angle(Vec3::x(), FRAC_PI_2),
        2 => Rotation::from_axis_angle(Vec3::x(), PI),
        3 => Rotation::from_axis_angle(Vec3::x(), -FRAC_PI_2),
        4 => Rotation::from_axis_angle(Vec3::y(), FRAC_PI_2),
        _ => Rotation::from_axis_angle(Vec3::y(), -FRAC_PI_2),
    };
    tilt.compose(&Rotation::from_axis_angle(Vec3::z(), FRAC_PI_2 * (k % 4) as f64))
}

/// One sampling attempt: draws parameters from `seed`, builds the solid and
/// normalizes it (bounding-box center at the origin, unit diagonal).
pub fn generate_solid(spec: &FamilySpec, seed: u64) -> Result<Solid, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = Params::sample(spec, &mut rng);
    let solid = build_family(spec.family, &params)?;
    let (solid, _, _) = normalize_solid(&solid).map_err(|e| DatasetError::InvalidParams(e.to_string()))?;
    Ok(solid)
}

/// Retries [`generate_solid`] on derived seeds until parameters are valid.
pub fn generate_solid_retrying(spec: &FamilySpec, seed: u64) -> Result<Solid, DatasetError> {
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS as u64 {
        match generate_solid(spec, mix(seed, attempt)) {
            Ok(s) => return Ok(s),
            Err(e @ DatasetError::InvalidParams(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// splitmix64 finalizer over a combined key.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn item_seed(seed: u64, family: Family, index: usize) -> u64 {
    mix(mix(seed, family as u64 + 1), index as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub class: i64,
    pub split: Split,
    /// Unit quaternion `(w, x, y, z)` for the rotated-test protocol.
    pub rotation: Option<[f64; 4]>,
}

impl ManifestEntry {
    pub fn rotation(&self) -> Option<Rotation> {
        self.rotation.map(Rotation::from_wxyz)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> + '_ {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.split(split).count()
    }

    /// Entry count per class label.
    pub fn histogram(&self) -> BTreeMap<i64, usize> {
        let mut h = BTreeMap::new();
        for e in &self.entries {
            *h.entry(e.class).or_insert(0) += 1;
        }
        h
    }

    pub fn split_histogram(&self, split: Split) -> BTreeMap<i64, usize> {
        let mut h = BTreeMap::new();
        for e in self.split(split) {
            *h.entry(e.class).or_insert(0) += 1;
        }
        h
    }

    /// Writes the CSV form: a `# seed=N` line, then
    /// `path,class,split,rot_w,rot_x,rot_y,rot_z` rows (rotation empty when absent).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), DatasetError> {
        writeln!(out, "# seed={}", self.seed)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path", "class", "split", "rot_w", "rot_x", "rot_y", "rot_z"])?;
        for e in &self.entries {
            let mut row = vec![e.path.clone(), e.class.to_string(), e.split.name().to_string()];
            match e.rotation {
                Some(q) => row.extend(q.iter().map(|c| c.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self, DatasetError> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let seed = first
            .trim()
            .strip_prefix("# seed=")
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| DatasetError::Manifest {
                line: 1,
                msg: "expected '# seed=<u64>'".into(),
            })?;
        let mut r = csv::Reader::from_reader(input);
        let mut entries = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let line = k + 3;
            let rec = rec?;
            let bad = |msg: String| DatasetError::Manifest { line, msg };
            if rec.len() != 7 {
                return Err(bad(format!("expected 7 fields, found {}", rec.len())));
            }
            let class = rec[1].parse().map_err(|_| bad(format!("bad class '{}'", &rec[1])))?;
            let split = Split::from_name(&rec[2]).ok_or_else(|| bad(format!("bad split '{}'", &rec[2])))?;
            let rotation = if (3..7).all(|i| rec[i].is_empty()) {
                None
            } else {
                let mut q = [0.0; 4];
                for (i, c) in q.iter_mut().enumerate() {
                    *c = rec[3 + i]
                        .parse()
                        .map_err(|_| bad(format!("bad rotation component '{}'", &rec[3 + i])))?;
                }
                Some(q)
            };
            entries.push(ManifestEntry {
                path: rec[0].to_string(),
                class,
                split,
                rotation,
            });
        }
        Ok(Self { seed, entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::read_csv(io::BufReader::new(fs::File::open(path)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub families: Vec<Family>,
    pub count_per_family: usize,
    pub seed: u64,
    /// Attach a random rotation tag to every entry.
    pub rotations: bool,
    /// Turn every solid by a random [`axis_rotation`], so features face any
    /// side while faces stay axis-aligned.
    pub axis_turns: bool,
}

impl DatasetConfig {
    pub fn new(count_per_family: usize, seed: u64) -> Self {
        Self {
            families: Family::ALL.to_vec(),
            count_per_family,
            seed,
            rotations: true,
            axis_turns: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub manifest: DatasetManifest,
    /// Parallel to `manifest.entries`.
    pub solids: Vec<Solid>,
}

impl GeneratedDataset {
    pub fn solids_in(&self, split: Split) -> impl Iterator<Item = (&ManifestEntry, &Solid)> + '_ {
        self.manifest
            .entries
            .iter()
            .zip(&self.solids)
            .filter(move |(e, _)| e.split == split)
    }
}

/// Splits `n` items into train/val/test counts in the 80/10/10 ratio.
pub fn split_counts(n: usize) -> (usize, usize, usize) {
    let val = (n as f64 * 0.1).round() as usize;
    let test = (n as f64 * 0.1).round() as usize;
    (n - val - test, val, test)
}

/// Generates every solid in memory with per-class stratified splits.
pub fn generate_in_memory(config: &DatasetConfig) -> Result<GeneratedDataset, DatasetError> {
    if config.count_per_family < MIN_COUNT {
        return Err(DatasetError::CountTooSmall(config.count_per_family));
    }
    let jobs: Vec<(Family, usize)> = config
        .families
        .iter()
        .flat_map(|&f| (0..config.count_per_family).map(move |i| (f, i)))
        .collect();
    let solids: Vec<Solid> = jobs
        .par_iter()
        .map(|&(f, i)| {
            let seed = item_seed(config.seed, f, i);
            let solid = generate_solid_retrying(&FamilySpec::new(f), seed)?;
            Ok(if config.axis_turns {
                solid.rotated(&axis_rotation((mix(seed, 0x7A2E) % 24) as usize))
            } else {
                solid
            })
        })
        .collect::<Result<_, DatasetError>>()?;

    let mut entries = Vec::with_capacity(jobs.len());
    for (chunk, &family) in jobs.chunks(config.count_per_family).zip(&config.families) {
        let mut order: Vec<usize> = (0..chunk.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(config.seed, 0x5EED_0000 + family as u64)));
        let (train, val, _) = split_counts(chunk.len());
        let mut splits = vec![Split::Test; chunk.len()];
        for (rank, &k) in order.iter().enumerate() {
            splits[k] = if rank < train {
                Split::Train
            } else if rank < train + val {
                Split::Val
            } else {
                Split::Test
            };
        }
        for (&(f, i), split) in chunk.iter().zip(splits) {
            let rotation = config
                .rotations
                .then(|| random_rotation(mix(item_seed(config.seed, f, i), 0xA5A5)).wxyz());
            entries.push(ManifestEntry {
                path: format!("solids/{}_{:04}.brj", f.name(), i),
                class: f as i64,
                split,
                rotation,
            });
        }
    }
    Ok(GeneratedDataset {
        manifest: DatasetManifest {
            seed: config.seed,
            entries,
        },
        solids,
    })
}

/// Generates the dataset and writes `manifest.csv` plus one `.brj` per solid
/// under `out_dir`. Returns the manifest path.
pub fn generate_dataset(config: &DatasetConfig, out_dir: &Path) -> Result<(PathBuf, GeneratedDataset), DatasetError> {
    let data = generate_in_memory(config)?;
    fs::create_dir_all(out_dir.join("solids"))?;
    data.manifest
        .entries
        .par_iter()
        .zip(&data.solids)
        .try_for_each(|(e, s)| save_brj(s, out_dir.join(&e.path)))?;
    let manifest_path = out_dir.join("manifest.csv");
    data.manifest.save(&manifest_path)?;
    Ok((manifest_path, data))
}

/// Random train subset of size `n` (the prefix of a seeded shuffle, so
/// subsets under one seed are nested); val and test entries are kept.
pub fn subset(manifest: &DatasetManifest, n: usize, seed: u64) -> Result<DatasetManifest, DatasetError> {
    let train: Vec<usize> = (0..manifest.entries.len())
        .filter(|&k| manifest.entries[k].split == Split::Train)
        .collect();
    if n > train.len() {
        return Err(DatasetError::SubsetTooLarge { n, train: train.len() });
    }
    let mut order = train;
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut keep = vec![true; manifest.entries.len()];
    for &k in &order[n..] {
        keep[k] = false;
    }
    Ok(DatasetManifest {
        seed: manifest.seed,
        entries: manifest
            .entries
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(e, _)| e.clone())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_arithmetic() {
        assert_eq!(split_counts(100), (80, 10, 10));
        assert_eq!(split_counts(10), (8, 1, 1));
        assert_eq!(split_counts(15), (11, 2, 2));
    }

    #[test]
    fn mix_is_injective_on_small_keys() {
        let mut seen = std::collections::HashSet::new();
        for a in 0..50 {
            for b in 0..50 {
                assert!(seen.insert(mix(a, b)));
            }
        }
    }
}
