//! Little-endian binary encodings: `FOVD` descriptor containers and the
//! tensor list shared with checkpoints.

use std::path::Path;

use crate::CliError;

pub const MAGIC: &[u8; 4] = b"FOVD";
pub const VERSION: u32 = 1;

/// Bits of the payload mask in the container header.
pub mod flags {
    pub const GRID: u32 = 1;
    pub const OV: u32 = 1 << 1;
    pub const IV: u32 = 1 << 2;
    pub const ATTRS: u32 = 1 << 3;
    /// The grid payload holds global rather than LRF samples.
    pub const GLOBAL_GRID: u32 = 1 << 4;
    pub const LABELS: u32 = 1 << 5;
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceRecord {
    pub face_id: u32,
    /// `uv_h × uv_w × 7`, empty without the grid payload.
    pub grid: Vec<f32>,
    /// `fov_el × fov_az × 3` each, empty when absent.
    pub ov: Vec<f32>,
    pub iv: Vec<f32>,
    /// 7 values, empty when absent.
    pub attrs: Vec<f32>,
}

/// Descriptors of one solid.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorContainer {
    pub flags: u32,
    pub uv_h: u32,
    pub uv_w: u32,
    pub fov_el: u32,
    pub fov_az: u32,
    pub records: Vec<FaceRecord>,
    /// Record-index pairs.
    pub edges: Vec<(u32, u32)>,
    /// Per-record face labels, −1 for unlabeled faces.
    pub labels: Option<Vec<i32>>,
}

pub(crate) struct Writer(pub Vec<u8>);

impl Writer {
    pub fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub fn i32(&mut self, v: i32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f32s(&mut self, v: &[f32]) {
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
    pub fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }
    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CliError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| CliError::Container(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    pub fn u32(&mut self) -> Result<u32, CliError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> Result<u64, CliError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn i32(&mut self) -> Result<i32, CliError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>, CliError> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| CliError::Container("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
    pub fn finish(&self) -> Result<(), CliError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(CliError::Container(format!("{} trailing bytes", self.buf.len() - self.pos)))
        }
    }
}

impl DescriptorContainer {
    pub fn has(&self, bit: u32) -> bool {
        self.flags & bit != 0
    }

    fn sizes(&self) -> [usize; 4] {
        let grid = if self.has(flags::GRID) { (self.uv_h * self.uv_w) as usize * 7 } else { 0 };
        let fov = (self.fov_el * self.fov_az) as usize * 3;
        [
            grid,
            if self.has(flags::OV) { fov } else { 0 },
            if self.has(flags::IV) { fov } else { 0 },
            if self.has(flags::ATTRS) { 7 } else { 0 },
        ]
    }

    /// Record sizes, edge indices and label count agree with the header.
    pub fn validate(&self) -> Result<(), CliError> {
        let [g, o, i, a] = self.sizes();
        for r in &self.records {
            if [r.grid.len(), r.ov.len(), r.iv.len(), r.attrs.len()] != [g, o, i, a] {
                return Err(CliError::Container(format!("face {} payload sizes disagree with the header", r.face_id)));
            }
        }
        let n = self.records.len() as u32;
        if let Some(&(a, b)) = self.edges.iter().find(|&&(a, b)| a >= n || b >= n) {
            return Err(CliError::Container(format!("edge ({a}, {b}) outside {n} records")));
        }
        if self.has(flags::LABELS) != self.labels.is_some() {
            return Err(CliError::Container("label flag disagrees with the label block".into()));
        }
        if self.labels.as_ref().is_some_and(|l| l.len() != self.records.len()) {
            return Err(CliError::Container("label count differs from record count".into()));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        self.validate()?;
        let mut w = Writer(Vec::new());
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u32(self.flags);
        for v in [self.uv_h, self.uv_w, self.fov_el, self.fov_az, self.records.len() as u32] {
            w.u32(v);
        }
        for r in &self.records {
            w.u32(r.face_id);
            w.f32s(&r.grid);
            w.f32s(&r.ov);
            w.f32s(&r.iv);
            w.f32s(&r.attrs);
        }
        w.u32(self.edges.len() as u32);
        for &(a, b) in &self.edges {
            w.u32(a);
            w.u32(b);
        }
        for &l in self.labels.iter().flatten() {
            w.i32(l);
        }
        Ok(w.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(CliError::Container("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CliError::Container(format!("unsupported version {version}")));
        }
        let mut c = DescriptorContainer {
            flags: r.u32()?,
            uv_h: r.u32()?,
            uv_w: r.u32()?,
            fov_el: r.u32()?,
            fov_az: r.u32()?,
            records: Vec::new(),
            edges: Vec::new(),
            labels: None,
        };
        let n = r.u32()? as usize;
        let [g, o, i, a] = c.sizes();
        for _ in 0..n {
            c.records.push(FaceRecord { face_id: r.u32()?, grid: r.f32s(g)?, ov: r.f32s(o)?, iv: r.f32s(i)?, attrs: r.f32s(a)? });
        }
        let m = r.u32()? as usize;
        for _ in 0..m {
            c.edges.push((r.u32()?, r.u32()?));
        }
        if c.has(flags::LABELS) {
            c.labels = Some((0..n).map(|_| r.i32()).collect::<Result<_, _>>()?);
        }
        r.finish()?;
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
