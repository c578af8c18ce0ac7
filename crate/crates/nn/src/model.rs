use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::{EncoderCache, GridEncoder};
use crate::gat::{Adjacency, GatCache, GatLayer};
use crate::layers::{relu_backward, relu_pinned, Grid, Linear, Module, PadMode, Param};
use crate::{NnError, Real};

pub const UV_CHANNELS: usize = 7;
pub const FOV_CHANNELS: usize = 3;
pub const ATTR_DIM: usize = 7;
pub const EMBED_DIM: usize = 64;
pub const FUSION_HIDDEN: usize = 256;
pub const GAT_LAYERS: usize = 3;
pub const GAT_HEADS: usize = 4;
pub const CLASSIFIER_HIDDEN: usize = 64;

/// Which per-face inputs feed the node embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FeatureConfig {
    pub lrf: bool,
    pub ov: bool,
    pub iv: bool,
    pub attributes: bool,
    /// Global UV grids occupy the LRF encoder slot.
    pub global_uv: bool,
    /// Node degree is the only input.
    pub topology_only: bool,
}

impl FeatureConfig {
    pub const FULL: FeatureConfig =
        FeatureConfig { lrf: true, ov: true, iv: true, attributes: true, global_uv: false, topology_only: false };
    pub const GLOBAL_UV: FeatureConfig =
        FeatureConfig { lrf: false, ov: true, iv: true, attributes: true, global_uv: true, topology_only: false };
    pub const NONE: FeatureConfig =
        FeatureConfig { lrf: false, ov: false, iv: false, attributes: false, global_uv: false, topology_only: false };
    pub const TOPOLOGY: FeatureConfig = FeatureConfig { topology_only: true, ..Self::NONE };

    /// True when a UV grid (local or global) is encoded.
    pub fn uses_grid(&self) -> bool {
        self.lrf || self.global_uv
    }

    pub fn uses_fov(&self) -> bool {
        self.ov || self.iv
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.lrf && self.global_uv {
            return Err(NnError::InvalidConfig("lrf and global-UV share the grid encoder slot".into()));
        }
        let any_face = self.uses_grid() || self.ov || self.iv || self.attributes;
        if self.topology_only == any_face {
            return Err(NnError::InvalidConfig("enable either face features or topology-only".into()));
        }
        Ok(())
    }

    /// Width of the fusion input.
    pub fn fusion_width(&self) -> usize {
        let n = [self.uses_grid(), self.ov, self.iv].iter().filter(|&&b| b).count();
        n * EMBED_DIM + if self.attributes { ATTR_DIM } else { 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Classify,
    Segment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub task: Task,
    pub classes: usize,
    pub features: FeatureConfig,
    pub seed: u64,
}

/// One face-adjacency graph with dense per-face payloads.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphInput<T> {
    pub n: usize,
    /// n × uv_h × uv_w × 7, either LRF or global UV samples.
    pub uv: Vec<T>,
    pub uv_h: usize,
    pub uv_w: usize,
    /// n × fov_h × fov_w × 3 each.
    pub ov: Vec<T>,
    pub iv: Vec<T>,
    pub fov_h: usize,
    pub fov_w: usize,
    /// n × 7.
    pub attrs: Vec<T>,
    pub edges: Vec<(usize, usize)>,
    pub class: usize,
    /// Per-face labels; empty when absent.
    pub node_labels: Vec<usize>,
}

impl<T: Real> GraphInput<T> {
    pub fn check(&self) -> Result<(), NnError> {
        let n = self.n;
        let uv = n * self.uv_h * self.uv_w * UV_CHANNELS;
        let fov = n * self.fov_h * self.fov_w * FOV_CHANNELS;
        if n == 0 {
            return Err(NnError::ShapeMismatch("graph without nodes".into()));
        }
        if self.uv.len() != uv || self.ov.len() != fov || self.iv.len() != fov || self.attrs.len() != n * ATTR_DIM {
            return Err(NnError::ShapeMismatch(format!("payload sizes disagree with {n} nodes")));
        }
        if !self.node_labels.is_empty() && self.node_labels.len() != n {
            return Err(NnError::ShapeMismatch(format!("{} node labels for {n} nodes", self.node_labels.len())));
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> GraphInput<U> {
        let c = |v: &[T]| v.iter().map(|x| U::lit(x.to_f64_lossy())).collect();
        GraphInput {
            n: self.n,
            uv: c(&self.uv),
            uv_h: self.uv_h,
            uv_w: self.uv_w,
            ov: c(&self.ov),
            iv: c(&self.iv),
            fov_h: self.fov_h,
            fov_w: self.fov_w,
            attrs: c(&self.attrs),
            edges: self.edges.clone(),
            class: self.class,
            node_labels: self.node_labels.clone(),
        }
    }
}

/// Disjoint union of graphs processed in one pass.
#[derive(Clone, Debug)]
pub struct Batch<T> {
    pub n: usize,
    pub graph_start: Vec<usize>,
    pub uv: Vec<T>,
    pub uv_grid: Grid,
    pub ov: Vec<T>,
    pub iv: Vec<T>,
    pub fov_grid: Grid,
    pub attrs: Vec<T>,
    pub adjacency: Adjacency,
    pub classes: Vec<usize>,
    pub node_labels: Vec<usize>,
}

impl<T: Real> Batch<T> {
    pub fn new(graphs: &[&GraphInput<T>]) -> Result<Self, NnError> {
        let first = graphs.first().ok_or_else(|| NnError::ShapeMismatch("empty batch".into()))?;
        let mut b = Batch {
            n: 0,
            graph_start: vec![0],
            uv: Vec::new(),
            uv_grid: Grid { n: 0, h: first.uv_h, w: first.uv_w },
            ov: Vec::new(),
            iv: Vec::new(),
            fov_grid: Grid { n: 0, h: first.fov_h, w: first.fov_w },
            attrs: Vec::new(),
            adjacency: Adjacency { start: vec![0], nbrs: vec![] },
            classes: Vec::new(),
            node_labels: Vec::new(),
        };
        let mut edges = Vec::new();
        let labelled = graphs.iter().all(|g| !g.node_labels.is_empty());
        for g in graphs {
            g.check()?;
            if (g.uv_h, g.uv_w, g.fov_h, g.fov_w) != (first.uv_h, first.uv_w, first.fov_h, first.fov_w) {
                return Err(NnError::ShapeMismatch("graphs in a batch need equal grid sizes".into()));
            }
            edges.extend(g.edges.iter().map(|&(a, c)| (a + b.n, c + b.n)));
            for &(a, c) in &g.edges {
                if a >= g.n || c >= g.n {
                    return Err(NnError::ShapeMismatch(format!("edge ({a}, {c}) outside {} nodes", g.n)));
                }
            }
            b.n += g.n;
            b.graph_start.push(b.n);
            b.uv.extend_from_slice(&g.uv);
            b.ov.extend_from_slice(&g.ov);
            b.iv.extend_from_slice(&g.iv);
            b.attrs.extend_from_slice(&g.attrs);
            b.classes.push(g.class);
            if labelled {
                b.node_labels.extend_from_slice(&g.node_labels);
            }
        }
        b.uv_grid.n = b.n;
        b.fov_grid.n = b.n;
        b.adjacency = Adjacency::from_edges(b.n, &edges)?;
        Ok(b)
    }

    pub fn graphs(&self) -> usize {
        self.graph_start.len() - 1
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency.row(i).len() - 1
    }
}

#[derive(Clone, Debug)]
pub enum Head<T> {
    /// Max-pool readout followed by a two-layer MLP.
    Classify { hidden: Linear<T>, out: Linear<T> },
    /// Per-node linear map.
    Segment { out: Linear<T> },
}

/// Face encoders, fusion MLP, graph attention backbone and task head.
#[derive(Clone, Debug)]
pub struct FovNetModel<T> {
    pub config: ModelConfig,
    pub grid_encoder: Option<GridEncoder<T>>,
    pub ov_encoder: Option<GridEncoder<T>>,
    pub iv_encoder: Option<GridEncoder<T>>,
    /// Two-layer fusion MLP, or the single degree projection when topology-only.
    pub fusion: Vec<Linear<T>>,
    pub gat: Vec<GatLayer<T>>,
    pub head: Head<T>,
}

/// Everything the backward pass reads.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    grid: Option<EncoderCache<T>>,
    ov: Option<EncoderCache<T>>,
    iv: Option<EncoderCache<T>>,
    fused_in: Vec<T>,
    fusion_hidden: Vec<T>,
    gat: Vec<GatCache<T>>,
    nodes: Vec<T>,
    pooled: Vec<T>,
    pool_arg: Vec<usize>,
    cls_hidden: Vec<T>,
}

impl<T: Real> FovNetModel<T> {
    pub fn new(config: ModelConfig) -> Result<Self, NnError> {
        config.features.validate()?;
        if config.classes < 2 {
            return Err(NnError::InvalidConfig(format!("{} classes", config.classes)));
        }
        let f = config.features;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let grid_encoder = f
            .uses_grid()
            .then(|| GridEncoder::new("grid", &[UV_CHANNELS, 32, 64, 128], EMBED_DIM, PadMode::Zero, &mut rng));
        let fov = |name: &str, on: bool, rng: &mut ChaCha8Rng| {
            on.then(|| GridEncoder::new(name, &[FOV_CHANNELS, 32, 64], EMBED_DIM, PadMode::CircularAzimuth, rng))
        };
        let ov_encoder = fov("ov", f.ov, &mut rng);
        let iv_encoder = fov("iv", f.iv, &mut rng);
        let fusion = if f.topology_only {
            vec![Linear::new("degree", 1, EMBED_DIM, &mut rng)]
        } else {
            vec![
                Linear::new("fusion0", f.fusion_width(), FUSION_HIDDEN, &mut rng),
                Linear::new("fusion1", FUSION_HIDDEN, EMBED_DIM, &mut rng),
            ]
        };
        let head_dim = EMBED_DIM / GAT_HEADS;
        let gat = (0..GAT_LAYERS)
            .map(|l| {
                let last = l + 1 == GAT_LAYERS;
                let d_head = if last { EMBED_DIM } else { head_dim };
                GatLayer::new(&format!("gat{l}"), EMBED_DIM, GAT_HEADS, d_head, !last, &mut rng)
            })
            .collect();
        let head = match config.task {
            Task::Classify => Head::Classify {
                hidden: Linear::new("cls0", EMBED_DIM, CLASSIFIER_HIDDEN, &mut rng),
                out: Linear::new("cls1", CLASSIFIER_HIDDEN, config.classes, &mut rng),
            },
            Task::Segment => Head::Segment { out: Linear::new("seg", EMBED_DIM, config.classes, &mut rng) },
        };
        Ok(FovNetModel { config, grid_encoder, ov_encoder, iv_encoder, fusion, gat, head })
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |p| n += p.value.len());
        n
    }

    pub fn zero_grad(&mut self) {
        self.visit_mut(&mut |p| p.zero_grad());
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |p| ok &= p.value.is_finite());
        ok
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<U: Real>(&self) -> FovNetModel<U> {
        let mut out = FovNetModel::<U>::new(self.config).expect("config already validated");
        let mut values = Vec::new();
        self.visit(&mut |p| values.push(p.value.cast::<U>()));
        let mut k = 0;
        out.visit_mut(&mut |p| {
            p.value = values[k].clone();
            k += 1;
        });
        out
    }

    /// Rows of the fusion input: encoder outputs then attributes.
    fn fusion_input(&self, batch: &Batch<T>, pin: Option<&ForwardCache<T>>) -> (Vec<T>, [Option<EncoderCache<T>>; 3]) {
        let n = batch.n;
        let width = self.config.features.fusion_width();
        let mut x = vec![T::zero(); n * width];
        let mut caches = [None, None, None];
        let mut col = 0;
        let parts = [
            (&self.grid_encoder, &batch.uv, batch.uv_grid, pin.and_then(|p| p.grid.as_ref())),
            (&self.ov_encoder, &batch.ov, batch.fov_grid, pin.and_then(|p| p.ov.as_ref())),
            (&self.iv_encoder, &batch.iv, batch.fov_grid, pin.and_then(|p| p.iv.as_ref())),
        ];
        for (slot, (enc, input, grid, pin)) in parts.into_iter().enumerate() {
            if let Some(enc) = enc {
                let (e, cache) = enc.forward_pinned(input, grid, pin);
                for i in 0..n {
                    x[i * width + col..i * width + col + EMBED_DIM].copy_from_slice(&e[i * EMBED_DIM..(i + 1) * EMBED_DIM]);
                }
                caches[slot] = Some(cache);
                col += EMBED_DIM;
            }
        }
        if self.config.features.attributes {
            for i in 0..n {
                x[i * width + col..i * width + col + ATTR_DIM].copy_from_slice(&batch.attrs[i * ATTR_DIM..(i + 1) * ATTR_DIM]);
            }
        }
        (x, caches)
    }

    fn check_batch(&self, batch: &Batch<T>) -> Result<(), NnError> {
        let f = self.config.features;
        if f.uses_grid() && batch.uv.len() != batch.n * batch.uv_grid.h * batch.uv_grid.w * UV_CHANNELS {
            return Err(NnError::ShapeMismatch("uv payload".into()));
        }
        if batch.n == 0 {
            return Err(NnError::ShapeMismatch("empty batch".into()));
        }
        Ok(())
    }

    /// Per-face 64-D embeddings before message passing.
    pub fn encode_faces(&self, batch: &Batch<T>) -> Result<Vec<T>, NnError> {
        self.check_batch(batch)?;
        Ok(self.embed(batch, None).0)
    }

    #[allow(clippy::type_complexity)]
    fn embed(&self, batch: &Batch<T>, pin: Option<&ForwardCache<T>>) -> (Vec<T>, Vec<T>, Vec<T>, [Option<EncoderCache<T>>; 3]) {
        let n = batch.n;
        if self.config.features.topology_only {
            let x: Vec<T> = (0..n).map(|i| T::lit(batch.degree(i) as f64)).collect();
            let e = self.fusion[0].forward(&x, n);
            return (e, x, Vec::new(), [None, None, None]);
        }
        let (x, caches) = self.fusion_input(batch, pin);
        let mut hidden = self.fusion[0].forward(&x, n);
        relu_pinned(&mut hidden, pin.map(|p| p.fusion_hidden.as_slice()));
        let e = self.fusion[1].forward(&hidden, n);
        (e, x, hidden, caches)
    }

    /// Logits: graphs × classes when classifying, nodes × classes when segmenting.
    pub fn forward(&self, batch: &Batch<T>) -> Result<(Vec<T>, ForwardCache<T>), NnError> {
        self.forward_pinned(batch, None)
    }

    /// Forward pass that reuses every relu mask, attention-logit branch and
    /// max-pool choice of `pin`. Near the point that produced `pin` it
    /// evaluates the smooth piece whose gradient [`Self::backward`] returns.
    pub fn forward_pinned(&self, batch: &Batch<T>, pin: Option<&ForwardCache<T>>) -> Result<(Vec<T>, ForwardCache<T>), NnError> {
        self.check_batch(batch)?;
        let (emb, fused_in, fusion_hidden, [grid, ov, iv]) = self.embed(batch, pin);
        let mut h = emb;
        let mut gat = Vec::with_capacity(self.gat.len());
        for (l, layer) in self.gat.iter().enumerate() {
            let (y, cache) = layer.forward_pinned(&h, &batch.adjacency, pin.map(|p| &p.gat[l]))?;
            h = y;
            gat.push(cache);
        }
        let mut cache = ForwardCache {
            grid,
            ov,
            iv,
            fused_in,
            fusion_hidden,
            gat,
            nodes: Vec::new(),
            pooled: Vec::new(),
            pool_arg: Vec::new(),
            cls_hidden: Vec::new(),
        };
        let graph_start = &batch.graph_start;
        let logits = self.head_pinned(&h, graph_start, pin, &mut cache);
        cache.nodes = h;
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFiniteLogit("output logits".into()));
        }
        Ok((logits, cache))
    }

    /// Task head on node embeddings (nodes × 64), graphs delimited by
    /// `graph_start` offsets.
    pub fn head_logits(&self, nodes: &[T], graph_start: &[usize]) -> Vec<T> {
        let mut scratch = ForwardCache {
            grid: None,
            ov: None,
            iv: None,
            fused_in: Vec::new(),
            fusion_hidden: Vec::new(),
            gat: Vec::new(),
            nodes: Vec::new(),
            pooled: Vec::new(),
            pool_arg: Vec::new(),
            cls_hidden: Vec::new(),
        };
        self.head_pinned(nodes, graph_start, None, &mut scratch)
    }

    fn head_pinned(&self, h: &[T], graph_start: &[usize], pin: Option<&ForwardCache<T>>, cache: &mut ForwardCache<T>) -> Vec<T> {
        match &self.head {
            Head::Classify { hidden, out } => {
                let g = graph_start.len() - 1;
                let mut pooled = vec![T::zero(); g * EMBED_DIM];
                let mut arg = vec![0usize; g * EMBED_DIM];
                for k in 0..g {
                    for c in 0..EMBED_DIM {
                        let mut best = graph_start[k];
                        for i in graph_start[k]..graph_start[k + 1] {
                            if h[i * EMBED_DIM + c] > h[best * EMBED_DIM + c] {
                                best = i;
                            }
                        }
                        if let Some(p) = pin {
                            best = p.pool_arg[k * EMBED_DIM + c];
                        }
                        pooled[k * EMBED_DIM + c] = h[best * EMBED_DIM + c];
                        arg[k * EMBED_DIM + c] = best;
                    }
                }
                let mut z = hidden.forward(&pooled, g);
                relu_pinned(&mut z, pin.map(|p| p.cls_hidden.as_slice()));
                let logits = out.forward(&z, g);
                cache.pooled = pooled;
                cache.pool_arg = arg;
                cache.cls_hidden = z;
                logits
            }
            Head::Segment { out } => out.forward(h, *graph_start.last().unwrap()),
        }
    }

    /// Accumulates `dL/dθ` for the logits gradient `dlogits`.
    pub fn backward(&mut self, batch: &Batch<T>, cache: &ForwardCache<T>, dlogits: &[T]) {
        let n = batch.n;
        let mut dh = match &mut self.head {
            Head::Classify { hidden, out } => {
                let g = batch.graphs();
                let mut dz = out.backward(&cache.cls_hidden, dlogits, g, true).unwrap();
                relu_backward(&cache.cls_hidden, &mut dz);
                let dpooled = hidden.backward(&cache.pooled, &dz, g, true).unwrap();
                let mut dh = vec![T::zero(); n * EMBED_DIM];
                for (k, &d) in dpooled.iter().enumerate() {
                    let c = k % EMBED_DIM;
                    dh[cache.pool_arg[k] * EMBED_DIM + c] += d;
                }
                dh
            }
            Head::Segment { out } => out.backward(&cache.nodes, dlogits, n, true).unwrap(),
        };
        for l in (0..self.gat.len()).rev() {
            dh = self.gat[l].backward(&batch.adjacency, &cache.gat[l], &dh);
        }
        if self.config.features.topology_only {
            self.fusion[0].backward(&cache.fused_in, &dh, n, false);
            return;
        }
        let mut dhid = self.fusion[1].backward(&cache.fusion_hidden, &dh, n, true).unwrap();
        relu_backward(&cache.fusion_hidden, &mut dhid);
        let any_encoder = self.config.features.uses_grid() || self.config.features.uses_fov();
        let Some(dx) = self.fusion[0].backward(&cache.fused_in, &dhid, n, any_encoder) else { return };
        let width = self.config.features.fusion_width();
        let mut col = 0;
        let encoders = [
            (&mut self.grid_encoder, &cache.grid),
            (&mut self.ov_encoder, &cache.ov),
            (&mut self.iv_encoder, &cache.iv),
        ];
        for (enc, c) in encoders {
            if let (Some(enc), Some(c)) = (enc, c) {
                let mut de = Vec::with_capacity(n * EMBED_DIM);
                for i in 0..n {
                    de.extend_from_slice(&dx[i * width + col..i * width + col + EMBED_DIM]);
                }
                enc.backward(c, &de);
                col += EMBED_DIM;
            }
        }
    }
}

impl<T: Real> Module<T> for FovNetModel<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        for e in [&self.grid_encoder, &self.ov_encoder, &self.iv_encoder].into_iter().flatten() {
            e.visit(f);
        }
        self.fusion.iter().for_each(|l| l.visit(f));
        self.gat.iter().for_each(|l| l.visit(f));
        match &self.head {
            Head::Classify { hidden, out } => {
                hidden.visit(f);
                out.visit(f);
            }
            Head::Segment { out } => out.visit(f),
        }
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        for e in [&mut self.grid_encoder, &mut self.ov_encoder, &mut self.iv_encoder].into_iter().flatten() {
            e.visit_mut(f);
        }
        self.fusion.iter_mut().for_each(|l| l.visit_mut(f));
        self.gat.iter_mut().for_each(|l| l.visit_mut(f));
        match &mut self.head {
            Head::Classify { hidden, out } => {
                hidden.visit_mut(f);
                out.visit_mut(f);
            }
            Head::Segment { out } => out.visit_mut(f),
        }
    }
}
