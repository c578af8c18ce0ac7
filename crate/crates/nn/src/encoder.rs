use rand::Rng;

use crate::layers::{global_avg_pool, global_avg_pool_backward, relu_backward, relu_pinned, Conv2d, ConvCache, Grid, Linear, Module, PadMode, Param};
use crate::Real;

/// Stack of relu convolutions, global average pooling and a linear projection.
#[derive(Clone, Debug)]
pub struct GridEncoder<T> {
    pub convs: Vec<Conv2d<T>>,
    pub proj: Linear<T>,
}

#[derive(Clone, Debug)]
pub struct EncoderCache<T> {
    convs: Vec<ConvCache<T>>,
    /// Post-relu output of every convolution.
    acts: Vec<Vec<T>>,
    pooled: Vec<T>,
    grid: Grid,
}

impl<T: Real> GridEncoder<T> {
    /// `channels` lists the input width followed by every conv width.
    pub fn new(name: &str, channels: &[usize], d_out: usize, pad: PadMode, rng: &mut impl Rng) -> Self {
        let convs = channels
            .windows(2)
            .enumerate()
            .map(|(i, c)| Conv2d::new(&format!("{name}.conv{i}"), c[0], c[1], pad, rng))
            .collect();
        let proj = Linear::new(&format!("{name}.proj"), *channels.last().unwrap(), d_out, rng);
        GridEncoder { convs, proj }
    }

    pub fn c_in(&self) -> usize {
        self.convs[0].c_in()
    }

    pub fn d_out(&self) -> usize {
        self.proj.d_out()
    }

    /// Encodes `grid.n` maps of `grid.h × grid.w × c_in` into `grid.n × d_out`.
    pub fn forward(&self, x: &[T], grid: Grid) -> (Vec<T>, EncoderCache<T>) {
        self.forward_pinned(x, grid, None)
    }

    /// Forward pass whose relu masks are copied from `pin` when given.
    pub fn forward_pinned(&self, x: &[T], grid: Grid, pin: Option<&EncoderCache<T>>) -> (Vec<T>, EncoderCache<T>) {
        let mut caches = Vec::with_capacity(self.convs.len());
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.convs.len());
        for (i, conv) in self.convs.iter().enumerate() {
            let input = acts.last().map_or(x, |a| a.as_slice());
            let (mut y, cache) = conv.forward(input, grid);
            relu_pinned(&mut y, pin.map(|p| p.acts[i].as_slice()));
            caches.push(cache);
            acts.push(y);
        }
        let c = self.convs.last().unwrap().c_out();
        let pooled = global_avg_pool(acts.last().unwrap(), grid.n, grid.h * grid.w, c);
        let out = self.proj.forward(&pooled, grid.n);
        (out, EncoderCache { convs: caches, acts, pooled, grid })
    }

    pub fn backward(&mut self, cache: &EncoderCache<T>, dy: &[T]) {
        let grid = cache.grid;
        let dpooled = self.proj.backward(&cache.pooled, dy, grid.n, true).unwrap();
        let c = self.convs.last().unwrap().c_out();
        let mut d = global_avg_pool_backward(&dpooled, grid.n, grid.h * grid.w, c);
        for i in (0..self.convs.len()).rev() {
            relu_backward(&cache.acts[i], &mut d);
            match self.convs[i].backward(&cache.convs[i], &d, i > 0) {
                Some(dx) => d = dx,
                None => break,
            }
        }
    }
}

impl<T: Real> Module<T> for GridEncoder<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        self.convs.iter().for_each(|c| c.visit(f));
        self.proj.visit(f);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        self.convs.iter_mut().for_each(|c| c.visit_mut(f));
        self.proj.visit_mut(f);
    }
}
