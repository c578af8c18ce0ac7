use rand::Rng;

use crate::real::{gemm, Op};
use crate::{NnError, Real, Tensor};

/// A trainable tensor together with its accumulated gradient.
#[derive(Clone, Debug)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Vec<T>,
}

impl<T: Real> Param<T> {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        let value = Tensor::zeros(shape);
        let grad = vec![T::zero(); value.len()];
        Param { name: name.into(), value, grad }
    }

    /// Uniform initialization on `[-bound, bound]`.
    pub fn uniform(name: impl Into<String>, shape: &[usize], bound: f64, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(name, shape);
        for x in &mut p.value.data {
            *x = T::lit(rng.gen_range(-bound..=bound));
        }
        p
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = T::zero());
    }
}

/// Fixed-order access to every parameter of a module.
pub trait Module<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>));
}

/// Affine map `y = x·W + b` on row vectors, `W` stored in×out.
#[derive(Clone, Debug)]
pub struct Linear<T> {
    pub w: Param<T>,
    pub b: Param<T>,
}

impl<T: Real> Linear<T> {
    /// He-uniform weights, zero bias.
    pub fn new(name: &str, d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / d_in.max(1) as f64).sqrt();
        Linear {
            w: Param::uniform(format!("{name}.w"), &[d_in, d_out], bound, rng),
            b: Param::zeros(format!("{name}.b"), &[d_out]),
        }
    }

    pub fn d_in(&self) -> usize {
        self.w.value.shape[0]
    }

    pub fn d_out(&self) -> usize {
        self.w.value.shape[1]
    }

    pub fn forward(&self, x: &[T], rows: usize) -> Vec<T> {
        let (di, d_out) = (self.d_in(), self.d_out());
        debug_assert_eq!(x.len(), rows * di);
        let mut y: Vec<T> = Vec::with_capacity(rows * d_out);
        for _ in 0..rows {
            y.extend_from_slice(&self.b.value.data);
        }
        gemm(rows, di, d_out, x, Op::N, &self.w.value.data, Op::N, T::one(), &mut y);
        y
    }

    /// Accumulates parameter gradients and returns `dL/dx` when asked.
    pub fn backward(&mut self, x: &[T], dy: &[T], rows: usize, want_dx: bool) -> Option<Vec<T>> {
        let (di, d_out) = (self.d_in(), self.d_out());
        gemm(di, rows, d_out, x, Op::T, dy, Op::N, T::one(), &mut self.w.grad);
        for r in 0..rows {
            for (g, &d) in self.b.grad.iter_mut().zip(&dy[r * d_out..(r + 1) * d_out]) {
                *g += d;
            }
        }
        want_dx.then(|| {
            let mut dx = vec![T::zero(); rows * di];
            gemm(rows, d_out, di, dy, Op::N, &self.w.value.data, Op::T, T::zero(), &mut dx);
            dx
        })
    }
}

impl<T: Real> Module<T> for Linear<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        f(&self.w);
        f(&self.b);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        f(&mut self.w);
        f(&mut self.b);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadMode {
    Zero,
    /// Wraps the W (azimuth) axis, zero-pads the H (elevation) axis.
    CircularAzimuth,
}

/// Spatial extent of a batch of NHWC feature maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub n: usize,
    pub h: usize,
    pub w: usize,
}

impl Grid {
    pub fn pixels(&self) -> usize {
        self.n * self.h * self.w
    }
}

/// Source column for tap offset `dx` of column `x`, or `None` in the zero pad.
fn tap_column(x: usize, dx: isize, w: usize, pad: PadMode) -> Option<usize> {
    let xx = x as isize + dx;
    match pad {
        PadMode::Zero => (0..w as isize).contains(&xx).then_some(xx as usize),
        PadMode::CircularAzimuth => Some(xx.rem_euclid(w as isize) as usize),
    }
}

/// Patch matrix of a 3×3 same-padding convolution: one row per output pixel,
/// columns ordered (ky, kx, c).
pub fn im2col<T: Real>(x: &[T], g: Grid, c: usize, pad: PadMode) -> Vec<T> {
    let k = 9 * c;
    let mut cols = vec![T::zero(); g.pixels() * k];
    for n in 0..g.n {
        for y in 0..g.h {
            for xc in 0..g.w {
                let row = ((n * g.h + y) * g.w + xc) * k;
                for ky in 0..3 {
                    let yy = y as isize + ky as isize - 1;
                    if yy < 0 || yy >= g.h as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let Some(xx) = tap_column(xc, kx as isize - 1, g.w, pad) else { continue };
                        let src = ((n * g.h + yy as usize) * g.w + xx) * c;
                        let dst = row + (ky * 3 + kx) * c;
                        cols[dst..dst + c].copy_from_slice(&x[src..src + c]);
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`].
pub fn col2im<T: Real>(cols: &[T], g: Grid, c: usize, pad: PadMode) -> Vec<T> {
    let k = 9 * c;
    let mut x = vec![T::zero(); g.pixels() * c];
    for n in 0..g.n {
        for y in 0..g.h {
            for xc in 0..g.w {
                let row = ((n * g.h + y) * g.w + xc) * k;
                for ky in 0..3 {
                    let yy = y as isize + ky as isize - 1;
                    if yy < 0 || yy >= g.h as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let Some(xx) = tap_column(xc, kx as isize - 1, g.w, pad) else { continue };
                        let dst = ((n * g.h + yy as usize) * g.w + xx) * c;
                        let src = row + (ky * 3 + kx) * c;
                        for (d, &s) in x[dst..dst + c].iter_mut().zip(&cols[src..src + c]) {
                            *d += s;
                        }
                    }
                }
            }
        }
    }
    x
}

/// 3×3 stride-1 convolution (cross-correlation) with spatial size preserved.
/// The kernel is stored 3×3×C_in×C_out.
#[derive(Clone, Debug)]
pub struct Conv2d<T> {
    pub w: Param<T>,
    pub b: Param<T>,
    pub pad: PadMode,
}

/// Values a convolution keeps for its backward pass.
#[derive(Clone, Debug)]
pub struct ConvCache<T> {
    pub cols: Vec<T>,
    pub grid: Grid,
}

impl<T: Real> Conv2d<T> {
    pub fn new(name: &str, c_in: usize, c_out: usize, pad: PadMode, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / (9 * c_in) as f64).sqrt();
        Conv2d {
            w: Param::uniform(format!("{name}.w"), &[3, 3, c_in, c_out], bound, rng),
            b: Param::zeros(format!("{name}.b"), &[c_out]),
            pad,
        }
    }

    pub fn c_in(&self) -> usize {
        self.w.value.shape[2]
    }

    pub fn c_out(&self) -> usize {
        self.w.value.shape[3]
    }

    pub fn forward(&self, x: &[T], grid: Grid) -> (Vec<T>, ConvCache<T>) {
        let (ci, co) = (self.c_in(), self.c_out());
        let cols = im2col(x, grid, ci, self.pad);
        let rows = grid.pixels();
        let mut y: Vec<T> = Vec::with_capacity(rows * co);
        for _ in 0..rows {
            y.extend_from_slice(&self.b.value.data);
        }
        gemm(rows, 9 * ci, co, &cols, Op::N, &self.w.value.data, Op::N, T::one(), &mut y);
        (y, ConvCache { cols, grid })
    }

    pub fn backward(&mut self, cache: &ConvCache<T>, dy: &[T], want_dx: bool) -> Option<Vec<T>> {
        let (ci, co) = (self.c_in(), self.c_out());
        let rows = cache.grid.pixels();
        gemm(9 * ci, rows, co, &cache.cols, Op::T, dy, Op::N, T::one(), &mut self.w.grad);
        for r in 0..rows {
            for (g, &d) in self.b.grad.iter_mut().zip(&dy[r * co..(r + 1) * co]) {
                *g += d;
            }
        }
        want_dx.then(|| {
            let mut dcols = vec![T::zero(); rows * 9 * ci];
            gemm(rows, co, 9 * ci, dy, Op::N, &self.w.value.data, Op::T, T::zero(), &mut dcols);
            col2im(&dcols, cache.grid, ci, self.pad)
        })
    }
}

impl<T: Real> Module<T> for Conv2d<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        f(&self.w);
        f(&self.b);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        f(&mut self.w);
        f(&mut self.b);
    }
}

/// Single-image convolution on an H×W×C_in tensor with a 3×3×C_in×C_out kernel.
pub fn conv2d<T: Real>(input: &Tensor<T>, kernel: &Tensor<T>, pad: PadMode) -> Result<Tensor<T>, NnError> {
    let [h, w, ci] = input.shape[..] else {
        return Err(NnError::ShapeMismatch(format!("conv input {:?} is not H×W×C", input.shape)));
    };
    let [3, 3, kc, co] = kernel.shape[..] else {
        return Err(NnError::ShapeMismatch(format!("conv kernel {:?} is not 3×3×C_in×C_out", kernel.shape)));
    };
    if kc != ci {
        return Err(NnError::ShapeMismatch(format!("kernel expects {kc} input channels, input has {ci}")));
    }
    let conv = Conv2d { w: Param { name: "k".into(), grad: vec![], value: kernel.clone() }, b: Param::zeros("b", &[co]), pad };
    let (y, _) = conv.forward(&input.data, Grid { n: 1, h, w });
    Tensor::new(&[h, w, co], y)
}

pub fn relu<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

pub fn leaky_relu<T: Real>(x: T, slope: T) -> T {
    if x > T::zero() {
        x
    } else {
        slope * x
    }
}

pub fn relu_in_place<T: Real>(x: &mut [T]) {
    x.iter_mut().for_each(|v| *v = relu(*v));
}

/// Relu whose mask comes from the reference output `pin` when given.
pub fn relu_pinned<T: Real>(x: &mut [T], pin: Option<&[T]>) {
    match pin {
        None => relu_in_place(x),
        Some(r) => x.iter_mut().zip(r).for_each(|(v, &m)| {
            if m <= T::zero() {
                *v = T::zero()
            }
        }),
    }
}

/// Masks `dy` where the relu output `y` is zero (subgradient 0 at the kink).
pub fn relu_backward<T: Real>(y: &[T], dy: &mut [T]) {
    for (d, &v) in dy.iter_mut().zip(y) {
        if v <= T::zero() {
            *d = T::zero();
        }
    }
}

/// Mean over the `pixels` rows of each of `n` maps: (n·pixels)×c → n×c.
pub fn global_avg_pool<T: Real>(x: &[T], n: usize, pixels: usize, c: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * c];
    let scale = T::one() / T::lit(pixels as f64);
    for i in 0..n {
        let o = &mut out[i * c..(i + 1) * c];
        for p in 0..pixels {
            let row = &x[(i * pixels + p) * c..(i * pixels + p + 1) * c];
            for (a, &b) in o.iter_mut().zip(row) {
                *a += b;
            }
        }
        o.iter_mut().for_each(|v| *v *= scale);
    }
    out
}

pub fn global_avg_pool_backward<T: Real>(dy: &[T], n: usize, pixels: usize, c: usize) -> Vec<T> {
    let scale = T::one() / T::lit(pixels as f64);
    let mut dx = Vec::with_capacity(n * pixels * c);
    for i in 0..n {
        let row: Vec<T> = dy[i * c..(i + 1) * c].iter().map(|&d| d * scale).collect();
        for _ in 0..pixels {
            dx.extend_from_slice(&row);
        }
    }
    dx
}

/// Global average pooling of one H×W×C tensor.
pub fn gap<T: Real>(input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let [h, w, c] = input.shape[..] else {
        return Err(NnError::ShapeMismatch(format!("pool input {:?} is not H×W×C", input.shape)));
    };
    Tensor::new(&[c], global_avg_pool(&input.data, 1, h * w, c))
}

/// `x·W + b` for an N×d_in batch.
pub fn linear<T: Real>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let [rows, di] = x.shape[..] else {
        return Err(NnError::ShapeMismatch(format!("linear input {:?} is not N×d", x.shape)));
    };
    if w.shape != [di, b.len()] {
        return Err(NnError::ShapeMismatch(format!("weight {:?} does not map {di} to {}", w.shape, b.len())));
    }
    let layer = Linear {
        w: Param { name: "w".into(), grad: vec![], value: w.clone() },
        b: Param { name: "b".into(), grad: vec![], value: b.clone() },
    };
    Tensor::new(&[rows, b.len()], layer.forward(&x.data, rows))
}
