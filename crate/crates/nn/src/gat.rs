use rand::Rng;

use crate::layers::{leaky_relu, relu_backward, relu_pinned, Module, Param};
use crate::real::{gemm, Op};
use crate::{NnError, Real};

pub const ATTENTION_SLOPE: f64 = 0.2;

/// Neighbor lists with a self-loop first in every row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    pub start: Vec<usize>,
    pub nbrs: Vec<usize>,
}

impl Adjacency {
    /// Undirected adjacency of `n` nodes. Self-edges and duplicates are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, NnError> {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(NnError::ShapeMismatch(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if a != b {
                lists[a].push(b);
                lists[b].push(a);
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut nbrs = Vec::new();
        for (i, mut l) in lists.into_iter().enumerate() {
            l.sort_unstable();
            l.dedup();
            start.push(nbrs.len());
            nbrs.push(i);
            nbrs.extend(l);
        }
        start.push(nbrs.len());
        Ok(Adjacency { start, nbrs })
    }

    pub fn len(&self) -> usize {
        self.start.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Neighbors of `i` including `i` itself.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.nbrs[self.start[i]..self.start[i + 1]]
    }
}

/// Multi-head graph attention with relu output.
#[derive(Clone, Debug)]
pub struct GatLayer<T> {
    /// d_in × (heads·d_head).
    pub w: Param<T>,
    /// heads × d_head, applied to the receiving node.
    pub a_src: Param<T>,
    /// heads × d_head, applied to the neighbor.
    pub a_dst: Param<T>,
    pub heads: usize,
    pub d_head: usize,
    /// Concatenate heads when true, average them otherwise.
    pub concat: bool,
}

#[derive(Clone, Debug)]
pub struct GatCache<T> {
    h: Vec<T>,
    z: Vec<T>,
    /// Pre-activation attention logits, heads × nnz.
    s: Vec<T>,
    alpha: Vec<T>,
    y: Vec<T>,
    n: usize,
}

impl<T: Real> GatLayer<T> {
    pub fn new(name: &str, d_in: usize, heads: usize, d_head: usize, concat: bool, rng: &mut impl Rng) -> Self {
        let wb = (6.0 / (d_in + d_head) as f64).sqrt();
        let ab = (6.0 / (2 * d_head + 1) as f64).sqrt();
        GatLayer {
            w: Param::uniform(format!("{name}.w"), &[d_in, heads * d_head], wb, rng),
            a_src: Param::uniform(format!("{name}.a_src"), &[heads, d_head], ab, rng),
            a_dst: Param::uniform(format!("{name}.a_dst"), &[heads, d_head], ab, rng),
            heads,
            d_head,
            concat,
        }
    }

    pub fn d_in(&self) -> usize {
        self.w.value.shape[0]
    }

    pub fn d_out(&self) -> usize {
        if self.concat {
            self.heads * self.d_head
        } else {
            self.d_head
        }
    }

    pub fn forward(&self, h: &[T], adj: &Adjacency) -> Result<(Vec<T>, GatCache<T>), NnError> {
        self.forward_pinned(h, adj, None)
    }

    /// Forward pass whose leaky-relu and relu branches are copied from `pin`.
    pub fn forward_pinned(&self, h: &[T], adj: &Adjacency, pin: Option<&GatCache<T>>) -> Result<(Vec<T>, GatCache<T>), NnError> {
        let n = adj.len();
        let (heads, dh, di) = (self.heads, self.d_head, self.d_in());
        if h.len() != n * di {
            return Err(NnError::ShapeMismatch(format!("gat input has {} values, expected {n}×{di}", h.len())));
        }
        let wd = heads * dh;
        let mut z = vec![T::zero(); n * wd];
        gemm(n, di, wd, h, Op::N, &self.w.value.data, Op::N, T::zero(), &mut z);
        let dot = |a: &[T], k: usize, i: usize| -> T {
            a[k * dh..(k + 1) * dh].iter().zip(&z[i * wd + k * dh..i * wd + (k + 1) * dh]).map(|(&x, &y)| x * y).sum()
        };
        let nnz = adj.nbrs.len();
        let mut s = vec![T::zero(); heads * nnz];
        let mut alpha = vec![T::zero(); heads * nnz];
        let d_out = self.d_out();
        let mut y = vec![T::zero(); n * d_out];
        let slope = T::lit(ATTENTION_SLOPE);
        let head_scale = if self.concat { T::one() } else { T::one() / T::lit(heads as f64) };
        for k in 0..heads {
            let p: Vec<T> = (0..n).map(|i| dot(&self.a_src.value.data, k, i)).collect();
            let q: Vec<T> = (0..n).map(|j| dot(&self.a_dst.value.data, k, j)).collect();
            for i in 0..n {
                let range = adj.start[i]..adj.start[i + 1];
                let mut m = T::neg_infinity();
                for e in range.clone() {
                    let v = p[i] + q[adj.nbrs[e]];
                    let logit = match pin {
                        Some(p) if p.s[k * nnz + e] <= T::zero() => v * slope,
                        Some(_) => v,
                        None => leaky_relu(v, slope),
                    };
                    if !logit.is_finite() {
                        return Err(NnError::NonFiniteLogit(format!("attention logit at node {i}, head {k}")));
                    }
                    s[k * nnz + e] = v;
                    alpha[k * nnz + e] = logit;
                    m = m.max(logit);
                }
                let mut total = T::zero();
                for e in range.clone() {
                    let a = (alpha[k * nnz + e] - m).exp();
                    alpha[k * nnz + e] = a;
                    total += a;
                }
                let off = if self.concat { k * dh } else { 0 };
                for e in range {
                    let a = alpha[k * nnz + e] / total;
                    alpha[k * nnz + e] = a;
                    let j = adj.nbrs[e];
                    let zj = &z[j * wd + k * dh..j * wd + (k + 1) * dh];
                    for (o, &v) in y[i * d_out + off..i * d_out + off + dh].iter_mut().zip(zj) {
                        *o += a * v * head_scale;
                    }
                }
            }
        }
        relu_pinned(&mut y, pin.map(|p| p.y.as_slice()));
        let cache = GatCache { h: h.to_vec(), z, s, alpha, y: y.clone(), n };
        Ok((y, cache))
    }

    /// Accumulates parameter gradients and returns `dL/dh`.
    pub fn backward(&mut self, adj: &Adjacency, cache: &GatCache<T>, dy: &[T]) -> Vec<T> {
        let n = cache.n;
        let (heads, dh, di) = (self.heads, self.d_head, self.d_in());
        let wd = heads * dh;
        let d_out = self.d_out();
        let nnz = adj.nbrs.len();
        let mut g = dy.to_vec();
        relu_backward(&cache.y, &mut g);
        let head_scale = if self.concat { T::one() } else { T::one() / T::lit(heads as f64) };
        let slope = T::lit(ATTENTION_SLOPE);
        let z = &cache.z;
        let mut dz = vec![T::zero(); n * wd];
        let mut dalpha = vec![T::zero(); nnz];
        for k in 0..heads {
            let off = if self.concat { k * dh } else { 0 };
            let mut dp = vec![T::zero(); n];
            let mut dq = vec![T::zero(); n];
            for i in 0..n {
                let gi: Vec<T> = g[i * d_out + off..i * d_out + off + dh].iter().map(|&v| v * head_scale).collect();
                let range = adj.start[i]..adj.start[i + 1];
                let mut weighted = T::zero();
                for e in range.clone() {
                    let j = adj.nbrs[e];
                    let a = cache.alpha[k * nnz + e];
                    let zj = &z[j * wd + k * dh..j * wd + (k + 1) * dh];
                    let da: T = gi.iter().zip(zj).map(|(&x, &y)| x * y).sum();
                    dalpha[e] = da;
                    weighted += a * da;
                    for (d, &v) in dz[j * wd + k * dh..j * wd + (k + 1) * dh].iter_mut().zip(&gi) {
                        *d += a * v;
                    }
                }
                for e in range {
                    let a = cache.alpha[k * nnz + e];
                    let de = a * (dalpha[e] - weighted);
                    let ds = if cache.s[k * nnz + e] > T::zero() { de } else { de * slope };
                    dp[i] += ds;
                    dq[adj.nbrs[e]] += ds;
                }
            }
            for i in 0..n {
                let zi = i * wd + k * dh;
                for c in 0..dh {
                    self.a_src.grad[k * dh + c] += dp[i] * z[zi + c];
                    self.a_dst.grad[k * dh + c] += dq[i] * z[zi + c];
                    dz[zi + c] += dp[i] * self.a_src.value.data[k * dh + c] + dq[i] * self.a_dst.value.data[k * dh + c];
                }
            }
        }
        gemm(di, n, wd, &cache.h, Op::T, &dz, Op::N, T::one(), &mut self.w.grad);
        let mut dh_in = vec![T::zero(); n * di];
        gemm(n, wd, di, &dz, Op::N, &self.w.value.data, Op::T, T::zero(), &mut dh_in);
        dh_in
    }
}

impl<T: Real> Module<T> for GatLayer<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        f(&self.w);
        f(&self.a_src);
        f(&self.a_dst);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        f(&mut self.w);
        f(&mut self.a_src);
        f(&mut self.a_dst);
    }
}
