//! Central-difference checks of the hand-written adjoints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::GridEncoder;
use crate::layers::{Conv2d, Grid, Linear, Module};
use crate::loss::{cross_entropy, cross_entropy_mean};
use crate::model::{Batch, FeatureConfig, FovNetModel, GraphInput, ModelConfig, Task};
use crate::{Adjacency, GatLayer, PadMode};

/// Difference step.
pub const STEP: f64 = 1e-3;
/// Entries sampled per parameter tensor.
pub const SAMPLES_PER_TENSOR: usize = 24;

/// Worst relative error of one check, over every tensor it covers.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub rel_error: f64,
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn nudge<M: Module<f64>>(m: &mut M, which: usize, idx: usize, delta: f64) {
    let mut k = 0;
    m.visit_mut(&mut |p| {
        if k == which {
            p.value.data[idx] += delta;
        }
        k += 1;
    });
}

fn rel(diff2: f64, a2: f64, b2: f64) -> f64 {
    let scale = a2.sqrt().max(b2.sqrt());
    if scale < 1e-9 {
        0.0
    } else {
        diff2.sqrt() / scale
    }
}

/// Relative error `‖g − fd‖ / max(‖g‖, ‖fd‖)` per parameter tensor, where
/// `grads` fills `Param::grad` and `fd` differentiates `loss` on sampled entries.
pub fn param_errors<M: Module<f64> + Clone>(
    model: &M,
    loss: impl Fn(&M) -> f64,
    grads: impl Fn(&mut M),
    seed: u64,
) -> Vec<(String, f64)> {
    let mut analytic = model.clone();
    analytic.visit_mut(&mut |p| p.zero_grad());
    grads(&mut analytic);
    let mut tensors = Vec::new();
    analytic.visit(&mut |p| tensors.push((p.name.clone(), p.grad.clone())));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (which, (name, g)) in tensors.into_iter().enumerate() {
        let picks: Vec<usize> = if g.len() <= SAMPLES_PER_TENSOR {
            (0..g.len()).collect()
        } else {
            (0..SAMPLES_PER_TENSOR).map(|_| rng.gen_range(0..g.len())).collect()
        };
        let (mut diff, mut na, mut nf) = (0.0, 0.0, 0.0);
        for i in picks {
            let mut plus = model.clone();
            nudge(&mut plus, which, i, STEP);
            let mut minus = model.clone();
            nudge(&mut minus, which, i, -STEP);
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * STEP);
            diff += (fd - g[i]).powi(2);
            na += g[i] * g[i];
            nf += fd * fd;
        }
        out.push((name, rel(diff, na, nf)));
    }
    out
}

/// Relative error of an input gradient `dx` of `f` at `x`.
pub fn input_error(x: &[f64], dx: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
    let (mut diff, mut na, mut nf) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let mut p = x.to_vec();
        p[i] += STEP;
        let mut m = x.to_vec();
        m[i] -= STEP;
        let fd = (f(&p) - f(&m)) / (2.0 * STEP);
        diff += (fd - dx[i]).powi(2);
        na += dx[i] * dx[i];
        nf += fd * fd;
    }
    rel(diff, na, nf)
}

fn worst(name: String, errors: impl IntoIterator<Item = f64>) -> CheckResult {
    CheckResult { name, rel_error: errors.into_iter().fold(0.0, f64::max) }
}

fn linear_check(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut layer = Linear::<f64>::new("linear", 5, 4, rng);
    layer.b.value.data = rand_vec(rng, 4);
    let x = rand_vec(rng, 3 * 5);
    let r = rand_vec(rng, 3 * 4);
    let mut e: Vec<f64> = param_errors(&layer, |l| dot(&l.forward(&x, 3), &r), |l| {
        l.backward(&x, &r, 3, false);
    }, rng.gen())
    .into_iter()
    .map(|p| p.1)
    .collect();
    let dx = layer.clone().backward(&x, &r, 3, true).unwrap();
    e.push(input_error(&x, &dx, |x| dot(&layer.forward(x, 3), &r)));
    worst("linear".into(), e)
}

fn conv_check(rng: &mut ChaCha8Rng, pad: PadMode) -> CheckResult {
    let mut e = Vec::new();
    for (h, w) in [(3, 4), (2, 2), (1, 1)] {
        let grid = Grid { n: 2, h, w };
        let mut conv = Conv2d::<f64>::new("conv", 2, 3, pad, rng);
        conv.b.value.data = rand_vec(rng, 3);
        let x = rand_vec(rng, grid.pixels() * 2);
        let r = rand_vec(rng, grid.pixels() * 3);
        e.extend(
            param_errors(&conv, |c| dot(&c.forward(&x, grid).0, &r), |c| {
                let (_, cache) = c.forward(&x, grid);
                c.backward(&cache, &r, false);
            }, rng.gen())
            .into_iter()
            .map(|p| p.1),
        );
        let (_, cache) = conv.forward(&x, grid);
        let dx = conv.clone().backward(&cache, &r, true).unwrap();
        e.push(input_error(&x, &dx, |x| dot(&conv.forward(x, grid).0, &r)));
    }
    worst(format!("conv2d {pad:?}"), e)
}

fn encoder_check(rng: &mut ChaCha8Rng, pad: PadMode, channels: &[usize]) -> CheckResult {
    let enc = GridEncoder::<f64>::new("encoder", channels, 8, pad, rng);
    let grid = Grid { n: 3, h: 2, w: 4 };
    let x = rand_vec(rng, grid.pixels() * channels[0]);
    let r = rand_vec(rng, 3 * 8);
    let (_, pin) = enc.forward(&x, grid);
    let e = param_errors(&enc, |e| dot(&e.forward_pinned(&x, grid, Some(&pin)).0, &r), |e| {
        let (_, cache) = e.forward(&x, grid);
        e.backward(&cache, &r);
    }, rng.gen());
    worst(format!("encoder {pad:?} (conv, relu, pool, linear)"), e.into_iter().map(|p| p.1))
}

fn gat_check(rng: &mut ChaCha8Rng, concat: bool) -> CheckResult {
    let adj = Adjacency::from_edges(5, &[(0, 1), (1, 2), (2, 3), (1, 3), (3, 4)]).unwrap();
    let layer = GatLayer::<f64>::new("gat", 6, 3, 4, concat, rng);
    let x = rand_vec(rng, 5 * 6);
    let r = rand_vec(rng, 5 * layer.d_out());
    let (_, pin) = layer.forward(&x, &adj).unwrap();
    let f = |g: &GatLayer<f64>, x: &[f64]| dot(&g.forward_pinned(x, &adj, Some(&pin)).unwrap().0, &r);
    let mut e: Vec<f64> = param_errors(&layer, |g| f(g, &x), |g| {
        let (_, cache) = g.forward(&x, &adj).unwrap();
        g.backward(&adj, &cache, &r);
    }, rng.gen())
    .into_iter()
    .map(|p| p.1)
    .collect();
    let dx = layer.clone().backward(&adj, &pin, &r);
    e.push(input_error(&x, &dx, |x| f(&layer, x)));
    worst(format!("gat {}", if concat { "concat" } else { "mean" }), e)
}

fn cross_entropy_check(rng: &mut ChaCha8Rng) -> CheckResult {
    let z = rand_vec(rng, 5);
    let (_, g) = cross_entropy(&z, 3);
    worst("cross_entropy".into(), [input_error(&z, &g, |z| cross_entropy(z, 3).0)])
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, edges: Vec<(usize, usize)>, class: usize, labels: Vec<usize>) -> GraphInput<f64> {
    let (uv_h, uv_w, fov_h, fov_w) = (3, 3, 2, 4);
    GraphInput {
        n,
        uv: rand_vec(rng, n * uv_h * uv_w * 7),
        uv_h,
        uv_w,
        ov: rand_vec(rng, n * fov_h * fov_w * 3),
        iv: rand_vec(rng, n * fov_h * fov_w * 3),
        fov_h,
        fov_w,
        attrs: rand_vec(rng, n * 7),
        edges,
        class,
        node_labels: labels,
    }
}

/// Whole-model check on a batch of a 3-node and a 2-node graph. Differences
/// are taken on the smooth piece containing the unperturbed parameters.
pub fn model_check(task: Task, features: FeatureConfig, seed: u64) -> Vec<(String, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graphs = [
        random_graph(&mut rng, 3, vec![(0, 1), (1, 2)], 1, vec![0, 2, 1]),
        random_graph(&mut rng, 2, vec![(0, 1)], 2, vec![1, 1]),
    ];
    let refs: Vec<&GraphInput<f64>> = graphs.iter().collect();
    let batch = Batch::new(&refs).unwrap();
    let model = FovNetModel::<f64>::new(ModelConfig { task, classes: 3, features, seed }).unwrap();
    let targets = match task {
        Task::Classify => batch.classes.clone(),
        Task::Segment => batch.node_labels.clone(),
    };
    let (_, pin) = model.forward(&batch).unwrap();
    let loss = |m: &FovNetModel<f64>| cross_entropy_mean(&m.forward_pinned(&batch, Some(&pin)).unwrap().0, 3, &targets).0;
    param_errors(&model, loss, |m| {
        let (logits, cache) = m.forward(&batch).unwrap();
        let (_, d) = cross_entropy_mean(&logits, 3, &targets);
        m.backward(&batch, &cache, &d);
    }, seed)
}

/// Every layer type on its own, then the assembled model in several
/// configurations.
pub fn run_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![
        linear_check(&mut rng),
        conv_check(&mut rng, PadMode::Zero),
        conv_check(&mut rng, PadMode::CircularAzimuth),
        encoder_check(&mut rng, PadMode::CircularAzimuth, &[3, 4, 5]),
        encoder_check(&mut rng, PadMode::Zero, &[7, 3, 4, 6]),
        gat_check(&mut rng, true),
        gat_check(&mut rng, false),
        cross_entropy_check(&mut rng),
    ];
    let configs = [
        ("classify full", Task::Classify, FeatureConfig::FULL),
        ("segment full", Task::Segment, FeatureConfig::FULL),
        ("classify global-uv", Task::Classify, FeatureConfig::GLOBAL_UV),
        ("classify topology", Task::Classify, FeatureConfig::TOPOLOGY),
        ("segment fov", Task::Segment, FeatureConfig { ov: true, iv: true, ..FeatureConfig::NONE }),
        ("classify attributes", Task::Classify, FeatureConfig { attributes: true, ..FeatureConfig::NONE }),
    ];
    for (k, (name, task, features)) in configs.into_iter().enumerate() {
        let e = model_check(task, features, seed.wrapping_add(k as u64));
        out.push(worst(format!("model {name}"), e.into_iter().map(|p| p.1)));
    }
    out
}
