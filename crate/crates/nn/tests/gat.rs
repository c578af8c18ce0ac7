use fovnet_nn::model::EMBED_DIM;
use fovnet_nn::{Adjacency, Batch, FeatureConfig, FovNetModel, GatLayer, GraphInput, ModelConfig, Task};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn permute_rows(x: &[f64], perm: &[usize], width: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (i, &p) in perm.iter().enumerate() {
        out[p * width..(p + 1) * width].copy_from_slice(&x[i * width..(i + 1) * width]);
    }
    out
}

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, u64)> {
    (2usize..=20).prop_flat_map(|n| {
        (Just(n), prop::collection::vec((0..n, 0..n), 0..3 * n), any::<u64>())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gat_is_permutation_equivariant((n, edges, seed) in graph_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let x: Vec<f64> = (0..n * 16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let adj = Adjacency::from_edges(n, &edges).unwrap();
        let moved: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let adj_p = Adjacency::from_edges(n, &moved).unwrap();
        for concat in [true, false] {
            let layer = GatLayer::<f64>::new("g", 16, 4, 8, concat, &mut rng);
            let (y, _) = layer.forward(&x, &adj).unwrap();
            let (yp, _) = layer.forward(&permute_rows(&x, &perm, 16), &adj_p).unwrap();
            let expected = permute_rows(&y, &perm, layer.d_out());
            for (a, b) in yp.iter().zip(&expected) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn single_node_attends_to_itself() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut layer = GatLayer::<f64>::new("g", 4, 1, 4, true, &mut rng);
    layer.w.value.data = (0..16).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
    let adj = Adjacency::from_edges(1, &[]).unwrap();
    let (y, _) = layer.forward(&[0.5, -1.0, 2.0, -0.25], &adj).unwrap();
    assert_eq!(y, vec![0.5, 0.0, 2.0, 0.0]);
}

#[test]
fn isolated_nodes_do_not_interact() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let layer = GatLayer::<f64>::new("g", 6, 4, 4, true, &mut rng);
    let adj = Adjacency::from_edges(2, &[]).unwrap();
    let a: Vec<f64> = (0..6).map(|i| i as f64 * 0.3 - 0.7).collect();
    let b: Vec<f64> = (0..6).map(|i| (i as f64).cos()).collect();
    let c: Vec<f64> = (0..6).map(|i| (i as f64).sin() * 3.0).collect();
    let (y1, _) = layer.forward(&[a.clone(), b].concat(), &adj).unwrap();
    let (y2, _) = layer.forward(&[a, c].concat(), &adj).unwrap();
    assert_eq!(y1[..16], y2[..16]);
    assert_ne!(y1[16..], y2[16..]);
}

#[test]
fn adjacency_adds_self_loops_and_drops_duplicates() {
    let adj = Adjacency::from_edges(3, &[(0, 1), (1, 0), (1, 1), (2, 1)]).unwrap();
    assert_eq!(adj.row(0), &[0, 1]);
    assert_eq!(adj.row(1), &[1, 0, 2]);
    assert_eq!(adj.row(2), &[2, 1]);
    assert!(Adjacency::from_edges(2, &[(0, 2)]).is_err());
}

fn model(task: Task, classes: usize) -> FovNetModel<f64> {
    FovNetModel::new(ModelConfig { task, classes, features: FeatureConfig::FULL, seed: 3 }).unwrap()
}

#[test]
fn max_pool_readout_properties() {
    let m = model(Task::Classify, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let one: Vec<f64> = (0..EMBED_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let two: Vec<f64> = (0..EMBED_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // a single node pools to itself, so duplicating it changes nothing
    let single = m.head_logits(&one, &[0, 1]);
    let doubled = m.head_logits(&[one.clone(), one.clone()].concat(), &[0, 2]);
    assert_eq!(single, doubled);
    let pair = m.head_logits(&[one.clone(), two.clone()].concat(), &[0, 2]);
    assert_eq!(pair, m.head_logits(&[two.clone(), one.clone(), two.clone()].concat(), &[0, 3]));
    assert_eq!(single.len(), 5);
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, edges: Vec<(usize, usize)>) -> GraphInput<f64> {
    let mut v = |k: usize| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    GraphInput {
        n,
        uv: v(n * 4 * 4 * 7),
        uv_h: 4,
        uv_w: 4,
        ov: v(n * 2 * 4 * 3),
        iv: v(n * 2 * 4 * 3),
        fov_h: 2,
        fov_w: 4,
        attrs: v(n * 7),
        edges,
        class: 0,
        node_labels: vec![0; n],
    }
}

fn permute_graph(g: &GraphInput<f64>, perm: &[usize]) -> GraphInput<f64> {
    let per = |x: &[f64]| permute_rows(x, perm, x.len() / g.n);
    GraphInput {
        uv: per(&g.uv),
        ov: per(&g.ov),
        iv: per(&g.iv),
        attrs: per(&g.attrs),
        edges: g.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect(),
        ..g.clone()
    }
}

#[test]
fn model_outputs_follow_node_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_graph(&mut rng, 5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)]);
    let perm = [3, 0, 4, 1, 2];
    let gp = permute_graph(&g, &perm);
    let cls = model(Task::Classify, 4);
    let (a, _) = cls.forward(&Batch::new(&[&g]).unwrap()).unwrap();
    let (b, _) = cls.forward(&Batch::new(&[&gp]).unwrap()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-9);
    }
    let seg = model(Task::Segment, 3);
    let (a, _) = seg.forward(&Batch::new(&[&g]).unwrap()).unwrap();
    let (b, _) = seg.forward(&Batch::new(&[&gp]).unwrap()).unwrap();
    assert_eq!(a.len(), 5 * 3);
    let expected = permute_rows(&a, &perm, 3);
    for (x, y) in b.iter().zip(&expected) {
        assert!((x - y).abs() <= 1e-9);
    }
}

#[test]
fn batching_matches_single_graph_passes() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g1 = random_graph(&mut rng, 3, vec![(0, 1), (1, 2)]);
    let g2 = random_graph(&mut rng, 4, vec![(0, 1), (2, 3)]);
    let m = model(Task::Classify, 4);
    let (both, _) = m.forward(&Batch::new(&[&g1, &g2]).unwrap()).unwrap();
    let (a, _) = m.forward(&Batch::new(&[&g1]).unwrap()).unwrap();
    let (b, _) = m.forward(&Batch::new(&[&g2]).unwrap()).unwrap();
    for (x, y) in both.iter().zip(a.iter().chain(&b)) {
        assert!((x - y).abs() <= 1e-12);
    }
}
