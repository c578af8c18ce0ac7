use fovnet_nn::gradcheck::{model_check, run_suite};
use fovnet_nn::{Batch, FeatureConfig, FovNetModel, GraphInput, ModelConfig, Task};

#[test]
fn every_layer_matches_central_differences() {
    let results = run_suite(17);
    assert_eq!(results.len(), 14);
    for r in &results {
        assert!(r.rel_error < 1e-4, "{}: {:e}", r.name, r.rel_error);
    }
}

#[test]
fn every_parameter_tensor_is_checked() {
    let model = FovNetModel::<f64>::new(ModelConfig { task: Task::Classify, classes: 3, features: FeatureConfig::FULL, seed: 5 }).unwrap();
    let mut names = Vec::new();
    fovnet_nn::Module::visit(&model, &mut |p| names.push(p.name.clone()));
    let checked: Vec<String> = model_check(Task::Classify, FeatureConfig::FULL, 5).into_iter().map(|p| p.0).collect();
    assert_eq!(names, checked);
    assert!(names.iter().any(|n| n.starts_with("grid.conv2")) && names.iter().any(|n| n.starts_with("gat2")));
}

#[test]
fn pinned_forward_reproduces_the_forward_pass() {
    let g = GraphInput::<f64> {
        n: 2,
        uv: (0..2 * 9 * 7).map(|i| (i as f64 * 0.37).sin()).collect(),
        uv_h: 3,
        uv_w: 3,
        ov: (0..2 * 8 * 3).map(|i| (i as f64 * 0.11).cos()).collect(),
        iv: (0..2 * 8 * 3).map(|i| (i as f64 * 0.23).sin()).collect(),
        fov_h: 2,
        fov_w: 4,
        attrs: vec![0.5; 14],
        edges: vec![(0, 1)],
        class: 0,
        node_labels: vec![],
    };
    let batch = Batch::new(&[&g]).unwrap();
    let model = FovNetModel::<f64>::new(ModelConfig { task: Task::Classify, classes: 4, features: FeatureConfig::FULL, seed: 1 }).unwrap();
    let (a, cache) = model.forward(&batch).unwrap();
    let (b, _) = model.forward_pinned(&batch, Some(&cache)).unwrap();
    assert_eq!(a, b);
}
