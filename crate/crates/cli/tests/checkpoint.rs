use fovnet_cli::checkpoint::{feature_bits, features_from_bits};
use fovnet_cli::descriptors::{extract, to_graph_input};
use fovnet_cli::{Checkpoint, CliError};
use fovnet_core::fixtures;
use fovnet_nn::{Batch, FeatureConfig, FovNetModel, ModelConfig, Task};

fn checkpoint(task: Task, features: FeatureConfig) -> Checkpoint {
    let model = FovNetModel::new(ModelConfig { task, classes: 6, features, seed: 11 }).unwrap();
    Checkpoint { model, fov_res: (4, 8) }
}

#[test]
fn feature_bits_round_trip() {
    for f in [FeatureConfig::FULL, FeatureConfig::GLOBAL_UV, FeatureConfig::TOPOLOGY, FeatureConfig::NONE] {
        assert_eq!(features_from_bits(feature_bits(&f)), f);
    }
    assert_eq!(feature_bits(&FeatureConfig::FULL), 0b1111);
}

#[test]
fn round_trip_preserves_outputs() {
    for (task, features) in [(Task::Classify, FeatureConfig::FULL), (Task::Segment, FeatureConfig::GLOBAL_UV)] {
        let ckpt = checkpoint(task, features);
        let bytes = ckpt.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.fov_res, (4, 8));
        assert_eq!(back.model.config, ckpt.model.config);
        assert_eq!(back.to_bytes(), bytes);
        let g = to_graph_input(&extract(&fixtures::cube_with_hole(), (4, 8), &features), 1);
        let batch = Batch::new(&[&g]).unwrap();
        assert_eq!(ckpt.model.forward(&batch).unwrap().0, back.model.forward(&batch).unwrap().0);
    }
}

#[test]
fn config_and_tensors_must_agree() {
    let bytes = checkpoint(Task::Classify, FeatureConfig::FULL).to_bytes();

    // feature bits sit after magic, version, task and class count
    let mut other = bytes.clone();
    other[16..20].copy_from_slice(&feature_bits(&FeatureConfig { ov: true, ..FeatureConfig::NONE }).to_le_bytes());
    assert!(matches!(Checkpoint::from_bytes(&other), Err(CliError::CheckpointMismatch(_))));

    let mut renamed = bytes.clone();
    let at = bytes.windows(6).position(|w| w == b"fusion").unwrap();
    renamed[at] = b'F';
    assert!(matches!(Checkpoint::from_bytes(&renamed), Err(CliError::CheckpointMismatch(_))));

    let mut classes = bytes.clone();
    classes[12..16].copy_from_slice(&7u32.to_le_bytes());
    assert!(matches!(Checkpoint::from_bytes(&classes), Err(CliError::CheckpointMismatch(_))));

    assert!(matches!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]), Err(CliError::Container(_))));
    assert!(matches!(Checkpoint::from_bytes(b"FOVD"), Err(CliError::Container(_))));
}
