use fovnet_nn::layers::{conv2d, gap, leaky_relu, linear, relu};
use fovnet_nn::loss::{cross_entropy, cross_entropy_mean};
use fovnet_nn::{AdamState, Module, NnError, PadMode, Param, Tensor};

#[test]
fn left_neighbor_kernel_rotates_a_circular_row() {
    let input = Tensor::<f64>::from_f64(&[1, 4, 1], &[1.0, 2.0, 3.0, 4.0]).unwrap();
    let mut k = vec![0.0; 9];
    k[3] = 1.0; // row 1, column 0: the left neighbor
    let kernel = Tensor::from_f64(&[3, 3, 1, 1], &k).unwrap();
    let out = conv2d(&input, &kernel, PadMode::CircularAzimuth).unwrap();
    assert_eq!(out.data, vec![4.0, 1.0, 2.0, 3.0]);
    let zero_pad = conv2d(&input, &kernel, PadMode::Zero).unwrap();
    assert_eq!(zero_pad.data, vec![0.0, 1.0, 2.0, 3.0]);
}

#[test]
fn identity_kernel_is_identity() {
    let values: Vec<f64> = (0..24).map(|i| i as f64 * 0.5 - 3.0).collect();
    let input = Tensor::<f64>::from_f64(&[3, 4, 2], &values).unwrap();
    let mut k = vec![0.0; 9 * 4];
    for c in 0..2 {
        k[(4 * 2 + c) * 2 + c] = 1.0;
    }
    let kernel = Tensor::from_f64(&[3, 3, 2, 2], &k).unwrap();
    for pad in [PadMode::Zero, PadMode::CircularAzimuth] {
        assert_eq!(conv2d(&input, &kernel, pad).unwrap(), input);
    }
}

#[test]
fn all_ones_counts_contributing_taps() {
    let input = Tensor::<f64>::from_f64(&[2, 4, 1], &[1.0; 8]).unwrap();
    let kernel = Tensor::from_f64(&[3, 3, 1, 1], &[1.0; 9]).unwrap();
    let out = conv2d(&input, &kernel, PadMode::CircularAzimuth).unwrap();
    // two rows: both are edge-elevation rows
    assert!(out.data.iter().all(|&v| v == 6.0));
    let tall = Tensor::<f64>::from_f64(&[3, 4, 1], &[1.0; 12]).unwrap();
    let out = conv2d(&tall, &kernel, PadMode::CircularAzimuth).unwrap();
    assert_eq!(out.data, [[6.0; 4], [9.0; 4], [6.0; 4]].concat());
}

#[test]
fn conv_shape_errors() {
    let input = Tensor::<f64>::zeros(&[2, 4, 3]);
    let kernel = Tensor::<f64>::zeros(&[3, 3, 2, 5]);
    assert!(matches!(conv2d(&input, &kernel, PadMode::Zero), Err(NnError::ShapeMismatch(_))));
    assert!(matches!(conv2d(&Tensor::<f64>::zeros(&[8]), &kernel, PadMode::Zero), Err(NnError::ShapeMismatch(_))));
    assert!(Tensor::<f64>::new(&[2, 2], vec![0.0; 3]).is_err());
}

#[test]
fn primitives() {
    let t = Tensor::<f64>::from_f64(&[2, 2, 1], &[1.0, 3.0, 5.0, 7.0]).unwrap();
    assert_eq!(gap(&t).unwrap().data, vec![4.0]);
    assert_eq!(relu(-2.0), 0.0);
    assert_eq!(relu(3.0), 3.0);
    assert_eq!(leaky_relu(-2.0, 0.2), -0.4);
    let x = Tensor::<f64>::from_f64(&[2, 3], &[1.0, -2.0, 3.0, 0.5, 0.0, -1.0]).unwrap();
    let eye = Tensor::from_f64(&[3, 3], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(linear(&x, &eye, &Tensor::zeros(&[3])).unwrap().data, x.data);
    assert!(linear(&x, &eye, &Tensor::zeros(&[2])).is_err());
}

#[test]
fn cross_entropy_examples() {
    let (loss, grad) = cross_entropy(&[0.0f64, 0.0], 0);
    assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(grad, vec![-0.5, 0.5]);
    let (loss, grad) = cross_entropy(&[1000.0f64, 0.0], 0);
    assert!(loss.is_finite() && loss.abs() < 1e-12);
    assert!(grad.iter().all(|g| g.is_finite()));
    let (loss32, _) = cross_entropy(&[1000.0f32, 0.0], 1);
    assert!((loss32 - 1000.0).abs() < 1e-3);
    let (mean, g) = cross_entropy_mean(&[0.0f64, 0.0, 0.0, 0.0], 2, &[0, 1]);
    assert!((mean - std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(g, vec![-0.25, 0.25, 0.25, -0.25]);
}

struct Scalar(Param<f64>);

impl Module<f64> for Scalar {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<f64>)) {
        f(&self.0)
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<f64>)) {
        f(&mut self.0)
    }
}

#[test]
fn adam_first_step_and_zero_gradient() {
    let mut s = Scalar(Param::zeros("x", &[1]));
    s.0.value.data[0] = 2.0;
    let mut adam = AdamState::new(&s, 1e-3);
    s.0.grad[0] = 1.0;
    adam.update(&mut s).unwrap();
    assert!((s.0.value.data[0] - 2.0 + 0.001).abs() < 1e-5);
    assert!(s.0.value.data[0] > 2.0 - 0.001);

    let mut z = Scalar(Param::zeros("y", &[3]));
    z.0.value.data = vec![1.0, -2.0, 0.5];
    let mut adam = AdamState::new(&z, 1e-3);
    for _ in 0..3 {
        adam.update(&mut z).unwrap();
    }
    assert_eq!(z.0.value.data, vec![1.0, -2.0, 0.5]);
    assert_eq!(adam.step, 3);

    z.0.grad[1] = f64::NAN;
    assert!(matches!(adam.update(&mut z), Err(NnError::NonFiniteGradient(_))));
    assert_eq!(z.0.value.data, vec![1.0, -2.0, 0.5]);
    assert_eq!(adam.step, 3);
}
