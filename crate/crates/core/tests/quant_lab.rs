use blockwht::quant::{
    gen_outlier_matrix, measure, run_experiment, Granularity, OutlierSpec, QuantTarget,
};
use blockwht::{hadamard_transform, ElementType, Matrix, TransformOptions, TransformSize};

#[test]
fn outlier_generation_reaches_the_outlier_scale() {
    let s = OutlierSpec {
        seed: 1,
        ..Default::default()
    };
    let x = gen_outlier_matrix(&s).unwrap();
    assert_eq!((x.rows(), x.cols()), (64, 1024));
    assert_eq!(x.max_abs(), 100.0 * s.base_std);
}

#[test]
fn one_hot_rotates_to_uniform_magnitude() {
    for d in [2usize, 64, 1024, 32768] {
        let c = 3.0 * (d as f64).sqrt();
        let x = Matrix::one_hot(1, d, ElementType::F64, 0, c).unwrap();
        let size = TransformSize::new(d).unwrap();
        let y = hadamard_transform(x, size, &TransformOptions::default()).unwrap();
        assert!(y.data().iter().all(|&v| v == 3.0), "d={d}");
    }
}

#[test]
fn rotation_alone_is_lossless() {
    let x = gen_outlier_matrix(&OutlierSpec::default()).unwrap();
    let size = TransformSize::new(1024).unwrap();
    let opts = TransformOptions::default();
    let back = hadamard_transform(
        hadamard_transform(x.clone(), size, &opts).unwrap(),
        size,
        &opts,
    )
    .unwrap();
    let err = x
        .data()
        .iter()
        .zip(back.data())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err <= 1e-10);
}

#[test]
fn single_outlier_shrinks_max_abs() {
    let mut data: Vec<f64> = (0..256)
        .map(|i| if i % 2 == 0 { 0.5 } else { -0.5 })
        .collect();
    data[17] = 60.0;
    let x = Matrix::new(1, 256, ElementType::F64, data).unwrap();
    let r = measure(&x, QuantTarget::Int4, Granularity::PerTensor).unwrap();
    assert!(r.max_abs_rotated <= r.max_abs_plain);
    assert!(r.rotation_wins());
}

/// 100 of 100 trials favoured the rotation when first run; the floor stays at 0.95.
#[test]
fn int4_outlier_experiment_win_rate() {
    let report = run_experiment(
        &OutlierSpec::default(),
        QuantTarget::Int4,
        Granularity::PerTensor,
        100,
    )
    .unwrap();
    assert_eq!(report.trials.len(), 100);
    assert!(report.aggregate.win_rate >= 0.95, "{report}");
    assert!(report.aggregate.mse_rotated < report.aggregate.mse_plain);
    let again = run_experiment(
        &OutlierSpec::default(),
        QuantTarget::Int4,
        Granularity::PerTensor,
        100,
    )
    .unwrap();
    assert_eq!(report, again);
}

#[test]
fn no_outliers_still_reports() {
    let s = OutlierSpec {
        outlier_rate: 0.0,
        rows: 8,
        ..Default::default()
    };
    let r = run_experiment(&s, QuantTarget::Int8, Granularity::PerRow, 5).unwrap();
    assert!((0.0..=1.0).contains(&r.aggregate.win_rate));
    assert!(r
        .trials
        .iter()
        .all(|t| t.mse_plain >= 0.0 && t.mse_rotated >= 0.0));
}
