use colorfulness::color::RgbImage;
use colorfulness::colornet::{
    decode_checkpoint, encode_checkpoint, predict, prepare_input, train, ModelConfig, OutputScale, RatingModel,
    TrainPlan, TrainingPair,
};
use colorfulness::dataset::AugmentSpec;
use colorfulness::synth::{benchmark, scale_chroma, BenchmarkSpec};

/// The first eight benchmark scenes with their noisy colorfulness scores.
fn eight_images() -> Vec<(RgbImage, f64)> {
    let spec = BenchmarkSpec {
        count: 8,
        ..BenchmarkSpec::default()
    };
    benchmark(&spec).unwrap().into_iter().map(|i| (i.image, i.score)).collect()
}

fn overfit_plan() -> TrainPlan {
    TrainPlan {
        epochs: 500,
        batch_size: 4,
        augment: AugmentSpec::identity(32),
        feature_lr: 1e-3,
        head_lr: 1e-3,
        decay: 0.95,
        decay_interval: 10,
    }
}

fn overfit() -> (RatingModel, Vec<f64>, Vec<(RgbImage, f64)>) {
    let data = eight_images();
    let pairs: Vec<TrainingPair> = data
        .iter()
        .map(|(img, s)| TrainingPair::new(prepare_input(img, 32).unwrap(), *s).unwrap())
        .collect();
    let config = ModelConfig {
        dropout: 0.0,
        ..ModelConfig::mini()
    };
    let mut model = RatingModel::new(config, 5).unwrap();
    let targets: Vec<f64> = data.iter().map(|d| d.1).collect();
    model.set_output_scale(OutputScale::standardizing(&targets)).unwrap();
    let (model, history) = train(model, &pairs, &overfit_plan(), 123).unwrap();
    (model, history, data)
}

#[test]
fn eight_image_overfit_is_memorized_and_reproducible() {
    let (model, history, data) = overfit();
    let last = *history.last().unwrap();
    let first_below = history.iter().position(|&l| l < 0.05);
    println!("final L1 {last:.5}, first epoch below 0.05: {first_below:?}");
    assert!(last < 0.05, "final epoch L1 {last}");
    for (img, target) in &data {
        let p = predict(&model, img).unwrap().value;
        assert!((p - target).abs() < 0.1, "predicted {p} for {target}");
    }

    let (again, history2, _) = overfit();
    assert_eq!(
        history.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        history2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(encode_checkpoint(&model), encode_checkpoint(&again));

    let restored = decode_checkpoint(&encode_checkpoint(&model)).unwrap();
    for (img, _) in &data {
        assert_eq!(
            predict(&restored, img).unwrap().value.to_bits(),
            predict(&model, img).unwrap().value.to_bits()
        );
    }
}

#[test]
fn predictions_ignore_batch_order() {
    let model = RatingModel::new(ModelConfig::mini(), 3).unwrap();
    let imgs: Vec<RgbImage> = eight_images().into_iter().map(|d| d.0).collect();
    let forward: Vec<u64> = imgs.iter().map(|i| predict(&model, i).unwrap().value.to_bits()).collect();
    let mut backward: Vec<u64> = imgs.iter().rev().map(|i| predict(&model, i).unwrap().value.to_bits()).collect();
    backward.reverse();
    assert_eq!(forward, backward);
}

#[test]
fn predict_handles_non_square_inputs() {
    let model = RatingModel::new(ModelConfig::mini(), 3).unwrap();
    let wide = scale_chroma(&colorfulness::synth::flower(80), 0.5).unwrap();
    let tall = RgbImage::from_fn(20, 45, |x, y| [(x * 9) as u8, (y * 5) as u8, 40]);
    assert!(predict(&model, &wide).unwrap().value.is_finite());
    assert!(predict(&model, &tall).unwrap().value.is_finite());
    assert_eq!(predict(&RatingModel::zeros(ModelConfig::mini()).unwrap(), &tall).unwrap().value, 0.0);
}
