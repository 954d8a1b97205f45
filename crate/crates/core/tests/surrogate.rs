use rand::Rng;

use othpo::acquisition::{propose, AcquisitionConfig, AcquisitionState};
use othpo::rng::seeded;
use othpo::space::{Dimension, SearchSpace};
use othpo::surrogate::{FitOptions, GpModel};

#[test]
fn fitted_lengthscale_tracks_function_scale() {
    let mut rng = seeded(3);
    let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 29.0]).collect();
    let slow: Vec<f64> = x.iter().map(|p| (2.0 * p[0]).sin()).collect();
    let fast: Vec<f64> = x.iter().map(|p| (25.0 * p[0]).sin()).collect();
    let fit = |y: &[f64]| GpModel::fit(&x, y, &FitOptions::default(), &mut seeded(1)).unwrap();
    let ls = |m: &GpModel| m.hyperparameters().kernel.lengthscales[0];
    let (a, b) = (fit(&slow), fit(&fast));
    assert!(ls(&a) > 3.0 * ls(&b), "slow {} fast {}", ls(&a), ls(&b));

    // interpolates a smooth function away from the data
    let test: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.random::<f64>()]).collect();
    let (mean, _) = a.predict(&test);
    for (p, m) in test.iter().zip(mean) {
        assert!((m - (2.0 * p[0]).sin()).abs() < 0.02, "{p:?}: {m}");
    }
}

#[test]
fn propose_lands_near_the_minimum() {
    let space = SearchSpace::new(vec![
        Dimension::continuous("a", -1.0, 1.0).unwrap(),
        Dimension::continuous("b", 0.0, 10.0).unwrap(),
    ])
    .unwrap();
    let mut rng = seeded(11);
    let target = [0.4, 3.0];
    let f = |c: &[f64]| (c[0] - target[0]).powi(2) + ((c[1] - target[1]) / 10.0).powi(2);
    let configs: Vec<_> = (0..25).map(|_| space.sample_uniform(&mut rng)).collect();
    let x: Vec<Vec<f64>> = configs.iter().map(|c| space.encode(c).unwrap()).collect();
    let y: Vec<f64> = configs.iter().map(|c| f(c.values())).collect();
    let model = GpModel::fit(&x, &y, &FitOptions::default(), &mut rng).unwrap();
    let best = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let state = AcquisitionState::new(best, AcquisitionConfig::default());
    let p = propose(&model, &space, &state, &mut rng);
    assert!(space.contains(&p));
    assert!(f(p.values()) < 0.05, "proposal {p:?} value {}", f(p.values()));
}
