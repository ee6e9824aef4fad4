//! Spiral model and seeded noise.

use fairpia_core::models::{
    add_noise, make_spiral_model, splitmix_word, standard_normal, uniform, NoiseSpec, NoiseTarget, SpiralSpec,
};
use fairpia_core::points::ControlPoints;
use fairpia_core::Geometry;

#[test]
fn spiral_fit_is_accurate() {
    let fit = make_spiral_model(&SpiralSpec::default()).unwrap();
    let diag = fit.curve.points().bounding_diagonal();
    assert_eq!(fit.curve.points().len(), 30);
    assert_eq!(fit.curve.degree(), 3);
    assert!(fit.max_error().unwrap() < 1e-3 * diag);
}

#[test]
fn spiral_end_points() {
    let fit = make_spiral_model(&SpiralSpec::default()).unwrap();
    let diag = fit.curve.points().bounding_diagonal();
    let start = fit.curve.evaluate(fit.params[0], 0).unwrap();
    assert!((start[0] - 2.0).hypot(start[1]) < 1e-3 * diag);
    let end = fit.curve.evaluate(*fit.params.last().unwrap(), 0).unwrap();
    let r = 2.0 + 1.5 * 5.0;
    let expected = [r * 5f64.cos(), r * 5f64.sin()];
    assert!((end[0] - expected[0]).hypot(end[1] - expected[1]) < 1e-3 * diag);
}

#[test]
fn refit_with_more_control_points_reduces_the_residual() {
    let coarse = make_spiral_model(&SpiralSpec::default()).unwrap();
    let fine = make_spiral_model(&SpiralSpec {
        n_control: 60,
        ..SpiralSpec::default()
    })
    .unwrap();
    assert!(fine.max_error().unwrap() < coarse.max_error().unwrap());
}

#[test]
fn sample_noise_changes_the_fit_but_not_the_size() {
    let spec = SpiralSpec {
        sample_noise: Some(NoiseSpec {
            variance: 0.02,
            seed: 3,
            target: NoiseTarget::Samples,
        }),
        ..SpiralSpec::default()
    };
    let clean = make_spiral_model(&SpiralSpec::default()).unwrap();
    let noisy = make_spiral_model(&spec).unwrap();
    assert_eq!(noisy.curve.points().len(), 30);
    assert!(noisy.curve.points().max_distance(clean.curve.points()).unwrap() > 0.0);
}

#[test]
fn frozen_noise_vectors() {
    let text = include_str!("data/noise_vectors.json");
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    for case in v["cases"].as_array().unwrap() {
        let seed = case["seed"].as_u64().unwrap();
        for (n, w) in case["words"].as_array().unwrap().iter().enumerate() {
            assert_eq!(splitmix_word(seed, n as u64).to_string(), w.as_str().unwrap());
        }
        for (n, u) in case["uniforms"].as_array().unwrap().iter().enumerate() {
            assert_eq!(uniform(seed, n as u64), u.as_f64().unwrap());
        }
        for (n, z) in case["normals"].as_array().unwrap().iter().enumerate() {
            let z = z.as_f64().unwrap();
            // ln and cos may differ in the last ulp between math libraries
            assert!((standard_normal(seed, n as u64) - z).abs() <= 4.0 * f64::EPSILON * z.abs().max(1.0));
        }
    }
}

#[test]
fn noise_is_deterministic() {
    let g: Geometry = make_spiral_model(&SpiralSpec::default()).unwrap().curve.into();
    let spec = NoiseSpec::new(0.02, 77);
    let a = add_noise(&g, &spec).unwrap();
    let b = add_noise(&g, &spec).unwrap();
    assert_eq!(
        a.points().as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.points().as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_ne!(add_noise(&g, &NoiseSpec::new(0.02, 78)).unwrap(), a);
}

#[test]
fn sample_variance_is_close_to_requested() {
    // 30 points in 3D; the 90-sample variance lies within 50% of the target
    // with overwhelming probability (chi-square with 90 degrees of freedom).
    let zeros = ControlPoints::zeros(3, 30);
    for seed in 0..20 {
        let noisy = fairpia_core::models::perturb_points(&zeros, &NoiseSpec::new(0.02, seed)).unwrap();
        let xs = noisy.as_slice();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((var - 0.02).abs() < 0.5 * 0.02, "seed {seed}: {var}");
    }
}
