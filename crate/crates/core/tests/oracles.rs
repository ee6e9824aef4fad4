//! Independent oracles for the fairing, selection, baseline and metric
//! operations.

mod common;

use common::{rel_diff, rng};
use fairpia_core::baseline::{compare_runs, energy_fair_direct};
use fairpia_core::engine::{fair, FairingConfig, StopReason, WeightPolicy};
use fairpia_core::metrics::{relative_iter_deviation, rmse_deviation};
use fairpia_core::models::{add_noise, straight_line, NoiseSpec};
use fairpia_core::select::{auto_fair, energy_impact, optimal_single_point, rank_control_points, AutoFairOptions};
use fairpia_core::{BSplineCurve, ControlPoints, FunctionalKind, Geometry, KnotVector};
use rand::Rng;

const STRAIN: FunctionalKind = FunctionalKind::CurveOrder(2);

fn with_point(g: &Geometry, j: usize, p: &[f64]) -> Geometry {
    let mut pts = g.points().clone();
    pts.point_mut(j).copy_from_slice(p);
    g.with_points(pts).unwrap()
}

fn line(n: usize) -> Geometry {
    straight_line(n, 3, &[0.0, 0.0], &[4.0, 1.0]).unwrap().into()
}

#[test]
fn optimal_point_beats_random_probes() {
    let mut rng = rng(1);
    let mut g = line(6);
    g = with_point(&g, 3, &[g.points().point(3)[0], 0.9]);
    let best = optimal_single_point(&g, 3, STRAIN).unwrap();
    let e_best = with_point(&g, 3, &best).energy(STRAIN).unwrap();
    for _ in 0..100 {
        let probe: Vec<f64> = best.iter().map(|c| c + rng.random_range(-0.5..0.5)).collect();
        assert!(e_best <= with_point(&g, 3, &probe).energy(STRAIN).unwrap());
    }
}

#[test]
fn impact_matches_brute_force_energy_drop() {
    let mut rng = rng(2);
    let g = common::random_curve(&mut rng, 8, 3, 2);
    let e = g.energy(STRAIN).unwrap();
    for j in 0..8 {
        let e_hat = with_point(&g, j, &optimal_single_point(&g, j, STRAIN).unwrap())
            .energy(STRAIN)
            .unwrap();
        let z = energy_impact(&g, j, STRAIN).unwrap();
        assert!(z >= 0.0);
        assert!(rel_diff(z, e - e_hat) < 1e-8, "j={j} z={z} brute={}", e - e_hat);
    }
}

#[test]
fn single_perturbation_ranks_its_neighbourhood_first() {
    // Non-uniform knots so that no entry inside the band vanishes.
    let p = 3;
    let m = 9;
    let kv = common::random_knots(&mut rng(12), 20, p);
    let rows: Vec<[f64; 2]> = kv.greville().iter().map(|&t| [4.0 * t, t]).collect();
    let mut g: Geometry = BSplineCurve::new(kv, ControlPoints::from_rows(&rows).unwrap()).unwrap().into();
    let moved: Vec<f64> = g.points().point(m).iter().map(|c| c + 0.3).collect();
    g = with_point(&g, m, &moved);
    let ranking = rank_control_points(&g, STRAIN).unwrap();
    for r in &ranking[..2 * p + 1] {
        assert!(r.index.abs_diff(m) <= p, "rank {} is point {}", r.rank, r.index);
        assert!(r.z > 0.0);
    }
    assert!(ranking[2 * p + 1..].iter().all(|r| r.z == 0.0));
}

#[test]
fn straight_line_ranking_is_identity() {
    let ranking = rank_control_points(&line(12), STRAIN).unwrap();
    for (i, r) in ranking.iter().enumerate() {
        assert_eq!((r.index, r.rank, r.z), (i, i + 1, 0.0));
    }
}

#[test]
fn full_selection_equals_global_fairing() {
    let g = common::random_curve(&mut rng(3), 15, 3, 2);
    let w = 2e-4;
    let mut opts = AutoFairOptions::new(STRAIN);
    opts.policy = WeightPolicy::Permissive;
    let auto = auto_fair(&g, 15, &[w], &opts).unwrap();
    let global = fair(&g, &FairingConfig::uniform(STRAIN, 15, w).with_policy(WeightPolicy::Permissive)).unwrap();
    assert_eq!(auto.run.geometry, global.geometry);
    assert_eq!(auto.run.trace, global.trace);
}

#[test]
fn auto_fair_on_straight_line_is_a_no_op() {
    let g = line(10);
    for m in [1, 4, 10] {
        let run = auto_fair(&g, m, &[1e-3], &AutoFairOptions::new(STRAIN)).unwrap();
        assert_eq!(run.run.geometry, g);
    }
}

#[test]
fn smaller_selection_is_a_prefix() {
    let base: Geometry = straight_line(100, 3, &[0.0, 0.0], &[10.0, 3.0]).unwrap().into();
    let noisy = add_noise(&base, &NoiseSpec::new(0.02, 5)).unwrap();
    let opts = AutoFairOptions::new(STRAIN);
    let a = auto_fair(&noisy, 3, &[1e-6], &opts).unwrap();
    let b = auto_fair(&noisy, 8, &[1e-6], &opts).unwrap();
    assert_eq!(a.selected[..], b.selected[..3]);
}

#[test]
fn rank_order_weight_assignment() {
    let g = common::random_curve(&mut rng(4), 12, 3, 2);
    let opts = AutoFairOptions::new(STRAIN);
    let run = auto_fair(&g, 3, &[3e-7, 2e-7, 1e-7], &opts).unwrap();
    for (k, &i) in run.selected.iter().enumerate() {
        let expected = [3e-7, 2e-7, 1e-7][k];
        assert!(run.run.weights[i] == expected || run.run.warnings.iter().any(|w| w.index == i));
    }
}

#[test]
fn direct_solve_minimises_its_objective() {
    let mut rng = rng(5);
    let g = common::random_curve(&mut rng, 10, 3, 2);
    let w = 1e-3;
    let out = energy_fair_direct(&g, w, STRAIN).unwrap();
    let d = g.gram(STRAIN).unwrap();
    let objective = |p: &ControlPoints| {
        let dev: f64 = p
            .iter()
            .zip(g.points().iter())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
            .sum();
        0.5 * (1.0 - w) * dev + 0.5 * w * d.quadratic_form(p).unwrap()
    };
    let best = objective(out.points());
    assert!(out.energy(STRAIN).unwrap() <= g.energy(STRAIN).unwrap());
    for _ in 0..100 {
        let mut probe = out.points().clone();
        let i = rng.random_range(0..10);
        probe.point_mut(i)[rng.random_range(0..2)] += rng.random_range(-0.05..0.05);
        assert!(best <= objective(&probe));
    }
}

#[test]
fn direct_solve_keeps_a_straight_line() {
    let g = line(9);
    let out = energy_fair_direct(&g, 0.3, STRAIN).unwrap();
    assert!(out.points().max_distance(g.points()).unwrap() < 1e-12);
}

#[test]
fn comparison_of_identical_results_is_zero() {
    let g = common::random_curve(&mut rng(6), 10, 3, 2);
    let run = fair(&g, &FairingConfig::uniform(STRAIN, 10, 1e-6).with_max_iterations(0)).unwrap();
    let report = compare_runs(&g, STRAIN, &run, &g).unwrap();
    assert_eq!(report.max_distance, 0.0);
    assert_eq!(report.pia_rmse, report.direct_rmse);
    assert_eq!(report.pia_energy, report.direct_energy);
}

#[test]
fn nonuniform_weights_versus_mean_weight_is_reported() {
    let g = common::random_curve(&mut rng(7), 20, 3, 2);
    let weights: Vec<f64> = (0..20).map(|i| if i < 10 { 1e-4 } else { 1e-6 }).collect();
    let mean = weights.iter().sum::<f64>() / 20.0;
    let mut cfg = FairingConfig::new(STRAIN, weights);
    cfg.policy = WeightPolicy::Permissive;
    let run = fair(&g, &cfg).unwrap();
    let direct = energy_fair_direct(&g, mean, STRAIN).unwrap();
    let report = compare_runs(&g, STRAIN, &run, &direct).unwrap();
    assert!(report.max_distance > 0.0);
}

#[test]
fn comparison_report_snapshot() {
    let kv = KnotVector::uniform(8, 3).unwrap();
    let pts = ControlPoints::from_rows(&[
        [0.0, 0.0],
        [1.0, 0.4],
        [2.0, -0.3],
        [3.0, 0.5],
        [4.0, -0.2],
        [5.0, 0.3],
        [6.0, -0.1],
        [7.0, 0.0],
    ])
    .unwrap();
    let g: Geometry = BSplineCurve::new(kv, pts).unwrap().into();
    let w = 2e-4;
    let mut cfg = FairingConfig::uniform(STRAIN, 8, w).with_policy(WeightPolicy::Permissive);
    cfg.max_iterations = 5;
    let run = fair(&g, &cfg).unwrap();
    let direct = energy_fair_direct(&g, w, STRAIN).unwrap();
    let text = compare_runs(&g, STRAIN, &run, &direct).unwrap().to_string();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/compare_report.txt");
    if std::env::var_os("UPDATE_SNAPSHOTS").is_some() {
        std::fs::write(path, &text).unwrap();
    }
    let golden = std::fs::read_to_string(path).expect("snapshot missing; rerun with UPDATE_SNAPSHOTS=1");
    assert_eq!(text, golden);
}

#[test]
fn rmse_matches_two_pass_oracle() {
    let mut rng = rng(8);
    for _ in 0..20 {
        let n = rng.random_range(1..40);
        let a = common::random_points(&mut rng, n, 3, 5.0);
        let b = common::random_points(&mut rng, n, 3, 5.0);
        let diffs: Vec<f64> = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect();
        let sq: Vec<f64> = diffs.iter().map(|d| d * d).collect();
        let oracle = (sq.iter().sum::<f64>() / n as f64).sqrt();
        assert!(rel_diff(rmse_deviation(&a, &b).unwrap(), oracle) < 1e-14);
    }
}

#[test]
fn iter_deviation_matches_direct_formula() {
    let mut rng = rng(9);
    for _ in 0..20 {
        let n = rng.random_range(2..40);
        let [k, prev, first] = [0, 1, 2].map(|_| common::random_points(&mut rng, n, 2, 3.0));
        let ss = |a: &ControlPoints, b: &ControlPoints| {
            a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
        };
        let oracle = (ss(&k, &prev) / ss(&k, &first)).sqrt();
        let got = relative_iter_deviation(&k, &prev, &first, None).unwrap().unwrap();
        assert!(rel_diff(got, oracle) < 1e-14);
    }
}

#[test]
fn uniform_weight_fixed_point_is_the_direct_solve() {
    let g = common::random_curve(&mut rng(10), 12, 3, 2);
    let w = 1e-3;
    let cfg = FairingConfig::uniform(STRAIN, 12, w)
        .with_policy(WeightPolicy::Permissive)
        .with_tolerance(1e-13)
        .with_max_iterations(20000);
    let run = fair(&g, &cfg).unwrap();
    assert_eq!(run.stop, StopReason::Converged);
    let direct = energy_fair_direct(&g, w, STRAIN).unwrap();
    let diag = g.points().bounding_diagonal();
    assert!(run.geometry.points().max_distance(direct.points()).unwrap() < 1e-6 * diag);
}
