use std::f64::consts::PI;

use muskat_core::evolution::{run, ComponentSpec, InitialShape, SimConfig, Termination};
use muskat_core::io::{self, SnapshotFile, TerminationSummary};
use muskat_core::operators::normal_velocity;
use muskat_core::*;

fn two_circles(radii: [f64; 2], modes: Vec<Mode>) -> InitialShape {
    InitialShape {
        wall_radius: 6.0,
        wall_center: [0.0, 0.0],
        components: vec![
            ComponentSpec {
                radius: radii[0],
                center: [-2.0, 0.0],
                modes: modes.clone(),
            },
            ComponentSpec {
                radius: radii[1],
                center: [2.0, 0.0],
                modes,
            },
        ],
    }
}

#[test]
fn unequal_circles_are_a_fixed_point_without_phase_transition() {
    let cfg = SimConfig::new(
        PhysicalParams::unit(Model::Mu),
        two_circles([1.0, 1.2], vec![]),
        32,
        1.0,
        0.1,
    );
    let out = run(&cfg).unwrap();
    assert_eq!(out.trajectory.termination, Termination::Equilibrium);
    for (fit, r) in out.final_circles.iter().zip([1.0, 1.2]) {
        assert!((fit.circle.radius - r).abs() / r < 1e-4);
    }
}

#[test]
fn smaller_circle_loses_volume_with_phase_transition() {
    let set = two_circles([1.0, 1.2], vec![]).build(48).unwrap();
    let v = normal_velocity(&set, &PhysicalParams::unit(Model::MuT)).unwrap();
    let w = set.weights();
    let small = v.integral(&w, 0);
    let large = v.integral(&w, 1);
    assert!(small < 0.0 && large > 0.0, "{small} {large}");
    // total volume is conserved
    assert!((small + large).abs() < 1e-8 * small.abs());
    // without phase transition nothing moves
    let v = normal_velocity(&set, &PhysicalParams::unit(Model::Mu)).unwrap();
    assert!(v.max_abs() < 1e-8);
}

#[test]
fn exact_circle_is_stationary_for_both_models() {
    for model in [Model::Mu, Model::MuT] {
        let shape = InitialShape {
            wall_radius: 3.0,
            wall_center: [0.2, 0.0],
            components: vec![ComponentSpec {
                radius: 0.9,
                center: [0.5, -0.4],
                modes: vec![],
            }],
        };
        let set = shape.build(32).unwrap();
        let v = normal_velocity(&set, &PhysicalParams::unit(model)).unwrap();
        assert!(v.max_abs() < 1e-8, "{model:?}: {}", v.max_abs());
    }
}

#[test]
fn perturbed_pair_conserves_each_volume_and_decreases_perimeter() {
    let cfg = SimConfig::new(
        PhysicalParams::new(1.0, 2.0, 0.5, 1.0, 3.0, Model::Mu).unwrap(),
        two_circles([1.0, 0.8], vec![Mode::new(2, 0.04)]),
        32,
        0.1,
        0.05,
    );
    let out = run(&cfg).unwrap();
    assert_eq!(out.trajectory.termination, Termination::ReachedTEnd);
    assert!(
        out.area_drift().iter().all(|d| *d < 1e-6),
        "{:?}",
        out.area_drift()
    );
    let p0 = out.steps[0].perimeter;
    assert!(out.max_perimeter_increase() <= 1e-8 * p0);
    assert!(out.steps.last().unwrap().perimeter < p0);
}

#[test]
fn run_artifacts_read_back() {
    let mut shape = two_circles([1.0, 1.2], vec![]);
    shape.components[0].modes = vec![Mode::new(3, 0.02)];
    let cfg = SimConfig::new(PhysicalParams::unit(Model::MuT), shape, 32, 0.02, 0.01);
    let out = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = io::write_run(&out, dir.path()).unwrap();
    assert_eq!(files.len(), out.trajectory.snapshots.len() + 2);

    let snap: SnapshotFile =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("snap_00001.json")).unwrap())
            .unwrap();
    let original = &out.trajectory.snapshots[1].interfaces;
    assert_eq!(snap.index, 1);
    assert_eq!(snap.interfaces.len(), 2);
    for (p, q) in snap.interfaces.points().iter().zip(original.points()) {
        assert!((p - q).norm() < 1e-13);
    }

    let summary: TerminationSummary = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("termination.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary.termination, Termination::ReachedTEnd);
    assert_eq!(summary.snapshots, out.trajectory.snapshots.len());

    let diag = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let mut lines = diag.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,area_total,area_1,area_2,perimeter,maxHdev,ball_r,vinf,jinf,fit_residual"
    );
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(first.len(), 10);
    assert_eq!(first[0], 0.0);
    assert!((first[1] - first[2] - first[3]).abs() < 1e-12);
    // phase flux is active for the phase-transition model
    assert!(first[8] > 0.0);
    assert!((first[2] - PI * (1.0 + 0.02 * 0.02 / 2.0)).abs() < 1e-10);
}
