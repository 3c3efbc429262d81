//! Closed-form checks computed independently of the library's own formulas.

use std::f64::consts::PI;

use muskat_core::geometry::make_perturbed_circle;
use muskat_core::operators::{apply_G, assemble_G_matrix};
use muskat_core::transmission::annulus_oracle;
use muskat_core::*;
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

fn ellipse(a: f64, b: f64, n: usize) -> InterfaceCurve {
    InterfaceCurve::new(
        (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                Point::new(a * t.cos(), b * t.sin())
            })
            .collect(),
    )
    .unwrap()
}

/// Composite Gauss-Legendre (5 points) on `[0, pi/2]` of `sqrt(a^2 sin^2 + b^2 cos^2)`.
fn ellipse_perimeter_quadrature(a: f64, b: f64) -> f64 {
    let x = [
        0.0,
        -0.5384693101056831,
        0.5384693101056831,
        -0.906179845938664,
        0.906179845938664,
    ];
    let w = [
        0.5688888888888889,
        0.47862867049936647,
        0.47862867049936647,
        0.23692688505618908,
        0.23692688505618908,
    ];
    let panels = 400;
    let h = 0.5 * PI / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            let t = mid + 0.5 * h * xi;
            s += 0.5 * h * wi * (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
        }
    }
    4.0 * s
}

#[test]
fn ellipse_curvature_matches_closed_form() {
    let (a, b, n) = (2.0, 1.0, 256);
    let c = ellipse(a, b, n);
    for (j, h) in c.curvature().iter().enumerate() {
        let t = 2.0 * PI * j as f64 / n as f64;
        let kappa = a * b / (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5);
        assert!(
            ((h + kappa) / kappa).abs() < 1e-10,
            "node {j}: {h} vs {}",
            -kappa
        );
    }
}

#[test]
fn ellipse_perimeter_matches_quadrature() {
    let p = ellipse_perimeter_quadrature(2.0, 1.0);
    assert!((p - 9.688448220547676).abs() < 1e-12, "{p}");
    let c = ellipse(2.0, 1.0, 256);
    assert!((c.perimeter() - p).abs() / p < 1e-10);
    // spectral convergence under refinement
    let e32 = (ellipse(2.0, 1.0, 32).perimeter() - p).abs();
    let e64 = (ellipse(2.0, 1.0, 64).perimeter() - p).abs();
    assert!(e64 < e32 / 100.0 || e64 < 1e-13, "{e32} {e64}");
}

#[test]
fn polar_areas() {
    let c = make_perturbed_circle(1.0, Point::new(0.0, 0.0), &[Mode::new(3, 0.1)], 64).unwrap();
    assert!((c.enclosed_area() - 1.005 * PI).abs() < 1e-10);
    let c = make_perturbed_circle(1.0, Point::new(0.3, -0.2), &[Mode::new(2, 0.05)], 64).unwrap();
    assert!((c.enclosed_area() - 1.00125 * PI).abs() < 1e-10);
    // two modes: (R^2 + (a^2 + b^2)/2) pi
    let c = make_perturbed_circle(
        2.0,
        Point::new(0.0, 0.0),
        &[Mode::new(2, 0.1), Mode::new(5, 0.2)],
        64,
    )
    .unwrap();
    assert!((c.enclosed_area() - (4.0 + 0.025) * PI).abs() < 1e-10);
}

#[test]
fn unit_circle_area_at_64_nodes() {
    let c = Circle::new(Point::new(0.0, 0.0), 1.0).sample(64).unwrap();
    assert!((c.enclosed_area() - PI).abs() / PI < 1e-12);
}

/// Mode-`m` eigenvalue of the coupled problem from a direct 3x3 solve for
/// `u1 = A r^m`, `u2 = B r^m + C r^-m` with unit jump, flux continuity and a
/// no-flux wall.
fn annulus_mu_direct(r: f64, rw: f64, k1: f64, k2: f64, m: i32) -> f64 {
    let mf = m as f64;
    let a = Matrix3::new(
        -r.powi(m),
        r.powi(m),
        r.powi(-m),
        k1 * mf * r.powi(m - 1),
        -k2 * mf * r.powi(m - 1),
        k2 * mf * r.powi(-m - 1),
        0.0,
        mf * rw.powi(m - 1),
        -mf * rw.powi(-m - 1),
    );
    let x = a.lu().solve(&Vector3::new(1.0, 0.0, 0.0)).unwrap();
    (k1 * mf * x[0] * r.powi(m - 1)).abs()
}

/// Interior and exterior Dirichlet-to-Neumann eigenvalues, exterior from a 2x2 solve.
fn annulus_mut_direct(r: f64, rw: f64, p: &PhysicalParams, m: i32) -> f64 {
    let mf = m as f64;
    let s1 = p.k1 * mf / r;
    let a = Matrix2::new(
        r.powi(m),
        r.powi(-m),
        mf * rw.powi(m - 1),
        -mf * rw.powi(-m - 1),
    );
    let x = a.lu().solve(&Vector2::new(1.0, 0.0)).unwrap();
    // flux into the exterior phase along -nu
    let s2 = -p.k2 * mf * (x[0] * r.powi(m - 1) - x[1] * r.powi(-m - 1));
    let j = p.rho2 - p.rho1;
    (p.rho1 * p.rho1 * s1 + p.rho2 * p.rho2 * s2) / (j * j)
}

#[test]
fn annulus_oracle_agrees_with_direct_solves() {
    for &(r, rw, k1, k2) in &[
        (1.0, 2.0, 1.0, 1.0),
        (0.7, 3.0, 2.0, 0.5),
        (1.5, 1.9, 0.3, 4.0),
    ] {
        for m in 1..=8 {
            let mu = PhysicalParams::new(1.0, k1, k2, 1.0, 2.0, Model::Mu).unwrap();
            let o = annulus_oracle(r, rw, &mu, m as u32);
            let d = annulus_mu_direct(r, rw, k1, k2, m);
            assert!(((o - d) / d).abs() < 1e-12, "Mu r={r} m={m}: {o} vs {d}");
            let mut mut_ = mu;
            mut_.model = Model::MuT;
            let o = annulus_oracle(r, rw, &mut_, m as u32);
            let d = annulus_mut_direct(r, rw, &mut_, m);
            assert!(((o - d) / d).abs() < 1e-12, "MuT r={r} m={m}: {o} vs {d}");
        }
    }
}

#[test]
fn pinned_oracle_values() {
    let mu = PhysicalParams::unit(Model::Mu);
    assert!((annulus_oracle(1.0, 2.0, &mu, 2) - 0.9375).abs() < 1e-15);
    let mt = PhysicalParams::unit(Model::MuT);
    assert!((annulus_oracle(1.0, 2.0, &mt, 2) - (2.0 + 120.0 / 17.0)).abs() < 1e-13);
    assert_eq!(annulus_oracle(1.0, 2.0, &mu, 0), 0.0);
}

#[test]
fn solver_matches_direct_annulus_with_contrast() {
    let (r, rw) = (0.7, 3.0);
    let params = PhysicalParams::new(1.0, 2.0, 0.5, 1.0, 3.0, Model::Mu).unwrap();
    let n = 64;
    let set =
        InterfaceSet::single(Circle::new(Point::new(0.0, 0.0), r).sample(n).unwrap(), rw).unwrap();
    for m in 1..=6 {
        let h = BoundaryField::from_fn(&set, |_, j| {
            (m as f64 * 2.0 * PI * j as f64 / n as f64).cos()
        });
        let gh = apply_G(&set, &params, &h).unwrap();
        let d = annulus_mu_direct(r, rw, 2.0, 0.5, m);
        for (g, hv) in gh.values().iter().zip(h.values()) {
            assert!((g - d * hv).abs() < 1e-9 * d, "m={m}");
        }
    }
}

#[test]
fn matrix_mode_eigenvalue_for_phase_transition() {
    let n = 48;
    let set = InterfaceSet::single(
        Circle::new(Point::new(0.0, 0.0), 1.0).sample(n).unwrap(),
        2.0,
    )
    .unwrap();
    let params = PhysicalParams::unit(Model::MuT);
    let g = assemble_G_matrix(&set, &params).unwrap();
    let h = BoundaryField::from_fn(&set, |_, j| (2.0 * 2.0 * PI * j as f64 / n as f64).sin());
    let gh = g.apply(&h);
    let expected = 2.0 + 120.0 / 17.0;
    for (a, b) in gh.values().iter().zip(h.values()) {
        assert!((a - expected * b).abs() < 1e-9 * expected);
    }
}
