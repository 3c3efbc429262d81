//! Closed planar curves stored as uniform parameter samples.
//!
//! Points are complex numbers `x + i y`. Curves are counterclockwise, so the outward
//! normal `nu = -i z' / |z'|` points away from the enclosed (disperse) phase, and the
//! mean curvature `H = -div nu` is negative on circles: `H = -1/R`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::field::BoundaryField;
use crate::spectral;

pub type Point = Complex64;

/// Relative threshold of the segment-distance simplicity sweep.
pub const SIMPLICITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCurve {
    points: Vec<Point>,
    tangent: Vec<Complex64>,
    speed: Vec<f64>,
    normal: Vec<Complex64>,
    curvature: Vec<f64>,
}

impl InterfaceCurve {
    /// Build a curve from `N` samples at `theta_j = 2 pi j / N`.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let curve = Self::unchecked(points)?;
        if curve.enclosed_area() <= 0.0 {
            return Err(MuskatError::Geometry(
                "curve is not counterclockwise (signed area <= 0)".into(),
            ));
        }
        if !curve.is_simple() {
            return Err(MuskatError::Geometry("curve self-intersects".into()));
        }
        Ok(curve)
    }

    /// Build from normalised Fourier coefficients (FFT layout, see [`spectral`]).
    /// The same curve resampled on `m >= n` nodes by trigonometric interpolation.
    pub(crate) fn refined(&self, m: usize) -> Result<Self> {
        Self::unchecked(spectral::refine(&self.points, m))
    }

    pub fn from_coefficients(coeffs: &[Complex64]) -> Result<Self> {
        Self::new(spectral::inverse(coeffs))
    }

    fn unchecked(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        if n < 8 || n % 2 != 0 {
            return Err(MuskatError::Geometry(format!(
                "node count must be even and at least 8, got {n}"
            )));
        }
        if points
            .iter()
            .any(|p| !p.re.is_finite() || !p.im.is_finite())
        {
            return Err(MuskatError::Geometry("non-finite node coordinates".into()));
        }
        let coeffs = spectral::forward(&points);
        let mut c1 = coeffs.clone();
        let mut c2 = coeffs;
        for (k, (a, b)) in c1.iter_mut().zip(c2.iter_mut()).enumerate() {
            let m = spectral::wavenumber(k, n) as f64;
            if k == n / 2 {
                *a = Complex64::new(0.0, 0.0);
                *b *= -m * m;
            } else {
                *a *= Complex64::new(0.0, m);
                *b *= -m * m;
            }
        }
        let tangent = spectral::inverse(&c1);
        let second = spectral::inverse(&c2);
        let speed: Vec<f64> = tangent.iter().map(|t| t.norm()).collect();
        if speed.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
            return Err(MuskatError::Geometry("degenerate parameterisation".into()));
        }
        let normal = tangent
            .iter()
            .zip(&speed)
            .map(|(t, s)| Complex64::new(t.im, -t.re) / s)
            .collect();
        let curvature = tangent
            .iter()
            .zip(&second)
            .zip(&speed)
            .map(|((d1, d2), s)| -(d1.conj() * d2).im / (s * s * s))
            .collect();
        Ok(Self {
            points,
            tangent,
            speed,
            normal,
            curvature,
        })
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Parameter derivative `z'(theta_j)`.
    pub fn tangent(&self) -> &[Complex64] {
        &self.tangent
    }

    /// `|z'(theta_j)|`.
    pub fn speed(&self) -> &[f64] {
        &self.speed
    }

    /// Outward unit normal.
    pub fn normal(&self) -> &[Complex64] {
        &self.normal
    }

    /// Mean curvature `H = -div nu` at each node.
    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.points.len() as f64
    }

    /// Arclength quadrature weights of the periodic trapezoid rule.
    pub fn weights(&self) -> Vec<f64> {
        let h = 2.0 * PI / self.points.len() as f64;
        self.speed.iter().map(|s| s * h).collect()
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        spectral::forward(&self.points)
    }

    /// Signed enclosed area, `1/2 \oint (x dy - y dx)`.
    pub fn enclosed_area(&self) -> f64 {
        let h = PI / self.points.len() as f64;
        self.points
            .iter()
            .zip(&self.tangent)
            .map(|(z, t)| (z.conj() * t).im)
            .sum::<f64>()
            * h
    }

    pub fn perimeter(&self) -> f64 {
        self.weights().iter().sum()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        // \int x dA = 1/2 \oint x^2 dy, \int y dA = -1/2 \oint y^2 dx
        let h = 2.0 * PI / self.points.len() as f64;
        let mut mx = 0.0;
        let mut my = 0.0;
        for (z, t) in self.points.iter().zip(&self.tangent) {
            mx += 0.5 * z.re * z.re * t.im;
            my -= 0.5 * z.im * z.im * t.re;
        }
        Complex64::new(mx, my) * h / self.enclosed_area()
    }

    /// Mean node spacing in arclength.
    pub fn node_spacing(&self) -> f64 {
        self.perimeter() / self.points.len() as f64
    }

    /// Trigonometric interpolant of the parameterisation at `theta`.
    pub fn evaluate(&self, coeffs: &[Complex64], theta: f64) -> Point {
        spectral::evaluate(coeffs, theta)
    }

    /// Winding-number containment test against the node polygon.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.points.len();
        let mut winding = 0.0;
        for j in 0..n {
            let a = self.points[j] - p;
            let b = self.points[(j + 1) % n] - p;
            winding += (b / a).arg();
        }
        (winding / (2.0 * PI)).round() as i64 != 0
    }

    /// Minimum distance over non-adjacent segment pairs of the node polygon.
    pub fn min_self_segment_distance(&self) -> f64 {
        let n = self.points.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let (a0, a1) = (self.points[i], self.points[(i + 1) % n]);
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (b0, b1) = (self.points[j], self.points[(j + 1) % n]);
                best = best.min(segment_distance(a0, a1, b0, b1));
            }
        }
        best
    }

    pub fn is_simple(&self) -> bool {
        self.min_self_segment_distance() > SIMPLICITY_TOL * self.perimeter()
    }

    /// Apply a rigid translation.
    pub fn translated(&self, by: Point) -> Result<Self> {
        Self::new(self.points.iter().map(|p| p + by).collect())
    }
}

/// Curvature at every node (alias for [`InterfaceCurve::curvature`]).
pub fn curvature(curve: &InterfaceCurve) -> Vec<f64> {
    curve.curvature().to_vec()
}

pub fn enclosed_area(curve: &InterfaceCurve) -> f64 {
    curve.enclosed_area()
}

pub fn perimeter(curve: &InterfaceCurve) -> f64 {
    curve.perimeter()
}

pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn cross(a: Point, b: Point) -> f64 {
    a.re * b.im - a.im * b.re
}

pub(crate) fn segment_distance(a0: Point, a1: Point, b0: Point, b1: Point) -> f64 {
    let d1 = cross(a1 - a0, b0 - a0);
    let d2 = cross(a1 - a0, b1 - a0);
    let d3 = cross(b1 - b0, a0 - b0);
    let d4 = cross(b1 - b0, a1 - b0);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

/// The disperse phase: `m >= 1` disjoint closed curves inside a circular wall.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceSet {
    components: Vec<InterfaceCurve>,
    wall_radius: f64,
    wall_center: Point,
}

impl InterfaceSet {
    pub fn new(
        components: Vec<InterfaceCurve>,
        wall_radius: f64,
        wall_center: Point,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(MuskatError::Geometry(
                "at least one component required".into(),
            ));
        }
        if !(wall_radius > 0.0 && wall_radius.is_finite()) {
            return Err(MuskatError::Geometry(format!(
                "wall radius must be positive, got {wall_radius}"
            )));
        }
        for (j, c) in components.iter().enumerate() {
            if c.points()
                .iter()
                .any(|p| (p - wall_center).norm() >= wall_radius)
            {
                return Err(MuskatError::Geometry(format!(
                    "component {j} is not strictly inside the wall"
                )));
            }
        }
        for i in 0..components.len() {
            for j in (i + 1)..components.len() {
                let (a, b) = (&components[i], &components[j]);
                if component_gap_segments(a, b) <= 0.0
                    || a.contains(b.points()[0])
                    || b.contains(a.points()[0])
                {
                    return Err(MuskatError::Geometry(format!(
                        "components {i} and {j} intersect or are nested"
                    )));
                }
            }
        }
        Ok(Self {
            components,
            wall_radius,
            wall_center,
        })
    }

    pub fn single(curve: InterfaceCurve, wall_radius: f64) -> Result<Self> {
        Self::new(vec![curve], wall_radius, Complex64::new(0.0, 0.0))
    }

    pub fn components(&self) -> &[InterfaceCurve] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn wall_radius(&self) -> f64 {
        self.wall_radius
    }

    pub fn wall_center(&self) -> Point {
        self.wall_center
    }

    pub fn total_nodes(&self) -> usize {
        self.components.iter().map(|c| c.n_points()).sum()
    }

    /// Start index of each component in concatenated node order, plus the total.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.components.len() + 1);
        let mut acc = 0;
        out.push(0);
        for c in &self.components {
            acc += c.n_points();
            out.push(acc);
        }
        out
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().flat_map(|c| c.weights()).collect()
    }

    pub fn points(&self) -> Vec<Point> {
        self.components
            .iter()
            .flat_map(|c| c.points().iter().copied())
            .collect()
    }

    pub fn normals(&self) -> Vec<Complex64> {
        self.components
            .iter()
            .flat_map(|c| c.normal().iter().copied())
            .collect()
    }

    /// Mean curvature on all nodes.
    pub fn curvature(&self) -> BoundaryField {
        BoundaryField::new(
            self.components
                .iter()
                .flat_map(|c| c.curvature().iter().copied())
                .collect(),
            self.offsets(),
        )
    }

    pub fn areas(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.enclosed_area()).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.areas().iter().sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.components.iter().map(|c| c.perimeter()).sum()
    }

    /// Equivalent radius of the mean component, `sqrt(A / (m pi))`.
    pub fn characteristic_radius(&self) -> f64 {
        (self.total_area() / (self.len() as f64 * PI)).sqrt()
    }

    /// Minimum node-to-node distance between two distinct components.
    pub fn min_component_gap(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                best = best.min(node_gap(&self.components[i], &self.components[j]));
            }
        }
        best
    }

    /// Minimum distance from any node to the wall.
    pub fn min_wall_distance(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.points().iter())
            .map(|p| self.wall_radius - (p - self.wall_center).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

fn node_gap(a: &InterfaceCurve, b: &InterfaceCurve) -> f64 {
    let mut best = f64::INFINITY;
    for p in a.points() {
        for q in b.points() {
            best = best.min((p - q).norm());
        }
    }
    best
}

fn component_gap_segments(a: &InterfaceCurve, b: &InterfaceCurve) -> f64 {
    let (na, nb) = (a.n_points(), b.n_points());
    let mut best = f64::INFINITY;
    for i in 0..na {
        let (a0, a1) = (a.points()[i], a.points()[(i + 1) % na]);
        for j in 0..nb {
            let (b0, b1) = (b.points()[j], b.points()[(j + 1) % nb]);
            best = best.min(segment_distance(a0, a1, b0, b1));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        Self {
            center: [center.re, center.im],
            radius,
        }
    }

    pub fn center_point(&self) -> Point {
        Complex64::new(self.center[0], self.center[1])
    }

    /// Uniformly sampled curve of this circle.
    pub fn sample(&self, n: usize) -> Result<InterfaceCurve> {
        make_perturbed_circle(self.radius, self.center_point(), &[], n)
    }
}

/// One Fourier mode of a radial perturbation `a cos(m theta + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub wavenumber: u32,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Mode {
    pub fn new(wavenumber: u32, amplitude: f64) -> Self {
        Self {
            wavenumber,
            amplitude,
            phase: 0.0,
        }
    }
}

/// Normal graph over a circle: radial profile `R + sum a_m cos(m theta + phase_m)`.
pub fn make_perturbed_circle(
    radius: f64,
    center: Point,
    modes: &[Mode],
    n: usize,
) -> Result<InterfaceCurve> {
    if !(radius > 0.0) {
        return Err(MuskatError::Geometry(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let total: f64 = modes.iter().map(|m| m.amplitude.abs()).sum();
    if total >= radius / 2.0 {
        return Err(MuskatError::Geometry(format!(
            "perturbation amplitude {total} must stay below R/2 = {}",
            radius / 2.0
        )));
    }
    let points = (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            let r = radius
                + modes
                    .iter()
                    .map(|m| m.amplitude * (m.wavenumber as f64 * t + m.phase).cos())
                    .sum::<f64>();
            center + Complex64::from_polar(r, t)
        })
        .collect();
    InterfaceCurve::new(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleFit {
    pub circle: Circle,
    /// Maximum node distance to the fitted circle.
    pub residual: f64,
}

/// Algebraic least-squares circle followed by one Gauss-Newton step on the
/// geometric distances.
pub fn fit_circle(curve: &InterfaceCurve) -> CircleFit {
    let pts = curve.points();
    // Kasa: x^2 + y^2 + D x + E y + F = 0
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for p in pts {
        let row = nalgebra::Vector3::new(p.re, p.im, 1.0);
        ata += row * row.transpose();
        atb += row * -(p.norm_sqr());
    }
    let sol = ata
        .lu()
        .solve(&atb)
        .unwrap_or_else(|| nalgebra::Vector3::new(0.0, 0.0, 0.0));
    let mut center = Complex64::new(-sol[0] / 2.0, -sol[1] / 2.0);
    let mut radius = (center.norm_sqr() - sol[2]).max(0.0).sqrt();

    let mut jtj = nalgebra::Matrix3::<f64>::zeros();
    let mut jtr = nalgebra::Vector3::<f64>::zeros();
    for p in pts {
        let d = p - center;
        let dist = d.norm();
        if dist == 0.0 {
            continue;
        }
        let r = dist - radius;
        let row = nalgebra::Vector3::new(-d.re / dist, -d.im / dist, -1.0);
        jtj += row * row.transpose();
        jtr += row * r;
    }
    if let Some(step) = jtj.lu().solve(&jtr) {
        center -= Complex64::new(step[0], step[1]);
        radius -= step[2];
    }
    let residual = pts
        .iter()
        .map(|p| ((p - center).norm() - radius).abs())
        .fold(0.0, f64::max);
    CircleFit {
        circle: Circle::new(center, radius),
        residual,
    }
}

pub fn fit_circles(interfaces: &InterfaceSet) -> Vec<CircleFit> {
    interfaces.components().iter().map(fit_circle).collect()
}

/// Height function over a reference circle, sampled at uniform angles.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalGraph {
    pub reference: Circle,
    pub heights: Vec<f64>,
}

impl NormalGraph {
    pub fn new(reference: Circle, heights: Vec<f64>) -> Result<Self> {
        if heights.iter().any(|h| h.abs() >= reference.radius) {
            return Err(MuskatError::Geometry("heights must satisfy |h| < R".into()));
        }
        Ok(Self { reference, heights })
    }

    /// Measure `curve` as a normal graph over `reference` by casting rays from its
    /// centre at `n` uniform angles. The curve must be star-shaped about the centre.
    pub fn from_curve(reference: Circle, curve: &InterfaceCurve, n: usize) -> Result<Self> {
        let c = reference.center_point();
        let coeffs = curve.coefficients();
        let m = curve.n_points();
        let node_angles: Vec<f64> = curve.points().iter().map(|p| (p - c).arg()).collect();
        let mut heights = Vec::with_capacity(n);
        for k in 0..n {
            let theta = 2.0 * PI * k as f64 / n as f64;
            let dir = Complex64::from_polar(1.0, -theta);
            // start from the node with the closest polar angle
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, a) in node_angles.iter().enumerate() {
                let d = Complex64::from_polar(1.0, a - theta).arg().abs();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            let mut t = 2.0 * PI * best as f64 / m as f64;
            let mut converged = false;
            for _ in 0..50 {
                let z = spectral::evaluate(&coeffs, t) - c;
                let dz = spectral::evaluate_derivative(&coeffs, t, 1);
                let f = (z * dir).im;
                let df = (dz * dir).im;
                if df.abs() < 1e-300 {
                    break;
                }
                let step = f / df;
                t -= step;
                if step.abs() < 1e-15 {
                    converged = true;
                    break;
                }
            }
            let z = spectral::evaluate(&coeffs, t) - c;
            if !converged && (z * dir).im.abs() > 1e-12 * reference.radius {
                return Err(MuskatError::Geometry(
                    "curve is not a normal graph over the reference circle".into(),
                ));
            }
            heights.push((z * dir).re - reference.radius);
        }
        Self::new(reference, heights)
    }

    /// The curve `{p + h(p) nu(p)}`.
    pub fn realize(&self) -> Result<InterfaceCurve> {
        let n = self.heights.len();
        let c = self.reference.center_point();
        let points = self
            .heights
            .iter()
            .enumerate()
            .map(|(j, h)| {
                let t = 2.0 * PI * j as f64 / n as f64;
                c + Complex64::from_polar(self.reference.radius + h, t)
            })
            .collect();
        InterfaceCurve::new(points)
    }
}

/// Fourier amplitudes of the height function: `h = sum_{m >= 0} Re(a_m e^{i m theta})`.
pub fn mode_amplitudes(graph: &NormalGraph) -> std::collections::BTreeMap<usize, Complex64> {
    let n = graph.heights.len();
    let c = spectral::forward_real(&graph.heights);
    let mut out = std::collections::BTreeMap::new();
    for m in 0..=n / 2 {
        let a = if m == 0 || (n % 2 == 0 && m == n / 2) {
            c[m]
        } else {
            2.0 * c[m]
        };
        out.insert(m, a);
    }
    out
}

/// Largest radius for which interior and exterior tangent balls fit at every node.
///
/// Minimum of the local curvature radii `1/|H|`, the self tangent-ball radius
/// (largest ball tangent at a node that contains no other node of the same curve),
/// half the smallest gap between components and half the smallest node-to-wall
/// distance.
pub fn ball_condition_radius(interfaces: &InterfaceSet) -> f64 {
    let mut r = f64::INFINITY;
    for c in interfaces.components() {
        for &h in c.curvature() {
            if h != 0.0 {
                r = r.min(1.0 / h.abs());
            }
        }
        r = r.min(self_tangent_ball_radius(c));
        if c.min_self_segment_distance() <= SIMPLICITY_TOL * c.perimeter() {
            return 0.0;
        }
    }
    if interfaces.len() > 1 {
        r = r.min(0.5 * interfaces.min_component_gap());
    }
    r = r.min(0.5 * interfaces.min_wall_distance());
    r.max(0.0)
}

fn self_tangent_ball_radius(curve: &InterfaceCurve) -> f64 {
    let pts = curve.points();
    let mut best = f64::INFINITY;
    for (i, p) in pts.iter().enumerate() {
        let nu = curve.normal()[i];
        for (j, q) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = q - p;
            let along = d.re * nu.re + d.im * nu.im;
            if along.abs() > 0.0 {
                best = best.min(d.norm_sqr() / (2.0 * along.abs()));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> Point {
        Complex64::new(0.0, 0.0)
    }

    fn circle(r: f64, c: Point, n: usize) -> InterfaceCurve {
        make_perturbed_circle(r, c, &[], n).unwrap()
    }

    #[test]
    fn unit_circle_has_curvature_minus_one() {
        for n in [16, 32, 64] {
            let c = circle(1.0, origin(), n);
            for &h in c.curvature() {
                assert!((h + 1.0).abs() < 1e-13);
            }
        }
        let c = circle(2.0, Complex64::new(0.3, -0.1), 32);
        for &h in c.curvature() {
            assert!((h + 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn circle_area_and_perimeter() {
        let c = circle(1.0, origin(), 64);
        assert!((c.enclosed_area() - PI).abs() / PI < 1e-12);
        assert!((c.perimeter() - 2.0 * PI).abs() < 1e-12);
        let c = circle(1.5, origin(), 64);
        assert!((c.enclosed_area() - 2.25 * PI).abs() < 1e-12);
    }

    #[test]
    fn clockwise_and_odd_curves_are_rejected() {
        let pts: Vec<Point> = (0..16)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / 16.0))
            .collect();
        assert!(matches!(
            InterfaceCurve::new(pts),
            Err(MuskatError::Geometry(_))
        ));
        let pts: Vec<Point> = (0..15)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 15.0))
            .collect();
        assert!(InterfaceCurve::new(pts).is_err());
    }

    #[test]
    fn figure_eight_is_not_simple() {
        // lemniscate-like curve crossing itself at the origin, traversed so that the
        // signed area stays positive is impossible; check the sweep directly
        let pts: Vec<Point> = (0..64)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / 64.0;
                Complex64::new(t.sin(), (2.0 * t).sin() * 0.5 + 0.01 * t.cos())
            })
            .collect();
        let c = InterfaceCurve::unchecked(pts).unwrap();
        assert!(!c.is_simple());
    }

    #[test]
    fn oversized_perturbation_is_rejected() {
        let err = make_perturbed_circle(1.0, origin(), &[Mode::new(2, 0.6)], 32);
        assert!(err.is_err());
    }

    #[test]
    fn empty_modes_give_exact_circle_and_fit_recovers_it() {
        let c0 = Complex64::new(0.25, -0.4);
        let c = make_perturbed_circle(1.3, c0, &[], 64).unwrap();
        let fit = fit_circle(&c);
        assert!((fit.circle.radius - 1.3).abs() < 1e-12);
        assert!((fit.circle.center_point() - c0).norm() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn mode_two_fit_residual_measures_deviation() {
        let c = make_perturbed_circle(1.0, origin(), &[Mode::new(2, 0.01)], 128).unwrap();
        let fit = fit_circle(&c);
        assert!(
            fit.residual >= 0.005 && fit.residual <= 0.015,
            "{}",
            fit.residual
        );
    }

    #[test]
    fn mode_one_is_a_translation_to_first_order() {
        let c = make_perturbed_circle(1.0, origin(), &[Mode::new(1, 0.1)], 128).unwrap();
        let fit = fit_circle(&c);
        let offset = fit.circle.center_point().norm();
        assert!((offset - 0.1).abs() < 0.1 * 0.1, "offset {offset}");
    }

    #[test]
    fn two_circle_fit() {
        let a = circle(1.0, Complex64::new(-2.0, 0.0), 64);
        let b = circle(1.3, Complex64::new(1.5, 0.0), 64);
        let set = InterfaceSet::new(vec![a, b], 5.0, origin()).unwrap();
        let fits = fit_circles(&set);
        assert!((fits[0].circle.radius - 1.0).abs() < 1e-12);
        assert!((fits[1].circle.radius - 1.3).abs() < 1e-12);
        assert!(fits.iter().all(|f| f.residual < 1e-12));
        assert!((set.perimeter() - 2.0 * PI * 2.3).abs() < 1e-11);
    }

    #[test]
    fn interface_set_rejects_overlap_and_wall_contact() {
        let a = circle(1.0, origin(), 32);
        let b = circle(1.0, Complex64::new(1.5, 0.0), 32);
        assert!(InterfaceSet::new(vec![a.clone(), b], 5.0, origin()).is_err());
        assert!(InterfaceSet::new(vec![a.clone()], 0.9, origin()).is_err());
        let inner = circle(0.3, origin(), 32);
        assert!(InterfaceSet::new(vec![a, inner], 5.0, origin()).is_err());
    }

    #[test]
    fn pure_mode_amplitudes() {
        let reference = Circle::new(origin(), 1.0);
        let heights: Vec<f64> = (0..32)
            .map(|j| 0.05 * (2.0 * 2.0 * PI * j as f64 / 32.0).cos())
            .collect();
        let g = NormalGraph::new(reference, heights).unwrap();
        let amps = mode_amplitudes(&g);
        for (m, a) in &amps {
            if *m == 2 {
                assert!((a - Complex64::new(0.05, 0.0)).norm() < 1e-15);
            } else {
                assert!(a.norm() < 1e-16);
            }
        }
        let g = NormalGraph::new(reference, vec![0.2; 16]).unwrap();
        let amps = mode_amplitudes(&g);
        assert!((amps[&0].re - 0.2).abs() < 1e-15);
        assert!(amps
            .iter()
            .filter(|(m, _)| **m != 0)
            .all(|(_, a)| a.norm() < 1e-16));
    }

    #[test]
    fn normal_graph_round_trip() {
        let reference = Circle::new(Complex64::new(0.1, 0.2), 1.0);
        let heights: Vec<f64> = (0..64)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / 64.0;
                0.03 * (3.0 * t).cos() - 0.02 * (2.0 * t).sin()
            })
            .collect();
        let g = NormalGraph::new(reference, heights.clone()).unwrap();
        let curve = g.realize().unwrap();
        let measured = NormalGraph::from_curve(reference, &curve, 64).unwrap();
        for (a, b) in measured.heights.iter().zip(&heights) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn ball_radius_examples() {
        let set = InterfaceSet::single(circle(1.0, origin(), 64), 3.0).unwrap();
        assert!((ball_condition_radius(&set) - 1.0).abs() < 1e-12);

        let a = circle(1.0, Complex64::new(-1.5, 0.0), 64);
        let b = circle(1.0, Complex64::new(1.5, 0.0), 64);
        let set = InterfaceSet::new(vec![a, b], 10.0, origin()).unwrap();
        assert!((ball_condition_radius(&set) - 0.5).abs() < 1e-12);

        let a = circle(1.0, origin(), 64);
        let b = circle(1.0, Complex64::new(2.0 + 1e-9, 0.0), 64);
        let set = InterfaceSet::new(vec![a, b], 10.0, origin()).unwrap();
        let r = ball_condition_radius(&set);
        assert!((r - 5e-10).abs() < 1e-15, "{r}");
    }

    #[test]
    fn containment() {
        let c = circle(1.0, origin(), 32);
        assert!(c.contains(Complex64::new(0.2, 0.3)));
        assert!(!c.contains(Complex64::new(1.2, 0.3)));
        assert!((c.centroid()).norm() < 1e-14);
    }
}
