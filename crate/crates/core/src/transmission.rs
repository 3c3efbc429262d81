//! Nyström solvers for the elliptic problems behind the interface operator.
//!
//! Everything reduces to two Dirichlet-to-Neumann maps with unit mobility:
//!
//! * `D1 h = d_nu p1` for the harmonic extension of `h` into each component of the
//!   disperse phase (free-space double layer, second kind).
//! * `D2 h = -d_nu p2` for the harmonic extension into the continuous phase with a
//!   homogeneous Neumann condition on the circular wall. The wall is built into the
//!   kernel through the Neumann function of the disk,
//!   `N(x, y) = -(1/2pi) [ln|x - y| + ln|a^2 - x conj(y)|]` (coordinates relative to
//!   the wall centre), so only the interfaces carry unknowns. Point sources inside
//!   each component and an additive constant complete the double layer on the
//!   multiply connected phase.
//!
//! Normal derivatives of double layers use Maue's identity `T = d/ds S d/ds` on the
//! self-interaction blocks, with Kress' product quadrature for the logarithmic
//! kernel of `S`; well-separated blocks use the plain trapezoid rule.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::field::BoundaryField;
use crate::geometry::{InterfaceCurve, InterfaceSet, Point};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Two-phase flow without phase transition.
    Mu,
    /// Two-phase flow with phase transition.
    #[serde(rename = "mut")]
    MuT,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Mu => "mu",
            Model::MuT => "mut",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Surface tension.
    pub sigma: f64,
    /// Mobility `kappa / mu_1` of the disperse phase.
    pub k1: f64,
    /// Mobility of the continuous phase.
    pub k2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub model: Model,
}

impl PhysicalParams {
    pub fn new(sigma: f64, k1: f64, k2: f64, rho1: f64, rho2: f64, model: Model) -> Result<Self> {
        let p = Self {
            sigma,
            k1,
            k2,
            rho1,
            rho2,
            model,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit surface tension, mobilities and densities `(1, 2)`.
    pub fn unit(model: Model) -> Self {
        Self {
            sigma: 1.0,
            k1: 1.0,
            k2: 1.0,
            rho1: 1.0,
            rho2: 2.0,
            model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma", self.sigma),
            ("k1", self.k1),
            ("k2", self.k2),
            ("rho1", self.rho1),
            ("rho2", self.rho2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MuskatError::Params(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.model == Model::MuT && self.rho1 == self.rho2 {
            return Err(MuskatError::Params(
                "phase transition requires rho1 != rho2".into(),
            ));
        }
        Ok(())
    }

    /// Density jump `rho2 - rho1`.
    pub fn rho_jump(&self) -> f64 {
        self.rho2 - self.rho1
    }

    pub fn k_max(&self) -> f64 {
        self.k1.max(self.k2)
    }

    /// Coefficient of the leading symbol `|m| / R` of the interface operator.
    pub fn effective_mobility(&self) -> f64 {
        match self.model {
            Model::Mu => self.k1 * self.k2 / (self.k1 + self.k2),
            Model::MuT => {
                let j = self.rho_jump();
                (self.rho1 * self.rho1 * self.k1 + self.rho2 * self.rho2 * self.k2) / (j * j)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual accepted from the dense solves and the flux balance.
    pub residual_tol: f64,
    /// Minimum gap between distinct interfaces, and to the wall, in node spacings.
    pub min_separation_spacings: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-9,
            min_separation_spacings: 3.0,
        }
    }
}

/// Kress weights `R_k` for `\int ln(4 sin^2((t - tau)/2)) f(tau) dtau`, indexed by the
/// node offset `k = i - j mod n`.
pub fn kress_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    let hf = half as f64;
    (0..n)
        .map(|k| {
            let d = PI * k as f64 / hf;
            let mut s = 0.0;
            for m in 1..half {
                s += (m as f64 * d).cos() / m as f64;
            }
            -2.0 * PI / hf * s - PI / (hf * hf) * (hf * d).cos()
        })
        .collect()
}

/// Free-space single layer on a closed curve, `(S psi)_i`, with Kress quadrature.
pub fn single_layer_self(curve: &InterfaceCurve) -> DMatrix<f64> {
    let n = curve.n_points();
    let r = kress_weights(n);
    let z = curve.points();
    let s = curve.speed();
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        let smooth = if i == j {
            -(1.0 / (4.0 * PI)) * (s[i] * s[i]).ln()
        } else {
            let dt = 0.5 * (curve.theta(i) - curve.theta(j));
            let ratio = (z[i] - z[j]).norm_sqr() / (4.0 * dt.sin().powi(2));
            -(1.0 / (4.0 * PI)) * ratio.ln()
        };
        let k = (i + n - j) % n;
        (-(1.0 / (4.0 * PI)) * r[k] + h * smooth) * s[j]
    })
}

/// Free-space double layer on a closed curve (smooth kernel, trapezoid rule).
pub fn double_layer_self(curve: &InterfaceCurve) -> DMatrix<f64> {
    let n = curve.n_points();
    let z = curve.points();
    let nu = curve.normal();
    let s = curve.speed();
    let hk = curve.curvature();
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            // limit (x - y).nu_y / |x - y|^2 -> -kappa/2 with kappa = -H
            h * hk[i] * s[i] / (4.0 * PI)
        } else {
            h * (nu[j] / (z[i] - z[j])).re * s[j] / (2.0 * PI)
        }
    })
}

/// Normal derivative of the free-space double layer on its own curve,
/// `T = d/ds S d/ds`.
///
/// The odd derivative annihilates the Nyquist mode on the node grid, so `T` is
/// formed on a twice refined grid and restricted back with the weighted adjoint
/// of an isometric prolongation, `T = W^{-1} U^T W_f T_f U`, which keeps `W T` symmetric.
pub fn hypersingular_self(curve: &InterfaceCurve) -> DMatrix<f64> {
    let n = curve.n_points();
    let fine = curve
        .refined(2 * n)
        .expect("refining a valid curve cannot fail");
    let sl = single_layer_self(&fine);
    let mut ds = spectral::differentiation_matrix(2 * n);
    for (i, s) in fine.speed().iter().enumerate() {
        ds.row_mut(i).scale_mut(1.0 / s);
    }
    let u = spectral::prolongation_matrix(n, 2 * n);
    let du = &ds * &u;
    let mut left = du.transpose();
    // W_f ds = (pi/n) D row-wise, and (W^{-1})_i = n / (2 pi s_i)
    for (i, s) in curve.speed().iter().enumerate() {
        left.row_mut(i).scale_mut(-1.0 / (2.0 * s));
    }
    for (j, s) in fine.speed().iter().enumerate() {
        left.column_mut(j).scale_mut(*s);
    }
    left * (sl * du)
}

fn rel(p: Point, c: Point) -> Complex64 {
    p - c
}

/// Which kernel parts to assemble for a block.
#[derive(Clone, Copy)]
struct BlockKernel {
    free: bool,
    image: Option<(Point, f64)>,
}

/// Double-layer block: targets on `target`, sources on `source` (distinct curves,
/// or the image part only when they coincide).
fn double_layer_block(
    target: &InterfaceCurve,
    source: &InterfaceCurve,
    kernel: BlockKernel,
) -> DMatrix<f64> {
    let (nt, ns) = (target.n_points(), source.n_points());
    let h = 2.0 * PI / ns as f64;
    let (x, y) = (target.points(), source.points());
    let (nuy, sy) = (source.normal(), source.speed());
    DMatrix::from_fn(nt, ns, |i, j| {
        let mut v = 0.0;
        if kernel.free {
            v += (nuy[j] / (x[i] - y[j])).re;
        }
        if let Some((c, a)) = kernel.image {
            let (xx, yy) = (rel(x[i], c), rel(y[j], c));
            v += (xx * nuy[j].conj() / (a * a - xx * yy.conj())).re;
        }
        h * v * sy[j] / (2.0 * PI)
    })
}

/// Mixed normal-derivative block `d_nu_x d_nu_y` of the kernel (smooth parts only).
fn mixed_block(
    target: &InterfaceCurve,
    source: &InterfaceCurve,
    kernel: BlockKernel,
) -> DMatrix<f64> {
    let (nt, ns) = (target.n_points(), source.n_points());
    let h = 2.0 * PI / ns as f64;
    let (x, y) = (target.points(), source.points());
    let (nux, nuy, sy) = (target.normal(), source.normal(), source.speed());
    DMatrix::from_fn(nt, ns, |i, j| {
        let mut v = 0.0;
        if kernel.free {
            let d = x[i] - y[j];
            v += (-(nux[i] * nuy[j]) / (d * d)).re;
        }
        if let Some((c, a)) = kernel.image {
            let (xx, yy) = (rel(x[i], c), rel(y[j], c));
            let den = a * a - xx * yy.conj();
            v += (a * a * nux[i] * nuy[j].conj() / (den * den)).re;
        }
        h * v * sy[j] / (2.0 * PI)
    })
}

/// Value of the disk Neumann function.
pub fn neumann_function(x: Point, z: Point, wall_center: Point, wall_radius: f64) -> f64 {
    let (xx, zz) = (x - wall_center, z - wall_center);
    let a2 = wall_radius * wall_radius;
    -((xx - zz).norm().ln() + (a2 - xx * zz.conj()).norm().ln()) / (2.0 * PI)
}

/// Normal derivative (in `x`, along `nu`) of the disk Neumann function.
pub fn neumann_function_flux(
    x: Point,
    nu: Complex64,
    z: Point,
    wall_center: Point,
    wall_radius: f64,
) -> f64 {
    let (xx, zz) = (x - wall_center, z - wall_center);
    let a2 = wall_radius * wall_radius;
    let d = 1.0 / (xx - zz) - zz.conj() / (a2 - xx * zz.conj());
    -(d * nu).re / (2.0 * PI)
}

fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let r = a * x - b;
    let scale = b.amax().max(a.amax() * x.amax());
    if scale == 0.0 {
        0.0
    } else {
        r.amax() / scale
    }
}

fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// LU-backed dense solve with residual verification.
#[derive(Debug, Clone)]
pub(crate) struct DenseSolver {
    matrix: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    tol: f64,
}

impl DenseSolver {
    pub(crate) fn new(matrix: DMatrix<f64>, tol: f64, what: &str) -> Result<Self> {
        let lu = matrix.clone().lu();
        if !lu.is_invertible() {
            return Err(MuskatError::Solver {
                message: format!("{what}: singular system"),
                residual: f64::INFINITY,
                condition: f64::INFINITY,
            });
        }
        Ok(Self { matrix, lu, tol })
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let x = self.lu.solve(b).ok_or_else(|| MuskatError::Solver {
            message: "dense solve failed".into(),
            residual: f64::INFINITY,
            condition: condition_estimate(&self.matrix),
        })?;
        let res = relative_residual(&self.matrix, &x, b);
        if !(res <= self.tol) {
            return Err(MuskatError::Solver {
                message: "residual above tolerance".into(),
                residual: res,
                condition: condition_estimate(&self.matrix),
            });
        }
        Ok(x)
    }

    pub(crate) fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let x = self.lu.solve(b).ok_or_else(|| MuskatError::Solver {
            message: "dense solve failed".into(),
            residual: f64::INFINITY,
            condition: condition_estimate(&self.matrix),
        })?;
        let r = &self.matrix * &x - b;
        let scale = b.amax().max(self.matrix.amax() * x.amax());
        let res = if scale == 0.0 { 0.0 } else { r.amax() / scale };
        if !(res <= self.tol) {
            return Err(MuskatError::Solver {
                message: "residual above tolerance".into(),
                residual: res,
                condition: condition_estimate(&self.matrix),
            });
        }
        Ok(x)
    }
}

/// Interior Dirichlet-to-Neumann map of one closed curve (unit mobility).
#[derive(Debug, Clone)]
pub struct InteriorDtn {
    solver: DenseSolver,
    hyper: DMatrix<f64>,
}

impl InteriorDtn {
    pub fn new(curve: &InterfaceCurve, options: &SolverOptions) -> Result<Self> {
        Self::with_hypersingular(curve, hypersingular_self(curve), options)
    }

    fn with_hypersingular(
        curve: &InterfaceCurve,
        hyper: DMatrix<f64>,
        options: &SolverOptions,
    ) -> Result<Self> {
        let n = curve.n_points();
        let mut k = double_layer_self(curve);
        for i in 0..n {
            k[(i, i)] -= 0.5;
        }
        Ok(Self {
            solver: DenseSolver::new(k, options.residual_tol, "interior double layer")?,
            hyper,
        })
    }

    /// `d_nu p` for the harmonic extension of `h`.
    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        let density = self.solver.solve(&DVector::from_column_slice(h))?;
        Ok((&self.hyper * density).as_slice().to_vec())
    }

    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.hyper.nrows();
        let inv = self.solver.solve_matrix(&DMatrix::identity(n, n))?;
        Ok(&self.hyper * inv)
    }
}

/// Solution of the exterior problem for one datum.
#[derive(Debug, Clone)]
pub struct ExteriorSolution {
    /// `-d_nu p2` on all interface nodes.
    pub flux: Vec<f64>,
    /// Average of `p2` over the wall.
    pub wall_mean: f64,
    /// Net flux through the wall (zero up to roundoff).
    pub wall_flux: f64,
}

/// Exterior Dirichlet-to-Neumann map of the continuous phase with a Neumann wall.
#[derive(Debug, Clone)]
pub struct ExteriorDtn {
    solver: DenseSolver,
    /// `[T_N | P]`: normal derivative of the double layer and of the point sources.
    derivative: DMatrix<f64>,
    n_nodes: usize,
    n_components: usize,
}

impl ExteriorDtn {
    pub fn new(interfaces: &InterfaceSet, options: &SolverOptions) -> Result<Self> {
        let hypers: Vec<_> = interfaces
            .components()
            .iter()
            .map(hypersingular_self)
            .collect();
        Self::with_hypersingular(interfaces, &hypers, options)
    }

    fn with_hypersingular(
        interfaces: &InterfaceSet,
        hypers: &[DMatrix<f64>],
        options: &SolverOptions,
    ) -> Result<Self> {
        let comps = interfaces.components();
        let m = comps.len();
        let offsets = interfaces.offsets();
        let n = interfaces.total_nodes();
        let (c, a) = (interfaces.wall_center(), interfaces.wall_radius());
        let sources = comps
            .iter()
            .map(interior_source_point)
            .collect::<Result<Vec<_>>>()?;

        let mut sys = DMatrix::<f64>::zeros(n + m + 1, n + m + 1);
        let mut der = DMatrix::<f64>::zeros(n, n + m);
        for (t, target) in comps.iter().enumerate() {
            let rt = offsets[t]..offsets[t + 1];
            for (s, source) in comps.iter().enumerate() {
                let cs = offsets[s]..offsets[s + 1];
                let kernel = BlockKernel {
                    free: t != s,
                    image: Some((c, a)),
                };
                let mut kb = double_layer_block(target, source, kernel);
                let mut tb = mixed_block(target, source, kernel);
                if t == s {
                    kb += double_layer_self(target);
                    tb += &hypers[t];
                }
                sys.view_mut((rt.start, cs.start), (rt.len(), cs.len()))
                    .copy_from(&kb);
                der.view_mut((rt.start, cs.start), (rt.len(), cs.len()))
                    .copy_from(&tb);
            }
            let pts = target.points();
            let nu = target.normal();
            for i in 0..target.n_points() {
                let row = rt.start + i;
                sys[(row, row)] += 0.5;
                for (l, z) in sources.iter().enumerate() {
                    sys[(row, n + l)] = neumann_function(pts[i], *z, c, a);
                    der[(row, n + l)] = neumann_function_flux(pts[i], nu[i], *z, c, a);
                }
                sys[(row, n + m)] = 1.0;
            }
        }
        let weights = interfaces.weights();
        for l in 0..m {
            for j in offsets[l]..offsets[l + 1] {
                sys[(n + l, j)] = weights[j];
            }
            sys[(n + m, n + l)] = 1.0;
        }
        Ok(Self {
            solver: DenseSolver::new(sys, options.residual_tol, "exterior double layer")?,
            derivative: der,
            n_nodes: n,
            n_components: m,
        })
    }

    pub fn solve(&self, h: &[f64]) -> Result<ExteriorSolution> {
        let (n, m) = (self.n_nodes, self.n_components);
        let mut rhs = DVector::zeros(n + m + 1);
        rhs.rows_mut(0, n).copy_from_slice(h);
        let sol = self.solver.solve(&rhs)?;
        let d = &self.derivative * sol.rows(0, n + m);
        let wall_flux = -sol.rows(n, m).sum();
        Ok(ExteriorSolution {
            flux: d.iter().map(|v| -v).collect(),
            wall_mean: sol[n + m],
            wall_flux,
        })
    }

    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve(h)?.flux)
    }

    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let (n, m) = (self.n_nodes, self.n_components);
        let mut rhs = DMatrix::zeros(n + m + 1, n);
        for i in 0..n {
            rhs[(i, i)] = 1.0;
        }
        let sol = self.solver.solve_matrix(&rhs)?;
        Ok(-(&self.derivative * sol.rows(0, n + m)))
    }
}

/// A point well inside the curve, used as the location of its point source.
fn interior_source_point(curve: &InterfaceCurve) -> Result<Point> {
    let dist = |p: Point| {
        curve
            .points()
            .iter()
            .map(|q| (p - q).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let centroid = curve.centroid();
    let spacing = curve.node_spacing();
    if curve.contains(centroid) && dist(centroid) > 2.0 * spacing {
        return Ok(centroid);
    }
    // fall back to the deepest point along the inward normals
    let mut best = (f64::NEG_INFINITY, centroid);
    for (p, nu) in curve.points().iter().zip(curve.normal()) {
        for frac in [0.25, 0.5, 0.75, 1.0] {
            let q = p - nu * frac * curve.perimeter() / (2.0 * PI);
            if curve.contains(q) {
                let d = dist(q);
                if d > best.0 {
                    best = (d, q);
                }
            }
        }
    }
    if best.0 > spacing {
        Ok(best.1)
    } else {
        Err(MuskatError::Geometry(
            "no interior point far enough from the interface for the point source".into(),
        ))
    }
}

/// Enforce the separation guard between interfaces and between interfaces and wall.
pub fn check_separation(interfaces: &InterfaceSet, options: &SolverOptions) -> Result<()> {
    let spacing = interfaces
        .components()
        .iter()
        .map(|c| c.node_spacing())
        .fold(0.0, f64::max);
    let guard = options.min_separation_spacings * spacing;
    if interfaces.len() > 1 {
        let gap = interfaces.min_component_gap();
        if gap < guard {
            return Err(MuskatError::Proximity(format!(
                "component gap {gap:.3e} below {guard:.3e}"
            )));
        }
    }
    let wall = interfaces.min_wall_distance();
    if wall < guard {
        return Err(MuskatError::Proximity(format!(
            "wall distance {wall:.3e} below {guard:.3e}"
        )));
    }
    Ok(())
}

/// Both Dirichlet-to-Neumann maps of a geometry, factorised once.
#[derive(Debug, Clone)]
pub struct DtnMaps {
    interior: Vec<InteriorDtn>,
    exterior: ExteriorDtn,
    offsets: Vec<usize>,
}

impl DtnMaps {
    pub fn new(interfaces: &InterfaceSet, options: &SolverOptions) -> Result<Self> {
        check_separation(interfaces, options)?;
        let comps = interfaces.components();
        let hypers: Vec<_> = comps.iter().map(hypersingular_self).collect();
        let interior = comps
            .iter()
            .zip(&hypers)
            .map(|(c, t)| InteriorDtn::with_hypersingular(c, t.clone(), options))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            interior,
            exterior: ExteriorDtn::with_hypersingular(interfaces, &hypers, options)?,
            offsets: interfaces.offsets(),
        })
    }

    /// Interior map `D1` (unit mobility), block diagonal over components.
    pub fn interior_apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(h.len());
        for (j, dtn) in self.interior.iter().enumerate() {
            out.extend(dtn.apply(&h[self.offsets[j]..self.offsets[j + 1]])?);
        }
        Ok(out)
    }

    pub fn exterior_apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.exterior.apply(h)
    }

    pub fn exterior_solve(&self, h: &[f64]) -> Result<ExteriorSolution> {
        self.exterior.solve(h)
    }

    pub fn interior_matrix(&self) -> Result<DMatrix<f64>> {
        let n = *self.offsets.last().unwrap();
        let mut out = DMatrix::zeros(n, n);
        for (j, dtn) in self.interior.iter().enumerate() {
            let block = dtn.matrix()?;
            let o = self.offsets[j];
            out.view_mut((o, o), (block.nrows(), block.ncols()))
                .copy_from(&block);
        }
        Ok(out)
    }

    pub fn exterior_matrix(&self) -> Result<DMatrix<f64>> {
        self.exterior.matrix()
    }
}

/// Output of the two-phase transmission solve.
#[derive(Debug, Clone)]
pub struct TransmissionSolution {
    /// `-k d_nu p` on the interface; this is `G h`.
    pub interface_flux: BoundaryField,
    /// Trace of the disperse-phase pressure `p1` on the interface before the
    /// mean-zero shift (the continuous-phase trace is `p1 + h`).
    pub densities: BoundaryField,
    /// Constant added to `p` so that its mean over the domain vanishes.
    pub mean_value: f64,
    /// Relative mismatch `|[[k d_nu p]]|` of the flux continuity condition.
    pub flux_residual: f64,
    /// Relative mismatch of the trace jump `[[p]] - h`.
    pub jump_residual: f64,
    /// Net flux through the wall.
    pub wall_flux: f64,
}

pub(crate) fn dtn_scale(interfaces: &InterfaceSet) -> f64 {
    interfaces
        .components()
        .iter()
        .map(|c| (c.n_points() as f64 / 2.0) * 2.0 * PI / c.perimeter())
        .fold(0.0, f64::max)
}

/// Two-phase transmission problem: harmonic in each phase, Neumann wall,
/// `[[p]] = h`, `[[k d_nu p]] = 0`, mean zero over the domain.
pub fn solve_mu_transmission(
    interfaces: &InterfaceSet,
    params: &PhysicalParams,
    h: &BoundaryField,
) -> Result<TransmissionSolution> {
    solve_mu_transmission_with(interfaces, params, h, &SolverOptions::default())
}

pub fn solve_mu_transmission_with(
    interfaces: &InterfaceSet,
    params: &PhysicalParams,
    h: &BoundaryField,
    options: &SolverOptions,
) -> Result<TransmissionSolution> {
    params.validate()?;
    if !h.is_compatible(interfaces) {
        return Err(MuskatError::Params(
            "field does not match the interface set".into(),
        ));
    }
    let maps = DtnMaps::new(interfaces, options)?;
    let coupling = MuCoupling::new(interfaces, params, &maps, options)?;
    coupling.solve(interfaces, params, &maps, h, options)
}

/// Bordered solve for the interior trace `f`: `(k1 D1 + k2 D2) f = -k2 D2 h`,
/// with `f` of zero weighted mean.
#[derive(Debug, Clone)]
pub(crate) struct MuCoupling {
    pub(crate) d1: DMatrix<f64>,
    pub(crate) d2: DMatrix<f64>,
    solver: DenseSolver,
}

impl MuCoupling {
    pub(crate) fn new(
        interfaces: &InterfaceSet,
        params: &PhysicalParams,
        maps: &DtnMaps,
        options: &SolverOptions,
    ) -> Result<Self> {
        let d1 = maps.interior_matrix()?;
        let d2 = maps.exterior_matrix()?;
        let n = d1.nrows();
        let w = interfaces.weights();
        let mut b = DMatrix::zeros(n + 1, n + 1);
        let sum = &d1 * params.k1 + &d2 * params.k2;
        b.view_mut((0, 0), (n, n)).copy_from(&sum);
        for i in 0..n {
            b[(i, n)] = 1.0;
            b[(n, i)] = w[i];
        }
        Ok(Self {
            d1,
            d2,
            solver: DenseSolver::new(b, options.residual_tol, "two-phase coupling")?,
        })
    }

    /// Interior trace `f` and the flux `G h = -k1 D1 f`.
    pub(crate) fn trace_and_flux(
        &self,
        params: &PhysicalParams,
        h: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.d1.nrows();
        let hv = DVector::from_column_slice(h);
        let rhs_top = -(&self.d2 * &hv) * params.k2;
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&rhs_top);
        let sol = self.solver.solve(&rhs)?;
        let f = sol.rows(0, n).into_owned();
        let flux = -(&self.d1 * &f) * params.k1;
        Ok((f.as_slice().to_vec(), flux.as_slice().to_vec()))
    }

    pub(crate) fn flux_matrix(&self, params: &PhysicalParams) -> Result<DMatrix<f64>> {
        let n = self.d1.nrows();
        let mut rhs = DMatrix::zeros(n + 1, n);
        let top = -(&self.d2 * params.k2);
        rhs.view_mut((0, 0), (n, n)).copy_from(&top);
        let sol = self.solver.solve_matrix(&rhs)?;
        Ok(-(&self.d1 * sol.rows(0, n)) * params.k1)
    }

    fn solve(
        &self,
        interfaces: &InterfaceSet,
        params: &PhysicalParams,
        maps: &DtnMaps,
        h: &BoundaryField,
        options: &SolverOptions,
    ) -> Result<TransmissionSolution> {
        let hv = h.values();
        let (f, flux) = self.trace_and_flux(params, hv)?;
        let outer: Vec<f64> = f.iter().zip(hv).map(|(a, b)| a + b).collect();
        let ext = maps.exterior_solve(&outer)?;
        // k2 d_nu p2 = -k2 D2 (f + h); flux continuity: k2 d_nu p2 = k1 d_nu p1
        let mut worst: f64 = 0.0;
        for (g, e) in flux.iter().zip(&ext.flux) {
            worst = worst.max((g - params.k2 * e).abs());
        }
        let scale = params.k_max() * dtn_scale(interfaces) * h.max_abs().max(f64::MIN_POSITIVE);
        let flux_residual = worst / scale;
        if !(flux_residual <= options.residual_tol) {
            return Err(MuskatError::Solver {
                message: "flux continuity residual above tolerance".into(),
                residual: flux_residual,
                condition: f64::NAN,
            });
        }
        let mean_value = mean_shift(interfaces, params, &f, &outer, &flux, &ext);
        let offsets = interfaces.offsets();
        Ok(TransmissionSolution {
            interface_flux: BoundaryField::new(flux, offsets.clone()),
            densities: BoundaryField::new(f, offsets),
            mean_value,
            flux_residual,
            jump_residual: 0.0,
            wall_flux: ext.wall_flux,
        })
    }
}

/// Constant `c` such that `p + c` has zero mean over the wall disk.
///
/// Uses `\int_D p = \oint (p d_n w - w d_n p)` with `w = |x - c|^2 / 4`.
fn mean_shift(
    interfaces: &InterfaceSet,
    params: &PhysicalParams,
    inner: &[f64],
    outer: &[f64],
    flux: &[f64],
    ext: &ExteriorSolution,
) -> f64 {
    let c = interfaces.wall_center();
    let a = interfaces.wall_radius();
    let pts = interfaces.points();
    let nus = interfaces.normals();
    let weights = interfaces.weights();
    let mut integral = 0.0;
    for i in 0..pts.len() {
        let x = pts[i] - c;
        let w = x.norm_sqr() / 4.0;
        let dw = (x.conj() * nus[i]).re / 2.0;
        // flux = -k d_nu p on both sides
        let dp1 = -flux[i] / params.k1;
        let dp2 = -flux[i] / params.k2;
        let inside = inner[i] * dw - w * dp1;
        let outside = outer[i] * dw - w * dp2;
        integral += (inside - outside) * weights[i];
    }
    // wall: d_n w = a/2, d_n p = 0, \oint p = 2 pi a * mean
    integral += 0.5 * a * 2.0 * PI * a * ext.wall_mean;
    -integral / (PI * a * a)
}

/// `S1 h = k1 d_nu p1` for the interior Dirichlet problem of one curve.
pub fn solve_dirichlet_interior(curve: &InterfaceCurve, k1: f64, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != curve.n_points() {
        return Err(MuskatError::Params("field does not match the curve".into()));
    }
    let dtn = InteriorDtn::new(curve, &SolverOptions::default())?;
    Ok(dtn.apply(h)?.into_iter().map(|v| k1 * v).collect())
}

/// `S2 h = -k2 d_nu p2` for the continuous phase with a Neumann wall.
pub fn solve_dirichlet_exterior_neumann(
    interfaces: &InterfaceSet,
    k2: f64,
    h: &BoundaryField,
) -> Result<BoundaryField> {
    if !h.is_compatible(interfaces) {
        return Err(MuskatError::Params(
            "field does not match the interface set".into(),
        ));
    }
    let options = SolverOptions::default();
    check_separation(interfaces, &options)?;
    let ext = ExteriorDtn::new(interfaces, &options)?;
    let flux = ext.apply(h.values())?;
    Ok(BoundaryField::new(
        flux.into_iter().map(|v| k2 * v).collect(),
        interfaces.offsets(),
    ))
}

/// Eigenvalue of the interface operator on `cos(m theta)` for a circle of radius
/// `radius` concentric with a wall of radius `wall_radius`.
pub fn annulus_oracle(radius: f64, wall_radius: f64, params: &PhysicalParams, m: u32) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let mf = m as f64;
    let q = (radius / wall_radius).powi(2 * m as i32);
    let (k1, k2) = (params.k1, params.k2);
    match params.model {
        Model::Mu => (mf / radius) * k1 * k2 * (1.0 - q) / (k1 * (1.0 + q) + k2 * (1.0 - q)),
        Model::MuT => {
            let s1 = k1 * mf / radius;
            let s2 = k2 * (mf / radius) * (1.0 - q) / (1.0 + q);
            let j = params.rho_jump();
            (params.rho1 * params.rho1 * s1 + params.rho2 * params.rho2 * s2) / (j * j)
        }
    }
}
