//! Linearisation about unions of disjoint circles and classification of its spectrum.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::geometry::{Circle, InterfaceSet, Point};
use crate::operators::{assemble_G_matrix, geometry_tag, OperatorMatrix};
use crate::spectral;
use crate::transmission::{Model, PhysicalParams};

/// Relative threshold for the kernel, unstable and reality tests.
pub const SPECTRAL_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub circles: Vec<Circle>,
    pub wall_radius: f64,
    #[serde(default)]
    pub wall_center: [f64; 2],
    pub model: Model,
}

impl EquilibriumConfig {
    pub fn new(
        circles: Vec<Circle>,
        wall_radius: f64,
        wall_center: Point,
        model: Model,
    ) -> Result<Self> {
        let eq = Self {
            circles,
            wall_radius,
            wall_center: [wall_center.re, wall_center.im],
            model,
        };
        eq.validate()?;
        Ok(eq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.circles.is_empty() {
            return Err(MuskatError::Geometry(
                "equilibrium needs at least one circle".into(),
            ));
        }
        let wc = Point::new(self.wall_center[0], self.wall_center[1]);
        for (i, c) in self.circles.iter().enumerate() {
            if !(c.radius > 0.0) {
                return Err(MuskatError::Geometry(format!(
                    "circle {i} has radius {}",
                    c.radius
                )));
            }
            if (c.center_point() - wc).norm() + c.radius >= self.wall_radius {
                return Err(MuskatError::Geometry(format!(
                    "circle {i} is not inside the wall"
                )));
            }
            for (j, d) in self.circles.iter().enumerate().skip(i + 1) {
                if (c.center_point() - d.center_point()).norm() <= c.radius + d.radius {
                    return Err(MuskatError::Geometry(format!(
                        "circles {i} and {j} intersect"
                    )));
                }
            }
        }
        if self.model == Model::MuT {
            let r0 = self.circles[0].radius;
            if self
                .circles
                .iter()
                .any(|c| (c.radius - r0).abs() > 1e-12 * r0)
            {
                return Err(MuskatError::Geometry(
                    "phase-transition equilibria have circles of equal radius".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.circles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circles.is_empty()
    }

    pub fn interface_set(&self, n_per_circle: usize) -> Result<InterfaceSet> {
        let comps = self
            .circles
            .iter()
            .map(|c| c.sample(n_per_circle))
            .collect::<Result<Vec<_>>>()?;
        InterfaceSet::new(
            comps,
            self.wall_radius,
            Point::new(self.wall_center[0], self.wall_center[1]),
        )
    }
}

/// Eigenvalue of `-(n-1)/R^2 - Laplace-Beltrami` on degree-`l` harmonics of the
/// `(n-1)`-sphere of radius `R`.
pub fn a_sigma_eigenvalue(n: u32, radius: f64, l: u32) -> f64 {
    let (n, l) = (n as f64, l as f64);
    (l * (l + n - 2.0) - (n - 1.0)) / (radius * radius)
}

/// Dimension of the equilibrium manifold near `m` disjoint spheres in `R^n`.
pub fn expected_kernel_dim(model: Model, m: usize, n: usize) -> usize {
    match model {
        Model::Mu => m * (n + 1),
        Model::MuT => m * n + 1,
    }
}

pub fn expected_unstable_count(model: Model, m: usize) -> usize {
    match model {
        Model::Mu => 0,
        Model::MuT => m.saturating_sub(1),
    }
}

/// Block-diagonal curvature linearisation on the nodes of each circle.
pub fn curvature_linearization(eq: &EquilibriumConfig, n_per_circle: usize) -> DMatrix<f64> {
    let m = eq.len();
    let total = m * n_per_circle;
    let mut a = DMatrix::zeros(total, total);
    for (j, c) in eq.circles.iter().enumerate() {
        let block = spectral::multiplier_matrix(n_per_circle, |k| {
            a_sigma_eigenvalue(2, c.radius, k as u32)
        });
        let o = j * n_per_circle;
        a.view_mut((o, o), (n_per_circle, n_per_circle))
            .copy_from(&block);
    }
    a
}

/// `L = sigma G A` on the equilibrium geometry.
pub fn assemble_linearization(
    eq: &EquilibriumConfig,
    params: &PhysicalParams,
    n_per_circle: usize,
) -> Result<OperatorMatrix> {
    eq.validate()?;
    if params.model != eq.model {
        return Err(MuskatError::ModelMismatch {
            expected: eq.model.name(),
            found: params.model.name(),
        });
    }
    let set = eq.interface_set(n_per_circle)?;
    let g = assemble_G_matrix(&set, params)?;
    let a = curvature_linearization(eq, n_per_circle);
    Ok(OperatorMatrix {
        entries: (&g.entries * a) * params.sigma,
        weights: g.weights,
        offsets: g.offsets,
        geometry_tag: geometry_tag(&set),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    NormallyStable,
    NormallyHyperbolic,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `|lambda| <=` this counts as zero.
    pub kernel: f64,
    /// `Re lambda >` this counts as unstable.
    pub unstable: f64,
    /// Relative singular-value cut for `rank(L)`; `rank(L^2)` uses its square.
    pub rank_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Eigenvalues `[re, im]` of `-L`, ascending by real part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub kernel_count: usize,
    pub unstable_count: usize,
    pub stable_count: usize,
    pub expected_kernel: usize,
    pub expected_unstable: usize,
    pub max_imag: f64,
    pub spectral_radius: f64,
    /// Smallest nonzero `|lambda|` over largest kernel `|lambda|`; audits the threshold.
    pub spectral_gap: f64,
    pub rank_l: usize,
    pub rank_l2: usize,
    pub semi_simple: bool,
    pub classification: Classification,
    pub thresholds: Thresholds,
}

impl SpectrumReport {
    /// Positive eigenvalues of `-L`, descending.
    pub fn unstable_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .eigenvalues
            .iter()
            .filter(|e| e[0] > self.thresholds.unstable)
            .map(|e| e[0])
            .collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

fn numerical_rank(m: &DMatrix<f64>, rel: f64) -> usize {
    let sv = m.clone().singular_values();
    let cut = rel * sv.max();
    sv.iter().filter(|&&s| s > cut).count()
}

/// Eigenvalues of `-L` (sequential dense Hessenberg QR).
fn eigenvalues_of_negated(l: &DMatrix<f64>) -> Result<Vec<num_complex::Complex64>> {
    faer::set_global_parallelism(faer::Par::Seq);
    let m = faer::Mat::<f64>::from_fn(l.nrows(), l.ncols(), |i, j| -l[(i, j)]);
    let ev = m
        .eigenvalues()
        .map_err(|e| MuskatError::Eigen(format!("{e:?}")))?;
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(MuskatError::Eigen("non-finite eigenvalue".into()));
    }
    Ok(ev
        .into_iter()
        .map(|z| num_complex::Complex64::new(z.re, z.im))
        .collect())
}

/// Full dense eigendecomposition of `-L` and its classification.
pub fn spectrum(l: &OperatorMatrix, eq: &EquilibriumConfig) -> Result<SpectrumReport> {
    let n = l.dim();
    let ev = eigenvalues_of_negated(&l.entries)?;
    let mut eigenvalues: Vec<[f64; 2]> = ev.iter().map(|z| [z.re, z.im]).collect();
    eigenvalues.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let thresholds = Thresholds {
        kernel: SPECTRAL_REL_TOL * rho,
        unstable: SPECTRAL_REL_TOL * rho,
        rank_rel: SPECTRAL_REL_TOL,
    };
    let mut kernel_count = 0;
    let mut unstable_count = 0;
    let mut largest_zero: f64 = 0.0;
    let mut smallest_nonzero = f64::INFINITY;
    for z in ev.iter() {
        let a = z.norm();
        if a <= thresholds.kernel {
            kernel_count += 1;
            largest_zero = largest_zero.max(a);
        } else {
            smallest_nonzero = smallest_nonzero.min(a);
            if z.re > thresholds.unstable {
                unstable_count += 1;
            }
        }
    }
    let max_imag = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let rank_l = numerical_rank(&l.entries, thresholds.rank_rel);
    let l2 = &l.entries * &l.entries;
    let rank_l2 = numerical_rank(&l2, thresholds.rank_rel * thresholds.rank_rel);
    let semi_simple = rank_l == rank_l2;
    let expected_kernel = expected_kernel_dim(eq.model, eq.len(), 2);
    let expected_unstable = expected_unstable_count(eq.model, eq.len());
    let classification = if !semi_simple || kernel_count != expected_kernel {
        Classification::Indeterminate
    } else if unstable_count == 0 {
        Classification::NormallyStable
    } else if unstable_count == expected_unstable {
        Classification::NormallyHyperbolic
    } else {
        Classification::Indeterminate
    };
    Ok(SpectrumReport {
        eigenvalues,
        kernel_count,
        unstable_count,
        stable_count: n - kernel_count - unstable_count,
        expected_kernel,
        expected_unstable,
        max_imag,
        spectral_radius: rho,
        spectral_gap: if largest_zero > 0.0 {
            smallest_nonzero / largest_zero
        } else {
            f64::INFINITY
        },
        rank_l,
        rank_l2,
        semi_simple,
        classification,
        thresholds,
    })
}

/// Rayleigh quotient `<Lv, v> / <v, v>` of `cos(m theta)` on circle `j` (zero elsewhere).
pub fn mode_rayleigh_quotient(l: &OperatorMatrix, component: usize, m: u32) -> f64 {
    let (o0, o1) = (l.offsets[component], l.offsets[component + 1]);
    let n = o1 - o0;
    let mut v = nalgebra::DVector::zeros(l.dim());
    for i in 0..n {
        v[o0 + i] = (m as f64 * 2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
    }
    let lv = &l.entries * &v;
    lv.dot(&v) / v.dot(&v)
}
