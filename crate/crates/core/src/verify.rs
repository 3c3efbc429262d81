//! The acceptance suite: ten named criteria, each reduced to a pass/fail verdict
//! with the measured numbers attached.

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::evolution::{self, ComponentSpec, InitialShape, RunOutcome, SimConfig, Termination};
use crate::field::BoundaryField;
use crate::geometry::{self, Circle, InterfaceCurve, InterfaceSet, Mode, NormalGraph, Point};
use crate::io;
use crate::operators::{apply_G, assemble_G_matrix};
use crate::stability::{self, EquilibriumConfig, SpectrumReport};
use crate::transmission::{annulus_oracle, Model, PhysicalParams};

pub const DEFAULT_SEED: u64 = 20240611;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

impl FromStr for Level {
    type Err = MuskatError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(MuskatError::Params(format!(
                "unknown level {other:?}, expected fast or full"
            ))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Fast => "fast",
            Level::Full => "full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "OPERATOR-SYM")]
    OperatorSym,
    #[serde(rename = "KERNEL-DIM")]
    KernelDim,
    #[serde(rename = "ORACLE-EQ")]
    OracleEq,
    #[serde(rename = "CONSERVE-MU")]
    ConserveMu,
    #[serde(rename = "LYAPUNOV")]
    Lyapunov,
    #[serde(rename = "SPECTRUM-COUNTS")]
    SpectrumCounts,
    #[serde(rename = "LINEAR-RATE")]
    LinearRate,
    #[serde(rename = "RIPENING")]
    Ripening,
    #[serde(rename = "GEOMETRY-CAL")]
    GeometryCal,
    #[serde(rename = "DETERMINISM")]
    Determinism,
}

impl Criterion {
    pub const ALL: [Criterion; 10] = [
        Criterion::OperatorSym,
        Criterion::KernelDim,
        Criterion::OracleEq,
        Criterion::ConserveMu,
        Criterion::Lyapunov,
        Criterion::SpectrumCounts,
        Criterion::LinearRate,
        Criterion::Ripening,
        Criterion::GeometryCal,
        Criterion::Determinism,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Criterion::OperatorSym => "OPERATOR-SYM",
            Criterion::KernelDim => "KERNEL-DIM",
            Criterion::OracleEq => "ORACLE-EQ",
            Criterion::ConserveMu => "CONSERVE-MU",
            Criterion::Lyapunov => "LYAPUNOV",
            Criterion::SpectrumCounts => "SPECTRUM-COUNTS",
            Criterion::LinearRate => "LINEAR-RATE",
            Criterion::Ripening => "RIPENING",
            Criterion::GeometryCal => "GEOMETRY-CAL",
            Criterion::Determinism => "DETERMINISM",
        }
    }

    pub fn number(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap() + 1
    }
}

impl FromStr for Criterion {
    type Err = MuskatError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| MuskatError::Params(format!("unknown criterion {s:?}")))
    }
}

/// One measured quantity against its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value >= limit,
        }
    }

    fn equal(name: impl Into<String>, value: usize, expected: usize) -> Self {
        Self {
            name: name.into(),
            value: value as f64,
            limit: expected as f64,
            passed: value == expected,
        }
    }

    fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            limit: 1.0,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion: Criterion,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Set when the criterion could not be evaluated at all.
    pub error: Option<String>,
}

impl CriterionResult {
    fn from_checks(criterion: Criterion, checks: Vec<Check>) -> Self {
        Self {
            criterion,
            passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
            checks,
            error: None,
        }
    }

    fn failed(criterion: Criterion, err: MuskatError) -> Self {
        Self {
            criterion,
            passed: false,
            checks: Vec::new(),
            error: Some(err.to_string()),
        }
    }

    /// `PASS  3 ORACLE-EQ  ...` with the failing checks named.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{verdict} {:>2} {:<16}",
            self.criterion.number(),
            self.criterion.id()
        );
        if let Some(e) = &self.error {
            s.push_str(&format!(" error: {e}"));
        }
        let failing: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} = {:.3e} (limit {:.3e})", c.name, c.value, c.limit))
            .collect();
        if !failing.is_empty() {
            s.push_str(&format!(" failing: {}", failing.join("; ")));
        } else if self.error.is_none() {
            s.push_str(&format!(" {} checks", self.checks.len()));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: Level,
    pub seed: u64,
    pub results: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failing(&self) -> Vec<Criterion> {
        self.results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.criterion)
            .collect()
    }
}

/// Resolution and run lengths per level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSettings {
    pub operator_n: usize,
    pub spectrum_n: usize,
    pub conserve_n: usize,
    pub linear_n: usize,
    pub linear_t_end: f64,
    pub ripening_n: usize,
    pub ripening_growth_t_end: f64,
    pub ripening_shrink_t_end: f64,
}

impl LevelSettings {
    pub fn for_level(level: Level) -> Self {
        match level {
            Level::Fast => Self {
                operator_n: 48,
                spectrum_n: 32,
                conserve_n: 32,
                linear_n: 32,
                linear_t_end: 2.0,
                ripening_n: 48,
                ripening_growth_t_end: 0.8,
                ripening_shrink_t_end: 0.3,
            },
            Level::Full => Self {
                operator_n: 64,
                spectrum_n: 64,
                conserve_n: 64,
                linear_n: 64,
                linear_t_end: 2.0,
                ripening_n: 64,
                ripening_growth_t_end: 1.2,
                ripening_shrink_t_end: 0.5,
            },
        }
    }
}

fn origin() -> Point {
    Point::new(0.0, 0.0)
}

fn shape(wall: f64, comps: Vec<(f64, [f64; 2], Vec<Mode>)>) -> InitialShape {
    InitialShape {
        wall_radius: wall,
        wall_center: [0.0, 0.0],
        components: comps
            .into_iter()
            .map(|(radius, center, modes)| ComponentSpec {
                radius,
                center,
                modes,
            })
            .collect(),
    }
}

pub fn conserve_config(n: usize) -> SimConfig {
    let initial = shape(
        3.0,
        vec![(
            1.0,
            [0.0, 0.0],
            vec![Mode::new(2, 0.05), Mode::new(3, 0.03)],
        )],
    );
    SimConfig::new(PhysicalParams::unit(Model::Mu), initial, n, 40.0, 0.1)
}

pub fn linear_rate_config(n: usize, t_end: f64) -> SimConfig {
    let initial = shape(2.0, vec![(1.0, [0.0, 0.0], vec![Mode::new(2, 1e-3)])]);
    SimConfig::new(PhysicalParams::unit(Model::Mu), initial, n, t_end, 0.05)
}

/// Equal unit circles at `(-2, 0)` and `(2, 0)` with radii shifted by `+-1e-3`.
pub fn ripening_growth_config(n: usize, t_end: f64) -> SimConfig {
    let initial = shape(
        6.0,
        vec![
            (1.0 + 1e-3, [-2.0, 0.0], vec![]),
            (1.0 - 1e-3, [2.0, 0.0], vec![]),
        ],
    );
    SimConfig::new(PhysicalParams::unit(Model::MuT), initial, n, t_end, 0.02)
}

pub fn ripening_shrink_config(n: usize, t_end: f64) -> SimConfig {
    let initial = shape(
        6.0,
        vec![(1.0, [-2.0, 0.0], vec![]), (1.2, [2.0, 0.0], vec![])],
    );
    SimConfig::new(PhysicalParams::unit(Model::MuT), initial, n, t_end, 0.05)
}

/// Runs and spectra shared between criteria, computed on first use.
pub struct Suite {
    pub level: Level,
    pub seed: u64,
    pub settings: LevelSettings,
    conserve: OnceCell<std::result::Result<RunOutcome, String>>,
    linear: OnceCell<std::result::Result<RunOutcome, String>>,
    growth: OnceCell<std::result::Result<RunOutcome, String>>,
    shrink: OnceCell<std::result::Result<RunOutcome, String>>,
}

fn cached<'a>(
    cell: &'a OnceCell<std::result::Result<RunOutcome, String>>,
    config: impl FnOnce() -> SimConfig,
) -> Result<&'a RunOutcome> {
    cell.get_or_init(|| evolution::run(&config()).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| MuskatError::Solver {
            message: e.clone(),
            residual: f64::NAN,
            condition: f64::NAN,
        })
}

impl Suite {
    pub fn new(level: Level, seed: u64) -> Self {
        Self {
            level,
            seed,
            settings: LevelSettings::for_level(level),
            conserve: OnceCell::new(),
            linear: OnceCell::new(),
            growth: OnceCell::new(),
            shrink: OnceCell::new(),
        }
    }

    fn conserve_run(&self) -> Result<&RunOutcome> {
        cached(&self.conserve, || conserve_config(self.settings.conserve_n))
    }

    fn linear_run(&self) -> Result<&RunOutcome> {
        cached(&self.linear, || {
            linear_rate_config(self.settings.linear_n, self.settings.linear_t_end)
        })
    }

    fn growth_run(&self) -> Result<&RunOutcome> {
        cached(&self.growth, || {
            ripening_growth_config(
                self.settings.ripening_n,
                self.settings.ripening_growth_t_end,
            )
        })
    }

    fn shrink_run(&self) -> Result<&RunOutcome> {
        cached(&self.shrink, || {
            ripening_shrink_config(
                self.settings.ripening_n,
                self.settings.ripening_shrink_t_end,
            )
        })
    }

    pub fn evaluate(&self, criterion: Criterion) -> CriterionResult {
        let checks = match criterion {
            Criterion::OperatorSym => self.operator_sym(),
            Criterion::KernelDim => self.kernel_dim(),
            Criterion::OracleEq => oracle_eq(),
            Criterion::ConserveMu => self.conserve_mu(),
            Criterion::Lyapunov => self.lyapunov(),
            Criterion::SpectrumCounts => self.spectrum_counts(),
            Criterion::LinearRate => self.linear_rate(),
            Criterion::Ripening => self.ripening(),
            Criterion::GeometryCal => geometry_cal(),
            Criterion::Determinism => self.determinism(),
        };
        match checks {
            Ok(c) => CriterionResult::from_checks(criterion, c),
            Err(e) => CriterionResult::failed(criterion, e),
        }
    }

    fn operator_sym(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        for (i, (set, params)) in random_geometries(self.seed, 5, self.settings.operator_n)?
            .iter()
            .enumerate()
        {
            let g = assemble_G_matrix(set, params)?;
            let ev = g.symmetrized_eigenvalues();
            let lmax = ev.last().copied().unwrap_or(0.0);
            let tag = format!("geometry {i} ({}, m = {})", params.model.name(), set.len());
            checks.push(Check::at_most(
                format!("{tag} symmetry defect"),
                g.symmetry_defect(),
                1e-8,
            ));
            checks.push(Check::at_least(
                format!("{tag} min eigenvalue / max eigenvalue"),
                ev[0] / lmax,
                -1e-8,
            ));
        }
        Ok(checks)
    }

    fn kernel_dim(&self) -> Result<Vec<Check>> {
        let n = self.settings.operator_n;
        let layouts: [Vec<(f64, [f64; 2], Vec<Mode>)>; 3] = [
            vec![(1.0, [1.5, -0.8], vec![Mode::new(2, 0.05)])],
            vec![
                (1.0, [-2.0, 0.5], vec![Mode::new(3, 0.04)]),
                (1.3, [2.2, -0.4], vec![Mode::new(2, 0.05)]),
            ],
            vec![
                (0.9, [-2.5, -0.5], vec![Mode::new(2, 0.03)]),
                (1.1, [2.5, 0.2], vec![]),
                (1.0, [0.3, 2.8], vec![Mode::new(3, 0.04)]),
            ],
        ];
        let mut checks = Vec::new();
        for model in [Model::Mu, Model::MuT] {
            let params = PhysicalParams::unit(model);
            for layout in &layouts {
                let set = shape(6.0, layout.clone()).build(n)?;
                let ev = assemble_G_matrix(&set, &params)?.symmetrized_eigenvalues();
                let lmax = ev.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
                let kernel = ev.iter().filter(|e| e.abs() <= 1e-6 * lmax).count();
                let expected = match model {
                    Model::Mu => set.len(),
                    Model::MuT => 1,
                };
                checks.push(Check::equal(
                    format!("{} m = {} kernel count", model.name(), set.len()),
                    kernel,
                    expected,
                ));
            }
        }
        Ok(checks)
    }

    fn conserve_mu(&self) -> Result<Vec<Check>> {
        let out = self.conserve_run()?;
        let a0 = out.steps[0].areas[0];
        let fit = out.final_circles[0];
        let mut checks = vec![Check::holds(
            format!(
                "terminated at equilibrium ({:?})",
                out.trajectory.termination
            ),
            out.trajectory.termination == Termination::Equilibrium,
        )];
        checks.push(Check::at_most(
            "relative area drift",
            out.area_drift()[0],
            1e-4,
        ));
        checks.push(Check::at_most(
            "final circle-fit residual",
            fit.residual,
            1e-6,
        ));
        checks.push(Check::at_most(
            "final radius error",
            (fit.circle.radius - (a0 / PI).sqrt()).abs(),
            1e-4,
        ));
        Ok(checks)
    }

    fn lyapunov(&self) -> Result<Vec<Check>> {
        let runs = [
            ("CONSERVE-MU run", self.conserve_run()?),
            ("LINEAR-RATE run", self.linear_run()?),
            ("RIPENING growth run", self.growth_run()?),
            ("RIPENING shrink run", self.shrink_run()?),
        ];
        Ok(runs
            .iter()
            .map(|(name, out)| {
                let p0 = out.steps[0].perimeter;
                Check::at_most(
                    format!("{name} max stepwise perimeter increase / P(0)"),
                    out.max_perimeter_increase() / p0,
                    1e-8,
                )
            })
            .collect())
    }

    fn spectrum_counts(&self) -> Result<Vec<Check>> {
        let n = self.settings.spectrum_n;
        let mut checks = Vec::new();
        for (model, eq, kernel, unstable) in spectrum_cases()? {
            let l = stability::assemble_linearization(&eq, &PhysicalParams::unit(model), n)?;
            let r = stability::spectrum(&l, &eq)?;
            let tag = format!("{} m = {}", model.name(), eq.len());
            checks.push(Check::equal(
                format!("{tag} kernel"),
                r.kernel_count,
                kernel,
            ));
            checks.push(Check::equal(
                format!("{tag} unstable"),
                r.unstable_count,
                unstable,
            ));
            checks.push(Check::at_most(
                format!("{tag} max |Im| / rho(L)"),
                r.max_imag / r.spectral_radius,
                1e-6,
            ));
            checks.push(Check::equal(
                format!("{tag} rank(L^2) vs rank(L)"),
                r.rank_l2,
                r.rank_l,
            ));
        }
        Ok(checks)
    }

    fn linear_rate(&self) -> Result<Vec<Check>> {
        let n = self.settings.linear_n;
        let eq =
            EquilibriumConfig::new(vec![Circle::new(origin(), 1.0)], 2.0, origin(), Model::Mu)?;
        let l = stability::assemble_linearization(&eq, &PhysicalParams::unit(Model::Mu), n)?;
        let eigen = stability::mode_rayleigh_quotient(&l, 0, 2);
        let out = self.linear_run()?;
        let series = mode_series(out, 0, 2, [0.0, 0.0])?;
        let fit = evolution::decay_rate_fit(&series)?;
        Ok(vec![
            Check::at_most(
                "assembled mode-2 eigenvalue vs 2.8125",
                (eigen - 2.8125).abs() / 2.8125,
                1e-6,
            ),
            Check::at_most(
                "fitted decay rate vs eigenvalue",
                (fit.rate - eigen).abs() / eigen,
                0.1,
            ),
            Check::at_least("fit R^2", fit.r_squared, 0.999),
        ])
    }

    fn ripening(&self) -> Result<Vec<Check>> {
        let n = self.settings.ripening_n;
        let eq = EquilibriumConfig::new(
            vec![
                Circle::new(Point::new(-2.0, 0.0), 1.0),
                Circle::new(Point::new(2.0, 0.0), 1.0),
            ],
            6.0,
            origin(),
            Model::MuT,
        )?;
        let l = stability::assemble_linearization(&eq, &PhysicalParams::unit(Model::MuT), n)?;
        let report: SpectrumReport = stability::spectrum(&l, &eq)?;
        let positive = report
            .unstable_eigenvalues()
            .first()
            .copied()
            .ok_or_else(|| MuskatError::Eigen("no positive eigenvalue".into()))?;

        let growth = self.growth_run()?;
        let diff: Vec<(f64, f64)> = growth
            .diagnostics
            .iter()
            .map(|d| {
                (
                    d.t,
                    equivalent_radius(d.areas[0]) - equivalent_radius(d.areas[1]),
                )
            })
            .collect();
        // a growing series: fit the decay rate of its reciprocal
        let inverse: Vec<(f64, f64)> = diff.iter().map(|&(t, d)| (t, 1.0 / d)).collect();
        let fit = evolution::decay_rate_fit(&inverse)?;

        let shrink = self.shrink_run()?;
        let small = if shrink.steps[0].areas[0] < shrink.steps[0].areas[1] {
            0
        } else {
            1
        };
        let decreasing = shrink
            .steps
            .windows(2)
            .all(|w| w[1].areas[small] < w[0].areas[small]);
        let growth_small_decreasing = growth
            .steps
            .windows(2)
            .all(|w| w[1].areas[1] < w[0].areas[1]);
        Ok(vec![
            Check::holds(
                "smaller area strictly decreasing (radii 1.0, 1.2)",
                decreasing,
            ),
            Check::holds(
                "smaller area strictly decreasing (radii 1 -+ 1e-3)",
                growth_small_decreasing,
            ),
            Check::at_most(
                "total area drift (radii 1.0, 1.2)",
                shrink.total_area_drift(),
                1e-4,
            ),
            Check::at_most(
                "total area drift (radii 1 -+ 1e-3)",
                growth.total_area_drift(),
                1e-4,
            ),
            Check::at_most(
                "growth rate vs positive eigenvalue of L",
                (fit.rate - positive).abs() / positive,
                0.1,
            ),
            Check::at_least("fit R^2", fit.r_squared, 0.999),
        ])
    }

    fn determinism(&self) -> Result<Vec<Check>> {
        let root = tempfile::tempdir()?;
        let a = root.path().join("a");
        let b = root.path().join("b");
        let files_a = write_artifacts(&a, self.seed)?;
        let files_b = write_artifacts(&b, self.seed)?;
        let mut checks = vec![Check::equal("artifact count", files_b.len(), files_a.len())];
        for (fa, fb) in files_a.iter().zip(&files_b) {
            let same = fs::read(fa)? == fs::read(fb)?;
            let name = fa.strip_prefix(&a).unwrap_or(fa).display().to_string();
            checks.push(Check::holds(format!("{name} byte-identical"), same));
        }
        Ok(checks)
    }
}

fn equivalent_radius(area: f64) -> f64 {
    (area / PI).sqrt()
}

/// Amplitude of mode `m` of component `j` over each snapshot, measured as a
/// normal graph over the equal-area circle about `center`.
pub fn mode_series(
    out: &RunOutcome,
    j: usize,
    m: usize,
    center: [f64; 2],
) -> Result<Vec<(f64, f64)>> {
    out.trajectory
        .snapshots
        .iter()
        .map(|s| {
            let curve = &s.interfaces.components()[j];
            let reference = Circle::new(
                Point::new(center[0], center[1]),
                equivalent_radius(curve.enclosed_area()),
            );
            let graph = NormalGraph::from_curve(reference, curve, curve.n_points())?;
            let amp = geometry::mode_amplitudes(&graph)
                .get(&m)
                .map_or(0.0, |a| a.norm());
            Ok((s.t, amp))
        })
        .collect()
}

/// `(model, equilibrium, expected kernel, expected unstable)` for the spectrum criterion.
pub fn spectrum_cases() -> Result<Vec<(Model, EquilibriumConfig, usize, usize)>> {
    let c = |x: f64, y: f64, r: f64| Circle::new(Point::new(x, y), r);
    Ok(vec![
        (
            Model::Mu,
            EquilibriumConfig::new(vec![c(0.5, 0.3, 1.0)], 3.0, origin(), Model::Mu)?,
            3,
            0,
        ),
        (
            Model::Mu,
            EquilibriumConfig::new(
                vec![c(-2.0, 0.0, 1.0), c(2.5, 0.0, 1.3)],
                6.0,
                origin(),
                Model::Mu,
            )?,
            6,
            0,
        ),
        (
            Model::MuT,
            EquilibriumConfig::new(vec![c(0.5, 0.3, 1.0)], 3.0, origin(), Model::MuT)?,
            3,
            0,
        ),
        (
            Model::MuT,
            EquilibriumConfig::new(
                vec![c(-2.0, 0.0, 1.0), c(2.0, 0.0, 1.0)],
                6.0,
                origin(),
                Model::MuT,
            )?,
            5,
            1,
        ),
        (
            Model::MuT,
            EquilibriumConfig::new(
                vec![c(-2.5, 0.0, 1.0), c(2.5, 0.0, 1.0), c(0.0, 2.5, 1.0)],
                6.0,
                origin(),
                Model::MuT,
            )?,
            7,
            2,
        ),
    ])
}

/// Seeded mildly perturbed configurations of one to three circles in a wall of
/// radius 6, alternating between the two models.
pub fn random_geometries(
    seed: u64,
    count: usize,
    n: usize,
) -> Result<Vec<(InterfaceSet, PhysicalParams)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots: [[f64; 2]; 3] = [[-2.5, -0.5], [2.5, -0.5], [0.0, 2.5]];
    (0..count)
        .map(|i| {
            let m = rng.gen_range(1..=3usize);
            let comps = (0..m)
                .map(|j| {
                    let base = if m == 1 { [0.0, 0.0] } else { slots[j] };
                    let center = [
                        base[0] + rng.gen_range(-0.3..0.3),
                        base[1] + rng.gen_range(-0.3..0.3),
                    ];
                    let radius = rng.gen_range(0.8..1.1);
                    let modes = [2u32, 3]
                        .iter()
                        .map(|&k| Mode {
                            wavenumber: k,
                            amplitude: rng.gen_range(-0.05..0.05),
                            phase: rng.gen_range(0.0..2.0 * PI),
                        })
                        .collect();
                    (radius, center, modes)
                })
                .collect();
            let model = if i % 2 == 0 { Model::Mu } else { Model::MuT };
            Ok((shape(6.0, comps).build(n)?, PhysicalParams::unit(model)))
        })
        .collect()
}

/// Relative error of the solver's mode eigenvalues against the annulus oracle,
/// worst over `m = 1..=8`.
pub fn oracle_error(n: usize) -> Result<f64> {
    let params = PhysicalParams::unit(Model::Mu);
    let set = InterfaceSet::single(Circle::new(origin(), 1.0).sample(n)?, 2.0)?;
    let w = set.weights();
    let mut worst: f64 = 0.0;
    for m in 1..=8u32 {
        let h = BoundaryField::from_fn(&set, |_, j| {
            (m as f64 * 2.0 * PI * j as f64 / n as f64).cos()
        });
        let gh = apply_G(&set, &params, &h)?;
        let lambda = gh.dot_weighted(&h, &w) / h.dot_weighted(&h, &w);
        let exact = annulus_oracle(1.0, 2.0, &params, m);
        worst = worst.max(((lambda - exact) / exact).abs());
    }
    Ok(worst)
}

fn oracle_eq() -> Result<Vec<Check>> {
    let e64 = oracle_error(64)?;
    let e128 = oracle_error(128)?;
    let e256 = oracle_error(256)?;
    let pinned = annulus_oracle(1.0, 2.0, &PhysicalParams::unit(Model::Mu), 2);
    Ok(vec![
        Check::at_most("pinned lambda_2 vs 0.9375", (pinned - 0.9375).abs(), 1e-15),
        Check::at_most("max relative error m = 1..8 at N = 256", e256, 1e-6),
        Check::at_least("error ratio N = 64 over N = 128", e64 / e128, 10.0),
    ])
}

/// Perimeter of the ellipse with semi-axes `a >= b` from the arithmetic-geometric mean.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let (mut x, mut y) = (a, b);
    let mut sum = 0.5 * (a * a - b * b);
    let mut pow = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (x - y);
        let (nx, ny) = (0.5 * (x + y), (x * y).sqrt());
        pow *= 2.0;
        sum += pow * c * c;
        x = nx;
        y = ny;
        if c.abs() < 1e-18 * a {
            break;
        }
    }
    // P = 2 pi (a^2 - sum_{n>=0} 2^{n-1} c_n^2) / M(a, b), c_0^2 = a^2 - b^2
    2.0 * PI * (a * a - sum) / x
}

fn ellipse(a: f64, b: f64, n: usize) -> Result<InterfaceCurve> {
    InterfaceCurve::new(
        (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                Point::new(a * t.cos(), b * t.sin())
            })
            .collect(),
    )
}

fn gauss_bonnet(curve: &InterfaceCurve) -> f64 {
    curve
        .curvature()
        .iter()
        .zip(curve.weights())
        .map(|(h, w)| h * w)
        .sum()
}

fn geometry_cal() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let circle = Circle::new(origin(), 1.0).sample(64)?;
    checks.push(Check::at_most(
        "unit circle area",
        (circle.enclosed_area() - PI).abs() / PI,
        1e-12,
    ));
    checks.push(Check::at_most(
        "unit circle perimeter",
        (circle.perimeter() - 2.0 * PI).abs() / (2.0 * PI),
        1e-12,
    ));
    checks.push(Check::at_most(
        "unit circle curvature",
        circle
            .curvature()
            .iter()
            .map(|h| (h + 1.0).abs())
            .fold(0.0, f64::max),
        1e-12,
    ));

    let n = 256;
    let (a, b) = (2.0, 1.0);
    let ell = ellipse(a, b, n)?;
    let curvature_err = ell
        .curvature()
        .iter()
        .enumerate()
        .map(|(j, h)| {
            let t = 2.0 * PI * j as f64 / n as f64;
            let exact = -a * b / (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5);
            ((h - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("ellipse curvature", curvature_err, 1e-10));
    let p = ellipse_perimeter(a, b);
    checks.push(Check::at_most(
        "ellipse perimeter",
        (ell.perimeter() - p).abs() / p,
        1e-10,
    ));
    checks.push(Check::at_most(
        "ellipse area",
        (ell.enclosed_area() - PI * a * b).abs() / (PI * a * b),
        1e-12,
    ));

    let polar = geometry::make_perturbed_circle(1.0, origin(), &[Mode::new(3, 0.1)], 64)?;
    let exact = (1.0 + 0.1 * 0.1 / 2.0) * PI;
    checks.push(Check::at_most(
        "polar perturbation area",
        (polar.enclosed_area() - exact).abs() / exact,
        1e-10,
    ));
    let graph = geometry::make_perturbed_circle(1.0, origin(), &[Mode::new(2, 0.05)], 64)?;
    let exact = (1.0 + 0.05 * 0.05 / 2.0) * PI;
    checks.push(Check::at_most(
        "mode-2 graph area",
        (graph.enclosed_area() - exact).abs() / exact,
        1e-10,
    ));

    for (name, curve) in [
        ("circle", &circle),
        ("ellipse", &ell),
        ("polar", &polar),
        ("graph", &graph),
    ] {
        checks.push(Check::at_most(
            format!("Gauss-Bonnet {name}"),
            (gauss_bonnet(curve) + 2.0 * PI).abs(),
            1e-10,
        ));
    }
    Ok(checks)
}

/// Deterministic artifact set: a G matrix, a spectrum report, an oracle table and
/// a short simulation. Returns the written paths in a stable order.
pub fn write_artifacts(dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    let (set, params) = random_geometries(seed, 1, 32)?.remove(0);
    let g = assemble_G_matrix(&set, &params)?;
    let (csv, json) = io::write_operator_matrix(&g, dir, "operator_G")?;
    files.push(csv);
    files.push(json);

    let (model, eq, _, _) = spectrum_cases()?.remove(3);
    let l = stability::assemble_linearization(&eq, &PhysicalParams::unit(model), 32)?;
    let report = stability::spectrum(&l, &eq)?;
    let path = dir.join("spectrum.json");
    fs::write(&path, io::to_json_pretty(&report)?)?;
    files.push(path);

    let path = dir.join("oracle.csv");
    io::write_oracle_table(
        1.0,
        2.0,
        &PhysicalParams::unit(Model::Mu),
        8,
        fs::File::create(&path)?,
    )?;
    files.push(path);

    let mut cfg = conserve_config(32);
    cfg.t_end = 0.2;
    cfg.output_interval = 0.05;
    let out = evolution::run(&cfg)?;
    files.extend(io::write_run(&out, &dir.join("simulation"))?);
    Ok(files)
}

/// Evaluate `criteria` in order, calling `on_result` after each one.
pub fn run_criteria(
    level: Level,
    seed: u64,
    criteria: &[Criterion],
    mut on_result: impl FnMut(&CriterionResult, Duration),
) -> VerifyReport {
    let suite = Suite::new(level, seed);
    let mut results = Vec::new();
    for &c in criteria {
        let start = Instant::now();
        let r = suite.evaluate(c);
        on_result(&r, start.elapsed());
        results.push(r);
    }
    VerifyReport {
        level,
        seed,
        results,
    }
}

pub fn run_all(
    level: Level,
    seed: u64,
    on_result: impl FnMut(&CriterionResult, Duration),
) -> VerifyReport {
    run_criteria(level, seed, &Criterion::ALL, on_result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agm_perimeter() {
        assert!((ellipse_perimeter(1.0, 1.0) - 2.0 * PI).abs() < 1e-14);
        // frozen value for semi-axes (2, 1)
        assert!((ellipse_perimeter(2.0, 1.0) - 9.688448220547676).abs() < 1e-13);
    }

    #[test]
    fn criterion_ids_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(c.id().parse::<Criterion>().unwrap(), c);
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{}\"", c.id()));
        }
        assert_eq!(Criterion::Determinism.number(), 10);
        assert!("full".parse::<Level>().is_ok());
        assert!("medium".parse::<Level>().is_err());
    }

    #[test]
    fn random_geometries_are_seeded() {
        let a = random_geometries(7, 5, 16).unwrap();
        let b = random_geometries(7, 5, 16).unwrap();
        let c = random_geometries(8, 5, 16).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|(s, _)| (1..=3).contains(&s.len())));
    }

    #[test]
    fn geometry_calibration_passes() {
        let r = CriterionResult::from_checks(Criterion::GeometryCal, geometry_cal().unwrap());
        assert!(r.passed, "{}", r.line());
    }

    #[test]
    fn result_line_names_failures() {
        let r = CriterionResult::from_checks(
            Criterion::OracleEq,
            vec![
                Check::at_most("a", 1.0, 2.0),
                Check::at_least("ratio", 1.0, 10.0),
            ],
        );
        let line = r.line();
        assert!(line.starts_with("FAIL  3 ORACLE-EQ"));
        assert!(line.contains("ratio"));
        assert!(!line.contains("a ="));
    }
}
