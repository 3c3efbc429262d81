//! Explicit time integration of `V = sigma G H` with diagnostics and monitors.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::field::BoundaryField;
use crate::geometry::{
    ball_condition_radius, fit_circles, CircleFit, InterfaceCurve, InterfaceSet, Mode, Point,
};
use crate::operators::{normal_velocity, phase_flux};
use crate::spectral;
use crate::transmission::{Model, PhysicalParams};

/// One closed component of the initial datum: a circle with a radial perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub radius: f64,
    pub center: [f64; 2],
    #[serde(default)]
    pub modes: Vec<Mode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialShape {
    pub wall_radius: f64,
    #[serde(default)]
    pub wall_center: [f64; 2],
    pub components: Vec<ComponentSpec>,
}

impl InitialShape {
    pub fn build(&self, n_per_component: usize) -> Result<InterfaceSet> {
        let comps = self
            .components
            .iter()
            .map(|c| {
                crate::geometry::make_perturbed_circle(
                    c.radius,
                    Point::new(c.center[0], c.center[1]),
                    &c.modes,
                    n_per_component,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        InterfaceSet::new(
            comps,
            self.wall_radius,
            Point::new(self.wall_center[0], self.wall_center[1]),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub params: PhysicalParams,
    pub initial: InitialShape,
    pub n_per_component: usize,
    #[serde(default = "default_dt_safety")]
    pub dt_safety: f64,
    pub t_end: f64,
    /// Threshold on `|V|_inf R^2 / (sigma k_max)`.
    #[serde(default = "default_equilibrium_tol")]
    pub equilibrium_tol: f64,
    /// Ball-condition radius below `ball_tol * R_char` stops the run.
    #[serde(default = "default_ball_tol")]
    pub ball_tol: f64,
    /// `max |H| * R_char` above this stops the run.
    #[serde(default = "default_curvature_cap")]
    pub curvature_cap: f64,
    /// Relative coefficient energy in `n/4 < |k| <= n/3` above this stops the run.
    #[serde(default = "default_tail_cap")]
    pub tail_cap: f64,
    /// A component whose equivalent radius drops below this many initial node
    /// spacings is considered vanished.
    #[serde(default = "default_vanish_spacings")]
    pub vanish_spacings: f64,
    /// Time between diagnostics records and snapshots.
    pub output_interval: f64,
}

fn default_dt_safety() -> f64 {
    0.25
}
fn default_equilibrium_tol() -> f64 {
    1e-8
}
fn default_ball_tol() -> f64 {
    1e-3
}
fn default_curvature_cap() -> f64 {
    1e3
}
fn default_tail_cap() -> f64 {
    1e-2
}
fn default_vanish_spacings() -> f64 {
    5.0
}

impl SimConfig {
    pub fn new(
        params: PhysicalParams,
        initial: InitialShape,
        n_per_component: usize,
        t_end: f64,
        output_interval: f64,
    ) -> Self {
        Self {
            params,
            initial,
            n_per_component,
            dt_safety: default_dt_safety(),
            t_end,
            equilibrium_tol: default_equilibrium_tol(),
            ball_tol: default_ball_tol(),
            curvature_cap: default_curvature_cap(),
            tail_cap: default_tail_cap(),
            vanish_spacings: default_vanish_spacings(),
            output_interval,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_per_component < 8 || self.n_per_component % 2 != 0 {
            return Err(MuskatError::Params(format!(
                "n_per_component must be even and at least 8, got {}",
                self.n_per_component
            )));
        }
        for (name, v) in [
            ("t_end", self.t_end),
            ("equilibrium_tol", self.equilibrium_tol),
            ("ball_tol", self.ball_tol),
            ("curvature_cap", self.curvature_cap),
            ("tail_cap", self.tail_cap),
            ("vanish_spacings", self.vanish_spacings),
            ("output_interval", self.output_interval),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MuskatError::Params(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(MuskatError::Params(format!(
                "dt_safety must lie in (0, 1], got {}",
                self.dt_safety
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub areas: Vec<f64>,
    pub area_total: f64,
    pub perimeter: f64,
    /// `max_i |H_i - mean H|` per component.
    pub max_h_dev: Vec<f64>,
    pub ball_radius: f64,
    pub v_inf: f64,
    /// Sup norm of the phase flux; zero for the model without phase transition.
    pub j_inf: f64,
    /// Largest circle-fit residual over components.
    pub fit_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTEnd,
    Equilibrium,
    SingularityBall,
    SingularityCurvature,
    ProximityGuard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub interfaces: InterfaceSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
}

/// Perimeter and component areas after every accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub perimeter: f64,
    pub areas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `-d log(a) / dt`; positive for decay.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub steps: Vec<StepRecord>,
    /// Human-readable cause of the termination.
    pub reason: String,
    pub final_time: f64,
    pub final_circles: Vec<CircleFit>,
    /// Exponential rate of the perimeter excess `P(t) - P_inf` (equilibrium runs).
    pub perimeter_rate: Option<RateFit>,
}

impl RunOutcome {
    pub fn final_state(&self) -> &InterfaceSet {
        &self
            .trajectory
            .snapshots
            .last()
            .expect("a run keeps its initial snapshot")
            .interfaces
    }

    /// Largest stepwise perimeter increase.
    pub fn max_perimeter_increase(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| w[1].perimeter - w[0].perimeter)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest relative deviation of each component area from its initial value.
    pub fn area_drift(&self) -> Vec<f64> {
        let first = &self.steps[0].areas;
        (0..first.len())
            .map(|j| {
                self.steps
                    .iter()
                    .map(|s| ((s.areas[j] - first[j]) / first[j]).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn total_area_drift(&self) -> f64 {
        let a0: f64 = self.steps[0].areas.iter().sum();
        self.steps
            .iter()
            .map(|s| ((s.areas.iter().sum::<f64>() - a0) / a0).abs())
            .fold(0.0, f64::max)
    }
}

/// Mobility that sets the leading symbol of `sigma G A` for the step bound.
fn cfl_mobility(params: &PhysicalParams) -> f64 {
    params.k_max().max(params.effective_mobility())
}

/// Largest admissible step: `dt_safety * ds_min^3 / (sigma k)`.
pub fn dt_max(state: &InterfaceSet, params: &PhysicalParams, dt_safety: f64) -> f64 {
    let ds = state
        .components()
        .iter()
        .map(|c| c.node_spacing())
        .fold(f64::INFINITY, f64::min);
    dt_safety * ds.powi(3) / (params.sigma * cfl_mobility(params))
}

fn displaced(
    state: &InterfaceSet,
    base: &InterfaceSet,
    moves: &[(f64, &BoundaryField, &InterfaceSet)],
) -> Result<InterfaceSet> {
    let offsets = state.offsets();
    let mut comps = Vec::with_capacity(state.len());
    for (j, comp) in base.components().iter().enumerate() {
        let mut pts = comp.points().to_vec();
        for (c, v, at) in moves {
            let nu = at.components()[j].normal();
            for (i, p) in pts.iter_mut().enumerate() {
                *p += nu[i] * (c * v.values()[offsets[j] + i]);
            }
        }
        comps.push(InterfaceCurve::new(pts)?);
    }
    InterfaceSet::new(comps, base.wall_radius(), base.wall_center())
}

/// Resample a curve at uniform arclength, then drop wavenumbers above `n/3`.
pub fn redistribute_and_filter(curve: &InterfaceCurve) -> Result<InterfaceCurve> {
    let n = curve.n_points();
    let coeffs = curve.coefficients();
    let speed_c = spectral::forward_real(curve.speed());
    let total = speed_c[0].re * 2.0 * PI;
    // s(theta) = mean * theta + periodic antiderivative
    let arclength = |theta: f64| -> f64 {
        let mut s = speed_c[0].re * theta;
        for (k, c) in speed_c.iter().enumerate().skip(1) {
            let m = spectral::wavenumber(k, n) as f64;
            if n % 2 == 0 && k == n / 2 {
                // cosine convention: antiderivative of cos(m t) is sin(m t) / m
                s += c.re * (m * theta).sin() / m;
                continue;
            }
            let e = Complex64::from_polar(1.0, m * theta) - 1.0;
            s += (c * e / Complex64::new(0.0, m)).re;
        }
        s
    };
    let mut thetas = Vec::with_capacity(n);
    let mut theta = 0.0;
    for j in 0..n {
        let target = total * j as f64 / n as f64;
        if j > 0 {
            theta = thetas[j - 1] + 2.0 * PI / n as f64;
        }
        for _ in 0..50 {
            let f = arclength(theta) - target;
            let ds = spectral::evaluate_derivative(&coeffs, theta, 1).norm();
            let step = f / ds;
            theta -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        thetas.push(theta);
    }
    let pts: Vec<Point> = thetas
        .iter()
        .map(|&t| spectral::evaluate(&coeffs, t))
        .collect();
    let mut c = spectral::forward(&pts);
    spectral::truncate(&mut c, n / 3);
    InterfaceCurve::from_coefficients(&c)
}

/// One RK4 step of the normal motion followed by redistribution and filtering.
pub fn step(state: &InterfaceSet, params: &PhysicalParams, dt: f64) -> Result<InterfaceSet> {
    step_with_velocity(state, params, dt, default_dt_safety(), None)
}

fn step_with_velocity(
    state: &InterfaceSet,
    params: &PhysicalParams,
    dt: f64,
    dt_safety: f64,
    v0: Option<BoundaryField>,
) -> Result<InterfaceSet> {
    let bound = dt_max(state, params, dt_safety);
    if !(dt <= bound * (1.0 + 1e-12)) {
        return Err(MuskatError::Cfl { dt, dt_max: bound });
    }
    let k1 = match v0 {
        Some(v) => v,
        None => normal_velocity(state, params)?,
    };
    let s2 = displaced(state, state, &[(0.5 * dt, &k1, state)])?;
    let k2 = normal_velocity(&s2, params)?;
    let s3 = displaced(state, state, &[(0.5 * dt, &k2, &s2)])?;
    let k3 = normal_velocity(&s3, params)?;
    let s4 = displaced(state, state, &[(dt, &k3, &s3)])?;
    let k4 = normal_velocity(&s4, params)?;
    let moved = displaced(
        state,
        state,
        &[
            (dt / 6.0, &k1, state),
            (dt / 3.0, &k2, &s2),
            (dt / 3.0, &k3, &s3),
            (dt / 6.0, &k4, &s4),
        ],
    )?;
    let comps = moved
        .components()
        .iter()
        .map(redistribute_and_filter)
        .collect::<Result<Vec<_>>>()?;
    InterfaceSet::new(comps, state.wall_radius(), state.wall_center())
}

fn curvature_deviation(state: &InterfaceSet) -> Vec<f64> {
    state
        .components()
        .iter()
        .map(|c| {
            let h = c.curvature();
            let mean = h.iter().sum::<f64>() / h.len() as f64;
            h.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
        })
        .collect()
}

fn tail_fraction(curve: &InterfaceCurve) -> f64 {
    let n = curve.n_points();
    let c = curve.coefficients();
    let mut tail = 0.0;
    let mut body = 0.0;
    for (k, ck) in c.iter().enumerate().skip(1) {
        let m = spectral::wavenumber(k, n).unsigned_abs() as usize;
        if 4 * m > n && 3 * m <= n {
            tail += ck.norm_sqr();
        }
        body += ck.norm_sqr();
    }
    if body == 0.0 {
        0.0
    } else {
        (tail / body).sqrt()
    }
}

fn diagnostics(
    state: &InterfaceSet,
    params: &PhysicalParams,
    t: f64,
    v: &BoundaryField,
) -> Result<DiagnosticsRecord> {
    let j_inf = match params.model {
        Model::Mu => 0.0,
        Model::MuT => phase_flux(state, params)?.flux.max_abs(),
    };
    let areas = state.areas();
    Ok(DiagnosticsRecord {
        t,
        area_total: areas.iter().sum(),
        areas,
        perimeter: state.perimeter(),
        max_h_dev: curvature_deviation(state),
        ball_radius: ball_condition_radius(state),
        v_inf: v.max_abs(),
        j_inf,
        fit_residual: fit_circles(state)
            .iter()
            .map(|f| f.residual)
            .fold(0.0, f64::max),
    })
}

fn classify_failure(err: MuskatError) -> Result<(Termination, String)> {
    match err {
        MuskatError::Proximity(msg) => Ok((Termination::ProximityGuard, msg)),
        MuskatError::Geometry(msg) => Ok((Termination::SingularityBall, msg)),
        other => Err(other),
    }
}

/// Integrate until `t_end`, equilibrium, or a monitor fires.
pub fn run(config: &SimConfig) -> Result<RunOutcome> {
    config.validate()?;
    let params = &config.params;
    let mut state = config.initial.build(config.n_per_component)?;
    let r_char = state.characteristic_radius();
    let initial_spacing = state
        .components()
        .iter()
        .map(|c| c.node_spacing())
        .fold(f64::INFINITY, f64::min);
    let mut t = 0.0;
    let mut next_output = 0.0;
    let mut snapshots = Vec::new();
    let mut diags = Vec::new();
    let mut steps = vec![StepRecord {
        t,
        perimeter: state.perimeter(),
        areas: state.areas(),
    }];
    let termination;
    let reason;
    loop {
        let v = match normal_velocity(&state, params) {
            Ok(v) => v,
            Err(e) => {
                let (term, msg) = classify_failure(e)?;
                termination = term;
                reason = msg;
                break;
            }
        };
        let output_due = t >= next_output - 1e-12 * config.output_interval;
        if output_due {
            match diagnostics(&state, params, t, &v) {
                Ok(d) => diags.push(d),
                Err(e) => {
                    let (term, msg) = classify_failure(e)?;
                    termination = term;
                    reason = msg;
                    break;
                }
            }
            snapshots.push(Snapshot {
                t,
                interfaces: state.clone(),
            });
            next_output += config.output_interval;
        }
        if let Some((term, msg)) = monitors(config, &state, &v, r_char, initial_spacing) {
            termination = term;
            reason = msg;
            break;
        }
        if t >= config.t_end * (1.0 - 1e-14) {
            termination = Termination::ReachedTEnd;
            reason = format!("reached t = {t}");
            break;
        }
        let dt = dt_max(&state, params, config.dt_safety)
            .min(config.t_end - t)
            .min(next_output - t);
        match step_with_velocity(&state, params, dt, config.dt_safety, Some(v)) {
            Ok(s) => state = s,
            Err(e) => {
                let (term, msg) = classify_failure(e)?;
                termination = term;
                reason = msg;
                break;
            }
        }
        t += dt;
        steps.push(StepRecord {
            t,
            perimeter: state.perimeter(),
            areas: state.areas(),
        });
    }
    // the final state is always recorded
    if snapshots.last().map_or(true, |s| s.t < t) {
        if let Ok(v) = normal_velocity(&state, params) {
            if let Ok(d) = diagnostics(&state, params, t, &v) {
                diags.push(d);
            }
        }
        snapshots.push(Snapshot {
            t,
            interfaces: state.clone(),
        });
    }
    let final_circles = fit_circles(&state);
    let perimeter_rate = if termination == Termination::Equilibrium {
        perimeter_excess_rate(&diags, &final_circles)
    } else {
        None
    };
    Ok(RunOutcome {
        trajectory: Trajectory {
            snapshots,
            termination,
        },
        diagnostics: diags,
        steps,
        reason,
        final_time: t,
        final_circles,
        perimeter_rate,
    })
}

fn monitors(
    config: &SimConfig,
    state: &InterfaceSet,
    v: &BoundaryField,
    r_char: f64,
    initial_spacing: f64,
) -> Option<(Termination, String)> {
    let p = &config.params;
    for (j, a) in state.areas().iter().enumerate() {
        let r = (a / PI).sqrt();
        if r < config.vanish_spacings * initial_spacing {
            return Some((
                Termination::SingularityBall,
                format!("component {j} shrank to radius {r:.3e}"),
            ));
        }
    }
    let ball = ball_condition_radius(state);
    if ball < config.ball_tol * r_char {
        return Some((
            Termination::SingularityBall,
            format!("ball radius {ball:.3e}"),
        ));
    }
    let hmax = state.curvature().max_abs();
    if hmax * r_char > config.curvature_cap {
        return Some((
            Termination::SingularityCurvature,
            format!("max |H| = {hmax:.3e}"),
        ));
    }
    for (j, c) in state.components().iter().enumerate() {
        let tail = tail_fraction(c);
        if tail > config.tail_cap {
            return Some((
                Termination::SingularityCurvature,
                format!("component {j} spectral tail {tail:.3e}"),
            ));
        }
    }
    let scaled = v.max_abs() * r_char * r_char / (p.sigma * p.k_max());
    if scaled <= config.equilibrium_tol {
        return Some((
            Termination::Equilibrium,
            format!("scaled |V| = {scaled:.3e}"),
        ));
    }
    None
}

fn perimeter_excess_rate(diags: &[DiagnosticsRecord], circles: &[CircleFit]) -> Option<RateFit> {
    let p_inf: f64 = circles.iter().map(|c| 2.0 * PI * c.circle.radius).sum();
    let series: Vec<(f64, f64)> = diags
        .iter()
        .map(|d| (d.t, d.perimeter - p_inf))
        .take_while(|(_, e)| *e > 1e-11 * p_inf)
        .collect();
    decay_rate_fit(&series).ok()
}

fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mt;
    let r2 = if syy <= 1e-30 * (1.0 + my * my) {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// Exponential rate of a positive series: least-squares slope of `log a` over the
/// longest suffix with `R^2 >= 0.999` (at least 10 samples; the final 10 samples
/// when no suffix qualifies).
pub fn decay_rate_fit(series: &[(f64, f64)]) -> Result<RateFit> {
    const MIN_SAMPLES: usize = 10;
    if series.len() < MIN_SAMPLES {
        return Err(MuskatError::Fit(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            series.len()
        )));
    }
    if let Some(bad) = series.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(MuskatError::Fit(format!(
            "non-positive amplitude {} at t = {}",
            bad.1, bad.0
        )));
    }
    let logs: Vec<(f64, f64)> = series.iter().map(|&(t, a)| (t, a.ln())).collect();
    for start in 0..=(logs.len() - MIN_SAMPLES) {
        let (slope, intercept, r2) = linear_fit(&logs[start..]);
        if r2 >= 0.999 {
            return Ok(RateFit {
                rate: -slope,
                intercept,
                r_squared: r2,
                samples: logs.len() - start,
            });
        }
    }
    let tail = &logs[logs.len() - MIN_SAMPLES..];
    let (slope, intercept, r2) = linear_fit(tail);
    Ok(RateFit {
        rate: -slope,
        intercept,
        r_squared: r2,
        samples: MIN_SAMPLES,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_perturbed_circle;

    fn single(modes: Vec<Mode>, wall: f64) -> InitialShape {
        InitialShape {
            wall_radius: wall,
            wall_center: [0.0, 0.0],
            components: vec![ComponentSpec {
                radius: 1.0,
                center: [0.0, 0.0],
                modes,
            }],
        }
    }

    #[test]
    fn synthetic_rates() {
        let s: Vec<(f64, f64)> = (0..50)
            .map(|i| (i as f64 * 0.1, (-3.0 * i as f64 * 0.1).exp()))
            .collect();
        assert!((decay_rate_fit(&s).unwrap().rate - 3.0).abs() < 1e-6);
        let s: Vec<(f64, f64)> = (0..=100)
            .map(|i| {
                let t = i as f64 * 0.1;
                (t, (-3.0 * t).exp() * (1.0 + 0.01 * t.sin()))
            })
            .collect();
        assert!((decay_rate_fit(&s).unwrap().rate - 3.0).abs() < 0.05);
        let s: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 0.7)).collect();
        assert_eq!(decay_rate_fit(&s).unwrap().rate, 0.0);
        assert!(decay_rate_fit(&s[..5]).is_err());
        let mut bad = s.clone();
        bad[3].1 = 0.0;
        assert!(decay_rate_fit(&bad).is_err());
    }

    #[test]
    fn redistribution_preserves_geometry() {
        // non-uniform parameterisation of a smooth curve
        let n = 64;
        let pts: Vec<Point> = (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                let s = t + 0.3 * t.sin();
                Complex64::from_polar(1.0 + 0.05 * (2.0 * s).cos(), s)
            })
            .collect();
        let c = InterfaceCurve::new(pts).unwrap();
        let r = redistribute_and_filter(&c).unwrap();
        assert!((r.enclosed_area() - c.enclosed_area()).abs() < 1e-12 * c.enclosed_area());
        assert!((r.perimeter() - c.perimeter()).abs() < 1e-10 * c.perimeter());
        let s = r.speed();
        let mean = s.iter().sum::<f64>() / n as f64;
        assert!(s.iter().all(|v| (v - mean).abs() < 1e-6 * mean));
    }

    #[test]
    fn circle_is_a_fixed_point() {
        for model in [Model::Mu, Model::MuT] {
            let c = make_perturbed_circle(1.0, Point::new(0.3, 0.1), &[], 32).unwrap();
            let set = InterfaceSet::single(c, 3.0).unwrap();
            let p = PhysicalParams::unit(model);
            let dt = dt_max(&set, &p, 0.25);
            let next = step(&set, &p, dt).unwrap();
            for (a, b) in next.points().iter().zip(set.points()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn cfl_violation_is_reported() {
        let c = make_perturbed_circle(1.0, Point::new(0.0, 0.0), &[], 32).unwrap();
        let set = InterfaceSet::single(c, 3.0).unwrap();
        let p = PhysicalParams::unit(Model::Mu);
        let dt = 2.0 * dt_max(&set, &p, 0.25);
        assert!(matches!(step(&set, &p, dt), Err(MuskatError::Cfl { .. })));
    }

    #[test]
    fn short_run_conserves_area_and_decreases_perimeter() {
        let mut cfg = SimConfig::new(
            PhysicalParams::unit(Model::Mu),
            single(vec![Mode::new(2, 0.05), Mode::new(3, 0.03)], 3.0),
            32,
            0.1,
            0.02,
        );
        cfg.dt_safety = 0.25;
        let out = run(&cfg).unwrap();
        assert_eq!(out.trajectory.termination, Termination::ReachedTEnd);
        assert!(out.area_drift()[0] < 1e-6, "{:?}", out.area_drift());
        let p0 = out.steps[0].perimeter;
        assert!(out.max_perimeter_increase() <= 1e-8 * p0);
        assert!(out.steps.last().unwrap().perimeter < p0);
        assert_eq!(out.diagnostics.len(), 6);
        assert!(out.trajectory.snapshots.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::new(
            PhysicalParams::unit(Model::Mu),
            single(vec![], 3.0),
            31,
            1.0,
            0.1,
        );
        assert!(cfg.validate().is_err());
        cfg.n_per_component = 32;
        assert!(cfg.validate().is_ok());
        cfg.dt_safety = 1.5;
        assert!(cfg.validate().is_err());
    }
}
