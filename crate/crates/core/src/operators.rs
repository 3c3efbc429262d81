//! The interface operator `G` of both models, the normal velocity `V = sigma G H`
//! and dense matrix representations of `G`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MuskatError, Result};
use crate::field::BoundaryField;
use crate::geometry::InterfaceSet;
use crate::transmission::{
    solve_mu_transmission_with, DtnMaps, Model, MuCoupling, PhysicalParams, SolverOptions,
};

pub const DEFAULT_NODE_CAP: usize = 1024;

/// Dense matrix of an operator on interface nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMatrix {
    pub entries: DMatrix<f64>,
    /// Arclength quadrature weights.
    pub weights: Vec<f64>,
    pub offsets: Vec<usize>,
    pub geometry_tag: String,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, h: &BoundaryField) -> BoundaryField {
        let v = &self.entries * DVector::from_column_slice(h.values());
        BoundaryField::new(v.as_slice().to_vec(), self.offsets.clone())
    }

    /// `W G` with `W = diag(weights)`.
    pub fn weighted(&self) -> DMatrix<f64> {
        let mut wg = self.entries.clone();
        for (i, w) in self.weights.iter().enumerate() {
            wg.row_mut(i).scale_mut(*w);
        }
        wg
    }

    /// `|WG - (WG)^T|_F / |WG|_F`.
    pub fn symmetry_defect(&self) -> f64 {
        let wg = self.weighted();
        let norm = wg.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&wg - wg.transpose()).norm() / norm
    }

    /// Eigenvalues of the symmetric part of `W^{1/2} G W^{-1/2}`, ascending.
    pub fn symmetrized_eigenvalues(&self) -> Vec<f64> {
        let sq: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let n = self.dim();
        let b = DMatrix::from_fn(n, n, |i, j| self.entries[(i, j)] * sq[i] / sq[j]);
        let sym = (&b + b.transpose()) * 0.5;
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Stable identifier of the node positions and wall of an interface set.
pub fn geometry_tag(interfaces: &InterfaceSet) -> String {
    let mut hasher = Sha256::new();
    hasher.update(interfaces.wall_radius().to_le_bytes());
    let c = interfaces.wall_center();
    hasher.update(c.re.to_le_bytes());
    hasher.update(c.im.to_le_bytes());
    for comp in interfaces.components() {
        hasher.update((comp.n_points() as u64).to_le_bytes());
        for p in comp.points() {
            hasher.update(p.re.to_le_bytes());
            hasher.update(p.im.to_le_bytes());
        }
    }
    hex::encode(&hasher.finalize()[..8])
}

/// `G` factorised on one geometry; reused for repeated applications.
#[derive(Debug, Clone)]
pub struct InterfaceOperator {
    params: PhysicalParams,
    matrix: DMatrix<f64>,
    offsets: Vec<usize>,
    weights: Vec<f64>,
}

impl InterfaceOperator {
    pub fn new(interfaces: &InterfaceSet, params: &PhysicalParams) -> Result<Self> {
        Self::with_options(interfaces, params, &SolverOptions::default())
    }

    pub fn with_options(
        interfaces: &InterfaceSet,
        params: &PhysicalParams,
        options: &SolverOptions,
    ) -> Result<Self> {
        params.validate()?;
        let maps = DtnMaps::new(interfaces, options)?;
        let matrix = match params.model {
            Model::Mu => {
                MuCoupling::new(interfaces, params, &maps, options)?.flux_matrix(params)?
            }
            Model::MuT => {
                let j2 = params.rho_jump().powi(2);
                let d1 = maps.interior_matrix()?;
                let d2 = maps.exterior_matrix()?;
                (d1 * (params.rho1 * params.rho1 * params.k1)
                    + d2 * (params.rho2 * params.rho2 * params.k2))
                    / j2
            }
        };
        Ok(Self {
            params: *params,
            matrix,
            offsets: interfaces.offsets(),
            weights: interfaces.weights(),
        })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, h: &BoundaryField) -> BoundaryField {
        let v = &self.matrix * DVector::from_column_slice(h.values());
        BoundaryField::new(v.as_slice().to_vec(), self.offsets.clone())
    }

    pub fn into_matrix(self, geometry_tag: String) -> OperatorMatrix {
        OperatorMatrix {
            entries: self.matrix,
            weights: self.weights,
            offsets: self.offsets,
            geometry_tag,
        }
    }
}

/// `G h` by direct solves of the defining elliptic problems.
#[allow(non_snake_case)]
pub fn apply_G(
    interfaces: &InterfaceSet,
    params: &PhysicalParams,
    h: &BoundaryField,
) -> Result<BoundaryField> {
    params.validate()?;
    match params.model {
        Model::Mu => {
            Ok(
                solve_mu_transmission_with(interfaces, params, h, &SolverOptions::default())?
                    .interface_flux,
            )
        }
        Model::MuT => {
            let (s1, s2) = one_sided_operators(interfaces, params, h)?;
            let j2 = params.rho_jump().powi(2);
            let (w1, w2) = (
                params.rho1 * params.rho1 / j2,
                params.rho2 * params.rho2 / j2,
            );
            Ok(BoundaryField::new(
                s1.iter()
                    .zip(s2.values())
                    .map(|(a, b)| w1 * a + w2 * b)
                    .collect(),
                interfaces.offsets(),
            ))
        }
    }
}

/// `(S1 h, S2 h)` for the phase-transition model.
fn one_sided_operators(
    interfaces: &InterfaceSet,
    params: &PhysicalParams,
    h: &BoundaryField,
) -> Result<(Vec<f64>, BoundaryField)> {
    if !h.is_compatible(interfaces) {
        return Err(MuskatError::Params(
            "field does not match the interface set".into(),
        ));
    }
    let maps = DtnMaps::new(interfaces, &SolverOptions::default())?;
    let s1: Vec<f64> = maps
        .interior_apply(h.values())?
        .into_iter()
        .map(|v| params.k1 * v)
        .collect();
    let s2 = BoundaryField::new(
        maps.exterior_apply(h.values())?
            .into_iter()
            .map(|v| params.k2 * v)
            .collect(),
        interfaces.offsets(),
    );
    Ok((s1, s2))
}

/// `V = sigma G H`.
pub fn normal_velocity(
    interfaces: &InterfaceSet,
    params: &PhysicalParams,
) -> Result<BoundaryField> {
    let h = interfaces.curvature();
    Ok(apply_G(interfaces, params, &h)?.scaled(params.sigma))
}

/// Dense `G`, assembled from the factorised Dirichlet-to-Neumann maps.
#[allow(non_snake_case)]
pub fn assemble_G_matrix(
    interfaces: &InterfaceSet,
    params: &PhysicalParams,
) -> Result<OperatorMatrix> {
    assemble_G_matrix_capped(interfaces, params, DEFAULT_NODE_CAP)
}

#[allow(non_snake_case)]
pub fn assemble_G_matrix_capped(
    interfaces: &InterfaceSet,
    params: &PhysicalParams,
    cap: usize,
) -> Result<OperatorMatrix> {
    let nodes = interfaces.total_nodes();
    if nodes > cap {
        return Err(MuskatError::Size { nodes, cap });
    }
    Ok(InterfaceOperator::new(interfaces, params)?.into_matrix(geometry_tag(interfaces)))
}

/// Interfacial mass flux evaluated from both sides.
#[derive(Debug, Clone)]
pub struct PhaseFlux {
    /// `rho1 (u1.nu - V)`.
    pub flux: BoundaryField,
    /// `max |rho1 (u1.nu - V) - rho2 (u2.nu - V)|` relative to `max |flux|`.
    pub side_mismatch: f64,
}

/// Phase flux `j = rho (u.nu - V)` of the phase-transition model.
///
/// The velocity comes from the assembled operator, the Darcy fluxes from
/// independent one-sided solves, so agreement of the two sides checks both.
pub fn phase_flux(interfaces: &InterfaceSet, params: &PhysicalParams) -> Result<PhaseFlux> {
    if params.model != Model::MuT {
        return Err(MuskatError::ModelMismatch {
            expected: Model::MuT.name(),
            found: params.model.name(),
        });
    }
    let jump = params.rho_jump();
    let curv = interfaces.curvature();
    // scaled pressure trace p = sigma H / [[rho]] on both sides
    let p = curv.scaled(params.sigma / jump);
    let (s1, s2) = one_sided_operators(interfaces, params, &p)?;
    let op = InterfaceOperator::new(interfaces, params)?;
    let v = op.apply(&curv).scaled(params.sigma);
    let mut side1 = Vec::with_capacity(p.len());
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..p.len() {
        // u_i.nu = -k_i rho_i d_nu p_i
        let u1 = -params.rho1 * s1[i];
        let u2 = params.rho2 * s2.values()[i];
        let j1 = params.rho1 * (u1 - v.values()[i]);
        let j2 = params.rho2 * (u2 - v.values()[i]);
        worst = worst.max((j1 - j2).abs());
        scale = scale.max(j1.abs()).max(u1.abs() * params.rho1);
        side1.push(j1);
    }
    Ok(PhaseFlux {
        flux: BoundaryField::new(side1, interfaces.offsets()),
        side_mismatch: if scale > 0.0 { worst / scale } else { worst },
    })
}
