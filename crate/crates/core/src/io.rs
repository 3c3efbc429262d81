//! Plain-text file formats.
//!
//! * Curve CSV: header `theta,x,y`, one row per node, `theta_j = 2 pi j / N`.
//! * Interface-set JSON: `{"format", "version", "wall": {"radius", "center"},
//!   "components": [{"n_points", "coefficients": [[re, im], ...]}]}` with the
//!   coefficients in FFT order, normalised so that `z_j = sum_k c_k exp(i k theta_j)`.
//! * Operator matrix: headerless CSV of the entries plus a JSON sidecar with the
//!   weights, component offsets and geometry tag.
//! * Diagnostics CSV: header `t,area_total,area_1..area_m,perimeter,maxHdev,ball_r,vinf,jinf,fit_residual`.
//! * Snapshots `snap_<index>.json` and a termination summary JSON.
//!
//! Floats are written in the shortest representation that round-trips.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{MuskatError, Result};
use crate::evolution::{DiagnosticsRecord, RateFit, RunOutcome, Termination};
use crate::geometry::{CircleFit, InterfaceCurve, InterfaceSet, Point};
use crate::operators::OperatorMatrix;
use crate::spectral;

pub const INTERFACE_FORMAT: &str = "muskat-interfaces";
pub const MATRIX_FORMAT: &str = "muskat-operator-matrix";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WallRecord {
    radius: f64,
    center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentRecord {
    n_points: usize,
    coefficients: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterfaceSetRecord {
    format: String,
    version: u32,
    wall: WallRecord,
    components: Vec<ComponentRecord>,
}

impl From<&InterfaceSet> for InterfaceSetRecord {
    fn from(set: &InterfaceSet) -> Self {
        let c = set.wall_center();
        Self {
            format: INTERFACE_FORMAT.into(),
            version: FORMAT_VERSION,
            wall: WallRecord {
                radius: set.wall_radius(),
                center: [c.re, c.im],
            },
            components: set
                .components()
                .iter()
                .map(|curve| ComponentRecord {
                    n_points: curve.n_points(),
                    coefficients: curve.coefficients().iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<InterfaceSetRecord> for InterfaceSet {
    type Error = MuskatError;

    fn try_from(rec: InterfaceSetRecord) -> Result<Self> {
        if rec.format != INTERFACE_FORMAT || rec.version != FORMAT_VERSION {
            return Err(MuskatError::Format(format!(
                "expected {INTERFACE_FORMAT} version {FORMAT_VERSION}, got {} version {}",
                rec.format, rec.version
            )));
        }
        let comps = rec
            .components
            .into_iter()
            .map(|c| {
                if c.coefficients.len() != c.n_points {
                    return Err(MuskatError::Format(format!(
                        "component declares {} points but has {} coefficients",
                        c.n_points,
                        c.coefficients.len()
                    )));
                }
                let coeffs: Vec<Complex64> = c
                    .coefficients
                    .iter()
                    .map(|z| Complex64::new(z[0], z[1]))
                    .collect();
                InterfaceCurve::new(spectral::inverse(&coeffs))
            })
            .collect::<Result<Vec<_>>>()?;
        InterfaceSet::new(
            comps,
            rec.wall.radius,
            Point::new(rec.wall.center[0], rec.wall.center[1]),
        )
    }
}

impl Serialize for InterfaceSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        InterfaceSetRecord::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for InterfaceSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = InterfaceSetRecord::deserialize(deserializer)?;
        InterfaceSet::try_from(rec).map_err(serde::de::Error::custom)
    }
}

pub fn interfaces_to_json(set: &InterfaceSet) -> Result<String> {
    Ok(serde_json::to_string_pretty(set)?)
}

pub fn interfaces_from_json(text: &str) -> Result<InterfaceSet> {
    Ok(serde_json::from_str(text)?)
}

fn csv_err(e: csv::Error) -> MuskatError {
    MuskatError::Format(e.to_string())
}

fn fmt(v: f64) -> String {
    // `Display` for f64 is the shortest round-trip representation
    format!("{v}")
}

pub fn write_curve_csv<W: Write>(curve: &InterfaceCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "x", "y"]).map_err(csv_err)?;
    for (j, p) in curve.points().iter().enumerate() {
        w.write_record([fmt(curve.theta(j)), fmt(p.re), fmt(p.im)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(input: R) -> Result<InterfaceCurve> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["theta", "x", "y"] {
        return Err(MuskatError::Format(format!(
            "expected header theta,x,y, got {header:?}"
        )));
    }
    let mut pts = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| {
                    MuskatError::Format(format!("row {}: missing column {k}", line + 1))
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| MuskatError::Format(format!("row {}: {e}", line + 1)))
        };
        pts.push(Point::new(parse(1)?, parse(2)?));
    }
    InterfaceCurve::new(pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSidecar {
    pub format: String,
    pub version: u32,
    pub rows: usize,
    pub cols: usize,
    pub entries_file: String,
    pub weights: Vec<f64>,
    pub offsets: Vec<usize>,
    pub geometry_tag: String,
}

/// Write `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_operator_matrix(
    m: &OperatorMatrix,
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&csv_path)
        .map_err(csv_err)?;
    for i in 0..m.entries.nrows() {
        w.write_record(m.entries.row(i).iter().map(|v| fmt(*v)))
            .map_err(csv_err)?;
    }
    w.flush()?;
    let sidecar = MatrixSidecar {
        format: MATRIX_FORMAT.into(),
        version: FORMAT_VERSION,
        rows: m.entries.nrows(),
        cols: m.entries.ncols(),
        entries_file: format!("{stem}.csv"),
        weights: m.weights.clone(),
        offsets: m.offsets.clone(),
        geometry_tag: m.geometry_tag.clone(),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok((csv_path, json_path))
}

/// Read a matrix written by [`write_operator_matrix`] from its sidecar path.
pub fn read_operator_matrix(sidecar_path: &Path) -> Result<OperatorMatrix> {
    let sidecar: MatrixSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path)?)?;
    if sidecar.format != MATRIX_FORMAT {
        return Err(MuskatError::Format(format!(
            "unexpected format {}",
            sidecar.format
        )));
    }
    let dir = sidecar_path.parent().unwrap_or(Path::new("."));
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(dir.join(&sidecar.entries_file))
        .map_err(csv_err)?;
    let mut data = Vec::with_capacity(sidecar.rows * sidecar.cols);
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != sidecar.cols {
            return Err(MuskatError::Format(format!(
                "row with {} columns, expected {}",
                rec.len(),
                sidecar.cols
            )));
        }
        for v in rec.iter() {
            data.push(
                v.parse::<f64>()
                    .map_err(|e| MuskatError::Format(e.to_string()))?,
            );
        }
    }
    if data.len() != sidecar.rows * sidecar.cols || sidecar.weights.len() != sidecar.rows {
        return Err(MuskatError::Format(
            "matrix size does not match its sidecar".into(),
        ));
    }
    Ok(OperatorMatrix {
        entries: DMatrix::from_row_slice(sidecar.rows, sidecar.cols, &data),
        weights: sidecar.weights,
        offsets: sidecar.offsets,
        geometry_tag: sidecar.geometry_tag,
    })
}

pub fn diagnostics_header(m: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "area_total".to_string()];
    h.extend((1..=m).map(|j| format!("area_{j}")));
    h.extend(
        [
            "perimeter",
            "maxHdev",
            "ball_r",
            "vinf",
            "jinf",
            "fit_residual",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

pub fn write_diagnostics_csv<W: Write>(
    records: &[DiagnosticsRecord],
    m: usize,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(diagnostics_header(m)).map_err(csv_err)?;
    for r in records {
        let mut row = vec![fmt(r.t), fmt(r.area_total)];
        row.extend(r.areas.iter().map(|a| fmt(*a)));
        row.push(fmt(r.perimeter));
        row.push(fmt(r.max_h_dev.iter().copied().fold(0.0, f64::max)));
        row.push(fmt(r.ball_radius));
        row.push(fmt(r.v_inf));
        row.push(fmt(r.j_inf));
        row.push(fmt(r.fit_residual));
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub index: usize,
    pub t: f64,
    pub interfaces: InterfaceSet,
}

pub fn snapshot_file_name(index: usize) -> String {
    format!("snap_{index:05}.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationSummary {
    pub termination: Termination,
    pub reason: String,
    pub final_time: f64,
    pub accepted_steps: usize,
    pub snapshots: usize,
    pub final_circles: Vec<CircleFit>,
    pub perimeter_rate: Option<RateFit>,
    pub area_drift: Vec<f64>,
    pub total_area_drift: f64,
    pub max_perimeter_increase: f64,
}

impl From<&RunOutcome> for TerminationSummary {
    fn from(o: &RunOutcome) -> Self {
        Self {
            termination: o.trajectory.termination,
            reason: o.reason.clone(),
            final_time: o.final_time,
            accepted_steps: o.steps.len() - 1,
            snapshots: o.trajectory.snapshots.len(),
            final_circles: o.final_circles.clone(),
            perimeter_rate: o.perimeter_rate,
            area_drift: o.area_drift(),
            total_area_drift: o.total_area_drift(),
            max_perimeter_increase: if o.steps.len() > 1 {
                o.max_perimeter_increase()
            } else {
                0.0
            },
        }
    }
}

/// Write diagnostics, snapshots and the termination summary of a run into `dir`.
pub fn write_run(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let m = outcome.final_state().len();
    let diag = dir.join("diagnostics.csv");
    write_diagnostics_csv(&outcome.diagnostics, m, fs::File::create(&diag)?)?;
    written.push(diag);
    for (i, s) in outcome.trajectory.snapshots.iter().enumerate() {
        let path = dir.join(snapshot_file_name(i));
        let file = SnapshotFile {
            index: i,
            t: s.t,
            interfaces: s.interfaces.clone(),
        };
        fs::write(&path, serde_json::to_string_pretty(&file)?)?;
        written.push(path);
    }
    let term = dir.join("termination.json");
    fs::write(
        &term,
        serde_json::to_string_pretty(&TerminationSummary::from(outcome))?,
    )?;
    written.push(term);
    Ok(written)
}

/// Table `m,lambda` of the annulus oracle for `m = 0..=m_max`.
pub fn write_oracle_table<W: Write>(
    radius: f64,
    wall_radius: f64,
    params: &crate::transmission::PhysicalParams,
    m_max: u32,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "lambda"]).map_err(csv_err)?;
    for m in 0..=m_max {
        let lambda = crate::transmission::annulus_oracle(radius, wall_radius, params, m);
        w.write_record([m.to_string(), fmt(lambda)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_perturbed_circle, Mode};

    #[test]
    fn curve_csv_round_trip() {
        let c = make_perturbed_circle(1.0, Point::new(0.2, 0.0), &[Mode::new(3, 0.1)], 16).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("theta,x,y\n"));
        let back = read_curve_csv(buf.as_slice()).unwrap();
        assert_eq!(back.points(), c.points());
    }

    #[test]
    fn curve_csv_rejects_bad_header() {
        assert!(read_curve_csv("t,x,y\n0,1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn interface_json_round_trip() {
        let a =
            make_perturbed_circle(1.0, Point::new(-2.0, 0.0), &[Mode::new(2, 0.05)], 32).unwrap();
        let b = make_perturbed_circle(0.8, Point::new(2.0, 0.5), &[], 16).unwrap();
        let set = InterfaceSet::new(vec![a, b], 5.0, Point::new(0.1, 0.2)).unwrap();
        let json = interfaces_to_json(&set).unwrap();
        let back = interfaces_from_json(&json).unwrap();
        assert_eq!(back.wall_radius(), 5.0);
        for (p, q) in back.points().iter().zip(set.points()) {
            assert!((p - q).norm() < 1e-14);
        }
        let again = interfaces_from_json(&interfaces_to_json(&back).unwrap()).unwrap();
        for (p, q) in again.points().iter().zip(set.points()) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn interface_json_rejects_unknown_keys() {
        let a = make_perturbed_circle(1.0, Point::new(0.0, 0.0), &[], 8).unwrap();
        let set = InterfaceSet::single(a, 3.0).unwrap();
        let mut v: serde_json::Value = serde_json::to_value(&set).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(serde_json::from_value::<InterfaceSet>(v).is_err());
    }

    #[test]
    fn diagnostics_header_layout() {
        assert_eq!(
            diagnostics_header(2).join(","),
            "t,area_total,area_1,area_2,perimeter,maxHdev,ball_r,vinf,jinf,fit_residual"
        );
    }
}
