//! Export/import of grids, contours, and reports in the documented formats.
//!
//! JSA grids are written as a pair of CSV matrices (real, imaginary) plus a
//! JSON sidecar carrying axes, centers, the regime tag, and the
//! arbitrary-units flag; JSIs are one CSV matrix plus a sidecar. Contours
//! are a four-column CSV. All floats are serialized with 17 significant
//! digits so round trips are lossless, and every write is atomic (temp file
//! then rename).

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charsim::{ErrorMetrics, IntensityGrid, Reconstruction};
use crate::jsa::{GridSpec, JsaError, JsaGrid, Regime};
use crate::phasematch::PhasematchContour;
use crate::quantum::{NegativityReport, SchmidtReport};

#[derive(thiserror::Error, Debug)]
pub enum IoError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error in {path} at line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("grid file inconsistent with sidecar: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Grid(#[from] JsaError),
    #[error("json error on {path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let mk = |source: std::io::Error| IoError::Io { path: path.display().to_string(), source };
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".to_string());
    let tmp = match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(d) => d.join(format!(".{file_name}.tmp")),
        None => std::path::PathBuf::from(format!(".{file_name}.tmp")),
    };
    {
        let mut f = std::fs::File::create(&tmp).map_err(mk)?;
        f.write_all(bytes).map_err(mk)?;
        f.sync_all().map_err(mk)?;
    }
    std::fs::rename(&tmp, path).map_err(mk)
}

/// 17-significant-digit float formatting for lossless round trips.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Sidecar metadata for grid exports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSidecar {
    pub kind: String, // "jsa" | "jsi"
    pub regime: String,
    pub omega_s0_rad_per_fs: f64,
    pub omega_i0_rad_per_fs: f64,
    pub nu_s_rad_per_fs: Vec<f64>,
    pub nu_i_rad_per_fs: Vec<f64>,
    pub arbitrary_units: bool,
    pub norm_scale: Option<f64>,
}

fn regime_from_tag(tag: &str) -> Result<Regime, IoError> {
    Ok(match tag {
        "full" => Regime::Full,
        "linearized" => Regime::Linearized,
        "dualpump_erf" => Regime::DualPumpErf,
        "dualpump_gaussian" => Regime::DualPumpGaussian,
        "counterprop" => Regime::CounterProp,
        other => {
            return Err(IoError::Inconsistent(format!("unknown regime tag `{other}`")));
        }
    })
}

fn matrix_csv(rows: usize, cols: usize, get: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::new();
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&fmt17(get(r, c)));
        }
        out.push('\n');
    }
    out
}

fn parse_matrix_csv(path: &Path, text: &str) -> Result<Vec<Vec<f64>>, IoError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| IoError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(rows)
}

/// Exports a complex JSA as `<base>.real.csv`, `<base>.imag.csv`, and
/// `<base>.json`.
pub fn export_jsa(grid: &JsaGrid, base: &Path) -> Result<(), IoError> {
    let (n_s, n_i) = (grid.n_s(), grid.n_i());
    let real = matrix_csv(n_s, n_i, |r, c| grid.at(r, c).re);
    let imag = matrix_csv(n_s, n_i, |r, c| grid.at(r, c).im);
    write_atomic(&with_suffix(base, ".real.csv"), real.as_bytes())?;
    write_atomic(&with_suffix(base, ".imag.csv"), imag.as_bytes())?;
    let sidecar = GridSidecar {
        kind: "jsa".into(),
        regime: grid.regime.to_string(),
        omega_s0_rad_per_fs: grid.spec.omega_s0,
        omega_i0_rad_per_fs: grid.spec.omega_i0,
        nu_s_rad_per_fs: grid.spec.nu_s.clone(),
        nu_i_rad_per_fs: grid.spec.nu_i.clone(),
        arbitrary_units: grid.arb_units,
        norm_scale: grid.norm_scale,
    };
    write_json(&with_suffix(base, ".json"), &sidecar)
}

/// Loads a JSA written by [`export_jsa`].
pub fn import_jsa(base: &Path) -> Result<JsaGrid, IoError> {
    let side_path = with_suffix(base, ".json");
    let sidecar: GridSidecar = read_json(&side_path)?;
    let real_path = with_suffix(base, ".real.csv");
    let imag_path = with_suffix(base, ".imag.csv");
    let real = parse_matrix_csv(&real_path, &read_text(&real_path)?)?;
    let imag = parse_matrix_csv(&imag_path, &read_text(&imag_path)?)?;
    let n_s = sidecar.nu_s_rad_per_fs.len();
    let n_i = sidecar.nu_i_rad_per_fs.len();
    if real.len() != n_s || imag.len() != n_s {
        return Err(IoError::Inconsistent(format!(
            "matrix rows {} vs sidecar axis {}",
            real.len(),
            n_s
        )));
    }
    let mut amp = Vec::with_capacity(n_s * n_i);
    for (r_row, i_row) in real.iter().zip(imag.iter()) {
        if r_row.len() != n_i || i_row.len() != n_i {
            return Err(IoError::Inconsistent("matrix columns vs sidecar axis".into()));
        }
        for (re, im) in r_row.iter().zip(i_row.iter()) {
            amp.push(Complex64::new(*re, *im));
        }
    }
    let spec = GridSpec {
        nu_s: sidecar.nu_s_rad_per_fs,
        nu_i: sidecar.nu_i_rad_per_fs,
        omega_s0: sidecar.omega_s0_rad_per_fs,
        omega_i0: sidecar.omega_i0_rad_per_fs,
    };
    let mut grid = JsaGrid::new(spec, amp, regime_from_tag(&sidecar.regime)?)?;
    grid.arb_units = sidecar.arbitrary_units;
    grid.norm_scale = sidecar.norm_scale;
    Ok(grid)
}

/// Exports a JSI (intensity) as `<base>.csv` plus `<base>.json`.
pub fn export_jsi(grid: &IntensityGrid, centers: (f64, f64), base: &Path) -> Result<(), IoError> {
    let n_i = grid.nu_i.len();
    let csv = matrix_csv(grid.nu_s.len(), n_i, |r, c| grid.values[r * n_i + c]);
    write_atomic(&with_suffix(base, ".csv"), csv.as_bytes())?;
    let sidecar = GridSidecar {
        kind: "jsi".into(),
        regime: "intensity".into(),
        omega_s0_rad_per_fs: centers.0,
        omega_i0_rad_per_fs: centers.1,
        nu_s_rad_per_fs: grid.nu_s.clone(),
        nu_i_rad_per_fs: grid.nu_i.clone(),
        arbitrary_units: true,
        norm_scale: None,
    };
    write_json(&with_suffix(base, ".json"), &sidecar)
}

/// Contour CSV with the documented header
/// `omega_p_radfs,detuning_radfs,branch,loop_id`. Column solutions carry
/// loop_id −1; polyline vertices take their loop index.
pub fn export_contour(contour: &PhasematchContour, path: &Path) -> Result<(), IoError> {
    let mut out = String::from("omega_p_radfs,detuning_radfs,branch,loop_id\n");
    for col in &contour.columns {
        for p in &col.points {
            out.push_str(&format!(
                "{},{},{},-1\n",
                fmt17(col.omega_p),
                fmt17(p.detuning),
                p.branch
            ));
        }
    }
    for (id, l) in contour.loops.iter().enumerate() {
        for &(wp, dt) in &l.vertices {
            out.push_str(&format!("{},{},loop,{id}\n", fmt17(wp), fmt17(dt)));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Schmidt report JSON with the full truncated spectrum.
pub fn export_schmidt(report: &SchmidtReport, path: &Path) -> Result<(), IoError> {
    write_json(path, report)
}

pub fn export_negativity(report: &NegativityReport, path: &Path) -> Result<(), IoError> {
    write_json(path, report)
}

/// Reconstruction export: estimate CSV + JSON metrics sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionSidecar {
    pub settings: usize,
    pub budget: f64,
    pub metrics: ErrorMetrics,
    pub resolution_warning: bool,
    pub nu_s_rad_per_fs: Vec<f64>,
    pub nu_i_rad_per_fs: Vec<f64>,
}

pub fn export_reconstruction(rec: &Reconstruction, base: &Path) -> Result<(), IoError> {
    let n_i = rec.estimate.nu_i.len();
    let csv = matrix_csv(rec.estimate.nu_s.len(), n_i, |r, c| rec.estimate.values[r * n_i + c]);
    write_atomic(&with_suffix(base, ".csv"), csv.as_bytes())?;
    let sidecar = ReconstructionSidecar {
        settings: rec.settings,
        budget: rec.budget,
        metrics: rec.metrics,
        resolution_warning: rec.resolution_warning,
        nu_s_rad_per_fs: rec.estimate.nu_s.clone(),
        nu_i_rad_per_fs: rec.estimate.nu_i.clone(),
    };
    write_json(&with_suffix(base, ".json"), &sidecar)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| IoError::Json { path: path.display().to_string(), source })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path)
        .map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

fn with_suffix(base: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(suffix);
    std::path::PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsa::Regime;

    fn sample_grid(seed: u64) -> JsaGrid {
        let spec = GridSpec::symmetric(2.4, 2.2, 0.04, 0.03, 21);
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let amp: Vec<Complex64> =
            (0..21 * 21).map(|_| Complex64::new(next(), next())).collect();
        JsaGrid::new(spec, amp, Regime::Full).unwrap()
    }

    #[test]
    fn jsa_roundtrip_identity() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("grid");
        let grid = sample_grid(99);
        export_jsa(&grid, &base).unwrap();
        let back = import_jsa(&base).unwrap();
        assert_eq!(grid.spec.nu_s, back.spec.nu_s);
        assert_eq!(grid.regime, back.regime);
        for (a, b) in grid.amp.iter().zip(back.amp.iter()) {
            assert_eq!(a, b, "17-digit round trip must be exact");
        }
    }

    #[test]
    fn contour_csv_format() {
        use crate::phasematch::{Branch, ContourColumn, ContourLoop, ContourPoint};
        let contour = PhasematchContour {
            columns: vec![ContourColumn {
                omega_p: 2.0,
                points: vec![ContourPoint { detuning: 0.25, branch: Branch::Inner }],
            }],
            loops: vec![ContourLoop { vertices: vec![(2.0, 0.25), (2.01, 0.26)], closed: false }],
            empty: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("contour.csv");
        export_contour(&contour, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "omega_p_radfs,detuning_radfs,branch,loop_id");
        let first = lines.next().unwrap();
        assert!(first.ends_with(",inner,-1"), "{first}");
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_atomic(&path, b"hello").unwrap();
        let names: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
            .collect();
        assert_eq!(names, vec!["x.csv".to_string()]);
    }
}
