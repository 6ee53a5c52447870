//! Fiber dispersion model: propagation constants k(ω), their frequency
//! derivatives, the dispersion parameter D, and zero-dispersion wavelengths
//! for each supported mode.
//!
//! Two dispersion sources are supported. The step-index surrogate solves the
//! scalar (weakly guiding) characteristic equation for the LP01 and LP11
//! mode groups on top of a fused-silica Sellmeier cladding, standing in for
//! the unpublished photonic-crystal geometry of real sources. Tabulated
//! n_eff(λ) data from an external mode solver is ingested as a first-class
//! alternative.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::constants::{
    lambda_to_omega, omega_to_lambda, C_UM_PER_FS, D_FS_PER_UM2_TO_PS_PER_NM_KM,
    SELLMEIER_B, SELLMEIER_C_UM2, SELLMEIER_LAMBDA_MAX_UM, SELLMEIER_LAMBDA_MIN_UM,
};
use crate::special::{bessel_j0, bessel_j1, bessel_k0, bessel_k1};
use crate::spline::{CubicSpline, SplineError};

/// First zeros of J0 and J1, bracketing the LP01/LP11 u-parameters.
const J0_ZERO1: f64 = 2.404_825_557_695_773;
const J1_ZERO1: f64 = 3.831_705_970_207_512;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum FiberError {
    #[error("wavelength {0} µm outside the Sellmeier validity window")]
    OutOfRange(f64),
    #[error("mode {0} has no guided solution at λ = {1} µm")]
    ModeCutoff(ModeId, f64),
    #[error("tabulated dispersion does not cover λ = {0} µm for mode {1}")]
    TableGap(f64, ModeId),
    #[error("transverse scaling is not defined for tabulated dispersion")]
    UnsupportedForTabulated,
    #[error("mode {0} has no dispersion source in this fiber model")]
    UnknownMode(ModeId),
    #[error("dispersion table parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dispersion table wavelengths not strictly increasing at line {0}")]
    NonMonotonic(usize),
    #[error("invalid fiber parameter: {0}")]
    InvalidParameter(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<SplineError> for FiberError {
    fn from(e: SplineError) -> Self {
        match e {
            SplineError::OutOfDomain { q, .. } => {
                FiberError::TableGap(q, ModeId::Custom("?".into()))
            }
            other => FiberError::InvalidParameter(other.to_string()),
        }
    }
}

/// Transverse mode and polarization label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum ModeId {
    He11x,
    He11y,
    Te01,
    Tm01,
    /// Extension tag for tabulated custom modes.
    Custom(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    X,
    Y,
}

impl ModeId {
    /// Principal-axis polarization of the label; TE01 is x-polarized and
    /// TM01 y-polarized, custom modes carry no polarization tag.
    pub fn polarization(&self) -> Option<Polarization> {
        match self {
            ModeId::He11x | ModeId::Te01 => Some(Polarization::X),
            ModeId::He11y | ModeId::Tm01 => Some(Polarization::Y),
            ModeId::Custom(_) => None,
        }
    }

    /// LP-mode azimuthal order backing this label in the surrogate.
    fn lp_order(&self) -> Option<u8> {
        match self {
            ModeId::He11x | ModeId::He11y => Some(0),
            ModeId::Te01 | ModeId::Tm01 => Some(1),
            ModeId::Custom(_) => None,
        }
    }

    pub fn parse(s: &str) -> ModeId {
        match s {
            "HE11x" => ModeId::He11x,
            "HE11y" => ModeId::He11y,
            "TE01" => ModeId::Te01,
            "TM01" => ModeId::Tm01,
            other => ModeId::Custom(other.to_string()),
        }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeId::He11x => write!(f, "HE11x"),
            ModeId::He11y => write!(f, "HE11y"),
            ModeId::Te01 => write!(f, "TE01"),
            ModeId::Tm01 => write!(f, "TM01"),
            ModeId::Custom(s) => write!(f, "{s}"),
        }
    }
}

/// Per-pump nonlinear coefficients for one SFWM process, 1/(W·km).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GammaPair {
    pub gamma1_per_w_km: f64,
    pub gamma2_per_w_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FiberKind {
    StepIndexSurrogate,
    Tabulated,
}

/// Propagation constant and its first four frequency derivatives at one ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample {
    /// rad/fs
    pub omega: f64,
    /// 1/µm
    pub k: f64,
    /// fs/µm
    pub k1: f64,
    /// fs²/µm
    pub k2: f64,
    /// fs³/µm
    pub k3: f64,
    /// fs⁴/µm
    pub k4: f64,
}

#[derive(Debug, Clone)]
struct ModeTable {
    rows: Vec<(f64, f64)>, // (lambda µm, n_eff)
    spline: CubicSpline,
}

/// Fiber geometry plus per-mode dispersion source.
#[derive(Debug, Clone)]
pub struct FiberModel {
    pub kind: FiberKind,
    /// Core radius of the unscaled geometry (µm); surrogate only.
    pub core_radius_um: f64,
    /// Relative core/cladding index contrast (n_core = n_clad·(1+Δ)).
    pub index_contrast: f64,
    /// Birefringence Δn, applied as ±Δn/2 on x/y-polarized labels.
    pub birefringence_dn: f64,
    /// Transverse geometry scale factor.
    pub scale_factor: f64,
    /// Fiber length in meters.
    pub length_m: f64,
    /// Process label → per-pump nonlinear coefficients.
    pub gamma_table: BTreeMap<String, GammaPair>,
    tables: BTreeMap<ModeId, ModeTable>,
}

impl FiberModel {
    /// Step-index surrogate with the given core radius (µm) and relative
    /// index contrast; weak guidance requires 0 < contrast < 0.05.
    pub fn step_index(core_radius_um: f64, index_contrast: f64) -> Result<Self, FiberError> {
        if core_radius_um <= 0.0 {
            return Err(FiberError::InvalidParameter(format!(
                "core_radius_um = {core_radius_um} must be positive"
            )));
        }
        if !(index_contrast > 0.0 && index_contrast < 0.05) {
            return Err(FiberError::InvalidParameter(format!(
                "index_contrast = {index_contrast} outside (0, 0.05)"
            )));
        }
        Ok(Self {
            kind: FiberKind::StepIndexSurrogate,
            core_radius_um,
            index_contrast,
            birefringence_dn: 0.0,
            scale_factor: 1.0,
            length_m: 1.0,
            gamma_table: BTreeMap::new(),
            tables: BTreeMap::new(),
        })
    }

    /// Empty tabulated model; add modes with [`FiberModel::add_mode_table`].
    pub fn tabulated() -> Self {
        Self {
            kind: FiberKind::Tabulated,
            core_radius_um: 1.0,
            index_contrast: 0.01,
            birefringence_dn: 0.0,
            scale_factor: 1.0,
            length_m: 1.0,
            gamma_table: BTreeMap::new(),
            tables: BTreeMap::new(),
        }
    }

    pub fn with_birefringence(mut self, dn: f64) -> Self {
        self.birefringence_dn = dn;
        self
    }

    pub fn with_length_m(mut self, length_m: f64) -> Self {
        self.length_m = length_m;
        self
    }

    /// Registers nonlinear coefficients for a process label; γ ≥ 0.
    pub fn with_gamma(
        mut self,
        label: &str,
        gamma1_per_w_km: f64,
        gamma2_per_w_km: f64,
    ) -> Result<Self, FiberError> {
        if gamma1_per_w_km < 0.0 || gamma2_per_w_km < 0.0 {
            return Err(FiberError::InvalidParameter(
                "nonlinear coefficients must be nonnegative".into(),
            ));
        }
        self.gamma_table.insert(
            label.to_string(),
            GammaPair { gamma1_per_w_km, gamma2_per_w_km },
        );
        Ok(self)
    }

    /// Adds a tabulated mode; wavelengths must be strictly increasing.
    pub fn add_mode_table(
        mut self,
        mode: ModeId,
        rows: Vec<(f64, f64)>,
    ) -> Result<Self, FiberError> {
        for (i, pair) in rows.windows(2).enumerate() {
            if pair[1].0 <= pair[0].0 {
                return Err(FiberError::NonMonotonic(i + 2));
            }
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
        let spline = CubicSpline::new(xs, ys)
            .map_err(|e| FiberError::InvalidParameter(e.to_string()))?;
        self.tables.insert(mode, ModeTable { rows, spline });
        Ok(self)
    }

    pub fn modes(&self) -> Vec<ModeId> {
        match self.kind {
            FiberKind::StepIndexSurrogate => {
                vec![ModeId::He11x, ModeId::He11y, ModeId::Te01, ModeId::Tm01]
            }
            FiberKind::Tabulated => self.tables.keys().cloned().collect(),
        }
    }

    /// Returns a copy with the transverse scale multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, FiberError> {
        if factor <= 0.0 {
            return Err(FiberError::InvalidParameter(format!(
                "scale factor {factor} must be positive"
            )));
        }
        if self.kind == FiberKind::Tabulated && factor != 1.0 {
            return Err(FiberError::UnsupportedForTabulated);
        }
        let mut out = self.clone();
        out.scale_factor *= factor;
        Ok(out)
    }

    /// Fused-silica Sellmeier refractive index.
    pub fn material_index(lambda_um: f64) -> Result<f64, FiberError> {
        if !(SELLMEIER_LAMBDA_MIN_UM..=SELLMEIER_LAMBDA_MAX_UM).contains(&lambda_um) {
            return Err(FiberError::OutOfRange(lambda_um));
        }
        let l2 = lambda_um * lambda_um;
        let mut s = 0.0;
        for (b, c) in SELLMEIER_B.iter().zip(SELLMEIER_C_UM2.iter()) {
            s += b * l2 / (l2 - c);
        }
        Ok((1.0 + s).sqrt())
    }

    /// Effective index at ω for the given mode, including the birefringence
    /// offset (+Δn/2 on x-polarized labels, −Δn/2 on y-polarized ones).
    pub fn n_eff(&self, mode: &ModeId, omega: f64) -> Result<f64, FiberError> {
        let lambda = omega_to_lambda(omega);
        let base = match self.kind {
            FiberKind::StepIndexSurrogate => self.surrogate_n_eff(mode, lambda)?,
            FiberKind::Tabulated => {
                let table = self
                    .tables
                    .get(mode)
                    .ok_or_else(|| FiberError::UnknownMode(mode.clone()))?;
                table
                    .spline
                    .eval(lambda)
                    .map_err(|_| FiberError::TableGap(lambda, mode.clone()))?
            }
        };
        let offset = match mode.polarization() {
            Some(Polarization::X) => 0.5 * self.birefringence_dn,
            Some(Polarization::Y) => -0.5 * self.birefringence_dn,
            None => 0.0,
        };
        Ok(base + offset)
    }

    /// Propagation constant k(ω) = n_eff·ω/c in 1/µm.
    pub fn propagation_constant(&self, mode: &ModeId, omega: f64) -> Result<f64, FiberError> {
        Ok(self.n_eff(mode, omega)? * omega / C_UM_PER_FS)
    }

    fn surrogate_n_eff(&self, mode: &ModeId, lambda: f64) -> Result<f64, FiberError> {
        let order = mode
            .lp_order()
            .ok_or_else(|| FiberError::UnknownMode(mode.clone()))?;
        let n_clad = Self::material_index(lambda)?;
        let n_core = n_clad * (1.0 + self.index_contrast);
        let a = self.core_radius_um * self.scale_factor;
        let k0 = 2.0 * std::f64::consts::PI / lambda;
        let v = a * k0 * (n_core * n_core - n_clad * n_clad).sqrt();
        let u = solve_lp_u(order, v).ok_or_else(|| FiberError::ModeCutoff(mode.clone(), lambda))?;
        let arg = n_core * n_core - (u / (a * k0)).powi(2);
        Ok(arg.sqrt())
    }

    /// Dispersion sample with k1..k4 from adaptive central differences with
    /// Richardson extrapolation.
    pub fn mode_dispersion(&self, mode: &ModeId, omega: f64) -> Result<DispersionSample, FiberError> {
        let k = self.propagation_constant(mode, omega)?;
        // widest usable half-window around omega
        let span = self.usable_halfspan(mode, omega);
        let f = |om: f64| self.propagation_constant(mode, om);
        let k1 = richardson_derivative(&f, omega, 1, span)?;
        let k2 = richardson_derivative(&f, omega, 2, span)?;
        let k3 = richardson_derivative(&f, omega, 3, span)?;
        let k4 = richardson_derivative(&f, omega, 4, span)?;
        Ok(DispersionSample { omega, k, k1, k2, k3, k4 })
    }

    fn usable_halfspan(&self, mode: &ModeId, omega: f64) -> f64 {
        let (lam_lo, lam_hi) = match self.kind {
            FiberKind::StepIndexSurrogate => (SELLMEIER_LAMBDA_MIN_UM, SELLMEIER_LAMBDA_MAX_UM),
            FiberKind::Tabulated => self
                .tables
                .get(mode)
                .map(|t| t.spline.domain())
                .unwrap_or((SELLMEIER_LAMBDA_MIN_UM, SELLMEIER_LAMBDA_MAX_UM)),
        };
        let om_hi = lambda_to_omega(lam_lo);
        let om_lo = lambda_to_omega(lam_hi);
        ((omega - om_lo).min(om_hi - omega) / 2.1).max(1e-6)
    }

    /// Dispersion parameter D = −(2πc/λ²)·k2 in ps/(nm·km); D < 0 is the
    /// normal regime, D > 0 anomalous.
    pub fn dispersion_parameter(&self, mode: &ModeId, lambda_um: f64) -> Result<f64, FiberError> {
        let omega = lambda_to_omega(lambda_um);
        let s = self.mode_dispersion(mode, omega)?;
        Ok(-(2.0 * std::f64::consts::PI * C_UM_PER_FS / (lambda_um * lambda_um))
            * s.k2
            * D_FS_PER_UM2_TO_PS_PER_NM_KM)
    }

    /// All zero-dispersion wavelengths in `lambda_range`, sorted ascending,
    /// each refined well below the 1e-4 µm contract.
    pub fn find_zdw(&self, mode: &ModeId, lambda_range: (f64, f64)) -> Result<Vec<f64>, FiberError> {
        let (lo, hi) = lambda_range;
        if hi <= lo {
            return Err(FiberError::InvalidParameter(format!(
                "bad wavelength range [{lo}, {hi}]"
            )));
        }
        let n = 257;
        let mut zdws = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..n {
            let lam = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let d = self.dispersion_parameter(mode, lam)?;
            if let Some((lam_p, d_p)) = prev {
                // ignore crossings within the finite-difference noise floor
                // (a dispersionless model has |D| at the 1e-7 level)
                let noise = d_p.abs().max(d.abs()) < 1e-4;
                if d_p == 0.0 && !noise {
                    zdws.push(lam_p);
                } else if d_p * d < 0.0 && !noise {
                    zdws.push(self.bisect_zdw(mode, lam_p, lam, d_p)?);
                }
            }
            prev = Some((lam, d));
        }
        Ok(zdws)
    }

    fn bisect_zdw(&self, mode: &ModeId, mut lo: f64, mut hi: f64, d_lo: f64) -> Result<f64, FiberError> {
        let sign_lo = d_lo.signum();
        while hi - lo > 1e-7 {
            let mid = 0.5 * (lo + hi);
            let d = self.dispersion_parameter(mode, mid)?;
            if d == 0.0 {
                return Ok(mid);
            }
            if d.signum() == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Loads a tabulated model from CSV with header `mode,lambda_um,n_eff`.
    pub fn load_dispersion_table(path: &Path) -> Result<Self, FiberError> {
        let text = std::fs::read_to_string(path).map_err(|e| FiberError::Io(e.to_string()))?;
        Self::parse_dispersion_table(&text)
    }

    pub fn parse_dispersion_table(text: &str) -> Result<Self, FiberError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(FiberError::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        if header.trim() != "mode,lambda_um,n_eff" {
            return Err(FiberError::Parse {
                line: 1,
                msg: format!("expected header `mode,lambda_um,n_eff`, got `{}`", header.trim()),
            });
        }
        let mut per_mode: BTreeMap<ModeId, Vec<(f64, f64)>> = BTreeMap::new();
        let mut last_lambda: BTreeMap<ModeId, f64> = BTreeMap::new();
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let mut parts = raw.split(',');
            let mode = ModeId::parse(parts.next().unwrap_or("").trim());
            let lam: f64 = parts
                .next()
                .ok_or(FiberError::Parse { line: line_no, msg: "missing lambda_um".into() })?
                .trim()
                .parse()
                .map_err(|e| FiberError::Parse { line: line_no, msg: format!("lambda_um: {e}") })?;
            let n: f64 = parts
                .next()
                .ok_or(FiberError::Parse { line: line_no, msg: "missing n_eff".into() })?
                .trim()
                .parse()
                .map_err(|e| FiberError::Parse { line: line_no, msg: format!("n_eff: {e}") })?;
            if parts.next().is_some() {
                return Err(FiberError::Parse { line: line_no, msg: "too many columns".into() });
            }
            if let Some(&prev) = last_lambda.get(&mode) {
                if lam <= prev {
                    return Err(FiberError::NonMonotonic(line_no));
                }
            }
            last_lambda.insert(mode.clone(), lam);
            per_mode.entry(mode).or_default().push((lam, n));
        }
        let mut model = FiberModel::tabulated();
        for (mode, rows) in per_mode {
            model = model.add_mode_table(mode, rows)?;
        }
        Ok(model)
    }

    /// Writes the per-mode tables back out in the load format, 17 significant
    /// digits for lossless round-trips.
    pub fn export_dispersion_table(&self, path: &Path) -> Result<(), FiberError> {
        let mut out = String::from("mode,lambda_um,n_eff\n");
        for (mode, table) in &self.tables {
            for &(lam, n) in &table.rows {
                out.push_str(&format!("{mode},{},{}\n", fmt17(lam), fmt17(n)));
            }
        }
        crate::io::write_atomic(path, out.as_bytes()).map_err(|e| FiberError::Io(e.to_string()))
    }
}

pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Solves the weakly-guiding characteristic equation for the fundamental
/// root of the LP01 (`order` 0) or LP11 (`order` 1) group; returns None past
/// cutoff.
fn solve_lp_u(order: u8, v: f64) -> Option<f64> {
    let (lo, hi, f): (f64, f64, fn(f64, f64) -> f64) = match order {
        0 => {
            // u·J1/J0 − w·K1/K0 = 0, root in (0, min(V, j01))
            fn f0(u: f64, v: f64) -> f64 {
                let w = (v * v - u * u).sqrt();
                u * bessel_j1(u) / bessel_j0(u) - w * bessel_k1(w) / bessel_k0(w)
            }
            (1e-9, v.min(J0_ZERO1) * (1.0 - 1e-12), f0)
        }
        1 => {
            if v <= J0_ZERO1 {
                return None;
            }
            // u·J0/J1 + w·K0/K1 = 0, root in (j01, min(V, j11))
            fn f1(u: f64, v: f64) -> f64 {
                let w = (v * v - u * u).sqrt();
                u * bessel_j0(u) / bessel_j1(u) + w * bessel_k0(w) / bessel_k1(w)
            }
            (J0_ZERO1 * (1.0 + 1e-12), v.min(J1_ZERO1) * (1.0 - 1e-12), f1)
        }
        _ => return None,
    };
    let mut lo = lo;
    let mut hi = hi;
    if hi <= lo {
        return None;
    }
    let f_lo = f(lo, v);
    let f_hi = f(hi, v);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    let sign_lo = f_lo.signum();
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid, v);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * v {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Central finite difference of the given order with Richardson
/// extrapolation on an adaptive step ladder; accepts the first pair whose
/// extrapolated values agree to 1e-6 relative, otherwise returns the most
/// converged pair.
pub(crate) fn richardson_derivative<F>(
    f: &F,
    x: f64,
    order: u8,
    max_half_span: f64,
) -> Result<f64, FiberError>
where
    F: Fn(f64) -> Result<f64, FiberError>,
{
    let reach = match order {
        1 | 2 => 2.0, // richardson needs x ± h at the largest ladder step h
        _ => 4.0,     // 5-point stencils reach x ± 2h
    };
    let h_top = (0.12 * x.max(0.5)).min(max_half_span / reach).max(1e-9);
    let stencil = |h: f64| -> Result<f64, FiberError> {
        Ok(match order {
            1 => (f(x + h)? - f(x - h)?) / (2.0 * h),
            2 => (f(x + h)? - 2.0 * f(x)? + f(x - h)?) / (h * h),
            3 => (f(x + 2.0 * h)? - 2.0 * f(x + h)? + 2.0 * f(x - h)? - f(x - 2.0 * h)?)
                / (2.0 * h * h * h),
            4 => (f(x + 2.0 * h)? - 4.0 * f(x + h)? + 6.0 * f(x)? - 4.0 * f(x - h)?
                + f(x - 2.0 * h)?)
                / (h * h * h * h),
            _ => unreachable!("derivative order out of range"),
        })
    };
    let mut best = f64::NAN;
    let mut best_change = f64::INFINITY;
    let mut h = h_top;
    let mut prev_r: Option<f64> = None;
    for _ in 0..5 {
        let d_h = stencil(h)?;
        let d_h2 = stencil(h / 2.0)?;
        // both stencils are O(h²) accurate
        let r = (4.0 * d_h2 - d_h) / 3.0;
        if let Some(rp) = prev_r {
            let change = (r - rp).abs() / r.abs().max(1e-300);
            if change < best_change {
                best_change = change;
                best = r;
            }
            if change < 1e-6 {
                return Ok(r);
            }
        } else {
            best = r;
        }
        prev_r = Some(r);
        h /= 2.0;
    }
    Ok(best)
}
