//! Joint spectral amplitude engines.
//!
//! Four regimes are implemented on a shared complex grid type: the full
//! pump-convolution quadrature, the linearized sinc form, the dual-pump
//! temporal-walk-off erf form with its Gaussian limit, and the
//! counter-propagating form. The global conversion-efficiency constant is
//! not modeled; grids are in arbitrary units until [`normalize_jsi`] fixes
//! the discrete L² norm to one.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::UM_PER_M;
use crate::fiber::{FiberError, FiberModel, ModeId};
use crate::phasematch::{
    nonlinear_phase, Direction, GroupDelayTerms, PhasematchError, ProcessSpec, TermVariant,
};
use crate::special::{erf_diff_scaled, sinc, SpecialFnError};
use crate::spline::CubicSpline;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum JsaError {
    #[error("adaptive quadrature failed to converge at grid cell ({0}, {1})")]
    QuadratureNonConvergence(usize, usize),
    #[error("complex error function overflow at grid cell ({0}, {1}): {2}")]
    FaddeevaOverflow(usize, usize, String),
    #[error("grid amplitude is identically zero")]
    ZeroGrid,
    #[error("grid axes must be uniform and strictly increasing")]
    BadAxes,
    #[error("pump and emission centers violate energy conservation by {0} rad/fs")]
    InconsistentCenters(f64),
    #[error("process directions do not match the requested regime: {0}")]
    WrongDirections(String),
    #[error(transparent)]
    Phasematch(#[from] PhasematchError),
    #[error(transparent)]
    Dispersion(#[from] FiberError),
}

/// Pump pulse description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    /// Center frequency ω₀ (rad/fs).
    pub center_omega: f64,
    /// Gaussian 1/e amplitude half-width σ (rad/fs).
    pub sigma: f64,
    /// Average power (W), used by brightness estimates.
    pub average_power_w: f64,
    /// Peak power (W), used by the nonlinear phase.
    pub peak_power_w: f64,
    /// Quadratic spectral phase coefficient (fs²); linear chirp.
    pub chirp_fs2: f64,
    /// Arrival delay τ (fs), consumed by the counter-propagating regime.
    pub delay_fs: f64,
}

impl PumpSpec {
    pub fn new(center_omega: f64, sigma: f64) -> Self {
        assert!(sigma > 0.0, "pump bandwidth must be positive");
        Self {
            center_omega,
            sigma,
            average_power_w: 0.0,
            peak_power_w: 0.0,
            chirp_fs2: 0.0,
            delay_fs: 0.0,
        }
    }

    pub fn with_chirp(mut self, chirp_fs2: f64) -> Self {
        self.chirp_fs2 = chirp_fs2;
        self
    }

    pub fn with_delay(mut self, delay_fs: f64) -> Self {
        self.delay_fs = delay_fs;
        self
    }

    pub fn with_powers(mut self, average_w: f64, peak_w: f64) -> Self {
        self.average_power_w = average_w;
        self.peak_power_w = peak_w;
        self
    }
}

/// Unit-L²-norm Gaussian spectral envelope with optional quadratic phase,
/// evaluated at detuning ν from the pump center.
pub fn pump_envelope(pump: &PumpSpec, nu: f64) -> Complex64 {
    let norm = (2.0 / std::f64::consts::PI).powf(0.25) / pump.sigma.sqrt();
    let mag = norm * (-nu * nu / (pump.sigma * pump.sigma)).exp();
    let phase = pump.chirp_fs2 * nu * nu;
    Complex64::from_polar(mag, phase)
}

/// Evaluation regime of a stored JSA grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Full,
    Linearized,
    DualPumpErf,
    DualPumpGaussian,
    CounterProp,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Full => "full",
            Regime::Linearized => "linearized",
            Regime::DualPumpErf => "dualpump_erf",
            Regime::DualPumpGaussian => "dualpump_gaussian",
            Regime::CounterProp => "counterprop",
        };
        write!(f, "{s}")
    }
}

/// Rectangular detuning grid specification about the emission centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nu_s: Vec<f64>,
    pub nu_i: Vec<f64>,
    pub omega_s0: f64,
    pub omega_i0: f64,
}

impl GridSpec {
    /// Uniform grid spanning ±span about each center.
    pub fn symmetric(omega_s0: f64, omega_i0: f64, span_s: f64, span_i: f64, n: usize) -> Self {
        let ax = |span: f64| -> Vec<f64> {
            (0..n).map(|k| -span + 2.0 * span * k as f64 / (n - 1) as f64).collect()
        };
        Self { nu_s: ax(span_s), nu_i: ax(span_i), omega_s0, omega_i0 }
    }

    /// Default 256×256 grid spanning ±4 marginal widths estimated from the
    /// linearized Gaussian model of the JSA.
    pub fn auto_from_terms(terms: &GroupDelayTerms, n: usize) -> Self {
        let (w_s, w_i) = marginal_width_estimate(terms);
        Self::symmetric(terms.centers.omega_s, terms.centers.omega_i, 4.0 * w_s, 4.0 * w_i, n)
    }

    fn validate(&self) -> Result<(f64, f64), JsaError> {
        let step = |ax: &[f64]| -> Result<f64, JsaError> {
            if ax.len() < 2 {
                return Err(JsaError::BadAxes);
            }
            let d = ax[1] - ax[0];
            if d <= 0.0 {
                return Err(JsaError::BadAxes);
            }
            for w in ax.windows(2) {
                if ((w[1] - w[0]) - d).abs() > 1e-9 * d.abs().max(1e-30) {
                    return Err(JsaError::BadAxes);
                }
            }
            Ok(d)
        };
        Ok((step(&self.nu_s)?, step(&self.nu_i)?))
    }
}

/// Marginal 1/e intensity half-widths of the Gaussian-approximated JSA
/// (pump exponential plus Gaussian-fitted phasematching), used for default
/// grid spans. Falls back to the pump width alone when the quadratic form
/// degenerates (dispersionless fiber).
fn marginal_width_estimate(terms: &GroupDelayTerms) -> (f64, f64) {
    let s2 = terms.sigma1 * terms.sigma1 + terms.sigma2 * terms.sigma2;
    let a = 1.0 / s2;
    let g = crate::constants::GAMMA_FACTORABILITY;
    // |F|² ≈ exp(−2a(νs+νi)² − 2Γ(T_sνs+T_iνi)²)
    let q11 = 2.0 * a + 2.0 * g * terms.t_s * terms.t_s;
    let q22 = 2.0 * a + 2.0 * g * terms.t_i * terms.t_i;
    let q12 = 2.0 * a + 2.0 * g * terms.t_s * terms.t_i;
    let det = q11 * q22 - q12 * q12;
    if det <= 1e-12 * q11.max(q22).powi(2) {
        let w = (1.0 / a).sqrt();
        return (w, w);
    }
    // 1/e half-width of the marginal: sqrt of diagonal of the inverse form
    ((q22 / det).sqrt(), (q11 / det).sqrt())
}

/// Complex joint spectral amplitude sampled on a rectangular detuning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsaGrid {
    pub spec: GridSpec,
    /// Row-major amplitude, index = i_s * nu_i.len() + i_i.
    pub amp: Vec<Complex64>,
    pub regime: Regime,
    /// Amplitudes are in arbitrary units (conversion-efficiency constant
    /// absorbed) until normalized.
    pub arb_units: bool,
    /// Scale applied by the last normalization, if any.
    pub norm_scale: Option<f64>,
}

impl JsaGrid {
    pub fn new(spec: GridSpec, amp: Vec<Complex64>, regime: Regime) -> Result<Self, JsaError> {
        spec.validate()?;
        if amp.len() != spec.nu_s.len() * spec.nu_i.len() {
            return Err(JsaError::BadAxes);
        }
        Ok(Self { spec, amp, regime, arb_units: true, norm_scale: None })
    }

    pub fn n_s(&self) -> usize {
        self.spec.nu_s.len()
    }

    pub fn n_i(&self) -> usize {
        self.spec.nu_i.len()
    }

    pub fn step_s(&self) -> f64 {
        self.spec.nu_s[1] - self.spec.nu_s[0]
    }

    pub fn step_i(&self) -> f64 {
        self.spec.nu_i[1] - self.spec.nu_i[0]
    }

    pub fn at(&self, i_s: usize, i_i: usize) -> Complex64 {
        self.amp[i_s * self.n_i() + i_i]
    }

    /// Discrete L² norm: sqrt(Σ|F|²·Δν_s·Δν_i).
    pub fn l2_norm(&self) -> f64 {
        let cell = self.step_s() * self.step_i();
        (self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * cell).sqrt()
    }

    /// |F|² on the same grid.
    pub fn intensity(&self) -> Vec<f64> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn axes_match(&self, other: &JsaGrid) -> bool {
        self.spec.nu_s == other.spec.nu_s && self.spec.nu_i == other.spec.nu_i
    }

    /// Index of the maximum |F| cell.
    pub fn peak_cell(&self) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        let mut best_v = -1.0;
        for i_s in 0..self.n_s() {
            for i_i in 0..self.n_i() {
                let v = self.at(i_s, i_i).norm_sqr();
                if v > best_v {
                    best_v = v;
                    best = (i_s, i_i);
                }
            }
        }
        best
    }

    /// Intensity-weighted orientation angle of the JSI in degrees, from
    /// second moments, folded into (−90°, 90°]. Cells below 1% of the peak
    /// intensity are masked out so the slowly-decaying sinc side lobes do not
    /// dominate the window-dependent second moments.
    pub fn moment_orientation_deg(&self) -> f64 {
        let peak = self.amp.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        let cut = 0.01 * peak;
        let mut m00 = 0.0;
        let (mut mx, mut my) = (0.0, 0.0);
        for i_s in 0..self.n_s() {
            for i_i in 0..self.n_i() {
                let w = self.at(i_s, i_i).norm_sqr();
                if w < cut {
                    continue;
                }
                m00 += w;
                mx += w * self.spec.nu_s[i_s];
                my += w * self.spec.nu_i[i_i];
            }
        }
        let (cx, cy) = (mx / m00, my / m00);
        let (mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0);
        for i_s in 0..self.n_s() {
            for i_i in 0..self.n_i() {
                let w = self.at(i_s, i_i).norm_sqr();
                if w < cut {
                    continue;
                }
                let dx = self.spec.nu_s[i_s] - cx;
                let dy = self.spec.nu_i[i_i] - cy;
                mxx += w * dx * dx;
                myy += w * dy * dy;
                mxy += w * dx * dy;
            }
        }
        let mut theta = 0.5 * (2.0 * mxy).atan2(mxx - myy).to_degrees();
        if theta > 90.0 {
            theta -= 180.0;
        } else if theta <= -90.0 {
            theta += 180.0;
        }
        theta
    }
}

/// Rescales the amplitude so the discrete L² norm is 1; the applied scale is
/// recorded. Idempotent within rounding.
pub fn normalize_jsi(grid: &JsaGrid) -> Result<JsaGrid, JsaError> {
    let norm = grid.l2_norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(JsaError::ZeroGrid);
    }
    let mut out = grid.clone();
    for a in &mut out.amp {
        *a /= norm;
    }
    out.norm_scale = Some(1.0 / norm);
    out.arb_units = false;
    Ok(out)
}

// --- cached dispersion ---------------------------------------------------------

/// Dense spline cache of k(ω) per wave, so grid quadratures avoid re-running
/// the characteristic-equation solve at every integrand sample.
struct DispersionCache {
    kp1: CubicSpline,
    kp2: CubicSpline,
    ks: CubicSpline,
    ki: CubicSpline,
    phi_nl: f64,
    signs: [f64; 4],
}

const CACHE_SAMPLES: usize = 2048;

impl DispersionCache {
    fn build(
        fiber: &FiberModel,
        process: &ProcessSpec,
        windows: [(f64, f64); 4], // (lo, hi) per wave: p1, p2, s, i
    ) -> Result<Self, JsaError> {
        let sample = |mode: &ModeId, (lo, hi): (f64, f64)| -> Result<CubicSpline, JsaError> {
            let mut xs = Vec::with_capacity(CACHE_SAMPLES);
            let mut ys = Vec::with_capacity(CACHE_SAMPLES);
            for k in 0..CACHE_SAMPLES {
                let om = lo + (hi - lo) * k as f64 / (CACHE_SAMPLES - 1) as f64;
                xs.push(om);
                ys.push(fiber.propagation_constant(mode, om)?);
            }
            CubicSpline::new(xs, ys).map_err(|_| JsaError::BadAxes)
        };
        Ok(Self {
            kp1: sample(&process.pump1.mode, windows[0])?,
            kp2: sample(&process.pump2.mode, windows[1])?,
            ks: sample(&process.signal.mode, windows[2])?,
            ki: sample(&process.idler.mode, windows[3])?,
            phi_nl: nonlinear_phase(fiber, process)?,
            signs: [
                process.pump1.direction.sign(),
                process.pump2.direction.sign(),
                process.signal.direction.sign(),
                process.idler.direction.sign(),
            ],
        })
    }

    /// Δk with the cached splines; ω_i from energy conservation.
    fn delta_k(&self, omega_p1: f64, omega_p2: f64, omega_s: f64) -> Option<f64> {
        let omega_i = omega_p1 + omega_p2 - omega_s;
        Some(
            self.signs[0] * self.kp1.eval(omega_p1).ok()?
                + self.signs[1] * self.kp2.eval(omega_p2).ok()?
                - self.signs[2] * self.ks.eval(omega_s).ok()?
                - self.signs[3] * self.ki.eval(omega_i).ok()?
                - self.phi_nl,
        )
    }

    /// κ = k₁ + k₂ + k_s + k_i (all magnitudes), for the CP phase factor.
    fn kappa(&self, omega_p1: f64, omega_p2: f64, omega_s: f64) -> Option<f64> {
        let omega_i = omega_p1 + omega_p2 - omega_s;
        Some(
            self.kp1.eval(omega_p1).ok()?
                + self.kp2.eval(omega_p2).ok()?
                + self.ks.eval(omega_s).ok()?
                + self.ki.eval(omega_i).ok()?,
        )
    }
}

// --- adaptive quadrature ---------------------------------------------------------

const GL15_X: [f64; 15] = [
    -0.987_992_518_020_485_4,
    -0.937_273_392_400_706,
    -0.848_206_583_410_427_2,
    -0.724_417_731_360_170_1,
    -0.570_972_172_608_538_8,
    -0.394_151_347_077_563_4,
    -0.201_194_093_997_434_51,
    0.0,
    0.201_194_093_997_434_51,
    0.394_151_347_077_563_4,
    0.570_972_172_608_538_8,
    0.724_417_731_360_170_1,
    0.848_206_583_410_427_2,
    0.937_273_392_400_706,
    0.987_992_518_020_485_4,
];
const GL15_W: [f64; 15] = [
    0.030_753_241_996_117_27,
    0.070_366_047_488_108_12,
    0.107_159_220_467_171_94,
    0.139_570_677_926_154_32,
    0.166_269_205_816_993_92,
    0.186_161_000_015_562_2,
    0.198_431_485_327_111_58,
    0.202_578_241_925_561_3,
    0.198_431_485_327_111_58,
    0.186_161_000_015_562_2,
    0.166_269_205_816_993_92,
    0.139_570_677_926_154_32,
    0.107_159_220_467_171_94,
    0.070_366_047_488_108_12,
    0.030_753_241_996_117_27,
];

fn gl15<F: Fn(f64) -> Option<Complex64>>(f: &F, a: f64, b: f64) -> Option<Complex64> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in GL15_X.iter().zip(GL15_W.iter()) {
        acc += f(c + h * x)? * *w;
    }
    Some(acc * h)
}

/// Adaptive Gauss–Legendre: a panel is accepted when its value agrees with
/// the sum over its halves within the tolerance share assigned to it.
fn adaptive_gl<F: Fn(f64) -> Option<Complex64>>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: u32,
) -> Option<Complex64> {
    fn rec<F: Fn(f64) -> Option<Complex64>>(
        f: &F,
        a: f64,
        b: f64,
        whole: Complex64,
        tol: f64,
        depth: u32,
    ) -> Option<Complex64> {
        let m = 0.5 * (a + b);
        let left = gl15(f, a, m)?;
        let right = gl15(f, m, b)?;
        let sum = left + right;
        if (sum - whole).norm() <= tol || depth == 0 {
            if depth == 0 && (sum - whole).norm() > tol * 16.0 {
                return None; // genuinely non-convergent
            }
            Some(sum)
        } else {
            let l = rec(f, a, m, left, 0.5 * tol, depth - 1)?;
            let r = rec(f, m, b, right, 0.5 * tol, depth - 1)?;
            Some(l + r)
        }
    }
    let whole = gl15(f, a, b)?;
    rec(f, a, b, whole, abs_tol, max_depth)
}

// --- engines ---------------------------------------------------------

const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_MAX_DEPTH: u32 = 42;

/// Full-quadrature JSA: for each grid cell, numeric integration of
/// α₁(ω)α₂(ω_s+ω_i−ω)·sinc[(L/2)Δk]·exp[i(L/2)Δk] over the pump-convolution
/// variable, on panels spanning ±5 effective pump widths.
pub fn jsa_full(
    fiber: &FiberModel,
    process: &ProcessSpec,
    pump1: &PumpSpec,
    pump2: &PumpSpec,
    grid: &GridSpec,
) -> Result<JsaGrid, JsaError> {
    if !process.is_co_propagating() {
        return Err(JsaError::WrongDirections(
            "jsa_full requires a co-propagating process".into(),
        ));
    }
    check_centers(pump1, pump2, grid)?;
    grid.validate()?;
    let l_half = 0.5 * fiber.length_m * UM_PER_M;
    let sig_eff = pump1.sigma * pump2.sigma / (pump1.sigma.hypot(pump2.sigma));
    let span_s = grid.nu_s.last().unwrap().abs().max(grid.nu_s[0].abs());
    let span_i = grid.nu_i.last().unwrap().abs().max(grid.nu_i[0].abs());
    let pump_reach = 6.0 * sig_eff + span_s + span_i;
    let cache = DispersionCache::build(
        fiber,
        process,
        [
            (pump1.center_omega - pump_reach, pump1.center_omega + pump_reach),
            (pump2.center_omega - pump_reach, pump2.center_omega + pump_reach),
            (grid.omega_s0 - 1.5 * span_s - 1e-6, grid.omega_s0 + 1.5 * span_s + 1e-6),
            (grid.omega_i0 - 1.5 * span_i - pump_reach, grid.omega_i0 + 1.5 * span_i + pump_reach),
        ],
    )?;
    // absolute tolerance anchored at the center-cell envelope overlap
    let peak_scale = envelope_overlap_scale(pump1, pump2);
    let tol = QUAD_REL_TOL * peak_scale;
    let n_i = grid.nu_i.len();
    let amp: Result<Vec<Complex64>, JsaError> = grid
        .nu_s
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i_s, &nu_s)| {
            let cache = &cache;
            grid.nu_i.iter().enumerate().map(move |(i_i, &nu_i)| {
                let omega_s = grid.omega_s0 + nu_s;
                let omega_sum = omega_s + grid.omega_i0 + nu_i;
                // Gaussian product center and width in the ω variable
                let inv1 = 1.0 / (pump1.sigma * pump1.sigma);
                let inv2 = 1.0 / (pump2.sigma * pump2.sigma);
                let center = (pump1.center_omega * inv1
                    + (omega_sum - pump2.center_omega) * inv2)
                    / (inv1 + inv2);
                let integrand = |om: f64| -> Option<Complex64> {
                    let dk = cache.delta_k(om, omega_sum - om, omega_s)?;
                    let x = l_half * dk;
                    let a1 = pump_envelope(pump1, om - pump1.center_omega);
                    let a2 = pump_envelope(pump2, omega_sum - om - pump2.center_omega);
                    Some(a1 * a2 * sinc(x) * Complex64::from_polar(1.0, x))
                };
                adaptive_gl(
                    &integrand,
                    center - 5.0 * sig_eff,
                    center + 5.0 * sig_eff,
                    tol,
                    QUAD_MAX_DEPTH,
                )
                .ok_or(JsaError::QuadratureNonConvergence(i_s, i_i))
            })
        })
        .collect();
    let _ = n_i;
    JsaGrid::new(grid.clone(), amp?, Regime::Full)
}

fn check_centers(pump1: &PumpSpec, pump2: &PumpSpec, grid: &GridSpec) -> Result<(), JsaError> {
    let gap =
        (pump1.center_omega + pump2.center_omega - grid.omega_s0 - grid.omega_i0).abs();
    if gap > 1e-9 {
        return Err(JsaError::InconsistentCenters(gap));
    }
    Ok(())
}

/// Scale of the JSA peak: the envelope convolution at zero total detuning.
fn envelope_overlap_scale(pump1: &PumpSpec, pump2: &PumpSpec) -> f64 {
    let s1 = pump1.sigma;
    let s2 = pump2.sigma;
    // ∫ α1 α2 with unit-norm Gaussians = sqrt(2/π)^(1/2)… evaluated directly:
    // N1 N2 ∫ exp(−t²/s1² − t²/s2²) dt
    let n1 = (2.0 / std::f64::consts::PI).powf(0.25) / s1.sqrt();
    let n2 = (2.0 / std::f64::consts::PI).powf(0.25) / s2.sqrt();
    n1 * n2 * (std::f64::consts::PI / (1.0 / (s1 * s1) + 1.0 / (s2 * s2))).sqrt()
}

/// Linearized JSA: F = α(ν_s+ν_i)·sinc[(T_sν_s+T_iν_i)/2]·exp[i(T_sν_s+T_iν_i)/2]
/// with the convolved pump envelope exp[−(ν_s+ν_i)²/(σ₁²+σ₂²)].
pub fn jsa_linearized(terms: &GroupDelayTerms, grid: &GridSpec) -> Result<JsaGrid, JsaError> {
    grid.validate()?;
    let s2 = terms.sigma1 * terms.sigma1 + terms.sigma2 * terms.sigma2;
    let mut amp = Vec::with_capacity(grid.nu_s.len() * grid.nu_i.len());
    for &nu_s in &grid.nu_s {
        for &nu_i in &grid.nu_i {
            let u = terms.t_s * nu_s + terms.t_i * nu_i;
            let env = (-(nu_s + nu_i) * (nu_s + nu_i) / s2).exp();
            let pm = sinc(0.5 * u);
            amp.push(Complex64::from_polar(env * pm.abs(), 0.5 * u + if pm < 0.0 { std::f64::consts::PI } else { 0.0 }));
        }
    }
    JsaGrid::new(grid.clone(), amp, Regime::Linearized)
}

/// Which evaluator the dual-pump walk-off JSA uses for the phasematching
/// factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkoffForm {
    /// Full erf-difference expression.
    Erf,
    /// |στ_p| ≫ 1 Gaussian limit exp[−((T_sν_s+T_iν_i)/(στ_p))²].
    GaussianLimit,
}

/// Dual-pump temporal-walk-off JSA (erf form). `tau_fs` is the pump arrival
/// delay at the fiber input; the terms must carry the mean-pump-referenced
/// variant so the weighting matches that form. In the τ_p → 0 limit the
/// expression reduces to the sinc form, which is evaluated directly when
/// |στ_p| underflows.
pub fn jsa_dualpump_walkoff(
    terms: &GroupDelayTerms,
    tau_fs: f64,
    form: WalkoffForm,
    grid: &GridSpec,
) -> Result<JsaGrid, JsaError> {
    assert_eq!(
        terms.variant,
        TermVariant::MeanPumpReferenced,
        "dual-pump walk-off JSA expects mean-pump-referenced group-delay terms"
    );
    grid.validate()?;
    let s1 = terms.sigma1;
    let s2 = terms.sigma2;
    let s2sum = s1 * s1 + s2 * s2;
    let sigma = s1 * s2 / s2sum.sqrt();
    let stp = sigma * terms.tau_p;
    if stp.abs() < 1e-12 && form == WalkoffForm::Erf {
        let mut g = jsa_linearized(terms, grid)?;
        g.regime = Regime::DualPumpErf;
        return Ok(g);
    }
    let c_lo = 0.5 * sigma * tau_fs;
    let c_hi = 0.5 * sigma * (tau_fs + terms.tau_p);
    let mut amp = Vec::with_capacity(grid.nu_s.len() * grid.nu_i.len());
    for (i_s, &nu_s) in grid.nu_s.iter().enumerate() {
        for (i_i, &nu_i) in grid.nu_i.iter().enumerate() {
            let u = terms.t_s * nu_s + terms.t_i * nu_i;
            let beta = u / stp;
            let env = (-(nu_s + nu_i) * (nu_s + nu_i) / s2sum).exp();
            let pm = match form {
                WalkoffForm::Erf => {
                    let (lo, hi) = if c_lo <= c_hi { (c_lo, c_hi) } else { (c_hi, c_lo) };
                    let flip = if c_lo <= c_hi { 1.0 } else { -1.0 };
                    flip * erf_diff_scaled(beta, lo, hi).map_err(|e: SpecialFnError| {
                        JsaError::FaddeevaOverflow(i_s, i_i, e.to_string())
                    })?
                }
                WalkoffForm::GaussianLimit => Complex64::new((-beta * beta).exp(), 0.0),
            };
            amp.push(env * pm);
        }
    }
    let regime = match form {
        WalkoffForm::Erf => Regime::DualPumpErf,
        WalkoffForm::GaussianLimit => Regime::DualPumpGaussian,
    };
    JsaGrid::new(grid.clone(), amp, regime)
}

/// Counter-propagating JSA. Evaluates
/// F_CP = ∫dω α₁₊(ω) α₂₋(ω_s+ω_i−ω) sinc[(L/2)Δk_CP] exp[i(L/2)κ] exp(iωτ)
/// through the exact identity sinc[(L/2)Δk]·e^{i(L/2)Δk} = (1/L)∫₀^L e^{izΔk}dz,
/// swapping the ω and z integrals so each inner ω integral is a smooth
/// Gaussian-localized oscillation; the outer z integral is confined to the
/// pump-overlap region where the inner integral is not dephased.
pub fn jsa_counterprop(
    fiber: &FiberModel,
    process: &ProcessSpec,
    pump1: &PumpSpec,
    pump2: &PumpSpec,
    grid: &GridSpec,
) -> Result<JsaGrid, JsaError> {
    let backwards = [&process.pump1, &process.pump2]
        .iter()
        .filter(|w| w.direction == Direction::Backward)
        .count();
    if backwards != 1 {
        return Err(JsaError::WrongDirections(
            "counter-propagating regime needs exactly one backward pump".into(),
        ));
    }
    check_centers(pump1, pump2, grid)?;
    grid.validate()?;
    let l_um = fiber.length_m * UM_PER_M;
    let tau = pump1.delay_fs - pump2.delay_fs;
    let sig_eff = pump1.sigma * pump2.sigma / pump1.sigma.hypot(pump2.sigma);
    let span_s = grid.nu_s.last().unwrap().abs().max(grid.nu_s[0].abs());
    let span_i = grid.nu_i.last().unwrap().abs().max(grid.nu_i[0].abs());
    let pump_reach = 6.0 * sig_eff + span_s + span_i;
    let cache = DispersionCache::build(
        fiber,
        process,
        [
            (pump1.center_omega - pump_reach, pump1.center_omega + pump_reach),
            (pump2.center_omega - pump_reach, pump2.center_omega + pump_reach),
            (grid.omega_s0 - 1.5 * span_s - 1e-6, grid.omega_s0 + 1.5 * span_s + 1e-6),
            (grid.omega_i0 - 1.5 * span_i - pump_reach, grid.omega_i0 + 1.5 * span_i + pump_reach),
        ],
    )?;
    let peak_scale = envelope_overlap_scale(pump1, pump2);
    let tol = 1e-8 * peak_scale;
    let amp: Result<Vec<Complex64>, JsaError> = grid
        .nu_s
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i_s, &nu_s)| {
            let cache = &cache;
            grid.nu_i.iter().enumerate().map(move |(i_i, &nu_i)| {
                let omega_s = grid.omega_s0 + nu_s;
                let omega_sum = omega_s + grid.omega_i0 + nu_i;
                let inv1 = 1.0 / (pump1.sigma * pump1.sigma);
                let inv2 = 1.0 / (pump2.sigma * pump2.sigma);
                let om_c = (pump1.center_omega * inv1
                    + (omega_sum - pump2.center_omega) * inv2)
                    / (inv1 + inv2);
                // phase Ψ(ω, z) = zΔk + (L/2)(κ−Δk) + ωτ; slope in ω at ω_c
                // determines which z window is not dephased
                let h = 1e-4;
                let dk_c = cache.delta_k(om_c, omega_sum - om_c, omega_s);
                let dk_p = cache.delta_k(om_c + h, omega_sum - om_c - h, omega_s);
                let kap_c = cache.kappa(om_c, omega_sum - om_c, omega_s);
                let kap_p = cache.kappa(om_c + h, omega_sum - om_c - h, omega_s);
                let (dk_c, dk_p, kap_c, kap_p) = match (dk_c, dk_p, kap_c, kap_p) {
                    (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                    _ => return Err(JsaError::QuadratureNonConvergence(i_s, i_i)),
                };
                let _ = dk_c;
                let dkd = (dk_p - dk_c) / h;
                let kapd = (kap_p - kap_c) / h;
                let sigma_w = 1.0 / (inv1 + inv2).sqrt();
                // z* where the total ω-slope vanishes
                let base_slope = 0.5 * l_um * (kapd - dkd) + tau;
                let z_star = if dkd.abs() > 1e-30 { -base_slope / dkd } else { 0.5 * l_um };
                // dephasing scale: |slope|·σ_w/2 > 6 kills the integral
                let z_width = if dkd.abs() > 1e-30 { 12.0 / (dkd.abs() * sigma_w) } else { l_um };
                let z_lo = (z_star - z_width).max(0.0);
                let z_hi = (z_star + z_width).min(l_um);
                if z_lo >= z_hi {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let inner = |z: f64| -> Option<Complex64> {
                    let f = |om: f64| -> Option<Complex64> {
                        let dk = cache.delta_k(om, omega_sum - om, omega_s)?;
                        let kap = cache.kappa(om, omega_sum - om, omega_s)?;
                        let a1 = pump_envelope(pump1, om - pump1.center_omega);
                        let a2 = pump_envelope(pump2, omega_sum - om - pump2.center_omega);
                        let phase = z * dk + 0.5 * l_um * (kap - dk) + om * tau;
                        Some(a1 * a2 * Complex64::from_polar(1.0, phase))
                    };
                    adaptive_gl(&f, om_c - 5.0 * sig_eff, om_c + 5.0 * sig_eff, tol, QUAD_MAX_DEPTH)
                };
                adaptive_gl(&inner, z_lo, z_hi, tol * l_um, 24)
                    .map(|v| v / l_um)
                    .ok_or(JsaError::QuadratureNonConvergence(i_s, i_i))
            })
        })
        .collect();
    JsaGrid::new(grid.clone(), amp?, Regime::CounterProp)
}
