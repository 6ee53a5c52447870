//! Simulators for four spectral characterization methods operating on a
//! ground-truth JSA/JSI: scanning monochromator, Fourier-transform
//! spectroscopy (1D/2D/diagonal), dispersive-fiber spectroscopy, and
//! stimulated emission tomography. Each offers an analytic-expectation mode
//! and a seeded stochastic mode; identical seeds give identical counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::constants::{omega_to_lambda, C_UM_PER_FS};
use crate::jsa::JsaGrid;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum CharsimError {
    #[error("delay step {step_fs} fs violates Nyquist for max frequency {omega_max} rad/fs")]
    NyquistViolation { step_fs: f64, omega_max: f64 },
    #[error("simulator parameter out of range: {0}")]
    BadParameter(String),
}

/// Detection chain model; a fixed seed makes all sampled counts
/// bit-for-bit reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Single-photon detection efficiency in (0, 1].
    pub efficiency: f64,
    /// Dark count rate per detector (Hz).
    pub dark_count_rate_hz: f64,
    /// Gaussian timing jitter, standard deviation (ps).
    pub timing_jitter_ps: f64,
    /// Coincidence window (ps).
    pub coincidence_window_ps: f64,
    pub seed: u64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 0.6,
            dark_count_rate_hz: 100.0,
            timing_jitter_ps: 50.0,
            coincidence_window_ps: 1000.0,
            seed: 7,
        }
    }
}

/// Dwell per measurement setting for the acquisition-time proxy; accidental
/// coincidences accrue as dark_rate²·window·dwell.
pub const DWELL_PER_SETTING_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Deterministic expected values; used by acceptance tests.
    Expectation,
    /// Seeded Poisson/Gaussian sampling.
    Sampled,
}

/// Real nonnegative intensity samples on a rectangular (possibly coarse)
/// detuning grid with uniform steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityGrid {
    pub nu_s: Vec<f64>,
    pub nu_i: Vec<f64>,
    /// Row-major, index = i_s·nu_i.len() + i_i; interpreted as cell masses.
    pub values: Vec<f64>,
}

impl IntensityGrid {
    pub fn from_jsa(grid: &JsaGrid) -> Self {
        Self {
            nu_s: grid.spec.nu_s.clone(),
            nu_i: grid.spec.nu_i.clone(),
            values: grid.intensity(),
        }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn normalized(&self) -> Self {
        let t = self.total();
        let mut out = self.clone();
        if t > 0.0 {
            for v in &mut out.values {
                *v /= t;
            }
        }
        out
    }

    fn step(ax: &[f64]) -> f64 {
        if ax.len() > 1 {
            ax[1] - ax[0]
        } else {
            1.0
        }
    }
}

/// L1 distance and Bhattacharyya-style overlap Σ√(p·q) between two unit
/// -normalized intensities; the estimate is re-binned onto the truth grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub l1: f64,
    pub overlap: f64,
}

/// Mass-conserving re-bin of `est` onto the axes of `truth` by rectangle
/// overlap, treating each sample as a uniform cell mass.
pub fn rebin_onto(est: &IntensityGrid, nu_s: &[f64], nu_i: &[f64]) -> IntensityGrid {
    let frac = |src: &[f64], dst: &[f64]| -> Vec<Vec<(usize, f64)>> {
        let sw = IntensityGrid::step(src);
        let dw = IntensityGrid::step(dst);
        src.iter()
            .map(|&c| {
                let (lo, hi) = (c - sw / 2.0, c + sw / 2.0);
                let mut out = Vec::new();
                for (j, &d) in dst.iter().enumerate() {
                    let (dlo, dhi) = (d - dw / 2.0, d + dw / 2.0);
                    let ov = (hi.min(dhi) - lo.max(dlo)).max(0.0);
                    if ov > 0.0 {
                        out.push((j, ov / sw));
                    }
                }
                out
            })
            .collect()
    };
    let fs = frac(&est.nu_s, nu_s);
    let fi = frac(&est.nu_i, nu_i);
    let mut values = vec![0.0; nu_s.len() * nu_i.len()];
    for (k_s, row) in fs.iter().enumerate() {
        for (k_i, col) in fi.iter().enumerate() {
            let m = est.values[k_s * est.nu_i.len() + k_i];
            if m == 0.0 {
                continue;
            }
            for &(j_s, f_s) in row {
                for &(j_i, f_i) in col {
                    values[j_s * nu_i.len() + j_i] += m * f_s * f_i;
                }
            }
        }
    }
    IntensityGrid { nu_s: nu_s.to_vec(), nu_i: nu_i.to_vec(), values }
}

pub fn reconstruction_error(truth: &IntensityGrid, estimate: &IntensityGrid) -> ErrorMetrics {
    let est = if estimate.nu_s == truth.nu_s && estimate.nu_i == truth.nu_i {
        estimate.clone()
    } else {
        rebin_onto(estimate, &truth.nu_s, &truth.nu_i)
    };
    let p = truth.normalized();
    let q = est.normalized();
    let mut l1 = 0.0;
    let mut overlap = 0.0;
    // mass that re-binning pushed outside the truth window still counts
    // against both metrics through q's normalization over the full plane
    let q_total_inside: f64 = q.values.iter().sum();
    let lost = (1.0 - q_total_inside).max(0.0);
    for (a, b) in p.values.iter().zip(q.values.iter()) {
        l1 += (a - b).abs();
        overlap += (a * b).sqrt();
    }
    ErrorMetrics { l1: l1 + lost, overlap }
}

/// Simulator output: the estimated JSI, acquisition metadata, and error
/// metrics against the supplied truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub estimate: IntensityGrid,
    /// Number of measurement settings (acquisition-time proxy numerator).
    pub settings: usize,
    /// Photon or count budget the run assumed.
    pub budget: f64,
    pub metrics: ErrorMetrics,
    /// Diagonal-FT bandwidth summary when that mode ran.
    pub diagonal: Option<DiagonalFtSummary>,
    /// Resolution warning from the dispersive-fiber mapping.
    pub resolution_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalFtSummary {
    /// Std of (ν_s+ν_i) recovered from the sum-frequency island.
    pub sigma_d: f64,
    /// Std of (ν_s−ν_i) recovered from the baseband island.
    pub sigma_a: f64,
    /// r = σ_d²/σ_a².
    pub r: f64,
    /// Purity 2√r/(1+r) implied by the Gaussian-ellipse model.
    pub implied_purity: f64,
}

fn stream_rng(seed: u64, setting: u64) -> ChaCha8Rng {
    // counter-based per-setting streams: settings can run in parallel in any
    // order and still reproduce bit-identically
    let mut x = seed ^ setting.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    ChaCha8Rng::seed_from_u64(x)
}

fn poisson_sample(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(mean)
}

// --- scanning monochromator ---------------------------------------------------

/// Raster scan of two monochromators: the passband of each setting is one
/// coarse box of the (steps_s × steps_i) partition of the truth plane;
/// expected coincidences are budget × boxed JSI mass × efficiency², plus
/// dark accidentals dark²·window·dwell.
pub fn sim_monochromator(
    truth_jsi: &IntensityGrid,
    steps_s: usize,
    steps_i: usize,
    pair_budget: f64,
    det: &DetectorModel,
    mode: NoiseMode,
) -> Result<Reconstruction, CharsimError> {
    if steps_s < 8 || steps_i < 8 {
        return Err(CharsimError::BadParameter("monochromator needs ≥ 8 steps per axis".into()));
    }
    if pair_budget <= 0.0 {
        return Err(CharsimError::BadParameter("pair budget must be positive".into()));
    }
    let truth = truth_jsi.normalized();
    let (n_s, n_i) = (truth.nu_s.len(), truth.nu_i.len());
    let step_of = |n: usize, steps: usize, b: usize| (b * n / steps, ((b + 1) * n / steps).max(b * n / steps + 1));
    let eta2 = det.efficiency * det.efficiency;
    let accidentals = det.dark_count_rate_hz
        * det.dark_count_rate_hz
        * (det.coincidence_window_ps * 1e-12)
        * DWELL_PER_SETTING_S;
    let mut centers_s = Vec::with_capacity(steps_s);
    let mut centers_i = Vec::with_capacity(steps_i);
    let mut values = vec![0.0; steps_s * steps_i];
    for bs in 0..steps_s {
        let (s0, s1) = step_of(n_s, steps_s, bs);
        centers_s.push(0.5 * (truth.nu_s[s0] + truth.nu_s[s1 - 1]));
        for bi in 0..steps_i {
            let (i0, i1) = step_of(n_i, steps_i, bi);
            if bs == 0 {
                centers_i.push(0.5 * (truth.nu_i[i0] + truth.nu_i[i1 - 1]));
            }
            let mut mass = 0.0;
            for s in s0..s1 {
                for i in i0..i1 {
                    mass += truth.values[s * n_i + i];
                }
            }
            let expected = pair_budget * mass * eta2 + accidentals;
            let setting = (bs * steps_i + bi) as u64;
            values[bs * steps_i + bi] = match mode {
                NoiseMode::Expectation => expected,
                NoiseMode::Sampled => {
                    let mut rng = stream_rng(det.seed, setting);
                    poisson_sample(&mut rng, expected)
                }
            };
        }
    }
    let estimate = IntensityGrid { nu_s: centers_s, nu_i: centers_i, values };
    let metrics = reconstruction_error(&truth, &estimate);
    Ok(Reconstruction {
        estimate,
        settings: steps_s * steps_i,
        budget: pair_budget,
        metrics,
        diagonal: None,
        resolution_warning: false,
    })
}

// --- Fourier-transform spectroscopy -----------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtMode {
    OneD,
    TwoD,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtConfig {
    /// Delay sampling step (fs); must satisfy Nyquist for the absolute
    /// frequencies of the truth support.
    pub delay_step_fs: f64,
    /// Number of delay samples per scanned axis.
    pub n_delays: usize,
    /// Counts per interferogram sample in the stochastic mode.
    pub counts_per_sample: f64,
    /// Bins around the zero-frequency axes excluded from reconstruction
    /// windows (the δ-term filter).
    pub axis_exclusion_bins: usize,
    /// Half-width (rad/fs) of the moment windows around the baseband and
    /// sum-frequency islands in the diagonal mode.
    pub island_halfwidth: f64,
}

impl Default for FtConfig {
    fn default() -> Self {
        Self {
            delay_step_fs: 1.0,
            n_delays: 1024,
            counts_per_sample: 1e4,
            axis_exclusion_bins: 2,
            island_halfwidth: 0.08,
        }
    }
}

fn absolute_max_omega(truth: &JsaGrid) -> f64 {
    let s_max = truth.spec.omega_s0 + truth.spec.nu_s.last().unwrap().abs().max(truth.spec.nu_s[0].abs());
    let i_max = truth.spec.omega_i0 + truth.spec.nu_i.last().unwrap().abs().max(truth.spec.nu_i[0].abs());
    s_max.max(i_max)
}

/// Fourier-transform spectroscopy on the truth JSI. `OneD` measures the two
/// marginal spectra and reports their outer product; `TwoD` reconstructs the
/// JSI from the two-axis interferogram; `Diagonal` scans τ_s = τ_i and
/// reports diagonal/anti-diagonal bandwidths with the implied purity.
pub fn sim_ft_spectroscopy(
    truth_jsa: &JsaGrid,
    config: &FtConfig,
    mode: FtMode,
    det: &DetectorModel,
    noise: NoiseMode,
) -> Result<Reconstruction, CharsimError> {
    let omega_max = absolute_max_omega(truth_jsa);
    if config.delay_step_fs > std::f64::consts::PI / omega_max {
        return Err(CharsimError::NyquistViolation {
            step_fs: config.delay_step_fs,
            omega_max,
        });
    }
    let truth = IntensityGrid::from_jsa(truth_jsa).normalized();
    let n_s = truth.nu_s.len();
    let n_i = truth.nu_i.len();
    let om_s: Vec<f64> = truth.nu_s.iter().map(|v| truth_jsa.spec.omega_s0 + v).collect();
    let om_i: Vec<f64> = truth.nu_i.iter().map(|v| truth_jsa.spec.omega_i0 + v).collect();
    let taus: Vec<f64> = (0..config.n_delays).map(|k| k as f64 * config.delay_step_fs).collect();
    let hann: Vec<f64> = (0..config.n_delays)
        .map(|k| {
            let x = std::f64::consts::PI * k as f64 / (config.n_delays - 1) as f64;
            // trapezoidal half-weight on the τ = 0 sample: a one-sided cosine
            // sum otherwise leaves a flat boundary pedestal of half the total
            // island weight at every frequency
            let end = if k == 0 { 0.5 } else { 1.0 };
            end * 0.5 * (1.0 + x.cos())
        })
        .collect();

    let noisy = |v: f64, setting: u64| -> f64 {
        match noise {
            NoiseMode::Expectation => v,
            NoiseMode::Sampled => {
                let mut rng = stream_rng(det.seed, setting);
                poisson_sample(&mut rng, v * config.counts_per_sample) / config.counts_per_sample
            }
        }
    };

    match mode {
        FtMode::TwoD => {
            // I(τs,τi) = ¼ Σ m (1+cos ωsτs)(1+cos ωiτi), via separable products
            let cs: Vec<f64> = taus
                .iter()
                .flat_map(|&t| om_s.iter().map(move |&w| 1.0 + (w * t).cos()))
                .collect(); // [τ][ωs]
            let ci: Vec<f64> = taus
                .iter()
                .flat_map(|&t| om_i.iter().map(move |&w| 1.0 + (w * t).cos()))
                .collect();
            let nt = taus.len();
            // M[τi][s] = Σ_i m[s,i]·ci[τi,i]
            let mut m_ti = vec![0.0; nt * n_s];
            for ti in 0..nt {
                for s in 0..n_s {
                    let mut acc = 0.0;
                    for i in 0..n_i {
                        acc += truth.values[s * n_i + i] * ci[ti * n_i + i];
                    }
                    m_ti[ti * n_s + s] = acc;
                }
            }
            let mut interferogram = vec![0.0; nt * nt];
            for ts in 0..nt {
                for ti in 0..nt {
                    let mut acc = 0.0;
                    for s in 0..n_s {
                        acc += cs[ts * n_s + s] * m_ti[ti * n_s + s];
                    }
                    interferogram[ts * nt + ti] = noisy(0.25 * acc, (ts * nt + ti) as u64);
                }
            }
            // filtering: remove separable means (δ-axis terms), then cosine
            // transform back onto the truth window with a Hann taper
            let mut row_mean = vec![0.0; nt];
            let mut col_mean = vec![0.0; nt];
            let mut grand = 0.0;
            for ts in 0..nt {
                for ti in 0..nt {
                    let v = interferogram[ts * nt + ti];
                    row_mean[ts] += v;
                    col_mean[ti] += v;
                    grand += v;
                }
            }
            for v in &mut row_mean {
                *v /= nt as f64;
            }
            for v in &mut col_mean {
                *v /= nt as f64;
            }
            grand /= (nt * nt) as f64;
            // cosine kernels onto the absolute truth frequencies
            let ks: Vec<f64> = om_s
                .iter()
                .flat_map(|&w| taus.iter().zip(hann.iter()).map(move |(&t, &h)| (w * t).cos() * h))
                .collect(); // [ωs][τ]
            let ki: Vec<f64> = om_i
                .iter()
                .flat_map(|&w| taus.iter().zip(hann.iter()).map(move |(&t, &h)| (w * t).cos() * h))
                .collect();
            // R[s,i] = Σ_ts Σ_ti Ĩ·ks[s,ts]·ki[i,ti]
            let mut half = vec![0.0; nt * n_i]; // [ts][i]
            for ts in 0..nt {
                for i in 0..n_i {
                    let mut acc = 0.0;
                    for ti in 0..nt {
                        let v = interferogram[ts * nt + ti] - row_mean[ts] - col_mean[ti] + grand;
                        acc += v * ki[i * nt + ti];
                    }
                    half[ts * n_i + i] = acc;
                }
            }
            let mut values = vec![0.0; n_s * n_i];
            for s in 0..n_s {
                for i in 0..n_i {
                    let mut acc = 0.0;
                    for ts in 0..nt {
                        acc += ks[s * nt + ts] * half[ts * n_i + i];
                    }
                    values[s * n_i + i] = acc.max(0.0);
                }
            }
            let estimate =
                IntensityGrid { nu_s: truth.nu_s.clone(), nu_i: truth.nu_i.clone(), values };
            let metrics = reconstruction_error(&truth, &estimate);
            Ok(Reconstruction {
                estimate,
                settings: nt * nt,
                budget: config.counts_per_sample,
                metrics,
                diagonal: None,
                resolution_warning: false,
            })
        }
        FtMode::OneD => {
            let marg = |axis: usize| -> Vec<f64> {
                let n = if axis == 0 { n_s } else { n_i };
                let mut m = vec![0.0; n];
                for s in 0..n_s {
                    for i in 0..n_i {
                        let w = truth.values[s * n_i + i];
                        m[if axis == 0 { s } else { i }] += w;
                    }
                }
                m
            };
            let recover = |m: &[f64], om: &[f64], tag: u64| -> Vec<f64> {
                // I(τ) = ½ Σ m (1+cos ωτ); I(ω) ∝ Σ (I(τ) − ½I(0)) cos(ωτ)
                let i_tau: Vec<f64> = taus
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| {
                        let v: f64 =
                            m.iter().zip(om.iter()).map(|(&w, &o)| 0.5 * w * (1.0 + (o * t).cos())).sum();
                        noisy(v, tag * 1_000_003 + k as u64)
                    })
                    .collect();
                let i0 = i_tau[0];
                om.iter()
                    .map(|&w| {
                        taus.iter()
                            .zip(i_tau.iter())
                            .zip(hann.iter())
                            .map(|((&t, &iv), &h)| (iv - 0.5 * i0) * (w * t).cos() * h)
                            .sum::<f64>()
                            .max(0.0)
                    })
                    .collect()
            };
            let ms = recover(&marg(0), &om_s, 1);
            let mi = recover(&marg(1), &om_i, 2);
            let mut values = vec![0.0; n_s * n_i];
            for s in 0..n_s {
                for i in 0..n_i {
                    values[s * n_i + i] = ms[s] * mi[i];
                }
            }
            let estimate =
                IntensityGrid { nu_s: truth.nu_s.clone(), nu_i: truth.nu_i.clone(), values };
            let metrics = reconstruction_error(&truth, &estimate);
            Ok(Reconstruction {
                estimate,
                settings: 2 * taus.len(),
                budget: config.counts_per_sample,
                metrics,
                diagonal: None,
                resolution_warning: false,
            })
        }
        FtMode::Diagonal => {
            // equal-delay scan: islands at baseband (anti-diagonal), the two
            // marginals, and the sum frequency (diagonal)
            let i_tau: Vec<f64> = taus
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let mut acc = 0.0;
                    for (s, &ws) in om_s.iter().enumerate() {
                        for (i, &wi) in om_i.iter().enumerate() {
                            acc += truth.values[s * n_i + i]
                                * (1.0 + (ws * t).cos())
                                * (1.0 + (wi * t).cos());
                        }
                    }
                    noisy(0.25 * acc, k as u64)
                })
                .collect();
            let mean = i_tau.iter().sum::<f64>() / i_tau.len() as f64;
            // raw (unclipped) spectrum: rectifying the transform ripple
            // would build a positive pedestal that corrupts window moments
            let spectrum = |w: f64| -> f64 {
                taus.iter()
                    .zip(i_tau.iter())
                    .zip(hann.iter())
                    .map(|((&t, &iv), &h)| (iv - mean) * (w * t).cos() * h)
                    .sum::<f64>()
            };
            // moments over a window, masked at 0.5% of the window peak so
            // ripple far from the island cannot dominate
            let window_moments = |lo: f64, hi: f64, d_omega: f64| -> (f64, f64, f64) {
                let mut samples = Vec::new();
                let mut w = lo;
                let mut peak = 0.0_f64;
                while w < hi {
                    let s = spectrum(w);
                    peak = peak.max(s);
                    samples.push((w, s));
                    w += d_omega;
                }
                let cut = 0.005 * peak;
                let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
                for (w, s) in samples {
                    if s > cut {
                        m0 += s;
                        m1 += s * w;
                        m2 += s * w * w;
                    }
                }
                (m0, m1, m2)
            };
            let d_omega = std::f64::consts::PI
                / (config.delay_step_fs * (config.n_delays as f64));
            let excl = config.axis_exclusion_bins as f64 * d_omega;
            let island = config.island_halfwidth;
            // difference-frequency island: the (ω_s−ω_i) distribution sits at
            // |ω_s0−ω_i0|; for degenerate centers it folds onto ω ≥ 0 and the
            // second moment about zero is still Var(ν_s−ν_i)
            let diff_center = (truth_jsa.spec.omega_s0 - truth_jsa.spec.omega_i0).abs();
            let sigma_a = if diff_center > 4.0 * excl + 0.5 * island {
                let lo = (diff_center - island).max(excl.max(d_omega));
                let (m0, m1, m2) = window_moments(lo, diff_center + island, d_omega);
                let mean = m1 / m0.max(1e-300);
                (m2 / m0.max(1e-300) - mean * mean).max(0.0).sqrt()
            } else {
                let roof = island.min(0.5 * om_s[0].min(om_i[0]));
                let (m0, _, m2) = window_moments(excl.max(d_omega), roof, d_omega);
                (m2 / m0.max(1e-300)).sqrt()
            };
            // sum island around ω_s0+ω_i0
            let center = truth_jsa.spec.omega_s0 + truth_jsa.spec.omega_i0;
            let (m0, m1, m2) = window_moments(center - island, center + island, d_omega);
            let mean_d = m1 / m0.max(1e-300);
            let sigma_d = (m2 / m0.max(1e-300) - mean_d * mean_d).max(0.0).sqrt();
            let r = sigma_d * sigma_d / (sigma_a * sigma_a);
            let implied_purity = 2.0 * r.sqrt() / (1.0 + r);
            // Gaussian-ellipse estimate implied by (σ_d, σ_a)
            let mut values = vec![0.0; n_s * n_i];
            for s in 0..n_s {
                for i in 0..n_i {
                    let d = truth.nu_s[s] + truth.nu_i[i];
                    let a = truth.nu_s[s] - truth.nu_i[i];
                    values[s * n_i + i] =
                        (-0.5 * d * d / (sigma_d * sigma_d) - 0.5 * a * a / (sigma_a * sigma_a))
                            .exp();
                }
            }
            let estimate =
                IntensityGrid { nu_s: truth.nu_s.clone(), nu_i: truth.nu_i.clone(), values };
            let metrics = reconstruction_error(&truth, &estimate);
            Ok(Reconstruction {
                estimate,
                settings: taus.len(),
                budget: config.counts_per_sample,
                metrics,
                diagonal: Some(DiagonalFtSummary { sigma_d, sigma_a, r, implied_purity }),
                resolution_warning: false,
            })
        }
    }
}

// --- dispersive-fiber spectroscopy --------------------------------------------

/// Arrival-time shift (ps) of a wavelength offset through the dispersive
/// fiber: Δt = D·L·Δλ.
pub fn dispersive_delay_ps(d_ps_per_nm_km: f64, length_km: f64, dlambda_nm: f64) -> f64 {
    d_ps_per_nm_km * length_km * dlambda_nm
}

/// Wavelength offset (nm) corresponding to a detuning ν about center λ0.
pub fn detuning_to_dlambda_nm(lambda0_um: f64, nu: f64) -> f64 {
    -(lambda0_um * lambda0_um / (2.0 * std::f64::consts::PI * C_UM_PER_FS)) * nu * 1e3
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveConfig {
    pub d_ps_per_nm_km: f64,
    pub length_km: f64,
    pub n_time_bins: usize,
    /// Pairs drawn in the sampled mode.
    pub n_pairs: usize,
}

impl Default for DispersiveConfig {
    fn default() -> Self {
        Self { d_ps_per_nm_km: -120.0, length_km: 0.4, n_time_bins: 160, n_pairs: 200_000 }
    }
}

/// Maps photon wavelengths to arrival times, applies Gaussian timing jitter,
/// histograms 2D coincidences, and inverts the linear map back to a JSI
/// estimate. Wavelength centers come from the stated emission centers.
pub fn sim_dispersive_fiber(
    truth_jsa: &JsaGrid,
    config: &DispersiveConfig,
    det: &DetectorModel,
    noise: NoiseMode,
) -> Result<Reconstruction, CharsimError> {
    if config.n_time_bins < 8 {
        return Err(CharsimError::BadParameter("need ≥ 8 time bins".into()));
    }
    let truth = IntensityGrid::from_jsa(truth_jsa).normalized();
    let lam_s0 = omega_to_lambda(truth_jsa.spec.omega_s0);
    let lam_i0 = omega_to_lambda(truth_jsa.spec.omega_i0);
    let dl = config.d_ps_per_nm_km * config.length_km; // ps per nm
    let t_of = |nu: f64, lam0: f64| dispersive_delay_ps(config.d_ps_per_nm_km, config.length_km, detuning_to_dlambda_nm(lam0, nu));
    // time extents including jitter margin
    let ts: Vec<f64> = truth.nu_s.iter().map(|&v| t_of(v, lam_s0)).collect();
    let ti: Vec<f64> = truth.nu_i.iter().map(|&v| t_of(v, lam_i0)).collect();
    let margin = 4.0 * det.timing_jitter_ps;
    let (ts_lo, ts_hi) = (
        ts.iter().cloned().fold(f64::MAX, f64::min) - margin,
        ts.iter().cloned().fold(f64::MIN, f64::max) + margin,
    );
    let (ti_lo, ti_hi) = (
        ti.iter().cloned().fold(f64::MAX, f64::min) - margin,
        ti.iter().cloned().fold(f64::MIN, f64::max) + margin,
    );
    let nb = config.n_time_bins;
    let bw_s = (ts_hi - ts_lo) / nb as f64;
    let bw_i = (ti_hi - ti_lo) / nb as f64;
    let mut hist = vec![0.0; nb * nb];
    let spectral_width_nm = detuning_to_dlambda_nm(
        lam_s0,
        truth.nu_s[0] - *truth.nu_s.last().unwrap(),
    )
    .abs();
    let resolution_warning = (dl * spectral_width_nm).abs() < 10.0 * det.timing_jitter_ps;
    match noise {
        NoiseMode::Expectation => {
            // deposit each cell's mass, convolved with the jitter Gaussian
            // along both axes (erf-difference bin masses)
            let sigma = det.timing_jitter_ps.max(1e-12);
            let bin_weights = |t0: f64, lo: f64, bw: f64| -> Vec<(usize, f64)> {
                let mut out = Vec::new();
                let first = (((t0 - 5.0 * sigma) - lo) / bw).floor().max(0.0) as usize;
                let last = ((((t0 + 5.0 * sigma) - lo) / bw).ceil() as usize).min(nb);
                for b in first..last {
                    let a = (lo + b as f64 * bw - t0) / (std::f64::consts::SQRT_2 * sigma);
                    let c = (lo + (b + 1) as f64 * bw - t0) / (std::f64::consts::SQRT_2 * sigma);
                    let w = 0.5 * (libm::erf(c) - libm::erf(a));
                    if w > 0.0 {
                        out.push((b, w));
                    }
                }
                out
            };
            for (s, &tsv) in ts.iter().enumerate() {
                let ws = bin_weights(tsv, ts_lo, bw_s);
                for (i, &tiv) in ti.iter().enumerate() {
                    let m = truth.values[s * truth.nu_i.len() + i];
                    if m == 0.0 {
                        continue;
                    }
                    let wi = bin_weights(tiv, ti_lo, bw_i);
                    for &(bs, fs) in &ws {
                        for &(bi, fi) in &wi {
                            hist[bs * nb + bi] += m * fs * fi;
                        }
                    }
                }
            }
        }
        NoiseMode::Sampled => {
            let mut rng = stream_rng(det.seed, 0);
            let jitter = Normal::new(0.0, det.timing_jitter_ps.max(1e-12)).unwrap();
            // cumulative distribution over cells
            let mut cdf = Vec::with_capacity(truth.values.len());
            let mut acc = 0.0;
            for &v in &truth.values {
                acc += v;
                cdf.push(acc);
            }
            let n_i_len = truth.nu_i.len();
            for _ in 0..config.n_pairs {
                let u: f64 = rand::Rng::random::<f64>(&mut rng) * acc;
                let idx = cdf.partition_point(|&c| c < u).min(truth.values.len() - 1);
                let (s, i) = (idx / n_i_len, idx % n_i_len);
                let t_s = ts[s] + jitter.sample(&mut rng);
                let t_i = ti[i] + jitter.sample(&mut rng);
                let bs = ((t_s - ts_lo) / bw_s).floor();
                let bi = ((t_i - ti_lo) / bw_i).floor();
                if bs >= 0.0 && bs < nb as f64 && bi >= 0.0 && bi < nb as f64 {
                    hist[bs as usize * nb + bi as usize] += 1.0;
                }
            }
        }
    }
    // invert the (monotone) linear map: time-bin centers → detunings
    let inv = |t: f64, lam0: f64| -> f64 {
        -t / dl / 1e3 * (2.0 * std::f64::consts::PI * C_UM_PER_FS) / (lam0 * lam0)
    };
    let mut nu_s_axis: Vec<f64> =
        (0..nb).map(|b| inv(ts_lo + (b as f64 + 0.5) * bw_s, lam_s0)).collect();
    let mut nu_i_axis: Vec<f64> =
        (0..nb).map(|b| inv(ti_lo + (b as f64 + 0.5) * bw_i, lam_i0)).collect();
    let mut values = hist;
    if nu_s_axis[0] > *nu_s_axis.last().unwrap() {
        nu_s_axis.reverse();
        let mut flipped = vec![0.0; nb * nb];
        for b in 0..nb {
            flipped[(nb - 1 - b) * nb..(nb - b) * nb].copy_from_slice(&values[b * nb..(b + 1) * nb]);
        }
        values = flipped;
    }
    if nu_i_axis[0] > *nu_i_axis.last().unwrap() {
        nu_i_axis.reverse();
        for b in 0..nb {
            values[b * nb..(b + 1) * nb].reverse();
        }
    }
    let estimate = IntensityGrid { nu_s: nu_s_axis, nu_i: nu_i_axis, values };
    let metrics = reconstruction_error(&truth, &estimate);
    Ok(Reconstruction {
        estimate,
        settings: 1,
        budget: config.n_pairs as f64,
        metrics,
        diagonal: None,
        resolution_warning,
    })
}

// --- stimulated emission tomography --------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetConfig {
    /// Number of seed wavelength settings across the idler axis.
    pub seed_steps: usize,
    /// Seed photon flux (scales every row uniformly).
    pub seed_power: f64,
    /// Relative Gaussian noise per sample in the stochastic mode.
    pub relative_noise: f64,
}

impl Default for SetConfig {
    fn default() -> Self {
        Self { seed_steps: 64, seed_power: 1.0, relative_noise: 0.01 }
    }
}

/// Seeds the idler band row by row: the stimulated signal spectrum is the
/// truth JSI row scaled by the seed flux.
pub fn sim_set(
    truth_jsi: &IntensityGrid,
    config: &SetConfig,
    det: &DetectorModel,
    noise: NoiseMode,
) -> Result<Reconstruction, CharsimError> {
    if config.seed_steps < 2 {
        return Err(CharsimError::BadParameter("need ≥ 2 seed steps".into()));
    }
    let truth = truth_jsi.normalized();
    let n_i = truth.nu_i.len();
    let n_s = truth.nu_s.len();
    let steps = config.seed_steps.min(n_i);
    let mut nu_i_axis = Vec::with_capacity(steps);
    let mut values = vec![0.0; n_s * steps];
    for k in 0..steps {
        let i = k * n_i / steps + n_i / (2 * steps);
        let i = i.min(n_i - 1);
        nu_i_axis.push(truth.nu_i[i]);
        for s in 0..n_s {
            let v = truth.values[s * n_i + i] * config.seed_power;
            values[s * steps + k] = match noise {
                NoiseMode::Expectation => v,
                NoiseMode::Sampled => {
                    let mut rng = stream_rng(det.seed, (k * n_s + s) as u64);
                    let n = Normal::new(0.0, config.relative_noise.max(1e-15)).unwrap();
                    (v * (1.0 + n.sample(&mut rng))).max(0.0)
                }
            };
        }
    }
    let estimate = IntensityGrid { nu_s: truth.nu_s.clone(), nu_i: nu_i_axis, values };
    let metrics = reconstruction_error(&truth, &estimate);
    Ok(Reconstruction {
        estimate,
        settings: steps,
        budget: config.seed_power,
        metrics,
        diagonal: None,
        resolution_warning: false,
    })
}
