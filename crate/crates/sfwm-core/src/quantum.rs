//! Entanglement and source-quality metrics: Schmidt decomposition of JSA
//! grids, heralded purity and its g²/HOM companions, relative brightness,
//! coherent multi-process states, and logarithmic negativity of hybrid
//! polarization–frequency states.
//!
//! Discretization convention: the amplitude matrix is area-weighted before
//! decomposition, M[s,i] = F(ν_s, ν_i)·√(Δν_s·Δν_i), so the squared
//! singular values approximate the Schmidt coefficients of the continuum
//! integral operator; they are renormalized to Σλ_j = 1 afterwards.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{UM_PER_M, WALKOFF_DURATION_FACTOR};
use crate::fiber::{FiberError, FiberModel, Polarization};
use crate::jsa::{JsaGrid, PumpSpec};
use crate::phasematch::ProcessSpec;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum QuantumError {
    #[error("grid amplitude is identically zero")]
    ZeroGrid,
    #[error("all grids in a multi-process state must share axes")]
    AxisMismatch,
    #[error("multi-process state needs at least one entry")]
    Empty,
    #[error("signal/idler polarization label unresolved for process `{0}`")]
    UnresolvedPolarization(String),
    #[error("log-negativity needs at least two distinct signal polarizations")]
    SinglePolarization,
    #[error("log-negativity needs at least 8 idler bins, got {0}")]
    TooFewBins(usize),
    #[error("no nonlinear coefficient registered for process `{0}`")]
    MissingGamma(String),
    #[error(transparent)]
    Dispersion(#[from] FiberError),
}

/// Schmidt spectrum and the derived source-quality metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtReport {
    /// Descending Schmidt coefficients, Σλ_j = 1, truncated at 1e-12.
    pub lambdas: Vec<f64>,
    /// K = 1/Σλ².
    pub schmidt_number: f64,
    /// Heralded single-photon purity P = 1/K.
    pub purity: f64,
    /// g² = 1 + P.
    pub g2: f64,
    /// Two-source HOM dip visibility V = P.
    pub hom_visibility: f64,
}

/// Area-weighted singular value decomposition of the JSA matrix. The grid is
/// renormalized internally, so pre-normalization only affects the recorded
/// scale, not the spectrum.
pub fn schmidt_decompose(grid: &JsaGrid) -> Result<SchmidtReport, QuantumError> {
    let norm = grid.l2_norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(QuantumError::ZeroGrid);
    }
    let (n_s, n_i) = (grid.n_s(), grid.n_i());
    let w = (grid.step_s() * grid.step_i()).sqrt() / norm;
    let m = DMatrix::from_fn(n_s, n_i, |r, c| grid.at(r, c) * w);
    let svd = m.svd(false, false);
    let mut lambdas: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
    let total: f64 = lambdas.iter().sum();
    for l in &mut lambdas {
        *l /= total;
    }
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    lambdas.retain(|&l| l >= 1e-12);
    let sum_sq: f64 = lambdas.iter().map(|l| l * l).sum();
    let k = 1.0 / sum_sq;
    let purity = 1.0 / k;
    Ok(SchmidtReport {
        lambdas,
        schmidt_number: k,
        purity,
        g2: 1.0 + purity,
        hom_visibility: purity,
    })
}

/// Closed-form Schmidt number of the correlated Gaussian
/// F ∝ exp(−a(ν_s+ν_i)² − b(ν_s−ν_i)²): K = (a+b)/(2√(ab)).
pub fn gaussian_schmidt_number(a: f64, b: f64) -> f64 {
    (a + b) / (2.0 * (a * b).sqrt())
}

/// Relative photon-pair flux estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightnessEstimate {
    /// Arbitrary units: p₁p₂·σ̃·L_eff·γ₁γ₂.
    pub relative_flux: f64,
    /// Effective interaction length after the walk-off clamp (m).
    pub effective_length_m: f64,
    /// Walk-off-limited maximum length, if the pumps walk off (m).
    pub l_max_m: Option<f64>,
    /// True when L exceeded L_max and was clamped.
    pub clamped: bool,
}

/// Flux ∝ p²σLγ² for degenerate pumps; non-degenerate pumps replace p² by
/// p₁p₂ and clamp L at the length where the inter-pump walk-off equals the
/// shorter pump duration (1/σ).
pub fn brightness_estimate(
    fiber: &FiberModel,
    process: &ProcessSpec,
    pump1: &PumpSpec,
    pump2: &PumpSpec,
) -> Result<BrightnessEstimate, QuantumError> {
    let gamma = fiber
        .gamma_table
        .get(&process.label)
        .ok_or_else(|| QuantumError::MissingGamma(process.label.clone()))?;
    let k1_1 = fiber.mode_dispersion(&process.pump1.mode, pump1.center_omega)?.k1;
    let k1_2 = fiber.mode_dispersion(&process.pump2.mode, pump2.center_omega)?.k1;
    let walkoff_fs_per_m = (k1_1 - k1_2).abs() * UM_PER_M;
    let duration_fs = WALKOFF_DURATION_FACTOR / pump1.sigma.max(pump2.sigma);
    let l_max_m = if walkoff_fs_per_m > 1e-9 { Some(duration_fs / walkoff_fs_per_m) } else { None };
    let effective_length_m = match l_max_m {
        Some(lm) => fiber.length_m.min(lm),
        None => fiber.length_m,
    };
    // √2·σ₁σ₂/√(σ₁²+σ₂²) reduces to σ for degenerate pumps
    let sigma_eff = std::f64::consts::SQRT_2 * pump1.sigma * pump2.sigma
        / pump1.sigma.hypot(pump2.sigma);
    let flux = pump1.average_power_w
        * pump2.average_power_w
        * sigma_eff
        * effective_length_m
        * gamma.gamma1_per_w_km
        * gamma.gamma2_per_w_km;
    Ok(BrightnessEstimate {
        relative_flux: flux,
        effective_length_m,
        l_max_m,
        clamped: l_max_m.is_some_and(|lm| fiber.length_m > lm),
    })
}

/// One coherent term of a multi-process state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessEntry {
    pub process: ProcessSpec,
    pub weight: Complex64,
    pub grid: JsaGrid,
    pub signal_pol: Polarization,
    pub idler_pol: Polarization,
}

/// Coherent superposition of per-process JSAs with polarization labels,
/// normalized to unit total norm.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiProcessState {
    pub entries: Vec<ProcessEntry>,
}

/// Builds the state from (process, weight, grid) triples, attaching
/// polarization labels and applying the global normalization.
pub fn build_multiprocess_state(
    raw: Vec<(ProcessSpec, Complex64, JsaGrid)>,
) -> Result<MultiProcessState, QuantumError> {
    if raw.is_empty() {
        return Err(QuantumError::Empty);
    }
    for (_, _, g) in raw.iter().skip(1) {
        if !g.axes_match(&raw[0].2) {
            return Err(QuantumError::AxisMismatch);
        }
    }
    let mut entries = Vec::with_capacity(raw.len());
    for (process, weight, grid) in raw {
        let signal_pol = process
            .signal
            .mode
            .polarization()
            .ok_or_else(|| QuantumError::UnresolvedPolarization(process.label.clone()))?;
        let idler_pol = process
            .idler
            .mode
            .polarization()
            .ok_or_else(|| QuantumError::UnresolvedPolarization(process.label.clone()))?;
        entries.push(ProcessEntry { process, weight, grid, signal_pol, idler_pol });
    }
    // exact norm: coherent within identical (pol_s, pol_i) channels,
    // orthogonal across channels
    let cell = entries[0].grid.step_s() * entries[0].grid.step_i();
    let n_cells = entries[0].grid.amp.len();
    let mut total = 0.0;
    for pol_s in [Polarization::X, Polarization::Y] {
        for pol_i in [Polarization::X, Polarization::Y] {
            let members: Vec<&ProcessEntry> = entries
                .iter()
                .filter(|e| e.signal_pol == pol_s && e.idler_pol == pol_i)
                .collect();
            if members.is_empty() {
                continue;
            }
            for idx in 0..n_cells {
                let s: Complex64 =
                    members.iter().map(|e| e.weight * e.grid.amp[idx]).sum();
                total += s.norm_sqr() * cell;
            }
        }
    }
    if total <= 0.0 || !total.is_finite() {
        return Err(QuantumError::ZeroGrid);
    }
    let scale = 1.0 / total.sqrt();
    for e in &mut entries {
        e.weight *= scale;
    }
    Ok(MultiProcessState { entries })
}

impl MultiProcessState {
    /// Exact squared norm of the assembled state.
    pub fn norm_sqr(&self) -> f64 {
        let cell = self.entries[0].grid.step_s() * self.entries[0].grid.step_i();
        let n_cells = self.entries[0].grid.amp.len();
        let mut total = 0.0;
        for pol_s in [Polarization::X, Polarization::Y] {
            for pol_i in [Polarization::X, Polarization::Y] {
                let members: Vec<&ProcessEntry> = self
                    .entries
                    .iter()
                    .filter(|e| e.signal_pol == pol_s && e.idler_pol == pol_i)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                for idx in 0..n_cells {
                    let s: Complex64 =
                        members.iter().map(|e| e.weight * e.grid.amp[idx]).sum();
                    total += s.norm_sqr() * cell;
                }
            }
        }
        total
    }
}

/// Logarithmic negativity of the (signal polarization | binned idler
/// frequency) split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityReport {
    /// In bits (log base 2 of the trace norm after partial transpose).
    pub log_negativity: f64,
    pub bins_used: usize,
    /// True when doubling the bin count moved LN by less than 1e-3.
    pub converged: bool,
}

/// Traces out the signal frequency and idler polarization, discretizes the
/// idler frequency into bins, partial-transposes the signal polarization,
/// and reports LN = log₂‖ρ^{T_ps}‖₁. The returned value uses 2×`bins`; the
/// convergence flag compares it against the `bins` result.
pub fn log_negativity(
    state: &MultiProcessState,
    bins: usize,
) -> Result<NegativityReport, QuantumError> {
    if bins < 8 {
        return Err(QuantumError::TooFewBins(bins));
    }
    let pols: std::collections::BTreeSet<u8> =
        state.entries.iter().map(|e| e.signal_pol as u8).collect();
    if pols.len() < 2 {
        return Err(QuantumError::SinglePolarization);
    }
    let coarse = ln_at_bins(state, bins)?;
    let fine = ln_at_bins(state, 2 * bins)?;
    Ok(NegativityReport {
        log_negativity: fine,
        bins_used: 2 * bins,
        converged: (fine - coarse).abs() < 1e-3,
    })
}

fn ln_at_bins(state: &MultiProcessState, bins: usize) -> Result<f64, QuantumError> {
    let grid0 = &state.entries[0].grid;
    let n_s = grid0.n_s();
    let n_i = grid0.n_i();
    let bins = bins.min(n_i);
    let d_s = grid0.step_s();
    let d_i = grid0.step_i();
    // contiguous bin ranges over the idler axis
    let mut ranges = Vec::with_capacity(bins);
    for b in 0..bins {
        let lo = b * n_i / bins;
        let hi = ((b + 1) * n_i / bins).max(lo + 1);
        ranges.push(lo..hi);
    }
    // channel-combined amplitudes per (pol_s, pol_i)
    let pol_slot = |p: Polarization| -> usize {
        match p {
            Polarization::X => 0,
            Polarization::Y => 1,
        }
    };
    let mut channels: [Option<Vec<Complex64>>; 4] = [None, None, None, None];
    for e in &state.entries {
        let slot = pol_slot(e.signal_pol) * 2 + pol_slot(e.idler_pol);
        let buf = channels[slot].get_or_insert_with(|| vec![Complex64::default(); n_s * n_i]);
        for (dst, src) in buf.iter_mut().zip(e.grid.amp.iter()) {
            *dst += e.weight * src;
        }
    }
    // binned amplitudes B[ps][pi][s, k]
    let bin_amp = |full: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); n_s * bins];
        for s in 0..n_s {
            for (k, range) in ranges.iter().enumerate() {
                let w_k = (range.len() as f64 * d_i).sqrt();
                let mut acc = Complex64::default();
                for i in range.clone() {
                    acc += full[s * n_i + i];
                }
                out[s * bins + k] = acc * d_i / w_k;
            }
        }
        out
    };
    let binned: Vec<Option<Vec<Complex64>>> =
        channels.iter().map(|c| c.as_ref().map(|v| bin_amp(v))).collect();
    // ρ[(p,k),(p',k')] = Σ_{pi}Σ_s B[p,pi][s,k]·conj(B[p',pi][s,k'])·Δν_s
    let dim = 2 * bins;
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for p in 0..2usize {
        for q in 0..2usize {
            for pi in 0..2usize {
                let (Some(bp), Some(bq)) = (&binned[p * 2 + pi], &binned[q * 2 + pi]) else {
                    continue;
                };
                for k in 0..bins {
                    for kq in 0..bins {
                        let mut acc = Complex64::default();
                        for s in 0..n_s {
                            acc += bp[s * bins + k] * bq[s * bins + kq].conj();
                        }
                        rho[(p * bins + k, q * bins + kq)] += acc * d_s;
                    }
                }
            }
        }
    }
    let trace: f64 = (0..dim).map(|j| rho[(j, j)].re).sum();
    if trace <= 0.0 {
        return Err(QuantumError::ZeroGrid);
    }
    rho /= Complex64::new(trace, 0.0);
    // partial transpose on the polarization factor
    let mut rho_pt = DMatrix::<Complex64>::zeros(dim, dim);
    for p in 0..2usize {
        for q in 0..2usize {
            for k in 0..bins {
                for kq in 0..bins {
                    rho_pt[(p * bins + k, q * bins + kq)] = rho[(q * bins + k, p * bins + kq)];
                }
            }
        }
    }
    // Hermitian after partial transpose; trace norm from its eigenvalues
    let eig = rho_pt.symmetric_eigen();
    let trace_norm: f64 = eig.eigenvalues.iter().map(|l| l.abs()).sum();
    Ok(trace_norm.max(1.0).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::ModeId;
    use crate::jsa::{normalize_jsi, GridSpec, Regime};
    use approx::assert_relative_eq;

    fn grid_from_fn<F: Fn(f64, f64) -> Complex64>(
        span: f64,
        n: usize,
        f: F,
    ) -> JsaGrid {
        let spec = GridSpec::symmetric(2.0, 2.0, span, span, n);
        let mut amp = Vec::with_capacity(n * n);
        for &ns in &spec.nu_s {
            for &ni in &spec.nu_i {
                amp.push(f(ns, ni));
            }
        }
        JsaGrid::new(spec, amp, Regime::Linearized).unwrap()
    }

    #[test]
    fn separable_grid_is_rank_one() {
        let g = grid_from_fn(0.05, 96, |ns, ni| {
            Complex64::new((-ns * ns / 4e-4).exp() * (-ni * ni / 9e-4).exp(), 0.0)
        });
        let rep = schmidt_decompose(&g).unwrap();
        assert!((rep.schmidt_number - 1.0).abs() < 1e-9, "K = {}", rep.schmidt_number);
        assert_relative_eq!(rep.g2, 2.0, epsilon = 1e-9);
        assert_relative_eq!(rep.purity, 1.0, epsilon = 1e-9);
        assert_relative_eq!(rep.hom_visibility, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn two_equal_modes_give_k_two() {
        // F = (g1(νs)h1(νi) + g2(νs)h2(νi))/√2 with orthonormal factors:
        // Hermite-Gaussian 0 and 1 modes (the √2 keeps their norms equal)
        let w = 0.01;
        let h0 = move |x: f64| (-x * x / (2.0 * w * w)).exp();
        let h1 = move |x: f64| std::f64::consts::SQRT_2 * x / w * (-x * x / (2.0 * w * w)).exp();
        let g = grid_from_fn(0.06, 128, |ns, ni| {
            Complex64::new(h0(ns) * h0(ni) + h1(ns) * h1(ni), 0.0)
        });
        let rep = schmidt_decompose(&g).unwrap();
        assert!((rep.schmidt_number - 2.0).abs() < 1e-9, "K = {}", rep.schmidt_number);
        assert_relative_eq!(rep.purity, 0.5, epsilon = 1e-9);
        // metric chain invariants
        assert_relative_eq!(rep.g2, 1.0 + rep.purity, epsilon = 1e-12);
        assert_relative_eq!(rep.hom_visibility, rep.purity, epsilon = 1e-12);
        assert_relative_eq!(rep.lambdas.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn correlated_gaussian_matches_closed_form() {
        for (a, b) in [(4.0e4, 1.0e4), (2.0e4, 2.0e4), (9.0e4, 0.5e4), (1.0e4, 6.0e4), (3.3e4, 0.7e4)] {
            let g = grid_from_fn(0.05, 128, |ns, ni| {
                Complex64::new(
                    (-a * (ns + ni) * (ns + ni) - b * (ns - ni) * (ns - ni)).exp(),
                    0.0,
                )
            });
            let rep = schmidt_decompose(&g).unwrap();
            let expect = gaussian_schmidt_number(a, b);
            assert!(
                (rep.schmidt_number - expect).abs() < 1e-4 * expect,
                "a={a} b={b}: K = {} vs {expect}",
                rep.schmidt_number
            );
        }
    }

    #[test]
    fn schmidt_stable_under_grid_doubling() {
        let (a, b) = (4.0e4, 0.8e4);
        let k: Vec<f64> = [96usize, 192]
            .iter()
            .map(|&n| {
                let g = grid_from_fn(0.05, n, |ns, ni| {
                    Complex64::new(
                        (-a * (ns + ni) * (ns + ni) - b * (ns - ni) * (ns - ni)).exp(),
                        0.0,
                    )
                });
                schmidt_decompose(&g).unwrap().schmidt_number
            })
            .collect();
        assert!((k[0] - k[1]).abs() < 1e-3, "K drifted: {k:?}");
    }

    #[test]
    fn phase_mask_leaves_spectrum() {
        let (a, b) = (4.0e4, 1.0e4);
        let plain = grid_from_fn(0.05, 96, |ns, ni| {
            Complex64::new((-a * (ns + ni) * (ns + ni) - b * (ns - ni) * (ns - ni)).exp(), 0.0)
        });
        let masked = grid_from_fn(0.05, 96, |ns, ni| {
            let mag = (-a * (ns + ni) * (ns + ni) - b * (ns - ni) * (ns - ni)).exp();
            Complex64::from_polar(mag, 35.0 * ni + 3.0 * ni * ni / 1e-4)
        });
        let k0 = schmidt_decompose(&plain).unwrap().schmidt_number;
        let k1 = schmidt_decompose(&masked).unwrap().schmidt_number;
        assert!((k0 - k1).abs() < 1e-9, "{k0} vs {k1}");
    }

    #[test]
    fn brightness_scalings() {
        let fiber = FiberModel::step_index(1.5, 0.03)
            .unwrap()
            .with_gamma("xx", 70.0, 70.0)
            .unwrap()
            .with_length_m(0.5);
        let process = ProcessSpec::single_mode("xx", ModeId::He11x);
        let wp = crate::constants::lambda_to_omega(0.8);
        let p = PumpSpec::new(wp, 0.01).with_powers(0.002, 100.0);
        let base = brightness_estimate(&fiber, &process, &p, &p).unwrap();
        assert!(!base.clamped);
        // doubling average power quadruples flux
        let p2 = PumpSpec::new(wp, 0.01).with_powers(0.004, 100.0);
        let four = brightness_estimate(&fiber, &process, &p2, &p2).unwrap();
        assert_relative_eq!(four.relative_flux, 4.0 * base.relative_flux, max_relative = 1e-12);
        // doubling length below L_max doubles flux
        let longer = FiberModel::step_index(1.5, 0.03)
            .unwrap()
            .with_gamma("xx", 70.0, 70.0)
            .unwrap()
            .with_length_m(1.0);
        let two = brightness_estimate(&longer, &process, &p, &p).unwrap();
        assert_relative_eq!(two.relative_flux, 2.0 * base.relative_flux, max_relative = 1e-12);
    }

    #[test]
    fn brightness_plateaus_past_lmax() {
        // cross-polarized pumps walk off through the birefringence
        let mk = |len: f64| {
            FiberModel::step_index(1.5, 0.03)
                .unwrap()
                .with_birefringence(5e-4)
                .with_gamma("xy", 50.0, 50.0)
                .unwrap()
                .with_length_m(len)
        };
        let process = ProcessSpec::co_propagating(
            "xy",
            ModeId::He11x,
            ModeId::He11y,
            ModeId::He11x,
            ModeId::He11y,
        );
        let wp = crate::constants::lambda_to_omega(0.8);
        let p = PumpSpec::new(wp, 0.02).with_powers(0.002, 100.0);
        let short = brightness_estimate(&mk(0.01), &process, &p, &p).unwrap();
        assert!(!short.clamped);
        let lmax = short.l_max_m.expect("walk-off present");
        let long = brightness_estimate(&mk(10.0 * lmax), &process, &p, &p).unwrap();
        let longer = brightness_estimate(&mk(20.0 * lmax), &process, &p, &p).unwrap();
        assert!(long.clamped && longer.clamped);
        assert_relative_eq!(long.relative_flux, longer.relative_flux, max_relative = 1e-12);
    }

    // --- multi-process states and log negativity ---

    fn pol_process(label: &str, s: ModeId, i: ModeId) -> ProcessSpec {
        ProcessSpec::co_propagating(label, ModeId::He11x, ModeId::He11x, s, i)
    }

    fn gaussian_grid(center_s: f64, center_i: f64, w: f64, span: f64, n: usize) -> JsaGrid {
        grid_from_fn(span, n, |ns, ni| {
            Complex64::new(
                (-(ns - center_s) * (ns - center_s) / (w * w)
                    - (ni - center_i) * (ni - center_i) / (w * w))
                    .exp(),
                0.0,
            )
        })
    }

    #[test]
    fn build_state_normalizes() {
        let g = normalize_jsi(&gaussian_grid(0.0, 0.0, 0.01, 0.05, 64)).unwrap();
        let st = build_multiprocess_state(vec![(
            pol_process("p1", ModeId::He11x, ModeId::He11x),
            Complex64::new(3.0, 1.0),
            g.clone(),
        )])
        .unwrap();
        assert_relative_eq!(st.entries[0].weight.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(st.norm_sqr(), 1.0, epsilon = 1e-12);

        let two = build_multiprocess_state(vec![
            (
                pol_process("a", ModeId::He11x, ModeId::He11x),
                Complex64::new(1.0, 0.0),
                g.clone(),
            ),
            (
                pol_process("b", ModeId::He11y, ModeId::He11x),
                Complex64::new(1.0, 0.0),
                g.clone(),
            ),
        ])
        .unwrap();
        assert_relative_eq!(two.norm_sqr(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(two.entries[0].weight.norm(), 1.0 / 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn axis_mismatch_rejected() {
        let g1 = gaussian_grid(0.0, 0.0, 0.01, 0.05, 64);
        let g2 = gaussian_grid(0.0, 0.0, 0.01, 0.04, 64);
        assert!(matches!(
            build_multiprocess_state(vec![
                (pol_process("a", ModeId::He11x, ModeId::He11x), Complex64::new(1.0, 0.0), g1),
                (pol_process("b", ModeId::He11y, ModeId::He11x), Complex64::new(1.0, 0.0), g2),
            ]),
            Err(QuantumError::AxisMismatch)
        ));
    }

    #[test]
    fn single_process_has_zero_negativity() {
        let g = gaussian_grid(0.0, 0.0, 0.01, 0.05, 64);
        let st = build_multiprocess_state(vec![
            (pol_process("a", ModeId::He11x, ModeId::He11x), Complex64::new(1.0, 0.0), g.clone()),
            // second polarization present but with zero weight puts all the
            // population in one product term
            (pol_process("b", ModeId::He11y, ModeId::He11x), Complex64::new(1e-15, 0.0), g),
        ])
        .unwrap();
        let rep = log_negativity(&st, 16).unwrap();
        assert!(rep.log_negativity < 1e-9, "LN = {}", rep.log_negativity);
        // a literally single-polarization state errors
        let g2 = gaussian_grid(0.0, 0.0, 0.01, 0.05, 64);
        let single = build_multiprocess_state(vec![(
            pol_process("a", ModeId::He11x, ModeId::He11x),
            Complex64::new(1.0, 0.0),
            g2,
        )])
        .unwrap();
        assert!(matches!(log_negativity(&single, 16), Err(QuantumError::SinglePolarization)));
    }

    #[test]
    fn disjoint_idler_spectra_give_one_bit() {
        // same signal spectrum, disjoint idler spectra, orthogonal signal
        // polarizations, same idler polarization → Bell pair in (p_s, ν_i)
        let w = 0.004;
        let off = 0.03;
        let mk = |c_i: f64| {
            grid_from_fn(0.05, 96, move |ns, ni| {
                Complex64::new(
                    (-ns * ns / (w * w) - (ni - c_i) * (ni - c_i) / (w * w)).exp(),
                    0.0,
                )
            })
        };
        let st = build_multiprocess_state(vec![
            (
                pol_process("a", ModeId::He11x, ModeId::He11x),
                Complex64::new(1.0, 0.0),
                mk(-off),
            ),
            (
                pol_process("b", ModeId::He11y, ModeId::He11x),
                Complex64::new(1.0, 0.0),
                mk(off),
            ),
        ])
        .unwrap();
        let rep = log_negativity(&st, 32).unwrap();
        assert!(
            (rep.log_negativity - 1.0).abs() < 1e-3,
            "LN = {} (converged: {})",
            rep.log_negativity,
            rep.converged
        );
        assert!(rep.converged);
    }

    #[test]
    fn negativity_invariant_under_weight_phase_and_idler_phase_mask() {
        let w = 0.004;
        let off = 0.012;
        let mk = |c_i: f64, phase: f64| {
            grid_from_fn(0.05, 96, move |ns, ni| {
                Complex64::from_polar(
                    (-ns * ns / (w * w) - (ni - c_i) * (ni - c_i) / (w * w)).exp(),
                    phase * ni,
                )
            })
        };
        let base = build_multiprocess_state(vec![
            (pol_process("a", ModeId::He11x, ModeId::He11x), Complex64::new(1.0, 0.0), mk(-off, 0.0)),
            (pol_process("b", ModeId::He11y, ModeId::He11x), Complex64::new(1.0, 0.0), mk(off, 0.0)),
        ])
        .unwrap();
        let rotated = build_multiprocess_state(vec![
            (
                pol_process("a", ModeId::He11x, ModeId::He11x),
                Complex64::from_polar(1.0, 1.234),
                mk(-off, 80.0),
            ),
            (
                pol_process("b", ModeId::He11y, ModeId::He11x),
                Complex64::new(1.0, 0.0),
                mk(off, 80.0),
            ),
        ])
        .unwrap();
        let l0 = log_negativity(&base, 16).unwrap().log_negativity;
        let l1 = log_negativity(&rotated, 16).unwrap().log_negativity;
        assert!((l0 - l1).abs() < 1e-9, "{l0} vs {l1}");
        // bounds: 0 ≤ LN ≤ 1 for two signal polarizations
        assert!((0.0..=1.0 + 1e-12).contains(&l0));
    }

    #[test]
    fn negativity_increases_with_spectral_overlap() {
        // wider spectra (shorter pulses / shorter fiber) overlap more in the
        // traced signal variable, preserving coherence between the channels
        let off = 0.012;
        let mut prev = -1.0;
        for w in [0.004, 0.007, 0.012] {
            let mk = |c_i: f64| {
                grid_from_fn(0.05, 96, move |ns, ni| {
                    Complex64::new(
                        (-(ns + c_i) * (ns + c_i) / (w * w)
                            - (ni - c_i) * (ni - c_i) / (w * w))
                            .exp(),
                        0.0,
                    )
                })
            };
            let st = build_multiprocess_state(vec![
                (
                    pol_process("a", ModeId::He11x, ModeId::He11x),
                    Complex64::new(1.0, 0.0),
                    mk(-off),
                ),
                (
                    pol_process("b", ModeId::He11y, ModeId::He11x),
                    Complex64::new(1.0, 0.0),
                    mk(off),
                ),
            ])
            .unwrap();
            let ln = log_negativity(&st, 32).unwrap().log_negativity;
            assert!(ln > prev, "LN not increasing: {ln} after {prev} at w={w}");
            prev = ln;
        }
    }
}
