//! Design-space search: factorable contour segments, the symmetric-bandwidth
//! condition 2Γσ²|T_sT_i| = 1, ultra-broadband (k² = k⁴ = 0) geometry
//! search, critical pump power for loop collapse, and spectral tuning by
//! transverse scaling.

use serde::{Deserialize, Serialize};

use crate::constants::{
    lambda_to_omega, omega_to_lambda, GAMMA_FACTORABILITY, GAMMA_PER_WKM_TO_PER_WUM,
    SEGMENT_PRODUCT_EPS_FS2, SYMMETRY_REL_TOL,
};
use crate::fiber::{FiberError, FiberModel, ModeId};
use crate::phasematch::{
    delta_k, group_delay_terms, linspace, phasematch_angle, raman_overlap, trace_contour, Branch,
    CenterFrequencies, GroupDelayTerms, PhasematchError, ProcessSpec, RamanOverlap, TermVariant,
};

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum DesignError {
    #[error("no phasematching contour in the requested window")]
    EmptyContour,
    #[error("|T_s + T_i|/max = {0:.3} exceeds the 5% symmetric-state tolerance")]
    NotAntisymmetric(f64),
    #[error("T_s·T_i = {0} is not negative; factorability condition violated")]
    NonNegativeProduct(f64),
    #[error("no simultaneous k²=k⁴=0 root in the scale range")]
    NoRoot,
    #[error("no phasematching loop at this pump wavelength")]
    NoLoop,
    #[error("no nonlinear coefficient registered for process `{0}`")]
    MissingGamma(String),
    #[error(transparent)]
    Phasematch(#[from] PhasematchError),
    #[error(transparent)]
    Dispersion(#[from] FiberError),
}

/// One contour point that passed (or bounds) the factorability condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCandidate {
    pub omega_p: f64,
    pub detuning: f64,
    pub branch: Branch,
    /// Contiguous feasible run this point belongs to.
    pub segment_id: usize,
    pub t_s_fs: f64,
    pub t_i_fs: f64,
    /// Joint-spectrum orientation; None when both T's vanish.
    pub theta_deg: Option<f64>,
    /// Pump bandwidth solving the symmetric condition, when T_s ≈ −T_i.
    pub sigma_symmetric: Option<f64>,
    /// |2Γσ²|T_sT_i| − 1| at the solved σ.
    pub symmetric_identity_residual: Option<f64>,
    pub factorability_condition: bool,
    /// Both T's below the working tolerance (dispersionless degeneracy).
    pub degenerate: bool,
    pub raman: RamanOverlap,
}

#[derive(Debug, Clone)]
pub struct FactorableSearchConfig {
    /// Pump wavelength range (µm), long to short.
    pub pump_range_um: (f64, f64),
    pub n_pump: usize,
    /// Detuning window (rad/fs) for contour tracing; solutions are sought in
    /// the upper half and mirrored by energy conservation.
    pub detuning_max: f64,
    pub n_detuning: usize,
    /// Pump bandwidths used for the T-weighting.
    pub sigma1: f64,
    pub sigma2: f64,
}

impl Default for FactorableSearchConfig {
    fn default() -> Self {
        Self {
            pump_range_um: (1.3, 0.7),
            n_pump: 96,
            detuning_max: 1.5,
            n_detuning: 192,
            sigma1: 0.01,
            sigma2: 0.01,
        }
    }
}

/// Walks the phasematching contour and returns the sub-segments where
/// T_s·T_i ≤ 0, each point annotated with the orientation angle, the
/// symmetric-bandwidth solution where applicable, and the Raman flag.
/// Segment endpoints are refined until |T_s·T_i| ≤ 1e-4 fs².
pub fn factorable_search(
    fiber: &FiberModel,
    process: &ProcessSpec,
    config: &FactorableSearchConfig,
) -> Result<Vec<DesignCandidate>, DesignError> {
    let (lam_lo, lam_hi) = config.pump_range_um;
    let pump = linspace(
        lambda_to_omega(lam_lo.max(lam_hi)),
        lambda_to_omega(lam_lo.min(lam_hi)),
        config.n_pump,
    );
    let det = linspace(
        config.detuning_max / (config.n_detuning as f64),
        config.detuning_max,
        config.n_detuning,
    );
    let contour = trace_contour(fiber, process, &pump, &det)?;
    if contour.empty {
        return Err(DesignError::EmptyContour);
    }
    let mut candidates = Vec::new();
    let mut segment_id = 0usize;
    let mut prev_feasible = false;
    for col in &contour.columns {
        // one representative per column per branch (upper half-plane)
        let mut any_feasible = false;
        for pt in &col.points {
            let centers = CenterFrequencies::degenerate(col.omega_p, pt.detuning);
            let terms = match group_delay_terms(
                fiber,
                process,
                centers,
                config.sigma1,
                config.sigma2,
                TermVariant::PumpTwoReferenced,
            ) {
                Ok(t) => t,
                Err(PhasematchError::NotPhasematched(_)) => continue,
                Err(e) => return Err(e.into()),
            };
            let product = terms.t_s * terms.t_i;
            let feasible = product <= 0.0;
            if feasible {
                any_feasible = true;
                candidates.push(candidate_from_terms(&terms, pt.branch, segment_id));
            }
        }
        if any_feasible && !prev_feasible {
            segment_id += 1;
        }
        prev_feasible = any_feasible;
    }
    if candidates.is_empty() {
        return Err(DesignError::EmptyContour);
    }
    Ok(candidates)
}

fn candidate_from_terms(terms: &GroupDelayTerms, branch: Branch, segment_id: usize) -> DesignCandidate {
    let degenerate = terms.t_s.abs() < 1e-9 && terms.t_i.abs() < 1e-9;
    let theta_deg = phasematch_angle(terms).ok().map(|(t, _)| t);
    let product = terms.t_s * terms.t_i;
    let symmetric = !degenerate
        && product < 0.0
        && (terms.t_s + terms.t_i).abs() / terms.t_s.abs().max(terms.t_i.abs()) <= SYMMETRY_REL_TOL;
    let sigma_symmetric = symmetric
        .then(|| (1.0 / (2.0 * GAMMA_FACTORABILITY * product.abs())).sqrt());
    let symmetric_identity_residual = sigma_symmetric
        .map(|s| (2.0 * GAMMA_FACTORABILITY * s * s * product.abs() - 1.0).abs());
    DesignCandidate {
        omega_p: terms.centers.omega_p1,
        detuning: terms.centers.omega_s - terms.centers.omega_p1,
        branch,
        segment_id,
        t_s_fs: terms.t_s,
        t_i_fs: terms.t_i,
        theta_deg,
        sigma_symmetric,
        symmetric_identity_residual,
        factorability_condition: product <= 0.0,
        degenerate,
        raman: raman_overlap(&terms.centers),
    }
}

/// Refines a feasibility boundary along the contour: bisects in ω_p between
/// a feasible and an infeasible column until |T_s·T_i| ≤ 1e-4 fs², re-solving
/// the contour detuning at each probe.
pub fn refine_segment_endpoint(
    fiber: &FiberModel,
    process: &ProcessSpec,
    sigma1: f64,
    sigma2: f64,
    feasible: (f64, f64),   // (omega_p, detuning) with T_s·T_i ≤ 0
    infeasible: (f64, f64), // neighboring column with T_s·T_i > 0
) -> Result<DesignCandidate, DesignError> {
    let product_at = |omega_p: f64, delta_guess: f64| -> Result<(f64, GroupDelayTerms), DesignError> {
        let delta = solve_column_near(fiber, process, omega_p, delta_guess)
            .ok_or(DesignError::EmptyContour)?;
        let centers = CenterFrequencies::degenerate(omega_p, delta);
        let terms = group_delay_terms(fiber, process, centers, sigma1, sigma2, TermVariant::PumpTwoReferenced)?;
        Ok((terms.t_s * terms.t_i, terms))
    };
    let (mut lo, mut lo_d) = feasible;
    let (mut hi, mut hi_d) = infeasible;
    let (mut product, mut terms) = product_at(lo, lo_d)?;
    for _ in 0..60 {
        if product.abs() <= SEGMENT_PRODUCT_EPS_FS2 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let mid_d = 0.5 * (lo_d + hi_d);
        let (p_mid, t_mid) = product_at(mid, mid_d)?;
        if p_mid <= 0.0 {
            lo = mid;
            lo_d = t_mid.centers.omega_s - mid;
            product = p_mid;
            terms = t_mid;
        } else {
            hi = mid;
            hi_d = mid_d;
        }
    }
    Ok(candidate_from_terms(&terms, Branch::Line, usize::MAX))
}

/// 1D bisection for the contour detuning at a fixed pump frequency, seeded
/// near a known solution.
fn solve_column_near(
    fiber: &FiberModel,
    process: &ProcessSpec,
    omega_p: f64,
    delta_guess: f64,
) -> Option<f64> {
    let f = |d: f64| delta_k(fiber, process, omega_p, omega_p, omega_p + d).ok();
    // expand a bracket around the guess
    let mut half = delta_guess.abs().max(1e-3) * 0.05;
    for _ in 0..20 {
        let lo = delta_guess - half;
        let hi = delta_guess + half;
        let (f_lo, f_hi) = (f(lo)?, f(hi)?);
        if f_lo * f_hi < 0.0 {
            let (mut a, mut b) = (lo, hi);
            let sign_a = f_lo.signum();
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = f(m)?;
                if fm == 0.0 {
                    return Some(m);
                }
                if fm.signum() == sign_a {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        half *= 1.6;
    }
    None
}

/// Which variable the symmetric-bandwidth identity is solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveFor {
    Sigma,
    Length,
}

/// Solves 2Γσ²|T_sT_i| = 1 (Γ = 0.193) for the pump bandwidth, or for the
/// fiber length rescaling that satisfies the identity at the bandwidth the
/// terms were computed with (T_μ ∝ L makes that solve quadratic).
pub fn symmetric_bandwidth_solve(
    terms: &GroupDelayTerms,
    solve_for: SolveFor,
) -> Result<f64, DesignError> {
    let product = terms.t_s * terms.t_i;
    if product >= 0.0 {
        return Err(DesignError::NonNegativeProduct(product));
    }
    let asym = (terms.t_s + terms.t_i).abs() / terms.t_s.abs().max(terms.t_i.abs());
    if asym > SYMMETRY_REL_TOL {
        return Err(DesignError::NotAntisymmetric(asym));
    }
    match solve_for {
        SolveFor::Sigma => Ok((1.0 / (2.0 * GAMMA_FACTORABILITY * product.abs())).sqrt()),
        SolveFor::Length => {
            let s2 = terms.sigma1 * terms.sigma1;
            let scale = 1.0 / (2.0 * GAMMA_FACTORABILITY * s2 * product.abs()).sqrt();
            Ok(terms.length_m * scale)
        }
    }
}

/// Result of the ultra-broadband geometry search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UltraBroadbandResult {
    pub scale: f64,
    pub lambda_zd_um: f64,
    pub k2_residual: f64,
    pub k4_residual: f64,
    pub k3_at_solution: f64,
    /// |k³| below 1e-6 fs³/µm: the curvature argument degenerates and the
    /// candidate deserves a closer look.
    pub k3_small: bool,
}

/// Scale-parameterized dispersion family: anything that can produce a model
/// per transverse scale factor. The step-index surrogate implements this by
/// rescaling its geometry; tabulated models need a user-supplied family.
pub fn surrogate_family(fiber: &FiberModel) -> impl Fn(f64) -> Result<FiberModel, FiberError> + '_ {
    move |scale: f64| {
        let mut out = fiber.clone();
        out.scale_factor = scale;
        if out.kind == crate::fiber::FiberKind::Tabulated && scale != 1.0 {
            return Err(FiberError::UnsupportedForTabulated);
        }
        Ok(out)
    }
}

/// 2D root search for k² = k⁴ = 0: for each scale the tracked
/// zero-dispersion frequency is re-solved by bisection on k², and the scale
/// is then bisected on the value of k⁴ at that ZDW.
pub fn ultrabroadband_search<F>(
    family: F,
    mode: &ModeId,
    scale_range: (f64, f64),
    lambda_range_um: (f64, f64),
) -> Result<UltraBroadbandResult, DesignError>
where
    F: Fn(f64) -> Result<FiberModel, FiberError>,
{
    let zdw_omega = |scale: f64| -> Result<Option<f64>, DesignError> {
        let fiber = family(scale)?;
        let zdws = fiber.find_zdw(mode, lambda_range_um)?;
        // track the first ZDW in range; bisect k2 in ω for a sharp residual
        let Some(&lam) = zdws.first() else { return Ok(None) };
        let om_guess = lambda_to_omega(lam);
        let k2 = |om: f64| fiber.mode_dispersion(mode, om).map(|s| s.k2);
        let mut lo = om_guess * 0.995;
        let mut hi = om_guess * 1.005;
        let (mut f_lo, mut f_hi) = (k2(lo)?, k2(hi)?);
        let mut grow = 0;
        while f_lo * f_hi > 0.0 && grow < 12 {
            lo *= 0.995;
            hi *= 1.005;
            f_lo = k2(lo)?;
            f_hi = k2(hi)?;
            grow += 1;
        }
        if f_lo * f_hi > 0.0 {
            return Ok(None);
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let fm = k2(mid)?;
            if fm == 0.0 {
                return Ok(Some(mid));
            }
            if fm.signum() == f_lo.signum() {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    };
    let k4_at_zdw = |scale: f64| -> Result<Option<(f64, f64)>, DesignError> {
        match zdw_omega(scale)? {
            None => Ok(None),
            Some(om) => {
                let fiber = family(scale)?;
                let s = fiber.mode_dispersion(mode, om)?;
                Ok(Some((s.k4, om)))
            }
        }
    };
    // scan the scale range for a sign change of k4 at the tracked ZDW
    let n = 17;
    let (s_lo, s_hi) = scale_range;
    let mut prev: Option<(f64, f64)> = None; // (scale, k4)
    let mut bracket = None;
    for i in 0..n {
        let s = s_lo + (s_hi - s_lo) * i as f64 / (n - 1) as f64;
        let Some((k4, _)) = k4_at_zdw(s)? else {
            prev = None;
            continue;
        };
        if let Some((sp, k4p)) = prev {
            if k4p * k4 <= 0.0 {
                bracket = Some((sp, s, k4p));
                break;
            }
        }
        prev = Some((s, k4));
    }
    let Some((mut lo, mut hi, k4_lo)) = bracket else {
        return Err(DesignError::NoRoot);
    };
    let sign_lo = k4_lo.signum();
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let Some((k4, _)) = k4_at_zdw(mid)? else { break };
        if k4 == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if k4.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / mid.abs() < 1e-9 {
            break;
        }
    }
    let scale = 0.5 * (lo + hi);
    let Some((k4, om)) = k4_at_zdw(scale)? else {
        return Err(DesignError::NoRoot);
    };
    let fiber = family(scale)?;
    let sample = fiber.mode_dispersion(mode, om)?;
    Ok(UltraBroadbandResult {
        scale,
        lambda_zd_um: omega_to_lambda(om),
        k2_residual: sample.k2.abs(),
        k4_residual: k4.abs(),
        k3_at_solution: sample.k3,
        k3_small: sample.k3.abs() < 1e-6,
    })
}

/// Critical total pump power where the per-column solution count collapses
/// from 2 to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPower {
    /// Per-pump power (P₁ = P₂ = P*) in W.
    pub power_w: f64,
    /// Power bracket around the collapse, relative width ≤ 1%.
    pub bracket_w: (f64, f64),
}

/// Bisects on pump power until the number of Δk = 0 solutions per column at
/// `pump_lambda_um` drops from 2 to 0 (upper half-plane), at 1% tolerance.
pub fn critical_power(
    fiber: &FiberModel,
    process: &ProcessSpec,
    pump_lambda_um: f64,
    detuning_max: f64,
) -> Result<CriticalPower, DesignError> {
    let gamma = fiber
        .gamma_table
        .get(&process.label)
        .ok_or_else(|| DesignError::MissingGamma(process.label.clone()))?;
    let g_total =
        (gamma.gamma1_per_w_km + gamma.gamma2_per_w_km) * GAMMA_PER_WKM_TO_PER_WUM;
    if g_total <= 0.0 {
        return Err(DesignError::MissingGamma(process.label.clone()));
    }
    let omega_p = lambda_to_omega(pump_lambda_um);
    let count = |power_w: f64| -> Result<usize, DesignError> {
        let p = process.clone().with_powers(power_w, power_w);
        Ok(count_column_solutions(fiber, &p, omega_p, detuning_max, 2048)?)
    };
    // find a starting power with a resolvable two-solution column
    let mut p_lo = 1e-3;
    let mut found = false;
    for _ in 0..40 {
        if count(p_lo)? >= 2 {
            found = true;
            break;
        }
        p_lo *= 2.0;
    }
    if !found {
        return Err(DesignError::NoLoop);
    }
    let mut p_hi = p_lo;
    let mut collapsed = false;
    for _ in 0..40 {
        p_hi *= 2.0;
        if count(p_hi)? == 0 {
            collapsed = true;
            break;
        }
    }
    if !collapsed {
        return Err(DesignError::NoLoop);
    }
    while (p_hi - p_lo) / p_hi > 0.005 {
        let mid = (p_lo * p_hi).sqrt();
        if count(mid)? == 0 {
            p_hi = mid;
        } else {
            p_lo = mid;
        }
    }
    Ok(CriticalPower { power_w: 0.5 * (p_lo + p_hi), bracket_w: (p_lo, p_hi) })
}

/// Sign-change count of Δk over a fine detuning scan (upper half-plane).
fn count_column_solutions(
    fiber: &FiberModel,
    process: &ProcessSpec,
    omega_p: f64,
    detuning_max: f64,
    n: usize,
) -> Result<usize, PhasematchError> {
    let mut count = 0;
    let mut prev: Option<f64> = None;
    for i in 1..=n {
        let d = detuning_max * i as f64 / n as f64;
        let v = match delta_k(fiber, process, omega_p, omega_p, omega_p + d) {
            Ok(v) => v,
            Err(PhasematchError::NonPhysical(_)) => break,
            Err(PhasematchError::Dispersion(_)) => break,
            Err(e) => return Err(e),
        };
        if let Some(p) = prev {
            if p * v < 0.0 {
                count += 1;
            }
        }
        prev = Some(v);
    }
    Ok(count)
}

/// One row of a transverse-scaling tuning scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub scale: f64,
    /// Outer-branch emission wavelengths; None when the pump is not
    /// phasematched at this scale.
    pub lambda_s_um: Option<f64>,
    pub lambda_i_um: Option<f64>,
    pub phasematched: bool,
}

/// Per-scale contour solve at a fixed pump, reporting the outer-branch
/// emission wavelengths.
pub fn tuning_scan(
    fiber: &FiberModel,
    process: &ProcessSpec,
    scale_values: &[f64],
    pump_lambda_um: f64,
    detuning_max: f64,
) -> Result<Vec<TuningRow>, DesignError> {
    let omega_p = lambda_to_omega(pump_lambda_um);
    let mut rows = Vec::with_capacity(scale_values.len());
    for &scale in scale_values {
        let mut scaled = fiber.clone();
        scaled.scale_factor = scale;
        let outer = outermost_solution(&scaled, process, omega_p, detuning_max);
        match outer {
            Some(delta) => rows.push(TuningRow {
                scale,
                lambda_s_um: Some(omega_to_lambda(omega_p + delta)),
                lambda_i_um: Some(omega_to_lambda(omega_p - delta)),
                phasematched: true,
            }),
            None => rows.push(TuningRow {
                scale,
                lambda_s_um: None,
                lambda_i_um: None,
                phasematched: false,
            }),
        }
    }
    Ok(rows)
}

/// Largest-detuning Δk = 0 solution in the upper half-plane at fixed pump.
pub fn outermost_solution(
    fiber: &FiberModel,
    process: &ProcessSpec,
    omega_p: f64,
    detuning_max: f64,
) -> Option<f64> {
    let n = 2048;
    let f = |d: f64| delta_k(fiber, process, omega_p, omega_p, omega_p + d).ok();
    let mut best = None;
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..=n {
        let d = detuning_max * i as f64 / n as f64;
        let Some(v) = f(d) else { break };
        if let Some((dp, vp)) = prev {
            if vp * v < 0.0 {
                // refine
                let (mut a, mut b) = (dp, d);
                let sign_a = vp.signum();
                for _ in 0..70 {
                    let m = 0.5 * (a + b);
                    let Some(fm) = f(m) else { break };
                    if fm == 0.0 {
                        break;
                    }
                    if fm.signum() == sign_a {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                best = Some(0.5 * (a + b));
            }
        }
        prev = Some((d, v));
    }
    best
}
