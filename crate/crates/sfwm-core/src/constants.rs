//! Physical constants, unit conversions, and pinned numerical tolerances.
//!
//! Unit conventions used across the crate:
//! - angular frequency `omega` in rad/fs
//! - wavelength `lambda` in µm
//! - propagation constant `k` in 1/µm, derivatives `k^(n)` in fs^n/µm
//! - fiber length `L` in m (converted to µm internally)
//! - nonlinear coefficient `gamma` in 1/(W·km)
//! - dispersion parameter `D` in ps/(nm·km)

/// Speed of light in µm/fs (= 299 792 458 m/s).
pub const C_UM_PER_FS: f64 = 0.299792458;

/// Micrometers per meter, for fiber-length conversions.
pub const UM_PER_M: f64 = 1.0e6;

/// Converts gamma from 1/(W·km) to 1/(W·µm).
pub const GAMMA_PER_WKM_TO_PER_WUM: f64 = 1.0e-9;

/// Converts the dispersion parameter from fs/µm² to ps/(nm·km).
pub const D_FS_PER_UM2_TO_PS_PER_NM_KM: f64 = 1.0e3;

/// Fused-silica Sellmeier coefficients (Malitson 1965), the single source of
/// truth for the material index backing the step-index surrogate.
/// n²(λ) − 1 = Σ_j B_j λ² / (λ² − C_j), λ in µm.
pub const SELLMEIER_B: [f64; 3] = [0.696_166_3, 0.407_942_6, 0.897_479_4];
/// C_j in µm² (squares of the resonance wavelengths 0.0684043, 0.1162414,
/// 9.896161 µm).
pub const SELLMEIER_C_UM2: [f64; 3] = [
    0.068_404_3 * 0.068_404_3,
    0.116_241_4 * 0.116_241_4,
    9.896_161 * 9.896_161,
];
/// Sellmeier fit validity window (µm).
pub const SELLMEIER_LAMBDA_MIN_UM: f64 = 0.21;
pub const SELLMEIER_LAMBDA_MAX_UM: f64 = 3.7;

/// Gaussian approximation constant for the sinc phasematching profile, used
/// by the symmetric-bandwidth condition 2·Γ·σ²·|T_s·T_i| = 1.
pub const GAMMA_FACTORABILITY: f64 = 0.193;

/// Phasematching refinement tolerance for contour vertices, in 1/µm.
pub const TOL_PM: f64 = 1.0e-9;

/// |Δk| gate applied at the center frequencies before computing group-delay
/// terms, in 1/µm. Looser than [`TOL_PM`] so hand-constructed near-solutions
/// are accepted; contour-refined points pass with margin.
pub const TOL_PM_CENTERS: f64 = 1.0e-6;

/// Raman Stokes-band width red of each pump: 50 THz expressed in rad/fs.
pub const RAMAN_BAND_RAD_PER_FS: f64 = 2.0 * std::f64::consts::PI * 0.05;

/// Walk-off clamp: L_max is where the inter-pump walk-off equals
/// `WALKOFF_DURATION_FACTOR` times the shorter pump duration (1/σ).
pub const WALKOFF_DURATION_FACTOR: f64 = 1.0;

/// Tolerance on |Ts + Ti| / max(|Ts|,|Ti|) for the symmetric-state claim.
pub const SYMMETRY_REL_TOL: f64 = 0.05;

/// |Ts·Ti| window (fs²) defining factorable-segment endpoints.
pub const SEGMENT_PRODUCT_EPS_FS2: f64 = 1.0e-4;

/// Largest |Im z| accepted by the complex-error-function path of the
/// dual-pump JSA; beyond this exp(−z²) factors overflow f64.
pub const FADDEEVA_IM_LIMIT: f64 = 26.0;

/// Converts wavelength (µm) to angular frequency (rad/fs).
pub fn lambda_to_omega(lambda_um: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_UM_PER_FS / lambda_um
}

/// Converts angular frequency (rad/fs) to wavelength (µm).
pub fn omega_to_lambda(omega_rad_fs: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_UM_PER_FS / omega_rad_fs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_omega_roundtrip() {
        for lam in [0.4, 0.8, 1.55, 3.0] {
            let om = lambda_to_omega(lam);
            assert!((omega_to_lambda(om) - lam).abs() < 1e-15);
        }
        // 0.8 µm is about 2.354 rad/fs
        assert!((lambda_to_omega(0.8) - 2.354_564).abs() < 1e-3);
    }

    #[test]
    fn d_unit_conversion_matches_smf28() {
        // silica bulk at 1.55 µm: beta2 ≈ −0.0217 fs²/µm gives D ≈ +17 ps/(nm·km)
        let k2 = -0.0217;
        let lam = 1.55;
        let d = -(2.0 * std::f64::consts::PI * C_UM_PER_FS / (lam * lam))
            * k2
            * D_FS_PER_UM2_TO_PS_PER_NM_KM;
        assert!((d - 17.0).abs() < 0.5, "D = {d}");
    }
}
