//! Special functions shared by the dispersion and JSA engines: Bessel
//! functions for the step-index characteristic equation, the Faddeeva
//! function backing the complex error function of the dual-pump JSA, and
//! numerically-safe sinc.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::constants::FADDEEVA_IM_LIMIT;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum SpecialFnError {
    /// Complex error function argument too deep in the lower half-plane;
    /// exp(−z²) factors would overflow.
    #[error("Faddeeva argument |Im z| = {0} exceeds the supported limit")]
    FaddeevaOverflow(f64),
}

/// sin(x)/x with the removable singularity handled by its series.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Bessel J0 (delegates to libm).
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Bessel J1 (delegates to libm).
pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Modified Bessel I0.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 18.0 {
        // ascending series, all terms positive; converges for all x, the
        // asymptotic form only wins once its truncation error ~e^{-2x} is
        // below f64 resolution
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum
    } else {
        asymptotic_i(0.0, x)
    }
}

/// Modified Bessel I1.
pub fn bessel_i1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 18.0 {
        let q = ax * ax / 4.0;
        let mut term = ax / 2.0;
        let mut sum = term;
        for k in 1..200 {
            term *= q / ((k * (k + 1)) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum
    } else {
        asymptotic_i(1.0, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn asymptotic_i(nu: f64, x: f64) -> f64 {
    // I_nu(x) ~ e^x/sqrt(2 pi x) * sum_k (-1)^k a_k(nu)/x^k,
    // a_k = prod_{j=1..k} (4nu^2-(2j-1)^2) / (k! 8^k)
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..40 {
        let j = (2 * k - 1) as f64;
        term *= -(mu - j * j) / (k as f64 * 8.0 * x);
        if term.abs() > prev {
            break; // asymptotic series started diverging
        }
        sum += term;
        prev = term.abs();
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    x.exp() / (2.0 * PI * x).sqrt() * sum
}

/// Modified Bessel K0 for x > 0.
pub fn bessel_k0(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 2.0 {
        // K0 = -(ln(x/2)+gamma) I0 + sum_{k>=1} H_k (x^2/4)^k/(k!)^2
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut hk = 0.0;
        let mut sum = 0.0;
        for k in 1..60 {
            term *= q / ((k * k) as f64);
            hk += 1.0 / k as f64;
            let t = term * hk;
            sum += t;
            if t < sum * 1e-17 {
                break;
            }
        }
        -((x / 2.0).ln() + EULER_GAMMA) * bessel_i0(x) + sum
    } else {
        bessel_k01_cf(x).0
    }
}

/// Modified Bessel K1 for x > 0.
pub fn bessel_k1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 2.0 {
        // K1 = ln(x/2) I1 + 1/x - (x/4) sum_k [psi(k+1)+psi(k+2)] (x^2/4)^k/(k!(k+1)!)
        let q = x * x / 4.0;
        let mut fact = 1.0; // (x^2/4)^k / (k!(k+1)!)
        let mut hk = 0.0; // H_k
        let mut sum = 0.0;
        for k in 0..60 {
            let kf = k as f64;
            if k > 0 {
                fact *= q / (kf * (kf + 1.0));
                hk += 1.0 / kf;
            }
            let psi_sum = -2.0 * EULER_GAMMA + 2.0 * hk + 1.0 / (kf + 1.0);
            let t = fact * psi_sum;
            sum += t;
            if t.abs() < sum.abs() * 1e-17 && k > 3 {
                break;
            }
        }
        (x / 2.0).ln() * bessel_i1(x) + 1.0 / x - (x / 4.0) * sum
    } else {
        bessel_k01_cf(x).1
    }
}

/// (K0, K1) for x >= 2 via the Thompson–Barnett continued fraction.
fn bessel_k01_cf(x: f64) -> (f64, f64) {
    const EPS: f64 = 1e-16;
    let nu = 0.0_f64;
    let a1 = 0.25 - nu * nu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut a = -a1;
    let mut c = a1;
    let mut q = c;
    let mut s = 1.0 + q * delh;
    for i in 2..300 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (nu + x + 0.5 - h) / x;
    (k0, k1)
}

// --- Faddeeva function -----------------------------------------------------

const WEIDEMAN_N: usize = 64;

static WEIDEMAN_COEFFS: OnceLock<Vec<f64>> = OnceLock::new();

/// Fourier coefficients a_1..a_N of Weideman's rational approximation,
/// computed by a direct DFT of exp(-t^2)(L^2+t^2) on the tangent grid.
fn weideman_coeffs() -> &'static [f64] {
    WEIDEMAN_COEFFS.get_or_init(|| {
        let n = WEIDEMAN_N;
        let m = 2 * n;
        let l = (n as f64 / std::f64::consts::SQRT_2).sqrt();
        // f(theta_k) for k = 0..M-1 (even in theta; k = M maps to t = inf, f = 0)
        let f: Vec<f64> = (0..m)
            .map(|k| {
                let theta = PI * k as f64 / m as f64;
                let t = l * (theta / 2.0).tan();
                (-t * t).exp() * (l * l + t * t)
            })
            .collect();
        (1..=n)
            .map(|j| {
                let mut acc = f[0];
                for (k, fk) in f.iter().enumerate().skip(1) {
                    let theta = PI * k as f64 / m as f64;
                    acc += 2.0 * fk * (j as f64 * theta).cos();
                }
                acc / (2.0 * m as f64)
            })
            .collect()
    })
}

fn weideman_l() -> f64 {
    (WEIDEMAN_N as f64 / std::f64::consts::SQRT_2).sqrt()
}

/// Faddeeva function w(z) for Im z >= 0.
fn faddeeva_upper(z: Complex64) -> Complex64 {
    debug_assert!(z.im >= 0.0);
    let zabs2 = z.norm_sqr();
    if zabs2 >= 144.0 {
        // Laplace continued fraction, evaluated by the downward recurrence
        // w <- z - nu/w.
        let mut w = z;
        let mut nu = 23.5;
        while nu > 0.4 {
            w = z - nu / w;
            nu -= 0.5;
        }
        Complex64::new(0.0, 1.0 / PI.sqrt()) / w
    } else {
        let l = weideman_l();
        let a = weideman_coeffs();
        let li = Complex64::new(l, 0.0);
        let iz = Complex64::new(-z.im, z.re); // i*z
        let lm = li - iz; // L - i z
        let lp = li + iz; // L + i z
        let big_z = lp / lm;
        // Horner on a_N..a_1
        let mut p = Complex64::new(0.0, 0.0);
        for &ak in a.iter().rev() {
            p = p * big_z + ak;
        }
        p * 2.0 / (lm * lm) + 1.0 / (PI.sqrt() * lm)
    }
}

/// Faddeeva function w(z) = exp(−z²)·erfc(−iz) for arbitrary z with
/// |Im z| ≤ the overflow limit.
pub fn faddeeva(z: Complex64) -> Result<Complex64, SpecialFnError> {
    if z.im >= 0.0 {
        Ok(faddeeva_upper(z))
    } else {
        if z.im < -FADDEEVA_IM_LIMIT {
            return Err(SpecialFnError::FaddeevaOverflow(z.im.abs()));
        }
        // w(z) = 2 exp(-z^2) - w(-z)
        let e = (-(z * z)).exp();
        Ok(2.0 * e - faddeeva_upper(-z))
    }
}

/// Scaled error-function difference
/// `exp(−β²)·[erf(c_hi − iβ) − erf(c_lo − iβ)]`,
/// the building block of the dual-pump walk-off JSA. Evaluated through the
/// Faddeeva function so no intermediate overflows for large β; equals
/// `(2/√π)·∫_{c_lo}^{c_hi} exp(−t²) exp(2iβt) dt` exactly.
pub fn erf_diff_scaled(beta: f64, c_lo: f64, c_hi: f64) -> Result<Complex64, SpecialFnError> {
    Ok(scaled_erfc_term(beta, c_lo)? - scaled_erfc_term(beta, c_hi)?)
}

/// exp(−β²)·erfc(c − iβ) = exp(−c² + 2icβ)·w(β + ic), bounded for all real β, c.
fn scaled_erfc_term(beta: f64, c: f64) -> Result<Complex64, SpecialFnError> {
    if c.abs() > FADDEEVA_IM_LIMIT {
        return Err(SpecialFnError::FaddeevaOverflow(c.abs()));
    }
    let w = faddeeva(Complex64::new(beta, c))?;
    let phase = Complex64::new(-c * c, 2.0 * c * beta).exp();
    Ok(phase * w)
}
