//! Modified Bessel functions `I_nu`, `K_nu` of real order `nu > -1` on the open
//! right half-plane.
//!
//! Below the crossover `|z| = max(12, 2 nu^2)` the first kind is summed from its
//! power series and the second kind is integrated from
//! `K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt` with an adaptive
//! trapezoid rule (exponentially convergent for this integrand). Above the
//! crossover both use the Hankel asymptotic expansion, truncated at its
//! smallest term.
//!
//! The `_scaled` entry points return `exp(-Re z) I_nu(z)` and `exp(Re z) K_nu(z)`
//! and never overflow for arguments in the sector.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Largest `Re z` accepted by the unscaled entry points.
pub const UNSCALED_RE_LIMIT: f64 = 700.0;

const SERIES_TOL: f64 = 1e-17;
const QUAD_TOL: f64 = 1e-14;
const MAX_SERIES_TERMS: usize = 2000;

/// Order of a modified Bessel function, restricted to `nu > -1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu > -1.0 {
            Ok(Self(nu))
        } else {
            Err(Error::OrderOutOfRange(nu))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Argument in the open right half-plane `Re z > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorArgument(Complex64);

impl SectorArgument {
    pub fn new(z: Complex64) -> Result<Self> {
        if z.re.is_finite() && z.im.is_finite() && z.re > 0.0 {
            Ok(Self(z))
        } else {
            Err(Error::ArgumentOutOfSector { re: z.re, im: z.im })
        }
    }

    pub fn real(x: f64) -> Result<Self> {
        Self::new(Complex64::new(x, 0.0))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

/// Gamma function for real arguments.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

fn crossover(nu: f64) -> f64 {
    f64::max(12.0, 2.0 * nu * nu)
}

/// `I_nu(z)`.
pub fn bessel_i(order: BesselOrder, z: SectorArgument) -> Result<Complex64> {
    let zv = z.value();
    if zv.re > UNSCALED_RE_LIMIT {
        return Err(Error::Overflow(zv.re, UNSCALED_RE_LIMIT));
    }
    Ok(i_scaled(order.value(), zv) * zv.re.exp())
}

/// `exp(-Re z) I_nu(z)`.
pub fn bessel_i_scaled(order: BesselOrder, z: SectorArgument) -> Complex64 {
    i_scaled(order.value(), z.value())
}

/// `K_nu(z)`.
pub fn bessel_k(order: BesselOrder, z: SectorArgument) -> Result<Complex64> {
    let zv = z.value();
    if zv.re > UNSCALED_RE_LIMIT {
        return Err(Error::Overflow(zv.re, UNSCALED_RE_LIMIT));
    }
    Ok(k_scaled(order.value(), zv)? * (-zv.re).exp())
}

/// `exp(Re z) K_nu(z)`.
pub fn bessel_k_scaled(order: BesselOrder, z: SectorArgument) -> Result<Complex64> {
    k_scaled(order.value(), z.value())
}

/// `(I_nu'(z), K_nu'(z))` from the order-raising recurrences
/// `I' = I_{nu+1} + (nu/z) I_nu` and `K' = -K_{nu+1} + (nu/z) K_nu`.
pub fn bessel_derivatives(order: BesselOrder, z: SectorArgument) -> Result<(Complex64, Complex64)> {
    let nu = order.value();
    let up = BesselOrder::new(nu + 1.0)?;
    let zv = z.value();
    let i0 = bessel_i(order, z)?;
    let i1 = bessel_i(up, z)?;
    let k0 = bessel_k(order, z)?;
    let k1 = bessel_k(up, z)?;
    let ratio = Complex64::new(nu, 0.0) / zv;
    Ok((i1 + ratio * i0, -k1 + ratio * k0))
}

/// Scaled `I_nu` without argument validation. Caller guarantees `nu > -1`, `Re z > 0`.
pub(crate) fn i_scaled(nu: f64, z: Complex64) -> Complex64 {
    if z.norm() < crossover(nu) {
        i_series(nu, z) * (-z.re).exp()
    } else {
        i_asymptotic_scaled(nu, z)
    }
}

/// Scaled `K_nu` without argument validation. `K_{-nu} = K_nu`, so only `|nu|` matters.
pub(crate) fn k_scaled(nu: f64, z: Complex64) -> Result<Complex64> {
    let nu = nu.abs();
    if z.norm() < crossover(nu) {
        k_integral_scaled(nu, z)
    } else {
        Ok(k_asymptotic_scaled(nu, z))
    }
}

fn i_series(nu: f64, z: Complex64) -> Complex64 {
    let quarter_sq = z * z * 0.25;
    let mut term = Complex64::new(1.0 / gamma(nu + 1.0), 0.0);
    let mut sum = term;
    let peak = z.norm() * 0.5;
    for m in 1..MAX_SERIES_TERMS {
        let mf = m as f64;
        term *= quarter_sq / (mf * (nu + mf));
        sum += term;
        if mf > peak && term.norm() <= SERIES_TOL * sum.norm() {
            break;
        }
    }
    let half = z * 0.5;
    let prefactor = if nu == 0.0 { Complex64::new(1.0, 0.0) } else { (half.ln() * nu).exp() };
    prefactor * sum
}

/// Hankel sums `sum_k (sign)^k a_k(nu) / z^k`, truncated at the smallest term.
/// Returns `(sum with alternating signs, sum with plus signs)`.
fn hankel_sums(nu: f64, z: Complex64) -> (Complex64, Complex64) {
    let mu = 4.0 * nu * nu;
    let mut term = Complex64::new(1.0, 0.0);
    let mut alt = term;
    let mut plus = term;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * ((mu - odd * odd) / (8.0 * kf)) / z;
        let size = next.norm();
        if size == 0.0 {
            break;
        }
        // Past the smallest term the series starts to diverge.
        if size > last && k > 2 {
            break;
        }
        term = next;
        last = size;
        if k % 2 == 1 {
            alt -= term;
        } else {
            alt += term;
        }
        plus += term;
        if size <= SERIES_TOL * plus.norm().min(alt.norm()) {
            break;
        }
    }
    (alt, plus)
}

fn i_asymptotic_scaled(nu: f64, z: Complex64) -> Complex64 {
    let (alt, plus) = hankel_sums(nu, z);
    let root = (z * (2.0 * PI)).sqrt();
    let im_phase = Complex64::new(0.0, z.im).exp();
    let leading = im_phase * alt / root;
    // Subdominant exp(-z) contribution; its coefficient depends on the half-plane.
    let coeff = if z.im > 0.0 {
        Complex64::new(0.0, 1.0) * Complex64::new(0.0, nu * PI).exp()
    } else if z.im < 0.0 {
        Complex64::new(0.0, -1.0) * Complex64::new(0.0, -nu * PI).exp()
    } else {
        Complex64::new(-(nu * PI).sin(), 0.0)
    };
    let decay = (-z - Complex64::new(z.re, 0.0)).exp();
    leading + coeff * decay * plus / root
}

fn k_asymptotic_scaled(nu: f64, z: Complex64) -> Complex64 {
    let (_, plus) = hankel_sums(nu, z);
    let im_phase = Complex64::new(0.0, -z.im).exp();
    (Complex64::new(PI * 0.5, 0.0) / z).sqrt() * im_phase * plus
}

/// Integrand of the scaled `K_nu` integral at `t`.
fn k_integrand(nu: f64, z: Complex64, t: f64) -> Complex64 {
    let s = (0.5 * t).sinh();
    let expo = Complex64::new(nu * t, -z.im) - z * (2.0 * s * s);
    let even = if nu == 0.0 { 1.0 } else { 0.5 * (1.0 + (-2.0 * nu * t).exp()) };
    expo.exp() * even
}

fn k_integral_scaled(nu: f64, z: Complex64) -> Result<Complex64> {
    let re = z.re;
    let log_mag = |t: f64| {
        let s = (0.5 * t).sinh();
        nu * t - re * 2.0 * s * s
    };
    let peak_t = if nu > 0.0 { (nu / re).asinh() } else { 0.0 };
    let peak = log_mag(peak_t);
    let mut upper = peak_t + 0.5;
    while log_mag(upper) > peak - 50.0 {
        upper += 0.5;
        if upper > 1e3 {
            return Err(Error::Quadrature(format!("K integral tail does not decay for z = {z}")));
        }
    }

    let mut n = 32usize;
    let mut h = upper / n as f64;
    let mut sum = 0.5 * (k_integrand(nu, z, 0.0) + k_integrand(nu, z, upper));
    for j in 1..n {
        sum += k_integrand(nu, z, j as f64 * h);
    }
    let mut estimate = sum * h;
    for level in 0..16 {
        let mut mids = Complex64::new(0.0, 0.0);
        for j in 0..n {
            mids += k_integrand(nu, z, (j as f64 + 0.5) * h);
        }
        sum += mids;
        n *= 2;
        h *= 0.5;
        let refined = sum * h;
        let diff = (refined - estimate).norm();
        estimate = refined;
        if level >= 1 && diff <= QUAD_TOL * refined.norm() {
            return Ok(estimate);
        }
    }
    Err(Error::Quadrature(format!("K integral did not converge for nu = {nu}, z = {z}")))
}
