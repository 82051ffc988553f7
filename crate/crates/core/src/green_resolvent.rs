//! Neumann Green kernel of `λ - B_c` and resolvents of `y^α B_c` by kernel quadrature.
//!
//! The kernel of `(λ - B_c)^{-1}` with respect to `ρ^c dρ` is
//! `(yρ)^((1-c)/2) I_((c-1)/2)(√λ min) K_(|1-c|/2)(√λ max)`.
//! For `α ≠ 0` the substitution `σ = y^(1-α/2)` turns `y^α B_c` into
//! `(1-α/2)^2 B_c̃`, and the resolvent is computed in `σ`.

use crate::error::{Error, Result};
use crate::special_fn::{i_scaled, k_scaled};
use crate::transforms::{conjugate_params, reducing_beta};
use crate::weighted_space::{power_integral, GradedMesh, GridFunction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One term `coef · y^power` of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialTerm {
    #[serde(with = "crate::complex_serde")]
    pub coef: Complex64,
    pub power: f64,
}

/// `V(y) = Σ a_k y^(s_k)`, or nodal values on a particular mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Powers(Vec<PotentialTerm>),
    Tabulated {
        #[serde(with = "crate::complex_serde::vec")]
        tabulated: Vec<Complex64>,
    },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self::zero()
    }
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self::Powers(Vec::new())
    }

    pub fn power(coef: Complex64, power: f64) -> Self {
        Self::Powers(vec![PotentialTerm { coef, power }])
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Powers(terms) => terms.iter().all(|t| t.coef == Complex64::new(0.0, 0.0)),
            Self::Tabulated { tabulated } => tabulated.iter().all(|v| *v == Complex64::new(0.0, 0.0)),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Self::Powers(terms) => terms.iter().all(|t| t.coef.im == 0.0),
            Self::Tabulated { tabulated } => tabulated.iter().all(|v| v.im == 0.0),
        }
    }

    /// Requires `Re V >= 0` and finite data.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Powers(terms) => {
                for t in terms {
                    if !(t.coef.re.is_finite() && t.coef.im.is_finite() && t.power.is_finite()) {
                        return Err(Error::InvalidParameter("potential term is not finite".into()));
                    }
                    if t.coef.re < 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "potential needs Re a_k >= 0, got a = {} for power {}",
                            t.coef, t.power
                        )));
                    }
                }
            }
            Self::Tabulated { tabulated } => {
                if let Some(j) = tabulated.iter().position(|v| !(v.re >= 0.0 && v.im.is_finite())) {
                    return Err(Error::InvalidParameter(format!(
                        "tabulated potential needs finite values with Re V >= 0 (node {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Value at `y` for power-law potentials.
    pub fn eval(&self, y: f64) -> Option<Complex64> {
        match self {
            Self::Powers(terms) => Some(terms.iter().map(|t| t.coef * y.powf(t.power)).sum()),
            Self::Tabulated { .. } => None,
        }
    }

    pub fn values_on(&self, mesh: &GradedMesh) -> Result<Vec<Complex64>> {
        match self {
            Self::Powers(_) => Ok(mesh.nodes().iter().map(|&y| self.eval(y).unwrap()).collect()),
            Self::Tabulated { tabulated } => {
                if tabulated.len() != mesh.len() {
                    return Err(Error::LengthMismatch { expected: mesh.len(), got: tabulated.len() });
                }
                Ok(tabulated.clone())
            }
        }
    }

    /// Smallest exponent with a nonzero coefficient.
    pub fn min_power(&self) -> Option<f64> {
        match self {
            Self::Powers(terms) => {
                terms.iter().filter(|t| t.coef != Complex64::new(0.0, 0.0)).map(|t| t.power).reduce(f64::min)
            }
            Self::Tabulated { .. } => None,
        }
    }
}

/// Coefficients of `y^α (D_yy + (c/y) D_y) - V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub alpha: f64,
    pub c: f64,
    #[serde(default)]
    pub potential: PotentialSpec,
}

impl OperatorParams {
    pub fn new(alpha: f64, c: f64, potential: PotentialSpec) -> Result<Self> {
        let p = Self { alpha, c, potential };
        p.validate()?;
        Ok(p)
    }

    pub fn bessel(alpha: f64, c: f64) -> Result<Self> {
        Self::new(alpha, c, PotentialSpec::zero())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha must be < 2, got {}", self.alpha)));
        }
        if !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!("c must be finite, got {}", self.c)));
        }
        self.potential.validate()
    }

    /// `c + 1 - α > 0`.
    pub fn generates(&self) -> bool {
        self.c + 1.0 - self.alpha > 0.0
    }

    pub fn check_generation(&self) -> Result<()> {
        if self.generates() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("need c + 1 - alpha > 0, got c = {}, alpha = {}", self.c, self.alpha)))
        }
    }

    /// Measure exponent `c - α` of the space where the operator is symmetric.
    pub fn symmetry_exponent(&self) -> f64 {
        self.c - self.alpha
    }

    pub fn with_potential(&self, potential: PotentialSpec) -> Result<Self> {
        Self::new(self.alpha, self.c, potential)
    }
}

/// A spectral parameter off the closed negative half-axis; `√λ` is the principal root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectralRepr", into = "SpectralRepr")]
pub struct SpectralParam(Complex64);

#[derive(Serialize, Deserialize)]
struct SpectralRepr(#[serde(with = "crate::complex_serde")] Complex64);

impl TryFrom<SpectralRepr> for SpectralParam {
    type Error = Error;
    fn try_from(r: SpectralRepr) -> Result<Self> {
        SpectralParam::new(r.0)
    }
}

impl From<SpectralParam> for SpectralRepr {
    fn from(s: SpectralParam) -> Self {
        SpectralRepr(s.0)
    }
}

impl SpectralParam {
    pub fn new(lambda: Complex64) -> Result<Self> {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) || lambda.norm() == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "spectral parameter must be finite and nonzero, got {lambda}"
            )));
        }
        if lambda.im == 0.0 && lambda.re < 0.0 {
            return Err(Error::InvalidParameter(format!("spectral parameter {lambda} lies on the negative axis")));
        }
        Ok(Self(lambda))
    }

    pub fn real(lambda: f64) -> Result<Self> {
        Self::new(Complex64::new(lambda, 0.0))
    }

    /// `r e^{iθ}` with `|θ| < π`.
    pub fn polar(r: f64, theta: f64) -> Result<Self> {
        if !(theta.abs() < PI) {
            return Err(Error::InvalidParameter(format!("argument {theta} outside (-pi, pi)")));
        }
        Self::new(Complex64::from_polar(r, theta))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn sqrt(self) -> Complex64 {
        self.0.sqrt()
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c > -1.0) {
        return Err(Error::InvalidParameter(format!("Green kernel needs c > -1, got {c}")));
    }
    Ok(())
}

// Kernel with √λ already taken, positive arguments assumed.
fn kernel_from_root(s: Complex64, y: f64, rho: f64, c: f64) -> Result<Complex64> {
    let (lo, hi) = if y <= rho { (y, rho) } else { (rho, y) };
    let i = i_scaled((c - 1.0) / 2.0, s * lo);
    let k = k_scaled((1.0 - c) / 2.0, s * hi)?;
    Ok((y * rho).powf((1.0 - c) / 2.0) * i * k * (s.re * (lo - hi)).exp())
}

/// Kernel of `(λ - B_c)^{-1}` with respect to `ρ^c dρ`.
pub fn green_kernel(lambda: SpectralParam, y: f64, rho: f64, c: f64) -> Result<Complex64> {
    check_c(c)?;
    if !(y > 0.0 && rho > 0.0 && y.is_finite() && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("kernel arguments must be positive, got ({y}, {rho})")));
    }
    kernel_from_root(lambda.sqrt(), y, rho, c)
}

/// Kernel of `(λ - y^α B_c)^{-1}` with respect to `ρ^(c-α) dρ`.
pub fn operator_kernel(lambda: SpectralParam, y: f64, rho: f64, params: &OperatorParams) -> Result<Complex64> {
    params.check_generation()?;
    let r = Reduction::new(params.alpha, params.c)?;
    let s = (lambda.value() / r.factor).sqrt();
    Ok(kernel_from_root(s, y.powf(r.e), rho.powf(r.e), r.c_tilde)? / r.e)
}

struct Reduction {
    /// `1 - α/2`
    e: f64,
    factor: f64,
    c_tilde: f64,
}

impl Reduction {
    fn new(alpha: f64, c: f64) -> Result<Self> {
        let conj = conjugate_params(alpha, c, reducing_beta(alpha))?;
        Ok(Self { e: 1.0 - alpha / 2.0, factor: conj.factor, c_tilde: conj.c_tilde })
    }
}

/// `(λ - y^α B_c)^{-1} f` by product quadrature of the closed-form kernel.
///
/// The weights are exact cell integrals of the measure, the kernel is taken at the
/// nodes, and both sums are accumulated in one sweep each. When `f` does not vanish
/// at `y_max` it is extended by its last value and the tail beyond `y_max` is
/// integrated against the decaying `K` factor.
pub fn resolvent_apply(lambda: SpectralParam, f: &GridFunction, params: &OperatorParams) -> Result<GridFunction> {
    if !params.potential.is_zero() {
        return Err(Error::InvalidParameter("kernel quadrature covers V = 0 only; use the discrete operator".into()));
    }
    params.check_generation()?;
    let r = Reduction::new(params.alpha, params.c)?;
    let ct = r.c_tilde;
    let mesh = f.mesh();
    let n = mesh.len();
    let sigma: Vec<f64> = mesh.nodes().iter().map(|y| y.powf(r.e)).collect();
    let sfaces: Vec<f64> = mesh.faces().iter().map(|y| y.powf(r.e)).collect();
    let s = (lambda.value() / r.factor).sqrt();
    let a = (1.0 - ct) / 2.0;
    let nu_i = (ct - 1.0) / 2.0;
    let nu_k = (1.0 - ct) / 2.0;

    let mut ii = Vec::with_capacity(n);
    let mut kk = Vec::with_capacity(n);
    let mut pw = Vec::with_capacity(n);
    for &x in &sigma {
        ii.push(i_scaled(nu_i, s * x));
        kk.push(k_scaled(nu_k, s * x)?);
        pw.push(x.powf(a));
    }
    let g: Vec<Complex64> =
        (0..n).map(|j| f.values()[j] * pw[j] * power_integral(sfaces[j], sfaces[j + 1], ct)).collect();

    // left[i] = Σ_{j<=i} e^{Re s (σ_j - σ_i)} Ĩ_j g_j, right[i] = Σ_{j>i} e^{Re s (σ_i - σ_j)} K̃_j g_j
    let mut left = vec![Complex64::new(0.0, 0.0); n];
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        if i > 0 {
            acc *= (s.re * (sigma[i - 1] - sigma[i])).exp();
        }
        acc += ii[i] * g[i];
        left[i] = acc;
    }
    let mut right = vec![Complex64::new(0.0, 0.0); n];
    let mut acc = Complex64::new(0.0, 0.0);
    for i in (0..n - 1).rev() {
        acc = (acc + kk[i + 1] * g[i + 1]) * (s.re * (sigma[i] - sigma[i + 1])).exp();
        right[i] = acc;
    }

    let tail_f = f.values()[n - 1];
    let tail = if tail_f == Complex64::new(0.0, 0.0) {
        Complex64::new(0.0, 0.0)
    } else {
        tail_f * tail_integral(s, sfaces[n], a + ct, nu_k)?
    };
    let smax = sfaces[n];
    let values = (0..n)
        .map(|i| {
            let mut u = pw[i] * (kk[i] * left[i] + ii[i] * right[i]);
            if tail != Complex64::new(0.0, 0.0) {
                u += pw[i] * ii[i] * tail * (s.re * (sigma[i] - smax)).exp();
            }
            u / r.factor
        })
        .collect();
    GridFunction::new(mesh.clone(), values)
}

// ∫_{σmax}^∞ σ^q K̃(sσ) e^{-Re s (σ - σmax)} dσ by composite Simpson in x = Re s (σ - σmax).
fn tail_integral(s: Complex64, smax: f64, q: f64, nu: f64) -> Result<Complex64> {
    const X_END: f64 = 50.0;
    const PANELS: usize = 400;
    let h = X_END / PANELS as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..=PANELS {
        let x = k as f64 * h;
        let sig = smax + x / s.re;
        let w = if k == 0 || k == PANELS {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * sig.powf(q) * k_scaled(nu, s * sig)? * (-x).exp();
    }
    let value = sum * h / 3.0 / s.re;
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Quadrature("tail integral beyond y_max is not finite".into()));
    }
    Ok(value)
}

/// `S f(y) = ∫ t^{-1/2} (ρ / t^{1/(2-α)} ∧ 1)^{-β+α/2} exp(-|y^{1-α/2} - ρ^{1-α/2}|² / (κ t)) ρ^{-α/2} f(ρ) dρ`.
///
/// Whether the operator is bounded on a given `L^p_m` is a separate question,
/// see [`s_kernel_bounded`]; this routine evaluates regardless.
pub fn s_kernel_apply(t: f64, beta: f64, alpha: f64, f: &GridFunction, kappa: f64) -> Result<GridFunction> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time must be positive, got {t}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    if !(alpha < 2.0) {
        return Err(Error::InvalidParameter(format!("alpha must be < 2, got {alpha}")));
    }
    let mesh = f.mesh();
    let n = mesh.len();
    let e = 1.0 - alpha / 2.0;
    let s: Vec<f64> = mesh.nodes().iter().map(|y| y.powf(e)).collect();
    let w = mesh.weights(-alpha / 2.0);
    let scale = t.powf(1.0 / (2.0 - alpha));
    let expo = -beta + alpha / 2.0;
    let col: Vec<Complex64> =
        (0..n).map(|j| f.values()[j] * (mesh.nodes()[j] / scale).min(1.0).powf(expo) * w[j]).collect();
    let width = (745.0 * kappa * t).sqrt();
    let pref = t.powf(-0.5);
    let mut lo = 0;
    let mut hi = 0;
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        while s[lo] < s[i] - width {
            lo += 1;
        }
        while hi < n && s[hi] <= s[i] + width {
            hi += 1;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for j in lo..hi {
            let d = s[i] - s[j];
            acc += col[j] * (-d * d / (kappa * t)).exp();
        }
        values.push(acc * pref);
    }
    GridFunction::new(mesh.clone(), values)
}

/// `0 < (m+1)/p < 1 - α - β`, the range where the family `S` is bounded on `L^p_m`.
pub fn s_kernel_bounded(sp: &crate::weighted_space::SpaceParams, alpha: f64, beta: f64) -> bool {
    let q = sp.index();
    q > 0.0 && q < 1.0 - alpha - beta
}
