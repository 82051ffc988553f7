//! The substitutions `T_β u(y) = |β+1|^(1/p) u(y^(β+1))` and their parameter algebra.
//!
//! Only `β > -1` is supported on grid functions, where `y ↦ y^(β+1)` is increasing.

use crate::error::{Error, Result};
use crate::weighted_space::{GradedMesh, GridFunction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub beta: f64,
    pub p: f64,
}

impl TransformParams {
    pub fn new(beta: f64, p: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in [1, inf), got {p}")));
        }
        Ok(Self { beta, p })
    }

    /// Parameters of `T_β^{-1} = T_{-β/(β+1)}`.
    pub fn inverse(&self) -> Self {
        Self { beta: -self.beta / (self.beta + 1.0), p: self.p }
    }

    /// The constant `|β+1|^(1/p)`.
    pub fn scale(&self) -> f64 {
        (self.beta + 1.0).abs().powf(1.0 / self.p)
    }
}

/// `T_β^{-1}(y^α B_c) T_β = factor · y^alpha_hat · B_{c_tilde}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugationResult {
    pub factor: f64,
    pub alpha_hat: f64,
    pub c_tilde: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta == -1.0 {
        return Err(Error::InvalidParameter(format!("beta must differ from -1, got {beta}")));
    }
    Ok(())
}

pub fn conjugate_params(alpha: f64, c: f64, beta: f64) -> Result<ConjugationResult> {
    check_beta(beta)?;
    let b1 = beta + 1.0;
    Ok(ConjugationResult {
        factor: b1 * b1,
        alpha_hat: (alpha + 2.0 * beta) / b1,
        c_tilde: (c + beta * (c + 1.0 + beta)) / (b1 * b1),
    })
}

/// The `β` that removes the power `y^α`.
pub fn reducing_beta(alpha: f64) -> f64 {
    -alpha / 2.0
}

/// `T_β` maps `L^p_m̃` onto `L^p_m` with `m̃ = (m - β)/(β + 1)`; `p` plays no role.
pub fn map_weight(m: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok((m - beta) / (beta + 1.0))
}

/// `T_β u` on the pulled-back mesh. Nodal values are copied, so no interpolation is involved.
pub fn apply_transform(u: &GridFunction, params: TransformParams) -> Result<GridFunction> {
    if !(params.beta > -1.0) {
        return Err(Error::InvalidParameter(format!("apply_transform needs beta > -1, got {}", params.beta)));
    }
    let mesh = Arc::new(u.mesh().pulled_back(params.beta)?);
    let s = params.scale();
    GridFunction::new(mesh, u.values().iter().map(|v| v * s).collect())
}

/// Monotone piecewise-cubic (Fritsch-Carlson) resampling onto `target`, real and
/// imaginary parts separately. Values are held constant beyond the end nodes.
pub fn resample(u: &GridFunction, target: Arc<GradedMesh>) -> GridFunction {
    let x = u.mesh().nodes();
    let re: Vec<f64> = u.values().iter().map(|v| v.re).collect();
    let im: Vec<f64> = u.values().iter().map(|v| v.im).collect();
    let pre = MonotoneCubic::new(x, &re);
    let pim = MonotoneCubic::new(x, &im);
    let values = target.nodes().iter().map(|&t| Complex64::new(pre.eval(t), pim.eval(t))).collect();
    GridFunction::new(target, values).expect("interpolant of finite data is finite")
}

struct MonotoneCubic<'a> {
    x: &'a [f64],
    y: &'a [f64],
    d: Vec<f64>,
}

impl<'a> MonotoneCubic<'a> {
    fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        let n = x.len();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                // Weighted harmonic mean for nonuniform spacing.
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
            } else {
                let a = d[i] / delta[i];
                let b = d[i + 1] / delta[i];
                let s = a * a + b * b;
                if s > 9.0 {
                    let t = 3.0 / s.sqrt();
                    d[i] = t * a * delta[i];
                    d[i + 1] = t * b * delta[i];
                }
            }
        }
        Self { x, y, d }
    }

    fn eval(&self, t: f64) -> f64 {
        let (x, y, d) = (self.x, self.y, &self.d);
        let n = x.len();
        if t <= x[0] {
            return y[0];
        }
        if t >= x[n - 1] {
            return y[n - 1];
        }
        let i = x.partition_point(|&v| v <= t) - 1;
        let h = x[i + 1] - x[i];
        let s = (t - x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1]
    }
}
