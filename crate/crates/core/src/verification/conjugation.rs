//! Finite-difference checks of `T_β` as an isometry and as a conjugation.

use super::report::{BoundReport, ZERO_FLOOR};
use crate::error::{Error, Result};
use crate::transforms::{apply_transform, conjugate_params, map_weight, TransformParams};
use crate::weighted_space::{norm_lpm, GridFunction, SpaceParams};

/// Coarsest grid accepted by [`check_conjugation`].
pub const MIN_INTERVALS: usize = 16;

/// Refinement levels used by [`check_conjugation`]: `n`, `2n`, `4n`.
pub const LEVELS: usize = 3;

/// `y^α (u'' + (c/y) u')` at the interior points of `x`, with three-point
/// nonuniform differences.
fn apply_bessel(x: &[f64], u: &[f64], alpha: f64, c: f64) -> Vec<f64> {
    (1..x.len() - 1)
        .map(|j| {
            let (hm, hp) = (x[j] - x[j - 1], x[j + 1] - x[j]);
            let d2 = 2.0 * ((u[j + 1] - u[j]) / hp - (u[j] - u[j - 1]) / hm) / (hp + hm);
            let d1 = (hm * hm * u[j + 1] - hp * hp * u[j - 1] + (hp * hp - hm * hm) * u[j]) / (hp * hm * (hp + hm));
            x[j].powf(alpha) * (d2 + c / x[j] * d1)
        })
        .collect()
}

/// Sup-norm gap between `T_β^{-1}(y^α B_c)T_β u` and `(β+1)² x^α̂ B_c̃ u` on `n`
/// uniform intervals of `[a, b]`.
fn conjugation_defect(
    alpha: f64,
    c: f64,
    beta: f64,
    u: &impl Fn(f64) -> f64,
    (a, b): (f64, f64),
    n: usize,
) -> Result<(f64, f64)> {
    let conj = conjugate_params(alpha, c, beta)?;
    let x: Vec<f64> = (0..=n).map(|j| a + (b - a) * j as f64 / n as f64).collect();
    let y: Vec<f64> = x.iter().map(|x| x.powf(1.0 / (beta + 1.0))).collect();
    let ux: Vec<f64> = x.iter().map(|&x| u(x)).collect();
    // T_β u at y_j is u(x_j); the constant |β+1|^(1/p) cancels.
    let lhs = apply_bessel(&y, &ux, alpha, c);
    let rhs = apply_bessel(&x, &ux, conj.alpha_hat, conj.c_tilde);
    let mut defect = 0.0f64;
    let mut scale = 0.0f64;
    for (l, r) in lhs.iter().zip(&rhs) {
        let r = conj.factor * r;
        defect = defect.max((l - r).abs());
        scale = scale.max(r.abs());
    }
    if !defect.is_finite() {
        return Err(Error::InvalidParameter(
            "conjugation defect is not finite; check that u is finite on the support".into(),
        ));
    }
    Ok((defect, scale))
}

/// Refinement study of the conjugation identity. `u` should be smooth and
/// negligible outside `support`, which must lie in `(0, ∞)`.
///
/// Passes when the defect decays at observed order at least 1 over each
/// halving of `h`; `worst_ratio = 1 / min order`. A defect that is zero on all
/// levels (as for `β = 0`) passes with ratio 0.
pub fn check_conjugation(
    alpha: f64,
    c: f64,
    beta: f64,
    u: impl Fn(f64) -> f64,
    support: (f64, f64),
    n: usize,
) -> Result<BoundReport> {
    if !(beta > -1.0) {
        return Err(Error::InvalidParameter(format!("need beta > -1, got {beta}")));
    }
    if !(support.0 > 0.0 && support.0 < support.1 && support.1.is_finite()) {
        return Err(Error::InvalidParameter(format!("support must satisfy 0 < a < b, got {support:?}")));
    }
    if n < MIN_INTERVALS {
        return Err(Error::InvalidParameter(format!(
            "mesh too coarse to certify a trend: {n} < {MIN_INTERVALS} intervals"
        )));
    }
    let levels: Vec<(f64, f64)> =
        (0..LEVELS).map(|k| conjugation_defect(alpha, c, beta, &u, support, n << k)).collect::<Result<_>>()?;
    let conj = conjugate_params(alpha, c, beta)?;
    let report_base = |ratio: f64| {
        let mut r = BoundReport::new("conjugation", ratio, 0.0)
            .constant("factor", conj.factor)
            .constant("alpha_hat", conj.alpha_hat)
            .constant("c_tilde", conj.c_tilde)
            .location("alpha", alpha)
            .location("c", c)
            .location("beta", beta);
        for (k, (d, _)) in levels.iter().enumerate() {
            r = r.constant(format!("defect_n{}", n << k), *d);
        }
        r
    };
    let scale = levels.iter().fold(0.0f64, |m, l| m.max(l.1));
    if levels.iter().all(|l| l.0 <= ZERO_FLOOR * scale.max(1.0)) {
        return Ok(report_base(0.0));
    }
    let order = levels.windows(2).map(|w| (w[0].0 / w[1].0).log2()).fold(f64::INFINITY, f64::min);
    let ratio = if order > 0.0 { 1.0 / order } else { f64::INFINITY };
    Ok(report_base(ratio).constant("order", order))
}

/// `| ‖T_β u‖_{L^p_m} - ‖u‖_{L^p_m̃} |` relative to `‖u‖`, with `m̃ = map_weight(m, β)`.
pub fn check_isometry(u: &GridFunction, params: TransformParams, m: f64, tolerance: f64) -> Result<BoundReport> {
    let mt = map_weight(m, params.beta)?;
    let lhs = norm_lpm(&apply_transform(u, params)?, &SpaceParams::new(params.p, m)?)?;
    let rhs = norm_lpm(u, &SpaceParams::new(params.p, mt)?)?;
    if rhs < ZERO_FLOOR {
        return Ok(BoundReport::vacuous("isometry", tolerance));
    }
    let defect = (lhs - rhs).abs() / rhs;
    Ok(BoundReport::new("isometry", defect / tolerance, 0.0)
        .constant("defect", defect)
        .constant("threshold", tolerance)
        .constant("norm", rhs)
        .location("beta", params.beta)
        .location("p", params.p)
        .location("m", m))
}
