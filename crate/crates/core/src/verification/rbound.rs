//! Square-function estimates of R-bounds for `{λ(λ - L)^{-1}}` over a sector.

use super::kernel::UNIFORMITY_NOTE;
use super::report::{BoundReport, ZERO_FLOOR};
use super::samples::FamilySample;
use crate::discrete_operator::TridiagonalOperator;
use crate::error::{Error, Result};
use crate::weighted_space::{norm_lpm, GridFunction, SpaceParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest log-log slope of the constant against family size that still passes.
pub const SLOPE_LIMIT: f64 = 0.1;

/// `‖(Σ|λ_i(λ_i - L)^{-1} f_i|²)^{1/2}‖ / ‖(Σ|f_i|²)^{1/2}‖` in `L^p_m`, where `L` is
/// the assembled operator.
pub fn square_function_ratio(family: &FamilySample, sp: &SpaceParams, op: &TridiagonalOperator) -> Result<f64> {
    let mesh = op.mesh().clone();
    let n = mesh.len();
    let mut out = vec![0.0; n];
    let mut inp = vec![0.0; n];
    for (lambda, f) in family.lambdas.iter().zip(&family.functions) {
        let u = op.solve_resolvent(*lambda, f)?;
        for j in 0..n {
            out[j] += (lambda * u.values()[j]).norm_sqr();
            inp[j] += f.values()[j].norm_sqr();
        }
    }
    let sq = |v: Vec<f64>| GridFunction::from_real(mesh.clone(), v.into_iter().map(f64::sqrt).collect());
    let den = norm_lpm(&sq(inp)?, sp)?;
    if den < ZERO_FLOOR {
        return Err(Error::InvalidParameter("family has zero square function".into()));
    }
    Ok(norm_lpm(&sq(out)?, sp)? / den)
}

/// Sampling plan for [`estimate_square_function`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RBoundConfig {
    pub seed: u64,
    pub sizes: Vec<usize>,
    /// Random families drawn per size.
    pub draws: usize,
    pub phi: f64,
    pub delta: f64,
}

impl Default for RBoundConfig {
    fn default() -> Self {
        Self { seed: 11, sizes: vec![2, 4, 8, 16], draws: 20, phi: PI / 8.0, delta: PI / 32.0 }
    }
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// For each family size, the maximum square-function ratio over random draws
/// from the sector `|arg λ| < π/2 + φ - δ`. Passes when the slope of
/// `log max` against `log size` is below [`SLOPE_LIMIT`].
pub fn estimate_square_function(op: &TridiagonalOperator, sp: &SpaceParams, cfg: &RBoundConfig) -> Result<BoundReport> {
    if cfg.sizes.len() < 2 || cfg.sizes.contains(&0) || cfg.draws == 0 {
        return Err(Error::InvalidParameter("need at least two positive family sizes and one draw".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut maxima = Vec::with_capacity(cfg.sizes.len());
    for &k in &cfg.sizes {
        let mut best = 0.0f64;
        for _ in 0..cfg.draws {
            let fam = FamilySample::sector(&mut rng, op.mesh(), k, cfg.phi, cfg.delta)?;
            best = best.max(square_function_ratio(&fam, sp, op)?);
        }
        maxima.push(best);
    }
    let lx: Vec<f64> = cfg.sizes.iter().map(|&k| (k as f64).ln()).collect();
    let ly: Vec<f64> = maxima.iter().map(|m| m.ln()).collect();
    let s = slope(&lx, &ly);
    let params = op.params();
    let mut report = BoundReport::new("square_function", s.max(0.0) / SLOPE_LIMIT, 0.0)
        .constant("C", maxima.iter().cloned().fold(0.0, f64::max))
        .constant("slope", s)
        .location("p", sp.p)
        .location("m", sp.m)
        .location("phi", cfg.phi)
        .seed(cfg.seed);
    for (k, m) in cfg.sizes.iter().zip(&maxima) {
        report = report.constant(format!("C_size{k}"), *m);
    }
    if !params.potential.is_zero() {
        report = report.note(UNIFORMITY_NOTE);
    }
    if !sp.generation_range(params.alpha, params.c) {
        report = report.note("outside the generation range 0 < (m+1)/p < c+1-alpha");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green_resolvent::OperatorParams;
    use crate::verification::samples::random_smooth;
    use crate::weighted_space::make_mesh;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn op(alpha: f64, c: f64) -> TridiagonalOperator {
        let mesh = Arc::new(make_mesh(20.0, 200, 2.0).unwrap());
        TridiagonalOperator::assemble(&OperatorParams::bessel(alpha, c).unwrap(), mesh).unwrap()
    }

    #[test]
    fn single_and_repeated_terms() {
        let op = op(0.0, 1.0);
        let sp = SpaceParams::new(2.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_smooth(&mut rng, op.mesh().clone(), 5.0);
        let one = Complex64::new(1.0, 0.0);
        let single = square_function_ratio(&FamilySample::new(vec![one], vec![f.clone()]).unwrap(), &sp, &op).unwrap();
        let u = op.solve_resolvent(one, &f).unwrap();
        let direct = norm_lpm(&u, &sp).unwrap() / norm_lpm(&f, &sp).unwrap();
        assert!((single - direct).abs() < 1e-14);
        // Self-adjoint and dissipative in L²_c, so |λ| ‖(λ - L)^{-1}‖ <= 1 for λ > 0.
        assert!(single <= 1.0);
        let lam = Complex64::new(0.3, 2.0);
        let one_term =
            square_function_ratio(&FamilySample::new(vec![lam], vec![f.clone()]).unwrap(), &sp, &op).unwrap();
        let four = FamilySample::new(vec![lam; 4], vec![f; 4]).unwrap();
        assert!((square_function_ratio(&four, &sp, &op).unwrap() - one_term).abs() < 1e-13);
    }

    #[test]
    fn hilbert_case_is_stable() {
        let op = op(1.0, 2.0);
        let sp = SpaceParams::new(2.0, 1.0).unwrap();
        let cfg = RBoundConfig { draws: 5, ..RBoundConfig::default() };
        let r = estimate_square_function(&op, &sp, &cfg).unwrap();
        assert!(r.pass, "{r:?}");
        let again = estimate_square_function(&op, &sp, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn rejects_degenerate_plans() {
        let op = op(0.0, 1.0);
        let sp = SpaceParams::new(2.0, 1.0).unwrap();
        let cfg = RBoundConfig { sizes: vec![4], ..RBoundConfig::default() };
        assert!(estimate_square_function(&op, &sp, &cfg).is_err());
    }
}
