//! Domain estimates for `B - V` and `y^α B`, each compared across one mesh refinement.

use super::report::{BoundReport, ZERO_FLOOR};
use super::samples::{random_smooth, smoothstep_down};
use crate::discrete_operator::TridiagonalOperator;
use crate::error::{Error, Result};
use crate::green_resolvent::{OperatorParams, PotentialSpec};
use crate::weighted_space::{default_grading, make_mesh, norm_lpm, GradedMesh, GridFunction, SpaceParams};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Allowed relative drift of a fitted constant between `N` and `2N` nodes.
pub const REFINEMENT_DRIFT: f64 = 0.25;

/// Mesh and sample configuration shared by the domain checkers.
#[derive(Debug, Clone)]
pub struct DomainConfig {
    pub y_max: f64,
    /// Coarse node count; the fine mesh has twice as many.
    pub n: usize,
    pub seed: u64,
    /// Number of random bounded right-hand sides.
    pub random: usize,
    /// Fractions of the critical singularity used for the singular samples.
    pub thetas: Vec<f64>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { y_max: 20.0, n: 400, seed: 7, random: 8, thetas: vec![0.5, 0.8, 0.9] }
    }
}

/// The weight `w(y)` for `y < 1`: 1 when `c < 3`, `1 + |log y|^(1/2)` when `c = 3`,
/// `y^((3-c)/2)` when `c > 3`. The additive 1 at `c = 3` keeps `w` away from 0 near `y = 1`.
pub fn pointwise_weight(c: f64, y: f64) -> f64 {
    if c < 3.0 {
        1.0
    } else if c == 3.0 {
        1.0 + (-y.ln()).max(0.0).sqrt()
    } else {
        y.powf((3.0 - c) / 2.0)
    }
}

/// Functions that sit in the domain with the critical growth at 0, scaled by `theta < 1`:
/// `y^(-θ(c-3)/2)` for `c > 3`, `|log y|^(θ/2)` for `c = 3`. None for `c < 3`,
/// where domain functions are bounded.
fn singular_target(c: f64, theta: f64) -> Option<impl Fn(f64) -> f64> {
    if c < 3.0 {
        return None;
    }
    Some(move |y: f64| {
        let cut = smoothstep_down(0.5, 0.9, y);
        if cut == 0.0 {
            return 0.0;
        }
        let core = if c == 3.0 { (-y.ln()).powf(theta / 2.0) } else { y.powf(-theta * (c - 3.0) / 2.0) };
        core * cut
    })
}

fn drift(coarse: f64, fine: f64) -> f64 {
    (coarse - fine).abs() / fine.abs().max(ZERO_FLOOR)
}

fn level_mesh(cfg: &DomainConfig, c: f64, n: usize) -> Result<Arc<GradedMesh>> {
    Ok(Arc::new(make_mesh(cfg.y_max, n, default_grading(c))?))
}

/// Right-hand sides on `mesh`: random bounded ones, then `f = (1 - A)u` for each
/// singular target `u`.
fn samples(op: &TridiagonalOperator, cfg: &DomainConfig, c: f64) -> Result<Vec<GridFunction>> {
    let mesh = op.mesh().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out: Vec<GridFunction> =
        (0..cfg.random).map(|_| random_smooth(&mut rng, mesh.clone(), 5.0_f64.min(cfg.y_max / 2.0))).collect();
    for &theta in &cfg.thetas {
        if let Some(target) = singular_target(c, theta) {
            let u = GridFunction::from_real_fn(mesh.clone(), target)?;
            let n = op.size();
            let au = op.apply_active(&u.values()[..n]);
            let mut f: Vec<Complex64> = u.values()[..n].iter().zip(&au).map(|(u, a)| u - a).collect();
            f.push(Complex64::new(0.0, 0.0));
            out.push(GridFunction::new(mesh.clone(), f)?);
        }
    }
    Ok(out)
}

fn pointwise_constant(c: f64, potential: &PotentialSpec, cfg: &DomainConfig, n: usize) -> Result<(f64, f64, usize)> {
    let op = TridiagonalOperator::assemble(&OperatorParams::new(0.0, c, potential.clone())?, level_mesh(cfg, c, n)?)?;
    let sp = SpaceParams::new(2.0, c)?;
    let one = Complex64::new(1.0, 0.0);
    let mut worst = (0.0f64, f64::NAN, 0usize);
    for (k, f) in samples(&op, cfg, c)?.iter().enumerate() {
        let u = op.solve_resolvent(one, f)?;
        // (B - V)u = u - f
        let bu = GridFunction::new(u.mesh().clone(), u.values().iter().zip(f.values()).map(|(u, f)| u - f).collect())?;
        let denom = norm_lpm(&u, &sp)? + norm_lpm(&bu, &sp)?;
        if denom < ZERO_FLOOR {
            continue;
        }
        for (y, v) in op.mesh().nodes().iter().zip(u.values()).take_while(|(y, _)| **y < 1.0) {
            let r = v.norm() / (pointwise_weight(c, *y) * denom);
            if r > worst.0 {
                worst = (r, *y, k);
            }
        }
    }
    Ok(worst)
}

/// `sup_{y<1} |u(y)| / (w(y) (‖u‖ + ‖(B-V)u‖))` in `L²_c` with `u = (1 - B + V)^{-1} f`,
/// over random bounded `f` and singular domain functions. Passes when the
/// constant is finite and drifts by less than 25% from `N` to `2N` nodes.
pub fn check_pointwise_domain(c: f64, potential: &PotentialSpec, cfg: &DomainConfig) -> Result<BoundReport> {
    if !(c + 1.0 > 0.0) {
        return Err(Error::InvalidParameter(format!("need c + 1 > 0, got c = {c}")));
    }
    let coarse = pointwise_constant(c, potential, cfg, cfg.n)?;
    let fine = pointwise_constant(c, potential, cfg, 2 * cfg.n)?;
    if fine.0 == 0.0 {
        return Ok(BoundReport::vacuous("pointwise_domain", REFINEMENT_DRIFT).seed(cfg.seed));
    }
    let d = drift(coarse.0, fine.0);
    Ok(BoundReport::new("pointwise_domain", d / REFINEMENT_DRIFT, 0.0)
        .constant("C", fine.0)
        .constant("C_coarse", coarse.0)
        .constant("drift", d)
        .location("c", c)
        .location("y", fine.1)
        .location("sample", fine.2 as f64)
        .seed(cfg.seed))
}

struct SplitLevel {
    ratio: f64,
    sample: usize,
    /// Largest `‖y^α u‖` and `‖y^α B u‖` seen.
    mult_norm: f64,
    op_norm: f64,
}

fn splitting_constant(alpha: f64, c: f64, sp: &SpaceParams, cfg: &DomainConfig, n: usize) -> Result<SplitLevel> {
    let params = OperatorParams::new(alpha, c, PotentialSpec::power(Complex64::new(1.0, 0.0), alpha))?;
    let op = TridiagonalOperator::assemble(&params, level_mesh(cfg, c, n)?)?;
    let mesh = op.mesh().clone();
    let m = op.size();
    let ya: Vec<f64> = mesh.nodes()[..m].iter().map(|y| y.powf(alpha)).collect();
    let one = Complex64::new(1.0, 0.0);
    let norm = |v: Vec<Complex64>| -> Result<f64> {
        let mut v = v;
        v.push(Complex64::new(0.0, 0.0));
        norm_lpm(&GridFunction::new(mesh.clone(), v)?, sp)
    };
    let mut level = SplitLevel { ratio: 0.0, sample: 0, mult_norm: 0.0, op_norm: 0.0 };
    for (k, f) in samples(&op, cfg, c)?.iter().enumerate() {
        let u = op.solve_resolvent(one, f)?;
        let u = &u.values()[..m];
        // A = y^α B - y^α, so y^α B u = A u + y^α u.
        let au = op.apply_active(u);
        let yau: Vec<Complex64> = u.iter().zip(&ya).map(|(u, w)| u * w).collect();
        let yabu: Vec<Complex64> = au.iter().zip(&yau).map(|(a, b)| a + b).collect();
        let n_mult = norm(yau)?;
        let n_op = norm(yabu)?;
        let denom = norm(au)? + norm(u.to_vec())?;
        if denom < ZERO_FLOOR {
            continue;
        }
        level.mult_norm = level.mult_norm.max(n_mult);
        level.op_norm = level.op_norm.max(n_op);
        let r = (n_mult + n_op) / denom;
        if r > level.ratio {
            level.ratio = r;
            level.sample = k;
        }
    }
    Ok(level)
}

/// `(‖y^α u‖ + ‖y^α B u‖) / (‖(y^α B - y^α) u‖ + ‖u‖)` in `L^p_m` with
/// `u = (1 - y^α B + y^α)^{-1} f`, maximized over random `f`. Passes when the
/// constant is finite and drifts by less than 25% from `N` to `2N` nodes.
pub fn check_domain_splitting(alpha: f64, c: f64, sp: &SpaceParams, cfg: &DomainConfig) -> Result<BoundReport> {
    let coarse = splitting_constant(alpha, c, sp, cfg, cfg.n)?;
    let fine = splitting_constant(alpha, c, sp, cfg, 2 * cfg.n)?;
    if fine.ratio == 0.0 {
        return Ok(BoundReport::vacuous("domain_splitting", REFINEMENT_DRIFT).seed(cfg.seed));
    }
    let d = drift(coarse.ratio, fine.ratio);
    let mut report = BoundReport::new("domain_splitting", d / REFINEMENT_DRIFT, 0.0)
        .constant("C", fine.ratio)
        .constant("C_coarse", coarse.ratio)
        .constant("drift", d)
        .constant("max_norm_multiplication", fine.mult_norm)
        .constant("max_norm_operator", fine.op_norm)
        .location("alpha", alpha)
        .location("c", c)
        .location("p", sp.p)
        .location("m", sp.m)
        .location("sample", fine.sample as f64)
        .seed(cfg.seed);
    if !sp.strong_range(alpha, c) {
        report = report.note("outside the strong range max(-alpha,0) < (m+1)/p < c+1-alpha");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_by_regime() {
        assert_eq!(pointwise_weight(1.0, 1e-6), 1.0);
        assert!((pointwise_weight(4.0, 0.25) - 2.0).abs() < 1e-15);
        assert!((pointwise_weight(3.0, (-4.0f64).exp()) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pointwise_regimes_are_stable() {
        let cfg = DomainConfig { n: 200, random: 4, ..DomainConfig::default() };
        for c in [1.0, 3.0, 4.0] {
            let r = check_pointwise_domain(c, &PotentialSpec::zero(), &cfg).unwrap();
            assert!(r.pass, "c = {c}: {r:?}");
        }
    }

    #[test]
    fn wrong_weight_is_detected() {
        // Against w = 1 the singular samples at c = 4 grow without bound.
        let cfg = DomainConfig { n: 200, random: 0, ..DomainConfig::default() };
        let bounded = pointwise_constant(4.0, &PotentialSpec::zero(), &cfg, 200).unwrap();
        let op = TridiagonalOperator::assemble(
            &OperatorParams::bessel(0.0, 4.0).unwrap(),
            level_mesh(&cfg, 4.0, 200).unwrap(),
        )
        .unwrap();
        let f = samples(&op, &cfg, 4.0).unwrap();
        let u = op.solve_resolvent(Complex64::new(1.0, 0.0), &f[2]).unwrap();
        let near0 = u.values()[0].norm();
        assert!(near0 > 100.0 * bounded.0, "{near0} vs {}", bounded.0);
    }

    #[test]
    fn splitting_alpha_zero_bounded_by_two() {
        let cfg = DomainConfig { n: 200, random: 4, ..DomainConfig::default() };
        let r = check_domain_splitting(0.0, 1.0, &SpaceParams::new(2.0, 1.0).unwrap(), &cfg).unwrap();
        assert!(r.constants["C"] <= 2.0 + 1e-12, "{r:?}");
    }

    #[test]
    fn splitting_alpha_one_stable() {
        let cfg = DomainConfig { n: 200, random: 6, ..DomainConfig::default() };
        let r = check_domain_splitting(1.0, 2.0, &SpaceParams::new(2.0, 1.0).unwrap(), &cfg).unwrap();
        assert!(r.pass && r.constants["max_norm_operator"].is_finite(), "{r:?}");
    }
}
