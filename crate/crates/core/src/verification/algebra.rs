//! Exact matrix identities around `λ - y^α B + μ y^α`.
//!
//! With `D = diag(y_j^α)` and `B` the assembled `α = 0`, `V = 0` operator, the
//! multiplier is `n_λ(μ) = (λ - D B + μ D)^{-1}`.

use super::report::{BoundReport, ZERO_FLOOR};
use crate::discrete_operator::{TridiagLu, TridiagonalOperator};
use crate::error::{Error, Result};
use crate::green_resolvent::OperatorParams;
use crate::weighted_space::{norm_lpm, GridFunction, SpaceParams};
use num_complex::Complex64;

/// Identity-class tolerance.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Active-node factors `D`, `B` for a given `(α, c)` on the mesh of `f`.
struct Multiplier {
    b: TridiagonalOperator,
    d: Vec<f64>,
}

impl Multiplier {
    fn new(alpha: f64, c: f64, f: &GridFunction) -> Result<Self> {
        if !(alpha.is_finite() && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha must be < 2, got {alpha}")));
        }
        let b = TridiagonalOperator::assemble(&OperatorParams::bessel(0.0, c)?, f.mesh().clone())?;
        let d = f.mesh().nodes()[..b.size()].iter().map(|y| y.powf(alpha)).collect();
        Ok(Self { b, d })
    }

    fn n(&self) -> usize {
        self.b.size()
    }

    /// `(λ - D B + μ D)^{-1}`.
    fn lu(&self, lambda: Complex64, mu: f64) -> Result<TridiagLu> {
        let b = &self.b;
        let d = &self.d;
        let sub: Vec<_> = (1..self.n()).map(|j| -d[j] * b.sub()[j - 1]).collect();
        let sup: Vec<_> = (0..self.n() - 1).map(|j| -d[j] * b.sup()[j]).collect();
        let diag: Vec<_> = (0..self.n()).map(|j| lambda - d[j] * b.diag()[j] + mu * d[j]).collect();
        TridiagLu::factor(&sub, &diag, &sup)
    }

    /// `(μ - B + λ D^{-1})^{-1}`.
    fn lu_commuted(&self, lambda: Complex64, mu: f64) -> Result<TridiagLu> {
        let b = &self.b;
        let sub: Vec<_> = b.sub().iter().map(|v| -v).collect();
        let sup: Vec<_> = b.sup().iter().map(|v| -v).collect();
        let diag: Vec<_> = (0..self.n()).map(|j| mu - b.diag()[j] + lambda / self.d[j]).collect();
        TridiagLu::factor(&sub, &diag, &sup)
    }

    fn solve(&self, lambda: Complex64, mu: f64, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut x = x.to_vec();
        self.lu(lambda, mu)?.solve_in_place(&mut x);
        Ok(x)
    }
}

fn sup(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Relative sup-norm gap between `(λ - DB + μD)^{-1} f` and `(μ - B + λD^{-1})^{-1}(D^{-1} f)`.
pub fn check_commutation(lambda: Complex64, mu: f64, alpha: f64, c: f64, f: &GridFunction) -> Result<BoundReport> {
    if !(lambda.re > 0.0) {
        return Err(Error::InvalidParameter(format!("need Re lambda > 0, got {lambda}")));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("need mu > 0, got {mu}")));
    }
    let m = Multiplier::new(alpha, c, f)?;
    let n = m.n();
    let rhs = &f.values()[..n];
    let lhs = m.solve(lambda, mu, rhs)?;
    let mut other: Vec<_> = rhs.iter().zip(&m.d).map(|(v, d)| v / d).collect();
    m.lu_commuted(lambda, mu)?.solve_in_place(&mut other);
    let scale = sup(&lhs);
    let report = |defect: f64| {
        BoundReport::new("commutation", defect / IDENTITY_TOL, 0.0)
            .constant("defect", defect)
            .constant("threshold", IDENTITY_TOL)
            .location("alpha", alpha)
            .location("c", c)
            .location("lambda_re", lambda.re)
            .location("lambda_im", lambda.im)
            .location("mu", mu)
    };
    if scale < ZERO_FLOOR {
        return Ok(BoundReport::vacuous("commutation", 0.0));
    }
    Ok(report(sup_diff(&lhs, &other) / scale))
}

/// Sup over the sweep of `‖y^α (λ - y^α B + μ y^α)^{-1} f‖ / ‖f‖` in `L^p_m`.
/// The constant is reported; the check passes when it is finite.
pub fn commutation_boundedness(
    alpha: f64,
    c: f64,
    sp: &SpaceParams,
    f: &GridFunction,
    lambdas: &[Complex64],
    mus: &[f64],
) -> Result<BoundReport> {
    let m = Multiplier::new(alpha, c, f)?;
    let n = m.n();
    let nf = norm_lpm(f, sp)?;
    if nf < ZERO_FLOOR {
        return Ok(BoundReport::vacuous("commutation_boundedness", 0.0));
    }
    let mut worst = 0.0f64;
    let mut at = (Complex64::new(0.0, 0.0), 0.0);
    for &lambda in lambdas {
        for &mu in mus {
            let u = m.solve(lambda, mu, &f.values()[..n])?;
            let mut scaled: Vec<_> = u.iter().zip(&m.d).map(|(v, d)| v * d).collect();
            scaled.push(Complex64::new(0.0, 0.0));
            let r = norm_lpm(&GridFunction::new(f.mesh().clone(), scaled)?, sp)? / nf;
            if r > worst {
                worst = r;
                at = (lambda, mu);
            }
        }
    }
    let mut report =
        BoundReport::new("commutation_boundedness", if worst.is_finite() { 1.0 } else { f64::INFINITY }, 0.0)
            .constant("C", worst)
            .location("lambda_re", at.0.re)
            .location("lambda_im", at.0.im)
            .location("mu", at.1);
    if !sp.strong_range(alpha, c) {
        report = report.note("outside the strong range max(-alpha,0) < (m+1)/p < c+1-alpha");
    }
    Ok(report)
}

/// Below this relative step, rounding in the two solves swamps the central difference.
pub const MIN_STEP: f64 = 1e-6;

/// Step sizes used by [`check_multiplier_derivative`].
#[derive(Debug, Clone, Copy)]
pub struct DerivativeSteps {
    /// Small step for the first-derivative defect.
    pub fine: f64,
    /// Step for the order and coefficient tests; halved once for the order.
    pub coarse: f64,
}

impl Default for DerivativeSteps {
    fn default() -> Self {
        Self { fine: 1e-4, coarse: 1e-2 }
    }
}

/// Checks `D_μ n = -n D n` by central differences and the pattern
/// `D_μ^k n = a_k n (D n)^k` with `a_1 = -1`, `a_{k+1} = -(k+1) a_k` for `k = 2, 3`.
///
/// Passes when the first-derivative defect at the fine step, relative to `‖f‖_∞`, is below
/// `1e-9`, the defect ratio between the coarse step and its half lies in
/// `[3.5, 4.5]`, and `a_2`, `a_3` are recovered within 1%.
pub fn check_multiplier_derivative(
    lambda: Complex64,
    mu: f64,
    alpha: f64,
    c: f64,
    f: &GridFunction,
    steps: DerivativeSteps,
) -> Result<BoundReport> {
    let m = Multiplier::new(alpha, c, f)?;
    let n = m.n();
    let rhs = &f.values()[..n];
    let lu = m.lu(lambda, mu)?;
    // p_k = n (D n)^k f
    let mut p = vec![rhs.to_vec()];
    lu.solve_in_place(&mut p[0]);
    for k in 1..=3 {
        let mut next: Vec<_> = p[k - 1].iter().zip(&m.d).map(|(v, d)| v * d).collect();
        lu.solve_in_place(&mut next);
        p.push(next);
    }
    let exact1: Vec<_> = p[1].iter().map(|v| -v).collect();
    // Defects are measured relative to the data, not to the derivative.
    let scale1 = sup(rhs);
    if sup(&exact1) < ZERO_FLOOR {
        return Ok(BoundReport::vacuous("multiplier_derivative", 0.0));
    }
    if !(steps.fine > 0.0 && steps.coarse > 0.0 && steps.fine < mu && 2.0 * steps.coarse < mu) {
        return Err(Error::InvalidParameter("derivative steps must be positive and below mu".into()));
    }
    if steps.fine.min(steps.coarse / 2.0) < MIN_STEP * mu.max(1.0) {
        return Err(Error::InvalidParameter(format!("step below the solver noise floor {:e}", MIN_STEP * mu.max(1.0))));
    }
    let at = |s: f64| m.solve(lambda, mu + s, rhs);
    let first = |h: f64| -> Result<f64> {
        let (a, b) = (at(h)?, at(-h)?);
        let fd: Vec<_> = a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect();
        Ok(sup_diff(&fd, &exact1) / scale1)
    };
    let defect = first(steps.fine)?;
    let (dc, dh) = (first(steps.coarse)?, first(steps.coarse / 2.0)?);
    let order_ratio = dc / dh;

    // Least-squares coefficient of the k-th difference against n (Dn)^k f.
    let fit = |diff: &[Complex64], basis: &[Complex64]| {
        let num: Complex64 = diff.iter().zip(basis).map(|(d, b)| d * b.conj()).sum();
        let den: f64 = basis.iter().map(|b| b.norm_sqr()).sum();
        (num / den).re
    };
    let h = steps.coarse / 2.0;
    let (m2, m1, z0, p1, p2) = (at(-2.0 * h)?, at(-h)?, p[0].clone(), at(h)?, at(2.0 * h)?);
    let d2: Vec<_> = (0..n).map(|j| (p1[j] - 2.0 * z0[j] + m1[j]) / (h * h)).collect();
    let d3: Vec<_> = (0..n).map(|j| (p2[j] - 2.0 * p1[j] + 2.0 * m1[j] - m2[j]) / (2.0 * h * h * h)).collect();
    let a2 = fit(&d2, &p[2]);
    let a3 = fit(&d3, &p[3]);
    let expected = [-1.0, 2.0, -6.0];

    let worst = (defect / 1e-9)
        .max((order_ratio - 4.0).abs() / 0.5)
        .max((a2 / expected[1] - 1.0).abs() / 0.01)
        .max((a3 / expected[2] - 1.0).abs() / 0.01);
    Ok(BoundReport::new("multiplier_derivative", worst, 0.0)
        .constant("defect", defect)
        .constant("defect_coarse", dc)
        .constant("defect_half", dh)
        .constant("order_ratio", order_ratio)
        .constant("a1", expected[0])
        .constant("a2", a2)
        .constant("a3", a3)
        .location("lambda_re", lambda.re)
        .location("lambda_im", lambda.im)
        .location("mu", mu))
}
