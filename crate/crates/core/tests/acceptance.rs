//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each and exits nonzero if any failed.

use besselop_core::discrete_operator::{EvolutionConfig, TridiagonalOperator};
use besselop_core::green_resolvent::{green_kernel, resolvent_apply};
use besselop_core::special_fn::{bessel_i, bessel_i_scaled, bessel_k, bessel_k_scaled, BesselOrder, SectorArgument};
use besselop_core::transforms::TransformParams;
use besselop_core::verification::algebra::check_commutation;
use besselop_core::verification::conjugation::{check_conjugation, check_isometry};
use besselop_core::verification::core_test_function;
use besselop_core::verification::domain::{check_domain_splitting, check_pointwise_domain, DomainConfig};
use besselop_core::verification::kernel::{check_domination, check_kernel_bound, kernel_bound_stability};
use besselop_core::verification::rbound::{estimate_square_function, RBoundConfig};
use besselop_core::verification::samples::random_smooth;
use besselop_core::weighted_space::{default_grading, make_mesh, norm_lpm};
use besselop_core::{
    BoundReport, Complex64, GradedMesh, GridFunction, OperatorParams, PotentialSpec, SpaceParams, SpectralParam,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

type Outcome = Result<(bool, String), String>;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mesh(y_max: f64, n: usize, grading: f64) -> Arc<GradedMesh> {
    Arc::new(make_mesh(y_max, n, grading).unwrap())
}

fn summarize(reports: &[BoundReport]) -> (bool, &BoundReport) {
    let worst = reports
        .iter()
        .max_by(|a, b| a.worst_ratio.partial_cmp(&b.worst_ratio).unwrap_or(std::cmp::Ordering::Greater))
        .expect("at least one report");
    (reports.iter().all(|r| r.pass), worst)
}

fn special_functions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let nu = rng.gen_range(-0.99..=5.0);
        let x = 10f64.powf(rng.gen_range(-3.0..=50f64.log10()));
        let z = SectorArgument::real(x).map_err(|e| e.to_string())?;
        let o0 = BesselOrder::new(nu).unwrap();
        let o1 = BesselOrder::new(nu + 1.0).unwrap();
        let k0 = bessel_k_scaled(o0, z).map_err(|e| e.to_string())?;
        let k1 = bessel_k_scaled(o1, z).map_err(|e| e.to_string())?;
        let w = x * (bessel_i_scaled(o0, z) * k1 + bessel_i_scaled(o1, z) * k0);
        worst = worst.max((w - 1.0).norm());
    }
    let mut closed = 0.0f64;
    let half = BesselOrder::new(0.5).unwrap();
    let mhalf = BesselOrder::new(-0.5).unwrap();
    for z in [cx(1e-3, 0.0), cx(0.3, 0.0), cx(2.0, 1.0), cx(7.5, -3.0), cx(20.0, 0.0), cx(45.0, 10.0)] {
        let s = SectorArgument::new(z).unwrap();
        let pre = (2.0 / (PI * z)).sqrt();
        let rel = |a: Complex64, b: Complex64| (a - b).norm() / b.norm();
        closed = closed
            .max(rel(bessel_i(half, s).unwrap(), pre * z.sinh()))
            .max(rel(bessel_i(mhalf, s).unwrap(), pre * z.cosh()))
            .max(rel(bessel_k(half, s).unwrap(), (PI / (2.0 * z)).sqrt() * (-z).exp()))
            .max(rel(bessel_k(mhalf, s).unwrap(), (PI / (2.0 * z)).sqrt() * (-z).exp()));
    }
    Ok((
        worst <= 1e-9 && closed <= 1e-10,
        format!("max Wronskian defect {worst:.2e} (<= 1e-9), max closed-form error {closed:.2e} (<= 1e-10)"),
    ))
}

fn green_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let grid: Vec<f64> = (1..=20).map(|k| 0.25 * k as f64).collect();
    for lambda in [cx(1.0, 0.0), cx(0.3, 2.0), cx(4.0, -1.0)] {
        let sp = SpectralParam::new(lambda).map_err(|e| e.to_string())?;
        let s = sp.sqrt();
        for &y in &grid {
            for &rho in &grid {
                let (lo, hi) = (y.min(rho), y.max(rho));
                let c0 = (s * lo).cosh() * (-s * hi).exp() / s;
                let c2 = (s * lo).sinh() * (-s * hi).exp() / (s * y * rho);
                for (c, exact) in [(0.0, c0), (2.0, c2)] {
                    let g = green_kernel(sp, y, rho, c).map_err(|e| e.to_string())?;
                    worst = worst.max((g - exact).norm() / exact.norm());
                }
            }
        }
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:.2e} on 20x20 grid, 3 spectral values (<= 1e-10)")))
}

fn cross_validation() -> Outcome {
    let sp_err = |c: f64, lambda: f64, n: usize| -> Result<f64, String> {
        let m = mesh(20.0, n, 2.0);
        let f = GridFunction::from_real_fn(m.clone(), |y| (-(y - 1.0).powi(2)).exp()).map_err(|e| e.to_string())?;
        let p = OperatorParams::bessel(0.0, c).map_err(|e| e.to_string())?;
        let a = TridiagonalOperator::assemble(&p, m.clone()).map_err(|e| e.to_string())?;
        let u = a.solve_resolvent(cx(lambda, 0.0), &f).map_err(|e| e.to_string())?;
        let g = resolvent_apply(SpectralParam::real(lambda).unwrap(), &f, &p).map_err(|e| e.to_string())?;
        let sp = SpaceParams::new(2.0, c).unwrap();
        let diff = GridFunction::new(m, u.values().iter().zip(g.values()).map(|(x, y)| x - y).collect()).unwrap();
        Ok(norm_lpm(&diff, &sp).unwrap() / norm_lpm(&g, &sp).unwrap())
    };
    let mut ok = true;
    let (mut worst_err, mut worst_order) = (0.0f64, f64::INFINITY);
    for c in [0.5, 1.0, 2.0] {
        for lambda in [0.5, 1.0, 4.0] {
            let coarse = sp_err(c, lambda, 1000)?;
            let fine = sp_err(c, lambda, 2000)?;
            let order = (coarse / fine).log2();
            ok &= fine <= 5e-3 && order >= 1.5;
            worst_err = worst_err.max(fine);
            worst_order = worst_order.min(order);
        }
    }
    Ok((
        ok,
        format!("max relative L2_c error {worst_err:.2e} at N=2000 (<= 5e-3), min order {worst_order:.2} (>= 1.5)"),
    ))
}

fn commutation() -> Outcome {
    let m = mesh(10.0, 400, 2.0);
    let f = core_test_function(0.5, 2.0, m).map_err(|e| e.to_string())?;
    let lambdas = [cx(1.0, 0.0), Complex64::from_polar(2.0, PI / 4.0), Complex64::from_polar(3.0, 3.0 * PI / 8.0)];
    let mus = [0.5, 3.0, 10.0];
    let mut reports = Vec::new();
    for (i, alpha) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
        for (j, c) in [0.5, 1.5, 3.0].into_iter().enumerate() {
            for (k, lambda) in lambdas.iter().enumerate() {
                let mu = mus[(i + j + k) % 3];
                reports.push(check_commutation(*lambda, mu, alpha, c, &f).map_err(|e| e.to_string())?);
            }
        }
    }
    let (ok, worst) = summarize(&reports);
    Ok((ok, format!("{} combinations, max defect {:.2e} (<= 1e-10)", reports.len(), worst.constants["defect"])))
}

fn semigroup_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut min_val = f64::INFINITY;
    let mut max_contr = 0.0f64;
    let mut max_cons = 0.0f64;
    let mut domination = Vec::new();
    for (alpha, c) in [(0.0, 1.0), (1.0, 2.0), (-1.0, 0.5)] {
        // The σ = y^(1-α/2) variable sets the diffusion scale; α = 1 spreads slowly in y.
        let y_max = if alpha > 0.0 { 200.0 } else { 30.0 };
        let m = mesh(y_max, 600, default_grading(c));
        let params = OperatorParams::bessel(alpha, c).map_err(|e| e.to_string())?;
        let op = TridiagonalOperator::assemble(&params, m.clone()).map_err(|e| e.to_string())?;
        let sp = SpaceParams::new(2.0, c - alpha).unwrap();
        let nonneg = vec![
            core_test_function(1.0, 3.0, m.clone()).unwrap(),
            random_smooth(&mut rng, m.clone(), 5.0).abs(),
            random_smooth(&mut rng, m.clone(), 5.0).abs(),
        ];
        let complex: Vec<GridFunction> = (0..3).map(|_| random_smooth(&mut rng, m.clone(), 5.0)).collect();
        let one = GridFunction::from_real_fn(m.clone(), |_| 1.0).unwrap();
        for t in [0.1, 1.0] {
            let cfg = EvolutionConfig::real(t, 100).map_err(|e| e.to_string())?;
            for f in &nonneg {
                let u = op.step_semigroup(&cfg, f).map_err(|e| e.to_string())?;
                min_val = u.values().iter().fold(min_val, |a, v| a.min(v.re));
            }
            for f in nonneg.iter().chain(&complex) {
                let u = op.step_semigroup(&cfg, f).map_err(|e| e.to_string())?;
                max_contr = max_contr.max(norm_lpm(&u, &sp).unwrap() / norm_lpm(f, &sp).unwrap());
            }
            let u = op.step_semigroup(&cfg, &one).map_err(|e| e.to_string())?;
            for (y, v) in m.nodes().iter().zip(u.values()) {
                if *y <= y_max / 10.0 {
                    max_cons = max_cons.max((v - 1.0).norm());
                }
            }
            let samples: Vec<GridFunction> = nonneg.iter().chain(&complex).cloned().collect();
            for v in [
                PotentialSpec::power(cx(1.0, 0.0), alpha),
                PotentialSpec::power(cx(1.0, 0.0), 2.0),
                PotentialSpec::power(cx(0.0, 1.0), 1.0),
            ] {
                let pv = params.with_potential(v).map_err(|e| e.to_string())?;
                domination.push(check_domination(&pv, m.clone(), &cfg, &samples).map_err(|e| e.to_string())?);
            }
        }
    }
    let (dom_ok, dom) = summarize(&domination);
    let ok = min_val >= -1e-12 && max_contr <= 1.0 + 1e-10 && max_cons <= 1e-6 && dom_ok;
    Ok((
        ok,
        format!(
            "min {min_val:.2e} (>= -1e-12), contraction {max_contr:.12} (<= 1+1e-10), \
             conservation {max_cons:.2e} (<= 1e-6), domination {:.2e} (<= 1e-8)",
            dom.constants["defect"]
        ),
    ))
}

fn kernel_bound() -> Outcome {
    let mut ok = true;
    let mut worst_drift = 0.0f64;
    let mut worst_kappa = 0.0f64;
    for c in [0.5, 1.0, 2.0] {
        for t in [0.25, 1.0] {
            let report = |n: usize| -> Result<BoundReport, String> {
                let m = mesh(12.0, n, 2.0);
                let op = TridiagonalOperator::assemble(&OperatorParams::bessel(0.0, c).unwrap(), m)
                    .map_err(|e| e.to_string())?;
                let k = op.extract_kernel(&EvolutionConfig::real(t, 200).unwrap()).map_err(|e| e.to_string())?;
                check_kernel_bound(&k, t, c, 0.0).map_err(|e| e.to_string())
            };
            let (coarse, fine) = (report(200)?, report(400)?);
            let stab = kernel_bound_stability(&coarse, &fine, 0.25);
            ok &= coarse.pass && fine.pass && fine.constants["kappa"] <= 32.0 && stab.pass;
            worst_drift = worst_drift.max(stab.constants["drift"]);
            worst_kappa = worst_kappa.max(stab.constants["kappa"]);
        }
    }
    Ok((ok, format!("max kappa {worst_kappa} (<= 32), max drift of C {worst_drift:.3} (< 0.25)")))
}

fn pointwise_domain() -> Outcome {
    let cfg = DomainConfig::default();
    let mut reports = Vec::new();
    for c in [1.0, 3.0, 4.0] {
        reports.push(check_pointwise_domain(c, &PotentialSpec::zero(), &cfg).map_err(|e| e.to_string())?);
    }
    let (ok, _) = summarize(&reports);
    let detail: Vec<String> = reports
        .iter()
        .map(|r| format!("c={} C={:.3} drift={:.3}", r.worst_location["c"], r.constants["C"], r.constants["drift"]))
        .collect();
    Ok((ok, format!("{} (drift < 0.25)", detail.join(", "))))
}

fn square_function() -> Outcome {
    let mut reports = Vec::new();
    let cfg = RBoundConfig::default();
    for (alpha, c) in [(0.0, 1.0), (1.0, 2.0)] {
        let op = TridiagonalOperator::assemble(&OperatorParams::bessel(alpha, c).unwrap(), mesh(20.0, 300, 2.0))
            .map_err(|e| e.to_string())?;
        let mid = (c + 1.0 - alpha) / 2.0;
        for sp in [
            SpaceParams::new(2.0, c - alpha).unwrap(),
            SpaceParams::new(1.5, 1.5 * mid - 1.0).unwrap(),
            SpaceParams::new(3.0, 3.0 * mid - 1.0).unwrap(),
        ] {
            reports.push(estimate_square_function(&op, &sp, &cfg).map_err(|e| e.to_string())?);
        }
    }
    let (ok, _) = summarize(&reports);
    let slope = reports.iter().map(|r| r.constants["slope"]).fold(f64::NEG_INFINITY, f64::max);
    let c = reports.iter().map(|r| r.constants["C"]).fold(0.0, f64::max);
    Ok((ok, format!("{} settings, max log-slope {slope:.3} (< 0.1), max constant {c:.3}", reports.len())))
}

fn domain_splitting() -> Outcome {
    let cfg = DomainConfig { random: 20, thetas: vec![], ..DomainConfig::default() };
    let r = check_domain_splitting(1.0, 2.0, &SpaceParams::new(2.0, 1.0).unwrap(), &cfg).map_err(|e| e.to_string())?;
    Ok((
        r.pass && r.constants["C"].is_finite(),
        format!("C={:.4} drift={:.2e} (< 0.25) over 20 right-hand sides", r.constants["C"], r.constants["drift"]),
    ))
}

fn transform_suite() -> Outcome {
    const QUAD_TOL: f64 = 1e-12;
    let m = mesh(6.0, 500, 2.0);
    let u = GridFunction::from_real_fn(m, |y| (-y * y).exp() * (1.0 + y)).unwrap();
    let mut reports = Vec::new();
    for beta in [-0.5, 1.0] {
        for (p, wm) in [(2.0, 1.0), (3.0, 0.5)] {
            reports.push(
                check_isometry(&u, TransformParams::new(beta, p).unwrap(), wm, QUAD_TOL).map_err(|e| e.to_string())?,
            );
        }
    }
    let (iso_ok, iso) = summarize(&reports);
    let gaussian = |x: f64| (-((x - 1.5) / 0.3).powi(2)).exp();
    let mut orders = Vec::new();
    let mut conj_ok = true;
    for (alpha, beta) in [(1.0, -0.5), (-2.0, 1.0)] {
        let r = check_conjugation(alpha, 1.0, beta, gaussian, (0.2, 3.0), 100).map_err(|e| e.to_string())?;
        conj_ok &= r.pass;
        orders.push(r.constants["order"]);
    }
    Ok((
        iso_ok && conj_ok,
        format!(
            "isometry defect {:.2e} (<= {QUAD_TOL:e}), conjugation orders {:.2}, {:.2} (>= 1)",
            iso.constants["defect"], orders[0], orders[1]
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("special functions", special_functions),
        ("Green kernel oracle", green_oracle),
        ("solver/kernel cross-validation", cross_validation),
        ("commutation identity", commutation),
        ("semigroup structure", semigroup_structure),
        ("kernel bound", kernel_bound),
        ("pointwise domain estimates", pointwise_domain),
        ("square-function stability", square_function),
        ("domain splitting", domain_splitting),
        ("transform suite", transform_suite),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {}  {}  [{:.1}s]",
            k + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
