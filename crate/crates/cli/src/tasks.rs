use std::f64::consts::PI;
use std::sync::Arc;

use besselop_core::discrete_operator::{EvolutionConfig, TridiagonalOperator};
use besselop_core::green_resolvent::{operator_kernel, resolvent_apply};
use besselop_core::special_fn::{
    bessel_derivatives, bessel_i, bessel_i_scaled, bessel_k, bessel_k_scaled, BesselOrder, SectorArgument,
};
use besselop_core::transforms::{conjugate_params, map_weight, reducing_beta, TransformParams};
use besselop_core::verification::algebra::{
    check_commutation, check_multiplier_derivative, commutation_boundedness, DerivativeSteps,
};
use besselop_core::verification::conjugation::{check_conjugation, check_isometry};
use besselop_core::verification::core_test_function;
use besselop_core::verification::domain::{
    check_domain_splitting, check_pointwise_domain, DomainConfig, REFINEMENT_DRIFT,
};
use besselop_core::verification::kernel::{
    check_domination, check_kernel_bound, check_kernel_domination, kernel_bound_stability,
};
use besselop_core::verification::rbound::{estimate_square_function, RBoundConfig};
use besselop_core::verification::samples::random_smooth;
use besselop_core::weighted_space::{norm_lpm, MeshDescriptor};
use besselop_core::{
    BoundReport, Complex64, GradedMesh, GridFunction, OperatorParams, PotentialSpec, SpaceParams, SpectralParam,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Rhs, Task};
use crate::error::CliError;

/// Backward-error threshold for the direct solves.
const SOLVE_TOL: f64 = 1e-10;

/// Range predicates for the configured operator and space.
#[derive(Debug, Clone, Serialize)]
pub struct Predicates {
    pub generates: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generation_range: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strong_range: Option<bool>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub reports: Vec<BoundReport>,
    pub results: Value,
    pub tables: Vec<(String, Vec<u8>)>,
    pub warnings: Vec<String>,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn predicates(cfg: &ExperimentConfig) -> Option<Predicates> {
    let op = cfg.operator.as_ref()?;
    let sp = cfg.space.as_ref();
    Some(Predicates {
        generates: op.generates(),
        index: sp.map(|s| s.index()),
        generation_range: sp.map(|s| s.generation_range(op.alpha, op.c)),
        strong_range: sp.map(|s| s.strong_range(op.alpha, op.c)),
    })
}

/// Range checks: errors for solve tasks, warnings otherwise.
fn check_ranges(cfg: &ExperimentConfig, warnings: &mut Vec<String>) -> Result<(), CliError> {
    let Some(op) = &cfg.operator else { return Ok(()) };
    let mut problems = Vec::new();
    if let Err(e) = op.check_generation() {
        problems.push(e.to_string());
    }
    if let Some(sp) = &cfg.space {
        if let Err(e) = sp.check_generation_range(op.alpha, op.c) {
            problems.push(e.to_string());
        }
    }
    if cfg.task.task.is_solve() {
        if let Some(p) = problems.into_iter().next() {
            return Err(CliError::Config(p));
        }
    } else {
        warnings.extend(problems);
    }
    Ok(())
}

fn build_mesh(desc: MeshDescriptor) -> Result<Arc<GradedMesh>, CliError> {
    Ok(Arc::new(GradedMesh::from_descriptor(desc).map_err(config_err)?))
}

fn rhs_function(rhs: &Rhs, mesh: Arc<GradedMesh>) -> Result<GridFunction, CliError> {
    match *rhs {
        Rhs::Gaussian { center, width } => {
            if !(width > 0.0) {
                return Err(CliError::Config(format!("gaussian width must be positive, got {width}")));
            }
            Ok(GridFunction::from_real_fn(mesh, |y| (-((y - center) / width).powi(2)).exp()).map_err(config_err)?)
        }
        Rhs::Plateau { plateau_end, support_end } => {
            core_test_function(plateau_end, support_end, mesh).map_err(config_err)
        }
        Rhs::Constant { value } => Ok(GridFunction::from_real_fn(mesh, |_| value).map_err(config_err)?),
    }
}

/// The plateau function used by the algebraic checks, cut off before `y_max`.
fn plateau(mesh: &Arc<GradedMesh>) -> Result<GridFunction, CliError> {
    let end = 2.0f64.min(mesh.y_max());
    Ok(core_test_function(end / 4.0, end, mesh.clone())?)
}

fn bessel_row(nu: f64, z: Complex64, scaled: bool) -> Result<Vec<Complex64>, CliError> {
    let order = BesselOrder::new(nu).map_err(config_err)?;
    let arg = SectorArgument::new(z).map_err(config_err)?;
    if scaled {
        Ok(vec![bessel_i_scaled(order, arg), bessel_k_scaled(order, arg)?])
    } else {
        let (di, dk) = bessel_derivatives(order, arg)?;
        Ok(vec![bessel_i(order, arg)?, bessel_k(order, arg)?, di, dk])
    }
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Task(e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(|e| CliError::Task(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Task(e.to_string()))
}

fn no_potential(op: &OperatorParams, task: &str, warnings: &mut Vec<String>) {
    if !op.potential.is_zero() {
        warnings.push(format!("{task} ignores the potential"));
    }
}

fn strong_range_warning(cfg: &ExperimentConfig, warnings: &mut Vec<String>) {
    if let (Some(op), Some(sp)) = (&cfg.operator, &cfg.space) {
        if let Err(e) = sp.check_strong_range(op.alpha, op.c) {
            warnings.push(e.to_string());
        }
    }
}

pub fn run(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    check_ranges(cfg, &mut out.warnings)?;
    match &cfg.task.task {
        Task::Bessel { orders, args, scaled } => {
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for &nu in orders {
                for &z in args {
                    let v = bessel_row(nu, z, *scaled)?;
                    let mut row = vec![nu, z.re, z.im];
                    row.extend(v.iter().flat_map(|c| [c.re, c.im]));
                    values.push(json!({"nu": nu, "z": [z.re, z.im], "values": v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>()}));
                    rows.push(row);
                }
            }
            let header: &[&str] = if *scaled {
                &["nu", "z_re", "z_im", "i_scaled_re", "i_scaled_im", "k_scaled_re", "k_scaled_im"]
            } else {
                &["nu", "z_re", "z_im", "i_re", "i_im", "k_re", "k_im", "di_re", "di_im", "dk_re", "dk_im"]
            };
            out.tables.push(("bessel.csv".into(), csv_table(header, rows)?));
            out.results = json!({ "scaled": scaled, "values": values });
        }
        Task::TransformParams { beta } => {
            let op = cfg.operator()?;
            let conj = conjugate_params(op.alpha, op.c, *beta).map_err(config_err)?;
            let mut results = json!({
                "conjugation": conj,
                "reducing_beta": reducing_beta(op.alpha),
            });
            if let Some(sp) = cfg.space {
                results["mapped_m"] = json!(map_weight(sp.m, *beta).map_err(config_err)?);
                results["scale"] = json!(TransformParams::new(*beta, sp.p).map_err(config_err)?.scale());
            }
            out.results = results;
        }
        Task::GreenTable { lambda, y, rho } => {
            let op = cfg.operator()?;
            if !op.potential.is_zero() {
                return Err(CliError::Config("green-table needs V = 0".into()));
            }
            let sp = SpectralParam::new(*lambda).map_err(config_err)?;
            if y.iter().chain(rho).any(|v| !(*v > 0.0)) {
                return Err(CliError::Config("green-table points must be positive".into()));
            }
            let mut rows = Vec::new();
            for &a in y {
                for &b in rho {
                    let g = operator_kernel(sp, a, b, &op)?;
                    rows.push(vec![a, b, g.re, g.im]);
                }
            }
            out.tables.push(("green.csv".into(), csv_table(&["y", "rho", "value_re", "value_im"], rows)?));
            out.results = json!({ "lambda": [lambda.re, lambda.im], "points": y.len() * rho.len() });
        }
        Task::Resolve { lambda, rhs } => {
            let op = cfg.operator()?;
            let sp = SpectralParam::new(*lambda).map_err(config_err)?;
            let mesh = build_mesh(cfg.mesh(op.c))?;
            let a = TridiagonalOperator::assemble(&op, mesh.clone())?;
            out.warnings.extend(a.warnings().iter().cloned());
            let f = rhs_function(rhs, mesh)?;
            let u = a.solve_resolvent(*lambda, &f)?;
            let backward = a.residual(*lambda, &u, &f);
            out.reports.push(
                BoundReport::new("backward_error", backward / SOLVE_TOL, 0.0)
                    .constant("residual", backward)
                    .constant("threshold", SOLVE_TOL),
            );
            let mut results = json!({ "sup_norm": u.sup_norm(), "backward_error": backward });
            if let Some(space) = &cfg.space {
                results["norm_lpm"] = json!(norm_lpm(&u, space)?);
            }
            if op.potential.is_zero() {
                let g = resolvent_apply(sp, &f, &op)?;
                let l2 = SpaceParams::new(2.0, op.symmetry_exponent())?;
                let diff = GridFunction::new(
                    g.mesh().clone(),
                    u.values().iter().zip(g.values()).map(|(x, y)| x - y).collect(),
                )?;
                results["kernel_quadrature_rel_diff"] = json!(norm_lpm(&diff, &l2)? / norm_lpm(&g, &l2)?);
            }
            let mut buf = Vec::new();
            u.write_csv(&mut buf)?;
            out.tables.push(("solution.csv".into(), buf));
            out.results = results;
        }
        Task::Evolve { t, n_steps, scheme, rhs, kernel } => {
            let op = cfg.operator()?;
            let ecfg = EvolutionConfig::new(*t, *n_steps, *scheme).map_err(config_err)?;
            let mesh = build_mesh(cfg.mesh(op.c))?;
            let a = TridiagonalOperator::assemble(&op, mesh.clone())?;
            out.warnings.extend(a.warnings().iter().cloned());
            let f = rhs_function(rhs, mesh)?;
            let u = a.step_semigroup(&ecfg, &f)?;
            let l2 = SpaceParams::new(2.0, op.symmetry_exponent())?;
            let (nu, nf) = (norm_lpm(&u, &l2)?, norm_lpm(&f, &l2)?);
            if nf > 0.0 {
                let ratio = nu / nf;
                out.reports.push(
                    BoundReport::new("contractivity", ratio, 1e-10)
                        .constant("ratio", ratio)
                        .location("t_re", t.re)
                        .location("t_im", t.im),
                );
            }
            let mut buf = Vec::new();
            u.write_csv(&mut buf)?;
            out.tables.push(("solution.csv".into(), buf));
            if *kernel {
                let k = a.extract_kernel(&ecfg)?;
                let mut kb = Vec::new();
                k.write_csv(&mut kb)?;
                out.tables.push(("kernel.csv".into(), kb));
            }
            out.results = json!({ "sup_norm": u.sup_norm(), "norm_l2": nu, "scheme": scheme });
        }
        Task::VerifyKernel { t, n_steps } => {
            let op = cfg.operator()?;
            let desc = cfg.mesh(op.c);
            let ecfg = EvolutionConfig::real(*t, *n_steps).map_err(config_err)?;
            let kernel_at = |params: &OperatorParams, n: usize| -> Result<_, CliError> {
                let a = TridiagonalOperator::assemble(params, build_mesh(MeshDescriptor { n, ..desc })?)?;
                Ok(a.extract_kernel(&ecfg)?)
            };
            let coarse_k = kernel_at(&op, desc.n)?;
            let fine_k = kernel_at(&op, 2 * desc.n)?;
            let coarse = check_kernel_bound(&coarse_k, *t, op.c, op.alpha)?;
            let fine = check_kernel_bound(&fine_k, *t, op.c, op.alpha)?;
            let stab = kernel_bound_stability(&coarse, &fine, REFINEMENT_DRIFT);
            out.reports.extend([coarse, fine, stab]);
            if !op.potential.is_zero() {
                let free = kernel_at(&op.with_potential(PotentialSpec::zero())?, 2 * desc.n)?;
                out.reports.push(check_kernel_domination(&fine_k, &free)?);
            }
        }
        Task::VerifyDomination { t, n_steps, samples } => {
            let op = cfg.operator()?;
            let mesh = build_mesh(cfg.mesh(op.c))?;
            let ecfg = EvolutionConfig::real(*t, *n_steps).map_err(config_err)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut fs = vec![plateau(&mesh)?];
            fs.extend((1..*samples).map(|_| random_smooth(&mut rng, mesh.clone(), 5.0f64.min(mesh.y_max() / 2.0))));
            out.reports.push(check_domination(&op, mesh, &ecfg, &fs)?.seed(seed));
        }
        Task::VerifyConjugation { beta, support, intervals } => {
            let op = cfg.operator()?;
            if !(*beta > -1.0) {
                return Err(CliError::Config(format!("verify-conjugation needs beta > -1, got {beta}")));
            }
            let (a, b) = *support;
            let (mid, width) = ((a + b) / 2.0, (b - a) / 10.0);
            let bump = move |x: f64| (-((x - mid) / width).powi(2)).exp();
            out.reports.push(check_conjugation(op.alpha, op.c, *beta, bump, *support, *intervals).map_err(config_err)?);
            if let Some(sp) = cfg.space {
                let mesh = build_mesh(cfg.mesh(op.c))?;
                let u = GridFunction::from_real_fn(mesh, bump)?;
                out.reports.push(check_isometry(
                    &u,
                    TransformParams::new(*beta, sp.p).map_err(config_err)?,
                    sp.m,
                    1e-12,
                )?);
            }
        }
        Task::VerifyCommutation { lambda, mu } => {
            let op = cfg.operator()?;
            no_potential(&op, "verify-commutation", &mut out.warnings);
            strong_range_warning(cfg, &mut out.warnings);
            let mesh = build_mesh(cfg.mesh(op.c))?;
            let f = plateau(&mesh)?;
            out.reports.push(check_commutation(*lambda, *mu, op.alpha, op.c, &f).map_err(config_err)?);
            if let Some(sp) = &cfg.space {
                let lambdas: Vec<Complex64> = [0.1, 1.0, 10.0]
                    .iter()
                    .flat_map(|&r| [0.0, PI / 4.0, 3.0 * PI / 8.0].map(|th| Complex64::from_polar(r, th)))
                    .collect();
                out.reports.push(commutation_boundedness(op.alpha, op.c, sp, &f, &lambdas, &[0.1, 1.0, 10.0])?);
            }
        }
        Task::VerifyPointwise { random, thetas } => {
            let op = cfg.operator()?;
            if op.alpha != 0.0 {
                out.warnings.push("verify-pointwise uses alpha = 0".into());
            }
            let desc = cfg.mesh(op.c);
            let dc = DomainConfig { y_max: desc.y_max, n: desc.n, seed, random: *random, thetas: thetas.clone() };
            out.reports.push(check_pointwise_domain(op.c, &op.potential, &dc).map_err(config_err)?);
        }
        Task::VerifySplitting { random } => {
            let op = cfg.operator()?;
            let sp = cfg.space()?;
            no_potential(&op, "verify-splitting", &mut out.warnings);
            let desc = cfg.mesh(op.c);
            let dc = DomainConfig { y_max: desc.y_max, n: desc.n, seed, random: *random, thetas: vec![] };
            out.reports.push(check_domain_splitting(op.alpha, op.c, &sp, &dc)?);
        }
        Task::EstimateRbound { sizes, draws, phi, delta } => {
            let op = cfg.operator()?;
            let sp = cfg.space()?;
            let a = TridiagonalOperator::assemble(&op, build_mesh(cfg.mesh(op.c))?)?;
            let rc = RBoundConfig { seed, sizes: sizes.clone(), draws: *draws, phi: *phi, delta: *delta };
            out.reports.push(estimate_square_function(&a, &sp, &rc).map_err(config_err)?);
        }
        Task::VerifyMultiplierDerivative { lambda, mu, fine, coarse } => {
            let op = cfg.operator()?;
            no_potential(&op, "verify-multiplier-derivative", &mut out.warnings);
            strong_range_warning(cfg, &mut out.warnings);
            let mesh = build_mesh(cfg.mesh(op.c))?;
            let f = plateau(&mesh)?;
            let steps = DerivativeSteps { fine: *fine, coarse: *coarse };
            out.reports.push(check_multiplier_derivative(*lambda, *mu, op.alpha, op.c, &f, steps).map_err(config_err)?);
        }
    }
    Ok(out)
}
