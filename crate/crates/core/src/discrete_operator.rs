//! Finite-volume realization of `y^α B_c - V` on a graded mesh.
//!
//! Cell `j` carries the measure `W_j = ∫_cell y^(c-α) dy`. The flux `y^c u'` across
//! the face between nodes `j` and `j+1` is `a_j (u_{j+1} - u_j)` with
//! `a_j = 1 / ∫_{y_j}^{y_{j+1}} y^(-c) dy`, which is exact whenever the flux is
//! constant between the nodes. The flux through `y = 0` is zero and the last node
//! `y_max` carries a homogeneous Dirichlet condition, so the unknowns are the first
//! `N - 1` nodal values. The resulting matrix is symmetric with respect to `diag(W)`.

use crate::error::{Error, Result};
use crate::green_resolvent::{OperatorParams, PotentialSpec};
use crate::weighted_space::{power_integral, GradedMesh, GridFunction, MeshDescriptor};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::sync::Arc;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Smallest allowed distance of `arg t` from `±π/2`.
pub const SECTOR_MARGIN: f64 = 1e-3;

/// LU factorization of a complex tridiagonal matrix with partial pivoting.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    /// Factors the matrix with diagonals `sub` (length n-1), `diag` (n), `sup` (n-1).
    pub fn factor(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty system".into()));
        }
        if sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::LengthMismatch { expected: n - 1, got: sub.len().min(sup.len()) });
        }
        let row_scale: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = diag[i].norm();
                if i > 0 {
                    s = s.max(sub[i - 1].norm());
                }
                if i + 1 < n {
                    s = s.max(sup[i].norm());
                }
                s
            })
            .collect();
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![ZERO; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let singular = |row: usize, pivot: Complex64| Error::Singular {
            row,
            condition: if pivot.norm() > 0.0 { row_scale[row] / pivot.norm() } else { f64::INFINITY },
        };
        for i in 0..n - 1 {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() <= 1e-15 * row_scale[i] || d[i] == ZERO {
                    return Err(singular(i, d[i]));
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1].norm() <= 1e-15 * row_scale[n - 1] || d[n - 1] == ZERO {
            return Err(singular(n - 1, d[n - 1]));
        }
        Ok(Self { dl, d, du, du2, swapped })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        assert_eq!(b.len(), n, "right-hand side length");
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Backward Euler: first order, positivity preserving and contractive for every step size.
    #[default]
    BackwardEuler,
    /// Two backward Euler half-steps, then Crank-Nicolson.
    Trapezoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    #[serde(with = "crate::complex_serde")]
    pub t_final: Complex64,
    pub n_steps: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

impl EvolutionConfig {
    pub fn new(t_final: Complex64, n_steps: usize, scheme: Scheme) -> Result<Self> {
        let cfg = Self { t_final, n_steps, scheme };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn real(t: f64, n_steps: usize) -> Result<Self> {
        Self::new(Complex64::new(t, 0.0), n_steps, Scheme::BackwardEuler)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 steps, got {}", self.n_steps)));
        }
        let t = self.t_final;
        if !(t.re.is_finite() && t.im.is_finite()) || t.norm() == 0.0 {
            return Err(Error::InvalidParameter(format!("final time must be finite and nonzero, got {t}")));
        }
        if !(t.arg().abs() <= FRAC_PI_2 - SECTOR_MARGIN) {
            return Err(Error::InvalidParameter(format!(
                "final time {t} lies outside the sector |arg t| <= pi/2 - {SECTOR_MARGIN}"
            )));
        }
        Ok(())
    }
}

/// Kernel values `p(t, y_i, ρ_j)` on the active nodes, row `i`, column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub t: Complex64,
    pub nodes: Vec<f64>,
    pub data: Vec<Complex64>,
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.nodes.len() + j]
    }

    /// Long-format CSV: `y, rho, value_re, value_im`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["y", "rho", "value_re", "value_im"])?;
        let n = self.size();
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                w.write_record(&[
                    format!("{:.17e}", self.nodes[i]),
                    format!("{:.17e}", self.nodes[j]),
                    format!("{:.17e}", v.re),
                    format!("{:.17e}", v.im),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// JSON form of an assembled operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDescriptor {
    pub alpha: f64,
    pub c: f64,
    pub potential: PotentialSpec,
    pub mesh: MeshDescriptor,
}

#[derive(Debug, Clone)]
pub struct TridiagonalOperator {
    mesh: Arc<GradedMesh>,
    params: OperatorParams,
    sub: Vec<Complex64>,
    diag: Vec<Complex64>,
    sup: Vec<Complex64>,
    weights: Vec<f64>,
    warnings: Vec<String>,
}

/// `1 / ∫_{y_j}^{y_{j+1}} y^(-c) dy` for consecutive nodes.
pub fn face_coefficients(mesh: &GradedMesh, c: f64) -> Vec<f64> {
    mesh.nodes().windows(2).map(|w| 1.0 / power_integral(w[0], w[1], -c)).collect()
}

impl TridiagonalOperator {
    pub fn assemble(params: &OperatorParams, mesh: Arc<GradedMesh>) -> Result<Self> {
        params.validate()?;
        params.check_generation()?;
        let n = mesh.len() - 1;
        let a = face_coefficients(&mesh, params.c);
        let mut weights = mesh.weights(params.symmetry_exponent());
        weights.truncate(n);
        if let Some(j) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidMesh(format!("cell measure at node {j} is not positive and finite")));
        }
        let v = params.potential.values_on(&mesh)?;
        if let Some(j) = v[..n].iter().position(|x| !(x.re.is_finite() && x.im.is_finite())) {
            return Err(Error::InvalidParameter(format!("potential is not finite at node {j}")));
        }
        let mut warnings = Vec::new();
        if let Some(s) = params.potential.min_power() {
            if s <= -1.0 {
                warnings.push(format!("potential power {s} <= -1 is only meaningful under the strong range condition"));
            }
        }
        let mut sub = Vec::with_capacity(n - 1);
        let mut sup = Vec::with_capacity(n - 1);
        let mut diag = Vec::with_capacity(n);
        for j in 0..n {
            let left = if j > 0 { a[j - 1] } else { 0.0 };
            let right = a[j];
            diag.push(Complex64::new(-(left + right) / weights[j], 0.0) - v[j]);
            if j > 0 {
                sub.push(Complex64::new(left / weights[j], 0.0));
            }
            if j + 1 < n {
                sup.push(Complex64::new(right / weights[j], 0.0));
            }
        }
        Ok(Self { mesh, params: params.clone(), sub, diag, sup, weights, warnings })
    }

    pub fn mesh(&self) -> &Arc<GradedMesh> {
        &self.mesh
    }

    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    /// Number of unknowns, one less than the node count.
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn sub(&self) -> &[Complex64] {
        &self.sub
    }

    pub fn diag(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn sup(&self) -> &[Complex64] {
        &self.sup
    }

    /// Cell measures `W_j^(c-α)` of the active nodes.
    pub fn symmetry_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor {
            alpha: self.params.alpha,
            c: self.params.c,
            potential: self.params.potential.clone(),
            mesh: self.mesh.descriptor(),
        }
    }

    fn check_input(&self, f: &GridFunction) -> Result<()> {
        if !Arc::ptr_eq(f.mesh(), &self.mesh) && **f.mesh() != *self.mesh {
            return Err(Error::InvalidMesh("grid function lives on a different mesh".into()));
        }
        Ok(())
    }

    fn output(&self, mut active: Vec<Complex64>) -> Result<GridFunction> {
        active.push(ZERO);
        GridFunction::new(self.mesh.clone(), active)
    }

    /// `A x` on the active nodes.
    pub fn apply_active(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.size();
        (0..n)
            .map(|j| {
                let mut s = self.diag[j] * x[j];
                if j > 0 {
                    s += self.sub[j - 1] * x[j - 1];
                }
                if j + 1 < n {
                    s += self.sup[j] * x[j + 1];
                }
                s
            })
            .collect()
    }

    /// `A u`, where the boundary value of `u` is ignored (treated as zero).
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check_input(u)?;
        self.output(self.apply_active(&u.values()[..self.size()]))
    }

    /// Factorization of `shift·I - scale·A`.
    pub fn shifted_lu(&self, shift: Complex64, scale: Complex64) -> Result<TridiagLu> {
        let sub: Vec<_> = self.sub.iter().map(|v| -scale * v).collect();
        let sup: Vec<_> = self.sup.iter().map(|v| -scale * v).collect();
        let diag: Vec<_> = self.diag.iter().map(|v| shift - scale * v).collect();
        TridiagLu::factor(&sub, &diag, &sup)
    }

    /// Solves `(λ - A) u = f`.
    pub fn solve_resolvent(&self, lambda: Complex64, f: &GridFunction) -> Result<GridFunction> {
        self.check_input(f)?;
        let lu = self.shifted_lu(lambda, ONE)?;
        let mut x = f.values()[..self.size()].to_vec();
        lu.solve_in_place(&mut x);
        self.output(x)
    }

    /// Componentwise backward error of `(λ - A) u = f`:
    /// `max_j |r_j| / (|λ||u_j| + (|A||u|)_j + |f_j|)`.
    pub fn residual(&self, lambda: Complex64, u: &GridFunction, f: &GridFunction) -> f64 {
        let n = self.size();
        let x = &u.values()[..n];
        let ax = self.apply_active(x);
        let mut worst = 0.0f64;
        for j in 0..n {
            let r = (lambda * x[j] - ax[j] - f.values()[j]).norm();
            let mut scale = lambda.norm() * x[j].norm() + self.diag[j].norm() * x[j].norm() + f.values()[j].norm();
            if j > 0 {
                scale += self.sub[j - 1].norm() * x[j - 1].norm();
            }
            if j + 1 < n {
                scale += self.sup[j].norm() * x[j + 1].norm();
            }
            if scale > 0.0 {
                worst = worst.max(r / scale);
            }
        }
        worst
    }

    pub fn evolution(&self, cfg: &EvolutionConfig) -> Result<Evolution<'_>> {
        cfg.validate()?;
        let k = cfg.t_final / cfg.n_steps as f64;
        let lu = match cfg.scheme {
            Scheme::BackwardEuler => self.shifted_lu(ONE, k)?,
            Scheme::Trapezoidal => self.shifted_lu(ONE, k / 2.0)?,
        };
        Ok(Evolution { op: self, lu, k, cfg: *cfg })
    }

    /// Approximates `e^{tA} f`.
    pub fn step_semigroup(&self, cfg: &EvolutionConfig, f: &GridFunction) -> Result<GridFunction> {
        self.check_input(f)?;
        let ev = self.evolution(cfg)?;
        let mut x = f.values()[..self.size()].to_vec();
        ev.apply(&mut x);
        self.output(x)
    }

    /// Column `j` is the evolution of `e_j / W_j`, so entries approximate the kernel
    /// with respect to `ρ^(c-α) dρ`.
    pub fn extract_kernel(&self, cfg: &EvolutionConfig) -> Result<KernelMatrix> {
        let ev = self.evolution(cfg)?;
        let n = self.size();
        let mut data = vec![ZERO; n * n];
        let mut col = vec![ZERO; n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = ZERO);
            col[j] = Complex64::new(1.0 / self.weights[j], 0.0);
            ev.apply(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
        Ok(KernelMatrix { t: cfg.t_final, nodes: self.mesh.nodes()[..n].to_vec(), data })
    }

    /// `max |W_j A_{j,j+1} - W_{j+1} A_{j+1,j}|`, relative to the largest weighted entry.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for j in 0..self.sup.len() {
            let up = self.weights[j] * self.sup[j];
            let down = self.weights[j + 1] * self.sub[j];
            worst = worst.max((up - down).norm());
            scale = scale.max(up.norm()).max(down.norm());
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Largest `|row sum| / max |row entry|` over rows not touching `y_max`,
    /// with the potential removed from the diagonal.
    pub fn row_sum_defect(&self) -> Result<f64> {
        let v = self.params.potential.values_on(&self.mesh)?;
        let mut worst = 0.0f64;
        for j in 0..self.size().saturating_sub(1) {
            let d = self.diag[j] + v[j];
            let mut s = d;
            let mut scale = d.norm();
            if j > 0 {
                s += self.sub[j - 1];
                scale = scale.max(self.sub[j - 1].norm());
            }
            s += self.sup[j];
            scale = scale.max(self.sup[j].norm());
            worst = worst.max(s.norm() / scale);
        }
        Ok(worst)
    }
}

/// A factorized propagator for repeated application.
pub struct Evolution<'a> {
    op: &'a TridiagonalOperator,
    lu: TridiagLu,
    k: Complex64,
    cfg: EvolutionConfig,
}

impl Evolution<'_> {
    /// Evolves active-node values in place over the configured time.
    pub fn apply(&self, x: &mut [Complex64]) {
        match self.cfg.scheme {
            Scheme::BackwardEuler => {
                for _ in 0..self.cfg.n_steps {
                    self.lu.solve_in_place(x);
                }
            }
            Scheme::Trapezoidal => {
                self.lu.solve_in_place(x);
                self.lu.solve_in_place(x);
                let half = self.k / 2.0;
                for _ in 1..self.cfg.n_steps {
                    let ax = self.op.apply_active(x);
                    for (xi, ai) in x.iter_mut().zip(ax) {
                        *xi += half * ai;
                    }
                    self.lu.solve_in_place(x);
                }
            }
        }
    }
}
