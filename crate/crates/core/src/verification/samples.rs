//! Test-function generators shared by the checkers.

use crate::error::{Error, Result};
use crate::weighted_space::{GradedMesh, GridFunction};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

/// Equal to 1 on `[0, plateau_end]`, 0 beyond `support_end`, joined by the quintic
/// smoothstep `1 - (10s³ - 15s⁴ + 6s⁵)`, which has two continuous derivatives.
pub fn core_test_function(plateau_end: f64, support_end: f64, mesh: Arc<GradedMesh>) -> Result<GridFunction> {
    if !(plateau_end > 0.0 && plateau_end < support_end && support_end <= mesh.y_max()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < plateau_end < support_end <= y_max, got ({plateau_end}, {support_end}, {})",
            mesh.y_max()
        )));
    }
    GridFunction::from_real_fn(mesh, |y| smoothstep_down(plateau_end, support_end, y))
}

pub(crate) fn smoothstep_down(a: f64, b: f64, y: f64) -> f64 {
    if y <= a {
        1.0
    } else if y >= b {
        0.0
    } else {
        let s = (y - a) / (b - a);
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// A sum of four Gaussian bumps with random complex amplitudes, centres in
/// `[0, centre_max]` and widths in `[0.2, 2]`.
pub fn random_smooth(rng: &mut ChaCha8Rng, mesh: Arc<GradedMesh>, centre_max: f64) -> GridFunction {
    let bumps: Vec<(Complex64, f64, f64)> = (0..4)
        .map(|_| {
            let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (a, rng.gen_range(0.0..centre_max), rng.gen_range(0.2..2.0))
        })
        .collect();
    GridFunction::from_fn(mesh, |y| bumps.iter().map(|(a, c, w)| a * (-((y - c) / w).powi(2)).exp()).sum())
        .expect("bounded bumps are finite")
}

/// `(λ_i, f_i)` pairs for square-function estimates.
#[derive(Debug, Clone)]
pub struct FamilySample {
    pub lambdas: Vec<Complex64>,
    pub functions: Vec<GridFunction>,
}

impl FamilySample {
    pub fn new(lambdas: Vec<Complex64>, functions: Vec<GridFunction>) -> Result<Self> {
        if lambdas.len() != functions.len() {
            return Err(Error::LengthMismatch { expected: lambdas.len(), got: functions.len() });
        }
        if lambdas.is_empty() {
            return Err(Error::InvalidParameter("empty family".into()));
        }
        Ok(Self { lambdas, functions })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `size` parameters with modulus log-uniform on `[1e-2, 1e2]` and argument
    /// uniform on `[-(π/2 + φ) + δ, (π/2 + φ) - δ]`, paired with random smooth functions.
    pub fn sector(rng: &mut ChaCha8Rng, mesh: &Arc<GradedMesh>, size: usize, phi: f64, delta: f64) -> Result<Self> {
        let half = FRAC_PI_2 + phi - delta;
        if !(half > 0.0 && half < std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!("sector half-angle {half} outside (0, pi)")));
        }
        let mut lambdas = Vec::with_capacity(size);
        let mut functions = Vec::with_capacity(size);
        for _ in 0..size {
            let r = 10f64.powf(rng.gen_range(-2.0..2.0));
            lambdas.push(Complex64::from_polar(r, rng.gen_range(-half..half)));
            functions.push(random_smooth(rng, mesh.clone(), 5.0_f64.min(mesh.y_max() / 2.0)));
        }
        Self::new(lambdas, functions)
    }
}
