//! Weighted Gaussian dip fit, y = 1 − (A·exp(−(t−t₀)²/2σ²) + B).

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const MAX_ITERATIONS: usize = 200;
const REL_TOL: f64 = 1e-12;
const STEP_TOL: f64 = 1e-12;
const INIT_SIGMA_PS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipPoint {
    pub t: f64,
    pub y: f64,
    pub s: f64,
}

/// How the parameter covariance is scaled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceMode {
    /// (JᵀWJ)⁻¹: the s_i are the true standard errors of the y_i.
    Absolute,
    /// (JᵀWJ)⁻¹·χ²/(n−4): the s_i fix relative weights only.
    #[default]
    ResidualScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipParams {
    pub a: f64,
    pub t0: f64,
    pub sigma: f64,
    pub b: f64,
}

impl DipParams {
    pub fn depth_at(&self, t: f64) -> f64 {
        self.a * gauss(t, self.t0, self.sigma) + self.b
    }

    pub fn model(&self, t: f64) -> f64 {
        1.0 - self.depth_at(t)
    }

    fn to_vec(self) -> Vector4<f64> {
        Vector4::new(self.a, self.t0, self.sigma, self.b)
    }

    fn from_vec(v: &Vector4<f64>) -> Self {
        Self {
            a: v[0],
            t0: v[1],
            sigma: v[2],
            b: v[3],
        }
    }
}

fn gauss(t: f64, t0: f64, sigma: f64) -> f64 {
    (-0.5 * ((t - t0) / sigma).powi(2)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipFit {
    pub params: DipParams,
    /// Row-major covariance of (A, t₀, σ, B).
    pub covariance: [[f64; 4]; 4],
    pub covariance_mode: CovarianceMode,
    /// Σ((y_i − model_i)/s_i)² at the optimum.
    pub chi2: f64,
    pub points: usize,
    pub iterations: usize,
}

impl DipFit {
    pub fn std(&self, k: usize) -> f64 {
        self.covariance[k][k].max(0.0).sqrt()
    }
    pub fn std_a(&self) -> f64 {
        self.std(0)
    }
    pub fn std_t0(&self) -> f64 {
        self.std(1)
    }
    pub fn std_sigma(&self) -> f64 {
        self.std(2)
    }
    pub fn std_b(&self) -> f64 {
        self.std(3)
    }

    /// A within two standard deviations of zero.
    pub fn is_degenerate(&self) -> bool {
        self.params.a.abs() < 2.0 * self.std_a()
    }
}

/// χ² of `params` against `points`.
pub fn chi2(points: &[DipPoint], params: &DipParams) -> f64 {
    points.iter().map(|p| ((p.y - params.model(p.t)) / p.s).powi(2)).sum()
}

/// Weighted residuals and Jacobian of the model with respect to (A, t₀, σ, B).
fn linearize(points: &[DipPoint], p: &DipParams) -> (Matrix4<f64>, Vector4<f64>, f64) {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    let mut cost = 0.0;
    for pt in points {
        let w = 1.0 / pt.s;
        let dt = pt.t - p.t0;
        let g = gauss(pt.t, p.t0, p.sigma);
        let r = (pt.y - (1.0 - p.a * g - p.b)) * w;
        let j = Vector4::new(
            -g,
            -p.a * g * dt / p.sigma.powi(2),
            -p.a * g * dt * dt / p.sigma.powi(3),
            -1.0,
        ) * w;
        jtj += j * j.transpose();
        jtr += j * r;
        cost += r * r;
    }
    (jtj, jtr, cost)
}

fn check_points(points: &[DipPoint]) -> Result<()> {
    if points.len() < 5 {
        return Err(Error::InsufficientData(format!("dip fit needs at least 5 points, got {}", points.len())));
    }
    for p in points {
        if !(p.s > 0.0 && p.s.is_finite()) {
            return Err(invalid("s", format!("standard deviation at t = {} must be > 0, got {}", p.t, p.s)));
        }
        if !(p.t.is_finite() && p.y.is_finite()) {
            return Err(invalid("points", "non-finite coordinate"));
        }
    }
    Ok(())
}

/// Starting point: A = 1 − min y at the smallest t attaining it, σ = 3 ps, B = 0.
pub fn initial_params(points: &[DipPoint]) -> DipParams {
    let mut best = points[0];
    for p in points {
        if p.y < best.y || (p.y == best.y && p.t < best.t) {
            best = *p;
        }
    }
    DipParams {
        a: 1.0 - best.y,
        t0: best.t,
        sigma: INIT_SIGMA_PS,
        b: 0.0,
    }
}

pub fn fit_dip(points: &[DipPoint], mode: CovarianceMode) -> Result<DipFit> {
    check_points(points)?;
    fit_dip_from(points, initial_params(points), mode)
}

/// Levenberg–Marquardt with multiplicative damping on the diagonal.
pub fn fit_dip_from(points: &[DipPoint], start: DipParams, mode: CovarianceMode) -> Result<DipFit> {
    check_points(points)?;
    let mut p = start;
    let (mut jtj, mut jtr, mut cost) = linearize(points, &p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let mut damped = jtj;
        for k in 0..4 {
            damped[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
        }
        let Some(step) = damped.cholesky().map(|c| c.solve(&jtr)) else {
            lambda *= 10.0;
            if lambda > 1e16 {
                return Err(Error::SingularFit);
            }
            continue;
        };
        let trial = DipParams::from_vec(&(p.to_vec() + step));
        let trial_cost = if trial.sigma != 0.0 { chi2(points, &trial) } else { f64::INFINITY };
        if trial_cost <= cost {
            let rel = (cost - trial_cost) / cost;
            let negligible = step
                .iter()
                .zip(p.to_vec().iter())
                .all(|(s, x)| s.abs() <= STEP_TOL * (x.abs() + STEP_TOL));
            p = trial;
            (jtj, jtr, cost) = linearize(points, &p);
            lambda = (lambda / 10.0).max(1e-12);
            // on exact data the cost bottoms out at rounding level, where
            // only the step size still signals convergence
            if rel < REL_TOL || negligible {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            // no downhill step exists at working precision: stationary point
            if lambda > 1e15 {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }
    p.sigma = p.sigma.abs();
    let (jtj, _, cost) = linearize(points, &p);
    let covariance = invert_normal_matrix(&jtj)?;
    let scale = match mode {
        CovarianceMode::Absolute => 1.0,
        CovarianceMode::ResidualScaled => {
            if points.len() > 4 {
                cost / (points.len() - 4) as f64
            } else {
                1.0
            }
        }
    };
    let mut cov = [[0.0; 4]; 4];
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = covariance[(i, j)] * scale;
        }
    }
    Ok(DipFit {
        params: p,
        covariance: cov,
        covariance_mode: mode,
        chi2: cost,
        points: points.len(),
        iterations,
    })
}

/// Inverse of JᵀWJ after equilibration, rejecting numerically rank-deficient cases.
fn invert_normal_matrix(jtj: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let d: Vector4<f64> = jtj.diagonal().map(|x| if x > 0.0 { 1.0 / x.sqrt() } else { 0.0 });
    if d.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return Err(Error::SingularFit);
    }
    let dm = Matrix4::from_diagonal(&d);
    let scaled = dm * jtj * dm;
    let eig = scaled.symmetric_eigen().eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if !(lo > 1e-13 * hi) {
        return Err(Error::SingularFit);
    }
    let inv = scaled.try_inverse().ok_or(Error::SingularFit)?;
    Ok(dm * inv * dm)
}
