//! Channel estimators for both receivers.
//!
//! The ideal receiver's MLE and MAP are least-squares and ridge solutions in
//! closed form. The 1-bit estimators maximize the probit log-likelihood
//!
//! ```text
//! l(theta, alpha) = sum_n ln Q(z_n (alpha - x_n^T theta))  [- theta^T R^{-1} theta / 2]
//! ```
//!
//! which is concave, by damped Newton ascent from the origin inside the box
//! `[-8, 8]^{K+1}`. Perfectly separable data push the unpenalized maximizer to
//! infinity; those runs end on the box boundary and are flagged.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qfunc::{ln_q, mills};
use crate::signal::{GaussianPrior, PilotDesign};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub theta_hat: DVector<f64>,
    /// Present only when the threshold was estimated jointly.
    pub alpha_hat: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Norm of the gradient restricted to coordinates not pinned at the box.
    pub final_gradient_norm: f64,
    /// Some coordinate ended on the search box with the likelihood still
    /// increasing outward (separable data).
    pub boundary_active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub gradient_tol: f64,
    pub max_iterations: usize,
    /// Half-width of the search box.
    pub bound: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            gradient_tol: 1e-8,
            max_iterations: 200,
            bound: 8.0,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

/// Threshold handling of a 1-bit objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Offset {
    /// Estimated jointly; the last coordinate of the variable is `alpha`.
    Unknown,
    Known(f64),
}

/// Probit log-likelihood (optionally plus a Gaussian log-prior on `theta`)
/// reduced to counts per (regressor pattern, observed sign).
#[derive(Debug, Clone)]
pub struct QuantizedObjective {
    regressors: Vec<DVector<f64>>,
    plus: Vec<f64>,
    minus: Vec<f64>,
    offset: Offset,
    precision: Option<DMatrix<f64>>,
    taps: usize,
}

impl QuantizedObjective {
    pub fn new(
        pilot: &PilotDesign,
        z: &[i8],
        offset: Offset,
        prior: Option<&GaussianPrior>,
    ) -> Result<Self> {
        check_signs(pilot, z)?;
        if let Offset::Known(a) = offset {
            if !a.is_finite() {
                return Err(Error::NonFinite("alpha"));
            }
        }
        if let Some(p) = prior {
            check_prior(pilot, p)?;
        }
        let np = pilot.patterns().len();
        let (mut plus, mut minus) = (vec![0.0; np], vec![0.0; np]);
        for (n, &zn) in z.iter().enumerate() {
            let idx = pilot.pattern_index(n);
            if zn > 0 {
                plus[idx] += 1.0;
            } else {
                minus[idx] += 1.0;
            }
        }
        Ok(QuantizedObjective {
            regressors: pilot
                .patterns()
                .iter()
                .map(|p| p.regressor.clone())
                .collect(),
            plus,
            minus,
            offset,
            precision: prior.map(GaussianPrior::precision),
            taps: pilot.taps(),
        })
    }

    /// Number of optimization variables: K, or K+1 with the threshold.
    pub fn dim(&self) -> usize {
        match self.offset {
            Offset::Unknown => self.taps + 1,
            Offset::Known(_) => self.taps,
        }
    }

    fn split<'a>(&self, v: &'a DVector<f64>) -> (nalgebra::DVectorView<'a, f64>, f64) {
        let theta = v.rows(0, self.taps);
        let alpha = match self.offset {
            Offset::Unknown => v[self.taps],
            Offset::Known(a) => a,
        };
        (theta, alpha)
    }

    pub fn value(&self, v: &DVector<f64>) -> f64 {
        let (theta, alpha) = self.split(v);
        let mut acc = 0.0;
        for (i, x) in self.regressors.iter().enumerate() {
            let d = alpha - x.dot(&theta);
            if self.plus[i] > 0.0 {
                acc += self.plus[i] * ln_q(d);
            }
            if self.minus[i] > 0.0 {
                acc += self.minus[i] * ln_q(-d);
            }
        }
        if let Some(p) = &self.precision {
            let t = theta.into_owned();
            acc -= 0.5 * t.dot(&(p * &t));
        }
        acc
    }

    /// Gradient and Hessian at `v`.
    pub fn derivatives(&self, v: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (theta, alpha) = self.split(v);
        let k = self.taps;
        let dim = self.dim();
        let mut g = DVector::zeros(dim);
        let mut h = DMatrix::zeros(dim, dim);
        for (i, x) in self.regressors.iter().enumerate() {
            let d = alpha - x.dot(&theta);
            for (count, z) in [(self.plus[i], 1.0), (self.minus[i], -1.0)] {
                if count == 0.0 {
                    continue;
                }
                // u = z d; dl/du = -lambda(u); d2l/du2 = -lambda (lambda - u)
                let m = mills(z * d);
                let slope = count * m.lambda * z;
                let curv = count * m.curvature();
                // du/dtheta = -z x, du/dalpha = z
                for a in 0..k {
                    g[a] += slope * x[a];
                    for b in 0..k {
                        h[(a, b)] -= curv * x[a] * x[b];
                    }
                }
                if let Offset::Unknown = self.offset {
                    g[k] -= slope;
                    for a in 0..k {
                        h[(a, k)] += curv * x[a];
                        h[(k, a)] += curv * x[a];
                    }
                    h[(k, k)] -= curv;
                }
            }
        }
        if let Some(p) = &self.precision {
            let t = theta.into_owned();
            let pt = p * &t;
            for a in 0..k {
                g[a] -= pt[a];
                for b in 0..k {
                    h[(a, b)] -= p[(a, b)];
                }
            }
        }
        (g, h)
    }

    pub fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        self.derivatives(v).0
    }

    pub fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        self.derivatives(v).1
    }

    fn to_result(&self, v: DVector<f64>, stats: NewtonStats) -> EstimateResult {
        let theta_hat = v.rows(0, self.taps).into_owned();
        let alpha_hat = match self.offset {
            Offset::Unknown => Some(v[self.taps]),
            Offset::Known(_) => None,
        };
        EstimateResult {
            theta_hat,
            alpha_hat,
            iterations: stats.iterations,
            converged: stats.converged,
            final_gradient_norm: stats.gradient_norm,
            boundary_active: stats.boundary_active,
        }
    }

    pub fn maximize(&self, opts: &NewtonOptions) -> EstimateResult {
        let (mut v, mut stats) = newton_ascent(self, DVector::zeros(self.dim()), opts);
        // Separable data: the gradient falls below tolerance long before the
        // estimate reaches the box, while the objective keeps rising along
        // the ray. Restart from where that ray leaves the box.
        let reach = v.amax();
        if stats.converged && reach > 0.0 && reach < opts.bound {
            let edge = &v * (opts.bound / reach);
            if self.value(&edge) > self.value(&v) {
                let (w, more) = newton_ascent(self, edge, opts);
                v = w;
                stats = NewtonStats {
                    iterations: stats.iterations + more.iterations,
                    ..more
                };
            }
        }
        stats.boundary_active = v.iter().any(|x| x.abs() >= opts.bound);
        self.to_result(v, stats)
    }
}

fn check_signs(pilot: &PilotDesign, z: &[i8]) -> Result<()> {
    if z.len() != pilot.len() {
        return Err(Error::invalid(
            "z",
            format!("length {} but pilot has {} symbols", z.len(), pilot.len()),
        ));
    }
    if let Some(bad) = z.iter().find(|&&v| v != 1 && v != -1) {
        return Err(Error::invalid("z", format!("entry {bad} is not ±1")));
    }
    Ok(())
}

fn check_prior(pilot: &PilotDesign, prior: &GaussianPrior) -> Result<()> {
    if prior.taps() != pilot.taps() {
        return Err(Error::invalid(
            "prior",
            format!("{} variances for {} taps", prior.taps(), pilot.taps()),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct NewtonStats {
    iterations: usize,
    converged: bool,
    gradient_norm: f64,
    boundary_active: bool,
}

/// Projected damped Newton ascent on a concave objective within a box.
fn newton_ascent(
    obj: &QuantizedObjective,
    mut v: DVector<f64>,
    opts: &NewtonOptions,
) -> (DVector<f64>, NewtonStats) {
    let dim = v.len();
    let b = opts.bound;
    let mut f = obj.value(&v);
    let mut stats = NewtonStats {
        iterations: 0,
        converged: false,
        gradient_norm: f64::INFINITY,
        boundary_active: false,
    };
    for iter in 0..=opts.max_iterations {
        let (g, h) = obj.derivatives(&v);
        // coordinates on the box whose gradient points outward stay fixed
        let pinned: Vec<bool> = (0..dim)
            .map(|i| (v[i] >= b && g[i] > 0.0) || (v[i] <= -b && g[i] < 0.0))
            .collect();
        let free: Vec<usize> = (0..dim).filter(|&i| !pinned[i]).collect();
        let gnorm = free.iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt();
        stats.iterations = iter;
        stats.gradient_norm = gnorm;
        stats.boundary_active = pinned.iter().any(|&p| p);
        if gnorm <= opts.gradient_tol {
            stats.converged = true;
            break;
        }
        if iter == opts.max_iterations || free.is_empty() {
            break;
        }

        let nf = free.len();
        let neg_h = DMatrix::from_fn(nf, nf, |r, c| -h[(free[r], free[c])]);
        let g_free = DVector::from_fn(nf, |r, _| g[free[r]]);
        let step_free = newton_direction(&neg_h, &g_free);
        let mut dir = DVector::zeros(dim);
        for (r, &i) in free.iter().enumerate() {
            dir[i] = step_free[r];
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..opts.max_backtracks {
            let cand = (&v + &dir * t).map(|x| x.clamp(-b, b));
            let fc = obj.value(&cand);
            let predicted = g.dot(&(&cand - &v));
            if fc.is_finite() && fc >= f + opts.armijo * predicted {
                v = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no ascent possible along the Newton direction: at numerical optimum
            let (g2, _) = obj.derivatives(&v);
            stats.gradient_norm = free.iter().map(|&i| g2[i] * g2[i]).sum::<f64>().sqrt();
            stats.converged = stats.gradient_norm <= opts.gradient_tol;
            break;
        }
    }
    (v, stats)
}

/// Solves `(-H) d = g`, adding Levenberg damping when `-H` is not numerically
/// positive definite (flat likelihood far out in separable directions).
fn newton_direction(neg_h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let n = g.len();
    let scale = neg_h.diagonal().abs().max().max(1e-12);
    let mut mu = 0.0;
    for _ in 0..30 {
        let m = neg_h + DMatrix::identity(n, n) * mu;
        if let Some(c) = m.cholesky() {
            let d = c.solve(g);
            if d.iter().all(|x| x.is_finite()) {
                return d;
            }
        }
        mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
    }
    g.clone()
}

fn gaussian_normal_equations(
    pilot: &PilotDesign,
    y: &[f64],
    precision: Option<DMatrix<f64>>,
) -> Result<EstimateResult> {
    if y.len() != pilot.len() {
        return Err(Error::invalid(
            "y",
            format!("length {} but pilot has {} symbols", y.len(), pilot.len()),
        ));
    }
    let k = pilot.taps();
    let mut rhs = DVector::zeros(k);
    for (n, &yn) in y.iter().enumerate() {
        rhs += pilot.regressor(n) * yn;
    }
    let mut normal = pilot.gram();
    if let Some(p) = &precision {
        normal += p;
    }
    let chol = normal.clone().cholesky().ok_or_else(|| Error::Singular {
        what: "normal matrix",
        cause: "pilot Gram matrix is not positive definite".into(),
    })?;
    let theta_hat = chol.solve(&rhs);
    let grad = &rhs - &normal * &theta_hat;
    Ok(EstimateResult {
        theta_hat,
        alpha_hat: None,
        iterations: 0,
        converged: true,
        final_gradient_norm: grad.norm(),
        boundary_active: false,
    })
}

/// Least squares `(sum X_n)^{-1} sum x_n y_n`.
pub fn mle_ideal(pilot: &PilotDesign, y: &[f64]) -> Result<EstimateResult> {
    gaussian_normal_equations(pilot, y, None)
}

/// Ridge solution `(sum X_n + R^{-1})^{-1} sum x_n y_n`.
pub fn map_ideal(pilot: &PilotDesign, y: &[f64], prior: &GaussianPrior) -> Result<EstimateResult> {
    check_prior(pilot, prior)?;
    gaussian_normal_equations(pilot, y, Some(prior.precision()))
}

/// Joint maximum likelihood over taps and threshold.
pub fn mle_quantized_joint(pilot: &PilotDesign, z: &[i8]) -> Result<EstimateResult> {
    Ok(QuantizedObjective::new(pilot, z, Offset::Unknown, None)?
        .maximize(&NewtonOptions::default()))
}

pub fn mle_quantized_known(pilot: &PilotDesign, z: &[i8], alpha: f64) -> Result<EstimateResult> {
    Ok(
        QuantizedObjective::new(pilot, z, Offset::Known(alpha), None)?
            .maximize(&NewtonOptions::default()),
    )
}

/// Joint MAP over the taps and ML over the threshold.
pub fn jmap_mle(pilot: &PilotDesign, z: &[i8], prior: &GaussianPrior) -> Result<EstimateResult> {
    Ok(
        QuantizedObjective::new(pilot, z, Offset::Unknown, Some(prior))?
            .maximize(&NewtonOptions::default()),
    )
}

pub fn map_quantized_known(
    pilot: &PilotDesign,
    z: &[i8],
    alpha: f64,
    prior: &GaussianPrior,
) -> Result<EstimateResult> {
    Ok(
        QuantizedObjective::new(pilot, z, Offset::Known(alpha), Some(prior))?
            .maximize(&NewtonOptions::default()),
    )
}
