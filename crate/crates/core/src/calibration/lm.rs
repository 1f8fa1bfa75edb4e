//! Damped Gauss-Newton (Levenberg-Marquardt) for small dense problems.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub(crate) trait LeastSquares {
    type Params: Clone;

    /// Residual vector and its Jacobian with respect to a local step.
    fn evaluate(&self, p: &Self::Params) -> (DVector<f64>, DMatrix<f64>);

    fn residuals(&self, p: &Self::Params) -> DVector<f64>;

    /// Applies a step expressed in the Jacobian's coordinates.
    fn retract(&self, p: &Self::Params, step: &DVector<f64>) -> Self::Params;

    fn flatten(&self, p: &Self::Params) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOptions {
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub cost_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 100,
            step_tolerance: 1e-10,
            cost_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmReport<P> {
    pub params: P,
    /// Sum of squared residuals at the solution.
    pub cost: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub initial_cost: f64,
    pub residual_count: usize,
}

impl<P> LmReport<P> {
    pub fn rms(&self, per_point: usize) -> f64 {
        (self.cost / (self.residual_count / per_point).max(1) as f64).sqrt()
    }
}

const MAX_DAMPING: f64 = 1e24;

pub(crate) fn minimize<Q: LeastSquares>(
    problem: &Q,
    init: Q::Params,
    opts: LmOptions,
) -> Result<LmReport<Q::Params>> {
    let mut params = init;
    let (mut r, mut jac) = problem.evaluate(&params);
    let mut cost = r.norm_squared();
    let initial_cost = cost;
    let residual_count = r.len();
    let mut damping = 1e-4;

    for _ in 0..opts.max_iterations {
        if !(cost > f64::MIN_POSITIVE) {
            return Ok(LmReport {
                params,
                cost,
                initial_cost,
                residual_count,
            });
        }
        let jt = jac.transpose();
        let hessian = &jt * &jac;
        let gradient = &jt * &r;
        let n = hessian.nrows();
        let accepted = loop {
            let mut a = hessian.clone();
            for i in 0..n {
                a[(i, i)] += damping * hessian[(i, i)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                damping *= 10.0;
                if damping > MAX_DAMPING {
                    break None;
                }
                continue;
            };
            let step = -chol.solve(&gradient);
            let candidate = problem.retract(&params, &step);
            let new_cost = problem.residuals(&candidate).norm_squared();
            if new_cost.is_finite() && new_cost <= cost {
                damping = (damping / 3.0).max(1e-12);
                break Some((candidate, new_cost, step.norm()));
            }
            damping *= 4.0;
            if damping > MAX_DAMPING {
                break None;
            }
        };
        let Some((candidate, new_cost, step_norm)) = accepted else {
            // No descent direction left: already at the minimum to working precision.
            return Ok(LmReport {
                params,
                cost,
                initial_cost,
                residual_count,
            });
        };
        let relative = (cost - new_cost) / cost;
        params = candidate;
        cost = new_cost;
        if step_norm < opts.step_tolerance || relative < opts.cost_tolerance {
            return Ok(LmReport {
                params,
                cost,
                initial_cost,
                residual_count,
            });
        }
        (r, jac) = problem.evaluate(&params);
    }
    Err(Error::Convergence {
        iterations: opts.max_iterations,
        best_rms: (cost / residual_count.max(1) as f64).sqrt(),
        best_params: problem.flatten(&params),
    })
}
