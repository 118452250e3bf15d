//! Line-search Newton–CG for smooth convex objectives.
//!
//! The Newton system is solved inexactly with preconditioned conjugate
//! gradients using only Hessian-vector products, so the cost per inner
//! iteration is one pass over the design's nonzeros.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A twice-differentiable objective.
pub trait Objective<T: Real> {
    type Curvature: Curvature<T>;

    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the objective value.
    fn value_grad(&self, theta: &[T], grad: &mut [T]) -> T;

    fn curvature(&self, theta: &[T]) -> Self::Curvature;
}

/// Hessian at a fixed point, available as an operator.
pub trait Curvature<T: Real> {
    fn hess_vec(&self, v: &[T], out: &mut [T]);

    /// Applies an approximation of the inverse Hessian.
    fn precondition(&self, r: &[T], out: &mut [T]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Convergence threshold on the gradient sup-norm.
    pub grad_tol: T,
    pub max_iter: usize,
    pub max_cg_iter: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions { grad_tol: T::lit(T::GRAD_TOL), max_iter: 500, max_cg_iter: 400 }
    }
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub theta: Vec<T>,
    pub objective: T,
    pub grad_norm: T,
    pub iterations: usize,
}

pub(crate) fn sup_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Minimizes `obj` from `theta0`; fails with [`Error::NonConvergence`] when the
/// gradient sup-norm is still above tolerance after `max_iter` Newton steps.
pub fn minimize<T: Real, O: Objective<T>>(obj: &O, theta0: Vec<T>, opts: &SolverOptions<T>) -> Result<Solution<T>> {
    let n = obj.dim();
    assert_eq!(theta0.len(), n, "initial point has wrong dimension");
    let mut theta = theta0;
    let mut grad = vec![T::zero(); n];
    let mut f = obj.value_grad(&theta, &mut grad);
    if !f.is_finite() {
        return Err(Error::NonFinite("objective at initial point"));
    }
    let armijo = T::lit(1e-4);
    let noise = T::lit(100.0) * T::epsilon();
    let mut trial = vec![T::zero(); n];
    let mut trial_grad = vec![T::zero(); n];

    for iter in 0..opts.max_iter {
        let gnorm = sup_norm(&grad);
        if gnorm <= opts.grad_tol {
            return Ok(Solution { theta, objective: f, grad_norm: gnorm, iterations: iter });
        }
        let curv = obj.curvature(&theta);
        let mut dir = newton_direction(&curv, &grad, opts.max_cg_iter);
        let mut slope = dot(&grad, &dir);
        if !(slope < T::zero()) {
            curv.precondition(&grad, &mut dir);
            dir.iter_mut().for_each(|d| *d = -*d);
            slope = dot(&grad, &dir);
        }

        let mut step = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = theta[i] + step * dir[i];
            }
            let ft = obj.value_grad(&trial, &mut trial_grad);
            if ft.is_finite() {
                let sufficient = ft <= f + armijo * step * slope;
                // Below the rounding floor of `f` the Armijo test is noise; accept
                // any step that reduces the gradient instead.
                let in_noise = (step * slope).abs() <= noise * (f.abs() + T::one());
                if sufficient || (in_noise && sup_norm(&trial_grad) < gnorm) {
                    accepted = true;
                    break;
                }
            }
            step *= T::lit(0.5);
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations: iter, grad_norm: gnorm.as_f64() });
        }
        std::mem::swap(&mut theta, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        f = obj.value_grad(&theta, &mut grad);
    }
    let gnorm = sup_norm(&grad);
    if gnorm <= opts.grad_tol {
        return Ok(Solution { theta, objective: f, grad_norm: gnorm, iterations: opts.max_iter });
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, grad_norm: gnorm.as_f64() })
}

/// Approximately solves `H d = -g` by preconditioned CG with forcing term
/// `min(0.5, sqrt(|g|)) |g|`.
fn newton_direction<T: Real, C: Curvature<T>>(curv: &C, grad: &[T], max_iter: usize) -> Vec<T> {
    let n = grad.len();
    let gn = dot(grad, grad).sqrt();
    let tol = gn * gn.sqrt().min(T::lit(0.5)).min(T::one());
    let mut x = vec![T::zero(); n];
    let mut r: Vec<T> = grad.iter().map(|&g| -g).collect();
    let mut z = vec![T::zero(); n];
    curv.precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut hp = vec![T::zero(); n];
    for k in 0..max_iter.max(1) {
        curv.hess_vec(&p, &mut hp);
        let php = dot(&p, &hp);
        if !(php > T::zero()) {
            if k == 0 {
                return z;
            }
            break;
        }
        let a = rz / php;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * hp[i];
        }
        if dot(&r, &r).sqrt() <= tol {
            break;
        }
        curv.precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}
