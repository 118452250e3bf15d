//! Penalized negative log-likelihoods for the binary and multinomial models.
//!
//! Both use sum (not mean) log-likelihood; `lambda` multiplies the squared
//! L2 norm of every coefficient except the intercept(s).

use crate::design::{DesignMatrix, INTERCEPT_COL};
use crate::scalar::{logistic, softplus, Real};

use super::solver::{Curvature, Objective};

fn penalized(col: usize) -> bool {
    col != INTERCEPT_COL
}

/// `sum_t [log(1 + e^eta_t) - y_t eta_t] + lambda * |theta_pen|^2`
pub struct BinaryObjective<'a, T> {
    x: &'a DesignMatrix<T>,
    y: &'a [bool],
    lambda: T,
}

impl<'a, T: Real> BinaryObjective<'a, T> {
    pub fn new(x: &'a DesignMatrix<T>, y: &'a [bool], lambda: T) -> Self {
        assert_eq!(x.n_rows(), y.len(), "design rows and targets differ in length");
        BinaryObjective { x, y, lambda }
    }

    /// Unpenalized negative log-likelihood.
    pub fn neg_loglik(&self, theta: &[T]) -> T {
        (0..self.x.n_rows())
            .map(|i| {
                let eta = self.x.dot(i, theta);
                softplus(eta) - if self.y[i] { eta } else { T::zero() }
            })
            .sum()
    }

    pub fn value(&self, theta: &[T]) -> T {
        let mut g = vec![T::zero(); theta.len()];
        self.value_grad(theta, &mut g)
    }
}

pub struct BinaryCurvature<'a, T> {
    x: &'a DesignMatrix<T>,
    w: Vec<T>,
    inv_diag: Vec<T>,
    two_lambda: T,
}

impl<'a, T: Real> Objective<T> for BinaryObjective<'a, T> {
    type Curvature = BinaryCurvature<'a, T>;

    fn dim(&self) -> usize {
        self.x.n_cols()
    }

    fn value_grad(&self, theta: &[T], grad: &mut [T]) -> T {
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut f = T::zero();
        for i in 0..self.x.n_rows() {
            let eta = self.x.dot(i, theta);
            let y = if self.y[i] { T::one() } else { T::zero() };
            f += softplus(eta) - y * eta;
            self.x.axpy(i, logistic(eta) - y, grad);
        }
        let two_l = self.lambda + self.lambda;
        for (k, (&t, g)) in theta.iter().zip(grad.iter_mut()).enumerate() {
            if penalized(k) {
                f += self.lambda * t * t;
                *g += two_l * t;
            }
        }
        f
    }

    fn curvature(&self, theta: &[T]) -> BinaryCurvature<'a, T> {
        let n = self.x.n_cols();
        let two_lambda = self.lambda + self.lambda;
        let mut diag = vec![T::zero(); n];
        let w: Vec<T> = (0..self.x.n_rows())
            .map(|i| {
                let p = logistic(self.x.dot(i, theta));
                let w = p * (T::one() - p);
                let (c, v) = self.x.row(i);
                for k in 0..c.len() {
                    diag[c[k] as usize] += w * v[k] * v[k];
                }
                w
            })
            .collect();
        let floor = T::epsilon();
        let inv_diag = diag
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                let d = if penalized(k) { d + two_lambda } else { d };
                if d > floor {
                    T::one() / d
                } else {
                    T::one()
                }
            })
            .collect();
        BinaryCurvature { x: self.x, w, inv_diag, two_lambda }
    }
}

impl<T: Real> Curvature<T> for BinaryCurvature<'_, T> {
    fn hess_vec(&self, v: &[T], out: &mut [T]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = if penalized(k) { self.two_lambda * v[k] } else { T::zero() };
        }
        for i in 0..self.x.n_rows() {
            let u = self.x.dot(i, v);
            self.x.axpy(i, self.w[i] * u, out);
        }
    }

    fn precondition(&self, r: &[T], out: &mut [T]) {
        for k in 0..r.len() {
            out[k] = r[k] * self.inv_diag[k];
        }
    }
}

/// Softmax regression with a zero-logit reference class.
///
/// `targets[t]` is `0` for the reference class and `1..=k` for the `k`
/// non-reference classes. Parameters are laid out class-major: block `c`
/// holds the full design width for class `c + 1`.
pub struct MultinomialObjective<'a, T> {
    x: &'a DesignMatrix<T>,
    targets: &'a [usize],
    k: usize,
    lambda: T,
}

impl<'a, T: Real> MultinomialObjective<'a, T> {
    pub fn new(x: &'a DesignMatrix<T>, targets: &'a [usize], n_nonref: usize, lambda: T) -> Self {
        assert_eq!(x.n_rows(), targets.len(), "design rows and targets differ in length");
        assert!(targets.iter().all(|&t| t <= n_nonref), "target slot out of range");
        MultinomialObjective { x, targets, k: n_nonref, lambda }
    }

    pub fn n_nonref(&self) -> usize {
        self.k
    }

    /// Fills `logits` (length `k`) for row `i`.
    #[inline]
    fn logits(&self, i: usize, theta: &[T], logits: &mut [T]) {
        let p = self.x.n_cols();
        let (c, v) = self.x.row(i);
        for (cls, l) in logits.iter_mut().enumerate() {
            let off = cls * p;
            let mut s = T::zero();
            for j in 0..c.len() {
                s += v[j] * theta[off + c[j] as usize];
            }
            *l = s;
        }
    }

    /// Returns `(log-sum-exp over all classes incl. reference, probs of non-ref classes)`.
    #[inline]
    fn row_probs(logits: &[T], probs: &mut [T]) -> T {
        let max = logits.iter().copied().fold(T::zero(), T::max);
        let mut total = (-max).exp();
        for (p, &l) in probs.iter_mut().zip(logits) {
            *p = (l - max).exp();
            total += *p;
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        max + total.ln()
    }

    pub fn neg_loglik(&self, theta: &[T]) -> T {
        let mut logits = vec![T::zero(); self.k];
        let mut probs = vec![T::zero(); self.k];
        (0..self.x.n_rows())
            .map(|i| {
                self.logits(i, theta, &mut logits);
                let lse = Self::row_probs(&logits, &mut probs);
                let t = self.targets[i];
                lse - if t == 0 { T::zero() } else { logits[t - 1] }
            })
            .sum()
    }

    pub fn value(&self, theta: &[T]) -> T {
        let mut g = vec![T::zero(); theta.len()];
        self.value_grad(theta, &mut g)
    }
}

pub struct MultinomialCurvature<'a, T> {
    x: &'a DesignMatrix<T>,
    k: usize,
    /// Row-major `n_rows x k` non-reference probabilities.
    probs: Vec<T>,
    /// Per design column, the inverse of its `k x k` diagonal Hessian block.
    inv_blocks: Vec<T>,
    two_lambda: T,
}

impl<'a, T: Real> Objective<T> for MultinomialObjective<'a, T> {
    type Curvature = MultinomialCurvature<'a, T>;

    fn dim(&self) -> usize {
        self.k * self.x.n_cols()
    }

    fn value_grad(&self, theta: &[T], grad: &mut [T]) -> T {
        grad.iter_mut().for_each(|g| *g = T::zero());
        let p = self.x.n_cols();
        let mut logits = vec![T::zero(); self.k];
        let mut probs = vec![T::zero(); self.k];
        let mut f = T::zero();
        for i in 0..self.x.n_rows() {
            self.logits(i, theta, &mut logits);
            let lse = Self::row_probs(&logits, &mut probs);
            let t = self.targets[i];
            f += lse - if t == 0 { T::zero() } else { logits[t - 1] };
            let (c, v) = self.x.row(i);
            for cls in 0..self.k {
                let resid = probs[cls] - if t == cls + 1 { T::one() } else { T::zero() };
                let off = cls * p;
                for j in 0..c.len() {
                    grad[off + c[j] as usize] += resid * v[j];
                }
            }
        }
        let two_l = self.lambda + self.lambda;
        for (idx, (&th, g)) in theta.iter().zip(grad.iter_mut()).enumerate() {
            if penalized(idx % p) {
                f += self.lambda * th * th;
                *g += two_l * th;
            }
        }
        f
    }

    fn curvature(&self, theta: &[T]) -> MultinomialCurvature<'a, T> {
        let (k, p) = (self.k, self.x.n_cols());
        let two_lambda = self.lambda + self.lambda;
        let mut probs = vec![T::zero(); self.x.n_rows() * k];
        let mut blocks = vec![T::zero(); p * k * k];
        let mut logits = vec![T::zero(); k];
        for i in 0..self.x.n_rows() {
            self.logits(i, theta, &mut logits);
            let pr = &mut probs[i * k..(i + 1) * k];
            Self::row_probs(&logits, pr);
            let (c, v) = self.x.row(i);
            for j in 0..c.len() {
                let b = &mut blocks[c[j] as usize * k * k..(c[j] as usize + 1) * k * k];
                let vv = v[j] * v[j];
                for a in 0..k {
                    for bb in 0..k {
                        let h = if a == bb { pr[a] - pr[a] * pr[a] } else { -pr[a] * pr[bb] };
                        b[a * k + bb] += vv * h;
                    }
                }
            }
        }
        for col in 0..p {
            let b = &mut blocks[col * k * k..(col + 1) * k * k];
            if penalized(col) {
                for a in 0..k {
                    b[a * k + a] += two_lambda;
                }
            }
            invert_spd(b, k);
        }
        MultinomialCurvature { x: self.x, k, probs, inv_blocks: blocks, two_lambda }
    }
}

/// In-place inverse of a small symmetric positive semi-definite matrix, with
/// jitter when it is numerically singular. Falls back to the identity.
fn invert_spd<T: Real>(a: &mut [T], k: usize) {
    let trace: T = (0..k).map(|i| a[i * k + i]).sum();
    let mut jitter = T::zero();
    for _ in 0..4 {
        let mut m = a.to_vec();
        for i in 0..k {
            m[i * k + i] += jitter;
        }
        if let Some(inv) = cholesky_inverse(&m, k) {
            a.copy_from_slice(&inv);
            return;
        }
        jitter = if jitter == T::zero() {
            (trace / T::from_count(k)).max(T::one()) * T::lit(1e-10)
        } else {
            jitter * T::lit(1e3)
        };
    }
    for i in 0..k {
        for j in 0..k {
            a[i * k + j] = if i == j { T::one() } else { T::zero() };
        }
    }
}

fn cholesky_inverse<T: Real>(a: &[T], k: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for m in 0..j {
                s -= l[i * k + m] * l[j * k + m];
            }
            if i == j {
                if !(s > T::epsilon() * T::lit(16.0)) {
                    return None;
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    // inverse via solving L L^T X = I column by column
    let mut inv = vec![T::zero(); k * k];
    let mut y = vec![T::zero(); k];
    for col in 0..k {
        for i in 0..k {
            let mut s = if i == col { T::one() } else { T::zero() };
            for m in 0..i {
                s -= l[i * k + m] * y[m];
            }
            y[i] = s / l[i * k + i];
        }
        for i in (0..k).rev() {
            let mut s = y[i];
            for m in i + 1..k {
                s -= l[m * k + i] * inv[m * k + col];
            }
            inv[i * k + col] = s / l[i * k + i];
        }
    }
    Some(inv)
}

impl<T: Real> Curvature<T> for MultinomialCurvature<'_, T> {
    fn hess_vec(&self, v: &[T], out: &mut [T]) {
        let (k, p) = (self.k, self.x.n_cols());
        for (idx, o) in out.iter_mut().enumerate() {
            *o = if penalized(idx % p) { self.two_lambda * v[idx] } else { T::zero() };
        }
        let mut u = vec![T::zero(); k];
        for i in 0..self.x.n_rows() {
            let (c, vals) = self.x.row(i);
            let pr = &self.probs[i * k..(i + 1) * k];
            let mut s = T::zero();
            for cls in 0..k {
                let off = cls * p;
                let mut d = T::zero();
                for j in 0..c.len() {
                    d += vals[j] * v[off + c[j] as usize];
                }
                u[cls] = d;
                s += pr[cls] * d;
            }
            for cls in 0..k {
                let z = pr[cls] * (u[cls] - s);
                let off = cls * p;
                for j in 0..c.len() {
                    out[off + c[j] as usize] += z * vals[j];
                }
            }
        }
    }

    fn precondition(&self, r: &[T], out: &mut [T]) {
        let (k, p) = (self.k, self.x.n_cols());
        for col in 0..p {
            let b = &self.inv_blocks[col * k * k..(col + 1) * k * k];
            for a in 0..k {
                let mut s = T::zero();
                for bb in 0..k {
                    s += b[a * k + bb] * r[bb * p + col];
                }
                out[a * p + col] = s;
            }
        }
    }
}
