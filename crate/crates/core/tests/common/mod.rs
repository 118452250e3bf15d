//! Test-only oracles written against the raw rows, independent of the
//! library's design matrix and solver.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trenchbt::{Id, Interaction, InteractionTable, OutcomeClass};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small random table with both binary outcomes and all four classes present.
pub fn random_problem(seed: u64) -> InteractionTable {
    let mut r = rng(seed);
    let n = r.random_range(12..=50);
    let n_r = r.random_range(1..=5);
    let n_b = r.random_range(1..=5);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let severity = if i < 4 {
            OutcomeClass::from_index(i).unwrap()
        } else {
            OutcomeClass::from_index(r.random_range(0..4)).unwrap()
        };
        rows.push(Interaction {
            game_id: Id::new(format!("g{}", i % 3)),
            play_id: Id::new(format!("{i}")),
            event_game_index: i as u32,
            week: 1,
            rusher_id: Id::new(format!("r{}", r.random_range(0..n_r))),
            blocker_id: Id::new(format!("b{}", r.random_range(0..n_b))),
            double_team: r.random_bool(0.4),
            win_target: if i < 2 { i == 0 } else { r.random_bool(0.4) },
            severity,
            game_copy: 0,
        });
    }
    InteractionTable::new(rows).canonical_sort()
}

/// Parameter layout `[alpha, delta, r..., b...]` per class block, with the
/// players in first-seen order.
pub struct Layout {
    pub rushers: Vec<Id>,
    pub blockers: Vec<Id>,
}

impl Layout {
    pub fn new(t: &InteractionTable) -> Self {
        let mut rushers: Vec<Id> = Vec::new();
        let mut blockers: Vec<Id> = Vec::new();
        for x in t.iter() {
            if !rushers.contains(&x.rusher_id) {
                rushers.push(x.rusher_id.clone());
            }
            if !blockers.contains(&x.blocker_id) {
                blockers.push(x.blocker_id.clone());
            }
        }
        Layout { rushers, blockers }
    }

    pub fn width(&self) -> usize {
        2 + self.rushers.len() + self.blockers.len()
    }

    fn r(&self, id: &Id) -> usize {
        2 + self.rushers.iter().position(|x| x == id).unwrap()
    }

    fn b(&self, id: &Id) -> usize {
        2 + self.rushers.len() + self.blockers.iter().position(|x| x == id).unwrap()
    }

    pub fn eta(&self, x: &Interaction, block: &[f64]) -> f64 {
        block[0] + block[self.r(&x.rusher_id)] - block[self.b(&x.blocker_id)] + if x.double_team { block[1] } else { 0.0 }
    }

    /// d eta / d block, as (index, coefficient) pairs.
    pub fn eta_grad(&self, x: &Interaction) -> Vec<(usize, f64)> {
        vec![(0, 1.0), (1, if x.double_team { 1.0 } else { 0.0 }), (self.r(&x.rusher_id), 1.0), (self.b(&x.blocker_id), -1.0)]
    }

    pub fn pack(&self, alpha: f64, delta: f64, r: &BTreeMap<Id, f64>, b: &BTreeMap<Id, f64>) -> Vec<f64> {
        let mut v = vec![alpha, delta];
        v.extend(self.rushers.iter().map(|id| r[id]));
        v.extend(self.blockers.iter().map(|id| b[id]));
        v
    }
}

fn penalty(block: &[f64], lambda: f64) -> f64 {
    lambda * block[1..].iter().map(|v| v * v).sum::<f64>()
}

/// `-sum loglik + lambda * |theta without intercept|^2` and its gradient.
pub fn binary_objective(t: &InteractionTable, l: &Layout, lambda: f64, th: &[f64]) -> (f64, Vec<f64>) {
    let mut f = penalty(th, lambda);
    let mut g: Vec<f64> = th.iter().enumerate().map(|(i, v)| if i == 0 { 0.0 } else { 2.0 * lambda * v }).collect();
    for x in t.iter() {
        let eta = l.eta(x, th);
        let y = if x.win_target { 1.0 } else { 0.0 };
        // log(1 + e^eta) - y * eta, computed stably
        let sp = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
        f += sp - y * eta;
        let p = 1.0 / (1.0 + (-eta).exp());
        for (j, c) in l.eta_grad(x) {
            g[j] += (p - y) * c;
        }
    }
    (f, g)
}

/// Same objective for the four-class model with `loss` as reference; `th`
/// holds the win, hit and sack blocks in that order.
pub fn multinomial_objective(t: &InteractionTable, l: &Layout, lambda: f64, th: &[f64]) -> (f64, Vec<f64>) {
    let w = l.width();
    let mut f = 0.0;
    let mut g = vec![0.0; th.len()];
    for k in 0..3 {
        let block = &th[k * w..(k + 1) * w];
        f += penalty(block, lambda);
        for j in 1..w {
            g[k * w + j] += 2.0 * lambda * block[j];
        }
    }
    for x in t.iter() {
        let etas: Vec<f64> = (0..3).map(|k| l.eta(x, &th[k * w..(k + 1) * w])).collect();
        let m = etas.iter().copied().fold(0.0, f64::max);
        let z = (-m).exp() + etas.iter().map(|e| (e - m).exp()).sum::<f64>();
        let lse = m + z.ln();
        let obs = x.severity.index();
        f += lse - if obs == 0 { 0.0 } else { etas[obs - 1] };
        for k in 0..3 {
            let p = (etas[k] - lse).exp();
            let y = if obs == k + 1 { 1.0 } else { 0.0 };
            for (j, c) in l.eta_grad(x) {
                g[k * w + j] += (p - y) * c;
            }
        }
    }
    (f, g)
}

/// Fixed-step accelerated gradient descent (step `1/lipschitz`) with
/// gradient restarts. Slow, but shares nothing with the library's Newton-CG.
/// Restarts look at gradients only, since objective differences drown in
/// rounding long before the gradient reaches `tol`.
pub fn slow_descent(
    f: impl Fn(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    lipschitz: f64,
    tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let step = 1.0 / lipschitz;
    let mut x = x0.clone();
    let mut y = x0;
    let mut t = 1.0f64;
    for _ in 0..max_iter {
        let (_, gy) = f(&y);
        if gy.iter().fold(0.0f64, |a, v| a.max(v.abs())) <= tol {
            return y;
        }
        let xn: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - step * g).collect();
        let uphill: f64 = gy.iter().zip(xn.iter().zip(&x)).map(|(g, (a, b))| g * (a - b)).sum();
        if uphill > 0.0 {
            t = 1.0;
            y = xn.clone();
        } else {
            let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            y = xn.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / tn * (a - b)).collect();
            t = tn;
        }
        x = xn;
    }
    x
}

/// Curvature bounds: each row touches at most four unit coefficients.
pub fn binary_lipschitz(t: &InteractionTable, lambda: f64) -> f64 {
    t.len() as f64 + 2.0 * lambda
}

pub fn multinomial_lipschitz(t: &InteractionTable, lambda: f64) -> f64 {
    4.0 * t.len() as f64 + 2.0 * lambda
}

pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}
