//! Exact partial derivatives of radial power-law pair potentials.
//!
//! A pair potential `I * ||q||^{-alpha}` and all of its multi-index partials
//! live in the space spanned by terms `c * q^beta * ||q||^{-alpha - 2m}`
//! (monomial times radial power). Differentiation acts term by term:
//!
//! ```text
//! d/dq_a [ c q^beta r^{-s} ] = c beta_a q^{beta - e_a} r^{-s}
//!                              - c s q^{beta + e_a} r^{-s-2}
//! ```
//!
//! which keeps the representation closed and exact for every order. Each term
//! of `∂^gamma (r^{-alpha})` has homogeneity degree `-alpha - |gamma|`, so the
//! seminorm supremand `r^{alpha+k} |∂^gamma V|` is a function of the unit
//! direction alone.

use std::collections::HashMap;

/// Sum of terms `c * q^beta * r^{-(alpha + 2m)}` in `d` variables.
#[derive(Debug, Clone)]
pub struct RadialPoly {
    pub d: usize,
    pub alpha: f64,
    /// (monomial exponents, extra radial power m) -> coefficient
    terms: HashMap<(Vec<u32>, u32), f64>,
}

impl RadialPoly {
    /// The pair potential itself: `coef * r^{-alpha}`.
    pub fn potential(d: usize, alpha: f64, coef: f64) -> Self {
        let mut terms = HashMap::new();
        terms.insert((vec![0; d], 0), coef);
        RadialPoly { d, alpha, terms }
    }

    pub fn differentiate(&self, axis: usize) -> Self {
        let mut terms: HashMap<(Vec<u32>, u32), f64> = HashMap::new();
        for ((beta, m), &c) in &self.terms {
            if beta[axis] > 0 {
                let mut b = beta.clone();
                b[axis] -= 1;
                *terms.entry((b, *m)).or_insert(0.0) += c * beta[axis] as f64;
            }
            let s = self.alpha + 2.0 * *m as f64;
            let mut b = beta.clone();
            b[axis] += 1;
            *terms.entry((b, m + 1)).or_insert(0.0) += -c * s;
        }
        RadialPoly {
            d: self.d,
            alpha: self.alpha,
            terms,
        }
    }

    /// `∂^gamma` applied to this polynomial.
    pub fn partial(&self, gamma: &[u32]) -> Self {
        let mut out = self.clone();
        for (axis, &count) in gamma.iter().enumerate() {
            for _ in 0..count {
                out = out.differentiate(axis);
            }
        }
        out
    }

    /// Evaluate at a point `q` (away from the origin).
    pub fn eval(&self, q: &[f64]) -> f64 {
        let r2: f64 = q.iter().map(|x| x * x).sum();
        let r = r2.sqrt();
        let mut total = 0.0;
        for ((beta, m), &c) in &self.terms {
            let mut v = c * r.powf(-(self.alpha + 2.0 * *m as f64));
            for (x, &b) in q.iter().zip(beta.iter()) {
                v *= x.powi(b as i32);
            }
            total += v;
        }
        total
    }

    /// The 0-homogeneous supremand `r^{alpha + |gamma|} * value` evaluated at
    /// a unit direction `u` (assumes this polynomial is `∂^gamma r^{-alpha}`
    /// times a coefficient, so every term has degree `-alpha - |gamma|`).
    pub fn eval_on_unit_sphere(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((beta, m), &c) in &self.terms {
            let _ = m;
            let mut v = c;
            for (x, &b) in u.iter().zip(beta.iter()) {
                v *= x.powi(b as i32);
            }
            total += v;
        }
        total
    }
}

/// All multi-indices in `d` variables with |gamma| = k.
pub fn multi_indices(d: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; d];
    fn rec(d: usize, pos: usize, left: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == d - 1 {
            current[pos] = left;
            out.push(current.clone());
            return;
        }
        for take in (0..=left).rev() {
            current[pos] = take;
            rec(d, pos + 1, left - take, current, out);
        }
    }
    rec(d, 0, k, &mut current, &mut out);
    out
}
