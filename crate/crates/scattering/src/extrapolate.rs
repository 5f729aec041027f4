//! Dyadic-checkpoint limits: Cauchy tests, power-law Richardson
//! extrapolation with theory-supplied decay models, and log-log exponent
//! fits.
//!
//! Every `t -> ∞` limit in the library is extracted the same way: sample at
//! `t_k = t0 * 2^k`, fit `y(t) = y_inf + sum_j c_j g_j(t)` on a trailing
//! window by least squares, and report how much the extrapolated value moved
//! when the window is shifted by one checkpoint. That shift is the honest
//! post-extrapolation residual.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// One basis function of a decay model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelTerm {
    /// t^{-beta}
    Power(f64),
    /// t^{-beta} * ln t
    PowerLog(f64),
}

impl ModelTerm {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ModelTerm::Power(b) => t.powf(-b),
            ModelTerm::PowerLog(b) => t.powf(-b) * t.ln(),
        }
    }
}

/// Decay model for a limit, e.g. `p(t) = p⁺ + c1 t^{-alpha} + c2 t^{-2alpha}`.
#[derive(Debug, Clone)]
pub struct LimitModel {
    pub terms: Vec<ModelTerm>,
}

impl LimitModel {
    pub fn new(terms: Vec<ModelTerm>) -> Self {
        LimitModel { terms }
    }

    /// Momentum-style decay `t^{-alpha}` with its square as second order.
    pub fn momentum(alpha: f64) -> Self {
        LimitModel::new(vec![
            ModelTerm::Power(alpha),
            ModelTerm::Power(2.0 * alpha),
        ])
    }

    /// Decay of the Dollard transform residual `r(T) - r⁺`:
    /// `O(T^{1-2alpha})` for alpha in (1/2, 1), `O(T^{-1} log T)` at
    /// alpha = 1, and `O(T^{1-alpha})` in the short-range free comparison.
    pub fn transform_residual(alpha: f64) -> Self {
        if (alpha - 1.0).abs() < 1e-12 {
            LimitModel::new(vec![ModelTerm::PowerLog(1.0), ModelTerm::Power(1.0)])
        } else if alpha < 1.0 {
            LimitModel::new(vec![
                ModelTerm::Power(2.0 * alpha - 1.0),
                ModelTerm::Power(alpha),
            ])
        } else {
            LimitModel::new(vec![
                ModelTerm::Power(alpha - 1.0),
                ModelTerm::Power(alpha),
            ])
        }
    }
}

/// Dyadic times `t0 * 2^k` up to (and including the first >= ) `horizon`.
pub fn dyadic_times(t0: f64, horizon: f64) -> Vec<f64> {
    assert!(t0 > 0.0 && horizon > t0);
    let mut out = vec![t0];
    let mut t = t0;
    while t < horizon * (1.0 - 1e-12) {
        t *= 2.0;
        out.push(t.min(horizon));
    }
    out
}

/// Result of a limit extraction.
#[derive(Debug, Clone)]
pub struct Extrapolated {
    pub limit: DVector<f64>,
    /// Max-norm shift of the extrapolated value when the fitting window moves
    /// by one checkpoint; the post-extrapolation residual.
    pub residual: f64,
    /// Max-norm difference of the last two raw checkpoints.
    pub cauchy_last: f64,
}

fn fit_window(
    times: &[f64],
    values: &[DVector<f64>],
    model: &LimitModel,
    lo: usize,
    hi: usize,
) -> DVector<f64> {
    let rows = hi - lo;
    let cols = model.terms.len() + 1;
    let dim = values[0].len();
    let mut a = DMatrix::zeros(rows, cols);
    for (r, k) in (lo..hi).enumerate() {
        a[(r, 0)] = 1.0;
        for (c, term) in model.terms.iter().enumerate() {
            a[(r, c + 1)] = term.eval(times[k]);
        }
    }
    // Normal equations are adequate at these sizes; columns are scaled to
    // comparable magnitude first.
    let mut scale = vec![1.0; cols];
    for c in 0..cols {
        let s = (0..rows).map(|r| a[(r, c)].abs()).fold(0.0f64, f64::max);
        if s > 0.0 {
            scale[c] = s;
            for r in 0..rows {
                a[(r, c)] /= s;
            }
        }
    }
    let ata = a.transpose() * &a;
    let chol = ata
        .clone()
        .cholesky()
        .or_else(|| (ata + DMatrix::identity(cols, cols) * 1e-14).cholesky());
    let mut limit = DVector::zeros(dim);
    match chol {
        Some(ch) => {
            let mut rhs_all = DMatrix::zeros(rows, dim);
            for (r, k) in (lo..hi).enumerate() {
                for c in 0..dim {
                    rhs_all[(r, c)] = values[k][c];
                }
            }
            let atb = a.transpose() * rhs_all;
            for c in 0..dim {
                let coef = ch.solve(&atb.column(c).into_owned());
                limit[c] = coef[0] / scale[0];
            }
        }
        None => {
            // Degenerate fit: fall back to the last checkpoint.
            limit.copy_from(&values[hi - 1]);
        }
    }
    limit
}

/// Fit the decay model on the trailing window and report the limit together
/// with its stability under shifting the window.
pub fn extrapolate(times: &[f64], values: &[DVector<f64>], model: &LimitModel) -> Extrapolated {
    assert_eq!(times.len(), values.len());
    let n = times.len();
    assert!(n >= 2);
    let window = (model.terms.len() + 3).min(n);
    let cauchy_last = (&values[n - 1] - &values[n - 2]).amax();
    if n < model.terms.len() + 2 {
        return Extrapolated {
            limit: values[n - 1].clone(),
            residual: cauchy_last,
            cauchy_last,
        };
    }
    let current = fit_window(times, values, model, n - window, n);
    let residual = if n > window {
        let previous = fit_window(times, values, model, n - window - 1, n - 1);
        (&current - &previous).amax()
    } else {
        let previous = fit_window(times, values, model, n - window, n - 1);
        (&current - &previous).amax()
    };
    Extrapolated {
        limit: current,
        residual,
        cauchy_last,
    }
}

/// Least-squares slope of `ln y` against `ln t`, with a 2-sigma half-width.
#[derive(Debug, Clone, Copy)]
pub struct ExponentFit {
    pub slope: f64,
    pub half_width: f64,
}

/// Fit the exponent of a positive sequence directly: `y_k ~ c t_k^slope`.
pub fn fit_exponent(times: &[f64], norms: &[f64]) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(norms)
        .filter(|(_, y)| **y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Domain(
            "not enough positive samples for an exponent fit".into(),
        ));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            e * e
        })
        .sum();
    let var = if pts.len() > 2 {
        ss_res / (n - 2.0)
    } else {
        0.0
    };
    let se = (var * n / denom).sqrt();
    Ok(ExponentFit {
        slope,
        half_width: 2.0 * se,
    })
}

/// Fit the decay/growth exponent of a vector sequence from its successive
/// differences: constants (including an unknown limit) drop out, so the fit
/// sees the leading power law itself. `|y_{k+1} - y_k| ~ c t_k^slope`.
pub fn fit_exponent_from_diffs(times: &[f64], values: &[DVector<f64>]) -> Result<ExponentFit> {
    let mut ts = Vec::new();
    let mut ds = Vec::new();
    for k in 0..times.len() - 1 {
        let d = (&values[k + 1] - &values[k]).norm();
        if d > 0.0 {
            ts.push((times[k] * times[k + 1]).sqrt());
            ds.push(d);
        }
    }
    fit_exponent(&ts, &ds)
}

/// Least squares of `y ~ c0 + c1 ln t`; `c1` is the fitted log coefficient.
pub fn fit_log_coefficient(times: &[f64], values: &[f64]) -> (f64, f64) {
    let n = times.len() as f64;
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = values.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let c1 = (n * sxy - sx * sy) / denom;
    let c0 = (sy - c1 * sx) / n;
    (c0, c1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_grid_shape() {
        let ts = dyadic_times(6.25, 100.0);
        assert_eq!(ts, vec![6.25, 12.5, 25.0, 50.0, 100.0]);
    }

    #[test]
    fn recovers_power_law_limit() {
        let times = dyadic_times(10.0, 10240.0);
        let values: Vec<DVector<f64>> = times
            .iter()
            .map(|t| DVector::from_column_slice(&[3.0 + 2.0 * t.powf(-0.8), -1.0 + t.powf(-0.8)]))
            .collect();
        let out = extrapolate(&times, &values, &LimitModel::new(vec![ModelTerm::Power(0.8)]));
        assert!((out.limit[0] - 3.0).abs() < 1e-10);
        assert!((out.limit[1] + 1.0).abs() < 1e-10);
        assert!(out.residual < 1e-9);
    }

    #[test]
    fn recovers_log_corrected_limit() {
        let times = dyadic_times(100.0, 102400.0);
        let values: Vec<DVector<f64>> = times
            .iter()
            .map(|t| DVector::from_column_slice(&[5.0 + 0.7 * t.ln() / t - 0.3 / t]))
            .collect();
        let out = extrapolate(
            &times,
            &values,
            &LimitModel::new(vec![ModelTerm::PowerLog(1.0), ModelTerm::Power(1.0)]),
        );
        assert!((out.limit[0] - 5.0).abs() < 1e-9, "{}", out.limit[0]);
    }

    #[test]
    fn exponent_fit_with_constant_offset() {
        // Direct log-log fit is poisoned by a constant; the diff fit is not.
        let times = dyadic_times(100.0, 102400.0);
        let values: Vec<DVector<f64>> = times
            .iter()
            .map(|t| DVector::from_column_slice(&[3.5 - t.powf(0.25)]))
            .collect();
        let fit = fit_exponent_from_diffs(&times, &values).unwrap();
        assert!((fit.slope - 0.25).abs() < 0.01, "slope {}", fit.slope);
    }

    #[test]
    fn log_coefficient_fit() {
        let times: Vec<f64> = dyadic_times(10.0, 10240.0);
        let values: Vec<f64> = times.iter().map(|t| 2.0 + 1.5 * t.ln()).collect();
        let (c0, c1) = fit_log_coefficient(&times, &values);
        assert!((c0 - 2.0).abs() < 1e-10);
        assert!((c1 - 1.5).abs() < 1e-10);
    }
}
