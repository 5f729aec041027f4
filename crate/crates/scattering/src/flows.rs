//! The three dynamics: the numerical n-body flow, the closed-form free flow,
//! and the time-dependent Dollard comparison flow.
//!
//! The Dollard Hamiltonian `K(p) + V(<t> M^{-1} p)` is independent of q, so
//! its flow moves positions by `t v + W(t; p)` with
//! `W(t; p) = ∫_0^t <s> M^{-1} (grad V)(<s> M^{-1} p) ds`. For homogeneous
//! potentials W factorizes as `f_alpha(t) M^{-1} grad V(M^{-1} p)` with
//! `f_alpha(t) = ∫_0^t <s>^{-alpha} ds`.

use crate::error::{Error, Result};
use crate::integrate::{flow, IntegratorConfig, Trajectory};
use crate::quad;
use crate::system::{pair_stats, smooth_abs, PhaseState, PotentialModel, SystemSpec};
use nalgebra::DVector;

/// Default floor on the minimum pair speed of `M^{-1} p` below which the
/// Dollard flow is considered degenerate.
pub const VMIN_FLOOR: f64 = 1e-9;

/// Numerical n-body flow over `t_span` (backward integration allowed).
pub fn nbody_flow(
    spec: &SystemSpec,
    x0: &PhaseState,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    flow(spec, x0, t_span, cfg)
}

/// Free flow: `(p, q) -> (p, q + t M^{-1} p)`.
pub fn free_flow(spec: &SystemSpec, x0: &PhaseState, t: f64) -> PhaseState {
    let v = spec.velocities(&x0.p);
    PhaseState::new(x0.p.clone(), &x0.q + v * t)
}

/// `f_alpha(t) = ∫_0^t <s>^{-alpha} ds` for `alpha` in (0, 1]: odd in t,
/// evaluated by the hypergeometric series for |t| < 1, the `asinh` closed
/// form at alpha = 1, and adaptive quadrature otherwise.
pub fn f_alpha(alpha: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "f_alpha requires alpha in (0, 1], got {alpha}"
        )));
    }
    bracket_integral(alpha, t)
}

/// Same integral for any positive alpha (used internally by the Dollard
/// machinery, which is defined for all long-range exponents).
pub(crate) fn bracket_integral(alpha: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let a = t.abs();
    let value = if (alpha - 1.0).abs() < 1e-14 {
        a.asinh()
    } else if a < 1.0 {
        hypergeometric_series(alpha, a)
    } else {
        quad::integrate(|s| smooth_abs(s).powf(-alpha), 0.0, a, 1e-13)?
    };
    Ok(value * t.signum())
}

/// `t * 2F1(1/2, alpha/2; 3/2; -t^2)` by direct series, |t| < 1.
fn hypergeometric_series(alpha: f64, t: f64) -> f64 {
    let z = -t * t;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..500 {
        let kf = k as f64;
        term *= (0.5 + kf) * (alpha / 2.0 + kf) / ((1.5 + kf) * (kf + 1.0)) * z;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    t * sum
}

fn dollard_velocity_check(spec: &SystemSpec, p: &DVector<f64>, floor: f64) -> Result<DVector<f64>> {
    let v = spec.velocities(p);
    let probe = PhaseState::new(p.clone(), v.clone());
    let stats = pair_stats(spec, &probe).map_err(|_| Error::DegenerateVelocity {
        v_min: 0.0,
        floor,
    })?;
    // q-part of `probe` is the velocity configuration: its q_min is the
    // minimal pair speed of M^{-1} p.
    if stats.q_min < floor {
        return Err(Error::DegenerateVelocity {
            v_min: stats.q_min,
            floor,
        });
    }
    Ok(v)
}

/// Dollard phase correction `W(t; p)`.
///
/// For homogeneous potentials this is the exact factorized form; otherwise
/// the defining integral is evaluated by adaptive quadrature.
pub fn dollard_w(spec: &SystemSpec, p: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    dollard_w_with_floor(spec, p, t, VMIN_FLOOR)
}

pub fn dollard_w_with_floor(
    spec: &SystemSpec,
    p: &DVector<f64>,
    t: f64,
    floor: f64,
) -> Result<DVector<f64>> {
    if spec.potential().is_zero() {
        return Ok(DVector::zeros(spec.dof()));
    }
    let v = dollard_velocity_check(spec, p, floor)?;
    match spec.potential() {
        PotentialModel::Homogeneous { alpha, .. } => {
            let grad = crate::system::potential_gradient(spec, &v)?;
            let f = bracket_integral(*alpha, t)?;
            Ok(spec.velocities(&grad) * f)
        }
        PotentialModel::Smooth { .. } => {
            let spec2 = spec.clone();
            quad::integrate_vec(
                move |s| {
                    let scaled = &v * smooth_abs(s);
                    match crate::system::potential_gradient(&spec2, &scaled) {
                        Ok(g) => spec2.velocities(&g) * smooth_abs(s),
                        Err(_) => DVector::from_element(spec2.dof(), f64::NAN),
                    }
                },
                0.0,
                t,
                1e-12,
            )
        }
    }
}

/// Dollard flow from initial time `s` to final time `t`:
/// `(p, q) -> (p, q + (t v + W(t; p)) - (s v + W(s; p)))`.
pub fn dollard_flow(spec: &SystemSpec, x: &PhaseState, s: f64, t: f64) -> Result<PhaseState> {
    let v = dollard_velocity_check(spec, &x.p, VMIN_FLOOR)?;
    let w_t = dollard_w(spec, &x.p, t)?;
    let w_s = dollard_w(spec, &x.p, s)?;
    let q = &x.q + &v * (t - s) + w_t - w_s;
    Ok(PhaseState::new(x.p.clone(), q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::SystemSpec;

    #[test]
    fn free_flow_group_law() {
        let spec = SystemSpec::free(2, 2, vec![2.0, 1.0]).unwrap();
        let x0 = PhaseState::from_slices(&[4.0, -1.0, 0.5, 2.0], &[0.0, 1.0, 3.0, -1.0]);
        let a = free_flow(&spec, &free_flow(&spec, &x0, 2.5), 4.0);
        let b = free_flow(&spec, &x0, 6.5);
        assert!(a.distance_max(&b) < 1e-14);
        assert!(free_flow(&spec, &x0, 0.0).distance_max(&x0) == 0.0);
    }

    #[test]
    fn f_alpha_closed_form_and_crosscheck() {
        // f_1(1) = asinh(1) = ln(1 + sqrt 2)
        let got = f_alpha(1.0, 1.0).unwrap();
        assert!((got - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-15);
        assert_eq!(f_alpha(0.7, 0.0).unwrap(), 0.0);
        // Series vs quadrature on the overlap near |t| = 1.
        for alpha in [0.6, 0.75, 0.9] {
            for t in [0.5, 0.9, 0.99] {
                let series = hypergeometric_series(alpha, t);
                let quadr =
                    quad::integrate(|s| smooth_abs(s).powf(-alpha), 0.0, t, 1e-14).unwrap();
                assert!(
                    (series - quadr).abs() < 1e-10,
                    "alpha {alpha} t {t}: {series} vs {quadr}"
                );
            }
        }
        // alpha = 0.75, t = 10: driver agrees with brute quadrature to 1e-8.
        let v = f_alpha(0.75, 10.0).unwrap();
        let q = quad::integrate(|s| smooth_abs(s).powf(-0.75), 0.0, 10.0, 1e-14).unwrap();
        assert!((v - q).abs() < 1e-8);
        assert!(f_alpha(1.5, 1.0).is_err());
        assert!(f_alpha(0.0, 1.0).is_err());
    }

    #[test]
    fn f_alpha_is_odd() {
        for alpha in [0.55, 0.8, 1.0] {
            for t in [0.3, 1.7, 42.0] {
                let plus = f_alpha(alpha, t).unwrap();
                let minus = f_alpha(alpha, -t).unwrap();
                assert!((plus + minus).abs() < 1e-14 * plus.abs().max(1.0));
            }
        }
    }

    #[test]
    fn dollard_w_zero_potential() {
        let spec = SystemSpec::free(2, 2, vec![1.0, 1.0]).unwrap();
        let p = DVector::from_column_slice(&[1.0, 0.0, -1.0, 0.0]);
        assert_eq!(dollard_w(&spec, &p, 10.0).unwrap().amax(), 0.0);
    }

    #[test]
    fn dollard_w_homogeneous_matches_quadrature() {
        // alpha = 0.8 Newtonian-type coefficients: factorized form against
        // direct quadrature of the defining integral.
        let spec =
            SystemSpec::homogeneous_uniform(2, 3, vec![1.0, 2.0], 0.8, -1.0).unwrap();
        let p = DVector::from_column_slice(&[1.0, 0.2, 0.0, -0.5, 0.1, 0.3]);
        let w = dollard_w(&spec, &p, 100.0).unwrap();
        let v = spec.velocities(&p);
        let direct = quad::integrate_vec(
            |s| {
                let scaled = &v * smooth_abs(s);
                let g = crate::system::potential_gradient(&spec, &scaled).unwrap();
                spec.velocities(&g) * smooth_abs(s)
            },
            0.0,
            100.0,
            1e-13,
        )
        .unwrap();
        assert!((&w - &direct).amax() < 1e-8, "{}", (&w - &direct).amax());
    }

    #[test]
    fn dollard_w_alpha_one_uses_asinh() {
        let spec = SystemSpec::newtonian(3, vec![1.0, 1.0]).unwrap();
        let p = DVector::from_column_slice(&[1.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        let v = spec.velocities(&p);
        let grad = crate::system::potential_gradient(&spec, &v).unwrap();
        let expected = spec.velocities(&grad) * 50.0f64.asinh();
        let w = dollard_w(&spec, &p, 50.0).unwrap();
        assert!((&w - &expected).amax() < 1e-12);
    }

    #[test]
    fn dollard_degenerate_velocity() {
        let spec = SystemSpec::newtonian(2, vec![1.0, 1.0]).unwrap();
        let p = DVector::from_column_slice(&[1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            dollard_w(&spec, &p, 1.0),
            Err(Error::DegenerateVelocity { .. })
        ));
    }

    #[test]
    fn dollard_groupoid_law() {
        let spec = SystemSpec::newtonian(2, vec![1.0, 1.0]).unwrap();
        let x = PhaseState::from_slices(&[0.7, 0.1, -0.7, -0.1], &[-3.0, 0.5, 3.0, -0.5]);
        // identity at s = t
        let id = dollard_flow(&spec, &x, 3.0, 3.0).unwrap();
        assert!(id.distance_max(&x) < 1e-15);
        // composition (0 -> 3 -> 7) equals (0 -> 7)
        let step1 = dollard_flow(&spec, &x, 0.0, 3.0).unwrap();
        let step2 = dollard_flow(&spec, &step1, 3.0, 7.0).unwrap();
        let direct = dollard_flow(&spec, &x, 0.0, 7.0).unwrap();
        assert!(step2.distance_max(&direct) < 1e-12);
    }

    #[test]
    fn dollard_zero_potential_is_free_flow() {
        let spec = SystemSpec::free(2, 1, vec![1.0, 2.0]).unwrap();
        let x = PhaseState::from_slices(&[1.0, -0.5], &[0.0, 5.0]);
        let a = dollard_flow(&spec, &x, 2.0, 9.0).unwrap();
        let b = free_flow(&spec, &x, 7.0);
        assert!(a.distance_max(&b) < 1e-14);
    }

    #[test]
    fn dollard_momentum_bit_identical() {
        let spec = SystemSpec::newtonian(2, vec![1.0, 1.5]).unwrap();
        let x = PhaseState::from_slices(&[0.7, 0.1, -0.7, -0.1], &[-3.0, 0.5, 3.0, -0.5]);
        let y = dollard_flow(&spec, &x, 0.0, 12.0).unwrap();
        assert_eq!(x.p, y.p);
    }

    #[test]
    fn dollard_difference_decay() {
        // |W(t + 1, p) - W(t, p)| decreasing to < 1e-6 by t = 1e4 (alpha = 1).
        let spec = SystemSpec::newtonian(2, vec![1.0, 1.0]).unwrap();
        let p = DVector::from_column_slice(&[0.5, 0.2, -0.5, -0.2]);
        let mut prev = f64::INFINITY;
        let mut t = 10.0;
        while t <= 1e4 {
            let d = (dollard_w(&spec, &p, t + 1.0).unwrap() - dollard_w(&spec, &p, t).unwrap())
                .amax();
            assert!(d < prev, "not decreasing at t = {t}");
            prev = d;
            t *= 10.0;
        }
        assert!(prev < 1e-6, "final difference {prev}");
    }
}
