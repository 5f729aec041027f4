//! Trajectory generation.
//!
//! The primary integrator is the adaptive Dormand–Prince 8(5,3) pair (the
//! Hairer DOP853 coefficients, taken from `ode_solvers`' published Butcher
//! tableau); the driver here adds accepted-step recording, collision
//! stopping, backward integration and re-integration-based dense evaluation.
//! A fixed-step 6th-order symplectic composition (triple-jump over
//! Störmer–Verlet, whose coefficients are closed-form) is available for
//! conservation studies.

use crate::error::{Error, Result};
use crate::system::{pair_stats, PhaseState, SystemSpec};
use nalgebra::DVector;
use crate::dop853_tableau as tab;

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    CollisionAt(f64),
    StepFailure(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Adaptive embedded Runge–Kutta of order 8(5,3).
    Adaptive853,
    /// Fixed-step 6th-order symplectic composition with the given step.
    Symplectic6 { dt: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Cap on the absolute step size.
    pub max_step: f64,
    /// Stop threshold on q_min for singular potentials; `None` means
    /// 1e-6 times the initial q_min.
    pub collision_radius: Option<f64>,
    pub method: Method,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            collision_radius: None,
            method: Method::Adaptive853,
            max_steps: 4_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tols(rel: f64, abs: f64) -> Self {
        IntegratorConfig {
            rel_tol: rel,
            abs_tol: abs,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::validation("integrator", "tolerances must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::validation("integrator", "max_step must be positive"));
        }
        if let Some(r) = self.collision_radius {
            if !(r > 0.0) {
                return Err(Error::validation(
                    "integrator",
                    "collision_radius must be positive",
                ));
            }
        }
        if let Method::Symplectic6 { dt } = self.method {
            if !(dt > 0.0) {
                return Err(Error::validation("integrator", "symplectic dt must be positive"));
            }
        }
        Ok(())
    }
}

/// Time-sampled flow output. Samples are the accepted integration steps, in
/// integration order (increasing for forward runs, decreasing for backward).
#[derive(Debug, Clone)]
pub struct Trajectory {
    spec: SystemSpec,
    cfg: IntegratorConfig,
    times: Vec<f64>,
    states: Vec<PhaseState>,
    energy_start: f64,
    energy_drift: f64,
    terminated: Termination,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn states(&self) -> &[PhaseState] {
        &self.states
    }
    pub fn terminated(&self) -> Termination {
        self.terminated
    }
    pub fn energy_drift(&self) -> f64 {
        self.energy_drift
    }
    pub fn energy_start(&self) -> f64 {
        self.energy_start
    }
    pub fn start_time(&self) -> f64 {
        self.times[0]
    }
    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }
    pub fn first_state(&self) -> &PhaseState {
        &self.states[0]
    }
    pub fn last_state(&self) -> &PhaseState {
        self.states.last().unwrap()
    }
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    fn forward(&self) -> bool {
        self.end_time() >= self.start_time()
    }

    /// Continuous evaluation at any time within range, by re-integration from
    /// the nearest recorded sample at full accuracy.
    pub fn dense_eval(&self, t: f64) -> Result<PhaseState> {
        let (lo, hi) = if self.forward() {
            (self.start_time(), self.end_time())
        } else {
            (self.end_time(), self.start_time())
        };
        if t < lo - 1e-12 || t > hi + 1e-12 {
            return Err(Error::validation(
                "t",
                format!("{t} outside trajectory range [{lo}, {hi}]"),
            ));
        }
        // Last recorded sample not past t in integration order.
        let idx = if self.forward() {
            match self.times.partition_point(|&x| x <= t) {
                0 => 0,
                i => i - 1,
            }
        } else {
            match self.times.partition_point(|&x| x >= t) {
                0 => 0,
                i => i - 1,
            }
        };
        let t0 = self.times[idx];
        if t == t0 {
            return Ok(self.states[idx].clone());
        }
        let run = integrate_nbody(&self.spec, &self.states[idx], t0, t, &self.cfg)?;
        match run.terminated {
            Termination::Completed => Ok(run.states.last().unwrap().clone()),
            Termination::CollisionAt(tc) => Err(Error::Collision {
                t: tc,
                q_min: 0.0,
            }),
            Termination::StepFailure(ts) => Err(Error::StepFailure { t: ts }),
        }
    }

    /// States at the given times via dense evaluation.
    pub fn sample(&self, times: &[f64]) -> Result<Vec<PhaseState>> {
        times.iter().map(|&t| self.dense_eval(t)).collect()
    }
}

struct RawRun {
    times: Vec<f64>,
    states: Vec<PhaseState>,
    terminated: Termination,
}

fn rhs(spec: &SystemSpec, y: &DVector<f64>, out: &mut DVector<f64>) {
    let m = spec.dof();
    let q = y.rows(m, m).into_owned();
    match crate::system::potential_gradient(spec, &q) {
        Ok(grad) => {
            for i in 0..m {
                out[i] = -grad[i];
            }
        }
        Err(_) => {
            // Exact collision inside a trial stage: poison the step so the
            // controller rejects it.
            for i in 0..m {
                out[i] = f64::NAN;
            }
        }
    }
    let p = y.rows(0, m).into_owned();
    let v = spec.velocities(&p);
    for i in 0..m {
        out[m + i] = v[i];
    }
}

fn split_state(spec: &SystemSpec, y: &DVector<f64>) -> PhaseState {
    let m = spec.dof();
    PhaseState::new(y.rows(0, m).into_owned(), y.rows(m, m).into_owned())
}

fn join_state(state: &PhaseState) -> DVector<f64> {
    let m = state.p.len();
    let mut y = DVector::zeros(2 * m);
    y.rows_mut(0, m).copy_from(&state.p);
    y.rows_mut(m, m).copy_from(&state.q);
    y
}

fn q_min_of(spec: &SystemSpec, state: &PhaseState) -> f64 {
    let n = spec.n();
    let d = spec.d();
    let mut q_min = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let r2: f64 = (0..d)
                .map(|a| {
                    let dq = state.q[i * d + a] - state.q[j * d + a];
                    dq * dq
                })
                .sum();
            q_min = q_min.min(r2.sqrt());
        }
    }
    q_min
}

/// Hairer's initial step size heuristic for an order-8 method.
fn initial_step(
    spec: &SystemSpec,
    y0: &DVector<f64>,
    f0: &DVector<f64>,
    t0: f64,
    posneg: f64,
    rtol: f64,
    atol: f64,
    h_max: f64,
) -> f64 {
    let n = y0.len();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..n {
        let sk = atol + rtol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(h_max) * posneg;
    let y1 = y0 + f0 * h;
    let mut f1 = DVector::zeros(n);
    rhs(spec, &y1, &mut f1);
    let mut der2 = 0.0;
    for i in 0..n {
        let sk = atol + rtol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    der2 = der2.sqrt() / h.abs();
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h.abs() * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(1.0 / 8.0)
    };
    (h.abs() * 100.0).min(h1).min(h_max) * posneg
}

fn integrate_dop853(
    spec: &SystemSpec,
    x0: &PhaseState,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    stop_radius: f64,
) -> Result<RawRun> {
    let dim = 2 * spec.dof();
    let posneg = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut y = join_state(x0);
    let mut x = t0;
    let mut times = vec![t0];
    let mut states = vec![x0.clone()];

    let mut k: Vec<DVector<f64>> = vec![DVector::zeros(dim); 12];
    rhs(spec, &y, &mut k[0]);

    let mut h = initial_step(
        spec, &y, &k[0], t0, posneg, cfg.rel_tol, cfg.abs_tol, cfg.max_step,
    );
    let uround = f64::EPSILON;
    let mut facold: f64 = 1e-4;
    let expo1 = 1.0 / 8.0;
    let (safe, fac_min, fac_max) = (0.9, 1.0 / 3.0, 6.0);
    let mut last = false;
    let mut reject = false;

    for _step in 0..cfg.max_steps {
        if 0.1 * h.abs() <= uround * x.abs() {
            return Ok(RawRun {
                times,
                states,
                terminated: Termination::StepFailure(x),
            });
        }
        if (x + 1.01 * h - t1) * posneg > 0.0 {
            h = t1 - x;
            last = true;
        }

        // 12 stages.
        for s in 2..=12 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s - 1) {
                let a = tab::A[s - 2][j];
                if a != 0.0 {
                    ys += kj * (h * a);
                }
            }
            let mut ks = DVector::zeros(dim);
            rhs(spec, &ys, &mut ks);
            k[s - 1] = ks;
        }

        // 8th-order solution and the two embedded error estimates.
        let mut bsum = DVector::zeros(dim);
        for (i, ki) in k.iter().enumerate() {
            let b = tab::B[i];
            if b != 0.0 {
                bsum += ki * b;
            }
        }
        let y8 = &y + &bsum * h;

        let mut err_est = DVector::zeros(dim);
        for (i, ki) in k.iter().enumerate() {
            let e = tab::E[i];
            if e != 0.0 {
                err_est += ki * e;
            }
        }
        let err_bhh = &bsum
            - &k[0] * tab::BHH[0]
            - &k[8] * tab::BHH[1]
            - &k[11] * tab::BHH[2];

        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..dim {
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y8[i].abs());
            err5 += (err_est[i] / sc).powi(2);
            err3 += (err_bhh[i] / sc).powi(2);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err5 / (deno * dim as f64).sqrt();

        if !err.is_finite() {
            // Stage blew up (near-collision); retry with a much smaller step.
            h *= 0.25;
            last = false;
            reject = true;
            continue;
        }

        if err <= 1.0 {
            // Accept.
            facold = err.max(1e-4);
            let fac11 = err.powf(expo1);
            let mut fac = fac11 / facold.powf(0.0);
            fac = (fac / safe).clamp(1.0 / fac_max, 1.0 / fac_min);
            let mut h_new = h / fac;
            if reject {
                h_new = if posneg > 0.0 {
                    h_new.min(h.abs())
                } else {
                    -h_new.abs().min(h.abs())
                };
            }
            reject = false;

            rhs(spec, &y8, &mut k[0]);
            x += h;
            y = y8;
            let state = split_state(spec, &y);
            times.push(x);
            states.push(state);

            if stop_radius > 0.0 {
                let qm = q_min_of(spec, states.last().unwrap());
                if qm < stop_radius {
                    return Ok(RawRun {
                        times,
                        states,
                        terminated: Termination::CollisionAt(x),
                    });
                }
            }
            if last {
                return Ok(RawRun {
                    times,
                    states,
                    terminated: Termination::Completed,
                });
            }
            h = if h_new.abs() > cfg.max_step {
                cfg.max_step * posneg
            } else {
                h_new
            };
        } else {
            let fac11 = err.powf(expo1);
            h /= (fac11 / safe).min(1.0 / fac_min);
            reject = true;
            last = false;
        }
    }
    Err(Error::NonConvergence {
        what: format!("integration reached the step budget at t = {x:.6e}"),
        residual: (t1 - x).abs(),
        tol: 0.0,
    })
}

fn leapfrog(spec: &SystemSpec, state: &mut PhaseState, h: f64) -> Result<()> {
    let grad = crate::system::potential_gradient(spec, &state.q)?;
    state.p -= grad * (0.5 * h);
    let v = spec.velocities(&state.p);
    state.q += v * h;
    let grad = crate::system::potential_gradient(spec, &state.q)?;
    state.p -= grad * (0.5 * h);
    Ok(())
}

/// Triple-jump composition: order 2 -> 4 -> 6 with closed-form coefficients.
fn symplectic6_step(spec: &SystemSpec, state: &mut PhaseState, h: f64) -> Result<()> {
    let g4 = 1.0 / (2.0 - 2f64.powf(1.0 / 3.0));
    let g6 = 1.0 / (2.0 - 2f64.powf(1.0 / 5.0));
    let s4 = |spec: &SystemSpec, st: &mut PhaseState, hh: f64| -> Result<()> {
        leapfrog(spec, st, g4 * hh)?;
        leapfrog(spec, st, (1.0 - 2.0 * g4) * hh)?;
        leapfrog(spec, st, g4 * hh)
    };
    s4(spec, state, g6 * h)?;
    s4(spec, state, (1.0 - 2.0 * g6) * h)?;
    s4(spec, state, g6 * h)
}

fn integrate_symplectic(
    spec: &SystemSpec,
    x0: &PhaseState,
    t0: f64,
    t1: f64,
    dt: f64,
    cfg: &IntegratorConfig,
    stop_radius: f64,
) -> Result<RawRun> {
    let posneg = if t1 >= t0 { 1.0 } else { -1.0 };
    let h = dt * posneg;
    let mut state = x0.clone();
    let mut t = t0;
    let mut times = vec![t0];
    let mut states = vec![x0.clone()];
    let mut steps = 0usize;
    while (t1 - t) * posneg > 1e-14 * t1.abs().max(1.0) {
        let step = if ((t + h) - t1) * posneg > 0.0 { t1 - t } else { h };
        if let Err(e) = symplectic6_step(spec, &mut state, step) {
            return match e {
                Error::Collision { .. } => Ok(RawRun {
                    times,
                    states,
                    terminated: Termination::CollisionAt(t),
                }),
                other => Err(other),
            };
        }
        t += step;
        times.push(t);
        states.push(state.clone());
        if stop_radius > 0.0 && q_min_of(spec, &state) < stop_radius {
            return Ok(RawRun {
                times,
                states,
                terminated: Termination::CollisionAt(t),
            });
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::NonConvergence {
                what: "symplectic step budget exhausted".into(),
                residual: (t1 - t).abs(),
                tol: 0.0,
            });
        }
    }
    Ok(RawRun {
        times,
        states,
        terminated: Termination::Completed,
    })
}

fn integrate_nbody(
    spec: &SystemSpec,
    x0: &PhaseState,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<RawRun> {
    let stop_radius = if spec.potential().singular_at_collision() {
        cfg.collision_radius
            .unwrap_or_else(|| 1e-6 * q_min_of(spec, x0))
    } else {
        0.0
    };
    match cfg.method {
        Method::Adaptive853 => integrate_dop853(spec, x0, t0, t1, cfg, stop_radius),
        Method::Symplectic6 { dt } => {
            integrate_symplectic(spec, x0, t0, t1, dt, cfg, stop_radius)
        }
    }
}

/// Flow the n-body system from `x0` over `t_span` (either order).
pub fn flow(
    spec: &SystemSpec,
    x0: &PhaseState,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    x0.validate(spec)?;
    let (t0, t1) = t_span;
    let energy_start = spec.total_energy(x0)?;
    if t0 == t1 {
        return Ok(Trajectory {
            spec: spec.clone(),
            cfg: *cfg,
            times: vec![t0],
            states: vec![x0.clone()],
            energy_start,
            energy_drift: 0.0,
            terminated: Termination::Completed,
        });
    }
    let run = integrate_nbody(spec, x0, t0, t1, cfg)?;
    let mut drift = 0.0f64;
    for s in &run.states {
        if let Ok(e) = spec.total_energy(s) {
            drift = drift.max((e - energy_start).abs());
        }
    }
    Ok(Trajectory {
        spec: spec.clone(),
        cfg: *cfg,
        times: run.times,
        states: run.states,
        energy_start,
        energy_drift: drift,
        terminated: run.terminated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::SystemSpec;

    fn kepler_pair() -> SystemSpec {
        SystemSpec::newtonian(2, vec![1.0, 1.0]).unwrap()
    }

    fn hyperbolic_state() -> PhaseState {
        // Planar two-body, clearly positive energy.
        PhaseState::from_slices(&[0.8, 0.1, -0.8, -0.1], &[-6.0, 1.0, 6.0, -1.0])
    }

    #[test]
    fn free_motion_is_exact() {
        let spec = SystemSpec::free(2, 2, vec![2.0, 1.0]).unwrap();
        let x0 = PhaseState::from_slices(&[4.0, 0.0, -1.0, 2.0], &[0.0, 0.0, 3.0, 1.0]);
        let traj = flow(&spec, &x0, (0.0, 5.0), &IntegratorConfig::default()).unwrap();
        let end = traj.last_state();
        // q1 advances by (4/2) * 5 = 10 in the first coordinate.
        assert!((end.q[0] - 10.0).abs() < 1e-9);
        assert!((end.p[0] - 4.0).abs() < 1e-12);
        assert_eq!(traj.terminated(), Termination::Completed);
    }

    #[test]
    fn energy_conservation_hyperbolic() {
        let spec = kepler_pair();
        let traj = flow(
            &spec,
            &hyperbolic_state(),
            (0.0, 100.0),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.terminated(), Termination::Completed);
        assert!(
            traj.energy_drift() < 1e-10,
            "drift {}",
            traj.energy_drift()
        );
    }

    #[test]
    fn time_reversal() {
        let spec = kepler_pair();
        let cfg = IntegratorConfig::default();
        let x0 = hyperbolic_state();
        let fwd = flow(&spec, &x0, (0.0, 40.0), &cfg).unwrap();
        let back = flow(&spec, fwd.last_state(), (40.0, 0.0), &cfg).unwrap();
        let err = back.last_state().distance_max(&x0);
        assert!(err < 100.0 * cfg.rel_tol, "reversal error {err}");
    }

    #[test]
    fn total_linear_momentum_conserved() {
        let spec = SystemSpec::newtonian(2, vec![1.0, 2.0, 0.5]).unwrap();
        let x0 = PhaseState::from_slices(
            &[0.5, 0.2, -0.6, 0.3, 0.1, -0.5],
            &[-4.0, 0.0, 4.0, 1.0, 0.0, -5.0],
        );
        let traj = flow(&spec, &x0, (0.0, 20.0), &IntegratorConfig::default()).unwrap();
        let p0 = spec.total_momentum(&x0.p);
        let p1 = spec.total_momentum(&traj.last_state().p);
        for (a, b) in p0.iter().zip(&p1) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn collision_stop_head_on() {
        let spec = kepler_pair();
        // Two bodies aimed straight at each other.
        let x0 = PhaseState::from_slices(&[0.5, 0.0, -0.5, 0.0], &[-2.0, 0.0, 2.0, 0.0]);
        let traj = flow(&spec, &x0, (0.0, 50.0), &IntegratorConfig::default()).unwrap();
        match traj.terminated() {
            Termination::CollisionAt(t) => assert!(t > 0.0 && t < 50.0),
            other => panic!("expected collision, got {other:?}"),
        }
    }

    #[test]
    fn dense_eval_consistent() {
        let spec = kepler_pair();
        let traj = flow(
            &spec,
            &hyperbolic_state(),
            (0.0, 30.0),
            &IntegratorConfig::default(),
        )
        .unwrap();
        let direct = flow(
            &spec,
            &hyperbolic_state(),
            (0.0, 17.3),
            &IntegratorConfig::default(),
        )
        .unwrap();
        let dense = traj.dense_eval(17.3).unwrap();
        assert!(dense.distance_max(direct.last_state()) < 1e-8);
    }

    #[test]
    fn symplectic_energy_bounded() {
        let spec = kepler_pair();
        let cfg = IntegratorConfig {
            method: Method::Symplectic6 { dt: 0.01 },
            ..Default::default()
        };
        let traj = flow(&spec, &hyperbolic_state(), (0.0, 50.0), &cfg).unwrap();
        assert!(traj.energy_drift() < 1e-9, "drift {}", traj.energy_drift());
    }

    #[test]
    fn adaptive_convergence_order() {
        // Halving the tolerance budget should not degrade accuracy; compare
        // against a much tighter reference run.
        let spec = kepler_pair();
        let x0 = hyperbolic_state();
        let tight = IntegratorConfig::with_tols(1e-13, 1e-13);
        let reference = flow(&spec, &x0, (0.0, 25.0), &tight).unwrap();
        let loose = IntegratorConfig::with_tols(1e-8, 1e-8);
        let run = flow(&spec, &x0, (0.0, 25.0), &loose).unwrap();
        let err = run.last_state().distance_max(reference.last_state());
        assert!(err < 1e-6, "loose-tolerance error {err}");
    }
}
