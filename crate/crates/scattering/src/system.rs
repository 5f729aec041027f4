//! Problem definition: masses, pair potentials, seminorms, pairwise
//! statistics, energies and relative accelerations.
//!
//! Conventions: a configuration `q` is a flat vector in R^{dn} with particle
//! `i` occupying `q[i*d .. (i+1)*d]`, momenta likewise. Velocities are always
//! derived as `v = M^{-1} p` and never stored.

use crate::error::{Error, Result};
use crate::radial::{multi_indices, RadialPoly};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use std::fmt;
use std::sync::Arc;

/// Smoothed absolute value `<t> = sqrt(t^2 + 1)`.
pub fn smooth_abs(t: f64) -> f64 {
    (t * t + 1.0).sqrt()
}

/// A smooth (non-singular) pair potential with analytic first and second
/// derivatives. Numerical differentiation is never used inside the dynamics.
pub trait SmoothPair: Send + Sync {
    fn value(&self, q: &[f64]) -> f64;
    fn gradient(&self, q: &[f64]) -> Vec<f64>;
    /// Dense Hessian, row-major d x d.
    fn hessian(&self, q: &[f64]) -> Vec<f64>;
}

/// Gaussian bump `A exp(-|Q|^2 / w^2)`: decays faster than any power, so it
/// is short range for every declared exponent.
pub struct GaussianBump {
    pub amplitude: f64,
    pub width: f64,
}

impl SmoothPair for GaussianBump {
    fn value(&self, q: &[f64]) -> f64 {
        let r2: f64 = q.iter().map(|x| x * x).sum();
        self.amplitude * (-r2 / (self.width * self.width)).exp()
    }
    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let w2 = self.width * self.width;
        let v = self.value(q);
        q.iter().map(|x| -2.0 * x * v / w2).collect()
    }
    fn hessian(&self, q: &[f64]) -> Vec<f64> {
        let d = q.len();
        let w2 = self.width * self.width;
        let v = self.value(q);
        let mut h = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                let mut e = 4.0 * q[a] * q[b] * v / (w2 * w2);
                if a == b {
                    e -= 2.0 * v / w2;
                }
                h[a * d + b] = e;
            }
        }
        h
    }
}

/// The pair-potential model of a system.
#[derive(Clone)]
pub enum PotentialModel {
    /// `V_ij(Q) = I_ij / |Q|^alpha` with a symmetric, zero-diagonal
    /// coefficient matrix.
    Homogeneous {
        alpha: f64,
        coefficients: DMatrix<f64>,
    },
    /// A shared smooth pair function scaled per pair, with declared decay
    /// exponent `alpha` and smoothness order `k`.
    Smooth {
        alpha: f64,
        k: usize,
        coefficients: DMatrix<f64>,
        pair: Arc<dyn SmoothPair>,
    },
}

impl fmt::Debug for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialModel::Homogeneous { alpha, .. } => {
                write!(f, "Homogeneous {{ alpha: {alpha} }}")
            }
            PotentialModel::Smooth { alpha, k, .. } => {
                write!(f, "Smooth {{ alpha: {alpha}, k: {k} }}")
            }
        }
    }
}

impl PotentialModel {
    pub fn alpha(&self) -> f64 {
        match self {
            PotentialModel::Homogeneous { alpha, .. } => *alpha,
            PotentialModel::Smooth { alpha, .. } => *alpha,
        }
    }

    pub fn is_short_range(&self) -> bool {
        self.alpha() > 1.0
    }

    pub fn singular_at_collision(&self) -> bool {
        match self {
            PotentialModel::Homogeneous { coefficients, .. } => {
                coefficients.iter().any(|c| *c != 0.0)
            }
            PotentialModel::Smooth { .. } => false,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialModel::Homogeneous { coefficients, .. } => {
                coefficients.iter().all(|c| *c == 0.0)
            }
            PotentialModel::Smooth { coefficients, .. } => {
                coefficients.iter().all(|c| *c == 0.0)
            }
        }
    }

    fn coefficients(&self) -> &DMatrix<f64> {
        match self {
            PotentialModel::Homogeneous { coefficients, .. } => coefficients,
            PotentialModel::Smooth { coefficients, .. } => coefficients,
        }
    }
}

/// Immutable problem definition: particle count, dimension, masses and the
/// potential model.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    d: usize,
    masses: Vec<f64>,
    potential: PotentialModel,
}

impl SystemSpec {
    pub fn new(d: usize, masses: Vec<f64>, potential: PotentialModel) -> Result<Self> {
        if d < 1 {
            return Err(Error::validation("d", "space dimension must be >= 1"));
        }
        if masses.len() < 2 {
            return Err(Error::validation("masses", "need at least two particles"));
        }
        if let Some(m) = masses.iter().find(|m| !(**m > 0.0)) {
            return Err(Error::validation(
                "masses",
                format!("mass {m} is not strictly positive"),
            ));
        }
        let n = masses.len();
        let c = potential.coefficients();
        if c.nrows() != n || c.ncols() != n {
            return Err(Error::validation(
                "potential.coefficients",
                format!("expected {n}x{n} matrix, got {}x{}", c.nrows(), c.ncols()),
            ));
        }
        for i in 0..n {
            if c[(i, i)] != 0.0 {
                return Err(Error::validation(
                    "potential.coefficients",
                    "diagonal entries must vanish",
                ));
            }
            for j in 0..n {
                if c[(i, j)] != c[(j, i)] {
                    return Err(Error::validation(
                        "potential.coefficients",
                        "matrix must be symmetric",
                    ));
                }
            }
        }
        if !(potential.alpha() > 0.0) {
            return Err(Error::validation("potential.alpha", "must be positive"));
        }
        Ok(SystemSpec {
            d,
            masses,
            potential,
        })
    }

    /// Homogeneous pair system with one coefficient for every pair.
    pub fn homogeneous_uniform(
        n: usize,
        d: usize,
        masses: Vec<f64>,
        alpha: f64,
        coupling: f64,
    ) -> Result<Self> {
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    c[(i, j)] = coupling;
                }
            }
        }
        SystemSpec::new(d, masses, PotentialModel::Homogeneous {
            alpha,
            coefficients: c,
        })
    }

    /// Gravitational coefficients `I_ij = -m_i m_j` (units G = 1).
    pub fn newtonian(d: usize, masses: Vec<f64>) -> Result<Self> {
        let n = masses.len();
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    c[(i, j)] = -masses[i] * masses[j];
                }
            }
        }
        SystemSpec::new(d, masses, PotentialModel::Homogeneous {
            alpha: 1.0,
            coefficients: c,
        })
    }

    /// Non-interacting system (zero potential).
    pub fn free(n: usize, d: usize, masses: Vec<f64>) -> Result<Self> {
        SystemSpec::homogeneous_uniform(n, d, masses, 1.0, 0.0)
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }
    pub fn d(&self) -> usize {
        self.d
    }
    /// Configuration-space dimension d*n.
    pub fn dof(&self) -> usize {
        self.d * self.masses.len()
    }
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
    pub fn potential(&self) -> &PotentialModel {
        &self.potential
    }
    pub fn alpha(&self) -> f64 {
        self.potential.alpha()
    }

    pub fn m_min(&self) -> f64 {
        self.masses.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    pub fn m_max(&self) -> f64 {
        self.masses.iter().cloned().fold(0.0, f64::max)
    }
    /// Operator norm of the inverse mass matrix, `1 / m_min`.
    pub fn minv_norm(&self) -> f64 {
        1.0 / self.m_min()
    }

    /// v = M^{-1} p.
    pub fn velocities(&self, p: &DVector<f64>) -> DVector<f64> {
        let d = self.d;
        let mut v = p.clone();
        for (i, m) in self.masses.iter().enumerate() {
            for a in 0..d {
                v[i * d + a] /= m;
            }
        }
        v
    }

    pub fn momenta_of_velocity(&self, v: &DVector<f64>) -> DVector<f64> {
        let d = self.d;
        let mut p = v.clone();
        for (i, m) in self.masses.iter().enumerate() {
            for a in 0..d {
                p[i * d + a] *= m;
            }
        }
        p
    }

    pub fn kinetic_energy(&self, p: &DVector<f64>) -> f64 {
        let d = self.d;
        let mut k = 0.0;
        for (i, m) in self.masses.iter().enumerate() {
            let mut s = 0.0;
            for a in 0..d {
                s += p[i * d + a] * p[i * d + a];
            }
            k += s / (2.0 * m);
        }
        k
    }

    pub fn total_energy(&self, state: &PhaseState) -> Result<f64> {
        Ok(self.kinetic_energy(&state.p) + potential_energy(self, &state.q)?)
    }

    /// Total linear momentum, a d-vector.
    pub fn total_momentum(&self, p: &DVector<f64>) -> Vec<f64> {
        let d = self.d;
        let mut out = vec![0.0; d];
        for i in 0..self.n() {
            for a in 0..d {
                out[a] += p[i * d + a];
            }
        }
        out
    }

    fn pair_separation(&self, q: &DVector<f64>, i: usize, j: usize) -> Vec<f64> {
        let d = self.d;
        (0..d).map(|a| q[i * d + a] - q[j * d + a]).collect()
    }

    /// Value of V_ij at separation Q.
    pub fn pair_value(&self, i: usize, j: usize, sep: &[f64]) -> f64 {
        let c = self.potential.coefficients()[(i, j)];
        if c == 0.0 {
            return 0.0;
        }
        match &self.potential {
            PotentialModel::Homogeneous { alpha, .. } => {
                let r2: f64 = sep.iter().map(|x| x * x).sum();
                c * r2.powf(-alpha / 2.0)
            }
            PotentialModel::Smooth { pair, .. } => c * pair.value(sep),
        }
    }

    /// Gradient of V_ij with respect to the separation Q.
    pub fn pair_gradient(&self, i: usize, j: usize, sep: &[f64]) -> Vec<f64> {
        let c = self.potential.coefficients()[(i, j)];
        if c == 0.0 {
            return vec![0.0; sep.len()];
        }
        match &self.potential {
            PotentialModel::Homogeneous { alpha, .. } => {
                let r2: f64 = sep.iter().map(|x| x * x).sum();
                let factor = -alpha * c * r2.powf(-(alpha + 2.0) / 2.0);
                sep.iter().map(|x| factor * x).collect()
            }
            PotentialModel::Smooth { pair, .. } => {
                pair.gradient(sep).into_iter().map(|g| c * g).collect()
            }
        }
    }

    /// Action of the Hessian of V_ij (at separation Q) on a d-vector.
    pub fn pair_hessian_apply(&self, i: usize, j: usize, sep: &[f64], w: &[f64]) -> Vec<f64> {
        let c = self.potential.coefficients()[(i, j)];
        let d = sep.len();
        if c == 0.0 {
            return vec![0.0; d];
        }
        match &self.potential {
            PotentialModel::Homogeneous { alpha, .. } => {
                let r2: f64 = sep.iter().map(|x| x * x).sum();
                let qw: f64 = sep.iter().zip(w).map(|(x, y)| x * y).sum();
                let f1 = -alpha * c * r2.powf(-(alpha + 2.0) / 2.0);
                let f2 = alpha * (alpha + 2.0) * c * r2.powf(-(alpha + 4.0) / 2.0) * qw;
                (0..d).map(|a| f1 * w[a] + f2 * sep[a]).collect()
            }
            PotentialModel::Smooth { pair, .. } => {
                let h = pair.hessian(sep);
                (0..d)
                    .map(|a| c * (0..d).map(|b| h[a * d + b] * w[b]).sum::<f64>())
                    .collect()
            }
        }
    }
}

/// One point of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub p: DVector<f64>,
    pub q: DVector<f64>,
}

impl PhaseState {
    pub fn new(p: DVector<f64>, q: DVector<f64>) -> Self {
        PhaseState { p, q }
    }

    pub fn from_slices(p: &[f64], q: &[f64]) -> Self {
        PhaseState {
            p: DVector::from_column_slice(p),
            q: DVector::from_column_slice(q),
        }
    }

    pub fn validate(&self, spec: &SystemSpec) -> Result<()> {
        let dof = spec.dof();
        if self.p.len() != dof || self.q.len() != dof {
            return Err(Error::validation(
                "state",
                format!("expected {dof} components, got p:{} q:{}", self.p.len(), self.q.len()),
            ));
        }
        if self.p.iter().chain(self.q.iter()).any(|x| !x.is_finite()) {
            return Err(Error::validation("state", "non-finite entry"));
        }
        if spec.potential().singular_at_collision() {
            let stats = pair_stats_unchecked(spec, self);
            if stats.q_min == 0.0 {
                return Err(Error::Collision {
                    t: 0.0,
                    q_min: 0.0,
                });
            }
        }
        Ok(())
    }

    /// Shift all velocities by a common d-vector (Galilean boost).
    pub fn boosted(&self, spec: &SystemSpec, boost: &[f64]) -> PhaseState {
        let d = spec.d();
        let mut p = self.p.clone();
        for (i, m) in spec.masses().iter().enumerate() {
            for a in 0..d {
                p[i * d + a] += m * boost[a];
            }
        }
        PhaseState { p, q: self.q.clone() }
    }

    /// Shift all positions by a common d-vector.
    pub fn translated(&self, spec: &SystemSpec, shift: &[f64]) -> PhaseState {
        let d = spec.d();
        let mut q = self.q.clone();
        for i in 0..spec.n() {
            for a in 0..d {
                q[i * d + a] += shift[a];
            }
        }
        PhaseState { p: self.p.clone(), q }
    }

    /// max-norm distance between two phase points.
    pub fn distance_max(&self, other: &PhaseState) -> f64 {
        (&self.p - &other.p).amax().max((&self.q - &other.q).amax())
    }
}

/// Pairwise distances, speed differences and their extrema at a phase point.
#[derive(Debug, Clone)]
pub struct PairStats {
    pub q_ij: DMatrix<f64>,
    pub v_ij: DMatrix<f64>,
    /// <v_i - v_j, q_i - q_j>
    pub dots: DMatrix<f64>,
    pub q_min: f64,
    pub q_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

fn pair_stats_unchecked(spec: &SystemSpec, state: &PhaseState) -> PairStats {
    let n = spec.n();
    let d = spec.d();
    let v = spec.velocities(&state.p);
    let mut q_ij = DMatrix::zeros(n, n);
    let mut v_ij = DMatrix::zeros(n, n);
    let mut dots = DMatrix::zeros(n, n);
    let (mut q_min, mut q_max) = (f64::INFINITY, 0.0f64);
    let (mut v_min, mut v_max) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut dq2 = 0.0;
            let mut dv2 = 0.0;
            let mut dot = 0.0;
            for a in 0..d {
                let dq = state.q[i * d + a] - state.q[j * d + a];
                let dv = v[i * d + a] - v[j * d + a];
                dq2 += dq * dq;
                dv2 += dv * dv;
                dot += dq * dv;
            }
            let (dq, dv) = (dq2.sqrt(), dv2.sqrt());
            q_ij[(i, j)] = dq;
            q_ij[(j, i)] = dq;
            v_ij[(i, j)] = dv;
            v_ij[(j, i)] = dv;
            dots[(i, j)] = dot;
            dots[(j, i)] = dot;
            q_min = q_min.min(dq);
            q_max = q_max.max(dq);
            v_min = v_min.min(dv);
            v_max = v_max.max(dv);
        }
    }
    PairStats {
        q_ij,
        v_ij,
        dots,
        q_min,
        q_max,
        v_min,
        v_max,
    }
}

/// Pairwise statistics of a phase point. Fails with a collision error when
/// two bodies coincide and the potential is singular there.
pub fn pair_stats(spec: &SystemSpec, state: &PhaseState) -> Result<PairStats> {
    let stats = pair_stats_unchecked(spec, state);
    if stats.q_min == 0.0 && spec.potential().singular_at_collision() {
        return Err(Error::Collision { t: 0.0, q_min: 0.0 });
    }
    Ok(stats)
}

fn check_not_collision(spec: &SystemSpec, q: &DVector<f64>) -> Result<()> {
    if !spec.potential().singular_at_collision() {
        return Ok(());
    }
    let d = spec.d();
    for i in 0..spec.n() {
        for j in (i + 1)..spec.n() {
            let r2: f64 = (0..d)
                .map(|a| {
                    let dq = q[i * d + a] - q[j * d + a];
                    dq * dq
                })
                .sum();
            if r2 == 0.0 {
                return Err(Error::Collision { t: 0.0, q_min: 0.0 });
            }
        }
    }
    Ok(())
}

/// V(q) = sum over pairs i < j of V_ij(q_i - q_j).
pub fn potential_energy(spec: &SystemSpec, q: &DVector<f64>) -> Result<f64> {
    check_not_collision(spec, q)?;
    let n = spec.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let sep = spec.pair_separation(q, i, j);
            total += spec.pair_value(i, j, &sep);
        }
    }
    Ok(total)
}

/// Gradient of V with respect to the full configuration.
pub fn potential_gradient(spec: &SystemSpec, q: &DVector<f64>) -> Result<DVector<f64>> {
    check_not_collision(spec, q)?;
    let n = spec.n();
    let d = spec.d();
    let mut grad = DVector::zeros(spec.dof());
    for i in 0..n {
        for j in (i + 1)..n {
            let sep = spec.pair_separation(q, i, j);
            let g = spec.pair_gradient(i, j, &sep);
            for a in 0..d {
                grad[i * d + a] += g[a];
                grad[j * d + a] -= g[a];
            }
        }
    }
    Ok(grad)
}

/// Action of the Hessian of V at q on a full-configuration vector w.
pub fn potential_hessian_apply(
    spec: &SystemSpec,
    q: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_not_collision(spec, q)?;
    let n = spec.n();
    let d = spec.d();
    let mut out = DVector::zeros(spec.dof());
    for i in 0..n {
        for j in (i + 1)..n {
            let sep = spec.pair_separation(q, i, j);
            let dw: Vec<f64> = (0..d).map(|a| w[i * d + a] - w[j * d + a]).collect();
            let hw = spec.pair_hessian_apply(i, j, &sep, &dw);
            for a in 0..d {
                out[i * d + a] += hw[a];
                out[j * d + a] -= hw[a];
            }
        }
    }
    Ok(out)
}

/// Relative acceleration between particles i and j:
/// `X_ij(q) = sum_{k != i} grad V_ik(q_i - q_k)/m_i - sum_{k != j} grad V_jk(q_j - q_k)/m_j`.
pub fn relative_acceleration(
    spec: &SystemSpec,
    q: &DVector<f64>,
    i: usize,
    j: usize,
) -> Result<Vec<f64>> {
    if i == j {
        return Err(Error::validation("pair", "indices must differ"));
    }
    check_not_collision(spec, q)?;
    let d = spec.d();
    let mut out = vec![0.0; d];
    for k in 0..spec.n() {
        if k != i {
            let sep = spec.pair_separation(q, i, k);
            let g = spec.pair_gradient(i, k, &sep);
            for a in 0..d {
                out[a] += g[a] / spec.masses()[i];
            }
        }
        if k != j {
            let sep = spec.pair_separation(q, j, k);
            let g = spec.pair_gradient(j, k, &sep);
            for a in 0..d {
                out[a] -= g[a] / spec.masses()[j];
            }
        }
    }
    Ok(out)
}

/// Upper bound `2 (n-1) ||V||^(alpha,1) / q_min^(alpha+1)` on every |X_ij|.
pub fn relative_acceleration_bound(spec: &SystemSpec, q_min: f64) -> Result<f64> {
    let norm = seminorm(spec, spec.alpha(), 1)?.value;
    Ok(2.0 * (spec.n() as f64 - 1.0) * norm / q_min.powf(spec.alpha() + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeminormMethod {
    Analytic,
    Sampled,
}

/// A computed (alpha, k)-seminorm of the potential.
#[derive(Debug, Clone)]
pub struct SeminormEstimate {
    pub alpha: f64,
    pub k: usize,
    pub value: f64,
    pub method: SeminormMethod,
    /// Relative slack of the estimate when method is Sampled.
    pub sample_bound_gap: f64,
}

/// Deterministic quasi-uniform unit directions used by sampled seminorms.
fn unit_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * (k as f64) / (count as f64);
                vec![theta.cos(), theta.sin()]
            })
            .collect(),
        _ => {
            // Seeded Gaussian directions: deterministic across runs.
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EED_D1Au64);
            (0..count)
                .map(|_| {
                    loop {
                        let v: Vec<f64> = (0..d)
                            .map(|_| {
                                // Box-Muller from two uniforms.
                                let u1: f64 = rng.gen_range(1e-12..1.0);
                                let u2: f64 = rng.gen_range(0.0..1.0);
                                (-2.0 * u1.ln()).sqrt()
                                    * (2.0 * std::f64::consts::PI * u2).cos()
                            })
                            .collect();
                        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if norm > 1e-6 {
                            return v.into_iter().map(|x| x / norm).collect();
                        }
                    }
                })
                .collect()
        }
    }
}

/// The seminorm `||V||^(alpha,k)`.
///
/// For k = 1 this is the gradient-norm seminorm
/// `||M^{-1}|| max_{i<j} sup |q|^{alpha+1} |grad V_ij|`; for k >= 2 it is the
/// multi-index sum `||M^{-1}|| sum_{i<j} sum_{|gamma|=k} sup |q|^{alpha+k}
/// |d^gamma V_ij|`. Homogeneous potentials are handled in closed form for
/// k <= 2 (the supremand is constant in the radius), by unit-sphere sampling
/// for k > 2, and smooth potentials by log-spaced radial sampling.
pub fn seminorm(spec: &SystemSpec, alpha: f64, k: usize) -> Result<SeminormEstimate> {
    if k < 1 {
        return Err(Error::validation("k", "derivative order must be >= 1"));
    }
    if !(alpha > 0.0) {
        return Err(Error::validation("alpha", "must be positive"));
    }
    if spec.potential().is_zero() {
        return Ok(SeminormEstimate {
            alpha,
            k,
            value: 0.0,
            method: SeminormMethod::Analytic,
            sample_bound_gap: 0.0,
        });
    }
    let minv = spec.minv_norm();
    let n = spec.n();
    let d = spec.d();
    let coeffs = spec.potential().coefficients();
    match spec.potential() {
        PotentialModel::Homogeneous { alpha: a0, .. } => {
            // The supremand is r^{alpha - a0}-homogeneous: finite only when
            // the requested decay exponent matches the potential's.
            if (alpha - a0).abs() > 1e-12 {
                return Err(Error::InfiniteSeminorm);
            }
            let a = *a0;
            match k {
                1 => {
                    let max_c = (0..n)
                        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                        .map(|(i, j)| coeffs[(i, j)].abs())
                        .fold(0.0f64, f64::max);
                    Ok(SeminormEstimate {
                        alpha,
                        k,
                        value: minv * a * max_c,
                        method: SeminormMethod::Analytic,
                        sample_bound_gap: 0.0,
                    })
                }
                2 => {
                    // sup |(a+2) u_m^2 - 1| = a+1 on the diagonal,
                    // sup (a+2)|u_l u_m| = (a+2)/2 off the diagonal (d >= 2).
                    let per_coef = a
                        * (d as f64 * (a + 1.0)
                            + (d * (d - 1) / 2) as f64 * (a + 2.0) / 2.0);
                    let sum_c: f64 = (0..n)
                        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                        .map(|(i, j)| coeffs[(i, j)].abs())
                        .sum();
                    Ok(SeminormEstimate {
                        alpha,
                        k,
                        value: minv * per_coef * sum_c,
                        method: SeminormMethod::Analytic,
                        sample_bound_gap: 0.0,
                    })
                }
                _ => {
                    // Exact derivative polynomials, sup over sampled unit
                    // directions.
                    let dirs = unit_directions(d, 128);
                    let base = RadialPoly::potential(d, a, 1.0);
                    let mut per_coef = 0.0;
                    for gamma in multi_indices(d, k as u32) {
                        let poly = base.partial(&gamma);
                        let sup = dirs
                            .iter()
                            .map(|u| poly.eval_on_unit_sphere(u).abs())
                            .fold(0.0f64, f64::max);
                        per_coef += sup;
                    }
                    let sum_c: f64 = (0..n)
                        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                        .map(|(i, j)| coeffs[(i, j)].abs())
                        .sum();
                    Ok(SeminormEstimate {
                        alpha,
                        k,
                        value: minv * per_coef * sum_c,
                        method: SeminormMethod::Sampled,
                        sample_bound_gap: 0.05,
                    })
                }
            }
        }
        PotentialModel::Smooth {
            k: k_decl, pair, ..
        } => {
            if k > *k_decl {
                return Err(Error::Domain(format!(
                    "smoothness order {k} exceeds declared order {k_decl}"
                )));
            }
            if k > 2 {
                return Err(Error::Domain(
                    "sampled seminorms of smooth potentials are limited to k <= 2".into(),
                ));
            }
            // 64 log-spaced radii x 128 quasi-uniform directions.
            let radii: Vec<f64> = (0..64)
                .map(|i| {
                    let t = i as f64 / 63.0;
                    1e-2 * (1e6f64).powf(t)
                })
                .collect();
            let dirs = unit_directions(d, 128);
            let mut per_pair = 0.0f64;
            let mut boundary_max = 0.0f64;
            let mut penultimate_max = 0.0f64;
            for u in &dirs {
                for (ri, r) in radii.iter().enumerate() {
                    let q: Vec<f64> = u.iter().map(|x| x * r).collect();
                    let weight = r.powf(alpha + k as f64);
                    let local = match k {
                        1 => {
                            let g = pair.gradient(&q);
                            weight * g.iter().map(|x| x * x).sum::<f64>().sqrt()
                        }
                        _ => {
                            let h = pair.hessian(&q);
                            let mut sum = 0.0;
                            for a in 0..d {
                                for b in a..d {
                                    sum += h[a * d + b].abs();
                                }
                            }
                            weight * sum
                        }
                    };
                    per_pair = per_pair.max(local);
                    if ri == radii.len() - 1 {
                        boundary_max = boundary_max.max(local);
                    } else if ri == radii.len() - 2 {
                        penultimate_max = penultimate_max.max(local);
                    }
                }
            }
            if boundary_max > per_pair * 0.999 && boundary_max > 1.05 * penultimate_max {
                return Err(Error::InfiniteSeminorm);
            }
            let value = match k {
                1 => {
                    let max_c = (0..n)
                        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                        .map(|(i, j)| coeffs[(i, j)].abs())
                        .fold(0.0f64, f64::max);
                    minv * per_pair * max_c
                }
                _ => {
                    let sum_c: f64 = (0..n)
                        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                        .map(|(i, j)| coeffs[(i, j)].abs())
                        .sum();
                    minv * per_pair * sum_c
                }
            };
            Ok(SeminormEstimate {
                alpha,
                k,
                value,
                method: SeminormMethod::Sampled,
                sample_bound_gap: 0.05,
            })
        }
    }
}
