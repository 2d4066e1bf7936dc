//! Pseudoconformal (Appell) transformation, the schedule `α, β, s` built
//! from it, and the rescaling of the time interval.
//!
//! With `d(t) = a(1-t) + bt`, `μ = √(ab)/d`, `τ = tb/d` and
//! `Q(x) = |x_+|^2 - |x_-|^2`:
//!
//! ```text
//! ũ(x,t) = μ^{n/2} u(μx, τ) exp((a-b) Q(x) / (4i d)).
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, SplitSignature};
use crate::potential::{ScalarPotential, VectorPotential};
use crate::spacetime::{Jet, SpaceTimeField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppellParams {
    a: f64,
    b: f64,
}

impl AppellParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
            return Err(Error::Precondition(format!("Appell parameters must be positive, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn gamma(&self) -> f64 {
        self.a / self.b
    }

    pub fn is_identity(&self) -> bool {
        self.a == self.b
    }

    /// `a(1-t) + bt`.
    pub fn denom(&self, t: f64) -> f64 {
        self.a * (1.0 - t) + self.b * t
    }

    /// Spatial dilation `μ(t) = √(ab)/d(t)`.
    pub fn mu(&self, t: f64) -> f64 {
        (self.a * self.b).sqrt() / self.denom(t)
    }

    pub fn mu_prime(&self, t: f64) -> f64 {
        let d = self.denom(t);
        -(self.a * self.b).sqrt() * (self.b - self.a) / (d * d)
    }

    /// Time map `τ(t) = tb/d(t)`.
    pub fn time_map(&self, t: f64) -> f64 {
        t * self.b / self.denom(t)
    }

    /// `τ'(t) = ab/d^2`.
    pub fn time_map_prime(&self, t: f64) -> f64 {
        let d = self.denom(t);
        self.a * self.b / (d * d)
    }

    /// `c(t) = (a-b)/(4d)`, so the phase factor is `exp(-i c Q)`.
    pub fn phase_coefficient(&self, t: f64) -> f64 {
        (self.a - self.b) / (4.0 * self.denom(t))
    }

    pub fn phase_coefficient_prime(&self, t: f64) -> f64 {
        let d = self.denom(t);
        (self.a - self.b).powi(2) / (4.0 * d * d)
    }

    /// Coefficient `(a-b)/d` of the drift term `(Ã.x) ũ`.
    pub fn drift_coefficient(&self, t: f64) -> f64 {
        (self.a - self.b) / self.denom(t)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Precondition(format!("Appell images are defined for t in [0, 1], got {t}")));
        }
        Ok(())
    }
}

/// `ũ` as a space-time field.
pub struct AppellTransform<F> {
    inner: F,
    params: AppellParams,
    sig: SplitSignature,
}

/// Wraps `u` into its Appell image.
pub fn appell_transform<F: SpaceTimeField>(u: F, a: f64, b: f64, sig: SplitSignature) -> Result<AppellTransform<F>> {
    if u.dim() != sig.n() {
        return Err(Error::InvalidSignature("field and signature dimensions differ".into()));
    }
    Ok(AppellTransform { inner: u, params: AppellParams::new(a, b)?, sig })
}

impl<F: SpaceTimeField> AppellTransform<F> {
    pub fn params(&self) -> AppellParams {
        self.params
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }

    fn image_time(&self, t: f64) -> Result<f64> {
        self.params.check_time(t)?;
        let tau = self.params.time_map(t);
        let (t0, t1) = self.inner.time_domain();
        if tau < t0 - 1e-12 || tau > t1 + 1e-12 {
            return Err(Error::Interpolation(format!("image time {tau} outside [{t0}, {t1}]")));
        }
        Ok(tau.clamp(t0, t1))
    }
}

impl<F: SpaceTimeField> SpaceTimeField for AppellTransform<F> {
    fn dim(&self) -> usize {
        self.sig.n()
    }

    fn value(&self, x: &[f64], t: f64) -> Result<Complex64> {
        let p = &self.params;
        let tau = self.image_time(t)?;
        let mu = p.mu(t);
        let y: Vec<f64> = x.iter().map(|v| mu * v).collect();
        let u = self.inner.value(&y, tau)?;
        let phase = -p.phase_coefficient(t) * self.sig.split_square(x);
        Ok(mu.powf(self.sig.n() as f64 / 2.0) * u * Complex64::from_polar(1.0, phase))
    }

    /// Chain rule through the inner jet at `(μx, τ)`.
    fn jet(&self, x: &[f64], t: f64) -> Result<Jet> {
        let p = &self.params;
        let n = self.sig.n();
        let tau = self.image_time(t)?;
        let mu = p.mu(t);
        let y: Vec<f64> = x.iter().map(|v| mu * v).collect();
        let inner = self.inner.jet(&y, tau)?;
        let c = p.phase_coefficient(t);
        let q = self.sig.split_square(x);
        let pref = mu.powf(n as f64 / 2.0) * Complex64::from_polar(1.0, -c * q);
        let i = Complex64::i();
        let u = inner.value;
        let mut grad = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        for j in 0..n {
            let s = self.sig.sign(j);
            // d_j of the phase exponent: -2 i c s_j x_j
            let e1 = -2.0 * i * c * s * x[j];
            let e2 = -2.0 * i * c * s;
            grad.push(pref * (e1 * u + mu * inner.grad[j]));
            diag.push(pref * ((e2 + e1 * e1) * u + 2.0 * e1 * mu * inner.grad[j] + mu * mu * inner.diag_hess[j]));
        }
        let mup = p.mu_prime(t);
        let xgrad: Complex64 = (0..n).map(|j| x[j] * inner.grad[j]).sum();
        let dt = pref
            * ((n as f64 / 2.0) * (mup / mu) * u - i * p.phase_coefficient_prime(t) * q * u
                + mup * xgrad
                + p.time_map_prime(t) * inner.dt);
        Ok(Jet { value: pref * u, grad, diag_hess: diag, dt })
    }
}

/// `Ã(x,t) = μ A(μx, τ)`.
#[derive(Clone)]
pub struct AppellVector {
    inner: Arc<dyn VectorPotential>,
    params: AppellParams,
}

impl AppellVector {
    pub fn new(inner: Arc<dyn VectorPotential>, params: AppellParams) -> Self {
        Self { inner, params }
    }
}

impl VectorPotential for AppellVector {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let mu = self.params.mu(t);
        let y: Vec<f64> = x.iter().map(|v| mu * v).collect();
        self.inner.value(&y, self.params.time_map(t), out);
        out.iter_mut().for_each(|o| *o *= mu);
    }

    fn jacobian(&self, x: &[f64], t: f64, jac: &mut [f64]) {
        let mu = self.params.mu(t);
        let y: Vec<f64> = x.iter().map(|v| mu * v).collect();
        self.inner.jacobian(&y, self.params.time_map(t), jac);
        jac.iter_mut().for_each(|o| *o *= mu * mu);
    }

    fn hessian(&self, x: &[f64], t: f64, hess: &mut [f64]) {
        let mu = self.params.mu(t);
        let y: Vec<f64> = x.iter().map(|v| mu * v).collect();
        self.inner.hessian(&y, self.params.time_map(t), hess);
        hess.iter_mut().for_each(|o| *o *= mu * mu * mu);
    }

    /// `μ' A(y) + μ μ' (x^t DA)(y) + μ τ' d_t A(y)` at `y = μx`.
    fn time_derivative(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let n = x.len();
        let p = &self.params;
        let mu = p.mu(t);
        let mup = p.mu_prime(t);
        let tau = p.time_map(t);
        let y: Vec<f64> = x.iter().map(|v| mu * v).collect();
        let mut a = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        let mut da = vec![0.0; n];
        self.inner.value(&y, tau, &mut a);
        self.inner.jacobian(&y, tau, &mut jac);
        self.inner.time_derivative(&y, tau, &mut da);
        for k in 0..n {
            let xda: f64 = (0..n).map(|j| x[j] * jac[j * n + k]).sum();
            out[k] = mup * a[k] + mu * mup * xda + mu * p.time_map_prime(t) * da[k];
        }
    }

    fn has_analytic_derivatives(&self) -> bool {
        self.inner.has_analytic_derivatives()
    }

    fn is_time_dependent(&self) -> bool {
        !self.params.is_identity() || self.inner.is_time_dependent()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

/// `Ṽ(x,t) = (ab/d^2) V(μx, τ)`.
#[derive(Clone)]
pub struct AppellScalar {
    inner: Arc<dyn ScalarPotential>,
    params: AppellParams,
}

impl AppellScalar {
    pub fn new(inner: Arc<dyn ScalarPotential>, params: AppellParams) -> Self {
        Self { inner, params }
    }
}

impl ScalarPotential for AppellScalar {
    fn value(&self, x: &[f64], t: f64) -> Complex64 {
        let p = &self.params;
        let mu = p.mu(t);
        let y: Vec<f64> = x.iter().map(|v| mu * v).collect();
        let d = p.denom(t);
        p.a * p.b / (d * d) * self.inner.value(&y, p.time_map(t))
    }
    fn is_time_dependent(&self) -> bool {
        !self.params.is_identity() || self.inner.is_time_dependent()
    }
    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }
}

/// `F̃(x,t) = μ^{n/2+2} F(μx, τ) exp((a-b) Q / (4i d))`.
#[derive(Clone)]
pub struct AppellSource {
    inner: Arc<dyn ScalarPotential>,
    params: AppellParams,
    sig: SplitSignature,
}

impl ScalarPotential for AppellSource {
    fn value(&self, x: &[f64], t: f64) -> Complex64 {
        let p = &self.params;
        let mu = p.mu(t);
        let y: Vec<f64> = x.iter().map(|v| mu * v).collect();
        let phase = -p.phase_coefficient(t) * self.sig.split_square(x);
        mu.powf(self.sig.n() as f64 / 2.0 + 2.0) * self.inner.value(&y, p.time_map(t)) * Complex64::from_polar(1.0, phase)
    }
    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

/// The scalar `((a-b)/d) (Ã . x)` multiplying `ũ` in the transformed equation.
#[derive(Clone)]
pub struct AppellDrift {
    a_tilde: AppellVector,
}

impl AppellDrift {
    pub fn value_real(&self, x: &[f64], t: f64) -> f64 {
        let mut a = vec![0.0; x.len()];
        self.a_tilde.value(x, t, &mut a);
        self.a_tilde.params.drift_coefficient(t) * x.iter().zip(&a).map(|(p, q)| p * q).sum::<f64>()
    }

    /// Grid sup of `|drift|` over the given times.
    pub fn grid_sup(&self, grid: &Grid, times: &[f64]) -> f64 {
        let mut x = vec![0.0; grid.dim()];
        let mut best = 0.0f64;
        for &t in times {
            for idx in 0..grid.len() {
                grid.node(idx, &mut x);
                best = best.max(self.value_real(&x, t).abs());
            }
        }
        best
    }
}

impl ScalarPotential for AppellDrift {
    fn value(&self, x: &[f64], t: f64) -> Complex64 {
        Complex64::new(self.value_real(x, t), 0.0)
    }
    fn is_zero(&self) -> bool {
        self.a_tilde.params.is_identity() || self.a_tilde.is_zero()
    }
    fn is_real(&self) -> bool {
        true
    }
}

/// The coefficients of the transformed equation.
#[derive(Clone)]
pub struct AppellImages {
    pub a: AppellVector,
    pub v: AppellScalar,
    pub f: Option<AppellSource>,
    pub drift: AppellDrift,
}

pub fn appell_potentials(
    a: Arc<dyn VectorPotential>,
    v: Arc<dyn ScalarPotential>,
    f: Option<Arc<dyn ScalarPotential>>,
    params: AppellParams,
    sig: SplitSignature,
) -> AppellImages {
    let at = AppellVector::new(a, params);
    AppellImages {
        drift: AppellDrift { a_tilde: at.clone() },
        a: at,
        v: AppellScalar::new(v, params),
        f: f.map(|inner| AppellSource { inner, params, sig }),
    }
}

/// Sum of two scalar potentials.
#[derive(Clone)]
pub struct SumScalar(pub Arc<dyn ScalarPotential>, pub Arc<dyn ScalarPotential>);

impl ScalarPotential for SumScalar {
    fn value(&self, x: &[f64], t: f64) -> Complex64 {
        self.0.value(x, t) + self.1.value(x, t)
    }
    fn is_time_dependent(&self) -> bool {
        self.0.is_time_dependent() || self.1.is_time_dependent()
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero() && self.1.is_zero()
    }
    fn is_real(&self) -> bool {
        self.0.is_real() && self.1.is_real()
    }
}

/// The schedule `α, β, s` of the Appell transform with `a = γ`, `b = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofSchedule {
    gamma: f64,
}

/// Tolerance of the construction-time identity checks.
const SCHEDULE_TOL: f64 = 1e-12;

impl ProofSchedule {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::Precondition(format!("schedule needs γ > 1, got {gamma}")));
        }
        let s = Self { gamma };
        let rg = gamma.sqrt();
        let rel = |x: f64, y: f64| (x - y).abs() <= SCHEDULE_TOL * y.abs().max(1.0);
        let mut ok = rel(s.alpha(0.0), 1.0 / rg) && rel(s.alpha(1.0), rg) && s.s(0.0) == 0.0 && rel(s.s(1.0), 1.0);
        let mut sup = 0.0f64;
        for i in 0..=1000 {
            let a = s.alpha(i as f64 / 1000.0);
            ok &= a <= rg * (1.0 + SCHEDULE_TOL);
            sup = sup.max(a);
        }
        ok &= rel(sup, rg);
        if !ok {
            return Err(Error::Postcondition(format!("schedule identities fail for γ = {gamma}")));
        }
        Ok(s)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The equivalent Appell parameters `a = γ, b = 1`.
    pub fn params(&self) -> AppellParams {
        AppellParams { a: self.gamma, b: 1.0 }
    }

    pub fn alpha(&self, t: f64) -> f64 {
        let rg = self.gamma.sqrt();
        1.0 / ((1.0 - t) * rg + t / rg)
    }

    pub fn alpha_prime(&self, t: f64) -> f64 {
        let a = self.alpha(t);
        a * a * (self.gamma - 1.0) / self.gamma.sqrt()
    }

    pub fn beta(&self, t: f64) -> f64 {
        1.0 / (1.0 - t + t / self.gamma) - 1.0 / (self.gamma * (1.0 - t) + t)
    }

    pub fn s(&self, t: f64) -> f64 {
        t / (self.gamma * (1.0 - t) + t)
    }

    /// `dt/ds = γ / (1 + sγ - s)^2`.
    pub fn dt_ds(&self, s: f64) -> f64 {
        self.gamma / (1.0 + s * self.gamma - s).powi(2)
    }
}

/// `v(x,t) = α^{n/2} e^{-iβQ/4} u(αx, s(t))`, the Appell image with `a = γ, b = 1`.
pub fn proof_v_field<F: SpaceTimeField>(u: F, schedule: &ProofSchedule, sig: SplitSignature) -> Result<AppellTransform<F>> {
    appell_transform(u, schedule.gamma, 1.0, sig)
}

/// The lower bound threshold on `γ`.
pub fn gamma_star(r0: f64, r1: f64, m_v: f64, m_u: f64, e_u: f64, k: usize, n: usize) -> Result<f64> {
    if !(r1 > 4.0 * (r0 + 1.0)) {
        return Err(Error::Hypothesis(format!("R1 = {r1} must exceed 4(R0 + 1) = {}", 4.0 * (r0 + 1.0))));
    }
    if !(r0 > 0.0 && m_u > 0.0 && e_u > 0.0 && m_v >= 0.0) {
        return Err(Error::Hypothesis("R0, M_u and E_u must be positive and M_V nonnegative".into()));
    }
    let terms = gamma_star_terms(r0, r1, m_v, m_u, e_u, k, n);
    Ok(terms.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)).powi(2))
}

/// The seven quantities whose maximum, squared, is `γ*`.
pub fn gamma_star_terms(r0: f64, r1: f64, m_v: f64, m_u: f64, e_u: f64, k: usize, n: usize) -> [f64; 7] {
    [
        1.0,
        2.0 / r0,
        64.0 * e_u * e_u * (1.0 + m_v) / (m_u * m_u),
        4.0 / (r1 - 4.0 * r0),
        (m_v * m_u / (4096.0 * e_u)).sqrt(),
        ((2 * k) as f64 - n as f64).abs().sqrt() / (2f64.powf(0.75) * r0),
        256.0 * e_u / (r0 * m_u),
    ]
}

/// Grid sup of `|d_t Ã|` for `Ã(x,t) = α A(αx)` together with the sup of
/// `|y^t B(y)| + |ỹ^t B(y)|` over the visited points `y = αx`.
pub fn proof_dt_bound(
    a: Arc<dyn VectorPotential>,
    schedule: &ProofSchedule,
    grid: &Grid,
    times: &[f64],
) -> Result<(f64, f64)> {
    if a.is_time_dependent() {
        return Err(Error::Precondition("proof specialisation needs a static potential".into()));
    }
    let n = grid.dim();
    let sig = grid.sig();
    let at = AppellVector::new(a.clone(), schedule.params());
    let mut x = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut b = vec![0.0; n * n];
    let (mut sup_dt, mut m_b) = (0.0f64, 0.0f64);
    for &t in times {
        let alpha = schedule.alpha(t);
        for idx in 0..grid.len() {
            grid.node(idx, &mut x);
            at.time_derivative(&x, t, &mut d);
            sup_dt = sup_dt.max(d.iter().map(|v| v * v).sum::<f64>().sqrt());
            let y: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            a.magnetic_field(&y, 0.0, &mut b);
            let yt = sig.reflect(&y);
            let row = |w: &[f64]| (0..n).map(|k| (0..n).map(|j| w[j] * b[j * n + k]).sum::<f64>().powi(2)).sum::<f64>().sqrt();
            m_b = m_b.max(row(&y) + row(&yt));
        }
    }
    if !(sup_dt.is_finite() && m_b.is_finite()) {
        return Err(Error::NonFinite { location: "time derivative of the proof potential".into() });
    }
    Ok((sup_dt, m_b))
}

/// `u(x,t) = v(√T x, Tt)`.
pub struct Rescaled<F> {
    inner: F,
    t_scale: f64,
}

/// `A_T(x,t) = √T A(√T x, Tt)`.
pub struct RescaledVector {
    inner: Arc<dyn VectorPotential>,
    t_scale: f64,
}

/// `V_T(x,t) = T V(√T x, Tt)`.
pub struct RescaledScalar {
    inner: Arc<dyn ScalarPotential>,
    t_scale: f64,
}

/// Rescales a solution on `[0, T]` and its potentials to the unit interval.
pub fn interval_rescale<F: SpaceTimeField>(
    v: F,
    a: Arc<dyn VectorPotential>,
    pot: Arc<dyn ScalarPotential>,
    t_scale: f64,
) -> Result<(Rescaled<F>, RescaledVector, RescaledScalar)> {
    if !(t_scale.is_finite() && t_scale > 0.0) {
        return Err(Error::Precondition(format!("T = {t_scale} must be positive")));
    }
    Ok((
        Rescaled { inner: v, t_scale },
        RescaledVector { inner: a, t_scale },
        RescaledScalar { inner: pot, t_scale },
    ))
}

impl<F: SpaceTimeField> SpaceTimeField for Rescaled<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64], t: f64) -> Result<Complex64> {
        let r = self.t_scale.sqrt();
        let y: Vec<f64> = x.iter().map(|v| r * v).collect();
        self.inner.value(&y, self.t_scale * t)
    }
    fn time_domain(&self) -> (f64, f64) {
        let (a, b) = self.inner.time_domain();
        (a / self.t_scale, b / self.t_scale)
    }
    fn jet(&self, x: &[f64], t: f64) -> Result<Jet> {
        let r = self.t_scale.sqrt();
        let y: Vec<f64> = x.iter().map(|v| r * v).collect();
        let j = self.inner.jet(&y, self.t_scale * t)?;
        Ok(Jet {
            value: j.value,
            grad: j.grad.iter().map(|g| g * r).collect(),
            diag_hess: j.diag_hess.iter().map(|g| g * self.t_scale).collect(),
            dt: j.dt * self.t_scale,
        })
    }
}

impl VectorPotential for RescaledVector {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let r = self.t_scale.sqrt();
        let y: Vec<f64> = x.iter().map(|v| r * v).collect();
        self.inner.value(&y, self.t_scale * t, out);
        out.iter_mut().for_each(|o| *o *= r);
    }
    fn jacobian(&self, x: &[f64], t: f64, jac: &mut [f64]) {
        let r = self.t_scale.sqrt();
        let y: Vec<f64> = x.iter().map(|v| r * v).collect();
        self.inner.jacobian(&y, self.t_scale * t, jac);
        jac.iter_mut().for_each(|o| *o *= self.t_scale);
    }
    fn has_analytic_derivatives(&self) -> bool {
        self.inner.has_analytic_derivatives()
    }
    fn is_time_dependent(&self) -> bool {
        self.inner.is_time_dependent()
    }
    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

impl ScalarPotential for RescaledScalar {
    fn value(&self, x: &[f64], t: f64) -> Complex64 {
        let r = self.t_scale.sqrt();
        let y: Vec<f64> = x.iter().map(|v| r * v).collect();
        self.t_scale * self.inner.value(&y, self.t_scale * t)
    }
    fn is_time_dependent(&self) -> bool {
        self.inner.is_time_dependent()
    }
    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }
}
