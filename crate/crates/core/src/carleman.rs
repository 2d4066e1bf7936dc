//! Admissible test functions and a quadrature check of the weighted estimate
//!
//! ```text
//! τ^{3/2}/(cR^2) ||e^w g|| <= ||e^w (i d_t + Δ_{A,+} - Δ_{A,-}) g||,   w = τ |x/R + φ(t) ξ̃|^2,
//! ```
//!
//! with the terms `I..V` of its commutator expansion. Norms are over
//! `R^n x [0, 1]`.
//!
//! At `τ >= cR^2` the exponent `2w` reaches `10^5`, so every sum is
//! accumulated against a common shift `S` and reported in units of `e^S`
//! (squared norms) or `e^{S/2}` (norms). The space rule is a product of
//! Gauss-Legendre panels in polar (2D) or spherical (3D) coordinates whose
//! polar axis is `ξ̃`, graded geometrically toward the outer edge of the
//! support and toward the axis, where the weight peaks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::catalog;
use crate::error::{Error, Result};
use crate::grid::{Grid, SplitSignature};
use crate::operators::{assumption_norms, AssumptionNorms};
use crate::potential::{VectorPotential, ZeroVector};
use crate::quadrature::{simpson_weights, GaussLegendre};
use crate::spacetime::{Jet, SpaceTimeField};

/// Height of `φ` on its plateau.
pub const PHI_HEIGHT: f64 = 4.0;
/// Inner radius of the `η` transition.
pub const ETA_START: f64 = 1.5;
/// Stated bounds `|θ'| <= 1`, `|η'| <= 2`, `|φ'| <= 32`.
pub const NOMINAL_THETA1: f64 = 1.0;
pub const NOMINAL_ETA1: f64 = 2.0;
pub const NOMINAL_PHI1: f64 = 32.0;
/// Achieved first-derivative bounds may exceed the stated ones by this factor.
pub const MAX_BOUND_FACTOR: f64 = 4.0;
/// Pass threshold for `margin / rhs`.
pub const MARGIN_TOL: f64 = 1e-6;
pub const DEFAULT_W_THETA: f64 = 2.0;
pub const DEFAULT_W_ETA: f64 = 1.0;
pub const DEFAULT_W_PHI: f64 = 0.125;

const BOUND_SAMPLES: usize = 10_001;
/// Nodes whose weight is below `e^{S - 300}` are skipped.
const NEGLIGIBLE_EXPONENT: f64 = -300.0;

/// Quintic smoothstep `6s^5 - 15s^4 + 10s^3` with two derivatives.
pub fn smoothstep(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        [0.0, 0.0, 0.0]
    } else if s >= 1.0 {
        [1.0, 0.0, 0.0]
    } else {
        [s * s * s * (10.0 - 15.0 * s + 6.0 * s * s), 30.0 * s * s * (1.0 - s) * (1.0 - s), 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)]
    }
}

/// Sup-norms measured on a fine sample of each profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffBounds {
    pub theta1: f64,
    pub theta2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub phi2: f64,
}

/// `θ_R(|x|)`, `η(|x/R + φ ξ̃|)` and `φ(t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutoffSet {
    pub r: f64,
    pub w_theta: f64,
    pub w_eta: f64,
    /// `None` means `φ ≡ 0`.
    pub w_phi: Option<f64>,
    pub bounds: CutoffBounds,
}

fn sup_on(a: f64, b: f64, f: impl Fn(f64) -> [f64; 3]) -> [f64; 3] {
    let mut out = [0.0f64; 3];
    for i in 0..BOUND_SAMPLES {
        let v = f(a + (b - a) * i as f64 / (BOUND_SAMPLES - 1) as f64);
        for k in 0..3 {
            out[k] = out[k].max(v[k].abs());
        }
    }
    out
}

/// Cutoffs with quintic transitions of the given widths; `w_phi = None`
/// gives `φ ≡ 0`.
pub fn build_cutoffs(r: f64, w_theta: f64, w_eta: f64, w_phi: Option<f64>) -> Result<CutoffSet> {
    if !(r.is_finite() && r > 1.0) {
        return Err(Error::Precondition(format!("R = {r} must exceed 1")));
    }
    for w in [Some(w_theta), Some(w_eta), w_phi].into_iter().flatten() {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Precondition(format!("transition width {w} must be positive")));
        }
    }
    if let Some(w) = w_phi {
        if w > 0.125 {
            return Err(Error::Precondition(format!("w_phi = {w} leaves no plateau on [3/8, 5/8]")));
        }
    }
    let mut set = CutoffSet {
        r,
        w_theta,
        w_eta,
        w_phi,
        bounds: CutoffBounds { theta1: 0.0, theta2: 0.0, eta1: 0.0, eta2: 0.0, phi0: 0.0, phi1: 0.0, phi2: 0.0 },
    };
    let th = sup_on(r, r + w_theta, |s| set.theta(s));
    let et = sup_on(ETA_START, ETA_START + w_eta, |s| set.eta(s));
    let ph = sup_on(0.0, 1.0, |t| set.phi(t));
    set.bounds = CutoffBounds { theta1: th[1], theta2: th[2], eta1: et[1], eta2: et[2], phi0: ph[0], phi1: ph[1], phi2: ph[2] };
    let b = &set.bounds;
    for (name, got, nominal) in
        [("θ'", b.theta1, NOMINAL_THETA1), ("η'", b.eta1, NOMINAL_ETA1), ("φ'", b.phi1, NOMINAL_PHI1)]
    {
        if got > MAX_BOUND_FACTOR * nominal {
            return Err(Error::Precondition(format!(
                "achieved |{name}| = {got} exceeds {MAX_BOUND_FACTOR} x the stated bound {nominal}"
            )));
        }
    }
    Ok(set)
}

impl CutoffSet {
    /// The default profiles for radius `R`.
    pub fn standard(r: f64) -> Result<Self> {
        build_cutoffs(r, DEFAULT_W_THETA, DEFAULT_W_ETA, Some(DEFAULT_W_PHI))
    }

    /// Outer radius of the support of `θ_R`.
    pub fn outer_radius(&self) -> f64 {
        self.r + self.w_theta
    }

    pub fn has_phi(&self) -> bool {
        self.w_phi.is_some()
    }

    /// `θ_R` and its first two radial derivatives.
    pub fn theta(&self, rad: f64) -> [f64; 3] {
        let [s, d1, d2] = smoothstep((rad - self.r) / self.w_theta);
        [1.0 - s, -d1 / self.w_theta, -d2 / (self.w_theta * self.w_theta)]
    }

    pub fn eta(&self, rho: f64) -> [f64; 3] {
        let [s, d1, d2] = smoothstep((rho - ETA_START) / self.w_eta);
        [s, d1 / self.w_eta, d2 / (self.w_eta * self.w_eta)]
    }

    pub fn phi(&self, t: f64) -> [f64; 3] {
        let Some(w) = self.w_phi else { return [0.0; 3] };
        let up = smoothstep((t - 0.25) / w);
        let down = smoothstep((t - (0.75 - w)) / w);
        [
            PHI_HEIGHT * (up[0] - down[0]),
            PHI_HEIGHT * (up[1] - down[1]) / w,
            PHI_HEIGHT * (up[2] - down[2]) / (w * w),
        ]
    }

    /// Time factor `sin^3(πt)` used when `φ ≡ 0`, so `g` vanishes at `t = 0, 1`.
    pub fn envelope(&self, t: f64) -> [f64; 2] {
        if self.has_phi() {
            return [1.0, 0.0];
        }
        let (s, c) = (PI * t).sin_cos();
        [s * s * s, 3.0 * PI * s * s * c]
    }

    /// Whether `g(·, t)` vanishes identically by construction.
    pub fn vanishes_at(&self, t: f64) -> bool {
        self.outer_radius() / self.r + self.phi(t)[0].abs() <= ETA_START || self.envelope(t)[0] == 0.0
    }
}

/// `c = (‖φ''‖ + ‖φ'‖^2 + ‖d_t A‖ + ‖x̃^t B‖^2 + ‖φ‖^2 ‖ξ^t B‖^2 + 1)^{1/2}`.
pub fn carleman_constant(norms: &AssumptionNorms, bounds: &CutoffBounds) -> Result<f64> {
    let c2 = bounds.phi2
        + bounds.phi1 * bounds.phi1
        + norms.dta_norm
        + norms.m_xtilde_b * norms.m_xtilde_b
        + bounds.phi0 * bounds.phi0 * norms.m_xi * norms.m_xi
        + 1.0;
    if !c2.is_finite() {
        return Err(Error::NonFinite { location: "Carleman constant".into() });
    }
    Ok(c2.sqrt())
}

/// The same constant written through `γ, M_B, M_ξ` after the Appell change
/// of variables: `‖d_t Ã‖ <= 3γ^{3/2} M_B`, `‖x̃^t B̃‖^2 <= γ M_B^2`,
/// `‖φ‖^2 ‖ξ^t B̃‖^2 <= 16 γ^2 M_ξ^2`.
pub fn proof_constant(gamma: f64, m_b: f64, m_xi: f64, bounds: &CutoffBounds) -> f64 {
    (bounds.phi2 + bounds.phi1 * bounds.phi1 + 3.0 * gamma.powf(1.5) * m_b + gamma * m_b * m_b + 16.0 * gamma * gamma * m_xi * m_xi + 1.0)
        .sqrt()
}

/// `exp(-|x - x0|^2 / (2σ^2) + i p.x + i ω t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianBump {
    pub center: Vec<f64>,
    pub width: f64,
    pub momentum: Vec<f64>,
    pub frequency: f64,
}

impl GaussianBump {
    fn exponent(&self, x: &[f64], t: f64) -> (Complex64, Vec<Complex64>) {
        let s2 = self.width * self.width;
        let mut e = Complex64::new(0.0, self.frequency * t);
        let mut d = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            let y = x[j] - self.center[j];
            e += Complex64::new(-y * y / (2.0 * s2), self.momentum[j] * x[j]);
            d.push(Complex64::new(-y / s2, self.momentum[j]));
        }
        (e, d)
    }
}

impl SpaceTimeField for GaussianBump {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64], t: f64) -> Result<Complex64> {
        Ok(self.exponent(x, t).0.exp())
    }
    fn jet(&self, x: &[f64], t: f64) -> Result<Jet> {
        let (e, d) = self.exponent(x, t);
        let v = e.exp();
        let s2 = self.width * self.width;
        Ok(Jet {
            value: v,
            grad: d.iter().map(|dj| v * dj).collect(),
            diag_hess: d.iter().map(|dj| v * (dj * dj - 1.0 / s2)).collect(),
            dt: v * Complex64::new(0.0, self.frequency),
        })
    }
}

/// `g = θ_R(|x|) η(|x/R + φ(t) ξ̃|) E(t) v(x, t)`.
pub struct AdmissibleG<'a> {
    v: &'a dyn SpaceTimeField,
    cutoffs: CutoffSet,
    xi: Vec<f64>,
    xi_tilde: Vec<f64>,
    sig: SplitSignature,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportReport {
    pub nodes_checked: usize,
    pub nonzero_nodes: usize,
    /// Largest `|x|` and smallest `|x/R + φξ̃|` over nodes where `g != 0`.
    pub max_radius: f64,
    pub min_rho: f64,
    pub t_first: Option<f64>,
    pub t_last: Option<f64>,
    /// `||g||_{L^2(R^n x [0,1])}` by the Carleman quadrature.
    pub mass: f64,
    pub empty: bool,
}

/// Pointwise data of `g` needed by both sides and by the commutator terms.
struct GSample {
    g: Complex64,
    /// `∇_A g`.
    cov: Vec<Complex64>,
    /// `(i d_t + Δ_{A,+} - Δ_{A,-}) g`.
    pg: Complex64,
    z: Vec<f64>,
    phi: [f64; 3],
}

impl<'a> AdmissibleG<'a> {
    pub fn cutoffs(&self) -> &CutoffSet {
        &self.cutoffs
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn xi_tilde(&self) -> &[f64] {
        &self.xi_tilde
    }

    pub fn sig(&self) -> SplitSignature {
        self.sig
    }

    /// `x/R + φ(t) ξ̃`.
    pub fn z(&self, x: &[f64], t: f64) -> Vec<f64> {
        let phi = self.cutoffs.phi(t)[0];
        x.iter().zip(&self.xi_tilde).map(|(xj, e)| xj / self.cutoffs.r + phi * e).collect()
    }

    pub fn value(&self, x: &[f64], t: f64) -> Result<Complex64> {
        let rad = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let rho = self.z(x, t).iter().map(|c| c * c).sum::<f64>().sqrt();
        let chi = self.cutoffs.theta(rad)[0] * self.cutoffs.eta(rho)[0] * self.cutoffs.envelope(t)[0];
        if chi == 0.0 {
            return Ok(Complex64::default());
        }
        Ok(chi * self.v.value(x, t)?)
    }

    fn sample(&self, a: &dyn VectorPotential, x: &[f64], t: f64, scratch: &mut Scratch) -> Result<Option<GSample>> {
        let n = x.len();
        let r = self.cutoffs.r;
        let rad = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let phi = self.cutoffs.phi(t);
        let z: Vec<f64> = x.iter().zip(&self.xi_tilde).map(|(xj, e)| xj / r + phi[0] * e).collect();
        let rho = z.iter().map(|c| c * c).sum::<f64>().sqrt();
        let th = self.cutoffs.theta(rad);
        let et = self.cutoffs.eta(rho);
        let env = self.cutoffs.envelope(t);
        if th[0] == 0.0 || et[0] == 0.0 || env[0] == 0.0 {
            return Ok(None);
        }
        let jet = self.v.jet(x, t)?;
        // spatial cutoff χ = θ η, its derivatives, and the envelope in time
        let zxi: f64 = z.iter().zip(&self.xi_tilde).map(|(p, q)| p * q).sum();
        let chi = th[0] * et[0];
        let chi_t = th[0] * et[1] * phi[1] * zxi / rho;
        let mut chi_j = vec![0.0; n];
        let mut chi_jj = vec![0.0; n];
        for j in 0..n {
            let (tj, tjj) = if rad > 0.0 {
                let u = x[j] / rad;
                (th[1] * u, th[2] * u * u + th[1] * (1.0 - u * u) / rad)
            } else {
                (0.0, th[2])
            };
            let w = z[j] / rho;
            let ej = et[1] * w / r;
            let ejj = et[2] * w * w / (r * r) + et[1] * (1.0 - w * w) / (r * r * rho);
            chi_j[j] = tj * et[0] + th[0] * ej;
            chi_jj[j] = tjj * et[0] + 2.0 * tj * ej + th[0] * ejj;
        }
        let av = &mut scratch.a;
        let jac = &mut scratch.jac;
        a.value(x, t, av);
        a.jacobian(x, t, jac);
        let i = Complex64::i();
        let v = jet.value * env[0];
        let v_t = jet.dt * env[0] + jet.value * env[1];
        let mut cov = Vec::with_capacity(n);
        let mut lap = Complex64::default();
        let mut extra = Complex64::default();
        for j in 0..n {
            let s = self.sig.sign(j);
            let vj = jet.grad[j] * env[0];
            let vjj = jet.diag_hess[j] * env[0];
            let dv = vj - i * av[j] * v;
            let d2v = vjj - 2.0 * i * av[j] * vj - i * jac[j * n + j] * v - av[j] * av[j] * v;
            lap += s * d2v;
            extra += s * (chi_jj[j] * v + 2.0 * chi_j[j] * dv);
            cov.push(chi_j[j] * v + chi * dv);
        }
        let pg = chi * (i * v_t + lap) + i * chi_t * v + extra;
        Ok(Some(GSample { g: chi * v, cov, pg, z, phi }))
    }
}

struct Scratch {
    a: Vec<f64>,
    jac: Vec<f64>,
    dta: Vec<f64>,
    b: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self { a: vec![0.0; n], jac: vec![0.0; n * n], dta: vec![0.0; n], b: vec![0.0; n * n] }
    }
}

/// Node counts of the Carleman quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CarlemanQuadrature {
    pub gl_nodes: usize,
    /// Geometric panels toward the outer edge of the support.
    pub radial_levels: usize,
    /// Geometric panels toward the `ξ̃` axis.
    pub angular_levels: usize,
    /// Azimuthal trapezoid nodes (3D).
    pub azimuth: usize,
    /// Geometric Simpson pieces in each transition of `φ`.
    pub time_levels: usize,
}

impl Default for CarlemanQuadrature {
    fn default() -> Self {
        Self { gl_nodes: 4, radial_levels: 14, angular_levels: 9, azimuth: 8, time_levels: 5 }
    }
}

impl CarlemanQuadrature {
    /// Twice as many nodes in every direction.
    pub fn refined(self) -> Self {
        Self {
            gl_nodes: self.gl_nodes * 2,
            radial_levels: self.radial_levels + 4,
            angular_levels: self.angular_levels + 3,
            azimuth: self.azimuth * 2,
            time_levels: self.time_levels + 3,
        }
    }
}

/// Panels `[a, b]` mapped to Gauss-Legendre nodes and weights.
fn gl_panels(panels: &[(f64, f64)], q: usize) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLegendre::rule(q)?;
    Ok(panels
        .iter()
        .flat_map(|&(a, b)| rule.nodes.iter().zip(&rule.weights).map(move |(s, w)| (a + (b - a) * s, (b - a) * w)))
        .collect())
}

/// Panels on `[a, b]` refined geometrically toward `b`.
fn graded_toward_end(a: f64, b: f64, levels: usize) -> Vec<(f64, f64)> {
    let mut cuts = vec![a];
    for k in 1..=levels {
        cuts.push(b - (b - a) * 0.5f64.powi(k as i32));
    }
    cuts.push(b);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Orthonormal basis with first vector `d`.
fn frame(d: &[f64]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut basis = vec![d.to_vec()];
    for e in 0..n {
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|c| *c /= norm);
            basis.push(v);
        }
        if basis.len() == n {
            break;
        }
    }
    basis
}

/// Space nodes and weights covering the ball `|x| <= R + w_θ`.
fn space_rule(cut: &CutoffSet, axis: &[f64], q: &CarlemanQuadrature) -> Result<Vec<(Vec<f64>, f64)>> {
    let n = axis.len();
    let (r, outer) = (cut.r, cut.outer_radius());
    let mut radial_panels = vec![(0.0, 0.5 * r), (0.5 * r, r)];
    radial_panels.extend(graded_toward_end(r, outer, q.radial_levels));
    let radial = gl_panels(&radial_panels, q.gl_nodes)?;
    // polar angle from the axis, graded toward 0
    let mut polar_panels = graded_toward_end(PI, 0.0, q.angular_levels);
    polar_panels.iter_mut().for_each(|p| *p = (p.1, p.0));
    let polar = gl_panels(&polar_panels, q.gl_nodes)?;
    let basis = frame(axis);
    let mut out = Vec::new();
    match n {
        2 => {
            for &(rr, wr) in &radial {
                for &(psi, wp) in &polar {
                    for sgn in [1.0, -1.0] {
                        let (s, c) = (sgn * psi).sin_cos();
                        let x: Vec<f64> = (0..2).map(|k| rr * (c * basis[0][k] + s * basis[1][k])).collect();
                        out.push((x, wr * wp * rr));
                    }
                }
            }
        }
        3 => {
            let m = q.azimuth;
            for &(rr, wr) in &radial {
                for &(psi, wp) in &polar {
                    let (sp, cp) = psi.sin_cos();
                    for a in 0..m {
                        let (sa, ca) = (2.0 * PI * a as f64 / m as f64).sin_cos();
                        let x: Vec<f64> =
                            (0..3).map(|k| rr * (cp * basis[0][k] + sp * (ca * basis[1][k] + sa * basis[2][k]))).collect();
                        out.push((x, wr * wp * sp * rr * rr * 2.0 * PI / m as f64));
                    }
                }
            }
        }
        _ => return Err(Error::Unsupported(format!("Carleman quadrature in dimension {n}"))),
    }
    Ok(out)
}

/// Piecewise composite Simpson on `[0, 1]`.
fn time_rule(cut: &CutoffSet, q: &CarlemanQuadrature) -> Result<Vec<(f64, f64)>> {
    let mut pieces: Vec<(f64, f64, usize)> = Vec::new();
    match cut.w_phi {
        None => pieces.push((0.0, 1.0, 129)),
        Some(w) => {
            pieces.push((0.0, 0.25, 17));
            for (a, b) in graded_toward_end(0.25, 0.25 + w, q.time_levels) {
                pieces.push((a, b, 5));
            }
            pieces.push((0.25 + w, 0.75 - w, 65));
            for (a, b) in graded_toward_end(0.75, 0.75 - w, q.time_levels).into_iter().rev() {
                pieces.push((b, a, 5));
            }
            pieces.push((0.75, 1.0, 17));
        }
    }
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for (a, b, count) in pieces {
        if b <= a {
            continue;
        }
        let w = simpson_weights(count, (b - a) / (count - 1) as f64)?;
        for (i, wi) in w.into_iter().enumerate() {
            let t = a + (b - a) * i as f64 / (count - 1) as f64;
            match nodes.last_mut() {
                Some(last) if (last.0 - t).abs() < 1e-15 => last.1 += wi,
                _ => nodes.push((t, wi)),
            }
        }
    }
    Ok(nodes)
}

/// `R`, `τ`, `ξ`, `c` and the signature of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CarlemanConfig {
    pub r: f64,
    pub tau: f64,
    pub c: f64,
    pub xi: Vec<f64>,
    pub n: usize,
    pub k: usize,
}

/// Both norms in units of `e^{S/2}`, `S = log_scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CarlemanSides {
    pub log_scale: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub relative_margin: f64,
    pub holds: bool,
}

/// Terms of the expansion in units of `e^S`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommutatorTerms {
    pub log_scale: f64,
    pub lhs_sq: f64,
    pub i: f64,
    pub ii: f64,
    pub iii: f64,
    pub iv: f64,
    pub v: f64,
    /// `(lhs_sq - (I + ... + V)) / lhs_sq`.
    pub slack: f64,
    /// `|-8τ Re<S_τ f, A_τ f> - (I + ... + V)| / lhs_sq`, a check of the
    /// expansion itself. The left side cancels down from `lhs_sq`, so this
    /// is limited by the quadrature error of `lhs_sq` (about `1e-5`).
    pub expansion_residual: f64,
    /// `∫∫ |f|^2` in units of `e^S`.
    pub weighted_mass: f64,
    /// `32 τ^3 / R^4 (9/4) ∫∫|f|^2`, a lower bound for `I` from the support.
    pub i_support_bound: f64,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CarlemanEvaluation {
    pub sides: CarlemanSides,
    pub terms: CommutatorTerms,
}

/// Builds `g` from `v` and checks the support conditions on a scan of the
/// bounding box.
pub fn admissible_g<'a>(
    v: &'a dyn SpaceTimeField,
    cutoffs: &CutoffSet,
    xi: &[f64],
    sig: SplitSignature,
) -> Result<(AdmissibleG<'a>, SupportReport)> {
    let n = sig.n();
    if v.dim() != n || xi.len() != n {
        return Err(Error::InvalidSignature("admissible_g: dimensions differ".into()));
    }
    let norm = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::Precondition("ξ must be a nonzero vector".into()));
    }
    let xi: Vec<f64> = xi.iter().map(|c| c / norm).collect();
    let g = AdmissibleG { v, cutoffs: cutoffs.clone(), xi_tilde: sig.reflect(&xi), xi, sig };
    let outer = cutoffs.outer_radius();
    let per_axis: usize = if n == 2 { 41 } else { 17 };
    let box_half = outer + 1.0;
    let side: Vec<f64> = (0..per_axis).map(|i| -box_half + 2.0 * box_half * i as f64 / (per_axis - 1) as f64).collect();
    let times: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
    let mut report = SupportReport {
        nodes_checked: 0,
        nonzero_nodes: 0,
        max_radius: 0.0,
        min_rho: f64::INFINITY,
        t_first: None,
        t_last: None,
        mass: 0.0,
        empty: true,
    };
    let mut x = vec![0.0; n];
    for &t in &times {
        for idx in 0..per_axis.pow(n as u32) {
            let mut rem = idx;
            for c in x.iter_mut() {
                *c = side[rem % per_axis];
                rem /= per_axis;
            }
            report.nodes_checked += 1;
            if g.value(&x, t)?.norm() == 0.0 {
                continue;
            }
            let rad = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            let rho = g.z(&x, t).iter().map(|c| c * c).sum::<f64>().sqrt();
            if rho < 1.0 || rad > outer {
                return Err(Error::Precondition(format!(
                    "support condition violated at x = {x:?}, t = {t}: |x/R + φξ̃| = {rho}, |x| = {rad}"
                )));
            }
            report.nonzero_nodes += 1;
            report.max_radius = report.max_radius.max(rad);
            report.min_rho = report.min_rho.min(rho);
            report.t_first.get_or_insert(t);
            report.t_last = Some(t);
        }
    }
    let mass = weighted_sums(&g, &ZeroVector(n), 0.0, &CarlemanQuadrature::default())?;
    report.mass = mass.g.sqrt() * (0.5 * mass.shift).exp();
    report.empty = report.nonzero_nodes == 0 && report.mass == 0.0;
    Ok((g, report))
}

/// Weighted integrals, each multiplied by `e^{-shift}`.
#[derive(Clone, Copy, Debug, Default)]
struct Sums {
    shift: f64,
    g: f64,
    pg: f64,
    zg: f64,
    ff: f64,
    ii: f64,
    iii: f64,
    iv: f64,
    v: f64,
    /// `Re(Pg conj(a))` and `|a|^2`, where `A_τ f = e^w a`.
    pa: f64,
    aa: f64,
}

impl Sums {
    fn add(&mut self, o: &Sums) {
        self.g += o.g;
        self.pg += o.pg;
        self.zg += o.zg;
        self.ff += o.ff;
        self.ii += o.ii;
        self.iii += o.iii;
        self.iv += o.iv;
        self.v += o.v;
        self.pa += o.pa;
        self.aa += o.aa;
    }
}

fn weighted_sums(g: &AdmissibleG, a: &dyn VectorPotential, tau: f64, q: &CarlemanQuadrature) -> Result<Sums> {
    let cut = &g.cutoffs;
    let n = g.sig.n();
    let r = cut.r;
    let times: Vec<(f64, f64)> = time_rule(cut, q)?.into_iter().filter(|&(t, _)| !cut.vanishes_at(t)).collect();
    let space = space_rule(cut, &g.xi_tilde, q)?;
    let max_rho = times.iter().map(|&(t, _)| cut.outer_radius() / r + cut.phi(t)[0].abs()).fold(0.0, f64::max);
    let shift = 2.0 * tau * max_rho * max_rho;
    let signs: Vec<f64> = (0..n).map(|j| g.sig.sign(j)).collect();
    let n_split = signs.iter().sum::<f64>();
    let time_dependent = a.is_time_dependent();
    let magnetic = !a.is_zero();
    let partials = times
        .par_iter()
        .map(|&(t, wt)| -> Result<Sums> {
            let mut s = Sums::default();
            let mut scratch = Scratch::new(n);
            let phi_t = cut.phi(t)[0];
            for (x, wx) in &space {
                let z2: f64 = x.iter().zip(&g.xi_tilde).map(|(xj, e)| (xj / r + phi_t * e).powi(2)).sum();
                let exponent = 2.0 * tau * z2 - shift;
                if exponent < NEGLIGIBLE_EXPONENT {
                    continue;
                }
                let Some(p) = g.sample(a, x, t, &mut scratch)? else { continue };
                let e = exponent.exp() * wt * wx;
                if e == 0.0 {
                    continue;
                }
                let g2 = p.g.norm_sqr();
                let f: Vec<Complex64> = p.cov.iter().zip(&p.z).map(|(c, zj)| c + 2.0 * tau / r * zj * p.g).collect();
                let zxi: f64 = p.z.iter().zip(&g.xi_tilde).map(|(a, b)| a * b).sum();
                let xif: Complex64 = g.xi.iter().zip(&f).map(|(a, b)| a * b).sum();
                let szf: Complex64 = (0..n).map(|j| signs[j] * p.z[j] * f[j]).sum();
                let amul = Complex64::new(n_split / (2.0 * r * r), 0.5 * p.phi[1] * zxi);
                let av = szf / r + amul * p.g;
                s.g += e * g2;
                s.pg += e * p.pg.norm_sqr();
                s.zg += e * z2 * g2;
                s.ff += e * f.iter().map(|c| c.norm_sqr()).sum::<f64>();
                s.ii += e * (zxi * p.phi[2] + p.phi[1] * p.phi[1]) * g2;
                s.iii += e * p.phi[1] * (xif * p.g.conj()).im;
                s.pa += e * (p.pg * av.conj()).re;
                s.aa += e * av.norm_sqr();
                if time_dependent {
                    a.time_derivative(x, t, &mut scratch.dta);
                    s.iv += e * (0..n).map(|j| signs[j] * p.z[j] * scratch.dta[j]).sum::<f64>() * g2;
                }
                if magnetic {
                    a.magnetic_field(x, t, &mut scratch.b);
                    let mut acc = Complex64::default();
                    for j in 0..n {
                        for k in 0..n {
                            acc += p.z[j] * signs[j] * scratch.b[j * n + k] * signs[k] * f[k];
                        }
                    }
                    s.v += e * (acc * p.g.conj()).im;
                }
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = Sums { shift, ..Sums::default() };
    for p in &partials {
        total.add(p);
    }
    for val in [total.g, total.pg, total.ff, total.ii, total.iii, total.iv, total.v, total.pa, total.aa] {
        if !val.is_finite() {
            return Err(Error::NonFinite { location: "Carleman quadrature".into() });
        }
    }
    Ok(total)
}

/// Evaluates both sides and the commutator terms in one quadrature pass.
pub fn carleman_evaluate(
    g: &AdmissibleG,
    a: &dyn VectorPotential,
    tau: f64,
    c: f64,
    q: &CarlemanQuadrature,
) -> Result<CarlemanEvaluation> {
    let r = g.cutoffs.r;
    if a.dim() != g.sig.n() {
        return Err(Error::InvalidSignature("potential and test function dimensions differ".into()));
    }
    if !(c.is_finite() && c >= 1.0 && tau.is_finite()) {
        return Err(Error::Precondition(format!("invalid constants c = {c}, τ = {tau}")));
    }
    if tau < c * r * r * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("τ = {tau} is below cR^2 = {}", c * r * r)));
    }
    let s = weighted_sums(g, a, tau, q)?;
    let lhs = tau.powf(1.5) / (c * r * r) * s.g.sqrt();
    let rhs = s.pg.sqrt();
    let margin = rhs - lhs;
    let relative_margin = if rhs > 0.0 { margin / rhs } else { 0.0 };
    let sides = CarlemanSides {
        log_scale: 0.5 * s.shift,
        lhs,
        rhs,
        margin,
        relative_margin,
        holds: margin >= -MARGIN_TOL * rhs,
    };
    let i = 32.0 * tau.powi(3) / r.powi(4) * s.zg + 8.0 * tau / (r * r) * s.ff;
    let ii = 2.0 * tau * s.ii;
    let iii = 8.0 * tau / r * s.iii;
    let iv = -4.0 * tau / r * s.iv;
    let v = 8.0 * tau / r * s.v;
    let sum = i + ii + iii + iv + v;
    // -8τ Re<S f, A f> with S f = e^w (Pg + 4τ a)
    let cross = -8.0 * tau * (s.pa + 4.0 * tau * s.aa);
    let lhs_sq = s.pg;
    let rel = |x: f64| if lhs_sq > 0.0 { x / lhs_sq } else { 0.0 };
    let terms = CommutatorTerms {
        log_scale: s.shift,
        lhs_sq,
        i,
        ii,
        iii,
        iv,
        v,
        slack: rel(lhs_sq - sum),
        expansion_residual: rel((cross - sum).abs()),
        weighted_mass: s.g,
        i_support_bound: 32.0 * tau.powi(3) / r.powi(4) * 2.25 * s.g,
        holds: lhs_sq - sum >= -MARGIN_TOL * lhs_sq && i >= 0.0,
    };
    Ok(CarlemanEvaluation { sides, terms })
}

pub fn carleman_sides(g: &AdmissibleG, a: &dyn VectorPotential, tau: f64, c: f64) -> Result<CarlemanSides> {
    Ok(carleman_evaluate(g, a, tau, c, &CarlemanQuadrature::default())?.sides)
}

pub fn commutator_terms(g: &AdmissibleG, a: &dyn VectorPotential, tau: f64, c: f64) -> Result<CommutatorTerms> {
    Ok(carleman_evaluate(g, a, tau, c, &CarlemanQuadrature::default())?.terms)
}

/// Grid over the support box used for the field norms entering `c`.
pub fn support_grid(cutoffs: &CutoffSet, sig: SplitSignature) -> Result<Grid> {
    Grid::new(sig, cutoffs.outer_radius(), if sig.n() == 2 { 32 } else { 16 })
}

/// Among `candidates`, the unit vector with the smallest grid `‖ξ^t B‖`, and
/// the norms computed with it.
pub fn choose_xi(
    a: &dyn VectorPotential,
    candidates: &[Vec<f64>],
    grid: &Grid,
    times: &[f64],
) -> Result<AssumptionNorms> {
    let mut best: Option<AssumptionNorms> = None;
    for xi in candidates {
        let norms = assumption_norms(a, None, xi, grid, times)?;
        if best.as_ref().map_or(true, |b| norms.m_xi < b.m_xi - 1e-12) {
            best = Some(norms);
        }
    }
    best.ok_or_else(|| Error::Precondition("no ξ candidates".into()))
}

/// One row of the randomized battery.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatteryRow {
    pub index: usize,
    pub n: usize,
    pub k: usize,
    pub potential: String,
    pub r: f64,
    pub tau_multiplier: f64,
    pub tau: f64,
    pub c: f64,
    pub xi: Vec<f64>,
    pub norms: AssumptionNorms,
    pub sides: CarlemanSides,
    pub terms: CommutatorTerms,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatteryOptions {
    pub seed: u64,
    pub count: usize,
    /// Fraction of configurations drawn in 3D.
    pub fraction_3d: f64,
    pub potentials: Vec<String>,
    pub tau_multipliers: Vec<f64>,
    pub r_range: (f64, f64),
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            count: 108,
            fraction_3d: 1.0 / 3.0,
            potentials: vec!["zero".into(), "constant-2d-field".into(), "bounded-oscillatory".into()],
            tau_multipliers: vec![1.0, 2.0, 4.0],
            r_range: (4.2, 6.0),
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.1 && norm <= 1.0 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Draws and evaluates the randomized battery. Rows are independent of the
/// number of worker threads.
pub fn battery(options: &BatteryOptions) -> Result<Vec<BatteryRow>> {
    if options.potentials.is_empty() || options.tau_multipliers.is_empty() {
        return Err(Error::Precondition("battery needs potentials and τ multipliers".into()));
    }
    let (r_lo, r_hi) = options.r_range;
    if !(r_lo > 2.0 * DEFAULT_W_THETA && r_hi >= r_lo) {
        return Err(Error::Precondition(format!("R range must lie above {}", 2.0 * DEFAULT_W_THETA)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    struct Draw {
        n: usize,
        k: usize,
        potential: String,
        r: f64,
        mult: f64,
        bump: GaussianBump,
        random_xi: Vec<f64>,
    }
    let draws: Vec<Draw> = (0..options.count)
        .map(|_| {
            let n = if rng.gen_bool(options.fraction_3d.clamp(0.0, 1.0)) { 3 } else { 2 };
            let k = rng.gen_range(1..=n);
            let potential = options.potentials[rng.gen_range(0..options.potentials.len())].clone();
            let r = rng.gen_range(r_lo..=r_hi);
            let mult = options.tau_multipliers[rng.gen_range(0..options.tau_multipliers.len())];
            let dir = random_unit(&mut rng, n);
            let rad = rng.gen_range(0.0..r + DEFAULT_W_THETA);
            let bump = GaussianBump {
                center: dir.iter().map(|d| d * rad).collect(),
                width: rng.gen_range(1.0..4.0),
                momentum: (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                frequency: rng.gen_range(-3.0..3.0),
            };
            let random_xi = random_unit(&mut rng, n);
            Draw { n, k, potential, r, mult, bump, random_xi }
        })
        .collect();
    let q = CarlemanQuadrature::default();
    draws
        .into_par_iter()
        .enumerate()
        .map(|(index, d)| {
            let sig = SplitSignature::new(d.n, d.k)?;
            let a = catalog::potential(&d.potential, d.n)?;
            let cut = CutoffSet::standard(d.r)?;
            let grid = support_grid(&cut, sig)?;
            let times: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
            let mut candidates: Vec<Vec<f64>> = (0..d.n)
                .map(|j| {
                    let mut e = vec![0.0; d.n];
                    e[j] = 1.0;
                    e
                })
                .collect();
            candidates.push(d.random_xi.clone());
            let norms = choose_xi(a.as_ref(), &candidates, &grid, &times)?;
            let c = carleman_constant(&norms, &cut.bounds)?;
            let tau = d.mult * c * d.r * d.r;
            let (g, _) = admissible_g(&d.bump, &cut, &norms.xi, sig)?;
            let eval = carleman_evaluate(&g, a.as_ref(), tau, c, &q)?;
            Ok(BatteryRow {
                index,
                n: d.n,
                k: d.k,
                potential: d.potential,
                r: d.r,
                tau_multiplier: d.mult,
                tau,
                c,
                xi: norms.xi.clone(),
                norms,
                sides: eval.sides,
                terms: eval.terms,
            })
        })
        .collect()
}

/// Options of the commutator audit: 20 configurations, including a
/// time-dependent potential so that `IV` is exercised.
pub fn commutator_audit_options(seed: u64) -> BatteryOptions {
    BatteryOptions {
        seed,
        count: 20,
        potentials: vec![
            "zero".into(),
            "constant-2d-field".into(),
            "bounded-oscillatory".into(),
            "appell-constant-field".into(),
        ],
        ..BatteryOptions::default()
    }
}

/// The terms for `A = 0`, `φ ≡ 0`, `ξ = e_1` on a free gaussian bump, where
/// `II..V` vanish identically.
pub fn free_reference_terms(n: usize, k: usize) -> Result<CommutatorTerms> {
    let sig = SplitSignature::new(n, k)?;
    let cut = build_cutoffs(2.0, DEFAULT_W_THETA, DEFAULT_W_ETA, None)?;
    let bump = GaussianBump { center: vec![0.5; n], width: 2.5, momentum: vec![0.3; n], frequency: 1.1 };
    let mut xi = vec![0.0; n];
    xi[0] = 1.0;
    let (g, _) = admissible_g(&bump, &cut, &xi, sig)?;
    let a = ZeroVector(n);
    let c = carleman_constant(
        &AssumptionNorms { m_v: 0.0, m_b: 0.0, m_xi: 0.0, dta_norm: 0.0, m_xtilde_b: 0.0, xi, box_half_width: 0.0 },
        &cut.bounds,
    )?;
    commutator_terms(&g, &a, c * cut.r * cut.r, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::ExprVector;

    #[test]
    fn smoothstep_extrema() {
        let b = build_cutoffs(5.0, 2.0, 1.0, Some(0.125)).unwrap().bounds;
        assert!((b.theta1 - 15.0 / 16.0).abs() < 1e-12);
        assert!((b.eta1 - 15.0 / 8.0).abs() < 1e-12);
        assert!((b.phi0 - 4.0).abs() < 1e-12);
        assert!((b.phi1 - 60.0).abs() < 1e-12);
        // 60 s(1-s)(1-2s) peaks at s = (3 - √3)/6 with value 10/√3
        assert!((b.phi2 - 4.0 * 64.0 * 10.0 / 3f64.sqrt()).abs() < 1e-3);
        let cut = CutoffSet::standard(4.0).unwrap();
        assert_eq!(cut.theta(0.0)[0], 1.0);
        assert_eq!(cut.theta(7.0)[0], 0.0);
        assert_eq!(cut.phi(0.5)[0], 4.0);
        assert_eq!(cut.phi(0.1)[0], 0.0);
        assert_eq!(cut.phi(0.375)[0], 4.0);
        assert!(build_cutoffs(5.0, 0.1, 1.0, None).is_err());
        assert!(build_cutoffs(5.0, 2.0, 1.0, Some(0.2)).is_err());
        assert!(build_cutoffs(1.0, 2.0, 1.0, None).is_err());
    }

    fn zero_norms() -> AssumptionNorms {
        AssumptionNorms { m_v: 0.0, m_b: 0.0, m_xi: 0.0, dta_norm: 0.0, m_xtilde_b: 0.0, xi: vec![1.0, 0.0], box_half_width: 1.0 }
    }

    #[test]
    fn constant_examples() {
        let zero = CutoffBounds { theta1: 0.0, theta2: 0.0, eta1: 0.0, eta2: 0.0, phi0: 0.0, phi1: 0.0, phi2: 0.0 };
        assert_eq!(carleman_constant(&zero_norms(), &zero).unwrap(), 1.0);
        let b = CutoffBounds { phi1: 32.0, ..zero };
        assert_eq!(carleman_constant(&zero_norms(), &b).unwrap(), 1025f64.sqrt());
        // the general constant with the Appell bounds substituted is the proof's
        let bounds = CutoffSet::standard(5.0).unwrap().bounds;
        let (gamma, m_b, m_xi): (f64, f64, f64) = (9.0, 0.7, 0.3);
        let norms = AssumptionNorms {
            dta_norm: 3.0 * gamma * gamma.sqrt() * m_b,
            m_xtilde_b: gamma.sqrt() * m_b,
            m_xi: gamma * m_xi,
            ..zero_norms()
        };
        let general = carleman_constant(&norms, &bounds).unwrap();
        assert!((general - proof_constant(gamma, m_b, m_xi, &bounds)).abs() < 1e-12 * general);
    }

    fn bump(n: usize) -> GaussianBump {
        GaussianBump { center: vec![0.5; n], width: 2.5, momentum: vec![0.3; n], frequency: 1.1 }
    }

    #[test]
    fn bump_jet_matches_differences() {
        let b = bump(2);
        let exact = b.jet(&[0.4, -0.2], 0.5).unwrap();
        let fd = crate::spacetime::FnField::new(2, |x: &[f64], t: f64| b.value(x, t).unwrap()).jet(&[0.4, -0.2], 0.5).unwrap();
        assert!((exact.dt - fd.dt).norm() < 1e-8);
        assert!((exact.diag_hess[1] - fd.diag_hess[1]).norm() < 1e-6);
    }

    #[test]
    fn degenerate_annulus_is_empty() {
        let sig = SplitSignature::new(2, 1).unwrap();
        let cut = build_cutoffs(4.0, 2.0, 1.0, None).unwrap();
        let b = bump(2);
        let (_, rep) = admissible_g(&b, &cut, &[1.0, 0.0], sig).unwrap();
        assert!(rep.empty && rep.mass == 0.0);
        let (g, _) = admissible_g(&b, &cut, &[1.0, 0.0], sig).unwrap();
        let s = carleman_sides(&g, &ZeroVector(2), 4.0 * 16.0, 4.0).unwrap();
        assert_eq!((s.lhs, s.rhs, s.margin), (0.0, 0.0, 0.0));
    }

    #[test]
    fn support_vanishes_outside_middle_times() {
        let sig = SplitSignature::new(2, 2).unwrap();
        let cut = CutoffSet::standard(5.0).unwrap();
        let b = bump(2);
        let (_, rep) = admissible_g(&b, &cut, &[0.0, 1.0], sig).unwrap();
        assert!(rep.min_rho >= 1.5 && rep.max_radius <= 7.0);
        assert!(rep.t_first.unwrap() > 0.25 && rep.t_last.unwrap() < 0.75);
        assert!(rep.mass > 0.0);
    }

    #[test]
    fn free_annulus_without_phi() {
        let sig = SplitSignature::new(2, 1).unwrap();
        let cut = build_cutoffs(2.0, 2.0, 1.0, None).unwrap();
        let b = bump(2);
        let (g, rep) = admissible_g(&b, &cut, &[1.0, 0.0], sig).unwrap();
        assert!(!rep.empty);
        let c = carleman_constant(&zero_norms(), &cut.bounds).unwrap();
        assert_eq!(c, 1.0);
        let mut last = f64::NEG_INFINITY;
        for m in [1.0, 2.0, 4.0] {
            let e = carleman_evaluate(&g, &ZeroVector(2), m * c * 4.0, c, &CarlemanQuadrature::default()).unwrap();
            assert!(e.sides.holds && e.sides.relative_margin > 0.0, "{:?}", e.sides);
            assert!(e.sides.relative_margin > last);
            last = e.sides.relative_margin;
            let t = e.terms;
            assert_eq!((t.ii, t.iii, t.iv, t.v), (0.0, 0.0, 0.0, 0.0));
            assert!(t.i >= t.i_support_bound * (1.0 - 1e-12));
            assert!(t.holds && t.expansion_residual < 1e-4, "{t:?}");
        }
        assert!(carleman_sides(&g, &ZeroVector(2), 3.9, c).is_err());
        let t = free_reference_terms(3, 1).unwrap();
        assert_eq!((t.ii, t.iii, t.iv, t.v), (0.0, 0.0, 0.0, 0.0));
        assert!(t.i > 0.0 && t.holds);
    }

    #[test]
    fn small_battery_is_reproducible() {
        let opts = BatteryOptions { count: 4, ..commutator_audit_options(7) };
        let rows = battery(&opts).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert!(r.sides.holds && r.terms.holds && r.terms.i >= 0.0, "{r:?}");
            assert!((r.tau / (r.c * r.r * r.r) - r.tau_multiplier).abs() < 1e-12);
        }
        assert_eq!(rows, battery(&opts).unwrap());
    }

    #[test]
    fn magnetic_expansion_identity() {
        let sig = SplitSignature::new(2, 1).unwrap();
        let cut = CutoffSet::standard(4.5).unwrap();
        for name in ["constant-2d-field", "bounded-oscillatory", "appell-constant-field"] {
            let a = catalog::potential(name, 2).unwrap();
            let grid = support_grid(&cut, sig).unwrap();
            let times: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
            let norms = assumption_norms(a.as_ref(), None, &[1.0, 0.0], &grid, &times).unwrap();
            let c = carleman_constant(&norms, &cut.bounds).unwrap();
            let b = bump(2);
            let (g, _) = admissible_g(&b, &cut, &[1.0, 0.0], sig).unwrap();
            let e = carleman_evaluate(&g, a.as_ref(), c * 4.5 * 4.5, c, &CarlemanQuadrature::default()).unwrap();
            assert!(e.sides.holds, "{name}: {:?}", e.sides);
            assert!(e.terms.holds && e.terms.expansion_residual < 1e-4, "{name}: {:?}", e.terms);
        }
        let _ = ExprVector::parse(&["0", "0"], 2).unwrap();
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let sig = SplitSignature::new(3, 2).unwrap();
        let cut = CutoffSet::standard(5.0).unwrap();
        let b = bump(3);
        let (g, _) = admissible_g(&b, &cut, &[0.0, 0.0, 1.0], sig).unwrap();
        let a = catalog::potential("constant-2d-field", 3).unwrap();
        let c = 80.0;
        let coarse = carleman_evaluate(&g, a.as_ref(), c * 25.0, c, &CarlemanQuadrature::default()).unwrap();
        let fine = carleman_evaluate(&g, a.as_ref(), c * 25.0, c, &CarlemanQuadrature::default().refined()).unwrap();
        assert!((coarse.sides.rhs / fine.sides.rhs - 1.0).abs() < 1e-3, "{:?} {:?}", coarse.sides, fine.sides);
        assert!((coarse.sides.lhs / fine.sides.lhs - 1.0).abs() < 1e-3);
    }
}
