//! Transversal (Crönström) gauge.
//!
//! For a time-independent `A` with `int_0^1 A(sx) ds` finite, the phase
//! `φ(x) = x . int_0^1 A(sx) ds` gives `Ã = A - ∇φ` with `x . Ã = 0` and the
//! same magnetic field. `Ã` is computed from `B` directly:
//! `Ã(x) = -int_0^1 Ψ(sx) ds`, `Ψ(y) = σ y^t B(y)`, where the orientation
//! `σ` is fixed at construction by requiring `DÃ - DÃ^t = B`.

use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::potential::VectorPotential;
use crate::quadrature::{gauss_legendre_01_vec, MAX_NODES};

pub const DEFAULT_NODES: usize = 32;
/// Agreement required between successive node doublings.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Largest admissible `|B(Ã) - B(A)|` at the construction samples.
pub const FIELD_TOL: f64 = 1e-6;
/// Largest admissible `|x . Ã(x)|` at the construction samples.
pub const TRANSVERSALITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct GaugeOptions {
    /// Initial Gauss–Legendre node count; doubled up to 128.
    pub nodes: usize,
    /// Points closer than this to the origin are skipped by the checks.
    pub exclusion_radius: f64,
    /// Half width of the cube holding the construction samples.
    pub check_radius: f64,
    pub check_points: usize,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        Self { nodes: DEFAULT_NODES, exclusion_radius: 0.0, check_radius: 1.0, check_points: 24 }
    }
}

/// `int_0^1 f(s) ds` with node doubling until two values agree.
fn converged(
    mut f: impl FnMut(f64, &mut [f64]),
    dim: usize,
    start: usize,
) -> std::result::Result<(Vec<f64>, usize), String> {
    let mut nodes = start.clamp(2, MAX_NODES);
    let mut prev = gauss_legendre_01_vec(&mut f, dim, nodes).map_err(|e| e.to_string())?;
    while nodes * 2 <= MAX_NODES {
        nodes *= 2;
        let cur = gauss_legendre_01_vec(&mut f, dim, nodes).map_err(|e| e.to_string())?;
        let scale = cur.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let diff = cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff <= CONVERGENCE_TOL * scale {
            return Ok((cur, nodes / 2));
        }
        prev = cur;
    }
    Err(format!("quadrature did not settle by {MAX_NODES} nodes"))
}

/// Deterministic low-discrepancy points in `[-r, r]^n` (Halton sequence).
pub fn halton_points(n: usize, count: usize, r: f64) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    (1..=count as u64)
        .map(|i| {
            (0..n)
                .map(|d| {
                    let base = PRIMES[d % PRIMES.len()];
                    let (mut f, mut v, mut k) = (1.0, 0.0, i);
                    while k > 0 {
                        f /= base as f64;
                        v += f * (k % base) as f64;
                        k /= base;
                    }
                    r * (2.0 * v - 1.0)
                })
                .collect()
        })
        .collect()
}

/// `int_0^1 A(sx) ds`, or the condition-A failure at `x`.
fn ray_average(a: &dyn VectorPotential, x: &[f64], nodes: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let mut y = vec![0.0; n];
    converged(
        |s, out| {
            for j in 0..n {
                y[j] = s * x[j];
            }
            a.value(&y, 0.0, out)
        },
        n,
        nodes,
    )
    .map(|(v, _)| v)
    .map_err(|detail| Error::ConditionA {
        point: x.to_vec(),
        detail: format!("{detail}; the potential behaves like an Aharonov-Bohm-type field"),
    })
}

/// `φ(x) = x . int_0^1 A(sx) ds`.
pub fn cronstrom_phase(a: &dyn VectorPotential, x: &[f64], nodes: usize) -> Result<f64> {
    if a.is_time_dependent() {
        return Err(Error::Precondition("the transversal gauge needs a time-independent potential".into()));
    }
    let avg = ray_average(a, x, nodes)?;
    Ok(x.iter().zip(&avg).map(|(p, q)| p * q).sum())
}

/// The transversal potential `Ã` of a fixed `A`, usable as a potential.
#[derive(Clone)]
pub struct CronstromGauge {
    a: Arc<dyn VectorPotential>,
    sigma: f64,
    nodes: usize,
    options: GaugeOptions,
    field_error: f64,
    transversality: f64,
}

impl std::fmt::Debug for CronstromGauge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CronstromGauge")
            .field("sigma", &self.sigma)
            .field("nodes", &self.nodes)
            .field("field_error", &self.field_error)
            .field("transversality", &self.transversality)
            .finish()
    }
}

impl CronstromGauge {
    /// Builds `Ã`, fixing the orientation and checking transversality and
    /// field preservation at deterministic sample points.
    pub fn new(a: Arc<dyn VectorPotential>, options: GaugeOptions) -> Result<Self> {
        if a.is_time_dependent() {
            return Err(Error::Precondition("the transversal gauge needs a time-independent potential".into()));
        }
        let n = a.dim();
        let points: Vec<Vec<f64>> = halton_points(n, options.check_points, options.check_radius)
            .into_iter()
            .filter(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt() >= options.exclusion_radius.max(1e-12))
            .collect();
        let mut gauge = Self { a, sigma: -1.0, nodes: options.nodes, options, field_error: 0.0, transversality: 0.0 };
        // condition A along every sampled ray, and the node count that resolves Ã
        let mut nodes = gauge.options.nodes;
        for x in &points {
            ray_average(gauge.a.as_ref(), x, gauge.options.nodes)?;
            let (_, used) = gauge.integrate(x, gauge.options.nodes).map_err(|detail| Error::ConditionA {
                point: x.clone(),
                detail,
            })?;
            nodes = nodes.max(used);
        }
        gauge.nodes = nodes;
        // orientation: compare D Ã - D Ã^t with B for σ = -1
        let mut b = vec![0.0; n * n];
        let mut jac = vec![0.0; n * n];
        let (mut err_minus, mut err_plus, mut field_max) = (0.0f64, 0.0f64, 0.0f64);
        for x in &points {
            gauge.a.magnetic_field(x, 0.0, &mut b);
            gauge.jacobian(x, 0.0, &mut jac);
            for j in 0..n {
                for k in 0..n {
                    let curl = jac[j * n + k] - jac[k * n + j];
                    err_minus = err_minus.max((curl - b[j * n + k]).abs());
                    err_plus = err_plus.max((-curl - b[j * n + k]).abs());
                    field_max = field_max.max(b[j * n + k].abs());
                }
            }
        }
        if field_max > 1e-12 && err_plus < err_minus {
            gauge.sigma = 1.0;
        }
        gauge.field_error = err_minus.min(err_plus);
        if gauge.field_error > FIELD_TOL {
            return Err(Error::Postcondition(format!(
                "curl of the transversal potential misses B by {:.3e} under both orientations",
                gauge.field_error
            )));
        }
        let mut val = vec![0.0; n];
        for x in &points {
            gauge.value(x, 0.0, &mut val);
            let dot: f64 = x.iter().zip(&val).map(|(p, q)| p * q).sum();
            gauge.transversality = gauge.transversality.max(dot.abs());
        }
        if gauge.transversality > TRANSVERSALITY_TOL {
            return Err(Error::Postcondition(format!("x . Ã reaches {:.3e}", gauge.transversality)));
        }
        Ok(gauge)
    }

    /// `int_0^1 s x^t B(sx) ds` (without the orientation factor).
    fn integrate(&self, x: &[f64], nodes: usize) -> std::result::Result<(Vec<f64>, usize), String> {
        let n = x.len();
        let mut y = vec![0.0; n];
        let mut b = vec![0.0; n * n];
        converged(
            |s, out| {
                for j in 0..n {
                    y[j] = s * x[j];
                }
                self.a.magnetic_field(&y, 0.0, &mut b);
                for k in 0..n {
                    out[k] = s * (0..n).map(|j| x[j] * b[j * n + k]).sum::<f64>();
                }
            },
            n,
            nodes,
        )
    }

    /// Orientation factor `σ` in `Ψ(y) = σ y^t B(y)`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Node count used for pointwise evaluation.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn field_error(&self) -> f64 {
        self.field_error
    }

    pub fn transversality(&self) -> f64 {
        self.transversality
    }

    pub fn original(&self) -> &Arc<dyn VectorPotential> {
        &self.a
    }

    pub fn phase(&self, x: &[f64]) -> Result<f64> {
        cronstrom_phase(self.a.as_ref(), x, self.options.nodes)
    }

    /// `Ψ(x) = σ x^t B(x)`.
    pub fn psi(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut b = vec![0.0; n * n];
        self.a.magnetic_field(x, 0.0, &mut b);
        (0..n).map(|k| self.sigma * (0..n).map(|j| x[j] * b[j * n + k]).sum::<f64>()).collect()
    }

    /// `Ã(x)` with node doubling; fails like the phase on divergent rays.
    pub fn potential(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (v, _) = self
            .integrate(x, self.options.nodes)
            .map_err(|detail| Error::ConditionA { point: x.to_vec(), detail })?;
        Ok(v.into_iter().map(|c| -self.sigma * c).collect())
    }

    /// `|x^t DÃ(x) + Ψ(x) - int_0^1 Ψ(sx) ds|`.
    pub fn radial_identity_residual(&self, x: &[f64]) -> Result<f64> {
        let n = x.len();
        let mut jac = vec![0.0; n * n];
        self.jacobian(x, 0.0, &mut jac);
        let psi = self.psi(x);
        let mut y = vec![0.0; n];
        let (avg, _) = converged(
            |s, out| {
                for j in 0..n {
                    y[j] = s * x[j];
                }
                out.copy_from_slice(&self.psi(&y));
            },
            n,
            self.options.nodes,
        )
        .map_err(|detail| Error::ConditionA { point: x.to_vec(), detail })?;
        let mut worst = 0.0f64;
        for k in 0..n {
            let xda: f64 = (0..n).map(|j| x[j] * jac[j * n + k]).sum();
            worst = worst.max((xda + psi[k] - avg[k]).abs());
        }
        Ok(worst)
    }

    /// `φ` at every grid node.
    pub fn phase_samples(&self, grid: &Grid) -> Result<Vec<f64>> {
        let mut x = vec![0.0; grid.dim()];
        (0..grid.len())
            .map(|idx| {
                grid.node(idx, &mut x);
                self.phase(&x)
            })
            .collect()
    }
}

impl VectorPotential for CronstromGauge {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn value(&self, x: &[f64], _t: f64, out: &mut [f64]) {
        let n = x.len();
        let mut y = vec![0.0; n];
        let mut b = vec![0.0; n * n];
        let v = gauss_legendre_01_vec(
            |s, o| {
                for j in 0..n {
                    y[j] = s * x[j];
                }
                self.a.magnetic_field(&y, 0.0, &mut b);
                for k in 0..n {
                    o[k] = s * (0..n).map(|j| x[j] * b[j * n + k]).sum::<f64>();
                }
            },
            n,
            self.nodes,
        );
        match v {
            Ok(v) => {
                for k in 0..n {
                    out[k] = -self.sigma * v[k];
                }
            }
            Err(_) => out.iter_mut().for_each(|o| *o = f64::NAN),
        }
    }

    /// `d_i Ã_k = -σ int_0^1 [s B_ik(sx) + s^2 sum_j x_j d_i B_jk(sx)] ds`.
    fn jacobian(&self, x: &[f64], _t: f64, jac: &mut [f64]) {
        let n = x.len();
        let mut y = vec![0.0; n];
        let mut b = vec![0.0; n * n];
        let mut hess = vec![0.0; n * n * n];
        let v = gauss_legendre_01_vec(
            |s, o| {
                for j in 0..n {
                    y[j] = s * x[j];
                }
                self.a.magnetic_field(&y, 0.0, &mut b);
                self.a.hessian(&y, 0.0, &mut hess);
                // d_i B_jk = d_i d_j A^k - d_i d_k A^j
                for i in 0..n {
                    for k in 0..n {
                        let mut acc = s * b[i * n + k];
                        for j in 0..n {
                            let dib = hess[(i * n + j) * n + k] - hess[(i * n + k) * n + j];
                            acc += s * s * x[j] * dib;
                        }
                        o[i * n + k] = acc;
                    }
                }
            },
            n * n,
            self.nodes,
        );
        match v {
            Ok(v) => {
                for (o, c) in jac.iter_mut().zip(v) {
                    *o = -self.sigma * c;
                }
            }
            Err(_) => jac.iter_mut().for_each(|o| *o = f64::NAN),
        }
    }

    fn has_analytic_derivatives(&self) -> bool {
        true
    }

    fn is_time_dependent(&self) -> bool {
        false
    }

    fn is_zero(&self) -> bool {
        self.a.is_zero()
    }
}

/// `Ã(x)` for a single point, building the gauge on the fly.
pub fn cronstrom_potential(a: Arc<dyn VectorPotential>, x: &[f64], nodes: usize) -> Result<Vec<f64>> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let gauge = CronstromGauge::new(a, GaugeOptions { nodes, check_radius: r, ..GaugeOptions::default() })?;
    gauge.potential(x)
}

/// Residual of the radial identity at `x`.
pub fn radial_identity_check(a: Arc<dyn VectorPotential>, x: &[f64], nodes: usize) -> Result<f64> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let gauge = CronstromGauge::new(a, GaugeOptions { nodes, check_radius: r, ..GaugeOptions::default() })?;
    gauge.radial_identity_residual(x)
}

/// `e^{-iφ} u` with `φ` sampled at the grid nodes.
pub fn apply_gauge_samples(u: &ComplexField, phase: &[f64]) -> Result<ComplexField> {
    if phase.len() != u.samples().len() {
        return Err(Error::GridMismatch("phase samples".into()));
    }
    let samples = u.samples().iter().zip(phase).map(|(&c, &p)| c * Complex64::from_polar(1.0, -p)).collect();
    ComplexField::new(*u.grid(), samples)
}

/// `e^{-iφ(x)} u(x)`.
pub fn apply_gauge(u: &ComplexField, phi: impl Fn(&[f64]) -> f64) -> ComplexField {
    u.map_with_position(|x, c| c * Complex64::from_polar(1.0, -phi(x)))
}
