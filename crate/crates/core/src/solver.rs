//! Lawson RK4 integration of `d_t u = i(Δ_{A,+} - Δ_{A,-} + V) u` on the
//! periodic grid, trajectories, PDE residuals and conservation diagnostics.
//!
//! The stiff part `i(Δ_+ - Δ_-)` is integrated exactly by the multiplier
//! `E(h) = exp(i h (-|k_+|^2 + |k_-|^2))`; the remainder
//!
//! ```text
//! N(u) = sum_j s_j (2 A_j d_j u + (d_j A_j) u - i A_j^2 u) + i V u
//! ```
//!
//! is advanced by classical RK4 in the twisted variable.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{multiply_ik, ComplexField, SpectralInterpolant};
use crate::grid::{Grid, SplitSignature, TimeGrid};
use crate::operators::{linear_energy, magnetic_hyperbolic_laplacian, SampledVector};
use crate::potential::{ScalarPotential, VectorPotential};
use crate::snapshot::{read_snapshot, write_snapshot};
use crate::spacetime::SpaceTimeField;

/// Where the samples of a trajectory come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "label", rename_all = "lowercase")]
pub enum Provenance {
    Exact(String),
    Solver,
    Sampled(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMeta {
    pub method: String,
    pub order: u32,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub warnings: Vec<String>,
}

/// Time-indexed fields on one grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Grid,
    times: Vec<f64>,
    fields: Vec<ComplexField>,
    provenance: Provenance,
    meta: Option<IntegratorMeta>,
    free: bool,
    interpolants: Vec<OnceLock<SpectralInterpolant>>,
}

impl Trajectory {
    /// `free` marks data of the equation with `A = V = 0`.
    pub fn new(times: Vec<f64>, fields: Vec<ComplexField>, provenance: Provenance, free: bool) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidTimeGrid(format!("{} times for {} fields", times.len(), fields.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTimeGrid("times must be finite and strictly increasing".into()));
        }
        let grid = *fields[0].grid();
        if fields.iter().any(|f| *f.grid() != grid) {
            return Err(Error::GridMismatch("trajectory fields live on different grids".into()));
        }
        let interpolants = (0..fields.len()).map(|_| OnceLock::new()).collect();
        Ok(Self { grid, times, fields, provenance, meta: None, free, interpolants })
    }

    /// Samples a space-time handle at every grid node and time.
    pub fn sample<F: SpaceTimeField + ?Sized>(
        handle: &F,
        grid: &Grid,
        times: &[f64],
        provenance: Provenance,
        free: bool,
    ) -> Result<Self> {
        let fields = times
            .par_iter()
            .map(|&t| {
                let mut x = vec![0.0; grid.dim()];
                let samples = (0..grid.len())
                    .map(|idx| {
                        grid.node(idx, &mut x);
                        handle.value(&x, t)
                    })
                    .collect::<Result<Vec<_>>>()?;
                ComplexField::new(*grid, samples)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(times.to_vec(), fields, provenance, free)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[ComplexField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn meta(&self) -> Option<&IntegratorMeta> {
        self.meta.as_ref()
    }

    pub fn is_free(&self) -> bool {
        self.free
    }

    pub fn last(&self) -> &ComplexField {
        self.fields.last().expect("non-empty trajectory")
    }

    /// Replaces the field at node `i`, for defect experiments.
    pub fn with_field(mut self, i: usize, field: ComplexField) -> Result<Self> {
        if *field.grid() != self.grid {
            return Err(Error::GridMismatch("replacement field".into()));
        }
        self.fields[i] = field;
        self.interpolants[i] = OnceLock::new();
        Ok(self)
    }

    fn interpolant(&self, i: usize) -> &SpectralInterpolant {
        self.interpolants[i].get_or_init(|| SpectralInterpolant::new(&self.fields[i]))
    }

    /// Nodes and cubic Lagrange weights for time `t`.
    fn time_stencil(&self, t: f64) -> Result<Vec<(usize, f64)>> {
        let (t0, t1) = (self.times[0], *self.times.last().unwrap());
        let tol = 1e-12 * (1.0 + t1.abs());
        if t < t0 - tol || t > t1 + tol {
            return Err(Error::Interpolation(format!("t = {t} outside [{t0}, {t1}]")));
        }
        if let Some(i) = self.times.iter().position(|&s| (s - t).abs() <= tol) {
            return Ok(vec![(i, 1.0)]);
        }
        let len = self.times.len();
        let width = len.min(4);
        let right = self.times.partition_point(|&s| s < t).clamp(1, len - 1);
        let start = (right as isize - 2).clamp(0, (len - width) as isize) as usize;
        let nodes: Vec<usize> = (start..start + width).collect();
        Ok(nodes
            .iter()
            .map(|&i| {
                let w = nodes
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (t - self.times[j]) / (self.times[i] - self.times[j]))
                    .product();
                (i, w)
            })
            .collect())
    }

    /// The field at time `t` by cubic Lagrange interpolation in time.
    pub fn field_at(&self, t: f64) -> Result<ComplexField> {
        let stencil = self.time_stencil(t)?;
        if let [(i, _)] = stencil.as_slice() {
            return Ok(self.fields[*i].clone());
        }
        let mut out = vec![Complex64::default(); self.grid.len()];
        for (i, w) in stencil {
            for (o, v) in out.iter_mut().zip(self.fields[i].samples()) {
                *o += w * v;
            }
        }
        ComplexField::new(self.grid, out)
    }

    /// Writes `u_00000.hsf, ...` and `manifest.json` into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::with_capacity(self.len());
        for (i, (f, &t)) in self.fields.iter().zip(&self.times).enumerate() {
            let name = format!("u_{i:05}.hsf");
            write_snapshot(BufWriter::new(File::create(dir.join(&name))?), f, t)?;
            files.push(name);
        }
        let manifest = TrajectoryManifest {
            provenance: self.provenance.clone(),
            free: self.free,
            times: self.times.clone(),
            dt: self.meta.as_ref().map(|m| m.dt),
            integrator: self.meta.clone(),
            files,
        };
        serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("manifest.json"))?), &manifest)?;
        Ok(())
    }

    /// Reads a trajectory written by [`Trajectory::export`].
    pub fn import(dir: &Path) -> Result<Self> {
        let manifest: TrajectoryManifest = serde_json::from_reader(BufReader::new(File::open(dir.join("manifest.json"))?))?;
        let mut fields = Vec::with_capacity(manifest.files.len());
        for (name, &t) in manifest.files.iter().zip(&manifest.times) {
            let (f, stamp) = read_snapshot(BufReader::new(File::open(dir.join(name))?))?;
            if stamp != t {
                return Err(Error::Snapshot(format!("{name} is stamped {stamp}, manifest says {t}")));
            }
            fields.push(f);
        }
        let mut traj = Self::new(manifest.times, fields, manifest.provenance, manifest.free)?;
        traj.meta = manifest.integrator;
        Ok(traj)
    }
}

#[derive(Serialize, Deserialize)]
struct TrajectoryManifest {
    provenance: Provenance,
    free: bool,
    times: Vec<f64>,
    dt: Option<f64>,
    integrator: Option<IntegratorMeta>,
    files: Vec<String>,
}

/// Spectral in space, cubic in time.
impl SpaceTimeField for Trajectory {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn value(&self, x: &[f64], t: f64) -> Result<Complex64> {
        Ok(self.time_stencil(t)?.into_iter().map(|(i, w)| w * self.interpolant(i).value(x)).sum())
    }

    fn time_domain(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Store every `record_every`-th step (the final step is always stored).
    pub record_every: usize,
    /// Abort when the L² norm grows faster than 1% per unit time (real `V` only).
    pub instability_check: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { record_every: 1, instability_check: true }
    }
}

/// Sampled lower-order coefficients at one time.
struct Coefficients {
    /// `(j, 2 s_j A_j)` for the axes where `A_j` is not identically zero.
    drift: Vec<(usize, Vec<f64>)>,
    /// `sum_j s_j (d_j A_j - i A_j^2) + i V`.
    potential: Vec<Complex64>,
    max_a: f64,
}

fn sample_coefficients(
    a: &dyn VectorPotential,
    v: &dyn ScalarPotential,
    grid: &Grid,
    sig: SplitSignature,
    t: f64,
) -> Result<Coefficients> {
    let n = grid.dim();
    let weights: Vec<f64> = (0..n).map(|j| sig.sign(j)).collect();
    let magnetic = !a.is_zero();
    let electric = !v.is_zero();
    let rows: Vec<(Vec<f64>, Complex64)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let mut x = vec![0.0; n];
            grid.node(idx, &mut x);
            let mut av = vec![0.0; n];
            let mut pot = Complex64::default();
            if magnetic {
                a.value(&x, t, &mut av);
                let sq: f64 = (0..n).map(|j| weights[j] * av[j] * av[j]).sum();
                pot += Complex64::new(a.weighted_divergence(&x, t, &weights), -sq);
            }
            if electric {
                pot += Complex64::i() * v.value(&x, t);
            }
            (av, pot)
        })
        .collect();
    if let Some((idx, _)) = rows
        .iter()
        .enumerate()
        .find(|(_, (av, p))| !(p.re.is_finite() && p.im.is_finite() && av.iter().all(|c| c.is_finite())))
    {
        let mut x = vec![0.0; n];
        grid.node(idx, &mut x);
        return Err(Error::NonFinite { location: format!("coefficients at x = {x:?}, t = {t}") });
    }
    let mut drift = Vec::new();
    let mut max_a = 0.0f64;
    if magnetic {
        for j in 0..n {
            let comp: Vec<f64> = rows.iter().map(|(av, _)| 2.0 * weights[j] * av[j]).collect();
            if comp.iter().any(|&c| c != 0.0) {
                drift.push((j, comp));
            }
        }
        max_a = rows.iter().map(|(av, _)| av.iter().map(|c| c * c).sum::<f64>().sqrt()).fold(0.0, f64::max);
    }
    Ok(Coefficients { drift, potential: rows.into_iter().map(|(_, p)| p).collect(), max_a })
}

/// `N(u)` for sampled coefficients.
fn remainder(grid: &Grid, c: &Coefficients, u: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = u.iter().zip(&c.potential).map(|(a, b)| a * b).collect();
    if c.drift.is_empty() {
        return out;
    }
    let mut spec = u.to_vec();
    fft::forward(&mut spec, grid.points(), grid.dim());
    for (j, coef) in &c.drift {
        let mut d = spec.clone();
        multiply_ik(grid, &mut d, *j);
        fft::inverse(&mut d, grid.points(), grid.dim());
        for ((o, dv), cv) in out.iter_mut().zip(&d).zip(coef) {
            *o += cv * dv;
        }
    }
    out
}

fn apply_multiplier(grid: &Grid, data: &mut [Complex64], mult: &[Complex64]) {
    fft::forward(data, grid.points(), grid.dim());
    data.iter_mut().zip(mult).for_each(|(d, m)| *d *= m);
    fft::inverse(data, grid.points(), grid.dim());
}

/// `-|k_+|^2 + |k_-|^2` at every spectral index.
fn free_symbol(grid: &Grid, sig: SplitSignature) -> Vec<f64> {
    let ks = grid.wavenumbers();
    (0..grid.len())
        .map(|idx| {
            (0..grid.dim())
                .map(|j| {
                    let k = ks[grid.axis_index(idx, j)];
                    -sig.sign(j) * k * k
                })
                .sum()
        })
        .collect()
}

fn axpy(a: &[Complex64], s: f64, b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// Integrates the equation from `u0` over `time`.
pub fn evolve(
    u0: &ComplexField,
    a: &dyn VectorPotential,
    v: &dyn ScalarPotential,
    sig: SplitSignature,
    time: &TimeGrid,
    options: EvolveOptions,
) -> Result<Trajectory> {
    let grid = *u0.grid();
    if grid.sig() != sig || a.dim() != sig.n() {
        return Err(Error::InvalidSignature("evolve: field, potential and signature dimensions differ".into()));
    }
    if options.record_every == 0 {
        return Err(Error::Precondition("record_every must be at least 1".into()));
    }
    if !u0.is_finite() {
        return Err(Error::NonFinite { location: "initial data".into() });
    }
    let h = time.dt();
    let symbol = free_symbol(&grid, sig);
    let e_half: Vec<Complex64> = symbol.iter().map(|s| Complex64::from_polar(1.0, 0.5 * h * s)).collect();
    let static_coeffs = !(a.is_time_dependent() || v.is_time_dependent());
    let check = options.instability_check && v.is_real();

    let mut current = sample_coefficients(a, v, &grid, sig, time.t_start)?;
    let mut max_a = current.max_a;
    let mut u = u0.samples().to_vec();
    let n0 = u0.l2_norm();
    let mut times = vec![time.t_start];
    let mut fields = vec![u0.clone()];
    for step in 0..time.steps {
        let t = time.time(step);
        let (mid, end) = if static_coeffs {
            (None, None)
        } else {
            (Some(sample_coefficients(a, v, &grid, sig, t + 0.5 * h)?), Some(sample_coefficients(a, v, &grid, sig, t + h)?))
        };
        let c_mid = mid.as_ref().unwrap_or(&current);
        let c_end = end.as_ref().unwrap_or(&current);

        let k1 = remainder(&grid, &current, &u);
        let mut u2 = axpy(&u, 0.5 * h, &k1);
        apply_multiplier(&grid, &mut u2, &e_half);
        let k2 = remainder(&grid, c_mid, &u2);
        let mut eu = u.clone();
        apply_multiplier(&grid, &mut eu, &e_half);
        let u3 = axpy(&eu, 0.5 * h, &k2);
        let k3 = remainder(&grid, c_mid, &u3);
        let mut u4 = axpy(&eu, h, &k3);
        apply_multiplier(&grid, &mut u4, &e_half);
        let k4 = remainder(&grid, c_end, &u4);
        // E(h)u + h/6 (E(h)k1 + 2E(h/2)(k2 + k3) + k4)
        let mut next = axpy(&u, h / 6.0, &k1);
        apply_multiplier(&grid, &mut next, &e_half);
        next.iter_mut().zip(k2.iter().zip(&k3)).for_each(|(o, (p, q))| *o += h / 3.0 * (p + q));
        apply_multiplier(&grid, &mut next, &e_half);
        next.iter_mut().zip(&k4).for_each(|(o, k)| *o += h / 6.0 * k);
        u = next;

        if let Some(e) = end {
            max_a = max_a.max(e.max_a);
            current = e;
        }
        let t_next = time.time(step + 1);
        let field = ComplexField::new(grid, u.clone())?;
        if !field.is_finite() {
            return Err(Error::Instability(format!("non-finite values at t = {t_next}")));
        }
        if check && n0 > 0.0 {
            let growth = (field.l2_norm() - n0) / n0;
            let elapsed = t_next - time.t_start;
            if growth > 0.01 * elapsed + 1e-9 {
                return Err(Error::Instability(format!("L2 norm grew by {growth:e} over {elapsed} time units")));
            }
        }
        if (step + 1) % options.record_every == 0 || step + 1 == time.steps {
            times.push(t_next);
            fields.push(field);
        }
    }
    let mut warnings = Vec::new();
    let cfl = h * max_a * grid.max_wavenumber();
    if cfl > 1.0 {
        warnings.push(format!("dt max|A| max|k| = {cfl:.3} exceeds 1"));
    }
    let mut traj = Trajectory::new(times, fields, Provenance::Solver, a.is_zero() && v.is_zero())?;
    traj.meta = Some(IntegratorMeta {
        method: "lawson-rk4".into(),
        order: 4,
        dt: h,
        steps: time.steps,
        record_every: options.record_every,
        warnings,
    });
    Ok(traj)
}

/// Derivative weights at `at` of the Lagrange basis on `nodes`.
fn derivative_weights(nodes: &[f64], at: usize) -> Vec<f64> {
    let z = nodes[at];
    (0..nodes.len())
        .map(|k| {
            if k == at {
                (0..nodes.len()).filter(|&m| m != at).map(|m| 1.0 / (z - nodes[m])).sum()
            } else {
                let num: f64 = (0..nodes.len()).filter(|&m| m != k && m != at).map(|m| z - nodes[m]).product();
                let den: f64 = (0..nodes.len()).filter(|&m| m != k).map(|m| nodes[k] - nodes[m]).product();
                num / den
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max: f64,
    /// `(t, residual)` at each interior node.
    pub series: Vec<(f64, f64)>,
}

/// `max_t ||d_t u - i(Δ_{A,+} - Δ_{A,-} + V) u||` over interior nodes, with
/// five-point time differences.
pub fn pde_residual(traj: &Trajectory, a: &dyn VectorPotential, v: &dyn ScalarPotential, sig: SplitSignature) -> Result<ResidualReport> {
    pde_residual_with_source(traj, a, v, None, sig)
}

/// As [`pde_residual`] for `d_t u = i((Δ_{A,+} - Δ_{A,-} + V) u + F)`.
pub fn pde_residual_with_source(
    traj: &Trajectory,
    a: &dyn VectorPotential,
    v: &dyn ScalarPotential,
    source: Option<&dyn ScalarPotential>,
    sig: SplitSignature,
) -> Result<ResidualReport> {
    if traj.len() < 5 {
        return Err(Error::Precondition(format!("pde_residual needs at least 5 time nodes, got {}", traj.len())));
    }
    let grid = *traj.grid();
    if grid.sig() != sig {
        return Err(Error::InvalidSignature("residual signature mismatch".into()));
    }
    let series = (2..traj.len() - 2)
        .into_par_iter()
        .map(|i| {
            let t = traj.times[i];
            let w = derivative_weights(&traj.times[i - 2..=i + 2], 2);
            let u = &traj.fields[i];
            let sampled = SampledVector::sample(a, &grid, t)?;
            let lap = magnetic_hyperbolic_laplacian(u, &sampled, sig)?;
            let mut x = vec![0.0; grid.dim()];
            let mut sum = 0.0;
            for idx in 0..grid.len() {
                let dt: Complex64 = (0..5).map(|k| w[k] * traj.fields[i - 2 + k].samples()[idx]).sum();
                grid.node(idx, &mut x);
                let mut rhs = lap.samples()[idx] + v.value(&x, t) * u.samples()[idx];
                if let Some(f) = source {
                    rhs += f.value(&x, t);
                }
                sum += (dt - Complex64::i() * rhs).norm_sqr();
            }
            Ok((t, (sum * grid.cell_volume()).sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    let max = series.iter().map(|s| s.1).fold(0.0, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite { location: "PDE residual".into() });
    }
    Ok(ResidualReport { max, series })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConservationReport {
    pub l2_drift: f64,
    /// Only for trajectories of the free equation; absolute when the initial
    /// linear energy is negligible against `int |grad u_0|^2`.
    pub linear_energy_drift: Option<f64>,
    pub l2_series: Vec<f64>,
    pub l2_monotone_decreasing: bool,
}

/// `max_t |q(t) - q(0)|`, divided by `|q(0)|` unless `|q(0)| <= floor`.
fn drift(series: &[f64], floor: f64) -> f64 {
    let q0 = series[0];
    let d = series.iter().map(|q| (q - q0).abs()).fold(0.0, f64::max);
    if q0.abs() <= floor {
        d
    } else {
        d / q0.abs()
    }
}

/// `int |grad u|^2`.
fn gradient_energy(u: &ComplexField) -> f64 {
    let grid = u.grid();
    let ks = grid.wavenumbers();
    let acc: f64 = u
        .spectrum()
        .iter()
        .enumerate()
        .map(|(idx, c)| (0..grid.dim()).map(|j| ks[grid.axis_index(idx, j)].powi(2)).sum::<f64>() * c.norm_sqr())
        .sum();
    acc * grid.cell_volume() / grid.len() as f64
}

/// Below this fraction of `int |grad u_0|^2` the linear energy counts as zero.
const ENERGY_FLOOR: f64 = 1e-12;

pub fn conservation_report(traj: &Trajectory, sig: SplitSignature) -> Result<ConservationReport> {
    if traj.grid().sig() != sig {
        return Err(Error::InvalidSignature("conservation signature mismatch".into()));
    }
    let l2: Vec<f64> = traj.fields.iter().map(|f| f.l2_norm()).collect();
    let linear_energy_drift = if traj.free {
        let e = traj.fields.iter().map(|f| linear_energy(f, sig)).collect::<Result<Vec<_>>>()?;
        Some(drift(&e, ENERGY_FLOOR * gradient_energy(&traj.fields[0])))
    } else {
        None
    };
    Ok(ConservationReport {
        l2_drift: drift(&l2, 0.0),
        linear_energy_drift,
        l2_monotone_decreasing: l2.windows(2).all(|w| w[1] <= w[0]),
        l2_series: l2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub steps: [usize; 3],
    /// Errors of the two coarser runs against the Richardson extrapolation of
    /// the two finer ones.
    pub errors: [f64; 2],
    pub ratio: f64,
    pub order: f64,
}

/// Runs `steps`, `2 steps` and `4 steps` and compares the final fields.
pub fn self_convergence(
    u0: &ComplexField,
    a: &dyn VectorPotential,
    v: &dyn ScalarPotential,
    sig: SplitSignature,
    t_end: f64,
    steps: usize,
) -> Result<ConvergenceReport> {
    let run = |s: usize| -> Result<ComplexField> {
        let opts = EvolveOptions { record_every: s, instability_check: true };
        Ok(evolve(u0, a, v, sig, &TimeGrid::new(0.0, t_end, s)?, opts)?.last().clone())
    };
    let (u1, u2, u4) = (run(steps)?, run(2 * steps)?, run(4 * steps)?);
    let reference = u4.combine(Complex64::new(16.0 / 15.0, 0.0), &u2, Complex64::new(-1.0 / 15.0, 0.0));
    let errors = [u1.l2_distance(&reference), u2.l2_distance(&reference)];
    let ratio = errors[0] / errors[1];
    Ok(ConvergenceReport { steps: [steps, 2 * steps, 4 * steps], errors, ratio, order: ratio.log2() })
}
