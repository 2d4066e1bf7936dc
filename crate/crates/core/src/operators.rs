//! Spectral hyperbolic and magnetic operators, the magnetic field and the
//! sup-norms of the standing assumptions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{multiply_ik, ComplexField};
use crate::grid::{Grid, SplitSignature};
use crate::potential::{ScalarPotential, VectorPotential};

/// A real vector field sampled on a grid, one array per component.
#[derive(Clone, Debug)]
pub struct SampledVector {
    grid: Grid,
    comps: Vec<Vec<f64>>,
    zero: Vec<bool>,
}

impl SampledVector {
    pub fn new(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch("vector field shape".into()));
        }
        if comps.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { location: "sampled vector field".into() });
        }
        let zero = comps.iter().map(|c| c.iter().all(|&v| v == 0.0)).collect();
        Ok(Self { grid, comps, zero })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, comps: vec![vec![0.0; grid.len()]; grid.dim()], zero: vec![true; grid.dim()] }
    }

    pub fn sample(a: &dyn VectorPotential, grid: &Grid, t: f64) -> Result<Self> {
        Self::new(*grid, crate::potential::sample_vector(a, grid, t)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.comps[j]
    }

    pub fn is_zero(&self) -> bool {
        self.zero.iter().all(|&z| z)
    }

    pub fn component_is_zero(&self, j: usize) -> bool {
        self.zero[j]
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

fn check_sig(u: &ComplexField, sig: SplitSignature) -> Result<()> {
    if u.grid().sig() != sig {
        return Err(Error::InvalidSignature(format!(
            "field carries {:?}, operator asked for {:?}",
            u.grid().sig(),
            sig
        )));
    }
    Ok(())
}

/// `d_j u - i A^j u`, where a zero component skips the multiplication.
fn covariant_component(u: &ComplexField, a: &SampledVector, j: usize) -> ComplexField {
    let d = u.derivative(j);
    if a.component_is_zero(j) {
        return d;
    }
    let aj = a.component(j);
    let samples = d.samples().iter().zip(u.samples()).zip(aj).map(|((&du, &uu), &ak)| du - Complex64::new(0.0, ak) * uu).collect();
    ComplexField::new(*u.grid(), samples).expect("same grid")
}

/// `(d_j - i A^j) u` for every `j`.
pub fn covariant_gradient(u: &ComplexField, a: &SampledVector) -> Result<Vec<ComplexField>> {
    if u.grid() != a.grid() {
        return Err(Error::GridMismatch("covariant gradient".into()));
    }
    Ok((0..u.grid().dim()).map(|j| covariant_component(u, a, j)).collect())
}

/// `sum_j s_j (d_j - i A^j)^2 u`. Axes with `A^j = 0` are applied as the
/// Fourier multiplier `-(k_j)^2`, so `A = 0` is the plain hyperbolic
/// Laplacian bit for bit.
fn signed_second_order(u: &ComplexField, a: &SampledVector, sig: SplitSignature) -> ComplexField {
    let grid = *u.grid();
    let ks = grid.wavenumbers();
    let dim = grid.dim();
    let mut spectral = vec![Complex64::default(); grid.len()];
    let spec = u.spectrum();
    let free_axes: Vec<usize> = (0..dim).filter(|&j| a.component_is_zero(j)).collect();
    if !free_axes.is_empty() {
        for (idx, (out, &c)) in spectral.iter_mut().zip(spec).enumerate() {
            let mut symbol = 0.0;
            for &j in &free_axes {
                let k = ks[grid.axis_index(idx, j)];
                symbol -= sig.sign(j) * k * k;
            }
            *out = c * symbol;
        }
    }
    let mut result = spectral;
    fft::inverse(&mut result, grid.points(), dim);
    for j in (0..dim).filter(|&j| !a.component_is_zero(j)) {
        let first = covariant_component(u, a, j);
        let second = covariant_component(&first, a, j);
        let s = sig.sign(j);
        for (r, v) in result.iter_mut().zip(second.samples()) {
            *r += s * v;
        }
    }
    ComplexField::new(grid, result).expect("same grid")
}

/// `(Δ_+ - Δ_-) u` as the multiplier `-|k_+|^2 + |k_-|^2`.
pub fn hyperbolic_laplacian(u: &ComplexField, sig: SplitSignature) -> Result<ComplexField> {
    check_sig(u, sig)?;
    Ok(signed_second_order(u, &SampledVector::zeros(*u.grid()), sig))
}

/// `(Δ_{A,+} - Δ_{A,-}) u` by two covariant passes per axis.
pub fn magnetic_hyperbolic_laplacian(u: &ComplexField, a: &SampledVector, sig: SplitSignature) -> Result<ComplexField> {
    check_sig(u, sig)?;
    if u.grid() != a.grid() {
        return Err(Error::GridMismatch("magnetic Laplacian".into()));
    }
    Ok(signed_second_order(u, a, sig))
}

/// `int (|grad_+ u|^2 - |grad_- u|^2) dx`, evaluated in Fourier space.
pub fn linear_energy(u: &ComplexField, sig: SplitSignature) -> Result<f64> {
    check_sig(u, sig)?;
    let grid = u.grid();
    let ks = grid.wavenumbers();
    let mut acc = 0.0;
    for (idx, c) in u.spectrum().iter().enumerate() {
        let symbol: f64 = (0..grid.dim())
            .map(|j| {
                let k = ks[grid.axis_index(idx, j)];
                sig.sign(j) * k * k
            })
            .sum();
        acc += symbol * c.norm_sqr();
    }
    Ok(acc * grid.cell_volume() / grid.len() as f64)
}

/// Upper-triangular entries `B_jk`, `j < k`, at every node.
#[derive(Clone, Debug)]
pub struct MagneticFieldSamples {
    grid: Grid,
    upper: Vec<Vec<f64>>,
}

/// Position of `(j, k)`, `j < k`, in the packed upper triangle.
fn pair_index(n: usize, j: usize, k: usize) -> usize {
    j * n - j * (j + 1) / 2 + (k - j - 1)
}

impl MagneticFieldSamples {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `B_jk` at node `idx`; antisymmetry is structural.
    pub fn entry(&self, idx: usize, j: usize, k: usize) -> f64 {
        let n = self.grid.dim();
        match j.cmp(&k) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.upper[pair_index(n, j, k)][idx],
            std::cmp::Ordering::Greater => -self.upper[pair_index(n, k, j)][idx],
        }
    }

    /// Full row-major matrix at node `idx`.
    pub fn matrix(&self, idx: usize) -> Vec<f64> {
        let n = self.grid.dim();
        let mut b = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                b[j * n + k] = self.entry(idx, j, k);
            }
        }
        b
    }

    /// Largest entry-wise difference.
    pub fn max_abs_diff(&self, other: &MagneticFieldSamples) -> f64 {
        self.upper
            .iter()
            .zip(&other.upper)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// How derivatives of `A` are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Exact derivatives from the potential when it has them.
    Analytic,
    /// Spectral differentiation of grid samples (periodic potentials only).
    Spectral,
}

/// `B_jk = d_j A^k - d_k A^j` on the grid at time `t`.
pub fn magnetic_field_of(a: &dyn VectorPotential, grid: &Grid, t: f64, mode: DerivativeMode) -> Result<MagneticFieldSamples> {
    let n = grid.dim();
    if a.dim() != n {
        return Err(Error::GridMismatch("potential dimension".into()));
    }
    let pairs = n * (n - 1) / 2;
    let mut upper = vec![vec![0.0; grid.len()]; pairs];
    match mode {
        DerivativeMode::Analytic => {
            let mut x = vec![0.0; n];
            let mut b = vec![0.0; n * n];
            for idx in 0..grid.len() {
                grid.node(idx, &mut x);
                a.magnetic_field(&x, t, &mut b);
                for j in 0..n {
                    for k in j + 1..n {
                        upper[pair_index(n, j, k)][idx] = b[j * n + k];
                    }
                }
            }
        }
        DerivativeMode::Spectral => {
            let sampled = SampledVector::sample(a, grid, t)?;
            return magnetic_field_of_samples(&sampled);
        }
    }
    if upper.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { location: format!("magnetic field at t = {t}") });
    }
    Ok(MagneticFieldSamples { grid: *grid, upper })
}

/// Spectral `B` from grid samples of `A`.
pub fn magnetic_field_of_samples(a: &SampledVector) -> Result<MagneticFieldSamples> {
    let grid = *a.grid();
    let n = grid.dim();
    // d[j][k] = d_j A^k
    let mut d: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n];
    for (k, comp) in (0..n).map(|k| (k, a.component(k))) {
        let mut spec: Vec<Complex64> = comp.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::forward(&mut spec, grid.points(), n);
        for (j, dj) in d.iter_mut().enumerate() {
            let mut s = spec.clone();
            // the Nyquist mode has no real derivative; drop it
            zero_nyquist(&grid, &mut s, j);
            multiply_ik(&grid, &mut s, j);
            fft::inverse(&mut s, grid.points(), n);
            if dj.is_empty() {
                *dj = vec![Vec::new(); n];
            }
            dj[k] = s.iter().map(|c| c.re).collect();
        }
    }
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for j in 0..n {
        for k in j + 1..n {
            upper.push(d[j][k].iter().zip(&d[k][j]).map(|(p, q)| p - q).collect::<Vec<f64>>());
        }
    }
    if upper.iter().flatten().any(|v: &f64| !v.is_finite()) {
        return Err(Error::NonFinite { location: "spectral magnetic field".into() });
    }
    Ok(MagneticFieldSamples { grid, upper })
}

fn zero_nyquist(grid: &Grid, spec: &mut [Complex64], axis: usize) {
    let nyq = grid.points() / 2;
    for (idx, c) in spec.iter_mut().enumerate() {
        if grid.axis_index(idx, axis) == nyq {
            *c = Complex64::default();
        }
    }
}

/// Grid sup-norms entering the hypotheses, with the box they were taken over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionNorms {
    pub m_v: f64,
    pub m_b: f64,
    pub m_xi: f64,
    pub dta_norm: f64,
    /// `sup |x̃^t B|` alone, which enters the Carleman constant.
    pub m_xtilde_b: f64,
    pub xi: Vec<f64>,
    pub box_half_width: f64,
}

/// Sup over grid nodes and `time_nodes` of `|x^t B| + |x̃^t B|`, `|ξ^t B|`,
/// `|d_t A|` and `|V|`. The row-vector convention `(x^t B)_k = sum_j x_j B_jk`
/// is used throughout. `xi` is normalised here.
pub fn assumption_norms(
    a: &dyn VectorPotential,
    v: Option<&dyn ScalarPotential>,
    xi: &[f64],
    grid: &Grid,
    time_nodes: &[f64],
) -> Result<AssumptionNorms> {
    let n = grid.dim();
    let sig = grid.sig();
    if xi.len() != n {
        return Err(Error::Precondition(format!("xi has {} components, need {n}", xi.len())));
    }
    let norm = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::Precondition("xi must be a nonzero finite vector".into()));
    }
    let xi: Vec<f64> = xi.iter().map(|c| c / norm).collect();
    let times: Vec<f64> = if time_nodes.is_empty() { vec![0.0] } else { time_nodes.to_vec() };
    let field_times: &[f64] = if a.is_time_dependent() { &times } else { &times[..1] };
    let mut out = AssumptionNorms {
        m_v: 0.0,
        m_b: 0.0,
        m_xi: 0.0,
        dta_norm: 0.0,
        m_xtilde_b: 0.0,
        xi: xi.clone(),
        box_half_width: grid.half_width(),
    };
    let mut x = vec![0.0; n];
    let mut b = vec![0.0; n * n];
    let mut dta = vec![0.0; n];
    let row = |w: &[f64], b: &[f64]| -> f64 {
        (0..n).map(|k| (0..n).map(|j| w[j] * b[j * n + k]).sum::<f64>().powi(2)).sum::<f64>().sqrt()
    };
    for idx in 0..grid.len() {
        grid.node(idx, &mut x);
        let xt = sig.reflect(&x);
        if !a.is_zero() {
            for &t in field_times {
                a.magnetic_field(&x, t, &mut b);
                let xb = row(&x, &b);
                let xtb = row(&xt, &b);
                out.m_b = out.m_b.max(xb + xtb);
                out.m_xtilde_b = out.m_xtilde_b.max(xtb);
                out.m_xi = out.m_xi.max(row(&xi, &b));
                if a.is_time_dependent() {
                    a.time_derivative(&x, t, &mut dta);
                    out.dta_norm = out.dta_norm.max(dta.iter().map(|c| c * c).sum::<f64>().sqrt());
                }
            }
        }
        if let Some(v) = v {
            if !v.is_zero() {
                for &t in &times {
                    out.m_v = out.m_v.max(v.value(&x, t).norm());
                }
            }
        }
    }
    for val in [out.m_v, out.m_b, out.m_xi, out.dta_norm] {
        if !val.is_finite() {
            return Err(Error::NonFinite { location: "assumption norms".into() });
        }
    }
    Ok(out)
}
