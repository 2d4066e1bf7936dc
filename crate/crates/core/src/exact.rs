//! Closed-form solutions of the free equation `d_t u = i (Δ_+ - Δ_-) u`.
//!
//! The gaussian building block is
//! `G_β(x, t) = (1 + 4it/β²)^{-1/2} exp(-x² / (β² + 4it))`, which solves
//! `d_t G = i G''` with `G(x, 0) = exp(-x²/β²)`; on the `-` coordinates its
//! conjugate is used, since conjugation turns `i d_xx` into `-i d_xx`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Grid, SplitSignature};
use crate::spacetime::{Jet, SpaceTimeField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExactKind {
    PlaneWave { p: Vec<f64> },
    GaussianProduct { widths: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub sig: SplitSignature,
    pub kind: ExactKind,
}

/// `exp(i p.x + i t (-|p_+|^2 + |p_-|^2))`.
pub fn plane_wave(p: &[f64], sig: SplitSignature) -> Result<ExactSolution> {
    if p.len() != sig.n() || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition(format!("wave vector must have {} finite components", sig.n())));
    }
    Ok(ExactSolution { sig, kind: ExactKind::PlaneWave { p: p.to_vec() } })
}

/// Tensor product of `G_{β_j}` (conjugated on the `-` coordinates).
pub fn gaussian_product(widths: &[f64], sig: SplitSignature) -> Result<ExactSolution> {
    if widths.len() != sig.n() || widths.iter().any(|&b| !(b.is_finite() && b > 0.0)) {
        return Err(Error::Precondition(format!("need {} positive widths", sig.n())));
    }
    Ok(ExactSolution { sig, kind: ExactKind::GaussianProduct { widths: widths.to_vec() } })
}

/// One-dimensional factor with `d_x`/`d_xx`/`d_t` ratios to its value.
fn gaussian_factor(beta: f64, x: f64, t: f64, conj: bool) -> (Complex64, Complex64, Complex64, Complex64) {
    let d = Complex64::new(beta * beta, 4.0 * t);
    let value = beta / d.sqrt() * (-x * x / d).exp();
    let r1 = -2.0 * x / d;
    let r2 = -2.0 / d + 4.0 * x * x / (d * d);
    let rt = Complex64::i() * r2;
    if conj {
        (value.conj(), r1.conj(), r2.conj(), rt.conj())
    } else {
        (value, r1, r2, rt)
    }
}

impl ExactSolution {
    pub fn dim(&self) -> usize {
        self.sig.n()
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Complex64 {
        match &self.kind {
            ExactKind::PlaneWave { p } => {
                let phase: f64 = p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - t * self.sig.split_square(p);
                Complex64::from_polar(1.0, phase)
            }
            ExactKind::GaussianProduct { widths } => widths
                .iter()
                .enumerate()
                .map(|(j, &b)| gaussian_factor(b, x[j], t, self.sig.sign(j) < 0.0).0)
                .product(),
        }
    }

    /// Analytic jet.
    pub fn exact_jet(&self, x: &[f64], t: f64) -> Jet {
        let n = self.dim();
        match &self.kind {
            ExactKind::PlaneWave { p } => {
                let u = self.eval(x, t);
                let i = Complex64::i();
                Jet {
                    value: u,
                    grad: p.iter().map(|&pj| i * pj * u).collect(),
                    diag_hess: p.iter().map(|&pj| -pj * pj * u).collect(),
                    dt: -i * self.sig.split_square(p) * u,
                }
            }
            ExactKind::GaussianProduct { widths } => {
                let factors: Vec<_> =
                    (0..n).map(|j| gaussian_factor(widths[j], x[j], t, self.sig.sign(j) < 0.0)).collect();
                let u: Complex64 = factors.iter().map(|f| f.0).product();
                Jet {
                    value: u,
                    grad: factors.iter().map(|f| f.1 * u).collect(),
                    diag_hess: factors.iter().map(|f| f.2 * u).collect(),
                    dt: factors.iter().map(|f| f.3).sum::<Complex64>() * u,
                }
            }
        }
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> Result<ComplexField> {
        if grid.sig() != self.sig {
            return Err(Error::InvalidSignature("exact solution and grid disagree".into()));
        }
        Ok(ComplexField::from_fn(*grid, |x| self.eval(x, t)))
    }

    /// `||u(., t)||_{L^2(R^n)}^2`, independent of `t`. Infinite for plane waves.
    pub fn mass(&self) -> f64 {
        match &self.kind {
            ExactKind::PlaneWave { .. } => f64::INFINITY,
            ExactKind::GaussianProduct { widths } => {
                widths.iter().map(|b| b * (std::f64::consts::PI / 2.0).sqrt()).product()
            }
        }
    }

    /// Largest modulus on the outer layer of `grid` over `times`.
    pub fn boundary_max(&self, grid: &Grid, times: &[f64]) -> Result<f64> {
        let mut best = 0.0f64;
        for &t in times {
            best = best.max(self.sample(grid, t)?.boundary_max());
        }
        Ok(best)
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ExactKind::PlaneWave { .. } => "plane_wave",
            ExactKind::GaussianProduct { .. } => "gaussian_product",
        }
    }
}

impl SpaceTimeField for ExactSolution {
    fn dim(&self) -> usize {
        self.sig.n()
    }
    fn value(&self, x: &[f64], t: f64) -> Result<Complex64> {
        Ok(self.eval(x, t))
    }
    fn time_domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn jet(&self, x: &[f64], t: f64) -> Result<Jet> {
        Ok(self.exact_jet(x, t))
    }
}

/// Multiplies the spectrum by `exp(i t (-|k_+|^2 + |k_-|^2))`.
pub fn free_propagate(u0: &ComplexField, t: f64, sig: SplitSignature) -> Result<ComplexField> {
    let grid = *u0.grid();
    if grid.sig() != sig {
        return Err(Error::InvalidSignature("free_propagate signature mismatch".into()));
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    let ks = grid.wavenumbers();
    let spec: Vec<Complex64> = u0
        .spectrum()
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            let symbol: f64 = (0..grid.dim())
                .map(|j| {
                    let k = ks[grid.axis_index(idx, j)];
                    -sig.sign(j) * k * k
                })
                .sum();
            c * Complex64::from_polar(1.0, t * symbol)
        })
        .collect();
    ComplexField::from_spectrum(grid, spec)
}
