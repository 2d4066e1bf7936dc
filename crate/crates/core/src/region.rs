//! Region-restricted L2 masses.
//!
//! The full-box mass is the node sum. Masses over balls and annuli centred
//! at the origin are exact integrals of the trigonometric interpolant: the
//! density `|p|^2` is band-limited, so its Fourier coefficients (computed on
//! a grid refined by two) paired with the analytic transform of the ball
//! indicator give the integral without staircase error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::quadrature::ball_indicator_transform;

/// Relative size below which density coefficients are dropped.
const COEFFICIENT_CUTOFF: f64 = 1e-18;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Full,
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl Region {
    /// Shell `| |x| - center | < half_width`, clipped at the origin.
    pub fn shell(center: f64, half_width: f64) -> Region {
        Region::Annulus { inner: (center - half_width).max(0.0), outer: center + half_width }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match *self {
            Region::Full => true,
            Region::Ball { radius } => r <= radius,
            Region::Annulus { inner, outer } => r >= inner && r <= outer,
        }
    }

    fn validate(&self, grid: &Grid) -> Result<bool> {
        let (inner, outer) = match *self {
            Region::Full => return Ok(false),
            Region::Ball { radius } => (0.0, radius),
            Region::Annulus { inner, outer } => (inner, outer),
        };
        if !(inner.is_finite() && outer.is_finite()) || inner < 0.0 {
            return Err(Error::Precondition(format!("region radii [{inner}, {outer}] invalid")));
        }
        if outer > grid.half_width() {
            return Err(Error::Precondition(format!(
                "region radius {outer} exits the box of half width {}",
                grid.half_width()
            )));
        }
        Ok(outer <= inner)
    }
}

/// A region L2 norm together with the empty-region flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionNorm {
    pub value: f64,
    pub empty: bool,
}

/// `(int_region |u|^2)^{1/2}`.
pub fn grid_l2_norm(field: &ComplexField, region: Region) -> Result<RegionNorm> {
    if region == Region::Full {
        return Ok(RegionNorm { value: field.l2_norm(), empty: false });
    }
    let mut density = DensitySpectrum::new(*field.grid())?;
    density.accumulate(field, 1.0)?;
    let mass = density.mass(region)?;
    Ok(RegionNorm { value: mass.value.sqrt(), empty: mass.empty })
}

/// Fourier coefficients of a weighted sum of densities `sum_i w_i |p_i|^2`,
/// grouped by `|q|^2`, ready for ball integrals at many radii.
#[derive(Clone, Debug)]
pub struct DensitySpectrum {
    grid: Grid,
    fine: Vec<f64>,
    node_sum: f64,
    groups: Option<Vec<(f64, f64)>>,
}

impl DensitySpectrum {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.dim() > 3 {
            return Err(Error::Unsupported(format!("region masses in dimension {}", grid.dim())));
        }
        let fine_len = (2 * grid.points()).pow(grid.dim() as u32);
        Ok(Self { grid, fine: vec![0.0; fine_len], node_sum: 0.0, groups: None })
    }

    /// Adds `weight * |p|^2` for the interpolant `p` of `field`.
    pub fn accumulate(&mut self, field: &ComplexField, weight: f64) -> Result<()> {
        if *field.grid() != self.grid {
            return Err(Error::GridMismatch("density accumulation".into()));
        }
        let m = self.grid.points();
        let dim = self.grid.dim();
        let mf = 2 * m;
        let scale = (mf as f64 / m as f64).powi(dim as i32);
        // per-axis embedding of coarse indices into the refined spectrum
        let embed: Vec<Vec<(usize, f64)>> = (0..m)
            .map(|j| {
                if j < m / 2 {
                    vec![(j, 1.0)]
                } else if j > m / 2 {
                    vec![(j + m, 1.0)]
                } else {
                    vec![(m / 2, 0.5), (3 * m / 2, 0.5)]
                }
            })
            .collect();
        let mut fine = vec![Complex64::default(); self.fine.len()];
        for (idx, &c) in field.spectrum().iter().enumerate() {
            if c == Complex64::default() {
                continue;
            }
            let mut targets = vec![(0usize, scale)];
            for axis in 0..dim {
                let j = self.grid.axis_index(idx, axis);
                let stride = mf.pow((dim - 1 - axis) as u32);
                let mut next = Vec::with_capacity(targets.len() * 2);
                for &(base, f) in &targets {
                    for &(fj, ef) in &embed[j] {
                        next.push((base + fj * stride, f * ef));
                    }
                }
                targets = next;
            }
            for (t, f) in targets {
                fine[t] += c * f;
            }
        }
        fft::inverse(&mut fine, mf, dim);
        for (acc, v) in self.fine.iter_mut().zip(&fine) {
            *acc += weight * v.norm_sqr();
        }
        self.node_sum += weight * field.samples().iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_volume();
        self.groups = None;
        Ok(())
    }

    fn groups(&mut self) -> &[(f64, f64)] {
        if self.groups.is_none() {
            self.groups = Some(self.build_groups());
        }
        self.groups.as_deref().unwrap_or(&[])
    }

    fn build_groups(&self) -> Vec<(f64, f64)> {
        let m = self.grid.points();
        let dim = self.grid.dim();
        let mf = 2 * m;
        let mut spec: Vec<Complex64> = self.fine.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::forward(&mut spec, mf, dim);
        let n = spec.len() as f64;
        let d0 = spec[0].re.abs() / n;
        let mut by_key: BTreeMap<u64, f64> = BTreeMap::new();
        let base = std::f64::consts::PI / self.grid.half_width();
        for (idx, c) in spec.iter().enumerate() {
            let d = c / n;
            if d.norm() < COEFFICIENT_CUTOFF * d0 && idx != 0 {
                continue;
            }
            let mut key = 0u64;
            let mut parity = 0i64;
            let mut rem = idx;
            for _ in 0..dim {
                let j = (rem % mf) as i64;
                rem /= mf;
                let q = if j < mf as i64 / 2 { j } else { j - mf as i64 };
                key += (q * q) as u64;
                parity += q;
            }
            // the interpolant lives in y = x + L; shifting to the centred
            // ball multiplies mode q by (-1)^{q_1 + ... + q_n}
            let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *by_key.entry(key).or_insert(0.0) += sign * d.re;
        }
        by_key.into_iter().map(|(k, d)| ((k as f64).sqrt() * base, d)).collect()
    }

    /// `int_{|x| <= radius}` of the accumulated density.
    pub fn ball_mass(&mut self, radius: f64) -> Result<f64> {
        if radius <= 0.0 {
            return Ok(0.0);
        }
        let dim = self.grid.dim();
        let mut acc = 0.0;
        for &(q, d) in self.groups() {
            acc += d * ball_indicator_transform(dim, q, radius)?;
        }
        Ok(acc.max(0.0))
    }

    /// Mass over `region` with the empty flag.
    pub fn mass(&mut self, region: Region) -> Result<RegionNorm> {
        let empty = region.validate(&self.grid)?;
        if empty {
            return Ok(RegionNorm { value: 0.0, empty: true });
        }
        let value = match region {
            Region::Full => self.node_sum,
            Region::Ball { radius } => self.ball_mass(radius)?,
            Region::Annulus { inner, outer } => (self.ball_mass(outer)? - self.ball_mass(inner)?).max(0.0),
        };
        Ok(RegionNorm { value, empty: false })
    }
}
