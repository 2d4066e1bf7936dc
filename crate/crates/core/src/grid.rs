//! Split signatures, periodic spatial grids and uniform time grids.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest number of grid nodes we are willing to allocate.
const MAX_NODES: usize = 1 << 27;

/// The pair `(n, k)`: the first `k` coordinates carry a `+` sign in the
/// hyperbolic Laplacian, the remaining `n - k` a `-` sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitSignature {
    n: usize,
    k: usize,
}

impl SplitSignature {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSignature(format!("n = {n} must be at least 2")));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidSignature(format!("k = {k} must lie in 1..={n}")));
        }
        Ok(Self { n, k })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    /// `k == n`: the ordinary Laplacian.
    pub fn is_elliptic(&self) -> bool {
        self.k == self.n
    }

    /// `+1` for the first `k` coordinates, `-1` afterwards.
    #[inline]
    pub fn sign(&self, j: usize) -> f64 {
        if j < self.k {
            1.0
        } else {
            -1.0
        }
    }

    /// `(v_+, -v_-)`.
    pub fn reflect(&self, v: &[f64]) -> Vec<f64> {
        v.iter().enumerate().map(|(j, &c)| self.sign(j) * c).collect()
    }

    /// `|v_+|^2 - |v_-|^2`.
    pub fn split_square(&self, v: &[f64]) -> f64 {
        v.iter().enumerate().map(|(j, &c)| self.sign(j) * c * c).sum()
    }
}

/// Periodic box `[-L, L)^n` sampled with `m` points per dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    sig: SplitSignature,
    half_width: f64,
    points: usize,
}

impl Grid {
    pub fn new(sig: SplitSignature, half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        if points < 8 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!("{points} points per dimension: need an even number >= 8")));
        }
        let total = (0..sig.n()).try_fold(1usize, |acc, _| acc.checked_mul(points));
        match total {
            Some(t) if t <= MAX_NODES => {}
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "{points}^{} nodes exceed the allocation limit",
                    sig.n()
                )))
            }
        }
        Ok(Self { sig, half_width, points })
    }

    #[inline]
    pub fn sig(&self) -> SplitSignature {
        self.sig
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.sig.n()
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Total number of nodes, `m^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim() as i32)
    }

    /// Coordinate of node `j` along any axis.
    #[inline]
    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Stride of `axis` in the row-major layout (last axis fastest).
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.dim() - 1 - axis) as u32)
    }

    /// Index along `axis` of the flat node `idx`.
    #[inline]
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        (idx / self.stride(axis)) % self.points
    }

    /// Writes the coordinates of flat node `idx` into `x`.
    pub fn node(&self, idx: usize, x: &mut [f64]) {
        let mut rem = idx;
        for axis in (0..self.dim()).rev() {
            x[axis] = self.coordinate(rem % self.points);
            rem /= self.points;
        }
    }

    /// Angular wavenumber of DFT index `j` (FFT ordering; the Nyquist index
    /// maps to `-m/2`).
    #[inline]
    pub fn wavenumber(&self, j: usize) -> f64 {
        let m = self.points as isize;
        let j = j as isize;
        let f = if j < m / 2 { j } else { j - m };
        f as f64 * PI / self.half_width
    }

    /// Largest resolved angular wavenumber, `pi m / (2L)`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.points as f64 / (2.0 * self.half_width)
    }

    /// Wavenumbers along one axis in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.wavenumber(j)).collect()
    }
}

/// Uniform time grid on `[t_start, t_end]` with `steps` intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_start >= t_end {
            return Err(Error::InvalidTimeGrid(format!("need t_start < t_end, got [{t_start}, {t_end}]")));
        }
        if steps == 0 {
            return Err(Error::InvalidTimeGrid("steps must be at least 1".into()));
        }
        Ok(Self { t_start, t_end, steps })
    }

    /// `[0, 1]` with the given number of steps.
    pub fn unit(steps: usize) -> Result<Self> {
        Self::new(0.0, 1.0, steps)
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t_end
        } else {
            self.t_start + i as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_bounds() {
        assert!(SplitSignature::new(1, 1).is_err());
        assert!(SplitSignature::new(2, 0).is_err());
        assert!(SplitSignature::new(2, 3).is_err());
        let s = SplitSignature::new(3, 2).unwrap();
        assert_eq!(s.reflect(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, -3.0]);
        assert_eq!(s.split_square(&[1.0, 2.0, 3.0]), 1.0 + 4.0 - 9.0);
        assert!(SplitSignature::new(2, 2).unwrap().is_elliptic());
    }

    #[test]
    fn grid_nodes_and_frequencies() {
        let sig = SplitSignature::new(2, 1).unwrap();
        assert!(Grid::new(sig, 1.0, 7).is_err());
        assert!(Grid::new(sig, 1.0, 6).is_err());
        assert!(Grid::new(sig, -1.0, 8).is_err());
        let g = Grid::new(sig, PI, 8).unwrap();
        assert_eq!(g.len(), 64);
        assert!((g.spacing() - PI / 4.0).abs() < 1e-15);
        let mut x = [0.0; 2];
        g.node(8 * 3 + 5, &mut x);
        assert!((x[0] - (-PI + 3.0 * PI / 4.0)).abs() < 1e-15);
        assert!((x[1] - (-PI + 5.0 * PI / 4.0)).abs() < 1e-15);
        assert_eq!(g.wavenumbers(), vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn time_grid() {
        assert!(TimeGrid::new(1.0, 0.0, 4).is_err());
        assert!(TimeGrid::unit(0).is_err());
        let tg = TimeGrid::unit(4).unwrap();
        assert_eq!(tg.nodes(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
