//! Complex samples on a periodic grid with a lazily cached spectrum.

use num_complex::Complex64;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fft;
use crate::grid::Grid;

/// Largest imaginary part tolerated when a real-valued slot is sampled.
pub const REAL_SLOT_TOLERANCE: f64 = 1e-12;

/// Complex field on a [`Grid`], row-major samples.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Grid,
    samples: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl ComplexField {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} nodes",
                samples.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, samples, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, samples: vec![Complex64::default(); grid.len()], spectrum: OnceLock::new() }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let samples = (0..grid.len())
            .map(|idx| {
                grid.node(idx, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, samples, spectrum: OnceLock::new() }
    }

    /// Inverse transform of an unnormalised spectrum.
    pub fn from_spectrum(grid: Grid, mut spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(Error::GridMismatch("spectrum length".into()));
        }
        let cached = spectrum.clone();
        fft::inverse(&mut spectrum, grid.points(), grid.dim());
        let field = Self { grid, samples: spectrum, spectrum: OnceLock::new() };
        let _ = field.spectrum.set(cached);
        Ok(field)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Mutable access; drops the cached spectrum.
    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        self.spectrum = OnceLock::new();
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Unnormalised DFT of the samples.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let mut s = self.samples.clone();
            fft::forward(&mut s, self.grid.points(), self.grid.dim());
            s
        })
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn ensure_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `sqrt(h^n sum |u|^2)` over all nodes.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// The same norm computed from the spectrum (Parseval).
    pub fn spectral_l2_norm(&self) -> f64 {
        let n = self.grid.len() as f64;
        (self.grid.cell_volume() * self.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>() / n).sqrt()
    }

    /// Discrete L2 distance `||self - other||`.
    pub fn l2_distance(&self, other: &ComplexField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let s: f64 = self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).norm_sqr()).sum();
        (self.grid.cell_volume() * s).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexField) -> f64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest modulus on the outermost layer of nodes along any axis.
    pub fn boundary_max(&self) -> f64 {
        let m = self.grid.points();
        let mut best = 0.0f64;
        for (idx, c) in self.samples.iter().enumerate() {
            let on_edge = (0..self.grid.dim()).any(|a| {
                let j = self.grid.axis_index(idx, a);
                j == 0 || j == m - 1
            });
            if on_edge {
                best = best.max(c.norm());
            }
        }
        best
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        Self { grid: self.grid, samples: self.samples.iter().map(|&c| f(c)).collect(), spectrum: OnceLock::new() }
    }

    /// Pointwise `f(x, u(x))`.
    pub fn map_with_position(&self, f: impl Fn(&[f64], Complex64) -> Complex64) -> ComplexField {
        let mut x = vec![0.0; self.grid.dim()];
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                self.grid.node(idx, &mut x);
                f(&x, c)
            })
            .collect();
        Self { grid: self.grid, samples, spectrum: OnceLock::new() }
    }

    pub fn scale(&self, s: Complex64) -> ComplexField {
        self.map(|c| c * s)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: Complex64, other: &ComplexField, b: Complex64) -> ComplexField {
        let samples = self.samples.iter().zip(&other.samples).map(|(x, y)| a * x + b * y).collect();
        Self { grid: self.grid, samples, spectrum: OnceLock::new() }
    }

    /// Spectral partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> ComplexField {
        let mut spec = self.spectrum().to_vec();
        multiply_ik(&self.grid, &mut spec, axis);
        let mut out = spec;
        fft::inverse(&mut out, self.grid.points(), self.grid.dim());
        Self { grid: self.grid, samples: out, spectrum: OnceLock::new() }
    }

    /// Spectral gradient.
    pub fn gradient(&self) -> Vec<ComplexField> {
        (0..self.grid.dim()).map(|a| self.derivative(a)).collect()
    }
}

/// Multiplies an unnormalised spectrum in place by `i k_axis`.
pub(crate) fn multiply_ik(grid: &Grid, spec: &mut [Complex64], axis: usize) {
    let ks = grid.wavenumbers();
    for (idx, c) in spec.iter_mut().enumerate() {
        let k = ks[grid.axis_index(idx, axis)];
        *c *= Complex64::new(0.0, k);
    }
}

/// Which values an expression slot accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Real,
    Complex,
}

/// Samples `expr` at every node of `grid` at time `t`.
pub fn sample_field(expr: &Expr, grid: &Grid, t: f64, slot: Slot) -> Result<ComplexField> {
    if expr.max_variable() > grid.dim() {
        return Err(Error::VariableOutOfRange { index: expr.max_variable(), n: grid.dim(), offset: 0 });
    }
    if slot == Slot::Real && expr.contains_imaginary_literal() {
        return Err(Error::ImaginaryLiteral);
    }
    let mut x = vec![0.0; grid.dim()];
    let mut samples = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        grid.node(idx, &mut x);
        let v = expr.eval(&x, t);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { location: format!("x = {x:?}, t = {t}") });
        }
        if slot == Slot::Real {
            if v.im.abs() > REAL_SLOT_TOLERANCE {
                return Err(Error::ImaginaryPart { imag: v.im, location: format!("x = {x:?}, t = {t}") });
            }
            samples.push(Complex64::new(v.re, 0.0));
        } else {
            samples.push(v);
        }
    }
    ComplexField::new(*grid, samples)
}

/// Trigonometric interpolant of one field, evaluable at arbitrary points.
///
/// The Nyquist mode is split symmetrically so real data interpolates to
/// real values.
#[derive(Clone, Debug)]
pub struct SpectralInterpolant {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl SpectralInterpolant {
    pub fn new(field: &ComplexField) -> Self {
        let n = field.grid.len() as f64;
        Self { grid: field.grid, coefficients: field.spectrum().iter().map(|c| c / n).collect() }
    }

    pub fn from_spectrum(grid: Grid, spectrum: &[Complex64]) -> Self {
        let n = grid.len() as f64;
        Self { grid, coefficients: spectrum.iter().map(|c| c / n).collect() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Value of the interpolant at `x` (periodic continuation outside the box).
    pub fn value(&self, x: &[f64]) -> Complex64 {
        let m = self.grid.points();
        let dim = self.grid.dim();
        let nyq = m / 2;
        // per-axis basis values
        let basis: Vec<Vec<Complex64>> = (0..dim)
            .map(|a| {
                let y = x[a] + self.grid.half_width();
                (0..m)
                    .map(|j| {
                        let k = self.grid.wavenumber(j);
                        if j == nyq {
                            Complex64::new((k * y).cos(), 0.0)
                        } else {
                            Complex64::from_polar(1.0, k * y)
                        }
                    })
                    .collect()
            })
            .collect();
        // contract the last axis first
        let mut current = self.coefficients.clone();
        for a in (0..dim).rev() {
            let next_len = current.len() / m;
            let mut next = vec![Complex64::default(); next_len];
            for (o, slot) in next.iter_mut().enumerate() {
                let row = &current[o * m..(o + 1) * m];
                *slot = row.iter().zip(&basis[a]).map(|(c, b)| c * b).sum();
            }
            current = next;
        }
        current[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::grid::SplitSignature;
    use std::f64::consts::PI;

    fn grid2(l: f64, m: usize) -> Grid {
        Grid::new(SplitSignature::new(2, 1).unwrap(), l, m).unwrap()
    }

    #[test]
    fn constant_and_linear_samples() {
        let g = grid2(PI, 8);
        let one = sample_field(&parse_expression("1", 2).unwrap(), &g, 0.0, Slot::Real).unwrap();
        assert!(one.samples().iter().all(|c| *c == Complex64::new(1.0, 0.0)));
        let x1 = sample_field(&parse_expression("x1", 2).unwrap(), &g, 0.0, Slot::Real).unwrap();
        for j in 0..8 {
            let expected = -PI + j as f64 * PI / 4.0;
            assert_eq!(x1.samples()[j * 8 + 3].re, expected);
        }
    }

    #[test]
    fn gaussian_samples_match_reference() {
        let g = grid2(4.0, 16);
        let f = sample_field(&parse_expression("exp(-(x1^2+x2^2))", 2).unwrap(), &g, 0.0, Slot::Real).unwrap();
        let mut x = [0.0; 2];
        for (idx, c) in f.samples().iter().enumerate() {
            g.node(idx, &mut x);
            let r = (-(x[0] * x[0] + x[1] * x[1])).exp();
            assert!((c.re - r).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_errors() {
        let g = grid2(1.0, 8);
        let e = parse_expression("1/(x1-x1)", 2).unwrap();
        assert!(matches!(sample_field(&e, &g, 0.0, Slot::Complex), Err(Error::NonFinite { .. })));
        let e = parse_expression("sqrt(x1)", 2).unwrap();
        assert!(matches!(sample_field(&e, &g, 0.0, Slot::Real), Err(Error::ImaginaryPart { .. })));
        let e = parse_expression("i*x1", 2).unwrap();
        assert!(matches!(sample_field(&e, &g, 0.0, Slot::Real), Err(Error::ImaginaryLiteral)));
        assert!(sample_field(&e, &g, 0.0, Slot::Complex).is_ok());
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = grid2(3.0, 16);
        let e = parse_expression("sin(x1*x2)^3 + tanh(t*x1)", 2).unwrap();
        let a = sample_field(&e, &g, 0.3, Slot::Real).unwrap();
        let b = sample_field(&e, &g, 0.3, Slot::Real).unwrap();
        for (p, q) in a.samples().iter().zip(b.samples()) {
            assert_eq!(p.re.to_bits(), q.re.to_bits());
            assert_eq!(p.im.to_bits(), q.im.to_bits());
        }
    }

    #[test]
    fn interpolant_reproduces_band_limited_function() {
        let g = grid2(PI, 16);
        let f = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, 2.0 * x[0] - 3.0 * x[1]) + (x[0]).cos());
        let p = SpectralInterpolant::new(&f);
        let x = [0.123, -1.7];
        let exact = Complex64::from_polar(1.0, 2.0 * x[0] - 3.0 * x[1]) + x[0].cos();
        assert!((p.value(&x) - exact).norm() < 1e-13);
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = grid2(PI, 16);
        let f = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, 3.0 * x[0] + x[1]));
        let d = f.derivative(0);
        let expected = f.scale(Complex64::new(0.0, 3.0));
        assert!(d.max_abs_diff(&expected) < 1e-12);
    }
}
