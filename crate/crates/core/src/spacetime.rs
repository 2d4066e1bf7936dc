//! Pointwise space-time field handles.

use num_complex::Complex64;

use crate::error::Result;

/// Value, gradient, diagonal second derivatives and time derivative at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub grad: Vec<Complex64>,
    pub diag_hess: Vec<Complex64>,
    pub dt: Complex64,
}

impl Jet {
    pub fn zero(n: usize) -> Self {
        Self {
            value: Complex64::default(),
            grad: vec![Complex64::default(); n],
            diag_hess: vec![Complex64::default(); n],
            dt: Complex64::default(),
        }
    }

    /// Multiplies the jet by a scalar constant.
    pub fn scaled(mut self, s: Complex64) -> Self {
        self.value *= s;
        self.dt *= s;
        self.grad.iter_mut().for_each(|g| *g *= s);
        self.diag_hess.iter_mut().for_each(|g| *g *= s);
        self
    }
}

const SPACE_STEP: f64 = 2e-3;
const TIME_STEP: f64 = 1e-3;

/// A complex field `u(x, t)` that can be evaluated anywhere in its domain.
pub trait SpaceTimeField: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64], t: f64) -> Result<Complex64>;

    /// Closed time interval on which `value` is defined.
    fn time_domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    /// Derivatives by fourth-order differences; one-sided in time near the
    /// ends of the domain.
    fn jet(&self, x: &[f64], t: f64) -> Result<Jet> {
        let n = self.dim();
        let value = self.value(x, t)?;
        let mut grad = vec![Complex64::default(); n];
        let mut diag_hess = vec![Complex64::default(); n];
        let mut y = x.to_vec();
        let h = SPACE_STEP;
        for j in 0..n {
            let mut f = [Complex64::default(); 4];
            for (slot, s) in f.iter_mut().zip([-2.0, -1.0, 1.0, 2.0]) {
                y[j] = x[j] + s * h;
                *slot = self.value(&y, t)?;
            }
            y[j] = x[j];
            grad[j] = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h);
            diag_hess[j] = (-f[0] + 16.0 * f[1] - 30.0 * value + 16.0 * f[2] - f[3]) / (12.0 * h * h);
        }
        let (t0, t1) = self.time_domain();
        let k = TIME_STEP;
        let dt = if t - 2.0 * k >= t0 && t + 2.0 * k <= t1 {
            let f: Vec<Complex64> =
                [-2.0, -1.0, 1.0, 2.0].iter().map(|s| self.value(x, t + s * k)).collect::<Result<_>>()?;
            (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * k)
        } else {
            let dir = if t - 2.0 * k < t0 { 1.0 } else { -1.0 };
            let f: Vec<Complex64> =
                (0..5).map(|i| self.value(x, t + dir * i as f64 * k)).collect::<Result<_>>()?;
            dir * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * k)
        };
        Ok(Jet { value, grad, diag_hess, dt })
    }
}

/// Closure-backed [`SpaceTimeField`] with difference-quotient jets.
pub struct FnField<F> {
    dim: usize,
    domain: (f64, f64),
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], f64) -> Complex64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, domain: (0.0, 1.0), f }
    }

    pub fn with_domain(mut self, t0: f64, t1: f64) -> Self {
        self.domain = (t0, t1);
        self
    }
}

impl<F> SpaceTimeField for FnField<F>
where
    F: Fn(&[f64], f64) -> Complex64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64], t: f64) -> Result<Complex64> {
        Ok((self.f)(x, t))
    }
    fn time_domain(&self) -> (f64, f64) {
        self.domain
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difference_jet_of_smooth_function() {
        let f = FnField::new(2, |x: &[f64], t: f64| Complex64::new((x[0] * t).sin(), x[1] * x[1] * t * t));
        let x = [0.5, -0.25];
        for t in [0.0, 0.5, 1.0] {
            let j = f.jet(&x, t).unwrap();
            let dx0 = Complex64::new(t * (x[0] * t).cos(), 0.0);
            let dx1 = Complex64::new(0.0, 2.0 * x[1] * t * t);
            let dxx0 = Complex64::new(-t * t * (x[0] * t).sin(), 0.0);
            let dt = Complex64::new(x[0] * (x[0] * t).cos(), 2.0 * x[1] * x[1] * t);
            assert!((j.grad[0] - dx0).norm() < 1e-10);
            assert!((j.grad[1] - dx1).norm() < 1e-10);
            assert!((j.diag_hess[0] - dxx0).norm() < 1e-8);
            assert!((j.dt - dt).norm() < 1e-9, "t = {t}");
        }
    }
}
