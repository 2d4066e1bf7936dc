//! Magnetic and electric potentials: the traits the numerical modules consume
//! and their expression-backed implementations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr, Wrt};
use crate::field::{sample_field, ComplexField, Slot};
use crate::grid::Grid;

/// Step of the default fourth-order central differences.
const FD_STEP: f64 = 1e-3;

fn central4(f: &mut impl FnMut(f64, &mut [f64]), at: f64, h: f64, out: &mut [f64]) {
    let n = out.len();
    let mut buf = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for (b, s) in buf.iter_mut().zip([-2.0, -1.0, 1.0, 2.0]) {
        f(at + s * h, b);
    }
    for i in 0..n {
        out[i] = (buf[0][i] - 8.0 * buf[1][i] + 8.0 * buf[2][i] - buf[3][i]) / (12.0 * h);
    }
}

/// A real vector potential `A(x, t)` on `R^n`.
pub trait VectorPotential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64], t: f64, out: &mut [f64]);

    /// `jac[j*n + k] = d_j A^k`.
    fn jacobian(&self, x: &[f64], t: f64, jac: &mut [f64]) {
        let n = self.dim();
        let mut col = vec![0.0; n];
        let mut y = x.to_vec();
        for j in 0..n {
            central4(
                &mut |s, out| {
                    y[j] = s;
                    self.value(&y, t, out)
                },
                x[j],
                FD_STEP,
                &mut col,
            );
            y[j] = x[j];
            jac[j * n..(j + 1) * n].copy_from_slice(&col);
        }
    }

    /// `hess[(i*n + j)*n + k] = d_i d_j A^k`.
    fn hessian(&self, x: &[f64], t: f64, hess: &mut [f64]) {
        let n = self.dim();
        let mut block = vec![0.0; n * n];
        let mut y = x.to_vec();
        for i in 0..n {
            central4(
                &mut |s, out| {
                    y[i] = s;
                    self.jacobian(&y, t, out)
                },
                x[i],
                FD_STEP,
                &mut block,
            );
            y[i] = x[i];
            hess[i * n * n..(i + 1) * n * n].copy_from_slice(&block);
        }
    }

    fn time_derivative(&self, x: &[f64], t: f64, out: &mut [f64]) {
        if !self.is_time_dependent() {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        central4(&mut |s, o| self.value(x, s, o), t, FD_STEP, out);
    }

    /// Whether `jacobian` and `hessian` are exact rather than differenced.
    fn has_analytic_derivatives(&self) -> bool {
        false
    }

    fn is_time_dependent(&self) -> bool {
        true
    }

    fn is_zero(&self) -> bool {
        false
    }

    /// `B_jk = d_j A^k - d_k A^j`, full row-major matrix.
    fn magnetic_field(&self, x: &[f64], t: f64, b: &mut [f64]) {
        let n = self.dim();
        let mut jac = vec![0.0; n * n];
        self.jacobian(x, t, &mut jac);
        for j in 0..n {
            for k in 0..n {
                b[j * n + k] = jac[j * n + k] - jac[k * n + j];
            }
        }
    }

    /// `sum_j d_j A^j` weighted by `weights[j]`.
    fn weighted_divergence(&self, x: &[f64], t: f64, weights: &[f64]) -> f64 {
        let n = self.dim();
        let mut jac = vec![0.0; n * n];
        self.jacobian(x, t, &mut jac);
        (0..n).map(|j| weights[j] * jac[j * n + j]).sum()
    }
}

/// A complex scalar potential `V(x, t)`.
pub trait ScalarPotential: Send + Sync {
    fn value(&self, x: &[f64], t: f64) -> Complex64;

    fn is_time_dependent(&self) -> bool {
        true
    }

    fn is_zero(&self) -> bool {
        false
    }

    /// Whether the potential is known to take real values only.
    fn is_real(&self) -> bool {
        false
    }
}

/// `A = 0` in dimension `n`.
#[derive(Clone, Copy, Debug)]
pub struct ZeroVector(pub usize);

impl VectorPotential for ZeroVector {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, _x: &[f64], _t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    fn jacobian(&self, _x: &[f64], _t: f64, jac: &mut [f64]) {
        jac.iter_mut().for_each(|v| *v = 0.0);
    }
    fn hessian(&self, _x: &[f64], _t: f64, hess: &mut [f64]) {
        hess.iter_mut().for_each(|v| *v = 0.0);
    }
    fn time_derivative(&self, _x: &[f64], _t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    fn has_analytic_derivatives(&self) -> bool {
        true
    }
    fn is_time_dependent(&self) -> bool {
        false
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// `V = 0`.
#[derive(Clone, Copy, Debug)]
pub struct ZeroScalar;

impl ScalarPotential for ZeroScalar {
    fn value(&self, _x: &[f64], _t: f64) -> Complex64 {
        Complex64::default()
    }
    fn is_time_dependent(&self) -> bool {
        false
    }
    fn is_zero(&self) -> bool {
        true
    }
    fn is_real(&self) -> bool {
        true
    }
}

/// Expression-backed vector potential with symbolic derivatives where the
/// expressions allow them.
#[derive(Clone, Debug)]
pub struct ExprVector {
    texts: Vec<String>,
    components: Vec<Expr>,
    jacobian: Option<Vec<Expr>>,
    hessian: Option<Vec<Expr>>,
    dt: Option<Vec<Expr>>,
    time_dependent: Vec<bool>,
}

impl ExprVector {
    /// Parses one expression per component. The literal `i` is rejected.
    pub fn parse(texts: &[impl AsRef<str>], n: usize) -> Result<Self> {
        if texts.len() != n {
            return Err(Error::Precondition(format!("{} magnetic components for dimension {n}", texts.len())));
        }
        let components = texts
            .iter()
            .map(|t| {
                let e = parse_expression(t.as_ref(), n)?;
                if e.contains_imaginary_literal() {
                    return Err(Error::ImaginaryLiteral);
                }
                Ok(e)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_exprs(texts.iter().map(|t| t.as_ref().to_string()).collect(), components))
    }

    fn from_exprs(texts: Vec<String>, components: Vec<Expr>) -> Self {
        let n = components.len();
        let jacobian: Option<Vec<Expr>> = (0..n)
            .flat_map(|j| components.iter().map(move |c| c.derivative(Wrt::Var(j))))
            .collect();
        let hessian = jacobian.as_ref().and_then(|jac| {
            (0..n)
                .flat_map(|i| jac.iter().map(move |d| d.derivative(Wrt::Var(i))))
                .collect::<Option<Vec<_>>>()
        });
        let dt = components.iter().map(|c| c.derivative(Wrt::Time)).collect();
        let time_dependent = components.iter().map(|c| c.depends_on_time()).collect();
        Self { texts, components, jacobian, hessian, dt, time_dependent }
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn time_dependent_components(&self) -> &[bool] {
        &self.time_dependent
    }

    /// Samples component `j` on the grid (real slot).
    pub fn sample_component(&self, j: usize, grid: &Grid, t: f64) -> Result<ComplexField> {
        sample_field(&self.components[j], grid, t, Slot::Real)
    }

    /// Exact divergence weights `sum_j w_j d_j A^j` as expressions, when available.
    pub fn divergence_expr(&self, weights: &[f64]) -> Option<Expr> {
        let n = self.components.len();
        let jac = self.jacobian.as_ref()?;
        let mut acc = Expr::Num(0.0);
        for j in 0..n {
            let term = crate::expr::mul(Expr::Num(weights[j]), jac[j * n + j].clone());
            acc = crate::expr::add(acc, term);
        }
        Some(acc)
    }
}

impl VectorPotential for ExprVector {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn value(&self, x: &[f64], t: f64, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval_real(x, t);
        }
    }

    fn jacobian(&self, x: &[f64], t: f64, jac: &mut [f64]) {
        match &self.jacobian {
            Some(exprs) => {
                for (o, e) in jac.iter_mut().zip(exprs) {
                    *o = e.eval_real(x, t);
                }
            }
            None => {
                let fallback = FdOnly(self);
                fallback.jacobian(x, t, jac)
            }
        }
    }

    fn hessian(&self, x: &[f64], t: f64, hess: &mut [f64]) {
        match &self.hessian {
            Some(exprs) => {
                for (o, e) in hess.iter_mut().zip(exprs) {
                    *o = e.eval_real(x, t);
                }
            }
            None => {
                let fallback = FdOnly(self);
                fallback.hessian(x, t, hess)
            }
        }
    }

    fn time_derivative(&self, x: &[f64], t: f64, out: &mut [f64]) {
        match &self.dt {
            Some(exprs) => {
                for (o, e) in out.iter_mut().zip(exprs) {
                    *o = e.eval_real(x, t);
                }
            }
            None => {
                let fallback = FdOnly(self);
                fallback.time_derivative(x, t, out)
            }
        }
    }

    fn has_analytic_derivatives(&self) -> bool {
        self.jacobian.is_some() && self.hessian.is_some()
    }

    fn is_time_dependent(&self) -> bool {
        self.time_dependent.iter().any(|&b| b)
    }

    fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }
}

/// Routes an [`ExprVector`] through the finite-difference trait defaults.
struct FdOnly<'a>(&'a ExprVector);

impl VectorPotential for FdOnly<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64], t: f64, out: &mut [f64]) {
        self.0.value(x, t, out)
    }
    fn is_time_dependent(&self) -> bool {
        self.0.is_time_dependent()
    }
}

/// Expression-backed complex scalar potential.
#[derive(Clone, Debug)]
pub struct ExprScalar {
    text: String,
    expr: Expr,
    real: bool,
}

impl ExprScalar {
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let expr = parse_expression(text, n)?;
        let real = !expr.contains_imaginary_literal();
        Ok(Self { text: text.to_string(), expr, real })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> Result<ComplexField> {
        sample_field(&self.expr, grid, t, Slot::Complex)
    }
}

impl ScalarPotential for ExprScalar {
    fn value(&self, x: &[f64], t: f64) -> Complex64 {
        self.expr.eval(x, t)
    }
    fn is_time_dependent(&self) -> bool {
        self.expr.depends_on_time()
    }
    fn is_zero(&self) -> bool {
        self.expr.is_zero()
    }
    fn is_real(&self) -> bool {
        self.real
    }
}

/// Parsed magnetic and electric potentials of one scenario.
#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub a: ExprVector,
    pub v: ExprScalar,
}

impl PotentialSpec {
    pub fn parse(a: &[impl AsRef<str>], v: &str, n: usize) -> Result<Self> {
        Ok(Self { a: ExprVector::parse(a, n)?, v: ExprScalar::parse(v, n)? })
    }

    pub fn free(n: usize) -> Self {
        let zeros = vec!["0"; n];
        Self::parse(&zeros, "0", n).expect("zero potentials parse")
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// Samples every component of `a` on `grid` at time `t` as real arrays.
/// Non-finite samples are errors.
pub fn sample_vector(a: &dyn VectorPotential, grid: &Grid, t: f64) -> Result<Vec<Vec<f64>>> {
    let n = grid.dim();
    let mut comps = vec![vec![0.0; grid.len()]; n];
    if a.is_zero() {
        return Ok(comps);
    }
    let mut x = vec![0.0; n];
    let mut val = vec![0.0; n];
    for idx in 0..grid.len() {
        grid.node(idx, &mut x);
        a.value(&x, t, &mut val);
        for j in 0..n {
            if !val[j].is_finite() {
                return Err(Error::NonFinite { location: format!("A^{} at x = {x:?}, t = {t}", j + 1) });
            }
            comps[j][idx] = val[j];
        }
    }
    Ok(comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_and_fd_jacobians_agree() {
        let a = ExprVector::parse(&["sin(x1*x2) + t*x2^2", "exp(-x1^2)*cos(x2)"], 2).unwrap();
        assert!(a.has_analytic_derivatives());
        assert!(a.is_time_dependent());
        let x = [0.4, -0.7];
        let t = 0.3;
        let mut exact = [0.0; 4];
        a.jacobian(&x, t, &mut exact);
        let mut fd = [0.0; 4];
        FdOnly(&a).jacobian(&x, t, &mut fd);
        for (e, f) in exact.iter().zip(&fd) {
            assert!((e - f).abs() < 1e-10);
        }
        let mut he = [0.0; 8];
        let mut hf = [0.0; 8];
        a.hessian(&x, t, &mut he);
        FdOnly(&a).hessian(&x, t, &mut hf);
        for (e, f) in he.iter().zip(&hf) {
            assert!((e - f).abs() < 1e-7);
        }
        let mut dt = [0.0; 2];
        a.time_derivative(&x, t, &mut dt);
        assert!((dt[0] - x[1] * x[1]).abs() < 1e-15 && dt[1] == 0.0);
    }

    #[test]
    fn magnetic_slot_rejects_imaginary_literal() {
        assert!(matches!(ExprVector::parse(&["i*x1", "0"], 2), Err(Error::ImaginaryLiteral)));
        let v = ExprScalar::parse("x1 - i*x2", 2).unwrap();
        assert!(!v.is_real());
        assert_eq!(v.value(&[1.0, 2.0], 0.0), Complex64::new(1.0, -2.0));
    }

    #[test]
    fn constant_field_potential() {
        let a = ExprVector::parse(&["-1.5*x2", "1.5*x1"], 2).unwrap();
        let mut b = [0.0; 4];
        a.magnetic_field(&[0.3, 2.0], 0.0, &mut b);
        assert_eq!(b, [0.0, 3.0, -3.0, 0.0]);
        assert!(!a.is_time_dependent());
    }
}
