//! Gauss–Legendre and Simpson rules, plus the Bessel function needed for
//! Fourier transforms of ball indicators.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 2;
pub const MAX_NODES: usize = 128;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from Chebyshev initial guesses.
    fn compute(n: usize) -> Self {
        if n == 2 {
            let c = 3f64.sqrt() / 6.0;
            return Self { nodes: vec![0.5 - c, 0.5 + c], weights: vec![0.5, 0.5] };
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    let (_, d) = legendre(n, z);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - z);
            nodes[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    /// Shared rule with `n` nodes, `2 <= n <= 128`.
    pub fn rule(n: usize) -> Result<Arc<GaussLegendre>> {
        if !(MIN_NODES..=MAX_NODES).contains(&n) {
            return Err(Error::Precondition(format!("Gauss-Legendre node count {n} outside [2, 128]")));
        }
        static RULES: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = RULES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        Ok(guard.entry(n).or_insert_with(|| Arc::new(Self::compute(n))).clone())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// `int_0^1 f(s) ds` with an `nodes`-point rule. A non-finite sample is an
/// error naming the offending node.
pub fn gauss_legendre_01(f: impl Fn(f64) -> f64, nodes: usize) -> Result<f64> {
    let rule = GaussLegendre::rule(nodes)?;
    let mut acc = 0.0;
    for (i, (&s, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let v = f(s);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { node: i, s });
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Vector-valued version: `f(s, out)` fills `out` of length `dim`.
pub fn gauss_legendre_01_vec(mut f: impl FnMut(f64, &mut [f64]), dim: usize, nodes: usize) -> Result<Vec<f64>> {
    let rule = GaussLegendre::rule(nodes)?;
    let mut acc = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    for (i, (&s, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        f(s, &mut buf);
        if buf.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIntegrand { node: i, s });
        }
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += w * b;
        }
    }
    Ok(acc)
}

/// Composite Simpson weights for `count` equispaced samples with spacing `h`
/// (`count` odd, at least 3).
pub fn simpson_weights(count: usize, h: f64) -> Result<Vec<f64>> {
    if count < 3 || count % 2 == 0 {
        return Err(Error::Precondition(format!("Simpson needs an odd sample count >= 3, got {count}")));
    }
    Ok((0..count)
        .map(|i| {
            let c = if i == 0 || i == count - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect())
}

/// Composite Simpson on equispaced samples.
pub fn composite_simpson(values: &[f64], h: f64) -> Result<f64> {
    let w = simpson_weights(values.len(), h)?;
    Ok(values.iter().zip(&w).map(|(v, w)| v * w).sum())
}

/// Bessel `J_1(z)` from the periodic trapezoid rule on Bessel's integral,
/// which converges geometrically once the node count exceeds `|z|`.
pub fn bessel_j1(z: f64) -> f64 {
    let a = z.abs();
    let nodes = (a + 12.0 * a.cbrt() + 32.0).ceil() as usize;
    let h = 2.0 * PI / nodes as f64;
    let s: f64 = (0..nodes)
        .map(|j| {
            let tau = j as f64 * h;
            (tau - z * tau.sin()).cos()
        })
        .sum();
    s / nodes as f64
}

/// Fourier transform `int_{|x|<=R} e^{-i q.x} dx` of a ball indicator in
/// dimension 2 or 3, as a function of `|q|`.
pub fn ball_indicator_transform(dim: usize, q: f64, radius: f64) -> Result<f64> {
    let x = q * radius;
    match dim {
        2 => {
            if x.abs() < 1e-8 {
                Ok(PI * radius * radius * (1.0 - x * x / 8.0))
            } else {
                Ok(2.0 * PI * radius * bessel_j1(x) / q)
            }
        }
        3 => {
            let r3 = radius.powi(3);
            if x.abs() < 0.05 {
                let x2 = x * x;
                let series = 1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0 - x2 * x2 * x2 / 45360.0;
                Ok(4.0 * PI * r3 * series)
            } else {
                Ok(4.0 * PI * (x.sin() - x * x.cos()) / q.powi(3))
            }
        }
        _ => Err(Error::Unsupported(format!("ball integrals in dimension {dim}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_examples() {
        assert!((gauss_legendre_01(|_| 1.0, 2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(gauss_legendre_01(|s| s * s * s, 2).unwrap(), 0.25);
        let e = gauss_legendre_01(f64::exp, 16).unwrap();
        assert!((e - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        assert!(gauss_legendre_01(|_| 1.0, 1).is_err());
        assert!(gauss_legendre_01(|_| 1.0, 129).is_err());
    }

    #[test]
    fn polynomial_exactness_all_sizes() {
        for n in [2usize, 3, 7, 16, 32, 64, 128] {
            let deg = (2 * n - 1) as i32;
            let v = gauss_legendre_01(|s| s.powi(deg), n).unwrap();
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n = {n}");
            let w: f64 = GaussLegendre::rule(n).unwrap().weights.iter().sum();
            assert!((w - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn nonfinite_sample_names_node() {
        match gauss_legendre_01(|s| if s < 0.1 { f64::INFINITY } else { s }, 8) {
            Err(Error::NonFiniteIntegrand { node: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let h = 0.1;
        let vals: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((composite_simpson(&vals, h).unwrap() - 0.25).abs() < 1e-14);
        assert!(composite_simpson(&vals[..10], h).is_err());
    }

    #[test]
    fn bessel_reference_values() {
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_55).abs() < 1e-15);
        assert!((bessel_j1(10.0) - 0.043_472_746_168_861_41).abs() < 1e-15);
        assert!((bessel_j1(-2.5) + 0.497_094_102_464_274).abs() < 1e-15);
        assert!(bessel_j1(0.0).abs() < 1e-16);
    }

    #[test]
    fn ball_transform_at_zero_is_volume() {
        let r = 1.7;
        assert!((ball_indicator_transform(2, 0.0, r).unwrap() - PI * r * r).abs() < 1e-14);
        assert!((ball_indicator_transform(3, 0.0, r).unwrap() - 4.0 * PI * r.powi(3) / 3.0).abs() < 1e-13);
        // continuity across the series switch
        let a = ball_indicator_transform(3, 0.0499 / r, r).unwrap();
        let b = ball_indicator_transform(3, 0.0501 / r, r).unwrap();
        assert!((a - b).abs() < 1e-4 * a);
    }
}
