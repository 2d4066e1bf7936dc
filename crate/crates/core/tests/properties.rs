use num_complex::Complex64;
use proptest::prelude::*;

use hyperlace::carleman::{carleman_constant, CutoffBounds};
use hyperlace::catalog;
use hyperlace::massbound::{implied_constant, ImpliedConstant};
use hyperlace::operators::{assumption_norms, covariant_gradient, magnetic_field_of, DerivativeMode, SampledVector};
use hyperlace::snapshot::{read_snapshot, write_snapshot};
use hyperlace::*;

fn grid2(m: usize) -> Grid {
    Grid::new(SplitSignature::new(2, 1).unwrap(), 6.0, m).unwrap()
}

fn bump(grid: Grid, c: [f64; 4]) -> ComplexField {
    ComplexField::from_fn(grid, |x| {
        let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        Complex64::from_polar((-r2 / 2.0).exp(), c[2] * x[0] + c[3] * x[1])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(c0 in -1.0..1.0f64, c1 in -1.0..1.0f64, p0 in -2.0..2.0f64, p1 in -2.0..2.0f64) {
        let u = bump(grid2(32), [c0, c1, p0, p1]);
        let a = u.l2_norm();
        prop_assert!((a - u.spectral_l2_norm()).abs() <= 1e-12 * a);
    }

    #[test]
    fn snapshot_round_trip(c0 in -1.0..1.0f64, p1 in -2.0..2.0f64, t in 0.0..1.0f64) {
        let u = bump(grid2(16), [c0, 0.2, 0.5, p1]);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &u, t).unwrap();
        let (back, tb) = read_snapshot(buf.as_slice()).unwrap();
        prop_assert_eq!(tb, t);
        prop_assert_eq!(back.samples(), u.samples());
    }

    #[test]
    fn carleman_constant_is_monotone(base in 0.0..10.0f64, bump_by in 0.0..5.0f64, which in 0usize..6) {
        let norms = |v: [f64; 3]| hyperlace::operators::AssumptionNorms {
            m_v: 0.0, m_b: 0.0, m_xi: v[0], dta_norm: v[1], m_xtilde_b: v[2], xi: vec![1.0, 0.0], box_half_width: 1.0,
        };
        let bounds = |v: [f64; 3]| CutoffBounds { theta1: 0.0, theta2: 0.0, eta1: 0.0, eta2: 0.0, phi0: v[0], phi1: v[1], phi2: v[2] };
        let mut n = [base; 3];
        let mut b = [base; 3];
        let c0 = carleman_constant(&norms(n), &bounds(b)).unwrap();
        if which < 3 { n[which] += bump_by } else { b[which - 3] += bump_by }
        let c1 = carleman_constant(&norms(n), &bounds(b)).unwrap();
        prop_assert!(c1 >= c0 && c0 >= 1.0);
    }

    #[test]
    fn implied_constant_solves_its_equation(m in 1e-3..10.0f64, i in 1e-6..10.0f64, rho in 0.0..4.0f64, t in 0.01..0.33f64) {
        let ImpliedConstant::Value(c) = implied_constant(m, i, rho, t).unwrap() else { panic!("vacuous") };
        let lhs = (c / t).ln() + c * rho * rho / t + i.ln();
        prop_assert!((lhs - m.ln()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    /// `A -> A + ∇ψ`, `u -> e^{iψ} u` leaves `B` and `|∇_A u|` unchanged.
    #[test]
    fn gauge_invariance(c1 in -1.0..1.0f64, c2 in -1.0..1.0f64, shift in -0.5..0.5f64) {
        let grid = Grid::new(SplitSignature::new(2, 1).unwrap(), 8.0, 64).unwrap();
        let base = catalog::potential_texts("bounded-oscillatory", 2).unwrap();
        // ψ = c1 sin(x1) cos(x2) + c2 cos(x2)
        let grad = [format!("{c1}*cos(x1)*cos(x2)"), format!("-{c1}*sin(x1)*sin(x2) - {c2}*sin(x2)")];
        let shifted: Vec<String> = base.iter().zip(&grad).map(|(a, g)| format!("({a}) + ({g})")).collect();
        let a0 = ExprVector::parse(&base, 2).unwrap();
        let a1 = ExprVector::parse(&shifted, 2).unwrap();
        let b0 = magnetic_field_of(&a0, &grid, 0.0, DerivativeMode::Analytic).unwrap();
        let b1 = magnetic_field_of(&a1, &grid, 0.0, DerivativeMode::Analytic).unwrap();
        prop_assert!(b0.max_abs_diff(&b1) < 1e-12);
        let u = bump(grid, [shift, -shift, 0.3, -0.2]);
        let w = u.map_with_position(|x, v| v * Complex64::from_polar(1.0, c1 * x[0].sin() * x[1].cos() + c2 * x[1].cos()));
        let g0 = covariant_gradient(&u, &SampledVector::sample(&a0, &grid, 0.0).unwrap()).unwrap();
        let g1 = covariant_gradient(&w, &SampledVector::sample(&a1, &grid, 0.0).unwrap()).unwrap();
        for (p, q) in g0.iter().zip(&g1) {
            for (x, y) in p.samples().iter().zip(q.samples()) {
                prop_assert!((x.norm() - y.norm()).abs() < 1e-8);
            }
        }
        let xi = [1.0, 0.0];
        let n0 = assumption_norms(&a0, None, &xi, &grid, &[0.0]).unwrap();
        let n1 = assumption_norms(&a1, None, &xi, &grid, &[0.0]).unwrap();
        prop_assert!((n0.m_b - n1.m_b).abs() < 1e-12 * n0.m_b.max(1.0));
    }
}
