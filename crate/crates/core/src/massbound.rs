//! Quantities of the mass-propagation lower bound
//!
//! ```text
//! M_u^2 <= C e^{C ρ^2 / t} / t * I(ρ, t),
//! I(ρ, t) = ∫_{t/4}^{3t} ∫_{| |y| - ρ - ρ s / t | < 4 (ρ + 1) √t} |u|^2 + s |∇_A u|^2 dy ds,
//! ```
//!
//! evaluated on stored trajectories. The constant `C` is existential, so it is
//! inverted pointwise into an implied `C(ρ, t)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::operators::{covariant_gradient, SampledVector};
use crate::potential::VectorPotential;
use crate::quadrature::simpson_weights;
use crate::region::{grid_l2_norm, DensitySpectrum, Region};
use crate::solver::Trajectory;

/// Default `t` scan, before the `3t <= 1` and geometry filters.
pub const DEFAULT_T_SCAN: [f64; 5] = [1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0];
const BISECTION_TOL: f64 = 1e-10;

/// `∫_{|x| <= R0} |u0|^2`.
pub fn initial_mass(u0: &ComplexField, r0: f64) -> Result<f64> {
    let norm = grid_l2_norm(u0, Region::Ball { radius: r0 })?;
    Ok(norm.value * norm.value)
}

fn sampled(a: &dyn VectorPotential, grid: &Grid, t: f64) -> Result<SampledVector> {
    if a.is_zero() {
        Ok(SampledVector::zeros(*grid))
    } else {
        SampledVector::sample(a, grid, t)
    }
}

/// Density `|u|^2 + weight |∇_A u|^2` ready for region integrals.
fn energy_density(u: &ComplexField, a: &SampledVector, gradient_weight: f64) -> Result<DensitySpectrum> {
    let mut d = DensitySpectrum::new(*u.grid())?;
    d.accumulate(u, 1.0)?;
    if gradient_weight != 0.0 {
        for g in covariant_gradient(u, a)? {
            d.accumulate(&g, gradient_weight)?;
        }
    }
    Ok(d)
}

/// `sup_t ∫_{|x| <= R1} |u|^2 + |∇_A u|^2` over the stored time nodes.
pub fn energy_sup(traj: &Trajectory, a: &dyn VectorPotential, r1: f64) -> Result<f64> {
    let grid = *traj.grid();
    let values = traj
        .times()
        .par_iter()
        .zip(traj.fields())
        .map(|(&t, u)| energy_density(u, &sampled(a, &grid, t)?, 1.0)?.mass(Region::Ball { radius: r1 }).map(|m| m.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CylinderOptions {
    /// The `4` in the shell half-width `4 (ρ + 1) √t`.
    pub width_factor: f64,
    /// Odd number of Simpson nodes on `[t/4, 3t]`.
    pub time_nodes: usize,
}

impl Default for CylinderOptions {
    fn default() -> Self {
        Self { width_factor: 4.0, time_nodes: 33 }
    }
}

/// Shell of the cylinder at time `s`: centre radius and half-width.
pub fn shell_at(rho: f64, t: f64, s: f64, width_factor: f64) -> (f64, f64) {
    (rho + rho * s / t, width_factor * (rho + 1.0) * t.sqrt())
}

/// Largest radius reached by the cylinder over `s in [t/4, 3t]`.
pub fn cylinder_outer_radius(rho: f64, t: f64, width_factor: f64) -> f64 {
    let (c, w) = shell_at(rho, t, 3.0 * t, width_factor);
    c + w
}

pub fn cylinder_integral(traj: &Trajectory, a: &dyn VectorPotential, rho: f64, t: f64) -> Result<f64> {
    cylinder_integral_with(traj, a, rho, t, &CylinderOptions::default())
}

/// `I(ρ, t)` with time interpolation of the trajectory and composite Simpson
/// in `s`.
pub fn cylinder_integral_with(
    traj: &Trajectory,
    a: &dyn VectorPotential,
    rho: f64,
    t: f64,
    options: &CylinderOptions,
) -> Result<f64> {
    if !(t > 0.0 && 3.0 * t <= 1.0 && rho >= 0.0) {
        return Err(Error::Precondition(format!("cylinder needs 0 < 3t <= 1 and ρ >= 0, got ρ = {rho}, t = {t}")));
    }
    let grid = *traj.grid();
    let outer = cylinder_outer_radius(rho, t, options.width_factor);
    if outer > grid.half_width() {
        return Err(Error::Precondition(format!(
            "cylinder at ρ = {rho}, t = {t} reaches radius {outer}, outside the box of half width {}",
            grid.half_width()
        )));
    }
    let (s0, s1) = (0.25 * t, 3.0 * t);
    let count = options.time_nodes;
    let weights = simpson_weights(count, (s1 - s0) / (count - 1) as f64)?;
    let static_a = if a.is_time_dependent() { None } else { Some(sampled(a, &grid, 0.0)?) };
    let values = (0..count)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let s = s0 + (s1 - s0) * i as f64 / (count - 1) as f64;
            let u = traj.field_at(s)?;
            let owned;
            let av = match &static_a {
                Some(v) => v,
                None => {
                    owned = sampled(a, &grid, s)?;
                    &owned
                }
            };
            let (c, w) = shell_at(rho, t, s, options.width_factor);
            Ok(energy_density(&u, av, s)?.mass(Region::shell(c, w))?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(values.iter().zip(&weights).map(|(v, w)| v * w).sum())
}

/// Outcome of inverting the bound at one `(ρ, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ImpliedConstant {
    Value(f64),
    /// `I = 0` while `M_u > 0`: no finite `C` satisfies the bound.
    Vacuous,
}

impl ImpliedConstant {
    pub fn value(self) -> Option<f64> {
        match self {
            ImpliedConstant::Value(c) => Some(c),
            ImpliedConstant::Vacuous => None,
        }
    }
}

/// The `C > 0` with `M_u^2 = (C / t) e^{C ρ^2 / t} I`, by bisection on the
/// logarithm of the right side.
pub fn implied_constant(m_u_sq: f64, i: f64, rho: f64, t: f64) -> Result<ImpliedConstant> {
    if !(m_u_sq >= 0.0 && i >= 0.0 && t > 0.0 && rho.is_finite() && m_u_sq.is_finite() && i.is_finite()) {
        return Err(Error::Precondition(format!("implied constant inputs M_u^2 = {m_u_sq}, I = {i}, ρ = {rho}, t = {t}")));
    }
    if m_u_sq == 0.0 {
        return Ok(ImpliedConstant::Value(0.0));
    }
    if i == 0.0 {
        return Ok(ImpliedConstant::Vacuous);
    }
    let k = rho * rho / t;
    let target = m_u_sq.ln() - i.ln() + t.ln();
    let f = |c: f64| c.ln() + k * c - target;
    let (mut lo, mut hi) = (1.0, 1.0);
    while f(lo) > 0.0 {
        lo *= 0.5;
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    while hi - lo > BISECTION_TOL * hi * 1e-2 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ImpliedConstant::Value(0.5 * (lo + hi)))
}

/// Checks `R1 > 4 (R0 + 1)`, `0 < 3t <= 1` and `R0 <= ρ <= R1`.
pub fn validate_scan_point(r0: f64, r1: f64, rho: f64, t: f64) -> Result<()> {
    if !(r0 >= 0.0 && r1 > 4.0 * (r0 + 1.0)) {
        return Err(Error::Hypothesis(format!("need R1 > 4(R0 + 1), got R0 = {r0}, R1 = {r1}")));
    }
    if !(t > 0.0 && 3.0 * t <= 1.0) {
        return Err(Error::Hypothesis(format!("need 0 < 3t <= 1, got t = {t}")));
    }
    if !(r0 <= rho && rho <= r1) {
        return Err(Error::Hypothesis(format!("need R0 <= ρ <= R1, got ρ = {rho}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassBoundRow {
    pub rho: f64,
    pub t: f64,
    pub m_u_sq: f64,
    pub e_u_sq: f64,
    pub i: f64,
    pub c: Option<f64>,
    /// The bound carries no information here: `M_u = 0` or `I = 0`.
    pub vacuous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub rho: f64,
    pub t: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassBoundDiagnostics {
    /// Largest `|u|` on the outer grid layer over stored times.
    pub boundary_decay: f64,
    /// Relative change of `I` at the headline point when the Simpson nodes
    /// are halved.
    pub discretization: f64,
    pub time_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassBoundReport {
    pub r0: f64,
    pub r1: f64,
    pub m_u_sq: f64,
    pub e_u_sq: f64,
    pub rows: Vec<MassBoundRow>,
    pub skipped: Vec<SkippedPoint>,
    /// Largest `t` among evaluated rows.
    pub t_star_used: Option<f64>,
    pub max_c: Option<f64>,
    pub median_c: Option<f64>,
    pub diagnostics: MassBoundDiagnostics,
}

/// Evaluates the bound over the `(ρ, t)` scan. Points outside the
/// hypotheses or the box are listed as skipped; `R1 <= 4 (R0 + 1)` is an
/// error.
pub fn mass_bound_scan(
    traj: &Trajectory,
    a: &dyn VectorPotential,
    r0: f64,
    r1: f64,
    rhos: &[f64],
    ts: &[f64],
    options: &CylinderOptions,
) -> Result<MassBoundReport> {
    if !(r0 >= 0.0 && r1 > 4.0 * (r0 + 1.0)) {
        return Err(Error::Hypothesis(format!("need R1 > 4(R0 + 1), got R0 = {r0}, R1 = {r1}")));
    }
    let u0 = traj.field_at(0.0)?;
    let m_u_sq = initial_mass(&u0, r0)?;
    let e_u_sq = energy_sup(traj, a, r1)?;
    let half = traj.grid().half_width();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &t in ts {
        for &rho in rhos {
            let reason = match validate_scan_point(r0, r1, rho, t) {
                Err(e) => Some(e.to_string()),
                Ok(()) if cylinder_outer_radius(rho, t, options.width_factor) > half => {
                    Some(format!("cylinder leaves the box of half width {half}"))
                }
                Ok(()) => None,
            };
            match reason {
                Some(reason) => skipped.push(SkippedPoint { rho, t, reason }),
                None => points.push((rho, t)),
            }
        }
    }
    let rows = points
        .iter()
        .map(|&(rho, t)| -> Result<MassBoundRow> {
            let i = cylinder_integral_with(traj, a, rho, t, options)?;
            let implied = implied_constant(m_u_sq, i, rho, t)?;
            let vacuous = m_u_sq == 0.0 || i == 0.0;
            Ok(MassBoundRow { rho, t, m_u_sq, e_u_sq, i, c: implied.value(), vacuous })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cs: Vec<f64> = rows.iter().filter(|r| !r.vacuous).filter_map(|r| r.c).collect();
    cs.sort_by(f64::total_cmp);
    let max_c = cs.last().copied();
    let median_c = if cs.is_empty() {
        None
    } else if cs.len() % 2 == 1 {
        Some(cs[cs.len() / 2])
    } else {
        Some(0.5 * (cs[cs.len() / 2 - 1] + cs[cs.len() / 2]))
    };
    let headline = rows.iter().filter(|r| !r.vacuous).max_by(|a, b| a.c.unwrap_or(0.0).total_cmp(&b.c.unwrap_or(0.0)));
    let discretization = match headline {
        Some(row) if row.i > 0.0 => {
            let coarse = CylinderOptions { time_nodes: options.time_nodes / 2 + usize::from((options.time_nodes / 2) % 2 == 0), ..*options };
            let i = cylinder_integral_with(traj, a, row.rho, row.t, &coarse)?;
            (i - row.i).abs() / row.i
        }
        _ => 0.0,
    };
    let boundary_decay = traj.fields().iter().map(|f| f.boundary_max()).fold(0.0, f64::max);
    Ok(MassBoundReport {
        r0,
        r1,
        m_u_sq,
        e_u_sq,
        t_star_used: rows.iter().map(|r| r.t).reduce(f64::max),
        rows,
        skipped,
        max_c,
        median_c,
        diagnostics: MassBoundDiagnostics { boundary_decay, discretization, time_nodes: options.time_nodes },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum VanishingMode {
    /// Fixed `t`, increasing `ρ`.
    RhoSequence { t: f64, rhos: Vec<f64> },
    /// Fixed `ρ`, decreasing `t`.
    TSequence { rho: f64, ts: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VanishingEntry {
    pub rho: f64,
    pub t: f64,
    pub i: f64,
    /// `C e^{C ρ^2 / t} / t * I(ρ, t)`.
    pub value: f64,
}

/// Tabulates the right side of the bound with a calibrated `C` along a
/// sequence of `(ρ, t)`.
pub fn vanishing_diagnostic(
    traj: &Trajectory,
    a: &dyn VectorPotential,
    mode: &VanishingMode,
    c: f64,
) -> Result<Vec<VanishingEntry>> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Precondition(format!("calibrated C = {c} must be finite and non-negative")));
    }
    let points: Vec<(f64, f64)> = match mode {
        VanishingMode::RhoSequence { t, rhos } => rhos.iter().map(|&r| (r, *t)).collect(),
        VanishingMode::TSequence { rho, ts } => ts.iter().map(|&t| (*rho, t)).collect(),
    };
    points
        .into_iter()
        .map(|(rho, t)| {
            let i = cylinder_integral(traj, a, rho, t)?;
            let value = if c == 0.0 || i == 0.0 { 0.0 } else { c * (c * rho * rho / t).exp() / t * i };
            Ok(VanishingEntry { rho, t, i, value })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::gaussian_product;
    use crate::grid::SplitSignature;
    use crate::potential::ZeroVector;
    use crate::quadrature::GaussLegendre;
    use crate::solver::Provenance;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn gaussian_traj(m: usize, half: f64, steps: usize) -> (Trajectory, crate::exact::ExactSolution) {
        let sig = SplitSignature::new(2, 1).unwrap();
        let grid = Grid::new(sig, half, m).unwrap();
        let ex = gaussian_product(&[1.0, 1.2], sig).unwrap();
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
        let traj = Trajectory::sample(&ex, &grid, &times, Provenance::Exact("gaussian_product".into()), true).unwrap();
        (traj, ex)
    }

    #[test]
    fn initial_mass_examples() {
        let sig = SplitSignature::new(2, 2).unwrap();
        let grid = Grid::new(sig, 8.0, 64).unwrap();
        assert_eq!(initial_mass(&ComplexField::zeros(grid), 1.0).unwrap(), 0.0);
        let u = ComplexField::from_fn(grid, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0));
        // ∫_{|x|<=1} e^{-2|x|^2} = π (1 - e^{-2}) / 2
        let want = PI * (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((initial_mass(&u, 1.0).unwrap() - want).abs() < 1e-6);
        let mut last = 0.0;
        for r in [0.5, 1.0, 2.0, 3.0] {
            let m = initial_mass(&u, r).unwrap();
            assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn implied_constant_examples() {
        // C e^C = e at C = 1
        let c = implied_constant(1f64.exp(), 0.5, 0.5f64.sqrt(), 0.5).unwrap().value().unwrap();
        assert!((c - 1.0).abs() < 1e-10);
        assert_eq!(implied_constant(0.0, 2.0, 1.0, 0.1).unwrap(), ImpliedConstant::Value(0.0));
        assert_eq!(implied_constant(1.0, 0.0, 1.0, 0.1).unwrap(), ImpliedConstant::Vacuous);
        let c1 = implied_constant(3.0, 0.2, 1.5, 0.1).unwrap().value().unwrap();
        let c2 = implied_constant(3.0, 0.4, 1.5, 0.1).unwrap().value().unwrap();
        assert!(c2 < c1);
        let lhs = (c1 / 0.1) * (c1 * 2.25 / 0.1).exp() * 0.2;
        assert!((lhs / 3.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn validator_boundaries() {
        assert!(validate_scan_point(1.0, 8.0, 2.0, 0.1).is_err());
        assert!(validate_scan_point(1.0, 8.0 + 1e-12, 2.0, 0.1).is_ok());
        assert!(validate_scan_point(1.0, 9.0, 2.0, 1.0 / 3.0).is_ok());
        assert!(validate_scan_point(1.0, 9.0, 2.0, 1.0 / 3.0 + 1e-15).is_err());
        assert!(validate_scan_point(1.0, 9.0, 2.0, 0.0).is_err());
        assert!(validate_scan_point(1.0, 9.0, 0.5, 0.1).is_err());
        assert!(matches!(validate_scan_point(1.0, 8.0, 2.0, 0.1), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn shell_geometry_at_s_equals_t() {
        let (c, w) = shell_at(1.5, 0.04, 0.04, 4.0);
        assert!((c - 3.0).abs() < 1e-15);
        assert!((2.0 * w - 8.0 * 2.5 * 0.2).abs() < 1e-14);
    }

    #[test]
    fn energy_sup_of_gaussian_matches_closed_form() {
        let (traj, ex) = gaussian_traj(64, 10.0, 16);
        let sup = energy_sup(&traj, &ZeroVector(2), 9.0).unwrap();
        // polar quadrature of |u|^2 + |∇u|^2 at every stored time
        let rule = GaussLegendre::rule(48).unwrap();
        let mut best = 0.0f64;
        for &t in traj.times() {
            let mut acc = 0.0;
            for p in 0..6 {
                for (sr, wr) in rule.nodes.iter().zip(&rule.weights) {
                    let r = 9.0 * (p as f64 + sr) / 6.0;
                    for (sa, wa) in rule.nodes.iter().zip(&rule.weights) {
                        let a = 2.0 * PI * sa;
                        let j = ex.exact_jet(&[r * a.cos(), r * a.sin()], t);
                        let v = j.value.norm_sqr() + j.grad.iter().map(|g| g.norm_sqr()).sum::<f64>();
                        acc += v * r * wr * 1.5 * wa * 2.0 * PI;
                    }
                }
            }
            best = best.max(acc);
        }
        assert!((sup - best).abs() < 1e-6 * best, "{sup} {best}");
    }

    #[test]
    fn cylinder_matches_fine_oracle() {
        let (traj, ex) = gaussian_traj(64, 10.0, 128);
        let (rho, t) = (1.0, 1.0 / 16.0);
        let got = cylinder_integral(&traj, &ZeroVector(2), rho, t).unwrap();
        let rule = GaussLegendre::rule(24).unwrap();
        let mut want = 0.0;
        let (s0, s1) = (t / 4.0, 3.0 * t);
        for ps in 0..4 {
            for (ss, ws) in rule.nodes.iter().zip(&rule.weights) {
                let s = s0 + (s1 - s0) * (ps as f64 + ss) / 4.0;
                let (c, w) = shell_at(rho, t, s, 4.0);
                let (r_in, r_out) = ((c - w).max(0.0), c + w);
                for pr in 0..4 {
                    for (sr, wr) in rule.nodes.iter().zip(&rule.weights) {
                        let r = r_in + (r_out - r_in) * (pr as f64 + sr) / 4.0;
                        for pa in 0..4 {
                            for (sa, wa) in rule.nodes.iter().zip(&rule.weights) {
                                let a = 2.0 * PI * (pa as f64 + sa) / 4.0;
                                let j = ex.exact_jet(&[r * a.cos(), r * a.sin()], s);
                                let v = j.value.norm_sqr() + s * j.grad.iter().map(|g| g.norm_sqr()).sum::<f64>();
                                want += v * r * (wr * (r_out - r_in) / 4.0) * (wa * 2.0 * PI / 4.0) * (ws * (s1 - s0) / 4.0);
                            }
                        }
                    }
                }
            }
        }
        assert!((got - want).abs() < 1e-4 * want, "{got} {want}");
        let wider = cylinder_integral_with(&traj, &ZeroVector(2), rho, t, &CylinderOptions { width_factor: 5.0, time_nodes: 33 }).unwrap();
        assert!(wider >= got);
    }

    #[test]
    fn scan_and_phase_invariance() {
        let (traj, _) = gaussian_traj(64, 12.0, 64);
        let a = ZeroVector(2);
        let opts = CylinderOptions::default();
        let rhos = [1.0, 2.0, 3.0];
        let ts = [1.0 / 64.0, 1.0 / 16.0, 0.25, 0.4];
        let rep = mass_bound_scan(&traj, &a, 1.0, 8.5, &rhos, &ts, &opts).unwrap();
        assert!(rep.m_u_sq > 0.0);
        assert!(!rep.rows.is_empty());
        assert_eq!(rep.skipped.iter().filter(|s| s.t == 0.4).count(), 3);
        assert!(rep.skipped.iter().all(|s| s.t == 0.4 || cylinder_outer_radius(s.rho, s.t, 4.0) > 12.0));
        for r in &rep.rows {
            assert!(r.i > 0.0 && !r.vacuous && r.c.unwrap().is_finite(), "{r:?}");
            assert!(3.0 * r.t <= 1.0 && r.rho >= 1.0);
        }
        let rot = Complex64::from_polar(1.0, 0.7);
        let fields: Vec<ComplexField> = traj.fields().iter().map(|f| f.scale(rot)).collect();
        let turned = Trajectory::new(traj.times().to_vec(), fields, Provenance::Solver, true).unwrap();
        let rep2 = mass_bound_scan(&turned, &a, 1.0, 8.5, &rhos, &ts, &opts).unwrap();
        for (x, y) in rep.rows.iter().zip(&rep2.rows) {
            assert!((x.i - y.i).abs() <= 1e-12 * x.i);
            assert!((x.c.unwrap() - y.c.unwrap()).abs() <= 1e-9 * x.c.unwrap());
        }
        assert!(mass_bound_scan(&traj, &a, 1.0, 8.0, &rhos, &DEFAULT_T_SCAN, &opts).is_err());
    }

    #[test]
    fn trivial_solution_is_vacuous() {
        let (traj, _) = gaussian_traj(32, 12.0, 16);
        let zeros: Vec<ComplexField> = traj.fields().iter().map(|f| ComplexField::zeros(*f.grid())).collect();
        let zero = Trajectory::new(traj.times().to_vec(), zeros, Provenance::Solver, true).unwrap();
        let rep = mass_bound_scan(&zero, &ZeroVector(2), 1.0, 8.5, &[1.0, 2.0], &DEFAULT_T_SCAN, &CylinderOptions::default()).unwrap();
        assert_eq!(rep.m_u_sq, 0.0);
        assert!(!rep.rows.is_empty() && rep.rows.iter().all(|r| r.vacuous && r.i == 0.0));
        let d = vanishing_diagnostic(&zero, &ZeroVector(2), &VanishingMode::RhoSequence { t: 1.0 / 16.0, rhos: vec![1.0, 2.0] }, 0.0).unwrap();
        assert!(d.iter().all(|e| e.value == 0.0));
    }

    #[test]
    fn vanishing_sequence_decays_outside_support() {
        let (traj, _) = gaussian_traj(64, 12.0, 64);
        let mode = VanishingMode::RhoSequence { t: 1.0 / 64.0, rhos: vec![0.5, 1.0, 1.5, 2.0, 2.5] };
        let d = vanishing_diagnostic(&traj, &ZeroVector(2), &mode, 0.005).unwrap();
        assert!(d.iter().all(|e| e.value > 0.0));
        for w in d.windows(2) {
            assert!(w[1].i < w[0].i && w[1].value < w[0].value, "{d:?}");
        }
        // a large C lets the exponential factor win
        let d = vanishing_diagnostic(&traj, &ZeroVector(2), &mode, 0.05).unwrap();
        assert!(d[4].value > d[0].value);
    }
}
