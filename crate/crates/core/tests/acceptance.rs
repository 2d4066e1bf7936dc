//! Acceptance target: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::sync::Arc;
use std::time::Instant;

use hyperlace::appell::{appell_potentials, appell_transform, gamma_star, ProofSchedule};
use hyperlace::carleman::{battery, commutator_audit_options, free_reference_terms, BatteryOptions, MARGIN_TOL};
use hyperlace::catalog::{self, CatalogTag, POTENTIALS};
use hyperlace::exact::{free_propagate, gaussian_product};
use hyperlace::gauge::{apply_gauge_samples, halton_points, CronstromGauge, GaugeOptions};
use hyperlace::massbound::{mass_bound_scan, validate_scan_point, CylinderOptions, DEFAULT_T_SCAN};
use hyperlace::operators::{magnetic_field_of, DerivativeMode};
use hyperlace::solver::{conservation_report, evolve, pde_residual, self_convergence, EvolveOptions, Provenance, Trajectory};
use hyperlace::*;

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn carleman_battery() -> Outcome {
    let start = Instant::now();
    let rows = battery(&BatteryOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let failing = rows.iter().filter(|r| r.sides.margin < -MARGIN_TOL * r.sides.rhs).count();
    let dims = (rows.iter().filter(|r| r.n == 2).count(), rows.iter().filter(|r| r.n == 3).count());
    let worst = rows.iter().map(|r| r.sides.relative_margin).fold(f64::INFINITY, f64::min);
    check(
        rows.len() >= 100 && failing == 0 && dims.0 > 0 && dims.1 > 0 && elapsed < 600.0,
        format!(
            "{} configs ({} in 2D, {} in 3D), {failing} failing, smallest margin/rhs {worst:.3e}, {elapsed:.0} s",
            rows.len(),
            dims.0,
            dims.1
        ),
    )
}

fn commutator_audit() -> Outcome {
    let rows = battery(&commutator_audit_options(11)).map_err(|e| e.to_string())?;
    let worst_slack = rows.iter().map(|r| r.terms.slack).fold(f64::INFINITY, f64::min);
    let all = rows.iter().all(|r| r.terms.slack >= -1e-6 && r.terms.i >= 0.0);
    let iv_seen = rows.iter().any(|r| r.terms.iv != 0.0);
    let mut free_max = 0.0f64;
    for (n, k) in [(2, 1), (2, 2), (3, 2)] {
        let t = free_reference_terms(n, k).map_err(|e| e.to_string())?;
        free_max = free_max.max(t.iii.abs()).max(t.iv.abs()).max(t.v.abs());
    }
    check(
        rows.len() == 20 && all && free_max < 1e-9,
        format!(
            "{} configs, min (lhs² - ΣI..V)/lhs² = {worst_slack:.3e}, I >= 0 everywhere, IV exercised: {iv_seen}, free |III..V| max {free_max:.1e}",
            rows.len()
        ),
    )
}

fn cronstrom_gauge() -> Outcome {
    let mut worst_tr = 0.0f64;
    let mut worst_b = 0.0f64;
    let mut worst_id = 0.0f64;
    let mut count = 0;
    for n in [2, 3] {
        let sig = SplitSignature::new(n, 1).map_err(|e| e.to_string())?;
        let grid = Grid::new(sig, 3.0, if n == 2 { 16 } else { 8 }).map_err(|e| e.to_string())?;
        for entry in POTENTIALS.iter().filter(|e| e.tag == CatalogTag::ConditionA && !e.time_dependent) {
            let a = catalog::potential(entry.name, n).map_err(|e| e.to_string())?;
            let g = CronstromGauge::new(a.clone(), GaugeOptions { check_radius: 3.0, ..Default::default() })
                .map_err(|e| format!("{}: {e}", entry.name))?;
            let mut x = vec![0.0; n];
            for idx in 0..grid.len() {
                grid.node(idx, &mut x);
                let at = g.potential(&x).map_err(|e| e.to_string())?;
                worst_tr = worst_tr.max(x.iter().zip(&at).map(|(p, q)| p * q).sum::<f64>().abs());
            }
            let b0 = magnetic_field_of(a.as_ref(), &grid, 0.0, DerivativeMode::Analytic).map_err(|e| e.to_string())?;
            let b1 = magnetic_field_of(&g, &grid, 0.0, DerivativeMode::Analytic).map_err(|e| e.to_string())?;
            worst_b = worst_b.max(b0.max_abs_diff(&b1));
            for p in halton_points(n, 16, 3.0) {
                worst_id = worst_id.max(g.radial_identity_residual(&p).map_err(|e| e.to_string())?);
            }
            count += 1;
        }
    }
    let ab = catalog::potential("aharonov-bohm", 2).map_err(|e| e.to_string())?;
    let rejected = matches!(CronstromGauge::new(ab, GaugeOptions::default()), Err(Error::ConditionA { .. }));
    check(
        worst_tr < 1e-8 && worst_b < 1e-6 && worst_id < 1e-6 && rejected,
        format!(
            "{count} potential/dimension pairs: max|x·Ã| {worst_tr:.1e}, max|B(Ã)-B(A)| {worst_b:.1e}, radial identity {worst_id:.1e}, Aharonov-Bohm rejected: {rejected}"
        ),
    )
}

fn appell() -> Outcome {
    let sig = SplitSignature::new(2, 1).map_err(|e| e.to_string())?;
    let u = gaussian_product(&[1.0, 1.3], sig).map_err(|e| e.to_string())?;
    let same = appell_transform(u.clone(), 1.7, 1.7, sig).map_err(|e| e.to_string())?;
    let mut identity = 0.0f64;
    for x in halton_points(2, 50, 3.0) {
        for t in [0.0, 0.3, 0.8, 1.0] {
            identity = identity.max((same.value(&x, t).map_err(|e| e.to_string())? - u.eval(&x, t)).norm());
        }
    }
    let tr = appell_transform(u, 3.0, 1.0, sig).map_err(|e| e.to_string())?;
    let mut errs = Vec::new();
    for (m, steps) in [(32, 16), (64, 32), (128, 64)] {
        let grid = Grid::new(sig, 10.0, m).map_err(|e| e.to_string())?;
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
        let traj = Trajectory::sample(&tr, &grid, &times, Provenance::Exact("appell gaussian".into()), true)
            .map_err(|e| e.to_string())?;
        errs.push(pde_residual(&traj, &ZeroVector(2), &ZeroScalar, sig).map_err(|e| e.to_string())?.max);
    }
    let order = (errs[1] / errs[2]).log2();
    let base = catalog::potential("bounded-oscillatory", 2).map_err(|e| e.to_string())?;
    let gauge: Arc<dyn VectorPotential> =
        Arc::new(CronstromGauge::new(base, GaugeOptions { check_radius: 3.0, ..Default::default() }).map_err(|e| e.to_string())?);
    let params = ProofSchedule::new(4.0).map_err(|e| e.to_string())?.params();
    let images = appell_potentials(gauge, Arc::new(ZeroScalar), None, params, sig);
    let grid = Grid::new(sig, 3.0, 16).map_err(|e| e.to_string())?;
    let drift = images.drift.grid_sup(&grid, &[0.0, 0.25, 0.5, 0.75, 1.0]);
    check(
        identity <= 1e-15 && order >= 3.5 && drift < 1e-8,
        format!(
            "a=b deviation {identity:.1e}, residuals {:.2e}/{:.2e}/{:.2e} (order {order:.2}), transversal drift {drift:.1e}",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn solver() -> Outcome {
    let sig = SplitSignature::new(2, 1).map_err(|e| e.to_string())?;
    let grid = Grid::new(sig, 16.0, 64).map_err(|e| e.to_string())?;
    let u0 = gaussian_product(&[2.0, 2.0], sig).map_err(|e| e.to_string())?.sample(&grid, 0.0).map_err(|e| e.to_string())?;
    let err = |e: Error| e.to_string();
    let a = catalog::potential("bounded-oscillatory", 2).map_err(err)?;
    let v = ExprScalar::parse("0.3*cos(x1)", 2).map_err(err)?;
    let magnetic = evolve(&u0, a.as_ref(), &v, sig, &TimeGrid::unit(128).map_err(err)?, EvolveOptions::default()).map_err(err)?;
    let l2 = conservation_report(&magnetic, sig).map_err(err)?.l2_drift;
    let free = evolve(&u0, &ZeroVector(2), &ZeroScalar, sig, &TimeGrid::unit(64).map_err(err)?, EvolveOptions::default()).map_err(err)?;
    let energy = conservation_report(&free, sig).map_err(err)?.linear_energy_drift.unwrap_or(f64::INFINITY);
    let fourier = free.last().l2_distance(&free_propagate(&u0, 1.0, sig).map_err(err)?);
    // two paths: evolve then gauge, or gauge then evolve with Ã; Ã decays only
    // like 1/|x|, so the box must keep the solution off the periodic boundary
    let grid = Grid::new(sig, 24.0, 192).map_err(err)?;
    let u0 = gaussian_product(&[2.0, 2.0], sig).map_err(err)?.sample(&grid, 0.0).map_err(err)?;
    let base = catalog::potential("bounded-oscillatory", 2).map_err(err)?;
    let gauge = CronstromGauge::new(base.clone(), GaugeOptions { check_radius: 3.0, ..Default::default() }).map_err(err)?;
    let phase = gauge.phase_samples(&grid).map_err(err)?;
    let steps = TimeGrid::unit(128).map_err(err)?;
    let path1 = evolve(&u0, base.as_ref(), &ZeroScalar, sig, &steps, EvolveOptions::default()).map_err(err)?;
    let w0 = apply_gauge_samples(&u0, &phase).map_err(err)?;
    let path2 = evolve(&w0, &gauge, &ZeroScalar, sig, &steps, EvolveOptions::default()).map_err(err)?;
    let two_path = apply_gauge_samples(path1.last(), &phase).map_err(err)?.max_abs_diff(path2.last());
    let u0 = magnetic.fields()[0].clone();
    let conv = self_convergence(&u0, a.as_ref(), &v, sig, 0.25, 8).map_err(err)?;
    check(
        l2 < 1e-6 && energy < 1e-6 && fourier < 1e-9 && two_path < 1e-6 && conv.order >= 3.5,
        format!(
            "L2 drift {l2:.1e}, linear energy drift {energy:.1e}, Fourier flow {fourier:.1e}, two-path {two_path:.1e}, order {:.2}",
            conv.order
        ),
    )
}

fn mass_bound() -> Outcome {
    let err = |e: Error| e.to_string();
    let sig = SplitSignature::new(2, 1).map_err(err)?;
    let grid = Grid::new(sig, 12.0, 64).map_err(err)?;
    let ex = gaussian_product(&[1.0, 1.2], sig).map_err(err)?;
    let times: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
    let traj = Trajectory::sample(&ex, &grid, &times, Provenance::Exact("gaussian_product".into()), true).map_err(err)?;
    let rhos = [1.0, 1.5, 2.0, 3.0];
    let opts = CylinderOptions::default();
    let rep = mass_bound_scan(&traj, &ZeroVector(2), 1.0, 8.5, &rhos, &DEFAULT_T_SCAN, &opts).map_err(err)?;
    let finite = rep.rows.iter().filter(|r| r.i > 0.0).all(|r| r.c.is_some_and(f64::is_finite));
    let validator = validate_scan_point(1.0, 8.0, 2.0, 0.1).is_err()
        && validate_scan_point(1.0, 8.0 + 1e-12, 2.0, 0.1).is_ok()
        && validate_scan_point(1.0, 9.0, 2.0, 1.0 / 3.0).is_ok()
        && validate_scan_point(1.0, 9.0, 2.0, 1.0 / 3.0 + 1e-15).is_err()
        && mass_bound_scan(&traj, &ZeroVector(2), 1.0, 8.0, &rhos, &DEFAULT_T_SCAN, &opts).is_err();
    let zeros = traj.fields().iter().map(|f| ComplexField::zeros(*f.grid())).collect();
    let zero = Trajectory::new(times.clone(), zeros, Provenance::Solver, true).map_err(err)?;
    let trivial = mass_bound_scan(&zero, &ZeroVector(2), 1.0, 8.5, &rhos, &DEFAULT_T_SCAN, &opts).map_err(err)?;
    let vacuous = trivial.m_u_sq == 0.0 && !trivial.rows.is_empty() && trivial.rows.iter().all(|r| r.vacuous);
    check(
        rep.m_u_sq > 0.0 && !rep.rows.is_empty() && finite && validator && vacuous,
        format!(
            "M_u² = {:.4}, {} scan points, max C = {:.3}, validator exact: {validator}, trivial solution vacuous: {vacuous}",
            rep.m_u_sq,
            rep.rows.len(),
            rep.max_c.unwrap_or(f64::NAN)
        ),
    )
}

fn proof_schedule() -> Outcome {
    let tol = 1e-12;
    let mut ok = true;
    for gamma in [1.5, 4.0, 100.0, 65536.0] {
        let s = ProofSchedule::new(gamma).map_err(|e| e.to_string())?;
        let rg = gamma.sqrt();
        ok &= (s.alpha(0.0) - 1.0 / rg).abs() <= tol && (s.alpha(1.0) - rg).abs() <= tol * rg;
        ok &= s.s(0.0) == 0.0 && (s.s(1.0) - 1.0).abs() <= tol;
        ok &= (s.beta(0.0) - (1.0 - 1.0 / gamma)).abs() <= tol && (s.beta(1.0) - (gamma - 1.0)).abs() <= tol * gamma;
        ok &= (s.s(0.375) - 3.0 / (5.0 * gamma + 3.0)).abs() <= tol && (s.s(0.625) - 5.0 / (3.0 * gamma + 5.0)).abs() <= tol;
        for i in 0..1000 {
            let t = 0.375 + 0.25 * i as f64 / 999.0;
            let a = s.alpha(t);
            ok &= 1.0 / rg <= a * (1.0 + tol) && a <= 3.0 / rg * (1.0 + tol);
            let sv = s.s(t);
            let d = s.dt_ds(sv);
            ok &= gamma / 8.0 <= d * (1.0 + tol) && d <= gamma * (1.0 + tol);
        }
    }
    let cases = [
        ((1.0, 9.0, 0.0, 1.0, 1.0, 1, 2), 65536.0),
        ((2.0, 20.0, 3.0, 2.0, 0.5, 2, 3), 1024.0),
        ((0.5, 10.0, 0.0, 4.0, 0.01, 1, 3), 16.0),
    ];
    let mut worst = 0.0f64;
    for ((r0, r1, mv, mu, eu, k, n), want) in cases {
        let got = gamma_star(r0, r1, mv, mu, eu, k, n).map_err(|e| e.to_string())?;
        worst = worst.max((got - want).abs() / want);
    }
    check(ok && worst <= f64::EPSILON, format!("identities hold at 10^3 points for 4 values of γ: {ok}, gamma_star relative error {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("Carleman battery", carleman_battery),
        ("commutator audit", commutator_audit),
        ("Crönström gauge", cronstrom_gauge),
        ("Appell transform", appell),
        ("solver", solver),
        ("mass bound", mass_bound),
        ("proof schedule", proof_schedule),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (status, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{status} {} {name}: {detail} [{:.1} s]", i + 1, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
