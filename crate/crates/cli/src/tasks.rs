use std::path::Path;
use std::sync::Arc;

use serde_json::json;

use hyperlace::appell::{appell_potentials, appell_transform};
use hyperlace::carleman::{battery, commutator_audit_options, free_reference_terms, BatteryOptions, BatteryRow, CutoffSet, MARGIN_TOL};
use hyperlace::gauge::{apply_gauge_samples, halton_points, CronstromGauge, GaugeOptions};
use hyperlace::massbound::{mass_bound_scan, CylinderOptions};
use hyperlace::operators::{assumption_norms, magnetic_field_of, AssumptionNorms, DerivativeMode};
use hyperlace::solver::{conservation_report, evolve, pde_residual, EvolveOptions, Provenance, Trajectory};
use hyperlace::{sample_field, ComplexField, ScalarPotential, Slot, ZeroScalar, ZeroVector};

use crate::config::{Initial, Scenario, Task};
use crate::failure::Failure;
use crate::report::{num, opt, vector, Outcome, Table};

const GAUGE_TOL: f64 = 1e-8;
const FIELD_TOL: f64 = 1e-6;
const TWO_PATH_TOL: f64 = 1e-6;
const DRIFT_TOL: f64 = 1e-8;
/// Time nodes used for the sup norms of the potentials.
const NORM_TIMES: usize = 33;

pub fn run(s: &Scenario, dir: &Path) -> Result<Outcome, Failure> {
    match s.config.task {
        Task::Evolve => run_evolve(s, dir),
        Task::GaugeCheck => run_gauge(s),
        Task::AppellCheck => run_appell(s),
        Task::CarlemanCheck => run_carleman(s),
        Task::CommutatorAudit => run_audit(s),
        Task::MassBound => run_mass_bound(s),
    }
}

fn initial_field(s: &Scenario) -> Result<ComplexField, Failure> {
    let grid = s.grid()?;
    Ok(match s.initial()? {
        Initial::Expression(e) => sample_field(e, &grid, 0.0, Slot::Complex)?,
        Initial::Exact(ex) => ex.sample(&grid, 0.0)?,
    })
}

fn norm_times(s: &Scenario) -> Result<Vec<f64>, Failure> {
    let t_end = s.time()?.t_end;
    Ok((0..NORM_TIMES).map(|i| t_end * i as f64 / (NORM_TIMES - 1) as f64).collect())
}

fn scenario_norms(s: &Scenario) -> Result<AssumptionNorms, Failure> {
    let v = s.v()?;
    Ok(assumption_norms(s.a()?.as_ref(), Some(v.as_ref() as &dyn ScalarPotential), &s.xi()?, &s.grid()?, &norm_times(s)?)?)
}

/// Evolves the initial data, or samples the exact solution when the
/// equation is free.
fn trajectory(s: &Scenario) -> Result<Trajectory, Failure> {
    let (sig, grid, time) = (s.sig()?, s.grid()?, s.time()?);
    if let (Initial::Exact(ex), true) = (s.initial()?, s.is_free()) {
        let every = s.config.time.map_or(1, |t| t.record_every);
        let times: Vec<f64> = (0..=time.steps).step_by(every).map(|i| time.time(i)).collect();
        let mut times = times;
        if times.last() != Some(&time.t_end) {
            times.push(time.t_end);
        }
        return Ok(Trajectory::sample(ex, &grid, &times, Provenance::Exact(ex.label().into()), true)?);
    }
    let options = EvolveOptions { record_every: s.config.time.map_or(1, |t| t.record_every), ..Default::default() };
    Ok(evolve(&initial_field(s)?, s.a()?.as_ref(), s.v()?.as_ref(), sig, &time, options)?)
}

fn run_evolve(s: &Scenario, dir: &Path) -> Result<Outcome, Failure> {
    let sig = s.sig()?;
    let options = EvolveOptions { record_every: s.config.time.map_or(1, |t| t.record_every), ..Default::default() };
    let traj = evolve(&initial_field(s)?, s.a()?.as_ref(), s.v()?.as_ref(), sig, &s.time()?, options)?;
    let cons = conservation_report(&traj, sig)?;
    let residual = if traj.len() >= 5 { Some(pde_residual(&traj, s.a()?.as_ref(), s.v()?.as_ref(), sig)?) } else { None };

    let mut out = Outcome::default();
    let mut table = Table::new("evolution.csv", &["t", "l2_norm", "residual"]);
    for (&t, &l2) in traj.times().iter().zip(&cons.l2_series) {
        let r = residual.as_ref().and_then(|r| r.series.iter().find(|p| p.0 == t).map(|p| p.1));
        table.push(vec![num(t), num(l2), opt(r)]);
    }
    out.tables.push(table);
    out.diag("stored_nodes", traj.len());
    out.diag("l2_drift", cons.l2_drift);
    out.diag("linear_energy_drift", cons.linear_energy_drift);
    out.diag("l2_monotone_decreasing", cons.l2_monotone_decreasing);
    out.diag("pde_residual_max", residual.as_ref().map(|r| r.max));
    out.diag("boundary_max", boundary_max(&traj));
    if let (Initial::Exact(ex), true) = (s.initial()?, s.is_free()) {
        let mut err = 0.0f64;
        for (f, &t) in traj.fields().iter().zip(traj.times()) {
            err = err.max(f.l2_distance(&ex.sample(f.grid(), t)?));
        }
        out.diag("exact_l2_error", err);
    }
    out.assumption_norms = Some(serde_json::to_value(scenario_norms(s)?)?);
    if s.config.output.snapshots {
        traj.export(&dir.join("trajectory"))?;
        out.diag("snapshots", "trajectory/manifest.json");
    }
    Ok(out)
}

/// Largest `|u|` on the outermost grid layer over stored times.
fn boundary_max(traj: &Trajectory) -> f64 {
    let grid = traj.grid();
    let h = grid.half_width();
    let mut x = vec![0.0; grid.dim()];
    let mut worst = 0.0f64;
    for f in traj.fields() {
        for (idx, u) in f.samples().iter().enumerate() {
            grid.node(idx, &mut x);
            if x.iter().any(|c| (c.abs() - h).abs() < 1e-12 * h) {
                worst = worst.max(u.norm());
            }
        }
    }
    worst
}

fn run_gauge(s: &Scenario) -> Result<Outcome, Failure> {
    let sig = s.sig()?;
    let n = sig.n();
    let a = s.a()?;
    let cfg = s.config.gauge;
    let gauge = CronstromGauge::new(a.clone(), GaugeOptions { check_radius: cfg.check_radius, ..Default::default() })?;

    let mut header: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    header.extend(["phase", "x_dot_a_tilde", "radial_identity"].map(String::from));
    let mut table = Table { file: "gauge.csv", header, rows: Vec::new() };
    let (mut worst_tr, mut worst_id) = (0.0f64, 0.0f64);
    for p in halton_points(n, cfg.points, cfg.check_radius) {
        let at = gauge.potential(&p)?;
        let tr: f64 = p.iter().zip(&at).map(|(x, y)| x * y).sum();
        let id = gauge.radial_identity_residual(&p)?;
        worst_tr = worst_tr.max(tr.abs());
        worst_id = worst_id.max(id);
        let mut row: Vec<String> = p.iter().map(|x| num(*x)).collect();
        row.extend([num(gauge.phase(&p)?), num(tr), num(id)]);
        table.push(row);
    }

    let mut out = Outcome::default();
    out.tables.push(table);
    out.diag("sigma", gauge.sigma());
    out.diag("line_integral_nodes", gauge.nodes());
    out.diag("construction_field_error", gauge.field_error());
    out.diag("construction_transversality", gauge.transversality());
    out.diag("max_transversality", worst_tr);
    out.diag("max_radial_identity", worst_id);
    let mut failed = Vec::new();
    if worst_tr >= GAUGE_TOL {
        failed.push(format!("max |x·Ã| = {worst_tr:e}"));
    }
    if worst_id >= FIELD_TOL {
        failed.push(format!("radial identity residual {worst_id:e}"));
    }
    if let Some(grid) = s.grid {
        let b0 = magnetic_field_of(a.as_ref(), &grid, 0.0, DerivativeMode::Analytic)?;
        let b1 = magnetic_field_of(&gauge, &grid, 0.0, DerivativeMode::Analytic)?;
        let diff = b0.max_abs_diff(&b1);
        out.diag("max_field_difference", diff);
        if diff >= FIELD_TOL {
            failed.push(format!("max |B(Ã) - B(A)| = {diff:e}"));
        }
        out.assumption_norms = Some(serde_json::to_value(assumption_norms(&gauge, None, &s.xi()?, &grid, &[0.0])?)?);
        if cfg.two_path && s.initial.is_some() && s.time.is_some() {
            let time = s.time()?;
            let u0 = initial_field(s)?;
            let phase = gauge.phase_samples(&grid)?;
            let v = s.v()?;
            let path1 = evolve(&u0, a.as_ref(), v.as_ref(), sig, &time, EvolveOptions::default())?;
            let w0 = apply_gauge_samples(&u0, &phase)?;
            let path2 = evolve(&w0, &gauge, v.as_ref(), sig, &time, EvolveOptions::default())?;
            let diff = apply_gauge_samples(path1.last(), &phase)?.max_abs_diff(path2.last());
            out.diag("two_path_difference", diff);
            if diff >= TWO_PATH_TOL {
                failed.push(format!("two-path difference {diff:e}"));
            }
        }
    }
    if !failed.is_empty() {
        out.check_failed = Some(failed.join("; "));
    }
    Ok(out)
}

fn run_appell(s: &Scenario) -> Result<Outcome, Failure> {
    let (sig, grid, time) = (s.sig()?, s.grid()?, s.time()?);
    let Initial::Exact(ex) = s.initial()? else {
        return Err(Failure::Schema("appell-check needs an exact initial solution".into()));
    };
    let params = s.appell.ok_or_else(|| Failure::Schema("missing [appell] section".into()))?;
    let tr = appell_transform(ex.clone(), params.a(), params.b(), sig)?;
    let times: Vec<f64> = (0..=time.steps).map(|i| time.time(i)).collect();
    let traj = Trajectory::sample(&tr, &grid, &times, Provenance::Exact(format!("appell {}", ex.label())), true)?;
    let n = sig.n();
    let residual = if traj.len() >= 5 { Some(pde_residual(&traj, &ZeroVector(n), &ZeroScalar, sig)?) } else { None };

    let mut table = Table::new("appell.csv", &["t", "time_map", "mu", "l2_norm", "residual"]);
    for (f, &t) in traj.fields().iter().zip(&times) {
        let r = residual.as_ref().and_then(|r| r.series.iter().find(|p| p.0 == t).map(|p| p.1));
        table.push(vec![num(t), num(params.time_map(t)), num(params.mu(t)), num(f.l2_norm()), opt(r)]);
    }
    let mut out = Outcome::default();
    out.tables.push(table);
    out.diag("a", params.a());
    out.diag("b", params.b());
    out.diag("gamma", params.gamma());
    out.diag("pde_residual_max", residual.as_ref().map(|r| r.max));
    let a = s.a()?;
    if !a.is_zero() {
        let gauge: Arc<dyn hyperlace::VectorPotential> =
            Arc::new(CronstromGauge::new(a, GaugeOptions { check_radius: s.config.gauge.check_radius, ..Default::default() })?);
        let images = appell_potentials(gauge, s.v()?, None, params, sig);
        let drift = images.drift.grid_sup(&grid, &norm_times(s)?);
        out.diag("transversal_drift", drift);
        if drift >= DRIFT_TOL {
            out.check_failed = Some(format!("transversal drift {drift:e}"));
        }
    }
    Ok(out)
}

fn battery_options(s: &Scenario, base: BatteryOptions) -> Result<BatteryOptions, Failure> {
    let c = &s.config.carleman;
    let seed = s.config.seed.ok_or_else(|| Failure::Schema("randomized tasks need a `seed`".into()))?;
    Ok(BatteryOptions {
        seed,
        count: c.count.unwrap_or(base.count),
        fraction_3d: c.fraction_3d.unwrap_or(base.fraction_3d),
        potentials: c.potentials.clone().unwrap_or(base.potentials),
        tau_multipliers: c.tau_multipliers.clone().unwrap_or(base.tau_multipliers),
        r_range: (c.r_min.unwrap_or(base.r_range.0), c.r_max.unwrap_or(base.r_range.1)),
    })
}

fn record_battery(out: &mut Outcome, options: &BatteryOptions, rows: &[BatteryRow]) -> Result<(), Failure> {
    out.diag("battery", options);
    out.diag("rows", rows.len());
    out.diag("rows_2d", rows.iter().filter(|r| r.n == 2).count());
    out.diag("rows_3d", rows.iter().filter(|r| r.n == 3).count());
    out.cutoff_bounds = Some(json!({
        "smallest_r": CutoffSet::standard(options.r_range.0)?,
        "largest_r": CutoffSet::standard(options.r_range.1)?,
    }));
    let norms: Vec<_> = rows
        .iter()
        .map(|r| json!({ "index": r.index, "n": r.n, "potential": r.potential, "norms": r.norms }))
        .collect();
    out.assumption_norms = Some(json!(norms));
    Ok(())
}

fn run_carleman(s: &Scenario) -> Result<Outcome, Failure> {
    let options = battery_options(s, BatteryOptions::default())?;
    let rows = battery(&options)?;
    let mut table = Table::new(
        "carleman.csv",
        &[
            "index", "n", "k", "potential", "r", "tau_multiplier", "tau", "c", "xi", "m_b", "m_xi", "log_scale", "lhs", "rhs",
            "margin", "relative_margin", "holds", "i", "ii", "iii", "iv", "v",
        ],
    );
    for r in &rows {
        let (sd, tm) = (&r.sides, &r.terms);
        table.push(vec![
            r.index.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.potential.clone(),
            num(r.r),
            num(r.tau_multiplier),
            num(r.tau),
            num(r.c),
            vector(&r.xi),
            num(r.norms.m_b),
            num(r.norms.m_xi),
            num(sd.log_scale),
            num(sd.lhs),
            num(sd.rhs),
            num(sd.margin),
            num(sd.relative_margin),
            sd.holds.to_string(),
            num(tm.i),
            num(tm.ii),
            num(tm.iii),
            num(tm.iv),
            num(tm.v),
        ]);
    }
    let mut out = Outcome::default();
    out.tables.push(table);
    record_battery(&mut out, &options, &rows)?;
    let failing: Vec<usize> = rows.iter().filter(|r| r.sides.margin < -MARGIN_TOL * r.sides.rhs).map(|r| r.index).collect();
    let worst = rows.iter().map(|r| r.sides.relative_margin).fold(f64::INFINITY, f64::min);
    out.diag("margin_tolerance", MARGIN_TOL);
    out.diag("failing", &failing);
    out.diag("min_relative_margin", worst);
    if !failing.is_empty() {
        out.check_failed = Some(format!("{} configurations violate the inequality", failing.len()));
    }
    Ok(out)
}

fn run_audit(s: &Scenario) -> Result<Outcome, Failure> {
    let options = battery_options(s, commutator_audit_options(0))?;
    let rows = battery(&options)?;
    let mut table = Table::new(
        "commutator.csv",
        &[
            "index", "n", "k", "potential", "r", "tau", "c", "log_scale", "lhs_sq", "i", "ii", "iii", "iv", "v", "slack",
            "expansion_residual", "weighted_mass", "i_support_bound",
        ],
    );
    for r in &rows {
        let tm = &r.terms;
        table.push(vec![
            r.index.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.potential.clone(),
            num(r.r),
            num(r.tau),
            num(r.c),
            num(tm.log_scale),
            num(tm.lhs_sq),
            num(tm.i),
            num(tm.ii),
            num(tm.iii),
            num(tm.iv),
            num(tm.v),
            num(tm.slack),
            num(tm.expansion_residual),
            num(tm.weighted_mass),
            num(tm.i_support_bound),
        ]);
    }
    let mut out = Outcome::default();
    out.tables.push(table);
    record_battery(&mut out, &options, &rows)?;
    let mut free = Vec::new();
    for (n, k) in [(2, 1), (2, 2), (3, 1), (3, 2)] {
        free.push(json!({ "n": n, "k": k, "terms": free_reference_terms(n, k)? }));
    }
    out.diag("free_reference", free);
    let bad: Vec<usize> = rows.iter().filter(|r| r.terms.slack < -MARGIN_TOL || r.terms.i < 0.0).map(|r| r.index).collect();
    out.diag("failing", &bad);
    out.diag("min_slack", rows.iter().map(|r| r.terms.slack).fold(f64::INFINITY, f64::min));
    if !bad.is_empty() {
        out.check_failed = Some(format!("{} configurations with negative slack or negative I", bad.len()));
    }
    Ok(out)
}

fn run_mass_bound(s: &Scenario) -> Result<Outcome, Failure> {
    let mb = s.config.mass_bound.as_ref().ok_or_else(|| Failure::Schema("missing [mass_bound] section".into()))?;
    let traj = trajectory(s)?;
    let options = CylinderOptions { width_factor: mb.width_factor, time_nodes: mb.time_nodes };
    let rep = mass_bound_scan(&traj, s.a()?.as_ref(), mb.r0, mb.r1, &mb.rhos, &mb.ts(), &options)?;
    let mut table = Table::new("mass_bound.csv", &["rho", "t", "m_u_sq", "e_u_sq", "i", "c", "vacuous"]);
    for r in &rep.rows {
        table.push(vec![num(r.rho), num(r.t), num(r.m_u_sq), num(r.e_u_sq), num(r.i), opt(r.c), r.vacuous.to_string()]);
    }
    let mut out = Outcome::default();
    out.tables.push(table);
    let summary = json!({
        "r0": rep.r0,
        "r1": rep.r1,
        "m_u_sq": rep.m_u_sq,
        "e_u_sq": rep.e_u_sq,
        "points": rep.rows.len(),
        "max_c": rep.max_c,
        "median_c": rep.median_c,
        "t_star_used": rep.t_star_used,
        "skipped": rep.skipped,
        "diagnostics": rep.diagnostics,
    });
    out.documents.push(("mass_bound_summary.json", summary));
    out.diag("provenance", traj.provenance());
    out.diag("points", rep.rows.len());
    out.diag("skipped", rep.skipped.len());
    out.diag("max_c", rep.max_c);
    out.diag("median_c", rep.median_c);
    out.diag("boundary_decay", rep.diagnostics.boundary_decay);
    out.diag("discretization", rep.diagnostics.discretization);
    out.assumption_norms = Some(serde_json::to_value(scenario_norms(s)?)?);
    Ok(out)
}
