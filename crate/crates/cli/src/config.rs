//! Scenario files: TOML with dotted sections and `#` comments.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use hyperlace::appell::{AppellParams, ProofSchedule};
use hyperlace::catalog;
use hyperlace::exact::{gaussian_product, plane_wave, ExactSolution};
use hyperlace::massbound::{validate_scan_point, DEFAULT_T_SCAN};
use hyperlace::{parse_expression, Expr, ExprScalar, ExprVector, Grid, SplitSignature, TimeGrid, VectorPotential, ZeroVector};

use crate::failure::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Evolve,
    GaugeCheck,
    AppellCheck,
    CarlemanCheck,
    MassBound,
    CommutatorAudit,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Evolve => "evolve",
            Task::GaugeCheck => "gauge-check",
            Task::AppellCheck => "appell-check",
            Task::CarlemanCheck => "carleman-check",
            Task::MassBound => "mass-bound",
            Task::CommutatorAudit => "commutator-audit",
        }
    }

    fn randomized(self) -> bool {
        matches!(self, Task::CarlemanCheck | Task::CommutatorAudit)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub task: Task,
    pub seed: Option<u64>,
    pub signature: Option<SignatureSection>,
    pub grid: Option<GridSection>,
    pub time: Option<TimeSection>,
    #[serde(default)]
    pub potentials: PotentialSection,
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub carleman: CarlemanSection,
    pub mass_bound: Option<MassBoundSection>,
    pub appell: Option<AppellSection>,
    #[serde(default)]
    pub gauge: GaugeSection,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureSection {
    pub n: usize,
    pub k: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub steps: usize,
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
}

/// Either a catalog entry or one expression per component of `A`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub catalog: Option<String>,
    pub a: Option<Vec<String>>,
    pub v: Option<String>,
    /// Direction for `|ξ^t B|` in the reported norms; defaults to `e_1`.
    pub xi: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub expression: Option<String>,
    /// `gaussian_product` or `plane_wave`.
    pub exact: Option<String>,
    pub widths: Option<Vec<f64>>,
    pub momentum: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Export the trajectory as snapshots (evolve only).
    #[serde(default)]
    pub snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), snapshots: false }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanSection {
    pub count: Option<usize>,
    pub fraction_3d: Option<f64>,
    pub potentials: Option<Vec<String>>,
    pub tau_multipliers: Option<Vec<f64>>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassBoundSection {
    pub r0: f64,
    pub r1: f64,
    pub rhos: Vec<f64>,
    pub ts: Option<Vec<f64>>,
    #[serde(default = "four")]
    pub width_factor: f64,
    #[serde(default = "default_time_nodes")]
    pub time_nodes: usize,
}

impl MassBoundSection {
    pub fn ts(&self) -> Vec<f64> {
        self.ts.clone().unwrap_or_else(|| DEFAULT_T_SCAN.to_vec())
    }
}

/// `a` and `b` directly, or `gamma` for the [`ProofSchedule`] parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppellSection {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSection {
    #[serde(default = "three")]
    pub check_radius: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Evolve in both gauges and compare (needs grid, time and initial data).
    #[serde(default = "yes")]
    pub two_path: bool,
}

impl Default for GaugeSection {
    fn default() -> Self {
        Self { check_radius: 3.0, points: default_points(), two_path: true }
    }
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn three() -> f64 {
    3.0
}
fn four() -> f64 {
    4.0
}
fn yes() -> bool {
    true
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_time_nodes() -> usize {
    33
}
fn default_points() -> usize {
    32
}

pub enum Initial {
    Expression(Expr),
    Exact(ExactSolution),
}

/// A config with every expression parsed and every hypothesis checked.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub source: PathBuf,
    pub sig: Option<SplitSignature>,
    pub grid: Option<Grid>,
    pub time: Option<TimeGrid>,
    pub a: Option<Arc<dyn VectorPotential>>,
    pub v: Option<Arc<ExprScalar>>,
    pub initial: Option<Initial>,
    pub appell: Option<AppellParams>,
}

impl Scenario {
    pub fn output_dir(&self) -> PathBuf {
        let dir = &self.config.output.dir;
        if dir.is_absolute() {
            dir.clone()
        } else {
            self.source.parent().unwrap_or(Path::new(".")).join(dir)
        }
    }

    pub fn sig(&self) -> Result<SplitSignature, Failure> {
        self.sig.ok_or_else(|| missing("signature"))
    }

    pub fn grid(&self) -> Result<Grid, Failure> {
        self.grid.ok_or_else(|| missing("grid"))
    }

    pub fn time(&self) -> Result<TimeGrid, Failure> {
        self.time.ok_or_else(|| missing("time"))
    }

    pub fn initial(&self) -> Result<&Initial, Failure> {
        self.initial.as_ref().ok_or_else(|| missing("initial"))
    }

    pub fn a(&self) -> Result<Arc<dyn VectorPotential>, Failure> {
        self.a.clone().ok_or_else(|| missing("signature"))
    }

    pub fn v(&self) -> Result<Arc<ExprScalar>, Failure> {
        self.v.clone().ok_or_else(|| missing("signature"))
    }

    pub fn xi(&self) -> Result<Vec<f64>, Failure> {
        let n = self.sig()?.n();
        match &self.config.potentials.xi {
            Some(xi) if xi.len() == n => Ok(xi.clone()),
            Some(xi) => Err(schema(format!("potentials.xi has {} components, dimension is {n}", xi.len()))),
            None => {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                Ok(e)
            }
        }
    }

    /// `A = 0` and `V = 0`.
    pub fn is_free(&self) -> bool {
        self.a.as_ref().is_some_and(|a| a.is_zero()) && self.v.as_ref().is_some_and(|v| hyperlace::ScalarPotential::is_zero(v.as_ref()))
    }
}

fn missing(section: &str) -> Failure {
    Failure::Schema(format!("missing [{section}] section"))
}

fn schema(msg: impl Into<String>) -> Failure {
    Failure::Schema(msg.into())
}

pub fn read_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| schema(format!("{}: {}", path.display(), e.message())))
}

/// Parses and validates a scenario; nothing is evaluated.
pub fn load(path: &Path) -> Result<Scenario, Failure> {
    let config = read_config(path)?;
    resolve(config, path.to_path_buf())
}

fn in_expr(what: &str, e: hyperlace::Error) -> Failure {
    Failure::Expression { what: what.to_string(), source: e }
}

pub fn resolve(config: ScenarioConfig, source: PathBuf) -> Result<Scenario, Failure> {
    let task = config.task;
    if task.randomized() && config.seed.is_none() {
        return Err(schema(format!("task {} needs a `seed`", task.name())));
    }
    let sig = match config.signature {
        Some(s) => Some(SplitSignature::new(s.n, s.k)?),
        None => None,
    };
    let grid = match (config.grid, sig) {
        (Some(g), Some(sig)) => Some(Grid::new(sig, g.half_width, g.points)?),
        (Some(_), None) => return Err(missing("signature")),
        (None, _) => None,
    };
    let time = match config.time {
        Some(t) => {
            if t.record_every == 0 {
                return Err(schema("time.record_every must be at least 1"));
            }
            Some(TimeGrid::new(0.0, t.t_end, t.steps)?)
        }
        None => None,
    };

    let p = &config.potentials;
    let (a, v) = match sig {
        Some(sig) => {
            let n = sig.n();
            let a: Arc<dyn VectorPotential> = match (&p.catalog, &p.a) {
                (Some(_), Some(_)) => return Err(schema("potentials: give either `catalog` or `a`, not both")),
                (Some(name), None) => catalog::potential(name, n).map_err(|e| schema(e.to_string()))?,
                (None, Some(texts)) => {
                    if texts.len() != n {
                        return Err(schema(format!("potentials.a has {} components, dimension is {n}", texts.len())));
                    }
                    for (j, t) in texts.iter().enumerate() {
                        parse_expression(t, n).map_err(|e| in_expr(&format!("potentials.a[{j}]"), e))?;
                    }
                    Arc::new(ExprVector::parse(texts, n).map_err(|e| in_expr("potentials.a", e))?)
                }
                (None, None) => Arc::new(ZeroVector(n)),
            };
            let v = ExprScalar::parse(p.v.as_deref().unwrap_or("0"), n).map_err(|e| in_expr("potentials.v", e))?;
            (Some(a), Some(Arc::new(v)))
        }
        None => {
            if p.catalog.is_some() || p.a.is_some() || p.v.is_some() {
                return Err(missing("signature"));
            }
            (None, None)
        }
    };

    let initial = match (&config.initial, sig) {
        (Some(init), Some(sig)) => Some(initial_data(init, sig)?),
        (Some(_), None) => return Err(missing("signature")),
        (None, _) => None,
    };

    let appell = match config.appell {
        Some(AppellSection { gamma: Some(g), a: None, b: None }) => Some(ProofSchedule::new(g)?.params()),
        Some(AppellSection { gamma: None, a: Some(a), b: Some(b) }) => Some(AppellParams::new(a, b)?),
        Some(_) => return Err(schema("appell: give either `gamma` or both `a` and `b`")),
        None => None,
    };

    let scenario = Scenario { config, source, sig, grid, time, a, v, initial, appell };
    if scenario.config.potentials.xi.is_some() {
        scenario.xi()?;
    }
    check_task(&scenario)?;
    Ok(scenario)
}

fn initial_data(init: &InitialSection, sig: SplitSignature) -> Result<Initial, Failure> {
    match (&init.expression, init.exact.as_deref()) {
        (Some(text), None) => {
            Ok(Initial::Expression(parse_expression(text, sig.n()).map_err(|e| in_expr("initial.expression", e))?))
        }
        (None, Some("gaussian_product")) => {
            let widths = init.widths.as_ref().ok_or_else(|| schema("initial: gaussian_product needs `widths`"))?;
            Ok(Initial::Exact(gaussian_product(widths, sig).map_err(|e| schema(e.to_string()))?))
        }
        (None, Some("plane_wave")) => {
            let p = init.momentum.as_ref().ok_or_else(|| schema("initial: plane_wave needs `momentum`"))?;
            Ok(Initial::Exact(plane_wave(p, sig).map_err(|e| schema(e.to_string()))?))
        }
        (None, Some(other)) => Err(schema(format!("initial: unknown exact solution `{other}`"))),
        _ => Err(schema("initial: give either `expression` or `exact`")),
    }
}

/// Sections each task needs, and the hypotheses it can check up front.
fn check_task(s: &Scenario) -> Result<(), Failure> {
    match s.config.task {
        Task::Evolve => {
            s.grid()?;
            s.time()?;
            s.initial()?;
        }
        Task::GaugeCheck => {
            s.sig()?;
            if s.config.gauge.check_radius <= 0.0 || s.config.gauge.points == 0 {
                return Err(schema("gauge: need check_radius > 0 and points > 0"));
            }
        }
        Task::AppellCheck => {
            s.grid()?;
            s.time()?;
            if !matches!(s.initial()?, Initial::Exact(_)) {
                return Err(schema("appell-check needs an exact initial solution"));
            }
            if s.appell.is_none() {
                return Err(missing("appell"));
            }
        }
        Task::CarlemanCheck | Task::CommutatorAudit => {
            let c = &s.config.carleman;
            if let Some(names) = &c.potentials {
                for name in names {
                    catalog::entry(name).map_err(|e| schema(e.to_string()))?;
                }
            }
        }
        Task::MassBound => {
            s.grid()?;
            s.time()?;
            s.initial()?;
            let mb = s.config.mass_bound.as_ref().ok_or_else(|| missing("mass_bound"))?;
            if !(mb.r1 > 4.0 * (mb.r0 + 1.0)) {
                return Err(hyperlace::Error::Hypothesis(format!("need R1 > 4(R0 + 1), got R0 = {}, R1 = {}", mb.r0, mb.r1)).into());
            }
            if mb.rhos.is_empty() {
                return Err(schema("mass_bound.rhos is empty"));
            }
            let valid = mb.rhos.iter().any(|&rho| mb.ts().iter().any(|&t| validate_scan_point(mb.r0, mb.r1, rho, t).is_ok()));
            if !valid {
                return Err(hyperlace::Error::Hypothesis("no (ρ, t) scan point satisfies the hypotheses".into()).into());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario, Failure> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| Failure::Schema(e.to_string()))?;
        resolve(config, PathBuf::from("/runs/s.toml"))
    }

    #[test]
    fn output_dir_is_relative_to_the_config() {
        let s = parse("task = \"carleman-check\"\nseed = 1\n").unwrap();
        assert_eq!(s.output_dir(), PathBuf::from("/runs/out"));
    }

    #[test]
    fn potentials_are_exclusive() {
        let text = "task = \"gauge-check\"\n[signature]\nn = 2\nk = 1\n[potentials]\ncatalog = \"zero\"\na = [\"0\", \"0\"]\n";
        assert_eq!(parse(text).err().unwrap().exit_code(), 2);
    }

    #[test]
    fn appell_needs_gamma_or_both_parameters() {
        let base = "task = \"appell-check\"\n[signature]\nn = 2\nk = 1\n[grid]\nhalf_width = 5.0\npoints = 16\n[time]\nsteps = 4\n[initial]\nexact = \"gaussian_product\"\nwidths = [1.0, 1.0]\n";
        assert!(parse(&format!("{base}[appell]\na = 2.0\n")).is_err());
        assert!(parse(&format!("{base}[appell]\ngamma = 2.0\na = 2.0\n")).is_err());
        let s = parse(&format!("{base}[appell]\ngamma = 4.0\n")).unwrap();
        assert_eq!(s.appell.unwrap().gamma(), 4.0);
    }

    #[test]
    fn default_xi_is_first_axis() {
        let s = parse("task = \"gauge-check\"\n[signature]\nn = 3\nk = 1\n").unwrap();
        assert_eq!(s.xi().unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(s.is_free());
    }
}
