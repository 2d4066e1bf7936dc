//! Built-in potentials and exact solutions, listed in a fixed order.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::appell::{AppellVector, ProofSchedule};
use crate::error::{Error, Result};
use crate::potential::{ExprScalar, ExprVector, VectorPotential, ZeroVector};

/// Whether the line integral of `A` along rays from the origin converges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatalogTag {
    ConditionA,
    NotConditionA,
}

impl CatalogTag {
    pub fn label(self) -> &'static str {
        match self {
            CatalogTag::ConditionA => "condition-A",
            CatalogTag::NotConditionA => "NOT-condition-A",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PotentialEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub tag: CatalogTag,
    pub time_dependent: bool,
}

pub const POTENTIALS: &[PotentialEntry] = &[
    PotentialEntry { name: "zero", description: "A = 0", tag: CatalogTag::ConditionA, time_dependent: false },
    PotentialEntry {
        name: "constant-2d-field",
        description: "A = (-x2/2, x1/2, 0, ...), unit field in the x1-x2 plane, transversal form",
        tag: CatalogTag::ConditionA,
        time_dependent: false,
    },
    PotentialEntry {
        name: "pure-gauge",
        description: "A = grad(0.3 x2 sin(x1) + 0.2 cos(x2)), B = 0",
        tag: CatalogTag::ConditionA,
        time_dependent: false,
    },
    PotentialEntry {
        name: "bounded-oscillatory",
        description: "A = e^{-|x|^2/8} (sin(x2), cos(x1), 0, ...)",
        tag: CatalogTag::ConditionA,
        time_dependent: false,
    },
    PotentialEntry {
        name: "aharonov-bohm",
        description: "A = 0.5 (0, ..., -x_n, x_{n-1}) / (x_{n-1}^2 + x_n^2), singular on a codimension-2 set",
        tag: CatalogTag::NotConditionA,
        time_dependent: false,
    },
    PotentialEntry {
        name: "appell-constant-field",
        description: "alpha(t) A(alpha(t) x) for the constant field, gamma = 4",
        tag: CatalogTag::ConditionA,
        time_dependent: true,
    },
    PotentialEntry {
        name: "appell-oscillatory",
        description: "alpha(t) A(alpha(t) x) for the bounded oscillatory potential, gamma = 4",
        tag: CatalogTag::ConditionA,
        time_dependent: true,
    },
];

/// `γ` of the Appell images in the catalog.
pub const CATALOG_GAMMA: f64 = 4.0;

pub const EXACT_SOLUTIONS: &[(&str, &str)] = &[
    ("plane_wave", "exp(i p.x - i (|p_+|^2 - |p_-|^2) t)"),
    ("gaussian_product", "product of free gaussians with widths beta_j, split-signed dispersion"),
];

pub fn entry(name: &str) -> Result<&'static PotentialEntry> {
    POTENTIALS
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Unsupported(format!("unknown catalog potential `{name}`")))
}

fn padded(first: &[String], n: usize) -> Vec<String> {
    let mut out = first.to_vec();
    out.resize(n, "0".into());
    out
}

/// Component expressions of a static catalog potential in dimension `n`.
pub fn potential_texts(name: &str, n: usize) -> Result<Vec<String>> {
    if n < 2 {
        return Err(Error::InvalidSignature("catalog potentials need n >= 2".into()));
    }
    let s = |v: &[&str]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>();
    Ok(match name {
        "zero" => padded(&[], n),
        "constant-2d-field" => padded(&s(&["-0.5*x2", "0.5*x1"]), n),
        "pure-gauge" => padded(&s(&["0.3*x2*cos(x1)", "0.3*sin(x1) - 0.2*sin(x2)"]), n),
        "bounded-oscillatory" => {
            let r2 = (1..=n).map(|j| format!("x{j}^2")).collect::<Vec<_>>().join(" + ");
            padded(&[format!("sin(x2)*exp(-({r2})/8)"), format!("cos(x1)*exp(-({r2})/8)")], n)
        }
        "aharonov-bohm" => {
            let (p, q) = (n - 1, n);
            let mut out = padded(&[], n);
            out[n - 2] = format!("-0.5*x{q}/(x{p}^2 + x{q}^2)");
            out[n - 1] = format!("0.5*x{p}/(x{p}^2 + x{q}^2)");
            out
        }
        _ => {
            entry(name)?;
            return Err(Error::Unsupported(format!("`{name}` is not given by static expressions")));
        }
    })
}

/// The gauge function of `pure-gauge`.
pub fn pure_gauge_phase(n: usize) -> Result<ExprScalar> {
    ExprScalar::parse("0.3*x2*sin(x1) + 0.2*cos(x2)", n)
}

/// Instantiates a catalog potential in dimension `n`.
pub fn potential(name: &str, n: usize) -> Result<Arc<dyn VectorPotential>> {
    match name {
        "zero" => Ok(Arc::new(ZeroVector(n))),
        "appell-constant-field" | "appell-oscillatory" => {
            let base = if name == "appell-constant-field" { "constant-2d-field" } else { "bounded-oscillatory" };
            let inner: Arc<dyn VectorPotential> = Arc::new(ExprVector::parse(&potential_texts(base, n)?, n)?);
            Ok(Arc::new(AppellVector::new(inner, ProofSchedule::new(CATALOG_GAMMA)?.params())))
        }
        _ => Ok(Arc::new(ExprVector::parse(&potential_texts(name, n)?, n)?)),
    }
}

/// Human-readable listing, stable across runs.
pub fn list_catalog() -> String {
    let mut out = String::from("potentials:\n");
    for e in POTENTIALS {
        let kind = if e.time_dependent { "time-dependent" } else { "static" };
        let _ = writeln!(out, "  {:<24} [{}] ({kind}) {}", e.name, e.tag.label(), e.description);
    }
    out.push_str("exact solutions:\n");
    for (name, desc) in EXACT_SOLUTIONS {
        let _ = writeln!(out, "  {name:<24} {desc}");
    }
    out
}
