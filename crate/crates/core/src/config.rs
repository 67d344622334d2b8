//! Run configuration: a JSON document with top-level keys `algebra`, `gamma`
//! and `run`. Rationals are written as `[numerator, denominator]`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigInt;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::liealg::{GammaData, GammaElement, LieData};
use crate::lingroup::LinearMap;
use crate::linalg::Matrix;
use crate::scalar::Q;

/// A named group of checks.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Suite {
    LieData,
    ModeAlgebra,
    Vacuum,
    QuasiModule,
    CommutatorFormula,
    RoundTrip,
    Products,
    WitnessIndependence,
    DeltaCalculus,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::LieData,
        Suite::ModeAlgebra,
        Suite::Vacuum,
        Suite::QuasiModule,
        Suite::CommutatorFormula,
        Suite::RoundTrip,
        Suite::Products,
        Suite::WitnessIndependence,
        Suite::DeltaCalculus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::LieData => "lie-data",
            Suite::ModeAlgebra => "mode-algebra",
            Suite::Vacuum => "vacuum",
            Suite::QuasiModule => "quasi-module",
            Suite::CommutatorFormula => "commutator-formula",
            Suite::RoundTrip => "round-trip",
            Suite::Products => "products",
            Suite::WitnessIndependence => "witness-independence",
            Suite::DeltaCalculus => "delta-calculus",
        }
    }

    pub fn valid_names() -> String {
        Suite::ALL.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownSuite { name: s.to_string(), valid: Suite::valid_names() })
    }
}

/// A validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub name: String,
    pub lie: LieData,
    pub gamma: GammaData,
    pub level: Q,
    pub cutoff: usize,
    /// Exponent window `[lo, hi]`, used on both axes.
    pub window: (i64, i64),
    /// Highest degree for the round-trip comparison.
    pub degree: usize,
    pub suites: Vec<Suite>,
    pub output: Option<PathBuf>,
}

type RawQ = (i64, i64);

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    algebra: RawAlgebra,
    #[serde(default)]
    gamma: RawGamma,
    run: RawRun,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebra {
    builtin: Option<String>,
    rank: Option<usize>,
    labels: Option<Vec<String>>,
    structure: Option<Vec<Vec<Vec<RawQ>>>>,
    gram: Option<Vec<Vec<RawQ>>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGamma {
    builtin: Option<String>,
    elements: Option<Vec<RawElement>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    name: String,
    matrix: Vec<Vec<RawQ>>,
    /// `[alpha, beta]` of `x ↦ alpha x + beta`.
    psi: (RawQ, RawQ),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    level: RawQ,
    cutoff: i64,
    window: Option<(i64, i64)>,
    degree: Option<usize>,
    #[serde(default)]
    suites: Vec<String>,
    output: Option<PathBuf>,
}

fn rational(field: &str, (n, d): RawQ) -> Result<Q> {
    if d == 0 {
        return Err(Error::InvalidRational { field: field.to_string(), reason: "zero denominator".into() });
    }
    Ok(Q::new(BigInt::from(n), BigInt::from(d)))
}

fn matrix(field: &str, rows: &[Vec<RawQ>]) -> Result<Matrix> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, x)| rational(&format!("{field}[{i}][{j}]"), *x)).collect())
        .collect()
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig { field: field.to_string(), reason: reason.into() }
}

fn build_algebra(raw: &RawAlgebra) -> Result<(String, LieData)> {
    let (name, mut lie) = match raw.builtin.as_deref() {
        Some("heisenberg1") => ("heisenberg1".to_string(), LieData::abelian(1)),
        Some("abelian") => {
            let r = raw.rank.ok_or_else(|| invalid("algebra.rank", "required for the abelian builtin"))?;
            if r == 0 {
                return Err(invalid("algebra.rank", "must be positive"));
            }
            (format!("abelian{r}"), LieData::abelian(r))
        }
        Some("sl2") => ("sl2".to_string(), LieData::sl2()),
        Some(other) => return Err(invalid("algebra.builtin", format!("unknown algebra {other:?}; known: heisenberg1, abelian, sl2"))),
        None => {
            let s = raw.structure.as_ref().ok_or_else(|| invalid("algebra.structure", "required without a builtin"))?;
            let n = s.len();
            let labels = raw.labels.clone().unwrap_or_else(|| (1..=n).map(|i| format!("e{i}")).collect());
            let mut structure = Vec::with_capacity(n);
            for (i, plane) in s.iter().enumerate() {
                structure.push(matrix(&format!("algebra.structure[{i}]"), plane)?);
            }
            ("inline".to_string(), LieData::new(labels, structure, crate::linalg::identity(n)))
        }
    };
    if let Some(labels) = &raw.labels {
        if labels.len() != lie.dim() {
            return Err(invalid("algebra.labels", format!("expected {} labels", lie.dim())));
        }
        lie.labels = labels.clone();
    }
    if let Some(g) = &raw.gram {
        lie.gram = matrix("algebra.gram", g)?;
    } else if raw.builtin.is_none() {
        return Err(invalid("algebra.gram", "required without a builtin"));
    }
    Ok((name, lie))
}

fn build_gamma(raw: &RawGamma, dim: usize) -> Result<GammaData> {
    match (raw.builtin.as_deref(), &raw.elements) {
        (Some(_), Some(_)) => Err(invalid("gamma", "give either builtin or elements")),
        (None | Some("trivial"), None) => Ok(GammaData::trivial(dim)),
        (Some("z2-negation"), None) => Ok(GammaData::z2_negation(dim)),
        (Some(other), None) => Err(invalid("gamma.builtin", format!("unknown group {other:?}; known: trivial, z2-negation"))),
        (None, Some(els)) => {
            let mut out = Vec::with_capacity(els.len());
            for (i, e) in els.iter().enumerate() {
                let f = format!("gamma.elements[{i}]");
                let alpha = rational(&format!("{f}.psi[0]"), e.psi.0)?;
                let beta = rational(&format!("{f}.psi[1]"), e.psi.1)?;
                let psi = LinearMap::try_new(alpha, beta).ok_or_else(|| invalid(&format!("{f}.psi"), "slope must be nonzero"))?;
                out.push(GammaElement { name: e.name.clone(), matrix: matrix(&format!("{f}.matrix"), &e.matrix)?, psi });
            }
            if out.is_empty() {
                return Err(invalid("gamma.elements", "must be nonempty"));
            }
            Ok(GammaData::new(out))
        }
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text)
        .map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    let (name, lie) = build_algebra(&raw.algebra)?;
    let gamma = build_gamma(&raw.gamma, lie.dim())?;
    let level = rational("run.level", raw.run.level)?;
    if raw.run.cutoff < 0 {
        return Err(invalid("run.cutoff", "must be nonnegative"));
    }
    let window = raw.run.window.unwrap_or((-12, 12));
    if window.0 > window.1 {
        return Err(invalid("run.window", "floor exceeds ceiling"));
    }
    let suites = raw.run.suites.iter().map(|s| s.parse()).collect::<Result<Vec<Suite>>>()?;
    Ok(RunConfig {
        name,
        lie,
        gamma,
        level,
        cutoff: raw.run.cutoff as usize,
        window,
        degree: raw.run.degree.unwrap_or(5),
        suites,
        output: raw.run.output,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
