//! Run configuration: a JSON file with a fixed schema, overridden by flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ebk::SeparableSystem;
use crate::error::{Error, Result};
use crate::oracle::OracleConfig;
use crate::potentials::{PotentialModel, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinateSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Option<PotentialSpec>,
    pub system: Option<Vec<CoordinateSpec>>,
    pub solver: SolverConfig,
    pub oracle: OracleConfig,
    pub levels: Option<usize>,
    pub methods: Option<String>,
    pub level: Option<usize>,
    pub margins: Option<Vec<f64>>,
    pub energies: Option<Vec<f64>>,
    pub halvings: Option<usize>,
    pub qn: Option<Vec<i64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

/// Parses `k=v,k=v` into a parameter map.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("parameter '{item}' is not of the form name=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("parameter '{k}' has non-numeric value '{v}'")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// Parses a comma-separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::InvalidConfig(format!("invalid {what} entry '{s}'")))
        })
        .collect()
}

fn take(params: &mut BTreeMap<String, f64>, key: &str, default: Option<f64>, kind: &str) -> Result<f64> {
    match params.remove(key) {
        Some(v) => Ok(v),
        None => default.ok_or_else(|| Error::InvalidConfig(format!("{kind} potential requires parameter '{key}'"))),
    }
}

/// Builds a model from a kind name and its parameters; unknown names are rejected.
pub fn build_model(kind: &str, params: &BTreeMap<String, f64>, mass: Option<f64>) -> Result<PotentialModel> {
    let mass = mass.unwrap_or(1.0);
    let mut p = params.clone();
    let model = match kind {
        "harmonic" => {
            let omega = take(&mut p, "omega", Some(1.0), kind)?;
            PotentialModel::harmonic(mass, omega)?
        }
        "morse" => {
            let depth = take(&mut p, "D", None, kind)?;
            let width = take(&mut p, "a", None, kind)?;
            let center = take(&mut p, "x0", Some(0.0), kind)?;
            PotentialModel::morse(mass, depth, width, center)?
        }
        "quartic" => {
            let lambda = take(&mut p, "lambda", Some(1.0), kind)?;
            PotentialModel::quartic(mass, lambda)?
        }
        "polynomial" => {
            let mut coefficients = Vec::new();
            for (k, v) in std::mem::take(&mut p) {
                let index: usize = k
                    .strip_prefix('c')
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("polynomial parameter '{k}' must be c0, c1, ...")))?;
                if coefficients.len() <= index {
                    coefficients.resize(index + 1, 0.0);
                }
                coefficients[index] = v;
            }
            PotentialModel::polynomial(mass, coefficients)?
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown potential '{other}' (expected harmonic, morse, quartic or polynomial)"
            )))
        }
    };
    if let Some(k) = p.keys().next() {
        return Err(Error::InvalidConfig(format!("unknown parameter '{k}' for {kind} potential")));
    }
    Ok(model)
}

/// `KIND[:k=v,...]`
pub fn parse_coordinate(text: &str) -> Result<CoordinateSpec> {
    let (kind, params) = match text.split_once(':') {
        Some((k, p)) => (k, parse_params(p)?),
        None => (text, BTreeMap::new()),
    };
    Ok(CoordinateSpec {
        label: None,
        kind: kind.trim().to_string(),
        params,
        mass: None,
    })
}

pub fn build_system(coords: &[CoordinateSpec]) -> Result<SeparableSystem> {
    let coordinates = coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let label = c.label.clone().unwrap_or_else(|| format!("q{}", i + 1));
            Ok((label, build_model(&c.kind, &c.params, c.mass)?))
        })
        .collect::<Result<Vec<_>>>()?;
    SeparableSystem::new(coordinates)
}
