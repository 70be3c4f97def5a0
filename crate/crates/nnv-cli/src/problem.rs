//! Problem files and the JSON form of sets.

use std::collections::BTreeMap;

use nnv_core::{GeometricSet, HPolytope, Halfspace, Hyperrectangle, PolytopeComplement, VPolytope};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Tagged JSON descriptor of a set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetDesc {
    Hyperrectangle {
        center: Vec<f64>,
        radius: Vec<f64>,
    },
    Hpolytope {
        #[serde(rename = "C")]
        c: Vec<Vec<f64>>,
        d: Vec<f64>,
    },
    Halfspace {
        c: Vec<f64>,
        d: f64,
    },
    PolytopeComplement {
        inner: Box<SetDesc>,
    },
    Vpolytope {
        vertices: Vec<Vec<f64>>,
    },
}

impl SetDesc {
    /// Builds the set, naming `field` in any error.
    pub fn to_set(&self, field: &str) -> Result<GeometricSet, CliError> {
        let bad = |e: nnv_core::Error| CliError::Field { field: field.to_string(), msg: e.to_string() };
        Ok(match self {
            SetDesc::Hyperrectangle { center, radius } => {
                Hyperrectangle::new(center.clone(), radius.clone()).map_err(bad)?.into()
            }
            SetDesc::Hpolytope { c, d } => HPolytope::from_rows(c, d.clone()).map_err(bad)?.into(),
            SetDesc::Halfspace { c, d } => Halfspace::new(c.clone(), *d).map_err(bad)?.into(),
            SetDesc::PolytopeComplement { inner } => match inner.to_set(&format!("{field}.inner"))? {
                GeometricSet::HPolytope(h) => PolytopeComplement::new(h).into(),
                GeometricSet::Hyperrectangle(h) => PolytopeComplement::new(h.to_hpolytope()).into(),
                GeometricSet::Halfspace(h) => {
                    PolytopeComplement::new(HPolytope::from_rows(&[h.c], vec![h.d]).map_err(bad)?).into()
                }
                _ => {
                    return Err(CliError::Field {
                        field: format!("{field}.inner"),
                        msg: "inner set must be an hpolytope, hyperrectangle or halfspace".into(),
                    })
                }
            },
            SetDesc::Vpolytope { vertices } => VPolytope::new(vertices.clone()).map_err(bad)?.into(),
        })
    }

    pub fn from_set(s: &GeometricSet) -> SetDesc {
        match s {
            GeometricSet::Hyperrectangle(h) => {
                SetDesc::Hyperrectangle { center: h.center.clone(), radius: h.radius.clone() }
            }
            GeometricSet::HPolytope(h) => hpolytope_desc(h),
            GeometricSet::VPolytope(v) => SetDesc::Vpolytope { vertices: v.vertices.clone() },
            GeometricSet::Halfspace(h) => SetDesc::Halfspace { c: h.c.clone(), d: h.d },
            GeometricSet::PolytopeComplement(pc) => {
                SetDesc::PolytopeComplement { inner: Box::new(hpolytope_desc(&pc.inner)) }
            }
        }
    }
}

fn hpolytope_desc(h: &HPolytope) -> SetDesc {
    let (c, d) = h.rows().into_iter().unzip();
    SetDesc::Hpolytope { c, d }
}

/// A scalar parameter value; booleans read as 1 and 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Bool(bool),
}

impl Scalar {
    pub fn value(self) -> f64 {
        match self {
            Scalar::Number(v) => v,
            Scalar::Bool(b) => f64::from(u8::from(b)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Network path, relative to the problem file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
    pub input: SetDesc,
    pub output: SetDesc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Scalar>,
}

pub fn parse_problem(src: &str) -> Result<ProblemFile, CliError> {
    serde_json::from_str(src).map_err(|e| CliError::Json { line: e.line(), column: e.column(), msg: e.to_string() })
}

/// Parses `k=v` into a parameter.
pub fn parse_param(arg: &str) -> Result<(String, Scalar), CliError> {
    let bad = || CliError::Param(format!("expected k=v with a number or boolean value, got {arg:?}"));
    let (k, v) = arg.split_once('=').ok_or_else(bad)?;
    let v = v.trim();
    let s = match v {
        "true" => Scalar::Bool(true),
        "false" => Scalar::Bool(false),
        _ => Scalar::Number(v.parse().map_err(|_| bad())?),
    };
    if k.trim().is_empty() {
        return Err(bad());
    }
    Ok((k.trim().to_string(), s))
}
