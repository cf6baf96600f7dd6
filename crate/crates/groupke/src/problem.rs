//! Problem ingestion: a single JSON format with exact-rational strings.
//! Unknown fields are rejected; rationals are parsed exactly.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Q, QMat, QVec};
use crate::polytope::{restrict_to_chamber, ChamberPolytope, Facet, Polytope};
use crate::rootdata::{RootSystem, DEFAULT_WEYL_CAP};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("{code}: {message}")]
    Invalid { code: String, message: String },
}

fn invalid(code: &str, message: impl Into<String>) -> ProblemError {
    ProblemError::Invalid { code: code.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub schema_version: u32,
    pub name: String,
    pub root_system: RootSystemSpec,
    pub polytope: PolytopeSpec,
    #[serde(default)]
    pub options: Options,
    /// Requested analyses; empty means all.
    #[serde(default)]
    pub analyses: Vec<Analysis>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootSystemSpec {
    /// Either a named type ("A1", "A2", "B2", ...) ...
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cartan_type: Option<String>,
    /// ... or explicit rank/gram/simple-root data. A torus is rank > 0
    /// with no simple roots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simple_roots: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeSpec {
    pub facets: Vec<FacetSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetSpec {
    pub u: Vec<i64>,
    pub lambda: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    pub quad_order: usize,
    pub wall_margin: f64,
    pub soliton_tol: f64,
    pub kenergy_degree: u32,
    pub kenergy_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            quad_order: 6,
            wall_margin: 1e-6,
            soliton_tol: 1e-12,
            kenergy_degree: 2,
            kenergy_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Ke,
    Properness,
    Futaki,
    Soliton,
    Kenergy,
    Destabilize,
}

pub const ALL_ANALYSES: [Analysis; 6] = [
    Analysis::Ke,
    Analysis::Properness,
    Analysis::Futaki,
    Analysis::Soliton,
    Analysis::Kenergy,
    Analysis::Destabilize,
];

pub fn parse_rational(s: &str) -> Result<Q, ProblemError> {
    Q::from_str(s.trim())
        .map_err(|e| invalid("problem.BadRational", format!("cannot parse {s:?}: {e}")))
}

fn parse_matrix(rows: &[Vec<String>]) -> Result<Vec<QVec>, ProblemError> {
    rows.iter()
        .map(|r| r.iter().map(|s| parse_rational(s)).collect())
        .collect()
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        let spec: ProblemSpec = serde_json::from_str(text)
            .map_err(|e| invalid("problem.BadSchema", e.to_string()))?;
        if spec.schema_version != 1 {
            return Err(invalid(
                "problem.BadSchema",
                format!("unsupported schema_version {}", spec.schema_version),
            ));
        }
        Ok(spec)
    }

    pub fn build_root_system(&self) -> Result<RootSystem, ProblemError> {
        let rsspec = &self.root_system;
        if let Some(name) = &rsspec.cartan_type {
            if rsspec.rank.is_some() || rsspec.gram.is_some() || rsspec.simple_roots.is_some() {
                return Err(invalid(
                    "problem.BadSchema",
                    "cartan_type excludes explicit rank/gram/simple_roots",
                ));
            }
            return RootSystem::from_cartan_type(name)
                .map_err(|e| invalid(&format!("rootdata.{}", error_code(&e)), e.to_string()));
        }
        let rank = rsspec
            .rank
            .ok_or_else(|| invalid("problem.BadSchema", "missing rank (or cartan_type)"))?;
        let gram_rows = rsspec
            .gram
            .as_ref()
            .ok_or_else(|| invalid("problem.BadSchema", "missing gram matrix"))?;
        if gram_rows.len() != rank || gram_rows.iter().any(|r| r.len() != rank) {
            return Err(invalid("problem.BadSchema", "gram matrix shape must be rank x rank"));
        }
        let gram = QMat::from_rows(&parse_matrix(gram_rows)?);
        let simple = match &rsspec.simple_roots {
            Some(rows) => {
                if rows.iter().any(|r| r.len() != rank) {
                    return Err(invalid("problem.BadSchema", "simple-root length must equal rank"));
                }
                parse_matrix(rows)?
            }
            None => vec![],
        };
        RootSystem::build(rank, gram, simple, DEFAULT_WEYL_CAP)
            .map_err(|e| invalid(&format!("rootdata.{}", error_code(&e)), e.to_string()))
    }

    pub fn build_polytope(&self, rs: &RootSystem) -> Result<(Polytope, ChamberPolytope), ProblemError> {
        let facets: Vec<Facet> = self
            .polytope
            .facets
            .iter()
            .map(|f| {
                if f.u.len() != rs.rank {
                    return Err(invalid("problem.BadSchema", "facet covector length must equal rank"));
                }
                Ok(Facet {
                    u: f.u.iter().map(|&k| Q::from_integer(k.into())).collect(),
                    lambda: parse_rational(&f.lambda)?,
                })
            })
            .collect::<Result<_, _>>()?;
        let p = Polytope::new(rs.rank, facets)
            .map_err(|e| invalid(&format!("polytope.{}", polytope_code(&e)), e.to_string()))?;
        // restrict_to_chamber re-checks W-invariance internally
        let cp = restrict_to_chamber(&p, rs)
            .map_err(|e| invalid(&format!("polytope.{}", polytope_code(&e)), e.to_string()))?;
        Ok((p, cp))
    }

    pub fn requested(&self) -> Vec<Analysis> {
        if self.analyses.is_empty() {
            ALL_ANALYSES.to_vec()
        } else {
            self.analyses.clone()
        }
    }
}

fn error_code(e: &crate::rootdata::RootDataError) -> &'static str {
    use crate::rootdata::RootDataError::*;
    match e {
        DegenerateGram => "DegenerateGram",
        DependentSimpleRoots => "DependentSimpleRoots",
        NonCrystallographic { .. } => "NonCrystallographic",
        WeylGroupTooLarge { .. } => "WeylGroupTooLarge",
        UnknownCartanType(_) => "UnknownCartanType",
    }
}

fn polytope_code(e: &crate::polytope::PolytopeError) -> &'static str {
    use crate::polytope::PolytopeError::*;
    match e {
        OriginNotInterior(_) => "OriginNotInterior",
        ZeroCovector(_) => "ZeroCovector",
        Unbounded(_) => "Unbounded",
        NotFullDimensional => "NotFullDimensional",
        NotWInvariant { .. } => "NotWInvariant",
        RegionEmpty => "RegionEmpty",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUADRIC: &str = r#"{
        "schema_version": 1,
        "name": "quadric_sl2",
        "root_system": {"rank": 1, "gram": [["1/2"]], "simple_roots": [["2"]]},
        "polytope": {"facets": [{"u": [1], "lambda": "6"}, {"u": [-1], "lambda": "6"}]}
    }"#;

    #[test]
    fn parses_and_builds_the_quadric() {
        let spec = ProblemSpec::from_json(QUADRIC).unwrap();
        let rs = spec.build_root_system().unwrap();
        assert_eq!(rs.rank, 1);
        assert_eq!(rs.num_positive_roots(), 1);
        let (_, cp) = spec.build_polytope(&rs).unwrap();
        assert_eq!(cp.outer_facets.len(), 1);
        assert_eq!(spec.requested().len(), 6);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = QUADRIC.replace("\"name\"", "\"extra\": 1, \"name\"");
        let err = ProblemSpec::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("problem.BadSchema"), "{err}");
    }

    #[test]
    fn non_pd_gram_maps_to_degenerate_gram_code() {
        let bad = QUADRIC.replace("1/2", "-1");
        let spec = ProblemSpec::from_json(&bad).unwrap();
        let err = spec.build_root_system().unwrap_err();
        assert!(err.to_string().starts_with("rootdata.DegenerateGram"), "{err}");
    }

    #[test]
    fn round_trip_serialization_is_identity() {
        let spec = ProblemSpec::from_json(QUADRIC).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back = ProblemSpec::from_json(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
