//! JSON interchange.
//!
//! A matrix is
//!
//! ```json
//! {"ring": {"kind": "prime_field", "p": 5}, "rows": 2, "cols": 2,
//!  "entries": [["1", "0"], ["3", "4"]]}
//! ```
//!
//! with `{"kind": "gaussian_rational"}` for `Q(i)`; entries are scalar
//! strings in the canonical grammar (`"1/2-3/4i"`, `"3/4i"`, `"-2"`).

use serde::{Deserialize, Serialize};

use crate::blocks::Side;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::orders::{Checks, InclusionVerdict, OrderRelation, TripleDecomposition, Witness};
use crate::scalar::{parse_scalar, RingSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RingJson {
    GaussianRational,
    PrimeField { p: u32 },
}

impl RingJson {
    pub fn to_spec(&self) -> Result<RingSpec> {
        match *self {
            RingJson::GaussianRational => Ok(RingSpec::GaussianRational),
            RingJson::PrimeField { p } => RingSpec::prime_field(p),
        }
    }
}

impl From<RingSpec> for RingJson {
    fn from(r: RingSpec) -> Self {
        match r {
            RingSpec::GaussianRational => RingJson::GaussianRational,
            RingSpec::PrimeField(p) => RingJson::PrimeField { p },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub ring: RingJson,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<String>>,
}

impl From<&Mat> for MatrixJson {
    fn from(m: &Mat) -> Self {
        MatrixJson {
            ring: m.ring().into(),
            rows: m.rows(),
            cols: m.cols(),
            entries: m
                .row_vecs()
                .iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        }
    }
}

impl TryFrom<&MatrixJson> for Mat {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Mat> {
        let ring = j.ring.to_spec()?;
        if j.entries.len() != j.rows {
            return Err(Error::MalformedMatrix(format!(
                "declared {} rows, found {}",
                j.rows,
                j.entries.len()
            )));
        }
        let rows = j
            .entries
            .iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != j.cols {
                    return Err(Error::MalformedMatrix(format!(
                        "row {i} has {} entries, declared {} columns",
                        row.len(),
                        j.cols
                    )));
                }
                row.iter().map(|s| parse_scalar(s, ring)).collect()
            })
            .collect::<Result<Vec<_>>>()?;
        Mat::from_rows(ring, rows)
    }
}

pub fn matrix_to_value(m: &Mat) -> serde_json::Value {
    serde_json::to_value(MatrixJson::from(m)).expect("plain data serializes")
}

pub fn matrix_from_value(v: serde_json::Value) -> Result<Mat> {
    let j: MatrixJson = serde_json::from_value(v)?;
    Mat::try_from(&j)
}

pub fn matrix_to_string(m: &Mat) -> String {
    serde_json::to_string_pretty(&MatrixJson::from(m)).expect("plain data serializes")
}

pub fn matrix_from_str(s: &str) -> Result<Mat> {
    let j: MatrixJson = serde_json::from_str(s)?;
    Mat::try_from(&j)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckJson {
    pub identity: String,
    pub holds: bool,
}

fn checks_json(checks: &Checks) -> Vec<CheckJson> {
    checks
        .iter()
        .map(|(name, ok)| CheckJson {
            identity: name.clone(),
            holds: *ok,
        })
        .collect()
}

/// A witness with its re-verification results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub relation: String,
    pub g: MatrixJson,
    pub p: MatrixJson,
    pub q: MatrixJson,
    pub checks: Vec<CheckJson>,
}

impl WitnessJson {
    pub fn new(rel: OrderRelation, w: &Witness, a: &Mat, b: &Mat) -> Self {
        WitnessJson {
            relation: rel.name().to_string(),
            g: (&w.g).into(),
            p: (&w.p).into(),
            q: (&w.q).into(),
            checks: checks_json(&w.checks(rel, a, b)),
        }
    }

    pub fn witness(&self) -> Result<Witness> {
        Ok(Witness {
            g: Mat::try_from(&self.g)?,
            p: Mat::try_from(&self.p)?,
            q: Mat::try_from(&self.q)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub side: Side,
    pub p1: MatrixJson,
    pub p2: MatrixJson,
    pub p3: MatrixJson,
    pub q1: MatrixJson,
    pub q2: MatrixJson,
    pub q3: MatrixJson,
    pub a_inv: MatrixJson,
    pub bma_inv: MatrixJson,
    pub checks: Vec<CheckJson>,
}

impl DecompositionJson {
    pub fn new(d: &TripleDecomposition, a: &Mat, b: &Mat) -> Self {
        DecompositionJson {
            side: d.side,
            p1: (&d.p1).into(),
            p2: (&d.p2).into(),
            p3: (&d.p3).into(),
            q1: (&d.q1).into(),
            q2: (&d.q2).into(),
            q3: (&d.q3).into(),
            a_inv: (&d.a_inv).into(),
            bma_inv: (&d.bma_inv).into(),
            checks: checks_json(&d.checks(a, b)),
        }
    }

    pub fn decomposition(&self) -> Result<TripleDecomposition> {
        Ok(TripleDecomposition {
            side: self.side,
            p1: Mat::try_from(&self.p1)?,
            p2: Mat::try_from(&self.p2)?,
            p3: Mat::try_from(&self.p3)?,
            q1: Mat::try_from(&self.q1)?,
            q2: Mat::try_from(&self.q2)?,
            q3: Mat::try_from(&self.q3)?,
            a_inv: Mat::try_from(&self.a_inv)?,
            bma_inv: Mat::try_from(&self.bma_inv)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionJson {
    pub included: bool,
    pub counterexample: Option<MatrixJson>,
}

impl From<&InclusionVerdict> for InclusionJson {
    fn from(v: &InclusionVerdict) -> Self {
        InclusionJson {
            included: v.included,
            counterexample: v.counterexample.as_ref().map(MatrixJson::from),
        }
    }
}
