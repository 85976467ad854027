//! JSON documents exchanged by the command-line tools.
//!
//! Complex numbers are `[re, im]` pairs. Floats are written with 17
//! significant digits so every value reads back bit-for-bit.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::discrimination::{DiscriminationSolution, FailureAssignment, SolverMethod};
use crate::embedding::ExtendedUnitary;
use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::photonics::{JointDistribution, OutcomeDistribution, ShotCounts};
use crate::reck::{NetworkPlan, OpticalElement, Provenance};
use num_complex::Complex64;

pub type ComplexPair = [f64; 2];

fn pair(z: Complex64) -> ComplexPair {
    [z.re, z.im]
}

fn vector_pairs(v: &CVector) -> Vec<ComplexPair> {
    v.iter().copied().map(pair).collect()
}

fn matrix_rows(m: &CMatrix) -> Vec<Vec<ComplexPair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect())
        .collect()
}

fn vector_from_pairs(v: &[ComplexPair]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|&[re, im]| Complex64::new(re, im)))
}

/// Parses a square matrix of `[re, im]` rows.
pub fn matrix_from_rows(rows: &[Vec<ComplexPair>], field: &str) -> Result<CMatrix> {
    let n = rows.len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(Error::Dimension {
                field: format!("{field}[{i}]"),
                expected: n,
                found: r.len(),
            });
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let [re, im] = rows[i][j];
        Complex64::new(re, im)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleDocument {
    pub dimension: usize,
    pub states: Vec<Vec<ComplexPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<Vec<f64>>,
}

impl From<&StateEnsemble> for EnsembleDocument {
    fn from(e: &StateEnsemble) -> Self {
        Self {
            dimension: e.dimension(),
            states: e.states().iter().map(vector_pairs).collect(),
            priors: Some(e.priors().to_vec()),
        }
    }
}

impl TryFrom<EnsembleDocument> for StateEnsemble {
    type Error = Error;

    fn try_from(doc: EnsembleDocument) -> Result<Self> {
        if doc.states.len() != doc.dimension {
            return Err(Error::Dimension {
                field: "states".into(),
                expected: doc.dimension,
                found: doc.states.len(),
            });
        }
        for (i, s) in doc.states.iter().enumerate() {
            if s.len() != doc.dimension {
                return Err(Error::Dimension {
                    field: format!("states[{i}]"),
                    expected: doc.dimension,
                    found: s.len(),
                });
            }
        }
        let states = doc.states.iter().map(|s| vector_from_pairs(s)).collect();
        StateEnsemble::new(states, doc.priors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDocument {
    pub q: Vec<f64>,
    #[serde(rename = "Q")]
    pub failure: f64,
    #[serde(rename = "P")]
    pub success: f64,
    pub m: usize,
    pub delta: Option<f64>,
    pub method: SolverMethod,
    pub lambda_min: f64,
}

impl From<&DiscriminationSolution> for SolutionDocument {
    fn from(s: &DiscriminationSolution) -> Self {
        Self {
            q: s.assignment.q().to_vec(),
            failure: s.failure,
            success: s.success,
            m: s.rank,
            delta: s.delta,
            method: s.method,
            lambda_min: s.lambda_min,
        }
    }
}

/// Restores the solution as written. Feasibility against a Gram matrix is
/// the caller's business.
impl TryFrom<SolutionDocument> for DiscriminationSolution {
    type Error = Error;

    fn try_from(doc: SolutionDocument) -> Result<Self> {
        let assignment = FailureAssignment::new(doc.q)?;
        if doc.m > assignment.len() {
            return Err(Error::Dimension {
                field: "m".into(),
                expected: assignment.len(),
                found: doc.m,
            });
        }
        if (doc.failure + doc.success - 1.0).abs() > 1e-12 {
            return Err(Error::Malformed(format!("P = {} and Q = {} do not sum to 1", doc.success, doc.failure)));
        }
        Ok(Self {
            assignment,
            failure: doc.failure,
            success: doc.success,
            rank: doc.m,
            delta: doc.delta,
            method: doc.method,
            lambda_min: doc.lambda_min,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitaryDocument {
    #[serde(rename = "N")]
    pub ports: usize,
    pub matrix: Vec<Vec<ComplexPair>>,
    pub inputs: Vec<Vec<ComplexPair>>,
    pub outputs: Vec<Vec<ComplexPair>>,
}

impl From<&ExtendedUnitary> for UnitaryDocument {
    fn from(u: &ExtendedUnitary) -> Self {
        Self {
            ports: u.ports(),
            matrix: matrix_rows(u.matrix()),
            inputs: u.inputs().iter().map(vector_pairs).collect(),
            outputs: u.outputs().iter().map(vector_pairs).collect(),
        }
    }
}

impl UnitaryDocument {
    pub fn matrix(&self) -> Result<CMatrix> {
        let m = matrix_from_rows(&self.matrix, "matrix")?;
        if m.nrows() != self.ports {
            return Err(Error::Dimension {
                field: "matrix".into(),
                expected: self.ports,
                found: m.nrows(),
            });
        }
        Ok(m)
    }

    pub fn to_unitary(&self) -> Result<ExtendedUnitary> {
        let inputs: Vec<CVector> = self.inputs.iter().map(|v| vector_from_pairs(v)).collect();
        let outputs: Vec<CVector> = self.outputs.iter().map(|v| vector_from_pairs(v)).collect();
        ExtendedUnitary::from_parts(self.matrix()?, inputs, outputs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    #[serde(rename = "N")]
    pub ports: usize,
    pub provenance: Provenance,
    pub elements: Vec<OpticalElement>,
}

impl From<&NetworkPlan> for NetworkDocument {
    fn from(p: &NetworkPlan) -> Self {
        Self {
            ports: p.ports(),
            provenance: p.provenance(),
            elements: p.elements().to_vec(),
        }
    }
}

impl TryFrom<NetworkDocument> for NetworkPlan {
    type Error = Error;

    fn try_from(doc: NetworkDocument) -> Result<Self> {
        NetworkPlan::new(doc.ports, doc.provenance, doc.elements)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSection {
    pub per_input: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    pub success: f64,
    #[serde(rename = "Q")]
    pub failure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledSection {
    pub shots: u64,
    pub seed: u64,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeSection {
    pub labels: Vec<String>,
    pub per_input: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub exact: ExactSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SampledSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade: Option<CascadeSection>,
}

impl ReportDocument {
    pub fn new(
        exact: &OutcomeDistribution,
        sampled: Option<&ShotCounts>,
        cascade: Option<&JointDistribution>,
    ) -> Self {
        Self {
            exact: ExactSection {
                per_input: exact.per_input().to_vec(),
                success: exact.success(),
                failure: exact.failure(),
            },
            sampled: sampled.map(|s| SampledSection {
                shots: s.shots,
                seed: s.seed,
                counts: s.counts.clone(),
            }),
            cascade: cascade.map(|j| CascadeSection {
                labels: j.labels().to_vec(),
                per_input: j.per_input().to_vec(),
            }),
        }
    }
}

/// Second-stage network attached to some failure ports of the first stage.
/// Ports are numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeDocument {
    pub failure_ports: Vec<usize>,
    pub matrix: Vec<Vec<ComplexPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// Pretty JSON with every float written as `{:.16e}`.
struct Digits17 {
    inner: PrettyFormatter<'static>,
}

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes any document in the canonical encoding.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Digits17 { inner: PrettyFormatter::with_indent(b"  ") },
    );
    value.serialize(&mut ser).expect("documents serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
