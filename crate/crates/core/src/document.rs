//! JSON documents for operators, states and measure results.
//!
//! Operator document:
//!
//! ```json
//! { "dims": [2, 2],
//!   "entries": [[0.5, 0.0], [0.0, 0.0], ...],
//!   "norm_meta": { "N": 100, "p": 2 } }
//! ```
//!
//! `entries` lists the `D x D` matrix row-major as `[re, im]` pairs, with
//! `D = Π dims`. `norm_meta` is optional. A state document has the same
//! shape with `D` entries and no `norm_meta`. Unknown fields are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::MeasureReport;
use crate::norm::ProductVector;
use crate::tensor::{CMatrix, CVector, CompositeStructure, NormMeta, OperatorMatrix, StateVector, C64};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormMetaDoc {
    #[serde(rename = "N")]
    particles: u64,
    p: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorDoc {
    dims: Vec<usize>,
    entries: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    norm_meta: Option<NormMetaDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    dims: Vec<usize>,
    entries: Vec<[f64; 2]>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        let field = if path.is_empty() || path == "." {
            // Missing fields are reported on the parent; recover the name.
            message
                .split('`')
                .nth(1)
                .map(str::to_owned)
                .unwrap_or_else(|| "<document>".to_owned())
        } else {
            path
        };
        Error::Parse { field, message }
    })
}

fn structure_from(dims: Vec<usize>) -> Result<CompositeStructure> {
    CompositeStructure::new(dims).map_err(|e| Error::field("dims", e.to_string()))
}

fn complex_entries(entries: &[[f64; 2]]) -> Result<Vec<C64>> {
    entries
        .iter()
        .enumerate()
        .map(|(k, &[re, im])| {
            if re.is_finite() && im.is_finite() {
                Ok(C64::new(re, im))
            } else {
                Err(Error::field(format!("entries[{k}]"), "not finite"))
            }
        })
        .collect()
}

pub fn parse_operator(text: &str) -> Result<OperatorMatrix> {
    let doc: OperatorDoc = parse_json(text)?;
    let structure = structure_from(doc.dims)?;
    let d = structure.total_dim();
    if doc.entries.len() != d * d {
        return Err(Error::field(
            "entries",
            format!("expected {} entries for dims {:?}, got {}", d * d, structure.dims(), doc.entries.len()),
        ));
    }
    let values = complex_entries(&doc.entries)?;
    let m = CMatrix::from_row_slice(d, d, &values);
    let op = OperatorMatrix::new(structure, m)?;
    match doc.norm_meta {
        None => Ok(op),
        Some(meta) => {
            let meta = NormMeta::new(meta.particles, meta.p)?;
            op.with_norm_meta(meta).map_err(|e| match e {
                Error::InvalidField { .. } => e,
                other => Error::field("norm_meta", other.to_string()),
            })
        }
    }
}

pub fn parse_state(text: &str) -> Result<StateVector> {
    let doc: StateDoc = parse_json(text)?;
    let structure = structure_from(doc.dims)?;
    let d = structure.total_dim();
    if doc.entries.len() != d {
        return Err(Error::field(
            "entries",
            format!("expected {d} entries for dims {:?}, got {}", structure.dims(), doc.entries.len()),
        ));
    }
    let values = complex_entries(&doc.entries)?;
    StateVector::new(structure, CVector::from_vec(values))
}

fn pairs<'a>(values: impl IntoIterator<Item = &'a C64>) -> Vec<[f64; 2]> {
    values.into_iter().map(|c| [c.re, c.im]).collect()
}

pub fn operator_to_json(op: &OperatorMatrix) -> String {
    let m = op.matrix();
    let d = m.nrows();
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            entries.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    let doc = OperatorDoc {
        dims: op.structure().dims().to_vec(),
        entries,
        norm_meta: op.norm_meta().map(|m| NormMetaDoc {
            particles: m.particles,
            p: m.order,
        }),
    };
    serde_json::to_string_pretty(&doc).expect("operator documents serialize")
}

pub fn state_to_json(psi: &StateVector) -> String {
    let doc = StateDoc {
        dims: psi.structure().dims().to_vec(),
        entries: pairs(psi.amplitudes().iter()),
    };
    serde_json::to_string_pretty(&doc).expect("state documents serialize")
}

pub fn read_operator(path: impl AsRef<Path>) -> Result<OperatorMatrix> {
    parse_operator(&std::fs::read_to_string(path)?)
}

pub fn write_operator(path: impl AsRef<Path>, op: &OperatorMatrix) -> Result<()> {
    std::fs::write(path, operator_to_json(op) + "\n")?;
    Ok(())
}

/// Witness product vector as one list of `[re, im]` pairs per factor.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct WitnessRecord {
    pub left: Vec<Vec<[f64; 2]>>,
    pub right: Vec<Vec<[f64; 2]>>,
}

impl WitnessRecord {
    fn from_pair(left: &ProductVector, right: &ProductVector) -> Self {
        let conv = |p: &ProductVector| p.factors().iter().map(|f| pairs(f.iter())).collect();
        Self {
            left: conv(left),
            right: conv(right),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Witnesses {
    pub numerator: WitnessRecord,
    pub denominator: WitnessRecord,
}

/// Output record of a measure evaluation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureRecord {
    pub epsilon_bits: f64,
    pub norm_numerator: f64,
    pub norm_denominator: f64,
    pub numerator_converged: bool,
    pub denominator_converged: bool,
    pub numerator_iterations: usize,
    pub denominator_iterations: usize,
    pub witnesses: Witnesses,
}

impl From<&MeasureReport> for MeasureRecord {
    fn from(r: &MeasureReport) -> Self {
        Self {
            epsilon_bits: r.epsilon_bits,
            norm_numerator: r.numerator.value,
            norm_denominator: r.denominator.value,
            numerator_converged: r.numerator.converged,
            denominator_converged: r.denominator.converged,
            numerator_iterations: r.numerator.iterations,
            denominator_iterations: r.denominator.iterations,
            witnesses: Witnesses {
                numerator: WitnessRecord::from_pair(&r.numerator.witness_left, &r.numerator.witness_right),
                denominator: WitnessRecord::from_pair(
                    &r.denominator.witness_left,
                    &r.denominator.witness_right,
                ),
            },
        }
    }
}
