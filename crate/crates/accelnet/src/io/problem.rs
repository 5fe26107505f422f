use std::collections::BTreeMap;
use std::path::Path;

use accelnet_core::model::{AgentSpec, ProblemInstance};
use accelnet_core::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::read_json;
use crate::FormatError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub agents: Vec<AgentEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub id: u64,
    pub dim: usize,
    #[serde(rename = "Q")]
    pub q: CostMatrix,
    pub c: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub m: usize,
    #[serde(default)]
    pub g: Vec<f64>,
    #[serde(default)]
    pub blocks: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostMatrix {
    Diagonal { diag: Vec<f64> },
    Dense(Vec<Vec<f64>>),
}

/// A loaded instance together with the file's agent ids (agent `i` has id
/// `ids[i]`; ids are sorted ascending).
#[derive(Debug, Clone)]
pub struct Problem {
    pub ids: Vec<u64>,
    pub instance: ProblemInstance,
}

fn schema(msg: String) -> FormatError {
    FormatError::Schema(msg)
}

fn check_len(id: u64, field: &str, got: usize, want: usize) -> Result<(), FormatError> {
    if got == want {
        Ok(())
    } else {
        Err(schema(format!("agent {id}: {field} has length {got}, expected {want}")))
    }
}

fn dense(id: u64, field: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>, FormatError> {
    check_len(id, field, rows.len(), nrows)?;
    for row in rows {
        check_len(id, field, row.len(), ncols)?;
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<Problem, FormatError> {
        let mut entries = self.agents;
        entries.sort_by_key(|a| a.id);
        let ids: Vec<u64> = entries.iter().map(|a| a.id).collect();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(schema(format!("duplicate agent id {}", w[0])));
        }
        let dims: BTreeMap<u64, (usize, usize)> = entries
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id, (i, a.dim)))
            .collect();

        let mut agents = Vec::with_capacity(entries.len());
        for a in entries {
            let n = a.dim;
            let cost = match &a.q {
                CostMatrix::Diagonal { diag } => {
                    check_len(a.id, "Q.diag", diag.len(), n)?;
                    DMatrix::from_diagonal(&DVector::from_column_slice(diag))
                }
                CostMatrix::Dense(rows) => dense(a.id, "Q", rows, n, n)?,
            };
            check_len(a.id, "c", a.c.len(), n)?;
            check_len(a.id, "lo", a.lo.len(), n)?;
            check_len(a.id, "hi", a.hi.len(), n)?;
            check_len(a.id, "g", a.g.len(), a.m)?;
            let mut blocks = Vec::with_capacity(a.blocks.len());
            for (key, rows) in &a.blocks {
                let j: u64 = key
                    .parse()
                    .map_err(|_| schema(format!("agent {}: block key {key:?} is not an id", a.id)))?;
                let &(idx, nj) = dims
                    .get(&j)
                    .ok_or_else(|| schema(format!("agent {}: block for unknown agent {j}", a.id)))?;
                blocks.push((idx, dense(a.id, &format!("blocks[{key}]"), rows, a.m, nj)?));
            }
            agents.push(
                AgentSpec::new(
                    cost,
                    DVector::from_vec(a.c),
                    DVector::from_vec(a.lo),
                    DVector::from_vec(a.hi),
                )
                .with_constraint(DVector::from_vec(a.g), blocks),
            );
        }
        Ok(Problem {
            ids,
            instance: ProblemInstance::new(agents)?,
        })
    }

    pub fn from_instance(instance: &ProblemInstance, ids: &[u64]) -> Self {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|r| m.row(r).iter().copied().collect())
                .collect()
        };
        let agents = instance
            .agents()
            .iter()
            .zip(ids)
            .map(|(a, &id)| {
                let q = if is_diag(&a.cost) {
                    CostMatrix::Diagonal {
                        diag: a.cost.diagonal().iter().copied().collect(),
                    }
                } else {
                    CostMatrix::Dense(rows(&a.cost))
                };
                AgentEntry {
                    id,
                    dim: a.dim(),
                    q,
                    c: a.linear.iter().copied().collect(),
                    lo: a.lo.iter().copied().collect(),
                    hi: a.hi.iter().copied().collect(),
                    m: a.rows(),
                    g: a.rhs.iter().copied().collect(),
                    blocks: a
                        .blocks
                        .iter()
                        .map(|(&j, b)| (ids[j].to_string(), rows(b)))
                        .collect(),
                }
            })
            .collect();
        Self { agents }
    }
}

fn is_diag(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|r| (0..m.ncols()).all(|c| r == c || m[(r, c)] == 0.0))
}

pub fn problem_from_str(text: &str) -> Result<Problem, FormatError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|source| FormatError::Json {
        path: "<string>".into(),
        source,
    })?;
    file.into_problem()
}

pub fn load_instance(path: &Path) -> Result<Problem, FormatError> {
    read_json::<ProblemFile>(path)?.into_problem()
}

pub fn problem_to_string(instance: &ProblemInstance, ids: &[u64]) -> String {
    let mut out = serde_json::to_string_pretty(&ProblemFile::from_instance(instance, ids))
        .expect("problem files always serialize");
    out.push('\n');
    out
}
