//! JSON problem and OPF case files.

mod case;
mod problem;

pub use case::{case_from_str, load_case, CaseFile};
pub use problem::{load_instance, problem_from_str, problem_to_string, Problem, ProblemFile};

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::FormatError;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json {
        path: path.to_owned(),
        source,
    })
}
