use std::path::Path;

use accelnet_core::opf::{Branch, Bus, Generator, OpfCase};
use serde::{Deserialize, Serialize};

use super::read_json;
use crate::FormatError;

fn default_eps_psi() -> f64 {
    1e-3
}

fn default_psi_max() -> f64 {
    std::f64::consts::PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub h: usize,
    pub ref_bus: usize,
    #[serde(default = "default_eps_psi")]
    pub eps_psi: f64,
    #[serde(default = "default_psi_max")]
    pub psi_max: f64,
    pub buses: Vec<BusEntry>,
    pub branches: Vec<BranchEntry>,
    #[serde(default)]
    pub generators: Vec<GeneratorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusEntry {
    pub id: usize,
    pub demand: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchEntry {
    pub from: usize,
    pub to: usize,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub bus: usize,
    pub a: f64,
    pub b: f64,
    pub pmax: f64,
}

impl CaseFile {
    pub fn into_case(self) -> Result<OpfCase, FormatError> {
        let case = OpfCase {
            horizon: self.h,
            reference_bus: self.ref_bus,
            angle_weight: self.eps_psi,
            angle_limit: self.psi_max,
            buses: self
                .buses
                .into_iter()
                .map(|b| Bus { id: b.id, demand: b.demand })
                .collect(),
            branches: self
                .branches
                .into_iter()
                .map(|b| Branch { from: b.from, to: b.to, susceptance: b.b })
                .collect(),
            generators: self
                .generators
                .into_iter()
                .map(|g| Generator { bus: g.bus, a: g.a, b: g.b, pmax: g.pmax })
                .collect(),
        };
        case.validate()?;
        Ok(case)
    }
}

pub fn case_from_str(text: &str) -> Result<OpfCase, FormatError> {
    let file: CaseFile = serde_json::from_str(text).map_err(|source| FormatError::Json {
        path: "<string>".into(),
        source,
    })?;
    file.into_case()
}

pub fn load_case(path: &Path) -> Result<OpfCase, FormatError> {
    read_json::<CaseFile>(path)?.into_case()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"{"h":1,"ref_bus":2,"eps_psi":0.001,"psi_max":3.141592653589793,
        "buses":[{"id":1,"demand":[0]},{"id":2,"demand":[1]}],
        "branches":[{"from":1,"to":2,"b":1}],
        "generators":[{"bus":1,"a":0.5,"b":0,"pmax":10}]}"#;

    #[test]
    fn parses_two_bus() {
        let case = case_from_str(TWO_BUS).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.generators[0].pmax, 10.0);
        assert_eq!(case.reference_bus, 2);
    }

    #[test]
    fn defaults_apply() {
        let text = TWO_BUS.replace(r#""eps_psi":0.001,"psi_max":3.141592653589793,"#, "");
        let case = case_from_str(&text).unwrap();
        assert_eq!(case.angle_weight, 1e-3);
        assert_eq!(case.angle_limit, std::f64::consts::PI);
    }

    #[test]
    fn missing_reference_bus() {
        let text = TWO_BUS.replace(r#""ref_bus":2"#, r#""ref_bus":5"#);
        assert!(matches!(case_from_str(&text), Err(FormatError::Model(_))));
    }
}
