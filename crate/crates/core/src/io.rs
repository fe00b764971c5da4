//! JSON system files.
//!
//! A file stores the factor graph, the mother constellation and the layer
//! operators, plus the expanded codebooks. Reading rebuilds the codebooks
//! and rejects files whose stored codebooks disagree.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codebook::{LayerOperator, ScmaSystem};
use crate::constellation::{MotherConstellation, RealConstellation, SeparableParts};
use crate::error::{param, Result};
use crate::factor_graph::FactorGraph;

/// Largest tolerated difference between stored and rebuilt codewords.
const CODEBOOK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RealPart {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Separable {
    real: RealPart,
    imag: RealPart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Mother {
    /// `[re, im]` per dimension per point.
    points: Vec<Vec<Complex64>>,
    labels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    separable: Option<Separable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Operator {
    phases: Vec<Complex64>,
    power_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SystemFile {
    design: String,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "J")]
    j: usize,
    #[serde(rename = "M")]
    m: usize,
    /// `K x J` 0/1 matrix.
    factor_graph: Vec<Vec<u8>>,
    mother_constellation: Mother,
    operators: Vec<Operator>,
    /// `J x M` codewords of length `K`.
    codebooks: Vec<Vec<Vec<Complex64>>>,
}

fn real_part(c: &RealConstellation) -> RealPart {
    RealPart {
        points: c.points().to_vec(),
        labels: c.labels().to_vec(),
    }
}

impl SystemFile {
    fn from_system(s: &ScmaSystem) -> Self {
        let mother = s.mother();
        Self {
            design: s.design().to_string(),
            k: s.resources(),
            n: s.graph().weight(),
            j: s.num_layers(),
            m: s.order(),
            factor_graph: s.graph().matrix(),
            mother_constellation: Mother {
                points: mother.points().to_vec(),
                labels: mother.labels().to_vec(),
                separable: mother.separable().map(|p| Separable {
                    real: real_part(&p.real),
                    imag: real_part(&p.imag),
                }),
            },
            operators: s
                .operators()
                .iter()
                .map(|op| Operator {
                    phases: op.phases().to_vec(),
                    power_scale: op.power_scale(),
                })
                .collect(),
            codebooks: s.codebooks().iter().map(|cb| cb.codewords().to_vec()).collect(),
        }
    }

    fn into_system(self) -> Result<ScmaSystem> {
        let graph = FactorGraph::from_matrix(&self.factor_graph)?;
        let separable = match self.mother_constellation.separable {
            Some(p) => Some(SeparableParts {
                real: RealConstellation::with_labels(p.real.points, p.real.labels)?,
                imag: RealConstellation::with_labels(p.imag.points, p.imag.labels)?,
            }),
            None => None,
        };
        let mother = MotherConstellation::from_normalized(
            self.mother_constellation.points,
            self.mother_constellation.labels,
            separable,
        )?;
        let operators = self
            .operators
            .into_iter()
            .map(|op| LayerOperator::new(op.phases, op.power_scale))
            .collect::<Result<Vec<_>>>()?;
        let system = ScmaSystem::assemble(self.design, graph, mother, operators)?;
        let shape = (system.resources(), system.graph().weight(), system.num_layers(), system.order());
        if shape != (self.k, self.n, self.j, self.m) {
            return param(format!(
                "declared K={} N={} J={} M={} but the contents give K={} N={} J={} M={}",
                self.k, self.n, self.j, self.m, shape.0, shape.1, shape.2, shape.3
            ));
        }
        let consistent = self.codebooks.len() == system.num_layers()
            && self.codebooks.iter().zip(system.codebooks()).all(|(stored, cb)| {
                stored.len() == cb.size()
                    && stored.iter().zip(cb.codewords()).all(|(a, b)| {
                        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= CODEBOOK_TOL)
                    })
            });
        if !consistent {
            return param("stored codebooks do not match the graph, constellation and operators");
        }
        Ok(system)
    }
}

pub fn system_to_json(system: &ScmaSystem) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SystemFile::from_system(system))?)
}

pub fn system_from_json(text: &str) -> Result<ScmaSystem> {
    serde_json::from_str::<SystemFile>(text)?.into_system()
}

pub fn write_system(system: &ScmaSystem, path: &Path) -> Result<()> {
    fs::write(path, system_to_json(system)? + "\n")?;
    Ok(())
}

pub fn read_system(path: &Path) -> Result<ScmaSystem> {
    system_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{Design, PhaseRule};

    #[test]
    fn round_trip_is_lossless() {
        for design in [Design::ScmaT16, Design::Scma4pt, Design::ScmaLowProj, Design::LdsQam(4), Design::LdsQam(16)] {
            for rule in [PhaseRule::Lds, PhaseRule::Unit] {
                let s = design.build(4, 2, 6, rule).unwrap();
                let back = system_from_json(&system_to_json(&s).unwrap()).unwrap();
                assert_eq!(back, s);
            }
        }
    }

    #[test]
    fn uses_documented_keys() {
        let s = Design::Scma4pt.build(4, 2, 6, PhaseRule::Lds).unwrap();
        let v: serde_json::Value = serde_json::from_str(&system_to_json(&s).unwrap()).unwrap();
        for key in ["K", "N", "J", "M", "factor_graph", "mother_constellation", "operators", "codebooks"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["factor_graph"][0].as_array().unwrap().len(), 6);
        assert_eq!(v["mother_constellation"]["points"][0][0].as_array().unwrap().len(), 2);
    }

    #[test]
    fn tampered_codebook_is_rejected() {
        let s = Design::Scma4pt.build(4, 2, 6, PhaseRule::Lds).unwrap();
        let mut f = SystemFile::from_system(&s);
        f.codebooks[2][1][0] += Complex64::new(1e-6, 0.0);
        let text = serde_json::to_string(&f).unwrap();
        assert!(system_from_json(&text).is_err());
        let mut g = SystemFile::from_system(&s);
        g.m = 8;
        assert!(system_from_json(&serde_json::to_string(&g).unwrap()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("system.json");
        let s = Design::ScmaT16.build(4, 2, 3, PhaseRule::Lds).unwrap();
        write_system(&s, &path).unwrap();
        assert_eq!(read_system(&path).unwrap(), s);
    }
}
