use std::sync::OnceLock;

use num_complex::Complex64;

use super::mpa::for_each_combination;

use crate::codebook::ScmaSystem;
use crate::constellation::{cluster_values, PROJECTION_TOL};

/// The values layer `layer` can place on one resource.
///
/// Symbol `m` maps to `values[index[m]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAlphabet {
    pub layer: usize,
    pub values: Vec<Complex64>,
    pub index: Vec<usize>,
}

/// Per-resource alphabets of every colliding layer, in increasing layer
/// order. All edges share one symbol alphabet size.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionTables {
    pub(crate) resources: Vec<Vec<EdgeAlphabet>>,
    /// Per resource, every value-index tuple flattened, last edge fastest.
    /// Built on first use.
    combinations: OnceLock<Vec<Vec<u16>>>,
    pub(crate) order: usize,
    pub(crate) layers: usize,
}

impl ProjectionTables {
    pub(crate) fn from_parts(resources: Vec<Vec<EdgeAlphabet>>, order: usize, layers: usize) -> Self {
        Self {
            resources,
            combinations: OnceLock::new(),
            order,
            layers,
        }
    }

    pub(crate) fn combinations(&self) -> &[Vec<u16>] {
        self.combinations.get_or_init(|| {
            self.resources
                .iter()
                .map(|edges| {
                    let mut flat = Vec::new();
                    for_each_combination(edges.iter().map(|e| e.values.len()), |c| {
                        flat.extend(c.iter().map(|&i| i as u16))
                    });
                    flat
                })
                .collect()
        })
    }

    /// Largest per-resource enumeration count.
    pub fn max_enumeration_count(&self) -> u128 {
        (0..self.num_resources()).map(|k| self.enumeration_count(k)).max().unwrap_or(0)
    }

    /// One value per symbol: no merging.
    pub fn plain(system: &ScmaSystem) -> Self {
        Self::build(system, |values| (values.to_vec(), (0..values.len()).collect()))
    }

    fn build(system: &ScmaSystem, alphabet: impl Fn(&[Complex64]) -> (Vec<Complex64>, Vec<usize>)) -> Self {
        let resources = (0..system.resources())
            .map(|k| {
                system
                    .graph()
                    .layers_at(k)
                    .into_iter()
                    .map(|j| {
                        let column: Vec<Complex64> =
                            system.codebook(j).codewords().iter().map(|x| x[k]).collect();
                        let (values, index) = alphabet(&column);
                        EdgeAlphabet {
                            layer: j,
                            values,
                            index,
                        }
                    })
                    .collect()
            })
            .collect();
        Self::from_parts(resources, system.order(), system.num_layers())
    }

    pub fn resource(&self, k: usize) -> &[EdgeAlphabet] {
        &self.resources[k]
    }

    pub fn num_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Combinations enumerated by one update of resource `k`.
    pub fn enumeration_count(&self, k: usize) -> u128 {
        self.resources[k].iter().map(|e| e.values.len() as u128).product()
    }
}

/// Tables whose values are the distinct projections of each layer's
/// codewords, merged within [`PROJECTION_TOL`].
pub fn collapse_projections(system: &ScmaSystem) -> ProjectionTables {
    ProjectionTables::build(system, |values| cluster_values(values, PROJECTION_TOL))
}

/// Enumeration counts of one resource node update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceCounts {
    pub degree: usize,
    /// `M^d`.
    pub plain: u128,
    /// Product of the distinct projection counts.
    pub collapsed: u128,
    /// Real and imaginary sub-detector counts, when split detection applies.
    pub split: Option<(u128, u128)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityReport {
    pub resources: Vec<ResourceCounts>,
}

impl ComplexityReport {
    pub fn max_plain(&self) -> u128 {
        self.resources.iter().map(|r| r.plain).max().unwrap_or(0)
    }

    pub fn max_collapsed(&self) -> u128 {
        self.resources.iter().map(|r| r.collapsed).max().unwrap_or(0)
    }
}

pub fn complexity_report(system: &ScmaSystem) -> ComplexityReport {
    let collapsed = collapse_projections(system);
    let m = system.order() as u128;
    let split = system
        .split_parts()
        .map(|parts| (parts.real.len() as u128, parts.imag.len() as u128));
    let resources = (0..system.resources())
        .map(|k| {
            let d = collapsed.resource(k).len() as u32;
            ResourceCounts {
                degree: d as usize,
                plain: m.pow(d),
                collapsed: collapsed.enumeration_count(k),
                split: split.map(|(mu, mv)| (mu.pow(d), mv.pow(d))),
            }
        })
        .collect();
    ComplexityReport { resources }
}
