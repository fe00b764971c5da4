//! Per-layer codebooks built from a mother constellation.
//!
//! Layer `j` uses the mother constellation transformed by its operator
//! (a unit phase per nonzero dimension) and spread onto its resources by the
//! mapping matrix: `x_j = V_j (Delta_j g)(b_j)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constellation::{
    low_projection_16, rotated_four_point, rotational_symmetry, t16qam, MotherConstellation, RealConstellation,
    SeparableParts,
};
use crate::error::{param, Result};
use crate::factor_graph::{build_subgraph, mapping_matrix, FactorGraph, LayerSignature, MappingMatrix};

/// Per-layer transform of the mother constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOperator {
    phases: Vec<Complex64>,
    power_scale: f64,
}

impl LayerOperator {
    /// Every phase must have unit modulus to within `1e-12`.
    pub fn new(phases: Vec<Complex64>, power_scale: f64) -> Result<Self> {
        if phases.is_empty() {
            return param("layer operator needs at least one phase");
        }
        if phases.iter().any(|p| (p.norm() - 1.0).abs() > 1e-12) {
            return param("layer operator phases must have unit modulus");
        }
        if !(power_scale > 0.0 && power_scale.is_finite()) {
            return param(format!("power scale must be positive, got {power_scale}"));
        }
        Ok(Self {
            phases,
            power_scale,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            phases: vec![Complex64::new(1.0, 0.0); n],
            power_scale: 1.0,
        }
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn power_scale(&self) -> f64 {
        self.power_scale
    }

    /// True when every phase is exactly `+1` or `-1`.
    pub fn is_real(&self) -> bool {
        self.phases.iter().all(|p| p.im == 0.0 && p.re.abs() == 1.0)
    }
}

/// Applies `op` to every point: dimension `n` is multiplied by
/// `phases[n] * sqrt(power_scale)`.
///
/// Real phases keep a separable constellation separable.
pub fn apply_operator(mother: &MotherConstellation, op: &LayerOperator) -> Result<MotherConstellation> {
    if op.phases.len() != mother.dims() {
        return param(format!(
            "operator has {} phases for a {}-dimensional constellation",
            op.phases.len(),
            mother.dims()
        ));
    }
    let amp = op.power_scale.sqrt();
    let factors: Vec<Complex64> = op.phases.iter().map(|p| p * amp).collect();
    let points = mother
        .points()
        .iter()
        .map(|p| p.iter().zip(&factors).map(|(x, f)| x * f).collect())
        .collect();
    let separable = match mother.separable() {
        Some(parts) if op.is_real() => {
            let scale = |c: &RealConstellation| {
                RealConstellation::with_labels(
                    c.points()
                        .iter()
                        .map(|p| p.iter().zip(&factors).map(|(x, f)| x * f.re).collect())
                        .collect(),
                    c.labels().to_vec(),
                )
            };
            Some(SeparableParts {
                real: scale(&parts.real)?,
                imag: scale(&parts.imag)?,
            })
        }
        _ => None,
    };
    MotherConstellation::scaled_from(points, mother.labels().to_vec(), separable, op.power_scale)
}

/// Phase signatures for the layers of `graph`.
///
/// The `t`-th layer (in layer order, counting from 0) colliding at resource
/// `k` gets phase `exp(i pi t / d_max)` on the dimension it places at `k`,
/// where `d_max` is the largest resource degree. Colliding layers therefore
/// carry distinct phases spread over a half circle.
pub fn lds_phase_signatures(graph: &FactorGraph) -> Vec<LayerOperator> {
    lds_phase_signatures_with_symmetry(graph, 2)
}

/// Phase signatures spread over `2 pi / symmetry`, the smallest rotation
/// leaving the mother constellation invariant: the `t`-th colliding layer
/// gets `exp(2 i pi t / (symmetry d_max))`. Symmetry 2 gives
/// [`lds_phase_signatures`].
pub fn lds_phase_signatures_with_symmetry(graph: &FactorGraph, symmetry: usize) -> Vec<LayerOperator> {
    let d_max = graph.max_degree().max(1) as f64;
    let span = 2.0 * PI / symmetry.max(1) as f64;
    let mut phases = vec![vec![Complex64::new(1.0, 0.0); graph.weight()]; graph.num_layers()];
    for k in 0..graph.resources() {
        for (t, j) in graph.layers_at(k).into_iter().enumerate() {
            let n = graph.layer(j).local_dimension(k).expect("layer occupies resource");
            phases[j][n] = Complex64::from_polar(1.0, span * t as f64 / d_max);
        }
    }
    phases
        .into_iter()
        .map(|p| LayerOperator {
            phases: p,
            power_scale: 1.0,
        })
        .collect()
}

/// How layer operators are chosen when assembling a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseRule {
    /// [`lds_phase_signatures_with_symmetry`] with the rotational symmetry
    /// of the mother constellation.
    #[default]
    Lds,
    /// All phases 1; keeps separable constellations separable.
    Unit,
}

/// One layer's codewords: `M` sparse `K`-dimensional vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    codewords: Vec<Vec<Complex64>>,
    support: LayerSignature,
    labels: Vec<usize>,
}

impl Codebook {
    pub fn codewords(&self) -> &[Vec<Complex64>] {
        &self.codewords
    }

    pub fn codeword(&self, m: usize) -> &[Complex64] {
        &self.codewords[m]
    }

    pub fn support(&self) -> &LayerSignature {
        &self.support
    }

    /// Bit label of each codeword.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn size(&self) -> usize {
        self.codewords.len()
    }

    /// Average squared norm of the codewords.
    pub fn energy(&self) -> f64 {
        self.codewords.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() / self.size() as f64
    }
}

/// Codeword `m` is `V (op g)_m`. Labels are inherited from `mother`.
pub fn build_codebook(
    mother: &MotherConstellation,
    op: &LayerOperator,
    v: &MappingMatrix,
    layer_index: usize,
) -> Result<Codebook> {
    if v.cols() != mother.dims() {
        return param(format!(
            "mapping matrix has {} columns for a {}-dimensional constellation",
            v.cols(),
            mother.dims()
        ));
    }
    let transformed = apply_operator(mother, op)?;
    let codewords = transformed
        .points()
        .iter()
        .map(|p| v.apply(p))
        .collect::<Result<Vec<_>>>()?;
    let indicator = (0..v.rows())
        .map(|r| (0..v.cols()).any(|c| v.entry(r, c) == 1))
        .collect();
    Ok(Codebook {
        codewords,
        support: LayerSignature::new(indicator, layer_index)?,
        labels: mother.labels().to_vec(),
    })
}

/// A complete SCMA code: factor graph, mother constellation, operators and
/// the resulting codebooks.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmaSystem {
    design: String,
    graph: FactorGraph,
    mother: MotherConstellation,
    operators: Vec<LayerOperator>,
    codebooks: Vec<Codebook>,
}

impl ScmaSystem {
    /// Assembles codebooks for explicit operators.
    pub fn assemble(
        design: impl Into<String>,
        graph: FactorGraph,
        mother: MotherConstellation,
        operators: Vec<LayerOperator>,
    ) -> Result<Self> {
        if mother.dims() != graph.weight() {
            return param(format!(
                "mother constellation has {} dimensions but layers occupy {} resources",
                mother.dims(),
                graph.weight()
            ));
        }
        if operators.len() != graph.num_layers() {
            return param(format!(
                "{} operators for {} layers",
                operators.len(),
                graph.num_layers()
            ));
        }
        let codebooks = graph
            .layers()
            .iter()
            .zip(&operators)
            .enumerate()
            .map(|(j, (sig, op))| build_codebook(&mother, op, &mapping_matrix(sig), j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            design: design.into(),
            graph,
            mother,
            operators,
            codebooks,
        })
    }

    pub fn design(&self) -> &str {
        &self.design
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn mother(&self) -> &MotherConstellation {
        &self.mother
    }

    pub fn operators(&self) -> &[LayerOperator] {
        &self.operators
    }

    pub fn codebooks(&self) -> &[Codebook] {
        &self.codebooks
    }

    pub fn codebook(&self, j: usize) -> &Codebook {
        &self.codebooks[j]
    }

    pub fn resources(&self) -> usize {
        self.graph.resources()
    }

    pub fn num_layers(&self) -> usize {
        self.graph.num_layers()
    }

    /// Constellation size `M`.
    pub fn order(&self) -> usize {
        self.mother.size()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.mother.bits_per_symbol()
    }

    /// Separable parts usable by split detection: the mother must be
    /// separable and every operator phase real.
    pub fn split_parts(&self) -> Option<&SeparableParts> {
        self.operators
            .iter()
            .all(LayerOperator::is_real)
            .then(|| self.mother.separable())
            .flatten()
    }
}

/// System with `J` layers over `build_subgraph(K, N, J)`.
pub fn build_system(
    k: usize,
    n: usize,
    j: usize,
    mother: MotherConstellation,
    rule: PhaseRule,
) -> Result<ScmaSystem> {
    let graph = build_subgraph(k, n, j)?;
    let operators = match rule {
        PhaseRule::Lds => lds_phase_signatures_with_symmetry(&graph, rotational_symmetry(&mother)),
        PhaseRule::Unit => vec![LayerOperator::identity(n); j],
    };
    ScmaSystem::assemble(format!("scma-{}pt", mother.size()), graph, mother, operators)
}

/// Low-density-signature baseline: the same graph and phase signatures as
/// [`build_system`], with one square-QAM symbol repeated on every occupied
/// resource.
pub fn build_lds_system(k: usize, n: usize, j: usize, qam_order: usize) -> Result<ScmaSystem> {
    let mother = MotherConstellation::repetition_qam(qam_order, n)?;
    let mut system = build_system(k, n, j, mother, PhaseRule::Lds)?;
    system.design = format!("lds-{qam_order}qam");
    Ok(system)
}

/// Named constellation designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// 16-point shuffled golden-angle rotation of the square.
    ScmaT16,
    /// 4-point golden-angle rotation of the square on the real axis.
    Scma4pt,
    /// 16-point constellation with 9 projections per dimension.
    ScmaLowProj,
    /// Repeated square QAM of the given order.
    LdsQam(usize),
}

impl Design {
    /// Constellation size `M`.
    pub fn order(self) -> usize {
        match self {
            Design::ScmaT16 | Design::ScmaLowProj => 16,
            Design::Scma4pt => 4,
            Design::LdsQam(m) => m,
        }
    }

    pub fn name(self) -> String {
        match self {
            Design::ScmaT16 => "scma_t16".into(),
            Design::Scma4pt => "scma_4pt".into(),
            Design::ScmaLowProj => "scma_lowproj".into(),
            Design::LdsQam(m) => format!("lds_qam{m}"),
        }
    }

    /// Builds the design over `build_subgraph(K, N, J)`. The SCMA designs
    /// are two-dimensional.
    pub fn build(self, k: usize, n: usize, j: usize, rule: PhaseRule) -> Result<ScmaSystem> {
        let mother = match self {
            Design::LdsQam(m) => {
                let mut s = build_lds_system(k, n, j, m)?;
                if rule != PhaseRule::Lds {
                    s = ScmaSystem::assemble(
                        s.design.clone(),
                        s.graph.clone(),
                        s.mother.clone(),
                        vec![LayerOperator::identity(n); j],
                    )?;
                }
                s.design = self.name();
                return Ok(s);
            }
            _ if n != 2 => {
                return param(format!("{} is a 2-dimensional design, got N={n}", self.name()))
            }
            Design::ScmaT16 => t16qam(),
            Design::Scma4pt => rotated_four_point(),
            Design::ScmaLowProj => low_projection_16(),
        };
        let mut s = build_system(k, n, j, mother, rule)?;
        s.design = self.name();
        Ok(s)
    }
}
