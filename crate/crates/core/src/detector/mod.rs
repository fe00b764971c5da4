//! Multiuser detection over the factor graph.
//!
//! All detectors share the Gaussian likelihood
//! `exp(-|y_k - sum_j h_jk x_jk|^2 / noise_var)` with `noise_var` the total
//! complex noise variance per resource.

mod map;
mod mpa;
mod split;
mod tables;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::codebook::ScmaSystem;
use crate::error::{param, Result, ScmaError};

pub use map::{map_joint_oracle, MAP_HYPOTHESIS_LIMIT};
pub use mpa::{mpa_detect, BeliefState, MessagePassing, DEFAULT_MAX_ITER};
pub use split::split_detect;
pub use tables::{
    collapse_projections, complexity_report, ComplexityReport, EdgeAlphabet, ProjectionTables,
    ResourceCounts,
};

/// Per-layer posterior marginals and the hard decisions derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub marginals: Vec<Vec<f64>>,
    /// Argmax of each marginal, ties to the lowest index.
    pub hard_symbols: Vec<usize>,
    /// Label bits of each hard symbol, most significant first.
    pub bits: Vec<Vec<u8>>,
    pub iterations_run: usize,
}

impl DetectionResult {
    pub(crate) fn from_marginals(marginals: Vec<Vec<f64>>, system: &ScmaSystem, iterations_run: usize) -> Self {
        let hard_symbols: Vec<usize> = marginals.iter().map(|p| argmax(p)).collect();
        let width = system.bits_per_symbol();
        let bits = hard_symbols
            .iter()
            .enumerate()
            .map(|(j, &m)| label_bits(system.codebook(j).labels()[m], width))
            .collect();
        Self {
            marginals,
            hard_symbols,
            bits,
            iterations_run,
        }
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// `width` bits of `label`, most significant first.
pub fn label_bits(label: usize, width: usize) -> Vec<u8> {
    (0..width).rev().map(|b| ((label >> b) & 1) as u8).collect()
}

/// Normalizes in place; a vector with zero or non-finite mass becomes uniform.
pub(crate) fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

/// Total-variation distance `0.5 * sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub(crate) fn check_inputs(
    y: &[Complex64],
    system: &ScmaSystem,
    channel: &ChannelRealization,
    noise_var: f64,
) -> Result<()> {
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return param(format!("noise variance must be positive, got {noise_var}"));
    }
    if y.len() != system.resources()
        || channel.num_resources() != system.resources()
        || channel.num_layers() != system.num_layers()
    {
        return param(format!(
            "received vector of length {} and {}x{} channel do not match a {}-layer system over {} resources",
            y.len(),
            channel.num_layers(),
            channel.num_resources(),
            system.num_layers(),
            system.resources()
        ));
    }
    Ok(())
}

/// Detection algorithm selectable by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Mpa,
    MpaCollapsed,
    Split,
    MapOracle,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Mpa => "mpa",
            Engine::MpaCollapsed => "mpa_collapsed",
            Engine::Split => "split",
            Engine::MapOracle => "map",
        })
    }
}

impl FromStr for Engine {
    type Err = ScmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mpa" => Ok(Engine::Mpa),
            "mpa_collapsed" => Ok(Engine::MpaCollapsed),
            "split" => Ok(Engine::Split),
            "map" | "map_oracle" => Ok(Engine::MapOracle),
            other => param(format!("unknown detector engine {other:?}")),
        }
    }
}

/// A detector bound to one system, with any per-system tables precomputed.
#[derive(Debug, Clone)]
pub struct Detector<'a> {
    system: &'a ScmaSystem,
    engine: Engine,
    max_iter: usize,
    damping: f64,
    tables: Option<ProjectionTables>,
}

impl<'a> Detector<'a> {
    pub fn new(system: &'a ScmaSystem, engine: Engine, max_iter: usize, damping: f64) -> Result<Self> {
        if max_iter == 0 {
            return param("max_iter must be at least 1");
        }
        if !(0.0..1.0).contains(&damping) {
            return param(format!("damping must lie in [0, 1), got {damping}"));
        }
        let tables = match engine {
            Engine::Mpa => Some(ProjectionTables::plain(system)),
            Engine::MpaCollapsed => Some(collapse_projections(system)),
            Engine::Split => {
                if system.split_parts().is_none() {
                    return Err(ScmaError::Mode(
                        "split detection needs a separable mother constellation and real phases".into(),
                    ));
                }
                None
            }
            Engine::MapOracle => {
                map::check_capacity(system)?;
                None
            }
        };
        Ok(Self {
            system,
            engine,
            max_iter,
            damping,
            tables,
        })
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn detect(&self, y: &[Complex64], channel: &ChannelRealization, noise_var: f64) -> Result<DetectionResult> {
        match (self.engine, &self.tables) {
            (Engine::Split, _) => split_detect(y, self.system, channel, noise_var, self.max_iter),
            (Engine::MapOracle, _) => map_joint_oracle(y, self.system, channel, noise_var),
            (_, Some(tables)) => {
                check_inputs(y, self.system, channel, noise_var)?;
                let mut mp = MessagePassing::new(tables, y, channel.gains(), 1.0 / noise_var)?;
                mp.run(self.max_iter, self.damping);
                Ok(DetectionResult::from_marginals(mp.marginals(), self.system, self.max_iter))
            }
            (_, None) => unreachable!("message passing engines always carry tables"),
        }
    }
}
