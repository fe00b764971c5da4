use num_complex::Complex64;

use super::tables::ProjectionTables;
use super::{check_inputs, normalize, DetectionResult};
use crate::channel::ChannelRealization;
use crate::codebook::ScmaSystem;
use crate::error::{param, Result, ScmaError};

pub const DEFAULT_MAX_ITER: usize = 8;

/// Messages on every graph edge. Edges are numbered resource by resource in
/// the order of [`ProjectionTables`].
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    /// Resource to layer.
    pub r2l: Vec<Vec<f64>>,
    /// Layer to resource.
    pub l2r: Vec<Vec<f64>>,
    pub iteration: usize,
}

/// Sum-product message passing with a flooding schedule: every iteration
/// updates all resource nodes, then all layer nodes. Messages are
/// normalized after every update.
#[derive(Debug, Clone)]
pub struct MessagePassing<'t> {
    tables: &'t ProjectionTables,
    combinations: &'t [Vec<u16>],
    /// Per resource, the likelihood of every value combination in the order
    /// of `combinations`, scaled so the largest entry is 1.
    likelihood: Vec<Vec<f64>>,
    /// First edge id of each resource.
    offsets: Vec<usize>,
    /// Per resource, offsets of each edge's values in the scratch buffers.
    starts: Vec<Vec<usize>>,
    /// Edge ids of each layer.
    layer_edges: Vec<Vec<usize>>,
    state: BeliefState,
    incoming: Vec<f64>,
    outgoing: Vec<f64>,
    prefix: Vec<f64>,
}

/// Largest per-resource enumeration count message passing accepts.
pub const MPA_COMBINATION_LIMIT: u128 = 1 << 22;

impl<'t> MessagePassing<'t> {
    /// `gains[j][k]` multiplies layer `j` at resource `k`; `inv_noise` is the
    /// coefficient of the squared distance in the likelihood exponent.
    pub fn new(tables: &'t ProjectionTables, y: &[Complex64], gains: &[Vec<Complex64>], inv_noise: f64) -> Result<Self> {
        if y.len() != tables.num_resources() || gains.len() != tables.layers {
            return param("received vector or channel does not match the detector tables");
        }
        if !(inv_noise > 0.0 && inv_noise.is_finite()) {
            return param(format!("likelihood scale must be positive, got {inv_noise}"));
        }
        let hypotheses = tables.max_enumeration_count();
        if hypotheses > MPA_COMBINATION_LIMIT {
            return Err(ScmaError::Capacity {
                hypotheses,
                limit: MPA_COMBINATION_LIMIT,
            });
        }
        let combinations = tables.combinations();
        let mut offsets = Vec::with_capacity(tables.num_resources());
        let mut layer_edges = vec![Vec::new(); tables.layers];
        let mut edges = 0;
        let mut starts = Vec::with_capacity(tables.num_resources());
        let mut likelihood = Vec::with_capacity(tables.num_resources());
        for (k, alphabets) in tables.resources.iter().enumerate() {
            offsets.push(edges);
            for a in alphabets {
                layer_edges[a.layer].push(edges);
                edges += 1;
            }
            let mut st = vec![0];
            for a in alphabets {
                st.push(st.last().unwrap() + a.values.len());
            }
            starts.push(st);
            let scaled: Vec<Vec<Complex64>> = alphabets
                .iter()
                .map(|a| a.values.iter().map(|v| gains[a.layer][k] * v).collect())
                .collect();
            let d = alphabets.len().max(1);
            let mut exps: Vec<f64> = combinations[k]
                .chunks_exact(d)
                .map(|c| {
                    let s: Complex64 = c.iter().zip(&scaled).map(|(&i, v)| v[i as usize]).sum();
                    -inv_noise * (y[k] - s).norm_sqr()
                })
                .collect();
            let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            exps.iter_mut().for_each(|e| *e = (*e - top).exp());
            likelihood.push(exps);
        }
        let max_degree = tables.resources.iter().map(Vec::len).max().unwrap_or(0);
        let widest = starts.iter().map(|st| *st.last().unwrap()).max().unwrap_or(0);
        let uniform = vec![1.0 / tables.order as f64; tables.order];
        Ok(Self {
            tables,
            combinations,
            likelihood,
            offsets,
            starts,
            layer_edges,
            state: BeliefState {
                r2l: vec![uniform.clone(); edges],
                l2r: vec![uniform; edges],
                iteration: 0,
            },
            incoming: vec![0.0; widest],
            outgoing: vec![0.0; widest],
            prefix: vec![1.0; max_degree + 1],
        })
    }

    pub fn state(&self) -> &BeliefState {
        &self.state
    }

    /// One flooding iteration. `damping` is the weight of the previous
    /// resource-to-layer message.
    pub fn iterate(&mut self, damping: f64) {
        for k in 0..self.tables.num_resources() {
            self.update_resource(k, damping);
        }
        let BeliefState { r2l, l2r, .. } = &mut self.state;
        for edges in &self.layer_edges {
            for &e in edges {
                let msg = &mut l2r[e];
                msg.iter_mut().for_each(|x| *x = 1.0);
                for &other in edges.iter().filter(|&&o| o != e) {
                    msg.iter_mut().zip(&r2l[other]).for_each(|(a, b)| *a *= b);
                }
                normalize(msg);
            }
        }
        self.state.iteration += 1;
    }

    pub fn run(&mut self, iterations: usize, damping: f64) {
        for _ in 0..iterations {
            self.iterate(damping);
        }
    }

    fn update_resource(&mut self, k: usize, damping: f64) {
        let Self {
            tables,
            combinations,
            likelihood,
            offsets,
            starts,
            state,
            incoming,
            outgoing,
            prefix,
            ..
        } = self;
        let alphabets = &tables.resources[k];
        let d = alphabets.len();
        if d == 0 {
            return;
        }
        let (base, starts) = (offsets[k], &starts[k]);
        let width = starts[d];
        let (incoming, outgoing) = (&mut incoming[..width], &mut outgoing[..width]);
        incoming.iter_mut().for_each(|x| *x = 0.0);
        outgoing.iter_mut().for_each(|x| *x = 0.0);
        for (i, a) in alphabets.iter().enumerate() {
            for (m, &v) in a.index.iter().enumerate() {
                incoming[starts[i] + v] += state.l2r[base + i][m];
            }
        }
        for (c, &l) in combinations[k].chunks_exact(d).zip(&likelihood[k]) {
            if l == 0.0 {
                continue;
            }
            for i in 0..d {
                prefix[i + 1] = prefix[i] * incoming[starts[i] + c[i] as usize];
            }
            let mut suffix = l;
            for i in (0..d).rev() {
                let slot = starts[i] + c[i] as usize;
                outgoing[slot] += prefix[i] * suffix;
                suffix *= incoming[slot];
            }
        }
        for (i, a) in alphabets.iter().enumerate() {
            let msg = &mut state.r2l[base + i];
            let out = &outgoing[starts[i]..starts[i + 1]];
            if damping > 0.0 {
                let mut fresh: Vec<f64> = a.index.iter().map(|&v| out[v]).collect();
                normalize(&mut fresh);
                msg.iter_mut()
                    .zip(fresh)
                    .for_each(|(old, new)| *old = (1.0 - damping) * new + damping * *old);
            } else {
                msg.iter_mut().zip(&a.index).for_each(|(x, &v)| *x = out[v]);
            }
            normalize(msg);
        }
    }

    /// Product of all resource-to-layer messages into each layer.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        self.layer_edges
            .iter()
            .map(|edges| {
                let mut p = vec![1.0; self.tables.order];
                for &e in edges {
                    p.iter_mut().zip(&self.state.r2l[e]).for_each(|(a, b)| *a *= b);
                }
                normalize(&mut p);
                p
            })
            .collect()
    }
}

/// Calls `f` on every index tuple of the mixed radix `sizes`, last index
/// varying fastest.
pub(crate) fn for_each_combination(sizes: impl Iterator<Item = usize>, mut f: impl FnMut(&[usize])) {
    let sizes: Vec<usize> = sizes.collect();
    if sizes.contains(&0) {
        return;
    }
    let mut c = vec![0; sizes.len()];
    loop {
        f(&c);
        let mut i = sizes.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            c[i] += 1;
            if c[i] < sizes[i] {
                break;
            }
            c[i] = 0;
        }
    }
}

/// Flooding sum-product detection for `max_iter` iterations.
pub fn mpa_detect(
    y: &[Complex64],
    system: &ScmaSystem,
    channel: &ChannelRealization,
    noise_var: f64,
    max_iter: usize,
    damping: f64,
) -> Result<DetectionResult> {
    check_inputs(y, system, channel, noise_var)?;
    if max_iter == 0 {
        return param("max_iter must be at least 1");
    }
    if !(0.0..1.0).contains(&damping) {
        return param(format!("damping must lie in [0, 1), got {damping}"));
    }
    let tables = ProjectionTables::plain(system);
    let mut mp = MessagePassing::new(&tables, y, channel.gains(), 1.0 / noise_var)?;
    mp.run(max_iter, damping);
    Ok(DetectionResult::from_marginals(mp.marginals(), system, max_iter))
}
