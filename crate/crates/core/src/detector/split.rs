use num_complex::Complex64;

use super::mpa::MessagePassing;
use super::tables::{EdgeAlphabet, ProjectionTables};
use super::{check_inputs, DetectionResult};
use crate::channel::ChannelRealization;
use crate::codebook::ScmaSystem;
use crate::error::{param, Result, ScmaError};

/// Largest deviation between a codeword entry and its real/imaginary
/// decomposition.
const SEPARABILITY_TOL: f64 = 1e-12;

/// Real and imaginary sub-problem tables. Symbol `m = p * M_v + q` has real
/// part indexed by `p` and imaginary part indexed by `q`.
fn sub_tables(system: &ScmaSystem, m_u: usize, m_v: usize) -> Result<(ProjectionTables, ProjectionTables)> {
    let mut re_tables = Vec::with_capacity(system.resources());
    let mut im_tables = Vec::with_capacity(system.resources());
    for k in 0..system.resources() {
        let mut re_edges = Vec::new();
        let mut im_edges = Vec::new();
        for j in system.graph().layers_at(k) {
            let cb = system.codebook(j);
            let re: Vec<f64> = (0..m_u).map(|p| cb.codeword(p * m_v)[k].re).collect();
            let im: Vec<f64> = (0..m_v).map(|q| cb.codeword(q)[k].im).collect();
            for (m, x) in cb.codewords().iter().enumerate() {
                if (x[k] - Complex64::new(re[m / m_v], im[m % m_v])).norm() > SEPARABILITY_TOL {
                    return Err(ScmaError::Mode(format!(
                        "layer {j} is not real/imaginary separable at resource {k}"
                    )));
                }
            }
            let real_axis = |v: Vec<f64>| {
                let n = v.len();
                EdgeAlphabet {
                    layer: j,
                    values: v.into_iter().map(|a| Complex64::new(a, 0.0)).collect(),
                    index: (0..n).collect(),
                }
            };
            re_edges.push(real_axis(re));
            im_edges.push(real_axis(im));
        }
        re_tables.push(re_edges);
        im_tables.push(im_edges);
    }
    let layers = system.num_layers();
    Ok((
        ProjectionTables::from_parts(re_tables, m_u, layers),
        ProjectionTables::from_parts(im_tables, m_v, layers),
    ))
}

/// Two independent message-passing runs over the real and imaginary parts,
/// each with noise variance `noise_var / 2` per real dimension. Marginals
/// are recombined as outer products.
pub fn split_detect(
    y: &[Complex64],
    system: &ScmaSystem,
    channel: &ChannelRealization,
    noise_var: f64,
    max_iter: usize,
) -> Result<DetectionResult> {
    check_inputs(y, system, channel, noise_var)?;
    if max_iter == 0 {
        return param("max_iter must be at least 1");
    }
    if !channel.is_real() {
        return Err(ScmaError::Mode("split detection needs real channel gains".into()));
    }
    let parts = system.split_parts().ok_or_else(|| {
        ScmaError::Mode("split detection needs a separable mother constellation and real phases".into())
    })?;
    let (m_u, m_v) = (parts.real.len(), parts.imag.len());
    let (re_tables, im_tables) = sub_tables(system, m_u, m_v)?;
    let gains: Vec<Vec<Complex64>> = channel
        .gains()
        .iter()
        .map(|g| g.iter().map(|h| Complex64::new(h.re, 0.0)).collect())
        .collect();
    let half = noise_var / 2.0;
    let inv = 1.0 / (2.0 * half);
    let y_re: Vec<Complex64> = y.iter().map(|v| Complex64::new(v.re, 0.0)).collect();
    let y_im: Vec<Complex64> = y.iter().map(|v| Complex64::new(v.im, 0.0)).collect();
    let mut re = MessagePassing::new(&re_tables, &y_re, &gains, inv)?;
    let mut im = MessagePassing::new(&im_tables, &y_im, &gains, inv)?;
    re.run(max_iter, 0.0);
    im.run(max_iter, 0.0);
    let marginals = re
        .marginals()
        .iter()
        .zip(im.marginals())
        .map(|(pu, pv)| pu.iter().flat_map(|a| pv.iter().map(move |b| a * b)).collect())
        .collect();
    Ok(DetectionResult::from_marginals(marginals, system, max_iter))
}
