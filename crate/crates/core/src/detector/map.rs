use num_complex::Complex64;

use super::mpa::for_each_combination;
use super::{check_inputs, normalize, DetectionResult};
use crate::channel::ChannelRealization;
use crate::codebook::ScmaSystem;
use crate::error::{Result, ScmaError};

/// Largest number of joint hypotheses the oracle enumerates.
pub const MAP_HYPOTHESIS_LIMIT: u128 = 1 << 20;

pub(crate) fn check_capacity(system: &ScmaSystem) -> Result<()> {
    let hypotheses = (system.order() as u128)
        .checked_pow(system.num_layers() as u32)
        .unwrap_or(u128::MAX);
    if hypotheses > MAP_HYPOTHESIS_LIMIT {
        return Err(ScmaError::Capacity {
            hypotheses,
            limit: MAP_HYPOTHESIS_LIMIT,
        });
    }
    Ok(())
}

/// Exact per-layer posterior marginals by enumerating all `M^J` symbol
/// tuples under a uniform prior.
pub fn map_joint_oracle(
    y: &[Complex64],
    system: &ScmaSystem,
    channel: &ChannelRealization,
    noise_var: f64,
) -> Result<DetectionResult> {
    check_capacity(system)?;
    check_inputs(y, system, channel, noise_var)?;
    let (j_count, m, k_count) = (system.num_layers(), system.order(), system.resources());
    // received[j][m][k] = h_jk x_jk(m)
    let received: Vec<Vec<Vec<Complex64>>> = (0..j_count)
        .map(|j| {
            system
                .codebook(j)
                .codewords()
                .iter()
                .map(|x| (0..k_count).map(|k| channel.gain(j, k) * x[k]).collect())
                .collect()
        })
        .collect();
    let inv = 1.0 / noise_var;
    let mut exps = Vec::with_capacity(m.pow(j_count as u32));
    let mut s = vec![Complex64::new(0.0, 0.0); k_count];
    for_each_combination(std::iter::repeat_n(m, j_count), |c| {
        s.copy_from_slice(y);
        for (j, &mj) in c.iter().enumerate() {
            s.iter_mut().zip(&received[j][mj]).for_each(|(a, b)| *a -= b);
        }
        exps.push(-inv * s.iter().map(Complex64::norm_sqr).sum::<f64>());
    });
    let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut marginals = vec![vec![0.0; m]; j_count];
    let mut n = 0;
    for_each_combination(std::iter::repeat_n(m, j_count), |c| {
        let w = (exps[n] - top).exp();
        n += 1;
        for (p, &mj) in marginals.iter_mut().zip(c) {
            p[mj] += w;
        }
    });
    marginals.iter_mut().for_each(|p| normalize(p));
    Ok(DetectionResult::from_marginals(marginals, system, 0))
}
