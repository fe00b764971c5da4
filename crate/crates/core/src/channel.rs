//! Channel realizations, noise, and the superposition
//! `y = sum_j diag(h_j) x_j + n`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::codebook::ScmaSystem;
use crate::error::{param, Result, ScmaError};

/// How per-layer channel gains are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// All gains 1.
    Awgn,
    /// One Rayleigh gain per resource, shared by every layer.
    Downlink,
    /// Independent Rayleigh gain per layer and resource.
    UplinkRayleigh,
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelMode::Awgn => "awgn",
            ChannelMode::Downlink => "downlink",
            ChannelMode::UplinkRayleigh => "uplink",
        })
    }
}

impl FromStr for ChannelMode {
    type Err = ScmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "awgn" => Ok(ChannelMode::Awgn),
            "downlink" => Ok(ChannelMode::Downlink),
            "uplink" | "uplink_rayleigh" => Ok(ChannelMode::UplinkRayleigh),
            other => param(format!("unknown channel mode {other:?}")),
        }
    }
}

/// Unit-variance circularly symmetric complex Gaussian sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Gains `h_j[k]` for every layer `j` and resource `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gains: Vec<Vec<Complex64>>,
    mode: ChannelMode,
}

impl ChannelRealization {
    /// Checks the mode invariants: unit gains for AWGN, identical layer
    /// gains for downlink.
    pub fn new(gains: Vec<Vec<Complex64>>, mode: ChannelMode) -> Result<Self> {
        let k = gains.first().map_or(0, Vec::len);
        if gains.is_empty() || k == 0 || gains.iter().any(|g| g.len() != k) {
            return param("channel gains must be a non-empty J x K array");
        }
        match mode {
            ChannelMode::Awgn if gains.iter().flatten().any(|&h| h != Complex64::new(1.0, 0.0)) => {
                param("AWGN channel gains must all be 1")
            }
            ChannelMode::Downlink if gains.iter().any(|g| g != &gains[0]) => {
                param("downlink gains must be identical across layers")
            }
            _ => Ok(Self { gains, mode }),
        }
    }

    /// AWGN realization for `layers x resources`.
    pub fn unit(layers: usize, resources: usize) -> Self {
        Self {
            gains: vec![vec![Complex64::new(1.0, 0.0); resources]; layers],
            mode: ChannelMode::Awgn,
        }
    }

    pub fn sample<R: Rng + ?Sized>(mode: ChannelMode, layers: usize, resources: usize, rng: &mut R) -> Self {
        let gains = match mode {
            ChannelMode::Awgn => return Self::unit(layers, resources),
            ChannelMode::Downlink => {
                let h: Vec<_> = (0..resources).map(|_| complex_gaussian(rng, 1.0)).collect();
                vec![h; layers]
            }
            ChannelMode::UplinkRayleigh => (0..layers)
                .map(|_| (0..resources).map(|_| complex_gaussian(rng, 1.0)).collect())
                .collect(),
        };
        Self { gains, mode }
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }

    pub fn gains(&self) -> &[Vec<Complex64>] {
        &self.gains
    }

    /// `h_j[k]`.
    pub fn gain(&self, layer: usize, resource: usize) -> Complex64 {
        self.gains[layer][resource]
    }

    pub fn num_layers(&self) -> usize {
        self.gains.len()
    }

    pub fn num_resources(&self) -> usize {
        self.gains[0].len()
    }

    /// True when every gain has a zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.gains.iter().flatten().all(|h| h.im == 0.0)
    }
}

/// Which signal power the SNR refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrConvention {
    /// One layer's energy, averaged over the `K` resources.
    PerLayer,
    /// All `J` layers' energy, averaged over the `K` resources.
    Total,
}

impl fmt::Display for SnrConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnrConvention::PerLayer => "per_layer",
            SnrConvention::Total => "total",
        })
    }
}

impl FromStr for SnrConvention {
    type Err = ScmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_layer" => Ok(SnrConvention::PerLayer),
            "total" => Ok(SnrConvention::Total),
            other => param(format!("unknown SNR convention {other:?}")),
        }
    }
}

/// Complex noise of total variance `variance` per resource.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    variance: f64,
    convention: SnrConvention,
}

impl NoiseModel {
    pub fn new(variance: f64, convention: SnrConvention) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return param(format!("noise variance must be positive, got {variance}"));
        }
        Ok(Self {
            variance,
            convention,
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn convention(&self) -> SnrConvention {
        self.convention
    }

    pub fn sample<R: Rng + ?Sized>(&self, resources: usize, rng: &mut R) -> Vec<Complex64> {
        (0..resources)
            .map(|_| complex_gaussian(rng, self.variance))
            .collect()
    }
}

/// Noise variance for a given SNR. Every layer carries unit average
/// codeword energy, so the average signal energy per resource is `1/K` per
/// layer and `J/K` in total.
pub fn snr_to_noise_variance(snr_db: f64, system: &ScmaSystem, convention: SnrConvention) -> NoiseModel {
    let per_resource = match convention {
        SnrConvention::PerLayer => 1.0,
        SnrConvention::Total => system.num_layers() as f64,
    } / system.resources() as f64;
    NoiseModel {
        variance: per_resource * 10f64.powf(-snr_db / 10.0),
        convention,
    }
}

/// `y = sum_j diag(h_j) x_j + n`.
pub fn superpose(
    codewords: &[&[Complex64]],
    channel: &ChannelRealization,
    noise: &[Complex64],
) -> Result<Vec<Complex64>> {
    let k = noise.len();
    if codewords.len() != channel.num_layers()
        || channel.num_resources() != k
        || codewords.iter().any(|x| x.len() != k)
    {
        return param(format!(
            "superposition of {} codewords over {} resources does not match a {}x{} channel",
            codewords.len(),
            k,
            channel.num_layers(),
            channel.num_resources()
        ));
    }
    let mut y = noise.to_vec();
    for (x, h) in codewords.iter().zip(&channel.gains) {
        for ((yk, xk), hk) in y.iter_mut().zip(x.iter()).zip(h) {
            *yk += hk * xk;
        }
    }
    Ok(y)
}
