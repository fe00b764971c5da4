use std::fmt::Write as _;
use std::io::Write;

use super::{config_echo, point_record, run_sweep, DetectorSettings, SimConfig, SimResult, StoppingRule, CSV_COLUMNS};
use crate::channel::{ChannelMode, SnrConvention};
use crate::codebook::{Design, PhaseRule};
use crate::detector::{Engine, DEFAULT_MAX_ITER};
use crate::error::Result;

/// Default per-layer SNR grid of the power-variation comparison.
pub const POWER_VARIATION_GRID: [f64; 4] = [2.0, 4.0, 6.0, 8.0];
/// Default total SNR grid of the shaping comparison.
pub const SHAPING_GRID: [f64; 4] = [12.0, 16.0, 20.0, 24.0];

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub stopping: StoppingRule,
    pub max_iter: usize,
    pub workers: Option<usize>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            stopping: StoppingRule::default(),
            max_iter: DEFAULT_MAX_ITER,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub result: SimResult,
}

/// Paired SCMA and LDS curves. Series sharing a layer count and channel use
/// the same seed, so their random draws coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub experiment: String,
    pub series: Vec<Series>,
    /// Extra `#` lines for the CSV header.
    pub notes: Vec<String>,
}

impl Comparison {
    pub fn series(&self, name: &str) -> Option<&SimResult> {
        self.series.iter().find(|s| s.name == name).map(|s| &s.result)
    }
}

fn config(grid: &[f64], seed: u64, channel: ChannelMode, convention: SnrConvention, opts: &CompareOptions) -> SimConfig {
    SimConfig {
        channel,
        convention,
        snr_grid: grid.to_vec(),
        seed,
        stopping: opts.stopping,
        detector: DetectorSettings {
            engine: Engine::Mpa,
            max_iter: opts.max_iter,
            damping: 0.0,
        },
        workers: opts.workers,
        record_timing: false,
    }
}

/// 4-point SCMA against QPSK LDS over `K = 4`, `N = 2` for each layer count,
/// AWGN, per-layer SNR.
pub fn compare_power_variation(snr_grid: &[f64], layers: &[usize], seed: u64, opts: &CompareOptions) -> Result<Comparison> {
    let cfg = config(snr_grid, seed, ChannelMode::Awgn, SnrConvention::PerLayer, opts);
    let mut series = Vec::new();
    for &j in layers {
        for design in [Design::Scma4pt, Design::LdsQam(4)] {
            let system = design.build(4, 2, j, PhaseRule::Lds)?;
            series.push(Series {
                name: format!("{}_j{j}", design.name()),
                result: run_sweep(&system, &cfg)?,
            });
        }
    }
    Ok(Comparison {
        experiment: "power_variation".into(),
        series,
        notes: Vec::new(),
    })
}

/// T16QAM SCMA against 16QAM LDS with two disjoint layers, total SNR, under
/// uplink Rayleigh fading and AWGN.
pub fn compare_shaping(snr_grid: &[f64], seed: u64, opts: &CompareOptions) -> Result<Comparison> {
    let mut series = Vec::new();
    let mut notes = Vec::new();
    let designs = [Design::ScmaT16, Design::LdsQam(16)];
    for design in designs {
        let system = design.build(4, 2, 2, PhaseRule::Lds)?;
        let metrics = system.mother().metrics();
        notes.push(format!(
            "{}: dim_power_spread={} d_p_min={} bits_per_layer={}",
            design.name(),
            metrics.dim_power_spread,
            metrics.d_p_min,
            system.bits_per_symbol()
        ));
    }
    for channel in [ChannelMode::UplinkRayleigh, ChannelMode::Awgn] {
        let cfg = config(snr_grid, seed, channel, SnrConvention::Total, opts);
        for design in designs {
            let system = design.build(4, 2, 2, PhaseRule::Lds)?;
            series.push(Series {
                name: format!("{}_{channel}", design.name()),
                result: run_sweep(&system, &cfg)?,
            });
        }
    }
    Ok(Comparison {
        experiment: "shaping".into(),
        series,
        notes,
    })
}

/// Per-series configuration echo, then rows prefixed by the series name.
pub fn write_comparison_csv<W: Write>(cmp: &Comparison, mut out: W) -> Result<()> {
    let mut head = format!("# experiment: {}\n", cmp.experiment);
    for n in &cmp.notes {
        let _ = writeln!(head, "# {n}");
    }
    for s in &cmp.series {
        let _ = writeln!(head, "# series: {}", s.name);
        head.push_str(&config_echo(&s.result.spec, &s.result.config));
    }
    out.write_all(head.as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    let mut columns = vec!["series"];
    columns.extend(CSV_COLUMNS);
    w.write_record(&columns)?;
    for s in &cmp.series {
        for p in &s.result.points {
            let mut row = vec![s.name.clone()];
            row.extend(point_record(p));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
