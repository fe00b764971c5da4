//! Seeded Monte Carlo symbol and bit error rate simulation.
//!
//! Trials are grouped into fixed-size blocks. Block `b` of a point draws from
//! a ChaCha8 generator seeded with the point seed on stream `b`, so counts
//! do not depend on how blocks are scheduled across threads.

mod compare;
mod stats;

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{snr_to_noise_variance, superpose, ChannelMode, ChannelRealization, SnrConvention};
use crate::codebook::ScmaSystem;
use crate::detector::{Detector, Engine, DEFAULT_MAX_ITER};
use crate::error::{param, Result, ScmaError};
use crate::Complex64;

pub use compare::{
    compare_power_variation, compare_shaping, write_comparison_csv, CompareOptions, Comparison,
    Series, POWER_VARIATION_GRID, SHAPING_GRID,
};
pub use stats::{combined_half_width, wilson_half_width, wilson_interval, Z95};

/// Trials per block.
pub const BLOCK_TRIALS: u64 = 256;
/// Blocks evaluated concurrently before the stopping rule is checked.
const ROUND_BLOCKS: u64 = 16;

pub const CSV_COLUMNS: [&str; 9] = [
    "snr_db",
    "trials",
    "sym_errors",
    "bit_errors",
    "ser",
    "ber",
    "ser_ci95",
    "ber_ci95",
    "seconds",
];

/// Stop once symbol errors reach `min_errors`, checked after every block,
/// or when `max_trials` trials have run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoppingRule {
    pub min_errors: u64,
    pub max_trials: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_trials: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSettings {
    pub engine: Engine,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            engine: Engine::Mpa,
            max_iter: DEFAULT_MAX_ITER,
            damping: 0.0,
        }
    }
}

/// Shape and design name of the simulated system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSpec {
    pub design: String,
    pub k: usize,
    pub n: usize,
    pub j: usize,
    pub m: usize,
}

impl SystemSpec {
    pub fn of(system: &ScmaSystem) -> Self {
        Self {
            design: system.design().to_string(),
            k: system.resources(),
            n: system.graph().weight(),
            j: system.num_layers(),
            m: system.order(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub channel: ChannelMode,
    pub convention: SnrConvention,
    pub snr_grid: Vec<f64>,
    pub seed: u64,
    pub stopping: StoppingRule,
    pub detector: DetectorSettings,
    /// Thread count; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
    /// Record wall time per point. Off keeps the CSV reproducible.
    pub record_timing: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            channel: ChannelMode::Awgn,
            convention: SnrConvention::PerLayer,
            snr_grid: vec![0.0],
            seed: 0,
            stopping: StoppingRule::default(),
            detector: DetectorSettings::default(),
            workers: None,
            record_timing: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stopping.min_errors < 1 {
            return param("min_errors must be at least 1");
        }
        if self.stopping.max_trials < self.stopping.min_errors {
            return param("max_trials must be at least min_errors");
        }
        if self.snr_grid.is_empty() {
            return param("SNR grid is empty");
        }
        if self.snr_grid.iter().any(|s| !s.is_finite()) {
            return param("SNR grid contains a non-finite value");
        }
        if self.workers == Some(0) {
            return param("workers must be at least 1");
        }
        if self.detector.engine == Engine::Split && self.channel != ChannelMode::Awgn {
            return Err(ScmaError::Mode("split detection needs the real-valued AWGN channel".into()));
        }
        Ok(())
    }
}

/// Error counts at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub trials: u64,
    pub sym_errors: u64,
    pub bit_errors: u64,
    pub ser: f64,
    pub ber: f64,
    pub ser_ci95: f64,
    pub ber_ci95: f64,
    pub seconds: f64,
}

impl PointResult {
    fn new(snr_db: f64, counts: Counts, layers: usize, bits: usize, seconds: f64) -> Self {
        let symbols = counts.trials * layers as u64;
        let total_bits = symbols * bits as u64;
        Self {
            snr_db,
            trials: counts.trials,
            sym_errors: counts.sym_errors,
            bit_errors: counts.bit_errors,
            ser: ratio(counts.sym_errors, symbols),
            ber: ratio(counts.bit_errors, total_bits),
            ser_ci95: wilson_half_width(counts.sym_errors, symbols),
            ber_ci95: wilson_half_width(counts.bit_errors, total_bits),
            seconds,
        }
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub spec: SystemSpec,
    pub config: SimConfig,
    pub points: Vec<PointResult>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    trials: u64,
    sym_errors: u64,
    bit_errors: u64,
}

impl Counts {
    fn add(&mut self, o: Counts) {
        self.trials += o.trials;
        self.sym_errors += o.sym_errors;
        self.bit_errors += o.bit_errors;
    }
}

/// Runs `trials` trials on stream `block` of `seed`.
#[allow(clippy::too_many_arguments)]
fn run_block(
    system: &ScmaSystem,
    detector: &Detector<'_>,
    config: &SimConfig,
    noise_var: f64,
    label_to_symbol: &[Vec<usize>],
    seed: u64,
    block: u64,
    trials: u64,
) -> Result<Counts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let (layers, k, m) = (system.num_layers(), system.resources(), system.order());
    let mut counts = Counts::default();
    let mut labels = vec![0usize; layers];
    for _ in 0..trials {
        labels.iter_mut().for_each(|l| *l = rng.random_range(0..m));
        let xs: Vec<&[Complex64]> = labels
            .iter()
            .enumerate()
            .map(|(j, &l)| system.codebook(j).codeword(label_to_symbol[j][l]))
            .collect();
        let channel = ChannelRealization::sample(config.channel, layers, k, &mut rng);
        let noise: Vec<Complex64> = (0..k)
            .map(|_| crate::channel::complex_gaussian(&mut rng, noise_var))
            .collect();
        let y = superpose(&xs, &channel, &noise)?;
        let result = detector.detect(&y, &channel, noise_var)?;
        for (j, &l) in labels.iter().enumerate() {
            let detected = system.codebook(j).labels()[result.hard_symbols[j]];
            if detected != l {
                counts.sym_errors += 1;
                counts.bit_errors += u64::from((detected ^ l).count_ones());
            }
        }
        counts.trials += 1;
    }
    Ok(counts)
}

fn label_maps(system: &ScmaSystem) -> Vec<Vec<usize>> {
    system
        .codebooks()
        .iter()
        .map(|cb| {
            let mut inv = vec![0; cb.size()];
            for (m, &l) in cb.labels().iter().enumerate() {
                inv[l] = m;
            }
            inv
        })
        .collect()
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| ScmaError::Parameter(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn simulate_point(system: &ScmaSystem, config: &SimConfig, snr_db: f64, seed: u64) -> Result<PointResult> {
    let start = Instant::now();
    let settings = config.detector;
    let detector = Detector::new(system, settings.engine, settings.max_iter, settings.damping)?;
    let noise_var = snr_to_noise_variance(snr_db, system, config.convention).variance();
    let maps = label_maps(system);
    let StoppingRule { min_errors, max_trials } = config.stopping;
    let mut total = Counts::default();
    let mut next_block = 0u64;
    'rounds: while total.trials < max_trials {
        let blocks: Vec<(u64, u64)> = (next_block..next_block + ROUND_BLOCKS)
            .map(|b| (b, (max_trials.saturating_sub(b * BLOCK_TRIALS)).min(BLOCK_TRIALS)))
            .take_while(|&(_, n)| n > 0)
            .collect();
        next_block += ROUND_BLOCKS;
        let results: Vec<Result<Counts>> = blocks
            .par_iter()
            .map(|&(b, n)| run_block(system, &detector, config, noise_var, &maps, seed, b, n))
            .collect();
        for r in results {
            total.add(r?);
            if total.sym_errors >= min_errors {
                break 'rounds;
            }
        }
    }
    let seconds = if config.record_timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    Ok(PointResult::new(snr_db, total, system.num_layers(), system.bits_per_symbol(), seconds))
}

/// One SNR point seeded with `config.seed`.
pub fn run_point(system: &ScmaSystem, config: &SimConfig, snr_db: f64) -> Result<PointResult> {
    config.validate()?;
    with_pool(config.workers, || simulate_point(system, config, snr_db, config.seed))?
}

/// Every point of the grid; point `i` is seeded with `seed ^ i`.
pub fn run_sweep(system: &ScmaSystem, config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let points = with_pool(config.workers, || {
        config
            .snr_grid
            .iter()
            .enumerate()
            .map(|(i, &snr)| simulate_point(system, config, snr, config.seed ^ i as u64))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(SimResult {
        spec: SystemSpec::of(system),
        config: config.clone(),
        points,
    })
}

/// Parses `a:b:step` (inclusive of `b`) or a single value.
pub fn parse_snr_range(text: &str) -> Result<Vec<f64>> {
    let fields: Vec<f64> = text
        .split(':')
        .map(|f| f.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| ScmaError::Parameter(format!("bad SNR range {text:?}: {e}")))?;
    match fields[..] {
        [a] if a.is_finite() => Ok(vec![a]),
        [a, b, step] if a.is_finite() && b.is_finite() && step > 0.0 && b >= a => {
            let count = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|i| a + i as f64 * step).collect())
        }
        _ => param(format!("SNR range {text:?} is not `a:b:step` with b >= a and step > 0")),
    }
}

/// `#`-prefixed configuration echo. Worker count is omitted since it never
/// changes results.
pub fn config_echo(spec: &SystemSpec, config: &SimConfig) -> String {
    let grid: Vec<String> = config.snr_grid.iter().map(f64::to_string).collect();
    let d = config.detector;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# system: design={} K={} N={} J={} M={}",
        spec.design, spec.k, spec.n, spec.j, spec.m
    );
    let _ = writeln!(s, "# channel: {}", config.channel);
    let _ = writeln!(s, "# snr_convention: {}", config.convention);
    let _ = writeln!(s, "# snr_db: {}", grid.join(","));
    let _ = writeln!(s, "# seed: {}", config.seed);
    let _ = writeln!(
        s,
        "# stopping: min_errors={} max_trials={} block_trials={}",
        config.stopping.min_errors, config.stopping.max_trials, BLOCK_TRIALS
    );
    let _ = writeln!(
        s,
        "# detector: engine={} max_iter={} damping={}",
        d.engine, d.max_iter, d.damping
    );
    s
}

pub(crate) fn point_record(p: &PointResult) -> [String; 9] {
    [
        p.snr_db.to_string(),
        p.trials.to_string(),
        p.sym_errors.to_string(),
        p.bit_errors.to_string(),
        p.ser.to_string(),
        p.ber.to_string(),
        p.ser_ci95.to_string(),
        p.ber_ci95.to_string(),
        p.seconds.to_string(),
    ]
}

/// Writes the configuration echo followed by one CSV row per point.
pub fn write_csv<W: Write>(result: &SimResult, mut out: W) -> Result<()> {
    out.write_all(config_echo(&result.spec, &result.config).as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for p in &result.points {
        w.write_record(point_record(p))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{Design, PhaseRule};

    fn config(grid: Vec<f64>) -> SimConfig {
        SimConfig {
            snr_grid: grid,
            seed: 42,
            stopping: StoppingRule {
                min_errors: 50,
                max_trials: 2_000,
            },
            ..SimConfig::default()
        }
    }

    #[test]
    fn noiseless_map_has_no_errors() {
        let s = Design::Scma4pt.build(4, 2, 6, PhaseRule::Lds).unwrap();
        let mut c = config(vec![60.0]);
        c.detector.engine = Engine::MapOracle;
        c.stopping.max_trials = 1_000;
        let p = run_point(&s, &c, 60.0).unwrap();
        assert_eq!((p.trials, p.sym_errors, p.bit_errors), (1_000, 0, 0));
        assert_eq!(p.ser, 0.0);
    }

    #[test]
    fn sweep_is_deterministic_and_worker_independent() {
        let s = Design::Scma4pt.build(4, 2, 6, PhaseRule::Lds).unwrap();
        let mut c = config(vec![0.0, 4.0, 8.0]);
        let a = run_sweep(&s, &c).unwrap();
        c.workers = Some(1);
        let b = run_sweep(&s, &c).unwrap();
        c.workers = Some(3);
        let d = run_sweep(&s, &c).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.points, d.points);
        assert_eq!(a.points.len(), 3);
    }

    #[test]
    fn stops_on_errors_or_trials() {
        let s = Design::Scma4pt.build(4, 2, 6, PhaseRule::Lds).unwrap();
        let c = config(vec![0.0]);
        let p = run_point(&s, &c, 0.0).unwrap();
        assert!(p.sym_errors >= 50);
        assert_eq!(p.trials, BLOCK_TRIALS);
        let q = run_point(&s, &c, 30.0).unwrap();
        assert_eq!(q.trials, 2_000);
    }

    #[test]
    fn rates_are_bounded() {
        let s = Design::LdsQam(16).build(4, 2, 6, PhaseRule::Lds).unwrap();
        let mut c = config(vec![-10.0, 10.0]);
        c.channel = ChannelMode::UplinkRayleigh;
        c.detector.max_iter = 3;
        for p in run_sweep(&s, &c).unwrap().points {
            assert!((0.0..=1.0).contains(&p.ser) && (0.0..=1.0).contains(&p.ber));
            assert!(p.sym_errors <= p.trials * 6);
            assert!(p.bit_errors <= p.trials * 6 * 4);
        }
    }

    #[test]
    fn invalid_configs() {
        let s = Design::Scma4pt.build(4, 2, 6, PhaseRule::Lds).unwrap();
        assert!(run_sweep(&s, &config(vec![])).is_err());
        let mut c = config(vec![0.0]);
        c.stopping.min_errors = 0;
        assert!(run_sweep(&s, &c).is_err());
        let mut c = config(vec![0.0]);
        c.stopping.max_trials = 10;
        assert!(run_sweep(&s, &c).is_err());
        let mut c = config(vec![0.0]);
        c.detector.engine = Engine::Split;
        c.channel = ChannelMode::UplinkRayleigh;
        assert!(matches!(run_sweep(&s, &c), Err(ScmaError::Mode(_))));
        let t16 = Design::ScmaT16.build(4, 2, 6, PhaseRule::Lds).unwrap();
        let mut c = config(vec![0.0]);
        c.detector.engine = Engine::MapOracle;
        assert!(matches!(run_sweep(&t16, &c), Err(ScmaError::Capacity { .. })));
    }

    #[test]
    fn snr_ranges() {
        assert_eq!(parse_snr_range("0:10:2").unwrap(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(parse_snr_range("-3:0:1.5").unwrap(), vec![-3.0, -1.5, 0.0]);
        assert_eq!(parse_snr_range("0:0.3:0.1").unwrap().len(), 4);
        assert_eq!(parse_snr_range("7").unwrap(), vec![7.0]);
        for bad in ["", "1:0:1", "0:1:0", "0:1", "a:b:c"] {
            assert!(parse_snr_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn csv_layout() {
        let s = Design::Scma4pt.build(4, 2, 2, PhaseRule::Lds).unwrap();
        let r = run_sweep(&s, &config(vec![0.0, 2.0, 4.0])).unwrap();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], CSV_COLUMNS.join(","));
        assert_eq!(rows.len(), 4);
        assert!(text.contains("# seed: 42"));
        assert!(!text.contains("workers"));
    }
}
