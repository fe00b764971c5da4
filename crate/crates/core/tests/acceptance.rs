//! Acceptance suite: one pass/fail line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

use scma::channel::{
    complex_gaussian, snr_to_noise_variance, superpose, ChannelMode, ChannelRealization, SnrConvention,
};
use scma::codebook::{apply_operator, Design, LayerOperator, PhaseRule, ScmaSystem};
use scma::constellation::{
    distance_profile, golden_angle, optimize_rotation_product_distance, optimize_rotation_projections, rotate,
    square, t16qam, MotherConstellation, RealConstellation, Rotation, DEFAULT_GRID_STEP,
};
use scma::detector::{complexity_report, map_joint_oracle, mpa_detect, total_variation, Detector, Engine};
use scma::factor_graph::{build_full_graph, overlap};
use scma::simulator::{
    combined_half_width, run_sweep, wilson_half_width, DetectorSettings, SimConfig, StoppingRule,
};
use scma::Complex64;

const C1_MAX_K: usize = 8;
const C1_TIME: Duration = Duration::from_secs(1);
const C2_TOL: f64 = 1e-9;
const C2_CASES: u32 = 100;
const C3_TOL: f64 = 1e-6;
const C3_ORACLE_STEP: f64 = 1e-4;
const C3_TIME: Duration = Duration::from_secs(5);
const C4_ZERO: f64 = 1e-12;
const C4_MERGE: f64 = 1e-6;
const C5_SNR_DB: f64 = 8.0;
const C5_DRAWS: usize = 2000;
const C5_ITERS: usize = 8;
const C5_MAX_MEAN_TV: f64 = 0.05;
const C5_TIME: Duration = Duration::from_secs(60);
const C6_TOL: f64 = 1e-9;
const C6_CASES: usize = 100;
const C7_GRID_6: [f64; 3] = [4.0, 5.0, 6.0];
const C7_GRID_2: [f64; 3] = [0.0, 2.0, 4.0];
const C7_MIN_ERRORS: u64 = 200;
const C7_TIME: Duration = Duration::from_secs(600);
const C8_GRID: [f64; 3] = [12.0, 16.0, 20.0];
const C8_TIME: Duration = Duration::from_secs(600);
const C9_GRID: [f64; 3] = [-3.0, 0.0, 3.0];
const C9_MIN_ERRORS: u64 = 1000;
const MID_SER: (f64, f64) = (1e-3, 1e-1);
const HALF_WIDTHS: f64 = 3.0;
const MAX_TRIALS: u64 = 5_000_000;
const SEED: u64 = 20_140_901;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> Outcome {
    check(elapsed < limit, format!("{:.2}s of {}s", elapsed.as_secs_f64(), limit.as_secs()))
}

fn binomial_oracle(n: usize, k: usize) -> usize {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128) as usize
}

fn combinatorics() -> Outcome {
    let start = Instant::now();
    let g = build_full_graph(4, 2).map_err(|e| e.to_string())?;
    if g.num_layers() != 6 || g.degrees() != [3, 3, 3, 3] || g.overloading() != 1.5 {
        return Err(format!("(4,2): J={} degrees={:?} λ={}", g.num_layers(), g.degrees(), g.overloading()));
    }
    let mut graphs = 0;
    for k in 2..=C1_MAX_K {
        for n in 1..k {
            let g = build_full_graph(k, n).map_err(|e| e.to_string())?;
            let j = binomial_oracle(k, n);
            let d_f = binomial_oracle(k - 1, n - 1);
            if g.num_layers() != j || d_f * k != j * n || g.degrees().iter().any(|&d| d != d_f) {
                return Err(format!("K={k} N={n}: J={} degrees={:?}", g.num_layers(), g.degrees()));
            }
            let lo = (2 * n).saturating_sub(k);
            for (a, la) in g.layers().iter().enumerate() {
                for lb in &g.layers()[a + 1..] {
                    let l = overlap(la, lb).map_err(|e| e.to_string())?;
                    if l < lo || l > n - 1 {
                        return Err(format!("K={k} N={n}: overlap {l} outside [{lo}, {}]", n - 1));
                    }
                }
            }
            graphs += 1;
        }
    }
    let time = within(start.elapsed(), C1_TIME)?;
    Ok(format!("(4,2): J=6 d_f=3 λ=1.5; {graphs} graphs with K<=8 exhaustive; {time}"))
}

fn sorted_profile_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn isometry() -> Outcome {
    let bases: Vec<RealConstellation> = vec![
        square(),
        scma::constellation::base_lattice(2, 16).unwrap(),
        scma::constellation::base_lattice(2, 9).unwrap(),
    ];
    let mothers: Vec<MotherConstellation> = vec![
        t16qam(),
        scma::constellation::rotated_four_point(),
        scma::constellation::low_projection_16(),
        MotherConstellation::repetition_qam(16, 2).unwrap(),
    ];
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: C2_CASES,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let strategy = (0..bases.len(), 0..mothers.len(), -10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64);
    let worst = std::cell::Cell::new(0.0f64);
    let result = runner.run(&strategy, |(b, m, angle, p0, p1)| {
        let base = &bases[b];
        let rotated = rotate(base, &Rotation::planar(angle)).unwrap();
        let g1 = sorted_profile_gap(&distance_profile(base.points()), &distance_profile(rotated.points()));
        let mother = &mothers[m];
        let op = LayerOperator::new(vec![Complex64::from_polar(1.0, p0), Complex64::from_polar(1.0, p1)], 1.0).unwrap();
        let phased = apply_operator(mother, &op).unwrap();
        let g2 = sorted_profile_gap(&distance_profile(mother.points()), &distance_profile(phased.points()));
        worst.set(worst.get().max(g1).max(g2));
        prop_assert!(g1 <= C2_TOL && g2 <= C2_TOL, "profile moved by {} / {}", g1, g2);
        Ok(())
    });
    let detail = format!("{C2_CASES} cases, worst profile change {:.1e}", worst.get());
    result.map(|_| detail.clone()).map_err(|e| format!("{detail}: {e}"))
}

fn rotated_square_product_distance(angle: f64) -> f64 {
    let (c, s) = (angle.cos(), angle.sin());
    let pts: Vec<[f64; 2]> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .iter()
        .map(|&(x, y)| [c * x - s * y, s * x + c * y])
        .collect();
    let mut best = f64::INFINITY;
    for a in 0..4 {
        for b in a + 1..4 {
            best = best.min(((pts[a][0] - pts[b][0]) * (pts[a][1] - pts[b][1])).abs());
        }
    }
    best
}

fn rotation_optimum() -> Outcome {
    let start = Instant::now();
    let search = optimize_rotation_product_distance(&square(), DEFAULT_GRID_STEP).map_err(|e| e.to_string())?;
    let at_star = rotated_square_product_distance(golden_angle());
    let steps = (FRAC_PI_2 / C3_ORACLE_STEP) as usize;
    let grid_max = (0..=steps)
        .map(|i| rotated_square_product_distance(i as f64 * C3_ORACLE_STEP))
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let detail = format!(
        "search {:.9} at {:.6} rad, θ* value {:.9}, grid oracle max {:.9}",
        search.min_product_distance, search.angle, at_star, grid_max
    );
    let ok = (search.min_product_distance - at_star).abs() <= C3_TOL && grid_max <= at_star + C3_TOL;
    let time = within(elapsed, C3_TIME).map_err(|t| format!("{detail}; {t}"))?;
    check(ok, format!("{detail}; {time}"))
}

fn distinct(values: &[Complex64]) -> usize {
    let mut reps: Vec<Complex64> = Vec::new();
    for &v in values {
        if reps.iter().all(|r| (r - v).norm() > C4_MERGE) {
            reps.push(v);
        }
    }
    reps.len()
}

fn projection_variant() -> Outcome {
    let search = optimize_rotation_projections(&square(), 9, DEFAULT_GRID_STEP).map_err(|e| e.to_string())?;
    let mother = &search.mother;
    let counts: Vec<usize> = (0..mother.dims())
        .map(|n| distinct(&mother.points().iter().map(|p| p[n]).collect::<Vec<_>>()))
        .collect();
    let mut d_p = f64::INFINITY;
    for (i, a) in mother.points().iter().enumerate() {
        for b in &mother.points()[i + 1..] {
            d_p = d_p.min(a.iter().zip(b).map(|(x, y)| (x - y).norm()).product());
        }
    }
    let system = Design::ScmaLowProj.build(4, 2, 6, PhaseRule::Lds).map_err(|e| e.to_string())?;
    let report = complexity_report(&system);
    let counts_ok = report.resources.iter().all(|r| r.plain == 4096 && r.collapsed == 729);
    check(
        mother.size() == 16 && counts == [9, 9] && d_p <= C4_ZERO && counts_ok,
        format!(
            "M={} projections {:?} d_p_min {:.1e} at {:.6} rad; per-resource {} vs {}",
            mother.size(),
            counts,
            d_p,
            search.angle,
            report.max_collapsed(),
            report.max_plain()
        ),
    )
}

fn draw(system: &ScmaSystem, channel: &ChannelRealization, noise_var: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<Complex64>) {
    let symbols: Vec<usize> = (0..system.num_layers()).map(|_| rng.random_range(0..system.order())).collect();
    let xs: Vec<&[Complex64]> = symbols.iter().enumerate().map(|(j, &m)| system.codebook(j).codeword(m)).collect();
    let noise: Vec<Complex64> = (0..system.resources()).map(|_| complex_gaussian(rng, noise_var)).collect();
    (symbols, superpose(&xs, channel, &noise).expect("consistent dimensions"))
}

fn mpa_vs_map() -> Outcome {
    let start = Instant::now();
    let system = Design::Scma4pt.build(4, 2, 6, PhaseRule::Lds).map_err(|e| e.to_string())?;
    let noise_var = snr_to_noise_variance(C5_SNR_DB, &system, SnrConvention::PerLayer).variance();
    let channel = ChannelRealization::unit(6, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut tv, mut err_mpa, mut err_map) = (0.0, 0u64, 0u64);
    for _ in 0..C5_DRAWS {
        let (symbols, y) = draw(&system, &channel, noise_var, &mut rng);
        let a = mpa_detect(&y, &system, &channel, noise_var, C5_ITERS, 0.0).map_err(|e| e.to_string())?;
        let b = map_joint_oracle(&y, &system, &channel, noise_var).map_err(|e| e.to_string())?;
        tv += a.marginals.iter().zip(&b.marginals).map(|(p, q)| total_variation(p, q)).sum::<f64>() / 6.0;
        err_mpa += a.hard_symbols.iter().zip(&symbols).filter(|(x, y)| x != y).count() as u64;
        err_map += b.hard_symbols.iter().zip(&symbols).filter(|(x, y)| x != y).count() as u64;
    }
    let n = (C5_DRAWS * 6) as u64;
    let mean_tv = tv / C5_DRAWS as f64;
    let (ser_a, ser_b) = (err_mpa as f64 / n as f64, err_map as f64 / n as f64);
    let hw = combined_half_width(wilson_half_width(err_mpa, n), wilson_half_width(err_map, n));
    let elapsed = start.elapsed();
    let detail = format!(
        "{C5_DRAWS} draws, mean TV {mean_tv:.4}, SER mpa {ser_a:.4} map {ser_b:.4} (3 hw = {:.4}), {:.2}s",
        HALF_WIDTHS * hw,
        elapsed.as_secs_f64()
    );
    check(
        mean_tv <= C5_MAX_MEAN_TV && (ser_a - ser_b).abs() <= HALF_WIDTHS * hw && elapsed < C5_TIME,
        detail,
    )
}

fn max_tv(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(p, q)| total_variation(p, q)).fold(0.0, f64::max)
}

fn equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let lowproj = Design::ScmaLowProj.build(4, 2, 6, PhaseRule::Lds).map_err(|e| e.to_string())?;
    let plain = Detector::new(&lowproj, Engine::Mpa, 8, 0.0).map_err(|e| e.to_string())?;
    let collapsed = Detector::new(&lowproj, Engine::MpaCollapsed, 8, 0.0).map_err(|e| e.to_string())?;
    let mut worst_collapsed = 0.0f64;
    for _ in 0..C6_CASES {
        let channel = ChannelRealization::sample(ChannelMode::UplinkRayleigh, 6, 4, &mut rng);
        let noise_var = 10f64.powf(-rng.random_range(0.0..2.5));
        let (_, y) = draw(&lowproj, &channel, noise_var, &mut rng);
        let a = plain.detect(&y, &channel, noise_var).map_err(|e| e.to_string())?;
        let b = collapsed.detect(&y, &channel, noise_var).map_err(|e| e.to_string())?;
        worst_collapsed = worst_collapsed.max(max_tv(&a.marginals, &b.marginals));
    }
    let t16 = Design::ScmaT16.build(4, 2, 6, PhaseRule::Unit).map_err(|e| e.to_string())?;
    let joint = Detector::new(&t16, Engine::Mpa, 8, 0.0).map_err(|e| e.to_string())?;
    let split = Detector::new(&t16, Engine::Split, 8, 0.0).map_err(|e| e.to_string())?;
    let channel = ChannelRealization::unit(6, 4);
    let mut worst_split = 0.0f64;
    for _ in 0..C6_CASES {
        let noise_var = 10f64.powf(-rng.random_range(0.0..2.5));
        let (_, y) = draw(&t16, &channel, noise_var, &mut rng);
        let a = joint.detect(&y, &channel, noise_var).map_err(|e| e.to_string())?;
        let b = split.detect(&y, &channel, noise_var).map_err(|e| e.to_string())?;
        worst_split = worst_split.max(max_tv(&a.marginals, &b.marginals));
    }
    check(
        worst_collapsed <= C6_TOL && worst_split <= C6_TOL,
        format!("{C6_CASES} inputs each, max TV collapsed {worst_collapsed:.1e}, split {worst_split:.1e}"),
    )
}

fn sweep(design: Design, j: usize, channel: ChannelMode, convention: SnrConvention, grid: &[f64], min_errors: u64) -> Result<Vec<(f64, f64, f64)>, String> {
    let system = design.build(4, 2, j, PhaseRule::Lds).map_err(|e| e.to_string())?;
    let config = SimConfig {
        channel,
        convention,
        snr_grid: grid.to_vec(),
        seed: SEED,
        stopping: StoppingRule {
            min_errors,
            max_trials: MAX_TRIALS,
        },
        detector: DetectorSettings::default(),
        workers: None,
        record_timing: false,
    };
    let result = run_sweep(&system, &config).map_err(|e| e.to_string())?;
    Ok(result.points.iter().map(|p| (p.snr_db, p.ser, p.ser_ci95)).collect())
}

fn mid(ser: f64) -> bool {
    (MID_SER.0..=MID_SER.1).contains(&ser)
}

fn fmt_curve(c: &[(f64, f64, f64)]) -> String {
    c.iter().map(|(s, p, _)| format!("{s}:{p:.2e}")).collect::<Vec<_>>().join(" ")
}

fn power_variation() -> Outcome {
    let start = Instant::now();
    let awgn = ChannelMode::Awgn;
    let pl = SnrConvention::PerLayer;
    let scma6 = sweep(Design::Scma4pt, 6, awgn, pl, &C7_GRID_6, C7_MIN_ERRORS)?;
    let lds6 = sweep(Design::LdsQam(4), 6, awgn, pl, &C7_GRID_6, C7_MIN_ERRORS)?;
    let scma2 = sweep(Design::Scma4pt, 2, awgn, pl, &C7_GRID_2, C7_MIN_ERRORS)?;
    let lds2 = sweep(Design::LdsQam(4), 2, awgn, pl, &C7_GRID_2, C7_MIN_ERRORS)?;
    let six_ok = scma6.iter().zip(&lds6).all(|(a, b)| mid(a.1) && mid(b.1) && a.1 <= b.1);
    let two_ok = scma2
        .iter()
        .zip(&lds2)
        .all(|(a, b)| (a.1 - b.1).abs() <= HALF_WIDTHS * combined_half_width(a.2, b.2));
    let elapsed = start.elapsed();
    check(
        six_ok && two_ok && elapsed < C7_TIME,
        format!(
            "J=6 scma [{}] lds [{}]; J=2 scma [{}] lds [{}]; {:.1}s",
            fmt_curve(&scma6),
            fmt_curve(&lds6),
            fmt_curve(&scma2),
            fmt_curve(&lds2),
            elapsed.as_secs_f64()
        ),
    )
}

fn shaping() -> Outcome {
    let start = Instant::now();
    let up = ChannelMode::UplinkRayleigh;
    let total = SnrConvention::Total;
    let t16 = sweep(Design::ScmaT16, 2, up, total, &C8_GRID, C7_MIN_ERRORS)?;
    let lds = sweep(Design::LdsQam(16), 2, up, total, &C8_GRID, C7_MIN_ERRORS)?;
    let order_ok = t16.iter().zip(&lds).all(|(a, b)| mid(a.1) && mid(b.1) && a.1 <= b.1);
    let s_t16 = t16qam().metrics().dim_power_spread;
    let s_lds = MotherConstellation::repetition_qam(16, 2).unwrap().metrics().dim_power_spread;
    let elapsed = start.elapsed();
    check(
        order_ok && s_t16 > 1.0 && s_lds == 1.0 && elapsed < C8_TIME,
        format!(
            "uplink t16 [{}] lds16 [{}]; spread {s_t16:.3} vs {s_lds}; {:.1}s",
            fmt_curve(&t16),
            fmt_curve(&lds),
            elapsed.as_secs_f64()
        ),
    )
}

fn q(x: f64) -> f64 {
    0.5 * erfc(x / 2f64.sqrt())
}

fn single_user() -> Outcome {
    let curve = sweep(Design::LdsQam(4), 1, ChannelMode::Awgn, SnrConvention::PerLayer, &C9_GRID, C9_MIN_ERRORS)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for &(snr, ser, hw) in &curve {
        let sigma = (10f64.powf(-snr / 10.0) / 4.0).sqrt();
        let a = 1.0 / sigma;
        let analytic = 2.0 * q(a) - q(a) * q(a);
        ok &= (ser - analytic).abs() <= HALF_WIDTHS * hw;
        parts.push(format!("{snr}dB {ser:.4e} vs {analytic:.4e} (±{:.1e})", HALF_WIDTHS * hw));
    }
    check(ok, parts.join("; "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_scma");
    let system = dir.path().join("system.json");
    let status = Command::new(bin)
        .args(["design", "--k", "4", "--n", "2", "--j", "6", "--m", "4", "--scheme", "4pt", "--out"])
        .arg(&system)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err("design command failed".into());
    }
    let mut outputs = Vec::new();
    for workers in ["1", "1", "2", "4"] {
        let out = dir.path().join(format!("run{}.csv", outputs.len()));
        let status = Command::new(bin)
            .arg("simulate")
            .arg("--system")
            .arg(&system)
            .args(["--snr", "0:8:2", "--seed", "99", "--min-errors", "50", "--max-trials", "20000"])
            .args(["--workers", workers, "--out"])
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("simulate with {workers} workers failed"));
        }
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    check(
        outputs.windows(2).all(|w| w[0] == w[1]) && !outputs[0].is_empty(),
        format!("{} runs (workers 1,1,2,4), {} bytes each", outputs.len(), outputs[0].len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("combinatorics", combinatorics),
        ("isometry", isometry),
        ("rotation optimum", rotation_optimum),
        ("projection variant", projection_variant),
        ("mpa vs map", mpa_vs_map),
        ("equivalence suites", equivalence),
        ("power-variation ordering", power_variation),
        ("shaping ordering", shaping),
        ("single-user sanity", single_user),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (verdict, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {verdict}: {name}: {detail}", i + 1);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
