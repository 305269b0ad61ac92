//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use onoff_core::asymptotic::{optimal_sbar, spatial_efficiency, EtaAtom, EtaDistribution};
use onoff_core::channel::{SystemConfig, UserProfile};
use onoff_core::quantization::distortion_rate_bounds;
use onoff_core::sim::mc;
use onoff_core::sim::verify::{brute_force_optimum, default_zf_setup, large_system_gaps};
use onoff_core::sim::{run_experiment, ExperimentSpec, ResultRow, Scheme};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

fn feedback_sweep(rate_bits: u32, expect_s: usize) -> Outcome {
    let start = Instant::now();
    let spec = ExperimentSpec {
        system: SystemConfig::with_snr_db(4, 0.0, vec![UserProfile { gamma: 1.0, rate_bits }; 4]).unwrap(),
        snr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        schemes: vec![Scheme::MainOrder, Scheme::FixedS(4)],
        trials: 10_000,
        codebook_redraws: 10,
        master_seed: 0,
    };
    let rows = run_experiment(&spec).unwrap();
    let at = |db: f64, scheme: &str| -> &ResultRow {
        rows.iter().find(|r| r.snr_db == db && r.scheme == scheme).unwrap()
    };
    let s15 = at(15.0, "main_order").s_used;
    let s20 = at(20.0, "main_order").s_used;
    let (main, fixed) = (at(20.0, "main_order"), at(20.0, "fixed_s(4)"));
    let se = (main.mc_stderr.powi(2) + fixed.mc_stderr.powi(2)).sqrt();
    let margin = main.mc_throughput_bits - fixed.mc_throughput_bits;
    let secs = start.elapsed().as_secs_f64();
    (
        s15 == expect_s && s20 == expect_s && margin > 2.0 * se && secs < 120.0,
        format!(
            "R={rate_bits}: s* at 15/20 dB = {s15}/{s20} (want {expect_s}); 20 dB main_order {:.4} vs fixed_s(4) {:.4}, margin {margin:.4} > 2·SE {:.4}; {secs:.1}s (< 120s)",
            main.mc_throughput_bits,
            fixed.mc_throughput_bits,
            2.0 * se
        ),
    )
}

fn average_powers() -> Outcome {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for s in 1..=4 {
        let setup = default_zf_setup(s, 100 + s as u64);
        let avg = mc::zf_averages(&setup).unwrap();
        for gr in [1.0, 10.0] {
            let m = avg.powers(&setup, gr);
            let t = avg.theory(&setup, gr);
            let es = rel(m.signal, t.signal);
            let ei = rel(m.interference, t.interference);
            let int_ok = if t.interference == 0.0 { m.interference <= 1e-12 } else { ei <= 0.02 };
            ok &= es <= 0.02 && int_ok;
            worst = worst.max(es).max(ei);
        }
    }
    (ok, format!("L=4, R=6, s=1..4, γρ∈{{1,10}}, 10^5 blocks: worst rel err {worst:.4} (≤ 0.02)"))
}

fn sandwich() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [4, 8, 12] {
        let b = distortion_rate_bounds(4, r).unwrap();
        let d = mc::fresh_codebook_distortion(4, r, 100_000, 7).unwrap();
        ok &= d >= 0.85 * b.lower && d <= 1.15 * b.upper;
        parts.push(format!("R={r} D={d:.5} in [{:.5}, {:.5}]", 0.85 * b.lower, 1.15 * b.upper));
    }
    let single = mc::fresh_codebook_distortion(4, 0, 100_000, 7).unwrap();
    ok &= (single - 0.75).abs() <= 0.01;
    parts.push(format!("single codeword D={single:.5} (0.75 ± 0.01)"));
    (ok, parts.join("; "))
}

fn large_system() -> Outcome {
    let gaps: Vec<(f64, f64)> = [50, 100, 200].iter().map(|&l| large_system_gaps(l, 0.5, 1.0, 10.0)).collect();
    let decreasing = gaps.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
    (
        decreasing && gaps[2].0 <= 0.05 && gaps[2].1 <= 0.05,
        format!("(sig, int) rel gaps at L=50/100/200: {gaps:.4?}; ≤ 0.05 at L=200 and decreasing"),
    )
}

fn two_atoms() -> EtaDistribution {
    EtaDistribution::new(vec![EtaAtom { eta: 3.0, mass: 0.5 }, EtaAtom { eta: 1.0, mass: 0.5 }]).unwrap()
}

fn analytics() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut outside_zero = true;
    for eta0 in [0.5, 1.0, 4.0] {
        let p = EtaDistribution::point_mass(eta0).unwrap();
        worst = worst.max((spatial_efficiency(&p, 1.0, 0.5) - 0.5 * (1.0 + eta0).log2()).abs());
        for s in [-1.0, -0.1, 0.0, 1.0, 1.1, 3.0] {
            outside_zero &= spatial_efficiency(&p, 1.0, s) == 0.0;
        }
    }
    let two = (spatial_efficiency(&two_atoms(), 2.0, 0.8) - 0.8 * 1.75f64.log2()).abs();
    (
        worst <= 1e-12 && two <= 1e-9 && outside_zero,
        format!("point-mass err {worst:.1e} (≤ 1e-12); two-atom err {two:.1e} (≤ 1e-9); zero outside (0,1): {outside_zero}"),
    )
}

fn optimum() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, dist, mbar) in [
        ("homogeneous η=1", EtaDistribution::point_mass(1.0).unwrap(), 1.0),
        ("two-atom", two_atoms(), 2.0),
    ] {
        let opt = optimal_sbar(&dist, mbar, 1e-4).unwrap();
        let (s_grid, _, runs) = brute_force_optimum(&dist, mbar, 1_000_000, 1e-12);
        let diff = (opt.sbar - s_grid).abs();
        ok &= diff <= 1e-4 && runs == 1;
        parts.push(format!("{name}: s̄* {:.6} vs grid {s_grid:.6} (Δ {diff:.1e} ≤ 1e-4), plateaus {runs}", opt.sbar));
    }
    (ok, parts.join("; "))
}

fn trends() -> Outcome {
    let p_small = mc::max_gain_exceedance(8, 16, 1.5, 200, 0);
    let p_large = mc::max_gain_exceedance(64, 128, 1.5, 200, 0);
    let b_small = mc::median_random_beams_statistic(8, 16, 200, 0);
    let b_large = mc::median_random_beams_statistic(64, 128, 200, 0);
    (
        p_large < p_small && b_large < b_small,
        format!(
            "200 seeds: Pr(max g ≥ 1.5) {p_small:.3} → {p_large:.3}; median max|h†b|/L {b_small:.4} → {b_large:.4} (L=8,m=16 → L=64,m=128)"
        ),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_onoff");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "L = 4\nm = 4\nrho_db = { start = 0, stop = 20, step = 10 }\ngamma = [1, 1, 1, 1]\nrate_bits = [6, 6, 6, 6]\n\
         schemes = [\"main_order\", \"fixed_s(2)\", \"oracle\", \"random_beams_stat\"]\ntrials = 500\ncodebook_redraws = 3\nseed = 42\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(bin)
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        (status.success(), std::fs::read(&out).unwrap_or_default())
    };
    let (ok_a, a) = run("a.csv");
    let (ok_b, b) = run("b.csv");
    let identical = ok_a && ok_b && !a.is_empty() && a == b;
    let verify = Command::new(bin).args(["verify", "--seed", "0"]).output().unwrap();
    let verify_ok = verify.status.success();
    if !verify_ok {
        eprintln!("{}", String::from_utf8_lossy(&verify.stdout));
    }
    (
        identical && verify_ok,
        format!("simulate twice byte-identical: {identical} ({} bytes); verify --seed 0 exit code {:?}", a.len(), verify.status.code()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 low-rate feedback sweep", || feedback_sweep(6, 1)),
        ("2 high-rate feedback sweep", || feedback_sweep(12, 3)),
        ("3 zero-forcing average powers", average_powers),
        ("4 distortion sandwich", sandwich),
        ("5 large-system convergence", large_system),
        ("6 spatial efficiency analytics", analytics),
        ("7 optimal s̄", optimum),
        ("8 concentration trends", trends),
        ("9 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let (ok, detail) = run();
        println!("{} criterion {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
