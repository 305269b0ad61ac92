//! Self-check suite: the statistical and analytic properties of every module,
//! measured at their stated sizes and judged against fixed tolerances.

use serde::Serialize;

use super::config::{ExperimentSpec, Scheme};
use super::experiment::run_experiment;
use super::mc::{self, ZfTrialSetup};
use crate::asymptotic::{build_eta_distribution, optimal_sbar, spatial_efficiency, EtaDistribution, EtaAtom, UserClass};
use crate::beamforming::zero_forcing_beams;
use crate::channel::{draw_channel, SystemConfig, UserProfile};
use crate::error::Result;
use crate::linalg;
use crate::quantization::{distortion_rate_bounds, empirical_distortion, estimate_distortion, Codebook};
use crate::rng::{stream, Domain};
use crate::selection::{choose_s_main, expected_powers, i_main};

/// Outcome of one check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured quantities and the bound they were held to.
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name: name.to_owned(), passed, detail }
}

fn rel_err(measured: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        measured.abs()
    } else {
        (measured - reference).abs() / reference.abs()
    }
}

/// Runs every check with streams derived from `seed`.
pub fn verify_suite(seed: u64) -> Result<VerifyReport> {
    let checks = vec![
        channel_moments(seed),
        concentration_trend(seed),
        random_beams_trend(seed),
        single_codeword_distortion(seed)?,
        orthonormal_basis_distortion(seed)?,
        distortion_sandwich(seed)?,
        distortion_monotone_in_rate(seed)?,
        bounds_grid(),
        zero_forcing_orthogonality(seed)?,
        cross_interference(seed)?,
        average_powers(seed)?,
        large_system_powers(),
        simulation_study_s_star(),
        spatial_efficiency_analytics(),
        spatial_efficiency_optimum()?,
        finite_to_asymptotic(),
        main_order_vs_simulation(seed)?,
    ];
    Ok(VerifyReport { seed, checks })
}

fn channel_moments(seed: u64) -> CheckResult {
    let n = 100_000u32;
    let mut rng = stream(seed, Domain::Verify, 1, 0);
    let (mut g_sum, mut re_sq, mut im_sq, mut first) = (0.0, 0.0, 0.0, num_complex::Complex64::new(0.0, 0.0));
    for _ in 0..n {
        let ch = draw_channel(4, &mut rng);
        g_sum += ch.gain_per_antenna();
        let x = ch.h()[0];
        first += x;
        re_sq += x.re * x.re;
        im_sq += x.im * x.im;
    }
    let nf = n as f64;
    let g = g_sum / nf;
    let mean = first / nf;
    let (vr, vi) = (re_sq / nf - mean.re * mean.re, im_sq / nf - mean.im * mean.im);
    let ok = (g - 1.0).abs() <= 0.01 && mean.norm() <= 3.0 / nf.sqrt() && rel_err(vr, 0.5) <= 0.02 && rel_err(vi, 0.5) <= 0.02;
    check(
        "channel.moments",
        ok,
        format!("mean ‖h‖²/L {g:.5} (±1%), |E h₁| {:.2e} (≤{:.2e}), var re {vr:.4} im {vi:.4} (0.5 ±2%)", mean.norm(), 3.0 / nf.sqrt()),
    )
}

fn concentration_trend(seed: u64) -> CheckResult {
    let probs: Vec<(usize, f64)> = [8, 16, 32, 64]
        .iter()
        .map(|&l| (l, mc::max_gain_exceedance(l, 2 * l, 1.5, 200, seed)))
        .collect();
    let monotone = probs.windows(2).all(|w| w[1].1 <= w[0].1);
    let strict = probs[3].1 < probs[0].1;
    check(
        "channel.concentration_trend",
        monotone && strict,
        format!("Pr(max ‖h‖²/L ≥ 1.5), m = 2L, 200 seeds: {probs:?}"),
    )
}

fn random_beams_trend(seed: u64) -> CheckResult {
    let small = mc::median_random_beams_statistic(8, 16, 500, seed);
    let large = mc::median_random_beams_statistic(64, 128, 500, seed);
    check(
        "selection.random_beams_trend",
        large < small,
        format!("median max|h†b|/L, m = 2L, 500 seeds: L=8 {small:.4}, L=64 {large:.4}"),
    )
}

fn single_codeword_distortion(seed: u64) -> Result<CheckResult> {
    let d = mc::fresh_codebook_distortion(4, 0, 100_000, seed)?;
    Ok(check("quantization.single_codeword", (d - 0.75).abs() <= 0.01, format!("D = {d:.5} (0.75 ± 0.01)")))
}

fn orthonormal_basis_distortion(seed: u64) -> Result<CheckResult> {
    let e = |k: usize| (0..2).map(|j| num_complex::Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect();
    let book = Codebook::from_entries(2, &[e(0), e(1)])?;
    let d = empirical_distortion(&book, 100_000, seed)?;
    Ok(check("quantization.orthonormal_basis", (d - 0.25).abs() <= 0.01, format!("D = {d:.5} (0.25 ± 0.01)")))
}

fn distortion_sandwich(seed: u64) -> Result<CheckResult> {
    let mut ok = true;
    let mut detail = Vec::new();
    for r in [4, 8, 12] {
        let b = distortion_rate_bounds(4, r)?;
        let d = mc::fresh_codebook_distortion(4, r, 100_000, seed)?;
        ok &= d >= 0.85 * b.lower && d <= 1.15 * b.upper;
        detail.push(format!("R={r}: {:.5} ≤ {d:.5} ≤ {:.5}", 0.85 * b.lower, 1.15 * b.upper));
    }
    Ok(check("quantization.sandwich", ok, detail.join("; ")))
}

fn distortion_monotone_in_rate(seed: u64) -> Result<CheckResult> {
    let mut means = Vec::new();
    for r in [2u32, 4, 6, 8] {
        let mut total = 0.0;
        for k in 0..20u64 {
            total += mc::fresh_codebook_distortion(4, r, 5_000, seed.wrapping_add(k * 7919))?;
        }
        means.push(total / 20.0);
    }
    let ok = means.windows(2).all(|w| w[1] <= w[0]);
    Ok(check("quantization.monotone_in_rate", ok, format!("mean D at R=2,4,6,8: {means:.4?}")))
}

fn bounds_grid() -> CheckResult {
    let mut ok = true;
    for l in 2..=8 {
        for r in 0..=12 {
            let b = distortion_rate_bounds(l, r).expect("L ≥ 2");
            let est = estimate_distortion(l, r);
            ok &= b.lower <= b.upper && b.lower <= est && est <= 1.0;
        }
    }
    check("quantization.bounds_grid", ok, "lower ≤ estimate ≤ 1 and lower ≤ upper for 2≤L≤8, 0≤R≤12".into())
}

fn zero_forcing_orthogonality(seed: u64) -> Result<CheckResult> {
    let mut rng = stream(seed, Domain::Verify, 2, 0);
    let mut worst_zf: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let instances = 10_000;
    for k in 0..instances {
        let l = [2, 4, 8][k % 3];
        let s = 1 + k % l;
        let dirs: Vec<Vec<_>> = (0..s).map(|_| linalg::isotropic_unit(l, &mut rng)).collect();
        let refs: Vec<&[_]> = dirs.iter().map(Vec::as_slice).collect();
        let on: Vec<usize> = (0..s).collect();
        let plan = zero_forcing_beams(&on, &refs, l)?;
        worst_zf = worst_zf.max(plan.zero_forcing_residual());
        for q in plan.beams() {
            worst_norm = worst_norm.max((linalg::norm(q) - 1.0).abs());
        }
    }
    Ok(check(
        "beamforming.orthogonality",
        worst_zf <= 1e-8 && worst_norm <= 1e-10,
        format!("{instances} plans: max |q_i†ĥ_j| {worst_zf:.2e} (≤1e-8), max |‖q‖−1| {worst_norm:.2e} (≤1e-10)"),
    ))
}

/// The randomized zero-forcing setup used by the interference and
/// average-power checks: 10^5 blocks over 100 codebook sets.
pub fn default_zf_setup(on_users: usize, seed: u64) -> ZfTrialSetup {
    ZfTrialSetup {
        antennas: 4,
        on_users,
        rate_bits: 6,
        codebook_sets: 100,
        blocks_per_set: 1_000,
        distortion_trials: 2_500,
        seed,
    }
}

fn cross_interference(seed: u64) -> Result<CheckResult> {
    let setup = default_zf_setup(2, seed);
    let avg = mc::zf_averages(&setup)?;
    let expect = avg.d_hat / 3.0;
    let err = rel_err(avg.cross_alignment, expect);
    Ok(check(
        "beamforming.cross_interference",
        err <= 0.02,
        format!("E|v_i†q_j|² {:.5} vs D̂/(L−1) {expect:.5}: rel err {err:.4} (≤0.02)", avg.cross_alignment),
    ))
}

fn average_powers(seed: u64) -> Result<CheckResult> {
    let mut ok = true;
    let mut detail = Vec::new();
    for s in 1..=4 {
        let setup = default_zf_setup(s, seed.wrapping_add(s as u64));
        let avg = mc::zf_averages(&setup)?;
        for gr in [1.0, 10.0] {
            let mc_p = avg.powers(&setup, gr);
            let th = avg.theory(&setup, gr);
            let (es, ei) = (rel_err(mc_p.signal, th.signal), rel_err(mc_p.interference, th.interference));
            let int_ok = if th.interference == 0.0 { mc_p.interference <= 1e-12 } else { ei <= 0.02 };
            ok &= es <= 0.02 && int_ok;
            detail.push(format!("s={s} γρ={gr}: sig err {es:.4}, int err {ei:.4}"));
        }
    }
    Ok(check("selection.average_powers", ok, detail.join("; ")))
}

/// Relative gaps of the closed-form powers from their large-system limits
/// for a homogeneous system with `s = round(s̄L)` and `R = round(r̄L)`.
pub fn large_system_gaps(antennas: usize, sbar: f64, rbar: f64, gamma_rho: f64) -> (f64, f64) {
    let s = (sbar * antennas as f64).round() as usize;
    let r = (rbar * antennas as f64).round() as u32;
    let p = expected_powers(antennas, s, 1.0, gamma_rho, estimate_distortion(antennas, r));
    let limit_sig = gamma_rho / sbar * (1.0 - (-rbar).exp2()) * (1.0 - sbar);
    let limit_int = gamma_rho * (-rbar).exp2();
    (rel_err(p.signal, limit_sig), rel_err(p.interference, limit_int))
}

fn large_system_powers() -> CheckResult {
    let gaps: Vec<(f64, f64)> = [50, 100, 200].iter().map(|&l| large_system_gaps(l, 0.5, 1.0, 10.0)).collect();
    let decreasing = gaps.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
    let ok = decreasing && gaps[2].0 <= 0.05 && gaps[2].1 <= 0.05;
    check("selection.large_system_powers", ok, format!("(sig, int) rel gaps at L=50,100,200: {gaps:.4?}"))
}

fn simulation_study_s_star() -> CheckResult {
    let mut ok = true;
    let mut detail = Vec::new();
    for (r, expect) in [(6u32, 1usize), (12, 3)] {
        for db in [15.0, 18.0, 20.0] {
            let cfg = SystemConfig::with_snr_db(4, db, vec![UserProfile { gamma: 1.0, rate_bits: r }; 4]).expect("valid");
            let s = choose_s_main(&cfg).s_star;
            ok &= s == expect;
            detail.push(format!("R={r} {db}dB → s*={s}"));
        }
    }
    check("selection.s_star_simulation_study", ok, detail.join(", "))
}

fn spatial_efficiency_analytics() -> CheckResult {
    let mut ok = true;
    for eta0 in [0.5, 1.0, 4.0] {
        let p = EtaDistribution::point_mass(eta0).expect("valid");
        ok &= (spatial_efficiency(&p, 1.0, 0.5) - 0.5 * (1.0 + eta0).log2()).abs() <= 1e-12;
        for sbar in [-0.5, 0.0, 1.0, 1.5] {
            ok &= spatial_efficiency(&p, 1.0, sbar) == 0.0;
        }
    }
    let two = two_atom_example();
    let v = spatial_efficiency(&two, 2.0, 0.8);
    ok &= (v - 0.8 * 1.75f64.log2()).abs() <= 1e-9;
    check("asymptotic.analytics", ok, format!("two-atom Ī(0.8) = {v:.9}"))
}

pub(crate) fn two_atom_example() -> EtaDistribution {
    EtaDistribution::new(vec![EtaAtom { eta: 3.0, mass: 0.5 }, EtaAtom { eta: 1.0, mass: 0.5 }]).expect("valid")
}

/// Brute-force maximizer of `Ī` on a uniform grid with `n` cells, and the
/// number of connected runs of grid points within `tol` of the maximum.
pub fn brute_force_optimum(dist: &EtaDistribution, mbar: f64, n: usize, tol: f64) -> (f64, f64, usize) {
    let values: Vec<f64> = (1..n).map(|k| spatial_efficiency(dist, mbar, k as f64 / n as f64)).collect();
    let (arg, best) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    let mut runs = 0;
    let mut inside = false;
    for &v in &values {
        let top = v >= best - tol;
        if top && !inside {
            runs += 1;
        }
        inside = top;
    }
    ((arg + 1) as f64 / n as f64, best, runs)
}

fn spatial_efficiency_optimum() -> Result<CheckResult> {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, dist, mbar) in [
        ("point mass η=1", EtaDistribution::point_mass(1.0)?, 1.0),
        ("two atoms", two_atom_example(), 2.0),
    ] {
        let opt = optimal_sbar(&dist, mbar, 1e-4)?;
        let (s_bf, v_bf, runs) = brute_force_optimum(&dist, mbar, 1_000_000, 1e-12);
        ok &= (opt.sbar - s_bf).abs() <= 1e-4 && (opt.value - v_bf).abs() <= 1e-6 && runs == 1 && opt.brackets_zero(1e-3);
        detail.push(format!("{name}: s̄* {:.6} vs grid {s_bf:.6}, Ī {:.8} vs {v_bf:.8}, plateaus {runs}", opt.sbar, opt.value));
    }
    Ok(check("asymptotic.optimum", ok, detail.join("; ")))
}

/// Relative gap between `(s/L)·I_main(s)` of a homogeneous system and its
/// spatial efficiency, at each `L`.
pub fn finite_to_asymptotic_gaps(antennas: &[usize], sbar: f64, rbar: f64, gamma_rho: f64) -> Vec<f64> {
    let dist = build_eta_distribution(&[UserClass { fraction: 1.0, gamma: 1.0, rbar }], gamma_rho).expect("valid class");
    let target = spatial_efficiency(&dist, 1.0, sbar);
    antennas
        .iter()
        .map(|&l| {
            let s = (sbar * l as f64).round() as usize;
            let r = (rbar * l as f64).round() as u32;
            let p = expected_powers(l, s, 1.0, gamma_rho, estimate_distortion(l, r));
            let per_antenna = s as f64 * i_main(p.signal, p.interference) / l as f64;
            rel_err(per_antenna, target)
        })
        .collect()
}

fn finite_to_asymptotic() -> CheckResult {
    let gaps = finite_to_asymptotic_gaps(&[50, 100, 200], 0.5, 2.0, 10.0);
    let ok = gaps.windows(2).all(|w| w[1] < w[0]) && gaps[2] <= 0.02;
    check("asymptotic.finite_convergence", ok, format!("rel gap at L=50,100,200: {gaps:.4?} (last ≤0.02)"))
}

fn main_order_vs_simulation(seed: u64) -> Result<CheckResult> {
    let spec = ExperimentSpec {
        system: SystemConfig::with_snr_db(4, 20.0, vec![UserProfile { gamma: 1.0, rate_bits: 6 }; 4])?,
        snr_grid_db: vec![20.0],
        schemes: vec![Scheme::MainOrder],
        trials: 1_000,
        codebook_redraws: 10,
        master_seed: seed,
    };
    let row = &run_experiment(&spec)?[0];
    let err = rel_err(row.mc_throughput_bits, row.theory_i_main_bits);
    Ok(check(
        "sim.main_order_vs_theory",
        err <= 0.15,
        format!("MC {:.4} vs theory {:.4}: rel err {err:.4} (≤0.15)", row.mc_throughput_bits, row.theory_i_main_bits),
    ))
}
