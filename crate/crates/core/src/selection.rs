//! Deciding how many users to switch on, and which.
//!
//! The scheme used for finite systems never looks at instantaneous channels:
//! it ranks users by their main-order rate (closed-form expected signal and
//! interference powers for random codebooks) and scans the number of
//! on-users `s = 1..=L`. The exhaustive direction-aware search and the
//! random-beams statistic are provided as references.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::beamforming::{zero_forcing_beams, TransmissionPlan};
use crate::channel::{ChannelVector, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::quantization::estimate_distortion;

/// Largest user count the exhaustive on-user search accepts.
pub const ORACLE_MAX_USERS: usize = 16;

/// Effective SINR surrogate `ργ(1−d)/(1+ργd)` for distortion `d`.
pub fn eta(rho: f64, gamma: f64, d: f64) -> f64 {
    let g = rho * gamma;
    g * (1.0 - d) / (1.0 + g * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaValue {
    pub user: usize,
    pub eta: f64,
}

/// Picks `s` users with the largest `eta`. Users tied at the boundary value
/// are chosen uniformly at random with `rng`. The result is sorted by user.
pub fn select_on_users_by_eta<R: Rng + ?Sized>(etas: &[EtaValue], s: usize, rng: &mut R) -> Result<Vec<usize>> {
    if s == 0 || s > etas.len() {
        return Err(Error::InvalidInput(format!(
            "cannot switch on {s} of {} users",
            etas.len()
        )));
    }
    let mut sorted = etas.to_vec();
    sorted.sort_by(|a, b| b.eta.total_cmp(&a.eta));
    let boundary = sorted[s - 1].eta;
    let mut chosen: Vec<usize> = sorted.iter().filter(|e| e.eta > boundary).map(|e| e.user).collect();
    let mut tied: Vec<usize> = sorted.iter().filter(|e| e.eta == boundary).map(|e| e.user).collect();
    tied.shuffle(rng);
    chosen.extend(tied.into_iter().take(s - chosen.len()));
    chosen.sort_unstable();
    Ok(chosen)
}

/// Expected signal and interference power of one on-user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedPowers {
    pub signal: f64,
    pub interference: f64,
}

/// Expected powers of an on-user with path loss `gamma` and average codebook
/// distortion `d` when `s` users chosen independently of the channel
/// directions share `L` antennas.
pub fn expected_powers(antennas: usize, s: usize, gamma: f64, rho: f64, d: f64) -> ExpectedPowers {
    let l = antennas as f64;
    let sf = s as f64;
    let others = s.saturating_sub(1) as f64;
    let scale = gamma * rho * l / sf;
    // With a single antenna only s = 1 is meaningful; the cross terms vanish.
    let spread = if antennas > 1 { others / (l - 1.0) } else { 0.0 };
    let interference = scale * spread * d;
    let signal = if s > antennas {
        0.0
    } else {
        scale * ((1.0 - d) * (1.0 - others / l) + d * spread / l)
    };
    ExpectedPowers { signal, interference }
}

/// Main-order rate `log2(1 + E[P_sig]/(1 + E[P_int]))`.
pub fn i_main(e_sig: f64, e_int: f64) -> f64 {
    (e_sig / (1.0 + e_int)).ln_1p() / std::f64::consts::LN_2
}

/// Outcome of the main-order on-user selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeReport {
    pub s_star: usize,
    pub on_users: Vec<usize>,
    /// Main-order rate of each on-user, aligned with `on_users`.
    pub i_main_per_user: Vec<f64>,
    pub i_main_total: f64,
}

/// Main-order rate of every user of `config` if `s` users were switched on.
pub fn main_order_rates(config: &SystemConfig, s: usize) -> Vec<f64> {
    let l = config.antennas();
    config
        .users()
        .iter()
        .map(|u| {
            let d = estimate_distortion(l, u.rate_bits);
            let p = expected_powers(l, s, u.gamma, config.rho(), d);
            i_main(p.signal, p.interference)
        })
        .collect()
}

/// The `s` users with the largest main-order rates, ties to the lowest index.
pub fn main_order_plan(config: &SystemConfig, s: usize) -> Result<SchemeReport> {
    if s == 0 || s > config.user_count() {
        return Err(Error::InvalidInput(format!(
            "cannot switch on {s} of {} users",
            config.user_count()
        )));
    }
    let rates = main_order_rates(config, s);
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.sort_by(|&a, &b| rates[b].total_cmp(&rates[a]).then(a.cmp(&b)));
    let mut on_users = order[..s].to_vec();
    on_users.sort_unstable();
    let i_main_per_user: Vec<f64> = on_users.iter().map(|&u| rates[u]).collect();
    Ok(SchemeReport {
        s_star: s,
        i_main_total: i_main_per_user.iter().sum(),
        on_users,
        i_main_per_user,
    })
}

/// Chooses the number of on-users maximizing the total main-order rate over
/// `s = 1..=min(L, m)`. Ties in `s` go to the smaller value.
pub fn choose_s_main(config: &SystemConfig) -> SchemeReport {
    let max_s = config.antennas().min(config.user_count());
    let mut best: Option<SchemeReport> = None;
    for s in 1..=max_s {
        let report = main_order_plan(config, s).expect("s is within 1..=m");
        if best.as_ref().is_none_or(|b| report.i_main_total > b.i_main_total) {
            best = Some(report);
        }
    }
    best.expect("at least one user and one antenna")
}

/// Sum rate the transmitter predicts from quantized directions alone.
///
/// `quantized` is indexed by user. Errors if the on-user set is degenerate.
pub fn estimated_sum_rate(quantized: &[Vec<Complex64>], gammas: &[f64], rho: f64, on_users: &[usize]) -> Result<f64> {
    let dim = quantized.first().map_or(0, Vec::len);
    let dirs: Vec<&[Complex64]> = on_users.iter().map(|&u| quantized[u].as_slice()).collect();
    let plan = zero_forcing_beams(on_users, &dirs, dim)?;
    Ok(estimated_sum_rate_for_plan(&plan, gammas, rho))
}

fn estimated_sum_rate_for_plan(plan: &TransmissionPlan, gammas: &[f64], rho: f64) -> f64 {
    let power = rho / plan.len() as f64;
    plan.on_users()
        .iter()
        .zip(plan.quantized())
        .enumerate()
        .map(|(i, (&u, p))| {
            let mut sig = 0.0;
            let mut int = 0.0;
            for (j, q) in plan.beams().iter().enumerate() {
                let a = linalg::inner(p, q).norm_sqr();
                if i == j {
                    sig = a;
                } else {
                    int += a;
                }
            }
            let g = gammas[u] * power;
            (g * sig / (1.0 + g * int)).ln_1p() / std::f64::consts::LN_2
        })
        .sum()
}

/// All `s`-subsets of `0..m` in lexicographic order.
pub(crate) fn subsets(m: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if s > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..s).rev().find(|&k| idx[k] != k + m - s) else {
            return out;
        };
        idx[pos] += 1;
        for k in pos + 1..s {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

/// Exhaustive direction-aware on-user selection.
///
/// Enumerates every `s`-subset of users, zero-forces on the quantized
/// directions (`quantized` is indexed by user) and keeps the subset with the
/// largest predicted sum rate. Degenerate subsets are skipped; rates within a
/// relative `1e-12` of each other count as tied and keep the lexicographically
/// first subset.
pub fn oracle_on_users(quantized: &[Vec<Complex64>], config: &SystemConfig, s: usize) -> Result<Vec<usize>> {
    let m = config.user_count();
    if m > ORACLE_MAX_USERS {
        return Err(Error::EnumerationCap { users: m, cap: ORACLE_MAX_USERS });
    }
    if quantized.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: quantized.len() });
    }
    if s == 0 || s > m {
        return Err(Error::InvalidInput(format!("cannot switch on {s} of {m} users")));
    }
    if s > config.antennas() {
        return Err(Error::Infeasible { on_users: s, antennas: config.antennas() });
    }
    let gammas = config.gammas();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for subset in subsets(m, s) {
        let Ok(rate) = estimated_sum_rate(quantized, &gammas, config.rho(), &subset) else {
            continue;
        };
        if best.as_ref().is_none_or(|(r, _)| rate > *r + 1e-12 * r.abs().max(1.0)) {
            best = Some((rate, subset));
        }
    }
    best.map(|(_, set)| set).ok_or(Error::AllDegenerate)
}

/// `L` orthonormal beams from orthogonalizing an isotropic random matrix.
pub fn random_orthonormal_beams<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    loop {
        let columns: Vec<Vec<Complex64>> = (0..dim).map(|_| linalg::complex_gaussian_vec(dim, rng)).collect();
        let basis = linalg::orthonormal_basis(columns.iter().map(Vec::as_slice), linalg::RANK_TOL);
        if basis.len() == dim {
            return basis;
        }
    }
}

/// `max_{i,k} |h_i† b_k| / L` for orthonormal beams `b_1..b_L`.
pub fn random_beams_statistic(channels: &[ChannelVector], beams: &[Vec<Complex64>]) -> Result<f64> {
    let dim = beams.len();
    if dim == 0 || beams.iter().any(|b| b.len() != dim) {
        return Err(Error::InvalidInput("need L beams of length L".into()));
    }
    if linalg::orthonormality_defect(beams) > 1e-9 {
        return Err(Error::InvalidInput("beams are not orthonormal".into()));
    }
    let mut best: f64 = 0.0;
    for ch in channels {
        if ch.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: ch.dim() });
        }
        for b in beams {
            best = best.max(linalg::inner(ch.h(), b).norm());
        }
    }
    Ok(best / dim as f64)
}

/// One round of a fairness cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleRound {
    /// 1-based round number within the cycle.
    pub round: usize,
    pub on_users: Vec<usize>,
}

/// One fairness-scheduling cycle.
///
/// Each round runs [`choose_s_main`] on the users not yet served in the
/// cycle, until every user supplied by the caller has been on once. Padding
/// users are never scheduled.
pub fn fairness_schedule(config: &SystemConfig) -> Vec<ScheduleRound> {
    let mut remaining: Vec<usize> = (0..config.real_users()).collect();
    let mut rounds = Vec::new();
    while !remaining.is_empty() {
        let profiles = remaining.iter().map(|&u| config.users()[u]).collect();
        let sub = SystemConfig::new(config.antennas(), config.rho(), profiles).expect("subset of a valid system");
        let report = choose_s_main(&sub);
        let mut served: Vec<usize> = report
            .on_users
            .iter()
            .filter(|&&k| k < remaining.len())
            .map(|&k| remaining[k])
            .collect();
        if served.is_empty() {
            served.push(remaining[0]);
        }
        remaining.retain(|u| !served.contains(u));
        rounds.push(ScheduleRound { round: rounds.len() + 1, on_users: served });
    }
    rounds
}
