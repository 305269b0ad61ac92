//! Monte Carlo measurements behind the verification suite.
//!
//! Each function returns raw measured values; thresholds live with the
//! callers.

use num_complex::Complex64;
use rand::seq::index::sample;
use rayon::prelude::*;

use crate::beamforming::zero_forcing_beams;
use crate::channel::{concentration_stats, draw_channel, draw_channels, SystemConfig, UserProfile};
use crate::error::Result;
use crate::linalg;
use crate::quantization::{empirical_distortion, quantize, random_codebook, Codebook};
use crate::rng::{stream, Domain};
use crate::selection::{expected_powers, random_beams_statistic, random_orthonormal_beams, ExpectedPowers};

/// Fraction of `seeds` independent systems of `m` users on `antennas`
/// antennas in which some user has `‖h‖²/L ≥ threshold`.
pub fn max_gain_exceedance(antennas: usize, users: usize, threshold: f64, seeds: u32, master: u64) -> f64 {
    let cfg = SystemConfig::homogeneous(antennas, users, 1.0, UserProfile { gamma: 1.0, rate_bits: 0 })
        .expect("positive sizes");
    let hits = (0..seeds)
        .into_par_iter()
        .filter(|&s| {
            let mut rng = stream(master, Domain::Verify, antennas as u32, s);
            concentration_stats(&draw_channels(&cfg, &mut rng)).expect("nonempty").max_gain >= threshold
        })
        .count();
    hits as f64 / seeds as f64
}

/// Median over `seeds` systems of `max_{i,k} |h_i† b_k| / L` with fresh
/// random orthonormal beams each time.
pub fn median_random_beams_statistic(antennas: usize, users: usize, seeds: u32, master: u64) -> f64 {
    let mut stats: Vec<f64> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(master, Domain::Beams, antennas as u32, s);
            let beams = random_orthonormal_beams(antennas, &mut rng);
            let channels: Vec<_> = (0..users).map(|_| draw_channel(antennas, &mut rng)).collect();
            random_beams_statistic(&channels, &beams).expect("orthonormal beams")
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let n = stats.len();
    if n % 2 == 1 {
        stats[n / 2]
    } else {
        0.5 * (stats[n / 2 - 1] + stats[n / 2])
    }
}

/// Empirical distortion of one fresh random codebook.
pub fn fresh_codebook_distortion(dim: usize, rate_bits: u32, trials: usize, seed: u64) -> Result<f64> {
    let book = random_codebook(dim, rate_bits, &mut stream(seed, Domain::Codebook, dim as u32, rate_bits))?;
    empirical_distortion(&book, trials, seed)
}

/// Zero-forcing Monte Carlo with on-users picked at random.
#[derive(Debug, Clone, Copy)]
pub struct ZfTrialSetup {
    pub antennas: usize,
    /// Number of on-users, `1..=antennas`; the system has `antennas` users.
    pub on_users: usize,
    pub rate_bits: u32,
    /// Independent codebook sets; each user gets a fresh codebook per set.
    pub codebook_sets: usize,
    pub blocks_per_set: usize,
    /// Trials of [`empirical_distortion`] per codebook.
    pub distortion_trials: usize,
    pub seed: u64,
}

/// Measured averages from [`zf_averages`].
#[derive(Debug, Clone, Copy)]
pub struct ZfAverages {
    /// Mean empirical distortion over all codebooks used.
    pub d_hat: f64,
    /// Mean `|h_i† q_i|²` over on-users and blocks.
    pub signal_gain: f64,
    /// Mean `Σ_{j≠i} |h_i† q_j|²`.
    pub interference_gain: f64,
    /// Mean `|v_i† q_j|²` over ordered on-user pairs `i ≠ j`.
    pub cross_alignment: f64,
    pub samples: u64,
}

impl ZfAverages {
    /// Measured powers at `γρ = gamma_rho`.
    pub fn powers(&self, setup: &ZfTrialSetup, gamma_rho: f64) -> ExpectedPowers {
        let p = gamma_rho / setup.on_users as f64;
        ExpectedPowers { signal: p * self.signal_gain, interference: p * self.interference_gain }
    }

    /// Closed-form powers at `γρ = gamma_rho` with the measured distortion.
    pub fn theory(&self, setup: &ZfTrialSetup, gamma_rho: f64) -> ExpectedPowers {
        expected_powers(setup.antennas, setup.on_users, 1.0, gamma_rho, self.d_hat)
    }
}

#[derive(Default)]
struct ZfSums {
    distortion: f64,
    books: u64,
    signal: f64,
    interference: f64,
    cross: f64,
    samples: u64,
    pairs: u64,
}

/// Averages signal and interference gains of zero-forcing on quantized
/// directions when the on-user set is drawn uniformly at random each block.
pub fn zf_averages(setup: &ZfTrialSetup) -> Result<ZfAverages> {
    let l = setup.antennas;
    let s = setup.on_users;
    let per_set = (0..setup.codebook_sets)
        .into_par_iter()
        .map(|set| -> Result<ZfSums> {
            let set = set as u32;
            let books: Vec<Codebook> = (0..l)
                .map(|u| random_codebook(l, setup.rate_bits, &mut stream(setup.seed, Domain::Codebook, set, u as u32)))
                .collect::<Result<_>>()?;
            let mut acc = ZfSums::default();
            for (u, b) in books.iter().enumerate() {
                let seed = setup.seed.wrapping_add(((set as u64) << 16 | u as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                acc.distortion += empirical_distortion(b, setup.distortion_trials, seed)?;
                acc.books += 1;
            }
            let mut rng = stream(setup.seed, Domain::Verify, set, 0);
            for _ in 0..setup.blocks_per_set {
                let mut on: Vec<usize> = sample(&mut rng, l, s).into_vec();
                on.sort_unstable();
                let channels: Vec<_> = on.iter().map(|_| draw_channel(l, &mut rng)).collect();
                let quantized: Vec<Vec<Complex64>> = on
                    .iter()
                    .zip(&channels)
                    .map(|(&u, ch)| quantize(ch.direction().expect("nonzero channel"), &books[u]).map(|q| q.codeword))
                    .collect::<Result<_>>()?;
                let dirs: Vec<&[Complex64]> = quantized.iter().map(Vec::as_slice).collect();
                let plan = zero_forcing_beams(&on, &dirs, l)?;
                for (i, ch) in channels.iter().enumerate() {
                    let v = ch.direction().expect("nonzero channel");
                    for (j, q) in plan.beams().iter().enumerate() {
                        let a = linalg::inner(ch.h(), q).norm_sqr();
                        if i == j {
                            acc.signal += a;
                        } else {
                            acc.interference += a;
                            acc.cross += linalg::inner(v, q).norm_sqr();
                            acc.pairs += 1;
                        }
                    }
                    acc.samples += 1;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut t = ZfSums::default();
    for p in &per_set {
        t.distortion += p.distortion;
        t.books += p.books;
        t.signal += p.signal;
        t.interference += p.interference;
        t.cross += p.cross;
        t.samples += p.samples;
        t.pairs += p.pairs;
    }
    let n = t.samples as f64;
    Ok(ZfAverages {
        d_hat: t.distortion / t.books as f64,
        signal_gain: t.signal / n,
        interference_gain: t.interference / n,
        cross_alignment: if t.pairs > 0 { t.cross / t.pairs as f64 } else { 0.0 },
        samples: t.samples,
    })
}
