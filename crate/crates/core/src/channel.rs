//! Rayleigh block-fading channels.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Converts an SNR in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Path loss and feedback budget of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    /// Path loss coefficient (power gain).
    pub gamma: f64,
    /// Feedback bits per channel realization.
    pub rate_bits: u32,
}

impl UserProfile {
    pub fn new(gamma: f64, rate_bits: u32) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "path loss must be finite and nonnegative, got {gamma}"
            )));
        }
        Ok(UserProfile { gamma, rate_bits })
    }
}

/// A broadcast system: `L` transmit antennas, `m` single-antenna users and a
/// total transmit SNR `rho` (linear, unit noise variance).
///
/// When fewer users than antennas are supplied, users with zero path loss are
/// appended so that the system always has at least `L` users. These padded
/// users never carry any throughput.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    antennas: usize,
    rho: f64,
    users: Vec<UserProfile>,
    padded: usize,
}

impl SystemConfig {
    pub fn new(antennas: usize, rho: f64, users: Vec<UserProfile>) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::InvalidInput("antenna count must be positive".into()));
        }
        if users.is_empty() {
            return Err(Error::InvalidInput("user count must be positive".into()));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "SNR must be finite and nonnegative, got {rho}"
            )));
        }
        for u in &users {
            UserProfile::new(u.gamma, u.rate_bits)?;
        }
        let mut users = users;
        let padded = antennas.saturating_sub(users.len());
        let fill_rate = users.last().map_or(0, |u| u.rate_bits);
        users.extend(std::iter::repeat_n(
            UserProfile {
                gamma: 0.0,
                rate_bits: fill_rate,
            },
            padded,
        ));
        Ok(SystemConfig {
            antennas,
            rho,
            users,
            padded,
        })
    }

    /// Same as [`SystemConfig::new`] with the SNR given in dB.
    pub fn with_snr_db(antennas: usize, snr_db: f64, users: Vec<UserProfile>) -> Result<Self> {
        Self::new(antennas, db_to_linear(snr_db), users)
    }

    /// `m` users that all share one profile.
    pub fn homogeneous(antennas: usize, users: usize, rho: f64, profile: UserProfile) -> Result<Self> {
        Self::new(antennas, rho, vec![profile; users])
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// User count including any zero-path-loss padding.
    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    /// Number of users appended by padding; they occupy the last indices.
    pub fn padded_users(&self) -> usize {
        self.padded
    }

    /// Number of users supplied by the caller.
    pub fn real_users(&self) -> usize {
        self.users.len() - self.padded
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn users(&self) -> &[UserProfile] {
        &self.users
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.gamma).collect()
    }

    /// Copy of this system at another SNR.
    pub fn at_rho(&self, rho: f64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "SNR must be finite and nonnegative, got {rho}"
            )));
        }
        Ok(SystemConfig { rho, ..self.clone() })
    }
}

/// One user's channel `h` together with its direction `h/‖h‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    h: Vec<Complex64>,
    norm: f64,
    direction: Option<Vec<Complex64>>,
}

impl ChannelVector {
    pub fn new(h: Vec<Complex64>) -> Self {
        let norm = linalg::norm(&h);
        let direction = (norm > 0.0).then(|| h.iter().map(|x| x / norm).collect());
        ChannelVector { h, norm, direction }
    }

    pub fn h(&self) -> &[Complex64] {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Unit direction, or `None` for the all-zero channel.
    pub fn direction(&self) -> Option<&[Complex64]> {
        self.direction.as_deref()
    }

    /// Squared magnitude per antenna, `‖h‖²/L`.
    pub fn gain_per_antenna(&self) -> f64 {
        self.norm * self.norm / self.h.len() as f64
    }
}

/// Draws one channel with i.i.d. CN(0, 1) entries.
pub fn draw_channel<R: Rng + ?Sized>(antennas: usize, rng: &mut R) -> ChannelVector {
    ChannelVector::new(linalg::complex_gaussian_vec(antennas, rng))
}

/// Draws a channel for every user of `config`, in user order.
pub fn draw_channels<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Vec<ChannelVector> {
    (0..config.user_count())
        .map(|_| draw_channel(config.antennas(), rng))
        .collect()
}

/// Extremes of `‖h_i‖²/L` over a set of users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationStats {
    pub max_gain: f64,
    pub min_gain: f64,
}

pub fn concentration_stats(channels: &[ChannelVector]) -> Result<ConcentrationStats> {
    if channels.is_empty() {
        return Err(Error::InvalidInput("no channels supplied".into()));
    }
    let (max_gain, min_gain) = channels
        .iter()
        .map(ChannelVector::gain_per_antenna)
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), g| (hi.max(g), lo.min(g)));
    Ok(ConcentrationStats { max_gain, min_gain })
}
