//! Zero-forcing beamforming on quantized directions.
//!
//! Each on-user's beam is its quantized direction projected onto the
//! orthogonal complement of the other on-users' quantized directions, then
//! normalized. Signal and interference are evaluated against the true
//! channels, which the transmitter never sees.

use num_complex::Complex64;

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};

/// On-user set together with its zero-forcing beams.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionPlan {
    on_users: Vec<usize>,
    beams: Vec<Vec<Complex64>>,
    quantized: Vec<Vec<Complex64>>,
    per_user_power: f64,
}

impl TransmissionPlan {
    /// A plan with nobody switched on.
    pub fn empty() -> Self {
        TransmissionPlan {
            on_users: Vec::new(),
            beams: Vec::new(),
            quantized: Vec::new(),
            per_user_power: 0.0,
        }
    }

    /// Splits the total power `rho` evenly across the on-users.
    pub fn with_total_power(mut self, rho: f64) -> Self {
        self.per_user_power = if self.on_users.is_empty() {
            0.0
        } else {
            rho / self.on_users.len() as f64
        };
        self
    }

    pub fn on_users(&self) -> &[usize] {
        &self.on_users
    }

    pub fn len(&self) -> usize {
        self.on_users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.on_users.is_empty()
    }

    pub fn beams(&self) -> &[Vec<Complex64>] {
        &self.beams
    }

    /// Quantized directions the beams were computed from, aligned with
    /// [`TransmissionPlan::on_users`].
    pub fn quantized(&self) -> &[Vec<Complex64>] {
        &self.quantized
    }

    pub fn per_user_power(&self) -> f64 {
        self.per_user_power
    }

    fn slot(&self, user: usize) -> Option<usize> {
        self.on_users.iter().position(|&u| u == user)
    }

    pub fn beam_for(&self, user: usize) -> Option<&[Complex64]> {
        self.slot(user).map(|k| self.beams[k].as_slice())
    }

    /// Largest `|q_i† ĥ_j|` over on-users `i ≠ j`.
    pub fn zero_forcing_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, q) in self.beams.iter().enumerate() {
            for (j, p) in self.quantized.iter().enumerate() {
                if i != j {
                    worst = worst.max(linalg::inner(q, p).norm());
                }
            }
        }
        worst
    }
}

/// Builds zero-forcing beams for `on_users`, where `directions[k]` is the
/// unit-norm quantized direction fed back by `on_users[k]`.
///
/// The returned plan carries no power; see [`TransmissionPlan::with_total_power`].
pub fn zero_forcing_beams(on_users: &[usize], directions: &[&[Complex64]], dim: usize) -> Result<TransmissionPlan> {
    if on_users.len() != directions.len() {
        return Err(Error::DimensionMismatch { expected: on_users.len(), found: directions.len() });
    }
    if on_users.is_empty() {
        return Err(Error::InvalidInput("at least one on-user is required".into()));
    }
    if on_users.len() > dim {
        return Err(Error::Infeasible { on_users: on_users.len(), antennas: dim });
    }
    for (k, u) in on_users.iter().enumerate() {
        if on_users[..k].contains(u) {
            return Err(Error::InvalidInput(format!("user {u} listed twice")));
        }
    }
    for d in directions {
        if d.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: d.len() });
        }
    }

    let mut beams = Vec::with_capacity(on_users.len());
    for (i, (&user, own)) in on_users.iter().zip(directions).enumerate() {
        let others = directions
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, d)| *d);
        let basis = linalg::orthonormal_basis(others, RANK_TOL);
        let mut q = own.to_vec();
        linalg::project_out(&mut q, &basis);
        let q = linalg::normalized(&q, RANK_TOL).ok_or(Error::DegenerateGeometry { user })?;
        beams.push(q);
    }

    Ok(TransmissionPlan {
        on_users: on_users.to_vec(),
        beams,
        quantized: directions.iter().map(|d| d.to_vec()).collect(),
        per_user_power: 0.0,
    })
}

/// Beam gains seen by one on-user: `|h†q_i|²` and `Σ_{j≠i} |h†q_j|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGains {
    pub signal: f64,
    pub interference: f64,
}

impl BeamGains {
    /// Powers and rate at path loss `gamma` and per-user power `power`.
    pub fn metrics(&self, gamma: f64, power: f64) -> LinkMetrics {
        LinkMetrics::new(power * gamma * self.signal, power * gamma * self.interference)
    }
}

/// Signal power, interference power and the resulting rate in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMetrics {
    pub p_sig: f64,
    pub p_int: f64,
    pub rate_bits: f64,
}

impl LinkMetrics {
    pub fn new(p_sig: f64, p_int: f64) -> Self {
        LinkMetrics {
            p_sig,
            p_int,
            rate_bits: (p_sig / (1.0 + p_int)).ln_1p() / std::f64::consts::LN_2,
        }
    }
}

/// Gains of `plan`'s beams on the channel `h` of on-user `user`.
pub fn beam_gains(h: &[Complex64], plan: &TransmissionPlan, user: usize) -> Result<BeamGains> {
    let slot = plan
        .slot(user)
        .ok_or_else(|| Error::InvalidInput(format!("user {user} is not switched on")))?;
    let mut g = BeamGains { signal: 0.0, interference: 0.0 };
    for (k, q) in plan.beams.iter().enumerate() {
        if q.len() != h.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), found: h.len() });
        }
        let a = linalg::inner(h, q).norm_sqr();
        if k == slot {
            g.signal = a;
        } else {
            g.interference += a;
        }
    }
    Ok(g)
}

/// Link metrics of on-user `user` given its true channel and path loss.
pub fn link_metrics(true_channel: &ChannelVector, gamma: f64, plan: &TransmissionPlan, user: usize) -> Result<LinkMetrics> {
    Ok(beam_gains(true_channel.h(), plan, user)?.metrics(gamma, plan.per_user_power()))
}

/// Sum of on-user rates; `channels` and `gammas` are indexed by user.
pub fn sum_rate(channels: &[ChannelVector], gammas: &[f64], plan: &TransmissionPlan) -> Result<f64> {
    let mut total = 0.0;
    for &u in plan.on_users() {
        let (ch, g) = channels
            .get(u)
            .zip(gammas.get(u))
            .ok_or_else(|| Error::InvalidInput(format!("no channel for user {u}")))?;
        total += link_metrics(ch, *g, plan, u)?.rate_bits;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn single_user_beam_is_its_direction() {
        let mut rng = seeded(1);
        let d = linalg::isotropic_unit(4, &mut rng);
        let plan = zero_forcing_beams(&[2], &[&d], 4).unwrap();
        assert_eq!(plan.beam_for(2).unwrap(), d.as_slice());
    }

    #[test]
    fn two_user_hand_example() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h1 = real(&[1.0, 0.0]);
        let h2 = real(&[s, s]);
        let plan = zero_forcing_beams(&[0, 1], &[&h1, &h2], 2).unwrap();
        let q1 = plan.beam_for(0).unwrap();
        let expected = real(&[s, -s]);
        assert!((linalg::inner(&expected, q1).norm() - 1.0).abs() < 1e-12);
        assert!(linalg::inner(q1, &h2).norm() < 1e-12);
    }

    #[test]
    fn orthonormal_directions_are_kept() {
        let e: Vec<Vec<Complex64>> = (0..3)
            .map(|k| (0..3).map(|j| Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        let refs: Vec<&[Complex64]> = e.iter().map(Vec::as_slice).collect();
        let plan = zero_forcing_beams(&[0, 1, 2], &refs, 3).unwrap();
        for (q, d) in plan.beams().iter().zip(&e) {
            assert!((linalg::inner(q, d).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let a = real(&[1.0, 0.0]);
        let b = real(&[0.0, 1.0]);
        let c = real(&[-1.0, 0.0]);
        assert!(matches!(
            zero_forcing_beams(&[0, 1, 2], &[&a, &b, &c], 2),
            Err(Error::Infeasible { on_users: 3, antennas: 2 })
        ));
        assert!(matches!(
            zero_forcing_beams(&[4, 7], &[&a, &c], 2),
            Err(Error::DegenerateGeometry { user: 4 })
        ));
        assert!(zero_forcing_beams(&[1, 1], &[&a, &b], 2).is_err());
        assert!(zero_forcing_beams(&[0], &[&a, &b], 2).is_err());
    }

    #[test]
    fn perfect_single_user_metrics() {
        let mut rng = seeded(3);
        let ch = crate::channel::draw_channel(4, &mut rng);
        let plan = zero_forcing_beams(&[0], &[ch.direction().unwrap()], 4).unwrap().with_total_power(5.0);
        let m = link_metrics(&ch, 0.7, &plan, 0).unwrap();
        assert!((m.p_sig - 5.0 * 0.7 * ch.norm().powi(2)).abs() < 1e-10);
        assert_eq!(m.p_int, 0.0);
    }

    #[test]
    fn zero_path_loss_gives_nothing() {
        let mut rng = seeded(3);
        let ch = crate::channel::draw_channel(3, &mut rng);
        let plan = zero_forcing_beams(&[0], &[ch.direction().unwrap()], 3).unwrap().with_total_power(10.0);
        let m = link_metrics(&ch, 0.0, &plan, 0).unwrap();
        assert_eq!((m.p_sig, m.p_int, m.rate_bits), (0.0, 0.0, 0.0));
    }

    #[test]
    fn two_stream_hand_example() {
        let e1 = real(&[1.0, 0.0]);
        let e2 = real(&[0.0, 1.0]);
        let plan = zero_forcing_beams(&[0, 1], &[&e1, &e2], 2).unwrap().with_total_power(2.0);
        let h = ChannelVector::new(e1.clone());
        let m = link_metrics(&h, 1.0, &plan, 0).unwrap();
        assert!((m.p_sig - 1.0).abs() < 1e-15);
        assert!(m.p_int.abs() < 1e-15);
        assert!((m.rate_bits - 1.0).abs() < 1e-15);
        assert!(link_metrics(&h, 1.0, &plan, 5).is_err());
    }

    #[test]
    fn sum_rate_cases() {
        assert_eq!(sum_rate(&[], &[], &TransmissionPlan::empty()).unwrap(), 0.0);

        let e1 = real(&[1.0, 0.0]);
        let e2 = real(&[0.0, 1.0]);
        let chans = vec![ChannelVector::new(real(&[0.8, 0.6])), ChannelVector::new(real(&[0.6, 0.8]))];
        let single = zero_forcing_beams(&[1], &[&e2], 2).unwrap().with_total_power(3.0);
        let only = link_metrics(&chans[1], 1.0, &single, 1).unwrap().rate_bits;
        assert_eq!(sum_rate(&chans, &[1.0, 1.0], &single).unwrap(), only);

        // mirror-image users see identical signal and interference
        let plan = zero_forcing_beams(&[0, 1], &[&e1, &e2], 2).unwrap().with_total_power(3.0);
        let r0 = link_metrics(&chans[0], 1.0, &plan, 0).unwrap().rate_bits;
        assert_eq!(sum_rate(&chans, &[1.0, 1.0], &plan).unwrap(), 2.0 * r0);
    }
}
