//! Spatial efficiency in the large-system limit.
//!
//! When `L`, `m`, `s` and the feedback rates grow together, each on-user's
//! rate converges to `log2(1 + η(1 − s̄)/s̄)` and the throughput per antenna
//! depends only on the limiting distribution of `η` across users. That
//! distribution is kept as a finite list of atoms, which covers systems built
//! from finitely many user classes and handles mass points exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantization::asymptotic_distortion;
use crate::selection::eta;

const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaAtom {
    pub eta: f64,
    pub mass: f64,
}

/// Discrete law of `η`: atoms sorted by strictly decreasing `η`, positive
/// masses summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaDistribution {
    atoms: Vec<EtaAtom>,
}

impl EtaDistribution {
    /// Sorts the atoms, merges equal `η` values and renormalizes.
    ///
    /// Rejects negative or non-finite `η`, non-positive masses, and masses
    /// whose total differs from one by more than 1e-9.
    pub fn new(atoms: Vec<EtaAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("distribution needs at least one atom".into()));
        }
        for a in &atoms {
            if !(a.eta >= 0.0 && a.eta.is_finite()) {
                return Err(Error::InvalidInput(format!("invalid eta value {}", a.eta)));
            }
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::InvalidInput(format!("invalid atom mass {}", a.mass)));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidInput(format!("atom masses sum to {total}, not 1")));
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| b.eta.total_cmp(&a.eta));
        let mut merged: Vec<EtaAtom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.eta == a.eta => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        for a in &mut merged {
            a.mass /= total;
        }
        Ok(EtaDistribution { atoms: merged })
    }

    pub fn point_mass(eta: f64) -> Result<Self> {
        Self::new(vec![EtaAtom { eta, mass: 1.0 }])
    }

    pub fn atoms(&self) -> &[EtaAtom] {
        &self.atoms
    }

    /// `μ((x, ∞))`.
    pub fn mass_above(&self, x: f64) -> f64 {
        self.atoms.iter().take_while(|a| a.eta > x).map(|a| a.mass).sum()
    }

    /// Mass sitting exactly at `x`.
    pub fn mass_at(&self, x: f64) -> f64 {
        self.atoms.iter().filter(|a| a.eta == x).map(|a| a.mass).sum()
    }

    /// Values of `s̄` where the threshold jumps from one atom to the next:
    /// `m̄·μ([η_k, ∞))` for each atom.
    pub fn breakpoints(&self, mbar: f64) -> Vec<f64> {
        let mut cum = 0.0;
        self.atoms
            .iter()
            .map(|a| {
                cum += a.mass;
                mbar * cum
            })
            .collect()
    }
}

/// One class of users in the limit: a fraction of the population sharing a
/// path loss and a normalized feedback rate `r̄ = R/L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserClass {
    pub fraction: f64,
    pub gamma: f64,
    /// Use `f64::INFINITY` for perfect feedback.
    pub rbar: f64,
}

/// Limiting `η` law of a class-structured system at SNR `rho`.
pub fn build_eta_distribution(classes: &[UserClass], rho: f64) -> Result<EtaDistribution> {
    let atoms = classes
        .iter()
        .map(|c| {
            if c.rbar.is_nan() || c.rbar < 0.0 || !c.gamma.is_finite() || c.gamma < 0.0 {
                return Err(Error::InvalidInput(format!("invalid class {c:?}")));
            }
            Ok(EtaAtom {
                eta: eta(rho, c.gamma, asymptotic_distortion(c.rbar)),
                mass: c.fraction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EtaDistribution::new(atoms)
}

/// `sup{η : m̄·μ([η, ∞)) > s̄}`, or 0 when the set is empty.
pub fn eta_threshold(dist: &EtaDistribution, mbar: f64, sbar: f64) -> f64 {
    dist.atoms()
        .iter()
        .zip(dist.breakpoints(mbar))
        .find(|&(_, tail)| tail > sbar)
        .map_or(0.0, |(a, _)| a.eta)
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Spatial efficiency `Ī(s̄)` in bits/s/Hz per antenna.
///
/// Users above the threshold are all on; the remaining on-user budget
/// `s̄ − m̄·μ((η_s̄, ∞))` is drawn from the atom at the threshold. Zero
/// outside `(0, 1)`.
pub fn spatial_efficiency(dist: &EtaDistribution, mbar: f64, sbar: f64) -> f64 {
    if !(sbar > 0.0 && sbar < 1.0) {
        return 0.0;
    }
    let factor = (1.0 - sbar) / sbar;
    let threshold = eta_threshold(dist, mbar, sbar);
    let mut above = 0.0;
    let mut strict_tail = 0.0;
    for a in dist.atoms().iter().take_while(|a| a.eta > threshold) {
        above += a.mass;
        strict_tail += a.mass * log2_1p(a.eta * factor);
    }
    mbar * strict_tail + (sbar - mbar * above) * log2_1p(threshold * factor)
}

/// Maximizer of the spatial efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalSbar {
    pub sbar: f64,
    pub value: f64,
    /// One-sided difference quotients at `sbar`, used to confirm that zero
    /// lies in the generalized gradient.
    pub left_slope: f64,
    pub right_slope: f64,
}

impl OptimalSbar {
    /// Whether the left quotient is not below `-tol` and the right quotient
    /// is not above `tol`.
    pub fn brackets_zero(&self, tol: f64) -> bool {
        self.left_slope >= -tol && self.right_slope <= tol
    }
}

/// Coarsest grid spacing accepted by [`optimal_sbar`].
pub const MAX_GRID_STEP: f64 = 1e-4;

/// Maximizes `Ī` over `(0, 1)`.
///
/// The objective is continuous but neither smooth nor concave in general, so
/// the search scans a uniform grid with spacing `grid_step`, then refines by
/// golden-section search in a one-cell window around the best grid point and
/// around every breakpoint `m̄·μ([η_k, ∞))` inside `(0, 1)`.
pub fn optimal_sbar(dist: &EtaDistribution, mbar: f64, grid_step: f64) -> Result<OptimalSbar> {
    if !(grid_step > 0.0 && grid_step <= MAX_GRID_STEP) {
        return Err(Error::InvalidInput(format!(
            "grid step must be in (0, {MAX_GRID_STEP}], got {grid_step}"
        )));
    }
    if !(mbar > 0.0 && mbar.is_finite()) {
        return Err(Error::InvalidInput(format!("mbar must be positive, got {mbar}")));
    }
    let f = |s: f64| spatial_efficiency(dist, mbar, s);
    let n = (1.0 / grid_step).ceil() as usize;
    let h = 1.0 / n as f64;

    let mut best = (f64::NAN, f64::NEG_INFINITY);
    let mut consider = |s: f64, v: f64| {
        if v > best.1 {
            best = (s, v);
        }
    };
    let mut grid_best = (0.5, f64::NEG_INFINITY);
    for k in 1..n {
        let s = k as f64 * h;
        let v = f(s);
        if v > grid_best.1 {
            grid_best = (s, v);
        }
    }
    consider(grid_best.0, grid_best.1);

    let mut centers = vec![grid_best.0];
    centers.extend(dist.breakpoints(mbar).into_iter().filter(|&b| b > 0.0 && b < 1.0));
    for c in centers {
        consider(c, f(c));
        let lo = (c - h).max(h * 1e-3);
        let hi = (c + h).min(1.0 - h * 1e-3);
        // each side of a kink is smooth; search them separately
        for (a, b) in [(lo, c), (c, hi)] {
            if b > a {
                let s = golden_max(&f, a, b);
                consider(s, f(s));
            }
        }
    }

    let (sbar, value) = best;
    let delta = 1e-7;
    Ok(OptimalSbar {
        sbar,
        value,
        left_slope: (value - f(sbar - delta)) / delta,
        right_slope: (f(sbar + delta) - value) / delta,
    })
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-12 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}
