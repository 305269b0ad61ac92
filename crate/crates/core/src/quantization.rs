//! Random direction codebooks and the maximum-alignment quantizer.
//!
//! A user with `R` feedback bits owns a codebook of `2^R` unit vectors in
//! `C^L`. It feeds back the index of the codeword `p` maximizing `|v†p|`,
//! where `v` is its channel direction; the resulting chordal loss
//! `1 − |v†p|²` averaged over isotropic `v` is the codebook distortion.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{stream, Domain};

/// Default cap on the number of codewords in one codebook.
pub const DEFAULT_MAX_CODEBOOK_ENTRIES: usize = 1 << 24;

const UNIT_TOL: f64 = 1e-9;

/// A set of `2^R` unit-norm codewords in `C^L`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    rate_bits: u32,
    entries: Vec<Complex64>,
}

impl Codebook {
    /// Builds a codebook from explicit codewords.
    ///
    /// The number of codewords must be a power of two and every codeword must
    /// have unit norm within 1e-9; codewords are renormalized exactly.
    pub fn from_entries(dim: usize, codewords: &[Vec<Complex64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("codeword dimension must be positive".into()));
        }
        let n = codewords.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "codebook size must be a power of two, got {n}"
            )));
        }
        let mut entries = Vec::with_capacity(n * dim);
        for cw in codewords {
            if cw.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: cw.len() });
            }
            let nrm = linalg::norm(cw);
            if (nrm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidInput(format!("codeword norm {nrm} is not 1")));
            }
            entries.extend(cw.iter().map(|x| x / nrm));
        }
        Ok(Codebook {
            dim,
            rate_bits: n.trailing_zeros(),
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rate_bits(&self) -> u32 {
        self.rate_bits
    }

    pub fn len(&self) -> usize {
        self.entries.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, index: usize) -> &[Complex64] {
        &self.entries[index * self.dim..(index + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[Complex64]> + '_ {
        self.entries.chunks_exact(self.dim)
    }

    /// Index of the best-aligned codeword and its alignment `|v†p|²`.
    /// Ties go to the lowest index. `v` must have length `dim`.
    fn best(&self, v: &[Complex64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, p) in self.iter().enumerate() {
            let a = linalg::inner(v, p).norm_sqr();
            if a > best.1 {
                best = (k, a);
            }
        }
        best
    }
}

/// Codebook of `2^rate_bits` independent isotropic unit vectors.
pub fn random_codebook<R: Rng + ?Sized>(dim: usize, rate_bits: u32, rng: &mut R) -> Result<Codebook> {
    random_codebook_capped(dim, rate_bits, DEFAULT_MAX_CODEBOOK_ENTRIES, rng)
}

/// [`random_codebook`] with an explicit limit on the number of codewords.
pub fn random_codebook_capped<R: Rng + ?Sized>(
    dim: usize,
    rate_bits: u32,
    max_entries: usize,
    rng: &mut R,
) -> Result<Codebook> {
    if dim == 0 {
        return Err(Error::InvalidInput("codeword dimension must be positive".into()));
    }
    let size = 1usize
        .checked_shl(rate_bits)
        .filter(|&n| rate_bits < usize::BITS && n <= max_entries)
        .ok_or(Error::ResourceLimit { rate_bits, cap: max_entries })?;
    let mut entries = Vec::with_capacity(size * dim);
    for _ in 0..size {
        entries.extend(linalg::isotropic_unit(dim, rng));
    }
    Ok(Codebook { dim, rate_bits, entries })
}

/// Outcome of quantizing one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationResult {
    pub index: usize,
    pub codeword: Vec<Complex64>,
    /// `|v†p|²`, in `[0, 1]`.
    pub alignment: f64,
    /// `1 − alignment`.
    pub chordal_loss: f64,
}

/// Quantizes the unit direction `v` to the codeword maximizing `|v†p|`.
pub fn quantize(v: &[Complex64], book: &Codebook) -> Result<QuantizationResult> {
    if v.len() != book.dim() {
        return Err(Error::DimensionMismatch { expected: book.dim(), found: v.len() });
    }
    let n = linalg::norm(v);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidInput(format!("direction norm {n} is not 1")));
    }
    let (index, raw) = book.best(v);
    let alignment = raw.clamp(0.0, 1.0);
    Ok(QuantizationResult {
        index,
        codeword: book.entry(index).to_vec(),
        alignment,
        chordal_loss: 1.0 - alignment,
    })
}

/// Average chordal loss of `book` over the given unit directions.
pub fn mean_chordal_loss<'a, I>(book: &Codebook, directions: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [Complex64]>,
{
    let mut total = 0.0;
    let mut count = 0usize;
    for v in directions {
        total += quantize(v, book)?.chordal_loss;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("no directions supplied".into()));
    }
    Ok(total / count as f64)
}

const DISTORTION_BATCH: usize = 4096;

/// Monte Carlo estimate of the codebook distortion `1 − E[max_p |v†p|²]`
/// over isotropic `v`.
///
/// Trials are split into fixed batches, each with its own derived stream, and
/// summed in batch order, so the estimate is independent of thread count.
pub fn empirical_distortion(book: &Codebook, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let batches = trials.div_ceil(DISTORTION_BATCH);
    let sums: Vec<f64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Domain::Distortion, 0, b as u32);
            let n = DISTORTION_BATCH.min(trials - b * DISTORTION_BATCH);
            (0..n)
                .map(|_| {
                    let v = linalg::isotropic_unit(book.dim(), &mut rng);
                    1.0 - book.best(&v).1.clamp(0.0, 1.0)
                })
                .sum::<f64>()
        })
        .collect();
    Ok(sums.iter().sum::<f64>() / trials as f64)
}

/// Main-order lower and upper bounds on the optimal distortion at rate `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `((L−1)/L)·2^{−R/(L−1)}` and `(Γ(1/(L−1))/(L−1))·2^{−R/(L−1)}`.
pub fn distortion_rate_bounds(dim: usize, rate_bits: u32) -> Result<DistortionBounds> {
    if dim < 2 {
        return Err(Error::InvalidInput(
            "distortion-rate bounds need at least two dimensions".into(),
        ));
    }
    let k = (dim - 1) as f64;
    let decay = (-(rate_bits as f64) / k).exp2();
    Ok(DistortionBounds {
        lower: k / dim as f64 * decay,
        upper: gamma(1.0 / k) / k * decay,
    })
}

/// Limit of the optimal distortion when `R/L → rbar`: `2^{−rbar}`.
pub fn asymptotic_distortion(rbar: f64) -> f64 {
    (-rbar).exp2()
}

/// Estimate of the average distortion of a random `R`-bit codebook in `C^L`,
/// clamped to `[0, 1]`. Dimension one quantizes losslessly.
pub fn estimate_distortion(dim: usize, rate_bits: u32) -> f64 {
    match distortion_rate_bounds(dim, rate_bits) {
        Ok(b) => b.upper.clamp(0.0, 1.0),
        Err(_) => 0.0,
    }
}
