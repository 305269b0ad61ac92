//! Fading-block simulation of the on/off scheme.
//!
//! Every block draws fresh channels; the on-users quantize their directions
//! with their codebooks, the transmitter zero-forces on the quantized
//! directions, and the block's throughput is the sum of the on-users' rates
//! on their true channels. Codebooks are redrawn `codebook_redraws` times and
//! `trials` blocks are run per draw.
//!
//! Streams: codebook of user `u` in draw `r` is `(Codebook, r, u)`; channels
//! of block `t` in draw `r` are `(Channel, r, t)`; random beams use
//! `(Beams, r, t)`. All SNR points and schemes share the same draws.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentSpec, Scheme};
use crate::beamforming::{beam_gains, zero_forcing_beams, BeamGains};
use crate::channel::{db_to_linear, draw_channels, ChannelVector, SystemConfig};
use crate::error::{Error, Result};
use crate::quantization::{quantize, random_codebook, Codebook};
use crate::rng::{stream, Domain};
use crate::selection::{choose_s_main, main_order_plan, oracle_on_users, random_beams_statistic, random_orthonormal_beams};

/// How one block picks its on-users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockScheme {
    /// A set fixed in advance, independent of the channels.
    Fixed(Vec<usize>),
    /// Exhaustive direction-aware selection of `s` users in every block.
    /// This uses every user's feedback and depends on the channel, so it is
    /// only an upper reference for the fixed-set schemes.
    Oracle { s: usize },
}

/// One codebook per user, drawn from the `(Codebook, draw, user)` streams.
pub fn draw_codebooks(config: &SystemConfig, master_seed: u64, draw: u32) -> Result<Vec<Codebook>> {
    config
        .users()
        .iter()
        .enumerate()
        .map(|(u, p)| {
            let mut rng = stream(master_seed, Domain::Codebook, draw, u as u32);
            random_codebook(config.antennas(), p.rate_bits, &mut rng)
        })
        .collect()
}

fn quantized_direction(channel: &ChannelVector, book: &Codebook, user: usize) -> Result<Vec<Complex64>> {
    let v = channel.direction().ok_or(Error::DegenerateGeometry { user })?;
    Ok(quantize(v, book)?.codeword)
}

/// True sum rate of a fixed on-user set, given per-user quantized directions.
fn fixed_set_gains(
    on_users: &[usize],
    channels: &[ChannelVector],
    quantized: &[Option<Vec<Complex64>>],
    dim: usize,
) -> Result<Vec<BeamGains>> {
    let dirs = on_users
        .iter()
        .map(|&u| quantized[u].as_deref().ok_or(Error::DegenerateGeometry { user: u }))
        .collect::<Result<Vec<_>>>()?;
    let plan = zero_forcing_beams(on_users, &dirs, dim)?;
    on_users.iter().map(|&u| beam_gains(channels[u].h(), &plan, u)).collect()
}

fn rate_from_gains(on_users: &[usize], gains: &[BeamGains], config: &SystemConfig) -> f64 {
    let power = config.rho() / on_users.len() as f64;
    on_users
        .iter()
        .zip(gains)
        .map(|(&u, g)| g.metrics(config.users()[u].gamma, power).rate_bits)
        .sum()
}

/// Runs one block on the given channels and returns the block sum rate.
///
/// Only on-users quantize; for [`BlockScheme::Oracle`] every user does.
/// Degenerate zero-forcing geometry is reported as an error.
pub fn run_block_with_channels(
    config: &SystemConfig,
    scheme: &BlockScheme,
    codebooks: &[Codebook],
    channels: &[ChannelVector],
) -> Result<f64> {
    let m = config.user_count();
    if codebooks.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: codebooks.len() });
    }
    if channels.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: channels.len() });
    }
    let mut quantized: Vec<Option<Vec<Complex64>>> = vec![None; m];
    let on_users = match scheme {
        BlockScheme::Fixed(set) => {
            for &u in set {
                if u >= m {
                    return Err(Error::InvalidInput(format!("no user {u}")));
                }
                quantized[u] = Some(quantized_direction(&channels[u], &codebooks[u], u)?);
            }
            set.clone()
        }
        BlockScheme::Oracle { s } => {
            let all = (0..m)
                .map(|u| quantized_direction(&channels[u], &codebooks[u], u))
                .collect::<Result<Vec<_>>>()?;
            let set = oracle_on_users(&all, config, *s)?;
            quantized = all.into_iter().map(Some).collect();
            set
        }
    };
    if on_users.is_empty() {
        return Ok(0.0);
    }
    let gains = fixed_set_gains(&on_users, channels, &quantized, config.antennas())?;
    Ok(rate_from_gains(&on_users, &gains, config))
}

/// Draws channels from `rng` and runs one block.
pub fn run_block<R: Rng + ?Sized>(
    config: &SystemConfig,
    scheme: &BlockScheme,
    codebooks: &[Codebook],
    rng: &mut R,
) -> Result<f64> {
    let channels = draw_channels(config, rng);
    run_block_with_channels(config, scheme, codebooks, &channels)
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::DegenerateGeometry { .. } | Error::AllDegenerate)
}

/// One output line: a scheme at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub scheme: String,
    pub s_used: usize,
    /// Mean block sum rate; for `random_beams_stat` the mean statistic.
    pub mc_throughput_bits: f64,
    pub mc_stderr: f64,
    /// Main-order total for `s_used`; NaN for `random_beams_stat`.
    pub theory_i_main_bits: f64,
    pub trials_effective: u64,
    /// Mean of each codebook draw, in draw order.
    #[serde(skip)]
    pub per_draw_means: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: f64,
    sum_sq: f64,
    n: u64,
}

impl Acc {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.n += 1;
    }

    fn merge(&mut self, o: &Acc) {
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self.n += o.n;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }
}

enum CellKind {
    Fixed { set: usize },
    Oracle { s: usize },
    Beams,
}

struct Cell {
    snr_db: f64,
    config: SystemConfig,
    scheme: Scheme,
    kind: CellKind,
    s_used: usize,
    theory: f64,
}

const BATCH: usize = 250;

/// Runs the sweep. Rows are ordered by SNR, then by scheme as listed.
///
/// The result depends only on `spec`: work is split into fixed
/// (draw, batch) units with their own streams and reduced in unit order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let base = &spec.system;
    let dim = base.antennas();

    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut set_index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut intern = |set: Vec<usize>| -> usize {
        *set_index.entry(set.clone()).or_insert_with(|| {
            sets.push(set);
            sets.len() - 1
        })
    };

    let mut cells = Vec::new();
    for &snr_db in &spec.snr_grid_db {
        let config = base.at_rho(db_to_linear(snr_db))?;
        let main = choose_s_main(&config);
        for &scheme in &spec.schemes {
            let (kind, s_used, theory) = match scheme {
                Scheme::MainOrder => (
                    CellKind::Fixed { set: intern(main.on_users.clone()) },
                    main.s_star,
                    main.i_main_total,
                ),
                Scheme::FixedS(k) => {
                    let r = main_order_plan(&config, k)?;
                    (CellKind::Fixed { set: intern(r.on_users) }, k, r.i_main_total)
                }
                Scheme::Oracle => (CellKind::Oracle { s: main.s_star }, main.s_star, main.i_main_total),
                Scheme::RandomBeamsStat => (CellKind::Beams, dim, f64::NAN),
            };
            cells.push(Cell { snr_db, config: config.clone(), scheme, kind, s_used, theory });
        }
    }

    let draws = spec.codebook_redraws;
    let codebooks = (0..draws)
        .into_par_iter()
        .map(|r| draw_codebooks(base, spec.master_seed, r as u32))
        .collect::<Result<Vec<_>>>()?;

    let batches = spec.trials.div_ceil(BATCH);
    let needs_all = cells.iter().any(|c| matches!(c.kind, CellKind::Oracle { .. }));
    let needs_beams = cells.iter().any(|c| matches!(c.kind, CellKind::Beams));
    let mut in_some_set = vec![false; base.user_count()];
    for set in &sets {
        for &u in set {
            in_some_set[u] = true;
        }
    }

    let units: Vec<(usize, usize)> = (0..draws).flat_map(|r| (0..batches).map(move |b| (r, b))).collect();
    let unit_results = units
        .par_iter()
        .map(|&(r, b)| -> Result<Vec<Acc>> {
            let books = &codebooks[r];
            let mut acc = vec![Acc::default(); cells.len()];
            let first = b * BATCH;
            let last = spec.trials.min(first + BATCH);
            for t in first..last {
                let mut rng = stream(spec.master_seed, Domain::Channel, r as u32, t as u32);
                let channels = draw_channels(base, &mut rng);
                let quantized: Vec<Option<Vec<Complex64>>> = (0..base.user_count())
                    .map(|u| {
                        (needs_all || in_some_set[u])
                            .then(|| channels[u].direction().map(|v| quantize(v, &books[u]).map(|q| q.codeword)))
                            .flatten()
                            .transpose()
                    })
                    .collect::<Result<_>>()?;
                let set_gains: Vec<Result<Vec<BeamGains>>> = sets
                    .iter()
                    .map(|set| fixed_set_gains(set, &channels, &quantized, dim))
                    .collect();
                let beams_stat = if needs_beams {
                    let mut brng = stream(spec.master_seed, Domain::Beams, r as u32, t as u32);
                    let beams = random_orthonormal_beams(dim, &mut brng);
                    Some(random_beams_statistic(&channels, &beams)?)
                } else {
                    None
                };
                for (cell, a) in cells.iter().zip(acc.iter_mut()) {
                    let value = match cell.kind {
                        CellKind::Fixed { set } => match &set_gains[set] {
                            Ok(g) => Ok(rate_from_gains(&sets[set], g, &cell.config)),
                            Err(e) if is_degenerate(e) => Err(()),
                            Err(e) => return Err(Error::InvalidInput(e.to_string())),
                        },
                        CellKind::Oracle { s } => {
                            match oracle_rate(&cell.config, s, &channels, &quantized) {
                                Ok(v) => Ok(v),
                                Err(e) if is_degenerate(&e) => Err(()),
                                Err(e) => return Err(e),
                            }
                        }
                        CellKind::Beams => Ok(beams_stat.expect("computed when needed")),
                    };
                    if let Ok(v) = value {
                        a.push(v);
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_draw = vec![vec![Acc::default(); cells.len()]; draws];
    for (&(r, _), res) in units.iter().zip(&unit_results) {
        for (dst, src) in per_draw[r].iter_mut().zip(res) {
            dst.merge(src);
        }
    }

    Ok(cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let mut total = Acc::default();
            for d in &per_draw {
                total.merge(&d[c]);
            }
            let per_draw_means: Vec<f64> = per_draw.iter().filter(|d| d[c].n > 0).map(|d| d[c].mean()).collect();
            let mean = if total.n > 0 { total.mean() } else { f64::NAN };
            ResultRow {
                snr_db: cell.snr_db,
                scheme: cell.scheme.to_string(),
                s_used: cell.s_used,
                mc_throughput_bits: mean,
                mc_stderr: standard_error(&per_draw_means, &total),
                theory_i_main_bits: cell.theory,
                trials_effective: total.n,
                per_draw_means,
            }
        })
        .collect())
}

fn oracle_rate(
    config: &SystemConfig,
    s: usize,
    channels: &[ChannelVector],
    quantized: &[Option<Vec<Complex64>>],
) -> Result<f64> {
    let all = quantized
        .iter()
        .enumerate()
        .map(|(u, q)| q.clone().ok_or(Error::DegenerateGeometry { user: u }))
        .collect::<Result<Vec<_>>>()?;
    let set = oracle_on_users(&all, config, s)?;
    let gains = fixed_set_gains(&set, channels, quantized, config.antennas())?;
    Ok(rate_from_gains(&set, &gains, config))
}

/// Standard error from per-draw means when there are at least two draws,
/// otherwise from the block-level spread.
fn standard_error(per_draw_means: &[f64], total: &Acc) -> f64 {
    let k = per_draw_means.len();
    if k >= 2 {
        let mean = per_draw_means.iter().sum::<f64>() / k as f64;
        let var = per_draw_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    } else if total.n >= 2 {
        let n = total.n as f64;
        let mean = total.sum / n;
        let var = ((total.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    }
}

/// Output encodings for result rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

/// Column order of the CSV output.
pub const CSV_HEADER: &str = "snr_db,scheme,s_used,mc_throughput_bits,mc_stderr,theory_i_main_bits,trials_effective";

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[ResultRow], out: W) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(out, rows)
}

/// Writes `rows` to `path` in `format`.
pub fn write_results(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    let io = |source| Error::Io { path: path.to_owned(), source };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(rows, &mut out).map_err(|source| Error::Csv { path: path.to_owned(), source })?,
        OutputFormat::Json => {
            write_json(rows, &mut out).map_err(|e| io(e.into()))?;
            out.write_all(b"\n").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::UserProfile;
    use crate::rng::seeded;

    fn spec(schemes: Vec<Scheme>, trials: usize, redraws: usize, r: u32, snr: Vec<f64>) -> ExperimentSpec {
        ExperimentSpec {
            system: SystemConfig::with_snr_db(4, 0.0, vec![UserProfile { gamma: 1.0, rate_bits: r }; 4]).unwrap(),
            snr_grid_db: snr,
            schemes,
            trials,
            codebook_redraws: redraws,
            master_seed: 3,
        }
    }

    #[test]
    fn perfect_feedback_single_user_rate() {
        let cfg = SystemConfig::with_snr_db(4, 10.0, vec![UserProfile { gamma: 0.8, rate_bits: 0 }; 4]).unwrap();
        let channels = draw_channels(&cfg, &mut seeded(5));
        let books: Vec<Codebook> = channels
            .iter()
            .map(|c| Codebook::from_entries(4, &[c.direction().unwrap().to_vec()]).unwrap())
            .collect();
        let rate = run_block_with_channels(&cfg, &BlockScheme::Fixed(vec![2]), &books, &channels).unwrap();
        let expect = (1.0 + cfg.rho() * 0.8 * channels[2].norm().powi(2)).log2();
        assert!((rate - expect).abs() < 1e-10);

        let again = run_block(&cfg, &BlockScheme::Fixed(vec![2]), &books, &mut seeded(5)).unwrap();
        assert_eq!(again, rate);
    }

    #[test]
    fn silent_users_carry_nothing() {
        let cfg = SystemConfig::with_snr_db(4, 10.0, vec![UserProfile { gamma: 0.0, rate_bits: 4 }; 4]).unwrap();
        let books = draw_codebooks(&cfg, 1, 0).unwrap();
        let rate = run_block(&cfg, &BlockScheme::Fixed(vec![0, 1, 2]), &books, &mut seeded(2)).unwrap();
        assert_eq!(rate, 0.0);
        let rate = run_block(&cfg, &BlockScheme::Oracle { s: 2 }, &books, &mut seeded(2)).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn single_point_single_scheme_gives_one_row() {
        let rows = run_experiment(&spec(vec![Scheme::MainOrder], 1, 1, 4, vec![10.0])).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].trials_effective, 1);
        assert_eq!(rows[0].mc_stderr, 0.0);
    }

    #[test]
    fn experiment_matches_block_runner() {
        // the batched engine and run_block see the same streams
        let sp = spec(vec![Scheme::FixedS(2), Scheme::Oracle], 7, 2, 3, vec![5.0]);
        let rows = run_experiment(&sp).unwrap();
        let cfg = sp.system.at_rho(db_to_linear(5.0)).unwrap();
        let fixed = main_order_plan(&cfg, 2).unwrap().on_users;
        let s_star = choose_s_main(&cfg).s_star;
        for (row, scheme) in rows.iter().zip([BlockScheme::Fixed(fixed), BlockScheme::Oracle { s: s_star }]) {
            let mut total = 0.0;
            for r in 0..2u32 {
                let books = draw_codebooks(&cfg, sp.master_seed, r).unwrap();
                for t in 0..7u32 {
                    let mut rng = stream(sp.master_seed, Domain::Channel, r, t);
                    total += run_block(&cfg, &scheme, &books, &mut rng).unwrap();
                }
            }
            assert!((row.mc_throughput_bits - total / 14.0).abs() < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn csv_header_and_determinism() {
        let sp = spec(vec![Scheme::MainOrder, Scheme::RandomBeamsStat], 40, 2, 3, vec![0.0, 10.0]);
        let mut a = Vec::new();
        write_csv(&run_experiment(&sp).unwrap(), &mut a).unwrap();
        let mut b = Vec::new();
        write_csv(&run_experiment(&sp).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 5);
        assert!(text.contains("random_beams_stat"));
    }

    #[test]
    fn write_results_reports_the_path() {
        let err = write_results(&[], Path::new("/nonexistent-dir/x.csv"), OutputFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
