use onoff_core::channel::{SystemConfig, UserProfile};
use onoff_core::sim::verify::{finite_to_asymptotic_gaps, large_system_gaps};
use onoff_core::sim::{run_experiment, ExperimentSpec, ResultRow, Scheme};

#[test]
fn closed_form_powers_approach_their_limits() {
    let gaps: Vec<(f64, f64)> = [50, 100, 200, 400].iter().map(|&l| large_system_gaps(l, 0.5, 1.0, 10.0)).collect();
    for w in gaps.windows(2) {
        assert!(w[1].0 < w[0].0 && w[1].1 < w[0].1, "{gaps:?}");
    }
    assert!(gaps[2].0 <= 0.05 && gaps[2].1 <= 0.05, "{gaps:?}");
}

#[test]
fn per_antenna_rate_approaches_spatial_efficiency() {
    let two = finite_to_asymptotic_gaps(&[50, 100, 200, 400], 0.5, 2.0, 10.0);
    assert!(two.windows(2).all(|w| w[1] < w[0]), "{two:?}");
    assert!(two[2] <= 0.02, "{two:?}");
    let one = finite_to_asymptotic_gaps(&[50, 100, 200, 400, 800], 0.5, 1.0, 10.0);
    assert!(one.windows(2).all(|w| w[1] < w[0]), "{one:?}");
    assert!(one[3] <= 0.02, "{one:?}");
}

fn sweep(rate_bits: u32, snr: Vec<f64>, schemes: Vec<Scheme>) -> Vec<ResultRow> {
    let spec = ExperimentSpec {
        system: SystemConfig::with_snr_db(4, snr[0], vec![UserProfile { gamma: 1.0, rate_bits }; 4]).unwrap(),
        snr_grid_db: snr,
        schemes,
        trials: 2_000,
        codebook_redraws: 5,
        master_seed: 3,
    };
    run_experiment(&spec).unwrap()
}

fn pooled(a: &ResultRow, b: &ResultRow) -> f64 {
    (a.mc_stderr.powi(2) + b.mc_stderr.powi(2)).sqrt()
}

#[test]
fn main_order_dominates_fixed_choices() {
    let mut schemes = vec![Scheme::MainOrder];
    schemes.extend((1..=4).map(Scheme::FixedS));
    for r in [6, 12] {
        let rows = sweep(r, vec![20.0], schemes.clone());
        let main = &rows[0];
        for fixed in &rows[1..] {
            assert!(
                main.mc_throughput_bits >= fixed.mc_throughput_bits - 2.0 * pooled(main, fixed),
                "R={r}: {main:?} vs {fixed:?}"
            );
        }
    }
}

#[test]
fn oracle_is_an_upper_reference() {
    let rows = sweep(6, vec![10.0, 20.0], vec![Scheme::MainOrder, Scheme::Oracle]);
    for pair in rows.chunks(2) {
        assert!(pair[1].mc_throughput_bits >= pair[0].mc_throughput_bits - 2.0 * pooled(&pair[0], &pair[1]));
    }
}

#[test]
fn throughput_grows_with_snr() {
    let rows = sweep(6, vec![0.0, 5.0, 10.0, 15.0, 20.0], vec![Scheme::FixedS(2)]);
    for w in rows.windows(2) {
        assert!(w[1].mc_throughput_bits >= w[0].mc_throughput_bits - 2.0 * pooled(&w[0], &w[1]), "{w:?}");
    }
}
