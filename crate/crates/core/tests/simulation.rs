use std::collections::BTreeMap;

use intraday_core::model::{fixtures, JumpLaw, MaturityGrid, ModelParams};
use intraday_core::simulation::io::{read_paths_binary, read_paths_csv, PathBinaryWriter, PathCsvWriter};
use intraday_core::simulation::{
    sample_onto_grid, simulate_batch, simulate_decomposition, simulate_diffusion, simulate_thinning, EventPath,
    Generator, GeneratorKind, Moments, Origin, SimConfig,
};
use proptest::prelude::*;

fn small(kappa: f64, mu: f64, mu_c: f64, m: usize) -> ModelParams {
    ModelParams::new(kappa, mu, mu_c, MaturityGrid::hourly(m), JumpLaw::from_ticks(vec![1, 5], vec![0.7, 0.3]).unwrap())
        .unwrap()
}

/// product, time, size of every hit, by shock id
fn shocks(path: &EventPath) -> BTreeMap<u64, Vec<(usize, f64, f64)>> {
    let mut out: BTreeMap<u64, Vec<_>> = BTreeMap::new();
    for m in 0..path.n_products() {
        for e in path.events(m) {
            if let Origin::Common(id) = e.origin {
                out.entry(id).or_default().push((m, e.time, e.size));
            }
        }
    }
    out
}

fn check_structure(params: &ModelParams, path: &EventPath) -> Result<(), TestCaseError> {
    let mats = params.grid.maturities();
    for m in 0..path.n_products() {
        let ev = path.events(m);
        prop_assert!(ev.iter().all(|e| e.time >= 0.0 && e.time <= mats[m]));
        prop_assert!(ev.windows(2).all(|w| w[0].time <= w[1].time));
        prop_assert!(ev.iter().all(|e| e.size != 0.0));
    }
    for hits in shocks(path).values() {
        let (_, t, size) = hits[0];
        prop_assert!(hits.iter().all(|h| h.1 == t && h.2 == size));
        let mut ms: Vec<usize> = hits.iter().map(|h| h.0).collect();
        ms.sort_unstable();
        prop_assert!(ms.windows(2).all(|w| w[1] == w[0] + 1));
        prop_assert_eq!(ms[0], mats.partition_point(|&tm| tm < t));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jump_paths_are_well_formed(
        kappa in 0.05f64..2.0, mu in 0.0f64..5.0, mu_c in 0.1f64..5.0, m in 1usize..6, seed: u64,
    ) {
        let p = small(kappa, mu, mu_c, m);
        let f0 = vec![10.0; m];
        check_structure(&p, &simulate_thinning(&p, &f0, seed).unwrap())?;
        check_structure(&p, &simulate_decomposition(&p, &f0, seed).unwrap())?;
    }

    #[test]
    fn grid_sampling_is_the_right_continuous_step_function(
        kappa in 0.05f64..1.0, seed: u64, step in prop::sample::select(vec![0.25, 0.5, 1.0]),
    ) {
        let p = small(kappa, 2.0, 2.0, 4);
        let f0 = [5.0, -3.0, 0.0, 100.0];
        let path = simulate_thinning(&p, &f0, seed).unwrap();
        let times: Vec<f64> = (0..=(p.grid.horizon() / step) as usize).map(|i| i as f64 * step).collect();
        let grid = sample_onto_grid(&path, &p.grid, &times).unwrap();
        for m in 0..4 {
            prop_assert_eq!(grid.price(m, 0), path.price_at(m, 0.0));
            for (k, &t) in times.iter().enumerate() {
                let frozen = t.min(p.grid.cutoff(m));
                prop_assert!((grid.price(m, k) - path.price_at(m, frozen)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn batches_do_not_depend_on_chunking(seed: u64, n in 0u64..40) {
        let p = small(0.5, 1.0, 1.0, 3);
        let times = [0.0, 1.0, 2.0, 3.0];
        let g = Generator::new(&p, &[0.0; 3], &times, GeneratorKind::Thinning).unwrap();
        let whole = g.paths(seed, 0..n);
        let split = n / 3;
        let mut parts = g.paths(seed, 0..split);
        parts.extend(g.paths(seed, split..n));
        prop_assert_eq!(&whole, &parts);
        for (i, path) in whole.iter().enumerate() {
            prop_assert_eq!(path, &g.path(seed, i as u64));
        }
    }
}

#[test]
fn batch_stream_is_reproducible_for_every_generator() {
    let p = fixtures::france_2019();
    let f0 = vec![40.0; 24];
    let times: Vec<f64> = (0..=32).map(f64::from).collect();
    for generator in [GeneratorKind::Thinning, GeneratorKind::Decomposition, GeneratorKind::Diffusion] {
        let config = SimConfig {
            n_paths: 25,
            master_seed: 7,
            generator,
        };
        let a: Vec<_> = simulate_batch(&p, &f0, &times, &config).unwrap().collect();
        let b: Vec<_> = simulate_batch(&p, &f0, &times, &config).unwrap().collect();
        assert_eq!(a.len(), 25);
        assert_eq!(a, b, "{generator:?}");
    }
    let empty = SimConfig {
        n_paths: 0,
        master_seed: 7,
        generator: GeneratorKind::Thinning,
    };
    assert_eq!(simulate_batch(&p, &f0, &times, &empty).unwrap().count(), 0);
}

#[test]
fn exports_round_trip() {
    let p = small(0.5, 1.0, 1.0, 3);
    let times = [0.0, 0.5, 1.0, 2.0, 3.0];
    let f0 = [1.0, 2.0, 3.0];
    let g = Generator::new(&p, &f0, &times, GeneratorKind::Decomposition).unwrap();
    let paths = g.paths(11, 0..5);

    let mut bin = PathBinaryWriter::new(Vec::new(), &f0, &times, 5).unwrap();
    let mut csv = PathCsvWriter::new(Vec::new()).unwrap();
    for (i, path) in paths.iter().enumerate() {
        bin.write_path(path).unwrap();
        csv.write_path(i as u64, path).unwrap();
    }
    let from_bin = read_paths_binary(&bin.finish().unwrap()[..]).unwrap();
    let from_csv = read_paths_csv(&csv.finish().unwrap()[..]).unwrap();
    assert_eq!(from_bin.paths, paths);
    assert_eq!(from_bin.f0, f0);
    assert_eq!(from_csv.paths.len(), 5);
    for (a, b) in from_csv.paths.iter().zip(&paths) {
        assert!(a.prices().iter().zip(b.prices()).all(|(x, y)| (x - y).abs() < 1e-9));
    }
}

#[test]
fn diffusion_terminal_moments() {
    let p = small(0.5, 2.0, 3.0, 3);
    let times = [0.0, 1.0];
    let n = 20_000u64;
    let mut m = Moments::new(3);
    for i in 0..n {
        let path = simulate_diffusion(&p, &[0.0; 3], &times, i).unwrap();
        m.push(&[path.price(0, 1), path.price(1, 1), path.price(0, 1) * path.price(1, 1)]);
    }
    let var = p.expected_covariation(0, 0, 0.0, 1.0).unwrap();
    let cov = p.expected_covariation(0, 1, 0.0, 1.0).unwrap();
    assert!(m.mean(0).abs() < 3.0 * m.std_error(0));
    assert!((m.variance(0) - var).abs() < 0.05 * var, "{} vs {var}", m.variance(0));
    assert!((m.mean(2) - cov).abs() < 3.0 * m.std_error(2), "{} vs {cov}", m.mean(2));
}

#[test]
fn decomposition_needs_a_decaying_intensity() {
    let p = small(0.0, 1.0, 1.0, 2);
    let err = simulate_decomposition(&p, &[0.0; 2], 1).unwrap_err();
    assert!(err.to_string().contains("kappa > 0"), "{err}");
}
