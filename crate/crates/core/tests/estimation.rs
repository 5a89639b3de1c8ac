use chrono::NaiveDate;
use intraday_core::estimation::{
    clean, epps_correlation, estimate, estimate_kappa, fit_jump_law, synthetic_dataset, EstimationWindows,
    SessionTicks, Tick, TickDataset,
};
use intraday_core::model::{fixtures, MaturityGrid};
use proptest::prelude::*;

fn first_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 1, 3).unwrap()
}

fn rescaled(data: &TickDataset, c: f64) -> TickDataset {
    let sessions = data
        .sessions
        .iter()
        .map(|s| SessionTicks {
            delivery_date: s.delivery_date,
            products: s
                .products
                .iter()
                .map(|ticks| ticks.iter().map(|t| Tick { time: t.time, price: t.price * c }).collect())
                .collect(),
        })
        .collect();
    TickDataset::new(data.grid.clone(), sessions, "scaled").unwrap()
}

fn small_dataset(seed: u64, days: usize) -> TickDataset {
    let p = fixtures::france_2019();
    synthetic_dataset(&p, &vec![50.0; 24], days, first_day(), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn epps_correlation_is_symmetric_and_bounded(seed: u64, l in 0usize..24, m in 0usize..24) {
        let data = small_dataset(seed, 6);
        let w = EstimationWindows::standard(&data.grid);
        let a = epps_correlation(&data, &w, l, m, 0.5).unwrap();
        let b = epps_correlation(&data, &w, m, l, 0.5).unwrap();
        prop_assert_eq!(a, b);
        if let Some(rho) = a {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&rho));
        }
    }

    #[test]
    fn kappa_ignores_price_scale(seed: u64, c in 2u32..6) {
        let data = small_dataset(seed, 10);
        let w = EstimationWindows::standard(&data.grid);
        let a = estimate_kappa(&data, &w).unwrap();
        let b = estimate_kappa(&rescaled(&data, c as f64), &w).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cleaning_only_removes_trades(seed: u64) {
        let data = small_dataset(seed, 4);
        let (cleaned, report) = clean(&data);
        prop_assert_eq!(report.total(), data.n_ticks() - data.n_sessions() * data.n_products());
        prop_assert_eq!(cleaned.n_ticks() + report.removed(), data.n_ticks());
        prop_assert!(report.removed_fraction() < 0.01);
        cleaned.validate().unwrap();
    }
}

#[test]
fn unit_tick_returns_give_a_single_atom() {
    let grid = MaturityGrid::hourly(2);
    let session = SessionTicks {
        delivery_date: first_day(),
        products: (0..2)
            .map(|_| (0..40).map(|i| Tick { time: 0.1 * i as f64, price: 50.0 + 0.01 * (i % 2) as f64 }).collect())
            .collect(),
    };
    let data = TickDataset::new(grid, vec![session], "unit").unwrap();
    let law = fit_jump_law(&data).unwrap();
    assert_eq!(law.ticks(), &[1]);
    assert_eq!(law.probs(), &[1.0]);
}

#[test]
fn empty_data_is_an_error() {
    let data = TickDataset::new(MaturityGrid::daily(), Vec::new(), "none").unwrap();
    assert!(estimate(&data, &EstimationWindows::standard(&data.grid)).is_err());
}

#[test]
fn tick_csv_round_trip() {
    let data = small_dataset(3, 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ticks.csv");
    data.write_csv(&path).unwrap();
    let back = TickDataset::read_csv(&path, &data.grid, &data.country).unwrap();
    assert_eq!(back.n_sessions(), 2);
    for (a, b) in back.sessions.iter().zip(&data.sessions) {
        assert_eq!(a.delivery_date, b.delivery_date);
        for (x, y) in a.products.iter().zip(&b.products) {
            assert_eq!(x.len(), y.len());
            assert!(x.iter().zip(y).all(|(s, t)| (s.time - t.time).abs() < 1e-6 && (s.price - t.price).abs() < 1e-9));
        }
    }
}

#[test]
fn more_sessions_give_smaller_errors() {
    let truth = fixtures::germany_2022();
    let f0 = vec![100.0; 24];
    let reps = 6u64;
    let rmse = |days: usize| {
        let mut sq = [0.0; 3];
        for r in 0..reps {
            let data = synthetic_dataset(&truth, &f0, days, first_day(), 1000 + r).unwrap();
            let fit = estimate(&data, &EstimationWindows::standard(&data.grid)).unwrap().params;
            sq[0] += (fit.kappa / truth.kappa - 1.0).powi(2);
            sq[1] += (fit.mu / truth.mu - 1.0).powi(2);
            sq[2] += (fit.mu_c / truth.mu_c - 1.0).powi(2);
        }
        sq.map(|s| (s / reps as f64).sqrt())
    };
    let (few, many) = (rmse(15), rmse(150));
    for i in 0..3 {
        assert!(many[i] < few[i], "{few:?} vs {many:?}");
    }
    assert!(many.iter().all(|&e| e < 0.15), "{many:?}");
}
