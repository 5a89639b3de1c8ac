use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use chrono::{Datelike, Days, NaiveDate};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::backtest::{backtest, spot_backtest};
use super::optimize::optimize_on;
use super::schedule::{DecisionSchedule, FeatureTiming, DEFAULT_DELAY, MAX_FEATURES};
use super::spec::BatterySpec;
use super::training::TrainingSet;
use crate::error::{Error, Result};
use crate::estimation::{RollingRow, SessionTicks, TickDataset};
use crate::model::ModelParams;
use crate::rng::{child_rng, derive_seed};
use crate::simulation::{simulate_thinning, GeneratorKind};

/// Day-ahead prices per delivery date, one per product.
pub type SpotPrices = BTreeMap<NaiveDate, Vec<f64>>;

/// Strategy column of the valuation tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Spot,
    Poisson,
    Diffusion,
}

impl Strategy {
    /// Column of a policy trained on `kind` paths; both jump generators are the Poisson model.
    pub fn trained_on(kind: GeneratorKind) -> Self {
        if kind.is_jump() {
            Strategy::Poisson
        } else {
            Strategy::Diffusion
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Spot => "spot",
            Strategy::Poisson => "poisson",
            Strategy::Diffusion => "diffusion",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One strategy on one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyGain {
    pub delivery_date: NaiveDate,
    pub strategy: Strategy,
    /// Number of features, empty for the Spot strategy.
    pub p: Option<usize>,
    pub gain_eur: f64,
    pub optimisation_value_eur: Option<f64>,
    pub fallbacks: usize,
}

/// Annual sums in the layout `(year, p, spot, poisson, diffusion)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualRow {
    pub year: i32,
    pub p: usize,
    pub spot: Option<f64>,
    pub poisson: Option<f64>,
    pub diffusion: Option<f64>,
}

/// Daily backtest gains of every strategy.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValuationReport {
    pub days: Vec<DailyGain>,
}

impl ValuationReport {
    /// Concatenates reports; the same `(date, strategy, p)` twice is an error.
    pub fn merge(reports: impl IntoIterator<Item = ValuationReport>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut days = Vec::new();
        for r in reports {
            for d in r.days {
                if !seen.insert((d.delivery_date, d.strategy, d.p)) {
                    return Err(Error::Data(format!(
                        "duplicate day {} for strategy {} (p = {:?})",
                        d.delivery_date, d.strategy, d.p
                    )));
                }
                days.push(d);
            }
        }
        days.sort_by(|a, b| (a.delivery_date, a.strategy, a.p).cmp(&(b.delivery_date, b.strategy, b.p)));
        Ok(Self { days })
    }

    /// Sum of daily gains per `(year, strategy, p)`.
    pub fn sums(&self) -> BTreeMap<(i32, Strategy, Option<usize>), f64> {
        let mut out = BTreeMap::new();
        for d in &self.days {
            *out.entry((d.delivery_date.year(), d.strategy, d.p)).or_insert(0.0) += d.gain_eur;
        }
        out
    }

    /// One row per year and `p` with a model strategy; the Spot column repeats the year's
    /// Spot total.
    pub fn annual(&self) -> Vec<AnnualRow> {
        let sums = self.sums();
        let mut rows: BTreeMap<(i32, usize), AnnualRow> = BTreeMap::new();
        for (&(year, strategy, p), &v) in &sums {
            let Some(p) = p else { continue };
            let row = rows.entry((year, p)).or_insert_with(|| AnnualRow {
                year,
                p,
                spot: sums.get(&(year, Strategy::Spot, None)).copied(),
                poisson: None,
                diffusion: None,
            });
            match strategy {
                Strategy::Poisson => row.poisson = Some(v),
                Strategy::Diffusion => row.diffusion = Some(v),
                Strategy::Spot => {}
            }
        }
        rows.into_values().collect()
    }

    pub fn write_daily_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(["delivery_date", "strategy", "p", "gain_eur", "optimisation_value_eur", "fallbacks"])?;
        for d in &self.days {
            w.serialize(d)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_daily_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let days = r.deserialize().collect::<std::result::Result<Vec<DailyGain>, _>>()?;
        Ok(Self { days })
    }

    pub fn write_annual_csv<W: Write>(&self, out: W) -> Result<()> {
        write_annual_csv(&self.annual(), out)
    }
}

/// `year,p,spot,poisson,diffusion`; missing strategies are empty fields.
pub fn write_annual_csv<W: Write>(rows: &[AnnualRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["year", "p", "spot", "poisson", "diffusion"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Model parameters in force from each week start for seven days.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeeklyParams {
    weeks: Vec<(NaiveDate, ModelParams)>,
}

impl WeeklyParams {
    pub fn new(mut weeks: Vec<(NaiveDate, ModelParams)>) -> Self {
        weeks.sort_by_key(|w| w.0);
        Self { weeks }
    }

    pub fn from_rolling(rows: &[RollingRow]) -> Self {
        Self::new(rows.iter().map(|r| (r.week_start, r.fitted.params.clone())).collect())
    }

    /// The same parameters for every week from `first` through `last`.
    pub fn constant(params: &ModelParams, first: NaiveDate, last: NaiveDate) -> Self {
        let mut weeks = Vec::new();
        let mut w = first;
        while w <= last {
            weeks.push((w, params.clone()));
            w = w + Days::new(7);
        }
        Self { weeks }
    }

    /// Week start and parameters covering `date`.
    pub fn for_day(&self, date: NaiveDate) -> Option<(NaiveDate, &ModelParams)> {
        let k = self.weeks.partition_point(|w| w.0 <= date);
        let (start, params) = self.weeks.get(k.checked_sub(1)?)?;
        (date < *start + Days::new(7)).then_some((*start, params))
    }

    pub fn len(&self) -> usize {
        self.weeks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weeks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub spec: BatterySpec,
    pub p_values: Vec<usize>,
    pub generators: Vec<GeneratorKind>,
    pub n_paths: usize,
    pub seed: u64,
    pub timing: FeatureTiming,
    pub delay: f64,
}

impl CampaignConfig {
    pub fn new(spec: BatterySpec, p_values: Vec<usize>, generators: Vec<GeneratorKind>, n_paths: usize, seed: u64) -> Self {
        Self {
            spec,
            p_values,
            generators,
            n_paths,
            seed,
            timing: FeatureTiming::default(),
            delay: DEFAULT_DELAY,
        }
    }

    fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.p_values.is_empty() || self.p_values.iter().any(|p| !(1..=MAX_FEATURES).contains(p)) {
            return Err(Error::InvalidArgument(format!("p values {:?} must lie in 1..={MAX_FEATURES}", self.p_values)));
        }
        let columns: BTreeSet<Strategy> = self.generators.iter().map(|&g| Strategy::trained_on(g)).collect();
        if columns.len() != self.generators.len() {
            return Err(Error::InvalidArgument("one generator per strategy column".into()));
        }
        Ok(())
    }
}

/// Seed of the training paths for a week and generator.
pub fn training_seed(seed: u64, kind: GeneratorKind, week_start: NaiveDate) -> u64 {
    let tag = match kind {
        GeneratorKind::Thinning => 1,
        GeneratorKind::Decomposition => 2,
        GeneratorKind::Diffusion => 3,
    };
    derive_seed(seed, tag, week_start.num_days_from_ce() as u64)
}

/// Daily backtest of the model strategies and the Spot strategy.
///
/// For each week of parameters and each generator, one set of training paths is simulated
/// and shifted onto every day's day-ahead prices. Each day then trains a policy per `p`,
/// backtests it on the day's trades, and runs the Spot strategy. Days without parameters
/// are skipped with a warning; a day without day-ahead prices is an error.
pub fn backtest_campaign(
    observed: &TickDataset,
    weekly: &WeeklyParams,
    spot: &SpotPrices,
    config: &CampaignConfig,
) -> Result<ValuationReport> {
    config.validate()?;
    let p_max = *config.p_values.iter().max().expect("validated nonempty");
    let schedule = DecisionSchedule::with_delay(&observed.grid, p_max, config.delay, config.timing)?;
    let schedules: Vec<(usize, DecisionSchedule)> =
        config.p_values.iter().map(|&p| schedule.with_p(p).map(|s| (p, s))).collect::<Result<_>>()?;
    let n = observed.n_products();

    let mut by_week: BTreeMap<NaiveDate, Vec<&SessionTicks>> = BTreeMap::new();
    for session in &observed.sessions {
        match weekly.for_day(session.delivery_date) {
            Some((week, _)) => by_week.entry(week).or_default().push(session),
            None => log::warn!("no parameters for {}; day skipped", session.delivery_date),
        }
    }

    let mut days = Vec::new();
    for (week, sessions) in by_week {
        let (_, params) = weekly.for_day(week).expect("week start is covered");
        if params.n_products() != n {
            return Err(Error::InvalidArgument(format!(
                "parameters of week {week} have {} products, the ticks {n}",
                params.n_products()
            )));
        }
        let training: Vec<(GeneratorKind, TrainingSet)> = config
            .generators
            .iter()
            .map(|&kind| {
                let seed = training_seed(config.seed, kind, week);
                TrainingSet::simulate(params, &vec![0.0; n], &schedule, kind, config.n_paths, seed).map(|t| (kind, t))
            })
            .collect::<Result<_>>()?;
        for session in sessions {
            let date = session.delivery_date;
            let day_ahead = spot
                .get(&date)
                .ok_or_else(|| Error::Data(format!("no day-ahead prices for {date}")))?;
            let s = spot_backtest(&config.spec, &schedule, session, day_ahead)?;
            days.push(DailyGain {
                delivery_date: date,
                strategy: Strategy::Spot,
                p: None,
                gain_eur: s.gain,
                optimisation_value_eur: None,
                fallbacks: s.fallbacks,
            });
            for (kind, set) in &training {
                let shifted = set.rebase(day_ahead)?;
                for (p, sched) in &schedules {
                    let opt = optimize_on(&shifted, &config.spec, sched)?;
                    let bt = backtest(&opt.policy, session, day_ahead)?;
                    days.push(DailyGain {
                        delivery_date: date,
                        strategy: Strategy::trained_on(*kind),
                        p: Some(*p),
                        gain_eur: bt.gain,
                        optimisation_value_eur: Some(opt.value),
                        fallbacks: bt.fallbacks,
                    });
                }
            }
        }
    }
    ValuationReport::merge([ValuationReport { days }])
}

/// Average German day-ahead profile by delivery hour, EUR/MWh.
const DAY_AHEAD_SHAPE: [f64; 24] = [
    180.0, 170.0, 165.0, 160.0, 165.0, 185.0, 220.0, 250.0, 245.0, 225.0, 205.0, 195.0, 190.0, 190.0, 200.0, 215.0,
    240.0, 275.0, 290.0, 280.0, 255.0, 230.0, 210.0, 190.0,
];

/// Observed sessions and day-ahead prices drawn from the model.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub observed: TickDataset,
    pub spot: SpotPrices,
}

/// Day-ahead prices of day `d`: the average daily shape moved by a day-level shift
/// (sd 30 EUR/MWh) and hourly noise (sd 10 EUR/MWh).
pub fn synthetic_day_ahead(n_products: usize, seed: u64, day: u64) -> Vec<f64> {
    let mut rng = child_rng(derive_seed(seed, 0xda, day), 0);
    let shift: f64 = 30.0 * rng.sample::<f64, _>(StandardNormal);
    (0..n_products)
        .map(|m| DAY_AHEAD_SHAPE[m % 24] + shift + 10.0 * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// `n_days` sessions from `first_date`: day-ahead prices from [`synthetic_day_ahead`] and a
/// thinning path started from them.
pub fn synthetic_market(params: &ModelParams, n_days: usize, first_date: NaiveDate, seed: u64) -> Result<SyntheticMarket> {
    use rayon::prelude::*;
    let n = params.n_products();
    let days: Vec<(NaiveDate, Vec<f64>, SessionTicks)> = (0..n_days as u64)
        .into_par_iter()
        .map(|d| {
            let date = first_date + Days::new(d);
            let f0 = synthetic_day_ahead(n, seed, d);
            let path = simulate_thinning(params, &f0, derive_seed(seed, 0x0b5, d))?;
            let session = SessionTicks::from_event_path(&path, &params.grid, date)?;
            Ok((date, f0, session))
        })
        .collect::<Result<_>>()?;
    let mut spot = SpotPrices::new();
    let mut sessions = Vec::with_capacity(days.len());
    for (date, f0, s) in days {
        spot.insert(date, f0);
        sessions.push(s);
    }
    Ok(SyntheticMarket {
        observed: TickDataset::new(params.grid.clone(), sessions, "synthetic")?,
        spot,
    })
}
