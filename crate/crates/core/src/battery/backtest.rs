use super::optimize::Policy;
use super::schedule::DecisionSchedule;
use super::spec::{cashflow, BatterySpec};
use super::spot::spot_strategy;
use crate::error::{Error, Result};
use crate::estimation::SessionTicks;
use crate::simulation::{EventPath, GridPath};

/// Prices of every product through the session.
pub trait PriceSource {
    /// Last known price of product `m` at or before `t`, if any.
    fn price(&self, m: usize, t: f64) -> Option<f64>;
}

impl PriceSource for GridPath {
    fn price(&self, m: usize, t: f64) -> Option<f64> {
        self.price_at(m, t)
    }
}

impl PriceSource for EventPath {
    fn price(&self, m: usize, t: f64) -> Option<f64> {
        Some(self.price_at(m, t))
    }
}

/// Last trade at or before `t`.
impl PriceSource for SessionTicks {
    fn price(&self, m: usize, t: f64) -> Option<f64> {
        let ticks = self.products.get(m)?;
        let k = ticks.partition_point(|x| x.time <= t);
        (k > 0).then(|| ticks[k - 1].price)
    }
}

/// One day of a strategy applied to observed prices.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestDay {
    /// EUR.
    pub gain: f64,
    /// MWh per step.
    pub controls: Vec<f64>,
    /// Prices taken from the day-ahead fallback because nothing had traded yet.
    pub fallbacks: usize,
}

struct Observer<'a, S> {
    source: &'a S,
    day_ahead: &'a [f64],
    fallbacks: usize,
}

impl<S: PriceSource> Observer<'_, S> {
    fn price(&mut self, m: usize, t: f64) -> f64 {
        self.source.price(m, t).unwrap_or_else(|| {
            self.fallbacks += 1;
            self.day_ahead[m]
        })
    }
}

fn check_day_ahead(schedule: &DecisionSchedule, day_ahead: &[f64]) -> Result<()> {
    if day_ahead.len() != schedule.n_steps() {
        return Err(Error::InvalidArgument(format!(
            "{} day-ahead prices for {} products",
            day_ahead.len(),
            schedule.n_steps()
        )));
    }
    Ok(())
}

/// Applies a policy forward through one observed session.
///
/// At each step the features are read from the observed prices, the policy picks a control
/// and it is executed at the last observed price of the product. Products that have not
/// traded yet are priced at the day-ahead price.
pub fn backtest<S: PriceSource>(policy: &Policy, observed: &S, day_ahead: &[f64]) -> Result<BacktestDay> {
    let schedule = &policy.schedule;
    check_day_ahead(schedule, day_ahead)?;
    let spec = &policy.spec;
    let mut obs = Observer { source: observed, day_ahead, fallbacks: 0 };
    let mut level = spec.initial_level();
    let mut gain = 0.0;
    let mut controls = Vec::with_capacity(schedule.n_steps());
    let mut feats = Vec::with_capacity(schedule.p);
    for i in 0..schedule.n_steps() {
        let price = obs.price(i, schedule.decision_times[i]);
        feats.clear();
        for j in i + 1..=i + schedule.n_features(i) {
            feats.push(obs.price(j, schedule.feature_times[i]));
        }
        let c = policy.decide(i, level, price, &feats)?;
        let u = spec.power * c as f64;
        gain += cashflow(u, price, spec.efficiency);
        controls.push(u);
        level = (level as isize + c as isize) as usize;
    }
    Ok(BacktestDay {
        gain,
        controls,
        fallbacks: obs.fallbacks,
    })
}

/// Executes a fixed control schedule at the observed decision-time prices.
pub fn execute_controls<S: PriceSource>(
    controls: &[f64],
    spec: &BatterySpec,
    schedule: &DecisionSchedule,
    observed: &S,
    day_ahead: &[f64],
) -> Result<BacktestDay> {
    check_day_ahead(schedule, day_ahead)?;
    if controls.len() != schedule.n_steps() {
        return Err(Error::InvalidArgument(format!(
            "{} controls for {} steps",
            controls.len(),
            schedule.n_steps()
        )));
    }
    let mut obs = Observer { source: observed, day_ahead, fallbacks: 0 };
    let gain = controls
        .iter()
        .enumerate()
        .map(|(i, &u)| cashflow(u, obs.price(i, schedule.decision_times[i]), spec.efficiency))
        .sum();
    Ok(BacktestDay {
        gain,
        controls: controls.to_vec(),
        fallbacks: obs.fallbacks,
    })
}

/// The Spot strategy: the schedule that is optimal for the day-ahead prices, executed
/// intraday.
pub fn spot_backtest<S: PriceSource>(
    spec: &BatterySpec,
    schedule: &DecisionSchedule,
    observed: &S,
    day_ahead: &[f64],
) -> Result<BacktestDay> {
    let plan = spot_strategy(day_ahead, spec)?;
    execute_controls(&plan.controls, spec, schedule, observed, day_ahead)
}
