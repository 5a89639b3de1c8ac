use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use intraday_core::battery::{io::write_policy, optimize, BatterySpec, DecisionSchedule, FeatureTiming, DEFAULT_DELAY};
use intraday_core::simulation::GeneratorKind;
use serde::Deserialize;
use serde_json::json;

use crate::failure::{CliResult, Context, Failure};
use crate::inputs::{load_params, load_spot, parse_f0, write_file};
use crate::manifest::{sidecar, RunManifest};

/// Battery file: the battery plus optional run settings that flags override.
#[derive(Debug, Deserialize)]
pub struct BatteryFile {
    #[serde(flatten)]
    pub spec: BatterySpec,
    pub p: Option<usize>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
}

impl BatteryFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let file: Self = serde_json::from_str(&std::fs::read_to_string(path).at(path)?).at(path)?;
        file.spec.validate().at(path)?;
        Ok(file)
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Model parameter JSON.
    params: PathBuf,
    /// Battery JSON {capacity_mwh, power_mw, efficiency, p, n_paths, seed}.
    battery: PathBuf,
    /// Products ahead used as regression features, 1 to 6.
    #[arg(long)]
    p: Option<usize>,
    /// Training paths (default 500000).
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "thinning")]
    generator: GeneratorKind,
    /// Initial prices, EUR/MWh: one value or one per product.
    #[arg(long, conflicts_with = "spot")]
    f0: Option<String>,
    /// Day-ahead price CSV providing the initial prices of `--date`.
    #[arg(long, requires = "date")]
    spot: Option<PathBuf>,
    #[arg(long)]
    date: Option<NaiveDate>,
    /// When the features are observed: decision_time or next_decision.
    #[arg(long, default_value = "decision_time")]
    timing: FeatureTiming,
    /// Hours between trading a product and its delivery.
    #[arg(long, default_value_t = DEFAULT_DELAY)]
    delay: f64,
    /// Policy file; the summary goes next to it as JSON.
    #[arg(long)]
    out: PathBuf,
}

pub const DEFAULT_PATHS: usize = 500_000;

pub fn run(args: Args) -> CliResult<()> {
    if args.out.extension().is_some_and(|e| e == "json") {
        return Err(Failure::input("the policy file must not end in .json: the summary is written there"));
    }
    let mut manifest = RunManifest::start("value");
    manifest.params(&args.params)?;
    manifest.input(&args.battery)?;
    let params = load_params(&args.params)?;
    let battery = BatteryFile::load(&args.battery)?;
    let n = params.n_products();
    let f0 = match (&args.f0, &args.spot) {
        (_, Some(spot)) => {
            manifest.input(spot)?;
            let date = args.date.expect("clap requires --date with --spot");
            load_spot(spot, n)?
                .remove(&date)
                .ok_or_else(|| Failure::input(format!("{}: no day-ahead prices for {date}", spot.display())))?
        }
        (Some(text), None) => parse_f0(text, n)?,
        (None, None) => vec![0.0; n],
    };
    let p = args
        .p
        .or(battery.p)
        .ok_or_else(|| Failure::input("the number of features p is given neither by --p nor in the battery file"))?;
    let n_paths = args.n_paths.or(battery.n_paths).unwrap_or(DEFAULT_PATHS);
    let seed = args.seed.or(battery.seed).unwrap_or(0);
    manifest.seed = Some(seed);

    let schedule = DecisionSchedule::with_delay(&params.grid, p, args.delay, args.timing)?;
    let opt = optimize(&params, &f0, &battery.spec, &schedule, args.generator, n_paths, seed)?;
    write_file(&args.out, |out| Ok(write_policy(&opt.policy, out)?))?;
    let summary_path = summary_path(&args.out);
    std::fs::write(&summary_path, serde_json::to_string_pretty(&opt.summary())? + "\n").at(&summary_path)?;

    manifest.settings(json!({
        "p": p,
        "n_paths": n_paths,
        "generator": args.generator,
        "timing": args.timing,
        "delay_h": args.delay,
        "f0_eur_mwh": f0,
        "battery": battery.spec,
    }));
    manifest.finish(&[&args.out, &summary_path], &sidecar(&args.out))
}

/// `policy.bin` → `policy.json`.
pub fn summary_path(policy: &Path) -> PathBuf {
    policy.with_extension("json")
}
