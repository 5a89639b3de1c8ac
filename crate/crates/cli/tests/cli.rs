use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Days, NaiveDate};
use intraday_core::battery::{io::write_spot_csv, spot_strategy, BatterySpec, SpotPrices};
use intraday_core::estimation::synthetic_dataset;
use intraday_core::model::{fixtures, JumpLaw, MaturityGrid, ModelParams};
use sha2::{Digest, Sha256};

fn intraday(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intraday"))
        .args(args.iter().map(|a| a.as_ref()))
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// The last stderr line, parsed as the error document.
fn error_json(out: &Output) -> serde_json::Value {
    let text = stderr(out);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {line}"))
}

fn write_params(dir: &Path, name: &str, params: &ModelParams) -> PathBuf {
    let path = dir.join(name);
    params.save(&path).unwrap();
    path
}

fn write_battery(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("battery.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn sha256(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

fn quiet_params() -> ModelParams {
    ModelParams::new(0.5, 1e-12, 0.0, MaturityGrid::daily(), JumpLaw::single(10)).unwrap()
}

fn first_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 1, 3).unwrap()
}

fn write_spot(dir: &Path, days: &[(NaiveDate, Vec<f64>)]) -> PathBuf {
    let path = dir.join("spot.csv");
    let spot: SpotPrices = days.iter().cloned().collect();
    write_spot_csv(&spot, std::fs::File::create(&path).unwrap()).unwrap();
    path
}

fn daily_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    csv::Reader::from_path(path).unwrap().deserialize().map(Result::unwrap).collect()
}

#[test]
fn simulate_zero_paths_writes_an_empty_batch() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "p.json", &fixtures::france_2019());
    let csv = dir.path().join("paths.csv");
    let out = intraday(&[&"simulate", &params, &"--n-paths", &"0", &"--out", &csv]);
    ok(&out);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().all(|l| l.starts_with('#') || l == "path_id,product,time,price"));
    assert!(dir.path().join("paths.csv.manifest.json").exists());

    let bin = dir.path().join("paths.bin");
    ok(&intraday(&[&"simulate", &params, &"--n-paths", &"0", &"--format", &"binary", &"--out", &bin]));
    let batch = intraday_core::simulation::io::read_paths_binary(std::fs::File::open(&bin).unwrap()).unwrap();
    assert!(batch.paths.is_empty());
}

#[test]
fn simulate_is_reproducible_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "p.json", &fixtures::germany_2022());
    for format in ["csv", "binary"] {
        let hashes: Vec<Vec<u8>> = ["1", "1", "3"]
            .iter()
            .enumerate()
            .map(|(k, threads)| {
                let out_path = dir.path().join(format!("run{k}.{format}"));
                ok(&intraday(&[
                    &"--threads", threads, &"simulate", &params, &"--n-paths", &"50", &"--seed", &"9", &"--grid",
                    &"0.5", &"--format", &format, &"--out", &out_path,
                ]));
                sha256(&out_path)
            })
            .collect();
        assert_eq!(hashes[0], hashes[1]);
        assert_eq!(hashes[0], hashes[2]);
    }
    let other = dir.path().join("other.csv");
    ok(&intraday(&[&"simulate", &params, &"--n-paths", &"50", &"--seed", &"10", &"--grid", &"0.5", &"--out", &other]));
    assert_ne!(sha256(&other), sha256(&dir.path().join("run0.csv")));
}

#[test]
fn decomposition_without_decay_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let flat = ModelParams::new(0.0, 5.0, 2.0, MaturityGrid::daily(), JumpLaw::single(10)).unwrap();
    let params = write_params(dir.path(), "p.json", &flat);
    let out_path = dir.path().join("x.csv");
    let out = intraday(&[&"simulate", &params, &"--generator", &"decomposition", &"--out", &out_path]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "input");
    assert!(err["error"]["message"].as_str().unwrap().contains("kappa > 0"));
    // the thinning generator handles the same parameters
    ok(&intraday(&[&"simulate", &params, &"--n-paths", &"3", &"--out", &out_path]));
}

#[test]
fn malformed_tick_row_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let ticks = dir.path().join("ticks.csv");
    std::fs::write(
        &ticks,
        "delivery_date,product,timestamp_s,price\n2022-01-03,1,0,50\n2022-01-03,2,10,51\n2022-01-03,3,abc,52\n",
    )
    .unwrap();
    let out = intraday(&[&"estimate", &ticks, &"--out", &dir.path().join("est")]);
    assert_eq!(out.status.code(), Some(2));
    let msg = error_json(&out)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("line 4"), "{msg}");
    assert!(msg.contains("timestamp_s"), "{msg}");
}

#[test]
fn malformed_spot_row_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "p.json", &quiet_params());
    let battery = write_battery(dir.path(), r#"{"capacity_mwh":1,"power_mw":1,"efficiency":0.9,"p":1,"n_paths":200}"#);
    let spot = dir.path().join("spot.csv");
    std::fs::write(&spot, "delivery_date,product,spot_price\n2022-01-03,1,40\n2022-01-03,x,41\n").unwrap();
    let out = intraday(&[
        &"value", &params, &battery, &"--spot", &spot, &"--date", &"2022-01-03", &"--out", &dir.path().join("p.bin"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = error_json(&out)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("spot.csv: line 3"), "{msg}");
}

#[test]
fn estimate_round_trip_and_weekly_rows() {
    let dir = tempfile::tempdir().unwrap();
    let truth = fixtures::germany_2022();
    let params = write_params(dir.path(), "truth.json", &truth);
    let market = dir.path().join("market");
    // eight weeks of sessions
    ok(&intraday(&[&"synth", &params, &"--days", &"56", &"--seed", &"3", &"--out", &market]));
    let est = dir.path().join("est");
    ok(&intraday(&[&"estimate", &market.join("ticks.csv"), &"--rolling", &"weekly", &"--out", &est]));

    let rolling = std::fs::read_to_string(est.join("rolling.csv")).unwrap();
    let rows: Vec<&str> = rolling.lines().collect();
    assert_eq!(rows[0], "week_start,kappa,mu,mu_c,sigma_proxy,rho_proxy");
    assert_eq!(rows.len() - 1, 5, "{rolling}");
    assert!(rows[1].starts_with("2022-01-31,"));

    let fitted = ModelParams::load(est.join("params.json")).unwrap();
    assert!((fitted.kappa - truth.kappa).abs() <= 0.05, "kappa {}", fitted.kappa);
    let s = fitted.total_intensity() / truth.total_intensity();
    assert!((s - 1.0).abs() < 0.10, "mu_S ratio {s}");
    let r = fitted.common_ratio() / truth.common_ratio();
    assert!((r - 1.0).abs() < 0.10, "mu_R ratio {r}");
    for f in ["cleaning.json", "signature.csv", "epps.csv", "manifest.json", "weekly/2022-01-31.json"] {
        assert!(est.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(est.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "estimate");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn value_rejects_p_outside_one_to_six() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "p.json", &quiet_params());
    let battery = write_battery(dir.path(), r#"{"capacity_mwh":2,"power_mw":1,"efficiency":0.92,"n_paths":100}"#);
    for p in ["0", "7"] {
        let out = intraday(&[&"value", &params, &battery, &"--p", &p, &"--out", &dir.path().join("p.bin")]);
        assert_eq!(out.status.code(), Some(2), "p = {p}: {}", stderr(&out));
    }
    let out = intraday(&[&"value", &params, &battery, &"--out", &dir.path().join("p.bin")]);
    assert_eq!(out.status.code(), Some(2), "missing p");
}

#[test]
fn value_warns_about_tiny_path_counts() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "p.json", &fixtures::france_2019());
    let battery = write_battery(dir.path(), r#"{"capacity_mwh":2,"power_mw":1,"efficiency":0.92,"p":2,"seed":1}"#);
    let policy = dir.path().join("policy.bin");
    let out = intraday(&[&"value", &params, &battery, &"--n-paths", &"50", &"--f0", &"40", &"--out", &policy]);
    ok(&out);
    assert!(stderr(&out).contains("WARN"), "{}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("policy.json")).unwrap()).unwrap();
    assert_eq!(summary["n_paths"], 50);
    assert_eq!(summary["p"], 2);
    assert!(summary["warnings"][0].as_str().unwrap().contains("50 training paths"));
}

#[test]
fn value_is_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "p.json", &fixtures::germany_2022());
    let battery = write_battery(dir.path(), r#"{"capacity_mwh":2,"power_mw":1,"efficiency":0.92,"p":3,"seed":5}"#);
    let hashes: Vec<(Vec<u8>, Vec<u8>)> = ["1", "2"]
        .iter()
        .map(|threads| {
            let policy = dir.path().join(format!("policy{threads}.bin"));
            ok(&intraday(&[
                &"--threads", threads, &"value", &params, &battery, &"--n-paths", &"3000", &"--f0", &"150", &"--out",
                &policy,
            ]));
            (sha256(&policy), sha256(&policy.with_extension("json")))
        })
        .collect();
    assert_eq!(hashes[0], hashes[1]);
}

/// Ticks holding each product at `prices` for the whole session.
fn constant_ticks(dir: &Path, days: &[(NaiveDate, Vec<f64>)]) -> PathBuf {
    let path = dir.join("ticks.csv");
    let mut text = String::from("delivery_date,product,timestamp_s,price\n");
    for (date, prices) in days {
        for (m, p) in prices.iter().enumerate() {
            text.push_str(&format!("{date},{},0,{p}\n", m + 1));
        }
    }
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn backtest_on_the_training_path_earns_the_optimisation_value() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "p.json", &quiet_params());
    let battery = write_battery(dir.path(), r#"{"capacity_mwh":2,"power_mw":1,"efficiency":0.92,"p":2,"seed":3}"#);
    let prices: Vec<f64> = (0..24).map(|m| 60.0 + 40.0 * ((m as f64) * 0.7).sin()).collect();
    let days = vec![(first_date(), prices.clone())];
    let spot = write_spot(dir.path(), &days);
    let ticks = constant_ticks(dir.path(), &days);

    let policy = dir.path().join("policy.bin");
    ok(&intraday(&[
        &"value", &params, &battery, &"--n-paths", &"200", &"--spot", &spot, &"--date", &"2022-01-03", &"--out",
        &policy,
    ]));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(policy.with_extension("json")).unwrap()).unwrap();
    let value = summary["optimisation_value_eur"].as_f64().unwrap();

    let gains = dir.path().join("gains.csv");
    ok(&intraday(&[&"backtest", &policy, &ticks, &spot, &"--out", &gains]));
    let rows = daily_rows(&gains);
    assert_eq!(rows.len(), 2);
    let gain = |strategy: &str| -> f64 {
        rows.iter().find(|r| r["strategy"] == strategy).unwrap()["gain_eur"].parse().unwrap()
    };
    // the optimisation value is a mean over identical paths, equal up to summation rounding
    assert!((gain("poisson") - value).abs() < 1e-9 * value.abs());
    // intraday prices equal to the day-ahead prices: Spot earns its planned value
    let planned = spot_strategy(&prices, &BatterySpec::hours(2)).unwrap().value;
    assert!((gain("spot") - planned).abs() < 1e-9);
    assert!((value - planned).abs() < 1e-9);
    assert!(dir.path().join("gains.annual.csv").exists());
    assert!(dir.path().join("gains.csv.manifest.json").exists());
}

#[test]
fn backtest_on_fresh_days_matches_the_optimisation_value() {
    let dir = tempfile::tempdir().unwrap();
    let truth = fixtures::france_2019();
    let params = write_params(dir.path(), "p.json", &truth);
    let battery = write_battery(dir.path(), r#"{"capacity_mwh":2,"power_mw":1,"efficiency":0.92,"p":1,"seed":21}"#);
    let f0: Vec<f64> = (0..24).map(|m| 50.0 + 10.0 * ((m as f64) * 0.5).cos()).collect();
    let n_days = 250;
    let dates: Vec<NaiveDate> = (0..n_days).map(|d| first_date() + Days::new(d)).collect();
    let spot = write_spot(dir.path(), &dates.iter().map(|&d| (d, f0.clone())).collect::<Vec<_>>());
    let ticks = dir.path().join("ticks.csv");
    synthetic_dataset(&truth, &f0, n_days as usize, first_date(), 77).unwrap().write_csv(&ticks).unwrap();

    let policy = dir.path().join("policy.bin");
    let f0_arg = f0.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    ok(&intraday(&[&"value", &params, &battery, &"--n-paths", &"5000", &"--f0", &f0_arg, &"--out", &policy]));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(policy.with_extension("json")).unwrap()).unwrap();
    let value = summary["optimisation_value_eur"].as_f64().unwrap();
    let value_se = summary["std_error_eur"].as_f64().unwrap();

    let gains_path = dir.path().join("gains.csv");
    ok(&intraday(&[&"backtest", &policy, &ticks, &spot, &"--out", &gains_path]));
    let gains: Vec<f64> = daily_rows(&gains_path)
        .iter()
        .filter(|r| r["strategy"] == "poisson")
        .map(|r| r["gain_eur"].parse().unwrap())
        .collect();
    assert_eq!(gains.len(), n_days as usize);
    let n = gains.len() as f64;
    let mean = gains.iter().sum::<f64>() / n;
    let var = gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n + value_se * value_se).sqrt();
    assert!((mean - value).abs() < 3.0 * se, "backtest {mean} vs optimisation {value} (se {se})");
}

fn write_daily(path: &Path, rows: &[(&str, &str, &str, f64)]) {
    let mut text = String::from("delivery_date,strategy,p,gain_eur,optimisation_value_eur,fallbacks\n");
    for (date, strategy, p, gain) in rows {
        text.push_str(&format!("{date},{strategy},{p},{gain},,0\n"));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn report_of_nothing_is_a_header() {
    let out = intraday(&[&"report"]);
    ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "year,p,spot,poisson,diffusion\n");
    let json = intraday(&[&"report", &"--format", &"json"]);
    ok(&json);
    assert_eq!(String::from_utf8_lossy(&json.stdout).trim(), "[]");
}

#[test]
fn report_has_one_row_per_p() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let mut poisson = vec![("2022-03-01", "spot", "", 10.0), ("2022-03-02", "spot", "", 11.0)];
    for p in ["1", "3", "5"] {
        poisson.push(("2022-03-01", "poisson", p, 12.0));
        poisson.push(("2022-03-02", "poisson", p, 13.0));
    }
    write_daily(&a, &poisson);
    write_daily(&b, &[("2022-03-01", "diffusion", "3", 20.0), ("2022-03-02", "diffusion", "3", 21.5)]);
    let out_path = dir.path().join("table.csv");
    ok(&intraday(&[&"report", &a, &b, &"--out", &out_path]));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(
        text,
        "year,p,spot,poisson,diffusion\n2022,1,21.0,25.0,\n2022,3,21.0,25.0,41.5\n2022,5,21.0,25.0,\n"
    );
    assert!(dir.path().join("table.csv.manifest.json").exists());
}

#[test]
fn report_rejects_a_duplicate_day() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_daily(&a, &[("2022-03-01", "poisson", "3", 12.0)]);
    write_daily(&b, &[("2022-03-01", "poisson", "3", 14.0)]);
    let out = intraday(&[&"report", &a, &b]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["error"]["message"].as_str().unwrap().contains("duplicate day 2022-03-01"));
}

#[test]
fn campaign_writes_every_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "p.json", &fixtures::france_2019());
    let battery = write_battery(dir.path(), r#"{"capacity_mwh":2,"power_mw":1,"efficiency":0.92,"seed":2}"#);
    let market = dir.path().join("market");
    ok(&intraday(&[&"synth", &params, &"--days", &"3", &"--out", &market]));
    let gains = dir.path().join("gains.csv");
    ok(&intraday(&[
        &"campaign",
        &market.join("ticks.csv"),
        &market.join("spot.csv"),
        &battery,
        &"--params",
        &params,
        &"--p",
        &"1,2",
        &"--n-paths",
        &"1000",
        &"--out",
        &gains,
    ]));
    let rows = daily_rows(&gains);
    // per day: Spot, then each generator for each p
    assert_eq!(rows.len(), 3 * (1 + 2 * 2));
    let annual = std::fs::read_to_string(dir.path().join("gains.annual.csv")).unwrap();
    assert_eq!(annual.lines().count(), 3);
    assert!(annual.lines().skip(1).all(|l| l.split(',').all(|f| !f.is_empty())), "{annual}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(intraday(&[&"simulate"]).status.code(), Some(2));
    assert_eq!(intraday(&[&"--threads", &"0", &"report"]).status.code(), Some(2));
    let out = intraday(&[&"simulate", &"/nonexistent/params.json", &"--out", &"/tmp/never.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "input");
}
