use std::fs;
use std::path::{Path, PathBuf};

use idi_core::idi::{bootstrap_idi, diagnose, Diagnostics};
use idi_core::rng;
use idi_core::sim::{gen_population, power_curve, run_mc_study, McMetrics, Method, PowerPoint};
use idi_core::Dataset;
use serde::Serialize;

use crate::cohort::{read_cohort, save_cohort};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::plot;

/// Flags shared by all commands; they override the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct SimulateFlags {
    pub reps: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub emit_cohort: bool,
}

fn prepare(config_path: &Path, overrides: &Overrides) -> CliResult<(RunConfig, PathBuf)> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    let out_dir = overrides
        .out_dir
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("idi-out"));
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    Ok((config, out_dir))
}

fn load_cohort(cohort_path: &Path, config: &RunConfig) -> CliResult<Dataset> {
    let dataset = read_cohort(cohort_path)?;
    for name in &config.covariates {
        if !dataset.covariate_names.contains(name) {
            return Err(CliError::input(format!(
                "covariate '{name}' from the configuration is not a column of {}",
                cohort_path.display()
            )));
        }
    }
    Ok(dataset)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::input(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
    let wrap = |e: csv::Error| CliError::input(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn balance_rows(d: &Diagnostics) -> Vec<Vec<String>> {
    d.balance
        .rows
        .iter()
        .map(|r| vec![r.covariate.clone(), num(r.smd_before), num(r.smd_after)])
        .collect()
}

fn qq_rows(d: &Diagnostics) -> Vec<Vec<String>> {
    d.qq.iter().map(|&(m, o)| vec![num(m), num(o)]).collect()
}

/// Runs the bootstrap analysis of a cohort. Returns the text summary.
pub fn analyze(cohort_path: &Path, config_path: &Path, overrides: &Overrides) -> CliResult<String> {
    let (config, out_dir) = prepare(config_path, overrides)?;
    let dataset = load_cohort(cohort_path, &config)?;
    let result = bootstrap_idi(&dataset, &config.idi_config())?;
    write_json(&out_dir.join("result.json"), &result)?;
    let summary = result.summary();
    write_file(&out_dir.join("summary.txt"), &summary)?;
    if let Some(d) = &result.diagnostics {
        write_csv(
            &out_dir.join("balance.csv"),
            &["covariate", "smd_before", "smd_after"],
            balance_rows(d),
        )?;
        write_csv(
            &out_dir.join("qq.csv"),
            &["model_quantile", "observed_quantile"],
            qq_rows(d),
        )?;
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct DiagnoseSummary {
    smd_threshold: f64,
    max_abs_smd_after: f64,
    balanced: bool,
    ess_single_arm: f64,
    ess_control: f64,
    qq_band: f64,
    qq_max_deviation: f64,
    qq_within_band: bool,
    reference_gamma: f64,
    reference_retained_fraction: f64,
}

/// Balance and Q–Q diagnostics without the bootstrap.
pub fn diagnose_cmd(cohort_path: &Path, config_path: &Path, overrides: &Overrides) -> CliResult<String> {
    let (config, out_dir) = prepare(config_path, overrides)?;
    let dataset = load_cohort(cohort_path, &config)?;
    let d = diagnose(&dataset, &config.idi_config())?;
    let threshold = config.smd_threshold;
    let rows = d
        .balance
        .rows
        .iter()
        .map(|r| {
            let ok = r.smd_after.abs() < threshold;
            vec![
                r.covariate.clone(),
                num(r.smd_before),
                num(r.smd_after),
                if ok { "PASS" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out_dir.join("smd_before_after.csv"),
        &["covariate", "smd_before", "smd_after", "status"],
        rows,
    )?;
    write_csv(
        &out_dir.join("qq_points.csv"),
        &["model_quantile", "observed_quantile"],
        qq_rows(&d),
    )?;
    write_file(&out_dir.join("love_plot.svg"), &plot::love_plot(&d.balance.rows, threshold))?;
    write_file(&out_dir.join("qq_plot.svg"), &plot::qq_plot(&d.qq))?;

    let max_smd = d.balance.max_abs_after();
    let qq_dev = d.qq.iter().map(|(m, o)| (m - o).abs()).fold(0.0, f64::max);
    let summary = DiagnoseSummary {
        smd_threshold: threshold,
        max_abs_smd_after: max_smd,
        balanced: max_smd < threshold,
        ess_single_arm: d.balance.ess_single_arm,
        ess_control: d.balance.ess_control,
        qq_band: config.qq_band,
        qq_max_deviation: qq_dev,
        qq_within_band: qq_dev <= config.qq_band,
        reference_gamma: d.reference_gamma,
        reference_retained_fraction: d.reference_retained_fraction,
    };
    write_json(&out_dir.join("diagnostics.json"), &summary)?;
    Ok(format!(
        "max |SMD| after adjustment {:.4} ({})\nmax Q-Q deviation {:.4} ({})\n",
        max_smd,
        if summary.balanced { "balanced" } else { "imbalanced" },
        qq_dev,
        if summary.qq_within_band { "within band" } else { "outside band" },
    ))
}

#[derive(Debug, Serialize)]
struct SimulateSummary<'a> {
    seed: u64,
    reps: usize,
    truth: f64,
    metrics: &'a [McMetrics],
    power: &'a [PowerPoint],
}

fn metrics_rows(metrics: &[McMetrics]) -> Vec<Vec<String>> {
    metrics
        .iter()
        .map(|m| {
            vec![
                m.method.label().to_string(),
                num(m.true_effect),
                num(m.mean),
                num(m.abs_bias),
                num(m.sd),
                num(m.mean_se),
                num(m.coverage),
            ]
        })
        .collect()
}

/// Monte Carlo study of the configured scenario.
pub fn simulate(config_path: &Path, flags: &SimulateFlags, overrides: &Overrides) -> CliResult<String> {
    let (config, out_dir) = prepare(config_path, overrides)?;
    let scenario = config
        .scenario
        .clone()
        .ok_or_else(|| CliError::input("configuration has no `scenario` block"))?;
    let reps = flags.reps.unwrap_or(config.study.reps);
    if reps < 2 {
        return Err(CliError::input("--reps must be at least 2"));
    }
    let methods: Vec<Method> = match &flags.methods {
        Some(names) => names
            .iter()
            .map(|n| n.parse::<Method>().map_err(|e| CliError::input(e.to_string())))
            .collect::<CliResult<_>>()?,
        None => config.study.methods.clone(),
    };
    if methods.is_empty() {
        return Err(CliError::input("no methods selected"));
    }

    if flags.emit_cohort {
        // The same draw as Monte Carlo replicate 0.
        let dataset = gen_population(&scenario, &mut rng::stream(config.seed, 0))?;
        save_cohort(&dataset, &out_dir.join("cohort.csv"))?;
    }

    let options = config.mc_options();
    let report = run_mc_study(&scenario, &methods, reps, config.seed, &options)?;
    write_csv(
        &out_dir.join("table.csv"),
        &["Method", "True", "Mean", "Abs.Bias", "SD", "SE", "Cov."],
        metrics_rows(&report.metrics),
    )?;

    let power = if config.study.alpha_grid.is_empty() {
        Vec::new()
    } else {
        let points = power_curve(&scenario, &config.study.alpha_grid, &methods, reps, config.seed, &options)?;
        write_csv(
            &out_dir.join("power.csv"),
            &["alpha", "method", "power", "mc_se"],
            points
                .iter()
                .map(|p| vec![num(p.alpha), p.method.to_string(), num(p.power), num(p.mc_se)])
                .collect(),
        )?;
        points
    };
    write_json(
        &out_dir.join("results.json"),
        &SimulateSummary {
            seed: config.seed,
            reps,
            truth: report.truth,
            metrics: &report.metrics,
            power: &power,
        },
    )?;

    let mut text = format!("{reps} replicates, true log HR {:.4}\n", report.truth);
    text.push_str("Method                  Mean     Abs.Bias  SD      SE      Cov.\n");
    for m in &report.metrics {
        text.push_str(&format!(
            "{:<22} {:>7.3}  {:>7.3}  {:>6.3}  {:>6.3}  {:>5.3}\n",
            m.method.label(),
            m.mean,
            m.abs_bias,
            m.sd,
            m.mean_se,
            m.coverage
        ));
    }
    Ok(text)
}
