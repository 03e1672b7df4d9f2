//! Subcommand implementations: fit, test, efficiency, tfpg, simulate, report.
//!
//! Every command writes a manifest next to its outputs. Output bytes are
//! deterministic for identical inputs and seed: floats serialize in shortest
//! round-trip form and nothing time- or host-dependent is emitted.

use std::fs;
use std::path::Path;

use serde_json::json;

use tei_core::design::{
    build_restrictions, reparameterize, DesignMatrix, ModelSpec, TermIndex,
};
use tei_core::efficiency::{
    compute_tei, summarize_elasticities, tfpg_decompose, EfficiencyRecord, TfpgRecord,
};
use tei_core::inference::{fit_hypothesis, lr_test, Hypothesis, LrTestResult};
use tei_core::optim::OptimOptions;
use tei_core::panel::{load_csv, transform, write_csv, CsvSchema, PanelDataset, TransformedObservation};
use tei_core::simulate::{correlation, demo_beta_raw, generate, monte_carlo, SimConfig};
use tei_core::tobit::{fit, FitResult};
use tei_core::{Error, Result};

use crate::chart;
use crate::config::{fnv1a64_hex, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NON_CONVERGENCE: u8 = 2;

// Print without dying on a closed pipe (`tei report | head` must still write
// every file).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn model_spec(cfg: &RunConfig) -> ModelSpec {
    let names: Vec<&str> = cfg.schema.inputs.iter().map(String::as_str).collect();
    let mut spec = ModelSpec::new(&names);
    spec.include_trend_squared = cfg.trend_squared;
    spec.include_dummies = cfg.dummies;
    spec.heteroskedastic = cfg.het;
    spec
}

struct Pipeline {
    dataset: PanelDataset,
    transformed: Vec<TransformedObservation>,
    design: DesignMatrix,
    spec: ModelSpec,
}

fn load_pipeline(cfg: &RunConfig) -> Result<Pipeline> {
    let input = cfg.input.as_ref().ok_or_else(|| {
        Error::InvalidData("no input file; pass --input or set `input` in the config".into())
    })?;
    if !input.exists() {
        return Err(Error::InvalidData(format!("file not found: {}", input.display())));
    }
    let dataset = load_csv(input, &cfg.schema)?;
    let spec = model_spec(cfg);
    let transformed = transform(&dataset, &cfg.rules, cfg.censor_tol);
    let design = DesignMatrix::build(&transformed, &spec)?;
    Ok(Pipeline {
        dataset,
        transformed,
        design,
        spec,
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidData(format!("json serialization: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_manifest(cfg: &RunConfig, spec: &ModelSpec, command: &str) -> Result<()> {
    let input = match &cfg.input {
        Some(path) => {
            let bytes = fs::read(path)?;
            json!({ "path": path.display().to_string(), "fnv1a64": fnv1a64_hex(&bytes) })
        }
        None => serde_json::Value::Null,
    };
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "input": input,
        "model": spec,
        "rules": cfg.rules,
        "options": {
            "clamp_tei": cfg.clamp_tei,
            "charts": cfg.charts,
            "censor_tol": cfg.censor_tol,
            "seed": cfg.seed,
            "reps": cfg.reps,
        },
    });
    write_json(&cfg.out_dir.join("manifest.json"), &manifest)
}

fn fmt_p(p: Option<f64>) -> String {
    match p {
        Some(p) if p < 1e-4 => "<.0001".into(),
        Some(p) => format!("{p:.4}"),
        None => "-".into(),
    }
}

fn print_fit(fr: &FitResult) {
    let report = fr.report();
    say!("{:<18} {:>12} {:>10}", "Parameter", "Coefficient", "P-Value");
    for row in &report.coefficients {
        say!("{:<18} {:>12.6} {:>10}", row.name, row.estimate, fmt_p(row.p_value));
    }
    if report.het_coefficients.len() > 1 {
        say!("-- variance equation --");
        for row in &report.het_coefficients {
            say!("{:<18} {:>12.6}", row.name, row.estimate);
        }
    }
    say!(
        "loglik {:.6}  n {}  censored {}  {} in {} iterations (grad {:.2e})",
        fr.loglik,
        fr.n_obs,
        fr.n_censored,
        if fr.converged { "converged" } else { "NOT CONVERGED" },
        fr.iterations,
        fr.gradient_norm,
    );
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<u8> {
    let p = load_pipeline(cfg)?;
    let fr = fit(&p.design, &p.spec, &OptimOptions::default())?;
    fs::create_dir_all(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("fit.json"), &fr.report())?;
    write_manifest(cfg, &p.spec, "fit")?;
    print_fit(&fr);
    Ok(if fr.converged { EXIT_OK } else { EXIT_NON_CONVERGENCE })
}

fn run_tests(p: &Pipeline) -> Result<(Vec<LrTestResult>, bool)> {
    let opts = OptimOptions::default();
    let fit_u = fit(&p.design, &p.spec, &opts)?;
    let mut all_converged = fit_u.converged;
    let mut results = Vec::new();
    for h in Hypothesis::ALL {
        let (fit_r, df) = fit_hypothesis(h, &p.design, &p.spec, &opts)?;
        all_converged &= fit_r.converged;
        results.push(lr_test(h.display_name(), &fit_u, &fit_r, df)?);
    }
    Ok((results, all_converged))
}

fn print_tests(results: &[LrTestResult]) {
    say!(
        "{:<36} {:>10} {:>4} {:>14}   {}",
        "Null hypothesis", "Statistic", "df", "Pr>Chi-square", "Decision"
    );
    for r in results {
        say!(
            "{:<36} {:>10.2} {:>4} {:>14}   {}",
            r.name,
            r.stat,
            r.df,
            fmt_p(Some(r.p_value)),
            r.decision
        );
    }
}

pub fn cmd_test(cfg: &RunConfig) -> Result<u8> {
    let p = load_pipeline(cfg)?;
    let (results, converged) = run_tests(&p)?;
    fs::create_dir_all(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("tests.json"), &json!({ "specification_tests": results }))?;
    write_manifest(cfg, &p.spec, "test")?;
    print_tests(&results);
    Ok(if converged { EXIT_OK } else { EXIT_NON_CONVERGENCE })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn fmt_finite(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn write_efficiency_csv(
    path: &Path,
    input_names: &[String],
    records: &[EfficiencyRecord],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["firm".to_string(), "year".into(), "tei".into(), "clamped".into()];
    header.extend(input_names.iter().map(|n| format!("elasticity_{n}")));
    header.push("elasticity_y".into());
    header.push("rts".into());
    w.write_record(&header)?;
    for r in records {
        let mut rec = vec![
            r.firm_id.clone(),
            r.year.to_string(),
            format!("{}", r.tei),
            r.clamped.to_string(),
        ];
        rec.extend(r.elasticity_inputs.iter().map(|v| format!("{v}")));
        rec.push(format!("{}", r.elasticity_output));
        rec.push(fmt_finite(r.rts));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_tfpg_csv(path: &Path, records: &[TfpgRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["firm", "year", "dtc", "etc", "stc", "tc", "se", "tfpg"])?;
    for r in records {
        w.write_record(&[
            r.firm_id.clone(),
            r.year.to_string(),
            format!("{}", r.dtc),
            format!("{}", r.etc),
            format!("{}", r.stc),
            format!("{}", r.tc),
            fmt_opt(r.se),
            fmt_opt(r.tfpg),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn efficiency_outputs(cfg: &RunConfig, p: &Pipeline, fr: &FitResult) -> Result<()> {
    let records = compute_tei(&fr.coefficients, &p.transformed, cfg.clamp_tei)?;
    let csv_path = cfg.out_dir.join("efficiency.csv");
    write_efficiency_csv(&csv_path, &p.spec.input_names, &records)?;

    // per-firm average TEI plus both elasticity summaries
    let mut per_firm: Vec<serde_json::Value> = Vec::new();
    for firm in &p.dataset.firms {
        let rows: Vec<&EfficiencyRecord> =
            records.iter().filter(|r| &r.firm_id == firm).collect();
        let mean = rows.iter().map(|r| r.tei).sum::<f64>() / rows.len().max(1) as f64;
        per_firm.push(json!({ "firm": firm, "mean_tei": mean, "n": rows.len() }));
    }
    let summary = json!({
        "per_firm_mean_tei": per_firm,
        "elasticities": summarize_elasticities(fr.coefficients.terms(), &records),
        "n_clamped": records.iter().filter(|r| r.clamped).count(),
    });
    write_json(&cfg.out_dir.join("efficiency_summary.json"), &summary)?;

    if cfg.charts {
        let text = fs::read_to_string(&csv_path)?;
        let rows = chart::parse_efficiency_csv(&text)?;
        fs::write(cfg.out_dir.join("tei_chart.svg"), chart::efficiency_chart(&rows)?)?;
    }
    say!(
        "efficiency: {} records, mean TEI {:.5} -> {}",
        records.len(),
        records.iter().map(|r| r.tei).sum::<f64>() / records.len().max(1) as f64,
        csv_path.display()
    );
    Ok(())
}

fn tfpg_outputs(cfg: &RunConfig, p: &Pipeline, fr: &FitResult) -> Result<()> {
    let records = tfpg_decompose(&fr.coefficients, &p.transformed)?;
    let csv_path = cfg.out_dir.join("tfpg.csv");
    write_tfpg_csv(&csv_path, &records)?;

    // per-firm SE-vs-TFPG correlation
    let mut per_firm: Vec<serde_json::Value> = Vec::new();
    for firm in &p.dataset.firms {
        let se: Vec<f64> = records
            .iter()
            .filter(|r| &r.firm_id == firm)
            .filter_map(|r| r.se)
            .collect();
        let tfpg: Vec<f64> = records
            .iter()
            .filter(|r| &r.firm_id == firm)
            .filter_map(|r| r.tfpg)
            .collect();
        let corr = if se.len() >= 2 { Some(correlation(&se, &tfpg)) } else { None };
        per_firm.push(json!({ "firm": firm, "corr_se_tfpg": corr, "n_growth_years": se.len() }));
    }
    let summary = json!({
        "per_firm": per_firm,
        "n_year_gaps": records.iter().filter(|r| r.year_gap).count(),
    });
    write_json(&cfg.out_dir.join("tfpg_summary.json"), &summary)?;

    if cfg.charts {
        let text = fs::read_to_string(&csv_path)?;
        let rows = chart::parse_tfpg_csv(&text)?;
        for firm in &p.dataset.firms {
            let svg = chart::tfpg_chart(firm, &rows)?;
            let safe: String = firm
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
                .collect();
            fs::write(cfg.out_dir.join(format!("tfpg_{safe}.svg")), svg)?;
        }
    }
    say!("tfpg: {} records -> {}", records.len(), csv_path.display());
    Ok(())
}

pub fn cmd_efficiency(cfg: &RunConfig) -> Result<u8> {
    let p = load_pipeline(cfg)?;
    let fr = fit(&p.design, &p.spec, &OptimOptions::default())?;
    fs::create_dir_all(&cfg.out_dir)?;
    efficiency_outputs(cfg, &p, &fr)?;
    write_manifest(cfg, &p.spec, "efficiency")?;
    Ok(if fr.converged { EXIT_OK } else { EXIT_NON_CONVERGENCE })
}

pub fn cmd_tfpg(cfg: &RunConfig) -> Result<u8> {
    let p = load_pipeline(cfg)?;
    let fr = fit(&p.design, &p.spec, &OptimOptions::default())?;
    fs::create_dir_all(&cfg.out_dir)?;
    tfpg_outputs(cfg, &p, &fr)?;
    write_manifest(cfg, &p.spec, "tfpg")?;
    Ok(if fr.converged { EXIT_OK } else { EXIT_NON_CONVERGENCE })
}

/// Simulation settings derived from the run configuration; the truth is the
/// built-in demo coefficient table projected onto the restriction manifold.
pub fn build_sim_config(cfg: &RunConfig) -> Result<SimConfig> {
    let spec = model_spec(cfg);
    let n_dummies = if spec.include_dummies {
        cfg.n_firms.saturating_sub(1)
    } else {
        0
    };
    let idx = TermIndex::new(&spec, n_dummies)?;
    let raw = demo_beta_raw(&idx)?;
    let rs = build_restrictions(&spec, &idx)?;
    let rp = reparameterize(&rs)?;
    let beta = rp.project(&raw);
    let n_inputs = spec.input_names.len();
    Ok(SimConfig {
        n_firms: cfg.n_firms,
        n_years: cfg.n_years,
        base_year: cfg.base_year,
        spec,
        true_beta: beta.iter().copied().collect(),
        noise_sigma: cfg.sigma,
        true_alpha: None,
        input_log_ranges: vec![(-0.5, 0.5); n_inputs],
        output_log_range: (-0.5, 0.5),
        n_european: cfg.n_european,
        seed: cfg.seed,
        censor_target: cfg.censor_target,
    })
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<u8> {
    let sim = build_sim_config(cfg)?;
    let gen = generate(&sim)?;
    fs::create_dir_all(&cfg.out_dir)?;

    let schema = CsvSchema {
        inputs: sim.spec.input_names.clone(),
        ..CsvSchema::default()
    };
    write_csv(&gen.dataset, &cfg.out_dir.join("dataset.csv"), &schema)?;

    let idx = gen.truth.terms();
    let truth = json!({
        "seed": sim.seed,
        "noise_sigma": sim.noise_sigma,
        "censored": gen.censored.iter().filter(|&&c| c).count(),
        "n_obs": gen.dataset.n_obs(),
        "coefficients": idx
            .names()
            .iter()
            .zip(gen.truth.beta().iter())
            .map(|(name, value)| json!({ "name": name, "value": value }))
            .collect::<Vec<_>>(),
        "alpha": gen.truth.alpha().iter().copied().collect::<Vec<f64>>(),
        "rules": gen.rules,
    });
    write_json(&cfg.out_dir.join("truth.json"), &truth)?;

    // ready-to-use configuration for running the pipeline on the output
    let brexit_firms: Vec<String> = gen.rules.brexit_firms.iter().cloned().collect();
    let cfg_text = format!(
        "# pipeline configuration for the generated dataset\n\
         input = dataset.csv\n\
         firm_col = firm\nyear_col = year\nlf_col = lf\noutput_col = y\n\
         input_cols = {}\n\
         het = {}\ntrend_squared = {}\ndummies = {}\n\
         brexit_firms = {}\n\
         brexit_years = {}-{}\n\
         covid_years = {}-{}\n",
        sim.spec.input_names.join(","),
        sim.spec.heteroskedastic,
        sim.spec.include_trend_squared,
        sim.spec.include_dummies,
        brexit_firms.join(","),
        gen.rules.brexit_years.start(),
        gen.rules.brexit_years.end(),
        gen.rules.covid_years.start(),
        gen.rules.covid_years.end(),
    );
    fs::write(cfg.out_dir.join("dataset.cfg"), cfg_text)?;

    if cfg.reps > 1 {
        let report = monte_carlo(&sim, cfg.reps, &OptimOptions::default())?;
        write_json(&cfg.out_dir.join("mc_report.json"), &report)?;
        say!(
            "monte carlo: {} replications, {} failures, mean TEI correlation {:.4}",
            report.reps, report.failures, report.mean_tei_correlation
        );
    }
    write_manifest(cfg, &sim.spec, "simulate")?;
    say!(
        "simulated {} firms x {} years ({} censored) -> {}",
        sim.n_firms,
        sim.n_years,
        gen.censored.iter().filter(|&&c| c).count(),
        cfg.out_dir.join("dataset.csv").display()
    );
    Ok(EXIT_OK)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<u8> {
    let p = load_pipeline(cfg)?;
    let opts = OptimOptions::default();
    let fr = fit(&p.design, &p.spec, &opts)?;
    fs::create_dir_all(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("fit.json"), &fr.report())?;
    print_fit(&fr);

    let (results, tests_converged) = run_tests(&p)?;
    write_json(&cfg.out_dir.join("tests.json"), &json!({ "specification_tests": results }))?;
    print_tests(&results);

    efficiency_outputs(cfg, &p, &fr)?;
    tfpg_outputs(cfg, &p, &fr)?;
    write_manifest(cfg, &p.spec, "report")?;
    Ok(if fr.converged && tests_converged {
        EXIT_OK
    } else {
        EXIT_NON_CONVERGENCE
    })
}
