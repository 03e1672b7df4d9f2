//! End-to-end pipeline: generate -> transform -> fit -> test -> post-estimate,
//! checking the cross-module invariants on the way through.

use tei_core::design::{build_restrictions, reparameterize, DesignMatrix, Term};
use tei_core::efficiency::{compute_tei, summarize_elasticities, tfpg_decompose};
use tei_core::inference::run_specification_tests;
use tei_core::optim::OptimOptions;
use tei_core::panel::{transform, PanelDataset, DEFAULT_CENSOR_TOL};
use tei_core::simulate::{correlation, demo_beta_raw, generate, SimConfig};
use tei_core::tobit::fit;

#[test]
fn full_pipeline_on_synthetic_panel() {
    let cfg = SimConfig::demo(4242).unwrap();
    let gen = generate(&cfg).unwrap();
    let tobs = transform(&gen.dataset, &gen.rules, DEFAULT_CENSOR_TOL);
    let design = DesignMatrix::build(&tobs, &cfg.spec).unwrap();
    assert_eq!(design.n_obs(), 190);

    let opts = OptimOptions::default();
    let fr = fit(&design, &cfg.spec, &opts).unwrap();
    assert!(fr.converged, "gradient norm {}", fr.gradient_norm);

    // restrictions hold on the fitted coefficients
    let rs = build_restrictions(&cfg.spec, &design.terms).unwrap();
    assert!(rs.residual_inf_norm(fr.coefficients.beta()) < 1e-10);

    // the fit tracks the truth reasonably at this noise level
    let max_err = (fr.coefficients.beta() - gen.truth.beta()).amax();
    assert!(max_err < 0.5, "max coefficient error {max_err}");

    // specification tests: demo truth has curvature, scale economies, and
    // technical change, so every null is rejected on its own data
    let tests = run_specification_tests(&design, &cfg.spec, &opts).unwrap();
    assert_eq!(tests.len(), 3);
    for t in &tests {
        assert!(t.stat >= 0.0);
        assert!((0.0..=1.0).contains(&t.p_value));
        assert!(t.loglik_restricted <= t.loglik_unrestricted + 1e-6);
        assert!(t.p_value < 0.05, "{}: p {}", t.name, t.p_value);
    }

    // efficiency records: elasticity sums and TEI-truth agreement
    let recs = compute_tei(&fr.coefficients, &tobs, false).unwrap();
    for r in &recs {
        let sum: f64 = r.elasticity_inputs.iter().sum();
        assert!((sum + 1.0).abs() < 1e-10);
        assert!(r.tei > 0.0);
    }
    let est: Vec<f64> = recs.iter().map(|r| r.tei).collect();
    assert!(correlation(&gen.true_tei, &est) > 0.95);

    let summary = summarize_elasticities(fr.coefficients.terms(), &recs);
    assert_eq!(summary.input_names, vec!["K", "L", "E"]);

    // decomposition identities on every record
    let tfpg = tfpg_decompose(&fr.coefficients, &tobs).unwrap();
    let mut growth_rows = 0;
    for r in &tfpg {
        assert!((r.tc - (r.dtc + r.etc + r.stc)).abs() < 1e-12);
        if let (Some(se), Some(v)) = (r.se, r.tfpg) {
            growth_rows += 1;
            assert!((v - (r.tc + se)).abs() < 1e-12);
        }
    }
    assert_eq!(growth_rows, 190 - 19); // every firm loses its first year

    // the JSON report carries the full coefficient table
    let json = serde_json::to_value(fr.report()).unwrap();
    assert_eq!(json["coefficients"].as_array().unwrap().len(), 40);
    assert!(json["convergence"]["converged"].as_bool().unwrap());
}

#[test]
fn trend_squared_variant_recovers_its_coefficient() {
    let mut cfg = SimConfig::demo(99).unwrap();
    cfg.spec.include_trend_squared = true;
    cfg.spec.include_dummies = false;
    cfg.spec.heteroskedastic = false;
    cfg.n_firms = 10;
    cfg.n_years = 8;
    cfg.noise_sigma = 0.03;
    cfg.censor_target = Some(0.05);

    let idx = cfg.term_index().unwrap();
    let tt = idx.position(Term::TrendTrend).unwrap();
    let mut raw = demo_beta_raw(&idx).unwrap();
    raw[tt] = -0.004;
    let rs = build_restrictions(&cfg.spec, &idx).unwrap();
    let rp = reparameterize(&rs).unwrap();
    let projected = rp.project(&raw);
    // the squared-trend coordinate is untouched by the homogeneity projection
    assert_eq!(projected[tt], -0.004);
    cfg.true_beta = projected.iter().copied().collect();

    let gen = generate(&cfg).unwrap();
    let tobs = transform(&gen.dataset, &gen.rules, DEFAULT_CENSOR_TOL);
    let design = DesignMatrix::build(&tobs, &cfg.spec).unwrap();
    let opts = OptimOptions::default();
    let fr = fit(&design, &cfg.spec, &opts).unwrap();
    assert!(fr.converged);
    let err = (fr.coefficients.beta()[tt] - (-0.004)).abs();
    assert!(err < 0.01, "squared-trend coefficient off by {err}");

    // the hypothesis machinery picks the extra term up as well
    let tests = run_specification_tests(&design, &cfg.spec, &opts).unwrap();
    assert_eq!(tests.len(), 3);
}

#[test]
fn unbalanced_panel_runs_end_to_end() {
    let mut cfg = SimConfig::demo(7).unwrap();
    cfg.spec.heteroskedastic = false;
    let gen = generate(&cfg).unwrap();

    // drop every firm's 2015 row and the first two years of firm F03
    let observations: Vec<_> = gen
        .dataset
        .observations
        .iter()
        .filter(|o| o.year != 2015 && !(o.firm_id == "F03" && o.year < 2014))
        .cloned()
        .collect();
    let ds = PanelDataset::new("y", &gen.dataset.input_names, observations).unwrap();
    assert_eq!(ds.n_obs(), 190 - 19 - 2);

    let tobs = transform(&ds, &gen.rules, DEFAULT_CENSOR_TOL);
    let design = DesignMatrix::build(&tobs, &cfg.spec).unwrap();
    let fr = fit(&design, &cfg.spec, &OptimOptions::default()).unwrap();
    assert!(fr.converged);

    let records = tfpg_decompose(&fr.coefficients, &tobs).unwrap();
    // the 2014 -> 2016 difference is flagged for every firm
    let gaps = records.iter().filter(|r| r.year_gap).count();
    assert_eq!(gaps, 19);
    // firms lose exactly one growth year each (two rows gone for F03, but the
    // 2012/2013 drop only removes its first difference)
    let growth_rows = records.iter().filter(|r| r.se.is_some()).count();
    assert_eq!(growth_rows, ds.n_obs() - 19);
    for r in &records {
        assert!((r.tc - (r.dtc + r.etc + r.stc)).abs() < 1e-12);
        if let (Some(se), Some(v)) = (r.se, r.tfpg) {
            assert!((v - (r.tc + se)).abs() < 1e-12);
        }
    }
}
