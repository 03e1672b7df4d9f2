//! Post-estimation: efficiency indices, elasticities, returns to scale,
//! technical change, and the four-component TFP-growth decomposition.
//!
//! The index is absolute: `TEI = exp(-ln D)`, the reciprocal of the fitted
//! input distance. Because the distance function is homogeneous of degree one
//! in inputs, TEI is homogeneous of degree minus one, so the input
//! elasticities of TEI sum to exactly -1 at every point.

use crate::design::{expand_row, Term, TermIndex};
use crate::error::{Error, Result};
use crate::panel::TransformedObservation;
use crate::tobit::CoefficientSet;

/// Rts is undefined below this output-elasticity magnitude.
const EPS_DY_MIN: f64 = 1e-10;

/// Per-observation efficiency and elasticities.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EfficiencyRecord {
    pub firm_id: String,
    pub year: i32,
    pub fitted_ln_distance: f64,
    pub tei: f64,
    pub clamped: bool,
    /// d ln TEI / d ln x_j, aligned with the model's input order; sums to -1.
    pub elasticity_inputs: Vec<f64>,
    /// d ln TEI / d ln y = eps_Dy.
    pub elasticity_output: f64,
    /// -d ln D / d ln y.
    pub eps_dy: f64,
    /// 1 / eps_Dy; infinite when the output elasticity vanishes.
    pub rts: f64,
}

/// Technical change split into its disembodied, embodied, and scale parts.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TechChange {
    pub dtc: f64,
    pub etc: f64,
    pub stc: f64,
    pub tc: f64,
}

/// One firm-year row of the TFP-growth decomposition. The first year per
/// firm carries the technical-change parts only.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TfpgRecord {
    pub firm_id: String,
    pub year: i32,
    pub dtc: f64,
    pub etc: f64,
    pub stc: f64,
    pub tc: f64,
    pub se: Option<f64>,
    pub tfpg: Option<f64>,
    pub delta_ln_y: Option<f64>,
    /// True when the differenced years are more than one year apart.
    pub year_gap: bool,
}

fn check_inputs(coefs: &CoefficientSet, obs: &TransformedObservation) -> Result<()> {
    let n = coefs.terms().n_inputs();
    if obs.ln_inputs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: obs.ln_inputs.len(),
        });
    }
    Ok(())
}

// d ln D / d ln x_j = b_j + sum_k b_jk ln x_k + b_jy ln y + b_jt t
fn dlnd_dlnx(coefs: &CoefficientSet, obs: &TransformedObservation) -> Vec<f64> {
    let idx = coefs.terms();
    let n = idx.n_inputs();
    let beta = coefs.beta();
    let at = |t: Term| beta[idx.position(t).expect("core term")];
    (0..n)
        .map(|j| {
            let mut d = at(Term::Input(j));
            for k in 0..n {
                d += at(Term::InputInput(j, k)) * obs.ln_inputs[k];
            }
            d += at(Term::InputOutput(j)) * obs.ln_output;
            d += at(Term::InputTrend(j)) * obs.trend;
            d
        })
        .collect()
}

// d ln D / d ln y = b_y + b_yy ln y + sum_j b_jy ln x_j + b_ty t
fn dlnd_dlny(coefs: &CoefficientSet, obs: &TransformedObservation) -> f64 {
    let idx = coefs.terms();
    let beta = coefs.beta();
    let at = |t: Term| beta[idx.position(t).expect("core term")];
    let mut d = at(Term::Output) + at(Term::OutputOutput) * obs.ln_output;
    for j in 0..idx.n_inputs() {
        d += at(Term::InputOutput(j)) * obs.ln_inputs[j];
    }
    d + at(Term::TrendOutput) * obs.trend
}

/// Input and output elasticities of TEI plus returns to scale at one point.
/// Errors with `DegenerateScale` when the output elasticity vanishes.
pub fn elasticities(
    coefs: &CoefficientSet,
    obs: &TransformedObservation,
) -> Result<(Vec<f64>, f64, f64)> {
    check_inputs(coefs, obs)?;
    let inputs: Vec<f64> = dlnd_dlnx(coefs, obs).into_iter().map(|d| -d).collect();
    let eps_dy = -dlnd_dlny(coefs, obs);
    if eps_dy.abs() < EPS_DY_MIN {
        return Err(Error::DegenerateScale);
    }
    Ok((inputs, eps_dy, 1.0 / eps_dy))
}

/// Technical change and its components at one point:
/// `dtc = b_t + b_tt t`, `etc = sum_j b_jt ln x_j`, `stc = b_ty ln y`.
pub fn technical_change(coefs: &CoefficientSet, obs: &TransformedObservation) -> Result<TechChange> {
    check_inputs(coefs, obs)?;
    let idx = coefs.terms();
    let beta = coefs.beta();
    let at = |t: Term| beta[idx.position(t).expect("core term")];
    let mut dtc = at(Term::Trend);
    if let Some(btt) = coefs.trend_trend() {
        dtc += btt * obs.trend;
    }
    let mut etc = 0.0;
    for j in 0..idx.n_inputs() {
        etc += at(Term::InputTrend(j)) * obs.ln_inputs[j];
    }
    let stc = at(Term::TrendOutput) * obs.ln_output;
    Ok(TechChange {
        dtc,
        etc,
        stc,
        tc: dtc + etc + stc,
    })
}

/// Efficiency records for a set of observations. `clamp` replaces indices
/// above one by one (flagged); otherwise values above one are reported raw
/// with the flag set.
pub fn compute_tei(
    coefs: &CoefficientSet,
    obs: &[TransformedObservation],
    clamp: bool,
) -> Result<Vec<EfficiencyRecord>> {
    obs.iter()
        .map(|o| {
            check_inputs(coefs, o)?;
            let mu = expand_row(o, coefs.terms())?.dot(coefs.beta());
            let raw = (-mu).exp();
            let above = raw > 1.0;
            let tei = if clamp && above { 1.0 } else { raw };
            let elasticity_inputs: Vec<f64> =
                dlnd_dlnx(coefs, o).into_iter().map(|d| -d).collect();
            let eps_dy = -dlnd_dlny(coefs, o);
            Ok(EfficiencyRecord {
                firm_id: o.firm_id.clone(),
                year: o.year,
                fitted_ln_distance: mu,
                tei,
                clamped: clamp && above,
                elasticity_inputs,
                elasticity_output: eps_dy,
                eps_dy,
                rts: 1.0 / eps_dy,
            })
        })
        .collect()
}

/// TFP-growth decomposition over per-firm consecutive observations, sorted by
/// (firm, year). The scale-economies part uses the current-period output
/// elasticity: `se = (1 - eps_Dy) * (ln y_t - ln y_{t-1})`. Year gaps still
/// difference the adjacent available years and set `year_gap`.
pub fn tfpg_decompose(
    coefs: &CoefficientSet,
    obs: &[TransformedObservation],
) -> Result<Vec<TfpgRecord>> {
    let mut out = Vec::with_capacity(obs.len());
    let mut prev: Option<&TransformedObservation> = None;
    for o in obs {
        check_inputs(coefs, o)?;
        let tc = technical_change(coefs, o)?;
        if let Some(p) = prev {
            if (o.firm_id.as_str(), o.year) <= (p.firm_id.as_str(), p.year) {
                return Err(Error::InvalidData(format!(
                    "observations not sorted by (firm, year) at ({}, {})",
                    o.firm_id, o.year
                )));
            }
        }
        let pred = prev.filter(|p| p.firm_id == o.firm_id);
        let record = match pred {
            Some(p) => {
                let eps_dy = -dlnd_dlny(coefs, o);
                let delta_ln_y = o.ln_output - p.ln_output;
                let se = (1.0 - eps_dy) * delta_ln_y;
                TfpgRecord {
                    firm_id: o.firm_id.clone(),
                    year: o.year,
                    dtc: tc.dtc,
                    etc: tc.etc,
                    stc: tc.stc,
                    tc: tc.tc,
                    se: Some(se),
                    tfpg: Some(tc.tc + se),
                    delta_ln_y: Some(delta_ln_y),
                    year_gap: o.year - p.year > 1,
                }
            }
            None => TfpgRecord {
                firm_id: o.firm_id.clone(),
                year: o.year,
                dtc: tc.dtc,
                etc: tc.etc,
                stc: tc.stc,
                tc: tc.tc,
                se: None,
                tfpg: None,
                delta_ln_y: None,
                year_gap: false,
            },
        };
        out.push(record);
        prev = Some(o);
    }
    Ok(out)
}

/// Observation-weighted and firm-then-time averages of the TEI elasticities.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ElasticitySummary {
    pub input_names: Vec<String>,
    /// Mean over all observations.
    pub mean_inputs_observation: Vec<f64>,
    pub mean_output_observation: f64,
    /// Mean of per-firm time averages.
    pub mean_inputs_firm_then_time: Vec<f64>,
    pub mean_output_firm_then_time: f64,
}

/// Both elasticity summaries plus nothing else; callers decide presentation.
pub fn summarize_elasticities(idx: &TermIndex, records: &[EfficiencyRecord]) -> ElasticitySummary {
    let n_inputs = idx.n_inputs();
    let n = records.len().max(1) as f64;
    let mut mean_inputs_observation = vec![0.0; n_inputs];
    let mut mean_output_observation = 0.0;
    for r in records {
        for j in 0..n_inputs {
            mean_inputs_observation[j] += r.elasticity_inputs[j] / n;
        }
        mean_output_observation += r.elasticity_output / n;
    }

    let mut firms: Vec<&str> = records.iter().map(|r| r.firm_id.as_str()).collect();
    firms.sort_unstable();
    firms.dedup();
    let nf = firms.len().max(1) as f64;
    let mut mean_inputs_firm_then_time = vec![0.0; n_inputs];
    let mut mean_output_firm_then_time = 0.0;
    for firm in &firms {
        let rows: Vec<&EfficiencyRecord> =
            records.iter().filter(|r| r.firm_id == *firm).collect();
        let nt = rows.len().max(1) as f64;
        for j in 0..n_inputs {
            let firm_mean: f64 = rows.iter().map(|r| r.elasticity_inputs[j]).sum::<f64>() / nt;
            mean_inputs_firm_then_time[j] += firm_mean / nf;
        }
        mean_output_firm_then_time +=
            rows.iter().map(|r| r.elasticity_output).sum::<f64>() / nt / nf;
    }

    ElasticitySummary {
        input_names: idx.input_names().to_vec(),
        mean_inputs_observation,
        mean_output_observation,
        mean_inputs_firm_then_time,
        mean_output_firm_then_time,
    }
}
