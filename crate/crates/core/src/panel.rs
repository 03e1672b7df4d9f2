//! Panel-data ingestion and the log/mean-scaled transform the model consumes.
//!
//! A dataset is a set of firm-year observations carrying a load factor in
//! (0, 1], one output, and a positive value per input. The transform turns
//! each observation into `ln D = -ln LF` (left-censored at zero when LF = 1),
//! mean-scaled logs of output and inputs, a trend counted from the first
//! sample year, and firm/Brexit/Covid dummies.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;
use std::path::Path;

use crate::error::{Error, Result};

/// Default tolerance for detecting a unit load factor.
pub const DEFAULT_CENSOR_TOL: f64 = 1e-12;

/// Column-to-role mapping for the CSV schema `firm,year,lf,<output>,<inputs...>`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CsvSchema {
    pub firm: String,
    pub year: String,
    pub lf: String,
    pub output: String,
    pub inputs: Vec<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            firm: "firm".into(),
            year: "year".into(),
            lf: "lf".into(),
            output: "y".into(),
            inputs: vec!["K".into(), "L".into(), "E".into()],
        }
    }
}

/// One firm-year row. `inputs` is aligned with the dataset's `input_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelObservation {
    pub firm_id: String,
    pub year: i32,
    pub load_factor: f64,
    pub output: f64,
    pub inputs: Vec<f64>,
}

/// A validated panel: rows sorted by (firm, year), unique keys, strictly
/// increasing years per firm, and all means strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    pub output_name: String,
    pub input_names: Vec<String>,
    pub observations: Vec<PanelObservation>,
    pub firms: Vec<String>,
    pub years: Vec<i32>,
    pub variable_means: BTreeMap<String, f64>,
}

impl PanelDataset {
    /// Validate and index a set of observations. Balanced and unbalanced
    /// panels are both accepted.
    pub fn new(
        output_name: &str,
        input_names: &[String],
        mut observations: Vec<PanelObservation>,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidData("dataset has no observations".into()));
        }
        observations.sort_by(|a, b| (a.firm_id.as_str(), a.year).cmp(&(b.firm_id.as_str(), b.year)));

        let mut seen: BTreeSet<(String, i32)> = BTreeSet::new();
        for obs in &observations {
            if obs.inputs.len() != input_names.len() {
                return Err(Error::DimensionMismatch {
                    expected: input_names.len(),
                    actual: obs.inputs.len(),
                });
            }
            if !seen.insert((obs.firm_id.clone(), obs.year)) {
                return Err(Error::DuplicateKey {
                    firm: obs.firm_id.clone(),
                    year: obs.year,
                });
            }
        }

        let firms: Vec<String> = {
            let mut v: Vec<String> = Vec::new();
            for obs in &observations {
                if v.last().map(String::as_str) != Some(obs.firm_id.as_str()) {
                    v.push(obs.firm_id.clone());
                }
            }
            v
        };
        let years: Vec<i32> = {
            let set: BTreeSet<i32> = observations.iter().map(|o| o.year).collect();
            set.into_iter().collect()
        };

        let n = observations.len() as f64;
        let mut variable_means = BTreeMap::new();
        let mean_y = observations.iter().map(|o| o.output).sum::<f64>() / n;
        variable_means.insert(output_name.to_string(), mean_y);
        for (j, name) in input_names.iter().enumerate() {
            let m = observations.iter().map(|o| o.inputs[j]).sum::<f64>() / n;
            variable_means.insert(name.clone(), m);
        }
        for (name, m) in &variable_means {
            if !(*m > 0.0) {
                return Err(Error::InvalidData(format!("mean of `{name}` is not positive")));
            }
        }

        Ok(PanelDataset {
            output_name: output_name.to_string(),
            input_names: input_names.to_vec(),
            observations,
            firms,
            years,
            variable_means,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.observations.len()
    }

    pub fn base_year(&self) -> i32 {
        self.years[0]
    }
}

/// Load and validate a panel from CSV. Decimal point `.`, no thousands
/// separators, UTF-8, header required.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<PanelDataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let firm_col = col(&schema.firm)?;
    let year_col = col(&schema.year)?;
    let lf_col = col(&schema.lf)?;
    let output_col = col(&schema.output)?;
    let input_cols: Vec<usize> =
        schema.inputs.iter().map(|c| col(c)).collect::<Result<Vec<_>>>()?;

    let mut observations = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // header is line 1
        let record = record?;
        let field = |idx: usize, name: &str| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::ParseValue {
                row,
                column: name.to_string(),
                message: "missing field".into(),
            })
        };
        let parse = |idx: usize, name: &str| -> Result<f64> {
            let raw = field(idx, name)?;
            raw.parse::<f64>().map_err(|e| Error::ParseValue {
                row,
                column: name.to_string(),
                message: e.to_string(),
            })
        };

        let firm_id = field(firm_col, &schema.firm)?.to_string();
        let year: i32 = field(year_col, &schema.year)?.parse().map_err(|e: std::num::ParseIntError| {
            Error::ParseValue {
                row,
                column: schema.year.clone(),
                message: e.to_string(),
            }
        })?;
        let lf_raw = parse(lf_col, &schema.lf)?;
        if !(lf_raw > 0.0) || lf_raw > 1.0 + DEFAULT_CENSOR_TOL || !lf_raw.is_finite() {
            return Err(Error::LoadFactorOutOfRange { row, value: lf_raw });
        }
        let load_factor = lf_raw.min(1.0);

        let check_positive = |value: f64, column: &str| -> Result<f64> {
            if !(value > 0.0) || !value.is_finite() {
                Err(Error::NonPositiveValue {
                    row,
                    column: column.to_string(),
                    value,
                })
            } else {
                Ok(value)
            }
        };
        let output = check_positive(parse(output_col, &schema.output)?, &schema.output)?;
        let mut inputs = Vec::with_capacity(input_cols.len());
        for (j, &idx) in input_cols.iter().enumerate() {
            inputs.push(check_positive(parse(idx, &schema.inputs[j])?, &schema.inputs[j])?);
        }

        observations.push(PanelObservation {
            firm_id,
            year,
            load_factor,
            output,
            inputs,
        });
    }

    PanelDataset::new(&schema.output, &schema.inputs, observations)
}

/// Write a dataset back to the standard CSV schema. Values use the shortest
/// round-trip decimal form, so `load_csv(write_csv(ds)) == ds`.
pub fn write_csv(ds: &PanelDataset, path: &Path, schema: &CsvSchema) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![schema.firm.clone(), schema.year.clone(), schema.lf.clone(), schema.output.clone()];
    header.extend(schema.inputs.iter().cloned());
    writer.write_record(&header)?;
    for obs in &ds.observations {
        let mut rec = vec![
            obs.firm_id.clone(),
            obs.year.to_string(),
            format!("{}", obs.load_factor),
            format!("{}", obs.output),
        ];
        for v in &obs.inputs {
            rec.push(format!("{v}"));
        }
        writer.write_record(&rec)?;
    }
    writer.flush()?;
    Ok(())
}

/// A mean-scaled, log-transformed observation ready for design expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedObservation {
    pub firm_id: String,
    pub year: i32,
    /// -ln(LF); exactly zero iff censored.
    pub ln_distance: f64,
    pub is_censored: bool,
    /// ln(y / mean(y)).
    pub ln_output: f64,
    /// ln(x_j / mean(x_j)), aligned with the dataset's input order.
    pub ln_inputs: Vec<f64>,
    /// year - base_year.
    pub trend: f64,
    /// 0/1 indicators for firms 2..n; the first firm is the reference.
    pub firm_dummies: Vec<f64>,
    pub brexit: f64,
    pub covid: f64,
}

impl TransformedObservation {
    /// An observation sitting exactly at the sample means with t = 0 and all
    /// dummies zero. Useful for evaluating fitted models at the mean point.
    pub fn mean_point(n_inputs: usize, n_firm_dummies: usize) -> Self {
        TransformedObservation {
            firm_id: String::new(),
            year: 0,
            ln_distance: 0.0,
            is_censored: true,
            ln_output: 0.0,
            ln_inputs: vec![0.0; n_inputs],
            trend: 0.0,
            firm_dummies: vec![0.0; n_firm_dummies],
            brexit: 0.0,
            covid: 0.0,
        }
    }
}

/// Rules deciding the Brexit and Covid dummies.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DummyRules {
    /// Firms subject to the Brexit dummy within `brexit_years`.
    pub brexit_firms: BTreeSet<String>,
    pub brexit_years: RangeInclusive<i32>,
    pub covid_years: RangeInclusive<i32>,
}

impl Default for DummyRules {
    fn default() -> Self {
        DummyRules {
            brexit_firms: BTreeSet::new(),
            brexit_years: 2017..=2019,
            covid_years: 2020..=2021,
        }
    }
}

/// Transform a dataset with predicate-style dummy rules.
pub fn transform_with<FB, FC>(
    ds: &PanelDataset,
    brexit: FB,
    covid: FC,
    censor_tol: f64,
) -> Vec<TransformedObservation>
where
    FB: Fn(&str, i32) -> bool,
    FC: Fn(i32) -> bool,
{
    let base_year = ds.base_year();
    let firm_pos: BTreeMap<&str, usize> =
        ds.firms.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();
    let n_dummies = ds.firms.len().saturating_sub(1);
    let mean_y = ds.variable_means[&ds.output_name];
    let input_means: Vec<f64> = ds.input_names.iter().map(|n| ds.variable_means[n]).collect();

    ds.observations
        .iter()
        .map(|obs| {
            let is_censored = obs.load_factor >= 1.0 - censor_tol;
            let ln_distance = if is_censored { 0.0 } else { -obs.load_factor.ln() };
            let mut firm_dummies = vec![0.0; n_dummies];
            let pos = firm_pos[obs.firm_id.as_str()];
            if pos > 0 {
                firm_dummies[pos - 1] = 1.0;
            }
            TransformedObservation {
                firm_id: obs.firm_id.clone(),
                year: obs.year,
                ln_distance,
                is_censored,
                ln_output: (obs.output / mean_y).ln(),
                ln_inputs: obs
                    .inputs
                    .iter()
                    .zip(&input_means)
                    .map(|(v, m)| (v / m).ln())
                    .collect(),
                trend: f64::from(obs.year - base_year),
                firm_dummies,
                brexit: if brexit(&obs.firm_id, obs.year) { 1.0 } else { 0.0 },
                covid: if covid(obs.year) { 1.0 } else { 0.0 },
            }
        })
        .collect()
}

/// Transform a dataset using [`DummyRules`].
pub fn transform(
    ds: &PanelDataset,
    rules: &DummyRules,
    censor_tol: f64,
) -> Vec<TransformedObservation> {
    transform_with(
        ds,
        |firm, year| rules.brexit_firms.contains(firm) && rules.brexit_years.contains(&year),
        |year| rules.covid_years.contains(&year),
        censor_tol,
    )
}
