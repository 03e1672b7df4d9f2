//! Synthetic panel generator and Monte Carlo recovery harness.
//!
//! The generator inverts the model: it draws log inputs and log output
//! uniformly over configured ranges, evaluates the restricted translog at the
//! realized (mean-scaled) values, adds Gaussian noise, and maps the latent
//! index to a load factor via `LF = exp(-max(0, ln D))`, so censored
//! observations are exactly those with a nonpositive latent index.
//!
//! Randomness is fully determined by the seed: draws come from ChaCha8
//! seeded per replication with a SplitMix64 hash of `(seed, replication)`,
//! uniforms take the top 53 bits of each 64-bit word, and normals use the
//! Box-Muller transform. Output is platform-independent.

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::design::{
    build_restrictions, expand_row, reparameterize, DesignMatrix, ModelSpec, Term, TermIndex,
};
use crate::efficiency::compute_tei;
use crate::error::{Error, Result};
use crate::optim::OptimOptions;
use crate::panel::{
    transform, DummyRules, PanelDataset, PanelObservation, TransformedObservation,
    DEFAULT_CENSOR_TOL,
};
use crate::tobit::{fit, CoefficientSet};

/// Configuration of one synthetic panel.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_firms: usize,
    pub n_years: usize,
    pub base_year: i32,
    pub spec: ModelSpec,
    /// Structural truth in `TermIndex` order; must satisfy the spec's
    /// restriction set.
    pub true_beta: Vec<f64>,
    /// Homoskedastic noise scale; ignored when `true_alpha` is set.
    pub noise_sigma: f64,
    /// Variance-equation truth for heteroskedastic noise.
    pub true_alpha: Option<Vec<f64>>,
    /// Sampling interval of ln(x_j) around its base level, per input.
    pub input_log_ranges: Vec<(f64, f64)>,
    pub output_log_range: (f64, f64),
    /// The first `n_european` firms carry the Brexit dummy.
    pub n_european: usize,
    pub seed: u64,
    /// Target fraction of censored observations, reached by shifting the
    /// intercept; the returned truth carries the adjusted value. `Some(0.0)`
    /// shifts all latent indices strictly positive. `None` leaves the
    /// intercept alone.
    pub censor_target: Option<f64>,
}

// Raw levels the log draws multiply; chosen at realistic airline magnitudes
// (revenue in M$, capital in M$, employees, fuel in Mgal).
const BASE_OUTPUT: f64 = 18_531.09;
const BASE_INPUTS: [f64; 3] = [1_584.65, 57_850.89, 1_980.30];

/// A realistic full coefficient table (three inputs, 18 firm dummies,
/// Brexit/Covid) used by the demo configuration and the examples. Not exactly
/// homogeneous; project it before using it as a generator truth.
pub fn demo_beta_raw(idx: &TermIndex) -> Result<DVector<f64>> {
    let pairs: Vec<(Term, f64)> = vec![
        (Term::Constant, 0.297336),
        (Term::Output, -0.593745),
        (Term::Input(0), 0.204451),
        (Term::Input(1), 0.685113),
        (Term::Input(2), 0.110436),
        (Term::OutputOutput, 0.052062),
        (Term::InputOutput(0), 0.039240),
        (Term::InputOutput(1), 0.217154),
        (Term::InputOutput(2), -0.256393),
        (Term::InputInput(0, 0), 0.231760),
        (Term::InputInput(0, 1), 0.247746),
        (Term::InputInput(0, 2), -0.479506),
        (Term::InputInput(1, 1), -0.242152),
        (Term::InputInput(1, 2), -0.005594),
        (Term::InputInput(2, 2), 0.485100),
        (Term::Trend, -0.032827),
        (Term::TrendOutput, 0.007825),
        (Term::InputTrend(0), -0.002760),
        (Term::InputTrend(1), -0.012648),
        (Term::InputTrend(2), 0.015408),
    ];
    let dummy_values = [
        0.561021, 0.565005, -0.184319, -0.113492, 0.683347, -0.173345, -0.172615, -0.251890,
        0.066778, 0.649484, 0.152897, 0.070368, -0.180902, 0.402020, 0.492576, 0.400680, 0.197729,
        0.300541,
    ];
    let mut beta = DVector::zeros(idx.len());
    for (term, value) in pairs {
        beta[idx.position(term)?] = value;
    }
    if idx.has_dummies() {
        for (i, v) in dummy_values.iter().enumerate().take(idx.n_firm_dummies()) {
            beta[idx.position(Term::FirmDummy(i))?] = *v;
        }
        beta[idx.position(Term::Brexit)?] = -0.042064;
        beta[idx.position(Term::Covid)?] = 0.134461;
    }
    Ok(beta)
}

impl SimConfig {
    /// A 19-firm, 10-year panel with the demo coefficient table (projected
    /// onto the restriction manifold), moderate noise, dummies active.
    pub fn demo(seed: u64) -> Result<SimConfig> {
        let spec = ModelSpec::default();
        let idx = TermIndex::new(&spec, 18)?;
        let raw = demo_beta_raw(&idx)?;
        let rs = build_restrictions(&spec, &idx)?;
        let rp = reparameterize(&rs)?;
        let beta = rp.project(&raw);
        Ok(SimConfig {
            n_firms: 19,
            n_years: 10,
            base_year: 2012,
            spec,
            true_beta: beta.iter().copied().collect(),
            noise_sigma: 0.05,
            true_alpha: None,
            input_log_ranges: vec![(-0.5, 0.5); 3],
            output_log_range: (-0.5, 0.5),
            n_european: 6,
            seed,
            censor_target: None,
        })
    }

    pub fn term_index(&self) -> Result<TermIndex> {
        let n_dummies = if self.spec.include_dummies {
            self.n_firms.saturating_sub(1)
        } else {
            0
        };
        TermIndex::new(&self.spec, n_dummies)
    }

    fn firm_ids(&self) -> Vec<String> {
        let width = if self.n_firms >= 100 { 3 } else { 2 };
        (1..=self.n_firms).map(|i| format!("F{i:0w$}", w = width)).collect()
    }

    /// Dummy rules matching the generator's assignments: Brexit for the
    /// European subset five to seven years after the base year, Covid for
    /// the last two sample years.
    pub fn dummy_rules(&self) -> DummyRules {
        let last = self.base_year + self.n_years as i32 - 1;
        DummyRules {
            brexit_firms: self.firm_ids().into_iter().take(self.n_european).collect(),
            brexit_years: (self.base_year + 5)..=(self.base_year + 7),
            covid_years: (last - 1)..=last,
        }
    }
}

/// A generated panel with its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedPanel {
    pub dataset: PanelDataset,
    pub rules: DummyRules,
    /// The truth actually used (intercept possibly shifted for censoring).
    pub truth: CoefficientSet,
    /// Systematic index `x beta` per observation, in dataset row order.
    pub systematic: Vec<f64>,
    /// Latent index including noise; censored rows are exactly those <= 0.
    pub latent: Vec<f64>,
    /// `exp(-systematic)` per observation.
    pub true_tei: Vec<f64>,
    pub censored: Vec<bool>,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - uniform(rng, 0.0, 1.0); // (0, 1]
    let u2 = uniform(rng, 0.0, 1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Documented replication-seed split: `splitmix64(seed ^ splitmix64(rep))`.
pub fn rep_seed(seed: u64, rep: u64) -> u64 {
    splitmix64(seed ^ splitmix64(rep))
}

/// Generate one synthetic panel. Deterministic given the seed.
pub fn generate(cfg: &SimConfig) -> Result<GeneratedPanel> {
    if cfg.n_firms == 0 || cfg.n_years == 0 {
        return Err(Error::InvalidData("n_firms and n_years must be positive".into()));
    }
    let n_inputs = cfg.spec.input_names.len();
    if cfg.input_log_ranges.len() != n_inputs {
        return Err(Error::DimensionMismatch {
            expected: n_inputs,
            actual: cfg.input_log_ranges.len(),
        });
    }
    let idx = cfg.term_index()?;
    if cfg.true_beta.len() != idx.len() {
        return Err(Error::DimensionMismatch {
            expected: idx.len(),
            actual: cfg.true_beta.len(),
        });
    }
    let mut beta = DVector::from_vec(cfg.true_beta.clone());
    let rs = build_restrictions(&cfg.spec, &idx)?;
    let residual = rs.residual_inf_norm(&beta);
    if residual > 1e-8 {
        return Err(Error::InvalidTruth { max_residual: residual });
    }
    if let Some(alpha) = &cfg.true_alpha {
        let expected = if cfg.spec.heteroskedastic {
            cfg.spec.het_terms.len()
        } else {
            1
        };
        if alpha.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: alpha.len(),
            });
        }
    }

    let firm_ids = cfg.firm_ids();
    let rules = cfg.dummy_rules();
    let n = cfg.n_firms * cfg.n_years;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // pass 1: raw levels
    let mut raw_output = Vec::with_capacity(n);
    let mut raw_inputs: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let (lo, hi) = cfg.output_log_range;
        raw_output.push(BASE_OUTPUT * uniform(&mut rng, lo, hi).exp());
        let row: Vec<f64> = (0..n_inputs)
            .map(|j| {
                let base = BASE_INPUTS.get(j).copied().unwrap_or(1_000.0 * (j + 1) as f64);
                let (lo, hi) = cfg.input_log_ranges[j];
                base * uniform(&mut rng, lo, hi).exp()
            })
            .collect();
        raw_inputs.push(row);
    }

    // pass 2: mean-scaled logs and the systematic index
    let mean_y: f64 = raw_output.iter().sum::<f64>() / n as f64;
    let mean_x: Vec<f64> = (0..n_inputs)
        .map(|j| raw_inputs.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();

    let mut meta = Vec::with_capacity(n); // (firm index, firm id, year)
    for (fi, firm) in firm_ids.iter().enumerate() {
        for t in 0..cfg.n_years {
            meta.push((fi, firm.clone(), cfg.base_year + t as i32));
        }
    }

    let mut systematic = Vec::with_capacity(n);
    let mut het_rows: Vec<DVector<f64>> = Vec::with_capacity(n);
    let n_fd = idx.n_firm_dummies();
    for (i, (fi, firm, year)) in meta.iter().enumerate() {
        let mut o = TransformedObservation::mean_point(n_inputs, n_fd);
        o.firm_id = firm.clone();
        o.year = *year;
        o.ln_output = (raw_output[i] / mean_y).ln();
        for j in 0..n_inputs {
            o.ln_inputs[j] = (raw_inputs[i][j] / mean_x[j]).ln();
        }
        o.trend = f64::from(*year - cfg.base_year);
        if *fi > 0 && n_fd > 0 {
            o.firm_dummies[*fi - 1] = 1.0;
        }
        o.brexit = if rules.brexit_firms.contains(firm) && rules.brexit_years.contains(year) {
            1.0
        } else {
            0.0
        };
        o.covid = if rules.covid_years.contains(year) { 1.0 } else { 0.0 };
        systematic.push(expand_row(&o, &idx)?.dot(&beta));
        if cfg.true_alpha.is_some() {
            let terms = if cfg.spec.heteroskedastic {
                cfg.spec.het_terms.clone()
            } else {
                vec![crate::design::HetTerm::Constant]
            };
            let row = DVector::from_iterator(
                terms.len(),
                terms.iter().map(|t| match *t {
                    crate::design::HetTerm::Constant => 1.0,
                    crate::design::HetTerm::LnInput(j) => o.ln_inputs[j],
                    crate::design::HetTerm::LnOutput => o.ln_output,
                    crate::design::HetTerm::Trend => o.trend,
                }),
            );
            het_rows.push(row);
        }
    }

    // pass 3: noise and the latent index
    let mut latent = Vec::with_capacity(n);
    for i in 0..n {
        let sigma = match &cfg.true_alpha {
            Some(alpha) => {
                let a = DVector::from_vec(alpha.clone());
                (het_rows[i].dot(&a) / 2.0).exp()
            }
            None => cfg.noise_sigma,
        };
        let noise = if sigma > 0.0 { sigma * standard_normal(&mut rng) } else { 0.0 };
        latent.push(systematic[i] + noise);
    }

    // optional intercept shift to hit the censoring target
    if let Some(target) = cfg.censor_target {
        if !(0.0..1.0).contains(&target) {
            return Err(Error::InvalidData(format!(
                "censor_target {target} outside [0, 1)"
            )));
        }
        let mut sorted = latent.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let k = (target * n as f64).round() as usize;
        let spread = (sorted[n - 1] - sorted[0]).max(1e-6);
        let shift = if k == 0 {
            -(sorted[0] - 1e-3 * spread)
        } else if k >= n {
            return Err(Error::InvalidData("censor_target leaves no uncensored rows".into()));
        } else {
            -0.5 * (sorted[k - 1] + sorted[k])
        };
        let pos = idx.position(Term::Constant)?;
        beta[pos] += shift;
        for v in systematic.iter_mut() {
            *v += shift;
        }
        for v in latent.iter_mut() {
            *v += shift;
        }
    }

    let censored: Vec<bool> = latent.iter().map(|&v| v <= 0.0).collect();
    let true_tei: Vec<f64> = systematic.iter().map(|&v| (-v).exp()).collect();

    let observations: Vec<PanelObservation> = meta
        .iter()
        .enumerate()
        .map(|(i, (_, firm, year))| PanelObservation {
            firm_id: firm.clone(),
            year: *year,
            load_factor: (-latent[i].max(0.0)).exp(),
            output: raw_output[i],
            inputs: raw_inputs[i].clone(),
        })
        .collect();
    let dataset = PanelDataset::new("y", &cfg.spec.input_names, observations)?;

    let alpha = match &cfg.true_alpha {
        Some(a) => DVector::from_vec(a.clone()),
        None => DVector::from_vec(vec![(cfg.noise_sigma.max(1e-300).powi(2)).ln()]),
    };
    Ok(GeneratedPanel {
        dataset,
        rules,
        truth: CoefficientSet::new(idx, beta, alpha)?,
        systematic,
        latent,
        true_tei,
        censored,
    })
}

/// Per-coefficient recovery statistics over the replications.
#[derive(Debug, Clone, serde::Serialize)]
pub struct McCoefficient {
    pub name: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub median_abs_error: f64,
    pub rmse: f64,
    /// Share of replications whose 95% normal CI covers the truth; `None`
    /// when no replication produced standard errors.
    pub coverage95: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct McReport {
    pub reps: usize,
    pub failures: usize,
    pub coefficients: Vec<McCoefficient>,
    /// Mean Pearson correlation between true and estimated TEI.
    pub mean_tei_correlation: f64,
    /// Positions of the first-order coefficients (inputs, output, trend).
    pub first_order: Vec<usize>,
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt().max(1e-300)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Positions of the first-order coefficients (per-input, output, trend).
pub fn first_order_positions(idx: &TermIndex) -> Vec<usize> {
    let mut v: Vec<usize> = (0..idx.n_inputs())
        .map(|j| idx.position(Term::Input(j)).expect("input"))
        .collect();
    v.push(idx.position(Term::Output).expect("output"));
    v.push(idx.position(Term::Trend).expect("trend"));
    v
}

/// Run `reps` generate-fit replications; replication `i` uses
/// `rep_seed(cfg.seed, i)`. Fit failures are counted, not fatal.
pub fn monte_carlo(cfg: &SimConfig, reps: usize, opts: &OptimOptions) -> Result<McReport> {
    if reps == 0 {
        return Err(Error::InvalidData("reps must be at least 1".into()));
    }
    let idx = cfg.term_index()?;
    let p = idx.len();
    let names = idx.names();

    let mut errors: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); p];
    let mut truths: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); p];
    let mut estimates: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); p];
    let mut covered: Vec<usize> = vec![0; p];
    let mut with_se: usize = 0;
    let mut tei_correlations: Vec<f64> = Vec::with_capacity(reps);
    let mut failures = 0usize;

    for rep in 0..reps {
        let mut rep_cfg = cfg.clone();
        rep_cfg.seed = rep_seed(cfg.seed, rep as u64);
        let gen = generate(&rep_cfg)?;
        let tobs = transform(&gen.dataset, &gen.rules, DEFAULT_CENSOR_TOL);
        let design = DesignMatrix::build(&tobs, &cfg.spec)?;
        let fitted = match fit(&design, &cfg.spec, opts) {
            Ok(f) => f,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        for i in 0..p {
            let est = fitted.coefficients.beta()[i];
            let truth = gen.truth.beta()[i];
            errors[i].push(est - truth);
            truths[i].push(truth);
            estimates[i].push(est);
        }
        if let Some(se) = &fitted.std_errors {
            with_se += 1;
            for i in 0..p {
                if (fitted.coefficients.beta()[i] - gen.truth.beta()[i]).abs() <= 1.96 * se[i] {
                    covered[i] += 1;
                }
            }
        }
        let est_tei = compute_tei(&fitted.coefficients, &tobs, false)?;
        let est_values: Vec<f64> = est_tei.iter().map(|r| r.tei).collect();
        tei_correlations.push(correlation(&gen.true_tei, &est_values));
    }

    let done = reps - failures;
    if done == 0 {
        return Err(Error::InvalidData("every replication failed to fit".into()));
    }
    let coefficients = (0..p)
        .map(|i| {
            let n = errors[i].len() as f64;
            let bias = errors[i].iter().sum::<f64>() / n;
            let rmse = (errors[i].iter().map(|e| e * e).sum::<f64>() / n).sqrt();
            let mut abs: Vec<f64> = errors[i].iter().map(|e| e.abs()).collect();
            McCoefficient {
                name: names[i].clone(),
                truth: truths[i].iter().sum::<f64>() / n,
                mean_estimate: estimates[i].iter().sum::<f64>() / n,
                bias,
                median_abs_error: median(&mut abs),
                rmse,
                coverage95: (with_se > 0).then(|| covered[i] as f64 / with_se as f64),
            }
        })
        .collect();

    Ok(McReport {
        reps,
        failures,
        coefficients,
        mean_tei_correlation: tei_correlations.iter().sum::<f64>()
            / tei_correlations.len() as f64,
        first_order: first_order_positions(&idx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> SimConfig {
        let mut cfg = SimConfig::demo(seed).unwrap();
        cfg.n_firms = 6;
        cfg.n_years = 8;
        cfg.n_european = 2;
        cfg.spec.include_dummies = false;
        cfg.spec.heteroskedastic = false;
        let idx = cfg.term_index().unwrap();
        let rs = build_restrictions(&cfg.spec, &idx).unwrap();
        let rp = reparameterize(&rs).unwrap();
        let raw = demo_beta_raw(&idx).unwrap();
        cfg.true_beta = rp.project(&raw).iter().copied().collect();
        cfg
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SimConfig::demo(42).unwrap();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.latent, b.latent);
        let c = generate(&SimConfig::demo(43).unwrap()).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn noiseless_observed_distance_equals_latent() {
        let mut cfg = small_cfg(7);
        cfg.noise_sigma = 0.0;
        let gen = generate(&cfg).unwrap();
        let tobs = transform(&gen.dataset, &gen.rules, DEFAULT_CENSOR_TOL);
        for (i, o) in tobs.iter().enumerate() {
            if gen.latent[i] > 0.0 {
                assert!(
                    (o.ln_distance - gen.latent[i]).abs() < 1e-12,
                    "row {i}: {} vs {}",
                    o.ln_distance,
                    gen.latent[i]
                );
            } else {
                assert_eq!(o.ln_distance, 0.0);
            }
        }
    }

    #[test]
    fn generator_inverts_the_translog() {
        let cfg = small_cfg(11);
        let gen = generate(&cfg).unwrap();
        let tobs = transform(&gen.dataset, &gen.rules, DEFAULT_CENSOR_TOL);
        let idx = cfg.term_index().unwrap();
        for (i, o) in tobs.iter().enumerate() {
            let mu = expand_row(o, &idx).unwrap().dot(gen.truth.beta());
            assert!(
                (mu - gen.systematic[i]).abs() < 1e-12,
                "row {i}: {mu} vs {}",
                gen.systematic[i]
            );
        }
    }

    #[test]
    fn censoring_bookkeeping_agrees_with_transform() {
        let mut cfg = small_cfg(13);
        cfg.censor_target = Some(0.2);
        let gen = generate(&cfg).unwrap();
        let tobs = transform(&gen.dataset, &gen.rules, DEFAULT_CENSOR_TOL);
        let n_cens = gen.censored.iter().filter(|&&c| c).count();
        assert!(n_cens > 0);
        for (i, o) in tobs.iter().enumerate() {
            assert_eq!(o.is_censored, gen.censored[i], "row {i}");
        }
    }

    #[test]
    fn censor_target_hits_requested_fraction() {
        let mut cfg = small_cfg(17);
        cfg.censor_target = Some(0.25);
        let gen = generate(&cfg).unwrap();
        let frac = gen.censored.iter().filter(|&&c| c).count() as f64
            / gen.censored.len() as f64;
        assert!((frac - 0.25).abs() < 0.05, "{frac}");

        cfg.censor_target = Some(0.0);
        let gen = generate(&cfg).unwrap();
        assert!(gen.censored.iter().all(|&c| !c));
    }

    #[test]
    fn invalid_truth_is_rejected() {
        let mut cfg = small_cfg(19);
        cfg.true_beta[1] += 0.1; // breaks sum of first-order input coefficients
        assert!(matches!(generate(&cfg), Err(Error::InvalidTruth { .. })));
    }

    #[test]
    fn rep_seed_split_is_stable_and_spread() {
        assert_eq!(rep_seed(1, 0), rep_seed(1, 0));
        assert_ne!(rep_seed(1, 0), rep_seed(1, 1));
        assert_ne!(rep_seed(1, 0), rep_seed(2, 0));
    }

    #[test]
    fn single_noiseless_replication_has_zero_bias() {
        let mut cfg = small_cfg(23);
        cfg.noise_sigma = 0.0;
        cfg.censor_target = Some(0.0);
        let report = monte_carlo(&cfg, 1, &OptimOptions::default()).unwrap();
        assert_eq!(report.failures, 0);
        for c in &report.coefficients {
            assert!(c.bias.abs() < 1e-6, "{}: bias {}", c.name, c.bias);
        }
        assert!(report.mean_tei_correlation > 0.999_999);
    }

    #[test]
    fn demo_config_load_factor_mean_is_plausible() {
        // mean LF over 100 generated panels stays in a realistic band
        let mut total = 0.0;
        let mut count = 0usize;
        for seed in 0..100 {
            let gen = generate(&SimConfig::demo(seed).unwrap()).unwrap();
            total += gen
                .dataset
                .observations
                .iter()
                .map(|o| o.load_factor)
                .sum::<f64>();
            count += gen.dataset.n_obs();
        }
        let mean = total / count as f64;
        assert!((0.6..=0.95).contains(&mean), "mean LF {mean}");
    }
}
