//! Nested-model likelihood-ratio specification tests: Cobb-Douglas form,
//! constant returns to scale, and absence of technical change.
//!
//! Degrees of freedom come from rank arithmetic over the stacked restriction
//! rows, not hand counting: homogeneity already forces some hypothesis rows
//! (once all but one coefficient of a zero-sum group are pinned, the last is
//! implied), so the effective dimension drop can be smaller than the row
//! count.

use std::str::FromStr;

use nalgebra::DMatrix;

use crate::design::{
    build_restrictions, compose_restrictions, matrix_rank, reparameterize, resolve_restriction,
    DesignMatrix, LinearRestriction, ModelSpec, RestrictionSet, Term, TermIndex,
};
use crate::error::{Error, Result};
use crate::optim::OptimOptions;
use crate::special::gamma_q;
use crate::tobit::{fit, FitResult};

/// Testable null hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Hypothesis {
    CobbDouglas,
    ConstantReturns,
    NoTechnicalChange,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 3] = [
        Hypothesis::CobbDouglas,
        Hypothesis::ConstantReturns,
        Hypothesis::NoTechnicalChange,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Hypothesis::CobbDouglas => "Cobb-Douglas Functional Form",
            Hypothesis::ConstantReturns => "Constant Returns to Scale",
            Hypothesis::NoTechnicalChange => "No Technical Change",
        }
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cobb-douglas" | "cobbdouglas" | "cd" => Ok(Hypothesis::CobbDouglas),
            "crs" | "constant-returns" => Ok(Hypothesis::ConstantReturns),
            "no-tech-change" | "notechchange" | "ntc" => Ok(Hypothesis::NoTechnicalChange),
            other => Err(Error::UnknownHypothesis(other.to_string())),
        }
    }
}

/// Restriction rows of a hypothesis, in structural coordinates, ready to
/// append to the homogeneity set. Rows for terms the model excludes (t^2 when
/// unmodeled, dummies when disabled) are dropped automatically.
pub fn hypothesis_restrictions(h: Hypothesis, idx: &TermIndex) -> Vec<LinearRestriction> {
    let n = idx.n_inputs();
    let mut rows = Vec::new();
    let mut pin = |term: Term, value: f64| {
        if idx.contains(term) {
            rows.push(LinearRestriction::pin(term, value));
        }
    };
    match h {
        Hypothesis::CobbDouglas => {
            for j in 0..n {
                for k in j..n {
                    pin(Term::InputInput(j, k), 0.0);
                }
            }
            for j in 0..n {
                pin(Term::InputOutput(j), 0.0);
            }
            pin(Term::OutputOutput, 0.0);
            pin(Term::TrendOutput, 0.0);
            pin(Term::TrendTrend, 0.0);
        }
        Hypothesis::ConstantReturns => {
            pin(Term::Output, -1.0);
            for j in 0..n {
                pin(Term::InputOutput(j), 0.0);
            }
            pin(Term::OutputOutput, 0.0);
            pin(Term::TrendOutput, 0.0);
        }
        Hypothesis::NoTechnicalChange => {
            pin(Term::Trend, 0.0);
            for j in 0..n {
                pin(Term::InputTrend(j), 0.0);
            }
            pin(Term::TrendOutput, 0.0);
            pin(Term::TrendTrend, 0.0);
            pin(Term::Brexit, 0.0);
            pin(Term::Covid, 0.0);
        }
    }
    rows
}

/// Effective degrees of freedom of `extra` given an already-imposed base set:
/// `rank([base; extra]) - rank(base)`.
pub fn hypothesis_df(
    base: &RestrictionSet,
    extra: &[LinearRestriction],
    idx: &TermIndex,
) -> Result<usize> {
    let p = idx.len();
    let m0 = base.n_restrictions();
    let mut stacked = DMatrix::zeros(m0 + extra.len(), p);
    stacked.view_mut((0, 0), (m0, p)).copy_from(base.matrix());
    for (i, r) in extra.iter().enumerate() {
        let (row, _) = resolve_restriction(r, idx)?;
        for j in 0..p {
            stacked[(m0 + i, j)] = row[j];
        }
    }
    Ok(matrix_rank(&stacked) - matrix_rank(base.matrix()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Decision {
    Reject,
    FailToReject,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decision::Reject => write!(f, "Reject"),
            Decision::FailToReject => write!(f, "Fail to reject"),
        }
    }
}

/// Result of one likelihood-ratio test.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LrTestResult {
    pub name: String,
    pub stat: f64,
    pub df: usize,
    pub p_value: f64,
    /// Decision at the 5% level.
    pub decision: Decision,
    pub loglik_unrestricted: f64,
    pub loglik_restricted: f64,
    /// True when a slightly negative raw statistic was clamped to zero.
    pub clamped_negative: bool,
}

const LR_NEGATIVE_SLACK: f64 = 1e-6;

/// Likelihood-ratio test of `fit_r` (restricted) against `fit_u`. The
/// restricted fit's restriction set must contain the unrestricted fit's; the
/// check runs on the augmented rows `[R | r]`.
pub fn lr_test(name: &str, fit_u: &FitResult, fit_r: &FitResult, df: usize) -> Result<LrTestResult> {
    if fit_u.restrictions.dim() != fit_r.restrictions.dim() {
        return Err(Error::DimensionMismatch {
            expected: fit_u.restrictions.dim(),
            actual: fit_r.restrictions.dim(),
        });
    }
    if df == 0 {
        return Err(Error::NotNested("hypothesis adds no restrictions (df = 0)".into()));
    }
    let aug_r = fit_r.restrictions.augmented();
    let rank_r = matrix_rank(&aug_r);
    let mut stacked = DMatrix::zeros(aug_r.nrows() + fit_u.restrictions.n_restrictions(), aug_r.ncols());
    stacked.view_mut((0, 0), (aug_r.nrows(), aug_r.ncols())).copy_from(&aug_r);
    stacked
        .view_mut((aug_r.nrows(), 0), (fit_u.restrictions.n_restrictions(), aug_r.ncols()))
        .copy_from(&fit_u.restrictions.augmented());
    if matrix_rank(&stacked) > rank_r {
        return Err(Error::NotNested(
            "the unrestricted fit's restrictions are not implied by the restricted fit's".into(),
        ));
    }
    if rank_r <= matrix_rank(&fit_u.restrictions.augmented()) {
        return Err(Error::NotNested(
            "the restricted fit does not add restrictions".into(),
        ));
    }

    let raw = 2.0 * (fit_u.loglik - fit_r.loglik);
    let (stat, clamped_negative) = if raw >= 0.0 {
        (raw, false)
    } else if raw > -LR_NEGATIVE_SLACK {
        (0.0, true)
    } else {
        return Err(Error::NotNested(format!(
            "restricted log-likelihood exceeds unrestricted by {:.3e}; optimizer failure",
            -raw / 2.0
        )));
    };
    let p_value = chisq_sf(stat, df);
    Ok(LrTestResult {
        name: name.to_string(),
        stat,
        df,
        p_value,
        decision: if p_value < 0.05 {
            Decision::Reject
        } else {
            Decision::FailToReject
        },
        loglik_unrestricted: fit_u.loglik,
        loglik_restricted: fit_r.loglik,
        clamped_negative,
    })
}

/// Chi-square survival function (upper tail), via the regularized upper
/// incomplete gamma function.
pub fn chisq_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 || df == 0 {
        return 1.0;
    }
    gamma_q(df as f64 / 2.0, x / 2.0)
}

/// Fit one nested hypothesis: homogeneity plus the hypothesis rows (reduced
/// of redundancies), with the effective degrees of freedom.
pub fn fit_hypothesis(
    h: Hypothesis,
    design: &DesignMatrix,
    spec: &ModelSpec,
    opts: &OptimOptions,
) -> Result<(FitResult, usize)> {
    let base = build_restrictions(spec, &design.terms)?;
    let extra = hypothesis_restrictions(h, &design.terms);
    let df = hypothesis_df(&base, &extra, &design.terms)?;
    let restricted = compose_restrictions(&base, &extra, &design.terms)?;
    let reparam = reparameterize(&restricted)?;
    let fit_r = crate::tobit::fit_with_reparam(design, &restricted, &reparam, opts)?;
    Ok((fit_r, df))
}

/// Run the three standard specification tests: one unrestricted fit, one
/// restricted fit per hypothesis, LR statistics with rank-arithmetic df.
pub fn run_specification_tests(
    design: &DesignMatrix,
    spec: &ModelSpec,
    opts: &OptimOptions,
) -> Result<Vec<LrTestResult>> {
    let fit_u = fit(design, spec, opts)?;
    let mut results = Vec::with_capacity(Hypothesis::ALL.len());
    for h in Hypothesis::ALL {
        let (fit_r, df) = fit_hypothesis(h, design, spec, opts)?;
        results.push(lr_test(h.display_name(), &fit_u, &fit_r, df)?);
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{reparameterize, RestrictionSet};
    use crate::tobit::CoefficientSet;
    use nalgebra::DVector;

    fn idx(dummies: bool, t2: bool) -> TermIndex {
        let spec = ModelSpec {
            include_dummies: dummies,
            include_trend_squared: t2,
            ..ModelSpec::default()
        };
        TermIndex::new(&spec, if dummies { 4 } else { 0 }).unwrap()
    }

    fn fake_fit(loglik: f64, rs: RestrictionSet, terms: TermIndex) -> FitResult {
        let p = terms.len();
        let rp = reparameterize(&rs).unwrap();
        let beta = rp.to_structural(&DVector::zeros(rp.free_dim()));
        FitResult {
            coefficients: CoefficientSet::new(terms, beta, DVector::zeros(1)).unwrap(),
            loglik,
            free_vcov: None,
            structural_vcov: None,
            std_errors: None,
            z_stats: None,
            p_values: None,
            alpha_std_errors: None,
            converged: true,
            iterations: 1,
            gradient_norm: 0.0,
            n_obs: p + 1,
            n_censored: 0,
            restrictions: rs,
            het_names: vec!["Constant".into()],
        }
    }

    #[test]
    fn crs_df_accounts_for_homogeneity_overlap() {
        let spec = ModelSpec {
            include_dummies: false,
            ..ModelSpec::default()
        };
        let ti = idx(false, false);
        let base = build_restrictions(&spec, &ti).unwrap();
        let extra = hypothesis_restrictions(Hypothesis::ConstantReturns, &ti);
        // rows: b_y = -1, three b_jy = 0 (one implied by homogeneity), b_yy, b_ty
        assert_eq!(extra.len(), 6);
        let df = hypothesis_df(&base, &extra, &ti).unwrap();
        assert_eq!(df, 5);
    }

    #[test]
    fn no_tech_change_pins_brexit_and_covid() {
        let ti = idx(true, false);
        let extra = hypothesis_restrictions(Hypothesis::NoTechnicalChange, &ti);
        let pinned: Vec<Term> = extra.iter().map(|r| r.terms[0].0).collect();
        assert!(pinned.contains(&Term::Brexit));
        assert!(pinned.contains(&Term::Covid));
        assert!(pinned.contains(&Term::Trend));
        // without dummies the Brexit/Covid rows are elided
        let ti2 = idx(false, false);
        let extra2 = hypothesis_restrictions(Hypothesis::NoTechnicalChange, &ti2);
        assert_eq!(extra2.len(), extra.len() - 2);
    }

    #[test]
    fn cobb_douglas_drops_absent_trend_squared() {
        let without = hypothesis_restrictions(Hypothesis::CobbDouglas, &idx(false, false));
        let with = hypothesis_restrictions(Hypothesis::CobbDouglas, &idx(false, true));
        assert_eq!(with.len(), without.len() + 1);
        assert!(without.iter().all(|r| r.terms[0].0 != Term::TrendTrend));
    }

    #[test]
    fn hypothesis_parsing() {
        assert_eq!("cobb-douglas".parse::<Hypothesis>().unwrap(), Hypothesis::CobbDouglas);
        assert_eq!("crs".parse::<Hypothesis>().unwrap(), Hypothesis::ConstantReturns);
        assert!(matches!(
            "bogus".parse::<Hypothesis>(),
            Err(Error::UnknownHypothesis(_))
        ));
    }

    #[test]
    fn lr_test_identical_fits() {
        let spec = ModelSpec {
            include_dummies: false,
            ..ModelSpec::default()
        };
        let ti = idx(false, false);
        let base = build_restrictions(&spec, &ti).unwrap();
        let mut spec_r = spec.clone();
        spec_r
            .extra_restrictions
            .push(LinearRestriction::pin(Term::OutputOutput, 0.0));
        let restricted = build_restrictions(&spec_r, &ti).unwrap();
        let fu = fake_fit(-100.0, base, ti.clone());
        let fr = fake_fit(-100.0, restricted, ti);
        let res = lr_test("equal", &fu, &fr, 5).unwrap();
        assert_eq!(res.stat, 0.0);
        assert_eq!(res.p_value, 1.0);
        assert_eq!(res.decision, Decision::FailToReject);
    }

    #[test]
    fn lr_test_reference_statistic() {
        let spec = ModelSpec {
            include_dummies: false,
            ..ModelSpec::default()
        };
        let ti = idx(false, false);
        let base = build_restrictions(&spec, &ti).unwrap();
        let extra = hypothesis_restrictions(Hypothesis::CobbDouglas, &ti);
        let restricted = compose_restrictions(&base, &extra, &ti).unwrap();
        let fu = fake_fit(-100.0, base, ti.clone());
        let fr = fake_fit(-144.12, restricted, ti);
        let res = lr_test("cd", &fu, &fr, 13).unwrap();
        assert!((res.stat - 88.24).abs() < 1e-10);
        assert!(res.p_value < 1e-4);
        assert_eq!(res.decision, Decision::Reject);
    }

    #[test]
    fn lr_test_rejects_non_nested() {
        let spec = ModelSpec {
            include_dummies: false,
            ..ModelSpec::default()
        };
        let ti = idx(false, false);
        let base = build_restrictions(&spec, &ti).unwrap();
        // "restricted" fit actually has the same restriction set
        let fu = fake_fit(-100.0, base.clone(), ti.clone());
        let fr = fake_fit(-101.0, base, ti);
        assert!(matches!(lr_test("same", &fu, &fr, 3), Err(Error::NotNested(_))));
    }

    #[test]
    fn lr_test_clamps_tiny_negatives() {
        let spec = ModelSpec {
            include_dummies: false,
            ..ModelSpec::default()
        };
        let ti = idx(false, false);
        let base = build_restrictions(&spec, &ti).unwrap();
        let mut spec_r = spec.clone();
        spec_r
            .extra_restrictions
            .push(LinearRestriction::pin(Term::OutputOutput, 0.0));
        let restricted = build_restrictions(&spec_r, &ti).unwrap();
        let fu = fake_fit(-100.0000000004, base.clone(), ti.clone());
        let fr = fake_fit(-100.0, restricted.clone(), ti.clone());
        let res = lr_test("tiny", &fu, &fr, 1).unwrap();
        assert_eq!(res.stat, 0.0);
        assert!(res.clamped_negative);

        let fu2 = fake_fit(-103.0, base, ti.clone());
        let fr2 = fake_fit(-100.0, restricted, ti);
        assert!(matches!(lr_test("bad", &fu2, &fr2, 1), Err(Error::NotNested(_))));
    }

    #[test]
    fn chisq_sf_reference_values() {
        assert_eq!(chisq_sf(0.0, 3), 1.0);
        // df = 2 closed form: exp(-x/2)
        assert!((chisq_sf(4.605_170_185_988_091, 2) - 0.1).abs() < 1e-12);
        // 95th percentile of chi-square(1)
        assert!((chisq_sf(3.841_458_820_694_124, 1) - 0.05).abs() < 1e-10);
        // far tail underflows toward zero
        assert!(chisq_sf(1e4, 1) < 1e-300);
    }

    #[test]
    fn chisq_sf_monotone_decreasing() {
        for df in [1usize, 2, 5, 13] {
            let mut prev = 1.0;
            for i in 1..200 {
                let x = i as f64 * 0.25;
                let p = chisq_sf(x, df);
                assert!(p < prev, "df {df}, x {x}");
                prev = p;
            }
        }
    }

    #[test]
    fn chisq_sf_matches_density_quadrature() {
        // integrate the chi-square(1) density from x to a far cutoff
        let density = |t: f64| (-t / 2.0).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
        let x = 3.841_458_820_694_124;
        let n = 400_000usize;
        let hi = 120.0;
        let h = (hi - x) / n as f64;
        let mut s = density(x) + density(hi);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * density(x + i as f64 * h);
        }
        let quad = s * h / 3.0;
        assert!((chisq_sf(x, 1) - quad).abs() < 1e-9, "{quad}");
    }
}
