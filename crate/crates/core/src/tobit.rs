//! Maximum likelihood for the left-censored (type I Tobit) regression with
//! multiplicative heteroskedasticity, over the null-space parameterization of
//! the restricted translog.
//!
//! The response `ln D >= 0` is censored at zero. Uncensored rows contribute a
//! Gaussian density term with per-observation variance `exp(het_row * alpha)`;
//! censored rows contribute `ln Phi(-mu/sigma)`. Optimization runs over the
//! free coordinates `theta` (with `beta = beta0 + N theta` keeping every
//! iterate exactly on the restriction manifold) jointly with `alpha`.

use nalgebra::{DMatrix, DVector};

use crate::design::{
    build_restrictions, reparameterize, DesignMatrix, ModelSpec, Reparameterization,
    RestrictionSet, Term, TermIndex,
};
use crate::error::{Error, Result};
use crate::optim::{maximize, numerical_hessian, OptimOptions, OptimOutcome};
use crate::special::{erfc, inv_mills, norm_logcdf, LN_SQRT_2PI};

const LN_2PI: f64 = 2.0 * LN_SQRT_2PI;

// Domain wall for the log variance. Keeps exp() well conditioned and makes
// the zero-noise limit (where the unconstrained MLE sends sigma -> 0) a
// well-posed problem instead of an unbounded one.
const MIN_LOG_SIGMA2: f64 = -40.0;
const MAX_LOG_SIGMA2: f64 = 40.0;

/// Structural coefficients plus the variance-equation coefficients.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    terms: TermIndex,
    beta: DVector<f64>,
    alpha: DVector<f64>,
}

impl CoefficientSet {
    pub fn new(terms: TermIndex, beta: DVector<f64>, alpha: DVector<f64>) -> Result<Self> {
        if beta.len() != terms.len() {
            return Err(Error::DimensionMismatch {
                expected: terms.len(),
                actual: beta.len(),
            });
        }
        Ok(CoefficientSet { terms, beta, alpha })
    }

    /// Build from named values; unmentioned coefficients are zero.
    pub fn from_pairs(terms: TermIndex, pairs: &[(Term, f64)], alpha: Vec<f64>) -> Result<Self> {
        let mut beta = DVector::zeros(terms.len());
        for &(term, value) in pairs {
            beta[terms.position(term)?] = value;
        }
        Ok(CoefficientSet {
            terms,
            beta,
            alpha: DVector::from_vec(alpha),
        })
    }

    pub fn terms(&self) -> &TermIndex {
        &self.terms
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Value of a named coefficient, `None` when the model excludes the term.
    pub fn get(&self, term: Term) -> Option<f64> {
        self.terms.position(term).ok().map(|p| self.beta[p])
    }

    pub fn constant(&self) -> f64 {
        self.beta[self.terms.position(Term::Constant).expect("constant")]
    }

    pub fn input(&self, j: usize) -> Option<f64> {
        self.get(Term::Input(j))
    }

    pub fn output(&self) -> f64 {
        self.beta[self.terms.position(Term::Output).expect("output")]
    }

    pub fn trend(&self) -> f64 {
        self.beta[self.terms.position(Term::Trend).expect("trend")]
    }

    pub fn input_input(&self, j: usize, k: usize) -> Option<f64> {
        self.get(Term::InputInput(j, k))
    }

    pub fn input_output(&self, j: usize) -> Option<f64> {
        self.get(Term::InputOutput(j))
    }

    pub fn input_trend(&self, j: usize) -> Option<f64> {
        self.get(Term::InputTrend(j))
    }

    pub fn output_output(&self) -> f64 {
        self.beta[self.terms.position(Term::OutputOutput).expect("yy")]
    }

    pub fn trend_output(&self) -> f64 {
        self.beta[self.terms.position(Term::TrendOutput).expect("ty")]
    }

    pub fn trend_trend(&self) -> Option<f64> {
        self.get(Term::TrendTrend)
    }

    pub fn firm_dummy(&self, i: usize) -> Option<f64> {
        self.get(Term::FirmDummy(i))
    }

    pub fn brexit(&self) -> Option<f64> {
        self.get(Term::Brexit)
    }

    pub fn covid(&self) -> Option<f64> {
        self.get(Term::Covid)
    }
}

/// Converged estimates with covariance and diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: CoefficientSet,
    pub loglik: f64,
    /// Covariance over the free parameters (theta, alpha); `None` when the
    /// numerical Hessian is singular or not negative definite.
    pub free_vcov: Option<DMatrix<f64>>,
    /// Delta-mapped covariance over structural beta: `N V_theta N^T`.
    pub structural_vcov: Option<DMatrix<f64>>,
    /// Per structural coefficient; zero for coordinates fixed by restrictions.
    pub std_errors: Option<Vec<f64>>,
    /// `beta / se`; NaN where the standard error is zero.
    pub z_stats: Option<Vec<f64>>,
    /// Two-sided normal p-values; NaN where z is undefined.
    pub p_values: Option<Vec<f64>>,
    pub alpha_std_errors: Option<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub n_obs: usize,
    pub n_censored: usize,
    pub restrictions: RestrictionSet,
    pub het_names: Vec<String>,
}

fn split_params<'a>(
    params: &'a DVector<f64>,
    reparam: &Reparameterization,
    design: &DesignMatrix,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let f = reparam.free_dim();
    let q = design.het.ncols();
    if params.len() != f + q {
        return Err(Error::DimensionMismatch {
            expected: f + q,
            actual: params.len(),
        });
    }
    Ok((params.rows(0, f).into_owned(), params.rows(f, q).into_owned()))
}

// Shared likelihood/score evaluation. Returns None outside the domain.
fn eval(
    params: &DVector<f64>,
    design: &DesignMatrix,
    reparam: &Reparameterization,
    want_grad: bool,
) -> Option<(f64, Option<DVector<f64>>)> {
    let f = reparam.free_dim();
    let q = design.het.ncols();
    if params.len() != f + q || reparam.structural_dim() != design.x.ncols() {
        return None;
    }
    let theta = params.rows(0, f).into_owned();
    let alpha = params.rows(f, q).into_owned();
    let beta = reparam.to_structural(&theta);
    let mu = &design.x * &beta;
    let logvar = &design.het * &alpha;

    let n = design.n_obs();
    let mut ll = 0.0;
    let mut w_mu = DVector::zeros(if want_grad { n } else { 0 });
    let mut w_g = DVector::zeros(if want_grad { n } else { 0 });
    for i in 0..n {
        let g = logvar[i];
        if !g.is_finite() || !(MIN_LOG_SIGMA2..=MAX_LOG_SIGMA2).contains(&g) {
            return None;
        }
        let sigma2 = g.exp();
        if design.censored[i] {
            let z = -mu[i] / sigma2.sqrt();
            if !z.is_finite() {
                return None;
            }
            ll += norm_logcdf(z);
            if want_grad {
                let lam = inv_mills(z);
                w_mu[i] = -lam / sigma2.sqrt();
                w_g[i] = -0.5 * z * lam;
            }
        } else {
            let r = design.response[i] - mu[i];
            ll += -0.5 * (LN_2PI + g) - r * r / (2.0 * sigma2);
            if want_grad {
                w_mu[i] = r / sigma2;
                w_g[i] = -0.5 + r * r / (2.0 * sigma2);
            }
        }
    }
    if !ll.is_finite() {
        return None;
    }
    if !want_grad {
        return Some((ll, None));
    }
    let grad_beta = design.x.transpose() * w_mu;
    let grad_theta = reparam.basis().transpose() * grad_beta;
    let grad_alpha = design.het.transpose() * w_g;
    let mut grad = DVector::zeros(f + q);
    grad.rows_mut(0, f).copy_from(&grad_theta);
    grad.rows_mut(f, q).copy_from(&grad_alpha);
    if grad.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((ll, Some(grad)))
}

/// Tobit log-likelihood at `params = [theta, alpha]`.
pub fn loglik(
    params: &DVector<f64>,
    design: &DesignMatrix,
    reparam: &Reparameterization,
) -> Result<f64> {
    split_params(params, reparam, design)?;
    eval(params, design, reparam, false)
        .map(|(ll, _)| ll)
        .ok_or_else(|| Error::NonFiniteLikelihood("likelihood evaluation left the domain".into()))
}

/// Analytic score over `[theta, alpha]`; censored rows enter through the
/// inverse Mills ratio.
pub fn loglik_grad(
    params: &DVector<f64>,
    design: &DesignMatrix,
    reparam: &Reparameterization,
) -> Result<DVector<f64>> {
    split_params(params, reparam, design)?;
    eval(params, design, reparam, true)
        .and_then(|(_, g)| g)
        .ok_or_else(|| Error::NonFiniteLikelihood("score evaluation left the domain".into()))
}

// Restricted least squares on uncensored rows: the theta warm start.
fn warm_start(design: &DesignMatrix, reparam: &Reparameterization) -> (DVector<f64>, DVector<f64>) {
    let f = reparam.free_dim();
    let q = design.het.ncols();
    let unc: Vec<usize> = (0..design.n_obs()).filter(|&i| !design.censored[i]).collect();
    let n_u = unc.len();

    let xn = &design.x * reparam.basis();
    let mut a = DMatrix::zeros(n_u, f);
    let mut b = DVector::zeros(n_u);
    let offset = &design.x * reparam.particular();
    for (r, &i) in unc.iter().enumerate() {
        a.row_mut(r).copy_from(&xn.row(i));
        b[r] = design.response[i] - offset[i];
    }

    let theta = if f == 0 {
        DVector::zeros(0)
    } else {
        let svd = a.clone().svd(true, true);
        let eps = svd.singular_values.max().max(1e-300) * 1e-12;
        svd.solve(&b, eps).unwrap_or_else(|_| DVector::zeros(f))
    };

    let resid = &b - &a * &theta;
    let s2 = (resid.dot(&resid) / n_u as f64).clamp(1e-13, 1e13);
    let mut alpha = DVector::zeros(q);
    let const_col = (0..q).find(|&c| (0..design.het.nrows()).all(|i| design.het[(i, c)] == 1.0));
    if let Some(c) = const_col {
        alpha[c] = s2.ln();
    }
    (theta, alpha)
}

/// Fit the spec's model on a design: homogeneity (plus any extra) restrictions
/// imposed exactly, quasi-Newton ascent from a least-squares warm start.
pub fn fit(design: &DesignMatrix, spec: &ModelSpec, opts: &OptimOptions) -> Result<FitResult> {
    let restrictions = build_restrictions(spec, &design.terms)?;
    let reparam = reparameterize(&restrictions)?;
    fit_with_reparam(design, &restrictions, &reparam, opts)
}

/// As [`fit`], with caller-supplied restrictions and parameterization. The
/// maximized likelihood does not depend on the particular null-space basis.
pub fn fit_with_reparam(
    design: &DesignMatrix,
    restrictions: &RestrictionSet,
    reparam: &Reparameterization,
    opts: &OptimOptions,
) -> Result<FitResult> {
    let p = design.x.ncols();
    if reparam.structural_dim() != p || restrictions.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: reparam.structural_dim(),
        });
    }
    let n = design.n_obs();
    let n_censored = design.n_censored();
    if n == n_censored {
        return Err(Error::InvalidData(
            "fit requires at least one uncensored observation".into(),
        ));
    }
    let f = reparam.free_dim();
    let q = design.het.ncols();
    if n <= f {
        return Err(Error::InvalidData(format!(
            "{n} observations cannot identify {f} free parameters"
        )));
    }

    let (theta0, alpha0) = warm_start(design, reparam);
    let mut x0 = DVector::zeros(f + q);
    x0.rows_mut(0, f).copy_from(&theta0);
    x0.rows_mut(f, q).copy_from(&alpha0);

    let outcome: OptimOutcome = maximize(
        |params| eval(params, design, reparam, true).map(|(ll, g)| (ll, g.expect("grad"))),
        x0,
        opts,
    )?;

    let hessian = numerical_hessian(
        |params| eval(params, design, reparam, true).and_then(|(_, g)| g),
        &outcome.x,
        opts.hessian_step,
    );
    let free_vcov = hessian.and_then(|h| (-h).try_inverse()).filter(|v| {
        (0..v.nrows()).all(|i| v[(i, i)].is_finite() && v[(i, i)] > 0.0)
    });

    let theta_hat = outcome.x.rows(0, f).into_owned();
    let alpha_hat = outcome.x.rows(f, q).into_owned();
    let beta_hat = reparam.to_structural(&theta_hat);
    debug_assert!(restrictions.residual_inf_norm(&beta_hat) < 1e-10);

    let structural_vcov = free_vcov.as_ref().map(|v| {
        let v_theta = v.view((0, 0), (f, f)).into_owned();
        reparam.basis() * v_theta * reparam.basis().transpose()
    });
    let std_errors = structural_vcov
        .as_ref()
        .map(|v| (0..p).map(|i| v[(i, i)].max(0.0).sqrt()).collect::<Vec<_>>());
    let z_stats = std_errors.as_ref().map(|se| {
        (0..p)
            .map(|i| if se[i] > 0.0 { beta_hat[i] / se[i] } else { f64::NAN })
            .collect::<Vec<_>>()
    });
    let p_values = z_stats.as_ref().map(|zs| {
        zs.iter()
            .map(|z| {
                if z.is_finite() {
                    erfc(z.abs() / std::f64::consts::SQRT_2)
                } else {
                    f64::NAN
                }
            })
            .collect::<Vec<_>>()
    });
    let alpha_std_errors = free_vcov
        .as_ref()
        .map(|v| (0..q).map(|i| v[(f + i, f + i)].max(0.0).sqrt()).collect::<Vec<_>>());

    Ok(FitResult {
        coefficients: CoefficientSet::new(design.terms.clone(), beta_hat, alpha_hat)?,
        loglik: outcome.value,
        free_vcov,
        structural_vcov,
        std_errors,
        z_stats,
        p_values,
        alpha_std_errors,
        converged: outcome.converged,
        iterations: outcome.iterations,
        gradient_norm: outcome.gradient_norm,
        n_obs: n,
        n_censored,
        restrictions: restrictions.clone(),
        het_names: design.het_names.clone(),
    })
}

/// Latent linear index `mu = X beta` for every row, censored or not.
pub fn predict_linear(coefs: &CoefficientSet, design: &DesignMatrix) -> Result<DVector<f64>> {
    if design.terms != *coefs.terms() {
        return Err(Error::DimensionMismatch {
            expected: coefs.terms().len(),
            actual: design.terms.len(),
        });
    }
    Ok(&design.x * coefs.beta())
}

/// One row of the serialized coefficient table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub vcov_available: bool,
}

/// JSON-ready view of a fit: names, estimates, standard errors, p-values,
/// log-likelihood, and a convergence block.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FitReport {
    pub n_obs: usize,
    pub n_censored: usize,
    pub loglik: f64,
    pub convergence: ConvergenceReport,
    pub coefficients: Vec<CoefficientRow>,
    pub het_coefficients: Vec<CoefficientRow>,
}

impl FitResult {
    pub fn report(&self) -> FitReport {
        let idx = self.coefficients.terms();
        let names = idx.names();
        let clean = |v: f64| if v.is_finite() { Some(v) } else { None };
        let coefficients = names
            .iter()
            .enumerate()
            .map(|(i, name)| CoefficientRow {
                name: name.clone(),
                estimate: self.coefficients.beta()[i],
                std_error: self.std_errors.as_ref().and_then(|se| clean(se[i])),
                z: self.z_stats.as_ref().and_then(|z| clean(z[i])),
                p_value: self.p_values.as_ref().and_then(|p| clean(p[i])),
            })
            .collect();
        let het_coefficients = self
            .het_names
            .iter()
            .enumerate()
            .map(|(i, name)| CoefficientRow {
                name: name.clone(),
                estimate: self.coefficients.alpha()[i],
                std_error: self.alpha_std_errors.as_ref().and_then(|se| clean(se[i])),
                z: None,
                p_value: None,
            })
            .collect();
        FitReport {
            n_obs: self.n_obs,
            n_censored: self.n_censored,
            loglik: self.loglik,
            convergence: ConvergenceReport {
                converged: self.converged,
                iterations: self.iterations,
                gradient_norm: self.gradient_norm,
                vcov_available: self.free_vcov.is_some(),
            },
            coefficients,
            het_coefficients,
        }
    }
}
