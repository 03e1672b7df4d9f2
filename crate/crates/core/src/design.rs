//! Translog design expansion and exact linear restrictions.
//!
//! The structural coefficient vector folds the symmetric second-order block:
//! one coefficient per unordered input pair, with the diagonal regressors
//! carrying the 0.5 factor, so coefficients read exactly as the usual
//! translog parameters. Linear-homogeneity-in-inputs plus any extra linear
//! restrictions are imposed exactly through a null-space reparameterization
//! `beta = beta0 + N theta` with orthonormal `N`.
//!
//! Structural layout (p columns):
//! constant | ln x_j .. | ln y | t | folded x-x pairs (j <= k) | x-y | x-t |
//! 0.5 (ln y)^2 | t ln y | [0.5 t^2] | [firm dummies, Brexit, Covid]

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::panel::TransformedObservation;

/// A named coefficient position in the structural vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Term {
    Constant,
    Input(usize),
    Output,
    Trend,
    /// Folded symmetric pair; `InputInput(j, k)` and `InputInput(k, j)` are
    /// the same coefficient.
    InputInput(usize, usize),
    InputOutput(usize),
    InputTrend(usize),
    OutputOutput,
    TrendOutput,
    TrendTrend,
    FirmDummy(usize),
    Brexit,
    Covid,
}

/// Regressors of the variance equation sigma^2 = exp(X alpha).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum HetTerm {
    Constant,
    LnInput(usize),
    LnOutput,
    Trend,
}

/// One linear restriction `sum(coef * term) = rhs` in structural coordinates.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LinearRestriction {
    pub terms: Vec<(Term, f64)>,
    pub rhs: f64,
}

impl LinearRestriction {
    /// Pin a single coefficient to a value.
    pub fn pin(term: Term, value: f64) -> Self {
        LinearRestriction {
            terms: vec![(term, 1.0)],
            rhs: value,
        }
    }
}

/// Declarative description of the model.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModelSpec {
    pub input_names: Vec<String>,
    /// Include the 0.5 t^2 term. Off by default.
    pub include_trend_squared: bool,
    /// Include firm dummies plus the Brexit and Covid indicators.
    pub include_dummies: bool,
    /// Model the variance as exp(X alpha); otherwise a single constant.
    pub heteroskedastic: bool,
    /// Variance regressors; defaults to constant, first-order logs, trend.
    pub het_terms: Vec<HetTerm>,
    /// Appended to the homogeneity set (hypothesis tests, pinned values).
    pub extra_restrictions: Vec<LinearRestriction>,
}

impl ModelSpec {
    pub fn new(input_names: &[&str]) -> Self {
        let n = input_names.len();
        ModelSpec {
            input_names: input_names.iter().map(|s| s.to_string()).collect(),
            include_trend_squared: false,
            include_dummies: true,
            heteroskedastic: true,
            het_terms: Self::default_het_terms(n),
            extra_restrictions: Vec::new(),
        }
    }

    pub fn default_het_terms(n_inputs: usize) -> Vec<HetTerm> {
        let mut v = vec![HetTerm::Constant];
        v.extend((0..n_inputs).map(HetTerm::LnInput));
        v.push(HetTerm::LnOutput);
        v.push(HetTerm::Trend);
        v
    }
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::new(&["K", "L", "E"])
    }
}

/// Maps every coefficient of the model to a unique column.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TermIndex {
    input_names: Vec<String>,
    n_firm_dummies: usize,
    include_trend_squared: bool,
    include_dummies: bool,
}

impl TermIndex {
    pub fn new(spec: &ModelSpec, n_firm_dummies: usize) -> Result<Self> {
        if spec.input_names.is_empty() {
            return Err(Error::InvalidData("input_names must be nonempty".into()));
        }
        Ok(TermIndex {
            input_names: spec.input_names.clone(),
            n_firm_dummies,
            include_trend_squared: spec.include_trend_squared,
            include_dummies: spec.include_dummies,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.input_names.len()
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn n_firm_dummies(&self) -> usize {
        if self.include_dummies {
            self.n_firm_dummies
        } else {
            0
        }
    }

    pub fn has_trend_squared(&self) -> bool {
        self.include_trend_squared
    }

    pub fn has_dummies(&self) -> bool {
        self.include_dummies
    }

    fn n_pairs(&self) -> usize {
        let n = self.n_inputs();
        n * (n + 1) / 2
    }

    /// Total number of structural coefficients.
    pub fn len(&self) -> usize {
        let n = self.n_inputs();
        let mut p = 1 + n + 2 + self.n_pairs() + n + n + 2;
        if self.include_trend_squared {
            p += 1;
        }
        if self.include_dummies {
            p += self.n_firm_dummies + 2;
        }
        p
    }

    fn pair_offset(&self, j: usize, k: usize) -> usize {
        let n = self.n_inputs();
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        j * n - j * (j + 1) / 2 + k
    }

    /// Column of a term, or `UnknownTerm` if the model does not include it.
    pub fn position(&self, term: Term) -> Result<usize> {
        let n = self.n_inputs();
        let base_pairs = 1 + n + 2;
        let base_jy = base_pairs + self.n_pairs();
        let base_jt = base_jy + n;
        let yy = base_jt + n;
        let ty = yy + 1;
        let after_ty = ty + 1;
        let dummies_start = after_ty + usize::from(self.include_trend_squared);
        let absent = |t: Term| Error::UnknownTerm(format!("{t:?}"));
        match term {
            Term::Constant => Ok(0),
            Term::Input(j) if j < n => Ok(1 + j),
            Term::Output => Ok(1 + n),
            Term::Trend => Ok(2 + n),
            Term::InputInput(j, k) if j < n && k < n => Ok(base_pairs + self.pair_offset(j, k)),
            Term::InputOutput(j) if j < n => Ok(base_jy + j),
            Term::InputTrend(j) if j < n => Ok(base_jt + j),
            Term::OutputOutput => Ok(yy),
            Term::TrendOutput => Ok(ty),
            Term::TrendTrend if self.include_trend_squared => Ok(after_ty),
            Term::FirmDummy(i) if self.include_dummies && i < self.n_firm_dummies => {
                Ok(dummies_start + i)
            }
            Term::Brexit if self.include_dummies => Ok(dummies_start + self.n_firm_dummies),
            Term::Covid if self.include_dummies => Ok(dummies_start + self.n_firm_dummies + 1),
            t => Err(absent(t)),
        }
    }

    pub fn contains(&self, term: Term) -> bool {
        self.position(term).is_ok()
    }

    /// All terms in column order.
    pub fn terms(&self) -> Vec<Term> {
        let n = self.n_inputs();
        let mut v = vec![Term::Constant];
        v.extend((0..n).map(Term::Input));
        v.push(Term::Output);
        v.push(Term::Trend);
        for j in 0..n {
            for k in j..n {
                v.push(Term::InputInput(j, k));
            }
        }
        v.extend((0..n).map(Term::InputOutput));
        v.extend((0..n).map(Term::InputTrend));
        v.push(Term::OutputOutput);
        v.push(Term::TrendOutput);
        if self.include_trend_squared {
            v.push(Term::TrendTrend);
        }
        if self.include_dummies {
            v.extend((0..self.n_firm_dummies).map(Term::FirmDummy));
            v.push(Term::Brexit);
            v.push(Term::Covid);
        }
        debug_assert_eq!(v.len(), self.len());
        v
    }

    /// Human-readable name of a term, matching the usual table layout.
    pub fn term_name(&self, term: Term) -> String {
        let input = |j: usize| self.input_names[j].clone();
        match term {
            Term::Constant => "Constant".into(),
            Term::Input(j) => format!("Ln {}", input(j)),
            Term::Output => "Ln y".into(),
            Term::Trend => "t".into(),
            Term::InputInput(j, k) if j == k => format!(".5 (Ln {})^2", input(j)),
            Term::InputInput(j, k) => {
                let (j, k) = if j <= k { (j, k) } else { (k, j) };
                format!("Ln {} Ln {}", input(j), input(k))
            }
            Term::InputOutput(j) => format!("Ln {} Ln y", input(j)),
            Term::InputTrend(j) => format!("t Ln {}", input(j)),
            Term::OutputOutput => ".5 (Ln y)^2".into(),
            Term::TrendOutput => "t Ln y".into(),
            Term::TrendTrend => ".5 t^2".into(),
            Term::FirmDummy(i) => format!("z{}", i + 1),
            Term::Brexit => "Brexit".into(),
            Term::Covid => "Covid".into(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.terms().into_iter().map(|t| self.term_name(t)).collect()
    }

    pub fn het_term_name(&self, term: HetTerm) -> String {
        match term {
            HetTerm::Constant => "Constant".into(),
            HetTerm::LnInput(j) => format!("Ln {}", self.input_names[j]),
            HetTerm::LnOutput => "Ln y".into(),
            HetTerm::Trend => "t".into(),
        }
    }
}

/// Expand a transformed observation into a regressor row aligned with `idx`.
pub fn expand_row(obs: &TransformedObservation, idx: &TermIndex) -> Result<DVector<f64>> {
    let n = idx.n_inputs();
    if obs.ln_inputs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: obs.ln_inputs.len(),
        });
    }
    if idx.has_dummies() && obs.firm_dummies.len() != idx.n_firm_dummies() {
        return Err(Error::DimensionMismatch {
            expected: idx.n_firm_dummies(),
            actual: obs.firm_dummies.len(),
        });
    }
    let mut row = DVector::zeros(idx.len());
    let mut set = |term: Term, value: f64| -> Result<()> {
        row[idx.position(term)?] = value;
        Ok(())
    };
    set(Term::Constant, 1.0)?;
    for j in 0..n {
        set(Term::Input(j), obs.ln_inputs[j])?;
    }
    set(Term::Output, obs.ln_output)?;
    set(Term::Trend, obs.trend)?;
    for j in 0..n {
        for k in j..n {
            let v = if j == k {
                0.5 * obs.ln_inputs[j] * obs.ln_inputs[j]
            } else {
                obs.ln_inputs[j] * obs.ln_inputs[k]
            };
            set(Term::InputInput(j, k), v)?;
        }
    }
    for j in 0..n {
        set(Term::InputOutput(j), obs.ln_inputs[j] * obs.ln_output)?;
        set(Term::InputTrend(j), obs.ln_inputs[j] * obs.trend)?;
    }
    set(Term::OutputOutput, 0.5 * obs.ln_output * obs.ln_output)?;
    set(Term::TrendOutput, obs.trend * obs.ln_output)?;
    if idx.has_trend_squared() {
        set(Term::TrendTrend, 0.5 * obs.trend * obs.trend)?;
    }
    if idx.has_dummies() {
        for (i, &d) in obs.firm_dummies.iter().enumerate() {
            set(Term::FirmDummy(i), d)?;
        }
        set(Term::Brexit, obs.brexit)?;
        set(Term::Covid, obs.covid)?;
    }
    Ok(row)
}

/// A full-row-rank set of linear restrictions `R beta = r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionSet {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl RestrictionSet {
    /// Build from explicit rows, rejecting rank-deficient systems.
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: rhs.len(),
            });
        }
        if matrix.nrows() > 0 && matrix_rank(&matrix) < matrix.nrows() {
            return Err(Error::RankDeficientRestrictions);
        }
        Ok(RestrictionSet { matrix, rhs })
    }

    pub fn empty(dim: usize) -> Self {
        RestrictionSet {
            matrix: DMatrix::zeros(0, dim),
            rhs: DVector::zeros(0),
        }
    }

    pub fn n_restrictions(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    /// `max_i |R beta - r|_i`.
    pub fn residual_inf_norm(&self, beta: &DVector<f64>) -> f64 {
        if self.matrix.nrows() == 0 {
            return 0.0;
        }
        (&self.matrix * beta - &self.rhs).amax()
    }

    /// `[R | r]`, used for nesting checks.
    pub fn augmented(&self) -> DMatrix<f64> {
        let m = self.matrix.nrows();
        let p = self.matrix.ncols();
        let mut a = DMatrix::zeros(m, p + 1);
        a.view_mut((0, 0), (m, p)).copy_from(&self.matrix);
        for i in 0..m {
            a[(i, p)] = self.rhs[i];
        }
        a
    }
}

/// Numerical rank via singular values.
pub fn matrix_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return 0;
    }
    let tol = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * 8.0;
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Resolve a named restriction into a dense row over structural coordinates.
pub fn resolve_restriction(
    restriction: &LinearRestriction,
    idx: &TermIndex,
) -> Result<(Vec<f64>, f64)> {
    let mut row = vec![0.0; idx.len()];
    for &(term, coef) in &restriction.terms {
        row[idx.position(term)?] += coef;
    }
    Ok((row, restriction.rhs))
}

/// Homogeneity-of-degree-one rows plus the spec's extra restrictions.
///
/// For n inputs the homogeneity block has 1 + n + 1 + 1 rows:
/// `sum_j b_j = 1`, `sum_j b_jk = 0` for each k, `sum_j b_jy = 0`,
/// `sum_j b_jt = 0`. Symmetry needs no rows; it is folded structurally.
pub fn build_restrictions(spec: &ModelSpec, idx: &TermIndex) -> Result<RestrictionSet> {
    let n = idx.n_inputs();
    let p = idx.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();

    let mut first_order = vec![0.0; p];
    for j in 0..n {
        first_order[idx.position(Term::Input(j))?] = 1.0;
    }
    rows.push(first_order);
    rhs.push(1.0);

    for k in 0..n {
        let mut row = vec![0.0; p];
        for j in 0..n {
            row[idx.position(Term::InputInput(j, k))?] += 1.0;
        }
        rows.push(row);
        rhs.push(0.0);
    }

    let mut row_jy = vec![0.0; p];
    for j in 0..n {
        row_jy[idx.position(Term::InputOutput(j))?] = 1.0;
    }
    rows.push(row_jy);
    rhs.push(0.0);

    let mut row_jt = vec![0.0; p];
    for j in 0..n {
        row_jt[idx.position(Term::InputTrend(j))?] = 1.0;
    }
    rows.push(row_jt);
    rhs.push(0.0);

    for extra in &spec.extra_restrictions {
        let (row, r) = resolve_restriction(extra, idx)?;
        rows.push(row);
        rhs.push(r);
    }

    let m = rows.len();
    let matrix = DMatrix::from_fn(m, p, |i, j| rows[i][j]);
    RestrictionSet::new(matrix, DVector::from_vec(rhs))
}

/// Stack extra restrictions onto an existing set, dropping rows already
/// implied by the preceding ones and rejecting inconsistent duplicates.
///
/// Hypothesis pins regularly overlap the homogeneity rows (pinning all but
/// one coefficient of a zero-sum group implies the last pin), so the naive
/// stack is rank deficient even though the system is consistent. Reduction
/// runs a modified Gram-Schmidt over the rows, carrying the right-hand side
/// through the elimination: a row that vanishes must have a vanishing
/// right-hand residue too, otherwise the system is contradictory.
pub fn compose_restrictions(
    base: &RestrictionSet,
    extra: &[LinearRestriction],
    idx: &TermIndex,
) -> Result<RestrictionSet> {
    let p = idx.len();
    if base.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: base.dim(),
        });
    }
    let mut rows: Vec<(Vec<f64>, f64)> = (0..base.n_restrictions())
        .map(|i| ((0..p).map(|j| base.matrix()[(i, j)]).collect(), base.rhs()[i]))
        .collect();
    for e in extra {
        rows.push(resolve_restriction(e, idx)?);
    }

    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut ortho: Vec<(Vec<f64>, f64)> = Vec::new();
    for (row, rhs) in rows {
        let scale = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        let mut v = row.clone();
        let mut b = rhs;
        for _ in 0..2 {
            for (u, ur) in &ortho {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= d * ui;
                }
                b -= d * ur;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 * scale {
            for x in &mut v {
                *x /= norm;
            }
            ortho.push((v, b / norm));
            kept.push((row, rhs));
        } else if b.abs() > 1e-8 * (1.0 + rhs.abs()) {
            return Err(Error::InvalidData(
                "restrictions are mutually inconsistent".into(),
            ));
        }
    }

    let m = kept.len();
    let matrix = DMatrix::from_fn(m, p, |i, j| kept[i].0[j]);
    let rhs = DVector::from_iterator(m, kept.iter().map(|(_, r)| *r));
    RestrictionSet::new(matrix, rhs)
}

/// Exact affine parameterization of `{beta : R beta = r}`.
#[derive(Debug, Clone)]
pub struct Reparameterization {
    particular: DVector<f64>,
    basis: DMatrix<f64>,
}

impl Reparameterization {
    /// Assemble from an explicit particular solution and basis. The caller is
    /// responsible for `R * particular = r` and `R * basis = 0`; any
    /// orthonormal rotation of a valid basis is also valid.
    pub fn from_parts(particular: DVector<f64>, basis: DMatrix<f64>) -> Self {
        Reparameterization { particular, basis }
    }

    pub fn particular(&self) -> &DVector<f64> {
        &self.particular
    }

    /// Orthonormal null-space basis; one column per free parameter.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn free_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn structural_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// `beta = beta0 + N theta`.
    pub fn to_structural(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.particular + &self.basis * theta
    }

    /// Free coordinates of (the projection of) a structural vector.
    pub fn to_free(&self, beta: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * (beta - &self.particular)
    }

    /// Closest point on the restriction manifold to `beta`.
    pub fn project(&self, beta: &DVector<f64>) -> DVector<f64> {
        self.to_structural(&self.to_free(beta))
    }
}

/// Build the null-space reparameterization of a restriction set.
///
/// The particular solution is the minimum-norm solution of `R beta = r`; the
/// basis columns are exactly orthonormal (Householder QR of `R^T`), so any
/// `theta` maps to a vector satisfying the restrictions to machine precision.
pub fn reparameterize(rs: &RestrictionSet) -> Result<Reparameterization> {
    let p = rs.dim();
    let m = rs.n_restrictions();
    if m == 0 {
        return Ok(Reparameterization {
            particular: DVector::zeros(p),
            basis: DMatrix::identity(p, p),
        });
    }
    if m > p || matrix_rank(rs.matrix()) < m {
        return Err(Error::RankDeficientRestrictions);
    }

    let (q, t) = householder_full_qr(&rs.matrix().transpose());

    // Solve T^T w = r by forward substitution (T is upper-triangular m x m).
    let mut w = DVector::zeros(m);
    for i in 0..m {
        let mut acc = rs.rhs()[i];
        for k in 0..i {
            acc -= t[(k, i)] * w[k];
        }
        let diag = t[(i, i)];
        if diag.abs() < 1e-12 {
            return Err(Error::RankDeficientRestrictions);
        }
        w[i] = acc / diag;
    }
    let particular = q.columns(0, m) * w;
    let basis = q.columns(m, p - m).into_owned();
    Ok(Reparameterization { particular, basis })
}

// Householder QR of a (p x m) matrix with p >= m, returning the full
// orthogonal factor Q (p x p) and the triangular factor R (p x m).
fn householder_full_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = a.nrows();
    let m = a.ncols();
    debug_assert!(p >= m);
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(p, p);

    for k in 0..m {
        let len = p - k;
        let mut v = vec![0.0; len];
        for i in 0..len {
            v[i] = r[(k + i, k)];
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }

        for col in k..m {
            let mut dot = 0.0;
            for i in 0..len {
                dot += v[i] * r[(k + i, col)];
            }
            let f = 2.0 * dot / vnorm2;
            for i in 0..len {
                r[(k + i, col)] -= f * v[i];
            }
        }
        for row in 0..p {
            let mut dot = 0.0;
            for i in 0..len {
                dot += q[(row, k + i)] * v[i];
            }
            let f = 2.0 * dot / vnorm2;
            for i in 0..len {
                q[(row, k + i)] -= f * v[i];
            }
        }
    }
    (q, r)
}

/// Regressor matrix, response, censoring flags, and the variance design.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub terms: TermIndex,
    /// n x p regressor matrix in `TermIndex` order.
    pub x: DMatrix<f64>,
    /// ln D per observation.
    pub response: DVector<f64>,
    pub censored: Vec<bool>,
    /// n x q variance-equation design (a single constant when homoskedastic).
    pub het: DMatrix<f64>,
    pub het_names: Vec<String>,
    /// (firm, year) per row.
    pub keys: Vec<(String, i32)>,
}

impl DesignMatrix {
    pub fn build(obs: &[TransformedObservation], spec: &ModelSpec) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::InvalidData("no observations to expand".into()));
        }
        let n_firm_dummies = obs[0].firm_dummies.len();
        let idx = TermIndex::new(spec, n_firm_dummies)?;
        let n = obs.len();
        let p = idx.len();

        let mut x = DMatrix::zeros(n, p);
        let mut response = DVector::zeros(n);
        let mut censored = Vec::with_capacity(n);
        let mut keys = Vec::with_capacity(n);
        for (i, o) in obs.iter().enumerate() {
            let row = expand_row(o, &idx)?;
            x.row_mut(i).copy_from(&row.transpose());
            response[i] = o.ln_distance;
            censored.push(o.is_censored);
            keys.push((o.firm_id.clone(), o.year));
        }

        let het_terms: Vec<HetTerm> = if spec.heteroskedastic {
            if spec.het_terms.is_empty() {
                return Err(Error::InvalidData(
                    "heteroskedastic model needs at least one variance regressor".into(),
                ));
            }
            spec.het_terms.clone()
        } else {
            vec![HetTerm::Constant]
        };
        let q = het_terms.len();
        let mut het = DMatrix::zeros(n, q);
        for (i, o) in obs.iter().enumerate() {
            for (c, term) in het_terms.iter().enumerate() {
                het[(i, c)] = match *term {
                    HetTerm::Constant => 1.0,
                    HetTerm::LnInput(j) => {
                        if j >= o.ln_inputs.len() {
                            return Err(Error::UnknownTerm(format!("LnInput({j})")));
                        }
                        o.ln_inputs[j]
                    }
                    HetTerm::LnOutput => o.ln_output,
                    HetTerm::Trend => o.trend,
                };
            }
        }
        let het_names = het_terms.iter().map(|t| idx.het_term_name(*t)).collect();

        if idx.has_dummies() {
            for (term, name) in [(Term::Brexit, "Brexit"), (Term::Covid, "Covid")] {
                let c = idx.position(term)?;
                let first = x[(0, c)];
                if (0..n).all(|i| x[(i, c)] == first) {
                    return Err(Error::InvalidData(format!(
                        "dummy column `{name}` is constant; adjust the dummy rules \
                         or disable dummies"
                    )));
                }
            }
        }

        Ok(DesignMatrix {
            terms: idx,
            x,
            response,
            censored,
            het,
            het_names,
            keys,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_censored(&self) -> usize {
        self.censored.iter().filter(|&&c| c).count()
    }
}
