//! Minimization of `Psi(u) = ||Ku - g||^2 + alpha sum_k w_k |u_k|^p`.
//!
//! Two routes: iterated thresholding (proximal gradient) for `1 <= p <= 2`
//! on any operator, and the exact component-wise minimizer for diagonal
//! operators, valid for every `0 <= p <= 2`.

use std::path::PathBuf;

use crate::config::{KeyValueFile, Values};
use crate::error::{check_dim, Error, Result};
use crate::operators::{ForwardOperator, LinearOperator};
use crate::penalty::WeightedPenalty;
use crate::seqspace::{dot, sgn, TruncatedSequence, WeightSequence};
use crate::thresholding::{threshold, ThresholdSpec};

/// Safety factor on the step `1 / Lip` of the fidelity gradient.
pub const STEP_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedProblem {
    operator: ForwardOperator,
    data: Vec<f64>,
    delta: f64,
    alpha: f64,
    penalty: WeightedPenalty,
}

impl RegularizedProblem {
    pub fn new(
        operator: ForwardOperator,
        data: Vec<f64>,
        delta: f64,
        alpha: f64,
        penalty: WeightedPenalty,
    ) -> Result<Self> {
        check_dim(operator.output_dim(), data.len())?;
        check_dim(operator.input_dim(), penalty.weights().len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("data has non-finite entries".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
        }
        Ok(Self { operator, data, delta, alpha, penalty })
    }

    pub fn operator(&self) -> &ForwardOperator {
        &self.operator
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn penalty(&self) -> &WeightedPenalty {
        &self.penalty
    }

    pub fn residual(&self, u: &TruncatedSequence) -> Result<Vec<f64>> {
        let mut r = self.operator.apply(u)?;
        r.iter_mut().zip(&self.data).for_each(|(a, g)| *a -= g);
        Ok(r)
    }

    /// `Psi(u)`.
    pub fn objective(&self, u: &TruncatedSequence) -> Result<f64> {
        let r = self.residual(u)?;
        Ok(dot(&r, &r) + self.alpha * self.penalty.value(u)?)
    }

    /// Gradient `2 K*(Ku - g)` of the fidelity term.
    pub fn fidelity_gradient(&self, u: &TruncatedSequence) -> Result<TruncatedSequence> {
        Ok(self.operator.adjoint_apply(&self.residual(u)?)?.scaled(2.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: TruncatedSequence,
    pub objective: f64,
    pub iterations: usize,
    /// Violation of the optimality inclusion; `None` for `p < 1`, where no
    /// first-order certificate of global optimality exists.
    pub certificate_residual: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        Self { max_iter: 100_000, tol: 1e-10 }
    }
}

fn certificate_from_gradient(prob: &RegularizedProblem, u: &TruncatedSequence, grad: &[f64]) -> f64 {
    let p = prob.penalty.p();
    let w = prob.penalty.weights();
    let mut worst: f64 = 0.0;
    for (k, (uk, gk)) in u.iter().zip(grad).enumerate() {
        let a = -gk;
        let aw = prob.alpha * w[k];
        let v = if p == 1.0 {
            if *uk == 0.0 {
                (a.abs() - aw).max(0.0)
            } else {
                (a - aw * sgn(*uk)).abs()
            }
        } else {
            let sub = if *uk == 0.0 { 0.0 } else { aw * p * sgn(*uk) * uk.abs().powf(p - 1.0) };
            (a - sub).abs()
        };
        worst = worst.max(v);
    }
    worst
}

fn require_convex(p: f64) -> Result<()> {
    if (1.0..=2.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "p = {p} < 1: the functional is nonconvex and may have no minimizer on general \
             operators; only diagonal operators are supported"
        )))
    }
}

/// Sup-norm violation of `-2K*(Ku - g) in alpha w p Sgn(u) |u|^{p-1}`.
///
/// At `p = 1` a zero component contributes its distance to the interval
/// `[-alpha w_k, alpha w_k]`. Zero exactly at minimizers.
pub fn optimality_certificate(prob: &RegularizedProblem, u: &TruncatedSequence) -> Result<f64> {
    require_convex(prob.penalty.p())?;
    let grad = prob.fidelity_gradient(u)?;
    Ok(certificate_from_gradient(prob, u, grad.as_slice()))
}

/// Iterated thresholding
/// `u <- H^p_{2 s alpha w}(u - s 2K*(Ku - g))` with `s = 0.9 / (2 ||K||^2)`.
///
/// Converged when successive iterates differ by at most `tol` and the
/// optimality certificate is at most `10 tol`. An objective increase is a
/// hard error.
pub fn solve_iterative(
    prob: &RegularizedProblem,
    u0: Option<&TruncatedSequence>,
    opts: IterativeOptions,
) -> Result<SolveResult> {
    let p = prob.penalty.p();
    require_convex(p)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", opts.tol)));
    }
    let n = prob.operator.input_dim();
    let mut u = match u0 {
        Some(u0) => {
            check_dim(n, u0.len())?;
            u0.clone()
        }
        None => TruncatedSequence::zeros(n),
    };
    let knorm = prob.operator.operator_norm();
    if knorm == 0.0 {
        return Err(Error::InvalidParameter("operator is zero".into()));
    }
    let step = STEP_SAFETY / (2.0 * knorm * knorm);
    let specs: Vec<ThresholdSpec> = prob
        .penalty
        .weights()
        .as_slice()
        .iter()
        .map(|w| ThresholdSpec::new(p, 2.0 * step * prob.alpha * w))
        .collect::<Result<_>>()?;

    let mut grad = prob.fidelity_gradient(&u)?;
    let mut psi = prob.objective(&u)?;
    let mut cert = certificate_from_gradient(prob, &u, grad.as_slice());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let next: Vec<f64> =
            u.iter().zip(grad.iter()).zip(&specs).map(|((uk, gk), spec)| threshold(spec, uk - step * gk)).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!("non-finite iterate at iteration {iterations}")));
        }
        let next = TruncatedSequence::from_vec_unchecked(next);
        let next_psi = prob.objective(&next)?;
        if !next_psi.is_finite() {
            return Err(Error::Divergence(format!("non-finite objective at iteration {iterations}")));
        }
        if next_psi > psi + 1e-12 * psi.abs().max(1.0) {
            return Err(Error::Divergence(format!(
                "objective increased from {psi:e} to {next_psi:e} at iteration {iterations}"
            )));
        }
        let change = next.checked_sub(&u)?.norm2();
        grad = prob.fidelity_gradient(&next)?;
        cert = certificate_from_gradient(prob, &next, grad.as_slice());
        u = next;
        psi = next_psi;
        if change <= opts.tol && cert <= 10.0 * opts.tol {
            converged = true;
            break;
        }
    }
    Ok(SolveResult { u, objective: psi, iterations, certificate_residual: Some(cert), converged })
}

/// Exact minimizer for a diagonal operator:
/// `u_k = H^p_{alpha w_k / sigma_k^p}(g_k) / sigma_k` where `sigma_k > 0`, else 0.
///
/// For `p < 1` this is a global minimizer of the nonconvex functional.
pub fn solve_diagonal(prob: &RegularizedProblem) -> Result<SolveResult> {
    let diag = prob
        .operator
        .as_diagonal()
        .ok_or_else(|| Error::InvalidParameter("solve_diagonal requires a diagonal operator".into()))?;
    let p = prob.penalty.p();
    let w = prob.penalty.weights();
    let mut u = Vec::with_capacity(diag.singular_values().len());
    for (k, (s, g)) in diag.singular_values().iter().zip(&prob.data).enumerate() {
        if *s > 0.0 {
            let spec = ThresholdSpec::new(p, prob.alpha * w[k] / s.powf(p))?;
            u.push(threshold(&spec, *g) / s);
        } else {
            u.push(0.0);
        }
    }
    let u = TruncatedSequence::from_vec_unchecked(u);
    let objective = prob.objective(&u)?;
    let certificate_residual = if p >= 1.0 { Some(optimality_certificate(prob, &u)?) } else { None };
    Ok(SolveResult { u, objective, iterations: 1, certificate_residual, converged: true })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportReport {
    pub support: Vec<usize>,
    /// Support indices where `|2 (K*(Ku - g))_k| != alpha w_k` beyond the
    /// tolerance (checked for `p = 1` only).
    pub violations: Vec<usize>,
}

impl SupportReport {
    pub fn support_size(&self) -> usize {
        self.support.len()
    }
}

/// Support of a computed minimizer. For `p = 1` every support index must
/// satisfy `|2 (K*(Ku - g))_k| = alpha w_k` to within `10 tol`.
pub fn minimizer_support_check(prob: &RegularizedProblem, result: &SolveResult, tol: f64) -> Result<SupportReport> {
    if !result.converged {
        return Err(Error::Precondition("support check needs a converged result".into()));
    }
    let support = result.u.support();
    let mut violations = Vec::new();
    if prob.penalty.p() == 1.0 {
        let grad = prob.fidelity_gradient(&result.u)?;
        let w = prob.penalty.weights();
        for &k in &support {
            if (grad[k].abs() - prob.alpha * w[k]).abs() > 10.0 * tol {
                violations.push(k);
            }
        }
    }
    Ok(SupportReport { support, violations })
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightsSpec {
    Uniform(f64),
    Explicit(Vec<f64>),
}

impl WeightsSpec {
    pub fn resolve(&self, n: usize) -> Result<WeightSequence> {
        match self {
            WeightsSpec::Uniform(w) => WeightSequence::uniform(n, *w),
            WeightsSpec::Explicit(v) => {
                check_dim(n, v.len())?;
                WeightSequence::new(v.clone())
            }
        }
    }
}

/// Contents of a problem file: `alpha`, `delta`, `p`, `weights`
/// (`uniform <w>` or `N` values), `data` (`M` values) and optionally
/// `operator <path>` naming a file in the operator text format.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub alpha: f64,
    pub delta: f64,
    pub p: f64,
    pub weights: WeightsSpec,
    pub data: Vec<f64>,
    pub operator_path: Option<PathBuf>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValueFile::parse(text, &["alpha", "delta", "p", "weights", "data", "operator"])?;
        let weights = match kv.get("weights") {
            None => WeightsSpec::Uniform(1.0),
            Some(Values { line, items }) if items.first().map(String::as_str) == Some("uniform") => {
                if items.len() != 2 {
                    return Err(Error::Parse { line: *line, msg: "expected 'weights uniform <w>'".into() });
                }
                WeightsSpec::Uniform(kv.parse_item(*line, &items[1])?)
            }
            Some(_) => WeightsSpec::Explicit(kv.floats("weights")?),
        };
        Ok(Self {
            alpha: kv.float("alpha")?,
            delta: kv.float_or("delta", 0.0)?,
            p: kv.float("p")?,
            weights,
            data: kv.floats("data")?,
            operator_path: kv.string_opt("operator")?.map(PathBuf::from),
        })
    }

    pub fn into_problem(self, operator: ForwardOperator) -> Result<RegularizedProblem> {
        let w = self.weights.resolve(operator.input_dim())?;
        let pen = WeightedPenalty::new(self.p, w)?;
        RegularizedProblem::new(operator, self.data, self.delta, self.alpha, pen)
    }
}
