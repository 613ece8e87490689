use std::fmt::Write as _;

use super::csv::fmt_num;
use crate::error::{check_dim, Error, Result};
use crate::operators::{DiagonalOperator, ForwardOperator, LinearOperator};
use crate::penalty::WeightedPenalty;
use crate::seqspace::{TruncatedSequence, WeightSequence};
use crate::solvers::{solve_diagonal, RegularizedProblem};

const MONOTONE_SLACK: f64 = 1e-12;
pub const FINAL_ERROR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PinvSweepRow {
    pub alpha: f64,
    /// `||R_alpha g - K^+ g||_2`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinvSweep {
    pub p: f64,
    pub rows: Vec<PinvSweepRow>,
    /// Every nonzero component passes through unthresholded once `alpha`
    /// drops below this value (`+inf` when `g = 0`).
    pub activation_alpha: f64,
    pub assertion_failures: Vec<String>,
}

impl PinvSweep {
    pub fn passed(&self) -> bool {
        self.assertion_failures.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,error\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{}", fmt_num(r.alpha), fmt_num(r.error));
        }
        let _ = writeln!(s, "# p {}", fmt_num(self.p));
        let _ = writeln!(s, "# activation_alpha {}", fmt_num(self.activation_alpha));
        let _ = writeln!(s, "# checks_ok {}", self.passed());
        s
    }
}

/// Largest `alpha` for which the diagonal `p < 1` thresholding inverse with
/// unit weights keeps component `g_k != 0` (strictly below it the component
/// clears the jump `alpha_eff(alpha / sigma_k^p)`).
pub fn activation_alpha(p: f64, sigma_k: f64, g_k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("activation threshold needs 0 <= p < 1, got {p}")));
    }
    if g_k == 0.0 || sigma_k <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let c = (2.0 - p) / (2.0 - 2.0 * p);
    Ok(sigma_k.powf(p) * (g_k.abs() / c).powf(2.0 - p) / (1.0 - p))
}

/// Solves with exact data `g = K u*` along a decreasing `alpha` grid and
/// records the distance to `K^+ g`.
pub fn run_pinv_regularization_sweep(
    k: &DiagonalOperator,
    u_star: &TruncatedSequence,
    p: f64,
    alpha_grid: &[f64],
) -> Result<PinvSweep> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("sweep needs 0 <= p < 1, got {p}")));
    }
    check_dim(k.input_dim(), u_star.len())?;
    if alpha_grid.is_empty() || alpha_grid.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter("alpha grid must be nonempty and positive".into()));
    }
    if alpha_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("alpha grid must be strictly decreasing".into()));
    }
    let g = k.apply(u_star)?;
    let pinv = k.pseudo_inverse_apply(&g)?;
    let pen = WeightedPenalty::new(p, WeightSequence::uniform(k.input_dim(), 1.0)?)?;
    let op = ForwardOperator::Diagonal(k.clone());

    let mut activation = f64::INFINITY;
    for (s, gk) in k.singular_values().iter().zip(&g) {
        activation = activation.min(activation_alpha(p, *s, *gk)?);
    }

    let mut rows = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let prob = RegularizedProblem::new(op.clone(), g.clone(), 0.0, alpha, pen.clone())?;
        let u = solve_diagonal(&prob)?.u;
        rows.push(PinvSweepRow { alpha, error: u.checked_sub(&pinv)?.norm2() });
    }

    let mut failures = Vec::new();
    for w in rows.windows(2) {
        if w[1].error > w[0].error + MONOTONE_SLACK {
            failures.push(format!(
                "error increased from {:e} at alpha={:e} to {:e} at alpha={:e}",
                w[0].error, w[0].alpha, w[1].error, w[1].alpha
            ));
        }
    }
    let last = rows.last().expect("nonempty grid");
    if last.alpha < activation && last.error > FINAL_ERROR_TOL {
        failures.push(format!("final error {:e} exceeds {FINAL_ERROR_TOL:e}", last.error));
    }
    if p == 0.0 {
        for r in rows.iter().filter(|r| r.alpha < activation && r.error != 0.0) {
            failures.push(format!("p = 0 error {:e} at alpha={:e} below pass-through threshold", r.error, r.alpha));
        }
    }
    Ok(PinvSweep { p, rows, activation_alpha: activation, assertion_failures: failures })
}
