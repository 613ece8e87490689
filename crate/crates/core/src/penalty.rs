//! Weighted penalties, their subgradients and the distances used to turn
//! Bregman-distance estimates into norm estimates.

use crate::error::{check_dim, Error, Result};
use crate::operators::{restricted_smallest_singular_value, DenseOperator, LinearOperator};
use crate::seqspace::{dot, sgn, support_count, weighted_p_norm_power, TruncatedSequence, WeightSequence};

/// Slack allowed by [`check_p_inequality`].
pub const P_INEQUALITY_SLACK: f64 = 1e-12;

/// `sum_k w_k |u_k|^p` for `0 <= p <= 2` (`p = 0` counts nonzeros).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPenalty {
    p: f64,
    w: WeightSequence,
}

impl WeightedPenalty {
    pub fn new(p: f64, w: WeightSequence) -> Result<Self> {
        if !(0.0..=2.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p must lie in [0, 2], got {p}")));
        }
        Ok(Self { p, w })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.w
    }

    pub fn value(&self, u: &TruncatedSequence) -> Result<f64> {
        if self.p == 0.0 {
            support_count(u, &self.w)
        } else {
            weighted_p_norm_power(u, &self.w, self.p)
        }
    }
}

/// `kappa = p (p - 1) / (2 (C + L)^{2 - p})`.
pub fn kappa(p: f64, c: f64, l: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidParameter(format!("kappa needs 1 < p <= 2, got {p}")));
    }
    if !(c > 0.0 && l > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa needs C, L > 0, got C={c}, L={l}")));
    }
    Ok(p * (p - 1.0) / (2.0 * (c + l).powf(2.0 - p)))
}

/// Checks `|t|^p - |s|^p >= p sgn(s) |s|^{p-1} (t - s) + kappa |t - s|^2`
/// up to a slack of `1e-12`, for `|s| <= C` and `|t - s| <= L`.
pub fn check_p_inequality(p: f64, c: f64, l: f64, s: f64, t: f64) -> Result<bool> {
    let kap = kappa(p, c, l)?;
    if s.abs() > c {
        return Err(Error::InvalidParameter(format!("|s| = {} exceeds C = {c}", s.abs())));
    }
    if (t - s).abs() > l {
        return Err(Error::InvalidParameter(format!("|t - s| = {} exceeds L = {l}", (t - s).abs())));
    }
    let lhs = t.abs().powf(p) - s.abs().powf(p);
    let d = t - s;
    let rhs = p * sgn(s) * s.abs().powf(p - 1.0) * d + kap * d * d;
    Ok(lhs - rhs >= -P_INEQUALITY_SLACK)
}

/// Component-wise `w p sgn(u) |u|^{p-1}` for `1 <= p <= 2`, taking
/// `sgn(0) = 0` as the selection at zeros when `p = 1`.
pub fn subgradient_element(pen: &WeightedPenalty, u: &TruncatedSequence) -> Result<TruncatedSequence> {
    let p = pen.p;
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("subgradient needs 1 <= p <= 2, got {p}")));
    }
    check_dim(pen.w.len(), u.len())?;
    let out = u
        .iter()
        .zip(pen.w.as_slice())
        .map(|(uk, wk)| if *uk == 0.0 { 0.0 } else { wk * p * sgn(*uk) * uk.abs().powf(p - 1.0) })
        .collect();
    Ok(TruncatedSequence::from_vec_unchecked(out))
}

/// Bregman distance `J(u) - J(u+) - <xi, u - u+>` of the penalty `J` with
/// `xi = subgradient_element(u+)`, for `1 <= p <= 2`.
pub fn bregman_distance(pen: &WeightedPenalty, u: &TruncatedSequence, u_plus: &TruncatedSequence) -> Result<f64> {
    if pen.p == 1.0 {
        return bregman_r(pen, u, u_plus);
    }
    let xi = subgradient_element(pen, u_plus)?;
    let diff = u.checked_sub(u_plus)?;
    Ok(pen.value(u)? - pen.value(u_plus)? - dot(xi.as_slice(), diff.as_slice()))
}

/// `R(u) = sum w_k |u_k| - sum w_k |u+_k| - sum w_k sgn(u+_k) (u_k - u+_k)`.
///
/// Evaluated as `sum w_k (|u_k| - sgn(u+_k) u_k)`, which is the same sum
/// with every term non-negative.
pub fn bregman_r(pen: &WeightedPenalty, u: &TruncatedSequence, u_plus: &TruncatedSequence) -> Result<f64> {
    if pen.p != 1.0 {
        return Err(Error::InvalidParameter(format!("R is defined for p = 1, got {}", pen.p)));
    }
    check_dim(u.len(), u_plus.len())?;
    check_dim(pen.w.len(), u.len())?;
    Ok(u.iter().zip(u_plus.iter()).zip(pen.w.as_slice()).map(|((uk, pk), wk)| wk * (uk.abs() - sgn(*pk) * uk)).sum())
}

/// `T(u) = ||K (u - u+)||^2`.
pub fn taylor_t<K: LinearOperator + ?Sized>(k: &K, u: &TruncatedSequence, u_plus: &TruncatedSequence) -> Result<f64> {
    let d = u.checked_sub(u_plus)?;
    let kd = k.apply(&d)?;
    Ok(dot(&kd, &kd))
}

/// Constants of the estimate `R(u) + T(u) >= lambda ||u - u+||_1^2` on the
/// ball `||u - u+||_1 <= M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanTaylorConstants {
    /// `c~` in `c~ ||P_I v||_1^2 <= ||K P_I v||^2`.
    pub c_tilde: f64,
    pub lambda: f64,
    /// 1-norm radius `M`.
    pub m_radius: f64,
    pub k_norm: f64,
    pub w0: f64,
    /// Support `I` of `u+`.
    pub support: Vec<usize>,
}

/// Certified `lambda = 1 / max(2 / c~, (M / w0) (2 ||K||^2 / c~ + 1))` with
/// `c~ = s_min(K_I)^2 / |I|`.
pub fn bregman_taylor_lambda(
    k: &DenseOperator,
    u_plus: &TruncatedSequence,
    w: &WeightSequence,
    m_radius: f64,
) -> Result<BregmanTaylorConstants> {
    check_dim(k.input_dim(), u_plus.len())?;
    check_dim(w.len(), u_plus.len())?;
    if !(m_radius > 0.0 && m_radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("M must be > 0, got {m_radius}")));
    }
    let support = u_plus.support();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let smin = restricted_smallest_singular_value(k, &support)?;
    let c_tilde = smin * smin / support.len() as f64;
    let k_norm = k.operator_norm();
    let w0 = w.w0();
    let denom = (2.0 / c_tilde).max(m_radius / w0 * (2.0 * k_norm * k_norm / c_tilde + 1.0));
    Ok(BregmanTaylorConstants { c_tilde, lambda: 1.0 / denom, m_radius, k_norm, w0, support })
}
