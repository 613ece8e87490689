//! Source conditions `w sgn(u+) |u+|^{p-1} = K* theta` (`1 <= p <= 2`) and
//! the constant `rho = p ||theta|| / 2` entering the rate estimates.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::operators::{DiagonalOperator, ForwardOperator, LinearOperator};
use crate::penalty::WeightedPenalty;
use crate::seqspace::{norm2, sgn, TruncatedSequence, WeightSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct SourceCertificate {
    pub theta: Vec<f64>,
    /// Sup-norm misfit `||K* theta - xi||_inf`.
    pub residual: f64,
    pub rho: f64,
    /// Whether `residual <= 1e-8 (1 + ||xi||_inf)`.
    pub holds: bool,
}

/// `xi_k = w_k sgn(u+_k) |u+_k|^{p-1}` with `sgn(0) = 0`.
pub fn source_element(pen: &WeightedPenalty, u_plus: &TruncatedSequence) -> Result<Vec<f64>> {
    let p = pen.p();
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("source condition needs 1 <= p <= 2, got {p}")));
    }
    let w = pen.weights();
    check_dim(w.len(), u_plus.len())?;
    Ok(u_plus
        .iter()
        .zip(w.as_slice())
        .map(|(u, wk)| if *u == 0.0 { 0.0 } else { wk * sgn(*u) * u.abs().powf(p - 1.0) })
        .collect())
}

fn certificate(k: &ForwardOperator, xi: &[f64], theta: Vec<f64>, p: f64) -> Result<SourceCertificate> {
    let kt = k.adjoint_apply(&theta)?;
    let residual = kt.iter().zip(xi).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let xi_inf = xi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let rho = norm2(&theta) * p / 2.0;
    Ok(SourceCertificate { theta, residual, rho, holds: residual <= 1e-8 * (1.0 + xi_inf) })
}

/// Least-squares `theta` minimizing `||K* theta - xi||`, minimum-norm among
/// minimizers.
pub fn verify_source(
    k: &ForwardOperator,
    u_plus: &TruncatedSequence,
    pen: &WeightedPenalty,
) -> Result<SourceCertificate> {
    check_dim(k.input_dim(), u_plus.len())?;
    let xi = source_element(pen, u_plus)?;
    let theta = match k {
        ForwardOperator::Diagonal(d) => {
            d.singular_values().iter().zip(&xi).map(|(s, x)| if *s > 0.0 { x / s } else { 0.0 }).collect()
        }
        other => {
            let a: DMatrix<f64> = other.to_dense().matrix().transpose();
            let svd = a.svd(true, true);
            let smax = svd.singular_values.max();
            let eps = 1e-12 * smax.max(f64::MIN_POSITIVE);
            let sol = svd
                .solve(&DVector::from_column_slice(&xi), eps)
                .map_err(|e| Error::InvalidParameter(format!("least squares failed: {e}")))?;
            sol.iter().copied().collect()
        }
    };
    certificate(k, &xi, theta, pen.p())
}

/// Builds `u+` with the given support, signs and magnitudes together with an
/// exact source certificate `theta_k = xi_k / sigma_k` for a diagonal `K`.
pub fn construct_sourced_instance(
    k: &DiagonalOperator,
    support: &[usize],
    signs: &[f64],
    magnitudes: &[f64],
    pen: &WeightedPenalty,
) -> Result<(TruncatedSequence, SourceCertificate)> {
    let n = k.input_dim();
    check_dim(support.len(), signs.len())?;
    check_dim(support.len(), magnitudes.len())?;
    let sigma = k.singular_values();
    let mut u = vec![0.0; n];
    for ((&idx, &s), &m) in support.iter().zip(signs).zip(magnitudes) {
        if idx >= n {
            return Err(Error::InvalidParameter(format!("support index {idx} out of range")));
        }
        if sigma[idx] <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "support index {idx} has sigma = 0; the source condition cannot hold there"
            )));
        }
        if s != 1.0 && s != -1.0 {
            return Err(Error::InvalidParameter(format!("sign must be +-1, got {s}")));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("magnitude must be > 0, got {m}")));
        }
        u[idx] = s * m;
    }
    let u_plus = TruncatedSequence::from_vec_unchecked(u);
    let cert = verify_source(&ForwardOperator::Diagonal(k.clone()), &u_plus, pen)?;
    debug_assert!(cert.residual == 0.0);
    Ok((u_plus, cert))
}

/// Partial sum `sum_k v_k w_k^q |u+_k|^{q(p-1)}` over the truncation.
pub fn lp_membership_diagnostic(
    u_plus: &TruncatedSequence,
    pen: &WeightedPenalty,
    q: f64,
    v: &WeightSequence,
) -> Result<f64> {
    let p = pen.p();
    if !(q > 1.0) {
        return Err(Error::InvalidParameter(format!("q must be > 1, got {q}")));
    }
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidParameter(format!("diagnostic needs 1 < p <= 2, got {p}")));
    }
    let w = pen.weights();
    check_dim(w.len(), u_plus.len())?;
    check_dim(v.len(), u_plus.len())?;
    let e = q * (p - 1.0);
    Ok((0..u_plus.len()).filter(|&k| u_plus[k] != 0.0).map(|k| v[k] * w[k].powf(q) * u_plus[k].abs().powf(e)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::DenseOperator;

    fn pen(p: f64, n: usize) -> WeightedPenalty {
        WeightedPenalty::new(p, WeightSequence::uniform(n, 1.0).unwrap()).unwrap()
    }

    fn seq(v: &[f64]) -> TruncatedSequence {
        TruncatedSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn diagonal_full_rank_is_exact() {
        let d = DiagonalOperator::new(vec![2.0, 0.5, 0.25]).unwrap();
        let up = seq(&[1.0, -3.0, 0.0]);
        let w = WeightSequence::new(vec![1.0, 2.0, 1.5]).unwrap();
        let pen2 = WeightedPenalty::new(2.0, w.clone()).unwrap();
        let c = verify_source(&d.clone().into(), &up, &pen2).unwrap();
        assert_eq!(c.residual, 0.0);
        assert!(c.holds);
        for k in 0..3 {
            let expect = w[k] * up[k] / d.singular_values()[k];
            assert!((c.theta[k] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_singular_value_on_support_fails() {
        let d = DiagonalOperator::new(vec![0.0, 1.0]).unwrap();
        let up = seq(&[0.7, 0.0]);
        let c = verify_source(&d.into(), &up, &pen(2.0, 2)).unwrap();
        assert!((c.residual - 0.7).abs() < 1e-15);
        assert!(!c.holds);
    }

    #[test]
    fn zero_u_plus_is_trivially_sourced() {
        let k: ForwardOperator = DenseOperator::gaussian(3, 5, 1).into();
        let c = verify_source(&k, &TruncatedSequence::zeros(5), &pen(1.0, 5)).unwrap();
        assert_eq!(c.residual, 0.0);
        assert_eq!(c.rho, 0.0);
        assert!(c.theta.iter().all(|t| *t == 0.0));
    }

    #[test]
    fn dense_least_squares() {
        // K has full column rank, so K* is onto and every xi is reachable
        let k: ForwardOperator = DenseOperator::gaussian(8, 4, 3).into();
        let up = seq(&[1.0, 0.0, -2.0, 0.5]);
        let c = verify_source(&k, &up, &pen(1.5, 4)).unwrap();
        assert!(c.holds, "residual {}", c.residual);
        // underdetermined the other way: K* is 8x3, generic xi unreachable
        let k: ForwardOperator = DenseOperator::gaussian(3, 8, 3).into();
        let up = seq(&[1.0, 0.0, -2.0, 0.5, 0.1, 0.0, 3.0, 1.0]);
        let c = verify_source(&k, &up, &pen(1.5, 8)).unwrap();
        assert!(!c.holds);
    }

    #[test]
    fn rejects_p_below_one() {
        let k: ForwardOperator = DenseOperator::identity(2).into();
        assert!(verify_source(&k, &seq(&[1.0, 0.0]), &pen(0.5, 2)).is_err());
    }

    #[test]
    fn construct_examples() {
        let d = DiagonalOperator::new(vec![2.0, 1.0]).unwrap();
        let (up, c) = construct_sourced_instance(&d, &[0], &[1.0], &[1.0], &pen(1.0, 2)).unwrap();
        assert_eq!(up, seq(&[1.0, 0.0]));
        assert_eq!(c.theta, vec![0.5, 0.0]);
        assert_eq!(c.rho, 0.25);
        assert_eq!(c.residual, 0.0);

        // p = 2: xi = w sgn(u) |u| = (1, 0), theta = (0.5, 0), rho = p ||theta|| / 2
        let (_, c2) = construct_sourced_instance(&d, &[0], &[1.0], &[1.0], &pen(2.0, 2)).unwrap();
        assert_eq!(c2.theta, vec![0.5, 0.0]);
        assert_eq!(c2.rho, 0.5);

        let (u0, c0) = construct_sourced_instance(&d, &[], &[], &[], &pen(1.0, 2)).unwrap();
        assert_eq!(u0, TruncatedSequence::zeros(2));
        assert_eq!(c0.theta, vec![0.0, 0.0]);
    }

    #[test]
    fn construct_rejects_dead_support() {
        let d = DiagonalOperator::new(vec![1.0, 0.0]).unwrap();
        assert!(construct_sourced_instance(&d, &[1], &[1.0], &[1.0], &pen(1.0, 2)).is_err());
        let d = DiagonalOperator::new(vec![1.0, 1.0]).unwrap();
        assert!(construct_sourced_instance(&d, &[0], &[0.5], &[1.0], &pen(1.0, 2)).is_err());
        assert!(construct_sourced_instance(&d, &[0], &[1.0], &[0.0], &pen(1.0, 2)).is_err());
    }

    #[test]
    fn membership_diagnostic() {
        let n = 30;
        let up = TruncatedSequence::new((0..n).map(|k| 0.5f64.powi(k as i32)).collect()).unwrap();
        let ones = WeightSequence::uniform(n, 1.0).unwrap();
        let got = lp_membership_diagnostic(&up, &pen(2.0, n), 2.0, &ones).unwrap();
        let expect = (1.0 - 0.25f64.powi(n as i32)) / (1.0 - 0.25);
        assert!((got - expect).abs() < 1e-14);
        assert_eq!(lp_membership_diagnostic(&TruncatedSequence::zeros(n), &pen(1.5, n), 3.0, &ones).unwrap(), 0.0);
        assert!(lp_membership_diagnostic(&up, &pen(1.0, n), 2.0, &ones).is_err());
        assert!(lp_membership_diagnostic(&up, &pen(1.5, n), 1.0, &ones).is_err());
    }
}
