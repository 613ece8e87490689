//! Finite truncations of square-summable sequences, positive weight
//! sequences and the weighted sums built from them.

use std::ops::{Index, Sub};

use crate::error::{check_dim, Error, Result};

/// Finite prefix `(u_0, ..., u_{N-1})` of a real sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSequence(Vec<f64>);

impl TruncatedSequence {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("sequence must have length >= 1".into()));
        }
        if let Some(k) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("entry {k} is not finite")));
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "sequence length must be >= 1");
        Self(vec![0.0; n])
    }

    /// Canonical unit vector `e_k` of length `n`.
    pub fn unit(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Self(v)
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| c * v).collect())
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Indices `k` with `u_k != 0`, compared exactly.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, _)| k).collect()
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }
}

impl Index<usize> for TruncatedSequence {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl Sub for &TruncatedSequence {
    type Output = TruncatedSequence;

    /// Panics on length mismatch; use [`TruncatedSequence::checked_sub`] otherwise.
    fn sub(self, rhs: &TruncatedSequence) -> TruncatedSequence {
        self.checked_sub(rhs).expect("length mismatch in sequence subtraction")
    }
}

impl AsRef<[f64]> for TruncatedSequence {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Weights `w_k >= w0 > 0` of the penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    weights: Vec<f64>,
    w0: f64,
}

impl WeightSequence {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("weights must have length >= 1".into()));
        }
        if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weight {k} = {} is not a positive finite number",
                weights[k]
            )));
        }
        let w0 = weights.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { weights, w0 })
    }

    pub fn uniform(n: usize, w: f64) -> Result<Self> {
        Self::new(vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Lower bound `w0 = min_k w_k`.
    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn max(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

impl Index<usize> for WeightSequence {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.weights[k]
    }
}

/// Usual sign with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sum_k w_k |u_k|^p`, the p-th power of the weighted quasi-norm.
pub fn weighted_p_norm_power(u: &TruncatedSequence, w: &WeightSequence, p: f64) -> Result<f64> {
    check_dim(w.len(), u.len())?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be > 0, got {p}")));
    }
    Ok(u.iter().zip(w.as_slice()).map(|(uk, wk)| if *uk == 0.0 { 0.0 } else { wk * uk.abs().powf(p) }).sum())
}

/// Weighted count of nonzero entries, the `p = 0` penalty.
pub fn support_count(u: &TruncatedSequence, w: &WeightSequence) -> Result<f64> {
    check_dim(w.len(), u.len())?;
    Ok(u.iter().zip(w.as_slice()).filter(|(uk, _)| **uk != 0.0).map(|(_, wk)| wk).sum())
}

/// Whether `s` belongs to the multivalued sign `Sgn(x)`.
pub fn multivalued_sign_contains(x: f64, s: f64) -> bool {
    if x > 0.0 {
        s == 1.0
    } else if x < 0.0 {
        s == -1.0
    } else {
        (-1.0..=1.0).contains(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> TruncatedSequence {
        TruncatedSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn p_norm_power_examples() {
        let ones2 = WeightSequence::uniform(2, 1.0).unwrap();
        assert_eq!(weighted_p_norm_power(&seq(&[1.0, -2.0]), &ones2, 1.0).unwrap(), 3.0);
        let w3 = WeightSequence::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(weighted_p_norm_power(&TruncatedSequence::zeros(3), &w3, 1.5).unwrap(), 0.0);
        let w = WeightSequence::new(vec![2.0, 1.0]).unwrap();
        assert_eq!(weighted_p_norm_power(&seq(&[3.0, 4.0]), &w, 2.0).unwrap(), 34.0);
    }

    #[test]
    fn p_norm_power_errors() {
        let w = WeightSequence::uniform(3, 1.0).unwrap();
        assert!(matches!(
            weighted_p_norm_power(&seq(&[1.0, 2.0]), &w, 1.0),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(weighted_p_norm_power(&seq(&[1.0, 2.0, 3.0]), &w, 0.0).is_err());
    }

    #[test]
    fn support_count_examples() {
        let ones4 = WeightSequence::uniform(4, 1.0).unwrap();
        assert_eq!(support_count(&seq(&[0.0, 5.0, 0.0, -1.0]), &ones4).unwrap(), 2.0);
        assert_eq!(support_count(&TruncatedSequence::zeros(4), &ones4).unwrap(), 0.0);
        let w = WeightSequence::new(vec![2.0, 3.0]).unwrap();
        assert_eq!(support_count(&seq(&[1.0, 1.0]), &w).unwrap(), 5.0);
        assert!(support_count(&seq(&[1.0]), &w).is_err());
    }

    #[test]
    fn multivalued_sign() {
        assert!(multivalued_sign_contains(0.0, 0.3));
        assert!(multivalued_sign_contains(2.0, 1.0));
        assert!(!multivalued_sign_contains(-1.0, 0.5));
        assert!(multivalued_sign_contains(-1.0, -1.0));
        assert!(!multivalued_sign_contains(0.0, 1.5));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(TruncatedSequence::new(vec![]).is_err());
        assert!(TruncatedSequence::new(vec![1.0, f64::NAN]).is_err());
        assert!(WeightSequence::new(vec![1.0, 0.0]).is_err());
        assert!(WeightSequence::new(vec![1.0, -2.0]).is_err());
        let w = WeightSequence::new(vec![3.0, 0.5, 2.0]).unwrap();
        assert_eq!(w.w0(), 0.5);
    }
}
