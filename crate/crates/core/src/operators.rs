//! Forward operators acting on truncated coefficient sequences.
//!
//! Three concrete forms are supported: a general dense matrix, a diagonal
//! (singular-value) model, and a net of unit columns used to build an
//! operator for which the `p = 0` functional has no minimizer.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::seqspace::{dot, norm2, TruncatedSequence};

/// Relative rank threshold for restricted injectivity checks.
pub const FBI_RANK_TOL: f64 = 1e-10;

/// Common interface of the forward operators `K`.
pub trait LinearOperator {
    /// Dimension `N` of the coefficient space.
    fn input_dim(&self) -> usize;
    /// Dimension `M` of the data space.
    fn output_dim(&self) -> usize;
    /// `Ku`.
    fn apply(&self, u: &TruncatedSequence) -> Result<Vec<f64>>;
    /// `K* r`.
    fn adjoint_apply(&self, r: &[f64]) -> Result<TruncatedSequence>;
    /// Largest singular value `||K||`.
    fn operator_norm(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidParameter("operator must be at least 1x1".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("operator has non-finite entries".into()));
        }
        Ok(Self { matrix })
    }

    /// Builds an `m x n` operator from row-major entries.
    pub fn from_rows(m: usize, n: usize, row_major: &[f64]) -> Result<Self> {
        check_dim(m * n, row_major.len())?;
        Self::new(DMatrix::from_row_slice(m, n, row_major))
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n) }
    }

    /// i.i.d. `N(0, 1/m)` entries from a seeded stream.
    pub fn gaussian(m: usize, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (m as f64).sqrt();
        let matrix = DMatrix::from_fn(m, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn restricted(&self, index_set: &[usize]) -> Result<DMatrix<f64>> {
        if index_set.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        let n = self.matrix.ncols();
        if let Some(&k) = index_set.iter().find(|&&k| k >= n) {
            return Err(Error::InvalidParameter(format!("index {k} out of range [0, {n})")));
        }
        Ok(self.matrix.select_columns(index_set))
    }
}

impl LinearOperator for DenseOperator {
    fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, u: &TruncatedSequence) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), u.len())?;
        let (m, n) = self.matrix.shape();
        let mut out = vec![0.0; m];
        for j in 0..n {
            let uj = u[j];
            if uj == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.matrix.column(j).iter()) {
                *o += a * uj;
            }
        }
        Ok(out)
    }

    fn adjoint_apply(&self, r: &[f64]) -> Result<TruncatedSequence> {
        check_dim(self.output_dim(), r.len())?;
        let out = (0..self.matrix.ncols()).map(|j| dot(self.matrix.column(j).as_slice(), r)).collect();
        Ok(TruncatedSequence::from_vec_unchecked(out))
    }

    fn operator_norm(&self) -> f64 {
        self.matrix.singular_values().max()
    }
}

impl From<&DiagonalOperator> for DenseOperator {
    fn from(d: &DiagonalOperator) -> Self {
        Self { matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&d.sigma)) }
    }
}

/// `(Ku)_k = sigma_k u_k`, data identified with coefficients in the
/// singular basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    sigma: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(singular_values: Vec<f64>) -> Result<Self> {
        if singular_values.is_empty() {
            return Err(Error::InvalidParameter("need at least one singular value".into()));
        }
        if singular_values.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidParameter("singular values must be finite and >= 0".into()));
        }
        if !singular_values.iter().any(|s| *s > 0.0) {
            return Err(Error::InvalidParameter("at least one singular value must be > 0".into()));
        }
        Ok(Self { sigma: singular_values })
    }

    /// `sigma_k = k^{-decay}` for `k = 1..=n`.
    pub fn power_decay(n: usize, decay: f64) -> Result<Self> {
        Self::new((1..=n).map(|k| (k as f64).powf(-decay)).collect())
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    /// `(K^+ g)_k = g_k / sigma_k` where `sigma_k > 0`, else 0.
    pub fn pseudo_inverse_apply(&self, g: &[f64]) -> Result<TruncatedSequence> {
        check_dim(self.sigma.len(), g.len())?;
        let out = self.sigma.iter().zip(g).map(|(s, gk)| if *s > 0.0 { gk / s } else { 0.0 }).collect();
        Ok(TruncatedSequence::from_vec_unchecked(out))
    }
}

impl LinearOperator for DiagonalOperator {
    fn input_dim(&self) -> usize {
        self.sigma.len()
    }

    fn output_dim(&self) -> usize {
        self.sigma.len()
    }

    fn apply(&self, u: &TruncatedSequence) -> Result<Vec<f64>> {
        check_dim(self.sigma.len(), u.len())?;
        Ok(self.sigma.iter().zip(u.iter()).map(|(s, v)| s * v).collect())
    }

    fn adjoint_apply(&self, r: &[f64]) -> Result<TruncatedSequence> {
        check_dim(self.sigma.len(), r.len())?;
        Ok(TruncatedSequence::from_vec_unchecked(self.sigma.iter().zip(r).map(|(s, v)| s * v).collect()))
    }

    fn operator_norm(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NetScheme {
    /// `M = 2`: angles `2 pi k / L`.
    EqualAngles,
    /// `M >= 3`: shifted Kronecker sequence pushed through Box-Muller.
    Kronecker,
}

/// `Ku = sum_k u_k h_k` with unit columns `h_k` covering the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetOperator {
    columns: DMatrix<f64>,
    resolution: f64,
    scheme: NetScheme,
}

impl DenseNetOperator {
    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// Column `h_k` as a slice of length `M`.
    pub fn column(&self, k: usize) -> &[f64] {
        let m = self.columns.nrows();
        &self.columns.as_slice()[k * m..(k + 1) * m]
    }

    pub fn num_columns(&self) -> usize {
        self.columns.ncols()
    }

    /// Estimated covering radius: largest distance from a probe direction
    /// to its nearest column.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Index and Euclidean distance of the column nearest to `v`.
    pub fn nearest_column(&self, v: &[f64]) -> (usize, f64) {
        let l = self.columns.ncols();
        if self.scheme == NetScheme::EqualAngles {
            let step = 2.0 * PI / l as f64;
            let theta = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
            let lo = ((theta / step).floor() as usize) % l;
            let hi = (lo + 1) % l;
            let dl = dist(self.column(lo), v);
            let dh = dist(self.column(hi), v);
            return if dl <= dh { (lo, dl) } else { (hi, dh) };
        }
        (0..l)
            .map(|k| (k, dist(self.column(k), v)))
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl LinearOperator for DenseNetOperator {
    fn input_dim(&self) -> usize {
        self.columns.ncols()
    }

    fn output_dim(&self) -> usize {
        self.columns.nrows()
    }

    fn apply(&self, u: &TruncatedSequence) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), u.len())?;
        let mut out = vec![0.0; self.output_dim()];
        for (k, uk) in u.iter().enumerate() {
            if *uk != 0.0 {
                for (o, h) in out.iter_mut().zip(self.column(k)) {
                    *o += uk * h;
                }
            }
        }
        Ok(out)
    }

    fn adjoint_apply(&self, r: &[f64]) -> Result<TruncatedSequence> {
        check_dim(self.output_dim(), r.len())?;
        Ok(TruncatedSequence::from_vec_unchecked((0..self.input_dim()).map(|k| dot(self.column(k), r)).collect()))
    }

    fn operator_norm(&self) -> f64 {
        self.columns.singular_values().max()
    }
}

/// Builds `L` unit columns in `R^M` from a deterministic quasi-uniform
/// scheme. The resolution is estimated from `10 L` seeded probe directions.
///
/// For `M = 2` the columns sit at equal angles `2 pi k / L` (the seed only
/// drives the probes); otherwise they are a seeded shift of the R_d
/// Kronecker sequence mapped to the sphere. Both schemes are prefix-nested
/// for `L` in a geometric progression.
pub fn build_dense_net(m: usize, l: usize, seed: u64) -> Result<DenseNetOperator> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("net dimension M must be >= 2, got {m}")));
    }
    if l < 1 {
        return Err(Error::InvalidParameter("net size L must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (scheme, columns) = if m == 2 {
        let step = 2.0 * PI / l as f64;
        let cols = DMatrix::from_fn(2, l, |i, k| {
            let t = step * k as f64;
            if i == 0 {
                t.cos()
            } else {
                t.sin()
            }
        });
        (NetScheme::EqualAngles, cols)
    } else {
        (NetScheme::Kronecker, kronecker_directions(m, l, &mut rng))
    };
    let mut net = DenseNetOperator { columns, resolution: 0.0, scheme };
    let probes = 10 * l;
    let mut probe = vec![0.0; m];
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        random_unit(&mut rng, &mut probe);
        worst = worst.max(net.nearest_column(&probe).1);
    }
    net.resolution = worst;
    Ok(net)
}

fn random_unit(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    loop {
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let n = norm2(out);
        if n > 1e-12 {
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

fn kronecker_directions(m: usize, l: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let pairs = m.div_ceil(2);
    let d = 2 * pairs;
    // generalized golden ratio: unique positive root of x^{d+1} = x + 1
    let mut phi = 2.0_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alphas: Vec<f64> = (1..=d).map(|j| phi.powi(-(j as i32)).fract()).collect();
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let mut cols = DMatrix::zeros(m, l);
    let mut z = vec![0.0; d];
    for k in 0..l {
        for j in 0..d {
            z[j] = (shift[j] + (k as f64 + 1.0) * alphas[j]).fract();
        }
        let mut g = vec![0.0; d];
        for q in 0..pairs {
            let u1 = 1.0 - z[2 * q];
            let u2 = z[2 * q + 1];
            let r = (-2.0 * u1.ln()).sqrt();
            g[2 * q] = r * (2.0 * PI * u2).cos();
            g[2 * q + 1] = r * (2.0 * PI * u2).sin();
        }
        g.truncate(m);
        let n = norm2(&g);
        let n = if n > 0.0 { n } else { 1.0 };
        for i in 0..m {
            cols[(i, k)] = g[i] / n;
        }
        if norm2(cols.column(k).as_slice()) == 0.0 {
            cols[(0, k)] = 1.0;
        }
    }
    cols
}

/// Whether the columns of `K` indexed by `index_set` are linearly
/// independent (smallest singular value > 1e-10 times the largest).
pub fn fbi_check(k: &DenseOperator, index_set: &[usize]) -> Result<bool> {
    let sub = k.restricted(index_set)?;
    let mut dedup = index_set.to_vec();
    dedup.sort_unstable();
    dedup.dedup();
    if dedup.len() != index_set.len() || index_set.len() > k.output_dim() {
        return Ok(false);
    }
    let sv = sub.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    Ok(hi > 0.0 && lo > FBI_RANK_TOL * hi)
}

/// Smallest singular value of the column-restricted matrix, the square root
/// of the injectivity constant `c` in `c ||P_I u||^2 <= ||K P_I u||^2`.
pub fn restricted_smallest_singular_value(k: &DenseOperator, index_set: &[usize]) -> Result<f64> {
    if !fbi_check(k, index_set)? {
        return Err(Error::FbiViolation { indices: index_set.to_vec() });
    }
    Ok(k.restricted(index_set)?.singular_values().min())
}

/// A forward operator in any of the supported forms.
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardOperator {
    Dense(DenseOperator),
    Diagonal(DiagonalOperator),
    DenseNet(DenseNetOperator),
}

impl ForwardOperator {
    fn inner(&self) -> &dyn LinearOperator {
        match self {
            ForwardOperator::Dense(k) => k,
            ForwardOperator::Diagonal(k) => k,
            ForwardOperator::DenseNet(k) => k,
        }
    }

    pub fn as_diagonal(&self) -> Option<&DiagonalOperator> {
        match self {
            ForwardOperator::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    /// Dense matrix form, materializing diagonal and net operators.
    pub fn to_dense(&self) -> DenseOperator {
        match self {
            ForwardOperator::Dense(k) => k.clone(),
            ForwardOperator::Diagonal(d) => d.into(),
            ForwardOperator::DenseNet(n) => DenseOperator { matrix: n.columns.clone() },
        }
    }

    /// Serializes to the plain-text matrix format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self {
            ForwardOperator::Diagonal(d) => {
                let _ = writeln!(s, "diag {}", d.sigma.len());
                let vals: Vec<String> = d.sigma.iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(s, "{}", vals.join(" "));
            }
            other => {
                let dense = other.to_dense();
                let (m, n) = dense.matrix.shape();
                let _ = writeln!(s, "{m} {n}");
                for i in 0..m {
                    let row: Vec<String> = (0..n).map(|j| format!("{:?}", dense.matrix[(i, j)])).collect();
                    let _ = writeln!(s, "{}", row.join(" "));
                }
            }
        }
        s
    }

    /// Parses the plain-text matrix format: a header `M N` followed by `M`
    /// rows of `N` numbers, or `diag N` followed by `N` numbers.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty operator file".into() })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let parse_usize = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse { line: hline, msg: format!("bad dimension '{s}': {e}") })
        };
        let mut values = Vec::new();
        for (line, l) in lines {
            for tok in l.split_whitespace() {
                let v =
                    tok.parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("bad number '{tok}': {e}") })?;
                values.push(v);
            }
        }
        match head.as_slice() {
            ["diag", n] => {
                let n = parse_usize(n)?;
                if values.len() != n {
                    return Err(Error::Parse {
                        line: hline,
                        msg: format!("expected {n} diagonal values, found {}", values.len()),
                    });
                }
                Ok(ForwardOperator::Diagonal(DiagonalOperator::new(values)?))
            }
            [m, n] => {
                let (m, n) = (parse_usize(m)?, parse_usize(n)?);
                if values.len() != m * n {
                    return Err(Error::Parse {
                        line: hline,
                        msg: format!("expected {} matrix entries, found {}", m * n, values.len()),
                    });
                }
                Ok(ForwardOperator::Dense(DenseOperator::from_rows(m, n, &values)?))
            }
            _ => Err(Error::Parse { line: hline, msg: format!("header must be 'M N' or 'diag N', got '{header}'") }),
        }
    }
}

impl LinearOperator for ForwardOperator {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }
    fn output_dim(&self) -> usize {
        self.inner().output_dim()
    }
    fn apply(&self, u: &TruncatedSequence) -> Result<Vec<f64>> {
        self.inner().apply(u)
    }
    fn adjoint_apply(&self, r: &[f64]) -> Result<TruncatedSequence> {
        self.inner().adjoint_apply(r)
    }
    fn operator_norm(&self) -> f64 {
        self.inner().operator_norm()
    }
}

impl From<DenseOperator> for ForwardOperator {
    fn from(k: DenseOperator) -> Self {
        ForwardOperator::Dense(k)
    }
}

impl From<DiagonalOperator> for ForwardOperator {
    fn from(k: DiagonalOperator) -> Self {
        ForwardOperator::Diagonal(k)
    }
}

impl From<DenseNetOperator> for ForwardOperator {
    fn from(k: DenseNetOperator) -> Self {
        ForwardOperator::DenseNet(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> TruncatedSequence {
        TruncatedSequence::new(v.to_vec()).unwrap()
    }

    fn upper() -> DenseOperator {
        DenseOperator::from_rows(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn apply_examples() {
        let d = DiagonalOperator::new(vec![2.0, 3.0]).unwrap();
        assert_eq!(d.apply(&seq(&[1.0, 1.0])).unwrap(), vec![2.0, 3.0]);
        let id = DenseOperator::identity(2);
        assert_eq!(id.apply(&seq(&[5.0, -1.0])).unwrap(), vec![5.0, -1.0]);
        assert_eq!(upper().apply(&seq(&[1.0, 2.0])).unwrap(), vec![3.0, 2.0]);
        assert!(upper().apply(&seq(&[1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let d = DiagonalOperator::new(vec![2.0, 3.0]).unwrap();
        assert_eq!(d.adjoint_apply(&[1.0, 1.0]).unwrap(), seq(&[2.0, 3.0]));
        assert_eq!(DenseOperator::identity(2).adjoint_apply(&[4.0, 4.0]).unwrap(), seq(&[4.0, 4.0]));
        assert_eq!(upper().adjoint_apply(&[1.0, 0.0]).unwrap(), seq(&[1.0, 1.0]));
        assert!(upper().adjoint_apply(&[1.0]).is_err());
    }

    #[test]
    fn operator_norm_examples() {
        let d = DiagonalOperator::new(vec![0.5, 2.0, 1.0]).unwrap();
        assert_eq!(d.operator_norm(), 2.0);
        assert!((DenseOperator::identity(7).operator_norm() - 1.0).abs() < 1e-12);
        let k = DenseOperator::from_rows(2, 2, &[3.0, 0.0, 0.0, 4.0]).unwrap();
        assert!((k.operator_norm() - 4.0).abs() < 1e-8 * 4.0);
    }

    #[test]
    fn pseudo_inverse_examples() {
        let d = DiagonalOperator::new(vec![2.0, 0.0]).unwrap();
        assert_eq!(d.pseudo_inverse_apply(&[4.0, 7.0]).unwrap(), seq(&[2.0, 0.0]));
        let id = DiagonalOperator::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(id.pseudo_inverse_apply(&[0.3, -8.0]).unwrap(), seq(&[0.3, -8.0]));
        let d = DiagonalOperator::new(vec![0.1, 0.01]).unwrap();
        let x = d.pseudo_inverse_apply(&[1.0, 1.0]).unwrap();
        assert!((x[0] - 10.0).abs() < 1e-12 && (x[1] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_validation() {
        assert!(DiagonalOperator::new(vec![0.0, 0.0]).is_err());
        assert!(DiagonalOperator::new(vec![1.0, -1.0]).is_err());
        assert!(DiagonalOperator::new(vec![]).is_err());
    }

    #[test]
    fn fbi_examples() {
        assert!(fbi_check(&DenseOperator::identity(4), &[0, 3]).unwrap());
        let twin = DenseOperator::from_rows(2, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(!fbi_check(&twin, &[0, 1]).unwrap());
        let d: DenseOperator = (&DiagonalOperator::new(vec![1.0, 0.0]).unwrap()).into();
        assert!(!fbi_check(&d, &[1]).unwrap());
        assert_eq!(fbi_check(&d, &[]), Err(Error::EmptyIndexSet));
        assert!(fbi_check(&d, &[5]).is_err());
    }

    #[test]
    fn restricted_sv_examples() {
        let id = DenseOperator::identity(5);
        assert!((restricted_smallest_singular_value(&id, &[1, 2, 4]).unwrap() - 1.0).abs() < 1e-12);
        let d: DenseOperator = (&DiagonalOperator::new(vec![2.0, 3.0]).unwrap()).into();
        assert!((restricted_smallest_singular_value(&d, &[0]).unwrap() - 2.0).abs() < 1e-12);
        // singular values of [[1,1],[0,1]] are the roots of s^4 - 3 s^2 + 1
        let oracle = ((3.0 - 5.0_f64.sqrt()) / 2.0).sqrt();
        let got = restricted_smallest_singular_value(&upper(), &[0, 1]).unwrap();
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
        assert!((got - 0.618).abs() < 1e-3);
        let d: DenseOperator = (&DiagonalOperator::new(vec![1.0, 0.0]).unwrap()).into();
        assert!(matches!(restricted_smallest_singular_value(&d, &[1]), Err(Error::FbiViolation { .. })));
    }

    #[test]
    fn dense_net_four_points() {
        let net = build_dense_net(2, 4, 0).unwrap();
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (k, (c, s)) in expect.iter().enumerate() {
            let h = net.column(k);
            assert!((h[0] - c).abs() < 1e-15 && (h[1] - s).abs() < 1e-15);
        }
        // worst probe sits pi/4 from both neighbours: chord 2 sin(pi/8)
        let exact = 2.0 * (PI / 8.0).sin();
        assert!(net.resolution() <= exact + 1e-12);
        assert!(net.resolution() > exact - 0.05, "{}", net.resolution());
    }

    #[test]
    fn dense_net_single_column() {
        let net = build_dense_net(3, 1, 9).unwrap();
        assert!(net.resolution() > 1.9 && net.resolution() <= 2.0);
    }

    #[test]
    fn dense_net_columns_unit() {
        for (m, l) in [(2, 17), (3, 50), (5, 40)] {
            let net = build_dense_net(m, l, 3).unwrap();
            for k in 0..l {
                assert!((norm2(net.column(k)) - 1.0).abs() < 1e-12);
            }
        }
        assert!(build_dense_net(1, 4, 0).is_err());
        assert!(build_dense_net(2, 0, 0).is_err());
    }

    #[test]
    fn dense_net_resolution_shrinks() {
        let coarse = build_dense_net(3, 20, 1).unwrap().resolution();
        let fine = build_dense_net(3, 400, 1).unwrap().resolution();
        assert!(fine < coarse, "{fine} !< {coarse}");
    }

    #[test]
    fn nearest_column_equal_angles_matches_brute_force() {
        let net = build_dense_net(2, 37, 0).unwrap();
        for i in 0..200 {
            let t = 0.031 * i as f64;
            let v = [t.cos(), t.sin()];
            let (_, d) = net.nearest_column(&v);
            let brute = (0..37).map(|k| dist(net.column(k), &v)).fold(f64::INFINITY, f64::min);
            assert!((d - brute).abs() < 1e-14);
        }
    }

    #[test]
    fn text_format_round_trip() {
        let dense: ForwardOperator = upper().into();
        assert_eq!(dense.to_text(), "2 2\n1.0 1.0\n0.0 1.0\n");
        assert_eq!(ForwardOperator::parse_text(&dense.to_text()).unwrap(), dense);
        let diag: ForwardOperator = DiagonalOperator::new(vec![0.1, 2.0]).unwrap().into();
        assert_eq!(diag.to_text(), "diag 2\n0.1 2.0\n");
        assert_eq!(ForwardOperator::parse_text(&diag.to_text()).unwrap(), diag);
    }

    #[test]
    fn text_format_errors() {
        assert!(matches!(ForwardOperator::parse_text(""), Err(Error::Parse { .. })));
        assert!(matches!(ForwardOperator::parse_text("2 2\n1 2\n3"), Err(Error::Parse { .. })));
        assert!(matches!(ForwardOperator::parse_text("diag 2\n1 x"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ForwardOperator::parse_text("what is this"), Err(Error::Parse { .. })));
    }
}
