//! Scalar generalized thresholding `H^p_alpha(x) = argmin_y (y - x)^2 + alpha |y|^p`
//! for `0 <= p <= 2`, the auxiliary map `G^p_alpha` and a brute-force grid
//! oracle.

use crate::error::{Error, Result};
use crate::roots::{safeguarded_newton, Bracket};

/// Minimum number of grid points accepted by [`oracle_threshold`].
pub const ORACLE_MIN_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    p: f64,
    alpha: f64,
}

impl ThresholdSpec {
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p must lie in [0, 2], got {p}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(Self { p, alpha })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The scalar objective `(y - x)^2 + alpha |y|^p`, with `|y|^0 = sgn(|y|)`.
    pub fn objective(&self, x: f64, y: f64) -> f64 {
        let pen = if y == 0.0 {
            0.0
        } else if self.p == 0.0 {
            1.0
        } else {
            y.abs().powf(self.p)
        };
        (y - x) * (y - x) + self.alpha * pen
    }

    /// Stationary point of `G` on `y > 0` for `0 < p < 1`.
    fn y_crit(&self) -> f64 {
        let p = self.p;
        (self.alpha * p * (1.0 - p) / 2.0).powf(1.0 / (2.0 - p))
    }

    /// `G` and `G'` on `y > 0`.
    fn g_and_slope(&self, y: f64) -> (f64, f64) {
        let c = self.alpha * self.p / 2.0;
        let g = y + c * y.powf(self.p - 1.0);
        let dg = 1.0 + c * (self.p - 1.0) * y.powf(self.p - 2.0);
        (g, dg)
    }
}

/// `G^p_alpha(y) = y + (alpha p / 2) sgn(y) |y|^{p-1}`.
pub fn g_map(spec: &ThresholdSpec, y: f64) -> Result<f64> {
    let p = spec.p;
    if p == 0.0 {
        return Err(Error::InvalidParameter("G is defined for p > 0 only".into()));
    }
    if y == 0.0 {
        return if p < 1.0 { Err(Error::MultivaluedPoint { p }) } else { Ok(0.0) };
    }
    Ok(y.signum() * spec.g_and_slope(y.abs()).0)
}

/// Jump location `alpha_eff` of `H^p_alpha` for `0 <= p < 1`.
pub fn effective_threshold(spec: &ThresholdSpec) -> Result<f64> {
    let p = spec.p;
    if p >= 1.0 {
        return Err(Error::InvalidParameter(format!("effective threshold exists for p < 1 only, got {p}")));
    }
    if p == 0.0 {
        return Ok(spec.alpha.sqrt());
    }
    Ok((2.0 - p) / (2.0 - 2.0 * p) * (spec.alpha * (1.0 - p)).powf(1.0 / (2.0 - p)))
}

/// Global minimizer of `y -> (y - x)^2 + alpha |y|^p`.
///
/// At the jump `|x| = alpha_eff` (only for `p < 1`) the value 0 is returned.
pub fn threshold(spec: &ThresholdSpec, x: f64) -> f64 {
    let p = spec.p;
    let ax = x.abs();
    if ax == 0.0 {
        return 0.0;
    }
    let magnitude = if p == 0.0 {
        if ax <= spec.alpha.sqrt() {
            0.0
        } else {
            ax
        }
    } else if p == 1.0 {
        (ax - spec.alpha / 2.0).max(0.0)
    } else if p < 1.0 {
        let jump = effective_threshold(spec).expect("p < 1");
        if ax <= jump {
            0.0
        } else {
            invert_g(spec, ax, spec.y_crit())
        }
    } else {
        invert_g(spec, ax, 0.0)
    };
    if x < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Solves `G(y) = target` on `[lo, target]`, where `G` is increasing.
fn invert_g(spec: &ThresholdSpec, target: f64, lo: f64) -> f64 {
    let tol = 1e-12 * (1.0 + target);
    // for p slightly above 1 the root can lie below the smallest subnormal
    if lo == 0.0 && spec.g_and_slope(f64::from_bits(1)).0 >= target {
        return 0.0;
    }
    // exact for p = 2, a good start for p near 2
    let c = spec.alpha * spec.p / 2.0;
    let guess = (target / (1.0 + c * target.powf(spec.p - 2.0))).clamp(lo, target);
    safeguarded_newton(
        |y| {
            let (g, dg) = spec.g_and_slope(y);
            (g - target, dg)
        },
        Bracket { lo, hi: target },
        guess,
        tol,
    )
}

/// Grid spacing of the oracle grid.
pub fn oracle_grid_spacing(grid_halfwidth: f64, grid_points: usize) -> f64 {
    2.0 * grid_halfwidth / (grid_points as f64 - 1.0)
}

/// Brute-force minimizer of the scalar objective over a uniform grid on
/// `[-grid_halfwidth, grid_halfwidth]` with 0 always included. Ties go to the
/// candidate of smaller magnitude.
pub fn oracle_threshold(spec: &ThresholdSpec, x: f64, grid_halfwidth: f64, grid_points: usize) -> Result<f64> {
    if grid_points < ORACLE_MIN_POINTS {
        return Err(Error::InvalidParameter(format!(
            "oracle needs at least {ORACLE_MIN_POINTS} grid points, got {grid_points}"
        )));
    }
    if !(grid_halfwidth >= 2.0 * x.abs() + 1.0) {
        return Err(Error::InvalidParameter(format!("grid half-width {grid_halfwidth} must be >= 2|x| + 1")));
    }
    let h = oracle_grid_spacing(grid_halfwidth, grid_points);
    let mut best_y: f64 = 0.0;
    let mut best_v = spec.objective(x, 0.0);
    for i in 0..grid_points {
        let y = -grid_halfwidth + h * i as f64;
        let v = spec.objective(x, y);
        if v < best_v || (v == best_v && y.abs() < best_y.abs()) {
            best_v = v;
            best_y = y;
        }
    }
    Ok(best_y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: f64, alpha: f64) -> ThresholdSpec {
        ThresholdSpec::new(p, alpha).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(ThresholdSpec::new(2.5, 1.0).is_err());
        assert!(ThresholdSpec::new(-0.1, 1.0).is_err());
        assert!(ThresholdSpec::new(1.0, 0.0).is_err());
        assert!(ThresholdSpec::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn g_map_examples() {
        assert_eq!(g_map(&spec(2.0, 1.0), 3.0).unwrap(), 6.0);
        assert_eq!(g_map(&spec(1.0, 2.0), -5.0).unwrap(), -6.0);
        assert_eq!(g_map(&spec(1.5, 2.0), 1.0).unwrap(), 2.5);
        assert_eq!(g_map(&spec(0.5, 1.0), 0.0), Err(Error::MultivaluedPoint { p: 0.5 }));
        assert!(g_map(&spec(0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn threshold_closed_forms() {
        assert_eq!(threshold(&spec(1.0, 2.0), 3.0), 2.0);
        assert_eq!(threshold(&spec(1.0, 2.0), -0.5), 0.0);
        assert_eq!(threshold(&spec(0.0, 4.0), 1.9), 0.0);
        assert_eq!(threshold(&spec(0.0, 4.0), 2.1), 2.1);
        assert_eq!(threshold(&spec(0.0, 4.0), 2.0), 0.0);
    }

    #[test]
    fn threshold_inverts_g_for_p2() {
        assert!((threshold(&spec(2.0, 1.0), 6.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_at_jump_is_zero() {
        let s = spec(0.5, 1.0);
        let jump = effective_threshold(&s).unwrap();
        assert_eq!(threshold(&s, jump), 0.0);
        assert!(threshold(&s, jump * (1.0 + 1e-9)) > 0.0);
    }

    #[test]
    fn threshold_p_half_matches_oracle() {
        let s = spec(0.5, 1.0);
        let h = threshold(&s, 2.0);
        let o = oracle_threshold(&s, 2.0, 5.0, 200_001).unwrap();
        assert!((h - o).abs() <= 2.0 * oracle_grid_spacing(5.0, 200_001), "{h} vs {o}");
        // larger root of G(y) = 2
        assert!((g_map(&s, h).unwrap() - 2.0).abs() < 1e-11);
        assert!(h > s.y_crit());
    }

    #[test]
    fn effective_threshold_examples() {
        assert_eq!(effective_threshold(&spec(0.0, 9.0)).unwrap(), 3.0);
        let e = effective_threshold(&spec(0.5, 1.0)).unwrap();
        assert!((e - 1.5 * 0.5_f64.powf(2.0 / 3.0)).abs() < 1e-15);
        assert!((e - 0.94494).abs() < 1e-5);
        let near0 = effective_threshold(&spec(1e-6, 1.0)).unwrap();
        assert!((near0 - 1.0).abs() < 1e-5);
        assert!(effective_threshold(&spec(1.0, 1.0)).is_err());
    }

    #[test]
    fn effective_threshold_locates_oracle_jump() {
        let s = spec(0.5, 1.0);
        let e = effective_threshold(&s).unwrap();
        let below = oracle_threshold(&s, e - 1e-3, 4.0, 100_001).unwrap();
        let above = oracle_threshold(&s, e + 1e-3, 4.0, 100_001).unwrap();
        assert_eq!(below, 0.0);
        assert!(above > 0.4);
    }

    #[test]
    fn oracle_examples() {
        let hw = 7.0;
        let n = 100_001;
        let h = oracle_grid_spacing(hw, n);
        assert!((oracle_threshold(&spec(1.0, 2.0), 3.0, hw, n).unwrap() - 2.0).abs() <= h);
        let hw5 = 11.0;
        let o = oracle_threshold(&spec(0.0, 4.0), 5.0, hw5, n).unwrap();
        assert!((o - 5.0).abs() <= oracle_grid_spacing(hw5, n));
        for p in [0.0, 0.5, 1.0, 1.5, 2.0] {
            assert_eq!(oracle_threshold(&spec(p, 1.3), 0.0, 1.0, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn oracle_preconditions() {
        assert!(oracle_threshold(&spec(1.0, 1.0), 1.0, 3.0, 1000).is_err());
        assert!(oracle_threshold(&spec(1.0, 1.0), 3.0, 3.0, 100_001).is_err());
    }

    #[test]
    fn near_one_exponent_is_accurate() {
        let s = spec(1.01, 3.0);
        for x in [1e-8, 1e-3, 0.5, 1.49, 1.6, 40.0] {
            let y = threshold(&s, x);
            assert!(y >= 0.0 && y <= x);
            if y > 0.0 {
                assert!((g_map(&s, y).unwrap() - x).abs() <= 1e-10 * (1.0 + x), "x = {x}");
            }
        }
    }
}
