use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::csv::fmt_num;
use super::rate::sphere_noise;
use crate::error::{Error, Result};
use crate::operators::build_dense_net;
use crate::seqspace::{dot, norm2};

pub const UNIT_DISTANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedRow {
    pub delta: f64,
    /// `tau delta`.
    pub eps: f64,
    /// Index of the alternative column `h_l`, `l != 0`.
    pub l: usize,
    /// Least-squares coefficient `<g^delta, h_l>`.
    pub d: f64,
    /// `||d h_l - g^delta||`.
    pub residual: f64,
    /// `||d e_l - e_0||`.
    pub distance: f64,
    /// `||h_l - g^delta||`, the residual of the unit coefficient.
    pub unit_residual: f64,
    /// `||e_l - e_0||`.
    pub unit_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedDemo {
    pub l_net: usize,
    pub tau: f64,
    pub rows: Vec<ConstrainedRow>,
    pub assertion_failures: Vec<String>,
}

impl ConstrainedDemo {
    pub fn passed(&self) -> bool {
        self.assertion_failures.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,eps,l,d,residual,distance,unit_residual,unit_distance\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                fmt_num(r.delta),
                fmt_num(r.eps),
                r.l,
                fmt_num(r.d),
                fmt_num(r.residual),
                fmt_num(r.distance),
                fmt_num(r.unit_residual),
                fmt_num(r.unit_distance)
            );
        }
        let _ = writeln!(s, "# L {}", self.l_net);
        let _ = writeln!(s, "# tau {}", fmt_num(self.tau));
        let _ = writeln!(s, "# checks_ok {}", self.passed());
        s
    }
}

/// With `g+ = h_0` and `u+ = e_0`, finds for every noise level a 1-sparse
/// `u = d e_l` (`l != 0`) that is feasible for the constraint
/// `||K u - g^delta|| <= tau delta` and reports its distance to `u+`.
pub fn run_constrained_nonconvergence_demo(
    m: usize,
    l_net: usize,
    tau: f64,
    delta_grid: &[f64],
    seed: u64,
) -> Result<ConstrainedDemo> {
    if !(tau > 1.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be > 1, got {tau}")));
    }
    if l_net < 2 {
        return Err(Error::InvalidParameter("the net needs at least two columns".into()));
    }
    if delta_grid.is_empty() || delta_grid.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidParameter("delta grid must be nonempty and positive".into()));
    }
    let net = build_dense_net(m, l_net, seed)?;
    let h0 = net.column(0).to_vec();

    let mut rows = Vec::with_capacity(delta_grid.len());
    for (i, &delta) in delta_grid.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let e = sphere_noise(m, delta, &mut rng);
        let g: Vec<f64> = h0.iter().zip(&e).map(|(a, b)| a + b).collect();
        let eps = tau * delta;
        let dist_to = |k: usize| -> f64 {
            let diff: Vec<f64> = net.column(k).iter().zip(&g).map(|(a, b)| a - b).collect();
            norm2(&diff)
        };
        let (l, unit_residual) = (1..net.num_columns()).map(|k| (k, dist_to(k))).fold((0, f64::INFINITY), |best, c| {
            if c.1 < best.1 {
                c
            } else {
                best
            }
        });
        if unit_residual > eps {
            return Err(Error::NetTooCoarse(format!(
                "no column other than h_0 within eps = {eps:e} of g^delta at delta = {delta:e} \
                 (closest is {unit_residual:e}); increase L"
            )));
        }
        let h = net.column(l);
        let d = dot(&g, h);
        let res: Vec<f64> = h.iter().zip(&g).map(|(a, b)| d * a - b).collect();
        rows.push(ConstrainedRow {
            delta,
            eps,
            l,
            d,
            residual: norm2(&res),
            distance: (d * d + 1.0).sqrt(),
            unit_residual,
            unit_distance: 2f64.sqrt(),
        });
    }

    let mut failures = Vec::new();
    for r in &rows {
        if r.residual > r.eps {
            failures.push(format!("least-squares coefficient infeasible at delta={:e}", r.delta));
        }
        if !(r.distance >= 1.0) {
            failures.push(format!("distance {:e} < 1 at delta={:e}", r.distance, r.delta));
        }
        if (r.unit_distance - 2f64.sqrt()).abs() > UNIT_DISTANCE_TOL {
            failures.push(format!("unit distance {:e} differs from sqrt 2 at delta={:e}", r.unit_distance, r.delta));
        }
    }
    Ok(ConstrainedDemo { l_net, tau, rows, assertion_failures: failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_stays_away_from_zero() {
        let grid = [1e-1, 1e-2, 1e-3, 1e-4];
        let demo = run_constrained_nonconvergence_demo(2, 131_072, 1.5, &grid, 0).unwrap();
        assert!(demo.passed(), "{:?}", demo.assertion_failures);
        for r in &demo.rows {
            assert_ne!(r.l, 0);
            assert!(r.unit_residual <= r.eps && r.residual <= r.unit_residual);
            assert!((r.distance - 2f64.sqrt()).abs() < 2.0 * r.delta);
        }
    }

    #[test]
    fn coarse_net_is_reported() {
        let err = run_constrained_nonconvergence_demo(2, 16, 1.5, &[1e-1, 1e-4], 0).unwrap_err();
        assert!(matches!(err, Error::NetTooCoarse(_)));
    }

    #[test]
    fn validation() {
        assert!(run_constrained_nonconvergence_demo(2, 64, 1.0, &[0.1], 0).is_err());
        assert!(run_constrained_nonconvergence_demo(2, 1, 1.5, &[0.1], 0).is_err());
        assert!(run_constrained_nonconvergence_demo(2, 64, 1.5, &[], 0).is_err());
        assert!(run_constrained_nonconvergence_demo(2, 64, 1.5, &[-0.1], 0).is_err());
    }
}
