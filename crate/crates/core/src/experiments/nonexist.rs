use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::csv::fmt_num;
use crate::error::{Error, Result};
use crate::operators::{build_dense_net, DenseNetOperator};
use crate::seqspace::{dot, norm2};

/// `g` counts as parallel to a column when `1 - <g/|g|, h>^2` is below this.
const PARALLEL_TOL: f64 = 1e-14;
const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct NonexistenceRow {
    pub l: usize,
    pub resolution: f64,
    /// Smallest value of the `p = 0` functional over 1-sparse `u`.
    pub m: f64,
    /// `m - alpha`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonexistenceDemo {
    pub alpha: f64,
    pub g: Vec<f64>,
    pub rows: Vec<NonexistenceRow>,
    pub assertion_failures: Vec<String>,
}

impl NonexistenceDemo {
    pub fn passed(&self) -> bool {
        self.assertion_failures.is_empty()
    }

    /// `||g||^2`, the value at `u = 0`.
    pub fn zero_sparse_value(&self) -> f64 {
        let n = norm2(&self.g);
        n * n
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("L,resolution,m,gap\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.l, fmt_num(r.resolution), fmt_num(r.m), fmt_num(r.gap));
        }
        let _ = writeln!(s, "# alpha {}", fmt_num(self.alpha));
        let _ = writeln!(s, "# zero_sparse_value {}", fmt_num(self.zero_sparse_value()));
        let _ = writeln!(s, "# multi_sparse_lower_bound {}", fmt_num(2.0 * self.alpha));
        let _ = writeln!(s, "# checks_ok {}", self.passed());
        s
    }
}

fn max_cos_sq(net: &DenseNetOperator, unit_g: &[f64]) -> f64 {
    (0..net.num_columns()).map(|k| dot(net.column(k), unit_g).powi(2)).fold(0.0, f64::max)
}

fn validate(m: usize, net_sizes: &[usize], alpha: f64) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("M must be >= 2, got {m}")));
    }
    if net_sizes.is_empty() || net_sizes.windows(2).any(|w| w[1] <= w[0]) || net_sizes[0] < 1 {
        return Err(Error::InvalidParameter("net sizes must be positive and strictly increasing".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    Ok(())
}

/// Draws `g` with `||g|| = g_norm` from `g_seed`, redrawing while it is
/// parallel to a column of any of the nets, then runs the demo.
pub fn run_nonexistence_demo(
    m: usize,
    net_sizes: &[usize],
    alpha: f64,
    g_norm: f64,
    g_seed: u64,
) -> Result<NonexistenceDemo> {
    validate(m, net_sizes, alpha)?;
    if !(g_norm * g_norm > alpha) {
        return Err(Error::Precondition(format!(
            "need ||g||^2 > alpha (got {} <= {alpha}); otherwise u = 0 is a minimizer",
            g_norm * g_norm
        )));
    }
    let nets: Vec<DenseNetOperator> =
        net_sizes.iter().map(|&l| build_dense_net(m, l, g_seed)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(g_seed);
    for _ in 0..MAX_REDRAWS {
        let raw: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm2(&raw);
        if n == 0.0 {
            continue;
        }
        let unit: Vec<f64> = raw.iter().map(|v| v / n).collect();
        if nets.iter().all(|net| 1.0 - max_cos_sq(net, &unit) > PARALLEL_TOL) {
            let g = unit.iter().map(|v| v * g_norm).collect();
            return demo_on_nets(&nets, alpha, g);
        }
    }
    Err(Error::Precondition("could not draw g off the net columns".into()))
}

/// Same as [`run_nonexistence_demo`] with a caller-supplied `g`, which must
/// satisfy `||g||^2 > alpha` and not be parallel to any column.
pub fn run_nonexistence_demo_with_data(
    net_sizes: &[usize],
    alpha: f64,
    g: &[f64],
    net_seed: u64,
) -> Result<NonexistenceDemo> {
    validate(g.len(), net_sizes, alpha)?;
    let n = norm2(g);
    if !(n * n > alpha) {
        return Err(Error::Precondition(format!(
            "need ||g||^2 > alpha (got {} <= {alpha}); otherwise u = 0 is a minimizer",
            n * n
        )));
    }
    let nets: Vec<DenseNetOperator> =
        net_sizes.iter().map(|&l| build_dense_net(g.len(), l, net_seed)).collect::<Result<_>>()?;
    demo_on_nets(&nets, alpha, g.to_vec())
}

fn demo_on_nets(nets: &[DenseNetOperator], alpha: f64, g: Vec<f64>) -> Result<NonexistenceDemo> {
    let gn = norm2(&g);
    let g2 = gn * gn;
    let unit: Vec<f64> = g.iter().map(|v| v / gn).collect();
    let mut rows = Vec::with_capacity(nets.len());
    for net in nets {
        let sin_sq = 1.0 - max_cos_sq(net, &unit);
        if sin_sq <= PARALLEL_TOL {
            return Err(Error::Precondition(format!(
                "g is parallel to a column of the L = {} net; a 1-sparse minimizer exists",
                net.num_columns()
            )));
        }
        // optimal coefficient d_k = <g, h_k> leaves ||g||^2 (1 - cos^2) + alpha
        let gap = g2 * sin_sq;
        rows.push(NonexistenceRow { l: net.num_columns(), resolution: net.resolution(), m: gap + alpha, gap });
    }

    let mut failures = Vec::new();
    for r in &rows {
        if !(r.gap > 0.0) {
            failures.push(format!("gap {:e} not positive at L={}", r.gap, r.l));
        }
        if !(g2.min(2.0 * alpha) > r.m) {
            failures.push(format!(
                "1-sparse value {:e} at L={} does not beat min(||g||^2, 2 alpha) = {:e}",
                r.m,
                r.l,
                g2.min(2.0 * alpha)
            ));
        }
    }
    for w in rows.windows(2) {
        if w[1].gap > w[0].gap {
            failures.push(format!("gap grew from {:e} (L={}) to {:e} (L={})", w[0].gap, w[0].l, w[1].gap, w[1].l));
        }
    }
    let last = rows.last().expect("nonempty");
    if !(last.gap < 0.01 * alpha) {
        failures.push(format!("gap {:e} at largest L={} is not below 0.01 alpha", last.gap, last.l));
    }
    Ok(NonexistenceDemo { alpha, g, rows, assertion_failures: failures })
}
